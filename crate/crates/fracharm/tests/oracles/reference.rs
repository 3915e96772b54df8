// Generated by gen_reference.py (mpmath, 300 digits). Do not edit by hand.
pub const GAMMA: &[(f64, f64)] = &[
    (-49.5, 7.3222696892341270352e-64),
    (-20.25, -0.00000000000000000085690326638851274804),
    (-7.3, 0.00041838787301354769898),
    (-2.5, -0.94530872048294188123),
    (-1.5, 2.3632718012073547031),
    (-0.5, -3.5449077018110320546),
    (-0.01, -100.58719796441077919),
    (0.001, 999.42377248459546611),
    (0.1, 9.5135076986687318363),
    (0.25, 3.6256099082219083119),
    (0.5, 1.7724538509055160273),
    (0.75, 1.2254167024651776451),
    (1.5, 0.88622692545275801365),
    (2.3, 1.166711905198160345),
    (3.7, 4.1706517837966031654),
    (7.5, 1871.2543057977883465),
    (10.1, 454760.75144158595087),
    (19.9, 90406140079547899.527),
    (33.3, 7.487577596522706608e+35),
    (50.5, 4.2904629123519598109e+63),
    (77.7, 3.9389196384292678286e+112),
    (101.25, 2.9558374475433668949e+158),
    (140.5, 1.1367323214599711998e+240),
    (169.5, 3.281470451067846378e+303),
];
pub const BETA: &[(f64, f64, f64)] = &[
    (0.25, 0.25, 7.4162987092054876737),
    (0.25, 4.0, 2.625641025641025641),
    (1.3, 2.7, 0.2310517136083305227),
    (3.5, 0.6, 0.72646154128719515549),
    (4.0, 4.0, 0.0071428571428571428571),
    (0.5, 1.75, 1.4377682816827106489),
];
pub const ML: &[(f64, f64, f64, f64)] = &[
    (0.3, 1.0, -5.0, 0.13708086902027063758),
    (0.3, 1.0, -2.0, 0.29023222616787535326),
    (0.3, 1.0, -0.5, 0.63264900594359902138),
    (0.3, 1.0, 0.5, 2.0620157899559994849),
    (0.3, 1.0, 2.0, 79485.907625183497177),
    (0.3, 1.0, 5.0, 2.2491502775547118727e+93),
    (0.7, 1.0, -5.0, 0.077569357764769801692),
    (0.7, 1.0, -2.0, 0.21378672701529726519),
    (0.7, 1.0, -0.5, 0.60514759205956427126),
    (0.7, 1.0, 0.5, 1.8249850568512024534),
    (0.7, 1.0, 2.0, 20.966433131481951425),
    (0.7, 1.0, 5.0, 30419.819802049465094),
    (1.5, 1.0, -5.0, -0.3000820504131308808),
    (1.5, 1.0, -2.0, 0.029430685602826471728),
    (1.5, 1.0, -0.5, 0.66323679487242795678),
    (1.5, 1.0, 0.5, 1.4202702357049505227),
    (1.5, 1.0, 2.0, 3.3487008963183954036),
    (1.5, 1.0, 5.0, 12.457289126443951234),
    (2.5, 1.0, -5.0, -0.30490848635735323909),
    (2.5, 1.0, -2.0, 0.43096547375967247984),
    (2.5, 1.0, -0.5, 0.85162388824386676372),
    (2.5, 1.0, 0.5, 1.1525428128694728303),
    (2.5, 1.0, 2.0, 1.6357100113470297685),
    (2.5, 1.0, 5.0, 2.7219196434120275111),
    (0.5, 0.5, 1.5, 28.545018967941857195),
    (0.8, 2.0, -3.0, 0.30316525650469493137),
    (1.2, 0.3, 4.0, 44.777880832460395281),
];
