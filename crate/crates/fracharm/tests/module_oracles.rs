//! Closed forms and literature values checked across modules.

use fracharm::caputo::{caputo_derivative, CaputoParams, SmoothFn};
use fracharm::eigen::{first_eigenpair, BasisFamily, EnergyForm, EnergyMethod, RadialBasis};
use fracharm::fractional_laplacian::{frac_laplacian_point, FlOptions, FracOrder};
use fracharm::green_ball::{green_kernel, r0, GreenParams, KernelPath};
use fracharm::quadrature::{gl_panels, graded_breaks};
use fracharm::specfun::gamma;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn caputo_of_shifted_power() {
    // D^α (t-a)^p = Γ(p+1)/Γ(p+1-α) (t-a)^{p-α}
    for &(alpha, p, a, t) in &[(0.3f64, 1.0f64, 0.0, 1.0), (0.7, 2.0, -0.5, 0.8), (1.4, 2.5, 0.2, 1.7), (2.6, 3.0, 0.0, 0.4)] {
        let k = alpha.ceil();
        let u = if p.fract() == 0.0 { SmoothFn::power(a, p) } else { SmoothFn::power(a, p).with_left_singularity(p - k) };
        let cp = CaputoParams::new(alpha, a).unwrap();
        let got = caputo_derivative(&u, &cp, t, 64).unwrap();
        let want = gamma(p + 1.0).unwrap() / gamma(p + 1.0 - alpha).unwrap() * (t - a).powf(p - alpha);
        assert!(rel(got, want) < 1e-11, "alpha={alpha} p={p}: {got} vs {want}");
    }
}

#[test]
fn frac_laplacian_of_torsion_profile() {
    // (-Δ)^s (1-x²)₊^s = Γ(2s+1) on (-1, 1)
    for &s in &[0.3, 0.5, 0.75] {
        let ord = FracOrder::new(s).unwrap();
        let o = FlOptions { support_radius: Some(1.0), ..Default::default() };
        let u = move |x: &[f64]| {
            let a = 1.0 - x[0] * x[0];
            if a > 0.0 { a.powf(s) } else { 0.0 }
        };
        for &x in &[0.0, 0.35, -0.6] {
            let v = frac_laplacian_point(&u, &[x], &ord, &o).unwrap();
            let want = gamma(2.0 * s + 1.0).unwrap();
            assert!(rel(v, want) < 1e-6, "s={s} x={x}: {v} vs {want}");
        }
    }
}

#[test]
fn frac_laplacian_of_gaussian_in_the_plane() {
    // (-Δ)^{1/2} e^{-|x|²} at 0 in R²: ∫ |ξ| e^{-|ξ|²/4} dξ / (4π) = √π
    let ord = FracOrder::new(0.5).unwrap();
    // e^{-64} is below rounding, so treat the Gaussian as supported in B_8
    let o = FlOptions { support_radius: Some(8.0), ..Default::default() };
    let v = frac_laplacian_point(&|x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp(), &[0.0, 0.0], &ord, &o).unwrap();
    assert!(rel(v, PI.sqrt()) < 1e-6, "{v}");
}

#[test]
fn half_order_green_kernel_on_interval() {
    // n = 1, s = 1/2: G(x, y) = arsinh(√r0) / π
    let gp = GreenParams::new(1, 0.5).unwrap();
    for &(x, y) in &[(0.0, 0.5), (-0.7, 0.3), (0.9, 0.95), (0.2, -0.999)] {
        let want = r0(&[x], &[y]).unwrap().sqrt().asinh() / PI;
        for path in [KernelPath::Quadrature, KernelPath::Series] {
            let g = green_kernel(&[x], &[y], &gp, path).unwrap();
            assert!(rel(g, want) < 1e-12, "{x} {y} {path:?}: {g} vs {want}");
        }
    }
}

/// Breakpoints on [lo, hi] graded toward both ends.
fn two_sided(lo: f64, hi: f64) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let mut b = graded_breaks(lo, mid, 0.5, 40);
    b.extend(graded_breaks(0.0, hi - mid, 0.5, 40).iter().rev().skip(1).map(|t| hi - t));
    b
}

#[test]
fn green_integrates_to_torsion_function() {
    // ∫ G(x, y) dy = (1-x²)^s / Γ(2s+1) for n = 1
    for &s in &[0.4, 0.5, 1.0] {
        let gp = GreenParams::new(1, s).unwrap();
        for &x in &[0.1f64, 0.55] {
            let g = |y: f64| green_kernel(&[x], &[y], &gp, KernelPath::Series).unwrap();
            let got = gl_panels(g, &two_sided(-1.0, x), 16) + gl_panels(g, &two_sided(x, 1.0), 16);
            let want = (1.0 - x * x).powf(s) / gamma(2.0 * s + 1.0).unwrap();
            assert!(rel(got, want) < 1e-8, "s={s} x={x}: {} vs {want}", got);
        }
    }
}

#[test]
fn first_eigenvalue_on_interval() {
    // s = 1: π²/4; s = 1/2: 1.1577738836977 (known to 13 digits)
    for &(s, want, tol) in &[(1.0, PI * PI / 4.0, 1e-10), (0.5, 1.157_773_883_697_7, 1e-6)] {
        let mut ef = EnergyForm::new(1, s).unwrap();
        ef.method = EnergyMethod::Exact;
        let ep = first_eigenpair(&ef.assemble(&RadialBasis::new(1, s, 12, BasisFamily::Jacobi)).unwrap()).unwrap();
        assert!(rel(ep.lambda1, want) < tol, "s={s}: {} vs {want}", ep.lambda1);
    }
}
