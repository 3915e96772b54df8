//! Power-law fits in ε and the boundary and initial-time scaling limits.

use crate::green_ball::{norm, one_minus_sq, solve_dirichlet, BallQuadrature, Field, GreenParams, PointFn};
use crate::quadrature::{jacobi_interval, tanh_sinh};
use crate::specfun::{falling, gamma, mittag_leffler, ml_solution_derivative, MLParams, SeriesControl};
use crate::{par, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// None when every sample is exactly zero.
    pub exponent: Option<f64>,
    pub constant: f64,
    pub r_squared: f64,
    /// (ε, value), ε decreasing.
    pub ladder: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn exact_zero(&self) -> bool {
        self.exponent.is_none()
    }
}

/// Geometric ladder of `count` points from `hi` down to `lo`.
pub fn geometric_ladder(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let r = (lo / hi).powf(1.0 / (count as f64 - 1.0));
    (0..count).map(|k| hi * r.powi(k as i32)).collect()
}

/// Default boundary ladder: 8 points from 1e-1 to 1e-4.
pub fn default_ladder() -> Vec<f64> {
    geometric_ladder(1e-1, 1e-4, 8)
}

/// Least squares of log|v| against log ε.
pub fn power_fit(samples: &[(f64, f64)]) -> Result<FitResult> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!("power_fit needs at least 4 samples, got {}", samples.len())));
    }
    let mut ladder = samples.to_vec();
    ladder.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    if ladder.iter().any(|p| !(p.0 > 0.0)) || ladder.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Fit("ladder must hold distinct positive ε".into()));
    }
    if ladder.iter().all(|p| p.1 == 0.0) {
        return Ok(FitResult { exponent: None, constant: 0.0, r_squared: 1.0, ladder });
    }
    let pos = ladder.iter().all(|p| p.1 > 0.0);
    let neg = ladder.iter().all(|p| p.1 < 0.0);
    if !(pos || neg) {
        return Err(Error::Fit("power_fit: samples change sign or vanish".into()));
    }
    let xs: Vec<f64> = ladder.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = ladder.iter().map(|p| p.1.abs().ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    let sign = if pos { 1.0 } else { -1.0 };
    Ok(FitResult { exponent: Some(slope), constant: sign * icpt.exp(), r_squared, ladder })
}

/// Intercept at ε = 0 of a degree-`deg` least-squares polynomial in x = ε^p
/// through ε^{-e} v(ε).
pub fn extrapolated_constant(samples: &[(f64, f64)], e: f64, p: f64, deg: usize) -> Result<f64> {
    if samples.len() <= deg {
        return Err(Error::Fit("not enough samples for extrapolation".into()));
    }
    let a = DMatrix::from_fn(samples.len(), deg + 1, |i, j| samples[i].0.powf(p * j as f64));
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|(eps, v)| v * eps.powf(-e)));
    let sol = a.svd(true, true).solve(&b, 1e-14).map_err(|m| Error::Fit(m.into()))?;
    Ok(sol[0])
}

/// max |c_i/(-e·ω_i)^s / mean - 1| over the sweep (pairs of -e·ω and fitted constant).
pub fn angular_law_deviation(sweep: &[(f64, f64)], s: f64) -> f64 {
    let norm_c: Vec<f64> = sweep.iter().map(|(d, c)| c / d.powf(s)).collect();
    let mean = norm_c.iter().sum::<f64>() / norm_c.len() as f64;
    norm_c.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryLimit {
    pub fit: FitResult,
    /// Intercept of ε^{-s} u(e+εω) against ε.
    pub limit: f64,
    pub predicted: f64,
}

impl BoundaryLimit {
    pub fn rel_error(&self) -> f64 {
        (self.limit / self.predicted - 1.0).abs()
    }
}

/// ∫_{B₁} f(z)(1-|z|²)^s |z-e|^{-n} dz in polar coordinates around e. Along the
/// chord of direction θ, 1-|z|² = ρ(L-ρ) with L = -2e·θ, so each chord is a
/// Jacobi integral with weight ρ^{s-1}(L-ρ)^s, split at ρ = 0.1.
pub fn boundary_integral(f: &(dyn Fn(&[f64]) -> f64 + Sync), e: &[f64], s: f64) -> Result<f64> {
    let n = e.len();
    if (norm(e) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("boundary point must be a unit vector".into()));
    }
    let chord = |theta: &[f64], rho_lo: f64, rho_hi: f64| -> f64 {
        let l = -2.0 * dot(e, theta);
        let z = |r: f64| -> Vec<f64> { e.iter().zip(theta).map(|(a, b)| a + r * b).collect() };
        let split = 0.1f64.min(0.5 * l).max(rho_lo);
        let hi = rho_hi.min(l);
        let mut v = 0.0;
        if split > rho_lo {
            // weight ρ^{s-1} at the e end
            v += jacobi_interval(|r| f(&z(r)) * (l - r).powf(s), rho_lo, split, 0.0, s - 1.0, 48);
        }
        if hi > split {
            v += jacobi_interval(|r| f(&z(r)) * r.powf(s - 1.0), split, hi, s, 0.0, 64);
        }
        v
    };
    let full = |lo: f64, hi: f64| -> f64 {
        if n == 1 {
            chord(&[-e[0]], lo, hi)
        } else {
            let phi0 = (-e[1]).atan2(-e[0]);
            let h = PI / 2.0;
            tanh_sinh(|t, _, _| chord(&[(phi0 + t).cos(), (phi0 + t).sin()], lo, hi), -h, h, 6)
        }
    };
    let total = full(0.0, f64::INFINITY);
    // the shrinking near-e pieces must decay for the integral to be finite
    let near: Vec<f64> = (1..=4).map(|k| full(0.0, 0.1 * 4f64.powi(-k)).abs()).collect();
    if !total.is_finite() || (near[0] > 0.0 && near[3] / near[0] > 0.5) {
        return Err(Error::Domain("boundary integral diverges: source not Hölder at e".into()));
    }
    Ok(total)
}

/// Fits u(e+εω) for the Green solution and compares with
/// k(n,s)(-2e·ω)^s ∫ f(1-|z|²)^s/(s|z-e|^n).
pub fn green_boundary_limit(
    f: PointFn,
    e: &[f64],
    omega: &[f64],
    gp: &GreenParams,
    q: &BallQuadrature,
    ladder: &[f64],
) -> Result<BoundaryLimit> {
    let eo = dot(e, omega);
    if eo >= 0.0 {
        return Err(Error::Domain("green_boundary_limit needs e·ω < 0".into()));
    }
    let s = gp.s();
    let u = solve_dirichlet(f.clone(), gp, q)?;
    let pts: Vec<Vec<f64>> = ladder.iter().map(|eps| e.iter().zip(omega).map(|(a, b)| a + eps * b).collect()).collect();
    if pts.iter().any(|p| one_minus_sq(p) <= 0.0) {
        return Err(Error::Domain("ladder leaves the ball".into()));
    }
    let vals = par::map(pts.len(), |i| u.eval(&pts[i]));
    let samples: Vec<(f64, f64)> = ladder.iter().copied().zip(vals).collect();
    let fit = power_fit(&samples)?;
    let limit = extrapolated_constant(&samples, s, 1.0, 1)?;
    let integral = boundary_integral(&*f, e, s)?;
    let predicted = gp.knorm * (-2.0 * eo).powf(s) * integral / s;
    Ok(BoundaryLimit { fit, limit, predicted })
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeScaling {
    pub fit: FitResult,
    pub extrapolated_constant: f64,
    pub predicted_exponent: f64,
    pub predicted_constant: f64,
}

/// Ladder suited to the initial-time limits: corrections decay like ε^α, so it
/// reaches far below the boundary ladder.
pub fn time_ladder() -> Vec<f64> {
    geometric_ladder(1e-3, 1e-12, 10)
}

/// ∂^ℓ ψ(0) for ψ(t) = E_{α,1}(t̄_*(t-a)^α), a = -ε/t̄, t̄ = t̄_*^{1/α}.
pub fn ml_time_scaling(alpha: f64, t_bar_star: f64, ell: usize, ladder: &[f64]) -> Result<TimeScaling> {
    if alpha.fract() == 0.0 {
        return Err(Error::Domain("ml_time_scaling needs non-integer α".into()));
    }
    if !(0.5 < t_bar_star && t_bar_star < 1.0) {
        return Err(Error::Domain("t̄_* must lie in (1/2, 1)".into()));
    }
    if ell > 4 {
        return Err(Error::Unsupported("ℓ above 4".into()));
    }
    let t_bar = t_bar_star.powf(1.0 / alpha);
    let mut samples = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let p = MLParams::new(alpha, t_bar_star, -eps / t_bar);
        let v = if ell == 0 {
            // ψ(0) - 1 = z E_{α,α+1}(z), z = t̄_*(-a)^α
            let z = t_bar_star * (eps / t_bar).powf(alpha);
            z * mittag_leffler(alpha, alpha + 1.0, z, &SeriesControl::default())?
        } else {
            ml_solution_derivative(&p, 0.0, ell)?
        };
        samples.push((eps, v));
    }
    let predicted_exponent = alpha - ell as f64;
    let predicted_constant = t_bar.powi(ell as i32) * falling(alpha, ell) / gamma(alpha + 1.0)?;
    let fit = power_fit(&samples)?;
    let deg = (samples.len() / 2).min(6);
    let extrapolated_constant = extrapolated_constant(&samples, predicted_exponent, alpha, deg)?;
    Ok(TimeScaling { fit, extrapolated_constant, predicted_exponent, predicted_constant })
}

/// Polynomial test function (1-u²)^8, u = (X-c)/r, and its derivatives.
#[derive(Debug, Clone, Copy)]
pub struct TestBump {
    pub center: f64,
    pub radius: f64,
}

impl TestBump {
    pub fn deriv(&self, x: f64, j: usize) -> f64 {
        let u = (x - self.center) / self.radius;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        // (1-u²)^8 = Σ_k C(8,k)(-1)^k u^{2k}
        let mut v = 0.0;
        let mut binom = 1.0;
        for k in 0..=8usize {
            let p = 2 * k;
            if p >= j {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                v += sign * binom * falling(p as f64, j) * u.powi((p - j) as i32);
            }
            binom = binom * (8 - k) as f64 / (k + 1) as f64;
        }
        v / self.radius.powi(j as i32)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JetProbe {
    pub fit: FitResult,
    /// ε^{|β|-s}P_β / ε^{-s}P_0 at the smallest ε.
    pub ratio: f64,
    /// (-1)^{|β|}∫(-e·X)₊^s ∂^βχ / ∫(-e·X)₊^s χ.
    pub predicted_ratio: f64,
}

/// Weak pairing P_β(ε) = ∫ ∂^β φ(e+εX) χ(X) dX = (-ε)^{-|β|} ∫ φ(e+εX) ∂^βχ(X) dX (n = 1).
pub fn distributional_jet_probe(phi: &Field, e: f64, s: f64, chi: TestBump, beta: usize, ladder: &[f64]) -> Result<JetProbe> {
    if phi.n != 1 {
        return Err(Error::Unsupported("distributional probe implemented for n = 1".into()));
    }
    if e.abs() != 1.0 {
        return Err(Error::Domain("e must be ±1".into()));
    }
    // φ(e+εX) vanishes once e·X > 0; the kink sits at X = 0
    let (lo, hi) = if e > 0.0 { (chi.center - chi.radius, 0.0f64.min(chi.center + chi.radius)) } else { (0.0f64.max(chi.center - chi.radius), chi.center + chi.radius) };
    if hi <= lo {
        return Err(Error::Domain("test function misses the ball".into()));
    }
    let pair = |eps: f64, j: usize| tanh_sinh(|x, _, _| phi.eval(&[e + eps * x]) * chi.deriv(x, j), lo, hi, 6);
    let sign = if beta % 2 == 0 { 1.0 } else { -1.0 };
    let samples: Vec<(f64, f64)> = ladder.iter().map(|&eps| (eps, sign * eps.powi(-(beta as i32)) * pair(eps, beta))).collect();
    let fit = power_fit(&samples)?;
    let eps_min = ladder.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = sign * eps_min.powi(-(beta as i32)) * pair(eps_min, beta) * eps_min.powf(beta as f64) / pair(eps_min, 0);
    let profile = |j: usize| tanh_sinh(|x, _, _| (-e * x).max(0.0).powf(s) * chi.deriv(x, j), lo, hi, 7);
    let predicted_ratio = sign * profile(beta) / profile(0);
    Ok(JetProbe { fit, ratio, predicted_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = default_ladder().iter().map(|&e| (e, 3.0 * e * e)).collect();
        let f = power_fit(&s).unwrap();
        assert!((f.exponent.unwrap() - 2.0).abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-10);
    }

    #[test]
    fn zero_and_sign_mixing() {
        let z: Vec<(f64, f64)> = default_ladder().iter().map(|&e| (e, 0.0)).collect();
        assert!(power_fit(&z).unwrap().exact_zero());
        let mut m = z.clone();
        m[0].1 = 1.0;
        m[1].1 = -1.0;
        assert!(power_fit(&m).is_err());
    }

    #[test]
    fn bump_derivative_matches_difference() {
        let b = TestBump { center: -1.0, radius: 1.5 };
        let h = 1e-5;
        for &x in &[-2.0, -0.7, 0.3] {
            let fd = (b.deriv(x + h, 1) - b.deriv(x - h, 1)) / (2.0 * h);
            assert!((fd - b.deriv(x, 2)).abs() < 1e-5);
        }
    }
}
