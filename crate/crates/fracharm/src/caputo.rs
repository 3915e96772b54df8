//! Left Caputo derivative by Gauss–Jacobi quadrature, extensions below the
//! initial point, and the Mittag-Leffler eigen-residual.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, graded_breaks, jacobi_interval};
use crate::specfun::{gamma, ml_solution_derivative, MLParams};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaputoParams {
    pub alpha: f64,
    pub a: f64,
    pub k: usize,
}

impl CaputoParams {
    pub fn new(alpha: f64, a: f64) -> Result<Self> {
        if !(alpha > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("alpha = {alpha}, a = {a}")));
        }
        let k = if alpha.fract() == 0.0 { alpha as usize } else { alpha.floor() as usize + 1 };
        Ok(CaputoParams { alpha, a, k })
    }

    pub fn is_integer(&self) -> bool {
        self.alpha.fract() == 0.0
    }
}

type ValueFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type DerivFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// A function with a derivative oracle. `left_singularity`, when set, is the
/// exponent b such that the highest derivative used behaves like (t - a)^b near
/// the initial point; the quadrature then grades toward it.
#[derive(Clone)]
pub struct SmoothFn {
    pub value: ValueFn,
    pub deriv: DerivFn,
    pub left_singularity: Option<f64>,
}

impl SmoothFn {
    pub fn new<V, D>(value: V, deriv: D) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        SmoothFn { value: Arc::new(value), deriv: Arc::new(deriv), left_singularity: None }
    }

    pub fn with_left_singularity(mut self, b: f64) -> Self {
        self.left_singularity = Some(b);
        self
    }

    /// (t - a)^p with all its derivatives (zero below a).
    pub fn power(a: f64, p: f64) -> Self {
        SmoothFn::new(
            move |t| if t > a { (t - a).powf(p) } else { 0.0 },
            move |t, j| {
                if t <= a {
                    return 0.0;
                }
                let c = crate::specfun::falling(p, j);
                if c == 0.0 {
                    0.0
                } else {
                    c * (t - a).powf(p - j as f64)
                }
            },
        )
    }

    /// psi(t) = E_{alpha,1}(lambda (t-a)^alpha) with term-wise derivatives.
    pub fn mittag_leffler(p: MLParams) -> Self {
        let k = CaputoParams::new(p.alpha, p.a).map(|c| c.k).unwrap_or(1);
        let f = SmoothFn::new(
            move |t| if t <= p.a { 1.0 } else { ml_solution_derivative(&p, t, 0).unwrap_or(f64::NAN) },
            move |t, j| {
                if t <= p.a {
                    return if j == 0 { 1.0 } else { 0.0 };
                }
                ml_solution_derivative(&p, t, j).unwrap_or(f64::NAN)
            },
        );
        if p.alpha.fract() != 0.0 && p.lambda != 0.0 {
            f.with_left_singularity(p.alpha - k as f64)
        } else {
            f
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn d(&self, t: f64, j: usize) -> f64 {
        if j == 0 {
            (self.value)(t)
        } else {
            (self.deriv)(t, j)
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let (v, d) = (self.value.clone(), self.deriv.clone());
        SmoothFn { value: Arc::new(move |t| c * v(t)), deriv: Arc::new(move |t, j| c * d(t, j)), left_singularity: self.left_singularity }
    }

    pub fn add(&self, o: &SmoothFn) -> Self {
        let (v1, d1, v2, d2) = (self.value.clone(), self.deriv.clone(), o.value.clone(), o.deriv.clone());
        let sing = match (self.left_singularity, o.left_singularity) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        SmoothFn { value: Arc::new(move |t| v1(t) + v2(t)), deriv: Arc::new(move |t, j| d1(t, j) + d2(t, j)), left_singularity: sing }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionMode {
    Constant,
    Polynomial,
}

/// A function on [a, inf) continued below a with vanishing k-th derivative.
#[derive(Clone)]
pub struct ExtendedFn {
    pub base: SmoothFn,
    pub a: f64,
    pub mode: ExtensionMode,
    jet: Vec<f64>,
}

impl ExtendedFn {
    pub fn eval(&self, t: f64) -> f64 {
        self.d(t, 0)
    }

    pub fn d(&self, t: f64, j: usize) -> f64 {
        if t >= self.a {
            return self.base.d(t, j);
        }
        // Taylor polynomial of degree k-1 at a, differentiated j times
        let x = t - self.a;
        let mut out = 0.0;
        let mut mfact = 1.0;
        for (m, c) in self.jet.iter().enumerate() {
            if m > 0 {
                mfact *= m as f64;
            }
            if m >= j {
                out += c / mfact * crate::specfun::falling(m as f64, j) * x.powi((m - j) as i32);
            }
        }
        out
    }

    /// Wrap as a SmoothFn (derivatives continue through a).
    pub fn as_smooth(&self) -> SmoothFn {
        let e1 = self.clone();
        let e2 = self.clone();
        SmoothFn {
            value: Arc::new(move |t| e1.eval(t)),
            deriv: Arc::new(move |t, j| e2.d(t, j)),
            left_singularity: self.base.left_singularity,
        }
    }
}

pub fn extend(u: &SmoothFn, p: &CaputoParams, mode: ExtensionMode) -> Result<ExtendedFn> {
    let jet: Vec<f64> = (0..p.k).map(|m| u.d(p.a, m)).collect();
    if jet.iter().any(|v| !v.is_finite()) {
        return Err(Error::JetMismatch("jet at the initial point is not finite".into()));
    }
    let jet = match mode {
        ExtensionMode::Constant => {
            if let Some((m, v)) = jet.iter().enumerate().skip(1).find(|(_, v)| v.abs() > 1e-12) {
                return Err(Error::JetMismatch(format!("derivative of order {m} at a is {v}, constant extension needs 0")));
            }
            vec![jet[0]]
        }
        ExtensionMode::Polynomial => jet,
    };
    Ok(ExtendedFn { base: u.clone(), a: p.a, mode, jet })
}

/// ∫_lo^t g(τ) (t-τ)^mu dτ where g may carry a (τ-lo)^b singularity at lo.
fn weighted_integral(g: &(dyn Fn(f64) -> f64 + Sync), lo: f64, t: f64, mu: f64, sing: Option<f64>, nodes: usize) -> f64 {
    match sing {
        None => jacobi_interval(g, lo, t, mu, 0.0, nodes),
        Some(b) => {
            let mid = 0.5 * (lo + t);
            let right = jacobi_interval(g, mid, t, mu, 0.0, nodes);
            let k = |tau: f64| g(tau) * (t - tau).powf(mu);
            // stop grading where τ - lo is no longer resolved next to lo
            let floor = 1e-13 * lo.abs().max(mid - lo);
            let levels = ((floor / (mid - lo)).ln() / 0.25f64.ln()).floor().clamp(1.0, 40.0) as usize;
            let breaks = graded_breaks(lo, mid, 0.25, levels);
            let n = (nodes / 3).max(12);
            // first panel: Jacobi weight absorbs the leading power
            let first = jacobi_interval(|tau| k(tau) / (tau - lo).powf(b), breaks[0], breaks[1], 0.0, b, n);
            let gl = gauss_legendre(n);
            let mut left = first;
            for w in breaks[1..].windows(2) {
                let (x0, x1) = (w[0], w[1]);
                let h = 0.5 * (x1 - x0);
                let c = 0.5 * (x1 + x0);
                left += h * gl.integrate(|x| k(c + h * x));
            }
            left + right
        }
    }
}

/// D^alpha_{t,a} u(t).
pub fn caputo_derivative(u: &SmoothFn, p: &CaputoParams, t: f64, nodes: usize) -> Result<f64> {
    caputo_from(u, p, p.a, t, nodes)
}

/// Caputo integral with an explicit lower limit `lo` (lo <= a), used to compare
/// the extended function's derivative from below a with the one from a.
pub fn caputo_from(u: &SmoothFn, p: &CaputoParams, lo: f64, t: f64, nodes: usize) -> Result<f64> {
    if t <= p.a {
        return Err(Error::Domain(format!("t = {t} must exceed a = {}", p.a)));
    }
    if p.is_integer() {
        return Ok(u.d(t, p.k));
    }
    let k = p.k;
    let mu = k as f64 - p.alpha - 1.0;
    let g = |tau: f64| u.d(tau, k);
    let mut v = if lo < p.a {
        // piecewise: [lo, a] is smooth for the extension, [a, t] as usual
        let below = crate::quadrature::gl_uniform(|tau| g(tau) * (t - tau).powf(mu), lo, p.a, 4, nodes.min(64));
        below + weighted_integral(&g, p.a, t, mu, u.left_singularity, nodes)
    } else {
        weighted_integral(&g, p.a, t, mu, u.left_singularity, nodes)
    };
    v /= gamma(k as f64 - p.alpha)?;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckedValue {
    pub value: f64,
    pub doubling_delta: f64,
    pub warning: bool,
}

/// Caputo derivative with the node-doubling precision check.
pub fn caputo_derivative_checked(u: &SmoothFn, p: &CaputoParams, t: f64, nodes: usize) -> Result<CheckedValue> {
    let v1 = caputo_derivative(u, p, t, nodes)?;
    let v2 = caputo_derivative(u, p, t, 2 * nodes)?;
    let delta = (v2 - v1).abs() / v2.abs().max(1e-300);
    Ok(CheckedValue { value: v2, doubling_delta: delta, warning: delta > 1e-8 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResidual {
    pub max_residual: f64,
    pub max_lambda_psi: f64,
    pub initial_jet_error: f64,
    pub quadrature_warning: bool,
}

impl EigenResidual {
    pub fn relative(&self) -> f64 {
        if self.max_lambda_psi == 0.0 {
            self.max_residual
        } else {
            self.max_residual / self.max_lambda_psi
        }
    }
}

/// max |D^alpha psi - lambda psi| over the grid, plus the initial-jet check.
pub fn ml_eigen_residual(p: &MLParams, grid: &[f64], nodes: usize) -> Result<EigenResidual> {
    let cp = CaputoParams::new(p.alpha, p.a)?;
    let psi = SmoothFn::mittag_leffler(*p);
    let rows = crate::par::map_slice(grid, |&t| -> Result<(f64, f64, bool)> {
        let d = caputo_derivative_checked(&psi, &cp, t, nodes)?;
        let lp = p.lambda * psi.eval(t);
        Ok(((d.value - lp).abs(), lp.abs(), d.warning))
    });
    let mut out = EigenResidual { max_residual: 0.0, max_lambda_psi: 0.0, initial_jet_error: 0.0, quadrature_warning: false };
    for r in rows {
        let (res, lp, w) = r?;
        out.max_residual = out.max_residual.max(res);
        out.max_lambda_psi = out.max_lambda_psi.max(lp);
        out.quadrature_warning |= w;
    }
    out.initial_jet_error = (ml_solution_derivative(p, p.a, 0)? - 1.0).abs();
    for m in 1..cp.k {
        out.initial_jet_error = out.initial_jet_error.max(ml_solution_derivative(p, p.a, m)?.abs());
    }
    Ok(out)
}

/// Uniform grid of `n` points on [lo, hi].
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_derivative() {
        let u = SmoothFn::new(|_| 3.0, |_, _| 0.0);
        let p = CaputoParams::new(0.6, 0.0).unwrap();
        assert_eq!(caputo_derivative(&u, &p, 1.3, 32).unwrap(), 0.0);
    }

    #[test]
    fn half_derivative_of_t() {
        let u = SmoothFn::power(0.0, 1.0);
        let p = CaputoParams::new(0.5, 0.0).unwrap();
        let v = caputo_derivative(&u, &p, 1.0, 64).unwrap();
        assert!((v - 1.128_379_167_095_512_6).abs() < 1e-13);
    }

    #[test]
    fn three_halves_of_cube() {
        let u = SmoothFn::power(0.0, 3.0);
        let p = CaputoParams::new(1.5, 0.0).unwrap();
        let v = caputo_derivative(&u, &p, 1.0, 64).unwrap();
        assert!((v - 6.0 / gamma(2.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn integer_order_is_classical() {
        let u = SmoothFn::new(f64::sin, |t, j| match j % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        });
        let p = CaputoParams::new(1.0, 0.0).unwrap();
        assert!((caputo_derivative(&u, &p, 0.8, 8).unwrap() - 0.8f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn exponential_case_residual() {
        let r = ml_eigen_residual(&MLParams::new(1.0, 1.0, 0.0), &grid(0.05, 2.0, 20), 64).unwrap();
        assert!(r.max_residual < 1e-10);
        let r = ml_eigen_residual(&MLParams::new(0.5, 0.0, 0.0), &grid(0.05, 2.0, 5), 64).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn extension_modes() {
        let psi = SmoothFn::mittag_leffler(MLParams::new(0.7, 1.0, 0.0));
        let p = CaputoParams::new(0.7, 0.0).unwrap();
        let e = extend(&psi, &p, ExtensionMode::Constant).unwrap();
        assert_eq!(e.eval(-0.4), 1.0);
        let q = SmoothFn::new(|t| t * t, |t, j| match j {
            1 => 2.0 * t,
            2 => 2.0,
            _ => 0.0,
        });
        let p2 = CaputoParams::new(1.5, 0.0).unwrap();
        let e = extend(&q, &p2, ExtensionMode::Polynomial).unwrap();
        assert_eq!(e.eval(-0.3), 0.0);
        let lin = SmoothFn::new(|t| 1.0 + t, |_, j| if j == 1 { 1.0 } else { 0.0 });
        assert!(extend(&lin, &p2, ExtensionMode::Constant).is_err());
        let e = extend(&lin, &p2, ExtensionMode::Polynomial).unwrap();
        assert!((e.eval(-0.5) - 0.5).abs() < 1e-15);
        assert!((e.d(-0.5, 1) - 1.0).abs() < 1e-15);
    }
}
