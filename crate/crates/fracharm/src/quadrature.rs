//! Gauss–Jacobi, Gauss–Legendre, composite and tanh-sinh rules.

use crate::specfun::ln_gamma;
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on [-1, 1] for the weight (1-x)^alpha (1+x)^beta.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

type Key = (usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<Rule>>> {
    static C: OnceLock<Mutex<HashMap<Key, Arc<Rule>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// P_n^{(a,b)}(x) and P_{n-1}^{(a,b)}(x) by the three-term recurrence.
pub fn jacobi_p(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * x + a * a - b * b);
        let a3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = (a2 * p1 - a3 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn jacobi_dp(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let (p, _) = jacobi_p(n, a, b, x);
    let (q, _) = jacobi_p(n - 1, a + 1.0, b + 1.0, x);
    (p, 0.5 * (n as f64 + a + b + 1.0) * q)
}

fn golub_welsch_nodes(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let c = 2.0 * kf + a + b;
        j[(k, k)] = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (c * (c + 2.0)) };
        if k + 1 < n {
            let m = kf + 1.0;
            let cm = 2.0 * m + a + b;
            let off = if m == 1.0 {
                (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))).sqrt()
            } else {
                (4.0 * m * (m + a) * (m + b) * (m + a + b) / (cm * cm * (cm + 1.0) * (cm - 1.0))).sqrt()
            };
            j[(k, k + 1)] = off;
            j[(k + 1, k)] = off;
        }
    }
    let mut ev: Vec<f64> = j.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

fn build_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 1 && a > -1.0 && b > -1.0, "invalid Gauss-Jacobi request");
    let mut nodes = golub_welsch_nodes(n, a, b);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = jacobi_dp(n, a, b, *x);
            let dx = p / dp;
            let nx = (*x - dx).clamp(-1.0 + 1e-300, 1.0 - 1e-300);
            *x = nx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
    }
    let nf = n as f64;
    let lc = (a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(nf + a + 1.0).unwrap() + ln_gamma(nf + b + 1.0).unwrap()
        - ln_gamma(nf + a + b + 1.0).unwrap()
        - ln_gamma(nf + 1.0).unwrap();
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, dp) = jacobi_dp(n, a, b, x);
            (lc - ((1.0 - x) * (1.0 + x) * dp * dp).ln()).exp()
        })
        .collect();
    Rule { nodes, weights }
}

/// Cached Gauss–Jacobi rule.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Arc<Rule> {
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let r = Arc::new(build_jacobi(n, alpha, beta));
    cache().lock().unwrap().insert(key, r.clone());
    r
}

pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// ∫_lo^hi f over a sequence of breakpoints with n-point Gauss–Legendre panels.
pub fn gl_panels<F: Fn(f64) -> f64>(f: F, breaks: &[f64], n: usize) -> f64 {
    let r = gauss_legendre(n);
    let mut s = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let h = 0.5 * (hi - lo);
        let c = 0.5 * (hi + lo);
        s += h * r.integrate(|x| f(c + h * x));
    }
    s
}

/// ∫_lo^hi f with uniform panels.
pub fn gl_uniform<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize, n: usize) -> f64 {
    let b: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
    gl_panels(f, &b, n)
}

/// Breakpoints on [lo, hi] refined geometrically toward `lo` (ratio `q`, `levels` panels).
pub fn graded_breaks(lo: f64, hi: f64, q: f64, levels: usize) -> Vec<f64> {
    let d = hi - lo;
    let mut b: Vec<f64> = (0..=levels).map(|k| lo + d * q.powi(k as i32)).collect();
    b.push(lo);
    b.reverse();
    b
}

/// ∫_a^b f(x) (b-x)^alpha (x-a)^beta dx by an n-point Gauss–Jacobi rule.
pub fn jacobi_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let r = gauss_jacobi(n, alpha, beta);
    let h = 0.5 * (b - a);
    let scale = h.powf(1.0 + alpha + beta);
    scale * r.integrate(|x| f(a + h * (1.0 + x)))
}

/// Tanh-sinh rule on (a, b). The integrand receives (x, x-a, b-x) with the
/// endpoint distances computed without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, level: u32) -> f64 {
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let tmax = 4.5;
    let kmax = (tmax / h) as i64;
    let mut s = 0.0;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = pi2 * t.sinh();
        let cu = u.cosh();
        let w = pi2 * t.cosh() / (cu * cu);
        // 1 - tanh(u) = 2 / (1 + exp(2u))
        let dr = half * 2.0 / (1.0 + (2.0 * u).exp());
        let dl = half * 2.0 / (1.0 + (-2.0 * u).exp());
        if dl <= 0.0 || dr <= 0.0 || w * half < 1e-300 {
            continue;
        }
        let x = if dl < dr { a + dl } else { b - dr };
        s += w * f(x, dl, dr);
    }
    s * h * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::beta_value;

    #[test]
    fn legendre_exact_on_polynomials() {
        let r = gauss_legendre(10);
        let v = r.integrate(|x| x.powi(18) + 3.0 * x.powi(4));
        assert!((v - (2.0 / 19.0 + 6.0 / 5.0)).abs() < 1e-14);
    }

    #[test]
    fn jacobi_weight_mass() {
        for &(a, b) in &[(-0.5, -0.5), (0.3, -0.7), (2.5, 0.0), (-0.9, 1.5)] {
            let r = gauss_jacobi(40, a, b);
            let mass: f64 = r.weights.iter().sum();
            let expect = 2f64.powf(a + b + 1.0) * beta_value(a + 1.0, b + 1.0).unwrap();
            assert!((mass / expect - 1.0).abs() < 1e-13, "{a} {b} {mass} {expect}");
        }
    }

    #[test]
    fn jacobi_large_rule_is_accurate() {
        let r = gauss_jacobi(400, 0.5, 0.5);
        // ∫ (1-x^2)^{1/2} x^2 dx = pi/8
        let v = r.integrate(|x| x * x);
        assert!((v - std::f64::consts::PI / 8.0).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 ln(x) dx = -1 ; ∫_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(|_, dl, _| dl.ln(), 0.0, 1.0, 6);
        assert!((v + 1.0).abs() < 1e-13);
        let v = tanh_sinh(|_, dl, _| dl.powf(-0.5), 0.0, 1.0, 6);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
