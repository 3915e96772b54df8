//! Pointwise (-Δ)^s through the δ_h singular integral.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, jacobi_interval, tanh_sinh};
use crate::specfun::{binom_general, gamma};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// s = m + sigma with the stencil half-order h > s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder {
    pub s: f64,
    pub m: usize,
    pub sigma: f64,
    pub h: usize,
}

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_h(s, s.floor() as usize + 1)
    }

    pub fn with_h(s: f64, h: usize) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("order s = {s} must be positive")));
        }
        if (h as f64) <= s {
            return Err(Error::Config(format!("stencil order h = {h} must exceed s = {s}")));
        }
        // sigma in (0,1]: integer s is m = s-1, sigma = 1
        let (m, sigma) = if s.fract() == 0.0 { (s as usize - 1, 1.0) } else { (s.floor() as usize, s.fract()) };
        Ok(FracOrder { s, m, sigma, h })
    }

    /// True when s sits within 1e-6 of an integer without being one.
    pub fn near_integer(&self) -> bool {
        let d = (self.s - self.s.round()).abs();
        d > 0.0 && d < 1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaHStencil {
    pub h: usize,
    /// coefficient of u(x + kY) at index k + h
    pub coeffs: Vec<f64>,
}

impl DeltaHStencil {
    pub fn new(h: usize) -> Self {
        let coeffs = (-(h as i64)..=h as i64)
            .map(|k| {
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                sign * binom_general(2.0 * h as f64, (h as i64 - k) as usize).round()
            })
            .collect();
        DeltaHStencil { h, coeffs }
    }
}

/// Σ_k (-1)^k C(2h, h-k) u(x + kY).
pub fn delta_h(u: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], y: &[f64], st: &DeltaHStencil) -> f64 {
    let mut p = vec![0.0; x.len()];
    let mut s = 0.0;
    for (i, c) in st.coeffs.iter().enumerate() {
        let k = i as f64 - st.h as f64;
        for d in 0..x.len() {
            p[d] = x[d] + k * y[d];
        }
        s += c * u(&p);
    }
    s
}

/// c_{m,s} = 4^s Γ(m/2+s) s / (π^{m/2} Γ(1-s)), the principal-value constant.
pub fn normalizing_constant(m: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("normalizing constant needs 0 < s < 1, got {s}")));
    }
    let mf = m as f64;
    Ok(4f64.powf(s) * gamma(mf / 2.0 + s)? * s / (PI.powf(mf / 2.0) * gamma(1.0 - s)?))
}

/// ∫_R (2 - 2cos y)^h |y|^{-1-2s} dy evaluated by quadrature.
fn symbol_integral_1d(h: usize, s: f64) -> f64 {
    let hf = h as i32;
    let p = 1.0 + 2.0 * s;
    // [0,1]: (4 sin^2(y/2))^h = y^{2h} g(y) with g smooth
    let g = |y: f64| {
        if y == 0.0 {
            1.0
        } else {
            (4.0 * (y / 2.0).sin().powi(2) / (y * y)).powi(hf)
        }
    };
    let near = jacobi_interval(g, 0.0, 1.0, 0.0, 2.0 * h as f64 - p, 40);
    let periods = 400usize;
    let ymax = 2.0 * PI * periods as f64;
    let f = |y: f64| (4.0 * (y / 2.0).sin().powi(2)).powi(hf) * y.powf(-p);
    let gl = gauss_legendre(30);
    let mut mid = 0.0;
    let mut lo = 1.0;
    let step = PI / 2.0;
    while lo < ymax - 1e-9 {
        let hi = (lo + step).min(ymax);
        let half = 0.5 * (hi - lo);
        let c = 0.5 * (hi + lo);
        mid += half * gl.integrate(|x| f(c + half * x));
        lo = hi;
    }
    // tail: mean part plus the leading correction of each cosine mode
    let mean = binom_general(2.0 * h as f64, h).round();
    let mut tail = mean * ymax.powf(-2.0 * s) / (2.0 * s);
    for k in 1..=h {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = 2.0 * sign * binom_general(2.0 * h as f64, h - k).round();
        tail += c * p / (k * k) as f64 * ymax.powf(-p - 1.0);
    }
    2.0 * (near + mid + tail)
}

/// Closed form of the same integral for non-integer s (analytic continuation).
pub fn symbol_integral_closed(h: usize, s: f64) -> Option<f64> {
    if s.fract() == 0.0 {
        return None;
    }
    let i = PI / (2.0 * gamma(1.0 + 2.0 * s).ok()? * (PI * s).sin());
    let mut sum = 0.0;
    for k in 1..=h {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom_general(2.0 * h as f64, h - k).round() * (k as f64).powf(2.0 * s);
    }
    Some(-4.0 * i * sum)
}

fn constant_cache() -> &'static Mutex<HashMap<(usize, u64, usize), f64>> {
    static C: OnceLock<Mutex<HashMap<(usize, u64, usize), f64>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Multiplier C with (-Δ)^s u = C ∫ δ_h u / |Y|^{m+2s} dY, i.e. 1 / symbol(ξ=unit).
pub fn operator_constant(m: usize, ord: &FracOrder) -> Result<f64> {
    if ord.h == 1 {
        return Ok(normalizing_constant(m, ord.s)? / 2.0);
    }
    let key = (m, ord.s.to_bits(), ord.h);
    if let Some(c) = constant_cache().lock().unwrap().get(&key) {
        return Ok(*c);
    }
    let a1 = symbol_integral_1d(ord.h, ord.s);
    let s = ord.s;
    let am = a1 * PI.powf((m as f64 - 1.0) / 2.0) * gamma(0.5 + s)? / gamma(m as f64 / 2.0 + s)?;
    let c = 1.0 / am;
    constant_cache().lock().unwrap().insert(key, c);
    Ok(c)
}

/// Quadrature controls for the singular integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlOptions {
    /// inner/outer split radius
    pub cutoff: f64,
    /// Gauss–Jacobi nodes on the inner ball
    pub nodes: usize,
    /// tanh-sinh level on outer panels
    pub level: u32,
    /// u vanishes for |y| > R and may be non-smooth across |y| = R
    pub support_radius: Option<f64>,
    /// outer truncation when no support radius is given
    pub r_max: f64,
    /// angular trapezoid nodes over a half circle (m = 2)
    pub angular: usize,
    /// skip the normalizing constant (raw integral)
    pub raw: bool,
}

impl Default for FlOptions {
    fn default() -> Self {
        FlOptions { cutoff: 0.5, nodes: 64, level: 6, support_radius: None, r_max: 50.0, angular: 64, raw: false }
    }
}

/// Radii ρ > 0 at which x + kρθ crosses the sphere |y| = R.
fn crossings(x: &[f64], theta: &[f64], h: usize, r: f64) -> Vec<f64> {
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let xt: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
    let mut out = Vec::new();
    for k in 1..=h {
        for sgn in [-1.0, 1.0] {
            let kk = sgn * k as f64;
            // kk^2 ρ^2 + 2 kk ρ (x·θ) + |x|^2 - R^2 = 0
            let a = kk * kk;
            let b = 2.0 * kk * xt;
            let c = xx - r * r;
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            for rho in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                if rho > 1e-14 {
                    out.push(rho);
                }
            }
        }
    }
    out
}

/// 2 ∫_0^∞ δ_h u(x, ρθ) ρ^{-1-2s} dρ along one direction (the 1D kernel, symmetric in ±θ).
fn radial_integral(u: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], theta: &[f64], ord: &FracOrder, st: &DeltaHStencil, o: &FlOptions) -> f64 {
    let p = 1.0 + 2.0 * ord.s;
    let two_h = 2.0 * ord.h as f64;
    let dh = |rho: f64| {
        let mut y = [0.0; 2];
        for d in 0..x.len() {
            y[d] = rho * theta[d];
        }
        delta_h(u, x, &y[..x.len()], st)
    };
    let (rmax, tail) = match o.support_radius {
        Some(r) => {
            let xn: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rmax = r + xn + 1e-9;
            // beyond rmax only the k = 0 term survives
            let c0 = st.coeffs[st.h];
            (rmax, c0 * u(x) * rmax.powf(-2.0 * ord.s) / (2.0 * ord.s))
        }
        None => (o.r_max, 0.0),
    };
    let mut breaks: Vec<f64> = match o.support_radius {
        Some(r) => crossings(x, theta, ord.h, r).into_iter().filter(|&b| b < rmax).collect(),
        None => vec![],
    };
    let first = breaks.iter().map(|b| 0.5 * b).fold(o.cutoff, f64::min).min(rmax);
    breaks.push(first);
    breaks.push(rmax);
    breaks.retain(|&b| b >= first);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    // inner piece: δ_h u / ρ^{2h} is smooth near 0, Jacobi weight ρ^{2h-1-2s}
    let inner = jacobi_interval(
        |rho| if rho == 0.0 { 0.0 } else { dh(rho) / rho.powf(two_h) },
        0.0,
        first,
        0.0,
        two_h - p,
        o.nodes,
    );
    let mut outer = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-15 {
            continue;
        }
        outer += tanh_sinh(|rho, _, _| dh(rho) * rho.powf(-p), a, b, o.level);
    }
    2.0 * (inner + outer + tail)
}

/// (-Δ)^s u(x) for m = x.len() ∈ {1, 2}.
pub fn frac_laplacian_point(u: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], ord: &FracOrder, o: &FlOptions) -> Result<f64> {
    let m = x.len();
    if !(1..=2).contains(&m) {
        return Err(Error::Unsupported(format!("dimension {m}")));
    }
    if (ord.h as f64) <= ord.s {
        return Err(Error::Config(format!("stencil order h = {} must exceed s = {}", ord.h, ord.s)));
    }
    let st = DeltaHStencil::new(ord.h);
    let raw = if m == 1 {
        radial_integral(u, x, &[1.0], ord, &st, o)
    } else {
        // θ over a half circle; the radial integral already covers ±θ
        let n = o.angular;
        let vals = crate::par::map(n, |i| {
            let phi = PI * (i as f64 + 0.5) / n as f64;
            radial_integral(u, x, &[phi.cos(), phi.sin()], ord, &st, o)
        });
        // ∫_0^{2π} dθ ∫_0^∞ ρ dρ ρ^{-2-2s}: half circle, each radial value is doubled
        vals.iter().sum::<f64>() * PI / n as f64
    };
    if o.raw {
        return Ok(raw);
    }
    Ok(raw * operator_constant(m, ord)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlChecked {
    pub value: f64,
    pub doubling_delta: f64,
    pub warning: bool,
}

/// Same as `frac_laplacian_point` with the node-doubling discrepancy attached.
pub fn frac_laplacian_checked(u: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], ord: &FracOrder, o: &FlOptions) -> Result<FlChecked> {
    let v1 = frac_laplacian_point(u, x, ord, o)?;
    let o2 = FlOptions { nodes: o.nodes * 2, level: o.level + 1, angular: o.angular * 2, ..*o };
    let v2 = frac_laplacian_point(u, x, ord, &o2)?;
    let d = (v2 - v1).abs() / v2.abs().max(1e-300);
    Ok(FlChecked { value: v2, doubling_delta: d, warning: d > 1e-6 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_coefficients() {
        assert_eq!(DeltaHStencil::new(1).coeffs, vec![-1.0, 2.0, -1.0]);
        assert_eq!(DeltaHStencil::new(2).coeffs, vec![1.0, -4.0, 6.0, -4.0, 1.0]);
    }

    #[test]
    fn delta_two_of_quartic() {
        let st = DeltaHStencil::new(2);
        let v = delta_h(&|p: &[f64]| p[0].powi(4), &[0.0], &[1.0], &st);
        assert_eq!(v, 24.0);
    }

    #[test]
    fn constant_one_over_pi() {
        assert!((normalizing_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(normalizing_constant(1, 1.0).is_err());
    }

    #[test]
    fn order_rules() {
        assert!(FracOrder::with_h(1.5, 1).is_err());
        let o = FracOrder::new(2.0).unwrap();
        assert_eq!((o.m, o.sigma, o.h), (1, 1.0, 3));
        let o = FracOrder::new(1.5).unwrap();
        assert_eq!((o.m, o.h), (1, 2));
        assert!((o.sigma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn symbol_integral_matches_closed_form() {
        for &(h, s) in &[(1usize, 0.5), (1, 0.3), (2, 0.5), (2, 1.5), (3, 2.5)] {
            let a = symbol_integral_1d(h, s);
            let b = symbol_integral_closed(h, s).unwrap();
            assert!((a / b - 1.0).abs() < 1e-9, "h={h} s={s}: {a} vs {b}");
        }
        // h = 1 constant agrees with the principal-value constant
        let a = symbol_integral_1d(1, 0.4);
        assert!((1.0 / a - normalizing_constant(1, 0.4).unwrap() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn constant_function_is_annihilated() {
        let o = FracOrder::new(0.5).unwrap();
        let v = frac_laplacian_point(&|_| 2.0, &[0.1], &o, &FlOptions::default()).unwrap();
        assert!(v.abs() < 1e-12);
    }
}
