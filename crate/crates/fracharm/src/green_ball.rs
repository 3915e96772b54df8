//! Green function of the unit ball for (-Δ)^s, Dirichlet solves, the Poisson
//! kernel and the s-harmonic spherical bump.

use crate::fractional_laplacian::{frac_laplacian_point, FlOptions, FracOrder};
use crate::quadrature::{gauss_legendre, gl_panels, gl_uniform, jacobi_interval, tanh_sinh};
use crate::specfun::{binom_general, gamma, sin_pi};
use crate::{par, Error, Result};
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

pub const DEFAULT_KMAX: usize = 80;

/// Which evaluation route `green_kernel` takes for the η-integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPath {
    Quadrature,
    Series,
}

#[derive(Debug, Clone)]
pub struct GreenParams {
    pub n: usize,
    pub ord: FracOrder,
    pub knorm: f64,
    pub coeffs: Vec<f64>,
}

impl GreenParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        Self::with_kmax(n, s, DEFAULT_KMAX)
    }

    pub fn with_kmax(n: usize, s: f64, kmax: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        let ord = FracOrder::new(s)?;
        let nf = n as f64;
        let knorm = gamma(nf / 2.0)? / (PI.powf(nf / 2.0) * 4f64.powf(s) * gamma(s)?.powi(2));
        let coeffs = (0..=kmax).map(|k| binom_general(-nf / 2.0, k) / (k as f64 + s)).collect();
        Ok(GreenParams { n, ord, knorm, coeffs })
    }

    pub fn s(&self) -> f64 {
        self.ord.s
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// (1-|x|²)₊ computed as (1-|x|)(1+|x|).
pub fn one_minus_sq(x: &[f64]) -> f64 {
    let r = norm(x);
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - r) * (1.0 + r)
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn r0(x: &[f64], y: &[f64]) -> Result<f64> {
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::Domain("r0: coincident points".into()));
    }
    Ok(one_minus_sq(x) * one_minus_sq(y) / (d * d))
}

/// ∫_0^{r} η^{s-1}(1+η)^{-n/2} dη through the substitution w = η/(1+η).
fn eta_integral_quad(r: f64, n: usize, s: f64) -> f64 {
    let half_n = n as f64 / 2.0;
    let p = half_n - s - 1.0;
    let big_w = r / (1.0 + r);
    let wa = big_w.min(0.5);
    let mut v = jacobi_interval(|w| (1.0 - w).powf(p), 0.0, wa, 0.0, s - 1.0, 32);
    if big_w > 0.5 {
        // u = 1 - w = e^v on [1/(1+r), 1/2]
        let lo = -(r.ln_1p());
        let hi = -LN_2;
        let panels = ((hi - lo).ceil() as usize).max(1);
        v += gl_uniform(|t| (-t.exp()).ln_1p().mul_add(s - 1.0, t * (half_n - s)).exp(), lo, hi, panels, 20);
    }
    v
}

/// Σ c_k r1^{k+s} plus the residual integral over [r1, r].
fn eta_integral_series(r: f64, gp: &GreenParams) -> Result<f64> {
    let s = gp.s();
    let r1 = r.min(0.5);
    if r1 >= 1.0 {
        return Err(Error::Radius { z: r1, radius: 1.0 });
    }
    let poly = gp.coeffs.iter().rev().fold(0.0, |acc, c| acc * r1 + c);
    let mut v = r1.powf(s) * poly;
    if r > r1 {
        let half_n = gp.n as f64 / 2.0;
        let (lo, hi) = (r1.ln(), r.ln());
        let panels = ((hi - lo).ceil() as usize).max(1);
        v += gl_uniform(|t| (s * t - half_n * t.exp().ln_1p()).exp(), lo, hi, panels, 20);
    }
    Ok(v)
}

pub fn green_kernel(x: &[f64], y: &[f64], gp: &GreenParams, path: KernelPath) -> Result<f64> {
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::Domain("green_kernel: coincident points".into()));
    }
    let (ax, ay) = (one_minus_sq(x), one_minus_sq(y));
    if ax <= 0.0 || ay <= 0.0 {
        return Ok(0.0);
    }
    let r = ax * ay / (d * d);
    let i = match path {
        KernelPath::Quadrature => eta_integral_quad(r, gp.n, gp.s()),
        KernelPath::Series => eta_integral_series(r, gp)?,
    };
    Ok(gp.knorm * d.powf(2.0 * gp.s() - gp.n as f64) * i)
}

/// Boundary-graded product rule on B_R (n = 1 or 2).
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    pub n: usize,
    pub radius: f64,
    /// Ratio of successive panel widths toward the boundary.
    pub grading: f64,
    /// Number of geometrically refined panels toward the rim; 0 for data
    /// that vanishes smoothly there.
    pub levels: usize,
    pub order: usize,
    pub angular: usize,
    /// Radial breakpoints on [0, radius].
    pub breaks: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl BallQuadrature {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        Self::with_params(n, radius, 0.5, 16, 24, 64)
    }

    /// Ungraded rule for sources vanishing smoothly at the rim of B_R.
    pub fn smooth(n: usize, radius: f64) -> Result<Self> {
        Self::with_params(n, radius, 0.5, 0, 24, 64)
    }

    pub fn with_params(n: usize, radius: f64, grading: f64, levels: usize, order: usize, angular: usize) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::Unsupported(format!("ball quadrature in dimension {n}")));
        }
        if !(radius > 0.0 && grading > 0.0 && grading < 1.0) {
            return Err(Error::Config("ball quadrature: radius > 0 and grading in (0,1) required".into()));
        }
        let mut breaks = vec![0.0];
        breaks.extend((0..=levels).map(|k| radius * (1.0 - 0.5 * grading.powi(k as i32))));
        breaks.push(radius);
        let r = gauss_legendre(order);
        let mut radial = Vec::new();
        for w in breaks.windows(2) {
            let (h, c) = (0.5 * (w[1] - w[0]), 0.5 * (w[1] + w[0]));
            for (x, wt) in r.nodes.iter().zip(&r.weights) {
                radial.push((c + h * x, h * wt));
            }
        }
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        if n == 1 {
            for &(p, w) in &radial {
                nodes.push(vec![-p]);
                weights.push(w);
                nodes.push(vec![p]);
                weights.push(w);
            }
        } else {
            let dth = 2.0 * PI / angular as f64;
            for &(p, w) in &radial {
                for j in 0..angular {
                    let th = dth * (j as f64 + 0.5);
                    nodes.push(vec![p * th.cos(), p * th.sin()]);
                    weights.push(w * p * dth);
                }
            }
        }
        Ok(BallQuadrature { n, radius, grading, levels, order, angular, breaks, nodes, weights })
    }

    pub fn integrate<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> f64 {
        let vals = par::map(self.nodes.len(), |i| self.weights[i] * f(&self.nodes[i]));
        vals.iter().sum()
    }

    pub fn volume(&self) -> f64 {
        match self.n {
            1 => 2.0 * self.radius,
            _ => PI * self.radius * self.radius,
        }
    }
}

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function on ℝⁿ vanishing outside B_R.
#[derive(Clone)]
pub struct Field {
    pub n: usize,
    pub support: f64,
    pub label: String,
    eval: PointFn,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field").field("n", &self.n).field("support", &self.support).field("label", &self.label).finish()
    }
}

impl Field {
    pub fn new(n: usize, support: f64, label: impl Into<String>, eval: PointFn) -> Self {
        Field { n, support, label: label.into(), eval }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if norm(x) >= self.support {
            0.0
        } else {
            (self.eval)(x)
        }
    }

    pub fn sample(&self, pts: &[Vec<f64>]) -> Vec<f64> {
        par::map(pts.len(), |i| self.eval(&pts[i]))
    }
}

const TS_LEVEL: u32 = 5;

fn solve_point_1d(x: f64, f: &PointFn, gp: &GreenParams, q: &BallQuadrature) -> f64 {
    let g = |y: f64| {
        let fy = f(&[y]);
        if fy == 0.0 {
            0.0
        } else {
            fy * green_kernel(&[x], &[y], gp, KernelPath::Series).unwrap_or(0.0)
        }
    };
    let mut br: Vec<f64> = q.breaks.iter().rev().map(|b| -b).collect();
    br.extend(q.breaks.iter().skip(1).copied());
    let (lo_end, hi_end) = (br[0], *br.last().unwrap());
    if x > lo_end && x < hi_end {
        // drop breaks that crowd x, so every Gauss panel stays a panel-width away
        // from the kernel singularity
        loop {
            let i = br.partition_point(|&b| b < x);
            let mut removed = false;
            if i >= 2 && br[i - 1] != x && x - br[i - 1] < 0.5 * (br[i - 1] - br[i - 2]) {
                br.remove(i - 1);
                removed = true;
            } else if i + 1 < br.len() && br[i] != x && br[i] - x < 0.5 * (br[i + 1] - br[i]) {
                br.remove(i);
                removed = true;
            }
            if !removed {
                break;
            }
        }
        let i = br.partition_point(|&b| b < x);
        if br[i] != x {
            br.insert(i, x);
        }
    }
    let last = br.len() - 2;
    let graded = q.levels > 0;
    let mut s = 0.0;
    for (i, w) in br.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let rim = graded && (i == 0 || i == last);
        s += if rim || lo == x || hi == x {
            tanh_sinh(|y, _, _| g(y), lo, hi, TS_LEVEL)
        } else {
            gl_panels(g, &[lo, hi], q.order)
        };
    }
    s
}

fn solve_point_2d(x: &[f64], f: &PointFn, gp: &GreenParams, q: &BallQuadrature) -> f64 {
    let big_r = q.radius;
    let rx = norm(x);
    let gy = |y: &[f64]| {
        let fy = f(y);
        if fy == 0.0 {
            0.0
        } else {
            fy * green_kernel(x, y, gp, KernelPath::Series).unwrap_or(0.0)
        }
    };
    if rx > 1.1 * big_r {
        return q.integrate(gy);
    }
    // polar coordinates centred at x
    let na = q.angular.max(16);
    let dth = 2.0 * PI / na as f64;
    let c = rx * rx - big_r * big_r;
    let parts = par::map(na, |j| {
        let th = dth * (j as f64 + 0.5);
        let (ct, st) = (th.cos(), th.sin());
        let b = x[0] * ct + x[1] * st;
        let disc = b * b - c;
        if disc <= 0.0 {
            return 0.0;
        }
        let sq = disc.sqrt();
        let (r1, r2) = ((-b - sq).max(0.0), -b + sq);
        if r2 <= r1 {
            return 0.0;
        }
        tanh_sinh(|rho, _, _| rho * gy(&[x[0] + rho * ct, x[1] + rho * st]), r1, r2, TS_LEVEL)
    });
    parts.iter().sum::<f64>() * dth
}

/// u = ∫ G_s(·,y) f(y) dy, with f supported in B_{q.radius}.
pub fn solve_dirichlet(f: PointFn, gp: &GreenParams, q: &BallQuadrature) -> Result<Field> {
    if gp.n != q.n {
        return Err(Error::Config("solve_dirichlet: dimension mismatch".into()));
    }
    if q.radius > 1.0 {
        return Err(Error::Domain("source support must lie in the unit ball".into()));
    }
    let gp2 = gp.clone();
    let q2 = q.clone();
    let eval: PointFn = if gp.n == 1 {
        Arc::new(move |x: &[f64]| solve_point_1d(x[0], &f, &gp2, &q2))
    } else {
        Arc::new(move |x: &[f64]| solve_point_2d(x, &f, &gp2, &q2))
    };
    Ok(Field::new(gp.n, 1.0, format!("green solve n={} s={}", gp.n, gp.s()), eval))
}

#[derive(Debug, Clone)]
pub struct BoundaryBound {
    pub sup: f64,
    /// (|x|, max over directions of d(x)^{-s}|u(x)|)
    pub ladder: Vec<(f64, f64)>,
    pub f_l1: f64,
}

impl BoundaryBound {
    pub fn ratio_to_l1(&self) -> f64 {
        if self.f_l1 == 0.0 {
            0.0
        } else {
            self.sup / self.f_l1
        }
    }
}

/// sup of d(x)^{-s}|u(x)| over the radii R, 1-(1-R)/10, 1-(1-R)/100.
pub fn boundary_bound_check(u: &Field, f: &PointFn, s: f64, r: f64, big_r: f64) -> Result<BoundaryBound> {
    if !(0.0 < r && r < big_r && big_r < 1.0) {
        return Err(Error::Domain("boundary_bound_check needs 0 < r < R < 1".into()));
    }
    let dirs: Vec<Vec<f64>> = if u.n == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..8).map(|k| {
            let th = PI * k as f64 / 4.0 + 0.1;
            vec![th.cos(), th.sin()]
        })
        .collect()
    };
    let radii = [big_r, 1.0 - (1.0 - big_r) / 10.0, 1.0 - (1.0 - big_r) / 100.0];
    let mut ladder = Vec::new();
    for &rad in &radii {
        let d = 1.0 - rad;
        let m = dirs
            .iter()
            .map(|e| {
                let x: Vec<f64> = e.iter().map(|c| c * rad).collect();
                u.eval(&x).abs() / d.powf(s)
            })
            .fold(0.0, f64::max);
        ladder.push((rad, m));
    }
    let q = BallQuadrature::new(u.n, r)?;
    let f_l1 = q.integrate(|y| f(y).abs());
    let sup = ladder.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(BoundaryBound { sup, ladder, f_l1 })
}

/// Γ(n/2) sin(πσ) / π^{n/2+1}.
pub fn poisson_gamma_default(n: usize, ord: &FracOrder) -> f64 {
    let nf = n as f64;
    gamma(nf / 2.0).unwrap() * sin_pi(ord.sigma) / PI.powf(nf / 2.0 + 1.0)
}

pub fn poisson_kernel(x: &[f64], y: &[f64], n: usize, ord: &FracOrder, gamma_ns: f64) -> Result<f64> {
    let (rx, ry) = (norm(x), norm(y));
    if !(rx < 1.0 && ry > 1.0) {
        return Err(Error::Domain("poisson_kernel needs |x| < 1 < |y|".into()));
    }
    let sign = if ord.m % 2 == 0 { 1.0 } else { -1.0 };
    let outer = (ry - 1.0) * (ry + 1.0);
    Ok(sign * gamma_ns * dist(x, y).powi(-(n as i32)) * one_minus_sq(x).powf(ord.s) * outer.powf(-ord.s))
}

/// Fixed exterior profile exp(-1/((ρ-2)(3-ρ))) on (2,3).
pub fn bump_profile(rho: f64) -> f64 {
    if rho <= 2.0 || rho >= 3.0 {
        0.0
    } else {
        (-1.0 / ((rho - 2.0) * (3.0 - rho))).exp()
    }
}

/// Exterior datum ψ₀(x) = (-1)^m ψ̄(|x|).
pub fn bump_datum(x: &[f64], ord: &FracOrder) -> f64 {
    let sign = if ord.m % 2 == 0 { 1.0 } else { -1.0 };
    sign * bump_profile(norm(x))
}

/// Radial factor Φ with ψ(x) = (1-|x|²)^s Φ(|x|) inside B₁, for γ = 1.
fn bump_inner_factor(r: f64, n: usize, s: f64) -> f64 {
    let r2 = r * r;
    let w = |rho: f64| bump_profile(rho) * ((rho - 1.0) * (rho + 1.0)).powf(-s) * rho / (rho * rho - r2);
    // the angular mean of |x-y|^{-2} over |y| = ρ is 1/(ρ²-|x|²)
    let scale = if n == 1 { 2.0 } else { 2.0 * PI };
    scale * tanh_sinh(|rho, _, _| w(rho), 2.0, 3.0, 7)
}

/// The s-harmonic function in B₁ with exterior datum ψ₀, for a given γ.
pub fn harmonic_bump_with(x: &[f64], n: usize, ord: &FracOrder, gamma_ns: f64) -> Result<f64> {
    if !(n == 1 || n == 2) || x.len() != n {
        return Err(Error::Unsupported(format!("harmonic bump in dimension {n}")));
    }
    let r = norm(x);
    if r >= 1.0 {
        return Ok(bump_datum(x, ord));
    }
    // (-1)^m from the kernel and from ψ₀ cancel
    Ok(gamma_ns * one_minus_sq(x).powf(ord.s) * bump_inner_factor(r, n, ord.s))
}

pub fn harmonic_bump(x: &[f64], n: usize, ord: &FracOrder) -> Result<f64> {
    harmonic_bump_with(x, n, ord, poisson_gamma_default(n, ord))
}

#[derive(Debug, Clone)]
pub struct PoissonFit {
    pub fitted: f64,
    pub default: f64,
    pub rel_diff: f64,
}

/// Fit γ so that (-Δ)^s ψ ≈ 0 at interior points (s in (0,1)).
pub fn fit_poisson_gamma(n: usize, ord: &FracOrder, points: &[Vec<f64>]) -> Result<PoissonFit> {
    if ord.s >= 1.0 {
        return Err(Error::Unsupported("poisson γ fit only for s in (0,1)".into()));
    }
    let inner = |x: &[f64]| harmonic_bump_with(x, n, ord, 1.0).map(|v| if norm(x) < 1.0 { v } else { 0.0 }).unwrap_or(0.0);
    let outer = |x: &[f64]| bump_datum(x, ord);
    let oi = FlOptions { support_radius: Some(1.0), ..Default::default() };
    let oo = FlOptions { support_radius: Some(3.0), ..Default::default() };
    let (mut num, mut den) = (0.0, 0.0);
    for x in points {
        let li = frac_laplacian_point(&inner, x, ord, &oi)?;
        let lo = frac_laplacian_point(&outer, x, ord, &oo)?;
        num -= li * lo;
        den += li * li;
    }
    if den == 0.0 {
        return Err(Error::Fit("degenerate poisson fit".into()));
    }
    let fitted = num / den;
    let default = poisson_gamma_default(n, ord);
    Ok(PoissonFit { fitted, default, rel_diff: (fitted / default - 1.0).abs() })
}

/// [x,y] = √(|x|²|y|² - 2x·y + 1).
pub fn bracket(x: &[f64], y: &[f64]) -> f64 {
    let (a, b) = (norm(x), norm(y));
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    (a * a * b * b - 2.0 * dot + 1.0).max(0.0).sqrt()
}

pub fn aux_kernel(x: &[f64], y: &[f64], gp: &GreenParams) -> Result<f64> {
    let s = gp.s();
    let ax = one_minus_sq(x);
    if ax <= 0.0 {
        return Err(Error::Domain("aux_kernel: x must lie in B1".into()));
    }
    let ay = one_minus_sq(y);
    if ay <= 0.0 {
        return Ok(0.0);
    }
    let br = bracket(x, y);
    if br < 1.0 - norm(x) * norm(y) - 1e-15 {
        return Err(Error::Domain("aux_kernel: bracket lower bound violated".into()));
    }
    let (nx, ny) = (norm(x), norm(y));
    Ok(ax.powf(s - 2.0) * ay.powf(s - 1.0) * (1.0 - nx * nx * ny * ny) / br.powi(gp.n as i32))
}

#[derive(Debug, Clone)]
pub struct RecursionFit {
    pub c: f64,
    pub residual: f64,
    pub scale: f64,
}

impl RecursionFit {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

fn laplacian_fd<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> f64 {
    let mut lap = 0.0;
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let mut v = [0.0; 5];
        for (k, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
            p[i] = x[i] + off * h;
            v[k] = f(&p);
        }
        p[i] = x[i];
        lap += (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h);
    }
    lap
}

/// Fits C in -Δ_x G_s = G_{s-1} - C P_{s-1} over sample pairs.
pub fn recursion_residual(gp: &GreenParams, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<RecursionFit> {
    let s = gp.s();
    if s <= 1.0 {
        return Err(Error::Domain("recursion needs s > 1".into()));
    }
    let lower = GreenParams::new(gp.n, s - 1.0)?;
    let h = 1e-3;
    let mut rows = Vec::with_capacity(samples.len());
    for (x, y) in samples {
        if dist(x, y) < 10.0 * h {
            return Err(Error::Domain("recursion sample too close to the diagonal".into()));
        }
        let lap = -laplacian_fd(|p| green_kernel(p, y, gp, KernelPath::Quadrature).unwrap_or(0.0), x, h);
        let g1 = green_kernel(x, y, &lower, KernelPath::Quadrature)?;
        let p = aux_kernel(x, y, gp)?;
        rows.push((lap, g1, p));
    }
    let num: f64 = rows.iter().map(|(l, g, p)| (g - l) * p).sum();
    let den: f64 = rows.iter().map(|(_, _, p)| p * p).sum();
    if den == 0.0 {
        return Err(Error::Fit("auxiliary kernel vanishes on all samples".into()));
    }
    let c = num / den;
    let residual = rows.iter().map(|(l, g, p)| (l - (g - c * p)).abs()).fold(0.0, f64::max);
    let scale = rows.iter().map(|(l, g, p)| l.abs().max(g.abs()).max((c * p).abs())).fold(0.0, f64::max);
    Ok(RecursionFit { c, residual, scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r0_examples() {
        assert!((r0(&[0.0], &[0.5]).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(r0(&[1.0], &[0.5]).unwrap(), 0.0);
        assert!(r0(&[0.2], &[0.2]).is_err());
    }

    #[test]
    fn classical_green() {
        let gp = GreenParams::new(1, 1.0).unwrap();
        for &(x, y) in &[(0.0f64, 0.5f64), (-0.7, 0.3), (0.9, 0.95), (-0.999, 0.2)] {
            let expect = 0.5 * ((1.0 - x * y) - (x - y).abs());
            for path in [KernelPath::Quadrature, KernelPath::Series] {
                let g = green_kernel(&[x], &[y], &gp, path).unwrap();
                assert!((g - expect).abs() < 1e-13, "{x} {y} {g} {expect}");
            }
        }
    }

    #[test]
    fn bracket_identities() {
        assert!((bracket(&[0.0, 0.0], &[0.3, 0.9]) - 1.0).abs() < 1e-15);
        let (x, y) = ([0.3, -0.4], [0.6, 0.5]);
        assert!(bracket(&x, &y) >= 1.0 - norm(&x) * norm(&y));
    }
}
