//! First Dirichlet eigenpair of (-Δ)^s on B₁ by Rayleigh–Ritz.
//!
//! Functions are (1-|x|²)₊^s q(x) with q polynomial. The energy
//! ∫|ξ|^{2s}|Fu|² uses the unitary Fourier transform, computed by
//! Gauss–Jacobi in space and Gauss–Legendre panels in frequency up to Ξ_max,
//! with the ξ^{-2} tail coming from the (1-|x|)^s edge added analytically.

use crate::asymptotics::{power_fit, FitResult};
use crate::fractional_laplacian::FracOrder;
use crate::green_ball::{norm, one_minus_sq, Field};
use crate::quadrature::{gauss_jacobi, gauss_legendre, jacobi_interval, jacobi_p};
use crate::specfun::{bessel_j0, gamma, ln_gamma};
use crate::{par, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyMethod {
    Fourier,
    /// Closed-form diagonal energies of the Jacobi family.
    Exact,
}

#[derive(Debug, Clone)]
pub struct EnergyForm {
    pub ord: FracOrder,
    pub n: usize,
    pub xi_max: f64,
    pub panel: f64,
    pub gl: usize,
    pub tail_correction: bool,
    pub method: EnergyMethod,
}

impl EnergyForm {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::Unsupported(format!("energy form in dimension {n}")));
        }
        Ok(EnergyForm { ord: FracOrder::new(s)?, n, xi_max: 200.0, panel: 2.0, gl: 16, tail_correction: true, method: EnergyMethod::Fourier })
    }

    pub fn s(&self) -> f64 {
        self.ord.s
    }

    fn space_nodes(&self) -> usize {
        (0.6 * self.xi_max) as usize + 60
    }

    fn freq_rule(&self) -> (Vec<f64>, Vec<f64>) {
        let panels = (self.xi_max / self.panel).ceil() as usize;
        let h = self.xi_max / panels as f64;
        let r = gauss_legendre(self.gl);
        let mut xs = Vec::with_capacity(panels * self.gl);
        let mut ws = Vec::with_capacity(panels * self.gl);
        for p in 0..panels {
            let c = h * (p as f64 + 0.5);
            for (x, w) in r.nodes.iter().zip(&r.weights) {
                xs.push(c + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }

    fn tail(&self, qu: &[f64], qv: &[f64]) -> f64 {
        self.tail_at(qu, qv, self.xi_max)
    }

    /// Analytic ∫_{|ξ|>cap} contribution for edge values q_u, q_v.
    fn tail_at(&self, qu: &[f64], qv: &[f64], cap: f64) -> f64 {
        if !self.tail_correction {
            return 0.0;
        }
        let s = self.s();
        let g2 = gamma(1.0 + s).unwrap().powi(2) * 4f64.powf(s);
        match self.n {
            1 => g2 * (qu[0] * qv[0] + qu[1] * qv[1]) / (PI * cap),
            _ => 2.0 * g2 * qu[0] * qv[0] / cap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisFamily {
    /// P_k^{(s, n/2-1)}(2|x|²-1)
    Jacobi,
    /// T_k(2|x|²-1)
    Chebyshev,
}

/// b_i(x) = (1-|x|²)₊^s q_i(|x|), q_i even polynomial.
#[derive(Debug, Clone, Serialize)]
pub struct RadialBasis {
    pub n: usize,
    pub s: f64,
    pub count: usize,
    pub family: BasisFamily,
}

impl RadialBasis {
    pub fn new(n: usize, s: f64, count: usize, family: BasisFamily) -> Self {
        RadialBasis { n, s, count, family }
    }

    pub fn q(&self, i: usize, r: f64) -> f64 {
        let t = 2.0 * r * r - 1.0;
        match self.family {
            BasisFamily::Jacobi => jacobi_p(i, self.s, self.n as f64 / 2.0 - 1.0, t).0,
            BasisFamily::Chebyshev => (i as f64 * t.clamp(-1.0, 1.0).acos()).cos(),
        }
    }

    pub fn eval(&self, i: usize, x: &[f64]) -> f64 {
        let a = one_minus_sq(x);
        if a <= 0.0 {
            0.0
        } else {
            a.powf(self.s) * self.q(i, norm(x))
        }
    }
}

/// A function (1-x²)₊^s p(x) on the line with p given by coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedPoly {
    pub s: f64,
    pub coeffs: Vec<f64>,
}

impl WeightedPoly {
    pub fn p(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = one_minus_sq(&[x]);
        if a <= 0.0 {
            0.0
        } else {
            a.powf(self.s) * self.p(x)
        }
    }

    /// Even part, which is the spherical mean on the line.
    pub fn even_part(&self) -> WeightedPoly {
        let coeffs = self.coeffs.iter().enumerate().map(|(k, c)| if k % 2 == 0 { *c } else { 0.0 }).collect();
        WeightedPoly { s: self.s, coeffs }
    }
}

/// E(u,u) for u = (1-x²)₊^s p(x) on the line, by the Fourier route.
pub fn energy_weighted_1d(u: &WeightedPoly, ef: &EnergyForm) -> Result<f64> {
    if ef.n != 1 || (u.s - ef.s()).abs() > 0.0 {
        return Err(Error::Config("energy_weighted_1d: form must be 1D with matching s".into()));
    }
    let s = ef.s();
    let rule = gauss_jacobi(ef.space_nodes(), s, s);
    let vals: Vec<f64> = rule.nodes.iter().map(|&x| u.p(x)).collect();
    let (xi, w) = ef.freq_rule();
    let c0 = (2.0 * PI).powf(-0.5);
    let body = par::sum(xi.len(), |k| {
        let z = xi[k];
        let (mut re, mut im) = (0.0, 0.0);
        for ((x, wt), v) in rule.nodes.iter().zip(&rule.weights).zip(&vals) {
            let (sn, cs) = (z * x).sin_cos();
            re += wt * v * cs;
            im -= wt * v * sn;
        }
        w[k] * z.powf(2.0 * s) * c0 * c0 * (re * re + im * im)
    });
    let edge = [u.p(1.0), u.p(-1.0)];
    Ok(2.0 * body + ef.tail(&edge, &edge))
}

/// Assembled energy and mass matrices for a basis.
#[derive(Debug, Clone)]
pub struct EnergySystem {
    pub ef: EnergyForm,
    pub basis: RadialBasis,
    pub a: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Largest relative change of a diagonal entry when the cap is halved.
    pub tail_ratio: f64,
    pub cap_warning: bool,
}

fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        _ => 2.0 * PI,
    }
}

/// ∫_{B₁} g(|x|) dx for a radial integrand carrying the weight (1-|x|²)^w.
fn radial_weighted<F: Fn(f64) -> f64>(n: usize, w: f64, nodes: usize, g: F) -> f64 {
    match n {
        1 => gauss_jacobi(nodes, w, w).integrate(|x| g(x.abs())),
        _ => sphere_area(n) * jacobi_interval(|r| (1.0 + r).powf(w) * r * g(r), 0.0, 1.0, w, 0.0, nodes),
    }
}

fn mass_matrix(basis: &RadialBasis) -> DMatrix<f64> {
    let nodes = basis.count + 40;
    let mut m = DMatrix::zeros(basis.count, basis.count);
    for i in 0..basis.count {
        for j in 0..=i {
            let v = radial_weighted(basis.n, 2.0 * basis.s, nodes, |r| basis.q(i, r) * basis.q(j, r));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// μ_k = 4^s Γ(1+s+k) Γ(n/2+s+k) / (k! Γ(n/2+k)): (-Δ)^s maps (1-|x|²)^s P_k to μ_k P_k.
pub fn jacobi_eigenvalue(n: usize, s: f64, k: usize) -> f64 {
    let (kf, h) = (k as f64, n as f64 / 2.0);
    (s * 4f64.ln() + ln_gamma(1.0 + s + kf).unwrap() + ln_gamma(h + s + kf).unwrap() - ln_gamma(kf + 1.0).unwrap() - ln_gamma(h + kf).unwrap()).exp()
}

impl EnergyForm {
    pub fn assemble(&self, basis: &RadialBasis) -> Result<EnergySystem> {
        if basis.n != self.n || (basis.s - self.s()).abs() > 0.0 {
            return Err(Error::Config("basis does not match the energy form".into()));
        }
        let nb = basis.count;
        let s = self.s();
        let m = mass_matrix(basis);
        let mut a = DMatrix::zeros(nb, nb);
        let mut tail_ratio: f64 = 0.0;
        match self.method {
            EnergyMethod::Exact => {
                if basis.family != BasisFamily::Jacobi {
                    return Err(Error::Unsupported("exact energies exist for the Jacobi family only".into()));
                }
                for k in 0..nb {
                    let hk = radial_weighted(self.n, s, nb + 40, |r| basis.q(k, r).powi(2));
                    a[(k, k)] = jacobi_eigenvalue(self.n, s, k) * hk;
                }
            }
            EnergyMethod::Fourier => {
                let (xi, w) = self.freq_rule();
                let table = self.transforms(basis, &xi);
                let weight: Vec<f64> = match self.n {
                    1 => xi.iter().zip(&w).map(|(z, wt)| 2.0 * wt * z.powf(2.0 * s)).collect(),
                    _ => xi.iter().zip(&w).map(|(z, wt)| 2.0 * PI * wt * z.powf(2.0 * s + 1.0)).collect(),
                };
                let edges: Vec<[f64; 2]> = (0..nb).map(|i| [basis.q(i, 1.0), basis.q(i, 1.0)]).collect();
                for i in 0..nb {
                    for j in 0..=i {
                        let (mut body, mut half) = (0.0, 0.0);
                        for k in 0..xi.len() {
                            let v = weight[k] * table[i][k] * table[j][k];
                            body += v;
                            if xi[k] < 0.5 * self.xi_max {
                                half += v;
                            }
                        }
                        let full = body + self.tail(&edges[i], &edges[j]);
                        a[(i, j)] = full;
                        a[(j, i)] = full;
                        if i == j {
                            let coarse = half + self.tail_at(&edges[i], &edges[j], 0.5 * self.xi_max);
                            tail_ratio = tail_ratio.max((full - coarse).abs() / full.abs());
                        }
                    }
                }
            }
        }
        Ok(EnergySystem { ef: self.clone(), basis: basis.clone(), a, m, tail_ratio, cap_warning: tail_ratio > 0.01 })
    }

    /// Radial Fourier transforms of every basis function at the frequency nodes.
    fn transforms(&self, basis: &RadialBasis, xi: &[f64]) -> Vec<Vec<f64>> {
        let s = self.s();
        let ns = self.space_nodes();
        match self.n {
            1 => {
                let rule = gauss_jacobi(ns, s, s);
                let c0 = (2.0 * PI).powf(-0.5);
                (0..basis.count)
                    .map(|i| {
                        let v: Vec<f64> = rule.nodes.iter().map(|&x| basis.q(i, x.abs())).collect();
                        par::map(xi.len(), |k| c0 * rule.nodes.iter().zip(&rule.weights).zip(&v).map(|((x, w), q)| w * q * (xi[k] * x).cos()).sum::<f64>())
                    })
                    .collect()
            }
            _ => {
                // nodes on [0,1] for the weight (1-r)^s
                let rule = gauss_jacobi(ns, s, 0.0);
                let h = 0.5f64.powf(1.0 + s);
                let rs: Vec<f64> = rule.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect();
                let ws: Vec<f64> = rule.weights.iter().zip(&rs).map(|(w, r)| h * w * (1.0 + r).powf(s) * r).collect();
                let j0: Vec<Vec<f64>> = par::map(xi.len(), |k| rs.iter().map(|r| bessel_j0(r * xi[k])).collect());
                (0..basis.count)
                    .map(|i| {
                        let v: Vec<f64> = rs.iter().zip(&ws).map(|(&r, w)| w * basis.q(i, r)).collect();
                        (0..xi.len()).map(|k| v.iter().zip(&j0[k]).map(|(a, b)| a * b).sum()).collect()
                    })
                    .collect()
            }
        }
    }
}

impl EnergySystem {
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let (u, v) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
        (u.transpose() * &self.a * v)[0]
    }

    pub fn mass(&self, u: &[f64], v: &[f64]) -> f64 {
        let (u, v) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
        (u.transpose() * &self.m * v)[0]
    }
}

pub fn energy(u: &[f64], v: &[f64], sys: &EnergySystem) -> f64 {
    sys.energy(u, v)
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda1: f64,
    pub coeffs: Vec<f64>,
    pub basis: RadialBasis,
    pub rayleigh: f64,
    pub m_condition: f64,
}

impl EigenPair {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let a = one_minus_sq(x);
        if a <= 0.0 {
            return 0.0;
        }
        let r = norm(x);
        a.powf(self.basis.s) * self.coeffs.iter().enumerate().map(|(i, c)| c * self.basis.q(i, r)).sum::<f64>()
    }

    pub fn field(&self) -> Field {
        let me = self.clone();
        Field::new(self.basis.n, 1.0, format!("eigenfunction s={}", self.basis.s), Arc::new(move |x: &[f64]| me.eval(x)))
    }
}

/// Smallest generalized eigenvalue of the leading `size` × `size` block.
pub fn first_eigenpair_sized(sys: &EnergySystem, size: usize) -> Result<EigenPair> {
    if size < 1 || size > sys.basis.count {
        return Err(Error::Config(format!("basis size {size} out of range")));
    }
    let a = sys.a.view((0, 0), (size, size)).into_owned();
    let m = sys.m.view((0, 0), (size, size)).into_owned();
    let ev = m.clone().symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(Error::IllConditioned(cond));
    }
    let chol = m.clone().cholesky().ok_or(Error::IllConditioned(cond))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::Singular)?;
    let c = &linv * &a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let (k, lambda1) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let y = eig.eigenvectors.column(k).into_owned();
    let mut coef = linv.transpose() * y;
    let nrm = (coef.transpose() * &m * &coef)[0].sqrt();
    coef /= nrm;
    let mut basis = sys.basis.clone();
    basis.count = size;
    let at0: f64 = (0..size).map(|i| coef[i] * basis.q(i, 0.0)).sum();
    if at0 < 0.0 {
        coef = -coef;
    }
    let rayleigh = (coef.transpose() * &a * &coef)[0] / (coef.transpose() * &m * &coef)[0];
    Ok(EigenPair { lambda1, coeffs: coef.iter().copied().collect(), basis, rayleigh, m_condition: cond })
}

pub fn first_eigenpair(sys: &EnergySystem) -> Result<EigenPair> {
    if sys.basis.count < 4 {
        return Err(Error::Config("first_eigenpair needs at least 4 basis functions".into()));
    }
    first_eigenpair_sized(sys, sys.basis.count)
}

/// λ₁ for every leading block size 1..=count.
pub fn eigenvalue_ladder(sys: &EnergySystem) -> Result<Vec<f64>> {
    (1..=sys.basis.count).map(|k| first_eigenpair_sized(sys, k).map(|p| p.lambda1)).collect()
}

/// Average of v over the rotations of x (n = 1: x and -x; n = 2: `nodes` angles).
pub fn spherical_mean(v: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], nodes: usize) -> f64 {
    match x.len() {
        1 => 0.5 * (v(x) + v(&[-x[0]])),
        2 => {
            let r = norm(x);
            let th0 = x[1].atan2(x[0]);
            let h = 2.0 * PI / nodes as f64;
            (0..nodes).map(|k| {
                let th = th0 + h * k as f64;
                v(&[r * th.cos(), r * th.sin()])
            })
            .sum::<f64>()
                / nodes as f64
        }
        _ => {
            // rotations preserve |x|; fall back to the value on the axis
            let r = norm(x);
            let mut y = vec![0.0; x.len()];
            y[0] = r;
            v(&y)
        }
    }
}

/// Power fit of φ(e+εω); exact zero when e·ω ≥ 0.
pub fn eigen_boundary_probe(ep: &EigenPair, e: &[f64], omega: &[f64], ladder: &[f64]) -> Result<FitResult> {
    let samples: Vec<(f64, f64)> = ladder
        .iter()
        .map(|&eps| {
            let x: Vec<f64> = e.iter().zip(omega).map(|(a, b)| a + eps * b).collect();
            (eps, ep.eval(&x))
        })
        .collect();
    let eo: f64 = e.iter().zip(omega).map(|(a, b)| a * b).sum();
    if eo >= 0.0 && samples.iter().any(|p| p.1 != 0.0) {
        return Err(Error::Domain("eigenfunction nonzero outside the ball".into()));
    }
    let fit = power_fit(&samples)?;
    if !fit.exact_zero() && fit.r_squared < 0.99 {
        return Err(Error::Fit(format!("boundary fit too noisy (R² = {})", fit.r_squared)));
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_family_exact_laplacian() {
        // s = 1, n = 1, k = 0: -(1-x²)'' = 2
        assert!((jacobi_eigenvalue(1, 1.0, 0) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn spherical_mean_of_odd_function() {
        let v = |x: &[f64]| x[0];
        assert!(spherical_mean(&v, &[0.3, 0.4], 64).abs() < 1e-15);
        assert_eq!(spherical_mean(&v, &[0.7], 1), 0.0);
    }
}
