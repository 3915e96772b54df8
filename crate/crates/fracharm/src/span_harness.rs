//! Λ-harmonic building blocks, jet matrices at the origin, and the rescaled
//! local approximants built from them.
//!
//! Variables are laid out as x (local blocks, in order), then y (nonlocal
//! blocks), then t (one per time term).

use crate::caputo::{caputo_derivative, CaputoParams, SmoothFn};
use crate::eigen::{first_eigenpair, BasisFamily, EigenPair, EnergyForm, EnergyMethod, RadialBasis};
use crate::error::{Error, Result};
use crate::fractional_laplacian::{frac_laplacian_point, FlOptions, FracOrder};
use crate::green_ball::{bump_datum, bump_profile, harmonic_bump_with, norm, poisson_gamma_default, Field};
use crate::par;
use crate::quadrature::tanh_sinh;
use crate::specfun::{ml_solution, ml_solution_derivative, MLParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// operator description

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTerm {
    pub coeff: f64,
    /// one order per component; the block dimension is `order.len()`
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlocalTerm {
    pub coeff: f64,
    pub s: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTerm {
    pub coeff: f64,
    pub alpha: f64,
    /// initial point used when the convention is `Finite`
    pub initial: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeConvention {
    MinusInfinity,
    Finite,
}

/// Σ a_i ∂^{r_i}_{x_i} + Σ b_j (-Δ)^{s_j}_{y_j} + Σ c_h D^{α_h}_{t_h}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub local: Vec<LocalTerm>,
    pub nonlocal: Vec<NonlocalTerm>,
    pub time: Vec<TimeTerm>,
    pub convention: TimeConvention,
}

impl OperatorSpec {
    pub fn new(local: Vec<LocalTerm>, nonlocal: Vec<NonlocalTerm>, time: Vec<TimeTerm>) -> Result<Self> {
        let op = OperatorSpec { local, nonlocal, time, convention: TimeConvention::MinusInfinity };
        op.validate()?;
        Ok(op)
    }

    /// ∂²_x + (-Δ)^{1/2}_y + D^{0.7}_t, one dimension each.
    pub fn toy() -> Self {
        OperatorSpec::new(
            vec![LocalTerm { coeff: 1.0, order: vec![2] }],
            vec![NonlocalTerm { coeff: 1.0, s: 0.5, dim: 1 }],
            vec![TimeTerm { coeff: 1.0, alpha: 0.7, initial: 0.0 }],
        )
        .unwrap()
    }

    /// ∂²_x + D^{0.7}_t.
    pub fn caputo_toy() -> Self {
        OperatorSpec::new(vec![LocalTerm { coeff: 1.0, order: vec![2] }], vec![], vec![TimeTerm { coeff: 1.0, alpha: 0.7, initial: 0.0 }]).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.local.len() > 2 || self.nonlocal.len() > 2 || self.time.len() > 2 {
            return Err(Error::Config("at most 2 terms of each kind".into()));
        }
        for t in &self.local {
            if t.order.is_empty() || t.order.len() > 2 || t.order.iter().any(|&r| r == 0) || !t.coeff.is_finite() {
                return Err(Error::Config(format!("bad local term {t:?}")));
            }
        }
        for t in &self.nonlocal {
            if !(t.s > 0.0) || !(1..=2).contains(&t.dim) || !t.coeff.is_finite() {
                return Err(Error::Config(format!("bad nonlocal term {t:?}")));
            }
        }
        for t in &self.time {
            if !(t.alpha > 0.0) || !t.coeff.is_finite() || !t.initial.is_finite() {
                return Err(Error::Config(format!("bad time term {t:?}")));
            }
        }
        let frac = self.nonlocal.iter().any(|t| t.coeff != 0.0 && t.s.fract() != 0.0)
            || self.time.iter().any(|t| t.coeff != 0.0 && t.alpha.fract() != 0.0);
        if !frac {
            return Err(Error::Config("the operator has no genuinely fractional term".into()));
        }
        Ok(())
    }

    pub fn x_dim(&self) -> usize {
        self.local.iter().map(|t| t.order.len()).sum()
    }

    pub fn y_dim(&self) -> usize {
        self.nonlocal.iter().map(|t| t.dim).sum()
    }

    pub fn dim(&self) -> usize {
        self.x_dim() + self.y_dim() + self.time.len()
    }

    /// Scaling order of each scalar variable: |r_i|, 2 s_j, α_h.
    pub fn var_orders(&self) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.dim());
        for t in &self.local {
            let r: usize = t.order.iter().sum();
            q.extend(std::iter::repeat(r as f64).take(t.order.len()));
        }
        for t in &self.nonlocal {
            q.extend(std::iter::repeat(2.0 * t.s).take(t.dim));
        }
        q.extend(self.time.iter().map(|t| t.alpha));
        q
    }

    fn has_a(&self) -> bool {
        self.local.iter().any(|t| t.coeff != 0.0)
    }
    fn has_b(&self) -> bool {
        self.nonlocal.iter().any(|t| t.coeff != 0.0)
    }
    fn has_c(&self) -> bool {
        self.time.iter().any(|t| t.coeff != 0.0)
    }

    /// First construction case whose hypothesis the coefficients satisfy.
    pub fn auto_case(&self) -> u8 {
        if self.has_a() && self.has_b() {
            1
        } else if self.has_a() && self.has_c() {
            2
        } else if self.has_b() {
            3
        } else {
            4
        }
    }
}

// ---------------------------------------------------------------------------
// Cauchy kernels ∂^r v = ±v

/// 1D solution of v^{(r)} = sign·v with v^{(β)}(0) = 1 for β < r.
#[derive(Debug, Clone)]
pub struct OdeKernel {
    pub r: usize,
    pub sign: f64,
    comp: DMatrix<f64>,
}

impl OdeKernel {
    pub fn new(r: usize, sign: f64) -> Result<Self> {
        if r == 0 || sign.abs() != 1.0 {
            return Err(Error::Config(format!("ode kernel needs r >= 1 and sign ±1 (r = {r}, sign = {sign})")));
        }
        let mut comp = DMatrix::zeros(r, r);
        for i in 0..r - 1 {
            comp[(i, i + 1)] = 1.0;
        }
        comp[(r - 1, 0)] = sign;
        Ok(OdeKernel { r, sign, comp })
    }

    /// ∂^j v(0).
    pub fn jet(&self, j: usize) -> f64 {
        if (j / self.r) % 2 == 1 {
            self.sign
        } else {
            1.0
        }
    }

    /// (v, v', ..., v^{(r-1)}) at x.
    pub fn state(&self, x: f64) -> DVector<f64> {
        (&self.comp * x).exp() * DVector::from_element(self.r, 1.0)
    }

    pub fn deriv(&self, x: f64, j: usize) -> f64 {
        let st = self.state(x);
        let q = j / self.r;
        let v = st[j % self.r];
        if q % 2 == 1 {
            self.sign * v
        } else {
            v
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.state(x)[0]
    }
}

/// Product of 1D kernels: the first component carries `sign`, the others +1,
/// so ∂^r v = sign·v for the multi-index r.
#[derive(Debug, Clone)]
pub struct OdeProduct {
    pub kernels: Vec<OdeKernel>,
}

pub fn ode_kernel(r: &[usize], sign: f64) -> Result<OdeProduct> {
    if r.is_empty() {
        return Err(Error::Config("empty multi-index".into()));
    }
    let kernels = r.iter().enumerate().map(|(i, &ri)| OdeKernel::new(ri, if i == 0 { sign } else { 1.0 })).collect::<Result<_>>()?;
    Ok(OdeProduct { kernels })
}

impl OdeProduct {
    pub fn jet(&self, beta: &[usize]) -> f64 {
        self.kernels.iter().zip(beta).map(|(k, &b)| k.jet(b)).product()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.kernels.iter().zip(x).map(|(k, &xi)| k.value(xi)).product()
    }

    pub fn deriv(&self, x: &[f64], beta: &[usize]) -> f64 {
        self.kernels.iter().zip(x).zip(beta).map(|((k, &xi), &b)| k.deriv(xi, b)).product()
    }
}

// ---------------------------------------------------------------------------
// truncated Taylor arithmetic

fn t_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n).map(|k| (0..=k).map(|i| a.get(i).unwrap_or(&0.0) * b.get(k - i).unwrap_or(&0.0)).sum()).collect()
}

fn t_powf(g: &[f64], p: f64, n: usize) -> Vec<f64> {
    let mut f = vec![0.0; n + 1];
    f[0] = g[0].powf(p);
    for k in 1..=n {
        let mut acc = 0.0;
        for j in 1..=k.min(g.len() - 1) {
            acc += ((p + 1.0) * j as f64 - k as f64) * g[j] * f[k - j];
        }
        f[k] = acc / (k as f64 * g[0]);
    }
    f
}

fn t_lin(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Taylor coefficients of (1 - z²)^s Σ c_i P_i^{(s,β)}(2z² - 1) at z0.
fn eigen_taylor(pair: &EigenPair, z0: f64, n: usize) -> Vec<f64> {
    let (a, b) = (pair.basis.s, pair.basis.n as f64 / 2.0 - 1.0);
    let mut u = vec![0.0; n + 1];
    u[0] = 2.0 * z0 * z0 - 1.0;
    if n >= 1 {
        u[1] = 4.0 * z0;
    }
    if n >= 2 {
        u[2] = 2.0;
    }
    let one: Vec<f64> = (0..=n).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let mut sum: Vec<f64> = one.iter().map(|v| v * pair.coeffs[0]).collect();
    if pair.coeffs.len() > 1 {
        let mut p0 = one.clone();
        // P_1 = (a+1) + (a+b+2)(u-1)/2
        let mut p1 = t_lin(a + 1.0 - 0.5 * (a + b + 2.0), &one, 0.5 * (a + b + 2.0), &u);
        sum = t_lin(1.0, &sum, pair.coeffs[1], &p1);
        for k in 2..pair.coeffs.len() {
            let kf = k as f64;
            let c = 2.0 * kf + a + b;
            let a1 = 2.0 * kf * (kf + a + b) * (c - 2.0);
            let lin = t_lin((c - 1.0) * c * (c - 2.0), &u, (c - 1.0) * (a * a - b * b), &one);
            let a3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * c;
            let p2 = t_lin(1.0 / a1, &t_mul(&lin, &p1, n), -a3 / a1, &p0);
            sum = t_lin(1.0, &sum, pair.coeffs[k], &p2);
            p0 = p1;
            p1 = p2;
        }
    }
    let g = [1.0 - z0 * z0, -2.0 * z0, -1.0];
    t_mul(&t_powf(&g, a, n), &sum, n)
}

// ---------------------------------------------------------------------------
// profiles

/// First Dirichlet eigenpair of (-Δ)^s in B₁ (Jacobi basis, closed-form energies).
#[derive(Debug, Clone)]
pub struct EigenProfile {
    pub s: f64,
    pub n: usize,
    pub lambda_star: f64,
    pub pair: EigenPair,
}

pub const PROFILE_BASIS: usize = 32;

impl EigenProfile {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        let mut ef = EnergyForm::new(n, s)?;
        ef.method = EnergyMethod::Exact;
        let sys = ef.assemble(&RadialBasis::new(n, s, PROFILE_BASIS, BasisFamily::Jacobi))?;
        let pair = first_eigenpair(&sys)?;
        Ok(EigenProfile { s, n, lambda_star: pair.lambda1, pair })
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.pair.eval(z)
    }

    /// d^k φ̃(z0)/dz^k for k ≤ kmax (1D).
    pub fn derivs(&self, z0: f64, kmax: usize) -> Vec<f64> {
        eigen_taylor(&self.pair, z0, kmax).iter().enumerate().map(|(k, c)| c * factorial(k)).collect()
    }
}

/// The s-harmonic function of B₁ with the fixed exterior bump datum.
#[derive(Debug, Clone)]
pub struct BumpProfile {
    pub ord: FracOrder,
    pub n: usize,
    pub gamma: f64,
}

impl BumpProfile {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        let ord = FracOrder::new(s)?;
        Ok(BumpProfile { ord, n, gamma: poisson_gamma_default(n, &ord) })
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        harmonic_bump_with(z, self.n, &self.ord, self.gamma).unwrap_or(f64::NAN)
    }

    /// Derivatives at an interior point of the line, from the Poisson representation.
    pub fn derivs(&self, z0: f64, kmax: usize) -> Vec<f64> {
        let s = self.ord.s;
        let inner: Vec<f64> = (0..=kmax)
            .map(|k| {
                let sg = if k % 2 == 0 { 1.0 } else { -1.0 };
                let w = |rho: f64| {
                    bump_profile(rho) * ((rho - 1.0) * (rho + 1.0)).powf(-s) * ((rho - z0).powi(-(k as i32) - 1) + sg * (rho + z0).powi(-(k as i32) - 1))
                };
                tanh_sinh(|rho, _, _| w(rho), 2.0, 3.0, 7)
            })
            .collect();
        let g = [1.0 - z0 * z0, -2.0 * z0, -1.0];
        t_mul(&t_powf(&g, s, kmax), &inner, kmax).iter().enumerate().map(|(k, c)| self.gamma * c * factorial(k)).collect()
    }
}

// ---------------------------------------------------------------------------
// factors and blocks

#[derive(Debug, Clone)]
pub enum FactorKind {
    /// v̄(scale·z) with v̄ an ODE kernel
    Ode { kernel: OdeKernel, scale: f64 },
    /// e^{rate·z}
    Exp { rate: f64 },
    /// φ̃((z + center)/ω)
    Eigen { profile: Arc<EigenProfile>, center: Vec<f64>, omega: f64 },
    /// harmonic bump at z + center
    Bump { profile: Arc<BumpProfile>, center: Vec<f64> },
    /// E_{α,1}(λ(t-a)^α), continued by 1 below a
    Ml { p: MLParams },
}

#[derive(Debug, Clone)]
pub struct Factor {
    /// first variable index and number of variables
    pub start: usize,
    pub dims: usize,
    pub kind: FactorKind,
}

impl Factor {
    pub fn eval(&self, z: &[f64]) -> f64 {
        match &self.kind {
            FactorKind::Ode { kernel, scale } => kernel.value(scale * z[0]),
            FactorKind::Exp { rate } => (rate * z[0]).exp(),
            FactorKind::Eigen { profile, center, omega } => {
                let w: Vec<f64> = z.iter().zip(center).map(|(a, c)| (a + c) / omega).collect();
                profile.eval(&w)
            }
            FactorKind::Bump { profile, center } => {
                let w: Vec<f64> = z.iter().zip(center).map(|(a, c)| a + c).collect();
                profile.eval(&w)
            }
            FactorKind::Ml { p } => ml_solution(p, z[0]).unwrap_or(f64::NAN),
        }
    }

    /// Derivatives at the origin up to `kmax` (1D factors only).
    pub fn derivs(&self, kmax: usize) -> Result<Vec<f64>> {
        if self.dims != 1 {
            return Err(Error::Unsupported("jets of two-dimensional radial factors".into()));
        }
        Ok(match &self.kind {
            FactorKind::Ode { kernel, scale } => (0..=kmax).map(|j| scale.powi(j as i32) * kernel.jet(j)).collect(),
            FactorKind::Exp { rate } => (0..=kmax).map(|j| rate.powi(j as i32)).collect(),
            FactorKind::Eigen { profile, center, omega } => {
                profile.derivs(center[0] / omega, kmax).iter().enumerate().map(|(k, d)| d * omega.powi(-(k as i32))).collect()
            }
            FactorKind::Bump { profile, center } => profile.derivs(center[0], kmax),
            FactorKind::Ml { p } => (0..=kmax).map(|j| ml_solution_derivative(p, 0.0, j)).collect::<Result<_>>()?,
        })
    }
}

/// Free parameters of one block. `xbar` has one entry per scalar x variable,
/// `tbar` one per time term, `e`/`big_y` one vector per nonlocal term (e is
/// a unit direction; the block places it on the sphere of radius ω_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub xbar: Vec<f64>,
    pub tbar: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub big_y: Vec<Vec<f64>>,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub r: f64,
    pub x: (f64, f64),
    pub t: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct BuildingBlock {
    pub case: u8,
    /// the harmonic-bump / exponential-time construction
    pub exponential_time: bool,
    /// overall sign applied to the operator before building
    pub sign: f64,
    pub params: BlockParams,
    pub window: Window,
    pub factors: Vec<Factor>,
    pub lambdas: Vec<f64>,
    pub omegas: Vec<f64>,
    /// λ_M (cases 1, 3) or λ (case 2)
    pub lambda_top: f64,
    pub initial_points: Vec<f64>,
}

impl BuildingBlock {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.factors.iter().map(|f| f.eval(&z[f.start..f.start + f.dims])).product()
    }

    /// Derivatives at 0 for every scalar variable, orders 0..=kmax.
    pub fn var_jets(&self, kmax: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![Vec::new(); self.factors.iter().map(|f| f.start + f.dims).max().unwrap_or(0)];
        for f in &self.factors {
            out[f.start] = f.derivs(kmax)?;
        }
        Ok(out)
    }

    /// ∂^ι w(0).
    pub fn jet(&self, iota: &[usize]) -> Result<f64> {
        let k = iota.iter().copied().max().unwrap_or(0);
        let vj = self.var_jets(k)?;
        Ok(iota.iter().enumerate().map(|(v, &i)| vj[v][i]).product())
    }

    pub fn field(&self) -> Field {
        let b = self.clone();
        let n = self.factors.iter().map(|f| f.start + f.dims).max().unwrap_or(0);
        Field::new(n, f64::INFINITY, format!("block case {}", self.case), Arc::new(move |z: &[f64]| b.eval(z)))
    }
}

/// Operator plus the eigen and bump profiles its blocks need.
#[derive(Debug, Clone)]
pub struct BlockContext {
    pub op: OperatorSpec,
    pub eigen: Vec<Arc<EigenProfile>>,
    pub bumps: Vec<Arc<BumpProfile>>,
}

fn last_nonzero(v: &[f64]) -> Option<usize> {
    v.iter().rposition(|&c| c != 0.0)
}

fn first_nonzero(v: &[f64]) -> Option<usize> {
    v.iter().position(|&c| c != 0.0)
}

impl BlockContext {
    pub fn new(op: OperatorSpec) -> Result<Self> {
        op.validate()?;
        let eigen = op.nonlocal.iter().map(|t| EigenProfile::new(t.dim, t.s).map(Arc::new)).collect::<Result<_>>()?;
        let bumps = op.nonlocal.iter().map(|t| BumpProfile::new(t.dim, t.s).map(Arc::new)).collect::<Result<_>>()?;
        Ok(BlockContext { op, eigen, bumps })
    }

    fn coeffs(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            self.op.local.iter().map(|t| t.coeff).collect(),
            self.op.nonlocal.iter().map(|t| t.coeff).collect(),
            self.op.time.iter().map(|t| t.coeff).collect(),
        )
    }

    /// Whether `case` uses the harmonic bump with exponential time factors.
    fn exponential_time(&self, case: u8) -> Result<bool> {
        let op = &self.op;
        match case {
            1 if op.has_a() && op.has_b() => Ok(false),
            2 if op.has_a() && op.has_c() => Ok(false),
            3 if !op.has_a() && op.has_b() => Ok(!op.has_c()),
            4 if !op.has_a() && op.has_b() && !op.has_c() => Ok(true),
            4 => Err(Error::Unsupported("case 4 with active time terms needs a time kernel that is not implemented".into())),
            _ => Err(Error::Config(format!("case {case} does not match the operator coefficients"))),
        }
    }

    /// Sign σ so that σ·Λ has the orientation each case assumes.
    fn orientation(&self, case: u8) -> f64 {
        let (_, b, c) = self.coeffs();
        let sg = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
        match case {
            1 => sg(b[last_nonzero(&b).unwrap()]),
            2 => sg(c[last_nonzero(&c).unwrap()]),
            3 if self.op.has_c() => -sg(b[last_nonzero(&b).unwrap()]),
            _ => 1.0,
        }
    }

    /// Parameter windows for `case`.
    pub fn window(&self, case: u8) -> Result<Window> {
        let exp_time = self.exponential_time(case)?;
        let sigma = self.orientation(case);
        let (a, b, c) = self.coeffs();
        let lam: Vec<f64> = self.eigen.iter().map(|p| p.lambda_star).collect();
        Ok(match case {
            1 => {
                let i1 = first_nonzero(&a).unwrap();
                let m = last_nonzero(&b).unwrap();
                let r1: usize = self.op.local[i1].order.iter().sum();
                let num: f64 = (0..m).map(|j| (sigma * b[j]).abs() * lam[j]).sum::<f64>() + c.iter().map(|v| v.abs()).sum::<f64>();
                let r = (num / a[i1].abs()).powf(1.0 / r1 as f64);
                Window { r, x: (r + 1.0, r + 2.0), t: (0.5, 1.0) }
            }
            2 => {
                let i1 = first_nonzero(&a).unwrap();
                let l = last_nonzero(&c).unwrap();
                let r1: usize = self.op.local[i1].order.iter().sum();
                let num: f64 = (0..l).map(|h| c[h].abs()).sum::<f64>() + b.iter().zip(&lam).map(|(v, l)| v.abs() * l).sum::<f64>();
                let r = (num / a[i1].abs()).powf(1.0 / r1 as f64);
                Window { r, x: (r + 1.0, r + 2.0), t: (0.5, 1.0) }
            }
            _ if exp_time => Window { r: 0.0, x: (1.0, 2.0), t: (1.0, 2.0) },
            _ => {
                let m = last_nonzero(&b).unwrap();
                let h1 = first_nonzero(&c).unwrap();
                let r = (0..m).map(|j| b[j].abs() * lam[j]).sum::<f64>() / c[h1].abs();
                Window { r, x: (1.0, 2.0), t: (r + 1.0, r + 2.0) }
            }
        })
    }

    /// Seeded draw inside the windows with e_j·Y_j < 0.
    pub fn draw(&self, case: u8, rng: &mut ChaCha8Rng, eps: f64) -> Result<BlockParams> {
        let w = self.window(case)?;
        let xbar = (0..self.op.x_dim()).map(|_| rng.gen_range(w.x.0..w.x.1)).collect();
        let tbar = (0..self.op.time.len()).map(|_| rng.gen_range(w.t.0..w.t.1)).collect();
        let mut e = Vec::new();
        let mut big_y = Vec::new();
        for t in &self.op.nonlocal {
            let dir: Vec<f64> = if t.dim == 1 {
                vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }]
            } else {
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                vec![th.cos(), th.sin()]
            };
            // Y = -|Y| (cos β e + sin β e⊥) with |β| < π/3
            let mag: f64 = rng.gen_range(0.5..1.5);
            let yv = if t.dim == 1 {
                vec![-mag * dir[0]]
            } else {
                let beta: f64 = rng.gen_range(-1.0..1.0);
                let (cb, sb) = (beta.cos(), beta.sin());
                vec![-mag * (cb * dir[0] - sb * dir[1]), -mag * (cb * dir[1] + sb * dir[0])]
            };
            e.push(dir);
            big_y.push(yv);
        }
        Ok(BlockParams { xbar, tbar, e, big_y, eps })
    }

    fn check_params(&self, w: &Window, p: &BlockParams) -> Result<()> {
        let inside = |v: f64, (lo, hi): (f64, f64)| v > lo && v < hi;
        if p.xbar.len() != self.op.x_dim() || p.xbar.iter().any(|&v| !inside(v, w.x)) {
            return Err(Error::Domain(format!("x̄ outside ({}, {})", w.x.0, w.x.1)));
        }
        if p.tbar.len() != self.op.time.len() || p.tbar.iter().any(|&v| !inside(v, w.t)) {
            return Err(Error::Domain(format!("t̄ outside ({}, {})", w.t.0, w.t.1)));
        }
        if p.e.len() != self.op.nonlocal.len() || p.big_y.len() != self.op.nonlocal.len() {
            return Err(Error::Domain("one (e, Y) pair per nonlocal term".into()));
        }
        for ((e, y), t) in p.e.iter().zip(&p.big_y).zip(&self.op.nonlocal) {
            if e.len() != t.dim || y.len() != t.dim || (norm(e) - 1.0).abs() > 1e-12 {
                return Err(Error::Domain("e must be a unit vector of the block dimension".into()));
            }
            if e.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() >= 0.0 {
                return Err(Error::Domain("e·Y must be negative".into()));
            }
        }
        if !(p.eps > 0.0) {
            return Err(Error::Domain("ε must be positive".into()));
        }
        Ok(())
    }

    pub fn build(&self, case: u8, p: &BlockParams) -> Result<BuildingBlock> {
        let exp_time = self.exponential_time(case)?;
        let w = self.window(case)?;
        self.check_params(&w, p)?;
        let sigma = self.orientation(case);
        let (a, b, c) = self.coeffs();
        let (a, b, c): (Vec<f64>, Vec<f64>, Vec<f64>) =
            (a.iter().map(|v| sigma * v).collect(), b.iter().map(|v| sigma * v).collect(), c.iter().map(|v| sigma * v).collect());
        let lam: Vec<f64> = self.eigen.iter().map(|p| p.lambda_star).collect();
        let mut factors = Vec::new();

        // x factors and Σ|a_i| x̄^{r_i}
        let mut xi = 0usize;
        let mut ax = 0.0;
        for (i, t) in self.op.local.iter().enumerate() {
            let mono: f64 = t.order.iter().enumerate().map(|(l, &r)| p.xbar[xi + l].powi(r as i32)).product();
            ax += a[i].abs() * mono;
            for (l, &r) in t.order.iter().enumerate() {
                let kind = if case <= 2 && a[i] != 0.0 {
                    let sg = if l == 0 { -a[i].signum() } else { 1.0 };
                    FactorKind::Ode { kernel: OdeKernel::new(r, sg)?, scale: p.xbar[xi + l] }
                } else {
                    FactorKind::Exp { rate: p.xbar[xi + l] }
                };
                factors.push(Factor { start: xi + l, dims: 1, kind });
            }
            xi += t.order.len();
        }

        let nl = self.op.nonlocal.len();
        let mut omegas = vec![1.0; nl];
        let mut lambdas = lam.clone();
        let mut mlam = vec![1.0; self.op.time.len()];
        let tb: Vec<f64> = p.tbar.clone();
        let lambda_top;
        match case {
            1 => {
                let m = last_nonzero(&b).unwrap();
                let rest: f64 = (0..m).map(|j| b[j] * lam[j]).sum::<f64>() + c.iter().zip(&tb).map(|(c, t)| c * t).sum::<f64>();
                let lm = (ax - rest) / b[m];
                if !(lm > 0.0) {
                    return Err(Error::Domain(format!("λ_M = {lm} is not positive")));
                }
                omegas[m] = (lam[m] / lm).powf(1.0 / (2.0 * self.op.nonlocal[m].s));
                lambdas[m] = lm;
                lambda_top = lm;
            }
            2 => {
                let l = last_nonzero(&c).unwrap();
                let num = ax - b.iter().zip(&lam).map(|(b, l)| b * l).sum::<f64>() - (0..l).map(|h| c[h] * tb[h]).sum::<f64>();
                let lm = num / (c[l] * tb[l]);
                if !(lm > 0.0) {
                    return Err(Error::Domain(format!("λ = {lm} is not positive")));
                }
                mlam[l] = lm;
                lambda_top = lm;
            }
            _ if exp_time => lambda_top = 0.0,
            _ => {
                let m = last_nonzero(&b).unwrap();
                let num = -(0..m).map(|j| b[j] * lam[j]).sum::<f64>() - c.iter().zip(&tb).map(|(c, t)| c.abs() * t).sum::<f64>();
                let lm = num / b[m];
                if !(lm > 0.0) {
                    return Err(Error::Domain(format!("λ_M = {lm} is not positive")));
                }
                omegas[m] = (lam[m] / lm).powf(1.0 / (2.0 * self.op.nonlocal[m].s));
                lambdas[m] = lm;
                lambda_top = lm;
            }
        }

        // y factors
        let mut yi = self.op.x_dim();
        for (j, t) in self.op.nonlocal.iter().enumerate() {
            let om = omegas[j];
            let center: Vec<f64> = p.e[j].iter().zip(&p.big_y[j]).map(|(e, y)| om * e + p.eps * y).collect();
            if norm(&center) >= om {
                return Err(Error::Domain(format!("e + εY leaves the ball of radius {om}")));
            }
            let kind = if exp_time {
                if norm(&center) >= 1.0 {
                    return Err(Error::Domain("e + εY leaves B₁".into()));
                }
                FactorKind::Bump { profile: self.bumps[j].clone(), center }
            } else {
                FactorKind::Eigen { profile: self.eigen[j].clone(), center, omega: om }
            };
            factors.push(Factor { start: yi, dims: t.dim, kind });
            yi += t.dim;
        }

        // t factors
        let mut initial_points = Vec::new();
        for (h, t) in self.op.time.iter().enumerate() {
            let start = yi + h;
            if exp_time || (case == 3 && c[h] == 0.0) {
                factors.push(Factor { start, dims: 1, kind: FactorKind::Exp { rate: tb[h] } });
                initial_points.push(f64::NEG_INFINITY);
                continue;
            }
            let tbar_h = tb[h].powf(1.0 / t.alpha);
            let ah = -p.eps / tbar_h;
            let rate = if case == 3 { c[h].signum() * tb[h] } else { mlam[h] * tb[h] };
            factors.push(Factor { start, dims: 1, kind: FactorKind::Ml { p: MLParams::new(t.alpha, rate, ah) } });
            initial_points.push(ah);
        }

        Ok(BuildingBlock { case, exponential_time: exp_time, sign: sigma, params: p.clone(), window: w, factors, lambdas, omegas, lambda_top, initial_points })
    }
}

/// Build a block and certify Λw ≈ 0 near the origin with the independent
/// operator oracles.
pub fn build_block(ctx: &BlockContext, case: u8, params: &BlockParams, seed: u64) -> Result<BuildingBlock> {
    let blk = ctx.build(case, params)?;
    let rep = block_residual(ctx, &blk, RESIDUAL_SAMPLES, seed)?;
    if rep.max_rel > RESIDUAL_TOL {
        return Err(Error::Fit(format!("block residual {:.3e} exceeds {RESIDUAL_TOL:e}", rep.max_rel)));
    }
    Ok(blk)
}

pub const RESIDUAL_SAMPLES: usize = 20;
pub const RESIDUAL_TOL: f64 = 1e-4;

// ---------------------------------------------------------------------------
// residual oracle

/// Fornberg weights for the m-th derivative at x0 on nodes xs.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Central finite difference of order m with 2(m/2 + 4) + 1 nodes.
pub fn fd_derivative(f: &dyn Fn(f64) -> f64, x: f64, m: usize, h: f64) -> f64 {
    let hw = m / 2 + 4;
    let xs: Vec<f64> = (0..=2 * hw).map(|k| x + (k as f64 - hw as f64) * h).collect();
    let w = fornberg_weights(x, &xs, m);
    xs.iter().zip(&w).map(|(xk, wk)| wk * f(*xk)).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_rel: f64,
    pub samples: usize,
}

/// max over samples of |Λw| / (Σ|terms| ∨ |w|Σ|coeff|), each term applied
/// factorwise: FD for ∂^r, the singular integral for (-Δ)^s, Gauss–Jacobi
/// Caputo for D^α.
pub fn block_residual(ctx: &BlockContext, blk: &BuildingBlock, samples: usize, seed: u64) -> Result<ResidualReport> {
    let op = &ctx.op;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = op.dim();
    let xd = op.x_dim();
    let yd = op.y_dim();
    let ycut: Vec<f64> = blk
        .factors
        .iter()
        .filter_map(|f| match &f.kind {
            FactorKind::Eigen { center, omega, .. } => Some(0.25 * (omega - norm(center))),
            FactorKind::Bump { center, .. } => Some(0.25 * (1.0 - norm(center))),
            _ => None,
        })
        .collect();
    let yrad = ycut.iter().copied().fold(0.1, f64::min);
    let pts: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let mut z = vec![0.0; d];
            for v in z.iter_mut().take(xd) {
                *v = rng.gen_range(-0.1..0.1);
            }
            for v in z.iter_mut().skip(xd).take(yd) {
                *v = rng.gen_range(-yrad..yrad) / (yd as f64).sqrt();
            }
            for (h, v) in z.iter_mut().skip(xd + yd).enumerate() {
                let a = blk.initial_points[h];
                let lo = if a.is_finite() { 0.5 * a } else { -0.1 };
                *v = rng.gen_range(lo..0.1);
            }
            z
        })
        .collect();
    let coeff_sum: f64 = op.local.iter().map(|t| t.coeff.abs()).sum::<f64>()
        + op.nonlocal.iter().map(|t| t.coeff.abs()).sum::<f64>()
        + op.time.iter().map(|t| t.coeff.abs()).sum::<f64>();
    let rels = par::map(pts.len(), |k| -> Result<f64> {
        let z = &pts[k];
        let vals: Vec<f64> = blk.factors.iter().map(|f| f.eval(&z[f.start..f.start + f.dims])).collect();
        let w: f64 = vals.iter().product();
        let others = |skip: &[usize]| -> f64 { vals.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, v)| v).product() };
        let mut terms = Vec::new();
        // local terms: factors are one per scalar x variable
        let mut xi = 0usize;
        for t in &op.local {
            if t.coeff != 0.0 {
                let mut prod = 1.0;
                for (l, &r) in t.order.iter().enumerate() {
                    let f = &blk.factors[xi + l];
                    let g = |s: f64| f.eval(&[s]);
                    prod *= fd_derivative(&g, z[xi + l], r, 0.02);
                }
                let idx: Vec<usize> = (xi..xi + t.order.len()).collect();
                terms.push(t.coeff * prod * others(&idx));
            }
            xi += t.order.len();
        }
        // nonlocal terms
        let nx = xd;
        for (j, t) in op.nonlocal.iter().enumerate() {
            let fi = nx + j;
            let f = &blk.factors[fi];
            let zy = &z[f.start..f.start + f.dims];
            if t.coeff == 0.0 {
                continue;
            }
            let ord = FracOrder::new(t.s)?;
            let lap = match &f.kind {
                FactorKind::Eigen { profile, center, omega } => {
                    let at: Vec<f64> = zy.iter().zip(center).map(|(a, c)| a + c).collect();
                    let om = *omega;
                    let prof = profile.clone();
                    let g = move |y: &[f64]| {
                        let w: Vec<f64> = y.iter().map(|v| v / om).collect();
                        prof.eval(&w)
                    };
                    let o = FlOptions { support_radius: Some(om), ..Default::default() };
                    frac_laplacian_point(&g, &at, &ord, &o)?
                }
                FactorKind::Bump { profile, center } => {
                    let at: Vec<f64> = zy.iter().zip(center).map(|(a, c)| a + c).collect();
                    let prof = profile.clone();
                    let inner = move |y: &[f64]| if norm(y) < 1.0 { prof.eval(y) } else { 0.0 };
                    let ordc = ord;
                    let outer = move |y: &[f64]| bump_datum(y, &ordc);
                    let oi = FlOptions { support_radius: Some(1.0), ..Default::default() };
                    let oo = FlOptions { support_radius: Some(3.0), ..Default::default() };
                    frac_laplacian_point(&inner, &at, &ord, &oi)? + frac_laplacian_point(&outer, &at, &ord, &oo)?
                }
                _ => return Err(Error::Config("nonlocal factor of unexpected kind".into())),
            };
            terms.push(t.coeff * lap * others(&[fi]));
        }
        // time terms
        for (h, t) in op.time.iter().enumerate() {
            let fi = nx + op.nonlocal.len() + h;
            if t.coeff == 0.0 {
                continue;
            }
            let f = &blk.factors[fi];
            let dv = match &f.kind {
                FactorKind::Ml { p } => {
                    let cp = CaputoParams::new(t.alpha, p.a)?;
                    caputo_derivative(&SmoothFn::mittag_leffler(*p), &cp, z[f.start], 64)?
                }
                _ => return Err(Error::Config("time factor of unexpected kind".into())),
            };
            terms.push(t.coeff * dv * others(&[fi]));
        }
        let total: f64 = terms.iter().sum();
        let scale = terms.iter().map(|v| v.abs()).sum::<f64>().max(w.abs() * coeff_sum);
        Ok(if scale == 0.0 { 0.0 } else { total.abs() / scale })
    });
    let mut max_rel = 0.0f64;
    for r in rels {
        max_rel = max_rel.max(r?);
    }
    Ok(ResidualReport { max_rel, samples })
}

// ---------------------------------------------------------------------------
// dictionaries and jets

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DictOptions {
    pub case: Option<u8>,
    pub eps: f64,
    pub seed: u64,
    /// dictionary size as a multiple of K'
    pub oversample: usize,
    /// relative singular-value cutoff for the jet solve
    pub rank_tol: f64,
}

impl Default for DictOptions {
    fn default() -> Self {
        DictOptions { case: None, eps: 0.05, seed: 7, oversample: 4, rank_tol: SMIN_TOL }
    }
}

impl DictOptions {
    /// Settings for monomial ladders on Caputo operators: the (x̄, a) family is
    /// nearly collinear, so the dictionary is larger and the solve keeps
    /// directions down to 1e-12.
    pub fn ladder() -> Self {
        DictOptions { eps: 0.25, oversample: 8, rank_tol: 1e-12, ..Default::default() }
    }
}

/// `count` blocks from seeded draws (drawn in sequence, built in parallel).
pub fn random_dictionary(ctx: &BlockContext, count: usize, o: &DictOptions) -> Result<Vec<BuildingBlock>> {
    let case = o.case.unwrap_or_else(|| ctx.op.auto_case());
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let params = (0..count).map(|_| ctx.draw(case, &mut rng, o.eps)).collect::<Result<Vec<_>>>()?;
    par::map(count, |i| ctx.build(case, &params[i])).into_iter().collect()
}

/// `count` copies of one block: the rank-one control.
pub fn degenerate_dictionary(ctx: &BlockContext, count: usize, o: &DictOptions) -> Result<Vec<BuildingBlock>> {
    let case = o.case.unwrap_or_else(|| ctx.op.auto_case());
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let p = ctx.draw(case, &mut rng, o.eps)?;
    let b = ctx.build(case, &p)?;
    Ok(vec![b; count])
}

/// Multi-indices of length `dim` with |ι| ≤ k, graded then lexicographic.
pub fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=k {
        let mut cur = vec![0usize; dim];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, left: usize) {
    if cur.is_empty() {
        if left == 0 {
            out.push(vec![]);
        }
        return;
    }
    if pos == cur.len() - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for v in (0..=left).rev() {
        cur[pos] = v;
        fill(out, cur, pos + 1, left - v);
    }
    cur[pos] = 0;
}

/// K' = C(K + dim, dim).
pub fn kprime(dim: usize, k: usize) -> usize {
    (1..=dim).fold(1usize, |acc, i| acc * (k + i) / i)
}

#[derive(Debug, Clone)]
pub struct JetMatrix {
    pub k: usize,
    pub dim: usize,
    pub indices: Vec<Vec<usize>>,
    /// rows: multi-indices, columns: blocks
    pub entries: DMatrix<f64>,
}

impl JetMatrix {
    pub fn kprime(&self) -> usize {
        self.indices.len()
    }

    pub fn row_of(&self, iota: &[usize]) -> Option<usize> {
        self.indices.iter().position(|r| r == iota)
    }
}

pub fn jet_matrix(blocks: &[BuildingBlock], k: usize) -> Result<JetMatrix> {
    if blocks.is_empty() {
        return Err(Error::Config("empty dictionary".into()));
    }
    let dim = blocks[0].factors.iter().map(|f| f.start + f.dims).max().unwrap_or(0);
    for b in blocks {
        for (h, &a) in b.initial_points.iter().enumerate() {
            if !(a < 0.0) {
                return Err(Error::Domain(format!("time factor {h} is not smooth at 0 (initial point {a})")));
            }
        }
    }
    let indices = multi_indices(dim, k);
    let cols = par::map(blocks.len(), |c| blocks[c].var_jets(k));
    let mut entries = DMatrix::zeros(indices.len(), blocks.len());
    for (c, vj) in cols.into_iter().enumerate() {
        let vj = vj?;
        for (r, iota) in indices.iter().enumerate() {
            let v: f64 = iota.iter().enumerate().map(|(v, &i)| vj[v][i]).product();
            if !v.is_finite() {
                return Err(Error::Overflow(format!("jet entry {iota:?} of block {c}")));
            }
            entries[(r, c)] = v;
        }
    }
    Ok(JetMatrix { k, dim, indices, entries })
}

/// Dot product with error-free transforms (about twice working precision).
pub fn dot_compensated(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (x, y) in a.into_iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(y, -p);
        let t = s + p;
        let bb = t - s;
        let se = (s - (t - bb)) + (p - bb);
        s = t;
        c += se + pe;
    }
    s + c
}

/// Power of two nearest 1/x, so scaling is exact.
fn pow2_inverse(x: f64) -> f64 {
    2f64.powi(-(x.log2().round() as i32))
}

fn column_scales(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols())
        .map(|c| {
            let mx = m.column(c).amax();
            if mx > 0.0 {
                pow2_inverse(mx)
            } else {
                1.0
            }
        })
        .collect()
}

fn row_scales(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .map(|r| {
            let mx = m.row(r).amax();
            if mx > 0.0 {
                pow2_inverse(mx)
            } else {
                1.0
            }
        })
        .collect()
}

fn equilibrate(m: &DMatrix<f64>, rows: bool) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let cs = column_scales(m);
    let mut a = m.clone();
    for (c, s) in cs.iter().enumerate() {
        a.column_mut(c).scale_mut(*s);
    }
    let rs = if rows { row_scales(&a) } else { vec![1.0; a.nrows()] };
    for (r, s) in rs.iter().enumerate() {
        a.row_mut(r).scale_mut(*s);
    }
    (a, rs, cs)
}

pub const SMIN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct SpanReport {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// σ_min / σ_max of the equilibrated matrix
    pub smin: f64,
    pub full: bool,
}

/// Numerical rank after column normalization and row equilibration.
pub fn span_rank(jm: &JetMatrix) -> SpanReport {
    span_rank_tol(jm, SMIN_TOL)
}

pub fn span_rank_tol(jm: &JetMatrix, tol: f64) -> SpanReport {
    let (a, _, _) = equilibrate(&jm.entries, true);
    let sv = a.singular_values();
    let smax = sv.max();
    let smin = if sv.is_empty() || smax == 0.0 { 0.0 } else { sv.min() / smax };
    let rank = sv.iter().filter(|&&s| s > tol * smax).count();
    let rows = jm.entries.nrows();
    SpanReport { rows, cols: jm.entries.ncols(), rank, smin, full: rank == rows && jm.entries.ncols() >= rows }
}

#[derive(Debug, Clone, Serialize)]
pub struct JetSolve {
    pub coeffs: Vec<f64>,
    /// ‖J c - target‖_∞
    pub abs_residual: f64,
    /// max_κ |(J c - target)_κ| / max(1, max_b |J_κb|)
    pub residual: f64,
    pub span: SpanReport,
}

/// Minimum-norm solution of J c = target (equilibrated, SVD pseudo-inverse).
pub fn solve_jet(jm: &JetMatrix, target: &[f64]) -> Result<JetSolve> {
    solve_jet_tol(jm, target, SMIN_TOL)
}

pub fn solve_jet_tol(jm: &JetMatrix, target: &[f64], tol: f64) -> Result<JetSolve> {
    let span = span_rank_tol(jm, tol);
    if !span.full {
        return Err(Error::RankDeficient { rank: span.rank, rows: span.rows });
    }
    let (a, rs, cs) = equilibrate(&jm.entries, true);
    let rhs = DVector::from_iterator(target.len(), target.iter().zip(&rs).map(|(t, s)| t * s));
    // minimum-norm solve through a^T = QR, refined with compensated residuals
    let qr = a.transpose().qr();
    let (q, rr) = (qr.q(), qr.r());
    let rt = rr.transpose();
    let solve = |b: &DVector<f64>| -> Result<DVector<f64>> {
        let w = rt.solve_lower_triangular(b).ok_or(Error::Singular)?;
        Ok(&q * w)
    };
    let resid = |y: &DVector<f64>| -> DVector<f64> {
        DVector::from_iterator(a.nrows(), (0..a.nrows()).map(|k| rhs[k] - dot_compensated(a.row(k).iter().copied(), y.iter().copied())))
    };
    let mut y = solve(&rhs)?;
    let mut r = resid(&y);
    for _ in 0..20 {
        let cand = &y + solve(&r)?;
        let rc = resid(&cand);
        if rc.amax() >= r.amax() {
            break;
        }
        y = cand;
        r = rc;
    }
    let coeffs: Vec<f64> = y.iter().zip(&cs).map(|(v, s)| v * s).collect();
    let r: Vec<f64> = (0..jm.entries.nrows()).map(|k| dot_compensated(jm.entries.row(k).iter().copied(), coeffs.iter().copied())).collect();
    let abs_residual = r.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let residual = (0..r.len()).map(|k| (r[k] - target[k]).abs() / jm.entries.row(k).amax().max(1.0)).fold(0.0, f64::max);
    Ok(JetSolve { coeffs, abs_residual, residual, span })
}

pub const JET_TOL: f64 = 1e-6;

/// Coefficients c with ∂^κ(Σ c_b w_b)(0) = [κ = ι] for |κ| ≤ K.
pub fn prescribe_jet(blocks: &[BuildingBlock], k: usize, iota: &[usize]) -> Result<JetSolve> {
    let jm = jet_matrix(blocks, k)?;
    prescribe_jet_in(&jm, iota)
}

pub fn prescribe_jet_in(jm: &JetMatrix, iota: &[usize]) -> Result<JetSolve> {
    prescribe_jet_tol(jm, iota, SMIN_TOL)
}

pub fn prescribe_jet_tol(jm: &JetMatrix, iota: &[usize], tol: f64) -> Result<JetSolve> {
    let row = jm.row_of(iota).ok_or_else(|| Error::Config(format!("multi-index {iota:?} has order above K = {}", jm.k)))?;
    let mut target = vec![0.0; jm.kprime()];
    target[row] = 1.0;
    let sol = solve_jet_tol(jm, &target, tol)?;
    if sol.residual > JET_TOL {
        return Err(Error::JetMismatch(format!("jet residual {:.3e}", sol.residual)));
    }
    Ok(sol)
}

// ---------------------------------------------------------------------------
// rescaling and approximants

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingLedger {
    pub gamma: f64,
    pub delta: f64,
    pub k0: usize,
    pub k: usize,
    pub kprime: usize,
    /// K₀δ - γ, the smallest exponent κ the remainder can carry
    pub kappa_min: f64,
    pub ok: bool,
}

/// γ = Σ ι_v / q_v, δ = min 1/q_v, K₀ = ⌈(γ+1)/δ⌉, K = K₀ + |ι| + ℓ.
pub fn scaling_ledger(op: &OperatorSpec, iota: &[usize], ell: usize) -> Result<ScalingLedger> {
    let q = op.var_orders();
    if iota.len() != q.len() {
        return Err(Error::Config(format!("multi-index has {} entries, operator has {} variables", iota.len(), q.len())));
    }
    let gamma: f64 = iota.iter().zip(&q).map(|(&i, q)| i as f64 / q).sum();
    let delta = q.iter().map(|q| 1.0 / q).fold(f64::INFINITY, f64::min);
    let k0 = (((gamma + 1.0) / delta) - 1e-12).ceil().max(0.0) as usize;
    let order: usize = iota.iter().sum();
    let k = k0 + order + ell;
    let kappa_min = k0 as f64 * delta - gamma;
    Ok(ScalingLedger { gamma, delta, k0, k, kprime: kprime(q.len(), k), kappa_min, ok: kappa_min >= 1.0 - 1e-12 })
}

/// η^{1/q_v} per variable.
pub fn scaling_factors(op: &OperatorSpec, eta: f64) -> Vec<f64> {
    op.var_orders().iter().map(|q| eta.powf(1.0 / q)).collect()
}

pub fn monomial(z: &[f64], iota: &[usize]) -> f64 {
    z.iter().zip(iota).map(|(x, &i)| x.powi(i as i32)).product()
}

pub fn multi_factorial(iota: &[usize]) -> f64 {
    iota.iter().map(|&i| factorial(i)).product()
}

/// η^{-γ} (T_η z)^ι.
pub fn rescaled_monomial(op: &OperatorSpec, iota: &[usize], eta: f64, z: &[f64]) -> Result<f64> {
    let led = scaling_ledger(op, iota, 0)?;
    let sc = scaling_factors(op, eta);
    let tz: Vec<f64> = z.iter().zip(&sc).map(|(a, b)| a * b).collect();
    Ok(eta.powf(-led.gamma) * monomial(&tz, iota))
}

/// Jet-prescribed combination for one monomial, independent of η.
#[derive(Debug, Clone)]
pub struct MonomialPlan {
    pub iota: Vec<usize>,
    pub ledger: ScalingLedger,
    pub blocks: Arc<Vec<BuildingBlock>>,
    pub coeffs: Vec<f64>,
    pub jet_residual: f64,
    pub span: SpanReport,
}

pub fn monomial_plan(ctx: &BlockContext, iota: &[usize], ell: usize, o: &DictOptions) -> Result<MonomialPlan> {
    let ledger = scaling_ledger(&ctx.op, iota, ell)?;
    let count = o.oversample.max(1) * ledger.kprime;
    let blocks = random_dictionary(ctx, count, o)?;
    let jm = jet_matrix(&blocks, ledger.k)?;
    let sol = prescribe_jet_tol(&jm, iota, o.rank_tol)?;
    Ok(MonomialPlan { iota: iota.to_vec(), ledger, blocks: Arc::new(blocks), coeffs: sol.coeffs, jet_residual: sol.residual, span: sol.span })
}

/// weight · η^{-γ} Σ c_b w_b(T_η z)
#[derive(Debug, Clone)]
pub struct ScaledPart {
    pub weight: f64,
    pub plan: Arc<MonomialPlan>,
    pub eta: f64,
}

/// A finite sum of rescaled jet-prescribed combinations.
#[derive(Debug, Clone)]
pub struct LocalApproximant {
    pub op: OperatorSpec,
    pub dim: usize,
    pub parts: Vec<ScaledPart>,
}

impl LocalApproximant {
    pub fn eval(&self, z: &[f64]) -> f64 {
        let mut total = 0.0;
        for part in &self.parts {
            let sc = scaling_factors(&self.op, part.eta);
            let tz: Vec<f64> = z.iter().zip(&sc).map(|(a, b)| a * b).collect();
            let s: f64 = part.plan.blocks.iter().zip(&part.plan.coeffs).map(|(b, c)| c * b.eval(&tz)).sum();
            total += part.weight * part.eta.powf(-part.plan.ledger.gamma) * s;
        }
        total
    }

    pub fn field(&self) -> Field {
        let me = self.clone();
        Field::new(self.dim, f64::INFINITY, "local approximant", Arc::new(move |z: &[f64]| me.eval(z)))
    }

    /// Values on the tensor grid axes[0] × ... × axes[d-1] (row-major, last
    /// axis fastest), using the product structure of the blocks.
    pub fn grid_values(&self, axes: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.dim;
        if axes.len() != d {
            return Err(Error::Config("one axis per variable".into()));
        }
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total: usize = shape.iter().product();
        let mut out = vec![0.0; total];
        for part in &self.parts {
            let sc = scaling_factors(&self.op, part.eta);
            let amp = part.weight * part.eta.powf(-part.plan.ledger.gamma);
            let tables = par::map(part.plan.blocks.len(), |bi| -> Result<Vec<Vec<f64>>> {
                let b = &part.plan.blocks[bi];
                let mut t = vec![Vec::new(); d];
                for f in &b.factors {
                    if f.dims != 1 {
                        return Err(Error::Unsupported("grid evaluation with two-dimensional radial factors".into()));
                    }
                    t[f.start] = axes[f.start].iter().map(|&x| f.eval(&[sc[f.start] * x])).collect();
                }
                Ok(t)
            });
            let tables = tables.into_iter().collect::<Result<Vec<_>>>()?;
            let contrib = par::map(total, |lin| {
                let mut idx = vec![0usize; d];
                let mut rem = lin;
                for v in (0..d).rev() {
                    idx[v] = rem % shape[v];
                    rem /= shape[v];
                }
                let mut s = 0.0;
                for (t, c) in tables.iter().zip(&part.plan.coeffs) {
                    let mut p = *c;
                    for v in 0..d {
                        p *= t[v][idx[v]];
                    }
                    s += p;
                }
                s
            });
            for (o, c) in out.iter_mut().zip(contrib) {
                *o += amp * c;
            }
        }
        Ok(out)
    }
}


/// Taylor radius of a 1D factor about the origin.
fn factor_radius(f: &Factor) -> f64 {
    match &f.kind {
        FactorKind::Ode { .. } | FactorKind::Exp { .. } => f64::INFINITY,
        FactorKind::Eigen { center, omega, .. } => omega - norm(center),
        FactorKind::Bump { center, .. } => 1.0 - norm(center),
        FactorKind::Ml { p } => -p.a,
    }
}

const SERIES_MAX: usize = 120;

impl LocalApproximant {
    /// The polynomial Σ weight · z^ι/ι! the parts are built to reproduce.
    pub fn target(&self, z: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.weight * monomial(z, &p.plan.iota) / multi_factorial(&p.plan.iota)).sum()
    }

    /// u - target on the tensor grid, summed through the jet expansion
    /// η^{-γ} Σ_κ ((Jc)_κ - [κ = ι]) (T_η z)^κ / κ!. Each factor's Taylor
    /// series must converge on the scaled grid (half its radius at most), so
    /// this is the same function as `grid_values` minus the target, without
    /// the cancellation of large dictionary coefficients.
    pub fn remainder_grid(&self, axes: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.dim;
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total: usize = shape.iter().product();
        let mut out = vec![0.0; total];
        for part in &self.parts {
            let sc = scaling_factors(&self.op, part.eta);
            let blocks = &part.plan.blocks;
            let reach: Vec<f64> = (0..d).map(|v| sc[v] * axes[v].iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect();
            // series length per variable from the worst block
            let mut nv = vec![0usize; d];
            for b in blocks.iter() {
                for f in &b.factors {
                    if f.dims != 1 {
                        return Err(Error::Unsupported("series evaluation with two-dimensional radial factors".into()));
                    }
                    let q = reach[f.start] / factor_radius(f);
                    if q > 0.5 {
                        return Err(Error::Domain(format!("scaled grid reaches {:.3} of the Taylor radius of variable {}", q, f.start)));
                    }
                }
            }
            let jets = par::map(blocks.len(), |bi| blocks[bi].var_jets(SERIES_MAX));
            let jets = jets.into_iter().collect::<Result<Vec<_>>>()?;
            for v in 0..d {
                // smallest N with negligible tails for every block
                let mut n_needed = 0usize;
                for (jb, c) in jets.iter().zip(&part.plan.coeffs) {
                    if *c == 0.0 {
                        continue;
                    }
                    let terms: Vec<f64> = (0..=SERIES_MAX).map(|k| (jb[v][k] * reach[v].powi(k as i32) / factorial(k)).abs()).collect();
                    let peak = terms.iter().copied().fold(0.0, f64::max);
                    let mut n = SERIES_MAX;
                    while n > 0 && terms[n - 1] <= 1e-18 * peak {
                        n -= 1;
                    }
                    n_needed = n_needed.max(n + 1);
                }
                nv[v] = n_needed.min(SERIES_MAX + 1);
            }
            // moments (Jc)_κ over the rectangular index set
            let rect: usize = nv.iter().product();
            let idx_of = |lin: usize| {
                let mut idx = vec![0usize; d];
                let mut rem = lin;
                for v in (0..d).rev() {
                    idx[v] = rem % nv[v];
                    rem /= nv[v];
                }
                idx
            };
            let mut moments: Vec<f64> = par::map(rect, |lin| {
                let idx = idx_of(lin);
                dot_compensated(jets.iter().map(|jb| (0..d).map(|v| jb[v][idx[v]]).product::<f64>()), part.plan.coeffs.iter().copied())
            });
            let iota = &part.plan.iota;
            if iota.iter().zip(&nv).all(|(i, n)| i < n) {
                let mut lin = 0usize;
                for v in 0..d {
                    lin = lin * nv[v] + iota[v];
                }
                moments[lin] -= 1.0;
            }
            // p_v[k][g] = (s_v x_g)^k / k!
            let pw: Vec<Vec<Vec<f64>>> = (0..d)
                .map(|v| (0..nv[v]).map(|k| axes[v].iter().map(|x| (sc[v] * x).powi(k as i32) / factorial(k)).collect()).collect())
                .collect();
            let amp = part.weight * part.eta.powf(-part.plan.ledger.gamma);
            let vals = par::map(total, |lin| {
                let mut g = vec![0usize; d];
                let mut rem = lin;
                for v in (0..d).rev() {
                    g[v] = rem % shape[v];
                    rem /= shape[v];
                }
                let mut s = 0.0;
                for (m, mv) in moments.iter().enumerate() {
                    if *mv == 0.0 {
                        continue;
                    }
                    let idx = idx_of(m);
                    let mut p = *mv;
                    for v in 0..d {
                        p *= pw[v][idx[v]][g[v]];
                    }
                    s += p;
                }
                s
            });
            for (o, v) in out.iter_mut().zip(vals) {
                *o += amp * v;
            }
        }
        Ok(out)
    }
}

pub fn monomial_approximant(plan: &Arc<MonomialPlan>, op: &OperatorSpec, eta: f64) -> Result<LocalApproximant> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("η = {eta} must lie in (0,1)")));
    }
    // u approximates ι-th monomial divided by ι!
    Ok(LocalApproximant { op: op.clone(), dim: op.dim(), parts: vec![ScaledPart { weight: 1.0, plan: plan.clone(), eta }] })
}

// ---------------------------------------------------------------------------
// C^ℓ norms on the unit ball

pub const GRID_POINTS: usize = 41;

#[derive(Debug, Clone, Serialize)]
pub struct CEllReport {
    /// max |∂^β e| over the grid for |β| = 0, 1, ..., ℓ
    pub by_order: Vec<f64>,
    pub total: f64,
}

fn half_width(m: usize) -> usize {
    if m == 0 {
        0
    } else {
        (m + 1) / 2 + 1
    }
}

/// Apply a 1D stencil along `axis`; the axis shrinks by 2·hw.
fn apply_axis(arr: &[f64], shape: &[usize], axis: usize, w: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let hw = (w.len() - 1) / 2;
    let mut ns = shape.to_vec();
    ns[axis] -= 2 * hw;
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = Vec::with_capacity(ns.iter().product());
    for o in 0..outer {
        for i in 0..ns[axis] {
            for inner in 0..stride {
                let mut s = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    s += wk * arr[(o * shape[axis] + i + k) * stride + inner];
                }
                out.push(s);
            }
        }
    }
    (out, ns)
}

/// sup over B₁ grid points of |∂^β e|, |β| ≤ ℓ, with e = values on the
/// padded tensor grid built by `c_ell_axes`.
pub fn c_ell_from_grid(err: &[f64], dim: usize, ell: usize, points: usize) -> CEllReport {
    let pad = half_width(ell);
    let h = 2.0 / (points - 1) as f64;
    let shape = vec![points + 2 * pad; dim];
    let mut by_order = vec![0.0f64; ell + 1];
    for beta in multi_indices(dim, ell) {
        let mut arr = err.to_vec();
        let mut sh = shape.clone();
        let mut offs = vec![pad; dim];
        for (v, &bv) in beta.iter().enumerate() {
            if bv == 0 {
                continue;
            }
            let hw = half_width(bv);
            let xs: Vec<f64> = (0..=2 * hw).map(|k| (k as f64 - hw as f64) * h).collect();
            let w = fornberg_weights(0.0, &xs, bv);
            let (a, s) = apply_axis(&arr, &sh, v, &w);
            arr = a;
            sh = s;
            offs[v] -= hw;
        }
        let ord: usize = beta.iter().sum();
        let total: usize = points.pow(dim as u32);
        for lin in 0..total {
            let mut idx = vec![0usize; dim];
            let mut rem = lin;
            for v in (0..dim).rev() {
                idx[v] = rem % points;
                rem /= points;
            }
            let r2: f64 = idx.iter().map(|&i| (-1.0 + i as f64 * h).powi(2)).sum();
            if r2 > 1.0 + 1e-12 {
                continue;
            }
            let mut p = 0usize;
            for v in 0..dim {
                p = p * sh[v] + idx[v] + offs[v];
            }
            by_order[ord] = by_order[ord].max(arr[p].abs());
        }
    }
    let total = by_order.iter().copied().fold(0.0, f64::max);
    CEllReport { by_order, total }
}

/// Axes of the padded grid: `points` nodes on [-1,1] plus ℓ-dependent padding.
pub fn c_ell_axes(dim: usize, ell: usize, points: usize) -> Vec<Vec<f64>> {
    let pad = half_width(ell) as i64;
    let h = 2.0 / (points - 1) as f64;
    let axis: Vec<f64> = (-pad..points as i64 + pad).map(|i| -1.0 + i as f64 * h).collect();
    vec![axis; dim]
}

fn grid_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let total: usize = shape.iter().product();
    (0..total)
        .map(|lin| {
            let mut z = vec![0.0; axes.len()];
            let mut rem = lin;
            for v in (0..axes.len()).rev() {
                z[v] = axes[v][rem % shape[v]];
                rem /= shape[v];
            }
            z
        })
        .collect()
}

/// ‖u - f‖_{C^ℓ(B₁)} on the 41-point grid, u summed directly.
pub fn c_ell_error(u: &LocalApproximant, f: &(dyn Fn(&[f64]) -> f64 + Sync), ell: usize) -> Result<CEllReport> {
    let axes = c_ell_axes(u.dim, ell, GRID_POINTS);
    let uv = u.grid_values(&axes)?;
    let pts = grid_points(&axes);
    let fv = par::map(pts.len(), |i| f(&pts[i]));
    let err: Vec<f64> = uv.iter().zip(&fv).map(|(a, b)| a - b).collect();
    Ok(c_ell_from_grid(&err, u.dim, ell, GRID_POINTS))
}

/// ‖u - f‖_{C^ℓ(B₁)} with u - target from the jet expansion and
/// target - f evaluated pointwise.
pub fn c_ell_error_stable(u: &LocalApproximant, f: &(dyn Fn(&[f64]) -> f64 + Sync), ell: usize) -> Result<CEllReport> {
    let axes = c_ell_axes(u.dim, ell, GRID_POINTS);
    let rem = u.remainder_grid(&axes)?;
    let pts = grid_points(&axes);
    let gap = par::map(pts.len(), |i| u.target(&pts[i]) - f(&pts[i]));
    let err: Vec<f64> = rem.iter().zip(&gap).map(|(a, b)| a + b).collect();
    Ok(c_ell_from_grid(&err, u.dim, ell, GRID_POINTS))
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderPoint {
    pub eta: f64,
    /// C^ℓ error through the jet expansion
    pub error: f64,
    /// C^ℓ error with u summed directly (carries cancellation noise)
    pub direct: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxLadder {
    pub ledger: ScalingLedger,
    pub jet_residual: f64,
    pub points: Vec<LadderPoint>,
    pub slope: f64,
    pub monotone: bool,
}

/// C^ℓ error of the monomial approximant of z^ι/ι! along an η ladder.
pub fn approximation_ladder(ctx: &BlockContext, iota: &[usize], ell: usize, etas: &[f64], o: &DictOptions) -> Result<ApproxLadder> {
    let plan = Arc::new(monomial_plan(ctx, iota, ell, o)?);
    let fact = multi_factorial(iota);
    let target = {
        let iota = iota.to_vec();
        move |z: &[f64]| monomial(z, &iota) / fact
    };
    let mut points = Vec::new();
    for &eta in etas {
        let u = monomial_approximant(&plan, &ctx.op, eta)?;
        let rep = c_ell_error_stable(&u, &target, ell)?;
        let direct = c_ell_error(&u, &target, ell)?;
        points.push(LadderPoint { eta, error: rep.total, direct: direct.total });
    }
    let samples: Vec<(f64, f64)> = points.iter().map(|p| (p.eta, p.error)).collect();
    let slope = crate::asymptotics::power_fit(&samples).ok().and_then(|f| f.exponent).unwrap_or(f64::NAN);
    let monotone = points.windows(2).all(|w| w[1].error <= w[0].error);
    Ok(ApproxLadder { ledger: plan.ledger, jet_residual: plan.jet_residual, points, slope, monotone })
}

pub const MAX_POLY_DEGREE: usize = 4;

/// Σ coef_ι z^ι for the listed terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<(Vec<usize>, f64)>,
}

impl Polynomial {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|(i, c)| c * monomial(z, i)).sum()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(i, _)| i.iter().sum::<usize>()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolyReport {
    pub total: f64,
    /// C^ℓ error of each monomial part against its own term
    pub parts: Vec<f64>,
}

/// Superposition of monomial approximants, all at the same η.
pub fn polynomial_approximant(ctx: &BlockContext, poly: &Polynomial, ell: usize, eta: f64, o: &DictOptions) -> Result<(LocalApproximant, PolyReport)> {
    if poly.degree() > MAX_POLY_DEGREE {
        return Err(Error::Config(format!("polynomial degree {} above the cap {MAX_POLY_DEGREE}", poly.degree())));
    }
    if poly.dim != ctx.op.dim() {
        return Err(Error::Config("polynomial dimension differs from the operator".into()));
    }
    let mut parts = Vec::new();
    let mut part_err = Vec::new();
    for (iota, c) in &poly.terms {
        if *c == 0.0 {
            continue;
        }
        let plan = Arc::new(monomial_plan(ctx, iota, ell, o)?);
        let w = c * multi_factorial(iota);
        let one = LocalApproximant { op: ctx.op.clone(), dim: poly.dim, parts: vec![ScaledPart { weight: w, plan: plan.clone(), eta }] };
        let io = iota.clone();
        let cc = *c;
        part_err.push(c_ell_error_stable(&one, &move |z: &[f64]| cc * monomial(z, &io), ell)?.total);
        parts.push(ScaledPart { weight: w, plan, eta });
    }
    let u = LocalApproximant { op: ctx.op.clone(), dim: poly.dim, parts };
    let p = poly.clone();
    let total = if u.parts.is_empty() { 0.0 } else { c_ell_error_stable(&u, &move |z: &[f64]| p.eval(z), ell)?.total };
    Ok((u, PolyReport { total, parts: part_err }))
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneralReport {
    pub degree: usize,
    pub fit_error: f64,
    pub eta: f64,
    pub approx_error: f64,
    /// measured ‖u - f‖_{C^ℓ}
    pub total: f64,
    pub bound: f64,
    pub within: bool,
}

/// Least-squares polynomial of total degree ≤ `deg` on the B₁ grid points.
pub fn fit_polynomial(dim: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync), deg: usize) -> Result<Polynomial> {
    let axes = vec![(0..GRID_POINTS).map(|i| -1.0 + 2.0 * i as f64 / (GRID_POINTS - 1) as f64).collect::<Vec<_>>(); dim];
    let pts: Vec<Vec<f64>> = grid_points(&axes).into_iter().filter(|z| norm(z) <= 1.0 + 1e-12).collect();
    let basis = multi_indices(dim, deg);
    let a = DMatrix::from_fn(pts.len(), basis.len(), |r, c| monomial(&pts[r], &basis[c]));
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|z| f(z)));
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-13).map_err(|e| Error::Fit(e.to_string()))?;
    let scale = x.amax();
    let terms = basis.into_iter().zip(x.iter()).filter(|(_, c)| c.abs() > 1e-10 * scale).map(|(i, c)| (i, *c)).collect();
    Ok(Polynomial { dim, terms })
}

/// Polynomial fit to tolerance ε, then the polynomial approximant at the
/// largest ladder η whose error is within ε.
pub fn general_approximant(
    ctx: &BlockContext,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    ell: usize,
    eps: f64,
    etas: &[f64],
    o: &DictOptions,
) -> Result<(LocalApproximant, GeneralReport)> {
    let dim = ctx.op.dim();
    let axes = c_ell_axes(dim, ell, GRID_POINTS);
    let pts = grid_points(&axes);
    let fv = par::map(pts.len(), |i| f(&pts[i]));
    let mut chosen = None;
    for deg in 0..=MAX_POLY_DEGREE {
        let p = fit_polynomial(dim, f, deg)?;
        let err: Vec<f64> = pts.iter().zip(&fv).map(|(z, v)| p.eval(z) - v).collect();
        let e = c_ell_from_grid(&err, dim, ell, GRID_POINTS).total;
        if e <= eps {
            chosen = Some((deg, p, e));
            break;
        }
    }
    let (degree, poly, fit_error) = chosen.ok_or_else(|| Error::Fit(format!("no polynomial of degree ≤ {MAX_POLY_DEGREE} within {eps:e}")))?;
    let mut last = None;
    for &eta in etas {
        let (u, rep) = polynomial_approximant(ctx, &poly, ell, eta, o)?;
        let ok = rep.total <= eps;
        last = Some((u, rep, eta));
        if ok {
            break;
        }
    }
    let (u, rep, eta) = last.ok_or_else(|| Error::Config("empty η ladder".into()))?;
    let rem = if u.parts.is_empty() { vec![0.0; pts.len()] } else { u.remainder_grid(&axes)? };
    let err: Vec<f64> = rem.iter().zip(pts.iter().zip(&fv)).map(|(r, (z, v))| r + u.target(z) - v).collect();
    let total = c_ell_from_grid(&err, dim, ell, GRID_POINTS).total;
    let bound = fit_error + rep.total;
    Ok((u, GeneralReport { degree, fit_error, eta, approx_error: rep.total, total, bound, within: total <= 2.0 * eps }))
}

// ---------------------------------------------------------------------------
// time cutoff

fn smooth_step(u: f64) -> f64 {
    let xi = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
    let (a, b) = (xi(u), xi(1.0 - u));
    a / (a + b)
}

/// χ = 1 on [lo, hi], 0 outside [lo - width, hi + width], C^∞ in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCutoff {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl TimeCutoff {
    pub fn eval(&self, t: f64) -> f64 {
        smooth_step((t - self.lo + self.width) / self.width) * smooth_step((self.hi + self.width - t) / self.width)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo - self.width, self.hi + self.width)
    }
}

/// Multiply u by cutoffs in each time variable that equal 1 on [a_h - 1, 1].
/// `time_vars` are the indices of the time coordinates.
pub fn time_cutoff(u: &Field, time_vars: &[usize], a: &[f64], window: TimeCutoff) -> Result<Field> {
    if time_vars.len() != a.len() {
        return Err(Error::Config("one initial point per time variable".into()));
    }
    if !(window.width > 0.0) || window.hi < 1.0 {
        return Err(Error::Config("cutoff window must reach t = 1 with positive width".into()));
    }
    if a.iter().any(|&ah| !(window.lo <= ah.min(-1.0) - 1.0)) {
        return Err(Error::Config("cutoff window must contain [a_h - 1, 1]".into()));
    }
    let inner = u.clone();
    let tv = time_vars.to_vec();
    Ok(Field::new(
        u.n,
        u.support,
        format!("{} with time cutoff", u.label),
        Arc::new(move |z: &[f64]| {
            let chi: f64 = tv.iter().map(|&v| window.eval(z[v])).product();
            if chi == 0.0 {
                0.0
            } else {
                chi * inner.eval(z)
            }
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_matches_classical_stencils() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let want = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let w2 = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w2[0] - 1.0).abs() < 1e-14 && (w2[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn taylor_power_of_quadratic() {
        // (1 - z²)^{1/2} at z0 = 0.3 against finite differences
        let z0 = 0.3;
        let c = t_powf(&[1.0 - z0 * z0, -2.0 * z0, -1.0], 0.5, 4);
        let f = |z: f64| (1.0 - z * z).sqrt();
        for k in 1..=3 {
            let d = fd_derivative(&f, z0, k, 0.01);
            assert!((c[k] * factorial(k) - d).abs() < 1e-7 * d.abs().max(1.0), "k={k}");
        }
    }

    #[test]
    fn multi_index_count() {
        for d in 1..4 {
            for k in 0..5 {
                assert_eq!(multi_indices(d, k).len(), kprime(d, k));
            }
        }
    }
}
