//! Invariant coherent tri-symplectic 4-manifolds with an SU(2) action of
//! cohomogeneity one: the τ matrix ODE, reconstruction of the triple and the
//! metric, and closed curvature pairs (F₊, F₋).
//!
//! Coframe (δ₀, δ₁, δ₂, δ₃) with δ₀ = dR and dδᵢ = −δⱼ∧δ_k (cyclic). Triples are
//! equivariant: a coefficient row m (indexed by the δ-slot) satisfies
//! Xₗ(m) = m × eₗ along the frame dual to δₗ. δ̄ⱼ := δ_k∧δₗ (cyclic).

use crate::error::{Error, Result};
use crate::ext::{Coframe, Form};
use crate::ode::{self, Options, Stop, Trajectory};
use nalgebra::{Matrix2, Matrix3, SMatrix};
use std::sync::OnceLock;

pub type M2 = Matrix2<f64>;
pub type M3 = Matrix3<f64>;
pub type M32 = SMatrix<f64, 3, 2>;

const SINGULAR_DET: f64 = 1e-14;

/// R ↦ T(R), symmetric positive definite 2×2, with analytic ∂_R T.
pub trait TPath {
    fn t(&self, r: f64) -> M2;
    fn dt(&self, r: f64) -> M2;
}

/// Built-in paths: T ≡ Id, or T = s(R)·Id with s(R) = a + bR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinT {
    Identity,
    Scaled { a: f64, b: f64 },
}

impl TPath for BuiltinT {
    fn t(&self, r: f64) -> M2 {
        match *self {
            BuiltinT::Identity => M2::identity(),
            BuiltinT::Scaled { a, b } => M2::identity() * (a + b * r),
        }
    }
    fn dt(&self, _r: f64) -> M2 {
        match *self {
            BuiltinT::Identity => M2::zeros(),
            BuiltinT::Scaled { b, .. } => M2::identity() * b,
        }
    }
}

impl std::str::FromStr for BuiltinT {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(BuiltinT::Identity);
        }
        let bad = || Error::UnknownCase(format!("T path '{s}' (expected identity or scaled:a,b)"));
        let rest = s.strip_prefix("scaled:").ok_or_else(bad)?;
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        Ok(BuiltinT::Scaled {
            a: a.trim().parse().map_err(|_| bad())?,
            b: b.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// T padded to 3×3 with 1 in the (0,0) slot.
pub fn padded(t: &M2) -> M3 {
    let mut m = M3::zeros();
    m[(0, 0)] = 1.0;
    m.fixed_view_mut::<2, 2>(1, 1).copy_from(t);
    m
}

fn padded_derivative(dt: &M2) -> M3 {
    let mut m = M3::zeros();
    m.fixed_view_mut::<2, 2>(1, 1).copy_from(dt);
    m
}

fn check_spd(t: &M2) -> Result<()> {
    if (t[(0, 1)] - t[(1, 0)]).abs() > 1e-12 * t.norm() || t[(0, 0)] <= 0.0 || t.determinant() <= 0.0 {
        return Err(Error::NotPositive);
    }
    Ok(())
}

/// P = (∂T)T⁻¹ on the padded matrices.
fn p_matrix(path: &dyn TPath, r: f64) -> Result<M3> {
    let t = path.t(r);
    check_spd(&t)?;
    let tp = padded(&t);
    Ok(padded_derivative(&path.dt(r)) * tp.try_inverse().ok_or(Error::NotPositive)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauState {
    pub r: f64,
    pub tau: M3,
}

/// ∂_R τ = (∂_R T)T⁻¹τ + (τᵀ)⁻¹.
pub fn tau_rhs(state: &TauState, path: &dyn TPath) -> Result<M3> {
    let d = state.tau.determinant();
    if d.abs() < SINGULAR_DET {
        return Err(Error::SingularTau(state.r));
    }
    let inv_t = state.tau.transpose().try_inverse().ok_or(Error::SingularTau(state.r))?;
    Ok(p_matrix(path, state.r)? * state.tau + inv_t)
}

fn to_arr(m: &M3) -> [f64; 9] {
    let mut a = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            a[3 * i + j] = m[(i, j)];
        }
    }
    a
}

fn from_arr(a: &[f64; 9]) -> M3 {
    M3::from_fn(|i, j| a[3 * i + j])
}

/// Output of [`integrate_tau`].
pub struct TauTrajectory<'p> {
    path: &'p dyn TPath,
    traj: Trajectory<9>,
    /// R at which det τ reached 0 (trajectory truncated there), if any.
    pub singular_at: Option<f64>,
}

fn tau_fn(path: &dyn TPath) -> impl Fn(f64, &[f64; 9]) -> Option<[f64; 9]> + '_ {
    move |r, y| tau_rhs(&TauState { r, tau: from_arr(y) }, path).ok().map(|m| to_arr(&m))
}

/// Adaptive integration of the τ-ODE from R₀ to R₁ (either direction).
pub fn integrate_tau<'p>(path: &'p dyn TPath, tau0: &M3, r_range: (f64, f64), tol: f64) -> Result<TauTrajectory<'p>> {
    let (r0, r1) = r_range;
    let d0 = tau0.determinant();
    if d0.abs() < SINGULAR_DET {
        return Err(Error::SingularTau(r0));
    }
    let s = d0.signum();
    let f = tau_fn(path);
    let traj = ode::integrate(&f, r0, to_arr(tau0), r1, &Options::with_tol(tol), |_, y| s * from_arr(y).determinant()).ok_or(Error::SingularTau(r0))?;
    let singular_at = match traj.stop {
        Stop::Reached => None,
        Stop::Event(r) | Stop::Underflow(r) | Stop::MaxSteps(r) => Some(r),
    };
    Ok(TauTrajectory { path, traj, singular_at })
}

impl<'p> TauTrajectory<'p> {
    pub fn path(&self) -> &'p dyn TPath {
        self.path
    }

    pub fn span(&self) -> (f64, f64) {
        self.traj.span()
    }

    pub fn r_first(&self) -> f64 {
        self.traj.t_first()
    }

    pub fn samples(&self) -> impl Iterator<Item = TauState> + '_ {
        self.traj.samples.iter().map(|s| TauState { r: s.t, tau: from_arr(&s.y) })
    }

    /// Accurate τ(R) (short re-integration from the nearest sample).
    pub fn state_at(&self, r: f64) -> Result<TauState> {
        let (lo, hi) = self.span();
        let y = self.traj.precise(r, &tau_fn(self.path)).ok_or(Error::OutOfDomain { t: r, lo, hi })?;
        Ok(TauState { r, tau: from_arr(&y) })
    }
}

/// Adjugate (transpose of the cofactor matrix).
pub fn adjugate(m: &M3) -> M3 {
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)]
    };
    M3::from_fn(|i, j| c(j, i))
}

/// η = adj(τᵀ)/√(det τ): the positive-determinant solution of τ = adj(ηᵀ).
pub fn eta_from_tau(tau: &M3) -> Result<M3> {
    let d = tau.determinant();
    if !(d > 0.0) {
        return Err(Error::NonPositiveDet(d));
    }
    Ok(adjugate(&tau.transpose()) / d.sqrt())
}

/// ĝ = ηᵀη on (δ₁, δ₂, δ₃).
pub fn metric_hat(tau: &M3) -> Result<M3> {
    let e = eta_from_tau(tau)?;
    Ok(e.transpose() * e)
}

fn coframe4() -> &'static Coframe {
    static CF: OnceLock<Coframe> = OnceLock::new();
    CF.get_or_init(|| {
        let mut d = vec![Form::zero(4, 2)];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            d.push(Form::basis(4, &[1 + j, 1 + k]).scale(-1.0));
        }
        Coframe::new(d)
    })
}

/// (mask, sign) of δ̄ⱼ = δ_k∧δₗ.
fn bar_mask(j: usize) -> (usize, f64) {
    let (k, l) = ((j + 1) % 3, (j + 2) % 3);
    crate::ext::mask_of(&[1 + k, 1 + l]).unwrap()
}

fn dot_mask(j: usize) -> usize {
    (1 << 0) | (1 << (1 + j))
}

/// An equivariant 2-form Σ aⱼ δ₀∧δⱼ + Σ bⱼ δ̄ⱼ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EqTwoForm {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl EqTwoForm {
    pub fn form(&self) -> Form {
        let mut f = Form::zero(4, 2);
        for j in 0..3 {
            f.set_mask(dot_mask(j), self.a[j]);
            let (m, s) = bar_mask(j);
            f.set_mask(m, s * self.b[j]);
        }
        f
    }

    fn lin(&self, s: f64, o: &EqTwoForm, t: f64) -> EqTwoForm {
        EqTwoForm {
            a: [0, 1, 2].map(|j| s * self.a[j] + t * o.a[j]),
            b: [0, 1, 2].map(|j| s * self.b[j] + t * o.b[j]),
        }
    }
}

fn eps(j: usize, k: usize, l: usize) -> f64 {
    if j == k || k == l || j == l {
        0.0
    } else if (k + 3 - j) % 3 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// d of an equivariant 2-form given its R-derivative.
pub fn d_equivariant(w: &EqTwoForm, dw: &EqTwoForm) -> Form {
    // dc = ∂_R c δ₀ + Σₗ (Σ_k ε_{jkl} row_k) δₗ
    let diff = |row: &[f64; 3], drow: &[f64; 3], j: usize| {
        let mut v = [0.0; 4];
        v[0] = drow[j];
        for l in 0..3 {
            v[1 + l] = (0..3).map(|k| eps(j, k, l) * row[k]).sum();
        }
        Form::one_form(&v)
    };
    let mut terms = Vec::with_capacity(6);
    for j in 0..3 {
        terms.push((dot_mask(j), w.a[j], diff(&w.a, &dw.a, j)));
        let (m, s) = bar_mask(j);
        terms.push((m, s * w.b[j], diff(&w.b, &dw.b, j).scale(s)));
    }
    coframe4().d_general(terms.iter().map(|(m, c, f)| (*m, *c, f)), 2)
}

/// Coefficient rows of σ = (1/det η) δ₀∧ηδ + τδ̄; note η/det η = (τᵀ)⁻¹.
fn sigma_rows(tau: &M3) -> Result<(M3, M3)> {
    let eta = eta_from_tau(tau)?;
    Ok((eta / eta.determinant(), *tau))
}

fn rows_to_forms(a: &M3, b: &M3) -> [EqTwoForm; 3] {
    [0, 1, 2].map(|i| EqTwoForm {
        a: [a[(i, 0)], a[(i, 1)], a[(i, 2)]],
        b: [b[(i, 0)], b[(i, 1)], b[(i, 2)]],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherentTriple {
    pub sigma: [Form; 3],
    pub sigma_bar: [Form; 3],
    pub q: M2,
    /// vol_χ coefficient on δ₀₁₂₃ with σᵢ∧σⱼ = 2δᵢⱼ vol_χ.
    pub vol: f64,
}

pub fn reconstruct_triple(state: &TauState, path: &dyn TPath) -> Result<CoherentTriple> {
    if state.tau.determinant().abs() < SINGULAR_DET {
        return Err(Error::SingularTau(state.r));
    }
    let (a, b) = sigma_rows(&state.tau)?;
    let t = path.t(state.r);
    check_spd(&t)?;
    let tpi = padded(&t).try_inverse().ok_or(Error::NotPositive)?;
    let sigma = rows_to_forms(&a, &b).map(|f| f.form());
    let sigma_bar = rows_to_forms(&(tpi * a), &(tpi * b)).map(|f| f.form());
    let ti = t.try_inverse().ok_or(Error::NotPositive)?;
    let vol = 0.5 * sigma[0].wedge(&sigma[0]).top();
    Ok(CoherentTriple { sigma, sigma_bar, q: ti * ti, vol })
}

impl CoherentTriple {
    /// max over the coherence conditions σ̄₀∧σ̄ᵢ = 0, σ̄ᵢ∧σ̄ⱼ = Qᵢⱼ σ̄₀∧σ̄₀, relative to σ̄₀∧σ̄₀.
    pub fn coherence_residual(&self) -> f64 {
        let s = &self.sigma_bar;
        let v0 = s[0].wedge(&s[0]).top();
        let mut worst = (s[0].wedge(&s[1]).top().abs()).max(s[0].wedge(&s[2]).top().abs()) / v0.abs();
        for i in 0..2 {
            for j in 0..2 {
                let w = s[i + 1].wedge(&s[j + 1]).top();
                worst = worst.max((w / v0 - self.q[(i, j)]).abs());
            }
        }
        worst
    }

    /// σᵢ∧σⱼ = 2δᵢⱼ vol_χ residual for the orthogonalised forms.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let w = self.sigma[i].wedge(&self.sigma[j]).top();
                let want = if i == j { 2.0 * self.vol } else { 0.0 };
                worst = worst.max((w - want).abs() / self.vol.abs());
            }
        }
        worst
    }

    pub fn q_positive(&self) -> bool {
        self.q[(0, 0)] > 0.0 && self.q.determinant() > 0.0
    }
}

/// σ̄ rows at R as equivariant forms, with τ supplied by `tau`.
fn sigma_bar_rows(tau: &M3, path: &dyn TPath, r: f64) -> Result<[EqTwoForm; 3]> {
    let (a, b) = sigma_rows(tau)?;
    let tpi = padded(&path.t(r)).try_inverse().ok_or(Error::NotPositive)?;
    Ok(rows_to_forms(&(tpi * a), &(tpi * b)))
}

/// ‖dσ̄ᵢ‖ for τ given as a function of R (central difference in R with step h).
pub fn closedness_residual_of(tau: &dyn Fn(f64) -> Result<M3>, path: &dyn TPath, i: usize, r: f64, h: f64) -> Result<f64> {
    let w0 = sigma_bar_rows(&tau(r)?, path, r)?[i];
    let wp = sigma_bar_rows(&tau(r + h)?, path, r + h)?[i];
    let wm = sigma_bar_rows(&tau(r - h)?, path, r - h)?[i];
    let dw = wp.lin(0.5 / h, &wm, -0.5 / h);
    Ok(d_equivariant(&w0, &dw).norm())
}

pub fn closedness_residual_triple(traj: &TauTrajectory, i: usize, r: f64, h: f64) -> Result<f64> {
    let (lo, hi) = traj.span();
    if !(r - h >= lo && r + h <= hi) {
        return Err(Error::OutOfDomain { t: r, lo, hi });
    }
    closedness_residual_of(&|x| Ok(traj.state_at(x)?.tau), traj.path, i, r, h)
}

/// R ↦ a(R) (3×2) with analytic derivative.
pub trait APath {
    fn a(&self, r: f64) -> M32;
    fn da(&self, r: f64) -> M32;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstA(pub M32);

impl APath for ConstA {
    fn a(&self, _r: f64) -> M32 {
        self.0
    }
    fn da(&self, _r: f64) -> M32 {
        M32::zeros()
    }
}

/// An a-path from two closures.
pub struct FnA<F, G>(pub F, pub G);

impl<F: Fn(f64) -> M32, G: Fn(f64) -> M32> APath for FnA<F, G> {
    fn a(&self, r: f64) -> M32 {
        (self.0)(r)
    }
    fn da(&self, r: f64) -> M32 {
        (self.1)(r)
    }
}

/// The pair F₊ = aσ, F₋ = −bσ⁻ with σ⁻ = −α₀∧α + ᾱ.
///
/// F₋ = −aσ⁻ is not closed in general (dσ⁻ = (∂τ + (τᵀ)⁻¹)δ₀∧δ̄), so b is
/// integrated from b' = a' + Pᵀ(a − b) − 2(ττᵀ)⁻¹b, b(R₀) = a(R₀), which makes
/// d(F₊ + F₋) = 0. The uncorrected choice b = a remains available for comparison.
pub struct FPair<'t, 'p> {
    traj: &'t TauTrajectory<'p>,
    a: &'t dyn APath,
    b: Trajectory<6>,
}

fn m32_arr(m: &M32) -> [f64; 6] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)], m[(2, 0)], m[(2, 1)]]
}

fn arr_m32(a: &[f64; 6]) -> M32 {
    M32::new(a[0], a[1], a[2], a[3], a[4], a[5])
}

fn b_rhs<'a>(traj: &'a TauTrajectory, ap: &'a dyn APath) -> impl Fn(f64, &[f64; 6]) -> Option<[f64; 6]> + 'a {
    move |r, y| {
        let tau = traj.state_at(r).ok()?.tau;
        let p = p_matrix(traj.path, r).ok()?;
        let tt = (tau * tau.transpose()).try_inverse()?;
        let (a, b) = (ap.a(r), arr_m32(y));
        Some(m32_arr(&(ap.da(r) + p.transpose() * (a - b) - 2.0 * tt * b)))
    }
}

pub fn construct_f_pair<'t, 'p>(traj: &'t TauTrajectory<'p>, a: &'t dyn APath, tol: f64) -> Result<FPair<'t, 'p>> {
    let r0 = traj.r_first();
    let r1 = traj.traj.t_last();
    let f = b_rhs(traj, a);
    let b = ode::integrate(&f, r0, m32_arr(&a.a(r0)), r1, &Options::with_tol(tol), |_, _| 1.0).ok_or(Error::StepFailure(r0))?;
    if b.stop != Stop::Reached {
        return Err(Error::StepFailure(b.t_last()));
    }
    Ok(FPair { traj, a, b })
}

/// Σᵢ cᵢₘ (s·A_row_i, B_row_i), for m = 0, 1.
fn combine(c: &M32, a: &M3, b: &M3, s: f64) -> [EqTwoForm; 2] {
    [0, 1].map(|m| {
        let mut out = EqTwoForm { a: [0.0; 3], b: [0.0; 3] };
        for i in 0..3 {
            for j in 0..3 {
                out.a[j] += c[(i, m)] * s * a[(i, j)];
                out.b[j] += c[(i, m)] * b[(i, j)];
            }
        }
        out
    })
}

impl FPair<'_, '_> {
    pub fn b(&self, r: f64) -> Result<M32> {
        let (lo, hi) = self.b.span();
        let f = b_rhs(self.traj, self.a);
        self.b.precise(r, &f).map(|y| arr_m32(&y)).ok_or(Error::OutOfDomain { t: r, lo, hi })
    }

    fn parts(&self, r: f64, corrected: bool) -> Result<[EqTwoForm; 2]> {
        let tau = self.traj.state_at(r)?.tau;
        let (a, b) = sigma_rows(&tau)?;
        let ca = self.a.a(r);
        let cb = if corrected { self.b(r)? } else { ca };
        let plus = combine(&ca, &a, &b, 1.0);
        // −c σ⁻ = −c(−α₀∧α + ᾱ)
        let minus = combine(&cb, &a, &b, -1.0).map(|f| f.lin(-1.0, &f, 0.0));
        Ok([plus[0].lin(1.0, &minus[0], 1.0), plus[1].lin(1.0, &minus[1], 1.0)])
    }

    pub fn f_plus(&self, r: f64) -> Result<[Form; 2]> {
        let tau = self.traj.state_at(r)?.tau;
        let (a, b) = sigma_rows(&tau)?;
        Ok(combine(&self.a.a(r), &a, &b, 1.0).map(|f| f.form()))
    }

    pub fn f_minus(&self, r: f64) -> Result<[Form; 2]> {
        let tau = self.traj.state_at(r)?.tau;
        let (a, b) = sigma_rows(&tau)?;
        Ok(combine(&self.b(r)?, &a, &b, -1.0).map(|f| f.form().scale(-1.0)))
    }

    fn residual_impl(&self, r: f64, h: f64, corrected: bool) -> Result<f64> {
        let (lo, hi) = self.traj.span();
        if !(r - h >= lo && r + h <= hi) {
            return Err(Error::OutOfDomain { t: r, lo, hi });
        }
        let w0 = self.parts(r, corrected)?;
        let wp = self.parts(r + h, corrected)?;
        let wm = self.parts(r - h, corrected)?;
        let mut worst: f64 = 0.0;
        for m in 0..2 {
            let dw = wp[m].lin(0.5 / h, &wm[m], -0.5 / h);
            worst = worst.max(d_equivariant(&w0[m], &dw).norm());
        }
        Ok(worst)
    }

    /// ‖d(F₊ + F₋)‖ for the corrected F₋.
    pub fn residual(&self, r: f64, h: f64) -> Result<f64> {
        self.residual_impl(r, h, true)
    }

    /// ‖d(F₊ − aσ⁻)‖: the uncorrected construction.
    pub fn naive_residual(&self, r: f64, h: f64) -> Result<f64> {
        self.residual_impl(r, h, false)
    }
}

/// Tr(AQ) and whether it vanishes to 1e-12 relative to |A||Q|.
pub fn trace_condition(a: &M2, q: &M2) -> (f64, bool) {
    let tr = (a * q).trace();
    (tr, tr.abs() <= 1e-12 * (a.norm() * q.norm()).max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let s = TauState { r: 0.0, tau: M3::identity() };
        assert_eq!(tau_rhs(&s, &BuiltinT::Identity).unwrap(), M3::identity());
        let s = TauState { r: 0.0, tau: M3::from_diagonal(&nalgebra::Vector3::new(2.0, 4.0, 0.5)) };
        let d = tau_rhs(&s, &BuiltinT::Identity).unwrap();
        assert_eq!(d, M3::from_diagonal(&nalgebra::Vector3::new(0.5, 0.25, 2.0)));
        let z = TauState { r: 0.0, tau: M3::zeros() };
        assert!(matches!(tau_rhs(&z, &BuiltinT::Identity), Err(Error::SingularTau(_))));
    }

    #[test]
    fn eta_of_diagonal() {
        let (a, b, c) = (2.0f64, 3.0f64, 5.0f64);
        let tau = M3::from_diagonal(&nalgebra::Vector3::new(a, b, c));
        let e = eta_from_tau(&tau).unwrap();
        let want = M3::from_diagonal(&nalgebra::Vector3::new((b * c / a).sqrt(), (c * a / b).sqrt(), (a * b / c).sqrt()));
        assert!((e - want).norm() < 1e-14);
        assert!(matches!(eta_from_tau(&(-tau)), Err(Error::NonPositiveDet(_))));
    }

    #[test]
    fn identity_triple() {
        let tr = reconstruct_triple(&TauState { r: 1.0, tau: M3::identity() }, &BuiltinT::Identity).unwrap();
        let mut want = Form::zero(4, 2);
        want.add_term(&[0, 1], 1.0);
        want.add_term(&[2, 3], 1.0);
        assert_eq!(tr.sigma[0], want);
    }

    #[test]
    fn d_squared_vanishes_on_functions() {
        // d(d f) for f = row component with f' = 0 reduces to the structure equations
        let cf = coframe4();
        for m in 0..16 {
            let dd = cf.d_const(cf.d_monomial(m));
            assert!(dd.max_abs() < 1e-15);
        }
    }

    #[test]
    fn builtin_parsing() {
        assert_eq!("identity".parse::<BuiltinT>().unwrap(), BuiltinT::Identity);
        assert_eq!("scaled:1,0.5".parse::<BuiltinT>().unwrap(), BuiltinT::Scaled { a: 1.0, b: 0.5 });
        assert!("file:x".parse::<BuiltinT>().is_err());
    }

    #[test]
    fn trace_condition_rotation() {
        let q = M2::new(2.0, 0.3, 0.3, 1.0);
        // A = J Q⁻¹ gives Tr(AQ) = Tr(J) = 0
        let j = M2::new(0.0, -1.0, 1.0, 0.0);
        let a = j * q.try_inverse().unwrap();
        assert!(trace_condition(&a, &q).1);
        assert!(!trace_condition(&M2::identity(), &q).1);
    }
}
