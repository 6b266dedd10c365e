//! Hopf projections, Killing fields and multi-moment maps of the T²×SU(2)
//! action on the FHN manifolds I × SU(2) × SU(2).
//!
//! Points are (t, p, q). The left-invariant frame is Eₘ(p) = −p·eₘ,
//! Fₙ(q) = −q·eₙ (eₘ = i, j, k), dual to the coframe eₘ, fₙ of [`crate::fhn`];
//! tangent vectors are written on (∂t, E₁,E₂,E₃, F₁,F₂,F₃).

use crate::error::{Error, Result};
use crate::ext::Form;
use crate::fhn::{self, FhnSolution, FhnState};
use crate::g2_linear::{self, Vector7};
use crate::quat::{cross3, dot3, norm3, Quaternion};

const UNIT_TOL: f64 = 1e-9;

fn check_unit(q: &Quaternion) -> Result<()> {
    let n = q.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnit(n));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfPair {
    pub v: [f64; 3],
    pub w: [f64; 3],
}

impl HopfPair {
    /// cos θ = ⟨v,w⟩.
    pub fn cos_theta(&self) -> f64 {
        dot3(self.v, self.w).clamp(-1.0, 1.0)
    }

    pub fn theta(&self) -> f64 {
        self.cos_theta().acos()
    }
}

/// (v, w) = (q p̄ i p q̄, q i q̄).
pub fn hopf_pair(p: Quaternion, q: Quaternion) -> Result<HopfPair> {
    check_unit(&p)?;
    check_unit(&q)?;
    let h = (p.conj() * crate::quat::I * p).im();
    Ok(HopfPair {
        v: q.rotate(h),
        w: q.rotate([1.0, 0.0, 0.0]),
    })
}

/// A point (t, p, q) of I × SU(2) × SU(2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub t: f64,
    pub p: Quaternion,
    pub q: Quaternion,
}

impl Point {
    pub fn new(t: f64, p: Quaternion, q: Quaternion) -> Self {
        Point { t, p, q }
    }

    /// A point reached from `self` by the curve s ↦ (t + sX⁰, p·exp(−sξ_E), q·exp(−sξ_F)),
    /// whose velocity at s = 0 is X.
    pub fn flow(&self, x: &Vector7, s: f64) -> Point {
        let xe = [x[1] * s, x[2] * s, x[3] * s];
        let xf = [x[4] * s, x[5] * s, x[6] * s];
        Point {
            t: self.t + s * x[0],
            p: self.p * Quaternion::exp_pure([-xe[0], -xe[1], -xe[2]]),
            q: self.q * Quaternion::exp_pure([-xf[0], -xf[1], -xf[2]]),
        }
    }

    pub fn hopf(&self) -> Result<HopfPair> {
        hopf_pair(self.p, self.q)
    }
}

/// The generators of the T²×SU(2) action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KillingField {
    /// Left multiplication of p by e^{is}.
    U1,
    /// Right multiplication of p and q by e^{−is}.
    U2,
    /// Left multiplication of q by exp(−s eᵢ/2).
    V(usize),
}

/// Coefficients of U₁, U₂, V₁, V₂, V₃ on (E₁,E₂,E₃,F₁,F₂,F₃).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KillingFrame {
    pub u1: [f64; 6],
    pub u2: [f64; 6],
    pub v: [[f64; 6]; 3],
}

impl KillingFrame {
    fn lift(c: &[f64; 6]) -> Vector7 {
        [0.0, c[0], c[1], c[2], c[3], c[4], c[5]]
    }

    pub fn u1_7(&self) -> Vector7 {
        Self::lift(&self.u1)
    }

    pub fn u2_7(&self) -> Vector7 {
        Self::lift(&self.u2)
    }

    pub fn v_7(&self, i: usize) -> Vector7 {
        Self::lift(&self.v[i])
    }
}

fn h_vec(p: &Quaternion) -> [f64; 3] {
    (p.conj() * crate::quat::I * *p).im()
}

fn g_vec(q: &Quaternion, i: usize) -> [f64; 3] {
    (q.conj() * Quaternion::unit(i) * *q).im()
}

fn e3(m: usize) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[m] = 1.0;
    v
}

/// Coefficients of a Killing field at (p, q).
pub fn field_coefficients(x: KillingField, p: &Quaternion, q: &Quaternion) -> [f64; 6] {
    match x {
        KillingField::U1 => {
            let h = h_vec(p);
            [-h[0], -h[1], -h[2], 0.0, 0.0, 0.0]
        }
        KillingField::U2 => [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        KillingField::V(i) => {
            let g = g_vec(q, i);
            [0.0, 0.0, 0.0, 0.5 * g[0], 0.5 * g[1], 0.5 * g[2]]
        }
    }
}

/// Derivative of the coefficients of `x` along frame direction d (0..3 = E, 3..6 = F).
///
/// Uses Eₘ(h) = 2eₘ×h and Fₙ(gᵢ) = 2eₙ×gᵢ.
pub fn field_coefficient_derivative(x: KillingField, p: &Quaternion, q: &Quaternion, d: usize) -> [f64; 6] {
    match x {
        KillingField::U1 if d < 3 => {
            let dh = cross3(e3(d), h_vec(p));
            [-2.0 * dh[0], -2.0 * dh[1], -2.0 * dh[2], 0.0, 0.0, 0.0]
        }
        KillingField::V(i) if d >= 3 => {
            let dg = cross3(e3(d - 3), g_vec(q, i));
            [0.0, 0.0, 0.0, dg[0], dg[1], dg[2]]
        }
        _ => [0.0; 6],
    }
}

/// [Eᵢ,Eⱼ] = −2ε_{ijk}E_k, likewise for F; [E,F] = 0.
fn frame_bracket(d: usize, e: usize) -> [f64; 6] {
    let mut out = [0.0; 6];
    if (d < 3) != (e < 3) || d == e {
        return out;
    }
    let off = if d < 3 { 0 } else { 3 };
    let (i, j) = (d - off, e - off);
    let k = 3 - i - j;
    let sign = if (j + 3 - i) % 3 == 1 { 1.0 } else { -1.0 };
    out[off + k] = -2.0 * sign;
    out
}

/// Lie bracket of two Killing fields, computed from the frame structure
/// constants and the analytic coefficient derivatives.
pub fn bracket(x: KillingField, y: KillingField, p: &Quaternion, q: &Quaternion) -> [f64; 6] {
    let cx = field_coefficients(x, p, q);
    let cy = field_coefficients(y, p, q);
    let mut out = [0.0; 6];
    for d in 0..6 {
        let dy = field_coefficient_derivative(y, p, q, d);
        let dx = field_coefficient_derivative(x, p, q, d);
        for n in 0..6 {
            out[n] += cx[d] * dy[n] - cy[d] * dx[n];
        }
        for e in 0..6 {
            let b = frame_bracket(d, e);
            for n in 0..6 {
                out[n] += cx[d] * cy[e] * b[n];
            }
        }
    }
    out
}

/// Largest deviation from [Uₗ,Uₘ] = 0, [Uₗ,Vᵢ] = 0, [Vᵢ,Vⱼ] = ε_{ijk}V_k.
pub fn bracket_residual(p: &Quaternion, q: &Quaternion) -> f64 {
    use KillingField::*;
    let mut worst: f64 = 0.0;
    let mut upd = |got: [f64; 6], want: [f64; 6]| {
        for n in 0..6 {
            worst = worst.max((got[n] - want[n]).abs());
        }
    };
    upd(bracket(U1, U2, p, q), [0.0; 6]);
    for i in 0..3 {
        upd(bracket(U1, V(i), p, q), [0.0; 6]);
        upd(bracket(U2, V(i), p, q), [0.0; 6]);
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        upd(bracket(V(i), V(j), p, q), field_coefficients(V(k), p, q));
    }
    worst
}

pub fn killing_frame(p: Quaternion, q: Quaternion) -> Result<KillingFrame> {
    check_unit(&p)?;
    check_unit(&q)?;
    Ok(KillingFrame {
        u1: field_coefficients(KillingField::U1, &p, &q),
        u2: field_coefficients(KillingField::U2, &p, &q),
        v: [0, 1, 2].map(|i| field_coefficients(KillingField::V(i), &p, &q)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentValues {
    pub nu: f64,
    pub theta1: [f64; 3],
    pub theta2: [f64; 3],
    pub mu: [f64; 3],
    /// NaN where no closed form is available (the Bryant–Salamon table).
    pub eta: f64,
}

fn scale3(s: f64, v: [f64; 3]) -> [f64; 3] {
    [s * v[0], s * v[1], s * v[2]]
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Closed-form moment maps from the state and the Hopf pair (η supplied).
pub fn moment_values_from_state(pair: &HopfPair, s: &FhnState, p: &fhn::FhnParams, eta: f64) -> MomentValues {
    let vw = dot3(pair.v, pair.w);
    MomentValues {
        nu: -4.0 * (s.b - p.c1) * vw,
        theta1: add3(scale3(2.0 * s.a, pair.v), scale3(-2.0 * (s.a - s.b) * vw, pair.w)),
        theta2: scale3(-2.0 * (s.b + p.c2), pair.w),
        mu: scale3(-4.0 * s.x1, cross3(pair.v, pair.w)),
        eta,
    }
}

pub fn moment_values(pair: &HopfPair, t: f64, sol: &FhnSolution) -> Result<MomentValues> {
    let s = sol.state_precise(t)?;
    Ok(moment_values_from_state(pair, &s, &sol.params, sol.eta(t)?))
}

pub fn moment_values_at(pt: &Point, sol: &FhnSolution) -> Result<MomentValues> {
    moment_values(&pt.hopf()?, pt.t, sol)
}

/// Cases of the Bryant–Salamon moment-map table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsCase {
    Zero,
    One,
    Two,
}

impl TryFrom<u8> for BsCase {
    type Error = Error;
    fn try_from(c: u8) -> Result<Self> {
        match c {
            0 => Ok(BsCase::Zero),
            1 => Ok(BsCase::One),
            2 => Ok(BsCase::Two),
            _ => Err(Error::UnknownCase(format!("bs case {c}"))),
        }
    }
}

/// Tabulated Bryant–Salamon multi-moment maps; μ is the ∗φ-moment row.
pub fn bs_moment_values(case: BsCase, pair: &HopfPair, r: f64, c: f64) -> MomentValues {
    let s3 = 3f64.sqrt();
    let r2 = r * r;
    let vw = dot3(pair.v, pair.w);
    let big = s3 / 4.0 * (3.0 * c + 4.0 * r2);
    let m = 3.0 * r2 * (c + r2).cbrt();
    let vxw = cross3(pair.v, pair.w);
    let (nu, th1, mu) = match case {
        BsCase::Zero => (2.0 * s3 * r2 * vw, big, -m),
        BsCase::One => (-2.0 * big * vw, s3 * r2, -m),
        BsCase::Two => (-2.0 * s3 * r2 * vw, big, m),
    };
    MomentValues {
        nu,
        theta1: scale3(th1, pair.v),
        theta2: scale3(-s3 * r2, pair.w),
        mu: scale3(mu, vxw),
        eta: f64::NAN,
    }
}

/// Which component of the multi-moment map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moment {
    Nu,
    Mu(usize),
    /// θˡᵢ with l ∈ {1, 2}, i ∈ {0, 1, 2}.
    Theta(usize, usize),
    Eta,
}

impl Moment {
    pub fn pick(&self, m: &MomentValues) -> f64 {
        match *self {
            Moment::Nu => m.nu,
            Moment::Mu(i) => m.mu[i],
            Moment::Theta(1, i) => m.theta1[i],
            Moment::Theta(_, i) => m.theta2[i],
            Moment::Eta => m.eta,
        }
    }

    fn u(l: usize, k: &KillingFrame) -> Vector7 {
        if l == 1 {
            k.u1_7()
        } else {
            k.u2_7()
        }
    }

    /// The contraction that equals d(moment):
    /// dν = φ(U₁,U₂,·), dμᵢ = ∗φ(U₁,U₂,Vᵢ,·), dθˡᵢ = −φ(Uₗ,Vᵢ,·), dη = −∗φ(V₁,V₂,V₃,·).
    /// The last two signs are forced by the closed-form θ, η together with
    /// Vᵢ normalised so that [Vᵢ,Vⱼ] = ε_{ijk}V_k.
    pub fn contraction(&self, phi: &Form, star: &Form, k: &KillingFrame) -> Form {
        match *self {
            Moment::Nu => phi.interior(&k.u1_7()).interior(&k.u2_7()),
            Moment::Theta(l, i) => phi.interior(&Self::u(l, k)).interior(&k.v_7(i)).scale(-1.0),
            Moment::Mu(i) => star.interior(&k.u1_7()).interior(&k.u2_7()).interior(&k.v_7(i)),
            Moment::Eta => star.interior(&k.v_7(0)).interior(&k.v_7(1)).interior(&k.v_7(2)).scale(-1.0),
        }
    }
}

fn is_principal(pair: &HopfPair) -> bool {
    norm3(cross3(pair.v, pair.w)) > 1e-8
}

/// sup over the frame (∂t, Eₘ, Fₙ) of |central difference of the moment along
/// the frame flow − the form contraction|.
pub fn gradient_identity_residual(which: Moment, pt: &Point, sol: &FhnSolution, h: f64) -> Result<f64> {
    let pair = pt.hopf()?;
    if !is_principal(&pair) {
        return Err(Error::SingularPoint);
    }
    let k = killing_frame(pt.p, pt.q)?;
    let phi = fhn::assemble_phi(sol, pt.t)?.into_form();
    let star = fhn::assemble_star_phi(sol, pt.t)?.into_form();
    let c = which.contraction(&phi, &star, &k);
    let mut worst: f64 = 0.0;
    for d in 0..7 {
        let x = g2_linear::unit(d);
        let fp = which.pick(&moment_values_at(&pt.flow(&x, h), sol)?);
        let fm = which.pick(&moment_values_at(&pt.flow(&x, -h), sol)?);
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - c.coeff(&[d])).abs());
    }
    Ok(worst)
}

/// Analytic gradient of a moment on the frame (∂t, Eₘ, Fₙ), using the ODE for
/// the t-derivative and Eₘ(h) = 2eₘ×h, Fₙ(q·x·q̄) = −2 q(eₙ×x)q̄ for x ∈ {h, i}.
pub fn moment_gradient(which: Moment, pt: &Point, sol: &FhnSolution) -> Result<Vector7> {
    let pair = pt.hopf()?;
    let s = sol.state_precise(pt.t)?;
    let pp = sol.params;
    let ds = fhn::enhanced_ode_rhs(&s, &pp)?;
    let (adot, bdot, x1dot) = (s.adot(), s.bdot(), ds[2]);
    let h = h_vec(&pt.p);
    let rq = |x: [f64; 3]| pt.q.rotate(x);
    let (v, w) = (pair.v, pair.w);

    // value as a function of (state scalars, v, w) and its variations
    let eval = |a: f64, b: f64, x1: f64, v: [f64; 3], w: [f64; 3], dv: [f64; 3], dw: [f64; 3], da: f64, db: f64, dx1: f64| -> f64 {
        let vw0 = dot3(v, w);
        let dvw = dot3(dv, w) + dot3(v, dw);
        match which {
            Moment::Nu => -4.0 * (db * vw0 + (b - pp.c1) * dvw),
            Moment::Mu(i) => {
                let c0 = cross3(v, w);
                let dc = add3(cross3(dv, w), cross3(v, dw));
                -4.0 * (dx1 * c0[i] + x1 * dc[i])
            }
            Moment::Theta(1, i) => 2.0 * (da * v[i] + a * dv[i]) - 2.0 * ((da - db) * vw0 * w[i] + (a - b) * (dvw * w[i] + vw0 * dw[i])),
            Moment::Theta(_, i) => -2.0 * (db * w[i] + (b + pp.c2) * dw[i]),
            Moment::Eta => 0.0,
        }
    };
    let mut g = [0.0; 7];
    g[0] = match which {
        Moment::Eta => fhn::eta_integrand(&s, &pp),
        _ => eval(s.a, s.b, s.x1, v, w, [0.0; 3], [0.0; 3], adot, bdot, x1dot),
    };
    for m in 0..3 {
        let dv = rq(scale3(2.0, cross3(e3(m), h)));
        g[1 + m] = eval(s.a, s.b, s.x1, v, w, dv, [0.0; 3], 0.0, 0.0, 0.0);
        let dv = rq(scale3(-2.0, cross3(e3(m), h)));
        let dw = rq(scale3(-2.0, cross3(e3(m), [1.0, 0.0, 0.0])));
        g[4 + m] = eval(s.a, s.b, s.x1, v, w, dv, dw, 0.0, 0.0, 0.0);
    }
    Ok(g)
}

/// The U₁×U₂ direction at a point (cross product of the induced metric).
pub fn cross_direction(pt: &Point, sol: &FhnSolution) -> Result<Vector7> {
    let k = killing_frame(pt.p, pt.q)?;
    let phi = fhn::assemble_phi(sol, pt.t)?;
    let g = g2_linear::metric_from_phi(&phi)?;
    Ok(g2_linear::cross_product(&k.u1_7(), &k.u2_7(), &phi, &g))
}

/// Derivative of μ along U₁×U₂ by the analytic gradient.
pub fn mu_derivative_along_cross(pt: &Point, sol: &FhnSolution) -> Result<[f64; 3]> {
    let x = cross_direction(pt, sol)?;
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let g = moment_gradient(Moment::Mu(i), pt, sol)?;
        *o = (0..7).map(|d| g[d] * x[d]).sum();
    }
    Ok(out)
}

/// Same derivative by Richardson-extrapolated central differences along the
/// curve of [`Point::flow`].
pub fn mu_derivative_along_cross_fd(pt: &Point, sol: &FhnSolution, h: f64) -> Result<[f64; 3]> {
    let x = cross_direction(pt, sol)?;
    let cd = |s: f64| -> Result<[f64; 3]> {
        let p = moment_values_at(&pt.flow(&x, s), sol)?.mu;
        let m = moment_values_at(&pt.flow(&x, -s), sol)?.mu;
        Ok([0, 1, 2].map(|i| (p[i] - m[i]) / (2.0 * s)))
    };
    let (d1, d2) = (cd(h)?, cd(0.5 * h)?);
    Ok([0, 1, 2].map(|i| (4.0 * d2[i] - d1[i]) / 3.0))
}

/// Alternative algebraic formulas μ_k = −∗φ(U₁,U₂,Vᵢ,Vⱼ) and θˡ_k = φ(Uₗ,Vᵢ,Vⱼ)
/// with (i, j, k) cyclic (sign of θ as in [`Moment::contraction`]).
pub fn alternate_moment(which: Moment, pt: &Point, sol: &FhnSolution) -> Result<f64> {
    let k = killing_frame(pt.p, pt.q)?;
    let cyc = |c: usize| ((c + 1) % 3, (c + 2) % 3);
    match which {
        Moment::Mu(c) => {
            let (i, j) = cyc(c);
            let star = fhn::assemble_star_phi(sol, pt.t)?;
            Ok(-star.eval(&[&k.u1_7(), &k.u2_7(), &k.v_7(i), &k.v_7(j)]))
        }
        Moment::Theta(l, c) => {
            let (i, j) = cyc(c);
            let phi = fhn::assemble_phi(sol, pt.t)?;
            let u = if l == 1 { k.u1_7() } else { k.u2_7() };
            Ok(phi.eval(&[&u, &k.v_7(i), &k.v_7(j)]))
        }
        _ => Err(Error::UnknownCase("alternate formula exists only for mu and theta".into())),
    }
}

/// φ(V₁,V₂,V₃) = −c₂, checked to be constant along the trajectory;
/// SU(2)-invariant coassociative submanifolds exist only when it vanishes.
pub fn su2_coassoc_obstruction(sol: &FhnSolution) -> Result<f64> {
    let (lo, hi) = sol.domain();
    let q = Quaternion::new(0.3, -0.4, 0.5, 0.7).normalize();
    let k = killing_frame(crate::quat::ONE, q)?;
    let mut vals = Vec::with_capacity(20);
    for n in 0..20 {
        let t = lo + (hi - lo) * n as f64 / 19.0;
        let phi = fhn::assemble_phi(sol, t)?;
        vals.push((t, phi.eval(&[&k.v_7(0), &k.v_7(1), &k.v_7(2)])));
    }
    let v0 = vals[0].1;
    if let Some(&(t, _)) = vals.iter().find(|(_, v)| (v - v0).abs() > 1e-9) {
        return Err(Error::HypothesisFailed { t, what: "phi(V1,V2,V3) not constant".into() });
    }
    Ok(v0)
}
