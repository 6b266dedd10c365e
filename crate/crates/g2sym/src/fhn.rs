//! The FHN cohomogeneity-one system with enhanced symmetry a₂ = a₃.
//!
//! Notation: a := a₂ = a₃, b := a₁, x₁ := ȧḃ, x₂ := ȧ². The invariant coframe
//! is ordered (dt, e₁,e₂,e₃, f₁,f₂,f₃) with deᵢ = 2eⱼ∧e_k, dfᵢ = 2fⱼ∧f_k.

use crate::error::{Error, Result};
use crate::ext::{Coframe, Form};
use crate::g2_linear::{FourForm7, ThreeForm7};
use crate::ode::{self, Options, Stop, Trajectory};
use std::sync::OnceLock;

pub const DT: usize = 0;
pub const E: [usize; 3] = [1, 2, 3];
pub const F: [usize; 3] = [4, 5, 6];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagram {
    DeltaSu2,
    OneSu2,
    Kmn { m: i64, n: i64 },
    NoSingularOrbit,
}

impl std::fmt::Display for Diagram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagram::DeltaSu2 => write!(f, "delta"),
            Diagram::OneSu2 => write!(f, "one-su2"),
            Diagram::Kmn { m, n } => write!(f, "kmn:{m},{n}"),
            Diagram::NoSingularOrbit => write!(f, "none"),
        }
    }
}

impl std::str::FromStr for Diagram {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "delta" => Ok(Diagram::DeltaSu2),
            "one-su2" => Ok(Diagram::OneSu2),
            "none" => Ok(Diagram::NoSingularOrbit),
            other => {
                let bad = || Error::UnknownCase(format!("diagram '{other}'"));
                let rest = other.strip_prefix("kmn:").ok_or_else(bad)?;
                let (m, n) = rest.split_once(',').ok_or_else(bad)?;
                Ok(Diagram::Kmn {
                    m: m.trim().parse().map_err(|_| bad())?,
                    n: n.trim().parse().map_err(|_| bad())?,
                })
            }
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FhnParams {
    pub c1: f64,
    pub c2: f64,
    pub diagram: Diagram,
}

impl FhnParams {
    /// Validates the group-diagram constraints on (c₁, c₂).
    pub fn new(c1: f64, c2: f64, diagram: Diagram) -> Result<Self> {
        let p = FhnParams { c1, c2, diagram };
        match diagram {
            Diagram::DeltaSu2 if !(c1 > 0.0 && close(c1 + c2, 0.0)) => Err(Error::InconsistentParams("delta diagram needs c1 > 0 and c1 + c2 = 0".into())),
            Diagram::OneSu2 if !(c1 < 0.0 && c2 == 0.0) => Err(Error::InconsistentParams("one-su2 diagram needs c1 < 0 and c2 = 0".into())),
            Diagram::Kmn { m, n } => {
                if m * n <= 0 || gcd(m, n) != 1 {
                    return Err(Error::InconsistentParams(format!("kmn needs mn > 0 and gcd(m,n) = 1, got ({m},{n})")));
                }
                p.kmn_r0_cubed().map(|_| p)
            }
            _ => Ok(p),
        }
    }

    /// The Bryant–Salamon member: c₁ = −(3√3/8)c, c₂ = 0, diagram {1}×SU(2).
    pub fn bryant_salamon(c: f64) -> Self {
        FhnParams {
            c1: -3.0 * 3f64.sqrt() / 8.0 * c,
            c2: 0.0,
            diagram: Diagram::OneSu2,
        }
    }

    /// r₀³ with c₁ = −m²r₀³ and c₂ = n²r₀³.
    pub fn kmn_r0_cubed(&self) -> Result<f64> {
        let Diagram::Kmn { m, n } = self.diagram else {
            return Err(Error::InconsistentParams("not a kmn diagram".into()));
        };
        let (m2, n2) = ((m * m) as f64, (n * n) as f64);
        let r03 = -self.c1 / m2;
        if r03 == 0.0 || !close(self.c2, n2 * r03) {
            return Err(Error::InconsistentParams(format!("kmn needs c1 = -m^2 r0^3, c2 = n^2 r0^3 (c1 = {}, c2 = {})", self.c1, self.c2)));
        }
        Ok(r03)
    }

    pub fn has_singular_orbit(&self) -> bool {
        self.diagram != Diagram::NoSingularOrbit
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FhnState {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub x1: f64,
    pub x2: f64,
}

impl FhnState {
    pub fn from_array(t: f64, y: [f64; 4]) -> Self {
        FhnState {
            t,
            a: y[0],
            b: y[1],
            x1: y[2],
            x2: y[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.a, self.b, self.x1, self.x2]
    }

    pub fn adot(&self) -> f64 {
        self.x2.sqrt()
    }

    pub fn bdot(&self) -> f64 {
        self.x1 / self.x2.sqrt()
    }

    pub fn coefficients(&self) -> Coefficients {
        let (ad, bd) = (self.adot(), self.bdot());
        Coefficients {
            a: [self.b, self.a, self.a],
            adot: [bd, ad, ad],
        }
    }
}

/// Λ(a₁,a₂,a₃) for the general (non-enhanced) system.
pub fn big_lambda(a1: f64, a2: f64, a3: f64, p: &FhnParams) -> f64 {
    let (c1, c2) = (p.c1, p.c2);
    let (s1, s2, s3) = (a1 * a1, a2 * a2, a3 * a3);
    s1 * s1 + s2 * s2 + s3 * s3 - 2.0 * s1 * s2 - 2.0 * s2 * s3 - 2.0 * s3 * s1 + 4.0 * (c1 - c2) * a1 * a2 * a3 + 2.0 * c1 * c2 * (s1 + s2 + s3) + c1 * c1 * c2 * c2
}

/// Enhanced Λ(a,b) = (b²+c₁c₂)² − 4a²(b−c₁)(b+c₂).
pub fn lambda(a: f64, b: f64, p: &FhnParams) -> f64 {
    let q = b * b + p.c1 * p.c2;
    q * q - 4.0 * a * a * (b - p.c1) * (b + p.c2)
}

/// ∂Λ/∂a.
pub fn lambda_a(a: f64, b: f64, p: &FhnParams) -> f64 {
    -8.0 * a * (b - p.c1) * (b + p.c2)
}

/// ∂Λ/∂b.
pub fn lambda_b(a: f64, b: f64, p: &FhnParams) -> f64 {
    4.0 * b * (b * b + p.c1 * p.c2) - 4.0 * a * a * (2.0 * b + p.c2 - p.c1)
}

fn interior(s: &FhnState, p: &FhnParams) -> bool {
    s.x1 > 0.0 && s.x2 > 0.0 && lambda(s.a, s.b, p) < 0.0
}

/// H = √(−Λ(a,b)) − 2√(x₁²x₂); zero on torsion-free trajectories.
pub fn hamiltonian(s: &FhnState, p: &FhnParams) -> Result<f64> {
    if !interior(s, p) {
        return Err(Error::OutsideCone);
    }
    Ok((-lambda(s.a, s.b, p)).sqrt() - 2.0 * (s.x1 * s.x1 * s.x2).sqrt())
}

/// d/dt of (a, b, x₁, x₂).
pub fn enhanced_ode_rhs(s: &FhnState, p: &FhnParams) -> Result<[f64; 4]> {
    if !interior(s, p) {
        return Err(Error::OutsideCone);
    }
    let root = (s.x1 * s.x1 * s.x2).sqrt();
    let sl = (-lambda(s.a, s.b, p)).sqrt();
    Ok([
        s.x1 * s.x2 / root,
        s.x1 * s.x1 / root,
        -lambda_a(s.a, s.b, p) / (4.0 * sl),
        -lambda_b(s.a, s.b, p) / (2.0 * sl),
    ])
}

/// Default seed offset from the singular orbit.
pub fn default_epsilon(p: &FhnParams) -> f64 {
    1e-3 * p.c1.abs().sqrt().max(1.0)
}

/// Seed state at t = ε from the truncated series at the singular orbit.
///
/// `alpha` per diagram:
/// * ΔSU(2): `[α]` with 8α³ = c₁ (empty slice: α derived from c₁);
/// * {1}×SU(2): `[α₁, α₂, α₃]` with α₂ = α₃ and 8α₁α₂α₃ = −c₁, or `[α]`
///   for α₁ = α₂ = α₃ (empty slice: derived from c₁);
/// * K_{m,n}: `[ȧ(0)]`, the slope of the odd function a.
///
/// (x₁, x₂) are finally rescaled along their series ratio so that H = 0
/// holds to rounding; keeping the ratio preserves ȧ = ḃ when the series has it.
pub fn singular_ic(p: &FhnParams, alpha: &[f64], eps: f64) -> Result<FhnState> {
    if !(eps > 0.0) {
        return Err(Error::InconsistentParams("epsilon must be positive".into()));
    }
    let mut s = match p.diagram {
        Diagram::DeltaSu2 => {
            if !(p.c1 > 0.0 && close(p.c1 + p.c2, 0.0)) {
                return Err(Error::InconsistentParams("delta diagram needs c1 > 0 and c1 + c2 = 0".into()));
            }
            let al = match alpha {
                [] => (p.c1 / 8.0).cbrt(),
                [x] => *x,
                _ => return Err(Error::InconsistentParams("delta diagram takes one alpha".into())),
            };
            if !close(8.0 * al.powi(3), p.c1) {
                return Err(Error::InconsistentParams(format!("8 alpha^3 = {} != c1 = {}", 8.0 * al.powi(3), p.c1)));
            }
            let a = p.c1 + 0.5 * al * eps * eps;
            FhnState {
                t: eps,
                a,
                b: a,
                x1: (al * eps).powi(2),
                x2: (al * eps).powi(2),
            }
        }
        Diagram::OneSu2 => {
            if !(p.c1 < 0.0 && p.c2 == 0.0) {
                return Err(Error::InconsistentParams("one-su2 diagram needs c1 < 0 and c2 = 0".into()));
            }
            let (a1, a2, a3) = match alpha {
                [] => {
                    let x = (-p.c1 / 8.0).cbrt();
                    (x, x, x)
                }
                [x] => (*x, *x, *x),
                [x, y, z] => (*x, *y, *z),
                _ => return Err(Error::InconsistentParams("one-su2 diagram takes one or three alphas".into())),
            };
            if !(a1 > 0.0 && a2 > 0.0 && a3 > 0.0) {
                return Err(Error::InconsistentParams("alphas must be positive".into()));
            }
            if a2 != a3 {
                return Err(Error::InconsistentParams("enhanced symmetry requires alpha2 = alpha3".into()));
            }
            if !close(8.0 * a1 * a2 * a3, -p.c1) {
                return Err(Error::InconsistentParams(format!("8 a1 a2 a3 = {} != -c1 = {}", 8.0 * a1 * a2 * a3, -p.c1)));
            }
            FhnState {
                t: eps,
                a: 0.5 * a2 * eps * eps,
                b: 0.5 * a1 * eps * eps,
                x1: a1 * a2 * eps * eps,
                x2: (a2 * eps).powi(2),
            }
        }
        Diagram::Kmn { m, n } => {
            let r03 = p.kmn_r0_cubed()?;
            let slope = match alpha {
                [x] if *x > 0.0 => *x,
                _ => return Err(Error::InconsistentParams("kmn diagram takes one positive slope".into())),
            };
            let (mf, nf) = (m as f64, n as f64);
            // H = 0 at leading order fixes b̈(0)·ȧ(0) = |m+n|√(mn)|r₀|³
            let beta = (mf + nf).abs() * (mf * nf).sqrt() * r03.abs() / slope;
            FhnState {
                t: eps,
                a: slope * eps,
                b: mf * nf * r03 + 0.5 * beta * eps * eps,
                x1: slope * beta * eps,
                x2: slope * slope,
            }
        }
        Diagram::NoSingularOrbit => return Err(Error::InconsistentParams("diagram has no singular orbit".into())),
    };
    let l = lambda(s.a, s.b, p);
    if !(l < 0.0) {
        return Err(Error::InconsistentParams("seed lies outside the cone; reduce epsilon".into()));
    }
    // 2x₁√x₂ = √(−Λ) with x₁ = ρx₂
    let rho = s.x1 / s.x2;
    s.x2 = ((-l).sqrt() / (2.0 * rho)).powf(2.0 / 3.0);
    s.x1 = rho * s.x2;
    Ok(s)
}

/// Why the trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EndReason {
    Reached,
    /// Λ(a,b) → 0 at this time; the trajectory is truncated there.
    ConeExit(f64),
}

/// A solution of the enhanced system with dense output.
#[derive(Clone, Debug)]
pub struct FhnSolution {
    pub params: FhnParams,
    traj: Trajectory<4>,
    pub end: EndReason,
    /// The trajectory was seeded at the singular orbit (t = 0 ↔ zero section).
    pub singular_start: bool,
    eta_prefix: Vec<f64>,
}

pub fn ode_fn(p: FhnParams) -> impl Fn(f64, &[f64; 4]) -> Option<[f64; 4]> {
    move |t, y| enhanced_ode_rhs(&FhnState::from_array(t, *y), &p).ok()
}

/// Adaptive order-5(4) integration until `t_end` or cone exit.
pub fn integrate(p: &FhnParams, initial: &FhnState, t_end: f64, tol: f64) -> Result<FhnSolution> {
    if !interior(initial, p) {
        return Err(Error::OutsideCone);
    }
    let pp = *p;
    let opts = Options {
        rtol: tol,
        atol: tol,
        h_init: (1e-2 * (t_end - initial.t).abs()).min(initial.t.abs().max(1e-6)),
        ..Options::default()
    };
    let traj = ode::integrate(ode_fn(pp), initial.t, initial.to_array(), t_end, &opts, |_, y| -lambda(y[0], y[1], &pp)).ok_or(Error::OutsideCone)?;
    let end = match traj.stop {
        Stop::Reached => EndReason::Reached,
        Stop::Event(t) => EndReason::ConeExit(t),
        Stop::Underflow(t) | Stop::MaxSteps(t) => {
            let last = traj.samples.last().unwrap();
            let l = lambda(last.y[0], last.y[1], p);
            let scale = (last.y[1] * last.y[1] + p.c1 * p.c2).powi(2).max(1.0);
            if l.abs() < 1e-6 * scale {
                EndReason::ConeExit(t)
            } else {
                return Err(Error::StepFailure(t));
            }
        }
    };
    let mut sol = FhnSolution {
        params: *p,
        traj,
        end,
        singular_start: false,
        eta_prefix: Vec::new(),
    };
    sol.build_eta_prefix();
    Ok(sol)
}

/// Seed at the singular orbit (ε from [`default_epsilon`]) and integrate.
pub fn solve_from_singular_orbit(p: &FhnParams, alpha: &[f64], t_end: f64, tol: f64) -> Result<FhnSolution> {
    let s0 = singular_ic(p, alpha, default_epsilon(p))?;
    let mut sol = integrate(p, &s0, t_end, tol)?;
    sol.singular_start = true;
    Ok(sol)
}

/// The integrand of η: (2ba² + c₂(b²+2a²+c₁c₂)) / √(−Λ).
pub fn eta_integrand(s: &FhnState, p: &FhnParams) -> f64 {
    let (a, b) = (s.a, s.b);
    (2.0 * b * a * a + p.c2 * (b * b + 2.0 * a * a + p.c1 * p.c2)) / (-lambda(a, b, p)).sqrt()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

impl FhnSolution {
    fn build_eta_prefix(&mut self) {
        let p = self.params;
        let mut acc = 0.0;
        let mut prefix = vec![0.0];
        for w in self.traj.samples.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let g = |t: f64| eta_integrand(&FhnState::from_array(t, ode::hermite(&s0, &s1, t)), &p);
            acc += adaptive_simpson(&g, s0.t, s1.t, 1e-10);
            prefix.push(acc);
        }
        self.eta_prefix = prefix;
    }

    pub fn trajectory(&self) -> &Trajectory<4> {
        &self.traj
    }

    pub fn domain(&self) -> (f64, f64) {
        self.traj.span()
    }

    pub fn samples(&self) -> impl Iterator<Item = FhnState> + '_ {
        self.traj.samples.iter().map(|s| FhnState::from_array(s.t, s.y))
    }

    fn check(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::OutOfDomain { t, lo, hi })
        }
    }

    /// Dense (cubic Hermite) state.
    pub fn state_at(&self, t: f64) -> Result<FhnState> {
        self.check(t)?;
        Ok(FhnState::from_array(t, self.traj.at(t).unwrap()))
    }

    /// State by short re-integration from the nearest sample; accurate to
    /// integrator tolerance, suitable for finite differences.
    pub fn state_precise(&self, t: f64) -> Result<FhnState> {
        self.check(t)?;
        let y = self.traj.precise(t, &ode_fn(self.params)).ok_or(Error::OutsideCone)?;
        Ok(FhnState::from_array(t, y))
    }

    /// dx/dt of the state at t (from the ODE).
    pub fn derivative_at(&self, t: f64) -> Result<[f64; 4]> {
        enhanced_ode_rhs(&self.state_precise(t)?, &self.params)
    }

    /// η(t), anchored to 0 at the left end of the domain.
    pub fn eta(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let samples = &self.traj.samples;
        let k = samples.partition_point(|s| s.t <= t).saturating_sub(1).min(samples.len().saturating_sub(2));
        if samples.len() < 2 {
            return Ok(0.0);
        }
        let (s0, s1) = (samples[k], samples[k + 1]);
        let p = self.params;
        let g = |x: f64| eta_integrand(&FhnState::from_array(x, ode::hermite(&s0, &s1, x)), &p);
        Ok(self.eta_prefix[k] + if t > s0.t { adaptive_simpson(&g, s0.t, t, 1e-11) } else { 0.0 })
    }

    /// Rebuild a solution from tabulated (t, a, b, ȧ, ḃ) rows, e.g. read back
    /// from CSV. Rows must be strictly increasing in t with ȧ > 0.
    pub fn from_samples(p: &FhnParams, rows: &[[f64; 5]]) -> Result<FhnSolution> {
        if rows.len() < 2 {
            return Err(Error::InconsistentParams("need at least two samples".into()));
        }
        let f = ode_fn(*p);
        let mut samples = Vec::with_capacity(rows.len());
        for (k, r) in rows.iter().enumerate() {
            let [t, a, b, ad, bd] = *r;
            if !(ad > 0.0) {
                return Err(Error::NotPositive);
            }
            if k > 0 && !(t > rows[k - 1][0]) {
                return Err(Error::InconsistentParams(format!("samples not increasing at t = {t}")));
            }
            let y = [a, b, ad * bd, ad * ad];
            samples.push(ode::Sample { t, y, dy: f(t, &y).ok_or(Error::OutsideCone)? });
        }
        let mut sol = FhnSolution {
            params: *p,
            traj: Trajectory { samples, stop: Stop::Reached },
            end: EndReason::Reached,
            singular_start: false,
            eta_prefix: Vec::new(),
        };
        sol.build_eta_prefix();
        Ok(sol)
    }

    /// Copy of the solution restricted to [t0, t1] (no longer attached to
    /// the singular orbit).
    pub fn restrict(&self, t0: f64, t1: f64) -> Result<FhnSolution> {
        self.check(t0)?;
        self.check(t1)?;
        let f = ode_fn(self.params);
        let mut samples = Vec::new();
        let first = self.traj.precise(t0, &f).unwrap();
        samples.push(ode::Sample { t: t0, y: first, dy: f(t0, &first).ok_or(Error::OutsideCone)? });
        for s in &self.traj.samples {
            if s.t > t0 && s.t < t1 {
                samples.push(*s);
            }
        }
        let last = self.traj.precise(t1, &f).unwrap();
        samples.push(ode::Sample { t: t1, y: last, dy: f(t1, &last).ok_or(Error::OutsideCone)? });
        let mut sol = FhnSolution {
            params: self.params,
            traj: Trajectory { samples, stop: Stop::Reached },
            end: EndReason::Reached,
            singular_start: false,
            eta_prefix: Vec::new(),
        };
        sol.build_eta_prefix();
        Ok(sol)
    }
}

/// Bryant–Salamon closed form at radius r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BsPoint {
    pub r: f64,
    pub a: f64,
    pub adot: f64,
    pub x1: f64,
    pub x2: f64,
    /// dr/dt = ½(c+r²)^{1/6}
    pub drdt: f64,
}

impl BsPoint {
    pub fn state(&self, t: f64) -> FhnState {
        FhnState {
            t,
            a: self.a,
            b: self.a,
            x1: self.x1,
            x2: self.x2,
        }
    }
}

pub fn bs_closed_form(r: f64, c: f64) -> BsPoint {
    let s3 = 3f64.sqrt();
    let a = 0.5 * s3 * r * r;
    let adot = 0.5 * s3 * r * (c + r * r).powf(1.0 / 6.0);
    BsPoint {
        r,
        a,
        adot,
        x1: adot * adot,
        x2: adot * adot,
        drdt: 0.5 * (c + r * r).powf(1.0 / 6.0),
    }
}

/// r(t) for Bryant–Salamon, integrating dr/dt = ½(c+r²)^{1/6} from r(0) = 0.
pub fn bs_radius(c: f64, t_end: f64, tol: f64) -> Trajectory<1> {
    let f = move |_: f64, y: &[f64; 1]| Some([0.5 * (c + y[0] * y[0]).powf(1.0 / 6.0)]);
    ode::integrate(f, 0.0, [0.0], t_end, &Options::with_tol(tol), |_, _| 1.0).expect("radius ODE is regular")
}

/// The invariant coframe with its structure equations.
pub fn coframe() -> &'static Coframe {
    static CF: OnceLock<Coframe> = OnceLock::new();
    CF.get_or_init(|| {
        let mut d = vec![Form::zero(7, 2)];
        for block in [E, F] {
            for i in 0..3 {
                d.push(Form::basis(7, &[block[(i + 1) % 3], block[(i + 2) % 3]]).scale(2.0));
            }
        }
        // reorder: index 0 = dt, 1..3 = e, 4..6 = f (already in that order)
        Coframe::new(d)
    })
}

/// Metric-free coefficient data (a₁,a₂,a₃) and their t-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub a: [f64; 3],
    pub adot: [f64; 3],
}

fn sum_ef(v: &[f64; 3]) -> Form {
    let mut w = Form::zero(7, 2);
    for i in 0..3 {
        w.add_term(&[E[i], F[i]], v[i]);
    }
    w
}

/// φ = −8c₁e₁₂₃ − 8c₂f₁₂₃ + 4d(Σ aᵢ eᵢ∧fᵢ), with d from the structure equations.
pub fn phi_from_coefficients(k: &Coefficients, p: &FhnParams) -> ThreeForm7 {
    let mut f = Form::zero(7, 3);
    f.add_term(&[E[0], E[1], E[2]], -8.0 * p.c1);
    f.add_term(&[F[0], F[1], F[2]], -8.0 * p.c2);
    let d = coframe().d_param(&sum_ef(&k.a), &sum_ef(&k.adot), DT);
    f += &d.scale(4.0);
    ThreeForm7::new(f)
}

/// ∗φ in the invariant coframe (general a₁,a₂,a₃).
pub fn star_phi_from_coefficients(k: &Coefficients, p: &FhnParams) -> FourForm7 {
    let (c1, c2) = (p.c1, p.c2);
    let a = k.a;
    let ad = k.adot;
    let sl = (-big_lambda(a[0], a[1], a[2], p)).sqrt();
    let sq = a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + c1 * c2;
    let prod = a[0] * a[1] * a[2];
    let mut f = Form::zero(7, 4);
    for i in 0..3 {
        let (j, kk) = ((i + 1) % 3, (i + 2) % 3);
        f.add_term(&[E[j], F[j], E[kk], F[kk]], 16.0 * ad[j] * ad[kk]);
    }
    let s = 8.0 / sl;
    f.add_term(&[DT, E[0], E[1], E[2]], s * (2.0 * prod - c1 * sq));
    f.add_term(&[DT, F[0], F[1], F[2]], s * (2.0 * prod + c2 * sq));
    for i in 0..3 {
        let (j, kk) = ((i + 1) % 3, (i + 2) % 3);
        let base = a[i] * (a[i] * a[i] - a[j] * a[j] - a[kk] * a[kk] + c1 * c2);
        f.add_term(&[DT, E[i], F[j], F[kk]], s * (base - 2.0 * c2 * a[j] * a[kk]));
        f.add_term(&[DT, F[i], E[j], E[kk]], s * (base + 2.0 * c1 * a[j] * a[kk]));
    }
    FourForm7::new(f)
}

pub fn assemble_phi(sol: &FhnSolution, t: f64) -> Result<ThreeForm7> {
    Ok(phi_from_coefficients(&sol.state_precise(t)?.coefficients(), &sol.params))
}

pub fn assemble_star_phi(sol: &FhnSolution, t: f64) -> Result<FourForm7> {
    Ok(star_phi_from_coefficients(&sol.state_precise(t)?.coefficients(), &sol.params))
}

/// (‖dφ‖, ‖d∗φ‖) for coefficient data given as a function of t.
///
/// d is expanded on the coframe; the t-derivative of the coefficient forms
/// is a central difference with step h.
pub fn closedness_residual_of(coeffs: &dyn Fn(f64) -> Option<Coefficients>, p: &FhnParams, t: f64, h: f64) -> Option<(f64, f64)> {
    let (k0, km, kp) = (coeffs(t)?, coeffs(t - h)?, coeffs(t + h)?);
    let cf = coframe();
    let phi = phi_from_coefficients(&k0, p).into_form();
    let phi_dot = (&phi_from_coefficients(&kp, p).into_form() - &phi_from_coefficients(&km, p).into_form()).scale(0.5 / h);
    let star = star_phi_from_coefficients(&k0, p).into_form();
    let star_dot = (&star_phi_from_coefficients(&kp, p).into_form() - &star_phi_from_coefficients(&km, p).into_form()).scale(0.5 / h);
    Some((cf.d_param(&phi, &phi_dot, DT).norm(), cf.d_param(&star, &star_dot, DT).norm()))
}

pub fn closedness_residual(sol: &FhnSolution, t: f64, h: f64) -> Result<(f64, f64)> {
    let (lo, hi) = sol.domain();
    if !(t - h >= lo && t + h <= hi) {
        return Err(Error::OutOfDomain { t, lo, hi });
    }
    let f = |s: f64| sol.state_precise(s).ok().map(|x| x.coefficients());
    closedness_residual_of(&f, &sol.params, t, h).ok_or(Error::OutsideCone)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_examples() {
        let p0 = FhnParams { c1: 0.0, c2: 0.0, diagram: Diagram::NoSingularOrbit };
        assert_eq!(big_lambda(1.0, 1.0, 1.0, &p0), -3.0);
        assert_eq!(big_lambda(1.7, 0.0, 0.0, &p0), 1.7f64.powi(4));
    }

    #[test]
    fn hamiltonian_outside_cone() {
        let p = FhnParams::bryant_salamon(1.0);
        let s = FhnState { t: 1.0, a: 1.0, b: 1.0, x1: 0.0, x2: 0.0 };
        assert_eq!(hamiltonian(&s, &p), Err(Error::OutsideCone));
        assert_eq!(enhanced_ode_rhs(&s, &p), Err(Error::OutsideCone));
    }

    #[test]
    fn hamiltonian_zero_iff_product_matches() {
        // c₁ = c₂ = 0, a = b = 1: −Λ = 3, so H = 0 iff 2x₁√x₂ = √3
        let p = FhnParams { c1: 0.0, c2: 0.0, diagram: Diagram::NoSingularOrbit };
        let x2: f64 = 0.81;
        let x1 = 3f64.sqrt() / (2.0 * x2.sqrt());
        let s = FhnState { t: 0.0, a: 1.0, b: 1.0, x1, x2 };
        assert!(hamiltonian(&s, &p).unwrap().abs() < 1e-15);
        let s2 = FhnState { x1: 1.1 * x1, ..s };
        assert!(hamiltonian(&s2, &p).unwrap().abs() > 1e-2);
    }

    #[test]
    fn seed_examples() {
        let p1 = FhnParams::new(8.0, -8.0, Diagram::DeltaSu2).unwrap();
        let eps = 1e-3;
        let s = singular_ic(&p1, &[1.0], eps).unwrap();
        assert!((s.a - (8.0 + 0.5 * eps * eps)).abs() < 1e-15 && s.a == s.b);
        assert!(matches!(singular_ic(&p1, &[1.1], eps), Err(Error::InconsistentParams(_))));

        let p2 = FhnParams::new(-8.0, 0.0, Diagram::OneSu2).unwrap();
        let s = singular_ic(&p2, &[1.0, 1.0, 1.0], eps).unwrap();
        assert_eq!((s.a, s.b), (0.5 * eps * eps, 0.5 * eps * eps));
        assert!(matches!(singular_ic(&p2, &[2.0, 1.0, 1.0], eps), Err(Error::InconsistentParams(_))));

        let p3 = FhnParams::new(-1.0, 1.0, Diagram::Kmn { m: 1, n: 1 }).unwrap();
        assert_eq!(p3.kmn_r0_cubed().unwrap(), 1.0);
        let s = singular_ic(&p3, &[1.0], eps).unwrap();
        assert!((s.b - 1.0).abs() < 1e-5);
        assert!(hamiltonian(&s, &p3).unwrap().abs() < 1e-14);

        assert!(FhnParams::new(-1.0, 1.0, Diagram::Kmn { m: 2, n: 2 }).is_err());
        assert!(FhnParams::new(1.0, 1.0, Diagram::DeltaSu2).is_err());
    }

    #[test]
    fn bs_examples() {
        let p = bs_closed_form(1.0, 1.0);
        assert!((p.a - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((p.adot - 3f64.sqrt() / 2.0 * 2f64.powf(1.0 / 6.0)).abs() < 1e-15);
        let z = bs_closed_form(2.0, 0.0);
        assert!((z.adot - 3f64.sqrt() / 2.0 * 2f64.powf(4.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn diagram_parsing() {
        assert_eq!("kmn:2,3".parse::<Diagram>().unwrap(), Diagram::Kmn { m: 2, n: 3 });
        assert_eq!("delta".parse::<Diagram>().unwrap(), Diagram::DeltaSu2);
        assert!("kmn:2".parse::<Diagram>().is_err());
    }
}
