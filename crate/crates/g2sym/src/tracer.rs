//! Calibrated level sets on the quotient B = (0,π) × Int(I).
//!
//! On B the associative defining function is |μ| = u(t) sin θ and the
//! coassociative one is ν = v(t) cos θ. A [`Profile`] supplies u, v and their
//! derivatives; curves are traced by predictor–corrector continuation.

use crate::error::{Error, Result};
use crate::fhn::{self, Diagram, EndReason, FhnParams, FhnSolution};
use crate::g2_linear;
use crate::multimoment::{self, Point};
use crate::quat::{norm3, Quaternion};
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

const THETA_EDGE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuotientPoint {
    pub theta: f64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Associative,
    Coassociative,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Associative => "assoc",
            CurveKind::Coassociative => "coassoc",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndTag {
    Theta0,
    ThetaPi,
    SingularOrbit,
    ConeExit,
    DomainEnd,
}

impl fmt::Display for EndTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EndTag::Theta0 => "theta_0",
            EndTag::ThetaPi => "theta_pi",
            EndTag::SingularOrbit => "singular_orbit",
            EndTag::ConeExit => "cone_exit",
            EndTag::DomainEnd => "domain_end",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    T2xR,
    S1xR2,
    S3,
    /// L(p; q₁, q₂)
    Lens(i64, i64, i64),
    T3xR,
    Unknown,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::T2xR => f.write_str("T2xR"),
            Topology::S1xR2 => f.write_str("S1xR2"),
            Topology::S3 => f.write_str("S3"),
            Topology::Lens(p, a, b) => write!(f, "L({p};{a},{b})"),
            Topology::T3xR => f.write_str("T3xR"),
            Topology::Unknown => f.write_str("unknown/incomplete"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetCurve {
    pub kind: CurveKind,
    pub level: f64,
    pub points: Vec<QuotientPoint>,
    pub endpoints: [EndTag; 2],
    pub topology: Topology,
    /// Singular fibre targets (θ¹₁, θ²₁, ν) lying over this level (coassociative only).
    pub singular_fibres: Vec<[f64; 3]>,
}

/// Which family the fibre classification refers to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FiberCase {
    /// Bryant–Salamon in the coordinates of the (r, v, w) table, Case 0.
    Bs { c: f64 },
    /// An FHN solution; `b_range` is the open range of b over Int(I).
    Fhn { params: FhnParams, b_range: (f64, f64) },
}

impl FiberCase {
    pub fn from_solution(sol: &FhnSolution) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in sol.samples() {
            lo = lo.min(s.b);
            hi = hi.max(s.b);
        }
        FiberCase::Fhn { params: sol.params, b_range: (lo, hi) }
    }
}

/// Radial data of the defining functions.
pub trait Profile {
    fn domain(&self) -> (f64, f64);
    /// |μ| = u(t) sin θ
    fn u(&self, t: f64) -> f64;
    fn du(&self, t: f64) -> f64;
    /// ν = v(t) cos θ
    fn v(&self, t: f64) -> f64;
    fn dv(&self, t: f64) -> f64;
    fn left_is_singular_orbit(&self) -> bool;
    fn right_is_cone_exit(&self) -> bool;
    fn diagram(&self) -> Diagram;
    fn fiber_case(&self) -> FiberCase;
}

/// An FHN solution seen through u = 4ȧḃ, v = −4(b − c₁).
pub struct FhnProfile<'a> {
    pub sol: &'a FhnSolution,
}

impl<'a> FhnProfile<'a> {
    pub fn new(sol: &'a FhnSolution) -> Self {
        FhnProfile { sol }
    }

    fn state(&self, t: f64) -> fhn::FhnState {
        let (lo, hi) = self.sol.domain();
        self.sol.state_precise(t.clamp(lo, hi)).expect("state inside the cone")
    }

    fn rhs(&self, t: f64) -> [f64; 4] {
        fhn::enhanced_ode_rhs(&self.state(t), &self.sol.params).expect("state inside the cone")
    }
}

impl Profile for FhnProfile<'_> {
    fn domain(&self) -> (f64, f64) {
        self.sol.domain()
    }
    fn u(&self, t: f64) -> f64 {
        4.0 * self.state(t).x1
    }
    fn du(&self, t: f64) -> f64 {
        4.0 * self.rhs(t)[2]
    }
    fn v(&self, t: f64) -> f64 {
        -4.0 * (self.state(t).b - self.sol.params.c1)
    }
    fn dv(&self, t: f64) -> f64 {
        -4.0 * self.rhs(t)[1]
    }
    fn left_is_singular_orbit(&self) -> bool {
        self.sol.singular_start
    }
    fn right_is_cone_exit(&self) -> bool {
        matches!(self.sol.end, EndReason::ConeExit(_))
    }
    fn diagram(&self) -> Diagram {
        self.sol.params.diagram
    }
    fn fiber_case(&self) -> FiberCase {
        FiberCase::from_solution(self.sol)
    }
}

/// Bryant–Salamon with the radius r as the B-coordinate:
/// u = 3r²(c+r²)^{1/3}, v = 2√3 r².
#[derive(Clone, Copy, Debug)]
pub struct BsProfile {
    pub c: f64,
    pub r_max: f64,
}

impl Profile for BsProfile {
    fn domain(&self) -> (f64, f64) {
        (0.0, self.r_max)
    }
    fn u(&self, r: f64) -> f64 {
        3.0 * r * r * (self.c + r * r).cbrt()
    }
    fn du(&self, r: f64) -> f64 {
        let s = self.c + r * r;
        6.0 * r * s.cbrt() + 2.0 * r.powi(3) / s.powf(2.0 / 3.0)
    }
    fn v(&self, r: f64) -> f64 {
        2.0 * 3f64.sqrt() * r * r
    }
    fn dv(&self, r: f64) -> f64 {
        4.0 * 3f64.sqrt() * r
    }
    fn left_is_singular_orbit(&self) -> bool {
        true
    }
    fn right_is_cone_exit(&self) -> bool {
        false
    }
    fn diagram(&self) -> Diagram {
        Diagram::OneSu2
    }
    fn fiber_case(&self) -> FiberCase {
        FiberCase::Bs { c: self.c }
    }
}

/// Value and (θ, t)-gradient of the defining function minus the level.
fn level_fn(p: &dyn Profile, kind: CurveKind, level: f64, theta: f64, t: f64) -> (f64, f64, f64) {
    match kind {
        CurveKind::Associative => {
            let u = p.u(t);
            (u * theta.sin() - level, u * theta.cos(), p.du(t) * theta.sin())
        }
        CurveKind::Coassociative => {
            let v = p.v(t);
            (v * theta.cos() - level, -v * theta.sin(), p.dv(t) * theta.cos())
        }
    }
}

/// Residual of the defining equation at a point.
pub fn defining_residual(p: &dyn Profile, kind: CurveKind, level: f64, q: &QuotientPoint) -> f64 {
    level_fn(p, kind, level, q.theta, q.t).0
}

struct Tracer<'a> {
    p: &'a dyn Profile,
    kind: CurveKind,
    level: f64,
    step: f64,
    tol: f64,
}

impl Tracer<'_> {
    fn f(&self, th: f64, t: f64) -> (f64, f64, f64) {
        level_fn(self.p, self.kind, self.level, th, t)
    }

    fn correct(&self, mut th: f64, mut t: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.p.domain();
        for _ in 0..50 {
            let (f, ft, fr) = self.f(th, t.clamp(lo, hi));
            if f.abs() <= self.tol {
                return Some((th, t));
            }
            let g2 = ft * ft + fr * fr;
            if g2 == 0.0 {
                return None;
            }
            th -= f * ft / g2;
            t -= f * fr / g2;
            if t < lo || t > hi {
                // leave it to the boundary landing
                return Some((th, t));
            }
        }
        let (f, _, _) = self.f(th, t);
        (f.abs() <= 1e3 * self.tol).then_some((th, t))
    }

    /// Newton in one variable with the other fixed.
    fn solve_1d(&self, fixed_theta: Option<f64>, fixed_t: Option<f64>, mut x: f64, lo: f64, hi: f64) -> f64 {
        for _ in 0..100 {
            let (th, t) = match (fixed_theta, fixed_t) {
                (Some(th), _) => (th, x),
                (_, Some(t)) => (x, t),
                _ => unreachable!(),
            };
            let (f, ft, fr) = self.f(th, t);
            if f.abs() <= self.tol {
                break;
            }
            let d = if fixed_theta.is_some() { fr } else { ft };
            if d == 0.0 {
                break;
            }
            x = (x - f / d).clamp(lo, hi);
        }
        x
    }

    fn left_tag(&self) -> EndTag {
        if self.p.left_is_singular_orbit() {
            EndTag::SingularOrbit
        } else {
            EndTag::DomainEnd
        }
    }

    fn right_tag(&self) -> EndTag {
        if self.p.right_is_cone_exit() {
            EndTag::ConeExit
        } else {
            EndTag::DomainEnd
        }
    }

    /// Follow the curve from `start` with initial tangent sign `dir`.
    fn run(&self, start: (f64, f64), dir: f64) -> (Vec<QuotientPoint>, EndTag) {
        let (lo, hi) = self.p.domain();
        let mut pts = Vec::new();
        let (mut th, mut t) = start;
        let mut prev: Option<(f64, f64)> = None;
        for _ in 0..200_000 {
            let (_, ft, fr) = self.f(th, t);
            let g = (ft * ft + fr * fr).sqrt();
            if g == 0.0 {
                return (pts, EndTag::DomainEnd);
            }
            let mut tan = (-fr / g, ft / g);
            match prev {
                Some(pv) if pv.0 * tan.0 + pv.1 * tan.1 < 0.0 => tan = (-tan.0, -tan.1),
                None => tan = (dir * tan.0, dir * tan.1),
                _ => {}
            }
            prev = Some(tan);
            let (pth, pt) = (th + self.step * tan.0, t + self.step * tan.1);
            let (nth, nt) = self.correct(pth, pt).unwrap_or((pth, pt));
            if nth <= THETA_EDGE || nth >= PI - THETA_EDGE {
                let tb = if nth <= THETA_EDGE { 0.0 } else { PI };
                let tt = self.solve_1d(Some(tb), None, t, lo, hi);
                pts.push(QuotientPoint { theta: tb, t: tt });
                return (pts, if tb == 0.0 { EndTag::Theta0 } else { EndTag::ThetaPi });
            }
            if nt <= lo || nt >= hi {
                let tb = if nt <= lo { lo } else { hi };
                let guess = th + (nth - th) * ((tb - t) / (nt - t)).clamp(0.0, 1.0);
                let thb = self.solve_1d(None, Some(tb), guess, 0.0, PI);
                pts.push(QuotientPoint { theta: thb, t: tb });
                return (pts, if tb == lo { self.left_tag() } else { self.right_tag() });
            }
            th = nth;
            t = nt;
            pts.push(QuotientPoint { theta: th, t });
        }
        (pts, EndTag::DomainEnd)
    }

    fn trace_from(&self, seed: (f64, f64)) -> LevelSetCurve {
        let (mut back, tag_b) = self.run(seed, -1.0);
        let (fwd, tag_f) = self.run(seed, 1.0);
        back.reverse();
        back.push(QuotientPoint { theta: seed.0, t: seed.1 });
        back.extend(fwd);
        LevelSetCurve {
            kind: self.kind,
            level: self.level,
            points: back,
            endpoints: [tag_b, tag_f],
            topology: Topology::Unknown,
            singular_fibres: Vec::new(),
        }
    }
}

fn near_curve(c: &LevelSetCurve, th: f64, t: f64, d: f64) -> bool {
    c.points.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let (dx, dy) = (b.theta - a.theta, b.t - a.t);
        let l2 = dx * dx + dy * dy;
        let s = if l2 > 0.0 { (((th - a.theta) * dx + (t - a.t) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let (px, py) = (a.theta + s * dx - th, a.t + s * dy - t);
        px * px + py * py <= d * d
    })
}

fn grid(p: &dyn Profile, n: usize) -> Vec<f64> {
    let (lo, hi) = p.domain();
    (0..=n).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / (n as f64 + 1.0)).collect()
}

/// Seeds on the (θ, t) plane from the separable form of the defining function.
fn seeds(p: &dyn Profile, kind: CurveKind, level: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for t in grid(p, 400) {
        match kind {
            CurveKind::Associative => {
                let r = level / p.u(t);
                if r.abs() <= 1.0 {
                    let th = r.asin();
                    out.push((th, t));
                    out.push((PI - th, t));
                }
            }
            CurveKind::Coassociative => {
                let r = level / p.v(t);
                if r.abs() <= 1.0 {
                    out.push((r.acos(), t));
                }
            }
        }
    }
    out
}

fn trace(p: &dyn Profile, kind: CurveKind, level: f64, step: f64) -> Result<Vec<LevelSetCurve>> {
    let (lo, hi) = p.domain();
    let g = grid(p, 400);
    let sup = g
        .iter()
        .map(|&t| match kind {
            CurveKind::Associative => p.u(t).abs(),
            CurveKind::Coassociative => p.v(t).abs(),
        })
        .fold(0.0, f64::max);
    if level.abs() > sup {
        return Err(Error::EmptyLevel { level, lo, hi });
    }
    let tr = Tracer {
        p,
        kind,
        level,
        step,
        tol: 1e-12 * (1.0 + level.abs()),
    };
    let mut curves: Vec<LevelSetCurve> = Vec::new();
    for (th, t) in seeds(p, kind, level) {
        if curves.iter().any(|c| near_curve(c, th, t, 2.0 * step)) {
            continue;
        }
        let Some(s) = tr.correct(th, t) else { continue };
        if s.1 <= lo || s.1 >= hi {
            continue;
        }
        curves.push(tr.trace_from(s));
    }
    if curves.is_empty() {
        return Err(Error::EmptyLevel { level, lo, hi });
    }
    Ok(curves)
}

fn boundary_lines(p: &dyn Profile, step: f64) -> Vec<LevelSetCurve> {
    let (lo, hi) = p.domain();
    let n = (((hi - lo) / step).ceil() as usize).max(2);
    let left = if p.left_is_singular_orbit() { EndTag::SingularOrbit } else { EndTag::DomainEnd };
    let right = if p.right_is_cone_exit() { EndTag::ConeExit } else { EndTag::DomainEnd };
    [0.0, PI]
        .iter()
        .map(|&th| LevelSetCurve {
            kind: CurveKind::Associative,
            level: 0.0,
            points: (0..=n).map(|k| QuotientPoint { theta: th, t: lo + (hi - lo) * k as f64 / n as f64 }).collect(),
            endpoints: [left, right],
            topology: Topology::Unknown,
            singular_fibres: Vec::new(),
        })
        .collect()
}

/// Level sets of |μ| = u sin θ in B. Level 0 yields the two boundary lines θ ∈ {0, π}.
pub fn trace_associative(p: &dyn Profile, level: f64, step: f64) -> Result<Vec<LevelSetCurve>> {
    if !(level >= 0.0) {
        return Err(Error::InconsistentParams(format!("associative level must be >= 0, got {level}")));
    }
    let mut curves = if level == 0.0 { boundary_lines(p, step) } else { trace(p, CurveKind::Associative, level, step)? };
    for c in &mut curves {
        c.topology = classify_associative(c, p.diagram()).unwrap_or(Topology::Unknown);
    }
    Ok(curves)
}

/// Level sets of ν = v cos θ in B.
pub fn trace_coassociative(p: &dyn Profile, nu_level: f64, step: f64) -> Result<Vec<LevelSetCurve>> {
    let mut curves = trace(p, CurveKind::Coassociative, nu_level, step)?;
    let case = p.fiber_case();
    let sing: Vec<[f64; 3]> = singular_targets(&case).into_iter().filter(|x| (x[2] - nu_level).abs() <= 1e-9 * (1.0 + nu_level.abs())).collect();
    for c in &mut curves {
        c.topology = Topology::T3xR;
        c.singular_fibres = sing.clone();
    }
    Ok(curves)
}

pub fn classify_associative(curve: &LevelSetCurve, diagram: Diagram) -> Result<Topology> {
    let _ = diagram;
    if curve.kind != CurveKind::Associative {
        return Err(Error::Unclassifiable("not an associative curve".into()));
    }
    if curve.endpoints.contains(&EndTag::ConeExit) {
        return Err(Error::Unclassifiable(Topology::Unknown.to_string()));
    }
    let on_boundary = curve.points.iter().all(|q| q.theta == 0.0 || q.theta == PI);
    if on_boundary && curve.endpoints.contains(&EndTag::SingularOrbit) {
        return Ok(Topology::S1xR2);
    }
    Ok(Topology::T2xR)
}

/// Associatives lying in the singular orbit.
pub fn classify_singular_orbit(diagram: Diagram) -> Result<Vec<Topology>> {
    match diagram {
        Diagram::DeltaSu2 | Diagram::OneSu2 => Ok(vec![Topology::S3]),
        Diagram::Kmn { m, n } => Ok(vec![Topology::Lens(n, m, -m), Topology::Lens(m, -n, n)]),
        Diagram::NoSingularOrbit => Err(Error::Unclassifiable("no singular orbit".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberStatus {
    SmoothT3xR,
    SmoothT2xR2,
    SingularHlCone,
    NotThroughSingularSet,
}

impl fmt::Display for FiberStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FiberStatus::SmoothT3xR => "smooth_T3xR",
            FiberStatus::SmoothT2xR2 => "smooth_T2xR2",
            FiberStatus::SingularHlCone => "singular_HLcone",
            FiberStatus::NotThroughSingularSet => "not_through_singular_set",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoassocFiberSpec {
    pub target: [f64; 3],
    pub singular: bool,
}

impl CoassocFiberSpec {
    pub fn new(target: [f64; 3]) -> Self {
        CoassocFiberSpec { target, singular: false }
    }

    pub fn classified(target: [f64; 3], case: &FiberCase) -> Result<Self> {
        let s = coassoc_fiber_status(&Self::new(target), case)?;
        Ok(CoassocFiberSpec { target, singular: s == FiberStatus::SingularHlCone })
    }
}

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn is_zero(a: f64) -> bool {
    eq(a, 0.0)
}

/// Targets whose fibre meets the 2-dimensional stabilizer set.
pub fn singular_targets(case: &FiberCase) -> Vec<[f64; 3]> {
    match *case {
        FiberCase::Bs { c } => {
            let x = 3.0 * 3f64.sqrt() / 4.0 * c;
            vec![[x, 0.0, 0.0], [-x, 0.0, 0.0]]
        }
        FiberCase::Fhn { params, .. } => match params.diagram {
            Diagram::DeltaSu2 => vec![[2.0 * params.c1, 0.0, 0.0], [-2.0 * params.c1, 0.0, 0.0]],
            Diagram::OneSu2 => {
                let x = 4.0 * params.c1.abs();
                vec![[0.0, 0.0, x], [0.0, 0.0, -x]]
            }
            Diagram::Kmn { .. } => {
                let Some((a, b, cc)) = kmn_scales(&params) else { return vec![] };
                [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)].iter().map(|&(x, y)| [a * x * y, b * y, cc * x]).collect()
            }
            Diagram::NoSingularOrbit => vec![],
        },
    }
}

/// (2mnr₀³, −2n(m+n)r₀³, −4m(m+n)r₀³)
fn kmn_scales(p: &FhnParams) -> Option<(f64, f64, f64)> {
    let Diagram::Kmn { m, n } = p.diagram else { return None };
    let r03 = p.kmn_r0_cubed().ok()?;
    let (m, n) = (m as f64, n as f64);
    Some((2.0 * m * n * r03, -2.0 * n * (m + n) * r03, -4.0 * m * (m + n) * r03))
}

/// Fibres meeting the principal part of the 1-dimensional stabilizer set:
/// (ε₁2b, ε₂2(b+c₂), ε₃4(b−c₁)) with εᵢ = ±1, ε₁ε₂ε₃ = 1, b in the open range of b.
fn through_principal_stabilizer(x: &[f64; 3], c1: f64, c2: f64, b_range: (f64, f64)) -> bool {
    for e1 in [1.0, -1.0] {
        for e2 in [1.0, -1.0] {
            let e3 = e1 * e2;
            let b = e1 * x[0] / 2.0;
            if b > b_range.0 && b < b_range.1 && eq(x[1], e2 * 2.0 * (b + c2)) && eq(x[2], e3 * 4.0 * (b - c1)) {
                return true;
            }
        }
    }
    false
}

pub fn coassoc_fiber_status(spec: &CoassocFiberSpec, case: &FiberCase) -> Result<FiberStatus> {
    let x = spec.target;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnknownCase("non-finite target".into()));
    }
    if singular_targets(case).iter().any(|s| (0..3).all(|i| eq(s[i], x[i]))) {
        return Ok(FiberStatus::SingularHlCone);
    }
    match *case {
        FiberCase::Bs { c } => {
            let k = 3.0 * 3f64.sqrt() / 4.0 * c;
            if is_zero(x[1]) && is_zero(x[2]) && x[0].abs() < k {
                return Ok(FiberStatus::SmoothT2xR2);
            }
            // the set A: (±(k + a), −a, ±2a) ∪ (±(k + a), +a, ∓2a), a > 0
            let a = x[1].abs();
            if a > 0.0 && !is_zero(a) && eq(x[0].abs(), k + a) && eq(x[2].abs(), 2.0 * a) {
                let s0 = x[0].signum();
                let s2 = x[2].signum();
                let ok = if x[1] < 0.0 { s0 == s2 } else { s0 == -s2 };
                if ok {
                    return Ok(FiberStatus::SmoothT2xR2);
                }
            }
            Ok(FiberStatus::NotThroughSingularSet)
        }
        FiberCase::Fhn { params, b_range } => {
            match params.diagram {
                Diagram::DeltaSu2 => {
                    if is_zero(x[1]) && is_zero(x[2]) && x[0].abs() < 2.0 * params.c1 {
                        return Ok(FiberStatus::SmoothT2xR2);
                    }
                }
                Diagram::OneSu2 => {
                    if is_zero(x[0]) && is_zero(x[1]) && x[2].abs() < 4.0 * params.c1.abs() {
                        return Ok(FiberStatus::SmoothT2xR2);
                    }
                }
                Diagram::Kmn { .. } => {
                    let (a, b, c) = kmn_scales(&params).ok_or_else(|| Error::UnknownCase("kmn parameters".into()))?;
                    let (yy, xx) = (x[1] / b, x[2] / c);
                    if eq(x[0], a * xx * yy) && xx.abs() <= 1.0 + 1e-12 && yy.abs() <= 1.0 + 1e-12 {
                        let (ex, ey) = (eq(xx.abs(), 1.0), eq(yy.abs(), 1.0));
                        return Ok(if ex || ey { FiberStatus::SmoothT2xR2 } else { FiberStatus::SmoothT3xR });
                    }
                }
                Diagram::NoSingularOrbit => {}
            }
            if through_principal_stabilizer(&x, params.c1, params.c2, b_range) {
                return Ok(FiberStatus::SmoothT2xR2);
            }
            Ok(FiberStatus::NotThroughSingularSet)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FibrationOutcome {
    GlobalFibration,
    SplitRequired { u_minus: f64, u_plus: f64, v_minus: f64, v_plus: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FibrationReport {
    pub outcome: FibrationOutcome,
    /// min |u̇v sin²θ + uv̇ cos²θ| over the 50×50 grid.
    pub min_jacobian: f64,
    /// v was replaced by −v to make it positive.
    pub v_flipped: bool,
}

/// Test whether α(θ,t) = (u sin θ, v cos θ) is a diffeomorphism onto a convex image.
pub fn alpha_fibration_test(p: &dyn Profile) -> Result<FibrationReport> {
    let (lo, hi) = p.domain();
    let ts: Vec<f64> = (0..=200).map(|k| lo + (hi - lo) * k as f64 / 200.0).collect();
    let mid = 0.5 * (lo + hi);
    let sv = if p.v(mid) < 0.0 { -1.0 } else { 1.0 };
    for &t in &ts[1..ts.len() - 1] {
        let (du, dv) = (p.du(t), sv * p.dv(t));
        if !(du * dv > 0.0) {
            return Err(Error::HypothesisFailed { t, what: format!("u' = {du:e} and v' = {dv:e} lack a common strict sign") });
        }
    }
    let mut min_j = f64::INFINITY;
    let mut sign = 0.0;
    for i in 0..50 {
        let th = PI * (i as f64 + 0.5) / 50.0;
        for k in 0..50 {
            let t = lo + (hi - lo) * (k as f64 + 0.5) / 50.0;
            let j = p.du(t) * sv * p.v(t) * th.sin().powi(2) + p.u(t) * sv * p.dv(t) * th.cos().powi(2);
            if sign == 0.0 {
                sign = j.signum();
            }
            if j == 0.0 || j.signum() != sign {
                return Err(Error::HypothesisFailed { t, what: format!("alpha Jacobian vanishes near theta = {th}") });
            }
            min_j = min_j.min(j.abs());
        }
    }
    let outcome = if p.left_is_singular_orbit() {
        FibrationOutcome::GlobalFibration
    } else {
        FibrationOutcome::SplitRequired {
            u_minus: p.u(lo),
            u_plus: p.u(hi),
            v_minus: sv * p.v(lo),
            v_plus: sv * p.v(hi),
        }
    };
    Ok(FibrationReport { outcome, min_jacobian: min_j, v_flipped: sv < 0.0 })
}

/// A point (t, p, q) over (θ, t) with q = 1, w = i and v = (cos θ, −sin θ, 0).
pub fn lift(qp: &QuotientPoint) -> Point {
    Point::new(qp.t, Quaternion::exp_pure([0.0, 0.0, 0.5 * qp.theta]), crate::quat::ONE)
}

/// |cos ∠(d|μ|, dν)| in the metric g⁻¹ of the G2 structure, with both
/// differentials from central differences along the frame flows.
pub fn gradient_orthogonality(sol: &FhnSolution, qp: &QuotientPoint, h: f64) -> Result<f64> {
    let pt = lift(qp);
    let mut dm = [0.0; 7];
    let mut dn = [0.0; 7];
    for d in 0..7 {
        let x = g2_linear::unit(d);
        let a = multimoment::moment_values_at(&pt.flow(&x, h), sol)?;
        let b = multimoment::moment_values_at(&pt.flow(&x, -h), sol)?;
        dm[d] = (norm3(a.mu) - norm3(b.mu)) / (2.0 * h);
        dn[d] = (a.nu - b.nu) / (2.0 * h);
    }
    let g = g2_linear::metric_from_phi(&fhn::assemble_phi(sol, qp.t)?)?;
    let gi = g.inverse();
    let ip = |x: &[f64; 7], y: &[f64; 7]| -> f64 { (0..7).map(|i| (0..7).map(|j| x[i] * gi[(i, j)] * y[j]).sum::<f64>()).sum() };
    let den = (ip(&dm, &dm) * ip(&dn, &dn)).sqrt();
    if den == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(ip(&dm, &dn).abs() / den)
}

/// Decimal with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    let dec = (11 - e).max(0) as usize;
    format!("{x:.dec$}")
}

const CSV_HEADER: &str = "curve_id,kind,level,theta,t";

/// Trace the requested levels and write CSV rows; optionally an SVG overlay.
pub fn render_levelsets(p: &dyn Profile, mu_levels: &[f64], nu_levels: &[f64], step: f64, csv: &mut dyn Write, svg: Option<&mut dyn Write>) -> Result<Vec<LevelSetCurve>> {
    let mut curves = Vec::new();
    for &l in mu_levels {
        match trace_associative(p, l, step) {
            Ok(cs) => curves.extend(cs),
            Err(Error::EmptyLevel { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    for &l in nu_levels {
        match trace_coassociative(p, l, step) {
            Ok(cs) => curves.extend(cs),
            Err(Error::EmptyLevel { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    writeln!(csv, "{CSV_HEADER}")?;
    for (id, c) in curves.iter().enumerate() {
        for q in &c.points {
            writeln!(csv, "{id},{},{},{},{}", c.kind, fmt12(c.level), fmt12(q.theta), fmt12(q.t))?;
        }
    }
    if let Some(out) = svg {
        write_svg(p, &curves, out)?;
    }
    Ok(curves)
}

fn write_svg(p: &dyn Profile, curves: &[LevelSetCurve], out: &mut dyn Write) -> Result<()> {
    let (w, h, m) = (640.0, 480.0, 40.0);
    let (lo, hi) = p.domain();
    let sx = |th: f64| m + (w - 2.0 * m) * th / PI;
    let sy = |t: f64| h - m - (h - 2.0 * m) * (t - lo) / (hi - lo);
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#)?;
    writeln!(out, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m)?;
    writeln!(out, r#"<text x="{}" y="{}" font-size="12">theta</text><text x="4" y="{}" font-size="12">t</text>"#, w / 2.0, h - 8.0, h / 2.0)?;
    for c in curves {
        let (color, width) = match c.kind {
            CurveKind::Associative => ("#1f77b4", 1.2),
            CurveKind::Coassociative if !c.singular_fibres.is_empty() => ("#d62728", 2.5),
            CurveKind::Coassociative => ("#ff7f0e", 1.2),
        };
        let pts: Vec<String> = c.points.iter().map(|q| format!("{:.2},{:.2}", sx(q.theta), sy(q.t))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"><title>{} level {}</title></polyline>"#, pts.join(" "), c.kind, fmt12(c.level))?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}
