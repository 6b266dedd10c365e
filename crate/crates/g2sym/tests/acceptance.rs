//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion
//! straight to stderr, so the lines show up even under output capture.

use g2sym::ext::Form;
use g2sym::fhn::{self, FhnParams, FhnSolution};
use g2sym::g2_linear::*;
use g2sym::multimoment::{self, BsCase, Moment, Point};
use g2sym::quat::{cross3, dot3, norm3, Quaternion};
use g2sym::tracer::{self, BsProfile, CurveKind, FhnProfile, FibrationOutcome, QuotientPoint};
use g2sym::trisymplectic::{self as tri, BuiltinT, M3};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::io::Write;

const S3: f64 = 1.732_050_807_568_877_2;

fn report(n: usize, what: &str, ok: bool, detail: String) -> bool {
    let _ = writeln!(std::io::stderr(), "criterion {n} ({what}): {} — {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..n)
        .flat_map(|last| {
            subsets(last, k - 1).into_iter().map(move |mut s| {
                s.push(last);
                s
            })
        })
        .collect()
}

fn c1_tables() -> bool {
    let dx = |i: usize| Form::basis(7, &[i]);
    let omega = |i: usize| {
        let (j, k) = (1 + (i + 1) % 3, 1 + (i + 2) % 3);
        &dx(A0).wedge(&dx(A0 + 1 + i)) - &dx(A0 + j).wedge(&dx(A0 + k))
    };
    let mut phi = dx(X1).wedge(&dx(X2)).wedge(&dx(X3));
    let mut sphi = Form::basis(7, &[A0, A0 + 1, A0 + 2, A0 + 3]);
    for i in 0..3 {
        phi += &dx(i).wedge(&omega(i));
        sphi = &sphi - &dx((i + 1) % 3).wedge(&dx((i + 2) % 3)).wedge(&omega(i));
    }
    let (p0, s0) = (standard_phi0(), standard_star_phi0());
    let mut exact = 0;
    for idx in subsets(7, 3) {
        exact += (p0.coeff(&idx) == phi.coeff(&idx)) as usize;
    }
    for idx in subsets(7, 4) {
        exact += (s0.coeff(&idx) == sphi.coeff(&idx)) as usize;
    }
    let g = metric_from_phi(&p0).unwrap();
    let dev = (g.matrix - Mat7::identity()).abs().max();
    report(1, "standard tables and metric", exact == 70 && dev <= 1e-12, format!("{exact}/70 coefficients exact, |g − I| = {dev:.2e}"))
}

fn bs_time(r: f64, c: f64) -> f64 {
    let n = 4000;
    let h = r / n as f64;
    let f = |s: f64| 2.0 * (c + s * s).powf(-1.0 / 6.0);
    let mut acc = f(0.0) + f(r);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    acc * h / 3.0
}

fn bs_r_of_t(t: f64, c: f64) -> f64 {
    let mut r = (t / 3.0).powf(1.5).max(t * 0.5);
    for _ in 0..50 {
        let dr = (bs_time(r, c) - t) * 0.5 * (c + r * r).powf(1.0 / 6.0);
        r -= dr;
        if dr.abs() < 1e-15 * r.max(1.0) {
            break;
        }
    }
    r
}

fn c2_bs_recovery(sol: &FhnSolution) -> bool {
    let mut sup: f64 = 0.0;
    let mut hmax: f64 = 0.0;
    let mut n = 0;
    for s in sol.samples() {
        hmax = hmax.max(fhn::hamiltonian(&s, &sol.params).unwrap().abs());
        let r = bs_r_of_t(s.t, 1.0);
        if !(0.1..=5.0).contains(&r) {
            continue;
        }
        let bs = fhn::bs_closed_form(r, 1.0);
        sup = sup.max((s.a - bs.a).abs()).max((s.b - bs.a).abs()).max((s.adot() - bs.adot).abs()).max((s.bdot() - bs.adot).abs());
        n += 1;
    }
    report(2, "Bryant–Salamon recovery", n > 20 && sup <= 1e-6 && hmax <= 1e-8, format!("sup error {sup:.2e} over {n} samples, max |H| {hmax:.2e}"))
}

fn c3_closedness(sol: &FhnSolution) -> bool {
    let (dp, dsp) = fhn::closedness_residual(sol, 1.0, 1e-4).unwrap();
    let shifted = |da: f64, dad: f64| {
        move |t: f64| {
            sol.state_precise(t).ok().map(|s| {
                let mut c = s.coefficients();
                for i in 0..3 {
                    c.a[i] += da;
                    c.adot[i] += dad;
                }
                c
            })
        }
    };
    let (pa, sa) = fhn::closedness_residual_of(&shifted(0.1, 0.0), &sol.params, 1.0, 1e-4).unwrap();
    let (pd, sd) = fhn::closedness_residual_of(&shifted(0.0, 0.1), &sol.params, 1.0, 1e-4).unwrap();
    let ok = dp <= 1e-6 && dsp <= 1e-6 && pa.max(sa) >= 1e-2 && pd.max(sd) >= 1e-2;
    report(
        3,
        "closedness along the flow",
        ok,
        format!("|dφ| {dp:.1e}, |d∗φ| {dsp:.1e}; a+0.1: |dφ| {pa:.1e}, |d∗φ| {sa:.2e}; ȧ+0.1: |dφ| {pd:.2e}, |d∗φ| {sd:.2e}"),
    )
}

fn random_unit(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = Quaternion::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if q.norm() > 0.2 {
            return q.normalize();
        }
    }
}

fn c4_moments(sol: &FhnSolution) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut grad, mut along, mut table) = (0f64, 0f64, 0f64);
    let mut n = 0;
    while n < 20 {
        let pt = Point::new(rng.gen_range(0.5..3.5), random_unit(&mut rng), random_unit(&mut rng));
        let pair = pt.hopf().unwrap();
        if norm3(cross3(pair.v, pair.w)) <= 0.2 {
            continue;
        }
        n += 1;
        grad = grad.max(multimoment::gradient_identity_residual(Moment::Nu, &pt, sol, 1e-4).unwrap());
        for i in 0..3 {
            grad = grad.max(multimoment::gradient_identity_residual(Moment::Mu(i), &pt, sol, 1e-4).unwrap());
        }
        let d = multimoment::mu_derivative_along_cross(&pt, sol).unwrap();
        along = along.max(d.iter().fold(0f64, |m, x| m.max(x.abs())));
        let r = rng.gen_range(0.1..5.0);
        let nu = multimoment::bs_moment_values(BsCase::Zero, &pair, r, 1.0).nu;
        table = table.max((nu - 2.0 * S3 * r * r * dot3(pair.v, pair.w)).abs());
    }
    report(
        4,
        "multi-moment maps",
        grad <= 1e-6 && along <= 1e-8 && table <= 1e-9,
        format!("gradient identities {grad:.1e}, μ along cross {along:.1e}, ν table {table:.1e}"),
    )
}

fn c5_level_sets(sol: &FhnSolution) -> bool {
    let prof = BsProfile { c: 1.0, r_max: 5.0 };
    let u = |r: f64| 3.0 * r * r * (1.0 + r * r).cbrt();
    let mut assoc: f64 = 0.0;
    for level in [0.5, 3.0, 10.0, 40.0] {
        for c in tracer::trace_associative(&prof, level, 0.01).unwrap() {
            for q in &c.points {
                assoc = assoc.max((u(q.t) * q.theta.sin() - level).abs());
            }
        }
    }
    let curves = tracer::trace_coassociative(&FhnProfile::new(sol), -6.0, 0.02).unwrap();
    let pts: Vec<QuotientPoint> = curves.iter().flat_map(|c| c.points[1..c.points.len() - 1].iter().copied()).filter(|q| q.t > 0.2 && q.t < 2.8).collect();
    let stride = (pts.len() / 50).max(1);
    let orth = pts.iter().step_by(stride).take(50).map(|q| tracer::gradient_orthogonality(sol, q, 1e-4).unwrap()).fold(0f64, f64::max);
    let mu: Vec<f64> = (1..=8).map(|k| 4.0 * k as f64).collect();
    let nu: Vec<f64> = (-4..=3).map(|k| 6.0 * k as f64).collect();
    let fig = tracer::render_levelsets(&prof, &mu, &nu, 0.02, &mut std::io::sink(), None).unwrap();
    let k = 3.0 * S3 / 4.0;
    let line = fig.iter().find(|c| c.kind == CurveKind::Coassociative && c.level == 0.0 && c.points.iter().all(|q| (q.theta - PI / 2.0).abs() < 1e-12));
    let mut sing: Vec<[f64; 3]> = fig.iter().flat_map(|c| c.singular_fibres.iter().copied()).collect();
    sing.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let fibres_ok = sing.len() == 2 && (sing[0][0] + k).abs() < 1e-12 && (sing[1][0] - k).abs() < 1e-12 && sing.iter().all(|s| s[1] == 0.0 && s[2] == 0.0);
    report(
        5,
        "level-set tracing",
        assoc <= 1e-9 && pts.len() >= 50 && orth <= 1e-6 && line.is_some() && fibres_ok,
        format!("assoc residual {assoc:.1e}, orthogonality {orth:.1e} at {} points, θ = π/2 line {}, singular fibres {sing:?}", pts.len().min(50), line.is_some()),
    )
}

fn c6_fibration() -> bool {
    let prof = BsProfile { c: 1.0, r_max: 5.0 };
    let global = tracer::alpha_fibration_test(&prof).unwrap().outcome == FibrationOutcome::GlobalFibration;
    let sol = fhn::solve_from_singular_orbit(&FhnParams::bryant_salamon(1.0), &[], 6.0, 1e-12).unwrap();
    let t_of_r = |r: f64| {
        let target = S3 / 2.0 * r * r;
        let (mut lo, mut hi) = sol.domain();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sol.state_precise(mid).unwrap().a < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let part = sol.restrict(t_of_r(1.0), t_of_r(2.0)).unwrap();
    let want = 4.0 * fhn::bs_closed_form(1.0, 1.0).adot.powi(2);
    let (split, got) = match tracer::alpha_fibration_test(&FhnProfile::new(&part)).unwrap().outcome {
        FibrationOutcome::SplitRequired { u_minus, .. } => ((u_minus - want).abs() <= 1e-6 * want, u_minus),
        _ => (false, f64::NAN),
    };
    report(6, "α-map fibration", global && split, format!("from r = 0: global {global}; r ∈ [1, 2]: u₋ = {got:.10} vs 4ȧḃ = {want:.10}"))
}

fn c7_tau_flow() -> bool {
    let k: [f64; 3] = [1.0, 2.0, 3.0];
    let tau0 = M3::from_diagonal(&Vector3::new(k[0].sqrt(), k[1].sqrt(), k[2].sqrt()));
    let tr = tri::integrate_tau(&BuiltinT::Identity, &tau0, (0.0, 5.0), 1e-12).unwrap();
    let (mut hk, mut offd, mut adj, mut min_eig) = (0f64, 0f64, 0f64, f64::INFINITY);
    for s in tr.samples() {
        for i in 0..3 {
            hk = hk.max((s.tau[(i, i)] - (2.0 * s.r + k[i]).sqrt()).abs());
            for j in 0..3 {
                if i != j {
                    offd = offd.max(s.tau[(i, j)].abs());
                }
            }
        }
        let eta = tri::eta_from_tau(&s.tau).unwrap();
        adj = adj.max((tri::adjugate(&eta.transpose()) - s.tau).abs().max());
        min_eig = min_eig.min(tri::metric_hat(&s.tau).unwrap().symmetric_eigenvalues().min());
    }
    // a generic (non-diagonal) start as well
    let gen = M3::new(1.5, 0.2, -0.1, 0.3, 1.2, 0.25, -0.2, 0.1, 0.9);
    let path = BuiltinT::Scaled { a: 1.0, b: 0.3 };
    let gtr = tri::integrate_tau(&path, &gen, (0.0, 1.5), 1e-12).unwrap();
    for s in gtr.samples() {
        let eta = tri::eta_from_tau(&s.tau).unwrap();
        adj = adj.max((tri::adjugate(&eta.transpose()) - s.tau).abs().max());
        min_eig = min_eig.min(tri::metric_hat(&s.tau).unwrap().symmetric_eigenvalues().min());
    }
    let mut closed: f64 = 0.0;
    let mut ratio_dev: f64 = 0.0;
    let mut pert = f64::INFINITY;
    for (t, p, r) in [(&tr, &BuiltinT::Identity, 2.0), (&gtr, &path, 0.8)] {
        let mut worst_p: f64 = 0.0;
        for i in 0..3 {
            closed = closed.max(tri::closedness_residual_triple(t, i, r, 1e-4).unwrap());
            let (a, b) = (tri::closedness_residual_triple(t, i, r, 1e-2).unwrap(), tri::closedness_residual_triple(t, i, r, 5e-3).unwrap());
            ratio_dev = ratio_dev.max((b / a - 0.25).abs());
            let bumped = |x: f64| -> g2sym::Result<M3> {
                let mut m = t.state_at(x)?.tau;
                m[(0, 0)] += 0.1;
                Ok(m)
            };
            worst_p = worst_p.max(tri::closedness_residual_of(&bumped, p, i, r, 1e-4).unwrap());
        }
        pert = pert.min(worst_p);
    }
    let ok = hk <= 1e-9 && closed <= 1e-6 && ratio_dev <= 0.05 && pert >= 1e-3 && offd <= 1e-12 && min_eig > 0.0 && adj <= 1e-12;
    report(
        7,
        "τ-flow",
        ok,
        format!("hyperkähler {hk:.1e}, closedness {closed:.1e} (h² ratio dev {ratio_dev:.2e}), perturbed {pert:.2e}, off-diagonal {offd:.1e}, min eig ηᵀη {min_eig:.3}, adj(ηᵀ) − τ {adj:.1e}"),
    )
}

fn c8_scaling() -> bool {
    let p0 = standard_phi0();
    let g0 = metric_from_phi(&p0).unwrap();
    let s0 = hodge_star_phi(&g0, &p0);
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.5, 2.0, 10.0] {
        let pt = p0.scale(t * t * t);
        let g = metric_from_phi(&pt).unwrap();
        let want = g0.matrix * (t * t);
        worst = worst.max((g.matrix - want).abs().max() / want.abs().max());
        let s = hodge_star_phi(&g, &pt);
        let want4 = s0.form().scale(t.powi(4));
        worst = worst.max((s.form() - &want4).max_abs() / want4.max_abs());
    }
    report(8, "scaling", worst <= 1e-10, format!("max relative deviation {worst:.1e}"))
}

#[test]
fn acceptance() {
    let bs = fhn::solve_from_singular_orbit(&FhnParams::bryant_salamon(1.0), &[], 10.0, 1e-12).unwrap();
    let results = [
        c1_tables(),
        c2_bs_recovery(&bs),
        c3_closedness(&bs),
        c4_moments(&bs),
        c5_level_sets(&bs),
        c6_fibration(),
        c7_tau_flow(),
        c8_scaling(),
    ];
    let passed = results.iter().filter(|&&b| b).count();
    let _ = writeln!(std::io::stderr(), "{passed}/{} criteria passed", results.len());
    assert!(results.iter().all(|&b| b));
}
