use g2sym::ext::Form;
use g2sym::trisymplectic::*;
use g2sym::Error;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn diag(a: f64, b: f64, c: f64) -> M3 {
    M3::from_diagonal(&Vector3::new(a, b, c))
}

fn hk_tau0(r0: f64, k: [f64; 3]) -> M3 {
    diag((2.0 * r0 + k[0]).sqrt(), (2.0 * r0 + k[1]).sqrt(), (2.0 * r0 + k[2]).sqrt())
}

/// A non-scalar SPD path with analytic derivative.
struct Wobble;

impl TPath for Wobble {
    fn t(&self, r: f64) -> M2 {
        M2::new(2.0 + r.sin(), 0.3 * r.cos(), 0.3 * r.cos(), 1.5 + 0.25 * r * r)
    }
    fn dt(&self, r: f64) -> M2 {
        M2::new(r.cos(), -0.3 * r.sin(), -0.3 * r.sin(), 0.5 * r)
    }
}

fn generic_tau0() -> M3 {
    M3::new(1.5, 0.2, -0.1, 0.3, 1.2, 0.25, -0.2, 0.1, 0.9)
}

#[test]
fn rhs_matches_trajectory_derivative() {
    let tr = integrate_tau(&Wobble, &generic_tau0(), (0.0, 1.5), 1e-12).unwrap();
    let r = 0.8;
    let rhs = tau_rhs(&tr.state_at(r).unwrap(), &Wobble).unwrap();
    let err = |h: f64| ((tr.state_at(r + h).unwrap().tau - tr.state_at(r - h).unwrap().tau) / (2.0 * h) - rhs).abs().max();
    let (e1, e2) = (err(2e-2), err(1e-2));
    assert!(e1 < 1e-3 && (e2 / e1 - 0.25).abs() < 0.05, "{e1:e} {e2:e}");
}

#[test]
fn hyperkahler_diagonal_solutions() {
    let k = [0.5, 1.0, 2.0];
    let tr = integrate_tau(&BuiltinT::Identity, &hk_tau0(0.0, k), (0.0, 3.0), 1e-12).unwrap();
    assert!(tr.singular_at.is_none());
    for s in tr.samples() {
        for i in 0..3 {
            assert!((s.tau[(i, i)] - (2.0 * s.r + k[i]).sqrt()).abs() <= 1e-9);
            // quadratic first integral
            assert!((s.tau[(i, i)].powi(2) - 2.0 * s.r - k[i]).abs() <= 1e-9);
        }
        assert!((s.tau - M3::from_diagonal(&s.tau.diagonal())).abs().max() <= 1e-12);
    }
}

#[test]
fn flat_case() {
    let tr = integrate_tau(&BuiltinT::Identity, &(M3::identity() * 2f64.sqrt()), (1.0, 4.0), 1e-12).unwrap();
    for s in tr.samples() {
        let want = (2.0 * s.r).sqrt();
        for i in 0..3 {
            assert!((s.tau[(i, i)] - want).abs() <= 1e-9);
        }
    }
}

#[test]
fn eguchi_hanson_truncates() {
    let k1 = 0.7;
    let k = [k1, -k1 / 2.0, -k1 / 2.0];
    let tr = integrate_tau(&BuiltinT::Identity, &hk_tau0(2.0, k), (2.0, 0.0), 1e-12).unwrap();
    let r_star = tr.singular_at.expect("det τ reaches zero");
    assert!((r_star - k1 / 4.0).abs() < 1e-6, "{r_star}");
    for s in tr.samples().filter(|s| 2.0 * s.r + k[2] > 1e-3) {
        for i in 0..3 {
            assert!((s.tau[(i, i)] - (2.0 * s.r + k[i]).sqrt()).abs() <= 1e-9);
        }
    }
    assert!(matches!(integrate_tau(&BuiltinT::Identity, &M3::zeros(), (0.0, 1.0), 1e-10), Err(Error::SingularTau(_))));
}

#[test]
fn eta_of_diagonal_and_metric() {
    let (a, b, c) = (0.7, 2.0, 3.5);
    let e = eta_from_tau(&diag(a, b, c)).unwrap();
    assert!((e - diag((b * c / a).sqrt(), (c * a / b).sqrt(), (a * b / c).sqrt())).abs().max() < 1e-14);
    let g = metric_hat(&diag(a, b, c)).unwrap();
    assert!((g - diag(b * c / a, c * a / b, a * b / c)).abs().max() < 1e-14);
}

#[test]
fn triple_identities() {
    let id = reconstruct_triple(&TauState { r: 0.3, tau: M3::identity() }, &BuiltinT::Identity).unwrap();
    let mut s0 = Form::zero(4, 2);
    s0.add_term(&[0, 1], 1.0);
    s0.add_term(&[2, 3], 1.0);
    assert_eq!(id.sigma[0], s0);

    let tr = integrate_tau(&Wobble, &generic_tau0(), (0.0, 1.5), 1e-12).unwrap();
    for r in [0.2, 0.7, 1.3] {
        let tri = reconstruct_triple(&tr.state_at(r).unwrap(), &Wobble).unwrap();
        assert!(tri.orthogonality_residual() <= 1e-12);
        assert!(tri.coherence_residual() <= 1e-12);
        let ti = Wobble.t(r).try_inverse().unwrap();
        assert!((tri.q - ti * ti).abs().max() <= 1e-14);
        assert!(tri.q_positive());
        assert!(tri.sigma_bar[0].wedge(&tri.sigma_bar[0]).top() * tri.vol > 0.0);
    }
    assert!(matches!(reconstruct_triple(&TauState { r: 0.0, tau: M3::zeros() }, &BuiltinT::Identity), Err(Error::SingularTau(_))));
}

#[test]
fn closedness_on_solutions_and_perturbations() {
    let k1 = 0.7;
    let eh = integrate_tau(&BuiltinT::Identity, &hk_tau0(2.0, [k1, -k1 / 2.0, -k1 / 2.0]), (2.0, 0.0), 1e-12).unwrap();
    for i in 0..3 {
        assert!(closedness_residual_triple(&eh, i, 1.0, 1e-4).unwrap() <= 1e-6);
    }
    let pert = closedness_residual_of(
        &|r| {
            let mut t = eh.state_at(r)?.tau;
            t[(0, 0)] += 0.1;
            Ok(t)
        },
        &BuiltinT::Identity,
        0,
        1.0,
        1e-4,
    )
    .unwrap();
    assert!(pert >= 1e-2, "{pert:e}");

    let tr = integrate_tau(&Wobble, &generic_tau0(), (0.0, 1.5), 1e-12).unwrap();
    for r in [0.3, 0.9] {
        for i in 0..3 {
            let (a, b) = (closedness_residual_triple(&tr, i, r, 1e-2).unwrap(), closedness_residual_triple(&tr, i, r, 5e-3).unwrap());
            assert!((b / a - 0.25).abs() <= 0.05, "R = {r}, i = {i}: {}", b / a);
        }
    }
    assert!(matches!(closedness_residual_triple(&tr, 0, 1.5, 1e-3), Err(Error::OutOfDomain { .. })));
}

#[test]
fn f_pair() {
    let flat = integrate_tau(&BuiltinT::Identity, &(M3::identity() * 2f64.sqrt()), (1.0, 3.0), 1e-12).unwrap();
    let zero = ConstA(M32::zeros());
    let fp = construct_f_pair(&flat, &zero, 1e-12).unwrap();
    assert!(fp.f_plus(2.0).unwrap().iter().all(|f| f.max_abs() == 0.0));
    assert!(fp.f_minus(2.0).unwrap().iter().all(|f| f.max_abs() == 0.0));
    assert_eq!(fp.residual(2.0, 1e-4).unwrap(), 0.0);

    let a = ConstA(M32::new(1.0, 0.0, 0.0, 1.0, 0.5, -0.5));
    let fp = construct_f_pair(&flat, &a, 1e-12).unwrap();
    assert!(fp.residual(2.0, 1e-4).unwrap() <= 1e-8);
    // flat case: b = a·R₀/R
    assert!((fp.b(2.0).unwrap() - a.0 * 0.5).abs().max() <= 1e-10);
    // F₋ = −aσ⁻ itself is not closed
    assert!(fp.naive_residual(2.0, 1e-4).unwrap() > 0.1);

    let tr = integrate_tau(&Wobble, &generic_tau0(), (0.0, 1.5), 1e-12).unwrap();
    let ar = FnA(|r: f64| M32::new(r, 1.0, 0.2, r * r, -0.3, 0.1), |r: f64| M32::new(1.0, 0.0, 0.0, 2.0 * r, 0.0, 0.0));
    let fp = construct_f_pair(&tr, &ar, 1e-12).unwrap();
    let (e1, e2) = (fp.residual(0.7, 1e-2).unwrap(), fp.residual(0.7, 5e-3).unwrap());
    assert!((e2 / e1 - 0.25).abs() <= 0.05);
}

#[test]
fn trace_condition_examples() {
    let q = M2::new(0.8, 0.1, 0.1, 0.5);
    let rot = M2::new(0.0, -1.0, 1.0, 0.0);
    let a = rot * q.try_inverse().unwrap() * 1.7;
    assert!(trace_condition(&a, &q).1);
    assert!(!trace_condition(&M2::new(1.0, 0.0, 0.0, 0.0), &q).1);
}

#[test]
fn difference_of_triples_is_not_closed() {
    // σ − σ⁻ = 2(τᵀ)⁻¹ δ₀∧δ, whose derivative is −2(τᵀ)⁻¹ δ₀∧δ̄ (nonzero)
    let tr = integrate_tau(&BuiltinT::Identity, &hk_tau0(0.0, [0.5, 1.0, 2.0]), (0.0, 2.0), 1e-12).unwrap();
    let r = 1.0;
    let h = 1e-4;
    let a_of = |r: f64| tr.state_at(r).unwrap().tau.transpose().try_inverse().unwrap();
    let (a0, ap, am) = (a_of(r), a_of(r + h), a_of(r - h));
    for i in 0..3 {
        let w = EqTwoForm { a: [0, 1, 2].map(|j| 2.0 * a0[(i, j)]), b: [0.0; 3] };
        let dw = EqTwoForm { a: [0, 1, 2].map(|j| (ap[(i, j)] - am[(i, j)]) / h), b: [0.0; 3] };
        let d = d_equivariant(&w, &dw);
        let mut want = Form::zero(4, 3);
        want.add_term(&[0, 2, 3], -2.0 * a0[(i, 0)]);
        want.add_term(&[0, 3, 1], -2.0 * a0[(i, 1)]);
        want.add_term(&[0, 1, 2], -2.0 * a0[(i, 2)]);
        assert!((&d - &want).max_abs() <= 1e-8, "{d:?}");
        assert!(d.norm() > 0.1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adjugate_round_trip(e in prop::array::uniform9(-2.0f64..2.0)) {
        let tau = Matrix3::from_row_slice(&e);
        prop_assume!(tau.determinant() > 1e-2);
        let eta = eta_from_tau(&tau).unwrap();
        prop_assert!((adjugate(&eta.transpose()) - tau).abs().max() <= 1e-12 * tau.abs().max().max(1.0) * (1.0 / tau.determinant()).max(1.0));
        prop_assert!(eta.determinant() > 0.0);
        let g = metric_hat(&tau).unwrap();
        prop_assert!(g.symmetric_eigenvalues().iter().all(|&l| l > 0.0));
        prop_assert!(matches!(eta_from_tau(&(-tau)), Err(Error::NonPositiveDet(_))));
    }

    #[test]
    fn diagonal_preserved(k in prop::array::uniform3(0.1f64..3.0)) {
        let tr = integrate_tau(&BuiltinT::Identity, &hk_tau0(0.0, k), (0.0, 2.0), 1e-10).unwrap();
        for s in tr.samples() {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        prop_assert!(s.tau[(i, j)].abs() <= 1e-12);
                    }
                }
                prop_assert!((s.tau[(i, i)].powi(2) - 2.0 * s.r - k[i]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn metric_positive_along_trajectories(b in -0.3f64..0.6, e in prop::array::uniform9(-0.3f64..0.3)) {
        let tau0 = M3::identity() * 1.5 + Matrix3::from_row_slice(&e);
        let path = BuiltinT::Scaled { a: 1.0, b };
        let tr = integrate_tau(&path, &tau0, (0.0, 1.0), 1e-10).unwrap();
        for s in tr.samples() {
            if s.tau.determinant() > 0.0 {
                let g = metric_hat(&s.tau).unwrap();
                prop_assert!(g.symmetric_eigenvalues().iter().all(|&l| l > 0.0));
            }
        }
    }

    #[test]
    fn violating_the_ode_is_detected(r0 in 0.3f64..1.2, i in 0usize..3, j in 0usize..3) {
        let tr = integrate_tau(&Wobble, &generic_tau0(), (0.0, 1.5), 1e-12).unwrap();
        // ∂τ is off by 0.01 in entry (i, j) at R₀
        let bad = |r: f64| -> g2sym::Result<M3> {
            let mut t = tr.state_at(r)?.tau;
            t[(i, j)] += 0.01 * (r - r0);
            Ok(t)
        };
        let mut worst: f64 = 0.0;
        for row in 0..3 {
            worst = worst.max(closedness_residual_of(&bad, &Wobble, row, r0, 1e-4).unwrap());
        }
        prop_assert!(worst >= 1e-3, "{worst:e}");
        let good: f64 = (0..3).map(|row| closedness_residual_triple(&tr, row, r0, 1e-4).unwrap()).fold(0.0, f64::max);
        prop_assert!(good <= 1e-6);
    }
}
