mod common;

use std::sync::Arc;

use proptest::prelude::*;

use common::{compare_projection, quadratic_kkt, v};
use mflow::diagnostics::{check_a3, sample_cap, CheckConfig};
use mflow::dynamics::{solve_field, Mode, StopCriteria, VectorField};
use mflow::geometry::{
    cap_membership, halfspace_of, project_halfspace, HalfSpace, Membership,
};
use mflow::operators::{BallCone, BoxCone, L1Norm, LinearMap, LinearPsd, MonotoneOp, Quadratic, ZeroOp};
use mflow::problems::{builtin, quadratic_instance};
use mflow::space::{PDPoint, Vector};
use mflow::splitting::{kt_operator, kt_residual};

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, dim)
}

fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=10).prop_flat_map(|d| (point(d), point(d), point(d)))
}

fn catalog() -> Vec<Arc<dyn MonotoneOp>> {
    vec![
        Arc::new(Quadratic::new(v(&[1.0, -2.0, 0.5]))),
        Arc::new(L1Norm::new(0.8).unwrap()),
        Arc::new(BoxCone::new(v(&[-1.0, 0.0, -2.0]), v(&[1.0, 0.5, 2.0])).unwrap()),
        Arc::new(BallCone::new(v(&[0.5, 0.5, 0.5]), 1.2).unwrap()),
        Arc::new(ZeroOp::new(None)),
        Arc::new(LinearPsd::from_rows(&[vec![2.0, 1.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 0.5]]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn haugazeau_matches_active_set_oracle((w, b, c) in triple()) {
        let (dev, viol) = compare_projection(&w, &b, &c, 1e-10).map_err(TestCaseError::fail)?;
        prop_assert!(dev <= 1e-9, "deviation {dev}");
        prop_assert!(viol <= 1e-10, "violation {viol}");
    }

    #[test]
    fn halfspace_projection_is_closest_feasible_point(
        (z1, z2, w, y) in (2usize..=6).prop_flat_map(|d| (point(d), point(d), point(d), point(d)))
    ) {
        let h = halfspace_of(&v(&z1), &v(&z2)).unwrap();
        let p = project_halfspace(&h, &v(&w)).unwrap();
        prop_assert!(h.violation(&p).unwrap() <= 1e-10);
        let y = v(&y);
        if h.violation(&y).unwrap() <= 0.0 {
            prop_assert!(p.dist(&v(&w)).unwrap() <= y.dist(&v(&w)).unwrap() + 1e-12);
        }
    }

    #[test]
    fn resolvents_are_firmly_nonexpansive(x in point(3), y in point(3), gamma in 0.05..3.0f64) {
        let (x, y) = (v(&x), v(&y));
        for op in catalog() {
            let jx = op.resolvent(gamma, &x).unwrap();
            let jy = op.resolvent(gamma, &y).unwrap();
            let lhs = jx.dist_sq(&jy).unwrap();
            let rhs = jx.sub(&jy).unwrap().inner(&x.sub(&y).unwrap()).unwrap();
            prop_assert!(lhs <= rhs + 1e-10, "{op:?}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn resolvent_identity_and_graph(x in point(3), gamma in 0.05..3.0f64) {
        let x = v(&x);
        for op in catalog() {
            let j = op.resolvent(gamma, &x).unwrap();
            let y = op.yosida(gamma, &x).unwrap();
            let back = j.add(&y.scale(gamma)).unwrap();
            prop_assert!(back.dist(&x).unwrap() <= 1e-14 * (1.0 + x.norm()) * 4.0);
            if let Some(ok) = op.member(&j, &y, 1e-9) {
                prop_assert!(ok, "{op:?}: member(J x, yosida x) failed");
            }
        }
    }

    #[test]
    fn kt_operator_is_firmly_quasinonexpansive(p in -10.0..10.0f64, q in -10.0..10.0f64) {
        let inst = builtin("quadratic1d").unwrap();
        let problem = inst.problem().unwrap();
        let z = inst.oracle.clone().unwrap();
        let x = v(&[p, q]);
        let tx = kt_operator(problem, &PDPoint::unflatten(&x, 1).unwrap()).unwrap().tx.flatten();
        let lhs = tx.dist_sq(&z).unwrap() + tx.dist_sq(&x).unwrap();
        prop_assert!(lhs <= x.dist_sq(&z).unwrap() + 1e-10);
        // z lies in H(x, Tx)
        let inner = z.sub(&tx).unwrap().inner(&x.sub(&tx).unwrap()).unwrap();
        prop_assert!(inner <= 1e-10);
    }

    #[test]
    fn small_residual_means_kkt(exp in -14.0..0.0f64, dp in -1.0..1.0f64, dq in -1.0..1.0f64) {
        let inst = builtin("quadratic1d").unwrap();
        let problem = inst.problem().unwrap();
        // z = (1/2, -1/2); KKT: p + v = 0 and v = p - 1
        let s = 10f64.powf(exp);
        let (p, q) = (0.5 + s * dp, -0.5 + s * dq);
        let kkt = (p + q).abs().max((p - 1.0 - q).abs());
        let res = kt_residual(problem, &PDPoint::new(v(&[p]), v(&[q]))).unwrap();
        if res <= 1e-9 {
            prop_assert!(kkt <= 1e-7, "residual {res} but KKT violation {kkt}");
        }
        if kkt <= 1e-12 {
            prop_assert!(res <= 1e-9, "KKT violation {kkt} but residual {res}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_oracle_matches_saddle_solve(
        (p0, q0, rows) in (1usize..=4, 1usize..=3).prop_flat_map(|(n, m)| (
            point(n),
            point(m),
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, n), m),
        ))
    ) {
        let inst = quadratic_instance(
            v(&p0), v(&q0), LinearMap::from_rows(&rows).unwrap(), 0.5, 0.5,
        ).unwrap();
        let (p, q) = quadratic_kkt(&p0, &q0, &rows);
        let kkt: Vec<f64> = p.into_iter().chain(q).collect();
        let oracle = inst.oracle.unwrap();
        let scale = 1.0 + kkt.iter().map(|x| x.abs()).fold(0.0, f64::max);
        prop_assert!(oracle.dist(&v(&kkt)).unwrap() <= 1e-12 * scale * 10.0);
    }

    #[test]
    fn trajectories_keep_the_invariants(seed in 0u64..10_000, pick in 0usize..3) {
        let tag = ["quadratic1d", "quadratic3x2", "lasso1d"][pick];
        let inst = builtin(tag).unwrap();
        let cap = inst.cap.clone().unwrap();
        let field = inst.q_field().unwrap().unwrap();
        let x0 = sample_cap(&cap, 1, seed, &[]).unwrap().remove(0);
        let stop = StopCriteria { max_iter: 300, ..StopCriteria::default() };
        let traj = solve_field(&field, &x0, Mode::Discrete, stop, Some(&cap)).unwrap();
        for pair in traj.records.windows(2) {
            prop_assert!(pair[1].norm_to_w >= pair[0].norm_to_w - 1e-10);
        }
        for r in &traj.records {
            prop_assert!(r.fejer_slack.unwrap() >= -1e-10);
            let f = field.eval(&r.x).unwrap();
            for h in [0.25, 0.5, 0.75, 1.0] {
                let y = r.x.add(&f.scale(h)).unwrap();
                prop_assert_ne!(cap_membership(&cap, &y, 1e-10).unwrap(), Membership::Outside);
            }
        }
    }

    #[test]
    fn check_c_agrees_with_halfspace_membership(seed in 0u64..10_000) {
        let inst = builtin("quadratic3x2").unwrap();
        let cap = inst.cap.clone().unwrap();
        let field = inst.q_field().unwrap().unwrap();
        let samples = sample_cap(&cap, 32, seed, &[]).unwrap();
        let report = check_a3(&field, &cap, &samples, CheckConfig::default().tol);
        let direct = samples.iter().all(|x| {
            let q = field.evaluate(x).unwrap().target;
            let h: HalfSpace = halfspace_of(field.w_bar(), x).unwrap();
            h.violation(&q).unwrap() <= 1e-10
        });
        prop_assert_eq!(report.passed, direct);
    }

    #[test]
    fn sampling_is_seeded(seed in any::<u64>()) {
        let cap = builtin("quadratic3x2").unwrap().cap.unwrap();
        let a = sample_cap(&cap, 40, seed, &[]).unwrap();
        let b = sample_cap(&cap, 40, seed, &[]).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn pd_inner_matches_flattened() {
    let a = PDPoint::new(v(&[1.0, 2.0]), v(&[3.0]));
    let b = PDPoint::new(v(&[-0.5, 0.25]), v(&[7.0]));
    assert_eq!(a.inner(&b).unwrap(), a.flatten().inner(&b.flatten()).unwrap());
    let _: Vector = a.flatten();
}
