//! The four fixed-point families driving the projection field: metric
//! projection, resolvent, averaged forward-backward and Kuhn-Tucker maps.
//! Each map is checked for firm quasinonexpansiveness around a known fixed
//! point and then used as the `T` of a Haugazeau field.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mflow::dynamics::{solve_field, Mode, StopCriteria};
use mflow::operators::{BallCone, L1Norm, Quadratic};
use mflow::problems::builtin;
use mflow::splitting::{ex_operator, ConvexSet, FixedPointBuilder, FixedPointMap};
use mflow::{HaugazeauField, Vector};

fn min_slack(map: &dyn FixedPointMap, z: &Vector, rng: &mut ChaCha8Rng) -> mflow::Result<f64> {
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let x = Vector::new((0..z.dim()).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect())?;
        let tx = map.apply(&x)?;
        worst = worst.min(x.dist_sq(z)? - tx.dist_sq(z)? - tx.dist_sq(&x)?);
    }
    Ok(worst)
}

fn main() -> mflow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = Vector::from_slice(&[2.0, -0.3])?;
    let kt = builtin("quadratic1d")?;
    let cases: Vec<(&str, FixedPointBuilder, Vector)> = vec![
        (
            "projection onto a ball",
            FixedPointBuilder::Projection(ConvexSet::Ball(BallCone::new(Vector::from_slice(&[2.0, 0.0])?, 1.0)?)),
            Vector::from_slice(&[1.5, 0.0])?,
        ),
        (
            "resolvent of 0.7 |.|_1",
            FixedPointBuilder::Resolvent { op: Arc::new(L1Norm::new(0.7)?), gamma: 1.0 },
            Vector::zeros(2),
        ),
        (
            "forward-backward",
            FixedPointBuilder::ForwardBackward {
                a: Arc::new(L1Norm::new(0.7)?),
                b: Arc::new(Quadratic::new(b)),
                beta: 1.0,
                gamma: 1.0,
            },
            Vector::from_slice(&[1.3, 0.0])?,
        ),
        (
            "Kuhn-Tucker",
            FixedPointBuilder::KuhnTucker(kt.problem().expect("primal-dual").clone()),
            kt.oracle.clone().expect("oracle"),
        ),
    ];
    let w = Vector::from_slice(&[2.5, 2.5])?;
    for (name, kind, z) in cases {
        let map = ex_operator(kind)?;
        let slack = min_slack(map.as_ref(), &z, &mut rng)?;
        let field = HaugazeauField::new(w.clone(), map)?;
        let stop = StopCriteria { max_iter: 20_000, ..StopCriteria::default() };
        let traj = solve_field(&field, &w, Mode::Discrete, stop, None)?;
        println!(
            "{name:<24} min slack {slack:+.2e}  best approximation {:.6?} ({:?})",
            traj.last().x.as_slice(),
            traj.termination
        );
    }
    Ok(())
}
