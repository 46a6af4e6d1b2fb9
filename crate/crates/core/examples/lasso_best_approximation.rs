//! A nonsmooth instance: `min |p - b|^2/2 + |Lp|_1` in three dimensions,
//! solved by the discrete scheme and by an Euler discretization from a
//! custom anchor `w`.

use mflow::dynamics::{solve, Mode, StopCriteria};
use mflow::operators::LinearMap;
use mflow::problems::lasso_instance;
use mflow::{PDPoint, Vector};

fn main() -> mflow::Result<()> {
    let b = Vector::from_slice(&[2.0, -0.5, 1.0])?;
    let l = LinearMap::from_rows(&[vec![1.0, -1.0, 0.0], vec![0.0, 1.0, 1.0]])?;
    let inst = lasso_instance(b, l, 0.8, 0.6, 0.6)?;
    let z = inst.oracle.clone().expect("sign-pattern oracle");
    println!("oracle (p, v*) = {:.6?}", z.as_slice());

    let problem = inst.problem().expect("primal-dual");
    let stop = StopCriteria { max_iter: 20_000, ..StopCriteria::default() };
    for mode in [Mode::Discrete, Mode::Euler { lambda: 0.5 }] {
        let traj = solve(problem, mode, stop)?;
        let last = traj.last();
        println!(
            "{mode:?}: {:?} at n = {}, error {:.3e}",
            traj.termination,
            last.iteration,
            last.x.dist(&z)?
        );
    }

    // another anchor selects the same unique solution here
    let anchor = PDPoint::new(Vector::from_slice(&[1.0, 1.0, 1.0])?, Vector::from_slice(&[0.3, -0.3])?);
    let moved = problem.clone().with_anchor(anchor.clone())?.with_start(anchor)?;
    let traj = solve(&moved, Mode::Discrete, stop)?;
    println!("from w = (1,1,1 | 0.3,-0.3): error {:.3e}", traj.last().x.dist(&z)?);
    Ok(())
}
