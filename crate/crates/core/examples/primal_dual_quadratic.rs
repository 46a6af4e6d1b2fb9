//! The discrete best-approximation scheme on a coupled quadratic instance.
//!
//! Minimizes `|p|^2/2 + |Lp - q|^2/2` with `L` of size 2x3 and reports how
//! quickly the iterates approach the Kuhn-Tucker point nearest `w = 0`.

use mflow::diagnostics::convergence_report;
use mflow::dynamics::{solve, Mode, StopCriteria};
use mflow::problems::builtin;

fn main() -> mflow::Result<()> {
    let inst = builtin("quadratic3x2")?;
    let problem = inst.problem().expect("primal-dual instance");
    let z = inst.oracle.clone().expect("closed-form solution");
    println!("Kuhn-Tucker point (p, v*) = {:.6?}", z.as_slice());

    let traj = solve(problem, Mode::Discrete, StopCriteria::default())?;
    let last = traj.last();
    println!("{:?} after {} iterations", traj.termination, last.iteration);
    println!("final error {:.3e}", last.x.dist(&z)?);

    let report = convergence_report(&traj, &inst.w_bar(), &z, 1e-4)?;
    for d in &report.decades {
        println!("  error <= {:.0e} from iteration {}", d.threshold, d.iteration);
    }
    println!("distance to z monotone after error 1e-4: {}", report.tail_holds);
    Ok(())
}
