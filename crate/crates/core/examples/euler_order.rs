//! First-order convergence of Euler polygons to a closed-form trajectory.
//!
//! The field `F(x) = (1 - x1, 0)` started at `(0, -1)` has the solution
//! `x(t) = (1 - e^{-t}, -1)`. Halving the step halves the sup error.

use mflow::dynamics::{euler_nodes, EulerPath};
use mflow::problems::paper_example_1;

fn main() -> mflow::Result<()> {
    let inst = paper_example_1()?;
    let field = inst.field()?;
    let reference = inst.references[0];
    let mut previous: Option<f64> = None;
    println!("{:>8} {:>12} {:>8} {:>14}", "lambda", "sup error", "ratio", "sup defect");
    for k in 0..6 {
        let lambda = 0.2 / f64::from(1 << k);
        let steps = (1.0 / lambda).round() as usize;
        let nodes = euler_nodes(field.as_ref(), &inst.x0(), lambda, steps, None)?;
        let path = EulerPath::from_nodes(nodes, lambda, 0.0)?;
        let err = (0..=2000)
            .map(|i| {
                let t = f64::from(i) / 2000.0;
                path.eval(t).and_then(|x| x.dist(&(reference.eval)(t)))
            })
            .try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))?;
        let ratio = previous.map_or("-".to_string(), |p| format!("{:.4}", err / p));
        let defect = path.sup_defect(field.as_ref(), 8)?;
        println!("{lambda:>8.5} {err:>12.4e} {ratio:>8} {defect:>14.4e}");
        previous = Some(err);
    }
    Ok(())
}
