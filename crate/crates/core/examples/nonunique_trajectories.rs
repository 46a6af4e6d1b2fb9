//! Two different solutions through the same start point.
//!
//! The continuous field is not Lipschitz at `(0, 0)`, and both closed-form
//! curves solve `x' = F(x)`. The Euler polygon follows one of them.

use mflow::dynamics::{euler_nodes, EulerPath};
use mflow::problems::{nonunique_extension, paper_example_2};
use mflow::Vector;

fn main() -> mflow::Result<()> {
    let inst = paper_example_2()?;
    let h = 1e-4;
    for reference in &inst.references {
        let mut worst = 0.0f64;
        for k in 0..=10_000 {
            let t = f64::from(k) * h;
            let dx = (reference.eval)(t + h).sub(&(reference.eval)(t - h))?.scale(0.5 / h);
            let f = Vector::new(nonunique_extension((reference.eval)(t).as_slice()))?;
            worst = worst.max(dx.dist(&f)?);
        }
        println!("{:<12} x(1) = {:.6?}  max |x' - F(x)| = {worst:.2e}", reference.name, (reference.eval)(1.0).as_slice());
    }

    let field = inst.field()?;
    let lambda = 0.01;
    let nodes = euler_nodes(field.as_ref(), &inst.x0(), lambda, 100, inst.cap.as_ref())?;
    let path = EulerPath::from_nodes(nodes, lambda, 0.0)?;
    let end = path.eval(1.0)?;
    for reference in &inst.references {
        println!("Euler endpoint distance to {:<12} {:.3e}", reference.name, end.dist(&(reference.eval)(1.0))?);
    }
    Ok(())
}
