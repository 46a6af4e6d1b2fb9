//! Resolvents and Yosida approximations of the operator catalog.
//!
//! Prints `J_{gA}(x)` and `^gA(x)` for each operator and checks the identity
//! `x = J_{gA}(x) + g ^gA(x)`.

use std::sync::Arc;

use mflow::operators::{BallCone, BoxCone, L1Norm, LinearPsd, MonotoneOp, Quadratic, ZeroOp};
use mflow::Vector;

fn main() -> mflow::Result<()> {
    let x = Vector::from_slice(&[1.5, -0.4, 0.8])?;
    let gamma = 0.5;
    let catalog: Vec<(&str, Arc<dyn MonotoneOp>)> = vec![
        ("quadratic b=(1,0,0)", Arc::new(Quadratic::new(Vector::from_slice(&[1.0, 0.0, 0.0])?))),
        ("l1 weight 1", Arc::new(L1Norm::new(1.0)?)),
        ("normal cone of [0,1]^3", Arc::new(BoxCone::new(Vector::zeros(3), Vector::from_slice(&[1.0; 3])?)?)),
        ("normal cone of unit ball", Arc::new(BallCone::new(Vector::zeros(3), 1.0)?)),
        ("zero", Arc::new(ZeroOp::new(None))),
        (
            "linear [[2,1,0],[-1,1,0],[0,0,1]]",
            Arc::new(LinearPsd::from_rows(&[vec![2.0, 1.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])?),
        ),
    ];
    println!("x = {:?}, gamma = {gamma}", x.as_slice());
    for (name, op) in catalog {
        let j = op.resolvent(gamma, &x)?;
        let y = op.yosida(gamma, &x)?;
        let gap = j.add(&y.scale(gamma))?.dist(&x)?;
        println!("{name:<36} J = {:<50} identity gap {gap:.1e}", format!("{:.6?}", j.as_slice()));
    }
    Ok(())
}
