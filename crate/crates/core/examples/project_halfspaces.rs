//! Haugazeau projections `Q(w, b, c)` in each of the three cases, plus the
//! empty-intersection error and a general two-halfspace projection.
//!
//! ```text
//! cargo run --example project_halfspaces
//! ```

use mflow::geometry::{halfspace_of, haugazeau_projection, project_intersection, DEFAULT_GEOM_TOL};
use mflow::{Error, Vector};

fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c).unwrap()
}

fn main() -> mflow::Result<()> {
    let triples = [
        ([0.0, 0.0], [1.0, 0.0], [1.0, 1.0]),
        ([0.0, 0.0], [1.0, 0.0], [2.0, 0.0]),
        ([0.0, 0.0], [1.0, 0.0], [3.0, 1.0]),
        ([0.0, 0.0], [0.0, 0.0], [1.0, 1.0]),
    ];
    for (w, b, c) in triples {
        let p = haugazeau_projection(&v(&w), &v(&b), &v(&c), DEFAULT_GEOM_TOL)?;
        println!("Q({w:?}, {b:?}, {c:?}) = {:?}  case ({})", p.point.as_slice(), p.case);
    }

    match haugazeau_projection(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &v(&[0.5, 0.0]), DEFAULT_GEOM_TOL) {
        Err(Error::EmptyIntersection(msg)) => println!("opposed cuts: {msg}"),
        other => println!("unexpected: {other:?}"),
    }

    // the same projection through the generic two-constraint solver
    let (w, b, c) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0]));
    let hs = [halfspace_of(&w, &b)?, halfspace_of(&b, &c)?];
    let p = project_intersection(&hs, &w, DEFAULT_GEOM_TOL)?;
    println!("generic projection onto H(w,b) ∩ H(b,c): {:?}", p.as_slice());
    Ok(())
}
