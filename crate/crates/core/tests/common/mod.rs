//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num::{BigRational, ToPrimitive, Zero};

use mflow::diagnostics::sample_cap;
use mflow::geometry::{haugazeau_projection, Cap};
use mflow::Error;
use mflow::space::Vector;

pub fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c).unwrap()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

type Q = BigRational;

fn exact(x: &[f64]) -> Vec<Q> {
    x.iter().map(|v| Q::from_float(*v).expect("finite input")).collect()
}

fn qdot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

fn qsub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Signed violation of `H(z1, z2)` at `x`, in floating point.
pub fn violation_of(z1: &[f64], z2: &[f64], x: &[f64]) -> f64 {
    x.iter().zip(z1).zip(z2).map(|((x, a), b)| (x - b) * (a - b)).sum()
}

/// Exact projection of `w` onto `H(w, b) ∩ H(b, c)` in rational arithmetic:
/// enumerate the four active sets and keep the closest feasible stationary
/// point. `None` when the intersection is empty.
pub fn qp_oracle(w: &[f64], b: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let (w, b, c) = (exact(w), exact(b), exact(c));
    let cons = [(qsub(&w, &b), b.clone()), (qsub(&b, &c), c.clone())];
    // <a, x - p> <= 0
    let viol = |k: usize, x: &[Q]| qdot(&cons[k].0, &qsub(x, &cons[k].1));
    let mut candidates = vec![w.clone()];
    for k in 0..2 {
        let nn = qdot(&cons[k].0, &cons[k].0);
        if !nn.is_zero() {
            let t = viol(k, &w) / nn;
            candidates.push(w.iter().zip(&cons[k].0).map(|(x, a)| x - &t * a).collect());
        }
    }
    let (a1, a2) = (&cons[0].0, &cons[1].0);
    let (g11, g12, g22) = (qdot(a1, a1), qdot(a1, a2), qdot(a2, a2));
    let det = &g11 * &g22 - &g12 * &g12;
    if !det.is_zero() {
        let (r1, r2) = (viol(0, &w), viol(1, &w));
        let l1 = (&g22 * &r1 - &g12 * &r2) / &det;
        let l2 = (&g11 * &r2 - &g12 * &r1) / &det;
        candidates.push((0..w.len()).map(|i| &w[i] - &l1 * &a1[i] - &l2 * &a2[i]).collect());
    }
    candidates
        .into_iter()
        .filter(|x| viol(0, x) <= Q::zero() && viol(1, x) <= Q::zero())
        .min_by_key(|x| {
            let d = qsub(x, &w);
            qdot(&d, &d)
        })
        .map(|x| x.iter().map(|v| v.to_f64().expect("representable")).collect())
}

/// Kuhn-Tucker point of `min |p - p0|^2/2 + |Lp - q0|^2/2` from the full
/// saddle system `[[I, L*], [L, -I]] (p, v) = (p0, q0)`, solved by LU.
pub fn quadratic_kkt(p0: &[f64], q0: &[f64], l: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (p0.len(), q0.len());
    let mut k = DMatrix::zeros(n + m, n + m);
    for i in 0..n {
        k[(i, i)] = 1.0;
    }
    for j in 0..m {
        k[(n + j, n + j)] = -1.0;
        for i in 0..n {
            k[(i, n + j)] = l[j][i];
            k[(n + j, i)] = l[j][i];
        }
    }
    let rhs = DVector::from_iterator(n + m, p0.iter().chain(q0).copied());
    let sol = k.lu().solve(&rhs).expect("saddle matrix is nonsingular");
    (sol.as_slice()[..n].to_vec(), sol.as_slice()[n..].to_vec())
}

/// The fixed start protocol: `w` itself, then `w + theta (y_k - w)` for the
/// first `count` seeded cap samples `y_k`.
pub fn perturbed_starts(cap: &Cap, theta: f64, count: usize, seed: u64) -> Vec<Vector> {
    let w = cap.w_bar().clone();
    let ys = sample_cap(cap, 4 * count, seed, &[]).unwrap();
    std::iter::once(w.clone())
        .chain(ys.into_iter().take(count).map(|y| {
            let d = y.sub(&w).unwrap();
            w.add(&d.scale(theta)).unwrap()
        }))
        .collect()
}

/// Compares `haugazeau_projection` with the exact oracle on one triple.
/// Returns the deviation and the larger halfspace violation of the computed
/// point, or a description of a disagreement.
///
/// A reported empty intersection is accepted when the exact projection lies
/// beyond `1e4 (|w - b| + |c - b|)`: such nearly opposed cuts are classified
/// empty by the geometric tolerance.
pub fn compare_projection(w: &[f64], b: &[f64], c: &[f64], tol: f64) -> Result<(f64, f64), String> {
    let oracle = qp_oracle(w, b, c);
    match (haugazeau_projection(&v(w), &v(b), &v(c), tol), oracle) {
        (Ok(p), Some(o)) => {
            let x = p.point.as_slice();
            let viol = violation_of(w, b, x).max(violation_of(b, c, x));
            Ok((dist(x, &o), viol))
        }
        (Err(Error::EmptyIntersection(_)), None) => Ok((0.0, 0.0)),
        (Err(Error::EmptyIntersection(_)), Some(o)) => {
            let reach = 1e4 * (dist(w, b) + dist(c, b));
            if dist(&o, w) >= reach {
                Ok((0.0, 0.0))
            } else {
                Err(format!("reported empty, exact projection {o:?}"))
            }
        }
        (Ok(p), None) => Err(format!("exact intersection empty, got {:?}", p.point)),
        (Err(e), _) => Err(format!("unexpected error {e}")),
    }
}
