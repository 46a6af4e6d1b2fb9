//! Maximally monotone operators accessed through their resolvents.
//!
//! The resolvent convention is `J_{gA} = (Id + g A)^{-1}` and the Yosida
//! approximation is `(Id - J_{gA}) / g`, so that `(J_{gA} x, yosida(x))` is
//! always a point of the graph of `A`. Set-valued graphs are never
//! materialized; operators that can decide graph membership exactly expose
//! it through [`MonotoneOp::member`] for testing.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen, LU};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::space::Vector;

/// Maximally monotone operator exposed through its resolvent.
pub trait MonotoneOp: fmt::Debug + Send + Sync {
    /// Fixed dimension, or `None` when the operator acts on any `R^n`.
    fn dim(&self) -> Option<usize>;

    /// Resolvent evaluation; `gamma > 0` and the dimension are already validated.
    fn eval_resolvent(&self, gamma: f64, x: &Vector) -> Vector;

    /// Exact graph test `y in A(x)` up to `tol`, when the operator supports it.
    fn member(&self, _x: &Vector, _y: &Vector, _tol: f64) -> Option<bool> {
        None
    }

    /// `J_{gamma A}(x)`.
    fn resolvent(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        if let Some(d) = self.dim() {
            check_dim(d, x.dim())?;
        }
        self.eval_resolvent(gamma, x).ensure_finite("resolvent")
    }

    /// Yosida approximation `(x - J_{gamma A}(x)) / gamma`.
    fn yosida(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let j = self.resolvent(gamma, x)?;
        Ok(yosida_from(gamma, x, &j))
    }
}

pub(crate) fn yosida_from(gamma: f64, x: &Vector, j: &Vector) -> Vector {
    Vector::from_raw(
        x.as_slice()
            .iter()
            .zip(j.as_slice())
            .map(|(xi, ji)| (xi - ji) / gamma)
            .collect(),
    )
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be positive, got {gamma}")))
    }
}

/// `J_{gamma A}(x)` for any operator.
pub fn resolvent(op: &dyn MonotoneOp, gamma: f64, x: &Vector) -> Result<Vector> {
    op.resolvent(gamma, x)
}

/// Yosida approximation of `op` with parameter `gamma`.
pub fn yosida(op: &dyn MonotoneOp, gamma: f64, x: &Vector) -> Result<Vector> {
    op.yosida(gamma, x)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Subdifferential of `1/2 ||. - b||^2`, i.e. `x -> x - b`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    b: Vector,
}

impl Quadratic {
    pub fn new(b: Vector) -> Self {
        Quadratic { b }
    }

    pub fn center(&self) -> &Vector {
        &self.b
    }
}

impl MonotoneOp for Quadratic {
    fn dim(&self) -> Option<usize> {
        Some(self.b.dim())
    }

    fn eval_resolvent(&self, gamma: f64, x: &Vector) -> Vector {
        Vector::from_raw(
            x.as_slice()
                .iter()
                .zip(self.b.as_slice())
                .map(|(xi, bi)| (xi + gamma * bi) / (1.0 + gamma))
                .collect(),
        )
    }

    fn member(&self, x: &Vector, y: &Vector, tol: f64) -> Option<bool> {
        let ok = x
            .as_slice()
            .iter()
            .zip(self.b.as_slice())
            .zip(y.as_slice())
            .all(|((xi, bi), yi)| close(*yi, xi - bi, tol));
        Some(ok)
    }
}

/// Subdifferential of `weight * ||.||_1`; the resolvent is soft-thresholding.
#[derive(Debug, Clone)]
pub struct L1Norm {
    weight: f64,
}

impl L1Norm {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("l1 weight must be >= 0, got {weight}")));
        }
        Ok(L1Norm { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// `sign(x) * max(|x| - threshold, 0)`.
pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

impl MonotoneOp for L1Norm {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn eval_resolvent(&self, gamma: f64, x: &Vector) -> Vector {
        x.map(|xi| soft_threshold(xi, gamma * self.weight))
    }

    fn member(&self, x: &Vector, y: &Vector, tol: f64) -> Option<bool> {
        let w = self.weight;
        let ok = x.as_slice().iter().zip(y.as_slice()).all(|(&xi, &yi)| {
            if xi > tol {
                close(yi, w, tol)
            } else if xi < -tol {
                close(yi, -w, tol)
            } else {
                yi.abs() <= w + tol
            }
        });
        Some(ok)
    }
}

/// Normal cone of the box `[lower, upper]`; the resolvent is clamping.
#[derive(Debug, Clone)]
pub struct BoxCone {
    lower: Vector,
    upper: Vector,
}

impl BoxCone {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.dim(), upper.dim())?;
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidParameter(format!(
                "box lower bound exceeds upper bound at coordinate {i}"
            )));
        }
        Ok(BoxCone { lower, upper })
    }

    pub fn project(&self, x: &Vector) -> Vector {
        Vector::from_raw(
            x.as_slice()
                .iter()
                .enumerate()
                .map(|(i, &xi)| xi.clamp(self.lower[i], self.upper[i]))
                .collect(),
        )
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        (0..x.dim()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }
}

impl MonotoneOp for BoxCone {
    fn dim(&self) -> Option<usize> {
        Some(self.lower.dim())
    }

    fn eval_resolvent(&self, _gamma: f64, x: &Vector) -> Vector {
        self.project(x)
    }

    fn member(&self, x: &Vector, y: &Vector, tol: f64) -> Option<bool> {
        if !self.contains(x, tol) {
            return Some(false);
        }
        let ok = (0..x.dim()).all(|i| {
            let at_lower = (x[i] - self.lower[i]).abs() <= tol;
            let at_upper = (x[i] - self.upper[i]).abs() <= tol;
            match (at_lower, at_upper) {
                (true, true) => true,
                (true, false) => y[i] <= tol,
                (false, true) => y[i] >= -tol,
                (false, false) => y[i].abs() <= tol,
            }
        });
        Some(ok)
    }
}

/// Normal cone of the closed Euclidean ball; the resolvent is radial projection.
#[derive(Debug, Clone)]
pub struct BallCone {
    center: Vector,
    radius: f64,
}

impl BallCone {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius must be >= 0, got {radius}")));
        }
        Ok(BallCone { center, radius })
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let d = x.dist(&self.center).expect("dimension checked by caller");
        if d <= self.radius {
            return x.clone();
        }
        let s = self.radius / d;
        Vector::from_raw(
            x.as_slice()
                .iter()
                .zip(self.center.as_slice())
                .map(|(xi, ci)| ci + s * (xi - ci))
                .collect(),
        )
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.dist(&self.center).map(|d| d <= self.radius + tol).unwrap_or(false)
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl MonotoneOp for BallCone {
    fn dim(&self) -> Option<usize> {
        Some(self.center.dim())
    }

    fn eval_resolvent(&self, _gamma: f64, x: &Vector) -> Vector {
        self.project(x)
    }

    fn member(&self, x: &Vector, y: &Vector, tol: f64) -> Option<bool> {
        let offset = x.sub(&self.center).ok()?;
        let d = offset.norm();
        if d > self.radius + tol {
            return Some(false);
        }
        if d < self.radius - tol || d == 0.0 {
            return Some(y.norm() <= tol);
        }
        // boundary: y must be a nonnegative multiple of the outward normal
        let t = y.inner(&offset).ok()? / (d * d);
        let residual = y.sub(&offset.scale(t)).ok()?.norm();
        Some(t >= -tol && residual <= tol * (1.0 + y.norm()))
    }
}

/// The zero operator; its resolvent is the identity.
#[derive(Debug, Clone, Default)]
pub struct ZeroOp {
    dim: Option<usize>,
}

impl ZeroOp {
    pub fn new(dim: Option<usize>) -> Self {
        ZeroOp { dim }
    }
}

impl MonotoneOp for ZeroOp {
    fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn eval_resolvent(&self, _gamma: f64, x: &Vector) -> Vector {
        x.clone()
    }

    fn member(&self, _x: &Vector, y: &Vector, tol: f64) -> Option<bool> {
        Some(y.as_slice().iter().all(|yi| yi.abs() <= tol))
    }
}

/// Linear monotone operator `p -> M p` with positive semidefinite symmetric part.
///
/// Resolvents solve `(I + g M) y = x` by LU. Factorizations for step sizes
/// registered through [`prefactor`](Self::prefactor) are built up front;
/// any other step size is factored on demand.
#[derive(Clone)]
pub struct LinearPsd {
    matrix: DMatrix<f64>,
    symmetric: bool,
    factors: Vec<(f64, LU<f64, nalgebra::Dyn, nalgebra::Dyn>)>,
}

impl fmt::Debug for LinearPsd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearPsd")
            .field("matrix", &self.matrix)
            .field("cached_steps", &self.factors.iter().map(|(g, _)| *g).collect::<Vec<_>>())
            .finish()
    }
}

impl LinearPsd {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidParameter("linear_psd matrix must be square and nonempty".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear_psd matrix"));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let scale = matrix.amax().max(1.0);
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        if min_eig < -1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "linear_psd matrix is not monotone: symmetric part has eigenvalue {min_eig}"
            )));
        }
        let symmetric = matrix.relative_eq(&matrix.transpose(), 1e-14, 1e-14);
        Ok(LinearPsd { matrix, symmetric, factors: Vec::new() })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        LinearPsd::new(matrix_from_rows(rows)?)
    }

    /// Eagerly factors `I + g M` for each listed step size.
    pub fn prefactor(mut self, gammas: &[f64]) -> Result<Self> {
        for &g in gammas {
            check_gamma(g)?;
            if !self.factors.iter().any(|(c, _)| *c == g) {
                let lu = self.shifted(g).lu();
                self.factors.push((g, lu));
            }
        }
        Ok(self)
    }

    fn shifted(&self, gamma: f64) -> DMatrix<f64> {
        DMatrix::identity(self.matrix.nrows(), self.matrix.ncols()) + &self.matrix * gamma
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        let y = &self.matrix * DVector::from_column_slice(x.as_slice());
        Vector::from_raw(y.as_slice().to_vec())
    }
}

impl MonotoneOp for LinearPsd {
    fn dim(&self) -> Option<usize> {
        Some(self.matrix.nrows())
    }

    fn eval_resolvent(&self, gamma: f64, x: &Vector) -> Vector {
        let rhs = DVector::from_column_slice(x.as_slice());
        // I + gM is invertible for monotone M, so the solve cannot fail
        let sol = match self.factors.iter().find(|(g, _)| *g == gamma) {
            Some((_, lu)) => lu.solve(&rhs),
            None => self.shifted(gamma).lu().solve(&rhs),
        }
        .expect("I + gamma*M is nonsingular for monotone M");
        Vector::from_raw(sol.as_slice().to_vec())
    }

    fn member(&self, x: &Vector, y: &Vector, tol: f64) -> Option<bool> {
        let mx = self.apply(x);
        Some((0..y.dim()).all(|i| close(y[i], mx[i], tol)))
    }
}

/// Block-diagonal operator acting independently on consecutive coordinate blocks.
#[derive(Debug, Clone)]
pub struct DirectSum {
    blocks: Vec<(Arc<dyn MonotoneOp>, usize)>,
}

impl DirectSum {
    pub fn new(blocks: Vec<(Arc<dyn MonotoneOp>, usize)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("direct sum needs at least one block".into()));
        }
        for (op, d) in &blocks {
            if *d == 0 {
                return Err(Error::InvalidParameter("direct sum block of dimension 0".into()));
            }
            if let Some(od) = op.dim() {
                check_dim(od, *d)?;
            }
        }
        Ok(DirectSum { blocks })
    }

    fn split<'a>(&'a self, x: &'a Vector) -> impl Iterator<Item = (&'a Arc<dyn MonotoneOp>, Vector)> + 'a {
        let mut start = 0;
        self.blocks.iter().map(move |(op, d)| {
            let part = Vector::from_raw(x.as_slice()[start..start + d].to_vec());
            start += d;
            (op, part)
        })
    }
}

impl MonotoneOp for DirectSum {
    fn dim(&self) -> Option<usize> {
        Some(self.blocks.iter().map(|(_, d)| d).sum())
    }

    fn eval_resolvent(&self, gamma: f64, x: &Vector) -> Vector {
        let mut out = Vec::with_capacity(x.dim());
        for (op, part) in self.split(x) {
            out.extend_from_slice(op.eval_resolvent(gamma, &part).as_slice());
        }
        Vector::from_raw(out)
    }

    fn member(&self, x: &Vector, y: &Vector, tol: f64) -> Option<bool> {
        let mut start = 0;
        for (op, d) in &self.blocks {
            let xs = Vector::from_raw(x.as_slice()[start..start + d].to_vec());
            let ys = Vector::from_raw(y.as_slice()[start..start + d].to_vec());
            if !op.member(&xs, &ys, tol)? {
                return Some(false);
            }
            start += d;
        }
        Some(true)
    }
}

/// Single-valued cocoercive operator, used as the forward step of forward-backward maps.
pub trait ForwardOp: fmt::Debug + Send + Sync {
    fn apply(&self, x: &Vector) -> Result<Vector>;

    /// Largest `beta` with `<Bx - By, x - y> >= beta ||Bx - By||^2`.
    fn cocoercivity(&self) -> f64;
}

impl ForwardOp for Quadratic {
    fn apply(&self, x: &Vector) -> Result<Vector> {
        x.sub(&self.b)
    }

    fn cocoercivity(&self) -> f64 {
        1.0
    }
}

impl ForwardOp for ZeroOp {
    fn apply(&self, x: &Vector) -> Result<Vector> {
        if let Some(d) = self.dim {
            check_dim(d, x.dim())?;
        }
        Ok(Vector::zeros(x.dim()))
    }

    fn cocoercivity(&self) -> f64 {
        f64::INFINITY
    }
}

impl ForwardOp for LinearPsd {
    fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.matrix.ncols(), x.dim())?;
        Ok(LinearPsd::apply(self, x))
    }

    /// `1 / lambda_max` for symmetric `M`; nonsymmetric linear maps are not cocoercive.
    fn cocoercivity(&self) -> f64 {
        if !self.symmetric {
            return 0.0;
        }
        let lmax = SymmetricEigen::new(self.matrix.clone()).eigenvalues.max();
        if lmax <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / lmax
        }
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(Error::InvalidParameter("matrix must be nonempty".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::InvalidParameter(format!(
            "ragged matrix: row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entries"));
    }
    Ok(DMatrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

/// Bounded linear map `L: H -> G` stored as a dense matrix; the adjoint is the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidParameter("linear map must be nonempty".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear map entries"));
        }
        Ok(LinearMap { matrix })
    }

    /// Builds from row-major nested rows (`n_out` rows of `n_in` entries).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        LinearMap::new(matrix_from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        LinearMap { matrix: DMatrix::identity(n, n) }
    }

    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        LinearMap { matrix: DMatrix::zeros(n_out, n_in) }
    }

    pub fn scalar(s: f64) -> Self {
        LinearMap { matrix: DMatrix::from_element(1, 1, s) }
    }

    pub fn n_in(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.n_in(), x.dim())?;
        let y = &self.matrix * DVector::from_column_slice(x.as_slice());
        Ok(Vector::from_raw(y.as_slice().to_vec()))
    }

    pub fn adjoint_apply(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.n_out(), y.dim())?;
        let x = self.matrix.tr_mul(&DVector::from_column_slice(y.as_slice()));
        Ok(Vector::from_raw(x.as_slice().to_vec()))
    }
}

impl Serialize for LinearMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearMap {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        LinearMap::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn default_weight() -> f64 {
    1.0
}

/// Config-file description of a catalog operator: `{"kind": <tag>, "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Quadratic { b: Vec<f64> },
    L1 {
        #[serde(default = "default_weight")]
        weight: f64,
    },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Zero {
        #[serde(default)]
        dim: Option<usize>,
    },
    LinearPsd { matrix: Vec<Vec<f64>> },
    DirectSum { blocks: Vec<BlockSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub dim: usize,
    pub op: OperatorSpec,
}

impl OperatorSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            OperatorSpec::Quadratic { .. } => "quadratic",
            OperatorSpec::L1 { .. } => "l1",
            OperatorSpec::Box { .. } => "box",
            OperatorSpec::Ball { .. } => "ball",
            OperatorSpec::Zero { .. } => "zero",
            OperatorSpec::LinearPsd { .. } => "linear_psd",
            OperatorSpec::DirectSum { .. } => "direct_sum",
        }
    }

    /// Instantiates the operator, pre-factoring linear resolvents for `gammas`.
    pub fn build(&self, gammas: &[f64]) -> Result<Arc<dyn MonotoneOp>> {
        Ok(match self {
            OperatorSpec::Quadratic { b } => Arc::new(Quadratic::new(Vector::from_slice(b)?)),
            OperatorSpec::L1 { weight } => Arc::new(L1Norm::new(*weight)?),
            OperatorSpec::Box { lower, upper } => {
                Arc::new(BoxCone::new(Vector::from_slice(lower)?, Vector::from_slice(upper)?)?)
            }
            OperatorSpec::Ball { center, radius } => {
                Arc::new(BallCone::new(Vector::from_slice(center)?, *radius)?)
            }
            OperatorSpec::Zero { dim } => Arc::new(ZeroOp::new(*dim)),
            OperatorSpec::LinearPsd { matrix } => {
                Arc::new(LinearPsd::from_rows(matrix)?.prefactor(gammas)?)
            }
            OperatorSpec::DirectSum { blocks } => {
                let built = blocks
                    .iter()
                    .map(|b| Ok((b.op.build(gammas)?, b.dim)))
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(DirectSum::new(built)?)
            }
        })
    }
}

/// Names of the catalog entries accepted in config files.
pub fn operator_library() -> &'static [&'static str] {
    &["quadratic", "l1", "box", "ball", "zero", "linear_psd", "direct_sum"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn assert_close(a: &Vector, b: &[f64], tol: f64) {
        assert_eq!(a.dim(), b.len());
        for i in 0..b.len() {
            assert!((a[i] - b[i]).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn catalog() -> Vec<(&'static str, Arc<dyn MonotoneOp>, usize)> {
        let m = LinearPsd::from_rows(&[vec![2.0, 1.0, 0.0], vec![-1.0, 1.0, 0.5], vec![0.0, 0.5, 3.0]])
            .unwrap()
            .prefactor(&[0.5])
            .unwrap();
        vec![
            ("quadratic", Arc::new(Quadratic::new(v(&[1.0, -2.0, 0.5]))), 3),
            ("l1", Arc::new(L1Norm::new(0.7).unwrap()), 3),
            ("box", Arc::new(BoxCone::new(v(&[-1.0, 0.0, 0.0]), v(&[1.0, 2.0, 0.0])).unwrap()), 3),
            ("ball", Arc::new(BallCone::new(v(&[0.5, 0.0, -0.5]), 1.5).unwrap()), 3),
            ("zero", Arc::new(ZeroOp::new(None)), 3),
            ("linear_psd", Arc::new(m), 3),
            (
                "direct_sum",
                Arc::new(
                    DirectSum::new(vec![
                        (Arc::new(L1Norm::new(1.0).unwrap()) as Arc<dyn MonotoneOp>, 2),
                        (Arc::new(ZeroOp::new(Some(1))), 1),
                    ])
                    .unwrap(),
                ),
                3,
            ),
        ]
    }

    #[test]
    fn soft_threshold_examples() {
        let l1 = L1Norm::new(1.0).unwrap();
        assert_eq!(resolvent(&l1, 1.0, &v(&[2.5])).unwrap(), v(&[1.5]));
        assert_eq!(resolvent(&l1, 1.0, &v(&[-0.5])).unwrap(), v(&[0.0]));
        assert_eq!(yosida(&l1, 1.0, &v(&[2.5])).unwrap(), v(&[1.0]));
    }

    #[test]
    fn shifted_identity_examples() {
        // A: p -> p - p0, so J(x) solves y + g (y - p0) = x
        let op = Quadratic::new(v(&[1.0, 1.0]));
        assert_close(&resolvent(&op, 0.5, &v(&[0.0, 0.0])).unwrap(), &[1.0 / 3.0, 1.0 / 3.0], 1e-15);
        let op1 = Quadratic::new(v(&[1.0]));
        assert_close(&yosida(&op1, 0.5, &v(&[0.0])).unwrap(), &[-2.0 / 3.0], 1e-15);
    }

    #[test]
    fn yosida_vanishes_at_zeros() {
        let zeros = [
            v(&[1.0, -2.0, 0.5]),
            v(&[0.0, 0.0, 0.0]),
            v(&[0.3, 1.0, 0.0]),
            v(&[0.5, 0.0, -0.5]),
            v(&[4.0, -1.0, 2.0]),
            v(&[0.0, 0.0, 0.0]),
            v(&[0.0, 0.0, 9.0]),
        ];
        for ((name, op, _), z) in catalog().into_iter().zip(zeros) {
            for gamma in [0.1, 0.5, 2.0] {
                assert!(op.yosida(gamma, &z).unwrap().norm() <= 1e-14, "{name}");
            }
        }
    }

    #[test]
    fn catalog_examples() {
        let bx = BoxCone::new(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(resolvent(&bx, 3.0, &v(&[2.0, -3.0])).unwrap(), v(&[1.0, 0.0]));
        let ball = BallCone::new(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_close(&resolvent(&ball, 1.0, &v(&[3.0, 4.0])).unwrap(), &[0.6, 0.8], 1e-15);
        let m = LinearPsd::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_close(&resolvent(&m, 0.5, &v(&[4.0, 4.0])).unwrap(), &[2.0, 2.0], 1e-14);
        let cached = m.clone().prefactor(&[0.5]).unwrap();
        assert_eq!(
            resolvent(&cached, 0.5, &v(&[4.0, 4.0])).unwrap(),
            resolvent(&m, 0.5, &v(&[4.0, 4.0])).unwrap()
        );
    }

    #[test]
    fn invalid_parameters() {
        assert!(BoxCone::new(v(&[1.0]), v(&[0.0])).is_err());
        assert!(BallCone::new(v(&[0.0]), -1.0).is_err());
        assert!(L1Norm::new(-0.1).is_err());
        assert!(LinearPsd::from_rows(&[vec![-1.0]]).is_err());
        assert!(LinearPsd::from_rows(&[vec![1.0, 2.0]]).is_err());
        let l1 = L1Norm::new(1.0).unwrap();
        assert!(resolvent(&l1, 0.0, &v(&[1.0])).is_err());
        assert!(yosida(&l1, -1.0, &v(&[1.0])).is_err());
        let q = Quadratic::new(v(&[1.0, 2.0]));
        assert!(resolvent(&q, 1.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn skew_linear_map_is_monotone_but_not_cocoercive() {
        let skew = LinearPsd::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(ForwardOp::cocoercivity(&skew), 0.0);
        let sym = LinearPsd::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert!((ForwardOp::cocoercivity(&sym) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn linear_map_examples() {
        let id = LinearMap::identity(2);
        assert_eq!(id.apply(&v(&[3.0, 7.0])).unwrap(), v(&[3.0, 7.0]));
        let row = LinearMap::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(row.apply(&v(&[2.0, 3.0])).unwrap(), v(&[5.0]));
        assert_eq!(row.adjoint_apply(&v(&[4.0])).unwrap(), v(&[4.0, 4.0]));
        assert!(row.apply(&v(&[1.0])).is_err());
        assert!(row.adjoint_apply(&v(&[1.0, 2.0])).is_err());
        assert!(LinearMap::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn adjoint_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let rows: Vec<Vec<f64>> =
                (0..3).map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let l = LinearMap::from_rows(&rows).unwrap();
            let x = v(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
            let y = v(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
            let lhs = l.apply(&x).unwrap().inner(&y).unwrap();
            let rhs = x.inner(&l.adjoint_apply(&y).unwrap()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    fn random_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vector {
        Vector::new((0..d).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    #[test]
    fn catalog_firmly_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (name, op, d) in catalog() {
            for _ in 0..1000 {
                let gamma = rng.random_range(0.05..3.0);
                let x = random_vec(&mut rng, d, 4.0);
                let y = random_vec(&mut rng, d, 4.0);
                let jx = op.resolvent(gamma, &x).unwrap();
                let jy = op.resolvent(gamma, &y).unwrap();
                let lhs = jx.dist_sq(&jy).unwrap()
                    + x.sub(&jx).unwrap().dist_sq(&y.sub(&jy).unwrap()).unwrap();
                let rhs = x.dist_sq(&y).unwrap();
                assert!(lhs <= rhs + 1e-10, "{name}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn catalog_resolvent_identity_and_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for (name, op, d) in catalog() {
            for _ in 0..1000 {
                let gamma = rng.random_range(0.05..3.0);
                let x = random_vec(&mut rng, d, 4.0);
                let j = op.resolvent(gamma, &x).unwrap();
                let y = op.yosida(gamma, &x).unwrap();
                for i in 0..d {
                    assert!((j[i] + gamma * y[i] - x[i]).abs() <= 1e-14 * (1.0 + x[i].abs()), "{name}");
                }
                assert_eq!(op.member(&j, &y, 1e-9), Some(true), "{name}: ({j:?}, {y:?})");
            }
        }
    }

    #[test]
    fn spec_json_tags() {
        let spec: OperatorSpec =
            serde_json::from_str(r#"{"kind":"box","params":{"lower":[0,0],"upper":[1,1]}}"#).unwrap();
        assert_eq!(spec.tag(), "box");
        let op = spec.build(&[]).unwrap();
        assert_eq!(op.resolvent(1.0, &v(&[2.0, -3.0])).unwrap(), v(&[1.0, 0.0]));

        let l1: OperatorSpec = serde_json::from_str(r#"{"kind":"l1","params":{}}"#).unwrap();
        assert_eq!(l1, OperatorSpec::L1 { weight: 1.0 });
        let zero: OperatorSpec = serde_json::from_str(r#"{"kind":"zero","params":{"dim":2}}"#).unwrap();
        assert_eq!(zero.build(&[]).unwrap().dim(), Some(2));
        let psd: OperatorSpec =
            serde_json::from_str(r#"{"kind":"linear_psd","params":{"matrix":[[2,0],[0,2]]}}"#).unwrap();
        assert_eq!(psd.build(&[0.5]).unwrap().resolvent(0.5, &v(&[4.0, 4.0])).unwrap(), v(&[2.0, 2.0]));

        assert!(serde_json::from_str::<OperatorSpec>(r#"{"kind":"nope","params":{}}"#).is_err());
        let bad: OperatorSpec =
            serde_json::from_str(r#"{"kind":"box","params":{"lower":[2],"upper":[1]}}"#).unwrap();
        assert!(bad.build(&[]).is_err());
        for tag in operator_library() {
            assert!(!tag.is_empty());
        }
    }
}
