//! Built-in instances with known Kuhn-Tucker points, the two raw-field
//! fixtures with closed-form trajectories, and the JSON instance format.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{FnField, VectorField};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Cap;
use crate::operators::{L1Norm, LinearMap, OperatorSpec, Quadratic};
use crate::space::{PDPoint, Vector};
use crate::splitting::{build_field, kt_residual, HaugazeauField, ProblemInstance};

/// Radius floor of the caps attached to primal-dual instances, as a fraction of `|w - z|^2`.
pub const CAP_FLOOR_FRACTION: f64 = 0.01;
/// Oracles must satisfy `kt_residual <= ORACLE_TOL`.
pub const ORACLE_TOL: f64 = 1e-9;

/// A closed-form trajectory `t ↦ x(t)` with its derivative.
#[derive(Clone, Copy)]
pub struct ReferencePath {
    pub name: &'static str,
    pub eval: fn(f64) -> Vector,
    pub derivative: fn(f64) -> Vector,
}

impl fmt::Debug for ReferencePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferencePath").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub enum InstanceBody {
    PrimalDual(ProblemInstance),
    Field { field: Arc<dyn VectorField>, x0: Vector, w_bar: Vector },
}

impl fmt::Debug for InstanceBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceBody::PrimalDual(inst) => f.debug_tuple("PrimalDual").field(inst).finish(),
            InstanceBody::Field { x0, w_bar, .. } => f
                .debug_struct("Field")
                .field("x0", x0)
                .field("w_bar", w_bar)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub tag: String,
    pub body: InstanceBody,
    /// `z̄ = P_Z(w̄)` in flattened coordinates.
    pub oracle: Option<Vector>,
    pub cap: Option<Cap>,
    pub references: Vec<ReferencePath>,
}

impl NamedInstance {
    /// Wraps a primal-dual instance, validating the oracle and attaching a cap.
    pub fn primal_dual(tag: &str, inst: ProblemInstance, oracle: Option<PDPoint>) -> Result<Self> {
        Self::primal_dual_with_floor(tag, inst, oracle, None)
    }

    /// As [`NamedInstance::primal_dual`] with an explicit cap floor `r`.
    pub fn primal_dual_with_floor(
        tag: &str,
        inst: ProblemInstance,
        oracle: Option<PDPoint>,
        r: Option<f64>,
    ) -> Result<Self> {
        let mut cap = None;
        if let Some(z) = &oracle {
            check_dim(inst.primal_dim(), z.primal_dim())?;
            check_dim(inst.dual_dim(), z.dual_dim())?;
            let res = kt_residual(&inst, z)?;
            if !(res <= ORACLE_TOL) {
                return Err(Error::Oracle(format!(
                    "{tag}: oracle has Kuhn-Tucker residual {res:e} > {ORACLE_TOL:e}"
                )));
            }
            let (w, zf) = (inst.w_bar().flatten(), z.flatten());
            if w.dist_sq(&zf)? > 0.0 {
                cap = Some(match r {
                    Some(r) => Cap::new(w, zf, r)?,
                    None => Cap::with_fraction(w, zf, CAP_FLOOR_FRACTION)?,
                });
            }
        }
        Ok(NamedInstance {
            tag: tag.to_string(),
            body: InstanceBody::PrimalDual(inst),
            oracle: oracle.map(|z| z.flatten()),
            cap,
            references: Vec::new(),
        })
    }

    pub fn problem(&self) -> Option<&ProblemInstance> {
        match &self.body {
            InstanceBody::PrimalDual(inst) => Some(inst),
            InstanceBody::Field { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.x0().dim()
    }

    pub fn x0(&self) -> Vector {
        match &self.body {
            InstanceBody::PrimalDual(inst) => inst.x0().flatten(),
            InstanceBody::Field { x0, .. } => x0.clone(),
        }
    }

    pub fn w_bar(&self) -> Vector {
        match &self.body {
            InstanceBody::PrimalDual(inst) => inst.w_bar().flatten(),
            InstanceBody::Field { w_bar, .. } => w_bar.clone(),
        }
    }

    /// The Haugazeau field of a primal-dual instance.
    pub fn q_field(&self) -> Result<Option<HaugazeauField>> {
        self.problem().map(build_field).transpose()
    }

    /// The field whose assumptions are checked: the Haugazeau field or the raw fixture.
    pub fn field(&self) -> Result<Arc<dyn VectorField>> {
        Ok(match &self.body {
            InstanceBody::PrimalDual(inst) => Arc::new(build_field(inst)?),
            InstanceBody::Field { field, .. } => field.clone(),
        })
    }
}

fn column(x: &Vector) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

fn vector(x: &DVector<f64>) -> Result<Vector> {
    Vector::from_slice(x.as_slice())
}

/// `A = Id - p0`, `B = Id - q0`: minimize `|p - p0|^2/2 + |Lp - q0|^2/2`.
///
/// The Kuhn-Tucker point is `p* = (I + L*L)^{-1}(p0 + L* q0)`, `v* = L p* - q0`.
pub fn quadratic_instance(p0: Vector, q0: Vector, l: LinearMap, gamma: f64, mu: f64) -> Result<NamedInstance> {
    check_dim(l.n_in(), p0.dim())?;
    check_dim(l.n_out(), q0.dim())?;
    let m = l.matrix();
    let normal = DMatrix::identity(l.n_in(), l.n_in()) + m.transpose() * m;
    let rhs = column(&p0) + m.transpose() * column(&q0);
    let p_star = normal
        .cholesky()
        .ok_or_else(|| Error::Oracle("I + L*L is not positive definite".into()))?
        .solve(&rhs);
    let v_star = m * &p_star - column(&q0);
    let oracle = PDPoint::new(vector(&p_star)?, vector(&v_star)?);
    let zero = PDPoint::zeros(l.n_in(), l.n_out());
    let inst = ProblemInstance::new(
        Arc::new(Quadratic::new(p0)),
        Arc::new(Quadratic::new(q0)),
        l,
        gamma,
        mu,
        zero.clone(),
        zero,
    )?;
    NamedInstance::primal_dual("quadratic", inst, Some(oracle))
}

/// Largest dual dimension accepted by the sign-pattern oracle.
pub const LASSO_MAX_DUAL: usize = 3;

/// `A = Id - b`, `B = ∂(reg |.|_1)`: minimize `|p - b|^2/2 + reg |Lp|_1`.
///
/// The oracle enumerates the `3^m` sign patterns of the dual variable
/// (`v_i = reg`, `v_i = -reg`, or `(Lp)_i = 0`) and needs `L` of full row rank.
pub fn lasso_instance(b: Vector, l: LinearMap, reg: f64, gamma: f64, mu: f64) -> Result<NamedInstance> {
    check_dim(l.n_in(), b.dim())?;
    let m_dim = l.n_out();
    if m_dim > LASSO_MAX_DUAL {
        return Err(Error::InvalidParameter(format!(
            "lasso oracle enumerates 3^m patterns and accepts m <= {LASSO_MAX_DUAL}, got m = {m_dim}"
        )));
    }
    let oracle = lasso_oracle(&b, &l, reg)?;
    let zero = PDPoint::zeros(l.n_in(), m_dim);
    let inst = ProblemInstance::new(
        Arc::new(Quadratic::new(b)),
        Arc::new(L1Norm::new(reg)?),
        l,
        gamma,
        mu,
        zero.clone(),
        zero,
    )?;
    NamedInstance::primal_dual("lasso", inst, Some(oracle))
}

fn lasso_oracle(b: &Vector, l: &LinearMap, reg: f64) -> Result<PDPoint> {
    const TOL: f64 = 1e-12;
    let m = l.matrix();
    let k = m.nrows();
    let gram = m * m.transpose();
    if gram.clone().cholesky().is_none() {
        return Err(Error::Oracle("lasso oracle needs L with full row rank".into()));
    }
    let lb = m * column(b);
    for code in 0..3usize.pow(k as u32) {
        // digit 0: (Lp)_i = 0 with v_i free; 1: v_i = reg; 2: v_i = -reg
        let digits: Vec<usize> = (0..k).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..k).filter(|&i| digits[i] == 0).collect();
        let mut v = DVector::zeros(k);
        for i in 0..k {
            v[i] = match digits[i] {
                1 => reg,
                2 => -reg,
                _ => 0.0,
            };
        }
        if !free.is_empty() {
            // (L L*)_{FF} v_F = (Lb)_F - (L L*)_{FS} v_S
            let gff = DMatrix::from_fn(free.len(), free.len(), |r, c| gram[(free[r], free[c])]);
            let rhs = DVector::from_fn(free.len(), |r, _| {
                lb[free[r]] - (0..k).map(|j| gram[(free[r], j)] * v[j]).sum::<f64>()
            });
            let Some(sol) = gff.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                v[i] = sol[r];
            }
        }
        let p = column(b) - m.transpose() * &v;
        let lp = m * &p;
        let ok = (0..k).all(|i| match digits[i] {
            0 => v[i].abs() <= reg + TOL,
            1 => lp[i] >= -TOL,
            _ => lp[i] <= TOL,
        });
        if ok {
            return Ok(PDPoint::new(vector(&p)?, vector(&v)?));
        }
    }
    Err(Error::Oracle("no sign pattern satisfies the optimality conditions".into()))
}

fn v2(x: f64, y: f64) -> Vector {
    Vector::from_raw(vec![x, y])
}

/// The relaxation field `(1 - x1, 0)` on the unit disk minus the open unit
/// disk around `w = (-1, 0)`, started at `(0, -1)`. Invariance fails there:
/// the field pushes the start point out of the disk.
pub fn paper_example_1() -> Result<NamedInstance> {
    let w = v2(-1.0, 0.0);
    let field = FnField::new(2, |x: &[f64]| vec![1.0 - x[0], 0.0]);
    Ok(NamedInstance {
        tag: "paper_example_1".into(),
        body: InstanceBody::Field { field: Arc::new(field), x0: v2(0.0, -1.0), w_bar: w.clone() },
        oracle: Some(v2(1.0, 0.0)),
        cap: Some(Cap::new(w, v2(1.0, 0.0), 1.0)?),
        references: vec![ReferencePath {
            name: "relaxation",
            eval: |t| v2(1.0 - (-t).exp(), -1.0),
            derivative: |t| v2((-t).exp(), 0.0),
        }],
    })
}

/// `x2`-coordinate of the curve `s ↦ (1 - e^{-s}, e^{-s} + s - 1)` as a
/// function of `x1 ∈ (0, 1)`: `-x1 - ln(1 - x1)`.
fn gamma_curve(x1: f64) -> f64 {
    -x1 - (-x1).ln_1p()
}

/// Continuous extension of `(1 - x1, -x2)` to the plane that equals
/// `(1 - x1, x1)` on the curve above.
pub fn nonunique_extension(x: &[f64]) -> Vec<f64> {
    let (x1, x2) = (x[0], x[1]);
    if x2 <= 0.0 {
        return vec![1.0 - x1, -x2];
    }
    let second = if x1 <= 0.0 || x1 >= 1.0 {
        0.0
    } else {
        x1 * (x2 / gamma_curve(x1)).min(1.0)
    };
    vec![1.0 - x1, second]
}

/// The field `z - x` on `[0,1] x [-1,0]` minus the open unit disk around
/// `w = (0, -1)`, with `z = (1, 0)`, extended continuously to the plane.
/// Two distinct trajectories leave `x0 = (0, 0)`.
pub fn paper_example_2() -> Result<NamedInstance> {
    let w = v2(0.0, -1.0);
    let z = v2(1.0, 0.0);
    let cap = Cap::new(w.clone(), z.clone(), 1.0)?.with_box(v2(0.0, -1.0), v2(1.0, 0.0))?;
    Ok(NamedInstance {
        tag: "paper_example_2".into(),
        body: InstanceBody::Field {
            field: Arc::new(FnField::new(2, nonunique_extension)),
            x0: v2(0.0, 0.0),
            w_bar: w,
        },
        oracle: Some(z),
        cap: Some(cap),
        references: vec![
            ReferencePath {
                name: "along_curve",
                eval: |t| v2(1.0 - (-t).exp(), (-t).exp() + t - 1.0),
                derivative: |t| v2((-t).exp(), 1.0 - (-t).exp()),
            },
            ReferencePath {
                name: "along_edge",
                eval: |t| v2(1.0 - (-t).exp(), 0.0),
                derivative: |t| v2((-t).exp(), 0.0),
            },
        ],
    })
}

/// Tags accepted by [`builtin`].
pub fn builtin_tags() -> &'static [&'static str] {
    &["quadratic1d", "quadratic3x2", "lasso1d", "paper_example_1", "paper_example_2"]
}

fn retag(mut inst: NamedInstance, tag: &str) -> NamedInstance {
    inst.tag = tag.to_string();
    inst
}

pub fn builtin(tag: &str) -> Result<NamedInstance> {
    let v = |c: &[f64]| Vector::from_slice(c);
    match tag {
        "quadratic1d" => Ok(retag(
            quadratic_instance(v(&[0.0])?, v(&[1.0])?, LinearMap::scalar(1.0), 0.5, 0.5)?,
            tag,
        )),
        "quadratic3x2" => Ok(retag(
            quadratic_instance(
                v(&[0.0, 0.0, 0.0])?,
                v(&[2.0, 1.0])?,
                LinearMap::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]])?,
                0.5,
                0.5,
            )?,
            tag,
        )),
        "lasso1d" => Ok(retag(
            lasso_instance(v(&[2.0])?, LinearMap::scalar(1.0), 1.0, 0.5, 0.5)?,
            tag,
        )),
        "paper_example_1" => paper_example_1(),
        "paper_example_2" => paper_example_2(),
        other => Err(Error::Config(format!(
            "unknown instance '{other}'; built-ins are {}",
            builtin_tags().join(", ")
        ))),
    }
}

/// JSON description of a custom primal-dual instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default = "default_tag")]
    pub tag: String,
    pub a: OperatorSpec,
    pub b: OperatorSpec,
    pub l: LinearMap,
    pub gamma: f64,
    pub mu: f64,
    pub w_bar: PDPoint,
    pub x0: PDPoint,
    #[serde(default)]
    pub oracle: Option<PDPoint>,
    /// Cap floor; defaults to a fraction of `|w - z|^2`.
    #[serde(default)]
    pub r: Option<f64>,
}

fn default_tag() -> String {
    "custom".into()
}

impl InstanceFile {
    pub fn build(&self) -> Result<NamedInstance> {
        let a = self.a.build(&[self.gamma])?;
        let b = self.b.build(&[self.mu])?;
        let inst = ProblemInstance::new(
            a,
            b,
            self.l.clone(),
            self.gamma,
            self.mu,
            self.w_bar.clone(),
            self.x0.clone(),
        )?;
        NamedInstance::primal_dual_with_floor(&self.tag, inst, self.oracle.clone(), self.r)
    }
}

/// Parses an [`InstanceFile`]; parse errors carry line and column.
pub fn load_instance(json: &str) -> Result<NamedInstance> {
    let file: InstanceFile = serde_json::from_str(json).map_err(|e| {
        Error::Config(format!("instance file, line {} column {}: {e}", e.line(), e.column()))
    })?;
    file.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn oracle_pd(inst: &NamedInstance) -> PDPoint {
        PDPoint::unflatten(inst.oracle.as_ref().unwrap(), inst.problem().unwrap().primal_dim()).unwrap()
    }

    #[test]
    fn quadratic_examples() {
        let i = quadratic_instance(v(&[0.0]), v(&[1.0]), LinearMap::scalar(1.0), 0.5, 0.5).unwrap();
        let z = oracle_pd(&i);
        assert!((z.p[0] - 0.5).abs() < 1e-15 && (z.v[0] + 0.5).abs() < 1e-15);

        let i = quadratic_instance(v(&[0.3, -0.2]), v(&[0.7, 1.0]), LinearMap::zeros(2, 2), 0.5, 0.5).unwrap();
        let z = oracle_pd(&i);
        assert_eq!(z.p, v(&[0.3, -0.2]));
        assert_eq!(z.v, v(&[-0.7, -1.0]));

        let l = LinearMap::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let i = quadratic_instance(v(&[0.0, 0.0]), v(&[2.0]), l, 0.5, 0.5).unwrap();
        let z = oracle_pd(&i);
        for c in [z.p[0], z.p[1]] {
            assert!((c - 2.0 / 3.0).abs() < 1e-14);
        }
        assert!((z.v[0] + 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn lasso_examples() {
        let i = lasso_instance(v(&[2.0]), LinearMap::scalar(1.0), 1.0, 0.5, 0.5).unwrap();
        let z = oracle_pd(&i);
        assert!((z.p[0] - 1.0).abs() < 1e-14 && (z.v[0] - 1.0).abs() < 1e-14);

        let i = lasso_instance(v(&[0.0]), LinearMap::scalar(1.0), 1.0, 0.5, 0.5).unwrap();
        assert_eq!(i.oracle.unwrap(), v(&[0.0, 0.0]));

        let no_reg = lasso_instance(v(&[2.0]), LinearMap::scalar(1.0), 0.0, 0.5, 0.5).unwrap();
        let quad = quadratic_instance(v(&[2.0]), v(&[0.0]), LinearMap::zeros(1, 1), 0.5, 0.5).unwrap();
        assert_eq!(no_reg.oracle, quad.oracle);
    }

    #[test]
    fn lasso_in_three_dual_dims() {
        let l = LinearMap::from_rows(&[
            vec![1.0, -1.0, 0.0, 0.0],
            vec![0.0, 1.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ])
        .unwrap();
        let i = lasso_instance(v(&[1.0, 3.0, 2.5, -1.0]), l, 0.4, 0.5, 0.5).unwrap();
        assert!(kt_residual(i.problem().unwrap(), &oracle_pd(&i)).unwrap() <= ORACLE_TOL);
    }

    #[test]
    fn lasso_rejects_large_dual() {
        let err = lasso_instance(v(&[0.0]), LinearMap::zeros(4, 1), 1.0, 0.5, 0.5).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn wrong_oracle_is_rejected() {
        let i = builtin("quadratic1d").unwrap();
        let inst = i.problem().unwrap().clone();
        let bad = PDPoint::new(v(&[0.4]), v(&[-0.5]));
        assert!(matches!(NamedInstance::primal_dual("bad", inst, Some(bad)), Err(Error::Oracle(_))));
    }

    #[test]
    fn builtins_load() {
        for tag in builtin_tags() {
            let i = builtin(tag).unwrap();
            assert_eq!(&i.tag, tag);
            assert!(i.cap.is_some());
            if let Some(cap) = &i.cap {
                assert_eq!(cap.w_bar(), &i.w_bar());
            }
        }
        assert!(matches!(builtin("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn example_caps() {
        let e1 = paper_example_1().unwrap();
        let cap = e1.cap.unwrap();
        assert_eq!(cap.ball_center(), v(&[0.0, 0.0]));
        assert_eq!(cap.ball_radius(), 1.0);
        let e2 = paper_example_2().unwrap();
        assert!(e2.cap.unwrap().bounds().is_some());
    }

    #[test]
    fn extension_matches_the_curve() {
        for s in [0.05, 0.3, 0.7, 1.0] {
            let x = [1.0 - f64::exp(-s), f64::exp(-s) + s - 1.0];
            let f = nonunique_extension(&x);
            assert!((f[1] - x[0]).abs() < 1e-14);
        }
        // continuous across x2 = 0 and x1 = 0
        let a = nonunique_extension(&[0.4, 1e-13]);
        assert!((a[1]).abs() < 1e-10);
        let b = nonunique_extension(&[1e-13, 0.5]);
        assert!(b[1].abs() < 1e-12);
    }

    #[test]
    fn instance_file_roundtrip() {
        let json = r#"{
            "a": {"kind": "quadratic", "params": {"b": [0.0]}},
            "b": {"kind": "quadratic", "params": {"b": [1.0]}},
            "l": [[1.0]],
            "gamma": 0.5, "mu": 0.5,
            "w_bar": {"p": [0.0], "v": [0.0]},
            "x0": {"p": [0.0], "v": [0.0]},
            "oracle": {"p": [0.5], "v": [-0.5]}
        }"#;
        let i = load_instance(json).unwrap();
        assert_eq!(i.oracle.unwrap(), v(&[0.5, -0.5]));
        let err = load_instance("{\n  \"a\": 3\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
