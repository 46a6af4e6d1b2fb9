//! The Kuhn-Tucker operator for the coupled inclusion
//! `0 ∈ Ap + L*BLp` / its dual, fixed-point builders, and the projection
//! field `F(x) = Q(w, x, Tx) - x`.

use std::fmt;
use std::sync::Arc;

use crate::dynamics::VectorField;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    haugazeau_projection, project_halfspace, HalfSpace, HaugazeauCase, DEFAULT_GEOM_TOL,
};
use crate::operators::{yosida_from, BallCone, BoxCone, ForwardOp, LinearMap, MonotoneOp};
use crate::space::{axpy, PDPoint, Vector};

/// Data defining the primal-dual dynamics: operators `A` on `H`, `B` on `G`,
/// the coupling `L: H -> G`, step sizes `gamma, mu ∈ (0,1)`, the anchor `w̄`
/// and the starting point `x0`.
#[derive(Clone)]
pub struct ProblemInstance {
    a: Arc<dyn MonotoneOp>,
    b: Arc<dyn MonotoneOp>,
    l: LinearMap,
    gamma: f64,
    mu: f64,
    w_bar: PDPoint,
    x0: PDPoint,
    tol: f64,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("l", &self.l.rows())
            .field("gamma", &self.gamma)
            .field("mu", &self.mu)
            .field("w_bar", &self.w_bar)
            .field("x0", &self.x0)
            .finish()
    }
}

fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {value}")))
    }
}

impl ProblemInstance {
    pub fn new(
        a: Arc<dyn MonotoneOp>,
        b: Arc<dyn MonotoneOp>,
        l: LinearMap,
        gamma: f64,
        mu: f64,
        w_bar: PDPoint,
        x0: PDPoint,
    ) -> Result<Self> {
        check_unit_interval("gamma", gamma)?;
        check_unit_interval("mu", mu)?;
        let (n, m) = (l.n_in(), l.n_out());
        if let Some(d) = a.dim() {
            check_dim(n, d)?;
        }
        if let Some(d) = b.dim() {
            check_dim(m, d)?;
        }
        for pt in [&w_bar, &x0] {
            check_dim(n, pt.primal_dim())?;
            check_dim(m, pt.dual_dim())?;
        }
        Ok(ProblemInstance { a, b, l, gamma, mu, w_bar, x0, tol: DEFAULT_GEOM_TOL })
    }

    /// Threshold on `|s*|` below which `x` is treated as a fixed point.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_anchor(mut self, w_bar: PDPoint) -> Result<Self> {
        check_dim(self.primal_dim(), w_bar.primal_dim())?;
        check_dim(self.dual_dim(), w_bar.dual_dim())?;
        self.w_bar = w_bar;
        Ok(self)
    }

    pub fn with_start(mut self, x0: PDPoint) -> Result<Self> {
        check_dim(self.primal_dim(), x0.primal_dim())?;
        check_dim(self.dual_dim(), x0.dual_dim())?;
        self.x0 = x0;
        Ok(self)
    }

    pub fn primal_dim(&self) -> usize {
        self.l.n_in()
    }

    pub fn dual_dim(&self) -> usize {
        self.l.n_out()
    }

    pub fn dim(&self) -> usize {
        self.primal_dim() + self.dual_dim()
    }

    pub fn a(&self) -> &Arc<dyn MonotoneOp> {
        &self.a
    }

    pub fn b(&self) -> &Arc<dyn MonotoneOp> {
        &self.b
    }

    pub fn l(&self) -> &LinearMap {
        &self.l
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn w_bar(&self) -> &PDPoint {
        &self.w_bar
    }

    pub fn x0(&self) -> &PDPoint {
        &self.x0
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Every intermediate quantity of one evaluation of the Kuhn-Tucker operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TStepDetail {
    pub a: Vector,
    pub b: Vector,
    pub a_star: Vector,
    pub b_star: Vector,
    pub s_star: PDPoint,
    pub eta: f64,
    pub tx: PDPoint,
}

/// Evaluates `T(x) = P_{H(x)}(x)` with `H(x) = {h | <h, s*(x)> <= eta(x)}`.
///
/// For `x = (p, v*)`:
/// `a = J_{gA}(p - g L*v*)`, `b = J_{mB}(Lp + m v*)`, `a*` and `b*` the
/// matching Yosida values, `s* = (a* + L*b*, b - La)` and
/// `eta = <a, a*> + <b, b*>`. When `|s*| <= tol` the cut degenerates and
/// `x` is returned unchanged.
pub fn kt_operator(inst: &ProblemInstance, x: &PDPoint) -> Result<TStepDetail> {
    check_dim(inst.primal_dim(), x.primal_dim())?;
    check_dim(inst.dual_dim(), x.dual_dim())?;
    let (g, m) = (inst.gamma, inst.mu);

    let primal_arg = axpy(-g, &inst.l.adjoint_apply(&x.v)?, &x.p)?;
    let a = inst.a.resolvent(g, &primal_arg)?;
    let a_star = yosida_from(g, &primal_arg, &a);

    let dual_arg = axpy(m, &x.v, &inst.l.apply(&x.p)?)?;
    let b = inst.b.resolvent(m, &dual_arg)?;
    let b_star = yosida_from(m, &dual_arg, &b);

    let s_star = PDPoint::new(
        a_star.add(&inst.l.adjoint_apply(&b_star)?)?,
        b.sub(&inst.l.apply(&a)?)?,
    );
    let eta = a.inner(&a_star)? + b.inner(&b_star)?;

    let s_sq = s_star.inner(&s_star)?;
    let tx = if s_sq.sqrt() <= inst.tol {
        x.clone()
    } else {
        // <x, s*> - eta rewritten as <p - a, s*_p> + <s*_v, v - b*>; both
        // factors vanish on Z, so no O(1) terms cancel near a solution
        let viol = x.p.sub(&a)?.inner(&s_star.p)? + s_star.v.inner(&x.v.sub(&b_star)?)?;
        if viol <= 0.0 {
            x.clone()
        } else {
            let t = -viol / s_sq;
            PDPoint::new(axpy(t, &s_star.p, &x.p)?, axpy(t, &s_star.v, &x.v)?)
        }
    };
    Ok(TStepDetail { a, b, a_star, b_star, s_star, eta, tx })
}

/// Fixed-point residual `|T(x) - x|`; zero exactly on the Kuhn-Tucker set.
pub fn kt_residual(inst: &ProblemInstance, x: &PDPoint) -> Result<f64> {
    let d = kt_operator(inst, x)?;
    Ok(d.tx.flatten().dist(&x.flatten())?)
}

/// A single-valued operator whose fixed points are the targets of the
/// best-approximation scheme. Implementations should be firmly
/// quasinonexpansive.
pub trait FixedPointMap: fmt::Debug + Send + Sync {
    fn dim(&self) -> Option<usize>;

    fn apply(&self, x: &Vector) -> Result<Vector>;
}

/// Closed convex sets with cheap projections.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    Box(BoxCone),
    Ball(BallCone),
    HalfSpace(HalfSpace),
}

/// Metric projection onto a closed convex set.
#[derive(Debug, Clone)]
pub struct ProjectionMap {
    set: ConvexSet,
}

impl FixedPointMap for ProjectionMap {
    fn dim(&self) -> Option<usize> {
        Some(match &self.set {
            ConvexSet::Box(b) => b.lower().dim(),
            ConvexSet::Ball(b) => b.center().dim(),
            ConvexSet::HalfSpace(h) => h.dim(),
        })
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim().unwrap_or(x.dim()), x.dim())?;
        match &self.set {
            ConvexSet::Box(b) => Ok(b.project(x)),
            ConvexSet::Ball(b) => Ok(b.project(x)),
            ConvexSet::HalfSpace(h) => project_halfspace(h, x),
        }
    }
}

/// `J_{gA}`; its fixed points are the zeros of `A`.
#[derive(Debug, Clone)]
pub struct ResolventMap {
    op: Arc<dyn MonotoneOp>,
    gamma: f64,
}

impl FixedPointMap for ResolventMap {
    fn dim(&self) -> Option<usize> {
        self.op.dim()
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        self.op.resolvent(self.gamma, x)
    }
}

/// `(1/2)(Id + J_{gA} ∘ (Id - g B))` for cocoercive `B`; fixed points solve `0 ∈ Ax + Bx`.
#[derive(Debug, Clone)]
pub struct ForwardBackwardMap {
    a: Arc<dyn MonotoneOp>,
    b: Arc<dyn ForwardOp>,
    gamma: f64,
}

impl FixedPointMap for ForwardBackwardMap {
    fn dim(&self) -> Option<usize> {
        self.a.dim()
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        if self.gamma == 0.0 {
            return Ok(x.clone());
        }
        let forward = axpy(-self.gamma, &self.b.apply(x)?, x)?;
        let back = self.a.resolvent(self.gamma, &forward)?;
        Ok(x.add(&back)?.scale(0.5))
    }
}

/// The Kuhn-Tucker operator acting on flattened `(p, v*)` vectors.
#[derive(Debug, Clone)]
pub struct KuhnTuckerMap {
    inst: ProblemInstance,
}

impl KuhnTuckerMap {
    pub fn new(inst: ProblemInstance) -> Self {
        KuhnTuckerMap { inst }
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.inst
    }
}

impl FixedPointMap for KuhnTuckerMap {
    fn dim(&self) -> Option<usize> {
        Some(self.inst.dim())
    }

    fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.inst.dim(), x.dim())?;
        let pt = PDPoint::unflatten(x, self.inst.primal_dim())?;
        Ok(kt_operator(&self.inst, &pt)?.tx.flatten())
    }
}

/// The four families of fixed-point operators covered by the projection dynamics.
#[derive(Debug, Clone)]
pub enum FixedPointBuilder {
    /// Projection onto a closed convex set; `Fix = C`.
    Projection(ConvexSet),
    /// Resolvent `J_{gA}`; `Fix = zer A`.
    Resolvent { op: Arc<dyn MonotoneOp>, gamma: f64 },
    /// Averaged forward-backward map; needs `0 <= gamma <= 2 beta` with
    /// `beta` no larger than the cocoercivity constant of `b`.
    ForwardBackward { a: Arc<dyn MonotoneOp>, b: Arc<dyn ForwardOp>, beta: f64, gamma: f64 },
    /// The primal-dual Kuhn-Tucker operator.
    KuhnTucker(ProblemInstance),
}

/// Builds the fixed-point operator for one of the four families.
pub fn ex_operator(kind: FixedPointBuilder) -> Result<Arc<dyn FixedPointMap>> {
    Ok(match kind {
        FixedPointBuilder::Projection(set) => {
            if let ConvexSet::HalfSpace(h) = &set {
                if h.is_empty() {
                    return Err(Error::EmptyHalfSpace);
                }
            }
            Arc::new(ProjectionMap { set })
        }
        FixedPointBuilder::Resolvent { op, gamma } => {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::InvalidParameter(format!("resolvent step must be positive, got {gamma}")));
            }
            Arc::new(ResolventMap { op, gamma })
        }
        FixedPointBuilder::ForwardBackward { a, b, beta, gamma } => {
            let max_beta = b.cocoercivity();
            if !(beta > 0.0) || beta > max_beta * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "cocoercivity constant {beta} not valid for the forward operator (at most {max_beta})"
                )));
            }
            if !(0.0..=2.0 * beta).contains(&gamma) {
                return Err(Error::InvalidParameter(format!(
                    "forward-backward step must lie in [0, 2*beta] = [0, {}], got {gamma}",
                    2.0 * beta
                )));
            }
            Arc::new(ForwardBackwardMap { a, b, gamma })
        }
        FixedPointBuilder::KuhnTucker(inst) => Arc::new(KuhnTuckerMap::new(inst)),
    })
}

/// Result of evaluating the projection field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    /// `T(x)`.
    pub tx: Vector,
    /// `Q(w, x, T(x))`.
    pub target: Vector,
    pub case: HaugazeauCase,
}

/// `F(x) = Q(w, x, T(x)) - x` for a fixed-point map `T`.
#[derive(Debug, Clone)]
pub struct HaugazeauField {
    w_bar: Vector,
    map: Arc<dyn FixedPointMap>,
    tol: f64,
}

impl HaugazeauField {
    pub fn new(w_bar: Vector, map: Arc<dyn FixedPointMap>) -> Result<Self> {
        if let Some(d) = map.dim() {
            check_dim(d, w_bar.dim())?;
        }
        Ok(HaugazeauField { w_bar, map, tol: DEFAULT_GEOM_TOL })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn w_bar(&self) -> &Vector {
        &self.w_bar
    }

    pub fn map(&self) -> &Arc<dyn FixedPointMap> {
        &self.map
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Evaluates `T(x)` and the Haugazeau target `Q(w, x, T(x))` together.
    pub fn evaluate(&self, x: &Vector) -> Result<FieldEval> {
        let tx = self.map.apply(x)?;
        let proj = haugazeau_projection(&self.w_bar, x, &tx, self.tol)?;
        Ok(FieldEval { tx, target: proj.point, case: proj.case })
    }

    /// The two halfspaces `H(w, x)` and `H(x, T(x))`.
    pub fn halfspaces(&self, x: &Vector) -> Result<[HalfSpace; 2]> {
        let tx = self.map.apply(x)?;
        Ok([
            crate::geometry::halfspace_of(&self.w_bar, x)?,
            crate::geometry::halfspace_of(x, &tx)?,
        ])
    }
}

impl VectorField for HaugazeauField {
    fn dim(&self) -> usize {
        self.w_bar.dim()
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        self.evaluate(x)?.target.sub(x)
    }

    /// `x + lambda (Q - x)`, returning `Q` itself for `lambda = 1`.
    fn step(&self, x: &Vector, lambda: f64) -> Result<Vector> {
        let target = self.evaluate(x)?.target;
        if lambda == 1.0 {
            Ok(target)
        } else {
            axpy(lambda, &target.sub(x)?, x)
        }
    }
}

/// The field `F(x) = Q(w̄, x, T x) - x` of the primal-dual instance, on flattened points.
pub fn build_field(inst: &ProblemInstance) -> Result<HaugazeauField> {
    let tol = inst.tol;
    Ok(HaugazeauField::new(inst.w_bar.flatten(), Arc::new(KuhnTuckerMap::new(inst.clone())))?
        .with_tolerance(tol))
}
