//! Euler trajectories, the discrete best-approximation iteration and the
//! solve loop.
//!
//! The Euler construction for `x' = F(x)` with step `lambda ∈ (0, 1]` uses
//! nodes `c_{n+1} = c_n + lambda F(c_n)` and the piecewise-affine path
//! `c(t) = c_n + (t - t0 - n lambda) F(c_n)` on `[t0 + n lambda, t0 + (n+1) lambda]`.
//! For projection fields `F(x) = Q(w, x, Tx) - x` a unit step reproduces the
//! discrete scheme `x_{n+1} = Q(w, x_n, T x_n)` exactly.

use std::fmt;
use std::io::Write;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{cap_membership, fejer_slack, haugazeau_projection, Cap, Membership};
use crate::space::{axpy, PDPoint, Vector};
use crate::splitting::{build_field, kt_operator, HaugazeauField, ProblemInstance};

/// An autonomous vector field on `R^n`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &Vector) -> Result<Vector>;

    /// One explicit Euler step `x + lambda F(x)`.
    fn step(&self, x: &Vector, lambda: f64) -> Result<Vector> {
        axpy(lambda, &self.eval(x)?, x)
    }

    /// Known bound `M` on `|F|` over the domain, if any.
    fn bound(&self) -> Option<f64> {
        None
    }
}

/// A vector field backed by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.dim())?;
        let out = (self.f)(x.as_slice());
        check_dim(self.dim, out.len())?;
        Vector::new(out)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Euler step must lie in (0, 1], got {lambda}")))
    }
}

/// Euler nodes `c_0 = x0, c_{n+1} = c_n + lambda F(c_n)` for `n < count`.
///
/// When a cap is supplied, nodes that leave it are reported through the log.
pub fn euler_nodes(
    field: &dyn VectorField,
    x0: &Vector,
    lambda: f64,
    count: usize,
    cap: Option<&Cap>,
) -> Result<Vec<Vector>> {
    check_lambda(lambda)?;
    check_dim(field.dim(), x0.dim())?;
    let mut nodes = Vec::with_capacity(count + 1);
    let mut warned = false;
    nodes.push(x0.clone());
    for n in 0..count {
        let next = field.step(&nodes[n], lambda)?.ensure_finite("Euler node")?;
        if let Some(cap) = cap {
            report_membership(cap, &next, n + 1, &mut warned);
        }
        nodes.push(next);
    }
    Ok(nodes)
}

/// Warns on the first iterate outside `D`; later exits are logged at debug level.
fn report_membership(cap: &Cap, x: &Vector, n: usize, warned: &mut bool) {
    match cap_membership(cap, x, crate::geometry::DEFAULT_GEOM_TOL) {
        Ok(Membership::Outside) if !*warned => {
            *warned = true;
            warn!("iterate {n} lies outside the admissible region D");
        }
        Ok(Membership::Outside) => debug!("iterate {n} lies outside the admissible region D"),
        Ok(Membership::InsideDOnly) => debug!("iterate {n} lies below the radius floor of the cap"),
        _ => {}
    }
}

/// The piecewise-affine Euler path through a list of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerPath {
    t0: f64,
    lambda: f64,
    nodes: Vec<Vector>,
    slopes: Vec<Vector>,
}

const KNOT_TOL: f64 = 1e-12;

impl EulerPath {
    /// Integrates `count` Euler steps of `field` from `x0` starting at time `t0`.
    pub fn integrate(
        field: &dyn VectorField,
        x0: &Vector,
        lambda: f64,
        t0: f64,
        count: usize,
    ) -> Result<Self> {
        let nodes = euler_nodes(field, x0, lambda, count, None)?;
        Self::from_nodes(nodes, lambda, t0)
    }

    /// Rebuilds the path from nodes alone; segment slopes are `(c_{n+1} - c_n) / lambda`.
    pub fn from_nodes(nodes: Vec<Vector>, lambda: f64, t0: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("an Euler path needs at least one node".into()));
        }
        let slopes = nodes
            .windows(2)
            .map(|w| Ok(w[1].sub(&w[0])?.scale(1.0 / lambda)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EulerPath { t0, lambda, nodes, slopes })
    }

    pub fn nodes(&self) -> &[Vector] {
        &self.nodes
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.segments() as f64 * self.lambda
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Locates `t`: `Ok(Knot(n))` at node times, `Ok(Segment(n))` inside segment `n`.
    fn locate(&self, t: f64) -> Result<Location> {
        let end = self.end_time();
        let slack = KNOT_TOL * (1.0 + end.abs());
        if !(t >= self.t0 - slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, start: self.t0, end });
        }
        let s = (t - self.t0) / self.lambda;
        let k = s.round();
        if (s - k).abs() <= KNOT_TOL * (1.0 + s.abs()) {
            return Ok(Location::Knot((k.max(0.0) as usize).min(self.segments())));
        }
        Ok(Location::Segment((s.floor() as usize).min(self.segments().saturating_sub(1))))
    }

    /// `c(t)`; exact at node times.
    pub fn eval(&self, t: f64) -> Result<Vector> {
        match self.locate(t)? {
            Location::Knot(n) => Ok(self.nodes[n].clone()),
            Location::Segment(n) => {
                let tau = t - self.t0 - n as f64 * self.lambda;
                axpy(tau, &self.slopes[n], &self.nodes[n])
            }
        }
    }

    /// Defect `c'(t) - F(c(t)) = F(c_n) - F(c(t))` inside segment `n`; zero at knots.
    pub fn defect(&self, field: &dyn VectorField, t: f64) -> Result<Vector> {
        match self.locate(t)? {
            Location::Knot(_) => Ok(Vector::zeros(self.nodes[0].dim())),
            Location::Segment(n) => {
                let at_node = field.eval(&self.nodes[n])?;
                at_node.sub(&field.eval(&self.eval(t)?)?)
            }
        }
    }

    /// `max |defect(t)|` over `samples_per_segment` interior points of each segment.
    pub fn sup_defect(&self, field: &dyn VectorField, samples_per_segment: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for n in 0..self.segments() {
            for j in 1..=samples_per_segment {
                let frac = j as f64 / (samples_per_segment + 1) as f64;
                let t = self.t0 + (n as f64 + frac) * self.lambda;
                worst = worst.max(self.defect(field, t)?.norm());
            }
        }
        Ok(worst)
    }
}

enum Location {
    Knot(usize),
    Segment(usize),
}

/// `c_lambda(t)` from raw nodes.
pub fn euler_eval(nodes: &[Vector], lambda: f64, t0: f64, t: f64) -> Result<Vector> {
    EulerPath::from_nodes(nodes.to_vec(), lambda, t0)?.eval(t)
}

/// Euler defect `Δ_λ(t)` from raw nodes.
pub fn euler_defect(
    field: &dyn VectorField,
    nodes: &[Vector],
    lambda: f64,
    t0: f64,
    t: f64,
) -> Result<Vector> {
    EulerPath::from_nodes(nodes.to_vec(), lambda, t0)?.defect(field, t)
}

/// One step `x_{n+1} = Q(w̄, x_n, T x_n)` of the discrete best-approximation scheme.
pub fn best_approx_iterate(inst: &ProblemInstance, x: &PDPoint) -> Result<PDPoint> {
    let tx = kt_operator(inst, x)?.tx;
    let q = haugazeau_projection(&inst.w_bar().flatten(), &x.flatten(), &tx.flatten(), inst.tol())?;
    PDPoint::unflatten(&q.point, inst.primal_dim())
}

/// Time stepping used by [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Discrete,
    Euler { lambda: f64 },
}

impl Mode {
    pub fn lambda(&self) -> f64 {
        match self {
            Mode::Discrete => 1.0,
            Mode::Euler { lambda } => *lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopCriteria {
    pub max_iter: usize,
    pub tol_residual: f64,
    pub tol_step: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria { max_iter: 100_000, tol_residual: 1e-9, tol_step: 1e-12 }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.tol_residual > 0.0) || !(self.tol_step > 0.0) {
            return Err(Error::InvalidParameter(
                "stop criteria must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    /// Fixed-point residual dropped below `tol_residual`.
    Residual,
    /// Step length dropped below `tol_step`.
    Step,
    MaxIter,
    /// Fixed time horizon reached (raw-field integration).
    Horizon,
    /// The projection failed or produced non-finite values.
    Breakdown { message: String },
}

impl Termination {
    pub fn converged(&self) -> bool {
        matches!(self, Termination::Residual | Termination::Step)
    }
}

/// Diagnostics recorded at one iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub iteration: usize,
    /// `n` for the discrete scheme, `t0 + n lambda` for Euler runs.
    pub time: f64,
    pub x: Vector,
    pub norm_to_w: f64,
    pub fejer_slack: Option<f64>,
    pub residual: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mode: Mode,
    pub records: Vec<Record>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectories hold at least the start point")
    }

    pub fn iterations(&self) -> usize {
        self.last().iteration
    }

    pub fn points(&self) -> impl Iterator<Item = &Vector> {
        self.records.iter().map(|r| &r.x)
    }

    /// CSV with header `n_or_t,x_0..x_{k-1},norm_to_w,fejer_slack,residual,step_norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.records.first().map(|r| r.x.dim()).unwrap_or(0);
        let mut header = String::from("n_or_t");
        for i in 0..dim {
            header.push_str(&format!(",x_{i}"));
        }
        header.push_str(",norm_to_w,fejer_slack,residual,step_norm");
        writeln!(out, "{header}")?;
        for r in &self.records {
            let mut line = match self.mode {
                Mode::Discrete => r.iteration.to_string(),
                Mode::Euler { .. } => fmt_f64(r.time),
            };
            for c in r.x.as_slice() {
                line.push(',');
                line.push_str(&fmt_f64(*c));
            }
            for v in [r.norm_to_w, r.fejer_slack.unwrap_or(f64::NAN), r.residual, r.step_norm] {
                line.push(',');
                line.push_str(&fmt_f64(v));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn make_record(
    iteration: usize,
    time: f64,
    x: &Vector,
    w_bar: &Vector,
    cap: Option<&Cap>,
    residual: f64,
    step_norm: f64,
) -> Result<Record> {
    Ok(Record {
        iteration,
        time,
        x: x.clone(),
        norm_to_w: x.dist(w_bar)?,
        fejer_slack: cap.map(|c| fejer_slack(c, x)).transpose()?,
        residual,
        step_norm,
    })
}

/// Runs the projection dynamics of `field` from `x0` until a stop criterion fires.
///
/// Each iteration evaluates `T(x_n)` once, records `|T x_n - x_n|` as the
/// residual, and moves to `x_n + lambda (Q(w, x_n, T x_n) - x_n)`.
pub fn solve_field(
    field: &HaugazeauField,
    x0: &Vector,
    mode: Mode,
    stop: StopCriteria,
    cap: Option<&Cap>,
) -> Result<Trajectory> {
    stop.validate()?;
    let lambda = mode.lambda();
    check_lambda(lambda)?;
    check_dim(VectorField::dim(field), x0.dim())?;
    let w_bar = field.w_bar();
    let mut warned = false;
    if let Some(cap) = cap {
        report_membership(cap, x0, 0, &mut warned);
    }
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut last_step = 0.0;
    let mut n = 0usize;
    let termination = loop {
        let time = match mode {
            Mode::Discrete => n as f64,
            Mode::Euler { lambda } => n as f64 * lambda,
        };
        let eval = match field.evaluate(&x) {
            Ok(e) => e,
            Err(e @ (Error::EmptyIntersection(_) | Error::NonFinite(_) | Error::EmptyHalfSpace)) => {
                // keep what we have; the current point is recorded without a residual
                records.push(make_record(n, time, &x, w_bar, cap, f64::NAN, last_step)?);
                break Termination::Breakdown { message: e.to_string() };
            }
            Err(e) => return Err(e),
        };
        let residual = eval.tx.dist(&x)?;
        records.push(make_record(n, time, &x, w_bar, cap, residual, last_step)?);
        if residual <= stop.tol_residual {
            break Termination::Residual;
        }
        if n > 0 && last_step <= stop.tol_step {
            break Termination::Step;
        }
        if n >= stop.max_iter {
            break Termination::MaxIter;
        }
        let next = if lambda == 1.0 {
            eval.target
        } else {
            axpy(lambda, &eval.target.sub(&x)?, &x)?
        };
        if !next.is_finite() {
            break Termination::Breakdown { message: Error::NonFinite("iterate").to_string() };
        }
        if let Some(cap) = cap {
            report_membership(cap, &next, n + 1, &mut warned);
        }
        last_step = next.dist(&x)?;
        x = next;
        n += 1;
    };
    Ok(Trajectory { mode, records, termination })
}

/// Solves the primal-dual instance from its own starting point.
pub fn solve(inst: &ProblemInstance, mode: Mode, stop: StopCriteria) -> Result<Trajectory> {
    solve_field(&build_field(inst)?, &inst.x0().flatten(), mode, stop, None)
}

/// Integrates an arbitrary field with Euler steps up to time `t0 + horizon`.
/// The residual column holds `|F(x_n)|`.
pub fn integrate_field(
    field: &dyn VectorField,
    x0: &Vector,
    lambda: f64,
    horizon: f64,
    w_bar: &Vector,
    cap: Option<&Cap>,
) -> Result<Trajectory> {
    check_lambda(lambda)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let count = (horizon / lambda).round() as usize;
    let nodes = euler_nodes(field, x0, lambda, count, cap)?;
    let mut records = Vec::with_capacity(nodes.len());
    for (n, x) in nodes.iter().enumerate() {
        let step = if n == 0 { 0.0 } else { x.dist(&nodes[n - 1])? };
        let residual = field.eval(x)?.norm();
        records.push(make_record(n, n as f64 * lambda, x, w_bar, cap, residual, step)?);
    }
    Ok(Trajectory { mode: Mode::Euler { lambda }, records, termination: Termination::Horizon })
}
