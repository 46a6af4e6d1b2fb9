//! Halfspaces, the Haugazeau projection and the admissible cap.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::space::Vector;

/// Default tolerance for feasibility and emptiness classification.
pub const DEFAULT_GEOM_TOL: f64 = 1e-10;

/// The set `{h | <h, a> <= beta}`. A zero normal encodes the whole space
/// (`beta >= 0`) or the empty set (`beta < 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vector,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::NonFinite("halfspace offset"));
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    pub fn has_zero_normal(&self) -> bool {
        self.normal.as_slice().iter().all(|&a| a == 0.0)
    }

    pub fn is_whole_space(&self) -> bool {
        self.has_zero_normal() && self.offset >= 0.0
    }

    pub fn is_empty(&self) -> bool {
        self.has_zero_normal() && self.offset < 0.0
    }

    /// `<x, a> - beta`; positive outside.
    pub fn violation(&self, x: &Vector) -> Result<f64> {
        Ok(x.inner(&self.normal)? - self.offset)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.violation(x)? <= tol)
    }
}

/// `H(z1, z2) = {h | <h - z2, z1 - z2> <= 0}`; the whole space when `z1 = z2`.
pub fn halfspace_of(z1: &Vector, z2: &Vector) -> Result<HalfSpace> {
    let normal = z1.sub(z2)?;
    let offset = z2.inner(&normal)?;
    Ok(HalfSpace { normal, offset })
}

/// Euclidean projection of `w` onto `h`.
pub fn project_halfspace(h: &HalfSpace, w: &Vector) -> Result<Vector> {
    check_dim(h.dim(), w.dim())?;
    if h.has_zero_normal() {
        return if h.offset >= 0.0 { Ok(w.clone()) } else { Err(Error::EmptyHalfSpace) };
    }
    let excess = h.violation(w)?;
    if excess <= 0.0 {
        return Ok(w.clone());
    }
    let step = excess / h.normal.norm_sq();
    crate::space::axpy(-step, &h.normal, w)
}

/// Which branch of the closed form produced a Haugazeau projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HaugazeauCase {
    /// `rho = 0, pi >= 0`: collinear configuration, including `b = w` or `c = b`.
    #[serde(rename = "i")]
    Collinear,
    /// `rho > 0, pi * nu >= rho`: only the cut `H(b, c)` is active.
    #[serde(rename = "ii")]
    SecondActive,
    /// `rho > 0, pi * nu < rho`: both cuts are active.
    #[serde(rename = "iii")]
    BothActive,
}

impl fmt::Display for HaugazeauCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HaugazeauCase::Collinear => "i",
            HaugazeauCase::SecondActive => "ii",
            HaugazeauCase::BothActive => "iii",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vector,
    pub case: HaugazeauCase,
}

/// `Q(w, b, c)`: projection of `w` onto `H(w, b) ∩ H(b, c)`.
pub fn haugazeau_q(w: &Vector, b: &Vector, c: &Vector) -> Result<Vector> {
    haugazeau_projection(w, b, c, DEFAULT_GEOM_TOL).map(|p| p.point)
}

/// Closed-form Haugazeau projection with its active case.
///
/// With `pi = <w-b, b-c>`, `mu = |w-b|^2`, `nu = |b-c|^2` and
/// `rho = mu*nu - pi^2`, the projection is `c` on collinear input,
/// `w + (1 + pi/nu)(c - b)` (the projection onto `H(b, c)` alone) when
/// that point already lies in `H(w, b)`, and
/// `b + (nu/rho)(pi(w-b) + mu(c-b))` otherwise. Anti-collinear input
/// (`rho <= tol * mu * nu` with `pi < 0`) has an empty intersection.
pub fn haugazeau_projection(w: &Vector, b: &Vector, c: &Vector, tol: f64) -> Result<Projection> {
    check_dim(w.dim(), b.dim())?;
    check_dim(w.dim(), c.dim())?;
    let wb = w.sub(b)?;
    let cb = c.sub(b)?;
    let mu = wb.norm_sq();
    let nu = cb.norm_sq();
    let pi = -wb.inner(&cb)?;

    if mu == 0.0 || nu == 0.0 {
        return Ok(Projection { point: c.clone(), case: HaugazeauCase::Collinear });
    }
    // rho = mu * |d|^2 with d the part of c - b orthogonal to w - b; this
    // avoids the cancellation in mu * nu - pi^2 near collinearity
    let d = crate::space::axpy(pi / mu, &wb, &cb)?;
    let d_sq = d.norm_sq();
    let rho = mu * d_sq;
    if pi < 0.0 && rho <= tol * mu * nu {
        return Err(Error::EmptyIntersection(format!(
            "H(w,b) and H(b,c) are disjoint (pi = {pi:e}, rho = {rho:e})"
        )));
    }
    let second_only = |case| {
        let point = crate::space::axpy(1.0 + pi / nu, &cb, w)?.ensure_finite("haugazeau projection")?;
        Ok(Projection { point, case })
    };
    if rho <= 0.0 {
        // exact collinearity; this branch evaluates to c
        return second_only(HaugazeauCase::Collinear);
    }
    if pi * nu >= rho {
        return second_only(HaugazeauCase::SecondActive);
    }
    // (nu / rho)(pi (w - b) + mu (c - b)) = (nu / |d|^2) d
    let point = crate::space::axpy(nu / d_sq, &d, b)?.ensure_finite("haugazeau projection")?;
    Ok(Projection { point, case: HaugazeauCase::BothActive })
}

/// Projection of `w` onto the intersection of one or two general halfspaces.
pub fn project_intersection(halfspaces: &[HalfSpace], w: &Vector, tol: f64) -> Result<Vector> {
    match halfspaces {
        [] => Ok(w.clone()),
        [h] => project_halfspace(h, w),
        [h1, h2] => project_two(h1, h2, w, tol),
        _ => Err(Error::InvalidParameter("at most two halfspaces are supported".into())),
    }
}

fn project_two(h1: &HalfSpace, h2: &HalfSpace, w: &Vector, tol: f64) -> Result<Vector> {
    if h1.is_empty() || h2.is_empty() {
        return Err(Error::EmptyHalfSpace);
    }
    if h1.contains(w, 0.0)? && h2.contains(w, 0.0)? {
        return Ok(w.clone());
    }
    let p1 = project_halfspace(h1, w)?;
    if h2.contains(&p1, tol)? {
        return Ok(p1);
    }
    let p2 = project_halfspace(h2, w)?;
    if h1.contains(&p2, tol)? {
        return Ok(p2);
    }
    // both constraints active: solve the 2x2 Gram system for the multipliers
    let (a1, a2) = (&h1.normal, &h2.normal);
    let g11 = a1.norm_sq();
    let g22 = a2.norm_sq();
    let g12 = a1.inner(a2)?;
    let det = g11 * g22 - g12 * g12;
    if det <= tol * g11 * g22 {
        return Err(Error::EmptyIntersection("parallel halfspaces do not intersect".into()));
    }
    let r1 = h1.violation(w)?;
    let r2 = h2.violation(w)?;
    let l1 = (g22 * r1 - g12 * r2) / det;
    let l2 = (g11 * r2 - g12 * r1) / det;
    let point = Vector::from_raw(
        (0..w.dim()).map(|i| w[i] - l1 * a1[i] - l2 * a2[i]).collect(),
    );
    point.ensure_finite("two-halfspace projection")
}

/// Where a point sits relative to the admissible cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    InsideDhat,
    InsideDOnly,
    Outside,
}

/// The admissible region `D̂ = D ∩ {|x - w|^2 >= r}`.
///
/// `D` is the closed ball having the segment `[w, z]` as a diameter,
/// optionally intersected with an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    w_bar: Vector,
    z_bar: Vector,
    r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<(Vector, Vector)>,
}

impl Cap {
    /// Requires `0 < r < |w - z|^2`.
    pub fn new(w_bar: Vector, z_bar: Vector, r: f64) -> Result<Self> {
        let d2 = w_bar.dist_sq(&z_bar)?;
        if !(r > 0.0 && r < d2) {
            return Err(Error::InvalidParameter(format!(
                "cap radius floor must satisfy 0 < r < |w - z|^2 = {d2}, got {r}"
            )));
        }
        Ok(Cap { w_bar, z_bar, r, bounds: None })
    }

    /// Restricts `D` to the box `[lower, upper]`, which must contain `z`.
    pub fn with_box(mut self, lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(self.dim(), lower.dim())?;
        check_dim(self.dim(), upper.dim())?;
        if (0..self.dim()).any(|i| {
            !(lower[i] <= upper[i]) || self.z_bar[i] < lower[i] || self.z_bar[i] > upper[i]
        }) {
            return Err(Error::InvalidParameter("cap box must be nonempty and contain z".into()));
        }
        self.bounds = Some((lower, upper));
        Ok(self)
    }

    pub fn bounds(&self) -> Option<(&Vector, &Vector)> {
        self.bounds.as_ref().map(|(l, u)| (l, u))
    }

    /// Cap with `r = fraction * |w - z|^2`.
    pub fn with_fraction(w_bar: Vector, z_bar: Vector, fraction: f64) -> Result<Self> {
        let d2 = w_bar.dist_sq(&z_bar)?;
        Cap::new(w_bar, z_bar, fraction * d2)
    }

    pub fn w_bar(&self) -> &Vector {
        &self.w_bar
    }

    pub fn z_bar(&self) -> &Vector {
        &self.z_bar
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.w_bar.dim()
    }

    /// Center of the ball `D`.
    pub fn ball_center(&self) -> Vector {
        Vector::from_raw(
            (0..self.dim()).map(|i| 0.5 * (self.w_bar[i] + self.z_bar[i])).collect(),
        )
    }

    pub fn ball_radius(&self) -> f64 {
        0.5 * self.w_bar.dist(&self.z_bar).expect("cap dimensions agree")
    }

    /// `<z - x, w - x>`; nonpositive exactly on the ball `D`.
    pub fn ball_test(&self, x: &Vector) -> Result<f64> {
        x.sub(&self.z_bar)?.inner(&x.sub(&self.w_bar)?)
    }

    /// Largest coordinate violation of the box; `-inf` without a box.
    pub fn box_test(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(match &self.bounds {
            None => f64::NEG_INFINITY,
            Some((lo, hi)) => (0..x.dim())
                .map(|i| (lo[i] - x[i]).max(x[i] - hi[i]))
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Nonpositive exactly on `D`.
    pub fn region_test(&self, x: &Vector) -> Result<f64> {
        Ok(self.ball_test(x)?.max(self.box_test(x)?))
    }

    /// `r - |x - w|^2`; nonpositive on the floor side of `D̂`.
    pub fn floor_test(&self, x: &Vector) -> Result<f64> {
        Ok(self.r - x.dist_sq(&self.w_bar)?)
    }
}

/// Classifies `x` by the ball test `<z - x, w - x> <= tol` (and the box, if
/// any) and the floor test `|x - w|^2 >= r - tol`.
pub fn cap_membership(cap: &Cap, x: &Vector, tol: f64) -> Result<Membership> {
    if cap.region_test(x)? > tol {
        return Ok(Membership::Outside);
    }
    if cap.floor_test(x)? > tol {
        return Ok(Membership::InsideDOnly);
    }
    Ok(Membership::InsideDhat)
}

/// `|w - z|^2 - |w - x|^2 - |x - z|^2`, evaluated through the equivalent
/// form `-2 <z - x, w - x>`. Nonnegative on `D`.
pub fn fejer_slack(cap: &Cap, x: &Vector) -> Result<f64> {
    Ok(-2.0 * cap.ball_test(x)?)
}
