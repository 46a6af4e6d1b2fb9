//! Finite-dimensional real inner-product spaces.
//!
//! [`Vector`] is a dense, finite-valued coordinate vector. [`PDPoint`] is an
//! element `(p, v*)` of the product space `H x G` with the product inner
//! product `<(p1,v1),(p2,v2)> = <p1,p2> + <v1,v2>`. Every algorithm in the
//! crate runs on flattened vectors, so the product structure only matters
//! when splitting a point into its primal and dual blocks.

use std::ops::Index;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{check_dim, Error, Result};

/// Dense real vector with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(de)?;
        Vector::new(coords).map_err(serde::de::Error::custom)
    }
}

impl Vector {
    /// Builds a vector, rejecting empty input and NaN/Inf coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("vector dimension must be >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector coordinates"));
        }
        Ok(Vector(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    /// Wraps coordinates produced by finite arithmetic on finite inputs.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Vector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Returns `self` if every coordinate is finite, else an error naming `ctx`.
    pub fn ensure_finite(self, ctx: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(ctx))
        }
    }

    pub fn inner(&self, other: &Vector) -> Result<f64> {
        inner(self, other)
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn scale(&self, alpha: f64) -> Vector {
        Vector(self.0.iter().map(|c| alpha * c).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&c| f(c)).collect())
    }

    /// Squared Euclidean distance.
    pub fn dist_sq(&self, other: &Vector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    pub fn dist(&self, other: &Vector) -> Result<f64> {
        self.dist_sq(other).map(f64::sqrt)
    }

    pub fn concat(&self, other: &Vector) -> Vector {
        let mut coords = Vec::with_capacity(self.dim() + other.dim());
        coords.extend_from_slice(&self.0);
        coords.extend_from_slice(&other.0);
        Vector(coords)
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Euclidean inner product.
pub fn inner(a: &Vector, b: &Vector) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum())
}

pub fn norm(a: &Vector) -> f64 {
    a.norm_sq().sqrt()
}

/// `alpha * x + y`, coordinate-wise without fused multiply-add.
pub fn axpy(alpha: f64, x: &Vector, y: &Vector) -> Result<Vector> {
    check_dim(x.dim(), y.dim())?;
    Ok(Vector(x.0.iter().zip(&y.0).map(|(xi, yi)| alpha * xi + yi).collect()))
}

/// A point `(p, v*)` of the primal-dual product space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PDPoint {
    pub p: Vector,
    pub v: Vector,
}

impl PDPoint {
    pub fn new(p: Vector, v: Vector) -> Self {
        PDPoint { p, v }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        PDPoint { p: Vector::zeros(n), v: Vector::zeros(m) }
    }

    pub fn primal_dim(&self) -> usize {
        self.p.dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.v.dim()
    }

    /// Product inner product, accumulated in flattened order so it agrees
    /// bit-for-bit with `inner(&self.flatten(), &other.flatten())`.
    pub fn inner(&self, other: &PDPoint) -> Result<f64> {
        check_dim(self.p.dim(), other.p.dim())?;
        check_dim(self.v.dim(), other.v.dim())?;
        let primal = self.p.0.iter().zip(&other.p.0);
        let dual = self.v.0.iter().zip(&other.v.0);
        Ok(primal.chain(dual).map(|(x, y)| x * y).sum())
    }

    pub fn norm(&self) -> f64 {
        (self.p.norm_sq() + self.v.norm_sq()).sqrt()
    }

    /// Concatenates `p` and `v` into a single vector of dimension `n + m`.
    pub fn flatten(&self) -> Vector {
        self.p.concat(&self.v)
    }

    /// Inverse of [`flatten`](Self::flatten): the first `n` coordinates are the primal block.
    pub fn unflatten(x: &Vector, n: usize) -> Result<PDPoint> {
        if n == 0 || n >= x.dim() {
            return Err(Error::InvalidParameter(format!(
                "cannot split a vector of dimension {} at {n}",
                x.dim()
            )));
        }
        let (p, v) = x.as_slice().split_at(n);
        Ok(PDPoint { p: Vector(p.to_vec()), v: Vector(v.to_vec()) })
    }
}
