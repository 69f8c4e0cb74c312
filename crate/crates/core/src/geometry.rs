//! Simplex primitives: rank checks, barycentric coordinates, containment,
//! sign-region classification and the distance queries the safety margins
//! are built on.
//!
//! Every simplex here is a d-simplex in ℝ^d given by its d+1 vertices. The
//! barycentric map
//!
//! ```text
//! α = [a_1 … a_{d+1}; 1 … 1]⁻¹ [c; 1]
//! ```
//!
//! is the workhorse: its signs decide containment and its components are the
//! follower communication weights.

use std::fmt;
use std::ops::Index;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative singular-value threshold used by [`rank_measure`].
pub const RANK_REL_TOL: f64 = 1e-9;
/// Boundary grazing tolerance shared by closed containment and zero classification.
pub const CONTAIN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("a {dim}-simplex needs {} vertices, got {found}", dim + 1)]
    WrongVertexCount { dim: usize, found: usize },
    #[error("degenerate simplex: rank {rank} < {dim}")]
    Degenerate { rank: usize, dim: usize },
    #[error("barycentric system is singular")]
    Singular,
    #[error("point lies outside the simplex")]
    OutsideSimplex,
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
}

/// A point (or free vector) in ℝ^d, in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub(crate) fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub(crate) fn from_dvector(v: &DVector<f64>) -> Self {
        Point(v.iter().copied().collect())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

fn check_same_dim<'a>(points: impl IntoIterator<Item = &'a Point>, dim: usize) -> Result<(), GeometryError> {
    for p in points {
        if p.dim() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, found: p.dim() });
        }
    }
    Ok(())
}

/// Rank of `[a_2 − a_1, …, a_m − a_1]` using singular values with a relative
/// threshold of [`RANK_REL_TOL`].
pub fn rank_measure(points: &[Point]) -> Result<usize, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::TooFewPoints { needed: 2, found: points.len() });
    }
    let dim = points[0].dim();
    check_same_dim(points, dim)?;
    let base = &points[0];
    let cols = points.len() - 1;
    let m = DMatrix::from_fn(dim, cols, |r, c| points[c + 1][r] - base[r]);
    let sv = m.singular_values();
    let largest = sv.iter().copied().fold(0.0_f64, f64::max);
    let scale = if largest > 0.0 { largest } else { 1.0 };
    let threshold = RANK_REL_TOL * scale;
    Ok(sv.iter().filter(|&&s| s > threshold).count())
}

/// Containment mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Every α strictly positive.
    Open,
    /// Every α ≥ −[`CONTAIN_TOL`].
    Closed,
}

/// Barycentric coordinates α_1 … α_{d+1}; they sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycentricCoords(Vec<f64>);

impl BarycentricCoords {
    pub fn alphas(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_inside(&self, closure: Closure) -> bool {
        match closure {
            Closure::Open => self.0.iter().all(|&a| a > 0.0),
            Closure::Closed => self.0.iter().all(|&a| a >= -CONTAIN_TOL),
        }
    }

    pub fn sign_pattern(&self) -> SignPattern {
        SignPattern(
            self.0
                .iter()
                .map(|&a| {
                    if a.abs() <= CONTAIN_TOL {
                        Sign::Zero
                    } else if a > 0.0 {
                        Sign::Positive
                    } else {
                        Sign::Negative
                    }
                })
                .collect(),
        )
    }
}

impl Index<usize> for BarycentricCoords {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// Sign of each barycentric component, with a zero band of width [`CONTAIN_TOL`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignPattern(Vec<Sign>);

impl SignPattern {
    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&s| s == Sign::Positive)
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            let c = match s {
                Sign::Negative => '-',
                Sign::Zero => '0',
                Sign::Positive => '+',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A non-degenerate d-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    vertices: Vec<Point>,
}

impl Simplex {
    /// Validates vertex count, dimensions and the rank condition.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let Some(first) = vertices.first() else {
            return Err(GeometryError::TooFewPoints { needed: 2, found: 0 });
        };
        let dim = first.dim();
        if dim == 0 {
            return Err(GeometryError::UnsupportedDimension(0));
        }
        if vertices.len() != dim + 1 {
            return Err(GeometryError::WrongVertexCount { dim, found: vertices.len() });
        }
        check_same_dim(&vertices, dim)?;
        let rank = rank_measure(&vertices)?;
        if rank != dim {
            return Err(GeometryError::Degenerate { rank, dim });
        }
        Ok(Simplex { vertices })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn system_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d + 1, d + 1, |r, c| if r < d { self.vertices[c][r] } else { 1.0 })
    }

    /// The Ω operator as an explicit (d+1)×(d+1) matrix: `α = M · [c; 1]`.
    pub fn omega_matrix(&self) -> Result<DMatrix<f64>, GeometryError> {
        self.system_matrix().try_inverse().ok_or(GeometryError::Singular)
    }

    pub fn barycentric(&self, c: &Point) -> Result<BarycentricCoords, GeometryError> {
        let d = self.dim();
        if c.dim() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, found: c.dim() });
        }
        let mut rhs = DVector::from_element(d + 1, 1.0);
        for j in 0..d {
            rhs[j] = c[j];
        }
        let alphas = self.system_matrix().lu().solve(&rhs).ok_or(GeometryError::Singular)?;
        if !alphas.iter().all(|a| a.is_finite()) {
            return Err(GeometryError::Singular);
        }
        Ok(BarycentricCoords(alphas.iter().copied().collect()))
    }

    pub fn contains(&self, c: &Point, closure: Closure) -> Result<bool, GeometryError> {
        Ok(self.barycentric(c)?.is_inside(closure))
    }

    pub fn classify_region(&self, c: &Point) -> Result<SignPattern, GeometryError> {
        Ok(self.barycentric(c)?.sign_pattern())
    }

    /// Euclidean distance from a contained point to the nearest facet.
    pub fn boundary_distance(&self, c: &Point) -> Result<f64, GeometryError> {
        if !self.contains(c, Closure::Closed)? {
            return Err(GeometryError::OutsideSimplex);
        }
        let v = &self.vertices;
        match self.dim() {
            1 => Ok(c.distance(&v[0]).min(c.distance(&v[1]))),
            2 => Ok((0..3)
                .map(|k| point_segment_distance(c.coords(), v[(k + 1) % 3].coords(), v[(k + 2) % 3].coords()))
                .fold(f64::INFINITY, f64::min)),
            3 => {
                let p = to3(c);
                Ok((0..4)
                    .map(|k| {
                        let f: Vec<[f64; 3]> = (0..4).filter(|&j| j != k).map(|j| to3(&v[j])).collect();
                        let q = closest_point_on_triangle(p, f[0], f[1], f[2]);
                        norm3(sub3(p, q))
                    })
                    .fold(f64::INFINITY, f64::min))
            }
            d => Err(GeometryError::UnsupportedDimension(d)),
        }
    }
}

/// Smallest pairwise distance and the lexicographically smallest pair attaining it.
pub fn min_pairwise_distance(points: &[Point]) -> Result<(f64, (usize, usize)), GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::TooFewPoints { needed: 2, found: points.len() });
    }
    check_same_dim(points, points[0].dim())?;
    let mut best = (f64::INFINITY, (0, 1));
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dist = points[i].distance(&points[j]);
            if dist < best.0 {
                best = (dist, (i, j));
            }
        }
    }
    Ok(best)
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|x| x * x).sum();
    let t = if len2 > 0.0 {
        (ab.iter().zip(&ap).map(|(x, y)| x * y).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ap.iter()
        .zip(&ab)
        .map(|(x, y)| (x - t * y).powi(2))
        .sum::<f64>()
        .sqrt()
}

type V3 = [f64; 3];

fn to3(p: &Point) -> V3 {
    [p[0], p[1], p[2]]
}

fn sub3(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add_scaled3(a: V3, b: V3, s: f64) -> V3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn dot3(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: V3) -> f64 {
    dot3(a, a).sqrt()
}

// Voronoi-region walk over vertices, edges and face of triangle abc.
fn closest_point_on_triangle(p: V3, a: V3, b: V3, c: V3) -> V3 {
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub3(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return add_scaled3(a, ab, d1 / (d1 - d3));
    }
    let cp = sub3(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return add_scaled3(a, ac, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add_scaled3(b, sub3(c, b), w);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    add_scaled3(add_scaled3(a, ab, v), ac, w)
}
