//! Points, functionals, the base Euclidean norm, and the quadratic
//! functional `Q` used throughout to detect flat faces of unit spheres.
//!
//! `Q_g(x, y) = 2 g(x)^2 + 2 g(y)^2 - g(x + y)^2` is nonnegative for any
//! seminorm `g` and vanishes exactly on the degenerate pairs; for the
//! Euclidean norm the parallelogram identity gives `Q(x, y) = |x - y|^2`.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// A point of R^d. Entries are always finite; constructors reject NaN and
/// infinities so the numeric kernels can assume well-formed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

/// A linear functional on R^d, stored by its coefficient vector. The dual
/// Euclidean norm of the coefficients is the functional's operator norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Functional(Vec<f64>);

fn check_finite(coords: &[f64], context: &'static str) -> Result<()> {
    for (index, c) in coords.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::NonFinite { index, context });
        }
    }
    Ok(())
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords, "point coordinates")?;
        Ok(Point(coords))
    }

    /// The i-th standard basis vector of R^d (0-based index).
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Point(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(linalg::add(&self.0, &other.0))
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(linalg::sub(&self.0, &other.0))
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(linalg::scale(&self.0, s))
    }

    /// self + s * other
    pub fn axpy(&self, s: f64, other: &Point) -> Point {
        Point(linalg::axpy(&self.0, s, &other.0))
    }

    pub fn dot(&self, other: &Point) -> f64 {
        linalg::dot(&self.0, &other.0)
    }
}

impl Functional {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords, "functional coefficients")?;
        Ok(Functional(coords))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Functional(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Operator norm with respect to the Euclidean norm (self-dual).
    pub fn dual_norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    pub fn from_point(p: &Point) -> Self {
        Functional(p.coords().to_vec())
    }

    /// lambda * self + mu * other, as a functional.
    pub fn combine(&self, lambda: f64, other: &Functional, mu: f64) -> Functional {
        Functional(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| lambda * a + mu * b)
                .collect(),
        )
    }
}

/// Euclidean length of a point.
pub fn euclid_norm(x: &Point) -> f64 {
    linalg::norm(x.coords())
}

/// Apply a functional to a point.
pub fn dual_eval(u: &Functional, x: &Point) -> Result<f64> {
    if u.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: x.dim(),
            context: "dual_eval",
        });
    }
    Ok(linalg::dot(u.coords(), x.coords()))
}

/// Shared evaluation tolerances. `line_search_tol` is the interval width at
/// which 1-D golden section searches stop, `gauge_rel_tol` is the relative
/// accuracy the gauge evaluators promise, and `cert_gap_tol` is the slack
/// used when asserting certified inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub gauge_rel_tol: f64,
    pub line_search_tol: f64,
    pub cert_gap_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            gauge_rel_tol: 1e-10,
            line_search_tol: 1e-12,
            cert_gap_tol: 1e-6,
        }
    }
}

impl ToleranceConfig {
    /// Tolerances must be positive and nested: line searches at least as
    /// tight as the gauge accuracy, which is tighter than assertion slack.
    pub fn validate(&self) -> Result<()> {
        if !(self.line_search_tol > 0.0) {
            return Err(Error::constraint(
                "0 < line_search_tol",
                format!("line_search_tol = {}", self.line_search_tol),
            ));
        }
        if !(self.line_search_tol <= self.gauge_rel_tol) {
            return Err(Error::constraint(
                "line_search_tol <= gauge_rel_tol",
                format!("{} > {}", self.line_search_tol, self.gauge_rel_tol),
            ));
        }
        if !(self.gauge_rel_tol <= self.cert_gap_tol) {
            return Err(Error::constraint(
                "gauge_rel_tol <= cert_gap_tol",
                format!("{} > {}", self.gauge_rel_tol, self.cert_gap_tol),
            ));
        }
        if !(self.cert_gap_tol < 1e-2) {
            return Err(Error::constraint(
                "cert_gap_tol < 1e-2",
                format!("cert_gap_tol = {}", self.cert_gap_tol),
            ));
        }
        Ok(())
    }
}

/// A norm (gauge of a symmetric convex body) evaluated numerically.
///
/// Implementations return values accurate to `rel_tol()` in relative terms,
/// and always from above: the minimizing evaluators can only overshoot the
/// exact gauge, never undershoot it.
pub trait Gauge {
    fn dim(&self) -> usize;

    /// Relative accuracy of `gauge`.
    fn rel_tol(&self) -> f64;

    fn gauge(&self, x: &Point) -> Result<f64>;

    fn check_dim(&self, x: &Point, context: &'static str) -> Result<()> {
        if self.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: x.dim(),
                context,
            });
        }
        Ok(())
    }
}

/// The base Euclidean norm as a gauge oracle.
#[derive(Debug, Clone)]
pub struct EuclideanGauge {
    pub dim: usize,
}

impl Gauge for EuclideanGauge {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rel_tol(&self) -> f64 {
        1e-14
    }

    fn gauge(&self, x: &Point) -> Result<f64> {
        self.check_dim(x, "euclidean gauge")?;
        Ok(euclid_norm(x))
    }
}

/// Quadratic convexity functional `Q_g(x, y)`.
///
/// Exact arithmetic gives `Q >= (g(x) - g(y))^2 >= 0`; numerically the
/// value can dip below zero by at most `8 * rel_tol * (g(x)^2 + g(y)^2)`.
pub fn q_functional(g: &dyn Gauge, x: &Point, y: &Point) -> Result<f64> {
    g.check_dim(x, "q_functional")?;
    g.check_dim(y, "q_functional")?;
    let gx = g.gauge(x)?;
    let gy = g.gauge(y)?;
    let gs = g.gauge(&x.add(y))?;
    Ok(2.0 * gx * gx + 2.0 * gy * gy - gs * gs)
}

/// Normalizes both points to the unit sphere of `g` and reports how far the
/// midpoint sinks below the sphere: `1 - g((x' + y') / 2)`.
///
/// A deficit of zero exhibits a flat face (the whole segment lies on the
/// sphere); strictly convex norms give strictly positive deficits for
/// distinct points.
pub fn strict_convexity_probe(g: &dyn Gauge, x: &Point, y: &Point) -> Result<f64> {
    g.check_dim(x, "strict_convexity_probe")?;
    g.check_dim(y, "strict_convexity_probe")?;
    let gx = g.gauge(x)?;
    let gy = g.gauge(y)?;
    if gx <= 0.0 || gy <= 0.0 {
        return Err(Error::constraint(
            "strict_convexity_probe needs nonzero points",
            format!("g(x) = {gx}, g(y) = {gy}"),
        ));
    }
    let mid = x.scale(0.5 / gx).add(&y.scale(0.5 / gy));
    Ok(1.0 - g.gauge(&mid)?)
}
