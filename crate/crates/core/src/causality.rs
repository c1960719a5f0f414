//! Causal order, photons, and diamond membership on the universal cover
//! `S^{n-1} x R`.
//!
//! A point `(x1, t1)` lies in the chronological future of `(x0, t0)` iff
//!
//! ```text
//! d(x0, x1) < t1 - t0
//! ```
//!
//! where `d` is the great-circle distance, and on the lightcone iff equality
//! holds. The signed quantity
//!
//! ```text
//! margin = |t1 - t0| - d(x0, x1)
//! ```
//!
//! measures the distance to the causal boundary: positive for timelike
//! separation, negative for spacelike, zero on the cone. Since `d <= pi`,
//! any pair with `|t1 - t0| > pi` is chronologically related; the margin is
//! computed from raw time differences, never clamped.
//!
//! Photons are the null geodesics: great circles traversed at unit angular
//! speed, `s -> (cos s * x + sin s * u, t +- s)` for a unit tangent
//! `u` orthogonal to `x`. All photons through a point re-meet at its
//! conjugate points.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::diamonds::Diamond;
use crate::error::{Error, Result};
use crate::models::UniPoint;
use crate::tol::Tolerance;

/// Position of a second point relative to a first in the causal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalTag {
    Equal,
    ChronoFuture,
    ChronoPast,
    NullFuture,
    NullPast,
    Spacelike,
}

impl CausalTag {
    /// The tag of the same pair read from the other endpoint.
    pub fn time_reversed(self) -> Self {
        match self {
            CausalTag::ChronoFuture => CausalTag::ChronoPast,
            CausalTag::ChronoPast => CausalTag::ChronoFuture,
            CausalTag::NullFuture => CausalTag::NullPast,
            CausalTag::NullPast => CausalTag::NullFuture,
            other => other,
        }
    }

    /// Strictly inside the future cone.
    pub fn is_chrono_future(self) -> bool {
        self == CausalTag::ChronoFuture
    }

    /// In the closed future `J^+`: cone interior, cone, or the vertex.
    pub fn is_causal_future(self) -> bool {
        matches!(
            self,
            CausalTag::ChronoFuture | CausalTag::NullFuture | CausalTag::Equal
        )
    }

    /// Strictly inside the past cone.
    pub fn is_chrono_past(self) -> bool {
        self == CausalTag::ChronoPast
    }

    /// In the closed past `J^-`.
    pub fn is_causal_past(self) -> bool {
        matches!(
            self,
            CausalTag::ChronoPast | CausalTag::NullPast | CausalTag::Equal
        )
    }
}

/// Outcome of [`classify`]: tag plus the raw margin `|dt| - d`.
///
/// `boundary` is set when the margin lies inside the classification band,
/// i.e. the verdict is a tolerance call; callers holding sharper model
/// information can re-decide from the margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalRelation {
    pub tag: CausalTag,
    pub margin: f64,
    pub boundary: bool,
}

/// Great-circle distance between two unit vectors, in `[0, pi]`.
pub fn sphere_distance(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    for n in [x.norm(), y.norm()] {
        if !n.is_finite() || (n - 1.0).abs() > Tolerance::DEFAULT_BAND {
            return Err(Error::NonUnitVector { norm: n });
        }
    }
    Ok(sphere_distance_unchecked(x, y))
}

/// `arccos` of the clamped inner product; inputs assumed unit.
pub(crate) fn sphere_distance_unchecked(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    x.dot(y).clamp(-1.0, 1.0).acos()
}

/// Causal position of `q` relative to `p`.
///
/// `ChronoFuture` means `q` lies strictly inside the future cone of `p`.
/// Coincidence within `tau` is `Equal`, never `Null*`; otherwise a margin
/// inside the classification band yields the null tag of the sign of `dt`.
pub fn classify(p: &UniPoint, q: &UniPoint, tol: &Tolerance) -> CausalRelation {
    let d = sphere_distance_unchecked(p.x(), q.x());
    let dt = q.t() - p.t();
    classify_parts(d, dt, tol)
}

/// Banded classification from a spatial separation and a time offset.
///
/// Shared by the cover metric (`d` = great-circle distance) and flat
/// comparison metrics so that both use identical thresholds.
pub(crate) fn classify_parts(d: f64, dt: f64, tol: &Tolerance) -> CausalRelation {
    let margin = dt.abs() - d;
    let boundary = margin.abs() <= tol.classification_band;
    let tag = if d <= tol.tau && dt.abs() <= tol.tau {
        CausalTag::Equal
    } else if boundary {
        if dt >= 0.0 {
            CausalTag::NullFuture
        } else {
            CausalTag::NullPast
        }
    } else if margin > 0.0 {
        if dt > 0.0 {
            CausalTag::ChronoFuture
        } else {
            CausalTag::ChronoPast
        }
    } else {
        CausalTag::Spacelike
    };
    CausalRelation {
        tag,
        margin,
        boundary,
    }
}

/// Time orientation of a photon parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeDirection {
    Future,
    Past,
}

/// A null geodesic segment of the universal cover.
///
/// The carrier curve through the base `(x, t)` with unit tangent `u` (with
/// `u` orthogonal to `x`) is
///
/// ```text
/// s -> (cos s * x + sin s * u, t + s)    (future-directed)
/// s -> (cos s * x + sin s * u, t - s)    (past-directed)
/// ```
///
/// the great circle of `span(x, u)` at unit angular speed. `s_range` marks
/// the segment of interest; [`PhotonSegment::point_at`] evaluates the
/// carrier at any parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonSegment {
    base: UniPoint,
    tangent: DVector<f64>,
    s_range: (f64, f64),
    orientation: TimeDirection,
}

/// The photon through `p` with initial spatial tangent `u`, marked over the
/// default range `[0, pi]` (one complete segment).
pub fn photon_through(
    p: &UniPoint,
    u: &DVector<f64>,
    orientation: TimeDirection,
    tol: &Tolerance,
) -> Result<PhotonSegment> {
    if u.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: u.len(),
        });
    }
    let norm = u.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > tol.classification_band {
        return Err(Error::NonUnitVector { norm });
    }
    let dot = p.x().dot(u);
    if dot.abs() > tol.tau {
        return Err(Error::NonOrthogonalTangent { dot });
    }
    Ok(PhotonSegment {
        base: p.clone(),
        tangent: u.clone(),
        s_range: (0.0, PI),
        orientation,
    })
}

impl PhotonSegment {
    pub fn base(&self) -> &UniPoint {
        &self.base
    }

    pub fn tangent(&self) -> &DVector<f64> {
        &self.tangent
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.s_range
    }

    pub fn orientation(&self) -> TimeDirection {
        self.orientation
    }

    /// Evaluate the carrier curve; `s` need not lie inside `s_range`.
    pub fn point_at(&self, s: f64) -> UniPoint {
        let x = self.base.x() * s.cos() + &self.tangent * s.sin();
        let dt = match self.orientation {
            TimeDirection::Future => s,
            TimeDirection::Past => -s,
        };
        UniPoint::normalized(x, self.base.t() + dt)
    }

    /// Same carrier with a different marked range; requires `0 <= a <= b`.
    pub fn with_range(&self, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b) {
            return Err(Error::InvalidParameter(format!(
                "photon range [{a}, {b}] must satisfy 0 <= a <= b"
            )));
        }
        Ok(Self {
            s_range: (a, b),
            ..self.clone()
        })
    }

    /// The two marked endpoints.
    pub fn endpoints(&self) -> (UniPoint, UniPoint) {
        (self.point_at(self.s_range.0), self.point_at(self.s_range.1))
    }
}

/// A segment is complete when its endpoints are conjugate: arc length
/// exactly `pi`, within `tau`.
pub fn is_complete_segment(seg: &PhotonSegment, tol: &Tolerance) -> bool {
    ((seg.s_range.1 - seg.s_range.0) - PI).abs() <= tol.tau
}

/// Membership of `r` in the diamond between two causally ordered vertices.
///
/// Open membership requires strict chronology on both sides; closed
/// membership accepts lightcones and the vertices themselves. Near-cone
/// points (within the classification band) count as closed but not open.
pub fn diamond_contains(d: &Diamond, r: &UniPoint, open: bool, tol: &Tolerance) -> bool {
    let from_past = classify(d.past(), r, tol).tag;
    let to_future = classify(r, d.future(), tol).tag;
    if open {
        from_past.is_chrono_future() && to_future.is_chrono_future()
    } else {
        from_past.is_causal_future() && to_future.is_causal_future()
    }
}
