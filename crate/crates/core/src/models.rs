//! The two models of conformally compactified spacetime.
//!
//! **Double cover.** Null rays of `q(u,v,x) = -u^2 - v^2 + |x|^2` on
//! `R^{2,n}`, keeping the sign of the ray. Every null ray has a unique
//! representative with `u^2 + v^2 = 1` (and then automatically `|x| = 1`),
//! so the double cover is the product `S^1 x S^{n-1}` of unit circles and
//! spheres; [`EinPoint`] stores that representative.
//!
//! **Universal cover.** The cylinder `S^{n-1} x R` with the conformal class
//! of `(round metric) - dt^2`; [`UniPoint`] is a pair `(x, t)`. The
//! covering map is
//!
//! ```text
//! project(x, t) = [ (cos t, sin t, x) ]
//! ```
//!
//! and its deck group is generated by
//!
//! ```text
//! delta(x, t) = (x, t + 2*pi)        (deck of the double cover)
//! sigma(x, t) = (-x, t + pi)         (deck of the ray-space quotient)
//! ```
//!
//! with `sigma^2 = delta`. Two universal-cover points are *conjugate* when
//! one is `sigma^k` of the other for some `k != 0`; conjugate points are
//! where all photons through a point meet again. Applying `sigma` composes
//! the projection with the ambient antipode: `project(sigma(p))` is
//! `-project(p)` as a representative vector.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::tol::Tolerance;

/// Ambient vectors of `R^{2,n}` are plain dynamic vectors with `n + 2`
/// entries ordered `(u, v, x_1, ..., x_n)`.
pub type AmbientVec = DVector<f64>;

/// The ambient quadratic form `q(u, v, x) = -u^2 - v^2 + |x|^2`.
pub fn ambient_form(w: &AmbientVec) -> f64 {
    ambient_pairing(w, w)
}

/// The symmetric bilinear form polarizing [`ambient_form`]:
/// `<a, b> = -a_u b_u - a_v b_v + sum_i a_i b_i`.
pub fn ambient_pairing(a: &AmbientVec, b: &AmbientVec) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = -a[0] * b[0] - a[1] * b[1];
    for i in 2..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn check_finite(entries: &[f64]) -> Result<()> {
    if entries.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// A point of the double cover: a null ray of `R^{2,n}` with its sign.
///
/// The stored representative is normalized so that the timelike part
/// `(u, v)` is a unit vector; for a null vector the spatial part is then a
/// unit vector of `R^n` as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EinPoint {
    rep: AmbientVec,
}

impl EinPoint {
    /// Normalizes a null ambient vector to its canonical representative.
    /// The sign of the ray is kept: `w` and `-w` give different points.
    pub fn from_ambient(w: AmbientVec, tol: &Tolerance) -> Result<Self> {
        if w.len() < 4 {
            return Err(Error::DimensionTooSmall {
                min: 4,
                got: w.len(),
            });
        }
        check_finite(w.as_slice())?;
        let scale2 = w[0] * w[0] + w[1] * w[1];
        let q = ambient_form(&w);
        // Relative null check: q vanishes like |w|^2, so compare against the
        // squared scale of the vector.
        if q.abs() > tol.classification_band * scale2.max(ambient_spatial_norm2(&w)) {
            return Err(Error::NotNull { q });
        }
        if scale2 <= 0.0 {
            return Err(Error::NotNull { q });
        }
        Ok(Self {
            rep: w / scale2.sqrt(),
        })
    }

    /// The normalized representative `(cos t, sin t, x)`-style vector.
    pub fn rep(&self) -> &AmbientVec {
        &self.rep
    }

    /// Spatial dimension `n` (the sphere factor is `S^{n-1}`).
    pub fn dim(&self) -> usize {
        self.rep.len() - 2
    }

    /// The opposite ray `[-w]`, a different point of the double cover.
    pub fn antipode(&self) -> Self {
        Self { rep: -&self.rep }
    }

    /// Equality as points of the double cover (representatives agree).
    pub fn same_point(&self, other: &Self, tol: &Tolerance) -> bool {
        self.rep.len() == other.rep.len()
            && (&self.rep - &other.rep).amax() <= tol.classification_band
    }

    /// Equality in the projective quotient, where `[w] = [-w]`. Exposes the
    /// once-punctured conformal compactification below the double cover.
    pub fn same_up_to_sign(&self, other: &Self, tol: &Tolerance) -> bool {
        self.same_point(other, tol) || self.antipode().same_point(other, tol)
    }

    /// Angle between the representative vectors of two points, measured with
    /// the Euclidean metric of `R^{n+2}`. Zero exactly for equal points, and
    /// `pi` for opposite rays.
    pub fn angular_gap(&self, other: &Self) -> f64 {
        let dot = self.rep.dot(&other.rep);
        let norms = self.rep.norm() * other.rep.norm();
        (dot / norms).clamp(-1.0, 1.0).acos()
    }

    /// The lift of this point whose time coordinate lies in the half-open
    /// window `(t_hint - pi, t_hint + pi]`.
    pub fn lift_near(&self, t_hint: f64) -> UniPoint {
        let theta = self.rep[1].atan2(self.rep[0]);
        let k = ((t_hint - theta) / TAU).round();
        let mut t = theta + TAU * k;
        if t - t_hint > PI {
            t -= TAU;
        } else if t - t_hint <= -PI {
            t += TAU;
        }
        let x = DVector::from_fn(self.dim(), |i, _| self.rep[i + 2]);
        UniPoint::normalized(x, t)
    }
}

fn ambient_spatial_norm2(w: &AmbientVec) -> f64 {
    (2..w.len()).map(|i| w[i] * w[i]).sum()
}

/// A point `(x, t)` of the universal cover `S^{n-1} x R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniPoint {
    x: DVector<f64>,
    t: f64,
}

impl UniPoint {
    /// Builds a point, requiring `x` to be unit length within `tol.tau`
    /// relative tolerance.
    pub fn new(x: DVector<f64>, t: f64, tol: &Tolerance) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::DimensionTooSmall {
                min: 2,
                got: x.len(),
            });
        }
        check_finite(x.as_slice())?;
        if !t.is_finite() {
            return Err(Error::NonFinite);
        }
        let norm = x.norm();
        if (norm - 1.0).abs() > tol.classification_band {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self { x, t })
    }

    /// Builds a point, rescaling `x` to unit length.
    pub fn normalized(x: DVector<f64>, t: f64) -> Self {
        let norm = x.norm();
        Self { x: x / norm, t }
    }

    /// The `i`-th coordinate axis of `S^{n-1}` at time `t`.
    pub fn axis(n: usize, i: usize, t: f64) -> Self {
        assert!(i < n, "axis index out of range");
        let mut x = DVector::zeros(n);
        x[i] = 1.0;
        Self { x, t }
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Pointwise comparison within `eps` (sphere part in the max norm).
    pub fn close_to(&self, other: &Self, eps: f64) -> bool {
        self.x.len() == other.x.len()
            && (&self.x - &other.x).amax() <= eps
            && (self.t - other.t).abs() <= eps
    }
}

/// Covering map onto the double cover: `(x, t) -> [(cos t, sin t, x)]`.
pub fn project(p: &UniPoint) -> EinPoint {
    let n = p.dim();
    let mut rep = DVector::zeros(n + 2);
    rep[0] = p.t.cos();
    rep[1] = p.t.sin();
    for i in 0..n {
        rep[i + 2] = p.x[i];
    }
    EinPoint { rep }
}

/// Deck transformation of the double cover: `delta^k (x, t) = (x, t + 2*pi*k)`.
pub fn deck_delta(p: &UniPoint, k: i64) -> UniPoint {
    UniPoint {
        x: p.x.clone(),
        t: p.t + TAU * k as f64,
    }
}

/// Generator of the full deck group:
/// `sigma^k (x, t) = ((-1)^k x, t + pi*k)`, with `sigma^2 = delta`.
pub fn deck_sigma(p: &UniPoint, k: i64) -> UniPoint {
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    UniPoint {
        x: sign * &p.x,
        t: p.t + PI * k as f64,
    }
}

/// Returns `Some(k)` when `q = sigma^k(p)` for some `k != 0` within
/// `tol.tau`, i.e. when the two points are conjugate.
pub fn is_conjugate(p: &UniPoint, q: &UniPoint, tol: &Tolerance) -> Option<i64> {
    if p.dim() != q.dim() {
        return None;
    }
    let k = ((q.t - p.t) / PI).round();
    if !k.is_finite() || k == 0.0 {
        return None;
    }
    if (q.t - p.t - k * PI).abs() > tol.tau {
        return None;
    }
    let k = k as i64;
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let gap = (0..p.dim())
        .map(|i| (q.x[i] - sign * p.x[i]).abs())
        .fold(0.0f64, f64::max);
    if gap <= tol.tau {
        Some(k)
    } else {
        None
    }
}
