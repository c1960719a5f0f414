//! Causal diamonds of the cover: taxonomy by shape thresholds, search
//! oracles certifying the taxonomy, boosts of chart coordinates, and a
//! sampled scene in which the intersection of two diamond developments
//! disconnects under iterated boosts.
//!
//! For vertices with foot distance `d` and time span `dt` the interior is
//! nonempty iff `dt > d`. The interior contains a conjugate pair iff
//! `dt > 2*pi - d`, and a complete photon (arc length pi) iff
//! `dt >= 2*pi - d`; the equality cases split into the full affine chart
//! (`d = 0`) and null half-space diamonds (`d > 0`). [`classify_diamond`]
//! applies these thresholds directly, while [`find_conjugate_pair`] and
//! [`contains_complete_photon`] certify them independently: they search a
//! meridian grid and accept a witness only after direct membership checks,
//! so they report what the grid finds, not what the thresholds predict.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::causality::{classify, diamond_contains, photon_through, PhotonSegment, TimeDirection};
use crate::charts::{frame_for, ChartFrame, ChartPoint};
use crate::cloud::{components, SampleCloud};
use crate::error::{Error, Result};
use crate::models::{deck_sigma, project, UniPoint};
use crate::tol::Tolerance;

/// An ordered pair of cover points bounding the open diamond between them.
#[derive(Debug, Clone)]
pub struct Diamond {
    past: UniPoint,
    future: UniPoint,
}

impl Diamond {
    /// Requires the future vertex to be causally at or above the past one.
    pub fn new(past: UniPoint, future: UniPoint, tol: &Tolerance) -> Result<Self> {
        let rel = classify(&past, &future, tol);
        if !rel.tag.is_causal_future() {
            return Err(Error::NotCausallyOrdered {
                detail: format!(
                    "future vertex is {:?} relative to the past vertex (margin {:.3e})",
                    rel.tag, rel.margin
                ),
            });
        }
        Ok(Self { past, future })
    }

    pub fn past(&self) -> &UniPoint {
        &self.past
    }

    pub fn future(&self) -> &UniPoint {
        &self.future
    }

    /// Time separation of the vertices.
    pub fn time_span(&self) -> f64 {
        self.future.t() - self.past.t()
    }

    /// Great-circle distance between the vertex feet.
    pub fn foot_distance(&self) -> f64 {
        crate::causality::sphere_distance_unchecked(self.past.x(), self.future.x())
    }
}

/// Shape classes of a diamond, in increasing time span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiamondKind {
    /// No interior: the vertices are too close in time.
    EmptyInterior,
    /// Conformal to a bounded diamond of Minkowski space.
    MinkowskiLike,
    /// Conformal to the past of a degenerate null hyperplane.
    NullHalfSpace,
    /// The vertices are conjugate one turn apart: a full affine chart.
    AffineChart,
    /// Wide enough to wrap around the spatial sphere; the interior holds a
    /// conjugate pair and is no longer simply a chart region.
    ConjugateCylinder,
}

/// Classifies a diamond by its time span `dt` against its foot distance
/// `d`, with a classification band around each threshold.
pub fn classify_diamond(d: &Diamond, tol: &Tolerance) -> DiamondKind {
    let dd = d.foot_distance();
    let dt = d.time_span();
    let band = tol.classification_band;
    if dt <= dd + band {
        DiamondKind::EmptyInterior
    } else if dt > TAU - dd + band {
        DiamondKind::ConjugateCylinder
    } else if (dt - TAU).abs() <= band && dd <= band {
        DiamondKind::AffineChart
    } else if (dt - (TAU - dd)).abs() <= band && dd > band {
        DiamondKind::NullHalfSpace
    } else {
        DiamondKind::MinkowskiLike
    }
}

// Orthonormal pair (m0, m1) spanning a great circle through both vertex
// feet; m0 is the past foot. When the feet are parallel or antipodal any
// circle through them works; the tie breaks to the coordinate axis least
// aligned with m0.
fn meridian_frame(d: &Diamond) -> (DVector<f64>, DVector<f64>) {
    let m0 = d.past().x().clone();
    let xf = d.future().x();
    let mut m1 = xf - &m0 * m0.dot(xf);
    let norm = m1.norm();
    if norm > 1e-9 {
        m1 /= norm;
    } else {
        let j = (0..m0.len())
            .min_by(|&a, &b| m0[a].abs().partial_cmp(&m0[b].abs()).unwrap())
            .unwrap();
        let mut e = DVector::zeros(m0.len());
        e[j] = 1.0;
        m1 = &e - &m0 * m0.dot(&e);
        m1 /= m1.norm();
    }
    (m0, m1)
}

// Feasibility window for a point r = (y(phi), t) whose translate one turn
// up must stay below the future vertex: t must exceed lo = tp + d1 to sit
// above the past vertex, and stay below hi = tf - 2*pi + d2 for sigma(r)
// to sit below the future one. The remaining two constraints are implied:
// sigma(r) clears the past vertex by 2*d1 more than r does, and r clears
// the future vertex by 2*(pi - d2) more than sigma(r) does.
struct MeridianWindow<'a> {
    m0: DVector<f64>,
    m1: DVector<f64>,
    xp: &'a DVector<f64>,
    xf: &'a DVector<f64>,
    tp: f64,
    tf: f64,
}

impl<'a> MeridianWindow<'a> {
    fn new(d: &'a Diamond) -> Self {
        let (m0, m1) = meridian_frame(d);
        Self {
            m0,
            m1,
            xp: d.past().x(),
            xf: d.future().x(),
            tp: d.past().t(),
            tf: d.future().t(),
        }
    }

    fn foot(&self, phi: f64) -> DVector<f64> {
        &self.m0 * phi.cos() + &self.m1 * phi.sin()
    }

    /// Returns (lo, hi) time bounds at meridian angle phi.
    fn bounds(&self, phi: f64) -> (f64, f64) {
        let y = self.foot(phi);
        let d1 = crate::causality::sphere_distance_unchecked(&y, self.xp);
        let d2 = crate::causality::sphere_distance_unchecked(&y, self.xf);
        (self.tp + d1, self.tf - TAU + d2)
    }

    /// Half-width of the window; positive when it has interior.
    fn score(&self, phi: f64) -> f64 {
        let (lo, hi) = self.bounds(phi);
        0.5 * (hi - lo)
    }

    /// Best meridian angle after a coarse scan and local refinement.
    fn refine_best(&self, density: usize) -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.0f64);
        for i in 0..density {
            let phi = TAU * i as f64 / density as f64;
            let s = self.score(phi);
            if s > best.0 {
                best = (s, phi);
            }
        }
        let mut step = TAU / density as f64;
        for _ in 0..24 {
            let center = best.1;
            for j in -8i32..=8 {
                let phi = center + step * j as f64 / 8.0;
                let s = self.score(phi);
                if s > best.0 {
                    best = (s, phi);
                }
            }
            step /= 8.0;
            if step < 1e-12 {
                break;
            }
        }
        best.1
    }
}

/// Searches the open diamond for a point together with its own conjugate
/// translate one half-turn up, both strictly inside.
///
/// The search runs over great-circle feet through the two vertex feet and
/// the optimal time level per foot. This is exhaustive in the following
/// sense: if any conjugate pair lies inside, one of the form
/// `(r, sigma(r))` with foot on the vertex meridian does, so a meridian
/// grid with refinement finds it. A candidate is returned only after both
/// members pass a strict membership check.
pub fn find_conjugate_pair(
    d: &Diamond,
    grid_density: usize,
    tol: &Tolerance,
) -> Option<(UniPoint, UniPoint)> {
    let density = grid_density.max(8);
    if d.time_span() <= PI {
        return None; // the translate cannot fit below the future vertex
    }
    let win = MeridianWindow::new(d);
    let phi = win.refine_best(density);
    if win.score(phi) <= tol.classification_band {
        return None;
    }
    let (lo, hi) = win.bounds(phi);
    let r = UniPoint::normalized(win.foot(phi), 0.5 * (lo + hi));
    let sr = deck_sigma(&r, 1);
    if diamond_contains(d, &r, true, tol) && diamond_contains(d, &sr, true, tol) {
        Some((r, sr))
    } else {
        None
    }
}

// Verifies one complete-photon candidate: closed containment at the two
// endpoints, strict containment at interior samples. The interior margins
// of a genuine witness grow linearly away from the endpoints, so a fixed
// sample set cannot be fooled: a photon arc that touches a vertex cone on
// any interior interval runs along it entirely and fails the endpoint
// opposite to it.
fn verify_complete_photon(
    d: &Diamond,
    base: UniPoint,
    tangent: DVector<f64>,
    tol: &Tolerance,
) -> Option<PhotonSegment> {
    let seg = photon_through(&base, &tangent, TimeDirection::Future, tol).ok()?;
    let (a, b) = seg.endpoints();
    if !diamond_contains(d, &a, false, tol) || !diamond_contains(d, &b, false, tol) {
        return None;
    }
    for j in 1..32 {
        let s = PI * j as f64 / 32.0;
        if !diamond_contains(d, &seg.point_at(s), true, tol) {
            return None;
        }
    }
    Some(seg)
}

/// Searches the closed diamond for a photon of full arc length pi.
///
/// Candidates run along the vertex meridian: base feet on a grid of
/// meridian angles (plus the refined best angle), time levels at the ends
/// and midpoint of the per-angle feasibility window, and both tangent
/// orientations along the meridian. Endpoints may touch the vertex cones;
/// interior points must be strictly inside.
pub fn contains_complete_photon(
    d: &Diamond,
    grid_density: usize,
    tol: &Tolerance,
) -> Option<PhotonSegment> {
    let density = grid_density.max(8);
    let band = tol.classification_band;
    if d.time_span() < PI - 2.0 * band {
        return None; // too short in time to hold a full arc
    }
    let win = MeridianWindow::new(d);

    let mut cands: Vec<(f64, f64)> = (0..density)
        .map(|i| {
            let phi = TAU * i as f64 / density as f64;
            (win.score(phi), phi)
        })
        .collect();
    let refined = win.refine_best(density);
    cands.push((win.score(refined), refined));
    cands.retain(|&(s, _)| s >= -2.0 * band);
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));

    for &(_, phi) in &cands {
        let (lo, hi) = win.bounds(phi);
        let foot = win.foot(phi);
        let tangent = &win.m1 * phi.cos() - &win.m0 * phi.sin();
        for t0 in [0.5 * (lo + hi), lo, hi] {
            for dir in [1.0, -1.0] {
                let base = UniPoint::normalized(foot.clone(), t0);
                if let Some(seg) = verify_complete_photon(d, base, &tangent * dir, tol) {
                    return Some(seg);
                }
            }
        }
    }
    None
}

/// A boost of chart coordinates `(x, y, z)`, time `z` last: in the null
/// pair `a = y + z`, `b = y - z` it scales `a` by `1/lambda` and `b` by
/// `lambda`, preserving the form `|x|^2 + y^2 - z^2 = |x|^2 + a*b` and
/// fixing the plane `{y = z = 0}` pointwise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Loxodromic {
    lambda: f64,
}

/// A boost with factor `lambda > 1`.
pub fn loxodromic(lambda: f64) -> Result<Loxodromic> {
    if lambda <= 1.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "boost factor must be finite and exceed 1, got {lambda}"
        )));
    }
    Ok(Loxodromic { lambda })
}

impl Loxodromic {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The k-th iterate; `power(0)` is the identity.
    pub fn power(&self, k: u32) -> Loxodromic {
        Loxodromic {
            lambda: self.lambda.powi(k as i32),
        }
    }

    pub fn inverse(&self) -> Loxodromic {
        Loxodromic {
            lambda: 1.0 / self.lambda,
        }
    }

    /// Applies the boost to one chart vector (time last).
    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        let n = w.len();
        assert!(n >= 2, "chart vectors need a (y, z) block");
        let (y, z) = (w[n - 2], w[n - 1]);
        let a = (y + z) / self.lambda;
        let b = (y - z) * self.lambda;
        let mut out = w.clone();
        out[n - 2] = 0.5 * (a + b);
        out[n - 1] = 0.5 * (a - b);
        out
    }
}

fn default_n() -> usize {
    3
}
fn default_lambda() -> f64 {
    2.0
}
fn default_k() -> u32 {
    3
}
fn default_r_inner() -> f64 {
    0.5
}
fn default_samples() -> usize {
    20_000
}
fn default_seed() -> u64 {
    42
}
fn default_knn() -> usize {
    10
}

/// Parameters of the disconnection scene: the development of the unit ball
/// is boosted `k` times and intersected with the exterior region of a
/// concentric ball of radius `r_inner`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleScene {
    /// Chart dimension (one time plus n-1 space coordinates).
    #[serde(default = "default_n")]
    pub n: usize,
    /// Boost factor per iteration.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Number of boost iterations.
    #[serde(default = "default_k")]
    pub k: u32,
    /// Radius of the inner ball whose exterior region is intersected.
    #[serde(default = "default_r_inner")]
    pub r_inner: f64,
    /// Number of points drawn from the development before filtering.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// RNG seed for sampling.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Neighbor count of the mutual-kNN connectivity graph.
    #[serde(default = "default_knn")]
    pub knn: usize,
}

impl Default for CounterexampleScene {
    fn default() -> Self {
        Self {
            n: default_n(),
            lambda: default_lambda(),
            k: default_k(),
            r_inner: default_r_inner(),
            samples: default_samples(),
            seed: default_seed(),
            knn: default_knn(),
        }
    }
}

impl CounterexampleScene {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(
                "scene dimension must be at least 3".into(),
            ));
        }
        if self.lambda <= 1.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(
                "scene boost factor must be finite and exceed 1".into(),
            ));
        }
        if !(self.r_inner > 0.0 && self.r_inner < 1.0) {
            return Err(Error::InvalidParameter(
                "inner radius must lie strictly between 0 and 1".into(),
            ));
        }
        if self.knn == 0 {
            return Err(Error::InvalidParameter(
                "neighbor count must be at least 1".into(),
            ));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter(
                "sample count must be positive".into(),
            ));
        }
        Ok(())
    }
}

// Interior of the development of the unit ball at time zero: the double
// cone |spatial| < 1 - |time|.
fn inside_development(w: &DVector<f64>) -> bool {
    let n = w.len();
    let t = w[n - 1];
    w.rows(0, n - 1).norm() < 1.0 - t.abs()
}

// Points never causally related to the closed concentric ball of radius r:
// |spatial| > r + |time|.
fn outside_development(w: &DVector<f64>, r: f64) -> bool {
    let n = w.len();
    let t = w[n - 1];
    w.rows(0, n - 1).norm() > r + t.abs()
}

/// Verdicts for two coordinate slices of the boosted intersection,
/// computed independently of any sampling.
#[derive(Debug, Clone, Serialize)]
pub struct SliceVerdicts {
    /// Inner edge of the slice by the boost-fixed plane, located by ray
    /// bisection of the exact membership predicate; absent if the slice is
    /// empty.
    pub fixed_plane_inner: Option<f64>,
    /// Outer edge of the same slice.
    pub fixed_plane_outer: Option<f64>,
    pub fixed_plane_nonempty: bool,
    /// Whether the slice by the boost plane `{x = 0}` is empty. It is,
    /// exactly when `lambda^-k <= r_inner`: one null width of the boosted
    /// development shrinks to `lambda^-k` while the exterior region keeps
    /// every point at null width above `r_inner`.
    pub boost_plane_empty: bool,
    /// The squeezed null width `lambda^-k`.
    pub squeezed_width: f64,
}

/// Full outcome of one scene evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub scene: CounterexampleScene,
    pub slices: SliceVerdicts,
    /// Component count of the sampled intersection.
    pub components: usize,
    /// Points surviving the exterior-region filter.
    pub kept_samples: usize,
}

#[derive(Debug)]
pub struct CounterexampleRun {
    pub report: CounterexampleReport,
    pub cloud: SampleCloud,
    pub labels: Vec<u32>,
}

fn slice_verdicts(scene: &CounterexampleScene, boost: &Loxodromic) -> SliceVerdicts {
    let n = scene.n;
    let inv = boost.inverse();
    let member = |w: &DVector<f64>| inside_development(&inv.apply(w)) && outside_development(w, scene.r_inner);
    let on_ray = |rho: f64| {
        let mut w = DVector::zeros(n);
        w[0] = rho;
        member(&w)
    };

    // The boost fixes {y = z = 0} pointwise and everything is rotation
    // invariant in the x block, so one ray resolves the whole slice.
    let mut seed_rho = None;
    for i in 1..400 {
        let rho = i as f64 * 0.005;
        if on_ray(rho) {
            seed_rho = Some(rho);
            break;
        }
    }
    let (fixed_plane_inner, fixed_plane_outer) = match seed_rho {
        None => (None, None),
        Some(rho0) => {
            let bisect = |mut out: f64, mut inn: f64| {
                // `inn` satisfies the predicate, `out` does not.
                for _ in 0..64 {
                    let mid = 0.5 * (out + inn);
                    if on_ray(mid) {
                        inn = mid;
                    } else {
                        out = mid;
                    }
                }
                0.5 * (out + inn)
            };
            (Some(bisect(0.0, rho0)), Some(bisect(2.0, rho0)))
        }
    };

    let squeezed_width = scene.lambda.powi(-(scene.k as i32));
    SliceVerdicts {
        fixed_plane_inner,
        fixed_plane_outer,
        fixed_plane_nonempty: seed_rho.is_some(),
        boost_plane_empty: squeezed_width <= scene.r_inner,
        squeezed_width,
    }
}

/// Evaluates one scene: exact slice verdicts, then a sampled picture of
/// the boosted intersection and its component count.
///
/// Sampling rejection-draws `samples` points uniformly from the
/// development, pushes them through the boost, and keeps those in the
/// exterior region; the image region is a thin sliver for large `k`, so
/// sampling the source and mapping forward is what keeps the picture
/// faithful. Fewer than 100 surviving points is reported as an error
/// rather than a component count.
pub fn counterexample_scene(scene: &CounterexampleScene) -> Result<CounterexampleRun> {
    scene.validate()?;
    let boost = loxodromic(scene.lambda)?.power(scene.k);
    let slices = slice_verdicts(scene, &boost);

    let mut rng = ChaCha12Rng::seed_from_u64(scene.seed);
    let mut cloud = SampleCloud::new(
        scene.n,
        scene.seed,
        format!(
            "boosted intersection: lambda={}, k={}, r_inner={}",
            scene.lambda, scene.k, scene.r_inner
        ),
    );
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let max_attempts = scene.samples.saturating_mul(1000);
    let mut draw = DVector::zeros(scene.n);
    while accepted < scene.samples && attempts < max_attempts {
        attempts += 1;
        for c in draw.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        if !inside_development(&draw) {
            continue;
        }
        accepted += 1;
        let image = boost.apply(&draw);
        if outside_development(&image, scene.r_inner) {
            cloud.push(image.as_slice());
        }
    }
    if cloud.len() < 100 {
        return Err(Error::DegenerateSampling {
            kept: cloud.len(),
            min: 100,
        });
    }
    let (count, labels) = components(&cloud, scene.knn)?;
    let report = CounterexampleReport {
        scene: scene.clone(),
        slices,
        components: count,
        kept_samples: cloud.len(),
    };
    Ok(CounterexampleRun {
        report,
        cloud,
        labels,
    })
}

/// A centered ball in the `{time = 0}` slice of a chart, described by the
/// two regions its causal structure cuts out: the Cauchy development
/// `{w : |w_bar| < r - |w_t|}` (a diamond on the cover) and the exterior
/// `{w : |w_bar| > r + |w_t|}` of points never causally related to the
/// closed ball.
#[derive(Debug, Clone)]
pub struct SphereDiamonds {
    development: Diamond,
    radius: f64,
    frame: ChartFrame,
}

/// Builds the two regions cut out by the sphere `|w_bar| = radius` in the
/// chart's `{time = 0}` slice. The development diamond's cover vertices are
/// the lifts of `(0, -radius)` and `(0, +radius)` on the chart time axis.
pub fn diamonds_from_sphere(
    radius: f64,
    frame: &ChartFrame,
    tol: &Tolerance,
) -> Result<SphereDiamonds> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive and finite, got {radius}"
        )));
    }
    let n = frame.dim();
    let mut bottom = DVector::zeros(n);
    bottom[n - 1] = -radius;
    let mut top = DVector::zeros(n);
    top[n - 1] = radius;
    let past = frame.lift(&ChartPoint::new(bottom)?, tol)?;
    let future = frame.lift(&ChartPoint::new(top)?, tol)?;
    Ok(SphereDiamonds {
        development: Diamond::new(past, future, tol)?,
        radius,
        frame: frame.clone(),
    })
}

impl SphereDiamonds {
    pub fn development(&self) -> &Diamond {
        &self.development
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn frame(&self) -> &ChartFrame {
        &self.frame
    }

    /// Whether `w` lies in the open Cauchy development of the ball.
    pub fn in_development(&self, w: &ChartPoint) -> bool {
        let n = w.dim();
        w.coords().rows(0, n - 1).norm() < self.radius - w.time().abs()
    }

    /// Whether `w` can never be causally related to the closed ball.
    pub fn in_exterior(&self, w: &ChartPoint) -> bool {
        let n = w.dim();
        w.coords().rows(0, n - 1).norm() > self.radius + w.time().abs()
    }
}

/// Outcome of the shared-vertex intersection audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SharedVertexCheck {
    /// One of the lower vertices is not chronologically below `p`.
    EmptyIntersection,
    /// Every probed chord midpoint stayed inside both diamonds.
    MidpointsClosed,
    /// A chord midpoint left the intersection; carries its chart coordinates.
    MidpointEscaped { witness: ChartPoint },
}

/// Audits connectivity of `I(q1, p) & I(q2, p)`, two diamonds sharing their
/// future vertex `p`.
///
/// Both diamonds are mapped to the chart anchored one half-period below `p`,
/// whose region is exactly the conjugate-free chronological past of `p` and
/// whose flat causality agrees with the cover there; each diamond becomes
/// the flat future cone of its lower vertex, so the intersection of two
/// convex cones must be connected. The audit rejection-samples probe pairs
/// from the intersection and re-verifies every chord midpoint at cover
/// level, reporting the first midpoint that escapes, if any.
///
/// Both diamonds must be free of conjugate points and complete photons
/// (`MinkowskiLike`); spacelike or null configurations yield
/// [`SharedVertexCheck::EmptyIntersection`].
pub fn shared_vertex_intersection_check(
    p: &UniPoint,
    q1: &UniPoint,
    q2: &UniPoint,
    probes: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<SharedVertexCheck> {
    for q in [q1, q2] {
        if classify(q, p, tol).tag != crate::causality::CausalTag::ChronoFuture {
            return Ok(SharedVertexCheck::EmptyIntersection);
        }
    }
    for q in [q1, q2] {
        let kind = classify_diamond(&Diamond::new(q.clone(), p.clone(), tol)?, tol);
        if kind != DiamondKind::MinkowskiLike {
            return Err(Error::Precondition(format!(
                "shared-vertex audit needs conjugate-free open diamonds, got {kind:?}"
            )));
        }
    }
    let frame = frame_for(&deck_sigma(p, -1));
    let c1 = frame.chart_coords(&project(q1), tol)?;
    let c2 = frame.chart_coords(&project(q2), tol)?;
    let n = frame.dim();

    // Cone margin of X over vertex c: positive strictly inside I^+(c).
    let cone_margin = |x: &DVector<f64>, c: &ChartPoint| {
        (x[n - 1] - c.time()) - (x.rows(0, n - 1) - c.coords().rows(0, n - 1)).norm()
    };
    // Box around the lowest common future region of the two cones.
    let spread = (c1.coords().rows(0, n - 1) - c2.coords().rows(0, n - 1)).norm();
    let base_t = c1.time().max(c2.time()) + spread / 2.0;
    let center = (c1.coords() + c2.coords()) / 2.0;
    let half = spread / 2.0 + 2.0;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut kept: Vec<ChartPoint> = Vec::with_capacity(2 * probes);
    let mut attempts = 0usize;
    let max_attempts = (2 * probes).saturating_mul(1000).max(1000);
    while kept.len() < 2 * probes && attempts < max_attempts {
        attempts += 1;
        let mut x = DVector::from_fn(n, |i, _| center[i] + rng.gen_range(-half..half));
        x[n - 1] = base_t + rng.gen_range(0.0..4.0);
        if cone_margin(&x, &c1) <= tol.tau || cone_margin(&x, &c2) <= tol.tau {
            continue;
        }
        let probe = ChartPoint::new(x)?;
        // The flat verdict is authoritative only through the cover.
        let lifted = frame.lift(&probe, tol)?;
        let in_both = [q1, q2].iter().all(|q| {
            classify(q, &lifted, tol).tag == crate::causality::CausalTag::ChronoFuture
        }) && classify(&lifted, p, tol).tag == crate::causality::CausalTag::ChronoFuture;
        if in_both {
            kept.push(probe);
        }
    }
    if kept.len() < 2 * probes {
        return Err(Error::DegenerateSampling {
            kept: kept.len(),
            min: 2 * probes,
        });
    }
    for pair in kept.chunks_exact(2) {
        let mid = ChartPoint::new((pair[0].coords() + pair[1].coords()) / 2.0)?;
        let lifted = frame.lift(&mid, tol)?;
        let closed = [q1, q2].iter().all(|q| {
            classify(q, &lifted, tol).tag == crate::causality::CausalTag::ChronoFuture
        }) && classify(&lifted, p, tol).tag == crate::causality::CausalTag::ChronoFuture;
        if !closed {
            return Ok(SharedVertexCheck::MidpointEscaped { witness: mid });
        }
    }
    Ok(SharedVertexCheck::MidpointsClosed)
}
