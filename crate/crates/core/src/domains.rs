//! Regular domains of an affine chart and their shadow calculus.
//!
//! For a chart point `q` and a null direction `v = (v_bar, 1)` with
//! `|v_bar| = 1`, the support value is `phi_q(v) = -<q, v> = q_t - q_bar.v_bar`
//! in the block form `<a, b> = a_bar.b_bar - a_t b_t`. A null hyperplane with
//! coordinates `(v, s)` bounds the open future half space `phi_q(v) > s`, and
//! a future-regular domain is a nonempty intersection of such half spaces
//! whose heights stay bounded: `sup_i s_i = C < inf`. The shadow of `q` is the
//! sublevel family `{(v, s) : s >= phi_q(v)}`, so membership in the domain and
//! shadow disjointness from the boundary family are the same inequality read
//! from opposite sides.
//!
//! Boundary data may also carry round cone faces `(vertex X, side)` with
//! margin `(q_t - X_t) - |q_bar - X_bar|` (future side; reversed for past).
//! They describe the same class of domains in the limit of dense hyperplane
//! families but keep the boundary strictly curved, which matters when a
//! membership test has to distinguish a flat face from a sphere of finite
//! radius.
//!
//! The photon exit map follows past null rays `r(s) = p + s (w_hat, -1)` from
//! an interior point `p` until the first face margin vanishes; for a plane
//! face the margin is affine in `s` and the root is exact. The limit set of
//! those exit points is what a past-directed observer at `p` can reconstruct
//! of the domain: `q` lies in the open past development iff `q` chronologically
//! precedes `p` and no exit point is causally above `q`.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::causality::TimeDirection;
use crate::charts::{block_pairing, flat_classify, ChartFrame, ChartPoint, NullHyperplaneCoords};
use crate::error::{Error, Result};
use crate::models::{project, EinPoint, UniPoint};
use crate::tol::Tolerance;

/// Support value `phi_q(v) = -<q, v>` of a chart point against a null
/// direction normalized to unit time component.
///
/// `v` must be a finite null block vector with `v_t = 1` (equivalently,
/// `<v, v0> = -1` for the unit future axis `v0`), so `v = (v_bar, 1)` with
/// `|v_bar| = 1` up to the classification band.
pub fn support(q: &ChartPoint, v: &DVector<f64>, tol: &Tolerance) -> Result<f64> {
    if v.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: v.len(),
        });
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = v.len();
    if (v[n - 1] - 1.0).abs() > tol.classification_band {
        return Err(Error::BadNullDirection {
            detail: format!("time component {} is not 1", v[n - 1]),
        });
    }
    let spatial_norm = v.rows(0, n - 1).norm();
    if (spatial_norm - 1.0).abs() > tol.classification_band {
        return Err(Error::BadNullDirection {
            detail: format!("spatial norm {spatial_norm} is not 1"),
        });
    }
    Ok(-block_pairing(q.coords(), v))
}

/// The shadow function of a chart point: the map `v -> phi_q(v)` over null
/// directions, packaged with its base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowFunction {
    q: ChartPoint,
}

impl ShadowFunction {
    pub fn new(q: ChartPoint) -> Self {
        Self { q }
    }

    pub fn base(&self) -> &ChartPoint {
        &self.q
    }

    /// `phi_q(v)`; same preconditions as [`support`].
    pub fn value(&self, v: &DVector<f64>, tol: &Tolerance) -> Result<f64> {
        support(&self.q, v, tol)
    }
}

/// Whether the hyperplane `(v, s)` belongs to the closed shadow of `q`,
/// i.e. `s >= phi_q(v) - tau`.
pub fn shadow_contains(q: &ChartPoint, plane: &NullHyperplaneCoords, tol: &Tolerance) -> bool {
    plane.s() >= -block_pairing(q.coords(), plane.v()) - tol.tau
}

/// A round cone face: the boundary of the chronological future (or past) of
/// a vertex point, kept as an exact quadric rather than a hyperplane family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeFace {
    pub vertex: ChartPoint,
    pub side: TimeDirection,
}

impl ConeFace {
    /// Signed interior margin of `q` against this face: positive strictly
    /// inside the cone, zero on it, negative outside.
    pub fn margin(&self, q: &ChartPoint) -> f64 {
        let n = q.dim();
        let dx = (q.coords() - self.vertex.coords()).rows(0, n - 1).norm();
        let dt = q.time() - self.vertex.time();
        match self.side {
            TimeDirection::Future => dt - dx,
            TimeDirection::Past => -dt - dx,
        }
    }
}

/// Boundary data of a domain: a finite family of null hyperplanes, optional
/// cone faces, the regularity orientation, and the chart frame the
/// coordinates refer to.
///
/// `truncated_unbounded` marks data that samples an infinite family whose
/// heights grow without bound; such data never describes a regular domain
/// and [`is_regular`] reports it as irregular without a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryData {
    pub planes: Vec<NullHyperplaneCoords>,
    #[serde(default)]
    pub cones: Vec<ConeFace>,
    pub orientation: TimeDirection,
    #[serde(default)]
    pub truncated_unbounded: bool,
    pub frame: ChartFrame,
}

impl BoundaryData {
    /// Chart dimension the coordinates live in.
    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        self.frame.validate(tol)?;
        let n = self.dim();
        for h in &self.planes {
            h.validate(tol)?;
            if h.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: h.dim(),
                });
            }
        }
        for c in &self.cones {
            if c.vertex.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.vertex.dim(),
                });
            }
        }
        Ok(())
    }

    /// Signed interior margins of `q` against every face, planes first.
    /// For a future-regular domain a plane contributes `phi_q(v) - s`; a
    /// past-regular one reverses the sign. Cone faces carry their own side.
    pub fn margins(&self, q: &ChartPoint) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.planes.len() + self.cones.len());
        for h in &self.planes {
            let m = h.height(q);
            out.push(match self.orientation {
                TimeDirection::Future => m,
                TimeDirection::Past => -m,
            });
        }
        for c in &self.cones {
            out.push(c.margin(q));
        }
        out
    }

    /// Ternary membership of `q`: Interior when every margin exceeds `tau`,
    /// Boundary when the least margin sits within `tau` of zero, Exterior
    /// otherwise. Empty data describes the whole chart.
    pub fn member(&self, q: &ChartPoint, tol: &Tolerance) -> Membership {
        let margins = self.margins(q);
        let Some(min) = margins.iter().cloned().reduce(f64::min) else {
            return Membership::Interior;
        };
        if min > tol.tau {
            Membership::Interior
        } else if min >= -tol.tau {
            Membership::Boundary
        } else {
            Membership::Exterior
        }
    }
}

/// Ternary membership verdict for domain queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

/// Regularity of boundary data: finite families are regular with witness
/// bound `C = sup` of the face heights (`None` for empty data); data flagged
/// as a truncation of an unbounded family is irregular.
///
/// A future cone face with vertex `X` has supporting heights
/// `phi_X(v) <= X_t + |X_bar|`, which is the bound recorded for it.
pub fn is_regular(data: &BoundaryData) -> (bool, Option<f64>) {
    if data.truncated_unbounded {
        return (false, None);
    }
    let mut sup: Option<f64> = None;
    for h in &data.planes {
        sup = Some(sup.map_or(h.s(), |c| c.max(h.s())));
    }
    for c in &data.cones {
        let n = c.vertex.dim();
        let bound = c.vertex.time() + c.vertex.coords().rows(0, n - 1).norm();
        sup = Some(sup.map_or(bound, |cur| cur.max(bound)));
    }
    (true, sup)
}

/// A validated regular domain: boundary data whose height family is bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularDomain {
    data: BoundaryData,
}

/// Photon exit along one past null ray: either the first boundary crossing
/// at affine parameter `s`, or no crossing at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RayExit {
    At { s: f64, point: ChartPoint },
    Unbounded,
}

/// Outcome counts of a past-development reconstruction audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipReport {
    pub probes: usize,
    pub compared: usize,
    pub skipped_band: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<ChartPoint>,
    pub seed: u64,
}

impl RegularDomain {
    pub fn new(data: BoundaryData, tol: &Tolerance) -> Result<Self> {
        data.validate(tol)?;
        let (ok, _) = is_regular(&data);
        if !ok {
            return Err(Error::Precondition(
                "boundary data is not regular: unbounded height family".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &BoundaryData {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn member(&self, q: &ChartPoint, tol: &Tolerance) -> Membership {
        self.data.member(q, tol)
    }

    pub fn margins(&self, q: &ChartPoint) -> Vec<f64> {
        self.data.margins(q)
    }

    /// Whether the boundary constrains more than one null direction: at
    /// least two non-parallel hyperplanes, or any cone face.
    pub fn is_proper(&self, tol: &Tolerance) -> bool {
        if !self.data.cones.is_empty() {
            return true;
        }
        let n = self.dim();
        let planes = &self.data.planes;
        for i in 0..planes.len() {
            for j in (i + 1)..planes.len() {
                let vi = planes[i].v().rows(0, n - 1).into_owned();
                let vj = planes[j].v().rows(0, n - 1).into_owned();
                if vi.dot(&vj) < 1.0 - tol.classification_band {
                    return true;
                }
            }
        }
        false
    }

    /// Exit points of the past null rays from `p`, one per direction of a
    /// deterministic grid on the spatial unit sphere.
    ///
    /// Along `r(s) = p + s (w_hat, -1)` a future-regular plane margin is
    /// affine, `m_i - s (1 + w_hat.v_bar_i)`, so the crossing is the exact
    /// root `s = m_i / (1 + w_hat.v_bar_i)`; a future cone face with vertex
    /// `X` crosses at `s = (A^2 - |b|^2) / (2 (A + b.w_hat))` for
    /// `A = p_t - X_t`, `b = p_bar - X_bar`. The first crossing over all
    /// faces wins; rays that never cross report [`RayExit::Unbounded`].
    pub fn lambda_minus(
        &self,
        p: &ChartPoint,
        directions: usize,
        tol: &Tolerance,
    ) -> Result<Vec<(DVector<f64>, RayExit)>> {
        if self.data.orientation != TimeDirection::Future {
            return Err(Error::Precondition(
                "past exit map requires a future-regular domain".into(),
            ));
        }
        if self.member(p, tol) != Membership::Interior {
            return Err(Error::Precondition(
                "past exit map requires an interior base point".into(),
            ));
        }
        let n = self.dim();
        let grid = direction_grid(n - 1, directions);
        let mut out = Vec::with_capacity(grid.len());
        for w_hat in grid {
            let mut best: Option<f64> = None;
            for h in &self.data.planes {
                let slope = 1.0 + w_hat.dot(&h.v().rows(0, n - 1));
                if slope <= tol.tau {
                    continue; // ray parallel to or receding from this face
                }
                let s = h.height(p) / slope;
                best = Some(best.map_or(s, |b| b.min(s)));
            }
            for c in &self.data.cones {
                if c.side != TimeDirection::Future {
                    continue; // past rays stay inside a past cone
                }
                let a = p.time() - c.vertex.time();
                let b = (p.coords() - c.vertex.coords()).rows(0, n - 1).into_owned();
                let denom = 2.0 * (a + b.dot(&w_hat));
                if denom <= tol.tau {
                    continue;
                }
                let s = (a * a - b.norm_squared()) / denom;
                if s > 0.0 {
                    best = Some(best.map_or(s, |cur| cur.min(s)));
                }
            }
            let exit = match best {
                Some(s) => {
                    let mut coords = p.coords().clone();
                    for i in 0..(n - 1) {
                        coords[i] += s * w_hat[i];
                    }
                    coords[n - 1] -= s;
                    RayExit::At {
                        s,
                        point: ChartPoint::new(coords)?,
                    }
                }
                None => RayExit::Unbounded,
            };
            out.push((w_hat, exit));
        }
        Ok(out)
    }

    /// Audits the reconstruction of the past development from photon exits.
    ///
    /// For random probes `q` it compares membership verdict A, "`q`
    /// chronologically precedes `p` and lies in the domain interior", with
    /// the exit-side verdict B, "`q` chronologically precedes `p` and no
    /// past photon exit of `p` is causally above `q`". Verdict B is
    /// evaluated in closed form: with `T = p_t - q_t`, `a = p_bar - q_bar`,
    /// and `m_i` the margin of `p` against face `i`, the exit surface of
    /// face `i` clears `q` iff
    /// `2 m_i T - (T^2 - |a|^2) > |2 m_i a - (T^2 - |a|^2) v_bar_i|`.
    /// Probes within the band of either verdict's threshold are skipped.
    pub fn pip_reconstruction_check(
        &self,
        p: &ChartPoint,
        probes: usize,
        seed: u64,
        tol: &Tolerance,
    ) -> Result<PipReport> {
        if self.data.orientation != TimeDirection::Future {
            return Err(Error::Precondition(
                "reconstruction audit requires a future-regular domain".into(),
            ));
        }
        if !self.data.cones.is_empty() {
            return Err(Error::Precondition(
                "reconstruction audit is defined for hyperplane boundary data".into(),
            ));
        }
        if self.member(p, tol) != Membership::Interior {
            return Err(Error::Precondition(
                "reconstruction audit requires an interior base point".into(),
            ));
        }
        let n = self.dim();
        let p_margins = self.margins(p);
        let radius = 2.0 * (1.0 + p.coords().amax());
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut compared = 0usize;
        let mut skipped = 0usize;
        let mut mismatches = 0usize;
        let mut first: Option<ChartPoint> = None;
        for _ in 0..probes {
            let coords = DVector::from_fn(n, |i, _| p.coords()[i] + rng.gen_range(-radius..radius));
            let q = ChartPoint::new(coords)?;
            let rel = flat_classify(&q, p, tol);
            let margins = self.margins(&q);
            let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut banded = rel.boundary || min_margin.abs() <= tol.classification_band;
            let precedes = rel.tag.is_chrono_future() && !rel.boundary;
            let verdict_a = precedes && min_margin > tol.tau;
            let mut verdict_b = precedes;
            if precedes {
                let t = p.time() - q.time();
                let a = (p.coords() - q.coords()).rows(0, n - 1).into_owned();
                let depth = t * t - a.norm_squared();
                for (h, m) in self.data.planes.iter().zip(&p_margins) {
                    let lhs = 2.0 * m * t - depth;
                    let rhs = (2.0 * m * &a - depth * h.v().rows(0, n - 1)).norm();
                    if (lhs - rhs).abs() <= tol.classification_band * (1.0 + t * t) {
                        banded = true;
                    }
                    if lhs <= rhs {
                        verdict_b = false;
                    }
                }
            }
            if banded {
                skipped += 1;
                continue;
            }
            compared += 1;
            if verdict_a != verdict_b {
                mismatches += 1;
                if first.is_none() {
                    first = Some(q);
                }
            }
        }
        Ok(PipReport {
            probes,
            compared,
            skipped_band: skipped,
            mismatches,
            first_mismatch: first,
            seed,
        })
    }

    /// Searches for a spacelike chord between boundary points whose midpoint
    /// is still on the boundary, i.e. a certificate that some face is flat.
    ///
    /// Boundary points are found by bisection along random rays from the
    /// mean of interior samples; a trial produces a witness when the chord
    /// is spacelike, longer than `1e-3`, and its midpoint is a Boundary
    /// member. Returns `None` when no witness shows up within `trials`.
    pub fn strict_convexity_witness(
        &self,
        trials: usize,
        seed: u64,
        tol: &Tolerance,
    ) -> Result<Option<(ChartPoint, ChartPoint)>> {
        let n = self.dim();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let anchor = self.interior_anchor(&mut rng, tol)?;
        for _ in 0..trials {
            let Some(b1) = self.boundary_along(&anchor, &random_unit(&mut rng, n), tol) else {
                continue;
            };
            let Some(b2) = self.boundary_along(&anchor, &random_unit(&mut rng, n), tol) else {
                continue;
            };
            let delta = b2.coords() - b1.coords();
            let len = delta.norm();
            let spat2 = delta.rows(0, n - 1).norm_squared();
            let dt = delta[n - 1];
            // Bisection places each endpoint only to margin +-tau, which can
            // fake a spacelike excess of order len * tau on a null chord
            // (e.g. along a cone ruling); demand an excess the placement
            // error cannot produce and whose midpoint clears the tau band.
            let scale = 1.0 + b1.coords().norm() + b2.coords().norm();
            if len < 1e-3 || spat2 - dt * dt <= 16.0 * tol.tau * scale {
                continue; // need a genuinely spacelike, non-degenerate chord
            }
            let mid = ChartPoint::new((b1.coords() + b2.coords()) / 2.0)?;
            if self.member(&mid, tol) == Membership::Boundary {
                return Ok(Some((b1, b2)));
            }
        }
        Ok(None)
    }

    /// Mean of interior samples drawn from expanding centered boxes.
    fn interior_anchor(&self, rng: &mut ChaCha12Rng, tol: &Tolerance) -> Result<ChartPoint> {
        let n = self.dim();
        let mut found: Vec<DVector<f64>> = Vec::new();
        let mut half = 1.0;
        while found.len() < 32 && half <= 4096.0 {
            for _ in 0..4000 {
                let c = DVector::from_fn(n, |_, _| rng.gen_range(-half..half));
                let q = ChartPoint::new(c.clone())?;
                if self.member(&q, tol) == Membership::Interior {
                    found.push(c);
                    if found.len() >= 32 {
                        break;
                    }
                }
            }
            half *= 2.0;
        }
        if found.is_empty() {
            return Err(Error::Precondition(
                "no interior point found for the convexity anchor".into(),
            ));
        }
        let mut mean = DVector::zeros(n);
        for c in &found {
            mean += c;
        }
        mean /= found.len() as f64;
        let anchor = ChartPoint::new(mean)?;
        // Convexity of every face keeps the mean interior.
        debug_assert_eq!(self.member(&anchor, tol), Membership::Interior);
        Ok(anchor)
    }

    /// First boundary point along `anchor + t dir`, or `None` when the ray
    /// never leaves the domain.
    fn boundary_along(
        &self,
        anchor: &ChartPoint,
        dir: &DVector<f64>,
        tol: &Tolerance,
    ) -> Option<ChartPoint> {
        let at = |t: f64| ChartPoint::new(anchor.coords() + t * dir).expect("finite ray point");
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.member(&at(hi), tol) != Membership::Exterior {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return None;
            }
        }
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.member(&at(mid), tol) == Membership::Exterior {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(at(0.5 * (lo + hi)))
    }
}

/// The wedge domain cut by two non-parallel null hyperplanes.
pub fn misner(
    frame: &ChartFrame,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
    s1: f64,
    s2: f64,
    tol: &Tolerance,
) -> Result<RegularDomain> {
    let h1 = NullHyperplaneCoords::new(v1.clone(), s1, tol)?;
    let h2 = NullHyperplaneCoords::new(v2.clone(), s2, tol)?;
    let n = v1.len();
    if v2.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v2.len(),
        });
    }
    let cos = v1.rows(0, n - 1).dot(&v2.rows(0, n - 1));
    if cos >= 1.0 - tol.classification_band {
        return Err(Error::InvalidParameter(
            "wedge directions are parallel".into(),
        ));
    }
    RegularDomain::new(
        BoundaryData {
            planes: vec![h1, h2],
            cones: Vec::new(),
            orientation: TimeDirection::Future,
            truncated_unbounded: false,
            frame: frame.clone(),
        },
        tol,
    )
}

/// Deterministic direction grid on the unit sphere of `spatial_dim`-space.
///
/// Dimension 1 yields `{+1, -1}`; dimension 2 the exact uniform circle grid
/// `(cos(2 pi j / count), sin(2 pi j / count))`; higher dimensions a fixed
/// quasi-uniform set (seeded unit Gaussians), identical across calls.
pub fn direction_grid(spatial_dim: usize, count: usize) -> Vec<DVector<f64>> {
    match spatial_dim {
        0 => Vec::new(),
        1 => [1.0, -1.0]
            .iter()
            .take(count.min(2))
            .map(|&s| DVector::from_element(1, s))
            .collect(),
        2 => (0..count)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                DVector::from_column_slice(&[theta.cos(), theta.sin()])
            })
            .collect(),
        d => {
            let mut rng = ChaCha12Rng::seed_from_u64(0x6469_7247); // fixed stream
            (0..count).map(|_| random_unit(&mut rng, d)).collect()
        }
    }
}

fn random_unit(rng: &mut ChaCha12Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| -> f64 { StandardNormal.sample(rng) });
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Future endpoint of a causally ordered sequence on the cover, detected
/// through its projection to the closed model.
///
/// Consecutive samples must be causally ordered (`NotCausallyOrdered`
/// otherwise). The tail is declared convergent when the last angular gap of
/// the final `min(10, len - 1)` projection gaps is below the classification
/// band and no larger than the first tail gap; the endpoint is then the
/// projection of the last sample. Divergent or stalling tails yield `None`.
pub fn causal_endpoint(curve: &[UniPoint], tol: &Tolerance) -> Result<Option<EinPoint>> {
    if curve.len() < 2 {
        return Err(Error::Precondition(
            "endpoint detection needs at least two samples".into(),
        ));
    }
    for (k, pair) in curve.windows(2).enumerate() {
        let rel = crate::causality::classify(&pair[0], &pair[1], tol);
        let ordered = rel.tag.is_causal_future() || rel.tag == crate::causality::CausalTag::Equal;
        if !ordered {
            return Err(Error::NotCausallyOrdered {
                detail: format!("samples {k} and {} are not causally ordered", k + 1),
            });
        }
    }
    let tail = curve.len().min(11);
    let gaps: Vec<f64> = curve[curve.len() - tail..]
        .windows(2)
        .map(|pair| project(&pair[0]).angular_gap(&project(&pair[1])))
        .collect();
    let last = *gaps.last().expect("at least one gap");
    let first = gaps[0];
    if last <= tol.classification_band && last <= first {
        Ok(Some(project(&curve[curve.len() - 1])))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::frame_for;
    use crate::models::UniPoint;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn axis_frame(n: usize) -> ChartFrame {
        frame_for(&UniPoint::axis(n, 0, 0.0))
    }

    fn null_dir(angle: f64) -> DVector<f64> {
        DVector::from_column_slice(&[angle.cos(), angle.sin(), 1.0])
    }

    /// Future light cone of the chart origin as a 16-plane family.
    fn cone_domain(frame: &ChartFrame) -> RegularDomain {
        let planes = direction_grid(2, 16)
            .into_iter()
            .map(|u| {
                let v = DVector::from_column_slice(&[u[0], u[1], 1.0]);
                NullHyperplaneCoords::new(v, 0.0, &tol()).unwrap()
            })
            .collect();
        RegularDomain::new(
            BoundaryData {
                planes,
                cones: Vec::new(),
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame: frame.clone(),
            },
            &tol(),
        )
        .unwrap()
    }

    #[test]
    fn support_hand_values() {
        let t = tol();
        let origin = ChartPoint::zero(3);
        let v = null_dir(0.3);
        assert_eq!(support(&origin, &v, &t).unwrap(), 0.0);

        // One unit up the time axis: phi = t - x.v_bar = 1.
        let up = ChartPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        assert!((support(&up, &v, &t).unwrap() - 1.0).abs() < 1e-15);

        // Spatial probe (1, 0) against direction angle a: phi = -cos a.
        let q = ChartPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        for &a in &[0.0, 0.4, 1.3, 2.9] {
            let phi = support(&q, &null_dir(a), &t).unwrap();
            assert!((phi + a.cos()).abs() < 1e-15, "phi({a}) = {phi}");
        }
        let shadow = ShadowFunction::new(q.clone());
        assert_eq!(
            shadow.value(&null_dir(0.7), &t).unwrap(),
            support(&q, &null_dir(0.7), &t).unwrap()
        );
    }

    #[test]
    fn support_rejects_bad_directions() {
        let t = tol();
        let q = ChartPoint::zero(3);
        let not_null = DVector::from_column_slice(&[0.5, 0.0, 1.0]);
        assert!(matches!(
            support(&q, &not_null, &t),
            Err(Error::BadNullDirection { .. })
        ));
        let bad_time = DVector::from_column_slice(&[1.0, 0.0, 2.0]);
        assert!(matches!(
            support(&q, &bad_time, &t),
            Err(Error::BadNullDirection { .. })
        ));
        let bad_dim = DVector::from_column_slice(&[1.0, 1.0]);
        assert!(matches!(
            support(&q, &bad_dim, &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn shadow_and_membership_are_dual() {
        let t = tol();
        let frame = axis_frame(3);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..40 {
            let planes: Vec<NullHyperplaneCoords> = (0..5)
                .map(|_| {
                    let a = rng.gen_range(0.0..std::f64::consts::TAU);
                    NullHyperplaneCoords::new(null_dir(a), rng.gen_range(-0.5..0.5), &t).unwrap()
                })
                .collect();
            let dom = RegularDomain::new(
                BoundaryData {
                    planes: planes.clone(),
                    cones: Vec::new(),
                    orientation: TimeDirection::Future,
                    truncated_unbounded: false,
                    frame: frame.clone(),
                },
                &t,
            )
            .unwrap();
            for _ in 0..25 {
                let q = ChartPoint::from_slice(&[
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                ])
                .unwrap();
                let interior = dom.member(&q, &t) == Membership::Interior;
                let disjoint = planes.iter().all(|h| !shadow_contains(&q, h, &t));
                assert_eq!(interior, disjoint, "duality broke at {:?}", q.coords());
            }
        }
    }

    #[test]
    fn membership_hand_fixtures() {
        let t = tol();
        let frame = axis_frame(3);
        let cone = cone_domain(&frame);
        let up = ChartPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let origin = ChartPoint::zero(3);
        assert_eq!(cone.member(&up, &t), Membership::Interior);
        assert_eq!(cone.member(&origin, &t), Membership::Boundary);
        assert_eq!(
            cone.member(&ChartPoint::from_slice(&[1.0, 0.0, 0.3]).unwrap(), &t),
            Membership::Exterior
        );

        // Wedge above the two planes t = +-x: orthogonal spatial probe is
        // exactly on both faces.
        let u = DVector::from_column_slice(&[1.0, 0.0, 1.0]);
        let w = DVector::from_column_slice(&[-1.0, 0.0, 1.0]);
        let wedge = misner(&frame, &u, &w, 0.0, 0.0, &t).unwrap();
        assert_eq!(wedge.member(&up, &t), Membership::Interior);
        let side = ChartPoint::from_slice(&[0.0, 0.7, 0.0]).unwrap();
        assert_eq!(wedge.member(&side, &t), Membership::Boundary);
        assert_eq!(
            wedge.member(&ChartPoint::from_slice(&[2.0, 0.0, 0.0]).unwrap(), &t),
            Membership::Exterior
        );
    }

    #[test]
    fn membership_is_midpoint_convex() {
        let t = tol();
        let frame = axis_frame(3);
        let mut planes: Vec<NullHyperplaneCoords> = direction_grid(2, 6)
            .into_iter()
            .map(|u| {
                let v = DVector::from_column_slice(&[u[0], u[1], 1.0]);
                NullHyperplaneCoords::new(v, -0.25, &tol()).unwrap()
            })
            .collect();
        planes.truncate(5);
        let dom = RegularDomain::new(
            BoundaryData {
                planes,
                cones: vec![ConeFace {
                    vertex: ChartPoint::from_slice(&[0.1, 0.0, -0.4]).unwrap(),
                    side: TimeDirection::Future,
                }],
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame,
            },
            &t,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let mut sample = move || {
            ChartPoint::from_slice(&[
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-0.5..2.5),
            ])
            .unwrap()
        };
        let mut inside = 0;
        while inside < 1000 {
            let a = sample();
            let b = sample();
            if dom.member(&a, &t) != Membership::Interior
                || dom.member(&b, &t) != Membership::Interior
            {
                continue;
            }
            inside += 1;
            let mid = ChartPoint::new((a.coords() + b.coords()) / 2.0).unwrap();
            assert_eq!(dom.member(&mid, &t), Membership::Interior);
        }
    }

    #[test]
    fn past_regular_data_reverses_the_margins() {
        let t = tol();
        let frame = axis_frame(3);
        let v = null_dir(0.0);
        let h = NullHyperplaneCoords::new(v, 0.0, &t).unwrap();
        let down = BoundaryData {
            planes: vec![h],
            cones: Vec::new(),
            orientation: TimeDirection::Past,
            truncated_unbounded: false,
            frame,
        };
        // phi(q) = -1 at one unit down the axis: past-regular margin is +1.
        let q = ChartPoint::from_slice(&[0.0, 0.0, -1.0]).unwrap();
        assert_eq!(down.member(&q, &t), Membership::Interior);
        let up = ChartPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(down.member(&up, &t), Membership::Exterior);
    }

    #[test]
    fn regularity_reports_the_height_bound() {
        let t = tol();
        let frame = axis_frame(3);
        let planes = vec![
            NullHyperplaneCoords::new(null_dir(0.0), 0.3, &t).unwrap(),
            NullHyperplaneCoords::new(null_dir(2.0), -1.2, &t).unwrap(),
        ];
        let data = BoundaryData {
            planes,
            cones: Vec::new(),
            orientation: TimeDirection::Future,
            truncated_unbounded: false,
            frame: frame.clone(),
        };
        assert_eq!(is_regular(&data), (true, Some(0.3)));

        let empty = BoundaryData {
            planes: Vec::new(),
            cones: Vec::new(),
            orientation: TimeDirection::Future,
            truncated_unbounded: false,
            frame: frame.clone(),
        };
        assert_eq!(is_regular(&empty), (true, None));

        let truncated = BoundaryData {
            truncated_unbounded: true,
            ..data
        };
        assert_eq!(is_regular(&truncated), (false, None));
        assert!(matches!(
            RegularDomain::new(truncated, &t),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn misner_wedge_examples() {
        let t = tol();
        let frame = axis_frame(3);
        let u = DVector::from_column_slice(&[1.0, 0.0, 1.0]);
        let w = DVector::from_column_slice(&[-1.0, 0.0, 1.0]);
        let wedge = misner(&frame, &u, &w, 0.0, 0.0, &t).unwrap();
        // Interior iff t > |x1|.
        let two_up = ChartPoint::from_slice(&[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(wedge.member(&two_up, &t), Membership::Interior);
        assert_eq!(
            wedge.member(&ChartPoint::from_slice(&[0.5, 3.0, 0.6]).unwrap(), &t),
            Membership::Interior
        );
        assert_eq!(
            wedge.member(&ChartPoint::from_slice(&[0.8, 0.0, 0.5]).unwrap(), &t),
            Membership::Exterior
        );
        assert!(matches!(
            misner(&frame, &u, &u, 0.0, 1.0, &t),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn proper_needs_two_directions_or_a_cone() {
        let t = tol();
        let frame = axis_frame(3);
        let single = RegularDomain::new(
            BoundaryData {
                planes: vec![NullHyperplaneCoords::new(null_dir(0.0), 0.0, &t).unwrap()],
                cones: Vec::new(),
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame: frame.clone(),
            },
            &t,
        )
        .unwrap();
        assert!(!single.is_proper(&t));

        let u = DVector::from_column_slice(&[1.0, 0.0, 1.0]);
        let w = DVector::from_column_slice(&[-1.0, 0.0, 1.0]);
        assert!(misner(&frame, &u, &w, 0.0, 0.0, &t).unwrap().is_proper(&t));

        let round = RegularDomain::new(
            BoundaryData {
                planes: Vec::new(),
                cones: vec![ConeFace {
                    vertex: ChartPoint::zero(3),
                    side: TimeDirection::Future,
                }],
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame,
            },
            &t,
        )
        .unwrap();
        assert!(round.is_proper(&t));
    }

    #[test]
    fn cone_fixture_exits_at_one_half() {
        let t = tol();
        let frame = axis_frame(3);
        let dom = cone_domain(&frame);
        let p = ChartPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let exits = dom.lambda_minus(&p, 16, &t).unwrap();
        assert_eq!(exits.len(), 16);
        for (w_hat, exit) in &exits {
            let RayExit::At { s, point } = exit else {
                panic!("unexpected unbounded exit along {w_hat:?}");
            };
            assert!((s - 0.5).abs() < 1e-12, "exit parameter {s}");
            // Exit points are null to the base point and touch a face.
            let rel = flat_classify(point, &p, &t);
            assert!(rel.boundary, "margin {}", rel.margin);
            assert!(rel.tag.is_causal_future(), "{:?}", rel.tag);
            let min = dom
                .margins(point)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            assert!(min.abs() < 1e-12, "binding margin {min}");
        }
    }

    #[test]
    fn rays_parallel_to_a_face_are_unbounded() {
        let t = tol();
        let frame = axis_frame(3);
        let half = RegularDomain::new(
            BoundaryData {
                planes: vec![NullHyperplaneCoords::new(null_dir(0.0), 0.0, &t).unwrap()],
                cones: Vec::new(),
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame,
            },
            &t,
        )
        .unwrap();
        let p = ChartPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let exits = half.lambda_minus(&p, 16, &t).unwrap();
        let mut unbounded = 0;
        for (w_hat, exit) in &exits {
            let slope = 1.0 + w_hat[0];
            match exit {
                RayExit::Unbounded => {
                    unbounded += 1;
                    assert!(slope <= t.tau, "bounded slope {slope} reported unbounded");
                }
                RayExit::At { s, .. } => {
                    assert!((s - 1.0 / slope).abs() < 1e-12);
                }
            }
        }
        // Only the antipodal grid direction recedes from the face.
        assert_eq!(unbounded, 1);
        let outside = ChartPoint::from_slice(&[0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            half.lambda_minus(&outside, 4, &t),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn reconstruction_audit_finds_no_mismatches() {
        let t = tol();
        let frame = axis_frame(3);
        let cone = cone_domain(&frame);
        let p = ChartPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let report = cone.pip_reconstruction_check(&p, 2000, 7, &t).unwrap();
        assert_eq!(report.mismatches, 0, "first {:?}", report.first_mismatch);
        assert!(report.compared > 500, "compared {}", report.compared);

        let u = DVector::from_column_slice(&[1.0, 0.0, 1.0]);
        let w = DVector::from_column_slice(&[-1.0, 0.0, 1.0]);
        let wedge = misner(&frame, &u, &w, 0.0, 0.0, &t).unwrap();
        let p2 = ChartPoint::from_slice(&[0.0, 0.0, 2.0]).unwrap();
        let report2 = wedge.pip_reconstruction_check(&p2, 1500, 9, &t).unwrap();
        assert_eq!(report2.mismatches, 0, "first {:?}", report2.first_mismatch);
        assert!(report2.compared > 500);
    }

    #[test]
    fn closed_form_exit_verdict_matches_dense_sampling() {
        let t = tol();
        let frame = axis_frame(3);
        let planes = vec![
            NullHyperplaneCoords::new(null_dir(0.2), -0.1, &t).unwrap(),
            NullHyperplaneCoords::new(null_dir(2.1), 0.05, &t).unwrap(),
            NullHyperplaneCoords::new(null_dir(4.4), -0.3, &t).unwrap(),
        ];
        let dom = RegularDomain::new(
            BoundaryData {
                planes: planes.clone(),
                cones: Vec::new(),
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame,
            },
            &t,
        )
        .unwrap();
        let p = ChartPoint::from_slice(&[0.1, -0.05, 1.2]).unwrap();
        assert_eq!(dom.member(&p, &t), Membership::Interior);
        let p_margins = dom.margins(&p);
        let exits = dom.lambda_minus(&p, 4096, &t).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let mut checked = 0;
        for _ in 0..4000 {
            let q = ChartPoint::from_slice(&[
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ])
            .unwrap();
            let t_gap = p.time() - q.time();
            let a = (p.coords() - q.coords()).rows(0, 2).into_owned();
            if t_gap - a.norm() < 1e-2 {
                continue; // only probes safely inside the past of p
            }
            let depth = t_gap * t_gap - a.norm_squared();
            // Closed form, with a collar around each face's threshold.
            let mut safe_closed = true;
            let mut collar = false;
            for (h, m) in planes.iter().zip(&p_margins) {
                let lhs = 2.0 * m * t_gap - depth;
                let rhs = (2.0 * m * &a - depth * h.v().rows(0, 2)).norm();
                if (lhs - rhs).abs() < 1e-2 {
                    collar = true;
                }
                if lhs <= rhs {
                    safe_closed = false;
                }
            }
            if collar {
                continue;
            }
            // Densely sampled exits: q must clear every one causally.
            let safe_sampled = exits.iter().all(|(_, exit)| match exit {
                RayExit::At { point, .. } => {
                    let rel = flat_classify(&q, point, &t);
                    !(rel.tag.is_causal_future() || rel.tag == crate::causality::CausalTag::Equal)
                }
                RayExit::Unbounded => true,
            });
            checked += 1;
            assert_eq!(
                safe_closed,
                safe_sampled,
                "verdicts split at {:?}",
                q.coords()
            );
        }
        assert!(checked > 400, "only {checked} probes off the collar");
    }

    #[test]
    fn convexity_witness_flags_flat_faces() {
        let t = tol();
        let frame = axis_frame(3);
        let u = DVector::from_column_slice(&[1.0, 0.0, 1.0]);
        let w = DVector::from_column_slice(&[-1.0, 0.0, 1.0]);
        let wedge = misner(&frame, &u, &w, 0.0, 0.0, &t).unwrap();
        let hit = wedge.strict_convexity_witness(1000, 5, &t).unwrap();
        let (b1, b2) = hit.expect("wedge has flat faces");
        let mid = ChartPoint::new((b1.coords() + b2.coords()) / 2.0).unwrap();
        assert_eq!(wedge.member(&mid, &t), Membership::Boundary);
        let delta = b2.coords() - b1.coords();
        assert!(delta.rows(0, 2).norm_squared() > delta[2] * delta[2]);

        let half = RegularDomain::new(
            BoundaryData {
                planes: vec![NullHyperplaneCoords::new(null_dir(1.0), 0.2, &t).unwrap()],
                cones: Vec::new(),
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame,
            },
            &t,
        )
        .unwrap();
        assert!(half
            .strict_convexity_witness(1000, 6, &t)
            .unwrap()
            .is_some());
    }

    #[test]
    fn convexity_witness_stays_empty_on_a_round_cone() {
        let t = tol();
        let frame = axis_frame(3);
        let round = RegularDomain::new(
            BoundaryData {
                planes: Vec::new(),
                cones: vec![ConeFace {
                    vertex: ChartPoint::zero(3),
                    side: TimeDirection::Future,
                }],
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame,
            },
            &t,
        )
        .unwrap();
        assert!(round
            .strict_convexity_witness(2000, 12, &t)
            .unwrap()
            .is_none());
    }

    #[test]
    fn nested_data_shrinks_the_interior() {
        let t = tol();
        let frame = axis_frame(3);
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for _ in 0..100 {
            let planes: Vec<NullHyperplaneCoords> = (0..4)
                .map(|_| {
                    let a = rng.gen_range(0.0..std::f64::consts::TAU);
                    NullHyperplaneCoords::new(null_dir(a), rng.gen_range(-0.4..0.4), &t).unwrap()
                })
                .collect();
            let small = BoundaryData {
                planes: planes.clone(),
                cones: Vec::new(),
                orientation: TimeDirection::Future,
                truncated_unbounded: false,
                frame: frame.clone(),
            };
            let mut fewer = planes;
            fewer.truncate(2);
            let large = BoundaryData {
                planes: fewer,
                ..small.clone()
            };
            for _ in 0..20 {
                let q = ChartPoint::from_slice(&[
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                ])
                .unwrap();
                if small.member(&q, &t) == Membership::Interior {
                    assert_eq!(large.member(&q, &t), Membership::Interior);
                }
            }
        }
    }

    #[test]
    fn interiors_are_future_complete() {
        let t = tol();
        let frame = axis_frame(3);
        let dom = cone_domain(&frame);
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let mut tested = 0;
        while tested < 200 {
            let q = ChartPoint::from_slice(&[
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0),
            ])
            .unwrap();
            if dom.member(&q, &t) != Membership::Interior {
                continue;
            }
            tested += 1;
            for step in [0.1, 1.0, 10.0] {
                let mut up = q.coords().clone();
                up[2] += step;
                let shifted = ChartPoint::new(up).unwrap();
                assert_eq!(dom.member(&shifted, &t), Membership::Interior);
            }
        }
    }

    #[test]
    fn endpoint_of_a_slowing_climb() {
        let t = tol();
        let x = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let curve: Vec<UniPoint> = (1..=10_000)
            .map(|k| UniPoint::new(x.clone(), (k as f64).atan(), &t).unwrap())
            .collect();
        let end = causal_endpoint(&curve, &t).unwrap().expect("convergent");
        let target = project(&UniPoint::new(x, std::f64::consts::FRAC_PI_2, &t).unwrap());
        assert!(end.angular_gap(&target) < 1e-3);
    }

    #[test]
    fn endpoint_rejects_divergence_and_disorder() {
        let t = tol();
        let x = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let linear: Vec<UniPoint> = (0..200)
            .map(|k| UniPoint::new(x.clone(), 0.1 * k as f64, &t).unwrap())
            .collect();
        assert_eq!(causal_endpoint(&linear, &t).unwrap(), None);

        let mut swapped = linear.clone();
        swapped.swap(10, 11);
        assert!(matches!(
            causal_endpoint(&swapped, &t),
            Err(Error::NotCausallyOrdered { .. })
        ));
        assert!(matches!(
            causal_endpoint(&linear[..1], &t),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn endpoint_of_a_chart_ray_is_the_photon_endpoint() {
        let t = tol();
        let frame = axis_frame(3);
        let x0 = ChartPoint::from_slice(&[0.2, -0.1, 0.05]).unwrap();
        let w = DVector::from_column_slice(&[0.6, 0.8, 1.0]);
        let expected = frame.photon_endpoint(&x0, &w, &t).unwrap();
        // Beyond r ~ 1e7 the embedding's quadratic form loses the ~1/r
        // angular gaps to cancellation, so the ray stops at 2^23.
        let curve: Vec<UniPoint> = (0..=23)
            .map(|k| {
                let r = 2f64.powi(k) - 1.0;
                let q = ChartPoint::new(x0.coords() + r * &w).unwrap();
                frame.lift(&q, &t).unwrap()
            })
            .collect();
        let end = causal_endpoint(&curve, &t).unwrap().expect("convergent");
        assert!(
            end.angular_gap(&expected) < 1e-6,
            "gap {}",
            end.angular_gap(&expected)
        );
    }

    #[test]
    fn boundary_data_serialization_round_trips() {
        let frame = axis_frame(3);
        let dom = cone_domain(&frame);
        let json = serde_json::to_string(dom.data()).unwrap();
        let back: BoundaryData = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, dom.data());

        // Missing optional fields default; unknown fields are rejected.
        let minimal = serde_json::json!({
            "planes": [],
            "orientation": "Future",
            "frame": serde_json::to_value(&frame).unwrap(),
        });
        let parsed: BoundaryData = serde_json::from_value(minimal).unwrap();
        assert!(parsed.cones.is_empty() && !parsed.truncated_unbounded);
        let bad = serde_json::json!({
            "planes": [],
            "orientation": "Future",
            "frame": serde_json::to_value(&frame).unwrap(),
            "extra": 1,
        });
        assert!(serde_json::from_value::<BoundaryData>(bad).is_err());
    }
}
