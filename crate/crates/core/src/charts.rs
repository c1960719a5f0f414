//! Flat affine charts on the conformal boundary model.
//!
//! Every cover point `p = (x, t)` determines a null pair in the ambient
//! space `R^{2,n}`,
//!
//! ```text
//! xi_inf  = (cos t, sin t,  x)
//! xi_zero = (cos t, sin t, -x) / 4,      <xi_inf, xi_zero> = -1/2
//! ```
//!
//! and an orthonormal block basis `b_1..b_{n-1}, b_t` spanning the common
//! orthogonal complement (`b_t = (-sin t, cos t, 0)`, timelike, last). The
//! complement of the null cone of `[xi_inf]` on the pairing-negative side
//! is then an affine copy of Minkowski space: coordinates `X` correspond to
//! the null line of
//!
//! ```text
//! iota(X) = xi_zero + sum_i X_i b_i + q(X) xi_inf,
//! q(X) = |X_space|^2 - X_t^2,
//! ```
//!
//! and conversely a point with representative `w`, `<w, xi_inf> < 0`, has
//! coordinates read off the rescaling of `w` to pairing `-1/2`. Photons of
//! the flat chart limit to cone points of `[xi_inf]`; each non-vertex cone
//! point corresponds to the degenerate hyperplane `{X : X_t - X.v = s}` of
//! chart photons ending there, with `v` null, `v_t = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::causality::{classify_parts, CausalRelation};
use crate::error::{Error, Result};
use crate::models::{ambient_form, ambient_pairing, AmbientVec, EinPoint, UniPoint};
use crate::tol::Tolerance;

/// A point of a flat chart: finite coordinates, time component last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    coords: DVector<f64>,
}

impl ChartPoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        if coords.is_empty() {
            return Err(Error::DimensionTooSmall { min: 1, got: 0 });
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            coords: DVector::zeros(dim),
        }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Time coordinate (the last component).
    pub fn time(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    /// Spatial part (all but the last component).
    pub fn spatial(&self) -> DVector<f64> {
        DVector::from(self.coords.rows(0, self.coords.len() - 1))
    }
}

/// Minkowski square of a chart vector: spatial squares minus the time one.
pub fn block_form(w: &DVector<f64>) -> f64 {
    let n = w.len();
    w.rows(0, n - 1).norm_squared() - w[n - 1] * w[n - 1]
}

/// Minkowski pairing of two chart vectors.
pub fn block_pairing(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    a.rows(0, n - 1).dot(&b.rows(0, n - 1)) - a[n - 1] * b[n - 1]
}

/// Orthonormal basis of the Euclidean complement of a unit vector.
///
/// Images of the non-pivot coordinate axes under the Householder
/// reflection swapping `x` with the signed pivot axis; `|v|^2 = 2(1+|x_j|)`
/// is bounded away from zero for every unit `x`, so this is stable.
pub(crate) fn orthonormal_complement(x: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = x.len();
    let j = (0..n)
        .max_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap())
        .unwrap();
    let sign = if x[j] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = x.clone();
    v[j] += sign;
    let v2 = v.norm_squared();
    (0..n)
        .filter(|&i| i != j)
        .map(|i| {
            let mut h = DVector::zeros(n);
            h[i] = 1.0;
            h.axpy(-2.0 * v[i] / v2, &v, 1.0);
            h
        })
        .collect()
}

/// Frame data of the flat chart anchored at a cover point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartFrame {
    xi_inf: AmbientVec,
    xi_zero: AmbientVec,
    block_basis: Vec<AmbientVec>,
    center: UniPoint,
}

/// Builds the chart frame anchored at `p`.
pub fn frame_for(p: &UniPoint) -> ChartFrame {
    let n = p.dim();
    let (s, c) = p.t().sin_cos();
    let lift = |u: f64, v: f64, x: &DVector<f64>, scale: f64| {
        let mut w = DVector::zeros(n + 2);
        w[0] = u * scale;
        w[1] = v * scale;
        for i in 0..n {
            w[2 + i] = x[i] * scale;
        }
        w
    };
    let xi_inf = lift(c, s, p.x(), 1.0);
    let neg_x = -p.x();
    let xi_zero = lift(c, s, &neg_x, 0.25);
    let mut block_basis: Vec<AmbientVec> = orthonormal_complement(p.x())
        .into_iter()
        .map(|b| lift(0.0, 0.0, &b, 1.0))
        .collect();
    let mut tau = DVector::zeros(n + 2);
    tau[0] = -s;
    tau[1] = c;
    block_basis.push(tau);
    ChartFrame {
        xi_inf,
        xi_zero,
        block_basis,
        center: p.clone(),
    }
}

impl ChartFrame {
    /// Chart dimension (spatial directions plus one time direction).
    pub fn dim(&self) -> usize {
        self.block_basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.xi_inf.len()
    }

    pub fn center(&self) -> &UniPoint {
        &self.center
    }

    pub fn xi_inf(&self) -> &AmbientVec {
        &self.xi_inf
    }

    pub fn xi_zero(&self) -> &AmbientVec {
        &self.xi_zero
    }

    pub fn block_basis(&self) -> &[AmbientVec] {
        &self.block_basis
    }

    /// Checks the frame identities; intended for deserialized frames.
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        let n = self.dim();
        if self.ambient_dim() != n + 2 || self.center.dim() + 2 != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: n + 2,
                got: self.ambient_dim(),
            });
        }
        let band = tol.classification_band;
        for xi in [&self.xi_inf, &self.xi_zero] {
            if ambient_form(xi).abs() > band {
                return Err(Error::NotNull {
                    q: ambient_form(xi),
                });
            }
        }
        if (ambient_pairing(&self.xi_inf, &self.xi_zero) + 0.5).abs() > band {
            return Err(Error::Precondition(
                "frame null pair is not normalized to pairing -1/2".into(),
            ));
        }
        for (i, a) in self.block_basis.iter().enumerate() {
            if ambient_pairing(a, &self.xi_inf).abs() > band
                || ambient_pairing(a, &self.xi_zero).abs() > band
            {
                return Err(Error::Precondition(
                    "block basis is not orthogonal to the null pair".into(),
                ));
            }
            for (j, b) in self.block_basis.iter().enumerate() {
                let want = match (i == j, i == n - 1) {
                    (false, _) => 0.0,
                    (true, false) => 1.0,
                    (true, true) => -1.0,
                };
                if (ambient_pairing(a, b) - want).abs() > band {
                    return Err(Error::Precondition(
                        "block basis Gram matrix is not the Minkowski one".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Signed block coordinates of an ambient vector already rescaled to
    /// the chart section (pairing `-1/2` with `xi_inf`).
    fn block_coords(&self, w: &AmbientVec) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(n, |i, _| {
            let raw = ambient_pairing(w, &self.block_basis[i]);
            if i == n - 1 {
                -raw
            } else {
                raw
            }
        })
    }

    /// Ambient null representative of a chart point, on the section
    /// normalized against `xi_inf`.
    fn iota(&self, x: &ChartPoint) -> AmbientVec {
        let mut w = self.xi_zero.clone();
        for (b, &c) in self.block_basis.iter().zip(x.coords().iter()) {
            w.axpy(c, b, 1.0);
        }
        w.axpy(block_form(x.coords()), &self.xi_inf, 1.0);
        w
    }

    /// Boundary point of the chart coordinates `x`.
    pub fn embed(&self, x: &ChartPoint, tol: &Tolerance) -> Result<EinPoint> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        EinPoint::from_ambient(self.iota(x), tol)
    }

    /// Chart coordinates of a boundary point on the pairing-negative side.
    pub fn chart_coords(&self, e: &EinPoint, tol: &Tolerance) -> Result<ChartPoint> {
        if e.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: e.dim(),
            });
        }
        let pairing = ambient_pairing(e.rep(), &self.xi_inf);
        if pairing >= -tol.tau {
            return Err(Error::NotInChart { pairing });
        }
        let w = e.rep() * (-0.5 / pairing);
        ChartPoint::new(self.block_coords(&w))
    }

    /// Cover point of the chart coordinates `x`, on the branch around the
    /// anchor: the lift satisfies `|t - t_center| < d(x_lift, x_center)`.
    pub fn lift(&self, x: &ChartPoint, tol: &Tolerance) -> Result<UniPoint> {
        let e = self.embed(x, tol)?;
        Ok(e.lift_near(self.center.t()))
    }

    /// Ideal endpoint of the flat photon ray `r -> x0 + r w` (`w` null for
    /// the block form): a cone point of the chart vertex.
    pub fn photon_endpoint(
        &self,
        x0: &ChartPoint,
        w: &DVector<f64>,
        tol: &Tolerance,
    ) -> Result<EinPoint> {
        if x0.dim() != self.dim() || w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: if x0.dim() != self.dim() { x0.dim() } else { w.len() },
            });
        }
        if w.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = w.norm_squared();
        if scale <= tol.tau {
            return Err(Error::BadNullDirection {
                detail: "zero chart direction".into(),
            });
        }
        let q = block_form(w);
        if q.abs() > tol.classification_band * scale {
            return Err(Error::NotNull { q });
        }
        let mut amb = DVector::zeros(self.ambient_dim());
        for (b, &c) in self.block_basis.iter().zip(w.iter()) {
            amb.axpy(c, b, 1.0);
        }
        amb.axpy(2.0 * block_pairing(x0.coords(), w), &self.xi_inf, 1.0);
        EinPoint::from_ambient(amb, tol)
    }

    /// Degenerate hyperplane of chart photons ending at the cone point `y`.
    ///
    /// Fails on the vertex `[xi_inf]` itself (every photon hyperplane ends
    /// there) and on points off the cone.
    pub fn boundary_to_hyperplane(
        &self,
        y: &EinPoint,
        tol: &Tolerance,
    ) -> Result<NullHyperplaneCoords> {
        if y.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.dim(),
            });
        }
        let pairing = ambient_pairing(y.rep(), &self.xi_inf);
        if pairing.abs() > tol.tau {
            return Err(Error::Precondition(format!(
                "point is not on the chart cone: pairing {pairing:.3e}"
            )));
        }
        let coords = self.block_coords(y.rep());
        let yt = coords[self.dim() - 1];
        if yt.abs() <= tol.tau {
            return Err(Error::BadNullDirection {
                detail: "cone vertex has no photon hyperplane".into(),
            });
        }
        let mut v = coords / yt;
        v[self.dim() - 1] = 1.0;
        let s = ambient_pairing(y.rep(), &self.xi_zero) / yt;
        NullHyperplaneCoords::new(v, s, tol)
    }

    /// Cone point at which every photon of the hyperplane ends.
    pub fn hyperplane_to_boundary(
        &self,
        h: &NullHyperplaneCoords,
        tol: &Tolerance,
    ) -> Result<EinPoint> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: h.dim(),
            });
        }
        let mut amb = DVector::zeros(self.ambient_dim());
        for (b, &c) in self.block_basis.iter().zip(h.v().iter()) {
            amb.axpy(c, b, 1.0);
        }
        amb.axpy(-2.0 * h.s(), &self.xi_inf, 1.0);
        EinPoint::from_ambient(amb, tol)
    }

    /// Chart trace of the conformal sphere spanned by `basis`.
    ///
    /// The span must carry a nondegenerate Lorentzian form. Spheres through
    /// the chart vertex trace an affine spacelike plane. Spheres avoiding
    /// it trace a sheet of the two-sheeted quadric `q(Z - center) =
    /// -radius^2` when the orthogonal complement of the span inside its
    /// extension by `xi_inf` is timelike; the non-timelike case (a
    /// one-sheeted branch) is reported as an error.
    pub fn sphere_chart_intersection(
        &self,
        basis: &[AmbientVec],
        tol: &Tolerance,
    ) -> Result<QuadricSlice> {
        let m = basis.len();
        if m < 2 || m > self.dim() + 1 {
            return Err(Error::InvalidParameter(format!(
                "sphere span must have 2..={} vectors, got {m}",
                self.dim() + 1
            )));
        }
        let (t_vec, s_vecs) = q_orthonormal_basis(basis, tol)?;
        let xi = &self.xi_inf;
        let mut proj = &t_vec * (-ambient_pairing(xi, &t_vec));
        for s in &s_vecs {
            proj.axpy(ambient_pairing(xi, s), s, 1.0);
        }
        let resid = xi - proj;
        if resid.norm() <= tol.tau * xi.norm() {
            self.vertex_sphere_plane(basis, m, tol)
        } else {
            self.avoiding_sphere_quadric(resid, &t_vec, &s_vecs, tol)
        }
    }

    /// Affine trace of a sphere through the chart vertex: the solution set
    /// of one linear constraint per ambient normal of the span.
    fn vertex_sphere_plane(
        &self,
        basis: &[AmbientVec],
        m: usize,
        tol: &Tolerance,
    ) -> Result<QuadricSlice> {
        let nn = self.ambient_dim();
        let lowered = DMatrix::from_fn(m, nn, |r, c| {
            let sign = if c < 2 { -1.0 } else { 1.0 };
            sign * basis[r][c]
        });
        let normals = nullspace(&lowered, tol.tau);
        let n = self.dim();
        let rows = normals.len();
        let mut cmat = DMatrix::zeros(rows, n);
        let mut rhs = DVector::zeros(rows);
        for (r, nm) in normals.iter().enumerate() {
            for i in 0..n {
                cmat[(r, i)] = ambient_pairing(&self.block_basis[i], nm);
            }
            rhs[r] = -ambient_pairing(&self.xi_zero, nm);
        }
        let svd = cmat.clone().svd(true, true);
        let point = svd
            .solve(&rhs, tol.tau)
            .map_err(|_| Error::RankDeficient)?;
        let gap = (&cmat * &point - &rhs).norm();
        if gap > tol.classification_band * (1.0 + rhs.norm()) {
            return Err(Error::Precondition(
                "sphere trace does not meet the chart".into(),
            ));
        }
        let dirs = nullspace(&cmat, tol.tau);
        let mut ortho: Vec<DVector<f64>> = Vec::new();
        for mut d in dirs {
            for b in &ortho {
                d.axpy(-block_pairing(&d, b), b, 1.0);
            }
            let q = block_form(&d);
            if q <= tol.tau {
                return Err(Error::Precondition(
                    "sphere trace directions are not spacelike".into(),
                ));
            }
            ortho.push(d / q.sqrt());
        }
        debug_assert_eq!(ortho.len(), m.saturating_sub(2));
        Ok(QuadricSlice::SpacelikePlane {
            point: ChartPoint::new(point)?,
            basis: ortho,
        })
    }

    /// Quadric trace of a sphere avoiding the chart vertex. `resid` is the
    /// component of `xi_inf` orthogonal to the span; it satisfies
    /// `<xi_inf, resid> = q(resid)`, so the timelike case pairs negatively
    /// and the center construction never needs a sign choice.
    fn avoiding_sphere_quadric(
        &self,
        resid: AmbientVec,
        t_vec: &AmbientVec,
        s_vecs: &[AmbientVec],
        tol: &Tolerance,
    ) -> Result<QuadricSlice> {
        let qy = ambient_form(&resid);
        if qy >= -tol.tau * resid.norm_squared() {
            return Err(Error::Precondition(
                "complement of the span toward the chart vertex is not timelike; \
                 the sphere traces a one-sheeted branch"
                    .into(),
            ));
        }
        let y0 = &resid / (-qy).sqrt();
        let p0 = ambient_pairing(&self.xi_inf, &y0);
        debug_assert!(p0 < 0.0);
        let c = -1.0 / (2.0 * p0);
        let mut z0_amb = y0;
        z0_amb.axpy(-c, &self.xi_inf, 1.0);
        let center = self.chart_coords(&EinPoint::from_ambient(z0_amb, tol)?, tol)?;
        let sigma: Vec<f64> = s_vecs
            .iter()
            .map(|s| ambient_pairing(s, &self.xi_inf))
            .collect();
        let snorm = sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        if snorm <= tol.tau {
            return Err(Error::Precondition(
                "sphere is tangent to the chart cone".into(),
            ));
        }
        // orient the timelike direction deterministically (toward the
        // frame future, falling back to the chart side) so the reported
        // sheet does not depend on eigenvector sign conventions; flipping
        // a spacelike vector flips its pairing too, so the sample is
        // insensitive to those signs.
        let bt = &self.block_basis[self.dim() - 1];
        let mut t_dir = t_vec.clone();
        let ori = ambient_pairing(&t_dir, bt);
        if ori > tol.tau || (ori.abs() <= tol.tau && ambient_pairing(&t_dir, &self.xi_inf) > 0.0)
        {
            t_dir = -t_dir;
        }
        let mut sample = t_dir;
        for (s, &sg) in s_vecs.iter().zip(&sigma) {
            sample.axpy(-sg / snorm, s, 1.0);
        }
        let probe = self.chart_coords(&EinPoint::from_ambient(sample, tol)?, tol)?;
        Ok(QuadricSlice::HyperboloidSheet {
            sheet_future: probe.time() > center.time(),
            radius: c,
            center,
        })
    }

    /// Worst relative deviation of the pulled-back cover metric from the
    /// flat chart metric at `x`, by central differences with step `h`.
    ///
    /// The lift is coordinatized near its image through the sphere log map
    /// (orthonormal tangent frame) plus the fiber offset; with Jacobian `J`
    /// and `G = diag(1..1,-1)` the defect is
    /// `max_ij |(J^T G J) - W^2 G|_ij / W^2`, `W^2 = -(J^T G J)_tt`.
    pub fn conformality_defect(&self, x: &ChartPoint, h: f64, tol: &Tolerance) -> Result<f64> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        let n = self.dim();
        let base = self.lift(x, tol)?;
        let sph = orthonormal_complement(base.x());
        let log = |p: &UniPoint| -> DVector<f64> {
            let cosg = base.x().dot(p.x()).clamp(-1.0, 1.0);
            let th = cosg.acos();
            let scale = if th < 1e-7 { 1.0 } else { th / th.sin() };
            let rad = (p.x() - base.x() * cosg) * scale;
            DVector::from_fn(n, |i, _| {
                if i == n - 1 {
                    p.t() - base.t()
                } else {
                    sph[i].dot(&rad)
                }
            })
        };
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut up = x.coords().clone();
            up[j] += h;
            let mut dn = x.coords().clone();
            dn[j] -= h;
            let lp = self.lift(&ChartPoint::new(up)?, tol)?;
            let lm = self.lift(&ChartPoint::new(dn)?, tol)?;
            jac.set_column(j, &((log(&lp) - log(&lm)) / (2.0 * h)));
        }
        let g = DMatrix::from_fn(n, n, |i, j| match (i == j, i == n - 1) {
            (true, false) => 1.0,
            (true, true) => -1.0,
            _ => 0.0,
        });
        let m = jac.transpose() * &g * &jac;
        let w2 = -m[(n - 1, n - 1)];
        if !(w2.is_finite() && w2 > 0.0) {
            return Err(Error::Precondition(
                "degenerate metric pullback".into(),
            ));
        }
        let defect = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (m[(i, j)] - w2 * g[(i, j)]).abs())
            .fold(0.0_f64, f64::max);
        Ok(defect / w2)
    }

    /// Conformal scale factor squared of the lift at `x` (time direction).
    pub fn conformal_factor_sq(&self, x: &ChartPoint, h: f64, tol: &Tolerance) -> Result<f64> {
        let n = self.dim();
        let mut up = x.coords().clone();
        up[n - 1] += h;
        let mut dn = x.coords().clone();
        dn[n - 1] -= h;
        let tp = self.lift(&ChartPoint::new(up)?, tol)?.t();
        let tm = self.lift(&ChartPoint::new(dn)?, tol)?.t();
        let rate = (tp - tm) / (2.0 * h);
        Ok(rate * rate)
    }
}

/// A degenerate hyperplane `{X : X_t - X_space . v_space = s}` of a chart,
/// keyed by a future null direction `v` normalized to `v_t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullHyperplaneCoords {
    v: DVector<f64>,
    s: f64,
}

impl NullHyperplaneCoords {
    pub fn new(v: DVector<f64>, s: f64, tol: &Tolerance) -> Result<Self> {
        let out = Self { v, s };
        out.validate(tol)?;
        Ok(out)
    }

    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        if self.v.iter().any(|c| !c.is_finite()) || !self.s.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.v.len() < 2 {
            return Err(Error::DimensionTooSmall {
                min: 2,
                got: self.v.len(),
            });
        }
        let band = tol.classification_band;
        if (self.v[self.v.len() - 1] - 1.0).abs() > band {
            return Err(Error::BadNullDirection {
                detail: "direction must have unit time component".into(),
            });
        }
        let q = block_form(&self.v);
        if q.abs() > band {
            return Err(Error::NotNull { q });
        }
        Ok(())
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Signed height of `x` over the plane: positive in the flat future.
    pub fn height(&self, x: &ChartPoint) -> f64 {
        -block_pairing(x.coords(), &self.v) - self.s
    }
}

/// Recovers the chart point whose photon cone sweeps out the given family
/// of hyperplanes, if one fits.
///
/// Each sample imposes `s_j = q_t - q_space . v_j`; the family must
/// constrain all coordinates (else [`Error::RankDeficient`]). Returns
/// `Ok(None)` when the best fit misses some sample by more than the band.
pub fn section_to_point(
    samples: &[NullHyperplaneCoords],
    tol: &Tolerance,
) -> Result<Option<ChartPoint>> {
    let first = samples
        .first()
        .ok_or(Error::DimensionTooSmall { min: 1, got: 0 })?;
    let n = first.dim();
    if let Some(bad) = samples.iter().find(|s| s.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        });
    }
    let mut normal = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for h in samples {
        let mut gv = h.v().clone();
        gv[n - 1] = -gv[n - 1];
        normal.ger(1.0, &gv, &gv, 1.0);
        rhs.axpy(-h.s(), &gv, 1.0);
    }
    let eig = normal.symmetric_eigen();
    let lmax = eig.eigenvalues.amax();
    if eig.eigenvalues.iter().any(|&l| l <= tol.tau * lmax.max(1.0)) {
        return Err(Error::RankDeficient);
    }
    let mut q = DVector::zeros(n);
    for k in 0..n {
        let col = eig.eigenvectors.column(k);
        q.axpy(col.dot(&rhs) / eig.eigenvalues[k], &col.clone_owned(), 1.0);
    }
    let point = ChartPoint::new(q)?;
    let worst = samples
        .iter()
        .map(|h| h.height(&point).abs())
        .fold(0.0_f64, f64::max);
    if worst > tol.classification_band {
        return Ok(None);
    }
    Ok(Some(point))
}

/// Chart trace of a conformal sphere.
#[derive(Debug, Clone)]
pub enum QuadricSlice {
    /// Affine spacelike plane: a base point and an orthonormal (block
    /// metric) direction basis; empty basis means a single point.
    SpacelikePlane {
        point: ChartPoint,
        basis: Vec<DVector<f64>>,
    },
    /// Sheet of the two-sheeted quadric `q(Z - center) = -radius^2`; the
    /// flag tells which sheet the sphere component dipping into this chart
    /// traces (its antipodal component traces the mirror sheet).
    HyperboloidSheet {
        center: ChartPoint,
        radius: f64,
        sheet_future: bool,
    },
}

/// Orthonormalizes a sphere span against the ambient form: one unit
/// timelike vector plus unit spacelike vectors, via the spectral
/// decomposition of the Gram matrix. Errors unless the induced form is
/// nondegenerate Lorentzian.
pub(crate) fn q_orthonormal_basis(
    basis: &[AmbientVec],
    tol: &Tolerance,
) -> Result<(AmbientVec, Vec<AmbientVec>)> {
    let m = basis.len();
    if m < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: m });
    }
    let nn = basis[0].len();
    if let Some(bad) = basis.iter().find(|b| b.len() != nn) {
        return Err(Error::DimensionMismatch {
            expected: nn,
            got: bad.len(),
        });
    }
    if basis.iter().flat_map(|b| b.iter()).any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    let gram = DMatrix::from_fn(m, m, |i, j| ambient_pairing(&basis[i], &basis[j]));
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let thresh = tol.tau * scale.max(f64::MIN_POSITIVE);
    let mut t_vec: Option<AmbientVec> = None;
    let mut s_vecs = Vec::new();
    for k in 0..m {
        let l = eig.eigenvalues[k];
        if l.abs() <= thresh {
            return Err(Error::BadSignature {
                expected_positive: m - 1,
                detail: "degenerate sphere span".into(),
            });
        }
        let mut v = DVector::zeros(nn);
        for (j, b) in basis.iter().enumerate() {
            v.axpy(eig.eigenvectors[(j, k)], b, 1.0);
        }
        v /= l.abs().sqrt();
        if l < 0.0 {
            if t_vec.replace(v).is_some() {
                return Err(Error::BadSignature {
                    expected_positive: m - 1,
                    detail: "more than one timelike direction in the sphere span".into(),
                });
            }
        } else {
            s_vecs.push(v);
        }
    }
    match t_vec {
        Some(t) => Ok((t, s_vecs)),
        None => Err(Error::BadSignature {
            expected_positive: m - 1,
            detail: "no timelike direction in the sphere span".into(),
        }),
    }
}

/// Deterministic boundary samples of the conformal sphere spanned by a
/// Lorentzian basis, from both time orientations of its null directions.
/// A (1,1) span yields its four null rays; otherwise `2 * count` points on
/// the great circle through the first two spacelike axes.
pub fn sample_conformal_sphere(
    basis: &[AmbientVec],
    count: usize,
    tol: &Tolerance,
) -> Result<Vec<EinPoint>> {
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let (t, s) = q_orthonormal_basis(basis, tol)?;
    let mut out = Vec::new();
    if s.len() == 1 {
        for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            out.push(EinPoint::from_ambient(&t * a + &s[0] * b, tol)?);
        }
    } else {
        for j in 0..count {
            let th = std::f64::consts::TAU * (j as f64) / (count as f64);
            let dir = &s[0] * th.cos() + &s[1] * th.sin();
            out.push(EinPoint::from_ambient(&t + &dir, tol)?);
            out.push(EinPoint::from_ambient(-&t - &dir, tol)?);
        }
    }
    Ok(out)
}

/// Causal relation of two chart points in the flat block metric, with the
/// same coincidence and boundary banding as the cover classification.
pub fn flat_classify(a: &ChartPoint, b: &ChartPoint, tol: &Tolerance) -> CausalRelation {
    debug_assert_eq!(a.dim(), b.dim());
    let n = a.dim();
    let delta = b.coords() - a.coords();
    let d = delta.rows(0, n - 1).norm();
    classify_parts(d, delta[n - 1], tol)
}

/// Euclidean nullspace basis of a rectangular matrix via its SVD, with a
/// relative threshold.
fn nullspace(mat: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let cols = mat.ncols();
    let svd = mat.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.amax();
    let thresh = rel_tol * smax.max(1.0);
    let mut out = Vec::new();
    for k in 0..v_t.nrows() {
        if svd.singular_values[k] <= thresh {
            out.push(v_t.row(k).transpose());
        }
    }
    // rows of v_t beyond the singular value count (wide case) are genuine
    // nullspace directions too; nalgebra returns the full V^T only up to
    // min(nrows, ncols), so complete the basis by orthogonal rejection.
    if out.len() + rank_of(&svd.singular_values, thresh) < cols {
        let basis: Vec<DVector<f64>> = (0..v_t.nrows())
            .map(|k| v_t.row(k).transpose())
            .collect();
        let mut extra = Vec::new();
        for i in 0..cols {
            let mut e = DVector::zeros(cols);
            e[i] = 1.0;
            for b in basis.iter().chain(extra.iter()) {
                let c = e.dot(b);
                e.axpy(-c, b, 1.0);
            }
            if e.norm() > 1e-8 {
                e /= e.norm();
                extra.push(e);
            }
        }
        out.extend(extra);
    }
    out
}

fn rank_of(sv: &DVector<f64>, thresh: f64) -> usize {
    sv.iter().filter(|&&s| s > thresh).count()
}
