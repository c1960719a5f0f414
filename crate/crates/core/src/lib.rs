//! Causal geometry of the conformal compactification of Minkowski space and
//! of its universal cover.
//!
//! The ambient model is `R^{2,n}` with the quadratic form
//!
//! ```text
//! q(u, v, x1, ..., xn) = -u^2 - v^2 + x1^2 + ... + xn^2
//! ```
//!
//! Null rays of this form (with sign, i.e. rays rather than lines) form a
//! smooth quadric diffeomorphic to `S^1 x S^{n-1}`; its universal cover is
//! `S^{n-1} x R`, carrying the conformal Lorentzian structure of the round
//! sphere cross time. The crate implements, on top of these two models:
//!
//! * the deck transformations of the covering and conjugate points
//!   ([`models`]),
//! * the causal order of the cover and its photons ([`causality`]),
//! * the taxonomy of causal diamonds, with brute-force oracles, and an
//!   end-to-end counterexample scene showing that pushed-forward diamond
//!   intersections can disconnect ([`diamonds`], [`cloud`]),
//! * stereographic-free affine charts: conformal copies of Minkowski space
//!   cut out by a null direction, with their boundary-at-infinity
//!   coordinates ([`charts`]),
//! * regular domains of a chart described by families of degenerate
//!   hyperplanes, their shadows, and reconstruction of pasts of points
//!   ([`domains`]).
//!
//! Dimension `n >= 2` is a runtime parameter (`n = 3` in most tests, i.e.
//! spacetime dimension three, sphere `S^2`). All randomized routines take
//! explicit 64-bit seeds and are deterministic for a fixed seed.

pub mod causality;
pub mod charts;
pub mod cloud;
pub mod diamonds;
pub mod domains;
pub mod error;
pub mod models;
pub mod tol;

pub use charts::{
    block_form, block_pairing, flat_classify, frame_for, sample_conformal_sphere,
    section_to_point, ChartFrame, ChartPoint, NullHyperplaneCoords, QuadricSlice,
};
pub use causality::{
    classify, diamond_contains, is_complete_segment, photon_through, sphere_distance,
    CausalRelation, CausalTag, PhotonSegment, TimeDirection,
};
pub use diamonds::{
    classify_diamond, contains_complete_photon, counterexample_scene, diamonds_from_sphere,
    find_conjugate_pair, loxodromic, shared_vertex_intersection_check, CounterexampleScene,
    Diamond, DiamondKind, Loxodromic, SharedVertexCheck, SphereDiamonds,
};
pub use domains::{
    causal_endpoint, direction_grid, is_regular, misner, shadow_contains, support, BoundaryData,
    ConeFace, Membership, PipReport, RayExit, RegularDomain, ShadowFunction,
};
pub use error::{Error, Result};
pub use models::{EinPoint, UniPoint};
pub use tol::Tolerance;
