//! Scene-driven front end: every subcommand reads a JSON scene, runs one
//! experiment from the core library, prints a one-line verdict, and writes
//! a `report.json` that embeds the resolved scene, tool version, and
//! tolerances so a run can be reproduced byte for byte.
//!
//! Exit codes: 0 success, 2 malformed scene or unreadable file, 3 violated
//! precondition, 4 a property check that the run itself failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use einkit::causality::TimeDirection;
use einkit::charts::{frame_for, ChartFrame, ChartPoint, NullHyperplaneCoords};
use einkit::diamonds::{
    classify_diamond, contains_complete_photon, counterexample_scene, find_conjugate_pair,
    CounterexampleScene, Diamond, DiamondKind,
};
use einkit::domains::{is_regular, BoundaryData, Membership, RegularDomain};
use einkit::models::UniPoint;
use einkit::Tolerance;

#[derive(Parser)]
#[command(name = "einkit", version, about = "Causal geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a boosted diamond intersection and report its components.
    Counterexample(CommonArgs),
    /// Classify the diamond between two cover points.
    Classify(CommonArgs),
    /// Regular-domain queries against a null-hyperplane family.
    Domain {
        #[command(subcommand)]
        sub: DomainCmd,
    },
    /// Affine-chart numerics.
    Chart {
        #[command(subcommand)]
        sub: ChartCmd,
    },
}

#[derive(Subcommand)]
enum DomainCmd {
    /// Ternary membership of a probe point.
    Member(CommonArgs),
    /// Regularity (bounded heights) with the witness bound.
    Regular(CommonArgs),
    /// Audit the past development reconstructed from photon exits.
    Reconstruct(CommonArgs),
    /// Search for a flat-face witness chord.
    Convexity(CommonArgs),
}

#[derive(Subcommand)]
enum ChartCmd {
    /// Finite-difference conformality defect of the chart embedding.
    Conformality(CommonArgs),
    /// Photon endpoint closed form against a far ray sample.
    Endpoint(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON scene file; commands with full defaults may omit it.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Overrides the scene's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Equality tolerance tau; the classification band scales with it.
    #[arg(long)]
    tol: Option<f64>,
    /// Prefix for output files (report.json and friends).
    #[arg(long, default_value = "")]
    out: String,
    /// Cross-check against the brute-force oracles where available.
    #[arg(long)]
    oracle: bool,
}

/// Failure modes mapped to exit codes.
enum Failure {
    Schema(String),
    Precondition(String),
    Property(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Precondition(_) => 3,
            Failure::Property(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Schema(m) | Failure::Precondition(m) | Failure::Property(m) => m,
        }
    }
}

impl From<einkit::Error> for Failure {
    fn from(e: einkit::Error) -> Self {
        Failure::Precondition(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Domain { sub } => match sub {
            DomainCmd::Member(a) => cmd_member(a),
            DomainCmd::Regular(a) => cmd_regular(a),
            DomainCmd::Reconstruct(a) => cmd_reconstruct(a),
            DomainCmd::Convexity(a) => cmd_convexity(a),
        },
        Command::Chart { sub } => match sub {
            ChartCmd::Conformality(a) => cmd_conformality(a),
            ChartCmd::Endpoint(a) => cmd_endpoint(a),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

// ---------------------------------------------------------------------------
// plumbing

fn tolerance(args: &CommonArgs) -> Result<Tolerance, Failure> {
    match args.tol {
        Some(t) => Tolerance::with_tau(t).map_err(Failure::from),
        None => Ok(Tolerance::default()),
    }
}

fn read_scene<T: serde::de::DeserializeOwned>(args: &CommonArgs) -> Result<T, Failure> {
    let path = args
        .scene
        .as_ref()
        .ok_or_else(|| Failure::Schema("this command requires --scene <file>".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Schema(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("invalid scene: {e}")))
}

/// Scene for commands whose schema has a full set of defaults.
fn read_scene_or_default<T: serde::de::DeserializeOwned + Default>(
    args: &CommonArgs,
) -> Result<T, Failure> {
    match &args.scene {
        Some(_) => read_scene(args),
        None => Ok(T::default()),
    }
}

/// Reproducibility envelope written around every command result.
#[derive(Serialize)]
struct Envelope<S: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    tolerances: Tolerance,
    scene: S,
    result: R,
}

fn write_report<S: Serialize, R: Serialize>(
    args: &CommonArgs,
    tol: &Tolerance,
    scene: &S,
    result: &R,
) -> Result<(), Failure> {
    let envelope = Envelope {
        tool: "einkit",
        version: env!("CARGO_PKG_VERSION"),
        tolerances: *tol,
        scene,
        result,
    };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Failure::Schema(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    let path = format!("{}report.json", args.out);
    std::fs::write(&path, text).map_err(|e| Failure::Schema(format!("cannot write {path}: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointSpec {
    x: Vec<f64>,
    t: f64,
}

impl PointSpec {
    fn to_cover(&self, tol: &Tolerance) -> Result<UniPoint, Failure> {
        UniPoint::new(DVector::from_vec(self.x.clone()), self.t, tol).map_err(Failure::from)
    }
}

/// Null-hyperplane family file: plane list plus regularity orientation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LambdaSpec {
    planes: Vec<PlaneSpec>,
    orientation: TimeDirection,
    #[serde(default)]
    truncated_unbounded: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaneSpec {
    v: Vec<f64>,
    s: f64,
}

impl LambdaSpec {
    fn to_data(&self, tol: &Tolerance) -> Result<(BoundaryData, ChartFrame), Failure> {
        let n = self
            .planes
            .first()
            .map(|p| p.v.len())
            .ok_or_else(|| Failure::Schema("the plane family is empty".into()))?;
        if n < 3 {
            return Err(Failure::Schema(format!(
                "plane coordinates need at least 3 components, got {n}"
            )));
        }
        let frame = frame_for(&UniPoint::axis(n, 0, 0.0));
        let planes = self
            .planes
            .iter()
            .map(|p| NullHyperplaneCoords::new(DVector::from_vec(p.v.clone()), p.s, tol))
            .collect::<Result<Vec<_>, _>>()
            .map_err(Failure::from)?;
        let data = BoundaryData {
            planes,
            cones: Vec::new(),
            orientation: self.orientation,
            truncated_unbounded: self.truncated_unbounded,
            frame: frame.clone(),
        };
        data.validate(tol).map_err(Failure::from)?;
        Ok((data, frame))
    }
}

fn chart_point(coords: &[f64]) -> Result<ChartPoint, Failure> {
    ChartPoint::from_slice(coords).map_err(Failure::from)
}

// ---------------------------------------------------------------------------
// counterexample

fn cmd_counterexample(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let mut scene: CounterexampleScene = read_scene_or_default(args)?;
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    let run = counterexample_scene(&scene).map_err(Failure::from)?;

    let mut csv = String::new();
    for i in 1..=scene.n {
        csv.push_str(&format!("x{i},"));
    }
    csv.push_str("label\n");
    for (point, label) in run.cloud.iter().zip(&run.labels) {
        for c in point {
            csv.push_str(&format!("{c},"));
        }
        csv.push_str(&format!("{label}\n"));
    }
    let cloud_path = format!("{}cloud.csv", args.out);
    std::fs::write(&cloud_path, csv)
        .map_err(|e| Failure::Schema(format!("cannot write {cloud_path}: {e}")))?;

    let mut slices = serde_json::to_string_pretty(&run.report.slices)
        .map_err(|e| Failure::Schema(format!("cannot serialize slices: {e}")))?;
    slices.push('\n');
    let slices_path = format!("{}slices.json", args.out);
    std::fs::write(&slices_path, slices)
        .map_err(|e| Failure::Schema(format!("cannot write {slices_path}: {e}")))?;

    write_report(args, &tol, &scene, &run.report)?;
    println!(
        "components: {} (kept {} of {} samples)",
        run.report.components, run.report.kept_samples, scene.samples
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// classify

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyScene {
    p: PointSpec,
    q: PointSpec,
}

#[derive(Serialize)]
struct ClassifyResult {
    kind: DiamondKind,
    time_span: f64,
    foot_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCrossCheck>,
}

#[derive(Serialize)]
struct OracleCrossCheck {
    grid_density: usize,
    conjugate_pair_found: bool,
    complete_photon_found: bool,
    consistent: bool,
}

fn cmd_classify(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let scene: ClassifyScene = read_scene(args)?;
    let past = scene.q.to_cover(&tol)?;
    let future = scene.p.to_cover(&tol)?;
    // The scene names the future vertex p and the past vertex q; accept
    // either order by swapping when needed.
    let diamond = match Diamond::new(past.clone(), future.clone(), &tol) {
        Ok(d) => d,
        Err(_) => Diamond::new(future, past, &tol).map_err(Failure::from)?,
    };
    let kind = classify_diamond(&diamond, &tol);

    let oracle = if args.oracle {
        let density = 64;
        let pair = find_conjugate_pair(&diamond, density, &tol).is_some();
        let photon = contains_complete_photon(&diamond, density, &tol).is_some();
        let consistent = match kind {
            DiamondKind::ConjugateCylinder => pair,
            DiamondKind::NullHalfSpace | DiamondKind::AffineChart => photon && !pair,
            DiamondKind::MinkowskiLike | DiamondKind::EmptyInterior => !photon && !pair,
        };
        Some(OracleCrossCheck {
            grid_density: density,
            conjugate_pair_found: pair,
            complete_photon_found: photon,
            consistent,
        })
    } else {
        None
    };

    let failed = oracle.as_ref().is_some_and(|o| !o.consistent);
    let result = ClassifyResult {
        kind,
        time_span: diamond.time_span(),
        foot_distance: diamond.foot_distance(),
        oracle,
    };
    write_report(args, &tol, &scene, &result)?;
    println!("{kind:?}");
    if failed {
        return Err(Failure::Property(
            "classification disagrees with the oracles".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// domain

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberScene {
    lambda: LambdaSpec,
    probe: Vec<f64>,
}

#[derive(Serialize)]
struct MemberResult {
    verdict: Membership,
    min_margin: f64,
}

fn cmd_member(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let scene: MemberScene = read_scene(args)?;
    let (data, _) = scene.lambda.to_data(&tol)?;
    let domain = RegularDomain::new(data, &tol).map_err(Failure::from)?;
    let probe = chart_point(&scene.probe)?;
    let verdict = domain.member(&probe, &tol);
    let min_margin = domain
        .margins(&probe)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    write_report(args, &tol, &scene, &MemberResult { verdict, min_margin })?;
    println!("{verdict:?}");
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegularScene {
    lambda: LambdaSpec,
}

#[derive(Serialize)]
struct RegularResult {
    regular: bool,
    witness_bound: Option<f64>,
}

fn cmd_regular(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let scene: RegularScene = read_scene(args)?;
    let (data, _) = scene.lambda.to_data(&tol)?;
    let (regular, witness_bound) = is_regular(&data);
    write_report(
        args,
        &tol,
        &scene,
        &RegularResult {
            regular,
            witness_bound,
        },
    )?;
    match witness_bound {
        Some(c) if regular => println!("regular, height bound {c}"),
        _ if regular => println!("regular (empty family)"),
        _ => println!("not regular"),
    }
    if !regular {
        return Err(Failure::Property("the height family is unbounded".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReconstructScene {
    lambda: LambdaSpec,
    base: Vec<f64>,
    #[serde(default = "default_probes")]
    probes: usize,
    #[serde(default)]
    seed: u64,
}

fn default_probes() -> usize {
    1000
}

fn cmd_reconstruct(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let mut scene: ReconstructScene = read_scene(args)?;
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    let (data, _) = scene.lambda.to_data(&tol)?;
    let domain = RegularDomain::new(data, &tol).map_err(Failure::from)?;
    let base = chart_point(&scene.base)?;
    let report = domain
        .pip_reconstruction_check(&base, scene.probes, scene.seed, &tol)
        .map_err(Failure::from)?;
    write_report(args, &tol, &scene, &report)?;
    println!(
        "mismatches: {} (compared {}, skipped {})",
        report.mismatches, report.compared, report.skipped_band
    );
    if report.mismatches > 0 {
        return Err(Failure::Property(format!(
            "{} reconstruction mismatches",
            report.mismatches
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvexityScene {
    lambda: LambdaSpec,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
}

fn default_trials() -> usize {
    10_000
}

#[derive(Serialize)]
struct ConvexityResult {
    witness: Option<(Vec<f64>, Vec<f64>)>,
    trials: usize,
}

fn cmd_convexity(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let mut scene: ConvexityScene = read_scene(args)?;
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    let (data, _) = scene.lambda.to_data(&tol)?;
    let domain = RegularDomain::new(data, &tol).map_err(Failure::from)?;
    let witness = domain
        .strict_convexity_witness(scene.trials, scene.seed, &tol)
        .map_err(Failure::from)?;
    let result = ConvexityResult {
        witness: witness
            .as_ref()
            .map(|(a, b)| (a.coords().as_slice().to_vec(), b.coords().as_slice().to_vec())),
        trials: scene.trials,
    };
    write_report(args, &tol, &scene, &result)?;
    match &witness {
        Some(_) => println!("witness found: a boundary chord midpoint stays on the boundary"),
        None => println!("no witness in {} trials", scene.trials),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// chart

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConformalityScene {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default = "default_h")]
    h: f64,
    #[serde(default = "default_defect")]
    threshold: f64,
    #[serde(default)]
    seed: u64,
}

fn default_n() -> usize {
    3
}
fn default_points() -> usize {
    100
}
fn default_h() -> f64 {
    1e-5
}
fn default_defect() -> f64 {
    1e-5
}

impl Default for ConformalityScene {
    fn default() -> Self {
        Self {
            n: default_n(),
            points: default_points(),
            h: default_h(),
            threshold: default_defect(),
            seed: 0,
        }
    }
}

#[derive(Serialize)]
struct ConformalityResult {
    max_defect: f64,
    points: usize,
}

fn cmd_conformality(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let mut scene: ConformalityScene = read_scene_or_default(args)?;
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    let frame = frame_for(&UniPoint::axis(scene.n, 0, 0.0));
    // Deterministic low-discrepancy-free probe set: a fixed linear
    // congruential stream keeps the command dependency-light.
    let mut state = scene.seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
    };
    let mut max_defect: f64 = 0.0;
    for _ in 0..scene.points {
        let coords = DVector::from_fn(scene.n, |_, _| next());
        let x = ChartPoint::new(coords).map_err(Failure::from)?;
        let defect = frame
            .conformality_defect(&x, scene.h, &tol)
            .map_err(Failure::from)?;
        max_defect = max_defect.max(defect);
    }
    write_report(
        args,
        &tol,
        &scene,
        &ConformalityResult {
            max_defect,
            points: scene.points,
        },
    )?;
    println!("max conformality defect {max_defect:.3e}");
    if max_defect >= scene.threshold {
        return Err(Failure::Property(format!(
            "conformality defect {max_defect:.3e} exceeds {:.1e}",
            scene.threshold
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndpointScene {
    x0: Vec<f64>,
    w: Vec<f64>,
    #[serde(default = "default_far")]
    far: f64,
    #[serde(default = "default_gap")]
    threshold: f64,
}

fn default_far() -> f64 {
    1e6
}
fn default_gap() -> f64 {
    1e-5
}

#[derive(Serialize)]
struct EndpointResult {
    angular_gap: f64,
    far: f64,
}

fn cmd_endpoint(args: &CommonArgs) -> Result<(), Failure> {
    let tol = tolerance(args)?;
    let scene: EndpointScene = read_scene(args)?;
    let n = scene.x0.len();
    let frame = frame_for(&UniPoint::axis(n, 0, 0.0));
    let x0 = chart_point(&scene.x0)?;
    let w = DVector::from_vec(scene.w.clone());
    let endpoint = frame.photon_endpoint(&x0, &w, &tol).map_err(Failure::from)?;
    let far_point = ChartPoint::new(x0.coords() + scene.far * &w).map_err(Failure::from)?;
    let far_embed = frame.embed(&far_point, &tol).map_err(Failure::from)?;
    let gap = endpoint.angular_gap(&far_embed);
    write_report(
        args,
        &tol,
        &scene,
        &EndpointResult {
            angular_gap: gap,
            far: scene.far,
        },
    )?;
    println!("angular gap {gap:.3e} at ray parameter {:.1e}", scene.far);
    if gap >= scene.threshold {
        return Err(Failure::Property(format!(
            "endpoint gap {gap:.3e} exceeds {:.1e}",
            scene.threshold
        )));
    }
    Ok(())
}
