//! Stage parameters and computations shared by the subcommands and the
//! pipeline runner. Each stage returns its results plus the artifacts it
//! would write, so both entry points produce identical bytes.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use geodesica::convergence::{
    audit_sandwich, bound_context, check_delta_sampling, AuditMode, CoveringReport, SandwichAudit,
};
use geodesica::frechet::{embedded_frechet_mean, sample_frechet_mean};
use geodesica::geograph::{
    build_graph, connectivity_report, shortest_paths, EdgeWeights, GraphMetric, MetricKind, NeighborhoodGraph,
    NeighborhoodRule,
};
use geodesica::manifolds::ManifoldOracle;
use geodesica::mds::{cmds_with_spectrum, smacof, SpectrumReport, StressParams, StressWeights};
use geodesica::projections::{
    equirectangular, lambert_azimuthal, load_coastline_csv, mds_map, synthetic_hemisphere_grid, transverse_mercator,
    GeoPointSet,
};
use geodesica::{io, Configuration, DissimilarityMatrix, PointCloud, Seed};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::run::Artifact;
use crate::svg::emit_svg_scatter;

pub const POINTS: &str = "points.csv";
pub const MANIFOLD: &str = "manifold.json";
pub const GEODESICS: &str = "geodesics.csv";
pub const GRAPH: &str = "graph.json";
pub const CONNECTIVITY: &str = "connectivity.json";
pub const DISTANCES: &str = "distances.csv";
pub const KEPT: &str = "kept.json";
pub const CONFIGURATION: &str = "configuration.csv";
pub const SPECTRUM: &str = "spectrum.json";
pub const TRACE: &str = "trace.json";
pub const AUDIT: &str = "audit.json";
pub const BOUNDS: &str = "bounds.json";
pub const FRECHET: &str = "frechet.json";
pub const PROJECTION: &str = "projection.csv";
pub const PROJECTION_REPORT: &str = "projection.json";
pub const PLOT: &str = "plot.svg";

mod defaults {
    pub fn dim() -> usize {
        2
    }
    pub fn iterations() -> usize {
        20
    }
    pub fn rel_tol() -> f64 {
        1e-6
    }
    pub fn lambda() -> f64 {
        0.1
    }
    pub fn probes() -> usize {
        2000
    }
    pub fn grid_lat() -> usize {
        19
    }
    pub fn grid_lon() -> usize {
        37
    }
    pub fn central_meridian_deg() -> f64 {
        -90.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// I.i.d. uniform draws.
    #[default]
    Random,
    /// Equal arc-length spacing (closed curves).
    EquallySpaced,
    /// Fibonacci lattice (sphere caps).
    Fibonacci,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct GenerateParams {
    /// Number of points.
    #[arg(short, long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub sampling: Sampling,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct GeodesicsParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct GraphParams {
    /// Connect pairs at Euclidean distance <= EPSILON.
    #[arg(long, required_unless_present = "knn", conflicts_with = "knn")]
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Connect each point to its K nearest neighbors (symmetrized).
    #[arg(long)]
    #[serde(default)]
    pub knn: Option<usize>,
}

impl GraphParams {
    pub fn rule(&self) -> CliResult<NeighborhoodRule> {
        match (self.epsilon, self.knn) {
            (Some(e), None) => Ok(NeighborhoodRule::Epsilon(e)),
            (None, Some(k)) => Ok(NeighborhoodRule::Knn(k)),
            _ => Err(CliError::Config("a graph needs exactly one of `epsilon` and `knn`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// Euclidean edge lengths.
    #[default]
    Euclidean,
    /// Riemannian edge lengths from the manifold.
    Oracle,
}

impl From<WeightKind> for MetricKind {
    fn from(w: WeightKind) -> Self {
        match w {
            WeightKind::Euclidean => MetricKind::Euclidean,
            WeightKind::Oracle => MetricKind::Oracle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ShortestPathParams {
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub weights: WeightKind,
    /// Keep only the largest component instead of failing on a disconnected
    /// graph.
    #[arg(long)]
    #[serde(default)]
    pub largest_component: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaSource {
    /// Graph shortest-path distances.
    #[default]
    ShortestPaths,
    /// Exact Riemannian distances.
    Geodesics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedMethod {
    /// Classical MDS.
    #[default]
    Cmds,
    /// Classical MDS followed by Guttman iterations.
    Smacof,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct EmbedParams {
    #[arg(skip)]
    #[serde(default)]
    pub input: DeltaSource,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub method: EmbedMethod,
    #[arg(long, default_value_t = defaults::dim())]
    #[serde(default = "defaults::dim")]
    pub dim: usize,
    /// Maximum Guttman iterations.
    #[arg(long, default_value_t = defaults::iterations())]
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    /// Stop once the relative stress decrease falls below this.
    #[arg(long, default_value_t = defaults::rel_tol())]
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct AuditParams {
    #[arg(long, default_value_t = defaults::lambda())]
    #[serde(default = "defaults::lambda")]
    pub lambda: f64,
    /// Sampling density to check; defaults to lambda * epsilon / 4.
    #[arg(long)]
    #[serde(default)]
    pub delta: Option<f64>,
    /// Random pairs used to estimate the branch separation when it has no
    /// closed form.
    #[arg(long, default_value_t = defaults::probes())]
    #[serde(default = "defaults::probes")]
    pub s0_probes: usize,
    /// Random manifold points used to check the sampling density.
    #[arg(long, default_value_t = defaults::probes())]
    #[serde(default = "defaults::probes")]
    pub covering_probes: usize,
    /// Fail unless the run is certified.
    #[arg(long)]
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct FrechetParams {
    #[arg(skip)]
    #[serde(default)]
    pub input: DeltaSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMethod {
    Equirectangular,
    TransverseMercator,
    Lambert,
    /// Classical MDS plus Guttman iterations on great-circle distances.
    Mds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ProjectParams {
    #[arg(long, value_enum)]
    pub method: ProjectionMethod,
    /// `lat_deg,lon_deg` CSV; a synthetic hemisphere grid when absent.
    #[arg(long)]
    #[serde(default)]
    pub coastline: Option<PathBuf>,
    #[arg(long, default_value_t = defaults::grid_lat())]
    #[serde(default = "defaults::grid_lat")]
    pub grid_lat: usize,
    #[arg(long, default_value_t = defaults::grid_lon())]
    #[serde(default = "defaults::grid_lon")]
    pub grid_lon: usize,
    /// Keep only longitudes in [-180, 0].
    #[arg(long)]
    #[serde(default)]
    pub western_only: bool,
    #[arg(long, default_value_t = defaults::central_meridian_deg(), allow_negative_numbers = true)]
    #[serde(default = "defaults::central_meridian_deg")]
    pub central_meridian_deg: f64,
    #[arg(long, default_value_t = defaults::iterations())]
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[arg(long, default_value_t = defaults::rel_tol())]
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PlotSource {
    #[default]
    Embedding,
    Projection,
    Points,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct PlotParams {
    #[arg(skip)]
    #[serde(default)]
    pub source: PlotSource,
}

pub fn warn(message: &str) {
    eprintln!("{}", json!({ "warning": { "message": message } }));
}

pub fn generate(oracle: &ManifoldOracle, p: &GenerateParams, seed: u64) -> CliResult<(PointCloud, Vec<Artifact>)> {
    let cloud = match p.sampling {
        Sampling::Random => oracle.sample(p.n, Seed(seed))?,
        Sampling::EquallySpaced => oracle.equally_spaced(p.n)?,
        Sampling::Fibonacci => match oracle {
            ManifoldOracle::SpherePatch(cap) => cap.fibonacci_lattice(p.n)?,
            _ => return Err(geodesica::Error::Unsupported("Fibonacci sampling is defined for sphere caps only").into()),
        },
    };
    let artifacts =
        vec![Artifact::csv(POINTS, |w| io::write_point_cloud(w, &cloud))?, Artifact::json(MANIFOLD, oracle)?];
    Ok((cloud, artifacts))
}

pub fn geodesics(oracle: &ManifoldOracle, cloud: &PointCloud) -> CliResult<(DissimilarityMatrix, Vec<Artifact>)> {
    let delta = oracle.distance_matrix(cloud)?;
    let artifact = Artifact::csv(GEODESICS, |w| io::write_dissimilarity(w, &delta))?;
    Ok((delta, vec![artifact]))
}

pub fn graph(cloud: &PointCloud, p: &GraphParams) -> CliResult<(NeighborhoodGraph, Vec<Artifact>)> {
    let g = build_graph(cloud, p.rule()?)?;
    let report = connectivity_report(&g, cloud)?;
    let artifacts = vec![Artifact::json(GRAPH, &g)?, Artifact::json(CONNECTIVITY, &report)?];
    Ok((g, artifacts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeptReport {
    pub original_n: usize,
    pub n_components: usize,
    /// Original indices of the retained vertices, ascending.
    pub kept: Vec<usize>,
}

pub struct ShortestPathOutput {
    pub metric: GraphMetric,
    pub kept: Option<KeptReport>,
    pub artifacts: Vec<Artifact>,
}

pub fn shortest(
    g: &NeighborhoodGraph,
    cloud: &PointCloud,
    oracle: Option<&ManifoldOracle>,
    p: &ShortestPathParams,
) -> CliResult<ShortestPathOutput> {
    let weights = match (p.weights, oracle) {
        (WeightKind::Euclidean, _) => EdgeWeights::Euclidean,
        (WeightKind::Oracle, Some(m)) => EdgeWeights::Oracle(m),
        (WeightKind::Oracle, None) => return Err(CliError::Usage("oracle weights need a manifold".into())),
    };
    let full = shortest_paths(g, cloud, weights)?;
    let mut artifacts = Vec::new();
    let (metric, kept) = if full.is_connected() {
        (full, None)
    } else if p.largest_component {
        let keep = full.largest_component();
        let report = KeptReport { original_n: full.len(), n_components: full.n_components(), kept: keep };
        warn(&format!(
            "graph has {} components; keeping the largest ({} of {} points)",
            report.n_components,
            report.kept.len(),
            report.original_n
        ));
        (full.restrict(&report.kept), Some(report))
    } else {
        let report = connectivity_report(g, cloud)?;
        return Err(CliError::Disconnected(format!(
            "graph has {} components (sizes {:?}); pass --largest-component or use epsilon >= {}",
            report.n_components, report.component_sizes, report.min_connecting_epsilon
        )));
    };
    artifacts.push(Artifact::csv(DISTANCES, |w| io::write_matrix(w, metric.matrix.view()))?);
    if let Some(k) = &kept {
        artifacts.push(Artifact::json(KEPT, k)?);
    }
    Ok(ShortestPathOutput { metric, kept, artifacts })
}

/// Refuses infinite entries with a hint instead of a bare validation error.
pub fn finite_delta(m: Array2<f64>, origin: &str) -> CliResult<DissimilarityMatrix> {
    if m.iter().any(|v| v.is_infinite()) {
        return Err(CliError::Disconnected(format!(
            "{origin} contains infinite distances; recompute shortest paths with --largest-component"
        )));
    }
    Ok(DissimilarityMatrix::new(m)?)
}

#[derive(Debug, Serialize)]
struct SpectrumJson<'a> {
    #[serde(flatten)]
    spectrum: &'a SpectrumReport,
    dim: usize,
    /// Share of the positive variation in the top `dim` eigenvalues.
    top_fraction: f64,
    /// The same share of positive plus negative variation.
    top_fraction_of_total: f64,
}

#[derive(Debug, Serialize)]
struct TraceJson<'a> {
    initial_stress: f64,
    final_stress: f64,
    iterations: usize,
    converged: bool,
    trace: &'a [f64],
}

pub fn embed(delta: &DissimilarityMatrix, p: &EmbedParams) -> CliResult<(Configuration, Vec<Artifact>)> {
    let (init, gram) = cmds_with_spectrum(delta, p.dim)?;
    let spectrum = gram.spectrum();
    let mut artifacts = Vec::new();
    let config = match p.method {
        EmbedMethod::Cmds => init,
        EmbedMethod::Smacof => {
            let params = StressParams { weights: StressWeights::Unit, max_iters: p.iterations, rel_tol: p.rel_tol };
            let res = smacof(delta, &init, &params)?;
            artifacts.push(Artifact::json(
                TRACE,
                &TraceJson {
                    initial_stress: res.initial_stress(),
                    final_stress: res.final_stress(),
                    iterations: res.iterations,
                    converged: res.converged,
                    trace: &res.trace,
                },
            )?);
            res.config
        }
    };
    let spectrum_json = SpectrumJson {
        spectrum: &spectrum,
        dim: p.dim,
        top_fraction: spectrum.top_fraction(p.dim),
        top_fraction_of_total: spectrum.top_fraction_of_total(p.dim),
    };
    artifacts.insert(0, Artifact::csv(CONFIGURATION, |w| io::write_configuration(w, &config))?);
    artifacts.insert(1, Artifact::json(SPECTRUM, &spectrum_json)?);
    Ok((config, artifacts))
}

#[derive(Debug, Serialize)]
struct AuditJson {
    audit: SandwichAudit,
    covering: CoveringReport,
    /// Hypotheses hold on a smooth manifold and the sampling check passed.
    certified: bool,
}

pub struct AuditOutput {
    pub artifacts: Vec<Artifact>,
    /// Raised after the artifacts are written, in strict mode.
    pub failure: Option<CliError>,
}

pub fn audit(
    oracle: &ManifoldOracle,
    cloud: &PointCloud,
    distances: Array2<f64>,
    kind: MetricKind,
    epsilon: f64,
    p: &AuditParams,
    seed: u64,
) -> CliResult<AuditOutput> {
    let delta = p.delta.unwrap_or(p.lambda * epsilon / 4.0);
    let ctx = bound_context(oracle, epsilon, delta, p.lambda, p.s0_probes, Seed(seed).derive(2))?;
    let covering = check_delta_sampling(oracle, cloud, delta, p.covering_probes, Seed(seed).derive(1))?;
    let metric = GraphMetric::from_matrix(distances, kind)?;
    let report = audit_sandwich(oracle, cloud, &metric, &ctx)?;
    let certified = report.mode == AuditMode::Certified && covering.satisfied;
    let h = ctx.hypotheses();
    let bounds = json!({
        "context": ctx,
        "max_curvature_epsilon": ctx.max_curvature_epsilon(),
        "hypotheses": h,
        "certifiable": ctx.certifiable(),
    });
    let artifacts = vec![
        Artifact::json(AUDIT, &AuditJson { audit: report, covering, certified })?,
        Artifact::json(BOUNDS, &bounds)?,
    ];
    let failure = if !p.strict {
        None
    } else if !certified {
        let mut reasons = Vec::new();
        if !h.eps_lt_s0 {
            reasons.push(format!("epsilon {epsilon} is not below the branch separation {}", ctx.s0));
        }
        if !h.eps_curvature_ok {
            reasons.push(format!("epsilon {epsilon} exceeds the curvature limit {}", ctx.max_curvature_epsilon()));
        }
        if !h.delta_ok {
            reasons.push(format!("delta {delta} exceeds lambda * epsilon / 4 = {}", p.lambda * epsilon / 4.0));
        }
        if ctx.corner_caveat {
            reasons.push("the manifold has corners".into());
        }
        if !covering.satisfied {
            reasons.push(format!("sampling gap {} is not below delta {delta}", covering.worst_gap));
        }
        Some(CliError::Hypothesis(format!("run is not certified: {}", reasons.join("; "))))
    } else if report.violations_low + report.violations_high > 0 {
        Some(CliError::BoundViolation(format!(
            "{} pairs below and {} pairs above the certified bounds",
            report.violations_low, report.violations_high
        )))
    } else {
        None
    };
    Ok(AuditOutput { artifacts, failure })
}

pub fn frechet(delta: &DissimilarityMatrix, config: Option<&Configuration>) -> CliResult<Vec<Artifact>> {
    let mut results = vec![sample_frechet_mean(delta)?];
    if let Some(z) = config {
        results.push(embedded_frechet_mean(z, delta)?);
    }
    Ok(vec![Artifact::json(FRECHET, &results)?])
}

#[derive(Debug, Serialize)]
struct ProjectionJson {
    method: ProjectionMethod,
    central_meridian_deg: f64,
    n_input: usize,
    n_output: usize,
    /// Input rows where the projection is undefined; dropped from the output.
    singular: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_stress: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_stress: Option<f64>,
}

/// Coastline points, or the synthetic grid when no file is given.
pub fn geo_points(p: &ProjectParams) -> CliResult<GeoPointSet> {
    match &p.coastline {
        Some(path) => load_coastline_csv(path, p.western_only).map_err(CliError::input(path)),
        None => {
            let g = synthetic_hemisphere_grid(p.grid_lat, p.grid_lon)?;
            Ok(if p.western_only { g.western_hemisphere() } else { g })
        }
    }
}

pub fn project(g: &GeoPointSet, p: &ProjectParams) -> CliResult<(Configuration, Vec<Artifact>)> {
    if g.is_empty() {
        return Err(geodesica::Error::Empty("no geographic points to project".into()).into());
    }
    let lambda0 = p.central_meridian_deg.to_radians();
    let mut report = ProjectionJson {
        method: p.method,
        central_meridian_deg: p.central_meridian_deg,
        n_input: g.len(),
        n_output: g.len(),
        singular: Vec::new(),
        initial_stress: None,
        final_stress: None,
    };
    let config = match p.method {
        ProjectionMethod::Equirectangular => equirectangular(g)?,
        ProjectionMethod::TransverseMercator | ProjectionMethod::Lambert => {
            let out = if p.method == ProjectionMethod::Lambert {
                lambert_azimuthal(g, lambda0)?
            } else {
                transverse_mercator(g, lambda0)?
            };
            if !out.singular.is_empty() {
                warn(&format!("{} singular points dropped", out.singular.len()));
            }
            report.n_output = out.kept.len();
            report.singular = out.singular;
            out.config
        }
        ProjectionMethod::Mds => {
            let params = StressParams { weights: StressWeights::Unit, max_iters: p.iterations, rel_tol: p.rel_tol };
            let map = mds_map(g, &params, 2)?;
            report.initial_stress = Some(map.initial_stress);
            report.final_stress = Some(map.final_stress);
            map.config
        }
    };
    let artifacts = vec![
        Artifact::csv(PROJECTION, |w| io::write_configuration(w, &config))?,
        Artifact::json(PROJECTION_REPORT, &report)?,
    ];
    Ok((config, artifacts))
}

pub fn plot(config: &Configuration, labels: Option<&[usize]>) -> CliResult<Vec<Artifact>> {
    Ok(vec![Artifact::text(PLOT, emit_svg_scatter(config, labels)?)])
}
