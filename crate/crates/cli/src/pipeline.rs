//! JSON-configured stage chains. Every stage writes the same artifacts as
//! the matching subcommand.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use geodesica::geograph::{GraphMetric, NeighborhoodGraph};
use geodesica::manifolds::ManifoldOracle;
use geodesica::{Configuration, DissimilarityMatrix, PointCloud};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::presets::{parse_manifold_json, resolve_manifold};
use crate::run::{OutputRecord, Run};
use crate::stages::{
    self, AuditParams, DeltaSource, EmbedParams, FrechetParams, GenerateParams, GeodesicsParams, GraphParams,
    KeptReport, PlotParams, PlotSource, ProjectParams, ShortestPathParams, WeightKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Relative to the config file.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Preset name, path to a JSON file, or an inline manifold object.
    #[serde(default)]
    pub manifold: Option<serde_json::Value>,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Stage {
    Generate(GenerateParams),
    Geodesics(GeodesicsParams),
    Graph(GraphParams),
    ShortestPaths(ShortestPathParams),
    Embed(EmbedParams),
    Audit(AuditParams),
    Frechet(FrechetParams),
    Project(ProjectParams),
    Plot(PlotParams),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Generate(_) => "generate",
            Stage::Geodesics(_) => "geodesics",
            Stage::Graph(_) => "graph",
            Stage::ShortestPaths(_) => "shortest-paths",
            Stage::Embed(_) => "embed",
            Stage::Audit(_) => "audit",
            Stage::Frechet(_) => "frechet",
            Stage::Project(_) => "project",
            Stage::Plot(_) => "plot",
        }
    }

    fn needs_manifold(&self) -> bool {
        match self {
            Stage::Generate(_) | Stage::Geodesics(_) | Stage::Audit(_) => true,
            Stage::ShortestPaths(p) => p.weights == WeightKind::Oracle,
            _ => false,
        }
    }

    fn requires(&self) -> Vec<&'static str> {
        let source = |s: DeltaSource| match s {
            DeltaSource::ShortestPaths => "shortest-paths",
            DeltaSource::Geodesics => "geodesics",
        };
        match self {
            Stage::Generate(_) | Stage::Project(_) => vec![],
            Stage::Geodesics(_) | Stage::Graph(_) => vec!["generate"],
            Stage::ShortestPaths(_) => vec!["graph"],
            Stage::Embed(p) => vec![source(p.input)],
            Stage::Audit(_) => vec!["graph", "shortest-paths"],
            Stage::Frechet(p) => vec![source(p.input)],
            Stage::Plot(p) => match p.source {
                PlotSource::Embedding => vec!["embed"],
                PlotSource::Projection => vec!["project"],
                PlotSource::Points => vec!["generate"],
            },
        }
    }
}

impl RunConfig {
    /// Each stage at most once, after the stages it reads from.
    pub fn validate(&self) -> CliResult<()> {
        let mut seen = HashSet::new();
        for stage in &self.stages {
            for dep in stage.requires() {
                if !seen.contains(dep) {
                    return Err(CliError::Config(format!("stage `{}` needs an earlier `{dep}` stage", stage.name())));
                }
            }
            if stage.needs_manifold() && self.manifold.is_none() {
                return Err(CliError::Config(format!("stage `{}` needs a manifold", stage.name())));
            }
            if let Stage::Graph(p) = stage {
                p.rule()?;
            }
            if let Stage::Audit(_) = stage {
                let eps = self.stages.iter().find_map(|s| match s {
                    Stage::Graph(g) => g.epsilon,
                    _ => None,
                });
                if eps.is_none() {
                    return Err(CliError::Config("stage `audit` needs an epsilon graph".into()));
                }
            }
            if !seen.insert(stage.name()) {
                return Err(CliError::Config(format!("stage `{}` appears twice", stage.name())));
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct State {
    points: Option<PointCloud>,
    geodesics: Option<DissimilarityMatrix>,
    graph: Option<(NeighborhoodGraph, GraphParams)>,
    metric: Option<(GraphMetric, WeightKind)>,
    kept: Option<KeptReport>,
    embedding: Option<Configuration>,
    projection: Option<Configuration>,
}

fn need<'a, T>(value: &'a Option<T>, what: &str) -> CliResult<&'a T> {
    value.as_ref().ok_or_else(|| CliError::Config(format!("no {what} available")))
}

impl State {
    fn delta(&self, source: DeltaSource) -> CliResult<DissimilarityMatrix> {
        match source {
            DeltaSource::Geodesics => Ok(need(&self.geodesics, "geodesic distances")?.clone()),
            DeltaSource::ShortestPaths => {
                let (m, _) = need(&self.metric, "shortest-path distances")?;
                stages::finite_delta(m.matrix.clone(), "shortest-path matrix")
            }
        }
    }

    /// Sample points aligned with the shortest-path matrix.
    fn metric_points(&self) -> CliResult<PointCloud> {
        let cloud = need(&self.points, "points")?;
        match &self.kept {
            Some(k) => Ok(cloud.select(&k.kept)?),
            None => Ok(cloud.clone()),
        }
    }
}

fn resolve_config_manifold(value: &serde_json::Value, base: &Path, run: &mut Run) -> CliResult<ManifoldOracle> {
    match value {
        serde_json::Value::String(s) => resolve_manifold(s, base, run),
        other => parse_manifold_json(other.to_string().as_bytes(), Path::new("<config manifold>")),
    }
}

pub fn run_pipeline(
    config_path: &Path,
    out_override: Option<PathBuf>,
    args: &[String],
) -> CliResult<Vec<OutputRecord>> {
    let mut run = Run::new("pipeline", args, PathBuf::new());
    let bytes = run.read_input(config_path)?;
    let mut cfg: RunConfig = serde_json::from_slice(&bytes).map_err(|e| CliError::input(config_path)(e.into()))?;
    cfg.validate()?;
    if cfg.stages.is_empty() {
        return Ok(Vec::new());
    }
    let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_dir = match (out_override, &cfg.output_dir) {
        (Some(d), _) => d,
        (None, Some(d)) => base.join(d),
        (None, None) => return Err(CliError::Config("no output_dir in the config and no --out-dir".into())),
    };
    run.set_out_dir(out_dir);
    run.set_seed(cfg.seed);

    // resolve every path before any stage runs
    for stage in &mut cfg.stages {
        if let Stage::Project(p) = stage {
            if let Some(c) = &p.coastline {
                let path = base.join(c);
                run.read_input(&path)?;
                p.coastline = Some(path);
            }
        }
    }
    let oracle = cfg.manifold.as_ref().map(|v| resolve_config_manifold(v, &base, &mut run)).transpose()?;
    run.set_parameters(&cfg)?;

    let mut st = State::default();
    let mut failure = None;
    for stage in &cfg.stages {
        let artifacts = match stage {
            Stage::Generate(p) => {
                let (cloud, a) = stages::generate(need(&oracle, "manifold")?, p, cfg.seed)?;
                st.points = Some(cloud);
                a
            }
            Stage::Geodesics(_) => {
                let (d, a) = stages::geodesics(need(&oracle, "manifold")?, need(&st.points, "points")?)?;
                st.geodesics = Some(d);
                a
            }
            Stage::Graph(p) => {
                let (g, a) = stages::graph(need(&st.points, "points")?, p)?;
                st.graph = Some((g, p.clone()));
                a
            }
            Stage::ShortestPaths(p) => {
                let (g, _) = need(&st.graph, "graph")?;
                let out = stages::shortest(g, need(&st.points, "points")?, oracle.as_ref(), p)?;
                st.metric = Some((out.metric, p.weights));
                st.kept = out.kept;
                out.artifacts
            }
            Stage::Embed(p) => {
                let (z, a) = stages::embed(&st.delta(p.input)?, p)?;
                st.embedding = Some(z);
                a
            }
            Stage::Audit(p) => {
                let (_, g) = need(&st.graph, "graph")?;
                let epsilon = g.epsilon.ok_or_else(|| CliError::Config("audit needs an epsilon graph".into()))?;
                let (m, weights) = need(&st.metric, "shortest-path distances")?;
                let cloud = st.metric_points()?;
                let out = stages::audit(
                    need(&oracle, "manifold")?,
                    &cloud,
                    m.matrix.clone(),
                    (*weights).into(),
                    epsilon,
                    p,
                    cfg.seed,
                )?;
                failure = failure.or(out.failure);
                out.artifacts
            }
            Stage::Frechet(p) => {
                let delta = st.delta(p.input)?;
                let z = st.embedding.as_ref().filter(|z| z.len() == delta.len());
                stages::frechet(&delta, z)?
            }
            Stage::Project(p) => {
                let (z, a) = stages::project(&stages::geo_points(p)?, p)?;
                st.projection = Some(z);
                a
            }
            Stage::Plot(p) => {
                let z = match p.source {
                    PlotSource::Embedding => need(&st.embedding, "embedding")?.clone(),
                    PlotSource::Projection => need(&st.projection, "projection")?.clone(),
                    PlotSource::Points => Configuration::from(need(&st.points, "points")?.clone()),
                };
                stages::plot(&z, None)?
            }
        };
        run.write_all(&artifacts)?;
    }
    let recorded = run.finish()?;
    match failure {
        Some(e) => Err(e),
        None => Ok(recorded),
    }
}
