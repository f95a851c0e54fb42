//! Subcommand definitions and their file-level plumbing.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use geodesica::{io, Configuration, PointCloud};
use ndarray::Array2;
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};
use crate::pipeline::run_pipeline;
use crate::presets::resolve_manifold;
use crate::run::{read_manifest, sha256_hex, OutputRecord, Run, TOOL};
use crate::stages::{
    self, AuditParams, EmbedParams, FrechetParams, GenerateParams, GeodesicsParams, GraphParams, KeptReport,
    PlotParams, ProjectParams, ShortestPathParams, WeightKind,
};

#[derive(Debug, Parser)]
#[command(name = "geodesica", version, about = "Geodesic-distance manifold learning pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample points from a manifold.
    Generate {
        /// Preset name, inline JSON, or a JSON file.
        #[arg(long)]
        manifold: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        params: GenerateParams,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Exact Riemannian distances between sample points.
    Geodesics {
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        points: PathBuf,
        #[command(flatten)]
        params: GeodesicsParams,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build an epsilon or K-nearest-neighbor graph.
    Graph {
        #[arg(long)]
        points: PathBuf,
        #[command(flatten)]
        params: GraphParams,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// All-pairs shortest paths on a neighborhood graph.
    ShortestPaths {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Needed for `--weights oracle`.
        #[arg(long)]
        manifold: Option<String>,
        #[command(flatten)]
        params: ShortestPathParams,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Embed a distance matrix by classical MDS, optionally refined by
    /// stress majorization.
    Embed {
        #[arg(long)]
        delta: PathBuf,
        #[command(flatten)]
        params: EmbedParams,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check graph distances against the Riemannian distance bounds.
    Audit {
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        points: PathBuf,
        /// Shortest-path matrix; may contain `inf`.
        #[arg(long)]
        distances: PathBuf,
        /// `kept.json` from a largest-component restriction.
        #[arg(long)]
        kept: Option<PathBuf>,
        /// Radius the graph was built with.
        #[arg(long)]
        epsilon: f64,
        /// Edge weights the distances were computed with.
        #[arg(long, value_enum, default_value_t)]
        metric: WeightKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        params: AuditParams,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Flat maps of geographic points.
    Project {
        #[command(flatten)]
        params: ProjectParams,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample Frechet mean by brute force, and by embedded averaging when a
    /// configuration is given.
    Frechet {
        #[arg(long)]
        delta: PathBuf,
        #[arg(long)]
        configuration: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// SVG scatter plot of a 2-D configuration.
    Plot {
        #[arg(long)]
        configuration: PathBuf,
        /// JSON array of labels, or a JSON object with a `component_map`.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the stages listed in a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Replay a run from its manifest and check the outputs are identical.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Defaults to the recorded output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

pub fn read_points(run: &mut Run, path: &Path) -> CliResult<PointCloud> {
    let bytes = run.read_input(path)?;
    io::read_point_cloud(bytes.as_slice()).map_err(CliError::input(path))
}

pub fn read_matrix(run: &mut Run, path: &Path) -> CliResult<Array2<f64>> {
    let bytes = run.read_input(path)?;
    io::read_matrix(bytes.as_slice()).map_err(CliError::input(path))
}

pub fn read_configuration(run: &mut Run, path: &Path) -> CliResult<Configuration> {
    let bytes = run.read_input(path)?;
    io::read_configuration(bytes.as_slice()).map_err(CliError::input(path))
}

pub fn read_json<T: DeserializeOwned>(run: &mut Run, path: &Path) -> CliResult<T> {
    let bytes = run.read_input(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(path)(e.into()))
}

fn read_labels(run: &mut Run, path: &Path) -> CliResult<Vec<usize>> {
    let value: serde_json::Value = read_json(run, path)?;
    let list = value.get("component_map").cloned().unwrap_or(value);
    serde_json::from_value(list).map_err(|e| CliError::input(path)(e.into()))
}

fn cwd() -> PathBuf {
    PathBuf::from(".")
}

/// Runs one parsed command; `args` is recorded in the manifest.
pub fn execute(cli: Cli, args: &[String]) -> CliResult<Vec<OutputRecord>> {
    match cli.command {
        Command::Generate { manifold, seed, params, out_dir } => {
            let mut run = Run::new("generate", args, out_dir);
            run.set_parameters(&params)?;
            run.set_seed(seed);
            let oracle = resolve_manifold(&manifold, &cwd(), &mut run)?;
            let (_, artifacts) = stages::generate(&oracle, &params, seed)?;
            run.write_all(&artifacts)?;
            run.finish()
        }
        Command::Geodesics { manifold, points, params, out_dir } => {
            let mut run = Run::new("geodesics", args, out_dir);
            run.set_parameters(&params)?;
            let oracle = resolve_manifold(&manifold, &cwd(), &mut run)?;
            let cloud = read_points(&mut run, &points)?;
            let (_, artifacts) = stages::geodesics(&oracle, &cloud)?;
            run.write_all(&artifacts)?;
            run.finish()
        }
        Command::Graph { points, params, out_dir } => {
            let mut run = Run::new("graph", args, out_dir);
            run.set_parameters(&params)?;
            let cloud = read_points(&mut run, &points)?;
            let (_, artifacts) = stages::graph(&cloud, &params)?;
            run.write_all(&artifacts)?;
            run.finish()
        }
        Command::ShortestPaths { points, graph, manifold, params, out_dir } => {
            let mut run = Run::new("shortest-paths", args, out_dir);
            run.set_parameters(&params)?;
            let oracle = manifold.map(|m| resolve_manifold(&m, &cwd(), &mut run)).transpose()?;
            let cloud = read_points(&mut run, &points)?;
            let g: geodesica::geograph::NeighborhoodGraph = read_json(&mut run, &graph)?;
            g.validate().map_err(CliError::input(&graph))?;
            let out = stages::shortest(&g, &cloud, oracle.as_ref(), &params)?;
            run.write_all(&out.artifacts)?;
            run.finish()
        }
        Command::Embed { delta, params, out_dir } => {
            let mut run = Run::new("embed", args, out_dir);
            run.set_parameters(&params)?;
            let m = read_matrix(&mut run, &delta)?;
            let d = stages::finite_delta(m, &delta.display().to_string())?;
            let (_, artifacts) = stages::embed(&d, &params)?;
            run.write_all(&artifacts)?;
            run.finish()
        }
        Command::Audit { manifold, points, distances, kept, epsilon, metric, seed, params, out_dir } => {
            let mut run = Run::new("audit", args, out_dir);
            run.set_parameters(&params)?;
            run.set_seed(seed);
            let oracle = resolve_manifold(&manifold, &cwd(), &mut run)?;
            let mut cloud = read_points(&mut run, &points)?;
            if let Some(path) = kept {
                let k: KeptReport = read_json(&mut run, &path)?;
                cloud = cloud.select(&k.kept).map_err(CliError::input(&path))?;
            }
            let m = read_matrix(&mut run, &distances)?;
            let out = stages::audit(&oracle, &cloud, m, metric.into(), epsilon, &params, seed)?;
            run.write_all(&out.artifacts)?;
            let recorded = run.finish()?;
            match out.failure {
                Some(e) => Err(e),
                None => Ok(recorded),
            }
        }
        Command::Project { params, out_dir } => {
            let mut run = Run::new("project", args, out_dir);
            run.set_parameters(&params)?;
            if let Some(path) = &params.coastline {
                run.read_input(path)?;
            }
            let g = stages::geo_points(&params)?;
            let (_, artifacts) = stages::project(&g, &params)?;
            run.write_all(&artifacts)?;
            run.finish()
        }
        Command::Frechet { delta, configuration, out_dir } => {
            let mut run = Run::new("frechet", args, out_dir);
            run.set_parameters(&FrechetParams::default())?;
            let m = read_matrix(&mut run, &delta)?;
            let d = stages::finite_delta(m, &delta.display().to_string())?;
            let z = configuration.map(|p| read_configuration(&mut run, &p)).transpose()?;
            let artifacts = stages::frechet(&d, z.as_ref())?;
            run.write_all(&artifacts)?;
            run.finish()
        }
        Command::Plot { configuration, labels, out_dir } => {
            let mut run = Run::new("plot", args, out_dir);
            run.set_parameters(&PlotParams::default())?;
            let z = read_configuration(&mut run, &configuration)?;
            let labels = labels.map(|p| read_labels(&mut run, &p)).transpose()?;
            let artifacts = stages::plot(&z, labels.as_deref())?;
            run.write_all(&artifacts)?;
            run.finish()
        }
        Command::Pipeline { config, out_dir } => run_pipeline(&config, out_dir, args),
        Command::Rerun { manifest, out_dir } => rerun(&manifest, out_dir),
    }
}

/// Replaces (or appends) the `--out-dir` value in recorded arguments.
fn with_out_dir(args: &[String], dir: &Path) -> Vec<String> {
    let dir = dir.display().to_string();
    let mut out = Vec::with_capacity(args.len() + 2);
    let mut replaced = false;
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        if a == "--out-dir" {
            iter.next();
            out.extend(["--out-dir".to_string(), dir.clone()]);
            replaced = true;
        } else if a.starts_with("--out-dir=") {
            out.push(format!("--out-dir={dir}"));
            replaced = true;
        } else {
            out.push(a.clone());
        }
    }
    if !replaced {
        out.extend(["--out-dir".to_string(), dir]);
    }
    out
}

fn rerun(manifest_path: &Path, out_dir: Option<PathBuf>) -> CliResult<Vec<OutputRecord>> {
    let m = read_manifest(manifest_path)?;
    if m.tool != TOOL {
        return Err(CliError::Config(format!("manifest was written by `{}`, not {TOOL}", m.tool)));
    }
    if m.command == "rerun" {
        return Err(CliError::Config("cannot replay a rerun manifest".into()));
    }
    let working_dir = PathBuf::from(&m.working_dir);
    for input in &m.inputs {
        let path = working_dir.join(&input.path);
        let bytes = fs::read(&path).map_err(CliError::io(&path))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::Reproducibility(format!("input {} changed since the recorded run", path.display())));
        }
    }
    let args = match out_dir {
        Some(dir) => {
            let abs = std::path::absolute(&dir).map_err(CliError::io(&dir))?;
            with_out_dir(&m.args, &abs)
        }
        None => m.args.clone(),
    };
    std::env::set_current_dir(&working_dir).map_err(CliError::io(&working_dir))?;
    let cli = Cli::try_parse_from(std::iter::once(TOOL.to_string()).chain(args.iter().cloned()))
        .map_err(|e| CliError::Config(format!("recorded arguments no longer parse: {e}")))?;
    let outputs = execute(cli, &args)?;
    let differing: Vec<&str> = m
        .outputs
        .iter()
        .filter(|o| !outputs.contains(o))
        .map(|o| o.name.as_str())
        .chain(outputs.iter().filter(|o| !m.outputs.contains(o)).map(|o| o.name.as_str()))
        .collect();
    if !differing.is_empty() {
        return Err(CliError::Reproducibility(format!("outputs differ from the manifest: {}", differing.join(", "))));
    }
    Ok(outputs)
}
