//! End-to-end pipeline: build (or train) a model, simulate a closed-loop
//! trajectory, locate and aggregate fixed points, extract and label the
//! ENA, and write the artifact bundle. Every run is reproducible from its
//! `RunConfig`; no artifact carries timestamps.

use crate::ena::{self, ExtractConfig, GridSpec};
use crate::error::{EnaError, Result};
use crate::esn::{self, EsnModel, Trajectory};
use crate::fixed_points::{self, AggregateConfig, FixedPoint, SearchConfig};
use crate::io;
use crate::task::{self, TaskConfig};
use crate::train::{self, derive_seed, TrainConfig, TEST_WASHOUT};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EsnSpec {
    /// Random reservoir trained by ridge regression.
    Random { n_reservoir: usize, sparsity: f64, spectral_radius: f64, leak_rate: f64 },
    /// Hand-designed two-neuron flip-flop reservoir.
    Design2d { b: f64 },
    /// Hand-designed 2k-neuron block reservoir.
    Design2k { s: f64, omega_in: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSettings {
    pub grid: GridSpec,
    pub starts: usize,
    /// Per-coordinate jitter on optimiser starts sampled from the
    /// trajectory; nonzero values expose saddles when switches complete in
    /// a single step.
    pub start_jitter: f64,
    pub energy_tol: f64,
    pub radius: f64,
    pub variance_target: f64,
    pub max_iters: usize,
    pub match_eps: f64,
}

impl ExtractionSettings {
    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            grid: self.grid,
            radius: self.radius,
            variance_target: self.variance_target,
            max_iters: self.max_iters,
            match_eps: self.match_eps,
            energy_tol: self.energy_tol,
            augment: true,
        }
    }
}

/// Everything needed to reproduce a run byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Master seed for model construction, optimiser starts, and simulation
    /// noise; the task sequence has its own seed inside `task`.
    pub seed: u64,
    pub task: TaskConfig,
    pub esn: EsnSpec,
    /// Required for random reservoirs; ignored by the designed models.
    pub train: Option<TrainConfig>,
    pub extraction: ExtractionSettings,
}

impl RunConfig {
    /// Representative defaults for a trained-reservoir run.
    pub fn trained_default(seed: u64) -> Self {
        Self {
            seed,
            task: TaskConfig { bits: 2, pulse_prob: 0.1, length: 10_000, seed },
            esn: EsnSpec::Random {
                n_reservoir: 500,
                sparsity: 0.95,
                spectral_radius: 0.9,
                leak_rate: 1.0,
            },
            train: Some(TrainConfig::default()),
            extraction: ExtractionSettings {
                grid: GridSpec { dim: 3, edge_length: 18.0, points_per_edge: 12 },
                starts: 500,
                start_jitter: 0.0,
                energy_tol: 1e-6,
                radius: 0.2,
                variance_target: 0.95,
                max_iters: 1000,
                match_eps: 1e-4,
            },
        }
    }

    /// Defaults matching the two-neuron designed model.
    pub fn design_2d_default(b: f64, seed: u64) -> Self {
        Self {
            seed,
            task: TaskConfig { bits: 2, pulse_prob: 0.1, length: 2_000, seed },
            esn: EsnSpec::Design2d { b },
            train: None,
            extraction: ExtractionSettings {
                grid: GridSpec { dim: 2, edge_length: 4.0, points_per_edge: 223 },
                starts: 100,
                start_jitter: 1.0,
                energy_tol: 1e-6,
                radius: 0.2,
                variance_target: 0.95,
                max_iters: 1000,
                match_eps: 1e-4,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Build,
    Train,
    Simulate,
    FixedPoints,
    Extract,
    Report,
}

impl Stage {
    /// Process exit code identifying the failed stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Stage::Load => 10,
            Stage::Build => 11,
            Stage::Train => 12,
            Stage::Simulate => 13,
            Stage::FixedPoints => 14,
            Stage::Extract => 15,
            Stage::Report => 16,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Load => "load",
            Stage::Build => "build",
            Stage::Train => "train",
            Stage::Simulate => "simulate",
            Stage::FixedPoints => "fixed-points",
            Stage::Extract => "extract",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {}: {source}", stage.name())]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: EnaError,
}

fn at<T>(stage: Stage, r: Result<T>) -> std::result::Result<T, PipelineError> {
    r.map_err(|source| PipelineError { stage, source })
}

/// Scalar summary written to `metrics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub config: RunConfig,
    pub train_mse: Option<f64>,
    pub test_mse: f64,
    pub simulation_mse: f64,
    pub n_candidates: usize,
    pub n_ghosts: usize,
    pub failed_starts: usize,
    pub n_fixed_points: usize,
    pub stability_census: BTreeMap<String, usize>,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_spurious_nodes: usize,
    pub n_undesired_edges: usize,
    pub max_undesired_beta: f64,
    pub lss_dims_at_target: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct PipelineSummary {
    pub out_dir: PathBuf,
    pub metrics: Metrics,
    pub model: EsnModel,
    pub trajectory: Trajectory,
    pub fixed_points: Vec<FixedPoint>,
    pub graph: ena::EnaGraph,
}

/// Runs every stage and writes `model.json`, `traj.csv`, `task.csv`,
/// `fixed_points.json`, `ena.json`, `ena.dot`, and `metrics.json` into
/// `out_dir`.
pub fn pipeline(config: &RunConfig, out_dir: &Path) -> std::result::Result<PipelineSummary, PipelineError> {
    at(Stage::Load, config.task.validate())?;
    at(Stage::Load, std::fs::create_dir_all(out_dir).map_err(EnaError::from))?;

    // Build.
    let (model, initial_state) = at(Stage::Build, build_model(config))?;

    // Train.
    let (model, train_mse, test_mse) = match (&config.esn, &config.train) {
        (EsnSpec::Random { .. }, Some(tc)) => {
            let out = at(Stage::Train, train::train(&model, &config.task, tc))?;
            (out.model, Some(out.train_mse), out.test_mse)
        }
        (EsnSpec::Random { .. }, None) => {
            return Err(PipelineError {
                stage: Stage::Train,
                source: EnaError::InvalidParameter(
                    "random reservoirs need a train config".into(),
                ),
            });
        }
        // Designed models skip fitting but ride the same evaluation path.
        _ => {
            let mse = at(Stage::Train, train::evaluate_closed_loop(&model, &config.task, 0.0))?;
            (model, None, mse)
        }
    };

    // Simulate the working trajectory.
    let sim_noise = config.train.as_ref().map_or(0.0, |t| t.noise_std);
    let data = at(Stage::Simulate, task::generate(&config.task))?;
    let tr = at(Stage::Simulate, model.trained_reservoir())?;
    let mut sim_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x51));
    let traj = at(
        Stage::Simulate,
        esn::run_closed_loop(
            &model,
            &tr,
            &data.inputs,
            Some(&data.targets),
            &initial_state,
            sim_noise,
            &mut sim_rng,
        ),
    )?;
    let simulation_mse = at(
        Stage::Simulate,
        task::mse(&traj.outputs[TEST_WASHOUT.min(traj.len() - 1)..], &data.targets[TEST_WASHOUT.min(traj.len() - 1)..]),
    )?;

    // Fixed points.
    let search_cfg = SearchConfig {
        n_starts: config.extraction.starts,
        tol: config.extraction.energy_tol,
        seed: derive_seed(config.seed, 0xF1),
        max_iters: 500,
        grad_tol: 1e-10,
        start_jitter: config.extraction.start_jitter,
    };
    let outcome = at(Stage::FixedPoints, fixed_points::find_fixed_points(&tr, &traj, &search_cfg))?;
    let agg_cfg = AggregateConfig::new(config.extraction.energy_tol, derive_seed(config.seed, 0xA6));
    let fps = at(Stage::FixedPoints, fixed_points::aggregate(&tr, &outcome.candidates, &agg_cfg))?;

    // Extract and label the graph.
    let pdvs = ena::collect_pdvs(&traj);
    let readout = at(Stage::Extract, model.readout().ok_or(EnaError::MissingReadout))?;
    let mut graph = at(
        Stage::Extract,
        ena::extract_ena(&tr, readout, &fps, &pdvs, &config.extraction.extract_config()),
    )?;
    ena::label_edges(&mut graph);

    // Reports.
    let mut census: BTreeMap<String, usize> = BTreeMap::new();
    for fp in &fps {
        *census.entry(fp.stability.to_string()).or_default() += 1;
    }
    let metrics = Metrics {
        config: config.clone(),
        train_mse,
        test_mse,
        simulation_mse,
        n_candidates: outcome.candidates.len(),
        n_ghosts: outcome.ghosts.len(),
        failed_starts: outcome.failed_starts,
        n_fixed_points: fps.len(),
        stability_census: census,
        n_nodes: graph.nodes.len(),
        n_edges: graph.edges.len(),
        n_spurious_nodes: graph.nodes.iter().filter(|n| n.spurious).count(),
        n_undesired_edges: graph
            .edges
            .iter()
            .filter(|e| e.class == Some(ena::EdgeClass::Undesired))
            .count(),
        max_undesired_beta: crate::experiments::max_undesired_beta(&graph),
        lss_dims_at_target: graph
            .nodes
            .iter()
            .filter_map(|n| n.lss.as_ref().map(|l| l.dim_for_target(config.extraction.variance_target)))
            .collect(),
        warnings: graph.warnings.clone(),
    };

    let write = || -> Result<()> {
        io::save_model(&out_dir.join("model.json"), &model)?;
        io::write_trajectory_csv(&out_dir.join("traj.csv"), &traj)?;
        io::write_task_csv(&out_dir.join("task.csv"), &data)?;
        io::write_json(
            &out_dir.join("fixed_points.json"),
            &io::FixedPointsFile::new(&search_cfg, &outcome, &fps),
        )?;
        io::write_json(
            &out_dir.join("ena.json"),
            &io::EnaGraphFile::from_graph(&graph, config.extraction.variance_target),
        )?;
        io::write_dot(&out_dir.join("ena.dot"), &graph)?;
        io::write_json(&out_dir.join("metrics.json"), &metrics)?;
        Ok(())
    };
    at(Stage::Report, write())?;

    Ok(PipelineSummary {
        out_dir: out_dir.to_path_buf(),
        metrics,
        model,
        trajectory: traj,
        fixed_points: fps,
        graph,
    })
}

fn build_model(config: &RunConfig) -> Result<(EsnModel, DVector<f64>)> {
    match config.esn {
        EsnSpec::Random { n_reservoir, sparsity, spectral_radius, leak_rate } => {
            let noise = config.train.as_ref().map_or(0.0, |t| t.noise_std);
            let model = esn::build_random_esn(
                n_reservoir,
                config.task.bits,
                config.task.bits,
                sparsity,
                spectral_radius,
                leak_rate,
                noise,
                derive_seed(config.seed, 0xE0),
            )?;
            // Trained reservoirs settle from the rest state.
            Ok((model, DVector::zeros(n_reservoir)))
        }
        EsnSpec::Design2d { b } => {
            if config.task.bits != 2 {
                return Err(EnaError::InvalidParameter(
                    "the two-neuron design solves exactly two bits".into(),
                ));
            }
            let model = crate::design::make_design_2d(b)?;
            // Start on the all-ones memory state the task assumes.
            Ok((model, DVector::from_element(2, 1.0)))
        }
        EsnSpec::Design2k { s, omega_in } => {
            let model = crate::design::make_design_2k(config.task.bits, s, omega_in, 0.0)?;
            let n = 2 * config.task.bits;
            Ok((model, DVector::from_element(n, 1.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_design_config() -> RunConfig {
        let mut cfg = RunConfig::design_2d_default(0.2, 7);
        cfg.task.length = 1500;
        cfg.extraction.grid.points_per_edge = 41;
        cfg.extraction.starts = 60;
        cfg
    }

    #[test]
    fn design_pipeline_produces_bundle() {
        let dir = tempdir().unwrap();
        let out = pipeline(&small_design_config(), dir.path()).unwrap();
        for f in ["model.json", "traj.csv", "task.csv", "fixed_points.json", "ena.json", "ena.dot", "metrics.json"] {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
        assert_eq!(out.graph.nodes.len(), 4);
        assert!(out.metrics.test_mse < 1e-2);
        assert!(out.metrics.simulation_mse < 1e-2);
    }

    #[test]
    fn pipeline_is_byte_reproducible() {
        let cfg = small_design_config();
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        pipeline(&cfg, d1.path()).unwrap();
        pipeline(&cfg, d2.path()).unwrap();
        for f in ["model.json", "traj.csv", "task.csv", "fixed_points.json", "ena.json", "ena.dot", "metrics.json"] {
            let a = std::fs::read(d1.path().join(f)).unwrap();
            let b = std::fs::read(d2.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between runs");
        }
    }

    #[test]
    fn random_without_train_config_fails_in_train_stage() {
        let mut cfg = RunConfig::trained_default(1);
        cfg.train = None;
        let err = pipeline(&cfg, tempdir().unwrap().path()).unwrap_err();
        assert_eq!(err.stage, Stage::Train);
        assert_eq!(err.stage.exit_code(), 12);
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = RunConfig::trained_default(42);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
