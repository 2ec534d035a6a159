//! Noise-robustness sweeps and graph-based diagnosis of prediction errors.

use crate::ena::{EdgeClass, EnaGraph};
use crate::error::{EnaError, Result};
use crate::esn::{run_closed_loop, EsnModel, Trajectory};
use crate::task::{self, TaskConfig};
use crate::train::{derive_seed, TEST_WASHOUT};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Mean MSE above this counts as performance breakdown.
pub const BREAKDOWN_MSE: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub noise_levels: Vec<f64>,
    /// Mean MSE per level over the noise seeds.
    pub mse_per_level: Vec<f64>,
    /// Per-level, per-seed MSEs backing the means.
    pub mse_per_seed: Vec<Vec<f64>>,
    /// First level whose mean MSE exceeds [`BREAKDOWN_MSE`].
    pub breakdown_level: Option<f64>,
    pub breakdown_index: Option<usize>,
}

/// Closed-loop MSE under increasing state noise. Every level and seed sees
/// the same input series; only the noise realisation differs. Levels run in
/// parallel and are reduced in order.
pub fn run_noise_sweep(
    model: &EsnModel,
    task_cfg: &TaskConfig,
    levels: &[f64],
    test_length: usize,
    n_seeds: usize,
    master_seed: u64,
) -> Result<SweepResult> {
    if levels.is_empty() {
        return Err(EnaError::EmptyInput("no noise levels".into()));
    }
    if !levels.windows(2).all(|w| w[0] < w[1]) {
        return Err(EnaError::InvalidParameter("noise levels must increase strictly".into()));
    }
    if n_seeds == 0 {
        return Err(EnaError::InvalidParameter("need at least one noise seed".into()));
    }
    if test_length <= TEST_WASHOUT {
        return Err(EnaError::InvalidParameter(format!(
            "test length {test_length} does not outlast the washout of {TEST_WASHOUT}"
        )));
    }
    let data = task::generate(&TaskConfig { length: test_length, ..*task_cfg })?;
    let tr = model.trained_reservoir()?;
    let x0 = DVector::zeros(model.n_reservoir());

    let mse_per_seed: Vec<Vec<f64>> = levels
        .par_iter()
        .enumerate()
        .map(|(li, &std)| {
            (0..n_seeds)
                .map(|si| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        master_seed,
                        (li * 1000 + si) as u64,
                    ));
                    let traj = run_closed_loop(
                        model,
                        &tr,
                        &data.inputs,
                        Some(&data.targets),
                        &x0,
                        std,
                        &mut rng,
                    )?;
                    task::mse(&traj.outputs[TEST_WASHOUT..], &data.targets[TEST_WASHOUT..])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mse_per_level: Vec<f64> =
        mse_per_seed.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let breakdown_index = mse_per_level.iter().position(|&m| m > BREAKDOWN_MSE);
    Ok(SweepResult {
        noise_levels: levels.to_vec(),
        breakdown_level: breakdown_index.map(|i| levels[i]),
        breakdown_index,
        mse_per_level,
        mse_per_seed,
    })
}

/// Largest effective excitability over undesired edges; the headline
/// fragility score of an extracted graph.
pub fn max_undesired_beta(graph: &EnaGraph) -> f64 {
    graph
        .edges
        .iter()
        .filter(|e| e.class == Some(EdgeClass::Undesired))
        .map(|e| e.effective_excitability)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorInterval {
    pub start: usize,
    pub end: usize,
    pub max_deviation: f64,
    /// Nearest graph nodes visited, consecutive duplicates collapsed; the
    /// first entry is the node occupied just before the errors began.
    pub nodes: Vec<usize>,
    pub spurious_nodes: Vec<usize>,
    /// Node pairs along the visit sequence that traverse undesired edges.
    pub undesired_edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error_threshold: f64,
    pub total_error_steps: usize,
    pub intervals: Vec<ErrorInterval>,
    pub spurious_visits: usize,
    pub undesired_traversals: usize,
}

/// Attributes prediction-error intervals to the graph: steps whose output
/// deviates from the target by more than `threshold` (infinity norm) are
/// grouped into intervals, each labelled with the nearest nodes the state
/// passed through, flagging spurious-node visits and undesired-edge
/// traversals.
pub fn diagnose_errors(graph: &EnaGraph, traj: &Trajectory, threshold: f64) -> Result<ErrorReport> {
    let targets = traj
        .targets
        .as_ref()
        .ok_or_else(|| EnaError::EmptyInput("trajectory has no targets to diagnose against".into()))?;
    if graph.nodes.is_empty() {
        return Err(EnaError::EmptyInput("graph has no nodes".into()));
    }

    let nearest = |x: &DVector<f64>| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in graph.nodes.iter().enumerate() {
            let d = (x - &n.location).norm_squared();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    };

    let mut intervals = Vec::new();
    let mut total_error_steps = 0;
    let mut k = 0;
    while k < traj.len() {
        let dev = (&traj.outputs[k] - &targets[k]).amax();
        if dev <= threshold {
            k += 1;
            continue;
        }
        let start = k;
        let mut max_deviation: f64 = 0.0;
        let mut nodes = vec![nearest(traj.state_before(start))];
        while k < traj.len() {
            let dev = (&traj.outputs[k] - &targets[k]).amax();
            if dev <= threshold {
                break;
            }
            max_deviation = max_deviation.max(dev);
            let n = nearest(&traj.states[k]);
            if *nodes.last().unwrap() != n {
                nodes.push(n);
            }
            total_error_steps += 1;
            k += 1;
        }
        let spurious_nodes: Vec<usize> =
            nodes.iter().copied().filter(|&n| graph.nodes[n].spurious).collect();
        let undesired_edges: Vec<(usize, usize)> = nodes
            .windows(2)
            .filter(|w| {
                graph
                    .edge(w[0], w[1])
                    .map(|e| e.class == Some(EdgeClass::Undesired))
                    .unwrap_or(false)
            })
            .map(|w| (w[0], w[1]))
            .collect();
        intervals.push(ErrorInterval {
            start,
            end: k.saturating_sub(1),
            max_deviation,
            nodes,
            spurious_nodes,
            undesired_edges,
        });
    }

    let spurious_visits = intervals.iter().map(|i| i.spurious_nodes.len()).sum();
    let undesired_traversals = intervals.iter().map(|i| i.undesired_edges.len()).sum();
    Ok(ErrorReport {
        error_threshold: threshold,
        total_error_steps,
        intervals,
        spurious_visits,
        undesired_traversals,
    })
}
