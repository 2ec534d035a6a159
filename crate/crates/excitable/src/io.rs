//! File formats: model JSON, trajectory and task CSV, fixed-point and graph
//! reports, DOT export.
//!
//! All writers are deterministic (fixed field order, shortest-roundtrip
//! float formatting, no timestamps) so identical runs produce identical
//! bytes.

use crate::ena::{EdgeClass, EnaEdge, EnaGraph, EnaNode, GridStats};
use crate::error::{EnaError, Result};
use crate::esn::{EsnModel, ModelMeta, Trajectory};
use crate::fixed_points::{Candidate, FixedPoint, SearchOutcome, Stability};
use crate::task::TaskData;
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

fn matrix_rows(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn matrix_from_rows(rows: usize, cols: usize, data: &[f64], what: &str) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(EnaError::DimensionMismatch(format!(
            "{what}: expected {rows}x{cols} = {} entries, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

/// On-disk model document: dimensions, parameters, dense row-major weights,
/// seed, provenance.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub n_reservoir: usize,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub leak_rate: f64,
    pub noise_std: f64,
    pub seed: Option<u64>,
    pub provenance: String,
    pub reservoir: Vec<f64>,
    pub input_weights: Vec<f64>,
    pub feedback_weights: Vec<f64>,
    pub readout: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(model: &EsnModel) -> Self {
        Self {
            n_reservoir: model.n_reservoir(),
            n_inputs: model.n_inputs(),
            n_outputs: model.n_outputs(),
            leak_rate: model.leak_rate(),
            noise_std: model.noise_std(),
            seed: model.meta.seed,
            provenance: model.meta.provenance.clone(),
            reservoir: matrix_rows(model.reservoir()),
            input_weights: matrix_rows(model.input_weights()),
            feedback_weights: matrix_rows(model.feedback_weights()),
            readout: model.readout().map(matrix_rows),
        }
    }

    pub fn into_model(self) -> Result<EsnModel> {
        let n = self.n_reservoir;
        let mut model = EsnModel::new(
            matrix_from_rows(n, n, &self.reservoir, "reservoir")?,
            matrix_from_rows(n, self.n_inputs, &self.input_weights, "input weights")?,
            matrix_from_rows(n, self.n_outputs, &self.feedback_weights, "feedback weights")?,
            self.leak_rate,
            self.noise_std,
        )?;
        if let Some(w) = &self.readout {
            model = model.with_readout(matrix_from_rows(self.n_outputs, n, w, "readout")?)?;
        }
        model.meta = ModelMeta { seed: self.seed, provenance: self.provenance };
        Ok(model)
    }
}

pub fn save_model(path: &Path, model: &EsnModel) -> Result<()> {
    write_json(path, &ModelFile::from_model(model))
}

pub fn load_model(path: &Path) -> Result<EsnModel> {
    let file = std::fs::File::open(path)?;
    let doc: ModelFile = serde_json::from_reader(BufReader::new(file))?;
    doc.into_model()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Trajectory CSV: `step, x_*, u_*, z_*, y_*`. Step 0 carries the initial
/// state with empty input/output/target cells; driven steps are 1-based.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let n_r = traj.initial_state.len();
    let n_i = traj.inputs.first().map_or(0, |u| u.len());
    let n_o = traj.outputs.first().map_or(0, |z| z.len());
    let n_y = traj.targets.as_ref().and_then(|t| t.first()).map_or(0, |y| y.len());
    let mut w = csv::Writer::from_writer(BufWriter::new(std::fs::File::create(path)?));

    let mut header = vec!["step".to_string()];
    header.extend((1..=n_r).map(|i| format!("x_{i}")));
    header.extend((1..=n_i).map(|i| format!("u_{i}")));
    header.extend((1..=n_o).map(|i| format!("z_{i}")));
    header.extend((1..=n_y).map(|i| format!("y_{i}")));
    w.write_record(&header)?;

    let blank = |n: usize, record: &mut Vec<String>| {
        record.extend(std::iter::repeat_n(String::new(), n));
    };
    let mut record = vec!["0".to_string()];
    record.extend(traj.initial_state.iter().map(|v| v.to_string()));
    blank(n_i + n_o + n_y, &mut record);
    w.write_record(&record)?;

    for k in 0..traj.len() {
        let mut record = vec![(k + 1).to_string()];
        record.extend(traj.states[k].iter().map(|v| v.to_string()));
        record.extend(traj.inputs[k].iter().map(|v| v.to_string()));
        if n_o > 0 {
            record.extend(traj.outputs[k].iter().map(|v| v.to_string()));
        }
        if let Some(targets) = &traj.targets {
            record.extend(targets[k].iter().map(|v| v.to_string()));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(BufReader::new(std::fs::File::open(path)?));
    let header = r.headers()?.clone();
    let count_prefix = |p: &str| header.iter().filter(|h| h.starts_with(p)).count();
    let (n_r, n_i, n_o, n_y) =
        (count_prefix("x_"), count_prefix("u_"), count_prefix("z_"), count_prefix("y_"));
    if n_r == 0 {
        return Err(EnaError::DimensionMismatch("trajectory csv has no x_ columns".into()));
    }

    let parse_slice = |rec: &csv::StringRecord, from: usize, n: usize| -> Result<DVector<f64>> {
        let mut v = DVector::zeros(n);
        for i in 0..n {
            let cell = rec.get(from + i).unwrap_or("");
            v[i] = cell
                .parse::<f64>()
                .map_err(|e| EnaError::Other(format!("bad float {cell:?} in trajectory csv: {e}")))?;
        }
        Ok(v)
    };

    let mut initial_state = DVector::zeros(n_r);
    let mut states = Vec::new();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut targets = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let x = parse_slice(&rec, 1, n_r)?;
        if row == 0 {
            initial_state = x;
            continue;
        }
        states.push(x);
        inputs.push(parse_slice(&rec, 1 + n_r, n_i)?);
        if n_o > 0 {
            outputs.push(parse_slice(&rec, 1 + n_r + n_i, n_o)?);
        }
        if n_y > 0 {
            targets.push(parse_slice(&rec, 1 + n_r + n_i + n_o, n_y)?);
        }
    }
    Ok(Trajectory {
        initial_state,
        states,
        inputs,
        outputs,
        targets: (n_y > 0).then_some(targets),
    })
}

/// Task CSV: `step, u_*, y_*`, steps 1-based.
pub fn write_task_csv(path: &Path, data: &TaskData) -> Result<()> {
    let k = data.bits();
    let mut w = csv::Writer::from_writer(BufWriter::new(std::fs::File::create(path)?));
    let mut header = vec!["step".to_string()];
    header.extend((1..=k).map(|i| format!("u_{i}")));
    header.extend((1..=k).map(|i| format!("y_{i}")));
    w.write_record(&header)?;
    for step in 0..data.len() {
        let mut record = vec![(step + 1).to_string()];
        record.extend(data.inputs[step].iter().map(|v| v.to_string()));
        record.extend(data.targets[step].iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FixedPointEntry {
    pub location: Vec<f64>,
    pub energy: f64,
    /// Eigenvalues as (re, im) pairs.
    pub spectrum: Vec<(f64, f64)>,
    pub unstable_count: usize,
    pub stability: String,
    pub marginal: bool,
    pub cluster_size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GhostEntry {
    pub location: Vec<f64>,
    pub energy: f64,
    pub start_index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FixedPointsFile {
    pub n_starts: usize,
    pub tol: f64,
    pub seed: u64,
    pub n_candidates: usize,
    pub failed_starts: usize,
    pub points: Vec<FixedPointEntry>,
    pub ghosts: Vec<GhostEntry>,
}

impl FixedPointsFile {
    pub fn new(
        cfg: &crate::fixed_points::SearchConfig,
        outcome: &SearchOutcome,
        points: &[FixedPoint],
    ) -> Self {
        Self {
            n_starts: cfg.n_starts,
            tol: cfg.tol,
            seed: cfg.seed,
            n_candidates: outcome.candidates.len(),
            failed_starts: outcome.failed_starts,
            points: points.iter().map(fixed_point_entry).collect(),
            ghosts: outcome
                .ghosts
                .iter()
                .map(|g: &Candidate| GhostEntry {
                    location: g.location.iter().copied().collect(),
                    energy: g.energy,
                    start_index: g.start_index,
                })
                .collect(),
        }
    }

    pub fn points(&self) -> Vec<FixedPoint> {
        self.points
            .iter()
            .map(|e| FixedPoint {
                location: DVector::from_vec(e.location.clone()),
                energy: e.energy,
                spectrum: e.spectrum.iter().map(|&(re, im)| Complex::new(re, im)).collect(),
                unstable_count: e.unstable_count,
                stability: Stability::from_unstable_count(e.unstable_count, e.location.len()),
                marginal: e.marginal,
                cluster_size: e.cluster_size,
            })
            .collect()
    }
}

fn fixed_point_entry(fp: &FixedPoint) -> FixedPointEntry {
    FixedPointEntry {
        location: fp.location.iter().copied().collect(),
        energy: fp.energy,
        spectrum: fp.spectrum.iter().map(|c| (c.re, c.im)).collect(),
        unstable_count: fp.unstable_count,
        stability: fp.stability.to_string(),
        marginal: fp.marginal,
        cluster_size: fp.cluster_size,
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LssEntry {
    pub dim: usize,
    pub dim_at_target: usize,
    pub variance_target: f64,
    pub n_local_pdvs: usize,
    /// Leading variance fractions (up to ten).
    pub explained: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnaNodeEntry {
    pub id: usize,
    pub location: Vec<f64>,
    pub output: Vec<f64>,
    pub energy: f64,
    pub discovered: bool,
    pub pattern: Option<Vec<i8>>,
    pub spurious: bool,
    pub lss: Option<LssEntry>,
    pub grid: Option<GridStats>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnaEdgeEntry {
    pub from: usize,
    pub to: usize,
    pub threshold: f64,
    pub volume_ratio: f64,
    pub effective_excitability: f64,
    pub count: usize,
    pub class: Option<EdgeClass>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnaGraphFile {
    pub nodes: Vec<EnaNodeEntry>,
    pub edges: Vec<EnaEdgeEntry>,
    pub warnings: Vec<String>,
}

impl EnaGraphFile {
    pub fn from_graph(graph: &EnaGraph, variance_target: f64) -> Self {
        Self {
            nodes: graph
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| EnaNodeEntry {
                    id,
                    location: n.location.iter().copied().collect(),
                    output: n.output.iter().copied().collect(),
                    energy: n.energy,
                    discovered: n.discovered,
                    pattern: n.pattern.clone(),
                    spurious: n.spurious,
                    lss: n.lss.as_ref().map(|l| LssEntry {
                        dim: l.dim(),
                        dim_at_target: l.dim_for_target(variance_target),
                        variance_target,
                        n_local_pdvs: l.n_local,
                        explained: l.explained.iter().take(10).copied().collect(),
                    }),
                    grid: n.grid,
                })
                .collect(),
            edges: graph
                .edges
                .iter()
                .map(|e| EnaEdgeEntry {
                    from: e.from,
                    to: e.to,
                    threshold: e.threshold,
                    volume_ratio: e.volume_ratio,
                    effective_excitability: e.effective_excitability,
                    count: e.count,
                    class: e.class,
                })
                .collect(),
            warnings: graph.warnings.clone(),
        }
    }

    /// Rebuilds the in-memory graph (LSS bases are not persisted).
    pub fn into_graph(self) -> EnaGraph {
        EnaGraph {
            nodes: self
                .nodes
                .into_iter()
                .map(|n| EnaNode {
                    location: DVector::from_vec(n.location),
                    output: DVector::from_vec(n.output),
                    energy: n.energy,
                    discovered: n.discovered,
                    pattern: n.pattern,
                    spurious: n.spurious,
                    lss: None,
                    grid: n.grid,
                })
                .collect(),
            edges: self
                .edges
                .into_iter()
                .map(|e| EnaEdge {
                    from: e.from,
                    to: e.to,
                    threshold: e.threshold,
                    volume_ratio: e.volume_ratio,
                    effective_excitability: e.effective_excitability,
                    count: e.count,
                    class: e.class,
                })
                .collect(),
            warnings: self.warnings,
        }
    }
}

/// DOT export with nodes labelled by their outputs and edges carrying all
/// three weights. Desired edges are solid, undesired dashed; spurious nodes
/// are boxed and grey.
pub fn write_dot(path: &Path, graph: &EnaGraph) -> Result<()> {
    let mut out = String::from("digraph ena {\n    rankdir=LR;\n    node [shape=ellipse];\n");
    for (i, n) in graph.nodes.iter().enumerate() {
        let label: Vec<String> = n.output.iter().map(|v| format!("{v:.2}")).collect();
        let mut attrs = format!("label=\"({})\"", label.join(", "));
        if n.spurious {
            attrs.push_str(", shape=box, color=gray50, fontcolor=gray50");
        }
        out.push_str(&format!("    n{i} [{attrs}];\n"));
    }
    for e in &graph.edges {
        let style = match e.class {
            Some(EdgeClass::Undesired) => ", style=dashed",
            _ => "",
        };
        out.push_str(&format!(
            "    n{} -> n{} [label=\"δ={:.3}, ν={:.3}, β={:.3}\"{style}];\n",
            e.from, e.to, e.threshold, e.volume_ratio, e.effective_excitability
        ));
    }
    out.push_str("}\n");
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::make_design_2d;
    use crate::esn::{build_random_esn, run_closed_loop};
    use crate::task::{self, TaskConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn model_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        use rand::Rng;
        let model = build_random_esn(12, 2, 2, 0.3, 0.8, 0.9, 1e-4, 5)
            .unwrap()
            .with_readout(DMatrix::from_fn(2, 12, |_, _| rng.random_range(-1.0..1.0)))
            .unwrap();
        save_model(&path, &model).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn model_json_has_seed_and_provenance() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = build_random_esn(4, 1, 1, 0.0, 0.5, 1.0, 0.0, 77).unwrap();
        save_model(&path, &model).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"seed\": 77"));
        assert!(text.contains("build_random_esn"));
    }

    #[test]
    fn trajectory_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let model = make_design_2d(0.2).unwrap();
        let tr = model.trained_reservoir().unwrap();
        let data =
            task::generate(&TaskConfig { bits: 2, pulse_prob: 0.2, length: 50, seed: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traj = run_closed_loop(
            &model,
            &tr,
            &data.inputs,
            Some(&data.targets),
            &DVector::from_vec(vec![1.0, 1.0]),
            0.0,
            &mut rng,
        )
        .unwrap();
        write_trajectory_csv(&path, &traj).unwrap();
        let loaded = read_trajectory_csv(&path).unwrap();
        assert_eq!(loaded.len(), traj.len());
        assert_eq!(loaded.initial_state, traj.initial_state);
        for k in 0..traj.len() {
            assert_eq!(loaded.states[k], traj.states[k]);
            assert_eq!(loaded.inputs[k], traj.inputs[k]);
            assert_eq!(loaded.outputs[k], traj.outputs[k]);
        }
        assert_eq!(loaded.targets.as_ref().unwrap(), traj.targets.as_ref().unwrap());
    }

    #[test]
    fn task_csv_layout() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("task.csv");
        let data =
            task::generate(&TaskConfig { bits: 2, pulse_prob: 0.3, length: 5, seed: 8 }).unwrap();
        write_task_csv(&path, &data).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "step,u_1,u_2,y_1,y_2");
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn dot_output_contains_weights() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ena.dot");
        let graph = EnaGraph {
            nodes: vec![
                EnaNode {
                    location: DVector::from_vec(vec![1.0, 1.0]),
                    output: DVector::from_vec(vec![0.97, 0.97]),
                    energy: 0.0,
                    discovered: false,
                    pattern: Some(vec![1, 1]),
                    spurious: false,
                    lss: None,
                    grid: None,
                },
                EnaNode {
                    location: DVector::from_vec(vec![-1.0, 1.0]),
                    output: DVector::from_vec(vec![-0.97, 0.97]),
                    energy: 0.0,
                    discovered: false,
                    pattern: Some(vec![-1, 1]),
                    spurious: false,
                    lss: None,
                    grid: None,
                },
            ],
            edges: vec![EnaEdge {
                from: 0,
                to: 1,
                threshold: 1.39,
                volume_ratio: 0.4,
                effective_excitability: 0.4 / 1.39,
                count: 100,
                class: Some(EdgeClass::Desired),
            }],
            warnings: vec![],
        };
        write_dot(&path, &graph).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("digraph"));
        assert!(text.contains("δ=1.390"));
        assert!(text.contains("ν=0.400"));
        assert!(text.contains("β=0.288"));
    }
}
