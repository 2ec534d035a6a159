//! Excitable network attractor extraction.
//!
//! From a driven trajectory and the stable fixed points of the autonomous
//! map, this module: collects pulse difference vectors (PDVs), builds a
//! local switching subspace (LSS) per attractor from the leading principal
//! components of its local PDVs, lays a regular grid over a hypercube in
//! each LSS, classifies the omega-limit of every grid point, and assembles a
//! weighted directed graph. Edge weights are the estimated input-driven
//! excitability threshold (minimum distance from the anchor to a grid point
//! escaping to the target basin), the volume ratio of escaping points, and
//! their quotient, the effective excitability.

use crate::bfgs::{self, BfgsOptions};
use crate::error::{EnaError, Result};
use crate::esn::{TrainedReservoir, Trajectory};
use crate::fixed_points::{classify, FixedPoint, VelocityField};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// State difference across one input pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdv {
    /// Post-pulse state minus pre-pulse state.
    pub vector: DVector<f64>,
    /// The state the pulse acted on.
    pub origin_state: DVector<f64>,
    pub pulse: DVector<f64>,
    pub step: usize,
}

/// One PDV per nonzero-input step of the trajectory.
pub fn collect_pdvs(traj: &Trajectory) -> Vec<Pdv> {
    let mut pdvs = Vec::new();
    for k in 0..traj.len() {
        if traj.inputs[k].iter().any(|&v| v != 0.0) {
            let before = traj.state_before(k);
            pdvs.push(Pdv {
                vector: &traj.states[k] - before,
                origin_state: before.clone(),
                pulse: traj.inputs[k].clone(),
                step: k,
            });
        }
    }
    pdvs
}

/// Local switching subspace of one attractor: an orthonormal basis of the
/// leading principal directions of the local PDVs, anchored on the
/// attractor.
#[derive(Debug, Clone, PartialEq)]
pub struct Lss {
    pub anchor: DVector<f64>,
    /// Orthonormal basis vectors, strongest component first.
    pub basis: Vec<DVector<f64>>,
    /// Variance fraction per principal direction (full spectrum, not just
    /// the retained ones).
    pub explained: Vec<f64>,
    /// Radius of the PDV selection ball (infinity norm).
    pub radius: f64,
    /// Number of local PDVs the analysis used.
    pub n_local: usize,
}

impl Lss {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Smallest number of components whose cumulative variance fraction
    /// reaches `target` (uncapped; may exceed the retained basis size).
    pub fn dim_for_target(&self, target: f64) -> usize {
        let mut acc = 0.0;
        for (i, f) in self.explained.iter().enumerate() {
            acc += f;
            if acc >= target {
                return i + 1;
            }
        }
        self.explained.len()
    }
}

/// Principal-component analysis of the PDVs originating within the ball of
/// radius `radius` (infinity norm) around `anchor`. The basis keeps up to
/// `max_dim` directions so a grid of the configured dimension always fits;
/// the variance-based dimension is available via [`Lss::dim_for_target`].
///
/// The second-moment decomposition is uncentered: PDVs are displacements
/// anchored at the attractor, and their span is what the grid must cover.
pub fn build_lss(
    anchor: &DVector<f64>,
    pdvs: &[Pdv],
    radius: f64,
    max_dim: usize,
    label: &str,
) -> Result<Lss> {
    let local: Vec<&Pdv> = pdvs
        .iter()
        .filter(|p| inf_dist(&p.origin_state, anchor) <= radius)
        .collect();
    if local.len() < 2 {
        return Err(EnaError::StarvedAttractor { label: label.to_string(), found: local.len() });
    }
    let n = anchor.len();
    let mut a = DMatrix::zeros(local.len(), n);
    for (r, p) in local.iter().enumerate() {
        a.row_mut(r).copy_from(&p.vector.transpose());
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());

    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let explained: Vec<f64> = if total > 0.0 {
        order.iter().map(|&i| svd.singular_values[i].powi(2) / total).collect()
    } else {
        vec![0.0; order.len()]
    };

    let sigma_max = svd.singular_values[order[0]];
    let mut basis = Vec::new();
    for &i in &order {
        if basis.len() >= max_dim {
            break;
        }
        if svd.singular_values[i] <= 1e-12 * sigma_max.max(1.0) {
            break;
        }
        basis.push(v_t.row(i).transpose());
    }
    if basis.is_empty() {
        return Err(EnaError::StarvedAttractor { label: label.to_string(), found: local.len() });
    }
    Ok(Lss { anchor: anchor.clone(), basis, explained, radius, n_local: local.len() })
}

/// Hypercube sampling parameters: dimension, edge length, points per edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub edge_length: f64,
    pub points_per_edge: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(EnaError::InvalidParameter("grid dimension must be >= 1".into()));
        }
        if self.edge_length <= 0.0 {
            return Err(EnaError::InvalidParameter("grid edge length must be positive".into()));
        }
        if self.points_per_edge < 2 {
            return Err(EnaError::InvalidParameter("need at least two points per edge".into()));
        }
        Ok(())
    }

    /// Lattice spacing along one axis.
    pub fn spacing(&self) -> f64 {
        self.edge_length / (self.points_per_edge - 1) as f64
    }

    pub fn total_points(&self) -> usize {
        self.points_per_edge.pow(self.dim as u32)
    }
}

/// Regular lattice over the hypercube centred on the LSS anchor, mapped into
/// ambient space. Coordinates run over `[-edge/2, edge/2]` along each of the
/// first `spec.dim` basis directions; with an odd point count the anchor
/// itself is included.
pub fn grid_points(lss: &Lss, spec: &GridSpec) -> Result<Vec<DVector<f64>>> {
    spec.validate()?;
    let dim = spec.dim;
    if dim > lss.dim() {
        return Err(EnaError::InvalidParameter(format!(
            "grid dimension {dim} exceeds LSS dimension {}",
            lss.dim()
        )));
    }
    let zeta3 = spec.points_per_edge;
    let spacing = spec.spacing();
    let half = spec.edge_length / 2.0;
    let mut points = Vec::with_capacity(spec.total_points());
    let mut index = vec![0usize; dim];
    loop {
        let mut p = lss.anchor.clone();
        for (axis, &i) in index.iter().enumerate() {
            let coord = -half + i as f64 * spacing;
            p.axpy(coord, &lss.basis[axis], 1.0);
        }
        points.push(p);
        // Odometer increment.
        let mut axis = 0;
        loop {
            index[axis] += 1;
            if index[axis] < zeta3 {
                break;
            }
            index[axis] = 0;
            axis += 1;
            if axis == dim {
                return Ok(points);
            }
        }
    }
}

/// Where the forward orbit of a point ends up.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaOutcome {
    /// Converged onto the listed attractor with this index.
    Attractor(usize),
    /// Settled (displacement below tolerance) on a point matching no listed
    /// attractor; carries the final state as a new-equilibrium candidate.
    Converged(DVector<f64>),
    /// Still moving after the iteration budget.
    Unresolved,
}

/// Iterates the autonomous map from `start`. The orbit is assigned to
/// attractor j as soon as it is within `match_eps` (infinity norm) of it and
/// the per-step displacement is also below `match_eps`.
pub fn omega_limit(
    tr: &TrainedReservoir,
    start: &DVector<f64>,
    attractors: &[DVector<f64>],
    max_iters: usize,
    match_eps: f64,
) -> OmegaOutcome {
    let mut x = start.clone();
    let mut next = DVector::zeros(x.len());
    let mut disp = f64::INFINITY;
    for _ in 0..max_iters {
        tr.autonomous_step_into(&x, &mut next);
        disp = inf_dist(&next, &x);
        std::mem::swap(&mut x, &mut next);
        if disp <= match_eps {
            if let Some(j) = attractors.iter().position(|p| inf_dist(&x, p) <= match_eps) {
                return OmegaOutcome::Attractor(j);
            }
        }
    }
    if disp <= match_eps {
        OmegaOutcome::Converged(x)
    } else {
        OmegaOutcome::Unresolved
    }
}

/// Grid points evaluated per batch as matrix columns, so the recurrence runs
/// on matrix-matrix products instead of one matvec per point.
const OMEGA_CHUNK: usize = 64;

/// Batched [`omega_limit`] over many starts with a shared attractor list.
/// Outcomes are returned in start order regardless of chunking.
pub fn omega_limit_batch(
    tr: &TrainedReservoir,
    starts: &[DVector<f64>],
    attractors: &[DVector<f64>],
    max_iters: usize,
    match_eps: f64,
) -> Vec<OmegaOutcome> {
    starts
        .par_chunks(OMEGA_CHUNK)
        .flat_map_iter(|chunk| omega_chunk(tr, chunk, attractors, max_iters, match_eps))
        .collect()
}

fn omega_chunk(
    tr: &TrainedReservoir,
    chunk: &[DVector<f64>],
    attractors: &[DVector<f64>],
    max_iters: usize,
    match_eps: f64,
) -> Vec<OmegaOutcome> {
    let n = tr.n_reservoir();
    let width = chunk.len();
    let alpha = tr.leak_rate();
    let mut cur = DMatrix::zeros(n, width);
    for (c, p) in chunk.iter().enumerate() {
        cur.set_column(c, p);
    }
    let mut pre = DMatrix::zeros(n, width);
    // Column c of the working matrices holds the orbit of start
    // `origin[c]`; resolved columns are compacted away.
    let mut origin: Vec<usize> = (0..width).collect();
    let mut outcomes: Vec<OmegaOutcome> = vec![OmegaOutcome::Unresolved; width];
    let mut last_disp = vec![f64::INFINITY; width];
    let mut active = width;

    for _ in 0..max_iters {
        if active == 0 {
            break;
        }
        {
            let cur_v = cur.columns(0, active);
            let mut pre_v = pre.columns_mut(0, active);
            pre_v.gemm(1.0, tr.m(), &cur_v, 0.0);
        }
        let mut col = 0;
        while col < active {
            let mut disp = 0.0f64;
            for r in 0..n {
                let v = (1.0 - alpha) * cur[(r, col)] + alpha * pre[(r, col)].tanh();
                disp = disp.max((v - cur[(r, col)]).abs());
                cur[(r, col)] = v;
            }
            last_disp[col] = disp;
            let mut resolved = None;
            if disp <= match_eps {
                for (j, p) in attractors.iter().enumerate() {
                    let mut close = true;
                    for r in 0..n {
                        if (cur[(r, col)] - p[r]).abs() > match_eps {
                            close = false;
                            break;
                        }
                    }
                    if close {
                        resolved = Some(j);
                        break;
                    }
                }
            }
            if let Some(j) = resolved {
                outcomes[origin[col]] = OmegaOutcome::Attractor(j);
                active -= 1;
                if col != active {
                    let last = cur.column(active).into_owned();
                    cur.set_column(col, &last);
                    origin[col] = origin[active];
                    last_disp[col] = last_disp[active];
                }
            } else {
                col += 1;
            }
        }
    }

    for col in 0..active {
        outcomes[origin[col]] = if last_disp[col] <= match_eps {
            OmegaOutcome::Converged(cur.column(col).into_owned())
        } else {
            OmegaOutcome::Unresolved
        };
    }
    outcomes
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub grid: GridSpec,
    /// Infinity-norm radius for local PDV selection.
    pub radius: f64,
    /// Cumulative variance target reported for LSS dimensionality.
    pub variance_target: f64,
    /// Iteration budget per omega-limit evaluation.
    pub max_iters: usize,
    /// Attractor matching tolerance (infinity norm).
    pub match_eps: f64,
    /// Kinetic-energy tolerance for accepting discovered equilibria.
    pub energy_tol: f64,
    /// Whether grid points converging off the node list may add new nodes.
    pub augment: bool,
}

impl ExtractConfig {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            radius: 0.2,
            variance_target: 0.95,
            max_iters: 1000,
            match_eps: 1e-4,
            energy_tol: 1e-6,
            augment: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeClass {
    Desired,
    Undesired,
}

#[derive(Debug, Clone)]
pub struct EnaEdge {
    pub from: usize,
    pub to: usize,
    /// Estimated input-driven excitability threshold.
    pub threshold: f64,
    /// Fraction of escaping grid points that land in the target basin.
    pub volume_ratio: f64,
    /// volume_ratio / threshold.
    pub effective_excitability: f64,
    /// Grid points behind this edge.
    pub count: usize,
    pub class: Option<EdgeClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub total: usize,
    /// Points that returned to their own anchor.
    pub home: usize,
    pub unresolved: usize,
}

#[derive(Debug, Clone)]
pub struct EnaNode {
    pub location: DVector<f64>,
    pub output: DVector<f64>,
    pub energy: f64,
    /// Found by the grid search rather than supplied in the attractor list.
    pub discovered: bool,
    /// Output sign pattern when the output sits near one (+-1 per channel).
    pub pattern: Option<Vec<i8>>,
    pub spurious: bool,
    pub lss: Option<Lss>,
    pub grid: Option<GridStats>,
}

#[derive(Debug, Clone, Default)]
pub struct EnaGraph {
    pub nodes: Vec<EnaNode>,
    pub edges: Vec<EnaEdge>,
    pub warnings: Vec<String>,
}

impl EnaGraph {
    pub fn edge(&self, from: usize, to: usize) -> Option<&EnaEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn out_edges(&self, from: usize) -> impl Iterator<Item = &EnaEdge> {
        self.edges.iter().filter(move |e| e.from == from)
    }
}

/// Extracts the excitable network attractor.
///
/// Nodes are the stable members of `attractors` (plus any stable equilibria
/// the grids discover, when augmentation is on). For each node with a
/// buildable LSS, every grid point is classified by its omega-limit; the
/// resulting partition yields per-target thresholds, volume ratios, and
/// effective excitabilities. Unresolved points are excluded from both the
/// numerator and denominator of the volume ratio and reported in the node's
/// grid stats.
pub fn extract_ena(
    tr: &TrainedReservoir,
    readout: &DMatrix<f64>,
    attractors: &[FixedPoint],
    pdvs: &[Pdv],
    cfg: &ExtractConfig,
) -> Result<EnaGraph> {
    cfg.grid.validate()?;
    let stable: Vec<&FixedPoint> = attractors.iter().filter(|f| f.stability.is_stable()).collect();
    if stable.len() < 2 {
        return Err(EnaError::InvalidParameter(format!(
            "need at least two stable attractors, got {}",
            stable.len()
        )));
    }

    let mut warnings = Vec::new();
    let mut nodes: Vec<EnaNode> = Vec::new();
    for fp in &stable {
        nodes.push(make_node(fp.location.clone(), fp.energy, false, readout));
    }

    // Per grid point: Some(node index) once resolved; pending points keep
    // their last state so later passes can continue the orbit.
    let mut grids: Vec<Option<Vec<DVector<f64>>>> = vec![None; nodes.len()];
    let mut outcomes: Vec<Vec<PointState>> = vec![Vec::new(); nodes.len()];

    let mut pass = 0;
    loop {
        pass += 1;
        let node_locs: Vec<DVector<f64>> = nodes.iter().map(|n| n.location.clone()).collect();

        // Build LSS and grid for nodes that do not have one yet.
        for i in 0..nodes.len() {
            if grids[i].is_some() {
                continue;
            }
            let label = format!("node {i} (output {})", fmt_vec(&nodes[i].output));
            match build_lss(&nodes[i].location, pdvs, cfg.radius, cfg.grid.dim, &label) {
                Ok(lss) => {
                    let dim = cfg.grid.dim.min(lss.dim());
                    let spec = GridSpec { dim, ..cfg.grid };
                    let pts = grid_points(&lss, &spec)?;
                    outcomes[i] = pts.iter().map(|p| PointState::Pending(p.clone())).collect();
                    grids[i] = Some(pts);
                    nodes[i].lss = Some(lss);
                }
                Err(EnaError::StarvedAttractor { label, found }) => {
                    warnings.push(format!(
                        "{label}: only {found} local PDVs within radius {}; no outgoing edges",
                        cfg.radius
                    ));
                    grids[i] = Some(Vec::new());
                    outcomes[i] = Vec::new();
                }
                Err(e) => return Err(e),
            }
        }

        // Advance pending orbits against the current node list.
        for i in 0..outcomes.len() {
            let pending: Vec<usize> = outcomes[i]
                .iter()
                .enumerate()
                .filter(|(_, st)| matches!(st, PointState::Pending(_)))
                .map(|(j, _)| j)
                .collect();
            if pending.is_empty() {
                continue;
            }
            let starts: Vec<DVector<f64>> = pending
                .iter()
                .map(|&j| match &outcomes[i][j] {
                    PointState::Pending(x) => x.clone(),
                    _ => unreachable!(),
                })
                .collect();
            let results = omega_limit_batch(tr, &starts, &node_locs, cfg.max_iters, cfg.match_eps);
            for (&j, out) in pending.iter().zip(results) {
                outcomes[i][j] = match out {
                    OmegaOutcome::Attractor(t) => PointState::Resolved(t),
                    OmegaOutcome::Converged(x) => PointState::Settled(x),
                    OmegaOutcome::Unresolved => PointState::Stuck,
                };
            }
        }

        // Promote settled off-list points to new nodes.
        let mut added = false;
        if cfg.augment {
            let mut discovered: Vec<DVector<f64>> = Vec::new();
            for states in &outcomes {
                for st in states {
                    if let PointState::Settled(x) = st {
                        discovered.push(x.clone());
                    }
                }
            }
            for x in discovered {
                let polished = polish_equilibrium(tr, &x, cfg.energy_tol);
                let Some(loc) = polished else { continue };
                let is_new = nodes.iter().all(|n| inf_dist(&n.location, &loc) > cfg.match_eps);
                if !is_new {
                    continue;
                }
                match classify(tr, &loc, cfg.energy_tol) {
                    Ok(fp) if fp.stability.is_stable() => {
                        warnings.push(format!(
                            "grid search discovered a stable equilibrium with output {} not in the \
                             supplied attractor list",
                            fmt_vec(&(readout * &loc))
                        ));
                        nodes.push(make_node(loc, fp.energy, true, readout));
                        grids.push(None);
                        outcomes.push(Vec::new());
                        added = true;
                    }
                    _ => {}
                }
            }
        }

        // Settled points that match a (possibly new) node get resolved on
        // the next sweep; re-open them when the node list changed.
        if added {
            for states in outcomes.iter_mut() {
                for st in states.iter_mut() {
                    if let PointState::Settled(x) = st {
                        *st = PointState::Pending(x.clone());
                    }
                }
            }
        }

        if !added || pass >= 5 {
            break;
        }
    }

    // Assemble edges from the final partitions.
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        let Some(points) = &grids[i] else { continue };
        if points.is_empty() {
            continue;
        }
        let total = points.len();
        let mut home = 0usize;
        let mut unresolved = 0usize;
        let mut per_target: std::collections::BTreeMap<usize, (usize, f64)> = Default::default();
        for (j, st) in outcomes[i].iter().enumerate() {
            match st {
                PointState::Resolved(t) if *t == i => home += 1,
                PointState::Resolved(t) => {
                    let dist = (&points[j] - &nodes[i].location).norm();
                    let entry = per_target.entry(*t).or_insert((0, f64::INFINITY));
                    entry.0 += 1;
                    entry.1 = entry.1.min(dist);
                }
                _ => unresolved += 1,
            }
        }
        let denom = total - unresolved - home;
        nodes[i].grid = Some(GridStats { total, home, unresolved });
        if denom == 0 {
            warnings.push(format!(
                "node {i} (output {}): every resolved grid point returns home; no outgoing edges",
                fmt_vec(&nodes[i].output)
            ));
            continue;
        }
        for (t, (count, min_dist)) in per_target {
            let volume_ratio = count as f64 / denom as f64;
            edges.push(EnaEdge {
                from: i,
                to: t,
                threshold: min_dist,
                volume_ratio,
                effective_excitability: volume_ratio / min_dist,
                count,
                class: None,
            });
        }
    }

    Ok(EnaGraph { nodes, edges, warnings })
}

#[derive(Debug, Clone)]
enum PointState {
    Pending(DVector<f64>),
    Settled(DVector<f64>),
    Resolved(usize),
    Stuck,
}

fn make_node(location: DVector<f64>, energy: f64, discovered: bool, readout: &DMatrix<f64>) -> EnaNode {
    let output = readout * &location;
    EnaNode {
        location,
        output,
        energy,
        discovered,
        pattern: None,
        spurious: false,
        lss: None,
        grid: None,
    }
}

fn polish_equilibrium(tr: &TrainedReservoir, x: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let field = VelocityField::new(tr);
    let r = bfgs::minimize(
        |p| field.energy_and_gradient(p),
        x,
        &BfgsOptions { max_iters: 200, ..Default::default() },
    );
    let refined = crate::fixed_points::newton_refine(tr, &r.x);
    (field.energy(&refined) < tol).then_some(refined)
}

/// Labels nodes with their output sign patterns and classifies edges
/// against the flip-flop transition table: an edge is desired exactly when
/// both endpoints carry patterns, neither is spurious, and the patterns
/// differ in one bit. Nodes whose output is not within 0.5 of any sign
/// pattern, or whose pattern duplicates a closer node's, are marked
/// spurious.
pub fn label_edges(graph: &mut EnaGraph) {
    for node in graph.nodes.iter_mut() {
        let mut pattern = Vec::with_capacity(node.output.len());
        let mut ok = true;
        for &z in node.output.iter() {
            let sign: i8 = if z >= 0.0 { 1 } else { -1 };
            if (z - sign as f64).abs() > 0.5 {
                ok = false;
                break;
            }
            pattern.push(sign);
        }
        if ok {
            node.pattern = Some(pattern);
            node.spurious = false;
        } else {
            node.pattern = None;
            node.spurious = true;
        }
    }

    // Among nodes sharing a pattern, only the closest to the exact corner
    // keeps it as canonical.
    let mut by_pattern: std::collections::BTreeMap<Vec<i8>, Vec<usize>> = Default::default();
    for (i, node) in graph.nodes.iter().enumerate() {
        if let Some(p) = &node.pattern {
            by_pattern.entry(p.clone()).or_default().push(i);
        }
    }
    for (pattern, members) in by_pattern {
        if members.len() < 2 {
            continue;
        }
        let closest = members
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da = pattern_dist(&graph.nodes[a].output, &pattern);
                let db = pattern_dist(&graph.nodes[b].output, &pattern);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        for &m in &members {
            if m != closest {
                graph.nodes[m].spurious = true;
            }
        }
    }

    for edge in graph.edges.iter_mut() {
        let a = &graph.nodes[edge.from];
        let b = &graph.nodes[edge.to];
        let desired = match (&a.pattern, &b.pattern) {
            (Some(pa), Some(pb)) if !a.spurious && !b.spurious => {
                pa.iter().zip(pb).filter(|(x, y)| x != y).count() == 1
            }
            _ => false,
        };
        edge.class = Some(if desired { EdgeClass::Desired } else { EdgeClass::Undesired });
    }
}

fn pattern_dist(output: &DVector<f64>, pattern: &[i8]) -> f64 {
    output
        .iter()
        .zip(pattern)
        .map(|(z, &s)| (z - s as f64).abs())
        .fold(0.0, f64::max)
}

fn inf_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2}")).collect();
    format!("({})", parts.join(", "))
}
