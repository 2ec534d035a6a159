//! Fixed points of the trained autonomous map.
//!
//! Fixed points are the zeros of the velocity field `Q(x) = F(x) - x =
//! a [tanh(Mx) - x]`, found as minima of the kinetic energy `q = |Q|^2 / 2`
//! via BFGS with the analytic gradient `grad q = a (D(x) M - I)' Q(x)`.
//! Solutions from many starts are aggregated per Jacobian stability class by
//! k-means with Davies-Bouldin selection of the cluster count.

use crate::bfgs::{self, BfgsOptions, BfgsStatus};
use crate::cluster;
use crate::error::{EnaError, Result};
use crate::esn::{TrainedReservoir, Trajectory};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Eigenvalues this close to the unit circle are flagged as marginal.
pub const MARGINAL_BAND: f64 = 1e-9;
/// Candidates closer than this in infinity norm share one classification.
const CLASSIFY_DEDUPE: f64 = 1e-7;

/// The velocity field `Q` and kinetic energy `q` of a trained reservoir.
pub struct VelocityField<'a> {
    tr: &'a TrainedReservoir,
}

impl<'a> VelocityField<'a> {
    pub fn new(tr: &'a TrainedReservoir) -> Self {
        Self { tr }
    }

    /// `Q(x) = a [tanh(Mx) - x]`.
    pub fn velocity(&self, x: &DVector<f64>) -> DVector<f64> {
        let a = self.tr.leak_rate();
        let mut v = self.tr.m() * x;
        v.apply(|t| *t = t.tanh());
        v -= x;
        v *= a;
        v
    }

    /// `q(x) = |Q(x)|^2 / 2`.
    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.velocity(x).norm_squared()
    }

    /// Analytic gradient of the kinetic energy.
    pub fn energy_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.energy_and_gradient(x).1
    }

    /// Energy and gradient in one pass (two matrix-vector products).
    pub fn energy_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let a = self.tr.leak_rate();
        let m = self.tr.m();
        let mut t = m * x;
        t.apply(|v| *v = v.tanh());
        // Q = a (t - x); D = diag(1 - t^2).
        let q = a * (&t - x);
        let energy = 0.5 * q.norm_squared();
        let w = DVector::from_fn(x.len(), |i, _| (1.0 - t[i] * t[i]) * q[i]);
        let mut grad = m.tr_mul(&w);
        grad -= &q;
        grad *= a;
        (energy, grad)
    }

    /// Jacobian of the autonomous map, `J_F(x) = (1-a) I + a D(x) M`.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let a = self.tr.leak_rate();
        let m = self.tr.m();
        let n = x.len();
        let mut t = m * x;
        t.apply(|v| *v = v.tanh());
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let d = a * (1.0 - t[i] * t[i]);
            for j in 0..n {
                jac[(i, j)] = d * m[(i, j)];
            }
            jac[(i, i)] += 1.0 - a;
        }
        jac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    /// Saddle with the given number of unstable directions.
    Saddle(usize),
    Repeller,
}

impl Stability {
    pub fn from_unstable_count(unstable: usize, dim: usize) -> Self {
        if unstable == 0 {
            Stability::Stable
        } else if unstable == dim {
            Stability::Repeller
        } else {
            Stability::Saddle(unstable)
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable)
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Stable => write!(f, "stable"),
            Stability::Saddle(k) => write!(f, "saddle({k})"),
            Stability::Repeller => write!(f, "repeller"),
        }
    }
}

/// A located equilibrium with its residual energy and linearisation.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub location: DVector<f64>,
    pub energy: f64,
    pub spectrum: Vec<Complex<f64>>,
    pub unstable_count: usize,
    pub stability: Stability,
    /// Some eigenvalue sits within [`MARGINAL_BAND`] of the unit circle, so
    /// the stability call is not trustworthy.
    pub marginal: bool,
    /// Number of BFGS solutions this point aggregates.
    pub cluster_size: usize,
}

/// One accepted BFGS solution before aggregation.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub location: DVector<f64>,
    pub energy: f64,
    pub start_index: usize,
    pub iterations: usize,
}

/// Raw output of the multi-start search.
#[derive(Debug, Clone, Default)]
pub struct SearchOutcome {
    /// Solutions with energy below tolerance.
    pub candidates: Vec<Candidate>,
    /// Positive local minima (energy at or above tolerance): slow regions of
    /// the flow worth inspecting, not fixed points.
    pub ghosts: Vec<Candidate>,
    /// Starts dropped for non-convergence.
    pub failed_starts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchConfig {
    pub n_starts: usize,
    /// Kinetic-energy acceptance tolerance.
    pub tol: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Uniform per-coordinate jitter applied to each sampled start.
    /// Trajectories that switch basins in a single step never linger near
    /// saddles, so exploring around visited states is what exposes the
    /// unstable equilibria.
    pub start_jitter: f64,
}

impl SearchConfig {
    pub fn new(n_starts: usize, seed: u64) -> Self {
        Self { n_starts, tol: 1e-6, seed, max_iters: 500, grad_tol: 1e-10, start_jitter: 0.0 }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.start_jitter = jitter;
        self
    }
}

/// Multi-start BFGS minimisation of the kinetic energy, with starts sampled
/// uniformly (with replacement) from the trajectory states, optionally
/// jittered.
pub fn find_fixed_points(tr: &TrainedReservoir, traj: &Trajectory, cfg: &SearchConfig) -> Result<SearchOutcome> {
    if traj.is_empty() {
        return Err(EnaError::EmptyInput("trajectory has no states".into()));
    }
    if cfg.n_starts == 0 {
        return Ok(SearchOutcome::default());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<DVector<f64>> = (0..cfg.n_starts)
        .map(|_| {
            let mut x = traj.states[rng.random_range(0..traj.len())].clone();
            if cfg.start_jitter > 0.0 {
                for v in x.iter_mut() {
                    *v += rng.random_range(-cfg.start_jitter..cfg.start_jitter);
                }
            }
            x
        })
        .collect();
    let opts = BfgsOptions { max_iters: cfg.max_iters, grad_tol: cfg.grad_tol, ..Default::default() };

    let runs: Vec<(usize, bfgs::BfgsResult)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let field = VelocityField::new(tr);
            let r = bfgs::minimize(|x| field.energy_and_gradient(x), s, &opts);
            (i, r)
        })
        .collect();

    let mut outcome = SearchOutcome::default();
    for (start_index, r) in runs {
        let candidate = Candidate {
            location: r.x,
            energy: r.value,
            start_index,
            iterations: r.iterations,
        };
        if r.value < cfg.tol {
            // Below tolerance counts regardless of the stopping reason; at
            // machine-precision minima the line search has nowhere to go.
            outcome.candidates.push(candidate);
        } else if r.status == BfgsStatus::GradientConverged {
            outcome.ghosts.push(candidate);
        } else {
            outcome.failed_starts += 1;
        }
    }
    Ok(outcome)
}

/// Newton iteration on the velocity field, `x <- x - J_Q(x)^-1 Q(x)`.
///
/// The kinetic-energy landscape is nearly flat around weakly contracting
/// equilibria, so quasi-Newton minimisation can stall within the energy
/// tolerance yet noticeably off the root; a few Newton steps sharpen such
/// points to machine precision. Returns the best iterate seen.
pub fn newton_refine(tr: &TrainedReservoir, x0: &DVector<f64>) -> DVector<f64> {
    let field = VelocityField::new(tr);
    let alpha = tr.leak_rate();
    let m = tr.m();
    let n = x0.len();
    let mut x = x0.clone();
    let mut best = x.clone();
    let mut best_norm = field.velocity(&x).amax();
    for _ in 0..12 {
        if best_norm < 1e-13 {
            break;
        }
        let q = field.velocity(&x);
        // J_Q = alpha (D(x) M - I).
        let mut t = m * &x;
        t.apply(|v| *v = v.tanh());
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let d = alpha * (1.0 - t[i] * t[i]);
            for j in 0..n {
                jac[(i, j)] = d * m[(i, j)];
            }
            jac[(i, i)] -= alpha;
        }
        let lu = jac.lu();
        let Some(step) = lu.solve(&q) else { break };
        x -= &step;
        let norm = field.velocity(&x).amax();
        if norm < best_norm {
            best_norm = norm;
            best.copy_from(&x);
        } else {
            break;
        }
    }
    best
}

/// Full linear classification of one equilibrium candidate.
pub fn classify(tr: &TrainedReservoir, location: &DVector<f64>, tol: f64) -> Result<FixedPoint> {
    let field = VelocityField::new(tr);
    let energy = field.energy(location);
    if energy >= tol {
        return Err(EnaError::EnergyAboveTolerance { energy, tol });
    }
    let spectrum: Vec<Complex<f64>> = field
        .jacobian(location)
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    let unstable_count = spectrum.iter().filter(|c| c.norm() > 1.0).count();
    let marginal = spectrum.iter().any(|c| (c.norm() - 1.0).abs() <= MARGINAL_BAND);
    Ok(FixedPoint {
        stability: Stability::from_unstable_count(unstable_count, location.len()),
        location: location.clone(),
        energy,
        spectrum,
        unstable_count,
        marginal,
        cluster_size: 1,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AggregateConfig {
    /// Energy tolerance candidates were accepted at.
    pub tol: f64,
    /// Davies-Bouldin sweep cap (clamped to the group size).
    pub k_max: usize,
    /// Representatives closer than this in infinity norm are merged.
    pub merge_tol: f64,
    pub seed: u64,
}

impl AggregateConfig {
    pub fn new(tol: f64, seed: u64) -> Self {
        Self { tol, k_max: 10, merge_tol: 1e-5, seed }
    }
}

/// Aggregates raw candidates into a non-redundant fixed-point set: grouped
/// by unstable direction count, clustered per group with the cluster count
/// picked by Davies-Bouldin, represented by the member nearest each
/// centroid, then near-duplicate representatives merged.
pub fn aggregate(tr: &TrainedReservoir, candidates: &[Candidate], cfg: &AggregateConfig) -> Result<Vec<FixedPoint>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }

    // Nearly identical candidates share one Jacobian classification.
    let mut rep_index: Vec<usize> = Vec::new();
    let mut assignment = vec![0usize; candidates.len()];
    for (i, c) in candidates.iter().enumerate() {
        let found = rep_index
            .iter()
            .position(|&r| inf_dist(&candidates[r].location, &c.location) <= CLASSIFY_DEDUPE);
        match found {
            Some(pos) => {
                assignment[i] = pos;
                if c.energy < candidates[rep_index[pos]].energy {
                    rep_index[pos] = i;
                }
            }
            None => {
                assignment[i] = rep_index.len();
                rep_index.push(i);
            }
        }
    }
    let rep_class: Vec<FixedPoint> = rep_index
        .par_iter()
        .map(|&r| classify(tr, &candidates[r].location, cfg.tol))
        .collect::<Result<_>>()?;

    // Group candidate indices by the unstable count of their representative.
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, &rep) in assignment.iter().enumerate() {
        groups.entry(rep_class[rep].unstable_count).or_default().push(i);
    }

    // Within each stability group, cluster and keep the member closest to
    // each centroid.
    let mut reps: Vec<(usize, usize)> = Vec::new(); // (candidate index, cluster size)
    for (gi, (_, members)) in groups.iter().enumerate() {
        if members.len() == 1 {
            reps.push((members[0], 1));
            continue;
        }
        let points: Vec<DVector<f64>> = members.iter().map(|&i| candidates[i].location.clone()).collect();
        let k_max = cfg.k_max.min(points.len());
        let run = cluster::select_k_davies_bouldin(&points, k_max, cfg.seed.wrapping_add(gi as u64));
        for (c, centroid) in run.centroids.iter().enumerate() {
            let cluster_members: Vec<usize> = members
                .iter()
                .enumerate()
                .filter(|(pi, _)| run.assignments[*pi] == c)
                .map(|(_, &i)| i)
                .collect();
            if cluster_members.is_empty() {
                continue;
            }
            let best = cluster_members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let da = (&candidates[a].location - centroid).norm();
                    let db = (&candidates[b].location - centroid).norm();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            reps.push((best, cluster_members.len()));
        }
    }

    // Sharpen each representative on the velocity field, then merge
    // near-duplicates; stalled quasi-Newton solutions from one equilibrium
    // collapse onto it here.
    let polished: Vec<(DVector<f64>, usize)> = reps
        .par_iter()
        .map(|&(idx, size)| (newton_refine(tr, &candidates[idx].location), size))
        .collect();
    let mut merged: Vec<(DVector<f64>, usize)> = Vec::new();
    for (loc, size) in polished {
        match merged.iter_mut().find(|(m, _)| inf_dist(m, &loc) <= cfg.merge_tol) {
            Some((_, total)) => *total += size,
            None => merged.push((loc, size)),
        }
    }

    let mut out: Vec<FixedPoint> = merged
        .par_iter()
        .map(|(loc, size)| {
            classify(tr, loc, cfg.tol).map(|mut fp| {
                fp.cluster_size = *size;
                fp
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| {
        a.unstable_count
            .cmp(&b.unstable_count)
            .then_with(|| lex_cmp(&a.location, &b.location))
    });
    Ok(out)
}

fn inf_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esn::EsnModel;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// 2-neuron coupled design: M = 3 [[1, b], [b, 1]], identity readout.
    fn coupled_2d(b: f64, alpha: f64) -> TrainedReservoir {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 3.0 * b, 3.0 * b, 3.0]);
        EsnModel::new(m, DMatrix::identity(2, 2), DMatrix::zeros(2, 2), alpha, 0.0)
            .unwrap()
            .with_readout(DMatrix::identity(2, 2))
            .unwrap()
            .trained_reservoir()
            .unwrap()
    }

    fn random_trained(n: usize, seed: u64) -> TrainedReservoir {
        let model = crate::esn::build_random_esn(n, 2, 2, 0.6, 0.9, 1.0, 0.0, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let w_o = DMatrix::from_fn(2, n, |_, _| rng.random_range(-0.5..0.5));
        model.with_readout(w_o).unwrap().trained_reservoir().unwrap()
    }

    #[test]
    fn energy_zero_at_origin() {
        let tr = random_trained(20, 1);
        let field = VelocityField::new(&tr);
        assert_eq!(field.energy(&DVector::zeros(20)), 0.0);
    }

    #[test]
    fn energy_matches_direct_formula() {
        // q(x) must equal |F(x) - x|^2 / 2 evaluated through the map itself.
        let tr = coupled_2d(0.2, 1.0);
        let field = VelocityField::new(&tr);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = DVector::from_fn(2, |_, _| rng.random_range(-1.2..1.2));
            let direct = 0.5 * (tr.autonomous_step(&x) - &x).norm_squared();
            assert_relative_eq!(field.energy(&x), direct, max_relative = 1e-14);
        }
    }

    #[test]
    fn velocity_is_map_displacement() {
        let tr = random_trained(15, 3);
        let field = VelocityField::new(&tr);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = DVector::from_fn(15, |_, _| rng.random_range(-1.0..1.0));
        let q = field.velocity(&x);
        let disp = tr.autonomous_step(&x) - &x;
        assert_relative_eq!(q, disp, epsilon = 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let tr = random_trained(25, 7);
        let field = VelocityField::new(&tr);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = 1e-6;
        for _ in 0..10 {
            let x = DVector::from_fn(25, |_, _| rng.random_range(-1.0..1.0));
            let grad = field.energy_gradient(&x);
            let mut fd = DVector::zeros(25);
            for i in 0..25 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (field.energy(&xp) - field.energy(&xm)) / (2.0 * h);
            }
            let rel = (&grad - &fd).norm() / fd.norm();
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn gradient_zero_at_fixed_point() {
        let tr = coupled_2d(0.2, 1.0);
        // Iterate to the (+,+) attractor.
        let mut x = DVector::from_vec(vec![0.9, 0.9]);
        for _ in 0..200 {
            x = tr.autonomous_step(&x);
        }
        let field = VelocityField::new(&tr);
        assert!(field.energy_gradient(&x).norm() < 1e-12);
    }

    #[test]
    fn gradient_scales_with_alpha_squared() {
        // Q carries one factor of alpha and J_Q another, so grad q ~ alpha^2
        // at fixed M and x.
        let tr1 = coupled_2d(0.2, 1.0);
        let tr2 = coupled_2d(0.2, 0.5);
        let f1 = VelocityField::new(&tr1);
        let f2 = VelocityField::new(&tr2);
        let x = DVector::from_vec(vec![0.3, -0.4]);
        let g1 = f1.energy_gradient(&x);
        let g2 = f2.energy_gradient(&x);
        assert_relative_eq!(g2, 0.25 * g1, max_relative = 1e-12);
    }

    #[test]
    fn origin_of_coupled_design_is_repeller() {
        // Eigenvalues of M are 3 (1 +- b): both above one at b = 0.2.
        let tr = coupled_2d(0.2, 1.0);
        let fp = classify(&tr, &DVector::zeros(2), 1e-6).unwrap();
        assert_eq!(fp.stability, Stability::Repeller);
        assert_eq!(fp.unstable_count, 2);
        let mut mods: Vec<f64> = fp.spectrum.iter().map(|c| c.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(mods[0], 2.4, max_relative = 1e-12);
        assert_relative_eq!(mods[1], 3.6, max_relative = 1e-12);
    }

    #[test]
    fn corner_attractors_are_stable() {
        let tr = coupled_2d(0.2, 1.0);
        for signs in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let mut x = DVector::from_vec(vec![0.9 * signs[0], 0.9 * signs[1]]);
            for _ in 0..300 {
                x = tr.autonomous_step(&x);
            }
            let fp = classify(&tr, &x, 1e-6).unwrap();
            assert!(fp.stability.is_stable(), "at {x:?}: {:?}", fp.stability);
        }
    }

    #[test]
    fn classify_rejects_non_fixed_point() {
        let tr = coupled_2d(0.2, 1.0);
        let x = DVector::from_vec(vec![0.5, -0.1]);
        assert!(matches!(
            classify(&tr, &x, 1e-6),
            Err(EnaError::EnergyAboveTolerance { .. })
        ));
    }

    #[test]
    fn zero_starts_empty_outcome() {
        let tr = coupled_2d(0.2, 1.0);
        let traj = Trajectory {
            initial_state: DVector::zeros(2),
            states: vec![DVector::from_vec(vec![0.5, 0.5])],
            inputs: vec![DVector::zeros(2)],
            outputs: vec![],
            targets: None,
        };
        let out = find_fixed_points(&tr, &traj, &SearchConfig::new(0, 1)).unwrap();
        assert!(out.candidates.is_empty() && out.ghosts.is_empty());
    }

    #[test]
    fn near_duplicates_aggregate_to_one() {
        let tr = coupled_2d(0.2, 1.0);
        // The (+,+) attractor, jittered far below the merge tolerance.
        let mut x = DVector::from_vec(vec![0.9, 0.9]);
        for _ in 0..300 {
            x = tr.autonomous_step(&x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let candidates: Vec<Candidate> = (0..100)
            .map(|i| {
                let jitter = DVector::from_fn(2, |_, _| rng.random_range(-1e-9..1e-9));
                Candidate { location: &x + jitter, energy: 1e-18, start_index: i, iterations: 10 }
            })
            .collect();
        let fps = aggregate(&tr, &candidates, &AggregateConfig::new(1e-6, 9)).unwrap();
        assert_eq!(fps.len(), 1);
        assert_eq!(fps[0].cluster_size, 100);
        assert!(fps[0].stability.is_stable());
    }

    #[test]
    fn aggregated_points_are_sharp() {
        // Every aggregated representative satisfies the infinity-norm
        // residual bound, well past the raw energy tolerance.
        let tr = coupled_2d(0.2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let states: Vec<DVector<f64>> =
            (0..300).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.2..1.2))).collect();
        let traj = Trajectory {
            initial_state: DVector::zeros(2),
            inputs: vec![DVector::zeros(2); states.len()],
            outputs: vec![],
            targets: None,
            states,
        };
        let tol = 1e-6;
        let out = find_fixed_points(&tr, &traj, &SearchConfig::new(120, 3)).unwrap();
        let fps = aggregate(&tr, &out.candidates, &AggregateConfig::new(tol, 3)).unwrap();
        assert!(!fps.is_empty());
        let field = VelocityField::new(&tr);
        for fp in &fps {
            let residual = field.velocity(&fp.location).amax();
            assert!(residual < 10.0 * tol, "residual {residual}");
        }
    }

    #[test]
    fn seeds_agree_on_designed_model() {
        let tr = coupled_2d(0.2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let states: Vec<DVector<f64>> =
            (0..400).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0))).collect();
        let traj = Trajectory {
            initial_state: DVector::zeros(2),
            inputs: vec![DVector::zeros(2); states.len()],
            outputs: vec![],
            targets: None,
            states,
        };
        let run = |seed: u64| {
            let out = find_fixed_points(&tr, &traj, &SearchConfig::new(200, seed)).unwrap();
            aggregate(&tr, &out.candidates, &AggregateConfig::new(1e-6, seed)).unwrap()
        };
        let a = run(1);
        let b = run(2);
        assert_eq!(a.len(), b.len());
        for fa in &a {
            assert!(
                b.iter().any(|fb| inf_dist(&fa.location, &fb.location) < 1e-4),
                "unmatched point across seeds"
            );
        }
    }

    #[test]
    fn newton_refine_sharpens_sloppy_point() {
        let tr = coupled_2d(0.2, 1.0);
        let mut x = DVector::from_vec(vec![0.9, 0.9]);
        for _ in 0..3 {
            x = tr.autonomous_step(&x);
        }
        // Part-way converged: residual well above machine precision.
        let field = VelocityField::new(&tr);
        assert!(field.velocity(&x).amax() > 1e-8);
        let refined = newton_refine(&tr, &x);
        assert!(field.velocity(&refined).amax() < 1e-12);
    }

    #[test]
    fn alpha_does_not_move_fixed_points() {
        // Same M under alpha = 1 and alpha = 0.5: identical aggregated sets.
        let find = |alpha: f64| {
            let tr = coupled_2d(0.2, alpha);
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let states: Vec<DVector<f64>> =
                (0..400).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0))).collect();
            let traj = Trajectory {
                initial_state: DVector::zeros(2),
                inputs: vec![DVector::zeros(2); states.len()],
                outputs: vec![],
                targets: None,
                states,
            };
            let out = find_fixed_points(&tr, &traj, &SearchConfig::new(150, 5)).unwrap();
            aggregate(&tr, &out.candidates, &AggregateConfig::new(1e-6, 5)).unwrap()
        };
        let a = find(1.0);
        let b = find(0.5);
        assert_eq!(a.len(), b.len());
        for fa in &a {
            let matched = b.iter().any(|fb| inf_dist(&fa.location, &fb.location) < 1e-4);
            assert!(matched, "unmatched fixed point {:?}", fa.location);
        }
    }
}
