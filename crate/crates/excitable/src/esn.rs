//! Echo state network models and their open-loop, closed-loop, and
//! autonomous dynamics.
//!
//! The state update is the leaky-integrator map
//! `x[k] = (1-a) x[k-1] + a tanh(W_r x[k-1] + W_in u[k] + W_fb y[k-1] + e)`,
//! with the feedback term dropped (open loop) or folded into the trained
//! reservoir `M = W_r + W_fb W_o` (closed loop). Models are immutable after
//! construction; stepping functions are pure given an explicit noise vector,
//! so callers may freely parallelise over trajectories.

use crate::error::{EnaError, Result};
use crate::linalg::spectral_radius;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Provenance carried along with a model into its serialised form.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub seed: Option<u64>,
    pub provenance: String,
}

impl Default for ModelMeta {
    fn default() -> Self {
        Self { seed: None, provenance: String::new() }
    }
}

/// An echo state network: fixed random weights plus an optional trained
/// read-out. `leak_rate` is the alpha of the leaky update; `noise_std` is the
/// default standard deviation of the pre-activation noise term.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnModel {
    reservoir: DMatrix<f64>,
    input_weights: DMatrix<f64>,
    feedback_weights: DMatrix<f64>,
    readout: Option<DMatrix<f64>>,
    leak_rate: f64,
    noise_std: f64,
    pub meta: ModelMeta,
}

impl EsnModel {
    pub fn new(
        reservoir: DMatrix<f64>,
        input_weights: DMatrix<f64>,
        feedback_weights: DMatrix<f64>,
        leak_rate: f64,
        noise_std: f64,
    ) -> Result<Self> {
        let n_r = reservoir.nrows();
        if reservoir.ncols() != n_r {
            return Err(EnaError::DimensionMismatch(format!(
                "reservoir must be square, got {}x{}",
                reservoir.nrows(),
                reservoir.ncols()
            )));
        }
        if input_weights.nrows() != n_r {
            return Err(EnaError::DimensionMismatch(format!(
                "input weights have {} rows, reservoir has {} neurons",
                input_weights.nrows(),
                n_r
            )));
        }
        if feedback_weights.nrows() != n_r {
            return Err(EnaError::DimensionMismatch(format!(
                "feedback weights have {} rows, reservoir has {} neurons",
                feedback_weights.nrows(),
                n_r
            )));
        }
        if !(leak_rate > 0.0 && leak_rate <= 1.0) {
            return Err(EnaError::InvalidParameter(format!(
                "leak rate must lie in (0, 1], got {leak_rate}"
            )));
        }
        if noise_std < 0.0 {
            return Err(EnaError::InvalidParameter(format!(
                "noise std must be nonnegative, got {noise_std}"
            )));
        }
        Ok(Self {
            reservoir,
            input_weights,
            feedback_weights,
            readout: None,
            leak_rate,
            noise_std,
            meta: ModelMeta::default(),
        })
    }

    /// Installs a read-out matrix, enabling the closed-loop map.
    pub fn with_readout(mut self, readout: DMatrix<f64>) -> Result<Self> {
        if readout.ncols() != self.n_reservoir() {
            return Err(EnaError::DimensionMismatch(format!(
                "readout has {} columns, reservoir has {} neurons",
                readout.ncols(),
                self.n_reservoir()
            )));
        }
        if readout.nrows() != self.n_outputs() {
            return Err(EnaError::DimensionMismatch(format!(
                "readout has {} rows, feedback expects {} outputs",
                readout.nrows(),
                self.n_outputs()
            )));
        }
        self.readout = Some(readout);
        Ok(self)
    }

    pub fn n_reservoir(&self) -> usize {
        self.reservoir.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.input_weights.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.feedback_weights.ncols()
    }

    pub fn reservoir(&self) -> &DMatrix<f64> {
        &self.reservoir
    }

    pub fn input_weights(&self) -> &DMatrix<f64> {
        &self.input_weights
    }

    pub fn feedback_weights(&self) -> &DMatrix<f64> {
        &self.feedback_weights
    }

    pub fn readout(&self) -> Option<&DMatrix<f64>> {
        self.readout.as_ref()
    }

    pub fn leak_rate(&self) -> f64 {
        self.leak_rate
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// One open-loop step: feedback is driven by an external target `y_prev`
    /// (teacher forcing). `noise` is added pre-activation when given.
    pub fn step_open_loop(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        y_prev: &DVector<f64>,
        noise: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>> {
        self.check_state_input(x, u)?;
        if y_prev.len() != self.n_outputs() {
            return Err(EnaError::DimensionMismatch(format!(
                "feedback target has length {}, expected {}",
                y_prev.len(),
                self.n_outputs()
            )));
        }
        let mut pre = &self.reservoir * x;
        pre.gemv(1.0, &self.input_weights, u, 1.0);
        pre.gemv(1.0, &self.feedback_weights, y_prev, 1.0);
        if let Some(e) = noise {
            pre += e;
        }
        Ok(self.leaky_squash(x, pre))
    }

    /// One closed-loop step through the trained reservoir `M`.
    ///
    /// The `TrainedReservoir` is passed explicitly so that long runs do not
    /// rebuild `M` each step; obtain it once via [`EsnModel::trained_reservoir`].
    pub fn step_closed_loop(
        &self,
        tr: &TrainedReservoir,
        x: &DVector<f64>,
        u: &DVector<f64>,
        noise: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>> {
        self.check_state_input(x, u)?;
        Ok(tr.step(x, u, noise))
    }

    /// The autonomous map `F(x) = G(x, 0)` of the trained system.
    pub fn autonomous_map(&self, tr: &TrainedReservoir, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n_reservoir() {
            return Err(EnaError::DimensionMismatch(format!(
                "state has length {}, expected {}",
                x.len(),
                self.n_reservoir()
            )));
        }
        Ok(tr.autonomous_step(x))
    }

    /// Builds the trained reservoir `M = W_r + W_fb W_o`.
    pub fn trained_reservoir(&self) -> Result<TrainedReservoir> {
        let readout = self.readout.as_ref().ok_or(EnaError::MissingReadout)?;
        let m = &self.reservoir + &self.feedback_weights * readout;
        Ok(TrainedReservoir {
            m,
            input_weights: self.input_weights.clone(),
            leak_rate: self.leak_rate,
        })
    }

    /// Read-out applied to a state.
    pub fn output(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let readout = self.readout.as_ref().ok_or(EnaError::MissingReadout)?;
        Ok(readout * x)
    }

    fn check_state_input(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        if x.len() != self.n_reservoir() {
            return Err(EnaError::DimensionMismatch(format!(
                "state has length {}, expected {}",
                x.len(),
                self.n_reservoir()
            )));
        }
        if u.len() != self.n_inputs() {
            return Err(EnaError::DimensionMismatch(format!(
                "input has length {}, expected {}",
                u.len(),
                self.n_inputs()
            )));
        }
        Ok(())
    }

    fn leaky_squash(&self, x: &DVector<f64>, mut pre: DVector<f64>) -> DVector<f64> {
        let a = self.leak_rate;
        pre.apply(|v| *v = v.tanh());
        pre *= a;
        pre.axpy(1.0 - a, x, 1.0);
        pre
    }
}

/// The effective closed-loop recurrence `M = W_r + W_fb W_o`, together with
/// everything needed to evaluate the driven map `G` and the autonomous map
/// `F`. Shareable across threads; all methods are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedReservoir {
    m: DMatrix<f64>,
    input_weights: DMatrix<f64>,
    leak_rate: f64,
}

impl TrainedReservoir {
    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn leak_rate(&self) -> f64 {
        self.leak_rate
    }

    pub fn n_reservoir(&self) -> usize {
        self.m.nrows()
    }

    /// One step of the driven closed-loop map `G(x, u)` plus optional noise.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, noise: Option<&DVector<f64>>) -> DVector<f64> {
        let mut pre = &self.m * x;
        pre.gemv(1.0, &self.input_weights, u, 1.0);
        if let Some(e) = noise {
            pre += e;
        }
        self.finish(x, pre)
    }

    /// One step of the autonomous map `F(x) = G(x, 0)`.
    pub fn autonomous_step(&self, x: &DVector<f64>) -> DVector<f64> {
        let pre = &self.m * x;
        self.finish(x, pre)
    }

    /// In-place autonomous step for hot loops: `out = F(x)`.
    pub fn autonomous_step_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, &self.m, x, 0.0);
        let a = self.leak_rate;
        for (o, xi) in out.iter_mut().zip(x.iter()) {
            *o = (1.0 - a) * xi + a * o.tanh();
        }
    }

    fn finish(&self, x: &DVector<f64>, mut pre: DVector<f64>) -> DVector<f64> {
        let a = self.leak_rate;
        pre.apply(|v| *v = v.tanh());
        pre *= a;
        pre.axpy(1.0 - a, x, 1.0);
        pre
    }
}

/// Time-indexed record of one run: `states[k]` is the state after consuming
/// `inputs[k]`; `outputs[k]` is the read-out of `states[k]`. The state the
/// run started from is kept separately so pulse difference vectors can be
/// formed at the very first step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_state: DVector<f64>,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub targets: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State at step `k-1`, i.e. the state a step-`k` pulse acted on.
    pub fn state_before(&self, k: usize) -> &DVector<f64> {
        if k == 0 {
            &self.initial_state
        } else {
            &self.states[k - 1]
        }
    }
}

/// Uniform-random ESN construction: reservoir entries i.i.d. uniform on
/// [-1, 1] with a fraction `sparsity` zeroed, rescaled to the requested
/// spectral radius; dense uniform input and feedback weights; no read-out.
/// Deterministic given `seed`.
pub fn build_random_esn(
    n_r: usize,
    n_i: usize,
    n_o: usize,
    sparsity: f64,
    rho: f64,
    leak_rate: f64,
    noise_std: f64,
    seed: u64,
) -> Result<EsnModel> {
    if n_r == 0 {
        return Err(EnaError::InvalidParameter("need at least one neuron".into()));
    }
    if !(0.0..1.0).contains(&sparsity) {
        return Err(EnaError::InvalidParameter(format!(
            "sparsity must lie in [0, 1), got {sparsity}"
        )));
    }
    if rho <= 0.0 {
        return Err(EnaError::InvalidParameter(format!(
            "spectral radius must be positive, got {rho}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut reservoir = DMatrix::zeros(n_r, n_r);
    for i in 0..n_r {
        for j in 0..n_r {
            reservoir[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    if sparsity > 0.0 {
        for i in 0..n_r {
            for j in 0..n_r {
                if rng.random::<f64>() < sparsity {
                    reservoir[(i, j)] = 0.0;
                }
            }
        }
    }
    let raw_rho = spectral_radius(&reservoir);
    if raw_rho < 1e-12 {
        return Err(EnaError::DegenerateReservoir);
    }
    reservoir *= rho / raw_rho;

    let input_weights = DMatrix::from_fn(n_r, n_i, |_, _| rng.random_range(-1.0..1.0));
    let feedback_weights = DMatrix::from_fn(n_r, n_o, |_, _| rng.random_range(-1.0..1.0));

    let mut model = EsnModel::new(reservoir, input_weights, feedback_weights, leak_rate, noise_std)?;
    model.meta = ModelMeta {
        seed: Some(seed),
        provenance: format!(
            "build_random_esn(n_r={n_r}, n_i={n_i}, n_o={n_o}, sparsity={sparsity}, rho={rho}, alpha={leak_rate}, noise={noise_std}, seed={seed})"
        ),
    };
    Ok(model)
}

/// Samples one pre-activation noise vector, or `None` when `std` is zero so
/// that noise-free runs consume no randomness.
pub fn sample_noise(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Option<DVector<f64>> {
    if std == 0.0 {
        return None;
    }
    let dist = Normal::new(0.0, std).expect("std checked nonnegative");
    Some(DVector::from_fn(n, |_, _| dist.sample(rng)))
}

/// Teacher-forced open-loop run: the feedback channel is driven by
/// `targets[k-1]` (and by `initial_target` at the first step).
pub fn run_open_loop(
    model: &EsnModel,
    inputs: &[DVector<f64>],
    targets: &[DVector<f64>],
    initial_target: &DVector<f64>,
    initial_state: &DVector<f64>,
    noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    if inputs.len() != targets.len() {
        return Err(EnaError::DimensionMismatch(format!(
            "{} inputs vs {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let n_r = model.n_reservoir();
    let mut x = initial_state.clone();
    let mut states = Vec::with_capacity(inputs.len());
    for (k, u) in inputs.iter().enumerate() {
        let y_prev = if k == 0 { initial_target } else { &targets[k - 1] };
        let noise = sample_noise(rng, n_r, noise_std);
        x = model.step_open_loop(&x, u, y_prev, noise.as_ref())?;
        states.push(x.clone());
    }
    let outputs = match model.readout() {
        Some(w_o) => states.iter().map(|s| w_o * s).collect(),
        None => Vec::new(),
    };
    Ok(Trajectory {
        initial_state: initial_state.clone(),
        states,
        inputs: inputs.to_vec(),
        outputs,
        targets: Some(targets.to_vec()),
    })
}

/// Closed-loop run of a trained model over an input sequence.
pub fn run_closed_loop(
    model: &EsnModel,
    tr: &TrainedReservoir,
    inputs: &[DVector<f64>],
    targets: Option<&[DVector<f64>]>,
    initial_state: &DVector<f64>,
    noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let readout = model.readout().ok_or(EnaError::MissingReadout)?;
    let n_r = model.n_reservoir();
    let mut x = initial_state.clone();
    let mut states = Vec::with_capacity(inputs.len());
    let mut outputs = Vec::with_capacity(inputs.len());
    for u in inputs {
        let noise = sample_noise(rng, n_r, noise_std);
        x = model.step_closed_loop(tr, &x, u, noise.as_ref())?;
        states.push(x.clone());
        outputs.push(readout * &x);
    }
    Ok(Trajectory {
        initial_state: initial_state.clone(),
        states,
        inputs: inputs.to_vec(),
        outputs,
        targets: targets.map(|t| t.to_vec()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_model(alpha: f64) -> EsnModel {
        // 2 neurons, identity input routing, zero reservoir and feedback.
        EsnModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            alpha,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn requested_spectral_radius_large() {
        let model = build_random_esn(500, 2, 2, 0.95, 0.9, 1.0, 1e-4, 11).unwrap();
        let rho = spectral_radius(model.reservoir());
        assert!((rho - 0.9).abs() < 1e-9, "rho = {rho}");
    }

    #[test]
    fn requested_spectral_radius_small_dense() {
        let model = build_random_esn(2, 2, 2, 0.0, 0.5, 1.0, 0.0, 5).unwrap();
        assert!(model.reservoir().iter().all(|&v| v != 0.0));
        let rho = spectral_radius(model.reservoir());
        assert!((rho - 0.5).abs() < 1e-9, "rho = {rho}");
    }

    #[test]
    fn same_seed_same_model() {
        let a = build_random_esn(40, 2, 2, 0.5, 0.8, 1.0, 0.0, 99).unwrap();
        let b = build_random_esn(40, 2, 2, 0.5, 0.8, 1.0, 0.0, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn open_loop_zero_map() {
        // alpha = 1, all matrices zero: one step lands on tanh(0) = 0.
        let model = EsnModel::new(
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 2),
            DMatrix::zeros(3, 2),
            1.0,
            0.0,
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.4, -0.2, 0.9]);
        let next = model
            .step_open_loop(&x, &DVector::zeros(2), &DVector::zeros(2), None)
            .unwrap();
        assert_eq!(next, DVector::zeros(3));
    }

    #[test]
    fn open_loop_hand_evaluated() {
        // alpha = 0.5, W_r = 0, W_in = I, x = 0, u = (1, 0):
        // next = 0.5 * tanh(u) = (0.5 tanh 1, 0).
        let model = toy_model(0.5);
        let next = model
            .step_open_loop(
                &DVector::zeros(2),
                &DVector::from_vec(vec![1.0, 0.0]),
                &DVector::zeros(2),
                None,
            )
            .unwrap();
        assert_relative_eq!(next[0], 0.5 * 1.0_f64.tanh(), max_relative = 1e-15);
        assert_eq!(next[1], 0.0);
    }

    #[test]
    fn open_loop_deterministic_without_noise() {
        let model = build_random_esn(20, 2, 2, 0.3, 0.7, 0.8, 0.0, 1).unwrap();
        let x = DVector::from_fn(20, |i, _| 0.01 * i as f64);
        let u = DVector::from_vec(vec![1.0, -1.0]);
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let a = model.step_open_loop(&x, &u, &y, None).unwrap();
        let b = model.step_open_loop(&x, &u, &y, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_loop_needs_readout() {
        let model = toy_model(1.0);
        assert!(matches!(model.trained_reservoir(), Err(EnaError::MissingReadout)));
    }

    #[test]
    fn closed_loop_degenerate_m_ignores_state() {
        // alpha = 1 and M = 0 (readout cancels nothing, all zero): the next
        // state is tanh(W_in u) for any x.
        let model = toy_model(1.0).with_readout(DMatrix::zeros(2, 2)).unwrap();
        let tr = model.trained_reservoir().unwrap();
        let u = DVector::from_vec(vec![0.3, -0.8]);
        let a = model
            .step_closed_loop(&tr, &DVector::from_vec(vec![0.9, -0.9]), &u, None)
            .unwrap();
        let b = model.step_closed_loop(&tr, &DVector::zeros(2), &u, None).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a[0], 0.3_f64.tanh(), max_relative = 1e-15);
    }

    #[test]
    fn origin_is_always_fixed() {
        let model = build_random_esn(30, 2, 2, 0.5, 0.9, 1.0, 0.0, 8)
            .unwrap()
            .with_readout(DMatrix::from_fn(2, 30, |i, j| ((i + j) as f64 * 0.01).sin()))
            .unwrap();
        let tr = model.trained_reservoir().unwrap();
        let f0 = model.autonomous_map(&tr, &DVector::zeros(30)).unwrap();
        assert_eq!(f0, DVector::zeros(30));
    }

    #[test]
    fn trained_reservoir_is_exact_sum() {
        let model = build_random_esn(15, 2, 3, 0.2, 0.8, 1.0, 0.0, 4)
            .unwrap()
            .with_readout(DMatrix::from_fn(3, 15, |i, j| 0.1 * (i as f64) - 0.02 * (j as f64)))
            .unwrap();
        let tr = model.trained_reservoir().unwrap();
        let manual = model.reservoir() + model.feedback_weights() * model.readout().unwrap();
        assert_eq!(tr.m(), &manual);
    }

    #[test]
    fn open_equals_closed_when_feedback_vanishes() {
        // With W_fb W_o = 0, the closed loop equals the open loop driven by
        // y_prev = 0.
        let model = build_random_esn(12, 2, 2, 0.0, 0.6, 0.7, 0.0, 21)
            .unwrap()
            .with_readout(DMatrix::zeros(2, 12))
            .unwrap();
        let tr = model.trained_reservoir().unwrap();
        let x = DVector::from_fn(12, |i, _| (i as f64 * 0.3).sin() * 0.5);
        let u = DVector::from_vec(vec![-1.0, 0.0]);
        let open = model.step_open_loop(&x, &u, &DVector::zeros(2), None).unwrap();
        let closed = model.step_closed_loop(&tr, &x, &u, None).unwrap();
        assert_relative_eq!(open, closed, max_relative = 1e-14);
    }

    #[test]
    fn state_stays_in_unit_cube() {
        let model = build_random_esn(25, 2, 2, 0.5, 1.3, 0.6, 0.0, 13).unwrap();
        let x = DVector::from_fn(25, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        let u = DVector::from_vec(vec![1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, -1.0]);
        let next = model.step_open_loop(&x, &u, &y, None).unwrap();
        assert!(next.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn fixed_points_invariant_under_leak_rate() {
        // F_a(p) = p iff tanh(Mp) = p, independent of a.
        let reservoir = DMatrix::from_vec(2, 2, vec![3.0, 0.6, 0.6, 3.0]);
        for alpha in [1.0, 0.5] {
            let model = EsnModel::new(
                reservoir.clone(),
                DMatrix::identity(2, 2),
                DMatrix::zeros(2, 2),
                alpha,
                0.0,
            )
            .unwrap()
            .with_readout(DMatrix::identity(2, 2))
            .unwrap();
            let tr = model.trained_reservoir().unwrap();
            // p solves tanh(3p + 0.6p) = p componentwise on the diagonal.
            let mut p = 0.9_f64;
            for _ in 0..200 {
                p = (3.6 * p).tanh();
            }
            let fp = DVector::from_vec(vec![p, p]);
            let image = model.autonomous_map(&tr, &fp).unwrap();
            assert_relative_eq!(image, fp, epsilon = 1e-12);
        }
    }

    #[test]
    fn autonomous_step_into_matches_allocating_path() {
        let model = build_random_esn(17, 2, 2, 0.4, 0.9, 0.85, 0.0, 30)
            .unwrap()
            .with_readout(DMatrix::from_fn(2, 17, |i, j| 0.05 * ((i * 17 + j) as f64).cos()))
            .unwrap();
        let tr = model.trained_reservoir().unwrap();
        let x = DVector::from_fn(17, |i, _| ((i as f64) * 0.7).sin() * 0.8);
        let expected = tr.autonomous_step(&x);
        let mut out = DVector::zeros(17);
        tr.autonomous_step_into(&x, &mut out);
        assert_relative_eq!(out, expected, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_all_zero_reservoir_rejected() {
        // sparsity cannot reach 1.0, so force degeneracy via tiny n and luck:
        // instead check the validation path directly.
        let err = build_random_esn(3, 1, 1, 0.999999, 0.9, 1.0, 0.0, 2);
        // With sparsity this close to 1 on a 3x3 draw, all entries are zeroed
        // with overwhelming probability; accept either outcome but require
        // the error to be the dedicated variant when it fires.
        if let Err(e) = err {
            assert!(matches!(e, EnaError::DegenerateReservoir));
        }
    }
}
