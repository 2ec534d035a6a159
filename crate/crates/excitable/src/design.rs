//! Hand-designed low-dimensional flip-flop reservoirs and a 1D/2D
//! bifurcation toolbox for tanh maps.
//!
//! The 2-neuron design couples two saturating neurons through
//! `M(b) = w_r [[1, b], [b, 1]]`; the 2k-neuron design stacks k independent
//! two-neuron blocks `B = [[1.1, 4], [-s, 4]]` whose saddle positions are
//! tuned by `s`. The toolbox counts and classifies fixed points of
//! `x -> tanh(m x + w)` and of the coupled two-neuron map via nullclines,
//! and parameterises the fold bifurcation curve.

use crate::error::{EnaError, Result};
use crate::esn::{EsnModel, ModelMeta};
use crate::fixed_points::{Stability, MARGINAL_BAND};
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

/// The coupled two-neuron design loses its off-diagonal attractors here.
pub const B_BIFURCATION: f64 = 0.47;
/// The block design loses attractor-saddle pairs in a saddle-node here.
pub const S_BIFURCATION: f64 = 2.15;

const BISECT_WIDTH: f64 = 1e-13;
/// |Q| below this at a critical point counts as a tangency (fold).
const TANGENCY_TOL: f64 = 1e-10;

/// Two-neuron reservoir solving the 2-bit flip-flop: `M(b) = 3 [[1, b], [b, 1]]`,
/// inputs injected at gain 6, identity read-out, no leak, no noise.
pub fn make_design_2d(b: f64) -> Result<EsnModel> {
    if !(0.0..B_BIFURCATION).contains(&b) {
        return Err(EnaError::InvalidParameter(format!(
            "coupling b = {b} outside [0, {B_BIFURCATION}); a bifurcation near b = {B_BIFURCATION} \
             annihilates the off-diagonal attractors"
        )));
    }
    let omega_r = 3.0;
    let omega_in = 6.0;
    let reservoir = DMatrix::from_row_slice(2, 2, &[omega_r, omega_r * b, omega_r * b, omega_r]);
    let mut model = EsnModel::new(
        reservoir,
        DMatrix::identity(2, 2) * omega_in,
        DMatrix::zeros(2, 2),
        1.0,
        0.0,
    )?
    .with_readout(DMatrix::identity(2, 2))?;
    model.meta = ModelMeta { seed: None, provenance: format!("design2d(b={b})") };
    Ok(model)
}

/// 2k-neuron block design for the k-bit flip-flop. Bit j drives the second
/// coordinate of block j at gain `omega_in`; the read-out projects the first
/// coordinate of each block. `coupling` fills the off-diagonal blocks with a
/// constant to probe robustness of the product structure (zero for the exact
/// design).
pub fn make_design_2k(k: usize, s: f64, omega_in: f64, coupling: f64) -> Result<EsnModel> {
    if k == 0 {
        return Err(EnaError::InvalidParameter("need at least one bit".into()));
    }
    if !(0.0..S_BIFURCATION).contains(&s) {
        return Err(EnaError::InvalidParameter(format!(
            "saddle parameter s = {s} outside [0, {S_BIFURCATION}); a saddle-node bifurcation near \
             s = {S_BIFURCATION} annihilates the attractors"
        )));
    }
    let n = 2 * k;
    let mut reservoir = DMatrix::from_element(n, n, coupling);
    for block in 0..k {
        let o = 2 * block;
        reservoir[(o, o)] = 1.1;
        reservoir[(o, o + 1)] = 4.0;
        reservoir[(o + 1, o)] = -s;
        reservoir[(o + 1, o + 1)] = 4.0;
    }
    let mut input_weights = DMatrix::zeros(n, k);
    let mut readout = DMatrix::zeros(k, n);
    for j in 0..k {
        input_weights[(2 * j + 1, j)] = omega_in;
        readout[(j, 2 * j)] = 1.0;
    }
    let mut model =
        EsnModel::new(reservoir, input_weights, DMatrix::zeros(n, k), 1.0, 0.0)?.with_readout(readout)?;
    model.meta = ModelMeta {
        seed: None,
        provenance: format!("design2k(k={k}, s={s}, omega_in={omega_in}, coupling={coupling})"),
    };
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Map1dParams {
    pub m: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability1d {
    Stable,
    Unstable,
    /// Neutral tangency: |F'| = 1 to within the marginal band.
    Fold,
}

/// All fixed points of `x -> tanh(m x + w)` with their stability.
///
/// Roots are bracketed on the subintervals delimited by the critical points
/// of `Q(x) = tanh(mx + w) - x` (where they exist) and bisected; tangencies
/// at the critical points themselves are detected directly.
pub fn fixed_points_1d(params: &Map1dParams) -> Vec<(f64, Stability1d)> {
    let (m, w) = (params.m, params.w);
    let q = |x: f64| (m * x + w).tanh() - x;

    let mut cuts = vec![-1.0];
    if m >= 1.0 {
        let eta = ((m - 1.0) / m).sqrt();
        let x_l = (-eta.atanh() - w) / m;
        let x_r = (eta.atanh() - w) / m;
        for x in [x_l, x_r] {
            if x > -1.0 && x < 1.0 {
                cuts.push(x);
            }
        }
    }
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut roots: Vec<f64> = Vec::new();
    // Tangencies sit exactly on the cut points.
    for &x in &cuts[1..cuts.len() - 1] {
        if q(x).abs() < TANGENCY_TOL {
            roots.push(x);
        }
    }
    for pair in cuts.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        // A tangency at a cut endpoint leaves Q with sign noise there (Q is
        // quadratic through the tangency, so values within ~1e-7 of it sit
        // below the f64 floor); sample far enough inside that the quadratic
        // term dominates, so the tangency is not double-counted as a
        // bracketed root.
        let probe = |x: f64, other: f64| {
            if q(x).abs() < TANGENCY_TOL {
                q(x + (other - x) * 1e-5)
            } else {
                q(x)
            }
        };
        let (qlo, qhi) = (probe(lo, hi), probe(hi, lo));
        if qlo * qhi >= 0.0 {
            continue;
        }
        let rising = qlo < 0.0;
        while hi - lo > BISECT_WIDTH {
            let mid = 0.5 * (lo + hi);
            let below = if rising { q(mid) < 0.0 } else { q(mid) > 0.0 };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-7);

    roots
        .into_iter()
        .map(|x| {
            // At a fixed point tanh(mx + w) = x, so F'(x) = m (1 - x^2).
            let slope = (m * (1.0 - x * x)).abs();
            let s = if (slope - 1.0).abs() <= 1e-6 {
                Stability1d::Fold
            } else if slope > 1.0 {
                Stability1d::Unstable
            } else {
                Stability1d::Stable
            };
            (x, s)
        })
        .collect()
}

/// Fold bifurcation curve `w±(m)` of the 1D map, defined for `m >= 1`.
pub fn fold_curve(m: f64) -> Result<(f64, f64)> {
    if m < 1.0 {
        return Err(EnaError::InvalidParameter(format!(
            "fold curve is defined for m >= 1, got {m}"
        )));
    }
    let eta = ((m - 1.0) / m).sqrt();
    let w = m * eta - eta.atanh();
    Ok((w, -w))
}

/// Number of fixed points implied by the fold-curve partition: 3 strictly
/// inside the wedge, 1 strictly outside (and always 1 for m <= 1); `None`
/// exactly on the curve where the partition says nothing.
pub fn fold_partition_count(m: f64, w: f64) -> Option<usize> {
    if m <= 1.0 {
        return Some(1);
    }
    let (w_plus, _) = fold_curve(m).expect("m > 1");
    if w.abs() < w_plus {
        Some(3)
    } else if w.abs() > w_plus {
        Some(1)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint2d {
    pub x: f64,
    pub y: f64,
    pub eigenvalues: [Complex<f64>; 2],
    pub stability: Stability,
    pub marginal: bool,
}

/// Nullcline function `N_{alpha,beta}(t) = (-alpha t + atanh t) / beta`.
pub fn nullcline(alpha: f64, beta: f64, t: f64) -> f64 {
    (-alpha * t + t.atanh()) / beta
}

/// All fixed points of the two-neuron map
/// `(x, y) -> (tanh(ax + by), tanh(cx + dy))`, found as intersections of the
/// two nullclines by adaptive sign scanning along x with bisection
/// polishing. Degenerate couplings (b = 0 or c = 0) decouple an axis and
/// fall back to products of 1D analyses.
pub fn nullclines_2d(a: f64, b: f64, c: f64, d: f64) -> Vec<FixedPoint2d> {
    let mut points = if b == 0.0 || c == 0.0 {
        decoupled_fixed_points(a, b, c, d)
    } else {
        coupled_fixed_points(a, b, c, d)
    };
    points.sort_by(|p, q| p.x.partial_cmp(&q.x).unwrap().then(p.y.partial_cmp(&q.y).unwrap()));
    points
}

/// Newton seed lattice resolution per axis.
const NEWTON_SEEDS: usize = 64;

fn coupled_fixed_points(a: f64, b: f64, c: f64, d: f64) -> Vec<FixedPoint2d> {
    // Sign scanning along either axis misses intersections where the scanned
    // nullcline is nearly vertical (both coordinates saturated), so the scan
    // roots are combined with a Newton pass from a coarse seed lattice and
    // everything is polished on the smooth tanh residual.
    let mut candidates: Vec<(f64, f64)> = Vec::new();

    for i in 0..NEWTON_SEEDS {
        for j in 0..NEWTON_SEEDS {
            let x = -1.0 + (i as f64 + 0.5) * 2.0 / NEWTON_SEEDS as f64;
            let y = -1.0 + (j as f64 + 0.5) * 2.0 / NEWTON_SEEDS as f64;
            if let Some(p) = newton_2d(a, b, c, d, x, y) {
                candidates.push(p);
            }
        }
    }

    // Scan along x: R(x) = N_{d,c}(N_{a,b}(x)) - x where the inner value
    // stays inside (-1, 1); and symmetrically along y.
    let residual_x = move |x: f64| -> Option<f64> {
        if x <= -1.0 || x >= 1.0 {
            return None;
        }
        let y = nullcline(a, b, x);
        if y <= -1.0 || y >= 1.0 {
            return None;
        }
        Some(nullcline(d, c, y) - x)
    };
    let residual_y = move |y: f64| -> Option<f64> {
        if y <= -1.0 || y >= 1.0 {
            return None;
        }
        let x = nullcline(d, c, y);
        if x <= -1.0 || x >= 1.0 {
            return None;
        }
        Some(nullcline(a, b, x) - y)
    };
    for x in adaptive_scan(&residual_x) {
        if let Some(p) = newton_2d(a, b, c, d, x, nullcline(a, b, x)) {
            candidates.push(p);
        }
    }
    for y in adaptive_scan(&residual_y) {
        if let Some(p) = newton_2d(a, b, c, d, nullcline(d, c, y), y) {
            candidates.push(p);
        }
    }

    let mut roots: Vec<(f64, f64)> = Vec::new();
    for (x, y) in candidates {
        if !roots.iter().any(|&(rx, ry)| (rx - x).abs() < 1e-8 && (ry - y).abs() < 1e-8) {
            roots.push((x, y));
        }
    }
    roots.into_iter().map(|(x, y)| classify_2d(a, b, c, d, x, y)).collect()
}

fn adaptive_scan(residual: &dyn Fn(f64) -> Option<f64>) -> Vec<f64> {
    let mut resolution = 2048usize;
    let mut last_count = usize::MAX;
    let mut roots: Vec<f64> = Vec::new();
    while resolution <= 1 << 16 {
        roots = scan_roots(residual, resolution);
        if roots.len() == last_count {
            break;
        }
        last_count = roots.len();
        resolution *= 2;
    }
    roots
}

/// Newton iteration on `(tanh(ax+by) - x, tanh(cx+dy) - y)`; returns a
/// residual-verified root inside the open square.
fn newton_2d(a: f64, b: f64, c: f64, d: f64, mut x: f64, mut y: f64) -> Option<(f64, f64)> {
    for _ in 0..80 {
        let tx = (a * x + b * y).tanh();
        let ty = (c * x + d * y).tanh();
        let (vx, vy) = (tx - x, ty - y);
        let s1 = 1.0 - tx * tx;
        let s2 = 1.0 - ty * ty;
        let (j11, j12, j21, j22) = (a * s1 - 1.0, b * s1, c * s2, d * s2 - 1.0);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return None;
        }
        let dx = (vx * j22 - vy * j12) / det;
        let dy = (vy * j11 - vx * j21) / det;
        x -= dx;
        y -= dy;
        if !x.is_finite() || !y.is_finite() || x.abs() > 4.0 || y.abs() > 4.0 {
            return None;
        }
        if dx.abs().max(dy.abs()) < 1e-15 {
            break;
        }
    }
    let rx = ((a * x + b * y).tanh() - x).abs();
    let ry = ((c * x + d * y).tanh() - y).abs();
    (rx.max(ry) < 1e-11 && x.abs() < 1.0 && y.abs() < 1.0).then_some((x, y))
}

fn scan_roots(residual: &dyn Fn(f64) -> Option<f64>, resolution: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..resolution {
        let x = -1.0 + (i as f64 + 0.5) * 2.0 / resolution as f64;
        let r = match residual(x) {
            Some(r) => r,
            None => {
                prev = None;
                continue;
            }
        };
        if r == 0.0 {
            roots.push(x);
            prev = None;
            continue;
        }
        if let Some((px, pr)) = prev {
            if pr * r < 0.0 {
                roots.push(bisect(residual, px, x));
            }
        }
        prev = Some((x, r));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    roots
}

fn bisect(residual: &dyn Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64) -> f64 {
    let rlo = residual(lo).expect("bracketed");
    let rising = rlo < 0.0;
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        match residual(mid) {
            Some(r) => {
                let below = if rising { r < 0.0 } else { r > 0.0 };
                if below {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            None => break,
        }
    }
    0.5 * (lo + hi)
}

fn decoupled_fixed_points(a: f64, b: f64, c: f64, d: f64) -> Vec<FixedPoint2d> {
    let mut out = Vec::new();
    if b == 0.0 {
        // x evolves independently; for each x*, y solves its own 1D map.
        for (x, _) in fixed_points_1d(&Map1dParams { m: a, w: 0.0 }) {
            for (y, _) in fixed_points_1d(&Map1dParams { m: d, w: c * x }) {
                out.push(classify_2d(a, b, c, d, x, y));
            }
        }
    } else {
        for (y, _) in fixed_points_1d(&Map1dParams { m: d, w: 0.0 }) {
            for (x, _) in fixed_points_1d(&Map1dParams { m: a, w: b * y }) {
                out.push(classify_2d(a, b, c, d, x, y));
            }
        }
    }
    out
}

fn classify_2d(a: f64, b: f64, c: f64, d: f64, x: f64, y: f64) -> FixedPoint2d {
    // At a fixed point tanh(ax + by) = x, so the squashing factors are
    // 1 - x^2 and 1 - y^2.
    let (dx, dy) = (1.0 - x * x, 1.0 - y * y);
    let (j11, j12, j21, j22) = (dx * a, dx * b, dy * c, dy * d);
    let tr = j11 + j22;
    let det = j11 * j22 - j12 * j21;
    let disc = tr * tr - 4.0 * det;
    let eigenvalues = if disc >= 0.0 {
        let sq = disc.sqrt();
        [Complex::new(0.5 * (tr + sq), 0.0), Complex::new(0.5 * (tr - sq), 0.0)]
    } else {
        let sq = (-disc).sqrt();
        [Complex::new(0.5 * tr, 0.5 * sq), Complex::new(0.5 * tr, -0.5 * sq)]
    };
    let unstable = eigenvalues.iter().filter(|e| e.norm() > 1.0).count();
    let marginal = eigenvalues.iter().any(|e| (e.norm() - 1.0).abs() <= MARGINAL_BAND);
    FixedPoint2d {
        x,
        y,
        eigenvalues,
        stability: Stability::from_unstable_count(unstable, 2),
        marginal,
    }
}

/// Prediction from the sufficient fixed-point-count conditions for the
/// two-neuron map with `a, d > 1` (both nullclines folding).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountPrediction {
    /// Preconditions (a > 1 and d > 1) not met.
    NotApplicable,
    /// No sufficient condition fires.
    Indeterminate,
    Exactly(usize),
}

pub fn count_conditions(a: f64, b: f64, c: f64, d: f64) -> CountPrediction {
    if a <= 1.0 || d <= 1.0 {
        return CountPrediction::NotApplicable;
    }
    let eta_a = ((a - 1.0) / a).sqrt();
    let eta_d = ((d - 1.0) / d).sqrt();
    let hump_a = nullcline(a, b, eta_a).abs();
    let hump_d = nullcline(d, c, eta_d).abs();
    let bc = b * c;

    if bc >= 0.0 {
        if (1.0 - a) * (1.0 - d) < bc {
            return CountPrediction::Exactly(3);
        }
        if hump_a < eta_d || hump_d < eta_a {
            return CountPrediction::Exactly(5);
        }
    } else {
        if hump_a < eta_d && hump_d < eta_a {
            return CountPrediction::Exactly(1);
        }
        if (hump_a < eta_d && hump_d > 1.0) || (hump_d < eta_a && hump_a > 1.0) {
            return CountPrediction::Exactly(5);
        }
    }
    if hump_a > 1.0 && hump_d > 1.0 {
        return CountPrediction::Exactly(9);
    }
    CountPrediction::Indeterminate
}

/// Samples both nullclines for plotting. Returns (x-nullcline, y-nullcline)
/// as (x, y) pairs, skipping samples that leave [-1.5, 1.5].
pub fn nullcline_polylines(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    samples: usize,
) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for i in 0..samples {
        let t = -1.0 + (i as f64 + 0.5) * 2.0 / samples as f64;
        if b != 0.0 {
            let y = nullcline(a, b, t);
            if y.abs() <= 1.5 {
                first.push((t, y));
            }
        }
        if c != 0.0 {
            let x = nullcline(d, c, t);
            if x.abs() <= 1.5 {
                second.push((x, t));
            }
        }
    }
    (first, second)
}
