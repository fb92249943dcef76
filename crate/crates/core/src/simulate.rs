//! Monte Carlo oracle: samples trajectories of the chain and estimates
//! Green-kernel entries, hitting distributions, and boundary-chain
//! transition probabilities, for cross-checking the analytic kernels.
//!
//! The generator is splitmix64. State transition: `s += 0x9E3779B97F4A7C15`;
//! output: the splitmix64 finalizer of the new state
//! (`z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//! z *= 0x94D049BB133111EB; z ^= z >> 31`). Trial `i` under master seed `s`
//! runs its own stream started at `finalize(s + (i + 1) * 0x9E3779B97F4A7C15)`,
//! so trials are independent, order-free to merge, and reproducible from
//! `(seed, trial index)` alone.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::markov::{check_subset, Partition, TransitionSystem};
use crate::tol;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splitmix64 stream. The whole state is one 64-bit word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// The derived stream for one trial: distinct trials land at
    /// pseudo-random offsets of the additive orbit, so their draws do not
    /// overlap in practice and merges are order-independent.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        Rng {
            state: finalize(seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN))),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        finalize(self.state)
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// One step of the chain from `x`: `y` is drawn with probability p(x, y).
/// Deterministic given the generator state; overridden boundary rows are
/// honored because the sampler reads the same matrix the solvers use.
pub fn sample_step(ts: &TransitionSystem, x: usize, rng: &mut Rng) -> usize {
    let p = ts.p();
    let u = rng.next_unit();
    let mut acc = 0.0;
    let mut last_positive = x;
    for y in 0..ts.n() {
        let w = p[(x, y)];
        if w > 0.0 {
            acc += w;
            last_positive = y;
            if u < acc {
                return y;
            }
        }
    }
    // Rounding can leave acc slightly below 1; the draw then lands on the
    // last carrier of mass.
    last_positive
}

/// A sampled path of the chain. `states[0]` is the start; `hit_time` is the
/// index of the stopping state (first n >= 1 in the target set, or the first
/// n with Z_n outside the allowed set).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub hit_time: usize,
}

fn cap_error(cap: u64) -> Error {
    Error::StepCap { cap }
}

/// Runs the chain from `x` until the first n >= 1 with Z_n in `target`.
/// The step cap converts theoretically-impossible non-absorption into a
/// diagnosable failure.
pub fn walk_to_target(
    ts: &TransitionSystem,
    x: usize,
    target: &[usize],
    rng: &mut Rng,
) -> Result<Trajectory> {
    walk_to_target_capped(ts, x, target, rng, tol::STEP_CAP)
}

pub(crate) fn walk_to_target_capped(
    ts: &TransitionSystem,
    x: usize,
    target: &[usize],
    rng: &mut Rng,
    cap: u64,
) -> Result<Trajectory> {
    check_subset(ts.n(), target)?;
    if x >= ts.n() {
        return Err(Error::BadParameter(format!(
            "start vertex index {x} out of range"
        )));
    }
    let mut states = vec![x];
    let mut here = x;
    for _ in 0..cap {
        here = sample_step(ts, here, rng);
        states.push(here);
        if target.binary_search(&here).is_ok() {
            let hit_time = states.len() - 1;
            return Ok(Trajectory { states, hit_time });
        }
    }
    Err(cap_error(cap))
}

/// Runs the chain from `x` in `allowed` until it first leaves the set.
pub fn walk_out_of(
    ts: &TransitionSystem,
    x: usize,
    allowed: &[usize],
    rng: &mut Rng,
) -> Result<Trajectory> {
    check_subset(ts.n(), allowed)?;
    if allowed.binary_search(&x).is_err() {
        return Err(Error::BadParameter(format!(
            "start vertex index {x} is outside the allowed set"
        )));
    }
    let mut states = vec![x];
    let mut here = x;
    for _ in 0..tol::STEP_CAP {
        here = sample_step(ts, here, rng);
        states.push(here);
        if allowed.binary_search(&here).is_err() {
            let hit_time = states.len() - 1;
            return Ok(Trajectory { states, hit_time });
        }
    }
    Err(cap_error(tol::STEP_CAP))
}

/// A batch of independent trials reduced to labeled means and their
/// standard errors (sample standard deviation over the square root of the
/// trial count).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub point_estimates: BTreeMap<String, f64>,
    pub standard_errors: BTreeMap<String, f64>,
    pub trials: u64,
    pub seed: u64,
}

fn mean_and_se(sum: f64, sum_sq: f64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let mean = sum / n;
    let se = if trials > 1 {
        let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    (mean, se)
}

/// Empirical distribution of the first boundary vertex visited by the chain
/// started at the interior vertex `x`. One key per boundary vertex label.
pub fn estimate_hitting(
    ts: &TransitionSystem,
    part: &Partition,
    x: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateReport> {
    if part.is_boundary(x) || x >= ts.n() {
        return Err(Error::BadParameter(format!(
            "hitting estimates start from an interior vertex, got {x}"
        )));
    }
    if trials == 0 {
        return Err(Error::BadParameter("trial count must be positive".to_string()));
    }
    let boundary = part.boundary();
    let mut hits = vec![0u64; boundary.len()];
    for trial in 0..trials {
        let mut rng = Rng::for_trial(seed, trial);
        let traj = walk_to_target(ts, x, boundary, &mut rng)?;
        let landed = traj.states[traj.hit_time];
        let pos = boundary.binary_search(&landed).expect("walk stopped on the boundary");
        hits[pos] += 1;
    }
    let mut point_estimates = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    for (pos, &y) in boundary.iter().enumerate() {
        // Indicator samples: the sum of squares equals the sum.
        let s = hits[pos] as f64;
        let (mean, se) = mean_and_se(s, s, trials);
        point_estimates.insert(ts.label(y).to_string(), mean);
        standard_errors.insert(ts.label(y).to_string(), se);
    }
    Ok(EstimateReport {
        point_estimates,
        standard_errors,
        trials,
        seed,
    })
}

/// Mean number of visits to `y` before the chain started at `x` leaves the
/// proper subset `a`. The time-zero visit counts, matching the kernel
/// normalization G(x, x) >= 1.
pub fn estimate_green(
    ts: &TransitionSystem,
    a: &[usize],
    x: usize,
    y: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateReport> {
    check_subset(ts.n(), a)?;
    if a.len() == ts.n() {
        return Err(Error::EmptySubset(
            "visit counts need a proper subset, the full set never stops".to_string(),
        ));
    }
    if a.binary_search(&x).is_err() || a.binary_search(&y).is_err() {
        return Err(Error::BadParameter(format!(
            "visit counting requires both endpoints inside the subset, got {x} and {y}"
        )));
    }
    if trials == 0 {
        return Err(Error::BadParameter("trial count must be positive".to_string()));
    }
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for trial in 0..trials {
        let mut rng = Rng::for_trial(seed, trial);
        let traj = walk_out_of(ts, x, a, &mut rng)?;
        let visits = traj.states[..traj.hit_time]
            .iter()
            .filter(|&&z| z == y)
            .count() as f64;
        sum += visits;
        sum_sq += visits * visits;
    }
    let (mean, se) = mean_and_se(sum, sum_sq, trials);
    let mut point_estimates = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    point_estimates.insert("visits".to_string(), mean);
    standard_errors.insert("visits".to_string(), se);
    Ok(EstimateReport {
        point_estimates,
        standard_errors,
        trials,
        seed,
    })
}

/// Empirical first-return matrix of the boundary chain: for every boundary
/// vertex `x`, `trials` independent runs record where the chain next meets
/// the boundary. Keys are "from->to" label pairs; each row uses its own
/// stretch of derived streams.
pub fn estimate_boundary_chain(
    ts: &TransitionSystem,
    part: &Partition,
    trials: u64,
    seed: u64,
) -> Result<EstimateReport> {
    if trials == 0 {
        return Err(Error::BadParameter("trial count must be positive".to_string()));
    }
    let boundary = part.boundary();
    let mut point_estimates = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    for (row, &x) in boundary.iter().enumerate() {
        let mut hits = vec![0u64; boundary.len()];
        for trial in 0..trials {
            let stream = (row as u64).wrapping_mul(trials).wrapping_add(trial);
            let mut rng = Rng::for_trial(seed, stream);
            let traj = walk_to_target(ts, x, boundary, &mut rng)?;
            let landed = traj.states[traj.hit_time];
            let pos = boundary.binary_search(&landed).expect("walk stopped on the boundary");
            hits[pos] += 1;
        }
        for (pos, &y) in boundary.iter().enumerate() {
            let key = format!("{}->{}", ts.label(x), ts.label(y));
            let s = hits[pos] as f64;
            let (mean, se) = mean_and_se(s, s, trials);
            point_estimates.insert(key.clone(), mean);
            standard_errors.insert(key, se);
        }
    }
    Ok(EstimateReport {
        point_estimates,
        standard_errors,
        trials,
        seed,
    })
}
