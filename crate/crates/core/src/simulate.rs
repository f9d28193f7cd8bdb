//! Seeded Monte Carlo simulation of the teacher/channel/student pipeline.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so an estimate
//! depends only on the configuration and never on how trials are scheduled
//! across threads. Errors are aggregated as integer counts.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ld::ChannelPair;
use crate::strategy::{StrategyCombo, Teacher};

/// Trials per parallel work unit.
const CHUNK: u64 = 1 << 14;

/// Below this many observed errors the estimate is flagged as unreliable.
pub const RARE_EVENT_ERRORS: u64 = 10;

/// A simulation request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub combo: StrategyCombo,
    pub channels: ChannelPair,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(domain("trials must be at least 1"));
        }
        self.combo.check_horizon(self.n)
    }
}

/// Empirical error probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
    /// Fewer than [`RARE_EVENT_ERRORS`] errors were observed.
    pub rare_event_warning: bool,
}

impl EstimateWithCI {
    fn from_counts(errors: u64, trials: u64) -> Self {
        let p_hat = errors as f64 / trials as f64;
        Self {
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            trials,
            rare_event_warning: errors < RARE_EVENT_ERRORS,
        }
    }
}

/// The random stream of trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-configuration samplers, built once and shared by all trials.
struct Pipeline {
    n: usize,
    combo: StrategyCombo,
    observe_flip: Bernoulli,
    send_flip: Bernoulli,
    window: usize,
    block: Option<usize>,
}

impl Pipeline {
    fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let flip = |x: f64| Bernoulli::new(x).map_err(|e| domain(e.to_string()));
        Ok(Self {
            n: config.n,
            combo: config.combo,
            observe_flip: flip(config.channels.p)?,
            send_flip: flip(config.channels.q)?,
            window: config.combo.student_window(config.n),
            block: config.combo.teacher_block(config.n),
        })
    }

    /// Runs one trial with hidden state `theta` in {-1, +1}; true on error.
    fn run<R: Rng + ?Sized>(&self, theta: i8, rng: &mut R) -> bool {
        let n = self.n;
        let window_start = n - self.window;
        // Running sum of observations and the cumulative teacher's last sign.
        let mut sum: i64 = 0;
        let mut held: i8 = 1;
        let mut guess: i8 = 1;
        let mut received_plus = 0usize;
        for t in 0..n {
            let y = if self.observe_flip.sample(rng) { -theta } else { theta };
            sum += i64::from(y);
            let sent = match self.combo.teacher {
                Teacher::Forwarding => y,
                Teacher::Cumulative => {
                    if sum != 0 {
                        held = if sum > 0 { 1 } else { -1 };
                    }
                    held
                }
                Teacher::EpsTeaching(_) => {
                    let block = self.block.expect("eps teacher has a block");
                    if t + 1 == block {
                        guess = if sum >= 0 { 1 } else { -1 };
                    }
                    if t < block {
                        1
                    } else {
                        guess
                    }
                }
            };
            let z = if self.send_flip.sample(rng) { -sent } else { sent };
            if t >= window_start && z > 0 {
                received_plus += 1;
            }
        }
        let decoded: i8 = if 2 * received_plus >= self.window { 1 } else { -1 };
        decoded != theta
    }

    fn count_errors(&self, seed: u64, trials: u64, theta: Option<i8>) -> u64 {
        let chunks = trials.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let end = ((c + 1) * CHUNK).min(trials);
                (c * CHUNK..end)
                    .filter(|&i| {
                        let mut rng = trial_rng(seed, i);
                        let th = theta.unwrap_or_else(|| if rng.random::<bool>() { 1 } else { -1 });
                        self.run(th, &mut rng)
                    })
                    .count() as u64
            })
            .sum()
    }
}

/// Runs a single trial on `rng`: draws the hidden state uniformly, simulates
/// observations, the teacher, the channel and the student, and reports
/// whether the student's final estimate is wrong.
pub fn run_trial<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<bool> {
    let pipeline = Pipeline::new(config)?;
    let theta = if rng.random::<bool>() { 1 } else { -1 };
    Ok(pipeline.run(theta, rng))
}

/// Estimates the error probability over `config.trials` independent trials.
pub fn estimate_error(config: &SimConfig) -> Result<EstimateWithCI> {
    let pipeline = Pipeline::new(config)?;
    let errors = pipeline.count_errors(config.seed, config.trials, None);
    Ok(EstimateWithCI::from_counts(errors, config.trials))
}

/// Like [`estimate_error`] but with the hidden state fixed to `theta`.
pub fn estimate_error_given_state(config: &SimConfig, theta: i8) -> Result<EstimateWithCI> {
    if theta != 1 && theta != -1 {
        return Err(domain(format!("theta = {theta} must be +1 or -1")));
    }
    let pipeline = Pipeline::new(config)?;
    let errors = pipeline.count_errors(config.seed, config.trials, Some(theta));
    Ok(EstimateWithCI::from_counts(errors, config.trials))
}
