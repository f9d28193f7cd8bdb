//! Exact finite-horizon laws by dynamic programming.
//!
//! The teacher's cumulative observation `X_t = Y_1 + ... + Y_t` is a random
//! walk with up-probability `1 - p` (conditioning on the true state `+1`).
//! The cumulative teacher transmits the sign of the walk, holding the previous
//! sign while the walk sits at zero. Everything here is computed exactly in
//! f64, with no sampling, and serves as the oracle for the asymptotic results
//! in [`crate::rates`].

use crate::error::{domain, Error, Result};
use crate::ld::{check_open_half, kl_half, ChannelPair};
use crate::strategy::{StrategyCombo, Student, Teacher};

/// Largest horizon accepted by the DP builders.
pub const MAX_HORIZON: usize = 2000;

/// Largest admissible `n * rate`; `e^-700` is still a normal f64.
pub const UNDERFLOW_LIMIT: f64 = 700.0;

/// A finite distribution on consecutive integers starting at `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    offset: i64,
    masses: Vec<f64>,
}

impl Pmf {
    pub fn new(offset: i64, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(domain("pmf needs at least one support point"));
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0)) {
            return Err(domain(format!("pmf mass {m} is negative or NaN")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(domain(format!("pmf masses sum to {total}")));
        }
        Ok(Self { offset, masses })
    }

    /// Law of the number of successes in `n` Bernoulli(`prob`) trials.
    pub fn binomial(n: usize, prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(domain(format!("success probability {prob} outside [0, 1]")));
        }
        Ok(Self { offset: 0, masses: binomial_masses(n, prob) })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Largest support point.
    pub fn max_value(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    /// `P(X = k)`.
    pub fn prob(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i >= self.masses.len() as i64 {
            0.0
        } else {
            self.masses[i as usize]
        }
    }

    /// `P(X <= k)`.
    pub fn cdf(&self, k: i64) -> f64 {
        let hi = (k - self.offset + 1).clamp(0, self.masses.len() as i64) as usize;
        self.masses[..hi].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, m)| k as f64 * m).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses.iter().enumerate().map(move |(i, &m)| (self.offset + i as i64, m))
    }

    /// Law of the sum of two independent variables.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let mut out = vec![0.0; self.masses.len() + other.masses.len() - 1];
        for (i, &a) in self.masses.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out[i..].iter_mut().zip(&other.masses) {
                *o += a * b;
            }
        }
        Pmf { offset: self.offset + other.offset, masses: out }
    }
}

/// Binomial masses built outward from the mode, so tails decay smoothly into
/// zero instead of being computed from huge cancelling logs.
fn binomial_masses(n: usize, prob: f64) -> Vec<f64> {
    let mut masses = vec![0.0; n + 1];
    if prob == 0.0 {
        masses[0] = 1.0;
        return masses;
    }
    if prob == 1.0 {
        masses[n] = 1.0;
        return masses;
    }
    let mode = (((n + 1) as f64 * prob).floor() as usize).min(n);
    let small = mode.min(n - mode);
    let ln_choose: f64 = (1..=small)
        .map(|i| ((n - small + i) as f64 / i as f64).ln())
        .sum();
    masses[mode] =
        (ln_choose + mode as f64 * prob.ln() + (n - mode) as f64 * (-prob).ln_1p()).exp();
    let odds = prob / (1.0 - prob);
    for k in mode..n {
        masses[k + 1] = masses[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
    }
    for k in (1..=mode).rev() {
        masses[k - 1] = masses[k] * (k as f64 / (n - k + 1) as f64) / odds;
    }
    masses
}

/// Exact law of `M_n`, the number of steps `t <= n` at which the cumulative
/// teacher's sign is `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MnDistribution {
    pub n: usize,
    pub p: f64,
    pub pmf: Pmf,
}

impl MnDistribution {
    /// `P(M_n <= bound)`.
    pub fn cdf(&self, bound: usize) -> f64 {
        self.pmf.cdf(bound as i64)
    }

    /// `P(M_n / n <= 1 - delta)`.
    pub fn lower_tail(&self, delta: f64) -> f64 {
        let bound = ((1.0 - delta) * self.n as f64 + 1e-9).floor();
        if bound < 0.0 {
            0.0
        } else {
            self.cdf(bound as usize)
        }
    }
}

fn check_horizon_limit(n: usize) -> Result<()> {
    if n > MAX_HORIZON {
        return Err(Error::Resource { n, limit: MAX_HORIZON });
    }
    Ok(())
}

fn check_underflow(n: usize, rate: f64) -> Result<()> {
    let exponent = n as f64 * rate;
    if exponent > UNDERFLOW_LIMIT {
        return Err(Error::Underflow { exponent, limit: UNDERFLOW_LIMIT });
    }
    Ok(())
}

/// Exact law of `M_n` for the walk with down-probability `p`.
pub fn mn_distribution(p: f64, n: usize) -> Result<MnDistribution> {
    check_open_half("p", p)?;
    if n == 0 {
        return Err(domain("horizon n must be at least 1"));
    }
    check_horizon_limit(n)?;
    check_underflow(n, kl_half(p))?;
    let masses = sign_count_law(p, n, n);
    Ok(MnDistribution { n, p, pmf: Pmf { offset: 0, masses } })
}

/// Slot layout for the walk DP: negative positions, zero held at `-1`, zero
/// held at `+1`, positive positions.
struct Slots {
    n: i64,
}

impl Slots {
    fn len(&self) -> usize {
        (2 * self.n + 2) as usize
    }

    fn index(&self, x: i64, plus: bool) -> usize {
        match x.cmp(&0) {
            std::cmp::Ordering::Less => (x + self.n) as usize,
            std::cmp::Ordering::Equal => (self.n + plus as i64) as usize,
            std::cmp::Ordering::Greater => (x + self.n + 1) as usize,
        }
    }
}

/// Law of the number of `+1` signs among the last `window` steps of the
/// cumulative teacher, as a vector indexed by count.
///
/// State at time `t`: walk position, the held sign when the position is 0,
/// and the running count. Memory is `O(n * window)`.
pub(crate) fn sign_count_law(p: f64, n: usize, window: usize) -> Vec<f64> {
    debug_assert!(window <= n);
    let slots = Slots { n: n as i64 };
    let width = window + 1;
    let mut cur = vec![0.0f64; slots.len() * width];
    let mut nxt = vec![0.0f64; slots.len() * width];
    // The held sign at time 0 is never read: the first step leaves zero.
    cur[slots.index(0, true) * width] = 1.0;
    let up = 1.0 - p;
    let start_counting = n - window;

    for t in 1..=n {
        let prev = (t - 1) as i64;
        // Counts recorded so far, and whether step t is counted.
        let counted = t.saturating_sub(start_counting + 1);
        let counting = t > start_counting;
        let lo = slots.index(-(t as i64), false);
        let hi = slots.index(t as i64, true);
        nxt[lo * width..(hi + 1) * width].fill(0.0);

        let mut x = -prev;
        while x <= prev {
            let held: &[bool] = if x == 0 { &[false, true] } else if x > 0 { &[true] } else { &[false] };
            for &plus in held {
                let src = slots.index(x, plus) * width;
                for (dx, weight) in [(1i64, up), (-1i64, p)] {
                    if weight == 0.0 {
                        continue;
                    }
                    let nx = x + dx;
                    let nplus = if nx == 0 { plus } else { nx > 0 };
                    let shift = usize::from(counting && nplus);
                    let dst = slots.index(nx, nplus) * width + shift;
                    let (a, b) = (&cur[src..src + counted + 1], &mut nxt[dst..dst + counted + 1]);
                    for (d, s) in b.iter_mut().zip(a) {
                        *d += weight * s;
                    }
                }
            }
            x += 2;
        }
        std::mem::swap(&mut cur, &mut nxt);
    }

    let mut law = vec![0.0; width];
    for slot in cur.chunks_exact(width) {
        for (l, m) in law.iter_mut().zip(slot) {
            *l += m;
        }
    }
    law
}

/// Exact tail of the last return time `B` together with its analytic bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastReturnTail {
    /// `P(B > n)`.
    pub exact: f64,
    /// `e^{-n D(1/2||p)} p (1-p) (1-2p) / (n+1)`.
    pub lower: f64,
    /// `e^{-n D(1/2||p)} / (1-2p)`.
    pub upper: f64,
}

/// `P(B > n)` where `B` is the time of the walk's final visit to zero.
pub fn last_return_tail(p: f64, n: usize) -> Result<LastReturnTail> {
    check_open_half("p", p)?;
    check_horizon_limit(n)?;
    let d = kl_half(p);
    check_underflow(n, d)?;
    let pb = 1.0 - p;
    let ratio = p / pb;
    // X_n = 2k - n where k ~ Bin(n, 1 - p) counts up-steps.
    let exact: f64 = binomial_masses(n, pb)
        .iter()
        .enumerate()
        .map(|(k, &mass)| {
            let x = 2 * k as i64 - n as i64;
            let hit = match x.cmp(&0) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => 2.0 * p,
                std::cmp::Ordering::Greater => ratio.powi(x as i32),
            };
            mass * hit
        })
        .sum();
    let scale = (-(n as f64) * d).exp();
    Ok(LastReturnTail {
        exact,
        lower: scale * p * pb * (1.0 - 2.0 * p) / (n as f64 + 1.0),
        upper: scale / (1.0 - 2.0 * p),
    })
}

/// Law of the student's received `+1` count when the teacher sends `m` correct
/// and `n - m` wrong bits: `Bin(m, 1 - q) + Bin(n - m, q)`.
pub fn binomial_mixture_pmf(m: usize, n: usize, q: f64) -> Result<Pmf> {
    if m > n {
        return Err(domain(format!("m = {m} exceeds n = {n}")));
    }
    let correct = Pmf::binomial(m, 1.0 - q)?;
    let wrong = Pmf::binomial(n - m, q)?;
    Ok(correct.convolve(&wrong))
}

/// Probability that a majority vote over a window of `window` bits errs, given
/// the law of the received `+1` count. A tie is an error unless `ties_correct`.
fn vote_error(received: &[f64], window: usize, ties_correct: bool) -> f64 {
    let below: f64 = received.iter().take(window.div_ceil(2)).sum();
    if window.is_multiple_of(2) && !ties_correct {
        below + received[window / 2]
    } else {
        below
    }
}

/// Student error when the teacher's count of `+1` transmissions in a window
/// of `window` slots has law `count_law`.
fn cascade_error(count_law: &[f64], window: usize, q: f64, ties_correct: bool) -> f64 {
    // Error iff received count s < window/2, or s == window/2 on a losing tie.
    let last_losing = if window.is_multiple_of(2) && !ties_correct {
        window / 2
    } else {
        window.div_ceil(2) - 1
    } as i64;
    let mut total = 0.0;
    for (k, &mass) in count_law.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let correct = binomial_masses(k, 1.0 - q);
        let wrong = binomial_masses(window - k, q);
        let mut cdf = Vec::with_capacity(wrong.len());
        let mut acc = 0.0;
        for w in &wrong {
            acc += w;
            cdf.push(acc);
        }
        let mut err = 0.0;
        for (u, &pu) in correct.iter().enumerate() {
            let upto = last_losing - u as i64;
            if upto < 0 {
                break;
            }
            err += pu * cdf[(upto as usize).min(cdf.len() - 1)];
        }
        total += mass * err;
    }
    total
}

/// Exact probability that the student's final estimate is wrong, with the true
/// state drawn uniformly.
///
/// Both agents break exact ties towards `+1`. Conditioned on the state `+1`
/// a tie is therefore decoded correctly, and conditioned on `-1` it is an
/// error; the returned value is the average of the two frames.
pub fn exact_error(combo: StrategyCombo, channels: ChannelPair, n: usize) -> Result<f64> {
    combo.check_horizon(n)?;
    check_horizon_limit(n)?;
    let ChannelPair { p, q } = channels;
    if channels.composed() == 0.0 {
        return Ok(0.0);
    }
    check_underflow(n, kl_half(p).min(kl_half(q)))?;

    let window = combo.student_window(n);
    let frame = |ties_correct: bool| -> f64 {
        match (combo.teacher, combo.student) {
            (Teacher::Forwarding, _) => {
                let received = binomial_masses(window, 1.0 - channels.composed());
                vote_error(&received, window, ties_correct)
            }
            (Teacher::EpsTeaching(_), Student::EpsMajority(_)) => {
                let block = combo.teacher_block(n).expect("eps teacher has a block");
                let teacher_right = 1.0 - vote_error(&binomial_masses(block, 1.0 - p), block, ties_correct);
                let if_right = vote_error(&binomial_masses(window, 1.0 - q), window, ties_correct);
                let if_wrong = vote_error(&binomial_masses(window, q), window, ties_correct);
                teacher_right * if_right + (1.0 - teacher_right) * if_wrong
            }
            (Teacher::Cumulative, _) => {
                let law = sign_count_law(p, n, window);
                cascade_error(&law, window, q, ties_correct)
            }
            (Teacher::EpsTeaching(_), Student::Majority) => unreachable!("rejected by StrategyCombo"),
        }
    };
    Ok(0.5 * (frame(true) + frame(false)))
}
