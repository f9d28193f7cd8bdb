//! Asymptotic learning rates for each teacher/student pairing.
//!
//! Closed forms are used where they exist. The cumulative teacher needs a
//! scalar optimization over the fraction `theta` of time its running majority
//! is wrong, and with an ε-majority student a further outer optimization over
//! the student's window.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ld::{check_open_half, kl_half, mixture_rate_unchecked, ChannelPair};
use crate::optimize::{grid_values, minimize_scalar, refine_cell, Minimum};

/// Intervals of the outer ε grid for the cumulative ε-majority rate.
pub const OUTER_GRID: usize = 1024;

/// Number of best outer cells refined by golden-section search.
const OUTER_REFINED_CELLS: usize = 3;

const INNER_TOL: f64 = 1e-9;
const OUTER_TOL: f64 = 1e-10;

/// How a rate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Optimized,
}

/// A learning rate in nats per step and the parameters achieving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
    pub method: Method,
    /// Set when the value is a boundary limit rather than the general formula.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub limit: bool,
}

impl RateResult {
    fn closed(rate: f64) -> Self {
        Self {
            rate,
            eps_star: None,
            theta_star: None,
            alpha_star: None,
            method: Method::ClosedForm,
            limit: false,
        }
    }
}

fn teacher_divergence(channels: ChannelPair) -> Result<f64> {
    if channels.p == 0.0 {
        return Err(domain("p must be positive: a noiseless teacher learns in one step"));
    }
    Ok(kl_half(channels.p))
}

/// Forwarding teacher, majority student: `D(1/2 || p * q)`.
pub fn rate_forwarding_majority(channels: ChannelPair) -> Result<RateResult> {
    let pq = channels.composed();
    if pq == 0.0 {
        return Err(domain("p * q = 0: the noiseless cascade has no finite rate"));
    }
    Ok(RateResult::closed(kl_half(pq)))
}

/// Cumulative teacher, majority student.
pub fn rate_cumulative_majority(channels: ChannelPair) -> Result<RateResult> {
    rate_cumulative_threshold(channels, 0.5)
}

/// Cumulative teacher with a student that errs when fewer than `(1 - delta) n`
/// received bits are correct. `delta = 1/2` is the majority student.
///
/// Minimizes `theta D(1/2 || p) + I_theta(1 - delta)` over
/// `theta in [0, (delta - q) / (1 - 2q)]`.
pub fn rate_cumulative_threshold(channels: ChannelPair, delta: f64) -> Result<RateResult> {
    let dp = teacher_divergence(channels)?;
    let q = channels.q;
    if !(delta >= q && delta <= 1.0 - q) {
        return Err(domain(format!("delta = {delta} must lie in [q, 1 - q] = [{q}, {}]", 1.0 - q)));
    }
    if q == 0.0 {
        // The student errs exactly when the teacher has been wrong for a
        // delta-fraction of the time.
        return Ok(RateResult {
            theta_star: Some(delta),
            limit: true,
            ..RateResult::closed(delta * dp)
        });
    }
    let w = 1.0 - delta;
    let theta_max = ((delta - q) / (1.0 - 2.0 * q)).clamp(0.0, 1.0);
    let objective = |theta: f64| theta * dp + mixture_rate_unchecked(theta, q, w).value;
    let best = if theta_max > 0.0 {
        minimize_scalar(objective, 0.0, theta_max, 1e-11)?
    } else {
        Minimum { argmin: 0.0, min: objective(0.0) }
    };
    Ok(RateResult {
        rate: best.min.max(0.0),
        eps_star: None,
        theta_star: Some(best.argmin),
        alpha_star: None,
        method: Method::Optimized,
        limit: false,
    })
}

/// ε-teaching: the teacher learns for `(1 - eps) n` steps, then repeats its
/// guess to an ε-majority student. Optimal `eps* = D_p / (D_p + D_q)`.
pub fn rate_eps_teaching(channels: ChannelPair) -> Result<RateResult> {
    let dp = teacher_divergence(channels)?;
    if channels.q == 0.0 {
        return Ok(RateResult { eps_star: Some(0.0), limit: true, ..RateResult::closed(dp) });
    }
    let dq = kl_half(channels.q);
    Ok(RateResult { eps_star: Some(dp / (dp + dq)), ..RateResult::closed(dp * dq / (dp + dq)) })
}

/// Objective of the inner infimum at fixed `eps` for the cumulative teacher
/// and ε-majority student, as a function of `alpha`.
pub fn cumulative_eps_inner_objective(channels: ChannelPair, eps: f64, alpha: f64) -> f64 {
    let dp = kl_half(channels.p);
    ((1.0 - eps) + eps * alpha) * dp + eps * mixture_rate_unchecked(alpha, channels.q, 0.5).value
}

/// Inner infimum over `alpha in [0, 1/2]` at fixed `eps`.
pub fn cumulative_eps_inner(channels: ChannelPair, eps: f64) -> Result<Minimum> {
    check_open_half("q", channels.q)?;
    teacher_divergence(channels)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(domain(format!("eps = {eps} must lie in [0, 1]")));
    }
    minimize_scalar(|a| cumulative_eps_inner_objective(channels, eps, a), 0.0, 0.5, INNER_TOL)
}

/// Cumulative teacher, ε-majority student with the best window:
/// `sup_eps min(eps D_q, inf_alpha ...)`.
pub fn rate_cumulative_eps(channels: ChannelPair) -> Result<RateResult> {
    let dp = teacher_divergence(channels)?;
    if channels.q == 0.0 {
        // An arbitrarily short window of noiseless bits is enough.
        return Ok(RateResult { eps_star: Some(0.0), limit: true, ..RateResult::closed(dp) });
    }
    let dq = kl_half(channels.q);
    // Maximize by minimizing the negation; inner errors are carried out of
    // the closure and re-raised.
    let mut failure: Option<Error> = None;
    let mut neg = |eps: f64| match cumulative_eps_inner(channels, eps) {
        Ok(m) => -(eps * dq).min(m.min),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let grid = grid_values(&mut neg, 0.0, 1.0, OUTER_GRID)?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1).then(a.cmp(&b)));
    let mut best: Option<Minimum> = None;
    for &i in order.iter().take(OUTER_REFINED_CELLS) {
        let m = refine_cell(&mut neg, &grid, i, OUTER_TOL)?;
        if best.is_none_or(|b| m.min < b.min) {
            best = Some(m);
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let best = best.expect("grid is non-empty");
    let eps_star = best.argmin;
    let inner = cumulative_eps_inner(channels, eps_star)?;
    Ok(RateResult {
        rate: (-best.min).max(0.0),
        eps_star: Some(eps_star),
        theta_star: None,
        alpha_star: Some(inner.argmin),
        method: Method::Optimized,
        limit: false,
    })
}

/// Forwarding teacher, ε-majority student. The optimum is `eps = 1`; a fixed
/// `eps` gives `eps D(1/2 || p * q)`.
pub fn rate_forwarding_eps(channels: ChannelPair, eps: Option<f64>) -> Result<RateResult> {
    let eps = eps.unwrap_or(1.0);
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(domain(format!("eps = {eps} must lie in (0, 1]")));
    }
    let full = rate_forwarding_majority(channels)?;
    Ok(RateResult { eps_star: Some(eps), ..RateResult::closed(eps * full.rate) })
}

/// Exponent of `P(M_n <= (1 - delta) n)`, where `M_n` counts the steps on
/// which the teacher's running majority is correct.
pub fn mn_tail_rate(p: f64, delta: f64) -> Result<f64> {
    check_open_half("p", p)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(domain(format!("delta = {delta} must lie in [0, 1]")));
    }
    Ok(delta * kl_half(p))
}

/// Upper bound on any strategy's rate: `min(D(1/2 || p), D(1/2 || q))`.
pub fn rate_ceiling(channels: ChannelPair) -> f64 {
    kl_half(channels.p).min(kl_half(channels.q))
}

/// The teacher/student pairings with a rate function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    ForwardingMajority,
    CumulativeMajority,
    EpsTeaching,
    CumulativeEps,
    ForwardingEps,
}

impl Pairing {
    pub const ALL: [Pairing; 5] = [
        Pairing::ForwardingMajority,
        Pairing::CumulativeMajority,
        Pairing::EpsTeaching,
        Pairing::CumulativeEps,
        Pairing::ForwardingEps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pairing::ForwardingMajority => "forwarding-majority",
            Pairing::CumulativeMajority => "cumulative-majority",
            Pairing::EpsTeaching => "eps-teaching",
            Pairing::CumulativeEps => "cumulative-eps",
            Pairing::ForwardingEps => "forwarding-eps",
        }
    }

    /// Optimal rate of this pairing.
    pub fn rate(self, channels: ChannelPair) -> Result<RateResult> {
        match self {
            Pairing::ForwardingMajority => rate_forwarding_majority(channels),
            Pairing::CumulativeMajority => rate_cumulative_majority(channels),
            Pairing::EpsTeaching => rate_eps_teaching(channels),
            Pairing::CumulativeEps => rate_cumulative_eps(channels),
            Pairing::ForwardingEps => rate_forwarding_eps(channels, None),
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pairing::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| domain(format!("unknown pairing '{s}'")))
    }
}
