//! Closed-form large-deviation primitives.
//!
//! Bernoulli divergences, channel composition, the excursion ("sojourn") and
//! return-count laws of the teacher's biased random walk, the joint log-MGF of
//! a sojourn's signed and absolute length, and the rate function of a mixture
//! of two Bernoulli samples.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Flip probabilities at or above this value are rejected. Rates vanish like
/// `2 (1/2 - p)^2`, so anything closer to 1/2 carries no usable signal in f64.
pub const FLIP_LIMIT: f64 = 0.5 - 1e-9;

/// Slack on the boundary of the log-MGF domain.
const MGF_DOMAIN_SLACK: f64 = 1e-12;

/// The two flip probabilities of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPair {
    /// Flip probability of the teacher's observation channel.
    pub p: f64,
    /// Flip probability of the teacher-to-student channel.
    pub q: f64,
}

impl ChannelPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_flip("p", p)?;
        check_flip("q", q)?;
        Ok(Self { p, q })
    }

    /// End-to-end flip probability seen by the student under forwarding.
    pub fn composed(&self) -> f64 {
        compose(self.p, self.q)
    }
}

fn check_flip(name: &str, x: f64) -> Result<()> {
    if !(0.0..FLIP_LIMIT).contains(&x) {
        return Err(domain(format!("{name} = {x} must lie in [0, 1/2)")));
    }
    Ok(())
}

pub(crate) fn check_open_half(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < FLIP_LIMIT) {
        return Err(domain(format!("{name} = {x} must lie in (0, 1/2)")));
    }
    Ok(())
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("{name} = {x} must lie in [0, 1]")));
    }
    Ok(())
}

/// `x ln(x / y)` with the `0 ln 0 = 0` convention.
fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// KL divergence `D(a || b)` between Bernoulli(a) and Bernoulli(b), in nats.
pub fn kl_bernoulli(a: f64, b: f64) -> Result<f64> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    if (b == 0.0 && a != 0.0) || (b == 1.0 && a != 1.0) {
        return Err(domain(format!("D({a} || {b}) is infinite")));
    }
    let v = xlogx_over(a, b) + xlogx_over(1.0 - a, 1.0 - b);
    Ok(v.max(0.0))
}

/// `D(1/2 || x)` for `x` in `[0, 1/2]`; `+inf` at `x = 0`.
///
/// This is the learning rate of a majority vote over i.i.d. bits that are
/// wrong with probability `x`.
pub fn kl_half(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        -0.5 * (4.0 * x * (1.0 - x)).ln()
    }
}

/// Flip probability of two binary symmetric channels in cascade.
pub fn bsc_compose(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok(compose(p, q))
}

#[inline]
pub(crate) fn compose(p: f64, q: f64) -> f64 {
    p * (1.0 - q) + q * (1.0 - p)
}

/// The `k`-th Catalan number, exactly.
pub fn catalan(k: u32) -> Result<u128> {
    // C_{i+1} = C_i * 2(2i+1) / (i+2); the division is always exact.
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c
            .checked_mul(2 * (2 * i + 1))
            .ok_or_else(|| Error::Overflow(format!("Catalan number C_{k}")))?
            / (i + 2);
    }
    Ok(c)
}

/// `ln C_m`, exact for small `m` and via log-gamma beyond that.
pub(crate) fn ln_catalan(m: u64) -> f64 {
    if m <= 60 {
        // C_60 < 2^113, well inside u128.
        return (catalan(m as u32).expect("C_60 fits in u128") as f64).ln();
    }
    let m = m as f64;
    libm::lgamma(2.0 * m + 1.0) - 2.0 * libm::lgamma(m + 1.0) - (m + 1.0).ln()
}

/// `P(T = 2k)` for the signed first-return time `T` of the teacher's walk.
///
/// Zero at `k = 0`; the escape mass `P(T = +inf) = 1 - 2p` is available from
/// [`sojourn_escape_mass`].
pub fn sojourn_pmf(p: f64, k: i64) -> Result<f64> {
    check_open_half("p", p)?;
    if k == 0 {
        return Ok(0.0);
    }
    let a = k.unsigned_abs();
    let ln_mass = a as f64 * (p * (1.0 - p)).ln() + ln_catalan(a - 1);
    Ok(ln_mass.exp())
}

/// Probability that the walk never returns to its starting point.
pub fn sojourn_escape_mass(p: f64) -> Result<f64> {
    check_open_half("p", p)?;
    Ok(1.0 - 2.0 * p)
}

/// Truncated law of the signed sojourn time `T`.
///
/// Finite support points are `2k` for `0 < |k| <= k_max`; the law is symmetric
/// so only the positive half is stored. The escape mass sits at `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SojournLaw {
    p: f64,
    /// `masses[k - 1] = P(T = 2k) = P(T = -2k)`.
    masses: Vec<f64>,
}

impl SojournLaw {
    pub fn truncated(p: f64, k_max: u32) -> Result<Self> {
        check_open_half("p", p)?;
        let masses = (1..=k_max as i64)
            .map(|k| sojourn_pmf(p, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { p, masses })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn k_max(&self) -> usize {
        self.masses.len()
    }

    /// Mass at `T = 2k`; zero outside the truncated support.
    pub fn mass(&self, k: i64) -> f64 {
        let a = k.unsigned_abs() as usize;
        if a == 0 || a > self.masses.len() {
            0.0
        } else {
            self.masses[a - 1]
        }
    }

    pub fn escape_mass(&self) -> f64 {
        1.0 - 2.0 * self.p
    }

    /// Finite support points `(2k, mass)` in increasing order of `2k`.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let k_max = self.masses.len() as i64;
        (-k_max..=k_max)
            .filter(|&k| k != 0)
            .map(move |k| (2 * k, self.mass(k)))
    }

    /// Total mass accounted for: finite masses plus escape mass.
    pub fn total(&self) -> f64 {
        2.0 * self.masses.iter().sum::<f64>() + self.escape_mass()
    }

    /// Mass lost to truncation.
    pub fn deficit(&self) -> f64 {
        1.0 - self.total()
    }
}

/// `P(G = i)` for the number `G` of returns of the walk to its start.
pub fn returns_pmf(p: f64, i: u32) -> Result<f64> {
    check_open_half("p", p)?;
    Ok((2.0 * p).powi(i as i32) * (1.0 - 2.0 * p))
}

/// `E|T~|`, the mean absolute length of a sojourn conditioned to be finite.
pub fn expected_abs_sojourn(p: f64) -> Result<f64> {
    check_open_half("p", p)?;
    let pb = 1.0 - p;
    Ok(2.0 * pb / (pb - p))
}

/// `ln E exp(l1 T~ + l2 |T~|)` for the finite-conditioned sojourn `T~`.
///
/// Returns `+inf` outside the domain `|l1| + l2 <= D(1/2 || p)`.
pub fn log_mgf_sojourn(p: f64, lambda1: f64, lambda2: f64) -> Result<f64> {
    check_open_half("p", p)?;
    if lambda1.is_nan() || lambda2.is_nan() {
        return Err(domain("log-MGF arguments must not be NaN"));
    }
    if lambda1.abs() + lambda2 > kl_half(p) + MGF_DOMAIN_SLACK {
        return Ok(f64::INFINITY);
    }
    // 4 p (1 - p) = exp(-2D), so 1 - 4 p (1 - p) e^{2l} = -expm1(2 (l - D)),
    // which stays accurate at the domain boundary.
    let d = kl_half(p);
    let r_plus = (-(2.0 * (lambda1 + lambda2 - d)).exp_m1()).max(0.0);
    let r_minus = (-(2.0 * (lambda2 - lambda1 - d)).exp_m1()).max(0.0);
    Ok(((2.0 - r_plus.sqrt() - r_minus.sqrt()) / (4.0 * p)).ln())
}

/// One evaluation of the Bernoulli-mixture rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureRateEval {
    /// Fraction of Bernoulli(q) samples in the mixture.
    pub theta: f64,
    /// Target mean.
    pub w: f64,
    /// Linear coefficient of the stationarity quadratic.
    pub tau: f64,
    /// Optimal `e^lambda`. At `w = 0` and `w = 1` the supremum is not
    /// attained and this holds the limiting value (`0` or `+inf`).
    pub eta: f64,
    /// `I_theta(w)` in nats.
    pub value: f64,
}

/// Rate function of `W_n`, the mean of `(1 - theta) n` Bernoulli(1 - q) and
/// `theta n` Bernoulli(q) independent samples.
pub fn mixture_rate_fn(theta: f64, q: f64, w: f64) -> Result<MixtureRateEval> {
    check_unit("theta", theta)?;
    check_unit("w", w)?;
    check_open_half("q", q)?;
    Ok(mixture_rate_unchecked(theta, q, w))
}

pub(crate) fn mixture_rate_unchecked(theta: f64, q: f64, w: f64) -> MixtureRateEval {
    let qb = 1.0 - q;
    let tb = 1.0 - theta;
    let wb = 1.0 - w;
    let tau = (qb / q) * (tb - w) + (q / qb) * (theta - w);
    // The endpoints are limits of the closed form: the log-probability of
    // all-failure or all-success.
    if w == 0.0 {
        let value = -tb * q.ln() - theta * qb.ln();
        return MixtureRateEval { theta, w, tau, eta: 0.0, value };
    }
    if w == 1.0 {
        let value = -tb * qb.ln() - theta * q.ln();
        return MixtureRateEval { theta, w, tau, eta: f64::INFINITY, value };
    }
    // Positive root of wb*eta^2 + tau*eta - w = 0, in cancellation-free form.
    let disc = (tau * tau + 4.0 * w * wb).sqrt();
    let eta = if tau > 0.0 {
        2.0 * w / (tau + disc)
    } else {
        (disc - tau) / (2.0 * wb)
    };
    let value = w * eta.ln() - tb * (qb * eta + q).ln() - theta * (q * eta + qb).ln();
    MixtureRateEval { theta, w, tau, eta, value: value.max(0.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        assert!(close(kl_bernoulli(0.5, 0.25).unwrap(), 0.5 * (4.0f64 / 3.0).ln(), 1e-15));
        assert!(close(kl_bernoulli(0.5, 0.25).unwrap(), 0.143841, 1e-6));
        assert!(close(kl_bernoulli(0.0, 0.3).unwrap(), (1.0f64 / 0.7).ln(), 1e-15));
        assert!(close(kl_bernoulli(0.0, 0.3).unwrap(), 0.356675, 1e-6));
        assert_eq!(kl_bernoulli(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(kl_bernoulli(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn kl_rejects_infinite_and_out_of_range() {
        assert!(matches!(kl_bernoulli(0.3, 0.0), Err(Error::Domain(_))));
        assert!(matches!(kl_bernoulli(0.3, 1.0), Err(Error::Domain(_))));
        assert!(kl_bernoulli(-0.1, 0.5).is_err());
        assert!(kl_bernoulli(0.5, 1.5).is_err());
    }

    #[test]
    fn kl_half_matches_kl() {
        for &x in &[0.01, 0.1, 0.25, 0.34, 0.49] {
            assert!(close(kl_half(x), kl_bernoulli(0.5, x).unwrap(), 1e-14));
        }
        assert_eq!(kl_half(0.0), f64::INFINITY);
    }

    #[test]
    fn compose_examples() {
        for &q in &[0.0, 0.1, 0.37] {
            assert_eq!(bsc_compose(0.0, q).unwrap(), q);
            assert!(close(bsc_compose(0.5, q).unwrap(), 0.5, 1e-15));
        }
        assert!(close(bsc_compose(0.1, 0.3).unwrap(), 0.34, 1e-15));
        assert!(bsc_compose(1.2, 0.1).is_err());
    }

    #[test]
    fn catalan_examples() {
        assert_eq!(catalan(0).unwrap(), 1);
        assert_eq!(catalan(3).unwrap(), 5);
        assert_eq!(catalan(10).unwrap(), 16796);
    }

    #[test]
    fn catalan_matches_convolution_recurrence() {
        let mut c = vec![1u128];
        for n in 0..40 {
            let next: u128 = (0..=n).map(|i| c[i] * c[n - i]).sum();
            c.push(next);
        }
        for (k, &v) in c.iter().enumerate() {
            assert_eq!(catalan(k as u32).unwrap(), v, "C_{k}");
        }
    }

    #[test]
    fn catalan_overflow_is_an_error() {
        assert!(catalan(60).is_ok());
        assert!(matches!(catalan(200), Err(Error::Overflow(_))));
    }

    #[test]
    fn ln_catalan_is_continuous_across_the_switch() {
        // Ratio C_{m+1}/C_m = 2(2m+1)/(m+2).
        for m in 55..70u64 {
            let ratio = (ln_catalan(m + 1) - ln_catalan(m)).exp();
            let expect = 2.0 * (2 * m + 1) as f64 / (m + 2) as f64;
            assert!(close(ratio, expect, 1e-11), "m = {m}");
        }
    }

    #[test]
    fn sojourn_examples() {
        assert_eq!(sojourn_pmf(0.3, 0).unwrap(), 0.0);
        assert!(close(sojourn_pmf(0.25, 1).unwrap(), 0.1875, 1e-15));
        assert!(close(sojourn_pmf(0.25, -2).unwrap(), 0.03515625, 1e-15));
        assert!(close(sojourn_escape_mass(0.2).unwrap(), 0.6, 1e-15));
        assert!(sojourn_pmf(0.5, 1).is_err());
        assert!(sojourn_pmf(0.0, 1).is_err());
    }

    #[test]
    fn sojourn_law_mass_accounting() {
        let law = SojournLaw::truncated(0.25, 2000).unwrap();
        assert!(law.deficit() >= -1e-12);
        assert!(law.deficit() < 1e-10, "deficit {}", law.deficit());
        assert_eq!(law.mass(0), 0.0);
        assert_eq!(law.mass(3), law.mass(-3));
        assert_eq!(law.support().count(), 4000);
    }

    #[test]
    fn returns_examples() {
        assert!(close(returns_pmf(0.3, 0).unwrap(), 0.4, 1e-15));
        assert!(close(returns_pmf(0.25, 1).unwrap(), 0.25, 1e-15));
        assert!(close(returns_pmf(0.25, 3).unwrap(), 0.0625, 1e-15));
    }

    #[test]
    fn expected_abs_sojourn_examples() {
        assert!(close(expected_abs_sojourn(0.25).unwrap(), 3.0, 1e-14));
        assert!(close(expected_abs_sojourn(0.4).unwrap(), 6.0, 1e-12));
        assert!(close(expected_abs_sojourn(0.1).unwrap(), 2.25, 1e-14));
        assert!(expected_abs_sojourn(0.5).is_err());
        assert!(expected_abs_sojourn(0.0).is_err());
    }

    #[test]
    fn log_mgf_examples() {
        for &p in &[0.05, 0.2, 0.45] {
            assert!(close(log_mgf_sojourn(p, 0.0, 0.0).unwrap(), 0.0, 1e-14));
            let d = kl_half(p);
            assert!(close(log_mgf_sojourn(p, 0.0, d).unwrap(), (1.0 / (2.0 * p)).ln(), 1e-10));
            assert_eq!(log_mgf_sojourn(p, 0.0, d + 0.01).unwrap(), f64::INFINITY);
            assert_eq!(log_mgf_sojourn(p, d, 0.01).unwrap(), f64::INFINITY);
        }
    }

    #[test]
    fn log_mgf_bounded_on_domain() {
        let p = 0.3;
        let d = kl_half(p);
        for i in 0..=20 {
            let l1 = -d + 2.0 * d * i as f64 / 20.0;
            let l2 = d - l1.abs();
            let v = log_mgf_sojourn(p, l1, l2).unwrap();
            assert!(v <= (1.0 / (2.0 * p)).ln() + 1e-10);
        }
    }

    #[test]
    fn mixture_rate_at_theta_zero_and_one() {
        let q = 0.2;
        for &w in &[0.1, 0.3, 0.5, 0.7, 0.95] {
            let r0 = mixture_rate_fn(0.0, q, w).unwrap();
            assert!(close(r0.value, kl_bernoulli(w, 1.0 - q).unwrap(), 1e-12));
            let r1 = mixture_rate_fn(1.0, q, w).unwrap();
            assert!(close(r1.value, kl_bernoulli(w, q).unwrap(), 1e-12));
        }
    }

    #[test]
    fn mixture_rate_vanishes_at_mean() {
        for &q in &[0.05, 0.2, 0.45] {
            for &theta in &[0.0, 0.2, 0.5, 0.9] {
                let mean = (1.0 - theta) * (1.0 - q) + theta * q;
                let r = mixture_rate_fn(theta, q, mean).unwrap();
                assert!(r.value <= 1e-12, "theta {theta} q {q}: {}", r.value);
                assert!(close(r.eta, 1.0, 1e-9));
            }
        }
    }

    #[test]
    fn mixture_rate_endpoints_are_limits() {
        let (theta, q) = (0.3, 0.15);
        let at0 = mixture_rate_fn(theta, q, 0.0).unwrap().value;
        let near0 = mixture_rate_fn(theta, q, 1e-9).unwrap().value;
        assert!(close(at0, near0, 1e-6));
        let at1 = mixture_rate_fn(theta, q, 1.0).unwrap().value;
        let near1 = mixture_rate_fn(theta, q, 1.0 - 1e-9).unwrap().value;
        assert!(close(at1, near1, 1e-6));
    }

    #[test]
    fn mixture_rate_domain() {
        assert!(mixture_rate_fn(0.3, 0.0, 0.5).is_err());
        assert!(mixture_rate_fn(0.3, 0.5, 0.5).is_err());
        assert!(mixture_rate_fn(1.3, 0.2, 0.5).is_err());
    }

    #[test]
    fn channel_pair_bounds() {
        assert!(ChannelPair::new(0.0, 0.0).is_ok());
        assert!(ChannelPair::new(0.49, 0.1).is_ok());
        assert!(ChannelPair::new(0.5 - 1e-9, 0.1).is_err());
        assert!(ChannelPair::new(0.5, 0.1).is_err());
        assert!(ChannelPair::new(0.1, -0.01).is_err());
    }
}
