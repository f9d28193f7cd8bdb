//! Brute-force oracles shared by integration tests.

#![allow(dead_code)]

/// Teacher rules, written out literally for enumeration.
#[derive(Debug, Clone, Copy)]
pub enum OracleTeacher {
    Forwarding,
    Cumulative,
    EpsTeaching(f64),
}

fn floor_of(frac: f64, n: usize) -> usize {
    (frac * n as f64 + 1e-9).floor() as usize
}

/// Sequence of transmitted signs for one observation sequence `ys`.
fn transmit(teacher: OracleTeacher, ys: &[i32]) -> Vec<i32> {
    let n = ys.len();
    let mut out = Vec::with_capacity(n);
    match teacher {
        OracleTeacher::Forwarding => out.extend_from_slice(ys),
        OracleTeacher::Cumulative => {
            let mut sum = 0;
            let mut last = 0;
            for &y in ys {
                sum += y;
                if sum != 0 {
                    last = sum.signum();
                }
                out.push(last);
            }
        }
        OracleTeacher::EpsTeaching(eps) => {
            let block = floor_of(1.0 - eps, n);
            let s: i32 = ys[..block].iter().sum();
            let guess = if s >= 0 { 1 } else { -1 };
            for t in 0..n {
                out.push(if t < block { 1 } else { guess });
            }
        }
    }
    out
}

/// Exact error probability by summing over every observation-flip pattern and
/// every channel-flip pattern, for both values of the hidden state.
///
/// `student_eps = None` is the full majority vote; ties decode to `+1`.
pub fn enumerate_error(teacher: OracleTeacher, student_eps: Option<f64>, p: f64, q: f64, n: usize) -> f64 {
    assert!(n <= 14);
    let window = student_eps.map_or(n, |e| floor_of(e, n));
    assert!(window >= 1);
    let window_mask: u32 = ((1u32 << window) - 1) << (n - window);
    let qpow: Vec<f64> = (0..=n).map(|k| q.powi(k as i32) * (1.0 - q).powi((n - k) as i32)).collect();
    let ppow: Vec<f64> = (0..=n).map(|k| p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).collect();

    let mut total = 0.0;
    for theta in [1i32, -1] {
        let mut err = 0.0;
        for obs_flips in 0u32..(1 << n) {
            let ys: Vec<i32> = (0..n).map(|t| if obs_flips >> t & 1 == 1 { -theta } else { theta }).collect();
            let sent = transmit(teacher, &ys);
            let sent_mask: u32 = sent.iter().enumerate().fold(0, |m, (t, &x)| if x > 0 { m | 1 << t } else { m });
            let mut wrong = 0.0;
            for ch_flips in 0u32..(1 << n) {
                let received = sent_mask ^ ch_flips;
                let plus = (received & window_mask).count_ones() as usize;
                let decoded = if 2 * plus >= window { 1 } else { -1 };
                if decoded != theta {
                    wrong += qpow[ch_flips.count_ones() as usize];
                }
            }
            err += ppow[obs_flips.count_ones() as usize] * wrong;
        }
        total += 0.5 * err;
    }
    total
}
