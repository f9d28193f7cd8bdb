//! Scalar minimization on a bounded interval.
//!
//! A coarse grid locates the best cell, then golden-section search refines
//! inside it. The grid makes the search robust to objectives that are not
//! unimodal on the whole interval; the refinement gives the final precision.

use crate::error::{domain, Error, Result};

/// Number of grid intervals used before refinement.
pub const GRID_INTERVALS: usize = 512;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Location and value of a minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub argmin: f64,
    pub min: f64,
}

fn eval(f: &mut impl FnMut(f64) -> f64, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_nan() {
        return Err(Error::NanObjective(x));
    }
    Ok(v)
}

/// Golden-section search on `[a, b]` until the bracket is narrower than `tol`.
pub fn golden_section(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<Minimum> {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(&mut f, x1)?;
    let mut f2 = eval(&mut f, x2)?;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(&mut f, x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(&mut f, x2)?;
        }
    }
    Ok(if f1 <= f2 {
        Minimum { argmin: x1, min: f1 }
    } else {
        Minimum { argmin: x2, min: f2 }
    })
}

/// Evaluates `f` on `intervals + 1` evenly spaced points of `[lo, hi]`.
pub(crate) fn grid_values(
    f: &mut impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    intervals: usize,
) -> Result<Vec<(f64, f64)>> {
    (0..=intervals)
        .map(|i| {
            let x = if i == intervals { hi } else { lo + (hi - lo) * i as f64 / intervals as f64 };
            eval(f, x).map(|v| (x, v))
        })
        .collect()
}

/// Refines around grid point `i`, keeping whichever of the grid value and the
/// refined value is lower.
pub(crate) fn refine_cell(
    f: &mut impl FnMut(f64) -> f64,
    grid: &[(f64, f64)],
    i: usize,
    tol: f64,
) -> Result<Minimum> {
    let a = grid[i.saturating_sub(1)].0;
    let b = grid[(i + 1).min(grid.len() - 1)].0;
    let refined = golden_section(&mut *f, a, b, tol)?;
    let (x, v) = grid[i];
    Ok(if refined.min <= v { refined } else { Minimum { argmin: x, min: v } })
}

/// Minimizes `f` over `[lo, hi]`: a grid of at least 512 intervals, then
/// golden-section refinement in the best cell and its neighbours.
///
/// Deterministic for deterministic `f`. A NaN from `f` aborts the search.
pub fn minimize_scalar(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Minimum> {
    if !(lo < hi) {
        return Err(domain(format!("empty interval [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance {tol} must be positive")));
    }
    let grid = grid_values(&mut f, lo, hi, GRID_INTERVALS)?;
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    refine_cell(&mut f, &grid, best, tol)
}

/// Maximizes `f` over `[lo, hi]` by minimizing `-f`.
pub fn maximize_scalar(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Minimum> {
    let m = minimize_scalar(|x| -f(x), lo, hi, tol)?;
    Ok(Minimum { argmin: m.argmin, min: -m.min })
}
