//! Pseudo-regret curves and log-log rate fits.

use crate::error::{Error, Result};

/// Rounds excluded from rate fits.
pub const BURN_IN: u64 = 64;

/// `Reg(t) = sum_{tau <= t} (v_star - Y(tau))`, indexed by `t - 1`.
pub fn pseudo_regret_curve(rewards: &[f64], v_star: f64) -> Vec<f64> {
    rewards
        .iter()
        .scan(0.0, |acc, y| {
            *acc += v_star - y;
            Some(*acc)
        })
        .collect()
}

/// `t * v_star - C(t)` from a (mean) cumulative reward curve.
pub fn regret_from_cumulative(cumulative: &[f64], v_star: f64) -> Vec<f64> {
    cumulative
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1) as f64 * v_star - c)
        .collect()
}

/// Powers of two in `[start, end]`.
pub fn dyadic_grid(start: u64, end: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |n| n.checked_mul(2))
        .skip_while(|&n| n < start)
        .take_while(|&n| n <= end)
        .collect()
}

/// Least-squares line through `(log t, log value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Grid points used, as `(t, value)`.
    pub points: Vec<(u64, f64)>,
    /// Grid points dropped because the value was not positive.
    pub excluded: Vec<u64>,
}

/// Log-log least squares over `(t, value)` pairs; nonpositive values are
/// excluded and reported.
pub fn fit_power_law(points: &[(u64, f64)]) -> Result<RateFit> {
    let (kept, dropped): (Vec<_>, Vec<_>) = points.iter().partition(|(_, v)| *v > 0.0 && v.is_finite());
    if kept.len() < 2 {
        return Err(Error::domain(format!(
            "need at least two positive points for a rate fit, have {}",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|(t, _)| (*t as f64).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        points: kept,
        excluded: dropped.into_iter().map(|(t, _)| t).collect(),
    })
}

/// Slope of `log(Reg(t) / t)` against `log t` on the dyadic grid from
/// `burn_in` to the end of the curve. `curve[t - 1]` is `Reg(t)`.
pub fn fit_rate_exponent(curve: &[f64], burn_in: u64) -> Result<RateFit> {
    let grid = dyadic_grid(burn_in.max(1), curve.len() as u64);
    let points: Vec<(u64, f64)> = grid.iter().map(|&t| (t, curve[t as usize - 1] / t as f64)).collect();
    fit_power_law(&points)
}
