//! Closed-form decay bounds for the transition-law distance of a compound
//! jump process, plus the log-log regression used to verify the decay rate
//! empirically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{MixedMeasure, Point};
use crate::semigroup::step_tv_sequence;

/// Largest exponent for which `exp` stays finite in f64.
const EXP_DOMAIN: f64 = 700.0;

/// Values at or below this floor are treated as numerically zero when
/// fitting on a log scale.
pub const FIT_FLOOR: f64 = 1e-13;

/// Square-root decay bound assembled from a uniform random-walk constant:
///
/// ```text
/// 2 e^{-rate*t} (1 - [x = y]) + sqrt(2) * c_xy * (1 - e^{-rate*t}) / sqrt(rate*t)
/// ```
///
/// capped at 2, the diameter of the total variation metric. `c_xy` must
/// dominate `sqrt(n) * TV_n` for every step count `n >= 1`.
pub fn couplingo2_bound(rate: f64, t: f64, c_xy: f64, x_equals_y: bool) -> Result<f64> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::Invalid(format!(
            "rate must be positive and finite, got {rate}"
        )));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Invalid(format!(
            "time must be nonnegative and finite, got {t}"
        )));
    }
    if !c_xy.is_finite() || c_xy < 0.0 {
        return Err(Error::Invalid(format!(
            "walk constant must be nonnegative, got {c_xy}"
        )));
    }
    let lt = rate * t;
    let survivor = if lt > EXP_DOMAIN { 0.0 } else { (-lt).exp() };
    let first = if x_equals_y { 0.0 } else { 2.0 * survivor };
    // (1 - e^{-u}) / sqrt(u) -> 0 as u -> 0; guard the 0/0 form.
    let decay = if lt <= 1e-300 {
        0.0
    } else {
        (1.0 - survivor) / lt.sqrt()
    };
    Ok((first + 2.0f64.sqrt() * c_xy * decay).min(2.0))
}

/// Both sides of the series comparison
///
/// ```text
/// sum_{n>=1} u^n / (sqrt(n) n!)  <=  sqrt(2) (e^u - 1) / sqrt(u),   u = rate*t,
/// ```
///
/// with the left side summed to a certified relative error of 1e-14 (the
/// dropped tail is dominated by a geometric series once the term ratio
/// `u * sqrt(n) / (n+1)^{3/2} <= u / (n+1)` falls below one).
pub fn jensen_chain_check(rate: f64, t: f64) -> Result<(f64, f64)> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::Invalid(format!(
            "rate must be positive and finite, got {rate}"
        )));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Invalid(format!(
            "time must be positive and finite, got {t}"
        )));
    }
    let u = rate * t;
    if u > EXP_DOMAIN {
        return Err(Error::Invalid(format!(
            "rate*t = {u} overflows the series comparison; stay at or below {EXP_DOMAIN}"
        )));
    }
    let mut term = u; // n = 1: u / (sqrt(1) * 1!)
    let mut lhs = term;
    let mut n = 1u64;
    loop {
        let next_n = (n + 1) as f64;
        term *= u * (n as f64).sqrt() / (next_n * next_n.sqrt());
        n += 1;
        lhs += term;
        let ratio = u / (n as f64 + 1.0);
        if ratio < 1.0 {
            let tail = term * ratio / (1.0 - ratio);
            if tail <= 1e-14 * lhs {
                break;
            }
        }
        if n > 100_000_000 {
            return Err(Error::Invalid(format!(
                "series comparison failed to converge at rate*t = {u}"
            )));
        }
    }
    let rhs = 2.0f64.sqrt() * u.exp_m1() / u.sqrt();
    Ok((lhs, rhs))
}

/// Dimension-free decay bound `min(2, c * (1 + |x - y|) / sqrt(t))`.
pub fn th2_bound(t: f64, x: &Point, y: &Point, c: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Invalid(format!(
            "time must be positive and finite, got {t}"
        )));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::Invalid(format!(
            "decay constant must be positive, got {c}"
        )));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let dist = x.distance(y);
    Ok((c * (1.0 + dist) / t.sqrt()).min(2.0))
}

/// Empirical stand-in for the random-walk constant of `couplingo2_bound`:
/// the maximum of `sqrt(n) * TV_n` over `n = 1..=n_max`, where `TV_n` is
/// the distance between the n-step laws started at `x` and `y`.
pub fn empirical_walk_constant(
    step_law: &MixedMeasure,
    x: &Point,
    y: &Point,
    n_max: usize,
) -> Result<f64> {
    if n_max == 0 {
        return Err(Error::Invalid(
            "walk constant needs at least one step".into(),
        ));
    }
    let tvs = step_tv_sequence(step_law, x, y, n_max)?;
    Ok(tvs
        .iter()
        .enumerate()
        .map(|(i, tv)| ((i + 1) as f64).sqrt() * tv)
        .fold(0.0, f64::max))
}

/// Least-squares power-law fit on the log-log scale.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    /// Times that survived the positivity floor, in input order.
    pub times: Vec<f64>,
    /// Matching values.
    pub values: Vec<f64>,
    /// Fitted exponent: slope of `ln(value)` against `ln(t)`.
    pub slope: f64,
    /// Fitted `ln` of the prefactor.
    pub intercept: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
}

/// Fits `value ~ exp(intercept) * t^slope` by ordinary least squares on
/// `(ln t, ln value)`. Pairs whose value is at or below 1e-13 are dropped as
/// numerically zero. Requires at least five surviving points spanning at
/// least two decades of `t`, so a slope over a narrow window cannot pass as
/// a decay rate.
pub fn fit_rate(times: &[f64], values: &[f64]) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::Invalid(format!(
            "times and values must pair up, got {} and {}",
            times.len(),
            values.len()
        )));
    }
    let mut kept_t = Vec::new();
    let mut kept_v = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::Invalid(format!(
                "times must be positive and finite, got {t}"
            )));
        }
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Invalid(format!(
                "values must be nonnegative and finite, got {v}"
            )));
        }
        if v > FIT_FLOOR {
            kept_t.push(t);
            kept_v.push(v);
        }
    }
    if kept_t.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "need at least 5 points above the {FIT_FLOOR:.0e} floor, got {}",
            kept_t.len()
        )));
    }
    let t_min = kept_t.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = kept_t.iter().cloned().fold(0.0, f64::max);
    if t_max / t_min < 100.0 {
        return Err(Error::InsufficientData(format!(
            "times span {:.2} decades, need at least 2",
            (t_max / t_min).log10()
        )));
    }
    let xs: Vec<f64> = kept_t.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = kept_v.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    // The decade requirement guarantees sxx > 0.
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let fit = intercept + slope * x;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot <= 1e-30 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        times: kept_t,
        values: kept_v,
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couplingo2_caps_at_two_and_decays() {
        let small = couplingo2_bound(1.0, 1e-9, 1.0, false).unwrap();
        assert!(
            (small - 2.0).abs() < 1e-6,
            "near t = 0 the bound saturates, got {small}"
        );
        let at_one = couplingo2_bound(1.0, 1.0, 1.0, false).unwrap();
        let expected = 2.0 * (-1.0f64).exp() + 2.0f64.sqrt() * (1.0 - (-1.0f64).exp());
        assert!((at_one - expected).abs() < 1e-12);
        let late = couplingo2_bound(1.0, 10_000.0, 1.0, false).unwrap();
        assert!((late - 2.0f64.sqrt() / 100.0).abs() < 1e-12);
        let equal_starts = couplingo2_bound(1.0, 1.0, 1.0, true).unwrap();
        assert!(equal_starts < at_one);
    }

    #[test]
    fn couplingo2_halves_when_time_quadruples() {
        let b1 = couplingo2_bound(1.0, 100.0, 2.5, false).unwrap();
        let b2 = couplingo2_bound(1.0, 400.0, 2.5, false).unwrap();
        assert!((b1 / b2 - 2.0).abs() < 1e-10, "ratio {}", b1 / b2);
    }

    #[test]
    fn jensen_chain_holds_across_scales() {
        for &u in &[0.01, 0.1, 1.0, 10.0, 100.0, 500.0] {
            let (lhs, rhs) = jensen_chain_check(1.0, u).unwrap();
            assert!(lhs.is_finite() && rhs.is_finite(), "u = {u}");
            assert!(lhs <= rhs, "u = {u}: {lhs} > {rhs}");
            assert!(lhs > 0.0);
        }
    }

    #[test]
    fn jensen_lhs_matches_direct_sum_at_small_u() {
        // u = 0.5, first terms: 0.5 + 0.25/sqrt(2) + 0.125/(6 sqrt 3) + ...
        let mut direct = 0.0;
        let u: f64 = 0.5;
        let mut factorial = 1.0;
        for n in 1..=30u64 {
            factorial *= n as f64;
            direct += u.powi(n as i32) / ((n as f64).sqrt() * factorial);
        }
        let (lhs, _) = jensen_chain_check(0.5, 1.0).unwrap();
        assert!((lhs - direct).abs() < 1e-14);
    }

    #[test]
    fn jensen_rejects_overflowing_exponent() {
        assert!(jensen_chain_check(10.0, 100.0).is_err());
    }

    #[test]
    fn th2_bound_values() {
        let x = Point::new(vec![0.0]).unwrap();
        let y = Point::new(vec![3.0]).unwrap();
        let b = th2_bound(64.0, &x, &y, 1.5).unwrap();
        assert!((b - 1.5 * 4.0 / 8.0).abs() < 1e-12);
        assert_eq!(th2_bound(1e-6, &x, &y, 1.5).unwrap(), 2.0);
        let same = th2_bound(64.0, &x, &x, 1.5).unwrap();
        assert!((same - 1.5 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_constant_bounded_for_uniform_walk() {
        let law = MixedMeasure::uniform(-0.5, 0.5, 64).unwrap();
        let x = Point::new(vec![0.0]).unwrap();
        let y = Point::new(vec![0.25]).unwrap();
        let c = empirical_walk_constant(&law, &x, &y, 40).unwrap();
        assert!(c > 0.0 && c < 10.0, "c = {c}");
        // sqrt(n) * TV_n stabilizes: the max over twice the horizon should
        // not grow by more than a few percent.
        let c2 = empirical_walk_constant(&law, &x, &y, 80).unwrap();
        assert!(c2 <= c * 1.05, "c = {c}, c2 = {c2}");
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let times: Vec<f64> = (0..12).map(|k| 2.0f64.powi(k)).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 * t.powf(-0.5)).collect();
        let fit = fit_rate(&times, &values).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.times.len(), 12);
    }

    #[test]
    fn fit_drops_floor_values_and_enforces_span() {
        let times = vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
        let mut values: Vec<f64> = times.iter().map(|t: &f64| t.powf(-1.0)).collect();
        values[7] = 1e-14; // below floor, dropped; span shrinks to 64x
        let err = fit_rate(&times, &values);
        assert!(matches!(err, Err(Error::InsufficientData(_))));

        let few_times = vec![1.0, 10.0, 100.0, 1000.0];
        let few_values = vec![1.0, 0.3, 0.1, 0.03];
        assert!(matches!(
            fit_rate(&few_times, &few_values),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn fit_handles_noise_with_high_r_squared() {
        let times: Vec<f64> = (0..20).map(|k| 1.5f64.powi(k)).collect();
        let values: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, t)| t.powf(-0.5) * (1.0 + 0.01 * ((i as f64 * 0.7).sin())))
            .collect();
        let fit = fit_rate(&times, &values).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.01, "slope {}", fit.slope);
        assert!(fit.r_squared > 0.999);
    }
}
