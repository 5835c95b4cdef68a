//! Random-walk n-step laws and compound Poisson transition kernels.
//!
//! A compound Poisson process with jump intensity `lambda` and normalized
//! jump law `nu0` has transition kernel
//!
//! ```text
//! P_t(x, .) = e^{-lambda t} sum_{n >= 0} (lambda t)^n / n! * (nu0^{*n} shifted by x)
//! ```
//!
//! [`SemigroupSeries`] evaluates a truncation of this series whose discarded
//! Poisson tail is certified to be at most the requested tolerance, so every
//! downstream quantity carries an explicit error interval instead of a bare
//! estimate.

use crate::error::{Error, Result};
use crate::measure::{GridMismatch, MixedMeasure, Point, SnapPolicy, DEFAULT_CONVOLUTION_BUDGET};

/// Default certified truncation tolerance for the Poisson series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-8;

/// Above this value of `lambda * t` the Poisson weights are computed in the
/// log domain to avoid underflow of the leading factor.
const LOG_DOMAIN_THRESHOLD: f64 = 700.0;

/// Compensated (Kahan) accumulator; the weight sums must stay accurate to
/// well below 1e-12 even with millions of terms.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Poisson(lambda_t) probabilities `w_0..=w_N` where `N` is the smallest
/// order whose remaining tail is at most `tol`, together with that tail
/// (computed by continued forward summation, not by cancellation against 1).
pub fn poisson_weights(lambda_t: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    if !lambda_t.is_finite() || lambda_t < 0.0 {
        return Err(Error::Invalid(format!(
            "lambda*t must be finite and nonnegative, got {lambda_t}"
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Invalid(format!(
            "series tolerance must lie in (0, 1), got {tol}"
        )));
    }
    if lambda_t == 0.0 {
        return Ok((vec![1.0], 0.0));
    }
    let log_domain = lambda_t > LOG_DOMAIN_THRESHOLD;
    let ln_lt = lambda_t.ln();
    let mut weights = Vec::new();
    let mut ln_w = -lambda_t;
    let mut w = ln_w.exp();
    let mut cum = KahanSum::default();
    let mut n = 0u64;
    loop {
        weights.push(w);
        cum.add(w);
        if 1.0 - cum.value() <= tol {
            break;
        }
        n += 1;
        if n > 50_000_000 {
            return Err(Error::Invalid(format!(
                "Poisson series at lambda*t = {lambda_t} did not reach tolerance {tol} within 5e7 terms"
            )));
        }
        if log_domain {
            ln_w += ln_lt - (n as f64).ln();
            w = ln_w.exp();
        } else {
            w = w * lambda_t / n as f64;
        }
    }
    // The remaining tail, summed forward until the terms vanish relative to
    // the partial sum. Terms may still grow toward the mode first, so the
    // smallness test alone decides termination.
    let mut tail = KahanSum::default();
    let mut m = n;
    let mut wt = w;
    let mut ln_wt = ln_w;
    loop {
        m += 1;
        if log_domain {
            ln_wt += ln_lt - (m as f64).ln();
            wt = ln_wt.exp();
        } else {
            wt = wt * lambda_t / m as f64;
        }
        tail.add(wt);
        let past_mode = m as f64 > lambda_t;
        if wt == 0.0
            || (past_mode && wt <= f64::EPSILON * 1e-3 * (tail.value() + f64::MIN_POSITIVE))
        {
            break;
        }
        if m - n > 50_000_000 {
            break;
        }
    }
    Ok((weights, tail.value()))
}

/// Poisson(lambda_t) probabilities for every order `0..=n_max`, regardless of
/// where the tail becomes negligible.
pub fn poisson_pmf_vec(lambda_t: f64, n_max: usize) -> Result<Vec<f64>> {
    if !lambda_t.is_finite() || lambda_t < 0.0 {
        return Err(Error::Invalid(format!(
            "lambda*t must be finite and nonnegative, got {lambda_t}"
        )));
    }
    if lambda_t == 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    let log_domain = lambda_t > LOG_DOMAIN_THRESHOLD;
    let ln_lt = lambda_t.ln();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut ln_w = -lambda_t;
    let mut w = ln_w.exp();
    out.push(w);
    for n in 1..=n_max {
        if log_domain {
            ln_w += ln_lt - (n as f64).ln();
            w = ln_w.exp();
        } else {
            w = w * lambda_t / n as f64;
        }
        out.push(w);
    }
    Ok(out)
}

/// Law of `start + S_n` where `S_n` is the random walk with the given step
/// distribution.
pub fn rw_law(step_law: &MixedMeasure, n: usize, start: &Point) -> Result<MixedMeasure> {
    let power = step_law.convolution_power(n)?;
    Ok(power.shift(start.coords()))
}

/// Total variation distances between the n-step laws started at `x` and `y`,
/// for `n = 1..=n_max`, streaming the convolution powers. Density parts on
/// incompatible lattices are treated as mutually singular.
pub fn step_tv_sequence(
    step_law: &MixedMeasure,
    x: &Point,
    y: &Point,
    n_max: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max);
    let mut cur = MixedMeasure::dirac_origin(step_law.dim());
    for _ in 1..=n_max {
        cur = cur.convolve(step_law)?;
        let tv = cur
            .shift(x.coords())
            .tv_distance_with(&cur.shift(y.coords()), GridMismatch::Disjoint)?;
        out.push(tv);
    }
    Ok(out)
}

/// A two-sided bracket around a total variation distance: the value computed
/// from the truncated series plus the certified truncation slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvInterval {
    /// TV distance between the truncated (sub-probability) kernels.
    pub center: f64,
    /// `max(0, center - 2 * tail_mass)`.
    pub lower: f64,
    /// `min(2, center + 2 * tail_mass)`.
    pub upper: f64,
}

impl TvInterval {
    fn around(center: f64, tail_mass: f64) -> Self {
        TvInterval {
            center,
            lower: (center - 2.0 * tail_mass).max(0.0),
            upper: (center + 2.0 * tail_mass).min(2.0),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A compound Poisson transition kernel at a fixed time, evaluated as a
/// truncated Poisson-weighted sum of convolution powers of the jump law.
#[derive(Debug, Clone)]
pub struct SemigroupSeries {
    step_law: MixedMeasure,
    rate: f64,
    time: f64,
    tol: f64,
    order: usize,
    weights: Vec<f64>,
    tail_mass: f64,
    /// `sum_{n <= N} w_n * nu0^{*n}`: the kernel from the origin. Kernels
    /// from other points are exact translates of this one.
    origin_law: MixedMeasure,
}

impl SemigroupSeries {
    /// Builds the series for a normalized jump law and explicit rate.
    pub fn build(step_law: &MixedMeasure, rate: f64, time: f64, tol: f64) -> Result<Self> {
        Self::build_with(
            step_law,
            rate,
            time,
            tol,
            SnapPolicy::Error,
            DEFAULT_CONVOLUTION_BUDGET,
        )
    }

    pub fn build_with(
        step_law: &MixedMeasure,
        rate: f64,
        time: f64,
        tol: f64,
        snap: SnapPolicy,
        budget: usize,
    ) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::Invalid(format!(
                "jump rate must be finite and nonnegative, got {rate}"
            )));
        }
        if !time.is_finite() || time < 0.0 {
            return Err(Error::Invalid(format!(
                "time must be finite and nonnegative, got {time}"
            )));
        }
        if !step_law.is_probability_within(1e-6) {
            return Err(Error::Invalid(format!(
                "step law must be a probability measure, total mass is {}",
                step_law.total_mass()
            )));
        }
        let (weights, tail_mass) = poisson_weights(rate * time, tol)?;
        let order = weights.len() - 1;
        let mut origin_law = MixedMeasure::dirac_origin(step_law.dim()).scale(weights[0]);
        let mut cur = MixedMeasure::dirac_origin(step_law.dim());
        for (n, &w) in weights.iter().enumerate().skip(1) {
            cur = cur
                .convolve_with(step_law, snap, budget)
                .map_err(|e| match e {
                    Error::BudgetExceeded { budget, .. } => Error::BudgetExceeded {
                        achieved: n - 1,
                        budget,
                    },
                    other => other,
                })?;
            if w > 0.0 {
                origin_law = origin_law.add_snapping(&cur.scale(w), snap, budget)?;
            }
        }
        Ok(SemigroupSeries {
            step_law: step_law.clone(),
            rate,
            time,
            tol,
            order,
            weights,
            tail_mass,
            origin_law,
        })
    }

    /// Builds the series directly from a finite jump measure, splitting it
    /// into its total mass (the rate) and normalized jump law.
    pub fn from_jump_measure(jump: &MixedMeasure, time: f64, tol: f64) -> Result<Self> {
        let (step_law, rate) = jump.normalize()?;
        Self::build(&step_law, rate, time, tol)
    }

    pub fn step_law(&self) -> &MixedMeasure {
        &self.step_law
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Poisson weights `w_0..=w_N` including the `e^{-lambda t}` factor.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Certified mass of the discarded series tail.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// The truncated kernel from the origin (total mass `1 - tail_mass`).
    pub fn origin_law(&self) -> &MixedMeasure {
        &self.origin_law
    }

    /// The truncated kernel from `x`: an exact translate of the origin kernel.
    pub fn cp_transition(&self, x: &Point) -> MixedMeasure {
        self.origin_law.shift(x.coords())
    }

    /// Bracket around the exact `||P_t(x, .) - P_t(y, .)||` in total
    /// variation. The center is the TV distance of the truncated kernels;
    /// the certified truncation slack widens it by `2 * tail_mass` each way.
    /// Density parts whose shifted grids share no lattice are exactly
    /// mutually singular, so they contribute the sum of their masses.
    pub fn cp_tv(&self, x: &Point, y: &Point) -> Result<TvInterval> {
        let px = self.cp_transition(x);
        let py = self.cp_transition(y);
        let center = px.tv_distance_with(&py, GridMismatch::Disjoint)?;
        Ok(TvInterval::around(center, self.tail_mass))
    }

    /// Upper bound on `||P_t(x, .) - P_t(y, .)||` obtained by pushing the
    /// total variation inside the series term by term:
    ///
    /// ```text
    /// e^{-lambda t} [ 2 (1 - delta_{x,y}) + sum_{n>=1} (lambda t)^n / n! * ||nu0^{*n}(.-x) - nu0^{*n}(.-y)|| ]
    /// ```
    ///
    /// plus `2 * tail_mass` for the discarded orders.
    pub fn series_tv_bound(&self, x: &Point, y: &Point) -> Result<f64> {
        let same = x.coords() == y.coords();
        let mut bound = KahanSum::default();
        bound.add(self.weights[0] * if same { 0.0 } else { 2.0 });
        let mut cur = MixedMeasure::dirac_origin(self.step_law.dim());
        for &w in self.weights.iter().skip(1) {
            cur = cur.convolve(&self.step_law)?;
            if w == 0.0 {
                continue;
            }
            let tv = cur
                .shift(x.coords())
                .tv_distance_with(&cur.shift(y.coords()), GridMismatch::Disjoint)?;
            bound.add(w * tv);
        }
        bound.add(2.0 * self.tail_mass);
        Ok(bound.value())
    }
}

/// Sequence of `cp_tv` centers along a strictly increasing time grid; the
/// exact kernel distance is non-increasing in time, so the returned sequence
/// must not increase by more than the certified slack.
pub fn monotone_tv_check(
    step_law: &MixedMeasure,
    rate: f64,
    x: &Point,
    y: &Point,
    times: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("times must be strictly increasing".into()));
    }
    times
        .iter()
        .map(|&t| {
            let series = SemigroupSeries::build(step_law, rate, t, tol)?;
            Ok(series.cp_tv(x, y)?.center)
        })
        .collect()
}

/// Verifies the shift inequality `P_{t+s} f(i) >= e^{-lambda s} P_t f(i)` for
/// the Poisson counting process on the integers, over all indicator functions
/// `f = 1_{{j}}` and start points `i` with `|i|, |j| <= f_support_radius`.
pub fn poisson_shift_inequality_check(
    rate: f64,
    t: f64,
    s: f64,
    f_support_radius: usize,
) -> Result<bool> {
    if !rate.is_finite() || rate < 0.0 || !t.is_finite() || t < 0.0 || !s.is_finite() || s < 0.0 {
        return Err(Error::Invalid(
            "rate, t, and s must be finite and nonnegative".into(),
        ));
    }
    let r = f_support_radius as i64;
    let n_max = (2 * r) as usize;
    let pmf_t = poisson_pmf_vec(rate * t, n_max)?;
    let pmf_ts = poisson_pmf_vec(rate * (t + s), n_max)?;
    let decay = (-rate * s).exp();
    for i in -r..=r {
        for j in -r..=r {
            // P_t 1_{{j}}(i) is the chance the count moves i exactly to j.
            let step = j - i;
            let (lhs, rhs) = if step < 0 {
                (0.0, 0.0)
            } else {
                (pmf_ts[step as usize], decay * pmf_t[step as usize])
            };
            if lhs + 1e-12 < rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
