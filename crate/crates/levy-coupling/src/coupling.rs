//! The shift coupling for random walks whose step law overlaps a translate
//! of itself, and its subordination to compound Poisson processes.
//!
//! Given a step law `nu` and a displacement `a`, the coupled pair draws a
//! common component so that the two steps differ by `+|a| e_1`, `-|a| e_1`,
//! or `0`, each marginal staying exactly `nu`-distributed. The difference of
//! the two walks is then a lazy simple walk on the lattice `|a| Z`, and the
//! walks merge when that difference first returns to zero. Evaluating the
//! coupled walks at the arrival times of an independent Poisson clock turns
//! a walk coupling into a coupling of compound Poisson processes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::criteria::eta0;
use crate::error::{Error, Result};
use crate::measure::{GridMismatch, MixedMeasure, Point};

/// Hard default censoring horizon (in walk steps) for passage-time simulation.
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

/// Overlap masses at or below this are treated as a degenerate coupling.
const OVERLAP_EPS: f64 = 1e-12;

/// Draws points from a normalized mixed measure: a categorical choice over
/// atoms and grid cells, uniform within the chosen cell.
#[derive(Debug, Clone)]
struct MeasureSampler {
    dim: usize,
    /// Cumulative probabilities over entries; the last value is ~1.
    cum: Vec<f64>,
    /// Atom location or cell anchor, row-major.
    locs: Vec<f64>,
    /// Number of leading entries that are atoms; the rest are cells.
    n_atoms: usize,
    spacing: f64,
}

impl MeasureSampler {
    fn new(m: &MixedMeasure) -> Result<Self> {
        let total = m.total_mass();
        if total <= OVERLAP_EPS {
            return Err(Error::ZeroMass);
        }
        let dim = m.dim();
        let mut cum = Vec::new();
        let mut locs = Vec::new();
        let mut acc = 0.0;
        for (x, w) in m.atomic().iter() {
            acc += w / total;
            cum.push(acc);
            locs.extend_from_slice(x);
        }
        let n_atoms = cum.len();
        let mut spacing = 1.0;
        if let Some(g) = m.density() {
            spacing = g.spacing();
            for (k, &w) in g.cells().iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                acc += w / total;
                cum.push(acc);
                let center = g.cell_center(k);
                for (ax, c) in center.iter().enumerate() {
                    let _ = ax;
                    locs.push(c - 0.5 * spacing);
                }
            }
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Ok(MeasureSampler {
            dim,
            cum,
            locs,
            n_atoms,
            spacing,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let idx = self
            .cum
            .partition_point(|&c| c <= u)
            .min(self.cum.len() - 1);
        let loc = &self.locs[idx * self.dim..(idx + 1) * self.dim];
        if idx < self.n_atoms {
            loc.to_vec()
        } else {
            loc.iter()
                .map(|&anchor| anchor + self.spacing * rng.random::<f64>())
                .collect()
        }
    }
}

/// Joint law of one coupled step, constructed in the rotated frame where the
/// displacement points along the positive first axis.
#[derive(Debug, Clone)]
pub struct MinekaStepLaw {
    displacement: Point,
    magnitude: f64,
    base_law: MixedMeasure,
    comp_plus: MixedMeasure,
    comp_minus: MixedMeasure,
    comp_zero: MixedMeasure,
    p_plus: f64,
    p_minus: f64,
    p_zero: f64,
    sampler_plus: MeasureSampler,
    sampler_minus: MeasureSampler,
    sampler_zero: MeasureSampler,
}

/// Builds the coupled step law for step distribution `nu0` and displacement
/// `a`: the step pair differs by `+|a| e_1` with probability
/// `(nu /\ nu(. + |a| e_1))(R^d) / 2`, by `-|a| e_1` with the same
/// probability, and is equal otherwise. Everything is computed on the
/// rotated law `nu = nu0 o R_a^{-1}`.
pub fn build_mineka(nu0: &MixedMeasure, a: &Point) -> Result<MinekaStepLaw> {
    if !nu0.is_probability_within(1e-6) {
        return Err(Error::Invalid(format!(
            "step law must be a probability measure, total mass is {}",
            nu0.total_mass()
        )));
    }
    if a.dim() != nu0.dim() {
        return Err(Error::DimensionMismatch {
            expected: nu0.dim(),
            got: a.dim(),
        });
    }
    let nu = nu0.rotate_to_e1(a.coords())?;
    let mag = a.norm();
    let dim = nu.dim();
    let mut minus_shift = vec![0.0; dim];
    minus_shift[0] = -mag;
    let mut plus_shift = vec![0.0; dim];
    plus_shift[0] = mag;

    // Overlap with the left and right translates. Translates that fall off
    // the density lattice are exactly singular, hence zero overlap.
    let m_minus = nu.meet_with(&nu.shift(&minus_shift), GridMismatch::Disjoint)?;
    let m_plus = nu.meet_with(&nu.shift(&plus_shift), GridMismatch::Disjoint)?;
    let overlap = m_minus.total_mass();
    if (overlap - m_plus.total_mass()).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "left/right overlap masses differ beyond tolerance: {} vs {}",
            overlap,
            m_plus.total_mass()
        )));
    }
    if overlap <= OVERLAP_EPS {
        return Err(Error::DegenerateOverlap);
    }
    let p_plus = overlap / 2.0;
    let p_minus = p_plus;
    let p_zero = (1.0 - overlap).max(0.0);

    let half_sum = m_minus.scale(0.5).add(&m_plus.scale(0.5))?;
    let residual = nu.sub(&half_sum, 1e-9)?;
    let comp_plus = m_minus.normalize()?.0;
    let comp_minus = m_plus.normalize()?.0;
    let comp_zero = match residual.normalize() {
        Ok((c, _)) => c,
        // Full overlap leaves no residual; the zero component is never drawn.
        Err(Error::ZeroMass) => nu.clone(),
        Err(e) => return Err(e),
    };

    let sampler_plus = MeasureSampler::new(&comp_plus)?;
    let sampler_minus = MeasureSampler::new(&comp_minus)?;
    let sampler_zero = MeasureSampler::new(&comp_zero)?;
    Ok(MinekaStepLaw {
        displacement: a.clone(),
        magnitude: mag,
        base_law: nu,
        comp_plus,
        comp_minus,
        comp_zero,
        p_plus,
        p_minus,
        p_zero,
        sampler_plus,
        sampler_minus,
        sampler_zero,
    })
}

impl MinekaStepLaw {
    pub fn displacement(&self) -> &Point {
        &self.displacement
    }

    /// `|a|`.
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// The rotated step law both marginals follow.
    pub fn base_law(&self) -> &MixedMeasure {
        &self.base_law
    }

    pub fn comp_plus(&self) -> &MixedMeasure {
        &self.comp_plus
    }

    pub fn comp_minus(&self) -> &MixedMeasure {
        &self.comp_minus
    }

    pub fn comp_zero(&self) -> &MixedMeasure {
        &self.comp_zero
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_zero(&self) -> f64 {
        self.p_zero
    }

    /// Probability that the two coupled steps coincide.
    pub fn stay_prob(&self) -> f64 {
        self.p_zero
    }

    /// Mixture defect `|| p+ comp+ + p- comp- + p0 comp0 - nu ||` in total
    /// variation; zero up to floating error by construction.
    pub fn mixture_defect(&self) -> Result<f64> {
        let mix = self
            .comp_plus
            .scale(self.p_plus)
            .add(&self.comp_minus.scale(self.p_minus))?
            .add(&self.comp_zero.scale(self.p_zero))?;
        mix.tv_distance(&self.base_law)
    }

    /// Draws one coupled step `(xi, xi')` in the rotated frame. Both
    /// marginals are `base_law`-distributed and `xi' - xi` is `+|a| e_1`,
    /// `-|a| e_1`, or zero.
    pub fn sample_coupled_step<R: Rng + ?Sized>(&self, rng: &mut R) -> (Point, Point) {
        let u: f64 = rng.random();
        let (sampler, delta) = if u < self.p_plus {
            (&self.sampler_plus, self.magnitude)
        } else if u < self.p_plus + self.p_minus {
            (&self.sampler_minus, -self.magnitude)
        } else {
            (&self.sampler_zero, 0.0)
        };
        let xi = sampler.sample(rng);
        let mut xi_prime = xi.clone();
        xi_prime[0] += delta;
        (
            Point::new(xi).expect("sampled point"),
            Point::new(xi_prime).expect("sampled point"),
        )
    }
}

/// First-passage time of the difference walk, or censoring at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassageTime {
    Hit(u64),
    Censored { horizon: u64 },
}

impl PassageTime {
    pub fn is_hit(&self) -> bool {
        matches!(self, PassageTime::Hit(_))
    }
}

/// First time a lazy simple walk (hold probability `stay_prob`, otherwise
/// fair `+1`/`-1`), started at 0, hits `+1`.
pub fn simulate_first_passage<R: Rng + ?Sized>(
    stay_prob: f64,
    max_steps: u64,
    rng: &mut R,
) -> PassageTime {
    debug_assert!((0.0..1.0).contains(&stay_prob));
    let p_move = 0.5 * (1.0 - stay_prob);
    let mut z: i64 = 0;
    for n in 1..=max_steps {
        let u: f64 = rng.random();
        if u < p_move {
            z += 1;
            if z == 1 {
                return PassageTime::Hit(n);
            }
        } else if u < 2.0 * p_move {
            z -= 1;
        }
    }
    PassageTime::Censored { horizon: max_steps }
}

/// Coupling time `T^S` of the two walks: the difference walk moves by
/// `-|a|`, `0`, `+|a|` with probabilities `(1 - P(a))/2`, `P(a)`,
/// `(1 - P(a))/2`, and the walks couple when it first hits `+|a|`.
pub fn simulate_t_s<R: Rng + ?Sized>(
    law: &MinekaStepLaw,
    max_steps: u64,
    rng: &mut R,
) -> PassageTime {
    simulate_first_passage(law.stay_prob(), max_steps, rng)
}

/// `P(T > n)` for `n = 0..=n_max` where `T` is the first-passage time of
/// [`simulate_first_passage`], by exact dynamic programming on the
/// not-yet-absorbed states `z <= 0`. The state vector is trimmed where the
/// occupation probabilities underflow to exact zero, so the cost stays
/// `O(n_max^1.5)`-ish rather than quadratic.
pub fn exact_first_passage(stay_prob: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&stay_prob) {
        return Err(Error::Invalid(format!(
            "stay probability must lie in [0, 1), got {stay_prob}"
        )));
    }
    let p = 0.5 * (1.0 - stay_prob);
    let q = stay_prob;
    // f[i] = P(Z_n = z_lo + i, T > n); index f.len() - 1 is state 0.
    let mut f: Vec<f64> = vec![1.0];
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    for _ in 1..=n_max {
        let len = f.len();
        let mut next = vec![0.0; len + 1];
        // next has one extra state on the left (z_lo decreases by 1); state 0
        // stays the rightmost entry. A move up out of state 0 is absorption.
        for (i, &mass) in f.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let j = i + 1; // same state in `next` indexing
            next[j - 1] += mass * p;
            next[j] += mass * q;
            if j + 1 < next.len() {
                next[j + 1] += mass * p;
            }
        }
        // Trim exact-zero occupation on the far left.
        let first_nonzero = next.iter().position(|&m| m > 0.0).unwrap_or(next.len() - 1);
        if first_nonzero > 0 {
            next.drain(..first_nonzero);
        }
        f = next;
        out.push(f.iter().sum());
    }
    Ok(out)
}

/// Occupation probabilities `P(Z_n = z)` for `z = -n..=n` (index `z + n`) of
/// the unabsorbed lazy walk, for reflection-type comparisons.
pub fn lazy_walk_occupation(stay_prob: f64, n: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&stay_prob) {
        return Err(Error::Invalid(format!(
            "stay probability must lie in [0, 1), got {stay_prob}"
        )));
    }
    let p = 0.5 * (1.0 - stay_prob);
    let q = stay_prob;
    let width = 2 * n + 1;
    let mut f = vec![0.0; width];
    f[n] = 1.0;
    let mut next = vec![0.0; width];
    for _ in 0..n {
        next.iter_mut().for_each(|m| *m = 0.0);
        for (i, &mass) in f.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            next[i] += mass * q;
            if i > 0 {
                next[i - 1] += mass * p;
            }
            if i + 1 < width {
                next[i + 1] += mass * p;
            }
        }
        std::mem::swap(&mut f, &mut next);
    }
    Ok(f)
}

/// One subordinated coupling draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSample {
    /// Walk coupling time `T^S` (or censoring).
    pub t_s: PassageTime,
    /// Seed of the generator used for the arrival-time draw; replaying it
    /// reproduces `t_l` exactly.
    pub poisson_path_seed: u64,
    /// Coupling time of the compound Poisson pair: the `T^S`-th arrival of a
    /// rate-`lambda` Poisson clock. `None` when censored.
    pub t_l: Option<f64>,
    /// First time the clock count reaches `T^S`; equals `t_l` identically.
    pub k_xy: Option<f64>,
    /// When censored: the drawn arrival time of the horizon-th jump, a lower
    /// bound for the unobserved `t_l`.
    pub censored_at: Option<f64>,
}

/// Steps after which a censored walk's arrival time almost surely exceeds
/// `max_time` (twelve standard deviations past the expected count).
fn derived_step_cap(rate: f64, max_time: f64) -> u64 {
    let lt = rate * max_time;
    (lt + 12.0 * (lt + 1.0).sqrt() + 200.0).ceil() as u64
}

fn simulate_t_l_capped<R: Rng + ?Sized>(
    law: &MinekaStepLaw,
    rate: f64,
    max_steps: u64,
    rng: &mut R,
) -> Result<CouplingSample> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::Invalid(format!(
            "clock rate must be positive, got {rate}"
        )));
    }
    let t_s = simulate_t_s(law, max_steps, rng);
    let poisson_path_seed = rng.next_u64();
    let mut clock_rng = ChaCha8Rng::seed_from_u64(poisson_path_seed);
    let arrival = |k: u64, rng: &mut ChaCha8Rng| -> Result<f64> {
        let gamma = Gamma::new(k as f64, 1.0 / rate)
            .map_err(|e| Error::Invalid(format!("gamma arrival draw: {e}")))?;
        Ok(gamma.sample(rng))
    };
    Ok(match t_s {
        PassageTime::Hit(k) => {
            let t = arrival(k, &mut clock_rng)?;
            CouplingSample {
                t_s,
                poisson_path_seed,
                t_l: Some(t),
                k_xy: Some(t),
                censored_at: None,
            }
        }
        PassageTime::Censored { horizon } => {
            let at = arrival(horizon, &mut clock_rng)?;
            CouplingSample {
                t_s,
                poisson_path_seed,
                t_l: None,
                k_xy: None,
                censored_at: Some(at),
            }
        }
    })
}

/// Draws the compound Poisson coupling time `T^L`: first samples the walk
/// coupling time `T^S`, then the `T^S`-th arrival of an independent
/// rate-`lambda` clock (a single Gamma draw). The censoring horizon is
/// `max(steps needed to pass max_time, default cap)`-bounded so censored
/// samples almost surely exceed `max_time`.
pub fn simulate_t_l<R: Rng + ?Sized>(
    law: &MinekaStepLaw,
    rate: f64,
    max_time: f64,
    rng: &mut R,
) -> Result<CouplingSample> {
    if !max_time.is_finite() || max_time <= 0.0 {
        return Err(Error::Invalid(format!(
            "max_time must be positive, got {max_time}"
        )));
    }
    let cap = derived_step_cap(rate, max_time).min(DEFAULT_MAX_STEPS);
    simulate_t_l_capped(law, rate, cap, rng)
}

/// Monte Carlo plan: sample count, seeding, and parallel layout. Results are
/// a deterministic function of `(seed, chunk_size)` and the sample count,
/// independent of the worker count.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub n_samples: u64,
    pub seed: u64,
    /// 0 means "use the ambient thread pool".
    pub workers: usize,
    pub chunk_size: u64,
    pub max_steps: u64,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        SimulationPlan {
            n_samples: 100_000,
            seed: 0,
            workers: 0,
            chunk_size: 4096,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

/// One row of the estimated survival function of `T^L`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SurvivalPoint {
    pub t: f64,
    pub n_samples: u64,
    /// Fraction of samples certainly exceeding `t` (right-censored samples
    /// whose censor point is below `t` are excluded, making this a lower
    /// bound).
    pub p_hat: f64,
    /// Binomial standard error at `p_hat`.
    pub stderr: f64,
    /// Samples censored below `t` (indicator unknown).
    pub n_censored: u64,
}

/// Estimates `P(T^L > t)` on a time grid. Work is split into fixed-size
/// chunks; chunk `c` uses an independent RNG stream `c` of the seed, so the
/// estimate is reproducible for a given `(seed, chunk_size)` regardless of
/// how many workers execute the chunks.
pub fn estimate_survival(
    law: &MinekaStepLaw,
    rate: f64,
    t_grid: &[f64],
    plan: &SimulationPlan,
) -> Result<Vec<SurvivalPoint>> {
    if t_grid.is_empty() {
        return Err(Error::Invalid("time grid must be non-empty".into()));
    }
    if t_grid.iter().any(|&t| !t.is_finite() || t <= 0.0) {
        return Err(Error::Invalid(
            "time grid entries must be positive and finite".into(),
        ));
    }
    if plan.n_samples == 0 || plan.chunk_size == 0 {
        return Err(Error::Invalid(
            "sample count and chunk size must be positive".into(),
        ));
    }
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::Invalid(format!(
            "clock rate must be positive, got {rate}"
        )));
    }
    let t_max = t_grid.iter().cloned().fold(f64::MIN, f64::max);
    let cap = derived_step_cap(rate, t_max).min(plan.max_steps);
    let n_chunks = plan.n_samples.div_ceil(plan.chunk_size);

    let run_chunk = |chunk: u64| -> Result<(Vec<u64>, Vec<u64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(chunk);
        let start = chunk * plan.chunk_size;
        let count = plan.chunk_size.min(plan.n_samples - start);
        let mut exceed = vec![0u64; t_grid.len()];
        let mut unknown = vec![0u64; t_grid.len()];
        for _ in 0..count {
            let sample = simulate_t_l_capped(law, rate, cap, &mut rng)?;
            match (sample.t_l, sample.censored_at) {
                (Some(t_l), _) => {
                    for (i, &t) in t_grid.iter().enumerate() {
                        if t_l > t {
                            exceed[i] += 1;
                        }
                    }
                }
                (None, Some(at)) => {
                    for (i, &t) in t_grid.iter().enumerate() {
                        if at > t {
                            exceed[i] += 1;
                        } else {
                            unknown[i] += 1;
                        }
                    }
                }
                (None, None) => unreachable!("censored sample carries its censor time"),
            }
        }
        Ok((exceed, unknown))
    };

    let chunk_results: Result<Vec<(Vec<u64>, Vec<u64>)>> = if plan.workers == 1 {
        (0..n_chunks).map(run_chunk).collect()
    } else {
        let body = || (0..n_chunks).into_par_iter().map(run_chunk).collect();
        if plan.workers == 0 {
            body()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(plan.workers)
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            pool.install(body)
        }
    };
    let chunk_results = chunk_results?;

    let mut exceed = vec![0u64; t_grid.len()];
    let mut unknown = vec![0u64; t_grid.len()];
    for (e, u) in chunk_results {
        for i in 0..t_grid.len() {
            exceed[i] += e[i];
            unknown[i] += u[i];
        }
    }
    let n = plan.n_samples as f64;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let p_hat = exceed[i] as f64 / n;
            SurvivalPoint {
                t,
                n_samples: plan.n_samples,
                p_hat,
                stderr: (p_hat * (1.0 - p_hat) / n).sqrt(),
                n_censored: unknown[i],
            }
        })
        .collect())
}

/// Chained total-variation bound for the `n`-step random walk:
/// `(floor(|x-y|/delta) + 1) * 2 * P(T > n)` where `T` is the first-passage
/// time of the difference walk run at the worst-case stay probability
/// `1 - eta0(delta)` over the displacement grid.
pub fn chained_tv_bound(
    nu0: &MixedMeasure,
    delta: f64,
    x: &Point,
    y: &Point,
    n: usize,
    grid_step: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("step count must be at least 1".into()));
    }
    let eta = eta0(nu0, delta, grid_step)?;
    if eta <= OVERLAP_EPS {
        return Err(Error::CriterionFailed(format!(
            "minimal overlap over displacements up to {delta} is zero; no chaining bound exists"
        )));
    }
    let gamma = (1.0 - eta).max(0.0);
    let survival = exact_first_passage(gamma, n)?;
    let dist: f64 = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let k = (dist / delta).floor() + 1.0;
    Ok(k * 2.0 * survival[n])
}

/// Trace of a coupled walk pair started at `0` and `|a| e_1` in the rotated
/// frame: coupled steps until the walkers meet, common steps afterwards.
/// Useful for inspection; the marginal laws and the coupling time statistics
/// are exercised by the dedicated samplers above.
pub fn simulate_pair_trace<R: Rng + ?Sized>(
    law: &MinekaStepLaw,
    n_steps: usize,
    rng: &mut R,
) -> Vec<(Point, Point)> {
    let dim = law.base_law().dim();
    let mut p = vec![0.0; dim];
    let mut q = vec![0.0; dim];
    q[0] = law.magnitude();
    let mut coupled = false;
    let mut trace = Vec::with_capacity(n_steps + 1);
    trace.push((
        Point::new(p.clone()).unwrap(),
        Point::new(q.clone()).unwrap(),
    ));
    for _ in 0..n_steps {
        // After the meeting both walkers reuse xi; its marginal is the base
        // law, so the trace marginals stay exact.
        let (xi, xi_prime) = law.sample_coupled_step(rng);
        for ax in 0..dim {
            p[ax] += xi.coords()[ax];
            q[ax] += if coupled {
                xi.coords()[ax]
            } else {
                xi_prime.coords()[ax]
            };
        }
        if !coupled && (p[0] - q[0]).abs() < 0.5 * law.magnitude() {
            coupled = true;
            q.clone_from_slice(&p);
        }
        trace.push((
            Point::new(p.clone()).unwrap(),
            Point::new(q.clone()).unwrap(),
        ));
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MixedMeasure;

    fn seeded(n: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(n)
    }

    fn uniform_law() -> MixedMeasure {
        MixedMeasure::uniform(0.0, 1.0, 512).unwrap()
    }

    #[test]
    fn mineka_probabilities_for_uniform_law() {
        let law = build_mineka(&uniform_law(), &Point::scalar(0.25)).unwrap();
        assert!((law.p_plus() - 0.375).abs() < 1e-12);
        assert!((law.p_minus() - 0.375).abs() < 1e-12);
        assert!((law.p_zero() - 0.25).abs() < 1e-12);
        assert!(law.mixture_defect().unwrap() < 1e-9);
    }

    #[test]
    fn mineka_probabilities_for_two_point_law() {
        let nu = MixedMeasure::from_atoms(1, &[(vec![-1.0], 0.5), (vec![1.0], 0.5)]).unwrap();
        let law = build_mineka(&nu, &Point::scalar(2.0)).unwrap();
        assert!((law.p_plus() - 0.25).abs() < 1e-12);
        assert!((law.p_zero() - 0.5).abs() < 1e-12);
        assert!(matches!(
            build_mineka(&nu, &Point::scalar(1.0)),
            Err(Error::DegenerateOverlap)
        ));
    }

    #[test]
    fn coupled_steps_differ_by_displacement_only() {
        let law = build_mineka(&uniform_law(), &Point::scalar(0.25)).unwrap();
        let mut rng = seeded(7);
        let mut seen = [false; 3];
        for _ in 0..2000 {
            let (xi, xi_prime) = law.sample_coupled_step(&mut rng);
            let d = xi_prime.coords()[0] - xi.coords()[0];
            let idx = if d > 0.1 {
                assert!((d - 0.25).abs() < 1e-12);
                0
            } else if d < -0.1 {
                assert!((d + 0.25).abs() < 1e-12);
                1
            } else {
                assert_eq!(d, 0.0);
                2
            };
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn dp_matches_exhaustive_enumeration() {
        // All 3^n step sequences with probabilities (p, q, p) for
        // (-1, 0, +1); absorbing at +1.
        for &stay in &[0.0, 0.25, 0.5] {
            let p = 0.5 * (1.0 - stay);
            let n_max = 12;
            // (state, steps, prob, absorbed): accumulate survival per depth.
            let mut stack: Vec<(i64, usize, f64, bool)> = vec![(0, 0, 1.0, false)];
            let mut survive = vec![0.0; n_max + 1];
            survive[0] = 1.0;
            while let Some((z, n, prob, absorbed)) = stack.pop() {
                if n == n_max || absorbed {
                    continue;
                }
                for (dz, pr) in [(-1i64, p), (0, stay), (1, p)] {
                    if pr == 0.0 {
                        continue;
                    }
                    let nz = z + dz;
                    let hit = nz == 1;
                    if !hit {
                        survive[n + 1] += prob * pr;
                    }
                    stack.push((nz, n + 1, prob * pr, hit));
                }
            }
            let dp = exact_first_passage(stay, n_max).unwrap();
            for n in 0..=n_max {
                assert!(
                    (dp[n] - survive[n]).abs() < 1e-12,
                    "stay {stay}, n {n}: dp {} vs enum {}",
                    dp[n],
                    survive[n]
                );
            }
        }
    }

    #[test]
    fn fair_walk_small_tails_are_exact() {
        let dp = exact_first_passage(0.0, 3).unwrap();
        assert_eq!(dp[0], 1.0);
        assert!((dp[1] - 0.5).abs() < 1e-15);
        assert!((dp[2] - 0.5).abs() < 1e-15);
        // One path absorbs at step 1 (prob 1/2) and one at step 3
        // (down-up-up, prob 1/8); enumeration fixes the tail at 3/8.
        assert!((dp[3] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn reflection_bound_holds() {
        for &stay in &[0.0, 0.25, 0.5, 0.75] {
            let n_max = 200;
            let tails = exact_first_passage(stay, n_max).unwrap();
            for n in (10..=n_max).step_by(10) {
                let occ = lazy_walk_occupation(stay, n).unwrap();
                // P(0 <= Z_n <= 1) for the free walk.
                let stay_near: f64 = occ[n] + occ[n + 1];
                assert!(
                    tails[n] <= 2.0 * stay_near + 1e-12,
                    "stay {stay} n {n}: {} vs {}",
                    tails[n],
                    2.0 * stay_near
                );
            }
        }
    }

    #[test]
    fn simulated_passage_matches_dp() {
        let dp = exact_first_passage(0.25, 64).unwrap();
        let mut rng = seeded(42);
        let n_runs = 40_000;
        let mut counts = [0u32; 3];
        let checkpoints = [1usize, 8, 64];
        for _ in 0..n_runs {
            let t = match simulate_first_passage(0.25, 10_000, &mut rng) {
                PassageTime::Hit(n) => n as usize,
                PassageTime::Censored { .. } => usize::MAX,
            };
            for (i, &c) in checkpoints.iter().enumerate() {
                if t > c {
                    counts[i] += 1;
                }
            }
        }
        for (i, &c) in checkpoints.iter().enumerate() {
            let p_hat = counts[i] as f64 / n_runs as f64;
            let sigma = (dp[c] * (1.0 - dp[c]) / n_runs as f64).sqrt();
            assert!(
                (p_hat - dp[c]).abs() < 4.0 * sigma,
                "checkpoint {c}: {p_hat} vs {} (sigma {sigma})",
                dp[c]
            );
        }
    }

    #[test]
    fn subordinated_time_is_exponential_for_instant_coupling() {
        // Condition on T^S = 1 by filtering and check the arrival-time mean
        // against the first-arrival exponential.
        let law = build_mineka(&uniform_law(), &Point::scalar(0.25)).unwrap();
        let mut rng = seeded(3);
        let mut hits = Vec::new();
        for _ in 0..20_000 {
            let s = simulate_t_l(&law, 2.0, 50.0, &mut rng).unwrap();
            if let (PassageTime::Hit(1), Some(t)) = (s.t_s, s.t_l) {
                hits.push(t);
            }
        }
        let mean: f64 = hits.iter().sum::<f64>() / hits.len() as f64;
        let se = 0.5 / (hits.len() as f64).sqrt();
        assert!(
            (mean - 0.5).abs() < 4.0 * se,
            "mean {mean}, n {}",
            hits.len()
        );
    }

    #[test]
    fn survival_estimates_are_deterministic_and_censor_aware() {
        let law = build_mineka(&uniform_law(), &Point::scalar(0.25)).unwrap();
        let plan = SimulationPlan {
            n_samples: 5000,
            seed: 11,
            workers: 2,
            ..Default::default()
        };
        let grid = [1.0, 5.0];
        let a = estimate_survival(&law, 1.0, &grid, &plan).unwrap();
        let plan_serial = SimulationPlan {
            workers: 1,
            ..plan.clone()
        };
        let b = estimate_survival(&law, 1.0, &grid, &plan_serial).unwrap();
        assert_eq!(a, b);
        assert!(a[0].p_hat >= a[1].p_hat);
        assert!(a[0].p_hat > 0.0 && a[0].p_hat < 1.0);
    }

    #[test]
    fn chained_bound_scales_with_distance() {
        let nu = uniform_law();
        let b1 = chained_tv_bound(
            &nu,
            0.5,
            &Point::scalar(0.0),
            &Point::scalar(0.3),
            16,
            1.0 / 64.0,
        )
        .unwrap();
        let b4 = chained_tv_bound(
            &nu,
            0.5,
            &Point::scalar(0.0),
            &Point::scalar(1.75),
            16,
            1.0 / 64.0,
        )
        .unwrap();
        assert!((b4 / b1 - 4.0).abs() < 1e-9);
        let lattice = MixedMeasure::from_atoms(1, &[(vec![-1.0], 0.5), (vec![1.0], 0.5)]).unwrap();
        assert!(matches!(
            chained_tv_bound(
                &lattice,
                0.5,
                &Point::scalar(0.0),
                &Point::scalar(0.3),
                4,
                0.25
            ),
            Err(Error::CriterionFailed(_))
        ));
    }

    #[test]
    fn pair_trace_stays_merged_after_meeting() {
        let law = build_mineka(&uniform_law(), &Point::scalar(0.25)).unwrap();
        let mut rng = seeded(5);
        let trace = simulate_pair_trace(&law, 4000, &mut rng);
        let mut met = false;
        for (p, q) in &trace {
            if met {
                assert_eq!(p.coords(), q.coords());
            }
            if p.coords() == q.coords() {
                met = true;
            }
        }
        assert!(met, "walkers did not meet in 4000 steps");
    }
}
