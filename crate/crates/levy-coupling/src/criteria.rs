//! Checkable sufficient (and, in one exact regime, necessary) conditions for
//! the coupling property of a jump process described by its generating
//! triplet.
//!
//! The quantitative object is the minimal overlap
//!
//! ```text
//! eta0(delta) = inf over |x| <= delta of (nu /\ (nu shifted by x))(R^d)
//! ```
//!
//! evaluated on a finite displacement grid. The grid value upper-bounds the
//! continuum infimum: for laws with a density part the overlap is continuous
//! in the shift and the grid value converges under refinement, while for
//! purely atomic laws the true infimum is zero as soon as some `|x| <= delta`
//! misses every atom gap, which the grid detects unless its step divides all
//! gaps. Reports therefore always carry the grid step used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{BallPart, GridMismatch, MeasureJson, MixedMeasure, Point};
use rayon::prelude::*;

/// Values at or below this threshold count as an exact zero overlap / mass.
pub const POSITIVE_EPS: f64 = 1e-12;

/// Symmetry / eigenvalue slack for the diffusion matrix.
const PSD_TOL: f64 = 1e-10;

/// Generating triplet `(b, Q, nu)` of a jump process, together with the
/// cutoff radius used to reduce an infinite-activity jump measure to a
/// finite one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TripletJson", into = "TripletJson")]
pub struct LevyTriplet {
    dim: usize,
    drift: Point,
    /// Row-major `dim x dim` diffusion matrix.
    gaussian: Vec<f64>,
    levy: MixedMeasure,
    cutoff: f64,
    infinite_activity: bool,
}

/// On-disk form of a triplet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripletJson {
    pub dim: usize,
    #[serde(default)]
    pub drift: Option<Vec<f64>>,
    #[serde(default)]
    pub gaussian: Option<Vec<Vec<f64>>>,
    pub levy: MeasureJson,
    pub cutoff: f64,
    #[serde(default)]
    pub infinite_activity: bool,
}

impl TryFrom<TripletJson> for LevyTriplet {
    type Error = Error;

    fn try_from(json: TripletJson) -> Result<Self> {
        let dim = json.dim;
        let drift = match json.drift {
            Some(v) => Point::new(v)?,
            None => Point::origin(dim),
        };
        let gaussian = match json.gaussian {
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::Invalid(format!(
                        "gaussian matrix must be {dim}x{dim}"
                    )));
                }
                rows.into_iter().flatten().collect()
            }
            None => vec![0.0; dim * dim],
        };
        let levy = MixedMeasure::try_from(json.levy)?;
        LevyTriplet::new(
            dim,
            drift,
            gaussian,
            levy,
            json.cutoff,
            json.infinite_activity,
        )
    }
}

impl From<LevyTriplet> for TripletJson {
    fn from(t: LevyTriplet) -> Self {
        let rows = (0..t.dim)
            .map(|i| t.gaussian[i * t.dim..(i + 1) * t.dim].to_vec())
            .collect();
        TripletJson {
            dim: t.dim,
            drift: Some(t.drift.coords().to_vec()),
            gaussian: Some(rows),
            levy: t.levy.into(),
            cutoff: t.cutoff,
            infinite_activity: t.infinite_activity,
        }
    }
}

/// Cholesky factorization test: succeeds iff the matrix is positive
/// definite. `matrix` is row-major `d x d`.
fn cholesky_succeeds(matrix: &[f64], d: usize) -> bool {
    let mut a = matrix.to_vec();
    for k in 0..d {
        let mut pivot = a[k * d + k];
        for j in 0..k {
            pivot -= a[k * d + j] * a[k * d + j];
        }
        if pivot <= 0.0 || !pivot.is_finite() {
            return false;
        }
        let root = pivot.sqrt();
        a[k * d + k] = root;
        for i in (k + 1)..d {
            let mut v = a[i * d + k];
            for j in 0..k {
                v -= a[i * d + j] * a[k * d + j];
            }
            a[i * d + k] = v / root;
        }
    }
    true
}

impl LevyTriplet {
    pub fn new(
        dim: usize,
        drift: Point,
        gaussian: Vec<f64>,
        levy: MixedMeasure,
        cutoff: f64,
        infinite_activity: bool,
    ) -> Result<Self> {
        if drift.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: drift.dim(),
            });
        }
        if gaussian.len() != dim * dim {
            return Err(Error::Invalid(format!(
                "gaussian matrix must have {} entries, got {}",
                dim * dim,
                gaussian.len()
            )));
        }
        if levy.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: levy.dim(),
            });
        }
        if !cutoff.is_finite() || cutoff <= 0.0 {
            return Err(Error::Invalid(format!(
                "cutoff radius must be positive, got {cutoff}"
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (gaussian[i * dim + j] - gaussian[j * dim + i]).abs() > PSD_TOL {
                    return Err(Error::Invalid(format!(
                        "gaussian matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        // Positive semidefinite within PSD_TOL: all eigenvalues >= -PSD_TOL,
        // which is exactly positive definiteness of Q + PSD_TOL * I.
        let mut shifted = gaussian.clone();
        for i in 0..dim {
            shifted[i * dim + i] += PSD_TOL;
        }
        if !cholesky_succeeds(&shifted, dim) {
            return Err(Error::Invalid(
                "gaussian matrix must be positive semidefinite (within 1e-10)".into(),
            ));
        }
        let triplet = LevyTriplet {
            dim,
            drift,
            gaussian,
            levy,
            cutoff,
            infinite_activity,
        };
        let has_jumps = triplet.levy.total_mass() > POSITIVE_EPS;
        if !has_jumps && !triplet.has_gaussian_part() && triplet.drift.norm() <= POSITIVE_EPS {
            return Err(Error::Invalid(
                "triplet is identically zero: no drift, no diffusion, no jumps".into(),
            ));
        }
        if has_jumps {
            // The truncation must retain mass for the jump criteria to apply.
            truncate_levy(&triplet.levy, triplet.cutoff, triplet.infinite_activity)?;
        }
        Ok(triplet)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &Point {
        &self.drift
    }

    pub fn gaussian(&self) -> &[f64] {
        &self.gaussian
    }

    pub fn levy(&self) -> &MixedMeasure {
        &self.levy
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn infinite_activity(&self) -> bool {
        self.infinite_activity
    }

    pub fn has_gaussian_part(&self) -> bool {
        self.gaussian.iter().any(|&q| q.abs() > POSITIVE_EPS)
    }

    /// True iff the diffusion matrix is positive definite (all eigenvalues
    /// above the 1e-10 slack), i.e. the diffusion alone spreads mass over
    /// all of space.
    pub fn gaussian_positive_definite(&self) -> bool {
        if !self.has_gaussian_part() {
            return false;
        }
        let mut shifted = self.gaussian.clone();
        for i in 0..self.dim {
            shifted[i * self.dim + i] -= PSD_TOL;
        }
        cholesky_succeeds(&shifted, self.dim)
    }
}

/// The finite jump measure the criteria operate on: the measure itself when
/// it is finite, its restriction to `|z| >= eps` when it models an
/// infinite-activity measure.
pub fn truncate_levy(
    levy: &MixedMeasure,
    eps: f64,
    infinite_activity: bool,
) -> Result<MixedMeasure> {
    if infinite_activity {
        levy.restrict_ball(eps, BallPart::Outside)
    } else {
        if levy.total_mass() <= POSITIVE_EPS {
            return Err(Error::ZeroMass);
        }
        Ok(levy.clone())
    }
}

/// Lattice points `x` with all coordinates multiples of `step` and
/// `|x| <= delta` (Euclidean).
fn displacement_grid(dim: usize, delta: f64, step: f64) -> Result<Vec<Vec<f64>>> {
    if step <= 0.0 || delta <= 0.0 || !step.is_finite() || !delta.is_finite() {
        return Err(Error::Invalid(
            "delta and grid step must be positive and finite".into(),
        ));
    }
    if step > delta {
        return Err(Error::Invalid(format!(
            "grid step {step} exceeds delta {delta}"
        )));
    }
    let k_max = (delta / step * (1.0 + 1e-12)).floor() as i64;
    let per_axis = 2 * k_max + 1;
    let total = (per_axis as f64).powi(dim as i32);
    if total > 2e6 {
        return Err(Error::Invalid(format!(
            "displacement grid would have ~{total:.0} points; refine delta/grid_step"
        )));
    }
    let mut points = Vec::new();
    let mut coords = vec![0i64; dim];
    loop {
        let x: Vec<f64> = coords.iter().map(|&k| k as f64 * step).collect();
        if x.iter().map(|c| c * c).sum::<f64>().sqrt() <= delta * (1.0 + 1e-12) {
            points.push(x);
        }
        // Odometer increment over [-k_max, k_max]^dim.
        let mut axis = 0;
        loop {
            if axis == dim {
                return Ok(points);
            }
            coords[axis] += 1;
            if coords[axis] <= k_max {
                break;
            }
            coords[axis] = -k_max;
            axis += 1;
        }
    }
}

/// Grid approximation of the minimal overlap of `nu0` with its translates by
/// displacements up to `delta`: the minimum over the displacement grid of
/// `(nu0 /\ (nu0 shifted by x))(R^d)`. Shifts that take the density part off
/// its lattice yield exactly zero density overlap.
pub fn eta0(nu0: &MixedMeasure, delta: f64, grid_step: f64) -> Result<f64> {
    if !nu0.is_probability_within(1e-6) {
        return Err(Error::Invalid(format!(
            "overlap infimum expects a probability measure, total mass is {}",
            nu0.total_mass()
        )));
    }
    let grid = displacement_grid(nu0.dim(), delta, grid_step)?;
    let overlaps: Result<Vec<f64>> = grid
        .par_iter()
        .map(|x| {
            Ok(nu0
                .meet_with(&nu0.shift(x), GridMismatch::Disjoint)?
                .total_mass())
        })
        .collect();
    Ok(overlaps?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Result of evaluating the overlap condition on a truncated jump measure.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Th22Report {
    pub eta0: f64,
    pub delta: f64,
    pub eps: f64,
    pub grid_step: f64,
    pub holds: bool,
}

/// Evaluates the overlap condition: truncate the jump measure at `eps`,
/// normalize, and take the grid minimum of the overlap with translates up to
/// `delta`.
///
/// A purely atomic measure short-circuits to zero: its overlap with a
/// translate is positive only for translates in the countable difference set
/// of its atoms, so the infimum over a whole displacement ball is exactly
/// zero no matter what a finite grid reports (grid points can collide with
/// atom gaps to within the dedup tolerance).
pub fn check_th22(
    triplet: &LevyTriplet,
    eps: f64,
    delta: f64,
    grid_step: f64,
) -> Result<Th22Report> {
    let nu_eps = truncate_levy(triplet.levy(), eps, triplet.infinite_activity())?;
    let (normalized, _) = nu_eps.normalize()?;
    if normalized.density_mass() <= POSITIVE_EPS {
        return Ok(Th22Report {
            eta0: 0.0,
            delta,
            eps,
            grid_step,
            holds: false,
        });
    }
    let value = eta0(&normalized, delta, grid_step)?;
    Ok(Th22Report {
        eta0: value,
        delta,
        eps,
        grid_step,
        holds: value > POSITIVE_EPS,
    })
}

/// Exact mass of the absolutely continuous component of the `l`-fold
/// convolution power of a finite atoms-plus-density measure: the atomic part
/// of the power is exactly the `l`-fold power of the atomic part, so the AC
/// mass is `total^l - atomic^l`.
pub fn ac_mass_of_power(nu_eps: &MixedMeasure, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(Error::Invalid(
            "convolution power order must be at least 1".into(),
        ));
    }
    let total = nu_eps.total_mass();
    let atomic = nu_eps.atomic_mass();
    Ok(total.powi(l as i32) - atomic.powi(l as i32))
}

/// Grid overlap infimum for the normalized `l`-fold convolution power of the
/// truncated jump measure.
pub fn check_ex2_cond2(nu_eps: &MixedMeasure, l: u32, delta: f64, grid_step: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::Invalid(
            "convolution power order must be at least 1".into(),
        ));
    }
    let power = nu_eps.convolution_power(l as usize)?;
    let (normalized, _) = power.normalize()?;
    eta0(&normalized, delta, grid_step)
}

/// Final verdict on the coupling property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Coupling,
    NoCoupling,
    Inconclusive,
}

/// Satisfied instance of the absolute-continuity condition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ex2Cond1 {
    pub l: u32,
    pub ac_mass: f64,
}

/// Satisfied instance of the power-overlap condition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ex2Cond2 {
    pub l: u32,
    pub delta: f64,
    pub infimum: f64,
}

/// Everything the decision procedure measured, plus the verdict and a plain
/// description of the witness (or of why no condition fired).
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub verdict: Verdict,
    pub witness: String,
    pub eta0: f64,
    pub delta: f64,
    pub eps: f64,
    pub grid_step: f64,
    pub th22_holds: bool,
    pub ex2_cond1: Option<Ex2Cond1>,
    pub ex2_cond2: Option<Ex2Cond2>,
}

/// Tuning of the decision procedure.
#[derive(Debug, Clone, Copy)]
pub struct CriterionParams {
    pub delta: f64,
    pub grid_step: f64,
    pub search_depth: u32,
}

impl Default for CriterionParams {
    fn default() -> Self {
        CriterionParams {
            delta: 0.5,
            grid_step: 1.0 / 64.0,
            search_depth: 6,
        }
    }
}

/// Decides the coupling property with default displacement parameters.
pub fn decide_coupling_property(
    triplet: &LevyTriplet,
    search_depth: u32,
) -> Result<CriterionReport> {
    let params = CriterionParams {
        search_depth,
        ..Default::default()
    };
    decide_coupling_property_with(triplet, &params)
}

/// Decision procedure, in order:
///
/// 1. a positive definite diffusion matrix spreads every transition law over
///    all of space: verdict `Coupling` (a nonzero but degenerate matrix is
///    not sufficient on its own and falls through);
/// 2. no diffusion and no jumps leaves pure drift, which never couples
///    distinct starting points: verdict `NoCoupling`;
/// 3. some convolution power of the truncated jump measure has positive
///    absolutely continuous mass (in this representation: a density part):
///    verdict `Coupling`;
/// 4. exact converse regime: no diffusion and a finite, purely atomic jump
///    measure means no convolution power ever gains an absolutely continuous
///    component, which is necessary for coupling in the finite-activity
///    case: verdict `NoCoupling`;
/// 5. the power-overlap condition on the displacement grid: `Coupling`;
/// 6. otherwise `Inconclusive` (notably infinite-activity purely atomic jump
///    measures, for which no converse is available).
pub fn decide_coupling_property_with(
    triplet: &LevyTriplet,
    params: &CriterionParams,
) -> Result<CriterionReport> {
    let delta = params.delta;
    let grid_step = params.grid_step;
    let eps = triplet.cutoff();
    let mut report = CriterionReport {
        verdict: Verdict::Inconclusive,
        witness: String::new(),
        eta0: 0.0,
        delta,
        eps,
        grid_step,
        th22_holds: false,
        ex2_cond1: None,
        ex2_cond2: None,
    };

    if triplet.gaussian_positive_definite() {
        report.verdict = Verdict::Coupling;
        report.witness = "gaussian: positive definite diffusion matrix".into();
        return Ok(report);
    }

    let has_jumps = triplet.levy().total_mass() > POSITIVE_EPS;
    if !has_jumps {
        if triplet.has_gaussian_part() {
            report.witness = "degenerate diffusion without jumps: no criterion applies".into();
            return Ok(report);
        }
        report.verdict = Verdict::NoCoupling;
        report.witness = "pure drift: transition laws are point masses that never merge".into();
        return Ok(report);
    }

    let nu_eps = truncate_levy(triplet.levy(), eps, triplet.infinite_activity())?;
    let t22 = check_th22(triplet, eps, delta, grid_step)?;
    report.eta0 = t22.eta0;
    report.th22_holds = t22.holds;

    for l in 1..=params.search_depth {
        let ac = ac_mass_of_power(&nu_eps, l)?;
        if ac > POSITIVE_EPS {
            report.verdict = Verdict::Coupling;
            report.ex2_cond1 = Some(Ex2Cond1 { l, ac_mass: ac });
            report.witness = format!(
                "power {l} of the truncated jump measure has absolutely continuous mass {ac:.6e}"
            );
            return Ok(report);
        }
    }

    // Purely atomic from here on. In the finite-activity regime the converse
    // applies: coupling would force some power to gain a density component,
    // and powers of a finite atomic measure stay atomic.
    let finite_atomic = !triplet.infinite_activity()
        && !triplet.has_gaussian_part()
        && triplet.levy().density_mass() <= POSITIVE_EPS;
    if finite_atomic {
        report.verdict = Verdict::NoCoupling;
        report.witness =
            "finite purely atomic jump measure without diffusion: convolution powers never gain an absolutely continuous component"
                .into();
        return Ok(report);
    }

    // Powers of a purely atomic measure stay purely atomic, and an atomic
    // measure overlaps only countably many of its translates, so the
    // power-overlap condition is vacuous there; a grid evaluation could even
    // return a false positive when atom gaps collide with grid points. Only
    // measures with a density part get the grid search.
    if triplet.levy().density_mass() > POSITIVE_EPS {
        for l in 1..=params.search_depth {
            match check_ex2_cond2(&nu_eps, l, delta, grid_step) {
                Ok(inf) => {
                    if inf > POSITIVE_EPS {
                        report.verdict = Verdict::Coupling;
                        report.ex2_cond2 = Some(Ex2Cond2 {
                            l,
                            delta,
                            infimum: inf,
                        });
                        report.witness = format!(
                            "power {l} of the truncated jump measure overlaps all its translates up to {delta} (grid infimum {inf:.6e})"
                        );
                        return Ok(report);
                    }
                }
                Err(Error::BudgetExceeded { achieved, .. }) => {
                    report.witness = format!(
                        "power-overlap search stopped at order {achieved} by the convolution budget"
                    );
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    } else {
        report.witness = format!(
            "no power up to {} gains an absolutely continuous component, and a purely atomic measure never overlaps all translates in a displacement ball",
            params.search_depth
        );
    }

    if report.witness.is_empty() {
        report.witness = format!(
            "no sufficient condition fired up to power {}; no converse applies to this triplet",
            params.search_depth
        );
    }
    Ok(report)
}
