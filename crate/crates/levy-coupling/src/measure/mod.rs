//! Exact finite-measure algebra on `R^d` for measures that are sums of point
//! atoms and cell-mass grid densities.
//!
//! A [`GridDensity`] stores one nonnegative mass per cell of an axis-aligned
//! grid; all pairwise operations (meet, total variation, convolution) are
//! exact discrete operations at the declared resolution. Two densities only
//! interact when their grids share the same spacing and their origins differ
//! by a whole number of cells; otherwise they are treated as mutually
//! singular (or the operation errors, depending on the policy).

mod json;

pub use json::MeasureJson;

use crate::error::{Error, Result};

/// Atoms closer than this (in `L^inf`) are merged into one.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-9;
/// Absolute tolerance for deciding that a grid offset is a whole number of cells.
pub const GRID_ALIGN_TOL: f64 = 1e-9;
/// Default cap on atoms/cells created by a single convolution.
pub const DEFAULT_CONVOLUTION_BUDGET: usize = 10_000_000;
/// Masses at or below this are considered numerically zero.
pub const MASS_EPS: f64 = 1e-12;

/// What to do when two grid densities do not share a common lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMismatch {
    /// Return [`Error::IncompatibleGrids`].
    Error,
    /// Treat the two densities as mutually singular (zero overlap).
    Disjoint,
}

/// What to do when convolution shifts a density origin off its lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapPolicy {
    /// Return [`Error::SnapError`].
    Error,
    /// Round the shifted origin to the nearest lattice point and record the
    /// largest adjustment in [`MixedMeasure::max_snap`].
    Nearest,
}

/// A point in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Invalid(
                "point must have at least one coordinate".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("point coordinates must be finite".into()));
        }
        Ok(Point { coords })
    }

    pub fn origin(dim: usize) -> Self {
        Point {
            coords: vec![0.0; dim],
        }
    }

    /// One-dimensional convenience constructor.
    pub fn scalar(x: f64) -> Self {
        Point { coords: vec![x] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.coords)
    }

    /// Euclidean distance. Panics on dimension mismatch; validate first when
    /// the points come from outside the crate.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.coords.len(), other.coords.len(), "dimension mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn linf_within(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.total_cmp(y);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    std::cmp::Ordering::Equal
}

/// A finite nonnegative purely atomic measure, stored as lexicographically
/// sorted locations with one mass each. Locations closer than `dedup_tol`
/// (in `L^inf`) are merged on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    /// Row-major `n x dim` coordinates, sorted lexicographically.
    coords: Vec<f64>,
    masses: Vec<f64>,
    dedup_tol: f64,
}

impl AtomicMeasure {
    pub fn empty(dim: usize) -> Self {
        AtomicMeasure {
            dim,
            coords: Vec::new(),
            masses: Vec::new(),
            dedup_tol: DEFAULT_DEDUP_TOL,
        }
    }

    pub fn from_pairs<'a, I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        Self::from_pairs_tol(dim, pairs, DEFAULT_DEDUP_TOL)
    }

    pub fn from_pairs_tol<'a, I>(dim: usize, pairs: I, dedup_tol: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        let mut coords = Vec::new();
        let mut masses = Vec::new();
        for (x, w) in pairs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::Invalid("atom location must be finite".into()));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Invalid(format!(
                    "atom mass must be finite and nonnegative, got {w}"
                )));
            }
            if w == 0.0 {
                continue;
            }
            coords.extend_from_slice(x);
            masses.push(w);
        }
        Ok(Self::from_unsorted(dim, coords, masses, dedup_tol))
    }

    /// Sorts and merges near-duplicate locations. The merged atom keeps the
    /// location of its lexicographically first member.
    fn from_unsorted(dim: usize, coords: Vec<f64>, masses: Vec<f64>, dedup_tol: f64) -> Self {
        let n = masses.len();
        debug_assert_eq!(coords.len(), n * dim);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&i, &j| {
            lex_cmp(
                &coords[i * dim..(i + 1) * dim],
                &coords[j * dim..(j + 1) * dim],
            )
        });

        let mut out_coords: Vec<f64> = Vec::with_capacity(coords.len());
        let mut out_masses: Vec<f64> = Vec::with_capacity(n);
        for &i in &order {
            let loc = &coords[i * dim..(i + 1) * dim];
            let w = masses[i];
            // Scan back over representatives whose first coordinate is still
            // within tolerance; clusters can interleave in lex order.
            let mut merged = false;
            let mut r = out_masses.len();
            while r > 0 {
                r -= 1;
                let rep = &out_coords[r * dim..(r + 1) * dim];
                if loc[0] - rep[0] > dedup_tol {
                    break;
                }
                if linf_within(loc, rep, dedup_tol) {
                    out_masses[r] += w;
                    merged = true;
                    break;
                }
            }
            if !merged {
                out_coords.extend_from_slice(loc);
                out_masses.push(w);
            }
        }
        AtomicMeasure {
            dim,
            coords: out_coords,
            masses: out_masses,
            dedup_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass_at(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.masses.iter().copied())
    }

    pub fn shift(&self, x: &[f64]) -> Self {
        assert_eq!(x.len(), self.dim, "shift vector dimension");
        let mut coords = self.coords.clone();
        for chunk in coords.chunks_exact_mut(self.dim) {
            for (c, dx) in chunk.iter_mut().zip(x) {
                *c += dx;
            }
        }
        // A uniform translation preserves lexicographic order.
        AtomicMeasure {
            dim: self.dim,
            coords,
            masses: self.masses.clone(),
            dedup_tol: self.dedup_tol,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(
            c >= 0.0 && c.is_finite(),
            "scale factor must be nonnegative"
        );
        if c == 0.0 {
            return AtomicMeasure::empty(self.dim);
        }
        let masses = self.masses.iter().map(|w| w * c).collect();
        AtomicMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            masses,
            dedup_tol: self.dedup_tol,
        }
    }

    /// Pairs `(i, j)` of atoms of `self` and `other` at matching locations
    /// (within the larger of the two dedup tolerances). Atoms of either side
    /// match at most once.
    fn match_atoms(&self, other: &Self) -> Vec<(usize, usize)> {
        let tol = self.dedup_tol.max(other.dedup_tol);
        let d = self.dim;
        let mut pairs = Vec::new();
        let mut used = vec![false; other.len()];
        let mut j0 = 0usize;
        for i in 0..self.len() {
            let loc = self.location(i);
            while j0 < other.len() && other.location(j0)[0] < loc[0] - tol {
                j0 += 1;
            }
            let mut j = j0;
            while j < other.len() && other.location(j)[0] <= loc[0] + tol {
                if !used[j] && linf_within(loc, other.location(j), tol) {
                    used[j] = true;
                    pairs.push((i, j));
                    break;
                }
                j += 1;
            }
            let _ = d;
        }
        pairs
    }

    /// Greatest common lower bound: matched atoms keep `self`'s location with
    /// the smaller of the two masses.
    fn meet(&self, other: &Self) -> Self {
        let pairs = self.match_atoms(other);
        let mut coords = Vec::with_capacity(pairs.len() * self.dim);
        let mut masses = Vec::with_capacity(pairs.len());
        for (i, j) in pairs {
            let w = self.masses[i].min(other.masses[j]);
            if w > 0.0 {
                coords.extend_from_slice(self.location(i));
                masses.push(w);
            }
        }
        // Matched pairs inherit self's sorted order.
        AtomicMeasure {
            dim: self.dim,
            coords,
            masses,
            dedup_tol: self.dedup_tol.max(other.dedup_tol),
        }
    }

    /// Total variation distance computed directly as the sum of absolute
    /// mass differences over matched atoms plus all unmatched mass.
    fn tv(&self, other: &Self) -> f64 {
        let pairs = self.match_atoms(other);
        let mut total = 0.0;
        let mut matched_self = vec![false; self.len()];
        let mut matched_other = vec![false; other.len()];
        for &(i, j) in &pairs {
            total += (self.masses[i] - other.masses[j]).abs();
            matched_self[i] = true;
            matched_other[j] = true;
        }
        for (&matched, &mass) in matched_self.iter().zip(&self.masses) {
            if !matched {
                total += mass;
            }
        }
        for (&matched, &mass) in matched_other.iter().zip(&other.masses) {
            if !matched {
                total += mass;
            }
        }
        total
    }

    /// Clamped difference `self - other`. Returns the result together with
    /// the mass of `other` that found no matching atom in `self`.
    fn sub_clamped(&self, other: &Self) -> (Self, f64) {
        let pairs = self.match_atoms(other);
        let mut masses = self.masses.clone();
        let mut matched_other = vec![false; other.len()];
        for &(i, j) in &pairs {
            masses[i] = (masses[i] - other.masses[j]).max(0.0);
            matched_other[j] = true;
        }
        let unmatched: f64 = (0..other.len())
            .filter(|&j| !matched_other[j])
            .map(|j| other.masses[j])
            .sum();
        let mut coords = Vec::new();
        let mut out = Vec::new();
        for (i, &w) in masses.iter().enumerate() {
            if w > 0.0 {
                coords.extend_from_slice(self.location(i));
                out.push(w);
            }
        }
        (
            AtomicMeasure {
                dim: self.dim,
                coords,
                masses: out,
                dedup_tol: self.dedup_tol,
            },
            unmatched,
        )
    }

    fn add(&self, other: &Self) -> Self {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut masses = self.masses.clone();
        masses.extend_from_slice(&other.masses);
        Self::from_unsorted(
            self.dim,
            coords,
            masses,
            self.dedup_tol.max(other.dedup_tol),
        )
    }
}

/// How a pair of grids relate.
enum GridRelation {
    SpacingMismatch,
    OffsetMismatch {
        offset: f64,
    },
    /// `other.origin = self.origin + offset_cells * spacing`.
    Aligned {
        offset_cells: Vec<i64>,
    },
}

/// A nonnegative measure with one mass per cell of an axis-aligned grid.
/// Cell `(i, j)` of a 2-d grid covers
/// `[origin_0 + i*h, origin_0 + (i+1)*h) x [origin_1 + j*h, origin_1 + (j+1)*h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    /// Cells per axis; `shape.len() == dim`. Row-major storage.
    shape: Vec<usize>,
    cells: Vec<f64>,
}

impl GridDensity {
    pub fn new(
        dim: usize,
        origin: Vec<f64>,
        spacing: f64,
        shape: Vec<usize>,
        cells: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::Invalid(format!(
                "grid densities support dimensions 1 and 2, got {dim}"
            )));
        }
        if origin.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: origin.len(),
            });
        }
        if shape.len() != dim || shape.contains(&0) {
            return Err(Error::Invalid(
                "grid shape must have one positive entry per dimension".into(),
            ));
        }
        if !spacing.is_finite() || spacing <= 0.0 {
            return Err(Error::Invalid(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("grid origin must be finite".into()));
        }
        let expected: usize = shape.iter().product();
        if cells.len() != expected {
            return Err(Error::Invalid(format!(
                "expected {expected} cells, got {}",
                cells.len()
            )));
        }
        if cells.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::Invalid(
                "cell masses must be finite and nonnegative".into(),
            ));
        }
        Ok(GridDensity {
            dim,
            origin,
            spacing,
            shape,
            cells,
        })
    }

    pub fn new_1d(origin: f64, spacing: f64, cells: Vec<f64>) -> Result<Self> {
        let shape = vec![cells.len()];
        Self::new(1, vec![origin], spacing, shape, cells)
    }

    /// Builds a 1-d density by evaluating `f` at cell centers; cell mass is
    /// `f(center) * spacing`.
    pub fn from_fn_1d(
        origin: f64,
        spacing: f64,
        n: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> Result<Self> {
        let cells: Vec<f64> = (0..n)
            .map(|k| f(origin + (k as f64 + 0.5) * spacing) * spacing)
            .collect();
        Self::new_1d(origin, spacing, cells)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn mass(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Center of cell `k` (row-major index).
    pub fn cell_center(&self, k: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.origin[0] + (k as f64 + 0.5) * self.spacing],
            2 => {
                let n1 = self.shape[1];
                let i = k / n1;
                let j = k % n1;
                vec![
                    self.origin[0] + (i as f64 + 0.5) * self.spacing,
                    self.origin[1] + (j as f64 + 0.5) * self.spacing,
                ]
            }
            _ => unreachable!(),
        }
    }

    pub fn shift(&self, x: &[f64]) -> Self {
        assert_eq!(x.len(), self.dim, "shift vector dimension");
        let origin = self.origin.iter().zip(x).map(|(o, dx)| o + dx).collect();
        GridDensity {
            origin,
            ..self.clone()
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(
            c >= 0.0 && c.is_finite(),
            "scale factor must be nonnegative"
        );
        let cells = self.cells.iter().map(|m| m * c).collect();
        GridDensity {
            cells,
            ..self.clone()
        }
    }

    /// Mirror image under `x -> -x` (1-d only).
    fn flip_1d(&self) -> Self {
        debug_assert_eq!(self.dim, 1);
        let n = self.shape[0];
        let origin = vec![-(self.origin[0] + n as f64 * self.spacing)];
        let cells = self.cells.iter().rev().copied().collect();
        GridDensity {
            dim: 1,
            origin,
            spacing: self.spacing,
            shape: self.shape.clone(),
            cells,
        }
    }

    fn relation(&self, other: &Self) -> GridRelation {
        let h = self.spacing;
        if (h - other.spacing).abs() > 1e-12 * h.max(other.spacing) {
            return GridRelation::SpacingMismatch;
        }
        let mut offset_cells = Vec::with_capacity(self.dim);
        for (o1, o2) in self.origin.iter().zip(&other.origin) {
            let raw = o2 - o1;
            let k = (raw / h).round();
            if (raw - k * h).abs() > GRID_ALIGN_TOL {
                return GridRelation::OffsetMismatch { offset: raw };
            }
            offset_cells.push(k as i64);
        }
        GridRelation::Aligned { offset_cells }
    }

    fn axis_count(&self, axis: usize) -> i64 {
        self.shape[axis] as i64
    }

    /// Applies `f(self_mass, other_mass)` over the union box of two aligned
    /// grids and returns the result as a new grid anchored at the union's
    /// lower corner. Cells outside a grid contribute zero mass.
    fn zip_aligned(&self, other: &Self, offset_cells: &[i64], f: impl Fn(f64, f64) -> f64) -> Self {
        let d = self.dim;
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for ax in 0..d {
            lo[ax] = 0.min(offset_cells[ax]);
            hi[ax] = self
                .axis_count(ax)
                .max(offset_cells[ax] + other.axis_count(ax));
        }
        let shape: Vec<usize> = (0..d).map(|ax| (hi[ax] - lo[ax]) as usize).collect();
        let origin: Vec<f64> = (0..d)
            .map(|ax| self.origin[ax] + lo[ax] as f64 * self.spacing)
            .collect();
        let n_total: usize = shape.iter().product();
        let mut cells = vec![0.0; n_total];
        let (n1, m1) = (self.shape[0] as i64, other.shape[0] as i64);
        match d {
            1 => {
                for (idx, cell) in cells.iter_mut().enumerate() {
                    let g = lo[0] + idx as i64;
                    let a = if g >= 0 && g < n1 {
                        self.cells[g as usize]
                    } else {
                        0.0
                    };
                    let ob = g - offset_cells[0];
                    let b = if ob >= 0 && ob < m1 {
                        other.cells[ob as usize]
                    } else {
                        0.0
                    };
                    *cell = f(a, b);
                }
            }
            2 => {
                let (n2, m2) = (self.shape[1] as i64, other.shape[1] as i64);
                let cols = shape[1];
                for (idx, cell) in cells.iter_mut().enumerate() {
                    let gi = lo[0] + (idx / cols) as i64;
                    let gj = lo[1] + (idx % cols) as i64;
                    let a = if gi >= 0 && gi < n1 && gj >= 0 && gj < n2 {
                        self.cells[(gi * n2 + gj) as usize]
                    } else {
                        0.0
                    };
                    let (oi, oj) = (gi - offset_cells[0], gj - offset_cells[1]);
                    let b = if oi >= 0 && oi < m1 && oj >= 0 && oj < m2 {
                        other.cells[(oi * m2 + oj) as usize]
                    } else {
                        0.0
                    };
                    *cell = f(a, b);
                }
            }
            _ => unreachable!(),
        }
        GridDensity {
            dim: d,
            origin,
            spacing: self.spacing,
            shape,
            cells,
        }
    }

    /// Discrete convolution at the shared resolution. Requires equal spacing;
    /// origins add, so no alignment between the two inputs is needed.
    fn convolve(&self, other: &Self, budget: usize) -> Result<Self> {
        if let GridRelation::SpacingMismatch = self.relation(other) {
            return Err(Error::IncompatibleGrids(format!(
                "cannot convolve grids with spacings {} and {}",
                self.spacing, other.spacing
            )));
        }
        let d = self.dim;
        let shape: Vec<usize> = (0..d)
            .map(|ax| self.shape[ax] + other.shape[ax] - 1)
            .collect();
        let n_total: usize = shape.iter().product();
        let work = self.cells.len().saturating_mul(other.cells.len());
        if n_total > budget || work > budget {
            return Err(Error::BudgetExceeded {
                achieved: 1,
                budget,
            });
        }
        let origin: Vec<f64> = (0..d)
            .map(|ax| self.origin[ax] + other.origin[ax])
            .collect();
        let mut cells = vec![0.0; n_total];
        match d {
            1 => {
                for (i, &a) in self.cells.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (j, &b) in other.cells.iter().enumerate() {
                        cells[i + j] += a * b;
                    }
                }
            }
            2 => {
                let (n2, m2, out2) = (self.shape[1], other.shape[1], shape[1]);
                for i1 in 0..self.shape[0] {
                    for i2 in 0..n2 {
                        let a = self.cells[i1 * n2 + i2];
                        if a == 0.0 {
                            continue;
                        }
                        for j1 in 0..other.shape[0] {
                            for j2 in 0..m2 {
                                cells[(i1 + j1) * out2 + (i2 + j2)] +=
                                    a * other.cells[j1 * m2 + j2];
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(GridDensity {
            dim: d,
            origin,
            spacing: self.spacing,
            shape,
            cells,
        })
    }

    /// Drops leading/trailing all-zero slices so grids stay compact.
    fn trimmed(self) -> Option<Self> {
        let d = self.dim;
        let mut lo = vec![0usize; d];
        let mut hi = self.shape.clone();
        match d {
            1 => {
                while lo[0] < hi[0] && self.cells[lo[0]] == 0.0 {
                    lo[0] += 1;
                }
                while hi[0] > lo[0] && self.cells[hi[0] - 1] == 0.0 {
                    hi[0] -= 1;
                }
            }
            2 => {
                let n2 = self.shape[1];
                let row_zero = |i: usize| (0..n2).all(|j| self.cells[i * n2 + j] == 0.0);
                let col_zero = |j: usize| (0..self.shape[0]).all(|i| self.cells[i * n2 + j] == 0.0);
                while lo[0] < hi[0] && row_zero(lo[0]) {
                    lo[0] += 1;
                }
                while hi[0] > lo[0] && row_zero(hi[0] - 1) {
                    hi[0] -= 1;
                }
                while lo[1] < hi[1] && col_zero(lo[1]) {
                    lo[1] += 1;
                }
                while hi[1] > lo[1] && col_zero(hi[1] - 1) {
                    hi[1] -= 1;
                }
            }
            _ => unreachable!(),
        }
        if (0..d).any(|ax| lo[ax] >= hi[ax]) {
            return None;
        }
        if lo.iter().all(|&l| l == 0) && hi == self.shape {
            return Some(self);
        }
        let shape: Vec<usize> = (0..d).map(|ax| hi[ax] - lo[ax]).collect();
        let origin: Vec<f64> = (0..d)
            .map(|ax| self.origin[ax] + lo[ax] as f64 * self.spacing)
            .collect();
        let cells = match d {
            1 => self.cells[lo[0]..hi[0]].to_vec(),
            2 => {
                let n2 = self.shape[1];
                let mut out = Vec::with_capacity(shape.iter().product());
                for i in lo[0]..hi[0] {
                    out.extend_from_slice(&self.cells[i * n2 + lo[1]..i * n2 + hi[1]]);
                }
                out
            }
            _ => unreachable!(),
        };
        Some(GridDensity {
            dim: d,
            origin,
            spacing: self.spacing,
            shape,
            cells,
        })
    }
}

/// A finite nonnegative measure with an atomic part and an optional grid
/// density part. The two parts are treated as mutually singular.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct MixedMeasure {
    dim: usize,
    atomic: AtomicMeasure,
    density: Option<GridDensity>,
    /// Largest origin adjustment applied by any snapping convolution in this
    /// measure's history, if snapping was ever enabled.
    max_snap: Option<f64>,
}

/// Which part of space to keep in [`MixedMeasure::restrict_ball`]. Both
/// parts are closed: mass exactly on the sphere `|x| = radius` is kept by
/// either choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallPart {
    /// Keep `|x| <= radius` (cells decided by their centers).
    Inside,
    /// Keep `|x| >= radius` (cells decided by their centers).
    Outside,
}

impl MixedMeasure {
    pub fn new(dim: usize, atomic: AtomicMeasure, density: Option<GridDensity>) -> Result<Self> {
        if atomic.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: atomic.dim(),
            });
        }
        if let Some(d) = &density {
            if d.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: d.dim(),
                });
            }
        }
        let density = density.and_then(|d| d.trimmed());
        Ok(MixedMeasure {
            dim,
            atomic,
            density,
            max_snap: None,
        })
    }

    pub fn from_atoms(dim: usize, pairs: &[(Vec<f64>, f64)]) -> Result<Self> {
        let atomic = AtomicMeasure::from_pairs(dim, pairs.iter().map(|(x, w)| (x.as_slice(), *w)))?;
        Self::new(dim, atomic, None)
    }

    /// Unit point mass at `x`.
    pub fn dirac(x: &Point) -> Self {
        let atomic = AtomicMeasure {
            dim: x.dim(),
            coords: x.coords().to_vec(),
            masses: vec![1.0],
            dedup_tol: DEFAULT_DEDUP_TOL,
        };
        MixedMeasure {
            dim: x.dim(),
            atomic,
            density: None,
            max_snap: None,
        }
    }

    pub fn dirac_origin(dim: usize) -> Self {
        Self::dirac(&Point::origin(dim))
    }

    pub fn from_density(density: GridDensity) -> Self {
        let dim = density.dim();
        MixedMeasure {
            dim,
            atomic: AtomicMeasure::empty(dim),
            density: density.trimmed(),
            max_snap: None,
        }
    }

    /// Uniform probability measure on `[a, b]` represented on `n` cells.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || b <= a || n == 0 {
            return Err(Error::Invalid(format!(
                "uniform requires finite b > a and n > 0, got [{a}, {b}] with {n} cells"
            )));
        }
        let spacing = (b - a) / n as f64;
        let cells = vec![1.0 / n as f64; n];
        Ok(Self::from_density(GridDensity::new_1d(a, spacing, cells)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atomic(&self) -> &AtomicMeasure {
        &self.atomic
    }

    pub fn density(&self) -> Option<&GridDensity> {
        self.density.as_ref()
    }

    pub fn max_snap(&self) -> Option<f64> {
        self.max_snap
    }

    pub fn atomic_mass(&self) -> f64 {
        self.atomic.mass()
    }

    pub fn density_mass(&self) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.mass())
    }

    pub fn total_mass(&self) -> f64 {
        self.atomic_mass() + self.density_mass()
    }

    pub fn is_probability_within(&self, tol: f64) -> bool {
        (self.total_mass() - 1.0).abs() <= tol
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    fn merge_snap(&self, other: &Self, extra: Option<f64>) -> Option<f64> {
        [self.max_snap, other.max_snap, extra]
            .into_iter()
            .flatten()
            .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
    }

    /// Greatest common lower bound `self /\ other` of the two measures.
    ///
    /// With [`GridMismatch::Error`], density parts that live on incompatible
    /// grids produce [`Error::IncompatibleGrids`]; with
    /// [`GridMismatch::Disjoint`] they are treated as mutually singular and
    /// contribute nothing.
    pub fn meet_with(&self, other: &Self, on_mismatch: GridMismatch) -> Result<Self> {
        self.check_dim(other)?;
        let atomic = self.atomic.meet(&other.atomic);
        let density = match (&self.density, &other.density) {
            (Some(a), Some(b)) => match a.relation(b) {
                GridRelation::Aligned { offset_cells } => {
                    a.zip_aligned(b, &offset_cells, |x, y| x.min(y)).trimmed()
                }
                GridRelation::SpacingMismatch if on_mismatch == GridMismatch::Error => {
                    return Err(Error::IncompatibleGrids(format!(
                        "meet of grids with spacings {} and {}",
                        a.spacing, b.spacing
                    )));
                }
                GridRelation::OffsetMismatch { offset } if on_mismatch == GridMismatch::Error => {
                    return Err(Error::IncompatibleGrids(format!(
                        "meet of grids offset by {offset}, not a multiple of spacing {}",
                        a.spacing
                    )));
                }
                _ => None,
            },
            _ => None,
        };
        Ok(MixedMeasure {
            dim: self.dim,
            atomic,
            density,
            max_snap: self.merge_snap(other, None),
        })
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.meet_with(other, GridMismatch::Error)
    }

    /// Total variation distance `||self - other||`, normalized so that two
    /// mutually singular probability measures are at distance 2. Computed
    /// directly as the sum of absolute mass differences.
    pub fn tv_distance_with(&self, other: &Self, on_mismatch: GridMismatch) -> Result<f64> {
        self.check_dim(other)?;
        let atomic = self.atomic.tv(&other.atomic);
        let density = match (&self.density, &other.density) {
            (Some(a), Some(b)) => match a.relation(b) {
                GridRelation::Aligned { offset_cells } => {
                    let diff = a.zip_aligned(b, &offset_cells, |x, y| (x - y).abs());
                    diff.mass()
                }
                GridRelation::SpacingMismatch if on_mismatch == GridMismatch::Error => {
                    return Err(Error::IncompatibleGrids(format!(
                        "total variation of grids with spacings {} and {}",
                        a.spacing, b.spacing
                    )));
                }
                GridRelation::OffsetMismatch { offset } if on_mismatch == GridMismatch::Error => {
                    return Err(Error::IncompatibleGrids(format!(
                        "total variation of grids offset by {offset}, not a multiple of spacing {}",
                        a.spacing
                    )));
                }
                _ => a.mass() + b.mass(),
            },
            (Some(a), None) => a.mass(),
            (None, Some(b)) => b.mass(),
            (None, None) => 0.0,
        };
        Ok(atomic + density)
    }

    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        self.tv_distance_with(other, GridMismatch::Error)
    }

    /// Clamped difference `self - other`; `other` must be dominated by `self`
    /// up to `slack` (mass of `other` outside `self`'s support, or negative
    /// cell/atom excess beyond `slack`, is an error).
    pub fn sub(&self, other: &Self, slack: f64) -> Result<Self> {
        self.check_dim(other)?;
        let (atomic, unmatched) = self.atomic.sub_clamped(&other.atomic);
        if unmatched > slack {
            return Err(Error::Invalid(format!(
                "subtrahend has {unmatched} atomic mass outside the minuend's support"
            )));
        }
        let density = match (&self.density, &other.density) {
            (Some(a), Some(b)) => match a.relation(b) {
                GridRelation::Aligned { offset_cells } => a
                    .zip_aligned(b, &offset_cells, |x, y| (x - y).max(0.0))
                    .trimmed(),
                _ => {
                    return Err(Error::IncompatibleGrids(
                        "subtraction requires density parts on a common lattice".into(),
                    ));
                }
            },
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => {
                if b.mass() > slack {
                    return Err(Error::Invalid(
                        "subtrahend has a density part but the minuend does not".into(),
                    ));
                }
                None
            }
            (None, None) => None,
        };
        Ok(MixedMeasure {
            dim: self.dim,
            atomic,
            density,
            max_snap: self.merge_snap(other, None),
        })
    }

    /// Sum of two measures, merging density parts under the given snap
    /// policy (used when accumulating convolution powers whose grid origins
    /// drift off the common lattice).
    pub(crate) fn add_snapping(
        &self,
        other: &Self,
        snap: SnapPolicy,
        budget: usize,
    ) -> Result<Self> {
        self.check_dim(other)?;
        let atomic = self.atomic.add(&other.atomic);
        let pieces: Vec<GridDensity> = [self.density.clone(), other.density.clone()]
            .into_iter()
            .flatten()
            .collect();
        let (density, snap_dist) = merge_pieces(pieces, snap, budget)?;
        let max_snap = self.merge_snap(other, snap_dist);
        Ok(MixedMeasure {
            dim: self.dim,
            atomic,
            density: density.and_then(|g| g.trimmed()),
            max_snap,
        })
    }

    /// Sum of two measures on compatible grids.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let atomic = self.atomic.add(&other.atomic);
        let density = match (&self.density, &other.density) {
            (Some(a), Some(b)) => match a.relation(b) {
                GridRelation::Aligned { offset_cells } => {
                    a.zip_aligned(b, &offset_cells, |x, y| x + y).trimmed()
                }
                _ => {
                    return Err(Error::IncompatibleGrids(
                        "addition requires density parts on a common lattice".into(),
                    ));
                }
            },
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        Ok(MixedMeasure {
            dim: self.dim,
            atomic,
            density,
            max_snap: self.merge_snap(other, None),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        MixedMeasure {
            dim: self.dim,
            atomic: self.atomic.scale(c),
            density: self
                .density
                .as_ref()
                .map(|d| d.scale(c))
                .filter(|d| d.mass() > 0.0),
            max_snap: self.max_snap,
        }
    }

    /// Translation by `x`. Exact: atom coordinates and the grid origin move;
    /// no snapping is applied here.
    pub fn shift(&self, x: &[f64]) -> Self {
        assert_eq!(x.len(), self.dim, "shift vector dimension");
        MixedMeasure {
            dim: self.dim,
            atomic: self.atomic.shift(x),
            density: self.density.as_ref().map(|d| d.shift(x)),
            max_snap: self.max_snap,
        }
    }

    pub fn normalize(&self) -> Result<(Self, f64)> {
        let m = self.total_mass();
        if m <= MASS_EPS {
            return Err(Error::ZeroMass);
        }
        Ok((self.scale(1.0 / m), m))
    }

    /// Convolution `self * other` with the default snap policy (error on
    /// off-lattice shifts) and the default size budget.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.convolve_with(other, SnapPolicy::Error, DEFAULT_CONVOLUTION_BUDGET)
    }

    pub fn convolve_with(&self, other: &Self, snap: SnapPolicy, budget: usize) -> Result<Self> {
        self.check_dim(other)?;
        let pair_count = self.atomic.len().saturating_mul(other.atomic.len());
        if pair_count > budget {
            return Err(Error::BudgetExceeded {
                achieved: 1,
                budget,
            });
        }
        let d = self.dim;
        let mut coords = Vec::with_capacity(pair_count * d);
        let mut masses = Vec::with_capacity(pair_count);
        for (x, wx) in self.atomic.iter() {
            for (y, wy) in other.atomic.iter() {
                for ax in 0..d {
                    coords.push(x[ax] + y[ax]);
                }
                masses.push(wx * wy);
            }
        }
        let dedup_tol = self.atomic.dedup_tol.max(other.atomic.dedup_tol);
        let atomic = AtomicMeasure::from_unsorted(d, coords, masses, dedup_tol);

        // Every density contribution is one grid piece; all pieces must end
        // up on a single common lattice.
        let mut pieces: Vec<GridDensity> = Vec::new();
        if let Some(da) = &self.density {
            for (y, wy) in other.atomic.iter() {
                pieces.push(da.shift(y).scale(wy));
            }
        }
        if let Some(db) = &other.density {
            for (x, wx) in self.atomic.iter() {
                pieces.push(db.shift(x).scale(wx));
            }
        }
        if let (Some(da), Some(db)) = (&self.density, &other.density) {
            pieces.push(da.convolve(db, budget)?);
        }
        let (density, snap_dist) = merge_pieces(pieces, snap, budget)?;
        let max_snap = self.merge_snap(other, snap_dist);
        Ok(MixedMeasure {
            dim: d,
            atomic,
            density: density.and_then(|g| g.trimmed()),
            max_snap,
        })
    }

    /// `n`-fold convolution power (`n == 0` gives the unit point mass at the
    /// origin) computed by repeated squaring under the size budget.
    pub fn convolution_power(&self, n: usize) -> Result<Self> {
        self.convolution_power_with(n, SnapPolicy::Error, DEFAULT_CONVOLUTION_BUDGET)
    }

    pub fn convolution_power_with(
        &self,
        n: usize,
        snap: SnapPolicy,
        budget: usize,
    ) -> Result<Self> {
        let mut acc = MixedMeasure::dirac_origin(self.dim);
        let mut acc_power = 0usize;
        let mut base = self.clone();
        let mut base_power = 1usize;
        let mut remaining = n;
        let fail = |achieved: usize, e: Error| match e {
            Error::BudgetExceeded { budget, .. } => Error::BudgetExceeded { achieved, budget },
            other => other,
        };
        while remaining > 0 {
            if remaining & 1 == 1 {
                acc = acc
                    .convolve_with(&base, snap, budget)
                    .map_err(|e| fail(acc_power, e))?;
                acc_power += base_power;
            }
            remaining >>= 1;
            if remaining > 0 {
                base = base
                    .convolve_with(&base, snap, budget)
                    .map_err(|e| fail(acc_power, e))?;
                base_power *= 2;
            }
        }
        Ok(acc)
    }

    /// Image of the measure under the isometry taking `a` to `|a| e_1`.
    /// Works for any atomic part; 1-d densities are mirrored when needed,
    /// while rotating a density in dimension 2 is unsupported.
    pub fn rotate_to_e1(&self, a: &[f64]) -> Result<Self> {
        let rot = Rotation::to_e1(a)?;
        self.rotate(&rot)
    }

    pub fn rotate(&self, rot: &Rotation) -> Result<Self> {
        if rot.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rot.dim,
            });
        }
        if rot.is_identity() {
            return Ok(self.clone());
        }
        let d = self.dim;
        let mut coords = Vec::with_capacity(self.atomic.coords.len());
        for (x, _) in self.atomic.iter() {
            coords.extend_from_slice(&rot.apply(x));
        }
        let atomic = AtomicMeasure::from_unsorted(
            d,
            coords,
            self.atomic.masses.clone(),
            self.atomic.dedup_tol,
        );
        let density = match &self.density {
            None => None,
            Some(g) if d == 1 => Some(g.flip_1d()),
            Some(_) => return Err(Error::DensityRotationUnsupported { dim: d }),
        };
        Ok(MixedMeasure {
            dim: d,
            atomic,
            density,
            max_snap: self.max_snap,
        })
    }

    /// Restriction to the closed ball `|x| <= radius` or its complement.
    /// Grid cells are kept or dropped according to their centers.
    pub fn restrict_ball(&self, radius: f64, keep: BallPart) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::Invalid(format!(
                "ball radius must be nonnegative, got {radius}"
            )));
        }
        let keep_fn = |x: &[f64]| match keep {
            BallPart::Inside => l2_norm(x) <= radius,
            BallPart::Outside => l2_norm(x) >= radius,
        };
        let mut coords = Vec::new();
        let mut masses = Vec::new();
        for (x, w) in self.atomic.iter() {
            if keep_fn(x) {
                coords.extend_from_slice(x);
                masses.push(w);
            }
        }
        let atomic = AtomicMeasure {
            dim: self.dim,
            coords,
            masses,
            dedup_tol: self.atomic.dedup_tol,
        };
        let density = self.density.as_ref().and_then(|g| {
            let cells: Vec<f64> = g
                .cells
                .iter()
                .enumerate()
                .map(|(k, &m)| if keep_fn(&g.cell_center(k)) { m } else { 0.0 })
                .collect();
            GridDensity { cells, ..g.clone() }.trimmed()
        });
        let out = MixedMeasure {
            dim: self.dim,
            atomic,
            density,
            max_snap: self.max_snap,
        };
        if out.total_mass() <= MASS_EPS {
            return Err(Error::EmptyTruncation { radius });
        }
        Ok(out)
    }
}

/// Merges density pieces onto the lattice of the first piece.
fn merge_pieces(
    pieces: Vec<GridDensity>,
    snap: SnapPolicy,
    budget: usize,
) -> Result<(Option<GridDensity>, Option<f64>)> {
    let mut iter = pieces.into_iter();
    let Some(first) = iter.next() else {
        return Ok((None, None));
    };
    let mut acc = first;
    let mut max_snap: Option<f64> = None;
    for mut piece in iter {
        match acc.relation(&piece) {
            GridRelation::SpacingMismatch => {
                return Err(Error::IncompatibleGrids(format!(
                    "convolution produced grids with spacings {} and {}",
                    acc.spacing, piece.spacing
                )));
            }
            GridRelation::OffsetMismatch { offset } => match snap {
                SnapPolicy::Error => {
                    return Err(Error::SnapError {
                        offset,
                        spacing: acc.spacing,
                    });
                }
                SnapPolicy::Nearest => {
                    let h = acc.spacing;
                    let mut dist: f64 = 0.0;
                    for ax in 0..acc.dim {
                        let raw = piece.origin[ax] - acc.origin[ax];
                        let k = (raw / h).round();
                        dist = dist.max((raw - k * h).abs());
                        piece.origin[ax] = acc.origin[ax] + k * h;
                    }
                    max_snap = Some(max_snap.map_or(dist, |m| m.max(dist)));
                }
            },
            GridRelation::Aligned { .. } => {}
        }
        if let GridRelation::Aligned { offset_cells } = acc.relation(&piece) {
            acc = acc.zip_aligned(&piece, &offset_cells, |x, y| x + y);
            if acc.cells.len() > budget {
                return Err(Error::BudgetExceeded {
                    achieved: 1,
                    budget,
                });
            }
        } else {
            unreachable!("piece was just aligned");
        }
    }
    Ok((Some(acc), max_snap))
}

/// An isometry of `R^d` mapping a chosen vector onto the positive first axis.
#[derive(Debug, Clone)]
pub struct Rotation {
    dim: usize,
    kind: RotationKind,
}

#[derive(Debug, Clone)]
enum RotationKind {
    Identity,
    /// Householder reflection `x -> x - 2 (v.x)/(v.v) v`.
    Householder {
        v: Vec<f64>,
    },
}

impl Rotation {
    /// The reflection taking `a` to `|a| e_1`; identity if `a` already points
    /// along the positive first axis.
    pub fn to_e1(a: &[f64]) -> Result<Self> {
        let norm = l2_norm(a);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroDisplacement);
        }
        let mut v: Vec<f64> = a.to_vec();
        v[0] -= norm;
        if v.iter().all(|c| c.abs() <= 1e-12 * norm) {
            return Ok(Rotation {
                dim: a.len(),
                kind: RotationKind::Identity,
            });
        }
        Ok(Rotation {
            dim: a.len(),
            kind: RotationKind::Householder { v },
        })
    }

    pub fn identity(dim: usize) -> Self {
        Rotation {
            dim,
            kind: RotationKind::Identity,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, RotationKind::Identity)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "rotation input dimension");
        match &self.kind {
            RotationKind::Identity => x.to_vec(),
            RotationKind::Householder { v } => {
                let vv: f64 = v.iter().map(|c| c * c).sum();
                let vx: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
                let t = 2.0 * vx / vv;
                x.iter().zip(v).map(|(xi, vi)| xi - t * vi).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms_1d(pairs: &[(f64, f64)]) -> MixedMeasure {
        let v: Vec<(Vec<f64>, f64)> = pairs.iter().map(|&(x, w)| (vec![x], w)).collect();
        MixedMeasure::from_atoms(1, &v).unwrap()
    }

    #[test]
    fn dedup_merges_near_atoms() {
        let m = atoms_1d(&[(0.0, 1.0), (1e-10, 2.0), (0.5, 3.0)]);
        assert_eq!(m.atomic().len(), 2);
        assert!((m.total_mass() - 6.0).abs() < 1e-15);
        assert!((m.atomic().mass_at(0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn dedup_handles_interleaved_clusters() {
        // In lex order the middle atom separates two atoms that belong to the
        // same cluster; the windowed merge must still find the first one.
        let m = MixedMeasure::from_atoms(
            2,
            &[
                (vec![0.0, 0.0], 1.0),
                (vec![1e-10, 5.0], 1.0),
                (vec![2e-10, 1e-10], 1.0),
            ],
        )
        .unwrap();
        assert_eq!(m.atomic().len(), 2);
    }

    #[test]
    fn meet_and_tv_satisfy_mass_identity() {
        let mu = atoms_1d(&[(0.0, 0.5), (1.0, 0.5)]);
        let nu = atoms_1d(&[(0.0, 0.25), (2.0, 0.75)]);
        let meet = mu.meet(&nu).unwrap();
        let tv = mu.tv_distance(&nu).unwrap();
        assert!((meet.total_mass() - 0.25).abs() < 1e-15);
        assert!((tv - 1.5).abs() < 1e-15);
        let identity = 0.5 * (mu.total_mass() + nu.total_mass() - tv);
        assert!((meet.total_mass() - identity).abs() < 1e-15);
    }

    #[test]
    fn density_meet_respects_alignment() {
        let a = MixedMeasure::uniform(0.0, 1.0, 8).unwrap();
        let b = a.shift(&[0.25]);
        let meet = a.meet(&b).unwrap();
        assert!((meet.total_mass() - 0.75).abs() < 1e-12);
        let c = a.shift(&[0.3]); // not a multiple of 1/8
        assert!(matches!(a.meet(&c), Err(Error::IncompatibleGrids(_))));
        let zero = a.meet_with(&c, GridMismatch::Disjoint).unwrap();
        assert_eq!(zero.total_mass(), 0.0);
    }

    #[test]
    fn convolution_of_uniforms_is_triangular() {
        let u = MixedMeasure::uniform(0.0, 1.0, 4).unwrap();
        let conv = u.convolve(&u).unwrap();
        let g = conv.density().unwrap();
        assert_eq!(g.shape(), &[7]);
        let expect = [1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0].map(|c| c / 16.0);
        for (got, want) in g.cells().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((conv.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convolution_snapping_policy() {
        let u = MixedMeasure::uniform(0.0, 1.0, 8).unwrap();
        let off = atoms_1d(&[(0.0, 0.5), (0.3, 0.5)]); // 0.3 is off-lattice for h = 1/8
        assert!(matches!(u.convolve(&off), Err(Error::SnapError { .. })));
        let snapped = u
            .convolve_with(&off, SnapPolicy::Nearest, DEFAULT_CONVOLUTION_BUDGET)
            .unwrap();
        let snap = snapped.max_snap().unwrap();
        assert!(snap > 0.0 && snap <= 0.0625 + 1e-12);
        assert!((snapped.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convolution_power_matches_repeated() {
        let m = atoms_1d(&[(-1.0, 0.5), (1.0, 0.5)]);
        let p3 = m.convolution_power(3).unwrap();
        let direct = m.convolve(&m).unwrap().convolve(&m).unwrap();
        assert_eq!(p3.atomic().len(), direct.atomic().len());
        for i in 0..p3.atomic().len() {
            assert!((p3.atomic().mass_at(i) - direct.atomic().mass_at(i)).abs() < 1e-15);
        }
        let p0 = m.convolution_power(0).unwrap();
        assert_eq!(p0.atomic().len(), 1);
        assert_eq!(p0.atomic().location(0), &[0.0]);
    }

    #[test]
    fn rotation_maps_displacement_to_axis() {
        let a = [3.0, 4.0];
        let rot = Rotation::to_e1(&a).unwrap();
        let image = rot.apply(&a);
        assert!((image[0] - 5.0).abs() < 1e-12);
        assert!(image[1].abs() < 1e-12);
        // Householder reflections are isometries.
        let x = [0.7, -2.3];
        let y = rot.apply(&x);
        assert!((l2_norm(&x) - l2_norm(&y)).abs() < 1e-12);
    }

    #[test]
    fn rotate_1d_flips_density() {
        let u = MixedMeasure::uniform(0.0, 1.0, 4).unwrap();
        let flipped = u.rotate_to_e1(&[-2.0]).unwrap();
        let g = flipped.density().unwrap();
        assert!((g.origin()[0] + 1.0).abs() < 1e-12);
        assert!((flipped.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restrict_ball_keeps_requested_part() {
        let m = atoms_1d(&[(0.5, 1.0), (2.0, 2.0)]);
        let inside = m.restrict_ball(1.0, BallPart::Inside).unwrap();
        assert!((inside.total_mass() - 1.0).abs() < 1e-15);
        let outside = m.restrict_ball(1.0, BallPart::Outside).unwrap();
        assert!((outside.total_mass() - 2.0).abs() < 1e-15);
        assert!(matches!(
            m.restrict_ball(5.0, BallPart::Outside),
            Err(Error::EmptyTruncation { .. })
        ));
    }

    #[test]
    fn shift_is_exact_translation() {
        let u = MixedMeasure::uniform(0.0, 1.0, 8).unwrap();
        let s = u.shift(&[0.3]).shift(&[-0.3]);
        let tv = u.tv_distance(&s).unwrap();
        assert!(tv < 1e-12);
    }
}
