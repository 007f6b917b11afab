//! Monte Carlo sampling of CUE eigenphases and empirical spacing statistics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionGrid, Kind};
use crate::error::{Error, Result};
use crate::kernel::CueParams;

/// Matrices per RNG stream. Fixing this keeps results independent of the
/// number of worker threads.
pub const CHUNK: u64 = 2048;

/// N sorted eigenphases in [-π, π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenphaseSample {
    pub phases: Vec<f64>,
    pub seed: u64,
}

/// Haar unitary from the QR factorization of a complex Ginibre matrix, with
/// the phases of diag(R) moved into Q.
fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

fn eigenphases<R: Rng>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let u = haar_unitary(n, rng);
    let ev = u
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::NonFinite("Schur decomposition failed".into()))?;
    let mut phases: Vec<f64> = ev
        .iter()
        .map(|z| {
            let a = z.arg();
            // arg returns (-π, π]; fold π onto -π
            if a >= PI {
                a - 2.0 * PI
            } else {
                a
            }
        })
        .collect();
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("eigenphase".into()));
    }
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

/// One Haar-distributed spectrum.
pub fn sample_cue_eigenphases(params: &CueParams, seed: u64) -> Result<EigenphaseSample> {
    let n = params.n();
    if n.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!("sampling needs integer N, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(EigenphaseSample {
        phases: eigenphases(n as usize, &mut rng)?,
        seed,
    })
}

/// Histogram on a rectangular grid of bins with per-bin standard errors.
///
/// For `Kind::Pr` the variable is r̃ = min(r, 1/r) on [0, 1], whose density is
/// 2 P_r(r̃). Errors are computed from per-matrix counts, so correlations
/// between the N triples of one spectrum are accounted for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub kind: Kind,
    /// bin edges per axis, increasing
    pub edges: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// statistically independent units (matrices) behind the counts
    pub units: u64,
}

impl Histogram {
    /// Builds a histogram-shaped object from known densities, for comparisons.
    pub fn from_density(kind: Kind, edges: Vec<Vec<f64>>, density: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        let bins: usize = edges.iter().map(|e| e.len().saturating_sub(1)).product();
        if density.len() != bins || stderr.len() != bins {
            return Err(Error::Binning(format!(
                "{} bins but {} densities and {} errors",
                bins,
                density.len(),
                stderr.len()
            )));
        }
        Ok(Self {
            kind,
            edges,
            counts: vec![0; bins],
            total: 0,
            density,
            stderr,
            units: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    fn bin_volume(&self, flat: usize) -> f64 {
        let mut rest = flat;
        let mut vol = 1.0;
        for e in self.edges.iter().rev() {
            let m = e.len() - 1;
            let k = rest % m;
            rest /= m;
            vol *= e[k + 1] - e[k];
        }
        vol
    }

    /// Bin bounds along each axis for a flat index.
    pub fn bin_bounds(&self, flat: usize) -> Vec<(f64, f64)> {
        let mut rest = flat;
        let mut out = Vec::with_capacity(self.edges.len());
        for e in self.edges.iter().rev() {
            let m = e.len() - 1;
            let k = rest % m;
            rest /= m;
            out.push((e[k], e[k + 1]));
        }
        out.reverse();
        out
    }

    /// Sum of density × bin volume.
    pub fn mass(&self) -> f64 {
        (0..self.bins())
            .map(|k| self.density[k] * self.bin_volume(k))
            .sum()
    }
}

fn locate(edges: &[f64], x: f64) -> Option<usize> {
    let m = edges.len() - 1;
    if x < edges[0] || x > edges[m] {
        return None;
    }
    let k = edges.partition_point(|&e| e <= x);
    Some(k.saturating_sub(1).min(m - 1))
}

/// Raw accumulator for one histogram.
#[derive(Clone)]
struct Acc {
    edges: Vec<Vec<f64>>,
    counts: Vec<u64>,
    squares: Vec<u64>,
    scratch: Vec<usize>,
}

impl Acc {
    fn new(edges: Vec<Vec<f64>>) -> Self {
        let bins = edges.iter().map(|e| e.len() - 1).product();
        Self {
            edges,
            counts: vec![0; bins],
            squares: vec![0; bins],
            scratch: Vec::new(),
        }
    }

    fn push(&mut self, x: &[f64]) {
        let mut flat = 0;
        for (e, &v) in self.edges.iter().zip(x) {
            match locate(e, v) {
                Some(k) => flat = flat * (e.len() - 1) + k,
                None => return,
            }
        }
        self.scratch.push(flat);
    }

    /// Closes one matrix: folds its counts and their squares in.
    fn end_unit(&mut self) {
        self.scratch.sort_unstable();
        let mut i = 0;
        while i < self.scratch.len() {
            let b = self.scratch[i];
            let mut j = i;
            while j < self.scratch.len() && self.scratch[j] == b {
                j += 1;
            }
            let c = (j - i) as u64;
            self.counts[b] += c;
            self.squares[b] += c * c;
            i = j;
        }
        self.scratch.clear();
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.squares.iter_mut().zip(&other.squares) {
            *a += b;
        }
    }

    fn finish(self, kind: Kind, units: u64, per_unit: u64) -> Histogram {
        let total = self.counts.iter().sum();
        let mut h = Histogram {
            kind,
            edges: self.edges,
            counts: self.counts,
            total,
            density: Vec::new(),
            stderr: Vec::new(),
            units,
        };
        let m = units as f64;
        let samples = m * per_unit as f64;
        let mut density = Vec::with_capacity(h.bins());
        let mut stderr = Vec::with_capacity(h.bins());
        for k in 0..h.bins() {
            let vol = h.bin_volume(k);
            let c = h.counts[k] as f64;
            let mean = c / m;
            let var = (self.squares[k] as f64 / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
            density.push(c / (samples * vol));
            stderr.push((var / m).sqrt() / (per_unit as f64 * vol));
        }
        h.density = density;
        h.stderr = stderr;
        h
    }
}

/// Bin layout for the empirical histograms, in unit mean spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub pnn: Vec<f64>,
    pub pc: Vec<f64>,
    pub r_tilde: Vec<f64>,
}

impl Binning {
    /// Bins covering the full support at rank N: t ∈ [0, N/2], a, b ∈ [0, N],
    /// r̃ ∈ [0, 1].
    pub fn for_rank(n: usize) -> Self {
        let edges = |upper: f64, width: f64| {
            let m = (upper / width).round() as usize;
            (0..=m).map(|k| upper * k as f64 / m as f64).collect::<Vec<_>>()
        };
        let n = n as f64;
        Self {
            pnn: edges(0.5 * n, 0.05),
            pc: edges(n, 0.2),
            r_tilde: edges(1.0, 0.01),
        }
    }
}

/// Empirical P_nn, P_c and r̃ histograms with the mean gap ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistributions {
    pub n: usize,
    pub matrices: u64,
    pub seed: u64,
    pub pnn: Histogram,
    pub pc: Histogram,
    pub r_tilde: Histogram,
    pub mean_r_tilde: f64,
    pub mean_r_tilde_stderr: f64,
}

struct ChunkResult {
    pnn: Acc,
    pc: Acc,
    rt: Acc,
    sum: f64,
    sum_sq: f64,
}

/// Unfolded (left, right) spacing of every eigenphase, with wraparound.
pub fn consecutive_spacings(phases: &[f64]) -> Vec<(f64, f64)> {
    let n = phases.len();
    let scale = n as f64 / (2.0 * PI);
    (0..n)
        .map(|i| {
            let prev = if i == 0 { phases[n - 1] - 2.0 * PI } else { phases[i - 1] };
            let next = if i + 1 == n { phases[0] + 2.0 * PI } else { phases[i + 1] };
            ((phases[i] - prev) * scale, (next - phases[i]) * scale)
        })
        .collect()
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// The spectra behind [`empirical_with_binning`] for the same `n`, count and
/// seed, in order.
pub fn sample_spectra(n: usize, n_samples: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Vec<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            (0..CHUNK.min(n_samples - c * CHUNK)).map(|_| eigenphases(n, &mut rng)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn run_chunk(n: usize, seed: u64, chunk: u64, count: u64, binning: &Binning) -> Result<ChunkResult> {
    let mut rng = chunk_rng(seed, chunk);
    let mut out = ChunkResult {
        pnn: Acc::new(vec![binning.pnn.clone()]),
        pc: Acc::new(vec![binning.pc.clone(), binning.pc.clone()]),
        rt: Acc::new(vec![binning.r_tilde.clone()]),
        sum: 0.0,
        sum_sq: 0.0,
    };
    for _ in 0..count {
        let phases = eigenphases(n, &mut rng)?;
        let mut mean = 0.0;
        for (a, b) in consecutive_spacings(&phases) {
            out.pnn.push(&[a.min(b)]);
            out.pc.push(&[a, b]);
            let rt = if a < b { a / b } else { b / a };
            out.rt.push(&[rt]);
            mean += rt;
        }
        mean /= n as f64;
        out.sum += mean;
        out.sum_sq += mean * mean;
        out.pnn.end_unit();
        out.pc.end_unit();
        out.rt.end_unit();
    }
    Ok(out)
}

/// Samples `n_samples` spectra and histograms every consecutive triple.
/// Deterministic in `seed` regardless of thread count.
pub fn empirical_distributions(params: &CueParams, n_samples: u64, seed: u64) -> Result<EmpiricalDistributions> {
    let n = params.n();
    if n.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!("sampling needs integer N, got {n}")));
    }
    empirical_with_binning(n as usize, n_samples, seed, &Binning::for_rank(n as usize))
}

pub fn empirical_with_binning(
    n: usize,
    n_samples: u64,
    seed: u64,
    binning: &Binning,
) -> Result<EmpiricalDistributions> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    for e in [&binning.pnn, &binning.pc, &binning.r_tilde] {
        if e.len() < 2 || e.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Binning("edges must increase with at least one bin".into()));
        }
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<ChunkResult> = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(n, seed, c, CHUNK.min(n_samples - c * CHUNK), binning))
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one chunk");
    for p in iter {
        acc.pnn.merge(&p.pnn);
        acc.pc.merge(&p.pc);
        acc.rt.merge(&p.rt);
        acc.sum += p.sum;
        acc.sum_sq += p.sum_sq;
    }
    let m = n_samples as f64;
    let mean = acc.sum / m;
    let var = (acc.sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0);
    let per = n as u64;
    Ok(EmpiricalDistributions {
        n,
        matrices: n_samples,
        seed,
        pnn: acc.pnn.finish(Kind::Pnn, n_samples, per),
        pc: acc.pc.finish(Kind::Pc, n_samples, per),
        r_tilde: acc.rt.finish(Kind::Pr, n_samples, per),
        mean_r_tilde: mean,
        mean_r_tilde_stderr: (var / m).sqrt(),
    })
}

/// Outcome of comparing a histogram with an analytic density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub max_abs_z: f64,
    pub fraction_beyond_3: f64,
    /// bins entering the statistics
    pub bins_used: usize,
    /// per-bin (flat index, analytic bin average, z)
    pub bins: Vec<(usize, f64, f64)>,
}

/// Bins with fewer counts than this are left out of a comparison, where the
/// normal approximation to the bin count is poor.
pub const MIN_COUNT: u64 = 25;

/// Piecewise-linear interpolation on an axis, taking the density to vanish
/// at the origin and beyond the last node.
fn interp_weights(axis: &[f64], x: f64) -> Option<[(Option<usize>, f64); 2]> {
    let last = *axis.last()?;
    if x > last || x < 0.0 {
        return None;
    }
    let k = axis.partition_point(|&e| e < x);
    if k == 0 {
        let w = x / axis[0];
        return Some([(None, 1.0 - w), (Some(0), w)]);
    }
    let (x0, x1) = (axis[k - 1], axis[k]);
    let w = (x - x0) / (x1 - x0);
    Some([(Some(k - 1), 1.0 - w), (Some(k), w)])
}

fn interpolate(grid: &DistributionGrid, point: &[f64]) -> f64 {
    match grid.axes.len() {
        1 => interp_weights(&grid.axes[0], point[0]).map_or(0.0, |w| {
            w.iter()
                .map(|(i, c)| i.map_or(0.0, |i| c * grid.values[i]))
                .sum()
        }),
        _ => {
            let (Some(wa), Some(wb)) = (
                interp_weights(&grid.axes[0], point[0]),
                interp_weights(&grid.axes[1], point[1]),
            ) else {
                return 0.0;
            };
            let nb = grid.axes[1].len();
            let mut v = 0.0;
            for (ia, ca) in wa {
                for (ib, cb) in wb {
                    if let (Some(ia), Some(ib)) = (ia, ib) {
                        v += ca * cb * grid.values[ia * nb + ib];
                    }
                }
            }
            v
        }
    }
}

/// Average of the analytic density over one bin (midpoint rule on a
/// sub-grid of the bin). For the ratio the density of r̃ is 2 P_r(r̃).
fn bin_average(grid: &DistributionGrid, bounds: &[(f64, f64)], factor: f64) -> f64 {
    const SUB: usize = 8;
    let mid = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * (k as f64 + 0.5) / SUB as f64;
    match bounds.len() {
        1 => (0..SUB).map(|k| interpolate(grid, &[mid(bounds[0], k)])).sum::<f64>() / SUB as f64 * factor,
        _ => {
            let mut s = 0.0;
            for i in 0..SUB {
                for j in 0..SUB {
                    s += interpolate(grid, &[mid(bounds[0], i), mid(bounds[1], j)]);
                }
            }
            s / (SUB * SUB) as f64 * factor
        }
    }
}

/// Per-bin z-scores of `empirical` against the bin averages of `analytic`.
/// Only bins with at least `MIN_COUNT` counts (or, for histograms built from
/// densities, positive error) contribute.
pub fn compare_hist(analytic: &DistributionGrid, empirical: &Histogram) -> Result<Comparison> {
    if analytic.kind != empirical.kind || analytic.axes.len() != empirical.edges.len() {
        return Err(Error::Binning(format!(
            "{:?} grid against {:?} histogram",
            analytic.kind, empirical.kind
        )));
    }
    if let Kind::Pr = analytic.kind {
        if empirical.edges[0].last().is_some_and(|&e| e > 1.0 + 1e-12) {
            return Err(Error::Binning("ratio histogram must lie within [0, 1]".into()));
        }
    }
    let factor = if analytic.kind == Kind::Pr { 2.0 } else { 1.0 };
    let mut bins = Vec::new();
    let mut max_abs_z: f64 = 0.0;
    let mut beyond = 0usize;
    for k in 0..empirical.bins() {
        let usable = if empirical.units > 0 {
            empirical.counts[k] >= MIN_COUNT
        } else {
            empirical.stderr[k] > 0.0
        };
        let bounds = empirical.bin_bounds(k);
        let avg = bin_average(analytic, &bounds, factor);
        if !usable {
            continue;
        }
        let z = if empirical.stderr[k] > 0.0 {
            (empirical.density[k] - avg) / empirical.stderr[k]
        } else {
            0.0
        };
        max_abs_z = max_abs_z.max(z.abs());
        if z.abs() > 3.0 {
            beyond += 1;
        }
        bins.push((k, avg, z));
    }
    if bins.is_empty() {
        return Err(Error::Binning("no bins with enough counts".into()));
    }
    Ok(Comparison {
        max_abs_z,
        fraction_beyond_3: beyond as f64 / bins.len() as f64,
        bins_used: bins.len(),
        bins,
    })
}

/// Analytic bin averages on the bins of `like`, as a histogram with the
/// supplied per-bin errors.
pub fn binned_analytic(analytic: &DistributionGrid, like: &Histogram) -> Result<Histogram> {
    let factor = if analytic.kind == Kind::Pr { 2.0 } else { 1.0 };
    let density = (0..like.bins())
        .map(|k| bin_average(analytic, &like.bin_bounds(k), factor))
        .collect();
    Histogram::from_density(analytic.kind, like.edges.clone(), density, like.stderr.clone())
}
