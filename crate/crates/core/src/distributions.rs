//! Nearest-neighbor spacing, consecutive-spacing and gap-ratio densities.
//!
//! All public arguments and values use unit mean spacing. Internally the CUE
//! works in raw eigenphases (spacing 2π/N) and the sine limit in spacing π.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, Accumulate, EndpointFlow};
use crate::fredholm::janossy_nystrom;
use crate::kernel::CueParams;
use crate::ode::Dop853;
use crate::quadrature::{gauss_legendre, Interval};
use crate::sine::{integrate_sine_symmetric, SineFlow};
use crate::tw::{integrate_symmetric, CueFlow, Seed, DEFAULT_EPSILON};

/// Intervals longer than this many mean spacings are treated as empty.
pub const TRUNCATION_SPACINGS: f64 = 6.0;

/// Integration of the ratio integrand stops once log J̃ falls below this.
pub const LOG_CUTOFF: f64 = -40.0;

/// Smallest rank for the spacing and ratio distributions. Below it the
/// truncated support reaches intervals close to the full circle, where the
/// endpoint flow is singular.
pub const MIN_RANK: f64 = 5.0;

/// Finite-N CUE or the sine-kernel limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ensemble {
    Cue(CueParams),
    Sine,
}

impl Ensemble {
    pub fn cue(n: usize) -> Result<Self> {
        Ok(Self::Cue(CueParams::new(n)?))
    }

    /// N, or `None` for the limit.
    pub fn rank(&self) -> Option<f64> {
        match self {
            Self::Cue(p) => Some(p.n()),
            Self::Sine => None,
        }
    }

    /// Mean spacing in the internal variables.
    fn spacing(&self) -> f64 {
        match self {
            Self::Cue(p) => p.mean_spacing(),
            Self::Sine => std::f64::consts::PI,
        }
    }

    /// Largest interval length in internal variables.
    fn max_length(&self) -> f64 {
        match self {
            Self::Cue(_) => 2.0 * std::f64::consts::PI,
            Self::Sine => f64::INFINITY,
        }
    }

    fn flow(&self) -> Box<dyn EndpointFlow> {
        match self {
            Self::Cue(p) => Box::new(CueFlow::new(*p)),
            Self::Sine => Box::new(SineFlow { seed: Seed::Neumann }),
        }
    }

    fn check_rank(&self) -> Result<()> {
        match self.rank() {
            Some(n) if n < MIN_RANK => Err(Error::InvalidParameter(format!(
                "distributions need N ≥ {MIN_RANK}, got {n}"
            ))),
            _ => Ok(()),
        }
    }

    fn truncation(&self) -> f64 {
        (TRUNCATION_SPACINGS * self.spacing()).min(0.999 * self.max_length())
    }

    fn check_lengths(&self, a: f64, b: f64) -> Result<()> {
        let d = self.spacing();
        if !(a > 0.0 && b > 0.0 && (a + b) * d < self.max_length()) {
            return Err(Error::InvalidInterval {
                a1: -a * d,
                a2: b * d,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Pnn,
    Pc,
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    UnitMeanSpacing,
}

/// Settings a grid was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub rtol: f64,
    pub atol: f64,
    pub epsilon: f64,
    pub truncation_spacings: f64,
    /// N^power applied to a deviation from the limit, if any
    pub deviation_power: Option<i32>,
}

impl GridMetadata {
    fn new(settings: Dop853) -> Self {
        Self {
            rtol: settings.rtol,
            atol: settings.atol,
            epsilon: DEFAULT_EPSILON,
            truncation_spacings: TRUNCATION_SPACINGS,
            deviation_power: None,
        }
    }
}

/// Tabulated density. 1D kinds have one axis; P_c has axes (a, b) with
/// values stored row-major in a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionGrid {
    pub kind: Kind,
    /// `None` for the sine-kernel limit
    pub n_rank: Option<f64>,
    pub convention: Convention,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub metadata: GridMetadata,
}

impl DistributionGrid {
    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.kind != other.kind || self.axes != other.axes {
            return Err(Error::GridMismatch(format!(
                "{:?} grid with {} points vs {:?} grid with {} points",
                self.kind,
                self.values.len(),
                other.kind,
                other.values.len()
            )));
        }
        Ok(())
    }

    /// Largest absolute pointwise difference.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Axes at which grids are tabulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub r: Vec<f64>,
}

/// `count` evenly spaced points on (0, upper].
pub fn uniform_axis(upper: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| upper * k as f64 / count as f64).collect()
}

/// `count` log-spaced points on [lower, upper].
pub fn log_axis(lower: f64, upper: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lower];
    }
    let (l, u) = (lower.ln(), upper.ln());
    (0..count)
        .map(|k| (l + (u - l) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::with_sizes(200, 160)
    }
}

impl GridSpec {
    /// Spacing axes with `points` samples on (0, 4]; `r_points` log-spaced
    /// ratios on [0.01, 4].
    pub fn with_sizes(points: usize, r_points: usize) -> Self {
        let s = uniform_axis(4.0, points);
        Self {
            t: s.clone(),
            a: s.clone(),
            b: s,
            r: log_axis(0.01, 4.0, r_points),
        }
    }
}

/// P_nn on increasing unit spacings `ts`, as -dJ̃/dt from the symmetric system.
pub fn pnn_curve(ens: &Ensemble, ts: &[f64], settings: Dop853) -> Result<Vec<f64>> {
    ens.check_rank()?;
    let d = ens.spacing();
    if ts.first().is_some_and(|&t| t <= 0.0) {
        return Err(Error::InvalidParameter("spacings must be positive".into()));
    }
    // beyond the truncation length J̃ is below e^-40 and the density is set to 0
    let live = ts.iter().take_while(|&&t| 2.0 * t * d <= ens.truncation()).count();
    let raw: Vec<f64> = ts[..live].iter().map(|t| t * d).collect();
    let mut out: Vec<f64> = match ens {
        Ensemble::Cue(p) => integrate_symmetric(&raw, p, settings)?
            .into_iter()
            .map(|(s, ds)| -d * s.log_j.exp() * ds.log_j.re)
            .collect(),
        Ensemble::Sine => integrate_sine_symmetric(&raw, settings)?
            .into_iter()
            .map(|(s, ds)| -d * s.log_j.exp() * ds.log_j.re)
            .collect(),
    };
    out.resize(ts.len(), 0.0);
    Ok(out)
}

/// Nearest-neighbor spacing density at unit spacing t.
pub fn pnn(t: f64, params: &CueParams) -> Result<f64> {
    Ok(pnn_curve(&Ensemble::Cue(*params), &[t], Dop853::default())?[0])
}

/// P_c(a, b) at a fixed left spacing for increasing right spacings `bs`.
pub fn pc_row(ens: &Ensemble, a: f64, bs: &[f64], settings: Dop853) -> Result<Vec<f64>> {
    ens.check_rank()?;
    if bs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("right spacings must increase".into()));
    }
    let d = ens.spacing();
    // points past the truncation length are set to 0
    let live = bs
        .iter()
        .take_while(|&&b| (a + b) * d <= ens.truncation())
        .count();
    let mut out = Vec::with_capacity(bs.len());
    if live > 0 {
        let bs = &bs[..live];
        ens.check_lengths(a, bs[0])?;
        let flow = ens.flow();
        let dim = flow.dim();
        let a1 = -a * d;
        let (from, to) = ((a1, bs[0] * d), (a1, bs[live - 1] * d));
        let mut y = flow::ray_state(flow.as_ref(), from, DEFAULT_EPSILON, settings)?;
        let mut d1 = vec![0.0; dim];
        let mut d2 = vec![0.0; dim];
        let mut record = |at: (f64, f64), y: &[f64], out: &mut Vec<f64>| -> Result<()> {
            let res = flow.partials(y, at.0, at.1, &mut d1, &mut d2)?;
            out.push(d * d * res.pc(flow.log_j(y)));
            Ok(())
        };
        record(from, &y, &mut out)?;
        if live > 1 {
            let span = to.1 - from.1;
            let stops: Vec<f64> = bs[1..].iter().map(|b| (b * d - from.1) / span).collect();
            flow::follow(
                flow.as_ref(),
                &mut y,
                from,
                to,
                settings,
                Accumulate::None,
                &stops,
                |_, at, y| {
                    record(at, y, &mut out)?;
                    Ok(true)
                },
            )?;
        }
    } else if a <= 0.0 || bs.first().is_some_and(|&b| b <= 0.0) {
        return Err(Error::InvalidParameter("spacings must be positive".into()));
    }
    out.resize(bs.len(), 0.0);
    Ok(out)
}

/// Consecutive-spacing density P_c(a, b) via the resolvent closed form.
pub fn pc(a: f64, b: f64, params: &CueParams) -> Result<f64> {
    Ok(pc_row(&Ensemble::Cue(*params), a, &[b], Dop853::default())?[0])
}

/// P_c(a, b) by centered second differences of the Nyström determinant with
/// one Richardson step. `h` is the raw step, `m` the quadrature order.
pub fn pc_fd(a: f64, b: f64, params: &CueParams, h: f64, m: usize) -> Result<f64> {
    Ensemble::Cue(*params).check_lengths(a, b)?;
    let d = params.mean_spacing();
    let (a1, a2) = (-a * d, b * d);
    if h <= 0.0 || h >= a1.abs().min(a2) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step {h} must be positive and below both endpoints"
        )));
    }
    let j = |x: f64, y: f64| janossy_nystrom(Interval::janossy(x, y)?, params, m);
    let mixed = |h: f64| -> Result<f64> {
        Ok((j(a1 + h, a2 + h)? - j(a1 + h, a2 - h)? - j(a1 - h, a2 + h)? + j(a1 - h, a2 - h)?)
            / (4.0 * h * h))
    };
    let coarse = mixed(h)?;
    let fine = mixed(0.5 * h)?;
    Ok(-d * d * (4.0 * fine - coarse) / 3.0)
}

/// P_nn(t) as 2∫_t^∞ P_c(t, b) db, integrated along the right endpoint.
pub fn pnn_from_pc(t: f64, params: &CueParams, settings: Dop853) -> Result<f64> {
    let ens = Ensemble::Cue(*params);
    let d = ens.spacing();
    let flow = ens.flow();
    let start = (-t * d, t * d);
    let far = ens.truncation() - t * d;
    if far <= start.1 {
        return Err(Error::InvalidInterval {
            a1: start.0,
            a2: start.1,
        });
    }
    let mut y = flow::ray_state(flow.as_ref(), start, DEFAULT_EPSILON, settings)?;
    y.push(0.0);
    flow::follow(
        flow.as_ref(),
        &mut y,
        start,
        (start.0, far),
        settings,
        Accumulate::Pc,
        &[1.0],
        |_, _, _| Ok(true),
    )?;
    Ok(2.0 * d * y[flow.dim()])
}

/// Gap-ratio density P_r(r) = ∫ b P_c(r b, b) db.
pub fn pr_ensemble(r: f64, ens: &Ensemble, settings: Dop853) -> Result<f64> {
    ens.check_rank()?;
    flow::ratio_integral(
        ens.flow().as_ref(),
        r,
        ens.truncation(),
        DEFAULT_EPSILON,
        LOG_CUTOFF,
        settings,
    )
}

/// Gap-ratio density at finite N.
pub fn pr(r: f64, params: &CueParams) -> Result<f64> {
    pr_ensemble(r, &Ensemble::Cue(*params), Dop853::default())
}

/// P_r on many ratios in parallel.
pub fn pr_curve(ens: &Ensemble, rs: &[f64], settings: Dop853) -> Result<Vec<f64>> {
    rs.par_iter().map(|&r| pr_ensemble(r, ens, settings)).collect()
}

/// ∫ P_r over (0, ∞) and E[r̃] = 2∫₀¹ r P_r dr, using the swap symmetry
/// and an `order`-point Gauss-Legendre rule on (0, 1).
pub fn gap_ratio_moments(ens: &Ensemble, order: usize, settings: Dop853) -> Result<(f64, f64)> {
    let q = gauss_legendre(order, Interval::new(0.0, 1.0)?)?;
    let values = pr_curve(ens, &q.nodes, settings)?;
    let mut norm = 0.0;
    let mut mean = 0.0;
    for ((w, r), p) in q.weights.iter().zip(&q.nodes).zip(&values) {
        norm += 2.0 * w * p;
        mean += 2.0 * w * r * p;
    }
    Ok((norm, mean))
}

/// Composite Gauss-Legendre rule with `panels` panels of 16 points on (lo, hi).
fn composite(lo: f64, hi: f64, panels: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = Vec::new();
    let mut w = Vec::new();
    let width = (hi - lo) / panels as f64;
    for k in 0..panels {
        let p = lo + k as f64 * width;
        let q = gauss_legendre(16, Interval::new(p, p + width)?)?;
        x.extend(q.nodes);
        w.extend(q.weights);
    }
    Ok((x, w))
}

/// ∫ P_nn dt over (0, 3] spacings.
pub fn pnn_normalization(ens: &Ensemble, settings: Dop853) -> Result<f64> {
    let upper = 0.5 * TRUNCATION_SPACINGS;
    let (x, w) = composite(0.0, upper, 6)?;
    let v = pnn_curve(ens, &x, settings)?;
    Ok(w.iter().zip(&v).map(|(w, v)| w * v).sum())
}

/// (∫∫ P_c, ∫∫ a P_c) over a + b < 6 spacings.
pub fn pc_moments(ens: &Ensemble, settings: Dop853) -> Result<(f64, f64)> {
    let total = TRUNCATION_SPACINGS;
    let (xa, wa) = composite(0.0, total, 6)?;
    let rows: Vec<(f64, f64)> = xa
        .par_iter()
        .zip(&wa)
        .map(|(&a, &wa)| -> Result<(f64, f64)> {
            let q = gauss_legendre(48, Interval::new(0.0, total - a)?)?;
            let v = pc_row(ens, a, &q.nodes, settings)?;
            let s: f64 = q.weights.iter().zip(&v).map(|(w, v)| w * v).sum();
            Ok((wa * s, wa * a * s))
        })
        .collect::<Result<_>>()?;
    Ok(rows
        .iter()
        .fold((0.0, 0.0), |acc, r| (acc.0 + r.0, acc.1 + r.1)))
}

/// Tabulates one kind on the axes of `spec`.
pub fn grid(kind: Kind, ens: &Ensemble, spec: &GridSpec, settings: Dop853) -> Result<DistributionGrid> {
    let (axes, values) = match kind {
        Kind::Pnn => (vec![spec.t.clone()], pnn_curve(ens, &spec.t, settings)?),
        Kind::Pr => (vec![spec.r.clone()], pr_curve(ens, &spec.r, settings)?),
        Kind::Pc => {
            let rows: Vec<Vec<f64>> = spec
                .a
                .par_iter()
                .map(|&a| pc_row(ens, a, &spec.b, settings))
                .collect::<Result<_>>()?;
            (
                vec![spec.a.clone(), spec.b.clone()],
                rows.into_iter().flatten().collect(),
            )
        }
    };
    Ok(DistributionGrid {
        kind,
        n_rank: ens.rank(),
        convention: Convention::UnitMeanSpacing,
        axes,
        values,
        metadata: GridMetadata::new(settings),
    })
}

/// The three limit densities on a common specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitGrids {
    pub pnn: DistributionGrid,
    pub pc: DistributionGrid,
    pub pr: DistributionGrid,
}

pub fn limit_grids(spec: &GridSpec) -> Result<LimitGrids> {
    let s = Dop853::default();
    Ok(LimitGrids {
        pnn: grid(Kind::Pnn, &Ensemble::Sine, spec, s)?,
        pc: grid(Kind::Pc, &Ensemble::Sine, spec, s)?,
        pr: grid(Kind::Pr, &Ensemble::Sine, spec, s)?,
    })
}

/// N^power (P_N - P_∞) from two grids on the same axes.
pub fn scaled_deviation(
    finite: &DistributionGrid,
    limit: &DistributionGrid,
    power: i32,
) -> Result<DistributionGrid> {
    finite.check_compatible(limit)?;
    let n = finite
        .n_rank
        .ok_or_else(|| Error::GridMismatch("first grid must be at finite N".into()))?;
    if limit.n_rank.is_some() {
        return Err(Error::GridMismatch("second grid must be the limit".into()));
    }
    let scale = n.powi(power);
    let mut out = finite.clone();
    for (v, l) in out.values.iter_mut().zip(&limit.values) {
        *v = scale * (*v - l);
    }
    out.metadata.deviation_power = Some(power);
    Ok(out)
}

/// N^power (P_N - P_∞) on the axes of `spec`.
pub fn deviation_scaled(
    kind: Kind,
    n_rank: usize,
    power: i32,
    spec: &GridSpec,
    settings: Dop853,
) -> Result<DistributionGrid> {
    let finite = grid(kind, &Ensemble::cue(n_rank)?, spec, settings)?;
    let limit = grid(kind, &Ensemble::Sine, spec, settings)?;
    scaled_deviation(&finite, &limit, power)
}

/// Pointwise least-squares fit P_N - P_∞ ≈ c2/N² + c4/N⁴.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionFit {
    pub kind: Kind,
    pub axes: Vec<Vec<f64>>,
    pub c2: Vec<f64>,
    pub c4: Vec<f64>,
    pub n_list: Vec<f64>,
    /// root-mean-square residual over N at each grid point
    pub residual: Vec<f64>,
}

/// Fits precomputed finite-N grids against the limit.
pub fn fit_corrections(finite: &[DistributionGrid], limit: &DistributionGrid) -> Result<CorrectionFit> {
    let mut ns: Vec<f64> = Vec::with_capacity(finite.len());
    for g in finite {
        g.check_compatible(limit)?;
        let n = g
            .n_rank
            .ok_or_else(|| Error::GridMismatch("fit needs finite-N grids".into()))?;
        if ns.contains(&n) {
            return Err(Error::Underdetermined(format!("N = {n} repeated")));
        }
        ns.push(n);
    }
    if ns.len() < 3 {
        return Err(Error::Underdetermined(format!(
            "two-term fit needs at least 3 distinct N, got {}",
            ns.len()
        )));
    }
    let x: Vec<f64> = ns.iter().map(|n| n.powi(-2)).collect();
    // normal equations for the basis (x, x²)
    let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
    for &xi in &x {
        s11 += xi * xi;
        s12 += xi.powi(3);
        s22 += xi.powi(4);
    }
    let det = s11 * s22 - s12 * s12;
    let points = limit.values.len();
    let mut c2 = vec![0.0; points];
    let mut c4 = vec![0.0; points];
    let mut residual = vec![0.0; points];
    for p in 0..points {
        let (mut b1, mut b2) = (0.0, 0.0);
        for (g, &xi) in finite.iter().zip(&x) {
            let y = g.values[p] - limit.values[p];
            b1 += xi * y;
            b2 += xi * xi * y;
        }
        c2[p] = (s22 * b1 - s12 * b2) / det;
        c4[p] = (s11 * b2 - s12 * b1) / det;
        let ss: f64 = finite
            .iter()
            .zip(&x)
            .map(|(g, &xi)| (g.values[p] - limit.values[p] - c2[p] * xi - c4[p] * xi * xi).powi(2))
            .sum();
        residual[p] = (ss / ns.len() as f64).sqrt();
    }
    Ok(CorrectionFit {
        kind: limit.kind,
        axes: limit.axes.clone(),
        c2,
        c4,
        n_list: ns,
        residual,
    })
}

/// Computes the grids for every N in `n_list` and fits them.
pub fn fit_correction_orders(
    kind: Kind,
    n_list: &[usize],
    spec: &GridSpec,
    settings: Dop853,
) -> Result<CorrectionFit> {
    let mut distinct = n_list.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Underdetermined(format!(
            "two-term fit needs at least 3 distinct N, got {}",
            distinct.len()
        )));
    }
    let limit = grid(kind, &Ensemble::Sine, spec, settings)?;
    let finite: Vec<DistributionGrid> = distinct
        .iter()
        .map(|&n| grid(kind, &Ensemble::cue(n)?, spec, settings))
        .collect::<Result<_>>()?;
    fit_corrections(&finite, &limit)
}

/// Resolvent values at (−a, b) in unit spacings, exposed for diagnostics.
pub fn resolvents_at(ens: &Ensemble, a: f64, b: f64) -> Result<(Complex64, Complex64, Complex64, f64)> {
    ens.check_lengths(a, b)?;
    let d = ens.spacing();
    let flow = ens.flow();
    let at = (-a * d, b * d);
    let y = flow::ray_state(flow.as_ref(), at, DEFAULT_EPSILON, Dop853::default())?;
    let mut d1 = vec![0.0; flow.dim()];
    let mut d2 = vec![0.0; flow.dim()];
    let r = flow.partials(&y, at.0, at.1, &mut d1, &mut d2)?;
    Ok((r.r11, r.r22, r.r12, flow.log_j(&y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cue(n: usize) -> Ensemble {
        Ensemble::cue(n).unwrap()
    }

    #[test]
    fn axes() {
        let t = uniform_axis(4.0, 200);
        assert_eq!(t.len(), 200);
        assert!((t[0] - 0.02).abs() < 1e-15 && t[199] == 4.0);
        let r = log_axis(0.01, 4.0, 160);
        assert!((r[0] - 0.01).abs() < 1e-15 && (r[159] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pnn_small_t_is_quadratic() {
        let p = CueParams::new(10).unwrap();
        let a = pnn(1e-3, &p).unwrap();
        let b = pnn(2e-3, &p).unwrap();
        assert!(((b / a) - 4.0).abs() < 1e-3, "{}", b / a);
    }

    #[test]
    fn pnn_matches_marginal_of_pc() {
        let p = CueParams::new(10).unwrap();
        for t in [0.3, 0.7, 1.2] {
            let direct = pnn(t, &p).unwrap();
            let marginal = pnn_from_pc(t, &p, Dop853::default()).unwrap();
            assert!((direct - marginal).abs() < 1e-4, "t={t}: {direct} vs {marginal}");
        }
    }

    #[test]
    fn pc_reflection_symmetry() {
        let e = cue(12);
        for (a, b) in [(0.4, 1.1), (0.9, 0.3)] {
            let x = pc_row(&e, a, &[b], Dop853::default()).unwrap()[0];
            let y = pc_row(&e, b, &[a], Dop853::default()).unwrap()[0];
            assert!((x - y).abs() < 1e-8);
        }
        let x = pc_row(&Ensemble::Sine, 0.4, &[1.1], Dop853::default()).unwrap()[0];
        let y = pc_row(&Ensemble::Sine, 1.1, &[0.4], Dop853::default()).unwrap()[0];
        assert!((x - y).abs() < 1e-8);
    }

    #[test]
    fn pc_row_matches_pointwise() {
        let e = cue(10);
        let bs = [0.2, 0.5, 1.3];
        let row = pc_row(&e, 0.8, &bs, Dop853::default()).unwrap();
        for (b, v) in bs.iter().zip(&row) {
            let single = pc_row(&e, 0.8, &[*b], Dop853::default()).unwrap()[0];
            assert!((single - v).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_finite_differences() {
        let p = CueParams::new(10).unwrap();
        for (a, b) in [(0.5, 0.8), (1.2, 0.4)] {
            let c = pc(a, b, &p).unwrap();
            let f = pc_fd(a, b, &p, 1e-3, 96).unwrap();
            assert!((c - f).abs() < 1e-6 * c.abs(), "{c} vs {f}");
        }
    }

    #[test]
    fn ratio_swap_symmetry() {
        for e in [cue(10), Ensemble::Sine] {
            for r in [0.3, 0.7] {
                let a = pr_ensemble(r, &e, Dop853::default()).unwrap();
                let b = pr_ensemble(1.0 / r, &e, Dop853::default()).unwrap();
                assert!((a - b / (r * r)).abs() < 1e-8, "{a} vs {}", b / (r * r));
            }
        }
    }

    #[test]
    fn sine_gap_ratio_mean() {
        let (norm, mean) = gap_ratio_moments(&Ensemble::Sine, 40, Dop853::default()).unwrap();
        assert!((norm - 1.0).abs() < 1e-8);
        assert!((mean - 0.5997504209).abs() < 1e-8, "{mean}");
    }

    #[test]
    fn fit_recovers_exact_corrections() {
        let limit = DistributionGrid {
            kind: Kind::Pr,
            n_rank: None,
            convention: Convention::UnitMeanSpacing,
            axes: vec![vec![0.5, 1.0]],
            values: vec![1.0, 2.0],
            metadata: GridMetadata::new(Dop853::default()),
        };
        let finite: Vec<_> = [8.0, 10.0, 12.0f64]
            .iter()
            .map(|&n| {
                let mut g = limit.clone();
                g.n_rank = Some(n);
                g.values = vec![1.0 + 0.3 / (n * n) + 2.0 / n.powi(4), 2.0 - 5.0 / n.powi(4)];
                g
            })
            .collect();
        let fit = fit_corrections(&finite, &limit).unwrap();
        assert!((fit.c2[0] - 0.3).abs() < 1e-10 && (fit.c4[0] - 2.0).abs() < 1e-8);
        assert!(fit.c2[1].abs() < 1e-10 && (fit.c4[1] + 5.0).abs() < 1e-8);
        assert!(fit_corrections(&finite[..2], &limit).is_err());
        let dev = scaled_deviation(&finite[0], &limit, 4).unwrap();
        assert!((dev.values[1] + 5.0).abs() < 1e-10);
        assert!(scaled_deviation(&limit, &finite[0], 4).is_err());
    }

    #[test]
    fn rejects_out_of_range() {
        let p = CueParams::new(5).unwrap();
        assert_eq!(pc(3.0, 2.5, &p).unwrap(), 0.0);
        assert_eq!(pnn_curve(&Ensemble::Cue(p), &[2.6], Dop853::default()).unwrap(), vec![0.0]);
        let small = CueParams::new(4).unwrap();
        assert!(pnn(0.5, &small).is_err() && pr(1.0, &small).is_err());
        assert!(pc(-0.5, 1.0, &p).is_err());
        assert!(pnn_curve(&Ensemble::Cue(p), &[0.0], Dop853::default()).is_err());
        assert!(pr(0.0, &p).is_err());
    }
}
