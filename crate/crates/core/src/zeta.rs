//! Statistics of Riemann zero ordinates against the sine kernel and CUE_{N_e}.
//!
//! Ordinates are read as decimal strings and consecutive differences are
//! taken exactly before conversion, so tables at heights where the
//! ordinates themselves exceed double precision still give accurate spacings.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{Kind, GridSpec};
use crate::error::{Error, Result};
use crate::mc::Histogram;

/// Mean of r̃ for the sine-kernel process.
pub const SINE_MEAN_R_TILDE: f64 = 0.5997504209;

/// Constants from prime sums entering the zero kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticConstants {
    pub lambda: f64,
    pub q: f64,
}

// Two digits beyond the usual 1.573151071 are needed to reproduce the
// published N_e values at 1e11, 1e16 and 1e23 to 1e-10.
pub const CONSTANTS: ArithmeticConstants = ArithmeticConstants {
    lambda: 1.57315107134,
    q: 2.315846384,
};

/// Layout of a zero table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroFormat {
    /// one decimal ordinate per line
    PlainLines,
    /// a line `offset <decimal>` followed by decimal values added to it
    OffsetDeltas,
}

impl std::str::FromStr for ZeroFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain_lines" | "plain-lines" | "plain" => Ok(Self::PlainLines),
            "offset_deltas" | "offset-deltas" | "offset" => Ok(Self::OffsetDeltas),
            _ => Err(Error::InvalidParameter(format!("unknown zero format {s:?}"))),
        }
    }
}

/// Exact decimal: mantissa · 10^-scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal {
    mantissa: BigInt,
    scale: u32,
}

impl Decimal {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int}{frac}");
        let mut mantissa: BigInt = if digits.is_empty() { BigInt::from(0u8) } else { digits.parse().ok()? };
        if neg {
            mantissa = -mantissa;
        }
        Some(Self {
            mantissa,
            scale: frac.len() as u32,
        })
    }

    fn rescaled(&self, scale: u32) -> BigInt {
        &self.mantissa * BigInt::from(10u8).pow(scale - self.scale)
    }

    fn add(&self, other: &Self) -> Self {
        let scale = self.scale.max(other.scale);
        Self {
            mantissa: self.rescaled(scale) + other.rescaled(scale),
            scale,
        }
    }

    /// self - other, rounded to f64 after exact subtraction.
    pub fn minus(&self, other: &Self) -> f64 {
        let scale = self.scale.max(other.scale);
        let diff = self.rescaled(scale) - other.rescaled(scale);
        diff.to_f64().unwrap_or(f64::NAN) / 10f64.powi(scale as i32)
    }

    pub fn to_f64(&self) -> f64 {
        // enough for heights: relative precision is all that matters here
        let s = self.mantissa.to_string();
        let v: f64 = s.parse().unwrap_or(f64::NAN);
        v / 10f64.powi(self.scale as i32)
    }
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut f = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = f.read(&mut magic)?;
    drop(f);
    let f = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(f))))
    } else {
        Ok(Box::new(BufReader::new(f)))
    }
}

/// One zero: position in the dataset (after `skip`), ordinate and the exact
/// gap to the next zero, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Zero {
    pub index: usize,
    pub ordinate: f64,
    pub spacing: Option<f64>,
}

/// Streaming reader over a zero table.
pub struct ZeroStream {
    lines: std::io::Lines<Box<dyn BufRead>>,
    path: PathBuf,
    format: ZeroFormat,
    line_no: usize,
    offset: Option<Decimal>,
    pending: Option<(Decimal, usize)>,
    skip: usize,
    remaining: Option<usize>,
    index: usize,
    done: bool,
}

impl ZeroStream {
    fn parse_err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    /// Next ordinate as an exact decimal with its line number.
    fn next_decimal(&mut self) -> Option<Result<(Decimal, usize)>> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if self.format == ZeroFormat::OffsetDeltas && self.offset.is_none() {
                let value = t
                    .strip_prefix("offset")
                    .map(str::trim)
                    .and_then(Decimal::parse);
                match value {
                    Some(v) => {
                        self.offset = Some(v);
                        continue;
                    }
                    None => {
                        return Some(Err(
                            self.parse_err(self.line_no, "expected `offset <decimal>` header")
                        ))
                    }
                }
            }
            let Some(d) = Decimal::parse(t) else {
                return Some(Err(self.parse_err(self.line_no, format!("malformed ordinate {t:?}"))));
            };
            let d = match &self.offset {
                Some(o) => o.add(&d),
                None => d,
            };
            return Some(Ok((d, self.line_no)));
        }
    }
}

impl Iterator for ZeroStream {
    type Item = Result<Zero>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.pending.is_none() {
            // skip leading zeros, then prime
            while self.skip > 0 {
                match self.next_decimal()? {
                    Ok(_) => self.skip -= 1,
                    Err(e) => return Some(Err(e)),
                }
            }
            match self.next_decimal()? {
                Ok(d) => self.pending = Some(d),
                Err(e) => return Some(Err(e)),
            }
        }
        if self.remaining == Some(0) {
            self.done = true;
            return None;
        }
        let (cur, _) = self.pending.take().expect("primed");
        let last = self.remaining == Some(1);
        let next = if last { None } else { self.next_decimal() };
        let spacing = match next {
            None => None,
            Some(Err(e)) => {
                self.done = true;
                return Some(Err(e));
            }
            Some(Ok((d, line))) => {
                let s = d.minus(&cur);
                if !(s > 0.0) {
                    self.done = true;
                    return Some(Err(Error::NonMonotone {
                        path: self.path.clone(),
                        line,
                    }));
                }
                self.pending = Some((d, line));
                Some(s)
            }
        };
        if let Some(r) = self.remaining.as_mut() {
            *r -= 1;
        }
        if self.pending.is_none() {
            self.done = true;
        }
        let z = Zero {
            index: self.index,
            ordinate: cur.to_f64(),
            spacing,
        };
        self.index += 1;
        Some(Ok(z))
    }
}

/// A validated zero table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroDataset {
    pub path: PathBuf,
    pub format: ZeroFormat,
    pub skip: usize,
    pub limit: Option<usize>,
    /// zeros available after `skip` and `limit`
    pub count: usize,
    /// index of the first zero in the table's own numbering, if a
    /// `# first-index <n>` comment is present
    pub first_index: Option<u64>,
}

impl ZeroDataset {
    pub fn stream(&self) -> Result<ZeroStream> {
        Ok(ZeroStream {
            lines: open_maybe_gz(&self.path)?.lines(),
            path: self.path.clone(),
            format: self.format,
            line_no: 0,
            offset: None,
            pending: None,
            skip: self.skip,
            remaining: self.limit,
            index: 0,
            done: false,
        })
    }

    /// All spacings of the dataset; memory grows with its length.
    pub fn spacings(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for z in self.stream()? {
            if let Some(s) = z?.spacing {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// A window of `length` zeros starting at dataset position `start`.
    pub fn window(&self, start: usize, length: usize) -> Result<Window> {
        if length < 3 || start + length > self.count {
            return Err(Error::Window(format!(
                "zeros {start}..{} outside dataset of {} (need at least 3)",
                start + length,
                self.count
            )));
        }
        let mid = start + length / 2;
        let z = self
            .stream()?
            .nth(mid)
            .ok_or_else(|| Error::Window("dataset shorter than on ingestion".into()))??;
        Window::new(start, length, z.ordinate)
    }

    /// Spacings of one window (length - 1 values), read in a single pass.
    fn window_spacings(&self, w: &Window) -> Result<Vec<(f64, f64)>> {
        if w.start + w.length > self.count {
            return Err(Error::Window(format!("window ends past {}", self.count)));
        }
        let mut out = Vec::with_capacity(w.length - 1);
        for z in self.stream()?.skip(w.start).take(w.length - 1) {
            let z = z?;
            out.push((z.ordinate, z.spacing.expect("not the last zero")));
        }
        Ok(out)
    }
}

/// Validates the file in one streaming pass and returns its description.
pub fn ingest_zeros(path: impl AsRef<Path>, format: ZeroFormat, skip: usize, limit: Option<usize>) -> Result<ZeroDataset> {
    let path = path.as_ref().to_path_buf();
    let mut first_index = None;
    for line in open_maybe_gz(&path)?.lines().take(64) {
        let line = line?;
        if let Some(rest) = line.trim().strip_prefix("# first-index") {
            first_index = rest.trim().parse::<u64>().ok().map(|i| i + skip as u64);
        }
    }
    let mut ds = ZeroDataset {
        path,
        format,
        skip,
        limit,
        count: 0,
        first_index,
    };
    let mut count = 0;
    for z in ds.stream()? {
        z?;
        count += 1;
    }
    ds.count = count;
    Ok(ds)
}

/// Density of zeros at height t: log(t/2π)/(2π).
pub fn zero_density(t: f64) -> f64 {
    (t / (2.0 * PI)).ln() / (2.0 * PI)
}

/// N_e(T) = log(T/2π)/√(12Λ).
pub fn n_effective(t: f64) -> Result<f64> {
    if !(t > 2.0 * PI) {
        return Err(Error::InvalidParameter(format!("height must exceed 2π, got {t}")));
    }
    Ok((t / (2.0 * PI)).ln() / (12.0 * CONSTANTS.lambda).sqrt())
}

/// Zero-statistics kernel at unit-density separation δ through the N_e^-3 term.
pub fn krz_kernel(delta: f64, n_e: f64) -> f64 {
    let base = crate::kernel::sinc(delta) / PI;
    let c = &CONSTANTS;
    base + delta * delta.sin() / (6.0 * PI * n_e * n_e)
        + c.q * delta * delta * delta.cos()
            / (3f64.sqrt() * c.lambda.powf(1.5) * 6.0 * PI * n_e.powi(3))
}

/// A run of consecutive zeros with its height and effective rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub length: usize,
    /// ordinate at the window midpoint
    pub height: f64,
    pub n_e: f64,
}

impl Window {
    pub fn new(start: usize, length: usize, height: f64) -> Result<Self> {
        let n_e = n_effective(height)?;
        Ok(Self {
            start,
            length,
            height,
            n_e,
        })
    }
}

/// a_n = ρ(γ_n)(γ_{n+1} - γ_n) over the window.
pub fn unfold_spacings(dataset: &ZeroDataset, window: &Window) -> Result<Vec<f64>> {
    Ok(dataset
        .window_spacings(window)?
        .into_iter()
        .map(|(g, s)| zero_density(g) * s)
        .collect())
}

/// Gap-ratio statistics of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRatioStats {
    pub window: Window,
    pub count: usize,
    pub mean_r_tilde: f64,
    /// batch-means standard error
    pub stderr: f64,
    pub r_tilde: Histogram,
    /// counts of r on `r_edges`, for checking r ↔ 1/r
    pub r_edges: Vec<f64>,
    pub r_counts: Vec<u64>,
}

const BATCH: usize = 1000;

fn histogram(kind: Kind, edges: Vec<Vec<f64>>, points: &[Vec<f64>], total: u64) -> Histogram {
    let bins: usize = edges.iter().map(|e| e.len() - 1).product();
    let mut counts = vec![0u64; bins];
    'outer: for p in points {
        let mut flat = 0;
        for (e, &v) in edges.iter().zip(p) {
            let m = e.len() - 1;
            if v < e[0] || v > e[m] {
                continue 'outer;
            }
            let k = e.partition_point(|&x| x <= v).saturating_sub(1).min(m - 1);
            flat = flat * m + k;
        }
        counts[flat] += 1;
    }
    let mut h = Histogram::from_density(kind, edges, vec![0.0; bins], vec![0.0; bins])
        .expect("consistent sizes");
    let n = total as f64;
    for k in 0..bins {
        let vol: f64 = h.bin_bounds(k).iter().map(|(a, b)| b - a).product();
        let p = counts[k] as f64 / n;
        h.density[k] = p / vol;
        h.stderr[k] = (p * (1.0 - p) / n).sqrt() / vol;
    }
    h.counts = counts;
    h.total = total;
    h.units = total;
    h
}

/// r_n = (γ_{n+1} - γ_n)/(γ_n - γ_{n-1}) for the window; no unfolding.
pub fn gap_ratio_stats(dataset: &ZeroDataset, window: &Window) -> Result<GapRatioStats> {
    if window.length < 1000 {
        return Err(Error::Window(format!(
            "gap-ratio statistics need at least 1000 zeros, got {}",
            window.length
        )));
    }
    let s = dataset.window_spacings(window)?;
    let r: Vec<f64> = s.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let rt: Vec<f64> = r.iter().map(|&x| x.min(1.0 / x)).collect();
    let n = rt.len();
    let mean = rt.iter().sum::<f64>() / n as f64;
    let batches: Vec<f64> = rt
        .chunks_exact(BATCH)
        .map(|c| c.iter().sum::<f64>() / BATCH as f64)
        .collect();
    let stderr = if batches.len() >= 2 {
        let bm = batches.iter().sum::<f64>() / batches.len() as f64;
        let var = batches.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (batches.len() - 1) as f64;
        (var / batches.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    let edges: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let pts: Vec<Vec<f64>> = rt.iter().map(|&x| vec![x]).collect();
    let r_edges: Vec<f64> = (0..=100).map(|k| 4.0 * k as f64 / 100.0).collect();
    let mut r_counts = vec![0u64; 100];
    for &x in &r {
        if x < 4.0 {
            r_counts[((x / 0.04) as usize).min(99)] += 1;
        }
    }
    Ok(GapRatioStats {
        window: *window,
        count: n,
        mean_r_tilde: mean,
        stderr,
        r_tilde: histogram(Kind::Pr, vec![edges], &pts, n as u64),
        r_edges,
        r_counts,
    })
}

/// Joint histogram of unfolded (left, right) spacing pairs.
pub fn consecutive_spacing_stats(dataset: &ZeroDataset, window: &Window, upper: f64, bins: usize) -> Result<Histogram> {
    if window.length < 1000 {
        return Err(Error::Window(format!(
            "spacing statistics need at least 1000 zeros, got {}",
            window.length
        )));
    }
    let a = unfold_spacings(dataset, window)?;
    let pts: Vec<Vec<f64>> = a.windows(2).map(|w| vec![w[0], w[1]]).collect();
    let edges: Vec<f64> = (0..=bins).map(|k| upper * k as f64 / bins as f64).collect();
    Ok(histogram(Kind::Pc, vec![edges.clone(), edges], &pts, pts.len() as u64))
}

/// Power law amplitude · N_e^exponent fitted in log-log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub amplitude: f64,
    pub exponent: f64,
    pub points_used: usize,
    /// log residuals of the used points
    pub residuals: Vec<f64>,
    /// (N_e, deviation) pairs left out for being non-positive
    pub skipped: Vec<(f64, f64)>,
}

/// Least-squares line of log(deviation) against log(N_e).
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let (used, skipped): (Vec<(f64, f64)>, Vec<(f64, f64)>) = points.iter().partition(|(n, d)| *d > 0.0 && *n > 0.0);
    let mut distinct: Vec<f64> = used.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Underdetermined(format!(
            "need at least 2 positive deviations at distinct heights, got {}",
            distinct.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let slope = sxy / sxx;
    let icept = ym - slope * xm;
    Ok(FitResult {
        amplitude: icept.exp(),
        exponent: slope,
        points_used: xs.len(),
        residuals: xs.iter().zip(&ys).map(|(x, y)| y - icept - slope * x).collect(),
        skipped,
    })
}

/// Summary of one window for the deviation scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window: Window,
    pub mean_r_tilde: f64,
    pub stderr: f64,
    /// mean r̃ minus the sine-kernel value
    pub deviation: f64,
    /// finite-N prediction at N = N_e, when N_e ≥ 5
    pub cue_mean_r_tilde: Option<f64>,
}

/// Mean-r̃ deviations for each window, with the CUE_{N_e} prediction.
pub fn analyze_windows(dataset: &ZeroDataset, windows: &[Window], with_cue: bool) -> Result<Vec<WindowReport>> {
    use rayon::prelude::*;
    windows
        .par_iter()
        .map(|w| {
            let st = gap_ratio_stats(dataset, w)?;
            let cue = if with_cue && w.n_e >= crate::distributions::MIN_RANK {
                let ens = crate::distributions::Ensemble::Cue(crate::kernel::CueParams::real(w.n_e)?);
                Some(crate::distributions::gap_ratio_moments(&ens, 40, crate::ode::Dop853::default())?.1)
            } else {
                None
            };
            Ok(WindowReport {
                window: *w,
                mean_r_tilde: st.mean_r_tilde,
                stderr: st.stderr,
                deviation: st.mean_r_tilde - SINE_MEAN_R_TILDE,
                cue_mean_r_tilde: cue,
            })
        })
        .collect()
}

/// Provenance record for an analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub source: PathBuf,
    pub sha256: String,
    pub format: ZeroFormat,
    pub skip: usize,
    pub count: usize,
    pub windows: Vec<Window>,
    pub constants: ArithmeticConstants,
    pub sine_mean_r_tilde: f64,
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl Manifest {
    pub fn build(dataset: &ZeroDataset, windows: &[Window]) -> Result<Self> {
        Ok(Self {
            source: dataset.path.clone(),
            sha256: file_sha256(&dataset.path)?,
            format: dataset.format,
            skip: dataset.skip,
            count: dataset.count,
            windows: windows.to_vec(),
            constants: CONSTANTS,
            sine_mean_r_tilde: SINE_MEAN_R_TILDE,
        })
    }
}

/// Spacing axes suitable for comparing zero statistics with P_c.
pub fn default_spacing_spec() -> GridSpec {
    GridSpec::with_sizes(120, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_zeros_two_spacings() {
        let f = write("14.13\n21.02\n25.01\n");
        let ds = ingest_zeros(f.path(), ZeroFormat::PlainLines, 0, None).unwrap();
        assert_eq!(ds.count, 3);
        let s = ds.spacings().unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0] - 6.89).abs() < 1e-12 && (s[1] - 3.99).abs() < 1e-12);
        let one = ingest_zeros(f.path(), ZeroFormat::PlainLines, 1, Some(1)).unwrap();
        assert_eq!(one.count, 1);
        assert!(one.spacings().unwrap().is_empty());
    }

    #[test]
    fn difference_before_rounding() {
        let f = write("13066434408793621120027.39\n13066434408793621120027.52\n");
        let s = ingest_zeros(f.path(), ZeroFormat::PlainLines, 0, None).unwrap().spacings().unwrap();
        assert!((s[0] - 0.13).abs() < 1e-15, "{}", s[0]);
        let g = write("# first-index 1000\noffset 13066434408793621120000\n27.39\n27.52\n28.0\n");
        let ds = ingest_zeros(g.path(), ZeroFormat::OffsetDeltas, 0, None).unwrap();
        assert_eq!(ds.first_index, Some(1000));
        let s = ds.spacings().unwrap();
        assert!((s[0] - 0.13).abs() < 1e-15 && (s[1] - 0.48).abs() < 1e-15);
    }

    #[test]
    fn gzip_is_transparent() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast());
        enc.write_all(b"1.5\n2.5\n4.0\n").unwrap();
        f.write_all(&enc.finish().unwrap()).unwrap();
        let s = ingest_zeros(f.path(), ZeroFormat::PlainLines, 0, None).unwrap().spacings().unwrap();
        assert_eq!(s, vec![1.0, 1.5]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let f = write("1.0\n# note\n2.0\nabc\n");
        match ingest_zeros(f.path(), ZeroFormat::PlainLines, 0, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let f = write("1.0\n3.0\n2.0\n");
        match ingest_zeros(f.path(), ZeroFormat::PlainLines, 0, None) {
            Err(Error::NonMonotone { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = write("1.0\n1.0\n");
        assert!(ingest_zeros(f.path(), ZeroFormat::PlainLines, 0, None).is_err());
        let f = write("27.39\n");
        assert!(ingest_zeros(f.path(), ZeroFormat::OffsetDeltas, 0, None).is_err());
    }

    #[test]
    fn effective_rank() {
        assert!((zero_density(2.0 * PI * std::f64::consts::E) - 1.0 / (2.0 * PI)).abs() < 1e-16);
        let t = 2.0 * PI * (12.0 * CONSTANTS.lambda).sqrt().exp();
        assert!((n_effective(t).unwrap() - 1.0).abs() < 1e-14);
        let n = n_effective(13066434408793621120027.3961).unwrap();
        assert!((n - 11.2975909009).abs() < 1e-9, "{n}");
        let n = n_effective(30581878184.0869433888221).unwrap();
        assert!((n - 5.13383486853).abs() < 1e-9, "{n}");
        let n = n_effective(2513274122880031.43550662).unwrap();
        assert!((n - 7.73844996441).abs() < 1e-9, "{n}");
        assert!(n_effective(2.0 * PI).is_err());
    }

    #[test]
    fn krz_terms() {
        let (d, n) = (1.0f64, 7.0f64);
        let c = CONSTANTS;
        let extra = d * d.sin() / (6.0 * PI * n * n)
            + c.q * d * d * d.cos() / (3f64.sqrt() * c.lambda.powf(1.5) * 6.0 * PI * n.powi(3));
        assert!((krz_kernel(d, n) - d.sin() / (PI * d) - extra).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [3.0, 5.0, 8.0, 11.0].iter().map(|&n: &f64| (n, 0.2 * n.powi(-3))).collect();
        let fit = scaling_fit(&pts).unwrap();
        assert!((fit.exponent + 3.0).abs() < 1e-6);
        assert!((fit.amplitude - 0.2).abs() < 1e-9);
        let with_bad = [pts[0], pts[1], (9.0, -0.01)];
        let fit = scaling_fit(&with_bad).unwrap();
        assert_eq!(fit.skipped.len(), 1);
        assert!(scaling_fit(&pts[..1]).is_err());
    }

    #[test]
    fn windows_and_unfolding() {
        // evenly spaced ordinates at density ρ(T) unfold to spacing 1
        let t0 = 1.0e4f64;
        let gap = 1.0 / zero_density(t0);
        let body: String = (0..2000).map(|k| format!("{:.12}\n", t0 + gap * k as f64)).collect();
        let f = write(&body);
        let ds = ingest_zeros(f.path(), ZeroFormat::PlainLines, 0, None).unwrap();
        let w = ds.window(100, 1500).unwrap();
        let a = unfold_spacings(&ds, &w).unwrap();
        assert_eq!(a.len(), 1499);
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((mean - 1.0).abs() < 0.01);
        let st = gap_ratio_stats(&ds, &w).unwrap();
        assert!((st.mean_r_tilde - 1.0).abs() < 1e-6);
        assert!(ds.window(1000, 1500).is_err());
        let small = ds.window(0, 10).unwrap();
        assert!(gap_ratio_stats(&ds, &small).is_err());
        let m = Manifest::build(&ds, &[w]).unwrap();
        assert_eq!(m.sha256.len(), 64);
    }
}
