//! Zeros of the Riemann zeta function on the critical line, located as sign
//! changes of the Hardy function Z(t) evaluated by the Riemann-Siegel formula
//! with the first correction term. Absolute accuracy is about 1e-5 for
//! t ≥ 1e3, enough for spacing statistics. Zeros are enumerated block by block
//! between good Gram points, which also fixes their indices.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

/// Riemann-Siegel theta, asymptotic form.
pub fn theta(t: f64) -> f64 {
    t / 2.0 * (t / (2.0 * PI)).ln() - t / 2.0 - PI / 8.0 + 1.0 / (48.0 * t) + 7.0 / (5760.0 * t.powi(3))
}

fn theta_prime(t: f64) -> f64 {
    0.5 * (t / (2.0 * PI)).ln()
}

/// Precomputed log n and n^{-1/2}.
pub struct HardyZ {
    ln: Vec<f64>,
    inv_sqrt: Vec<f64>,
}

impl HardyZ {
    pub fn new(t_max: f64) -> Self {
        let m = (t_max / (2.0 * PI)).sqrt() as usize + 2;
        Self {
            ln: (1..=m).map(|n| (n as f64).ln()).collect(),
            inv_sqrt: (1..=m).map(|n| 1.0 / (n as f64).sqrt()).collect(),
        }
    }

    fn c0(p: f64) -> f64 {
        let f = |p: f64| (2.0 * PI * (p * p - p - 1.0 / 16.0)).cos() / (2.0 * PI * p).cos();
        // removable singularities at p = 1/4, 3/4
        if (p - 0.25).abs() < 1e-6 || (p - 0.75).abs() < 1e-6 {
            0.5 * (f(p - 2e-6) + f(p + 2e-6))
        } else {
            f(p)
        }
    }

    pub fn z(&self, t: f64) -> f64 {
        let tau = (t / (2.0 * PI)).sqrt();
        let m = tau.floor() as usize;
        assert!(m < self.ln.len(), "t = {t} beyond the precomputed range");
        let th = theta(t);
        let mut s = 0.0;
        for k in 0..m {
            s += self.inv_sqrt[k] * (th - t * self.ln[k]).cos();
        }
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        2.0 * s + sign * tau.powf(-0.5) * Self::c0(tau - m as f64)
    }
}

/// Gram point g_n, θ(g_n) = nπ, by Newton from `guess`.
pub fn gram_point(n: i64, guess: f64) -> f64 {
    let target = n as f64 * PI;
    let mut t = guess;
    for _ in 0..50 {
        let dt = (theta(t) - target) / theta_prime(t);
        t -= dt;
        if dt.abs() < 1e-12 * t {
            break;
        }
    }
    t
}

/// Initial guess for g_n from θ(t) ≈ t/2 log(t/2πe).
fn gram_guess(n: i64) -> f64 {
    let target = (n as f64 + 0.125) * PI;
    let mut t = 2.0 * PI * std::f64::consts::E;
    for _ in 0..100 {
        t = 2.0 * target / ((t / (2.0 * PI)).ln() - 1.0).max(1.0);
    }
    t
}

/// Root of `f` in [a, b] with a sign change, by Brent's method.
fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> f64 {
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < tol {
            return b;
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let out = !((s > lo.min(b)) && (s < lo.max(b)));
        if out
            || (bisected && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!bisected && (s - b).abs() >= (c - d).abs() / 2.0)
            || (bisected && (b - c).abs() < tol)
            || (!bisected && (c - d).abs() < tol)
        {
            s = (a + b) / 2.0;
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    b
}

fn good(n: i64, z: f64) -> bool {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * z > 0.0
}

/// Zeros inside the Gram block (g_j, g_k] with endpoint values `zj`, `zk`;
/// there are k - j of them when Rosser's rule holds.
fn block_zeros(hz: &HardyZ, grams: &[f64], zj: f64, zk: f64) -> Vec<f64> {
    let expected = grams.len() - 1;
    let mut xs: Vec<f64> = grams.to_vec();
    let mut zs: Vec<f64> = Vec::with_capacity(xs.len());
    zs.push(zj);
    zs.extend(xs[1..xs.len() - 1].iter().map(|&x| hz.z(x)));
    zs.push(zk);
    for _ in 0..10 {
        let changes = zs.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        if changes >= expected {
            break;
        }
        // a missed pair can hide next to a detected zero, so refine everywhere
        let mut nx = Vec::with_capacity(2 * xs.len());
        let mut nz = Vec::with_capacity(2 * xs.len());
        for i in 0..xs.len() - 1 {
            nx.push(xs[i]);
            nz.push(zs[i]);
            let m = 0.5 * (xs[i] + xs[i + 1]);
            nx.push(m);
            nz.push(hz.z(m));
        }
        nx.push(*xs.last().unwrap());
        nz.push(*zs.last().unwrap());
        xs = nx;
        zs = nz;
    }
    let mut out = Vec::with_capacity(expected);
    for i in 0..xs.len() - 1 {
        if zs[i] * zs[i + 1] < 0.0 {
            out.push(brent(|t| hz.z(t), xs[i], xs[i + 1], zs[i], zs[i + 1], 1e-11 * xs[i]));
        }
    }
    assert_eq!(out.len(), expected, "Gram block at t = {} not resolved", grams[0]);
    out
}

/// The zeros γ_first, ..., γ_{first+count-1} (1-based index, first ≥ 100).
pub fn zeros(first: u64, count: usize) -> Vec<f64> {
    assert!(first >= 100 && count > 0);
    // zero number n+1 belongs to the Gram interval (g_{n-1}, g_n] under Gram's law;
    // start a few Gram points early and trim by index afterwards
    let j0 = first as i64 - 4;
    let last = first as i64 + count as i64 + 4;
    let g_end = gram_point(last + 8, gram_guess(last + 8));
    let hz = HardyZ::new(g_end * 1.01);

    // Gram points and Z at them, in parallel chunks
    let ns: Vec<i64> = (j0.max(-1)..=last + 8).collect();
    let grams: Vec<f64> = ns.par_iter().map(|&n| gram_point(n, gram_guess(n))).collect();
    let zg: Vec<f64> = grams.par_iter().map(|&g| hz.z(g)).collect();

    // indices of good Gram points
    let good_at: Vec<usize> = (0..ns.len()).filter(|&i| good(ns[i], zg[i])).collect();
    let blocks: Vec<(usize, usize)> = good_at.windows(2).map(|w| (w[0], w[1])).collect();
    let found: Vec<(i64, Vec<f64>)> = blocks
        .par_iter()
        .map(|&(a, b)| (ns[a], block_zeros(&hz, &grams[a..=b], zg[a], zg[b])))
        .collect();

    let mut out = Vec::with_capacity(count);
    for (j, zs) in found {
        // zeros in (g_j, g_k] carry indices j+2, ..., k+1
        for (k, z) in zs.into_iter().enumerate() {
            let index = j + 2 + k as i64;
            if index >= first as i64 && out.len() < count {
                out.push(z);
            }
        }
    }
    assert_eq!(out.len(), count, "not enough zeros generated");
    out
}

/// Writes blocks of zeros as a plain-lines table, one ordinate per line.
pub fn write_table(path: &Path, blocks: &[(u64, Vec<f64>)]) -> std::io::Result<()> {
    let mut s = String::new();
    writeln!(s, "# first-index {}", blocks[0].0).unwrap();
    for (_, zs) in blocks {
        for z in zs {
            writeln!(s, "{z:.10}").unwrap();
        }
    }
    std::fs::write(path, s)
}
