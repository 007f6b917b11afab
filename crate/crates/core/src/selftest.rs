//! Invariant suite run by the `selftest` subcommand.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{pc, pc_fd};
use crate::fredholm::nystrom_state;
use crate::kernel::CueParams;
use crate::ode::Dop853;
use crate::quadrature::Interval;
use crate::tw::{integrate_l_path, integrate_ray, nonuniversal_residual, sign_flip_residual, RayPath};
use crate::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfTestConfig {
    pub n: usize,
    /// Random points per check.
    pub points: usize,
    pub seed: u64,
    /// Finite-difference step (raw angle) and Nyström order for the mixed-partial check.
    pub fd_step: f64,
    pub fd_order: usize,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        Self { n: 10, points: 6, seed: 1, fd_step: 1e-3, fd_order: 96 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Worst value over the sampled points.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub config: SelfTestConfig,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, values: Vec<f64>, tolerance: f64) -> Check {
    let worst = values.into_iter().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) });
    Check { name: name.into(), worst, tolerance, passed: worst <= tolerance }
}

/// Sample `k` pairs (a, b) in unit mean spacings, uniformly in `[lo, hi]²`.
fn pairs(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..k).map(|_| (rng.random_range(lo..hi), rng.random_range(lo..hi))).collect()
}

/// Run every invariant check. Numerical failures inside a check are returned
/// as errors; a check that runs but misses its tolerance is reported as failed.
pub fn run(config: &SelfTestConfig) -> Result<SelfTestReport> {
    let start = Instant::now();
    let params = CueParams::new(config.n)?;
    let d = params.mean_spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.points;

    let ray_points = pairs(&mut rng, k, 0.1, 1.5);
    let states: Vec<_> = ray_points
        .par_iter()
        .map(|&(a, b)| integrate_ray(&RayPath::new(-a * d, b * d)?, &params).map(|s| (a, b, s)))
        .collect::<Result<_>>()?;

    let flip = states
        .iter()
        .map(|(a, b, s)| sign_flip_residual(s, -a * d, b * d, &params))
        .collect::<Result<Vec<_>>>()?;
    let nonuni = states
        .iter()
        .map(|(a, b, s)| nonuniversal_residual(s, -a * d, b * d, &params))
        .collect::<Result<Vec<_>>>()?;

    let tilde: Vec<f64> = states
        .par_iter()
        .map(|(a, b, s)| {
            let ny = nystrom_state(Interval::janossy(-a * d, b * d)?, &params, 128)?;
            let scale = ny.v.norm().max(1e-300);
            Ok(((ny.v - ny.v_tilde).norm() / scale).max((s.v - ny.v_tilde).norm() / scale))
        })
        .collect::<Result<_>>()?;

    let paths: Vec<f64> = pairs(&mut rng, k, 0.2, 2.0)
        .par_iter()
        .map(|&(a, b)| {
            let (a1, a2) = (-a * d, b * d);
            let ray = integrate_ray(&RayPath::new(a1, a2)?, &params)?;
            let l = integrate_l_path(a1, a2, &params, Dop853::default())?;
            // log J difference is the relative error in J
            Ok((ray.log_j - l.log_j)
                .abs()
                .max((ray.q1 - l.q1).norm() / ray.q1.norm())
                .max((ray.p2 - l.p2).norm() / ray.p2.norm()))
        })
        .collect::<Result<_>>()?;

    let mixed: Vec<f64> = pairs(&mut rng, k, 0.2, 2.0)
        .par_iter()
        .map(|&(a, b)| Ok((pc(a, b, &params)? - pc_fd(a, b, &params, config.fd_step, config.fd_order)?).abs()))
        .collect::<Result<_>>()?;

    let checks = vec![
        check("sign_flip_rhs", flip, 1e-10),
        check("nonuniversal_terms", nonuni, 1e-10),
        check("v_tilde_equals_v", tilde, 1e-9),
        check("path_independence", paths, 1e-8),
        check("pc_closed_form_vs_fd", mixed, 1e-6),
    ];
    Ok(SelfTestReport { config: config.clone(), checks, seconds: start.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let report = run(&SelfTestConfig { n: 8, points: 2, ..Default::default() }).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
    }
}
