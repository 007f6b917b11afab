//! Nearest-neighbour spacing, consecutive-spacing and gap-ratio densities of
//! CUE_N in unit mean spacing, with their normalizations.
//!
//!     cargo run --release --example spacing_distributions -- 8

use cue_janossy::distributions::{gap_ratio_moments, pc, pc_moments, pnn_curve, pnn_normalization, pr, Ensemble};
use cue_janossy::kernel::CueParams;
use cue_janossy::ode::Dop853;

fn main() -> cue_janossy::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(8, |s| s.parse().expect("N"));
    let params = CueParams::new(n)?;
    let ens = Ensemble::Cue(params);
    let s = Dop853::default();

    let ts: Vec<f64> = (1..=12).map(|k| 0.2 * k as f64).collect();
    println!("P_nn(t), N = {n}");
    for (t, v) in ts.iter().zip(pnn_curve(&ens, &ts, s)?) {
        println!("  t = {t:.1}  {v:.10}");
    }

    println!("P_c(a, b)");
    for (a, b) in [(0.5, 0.5), (1.0, 1.0), (0.5, 1.5), (1.5, 0.5)] {
        println!("  ({a}, {b})  {:.10}", pc(a, b, &params)?);
    }

    println!("P_r(r) and r⁻² P_r(1/r)");
    for r in [0.25, 0.5, 0.8] {
        println!("  r = {r}  {:.12}  {:.12}", pr(r, &params)?, pr(1.0 / r, &params)? / (r * r));
    }

    let (norm_c, mean_c) = pc_moments(&ens, s)?;
    let (norm_r, mean_r) = gap_ratio_moments(&ens, 40, s)?;
    println!("∫P_nn = {:.12}", pnn_normalization(&ens, s)?);
    println!("∫∫P_c = {norm_c:.12}, mean spacing {mean_c:.12}");
    println!("∫P_r = {norm_r:.12}, E[r̃] = {mean_r:.10}");
    Ok(())
}
