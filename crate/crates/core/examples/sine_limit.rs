//! The N → ∞ limit: sine-kernel densities and the mean gap ratio, next to
//! CUE_N at growing N.
//!
//!     cargo run --release --example sine_limit

use cue_janossy::distributions::{gap_ratio_moments, pr_ensemble, Ensemble, GridSpec};
use cue_janossy::ode::Dop853;
use cue_janossy::sine::limit_distributions;

fn main() -> cue_janossy::Result<()> {
    let s = Dop853::default();
    let (_, limit) = gap_ratio_moments(&Ensemble::Sine, 40, s)?;
    println!("E[r̃] sine kernel: {limit:.10}");
    for n in [6, 8, 12, 16, 24] {
        let (_, mean) = gap_ratio_moments(&Ensemble::cue(n)?, 40, s)?;
        println!("  N = {n:>2}: {mean:.10}  N⁴·Δ = {:+.5}", (n as f64).powi(4) * (mean - limit));
    }

    let r = 0.5;
    println!("P_r({r}): sine {:.12}", pr_ensemble(r, &Ensemble::Sine, s)?);

    let grids = limit_distributions(&GridSpec::with_sizes(8, 6))?;
    println!("P_nn limit on a coarse grid");
    for (t, v) in grids.pnn.axes[0].iter().zip(&grids.pnn.values) {
        println!("  t = {t:.2}  {v:.10}");
    }
    Ok(())
}
