//! Finite-N corrections: N²-scaled deviations of P_nn from the limit collapse
//! onto one curve, while P_r has no N⁻² term and its deviation scales as N⁻⁴.
//!
//!     cargo run --release --example finite_n_corrections

use cue_janossy::distributions::{deviation_scaled, fit_correction_orders, log_axis, uniform_axis, GridSpec, Kind};
use cue_janossy::ode::Dop853;

fn main() -> cue_janossy::Result<()> {
    let s = Dop853::default();
    let spec = GridSpec { t: uniform_axis(3.0, 6), a: vec![1.0], b: vec![1.0], r: log_axis(0.1, 1.0, 5) };

    println!("N² (P_nn,N - P_nn,∞)");
    for n in [8, 12, 16, 24] {
        let g = deviation_scaled(Kind::Pnn, n, 2, &spec, s)?;
        let row: Vec<String> = g.values.iter().map(|v| format!("{v:+.5}")).collect();
        println!("  N = {n:>2}: {}", row.join(" "));
    }

    println!("N⁴ (P_r,N - P_r,∞)");
    for n in [8, 12, 16] {
        let g = deviation_scaled(Kind::Pr, n, 4, &spec, s)?;
        let row: Vec<String> = g.values.iter().map(|v| format!("{v:+.5}")).collect();
        println!("  N = {n:>2}: {}", row.join(" "));
    }

    let fit = fit_correction_orders(Kind::Pr, &[8, 10, 12, 14, 16], &spec, s)?;
    println!("P_r ≈ P_∞ + c2/N² + c4/N⁴");
    for (k, r) in fit.axes[0].iter().enumerate() {
        println!("  r = {r:.3}  c2 = {:+.2e}  c4 = {:+.5}", fit.c2[k], fit.c4[k]);
    }
    Ok(())
}
