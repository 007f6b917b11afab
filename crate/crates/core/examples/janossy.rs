//! Probability that an interval of the unit circle holds no eigenphase of a
//! CUE_N matrix, from the endpoint flow and from a Nyström discretization of
//! the Fredholm determinant.
//!
//!     cargo run --release --example janossy -- 12

use cue_janossy::fredholm::janossy_nystrom;
use cue_janossy::kernel::CueParams;
use cue_janossy::quadrature::Interval;
use cue_janossy::tw::{integrate_ray, RayPath};

fn main() -> cue_janossy::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(10, |s| s.parse().expect("N"));
    let params = CueParams::new(n)?;
    let d = params.mean_spacing();

    println!("N = {n}, mean spacing 2π/N = {d:.6}");
    println!("{:>6} {:>6} {:>20} {:>20} {:>10}", "a", "b", "flow", "nystrom", "rel dev");
    for (a, b) in [(0.25, 0.25), (0.5, 0.3), (1.0, 1.0), (0.2, 1.6), (1.5, 1.5)] {
        let state = integrate_ray(&RayPath::new(-a * d, b * d)?, &params)?;
        let ny = janossy_nystrom(Interval::janossy(-a * d, b * d)?, &params, 256)?;
        let tw = state.janossy();
        println!("{a:>6} {b:>6} {tw:>20.15e} {ny:>20.15e} {:>10.2e}", (tw - ny).abs() / ny);
    }
    Ok(())
}
