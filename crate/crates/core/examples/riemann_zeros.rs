//! Gap-ratio statistics of Riemann zeros at several heights against the
//! sine-kernel value, with the effective rank N_e of each window.
//!
//! With a path argument the zeros are read from that plain-lines table;
//! otherwise a few thousand zeros are generated with the Riemann-Siegel
//! formula.
//!
//!     cargo run --release --example riemann_zeros [-- zeros.txt]

#[path = "../tests/support/riemann_siegel.rs"]
mod riemann_siegel;

use std::path::PathBuf;

use cue_janossy::zeta::{analyze_windows, ingest_zeros, n_effective, scaling_fit, ZeroFormat};

fn main() -> cue_janossy::Result<()> {
    let dir = std::env::temp_dir().join("cue-janossy-example");
    let (path, windows): (PathBuf, Vec<(usize, usize)>) = match std::env::args().nth(1) {
        Some(p) => {
            let ds = ingest_zeros(&p, ZeroFormat::PlainLines, 0, None)?;
            let len = ds.count / 3;
            (p.into(), (0..3).map(|k| (k * len, len)).collect())
        }
        None => {
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("zeros.txt");
            let len = 20_000;
            let blocks: Vec<(u64, Vec<f64>)> =
                [1_000u64, 100_000, 1_000_000].iter().map(|&i| (i, riemann_siegel::zeros(i, len))).collect();
            riemann_siegel::write_table(&path, &blocks)?;
            (path, (0..3).map(|k| (k * len, len)).collect())
        }
    };

    let ds = ingest_zeros(&path, ZeroFormat::PlainLines, 0, None)?;
    println!("{} zeros in {}", ds.count, path.display());
    let windows = windows
        .iter()
        .map(|&(s, l)| ds.window(s, l))
        .collect::<cue_janossy::Result<Vec<_>>>()?;
    let reports = analyze_windows(&ds, &windows, true)?;
    for r in &reports {
        print!(
            "T = {:>12.2}  N_e = {:.3}  E[r̃] = {:.5} ± {:.5}  deviation {:+.5}",
            r.window.height, r.window.n_e, r.mean_r_tilde, r.stderr, r.deviation
        );
        match r.cue_mean_r_tilde {
            Some(c) => println!("  CUE_N_e: {c:.5}"),
            None => println!(),
        }
    }
    let fit = scaling_fit(&reports.iter().map(|r| (r.window.n_e, r.deviation)).collect::<Vec<_>>())?;
    println!("deviation ≈ {:.4} N_e^{:.2}", fit.amplitude, fit.exponent);
    // height of the 10²³-rd zero
    println!("N_e at T = 1.3066e22: {:.10}", n_effective(13066434408793621120027.3961)?);
    Ok(())
}
