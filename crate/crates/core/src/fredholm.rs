//! Nyström discretization of Fredholm determinants on a single interval.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{eval_kernel_tilde, phi_tilde, CueParams};
use crate::quadrature::{gauss_legendre, Interval, Quadrature};

/// Default Gauss-Legendre order for the Nyström route.
pub const DEFAULT_ORDER: usize = 256;

fn assemble<K>(kernel: &K, quad: &Quadrature) -> Result<DMatrix<f64>>
where
    K: Fn(f64, f64) -> f64,
{
    let m = quad.len();
    let sw: Vec<f64> = quad.weights.iter().map(|w| w.sqrt()).collect();
    let mut a = DMatrix::<f64>::identity(m, m);
    for i in 0..m {
        for j in 0..=i {
            let k = kernel(quad.nodes[i], quad.nodes[j]);
            if !k.is_finite() {
                return Err(Error::NonFinite(format!(
                    "kernel at ({}, {})",
                    quad.nodes[i], quad.nodes[j]
                )));
            }
            let v = k * sw[i] * sw[j];
            a[(i, j)] -= v;
            if i != j {
                a[(j, i)] -= v;
            }
        }
    }
    Ok(a)
}

/// det[δ_ij - K(x_i, x_j) √(w_i w_j)] for an m-point Gauss-Legendre rule.
///
/// The kernel is assumed symmetric; only the lower triangle is evaluated.
pub fn nystrom_det<K>(kernel: K, interval: Interval, m: usize) -> Result<f64>
where
    K: Fn(f64, f64) -> f64,
{
    if interval.length() == 0.0 {
        return Ok(1.0);
    }
    let quad = gauss_legendre(m, interval)?;
    let a = assemble(&kernel, &quad)?;
    Ok(a.lu().determinant())
}

/// Probability that `interval` holds no eigenphase besides the one at 0.
pub fn janossy_nystrom(interval: Interval, params: &CueParams, m: usize) -> Result<f64> {
    interval.check_janossy()?;
    let p = *params;
    nystrom_det(move |x, y| eval_kernel_tilde(x, y, &p), interval, m)
}

/// Resolvent data at the endpoints computed by quadrature, the same fields the
/// Tracy-Widom flow carries. `v_tilde` is kept separately from `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NystromState {
    pub q1: Complex64,
    pub p1: Complex64,
    pub q2: Complex64,
    pub p2: Complex64,
    pub u: Complex64,
    pub v: Complex64,
    pub v_tilde: Complex64,
    pub w: Complex64,
    pub log_j: f64,
}

/// Solve (I - K̃)Q = φ̃ and (I - K̃)P = ψ̃ on the quadrature nodes and
/// extend to the endpoints by the Nyström interpolation formula.
pub fn nystrom_state(interval: Interval, params: &CueParams, m: usize) -> Result<NystromState> {
    interval.check_janossy()?;
    let quad = gauss_legendre(m, interval)?;
    let n = quad.len();
    let kern = |x: f64, y: f64| eval_kernel_tilde(x, y, params);

    // I - K W, unsymmetrized so the solution is Q at the nodes directly.
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= kern(quad.nodes[i], quad.nodes[j]) * quad.weights[j];
        }
    }
    let f: Vec<_> = quad.nodes.iter().map(|&x| phi_tilde(x, params)).collect();
    let mut rhs = DMatrix::<f64>::zeros(n, 4);
    for (i, t) in f.iter().enumerate() {
        rhs[(i, 0)] = t.phi.re;
        rhs[(i, 1)] = t.phi.im;
        rhs[(i, 2)] = t.psi.re;
        rhs[(i, 3)] = t.psi.im;
    }
    let lu = a.clone().lu();
    let det = lu.determinant();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NonFinite("singular Nyström matrix".into()))?;
    let q: Vec<Complex64> = (0..n).map(|i| Complex64::new(sol[(i, 0)], sol[(i, 1)])).collect();
    let p: Vec<Complex64> = (0..n).map(|i| Complex64::new(sol[(i, 2)], sol[(i, 3)])).collect();

    let at = |a_j: f64, g: &[Complex64], own: Complex64| -> Complex64 {
        let mut s = own;
        for i in 0..n {
            s += kern(a_j, quad.nodes[i]) * quad.weights[i] * g[i];
        }
        s
    };
    let (a1, a2) = (interval.a1, interval.a2);
    let t1 = phi_tilde(a1, params);
    let t2 = phi_tilde(a2, params);

    let dot = |x: &dyn Fn(usize) -> Complex64, g: &[Complex64]| -> Complex64 {
        (0..n).map(|i| quad.weights[i] * x(i) * g[i]).sum()
    };
    let phis = |i: usize| f[i].phi;
    let psis = |i: usize| f[i].psi;

    Ok(NystromState {
        q1: at(a1, &q, t1.phi),
        p1: at(a1, &p, t1.psi),
        q2: at(a2, &q, t2.phi),
        p2: at(a2, &p, t2.psi),
        u: dot(&phis, &q),
        v: dot(&psis, &q),
        v_tilde: dot(&phis, &p),
        w: dot(&psis, &p),
        log_j: det.ln(),
    })
}

/// Vector of Nyström determinants for a family of intervals, evaluated in parallel.
pub fn janossy_nystrom_many(
    intervals: &[Interval],
    params: &CueParams,
    m: usize,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    intervals
        .par_iter()
        .map(|iv| janossy_nystrom(*iv, params, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(n: usize) -> CueParams {
        CueParams::new(n).unwrap()
    }

    #[test]
    fn trivial_determinants() {
        let iv = Interval::new(-1.0, 2.0).unwrap();
        assert_eq!(nystrom_det(|_, _| 0.0, iv, 16).unwrap(), 1.0);
        let iv = Interval::new(0.5, 0.5).unwrap();
        assert_eq!(nystrom_det(|_, _| 1.0, iv, 16).unwrap(), 1.0);
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(nystrom_det(|_, _| f64::NAN, iv, 8).is_err());
    }

    #[test]
    fn rank_one_kernel() {
        // det(I - c·1⊗1) on [0, L] = 1 - cL
        let iv = Interval::new(0.0, 0.7).unwrap();
        let d = nystrom_det(|_, _| 0.4, iv, 12).unwrap();
        assert!((d - (1.0 - 0.28)).abs() < 1e-14);
    }

    #[test]
    fn small_interval_matches_leading_series() {
        let iv = Interval::janossy(-0.01, 0.01).unwrap();
        let j = janossy_nystrom(iv, &p(10), 64).unwrap();
        let lead = 990.0 * (-2e-6) / (72.0 * PI);
        // next correction is down by roughly (N a)^2
        assert!((j.ln() - lead).abs() < 1e-3 * lead.abs(), "{}", j.ln());
    }

    #[test]
    fn monotone_and_bounded() {
        let params = p(10);
        let d = 2.0 * PI / 10.0;
        let mut prev = 1.0;
        for k in 1..=12 {
            let t = d * k as f64 / 4.0;
            let j = janossy_nystrom(Interval::janossy(-t, t).unwrap(), &params, 128).unwrap();
            assert!(j > 0.0 && j < prev);
            prev = j;
        }
    }

    #[test]
    fn converged_in_order() {
        for n in [8usize, 16, 24] {
            let params = p(n);
            let d = 2.0 * PI / n as f64;
            let iv = Interval::janossy(-1.7 * d, 2.9 * d).unwrap();
            let a = janossy_nystrom(iv, &params, 128).unwrap();
            let b = janossy_nystrom(iv, &params, 256).unwrap();
            assert!(((a - b) / b).abs() < 1e-10, "N={n}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_non_janossy_interval() {
        assert!(janossy_nystrom(Interval::new(0.1, 0.3).unwrap(), &p(5), 32).is_err());
    }

    #[test]
    fn resolvent_state_symmetries() {
        let params = p(10);
        let s = nystrom_state(Interval::janossy(-0.4, 0.4).unwrap(), &params, 96).unwrap();
        assert!((s.q1 - s.q2.conj()).norm() < 1e-12);
        assert!((s.p1 - s.p2.conj()).norm() < 1e-12);
        assert!(s.u.im.abs() < 1e-12 && s.v.im.abs() < 1e-12 && s.w.im.abs() < 1e-12);
        let s = nystrom_state(Interval::janossy(-0.2, 0.5).unwrap(), &params, 96).unwrap();
        assert!((s.v - s.v_tilde).norm() < 1e-12);
    }
}
