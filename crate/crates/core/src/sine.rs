//! Sine-kernel limit of the endpoint system.
//!
//! Variables are in units where the mean spacing is π (τ = N a / 2), so the
//! conditioned kernel is (sinc(x-y) - sinc x sinc y)/π. In these units
//! u_sine = lim N·u_CUE while q and log J carry over unchanged.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{self, EndpointFlow, Resolvents};
use crate::kernel::{sine_kernel_tilde, sine_phi_tilde, SQRT_2PI};
use crate::ode::{Dop853, Solver};
use crate::quadrature::{gauss_legendre, Interval};
use crate::tw::{Seed, DEFAULT_EPSILON, SERIES_DOMAIN};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Half-width at which the symmetric flow is started from its series.
pub const SYMMETRIC_SEED: f64 = 1e-6;

/// Largest |τ_j| accepted by the Neumann seed.
const NEUMANN_DOMAIN: f64 = 0.05;

/// State of the two-endpoint limit system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SineState {
    pub q1: Complex64,
    pub q2: Complex64,
    pub u: Complex64,
    pub log_j: f64,
}

pub const SINE_STATE_DIM: usize = 7;

impl SineState {
    pub fn to_flat(&self) -> Vec<f64> {
        vec![
            self.q1.re, self.q1.im, self.q2.re, self.q2.im, self.u.re, self.u.im, self.log_j,
        ]
    }

    pub fn from_flat(y: &[f64]) -> Self {
        Self {
            q1: Complex64::new(y[0], y[1]),
            q2: Complex64::new(y[2], y[3]),
            u: Complex64::new(y[4], y[5]),
            log_j: y[6],
        }
    }

    pub fn janossy(&self) -> f64 {
        self.log_j.exp()
    }
}

/// State of the symmetric limit system on [-t, t]; q is the value at +t.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SineSymmetricState {
    pub q: Complex64,
    pub u: f64,
    pub log_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SineSymmetricDerivative {
    pub q: Complex64,
    pub u: f64,
    /// imaginary part vanishes along true trajectories
    pub log_j: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SineDerivative {
    pub q1: Complex64,
    pub q2: Complex64,
    pub u: Complex64,
    pub log_j: f64,
}

impl SineDerivative {
    fn write_flat(&self, out: &mut [f64]) {
        out.copy_from_slice(&[
            self.q1.re, self.q1.im, self.q2.re, self.q2.im, self.u.re, self.u.im, self.log_j,
        ]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinePartials {
    pub d1: SineDerivative,
    pub d2: SineDerivative,
    pub resolvents: Resolvents,
}

/// q' = iq + (u-1)q̄/t, u' = 2(q² + q̄²), (log J)' = 2i(q̄q' - qq̄') + (q² - q̄²)²/t.
pub fn sine_symmetric_rhs(s: &SineSymmetricState, t: f64) -> Result<SineSymmetricDerivative> {
    if t <= 0.0 {
        return Err(Error::SeriesDomain(format!(
            "half-width must be positive (seed with the series), got {t}"
        )));
    }
    let q = s.q;
    let dq = I * q + (s.u - 1.0) * q.conj() / t;
    let q2 = q * q;
    let diff = q2 - q2.conj();
    Ok(SineSymmetricDerivative {
        q: dq,
        u: 2.0 * (q2 + q2.conj()).re,
        log_j: 2.0 * I * (q.conj() * dq - q * dq.conj()) + diff * diff / t,
    })
}

/// Cubic series of the symmetric state at small half-width.
pub fn sine_symmetric_seed(t: f64) -> Result<SineSymmetricState> {
    if !(t > 0.0 && t <= SERIES_DOMAIN) {
        return Err(Error::SeriesDomain(format!(
            "half-width must lie in (0, {SERIES_DOMAIN}], got {t}"
        )));
    }
    let c = Complex64::new(-t * t / 3.0, t - t.powi(3) / 6.0) / SQRT_2PI;
    Ok(SineSymmetricState {
        q: c,
        u: -2.0 * t.powi(3) / (3.0 * PI),
        log_j: -2.0 * t.powi(3) / (9.0 * PI),
    })
}

/// Integrates the symmetric limit system through increasing half-widths.
pub fn integrate_sine_symmetric(
    ts: &[f64],
    settings: Dop853,
) -> Result<Vec<(SineSymmetricState, SineSymmetricDerivative)>> {
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("half-widths must increase".into()));
    }
    let Some(&first) = ts.first() else {
        return Ok(Vec::new());
    };
    if first <= 0.0 {
        return Err(Error::SeriesDomain(format!("half-width must be positive, got {first}")));
    }
    let t0 = SYMMETRIC_SEED.min(0.5 * first);
    let s0 = sine_symmetric_seed(t0)?;
    let mut y = [s0.q.re, s0.q.im, s0.u, s0.log_j];
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let s = SineSymmetricState {
            q: Complex64::new(y[0], y[1]),
            u: y[2],
            log_j: y[3],
        };
        let d = sine_symmetric_rhs(&s, t)?;
        dy.copy_from_slice(&[d.q.re, d.q.im, d.u, d.log_j.re]);
        Ok(())
    };
    let mut solver = Solver::new(settings, 4);
    let mut t = t0;
    let mut out = Vec::with_capacity(ts.len());
    for &target in ts {
        solver.integrate(&mut rhs, t, target, &mut y)?;
        t = target;
        let s = SineSymmetricState {
            q: Complex64::new(y[0], y[1]),
            u: y[2],
            log_j: y[3],
        };
        out.push((s, sine_symmetric_rhs(&s, t)?));
    }
    Ok(out)
}

/// Both endpoint partials of the limit system at (a1, a2).
pub fn sine_asymmetric_rhs(s: &SineState, a1: f64, a2: f64) -> Result<SinePartials> {
    for a in [a1, a2] {
        if a == 0.0 {
            return Err(Error::SingularPhase(a));
        }
    }
    if a1 >= a2 {
        return Err(Error::InvalidInterval { a1, a2 });
    }
    let q = [s.q1, s.q2];
    let a = [a1, a2];
    let r12 = ((s.q1 * s.q2.conj() - s.q1.conj() * s.q2) / (I * (a1 - a2))).re;
    let mut d = [SineDerivative::default(); 2];
    let mut rjj = [0.0; 2];
    for j in 0..2 {
        let k = 1 - j;
        let sk = if k == 1 { 1.0 } else { -1.0 };
        let sj = -sk;
        let dq = (I * a[j] * q[j] + (s.u - 1.0) * q[j].conj() - sk * a[k] * r12 * q[k]) / a[j];
        let r = 2.0 * (q[j].conj() * dq).im;
        rjj[j] = r;
        let mut out = SineDerivative {
            u: 2.0 * sj * q[j] * q[j],
            log_j: -sj * r,
            ..Default::default()
        };
        let dk = sj * r12 * q[j];
        if j == 0 {
            out.q1 = dq;
            out.q2 = dk;
        } else {
            out.q2 = dq;
            out.q1 = dk;
        }
        d[j] = out;
    }
    Ok(SinePartials {
        d1: d[0],
        d2: d[1],
        resolvents: Resolvents {
            r11: rjj[0].into(),
            r22: rjj[1].into(),
            r12: r12.into(),
        },
    })
}

/// Cubic boundary series of the limit system.
pub fn sine_boundary_state(a1: f64, a2: f64) -> Result<SineState> {
    if a1.abs() > SERIES_DOMAIN || a2.abs() > SERIES_DOMAIN {
        return Err(Error::SeriesDomain(format!(
            "|a1|, |a2| must not exceed {SERIES_DOMAIN}, got ({a1}, {a2})"
        )));
    }
    let q = |t: f64| Complex64::new(-t * t / 3.0, t - t.powi(3) / 6.0) / SQRT_2PI;
    let c = a1.powi(3) - a2.powi(3);
    Ok(SineState {
        q1: q(a1),
        q2: q(a2),
        u: Complex64::from(c / (3.0 * PI)),
        log_j: c / (9.0 * PI),
    })
}

/// Two-term Neumann expansion on a short interval.
pub fn sine_neumann_state(a1: f64, a2: f64) -> Result<SineState> {
    if a1.abs() > NEUMANN_DOMAIN || a2.abs() > NEUMANN_DOMAIN {
        return Err(Error::SeriesDomain(format!(
            "|a_j| must not exceed {NEUMANN_DOMAIN}, got ({a1}, {a2})"
        )));
    }
    let quad = gauss_legendre(16, Interval::new(a1, a2)?)?;
    let m = quad.len();
    let (x, wt) = (&quad.nodes, &quad.weights);
    let f: Vec<Complex64> = x.iter().map(|&t| sine_phi_tilde(t)).collect();
    let mut kmat = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            kmat[i * m + j] = sine_kernel_tilde(x[i], x[j]);
        }
    }
    let resolve = |a: f64| {
        let mut q = sine_phi_tilde(a);
        for i in 0..m {
            q += sine_kernel_tilde(a, x[i]) * wt[i] * f[i];
        }
        q
    };
    let mut u = Complex64::default();
    let mut tr1 = 0.0;
    let mut tr2 = 0.0;
    for i in 0..m {
        let mut kf = Complex64::default();
        for j in 0..m {
            kf += kmat[i * m + j] * wt[j] * f[j];
            tr2 += wt[i] * wt[j] * kmat[i * m + j] * kmat[j * m + i];
        }
        u += wt[i] * f[i] * (f[i] + kf);
        tr1 += wt[i] * kmat[i * m + i];
    }
    Ok(SineState {
        q1: resolve(a1),
        q2: resolve(a2),
        u: 2.0 * u,
        log_j: -tr1 - 0.5 * tr2,
    })
}

pub(crate) struct SineFlow {
    pub seed: Seed,
}

impl EndpointFlow for SineFlow {
    fn dim(&self) -> usize {
        SINE_STATE_DIM
    }

    fn seed(&self, a1: f64, a2: f64) -> Result<Vec<f64>> {
        let s = match self.seed {
            Seed::Series => sine_boundary_state(a1, a2)?,
            Seed::Neumann => sine_neumann_state(a1, a2)?,
        };
        Ok(s.to_flat())
    }

    fn partials(
        &self,
        y: &[f64],
        a1: f64,
        a2: f64,
        d1: &mut [f64],
        d2: &mut [f64],
    ) -> Result<Resolvents> {
        let p = sine_asymmetric_rhs(&SineState::from_flat(y), a1, a2)?;
        p.d1.write_flat(d1);
        p.d2.write_flat(d2);
        Ok(p.resolvents)
    }
}

/// State of the limit system at (a1, a2), reached along the ray from the origin.
pub fn integrate_sine_ray(a1: f64, a2: f64, settings: Dop853) -> Result<SineState> {
    if !(a1 < 0.0 && a2 > 0.0) {
        return Err(Error::InvalidInterval { a1, a2 });
    }
    let flow = SineFlow { seed: Seed::Neumann };
    let y = flow::ray_state(&flow, (a1, a2), DEFAULT_EPSILON, settings)?;
    Ok(SineState::from_flat(&y))
}

/// Limit distributions on a common grid specification, unit mean spacing.
pub fn limit_distributions(
    spec: &crate::distributions::GridSpec,
) -> Result<crate::distributions::LimitGrids> {
    crate::distributions::limit_grids(spec)
}
