//! Tracy-Widom endpoint system for the conditioned CUE kernel.
//!
//! State variables are the resolvent data q_j, p_j (at the endpoints a_1 < 0 < a_2),
//! the inner products u, v, w and log J̃₁(0; [a_1, a_2]). The system is
//! integrated along rays from a seed near the origin; the symmetric interval
//! [-t, t] has its own ODE reduction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{self, EndpointFlow, Resolvents};
use crate::kernel::{eval_kernel_tilde, phi_tilde, CueParams, SQRT_2PI};
use crate::ode::{Dop853, Solver};
use crate::quadrature::{gauss_legendre, Interval};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest |a_j| accepted by the cubic boundary series.
pub const SERIES_DOMAIN: f64 = 1e-3;

/// Largest N·|a_j| accepted by the two-term Neumann seed.
const NEUMANN_DOMAIN: f64 = 0.05;

/// Default seed scale along a ray.
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Polynomial coefficients (in e^{ix}) of the gauge-transformed connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwCoefficients {
    pub b: Complex64,
    pub mu0: Complex64,
    pub mu1: Complex64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub gamma0: f64,
}

impl TwCoefficients {
    pub fn cue(params: &CueParams) -> Self {
        let n = params.n();
        Self {
            b: I,
            mu0: I,
            mu1: -I,
            alpha0: -0.5 * n + 1.0 / n,
            alpha1: 0.5 * n,
            beta0: -1.0 - 1.0 / n,
            gamma0: 1.0 - 1.0 / n,
        }
    }

    /// m(x) = μ0 + μ1 e^{bx}
    pub fn m(&self, x: f64) -> Complex64 {
        self.mu0 + self.mu1 * (self.b * x).exp()
    }
}

/// Dependent variables of the endpoint system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwState {
    pub q1: Complex64,
    pub p1: Complex64,
    pub q2: Complex64,
    pub p2: Complex64,
    pub u: Complex64,
    pub v: Complex64,
    pub w: Complex64,
    pub log_j: f64,
}

/// Length of the flattened real state.
pub const STATE_DIM: usize = 15;

impl TwState {
    pub fn to_flat(&self) -> Vec<f64> {
        let c = [self.q1, self.p1, self.q2, self.p2, self.u, self.v, self.w];
        let mut out = Vec::with_capacity(STATE_DIM);
        for z in c {
            out.push(z.re);
            out.push(z.im);
        }
        out.push(self.log_j);
        out
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let z = |k: usize| Complex64::new(y[2 * k], y[2 * k + 1]);
        Self {
            q1: z(0),
            p1: z(1),
            q2: z(2),
            p2: z(3),
            u: z(4),
            v: z(5),
            w: z(6),
            log_j: y[14],
        }
    }

    pub fn janossy(&self) -> f64 {
        self.log_j.exp()
    }

    fn q(&self, j: usize) -> Complex64 {
        if j == 1 {
            self.q1
        } else {
            self.q2
        }
    }

    fn p(&self, j: usize) -> Complex64 {
        if j == 1 {
            self.p1
        } else {
            self.p2
        }
    }
}

/// A derivative of every field. `log_j` is complex so that its imaginary
/// residue can be inspected; it vanishes for a real probability.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwDerivative {
    pub q1: Complex64,
    pub p1: Complex64,
    pub q2: Complex64,
    pub p2: Complex64,
    pub u: Complex64,
    pub v: Complex64,
    pub w: Complex64,
    pub log_j: Complex64,
}

impl TwDerivative {
    fn fields(&self) -> [Complex64; 8] {
        [
            self.q1, self.p1, self.q2, self.p2, self.u, self.v, self.w, self.log_j,
        ]
    }

    fn combine(a: &Self, b: &Self, ca: f64, cb: f64) -> Self {
        let f = |x: Complex64, y: Complex64| ca * x + cb * y;
        Self {
            q1: f(a.q1, b.q1),
            p1: f(a.p1, b.p1),
            q2: f(a.q2, b.q2),
            p2: f(a.p2, b.p2),
            u: f(a.u, b.u),
            v: f(a.v, b.v),
            w: f(a.w, b.w),
            log_j: f(a.log_j, b.log_j),
        }
    }

    fn write_flat(&self, out: &mut [f64]) {
        let c = [self.q1, self.p1, self.q2, self.p2, self.u, self.v, self.w];
        for (k, z) in c.iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        out[14] = self.log_j.re;
    }

    /// Largest absolute difference over all fields.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.fields()
            .iter()
            .zip(other.fields())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Both endpoint partials and the resolvents at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwPartials {
    pub d1: TwDerivative,
    pub d2: TwDerivative,
    pub resolvents: Resolvents,
}

fn check_phase(a: f64) -> Result<Complex64> {
    let e = (I * a).exp();
    if a == 0.0 || (1.0 - e).norm() < 1e-300 {
        return Err(Error::SingularPhase(a));
    }
    Ok(e)
}

/// ∂/∂a_1 and ∂/∂a_2 of every field at (a1, a2).
pub fn partials(s: &TwState, a1: f64, a2: f64, params: &CueParams) -> Result<TwPartials> {
    let n = params.n();
    let e = [check_phase(a1)?, check_phase(a2)?];
    let a = [a1, a2];
    let (u, v, w) = (s.u, s.v, s.w);
    let r12 = (s.q1 * s.p2 - s.p1 * s.q2) / (e[0] - e[1]);
    let mut d = [TwDerivative::default(); 2];
    let mut rjj = [Complex64::default(); 2];

    for j in 1..=2usize {
        let k = 3 - j;
        // (-1)^k and (-1)^j
        let sk = if k == 2 { 1.0 } else { -1.0 };
        let sj = -sk;
        let (qj, pj, qk, pk) = (s.q(j), s.p(j), s.q(k), s.p(k));
        let ej = e[j - 1];
        let mj = I * (1.0 - ej);
        let mk = I * (1.0 - e[k - 1]);
        let cross = sk * mk * r12;

        let dq = (-((n + 1.0) / 2.0 * (1.0 - ej) + v - 1.0 / n) * qj
            + (n + 1.0) * (u - 1.0 / n) * pj
            - cross * qk)
            / mj;
        let dp = (((n - 1.0) / 2.0 * (1.0 - ej) + v - 1.0 / n) * pj
            + (n - 1.0) * (w - 1.0 / n) * qj
            - cross * pk)
            / mj;
        let r = -I * (-I * a[j - 1]).exp() * (pj * dq - qj * dp);
        rjj[j - 1] = r;

        let dk_q = sj * r12 * qj;
        let dk_p = sj * r12 * pj;
        let mut out = TwDerivative {
            u: sj * qj * qj,
            v: sj * qj * pj,
            w: sj * pj * pj,
            log_j: -sj * r,
            ..Default::default()
        };
        if j == 1 {
            out.q1 = dq;
            out.p1 = dp;
            out.q2 = dk_q;
            out.p2 = dk_p;
        } else {
            out.q2 = dq;
            out.p2 = dp;
            out.q1 = dk_q;
            out.p1 = dk_p;
        }
        d[j - 1] = out;
    }
    Ok(TwPartials {
        d1: d[0],
        d2: d[1],
        resolvents: Resolvents {
            r11: rjj[0],
            r22: rjj[1],
            r12,
        },
    })
}

/// Directional derivative da1·∂/∂a1 + da2·∂/∂a2.
pub fn tw_rhs(
    state: &TwState,
    a1: f64,
    a2: f64,
    params: &CueParams,
    direction: (f64, f64),
) -> Result<TwDerivative> {
    let p = partials(state, a1, a2, params)?;
    Ok(TwDerivative::combine(&p.d1, &p.d2, direction.0, direction.1))
}

/// Cubic small-interval expansion of every field.
pub fn boundary_state(a1: f64, a2: f64, params: &CueParams) -> Result<TwState> {
    if a1.abs() > SERIES_DOMAIN || a2.abs() > SERIES_DOMAIN {
        return Err(Error::SeriesDomain(format!(
            "|a1|, |a2| must not exceed {SERIES_DOMAIN}, got ({a1}, {a2})"
        )));
    }
    let n = params.n();
    let s = SQRT_2PI;
    let q = |a: f64| {
        I * (n + 1.0) / (2.0 * s) * a - (n + 1.0) * (n + 2.0) / (12.0 * s) * a * a
            - I * (n + 1.0).powi(3) / (48.0 * s) * a.powi(3)
    };
    let p = |a: f64| {
        -I * (n - 1.0) / (2.0 * s) * a - (n - 1.0) * (n - 2.0) / (12.0 * s) * a * a
            + I * (n - 1.0).powi(3) / (48.0 * s) * a.powi(3)
    };
    let c = a1.powi(3) - a2.powi(3);
    Ok(TwState {
        q1: q(a1),
        p1: p(a1),
        q2: q(a2),
        p2: p(a2),
        u: Complex64::from((n + 1.0).powi(2) / (24.0 * PI) * c),
        v: Complex64::from(-(n * n - 1.0) / (24.0 * PI) * c),
        w: Complex64::from((n - 1.0).powi(2) / (24.0 * PI) * c),
        log_j: n * (n * n - 1.0) / (72.0 * PI) * c,
    })
}

/// Two-term Neumann expansion of the resolvent data on a short interval,
/// with the integrals done by 16-point Gauss-Legendre.
pub fn neumann_state(a1: f64, a2: f64, params: &CueParams) -> Result<TwState> {
    let n = params.n().abs();
    if n * a1.abs() > NEUMANN_DOMAIN || n * a2.abs() > NEUMANN_DOMAIN {
        return Err(Error::SeriesDomain(format!(
            "N·|a_j| must not exceed {NEUMANN_DOMAIN}, got ({a1}, {a2})"
        )));
    }
    let quad = gauss_legendre(16, Interval::new(a1, a2)?)?;
    let m = quad.len();
    let x = &quad.nodes;
    let wt = &quad.weights;
    let f: Vec<_> = x.iter().map(|&t| phi_tilde(t, params)).collect();
    let mut kmat = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            kmat[i * m + j] = eval_kernel_tilde(x[i], x[j], params);
        }
    }
    let resolve = |a: f64| {
        let base = phi_tilde(a, params);
        let (mut q, mut p) = (base.phi, base.psi);
        for i in 0..m {
            let k = eval_kernel_tilde(a, x[i], params) * wt[i];
            q += k * f[i].phi;
            p += k * f[i].psi;
        }
        (q, p)
    };
    let (q1, p1) = resolve(a1);
    let (q2, p2) = resolve(a2);

    // K applied to φ̃ and ψ̃ at the nodes
    let mut kf = vec![Complex64::default(); m];
    let mut kg = vec![Complex64::default(); m];
    for i in 0..m {
        for j in 0..m {
            let k = kmat[i * m + j] * wt[j];
            kf[i] += k * f[j].phi;
            kg[i] += k * f[j].psi;
        }
    }
    let mut u = Complex64::default();
    let mut v = Complex64::default();
    let mut w = Complex64::default();
    let mut tr1 = 0.0;
    let mut tr2 = 0.0;
    for i in 0..m {
        u += wt[i] * f[i].phi * (f[i].phi + kf[i]);
        v += wt[i] * f[i].psi * (f[i].phi + kf[i]);
        w += wt[i] * f[i].psi * (f[i].psi + kg[i]);
        tr1 += wt[i] * kmat[i * m + i];
        for j in 0..m {
            tr2 += wt[i] * wt[j] * kmat[i * m + j] * kmat[j * m + i];
        }
    }
    Ok(TwState {
        q1,
        p1,
        q2,
        p2,
        u,
        v,
        w,
        log_j: -tr1 - 0.5 * tr2,
    })
}

/// How the state is initialized at the start of a ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Seed {
    /// cubic boundary series
    Series,
    /// two-term Neumann expansion, accurate to O(a^6)
    #[default]
    Neumann,
}

/// A ray from the origin to a target interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPath {
    pub target_a1: f64,
    pub target_a2: f64,
    pub epsilon: f64,
    pub rtol: f64,
    pub atol: f64,
    pub seed: Seed,
}

impl RayPath {
    pub fn new(target_a1: f64, target_a2: f64) -> Result<Self> {
        Interval::janossy(target_a1, target_a2)?;
        if target_a1 == 0.0 {
            return Err(Error::InvalidInterval {
                a1: target_a1,
                a2: target_a2,
            });
        }
        let d = Dop853::default();
        Ok(Self {
            target_a1,
            target_a2,
            epsilon: DEFAULT_EPSILON,
            rtol: d.rtol,
            atol: d.atol,
            seed: Seed::default(),
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1e-4) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1e-4], got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: Seed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Result<Self> {
        Dop853::with_tolerances(rtol, atol)?;
        self.rtol = rtol;
        self.atol = atol;
        Ok(self)
    }

    fn settings(&self) -> Dop853 {
        Dop853 {
            rtol: self.rtol,
            atol: self.atol,
            ..Dop853::default()
        }
    }
}

/// The endpoint system as a flow over the flattened state.
pub(crate) struct CueFlow {
    pub params: CueParams,
    pub seed: Seed,
}

impl CueFlow {
    pub fn new(params: CueParams) -> Self {
        Self {
            params,
            seed: Seed::Neumann,
        }
    }
}

impl EndpointFlow for CueFlow {
    fn dim(&self) -> usize {
        STATE_DIM
    }

    fn seed(&self, a1: f64, a2: f64) -> Result<Vec<f64>> {
        let s = match self.seed {
            Seed::Series => boundary_state(a1, a2, &self.params)?,
            Seed::Neumann => neumann_state(a1, a2, &self.params)?,
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
        let p = partials(&TwState::from_flat(y), a1, a2, &self.params)?;
        p.d1.write_flat(d1);
        p.d2.write_flat(d2);
        Ok(p.resolvents)
    }
}

/// State at the ray target.
pub fn integrate_ray(path: &RayPath, params: &CueParams) -> Result<TwState> {
    let flow = CueFlow {
        params: *params,
        seed: path.seed,
    };
    let y = flow::ray_state(
        &flow,
        (path.target_a1, path.target_a2),
        path.epsilon,
        path.settings(),
    )?;
    Ok(TwState::from_flat(&y))
}

/// State at (a1, a2) reached by two legs: first a1 from the seed to its
/// target with a2 held small, then a2 to its target.
pub fn integrate_l_path(a1: f64, a2: f64, params: &CueParams, settings: Dop853) -> Result<TwState> {
    Interval::janossy(a1, a2)?;
    let flow = CueFlow::new(*params);
    let corner = 0.02 * params.mean_spacing();
    let start = (-corner * 1e-2, corner * 1e-2);
    let mut y = flow.seed(start.0, start.1)?;
    let legs = [
        (start, (-corner, corner)),
        ((-corner, corner), (a1, corner)),
        ((a1, corner), (a1, a2)),
    ];
    for (from, to) in legs {
        flow::follow(
            &flow,
            &mut y,
            from,
            to,
            settings,
            flow::Accumulate::None,
            &[1.0],
            |_, _, _| Ok(true),
        )?;
    }
    Ok(TwState::from_flat(&y))
}

/// State on the symmetric interval [-t, t]: q = q_2 = conj(q_1), p likewise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymmetricState {
    pub q: Complex64,
    pub p: Complex64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub log_j: f64,
}

/// d/dt of the symmetric state. `log_j` keeps its imaginary residue.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymmetricDerivative {
    pub q: Complex64,
    pub p: Complex64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub log_j: Complex64,
}

impl SymmetricState {
    fn to_flat(self) -> [f64; 8] {
        [
            self.q.re, self.q.im, self.p.re, self.p.im, self.u, self.v, self.w, self.log_j,
        ]
    }

    fn from_flat(y: &[f64]) -> Self {
        Self {
            q: Complex64::new(y[0], y[1]),
            p: Complex64::new(y[2], y[3]),
            u: y[4],
            v: y[5],
            w: y[6],
            log_j: y[7],
        }
    }

    pub fn from_state(s: &TwState) -> Self {
        Self {
            q: s.q2,
            p: s.p2,
            u: s.u.re,
            v: s.v.re,
            w: s.w.re,
            log_j: s.log_j,
        }
    }

    pub fn to_state(&self) -> TwState {
        TwState {
            q1: self.q.conj(),
            p1: self.p.conj(),
            q2: self.q,
            p2: self.p,
            u: self.u.into(),
            v: self.v.into(),
            w: self.w.into(),
            log_j: self.log_j,
        }
    }
}

/// The symmetric-interval ODEs in the half-width t.
pub fn symmetric_rhs(s: &SymmetricState, t: f64, params: &CueParams) -> Result<SymmetricDerivative> {
    if t <= 0.0 {
        return Err(Error::SeriesDomain(format!(
            "half-width must be positive (seed with the series), got {t}"
        )));
    }
    if t >= PI {
        return Err(Error::InvalidInterval { a1: -t, a2: t });
    }
    let n = params.n();
    let (q, p) = (s.q, s.p);
    let e = (I * t).exp();
    let m = I * (1.0 - e);
    let x = q * p.conj() - p * q.conj();
    let tan = (0.5 * t).tan();
    let dq = (-((n + 1.0) / 2.0 * (1.0 - e) + s.v - 1.0 / n) * q
        + (n + 1.0) * (s.u - 1.0 / n) * p
        + tan * x * q.conj())
        / m;
    let dp = (((n - 1.0) / 2.0 * (1.0 - e) + s.v - 1.0 / n) * p
        + (n - 1.0) * (s.w - 1.0 / n) * q
        + tan * x * p.conj())
        / m;
    let dlog = I * e.conj() * (p * dq - q * dp) - I * e * (p.conj() * dq.conj() - q.conj() * dp.conj())
        + x * x / t.tan();
    Ok(SymmetricDerivative {
        q: dq,
        p: dp,
        u: 2.0 * (q * q).re,
        v: 2.0 * (q * p).re,
        w: 2.0 * (p * p).re,
        log_j: dlog,
    })
}

/// Integrates the symmetric system through increasing half-widths `ts`,
/// returning the state and its derivative at each.
pub fn integrate_symmetric(
    ts: &[f64],
    params: &CueParams,
    settings: Dop853,
) -> Result<Vec<(SymmetricState, SymmetricDerivative)>> {
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("half-widths must increase".into()));
    }
    let Some(&first) = ts.first() else {
        return Ok(Vec::new());
    };
    let t0 = (DEFAULT_EPSILON * params.mean_spacing()).min(0.5 * first);
    if first <= 0.0 {
        return Err(Error::SeriesDomain(format!("half-width must be positive, got {first}")));
    }
    let mut y = SymmetricState::from_state(&neumann_state(-t0, t0, params)?).to_flat();
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let d = symmetric_rhs(&SymmetricState::from_flat(y), t, params)?;
        dy.copy_from_slice(&[d.q.re, d.q.im, d.p.re, d.p.im, d.u, d.v, d.w, d.log_j.re]);
        Ok(())
    };
    let mut solver = Solver::new(settings, 8);
    let mut t = t0;
    let mut out = Vec::with_capacity(ts.len());
    for &target in ts {
        solver.integrate(&mut rhs, t, target, &mut y)?;
        t = target;
        let s = SymmetricState::from_flat(&y);
        out.push((s, symmetric_rhs(&s, t, params)?));
    }
    Ok(out)
}

/// q_{1j}, p_{1j} from the index-shift identities with ṽ = v.
pub fn index_shift(state: &TwState, j: usize, a_j: f64) -> (Complex64, Complex64) {
    let (q, p) = (state.q(j), state.p(j));
    let e = (I * a_j).exp();
    let q1 = e * q - (state.v * q - state.u * p);
    let p1 = e * p - (state.w * q - state.v * p);
    (q1, p1)
}

/// Evaluates the generic nonuniversal equations with the CUE coefficients
/// and index-shifted q_{1j}, p_{1j}; returns the largest deviation of
/// m(a_j)∂q_j/∂a_j and m(a_j)∂p_j/∂a_j from the closed system.
pub fn nonuniversal_residual(state: &TwState, a1: f64, a2: f64, params: &CueParams) -> Result<f64> {
    let c = TwCoefficients::cue(params);
    let p = partials(state, a1, a2, params)?;
    let r12 = p.resolvents.r12;
    let (u, v, w) = (state.u, state.v, state.w);
    let vt = v;
    let half_b = c.b / 2.0;
    let a = [a1, a2];
    let mut worst = 0.0f64;
    for j in 1..=2usize {
        let k = 3 - j;
        let sk = if k == 2 { 1.0 } else { -1.0 };
        let (qj, pj, qk, pk) = (state.q(j), state.p(j), state.q(k), state.p(k));
        let (q1j, p1j) = index_shift(state, j, a[j - 1]);
        let mk = c.m(a[k - 1]);

        let lhs_q = (c.alpha0 + half_b * c.mu0 + c.alpha1 * v - half_b * c.mu1 * v) * qj
            + (c.alpha1 + half_b * c.mu1) * q1j
            + (c.beta0 + c.alpha1 * u + half_b * c.mu1 * u) * pj
            - sk * mk * r12 * qk;
        let lhs_p = (-c.gamma0 + c.alpha1 * w - half_b * c.mu1 * w) * qj
            + (-c.alpha0 + half_b * c.mu0 + c.alpha1 * vt + half_b * c.mu1 * v) * pj
            + (-c.alpha1 + half_b * c.mu1) * p1j
            - sk * mk * r12 * pk;

        let mj = c.m(a[j - 1]);
        let d = if j == 1 { &p.d1 } else { &p.d2 };
        let (dq, dp) = if j == 1 { (d.q1, d.p1) } else { (d.q2, d.p2) };
        worst = worst.max((lhs_q - mj * dq).norm()).max((lhs_p - mj * dp).norm());
    }
    Ok(worst)
}

/// Applies the N ↦ -N reflection: a ↦ -a, q ↔ conj p, u ↔ -conj w, v ↦ -conj v.
fn reflect(s: &TwState) -> TwState {
    TwState {
        q1: s.p1.conj(),
        p1: s.q1.conj(),
        q2: s.p2.conj(),
        p2: s.q2.conj(),
        u: -s.w.conj(),
        w: -s.u.conj(),
        v: -s.v.conj(),
        log_j: s.log_j,
    }
}

/// Image of a derivative under the reflection; includes the sign from a ↦ -a.
fn reflect_derivative(d: &TwDerivative) -> TwDerivative {
    TwDerivative {
        q1: -d.p1.conj(),
        p1: -d.q1.conj(),
        q2: -d.p2.conj(),
        p2: -d.q2.conj(),
        u: d.w.conj(),
        w: d.u.conj(),
        v: d.v.conj(),
        log_j: -d.log_j.conj(),
    }
}

/// Largest mismatch between the partials evaluated at the reflected state
/// (rank -N, endpoints -a) and the reflected partials.
pub fn sign_flip_residual(state: &TwState, a1: f64, a2: f64, params: &CueParams) -> Result<f64> {
    let p = partials(state, a1, a2, params)?;
    let flipped = CueParams::raw(-params.n());
    let q = partials(&reflect(state), -a1, -a2, &flipped)?;
    Ok(q.d1
        .max_abs_diff(&reflect_derivative(&p.d1))
        .max(q.d2.max_abs_diff(&reflect_derivative(&p.d2))))
}

/// J̃₁(0; [a1, a2]) from the endpoint system; uses the symmetric reduction
/// when a1 = -a2.
pub fn janossy_tw(a1: f64, a2: f64, params: &CueParams) -> Result<f64> {
    janossy_tw_with(a1, a2, params, Dop853::default())
}

/// [`janossy_tw`] with explicit integrator tolerances.
pub fn janossy_tw_with(a1: f64, a2: f64, params: &CueParams, settings: Dop853) -> Result<f64> {
    Interval::janossy(a1, a2)?;
    if a1 == 0.0 && a2 == 0.0 {
        return Ok(1.0);
    }
    if a1 == -a2 {
        let out = integrate_symmetric(&[a2], params, settings)?;
        return Ok(out[0].0.log_j.exp());
    }
    let path = RayPath::new(a1, a2)?.with_tolerances(settings.rtol, settings.atol)?;
    Ok(integrate_ray(&path, params)?.janossy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredholm::{janossy_nystrom, nystrom_state};

    fn p(n: usize) -> CueParams {
        CueParams::new(n).unwrap()
    }

    #[test]
    fn coefficients_for_cue() {
        let c = TwCoefficients::cue(&p(10));
        assert_eq!(c.alpha0, -5.0 + 0.1);
        assert_eq!(c.alpha1, 5.0);
        assert_eq!(c.beta0, -1.1);
        assert_eq!(c.gamma0, 0.9);
        assert!((c.m(0.7) - I * (1.0 - (I * 0.7).exp())).norm() < 1e-16);
    }

    #[test]
    fn boundary_series_values() {
        let eps = 1e-4;
        let s = boundary_state(-eps, eps, &p(10)).unwrap();
        let r = SQRT_2PI;
        let q2 = I * (11.0 / (2.0 * r)) * eps - (11.0 * 12.0 / (12.0 * r)) * eps * eps
            - I * (1331.0 / (48.0 * r)) * eps.powi(3);
        assert!((s.q2 - q2).norm() < 1e-20);
        assert!((s.log_j - 990.0 * (-2.0 * eps.powi(3)) / (72.0 * PI)).abs() < 1e-24);
        let z = boundary_state(0.0, 0.0, &p(10)).unwrap();
        assert_eq!(z, TwState::default());
        assert!(boundary_state(-2e-3, 1e-4, &p(10)).is_err());
    }

    #[test]
    fn neumann_seed_agrees_with_series() {
        let params = p(10);
        let a = neumann_state(-1e-3, 1e-3, &params).unwrap();
        let b = boundary_state(-1e-3, 1e-3, &params).unwrap();
        // series truncation is O(a^4) with N-dependent constants
        let tol = 1e4 * 1e-3f64.powi(4);
        for (x, y) in [(a.q1, b.q1), (a.p1, b.p1), (a.q2, b.q2), (a.p2, b.p2)] {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
        assert!((a.log_j - b.log_j).abs() < 1e-3 * b.log_j.abs());
    }

    #[test]
    fn neumann_seed_matches_nystrom_state() {
        let params = p(12);
        let a = neumann_state(-2e-3, 3e-3, &params).unwrap();
        let b = nystrom_state(Interval::new(-2e-3, 3e-3).unwrap(), &params, 24).unwrap();
        for (x, y) in [(a.q1, b.q1), (a.p2, b.p2), (a.u, b.u), (a.v, b.v), (a.w, b.w)] {
            assert!((x - y).norm() <= 1e-12 * y.norm().max(1e-12), "{x} vs {y}");
        }
        // the cubic trace term is dropped
        assert!((a.log_j - b.log_j).abs() < 1e-8 * b.log_j.abs(), "{} vs {}", a.log_j, b.log_j);
    }

    #[test]
    fn rhs_matches_series_derivative() {
        let params = p(10);
        let n = 10.0;
        let eps = 1e-4;
        let s = boundary_state(-eps, eps, &params).unwrap();
        let d = partials(&s, -eps, eps, &params).unwrap();
        let r = SQRT_2PI;
        let dq2 = I * (n + 1.0) / (2.0 * r) - (n + 1.0) * (n + 2.0) / (6.0 * r) * eps;
        assert!((d.d2.q2 - dq2).norm() < 1e3 * eps * eps, "{}", (d.d2.q2 - dq2).norm());
        let dlog = -3.0 * n * (n * n - 1.0) / (72.0 * PI) * eps * eps;
        assert!((d.d2.log_j.re - dlog).abs() < 1e-2 * dlog.abs());
    }

    #[test]
    fn u_derivative_is_q_squared() {
        let params = p(9);
        let s = integrate_ray(&RayPath::new(-0.3, 0.5).unwrap(), &params).unwrap();
        let d = partials(&s, -0.3, 0.5, &params).unwrap();
        assert_eq!(d.d2.u, s.q2 * s.q2);
        assert_eq!(d.d1.u, -s.q1 * s.q1);
    }

    #[test]
    fn ray_agrees_with_nystrom() {
        let params = p(10);
        let d = params.mean_spacing();
        for (f1, f2) in [(0.5, 0.5), (1.0, 1.0), (0.3, 1.0), (1.0, 0.2)] {
            let tw = integrate_ray(&RayPath::new(-f1 * d, f2 * d).unwrap(), &params).unwrap();
            let ny = janossy_nystrom(Interval::janossy(-f1 * d, f2 * d).unwrap(), &params, 256).unwrap();
            let rel = (tw.janossy() - ny).abs() / ny;
            assert!(rel < 1e-9, "({f1},{f2}): {rel}");
        }
    }

    #[test]
    fn state_matches_nystrom_resolvents() {
        let params = p(8);
        let s = integrate_ray(&RayPath::new(-0.4, 0.7).unwrap(), &params).unwrap();
        let ny = nystrom_state(Interval::janossy(-0.4, 0.7).unwrap(), &params, 128).unwrap();
        for (x, y) in [(s.q1, ny.q1), (s.p1, ny.p1), (s.q2, ny.q2), (s.p2, ny.p2)] {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
        for (x, y) in [(s.u, ny.u), (s.v, ny.v), (s.w, ny.w), (s.v, ny.v_tilde)] {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn symmetric_target_has_conjugate_endpoints() {
        let params = p(10);
        let t = 0.45;
        let s = integrate_ray(&RayPath::new(-t, t).unwrap(), &params).unwrap();
        assert!((s.q1 - s.q2.conj()).norm() < 1e-10);
        assert!((s.p1 - s.p2.conj()).norm() < 1e-10);
    }

    #[test]
    fn symmetric_and_ray_routes_agree() {
        let params = p(12);
        let t = 0.35;
        let a = integrate_symmetric(&[t], &params, Dop853::default()).unwrap()[0].0;
        let b = integrate_ray(&RayPath::new(-t, t).unwrap(), &params).unwrap();
        assert!((a.log_j.exp() - b.janossy()).abs() < 1e-10);
        assert!((a.q - b.q2).norm() < 1e-9);
    }

    #[test]
    fn symmetric_rhs_matches_combined_partials() {
        let params = p(10);
        let t = 0.5;
        let s = SymmetricState::from_state(&integrate_ray(&RayPath::new(-t, t).unwrap(), &params).unwrap());
        let d = symmetric_rhs(&s, t, &params).unwrap();
        let full = tw_rhs(&s.to_state(), -t, t, &params, (-1.0, 1.0)).unwrap();
        assert!((d.q - full.q2).norm() < 1e-12);
        assert!((d.p - full.p2).norm() < 1e-12);
        assert!((d.log_j - full.log_j).norm() < 1e-12);
        assert!((d.u - full.u.re).abs() < 1e-14 && full.u.im.abs() < 1e-14);
        assert!(d.log_j.im.abs() < 1e-12);
    }

    #[test]
    fn symmetric_small_t_log_derivative() {
        let params = p(10);
        let n = 10.0;
        let t = 2e-3;
        let out = integrate_symmetric(&[t], &params, Dop853::default()).unwrap();
        let expect = -2.0 * n * (n * n - 1.0) * t * t / (24.0 * PI) * 3.0 / 3.0;
        assert!((out[0].1.log_j.re - expect).abs() < 1e-2 * expect.abs(), "{}", out[0].1.log_j);
        assert!(symmetric_rhs(&out[0].0, 0.0, &params).is_err());
        assert!(symmetric_rhs(&out[0].0, PI, &params).is_err());
    }

    #[test]
    fn symmetric_fields_stay_real() {
        let params = p(16);
        let d = params.mean_spacing();
        let ts: Vec<f64> = (1..=20).map(|k| k as f64 * 0.1 * d).collect();
        let out = integrate_symmetric(&ts, &params, Dop853::default()).unwrap();
        for (s, ds) in &out {
            assert!(ds.log_j.im.abs() < 1e-10 * (1.0 + ds.log_j.re.abs()));
            assert!(s.log_j <= 0.0);
        }
    }

    #[test]
    fn index_shift_at_origin_and_small_interval() {
        let z = TwState::default();
        assert_eq!(index_shift(&z, 1, 0.0), (Complex64::default(), Complex64::default()));
        let params = p(10);
        let a = 1e-3;
        let s = boundary_state(-a, a, &params).unwrap();
        let (q12, _) = index_shift(&s, 2, a);
        assert!((q12 - (I * a).exp() * s.q2).norm() < 1e-6 * a);
    }

    #[test]
    fn nonuniversal_equations_reduce_to_closed_system() {
        let params = p(10);
        for (a1, a2) in [(-0.2, 0.3), (-0.6, 0.1), (-0.5, 0.9)] {
            let s = integrate_ray(&RayPath::new(a1, a2).unwrap(), &params).unwrap();
            let r = nonuniversal_residual(&s, a1, a2, &params).unwrap();
            assert!(r < 1e-12, "({a1},{a2}): {r}");
        }
    }

    #[test]
    fn sign_flip_symmetry_of_rhs() {
        let params = p(10);
        for (a1, a2) in [(-0.2, 0.3), (-0.7, 0.4)] {
            let s = integrate_ray(&RayPath::new(a1, a2).unwrap(), &params).unwrap();
            let r = sign_flip_residual(&s, a1, a2, &params).unwrap();
            assert!(r < 1e-12, "{r}");
        }
    }

    #[test]
    fn path_independence() {
        let params = p(10);
        let d = params.mean_spacing();
        let (a1, a2) = (-0.8 * d, 1.3 * d);
        let ray = integrate_ray(&RayPath::new(a1, a2).unwrap(), &params).unwrap();
        let l = integrate_l_path(a1, a2, &params, Dop853::default()).unwrap();
        assert!((ray.log_j - l.log_j).abs() < 1e-9, "{} vs {}", ray.log_j, l.log_j);
        assert!((ray.q1 - l.q1).norm() < 1e-9);
    }

    #[test]
    fn janossy_entry_point() {
        let params = p(10);
        assert_eq!(janossy_tw(0.0, 0.0, &params).unwrap(), 1.0);
        let small = janossy_tw(-1e-3, 1e-3, &params).unwrap();
        assert!(small < 1.0 && 1.0 - small < 1e-5);
        assert!(janossy_tw(0.1, 0.2, &params).is_err());
        assert!(janossy_tw(-3.2, 3.2, &params).is_err());
    }
}
