//! The CUE_N correlation kernel, its conditioned (gauge-transformed) form, and
//! the two-component functions that make both kernels "integrable".
//!
//! Eigenphases are raw angles in radians unless a function says otherwise.
//! The kernel conditioned on an eigenphase at the origin is
//!
//! ```text
//! K̃(x, y) = K(x, y) - K(x, 0) K(0, 0)^{-1} K(0, y)
//!         = (φ̃(x) ψ̃(y) - ψ̃(x) φ̃(y)) / (e^{ix} - e^{iy})
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// √(2π), the normalization of the two-component functions.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

/// Below this value of |N x| the Dirichlet ratio is evaluated by its Taylor series.
const SERIES_SWITCH: f64 = 0.05;

/// Rank of the unitary group.
///
/// `n` is stored as a real number so that the Tracy-Widom system can be driven
/// at non-integer rank (the "N effective" of the Riemann zero comparison).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CueParams {
    n: f64,
}

impl CueParams {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "matrix rank N must be at least 2, got {n}"
            )));
        }
        Ok(Self { n: n as f64 })
    }

    /// Real-valued rank, used for N-effective comparisons.
    pub fn real(n: f64) -> Result<Self> {
        if !n.is_finite() || n < 2.0 {
            return Err(Error::InvalidParameter(format!(
                "real rank must be finite and at least 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    /// Unchecked constructor; the N ↦ -N reflection check needs negative ranks.
    pub(crate) fn raw(n: f64) -> Self {
        Self { n }
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// Mean eigenphase spacing 2π/N.
    pub fn mean_spacing(&self) -> f64 {
        2.0 * PI / self.n
    }
}

/// The pair (φ, ψ) evaluated at one phase point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoComponent {
    pub phi: Complex64,
    pub psi: Complex64,
}

/// A kernel value at a pair of eigenphases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

impl KernelSample {
    pub fn cue(x: f64, y: f64, params: &CueParams) -> Self {
        Self {
            x,
            y,
            value: eval_kernel_cue(x, y, params),
        }
    }

    pub fn tilde(x: f64, y: f64, params: &CueParams) -> Self {
        Self {
            x,
            y,
            value: eval_kernel_tilde(x, y, params),
        }
    }
}

/// 1 - sin(Nx/2) / (N sin(x/2)), accurate for small |Nx|.
pub(crate) fn one_minus_dirichlet(n: f64, x: f64) -> f64 {
    if (n * x).abs() < SERIES_SWITCH || x == 0.0 {
        let n2 = n * n;
        let x2 = x * x;
        let c2 = (n2 - 1.0) / 24.0;
        let c4 = (n2 - 1.0) * (3.0 * n2 - 7.0) / 5760.0;
        let c6 = (n2 - 1.0) * (3.0 * n2 * n2 - 18.0 * n2 + 31.0) / 967_680.0;
        let c8 = (n2 - 1.0) * (5.0 * n2 * n2 * n2 - 55.0 * n2 * n2 + 239.0 * n2 - 381.0)
            / 464_486_400.0;
        x2 * (c2 - x2 * (c4 - x2 * (c6 - x2 * c8)))
    } else {
        1.0 - dirichlet(n, x)
    }
}

/// sin(Nx/2) / (N sin(x/2)), equal to 1 at the origin.
pub(crate) fn dirichlet(n: f64, x: f64) -> f64 {
    if (n * x).abs() < SERIES_SWITCH || x == 0.0 {
        1.0 - one_minus_dirichlet(n, x)
    } else {
        (0.5 * n * x).sin() / (n * (0.5 * x).sin())
    }
}

/// 1 - sin(x)/x.
pub(crate) fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        let x2 = x * x;
        x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362_880.0)))
    } else {
        1.0 - x.sin() / x
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        1.0 - one_minus_sinc(x)
    } else {
        x.sin() / x
    }
}

/// e^{iθ} - D where 1 - D is supplied directly, avoiding the cancellation of
/// the real parts near the origin.
fn phase_minus(theta: f64, one_minus_d: f64) -> Complex64 {
    let h = (0.5 * theta).sin();
    Complex64::new(one_minus_d - 2.0 * h * h, theta.sin())
}

/// Two-component functions of the bare CUE kernel.
pub fn phi_cue(x: f64, params: &CueParams) -> TwoComponent {
    let n = params.n;
    TwoComponent {
        phi: Complex64::from_polar(1.0, 0.5 * (n + 1.0) * x) / SQRT_2PI,
        psi: Complex64::from_polar(1.0, -0.5 * (n - 1.0) * x) / SQRT_2PI,
    }
}

/// K(x, y) = sin(N(x-y)/2) / (2π sin((x-y)/2)).
pub fn eval_kernel_cue(x: f64, y: f64, params: &CueParams) -> f64 {
    params.n / (2.0 * PI) * dirichlet(params.n, x - y)
}

/// Two-component functions of the conditioned kernel; both vanish at the origin.
pub fn phi_tilde(x: f64, params: &CueParams) -> TwoComponent {
    let n = params.n;
    let omd = one_minus_dirichlet(n, x);
    TwoComponent {
        phi: phase_minus(0.5 * (n + 1.0) * x, omd) / SQRT_2PI,
        psi: phase_minus(-0.5 * (n - 1.0) * x, omd) / SQRT_2PI,
    }
}

/// K̃(x, y) via the rank-one correction of the bare kernel.
pub fn eval_kernel_tilde(x: f64, y: f64, params: &CueParams) -> f64 {
    let n = params.n;
    // K(x,0) K(0,y) / K(0,0) = N/(2π) D(x) D(y); both forms share the prefactor.
    let dx = dirichlet(n, x);
    let dy = dirichlet(n, y);
    if x == y {
        // D(0) - D(x)^2 = (1 - D)(1 + D)
        let omd = one_minus_dirichlet(n, x);
        return n / (2.0 * PI) * omd * (1.0 + dx);
    }
    n / (2.0 * PI) * (dirichlet(n, x - y) - dx * dy)
}

/// K̃(x, y) via the integrable two-component form. Only valid off the diagonal.
pub fn eval_kernel_tilde_two_component(x: f64, y: f64, params: &CueParams) -> Result<f64> {
    if x == y {
        return Err(Error::InvalidParameter(
            "two-component form is singular on the diagonal".into(),
        ));
    }
    let fx = phi_tilde(x, params);
    let fy = phi_tilde(y, params);
    let num = fx.phi * fy.psi - fx.psi * fy.phi;
    let den = Complex64::from_polar(1.0, x) - Complex64::from_polar(1.0, y);
    let value = num / den;
    debug_assert!(value.im.abs() < 1e-13 * value.re.abs().max(1.0));
    Ok(value.re)
}

/// Exact CUE kernel after unfolding to mean spacing π: sin d / (π N sin(d/N)).
pub fn unfolded_cue_kernel(delta: f64, n: f64) -> f64 {
    dirichlet(n, 2.0 * delta / n) * n / (2.0 * PI) * (2.0 / n)
}

/// Truncation of the 1/N² expansion of the unfolded CUE kernel around the
/// sine kernel sin d / (π d). `order` is the highest power of 1/N kept.
pub fn sine_kernel_expansion(delta: f64, order: u32, n: Option<f64>) -> Result<f64> {
    let base = sinc(delta) / PI;
    match (order, n) {
        (0, _) => Ok(base),
        (2 | 4, Some(n)) => {
            let s = delta.sin();
            let n2 = n * n;
            let mut value = base + delta * s / (6.0 * PI * n2);
            if order == 4 {
                value += 7.0 * delta.powi(3) * s / (360.0 * PI * n2 * n2);
            }
            Ok(value)
        }
        (2 | 4, None) => Err(Error::InvalidParameter(
            "finite-N orders require N".into(),
        )),
        (o, _) => Err(Error::InvalidParameter(format!(
            "expansion order must be 0, 2 or 4, got {o}"
        ))),
    }
}

/// Conditioned sine kernel (mean spacing π): S(x-y) - S(x)S(y)/S(0), S(d) = sin d/(π d).
pub fn sine_kernel_tilde(x: f64, y: f64) -> f64 {
    if x == y {
        let omd = one_minus_sinc(x);
        return omd * (2.0 - omd) / PI;
    }
    (sinc(x - y) - sinc(x) * sinc(y)) / PI
}

/// Large-N limit of φ̃ after unfolding: (e^{ix} - sin x / x)/√(2π).
pub fn sine_phi_tilde(x: f64) -> Complex64 {
    phase_minus(x, one_minus_sinc(x)) / SQRT_2PI
}
