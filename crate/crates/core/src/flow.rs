//! Path integration shared by the finite-N and sine-limit endpoint systems.
//!
//! A flow knows its two partial derivatives with respect to the endpoints at a
//! flattened real state. Straight segments between endpoint pairs are then
//! integrated with DOP853, optionally carrying an extra component that
//! accumulates P_c or a2·P_c along the way.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{Dop853, Solver};

/// Resolvent values at the endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolvents {
    pub r11: Complex64,
    pub r22: Complex64,
    pub r12: Complex64,
}

impl Resolvents {
    /// -∂²J/∂a1∂a2 given log J.
    pub fn pc(&self, log_j: f64) -> f64 {
        log_j.exp() * (self.r11 * self.r22 - self.r12 * self.r12).re
    }
}

pub(crate) trait EndpointFlow: Sync {
    /// Real dimension of the flattened state; log J is the last entry.
    fn dim(&self) -> usize;

    fn seed(&self, a1: f64, a2: f64) -> Result<Vec<f64>>;

    /// Writes ∂/∂a1 and ∂/∂a2 of the state into `d1`, `d2`.
    fn partials(
        &self,
        y: &[f64],
        a1: f64,
        a2: f64,
        d1: &mut [f64],
        d2: &mut [f64],
    ) -> Result<Resolvents>;

    fn log_j(&self, y: &[f64]) -> f64 {
        y[self.dim() - 1]
    }
}

/// What an extra state component integrates along a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Accumulate {
    None,
    /// ∫ P_c d(a2)
    Pc,
    /// ∫ a2 P_c d(a2)
    A2Pc,
}

/// Integrates along a(s) = from + s (to - from), s ∈ [0, 1], stopping at
/// each fraction in `stops` (increasing, ending at or before 1). `on_stop`
/// receives the fraction, the endpoints and the state; returning `false`
/// ends the walk early.
#[allow(clippy::too_many_arguments)]
pub(crate) fn follow<F, C>(
    flow: &F,
    y: &mut [f64],
    from: (f64, f64),
    to: (f64, f64),
    settings: Dop853,
    acc: Accumulate,
    stops: &[f64],
    mut on_stop: C,
) -> Result<()>
where
    F: EndpointFlow + ?Sized,
    C: FnMut(f64, (f64, f64), &[f64]) -> Result<bool>,
{
    let dim = flow.dim();
    let expected = if acc == Accumulate::None { dim } else { dim + 1 };
    if y.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "state length {} does not match flow dimension {expected}",
            y.len()
        )));
    }
    let dir = (to.0 - from.0, to.1 - from.1);
    let mut d1 = vec![0.0; dim];
    let mut d2 = vec![0.0; dim];
    let mut rhs = |s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let a1 = from.0 + s * dir.0;
        let a2 = from.1 + s * dir.1;
        let res = flow.partials(&y[..dim], a1, a2, &mut d1, &mut d2)?;
        for m in 0..dim {
            dy[m] = dir.0 * d1[m] + dir.1 * d2[m];
        }
        match acc {
            Accumulate::None => {}
            Accumulate::Pc => dy[dim] = res.pc(y[dim - 1]) * dir.1,
            Accumulate::A2Pc => dy[dim] = a2 * res.pc(y[dim - 1]) * dir.1,
        }
        Ok(())
    };
    let mut solver = Solver::new(settings, y.len());
    let mut s = 0.0;
    for &stop in stops {
        solver.integrate(&mut rhs, s, stop, y)?;
        s = stop;
        let at = (from.0 + s * dir.0, from.1 + s * dir.1);
        if !on_stop(s, at, y)? {
            break;
        }
    }
    Ok(())
}

/// Seeds at eps·target and walks the ray to `target`, returning the state.
pub(crate) fn ray_state<F: EndpointFlow + ?Sized>(
    flow: &F,
    target: (f64, f64),
    eps: f64,
    settings: Dop853,
) -> Result<Vec<f64>> {
    let start = (eps * target.0, eps * target.1);
    let mut y = flow.seed(start.0, start.1)?;
    follow(
        flow,
        &mut y,
        start,
        target,
        settings,
        Accumulate::None,
        &[1.0],
        |_, _, _| Ok(true),
    )?;
    Ok(y)
}

/// ∫ b P_c(r b, b) db along the ray (-r, 1), from the seed to a total interval
/// length `total` or until log J drops below `log_cutoff`.
pub(crate) fn ratio_integral<F: EndpointFlow + ?Sized>(
    flow: &F,
    r: f64,
    total: f64,
    eps: f64,
    log_cutoff: f64,
    settings: Dop853,
) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("gap ratio must be positive, got {r}")));
    }
    // parametrize by b; keep b·(1+r) = total at the far end
    let b_max = total / (1.0 + r);
    let b0 = eps * b_max;
    let from = (-r * b0, b0);
    let to = (-r * b_max, b_max);
    let mut y = flow.seed(from.0, from.1)?;
    y.push(0.0);
    let dim = flow.dim();
    let chunks = 24;
    let stops: Vec<f64> = (1..=chunks).map(|k| k as f64 / chunks as f64).collect();
    let mut value = 0.0;
    follow(flow, &mut y, from, to, settings, Accumulate::A2Pc, &stops, |_, _, y| {
        value = y[dim];
        Ok(y[dim - 1] > log_cutoff)
    })?;
    Ok(value)
}
