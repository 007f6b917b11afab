//! Gauss-Legendre rules mapped onto finite intervals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval [a1, a2] of eigenphases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a1: f64,
    pub a2: f64,
}

impl Interval {
    /// Any ordered pair with a1 ≤ a2. A degenerate interval is allowed.
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite()) || a1 > a2 {
            return Err(Error::InvalidInterval { a1, a2 });
        }
        Ok(Self { a1, a2 })
    }

    /// An interval around the conditioned eigenphase at 0: a1 < 0 < a2, a2 - a1 < 2π.
    pub fn janossy(a1: f64, a2: f64) -> Result<Self> {
        let iv = Self::new(a1, a2)?;
        iv.check_janossy()?;
        Ok(iv)
    }

    pub fn check_janossy(&self) -> Result<()> {
        let degenerate = self.a1 == 0.0 && self.a2 == 0.0;
        if degenerate {
            return Ok(());
        }
        if !(self.a1 < 0.0 && self.a2 > 0.0 && self.a2 - self.a1 < 2.0 * std::f64::consts::PI) {
            return Err(Error::InvalidInterval {
                a1: self.a1,
                a2: self.a2,
            });
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.a2 - self.a1
    }
}

/// Nodes and weights of an m-point rule on a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl Quadrature {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// m-point Gauss-Legendre rule on `interval`, nodes in increasing order.
pub fn gauss_legendre(m: usize, interval: Interval) -> Result<Quadrature> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature order must be at least 2, got {m}"
        )));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(m).expect("m >= 2"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let half = 0.5 * interval.length();
    let mid = 0.5 * (interval.a1 + interval.a2);
    let (nodes, weights) = pairs
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .unzip();
    Ok(Quadrature {
        nodes,
        weights,
        order: m,
    })
}
