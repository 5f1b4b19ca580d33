//! Gauss-Legendre rules on `[0, 1]` in the variable `p = sin^2(theta)`.
//!
//! The substitution turns the endpoint singularities `p^{-1/2}` and
//! `(1-p)^{-1/2}` into smooth integrands: `dp = 2 sin(theta) cos(theta) dtheta`.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{domain, Result};

pub const DEFAULT_NODES: usize = 64;

/// Nodes `p_j` in `(0, 1)` and weights `w_j` with `int_0^1 g(p) dp ~ sum_j w_j g(p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSquaredRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SineSquaredRule {
    pub fn new(count: usize) -> Result<Self> {
        let Some(degree) = NonZeroUsize::new(count) else {
            return domain("quadrature needs at least one node");
        };
        let rule = GaussLegendre::new(degree);
        let half = FRAC_PI_2 / 2.0;
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| {
                let theta = half * (x + 1.0);
                let (s, c) = theta.sin_cos();
                (s * s, half * w * 2.0 * s * c)
            })
            .unzip();
        Ok(SineSquaredRule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| w * g(p)).sum()
    }
}

/// `int_0^1 dp / sqrt(p (1 - p))`, which equals `pi`.
pub fn arcsine_integral(count: usize) -> Result<f64> {
    Ok(SineSquaredRule::new(count)?.integrate(|p| 1.0 / (p * (1.0 - p)).sqrt()))
}
