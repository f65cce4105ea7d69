//! Marginal likelihoods of the local binomial experiment on one node.
//!
//! Given the prior mean `theta0` of a node's split and a Beta precision `nu`,
//! integrating the split probability out of `n_left ~ Binomial(n, theta)`
//! leaves a ratio of gamma functions. Everything here is returned as a
//! natural log.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_rising, log_sum_exp};

/// Beta precision `nu > 0`, or complete shrinkage (`nu = inf`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Precision {
    Finite(f64),
    Infinite,
}

impl Precision {
    pub fn finite(nu: f64) -> Result<Self> {
        if nu > 0.0 && nu.is_finite() {
            Ok(Precision::Finite(nu))
        } else {
            Err(Error::InvalidHyperParams(format!(
                "precision must be positive and finite, got {nu}"
            )))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Precision::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            Precision::Finite(v) => *v,
            Precision::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SplitCounts {
    pub left: u64,
    pub right: u64,
}

impl SplitCounts {
    pub fn new(left: u64, right: u64) -> Self {
        Self { left, right }
    }

    pub fn total(&self) -> u64 {
        self.left + self.right
    }
}

/// One mixture component of the precision prior: `log10(nu)` uniform on
/// `[log10_lo, log10_hi)`, discretized into equally spaced midpoints, or a
/// point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct StateComponent {
    log10_lo: f64,
    log10_hi: f64,
    quad_points: Vec<Precision>,
    point_mass_at_infinity: bool,
}

impl StateComponent {
    /// `h` midpoint nodes on `[log10_lo, log10_hi)`.
    pub fn log10_uniform(log10_lo: f64, log10_hi: f64, h: usize) -> Result<Self> {
        if !(log10_lo < log10_hi) || !log10_lo.is_finite() || !log10_hi.is_finite() {
            return Err(Error::InvalidHyperParams(format!(
                "component support [{log10_lo}, {log10_hi}) is empty or unbounded"
            )));
        }
        if h == 0 {
            return Err(Error::InvalidHyperParams(
                "quadrature needs at least one point".into(),
            ));
        }
        let step = (log10_hi - log10_lo) / h as f64;
        let quad_points = (0..h)
            .map(|j| Precision::finite(10f64.powf(log10_lo + (j as f64 + 0.5) * step)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            log10_lo,
            log10_hi,
            quad_points,
            point_mass_at_infinity: false,
        })
    }

    /// Point mass at a single finite precision.
    pub fn fixed(nu: f64) -> Result<Self> {
        let p = Precision::finite(nu)?;
        Ok(Self {
            log10_lo: nu.log10(),
            log10_hi: nu.log10(),
            quad_points: vec![p],
            point_mass_at_infinity: false,
        })
    }

    /// The complete-shrinkage state.
    pub fn infinity() -> Self {
        Self {
            log10_lo: f64::INFINITY,
            log10_hi: f64::INFINITY,
            quad_points: vec![Precision::Infinite],
            point_mass_at_infinity: true,
        }
    }

    pub fn log10_lo(&self) -> f64 {
        self.log10_lo
    }

    pub fn log10_hi(&self) -> f64 {
        self.log10_hi
    }

    pub fn quad_points(&self) -> &[Precision] {
        &self.quad_points
    }

    pub fn is_point_mass_at_infinity(&self) -> bool {
        self.point_mass_at_infinity
    }
}

pub(crate) fn check_theta0(theta0: f64) -> Result<()> {
    if theta0 > 0.0 && theta0 < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTheta0(theta0))
    }
}

/// `ln M(theta0, nu)` for the split `counts`.
pub fn log_m(theta0: f64, nu: Precision, counts: SplitCounts) -> Result<f64> {
    check_theta0(theta0)?;
    Ok(log_m_unchecked(theta0, nu, counts))
}

pub(crate) fn log_m_unchecked(theta0: f64, nu: Precision, counts: SplitCounts) -> f64 {
    let SplitCounts { left, right } = counts;
    match nu {
        Precision::Infinite => {
            let mut v = 0.0;
            if left > 0 {
                v += left as f64 * theta0.ln();
            }
            if right > 0 {
                v += right as f64 * (1.0 - theta0).ln();
            }
            v
        }
        // Gamma(a + k) / Gamma(a) is a rising factorial for integer k.
        Precision::Finite(nu) => {
            ln_rising(theta0 * nu, left) + ln_rising((1.0 - theta0) * nu, right)
                - ln_rising(nu, left + right)
        }
    }
}

/// `ln` of the quadrature average of `M(theta0, nu)` over the component.
pub fn log_m_component(theta0: f64, comp: &StateComponent, counts: SplitCounts) -> Result<f64> {
    check_theta0(theta0)?;
    Ok(log_m_component_unchecked(theta0, comp, counts))
}

pub(crate) fn log_m_component_unchecked(
    theta0: f64,
    comp: &StateComponent,
    counts: SplitCounts,
) -> f64 {
    if counts.total() == 0 {
        return 0.0;
    }
    let quad = comp.quad_points();
    if quad.len() == 1 {
        return log_m_unchecked(theta0, quad[0], counts);
    }
    let terms: Vec<f64> = quad
        .iter()
        .map(|&nu| log_m_unchecked(theta0, nu, counts))
        .collect();
    log_sum_exp(&terms) - (quad.len() as f64).ln()
}

/// Posterior quadrature weights on `nu` within each component, given the
/// component was chosen: `w_h` proportional to `M(theta0, nu_h)`.
pub fn posterior_nu_weights(
    theta0: f64,
    comps: &[StateComponent],
    counts: SplitCounts,
) -> Result<Vec<Vec<f64>>> {
    check_theta0(theta0)?;
    Ok(comps
        .iter()
        .map(|c| {
            let logs: Vec<f64> = c
                .quad_points()
                .iter()
                .map(|&nu| log_m_unchecked(theta0, nu, counts))
                .collect();
            normalize_log_weights(&logs)
        })
        .collect())
}

pub(crate) fn normalize_log_weights(logs: &[f64]) -> Vec<f64> {
    let total = log_sum_exp(logs);
    logs.iter().map(|l| (l - total).exp()).collect()
}
