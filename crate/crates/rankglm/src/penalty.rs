//! Penalty families for the penalized composite likelihood: L1 plus the
//! folded-concave SCAD and MCP, each exposed through its value and its
//! local-linear-approximation (LLA) weight p'_lambda(|t|).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which penalty shape to apply coordinatewise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    L1,
    Scad,
    Mcp,
}

/// A penalty family with its level `lambda` and concavity constant
/// (SCAD `a`, MCP `gamma`; unused for L1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub family: PenaltyFamily,
    pub lambda: f64,
    pub concavity: f64,
}

impl PenaltyConfig {
    pub const SCAD_DEFAULT_A: f64 = 3.7;
    pub const MCP_DEFAULT_GAMMA: f64 = 3.0;

    pub fn l1(lambda: f64) -> Self {
        Self {
            family: PenaltyFamily::L1,
            lambda,
            concavity: 0.0,
        }
    }

    pub fn scad(lambda: f64) -> Self {
        Self::scad_with(lambda, Self::SCAD_DEFAULT_A)
    }

    pub fn scad_with(lambda: f64, a: f64) -> Self {
        Self {
            family: PenaltyFamily::Scad,
            lambda,
            concavity: a,
        }
    }

    pub fn mcp(lambda: f64) -> Self {
        Self::mcp_with(lambda, Self::MCP_DEFAULT_GAMMA)
    }

    pub fn mcp_with(lambda: f64, gamma: f64) -> Self {
        Self {
            family: PenaltyFamily::Mcp,
            lambda,
            concavity: gamma,
        }
    }

    /// Same family and concavity at a different level (path helper).
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidInput(format!(
                "penalty level must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        match self.family {
            PenaltyFamily::L1 => Ok(()),
            PenaltyFamily::Scad => {
                if self.concavity.is_finite() && self.concavity > 2.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "SCAD concavity a must exceed 2, got {}",
                        self.concavity
                    )))
                }
            }
            PenaltyFamily::Mcp => {
                if self.concavity.is_finite() && self.concavity > 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "MCP concavity gamma must exceed 1, got {}",
                        self.concavity
                    )))
                }
            }
        }
    }
}

/// Penalty value p_lambda(t): even, nondecreasing in |t|.
///
/// L1: `lambda |t|`. SCAD: linear to `lambda`, quadratic blend to
/// `a lambda`, then the constant `lambda^2 (a+1)/2`. MCP: `lambda|t| -
/// t^2/(2 gamma)` up to `gamma lambda`, then the constant
/// `gamma lambda^2 / 2`.
pub fn penalty_value(penalty: &PenaltyConfig, t: f64) -> Result<f64> {
    penalty.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "penalty argument must be finite, got {t}"
        )));
    }
    Ok(value_unchecked(penalty, t))
}

/// LLA weight p'_lambda(|t|) in [0, lambda]: `lambda` at t = 0, zero for
/// |t| >= a*lambda (SCAD) or |t| >= gamma*lambda (MCP), constant `lambda`
/// for L1.
pub fn penalty_lla_weight(penalty: &PenaltyConfig, t: f64) -> Result<f64> {
    penalty.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "penalty argument must be finite, got {t}"
        )));
    }
    Ok(weight_unchecked(penalty, t))
}

pub(crate) fn value_unchecked(penalty: &PenaltyConfig, t: f64) -> f64 {
    let a = t.abs();
    let l = penalty.lambda;
    match penalty.family {
        PenaltyFamily::L1 => l * a,
        PenaltyFamily::Scad => {
            let s = penalty.concavity;
            if a <= l {
                l * a
            } else if a <= s * l {
                (2.0 * s * l * a - a * a - l * l) / (2.0 * (s - 1.0))
            } else {
                l * l * (s + 1.0) * 0.5
            }
        }
        PenaltyFamily::Mcp => {
            let g = penalty.concavity;
            if a < g * l {
                l * a - a * a / (2.0 * g)
            } else {
                0.5 * g * l * l
            }
        }
    }
}

pub(crate) fn weight_unchecked(penalty: &PenaltyConfig, t: f64) -> f64 {
    let a = t.abs();
    let l = penalty.lambda;
    match penalty.family {
        PenaltyFamily::L1 => l,
        PenaltyFamily::Scad => {
            let s = penalty.concavity;
            if a <= l {
                l
            } else if a < s * l {
                (s * l - a) / (s - 1.0)
            } else {
                0.0
            }
        }
        PenaltyFamily::Mcp => {
            let g = penalty.concavity;
            if a < g * l {
                l - a / g
            } else {
                0.0
            }
        }
    }
}
