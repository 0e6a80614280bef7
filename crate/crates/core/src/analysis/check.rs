use serde::{Deserialize, Serialize};

use crate::expr::{Expr, ZeroTest, ZeroVerdict};
use crate::geometry::{Chart, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CheckStatus {
    /// Structurally zero.
    Zero,
    /// Below the zero-test tolerance at every sample.
    NumericZero { max_relative: f64, max_absolute: f64 },
    NonZero {
        component: usize,
        witness: Vec<f64>,
        value: f64,
    },
    Unknown { diagnostic: String },
    /// The quantity could not be formed.
    Failed { diagnostic: String },
}

/// A named identity check and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(flatten)]
    pub status: CheckStatus,
}

impl Check {
    pub fn passed(&self) -> bool {
        matches!(self.status, CheckStatus::Zero | CheckStatus::NumericZero { .. })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.status, CheckStatus::Zero)
    }

    pub fn failed(name: impl Into<String>, diagnostic: impl ToString) -> Check {
        Check {
            name: name.into(),
            status: CheckStatus::Failed {
                diagnostic: diagnostic.to_string(),
            },
        }
    }
}

fn merge(status: CheckStatus, component: usize, v: ZeroVerdict) -> CheckStatus {
    match (status, v) {
        (s @ (CheckStatus::NonZero { .. } | CheckStatus::Unknown { .. } | CheckStatus::Failed { .. }), _) => s,
        (_, ZeroVerdict::NonZero { witness, value }) => CheckStatus::NonZero {
            component,
            witness,
            value,
        },
        (s, ZeroVerdict::Zero) => s,
        (
            s,
            v @ ZeroVerdict::Unknown {
                max_relative,
                max_absolute,
                ..
            },
        ) => {
            if !v.is_zero_like() {
                return CheckStatus::Unknown {
                    diagnostic: format!("component {component}: {v:?}"),
                };
            }
            match s {
                CheckStatus::NumericZero {
                    max_relative: r,
                    max_absolute: a,
                } => CheckStatus::NumericZero {
                    max_relative: r.max(max_relative),
                    max_absolute: a.max(max_absolute),
                },
                _ => CheckStatus::NumericZero {
                    max_relative,
                    max_absolute,
                },
            }
        }
    }
}

/// Zero checks on a list of scalar expressions.
pub fn check_zero(name: impl Into<String>, chart: &Chart, exprs: &[Expr], zero: &ZeroTest) -> Check {
    let mut status = CheckStatus::Zero;
    for (i, e) in exprs.iter().enumerate() {
        if e.is_structurally_zero() {
            continue;
        }
        status = merge(status, i, chart.zero_verdict(e, zero));
        if matches!(status, CheckStatus::NonZero { .. } | CheckStatus::Unknown { .. }) {
            break;
        }
    }
    Check {
        name: name.into(),
        status,
    }
}

/// Zero check on every component of a field.
pub fn check_field_zero(name: impl Into<String>, x: &VectorField, zero: &ZeroTest) -> Check {
    check_zero(name, x.chart(), x.components(), zero)
}
