//! Two-tier zero test: exact normal form first, then randomized evaluation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::eval::{EvalError, RatEvaluator};
use super::node::Expr;
use crate::par::{map_range, Execution};
use crate::sampling::{stream_rng, QuasiRandom};

/// Axis-aligned box of symbol values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SampleBox {
    pub fn new(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> SampleBox {
        assert_eq!(names.len(), lower.len());
        assert_eq!(names.len(), upper.len());
        SampleBox { names, lower, upper }
    }

    /// The same interval `[lo, hi]` for every name.
    pub fn cube<S: AsRef<str>>(names: &[S], lo: f64, hi: f64) -> SampleBox {
        let n = names.len();
        SampleBox::new(
            names.iter().map(|s| s.as_ref().to_string()).collect(),
            vec![lo; n],
            vec![hi; n],
        )
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| 0.5 * (self.lower[i] + self.upper[i]))
            .collect()
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.lower[i] + u[i] * self.width(i))
            .collect()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .enumerate()
            .all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Options for [`is_zero`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroTest {
    pub trials: usize,
    /// Relative to the magnitude of the terms of the numerator.
    pub tolerance: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest {
            trials: 64,
            tolerance: 1e-10,
            seed: 0,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ZeroVerdict {
    /// The normal form is literally zero.
    Zero,
    /// Nonzero value at `witness` (coordinates in the order of the box names).
    NonZero { witness: Vec<f64>, value: f64 },
    /// Small at every evaluated point, or not evaluable.
    Unknown {
        max_relative: f64,
        max_absolute: f64,
        evaluated: usize,
        trials: usize,
        diagnostic: Option<String>,
    },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero)
    }

    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroVerdict::NonZero { .. })
    }

    /// Zero, or numerically zero at every trial point.
    pub fn is_zero_like(&self) -> bool {
        match self {
            ZeroVerdict::Zero => true,
            ZeroVerdict::NonZero { .. } => false,
            ZeroVerdict::Unknown {
                evaluated, trials, ..
            } => *evaluated == *trials && *trials > 0,
        }
    }
}

enum Trial {
    Small { rel: f64, abs: f64 },
    Large { witness: Vec<f64>, value: f64 },
    Failed(EvalError),
}

const JITTER_ATTEMPTS: usize = 4;

fn run_trial(e: &Expr, sbox: &SampleBox, seq: &QuasiRandom, opts: &ZeroTest, i: usize) -> Trial {
    let rat = e.rat();
    let base = sbox.from_unit(&seq.point(i));
    let mut rng = stream_rng(opts.seed, i as u64 + 1);
    let mut last_err = None;
    for attempt in 0..=JITTER_ATTEMPTS {
        let z: Vec<f64> = if attempt == 0 {
            base.clone()
        } else {
            // step off a removable singularity by a fixed fraction of the box
            (0..sbox.dim())
                .map(|k| {
                    let step = 1e-3 * sbox.width(k) * attempt as f64;
                    let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    (base[k] + dir * step).clamp(sbox.lower[k], sbox.upper[k])
                })
                .collect()
        };
        let lookup = |s: &str| sbox.index_of(s).map(|k| z[k]);
        let mut ev = RatEvaluator::new(&lookup);
        let res = ev
            .denominator(rat)
            .and_then(|den| ev.poly(&rat.num).map(|(n, scale)| (n, scale, den)));
        match res {
            Ok((n, scale, den)) if n.is_finite() && scale.is_finite() && den.is_finite() => {
                let rel = if scale > 0.0 { n.abs() / scale } else { 0.0 };
                if n.abs() > opts.tolerance * scale {
                    return Trial::Large {
                        witness: z,
                        value: n / den,
                    };
                }
                return Trial::Small { rel, abs: (n / den).abs() };
            }
            Ok(_) => {
                last_err = Some(EvalError::Domain {
                    subterm: e.to_string(),
                    reason: "non-finite value".into(),
                })
            }
            Err(err @ EvalError::MissingSymbol(_)) => return Trial::Failed(err),
            Err(err) => last_err = Some(err),
        }
    }
    Trial::Failed(last_err.expect("at least one attempt"))
}

/// Decides whether `e` vanishes identically on `sbox`.
///
/// Deterministic for fixed options; the verdict does not depend on the
/// execution mode.
pub fn is_zero(e: &Expr, sbox: &SampleBox, opts: &ZeroTest) -> ZeroVerdict {
    if e.is_structurally_zero() {
        return ZeroVerdict::Zero;
    }
    let trials = opts.trials.max(1);
    let seq = QuasiRandom::new(sbox.dim(), opts.seed);
    let results: Vec<Trial> = match opts.execution {
        Execution::Sequential => {
            let mut out = Vec::new();
            for i in 0..trials {
                let t = run_trial(e, sbox, &seq, opts, i);
                let stop = matches!(t, Trial::Large { .. } | Trial::Failed(EvalError::MissingSymbol(_)));
                out.push(t);
                if stop {
                    break;
                }
            }
            out
        }
        Execution::Parallel => map_range(Execution::Parallel, trials, |i| {
            run_trial(e, sbox, &seq, opts, i)
        }),
    };
    let (mut max_rel, mut max_abs, mut evaluated) = (0.0f64, 0.0f64, 0usize);
    let mut diagnostic = None;
    for t in results {
        match t {
            Trial::Large { witness, value } => return ZeroVerdict::NonZero { witness, value },
            Trial::Small { rel, abs } => {
                evaluated += 1;
                max_rel = max_rel.max(rel);
                max_abs = max_abs.max(abs);
            }
            Trial::Failed(err) => {
                let missing = matches!(err, EvalError::MissingSymbol(_));
                if diagnostic.is_none() {
                    diagnostic = Some(err.to_string());
                }
                if missing {
                    break;
                }
            }
        }
    }
    if evaluated > 0 && evaluated == trials {
        diagnostic = None;
    }
    ZeroVerdict::Unknown {
        max_relative: max_rel,
        max_absolute: max_abs,
        evaluated,
        trials,
        diagnostic,
    }
}
