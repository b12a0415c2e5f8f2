//! Quickest change detection when only one of K channels can be observed
//! per step.
//!
//! Each step a [procedure](procedures) picks one channel, draws one
//! observation, updates a detection statistic and decides whether to alarm.
//! The [harness] estimates mean time to false alarm and detection delay by
//! Monte Carlo.
//!
//! Runnable examples live in `examples/`:
//!
//! | example | shows |
//! |---|---|
//! | `channel_models` | distributions, LLR kernels, KL and the sub-Gaussian constant |
//! | `cusum_detectors` | global and per-action CuSum |
//! | `glr_detector` | Bernoulli GLR on raw [0, 1] observations |
//! | `ucb_policy` | the restarted UCB selection rule |
//! | `single_trial` | one trial with a per-step trace |
//! | `mtfa_delay_sweep` | the threshold sweep behind the CSV output |
//! | `martingale_oracle` | the Shiryaev–Roberts dominance check |
//! | `glr_on_beta` | GLR procedures against Beta channels |
//! | `cost_per_step` | wall-clock cost per step |

pub mod channels;
pub mod cli;
pub mod detectors;
mod error;
pub mod harness;
pub mod policies;
pub mod procedures;
pub mod scenario;

pub use error::{Error, Result};
