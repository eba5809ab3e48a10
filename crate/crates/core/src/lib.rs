//! A laboratory for stochastic gradient methods.
//!
//! The crate implements SGD, momentum SGD (mSGD), stochastic heavy ball (SHB)
//! and AdaGrad in norm and coordinate form, a catalog of closed-form
//! objectives with exact stationary sets, stochastic gradient oracles, and a
//! diagnostics engine that checks convergence, decay rates and summability
//! properties on Monte Carlo ensembles.

pub mod assumptions;
pub mod cli;
pub mod diagnostics;
pub mod objectives;
pub mod optimizers;
pub mod oracles;
pub mod param;
pub mod rng;
pub mod schedule;
pub mod status;

pub use objectives::{catalog, Objective};
pub use optimizers::Algorithm;
pub use oracles::{GradientOracle, OracleKind};
pub use param::{ParamVector, Region};
pub use rng::{rng_substream, RngStream};
pub use schedule::StepSchedule;
pub use status::{Outcome, RunStatus};
