//! Sequential linear bandits whose tasks share low-dimensional linear
//! representations within contexts that change without notice.
//!
//! * [`env`]: tasks, contexts, schedules, rewards and regret.
//! * [`agents`]: representation exploration (RE), transfer (RT), the cyclic
//!   SeqRepL scheme, outlier detection (OD) and the adaptive AdaRepL agent.
//! * [`baselines`]: per-task RE, oracle RT, random, tabular-Q and a small
//!   Deep-Q network.
//! * [`wcst`]: the Wisconsin Card Sorting Task as a linear bandit.
//! * [`harness`]: seeded experiment runner, aggregation and CSV/JSON export.

pub mod agents;
pub mod baselines;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod wcst;

pub use error::{Error, Result};
