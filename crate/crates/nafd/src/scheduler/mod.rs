//! Grouping of waiting users into time slots so that uplink-to-downlink
//! interference is either weak or strong enough to be decoded and removed.
//!
//! An uplink user `i` is cancellable at downlink user `k` when `k` can decode
//! it at least as well as the RAUs do. The objective sums
//! `log2(1 + gamma_u)` over the pairs that stay.

mod exhaustive;
mod ga;
mod instance;
mod partition;

pub use exhaustive::{exhaustive_schedule, partition_count, ExhaustiveOutcome, EXHAUSTIVE_LIMIT};
pub use ga::{ga_schedule, ga_schedule_from, GaOutcome, GaParams};
pub use instance::{
    iud_objective, partition_dl_rate, pool_config, Evaluator, GroupEval, SchedulingInstance,
};
pub use partition::{random_schedule, Group, PoolShape, SchedulingPartition, MAX_POOL};
