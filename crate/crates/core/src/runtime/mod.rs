//! Work-stealing task runtime with per-task placement hints.

mod pool;
mod queue;
mod steal;

pub use pool::{hardware_concurrency, PoolError, PoolStats, Scope, TaskCtx, TaskPool};
pub use queue::WorkQueue;
pub use steal::{steal_orders, StealPolicy};
