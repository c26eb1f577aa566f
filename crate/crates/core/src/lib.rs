//! Discretized semiclassical operators on half-spaces: symbols and boundary
//! kernels, their hbar-scaled representations, Toeplitz comparisons, and the
//! experiment harness behind the `semiclass` command.

// Range checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod operators;
pub mod symbolics;
pub mod toeplitz;

pub use error::{Error, Result};
pub use harness::{run_experiment, ConvergenceReport, ExperimentConfig};
pub use operators::{DiscreteOperator, NormEstimate, NormMethod, NormOptions};
pub use symbolics::{BoundaryKernel, Coord, Domain, Grid, Symbol};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "SEMICLASS_THREADS";

/// Size the global worker pool from `SEMICLASS_THREADS` (default: machine
/// parallelism) and pin the dense linear algebra to one thread so results
/// do not depend on scheduling. Returns the pool size; later calls keep the
/// first pool.
pub fn init_threads() -> Result<usize> {
    faer::set_global_parallelism(faer::Par::Seq);
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| {
            Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))
        })?),
        Err(_) => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = requested {
        builder = builder.num_threads(n);
    }
    // A pool that already exists (e.g. built by an earlier call) is kept.
    let _ = builder.build_global();
    Ok(rayon::current_num_threads())
}
