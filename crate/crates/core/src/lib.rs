//! Two-type decomposable branching processes in random environments.
//!
//! Type-1 particles reproduce under a constant, IID or finite-state Markovian
//! environment and may emit type-2 daughters; type-2 particles form a critical
//! single-type process with a fixed reproduction law. The crate provides
//!
//! * reproduction laws with analytic generating functions, moments and exact
//!   aggregate samplers ([`offspring`]),
//! * environment specifications, stationary distributions and regeneration
//!   decomposition ([`environment`]),
//! * trajectory simulation, the conditionally exact survival recursion and
//!   heavy-tail sampling of total-progeny statistics ([`process`]),
//! * the regeneration-embedded IID process and its per-cycle reproduction
//!   moments, in closed form and by a numerical-differentiation oracle
//!   ([`embedded`]),
//! * solvers and estimators for the asymptotic constants that govern
//!   survival-probability decay ([`asymptotics`]).
//!
//! All randomness flows through [`streams::StreamFactory`], which derives one
//! counter-based stream per (seed, purpose, replicate) so that results are
//! bit-identical regardless of worker count or scheduling.

pub mod asymptotics;
pub mod embedded;
pub mod environment;
pub mod error;
pub mod offspring;
pub mod process;
pub mod stats;
pub mod streams;

pub use environment::{EnvSequence, EnvironmentSpec, RegenerationDecomposition, TwoStateTauLaw};
pub use error::{Error, Result};
pub use offspring::{ExtinctionTable, MomentSet, OffspringLaw1, OffspringLaw2, Univariate};
pub use process::{
    Estimator, ExactSurvival, SurvivalEstimate, TailSamples, TailStatistic, TrajectoryRecord,
    POPULATION_CAP,
};
pub use streams::{Purpose, StreamFactory};
