//! Synthetic data under multiplicative noise and Monte Carlo experiments.

pub mod experiment;
pub mod generate;
pub mod rng;
pub mod summary;

pub use experiment::{
    run_misspecified, run_regime, Execution, ExperimentReport, Generator, MisspecifiedSpec, OutputSystem, Regime,
    RegimeSpec, ReplicationEstimate, Scale, ScaleSummary, TruthMetrics,
};
pub use generate::{gen_inputs, gen_noise, gen_noisy_outputs, InputLaw, NoiseModel};
pub use rng::{Purpose, StreamId};
