//! Instance generation, multi-run benchmarking and image recovery for the
//! synthetic sparse linear regression experiments.

mod bench;
mod instance;
mod spec;

pub use bench::{
    instance_for_run, psnr, recover_image, run_bench, write_bench, write_recovery, BenchResult, MethodAggregate,
    Recovery, RunOutcome,
};
pub use instance::{derive_seed, gen_image_instance, gen_instance, splitmix64, GrayImage, Instance};
pub use spec::{ExperimentSpec, Prior};
