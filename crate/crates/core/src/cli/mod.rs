//! Configuration, file formats and the command implementations used by the
//! `sdiqrng` binary.

pub mod commands;
pub mod config;
pub mod formats;

pub use commands::{
    block_mean_photon, cmd_certify, cmd_extract, cmd_figure, cmd_gen_seed, cmd_simulate,
    cmd_witness, figure_csv, run_blocks, CertifyPaths, CliError, CliResult, ExtractPaths,
    Failure, Figure,
};
pub use config::{RunConfig, Threshold};
