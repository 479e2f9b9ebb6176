//! Scenario files, the run pipeline and the `wgf` command line.

mod config;
mod run;
mod scenario;

pub use run::{describe_equilibria, run, run_suite, scenario_equilibria, scenario_files, RunOptions, RunSummary};
pub use scenario::{
    parse_metric, parse_scenario, parse_scenario_str, Check, Dynamics, EquilibriaSpec, InitialDatum, MemberSpec,
    RateBound, Scenario,
};
