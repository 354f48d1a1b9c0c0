use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{run, RunSummary};
use crate::error::ConfigError;
use crate::policy::PolicyKind;

/// Name of the variable capping run-level parallelism.
pub const THREADS_ENV: &str = "MEQC_SIM_THREADS";

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub summary: RunSummary,
}

/// Worker count from `MEQC_SIM_THREADS`, or `None` to use every core.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Every (value, policy, seed) combination, in that nesting order.
pub fn sweep(
    config: &ExperimentConfig,
    path: &str,
    values: &[f64],
    policies: &[PolicyKind],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, ConfigError> {
    sweep_with_threads(config, path, values, policies, seeds, thread_cap())
}

/// As [`sweep`] with an explicit worker count (`Some(1)` runs serially).
pub fn sweep_with_threads(
    config: &ExperimentConfig,
    path: &str,
    values: &[f64],
    policies: &[PolicyKind],
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<Vec<SweepRow>, ConfigError> {
    let configs = values
        .iter()
        .map(|&v| config.with_param(path, v))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, PolicyKind, u64)> = (0..values.len())
        .flat_map(|i| {
            policies
                .iter()
                .flat_map(move |&p| seeds.iter().map(move |&s| (i, p, s)))
        })
        .collect();
    let exec = |&(i, p, s): &(usize, PolicyKind, u64)| SweepRow {
        parameter: path.to_string(),
        value: values[i],
        summary: run(&configs[i], p, s).0,
    };
    Ok(run_jobs(&jobs, exec, threads))
}

/// Map `f` over `jobs`, in parallel unless `threads == Some(1)`. Output
/// order always follows input order.
pub fn run_jobs<J: Sync, T: Send>(
    jobs: &[J],
    f: impl Fn(&J) -> T + Sync,
    threads: Option<usize>,
) -> Vec<T> {
    if threads == Some(1) || jobs.len() <= 1 {
        return jobs.iter().map(f).collect();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| jobs.par_iter().map(&f).collect()),
        Err(_) => jobs.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::run;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.world.num_devices = 2;
        c.horizon_slots = 5;
        c
    }

    #[test]
    fn cardinality_and_order() {
        let cfg = small();
        let pols = [PolicyKind::LocalOnly, PolicyKind::Random];
        let rows = sweep_with_threads(
            &cfg,
            "world.tx_power_max_dbm",
            &[0.05, 0.4, 1.0],
            &pols,
            &[1, 2],
            Some(2),
        )
        .unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[0].value, 0.05);
        assert_eq!(rows[0].summary.policy, "local-only");
        assert_eq!(rows[3].summary.policy, "random");
        assert_eq!(rows[3].summary.seed, 2);
        assert_eq!(rows[11].value, 1.0);
    }

    #[test]
    fn parallel_equals_serial() {
        let cfg = small();
        let pols = [PolicyKind::LyapunovExact, PolicyKind::Random];
        let a =
            sweep_with_threads(&cfg, "dpp.delta", &[0.1, 0.7], &pols, &[1, 2, 3], Some(1)).unwrap();
        let b =
            sweep_with_threads(&cfg, "dpp.delta", &[0.1, 0.7], &pols, &[1, 2, 3], Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_value_equals_plain_run() {
        let cfg = small();
        let rows = sweep_with_threads(
            &cfg,
            "dpp.v_param",
            &[10.0],
            &[PolicyKind::LyapunovExact],
            &[4],
            None,
        )
        .unwrap();
        assert_eq!(rows[0].summary, run(&cfg, PolicyKind::LyapunovExact, 4).0);
    }

    #[test]
    fn unknown_path_lists_valid_ones() {
        let err = sweep(
            &small(),
            "dpp.vparam",
            &[1.0],
            &[PolicyKind::LocalOnly],
            &[1],
        )
        .unwrap_err();
        assert!(err.to_string().contains("dpp.v_param"));
    }
}
