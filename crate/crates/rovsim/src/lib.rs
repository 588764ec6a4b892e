//! File formats and run orchestration for the `rovsim` CLI: TOML scenario
//! files, the tag-map text format, and the CSV episode traces. All outputs
//! are byte-stable for a given scenario and seed.

pub mod config;
pub mod output;
pub mod tagmap;

use std::path::Path;

use anyhow::{Context, Result};
use rovsim_core::sim::{compare_controllers, run_episode, ComparisonReport, EpisodeResult};
use rovsim_core::Scenario;

/// Runs one episode and writes `episode.csv` + `summary.csv` into `out_dir`.
pub fn simulate_to_dir(scenario: &Scenario, out_dir: &Path) -> Result<EpisodeResult> {
    let result = run_episode(scenario).map_err(|e| anyhow::anyhow!("episode failed: {e}"))?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    output::write_episode_csv(&out_dir.join("episode.csv"), &result)?;
    output::write_summary_csv(&out_dir.join("summary.csv"), &result)?;
    Ok(result)
}

/// Runs both controllers on the identical scenario and writes one trace pair
/// per controller.
pub fn compare_to_dir(scenario: &Scenario, out_dir: &Path) -> Result<ComparisonReport> {
    let report =
        compare_controllers(scenario).map_err(|e| anyhow::anyhow!("comparison failed: {e}"))?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    output::write_episode_csv(&out_dir.join("nfc_episode.csv"), &report.nfc)?;
    output::write_summary_csv(&out_dir.join("nfc_summary.csv"), &report.nfc)?;
    output::write_episode_csv(&out_dir.join("pid_episode.csv"), &report.pid)?;
    output::write_summary_csv(&out_dir.join("pid_summary.csv"), &report.pid)?;
    Ok(report)
}
