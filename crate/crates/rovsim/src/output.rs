//! CSV episode traces and summary records. Numbers are printed with 9
//! significant digits in scientific notation so files are byte-stable across
//! runs and platforms.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use rovsim_core::planner::InspectionPlan;
use rovsim_core::sim::{EpisodeResult, EpisodeRow};

pub const EPISODE_HEADER: &str = "t,truth_x,truth_y,truth_z,truth_psi,\
est_x,est_y,est_z,est_psi,ref_x,ref_y,ref_z,ref_psi,\
tau_fx,tau_fy,tau_fz,tau_mz,mode,saturated";

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn format_row(row: &EpisodeRow) -> String {
    let mut line = String::with_capacity(320);
    let fields = [
        row.t,
        row.truth.x,
        row.truth.y,
        row.truth.z,
        row.truth.psi,
        row.estimate.x,
        row.estimate.y,
        row.estimate.z,
        row.estimate.psi,
        row.reference.x,
        row.reference.y,
        row.reference.z,
        row.reference.psi,
        row.wrench[0],
        row.wrench[1],
        row.wrench[2],
        row.wrench[3],
    ];
    for f in fields {
        line.push_str(&num(f));
        line.push(',');
    }
    write!(line, "{},{}", row.mode, u8::from(row.saturated)).unwrap();
    line
}

pub fn format_episode_csv(result: &EpisodeResult) -> String {
    let mut out = String::with_capacity(result.rows.len() * 320 + 256);
    out.push_str(EPISODE_HEADER);
    out.push('\n');
    for row in &result.rows {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    out
}

pub fn write_episode_csv(path: &Path, result: &EpisodeResult) -> Result<()> {
    std::fs::write(path, format_episode_csv(result))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn format_summary_csv(result: &EpisodeResult) -> String {
    format!(
        "mae_x,mae_y,mae_z,mae_psi,saturation_fraction,completed,ticks\n{},{},{},{},{},{},{}\n",
        num(result.mae[0]),
        num(result.mae[1]),
        num(result.mae[2]),
        num(result.mae[3]),
        num(result.saturation_fraction),
        u8::from(result.completed),
        result.rows.len(),
    )
}

pub fn write_summary_csv(path: &Path, result: &EpisodeResult) -> Result<()> {
    std::fs::write(path, format_summary_csv(result))
        .with_context(|| format!("writing {}", path.display()))
}

/// Waypoint export: one `x,y,z,psi` row per plan vertex.
pub fn format_waypoints_csv(plan: &InspectionPlan) -> String {
    let mut out = String::from("x,y,z,psi\n");
    for wp in &plan.waypoints {
        out.push_str(&format!(
            "{},{},{},{}\n",
            num(wp.x),
            num(wp.y),
            num(wp.z),
            num(wp.psi)
        ));
    }
    out
}

pub fn write_waypoints_csv(path: &Path, plan: &InspectionPlan) -> Result<()> {
    std::fs::write(path, format_waypoints_csv(plan))
        .with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(0.1), "1.00000000e-1");
        assert_eq!(num(-123.456), "-1.23456000e2");
        assert_eq!(num(0.0), "0.00000000e0");
    }
}
