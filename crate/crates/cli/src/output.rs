use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use conformal_stl::pipeline::{ExperimentReport, MetricSummary};

/// Writes `bytes` to a sibling temporary file and renames it into place,
/// so a failed run never leaves a truncated output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn cell(s: &MetricSummary, digits: usize) -> String {
    match s.two_sigma {
        Some(t) => format!("{:.*} ± {:.*}", digits, s.mean, digits, t),
        None => format!("{:.*} ± n/a", digits, s.mean),
    }
}

const HEADERS: [&str; 9] = [
    "Trial",
    "Error rate (nonconformal)",
    "Error rate (conformal)",
    "Efficiency (conformal)",
    "Trivial rate",
    "Mean l",
    "Mean h",
    "Negative %",
    "Exec time (s)",
];

/// Text table with one row per report, mean ± 2σ per column.
pub fn results_table(rows: &[(String, &ExperimentReport)]) -> String {
    let mut cells: Vec<Vec<String>> = vec![HEADERS.iter().map(|h| h.to_string()).collect()];
    for (name, r) in rows {
        let a = &r.aggregate;
        cells.push(vec![
            name.clone(),
            a.error_rate_nonconformal.as_ref().map_or_else(|| "N/A".to_string(), |s| cell(s, 3)),
            cell(&a.error_rate_conformal, 3),
            cell(&a.efficiency, 3),
            format!("{:.1}%", 100.0 * a.trivial_rate),
            cell(&a.mean_l, 3),
            cell(&a.mean_h, 3),
            cell(&a.negative_percentage, 1),
            cell(&r.exec_time, 2),
        ]);
    }
    let widths: Vec<usize> = (0..HEADERS.len())
        .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}", w = *w))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}
