//! Report artifacts: summary CSV, per-fold CSV, Markdown comparison tables,
//! grouped-bar data and multi-task improvement lines.

use std::path::Path;

use super::protocol::{ChannelSummary, ProtocolReport};
use super::EvalError;

/// `mean ± std` at three decimals.
pub fn format_pm(mean: f64, std: f64) -> String {
    format!("{mean:.3} ± {std:.3}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn write_csv(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn each_channel(reports: &[ProtocolReport]) -> impl Iterator<Item = (&ProtocolReport, &ChannelSummary)> {
    reports.iter().flat_map(|r| r.channels.iter().map(move |c| (r, c)))
}

/// One row per (model, density mode, channel), full precision.
pub fn report_csv(reports: &[ProtocolReport]) -> String {
    let rows = each_channel(reports)
        .map(|(r, c)| {
            vec![
                r.model.clone(),
                r.include_density.to_string(),
                c.channel.clone(),
                c.label.clone(),
                c.n_points.to_string(),
                c.rmse_mean.to_string(),
                c.rmse_std.to_string(),
                c.n_r2.to_string(),
                opt(c.r2_mean),
                opt(c.r2_std),
            ]
        })
        .collect();
    write_csv(
        &[
            "model", "density", "channel", "label", "n_points", "rmse_mean", "rmse_std", "n_r2", "r2_mean", "r2_std",
        ],
        rows,
    )
}

/// Every fold-level value behind the summaries.
pub fn folds_csv(reports: &[ProtocolReport]) -> String {
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.folds.iter().map(move |f| {
                vec![
                    r.model.clone(),
                    r.include_density.to_string(),
                    f.seed.to_string(),
                    f.fold.to_string(),
                    f.channel.clone(),
                    f.n_test.to_string(),
                    f.rmse.to_string(),
                    opt(f.r2),
                    f.cell.to_string(),
                ]
            })
        })
        .collect();
    write_csv(
        &["model", "density", "seed", "fold", "channel", "n_test", "rmse", "r2", "cell"],
        rows,
    )
}

/// Channel by model bar heights and error bars, one row per bar.
pub fn bars_csv(reports: &[ProtocolReport]) -> String {
    let rows = each_channel(reports)
        .map(|(r, c)| {
            vec![
                c.label.clone(),
                r.model.clone(),
                r.include_density.to_string(),
                c.rmse_mean.to_string(),
                c.rmse_std.to_string(),
            ]
        })
        .collect();
    write_csv(&["channel", "model", "density", "mean", "std"], rows)
}

/// One comparison table per channel, rows in report order.
pub fn table_markdown(reports: &[ProtocolReport]) -> String {
    let mut keys: Vec<(String, String)> = Vec::new();
    for (_, c) in each_channel(reports) {
        if !keys.iter().any(|k| k.0 == c.channel) {
            keys.push((c.channel.clone(), c.label.clone()));
        }
    }
    let mut out = String::new();
    for (key, label) in keys {
        out.push_str(&format!("### {label}\n\n| Model | Test RMSE | Test R² |\n|---|---|---|\n"));
        for r in reports {
            if let Some(c) = r.channel(&key) {
                let r2 = match (c.r2_mean, c.r2_std) {
                    (Some(m), Some(s)) => format_pm(m, s),
                    _ => "NA".to_string(),
                };
                out.push_str(&format!(
                    "| {} ({}) | {} | {} |\n",
                    r.model,
                    r.density_label(),
                    format_pm(c.rmse_mean, c.rmse_std),
                    r2
                ));
            }
        }
        out.push('\n');
    }
    out
}

fn is_single_task(model: &str) -> bool {
    model.starts_with("ST-")
}

/// Per density mode and channel, `(best ST - best MT) / best ST` on mean
/// RMSE, as a percentage. Needs at least one model of each kind.
pub fn improvements_csv(reports: &[ProtocolReport]) -> String {
    let mut rows = Vec::new();
    for density in [true, false] {
        let mut keys: Vec<String> = Vec::new();
        for (r, c) in each_channel(reports) {
            if r.include_density == density && !keys.contains(&c.channel) {
                keys.push(c.channel.clone());
            }
        }
        for key in keys {
            let best = |single: bool| {
                reports
                    .iter()
                    .filter(|r| r.include_density == density && is_single_task(&r.model) == single)
                    .filter_map(|r| r.channel(&key).map(|c| (r.model.clone(), c.rmse_mean)))
                    .fold(None, |acc: Option<(String, f64)>, x| match acc {
                        Some(a) if a.1 <= x.1 => Some(a),
                        _ => Some(x),
                    })
            };
            if let (Some(st), Some(mt)) = (best(true), best(false)) {
                let pct = if st.1 > 0.0 { (st.1 - mt.1) / st.1 * 100.0 } else { 0.0 };
                rows.push(vec![
                    key.clone(),
                    density.to_string(),
                    st.0,
                    st.1.to_string(),
                    mt.0,
                    mt.1.to_string(),
                    format!("{pct:.1}"),
                ]);
            }
        }
    }
    write_csv(
        &[
            "channel",
            "density",
            "best_st_model",
            "best_st_rmse",
            "best_mt_model",
            "best_mt_rmse",
            "percent_reduction",
        ],
        rows,
    )
}

pub const REPORT_FILES: [&str; 5] = ["report.csv", "folds.csv", "table.md", "bars.csv", "improvements.csv"];

/// Writes every artifact into `dir`.
pub fn write_reports(reports: &[ProtocolReport], dir: &Path) -> Result<(), EvalError> {
    if reports.is_empty() {
        return Err(EvalError::InvalidProtocol("no reports to write".into()));
    }
    std::fs::create_dir_all(dir)?;
    let bodies = [
        report_csv(reports),
        folds_csv(reports),
        table_markdown(reports),
        bars_csv(reports),
        improvements_csv(reports),
    ];
    for (name, body) in REPORT_FILES.iter().zip(bodies) {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FoldMetric;

    fn report(model: &str, density: bool, rmse: f64) -> ProtocolReport {
        ProtocolReport {
            model: model.into(),
            include_density: density,
            seeds: vec![0],
            k: 2,
            channels: vec![ChannelSummary {
                channel: "impact_h50:exp".into(),
                label: "log(h50) exp".into(),
                n_points: 2,
                rmse_mean: rmse,
                rmse_std: 0.0103,
                n_r2: 2,
                r2_mean: Some(0.705),
                r2_std: Some(0.011),
            }],
            folds: vec![FoldMetric {
                seed: 0,
                fold: 0,
                channel: "impact_h50:exp".into(),
                n_test: 3,
                rmse,
                r2: None,
                cell: 0,
            }],
        }
    }

    #[test]
    fn plus_minus_format() {
        assert_eq!(format_pm(0.2381, 0.0103), "0.238 ± 0.010");
    }

    #[test]
    fn single_row_table_matches_csv() {
        let reps = [report("MT-NN-sub2", false, 0.2381)];
        let md = table_markdown(&reps);
        let body: Vec<&str> = md.lines().filter(|l| l.starts_with("| MT")).collect();
        assert_eq!(body, ["| MT-NN-sub2 (molecular descriptors only) | 0.238 ± 0.010 | 0.705 ± 0.011 |"]);
        let csv = report_csv(&reps);
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let mean: f64 = row[5].parse().unwrap();
        let std: f64 = row[6].parse().unwrap();
        assert!(md.contains(&format_pm(mean, std)));
    }

    #[test]
    fn improvement_is_relative_to_best_single_task() {
        let reps = [
            report("ST-RF", true, 0.4),
            report("ST-NN", true, 0.5),
            report("MT-NN-all", true, 0.3),
        ];
        let csv = improvements_csv(&reps);
        assert!(csv.contains("impact_h50:exp,true,ST-RF,0.4,MT-NN-all,0.3,25.0"), "{csv}");
    }
}
