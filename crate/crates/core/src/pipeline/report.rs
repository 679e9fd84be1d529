//! Text, CSV and JSON renderings of experiment results.
//!
//! Floats in CSV output use 12 significant digits so files written by
//! different backends can be compared at 1e-9.

use std::fmt::Write as _;
use std::io::Write;

use super::density_estimation::DensityCurves;
use super::experiment::{DetectionReport, ExperimentOutcome, StateKind};
use super::sweep::SweepRow;
use crate::error::Result;
use crate::features::EpochLoss;

/// `x` in scientific notation with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_rows<W: Write>(out: &mut W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Serialization(e.to_string())
}

/// Per-sample test rows: `id,density,truth,prediction`, plus `exact,delta`
/// when the report carries exact densities.
pub fn write_detection_csv<W: Write>(out: &mut W, report: &DetectionReport) -> Result<()> {
    let exact = report.exact_test.as_deref();
    let mut header = vec!["id", "density", "truth", "prediction"];
    if exact.is_some() {
        header.extend(["exact", "delta"]);
    }
    let rows = (0..report.densities_test.len()).map(|i| {
        let d = report.densities_test[i];
        let mut row = vec![
            i.to_string(),
            fmt_num(d),
            report.truth_test[i].as_str().to_string(),
            report.predictions[i].as_str().to_string(),
        ];
        if let Some(e) = exact {
            row.push(fmt_num(e[i]));
            row.push(fmt_num(d - e[i]));
        }
        row
    });
    write_rows(out, &header, rows)
}

pub fn write_density_csv<W: Write>(out: &mut W, curves: &DensityCurves) -> Result<()> {
    let rows = (0..curves.x.len()).map(|i| {
        vec![
            fmt_num(curves.x[i]),
            fmt_num(curves.estimate_pure[i]),
            fmt_num(curves.estimate_mixed[i]),
            fmt_num(curves.true_pdf[i]),
        ]
    });
    write_rows(out, &["x", "estimate_pure", "estimate_mixed", "true_pdf"], rows)
}

pub fn write_loss_csv<W: Write>(out: &mut W, history: &[EpochLoss]) -> Result<()> {
    let rows = history
        .iter()
        .map(|e| vec![e.epoch.to_string(), fmt_num(e.loss), fmt_num(e.best_loss)]);
    write_rows(out, &["epoch", "loss", "best_loss"], rows)
}

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> Result<()> {
    let header = [
        "embedding",
        "dim_features",
        "gamma",
        "state",
        "status",
        "accuracy_mean",
        "accuracy_std",
        "f1_mean",
        "f1_std",
        "auc_mean",
        "auc_std",
    ];
    let rows = rows.iter().map(|r| {
        let mut row = vec![
            r.embedding.as_str().to_string(),
            r.dim_features.to_string(),
            fmt_num(r.gamma),
            r.state.as_str().to_string(),
        ];
        match (&r.summary, &r.error) {
            (Some(s), _) => {
                row.push("ok".to_string());
                for m in [s.accuracy, s.f1_outlier, s.auc] {
                    row.push(fmt_num(m.mean));
                    row.push(fmt_num(m.std));
                }
            }
            (None, e) => {
                row.push(format!("error: {}", e.as_deref().unwrap_or("unknown")));
                row.extend(std::iter::repeat(String::new()).take(6));
            }
        }
        row
    });
    write_rows(out, &header, rows)
}

/// Aligned mean ± std table with one row per outcome.
pub fn format_table(outcomes: &[ExperimentOutcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<6} {:<17} {:<17} {:<17}",
        "Size", "Method", "F1 Score", "Accuracy", "AUC"
    );
    for o in outcomes {
        let cell = |m: super::experiment::MeanStd| format!("{:.4} ± {:.4}", m.mean, m.std);
        let _ = writeln!(
            s,
            "{:<10} {:<6} {:<17} {:<17} {:<17}",
            format!("{}:{}", o.embedding.as_str().to_uppercase(), o.dim_features),
            match o.state {
                StateKind::Pure => "Pure",
                StateKind::Mixed => "Mixed",
            },
            cell(o.summary.f1_outlier),
            cell(o.summary.accuracy),
            cell(o.summary.auc),
        );
    }
    s
}

/// Pretty-printed JSON of any serializable result.
pub fn to_json<S: serde::Serialize + ?Sized>(value: &S) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
