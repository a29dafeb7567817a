use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{lack_of_fit, pure_error, rmse};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{Fitted, FittedModel, ModelFamily, ModelSpec};
use crate::scalar::Scalar;

/// Column order of the report: pure error, then one column per family in
/// [`ModelFamily::ALL`] order.
pub const COLUMNS: [&str; 6] = ["Pure error", "Quadratic", "GAM", "LOESS", "Isotropic", "Anisotropic"];

const SUBHEADINGS: [&str; 6] = ["", "regression", "splines", "local linear", "kernel", "kernel"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Training,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub kind: RowKind,
    /// One entry per [`COLUMNS`]; `None` where the model was not run or
    /// pure error is undefined.
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LackOfFitRow {
    pub dataset: String,
    pub model: ModelFamily,
    pub parameters: usize,
    pub f_stat: f64,
    pub df_lof: usize,
    pub df_pe: usize,
    pub p_value: f64,
    /// The parameter count is nominal, so the p-value is only descriptive.
    pub descriptive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitNote {
    pub dataset: String,
    pub model: ModelFamily,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub columns: Vec<String>,
    pub rmse_divisor: String,
    pub sign_convention: String,
    pub rows: Vec<ReportRow>,
    pub mean_training: ReportRow,
    pub mean_validation: ReportRow,
    pub fits: Vec<FitNote>,
    pub lack_of_fit: Vec<LackOfFitRow>,
}

/// The report together with every fitted model, indexed [pair][model].
#[derive(Debug, Clone)]
pub struct BenchmarkRun<T: Scalar> {
    pub report: BenchmarkReport,
    pub fits: Vec<Vec<Fitted<T>>>,
}

fn mean_row(label: &str, kind: RowKind, rows: &[ReportRow]) -> ReportRow {
    let cells = (0..COLUMNS.len())
        .map(|c| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.kind == kind).filter_map(|r| r.cells[c]).collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        })
        .collect();
    ReportRow {
        label: label.to_string(),
        kind,
        cells,
    }
}

fn optional_pure_error<T: Scalar>(data: &Dataset) -> Result<Option<f64>> {
    match pure_error::<T>(data) {
        Ok(pe) => Ok(Some(pe.rmse_pe.to_f64_lossy())),
        Err(Error::NoReplication) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Nominal parameter count for the lack-of-fit test, with whether it is
/// only descriptive.
fn parameter_count<T: Scalar>(model: &FittedModel<T>) -> Option<(usize, bool)> {
    match model {
        FittedModel::Quadratic(q) => Some((q.parameter_count(), false)),
        FittedModel::Additive(a) => {
            let df = T::one() + a.f_road.effective_df + a.f_home.effective_df - T::lit(2.0);
            Some((df.round().to_usize().unwrap_or(1), true))
        }
        _ => None,
    }
}

/// Fit every model on every training set and tabulate training and
/// validation RMSE next to the pure-error RMSE of each set.
pub fn benchmark<T: Scalar>(pairs: &[(Dataset, Dataset, String)], models: &[ModelSpec<T>]) -> Result<BenchmarkRun<T>> {
    if pairs.is_empty() {
        return Err(Error::param("eval", "benchmark needs at least one train/validation pair"));
    }
    let mut train_rows = Vec::new();
    let mut valid_rows = Vec::new();
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    let mut lof_rows = Vec::new();
    for (j, (train, valid, label)) in pairs.iter().enumerate() {
        let number = j + 1;
        let mut t_cells = vec![None; COLUMNS.len()];
        let mut v_cells = vec![None; COLUMNS.len()];
        t_cells[0] = optional_pure_error::<T>(train)?;
        v_cells[0] = optional_pure_error::<T>(valid)?;
        let y_train = train.movs::<T>();
        let y_valid = valid.movs::<T>();
        let mut pair_fits = Vec::new();
        for spec in models {
            let family = spec.family();
            let wrap = |e: Error| Error::Benchmark {
                label: label.clone(),
                model: family.name().to_string(),
                source: Box::new(e),
            };
            log::info!("{label}: fitting {}", family.name());
            let fitted = spec.fit(train).map_err(wrap)?;
            let p_train = fitted.model.predict_all(train);
            let p_valid = fitted.model.predict_all(valid);
            let col = family.index() + 1;
            t_cells[col] = Some(rmse(&p_train, &y_train).map_err(wrap)?.to_f64_lossy());
            v_cells[col] = Some(rmse(&p_valid, &y_valid).map_err(wrap)?.to_f64_lossy());
            notes.push(FitNote {
                dataset: label.clone(),
                model: family,
                description: fitted.model.describe(),
            });
            if let Some((p, descriptive)) = parameter_count(&fitted.model) {
                let sse = super::sse(&p_train, &y_train);
                match lack_of_fit(sse, p, train) {
                    Ok(r) => lof_rows.push(LackOfFitRow {
                        dataset: label.clone(),
                        model: family,
                        parameters: p,
                        f_stat: r.f_stat.to_f64_lossy(),
                        df_lof: r.df_lof,
                        df_pe: r.df_pe,
                        p_value: r.p_value.to_f64_lossy(),
                        descriptive,
                    }),
                    Err(Error::NoReplication | Error::InsufficientGroups { .. }) => {}
                    Err(e) => return Err(wrap(e)),
                }
            }
            pair_fits.push(fitted);
        }
        train_rows.push(ReportRow {
            label: format!("Training {number}"),
            kind: RowKind::Training,
            cells: t_cells,
        });
        valid_rows.push(ReportRow {
            label: format!("Validation {number}"),
            kind: RowKind::Validation,
            cells: v_cells,
        });
        fits.push(pair_fits);
    }
    let rows: Vec<ReportRow> = train_rows.into_iter().chain(valid_rows).collect();
    let report = BenchmarkReport {
        columns: COLUMNS.iter().map(|s| s.to_string()).collect(),
        rmse_divisor: "model RMSE = sqrt(SSE / n); pure error = sqrt(SS_pe / df_pe)".into(),
        sign_convention: "MOV = road points - home points (positive = road team favored)".into(),
        mean_training: mean_row("Mean, training", RowKind::Training, &rows),
        mean_validation: mean_row("Mean, validation", RowKind::Validation, &rows),
        rows,
        fits: notes,
        lack_of_fit: lof_rows,
    };
    Ok(BenchmarkRun { report, fits })
}

/// Aligned-text rendering: training rows and their mean, then validation
/// rows and their mean.
pub fn render_table(report: &BenchmarkReport) -> String {
    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut heading = vec![String::new()];
    heading.extend(report.columns.iter().cloned());
    lines.push(heading);
    let mut sub = vec![String::new()];
    sub.extend(SUBHEADINGS.iter().map(|s| s.to_string()));
    lines.push(sub);
    let fmt_row = |r: &ReportRow| {
        let mut v = vec![r.label.clone()];
        v.extend(r.cells.iter().map(|c| c.map_or("-".to_string(), |x| format!("{x:.2}"))));
        v
    };
    for kind in [RowKind::Training, RowKind::Validation] {
        lines.extend(report.rows.iter().filter(|r| r.kind == kind).map(fmt_row));
        let mean = if kind == RowKind::Training {
            &report.mean_training
        } else {
            &report.mean_validation
        };
        lines.push(fmt_row(mean));
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "Root mean squared error of predicted MOV");
    let _ = writeln!(out, "{}", report.sign_convention);
    let _ = writeln!(out, "RMSE divisor: {}", report.rmse_divisor);
    let _ = writeln!(out);
    for (i, line) in lines.iter().enumerate() {
        let mut text = format!("{:<w$}", line[0], w = widths[0]);
        for (c, cell) in line.iter().enumerate().skip(1) {
            let _ = write!(text, "  {:>w$}", cell, w = widths[c]);
        }
        let _ = writeln!(out, "{}", text.trim_end());
        if i == 1 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    let label_width = report
        .fits
        .iter()
        .map(|f| f.dataset.chars().count())
        .chain(report.lack_of_fit.iter().map(|r| r.dataset.chars().count()))
        .max()
        .unwrap_or(0);
    if !report.fits.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Fitted models");
        for note in &report.fits {
            let _ = writeln!(out, "  {:<lw$}  {:<13} {}", note.dataset, note.model.name(), note.description, lw = label_width);
        }
    }
    if !report.lack_of_fit.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Lack of fit on training sets");
        for r in &report.lack_of_fit {
            let _ = writeln!(
                out,
                "  {:<lw$}  {:<13} p = {:<3} F({}, {}) = {:.4}  p-value {:.4}{}",
                r.dataset,
                r.model.name(),
                r.parameters,
                r.df_lof,
                r.df_pe,
                r.f_stat,
                r.p_value,
                if r.descriptive { "  (descriptive)" } else { "" },
                lw = label_width
            );
        }
    }
    out
}
