//! CSV plot data from check reports. Header row, fixed column order, LF endings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CheckId, CheckReport};
use crate::error::{invalid_input, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// `function_id,input_norm,output_norm,ratio` from a boundedness report.
    RatioTable,
    /// Kernel matrix rows from a `kernel_slice` report.
    KernelSlice,
    /// One row per α from a `norm_profile` report.
    NormProfile,
}

impl PlotKind {
    pub fn parse(s: &str) -> Option<PlotKind> {
        match s {
            "ratio_table" => Some(PlotKind::RatioTable),
            "kernel_slice" => Some(PlotKind::KernelSlice),
            "norm_profile" => Some(PlotKind::NormProfile),
            _ => None,
        }
    }
}

fn num(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn mismatch(kind: PlotKind, r: &CheckReport) -> crate::Error {
    invalid_input(format!("report {:?} cannot be exported as {kind:?}", r.check.name()))
}

pub fn export_plot_data(report: &CheckReport, kind: PlotKind) -> Result<String> {
    let d = &report.details;
    let mut out = String::new();
    match kind {
        PlotKind::RatioTable => {
            let ok = matches!(
                report.check,
                CheckId::Thm31
                    | CheckId::Thm32
                    | CheckId::Thm41
                    | CheckId::Cor41
                    | CheckId::Lemma24
                    | CheckId::Lemma41
                    | CheckId::HlDomination
            );
            let reports = d["reports"].as_array().filter(|_| ok).ok_or_else(|| mismatch(kind, report))?;
            out.push_str("function_id,input_norm,output_norm,ratio\n");
            for r in reports {
                for row in r["rows"].as_array().into_iter().flatten() {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        num(&row["function_id"]),
                        num(&row["input_norm"]),
                        num(&row["output_norm"]),
                        num(&row["ratio"])
                    )
                    .unwrap();
                }
            }
        }
        PlotKind::KernelSlice => {
            if report.check != CheckId::KernelSlice {
                return Err(mismatch(kind, report));
            }
            let n = d["n"].as_u64().ok_or_else(|| invalid_input("kernel slice without n"))? as usize;
            let values = d["values"].as_array().ok_or_else(|| invalid_input("kernel slice without values"))?;
            if values.len() != n * n {
                return Err(invalid_input("kernel slice has the wrong number of values"));
            }
            let header: Vec<String> = (0..n).map(|j| format!("y_{j}")).collect();
            out.push_str(&header.join(","));
            out.push('\n');
            for row in values.chunks(n) {
                let cells: Vec<String> = row.iter().map(num).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        PlotKind::NormProfile => {
            if report.check != CheckId::NormProfile {
                return Err(mismatch(kind, report));
            }
            out.push_str("alpha,campanato,campanato_blo,morrey,lipschitz\n");
            for row in d["rows"].as_array().into_iter().flatten() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    num(&row["alpha"]),
                    num(&row["campanato"]),
                    num(&row["campanato_blo"]),
                    num(&row["morrey"]),
                    num(&row["lipschitz"])
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}
