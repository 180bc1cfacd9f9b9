//! Scenario runner: builds a space and potential from a config, runs named
//! checks and writes one JSON report per check plus `summary.json`.
//!
//! Hard checks test inequalities with explicit constants and decide the exit
//! status. Soft checks report fitted constants and never fail a run.

mod checks;
mod config;
mod export;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{NormParams, PotentialSpec, RhoSpec, Scenario, SpaceSpec};
pub use checks::{g_eigen_error, g_l2_error, identity_grid, qt_fd_error, random_functions};
pub use export::{export_plot_data, PlotKind};

use crate::error::{invalid_param, Error, Result};
use crate::potential::{critical_radius, Potential};
use crate::semigroup::{build_schrodinger, OperatorSpectrum};
use crate::space::{BallIndex, MetricMeasureSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    Lemma21,
    Eq27,
    AtomPairing,
    MeanVsMin,
    Holder,
    Subordination,
    QtGradient,
    GEigen,
    DoublingProfile,
    CriticalRadius,
    Admissibility,
    ReverseHolder,
    Lemma23,
    Lemma24,
    Lemma41,
    Thm31,
    Thm32,
    Thm41,
    Cor41,
    HlDomination,
    KernelFit,
    KernelSlice,
    NormProfile,
}

impl CheckId {
    pub const ALL: [CheckId; 23] = [
        CheckId::Lemma21,
        CheckId::Eq27,
        CheckId::AtomPairing,
        CheckId::MeanVsMin,
        CheckId::Holder,
        CheckId::Subordination,
        CheckId::QtGradient,
        CheckId::GEigen,
        CheckId::DoublingProfile,
        CheckId::CriticalRadius,
        CheckId::Admissibility,
        CheckId::ReverseHolder,
        CheckId::Lemma23,
        CheckId::Lemma24,
        CheckId::Lemma41,
        CheckId::Thm31,
        CheckId::Thm32,
        CheckId::Thm41,
        CheckId::Cor41,
        CheckId::HlDomination,
        CheckId::KernelFit,
        CheckId::KernelSlice,
        CheckId::NormProfile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::Lemma21 => "lemma21",
            CheckId::Eq27 => "eq27",
            CheckId::AtomPairing => "atom_pairing",
            CheckId::MeanVsMin => "mean_vs_min",
            CheckId::Holder => "holder",
            CheckId::Subordination => "subordination",
            CheckId::QtGradient => "qt_gradient",
            CheckId::GEigen => "g_eigen",
            CheckId::DoublingProfile => "doubling_profile",
            CheckId::CriticalRadius => "critical_radius",
            CheckId::Admissibility => "admissibility",
            CheckId::ReverseHolder => "reverse_holder",
            CheckId::Lemma23 => "lemma23",
            CheckId::Lemma24 => "lemma24",
            CheckId::Lemma41 => "lemma41",
            CheckId::Thm31 => "thm31",
            CheckId::Thm32 => "thm32",
            CheckId::Thm41 => "thm41",
            CheckId::Cor41 => "cor41",
            CheckId::HlDomination => "hl_domination",
            CheckId::KernelFit => "kernel_fit",
            CheckId::KernelSlice => "kernel_slice",
            CheckId::NormProfile => "norm_profile",
        }
    }

    pub fn parse(s: &str) -> Option<CheckId> {
        CheckId::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn is_hard(self) -> bool {
        matches!(
            self,
            CheckId::Lemma21
                | CheckId::Eq27
                | CheckId::AtomPairing
                | CheckId::MeanVsMin
                | CheckId::Holder
                | CheckId::Subordination
                | CheckId::QtGradient
                | CheckId::GEigen
        )
    }

    pub fn description(self) -> &'static str {
        match self {
            CheckId::Lemma21 => "localized vs global Campanato norm, constants 2 and 3",
            CheckId::Eq27 => "truncation raises the E^{0,1}_D norm by at most 9/4",
            CheckId::AtomPairing => "atom pairings bounded by the dual norm with constant 1",
            CheckId::MeanVsMin => "per-ball mean oscillation at most 2^p times min oscillation",
            CheckId::Holder => "per-ball normalized oscillation increasing in p",
            CheckId::Subordination => "Poisson kernel: spectral vs subordination quadrature within 1e-6",
            CheckId::QtGradient => "Q_t kernel vs finite-difference heat derivative within 1e-5",
            CheckId::GEigen => "g(φ_k) = |φ_k|/√8 and the L² identity within 1e-3",
            CheckId::DoublingProfile => "doubling and reverse doubling constants",
            CheckId::CriticalRadius => "critical radius ρ from the potential",
            CheckId::Admissibility => "admissibility constant C0 across k0",
            CheckId::ReverseHolder => "reverse Hölder constant of the potential",
            CheckId::Lemma23 => "localized Campanato vs Morrey norm for α < 0",
            CheckId::Lemma24 => "ball means against the growth envelope",
            CheckId::Lemma41 => "pointwise Q_t f bound",
            CheckId::Thm31 => "T⁺ from E to BLO-type space",
            CheckId::Thm32 => "P⁺ from E to BLO-type space",
            CheckId::Thm41 => "g(f)² into the BLO-type space",
            CheckId::Cor41 => "g(f) into the BLO-type space",
            CheckId::HlDomination => "T⁺f ≤ C·HL f",
            CheckId::KernelFit => "fitted kernel bound constants",
            CheckId::KernelSlice => "heat kernel matrix at t = slice_t",
            CheckId::NormProfile => "norms of one corpus function across α",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Soft check: values are reported, nothing is asserted.
    Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: CheckId,
    pub hard: bool,
    pub status: Status,
    pub witness: Option<String>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub check: CheckId,
    pub hard: bool,
    pub status: Status,
    pub report: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub space: String,
    pub n_points: usize,
    pub seed: u64,
    pub checks: Vec<SummaryEntry>,
    pub hard_failures: usize,
}

impl Summary {
    pub fn exit_code(&self) -> i32 {
        if self.hard_failures == 0 {
            0
        } else {
            1
        }
    }
}

/// Space, ball index, potential, `ρ` and operator spectrum for a scenario.
pub struct Context {
    pub scenario: Scenario,
    pub space: MetricMeasureSpace,
    pub index: BallIndex,
    pub potential: Option<Potential>,
    pub rho: Option<Vec<f64>>,
    pub spectrum: Option<OperatorSpectrum>,
}

impl Context {
    pub fn build(scenario: &Scenario) -> Result<Context> {
        let ids = scenario.check_ids()?;
        let space = scenario.build_space()?;
        let index = BallIndex::new(&space);
        let potential = scenario.potential.as_ref().map(|p| p.build(&space)).transpose()?;
        let need = |f: fn(CheckId) -> bool| ids.iter().any(|&c| f(c));
        let rho = match &scenario.rho {
            RhoSpec::Explicit { values } => {
                if values.len() != space.len() || values.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return Err(invalid_param("explicit rho must have one positive value per point"));
                }
                Some(values.clone())
            }
            RhoSpec::FromPotential => match &potential {
                Some(v) if need(checks::needs_rho) => match critical_radius(&index, v) {
                    Ok(a) => Some(a.rho),
                    Err(Error::PotentialVanishes) => None,
                    Err(e) => return Err(e),
                },
                _ => None,
            },
        };
        if need(checks::needs_rho) && rho.is_none() {
            return Err(invalid_param("these checks need rho: give a non-vanishing potential or explicit rho"));
        }
        if need(checks::needs_potential) && potential.is_none() {
            return Err(invalid_param("these checks need a potential"));
        }
        if need(checks::needs_lattice) && space.lattice().is_none() {
            return Err(invalid_param("these checks need a grid space"));
        }
        let spectrum = match &potential {
            Some(v) if need(checks::needs_spectrum) => Some(build_schrodinger(&space, v, scenario.bc)?),
            _ => None,
        };
        Ok(Context { scenario: scenario.clone(), space, index, potential, rho, spectrum })
    }
}

/// Output directory: the command-line override, then `LAB_OUTPUT_DIR`, then
/// the config value, then `lab-out`.
pub fn resolve_output_dir(scenario: &Scenario, cli: Option<&Path>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("LAB_OUTPUT_DIR") {
        return PathBuf::from(p);
    }
    scenario.output_dir.clone().unwrap_or_else(|| PathBuf::from("lab-out"))
}

pub fn run_check(ctx: &Context, id: CheckId) -> Result<CheckReport> {
    checks::run(ctx, id)
}

/// Runs every check in order, writing `<check>.json` and `summary.json`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<(Summary, Vec<CheckReport>)> {
    let ctx = Context::build(scenario)?;
    std::fs::create_dir_all(out_dir)?;
    let mut entries = Vec::new();
    let mut reports = Vec::new();
    for id in scenario.check_ids()? {
        let report = run_check(&ctx, id)?;
        let file = format!("{}.json", id.name());
        write_json(&out_dir.join(&file), &report)?;
        entries.push(SummaryEntry { check: id, hard: report.hard, status: report.status, report: file });
        reports.push(report);
    }
    let summary = Summary {
        space: ctx.space.label().to_string(),
        n_points: ctx.space.len(),
        seed: scenario.seed,
        hard_failures: entries.iter().filter(|e| e.status == Status::Fail).count(),
        checks: entries,
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok((summary, reports))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(checks: &str) -> Result<Scenario> {
        Scenario::from_json_str(&format!(
            r#"{{"space": {{"kind": "builtin", "name": "random16"}},
                "potential": {{"kind": "constant", "value": 2}},
                "params": [{{"alpha": 0, "p": 1}}], "checks": {checks}, "random_functions": 12}}"#
        ))
    }

    #[test]
    fn rejects_bad_check_lists() {
        assert!(scenario(r#"["nosuchcheck"]"#).is_err());
        assert!(scenario("[]").is_err());
        assert!(Scenario::from_json_str(r#"{"space": {"kind": "builtin", "name": "random16"}, "params": [], "checks": ["holder"]}"#).is_err());
        assert!(Scenario::from_json_str(r#"{"space": {"kind": "builtin", "name": "random16"}, "bogus": 1, "params": [{"alpha": 0, "p": 1}], "checks": ["holder"]}"#).is_err());
    }

    #[test]
    fn names_roundtrip() {
        for c in CheckId::ALL {
            assert_eq!(CheckId::parse(c.name()), Some(c));
            assert_eq!(serde_json::to_value(c).unwrap(), serde_json::json!(c.name()));
        }
        assert_eq!(CheckId::ALL.iter().filter(|c| c.is_hard()).count(), 8);
    }

    #[test]
    fn operator_checks_need_a_grid() {
        let sc = scenario(r#"["subordination"]"#).unwrap();
        assert!(Context::build(&sc).is_err());
    }

    #[test]
    fn hard_checks_pass_on_random16() {
        let sc = scenario(r#"["lemma21", "eq27", "atom_pairing", "mean_vs_min", "holder"]"#).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (summary, reports) = run_scenario(&sc, dir.path()).unwrap();
        assert_eq!(summary.exit_code(), 0);
        assert!(reports.iter().all(|r| r.status == Status::Pass && r.hard));
        assert!(dir.path().join("lemma21.json").exists());
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn exit_code_counts_hard_failures() {
        let s = Summary { space: "x".into(), n_points: 1, seed: 0, checks: vec![], hard_failures: 2 };
        assert_eq!(s.exit_code(), 1);
    }

    #[test]
    fn export_kind_mismatch() {
        let r = CheckReport {
            check: CheckId::Holder,
            hard: true,
            status: Status::Pass,
            witness: None,
            details: serde_json::json!({}),
        };
        for k in [PlotKind::RatioTable, PlotKind::KernelSlice, PlotKind::NormProfile] {
            assert!(export_plot_data(&r, k).is_err());
        }
    }
}
