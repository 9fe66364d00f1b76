//! Serialized experiment reports: a self-describing JSON document plus the
//! ladder CSV table. Both are byte-stable for equal config and seed, so
//! wall-clock timings are printed to stderr by the binary instead of being
//! embedded here.

use renorm_core::{ExperimentRun, LadderRow};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Formula strings emitted next to the measured values so a report can be
/// read without the source.
const FORMULAS: &[(&str, &str)] = &[
    ("t_n", "t_n = 2^-n rho / 16"),
    ("eta_n", "eta_n = t_n rho / 25600"),
    ("delta_n", "delta_n = 2 t_n (1 - rho)^-2, input separation ceiling"),
    ("bound", "bound = rho / 16, output separation floor shared by all levels"),
    ("ratio_n", "ratio_n = bound / delta_n, doubles level over level"),
    ("in_sep", "in_sep = composite(x_plus - x_minus), must be <= delta_n + tol"),
    (
        "out_sep",
        "out_sep = composite(R(x_plus) - R(x_minus)), must be >= bound - tol",
    ),
    (
        "v_swing",
        "v_star(R(x_plus)) <= -rho/32 + tol and v_star(R(x_minus)) >= rho/32 - tol",
    ),
    (
        "certificate_gap",
        "primal gauge value minus best dual lower bound at the projection output",
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaNote {
    pub name: String,
    pub formula: String,
}

/// Roll-up of the run: the one place a reader needs to look first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub all_pass: bool,
    pub levels: usize,
    pub levels_passed: usize,
    pub hypotheses_pass: bool,
    /// Largest composite norm of any witness point.
    pub witness_norm_max: f64,
    /// Largest certification gap over every projection the run performed.
    pub max_certificate_gap: f64,
}

/// Full experiment output: config echo, per-level hypothesis checks and
/// conclusions, the ladder table, and the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub run: ExperimentRun,
    pub formulas: Vec<FormulaNote>,
    pub summary: Summary,
}

impl ExperimentReport {
    /// Assembles the report. Output paths are stripped from the echoed
    /// config so the bytes depend only on the mathematical settings.
    pub fn new(config: &RunConfig, run: ExperimentRun) -> Self {
        let config = RunConfig {
            out: None,
            csv: None,
            ..config.clone()
        };
        let levels_passed = run.ladder.iter().filter(|r| r.pass).count();
        let hypotheses_pass = run.reports.iter().all(|r| r.hypotheses_pass);
        let max_certificate_gap = run
            .reports
            .iter()
            .filter_map(|r| r.conclusions.as_ref())
            .flat_map(|c| [c.gap_plus, c.gap_minus])
            .fold(0.0f64, f64::max);
        let summary = Summary {
            all_pass: run.all_pass,
            levels: run.ladder.len(),
            levels_passed,
            hypotheses_pass,
            witness_norm_max: run.witness_norm_max,
            max_certificate_gap,
        };
        let formulas = FORMULAS
            .iter()
            .map(|(name, formula)| FormulaNote {
                name: name.to_string(),
                formula: formula.to_string(),
            })
            .collect();
        ExperimentReport {
            config,
            run,
            formulas,
            summary,
        }
    }

    /// Pretty JSON with a trailing newline; shortest round-trip floats.
    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> anyhow::Result<ExperimentReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// Ladder table as CSV.
    pub fn ladder_csv(&self) -> String {
        ladder_csv(&self.run.ladder)
    }
}

/// CSV of ladder rows: fixed column order, LF line ends, `.` decimals,
/// shortest round-trip float text.
pub fn ladder_csv(rows: &[LadderRow]) -> String {
    let mut out = String::from("n,t_n,delta,in_sep,out_sep,bound,ratio,pass\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.level, r.t, r.delta, r.in_sep, r.out_sep, r.bound, r.ratio, r.pass
        ));
    }
    out
}
