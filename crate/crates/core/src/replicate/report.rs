//! Reproduction of both bundled experiments as text and CSV reports.

use std::fmt::Write as _;

use serde::Serialize;

use super::analysis::DatasetAnalysis;
use super::bundle::{experiment_info, load_bundled_tables, Experiment, ExperimentInfo, SummaryRow};
use super::tables::{
    bundled_counterfactuals, check_table_consistency, recombine_all_rows, summary_welch_tests, table_effects,
    ConsistencyCheck, NamedCounterfactual, Recombined, RowComparison,
};
use crate::effects::EffectReport;
use crate::error::Result;
use crate::model::TreatmentCondition;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub info: ExperimentInfo,
    pub rows: Vec<SummaryRow>,
    pub consistency: Vec<ConsistencyCheck>,
    pub recombined: Vec<Recombined>,
    pub single_choice: EffectReport,
    pub multiple_choice: EffectReport,
    pub tests: Vec<RowComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub experiments: Vec<ExperimentReport>,
    pub counterfactuals: Vec<NamedCounterfactual>,
    pub full_precision: bool,
}

impl ReplicationReport {
    pub fn consistency_failures(&self) -> usize {
        self.experiments
            .iter()
            .map(|e| e.consistency.iter().filter(|c| !c.pass).count() + e.recombined.iter().filter(|r| !r.pass).count())
            .sum()
    }

    pub fn experiment(&self, experiment: Experiment) -> Option<&ExperimentReport> {
        self.experiments.iter().find(|e| e.experiment == experiment)
    }
}

/// Runs every check on the bundled tables.
pub fn replication_report(full_precision: bool) -> Result<ReplicationReport> {
    let rows = load_bundled_tables()?;
    let mut experiments = Vec::new();
    for experiment in Experiment::ALL {
        let own: Vec<SummaryRow> = rows.iter().filter(|r| r.experiment == experiment).cloned().collect();
        experiments.push(ExperimentReport {
            experiment,
            info: experiment_info(experiment)?,
            consistency: check_table_consistency(&own)?,
            recombined: recombine_all_rows(&own)?,
            single_choice: table_effects(&own, experiment, TreatmentCondition::SingleChoice)?,
            multiple_choice: table_effects(&own, experiment, TreatmentCondition::MultipleChoice)?,
            tests: summary_welch_tests(&own, experiment)?,
            rows: own,
        });
    }
    Ok(ReplicationReport {
        counterfactuals: bundled_counterfactuals(&rows, full_precision)?,
        experiments,
        full_precision,
    })
}

fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p<0.001".to_string()
    } else {
        format!("p={p:.3}")
    }
}

fn mean_decimals(row: &SummaryRow, info: &ExperimentInfo) -> usize {
    // the CPI control mean is printed with one extra place
    if row.condition == TreatmentCondition::Control && info.mean_decimals > 0 {
        info.mean_decimals as usize + 1
    } else {
        info.mean_decimals as usize
    }
}

fn render_effects(out: &mut String, label: &str, r: &EffectReport, decimals: usize) {
    let _ = writeln!(
        out,
        "  {label:<16} IE = {:.*}  CE = {:.*}  metawise = {}  simpson = {}",
        decimals, r.information_effect, decimals, r.choice_effect, r.metawise, r.simpson_flag
    );
}

/// Plain-text report: one block per experiment in the printed table layout,
/// then the counterfactual reallocations.
pub fn render_text(report: &ReplicationReport) -> String {
    let mut out = String::new();
    for e in &report.experiments {
        let gse_decimals = if e.info.mean_decimals == 0 { 0 } else { 2 };
        let _ = writeln!(out, "== {} (criterion {}) ==", e.experiment.title(), e.info.criterion);
        let _ = writeln!(
            out,
            "{:<16} {:<16} {:>5} {:>8} {:>10} {:>10} {:>10} {:>5}",
            "crowd", "information", "n", "mean", "GSE", "MSE", "delta GSE", "ok"
        );
        for c in &e.consistency {
            let row = &c.row;
            let _ = writeln!(
                out,
                "{:<16} {:<16} {:>5} {:>8.*} {:>10.*} {:>10.*} {:>10.4} {:>5}",
                row.condition.label(),
                e.info.label(&row.aid),
                row.n,
                mean_decimals(row, &e.info),
                row.mean,
                gse_decimals,
                row.gse,
                gse_decimals,
                row.mse,
                c.delta,
                if c.pass { "yes" } else { "NO" }
            );
        }
        let _ = writeln!(out, "recombined pooled means:");
        for r in &e.recombined {
            let _ = writeln!(
                out,
                "  {:<16} {:.4} vs printed {}  delta {:+.4}  {}",
                r.condition.label(),
                r.recombined_mean,
                r.printed_mean,
                r.delta,
                if r.pass { "ok" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "effects:");
        render_effects(&mut out, "Single Choice", &e.single_choice, gse_decimals);
        render_effects(&mut out, "Multiple Choice", &e.multiple_choice, gse_decimals);
        let _ = writeln!(out, "Welch tests from summary rows (two-sided / one-sided a<b):");
        for t in &e.tests {
            let _ = writeln!(
                out,
                "  {:<16} {:<16} vs {:<16} {:<16} t = {:>7.3}  {:<9} {}",
                t.condition_a.label(),
                e.info.label(&t.aid_a),
                t.condition_b.label(),
                e.info.label(&t.aid_b),
                t.two_sided.statistic,
                format_p(t.two_sided.p_value),
                format_p(t.less.p_value)
            );
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(
        out,
        "== counterfactual reallocations ({}) ==",
        if report.full_precision {
            "full precision"
        } else {
            "rounded before squaring"
        }
    );
    for c in &report.counterfactuals {
        let _ = writeln!(
            out,
            "  {:<9} {:<42} estimate {}, GSE {}",
            c.experiment.as_str(),
            c.label,
            trim(c.result.crowd_estimate),
            trim(c.result.gse)
        );
    }
    out
}

pub(crate) fn trim(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Machine-readable rows: the printed statistics with recomputed GSE.
pub fn render_csv(report: &ReplicationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "experiment",
        "condition",
        "aid",
        "n",
        "mean",
        "gse",
        "mse",
        "computed_gse",
        "delta",
        "pass",
    ])?;
    for e in &report.experiments {
        for c in &e.consistency {
            let r = &c.row;
            w.write_record([
                r.experiment.as_str().to_string(),
                r.condition.as_str().to_string(),
                r.aid.clone(),
                r.n.to_string(),
                r.mean.to_string(),
                r.gse.to_string(),
                r.mse.to_string(),
                c.computed_gse.to_string(),
                c.delta.to_string(),
                c.pass.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}

/// Plain-text rendering of a dataset analysis.
pub fn render_analysis_text(analysis: &DatasetAnalysis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "criterion {}", analysis.criterion);
    let _ = writeln!(
        out,
        "{:<16} {:<16} {:>6} {:>12} {:>12} {:>12}",
        "crowd", "information", "n", "mean", "GSE", "MSE"
    );
    for r in &analysis.rows {
        let _ = writeln!(
            out,
            "{:<16} {:<16} {:>6} {:>12.4} {:>12.4} {:>12.4}",
            r.condition.label(),
            r.aid,
            r.summary.n,
            r.summary.mean,
            r.summary.gse,
            r.summary.mse
        );
    }
    let _ = writeln!(out, "Welch tests (two-sided / one-sided a<b):");
    for t in &analysis.tests {
        let _ = writeln!(
            out,
            "  {}/{} vs {}/{}: t = {:.3}, {} / {}",
            t.condition_a,
            t.aid_a,
            t.condition_b,
            t.aid_b,
            t.two_sided.statistic,
            format_p(t.two_sided.p_value),
            format_p(t.less.p_value)
        );
    }
    for (arm, r) in &analysis.effects {
        let _ = writeln!(
            out,
            "{}: IE = {:.4}, CE = {:.4}, metawise = {}, simpson = {}",
            arm.label(),
            r.information_effect,
            r.choice_effect,
            r.metawise,
            r.simpson_flag
        );
        if let (Some(ie), Some(ce)) = (r.information_ci, r.choice_ci) {
            let _ = writeln!(
                out,
                "  bootstrap 95% CI: IE [{:.4}, {:.4}] (p = {:.4}), CE [{:.4}, {:.4}] (p = {:.4})",
                ie.low, ie.high, ie.p_value, ce.low, ce.high, ce.p_value
            );
        }
    }
    for n in &analysis.notices {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_has_no_consistency_failures() {
        let r = replication_report(false).unwrap();
        assert_eq!(r.consistency_failures(), 0);
        let text = render_text(&r);
        assert!(text.contains("CE = 2.09"), "{text}");
        assert!(text.contains("estimate 552, GSE 4096"), "{text}");
        let csv = render_csv(&r).unwrap();
        assert_eq!(csv.lines().count(), 27);
    }
}
