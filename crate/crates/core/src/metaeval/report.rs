//! Correlation tables laid out like the published benchmark tables: one
//! column group per aspect (or data subset), one sub-column per coefficient,
//! and an average group.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_pairs, join_pairs, AggregationMode, AggregationSpec, PairFilter, UndefinedPolicy};
use super::stats::{Coefficient, TauVariant};
use super::MetaevalError;
use crate::model::{EvalRecord, JudgeResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub label: String,
    /// Criterion name in results and aspect key in human ratings.
    pub aspect: String,
    #[serde(default)]
    pub provenance: Option<String>,
    #[serde(default)]
    pub invert: bool,
}

impl ColumnSpec {
    pub fn aspect(label: &str, aspect: &str) -> Self {
        Self {
            label: label.into(),
            aspect: aspect.into(),
            provenance: None,
            invert: false,
        }
    }

    fn filter(&self) -> PairFilter {
        PairFilter {
            provenance: self.provenance.clone(),
            invert: self.invert,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    pub coefficients: Vec<Coefficient>,
    pub aggregation: AggregationSpec,
    pub average_label: String,
}

impl TableSpec {
    /// Coherence, Consistency, Fluency, Relevance; summary-level ρ and τ.
    pub fn summeval() -> Self {
        Self {
            name: "summeval".into(),
            columns: ["coherence", "consistency", "fluency", "relevance"]
                .iter()
                .map(|a| ColumnSpec::aspect(&title(a), a))
                .collect(),
            coefficients: vec![Coefficient::Spearman, Coefficient::Kendall],
            aggregation: AggregationSpec::new(AggregationMode::SummaryLevel),
            average_label: "AVG".into(),
        }
    }

    /// Naturalness, Coherence, Engagingness, Groundedness; turn-level r and ρ.
    pub fn topical_chat() -> Self {
        Self {
            name: "topical_chat".into(),
            columns: ["naturalness", "coherence", "engagingness", "groundedness"]
                .iter()
                .map(|a| ColumnSpec::aspect(&title(a), a))
                .collect(),
            coefficients: vec![Coefficient::Pearson, Coefficient::Spearman],
            aggregation: AggregationSpec::new(AggregationMode::TurnLevel),
            average_label: "AVG".into(),
        }
    }

    /// QAGS-CNN and QAGS-XSUM subsets of consistency; r, ρ and τ.
    ///
    /// The judge answers whether the summary is inconsistent, so its score is
    /// inverted to align with the fraction of sentences humans found consistent.
    pub fn qags() -> Self {
        let subset = |label: &str, provenance: &str| ColumnSpec {
            label: label.into(),
            aspect: "consistency".into(),
            provenance: Some(provenance.into()),
            invert: true,
        };
        Self {
            name: "qags".into(),
            columns: vec![subset("QAGS-CNN", "qags_cnn"), subset("QAGS-XSUM", "qags_xsum")],
            coefficients: vec![Coefficient::Pearson, Coefficient::Spearman, Coefficient::Kendall],
            aggregation: AggregationSpec::new(AggregationMode::Pooled),
            average_label: "Average".into(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "summeval" => Some(Self::summeval()),
            "topical_chat" => Some(Self::topical_chat()),
            "qags" => Some(Self::qags()),
            _ => None,
        }
    }
}

fn title(aspect: &str) -> String {
    let mut chars = aspect.chars();
    chars
        .next()
        .map(|c| c.to_uppercase().chain(chars).collect())
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub column: String,
    pub coefficient: Coefficient,
    pub value: f64,
    pub groups_used: usize,
    pub groups_skipped: usize,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageCell {
    pub coefficient: Coefficient,
    pub value: f64,
}

/// One metric (or ablation variant) across every column of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    /// Column-major: for each column, one cell per coefficient.
    pub cells: Vec<ReportCell>,
    pub averages: Vec<AverageCell>,
}

impl ReportRow {
    /// Orders `cells` by the table layout and fills in the averages. Every
    /// (column, coefficient) cell must be present.
    pub fn from_cells(label: &str, table: &TableSpec, cells: Vec<ReportCell>) -> Result<Self, MetaevalError> {
        let mut by_key: BTreeMap<(String, Coefficient), ReportCell> = cells
            .into_iter()
            .map(|c| ((c.column.clone(), c.coefficient), c))
            .collect();
        let mut ordered = Vec::new();
        for col in &table.columns {
            for &coef in &table.coefficients {
                let cell = by_key.remove(&(col.label.clone(), coef)).ok_or_else(|| MetaevalError::MissingCell {
                    column: col.label.clone(),
                    coefficient: coef,
                })?;
                ordered.push(cell);
            }
        }
        let averages = table
            .coefficients
            .iter()
            .map(|&coef| {
                let vals: Vec<f64> = ordered.iter().filter(|c| c.coefficient == coef).map(|c| c.value).collect();
                AverageCell {
                    coefficient: coef,
                    value: vals.iter().sum::<f64>() / vals.len() as f64,
                }
            })
            .collect();
        Ok(Self {
            label: label.into(),
            cells: ordered,
            averages,
        })
    }
}

/// Computes every cell of `table` for one set of results.
pub fn compute_row(
    label: &str,
    table: &TableSpec,
    results: &[JudgeResult],
    records: &[EvalRecord],
) -> Result<ReportRow, MetaevalError> {
    let mut cells = Vec::new();
    for col in &table.columns {
        let pairs = join_pairs(results, records, &col.aspect, &col.filter())?;
        for &coef in &table.coefficients {
            let agg = aggregate_pairs(&pairs, &col.aspect, coef, &table.aggregation)?;
            cells.push(ReportCell {
                column: col.label.clone(),
                coefficient: coef,
                value: agg.value,
                groups_used: agg.groups_used,
                groups_skipped: agg.groups_skipped,
                n_pairs: agg.n_pairs,
            });
        }
    }
    ReportRow::from_cells(label, table, cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub table: String,
    pub aggregation: AggregationMode,
    pub undefined_policy: UndefinedPolicy,
    pub tau_variant: TauVariant,
    pub columns: Vec<String>,
    pub coefficients: Vec<Coefficient>,
    pub average_label: String,
    pub rows: Vec<ReportRow>,
}

impl CorrelationReport {
    pub fn new(table: &TableSpec, rows: Vec<ReportRow>) -> Self {
        Self {
            table: table.name.clone(),
            aggregation: table.aggregation.mode,
            undefined_policy: table.aggregation.undefined_policy,
            tau_variant: table.aggregation.tau_variant,
            columns: table.columns.iter().map(|c| c.label.clone()).collect(),
            coefficients: table.coefficients.clone(),
            average_label: table.average_label.clone(),
            rows,
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let mut header = vec!["Metrics".to_string()];
        for group in self.columns.iter().chain([&self.average_label]) {
            header.extend(self.coefficients.iter().map(|c| format!("{group} {}", c.symbol())));
        }
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let rule: Vec<&str> = std::iter::once("---")
            .chain(std::iter::repeat_n("---:", header.len() - 1))
            .collect();
        let _ = writeln!(out, "|{}|", rule.join("|"));
        for row in &self.rows {
            let values = row
                .cells
                .iter()
                .map(|c| c.value)
                .chain(row.averages.iter().map(|a| a.value))
                .map(|v| format!("{v:.3}"));
            let line: Vec<String> = std::iter::once(row.label.clone()).chain(values).collect();
            let _ = writeln!(out, "| {} |", line.join(" | "));
        }
        let variant = match self.tau_variant {
            TauVariant::TauA => "tau_a",
            TauVariant::TauB => "tau_b",
        };
        let policy = match self.undefined_policy {
            UndefinedPolicy::Skip => "skip",
            UndefinedPolicy::Zero => "zero",
        };
        let _ = writeln!(
            out,
            "\nAggregation: {}; Kendall variant: {variant}; undefined groups: {policy}.",
            self.aggregation.name()
        );
        out
    }

    /// One line per (row, column) plus one per row average; a column per
    /// coefficient. Values are written at full precision.
    pub fn to_csv(&self) -> Result<String, MetaevalError> {
        let render = |e: csv::Error| MetaevalError::Render(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["metric".to_string(), "column".to_string()];
        header.extend(self.coefficients.iter().map(|c| c.name().to_string()));
        w.write_record(&header).map_err(render)?;
        for row in &self.rows {
            for (i, column) in self.columns.iter().enumerate() {
                let k = self.coefficients.len();
                let mut line = vec![row.label.clone(), column.clone()];
                line.extend(row.cells[i * k..(i + 1) * k].iter().map(|c| c.value.to_string()));
                w.write_record(&line).map_err(render)?;
            }
            let mut line = vec![row.label.clone(), self.average_label.clone()];
            line.extend(row.averages.iter().map(|a| a.value.to_string()));
            w.write_record(&line).map_err(render)?;
        }
        let bytes = w.into_inner().map_err(|e| MetaevalError::Render(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| MetaevalError::Render(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String, MetaevalError> {
        serde_json::to_string_pretty(self).map_err(|e| MetaevalError::Render(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(column: &str, coefficient: Coefficient, value: f64) -> ReportCell {
        ReportCell {
            column: column.into(),
            coefficient,
            value,
            groups_used: 1,
            groups_skipped: 0,
            n_pairs: 3,
        }
    }

    fn half_row(table: &TableSpec) -> ReportRow {
        let cells = table
            .columns
            .iter()
            .flat_map(|c| table.coefficients.iter().map(|&k| cell(&c.label, k, 0.5)))
            .collect();
        ReportRow::from_cells("G-Eval", table, cells).unwrap()
    }

    #[test]
    fn average_of_equal_cells() {
        let table = TableSpec::summeval();
        let row = half_row(&table);
        assert!(row.averages.iter().all(|a| a.value == 0.5));
    }

    #[test]
    fn summeval_header_layout() {
        let table = TableSpec::summeval();
        let md = CorrelationReport::new(&table, vec![half_row(&table)]).to_markdown();
        let header = md.lines().next().unwrap();
        assert_eq!(
            header,
            "| Metrics | Coherence ρ | Coherence τ | Consistency ρ | Consistency τ | Fluency ρ | Fluency τ | Relevance ρ | Relevance τ | AVG ρ | AVG τ |"
        );
    }

    #[test]
    fn missing_cell_is_named() {
        let table = TableSpec::topical_chat();
        let err = ReportRow::from_cells("x", &table, vec![cell("Naturalness", Coefficient::Pearson, 0.1)]).unwrap_err();
        assert_eq!(
            err,
            MetaevalError::MissingCell {
                column: "Naturalness".into(),
                coefficient: Coefficient::Spearman
            }
        );
    }

    #[test]
    fn csv_layout() {
        let table = TableSpec::qags();
        let csv = CorrelationReport::new(&table, vec![half_row(&table)]).to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "metric,column,pearson,spearman,kendall");
        assert_eq!(lines[1], "G-Eval,QAGS-CNN,0.5,0.5,0.5");
        assert_eq!(lines[3], "G-Eval,Average,0.5,0.5,0.5");
    }
}
