//! Tabular rendering of an [`EvalReport`] as TSV or Markdown.
//!
//! The emitter only rounds; every value comes from the report as given.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AisCells, EvalReport, LanguageReport, PoolPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    #[serde(alias = "md")]
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "md" | "markdown" => Ok(Format::Markdown),
            _ => Err(Error::Config(format!("unknown report format {s:?} (expected tsv or md)"))),
        }
    }
}

/// Placeholder for undefined values.
pub const ABSENT: &str = "-";

/// Rounds half away from zero at `decimals`, tolerating binary
/// representation error just below the midpoint.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let r = (x.abs() * scale + 0.5 + 1e-9).floor() / scale;
    if r == 0.0 {
        0.0
    } else {
        r.copysign(x)
    }
}

pub fn fmt1(x: f64) -> String {
    format!("{:.1}", round_half_up(x, 1))
}

fn opt1(x: Option<f64>) -> String {
    x.map_or_else(|| ABSENT.to_owned(), fmt1)
}

fn opt_threshold(x: Option<f64>) -> String {
    x.map_or_else(|| ABSENT.to_owned(), |t| format!("{:.3}", round_half_up(t, 3)))
}

/// Signed percentage change, e.g. `+40.5%`.
pub fn fmt_change(x: f64) -> String {
    let r = round_half_up(x, 1);
    if r < 0.0 {
        format!("{r:.1}%")
    } else {
        format!("+{r:.1}%")
    }
}

fn reranked_cell(value: Option<f64>, change: Option<f64>) -> String {
    match (value, change) {
        (Some(v), Some(c)) => format!("{} ({})", fmt1(v), fmt_change(c)),
        (v, _) => opt1(v),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub title: &'static str,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

const SUBSETS: [&str; 3] = ["any", "lang", "en"];
const STRATA: [&str; 3] = ["ais", "of_em", "non_em"];

fn attribution_table(report: &EvalReport) -> Table {
    let mut headers = vec!["language".to_owned(), "examples".into(), "excluded".into()];
    for s in SUBSETS {
        for m in STRATA {
            for p in ["top1", "all"] {
                headers.push(format!("{s}.{m}.{p}"));
            }
        }
    }
    headers.extend(["yes_no.all".into(), "short_span.all".into()]);
    let rows = report
        .languages
        .iter()
        .map(|(lang, r)| {
            let mut row = vec![lang.to_string(), r.examples.to_string(), r.excluded.to_string()];
            let b = &r.breakdown;
            for cells in [&b.any, &b.lang, &b.en] {
                let AisCells { ais, of_em, non_em } = cells;
                for PoolPair { top1, all } in [ais, of_em, non_em] {
                    row.push(opt1(*top1));
                    row.push(opt1(*all));
                }
            }
            row.push(opt1(r.ais_yes_no));
            row.push(opt1(r.ais_short_span));
            row
        })
        .collect();
    Table {
        title: "Attribution",
        headers,
        rows,
    }
}

fn rerank_table(report: &EvalReport) -> Table {
    let mut rows: Vec<Vec<String>> = report
        .languages
        .iter()
        .map(|(lang, r)| {
            vec![
                lang.to_string(),
                opt1(r.ais_top1),
                opt1(r.ais_all),
                reranked_cell(r.ais_reranked, r.relative_improvement),
            ]
        })
        .collect();
    if let Some(avg) = &report.rerank_average {
        rows.push(vec![
            "avg".into(),
            opt1(avg.top1),
            opt1(avg.all),
            reranked_cell(avg.reranked, avg.relative_improvement),
        ]);
    }
    Table {
        title: "Reranking",
        headers: ["language", "top1", "all", "reranked"].map(String::from).to_vec(),
        rows,
    }
}

fn per_language(
    report: &EvalReport,
    title: &'static str,
    headers: &[&str],
    cells: impl Fn(&LanguageReport) -> Vec<String>,
) -> Table {
    Table {
        title,
        headers: headers.iter().map(|h| h.to_string()).collect(),
        rows: report
            .languages
            .iter()
            .map(|(lang, r)| {
                let mut row = vec![lang.to_string()];
                row.extend(cells(r));
                row
            })
            .collect(),
    }
}

/// All report sections in output order.
pub fn tables(report: &EvalReport) -> Vec<Table> {
    vec![
        attribution_table(report),
        rerank_table(report),
        per_language(
            report,
            "Detection",
            &["language", "threshold", "accuracy", "roc_auc", "non_em_detection"],
            |r| {
                vec![
                    opt_threshold(r.threshold),
                    opt1(r.accuracy),
                    opt1(r.roc_auc.map(|a| 100.0 * a)),
                    opt1(r.non_em_detection),
                ]
            },
        ),
        per_language(
            report,
            "Agreement",
            &["language", "consensus", "s1_vs_s2", "s1_vs_s2_translated"],
            |r| {
                vec![
                    opt1(r.agreement_with_consensus),
                    opt1(r.scenario_disagreement),
                    opt1(r.scenario_disagreement_translated),
                ]
            },
        ),
        per_language(report, "Passage languages", &["language", "in_lang", "en", "other"], |r| {
            match r.passage_distribution {
                Some(d) => vec![fmt1(d.in_lang), fmt1(d.en), fmt1(d.other)],
                None => vec![ABSENT.into(); 3],
            }
        }),
    ]
}

/// Renders the report. Output depends only on `report`.
pub fn emit_report(report: &EvalReport, format: Format) -> String {
    let scorer = report.scorer.as_deref().unwrap_or(ABSENT);
    let mut out = String::new();
    match format {
        Format::Tsv => {
            let _ = writeln!(out, "#scenario\t{}", report.scenario);
            let _ = writeln!(out, "#scorer\t{scorer}");
            for t in tables(report) {
                let _ = writeln!(out, "\n#table\t{}", t.title);
                let _ = writeln!(out, "{}", t.headers.join("\t"));
                for row in &t.rows {
                    let _ = writeln!(out, "{}", row.join("\t"));
                }
            }
        }
        Format::Markdown => {
            let _ = writeln!(out, "# Evaluation report\n");
            let _ = writeln!(out, "- scenario: `{}`", report.scenario);
            let _ = writeln!(out, "- scorer: `{scorer}`");
            for t in tables(report) {
                let _ = writeln!(out, "\n## {}\n", t.title);
                let _ = writeln!(out, "| {} |", t.headers.join(" | "));
                let _ = writeln!(out, "|{}", "---|".repeat(t.headers.len()));
                for row in &t.rows {
                    let _ = writeln!(out, "| {} |", row.join(" | "));
                }
            }
        }
    }
    out
}

pub fn write_report(report: &EvalReport, format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, emit_report(report, format)).map_err(|e| Error::io(path, e))
}

/// `(title, headers, rows)` as recovered by [`parse_tables`].
pub type ParsedTable = (String, Vec<String>, Vec<Vec<String>>);

/// Recovers every table from either encoding.
pub fn parse_tables(text: &str, format: Format) -> Vec<ParsedTable> {
    let mut out: Vec<ParsedTable> = Vec::new();
    for line in text.lines() {
        match format {
            Format::Tsv => {
                if let Some(title) = line.strip_prefix("#table\t") {
                    out.push((title.to_owned(), Vec::new(), Vec::new()));
                } else if !line.is_empty() && !line.starts_with('#') {
                    let cells: Vec<String> = line.split('\t').map(String::from).collect();
                    push_line(&mut out, cells);
                }
            }
            Format::Markdown => {
                if let Some(title) = line.strip_prefix("## ") {
                    out.push((title.to_owned(), Vec::new(), Vec::new()));
                } else if line.starts_with("| ") {
                    let inner = line.trim_start_matches("| ").trim_end_matches(" |");
                    push_line(&mut out, inner.split(" | ").map(String::from).collect());
                }
            }
        }
    }
    out
}

fn push_line(out: &mut [ParsedTable], cells: Vec<String>) {
    if let Some((_, headers, rows)) = out.last_mut() {
        if headers.is_empty() {
            *headers = cells;
        } else {
            rows.push(cells);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LanguageCode, RerankAverage, Scenario};

    #[test]
    fn half_up() {
        assert_eq!(fmt1(27.85), "27.9");
        assert_eq!(fmt1(0.05), "0.1");
        assert_eq!(fmt1(55.94999), "55.9");
        assert_eq!(fmt1(100.0 * 279.0 / 1000.0), "27.9");
        assert_eq!(fmt1(-0.04), "0.0");
        assert_eq!(fmt_change(-2.25), "-2.3%");
        assert_eq!(fmt_change(146.6), "+146.6%");
    }

    #[test]
    fn empty_report_is_headers_only() {
        let r = EvalReport::new(Scenario::InLanguage);
        for f in [Format::Tsv, Format::Markdown] {
            let parsed = parse_tables(&emit_report(&r, f), f);
            assert_eq!(parsed.len(), 5);
            assert!(parsed.iter().all(|(_, h, rows)| !h.is_empty() && rows.is_empty()));
        }
    }

    #[test]
    fn average_row_layout() {
        let mut r = EvalReport::new(Scenario::InLanguage);
        r.rerank_average = Some(RerankAverage {
            top1: Some(25.84),
            all: Some(41.28),
            reranked: Some(36.84),
            relative_improvement: Some(55.9),
        });
        let md = emit_report(&r, Format::Markdown);
        assert!(md.contains("| avg | 25.8 | 41.3 | 36.8 (+55.9%) |"), "{md}");
    }

    #[test]
    fn encodings_agree() {
        let mut r = EvalReport::new(Scenario::InEnglish);
        r.scorer = Some("string-match".into());
        let lr = LanguageReport {
            examples: 4,
            ais_top1: Some(25.0),
            roc_auc: Some(0.952),
            ..Default::default()
        };
        r.languages.insert(LanguageCode::new("ja").unwrap(), lr);
        let tsv = parse_tables(&emit_report(&r, Format::Tsv), Format::Tsv);
        let md = parse_tables(&emit_report(&r, Format::Markdown), Format::Markdown);
        assert_eq!(tsv, md);
        assert_eq!(emit_report(&r, Format::Tsv), emit_report(&r, Format::Tsv));
        let detection = &tsv[2];
        assert_eq!(detection.2[0][3], "95.2");
    }
}
