use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{BlindSession, Direction, EvalItem, Granularity, ScoreRecord, LIKERT_MAX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub direction: Direction,
    pub system_id: String,
    pub granularity: Granularity,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

/// Scores left out of the aggregate, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub missing_session: usize,
    pub missing_item: usize,
    pub bad_position: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cells: Vec<ReportCell>,
    pub diagnostics: Diagnostics,
}

/// System that produced the output shown at `rec.position`.
pub fn unblind<'a>(rec: &ScoreRecord, session: &BlindSession, item: &'a EvalItem) -> Option<&'a str> {
    let entry = session.item(&rec.item_id)?;
    let k = *entry.permutation.get(rec.position)?;
    item.outputs.get(k).map(|o| o.system_id.as_str())
}

/// Mean and population std per (direction, system, granularity). Cells are
/// ordered by direction, granularity, descending mean, then system id.
pub fn unblind_and_aggregate(scores: &[ScoreRecord], sessions: &[BlindSession], items: &[EvalItem]) -> Aggregate {
    let sessions: HashMap<&str, &BlindSession> = sessions.iter().map(|s| (s.session_id.as_str(), s)).collect();
    let items: HashMap<&str, &EvalItem> = items.iter().map(|i| (i.item_id.as_str(), i)).collect();
    let mut groups: BTreeMap<(Direction, Granularity, &str), Vec<u8>> = BTreeMap::new();
    let mut diagnostics = Diagnostics::default();
    for rec in scores {
        let Some(session) = sessions.get(rec.session_id.as_str()) else {
            diagnostics.missing_session += 1;
            continue;
        };
        let Some(item) = items.get(rec.item_id.as_str()) else {
            diagnostics.missing_item += 1;
            continue;
        };
        let Some(system) = unblind(rec, session, item) else {
            diagnostics.bad_position += 1;
            continue;
        };
        groups
            .entry((item.direction, item.granularity, system))
            .or_default()
            .push(rec.value);
    }
    let mut cells: Vec<ReportCell> = groups
        .into_iter()
        .map(|((direction, granularity, system), values)| {
            let n = values.len() as f64;
            let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
            ReportCell {
                direction,
                system_id: system.to_string(),
                granularity,
                mean,
                std: var.sqrt(),
                n: values.len(),
            }
        })
        .collect();
    cells.sort_by(|a, b| {
        (a.direction, a.granularity)
            .cmp(&(b.direction, b.granularity))
            .then(b.mean.total_cmp(&a.mean))
            .then(a.system_id.cmp(&b.system_id))
    });
    Aggregate { cells, diagnostics }
}

/// Plain-text table with `mean ± std` cells to two decimals. `normalized`
/// divides both by the top of the scale.
pub fn render_report(cells: &[ReportCell], normalized: bool) -> String {
    let scale = if normalized { LIKERT_MAX as f64 } else { 1.0 };
    let rows: Vec<[String; 5]> = cells
        .iter()
        .map(|c| {
            [
                c.direction.to_string(),
                c.granularity.to_string(),
                c.system_id.clone(),
                c.n.to_string(),
                format!("{:.2} ± {:.2}", c.mean / scale, c.std / scale),
            ]
        })
        .collect();
    let header = ["direction", "granularity", "system", "n", "mean ± std"];
    let mut widths = header.map(|h| h.chars().count());
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let range = if normalized { "0-1" } else { "0-4" };
    writeln!(out, "# scale {range}; std is the population standard deviation").unwrap();
    let mut line = |cols: &[&str]| {
        let padded: Vec<String> = cols
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
    };
    line(&header);
    for r in &rows {
        line(&r.each_ref().map(String::as_str));
    }
    out
}
