//! CSV and JSON file formats.
//!
//! Trajectories: `id,t,x,y,heading,speed`, one row per state, rows of a
//! trajectory contiguous and in time order. Environment agents use the same
//! columns plus `kind`. Coordinates are written with the shortest decimal
//! that reads back to the identical `f64`.
//!
//! Score tables (report, sweep, timeline, inverse region) are rounded to six
//! decimals; the JSON report keeps full precision.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{DecisionCell, Sweep};
use crate::error::{Error, Result};
use crate::model::{AgentKind, AgentTrack, EgoState, EnvAgentState, Environment, Trajectory};
use crate::scoring::EvaluationReport;

pub const TRAJECTORY_HEADER: [&str; 6] = ["id", "t", "x", "y", "heading", "speed"];
pub const ENVIRONMENT_HEADER: [&str; 7] = ["id", "t", "x", "y", "heading", "speed", "kind"];

fn score(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("in-memory csv writer");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub fn trajectories_to_csv(trajectories: &[Trajectory]) -> String {
    let mut w = csv_writer();
    w.write_record(TRAJECTORY_HEADER).expect("in-memory write");
    for traj in trajectories {
        for s in traj.states() {
            w.write_record([
                traj.id().to_owned(),
                s.t.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.heading.to_string(),
                s.speed.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    finish(w)
}

pub fn environment_to_csv(environment: &Environment) -> String {
    let mut w = csv_writer();
    w.write_record(ENVIRONMENT_HEADER).expect("in-memory write");
    for agent in environment.agents() {
        for s in agent.states() {
            w.write_record([
                agent.id().to_owned(),
                s.t.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.heading.to_string(),
                s.speed.to_string(),
                s.kind.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    finish(w)
}

struct Table {
    rows: Vec<csv::StringRecord>,
}

fn parse_table(text: &str, path: &Path, expected: &[&str]) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::parse(
            path,
            format!("expected header {expected:?}, found {got:?}"),
        ));
    }
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(path, e))?;
    Ok(Table { rows })
}

fn number(record: &csv::StringRecord, col: usize, path: &Path, line: usize) -> Result<f64> {
    let raw = &record[col];
    raw.parse::<f64>()
        .map_err(|e| Error::parse(path, format!("row {line}: {raw:?}: {e}")))
}

/// Groups contiguous rows by id, keeping first-appearance order.
fn group_rows(rows: &[csv::StringRecord], path: &Path) -> Result<Vec<(String, Vec<usize>)>> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let id = &row[0];
        match groups.last_mut() {
            Some((last, idx)) if last == id => idx.push(i),
            _ => {
                if groups.iter().any(|(g, _)| g == id) {
                    return Err(Error::parse(
                        path,
                        format!("rows of {id:?} are not contiguous (row {})", i + 2),
                    ));
                }
                groups.push((id.to_owned(), vec![i]));
            }
        }
    }
    Ok(groups)
}

pub fn trajectories_from_csv(text: &str, path: &Path) -> Result<Vec<Trajectory>> {
    let table = parse_table(text, path, &TRAJECTORY_HEADER)?;
    let mut out = Vec::new();
    for (id, idx) in group_rows(&table.rows, path)? {
        let states = idx
            .iter()
            .map(|&i| {
                let r = &table.rows[i];
                let n = |c| number(r, c, path, i + 2);
                EgoState::new(n(1)?, n(2)?, n(3)?, n(4)?, n(5)?)
            })
            .collect::<Result<Vec<_>>>()?;
        if states.len() < 2 {
            return Err(Error::parse(
                path,
                format!("trajectory {id:?} has fewer than 2 states"),
            ));
        }
        let dt = states[1].t - states[0].t;
        out.push(Trajectory::new(id, dt, states)?);
    }
    if out.is_empty() {
        return Err(Error::parse(path, "no trajectories"));
    }
    Ok(out)
}

pub fn environment_from_csv(text: &str, path: &Path) -> Result<Environment> {
    let table = parse_table(text, path, &ENVIRONMENT_HEADER)?;
    let mut agents = Vec::new();
    for (id, idx) in group_rows(&table.rows, path)? {
        let states = idx
            .iter()
            .map(|&i| {
                let r = &table.rows[i];
                let n = |c| number(r, c, path, i + 2);
                Ok(EnvAgentState {
                    t: n(1)?,
                    x: n(2)?,
                    y: n(3)?,
                    heading: n(4)?,
                    speed: n(5)?,
                    kind: r[6].parse::<AgentKind>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        agents.push(AgentTrack::new(id, states)?);
    }
    Ok(Environment::new(agents))
}

pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    trajectories_from_csv(&read_text(path)?, path)
}

pub fn read_environment(path: &Path) -> Result<Environment> {
    environment_from_csv(&read_text(path)?, path)
}

pub fn report_to_json(report: &EvaluationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// One row per candidate in ranking order.
///
/// Columns: `candidate,rank,S,S_w,B`, one `S_<agent>` per agent, one
/// `F_<agent>_<reason>` per reason, and `tie_group` (members joined by `|`,
/// empty when untied).
pub fn report_to_csv(report: &EvaluationReport) -> String {
    let mut w = csv_writer();
    let mut header = vec![
        "candidate".to_owned(),
        "rank".into(),
        "S".into(),
        "S_w".into(),
        "B".into(),
    ];
    let first = report.candidates.first();
    for agent in &report.agents {
        header.push(format!("S_{agent}"));
    }
    if let Some(c) = first {
        for a in &c.agents {
            for r in &a.reasons {
                header.push(format!("F_{}_{}", a.id, r.id));
            }
        }
    }
    header.push("tie_group".into());
    w.write_record(&header).expect("in-memory write");

    for (rank, id) in report.ranking.iter().enumerate() {
        let c = report
            .candidate(id)
            .expect("ranking lists report candidates");
        let mut row = vec![
            c.id.clone(),
            (rank + 1).to_string(),
            score(c.total),
            score(c.s_w),
            score(c.balance),
        ];
        row.extend(c.agents.iter().map(|a| score(a.score)));
        for a in &c.agents {
            row.extend(a.reasons.iter().map(|r| score(r.f)));
        }
        let group = report
            .ties
            .iter()
            .find(|g| g.contains(id))
            .map(|g| g.join("|"))
            .unwrap_or_default();
        row.push(group);
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

fn weight_header(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("w{i}")).collect()
}

/// `w1..wn,B,S_<id>...,best`, one row per cell in lattice order.
pub fn sweep_to_csv(sweep: &Sweep) -> String {
    let mut w = csv_writer();
    let n = sweep.cells.first().map_or(0, |c| c.weights.len());
    let mut header = weight_header(n);
    header.push("B".into());
    header.extend(sweep.candidate_ids.iter().map(|id| format!("S_{id}")));
    header.push("best".into());
    w.write_record(&header).expect("in-memory write");
    for cell in &sweep.cells {
        let mut row: Vec<String> = cell.weights.w().iter().map(|v| score(*v)).collect();
        row.push(score(cell.balance));
        row.extend(cell.scores.iter().map(|v| score(*v)));
        row.push(cell.best.label().to_owned());
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

/// `w1..wn,B,S` for the cells won by one candidate.
pub fn inverse_region_to_csv(sweep: &Sweep, candidate: &str, cells: &[&DecisionCell]) -> String {
    let mut w = csv_writer();
    let n = sweep.cells.first().map_or(0, |c| c.weights.len());
    let col = sweep.candidate_ids.iter().position(|id| id == candidate);
    let mut header = weight_header(n);
    header.push("B".into());
    header.push("S".into());
    w.write_record(&header).expect("in-memory write");
    for cell in cells {
        let mut row: Vec<String> = cell.weights.w().iter().map(|v| score(*v)).collect();
        row.push(score(cell.balance));
        row.push(col.map(|c| score(cell.scores[c])).unwrap_or_default());
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

/// `t,S_<id>...`: the score of every trajectory prefix.
pub fn timeline_to_csv(times: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let mut w = csv_writer();
    let mut header = vec!["t".to_owned()];
    header.extend(series.iter().map(|(id, _)| format!("S_{id}")));
    w.write_record(&header).expect("in-memory write");
    for (l, t) in times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(series.iter().map(|(_, v)| score(v[l])));
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

/// Reads the `score` column of a CSV file, in row order.
pub fn score_series_from_csv(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    let col = header
        .iter()
        .position(|h| h == "score")
        .ok_or_else(|| Error::parse(path, "missing column \"score\""))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let v = number(&rec, col, path, i + 2)?;
        if !v.is_finite() {
            return Err(Error::parse(
                path,
                format!("row {}: score is not finite", i + 2),
            ));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_score_series(path: &Path) -> Result<Vec<f64>> {
    score_series_from_csv(&read_text(path)?, path)
}

/// Monitor output: the trigger index, or `none`.
pub fn trigger_to_text(trigger: Option<usize>) -> String {
    let mut s = String::new();
    match trigger {
        Some(i) => writeln!(s, "{i}"),
        None => writeln!(s, "none"),
    }
    .expect("string write");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn trajectory_header_is_exact() {
        let t = Trajectory::new(
            "T1",
            0.1,
            vec![
                EgoState::new(0.0, 0.0, -1.75, 0.0, 8.0).unwrap(),
                EgoState::new(0.1, 0.8, -1.75, 0.0, 8.0).unwrap(),
            ],
        )
        .unwrap();
        let text = trajectories_to_csv(&[t]);
        assert!(
            text.starts_with("id,t,x,y,heading,speed\nT1,0,0,-1.75,0,8\n"),
            "{text}"
        );
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = trajectories_from_csv("id,t,x,y\nT1,0,0,0\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn non_contiguous_rows_are_rejected() {
        let text = "id,t,x,y,heading,speed\nA,0,0,0,0,1\nB,0,0,0,0,1\nA,0.1,0,0,0,1\n";
        assert!(trajectories_from_csv(text, p()).is_err());
    }

    #[test]
    fn score_series_needs_score_column() {
        assert_eq!(
            score_series_from_csv("t,score\n0,0.9\n1,0.5\n", p()).unwrap(),
            vec![0.9, 0.5]
        );
        assert!(score_series_from_csv("t,value\n0,0.9\n", p()).is_err());
    }

    #[test]
    fn trigger_text() {
        assert_eq!(trigger_to_text(Some(2)), "2\n");
        assert_eq!(trigger_to_text(None), "none\n");
    }

    proptest! {
        #[test]
        fn trajectory_csv_round_trip_is_bit_exact(
            xs in proptest::collection::vec(-1e6f64..1e6, 2..20),
            dt in 0.01f64..1.0,
            y in -10.0f64..10.0,
            heading in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            let states: Vec<EgoState> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| EgoState::new(i as f64 * dt, *x, y / (i + 1) as f64, heading, x.abs()).unwrap())
                .collect();
            let t = Trajectory::new("c", dt, states).unwrap();
            let back = trajectories_from_csv(&trajectories_to_csv(std::slice::from_ref(&t)), p()).unwrap();
            prop_assert_eq!(back.len(), 1);
            for (a, b) in t.states().iter().zip(back[0].states()) {
                prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
                prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
                prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
                prop_assert_eq!(a.heading.to_bits(), b.heading.to_bits());
                prop_assert_eq!(a.speed.to_bits(), b.speed.to_bits());
            }
        }
    }
}
