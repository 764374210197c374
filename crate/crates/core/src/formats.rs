//! Dump and parse formats.
//!
//! Three line formats cross the crate boundary: schedule documents (JSON and
//! a CSV that mirrors the schedule tables: one `b` row, then the receive rows
//! `k = 0..q-1`, then the send rows), trace exports (one
//! `round,sender,receiver,block` record per line under a `#` summary
//! header), and bench CSV (`p,total_seconds,per_rank_us`). Every writer here
//! has a matching parser so dumps can be consumed back by the test harness
//! and other tools.

use crate::bench::BenchRow;
use crate::circulant::Topology;
use crate::error::Error;
use crate::schedule::{recv_schedule, renumber_for_root, send_schedule};
use crate::sim::TraceEvent;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Shape(String),
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Parse { line, msg: msg.into() })
}

/// Schedules for one rank within a [`ScheduleDoc`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankSchedule {
    pub r: usize,
    pub baseblock: usize,
    pub recv: Vec<i32>,
    pub send: Vec<i32>,
}

/// All schedules for one processor count, as dumped by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub p: usize,
    pub q: usize,
    pub sigma: Vec<usize>,
    pub ranks: Vec<RankSchedule>,
}

/// Compute the schedule document for `p` ranks with the given root; rank
/// `r`'s row holds the schedules of the renumbered rank `(r - root) mod p`.
pub fn schedule_doc(topo: &Topology, root: usize) -> Result<ScheduleDoc, Error> {
    let p = topo.p();
    if root >= p {
        return Err(Error::RootOutOfRange { root, p });
    }
    let mut ranks = Vec::with_capacity(p);
    for r in 0..p {
        let rr = renumber_for_root(r, root, p);
        let recv = recv_schedule(topo, rr)?;
        let send = send_schedule(topo, rr)?;
        ranks.push(RankSchedule {
            r,
            baseblock: recv.baseblock,
            recv: recv.blocks,
            send: send.blocks,
        });
    }
    Ok(ScheduleDoc {
        p,
        q: topo.q(),
        sigma: topo.skips().to_vec(),
        ranks,
    })
}

impl ScheduleDoc {
    /// Structural consistency: the skip table matches the halving family for
    /// `p`, and every rank row has the right shape.
    pub fn validate(&self) -> Result<(), FormatError> {
        let topo = Topology::new(self.p)
            .map_err(|e| FormatError::Shape(e.to_string()))?;
        if self.q != topo.q() {
            return Err(FormatError::Shape(format!(
                "q={} but ceil(log2 {}) = {}",
                self.q,
                self.p,
                topo.q()
            )));
        }
        if self.sigma != topo.skips() {
            return Err(FormatError::Shape("skip table does not match p".into()));
        }
        if self.ranks.len() != self.p {
            return Err(FormatError::Shape(format!(
                "{} rank rows for p={}",
                self.ranks.len(),
                self.p
            )));
        }
        for (i, rank) in self.ranks.iter().enumerate() {
            if rank.r != i {
                return Err(FormatError::Shape(format!("rank row {i} labeled {}", rank.r)));
            }
            if rank.recv.len() != self.q || rank.send.len() != self.q {
                return Err(FormatError::Shape(format!("rank {i} rows are not length q")));
            }
            if rank.baseblock > self.q {
                return Err(FormatError::Shape(format!(
                    "rank {i} baseblock {} out of range",
                    rank.baseblock
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule documents serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, FormatError> {
        let doc: ScheduleDoc = serde_json::from_str(s)?;
        doc.validate()?;
        Ok(doc)
    }

    /// CSV in table layout: a rank header, the baseblock row, the receive
    /// rows top to bottom, then the send rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let row = |label: &str, cells: &mut dyn Iterator<Item = String>| {
            let mut line = label.to_string();
            for cell in cells {
                line.push(',');
                line.push_str(&cell);
            }
            line.push('\n');
            line
        };
        out.push_str(&row("r", &mut (0..self.p).map(|r| r.to_string())));
        out.push_str(&row(
            "b",
            &mut self.ranks.iter().map(|r| r.baseblock.to_string()),
        ));
        for k in 0..self.q {
            out.push_str(&row(
                &format!("recv{k}"),
                &mut self.ranks.iter().map(|r| r.recv[k].to_string()),
            ));
        }
        for k in 0..self.q {
            out.push_str(&row(
                &format!("send{k}"),
                &mut self.ranks.iter().map(|r| r.send[k].to_string()),
            ));
        }
        out
    }

    pub fn from_csv(s: &str) -> Result<Self, FormatError> {
        let mut lines = s.lines().enumerate();
        let (_, header) = match lines.next() {
            Some(h) => h,
            None => return parse_err(1, "empty document"),
        };
        let mut cols = header.split(',');
        if cols.next() != Some("r") {
            return parse_err(1, "expected rank header row");
        }
        let mut p = 0usize;
        for (i, col) in cols.enumerate() {
            if col.parse::<usize>() != Ok(i) {
                return parse_err(1, format!("rank column {i} labeled {col:?}"));
            }
            p = i + 1;
        }
        if p == 0 {
            return parse_err(1, "no rank columns");
        }
        let topo = Topology::new(p).map_err(|e| FormatError::Shape(e.to_string()))?;
        let q = topo.q();

        let mut expect_row = |label: String| -> Result<Vec<i64>, FormatError> {
            let (idx, line) = match lines.next() {
                Some(l) => l,
                None => return parse_err(0, format!("missing row {label}")),
            };
            let mut cells = line.split(',');
            if cells.next() != Some(label.as_str()) {
                return parse_err(idx + 1, format!("expected row {label}"));
            }
            let values: Result<Vec<i64>, _> = cells.map(str::parse).collect();
            match values {
                Ok(v) if v.len() == p => Ok(v),
                Ok(v) => parse_err(idx + 1, format!("{} cells for p={p}", v.len())),
                Err(e) => parse_err(idx + 1, e.to_string()),
            }
        };

        let baseblocks = expect_row("b".into())?;
        let mut recv_rows = Vec::with_capacity(q);
        for k in 0..q {
            recv_rows.push(expect_row(format!("recv{k}"))?);
        }
        let mut send_rows = Vec::with_capacity(q);
        for k in 0..q {
            send_rows.push(expect_row(format!("send{k}"))?);
        }
        if let Some((idx, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return parse_err(idx + 1, format!("unexpected trailing row {line:?}"));
        }

        let int32 = |v: i64| -> Result<i32, FormatError> {
            i32::try_from(v).map_err(|_| FormatError::Shape(format!("entry {v} out of range")))
        };
        let mut ranks = Vec::with_capacity(p);
        for r in 0..p {
            let baseblock = usize::try_from(baseblocks[r])
                .map_err(|_| FormatError::Shape(format!("negative baseblock for rank {r}")))?;
            let recv: Result<Vec<i32>, _> = recv_rows.iter().map(|row| int32(row[r])).collect();
            let send: Result<Vec<i32>, _> = send_rows.iter().map(|row| int32(row[r])).collect();
            ranks.push(RankSchedule { r, baseblock, recv: recv?, send: send? });
        }
        let doc = ScheduleDoc { p, q, sigma: topo.skips().to_vec(), ranks };
        doc.validate()?;
        Ok(doc)
    }

    /// Human-readable table with aligned columns, one column per rank.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, Vec<String>)> = Vec::with_capacity(2 * self.q + 2);
        rows.push(("r".into(), (0..self.p).map(|r| r.to_string()).collect()));
        rows.push((
            "b".into(),
            self.ranks.iter().map(|r| r.baseblock.to_string()).collect(),
        ));
        for k in 0..self.q {
            rows.push((
                format!("recv{k}"),
                self.ranks.iter().map(|r| r.recv[k].to_string()).collect(),
            ));
        }
        for k in 0..self.q {
            rows.push((
                format!("send{k}"),
                self.ranks.iter().map(|r| r.send[k].to_string()).collect(),
            ));
        }
        let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let cell_width = rows
            .iter()
            .flat_map(|(_, cells)| cells.iter().map(String::len))
            .max()
            .unwrap_or(1);
        let mut out = String::new();
        for (label, cells) in rows {
            out.push_str(&format!("{label:<label_width$}:"));
            for cell in cells {
                out.push_str(&format!(" {cell:>cell_width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Summary header of a trace export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub collective: String,
    pub p: usize,
    pub n: usize,
    pub root: Option<usize>,
    pub rounds: usize,
    pub ok: bool,
}

/// Render a trace as a `#` summary header plus one
/// `round,sender,receiver,block` record per line.
pub fn trace_to_lines(meta: &TraceMeta, events: &[TraceEvent]) -> String {
    let mut out = format!(
        "# collective={} p={} n={}",
        meta.collective, meta.p, meta.n
    );
    if let Some(root) = meta.root {
        out.push_str(&format!(" root={root}"));
    }
    out.push_str(&format!(" rounds={} ok={}\n", meta.rounds, meta.ok));
    for ev in events {
        out.push_str(&format!(
            "{},{},{},{}\n",
            ev.round, ev.sender, ev.receiver, ev.block
        ));
    }
    out
}

/// Parse a trace export produced by [`trace_to_lines`].
pub fn parse_trace(s: &str) -> Result<(TraceMeta, Vec<TraceEvent>), FormatError> {
    let mut meta: Option<TraceMeta> = None;
    let mut events = Vec::new();
    for (idx, line) in s.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut collective = None;
            let mut p = None;
            let mut n = None;
            let mut root = None;
            let mut rounds = None;
            let mut ok = None;
            for field in rest.split_whitespace() {
                let (key, value) = match field.split_once('=') {
                    Some(kv) => kv,
                    None => return parse_err(idx + 1, format!("bad header field {field:?}")),
                };
                let bad = |e: String| FormatError::Parse { line: idx + 1, msg: e };
                match key {
                    "collective" => collective = Some(value.to_string()),
                    "p" => p = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
                    "n" => n = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
                    "root" => root = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
                    "rounds" => rounds = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
                    "ok" => ok = Some(value.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?),
                    _ => return parse_err(idx + 1, format!("unknown header key {key:?}")),
                }
            }
            match (collective, p, n, rounds, ok) {
                (Some(collective), Some(p), Some(n), Some(rounds), Some(ok)) => {
                    meta = Some(TraceMeta { collective, p, n, root, rounds, ok });
                }
                _ => return parse_err(idx + 1, "incomplete header"),
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return parse_err(idx + 1, "expected round,sender,receiver,block");
        }
        let num = |s: &str| -> Result<usize, FormatError> {
            s.parse()
                .map_err(|e: std::num::ParseIntError| FormatError::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })
        };
        events.push(TraceEvent {
            round: num(fields[0])?,
            sender: num(fields[1])?,
            receiver: num(fields[2])?,
            block: num(fields[3])?,
        });
    }
    match meta {
        Some(meta) => Ok((meta, events)),
        None => parse_err(1, "missing summary header"),
    }
}

/// Bench CSV with a fixed header; floats use the shortest round-trip form.
pub fn bench_rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("p,total_seconds,per_rank_us\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.p, row.total_seconds, row.per_rank_us));
    }
    out
}

/// Parse bench CSV back into rows.
pub fn parse_bench_csv(s: &str) -> Result<Vec<BenchRow>, FormatError> {
    let mut lines = s.lines().enumerate();
    match lines.next() {
        Some((_, "p,total_seconds,per_rank_us")) => {}
        _ => return parse_err(1, "missing bench header"),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return parse_err(idx + 1, "expected p,total_seconds,per_rank_us");
        }
        let bad = |e: String| FormatError::Parse { line: idx + 1, msg: e };
        rows.push(BenchRow {
            p: fields[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            total_seconds: fields[1]
                .parse()
                .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            per_rank_us: fields[2]
                .parse()
                .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_for(p: usize) -> ScheduleDoc {
        schedule_doc(&Topology::new(p).unwrap(), 0).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let doc = doc_for(17);
        assert_eq!(ScheduleDoc::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn csv_round_trip() {
        for p in [1, 2, 9, 17, 18] {
            let doc = doc_for(p);
            assert_eq!(ScheduleDoc::from_csv(&doc.to_csv()).unwrap(), doc, "p={p}");
        }
    }

    #[test]
    fn csv_layout_mirrors_tables() {
        let csv = doc_for(2).to_csv();
        assert_eq!(csv, "r,0,1\nb,1,0\nrecv0,-1,0\nsend0,0,-1\n");
    }

    #[test]
    fn table_is_deterministic() {
        let doc = doc_for(9);
        assert_eq!(doc.to_table(), doc.to_table());
        assert!(doc.to_table().starts_with("r"));
    }

    #[test]
    fn corrupt_csv_is_rejected() {
        assert!(ScheduleDoc::from_csv("").is_err());
        assert!(ScheduleDoc::from_csv("r,0,1\nb,1\n").is_err());
        // Right shape, wrong label.
        let bad = doc_for(4).to_csv().replace("recv1", "recvX");
        assert!(ScheduleDoc::from_csv(&bad).is_err());
    }

    #[test]
    fn trace_round_trip() {
        let meta = TraceMeta {
            collective: "broadcast".into(),
            p: 17,
            n: 7,
            root: Some(0),
            rounds: 11,
            ok: true,
        };
        let events = vec![
            TraceEvent { round: 4, sender: 0, receiver: 1, block: 0 },
            TraceEvent { round: 5, sender: 1, receiver: 3, block: 1 },
        ];
        let text = trace_to_lines(&meta, &events);
        let (meta2, events2) = parse_trace(&text).unwrap();
        assert_eq!(meta2, meta);
        assert_eq!(events2, events);
    }

    #[test]
    fn bench_csv_round_trip() {
        let rows = vec![
            BenchRow { p: 17, total_seconds: 0.25, per_rank_us: 0.334 },
            BenchRow { p: 1024, total_seconds: 1.5, per_rank_us: 0.5 },
        ];
        let csv = bench_rows_to_csv(&rows);
        assert_eq!(parse_bench_csv(&csv).unwrap(), rows);
        assert_eq!(parse_bench_csv("p,total_seconds,per_rank_us\n").unwrap(), vec![]);
    }
}
