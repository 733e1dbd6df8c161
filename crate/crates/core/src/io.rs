//! Text artifacts: diagnostic time series (CSV), phase-space snapshots and
//! experiment tables.
//!
//! Floating-point values are written with Rust's shortest round-trip
//! `Display`, so parsing a file back reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{DiagnosticsRecord, Polynomial, ReferenceLaws};
use crate::error::{Error, Result};
use crate::experiments::{ConvergenceReport, MonteCarloReport, Quantity, TimingRow};
use crate::grid::{DensityField, PhaseGrid};

pub const TIMESERIES_HEADER: &str = "t,mass,l1,l2,momentum,kinetic,potential,total,U,grew";
pub const SNAPSHOT_MAGIC: &str = "# vlasov-snapshot v1";

/// Metadata written into the leading comment line of a time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesMeta {
    pub cfg_hash: String,
    pub seed: u64,
    pub laws: ReferenceLaws,
}

fn poly_text(p: &Option<Polynomial>) -> String {
    match p {
        Some(Polynomial([a, b, c])) => format!("{a};{b};{c}"),
        None => "none".into(),
    }
}

fn opt_text(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// `# cfg=<hash> seed=<n> ref_momentum=c0;c1;c2 ref_kinetic=... ref_total=...`
pub fn meta_line(meta: &TimeseriesMeta) -> String {
    format!(
        "# cfg={} seed={} ref_momentum={} ref_kinetic={} ref_total={}",
        meta.cfg_hash,
        meta.seed,
        poly_text(&meta.laws.momentum),
        poly_text(&meta.laws.kinetic),
        poly_text(&meta.laws.total)
    )
}

pub fn timeseries_text(records: &[DiagnosticsRecord], meta: &TimeseriesMeta) -> String {
    let mut out = String::new();
    out.push_str(&meta_line(meta));
    out.push('\n');
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.mass,
            r.l1,
            r.l2,
            r.momentum,
            r.kinetic,
            opt_text(r.potential),
            opt_text(r.total),
            r.half_width,
            u8::from(r.grew)
        );
    }
    out
}

pub fn write_timeseries(records: &[DiagnosticsRecord], meta: &TimeseriesMeta, path: &Path) -> Result<()> {
    fs::write(path, timeseries_text(records, meta))?;
    Ok(())
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad {what} '{s}'") })
}

fn parse_poly(s: &str, line: usize) -> Result<Option<Polynomial>> {
    if s == "none" {
        return Ok(None);
    }
    let c: Vec<f64> = s.split(';').map(|p| parse_f64(p, line, "reference coefficient")).collect::<Result<_>>()?;
    match c.as_slice() {
        [a, b, q] => Ok(Some(Polynomial([*a, *b, *q]))),
        _ => Err(Error::Parse { line, msg: format!("reference law '{s}' needs three coefficients") }),
    }
}

/// Parse a time series written by [`write_timeseries`].
pub fn parse_timeseries(text: &str) -> Result<(TimeseriesMeta, Vec<DiagnosticsRecord>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let rest = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse { line: n, msg: "missing metadata comment".into() })?;
    let (mut hash, mut seed, mut laws) = (None, None, ReferenceLaws::default());
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: n, msg: format!("bad metadata token '{tok}'") })?;
        match k {
            "cfg" => hash = Some(v.to_string()),
            "seed" => seed = Some(v.parse().map_err(|_| Error::Parse { line: n, msg: format!("bad seed '{v}'") })?),
            "ref_momentum" => laws.momentum = parse_poly(v, n)?,
            "ref_kinetic" => laws.kinetic = parse_poly(v, n)?,
            "ref_total" => laws.total = parse_poly(v, n)?,
            _ => return Err(Error::Parse { line: n, msg: format!("unknown metadata key '{k}'") }),
        }
    }
    let meta = TimeseriesMeta {
        cfg_hash: hash.ok_or_else(|| Error::Parse { line: n, msg: "metadata lacks cfg".into() })?,
        seed: seed.ok_or_else(|| Error::Parse { line: n, msg: "metadata lacks seed".into() })?,
        laws,
    };
    match lines.next() {
        Some((_, h)) if h == TIMESERIES_HEADER => {}
        Some((n, h)) => return Err(Error::Parse { line: n, msg: format!("unexpected header '{h}'") }),
        None => return Err(Error::Parse { line: 2, msg: "missing header".into() }),
    }
    let mut records = Vec::new();
    for (n, l) in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Parse { line: n, msg: format!("expected 10 fields, found {}", f.len()) });
        }
        let opt = |s: &str, what| if s.is_empty() { Ok(None) } else { parse_f64(s, n, what).map(Some) };
        records.push(DiagnosticsRecord {
            t: parse_f64(f[0], n, "t")?,
            mass: parse_f64(f[1], n, "mass")?,
            l1: parse_f64(f[2], n, "l1")?,
            l2: parse_f64(f[3], n, "l2")?,
            momentum: parse_f64(f[4], n, "momentum")?,
            kinetic: parse_f64(f[5], n, "kinetic")?,
            potential: opt(f[6], "potential")?,
            total: opt(f[7], "total")?,
            half_width: parse_f64(f[8], n, "U")?,
            grew: match f[9] {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse { line: n, msg: format!("bad grew flag '{other}'") }),
            },
        });
    }
    Ok((meta, records))
}

pub fn read_timeseries(path: &Path) -> Result<(TimeseriesMeta, Vec<DiagnosticsRecord>)> {
    parse_timeseries(&fs::read_to_string(path)?)
}

pub fn snapshot_text(field: &DensityField, t: f64) -> String {
    let g = field.grid();
    let m = g.half_nodes() as isize;
    let mut out = String::with_capacity(g.node_count() * 24 + 96);
    let _ = writeln!(
        out,
        "{SNAPSHOT_MAGIC} L={} dx={} dv={} U={} t={}",
        g.length(),
        g.dx(),
        g.dv(),
        g.half_width(),
        t
    );
    for j in 0..g.nx() {
        for (c, f) in field.row(j).iter().enumerate() {
            let _ = writeln!(out, "{j} {} {f}", c as isize - m);
        }
    }
    out
}

pub fn write_snapshot(field: &DensityField, t: f64, path: &Path) -> Result<()> {
    fs::write(path, snapshot_text(field, t))?;
    Ok(())
}

/// Parse a snapshot; returns the field and its time stamp.
pub fn parse_snapshot(text: &str) -> Result<(DensityField, f64)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines.next().map(|x| x.1).unwrap_or("");
    let rest = header
        .strip_prefix(SNAPSHOT_MAGIC)
        .ok_or_else(|| Error::Parse { line: 1, msg: format!("expected '{SNAPSHOT_MAGIC}' header") })?;
    let mut vals = [None; 5];
    const KEYS: [&str; 5] = ["L", "dx", "dv", "U", "t"];
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("bad header token '{tok}'") })?;
        let i = KEYS
            .iter()
            .position(|key| *key == k)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("unknown header key '{k}'") })?;
        vals[i] = Some(parse_f64(v, 1, k)?);
    }
    let mut get = [0.0; 5];
    for (i, v) in vals.iter().enumerate() {
        get[i] = v.ok_or_else(|| Error::Parse { line: 1, msg: format!("header lacks {}", KEYS[i]) })?;
    }
    let [l, dx, dv, u, t] = get;
    let grid = PhaseGrid::new(l, dx, dv, u).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    let m = grid.half_nodes() as isize;
    let mut values = Vec::with_capacity(grid.node_count());
    for j in 0..grid.nx() {
        for k in -m..=m {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::Parse { line: values.len() + 2, msg: "truncated snapshot".into() })?;
            let mut it = line.split_whitespace();
            let (pj, pk, pv) = match (it.next(), it.next(), it.next(), it.next()) {
                (Some(a), Some(b), Some(c), None) => (a, b, c),
                _ => return Err(Error::Parse { line: n, msg: "expected 'j k value'".into() }),
            };
            if pj.parse::<usize>().ok() != Some(j) || pk.parse::<isize>().ok() != Some(k) {
                return Err(Error::Parse { line: n, msg: format!("expected node ({j}, {k}), found ({pj}, {pk})") });
            }
            values.push(parse_f64(pv, n, "value")?);
        }
    }
    if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Parse { line: n, msg: "trailing data after last node".into() });
    }
    Ok((DensityField::from_values(grid, values)?, t))
}

pub fn read_snapshot(path: &Path) -> Result<(DensityField, f64)> {
    parse_snapshot(&fs::read_to_string(path)?)
}

pub const CONVERGENCE_HEADER: &str = "level,tau,dx,dv,error,order";

/// One row per adjacent level pair; `error` compares level `l` with `l + 1`
/// and `order` is `log2(e_{l-1} / e_l)` (empty on the first row).
pub fn convergence_text(report: &ConvergenceReport) -> String {
    let mut out = format!(
        "# integrator={} samples={} fitted_order={}\n{CONVERGENCE_HEADER}\n",
        report.integrator, report.samples, report.fitted_order
    );
    for (i, row) in report.rows.iter().enumerate() {
        let order = if i == 0 { String::new() } else { report.orders[i - 1].to_string() };
        let _ = writeln!(out, "{},{},{},{},{},{order}", row.level, row.tau, row.dx, row.dv, row.error);
    }
    out
}

pub const TIMING_HEADER: &str = "T,N,adaptive_s,nonadaptive_s,ratio";

pub fn timing_text(rows: &[TimingRow]) -> String {
    let mut out = format!("{TIMING_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.final_time, r.steps, r.adaptive_s, r.nonadaptive_s, r.ratio);
    }
    out
}

/// Mean curves in the time series layout; `grew` becomes the fraction of
/// samples that grew at that step.
pub fn monte_carlo_text(report: &MonteCarloReport, meta: &TimeseriesMeta, standard_error: bool) -> String {
    let mut out = meta_line(meta);
    out.push('\n');
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    let col = |q: Quantity, i: usize| {
        report
            .series(q)
            .map(|s| if standard_error { s.se[i] } else { s.mean[i] }.to_string())
            .unwrap_or_default()
    };
    for (i, t) in report.times.iter().enumerate() {
        let cells: Vec<String> = Quantity::ALL.iter().map(|&q| col(q, i)).collect();
        let _ = writeln!(out, "{t},{}", cells.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> DensityField {
        let g = PhaseGrid::new(1.0, 0.25, 0.5, 1.0).unwrap();
        DensityField::sample(g, |x, v| (x + 0.1).sqrt() * (-v * v).exp() / 3.0)
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let f = field();
        let (back, t) = parse_snapshot(&snapshot_text(&f, 0.125)).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(back.grid(), f.grid());
        let same = back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }

    #[test]
    fn snapshot_layout() {
        let text = snapshot_text(&field(), 0.0);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# vlasov-snapshot v1 L=1 dx=0.25 dv=0.5 U=1 t=0");
        assert!(lines.next().unwrap().starts_with("0 -2 "));
        assert_eq!(text.lines().count(), 1 + 4 * 5);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn snapshot_errors_carry_line_numbers() {
        let text = snapshot_text(&field(), 0.0);
        let bad_header = text.replacen("v1", "v2", 1);
        assert!(matches!(parse_snapshot(&bad_header), Err(Error::Parse { line: 1, .. })));
        let mut lines: Vec<&str> = text.lines().collect();
        lines[4] = "0 3 1.0";
        assert!(matches!(parse_snapshot(&lines.join("\n")), Err(Error::Parse { line: 5, .. })));
        let short: Vec<&str> = text.lines().take(7).collect();
        assert!(matches!(parse_snapshot(&short.join("\n")), Err(Error::Parse { line: 8, .. })));
    }

    #[test]
    fn timeseries_round_trip() {
        let rec = DiagnosticsRecord {
            t: 0.1,
            mass: 1.0,
            l1: 1.0,
            l2: 0.3,
            momentum: -0.0,
            kinetic: 1.5,
            potential: None,
            total: None,
            half_width: 6.25,
            grew: true,
        };
        let meta = TimeseriesMeta {
            cfg_hash: "ab12".into(),
            seed: 9,
            laws: ReferenceLaws { momentum: Some(Polynomial([0.0, 1.0, 0.0])), kinetic: None, total: None },
        };
        let text = timeseries_text(&[rec, rec], &meta);
        assert_eq!(text.lines().nth(1).unwrap(), TIMESERIES_HEADER);
        let (m, r) = parse_timeseries(&text).unwrap();
        assert_eq!(m, meta);
        assert_eq!(r, vec![rec, rec]);
    }
}
