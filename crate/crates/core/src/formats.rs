//! Plain-text file formats shared by the CLI and the service.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::costs::{PartitionK, SweepRow};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{BalanceMode, Graph};
use crate::irrq::{IrrqConfig, TraceRow};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

/// `n m` then `i j w` per edge.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header `n m`"))?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), hl, "vertex count")?;
    let m: usize = field(toks.next(), hl, "edge count")?;
    let mut edges = Vec::with_capacity(m);
    for (ln, line) in lines {
        let mut t = line.split_whitespace();
        let i: usize = field(t.next(), ln, "endpoint")?;
        let j: usize = field(t.next(), ln, "endpoint")?;
        let w: f64 = field(t.next(), ln, "weight")?;
        if t.next().is_some() {
            return Err(parse_err(ln, "trailing fields"));
        }
        edges.push((i, j, w));
    }
    if edges.len() != m {
        return Err(parse_err(
            hl,
            format!("header promises {m} edges, found {}", edges.len()),
        ));
    }
    Graph::new(n, edges)
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.edge_count());
    for e in g.edges() {
        let _ = writeln!(s, "{} {} {}", e.i, e.j, e.w);
    }
    s
}

/// `n k` then one label per line.
pub fn parse_partition(text: &str) -> Result<PartitionK> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header `n k`"))?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), hl, "vertex count")?;
    let k: usize = field(toks.next(), hl, "block count")?;
    let mut labels = Vec::with_capacity(n);
    for (ln, line) in lines {
        labels.push(field::<usize>(Some(line), ln, "label")?);
    }
    if labels.len() != n {
        return Err(parse_err(
            hl,
            format!("header promises {n} labels, found {}", labels.len()),
        ));
    }
    PartitionK::new(labels, k)
}

pub fn write_partition(p: &PartitionK) -> String {
    let mut s = format!("{} {}\n", p.n(), p.k());
    for l in p.labels() {
        let _ = writeln!(s, "{l}");
    }
    s
}

/// Header `k tau mode`, then one comma-separated row per vertex.
pub fn write_embedding(y: &Embedding, tau: f64, mode: BalanceMode) -> String {
    let mut s = format!("{} {} {}\n", y.k(), tau, mode);
    for i in 0..y.n() {
        let row: Vec<String> = y.row(i).iter().map(f64::to_string).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_embedding(text: &str) -> Result<(Embedding, f64, BalanceMode)> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header `k tau mode`"))?;
    let mut toks = header.split_whitespace();
    let k: usize = field(toks.next(), hl, "column count")?;
    let tau: f64 = field(toks.next(), hl, "tau")?;
    let mode: BalanceMode = field(toks.next(), hl, "mode")?;
    let mut data = Vec::new();
    let mut n = 0;
    for (ln, line) in lines {
        let row: Vec<&str> = line.split(',').map(str::trim).collect();
        if row.len() != k {
            return Err(parse_err(
                ln,
                format!("expected {k} columns, found {}", row.len()),
            ));
        }
        for tok in row {
            data.push(field::<f64>(Some(tok), ln, "coordinate")?);
        }
        n += 1;
    }
    Ok((
        Embedding::from_matrix(DMatrix::from_row_slice(n, k, &data)),
        tau,
        mode,
    ))
}

pub const TRACE_HEADER: &str = "iter,j_tau,epsilon,eig_iters";

pub fn write_trace(rows: &[TraceRow]) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.iter, r.j_tau, r.epsilon, r.eig_iters);
    }
    s
}

pub const SWEEP_HEADER: &str = "alpha,tau_or_p,argmin_class,cost_singleton,cost_balanced,cost_best";

pub fn write_sweep(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.alpha, r.param, r.class, r.cost_singleton, r.cost_balanced, r.cost_best
        );
    }
    s
}

/// Comma-separated reals, or `start:step:stop` inclusive of `stop` up to
/// rounding.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Empty("grid"));
    }
    let bad = |t: &str| Error::Config(format!("bad grid value `{t}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|t| t.trim().parse().map_err(|_| bad(t)))
            .collect::<Result<_>>()?;
        let (start, step, stop) = (v[0], v[1], v[2]);
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::Config(format!("bad grid range `{text}`")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(Error::Config(format!("grid `{text}` is too fine")));
        }
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
        .filter(|r| !matches!(r, Ok(v) if v.is_nan()))
        .collect()
}

/// `key = value` lines naming [`IrrqConfig`] fields; unknown keys are errors.
pub fn parse_config(text: &str, base: IrrqConfig) -> Result<IrrqConfig> {
    let mut cfg = base;
    for (ln, line) in content_lines(text) {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(ln, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let v = Some(value);
        match key {
            "tau" => cfg.tau = field(v, ln, key)?,
            "k" => cfg.k = field(v, ln, key)?,
            "kappa_tilde" => cfg.kappa_tilde = field(v, ln, key)?,
            "max_iters" => cfg.max_iters = field(v, ln, key)?,
            "rel_cost_tol" => cfg.rel_cost_tol = field(v, ln, key)?,
            "eig_tol" => cfg.eig_tol = field(v, ln, key)?,
            "eig_max_iters" => cfg.eig_max_iters = field(v, ln, key)?,
            "seed" => cfg.seed = field(v, ln, key)?,
            other => return Err(parse_err(ln, format!("unknown key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::new(3, [(2, 1, 0.5), (0, 1, 1.0)]).unwrap();
        let text = write_edge_list(&g);
        assert_eq!(text, "3 2\n0 1 1\n1 2 0.5\n");
        assert_eq!(parse_edge_list(&text).unwrap(), g);
        assert!(parse_edge_list("3 2\n0 1 1\n").is_err());
        assert!(parse_edge_list("3 1\n0 1 x\n").is_err());
    }

    #[test]
    fn partition_round_trip() {
        let p = PartitionK::new(vec![1, 0, 1], 2).unwrap();
        let text = write_partition(&p);
        assert_eq!(text, "3 2\n1\n0\n1\n");
        assert_eq!(parse_partition(&text).unwrap(), p);
        assert!(parse_partition("3 3\n0\n1\n1\n").is_err());
    }

    #[test]
    fn embedding_round_trip() {
        let y = Embedding::from_matrix(DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 0.25, 3.0]));
        let text = write_embedding(&y, 1.0, BalanceMode::Ratio);
        assert!(text.starts_with("2 1 ratio\n0.5,-1\n"));
        let (back, tau, mode) = parse_embedding(&text).unwrap();
        assert_eq!(back, y);
        assert_eq!((tau, mode), (1.0, BalanceMode::Ratio));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("1:0.5:2").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:0:2").is_err());
    }

    #[test]
    fn config_text() {
        let cfg = parse_config("# run\ntau = 0.5\nk=3\n", IrrqConfig::default()).unwrap();
        assert_eq!((cfg.tau, cfg.k), (0.5, 3));
        assert!(parse_config("tau = 3\n", IrrqConfig::default()).is_err());
        assert!(parse_config("speed = 1\n", IrrqConfig::default()).is_err());
    }
}
