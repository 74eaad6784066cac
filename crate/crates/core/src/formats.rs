//! Plain-text and CSV formats.
//!
//! Entity ids are 1-based in every file and 0-based in memory. Floats are
//! written with Rust's shortest round-trip formatting, so a write followed
//! by a read reproduces values bit for bit and output is byte-stable.
//!
//! | file         | layout                                           |
//! |--------------|--------------------------------------------------|
//! | tree         | `u v weight` per line, `#` starts a comment      |
//! | observations | CSV `t,i,j,k,y`, `y` in `{-1, 1}`                |
//! | embedding    | CSV `id,c0,..,cd` (hyperbolic) or `id,c1,..,cd`  |
//! | trace        | CSV `epoch,empirical_risk`                       |
//! | matrix       | dense CSV, row-major, no header                  |
//! | tree summary | `{tau=<f>, margin_ok=<bool>, worst_gap=<f>}`     |

use std::io::Write;

use crate::dataset::{Triplet, TripletObservation, WeightedTree};
use crate::embed::{Embedding, Space};
use crate::gramian::Matrix;
use crate::hypgeo::HyperPoint;
use crate::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{}`", s.trim())))
}

fn parse_id(s: &str, line: usize) -> Result<usize> {
    let id: usize = parse_field(s, line, "id")?;
    if id == 0 {
        return Err(parse_err(line, "ids are 1-based"));
    }
    Ok(id - 1)
}

/// Non-empty lines with 1-based numbers, comments stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn expect_header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, expected: &str) -> Result<()> {
    match lines.next() {
        Some((_, h)) if h.replace(' ', "") == expected => Ok(()),
        Some((no, h)) => Err(parse_err(no, format!("expected header `{expected}`, found `{h}`"))),
        None => Err(parse_err(1, format!("missing header `{expected}`"))),
    }
}

pub fn parse_tree(text: &str) -> Result<WeightedTree> {
    let mut edges = Vec::new();
    for (no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(no, format!("expected `u v weight`, found `{line}`")));
        }
        let u = parse_id(fields[0], no)?;
        let v = parse_id(fields[1], no)?;
        let w: f64 = parse_field(fields[2], no, "weight")?;
        edges.push((u, v, w));
    }
    let n = edges.len() + 1;
    WeightedTree::new(n, edges)
}

pub fn write_tree(tree: &WeightedTree, out: &mut impl Write) -> Result<()> {
    writeln!(out, "# u v weight")?;
    for &(u, v, w) in tree.edges() {
        writeln!(out, "{} {} {}", u + 1, v + 1, w)?;
    }
    Ok(())
}

/// Observations over `n` entities (`None` infers `n` from the largest id).
pub fn parse_observations(text: &str, n: Option<usize>) -> Result<Vec<TripletObservation>> {
    let mut lines = content_lines(text);
    expect_header(&mut lines, "t,i,j,k,y")?;
    let mut raw = Vec::new();
    for (no, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(no, format!("expected 5 fields, found {}", f.len())));
        }
        let _: usize = parse_field(f[0], no, "index")?;
        let (i, j, k) = (parse_id(f[1], no)?, parse_id(f[2], no)?, parse_id(f[3], no)?);
        let y: i8 = parse_field(f[4], no, "label")?;
        raw.push((no, i, j, k, y));
    }
    let n = n.unwrap_or_else(|| raw.iter().map(|r| r.1.max(r.2).max(r.3) + 1).max().unwrap_or(0));
    raw.into_iter()
        .map(|(no, i, j, k, y)| {
            let t = Triplet::new(i, j, k, n).map_err(|e| parse_err(no, e.to_string()))?;
            TripletObservation::new(t, y).map_err(|e| parse_err(no, e.to_string()))
        })
        .collect()
}

pub fn write_observations(obs: &[TripletObservation], out: &mut impl Write) -> Result<()> {
    writeln!(out, "t,i,j,k,y")?;
    for (t, o) in obs.iter().enumerate() {
        let tr = o.triplet;
        writeln!(out, "{},{},{},{},{}", t + 1, tr.i + 1, tr.j + 1, tr.k + 1, o.label)?;
    }
    Ok(())
}

pub fn parse_embedding(text: &str) -> Result<Embedding> {
    let mut lines = content_lines(text);
    let (hno, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "id" {
        return Err(parse_err(hno, format!("bad embedding header `{header}`")));
    }
    let space = if cols[1] == "c0" { Space::Hyperbolic } else { Space::Euclidean };
    let first = if space == Space::Hyperbolic { 0 } else { 1 };
    for (a, c) in cols[1..].iter().enumerate() {
        if *c != format!("c{}", a + first) {
            return Err(parse_err(hno, format!("unexpected column `{c}`")));
        }
    }
    let width = cols.len() - 1;
    let mut rows = Vec::new();
    for (no, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != width + 1 {
            return Err(parse_err(no, format!("expected {} fields, found {}", width + 1, f.len())));
        }
        let id = parse_id(f[0], no)?;
        if id != rows.len() {
            return Err(parse_err(no, format!("ids must run 1..n in order, found {}", id + 1)));
        }
        let coords = f[1..]
            .iter()
            .map(|s| parse_field::<f64>(s, no, "coordinate"))
            .collect::<Result<Vec<_>>>()?;
        rows.push((no, coords));
    }
    match space {
        Space::Hyperbolic => {
            let points = rows
                .into_iter()
                .map(|(no, c)| HyperPoint::from_coords(c).map_err(|e| parse_err(no, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            Embedding::hyperbolic(points)
        }
        Space::Euclidean => Embedding::euclidean(rows.into_iter().map(|r| r.1).collect()),
    }
}

pub fn write_embedding(emb: &Embedding, out: &mut impl Write) -> Result<()> {
    let n = crate::embed::PairwiseDistances::len(emb);
    let (first, width) = match emb.space() {
        Space::Hyperbolic => (0, emb.dim() + 1),
        Space::Euclidean => (1, emb.dim()),
    };
    let header: Vec<String> = (first..first + width).map(|a| format!("c{a}")).collect();
    writeln!(out, "id,{}", header.join(","))?;
    for a in 0..n {
        let row: Vec<String> = emb.coords(a).iter().map(f64::to_string).collect();
        writeln!(out, "{},{}", a + 1, row.join(","))?;
    }
    Ok(())
}

pub fn write_trace(trace: &[(usize, f64)], out: &mut impl Write) -> Result<()> {
    writeln!(out, "epoch,empirical_risk")?;
    for (e, r) in trace {
        writeln!(out, "{e},{r}")?;
    }
    Ok(())
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (no, line) in content_lines(text) {
        let row = line
            .split(',')
            .map(|s| parse_field::<f64>(s, no, "entry"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(no, format!("row has {} entries, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(Matrix::from_fn(rows.len(), cols, |a, b| rows[a][b]))
}

pub fn write_matrix(m: &Matrix, out: &mut impl Write) -> Result<()> {
    for a in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|b| m[(a, b)].to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// One-line summary of a margin construction.
pub fn tree_summary(tau: f64, margin_ok: bool, worst_gap: f64) -> String {
    format!("{{tau={tau}, margin_ok={margin_ok}, worst_gap={worst_gap}}}")
}
