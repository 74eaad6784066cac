//! Result rows and their CSV form.
//!
//! All experiments share one column layout so that rows can be concatenated
//! and re-checked. Missing values are empty cells. Wall time is measured for
//! every row but only written when asked for, because it would break
//! byte-identical reruns.

use std::io::Write;

use hoe::bounds::{eoe_excess_bound_radius, hoe_excess_bound, hoe_excess_bound_radius, loss_range_hoe, BoundInputs, RademacherVariant};

use crate::CliError;

pub const COLUMNS: [&str; 20] = [
    "experiment",
    "method",
    "seed",
    "n",
    "d",
    "m",
    "R",
    "C",
    "delta",
    "alpha",
    "L",
    "measured",
    "risk",
    "reference",
    "stderr",
    "complexity_term",
    "concentration_term",
    "bound_total",
    "ratio",
    "pass",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultRow {
    pub experiment: String,
    /// Method or bound variant.
    pub method: String,
    pub seed: Option<u64>,
    pub n: usize,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub radius: Option<f64>,
    pub mean_radius: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub lipschitz: Option<f64>,
    /// Excess risk, Monte Carlo estimate or expected risk, by experiment.
    pub measured: Option<f64>,
    /// Expected risk of the fitted embedding.
    pub risk: Option<f64>,
    /// Reference value the measurement is compared with.
    pub reference: Option<f64>,
    pub stderr: Option<f64>,
    pub complexity_term: Option<f64>,
    pub concentration_term: Option<f64>,
    pub bound_total: Option<f64>,
    pub ratio: Option<f64>,
    pub pass: Option<bool>,
    /// Failure message or caveat; never contains commas or newlines.
    pub note: String,
    pub wall_time_ms: f64,
}

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn clean(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

pub fn write_rows(rows: &[ResultRow], out: &mut impl Write, timing: bool) -> Result<(), CliError> {
    let mut header = COLUMNS.join(",");
    header.push_str(",note");
    if timing {
        header.push_str(",wall_time_ms");
    }
    writeln!(out, "{header}")?;
    for r in rows {
        let mut fields = vec![
            clean(&r.experiment),
            clean(&r.method),
            cell(&r.seed),
            r.n.to_string(),
            cell(&r.d),
            cell(&r.m),
            cell(&r.radius),
            cell(&r.mean_radius),
            cell(&r.delta),
            cell(&r.alpha),
            cell(&r.lipschitz),
            cell(&r.measured),
            cell(&r.risk),
            cell(&r.reference),
            cell(&r.stderr),
            cell(&r.complexity_term),
            cell(&r.concentration_term),
            cell(&r.bound_total),
            cell(&r.ratio),
            cell(&r.pass),
            clean(&r.note),
        ];
        if timing {
            fields.push(r.wall_time_ms.to_string());
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str, line: usize, col: &str) -> Result<Option<T>, CliError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| CliError::Validation(format!("results line {line}: bad {col} `{s}`")))
}

/// Read rows written by [`write_rows`] (with or without timing).
pub fn parse_rows(text: &str) -> Result<Vec<ResultRow>, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| CliError::Validation("empty results file".into()))?;
    let expected = format!("{},note", COLUMNS.join(","));
    if !header.starts_with(&expected) {
        return Err(CliError::Validation("results header does not match".into()));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let no = idx + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < COLUMNS.len() + 1 {
            return Err(CliError::Validation(format!("results line {no}: too few fields")));
        }
        rows.push(ResultRow {
            experiment: f[0].to_string(),
            method: f[1].to_string(),
            seed: parse_opt(f[2], no, "seed")?,
            n: parse_opt(f[3], no, "n")?.unwrap_or(0),
            d: parse_opt(f[4], no, "d")?,
            m: parse_opt(f[5], no, "m")?,
            radius: parse_opt(f[6], no, "R")?,
            mean_radius: parse_opt(f[7], no, "C")?,
            delta: parse_opt(f[8], no, "delta")?,
            alpha: parse_opt(f[9], no, "alpha")?,
            lipschitz: parse_opt(f[10], no, "L")?,
            measured: parse_opt(f[11], no, "measured")?,
            risk: parse_opt(f[12], no, "risk")?,
            reference: parse_opt(f[13], no, "reference")?,
            stderr: parse_opt(f[14], no, "stderr")?,
            complexity_term: parse_opt(f[15], no, "complexity_term")?,
            concentration_term: parse_opt(f[16], no, "concentration_term")?,
            bound_total: parse_opt(f[17], no, "bound_total")?,
            ratio: parse_opt(f[18], no, "ratio")?,
            pass: parse_opt(f[19], no, "pass")?,
            note: f[20].to_string(),
            wall_time_ms: parse_opt(f.get(21).copied().unwrap_or(""), no, "wall_time_ms")?.unwrap_or(0.0),
        });
    }
    Ok(rows)
}

/// Re-evaluate a row's bound terms from its echoed parameters. `None` when
/// the row carries no bound or lacks the parameters to recompute it.
pub fn recheck_row(row: &ResultRow) -> Option<bool> {
    let (l, r, m, delta) = (row.lipschitz?, row.radius?, row.m?, row.delta?);
    let n = row.n;
    let method = row.method.as_str();
    let variant_of = |name: &str| -> Option<&'static str> {
        ["hoe_theorem1", "hoe_lemma5_stated", "hoe_radius", "eoe_radius"]
            .into_iter()
            .find(|v| name == *v || name.ends_with(&format!("/{v}")))
    };
    let rep = match variant_of(method)? {
        "hoe_radius" => hoe_excess_bound_radius(l, r, n, m, delta).ok()?,
        "eoe_radius" => eoe_excess_bound_radius(l, r, n, m, delta).ok()?,
        v => {
            let inputs = BoundInputs {
                lipschitz_l: l,
                radius_r: r,
                mean_radius_c: row.mean_radius?,
                loss_range_b: loss_range_hoe(l, r),
                n,
                m,
                delta,
                nuclear_gamma: 0.0,
                max_b: 0.0,
            };
            let variant = if v == "hoe_theorem1" { RademacherVariant::Theorem1 } else { RademacherVariant::Lemma5Stated };
            hoe_excess_bound(&inputs, variant).ok()?
        }
    };
    Some(
        row.complexity_term == Some(rep.complexity_term)
            && row.concentration_term == Some(rep.concentration_term)
            && row.bound_total == Some(rep.total),
    )
}
