//! CSV emission and parsing. All emitted fields are numeric, so plain
//! comma-joined rows with CRLF-free line endings satisfy RFC 4180; float
//! formatting uses the shortest round-trip representation, which keeps
//! byte-identical reruns byte-identical.

use std::fmt::Write as _;

pub fn survival_curve_csv(rows: &[dbranch::process::SurvivalEstimate]) -> String {
    let mut out = String::from("n,p_z,se_z,p_x,se_x,p_either,se_either\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n, r.p_z, r.se_z, r.p_x, r.se_x, r.p_either, r.se_either
        )
        .expect("string write");
    }
    out
}

pub fn exact_curve_csv(rows: &[(usize, dbranch::process::ExactSurvival)]) -> String {
    let mut out = String::from("n,p_z,p_x,p_either\n");
    for (n, s) in rows {
        writeln!(out, "{},{},{},{}", n, s.pz, s.px, s.peither).expect("string write");
    }
    out
}

pub fn trajectory_csv(records: &[dbranch::process::TrajectoryRecord]) -> String {
    let mut out = String::from("replicate,k,X,Y,Z\n");
    for (rep, rec) in records.iter().enumerate() {
        for k in 0..rec.x.len() {
            let y = if k < rec.y.len() { rec.y[k].to_string() } else { String::new() };
            writeln!(out, "{},{},{},{},{}", rep, k, rec.x[k], y, rec.z[k])
                .expect("string write");
        }
    }
    out
}

/// Empirical tail on a geometric grid: `x, tail_prob, n_exceed`.
pub fn tail_csv(samples: &dbranch::process::TailSamples, points: usize) -> String {
    let mut out = String::from("x,tail_prob,n_exceed\n");
    let resolved = samples.resolved();
    if resolved.is_empty() {
        return out;
    }
    let lo = resolved.iter().copied().find(|&v| v > 0.0).unwrap_or(1.0).max(0.5);
    let hi = resolved.last().copied().unwrap_or(1.0).max(lo * 2.0);
    let ratio = (hi / lo).powf(1.0 / (points.max(2) - 1) as f64);
    let mut x = lo;
    for _ in 0..points {
        writeln!(out, "{},{},{}", x, samples.tail_prob(x), samples.exceed_count(x))
            .expect("string write");
        x *= ratio;
    }
    out
}

pub fn embed_csv(cycles: &[dbranch::embedded::EmbeddedCycle]) -> String {
    let mut out = String::from("tau,zeta_hat,mu1_hat,mu2_hat,theta1_hat,theta2_hat\n");
    for c in cycles {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.tau, c.zeta_hat, c.mu1_hat, c.mu2_hat, c.theta1_hat, c.theta2_hat
        )
        .expect("string write");
    }
    out
}

/// Parse a two-or-more-column numeric CSV with a header row; returns the
/// header names and rows.
pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty CSV")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>()
                }
            })
            .collect();
        let row = row.map_err(|e| format!("line {}: {e}", i + 2))?;
        if row.len() != header.len() {
            return Err(format!("line {}: {} cells, expected {}", i + 2, row.len(), header.len()));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("CSV has no data rows".into());
    }
    Ok((header, rows))
}
