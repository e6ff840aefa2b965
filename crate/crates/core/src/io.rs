//! CSV readers and writers for coefficients, grids, datasets, chains and
//! study tables. Every file has a header row.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{PriorComparison, RateStudyResult};
use crate::inference::ChainResult;
use crate::model::{Dataset, MuSpec};
use crate::prior::SmallBallEstimate;
use crate::wavelet::{CoefficientVector, Layout};

type Writer = csv::Writer<File>;

fn writer(path: &Path) -> Result<Writer> {
    Ok(csv::Writer::from_path(path)?)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::domain("io", format!("line {line}: cannot parse {what} '{field}'")))
}

/// `l,r,value` rows; `r` is 1-based and level 0 is the coarse block.
pub fn write_coefficients(path: impl AsRef<Path>, coeffs: &CoefficientVector) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["l", "r", "value"])?;
    for (l, r, v) in coeffs.iter() {
        w.write_record([l.to_string(), (r + 1).to_string(), num(v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Read an `l,r,value` file; the truncation level is the largest `l` present
/// and every index of the layout must appear exactly once.
pub fn read_coefficients(path: impl AsRef<Path>, dim: usize) -> Result<CoefficientVector> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    check_header(rdr.headers()?, &["l", "r", "value"])?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let l: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::domain("io", format!("line {line}: bad level '{}'", &rec[0])))?;
        let r: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::domain("io", format!("line {line}: bad position '{}'", &rec[1])))?;
        if r == 0 {
            return Err(Error::domain("io", format!("line {line}: positions are 1-based")));
        }
        rows.push((l, r - 1, parse_f64(&rec[2], "value", line)?));
    }
    let max_level = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let layout = Layout::new(dim, max_level)?;
    let mut values = vec![f64::NAN; layout.len()];
    for (l, r, v) in rows {
        let i = layout.flat_index(l, r)?;
        if !values[i].is_nan() {
            return Err(Error::domain(
                "io",
                format!("coefficient (l={l}, r={}) listed twice", r + 1),
            ));
        }
        values[i] = v;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        let (l, r) = layout.locate(i);
        return Err(Error::domain("io", format!("coefficient (l={l}, r={}) missing", r + 1)));
    }
    CoefficientVector::new(layout, values)
}

fn check_header(h: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = h.iter().map(str::trim).collect();
    if got != want {
        return Err(Error::shape("io", format!("header {}", want.join(",")), got.join(",")));
    }
    Ok(())
}

fn point_header(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["x".into()]
    } else {
        (1..=dim).map(|k| format!("x{k}")).collect()
    }
}

/// `x,value` (d = 1) or `x1,x2,value` (d = 2).
pub fn write_grid(path: impl AsRef<Path>, points: &[Vec<f64>], values: &[f64]) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::shape("io", points.len(), values.len()));
    }
    let dim = points.first().map_or(1, Vec::len);
    let mut w = writer(path.as_ref())?;
    let mut header = point_header(dim);
    header.push("value".into());
    w.write_record(&header)?;
    for (p, v) in points.iter().zip(values) {
        let mut row: Vec<String> = p.iter().map(|&c| num(c)).collect();
        row.push(num(*v));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `x,f0,w0` (or `x1,x2,f0,w0`) rows as produced by `TruthFunction::on_grid`.
pub fn write_truth(path: impl AsRef<Path>, rows: &[(Vec<f64>, f64, f64)]) -> Result<()> {
    let dim = rows.first().map_or(1, |r| r.0.len());
    let mut w = writer(path.as_ref())?;
    let mut header = point_header(dim);
    header.extend(["f0".to_string(), "w0".to_string()]);
    w.write_record(&header)?;
    for (p, f0, w0) in rows {
        let mut row: Vec<String> = p.iter().map(|&c| num(c)).collect();
        row.push(num(*f0));
        row.push(num(*w0));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `x1[,x2],y`.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    let mut header: Vec<String> = (1..=data.dim()).map(|k| format!("x{k}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.point(i).iter().map(|&c| num(c)).collect();
        row.push(data.labels()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset file; the dimension follows from the header and the
/// covariate law is recorded as `mu`.
pub fn read_dataset(path: impl AsRef<Path>, mu: MuSpec) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let dim = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x1", "y"] => 1,
        ["x1", "x2", "y"] => 2,
        _ => {
            return Err(Error::shape("io", "header x1,y or x1,x2,y", header.join(",")));
        }
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        for k in 0..dim {
            x.push(parse_f64(&rec[k], "covariate", line)?);
        }
        y.push(match rec[dim].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::domain(
                    "io",
                    format!("line {line}: label must be 0 or 1, got '{other}'"),
                ))
            }
        });
    }
    Dataset::new(dim, x, y, mu)
}

/// `epsilon,p_hat,stderr,n_mc`.
pub fn write_small_ball(path: impl AsRef<Path>, rows: &[SmallBallEstimate]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["epsilon", "p_hat", "stderr", "n_mc"])?;
    for r in rows {
        w.write_record([num(r.epsilon), num(r.p_hat), num(r.stderr), r.n_mc.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per draw, one column `l<l>r<r>` per coefficient.
pub fn write_draws(path: impl AsRef<Path>, draws: &[CoefficientVector]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    if let Some(first) = draws.first() {
        let header: Vec<String> = first.iter().map(|(l, r, _)| format!("l{l}r{}", r + 1)).collect();
        w.write_record(&header)?;
    } else {
        w.write_record(["empty"])?;
    }
    for d in draws {
        w.write_record(d.values().iter().map(|&v| num(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Sample quantile with linear interpolation; `NaN` for empty input.
fn quantile_of(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// One-row chain summary: acceptance, proposal size and log-posterior quantiles.
pub fn write_chain_summary(path: impl AsRef<Path>, chain: &ChainResult) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record([
        "acceptance_rate",
        "step",
        "burn_in_acceptance",
        "n_draws",
        "logpost_q05",
        "logpost_q50",
        "logpost_q95",
        "all_rejected",
    ])?;
    let lp = &chain.log_posterior;
    w.write_record([
        num(chain.acceptance_rate),
        num(chain.step),
        num(chain.burn_in_acceptance),
        chain.n_draws.to_string(),
        num(quantile_of(lp, 0.05)),
        num(quantile_of(lp, 0.5)),
        num(quantile_of(lp, 0.95)),
        chain.all_rejected.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// `n,replicate,error,estimator,family,seed`; excluded replicates have an empty error.
pub fn write_results(path: impl AsRef<Path>, study: &RateStudyResult) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["n", "replicate", "error", "estimator", "family", "seed"])?;
    for r in &study.records {
        w.write_record([
            r.n.to_string(),
            r.replicate.to_string(),
            r.error.map(num).unwrap_or_default(),
            r.estimator.to_string(),
            r.family.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `n,median,iqr_lo,iqr_hi,rate_ref`.
pub fn write_summary(path: impl AsRef<Path>, study: &RateStudyResult) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["n", "median", "iqr_lo", "iqr_hi", "rate_ref"])?;
    for s in &study.summary {
        w.write_record([
            s.n.to_string(),
            num(s.median),
            num(s.iqr_lo),
            num(s.iqr_hi),
            num(s.rate_ref),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `n,family,median,iqr_lo,iqr_hi`.
pub fn write_comparison(path: impl AsRef<Path>, cmp: &PriorComparison) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["n", "family", "median", "iqr_lo", "iqr_hi"])?;
    for r in &cmp.rows {
        w.write_record([
            r.n.to_string(),
            r.family.to_string(),
            num(r.median),
            num(r.iqr_lo),
            num(r.iqr_hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let layout = Layout::new(2, 2).unwrap();
        let values: Vec<f64> = (0..layout.len()).map(|i| (i as f64).sin() / 3.0).collect();
        let c = CoefficientVector::new(layout, values).unwrap();
        write_coefficients(&path, &c).unwrap();
        let back = read_coefficients(&path, 2).unwrap();
        assert_eq!(back.values(), c.values());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = Dataset::new(1, vec![0.1, 0.25, 0.9], vec![1, 0, 1], MuSpec::Uniform).unwrap();
        write_dataset(&path, &d).unwrap();
        let back = read_dataset(&path, MuSpec::Uniform).unwrap();
        assert_eq!(back.covariates(), d.covariates());
        assert_eq!(back.labels(), d.labels());
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().next(), Some("x1,y"));
    }

    #[test]
    fn missing_coefficient_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "l,r,value\n0,1,0.5\n0,2,0.1\n1,1,0.2\n").unwrap();
        let err = read_coefficients(&path, 1).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }
}
