//! Dataset ingestion (UCR-style label-first rows, comma or tab separated),
//! class filtering with seeded subsampling, and all result file outputs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{NtwError, Result};
use crate::interp::TimeSeries;
use crate::metrics::AlignedSet;
use crate::training::{AlignmentResult, LossHistory, Metrics};
use crate::warp_model::SampledWarping;

/// Field separator of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Tab,
}

impl Delimiter {
    fn as_char(self) -> char {
        match self {
            Delimiter::Comma => ',',
            Delimiter::Tab => '\t',
        }
    }
}

/// A parsed dataset: labeled series plus provenance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub series: Vec<TimeSeries>,
    pub source: PathBuf,
    pub delimiter: Delimiter,
}

/// Loads a UCR-style file, auto-detecting the delimiter from the first line.
pub fn load_ucr(path: impl AsRef<Path>) -> Result<Dataset> {
    load_ucr_with(path, None)
}

/// Loads a UCR-style file with an optional forced delimiter.
///
/// Each line is a numeric label followed by the sample values. Trailing
/// empty or NaN fields are trimmed; rows with fewer than 2 values are
/// rejected with their line number.
pub fn load_ucr_with(path: impl AsRef<Path>, delimiter: Option<Delimiter>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NtwError::io(path, e))?;
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| NtwError::InvalidArgument(format!("{}: empty dataset", path.display())))?;
    let delimiter =
        delimiter.unwrap_or(if first.contains('\t') { Delimiter::Tab } else { Delimiter::Comma });
    let sep = delimiter.as_char();

    let mut series = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = line.split(sep).map(str::trim).collect();
        while fields
            .last()
            .is_some_and(|f| f.is_empty() || f.eq_ignore_ascii_case("nan"))
        {
            fields.pop();
        }
        let parse = |field: usize, text: &str| -> Result<f64> {
            text.parse::<f64>().map_err(|_| NtwError::Parse {
                path: path.to_path_buf(),
                line: line_no + 1,
                field: field + 1,
                detail: format!("cannot parse {text:?} as a number"),
            })
        };
        let label_value = parse(0, fields.first().ok_or_else(|| NtwError::Parse {
            path: path.to_path_buf(),
            line: line_no + 1,
            field: 1,
            detail: "missing label field".into(),
        })?)?;
        let mut values = Vec::with_capacity(fields.len().saturating_sub(1));
        for (k, f) in fields.iter().enumerate().skip(1) {
            let v = parse(k, f)?;
            if !v.is_finite() {
                return Err(NtwError::Parse {
                    path: path.to_path_buf(),
                    line: line_no + 1,
                    field: k + 1,
                    detail: format!("non-finite value {v}"),
                });
            }
            values.push(v);
        }
        if values.len() < 2 {
            return Err(NtwError::InvalidArgument(format!(
                "{} line {}: series has {} samples, need at least 2",
                path.display(),
                line_no + 1,
                values.len()
            )));
        }
        let mut ts = TimeSeries::new(values)?;
        ts.label = Some(label_value.round() as i64);
        ts.name = Some(format!("row{}", line_no + 1));
        series.push(ts);
    }
    if series.is_empty() {
        return Err(NtwError::InvalidArgument(format!(
            "{}: empty dataset",
            path.display()
        )));
    }
    Ok(Dataset {
        series,
        source: path.to_path_buf(),
        delimiter,
    })
}

/// Selects the series of one class, subsampling to `max_series` with a
/// seeded draw without replacement when the class is larger.
///
/// Singleton classes are rejected: there is nothing to align.
pub fn select_class(
    ds: &Dataset,
    label: Option<i64>,
    max_series: usize,
    seed: u64,
) -> Result<Vec<TimeSeries>> {
    let matching: Vec<&TimeSeries> = ds
        .series
        .iter()
        .filter(|s| label.is_none() || s.label == label)
        .collect();
    if matching.is_empty() {
        return Err(NtwError::InvalidArgument(format!(
            "no series with label {label:?} in {}",
            ds.source.display()
        )));
    }
    if matching.len() < 2 {
        return Err(NtwError::InvalidArgument(format!(
            "fewer than two series with label {label:?}; nothing to align"
        )));
    }
    if matching.len() <= max_series {
        return Ok(matching.into_iter().cloned().collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, matching.len(), max_series).into_vec();
    picked.sort_unstable(); // keep file order
    Ok(picked.into_iter().map(|i| matching[i].clone()).collect())
}

/// In-place per-series z-normalization (mean 0, population SD 1 when nonzero).
pub fn znormalize(series: &mut [TimeSeries]) {
    for s in series {
        let n = s.values.len() as f64;
        let mean = s.values.iter().sum::<f64>() / n;
        let var = s.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for v in &mut s.values {
            *v = if sd > 0.0 { (*v - mean) / sd } else { *v - mean };
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| NtwError::io(path, e))
}

/// `z,tau_1,...,tau_N` with one row per warped index.
pub fn warpings_csv(w: &SampledWarping) -> String {
    let mut out = String::from("z");
    for i in 1..=w.n_series {
        write!(out, ",tau_{i}").unwrap();
    }
    out.push('\n');
    for z in 0..=w.z_max {
        write!(out, "{z}").unwrap();
        for row in &w.tau {
            write!(out, ",{}", row[z]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// `z,x_1,...,x_N` rows of aligned values.
pub fn aligned_csv(aligned: &AlignedSet) -> String {
    let mut out = String::from("z");
    for i in 1..=aligned.n_series() {
        write!(out, ",x_{i}").unwrap();
    }
    out.push('\n');
    for z in 0..aligned.len() {
        write!(out, "{z}").unwrap();
        for row in &aligned.rows {
            write!(out, ",{}", row[z]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// `z,mean,sd` rows.
pub fn average_csv(average: &[f64], sd: &[f64]) -> String {
    let mut out = String::from("z,mean,sd\n");
    for (z, (m, s)) in average.iter().zip(sd).enumerate() {
        writeln!(out, "{z},{m},{s}").unwrap();
    }
    out
}

/// `step,data_loss,penalty,alpha,total` rows.
pub fn loss_history_csv(history: &LossHistory) -> String {
    let mut out = String::from("step,data_loss,penalty,alpha,total\n");
    for r in history {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.step, r.data_loss, r.penalty, r.alpha, r.total
        )
        .unwrap();
    }
    out
}

pub fn metrics_json(metrics: &Metrics) -> String {
    let mut s = serde_json::to_string_pretty(metrics).expect("metrics serialize");
    s.push('\n');
    s
}

/// Writes the full output set of an alignment run; returns the paths written.
pub fn write_outputs(result: &AlignmentResult, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| NtwError::io(dir, e))?;
    let files = [
        ("warpings.csv", warpings_csv(&result.warping)),
        ("aligned.csv", aligned_csv(&result.aligned)),
        ("average.csv", average_csv(&result.average, &result.sd)),
        ("loss_history.csv", loss_history_csv(&result.loss_history)),
        ("metrics.json", metrics_json(&result.metrics)),
        ("plot.svg", plot_svg(result)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Static overview figure: aligned series in gray, mean in blue, a mean±SD
/// band behind them.
pub fn plot_svg(result: &AlignmentResult) -> String {
    let (width, height, pad) = (800.0, 400.0, 40.0);
    let n_pts = result.average.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in &result.aligned.rows {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    for (m, s) in result.average.iter().zip(&result.sd) {
        lo = lo.min(m - s);
        hi = hi.max(m + s);
    }
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let x = |z: usize| pad + (width - 2.0 * pad) * z as f64 / (n_pts.max(2) - 1) as f64;
    let y = |v: f64| height - pad - (height - 2.0 * pad) * (v - lo) / (hi - lo);
    let polyline = |vals: &mut dyn Iterator<Item = (usize, f64)>| -> String {
        let mut pts = String::new();
        for (z, v) in vals {
            write!(pts, "{:.2},{:.2} ", x(z), y(v)).unwrap();
        }
        pts
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
    // SD band as a closed polygon
    let mut band = String::new();
    for (z, (m, s)) in result.average.iter().zip(&result.sd).enumerate() {
        write!(band, "{:.2},{:.2} ", x(z), y(m + s)).unwrap();
    }
    for (z, (m, s)) in result.average.iter().zip(&result.sd).enumerate().rev() {
        write!(band, "{:.2},{:.2} ", x(z), y(m - s)).unwrap();
    }
    writeln!(
        svg,
        "<polygon points=\"{band}\" fill=\"#aaccee\" opacity=\"0.5\"/>"
    )
    .unwrap();
    for row in &result.aligned.rows {
        let pts = polyline(&mut row.iter().copied().enumerate());
        writeln!(
            svg,
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.6\"/>"
        )
        .unwrap();
    }
    let mean_pts = polyline(&mut result.average.iter().copied().enumerate());
    writeln!(
        svg,
        "<polyline points=\"{mean_pts}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.8\"/>"
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

/// Reads a `warpings.csv` back into a [`SampledWarping`].
pub fn read_warpings_csv(path: impl AsRef<Path>) -> Result<SampledWarping> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NtwError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| NtwError::InvalidArgument(format!("{}: empty file", path.display())))?;
    let n_series = header.split(',').count().saturating_sub(1);
    if n_series == 0 {
        return Err(NtwError::InvalidArgument(format!(
            "{}: header has no tau columns",
            path.display()
        )));
    }
    let mut tau: Vec<Vec<usize>> = vec![Vec::new(); n_series];
    let mut expect_z = 0usize;
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_series + 1 {
            return Err(NtwError::ShapeMismatch(format!(
                "{} line {}: {} fields, expected {}",
                path.display(),
                line_no + 1,
                fields.len(),
                n_series + 1
            )));
        }
        for (col, f) in fields.iter().enumerate() {
            let v: usize = f.trim().parse().map_err(|_| NtwError::Parse {
                path: path.to_path_buf(),
                line: line_no + 1,
                field: col + 1,
                detail: format!("cannot parse {f:?} as an index"),
            })?;
            if col == 0 {
                if v != expect_z {
                    return Err(NtwError::ShapeMismatch(format!(
                        "{} line {}: z = {v}, expected {expect_z} (row count mismatch)",
                        path.display(),
                        line_no + 1
                    )));
                }
                expect_z += 1;
            } else {
                tau[col - 1].push(v);
            }
        }
    }
    if expect_z < 2 {
        return Err(NtwError::InvalidArgument(format!(
            "{}: needs at least 2 data rows",
            path.display()
        )));
    }
    let z_max = expect_z - 1;
    let lengths: Vec<usize> = tau.iter().map(|row| row[z_max]).collect();
    Ok(SampledWarping {
        n_series,
        z_max,
        tau,
        lengths,
    })
}
