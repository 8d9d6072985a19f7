//! CSV ingestion, built-in benchmark targets, and plot-data output.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::activation::{fmt_real, Interval};
use crate::error::{Error, Result};
use crate::network::{Routing, Sample, SampleSet, ShallowNetwork};

/// Benchmark functions whose outputs stay strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinTarget {
    /// `0.4·sin(πx) + 0.5` on `[0,1]`
    SineBump,
    /// `0.8·exp(−‖x − (½,½)‖²) + 0.1` on `[0,1]²`
    Gauss2d,
    /// `(0.5 + 0.3·sin(πx₁)·cos(πx₂), 0.5 + 0.3·x₁·x₂)` on `[0,1]²`
    Swirl2to2,
}

impl BuiltinTarget {
    pub const ALL: [BuiltinTarget; 3] = [BuiltinTarget::SineBump, BuiltinTarget::Gauss2d, BuiltinTarget::Swirl2to2];

    pub fn id(&self) -> &'static str {
        match self {
            BuiltinTarget::SineBump => "sine-bump",
            BuiltinTarget::Gauss2d => "gauss2d",
            BuiltinTarget::Swirl2to2 => "swirl2to2",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            BuiltinTarget::SineBump => 1,
            _ => 2,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            BuiltinTarget::Swirl2to2 => 2,
            _ => 1,
        }
    }

    pub fn domain_box(&self) -> Vec<Interval> {
        vec![Interval::new(0.0, 1.0).expect("unit interval"); self.n()]
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        use std::f64::consts::PI;
        match self {
            BuiltinTarget::SineBump => vec![0.4 * (PI * x[0]).sin() + 0.5],
            BuiltinTarget::Gauss2d => {
                let d2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
                vec![(-d2).exp() * 0.8 + 0.1]
            }
            BuiltinTarget::Swirl2to2 => vec![
                0.5 + 0.3 * (PI * x[0]).sin() * (PI * x[1]).cos(),
                0.5 + 0.3 * x[0] * x[1],
            ],
        }
    }
}

impl fmt::Display for BuiltinTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BuiltinTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinTarget::ALL
            .into_iter()
            .find(|t| t.id() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown builtin target `{s}` (sine-bump, gauss2d, swirl2to2)")))
    }
}

/// Placement of grid points along each axis of the domain box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLayout {
    /// `lo + i·(hi−lo)/(k−1)`, endpoints included.
    Closed,
    /// `lo + (i+½)·(hi−lo)/k`, cell centres; no point on the box boundary.
    Interior,
}

impl FromStr for GridLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "closed" => Ok(GridLayout::Closed),
            "interior" => Ok(GridLayout::Interior),
            other => Err(Error::InvalidArgument(format!("grid layout `{other}`: expected closed or interior"))),
        }
    }
}

fn axis_coordinate(interval: &Interval, i: usize, k: usize, layout: GridLayout) -> f64 {
    match layout {
        GridLayout::Closed => interval.grid_point(i, k),
        GridLayout::Interior => interval.lo() + (i as f64 + 0.5) * interval.width() / k as f64,
    }
}

/// Every point of a `per_axis`ⁿ grid over `domain_box`, last axis fastest.
pub fn grid_points(domain_box: &[Interval], per_axis: usize, layout: GridLayout) -> Vec<Vec<f64>> {
    let n = domain_box.len();
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut flat| {
            let mut x = vec![0.0; n];
            for k in (0..n).rev() {
                x[k] = axis_coordinate(&domain_box[k], flat % per_axis, per_axis, layout);
                flat /= per_axis;
            }
            x
        })
        .collect()
}

/// Samples `target` on the closed uniform grid, `per_axis` points per axis.
pub fn sample_builtin(target: BuiltinTarget, per_axis: usize) -> Result<SampleSet> {
    sample_builtin_with(target, per_axis, GridLayout::Closed)
}

pub fn sample_builtin_with(target: BuiltinTarget, per_axis: usize, layout: GridLayout) -> Result<SampleSet> {
    if per_axis < 2 {
        return Err(Error::InvalidArgument(format!("per_axis must be at least 2, got {per_axis}")));
    }
    let domain_box = target.domain_box();
    let points = grid_points(&domain_box, per_axis, layout)
        .into_iter()
        .map(|x| Sample { y: target.eval(&x), x })
        .collect();
    SampleSet::new(target.n(), target.m(), domain_box, points)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_err(line, e.to_string())
}

/// Counts `x1..xn` followed by `y1..ym` (when `allow_outputs`).
fn parse_header(header: &csv::StringRecord, allow_outputs: bool) -> Result<(usize, usize)> {
    let mut n = 0;
    let mut m = 0;
    for name in header.iter() {
        let name = name.trim();
        let expected_x = format!("x{}", n + 1);
        let expected_y = format!("y{}", m + 1);
        if m == 0 && name == expected_x {
            n += 1;
        } else if allow_outputs && n > 0 && name == expected_y {
            m += 1;
        } else {
            return Err(parse_err(
                1,
                format!("unexpected column `{name}`; expected x1,...,xn followed by y1,...,ym"),
            ));
        }
    }
    if n == 0 || (allow_outputs && m == 0) {
        return Err(parse_err(1, "header needs at least one x column and one y column"));
    }
    Ok((n, m))
}

fn parse_row(record: &csv::StringRecord, width: usize) -> Result<Vec<f64>> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    if record.len() != width {
        return Err(parse_err(line, format!("expected {width} fields, found {}", record.len())));
    }
    record
        .iter()
        .map(|f| {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("`{f}` is not a real number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("`{f}` is not finite")))
            }
        })
        .collect()
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

/// Reads `x1,...,xn,y1,...,ym` rows. Exact duplicate rows collapse; a repeated
/// input with a different output is a [`Error::ConflictingDuplicate`] naming
/// both lines.
pub fn load_samples_csv(input: impl Read) -> Result<SampleSet> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let (n, m) = parse_header(&header, true)?;
    let mut points = Vec::new();
    let mut lines = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let values = parse_row(&record, n + m)?;
        lines.push(record.position().map_or(0, |p| p.line() as usize));
        points.push(Sample {
            x: values[..n].to_vec(),
            y: values[n..].to_vec(),
        });
    }
    if points.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    SampleSet::from_points(n, m, points).map_err(|e| match e {
        Error::ConflictingDuplicate { first_line, line } => Error::ConflictingDuplicate {
            first_line: lines[first_line],
            line: lines[line],
        },
        other => match other.sample_index() {
            Some(i) => parse_err(lines[i], other.root().to_string()),
            None => other,
        },
    })
}

/// Reads input points only: header `x1,...,xn`, optionally followed by
/// output columns, which are ignored.
pub fn load_points_csv(input: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let all_inputs = header.iter().all(|h| h.trim().starts_with('x'));
    let (n, m) = parse_header(&header, !all_inputs)?;
    rdr.records()
        .map(|r| {
            let r = r.map_err(csv_err)?;
            Ok(parse_row(&r, n + m)?[..n].to_vec())
        })
        .collect()
}

/// Per-point δ rows with header `d1,...,dn`.
pub fn load_deltas_csv(input: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    for (k, name) in header.iter().enumerate() {
        if name.trim() != format!("d{}", k + 1) {
            return Err(parse_err(1, format!("unexpected column `{name}`; expected d1,...,dn")));
        }
    }
    let width = header.len();
    rdr.records()
        .map(|r| parse_row(&r.map_err(csv_err)?, width))
        .collect()
}

pub fn write_samples_csv(samples: &SampleSet, mut out: impl Write) -> Result<()> {
    let names: Vec<String> = (1..=samples.n())
        .map(|k| format!("x{k}"))
        .chain((1..=samples.m()).map(|k| format!("y{k}")))
        .collect();
    writeln!(out, "{}", names.join(","))?;
    for s in samples.points() {
        let row: Vec<String> = s.x.iter().chain(&s.y).map(|v| fmt_real(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// One plotted point: input, reference value, network output.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub net: Vec<f64>,
}

/// Network output against `target` on a closed `resolution`-per-axis grid.
/// Off-anchor points use `routing` (normally nearest-anchor).
pub fn plot_builtin(
    net: &ShallowNetwork,
    target: BuiltinTarget,
    resolution: usize,
    routing: Routing,
) -> Result<Vec<PlotRow>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    grid_points(&target.domain_box(), resolution, GridLayout::Closed)
        .into_iter()
        .map(|x| {
            let net_out = net.forward(&x, routing)?.outputs;
            Ok(PlotRow {
                f: target.eval(&x),
                net: net_out,
                x,
            })
        })
        .collect()
}

/// Network output at every sample, routed exactly to its anchor.
pub fn plot_samples(net: &ShallowNetwork, samples: &SampleSet) -> Result<Vec<PlotRow>> {
    samples
        .points()
        .iter()
        .map(|s| {
            Ok(PlotRow {
                x: s.x.clone(),
                f: s.y.clone(),
                net: net.forward(&s.x, Routing::AnchorExact)?.outputs,
            })
        })
        .collect()
}

/// Header `x[,y],f,net_output` for one or two inputs and one output; wider
/// shapes number the columns (`x1..xn`, `f1,net_output1,...`).
pub fn write_plot_csv(rows: &[PlotRow], mut out: impl Write) -> Result<()> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    let (n, m) = (first.x.len(), first.f.len());
    let mut names: Vec<String> = match n {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        _ => (1..=n).map(|k| format!("x{k}")).collect(),
    };
    if m == 1 {
        names.extend(["f".to_string(), "net_output".to_string()]);
    } else {
        for j in 1..=m {
            names.push(format!("f{j}"));
            names.push(format!("net_output{j}"));
        }
    }
    writeln!(out, "{}", names.join(","))?;
    for r in rows {
        let mut cells: Vec<String> = r.x.iter().map(|v| fmt_real(*v)).collect();
        for (f, o) in r.f.iter().zip(&r.net) {
            cells.push(fmt_real(*f));
            cells.push(fmt_real(*o));
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
