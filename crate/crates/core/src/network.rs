//! The per-sample network: one hidden node per anchor, fed by an
//! `n`-dimensional input and feeding `m` output nodes.
//!
//! A network built from `p` samples has `n·p` input nodes, `p` hidden nodes
//! and `m·p` output nodes. Exact reconstruction is only guaranteed at the
//! anchors; [`Routing::NearestAnchor`] is an extension for querying between
//! samples and carries no such guarantee.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::activation::{check_invertible, fmt_real, ActivationSpec, Interval, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::theta::{compute_theta_vector, hidden_activation, inner, ThetaResult};

/// Relative per-coordinate tolerance for [`Routing::AnchorExact`].
pub const ANCHOR_TOLERANCE: f64 = 1e-12;
/// Halvings of the default all-ones δ tried before giving up.
pub const MAX_DELTA_HALVINGS: usize = 8;

pub const FORMAT_HEADER: &str = "UFANET v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn key(x: &[f64]) -> Vec<u64> {
    // + 0.0 folds -0.0 into 0.0
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// `p` samples of a function `ℝⁿ ⊇ box → ℝᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n: usize,
    m: usize,
    domain_box: Vec<Interval>,
    points: Vec<Sample>,
}

impl SampleSet {
    /// Validates and deduplicates `points`. Exact repeats of a whole sample are
    /// dropped; a repeated input with a different output is rejected with
    /// [`Error::ConflictingDuplicate`] whose fields hold the two point indices.
    pub fn new(n: usize, m: usize, domain_box: Vec<Interval>, points: Vec<Sample>) -> Result<SampleSet> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "sample dimensions must be positive (n={n}, m={m})"
            )));
        }
        if domain_box.len() != n {
            return Err(Error::DimensionMismatch {
                what: "domain_box",
                expected: n,
                found: domain_box.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("sample set is empty".into()));
        }
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut kept: Vec<Sample> = Vec::with_capacity(points.len());
        let mut kept_index = Vec::new();
        for (i, s) in points.into_iter().enumerate() {
            let check = || -> Result<()> {
                if s.x.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "sample input",
                        expected: n,
                        found: s.x.len(),
                    });
                }
                if s.y.len() != m {
                    return Err(Error::DimensionMismatch {
                        what: "sample output",
                        expected: m,
                        found: s.y.len(),
                    });
                }
                if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite sample value".into()));
                }
                if let Some(k) = s.x.iter().zip(&domain_box).position(|(v, b)| !b.contains(*v)) {
                    return Err(Error::InvalidArgument(format!(
                        "coordinate {k} = {} lies outside {}",
                        s.x[k], domain_box[k]
                    )));
                }
                Ok(())
            };
            check().map_err(|e| e.at_sample(i))?;
            match seen.get(&key(&s.x)) {
                Some(&j) => {
                    if key(&kept[j].y) != key(&s.y) {
                        return Err(Error::ConflictingDuplicate {
                            first_line: kept_index[j],
                            line: i,
                        });
                    }
                }
                None => {
                    seen.insert(key(&s.x), kept.len());
                    kept_index.push(i);
                    kept.push(s);
                }
            }
        }
        Ok(SampleSet {
            n,
            m,
            domain_box,
            points: kept,
        })
    }

    /// Like [`SampleSet::new`] with the domain box taken as the bounding box
    /// of the inputs (widened where a coordinate never varies).
    pub fn from_points(n: usize, m: usize, points: Vec<Sample>) -> Result<SampleSet> {
        let mut domain_box = Vec::with_capacity(n);
        for k in 0..n {
            let hull = Interval::hull(points.iter().filter_map(|s| s.x.get(k).copied()))
                .ok_or_else(|| Error::InvalidArgument("cannot bound sample inputs".into()))?;
            domain_box.push(hull);
        }
        SampleSet::new(n, m, domain_box, points)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn domain_box(&self) -> &[Interval] {
        &self.domain_box
    }

    pub fn points(&self) -> &[Sample] {
        &self.points
    }

    /// Hash over dimensions and the exact bits of every sample.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        (self.n, self.m).hash(&mut h);
        for s in &self.points {
            key(&s.x).hash(&mut h);
            key(&s.y).hash(&mut h);
        }
        h.finish()
    }
}

/// How input weights δ are chosen for each anchor.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaPolicy {
    /// All ones; halved (up to [`MAX_DELTA_HALVINGS`] times) while `g` vanishes at some sample.
    Default,
    Fixed(Vec<f64>),
    PerPoint(Vec<Vec<f64>>),
}

impl FromStr for DeltaPolicy {
    type Err = Error;

    /// `default` or `fixed:<d1>,<d2>,...`. Per-point lists come from files.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "default" {
            return Ok(DeltaPolicy::Default);
        }
        if let Some(list) = s.strip_prefix("fixed:") {
            let values = list
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("delta policy `{s}`: {e}")))?;
            return Ok(DeltaPolicy::Fixed(values));
        }
        Err(Error::InvalidArgument(format!(
            "delta policy `{s}`: expected `default` or `fixed:<d1>,...`"
        )))
    }
}

impl fmt::Display for DeltaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaPolicy::Default => f.write_str("default"),
            DeltaPolicy::Fixed(v) => write!(f, "fixed:{}", join_reals(v, ",")),
            DeltaPolicy::PerPoint(v) => write!(f, "per-point({} rows)", v.len()),
        }
    }
}

/// The δ vector for every sample under `policy`.
pub fn resolve_deltas(samples: &SampleSet, g: &ActivationSpec, policy: &DeltaPolicy) -> Result<Vec<Vec<f64>>> {
    let n = samples.n();
    let check_len = |d: &[f64]| -> Result<()> {
        if d.len() != n {
            return Err(Error::DimensionMismatch {
                what: "delta",
                expected: n,
                found: d.len(),
            });
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite delta".into()));
        }
        Ok(())
    };
    match policy {
        DeltaPolicy::Fixed(d) => {
            check_len(d)?;
            Ok(vec![d.clone(); samples.len()])
        }
        DeltaPolicy::PerPoint(rows) => {
            if rows.len() != samples.len() {
                return Err(Error::DimensionMismatch {
                    what: "per-point deltas",
                    expected: samples.len(),
                    found: rows.len(),
                });
            }
            for (i, d) in rows.iter().enumerate() {
                check_len(d).map_err(|e| e.at_sample(i))?;
            }
            Ok(rows.clone())
        }
        DeltaPolicy::Default => {
            let mut scale = 1.0;
            let mut last_err = None;
            for _ in 0..=MAX_DELTA_HALVINGS {
                let delta = vec![scale; n];
                let vanishing = samples.points().iter().enumerate().find_map(|(i, s)| {
                    match hidden_activation(g, inner(&s.x, &delta)) {
                        Err(e @ Error::WeightUndefined { .. }) => Some(e.at_sample(i)),
                        _ => None,
                    }
                });
                match vanishing {
                    None => return Ok(vec![delta; samples.len()]),
                    Some(e) => last_err = Some(e),
                }
                scale *= 0.5;
            }
            Err(last_err.expect("at least one attempt"))
        }
    }
}

/// One anchor's sub-network.
#[derive(Debug, Clone, PartialEq)]
pub struct PointUnit {
    pub anchor_x: Vec<f64>,
    pub delta: Vec<f64>,
    pub theta: Vec<f64>,
    /// Cached `g(⟨anchor_x, delta⟩)`.
    pub hidden_preimage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchitectureCounts {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

/// Node counts `(n·p, p, m·p)` of the network reconstructing `p` samples of
/// an `ℝⁿ → ℝᵐ` function.
pub fn architecture_counts(n: usize, m: usize, p: usize) -> ArchitectureCounts {
    ArchitectureCounts {
        inputs: n * p,
        hidden: p,
        outputs: m * p,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShallowNetwork {
    units: Vec<PointUnit>,
    g: ActivationSpec,
    sigmas: Vec<ActivationSpec>,
    n: usize,
    m: usize,
}

impl ShallowNetwork {
    pub fn units(&self) -> &[PointUnit] {
        &self.units
    }

    pub fn g(&self) -> &ActivationSpec {
        &self.g
    }

    pub fn sigmas(&self) -> &[ActivationSpec] {
        &self.sigmas
    }

    pub fn dims(&self) -> Dims {
        Dims {
            n: self.n,
            m: self.m,
            p: self.units.len(),
        }
    }

    pub fn counts(&self) -> ArchitectureCounts {
        architecture_counts(self.n, self.m, self.units.len())
    }
}

/// Interval on which σ is certified: the hull of the realized σ⁻¹ values,
/// kept inside σ's domain.
pub(crate) fn sigma_working_interval(sigma: &ActivationSpec, inverses: impl IntoIterator<Item = f64>) -> Option<Interval> {
    let hull = Interval::hull(inverses)?;
    let d = sigma.domain();
    let lo = d.clamp(hull.lo());
    let hi = d.clamp(hull.hi());
    Interval::new(lo, hi).ok()
}

/// Builds one unit per sample in a single pass.
pub fn build_network(
    samples: &SampleSet,
    g: &ActivationSpec,
    sigmas: &[ActivationSpec],
    delta_policy: &DeltaPolicy,
) -> Result<ShallowNetwork> {
    if sigmas.len() != samples.m() {
        return Err(Error::DimensionMismatch {
            what: "sigmas",
            expected: samples.m(),
            found: sigmas.len(),
        });
    }
    let deltas = resolve_deltas(samples, g, delta_policy)?;

    let results: Vec<Result<Vec<ThetaResult>>> = samples
        .points()
        .par_iter()
        .zip(deltas.par_iter())
        .map(|(s, d)| compute_theta_vector(&s.y, &s.x, d, g, sigmas))
        .collect();
    let mut per_sample = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        per_sample.push(r.map_err(|e| e.at_sample(i))?);
    }

    for (j, sigma) in sigmas.iter().enumerate() {
        let Some(interval) = sigma_working_interval(sigma, per_sample.iter().map(|r| r[j].sigma_inverse_value)) else {
            continue;
        };
        let cert = check_invertible(sigma, &interval, DEFAULT_GRID)?;
        if !cert.passed {
            return Err(Error::CertificateMissing(format!(
                "output activation `{}` has derivative {:e} at {} on its working interval {}",
                sigma.name(),
                cert.worst_value,
                cert.worst_point,
                interval
            ))
            .at_output(j));
        }
    }

    let mut units = Vec::with_capacity(per_sample.len());
    for (i, ((s, delta), r)) in samples.points().iter().zip(deltas).zip(per_sample).enumerate() {
        let theta: Vec<f64> = r.iter().map(|t| t.theta).collect();
        if let Some(j) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::WeightUndefined {
                preimage: inner(&s.x, &delta),
                hidden: r[j].hidden_preimage,
            }
            .at_output(j)
            .at_sample(i));
        }
        units.push(PointUnit {
            anchor_x: s.x.clone(),
            delta,
            theta,
            hidden_preimage: r[0].hidden_preimage,
        });
    }
    Ok(ShallowNetwork {
        units,
        g: g.clone(),
        sigmas: sigmas.to_vec(),
        n: samples.n(),
        m: samples.m(),
    })
}

/// [`build_network`] plus its wall time in seconds.
pub fn build_network_timed(
    samples: &SampleSet,
    g: &ActivationSpec,
    sigmas: &[ActivationSpec],
    delta_policy: &DeltaPolicy,
) -> Result<(ShallowNetwork, f64)> {
    let start = Instant::now();
    let net = build_network(samples, g, sigmas, delta_policy)?;
    Ok((net, start.elapsed().as_secs_f64()))
}

/// Which unit evaluates a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Routing {
    AnchorExact,
    NearestAnchor,
    Unit(usize),
}

impl FromStr for Routing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "anchor-exact" => Ok(Routing::AnchorExact),
            "nearest-anchor" | "nearest" => Ok(Routing::NearestAnchor),
            other => other
                .strip_prefix("unit:")
                .and_then(|i| i.parse().ok())
                .map(Routing::Unit)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "routing `{other}`: expected anchor-exact, nearest-anchor or unit:<i>"
                    ))
                }),
        }
    }
}

impl fmt::Display for Routing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Routing::AnchorExact => f.write_str("anchor-exact"),
            Routing::NearestAnchor => f.write_str("nearest-anchor"),
            Routing::Unit(i) => write!(f, "unit:{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalTrace {
    pub unit_index: usize,
    /// Hidden activation `g(⟨x,δ⟩)`.
    pub alpha: f64,
    pub preactivations: Vec<f64>,
    pub outputs: Vec<f64>,
}

fn matches_anchor(x: &[f64], anchor: &[f64]) -> bool {
    x.iter()
        .zip(anchor)
        .all(|(a, b)| (a - b).abs() <= ANCHOR_TOLERANCE * b.abs().max(1.0))
}

fn squared_distance(x: &[f64], anchor: &[f64]) -> f64 {
    x.iter().zip(anchor).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl ShallowNetwork {
    fn select_unit(&self, x: &[f64], routing: Routing) -> Result<usize> {
        match routing {
            Routing::Unit(i) if i < self.units.len() => Ok(i),
            Routing::Unit(i) => Err(Error::UnitIndex {
                index: i,
                count: self.units.len(),
            }),
            Routing::AnchorExact => self
                .units
                .iter()
                .position(|u| matches_anchor(x, &u.anchor_x))
                .ok_or_else(|| Error::NoMatchingAnchor(x.to_vec())),
            Routing::NearestAnchor => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, u) in self.units.iter().enumerate() {
                    let d = squared_distance(x, &u.anchor_x);
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                Ok(best)
            }
        }
    }

    /// Evaluates `yⱼ = σⱼ(g(⟨x,δ⟩)·θⱼ)` with the unit chosen by `routing`.
    pub fn forward(&self, x: &[f64], routing: Routing) -> Result<EvalTrace> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "input",
                expected: self.n,
                found: x.len(),
            });
        }
        let unit_index = self.select_unit(x, routing)?;
        self.eval_unit(unit_index, x)
    }

    fn eval_unit(&self, unit_index: usize, x: &[f64]) -> Result<EvalTrace> {
        let unit = &self.units[unit_index];
        let alpha = self.g.eval(inner(x, &unit.delta))?;
        let preactivations: Vec<f64> = unit.theta.iter().map(|t| alpha * t).collect();
        let outputs = preactivations
            .iter()
            .zip(&self.sigmas)
            .map(|(&z, s)| s.eval(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalTrace {
            unit_index,
            alpha,
            preactivations,
            outputs,
        })
    }
}

pub fn forward(net: &ShallowNetwork, x: &[f64], routing: Routing) -> Result<EvalTrace> {
    net.forward(x, routing)
}

/// Evidence that the loss at the constructed weights vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub per_point_max_abs_residual: Vec<f64>,
    pub max_abs_residual: f64,
    pub sse: f64,
    pub construction_seconds: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub sample_fingerprint: u64,
}

impl ReconstructionReport {
    pub fn with_construction_seconds(mut self, seconds: f64) -> Self {
        self.construction_seconds = seconds;
        self
    }

    /// Mean over points of the squared output error, `sse / p`.
    pub fn mse(&self) -> f64 {
        self.sse / self.per_point_max_abs_residual.len() as f64
    }

    pub fn render_text(&self) -> String {
        format!(
            "reconstruction: {}\n  points:            {}\n  max abs residual:  {}\n  sse:               {}\n  tolerance:         {}\n  construction time: {:.6} s (single pass)\n",
            if self.passed { "PASSED" } else { "FAILED" },
            self.per_point_max_abs_residual.len(),
            fmt_real(self.max_abs_residual),
            fmt_real(self.sse),
            fmt_real(self.tolerance),
            self.construction_seconds,
        )
    }

    pub fn render_kv(&self) -> String {
        format!(
            "passed={}\npoints={}\nmax_abs_residual={}\nsse={}\nmse={}\ntolerance={}\nconstruction_seconds={}\nconstruction_steps=1\n",
            self.passed,
            self.per_point_max_abs_residual.len(),
            fmt_real(self.max_abs_residual),
            fmt_real(self.sse),
            fmt_real(self.mse()),
            fmt_real(self.tolerance),
            self.construction_seconds,
        )
    }
}

/// Re-evaluates the network at every sample (anchor routing) and compares
/// against the sample outputs.
pub fn verify_reconstruction(net: &ShallowNetwork, samples: &SampleSet, tolerance: f64) -> Result<ReconstructionReport> {
    let dims = net.dims();
    if samples.n() != dims.n || samples.m() != dims.m || samples.len() != dims.p {
        return Err(Error::AnchorMismatch(format!(
            "network has n={}, m={}, p={} but samples have n={}, m={}, p={}",
            dims.n,
            dims.m,
            dims.p,
            samples.n(),
            samples.m(),
            samples.len()
        )));
    }
    let anchors: HashMap<Vec<u64>, usize> = net
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| (key(&u.anchor_x), i))
        .collect();
    let mut per_point = Vec::with_capacity(samples.len());
    let mut sse = 0.0;
    for (i, s) in samples.points().iter().enumerate() {
        let unit = *anchors.get(&key(&s.x)).ok_or_else(|| {
            Error::AnchorMismatch(format!("sample {i} at {:?} is not an anchor of the network", s.x))
        })?;
        let trace = net.eval_unit(unit, &s.x).map_err(|e| e.at_sample(i))?;
        let mut worst: f64 = 0.0;
        for (out, target) in trace.outputs.iter().zip(&s.y) {
            let r = out - target;
            sse += r * r;
            worst = worst.max(r.abs());
        }
        per_point.push(worst);
    }
    let max_abs_residual = per_point.iter().copied().fold(0.0, f64::max);
    Ok(ReconstructionReport {
        per_point_max_abs_residual: per_point,
        max_abs_residual,
        sse,
        construction_seconds: 0.0,
        tolerance,
        passed: max_abs_residual <= tolerance,
        sample_fingerprint: samples.fingerprint(),
    })
}

fn join_reals(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(sep)
}

impl ShallowNetwork {
    /// Textual `UFANET v1` document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_HEADER);
        out.push('\n');
        out.push_str(&format!("dims {{n: {}, m: {}, p: {}}}\n", self.n, self.m, self.units.len()));
        out.push_str(&format!("g {}\n", self.g.name()));
        let sigmas: Vec<&str> = self.sigmas.iter().map(|s| s.name()).collect();
        out.push_str(&format!("sigmas [{}]\n", sigmas.join(" ")));
        for (i, u) in self.units.iter().enumerate() {
            out.push_str(&format!(
                "units[{i}] {{anchor_x: [{}], delta: [{}], theta: [{}]}}\n",
                join_reals(&u.anchor_x, ", "),
                join_reals(&u.delta, ", "),
                join_reals(&u.theta, ", "),
            ));
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<ShallowNetwork> {
        Parser::new(text).parse()
    }
}

pub fn save_network(net: &ShallowNetwork, mut writer: impl Write) -> Result<()> {
    writer.write_all(net.to_text().as_bytes())?;
    Ok(())
}

pub fn load_network(mut reader: impl BufRead) -> Result<ShallowNetwork> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    ShallowNetwork::from_text(&text)
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line_no = i + 1;
                Ok(l.trim_end())
            }
            None => {
                self.line_no += 1;
                Err(self.err("unexpected end of stream"))
            }
        }
    }

    fn field<'b>(&self, line: &'b str, prefix: &str) -> Result<&'b str> {
        line.strip_prefix(prefix)
            .ok_or_else(|| self.err(format!("expected `{prefix}`")))
    }

    fn dim(&self, part: &str, name: &str) -> Result<usize> {
        part.trim()
            .strip_prefix(name)
            .and_then(|r| r.trim_start().strip_prefix(':'))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| self.err(format!("bad `{name}` in dims")))
    }

    fn list(&self, s: &str, name: &str, expected: usize) -> Result<Vec<f64>> {
        let body = s
            .trim()
            .strip_prefix(name)
            .and_then(|r| r.trim_start().strip_prefix(':'))
            .map(str::trim)
            .and_then(|r| r.strip_prefix('['))
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| self.err(format!("bad `{name}` list")))?;
        let values = body
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| self.err(format!("`{name}`: {e}")))?;
        if values.len() != expected {
            return Err(self.err(format!("`{name}` has {} entries, expected {expected}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(self.err(format!("`{name}` has a non-finite entry")));
        }
        Ok(values)
    }

    fn parse(mut self) -> Result<ShallowNetwork> {
        let header = self.next_line()?;
        if header != FORMAT_HEADER {
            return Err(self.err(format!("expected header `{FORMAT_HEADER}`, found `{header}`")));
        }

        let dims = self.next_line()?;
        let body = self
            .field(dims, "dims {")?
            .strip_suffix('}')
            .ok_or_else(|| self.err("unterminated dims"))?;
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() != 3 {
            return Err(self.err("dims needs n, m, p"));
        }
        let (n, m, p) = (
            self.dim(parts[0], "n")?,
            self.dim(parts[1], "m")?,
            self.dim(parts[2], "p")?,
        );
        if n == 0 || m == 0 || p == 0 {
            return Err(self.err("dims must be positive"));
        }

        let g_line = self.next_line()?;
        let g: ActivationSpec = self
            .field(g_line, "g ")?
            .parse()
            .map_err(|e: Error| self.err(e.to_string()))?;

        let sig_line = self.next_line()?;
        let sig_body = self
            .field(sig_line, "sigmas [")?
            .strip_suffix(']')
            .ok_or_else(|| self.err("unterminated sigmas"))?;
        let sigmas = sig_body
            .split_whitespace()
            .map(|s| s.parse::<ActivationSpec>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| self.err(e.to_string()))?;
        if sigmas.len() != m {
            return Err(self.err(format!("{} sigmas for m = {m}", sigmas.len())));
        }

        let mut units = Vec::with_capacity(p);
        for i in 0..p {
            let line = self.next_line()?;
            let body = self
                .field(line, &format!("units[{i}] {{"))?
                .strip_suffix('}')
                .ok_or_else(|| self.err("unterminated unit"))?;
            let (anchor_part, rest) = body
                .split_once("], ")
                .ok_or_else(|| self.err("malformed unit"))?;
            let (delta_part, theta_part) = rest
                .split_once("], ")
                .ok_or_else(|| self.err("malformed unit"))?;
            let anchor_x = self.list(&format!("{anchor_part}]"), "anchor_x", n)?;
            let delta = self.list(&format!("{delta_part}]"), "delta", n)?;
            let theta = self.list(theta_part, "theta", m)?;
            let hidden_preimage =
                hidden_activation(&g, inner(&anchor_x, &delta)).map_err(|e| self.err(e.to_string()))?;
            units.push(PointUnit {
                anchor_x,
                delta,
                theta,
                hidden_preimage,
            });
        }

        let end = self.next_line()?;
        if end != "end" {
            return Err(self.err("expected `end`"));
        }
        if self.lines.any(|(_, l)| !l.trim().is_empty()) {
            return Err(self.err("trailing content after `end`"));
        }
        Ok(ShallowNetwork { units, g, sigmas, n, m })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> SampleSet {
        SampleSet::from_points(
            1,
            1,
            vec![Sample {
                x: vec![0.5],
                y: vec![0.5],
            }],
        )
        .unwrap()
    }

    fn trivial_net() -> ShallowNetwork {
        build_network(&single(), &ActivationSpec::identity(), &[ActivationSpec::sigmoid()], &DeltaPolicy::Default).unwrap()
    }

    #[test]
    fn trivial_build_and_forward() {
        let net = trivial_net();
        assert_eq!(net.units().len(), 1);
        assert_eq!(net.units()[0].theta, vec![0.0]);
        let t = net.forward(&[0.5], Routing::AnchorExact).unwrap();
        assert_eq!(t.outputs, vec![0.5]);
        assert_eq!(t.alpha, 0.5);
        let e = net.forward(&[0.49], Routing::AnchorExact).unwrap_err();
        assert_eq!(e.name(), "NoMatchingAnchor");
        assert_eq!(net.forward(&[0.5, 1.0], Routing::AnchorExact).unwrap_err().name(), "DimensionMismatch");
        assert_eq!(net.forward(&[0.5], Routing::Unit(3)).unwrap_err().name(), "UnitIndex");
    }

    #[test]
    fn trivial_verify() {
        let net = trivial_net();
        let r = verify_reconstruction(&net, &single(), 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_abs_residual, 0.0);
        assert_eq!(r.sse, 0.0);
    }

    #[test]
    fn verify_rejects_foreign_samples() {
        let net = trivial_net();
        let other = SampleSet::from_points(
            1,
            1,
            vec![Sample {
                x: vec![0.6],
                y: vec![0.5],
            }],
        )
        .unwrap();
        assert_eq!(verify_reconstruction(&net, &other, 1e-12).unwrap_err().name(), "AnchorMismatch");
    }

    #[test]
    fn counts() {
        assert_eq!(
            architecture_counts(3, 2, 7),
            ArchitectureCounts {
                inputs: 21,
                hidden: 7,
                outputs: 14
            }
        );
        assert_eq!(architecture_counts(1, 1, 1), ArchitectureCounts { inputs: 1, hidden: 1, outputs: 1 });
        assert_eq!(architecture_counts(10, 2, 1), ArchitectureCounts { inputs: 10, hidden: 1, outputs: 2 });
    }

    #[test]
    fn dedup_and_conflicts() {
        let s = |x: f64, y: f64| Sample { x: vec![x], y: vec![y] };
        let set = SampleSet::from_points(1, 1, vec![s(0.5, 0.5), s(0.5, 0.5), s(-0.0, 0.1), s(0.0, 0.1)]).unwrap();
        assert_eq!(set.len(), 2);
        let e = SampleSet::from_points(1, 1, vec![s(0.5, 0.5), s(0.7, 0.2), s(0.5, 0.6)]).unwrap_err();
        assert_eq!(e, Error::ConflictingDuplicate { first_line: 0, line: 2 });
    }

    #[test]
    fn sample_set_validation() {
        let unit = vec![Interval::new(0.0, 1.0).unwrap()];
        let bad = SampleSet::new(1, 1, unit.clone(), vec![Sample { x: vec![2.0], y: vec![0.1] }]);
        assert!(bad.is_err());
        let bad = SampleSet::new(1, 1, unit.clone(), vec![Sample { x: vec![0.5], y: vec![0.1, 0.2] }]);
        assert_eq!(bad.unwrap_err().name(), "DimensionMismatch");
        assert!(SampleSet::new(1, 1, unit, vec![]).is_err());
    }

    #[test]
    fn default_delta_halves_away_from_zero() {
        // g(t) = t − 1 vanishes at ⟨x,δ⟩ = 1, i.e. x = 1 with δ = 1
        let g = ActivationSpec::affine(1.0, -1.0);
        let samples = SampleSet::from_points(
            1,
            1,
            vec![Sample { x: vec![1.0], y: vec![0.3] }, Sample { x: vec![3.0], y: vec![0.6] }],
        )
        .unwrap();
        let deltas = resolve_deltas(&samples, &g, &DeltaPolicy::Default).unwrap();
        assert_eq!(deltas[0], vec![0.5]);
        let net = build_network(&samples, &g, &[ActivationSpec::sigmoid()], &DeltaPolicy::Default).unwrap();
        assert!(verify_reconstruction(&net, &samples, 1e-12).unwrap().passed);
    }

    #[test]
    fn default_delta_gives_up_at_origin() {
        let samples = SampleSet::from_points(
            1,
            1,
            vec![Sample { x: vec![0.0], y: vec![0.3] }, Sample { x: vec![1.0], y: vec![0.6] }],
        )
        .unwrap();
        let e = build_network(&samples, &ActivationSpec::identity(), &[ActivationSpec::sigmoid()], &DeltaPolicy::Default)
            .unwrap_err();
        assert_eq!(e.name(), "WeightUndefined");
        assert_eq!(e.sample_index(), Some(0));
    }

    #[test]
    fn build_reports_failing_sample() {
        let s = |x: f64, y: f64| Sample { x: vec![x], y: vec![y] };
        let samples = SampleSet::from_points(1, 1, vec![s(0.2, 0.5), s(0.4, 2.0), s(0.6, 0.5)]).unwrap();
        let e = build_network(&samples, &ActivationSpec::identity(), &[ActivationSpec::sigmoid()], &DeltaPolicy::Default)
            .unwrap_err();
        assert_eq!(e.name(), "RangeViolation");
        assert_eq!(e.sample_index(), Some(1));
    }

    #[test]
    fn certificate_missing_on_flat_sigma() {
        // σ⁻¹ of outputs this close to 1 sits where σ′ is below the vanishing threshold
        let s = |x: f64, y: f64| Sample { x: vec![x], y: vec![y] };
        let samples = SampleSet::from_points(1, 1, vec![s(1.0, 1.0 - 1e-14), s(2.0, 0.5)]).unwrap();
        let e = build_network(&samples, &ActivationSpec::identity(), &[ActivationSpec::sigmoid()], &DeltaPolicy::Default)
            .unwrap_err();
        assert_eq!(e.name(), "CertificateMissing");
    }

    #[test]
    fn routing_strings() {
        assert_eq!("anchor-exact".parse::<Routing>().unwrap(), Routing::AnchorExact);
        assert_eq!("nearest".parse::<Routing>().unwrap(), Routing::NearestAnchor);
        assert_eq!("unit:4".parse::<Routing>().unwrap(), Routing::Unit(4));
        assert!("unit:x".parse::<Routing>().is_err());
        assert_eq!(Routing::Unit(4).to_string(), "unit:4");
    }

    #[test]
    fn delta_policy_strings() {
        assert_eq!("default".parse::<DeltaPolicy>().unwrap(), DeltaPolicy::Default);
        assert_eq!("fixed:1,0.5".parse::<DeltaPolicy>().unwrap(), DeltaPolicy::Fixed(vec![1.0, 0.5]));
        assert!("fixed:a".parse::<DeltaPolicy>().is_err());
        assert_eq!(DeltaPolicy::Fixed(vec![1.0, 0.5]).to_string(), "fixed:1.0,0.5");
    }

    #[test]
    fn text_format_round_trip() {
        let net = trivial_net();
        let text = net.to_text();
        assert_eq!(
            text,
            "UFANET v1\ndims {n: 1, m: 1, p: 1}\ng identity\nsigmas [sigmoid]\nunits[0] {anchor_x: [0.5], delta: [1.0], theta: [0.0]}\nend\n"
        );
        assert_eq!(ShallowNetwork::from_text(&text).unwrap(), net);
    }

    #[test]
    fn malformed_streams() {
        let text = trivial_net().to_text();
        for cut in [0, 5, 12, 30, 50, 80, text.len() - 4] {
            let e = ShallowNetwork::from_text(&text[..cut]).unwrap_err();
            assert_eq!(e.name(), "FormatError", "cut at {cut}");
        }
        let e = ShallowNetwork::from_text(&text.replace("v1", "v2")).unwrap_err();
        assert_eq!(e.name(), "FormatError");
        let e = ShallowNetwork::from_text(&text.replace("[0.0]", "[0.0, 1.0]")).unwrap_err();
        assert_eq!(e.name(), "FormatError");
        let e = ShallowNetwork::from_text(&text.replace("delta: [1.0]", "delta: [0.0]")).unwrap_err();
        assert_eq!(e.name(), "FormatError");
        let e = ShallowNetwork::from_text(&format!("{text}junk\n")).unwrap_err();
        assert_eq!(e.name(), "FormatError");
    }
}
