//! Pre-build checks of the construction hypotheses on concrete samples:
//! outputs inside each σⱼ's range, σⱼ′ ≠ 0 where σⱼ will be inverted, and
//! g ≠ 0 on the realized hidden preimages.
//!
//! Containment is checked on observed outputs only, so a pass is a necessary
//! condition for the sampled function, not a statement about its full image.

use std::fmt::Write as _;

use crate::activation::{
    check_invertible, check_nonvanishing, fmt_real, ActivationSpec, CertificationReport, CertifiedProperty,
    Interval, VANISHING_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::network::{resolve_deltas, sigma_working_interval, DeltaPolicy, SampleSet};
use crate::theta::inner;

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentViolation {
    pub sample: usize,
    pub output: usize,
    pub value: f64,
    pub allowed: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeContainment {
    pub passed: bool,
    pub violations: Vec<ContainmentViolation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub range_containment: RangeContainment,
    pub sigma_certificates: Vec<CertificationReport>,
    pub g_certificate: CertificationReport,
    /// Hull of `⟨x,δ⟩` over the samples under the resolved δ policy.
    pub realized_preimage_interval: Interval,
    pub overall_passed: bool,
    pub notes: Vec<String>,
}

/// Runs every hypothesis check and aggregates the results. Failing
/// hypotheses are reported, not returned as errors; only malformed inputs
/// (wrong number of σⱼ, bad δ shapes, `grid < 2`) are errors.
pub fn check_hypotheses(
    samples: &SampleSet,
    g: &ActivationSpec,
    sigmas: &[ActivationSpec],
    delta_policy: &DeltaPolicy,
    grid: usize,
) -> Result<HypothesisReport> {
    if sigmas.len() != samples.m() {
        return Err(Error::DimensionMismatch {
            what: "sigmas",
            expected: samples.m(),
            found: sigmas.len(),
        });
    }
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid must be at least 2, got {grid}")));
    }
    let mut notes = Vec::new();

    let mut violations = Vec::new();
    for (i, s) in samples.points().iter().enumerate() {
        for (j, (&y, sigma)) in s.y.iter().zip(sigmas).enumerate() {
            if !sigma.range().admits(y) {
                violations.push(ContainmentViolation {
                    sample: i,
                    output: j,
                    value: y,
                    allowed: sigma.range().to_string(),
                });
            }
        }
    }
    let range_containment = RangeContainment {
        passed: violations.is_empty(),
        violations,
    };

    let mut sigma_certificates = Vec::with_capacity(sigmas.len());
    for (j, sigma) in sigmas.iter().enumerate() {
        let inverses = samples.points().iter().filter_map(|s| sigma.invert(s.y[j]).ok());
        let interval = match sigma_working_interval(sigma, inverses) {
            Some(i) => i,
            None => {
                let d = sigma.domain();
                notes.push(format!("output {j}: no invertible sample, certifying σ near 0"));
                Interval::new(d.clamp(-1.0), d.clamp(1.0))?
            }
        };
        sigma_certificates.push(check_invertible(sigma, &interval, grid)?);
    }

    let deltas = match resolve_deltas(samples, g, delta_policy) {
        Ok(d) => d,
        Err(e) if e.is_hypothesis_failure() => {
            notes.push(format!("delta policy `{delta_policy}` could not avoid g = 0: {e}"));
            vec![vec![1.0; samples.n()]; samples.len()]
        }
        Err(e) => return Err(e),
    };
    let preimages: Vec<f64> = samples
        .points()
        .iter()
        .zip(&deltas)
        .map(|(s, d)| inner(&s.x, d))
        .collect();
    let realized_preimage_interval = Interval::hull(preimages.iter().copied())
        .ok_or_else(|| Error::InvalidArgument("non-finite hidden preimage".into()))?;
    let g_certificate = certify_hidden(g, &realized_preimage_interval, &preimages, grid, &mut notes)?;

    let overall_passed =
        range_containment.passed && sigma_certificates.iter().all(|c| c.passed) && g_certificate.passed;
    Ok(HypothesisReport {
        range_containment,
        sigma_certificates,
        g_certificate,
        realized_preimage_interval,
        overall_passed,
        notes,
    })
}

// Grid check on the hull, tightened by the exact realized preimages.
fn certify_hidden(
    g: &ActivationSpec,
    hull: &Interval,
    preimages: &[f64],
    grid: usize,
    notes: &mut Vec<String>,
) -> Result<CertificationReport> {
    if let Some(&outside) = preimages.iter().find(|&&t| !g.domain().contains(t)) {
        notes.push(format!(
            "hidden preimage {} leaves the domain {} of `{}`",
            fmt_real(outside),
            g.domain(),
            g.name()
        ));
        return Ok(CertificationReport {
            passed: false,
            grid_size: 0,
            worst_point: outside,
            worst_value: f64::NAN,
            property: CertifiedProperty::ValueNonvanishing,
        });
    }
    let checked = Interval::new(g.domain().clamp(hull.lo()), g.domain().clamp(hull.hi()))?;
    let mut report = check_nonvanishing(g, &checked, grid)?;
    for &t in preimages {
        let v = g.eval(t)?;
        if !(v.abs() > VANISHING_THRESHOLD) {
            report.passed = false;
        }
        if v.abs() < report.worst_value.abs() {
            report.worst_point = t;
            report.worst_value = v;
        }
    }
    Ok(report)
}

fn render_cert(out: &mut String, label: &str, c: &CertificationReport) {
    let _ = writeln!(
        out,
        "  {label}: {} ({}, grid {}, worst {} at {})",
        if c.passed { "ok" } else { "FAILED" },
        c.property,
        c.grid_size,
        fmt_real(c.worst_value),
        fmt_real(c.worst_point)
    );
}

impl HypothesisReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "hypotheses: {}",
            if self.overall_passed { "PASSED" } else { "FAILED" }
        );
        let _ = writeln!(
            out,
            "  range containment: {} ({} violations)",
            if self.range_containment.passed { "ok" } else { "FAILED" },
            self.range_containment.violations.len()
        );
        for v in &self.range_containment.violations {
            let _ = writeln!(
                out,
                "    RangeViolation: sample {} output {}: {} not inside {}",
                v.sample,
                v.output,
                fmt_real(v.value),
                v.allowed
            );
        }
        for (j, c) in self.sigma_certificates.iter().enumerate() {
            render_cert(&mut out, &format!("sigma[{j}] invertible"), c);
        }
        render_cert(&mut out, "g nonvanishing", &self.g_certificate);
        let _ = writeln!(out, "  realized preimages: {}", self.realized_preimage_interval);
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "overall_passed={}", self.overall_passed);
        let _ = writeln!(out, "range_containment.passed={}", self.range_containment.passed);
        let _ = writeln!(out, "range_containment.violations={}", self.range_containment.violations.len());
        for (k, v) in self.range_containment.violations.iter().enumerate() {
            let _ = writeln!(
                out,
                "range_containment.violation.{k}=sample:{},output:{},value:{},allowed:{}",
                v.sample,
                v.output,
                fmt_real(v.value),
                v.allowed
            );
        }
        for (j, c) in self.sigma_certificates.iter().enumerate() {
            let _ = writeln!(out, "sigma.{j}.passed={}", c.passed);
            let _ = writeln!(out, "sigma.{j}.worst_point={}", fmt_real(c.worst_point));
            let _ = writeln!(out, "sigma.{j}.worst_value={}", fmt_real(c.worst_value));
        }
        let _ = writeln!(out, "g.passed={}", self.g_certificate.passed);
        let _ = writeln!(out, "g.worst_point={}", fmt_real(self.g_certificate.worst_point));
        let _ = writeln!(out, "g.worst_value={}", fmt_real(self.g_certificate.worst_value));
        let _ = writeln!(out, "preimage.lo={}", fmt_real(self.realized_preimage_interval.lo()));
        let _ = writeln!(out, "preimage.hi={}", fmt_real(self.realized_preimage_interval.hi()));
        out
    }
}

/// A `scale:c,d:<sigma>` wrapper whose range holds every observed value of
/// output `component`, with the observed span occupying the middle
/// `1 − 2·margin` of the wrapped range. Returns the identity wrapper when the
/// outputs already sit that far inside.
pub fn suggest_rescale(
    samples: &SampleSet,
    component: usize,
    sigma: &ActivationSpec,
    margin: f64,
) -> Result<ActivationSpec> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::InvalidArgument(format!("margin must lie in (0, 0.5), got {margin}")));
    }
    if component >= samples.m() {
        return Err(Error::DimensionMismatch {
            what: "component",
            expected: samples.m(),
            found: component,
        });
    }
    let values = samples.points().iter().map(|s| s.y[component]);
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = (hi - lo).max(1e-6 * lo.abs().max(1.0));
    let range = sigma.range();
    let slack = 1e-12 * span;

    if range.is_bounded() {
        let width = range.hi - range.lo;
        if lo >= range.lo + margin * width - slack && hi <= range.hi - margin * width + slack {
            return Ok(ActivationSpec::scaled(1.0, 0.0, sigma));
        }
        let target_width = span / (1.0 - 2.0 * margin);
        let target_lo = lo - margin * target_width;
        let scale = target_width / width;
        let shift = target_lo - scale * range.lo;
        return Ok(ActivationSpec::scaled(scale, shift, sigma));
    }

    let pad = margin * span.max(1.0);
    let below_ok = !range.lo.is_finite() || lo >= range.lo + pad - slack;
    let above_ok = !range.hi.is_finite() || hi <= range.hi - pad + slack;
    if below_ok && above_ok {
        return Err(Error::NotApplicable(format!(
            "`{}` has an unbounded range that already contains the outputs",
            sigma.name()
        )));
    }
    let shift = if range.lo.is_finite() {
        (lo - pad) - range.lo
    } else {
        (hi + pad) - range.hi
    };
    Ok(ActivationSpec::scaled(1.0, shift, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Kind;
    use crate::network::Sample;

    fn set_1d(points: &[(f64, f64)]) -> SampleSet {
        SampleSet::from_points(
            1,
            1,
            points.iter().map(|&(x, y)| Sample { x: vec![x], y: vec![y] }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn y_two_violates_sigmoid() {
        let s = set_1d(&[(0.5, 0.3), (1.0, 2.0)]);
        let r = check_hypotheses(&s, &ActivationSpec::identity(), &[ActivationSpec::sigmoid()], &DeltaPolicy::Default, 101)
            .unwrap();
        assert!(!r.overall_passed);
        assert!(!r.range_containment.passed);
        assert_eq!(r.range_containment.violations.len(), 1);
        let v = &r.range_containment.violations[0];
        assert_eq!((v.sample, v.output, v.value), (1, 0, 2.0));
        assert!(r.g_certificate.passed);
        assert!(r.render_text().contains("sample 1 output 0"));
        assert!(r.render_kv().contains("overall_passed=false"));
    }

    #[test]
    fn straddling_zero_fails_g() {
        let s = set_1d(&[(-0.5, 0.3), (0.5, 0.4)]);
        let r = check_hypotheses(
            &s,
            &ActivationSpec::identity(),
            &[ActivationSpec::sigmoid()],
            &DeltaPolicy::Fixed(vec![1.0]),
            101,
        )
        .unwrap();
        assert!(r.range_containment.passed);
        assert!(!r.g_certificate.passed);
        assert!(!r.overall_passed);
        assert_eq!(r.realized_preimage_interval, Interval::new(-0.5, 0.5).unwrap());
    }

    #[test]
    fn preimage_outside_g_domain() {
        let s = set_1d(&[(0.5, 0.3), (3.0, 0.4)]);
        let g: ActivationSpec = "identity@0.1,2".parse().unwrap();
        let r = check_hypotheses(&s, &g, &[ActivationSpec::sigmoid()], &DeltaPolicy::Default, 11).unwrap();
        assert!(!r.g_certificate.passed);
        assert_eq!(r.g_certificate.worst_point, 3.0);
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn constant_sigma_fails_certificate() {
        let s = set_1d(&[(0.5, 0.3)]);
        let r = check_hypotheses(&s, &ActivationSpec::identity(), &[ActivationSpec::affine(0.0, 0.3)], &DeltaPolicy::Default, 11)
            .unwrap();
        assert!(r.range_containment.passed);
        assert!(!r.sigma_certificates[0].passed);
        assert!(!r.overall_passed);
    }

    #[test]
    fn rescale_examples() {
        let s = set_1d(&[(0.0, 0.0), (0.5, 1.0), (1.0, 2.0)]);
        let w = suggest_rescale(&s, 0, &ActivationSpec::sigmoid(), 0.1).unwrap();
        match w.kind() {
            Kind::Scaled { scale, shift, base } => {
                assert!((scale - 2.5).abs() < 1e-12);
                assert!((shift + 0.25).abs() < 1e-12);
                assert_eq!(**base, Kind::Sigmoid);
            }
            other => panic!("unexpected {other:?}"),
        }

        let s = set_1d(&[(0.0, 0.2), (1.0, 0.8)]);
        let w = suggest_rescale(&s, 0, &ActivationSpec::sigmoid(), 0.1).unwrap();
        assert_eq!(w.name(), "scale:1.0,0.0:sigmoid");

        let s = set_1d(&[(0.0, 0.0), (1.0, 1.0)]);
        let e = suggest_rescale(&s, 0, &ActivationSpec::identity(), 0.1).unwrap_err();
        assert_eq!(e.name(), "NotApplicable");
    }

    #[test]
    fn rescale_half_bounded() {
        let s = set_1d(&[(0.0, -1.0), (1.0, 2.0)]);
        let w = suggest_rescale(&s, 0, &ActivationSpec::softplus(), 0.1).unwrap();
        assert!(w.range().admits(-1.0) && w.range().admits(2.0));
        let s = set_1d(&[(0.0, 1.0), (1.0, 2.0)]);
        assert!(suggest_rescale(&s, 0, &ActivationSpec::softplus(), 0.1).is_err());
    }

    #[test]
    fn rescale_rejects_bad_margin() {
        let s = set_1d(&[(0.0, 0.2)]);
        assert!(suggest_rescale(&s, 0, &ActivationSpec::sigmoid(), 0.5).is_err());
        assert!(suggest_rescale(&s, 0, &ActivationSpec::sigmoid(), 0.0).is_err());
        assert!(suggest_rescale(&s, 1, &ActivationSpec::sigmoid(), 0.1).is_err());
    }
}
