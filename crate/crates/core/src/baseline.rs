//! Full-batch gradient descent on a conventional one-hidden-layer network
//! `ŷ = V·act(W·x + b) + c`, trained on mean squared error. This is the
//! iterative baseline the closed-form construction is compared against.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::{fmt_real, ActivationSpec};
use crate::error::{Error, Result};
use crate::network::{ReconstructionReport, SampleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct GDConfig {
    pub hidden_width: usize,
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub target_mse: f64,
    pub rng_seed: u64,
    pub init_scale: f64,
}

impl Default for GDConfig {
    fn default() -> Self {
        GDConfig {
            hidden_width: 16,
            learning_rate: 0.5,
            max_iterations: 2000,
            target_mse: 0.0,
            rng_seed: 0,
            init_scale: 1.0,
        }
    }
}

impl GDConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("gd config: {m}")));
        if self.hidden_width == 0 {
            return bad("hidden_width must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive and finite");
        }
        if !(self.target_mse >= 0.0) {
            return bad("target_mse must be non-negative");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive and finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GDModel {
    /// `hidden_width × n`
    pub input_weights: Vec<Vec<f64>>,
    pub hidden_bias: Vec<f64>,
    /// `m × hidden_width`
    pub output_weights: Vec<Vec<f64>>,
    pub output_bias: Vec<f64>,
    pub hidden_activation: ActivationSpec,
}

impl GDModel {
    /// Weights and biases drawn uniformly from `[−init_scale, init_scale]`.
    pub fn random(n: usize, m: usize, config: &GDConfig) -> GDModel {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let s = config.init_scale;
        let h = config.hidden_width;
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-s..=s)).collect() };
        let input_weights = (0..h).map(|_| draw(n)).collect();
        let hidden_bias = draw(h);
        let output_weights = (0..m).map(|_| draw(h)).collect();
        let output_bias = draw(m);
        GDModel {
            input_weights,
            hidden_bias,
            output_weights,
            output_bias,
            hidden_activation: ActivationSpec::sigmoid(),
        }
    }

    pub fn width(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn n(&self) -> usize {
        self.input_weights.first().map_or(0, Vec::len)
    }

    pub fn m(&self) -> usize {
        self.output_bias.len()
    }

    pub fn parameter_count(&self) -> usize {
        let h = self.width();
        h * self.n() + h + self.m() * h + self.m()
    }

    /// Flattened parameters: input weights, hidden bias, output weights, output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        self.input_weights.iter().for_each(|r| out.extend(r));
        out.extend(&self.hidden_bias);
        self.output_weights.iter().for_each(|r| out.extend(r));
        out.extend(&self.output_bias);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.parameter_count());
        let mut it = params.iter().copied();
        for r in &mut self.input_weights {
            r.iter_mut().for_each(|w| *w = it.next().unwrap());
        }
        self.hidden_bias.iter_mut().for_each(|w| *w = it.next().unwrap());
        for r in &mut self.output_weights {
            r.iter_mut().for_each(|w| *w = it.next().unwrap());
        }
        self.output_bias.iter_mut().for_each(|w| *w = it.next().unwrap());
    }

    fn act(&self, z: f64) -> f64 {
        self.hidden_activation.eval(z).unwrap_or(f64::NAN)
    }

    fn act_prime(&self, z: f64) -> f64 {
        self.hidden_activation.derivative(z).unwrap_or(f64::NAN)
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.input_weights
            .iter()
            .zip(&self.hidden_bias)
            .map(|(w, b)| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let a: Vec<f64> = self.hidden(x).into_iter().map(|z| self.act(z)).collect();
        self.output_weights
            .iter()
            .zip(&self.output_bias)
            .map(|(v, c)| v.iter().zip(&a).map(|(a, b)| a * b).sum::<f64>() + c)
            .collect()
    }

    /// `(1/p) Σ ‖ŷ − y‖²`
    pub fn mse(&self, samples: &SampleSet) -> f64 {
        let total: f64 = samples
            .points()
            .iter()
            .map(|s| {
                self.predict(&s.x)
                    .iter()
                    .zip(&s.y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        total / samples.len() as f64
    }

    /// Loss and its gradient by backpropagation, in [`GDModel::params`] order.
    pub fn loss_and_gradient(&self, samples: &SampleSet) -> (f64, Vec<f64>) {
        let (h, n, m) = (self.width(), self.n(), self.m());
        let scale = 2.0 / samples.len() as f64;
        let mut g_w = vec![0.0; h * n];
        let mut g_b = vec![0.0; h];
        let mut g_v = vec![0.0; m * h];
        let mut g_c = vec![0.0; m];
        let mut loss = 0.0;

        for s in samples.points() {
            let z = self.hidden(&s.x);
            let a: Vec<f64> = z.iter().map(|&z| self.act(z)).collect();
            let mut d_a = vec![0.0; h];
            for j in 0..m {
                let out = self.output_weights[j].iter().zip(&a).map(|(v, a)| v * a).sum::<f64>() + self.output_bias[j];
                let r = out - s.y[j];
                loss += r * r;
                let d_out = scale * r;
                g_c[j] += d_out;
                for k in 0..h {
                    g_v[j * h + k] += d_out * a[k];
                    d_a[k] += d_out * self.output_weights[j][k];
                }
            }
            for k in 0..h {
                let d_z = d_a[k] * self.act_prime(z[k]);
                g_b[k] += d_z;
                for l in 0..n {
                    g_w[k * n + l] += d_z * s.x[l];
                }
            }
        }
        let mut grad = g_w;
        grad.extend(g_b);
        grad.extend(g_v);
        grad.extend(g_c);
        (loss / samples.len() as f64, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GDReport {
    /// MSE after each update.
    pub loss_history: Vec<f64>,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub iterations_run: usize,
    pub converged: bool,
    /// Whether the loss never rose between consecutive iterations.
    pub nonincreasing: bool,
    pub wall_seconds: f64,
    pub config: GDConfig,
    pub sample_fingerprint: u64,
}

impl GDReport {
    /// Two-column `iteration,mse` CSV; iteration 0 is the initial loss.
    pub fn write_loss_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "iteration,mse")?;
        writeln!(w, "0,{}", fmt_real(self.initial_mse))?;
        for (i, l) in self.loss_history.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, fmt_real(*l))?;
        }
        Ok(())
    }
}

/// Full-batch gradient descent from a seeded random start. Stops after
/// `max_iterations` updates or once the loss reaches `target_mse`.
pub fn train_gd(samples: &SampleSet, config: &GDConfig) -> Result<(GDModel, GDReport)> {
    config.validate()?;
    let start = Instant::now();
    let mut model = GDModel::random(samples.n(), samples.m(), config);
    let mut params = model.params();
    let (mut loss, mut grad) = model.loss_and_gradient(samples);
    if !loss.is_finite() {
        return Err(Error::NumericalDivergence {
            iteration: 0,
            last_finite_mse: f64::NAN,
        });
    }
    let initial_mse = loss;
    let mut history = Vec::new();
    let mut nonincreasing = true;

    while history.len() < config.max_iterations && loss > config.target_mse {
        params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= config.learning_rate * g);
        model.set_params(&params);
        let (next, next_grad) = model.loss_and_gradient(samples);
        if !next.is_finite() || next_grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericalDivergence {
                iteration: history.len() + 1,
                last_finite_mse: loss,
            });
        }
        if next > loss {
            nonincreasing = false;
        }
        loss = next;
        grad = next_grad;
        history.push(loss);
    }

    let report = GDReport {
        iterations_run: history.len(),
        loss_history: history,
        initial_mse,
        final_mse: loss,
        converged: loss <= config.target_mse,
        nonincreasing,
        wall_seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
        sample_fingerprint: samples.fingerprint(),
    };
    Ok((model, report))
}

/// Largest relative disagreement between the backpropagated gradient and
/// central finite differences with step `1e-6·max(1,|w|)`.
///
/// Relative error is `|a − f| / max(|a|, |f|, 1e-6)`; the floor keeps
/// parameters whose true gradient is zero from dividing noise by noise.
pub fn gradient_check(model: &GDModel, samples: &SampleSet) -> f64 {
    let (_, analytic) = model.loss_and_gradient(samples);
    let base = model.params();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let h = 1e-6 * base[i].abs().max(1.0);
        params[i] = base[i] + h;
        probe.set_params(&params);
        let up = probe.mse(samples);
        params[i] = base[i] - h;
        probe.set_params(&params);
        let down = probe.mse(samples);
        params[i] = base[i];
        let fd = (up - down) / (2.0 * h);
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

/// Side-by-side record of the closed-form construction and a GD run.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub ufa_mse: f64,
    pub gd_mse: f64,
    pub ufa_steps: usize,
    pub gd_iterations: usize,
    pub ufa_seconds: f64,
    pub gd_seconds: f64,
    /// `ufa_mse ≤ gd_mse`; ties count as wins.
    pub ufa_wins_loss: bool,
}

pub fn compare(ufa: &ReconstructionReport, gd: &GDReport) -> Result<Comparison> {
    if ufa.sample_fingerprint != gd.sample_fingerprint {
        return Err(Error::SampleMismatch);
    }
    let ufa_mse = ufa.mse();
    Ok(Comparison {
        ufa_mse,
        gd_mse: gd.final_mse,
        ufa_steps: 1,
        gd_iterations: gd.iterations_run,
        ufa_seconds: ufa.construction_seconds,
        gd_seconds: gd.wall_seconds,
        ufa_wins_loss: ufa_mse <= gd.final_mse,
    })
}

impl Comparison {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "                 closed-form      gradient descent");
        let _ = writeln!(out, "  mse             {:<16} {}", fmt_sci(self.ufa_mse), fmt_sci(self.gd_mse));
        let _ = writeln!(out, "  steps           {:<16} {}", self.ufa_steps, self.gd_iterations);
        let _ = writeln!(out, "  wall time (s)   {:<16.6} {:.6}", self.ufa_seconds, self.gd_seconds);
        let _ = writeln!(out, "  ufa_wins_loss   {}", self.ufa_wins_loss);
        out
    }

    pub fn render_kv(&self) -> String {
        format!(
            "ufa_mse={}\ngd_mse={}\nufa_steps={}\ngd_iterations={}\nufa_seconds={}\ngd_seconds={}\nufa_wins_loss={}\n",
            fmt_real(self.ufa_mse),
            fmt_real(self.gd_mse),
            self.ufa_steps,
            self.gd_iterations,
            self.ufa_seconds,
            self.gd_seconds,
            self.ufa_wins_loss
        )
    }
}

fn fmt_sci(x: f64) -> String {
    format!("{x:.3e}")
}
