//! Argument definitions and the subcommand drivers.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use idt_core::analysis::{brute_force_sparsest, check_uniqueness};
use idt_core::baselines::{acwmf, amf, AMF_DEFAULT_MAX_WINDOW};
use idt_core::metrics::{mse, quantize_8bit, snr, ssim};
use idt_core::noise::{corrupt, gen_synthetic_pair};
use idt_core::params::{estimate_params_with, CALIBRATED_SIGMA_LOW_DENSITY};
use idt_core::solver::{modified_idt_traced, TraceReference, DEFAULT_MAX_ITERS};
use idt_core::transforms::dct_infnorm_squared;
use idt_core::{AlphaRule, Config, Matrix, NoiseKind, NoiseSpec, Plan, Recovery};
use serde::Serialize;

use crate::harness::{run_synth, write_synth_csv, SynthConfig};
use crate::io::{read_image, read_wav, write_image, write_wav, Audio, Image};

#[derive(Debug, Parser)]
#[command(
    name = "idt",
    version,
    about = "Impulsive noise removal by iterative double thresholding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Restore an image corrupted by impulsive noise.
    DenoiseImage(DenoiseImageArgs),
    /// Remove clicks from a 16-bit PCM WAV file, frame by frame.
    DenoiseAudio(DenoiseAudioArgs),
    /// Corrupt an image with seeded impulsive noise.
    AddNoise(AddNoiseArgs),
    /// Sparse signal plus sparse noise recovery over a sparsity grid (CSV).
    Synth(SynthArgs),
    /// Coherence, uniqueness bound and the brute-force sparsest-pair oracle.
    Analyze(AnalyzeArgs),
    /// Run the adaptive median filters on their own.
    Baseline(BaselineArgs),
}

/// `kind:density`, or `mixed:spn_density:rvin_density`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseArg {
    pub kind: NoiseKind,
    pub density: f64,
    pub second: Option<f64>,
}

impl FromStr for NoiseArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let kind: NoiseKind = parts[0].parse().map_err(|e| format!("{e}"))?;
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|e| format!("bad density {p:?}: {e}"))
        };
        match (kind, parts.len()) {
            (NoiseKind::Mixed, 3) => Ok(Self {
                kind,
                density: num(parts[1])?,
                second: Some(num(parts[2])?),
            }),
            (NoiseKind::Mixed, _) => Err("mixed noise needs mixed:<spn>:<rvin>".into()),
            (_, 2) => Ok(Self {
                kind,
                density: num(parts[1])?,
                second: None,
            }),
            _ => Err(format!("expected <kind>:<density>, got {s:?}")),
        }
    }
}

impl NoiseArg {
    pub fn spec(&self, seed: u64) -> NoiseSpec {
        match self.kind {
            NoiseKind::Spn => NoiseSpec::spn(self.density, seed),
            NoiseKind::Rvin => NoiseSpec::rvin(self.density, seed),
            NoiseKind::Missing => NoiseSpec::missing(self.density, seed),
            NoiseKind::Mixed => NoiseSpec::mixed(self.density, self.second.unwrap_or(0.0), seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Calibrated,
    LogRatio,
    Literal,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Estimate all parameters from the noisy input (default unless all
    /// four of alpha1, beta1, alpha2, beta2 are given).
    #[arg(long)]
    pub auto_params: bool,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub iters: usize,
    /// Stop threshold on ‖Nᵏ⁺¹ − Nᵏ‖_F; default 1e-4·‖Y‖_F.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Noise kind assumed by the parameter estimate when no noise is injected.
    #[arg(long)]
    pub kind: Option<NoiseKind>,
    #[arg(long, value_enum, default_value_t = RuleArg::Calibrated)]
    pub rule: RuleArg,
    /// Use the raw mean gaps as decay rates (same as `--rule literal`).
    #[arg(long)]
    pub alpha_literal: bool,
}

impl SolverArgs {
    fn rule(&self) -> AlphaRule {
        if self.alpha_literal {
            return AlphaRule::Literal;
        }
        match self.rule {
            RuleArg::Calibrated => AlphaRule::Calibrated,
            RuleArg::LogRatio => AlphaRule::LogRatio,
            RuleArg::Literal => AlphaRule::Literal,
        }
    }

    fn explicit(&self) -> Option<(f64, f64, f64, f64)> {
        Some((self.alpha1?, self.beta1?, self.alpha2?, self.beta2?))
    }

    /// Image configuration for `y`: estimated or explicit, then overridden
    /// by whatever was given on the command line.
    pub fn config(&self, y: &Matrix, plan: &Plan, kind: NoiseKind) -> Result<Config> {
        ensure!(self.iters >= 1, "--iters must be at least 1");
        let mut cfg = match self.explicit() {
            Some((a1, b1, a2, b2)) if !self.auto_params => {
                Config::image(a1, b1, a2, b2, CALIBRATED_SIGMA_LOW_DENSITY)
            }
            _ => {
                let mut cfg = estimate_params_with(y, kind, plan, self.iters, self.rule())?.config;
                if let Some(v) = self.alpha1 {
                    cfg.alpha1 = v;
                }
                if let Some(v) = self.beta1 {
                    cfg.beta1 = v;
                }
                if let Some(v) = self.alpha2 {
                    cfg.alpha2 = v;
                }
                if let Some(v) = self.beta2 {
                    cfg.beta2 = v;
                }
                cfg
            }
        };
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        cfg.max_iters = self.iters;
        cfg.stop_delta = self.delta;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseImageArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Clean image for PSNR/SSIM. Not needed with `--noise`, where the
    /// input itself is the reference.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Corrupt the input before restoring it.
    #[arg(long)]
    pub noise: Option<NoiseArg>,
    /// Where to save the corrupted image when `--noise` is given.
    #[arg(long)]
    pub noisy_output: Option<PathBuf>,
    /// JSON metrics report; defaults to the output path with `.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-iteration CSV trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Convert color input to BT.601 luma first.
    #[arg(long)]
    pub gray: bool,
    #[arg(long)]
    pub no_clip: bool,
    #[arg(long)]
    pub no_filter: bool,
    /// Score the 8-bit re-quantized output instead of the raw estimate.
    #[arg(long)]
    pub quantize: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseAudioArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Inject impulses (values drawn in [−1, 1]) before restoring.
    #[arg(long)]
    pub noise: Option<NoiseArg>,
    #[arg(long)]
    pub noisy_output: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples per non-overlapping frame.
    #[arg(long, default_value_t = 4096)]
    pub frame: usize,
    /// Enable the Gaussian smoothing step (off for audio by default).
    #[arg(long)]
    pub filter: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AddNoiseArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long)]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Save the corruption mask (255 = corrupted) as a gray image.
    #[arg(long)]
    pub mask_output: Option<PathBuf>,
    #[arg(long)]
    pub gray: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3])]
    pub rho_x: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3])]
    pub rho_n: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 128.0)]
    pub variance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub levels: usize,
    /// Last threshold level relative to the first.
    #[arg(long, default_value_t = 1e-8)]
    pub floor: f64,
    /// Inner stop relative to ‖Y‖_F.
    #[arg(long, default_value_t = 1e-6)]
    pub inner_delta: f64,
    #[arg(long, default_value_t = 100)]
    pub max_inner: usize,
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl SynthArgs {
    pub fn config(&self) -> SynthConfig {
        SynthConfig {
            size: self.size,
            rho_x: self.rho_x.clone(),
            rho_n: self.rho_n.clone(),
            trials: self.trials,
            variance: self.variance,
            seed: self.seed,
            levels: self.levels,
            floor: self.floor,
            inner_delta: self.inner_delta,
            max_inner_iters: self.max_inner,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub m: usize,
    /// Second dimension; defaults to `m`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub k1: usize,
    #[arg(long, default_value_t = 0)]
    pub k2: usize,
    /// Plant a 1-D length-m instance with k1 DCT and k2 sample spikes and
    /// enumerate all sparsest solutions.
    #[arg(long)]
    pub brute_force: bool,
    /// Largest total sparsity enumerated; defaults to max(1, k1 + k2).
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    Amf,
    Acwmf,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = FilterArg::Amf)]
    pub filter: FilterArg,
    #[arg(long, default_value_t = AMF_DEFAULT_MAX_WINDOW)]
    pub max_window: usize,
    #[arg(long)]
    pub noise: Option<NoiseArg>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub gray: bool,
}

/// JSON summary of an image run. Scores are `null` without a reference
/// (and for an exact match, where PSNR is infinite).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ImageReport {
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub noisy_psnr: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub channels: Vec<ChannelParams>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ChannelParams {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub sigma: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AudioReport {
    pub snr_in: Option<f64>,
    pub snr_out: Option<f64>,
    pub frames: usize,
    pub iterations: usize,
    pub wall_time_s: f64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// PSNR over all channels (pooled MSE) and mean SSIM.
pub fn image_scores(estimate: &Image, reference: &Image, quantize: bool) -> Result<(f64, f64)> {
    ensure!(
        estimate.channels.len() == reference.channels.len(),
        "reference has {} channels, estimate {}",
        reference.channels.len(),
        estimate.channels.len()
    );
    let mut total_mse = 0.0;
    let mut total_ssim = 0.0;
    for (e, r) in estimate.channels.iter().zip(&reference.channels) {
        let e = if quantize {
            quantize_8bit(e)
        } else {
            e.clone()
        };
        total_mse += mse(&e, r)?;
        total_ssim += ssim(&e, r)?;
    }
    let c = estimate.channels.len() as f64;
    let psnr = if total_mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / (total_mse / c)).log10()
    };
    Ok((psnr, total_ssim / c))
}

fn corrupt_image(clean: &Image, noise: &NoiseArg, seed: u64) -> Result<(Image, Vec<Matrix>)> {
    let mut channels = Vec::new();
    let mut masks = Vec::new();
    for (c, plane) in clean.channels.iter().enumerate() {
        let inst = corrupt(plane, &noise.spec(seed.wrapping_add(c as u64)))?;
        masks.push(inst.mask.mapv(|b| if b { 255.0 } else { 0.0 }));
        channels.push(inst.y);
    }
    Ok((Image { channels }, masks))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f =
        BufWriter::new(File::create(path).with_context(|| format!("writing {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn default_report(output: &Path) -> PathBuf {
    output.with_extension("json")
}

#[derive(Debug, Serialize)]
struct TraceRow {
    channel: usize,
    k: usize,
    threshold1: f64,
    threshold2: f64,
    residual: f64,
    psnr: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GrayTraceRow {
    k: usize,
    threshold1: f64,
    threshold2: f64,
    residual: f64,
    psnr: Option<f64>,
}

/// `k,threshold1,threshold2,residual,psnr`, with a leading `channel`
/// column for color images.
fn write_trace(path: &Path, results: &[Recovery]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for (c, r) in results.iter().enumerate() {
        for rec in &r.trace {
            let psnr = rec.psnr.and_then(finite);
            if results.len() == 1 {
                w.serialize(GrayTraceRow {
                    k: rec.iteration,
                    threshold1: rec.threshold_signal,
                    threshold2: rec.threshold_noise,
                    residual: rec.residual,
                    psnr,
                })?;
            } else {
                w.serialize(TraceRow {
                    channel: c,
                    k: rec.iteration,
                    threshold1: rec.threshold_signal,
                    threshold2: rec.threshold_noise,
                    residual: rec.residual,
                    psnr,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Restores every channel of `noisy`; returns the estimate, per-channel
/// results and configurations, and the solver wall time.
pub fn restore_image(
    noisy: &Image,
    reference: Option<&Image>,
    args: &DenoiseImageArgs,
    kind: NoiseKind,
) -> Result<(Image, Vec<Recovery>, Vec<Config>, f64)> {
    let plan = Plan::new(noisy.dim().0, noisy.dim().1)?;
    let start = Instant::now();
    let mut results = Vec::new();
    let mut configs = Vec::new();
    for (c, y) in noisy.channels.iter().enumerate() {
        let mut cfg = args.solver.config(y, &plan, kind)?;
        if args.no_clip {
            cfg.enable_clip = false;
        }
        if args.no_filter {
            cfg.enable_filter = false;
        }
        let trace_ref = reference.map(|r| TraceReference {
            signal: &r.channels[c],
            peak: 255.0,
        });
        results.push(modified_idt_traced(y, &plan, &cfg, trace_ref)?);
        configs.push(cfg);
    }
    let wall = start.elapsed().as_secs_f64();
    let estimate = Image {
        channels: results.iter().map(|r| r.x_spatial.clone()).collect(),
    };
    Ok((estimate, results, configs, wall))
}

pub fn cmd_denoise_image(args: &DenoiseImageArgs) -> Result<ImageReport> {
    let input = read_image(&args.input, args.gray)?;
    let (noisy, reference) = match &args.noise {
        Some(noise) => {
            let (noisy, _) = corrupt_image(&input, noise, args.seed)?;
            if let Some(p) = &args.noisy_output {
                write_image(p, &noisy)?;
            }
            (noisy, Some(input))
        }
        None => {
            let reference = args
                .reference
                .as_ref()
                .map(|p| read_image(p, args.gray))
                .transpose()?;
            (input, reference)
        }
    };
    if let Some(r) = &reference {
        ensure!(
            r.dim() == noisy.dim(),
            "reference size {:?} differs from input {:?}",
            r.dim(),
            noisy.dim()
        );
    }
    let kind = args
        .solver
        .kind
        .or(args.noise.map(|n| n.kind))
        .unwrap_or(NoiseKind::Spn);

    let (estimate, results, configs, wall) = restore_image(&noisy, reference.as_ref(), args, kind)?;
    write_image(&args.output, &estimate)?;
    if let Some(p) = &args.trace {
        write_trace(p, &results)?;
    }

    let (psnr, ssim, noisy_psnr) = match &reference {
        Some(r) => {
            let (p, s) = image_scores(&estimate, r, args.quantize)?;
            let (np, _) = image_scores(&noisy, r, false)?;
            (finite(p), Some(s), finite(np))
        }
        None => (None, None, None),
    };
    let report = ImageReport {
        psnr,
        ssim,
        noisy_psnr,
        iterations: results.iter().map(|r| r.iterations_used).max().unwrap_or(0),
        converged: results.iter().all(|r| r.converged),
        wall_time_s: wall,
        channels: configs
            .iter()
            .zip(&results)
            .map(|(c, r)| ChannelParams {
                alpha1: c.alpha1,
                beta1: c.beta1,
                alpha2: c.alpha2,
                beta2: c.beta2,
                sigma: c.sigma,
                iterations: r.iterations_used,
            })
            .collect(),
    };
    write_json(
        &args
            .report
            .clone()
            .unwrap_or_else(|| default_report(&args.output)),
        &report,
    )?;
    Ok(report)
}

/// Frame-wise restoration of one audio channel. The last frame may be
/// shorter than `frame`.
pub fn restore_audio_channel(
    y: &Matrix,
    frame: usize,
    solver: &SolverArgs,
    kind: NoiseKind,
    filter: bool,
    plans: &mut HashMap<usize, Plan>,
) -> Result<(Matrix, usize, usize)> {
    ensure!(frame >= 1, "--frame must be positive");
    let mut out = y.clone();
    let (mut frames, mut iterations) = (0, 0);
    let len = y.nrows();
    let mut start = 0;
    while start < len {
        let end = (start + frame).min(len);
        let chunk = y.slice(ndarray::s![start..end, ..]).to_owned();
        let plan = match plans.entry(end - start) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(Plan::new_1d(end - start)?),
        };
        if chunk.iter().any(|v| *v != 0.0) {
            let mut cfg = solver.config(&chunk, plan, kind)?;
            cfg.enable_clip = false;
            cfg.clip_range = None;
            cfg.enable_filter = filter;
            let r = modified_idt_traced(&chunk, plan, &cfg, None)?;
            iterations += r.iterations_used;
            out.slice_mut(ndarray::s![start..end, ..])
                .assign(&r.x_spatial);
        }
        frames += 1;
        start = end;
    }
    Ok((out, frames, iterations))
}

pub fn cmd_denoise_audio(args: &DenoiseAudioArgs) -> Result<AudioReport> {
    let input = read_wav(&args.input)?;
    let (noisy, reference) = match &args.noise {
        Some(noise) => {
            let channels = input
                .channels
                .iter()
                .enumerate()
                .map(|(c, x)| {
                    let spec = noise
                        .spec(args.seed.wrapping_add(c as u64))
                        .with_value_range(-1.0, 1.0);
                    Ok(corrupt(x, &spec)?.y)
                })
                .collect::<Result<Vec<_>>>()?;
            let noisy = Audio {
                sample_rate: input.sample_rate,
                channels,
            };
            if let Some(p) = &args.noisy_output {
                write_wav(p, &noisy)?;
            }
            (noisy, Some(input))
        }
        None => {
            let reference = args.reference.as_ref().map(|p| read_wav(p)).transpose()?;
            (input, reference)
        }
    };
    // ACWMF thresholds are in 8-bit units, so audio defaults to the AMF
    // coarse estimate whatever the injected noise.
    let kind = args.solver.kind.unwrap_or(NoiseKind::Spn);

    let start = Instant::now();
    let mut plans = HashMap::new();
    let (mut frames, mut iterations) = (0, 0);
    let mut channels = Vec::new();
    for y in &noisy.channels {
        let (x, f, it) =
            restore_audio_channel(y, args.frame, &args.solver, kind, args.filter, &mut plans)?;
        frames += f;
        iterations += it;
        channels.push(x);
    }
    let wall = start.elapsed().as_secs_f64();
    let restored = Audio {
        sample_rate: noisy.sample_rate,
        channels,
    };
    write_wav(&args.output, &restored)?;

    let pooled_snr = |a: &Audio, r: &Audio| -> Result<f64> {
        ensure!(
            a.channels.len() == r.channels.len(),
            "reference channel count differs"
        );
        let stack = |x: &Audio| -> Result<Matrix> {
            let views: Vec<_> = x.channels.iter().map(|c| c.view()).collect();
            Ok(ndarray::concatenate(ndarray::Axis(0), &views)?)
        };
        Ok(snr(&stack(a)?, &stack(r)?)?)
    };
    let (snr_in, snr_out) = match &reference {
        Some(r) => (
            pooled_snr(&noisy, r).ok().and_then(finite),
            pooled_snr(&restored, r).ok().and_then(finite),
        ),
        None => (None, None),
    };
    let report = AudioReport {
        snr_in,
        snr_out,
        frames,
        iterations,
        wall_time_s: wall,
    };
    write_json(
        &args
            .report
            .clone()
            .unwrap_or_else(|| default_report(&args.output)),
        &report,
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NoiseReport {
    pub corrupted_fraction: f64,
    pub psnr: Option<f64>,
}

pub fn cmd_add_noise(args: &AddNoiseArgs) -> Result<NoiseReport> {
    let clean = read_image(&args.input, args.gray)?;
    let (noisy, masks) = corrupt_image(&clean, &args.noise, args.seed)?;
    write_image(&args.output, &noisy)?;
    if let Some(p) = &args.mask_output {
        // a pixel counts as corrupted if any channel was hit
        let mut any = masks[0].clone();
        for m in &masks[1..] {
            any.zip_mut_with(m, |a, b| *a = a.max(*b));
        }
        write_image(p, &Image::gray(any))?;
    }
    let hits: f64 = masks
        .iter()
        .map(|m| m.iter().filter(|v| **v > 0.0).count() as f64)
        .sum();
    let total = masks.iter().map(|m| m.len()).sum::<usize>() as f64;
    let (psnr, _) = image_scores(&noisy, &clean, false)?;
    Ok(NoiseReport {
        corrupted_fraction: hits / total,
        psnr: finite(psnr),
    })
}

pub fn cmd_synth<W: Write>(args: &SynthArgs, out: W) -> Result<()> {
    let cells = run_synth(&args.config())?;
    write_synth_csv(out, &cells)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AnalyzeReport {
    pub m: usize,
    pub n: usize,
    pub coherence: f64,
    /// `(max|D_m|·max|D_n|)` from the closed form.
    pub coherence_closed_form: f64,
    pub bound: f64,
    pub k1: usize,
    pub k2: usize,
    pub satisfied: bool,
    pub brute_force: Option<BruteForceReport>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BruteForceReport {
    pub length: usize,
    pub bound_1d: f64,
    pub planted_support_x: Vec<usize>,
    pub planted_support_n: Vec<usize>,
    pub solutions: usize,
    pub min_sparsity: Option<usize>,
    pub unique: bool,
    pub planted_found: bool,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalyzeReport> {
    ensure!(args.m >= 1, "--m must be positive");
    let n = args.n.unwrap_or(args.m);
    ensure!(n >= 1, "--n must be positive");
    let plan = Plan::new(args.m, n)?;
    let u = check_uniqueness(args.m, n, args.k1, args.k2, &plan)?;
    let closed = (dct_infnorm_squared::<f64>(args.m) * dct_infnorm_squared::<f64>(n)).sqrt();

    let brute_force = if args.brute_force {
        let len = args.m;
        let pair = gen_synthetic_pair::<f64>(
            len,
            1,
            args.k1 as f64 / len as f64,
            args.k2 as f64 / len as f64,
            1.0,
            args.seed,
        )?;
        let support = |m: &Matrix| -> Vec<usize> {
            m.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, _)| i)
                .collect()
        };
        let (sx, sn) = (support(&pair.x0), support(&pair.n0));
        let plan1 = Plan::new_1d(len)?;
        let k_max = args.k_max.unwrap_or((args.k1 + args.k2).max(1));
        let solutions = brute_force_sparsest(&pair.y, &plan1, k_max, None)?;
        Some(BruteForceReport {
            length: len,
            bound_1d: check_uniqueness(len, 1, args.k1, args.k2, &plan1)?.bound,
            planted_found: solutions
                .iter()
                .any(|s| s.support_x == sx && s.support_n == sn),
            planted_support_x: sx,
            planted_support_n: sn,
            unique: solutions.len() == 1,
            min_sparsity: solutions.first().map(|s| s.sparsity()),
            solutions: solutions.len(),
        })
    } else {
        None
    };

    Ok(AnalyzeReport {
        m: args.m,
        n,
        coherence: u.coherence,
        coherence_closed_form: closed,
        bound: u.bound,
        k1: args.k1,
        k2: args.k2,
        satisfied: u.satisfied,
        brute_force,
    })
}

/// Plain-text rendering of an analysis report.
pub fn render_analyze(r: &AnalyzeReport) -> String {
    let mut s = format!(
        "size: {}x{}\ncoherence: {:.12}\ncoherence (closed form): {:.12}\nbound: {:.6}\nk1 + k2 = {} < bound: {}\n",
        r.m,
        r.n,
        r.coherence,
        r.coherence_closed_form,
        r.bound,
        r.k1 + r.k2,
        r.satisfied
    );
    if let Some(b) = &r.brute_force {
        s += &format!(
            "brute force (length {}, bound {:.4}): planted x {:?}, n {:?}\nsolutions: {}\nunique: {}\nplanted found: {}\n",
            b.length, b.bound_1d, b.planted_support_x, b.planted_support_n, b.solutions, b.unique, b.planted_found
        );
    }
    s
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BaselineReport {
    pub filter: String,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub wall_time_s: f64,
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<BaselineReport> {
    let input = read_image(&args.input, args.gray)?;
    let (noisy, reference) = match &args.noise {
        Some(noise) => (corrupt_image(&input, noise, args.seed)?.0, Some(input)),
        None => (
            input,
            args.reference
                .as_ref()
                .map(|p| read_image(p, args.gray))
                .transpose()?,
        ),
    };
    let start = Instant::now();
    let out = noisy.map_channels(|y| match args.filter {
        FilterArg::Amf => Ok(amf(y, args.max_window)?),
        FilterArg::Acwmf => Ok(acwmf(y)),
    })?;
    let wall = start.elapsed().as_secs_f64();
    write_image(&args.output, &out)?;
    let (psnr, ssim) = match &reference {
        Some(r) => {
            let (p, s) = image_scores(&out, r, false)?;
            (finite(p), Some(s))
        }
        None => (None, None),
    };
    let report = BaselineReport {
        filter: format!("{:?}", args.filter).to_lowercase(),
        psnr,
        ssim,
        wall_time_s: wall,
    };
    if let Some(p) = &args.report {
        write_json(p, &report)?;
    }
    Ok(report)
}

/// Dispatches a parsed command line, printing summaries to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DenoiseImage(a) => {
            let r = cmd_denoise_image(&a)?;
            println!("{}", serde_json::to_string(&r)?);
        }
        Command::DenoiseAudio(a) => {
            let r = cmd_denoise_audio(&a)?;
            println!("{}", serde_json::to_string(&r)?);
        }
        Command::AddNoise(a) => {
            let r = cmd_add_noise(&a)?;
            println!("{}", serde_json::to_string(&r)?);
        }
        Command::Synth(a) => match &a.output {
            Some(p) => {
                let f = File::create(p).with_context(|| format!("writing {}", p.display()))?;
                cmd_synth(&a, BufWriter::new(f))?;
            }
            None => cmd_synth(&a, std::io::stdout().lock())?,
        },
        Command::Analyze(a) => {
            let r = cmd_analyze(&a)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                print!("{}", render_analyze(&r));
            }
        }
        Command::Baseline(a) => {
            let r = cmd_baseline(&a)?;
            println!("{}", serde_json::to_string(&r)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_arg_parsing() {
        let a: NoiseArg = "spn:0.5".parse().unwrap();
        assert_eq!((a.kind, a.density, a.second), (NoiseKind::Spn, 0.5, None));
        let m: NoiseArg = "mixed:0.25:0.15".parse().unwrap();
        assert_eq!(m.second, Some(0.15));
        assert!("mixed:0.2".parse::<NoiseArg>().is_err());
        assert!("gauss:0.1".parse::<NoiseArg>().is_err());
        assert!("rvin".parse::<NoiseArg>().is_err());
        assert!("rvin:x".parse::<NoiseArg>().is_err());
    }

    #[test]
    fn explicit_parameters_skip_estimation() {
        let cli = Cli::parse_from([
            "idt",
            "denoise-image",
            "-i",
            "a.pgm",
            "-o",
            "b.pgm",
            "--alpha1",
            "0.1",
            "--beta1",
            "100",
            "--alpha2",
            "0.05",
            "--beta2",
            "200",
            "--iters",
            "12",
        ]);
        let Command::DenoiseImage(a) = cli.command else {
            panic!()
        };
        let y = Matrix::zeros((4, 4));
        let cfg = a
            .solver
            .config(&y, &Plan::new(4, 4).unwrap(), NoiseKind::Spn)
            .unwrap();
        assert_eq!(
            (cfg.alpha1, cfg.beta1, cfg.alpha2, cfg.beta2),
            (0.1, 100.0, 0.05, 200.0)
        );
        assert_eq!(cfg.max_iters, 12);
        assert!(cfg.enable_clip && cfg.enable_filter);
    }

    #[test]
    fn analyze_unit_size() {
        let r = cmd_analyze(&AnalyzeArgs {
            m: 1,
            n: None,
            k1: 0,
            k2: 0,
            brute_force: false,
            k_max: None,
            seed: 0,
            json: false,
        })
        .unwrap();
        assert_eq!((r.coherence, r.bound), (1.0, 1.0));
    }
}
