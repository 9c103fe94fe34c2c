use std::f64::consts::PI;
use std::path::Path;

use clap::Parser;
use idt_cli::commands::*;
use idt_cli::io::{read_image, read_wav, write_image, write_wav, Audio, Image};
use idt_cli::Cli;
use idt_core::metrics::snr;
use idt_core::noise::smooth_test_image;
use ndarray::Array2;
use tempfile::tempdir;

fn parse(args: &[&str]) -> Command {
    let mut full = vec!["idt"];
    full.extend_from_slice(args);
    Cli::try_parse_from(full).expect("arguments parse").command
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn smooth_png(dir: &Path, size: usize) -> std::path::PathBuf {
    let path = dir.join("clean.png");
    let img = smooth_test_image::<f64>(size, size, 4).mapv(|v| v.round());
    write_image(&path, &Image::gray(img)).unwrap();
    path
}

#[test]
fn denoise_image_improves_and_traces() {
    let dir = tempdir().unwrap();
    let clean = smooth_png(dir.path(), 64);
    let (out, trace, noisy) = (
        dir.path().join("out.png"),
        dir.path().join("t.csv"),
        dir.path().join("noisy.png"),
    );
    let Command::DenoiseImage(args) = parse(&[
        "denoise-image",
        "-i",
        p(&clean),
        "-o",
        p(&out),
        "--noise",
        "spn:0.5",
        "--seed",
        "3",
        "--trace",
        p(&trace),
        "--noisy-output",
        p(&noisy),
        "--iters",
        "40",
    ]) else {
        unreachable!()
    };
    let r = cmd_denoise_image(&args).unwrap();
    let (psnr, noisy_psnr) = (r.psnr.unwrap(), r.noisy_psnr.unwrap());
    assert!(psnr > noisy_psnr + 10.0, "{noisy_psnr} -> {psnr}");
    assert!(r.ssim.unwrap() > 0.5);
    assert_eq!(read_image(&out, false).unwrap().dim(), (64, 64));
    assert!(dir.path().join("out.json").exists());

    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,threshold1,threshold2,residual,psnr"
    );
    assert_eq!(lines.count(), r.iterations);

    // the written noisy image reproduces the seeded corruption
    let Command::DenoiseImage(again) = parse(&[
        "denoise-image",
        "-i",
        p(&noisy),
        "-o",
        p(&dir.path().join("o2.png")),
        "--reference",
        p(&clean),
        "--kind",
        "spn",
        "--iters",
        "40",
    ]) else {
        unreachable!()
    };
    let r2 = cmd_denoise_image(&again).unwrap();
    assert!((r2.noisy_psnr.unwrap() - noisy_psnr).abs() < 1e-9);
    assert!((r2.psnr.unwrap() - psnr).abs() < 0.5);
}

#[test]
fn explicit_parameters_are_honoured() {
    let dir = tempdir().unwrap();
    let clean = smooth_png(dir.path(), 32);
    let Command::DenoiseImage(args) = parse(&[
        "denoise-image",
        "-i",
        p(&clean),
        "-o",
        p(&dir.path().join("o.png")),
        "--noise",
        "spn:0.2",
        "--alpha1",
        "0.05",
        "--beta1",
        "2000",
        "--alpha2",
        "0.05",
        "--beta2",
        "255",
        "--iters",
        "10",
    ]) else {
        unreachable!()
    };
    let r = cmd_denoise_image(&args).unwrap();
    let c = &r.channels[0];
    assert_eq!(c.iterations, r.iterations);
    assert!(r.iterations <= 10);
}

#[test]
fn color_channels_are_restored_independently() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("rgb.png");
    let planes = (0..3)
        .map(|s| smooth_test_image::<f64>(32, 32, s).mapv(|v| v.round()))
        .collect();
    write_image(&path, &Image { channels: planes }).unwrap();
    let Command::DenoiseImage(args) = parse(&[
        "denoise-image",
        "-i",
        p(&path),
        "-o",
        p(&dir.path().join("o.png")),
        "--noise",
        "spn:0.3",
        "--iters",
        "30",
    ]) else {
        unreachable!()
    };
    let r = cmd_denoise_image(&args).unwrap();
    assert_eq!(r.channels.len(), 3);
    assert!(r.psnr.unwrap() > r.noisy_psnr.unwrap());
    assert!(write_image(
        &dir.path().join("x.pgm"),
        &read_image(&path, false).unwrap()
    )
    .is_err());
}

#[test]
fn add_noise_and_baseline() {
    let dir = tempdir().unwrap();
    let clean = smooth_png(dir.path(), 48);
    let (noisy, mask) = (dir.path().join("n.pgm"), dir.path().join("m.pgm"));
    let Command::AddNoise(args) = parse(&[
        "add-noise",
        "-i",
        p(&clean),
        "-o",
        p(&noisy),
        "--noise",
        "rvin:0.2",
        "--seed",
        "9",
        "--mask-output",
        p(&mask),
    ]) else {
        unreachable!()
    };
    let r = cmd_add_noise(&args).unwrap();
    assert!((r.corrupted_fraction - 0.2).abs() < 0.05);
    let m = read_image(&mask, true).unwrap();
    let marked = m.channels[0].iter().filter(|v| **v > 0.0).count() as f64 / (48.0 * 48.0);
    assert!((marked - r.corrupted_fraction).abs() < 1e-12);

    for filter in ["amf", "acwmf"] {
        let Command::Baseline(b) = parse(&[
            "baseline",
            "-i",
            p(&noisy),
            "-o",
            p(&dir.path().join("b.png")),
            "--filter",
            filter,
            "--reference",
            p(&clean),
        ]) else {
            unreachable!()
        };
        let br = cmd_baseline(&b).unwrap();
        assert!(br.psnr.unwrap() > r.psnr.unwrap(), "{filter}");
    }
}

#[test]
fn synth_csv_shape() {
    let Command::Synth(args) = parse(&[
        "synth", "--size", "16", "--rho-x", "0,0.1", "--rho-n", "0", "--trials", "2",
    ]) else {
        unreachable!()
    };
    let mut buf = Vec::new();
    cmd_synth(&args, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "rho_x,rho_n,mean_snr_db,success_rate");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.0,0.0,inf,"), "{}", lines[1]);
    assert!(lines[2].starts_with("0.1,0.0,"));
}

#[test]
fn analyze_reports() {
    let Command::Analyze(a) = parse(&["analyze", "--m", "8", "--brute-force", "--k1", "1"]) else {
        unreachable!()
    };
    let r = cmd_analyze(&a).unwrap();
    let bf = r.brute_force.as_ref().unwrap();
    assert!(bf.unique && bf.planted_found);
    assert!(render_analyze(&r).contains("unique: true"));

    let Command::Analyze(one) = parse(&["analyze", "--m", "1"]) else {
        unreachable!()
    };
    let r1 = cmd_analyze(&one).unwrap();
    assert_eq!((r1.coherence, r1.bound), (1.0, 1.0));

    let Command::Analyze(big) = parse(&["analyze", "--m", "256"]) else {
        unreachable!()
    };
    let rb = cmd_analyze(&big).unwrap();
    assert!((rb.coherence - rb.coherence_closed_form).abs() < 1e-12);
    assert!((rb.bound - 0.5 * (1.0 + 1.0 / rb.coherence)).abs() < 1e-12);
}

fn tone(len: usize, rate: u32) -> Array2<f64> {
    Array2::from_shape_fn((len, 1), |(i, _)| {
        0.4 * (2.0 * PI * 440.0 * i as f64 / rate as f64).sin()
    })
}

#[test]
fn audio_clicks_are_removed_and_silence_is_kept() {
    let dir = tempdir().unwrap();
    let (clean, out) = (dir.path().join("c.wav"), dir.path().join("o.wav"));
    write_wav(
        &clean,
        &Audio {
            sample_rate: 8000,
            channels: vec![tone(8192, 8000)],
        },
    )
    .unwrap();
    let Command::DenoiseAudio(args) = parse(&[
        "denoise-audio",
        "-i",
        p(&clean),
        "-o",
        p(&out),
        "--noise",
        "spn:0.01",
        "--seed",
        "2",
        "--frame",
        "2048",
    ]) else {
        unreachable!()
    };
    let r = cmd_denoise_audio(&args).unwrap();
    assert_eq!(r.frames, 4);
    assert!(r.snr_out.unwrap() >= r.snr_in.unwrap() + 5.0, "{r:?}");
    let restored = read_wav(&out).unwrap();
    let reference = read_wav(&clean).unwrap();
    assert!(
        (snr(&restored.channels[0], &reference.channels[0]).unwrap() - r.snr_out.unwrap()).abs()
            < 1.0
    );

    let silent = dir.path().join("s.wav");
    write_wav(
        &silent,
        &Audio {
            sample_rate: 8000,
            channels: vec![Array2::zeros((3000, 1)); 2],
        },
    )
    .unwrap();
    let Command::DenoiseAudio(s) = parse(&["denoise-audio", "-i", p(&silent), "-o", p(&out)])
    else {
        unreachable!()
    };
    cmd_denoise_audio(&s).unwrap();
    let back = read_wav(&out).unwrap();
    assert_eq!(back.channels.len(), 2);
    assert!(back
        .channels
        .iter()
        .all(|c| c.len() == 3000 && c.iter().all(|v| *v == 0.0)));
}

#[test]
fn file_round_trips() {
    let dir = tempdir().unwrap();
    let img = Array2::from_shape_fn((5, 7), |(i, j)| ((i * 37 + j * 11) % 256) as f64);
    for ext in ["pgm", "png"] {
        let path = dir.path().join(format!("g.{ext}"));
        write_image(&path, &Image::gray(img.clone())).unwrap();
        assert_eq!(read_image(&path, false).unwrap().channels[0], img);
    }
    let wav = dir.path().join("a.wav");
    let samples = Array2::from_shape_fn((100, 1), |(i, _)| (i as f64 - 50.0) / 64.0);
    write_wav(
        &wav,
        &Audio {
            sample_rate: 44100,
            channels: vec![samples.clone()],
        },
    )
    .unwrap();
    let back = read_wav(&wav).unwrap();
    assert_eq!(back.sample_rate, 44100);
    assert_eq!(back.channels[0], samples);

    let bogus = dir.path().join("x.bmp");
    std::fs::write(&bogus, b"not an image").unwrap();
    assert!(read_image(&bogus, false).is_err());
    assert!(read_wav(&bogus).is_err());
    assert!(write_image(&dir.path().join("x.tiff"), &Image::gray(img)).is_err());
}
