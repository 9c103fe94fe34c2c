//! Image and audio files to and from `f64` matrices.
//!
//! Images are 8-bit gray or RGB (binary PGM/PPM or PNG), one matrix per
//! channel, values in `[0, 255]`. Audio is 16-bit PCM WAV, one `len×1`
//! matrix per channel, samples scaled to `[−1, 1)`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use idt_core::Matrix;
use image::{ColorType, DynamicImage, GrayImage, ImageFormat, RgbImage};
use ndarray::Array2;

/// ITU-R BT.601 luma weights.
pub const BT601: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    /// One plane for gray, three for RGB.
    pub channels: Vec<Matrix>,
}

impl Image {
    pub fn gray(plane: Matrix) -> Self {
        Self {
            channels: vec![plane],
        }
    }

    pub fn is_color(&self) -> bool {
        self.channels.len() == 3
    }

    pub fn dim(&self) -> (usize, usize) {
        self.channels[0].dim()
    }

    /// BT.601 luma of a color image; gray images are returned as is.
    pub fn to_gray(&self) -> Self {
        if !self.is_color() {
            return self.clone();
        }
        let mut luma = Array2::zeros(self.dim());
        for (plane, w) in self.channels.iter().zip(BT601) {
            luma.scaled_add(w, plane);
        }
        Self::gray(luma)
    }

    pub fn map_channels<F>(&self, f: F) -> Result<Self>
    where
        F: FnMut(&Matrix) -> Result<Matrix>,
    {
        Ok(Self {
            channels: self.channels.iter().map(f).collect::<Result<_>>()?,
        })
    }
}

/// Round half to even, then clamp to `[0, 255]`.
pub fn to_u8(v: f64) -> u8 {
    v.round_ties_even().clamp(0.0, 255.0) as u8
}

/// Reads an 8-bit gray or RGB image. Alpha is dropped. With `gray`, color
/// input is reduced to BT.601 luma.
pub fn read_image(path: &Path, gray: bool) -> Result<Image> {
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?;
    let image = match img.color() {
        ColorType::L8 | ColorType::La8 => {
            let g = img.to_luma8();
            let (w, h) = g.dimensions();
            Image::gray(Array2::from_shape_fn((h as usize, w as usize), |(i, j)| {
                g.get_pixel(j as u32, i as u32)[0] as f64
            }))
        }
        ColorType::Rgb8 | ColorType::Rgba8 => {
            let rgb = img.to_rgb8();
            let (w, h) = rgb.dimensions();
            let channels = (0..3)
                .map(|c| {
                    Array2::from_shape_fn((h as usize, w as usize), |(i, j)| {
                        rgb.get_pixel(j as u32, i as u32)[c] as f64
                    })
                })
                .collect();
            Image { channels }
        }
        other => bail!(
            "{}: unsupported pixel format {other:?}, need 8-bit gray or RGB",
            path.display()
        ),
    };
    Ok(if gray { image.to_gray() } else { image })
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "pgm" | "ppm" | "pnm" => Ok(ImageFormat::Pnm),
        _ => bail!("{}: output must be .png, .pgm or .ppm", path.display()),
    }
}

/// Writes an image, re-quantized to 8 bits. PGM output of a color image
/// is refused.
pub fn write_image(path: &Path, image: &Image) -> Result<()> {
    let format = format_for(path)?;
    let (h, w) = image.dim();
    let (w32, h32) = (w as u32, h as u32);
    let dynamic = if image.is_color() {
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        {
            bail!("{}: cannot store a color image as PGM", path.display());
        }
        DynamicImage::ImageRgb8(RgbImage::from_fn(w32, h32, |x, y| {
            let (i, j) = (y as usize, x as usize);
            image::Rgb([0, 1, 2].map(|c| to_u8(image.channels[c][[i, j]])))
        }))
    } else {
        DynamicImage::ImageLuma8(GrayImage::from_fn(w32, h32, |x, y| {
            image::Luma([to_u8(image.channels[0][[y as usize, x as usize]])])
        }))
    };
    dynamic
        .save_with_format(path, format)
        .with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub sample_rate: u32,
    /// One `len×1` column per channel.
    pub channels: Vec<Matrix>,
}

const PCM16_SCALE: f64 = 32768.0;

/// Reads 16-bit PCM WAV, mono or multichannel.
pub fn read_wav(path: &Path) -> Result<Audio> {
    let mut reader =
        hound::WavReader::open(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        bail!(
            "{}: unsupported WAV encoding ({:?}, {} bits), need 16-bit PCM",
            path.display(),
            spec.sample_format,
            spec.bits_per_sample
        );
    }
    let ch = spec.channels as usize;
    let samples = reader
        .samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let frames = samples.len() / ch;
    let channels = (0..ch)
        .map(|c| {
            Array2::from_shape_fn((frames, 1), |(i, _)| {
                samples[i * ch + c] as f64 / PCM16_SCALE
            })
        })
        .collect();
    Ok(Audio {
        sample_rate: spec.sample_rate,
        channels,
    })
}

pub fn write_wav(path: &Path, audio: &Audio) -> Result<()> {
    let spec = hound::WavSpec {
        channels: audio.channels.len() as u16,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .with_context(|| format!("writing {}", path.display()))?;
    let frames = audio.channels.first().map_or(0, |c| c.nrows());
    for i in 0..frames {
        for c in &audio.channels {
            let v = (c[[i, 0]] * PCM16_SCALE)
                .round_ties_even()
                .clamp(-32768.0, 32767.0);
            writer.write_sample(v as i16)?;
        }
    }
    writer.finalize()?;
    Ok(())
}
