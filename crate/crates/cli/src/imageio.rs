//! Binary PPM (P6) and PGM (P5) images with 8-bit samples, and multispectral
//! stacks stored as one PGM per band plus a manifest listing the band files.
//!
//! Samples are held as `f64` in `[0, 1]`; writing rounds to the nearest level
//! after clamping.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels.
    pub pixels: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

/// Co-registered bands of equal size.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStack {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Vec<f64>>,
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Parses a netpbm header, returning `(width, height, maxval, data offset)`.
fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<(usize, usize, usize, usize)> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        bail!("expected a {} file", String::from_utf8_lossy(magic));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => bail!("truncated header"),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            bail!("malformed header");
        }
        *field = std::str::from_utf8(&bytes[start..pos])?.parse()?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        bail!("malformed header");
    }
    let [w, h, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        bail!("only 8-bit images are supported (maxval {maxval})");
    }
    Ok((w, h, maxval, pos + 1))
}

fn read_samples(path: &Path, magic: &[u8; 2], channels: usize) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (w, h, maxval, offset) = parse_header(&bytes, magic).with_context(|| format!("in {}", path.display()))?;
    let need = w * h * channels;
    let data = bytes.get(offset..offset + need).with_context(|| format!("{} is truncated", path.display()))?;
    Ok((w, h, data.iter().map(|&b| b as f64 / maxval as f64).collect()))
}

impl RgbImage {
    pub fn read(path: &Path) -> Result<Self> {
        let (width, height, s) = read_samples(path, b"P6", 3)?;
        let pixels = s.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(RgbImage { width, height, pixels })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().flat_map(|p| p.map(to_byte)));
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, &self.to_bytes())
    }
}

impl GrayImage {
    pub fn read(path: &Path) -> Result<Self> {
        let (width, height, pixels) = read_samples(path, b"P5", 1)?;
        Ok(GrayImage { width, height, pixels })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|&v| to_byte(v)));
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, &self.to_bytes())
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

impl BandStack {
    /// Reads a manifest: one band file name per line, relative to the
    /// manifest, in band order. Blank lines and `#` comments are skipped.
    pub fn read(manifest: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
        let dir = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut bands = Vec::new();
        let mut size = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let img = GrayImage::read(&dir.join(line))?;
            match size {
                None => size = Some((img.width, img.height)),
                Some(s) if s != (img.width, img.height) => {
                    bail!("band {line} is {}x{}, expected {}x{}", img.width, img.height, s.0, s.1)
                }
                Some(_) => {}
            }
            bands.push(img.pixels);
        }
        let (width, height) = size.with_context(|| format!("{} lists no bands", manifest.display()))?;
        Ok(BandStack { width, height, bands })
    }

    /// Writes `<stem>_<b>.pgm` for every band and `<stem>.txt` listing them; returns the manifest path.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let mut manifest = String::from("# band order\n");
        for (b, band) in self.bands.iter().enumerate() {
            let name = format!("{stem}_{b}.pgm");
            GrayImage {
                width: self.width,
                height: self.height,
                pixels: band.clone(),
            }
            .write(&dir.join(&name))?;
            manifest.push_str(&name);
            manifest.push('\n');
        }
        let path = dir.join(format!("{stem}.txt"));
        write_bytes(&path, manifest.as_bytes())?;
        Ok(path)
    }

    /// Per-pixel band vectors; requires exactly eight bands.
    pub fn octets(&self) -> Result<Vec<[f64; 8]>> {
        if self.bands.len() != 8 {
            bail!("expected 8 bands, found {}", self.bands.len());
        }
        Ok((0..self.width * self.height)
            .map(|p| std::array::from_fn(|b| self.bands[b][p]))
            .collect())
    }

    pub fn from_octets(width: usize, height: usize, pixels: &[[f64; 8]]) -> Self {
        BandStack {
            width,
            height,
            bands: (0..8).map(|b| pixels.iter().map(|p| p[b]).collect()).collect(),
        }
    }
}

/// Quantizes to 8 bits and back, the precision images are stored at.
pub fn quantize(v: f64) -> f64 {
    to_byte(v) as f64 / 255.0
}
