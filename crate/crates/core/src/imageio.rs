//! PGM file I/O, synthetic test data, the PSNR metric and CSV output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::Image;

/// Peak signal-to-noise ratio in dB; identical images report the 999.0
/// sentinel instead of infinity.
pub fn psnr(x: &Image, y: &Image, peak: f64) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::argument("psnr operands must share a shape"));
    }
    if peak <= 0.0 {
        return Err(Error::argument("psnr peak must be positive"));
    }
    let mse = x.sub(y).norm_sq() / x.len() as f64;
    if mse == 0.0 {
        return Ok(999.0);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

// ---------------------------------------------------------------------------
// PGM (Netpbm P2/P5)
// ---------------------------------------------------------------------------

struct PgmParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> PgmParser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path, self.pos, msg)
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn parse_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(format!("invalid {what}")))
    }
}

/// Read an ASCII (P2) or binary (P5) PGM with maxval up to 65535.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_pgm(&bytes, &path.display().to_string())
}

pub fn parse_pgm(bytes: &[u8], path: &str) -> Result<Image> {
    let mut p = PgmParser {
        bytes,
        pos: 0,
        path,
    };
    if bytes.len() < 2 {
        return Err(p.err("file too short for a PGM header"));
    }
    let magic = &bytes[0..2];
    p.pos = 2;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(p.err("expected magic P2 or P5")),
    };
    let width = p.parse_uint("width")? as usize;
    let height = p.parse_uint("height")? as usize;
    let maxval = p.parse_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(p.err("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(p.err(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width * height;
    let mut data = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the payload
        if p.pos >= bytes.len() || !bytes[p.pos].is_ascii_whitespace() {
            return Err(p.err("expected single whitespace before binary payload"));
        }
        p.pos += 1;
        let per = if maxval > 255 { 2 } else { 1 };
        let need = count * per;
        let have = bytes.len() - p.pos;
        if have < need {
            p.pos = bytes.len();
            return Err(p.err(format!(
                "truncated payload: missing {} bytes",
                need - have
            )));
        }
        for i in 0..count {
            let v = if per == 1 {
                bytes[p.pos + i] as f64
            } else {
                let hi = bytes[p.pos + 2 * i] as u64;
                let lo = bytes[p.pos + 2 * i + 1] as u64;
                ((hi << 8) | lo) as f64
            };
            data.push(v);
        }
    } else {
        for _ in 0..count {
            let v = p.parse_uint("sample")?;
            if v > maxval {
                return Err(p.err(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64);
        }
    }
    Image::from_vec(width, height, data)
}

/// Write a binary (P5) PGM with maxval 255. Pixels are clamped to
/// [0, 255] and rounded half-up.
pub fn write_pgm(image: &Image, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(image.len() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", image.width(), image.height()).as_bytes());
    for &v in image.pixels() {
        out.push(v.clamp(0.0, 255.0).round() as u8);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// ASCII variant, useful for small fixtures and masks.
pub fn write_pgm_ascii(image: &Image, path: &Path) -> Result<()> {
    let mut text = format!("P2\n{} {}\n255\n", image.width(), image.height());
    for r in 0..image.height() {
        let mut line = String::new();
        for c in 0..image.width() {
            if c > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{}", image.get(r, c).clamp(0.0, 255.0).round() as u8);
        }
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Built-in synthetic test images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Piecewise-constant phantom of seeded disks and rectangles.
    Shapes,
    /// Diagonal intensity ramp.
    Ramp,
    /// Block checkerboard.
    Checker,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shapes" => Ok(SynthKind::Shapes),
            "ramp" => Ok(SynthKind::Ramp),
            "checker" => Ok(SynthKind::Checker),
            other => Err(Error::config(format!(
                "unknown synthetic image '{other}' (expected shapes, ramp or checker)"
            ))),
        }
    }
}

/// Deterministic synthetic image of the given kind; `size` must be a
/// power of two and at least 8.
pub fn synth_image(kind: SynthKind, size: usize, seed: u64) -> Result<Image> {
    if size < 8 || !size.is_power_of_two() {
        return Err(Error::argument(format!(
            "size {size} must be a power of two >= 8"
        )));
    }
    Ok(match kind {
        SynthKind::Ramp => {
            let denom = (2 * (size - 1)) as f64;
            Image::from_fn(size, size, |r, c| 255.0 * (r + c) as f64 / denom)
        }
        SynthKind::Checker => {
            let block = (size / 8).max(1);
            Image::from_fn(size, size, |r, c| {
                if (r / block + c / block) % 2 == 0 {
                    0.0
                } else {
                    255.0
                }
            })
        }
        SynthKind::Shapes => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut img = Image::from_fn(size, size, |_, _| 20.0);
            let s = size as f64;
            for _ in 0..3 {
                let r0 = rng.gen_range(0.05..0.6) * s;
                let c0 = rng.gen_range(0.05..0.6) * s;
                let dr = rng.gen_range(0.1..0.35) * s;
                let dc = rng.gen_range(0.1..0.35) * s;
                let val = rng.gen_range(60.0..230.0);
                for r in 0..size {
                    for c in 0..size {
                        if (r as f64) >= r0
                            && (r as f64) < r0 + dr
                            && (c as f64) >= c0
                            && (c as f64) < c0 + dc
                        {
                            img.set(r, c, val);
                        }
                    }
                }
            }
            for _ in 0..3 {
                let r0 = rng.gen_range(0.15..0.85) * s;
                let c0 = rng.gen_range(0.15..0.85) * s;
                let rad = rng.gen_range(0.06..0.22) * s;
                let val = rng.gen_range(60.0..230.0);
                for r in 0..size {
                    for c in 0..size {
                        let d2 = (r as f64 - r0).powi(2) + (c as f64 - c0).powi(2);
                        if d2 <= rad * rad {
                            img.set(r, c, val);
                        }
                    }
                }
            }
            img
        }
    })
}

/// Add white Gaussian noise of standard deviation `sigma`, seeded.
pub fn add_gaussian_noise(image: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if sigma < 0.0 {
        return Err(Error::argument("noise level must be nonnegative"));
    }
    if sigma == 0.0 {
        return Ok(image.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::argument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = image.clone();
    for v in out.pixels_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Write a CSV file: comma separators, '.' decimals, LF line endings,
/// header row first.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    w.write_all(header.join(",").as_bytes()).map_err(io_err)?;
    w.write_all(b"\n").map_err(io_err)?;
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        w.write_all(fields.join(",").as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_basics() {
        let x = synth_image(SynthKind::Ramp, 16, 0).unwrap();
        assert_eq!(psnr(&x, &x, 255.0).unwrap(), 999.0);
        let y = x.map(|v| v + 1.0);
        let got = psnr(&x, &y, 255.0).unwrap();
        assert!((got - 20.0 * 255f64.log10()).abs() < 1e-9, "{got}");
        // symmetric
        assert_eq!(got, psnr(&y, &x, 255.0).unwrap());
    }

    #[test]
    fn psnr_checker_inversion_is_zero_db() {
        let x = synth_image(SynthKind::Checker, 16, 0).unwrap();
        let y = x.map(|v| 255.0 - v);
        assert!(psnr(&x, &y, 255.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pgm_ascii_example() {
        let img = parse_pgm(b"P2 2 2 255 0 128 255 64", "inline").unwrap();
        assert_eq!(img.pixels(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = std::env::temp_dir();
        let path = dir.join("wframe_io_test.pgm");
        let img = synth_image(SynthKind::Shapes, 64, 3).unwrap();
        write_pgm(&img, &path).unwrap();
        let back = read_pgm(&path).unwrap();
        assert!(back.sub(&img.map(|v| v.round())).norm_inf() < 1e-12);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn pgm_sixteen_bit_payload() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0x01, 0x00, 0x00, 0xff]);
        let img = parse_pgm(&bytes, "inline").unwrap();
        assert_eq!(img.pixels(), &[256.0, 255.0]);
    }

    #[test]
    fn truncated_binary_reports_missing_bytes() {
        let mut bytes = b"P5 4 4 255\n".to_vec();
        bytes.extend_from_slice(&[7u8; 10]); // 6 bytes short
        let err = parse_pgm(&bytes, "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing 6 bytes"), "{msg}");
    }

    #[test]
    fn malformed_headers_rejected() {
        assert!(parse_pgm(b"P6 2 2 255 aaaa", "inline").is_err());
        assert!(parse_pgm(b"P2 2 2 99999 1 2 3 4", "inline").is_err());
        assert!(parse_pgm(b"P2 2 2 255 1 2 300 4", "inline").is_err());
    }

    #[test]
    fn synth_rejects_bad_sizes() {
        assert!(synth_image(SynthKind::Shapes, 7, 0).is_err());
        assert!(synth_image(SynthKind::Shapes, 24, 0).is_err());
    }

    #[test]
    fn noise_is_seeded_and_calibrated() {
        let img = Image::zeros(1000, 1000);
        let a = add_gaussian_noise(&img, 5.0, 42).unwrap();
        let b = add_gaussian_noise(&img, 5.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(add_gaussian_noise(&img, 0.0, 1).unwrap(), img);

        let n = a.len() as f64;
        let mean: f64 = a.pixels().iter().sum::<f64>() / n;
        let var: f64 = a.pixels().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var.sqrt() - 5.0).abs() / 5.0 < 0.01, "sd {}", var.sqrt());
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let img = synth_image(SynthKind::Shapes, 64, 9).unwrap();
        let mut last = f64::INFINITY;
        for (i, sigma) in [1.0, 5.0, 10.0, 20.0].iter().enumerate() {
            let noisy = add_gaussian_noise(&img, *sigma, 100 + i as u64).unwrap();
            let p = psnr(&img, &noisy, 255.0).unwrap();
            assert!(p < last, "sigma {sigma}: {p} !< {last}");
            last = p;
        }
    }
}
