//! Degradation operators A (identity, periodic blur, inpainting mask)
//! with adjoints and fast normal-equation solves for the restoration
//! solver's quadratic subproblem.

use std::cell::RefCell;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::framelet::filter::Filter2D;
use crate::image::Image;

/// What the operator does to an image.
#[derive(Debug, Clone)]
pub enum OpKind {
    Identity,
    /// Periodic convolution with a kernel.
    Blur(Filter2D),
    /// Pointwise multiplication with a 0/1 indicator (true = observed).
    Mask(Vec<bool>),
}

/// A degradation operator pinned to a target image shape.
#[derive(Debug, Clone)]
pub struct DegradationOp {
    kind: OpKind,
    width: usize,
    height: usize,
    /// |khat|^2 on the DFT grid, precomputed for blur kernels.
    power_spectrum: Option<Vec<f64>>,
}

impl DegradationOp {
    pub fn identity(width: usize, height: usize) -> Self {
        DegradationOp {
            kind: OpKind::Identity,
            width,
            height,
            power_spectrum: None,
        }
    }

    pub fn blur(kernel: Filter2D, width: usize, height: usize) -> Result<Self> {
        if kernel.rows() > height || kernel.cols() > width {
            return Err(Error::argument("blur kernel larger than image"));
        }
        let spectrum = kernel_power_spectrum(&kernel, width, height);
        Ok(DegradationOp {
            kind: OpKind::Blur(kernel),
            width,
            height,
            power_spectrum: Some(spectrum),
        })
    }

    pub fn mask(indicator: Vec<bool>, width: usize, height: usize) -> Result<Self> {
        if indicator.len() != width * height {
            return Err(Error::argument("mask shape must equal image shape"));
        }
        Ok(DegradationOp {
            kind: OpKind::Mask(indicator),
            width,
            height,
            power_spectrum: None,
        })
    }

    /// Build a mask operator from an image: zero pixels are missing.
    pub fn mask_from_image(img: &Image) -> Result<Self> {
        let indicator = img.pixels().iter().map(|&v| v > 0.0).collect();
        Self::mask(indicator, img.width(), img.height())
    }

    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn check_shape(&self, u: &Image) -> Result<()> {
        if u.width() != self.width || u.height() != self.height {
            return Err(Error::argument(format!(
                "operator is {}x{} but image is {}x{}",
                self.width,
                self.height,
                u.width(),
                u.height()
            )));
        }
        Ok(())
    }

    /// Forward action A u.
    pub fn apply(&self, u: &Image) -> Result<Image> {
        self.check_shape(u)?;
        Ok(match &self.kind {
            OpKind::Identity => u.clone(),
            OpKind::Blur(k) => k.convolve(u, 1),
            OpKind::Mask(ind) => mask_multiply(u, ind),
        })
    }

    /// Adjoint action A^T y. Identity and mask are self-adjoint; the blur
    /// adjoint is correlation with the same kernel.
    pub fn adjoint(&self, y: &Image) -> Result<Image> {
        self.check_shape(y)?;
        Ok(match &self.kind {
            OpKind::Identity => y.clone(),
            OpKind::Blur(k) => k.correlate(y, 1),
            OpKind::Mask(ind) => mask_multiply(y, ind),
        })
    }

    /// Solve (A^T A + mu I) x = rhs exactly. Diagonal for identity and
    /// mask; solved in the Fourier domain for blur, where periodic
    /// convolution diagonalizes.
    pub fn normal_solve(&self, mu: f64, rhs: &Image) -> Result<Image> {
        if mu <= 0.0 {
            return Err(Error::argument("normal solve requires mu > 0"));
        }
        self.check_shape(rhs)?;
        Ok(match &self.kind {
            OpKind::Identity => rhs.scale(1.0 / (1.0 + mu)),
            OpKind::Mask(ind) => {
                let mut out = rhs.clone();
                for (v, &keep) in out.pixels_mut().iter_mut().zip(ind) {
                    *v /= if keep { 1.0 + mu } else { mu };
                }
                out
            }
            OpKind::Blur(_) => {
                let spectrum = self.power_spectrum.as_ref().expect("blur spectrum");
                let mut freq: Vec<Complex<f64>> = rhs
                    .pixels()
                    .iter()
                    .map(|&v| Complex::new(v, 0.0))
                    .collect();
                fft2(&mut freq, self.width, self.height, false);
                for (f, &p) in freq.iter_mut().zip(spectrum) {
                    *f /= p + mu;
                }
                fft2(&mut freq, self.width, self.height, true);
                let scale = 1.0 / (self.width * self.height) as f64;
                Image::from_vec(
                    self.width,
                    self.height,
                    freq.iter().map(|c| c.re * scale).collect(),
                )?
            }
        })
    }
}

fn mask_multiply(u: &Image, ind: &[bool]) -> Image {
    let mut out = u.clone();
    for (v, &keep) in out.pixels_mut().iter_mut().zip(ind) {
        if !keep {
            *v = 0.0;
        }
    }
    out
}

fn kernel_power_spectrum(kernel: &Filter2D, width: usize, height: usize) -> Vec<f64> {
    let mut grid = vec![Complex::new(0.0, 0.0); width * height];
    for (k0, k1, v) in kernel.taps() {
        let r = k0.rem_euclid(height as i64) as usize;
        let c = k1.rem_euclid(width as i64) as usize;
        grid[r * width + c] += Complex::new(v, 0.0);
    }
    fft2(&mut grid, width, height, false);
    grid.iter().map(|c| c.norm_sqr()).collect()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place 2-D FFT (unnormalized inverse when `inverse` is set).
fn fft2(data: &mut [Complex<f64>], width: usize, height: usize, inverse: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let row_fft = if inverse {
            planner.plan_fft_inverse(width)
        } else {
            planner.plan_fft_forward(width)
        };
        let col_fft = if inverse {
            planner.plan_fft_inverse(height)
        } else {
            planner.plan_fft_forward(height)
        };
        for row in data.chunks_exact_mut(width) {
            row_fft.process(row);
        }
        let mut column = vec![Complex::new(0.0, 0.0); height];
        for c in 0..width {
            for r in 0..height {
                column[r] = data[r * width + c];
            }
            col_fft.process(&mut column);
            for r in 0..height {
                data[r * width + c] = column[r];
            }
        }
    });
}

/// Estimate ||A||^2 = the largest eigenvalue of A^T A by power iteration
/// from a fixed deterministic start.
pub fn operator_norm_sq(op: &DegradationOp, iterations: usize) -> Result<f64> {
    let (w, h) = op.shape();
    let mut v = Image::from_fn(w, h, |r, c| {
        // arbitrary but fixed full-support start vector
        1.0 + ((r * 31 + c * 17) % 7) as f64 * 0.125
    });
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let av = op.apply(&v)?;
        let atav = op.adjoint(&av)?;
        lambda = atav.dot(&v) / v.norm_sq();
        let norm = atav.norm();
        if norm < 1e-300 {
            return Ok(0.0);
        }
        v = atav.scale(1.0 / norm);
    }
    Ok(lambda.max(0.0))
}

/// Load a blur kernel from a plain-text grid: one row of whitespace
/// separated reals per line, blank lines and `#` comments ignored.
/// Unless `normalize` is false the taps are scaled to sum to one.
pub fn load_kernel(path: &Path, normalize: bool) -> Result<Filter2D> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_kernel(&text, &path.display().to_string(), normalize)
}

pub fn parse_kernel(text: &str, path: &str, normalize: bool) -> Result<Filter2D> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0usize;
    for line in text.lines() {
        let body = line.split('#').next().unwrap_or("");
        if !body.trim().is_empty() {
            let mut row = Vec::new();
            for tok in body.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    Error::parse(path, offset, format!("bad kernel entry '{tok}'"))
                })?;
                row.push(v);
            }
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::parse(path, offset, "ragged kernel rows"));
                }
            }
            rows.push(row);
        }
        offset += line.len() + 1;
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 0, "kernel file holds no rows"));
    }
    let sum: f64 = rows.iter().flatten().sum();
    if normalize {
        if sum.abs() < 1e-12 {
            return Err(Error::config("kernel sums to zero, cannot normalize"));
        }
        for v in rows.iter_mut().flatten() {
            *v /= sum;
        }
    } else if sum.abs() < 1e-12 {
        return Err(Error::config("kernel must have nonzero sum"));
    }
    let origin = (rows.len() as i64 / 2, rows[0].len() as i64 / 2);
    Filter2D::new(rows, origin, (0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.gen_range(-2.0..2.0))
    }

    fn gaussian_kernel(n: usize) -> Filter2D {
        let c = (n / 2) as f64;
        let mut rows = vec![vec![0.0; n]; n];
        let mut sum = 0.0;
        for r in 0..n {
            for c2 in 0..n {
                let d2 = (r as f64 - c).powi(2) + (c2 as f64 - c).powi(2);
                rows[r][c2] = (-d2 / 2.0).exp();
                sum += rows[r][c2];
            }
        }
        for v in rows.iter_mut().flatten() {
            *v /= sum;
        }
        Filter2D::new(rows, (n as i64 / 2, n as i64 / 2), (0, 0)).unwrap()
    }

    #[test]
    fn identity_and_trivial_blur() {
        let u = random_image(8, 8, 1);
        let id = DegradationOp::identity(8, 8);
        assert_eq!(id.apply(&u).unwrap(), u);
        let dirac = Filter2D::new(vec![vec![1.0]], (0, 0), (0, 0)).unwrap();
        let blur = DegradationOp::blur(dirac, 8, 8).unwrap();
        assert!(blur.apply(&u).unwrap().sub(&u).norm_inf() < 1e-15);
    }

    #[test]
    fn masks_keep_and_drop() {
        let u = random_image(6, 4, 2);
        let all = DegradationOp::mask(vec![true; 24], 6, 4).unwrap();
        assert_eq!(all.apply(&u).unwrap(), u);
        let none = DegradationOp::mask(vec![false; 24], 6, 4).unwrap();
        assert_eq!(none.apply(&u).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn adjoint_identity_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let kernel = gaussian_kernel(5);
        let mask: Vec<bool> = (0..32 * 32).map(|_| rng.gen_bool(0.6)).collect();
        let ops = [
            DegradationOp::identity(32, 32),
            DegradationOp::blur(kernel, 32, 32).unwrap(),
            DegradationOp::mask(mask, 32, 32).unwrap(),
        ];
        for (t, op) in ops.iter().enumerate() {
            for trial in 0..50 {
                let x = random_image(32, 32, 1000 + trial);
                let y = random_image(32, 32, 2000 + trial);
                let lhs = op.apply(&x).unwrap().dot(&y);
                let rhs = x.dot(&op.adjoint(&y).unwrap());
                let denom = lhs.abs().max(rhs.abs()).max(1.0);
                assert!(
                    (lhs - rhs).abs() / denom <= 1e-12,
                    "kind {t} trial {trial}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn normal_solve_inverts_normal_operator() {
        let kernel = gaussian_kernel(5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask: Vec<bool> = (0..32 * 32).map(|_| rng.gen_bool(0.5)).collect();
        let ops = [
            DegradationOp::identity(32, 32),
            DegradationOp::blur(kernel, 32, 32).unwrap(),
            DegradationOp::mask(mask, 32, 32).unwrap(),
        ];
        for op in &ops {
            for &mu in &[0.5, 1.0, 3.0] {
                let rhs = random_image(32, 32, (mu * 10.0) as u64);
                let x = op.normal_solve(mu, &rhs).unwrap();
                let forward = op.adjoint(&op.apply(&x).unwrap()).unwrap().add(&x.scale(mu));
                let rel = forward.sub(&rhs).norm() / rhs.norm();
                assert!(rel <= 1e-10, "mu={mu}: residual {rel:e}");
            }
        }
    }

    #[test]
    fn diagonal_normal_solves() {
        let r = random_image(4, 4, 9);
        let id = DegradationOp::identity(4, 4);
        assert!(id.normal_solve(1.0, &r).unwrap().sub(&r.scale(0.5)).norm_inf() < 1e-15);

        let mut ind = vec![true; 16];
        ind[3] = false;
        let mask = DegradationOp::mask(ind, 4, 4).unwrap();
        let x = mask.normal_solve(0.5, &r).unwrap();
        assert!((x.pixels()[0] - r.pixels()[0] / 1.5).abs() < 1e-15);
        assert!((x.pixels()[3] - r.pixels()[3] / 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_mu_rejected() {
        let id = DegradationOp::identity(4, 4);
        let r = random_image(4, 4, 3);
        assert!(id.normal_solve(0.0, &r).is_err());
        assert!(id.normal_solve(-1.0, &r).is_err());
    }

    #[test]
    fn apply_is_linear() {
        let kernel = gaussian_kernel(3);
        let op = DegradationOp::blur(kernel, 16, 16).unwrap();
        let x = random_image(16, 16, 21);
        let y = random_image(16, 16, 22);
        let lhs = op.apply(&x.scale(2.0).add(&y.scale(-0.5))).unwrap();
        let rhs = op.apply(&x).unwrap().scale(2.0).add(&op.apply(&y).unwrap().scale(-0.5));
        assert!(lhs.sub(&rhs).norm_inf() < 1e-12);
    }

    #[test]
    fn kernel_parsing() {
        let k = parse_kernel("1 2 1\n2 4 2\n1 2 1\n", "inline", true).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-14);
        assert_eq!(k.origin(), (1, 1));
        assert!(parse_kernel("1 2\n3\n", "inline", true).is_err());
        assert!(parse_kernel("", "inline", true).is_err());
        assert!(parse_kernel("1 -1\n", "inline", true).is_err());
    }

    #[test]
    fn operator_norm_estimates() {
        let id = DegradationOp::identity(16, 16);
        let n = operator_norm_sq(&id, 30).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        let blur = DegradationOp::blur(gaussian_kernel(5), 16, 16).unwrap();
        let nb = operator_norm_sq(&blur, 50).unwrap();
        assert!(nb <= 1.0 + 1e-9 && nb > 0.5, "{nb}");
    }
}
