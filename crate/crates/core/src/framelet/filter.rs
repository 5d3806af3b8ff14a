//! 2-D FIR filters with integer support offsets and vanishing-moment metadata.

use crate::error::{Error, Result};
use crate::image::Image;

/// Complex value used for filter symbols q̂(ξ) = Σ_k q[k] e^{-i k·ξ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
    pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }

    /// e^{i t}
    pub fn cis(t: f64) -> Self {
        C64 {
            re: t.cos(),
            im: t.sin(),
        }
    }

    pub fn conj(self) -> Self {
        C64 {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn add(self, o: C64) -> Self {
        C64 {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    pub fn sub(self, o: C64) -> Self {
        C64 {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }

    pub fn mul(self, o: C64) -> Self {
        C64 {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    pub fn scale(self, s: f64) -> Self {
        C64 {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn div(self, o: C64) -> Self {
        let d = o.re * o.re + o.im * o.im;
        C64 {
            re: (self.re * o.re + self.im * o.im) / d,
            im: (self.im * o.re - self.re * o.im) / d,
        }
    }

    pub fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.abs_sq().sqrt()
    }

    /// (i w)^s for integer s >= 0.
    pub fn i_omega_pow(w: f64, s: u32) -> C64 {
        let base = C64::new(0.0, w);
        let mut acc = C64::ONE;
        for _ in 0..s {
            acc = acc.mul(base);
        }
        acc
    }
}

/// A finitely supported real 2-D filter.
///
/// `coeffs[r][c]` sits at the integer offset `(r, c) - origin`, so `origin`
/// is the grid position of index (0, 0). `moments = (s0, s1)` records the
/// per-axis vanishing-moment orders (both zero for a low-pass filter).
#[derive(Debug, Clone, PartialEq)]
pub struct Filter2D {
    coeffs: Vec<Vec<f64>>,
    origin: (i64, i64),
    moments: (u32, u32),
}

impl Filter2D {
    pub fn new(coeffs: Vec<Vec<f64>>, origin: (i64, i64), moments: (u32, u32)) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0].is_empty() {
            return Err(Error::argument("filter grid must be nonempty"));
        }
        let cols = coeffs[0].len();
        if coeffs.iter().any(|row| row.len() != cols) {
            return Err(Error::argument("filter grid rows must have equal length"));
        }
        if coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::argument("filter coefficients must be finite"));
        }
        let f = Filter2D {
            coeffs,
            origin,
            moments,
        };
        f.check_moments()?;
        Ok(f)
    }

    /// Tensor product of two 1-D masks, each with support starting at
    /// offset 0 (axis 0 factor varies with the row index).
    pub fn tensor(mask0: &[f64], s0: u32, mask1: &[f64], s1: u32) -> Result<Self> {
        let coeffs = mask0
            .iter()
            .map(|&a| mask1.iter().map(|&b| a * b).collect())
            .collect();
        Filter2D::new(coeffs, (0, 0), (s0, s1))
    }

    pub fn origin(&self) -> (i64, i64) {
        self.origin
    }

    pub fn moments(&self) -> (u32, u32) {
        self.moments
    }

    /// Total differential order s0 + s1.
    pub fn total_order(&self) -> u32 {
        self.moments.0 + self.moments.1
    }

    pub fn is_highpass(&self) -> bool {
        self.moments != (0, 0)
    }

    pub fn rows(&self) -> usize {
        self.coeffs.len()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].len()
    }

    /// Iterate over (offset0, offset1, value) with origin applied.
    pub fn taps(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        self.coeffs.iter().enumerate().flat_map(move |(r, row)| {
            row.iter().enumerate().map(move |(c, &v)| {
                (
                    r as i64 - self.origin.0,
                    c as i64 - self.origin.1,
                    v,
                )
            })
        })
    }

    /// Discrete moment Σ_k q[k] k0^a k1^b.
    pub fn moment(&self, a: u32, b: u32) -> f64 {
        self.taps()
            .map(|(k0, k1, v)| v * (k0 as f64).powi(a as i32) * (k1 as f64).powi(b as i32))
            .sum()
    }

    /// Validate the declared vanishing moments: every moment (a, b) with
    /// a <= s0, b <= s1 short of (s0, s1) on either axis must vanish, and
    /// the (s0, s1) moment itself must not.
    fn check_moments(&self) -> Result<()> {
        let (s0, s1) = self.moments;
        for a in 0..=s0 {
            for b in 0..=s1 {
                let m = self.moment(a, b);
                if a < s0 || b < s1 {
                    if m.abs() > 1e-12 {
                        return Err(Error::argument(format!(
                            "moment ({a},{b}) = {m:e} expected to vanish for orders ({s0},{s1})"
                        )));
                    }
                } else if m.abs() <= 1e-12 {
                    return Err(Error::argument(format!(
                        "leading moment ({s0},{s1}) vanishes; declared orders are wrong"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Filter symbol q̂(ξ) = Σ_k q[k] e^{-i k·ξ}.
    pub fn symbol(&self, xi0: f64, xi1: f64) -> C64 {
        let mut acc = C64::ZERO;
        for (k0, k1, v) in self.taps() {
            acc = acc.add(C64::cis(-(k0 as f64 * xi0 + k1 as f64 * xi1)).scale(v));
        }
        acc
    }

    /// L1 norm of the coefficients.
    pub fn norm_l1(&self) -> f64 {
        self.coeffs.iter().flatten().map(|v| v.abs()).sum()
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().flatten().sum()
    }

    /// Correlation with periodic wrap: out[k] = Σ_m q[m] u[k + step·m].
    /// `step` dilates the filter support (à trous scheme); step = 1 is the
    /// plain single-level case.
    pub fn correlate(&self, u: &Image, step: i64) -> Image {
        self.apply_periodic(u, step, false)
    }

    /// Convolution with periodic wrap: out[k] = Σ_m q[m] u[k - step·m].
    /// This is the adjoint of `correlate` with the same step.
    pub fn convolve(&self, u: &Image, step: i64) -> Image {
        self.apply_periodic(u, step, true)
    }

    fn apply_periodic(&self, u: &Image, step: i64, flip: bool) -> Image {
        let h = u.height() as i64;
        let w = u.width() as i64;
        let mut out = Image::zeros(u.width(), u.height());
        // Precompute wrapped index tables per axis so the inner loop is
        // a plain gather.
        let taps: Vec<(i64, i64, f64)> = self.taps().collect();
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for &(k0, k1, v) in &taps {
                    let (dr, dc) = if flip {
                        (r - step * k0, c - step * k1)
                    } else {
                        (r + step * k0, c + step * k1)
                    };
                    acc += v * u.get_periodic(dr.rem_euclid(h), dc.rem_euclid(w));
                }
                out.set(r as usize, c as usize, acc);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_moments() {
        // haar high-pass x low-pass: orders (1, 0)
        let f = Filter2D::tensor(&[0.5, -0.5], 1, &[0.5, 0.5], 0).unwrap();
        assert_eq!(f.moments(), (1, 0));
        assert!(f.moment(0, 0).abs() < 1e-15);
        assert!(f.moment(1, 0).abs() > 0.1);
    }

    #[test]
    fn wrong_moment_metadata_rejected() {
        // claiming two vanishing moments for the haar difference must fail
        assert!(Filter2D::tensor(&[0.5, -0.5], 2, &[1.0], 0).is_err());
        // claiming high-pass for a low-pass mask must fail
        assert!(Filter2D::tensor(&[0.5, 0.5], 1, &[1.0], 0).is_err());
    }

    #[test]
    fn correlate_convolve_are_adjoint() {
        let f = Filter2D::tensor(&[0.25, 0.5, 0.25], 0, &[0.5, -0.5], 1).unwrap();
        let x = Image::from_fn(8, 8, |r, c| ((r * 31 + c * 17) % 13) as f64 - 6.0);
        let y = Image::from_fn(8, 8, |r, c| ((r * 7 + c * 29) % 11) as f64 - 5.0);
        let lhs = f.correlate(&x, 1).dot(&y);
        let rhs = x.dot(&f.convolve(&y, 1));
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn dirac_is_identity() {
        let f = Filter2D::new(vec![vec![1.0]], (0, 0), (0, 0)).unwrap();
        let x = Image::from_fn(4, 4, |r, c| (r + 2 * c) as f64);
        assert_eq!(f.correlate(&x, 1), x);
        assert_eq!(f.convolve(&x, 3), x);
    }

    #[test]
    fn symbol_at_zero_is_sum() {
        let f = Filter2D::tensor(&[0.25, 0.5, 0.25], 0, &[0.25, 0.5, 0.25], 0).unwrap();
        let s = f.symbol(0.0, 0.0);
        assert!((s.re - 1.0).abs() < 1e-15 && s.im.abs() < 1e-15);
    }
}
