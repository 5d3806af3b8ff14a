//! Double-precision 2-D pixel grid.
//!
//! Pixels are stored row major; nominal intensity range is [0, 255] but
//! values are not clamped except when written to disk, since solver
//! iterates routinely leave that range.

use crate::error::{Error, Result};

/// A width x height grid of `f64` samples, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::argument("image dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::argument(format!(
                "pixel count {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::argument("image contains non-finite values"));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Build from a function of (row, col).
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.width + col] = v;
    }

    /// Periodic (wrap-around) access for signed indices.
    #[inline]
    pub fn get_periodic(&self, row: i64, col: i64) -> f64 {
        let r = row.rem_euclid(self.height as i64) as usize;
        let c = col.rem_euclid(self.width as i64) as usize;
        self.data[r * self.width + c]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// self <- self + alpha * other
    pub fn axpy(&mut self, alpha: f64, other: &Image) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn add(&self, other: &Image) -> Image {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Image) -> Image {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn scale(&self, alpha: f64) -> Image {
        self.map(|v| alpha * v)
    }

    pub fn dot(&self, other: &Image) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn norm_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_validates() {
        assert!(Image::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::from_vec(0, 2, vec![]).is_err());
        assert!(Image::from_vec(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).is_err());
        assert!(Image::from_vec(2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn periodic_wraps() {
        let img = Image::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        assert_eq!(img.get_periodic(-1, 0), img.get(3, 0));
        assert_eq!(img.get_periodic(4, 5), img.get(0, 1));
        assert_eq!(img.get_periodic(-5, -1), img.get(3, 3));
    }

    #[test]
    fn arithmetic() {
        let a = Image::from_fn(3, 2, |r, c| (r + c) as f64);
        let b = a.scale(2.0);
        assert_eq!(b.sub(&a), a);
        assert!((a.dot(&a) - a.norm_sq()).abs() < 1e-15);
    }
}
