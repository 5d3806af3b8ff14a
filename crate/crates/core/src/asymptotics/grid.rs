//! Dyadic index sets at resolution n on the unit square.
//!
//! O_n holds every grid point of 2^-n Z^2 inside the closed square, M_n
//! the points whose scaled kernel support stays inside, and K_n shrinks
//! M_n by a fixed safety margin so that every filter and profile support
//! touched by the identity checks stays interior. The margin replaces the
//! non-constructive support-growth constant with an explicit multiple of
//! the kernel support width.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub n: u32,
    /// Kernel support width w of the bank (1 for haar, 2 for linear).
    pub support: usize,
    /// Safety factor C; K_n keeps C*w cells away from the M_n boundary.
    pub safety: usize,
}

impl GridSpec {
    pub fn new(n: u32, support: usize) -> Result<Self> {
        let spec = GridSpec {
            n,
            support,
            safety: 4,
        };
        if spec.k_max() < 0 {
            return Err(Error::argument(format!(
                "resolution n={n} too coarse for support {support}"
            )));
        }
        Ok(spec)
    }

    pub fn side(&self) -> i64 {
        1i64 << self.n
    }

    /// Inclusive upper index of O_n per axis (lower is 0).
    pub fn o_max(&self) -> i64 {
        self.side()
    }

    /// Inclusive upper index of M_n per axis.
    pub fn m_max(&self) -> i64 {
        self.side() - self.support as i64
    }

    /// Inclusive upper index of K_n per axis.
    pub fn k_max(&self) -> i64 {
        self.m_max() - (self.safety * self.support) as i64
    }

    pub fn contains_k(&self, k0: i64, k1: i64) -> bool {
        let hi = self.k_max();
        (0..=hi).contains(&k0) && (0..=hi).contains(&k1)
    }

    pub fn k_iter(&self) -> impl Iterator<Item = (i64, i64)> {
        let hi = self.k_max();
        (0..=hi).flat_map(move |a| (0..=hi).map(move |b| (a, b)))
    }

    pub fn o_count(&self) -> usize {
        let s = (self.o_max() + 1) as usize;
        s * s
    }

    pub fn m_count(&self) -> usize {
        let s = (self.m_max() + 1) as usize;
        s * s
    }

    pub fn k_count(&self) -> usize {
        let s = (self.k_max() + 1) as usize;
        s * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nesting_and_counts() {
        for n in 4..=8 {
            for w in [1usize, 2] {
                let g = GridSpec::new(n, w).unwrap();
                assert!(g.k_max() <= g.m_max() && g.m_max() <= g.o_max());
                assert!(g.k_count() <= g.m_count() && g.m_count() <= g.o_count());
            }
        }
    }

    #[test]
    fn boundary_excess_linear_in_side() {
        // |O_n \ K_n| <= c 2^n with c independent of n
        for w in [1usize, 2] {
            let c = (2 * (GridSpec::new(5, w).unwrap().safety + 1) * w + 3) as f64;
            for n in 4..=9 {
                let g = GridSpec::new(n, w).unwrap();
                let excess = (g.o_count() - g.k_count()) as f64;
                assert!(
                    excess <= c * 2f64.powi(n as i32),
                    "w={w} n={n}: {excess} > {c} * 2^{n}"
                );
            }
        }
    }

    #[test]
    fn filter_support_stays_inside() {
        // k in K_n plus any within-margin offset stays in M_n
        let g = GridSpec::new(4, 2).unwrap();
        let reach = (g.safety * g.support) as i64;
        for (k0, k1) in g.k_iter() {
            assert!(k0 + reach <= g.m_max() && k1 + reach <= g.m_max());
        }
    }

    #[test]
    fn too_coarse_rejected() {
        assert!(GridSpec::new(3, 2).is_err());
        assert!(GridSpec::new(4, 2).is_ok());
    }
}
