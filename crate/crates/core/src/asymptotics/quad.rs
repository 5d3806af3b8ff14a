//! Gauss-Legendre rules and exact piecewise-polynomial calculus, both in
//! double-double arithmetic.
//!
//! The antiderivative profiles attached to the high-pass bands are
//! piecewise polynomials on dyadic knots. Constructing them exactly (and
//! evaluating them at Gauss nodes exactly) keeps the only error in the
//! sampling operators the genuine quadrature truncation.

use crate::asymptotics::dd::Dd;

/// Quadrature rule on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<Dd>,
    pub weights: Vec<Dd>,
}

/// (P_m(x), P_m'(x)) by the three-term recurrence.
fn legendre(m: usize, x: Dd) -> (Dd, Dd) {
    let mut prev = Dd::ONE;
    let mut cur = x;
    if m == 0 {
        return (Dd::ONE, Dd::ZERO);
    }
    for k in 1..m {
        let kf = k as f64;
        let next = (Dd::from_f64(2.0 * kf + 1.0) * x * cur - Dd::from_f64(kf) * prev)
            / Dd::from_f64(kf + 1.0);
        prev = cur;
        cur = next;
    }
    // P'_m = m (x P_m - P_{m-1}) / (x^2 - 1)
    let deriv = Dd::from_f64(m as f64) * (x * cur - prev) / (x * x - Dd::ONE);
    (cur, deriv)
}

/// Gauss-Legendre rule of the given order mapped to [0, 1], with nodes
/// refined to double-double accuracy by Newton iteration.
pub fn gauss_legendre_unit(order: usize) -> GaussRule {
    assert!(order >= 1);
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for i in 0..order {
        let seed = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut x = Dd::from_f64(seed);
        for _ in 0..6 {
            let (p, dp) = legendre(order, x);
            x = x - p / dp;
        }
        let (_, dp) = legendre(order, x);
        let w = Dd::from_f64(2.0) / ((Dd::ONE - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes.push((x + Dd::ONE).scale_pow2(0.5));
        weights.push(w.scale_pow2(0.5));
    }
    // ascending node order reads more naturally
    let mut idx: Vec<usize> = (0..order).collect();
    idx.sort_by(|&a, &b| nodes[a].hi.partial_cmp(&nodes[b].hi).unwrap());
    GaussRule {
        nodes: idx.iter().map(|&i| nodes[i]).collect(),
        weights: idx.iter().map(|&i| weights[i]).collect(),
    }
}

/// Piecewise polynomial on uniform dyadic knots.
///
/// Knot spacing is h = 2^log2_h; knot i sits at (start + i) h and piece i
/// holds coefficients in the local coordinate tau = (x - knot_i)/h on
/// [0, 1], ascending degree.
#[derive(Debug, Clone)]
pub struct Pp1 {
    pub log2_h: i32,
    pub start: i64,
    pub pieces: Vec<Vec<Dd>>,
}

impl Pp1 {
    /// Knot spacing (a power of two, exact).
    pub fn h(&self) -> f64 {
        2f64.powi(self.log2_h)
    }

    /// Support interval [start h, (start + pieces) h].
    pub fn support(&self) -> (f64, f64) {
        (
            self.start as f64 * self.h(),
            (self.start + self.pieces.len() as i64) as f64 * self.h(),
        )
    }

    /// Piecewise constant 1 on [0, 1]: the order-1 B-spline.
    pub fn bspline1() -> Pp1 {
        Pp1 {
            log2_h: 0,
            start: 0,
            pieces: vec![vec![Dd::ONE]],
        }
    }

    /// Hat function on [0, 2]: the order-2 B-spline.
    pub fn bspline2() -> Pp1 {
        Pp1 {
            log2_h: 0,
            start: 0,
            pieces: vec![vec![Dd::ZERO, Dd::ONE], vec![Dd::ONE, -Dd::ONE]],
        }
    }

    /// Evaluate at x (zero outside the support).
    pub fn eval(&self, x: Dd) -> Dd {
        let t = x.scale_pow2(2f64.powi(-self.log2_h)) - Dd::from_f64(self.start as f64);
        let mut i = t.hi.floor() as i64;
        let mut tau = t - Dd::from_f64(i as f64);
        if tau.hi < 0.0 {
            i -= 1;
            tau = tau + Dd::ONE;
        } else if tau.hi >= 1.0 {
            i += 1;
            tau = tau - Dd::ONE;
        }
        if i < 0 || i as usize >= self.pieces.len() {
            return Dd::ZERO;
        }
        let coeffs = &self.pieces[i as usize];
        let mut acc = Dd::ZERO;
        for &c in coeffs.iter().rev() {
            acc = acc * tau + c;
        }
        acc
    }

    pub fn scale(&self, c: Dd) -> Pp1 {
        Pp1 {
            log2_h: self.log2_h,
            start: self.start,
            pieces: self
                .pieces
                .iter()
                .map(|p| p.iter().map(|&v| v * c).collect())
                .collect(),
        }
    }

    /// Integral over the support.
    pub fn integral(&self) -> Dd {
        let h = Dd::from_f64(self.h());
        let mut total = Dd::ZERO;
        for piece in &self.pieces {
            let mut s = Dd::ZERO;
            for (k, &c) in piece.iter().enumerate() {
                s = s + c / Dd::from_f64((k + 1) as f64);
            }
            total = total + h * s;
        }
        total
    }

    /// Integral of x f(x) over the support.
    pub fn first_moment(&self) -> Dd {
        let h = Dd::from_f64(self.h());
        let mut total = Dd::ZERO;
        for (i, piece) in self.pieces.iter().enumerate() {
            let a = Dd::from_f64((self.start + i as i64) as f64) * h;
            let mut s1 = Dd::ZERO;
            let mut s2 = Dd::ZERO;
            for (k, &c) in piece.iter().enumerate() {
                s1 = s1 + c / Dd::from_f64((k + 1) as f64);
                s2 = s2 + c / Dd::from_f64((k + 2) as f64);
            }
            total = total + h * (a * s1 + h * s2);
        }
        total
    }

    /// Exact antiderivative from the left support edge, on the same knots.
    pub fn antiderivative(&self) -> Pp1 {
        let h = Dd::from_f64(self.h());
        let mut cumulative = Dd::ZERO;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for piece in &self.pieces {
            let mut coeffs = vec![cumulative];
            let mut piece_total = Dd::ZERO;
            for (k, &c) in piece.iter().enumerate() {
                let scaled = h * c / Dd::from_f64((k + 1) as f64);
                coeffs.push(scaled);
                piece_total = piece_total + scaled;
            }
            cumulative = cumulative + piece_total;
            pieces.push(coeffs);
        }
        Pp1 {
            log2_h: self.log2_h,
            start: self.start,
            pieces,
        }
    }

    /// Build sum_t c_t f(2x - t h) where h is this function's knot
    /// spacing. The result lives on knots of spacing h/2, which line up
    /// exactly with the dilated pieces, so no resampling error occurs.
    pub fn dilate_combine(&self, taps: &[(Dd, i64)]) -> Pp1 {
        assert!(!taps.is_empty());
        let t_min = taps.iter().map(|&(_, t)| t).min().unwrap();
        let t_max = taps.iter().map(|&(_, t)| t).max().unwrap();
        let slen = self.pieces.len() as i64;
        let start = 2 * (self.start + t_min);
        let len = 2 * (t_max - t_min + slen) as usize;
        let degree = self.pieces.iter().map(Vec::len).max().unwrap_or(1);
        let mut pieces = vec![vec![Dd::ZERO; degree]; len];
        for (i, out) in pieces.iter_mut().enumerate() {
            for &(c, t) in taps {
                let p = start + i as i64 - t - self.start;
                if (0..slen).contains(&p) {
                    for (k, &v) in self.pieces[p as usize].iter().enumerate() {
                        out[k] = out[k] + c * v;
                    }
                }
            }
        }
        Pp1 {
            log2_h: self.log2_h - 1,
            start,
            pieces,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre_unit(6);
        // order 6 is exact through degree 11 on [0,1]
        for deg in 0..=11u32 {
            let mut acc = Dd::ZERO;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                acc = acc + *w * x.powi(deg);
            }
            let want = Dd::ONE / Dd::from_f64((deg + 1) as f64);
            let err = (acc - want).to_f64().abs();
            assert!(err < 1e-30, "deg {deg}: {err:e}");
        }
        let wsum: f64 = rule.weights.iter().map(|w| w.to_f64()).sum();
        assert!((wsum - 1.0).abs() < 1e-30);
    }

    #[test]
    fn bsplines_integrate_to_one() {
        assert!((Pp1::bspline1().integral() - Dd::ONE).to_f64().abs() < 1e-30);
        assert!((Pp1::bspline2().integral() - Dd::ONE).to_f64().abs() < 1e-30);
        // hat centroid is 1
        let m = Pp1::bspline2().first_moment();
        assert!((m - Dd::ONE).to_f64().abs() < 1e-30);
    }

    #[test]
    fn eval_inside_and_outside() {
        let hat = Pp1::bspline2();
        assert!((hat.eval(Dd::from_f64(0.5)).to_f64() - 0.5).abs() < 1e-30);
        assert!((hat.eval(Dd::from_f64(1.0)).to_f64() - 1.0).abs() < 1e-30);
        assert!((hat.eval(Dd::from_f64(1.25)).to_f64() - 0.75).abs() < 1e-30);
        assert_eq!(hat.eval(Dd::from_f64(2.5)).to_f64(), 0.0);
        assert_eq!(hat.eval(Dd::from_f64(-0.1)).to_f64(), 0.0);
    }

    #[test]
    fn antiderivative_of_hat() {
        let f = Pp1::bspline2().antiderivative();
        assert!((f.eval(Dd::from_f64(1.0)).to_f64() - 0.5).abs() < 1e-30);
        assert!((f.eval(Dd::from_f64(2.0 - 1e-18)).to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dilate_combine_haar_difference() {
        // 2 (q0 B1(2x) + q1 B1(2x - 1)) with q = [1/2, -1/2] is the step
        // +1 on [0, 1/2), -1 on [1/2, 1)
        let psi = Pp1::bspline1().dilate_combine(&[(Dd::ONE, 0), (-Dd::ONE, 1)]);
        assert_eq!(psi.log2_h, -1);
        assert!((psi.eval(Dd::from_f64(0.25)).to_f64() - 1.0).abs() < 1e-30);
        assert!((psi.eval(Dd::from_f64(0.75)).to_f64() + 1.0).abs() < 1e-30);
        assert!(psi.integral().to_f64().abs() < 1e-30);
        // its antiderivative is the 1/2-scaled hat on [0,1]
        let phi = psi.antiderivative();
        assert!((phi.eval(Dd::from_f64(0.5)).to_f64() - 0.5).abs() < 1e-30);
        assert!((phi.integral().to_f64() - 0.25).abs() < 1e-30);
    }

    #[test]
    fn refinement_reproduces_bspline() {
        // B1(x) = B1(2x) + B1(2x-1)
        let b = Pp1::bspline1();
        let refined = b.dilate_combine(&[(Dd::ONE, 0), (Dd::ONE, 1)]);
        for &x in &[0.1, 0.4, 0.75, 0.9] {
            let err = (refined.eval(Dd::from_f64(x)) - b.eval(Dd::from_f64(x))).to_f64();
            assert!(err.abs() < 1e-30);
        }
    }
}
