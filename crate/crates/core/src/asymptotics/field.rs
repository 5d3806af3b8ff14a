//! Closed-form smooth test fields on the unit square with analytic
//! partial derivatives of arbitrary order.
//!
//! Every catalog field is a short sum of tensor products g(x0) h(x1),
//! which the sampling operators exploit: a 2-D inner product against a
//! tensor kernel factorizes into two 1-D quadratures.

use crate::asymptotics::dd::Dd;

fn poly_derive(p: &[Dd]) -> Vec<Dd> {
    if p.len() <= 1 {
        return vec![Dd::ZERO];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * Dd::from_f64(k as f64))
        .collect()
}

fn poly_eval(p: &[Dd], x: Dd) -> Dd {
    let mut acc = Dd::ZERO;
    for &c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// One axis factor, closed under differentiation.
#[derive(Debug, Clone)]
pub enum Axis1D {
    /// Polynomial with ascending coefficients.
    Poly(Vec<Dd>),
    /// amp sin(freq x + phase)
    Trig { amp: Dd, freq: Dd, phase: Dd },
    /// poly(x - center) exp(-(x - center)^2 inv_s)
    Gauss {
        poly: Vec<Dd>,
        center: Dd,
        inv_s: Dd,
    },
}

impl Axis1D {
    pub fn eval(&self, x: Dd) -> Dd {
        match self {
            Axis1D::Poly(p) => poly_eval(p, x),
            Axis1D::Trig { amp, freq, phase } => *amp * (*freq * x + *phase).sin(),
            Axis1D::Gauss {
                poly,
                center,
                inv_s,
            } => {
                let tau = x - *center;
                poly_eval(poly, tau) * (-(tau * tau) * *inv_s).exp()
            }
        }
    }

    pub fn derivative(&self) -> Axis1D {
        match self {
            Axis1D::Poly(p) => Axis1D::Poly(poly_derive(p)),
            Axis1D::Trig { amp, freq, phase } => Axis1D::Trig {
                amp: *amp * *freq,
                freq: *freq,
                phase: *phase + Dd::FRAC_PI_2,
            },
            Axis1D::Gauss {
                poly,
                center,
                inv_s,
            } => {
                // (p e^{-tau^2/s})' = (p' - 2 tau p / s) e^{-tau^2/s}
                let dp = poly_derive(poly);
                let mut shifted = vec![Dd::ZERO; poly.len() + 1];
                for (k, &c) in poly.iter().enumerate() {
                    shifted[k + 1] = c;
                }
                let mut out = vec![Dd::ZERO; shifted.len().max(dp.len())];
                for (k, &c) in dp.iter().enumerate() {
                    out[k] = out[k] + c;
                }
                let two_inv_s = *inv_s + *inv_s;
                for (k, &c) in shifted.iter().enumerate() {
                    out[k] = out[k] - two_inv_s * c;
                }
                Axis1D::Gauss {
                    poly: out,
                    center: *center,
                    inv_s: *inv_s,
                }
            }
        }
    }

    pub fn derivative_n(&self, n: u32) -> Axis1D {
        let mut cur = self.clone();
        for _ in 0..n {
            cur = cur.derivative();
        }
        cur
    }
}

/// A sum of tensor-product terms g(x0) h(x1).
#[derive(Debug, Clone)]
pub struct SmoothField {
    pub name: String,
    terms: Vec<(Axis1D, Axis1D)>,
}

impl SmoothField {
    pub fn new(name: impl Into<String>, terms: Vec<(Axis1D, Axis1D)>) -> Self {
        SmoothField {
            name: name.into(),
            terms,
        }
    }

    pub fn terms(&self) -> &[(Axis1D, Axis1D)] {
        &self.terms
    }

    pub fn constant(c: f64) -> Self {
        SmoothField::new(
            format!("const({c})"),
            vec![(
                Axis1D::Poly(vec![Dd::from_f64(c)]),
                Axis1D::Poly(vec![Dd::ONE]),
            )],
        )
    }

    /// c + g0 x0 + g1 x1
    pub fn affine(g0: f64, g1: f64, c: f64) -> Self {
        SmoothField::new(
            "affine",
            vec![
                (
                    Axis1D::Poly(vec![Dd::from_f64(c), Dd::from_f64(g0)]),
                    Axis1D::Poly(vec![Dd::ONE]),
                ),
                (
                    Axis1D::Poly(vec![Dd::ONE]),
                    Axis1D::Poly(vec![Dd::ZERO, Dd::from_f64(g1)]),
                ),
            ],
        )
    }

    /// sin(2 pi x0) sin(2 pi x1)
    pub fn sin_sin() -> Self {
        let f = |phase: Dd| Axis1D::Trig {
            amp: Dd::ONE,
            freq: Dd::TWO_PI,
            phase,
        };
        SmoothField::new("sin_sin", vec![(f(Dd::ZERO), f(Dd::ZERO))])
    }

    /// sin(2 pi x0), constant along axis 1
    pub fn sin_axis0() -> Self {
        SmoothField::new(
            "sin_axis0",
            vec![(
                Axis1D::Trig {
                    amp: Dd::ONE,
                    freq: Dd::TWO_PI,
                    phase: Dd::ZERO,
                },
                Axis1D::Poly(vec![Dd::ONE]),
            )],
        )
    }

    /// cos(2 pi x0) sin(2 pi x1)
    pub fn cos_sin() -> Self {
        SmoothField::new(
            "cos_sin",
            vec![(
                Axis1D::Trig {
                    amp: Dd::ONE,
                    freq: Dd::TWO_PI,
                    phase: Dd::FRAC_PI_2,
                },
                Axis1D::Trig {
                    amp: Dd::ONE,
                    freq: Dd::TWO_PI,
                    phase: Dd::ZERO,
                },
            )],
        )
    }

    /// exp(-((x0 - 1/2)^2 + (x1 - 1/2)^2) / 0.02)
    pub fn gauss_bump() -> Self {
        let g = || Axis1D::Gauss {
            poly: vec![Dd::ONE],
            center: Dd::from_ratio(1, 2),
            inv_s: Dd::from_f64(50.0),
        };
        SmoothField::new("gauss_bump", vec![(g(), g())])
    }

    /// The fixed catalog exercised by the identity and convergence checks.
    pub fn catalog() -> Vec<SmoothField> {
        vec![
            SmoothField::constant(1.0),
            SmoothField::affine(2.0, -1.0, 0.5),
            SmoothField::sin_sin(),
            SmoothField::gauss_bump(),
        ]
    }

    /// The mixed partial derivative field d^a_0 d^b_1 f.
    pub fn partial_field(&self, a: u32, b: u32) -> SmoothField {
        SmoothField::new(
            format!("d({a},{b}){}", self.name),
            self.terms
                .iter()
                .map(|(g, h)| (g.derivative_n(a), h.derivative_n(b)))
                .collect(),
        )
    }

    pub fn eval(&self, x0: Dd, x1: Dd) -> Dd {
        let mut acc = Dd::ZERO;
        for (g, h) in &self.terms {
            acc = acc + g.eval(x0) * h.eval(x1);
        }
        acc
    }

    pub fn eval_f64(&self, x0: f64, x1: f64) -> f64 {
        self.eval(Dd::from_f64(x0), Dd::from_f64(x1)).to_f64()
    }
}

/// A J-component smooth vector field.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub comps: Vec<SmoothField>,
}

impl VectorField {
    /// The derivative field (D_1 u, ..., D_J u) for per-band orders.
    pub fn derivatives_of(u: &SmoothField, orders: &[(u32, u32)]) -> VectorField {
        VectorField {
            comps: orders
                .iter()
                .map(|&(a, b)| u.partial_field(a, b))
                .collect(),
        }
    }

    /// Independent trigonometric components (not matched to any u).
    pub fn trig_components(count: usize) -> VectorField {
        VectorField {
            comps: (0..count)
                .map(|j| {
                    if j % 2 == 0 {
                        SmoothField::cos_sin()
                    } else {
                        SmoothField::sin_sin()
                    }
                })
                .collect(),
        }
    }

    pub fn zero(count: usize) -> VectorField {
        VectorField {
            comps: (0..count).map(|_| SmoothField::constant(0.0)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(f: &SmoothField, a: u32, b: u32, x0: f64, x1: f64, h: f64) -> f64 {
        if a > 0 {
            let fm = f.partial_field(a - 1, b);
            (fm.eval_f64(x0 + h, x1) - fm.eval_f64(x0 - h, x1)) / (2.0 * h)
        } else if b > 0 {
            let fm = f.partial_field(a, b - 1);
            (fm.eval_f64(x0, x1 + h) - fm.eval_f64(x0, x1 - h)) / (2.0 * h)
        } else {
            f.eval_f64(x0, x1)
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let h = 1e-5;
        for f in SmoothField::catalog() {
            for _ in 0..10 {
                let x0 = rng.gen_range(0.1..0.9);
                let x1 = rng.gen_range(0.1..0.9);
                for (a, b) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                    let exact = f.partial_field(a, b).eval_f64(x0, x1);
                    let approx = central_diff(&f, a, b, x0, x1, h);
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (exact - approx).abs() / scale < 1e-6,
                        "{} d({a},{b}) at ({x0:.3},{x1:.3}): {exact} vs {approx}",
                        f.name
                    );
                }
            }
        }
    }

    #[test]
    fn trig_derivative_closed_form() {
        let f = SmoothField::sin_sin();
        // d^2/dx0^2 sin(2 pi x0) = -(2 pi)^2 sin(2 pi x0)
        let d2 = f.partial_field(2, 0);
        let x = (0.3, 0.7);
        let want = -(2.0 * std::f64::consts::PI).powi(2) * f.eval_f64(x.0, x.1);
        let got = d2.eval_f64(x.0, x.1);
        assert!((want - got).abs() < 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn gaussian_peak_value() {
        let g = SmoothField::gauss_bump();
        assert!((g.eval_f64(0.5, 0.5) - 1.0).abs() < 1e-30);
        // second derivative at the peak: -2/s per axis with s = 0.02
        let d = g.partial_field(2, 0);
        assert!((d.eval_f64(0.5, 0.5) + 100.0).abs() < 1e-12);
    }
}
