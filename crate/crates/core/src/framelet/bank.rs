//! Tensor-product B-spline tight-frame filter banks.
//!
//! Two banks are provided. The `haar` bank is built from the piecewise
//! constant B-spline refinement mask [1,1]/2 and the difference mask
//! [1,-1]/2; the `linear` bank from the piecewise linear masks [1,2,1]/4,
//! (sqrt 2/4)[1,0,-1] and [-1,2,-1]/4. Both 1-D families satisfy the
//! two filter identities that make the undecimated transform a tight
//! frame, and the 2-D banks are their tensor products with the pure
//! low-pass band split off.
//!
//! Band ordering is frozen as row-major over the per-axis factor indices
//! (j0, j1), with (0, 0) -- the low-pass -- first; `highpass[j-1]` holds
//! band j for 1 <= j <= J.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framelet::filter::{C64, Filter2D};

/// 1-D mask together with its vanishing-moment order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask1D {
    pub coeffs: Vec<f64>,
    pub moment: u32,
}

/// Which underlying B-spline generates the bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankName {
    Haar,
    Linear,
}

impl fmt::Display for BankName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BankName::Haar => write!(f, "haar"),
            BankName::Linear => write!(f, "linear"),
        }
    }
}

impl FromStr for BankName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(BankName::Haar),
            "linear" => Ok(BankName::Linear),
            other => Err(Error::config(format!(
                "unknown filter bank '{other}' (expected haar or linear)"
            ))),
        }
    }
}

impl BankName {
    /// Fourier transform of the 1-D B-spline with support starting at 0:
    /// hat B_m(w) = ((1 - e^{-iw}) / (iw))^m.
    pub fn phi_hat_1d(self, w: f64) -> C64 {
        let factor = if w.abs() < 1e-30 {
            C64::ONE
        } else {
            C64::ONE
                .sub(C64::cis(-w))
                .div(C64::new(0.0, w))
        };
        match self {
            BankName::Haar => factor,
            BankName::Linear => factor.mul(factor),
        }
    }

    /// Support width of the 1-D B-spline (and of every mask in the bank).
    pub fn support_width(self) -> usize {
        match self {
            BankName::Haar => 1,
            BankName::Linear => 2,
        }
    }
}

/// Low-pass plus J high-pass tensor filters with per-band metadata.
#[derive(Debug, Clone)]
pub struct FilterBank2D {
    pub name: BankName,
    pub lowpass: Filter2D,
    pub highpass: Vec<Filter2D>,
    /// c_j: integral of the antiderivative profile attached to band j.
    pub band_constants: Vec<f64>,
    /// c_ij: the analogous constant for band i applied on top of the
    /// band-j profile (row i, column j).
    pub cross_constants: Vec<Vec<f64>>,
    /// Total differential order s_j = s0 + s1 per high-pass band.
    pub diff_orders: Vec<u32>,
    /// 1-D factor masks, index 0 the refinement mask.
    pub factors: Vec<Mask1D>,
    /// Per high-pass band, the (axis-0, axis-1) factor indices.
    pub band_factors: Vec<(usize, usize)>,
}

/// Construct one of the named tensor-product banks.
pub fn build_bank(name: BankName) -> FilterBank2D {
    let factors: Vec<Mask1D> = match name {
        BankName::Haar => vec![
            Mask1D {
                coeffs: vec![0.5, 0.5],
                moment: 0,
            },
            Mask1D {
                coeffs: vec![0.5, -0.5],
                moment: 1,
            },
        ],
        BankName::Linear => {
            let s = std::f64::consts::SQRT_2 / 4.0;
            vec![
                Mask1D {
                    coeffs: vec![0.25, 0.5, 0.25],
                    moment: 0,
                },
                Mask1D {
                    coeffs: vec![s, 0.0, -s],
                    moment: 1,
                },
                Mask1D {
                    coeffs: vec![-0.25, 0.5, -0.25],
                    moment: 2,
                },
            ]
        }
    };

    let lowpass = Filter2D::tensor(
        &factors[0].coeffs,
        0,
        &factors[0].coeffs,
        0,
    )
    .expect("low-pass tensor");

    let mut highpass = Vec::new();
    let mut band_factors = Vec::new();
    for j0 in 0..factors.len() {
        for j1 in 0..factors.len() {
            if j0 == 0 && j1 == 0 {
                continue;
            }
            let f = Filter2D::tensor(
                &factors[j0].coeffs,
                factors[j0].moment,
                &factors[j1].coeffs,
                factors[j1].moment,
            )
            .expect("high-pass tensor");
            highpass.push(f);
            band_factors.push((j0, j1));
        }
    }

    let band_constants: Vec<f64> = highpass
        .iter()
        .map(|f| compute_band_constant(f, name).expect("band constant").0)
        .collect();
    let cross_constants: Vec<Vec<f64>> = highpass
        .iter()
        .map(|fi| {
            highpass
                .iter()
                .map(|fj| compute_cross_constant(fi, fj, name).expect("cross constant"))
                .collect()
        })
        .collect();
    let diff_orders = highpass.iter().map(|f| f.total_order()).collect();

    FilterBank2D {
        name,
        lowpass,
        highpass,
        band_constants,
        cross_constants,
        diff_orders,
        factors,
        band_factors,
    }
}

impl FilterBank2D {
    /// Number of high-pass bands J.
    pub fn num_highpass(&self) -> usize {
        self.highpass.len()
    }

    /// All J+1 filters, low-pass first.
    pub fn all_filters(&self) -> impl Iterator<Item = &Filter2D> {
        std::iter::once(&self.lowpass).chain(self.highpass.iter())
    }

    /// Weight applied to band j of the first weighted transform at
    /// resolution n: c_j^{-1} (-1)^{s_j} 2^{(n-1) s_j}.
    pub fn lambda_prime(&self, j: usize, n: u32) -> f64 {
        let s = self.diff_orders[j];
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        sign * 2f64.powi(((n - 1) * s) as i32) / self.band_constants[j]
    }

    /// Weight applied to band (i, j) of the second weighted transform at
    /// resolution n: c_ij^{-1} (-1)^{s_i} 2^{(n-2) s_i}.
    ///
    /// The exponent pairs with the cross constant convention of
    /// `compute_cross_constant`; the combination is the unique weighting
    /// under which the transform of a sampled vector field converges to
    /// the corresponding derivatives (see the asymptotics tests).
    pub fn lambda_doubleprime(&self, i: usize, j: usize, n: u32) -> f64 {
        let s = self.diff_orders[i];
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        sign * 2f64.powi(((n - 2) * s) as i32) / self.cross_constants[i][j]
    }
}

/// Max residual of the two tight-frame filter identities over a uniform
/// `grid_points` x `grid_points` frequency grid on [-pi, pi)^2:
/// the squared symbols must sum to one, and the shifted cross terms must
/// cancel for every half-period shift.
pub fn verify_uep(bank: &FilterBank2D, grid_points: usize) -> Result<f64> {
    if grid_points < 8 {
        return Err(Error::argument("frequency grid needs at least 8 points"));
    }
    use std::f64::consts::PI;
    let shifts = [(0.0, PI), (PI, 0.0), (PI, PI)];
    let mut worst: f64 = 0.0;
    for a in 0..grid_points {
        for b in 0..grid_points {
            let xi0 = -PI + 2.0 * PI * a as f64 / grid_points as f64;
            let xi1 = -PI + 2.0 * PI * b as f64 / grid_points as f64;
            let mut unity = 0.0;
            for f in bank.all_filters() {
                unity += f.symbol(xi0, xi1).abs_sq();
            }
            worst = worst.max((unity - 1.0).abs());
            for &(n0, n1) in &shifts {
                let mut cross = C64::ZERO;
                for f in bank.all_filters() {
                    cross = cross.add(
                        f.symbol(xi0, xi1).mul(f.symbol(xi0 + n0, xi1 + n1).conj()),
                    );
                }
                worst = worst.max(cross.abs());
            }
        }
    }
    Ok(worst)
}

/// Richardson-extrapolated limit of `ratio(h)` over h = 2^-m, m = 8..=16.
/// Returns an error when the extrapolated tail does not settle.
fn richardson_limit(ratio: impl Fn(f64) -> C64, what: &str) -> Result<f64> {
    let ms = 8..=16u32;
    let seq: Vec<C64> = ms.map(|m| ratio(2f64.powi(-(m as i32)))).collect();
    // Standard Richardson table with step ratio 2.
    let mut table: Vec<Vec<C64>> = vec![seq.iter().map(|&v| v).collect()];
    for col in 1..seq.len() {
        let prev = &table[col - 1];
        let pow = 2f64.powi(col as i32);
        let mut next = Vec::new();
        for i in 1..prev.len() {
            let num = prev[i].scale(pow).sub(prev[i - 1]);
            next.push(num.scale(1.0 / (pow - 1.0)));
        }
        table.push(next);
    }
    let last = *table.last().unwrap().last().unwrap();
    // Convergence check: the two deepest diagonal entries must agree.
    let prev_diag = *table[table.len() - 2].last().unwrap();
    let spread = last.sub(prev_diag).abs() / last.abs().max(1e-300);
    if spread > 1e-6 || last.im.abs() > 1e-8 * last.abs().max(1e-300) {
        return Err(Error::numerical(format!(
            "symbol limit for {what} did not converge (spread {spread:.2e})"
        )));
    }
    Ok(last.re)
}

/// Band constant of a high-pass filter: the limit of
/// q̂(xi/2) hatphi(xi/2) / (i xi0)^{s0} (i xi1)^{s1} as xi -> 0 along the
/// diagonal, which equals the integral of the antiderivative profile the
/// band samples. Errors on a low-pass input and on non-convergence.
pub fn compute_band_constant(filter: &Filter2D, name: BankName) -> Result<(f64, (u32, u32))> {
    if !filter.is_highpass() {
        return Err(Error::argument(
            "band constant requires a high-pass filter (nonzero moment vector)",
        ));
    }
    let (s0, s1) = filter.moments();
    let c = richardson_limit(
        |h| {
            let q = filter.symbol(h / 2.0, h / 2.0);
            let phi = name.phi_hat_1d(h / 2.0).mul(name.phi_hat_1d(h / 2.0));
            let denom = C64::i_omega_pow(h, s0).mul(C64::i_omega_pow(h, s1));
            q.mul(phi).div(denom)
        },
        "band constant",
    )?;
    Ok((c, (s0, s1)))
}

/// Cross constant c_ij: the symbol-product limit of band i taken against
/// the normalized band-j profile, with the arguments at quarter and half
/// frequency so that the product transforms exactly like the composed
/// two-stage filter.
pub fn compute_cross_constant(
    filter_i: &Filter2D,
    filter_j: &Filter2D,
    name: BankName,
) -> Result<f64> {
    if !filter_i.is_highpass() || !filter_j.is_highpass() {
        return Err(Error::argument("cross constant requires high-pass filters"));
    }
    let (c_j, (sj0, sj1)) = compute_band_constant(filter_j, name)?;
    let (si0, si1) = filter_i.moments();
    richardson_limit(
        |h| {
            let qi = filter_i.symbol(h / 4.0, h / 4.0);
            // hatphi_j(xi/2) = q̂_j(xi/4) hatphi(xi/4) / (i xi/2)^{s_j}
            let qj = filter_j.symbol(h / 4.0, h / 4.0);
            let phi = name.phi_hat_1d(h / 4.0).mul(name.phi_hat_1d(h / 4.0));
            let denom_j = C64::i_omega_pow(h / 2.0, sj0).mul(C64::i_omega_pow(h / 2.0, sj1));
            let phi_j = qj.mul(phi).div(denom_j).scale(1.0 / c_j);
            let denom_i = C64::i_omega_pow(h, si0).mul(C64::i_omega_pow(h, si1));
            qi.mul(phi_j).div(denom_i)
        },
        "cross constant",
    )
}
