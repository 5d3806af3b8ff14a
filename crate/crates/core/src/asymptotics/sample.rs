//! Sampling operators: inner products of smooth fields against scaled
//! kernel profiles, per grid point.
//!
//! The image sample at k is 2^n <u, phi_{n,k}> with phi_{n,k} the dyadic
//! dilate of the B-spline; the vector-field sample uses the normalized
//! band profile at the half scale. In cell coordinates t = 2^n x - k both
//! reduce to sums of per-cell Gauss-Legendre quadratures of
//! u(2^-n (t+k)) against a fixed polynomial table, and because every
//! catalog field is a short sum of tensor products the 2-D quadrature
//! factorizes into two 1-D passes.

use crate::asymptotics::dd::Dd;
use crate::asymptotics::field::{Axis1D, SmoothField, VectorField};
use crate::asymptotics::grid::GridSpec;
use crate::asymptotics::quad::{gauss_legendre_unit, GaussRule, Pp1};
use crate::error::{Error, Result};
use crate::framelet::bank::{BankName, FilterBank2D};

/// Per-axis profile data for one 1-D filter factor.
#[derive(Debug, Clone)]
pub struct FactorProfile {
    pub moment: u32,
    /// The framelet profile (for factor 0, the B-spline itself).
    pub psi: Pp1,
    /// Antiderivative profile phi_m with D^s phi_m = psi_m; equals the
    /// B-spline for factor 0. Knots at half integers.
    pub profile: Pp1,
    /// Integral of `profile`.
    pub c: Dd,
    /// Centroid of `profile`.
    pub centroid: Dd,
}

/// Per-axis profile for a two-stage band pair (filter i over profile j).
#[derive(Debug, Clone)]
pub struct CrossProfile {
    pub order: u32,
    /// phi_ij axis factor, knots at quarter integers.
    pub profile: Pp1,
    pub c: Dd,
    pub centroid: Dd,
}

/// Exact double-double profile tables for one filter bank.
#[derive(Debug, Clone)]
pub struct BankProfiles {
    pub name: BankName,
    /// Kernel support width in grid cells.
    pub support: usize,
    /// 1-D masks lifted to double-double (index 0 = refinement mask).
    pub masks: Vec<Vec<Dd>>,
    pub factors: Vec<FactorProfile>,
    /// cross[i][j] for axis factor pairs.
    pub cross: Vec<Vec<CrossProfile>>,
    /// Per 2-D high-pass band, the (axis0, axis1) factor indices.
    pub band_factors: Vec<(usize, usize)>,
    /// Total differential order per 2-D band.
    pub orders: Vec<u32>,
}

/// Residual bound for the right-edge decay of antiderivative profiles.
const EDGE_TOL: f64 = 1e-8;

fn antidiff_with_checks(psi: &Pp1, order: u32, what: &str) -> Result<Pp1> {
    let mut cur = psi.clone();
    for stage in 0..order {
        let edge = cur.integral().to_f64().abs();
        if edge > EDGE_TOL {
            return Err(Error::numerical(format!(
                "{what}: antiderivative stage {stage} leaves edge residual {edge:e}; \
                 moment metadata is wrong"
            )));
        }
        cur = cur.antiderivative();
    }
    Ok(cur)
}

impl BankProfiles {
    pub fn build(bank: &FilterBank2D) -> Result<Self> {
        let phi = match bank.name {
            BankName::Haar => Pp1::bspline1(),
            BankName::Linear => Pp1::bspline2(),
        };
        // lift masks to double-double; the linear bank's sqrt(2)/4 needs
        // a full-precision square root
        let masks: Vec<Vec<Dd>> = bank
            .factors
            .iter()
            .map(|m| {
                m.coeffs
                    .iter()
                    .map(|&c| {
                        let target = std::f64::consts::SQRT_2 / 4.0;
                        if (c.abs() - target).abs() < 1e-15 && c.abs() != 0.25 {
                            let root = Dd::from_f64(2.0).sqrt().scale_pow2(0.25);
                            if c > 0.0 {
                                root
                            } else {
                                -root
                            }
                        } else {
                            Dd::from_f64(c)
                        }
                    })
                    .collect()
            })
            .collect();

        let mut factors = Vec::new();
        for (m, mask) in masks.iter().enumerate() {
            let moment = bank.factors[m].moment;
            // psi_m = 2 sum_k q[k] phi(2x - k); for m = 0 this refines phi
            // onto half-integer knots without changing it
            let taps: Vec<(Dd, i64)> = mask
                .iter()
                .enumerate()
                .map(|(k, &c)| (c.scale_pow2(2.0), k as i64))
                .collect();
            let psi = phi.dilate_combine(&taps);
            let profile = antidiff_with_checks(&psi, moment, &format!("factor {m}"))?;
            let c = profile.integral();
            if c.to_f64().abs() < 1e-12 {
                return Err(Error::numerical(format!(
                    "factor {m}: profile integral vanishes"
                )));
            }
            let centroid = profile.first_moment() / c;
            factors.push(FactorProfile {
                moment,
                psi,
                profile,
                c,
                centroid,
            });
        }

        // cross profiles: filter i (quarter-shifted taps) applied to the
        // normalized profile of factor j, then antidifferentiated
        let mut cross = Vec::new();
        for (i, mask_i) in masks.iter().enumerate() {
            let mut row = Vec::new();
            for fj in &factors {
                let cj_inv = fj.c.recip();
                let taps: Vec<(Dd, i64)> = mask_i
                    .iter()
                    .enumerate()
                    .map(|(l, &c)| ((c * cj_inv).scale_pow2(2.0), l as i64))
                    .collect();
                let g = fj.profile.dilate_combine(&taps);
                let order = bank.factors[i].moment;
                let profile = antidiff_with_checks(&g, order, &format!("cross {i}"))?;
                let c = profile.integral();
                if c.to_f64().abs() < 1e-12 {
                    return Err(Error::numerical(format!(
                        "cross profile ({i}) integral vanishes"
                    )));
                }
                let centroid = profile.first_moment() / c;
                row.push(CrossProfile {
                    order,
                    profile,
                    c,
                    centroid,
                });
            }
            cross.push(row);
        }

        Ok(BankProfiles {
            name: bank.name,
            support: bank.name.support_width(),
            masks,
            factors,
            cross,
            band_factors: bank.band_factors.clone(),
            orders: bank.diff_orders.clone(),
        })
    }

    pub fn num_bands(&self) -> usize {
        self.band_factors.len()
    }

    /// Per-axis differential orders of 2-D band j.
    pub fn band_orders(&self, j: usize) -> (u32, u32) {
        let (a, b) = self.band_factors[j];
        (self.factors[a].moment, self.factors[b].moment)
    }

    /// The vector field (D_1 u, .., D_J u) matched to this bank.
    pub fn derivative_field(&self, u: &SmoothField) -> VectorField {
        let orders: Vec<(u32, u32)> = (0..self.num_bands()).map(|j| self.band_orders(j)).collect();
        VectorField::derivatives_of(u, &orders)
    }
}

/// Number of Gauss panels per dyadic cell: refined at coarse resolutions
/// so the effective panel width never exceeds 2^-7 (the Gaussian catalog
/// field needs that many points per axis for the order-6 rule to reach
/// the identity tolerances).
pub fn default_subdiv(n: u32) -> usize {
    if n >= 7 {
        1
    } else {
        1 << (7 - n)
    }
}

/// Per-axis quadrature table: entry positions are offsets from the grid
/// index k in cell units, entries fold the Gauss weight and the kernel
/// polynomial value together.
#[derive(Debug, Clone)]
struct AxisKernel {
    offsets: Vec<Dd>,
    values: Vec<Dd>,
}

fn build_axis_kernel(
    kernel: impl Fn(Dd) -> Dd,
    cells: usize,
    subdiv: usize,
    rule: &GaussRule,
) -> AxisKernel {
    let mut offsets = Vec::new();
    let mut values = Vec::new();
    let inv_sub = 1.0 / subdiv as f64; // subdiv is a power of two
    for cell in 0..cells {
        for panel in 0..subdiv {
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let frac = (*x + Dd::from_f64(panel as f64)).scale_pow2(inv_sub);
                let t = Dd::from_f64(cell as f64) + frac;
                offsets.push(t);
                values.push(w.scale_pow2(inv_sub) * kernel(t));
            }
        }
    }
    AxisKernel { offsets, values }
}

/// Double-double samples on the square [0, side)^2 of grid indices.
#[derive(Debug, Clone)]
pub struct SampledArray {
    pub n: u32,
    pub side: usize,
    pub data: Vec<Dd>,
}

impl SampledArray {
    pub fn get(&self, k0: i64, k1: i64) -> Dd {
        debug_assert!(k0 >= 0 && (k0 as usize) < self.side);
        debug_assert!(k1 >= 0 && (k1 as usize) < self.side);
        self.data[k0 as usize * self.side + k1 as usize]
    }

    /// Value at k, restricted to the interior index set K_n.
    pub fn get_checked(&self, k0: i64, k1: i64, grid: &GridSpec) -> Result<f64> {
        if !grid.contains_k(k0, k1) {
            return Err(Error::argument(format!(
                "index ({k0},{k1}) lies outside the interior set at n={}",
                grid.n
            )));
        }
        Ok(self.get(k0, k1).to_f64())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|d| d.to_f64()).collect()
    }
}

fn sample_axis(factor: &Axis1D, kernel: &AxisKernel, n: u32, side: usize) -> Vec<Dd> {
    let scale = 2f64.powi(-(n as i32));
    let mut out = Vec::with_capacity(side);
    for k in 0..side {
        let mut acc = Dd::ZERO;
        let kd = Dd::from_f64(k as f64);
        for (t, v) in kernel.offsets.iter().zip(&kernel.values) {
            let x = (kd + *t).scale_pow2(scale);
            acc = acc + *v * factor.eval(x);
        }
        out.push(acc);
    }
    out
}

fn sample_with_kernels(
    field: &SmoothField,
    k0: &AxisKernel,
    k1: &AxisKernel,
    n: u32,
    side: usize,
) -> SampledArray {
    let mut data = vec![Dd::ZERO; side * side];
    for (g, h) in field.terms() {
        let ax0 = sample_axis(g, k0, n, side);
        let ax1 = sample_axis(h, k1, n, side);
        for (r, g_val) in ax0.iter().enumerate() {
            let row = &mut data[r * side..(r + 1) * side];
            for (out, h_val) in row.iter_mut().zip(&ax1) {
                *out = *out + *g_val * *h_val;
            }
        }
    }
    SampledArray { n, side, data }
}

/// Image samples (T_n u)[k] = 2^n <u, phi_{n,k}> for every k with the
/// kernel support inside the square; valid indices cover M_n.
pub fn sample_tn(
    field: &SmoothField,
    profiles: &BankProfiles,
    n: u32,
    subdiv: usize,
) -> Result<SampledArray> {
    if n < 3 {
        return Err(Error::argument("sampling needs n >= 3"));
    }
    let w = profiles.support;
    let side = (1usize << n) - w + 1;
    let rule = gauss_legendre_unit(6);
    let phi = &profiles.factors[0].profile;
    // the factor-0 profile sits on half-integer knots already; in cell
    // units t the kernel is phi(t) itself
    let kernel = build_axis_kernel(|t| phi.eval(t), w, subdiv, &rule);
    Ok(sample_with_kernels(field, &kernel, &kernel, n, side))
}

/// One band of the vector-field samples
/// (S_n v)[j; k] = 2^n <v_j, c_j^{-1} phi_{j, n-1, k}>; valid indices run
/// to 2^n - 2w per axis.
pub fn sample_sn_band(
    component: &SmoothField,
    profiles: &BankProfiles,
    band: usize,
    n: u32,
    subdiv: usize,
) -> Result<SampledArray> {
    let w = profiles.support;
    let side = (1usize << n) + 1 - 2 * w;
    let rule = gauss_legendre_unit(6);
    let (f0, f1) = profiles.band_factors[band];
    let make = |fac: usize| {
        let p = &profiles.factors[fac];
        let c_inv_half = p.c.recip().scale_pow2(0.5);
        build_axis_kernel(
            move |t| p.profile.eval(t.scale_pow2(0.5)) * c_inv_half,
            2 * w,
            subdiv,
            &rule,
        )
    };
    let k0 = make(f0);
    let k1 = make(f1);
    Ok(sample_with_kernels(component, &k0, &k1, n, side))
}

/// All J bands of S_n v.
pub fn sample_sn(
    v: &VectorField,
    profiles: &BankProfiles,
    n: u32,
    subdiv: usize,
) -> Result<Vec<SampledArray>> {
    if v.comps.len() != profiles.num_bands() {
        return Err(Error::argument(format!(
            "vector field has {} components, bank needs {}",
            v.comps.len(),
            profiles.num_bands()
        )));
    }
    v.comps
        .iter()
        .enumerate()
        .map(|(j, comp)| sample_sn_band(comp, profiles, j, n, subdiv))
        .collect()
}

/// Samples against the two-stage profile phi_{ij} at scale n-2:
/// 2^n <g, c_ij^{-1} phi_{ij, n-2, k}>. Used to verify the second-stage
/// identity; valid indices run to 2^n - 3w per axis.
pub fn sample_cross_band(
    component: &SmoothField,
    profiles: &BankProfiles,
    band_i: usize,
    band_j: usize,
    n: u32,
    subdiv: usize,
) -> Result<SampledArray> {
    let w = profiles.support;
    let side = (1usize << n) + 1 - 3 * w;
    let rule = gauss_legendre_unit(6);
    let (i0, i1) = profiles.band_factors[band_i];
    let (j0, j1) = profiles.band_factors[band_j];
    let make = |fi: usize, fj: usize| {
        let p = &profiles.cross[fi][fj];
        let c_inv_quarter = p.c.recip().scale_pow2(0.25);
        build_axis_kernel(
            move |t| p.profile.eval(t.scale_pow2(0.25)) * c_inv_quarter,
            3 * w,
            subdiv,
            &rule,
        )
    };
    let k0 = make(i0, j0);
    let k1 = make(i1, j1);
    Ok(sample_with_kernels(component, &k0, &k1, n, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framelet::bank::{build_bank, BankName};

    fn profiles(name: BankName) -> BankProfiles {
        BankProfiles::build(&build_bank(name)).unwrap()
    }

    #[test]
    fn profile_constants_match_richardson_limits() {
        // the exact piecewise-polynomial integrals agree with the
        // Fourier-side Richardson limits computed by the bank builder
        for name in [BankName::Haar, BankName::Linear] {
            let bank = build_bank(name);
            let p = profiles(name);
            for (j, &(f0, f1)) in p.band_factors.iter().enumerate() {
                let c_pp = (p.factors[f0].c * p.factors[f1].c).to_f64();
                let c_fourier = bank.band_constants[j];
                assert!(
                    (c_pp - c_fourier).abs() <= 1e-10 * c_fourier.abs(),
                    "{name} band {j}: {c_pp} vs {c_fourier}"
                );
            }
            for i in 0..p.num_bands() {
                for j in 0..p.num_bands() {
                    let (i0, i1) = p.band_factors[i];
                    let (j0, j1) = p.band_factors[j];
                    let c_pp = (p.cross[i0][j0].c * p.cross[i1][j1].c).to_f64();
                    let c_fourier = bank.cross_constants[i][j];
                    assert!(
                        (c_pp - c_fourier).abs() <= 1e-9 * c_fourier.abs(),
                        "{name} cross ({i},{j}): {c_pp} vs {c_fourier}"
                    );
                }
            }
        }
    }

    #[test]
    fn haar_profile_is_halved_hat() {
        let p = profiles(BankName::Haar);
        let f = &p.factors[1];
        assert_eq!(f.moment, 1);
        assert!((f.c.to_f64() - 0.25).abs() < 1e-28);
        assert!((f.centroid.to_f64() - 0.5).abs() < 1e-28);
    }

    #[test]
    fn constant_field_samples_to_one() {
        for name in [BankName::Haar, BankName::Linear] {
            let p = profiles(name);
            let u = SmoothField::constant(1.0);
            let t = sample_tn(&u, &p, 5, default_subdiv(5)).unwrap();
            for v in &t.data {
                assert!((v.to_f64() - 1.0).abs() < 1e-25);
            }
        }
    }

    #[test]
    fn linear_field_samples_at_centroid() {
        // for u(x) = x0, T_n u equals the centroid coordinate of the
        // kernel, 2^-n (k + centroid)
        let p = profiles(BankName::Haar);
        let u = SmoothField::affine(1.0, 0.0, 0.0);
        let n = 4;
        let t = sample_tn(&u, &p, n, default_subdiv(n)).unwrap();
        for k in 0..t.side as i64 {
            let want = (k as f64 + 0.5) / 16.0;
            let got = t.get(k, 0).to_f64();
            assert!((got - want).abs() < 1e-25, "{got} vs {want}");
        }
    }

    #[test]
    fn zero_field_samples_to_zero() {
        let p = profiles(BankName::Linear);
        let z = SmoothField::constant(0.0);
        let t = sample_tn(&z, &p, 4, default_subdiv(4)).unwrap();
        assert!(t.data.iter().all(|v| v.to_f64() == 0.0));
    }

    #[test]
    fn sn_normalization_on_constants() {
        // constant component -> the same constant back
        for name in [BankName::Haar, BankName::Linear] {
            let p = profiles(name);
            let comp = SmoothField::constant(3.5);
            let s = sample_sn_band(&comp, &p, 0, 5, default_subdiv(5)).unwrap();
            for v in &s.data {
                assert!((v.to_f64() - 3.5).abs() < 1e-24);
            }
        }
    }

    #[test]
    fn checked_access_respects_interior_set() {
        let p = profiles(BankName::Haar);
        let grid = GridSpec::new(4, 1).unwrap();
        let u = SmoothField::sin_sin();
        let t = sample_tn(&u, &p, 4, default_subdiv(4)).unwrap();
        assert!(t.get_checked(0, 0, &grid).is_ok());
        assert!(t.get_checked(grid.k_max() + 1, 0, &grid).is_err());
    }

    #[test]
    fn smooth_component_tracked_by_sn() {
        // sampled values of a smooth component approach the component
        let p = profiles(BankName::Linear);
        let comp = SmoothField::sin_sin();
        let mut last = f64::INFINITY;
        for n in [4u32, 5, 6] {
            let grid = GridSpec::new(n, 2).unwrap();
            let s = sample_sn_band(&comp, &p, 0, n, default_subdiv(n)).unwrap();
            let scale = 2f64.powi(-(n as i32));
            // compare at the profile centroid
            let (f0, f1) = p.band_factors[0];
            let c0 = 2.0 * p.factors[f0].centroid.to_f64();
            let c1 = 2.0 * p.factors[f1].centroid.to_f64();
            let mut sup = 0.0f64;
            for (k0, k1) in grid.k_iter() {
                let x0 = scale * (k0 as f64 + c0);
                let x1 = scale * (k1 as f64 + c1);
                let err = (s.get(k0, k1).to_f64() - comp.eval_f64(x0, x1)).abs();
                sup = sup.max(err);
            }
            assert!(sup < last, "n={n}: {sup} !< {last}");
            last = sup;
        }
    }
}
