//! Splitting solver for the two-transform restoration model
//!
//!   min_{u,v}  nu1 ||W'u - v||_1 + nu2 ||W''v||_q^q + 1/2 ||Au - f||_2^2
//!
//! with q in {1, 2}, plus presets reproducing the classical analysis,
//! synthesis, balanced, wavelet-packet and two-layer formulations.
//!
//! W' here is the full unweighted single-level tight-frame transform
//! (low-pass band included) and W'' applies the same transform to every
//! band of v. That makes W'^T W' = W''^T W'' = I, so each subproblem of
//! the alternating scheme has an exact closed form. The penalties touch
//! only high-pass bands: the low-pass channel is transported through the
//! splitting with a zero threshold.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framelet::bank::FilterBank2D;
use crate::framelet::transform::{
    analyze_single, cross_analyze, cross_synthesize, synthesize, BandLabel, CoefficientStack,
};
use crate::image::Image;
use crate::imageio::psnr;
use crate::operators::{operator_norm_sq, DegradationOp};

/// Objective values above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Model formulation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full two-transform model.
    General,
    /// v frozen at zero: single-transform sparsity on W'u.
    Analysis,
    /// l1 on coefficients v with u = W^T v (proximal gradient).
    Synthesis,
    /// Synthesis plus a range-misfit penalty a ||(I - W W^T) v||^2.
    Balanced,
    /// Two-layer cascade with the same transform at both stages; solved
    /// by the general scheme with q = 1.
    Packet,
    /// General two-layer model with q = 1.
    TwoLayer,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Variant::General),
            "analysis" => Ok(Variant::Analysis),
            "synthesis" => Ok(Variant::Synthesis),
            "balanced" => Ok(Variant::Balanced),
            "packet" => Ok(Variant::Packet),
            "twolayer" => Ok(Variant::TwoLayer),
            other => Err(Error::config(format!("unknown model variant '{other}'"))),
        }
    }
}

/// Shrinkage flavor for the l1 terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkMode {
    /// Plain entrywise soft thresholding.
    Anisotropic,
    /// Per-pixel group shrinkage of the band vector.
    Isotropic,
}

impl FromStr for ShrinkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anisotropic" => Ok(ShrinkMode::Anisotropic),
            "isotropic" => Ok(ShrinkMode::Isotropic),
            other => Err(Error::config(format!("unknown shrink mode '{other}'"))),
        }
    }
}

/// Model parameters and solver controls.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub variant: Variant,
    pub nu1: f64,
    pub nu2: f64,
    pub mu: f64,
    /// Multiplier step length, 0 <= delta < 1.
    pub delta: f64,
    /// Exponent of the second penalty, 1 or 2.
    pub q: u8,
    pub shrink_mode: ShrinkMode,
    pub max_iter: usize,
    /// Relative u-change stopping threshold.
    pub tol: f64,
    /// Range-misfit weight of the balanced model (0 recovers synthesis).
    pub balance: f64,
    /// Extend the first l1 penalty to the low-pass band. Off by default;
    /// used when comparing against the balanced model's large-a limit,
    /// whose coefficient penalty covers every band.
    pub penalize_lowpass: bool,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mu <= 0.0 {
            return Err(Error::config("mu must be positive"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::config("delta must satisfy 0 <= delta < 1"));
        }
        if self.nu1 < 0.0 || self.nu2 < 0.0 {
            return Err(Error::config("nu1 and nu2 must be nonnegative"));
        }
        if self.q != 1 && self.q != 2 {
            return Err(Error::config("q must be 1 or 2"));
        }
        if self.tol <= 0.0 {
            return Err(Error::config("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        if self.balance < 0.0 {
            return Err(Error::config("balance weight must be nonnegative"));
        }
        Ok(())
    }
}

/// Default parameters for each variant. Callers override fields freely;
/// for the balanced model `balance` is the a weight and `nu1` plays the
/// coefficient-penalty role.
pub fn preset(variant: Variant) -> ModelSpec {
    let mut spec = ModelSpec {
        variant,
        nu1: 0.2,
        nu2: 0.2,
        mu: 1.0,
        delta: 0.9,
        q: 1,
        shrink_mode: ShrinkMode::Anisotropic,
        max_iter: 500,
        tol: 1e-6,
        balance: 0.0,
        penalize_lowpass: false,
    };
    match variant {
        Variant::Balanced => spec.balance = 1.0,
        Variant::Packet | Variant::TwoLayer => spec.q = 1,
        _ => {}
    }
    spec
}

/// Iterates of the splitting scheme.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: Image,
    pub v: CoefficientStack,
    pub d: CoefficientStack,
    pub e: CoefficientStack,
    pub mult_p: CoefficientStack,
    pub mult_q: CoefficientStack,
    pub iter: usize,
    pub objective: f64,
    pub primal_residuals: (f64, f64),
}

impl SolverState {
    /// All-zero initial state matching the shape of `f` and the bank.
    pub fn zeros(f: &Image, bank: &FilterBank2D) -> Self {
        let zero_img = Image::zeros(f.width(), f.height());
        let single = analyze_single(&zero_img, bank);
        let cross = cross_analyze(&single, bank);
        SolverState {
            u: zero_img,
            v: single.clone(),
            d: single.clone(),
            e: cross.clone(),
            mult_p: single,
            mult_q: cross,
            iter: 0,
            objective: 0.0,
            primal_residuals: (0.0, 0.0),
        }
    }
}

/// One per-iteration diagnostics row.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub res_d: f64,
    pub res_e: f64,
    pub psnr: Option<f64>,
}

/// Per-iteration objective and residual table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub records: Vec<IterationRecord>,
}

impl Diagnostics {
    pub fn csv_header(with_psnr: bool) -> Vec<&'static str> {
        if with_psnr {
            vec!["iter", "objective", "res_d", "res_e", "psnr"]
        } else {
            vec!["iter", "objective", "res_d", "res_e"]
        }
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.records
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.iter.to_string(),
                    format!("{:.12e}", r.objective),
                    format!("{:.12e}", r.res_d),
                    format!("{:.12e}", r.res_e),
                ];
                if let Some(p) = r.psnr {
                    row.push(format!("{:.6}", p));
                }
                row
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Shrinkage
// ---------------------------------------------------------------------------

#[inline]
fn shrink(x: f64, lam: f64) -> f64 {
    if x > lam {
        x - lam
    } else if x < -lam {
        x + lam
    } else {
        0.0
    }
}

/// Soft-thresholding operator on a value vector. Anisotropic mode shrinks
/// each entry; isotropic mode treats the slice as one Euclidean vector and
/// scales it by max(||x|| - lam, 0) / ||x||.
pub fn soft_threshold(x: &[f64], lam: f64, mode: ShrinkMode) -> Result<Vec<f64>> {
    if lam < 0.0 {
        return Err(Error::argument("threshold must be nonnegative"));
    }
    Ok(match mode {
        ShrinkMode::Anisotropic => x.iter().map(|&v| shrink(v, lam)).collect(),
        ShrinkMode::Isotropic => {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let factor = if norm > lam { (norm - lam) / norm } else { 0.0 };
            x.iter().map(|&v| factor * v).collect()
        }
    })
}

/// Which bands of a first-stage stack carry the l1 penalty.
fn v_penalized(spec: &ModelSpec, stack: &CoefficientStack) -> Vec<bool> {
    stack
        .labels
        .iter()
        .map(|l| match l {
            BandLabel::Wavelet { j, .. } => *j > 0 || spec.penalize_lowpass,
            BandLabel::Cross { .. } => true,
        })
        .collect()
}

/// Which bands of the second-stage stack are penalized: those whose outer
/// filter index is high-pass.
fn e_penalized(stack: &CoefficientStack) -> Vec<bool> {
    stack
        .labels
        .iter()
        .map(|l| match l {
            BandLabel::Cross { i, .. } => *i > 0,
            BandLabel::Wavelet { j, .. } => *j > 0,
        })
        .collect()
}

/// Shrink the penalized bands of `z` with threshold `lam`; other bands
/// pass through unchanged.
fn threshold_stack(
    z: &CoefficientStack,
    lam: f64,
    penalized: &[bool],
    mode: ShrinkMode,
) -> CoefficientStack {
    let mut out = z.clone();
    match mode {
        ShrinkMode::Anisotropic => {
            for (band, &pen) in out.bands.iter_mut().zip(penalized) {
                if pen {
                    for v in band.pixels_mut() {
                        *v = shrink(*v, lam);
                    }
                }
            }
        }
        ShrinkMode::Isotropic => {
            let idx: Vec<usize> = penalized
                .iter()
                .enumerate()
                .filter_map(|(i, &p)| p.then_some(i))
                .collect();
            let npx = z.shape.0 * z.shape.1;
            for p in 0..npx {
                let norm: f64 = idx
                    .iter()
                    .map(|&b| {
                        let v = z.bands[b].pixels()[p];
                        v * v
                    })
                    .sum::<f64>()
                    .sqrt();
                let factor = if norm > lam { (norm - lam) / norm } else { 0.0 };
                for &b in &idx {
                    out.bands[b].pixels_mut()[p] = factor * z.bands[b].pixels()[p];
                }
            }
        }
    }
    out
}

/// Scale the penalized bands by `factor` (the closed form of the q = 2
/// update); other bands pass through.
fn scale_penalized(z: &CoefficientStack, factor: f64, penalized: &[bool]) -> CoefficientStack {
    let mut out = z.clone();
    for (band, &pen) in out.bands.iter_mut().zip(penalized) {
        if pen {
            for v in band.pixels_mut() {
                *v *= factor;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

fn penalty_norm(
    stack: &CoefficientStack,
    penalized: &[bool],
    mode: ShrinkMode,
    exponent: u8,
) -> f64 {
    match (exponent, mode) {
        // sum of squares: grouping is immaterial
        (2, _) => stack
            .bands
            .iter()
            .zip(penalized)
            .filter(|(_, &p)| p)
            .map(|(b, _)| b.norm_sq())
            .sum(),
        (_, ShrinkMode::Anisotropic) => stack
            .bands
            .iter()
            .zip(penalized)
            .filter(|(_, &p)| p)
            .map(|(b, _)| b.norm_l1())
            .sum(),
        (_, ShrinkMode::Isotropic) => {
            let idx: Vec<usize> = penalized
                .iter()
                .enumerate()
                .filter_map(|(i, &p)| p.then_some(i))
                .collect();
            let npx = stack.shape.0 * stack.shape.1;
            (0..npx)
                .map(|p| {
                    idx.iter()
                        .map(|&b| {
                            let v = stack.bands[b].pixels()[p];
                            v * v
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .sum()
        }
    }
}

/// Value of the model objective at (u, v):
/// nu1 ||W'u - v||_1 + nu2 ||W''v||_q^q + 1/2 ||Au - f||^2, with the
/// penalties restricted to high-pass bands and mixed pixelwise l2 norms
/// in isotropic mode.
pub fn objective_value(
    u: &Image,
    v: &CoefficientStack,
    spec: &ModelSpec,
    a_op: &DegradationOp,
    f: &Image,
    bank: &FilterBank2D,
) -> Result<f64> {
    if !u.same_shape(f) {
        return Err(Error::argument("u and f must share a shape"));
    }
    let wpu = analyze_single(u, bank);
    if wpu.num_bands() != v.num_bands() {
        return Err(Error::argument("v has the wrong number of bands"));
    }
    let r = wpu.sub(v);
    let term1 = spec.nu1 * penalty_norm(&r, &v_penalized(spec, &r), spec.shrink_mode, 1);
    let wv = cross_analyze(v, bank);
    let term2 = spec.nu2 * penalty_norm(&wv, &e_penalized(&wv), spec.shrink_mode, spec.q);
    let resid = a_op.apply(u)?.sub(f);
    Ok(term1 + term2 + 0.5 * resid.norm_sq())
}

// ---------------------------------------------------------------------------
// ADMM iteration
// ---------------------------------------------------------------------------

/// One sweep of the six closed-form updates, in order: u, v, d, e, then
/// both multipliers. The analysis variant keeps v frozen at zero.
pub fn admm_step(
    state: &mut SolverState,
    spec: &ModelSpec,
    a_op: &DegradationOp,
    f: &Image,
    bank: &FilterBank2D,
) -> Result<()> {
    let lam1 = spec.nu1 / spec.mu;

    // u <- (A^T A + mu I)^{-1} (A^T f + mu W'^T (d - p))
    let rhs = a_op
        .adjoint(f)?
        .add(&synthesize(&state.d.sub(&state.mult_p), bank)?.scale(spec.mu));
    state.u = a_op.normal_solve(spec.mu, &rhs)?;

    // v <- T_{nu1/mu}(W''^T (e - q) - d) + d
    if spec.variant != Variant::Analysis {
        let z = cross_synthesize(&state.e.sub(&state.mult_q), bank)?;
        let arg = z.sub(&state.d);
        let pen = v_penalized(spec, &arg);
        state.v = threshold_stack(&arg, lam1, &pen, spec.shrink_mode).add(&state.d);
    }

    // d <- T_{nu1/mu}(W'u + p - v) + v
    let wpu = analyze_single(&state.u, bank);
    let arg = wpu.add(&state.mult_p).sub(&state.v);
    let pen = v_penalized(spec, &arg);
    state.d = threshold_stack(&arg, lam1, &pen, spec.shrink_mode).add(&state.v);

    // e <- T_{nu2/mu}(W''v + q)            (q = 1)
    //      mu/(2 nu2 + mu) (W''v + q)      (q = 2)
    let wv = cross_analyze(&state.v, bank);
    let t = wv.add(&state.mult_q);
    let pen_e = e_penalized(&t);
    state.e = if spec.q == 1 {
        threshold_stack(&t, spec.nu2 / spec.mu, &pen_e, spec.shrink_mode)
    } else {
        scale_penalized(&t, spec.mu / (2.0 * spec.nu2 + spec.mu), &pen_e)
    };

    // multiplier ascent
    let rd = wpu.sub(&state.d);
    let re = wv.sub(&state.e);
    state.mult_p.axpy(spec.delta, &rd);
    state.mult_q.axpy(spec.delta, &re);
    state.primal_residuals = (rd.norm(), re.norm());
    state.iter += 1;
    Ok(())
}

/// Run the solver for `spec` on observed data `f` with operator `a_op`.
/// Returns the restored image and the per-iteration diagnostics table;
/// `truth` adds a PSNR column.
pub fn solve(
    f: &Image,
    a_op: &DegradationOp,
    spec: &ModelSpec,
    bank: &FilterBank2D,
    truth: Option<&Image>,
) -> Result<(Image, Diagnostics)> {
    spec.validate()?;
    if a_op.shape() != (f.width(), f.height()) {
        return Err(Error::argument("operator and data shapes differ"));
    }
    match spec.variant {
        Variant::Synthesis | Variant::Balanced => prox_gradient_solve(f, a_op, spec, bank, truth),
        _ => admm_solve(f, a_op, spec, bank, truth),
    }
}

fn admm_solve(
    f: &Image,
    a_op: &DegradationOp,
    spec: &ModelSpec,
    bank: &FilterBank2D,
    truth: Option<&Image>,
) -> Result<(Image, Diagnostics)> {
    let mut state = SolverState::zeros(f, bank);
    let mut diagnostics = Diagnostics::default();
    for k in 1..=spec.max_iter {
        let u_prev = state.u.clone();
        admm_step(&mut state, spec, a_op, f, bank)?;
        let objective = objective_value(&state.u, &state.v, spec, a_op, f, bank)?;
        state.objective = objective;
        if !objective.is_finite() || objective > DIVERGENCE_LIMIT {
            return Err(Error::numerical(format!(
                "objective diverged at iteration {k}: {objective:e}"
            )));
        }
        diagnostics.records.push(IterationRecord {
            iter: k,
            objective,
            res_d: state.primal_residuals.0,
            res_e: state.primal_residuals.1,
            psnr: match truth {
                Some(t) => Some(psnr(&state.u, t, 255.0)?),
                None => None,
            },
        });
        let change = state.u.sub(&u_prev).norm();
        if change <= spec.tol * u_prev.norm().max(1e-30) {
            break;
        }
    }
    Ok((state.u, diagnostics))
}

// ---------------------------------------------------------------------------
// Synthesis / balanced proximal gradient
// ---------------------------------------------------------------------------

/// Largest eigenvalue of v -> W W^T v estimated by power iteration
/// (exactly 1 for a tight bank; estimated rather than assumed).
fn frame_norm_sq(bank: &FilterBank2D, width: usize, height: usize, iterations: usize) -> f64 {
    let seed = Image::from_fn(width, height, |r, c| 1.0 + ((r * 13 + c * 7) % 5) as f64 * 0.25);
    let mut v = analyze_single(&seed, bank);
    let mut lambda = 1.0;
    for _ in 0..iterations {
        let w = analyze_single(&synthesize(&v, bank).expect("frame synth"), bank);
        lambda = w.dot(&v) / v.norm_sq();
        let n = w.norm();
        if n < 1e-300 {
            return 1.0;
        }
        v = w.scale(1.0 / n);
    }
    lambda
}

/// Accelerated proximal gradient on the coefficient variable of the
/// synthesis/balanced models
///
///   min_v  a ||(I - W W^T) v||^2 + nu1 ||v||_1 + 1/2 ||A W^T v - f||^2
///
/// with fixed step 1/L, L = ||W^T||^2 ||A||^2 + 2a from power iteration,
/// momentum restarts when the step direction turns against the momentum.
/// Every band is penalized here, matching the classical coefficient-domain
/// formulations.
fn prox_gradient_solve(
    f: &Image,
    a_op: &DegradationOp,
    spec: &ModelSpec,
    bank: &FilterBank2D,
    truth: Option<&Image>,
) -> Result<(Image, Diagnostics)> {
    let a = if spec.variant == Variant::Synthesis {
        0.0
    } else {
        spec.balance
    };
    let b = spec.nu1;
    let lip = frame_norm_sq(bank, f.width(), f.height(), 20) * operator_norm_sq(a_op, 50)?
        + 2.0 * a;
    let step = 1.0 / lip.max(1e-12);

    let zero = Image::zeros(f.width(), f.height());
    let mut v = analyze_single(&zero, bank);
    let mut y = v.clone();
    let mut t = 1.0f64;
    let mut u = zero;
    let mut diagnostics = Diagnostics::default();

    for k in 1..=spec.max_iter {
        let u_prev = u.clone();
        let wty = synthesize(&y, bank)?;
        let mut grad = analyze_single(&a_op.adjoint(&a_op.apply(&wty)?.sub(f))?, bank);
        if a > 0.0 {
            // gradient of a ||(I - W W^T) v||^2 is 2a (v - W W^T v)
            let proj = analyze_single(&wty, bank);
            let mut misfit = y.clone();
            misfit.axpy(-1.0, &proj);
            grad.axpy(2.0 * a, &misfit);
        }
        let mut znext = y.clone();
        znext.axpy(-step, &grad);
        let pen = vec![true; znext.num_bands()];
        let vnext = threshold_stack(&znext, b * step, &pen, ShrinkMode::Anisotropic);

        // momentum with function-free restart
        let dv = vnext.sub(&v);
        let restart = y.sub(&vnext).dot(&dv) > 0.0;
        if restart {
            t = 1.0;
            y = vnext.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let mut ynew = vnext.clone();
            ynew.axpy((t - 1.0) / t_next, &dv);
            t = t_next;
            y = ynew;
        }
        v = vnext;
        u = synthesize(&v, bank)?;

        let misfit_norm = {
            let proj = analyze_single(&u, bank);
            v.sub(&proj).norm()
        };
        let objective =
            b * v.bands.iter().map(Image::norm_l1).sum::<f64>()
                + 0.5 * a_op.apply(&u)?.sub(f).norm_sq()
                + a * misfit_norm * misfit_norm;
        if !objective.is_finite() || objective > DIVERGENCE_LIMIT {
            return Err(Error::numerical(format!(
                "objective diverged at iteration {k}: {objective:e}"
            )));
        }
        diagnostics.records.push(IterationRecord {
            iter: k,
            objective,
            res_d: misfit_norm,
            res_e: 0.0,
            psnr: match truth {
                Some(tr) => Some(psnr(&u, tr, 255.0)?),
                None => None,
            },
        });
        let change = u.sub(&u_prev).norm();
        if k > 1 && change <= spec.tol * u_prev.norm().max(1e-30) {
            break;
        }
    }
    Ok((u, diagnostics))
}
