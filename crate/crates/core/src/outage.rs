//! Outage analysis through indefinite quadratic forms in the fading vector.
//!
//! With `W = diag(a)`, `z = W r`, `F = z z^T`, `B = W C W`,
//! `B1 = s2 (B - F) + n2 W^2` and `B2 = s2 B + n2 W^2`, the normalized
//! distortion is `(g^H B1 g + nu2) / (g^H B2 g + nu2)`. The outage event
//! `D >= delta` is then `g^H E(delta) g <= (1 - delta) nu2` with
//! `E(delta) = delta B2 - B1`, whose probability follows in closed form from
//! the eigenvalues of `E(delta)` when `g` is circularly-symmetric Gaussian.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::estimator::{check_len, ChannelParams, FadingRealization, GainVector};
use crate::geometry::CorrelationStructure;

/// Which matrix supplies the outage eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMode {
    /// Eigenvalues of `E(delta)` itself.
    #[default]
    Exact,
    /// Eigenvalues of `s2 (F - (1 - delta) B)`, dropping the observation-noise term.
    Approx,
}

/// Handling of (near-)zero and (near-)repeated eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPolicy {
    /// Eigenvalues with `|l| <= zero_tol * max|l|` are pruned.
    pub zero_tol: f64,
    /// Positive eigenvalues closer than this (relative) are treated as repeated.
    pub duplicate_tol: f64,
    /// Relative multiplicative spread applied to a repeated cluster.
    pub jitter: f64,
}

impl Default for EigenPolicy {
    fn default() -> Self {
        Self { zero_tol: 1e-9, duplicate_tol: 1e-7, jitter: 1e-6 }
    }
}

/// Real spectrum of a symmetric outage matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    /// All eigenvalues, descending.
    pub lambdas: Vec<f64>,
    /// Eigenvalues surviving zero pruning (and possibly jittered), descending.
    pub effective: Vec<f64>,
    /// Largest eigenvalue.
    pub lambda_plus: f64,
    /// Whether repeated positive eigenvalues had to be spread apart.
    pub jittered: bool,
}

impl EigenSpectrum {
    pub fn positive_count(&self) -> usize {
        self.effective.iter().filter(|&&l| l > 0.0).count()
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.lambdas.iter_mut().chain(self.effective.iter_mut()).for_each(|l| *l *= factor);
        self.lambda_plus *= factor;
        self
    }
}

/// Closed-form outage probability together with a flag telling whether the
/// spectrum had to be regularized to evaluate it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormOutage {
    pub probability: f64,
    pub jittered: bool,
}

/// The matrices of the quadratic-form representation for one network.
#[derive(Debug, Clone)]
pub struct QuadraticForms {
    params: ChannelParams,
    gains: DVector<f64>,
    z: DVector<f64>,
    f: DMatrix<f64>,
    b: DMatrix<f64>,
    b1: DMatrix<f64>,
    b2: DMatrix<f64>,
    lmax_b: f64,
}

impl QuadraticForms {
    pub fn build(a: &GainVector, corr: &CorrelationStructure, params: &ChannelParams) -> Result<Self> {
        params.validate()?;
        check_len(corr.len(), a.len())?;
        let n = a.len();
        let gains = DVector::from_column_slice(a.as_slice());
        let z = gains.component_mul(corr.r());
        let c = corr.c();

        let mut f = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let fij = z[i] * z[j];
                let bij = gains[i] * c[(i, j)] * gains[j];
                f[(i, j)] = fij;
                f[(j, i)] = fij;
                b[(i, j)] = bij;
                b[(j, i)] = bij;
            }
        }

        let (s2, n2) = (params.sigma_s2, params.sigma_n2);
        let mut b1 = (&b - &f) * s2;
        let mut b2 = &b * s2;
        for i in 0..n {
            let w2 = gains[i] * gains[i];
            b1[(i, i)] += n2 * w2;
            b2[(i, i)] += n2 * w2;
        }

        debug_assert!({
            let diff = &b2 - &b1 - &f * s2;
            let scale = b2.amax().max(f64::MIN_POSITIVE);
            diff.amax() <= 1e-12 * scale
        });

        check_finite(&b)?;
        let lmax_b = b.symmetric_eigenvalues().max();
        Ok(Self { params: *params, gains, z, f, b, b1, b2, lmax_b })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// `W = diag(a)`.
    pub fn w(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.gains)
    }

    /// Gain-weighted correlation vector `z = W r`.
    pub fn weighted_corr_vec(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn b1(&self) -> &DMatrix<f64> {
        &self.b1
    }

    pub fn b2(&self) -> &DMatrix<f64> {
        &self.b2
    }

    /// `g^H B1 g + nu2`.
    pub fn numerator(&self, g: &FadingRealization) -> f64 {
        hermitian_form(&self.b1, g.as_slice()) + self.params.sigma_nu2
    }

    /// `g^H B2 g + nu2`: the received power `E{|z|^2}` for this channel.
    pub fn denominator(&self, g: &FadingRealization) -> f64 {
        hermitian_form(&self.b2, g.as_slice()) + self.params.sigma_nu2
    }

    /// Normalized LMMSE distortion for one fading realization.
    ///
    /// A value outside `(0, 1]` can only come from a correlation structure that
    /// is not a valid joint Gaussian model and is reported as such.
    pub fn normalized_distortion(&self, g: &FadingRealization) -> Result<f64> {
        check_len(self.len(), g.len())?;
        let num = self.numerator(g);
        let den = self.denominator(g);
        let d = num / den;
        if !d.is_finite() {
            return Err(Error::NonFinite("normalized distortion"));
        }
        if num <= 0.0 || d > 1.0 + 1e-12 {
            return Err(Error::ModelValidity(format!(
                "normalized distortion {d} outside (0, 1]; the joint correlation matrix is not PSD"
            )));
        }
        Ok(d.min(1.0))
    }

    /// `E(delta) = delta B2 - B1`.
    pub fn outage_matrix(&self, delta: f64) -> Result<DMatrix<f64>> {
        check_delta(delta)?;
        Ok(&self.b2 * delta - &self.b1)
    }

    /// `s2 (F - (1 - delta) B)`.
    pub fn approx_outage_matrix(&self, delta: f64) -> Result<DMatrix<f64>> {
        check_delta(delta)?;
        Ok((&self.f - &self.b * (1.0 - delta)) * self.params.sigma_s2)
    }

    fn mode_matrix(&self, delta: f64, mode: EigenMode) -> Result<DMatrix<f64>> {
        match mode {
            EigenMode::Exact => self.outage_matrix(delta),
            EigenMode::Approx => self.approx_outage_matrix(delta),
        }
    }

    /// Spectrum of `sigma_g2 * E(delta)` (or of its approximation), i.e. the
    /// spectrum seen by a unit-variance fading vector.
    pub fn fading_spectrum(&self, delta: f64, mode: EigenMode, policy: &EigenPolicy) -> Result<EigenSpectrum> {
        let m = self.mode_matrix(delta, mode)?;
        Ok(eigen_spectrum(&m, policy)?.scaled(self.params.sigma_g2))
    }

    /// Largest eigenvalue of `E(delta)` (exact) or of `s2 (F - (1 - delta) B)` (approx).
    pub fn lambda_plus(&self, delta: f64, mode: EigenMode) -> Result<f64> {
        let m = self.mode_matrix(delta, mode)?;
        check_finite(&m)?;
        Ok(m.symmetric_eigenvalues().max())
    }

    /// `max(0, s2 (lmax(F) - (1 - delta) lmax(B)))`, a lower bound on the
    /// approximate largest eigenvalue.
    pub fn weyl_lower_bound(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        let lmax_f = self.z.norm_squared();
        Ok((self.params.sigma_s2 * (lmax_f - (1.0 - delta) * self.lmax_b)).max(0.0))
    }

    /// Outage probability from the full partial-fraction expansion over every
    /// eigenvalue of `E(delta)`.
    pub fn outage_general(&self, delta: f64, mode: EigenMode, policy: &EigenPolicy) -> Result<ClosedFormOutage> {
        check_delta(delta)?;
        if let Some(p) = edge_outage(delta) {
            return Ok(ClosedFormOutage { probability: p, jittered: false });
        }
        let spectrum = self.fading_spectrum(delta, mode, policy)?;
        let threshold = (1.0 - delta) * self.params.sigma_nu2;
        Ok(ClosedFormOutage {
            probability: outage_from_spectrum(&spectrum.effective, threshold)?,
            jittered: spectrum.jittered,
        })
    }

    /// Outage probability from the single non-negative eigenvalue.
    pub fn outage_simplified(&self, delta: f64, mode: EigenMode, policy: &EigenPolicy) -> Result<f64> {
        check_delta(delta)?;
        if let Some(p) = edge_outage(delta) {
            return Ok(p);
        }
        let spectrum = self.fading_spectrum(delta, mode, policy)?;
        outage_closed_form_simplified(&spectrum, delta, self.params.sigma_nu2)
    }
}

/// Real part of `g^H A g` for a real symmetric `A`, which is the whole value.
pub fn hermitian_form(a: &DMatrix<f64>, g: &[Complex64]) -> f64 {
    let n = g.len();
    let mut acc = 0.0;
    for j in 0..n {
        let gj = g[j];
        let mut col = 0.0;
        for i in 0..n {
            let gi = g[i];
            col += a[(i, j)] * (gi.re * gj.re + gi.im * gj.im);
        }
        acc += col;
    }
    acc
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid(format!("target distortion must lie in [0, 1], got {delta}")));
    }
    Ok(())
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("outage matrix"));
    }
    Ok(())
}

/// `delta = 0` is certain outage, `delta = 1` happens with probability zero.
fn edge_outage(delta: f64) -> Option<f64> {
    if delta == 0.0 {
        Some(1.0)
    } else if delta == 1.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Builds `E(delta) = delta B2 - B1`.
pub fn build_e(qf: &QuadraticForms, delta: f64) -> Result<DMatrix<f64>> {
    qf.outage_matrix(delta)
}

/// Eigenvalues of a real symmetric matrix with the zero-pruning and
/// repeated-eigenvalue policy applied.
pub fn eigen_spectrum(e: &DMatrix<f64>, policy: &EigenPolicy) -> Result<EigenSpectrum> {
    if !e.is_square() {
        return Err(Error::DimensionMismatch { expected: e.nrows(), got: e.ncols() });
    }
    check_finite(e)?;
    let scale = e.amax();
    let n = e.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (e[(i, j)] - e[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Precondition("outage matrix is not symmetric".into()));
            }
        }
    }

    let mut lambdas: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let max_abs = lambdas.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let lambda_plus = lambdas.first().copied().unwrap_or(0.0);

    let mut effective: Vec<f64> =
        lambdas.iter().copied().filter(|l| l.abs() > policy.zero_tol * max_abs).collect();

    // Only the positive eigenvalues act as poles in the outage expansion, so
    // only those need to be distinct.
    let positives = effective.iter().take_while(|&&l| l > 0.0).count();
    let jittered = spread_clusters(&mut effective[..positives], policy);
    effective.sort_by(|a, b| b.total_cmp(a));

    Ok(EigenSpectrum { lambdas, effective, lambda_plus, jittered })
}

/// Spreads runs of near-equal values (descending input) symmetrically.
fn spread_clusters(values: &mut [f64], policy: &EigenPolicy) -> bool {
    let mut jittered = false;
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() {
            let (a, b) = (values[end - 1], values[end]);
            if (a - b).abs() >= policy.duplicate_tol * a.abs().max(b.abs()) {
                break;
            }
            end += 1;
        }
        let m = end - start;
        if m > 1 {
            jittered = true;
            let mid = (m as f64 - 1.0) / 2.0;
            for (k, v) in values[start..end].iter_mut().enumerate() {
                // larger multipliers first so the order stays descending
                *v *= 1.0 + policy.jitter * (mid - k as f64);
            }
        }
        start = end;
    }
    jittered
}

/// Probability that `sum_l lambda_l |h_l|^2 <= threshold` for i.i.d.
/// `h_l ~ CN(0, 1)`, evaluated by the partial-fraction expansion
/// `u(t) + sum_l (-l_l)^N / (l_l prod_{i != l} (l_i - l_l)) exp(-t / l_l) u(t / l_l)`.
///
/// Positive eigenvalues must be pairwise distinct; nonpositive ones may repeat.
pub fn outage_from_spectrum(effective: &[f64], threshold: f64) -> Result<f64> {
    if threshold <= 0.0 {
        return Err(invalid("threshold must be positive; edge cases are handled by the caller"));
    }
    let n = effective.len() as i32;
    let mut total = 1.0;
    for (l, &lam) in effective.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        // (-lam)^N / lam
        let mut log_mag = (n - 1) as f64 * lam.ln();
        let mut negative = n % 2 == 1;
        for (i, &other) in effective.iter().enumerate() {
            if i == l {
                continue;
            }
            let diff = other - lam;
            if diff == 0.0 {
                return Err(Error::Degenerate(format!("repeated positive eigenvalue {lam:e}")));
            }
            log_mag -= diff.abs().ln();
            negative ^= diff < 0.0;
        }
        let term = (log_mag - threshold / lam).exp();
        total += if negative { -term } else { term };
    }
    finish_probability(total)
}

/// Only the single non-negative eigenvalue contributes:
/// `1 - l+^(N-1) exp(-t / l+) / prod_{i != +} (l+ - l_i)`.
fn single_positive_outage(effective: &[f64], threshold: f64) -> Result<f64> {
    let positives = effective.iter().filter(|&&l| l > 0.0).count();
    if positives > 1 {
        return Err(Error::Precondition(format!(
            "{positives} positive eigenvalues; use the general expansion"
        )));
    }
    let lp = match effective.iter().copied().find(|&l| l > 0.0) {
        Some(l) => l,
        None => return Ok(1.0),
    };
    let mut log_ratio = (effective.len() as f64 - 1.0) * lp.ln() - threshold / lp;
    let mut negative = false;
    let plus_index = effective.iter().position(|&l| l == lp).expect("present");
    for (_, &l) in effective.iter().enumerate().filter(|(i, _)| *i != plus_index) {
        let diff = lp - l;
        log_ratio -= diff.abs().ln();
        negative ^= diff < 0.0;
    }
    let ratio = log_ratio.exp();
    finish_probability(1.0 - if negative { -ratio } else { ratio })
}

fn finish_probability(p: f64) -> Result<f64> {
    const SLACK: f64 = 1e-6;
    if !p.is_finite() || !(-SLACK..=1.0 + SLACK).contains(&p) {
        return Err(Error::Degenerate(format!("closed form evaluated to {p}")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Closed-form outage for fading variance `sigma_g2`, summing over every
/// effective eigenvalue of `sigma_g2 * E(delta)`.
pub fn outage_closed_form_general(
    qf: &QuadraticForms,
    delta: f64,
    mode: EigenMode,
    policy: &EigenPolicy,
) -> Result<ClosedFormOutage> {
    qf.outage_general(delta, mode, policy)
}

/// Single-eigenvalue closed form evaluated on a spectrum already scaled for
/// the fading variance.
pub fn outage_closed_form_simplified(spectrum: &EigenSpectrum, delta: f64, sigma_nu2: f64) -> Result<f64> {
    check_delta(delta)?;
    if let Some(p) = edge_outage(delta) {
        return Ok(p);
    }
    single_positive_outage(&spectrum.effective, (1.0 - delta) * sigma_nu2)
}

pub fn lambda_plus(qf: &QuadraticForms, delta: f64, mode: EigenMode) -> Result<f64> {
    qf.lambda_plus(delta, mode)
}

pub fn weyl_lower_bound(qf: &QuadraticForms, delta: f64) -> Result<f64> {
    qf.weyl_lower_bound(delta)
}

fn normalized_matrix(corr: &CorrelationStructure, delta: f64) -> Result<DMatrix<f64>> {
    check_delta(delta)?;
    let r = corr.r();
    let n = corr.len();
    let c = corr.c();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = (r[i] * r[j] - (1.0 - delta) * c[(i, j)]) / n as f64;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Normalized eigenvalue `max eig(r r^T - (1 - delta) C) / N`, a property of
/// the network geometry alone.
pub fn normalized_lambda_plus(corr: &CorrelationStructure, delta: f64) -> Result<f64> {
    let m = normalized_matrix(corr, delta)?;
    check_finite(&m)?;
    Ok(m.symmetric_eigenvalues().max())
}

/// Outage probability under equal power allocation expressed through the
/// normalized eigenvalues of `r r^T - (1 - delta) C`.
pub fn outage_epa(corr: &CorrelationStructure, params: &ChannelParams, delta: f64) -> Result<f64> {
    outage_epa_with(corr, params, delta, &EigenPolicy::default())
}

pub fn outage_epa_with(
    corr: &CorrelationStructure,
    params: &ChannelParams,
    delta: f64,
    policy: &EigenPolicy,
) -> Result<f64> {
    params.validate()?;
    check_delta(delta)?;
    if let Some(p) = edge_outage(delta) {
        return Ok(p);
    }
    let spectrum = eigen_spectrum(&normalized_matrix(corr, delta)?, policy)?;
    let scale = params.sigma_g2 * params.eigen_scale();
    single_positive_outage(&spectrum.effective, (1.0 - delta) * params.sigma_nu2 / scale)
}
