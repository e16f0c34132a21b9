//! LMMSE estimation at the fusion center and the resulting normalized distortion.
//!
//! Fading coefficients are complex, so every quadratic expression in the gains
//! and channel is taken in its Hermitian form (`g^H B g`, `|z^H g|^2`).

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::geometry::CorrelationStructure;
use crate::outage::QuadraticForms;

/// Second-order statistics of the source, the noises and the channel, plus the
/// total transmit power of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub sigma_s2: f64,
    pub sigma_n2: f64,
    pub sigma_nu2: f64,
    pub sigma_g2: f64,
    pub p_tot: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ChannelParams {
    pub fn new(sigma_s2: f64, sigma_n2: f64, sigma_nu2: f64, sigma_g2: f64, p_tot: f64) -> Result<Self> {
        let p = Self { sigma_s2, sigma_n2, sigma_nu2, sigma_g2, p_tot };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from decibel quantities.
    ///
    /// * observation SNR is `sigma_s2 / sigma_n2`,
    /// * communication SNR is `(sigma_s2 + sigma_n2) / sigma_nu2`,
    /// * total power is expressed relative to `sigma_s2`.
    pub fn from_db(
        sigma_s2: f64,
        obs_snr_db: f64,
        comm_snr_db: f64,
        p_tot_db: f64,
        sigma_g2: f64,
    ) -> Result<Self> {
        let sigma_n2 = sigma_s2 / db_to_linear(obs_snr_db);
        let sigma_nu2 = (sigma_s2 + sigma_n2) / db_to_linear(comm_snr_db);
        Self::new(sigma_s2, sigma_n2, sigma_nu2, sigma_g2, db_to_linear(p_tot_db) * sigma_s2)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sigma_s2", self.sigma_s2),
            ("sigma_n2", self.sigma_n2),
            ("sigma_nu2", self.sigma_nu2),
            ("sigma_g2", self.sigma_g2),
            ("p_tot", self.p_tot),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `P_tot * sigma_s2 / (sigma_s2 + sigma_n2)`: the scale that maps the
    /// normalized eigenvalue onto the largest eigenvalue of the outage matrix.
    pub fn eigen_scale(&self) -> f64 {
        self.p_tot * self.sigma_s2 / (self.sigma_s2 + self.sigma_n2)
    }
}

impl Default for ChannelParams {
    /// Observation and communication SNR of 20 dB, unit source and fading
    /// variance, and a total power of 10 dB.
    fn default() -> Self {
        Self::from_db(1.0, 20.0, 20.0, 10.0, 1.0).expect("default parameters are valid")
    }
}

/// Per-node amplification factors.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(invalid("gain vector must be non-empty"));
        }
        if a.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("amplification factors must be finite and non-negative"));
        }
        if a.iter().all(|&v| v == 0.0) {
            return Err(invalid("at least one amplification factor must be positive"));
        }
        Ok(Self(a))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One realization of the complex channel coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization(Vec<Complex64>);

impl FadingRealization {
    pub fn new(g: Vec<Complex64>) -> Result<Self> {
        if g.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("fading coefficients"));
        }
        Ok(Self(g))
    }

    /// Fading neglected: `g_i = 1` for every node.
    pub fn unit(n: usize) -> Self {
        Self(vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Equal power allocation: `a = sqrt(P_tot / (N (sigma_s2 + sigma_n2)))` for every node.
pub fn epa_gain(params: &ChannelParams, n_nodes: usize) -> Result<GainVector> {
    if n_nodes == 0 {
        return Err(invalid("n_nodes must be at least 1"));
    }
    params.validate()?;
    let a = (params.p_tot / (n_nodes as f64 * (params.sigma_s2 + params.sigma_n2))).sqrt();
    GainVector::new(vec![a; n_nodes])
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Scalar LMMSE weight `E{s z^*} / E{|z|^2}` applied by the fusion center.
pub fn lmmse_weight(
    g: &FadingRealization,
    a: &GainVector,
    corr: &CorrelationStructure,
    params: &ChannelParams,
) -> Result<Complex64> {
    let qf = QuadraticForms::build(a, corr, params)?;
    check_len(qf.len(), g.len())?;
    let r = corr.r();
    let cross: Complex64 = g
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .zip(r.iter())
        .map(|((gi, ai), ri)| gi.conj() * (ai * ri))
        .sum();
    let power = qf.denominator(g);
    Ok(cross * (params.sigma_s2 / power))
}

/// Estimate of the source from the combined received sample `z`.
pub fn lmmse_estimate(
    z_received: Complex64,
    g: &FadingRealization,
    a: &GainVector,
    corr: &CorrelationStructure,
    params: &ChannelParams,
) -> Result<Complex64> {
    Ok(lmmse_weight(g, a, corr, params)? * z_received)
}

/// `(g^H B1 g + sigma_nu2) / (g^H B2 g + sigma_nu2)` for one fading realization.
///
/// For repeated evaluation on the same network build the [`QuadraticForms`]
/// once and call [`QuadraticForms::normalized_distortion`].
pub fn normalized_distortion(
    g: &FadingRealization,
    a: &GainVector,
    corr: &CorrelationStructure,
    params: &ChannelParams,
) -> Result<f64> {
    QuadraticForms::build(a, corr, params)?.normalized_distortion(g)
}

fn epa_gain_squared(params: &ChannelParams, n: f64) -> f64 {
    params.p_tot / (n * (params.sigma_s2 + params.sigma_n2))
}

/// Distortion without fading under equal power allocation, for an arbitrary
/// `(r, C)` pair.
pub fn distortion_fullrank_epa(corr: &CorrelationStructure, params: &ChannelParams) -> f64 {
    let n = corr.len() as f64;
    let a2 = epa_gain_squared(params, n);
    let (r, c) = (corr.r(), corr.c());
    let sum_c: f64 = c.iter().sum();
    // sum(C) - sum(r)^2 accumulated entrywise to avoid cancellation near C = r r^T
    let excess: f64 = (0..r.len())
        .flat_map(|i| (0..r.len()).map(move |j| (-r[i]).mul_add(r[j], c[(i, j)])))
        .sum();
    let noise = n * params.sigma_n2 * a2 + params.sigma_nu2;
    (params.sigma_s2 * a2 * excess + noise) / (params.sigma_s2 * a2 * sum_c + noise)
}

/// Distortion without fading under equal power allocation when `C = r r^T`.
/// Only `r` is read.
pub fn distortion_rankone_epa(corr: &CorrelationStructure, params: &ChannelParams) -> f64 {
    let n = corr.len() as f64;
    let sum_r: f64 = corr.r().iter().sum();
    let var_x = params.sigma_s2 + params.sigma_n2;
    let noise = params.p_tot * params.sigma_n2 / var_x + params.sigma_nu2;
    noise / (params.p_tot * params.sigma_s2 * sum_r * sum_r / (n * var_x) + noise)
}

/// Distortion without fading under equal power allocation when every sensor
/// observes the source itself.
pub fn distortion_unity_epa(n_nodes: usize, params: &ChannelParams) -> f64 {
    let n = n_nodes as f64;
    let var_x = params.sigma_s2 + params.sigma_n2;
    let num = params.p_tot * params.sigma_n2 / var_x + params.sigma_nu2;
    num / (params.p_tot * (n * params.sigma_s2 + params.sigma_n2) / var_x + params.sigma_nu2)
}

/// Dispatches to the no-fading closed form matching `corr.model()`.
pub fn distortion_epa(corr: &CorrelationStructure, params: &ChannelParams) -> f64 {
    use crate::geometry::CorrelationModel::*;
    match corr.model() {
        FullRank => distortion_fullrank_epa(corr, params),
        RankOne => distortion_rankone_epa(corr, params),
        Unity => distortion_unity_epa(corr.len(), params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_correlation, sample_geometry, CorrelationModel, CorrelationParams};
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_params_match_db_values() {
        let p = ChannelParams::default();
        assert!((p.sigma_n2 - 0.01).abs() < 1e-15);
        assert!((p.sigma_nu2 - 0.0101).abs() < 1e-15);
        assert!((p.p_tot - 10.0).abs() < 1e-12);
        assert_eq!(p.sigma_g2, 1.0);
    }

    #[test]
    fn epa_values() {
        let p = ChannelParams::default();
        let a = epa_gain(&p, 10).unwrap();
        // sqrt(10 / (10 * 1.01))
        assert!((a.as_slice()[0] - 0.995037190209989).abs() < 1e-12);
        assert!(a.as_slice().iter().all(|&v| v == a.as_slice()[0]));

        let unit = ChannelParams::new(1.0, 0.25, 0.1, 1.0, 5.0 * 1.25).unwrap();
        assert!((epa_gain(&unit, 5).unwrap().as_slice()[0] - 1.0).abs() < 1e-15);

        let a20 = epa_gain(&p, 20).unwrap().as_slice()[0];
        assert!((a20 * 2f64.sqrt() - a.as_slice()[0]).abs() < 1e-15);
        assert!(epa_gain(&p, 0).is_err());
    }

    #[test]
    fn gain_vector_validation() {
        assert!(GainVector::new(vec![]).is_err());
        assert!(GainVector::new(vec![0.0, 0.0]).is_err());
        assert!(GainVector::new(vec![-1.0, 1.0]).is_err());
        assert!(GainVector::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn unity_closed_form_value() {
        // (10*0.01/1.01 + 0.0101) / (10*(10 + 0.01)/1.01 + 0.0101)
        let v = distortion_unity_epa(10, &ChannelParams::default());
        let expected = (0.1 / 1.01 + 0.0101) / (100.1 / 1.01 + 0.0101);
        assert!((v - expected).abs() < 1e-16);
        assert!((v - 1.101e-3).abs() < 1e-6);
        assert!(distortion_unity_epa(1_000_000, &ChannelParams::default()) < 1e-7);
    }

    #[test]
    fn unity_vanishes_without_noise() {
        let p = ChannelParams::new(1.0, 1e-14, 1e-14, 1.0, 10.0).unwrap();
        assert!(distortion_unity_epa(10, &p) < 1e-13);
    }

    #[test]
    fn rank_one_limits_and_monotonicity() {
        let p = ChannelParams::default();
        let mk = |rho: Vec<f64>| {
            let r = DVector::from_vec(rho);
            let c = &r * r.transpose();
            CorrelationStructure::from_parts(r, c, CorrelationModel::RankOne).unwrap()
        };
        let ones = mk(vec![1.0; 10]);
        assert!((distortion_rankone_epa(&ones, &p) - distortion_unity_epa(10, &p)).abs() < 1e-15);
        let tiny = mk(vec![1e-9; 10]);
        assert!(1.0 - distortion_rankone_epa(&tiny, &p) < 1e-12);

        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let d = distortion_rankone_epa(&mk(vec![k as f64 / 10.0; 4]), &p);
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn rank_one_hand_value() {
        // rho_i = e^-1 for N = 10
        let p = ChannelParams::default();
        let r = DVector::from_element(10, (-1.0f64).exp());
        let c = &r * r.transpose();
        let corr = CorrelationStructure::from_parts(r, c, CorrelationModel::RankOne).unwrap();
        let noise = 10.0 * 0.01 / 1.01 + 0.0101;
        let sig = 10.0 * (10.0 * (-1.0f64).exp()).powi(2) / (10.0 * 1.01);
        let expected = noise / (sig + noise);
        assert!((distortion_rankone_epa(&corr, &p) - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_fading_gives_unit_distortion_and_zero_estimate() {
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_geometry(&mut rng, 5, 20.0, 30.0).unwrap();
        let corr = build_correlation(&g, &CorrelationParams::default(), CorrelationModel::FullRank);
        let a = epa_gain(&p, 5).unwrap();
        let zero = FadingRealization::zeros(5);
        assert_eq!(normalized_distortion(&zero, &a, &corr, &p).unwrap(), 1.0);
        let est = lmmse_estimate(Complex64::new(3.0, -1.0), &zero, &a, &corr, &p).unwrap();
        assert_eq!(est, Complex64::new(0.0, 0.0));
        let unit = FadingRealization::unit(5);
        assert_eq!(lmmse_estimate(Complex64::new(0.0, 0.0), &unit, &a, &corr, &p).unwrap().norm(), 0.0);
    }

    #[test]
    fn noiseless_single_sensor_weight_tends_to_one() {
        let p = ChannelParams::new(1.0, 1e-12, 1e-12, 1.0, 1.0).unwrap();
        let corr = CorrelationStructure::from_parts(
            DVector::from_element(1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            CorrelationModel::FullRank,
        )
        .unwrap();
        let a = GainVector::new(vec![1.0]).unwrap();
        let w = lmmse_weight(&FadingRealization::unit(1), &a, &corr, &p).unwrap();
        assert!((w - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn unity_no_fading_matches_closed_form() {
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = sample_geometry(&mut rng, 10, 20.0, 30.0).unwrap();
        let corr = build_correlation(&g, &CorrelationParams::default(), CorrelationModel::Unity);
        let a = epa_gain(&p, 10).unwrap();
        let d = normalized_distortion(&FadingRealization::unit(10), &a, &corr, &p).unwrap();
        let expected = distortion_unity_epa(10, &p);
        assert!((d - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = ChannelParams::default();
        let corr = build_correlation(
            &crate::geometry::NetworkGeometry::new(
                vec![crate::geometry::Position::ORIGIN; 3],
                crate::geometry::Position::new(1.0, 0.0),
            )
            .unwrap(),
            &CorrelationParams::default(),
            CorrelationModel::FullRank,
        );
        let a = epa_gain(&p, 3).unwrap();
        assert!(matches!(
            normalized_distortion(&FadingRealization::unit(4), &a, &corr, &p),
            Err(Error::DimensionMismatch { .. })
        ));
        let a4 = epa_gain(&p, 4).unwrap();
        assert!(normalized_distortion(&FadingRealization::unit(3), &a4, &corr, &p).is_err());
    }
}
