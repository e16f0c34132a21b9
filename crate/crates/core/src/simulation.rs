//! Seeded Monte Carlo engine.
//!
//! Every random draw comes from a ChaCha8 substream addressed by
//! `(seed, purpose, geometry index, trial index)`, so results do not depend on
//! how rayon schedules the work. Reductions always run over index-ordered
//! buffers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::estimator::{distortion_epa, epa_gain, ChannelParams, FadingRealization};
use crate::geometry::{
    build_correlation, sample_geometry, CorrelationModel, CorrelationParams, CorrelationStructure,
    NetworkGeometry,
};
use crate::outage::{EigenMode, EigenPolicy, QuadraticForms};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

/// Draw count used to cross-check a regularized closed form.
pub const GUARD_DRAWS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Geometry = 1,
    Fading = 2,
    Guard = 3,
    Signal = 4,
}

/// Independent generator for one `(purpose, index, trial)` cell.
pub fn substream(seed: u64, purpose: Purpose, index: u64, trial: u64) -> ChaCha8Rng {
    assert!(index < (1 << 56), "index too large for a substream id");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | index);
    rng.set_word_pos((trial as u128) << 32);
    rng
}

/// `n` i.i.d. circularly-symmetric complex Gaussian coefficients of variance `sigma_g2`.
pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma_g2: f64) -> FadingRealization {
    let sd = (sigma_g2 / 2.0).sqrt();
    let g = (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect();
    FadingRealization::new(g).expect("gaussian draws are finite")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub side: f64,
    pub source_distance: f64,
    pub corr_params: CorrelationParams,
    pub model: CorrelationModel,
    pub channel: ChannelParams,
    pub n_geometries: usize,
    pub n_fading_draws: usize,
    pub seed: u64,
    pub fading_enabled: bool,
}

impl Default for SimConfig {
    /// Ten nodes in a 20 m square with the source 30 m from its centre,
    /// `theta1 = 250`, `theta2 = 1`, default channel parameters and 1000 runs.
    fn default() -> Self {
        Self {
            n_nodes: 10,
            side: 20.0,
            source_distance: 30.0,
            corr_params: CorrelationParams::default(),
            model: CorrelationModel::FullRank,
            channel: ChannelParams::default(),
            n_geometries: 1000,
            n_fading_draws: 1000,
            seed: 1,
            fading_enabled: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.n_geometries == 0 || self.n_fading_draws == 0 {
            return Err(invalid("node, geometry and draw counts must be at least 1"));
        }
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(invalid("side must be positive"));
        }
        if !(self.source_distance >= 0.0 && self.source_distance.is_finite()) {
            return Err(invalid("source distance must be non-negative"));
        }
        self.channel.validate()
    }

    pub fn geometry(&self, index: usize) -> Result<NetworkGeometry> {
        let mut rng = substream(self.seed, Purpose::Geometry, index as u64, 0);
        sample_geometry(&mut rng, self.n_nodes, self.side, self.source_distance)
    }

    pub fn correlation(&self, index: usize) -> Result<CorrelationStructure> {
        Ok(build_correlation(&self.geometry(index)?, &self.corr_params, self.model))
    }

    /// Correlation and quadratic forms of geometry `index` under equal power allocation.
    pub fn network(&self, index: usize) -> Result<(CorrelationStructure, QuadraticForms)> {
        let corr = self.correlation(index)?;
        let qf = QuadraticForms::build(&epa_gain(&self.channel, self.n_nodes)?, &corr, &self.channel)?;
        Ok((corr, qf))
    }
}

/// Grand mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_runs: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_err, n_runs: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub delta: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionSample {
    pub geometry_index: usize,
    pub trial_index: usize,
    pub d_tilde: f64,
}

/// Whether an outage experiment keeps one network or draws a new one per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeometryMode {
    /// Geometry 0 only, `n_fading_draws` channel draws.
    Fixed,
    /// `n_geometries` geometries with `n_fading_draws` channel draws each.
    #[default]
    Resampled,
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

fn check_grid(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(invalid("delta grid must be non-empty"));
    }
    if let Some(d) = deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(invalid(format!("delta grid values must lie in [0, 1], got {d}")));
    }
    Ok(())
}

/// Normalized distortions of `draws` channel realizations on one network, in trial order.
pub fn distortion_draws(
    qf: &QuadraticForms,
    seed: u64,
    purpose: Purpose,
    geometry_index: usize,
    draws: u64,
) -> Result<Vec<f64>> {
    let n = qf.len();
    let sigma_g2 = qf.params().sigma_g2;
    (0..draws)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, purpose, geometry_index as u64, t);
            qf.normalized_distortion(&draw_fading(&mut rng, n, sigma_g2))
        })
        .collect()
}

/// Empirical `Pr(D >= delta)` from unsorted distortion samples.
pub fn outage_points(mut samples: Vec<f64>, deltas: &[f64]) -> Vec<OutagePoint> {
    samples.sort_by(f64::total_cmp);
    let total = samples.len() as u64;
    deltas
        .iter()
        .map(|&delta| {
            let below = samples.partition_point(|&d| d < delta) as u64;
            let hits = total - below;
            let (ci_low, ci_high) = wilson_interval(hits, total, Z_99);
            OutagePoint { delta, p_hat: hits as f64 / total as f64, ci_low, ci_high, n_trials: total }
        })
        .collect()
}

/// Empirical outage curve for a single network.
pub fn empirical_outage(
    qf: &QuadraticForms,
    deltas: &[f64],
    draws: u64,
    seed: u64,
    geometry_index: usize,
) -> Result<Vec<OutagePoint>> {
    check_grid(deltas)?;
    Ok(outage_points(distortion_draws(qf, seed, Purpose::Fading, geometry_index, draws)?, deltas))
}

/// Every `(geometry, trial)` distortion value of the configuration.
///
/// Without fading each geometry contributes a single sample at `g = 1`.
pub fn distortion_samples(config: &SimConfig) -> Result<Vec<DistortionSample>> {
    config.validate()?;
    let per_geometry: Vec<Vec<DistortionSample>> = (0..config.n_geometries)
        .into_par_iter()
        .map(|gi| {
            let (_, qf) = config.network(gi)?;
            if !config.fading_enabled {
                let d = qf.normalized_distortion(&FadingRealization::unit(config.n_nodes))?;
                return Ok(vec![DistortionSample { geometry_index: gi, trial_index: 0, d_tilde: d }]);
            }
            let draws = distortion_draws(&qf, config.seed, Purpose::Fading, gi, config.n_fading_draws as u64)?;
            Ok(draws
                .into_iter()
                .enumerate()
                .map(|(t, d)| DistortionSample { geometry_index: gi, trial_index: t, d_tilde: d })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_geometry.into_iter().flatten().collect())
}

/// Geometry-averaged normalized distortion.
///
/// Without fading each geometry contributes the closed-form no-fading value
/// for the configured model. With fading each geometry contributes the mean
/// over `n_fading_draws` channels; for a single geometry the standard error is
/// taken over the draws instead.
pub fn mc_distortion_mean(config: &SimConfig) -> Result<MeanEstimate> {
    config.validate()?;
    if !config.fading_enabled {
        let values: Vec<f64> = (0..config.n_geometries)
            .into_par_iter()
            .map(|gi| Ok(distortion_epa(&config.correlation(gi)?, &config.channel)))
            .collect::<Result<_>>()?;
        return Ok(MeanEstimate::from_samples(&values));
    }
    let per_geometry: Vec<Vec<f64>> = (0..config.n_geometries)
        .into_par_iter()
        .map(|gi| {
            let (_, qf) = config.network(gi)?;
            distortion_draws(&qf, config.seed, Purpose::Fading, gi, config.n_fading_draws as u64)
        })
        .collect::<Result<_>>()?;
    if per_geometry.len() == 1 {
        return Ok(MeanEstimate::from_samples(&per_geometry[0]));
    }
    let means: Vec<f64> =
        per_geometry.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    Ok(MeanEstimate::from_samples(&means))
}

/// Empirical outage curve over the fading distribution (and over geometries
/// in [`GeometryMode::Resampled`]).
pub fn mc_outage(config: &SimConfig, deltas: &[f64], mode: GeometryMode) -> Result<Vec<OutagePoint>> {
    config.validate()?;
    check_grid(deltas)?;
    let geometries = match mode {
        GeometryMode::Fixed => 1,
        GeometryMode::Resampled => config.n_geometries,
    };
    let per_geometry: Vec<Vec<f64>> = (0..geometries)
        .into_par_iter()
        .map(|gi| {
            let (_, qf) = config.network(gi)?;
            distortion_draws(&qf, config.seed, Purpose::Fading, gi, config.n_fading_draws as u64)
        })
        .collect::<Result<_>>()?;
    Ok(outage_points(per_geometry.into_iter().flatten().collect(), deltas))
}

/// Closed-form outage for one network and target, with the regularized
/// evaluation cross-checked against [`GUARD_DRAWS`] channel draws.
///
/// Returns [`Error::Degenerate`] when the regularized value falls outside the
/// 99% interval of that Monte Carlo estimate.
pub fn guarded_closed_form(
    qf: &QuadraticForms,
    delta: f64,
    mode: EigenMode,
    policy: &EigenPolicy,
    seed: u64,
    geometry_index: usize,
) -> Result<f64> {
    let closed = qf.outage_general(delta, mode, policy)?;
    if !closed.jittered {
        return Ok(closed.probability);
    }
    let samples = distortion_draws(qf, seed, Purpose::Guard, geometry_index, GUARD_DRAWS)?;
    let point = outage_points(samples, &[delta])[0];
    if closed.probability < point.ci_low || closed.probability > point.ci_high {
        return Err(Error::Degenerate(format!(
            "regularized closed form {} outside Monte Carlo interval [{}, {}] at delta {delta}",
            closed.probability, point.ci_low, point.ci_high
        )));
    }
    Ok(closed.probability)
}

/// Geometry-averaged closed-form outage curve.
pub fn closed_form_outage_curve(
    config: &SimConfig,
    deltas: &[f64],
    geometry_mode: GeometryMode,
    eigen_mode: EigenMode,
) -> Result<Vec<MeanEstimate>> {
    config.validate()?;
    check_grid(deltas)?;
    let geometries = match geometry_mode {
        GeometryMode::Fixed => 1,
        GeometryMode::Resampled => config.n_geometries,
    };
    let policy = EigenPolicy::default();
    let curves: Vec<Vec<f64>> = (0..geometries)
        .into_par_iter()
        .map(|gi| {
            let (_, qf) = config.network(gi)?;
            deltas
                .iter()
                .map(|&d| guarded_closed_form(&qf, d, eigen_mode, &policy, config.seed, gi))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..deltas.len())
        .map(|k| MeanEstimate::from_samples(&curves.iter().map(|c| c[k]).collect::<Vec<_>>()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSweepRow {
    pub n: usize,
    pub model: CorrelationModel,
    pub mean_d: f64,
    pub std_err: f64,
}

/// Mean distortion for every `(N, model)` pair, models in [`CorrelationModel::ALL`] order.
pub fn sweep_nodes(config: &SimConfig, node_counts: &[usize]) -> Result<Vec<NodeSweepRow>> {
    if node_counts.is_empty() {
        return Err(invalid("node count list must be non-empty"));
    }
    let mut rows = Vec::with_capacity(node_counts.len() * 3);
    for &n in node_counts {
        for model in CorrelationModel::ALL {
            let cfg = SimConfig { n_nodes: n, model, ..config.clone() };
            let est = mc_distortion_mean(&cfg)?;
            rows.push(NodeSweepRow { n, model, mean_d: est.mean, std_err: est.std_err });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSweepRow {
    pub source_distance: f64,
    pub delta: f64,
    /// Largest eigenvalue of `s2 (F - (1 - delta) B)` over `P_tot s2 / (s2 + n2)`.
    pub lambda_exact_norm: MeanEstimate,
    /// Weyl lower bound with the same normalization.
    pub lambda_bound_norm: MeanEstimate,
}

/// Geometry-averaged largest eigenvalue and its lower bound per source distance.
///
/// All distances share the same node placements; only the source moves.
pub fn sweep_eigenvalue(config: &SimConfig, source_distances: &[f64], deltas: &[f64]) -> Result<Vec<EigenSweepRow>> {
    if source_distances.is_empty() {
        return Err(invalid("source distance list must be non-empty"));
    }
    check_grid(deltas)?;
    let scale = config.channel.eigen_scale();
    let mut rows = Vec::with_capacity(source_distances.len() * deltas.len());
    for &dist in source_distances {
        let cfg = SimConfig { source_distance: dist, ..config.clone() };
        cfg.validate()?;
        let per_geometry: Vec<Vec<(f64, f64)>> = (0..cfg.n_geometries)
            .into_par_iter()
            .map(|gi| {
                let (_, qf) = cfg.network(gi)?;
                deltas
                    .iter()
                    .map(|&d| Ok((qf.lambda_plus(d, EigenMode::Approx)? / scale, qf.weyl_lower_bound(d)? / scale)))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (k, &delta) in deltas.iter().enumerate() {
            let exact: Vec<f64> = per_geometry.iter().map(|v| v[k].0).collect();
            let bound: Vec<f64> = per_geometry.iter().map(|v| v[k].1).collect();
            rows.push(EigenSweepRow {
                source_distance: dist,
                delta,
                lambda_exact_norm: MeanEstimate::from_samples(&exact),
                lambda_bound_norm: MeanEstimate::from_samples(&bound),
            });
        }
    }
    Ok(rows)
}
