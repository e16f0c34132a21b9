//! Closed-form versus Monte Carlo validation suite behind the `validate` command.

use nalgebra::DVector;
use rand::Rng;

use crate::error::Result;
use crate::estimator::{
    distortion_fullrank_epa, distortion_rankone_epa, distortion_unity_epa, FadingRealization,
};
use crate::geometry::{CorrelationModel, CorrelationStructure};
use crate::outage::{EigenMode, EigenPolicy};
use crate::simulation::{
    closed_form_outage_curve, empirical_outage, mc_distortion_mean, mc_outage, substream, sweep_eigenvalue,
    GeometryMode, Purpose, SimConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Sizes of the validation experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationScale {
    /// Geometries averaged in the floor, ordering and eigenvalue checks.
    pub geometries: usize,
    /// Fixed geometries in the closed-form versus Monte Carlo comparison.
    pub oracle_geometries: usize,
    /// Channel draws per oracle geometry.
    pub oracle_draws: u64,
}

impl Default for ValidationScale {
    fn default() -> Self {
        Self { geometries: 1000, oracle_geometries: 20, oracle_draws: 100_000 }
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn grid(step: f64, from: usize, to: usize) -> Vec<f64> {
    (from..=to).map(|k| k as f64 * step).collect()
}

pub fn check_floor(base: &SimConfig, scale: &ValidationScale) -> Result<Check> {
    let mut detail = Vec::new();
    let mut passed = true;
    for n in [100usize, 300, 500] {
        let cfg = SimConfig {
            n_nodes: n,
            model: CorrelationModel::FullRank,
            fading_enabled: false,
            n_geometries: scale.geometries,
            ..base.clone()
        };
        let m = mc_distortion_mean(&cfg)?.mean;
        passed &= (m - 0.182).abs() <= 0.02;
        detail.push(format!("full-rank N={n}: {m:.4}"));
    }
    for model in [CorrelationModel::RankOne, CorrelationModel::Unity] {
        let cfg = SimConfig { n_nodes: 500, model, fading_enabled: false, n_geometries: scale.geometries, ..base.clone() };
        let m = mc_distortion_mean(&cfg)?.mean;
        passed &= m < 0.01;
        detail.push(format!("{model} N=500: {m:.2e}"));
    }
    Ok(Check::new("distortion-floor", passed, detail.join("; ")))
}

pub fn check_reductions(base: &SimConfig) -> Result<Check> {
    let params = base.channel;
    let mut worst = 0.0_f64;
    let mut rng = substream(base.seed, Purpose::Signal, 0, 0);
    for n in 1..=50usize {
        let ones = CorrelationStructure::from_parts(
            DVector::from_element(n, 1.0),
            nalgebra::DMatrix::from_element(n, n, 1.0),
            CorrelationModel::Unity,
        )?;
        worst = worst.max(relative_gap(distortion_fullrank_epa(&ones, &params), distortion_unity_epa(n, &params)));
        for _ in 0..100 {
            let r = DVector::from_fn(n, |_, _| rng.random_range(0.01..=1.0));
            let c = &r * r.transpose();
            let ro = CorrelationStructure::from_parts(r, c, CorrelationModel::RankOne)?;
            worst = worst.max(relative_gap(distortion_fullrank_epa(&ro, &params), distortion_rankone_epa(&ro, &params)));
        }
    }
    Ok(Check::new("reduction-identities", worst <= 1e-12, format!("max relative gap {worst:.2e}")))
}

pub fn check_oracle(base: &SimConfig, scale: &ValidationScale) -> Result<Check> {
    let cfg = SimConfig { n_nodes: 10, model: CorrelationModel::FullRank, ..base.clone() };
    let deltas = grid(0.05, 1, 19);
    let policy = EigenPolicy::default();
    let (mut inside, mut total) = (0usize, 0usize);
    for gi in 0..scale.oracle_geometries {
        let (_, qf) = cfg.network(gi)?;
        let mc = empirical_outage(&qf, &deltas, scale.oracle_draws, cfg.seed, gi)?;
        for pt in mc {
            let p = qf.outage_general(pt.delta, EigenMode::Exact, &policy)?.probability;
            total += 1;
            inside += usize::from(pt.ci_low <= p && p <= pt.ci_high);
        }
    }
    let frac = inside as f64 / total as f64;
    Ok(Check::new("closed-form-vs-monte-carlo", frac >= 0.95, format!("{inside}/{total} points inside the 99% CI")))
}

pub fn check_outage_floor(base: &SimConfig, scale: &ValidationScale) -> Result<Check> {
    let deltas = grid(0.05, 1, 19);
    let mut curves = Vec::new();
    for model in CorrelationModel::ALL {
        let cfg = SimConfig { n_nodes: 10, model, n_geometries: scale.geometries, ..base.clone() };
        curves.push(closed_form_outage_curve(&cfg, &deltas, GeometryMode::Resampled, EigenMode::Exact)?);
    }
    let (fr, ro, u) = (&curves[0], &curves[1], &curves[2]);
    let mut passed = true;
    let mut min_floor = 1.0_f64;
    for (k, &d) in deltas.iter().enumerate() {
        if d <= 0.15 + 1e-12 {
            min_floor = min_floor.min(fr[k].mean);
            passed &= fr[k].mean >= 0.99;
        }
        let slack = |a: f64, b: f64| 2.0 * (a * a + b * b).sqrt();
        passed &= u[k].mean <= ro[k].mean + slack(u[k].std_err, ro[k].std_err);
        passed &= ro[k].mean <= fr[k].mean + slack(ro[k].std_err, fr[k].std_err);
    }
    Ok(Check::new("outage-floor-and-ordering", passed, format!("min full-rank outage for delta <= 0.15: {min_floor:.4}")))
}

pub fn check_bound_sandwich(base: &SimConfig) -> Result<Check> {
    let cfg = SimConfig { n_nodes: 10, model: CorrelationModel::FullRank, ..base.clone() };
    let upper = cfg.channel.eigen_scale();
    let deltas = grid(0.01, 0, 100);
    let (mut violations, mut negative_lambda) = (0usize, 0usize);
    for gi in 0..100 {
        let (_, qf) = cfg.network(gi)?;
        for &d in &deltas {
            let lp = qf.lambda_plus(d, EigenMode::Approx)?;
            let lb = qf.weyl_lower_bound(d)?;
            let tol = 1e-10 * upper;
            let bad = lb > lp + tol || lp > upper + tol;
            violations += usize::from(bad);
            negative_lambda += usize::from(bad && lp < 0.0);
        }
    }
    Ok(Check::new(
        "bound-sandwich",
        violations == 0,
        format!(
            "{violations} violations over {} points ({negative_lambda} where the largest eigenvalue is negative \
             and the clamped bound is 0)",
            100 * deltas.len()
        ),
    ))
}

pub fn check_distance_ordering(base: &SimConfig, scale: &ValidationScale) -> Result<Check> {
    let cfg = SimConfig { n_nodes: 10, model: CorrelationModel::FullRank, n_geometries: scale.geometries, ..base.clone() };
    let deltas = grid(0.05, 0, 20);
    let rows = sweep_eigenvalue(&cfg, &[0.0, 30.0, 50.0], &deltas)?;
    let k = deltas.len();
    let mut passed = true;
    for i in 0..k {
        for pair in [(i, i + k), (i + k, i + 2 * k)] {
            let (near, far) = (&rows[pair.0].lambda_exact_norm, &rows[pair.1].lambda_exact_norm);
            passed &= near.mean + 2.0 * (near.std_err.powi(2) + far.std_err.powi(2)).sqrt() >= far.mean;
        }
    }
    Ok(Check::new("source-distance-ordering", passed, format!("{} grid points per distance", k)))
}

pub fn check_edges(base: &SimConfig) -> Result<Check> {
    let cfg = SimConfig { n_fading_draws: 10_000, ..base.clone() };
    let (_, qf) = cfg.network(0)?;
    let policy = EigenPolicy::default();
    let mut passed = qf.outage_general(0.0, EigenMode::Exact, &policy)?.probability == 1.0
        && qf.outage_general(1.0, EigenMode::Exact, &policy)?.probability == 0.0;
    let mc = mc_outage(&cfg, &[0.0, 1.0], GeometryMode::Fixed)?;
    passed &= mc[0].p_hat == 1.0 && mc[1].p_hat == 0.0;
    passed &= qf.normalized_distortion(&FadingRealization::zeros(cfg.n_nodes))? == 1.0;
    let samples = crate::simulation::distortion_draws(&qf, cfg.seed, Purpose::Fading, 0, 10_000)?;
    passed &= samples.iter().all(|&d| d > 0.0 && d <= 1.0);
    Ok(Check::new("edge-exactness", passed, "P_out(0)=1, P_out(1)=0, D(g=0)=1, samples in (0,1]".into()))
}

pub fn check_monotonicity(base: &SimConfig) -> Result<Check> {
    let deltas = grid(0.01, 0, 100);
    let policy = EigenPolicy::default();
    let mut passed = true;
    for model in CorrelationModel::ALL {
        let cfg = SimConfig { model, ..base.clone() };
        for gi in 0..20 {
            let (_, qf) = cfg.network(gi)?;
            let (mut prev_p, mut prev_l) = (f64::INFINITY, f64::NEG_INFINITY);
            for &d in &deltas {
                let p = qf.outage_general(d, EigenMode::Exact, &policy)?.probability;
                let l = qf.lambda_plus(d, EigenMode::Exact)?;
                passed &= p <= prev_p + 1e-12 && l >= prev_l - 1e-12 * l.abs().max(1.0);
                prev_p = p;
                prev_l = l;
            }
        }
    }
    Ok(Check::new("monotonicity", passed, "P_out nonincreasing and lambda_plus nondecreasing in delta".into()))
}

pub fn check_determinism(base: &SimConfig) -> Result<Check> {
    let cfg = SimConfig { n_geometries: 50, n_fading_draws: 200, ..base.clone() };
    let deltas = grid(0.1, 0, 10);
    let mut outputs = Vec::new();
    for threads in [1, 4, 16] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        let pts = pool.install(|| mc_outage(&cfg, &deltas, GeometryMode::Resampled))?;
        outputs.push(pts.iter().map(|p| p.p_hat.to_bits()).collect::<Vec<_>>());
    }
    let passed = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(Check::new("determinism", passed, "identical outage counts with 1, 4 and 16 threads".into()))
}

/// Runs every check on top of `base`.
pub fn run_all(base: &SimConfig, scale: &ValidationScale) -> Result<Vec<Check>> {
    Ok(vec![
        check_floor(base, scale)?,
        check_reductions(base)?,
        check_oracle(base, scale)?,
        check_outage_floor(base, scale)?,
        check_bound_sandwich(base)?,
        check_distance_ordering(base, scale)?,
        check_edges(base)?,
        check_determinism(base)?,
        check_monotonicity(base)?,
    ])
}
