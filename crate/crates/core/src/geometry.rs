//! Sensor network geometry and the spatial correlation structure it induces.
//!
//! Correlation between two points at distance `d` follows the power-exponential
//! kernel `rho(d) = exp(-(d / theta1)^theta2)`. The source-node coefficients
//! form the vector `r`, the inter-node coefficients the matrix `C`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Relative tolerance on negative eigenvalues when checking positive semidefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Planar deployment: `N >= 1` sensor nodes and one event source.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    nodes: Vec<Position>,
    source: Position,
}

impl NetworkGeometry {
    pub fn new(nodes: Vec<Position>, source: Position) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("a network needs at least one node"));
        }
        if !source.is_finite() || nodes.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("node or source position"));
        }
        Ok(Self { nodes, source })
    }

    pub fn nodes(&self) -> &[Position] {
        &self.nodes
    }

    pub fn source(&self) -> Position {
        self.source
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Distances `d_i` from the source to every node.
    pub fn source_distances(&self) -> Vec<f64> {
        self.nodes.iter().map(|p| p.distance(&self.source)).collect()
    }

    /// Symmetric matrix of inter-node distances `d_ij`, zero on the diagonal.
    pub fn node_distances(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = self.nodes[i].distance(&self.nodes[j]);
                d[(i, j)] = dij;
                d[(j, i)] = dij;
            }
        }
        d
    }

    /// Same nodes, source moved to `source`.
    pub fn with_source(&self, source: Position) -> Result<Self> {
        Self::new(self.nodes.clone(), source)
    }
}

/// Parameters of the power-exponential kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationParams {
    theta1: f64,
    theta2: f64,
}

impl CorrelationParams {
    /// `theta1 > 0` normalizes distance, `0 < theta2 <= 2` sets the decay rate.
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1 > 0.0 && theta1.is_finite()) {
            return Err(invalid(format!("theta1 must be positive and finite, got {theta1}")));
        }
        if !(theta2 > 0.0 && theta2 <= 2.0) {
            return Err(invalid(format!("theta2 must lie in (0, 2], got {theta2}")));
        }
        Ok(Self { theta1, theta2 })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }
}

impl Default for CorrelationParams {
    fn default() -> Self {
        Self { theta1: 250.0, theta2: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrelationModel {
    /// Source-node and inter-node coefficients both follow the distance kernel.
    FullRank,
    /// Inter-node coefficients are products of source-node ones, `C = r r^T`.
    RankOne,
    /// Every sensor observes the source itself.
    Unity,
}

impl CorrelationModel {
    pub const ALL: [CorrelationModel; 3] =
        [CorrelationModel::FullRank, CorrelationModel::RankOne, CorrelationModel::Unity];

    pub fn as_str(&self) -> &'static str {
        match self {
            CorrelationModel::FullRank => "full-rank",
            CorrelationModel::RankOne => "rank-one",
            CorrelationModel::Unity => "unity",
        }
    }
}

impl fmt::Display for CorrelationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrelationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full-rank" | "fullrank" | "fr" => Ok(CorrelationModel::FullRank),
            "rank-one" | "rankone" | "ro" => Ok(CorrelationModel::RankOne),
            "unity" | "u" => Ok(CorrelationModel::Unity),
            other => Err(invalid(format!(
                "unknown correlation model '{other}' (expected full-rank, rank-one or unity)"
            ))),
        }
    }
}

/// `rho(d) = exp(-(d / theta1)^theta2)`.
pub fn correlation_coefficient(d: f64, params: &CorrelationParams) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(invalid(format!("distance must be non-negative, got {d}")));
    }
    Ok(kernel(d, params))
}

#[inline]
fn kernel(d: f64, params: &CorrelationParams) -> f64 {
    (-(d / params.theta1).powf(params.theta2)).exp()
}

/// Source-node vector `r` and cross-node matrix `C` under one correlation model.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationStructure {
    r: DVector<f64>,
    c: DMatrix<f64>,
    model: CorrelationModel,
}

impl CorrelationStructure {
    /// Wraps a user-supplied `(r, C)` pair after checking every model invariant,
    /// including positive semidefiniteness of the joint matrix `[[1, r^T], [r, C]]`.
    pub fn from_parts(r: DVector<f64>, c: DMatrix<f64>, model: CorrelationModel) -> Result<Self> {
        let n = r.len();
        if n == 0 {
            return Err(invalid("correlation vector must be non-empty"));
        }
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: c.nrows().max(c.ncols()) });
        }
        if r.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("correlation coefficients"));
        }
        if r.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::ModelValidity("source-node coefficients must lie in (0, 1]".into()));
        }
        if c.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::ModelValidity("inter-node coefficients must lie in [0, 1]".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if c[(i, j)] != c[(j, i)] {
                    return Err(Error::ModelValidity("C must be symmetric".into()));
                }
            }
        }
        match model {
            CorrelationModel::FullRank => {
                if (0..n).any(|i| c[(i, i)] != 1.0) {
                    return Err(Error::ModelValidity("full-rank model needs a unit diagonal".into()));
                }
            }
            CorrelationModel::RankOne => {
                let outer = &r * r.transpose();
                if outer != c {
                    return Err(Error::ModelValidity("rank-one model needs C = r r^T".into()));
                }
            }
            CorrelationModel::Unity => {
                if r.iter().chain(c.iter()).any(|&v| v != 1.0) {
                    return Err(Error::ModelValidity("unity model needs all-ones r and C".into()));
                }
            }
        }
        let s = Self { r, c, model };
        s.check_joint_psd()?;
        Ok(s)
    }

    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn model(&self) -> CorrelationModel {
        self.model
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// The `(N+1) x (N+1)` covariance of `(s, s_1, ..., s_N)` normalized by the source variance.
    pub fn joint_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut j = DMatrix::zeros(n + 1, n + 1);
        j[(0, 0)] = 1.0;
        for i in 0..n {
            j[(0, i + 1)] = self.r[i];
            j[(i + 1, 0)] = self.r[i];
        }
        j.view_mut((1, 1), (n, n)).copy_from(&self.c);
        j
    }

    /// Fails with [`Error::ModelValidity`] when the joint matrix has an eigenvalue
    /// below `-PSD_TOLERANCE * max|eig|`.
    pub fn check_joint_psd(&self) -> Result<()> {
        let eig = self.joint_matrix().symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let min = eig.min();
        if min < -PSD_TOLERANCE * scale {
            return Err(Error::ModelValidity(format!(
                "joint correlation matrix is indefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }
}

/// Builds `r` and `C` for `geometry` under `model`.
pub fn build_correlation(
    geometry: &NetworkGeometry,
    params: &CorrelationParams,
    model: CorrelationModel,
) -> CorrelationStructure {
    let n = geometry.len();
    if model == CorrelationModel::Unity {
        return CorrelationStructure {
            r: DVector::from_element(n, 1.0),
            c: DMatrix::from_element(n, n, 1.0),
            model,
        };
    }

    let r = DVector::from_iterator(n, geometry.source_distances().into_iter().map(|d| kernel(d, params)));
    let c = match model {
        CorrelationModel::FullRank => {
            let nodes = geometry.nodes();
            let mut c = DMatrix::from_element(n, n, 1.0);
            for i in 0..n {
                for j in (i + 1)..n {
                    let rho = kernel(nodes[i].distance(&nodes[j]), params);
                    c[(i, j)] = rho;
                    c[(j, i)] = rho;
                }
            }
            c
        }
        CorrelationModel::RankOne => &r * r.transpose(),
        CorrelationModel::Unity => unreachable!(),
    };
    CorrelationStructure { r, c, model }
}

/// Draws `n_nodes` positions uniformly over a `side x side` square centred at the
/// origin and places the source at `(source_distance, 0)`.
pub fn sample_geometry<R: Rng + ?Sized>(
    rng: &mut R,
    n_nodes: usize,
    side: f64,
    source_distance: f64,
) -> Result<NetworkGeometry> {
    if n_nodes == 0 {
        return Err(invalid("n_nodes must be at least 1"));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(invalid(format!("side must be positive and finite, got {side}")));
    }
    if !(source_distance >= 0.0 && source_distance.is_finite()) {
        return Err(invalid(format!("source distance must be non-negative, got {source_distance}")));
    }
    let half = side / 2.0;
    let nodes = (0..n_nodes)
        .map(|_| Position::new(rng.random_range(-half..=half), rng.random_range(-half..=half)))
        .collect();
    NetworkGeometry::new(nodes, Position::new(source_distance, 0.0))
}
