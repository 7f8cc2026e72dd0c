//! Gaussian-mixture benchmark targets.

use crate::error::{PmcError, Result};
use crate::gaussian::{ProposalPopulation, LN_2PI};
use crate::target::Target;
use crate::weighting::OnlineLogSumExp;

/// Covariance of one mixture component.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    /// Dense symmetric positive-definite matrix, row-major rows.
    Full(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
enum Precision {
    Diagonal(Vec<f64>),
    /// Lower Cholesky factor `L`, row-major `dim x dim`.
    Cholesky(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
struct Component {
    log_weight_plus_norm: f64,
    mean: Vec<f64>,
    precision: Precision,
}

impl Component {
    #[inline]
    fn log_kernel(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let quad = match &self.precision {
            Precision::Diagonal(inv_var) => {
                let mut q = 0.0;
                for ((xd, md), iv) in x.iter().zip(&self.mean).zip(inv_var) {
                    let d = xd - md;
                    q += d * d * iv;
                }
                q
            }
            Precision::Cholesky(l) => {
                // Solve L z = x - mean; quad = |z|^2.
                let n = self.mean.len();
                let mut q = 0.0;
                for i in 0..n {
                    let mut s = x[i] - self.mean[i];
                    for j in 0..i {
                        s -= l[i * n + j] * scratch[j];
                    }
                    let z = s / l[i * n + i];
                    scratch[i] = z;
                    q += z * z;
                }
                q
            }
        };
        self.log_weight_plus_norm - 0.5 * quad
    }
}

fn cholesky(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PmcError::contract("covariance must be square"));
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            if (rows[i][j] - rows[j][i]).abs() > 1e-12 * rows[i][j].abs().max(1.0) {
                return Err(PmcError::contract("covariance must be symmetric"));
            }
            let mut s = rows[i][j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(PmcError::contract("covariance must be positive definite"));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// `sum_k w_k N(x; mean_k, cov_k)`, normalized, so `Z = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureTarget {
    dim: usize,
    weights: Vec<f64>,
    components: Vec<Component>,
    has_full: bool,
    known_mean: Vec<f64>,
}

impl GaussianMixtureTarget {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covs: Vec<Covariance>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != covs.len() {
            return Err(PmcError::contract(
                "weights, means and covariances must be nonempty and of equal length",
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(PmcError::contract("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(PmcError::contract(format!(
                "mixture weights sum to {total}"
            )));
        }
        let dim = means[0].len();
        if dim == 0 || means.iter().any(|m| m.len() != dim) {
            return Err(PmcError::contract(
                "component means must share a positive dimension",
            ));
        }

        let mut components = Vec::with_capacity(weights.len());
        for ((w, mean), cov) in weights.iter().zip(&means).zip(covs) {
            let (precision, log_det) = match cov {
                Covariance::Isotropic(v) => {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(PmcError::contract("variance must be positive"));
                    }
                    (Precision::Diagonal(vec![1.0 / v; dim]), dim as f64 * v.ln())
                }
                Covariance::Diagonal(d) => {
                    if d.len() != dim || d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                        return Err(PmcError::contract("diagonal covariance invalid"));
                    }
                    let ld = d.iter().map(|v| v.ln()).sum();
                    (Precision::Diagonal(d.iter().map(|v| 1.0 / v).collect()), ld)
                }
                Covariance::Full(rows) => {
                    if rows.len() != dim {
                        return Err(PmcError::contract("covariance dimension mismatch"));
                    }
                    let l = cholesky(&rows)?;
                    let ld = 2.0 * (0..dim).map(|i| l[i * dim + i].ln()).sum::<f64>();
                    (Precision::Cholesky(l), ld)
                }
            };
            components.push(Component {
                log_weight_plus_norm: w.ln() - 0.5 * (dim as f64 * LN_2PI + log_det),
                mean: mean.clone(),
                precision,
            });
        }
        let mut known_mean = vec![0.0; dim];
        for (w, m) in weights.iter().zip(&means) {
            for (acc, v) in known_mean.iter_mut().zip(m) {
                *acc += w * v;
            }
        }
        let has_full = components
            .iter()
            .any(|c| matches!(c.precision, Precision::Cholesky(_)));
        Ok(Self {
            dim,
            weights,
            components,
            has_full,
            known_mean,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn component_means(&self) -> Vec<&[f64]> {
        self.components.iter().map(|c| c.mean.as_slice()).collect()
    }
}

impl Target for GaussianMixtureTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim {
            return f64::NEG_INFINITY;
        }
        let mut stack = [0.0; 4];
        let mut heap = Vec::new();
        let scratch: &mut [f64] = if self.dim <= 4 {
            &mut stack[..self.dim]
        } else if self.has_full {
            heap.resize(self.dim, 0.0);
            &mut heap
        } else {
            &mut []
        };
        let mut lse = OnlineLogSumExp::new();
        for c in &self.components {
            lse.push(c.log_kernel(x, scratch));
        }
        lse.log_mean_over(1.0)
    }

    fn known_z(&self) -> Option<f64> {
        Some(1.0)
    }

    fn known_mean(&self) -> Option<&[f64]> {
        Some(&self.known_mean)
    }
}

/// `0.5 N(-3, 1) + 0.5 N(3, 1)` and the two-proposal population of the chosen
/// scenario: `N(-3, 1), N(3, 1)` (1) or `N(-2.5, 1.2^2), N(2.5, 1.2^2)` (2).
pub fn make_bimodal_1d(scenario: u8) -> Result<(GaussianMixtureTarget, ProposalPopulation)> {
    let (offset, sigma) = match scenario {
        1 => (3.0, 1.0),
        2 => (2.5, 1.2),
        other => {
            return Err(PmcError::config(format!(
                "bimodal scenario must be 1 or 2, got {other}"
            )))
        }
    };
    let target = GaussianMixtureTarget::new(
        vec![0.5, 0.5],
        vec![vec![-3.0], vec![3.0]],
        vec![Covariance::Isotropic(1.0), Covariance::Isotropic(1.0)],
    )?;
    let pop = ProposalPopulation::isotropic(vec![vec![-offset], vec![offset]], sigma, 0)?;
    Ok((target, pop))
}

pub const MOG5_MEANS: [[f64; 2]; 5] = [
    [-10.0, -10.0],
    [0.0, 16.0],
    [13.0, 8.0],
    [-9.0, 7.0],
    [14.0, -14.0],
];

pub const MOG5_COVS: [[[f64; 2]; 2]; 5] = [
    [[2.0, 0.6], [0.6, 1.0]],
    [[2.0, -0.4], [-0.4, 2.0]],
    [[2.0, 0.8], [0.8, 2.0]],
    [[3.0, 0.0], [0.0, 0.5]],
    [[2.0, -0.1], [-0.1, 2.0]],
];

/// Five-component equal-weight bivariate mixture, mean `[1.6, 1.4]`.
pub fn make_mog5_2d() -> GaussianMixtureTarget {
    let means = MOG5_MEANS.iter().map(|m| m.to_vec()).collect();
    let covs = MOG5_COVS
        .iter()
        .map(|c| Covariance::Full(c.iter().map(|r| r.to_vec()).collect()))
        .collect();
    GaussianMixtureTarget::new(vec![0.2; 5], means, covs).expect("benchmark mixture is valid")
}

pub const MOG3_LOCATIONS: [f64; 3] = [-5.0, 6.0, 3.0];
/// Per-coordinate standard deviation of every component.
pub const MOG3_SCALE: f64 = 8.0;
pub const MOG3_MAX_DIM: usize = 50;

/// Three isotropic components centred at `-5`, `6`, `3` in every coordinate,
/// each with covariance `xi^2 I`.
pub fn make_mog3_nd_with_scale(dim: usize, xi: f64) -> Result<GaussianMixtureTarget> {
    if !(1..=MOG3_MAX_DIM).contains(&dim) {
        return Err(PmcError::config(format!(
            "dimension must lie in 1..={MOG3_MAX_DIM}, got {dim}"
        )));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(PmcError::config(format!(
            "component scale must be positive, got {xi}"
        )));
    }
    let means = MOG3_LOCATIONS.iter().map(|&m| vec![m; dim]).collect();
    let w = 1.0 / 3.0;
    // Equal thirds sum to 1 only within rounding.
    GaussianMixtureTarget::new(
        vec![w, w, 1.0 - 2.0 * w],
        means,
        vec![Covariance::Isotropic(xi * xi); 3],
    )
}

pub fn make_mog3_nd(dim: usize) -> Result<GaussianMixtureTarget> {
    make_mog3_nd_with_scale(dim, MOG3_SCALE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighting::mixture_log_density;

    fn grid_2d(t: &GaussianMixtureTarget, lo: f64, hi: f64, n: usize) -> (f64, [f64; 2]) {
        let h = (hi - lo) / (n - 1) as f64;
        let (mut z, mut m) = (0.0, [0.0; 2]);
        for i in 0..n {
            for j in 0..n {
                let x = [lo + i as f64 * h, lo + j as f64 * h];
                let p = t.log_density(&x).exp();
                z += p;
                m[0] += p * x[0];
                m[1] += p * x[1];
            }
        }
        (z * h * h, [m[0] * h * h, m[1] * h * h])
    }

    #[test]
    fn bimodal_scenario_one_mixture_equals_target() {
        let (t, pop) = make_bimodal_1d(1).unwrap();
        for i in 0..=2000 {
            let x = -10.0 + i as f64 * 0.01;
            let a = t.log_density(&[x]);
            let b = mixture_log_density(&[x], &pop).unwrap();
            assert!((a - b).abs() < 1e-12, "x={x}");
        }
        assert_eq!(t.known_z(), Some(1.0));
        assert_eq!(t.known_mean(), Some(&[0.0][..]));
        assert!(make_bimodal_1d(3).is_err());
    }

    #[test]
    fn mog5_quadrature_and_mean() {
        let t = make_mog5_2d();
        let km = t.known_mean().unwrap();
        assert!((km[0] - 1.6).abs() < 1e-12 && (km[1] - 1.4).abs() < 1e-12);
        let (z, m) = grid_2d(&t, -25.0, 25.0, 1001);
        assert!((z - 1.0).abs() < 0.01, "z={z}");
        assert!(
            (m[0] - 1.6).abs() < 0.01 && (m[1] - 1.4).abs() < 0.01,
            "{m:?}"
        );
    }

    #[test]
    fn mog5_mode_dominates_midpoint() {
        let t = make_mog5_2d();
        let mid = [(-10.0 + 14.0) / 2.0, (-10.0 - 14.0) / 2.0];
        assert!(t.log_density(&[-10.0, -10.0]) >= t.log_density(&mid));
    }

    #[test]
    fn full_covariance_matches_closed_form_bivariate() {
        let t = GaussianMixtureTarget::new(
            vec![1.0],
            vec![vec![1.0, -2.0]],
            vec![Covariance::Full(vec![vec![2.0, 0.6], vec![0.6, 1.0]])],
        )
        .unwrap();
        let x = [0.3, 0.4];
        let det: f64 = 2.0 * 1.0 - 0.36;
        let (dx, dy) = (x[0] - 1.0, x[1] + 2.0);
        let quad = (1.0 * dx * dx - 2.0 * 0.6 * dx * dy + 2.0 * dy * dy) / det;
        let want = -LN_2PI - 0.5 * det.ln() - 0.5 * quad;
        assert!((t.log_density(&x) - want).abs() < 1e-13);
    }

    #[test]
    fn mog3_properties() {
        let t = make_mog3_nd(1).unwrap();
        let h = 0.001;
        let mut z = 0.0;
        for i in 0..=200_000 {
            z += t.log_density(&[-100.0 + i as f64 * h]).exp();
        }
        assert!((z * h - 1.0).abs() < 1e-3);

        let t = make_mog3_nd(10).unwrap();
        assert!(t
            .known_mean()
            .unwrap()
            .iter()
            .all(|m| (m - 4.0 / 3.0).abs() < 1e-15));
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
        let mut y = x.clone();
        y.reverse();
        y.swap(2, 7);
        assert!((t.log_density(&x) - t.log_density(&y)).abs() < 1e-12);

        assert!(matches!(make_mog3_nd(0), Err(PmcError::Config(_))));
        assert!(matches!(make_mog3_nd(51), Err(PmcError::Config(_))));
    }

    #[test]
    fn rejects_bad_weights() {
        let bad = GaussianMixtureTarget::new(
            vec![0.5, 0.6],
            vec![vec![0.0], vec![1.0]],
            vec![Covariance::Isotropic(1.0), Covariance::Isotropic(1.0)],
        );
        assert!(bad.is_err());
    }
}
