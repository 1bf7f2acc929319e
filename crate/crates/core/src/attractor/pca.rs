//! Principal component projection of latent trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix};
use crate::state::State;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Orthonormal principal directions, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalue of each component (non-increasing).
    pub explained_variance: Vec<f64>,
    /// Mean subtracted before projecting.
    pub mean: Vec<f64>,
    /// Coordinates of each input state in the component basis.
    pub projected: Vec<Vec<f64>>,
}

impl Projection {
    /// Coordinates of an arbitrary state in this basis.
    pub fn project(&self, state: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(state)
                    .zip(&self.mean)
                    .map(|((c, x), m)| c * (x - m))
                    .sum()
            })
            .collect()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }
}

/// Sample covariance (divisor `n - 1`) of the given states.
pub fn covariance(states: &[State]) -> (Vec<f64>, SymMatrix) {
    let d = states[0].dim();
    let n = states.len() as f64;
    let mut mean = vec![0.0; d];
    for s in states {
        mean.iter_mut().zip(s.as_slice()).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = SymMatrix::zeros(d);
    let mut centered = vec![0.0; d];
    for s in states {
        centered
            .iter_mut()
            .zip(s.as_slice())
            .zip(&mean)
            .for_each(|((c, x), m)| *c = x - m);
        for i in 0..d {
            for j in i..d {
                cov.set(i, j, cov.get(i, j) + centered[i] * centered[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / (n - 1.0);
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    (mean, cov)
}

/// Projects mean-centred `states` onto the top `n_components` eigenvectors
/// of their sample covariance.
pub fn pca_project(states: &[State], n_components: usize) -> Result<Projection> {
    if states.len() < 2 {
        return Err(Error::InsufficientData("PCA needs at least two states".into()));
    }
    let d = states[0].dim();
    if let Some(bad) = states.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    if n_components == 0 || n_components > d {
        return Err(Error::param(
            "n_components",
            format!("{n_components} not in [1, {d}]"),
        ));
    }
    let (mean, cov) = covariance(states);
    let total: f64 = (0..d).map(|i| cov.get(i, i)).sum();
    if total <= 0.0 {
        return Err(Error::ZeroVariance("PCA input (all states identical)"));
    }
    let eig = sym_eigen(&cov);
    let components: Vec<Vec<f64>> = eig.vectors.into_iter().take(n_components).collect();
    // Round-off can leave tiny negative eigenvalues on rank-deficient data.
    let explained_variance: Vec<f64> = eig.values.iter().take(n_components).map(|v| v.max(0.0)).collect();
    let mut proj = Projection {
        components,
        explained_variance,
        mean,
        projected: Vec::new(),
    };
    proj.projected = states.iter().map(|s| proj.project(s.as_slice())).collect();
    Ok(proj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[[f64; 2]]) -> Vec<State> {
        v.iter().map(|p| State::new(p.to_vec()).unwrap()).collect()
    }

    #[test]
    fn collinear_points() {
        let p = pca_project(&pts(&[[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [5.0, 1.0]]), 2).unwrap();
        assert_eq!(p.components[0], vec![1.0, 0.0]);
        assert_eq!(p.explained_variance[1], 0.0);
        assert!(p.projected.iter().all(|q| q[1] == 0.0));
    }

    #[test]
    fn zero_variance_rejected() {
        assert!(matches!(
            pca_project(&pts(&[[1.0, 1.0]; 5]), 1),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn component_count_checked() {
        let s = pts(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(pca_project(&s, 3).is_err());
        assert!(pca_project(&s, 0).is_err());
        assert!(pca_project(&s[..1], 1).is_err());
    }

    #[test]
    fn full_rank_reconstruction() {
        let s = pts(&[[0.3, 1.0], [1.2, -0.4], [2.0, 0.9], [-1.0, 0.1], [0.0, 0.0]]);
        let p = pca_project(&s, 2).unwrap();
        for (state, q) in s.iter().zip(&p.projected) {
            for i in 0..2 {
                let back = p.mean[i] + q[0] * p.components[0][i] + q[1] * p.components[1][i];
                assert!((back - state[i]).abs() < 1e-12);
            }
        }
    }
}
