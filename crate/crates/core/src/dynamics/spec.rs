use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parametric description of the update map `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub family: MapFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MapFamily {
    /// `f(x, s) = L x + b + c[s.id mod len(c)]`.
    ///
    /// `input_offsets` is optional; when empty the map ignores its input.
    Affine {
        lipschitz: f64,
        offset: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        input_offsets: Vec<Vec<f64>>,
    },
    /// Rotation by `theta` in the plane of coordinates 0 and 1 with the
    /// radius pulled toward `radius` by a factor `rho`. Remaining
    /// coordinates contract toward zero by `rho`.
    RotationContraction {
        rho: f64,
        theta: f64,
        #[serde(default)]
        radius: f64,
    },
    /// Expands away from the fixed point by `pre_lipschitz` for steps
    /// `n < onset`, then contracts toward it by `lipschitz`.
    DelayedContraction {
        onset: u64,
        pre_lipschitz: f64,
        lipschitz: f64,
        offset: Vec<f64>,
    },
    /// Piecewise affine map. Basin `i` applies when exactly `i` thresholds
    /// are `<=` the selector coordinate.
    MultiBasin {
        selector: usize,
        thresholds: Vec<f64>,
        basins: Vec<Basin>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basin {
    pub lipschitz: f64,
    pub offset: Vec<f64>,
}

impl MapSpec {
    /// Input-ignoring affine map with the same offset on every coordinate.
    pub fn affine(dim: usize, lipschitz: f64, offset: f64) -> Self {
        MapSpec {
            dim,
            family: MapFamily::Affine {
                lipschitz,
                offset: vec![offset; dim],
                input_offsets: Vec::new(),
            },
        }
    }

    pub fn rotation_contraction(dim: usize, rho: f64, theta: f64, radius: f64) -> Self {
        MapSpec {
            dim,
            family: MapFamily::RotationContraction { rho, theta, radius },
        }
    }

    pub fn delayed_contraction(
        dim: usize,
        onset: u64,
        pre_lipschitz: f64,
        lipschitz: f64,
        offset: f64,
    ) -> Self {
        MapSpec {
            dim,
            family: MapFamily::DelayedContraction {
                onset,
                pre_lipschitz,
                lipschitz,
                offset: vec![offset; dim],
            },
        }
    }

    /// Two basins split at zero on coordinate 0: `L x - c` below, `L x + c`
    /// at or above.
    pub fn two_basin(dim: usize, lipschitz: f64, c: f64) -> Self {
        MapSpec {
            dim,
            family: MapFamily::MultiBasin {
                selector: 0,
                thresholds: vec![0.0],
                basins: vec![
                    Basin {
                        lipschitz,
                        offset: vec![-c; dim],
                    },
                    Basin {
                        lipschitz,
                        offset: vec![c; dim],
                    },
                ],
            },
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            MapFamily::Affine { .. } => "affine",
            MapFamily::RotationContraction { .. } => "rotation-contraction",
            MapFamily::DelayedContraction { .. } => "delayed-contraction",
            MapFamily::MultiBasin { .. } => "multi-basin",
        }
    }

    /// The contraction factor that holds in the long run, where the family
    /// has a single one.
    pub fn asymptotic_lipschitz(&self) -> Option<f64> {
        match &self.family {
            MapFamily::Affine { lipschitz, .. } | MapFamily::DelayedContraction { lipschitz, .. } => {
                Some(*lipschitz)
            }
            MapFamily::RotationContraction { .. } | MapFamily::MultiBasin { .. } => None,
        }
    }

    /// `b / (1 - L)` for input-free affine and delayed maps.
    pub fn fixed_point(&self) -> Option<Vec<f64>> {
        match &self.family {
            MapFamily::Affine {
                lipschitz,
                offset,
                input_offsets,
            } if *lipschitz < 1.0 && input_offsets.is_empty() => {
                Some(offset.iter().map(|b| b / (1.0 - lipschitz)).collect())
            }
            MapFamily::DelayedContraction {
                lipschitz, offset, ..
            } => Some(offset.iter().map(|b| b / (1.0 - lipschitz)).collect()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        let check_vec = |field: &'static str, v: &[f64]| -> Result<()> {
            if v.len() != d {
                return Err(Error::param(field, format!("length {} != dim {d}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::param(field, "must be finite"));
            }
            Ok(())
        };
        match &self.family {
            MapFamily::Affine {
                lipschitz,
                offset,
                input_offsets,
            } => {
                if !(lipschitz.is_finite() && *lipschitz >= 0.0) {
                    return Err(Error::param("lipschitz", format!("{lipschitz} not in [0, inf)")));
                }
                check_vec("offset", offset)?;
                for c in input_offsets {
                    check_vec("input_offsets", c)?;
                }
            }
            MapFamily::RotationContraction { rho, theta, radius } => {
                if d < 2 {
                    return Err(Error::param("dim", "rotation-contraction needs dim >= 2"));
                }
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::param("rho", format!("{rho} not in (0, 1)")));
                }
                if !theta.is_finite() {
                    return Err(Error::param("theta", "must be finite"));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::param("radius", format!("{radius} not in [0, inf)")));
                }
            }
            MapFamily::DelayedContraction {
                pre_lipschitz,
                lipschitz,
                offset,
                ..
            } => {
                if !(pre_lipschitz.is_finite() && *pre_lipschitz > 1.0) {
                    return Err(Error::param(
                        "pre_lipschitz",
                        format!("{pre_lipschitz} must be > 1"),
                    ));
                }
                if !(*lipschitz >= 0.0 && *lipschitz < 1.0) {
                    return Err(Error::param("lipschitz", format!("{lipschitz} not in [0, 1)")));
                }
                check_vec("offset", offset)?;
            }
            MapFamily::MultiBasin {
                selector,
                thresholds,
                basins,
            } => {
                if *selector >= d {
                    return Err(Error::param("selector", format!("{selector} >= dim {d}")));
                }
                if basins.is_empty() {
                    return Err(Error::param("basins", "need at least one basin"));
                }
                if thresholds.len() + 1 != basins.len() {
                    return Err(Error::param(
                        "thresholds",
                        format!("{} basins need {} thresholds", basins.len(), basins.len() - 1),
                    ));
                }
                if thresholds.iter().any(|t| !t.is_finite())
                    || thresholds.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::param("thresholds", "must be finite and strictly increasing"));
                }
                for b in basins {
                    if !(b.lipschitz.is_finite() && b.lipschitz >= 0.0) {
                        return Err(Error::param("lipschitz", format!("{} not in [0, inf)", b.lipschitz)));
                    }
                    check_vec("offset", &b.offset)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    None,
    GaussianIid,
    UniformIid,
}

/// Zero-mean i.i.d. additive noise. `sigma` is the per-coordinate standard
/// deviation for both distributions (the uniform law has half-width
/// `sigma * sqrt(3)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::default()
    }

    pub fn gaussian(sigma: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::GaussianIid,
            sigma,
        }
    }

    pub fn uniform(sigma: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::UniformIid,
            sigma,
        }
    }

    /// Per-coordinate variance of a draw.
    pub fn variance(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            _ => self.sigma * self.sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != NoiseKind::None && !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::param("sigma", format!("{} not in [0, inf)", self.sigma)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters_naming_field() {
        let bad = MapSpec::rotation_contraction(2, 1.0, 0.1, 0.0);
        match bad.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "rho"),
            other => panic!("{other:?}"),
        }
        let bad = MapSpec::delayed_contraction(1, 10, 0.9, 0.5, 0.0);
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidParameter { field: "pre_lipschitz", .. })
        ));
        let bad = MapSpec::affine(2, -0.1, 0.0);
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidParameter { field: "lipschitz", .. })
        ));
        let mut bad = MapSpec::two_basin(1, 0.5, 2.0);
        if let MapFamily::MultiBasin { thresholds, .. } = &mut bad.family {
            thresholds.push(1.0);
        }
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidParameter { field: "thresholds", .. })
        ));
        assert!(NoiseSpec::gaussian(-1.0).validate().is_err());
        assert!(MapSpec::affine(0, 0.5, 0.0).validate().is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = MapSpec::affine(2, 0.5, 1.0);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"dim":2,"family":"affine","lipschitz":0.5,"offset":[1.0,1.0]}"#);
        let back: MapSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let noise = serde_json::to_string(&NoiseSpec::gaussian(0.05)).unwrap();
        assert_eq!(noise, r#"{"kind":"gaussian-iid","sigma":0.05}"#);
    }

    #[test]
    fn fixed_point_formula() {
        assert_eq!(MapSpec::affine(1, 0.5, 1.0).fixed_point(), Some(vec![2.0]));
        assert_eq!(MapSpec::affine(1, 1.0, 0.0).fixed_point(), None);
    }
}
