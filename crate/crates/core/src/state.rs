//! Latent states, symbolic inputs and trajectories.
//!
//! States and symbols are distinct types: nothing in the crate converts a
//! [`SymbolicInput`] into a [`State`] or back, so the update rule can only
//! ever produce latent vectors.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::dynamics::{MapSpec, NoiseSpec};
use crate::error::{Error, Result};

/// A point in the latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(Vec<f64>);

impl State {
    /// Builds a state, rejecting empty or non-finite vectors.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("state"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        Ok(State(values))
    }

    pub fn zeros(dim: usize) -> Self {
        State(vec![0.0; dim])
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        State(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &State) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

impl Index<usize> for State {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for State {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A token from the symbolic input alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicInput {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl SymbolicInput {
    pub fn new(id: u64) -> Self {
        SymbolicInput { id, text: None }
    }

    pub fn with_text(id: u64, text: impl Into<String>) -> Self {
        SymbolicInput {
            id,
            text: Some(text.into()),
        }
    }
}

/// Where a trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    #[default]
    Simulated,
    Extracted,
}

/// An orbit `A_0, A_1, ..., A_n` together with the inputs `s_0 .. s_{n-1}`
/// that drove it.
///
/// `inputs[k]` is the symbol consumed when moving from `states[k]` to
/// `states[k + 1]`, so there is always exactly one more state than inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    states: Vec<State>,
    inputs: Vec<SymbolicInput>,
    pub source: TraceSource,
    pub seed: Option<u64>,
    pub map: Option<MapSpec>,
    pub noise: Option<NoiseSpec>,
    pub model_id: Option<String>,
}

impl Trajectory {
    /// Assembles a trajectory from parts, checking the shape invariants.
    pub fn new(states: Vec<State>, inputs: Vec<SymbolicInput>) -> Result<Self> {
        let first = states.first().ok_or(Error::Empty("trajectory"))?;
        let dim = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        if states.len() != inputs.len() + 1 {
            return Err(Error::param(
                "inputs",
                format!(
                    "{} states need {} inputs, got {}",
                    states.len(),
                    states.len() - 1,
                    inputs.len()
                ),
            ));
        }
        Ok(Trajectory {
            dim,
            states,
            inputs,
            source: TraceSource::Simulated,
            seed: None,
            map: None,
            noise: None,
            model_id: None,
        })
    }

    /// Wraps externally produced states, labelling step `k` with input id `k`.
    pub fn from_states(states: Vec<State>) -> Result<Self> {
        let n = states.len().saturating_sub(1);
        let inputs = (0..n as u64).map(SymbolicInput::new).collect();
        let mut t = Trajectory::new(states, inputs)?;
        t.source = TraceSource::Extracted;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn inputs(&self) -> &[SymbolicInput] {
        &self.inputs
    }

    /// Number of update steps (`states().len() - 1`).
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    /// Applies `f` to every state, keeping inputs and provenance.
    pub fn map_states(&self, mut f: impl FnMut(&State) -> State) -> Result<Self> {
        let states = self.states.iter().map(&mut f).collect();
        let mut t = Trajectory::new(states, self.inputs.clone())?;
        t.source = self.source;
        t.seed = self.seed;
        t.map = self.map.clone();
        t.noise = self.noise;
        t.model_id = self.model_id.clone();
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> State {
        State::new(v.to_vec()).unwrap()
    }

    #[test]
    fn state_rejects_nan_and_empty() {
        assert!(matches!(State::new(vec![]), Err(Error::Empty(_))));
        assert!(matches!(
            State::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(State::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn trajectory_checks_lengths() {
        let err = Trajectory::new(vec![s(&[0.0]), s(&[1.0])], vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { field: "inputs", .. }));
        let err = Trajectory::new(vec![s(&[0.0]), s(&[1.0, 2.0])], vec![SymbolicInput::new(0)])
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, found: 2 }));
    }

    #[test]
    fn from_states_labels_steps() {
        let t = Trajectory::from_states(vec![s(&[0.0]), s(&[1.0]), s(&[2.0])]).unwrap();
        assert_eq!(t.steps(), 2);
        assert_eq!(t.inputs()[1].id, 1);
        assert_eq!(t.source, TraceSource::Extracted);
    }

    #[test]
    fn distance_is_euclidean() {
        assert_eq!(s(&[0.0, 0.0]).distance(&s(&[3.0, 4.0])), 5.0);
    }
}
