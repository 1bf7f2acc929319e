//! Recursive map families and seeded stochastic simulation of
//! `A_{n+1} = f(A_n, s_n) + eps_n`.

mod spec;

pub use spec::{Basin, MapFamily, MapSpec, NoiseKind, NoiseSpec};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::state::{State, SymbolicInput, Trajectory, TraceSource};

/// A validated, evaluable update function `(state, input, step) -> state`.
#[derive(Debug, Clone)]
pub struct RecursiveMap {
    spec: MapSpec,
    /// `(cos theta, sin theta)` for the rotation family.
    rotation: (f64, f64),
}

/// Validates `spec` and returns the corresponding map.
pub fn make_map(spec: &MapSpec) -> Result<RecursiveMap> {
    spec.validate()?;
    let rotation = match spec.family {
        // black_box keeps these two libm calls from being merged into one
        // `sincos`, whose last bit can differ between optimized and debug
        // builds.
        MapFamily::RotationContraction { theta, .. } => (std::hint::black_box(theta).cos(), theta.sin()),
        _ => (1.0, 0.0),
    };
    Ok(RecursiveMap {
        spec: spec.clone(),
        rotation,
    })
}

impl RecursiveMap {
    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Evaluates `f(state, input)` at step index `step` into `out`.
    ///
    /// Both slices must have length `dim`.
    pub fn apply_into(&self, state: &[f64], input: &SymbolicInput, step: u64, out: &mut [f64]) {
        debug_assert_eq!(state.len(), self.spec.dim);
        debug_assert_eq!(out.len(), self.spec.dim);
        match &self.spec.family {
            MapFamily::Affine {
                lipschitz,
                offset,
                input_offsets,
            } => {
                for ((o, x), b) in out.iter_mut().zip(state).zip(offset) {
                    *o = lipschitz * x + b;
                }
                if !input_offsets.is_empty() {
                    let c = &input_offsets[(input.id % input_offsets.len() as u64) as usize];
                    for (o, ci) in out.iter_mut().zip(c) {
                        *o += ci;
                    }
                }
            }
            MapFamily::RotationContraction { rho, radius, .. } => {
                let (c, s) = self.rotation;
                let (x, y) = (state[0], state[1]);
                let r = x.hypot(y);
                let r_next = radius + rho * (r - radius);
                // unit direction rotated by theta; the origin maps along angle theta
                let (ux, uy) = if r > 0.0 { (x / r, y / r) } else { (1.0, 0.0) };
                out[0] = r_next * (c * ux - s * uy);
                out[1] = r_next * (s * ux + c * uy);
                for (o, x) in out[2..].iter_mut().zip(&state[2..]) {
                    *o = rho * x;
                }
            }
            MapFamily::DelayedContraction {
                onset,
                pre_lipschitz,
                lipschitz,
                offset,
            } => {
                let factor = if step < *onset { *pre_lipschitz } else { *lipschitz };
                for ((o, x), b) in out.iter_mut().zip(state).zip(offset) {
                    let fixed = b / (1.0 - lipschitz);
                    *o = fixed + factor * (x - fixed);
                }
            }
            MapFamily::MultiBasin {
                selector,
                thresholds,
                basins,
            } => {
                let key = state[*selector];
                let idx = thresholds.iter().take_while(|t| **t <= key).count();
                let basin = &basins[idx];
                for ((o, x), b) in out.iter_mut().zip(state).zip(&basin.offset) {
                    *o = basin.lipschitz * x + b;
                }
            }
        }
    }

    /// Evaluates `f(state, input)` at step index `step`.
    pub fn apply(&self, state: &State, input: &SymbolicInput, step: u64) -> Result<State> {
        check_dim(self.dim(), state.dim())?;
        let mut out = vec![0.0; self.dim()];
        self.apply_into(state.as_slice(), input, step, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
        Ok(State::from_vec_unchecked(out))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// One update `f(state, input) + noise_draw` at step index `step`.
pub fn step(
    state: &State,
    input: &SymbolicInput,
    map: &RecursiveMap,
    noise_draw: &State,
    step: u64,
) -> Result<State> {
    check_dim(map.dim(), state.dim())?;
    check_dim(map.dim(), noise_draw.dim())?;
    if !state.is_finite() {
        return Err(Error::NonFinite("input state"));
    }
    let mut out = vec![0.0; map.dim()];
    map.apply_into(state.as_slice(), input, step, &mut out);
    for (o, e) in out.iter_mut().zip(noise_draw.as_slice()) {
        *o += e;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { step });
    }
    Ok(State::from_vec_unchecked(out))
}

impl NoiseSpec {
    /// Fills `out` with one draw. `None` noise writes zeros and consumes no
    /// randomness.
    pub fn draw_into(&self, rng: &mut SimRng, out: &mut [f64]) {
        match self.kind {
            NoiseKind::None => out.fill(0.0),
            NoiseKind::GaussianIid => {
                for o in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = self.sigma * z;
                }
            }
            NoiseKind::UniformIid => {
                let half = self.sigma * 3f64.sqrt();
                for o in out.iter_mut() {
                    *o = if half > 0.0 {
                        rng.random_range(-half..half)
                    } else {
                        0.0
                    };
                }
            }
        }
    }
}

/// The sequence of symbolic inputs fed to the map.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSchedule {
    /// Repeats the given tokens in order.
    Cyclic(Vec<SymbolicInput>),
    /// Uses the tokens once each; must be at least as long as the run.
    Stream(Vec<SymbolicInput>),
}

impl Default for InputSchedule {
    fn default() -> Self {
        InputSchedule::Cyclic(vec![SymbolicInput::new(0)])
    }
}

impl InputSchedule {
    /// Cyclic schedule over token ids `0..n`.
    pub fn cycle_ids(n: u64) -> Self {
        InputSchedule::Cyclic((0..n).map(SymbolicInput::new).collect())
    }

    fn tokens(&self) -> &[SymbolicInput] {
        match self {
            InputSchedule::Cyclic(t) | InputSchedule::Stream(t) => t,
        }
    }

    /// Materializes the first `steps` inputs.
    pub fn take(&self, steps: usize) -> Result<Vec<SymbolicInput>> {
        let tokens = self.tokens();
        if tokens.is_empty() {
            return Err(Error::Empty("input schedule"));
        }
        match self {
            InputSchedule::Cyclic(t) => Ok(t.iter().cycle().take(steps).cloned().collect()),
            InputSchedule::Stream(t) => {
                if t.len() < steps {
                    return Err(Error::InsufficientData(format!(
                        "input stream has {} tokens, {steps} steps requested",
                        t.len()
                    )));
                }
                Ok(t[..steps].to_vec())
            }
        }
    }
}

/// Draws the initial state uniformly from `[-1, 1]^dim`.
pub fn initial_state(rng: &mut SimRng, dim: usize) -> State {
    State::from_vec_unchecked((0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
}

/// Runs `steps` updates from a seeded initial state.
///
/// The generator seeded with `seed` first yields the `dim` coordinates of
/// `A_0`, then the noise draws for steps `0, 1, ...` in order.
pub fn simulate(
    map_spec: &MapSpec,
    noise: &NoiseSpec,
    inputs: &InputSchedule,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let map = make_map(map_spec)?;
    noise.validate()?;
    if steps == 0 {
        return Err(Error::param("steps", "must be at least 1"));
    }
    let inputs = inputs.take(steps)?;
    let dim = map.dim();
    let mut rng = rng_from_seed(seed);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial_state(&mut rng, dim));
    let mut eps = vec![0.0; dim];
    for (n, input) in inputs.iter().enumerate() {
        let mut next = vec![0.0; dim];
        map.apply_into(states[n].as_slice(), input, n as u64, &mut next);
        noise.draw_into(&mut rng, &mut eps);
        for (x, e) in next.iter_mut().zip(&eps) {
            *x += e;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: n as u64 });
        }
        states.push(State::from_vec_unchecked(next));
    }
    let mut traj = Trajectory::new(states, inputs)?;
    traj.source = TraceSource::Simulated;
    traj.seed = Some(seed);
    traj.map = Some(map_spec.clone());
    traj.noise = Some(*noise);
    Ok(traj)
}
