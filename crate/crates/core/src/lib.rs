//! Stochastic recursive dynamics `A_{n+1} = f(A_n, s_n) + eps_n` and the
//! numerical certificates used to study them: epistemic tension, eventual
//! contraction, stationarity, attractor clustering, PCA/annulus geometry,
//! symbolic reducibility and glyph anchoring.

pub mod analysis;
pub mod attractor;
pub mod dynamics;
pub mod error;
pub mod glyph;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod state;
pub mod stats;
pub mod tension;

pub use error::{Error, Result};
pub use state::{State, SymbolicInput, TraceSource, Trajectory};
