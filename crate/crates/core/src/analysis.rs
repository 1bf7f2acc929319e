//! End-to-end analysis of one trajectory into an [`AnalysisReport`].
//!
//! Every certificate is computed independently; one that cannot be computed
//! (zero variance, too few states, no vocab, ...) is recorded as a failed or
//! skipped [`Section`] rather than aborting the run.

use serde::{Deserialize, Serialize};

use crate::attractor::{
    self, convergence_test, estimate_lipschitz, find_attractors_with, pca_project, symbolic_reducibility,
    torus_score, ClusterOptions, ConvergenceTest, DistConvergenceReport, LipschitzEstimate, LipschitzProbe,
    Projection, ReducibilityReport, ANNULUS_THRESHOLD,
};
use crate::dynamics::{InputSchedule, MapSpec, NoiseSpec};
use crate::error::Result;
use crate::glyph::{collapse_check, default_delta, encode_glyph, AnchorReport, Glyph, Vocab};
use crate::rng::derive_seed;
use crate::state::{TraceSource, Trajectory};
use crate::stats;
use crate::tension::{
    default_bound, moment_bound_check, persistence_check, tension_series, MomentBoundReport,
    PersistenceReport, TensionSummary, TensionTrace,
};

/// A certificate's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Section<T> {
    Ok(T),
    Skipped(String),
    Failed(String),
}

impl<T> Section<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Section::Ok(v),
            Err(e) => Section::Failed(e.to_string()),
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok(v) => Some(v),
            _ => None,
        }
    }
}

/// User-facing analysis parameters. `None` fields are resolved from the
/// trajectory (see [`ResolvedConfig`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// States skipped before any stationary statistic. Default: 10% of steps.
    pub burn_in: Option<usize>,
    /// Convergence-test window length. Default: 20% of states.
    pub window: Option<usize>,
    pub alpha: f64,
    pub permutations: usize,
    pub max_points: usize,
    pub k_max: usize,
    pub cluster_max_points: usize,
    /// Moment bound `eps + eta`. Default: see [`default_bound`].
    pub bound: Option<f64>,
    /// Default: every entry after the burn-in.
    pub moment_window: Option<usize>,
    /// Default: 10th percentile of post-burn-in tension.
    pub persistence_threshold: Option<f64>,
    pub min_run: usize,
    pub lipschitz_probes: usize,
    pub lipschitz_steps: usize,
    pub perturbation: f64,
    pub encoder_window: usize,
    pub encoder_seed: u64,
    /// Default: 5th percentile of pairwise vocab distances.
    pub delta: Option<f64>,
    pub seed: u64,
    /// Checks that must pass for the verdict. Default: every computed check.
    pub require: Option<Vec<Check>>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            burn_in: None,
            window: None,
            alpha: 0.05,
            permutations: 500,
            max_points: 500,
            k_max: attractor::cluster::DEFAULT_K_MAX,
            cluster_max_points: 2000,
            bound: None,
            moment_window: None,
            persistence_threshold: None,
            min_run: 50,
            lipschitz_probes: 32,
            lipschitz_steps: 1000,
            perturbation: 1e-6,
            encoder_window: crate::glyph::DEFAULT_WINDOW,
            encoder_seed: 0,
            delta: None,
            seed: 0,
            require: None,
        }
    }
}

/// The parameters actually used, echoed into the report. Its JSON form is
/// also a valid [`AnalysisConfig`] that reproduces the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub burn_in: usize,
    pub window: usize,
    pub alpha: f64,
    pub permutations: usize,
    pub max_points: usize,
    pub k_max: usize,
    pub cluster_max_points: usize,
    pub bound: f64,
    pub moment_window: usize,
    pub persistence_threshold: f64,
    pub min_run: usize,
    pub lipschitz_probes: usize,
    pub lipschitz_steps: usize,
    pub perturbation: f64,
    pub encoder_window: usize,
    pub encoder_seed: u64,
    pub delta: Option<f64>,
    pub seed: u64,
    pub require: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub len: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub dim: usize,
    pub steps: usize,
    pub source: TraceSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_spec: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_spec: Option<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSummary {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub dispersion: Vec<f64>,
    pub silhouette_by_k: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Windowed `E[xi^2]` within the bound.
    MomentBound,
    /// Tension stays above threshold for `min_run` steps somewhere.
    Persistence,
    /// Estimated Lipschitz constant below 1.
    Contraction,
    /// Early and late windows not distinguishable.
    Convergence,
    /// Torus score at or above the annulus threshold.
    Annulus,
    /// Glyph at least `delta` from every symbol.
    Anchored,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::MomentBound,
        Check::Persistence,
        Check::Contraction,
        Check::Convergence,
        Check::Annulus,
        Check::Anchored,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: Check,
    /// `None` when the underlying certificate could not be computed.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub checks: Vec<CheckResult>,
    pub required: Vec<Check>,
    /// Every required check computed and passed.
    pub all_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: u64,
    pub trace: TraceInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<VocabInfo>,
    pub config: ResolvedConfig,
    pub tension_summary: TensionSummary,
    pub moment_bound: Section<MomentBoundReport>,
    pub persistence: Section<PersistenceReport>,
    pub lipschitz: Section<LipschitzEstimate>,
    pub convergence: Section<DistConvergenceReport>,
    pub attractors: Section<AttractorSummary>,
    pub pca: Section<PcaSummary>,
    pub torus_score: Section<f64>,
    pub reducibility: Section<ReducibilityReport>,
    pub glyph: Section<Glyph>,
    pub anchor: Section<AnchorReport>,
    pub verdict: Verdict,
}

/// A report plus the per-step series needed for CSVs and figures.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub tension: TensionTrace,
    /// `(step, pc1, pc2)` for every state, in the basis fitted on the tail.
    pub pca_points: Option<Vec<(usize, f64, f64)>>,
    /// Attractor centroids in the same basis.
    pub centroid_points: Vec<(f64, f64)>,
}

/// Optional inputs to [`analyze`] besides the trajectory.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalysisInputs<'a> {
    pub vocab: Option<&'a Vocab>,
    pub vocab_label: Option<&'a str>,
    pub trace_label: Option<&'a str>,
}

pub fn analyze(trajectory: &Trajectory, config: &AnalysisConfig, extra: AnalysisInputs<'_>) -> Result<Analysis> {
    let states = trajectory.states();
    let n_states = states.len();
    let steps = trajectory.steps();

    let burn_in = config.burn_in.unwrap_or(steps / 10).min(steps.saturating_sub(1));
    let window = config.window.unwrap_or(n_states / 5);
    let tension = tension_series(trajectory)?.with_burn_in(burn_in)?;
    let tail_xi = tension.tail();

    let bound = config
        .bound
        .unwrap_or_else(|| default_bound(&tension, trajectory.map.as_ref(), trajectory.noise.as_ref()));
    let moment_window = config.moment_window.unwrap_or(tail_xi.len());
    let persistence_threshold = config
        .persistence_threshold
        .unwrap_or_else(|| stats::quantile(tail_xi, 0.1));
    let encoder_window = config.encoder_window.min(tension.len());

    let delta = match (config.delta, extra.vocab) {
        (Some(d), _) => Some(d),
        (None, Some(v)) => default_delta(v).ok(),
        (None, None) => None,
    };

    let moment_bound = Section::from_result(moment_bound_check(&tension, bound, moment_window));
    let persistence = Section::from_result(persistence_check(&tension, persistence_threshold, config.min_run));

    let lipschitz = match (&trajectory.map, &trajectory.noise) {
        (Some(map), Some(noise)) => Section::from_result(estimate_lipschitz(
            map,
            noise,
            &InputSchedule::Cyclic(trajectory.inputs().to_vec()),
            &LipschitzProbe {
                steps: config.lipschitz_steps,
                probes: config.lipschitz_probes,
                perturbation: config.perturbation,
                seed: derive_seed(config.seed, 0),
                ..Default::default()
            },
        )),
        _ => Section::Skipped("trace header has no map/noise spec".into()),
    };

    let convergence = Section::from_result(convergence_test(
        trajectory,
        &ConvergenceTest {
            burn_in,
            window,
            alpha: config.alpha,
            permutations: config.permutations,
            seed: derive_seed(config.seed, 1),
            max_points: config.max_points,
        },
    ));

    let tail = &states[burn_in..];
    let attractor_set = find_attractors_with(
        tail,
        &ClusterOptions {
            k_max: config.k_max,
            seed: derive_seed(config.seed, 2),
            max_points: config.cluster_max_points,
        },
    );

    let projection = pca_project(tail, trajectory.dim().min(2));
    let torus = match &projection {
        Ok(p) => Section::from_result(torus_score(p)),
        Err(e) => Section::Failed(format!("no projection: {e}")),
    };
    let (pca_points, centroid_points) = match (&projection, &attractor_set) {
        (Ok(p), a) => (
            Some(figure_points(p, trajectory)),
            a.as_ref()
                .map(|a| {
                    a.centroids
                        .iter()
                        .map(|c| {
                            let q = p.project(c.as_slice());
                            (q[0], q.get(1).copied().unwrap_or(0.0))
                        })
                        .collect()
                })
                .unwrap_or_default(),
        ),
        (Err(_), _) => (None, Vec::new()),
    };

    let attractors = Section::from_result(attractor_set.map(|a| AttractorSummary {
        k: a.k,
        centroids: a.centroids.iter().map(|c| c.as_slice().to_vec()).collect(),
        sizes: a.member_indices.iter().map(Vec::len).collect(),
        dispersion: a.dispersion,
        silhouette_by_k: a.silhouette_by_k,
    }));
    let pca = Section::from_result(projection.map(|p| PcaSummary {
        points: p.projected.len(),
        components: p.components,
        explained_variance: p.explained_variance,
        mean: p.mean,
    }));

    let reducibility = Section::from_result(symbolic_reducibility(trajectory));
    let glyph = encode_glyph(trajectory, &tension, encoder_window, config.encoder_seed);
    let anchor = match (&glyph, extra.vocab, delta) {
        (Err(e), _, _) => Section::Failed(format!("no glyph: {e}")),
        (Ok(_), None, _) => Section::Skipped("no vocab supplied".into()),
        (Ok(_), Some(_), None) => Section::Failed("no delta: vocab has fewer than two entries".into()),
        (Ok(g), Some(v), Some(d)) => {
            Section::from_result(collapse_check(g, v, d, trajectory.inputs().last().map(|s| s.id)))
        }
    };
    let glyph = Section::from_result(glyph);

    let checks: Vec<CheckResult> = Check::ALL
        .iter()
        .map(|&check| CheckResult {
            check,
            passed: match check {
                Check::MomentBound => moment_bound.ok().map(|m| m.satisfied),
                Check::Persistence => persistence.ok().map(|p| p.persistent),
                Check::Contraction => lipschitz.ok().map(|l| l.l_hat < 1.0),
                Check::Convergence => convergence.ok().map(|c| c.converged),
                Check::Annulus => torus.ok().map(|s| *s >= ANNULUS_THRESHOLD),
                Check::Anchored => anchor.ok().map(|a| a.anchored),
            },
        })
        .collect();
    let required = config.require.clone().unwrap_or_else(|| {
        checks.iter().filter(|c| c.passed.is_some()).map(|c| c.check).collect()
    });
    let all_passed = required
        .iter()
        .all(|r| checks.iter().any(|c| c.check == *r && c.passed == Some(true)));

    let report = AnalysisReport {
        format_version: crate::io::trace::FORMAT_VERSION,
        trace: TraceInfo {
            file: extra.trace_label.map(str::to_string),
            dim: trajectory.dim(),
            steps,
            source: trajectory.source,
            seed: trajectory.seed,
            model_id: trajectory.model_id.clone(),
            map_spec: trajectory.map.clone(),
            noise_spec: trajectory.noise,
        },
        vocab: extra.vocab.map(|v| VocabInfo {
            file: extra.vocab_label.map(str::to_string),
            len: v.len(),
            dim: v.dim(),
        }),
        config: ResolvedConfig {
            burn_in,
            window,
            alpha: config.alpha,
            permutations: config.permutations,
            max_points: config.max_points,
            k_max: config.k_max,
            cluster_max_points: config.cluster_max_points,
            bound,
            moment_window,
            persistence_threshold,
            min_run: config.min_run,
            lipschitz_probes: config.lipschitz_probes,
            lipschitz_steps: config.lipschitz_steps,
            perturbation: config.perturbation,
            encoder_window,
            encoder_seed: config.encoder_seed,
            delta,
            seed: config.seed,
            require: required.clone(),
        },
        tension_summary: tension.summary(),
        moment_bound,
        persistence,
        lipschitz,
        convergence,
        attractors,
        pca,
        torus_score: torus,
        reducibility,
        glyph,
        anchor,
        verdict: Verdict {
            checks,
            required,
            all_passed,
        },
    };
    Ok(Analysis {
        report,
        tension,
        pca_points,
        centroid_points,
    })
}

fn figure_points(p: &Projection, trajectory: &Trajectory) -> Vec<(usize, f64, f64)> {
    trajectory
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let q = p.project(s.as_slice());
            (k, q[0], q.get(1).copied().unwrap_or(0.0))
        })
        .collect()
}
