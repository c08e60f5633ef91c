use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, OpCounts};
use crate::error::{Error, Result};
use crate::recovery::QueryStatistics;

use super::config::ExperimentConfig;

/// Tolerance for comparing exact distributions across pipelines.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub moduli: Vec<u64>,
    /// Normalized generators `h_j` of `H = ⊕⟨h_j⟩`.
    pub generators: Vec<u64>,
    pub group_order: u64,
    pub hidden_order: u64,
    /// Generators of `H⊥`.
    pub dual_generators: Vec<u64>,
    /// Moduli of the auxiliary register `Y`.
    pub codomain: Vec<u64>,
    pub relabel_seed: Option<u64>,
}

/// One outcome `τ` as a coordinate tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub outcome: Vec<u64>,
    pub exact: Option<f64>,
    pub empirical: Option<f64>,
    pub count: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestorationSummary {
    pub min: f64,
    pub mean: f64,
}

impl RestorationSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean: values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub runs: u64,
    pub oracle_calls: u64,
    pub qft_applications: u64,
    pub s_z_applications: u64,
    pub oracle_calls_per_run: Option<f64>,
}

impl Counters {
    pub(crate) fn from_counts(runs: u64, c: &OpCounts) -> Self {
        Self {
            runs,
            oracle_calls: c.oracle_calls,
            qft_applications: c.qft_applications,
            s_z_applications: c.s_z_applications,
            oracle_calls_per_run: (runs > 0).then(|| c.oracle_calls as f64 / runs as f64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub trace: f64,
    /// `max_τ |Pr_Λ(τ) − |H|/|G||` over `τ ∈ H⊥`, and `Pr_Λ(τ)` elsewhere.
    pub max_deviation_from_uniform_dual: f64,
    /// Largest trace distance between `ρ_B` and `B` conditioned on any `τ`.
    pub max_conditional_trace_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub trials: u64,
    /// Most frequent blind-rule estimate.
    pub recovered_generators: Vec<u64>,
    pub success: bool,
    pub blind_success_rate: f64,
    pub verification_success_rate: f64,
    pub blind_queries: QueryStatistics,
    pub verification_queries: QueryStatistics,
    pub oracle_calls_per_query: f64,
    pub min_restoration_fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub outcomes: Vec<OutcomeRow>,
    pub exact_total: Option<f64>,
    pub empirical_total: Option<f64>,
    pub shots: u64,
    /// Fidelity of the auxiliary register with its starting state.
    pub restoration: Option<RestorationSummary>,
    pub counters: Counters,
    pub channel: Option<ChannelSummary>,
    pub recovery: Option<RecoverySummary>,
}

/// Wall-clock data; excluded from reproducibility comparisons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub instance: InstanceSummary,
    pub warnings: Vec<String>,
    pub results: Vec<AlgorithmReport>,
    pub comparison: Option<Comparison>,
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn result(&self, algorithm: Algorithm) -> Option<&AlgorithmReport> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }

    /// The report with timing zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        Self {
            timing: Timing::default(),
            ..self.clone()
        }
    }
}

/// Side-by-side view of the two pipelines on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub max_distribution_difference: f64,
    pub distributions_match: bool,
    pub oracle_calls_per_run: (Option<f64>, Option<f64>),
    pub restoration: (Option<RestorationSummary>, Option<RestorationSummary>),
}

/// Compares a standard result with an initialization-free result. Both
/// reports must describe the same instance (group, subgroup and labelling).
pub fn compare(standard: &ExperimentReport, init_free: &ExperimentReport) -> Result<Comparison> {
    if standard.instance != init_free.instance {
        return Err(Error::Config("reports describe different instances".into()));
    }
    let s = standard
        .result(Algorithm::Standard)
        .ok_or_else(|| Error::Config("first report has no standard result".into()))?;
    let i = init_free
        .result(Algorithm::InitFree)
        .ok_or_else(|| Error::Config("second report has no initialization-free result".into()))?;
    compare_results(s, i)
}

pub(crate) fn compare_results(s: &AlgorithmReport, i: &AlgorithmReport) -> Result<Comparison> {
    let exact = |r: &AlgorithmReport| -> Vec<(Vec<u64>, f64)> {
        r.outcomes
            .iter()
            .filter_map(|o| o.exact.map(|p| (o.outcome.clone(), p)))
            .collect()
    };
    let (a, b) = (exact(s), exact(i));
    if a.is_empty() || b.is_empty() {
        return Err(Error::Config("both reports need exact distributions".into()));
    }
    let lookup = |rows: &[(Vec<u64>, f64)], t: &[u64]| {
        rows.iter().find(|(o, _)| o == t).map_or(0.0, |(_, p)| *p)
    };
    let diff = a
        .iter()
        .chain(&b)
        .map(|(t, _)| (lookup(&a, t) - lookup(&b, t)).abs())
        .fold(0.0, f64::max);
    Ok(Comparison {
        max_distribution_difference: diff,
        distributions_match: diff <= DISTRIBUTION_TOL,
        oracle_calls_per_run: (s.counters.oracle_calls_per_run, i.counters.oracle_calls_per_run),
        restoration: (s.restoration, i.restoration),
    })
}
