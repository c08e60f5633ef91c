use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::algorithms::{
    init_free_for_each_z, lambda_channel, run_shots, Algorithm, AuxSpec, AuxState, Distribution, OpCounts,
    Pipeline,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::recovery::{
    ceil_log2, query_statistics, recover_hidden_subgroup, InitFreeSource, RecoveryOutcome, SampleSource,
    StandardSource, StopRule,
};
use crate::rng::{self, derive_seed};
use crate::state::{fidelity, marginal_fidelity, trace_distance, DensityMatrix, PureState};

use super::config::{labels, ExperimentConfig, Mode, OutputFormat, ResolvedInstance};
use super::report::{
    compare_results, AlgorithmReport, ChannelSummary, Counters, ExperimentReport, InstanceSummary, OutcomeRow,
    RecoverySummary, RestorationSummary, Timing,
};

const EXACT_TOL: f64 = 1e-9;
const EMPIRICAL_TOL: f64 = 1e-6;
const RESTORATION_TOL: f64 = 1e-9;
/// Probability mass allowed outside `H⊥` (amplitudes below `1e-12`).
const OFF_DUAL_TOL: f64 = 1e-24;
/// Rows with exact probability at or below this are omitted from reports.
const ROW_TOL: f64 = 1e-15;

/// Runs one experiment. The result depends only on the configuration.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let inst = config.resolve()?;
    let pipeline = Pipeline::new(&inst.f)?;
    if config.mode == Mode::Channel {
        DensityMatrix::check_dim(pipeline.register().total())?;
    }
    let mut warnings = inst.warnings.clone();
    let algorithms = config.algorithm.algorithms();
    if config.aux != AuxSpec::Zero && algorithms == [Algorithm::Standard] {
        warnings.push("the auxiliary specification only affects the initialization-free pipeline".into());
    }
    let aux = config
        .aux
        .realize(&pipeline.aux_register(), &mut rng::stream(derive_seed(config.seed, labels::AUX), 0))?;

    let results = algorithms
        .iter()
        .map(|&alg| run_algorithm(config, &inst, &pipeline, &aux, alg))
        .collect::<Result<Vec<_>>>()?;
    let comparison = match results.as_slice() {
        [s, i] if s.outcomes.iter().any(|o| o.exact.is_some()) => Some(compare_results(s, i)?),
        _ => None,
    };
    let dual = inst.hidden.orthogonal();
    Ok(ExperimentReport {
        tool: "ahsp-sim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        instance: InstanceSummary {
            moduli: inst.group.moduli().to_vec(),
            generators: inst.hidden.generators().to_vec(),
            group_order: inst.group.order(),
            hidden_order: inst.hidden.order(),
            dual_generators: dual.generators().to_vec(),
            codomain: inst.f.codomain().moduli().to_vec(),
            relabel_seed: inst.relabel_seed,
        },
        warnings,
        results,
        comparison,
        timing: Timing {
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

fn run_algorithm(
    config: &ExperimentConfig,
    inst: &ResolvedInstance,
    p: &Pipeline<'_>,
    aux: &AuxState,
    alg: Algorithm,
) -> Result<AlgorithmReport> {
    let mut report = AlgorithmReport {
        algorithm: alg,
        outcomes: Vec::new(),
        exact_total: None,
        empirical_total: None,
        shots: 0,
        restoration: None,
        counters: Counters::default(),
        channel: None,
        recovery: None,
    };
    let exact = if config.mode == Mode::Channel && alg == Algorithm::InitFree {
        let rho_b = aux.density()?;
        let out = lambda_channel(&inst.f, &rho_b)?;
        let dist = Distribution::new(&inst.group, out.distribution(p.a_targets())?)?;
        let mut worst = 0.0f64;
        for (t, q) in dist.entries() {
            if q > 1e-12 {
                let coords: Vec<usize> = t.coords().iter().map(|&c| c as usize).collect();
                let (_, cond) = out.condition(p.a_targets(), &coords)?;
                worst = worst.max(trace_distance(&cond, &rho_b)?);
            }
        }
        if worst > RESTORATION_TOL {
            return Err(Error::Invariant(format!(
                "channel output conditioned on A differs from ρ_B by {worst:e}"
            )));
        }
        report.channel = Some(ChannelSummary {
            trace: out.trace().re,
            max_deviation_from_uniform_dual: crate::algorithms::uniform_on_dual_deviation(&inst.f, &dist),
            max_conditional_trace_distance: worst,
        });
        let y = inst.f.codomain().order();
        let per_z = OpCounts {
            oracle_calls: 2,
            qft_applications: 2,
            s_z_applications: 2,
        };
        report.counters = Counters::from_counts(
            y,
            &OpCounts {
                oracle_calls: per_z.oracle_calls * y,
                qft_applications: per_z.qft_applications * y,
                s_z_applications: per_z.s_z_applications * y,
            },
        );
        dist
    } else {
        let (dist, counts, runs, restoration) = exact_distribution(p, aux, alg)?;
        report.counters = Counters::from_counts(runs, &counts);
        report.restoration = restoration;
        dist
    };
    check_exact(inst, &exact)?;
    report.exact_total = Some(exact.total());

    let mut empirical: BTreeMap<usize, u64> = BTreeMap::new();
    if config.mode == Mode::Shots {
        let label = match alg {
            Algorithm::Standard => labels::SHOTS_STANDARD,
            Algorithm::InitFree => labels::SHOTS_INIT_FREE,
        };
        let shots = run_shots(&inst.f, alg, aux, config.shots, derive_seed(config.seed, label))?;
        let dual = inst.hidden.orthogonal();
        let mut counts = OpCounts::default();
        let mut fids = Vec::with_capacity(shots.len());
        for s in &shots {
            if !dual.contains(&s.outcome) {
                return Err(Error::Invariant(format!("shot outcome {} is not in H⊥", s.outcome)));
            }
            if alg == Algorithm::InitFree && s.aux_restoration_fidelity < 1.0 - RESTORATION_TOL {
                return Err(Error::Invariant(format!(
                    "shot {} left the auxiliary register at fidelity {}",
                    s.shot_index, s.aux_restoration_fidelity
                )));
            }
            counts.merge(&s.counts);
            fids.push(s.aux_restoration_fidelity);
            *empirical.entry(inst.group.index_of(&s.outcome)?).or_default() += 1;
        }
        report.shots = config.shots;
        report.counters = Counters::from_counts(config.shots, &counts);
        if !shots.is_empty() {
            report.restoration = RestorationSummary::from_values(&fids);
            let total: f64 = empirical.values().map(|&c| c as f64 / config.shots as f64).sum();
            if (total - 1.0).abs() > EMPIRICAL_TOL {
                return Err(Error::Invariant(format!("empirical frequencies sum to {total}")));
            }
            report.empirical_total = Some(total);
        }
    }

    for (i, (t, q)) in exact.entries().into_iter().enumerate() {
        let count = empirical.get(&i).copied();
        if q > ROW_TOL || count.is_some() {
            report.outcomes.push(OutcomeRow {
                outcome: t.coords().to_vec(),
                exact: Some(q),
                empirical: (config.mode == Mode::Shots && config.shots > 0)
                    .then(|| count.unwrap_or(0) as f64 / config.shots as f64),
                count: (config.mode == Mode::Shots).then(|| count.unwrap_or(0)),
            });
        }
    }

    if config.mode == Mode::Recover {
        report.recovery = Some(recover(config, inst, aux, alg)?);
    }
    Ok(report)
}

type ExactResult = (Distribution, OpCounts, u64, Option<RestorationSummary>);

fn exact_distribution(p: &Pipeline<'_>, aux: &AuxState, alg: Algorithm) -> Result<ExactResult> {
    let f = p.function();
    match alg {
        Algorithm::Standard => {
            let (psi, counts) = p.standard_state()?;
            let dist = Distribution::new(f.domain(), psi.distribution(p.a_targets())?)?;
            let zero = PureState::zero(&p.aux_register());
            let (mut min, mut mean) = (1.0f64, 0.0);
            for (t, q) in dist.entries() {
                if q > 1e-12 {
                    let coords: Vec<usize> = t.coords().iter().map(|&c| c as usize).collect();
                    let (_, b) = psi.condition(p.a_targets(), &coords)?;
                    let fid = fidelity(&b, &zero)?;
                    min = min.min(fid);
                    mean += q * fid;
                }
            }
            Ok((dist, counts, 1, Some(RestorationSummary { min, mean })))
        }
        Algorithm::InitFree => {
            let y = f.codomain().order() as f64;
            let mut acc = vec![0.0; f.domain().order() as usize];
            let mut counts = OpCounts::default();
            let mut fids = Vec::new();
            let mut runs = 0;
            for (w, phi) in aux.members() {
                counts.merge(&init_free_for_each_z(p, phi, |_, s| {
                    for (a, q) in acc.iter_mut().zip(s.distribution(p.a_targets())?) {
                        *a += w * q / y;
                    }
                    fids.push(marginal_fidelity(s, p.b_targets(), phi)?);
                    runs += 1;
                    Ok(())
                })?);
            }
            let restoration = RestorationSummary::from_values(&fids);
            if let Some(r) = restoration {
                if r.min < 1.0 - RESTORATION_TOL {
                    return Err(Error::Invariant(format!(
                        "auxiliary register restored only to fidelity {}",
                        r.min
                    )));
                }
            }
            Ok((Distribution::new(f.domain(), acc)?, counts, runs, restoration))
        }
    }
}

fn check_exact(inst: &ResolvedInstance, dist: &Distribution) -> Result<()> {
    let total = dist.total();
    if (total - 1.0).abs() > EXACT_TOL {
        return Err(Error::Invariant(format!("exact probabilities sum to {total}")));
    }
    let dual = inst.hidden.orthogonal();
    let off: f64 = dist
        .entries()
        .iter()
        .filter(|(t, _)| !dual.contains(t))
        .map(|(_, q)| q)
        .sum();
    if off > OFF_DUAL_TOL {
        return Err(Error::Invariant(format!("probability {off:e} outside H⊥")));
    }
    Ok(())
}

fn recover(
    config: &ExperimentConfig,
    inst: &ResolvedInstance,
    aux: &AuxState,
    alg: Algorithm,
) -> Result<RecoverySummary> {
    if config.trials == 0 {
        return Err(Error::Config("recover mode needs at least one trial".into()));
    }
    let g = &inst.group;
    let budget = 1000 + 64 * ceil_log2(g.order());
    let base = derive_seed(derive_seed(config.seed, labels::RECOVERY), alg as u64);
    let trials = usize::try_from(config.trials).map_err(|_| Error::Overflow("trial count"))?;

    let one = |stream: u64, stop: &StopRule| -> Result<(RecoveryOutcome, Option<f64>, Vec<u64>)> {
        let mut r = rng::stream(base, stream);
        let (est, out, fid) = match alg {
            Algorithm::Standard => {
                let mut src = StandardSource::new(&inst.f, r)?;
                let (est, out) = recover_hidden_subgroup(&mut src, stop, budget)?;
                (est, out, None)
            }
            Algorithm::InitFree => {
                let trial_aux = match config.aux {
                    AuxSpec::RandomPure | AuxSpec::RandomMixed { .. } => {
                        config.aux.realize(aux.register(), &mut r)?
                    }
                    _ => aux.clone(),
                };
                let mut src = InitFreeSource::new(&inst.f, &trial_aux, r)?;
                let (est, out) = recover_hidden_subgroup(&mut src as &mut dyn SampleSource, stop, budget)?;
                (est, out, Some(src.min_fidelity()))
            }
        };
        if !inst.hidden.is_subgroup_of(&est) {
            return Err(Error::Invariant(format!(
                "estimate {:?} does not contain the planted subgroup",
                est.generators()
            )));
        }
        Ok((out, fid, est.generators().to_vec()))
    };

    let blind_rule = StopRule::blind(g);
    let verify_rule = StopRule::verification(&inst.hidden);
    let runs = exec::map(exec::Execution::current(), trials, |t| {
        Ok((one(2 * t as u64, &blind_rule)?, one(2 * t as u64 + 1, &verify_rule)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let planted = inst.hidden.generators().to_vec();
    let mut tally: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let (mut blind_ok, mut verify_ok) = (0u64, 0u64);
    let (mut queries, mut calls) = (0u64, 0u64);
    let mut blind_q = Vec::new();
    let mut verify_q = Vec::new();
    let mut min_fid: Option<f64> = None;
    for ((b, bf, bg), (v, vf, vg)) in &runs {
        *tally.entry(bg.clone()).or_default() += 1;
        blind_ok += u64::from(b.complete && *bg == planted);
        verify_ok += u64::from(v.complete && *vg == planted);
        blind_q.push((g.order(), b.queries_used));
        verify_q.push((g.order(), v.queries_used));
        queries += b.queries_used + v.queries_used;
        calls += b.oracle_calls + v.oracle_calls;
        for x in [bf, vf].into_iter().flatten() {
            min_fid = Some(min_fid.map_or(*x, |m: f64| m.min(*x)));
        }
    }
    let recovered = tally
        .iter()
        .max_by_key(|(gens, n)| (**n, std::cmp::Reverse((*gens).clone())))
        .map(|(gens, _)| gens.clone())
        .expect("at least one trial");
    let n = config.trials as f64;
    Ok(RecoverySummary {
        trials: config.trials,
        success: recovered == planted,
        recovered_generators: recovered,
        blind_success_rate: blind_ok as f64 / n,
        verification_success_rate: verify_ok as f64 / n,
        blind_queries: query_statistics(&blind_q)?.remove(0),
        verification_queries: query_statistics(&verify_q)?.remove(0),
        oracle_calls_per_query: if queries > 0 { calls as f64 / queries as f64 } else { 0.0 },
        min_restoration_fidelity: min_fid,
    })
}

/// Writes `report` to `path` atomically: the content goes to a temporary
/// file in the same directory, which is then renamed over the target.
pub fn write_report(report: &ExperimentReport, path: &Path, format: OutputFormat) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let bytes = render_report(report, format)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serializes `report` as pretty JSON or as the flattened per-outcome CSV.
pub fn render_report(report: &ExperimentReport, format: OutputFormat) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.push(b'\n');
        }
        OutputFormat::Csv => write_csv(report, &mut out)?,
    }
    Ok(out)
}

fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "outcome", "exact", "empirical", "count"])?;
    let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &report.results {
        for o in &r.outcomes {
            w.write_record([
                r.algorithm.label().to_string(),
                serde_json::to_string(&o.outcome)?,
                fmt(o.exact),
                fmt(o.empirical),
                o.count.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
