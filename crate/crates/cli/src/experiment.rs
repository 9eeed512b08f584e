//! Policy preparation, seed sweeps and CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bass::baselines::{full_comm_policy, matcha_policy, matching_decomposition, MatchingSampler};
use bass::dsgd::{
    run_training, BlobConfig, LocalObjective, LogisticObjective, MetricsLog, ModelState,
    QuadraticObjective, TrainConfig,
};
use bass::mixing::SpectralObjective;
use bass::moments::{expected_laplacian_gram, sampler_moments, MomentSet};
use bass::rng::{seeded, seeded_stream, DATA_STREAM};
use bass::scheduler::{BroadcastSampler, RoundSampler, SchedulingPolicy};
use bass::{greedy_partition, CollisionFreePartition, Topology};
use rayon::prelude::*;

use crate::config::{BudgetMode, EpsilonSpec, ExperimentConfig, ObjectiveKind, PolicyKind, PolicySpec};
use crate::error::CliError;

/// Seed of the Monte Carlo moment estimate used to tune the matching
/// baseline, fixed so that tuning never depends on the run seeds.
pub const MOMENT_SEED: u64 = 0x6d6f_6d65;

/// Search tolerance for ε.
pub const EPSILON_TOL: f64 = 1e-6;

pub const SUMMARY_CSV_HEADER: &str = "policy,slots,train_loss,test_metric,consensus_error,seeds";

/// How ε was chosen and what it achieves.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingChoice {
    pub epsilon: f64,
    /// `λ_max(E[W²] − J)` at `epsilon`, when the moments were computed.
    pub objective: Option<f64>,
    /// `ρ(I − ε E[L̃] − J)`, when the moments were computed.
    pub mean_rho: Option<f64>,
    pub degenerate: bool,
    pub at_boundary: bool,
}

pub struct PreparedPolicy {
    pub label: String,
    pub kind: PolicyKind,
    /// Budget as configured (fraction or slots, per the budget mode).
    pub budget: Option<f64>,
    pub expected_slots: f64,
    pub mixing: MixingChoice,
    pub sampler: Box<dyn RoundSampler<f64>>,
}

impl std::fmt::Debug for PreparedPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PreparedPolicy")
            .field("label", &self.label)
            .field("expected_slots", &self.expected_slots)
            .field("mixing", &self.mixing)
            .finish()
    }
}

fn format_budget(value: f64, mode: BudgetMode) -> String {
    match mode {
        BudgetMode::Fraction => {
            let pct = value * 100.0;
            if (pct - pct.round()).abs() < 1e-9 {
                format!("{}", pct.round() as i64)
            } else {
                format!("{pct}")
            }
        }
        BudgetMode::Slots => format!("{value}slots"),
    }
}

fn tune(
    spec: EpsilonSpec,
    moments: Option<&MomentSet<f64>>,
) -> Result<MixingChoice, CliError> {
    let Some(m) = moments else {
        let EpsilonSpec::Fixed(epsilon) = spec else {
            unreachable!("automatic ε always has moments");
        };
        return Ok(MixingChoice {
            epsilon,
            objective: None,
            mean_rho: None,
            degenerate: false,
            at_boundary: false,
        });
    };
    let so = SpectralObjective::from_moments(m)?;
    let (epsilon, degenerate, at_boundary) = match spec {
        EpsilonSpec::Auto => {
            let opt = so.optimize_epsilon(EPSILON_TOL)?;
            (opt.epsilon, opt.degenerate, opt.at_boundary)
        }
        EpsilonSpec::Fixed(e) => (e, false, false),
    };
    Ok(MixingChoice {
        epsilon,
        objective: Some(so.objective(epsilon)?),
        mean_rho: Some(so.mean_matrix_rho(epsilon)?),
        degenerate,
        at_boundary,
    })
}

/// Builds the sampler for one policy at one budget and chooses its ε.
pub fn prepare_policy(
    t: &Topology,
    partition: &CollisionFreePartition,
    kind: PolicyKind,
    budget: Option<f64>,
    cfg: &ExperimentConfig,
) -> Result<PreparedPolicy, CliError> {
    let q = partition.len() as f64;
    let label = match (kind, budget) {
        (PolicyKind::Full, _) | (_, None) => kind.name().to_string(),
        (_, Some(b)) => format!("{}-{}", kind.name(), format_budget(b, cfg.budget_mode)),
    };
    let value = budget.unwrap_or(1.0);
    let broadcast = |policy: SchedulingPolicy<f64>| -> Result<PreparedPolicy, CliError> {
        let m = expected_laplacian_gram(t, partition, &policy.node_probs(partition));
        let mixing = tune(cfg.epsilon, Some(&m))?;
        let policy = policy.with_epsilon(mixing.epsilon);
        Ok(PreparedPolicy {
            label: label.clone(),
            kind,
            budget,
            expected_slots: policy.expected_slots(),
            mixing,
            sampler: Box::new(BroadcastSampler::new(t.clone(), partition.clone(), policy)),
        })
    };
    let subsets = match cfg.budget_mode {
        BudgetMode::Fraction => value * q,
        BudgetMode::Slots => value,
    };
    match kind {
        PolicyKind::Full => broadcast(full_comm_policy(partition)),
        PolicyKind::Bass => broadcast(SchedulingPolicy::bass(t, partition, subsets, cfg.min_subset_prob)?),
        PolicyKind::Uniform => broadcast(SchedulingPolicy::uniform(partition, subsets)?),
        PolicyKind::Matcha => {
            let md = matching_decomposition(t);
            let slots = match cfg.budget_mode {
                BudgetMode::Fraction => value * 2.0 * md.len() as f64,
                BudgetMode::Slots => value,
            };
            let policy = matcha_policy(&md, slots)?;
            let mut sampler = MatchingSampler::new(t, md, policy);
            let moments = match cfg.epsilon {
                EpsilonSpec::Auto => Some(sampler_moments(&sampler, cfg.mc_samples.max(1), &mut seeded(MOMENT_SEED))),
                EpsilonSpec::Fixed(_) => None,
            };
            let mixing = tune(cfg.epsilon, moments.as_ref())?;
            sampler.set_epsilon(mixing.epsilon);
            Ok(PreparedPolicy {
                label,
                kind,
                budget,
                expected_slots: sampler.expected_slots(),
                mixing,
                sampler: Box::new(sampler),
            })
        }
    }
}

/// Every (policy, budget) combination named by the config, in order.
pub fn prepare_policies(
    t: &Topology,
    partition: &CollisionFreePartition,
    cfg: &ExperimentConfig,
) -> Result<Vec<PreparedPolicy>, CliError> {
    let budgets = cfg.budget_sweep.clone().unwrap_or_else(|| vec![cfg.budget]);
    let mut jobs: Vec<(PolicyKind, Option<f64>)> = Vec::new();
    for &PolicySpec { kind, budget } in &cfg.policies {
        match (kind, budget) {
            (PolicyKind::Full, _) => jobs.push((kind, None)),
            (_, Some(b)) => jobs.push((kind, Some(b))),
            (_, None) => jobs.extend(budgets.iter().map(|&b| (kind, Some(b)))),
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut out: Vec<PreparedPolicy> = jobs
        .into_par_iter()
        .map(|(kind, budget)| prepare_policy(t, partition, kind, budget, cfg))
        .collect::<Result<_, _>>()?;
    out.retain(|p| seen.insert(p.label.clone()));
    Ok(out)
}

/// The per-node objective of one seed. Depends only on the seed, so every
/// policy trains on the same data.
pub fn build_objective(
    cfg: &ExperimentConfig,
    nodes: usize,
    seed: u64,
) -> Result<Box<dyn LocalObjective<f64>>, CliError> {
    let mut rng = seeded_stream(seed, DATA_STREAM);
    Ok(match cfg.objective {
        ObjectiveKind::Quadratic => Box::new(
            QuadraticObjective::random(nodes, cfg.dim, 1.0, &mut rng).with_noise(cfg.grad_noise),
        ),
        ObjectiveKind::Logistic => {
            Box::new(LogisticObjective::gaussian_blobs(nodes, &BlobConfig::default(), &mut rng)?)
        }
    })
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    /// Mean loss of the all-zero starting models.
    pub initial_loss: f64,
    pub log: MetricsLog<f64>,
}

impl RunResult {
    pub fn file_name(&self) -> String {
        format!("{}_seed{}.csv", self.label, self.seed)
    }
}

pub struct Experiment {
    pub topology: Topology,
    pub partition: CollisionFreePartition,
    pub policies: Vec<PreparedPolicy>,
    /// Policy-major, then seed order.
    pub runs: Vec<RunResult>,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    let topology = cfg.topology.generate()?;
    let partition = greedy_partition(&topology);
    let policies = prepare_policies(&topology, &partition, cfg)?;
    let n = topology.n();
    let objectives: Vec<Box<dyn LocalObjective<f64>>> = cfg
        .seeds
        .iter()
        .map(|&s| build_objective(cfg, n, s))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..policies.len())
        .flat_map(|p| (0..cfg.seeds.len()).map(move |s| (p, s)))
        .collect();
    let runs = jobs
        .into_par_iter()
        .map(|(p, s)| {
            let obj = objectives[s].as_ref();
            let train = TrainConfig {
                rounds: cfg.rounds,
                lr0: cfg.lr,
                lr_decay: cfg.lr_decay,
                batch_size: cfg.batch_size,
                seed: cfg.seeds[s],
            };
            let init = ModelState::zeros(n, obj.dim());
            let initial_loss = obj.global_loss(init.node(0));
            let (log, _) = run_training(policies[p].sampler.as_ref(), obj, &train, init)?;
            Ok(RunResult {
                label: policies[p].label.clone(),
                seed: cfg.seeds[s],
                initial_loss,
                log,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Experiment {
        topology,
        partition,
        policies,
        runs,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub slots: usize,
    pub train_loss: f64,
    pub test_metric: Option<f64>,
    pub consensus_error: f64,
    pub seeds: usize,
}

/// Per-policy medians over seeds on the integer slot grid. Each run is read
/// as a step function of cumulative slots (its latest record at or below
/// the grid point); a grid point is used only if every seed has a record
/// there, so no curve is extended past its own data.
pub fn summarize(runs: &[RunResult]) -> Vec<SummaryRow> {
    let mut labels: Vec<&str> = Vec::new();
    for r in runs {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let mut rows = Vec::new();
    for label in labels {
        let group: Vec<&RunResult> = runs.iter().filter(|r| r.label == label).collect();
        if group.iter().any(|r| r.log.records.is_empty()) {
            continue;
        }
        let lo = group.iter().map(|r| r.log.records[0].cum_slots).max().unwrap_or(0);
        let hi = group.iter().map(|r| r.log.total_slots()).min().unwrap_or(0);
        for slots in lo..=hi {
            let at: Vec<_> = group
                .iter()
                .map(|r| {
                    let recs = &r.log.records;
                    &recs[recs.partition_point(|x| x.cum_slots <= slots) - 1]
                })
                .collect();
            let mut loss: Vec<f64> = at.iter().map(|x| x.train_loss).collect();
            let mut cons: Vec<f64> = at.iter().map(|x| x.consensus_error).collect();
            let test: Option<Vec<f64>> = at.iter().map(|x| x.test_metric).collect();
            rows.push(SummaryRow {
                label: label.to_string(),
                slots,
                train_loss: median(&mut loss),
                test_metric: test.map(|mut v| median(&mut v)),
                consensus_error: median(&mut cons),
                seeds: group.len(),
            });
        }
    }
    rows
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    for r in rows {
        let test = r.test_metric.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.label, r.slots, r.train_loss, test, r.consensus_error, r.seeds
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub budget: f64,
    /// Median train loss once `slot_budget` slots have been spent.
    pub train_loss: f64,
    /// Median loss reduction per slot over the first `slot_budget` slots.
    pub efficiency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub policy: PolicyKind,
    pub slot_budget: usize,
    pub points: Vec<SweepPoint>,
    /// Index into `points` of the most efficient budget.
    pub best: usize,
    /// The best budget is neither the smallest nor the largest swept.
    pub interior: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,budget,slot_budget,train_loss,efficiency,best\n");
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.label,
                p.budget,
                self.slot_budget,
                p.train_loss,
                p.efficiency,
                u8::from(i == self.best)
            );
        }
        out
    }
}

/// Compares the budgets swept for `kind` at a common slot budget: the
/// largest slot count every budget's summary curve reaches.
pub fn sweep_report(exp: &Experiment, kind: PolicyKind) -> Option<SweepReport> {
    let mut swept: Vec<&PreparedPolicy> = exp
        .policies
        .iter()
        .filter(|p| p.kind == kind && p.budget.is_some())
        .collect();
    if swept.len() < 2 {
        return None;
    }
    swept.sort_by(|a, b| a.budget.partial_cmp(&b.budget).expect("finite budgets"));
    let rows = summarize(&exp.runs);
    let curve = |label: &str| rows.iter().filter(|r| r.label == label).collect::<Vec<_>>();
    let slot_budget = swept
        .iter()
        .map(|p| curve(&p.label).last().map_or(0, |r| r.slots))
        .min()?;
    if slot_budget == 0 {
        return None;
    }
    let mut points = Vec::new();
    for p in &swept {
        let c = curve(&p.label);
        let row = c.iter().find(|r| r.slots == slot_budget)?;
        let mut init: Vec<f64> = exp.runs.iter().filter(|r| r.label == p.label).map(|r| r.initial_loss).collect();
        let initial = median(&mut init);
        points.push(SweepPoint {
            label: p.label.clone(),
            budget: p.budget.expect("swept policies carry a budget"),
            train_loss: row.train_loss,
            efficiency: (initial - row.train_loss) / slot_budget as f64,
        });
    }
    let best = points
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.efficiency > points[best].efficiency { i } else { best });
    let interior = best != 0 && best != points.len() - 1;
    Some(SweepReport {
        policy: kind,
        slot_budget,
        points,
        best,
        interior,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes one CSV per run, `summary.csv`, and for budget sweeps one
/// `sweep_<policy>.csv` per swept policy. Returns the paths written.
pub fn write_outputs(
    exp: &Experiment,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(Vec<PathBuf>, Vec<SweepReport>), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    for run in &exp.runs {
        let path = dir.join(run.file_name());
        write(&path, &run.log.to_csv())?;
        written.push(path);
    }
    let path = dir.join("summary.csv");
    write(&path, &summary_csv(&summarize(&exp.runs)))?;
    written.push(path);
    let mut reports = Vec::new();
    if cfg.budget_sweep.is_some() {
        for kind in [PolicyKind::Bass, PolicyKind::Uniform, PolicyKind::Matcha] {
            if let Some(report) = sweep_report(exp, kind) {
                let path = dir.join(format!("sweep_{}.csv", kind.name()));
                write(&path, &report.to_csv())?;
                written.push(path);
                reports.push(report);
            }
        }
    }
    Ok((written, reports))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Experiment, Vec<PathBuf>, Vec<SweepReport>), CliError> {
    let exp = execute(cfg)?;
    let (written, reports) = write_outputs(&exp, cfg, &cfg.out_dir)?;
    Ok((exp, written, reports))
}
