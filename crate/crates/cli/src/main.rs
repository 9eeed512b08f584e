use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bass::baselines::matching_decomposition;
use bass::moments::{expected_laplacian_gram, exhaustive_moments, monte_carlo_moments};
use bass::rng::seeded;
use bass::scheduler::SchedulingPolicy;
use bass::greedy_partition;
use bass_cli::config::{BudgetMode, ExperimentConfig, PolicyKind};
use bass_cli::experiment::{prepare_policies, run_experiment, PreparedPolicy};
use clap::{Args, Parser, Subcommand};

/// Largest partition for which `moments-check` also enumerates every
/// activation pattern.
const MAX_EXHAUSTIVE_SUBSETS: usize = 20;

#[derive(Parser)]
#[command(name = "bass", version, about = "Broadcast scheduling experiments for decentralized SGD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train under each policy and seed, writing per-run and summary CSVs.
    Run(Settings),
    /// Compare closed-form expected Laplacian moments with sampling.
    MomentsCheck {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Print the collision-free partition (or the matchings) of a topology.
    PartitionDump {
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        matchings: bool,
    },
    /// Report the mixing step chosen for each policy.
    OptimizeEps(Settings),
}

/// Settings shared by every subcommand. Flags override `--config`.
#[derive(Args, Default)]
struct Settings {
    /// Flat `key = value` file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// path:n, ring:n, star:n, two-stars:n1,n2, er:n,p,seed, star-dense:k,m,
    /// cluster-dense:k,m, file:PATH
    #[arg(long)]
    topology: Option<String>,
    /// Comma list of bass, uniform, full, matcha; `name@budget` pins a budget.
    #[arg(long)]
    policy: Option<String>,
    /// Fraction of scheduling units (e.g. 0.5 or 50%) or slots, per --budget-mode.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long, value_parser = ["fraction", "slots"])]
    budget_mode: Option<String>,
    /// Comma list of budgets; one run set per budget.
    #[arg(long)]
    budget_sweep: Option<String>,
    #[arg(long)]
    min_subset_prob: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma list and/or inclusive ranges, e.g. 1-10.
    #[arg(long)]
    seeds: Option<String>,
    /// `auto` or a fixed value.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long, value_parser = ["quadratic", "logistic"])]
    objective: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    lr_decay: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    grad_noise: Option<String>,
    #[arg(long)]
    mc_samples: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
}

impl Settings {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let pairs = [
            ("topology", &self.topology),
            ("policy", &self.policy),
            ("budget", &self.budget),
            ("budget_mode", &self.budget_mode),
            ("budget_sweep", &self.budget_sweep),
            ("min_subset_prob", &self.min_subset_prob),
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("epsilon", &self.epsilon),
            ("objective", &self.objective),
            ("rounds", &self.rounds),
            ("lr", &self.lr),
            ("lr_decay", &self.lr_decay),
            ("batch_size", &self.batch_size),
            ("dim", &self.dim),
            ("grad_noise", &self.grad_noise),
            ("mc_samples", &self.mc_samples),
            ("out_dir", &self.out_dir),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        Ok(cfg)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn print_policies(policies: &[PreparedPolicy]) {
    println!("{:<16} {:>10} {:>10} {:>10} {:>10}  flags", "policy", "slots", "epsilon", "s(eps)", "rho_mean");
    for p in policies {
        let m = &p.mixing;
        let mut flags = Vec::new();
        if m.degenerate {
            flags.push("no-communication");
        }
        if m.at_boundary {
            flags.push("boundary");
        }
        println!(
            "{:<16} {:>10.4} {:>10.6} {:>10} {:>10}  {}",
            p.label,
            p.expected_slots,
            m.epsilon,
            fmt_opt(m.objective),
            fmt_opt(m.mean_rho),
            flags.join(",")
        );
        if m.degenerate {
            eprintln!("warning: {} never activates a link; epsilon set to 0", p.label);
        }
        if m.at_boundary {
            eprintln!("warning: {} epsilon search ended on its bracket boundary", p.label);
        }
    }
}

fn run(settings: &Settings) -> Result<()> {
    let cfg = settings.resolve()?;
    let (exp, written, reports) = run_experiment(&cfg)?;
    println!(
        "topology {} ({} nodes, {} edges, {} subsets)",
        cfg.topology,
        exp.topology.n(),
        exp.topology.num_edges(),
        exp.partition.len()
    );
    print_policies(&exp.policies);
    for r in &reports {
        let best = &r.points[r.best];
        println!(
            "budget sweep ({}): best budget {} at {} slots ({})",
            r.policy.name(),
            best.budget,
            r.slot_budget,
            if r.interior { "interior" } else { "at the edge of the swept range" }
        );
    }
    println!("wrote {} files to {}", written.len(), cfg.out_dir.display());
    Ok(())
}

fn moments_check(settings: &Settings, samples: usize) -> Result<()> {
    if samples == 0 {
        bail!("--samples must be positive");
    }
    let cfg = settings.resolve()?;
    let t = cfg.topology.generate()?;
    let part = greedy_partition(&t);
    let q = part.len() as f64;
    let spec = cfg.policies[0];
    let budget = spec.budget.unwrap_or(cfg.budget);
    let subsets = match cfg.budget_mode {
        BudgetMode::Fraction => budget * q,
        BudgetMode::Slots => budget,
    };
    let policy = match spec.kind {
        PolicyKind::Bass => SchedulingPolicy::bass(&t, &part, subsets, cfg.min_subset_prob)?,
        PolicyKind::Uniform => SchedulingPolicy::uniform(&part, subsets)?,
        PolicyKind::Full => SchedulingPolicy::from_probs(vec![1.0; part.len()])?,
        PolicyKind::Matcha => bail!("moments-check covers subset policies (bass, uniform, full)"),
    };
    let probs = policy.node_probs(&part);
    let closed = expected_laplacian_gram(&t, &part, &probs);
    let seed = cfg.seeds[0];
    let mc = monte_carlo_moments(&t, &part, &probs, samples, &mut seeded(seed));
    println!("subsets {}  samples {samples}  seed {seed}", part.len());
    println!("monte-carlo  max|dE[L]| {:.3e}  max|dE[LtL]| {:.3e}", closed.e_l.max_abs_diff(&mc.e_l), closed.e_ltl.max_abs_diff(&mc.e_ltl));
    if part.len() <= MAX_EXHAUSTIVE_SUBSETS {
        let ex = exhaustive_moments(&t, &part, &probs);
        println!("exhaustive   max|dE[L]| {:.3e}  max|dE[LtL]| {:.3e}", closed.e_l.max_abs_diff(&ex.e_l), closed.e_ltl.max_abs_diff(&ex.e_ltl));
    } else {
        println!("exhaustive   skipped ({} subsets)", part.len());
    }
    Ok(())
}

fn partition_dump(settings: &Settings, matchings: bool) -> Result<()> {
    let cfg = settings.resolve()?;
    let t = cfg.topology.generate()?;
    if matchings {
        print!("{}", matching_decomposition(&t).to_text());
    } else {
        print!("{}", greedy_partition(&t).to_text());
    }
    Ok(())
}

fn optimize_eps(settings: &Settings) -> Result<()> {
    let cfg = settings.resolve()?;
    let t = cfg.topology.generate()?;
    let part = greedy_partition(&t);
    print_policies(&prepare_policies(&t, &part, &cfg)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(s) => run(s),
        Command::MomentsCheck { settings, samples } => moments_check(settings, *samples),
        Command::PartitionDump { settings, matchings } => partition_dump(settings, *matchings),
        Command::OptimizeEps(s) => optimize_eps(s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
