//! Experiment configuration: defaults, then a flat `key = value` file, then
//! command-line overrides, all funneled through [`ExperimentConfig::set`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;
use crate::topology::TopologySpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Bass,
    Uniform,
    Full,
    Matcha,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bass => "bass",
            Self::Uniform => "uniform",
            Self::Full => "full",
            Self::Matcha => "matcha",
        }
    }
}

/// A policy with an optional budget of its own (`bass@0.3`, `matcha@50%`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub budget: Option<f64>,
}

impl FromStr for PolicySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, budget) = match s.split_once('@') {
            Some((n, b)) => (n, Some(parse_budget(b)?)),
            None => (s, None),
        };
        let kind = match name {
            "bass" => PolicyKind::Bass,
            "uniform" => PolicyKind::Uniform,
            "full" => PolicyKind::Full,
            "matcha" => PolicyKind::Matcha,
            _ => return Err(CliError::Spec(format!("unknown policy `{name}`"))),
        };
        Ok(Self { kind, budget })
    }
}

/// `0.5` or `50%`.
fn parse_budget(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let bad = || CliError::Spec(format!("cannot parse budget `{s}`"));
    let v = match s.strip_suffix('%') {
        Some(pct) => pct.trim().parse::<f64>().map_err(|_| bad())? / 100.0,
        None => s.parse::<f64>().map_err(|_| bad())?,
    };
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(bad())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetMode {
    /// Share of scheduling units active per round on average: subsets for
    /// broadcast policies, matchings for the matching baseline.
    Fraction,
    /// Expected transmission slots per round.
    Slots,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonSpec {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    Quadratic,
    Logistic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub policies: Vec<PolicySpec>,
    pub budget: f64,
    pub budget_mode: BudgetMode,
    pub budget_sweep: Option<Vec<f64>>,
    pub min_subset_prob: f64,
    pub seeds: Vec<u64>,
    pub epsilon: EpsilonSpec,
    pub objective: ObjectiveKind,
    pub rounds: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub batch_size: usize,
    /// Model dimension of the quadratic objective.
    pub dim: usize,
    /// Standard deviation of additive gradient noise (quadratic only).
    pub grad_noise: f64,
    /// Monte Carlo rounds used to estimate matching-baseline moments.
    pub mc_samples: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::TwoStars(6, 6),
            policies: vec![PolicySpec {
                kind: PolicyKind::Bass,
                budget: None,
            }],
            budget: 0.5,
            budget_mode: BudgetMode::Fraction,
            budget_sweep: None,
            min_subset_prob: 0.0,
            seeds: vec![1],
            epsilon: EpsilonSpec::Auto,
            objective: ObjectiveKind::Logistic,
            rounds: 200,
            lr: 0.5,
            lr_decay: 0.01,
            batch_size: 16,
            dim: 10,
            grad_noise: 0.0,
            mc_samples: 100_000,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Applies one setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let bad = |what: &str| CliError::Spec(format!("bad value `{value}` for {what}"));
        match key.trim().replace('-', "_").as_str() {
            "topology" => self.topology = value.parse()?,
            "policy" | "policies" => {
                self.policies = split_list(value)
                    .map(str::parse)
                    .collect::<Result<_, _>>()?;
                if self.policies.is_empty() {
                    return Err(bad("policy"));
                }
            }
            "budget" => self.budget = parse_budget(value)?,
            "budget_mode" => {
                self.budget_mode = match value {
                    "fraction" => BudgetMode::Fraction,
                    "slots" => BudgetMode::Slots,
                    _ => return Err(bad("budget-mode")),
                }
            }
            "budget_sweep" => {
                let list: Vec<f64> = split_list(value).map(parse_budget).collect::<Result<_, _>>()?;
                self.budget_sweep = if list.is_empty() { None } else { Some(list) };
            }
            "min_subset_prob" => {
                self.min_subset_prob = value.parse().map_err(|_| bad("min-subset-prob"))?
            }
            "seed" => self.seeds = vec![value.parse().map_err(|_| bad("seed"))?],
            "seeds" => self.seeds = parse_seeds(value)?,
            "epsilon" => {
                self.epsilon = if value == "auto" {
                    EpsilonSpec::Auto
                } else {
                    let e: f64 = value.parse().map_err(|_| bad("epsilon"))?;
                    if !(e >= 0.0) {
                        return Err(bad("epsilon"));
                    }
                    EpsilonSpec::Fixed(e)
                }
            }
            "objective" => {
                self.objective = match value {
                    "quadratic" => ObjectiveKind::Quadratic,
                    "logistic" => ObjectiveKind::Logistic,
                    _ => return Err(bad("objective")),
                }
            }
            "rounds" => self.rounds = value.parse().map_err(|_| bad("rounds"))?,
            "lr" => self.lr = value.parse().map_err(|_| bad("lr"))?,
            "lr_decay" => self.lr_decay = value.parse().map_err(|_| bad("lr-decay"))?,
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad("batch-size"))?,
            "dim" => self.dim = value.parse().map_err(|_| bad("dim"))?,
            "grad_noise" => self.grad_noise = value.parse().map_err(|_| bad("grad-noise"))?,
            "mc_samples" => self.mc_samples = value.parse().map_err(|_| bad("mc-samples"))?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(CliError::Spec(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: idx + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(k, v).map_err(|e| CliError::Config {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.apply_text(&text)
    }

    /// Settings in the file format; applying the output to a default config
    /// reproduces this one.
    pub fn to_text(&self) -> String {
        let policies: Vec<String> = self.policies.iter().map(|p| p.to_string()).collect();
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        let mut lines = vec![
            format!("topology = {}", self.topology),
            format!("policy = {}", policies.join(",")),
            format!("budget = {}", self.budget),
            format!(
                "budget_mode = {}",
                match self.budget_mode {
                    BudgetMode::Fraction => "fraction",
                    BudgetMode::Slots => "slots",
                }
            ),
        ];
        if let Some(sweep) = &self.budget_sweep {
            let s: Vec<String> = sweep.iter().map(|b| b.to_string()).collect();
            lines.push(format!("budget_sweep = {}", s.join(",")));
        }
        lines.extend([
            format!("min_subset_prob = {}", self.min_subset_prob),
            format!("seeds = {}", seeds.join(",")),
            format!(
                "epsilon = {}",
                match self.epsilon {
                    EpsilonSpec::Auto => "auto".to_string(),
                    EpsilonSpec::Fixed(e) => e.to_string(),
                }
            ),
            format!(
                "objective = {}",
                match self.objective {
                    ObjectiveKind::Quadratic => "quadratic",
                    ObjectiveKind::Logistic => "logistic",
                }
            ),
            format!("rounds = {}", self.rounds),
            format!("lr = {}", self.lr),
            format!("lr_decay = {}", self.lr_decay),
            format!("batch_size = {}", self.batch_size),
            format!("dim = {}", self.dim),
            format!("grad_noise = {}", self.grad_noise),
            format!("mc_samples = {}", self.mc_samples),
            format!("out_dir = {}", self.out_dir.display()),
        ]);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.budget {
            Some(b) => write!(f, "{}@{}", self.kind.name(), b),
            None => f.write_str(self.kind.name()),
        }
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

/// `1,2,5` or an inclusive range `1-10`, or a mix.
fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Spec(format!("cannot parse seeds `{s}`"));
    let mut out = Vec::new();
    for part in split_list(s) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_specs() {
        let p: PolicySpec = "bass@50%".parse().unwrap();
        assert_eq!(p, PolicySpec { kind: PolicyKind::Bass, budget: Some(0.5) });
        let p: PolicySpec = "matcha@0.25".parse().unwrap();
        assert_eq!(p.budget, Some(0.25));
        assert!("gossip".parse::<PolicySpec>().is_err());
        assert!("bass@-1".parse::<PolicySpec>().is_err());
    }

    #[test]
    fn seeds_lists_and_ranges() {
        assert_eq!(parse_seeds("1-3,7").unwrap(), vec![1, 2, 3, 7]);
        assert!(parse_seeds("3-1").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn file_then_overrides() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "# comment\ntopology = ring:6\npolicy = bass, full\nrounds = 10  # trailing\nbudget-mode = slots\n",
        )
        .unwrap();
        cfg.set("rounds", "20").unwrap();
        assert_eq!(cfg.topology, TopologySpec::Ring(6));
        assert_eq!(cfg.policies.len(), 2);
        assert_eq!(cfg.rounds, 20);
        assert_eq!(cfg.budget_mode, BudgetMode::Slots);
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_text("rounds = 3\nwhat\n").unwrap_err().to_string();
        assert!(err.starts_with("config line 2"), "{err}");
        let err = cfg.apply_text("colour = red\n").unwrap_err().to_string();
        assert!(err.contains("unknown setting"), "{err}");
        assert!(cfg.set("epsilon", "-1").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("policy", "bass@0.3,matcha,full").unwrap();
        cfg.set("budget_sweep", "0.2,0.4").unwrap();
        cfg.set("epsilon", "0.25").unwrap();
        cfg.set("seeds", "1-4").unwrap();
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }
}
