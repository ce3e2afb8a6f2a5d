//! Experiment orchestration: loads or generates matching instances, runs
//! policies exactly or by seeded Monte Carlo, and checks each policy against
//! its approximation bound.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::chance::sampler;
use crate::error::{Error, Result};
use crate::exact::{adaptive_opt, exact_policy_value, DEFAULT_EDGE_CAP, DEFAULT_LEAF_BUDGET};
use crate::instance::{generate_random_matching, MatchingGenSpec, MatchingInstance};
use crate::policy::{prepare_policy, PolicyConfig, PolicyKind, ProbePolicy};
use crate::relax::solve_matching_lp;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    ExactWhenFeasible,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    File { path: PathBuf },
    Generator { spec: MatchingGenSpec, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub policy: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

impl PolicyEntry {
    pub fn new(policy: PolicyKind) -> Self {
        PolicyEntry {
            policy,
            alpha: None,
            cutoff: None,
        }
    }

    pub fn config(&self, seed: u64) -> PolicyConfig {
        let base = PolicyConfig::default();
        PolicyConfig {
            alpha: self.alpha.unwrap_or(base.alpha),
            cutoff: self.cutoff.unwrap_or(base.cutoff),
            seed,
        }
    }
}

fn default_budget() -> u64 {
    DEFAULT_LEAF_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    pub policies: Vec<PolicyEntry>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub mode: Mode,
    /// Leaf budget of the exact evaluator.
    #[serde(default = "default_budget")]
    pub exact_budget: u64,
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let InstanceSource::File { path: p } = &mut cfg.source {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::invalid("no policies listed"));
        }
        for p in &self.policies {
            p.config(self.seed).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEstimate {
    pub policy: String,
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub bound: f64,
    pub observed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: String,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub lp_value: f64,
    pub adaptive_opt: Option<f64>,
    pub estimates: Vec<PolicyEstimate>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub trials: u64,
    pub mode: Mode,
    pub instances: Vec<InstanceReport>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.instances
            .iter()
            .all(|i| i.verdicts.iter().all(|v| v.pass))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per (instance, policy) estimate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "instance,policy,lp_value,adaptive_opt,mean,std_error,trials,exact,bound,pass\n",
        );
        for inst in &self.instances {
            for est in &inst.estimates {
                let verdict = inst
                    .verdicts
                    .iter()
                    .find(|v| v.claim.starts_with(&format!("{} >=", est.policy)));
                let opt = inst.adaptive_opt.map(|v| v.to_string()).unwrap_or_default();
                let (bound, pass) = verdict
                    .map(|v| (v.bound.to_string(), v.pass.to_string()))
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    inst.name,
                    est.policy,
                    inst.lp_value,
                    opt,
                    est.mean,
                    est.std_error,
                    est.trials,
                    est.exact,
                    bound,
                    pass
                );
            }
        }
        out
    }
}

/// Mean and standard error of `sample std / sqrt(n)`.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` independent copies of `run` in parallel; trial `i` draws
/// from substream `(seed, tag, i)`, and results are combined in index order
/// so the estimate does not depend on scheduling.
pub fn monte_carlo<F>(seed: u64, tag: &str, trials: u64, run: F) -> Result<(f64, f64)>
where
    F: Fn(&mut dyn crate::chance::Chance) -> Result<f64> + Sync,
{
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| run(&mut sampler(seed, tag, i)))
        .collect::<Result<_>>()?;
    Ok(mean_and_se(&values))
}

/// Estimates a policy's expected value: exactly when the mode and budget
/// allow it, by Monte Carlo otherwise.
pub fn estimate_policy(
    policy: &dyn ProbePolicy,
    inst: &MatchingInstance,
    cfg: &ExperimentConfig,
    tag: &str,
) -> Result<PolicyEstimate> {
    if cfg.mode == Mode::ExactWhenFeasible {
        match exact_policy_value(cfg.exact_budget, |c| policy.run(inst, c).map(|t| t.value)) {
            Ok(ev) => {
                return Ok(PolicyEstimate {
                    policy: policy.name().to_string(),
                    mean: ev.value,
                    std_error: 0.0,
                    trials: ev.leaves,
                    exact: true,
                })
            }
            Err(Error::Budget(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let (mean, std_error) = monte_carlo(cfg.seed, tag, cfg.trials, |c| {
        policy.run(inst, c).map(|t| t.value)
    })?;
    Ok(PolicyEstimate {
        policy: policy.name().to_string(),
        mean,
        std_error,
        trials: cfg.trials,
        exact: false,
    })
}

/// The guarantee a policy carries on this instance, if any: the bound and
/// the claim text.
pub fn policy_bound(
    entry: &PolicyEntry,
    inst: &MatchingInstance,
    lp_value: f64,
    opt: Option<f64>,
) -> Result<Option<(f64, String)>> {
    let cfg = entry.config(0);
    let p_max = inst.max_prob();
    let name = entry.policy.name();
    Ok(match entry.policy {
        PolicyKind::Permute if (cfg.alpha - bounds::alpha_permute()).abs() < 1e-12 => {
            let c = bounds::c_permute();
            Some((lp_value / c, format!("{name} >= LP/{c:.4}")))
        }
        PolicyKind::Permute => None,
        PolicyKind::RoundColor => {
            let factor = if p_max > 0.0 {
                bounds::rho(2.0, p_max)?
            } else {
                1.0
            };
            Some((lp_value * factor, format!("{name} >= rho(2,{p_max:.4})*LP")))
        }
        PolicyKind::GeneralRedux => {
            let factor = if p_max > 0.0 {
                bounds::rho(1.0, p_max)? / 2.0
            } else {
                1.0
            };
            Some((
                lp_value * factor,
                format!("{name} >= rho(1,{p_max:.4})/2*LP"),
            ))
        }
        PolicyKind::Greedy if inst.is_unweighted() => {
            Some((lp_value / bounds::C_GREEDY, format!("{name} >= LP/5")))
        }
        PolicyKind::Hybrid if inst.is_unweighted() => match opt {
            Some(opt) => {
                let c = bounds::c_hybrid(cfg.cutoff.max(1e-9))?;
                Some((opt / c, format!("{name} >= OPT/{c:.4}")))
            }
            None => None,
        },
        PolicyKind::Greedy | PolicyKind::Hybrid => None,
    })
}

fn load_instances(cfg: &ExperimentConfig) -> Result<Vec<(String, MatchingInstance)>> {
    match &cfg.source {
        InstanceSource::File { path } => {
            let text = fs::read_to_string(path)?;
            let inst = MatchingInstance::from_json(&text)
                .map_err(|e| e.context(&path.display().to_string()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".into());
            Ok(vec![(name, inst)])
        }
        InstanceSource::Generator { spec, count } => (0..*count)
            .map(|i| {
                let inst = generate_random_matching(spec, cfg.seed.wrapping_add(i as u64))?;
                Ok((format!("gen-{i}"), inst))
            })
            .collect(),
    }
}

fn run_instance(
    cfg: &ExperimentConfig,
    name: &str,
    inst: &MatchingInstance,
) -> Result<InstanceReport> {
    let lp_value = solve_matching_lp(inst)?.objective;
    let opt = if inst.n_edges() <= DEFAULT_EDGE_CAP {
        Some(adaptive_opt::<f64>(inst)?.value)
    } else {
        None
    };
    let mut estimates = Vec::new();
    let mut verdicts = Vec::new();
    if let Some(opt) = opt {
        verdicts.push(Verdict {
            claim: "OPT <= LP".into(),
            bound: lp_value,
            observed: opt,
            pass: opt <= lp_value + 1e-7,
        });
    }
    for entry in &cfg.policies {
        if !entry.policy.applies_to(inst) {
            continue;
        }
        let pcfg = entry.config(cfg.seed);
        let policy = prepare_policy(entry.policy, pcfg, inst)?;
        let tag = format!("{name}/{}", entry.policy.name());
        let est = estimate_policy(policy.as_ref(), inst, cfg, &tag)?;
        let slack = 3.0 * est.std_error;
        if let Some((bound, claim)) = policy_bound(entry, inst, lp_value, opt)? {
            verdicts.push(Verdict {
                claim,
                bound,
                observed: est.mean,
                pass: est.mean + slack >= bound - 1e-12,
            });
        }
        if let (Some(opt), true) = (opt, est.exact) {
            verdicts.push(Verdict {
                claim: format!("{} <= OPT", entry.policy.name()),
                bound: opt,
                observed: est.mean,
                pass: est.mean <= opt + 1e-9,
            });
        }
        estimates.push(est);
    }
    Ok(InstanceReport {
        name: name.to_string(),
        n_vertices: inst.n_vertices(),
        n_edges: inst.n_edges(),
        lp_value,
        adaptive_opt: opt,
        estimates,
        verdicts,
    })
}

/// Runs every listed policy on every instance. The report is a function of
/// the config alone.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let instances = load_instances(cfg)?;
    let reports = instances
        .iter()
        .map(|(name, inst)| run_instance(cfg, name, inst).map_err(|e| e.context(name)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        seed: cfg.seed,
        trials: cfg.trials,
        mode: cfg.mode,
        instances: reports,
    })
}
