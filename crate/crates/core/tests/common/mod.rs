#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use stochastic_probing::chance::Chance;
use stochastic_probing::exact::{exact_policy_value, DEFAULT_LEAF_BUDGET};
use stochastic_probing::harness::monte_carlo;
use stochastic_probing::instance::{
    generate_random_matching, EdgeSpec, MatchingGenSpec, MatchingInstance,
};
use stochastic_probing::{Error, Result};

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

pub fn fixture(rel: &str) -> MatchingInstance {
    MatchingInstance::from_json(&fs::read_to_string(fixture_path(rel)).unwrap()).unwrap()
}

/// The checked-in random set with the given prefix (`bipartite` or `general`).
pub fn random_fixtures(prefix: &str) -> Vec<(String, MatchingInstance)> {
    (0..10)
        .map(|i| {
            let name = format!("random/{prefix}_{i}.json");
            let inst = fixture(&name);
            (name, inst)
        })
        .collect()
}

/// Deterministic corpus: walks seeds from `first_seed` and keeps every
/// generated instance with between 1 and `max_edges` edges.
pub fn corpus(
    spec: &MatchingGenSpec,
    first_seed: u64,
    count: usize,
    max_edges: usize,
) -> Vec<MatchingInstance> {
    let mut out = Vec::with_capacity(count);
    let mut seed = first_seed;
    while out.len() < count {
        let inst = generate_random_matching(spec, seed).unwrap();
        if (1..=max_edges).contains(&inst.n_edges()) {
            out.push(inst);
        }
        seed += 1;
    }
    out
}

pub fn spec(
    n: usize,
    density: f64,
    probs: (f64, f64),
    weights: (f64, f64),
    bipartite: bool,
) -> MatchingGenSpec {
    MatchingGenSpec {
        n_vertices: n,
        edge_density: density,
        prob_range: probs,
        weight_range: weights,
        patience_range: (1, 3),
        bipartite,
    }
}

/// Same graph with edge 0's probability replaced, so the largest edge
/// probability is exactly `p_max` when every other edge is below it.
pub fn with_first_prob(inst: &MatchingInstance, p_max: f64) -> MatchingInstance {
    let mut edges: Vec<EdgeSpec> = inst.edges().to_vec();
    edges[0].prob = p_max;
    MatchingInstance::new(inst.kind().clone(), inst.patience_vec(), edges).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub exact: bool,
}

impl Estimate {
    /// `mean + slack * SE` reaches `bound`.
    pub fn reaches(&self, bound: f64, slack: f64) -> bool {
        self.mean + slack * self.std_error + 1e-12 >= bound
    }
}

/// Exact expectation when the enumerator's budget allows it, seeded Monte
/// Carlo otherwise.
pub fn evaluate<F>(seed: u64, tag: &str, trials: u64, run: F) -> Result<Estimate>
where
    F: Fn(&mut dyn Chance) -> Result<f64> + Sync,
{
    match exact_policy_value(DEFAULT_LEAF_BUDGET, |c| run(c)) {
        Ok(ev) => Ok(Estimate {
            mean: ev.value,
            std_error: 0.0,
            exact: true,
        }),
        Err(Error::Budget(_)) => {
            let (mean, std_error) = monte_carlo(seed, tag, trials, run)?;
            Ok(Estimate {
                mean,
                std_error,
                exact: false,
            })
        }
        Err(e) => Err(e),
    }
}

/// Standard error of a frequency `hits / n`.
pub fn frequency(hits: u64, n: u64) -> (f64, f64) {
    let f = hits as f64 / n as f64;
    (f, (f * (1.0 - f) / n as f64).sqrt())
}
