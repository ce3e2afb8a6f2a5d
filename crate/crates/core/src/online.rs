//! Online matching with i.i.d. buyer arrivals.
//!
//! Buyer types with integral expected count `e_b` are copied `e_b` times, so
//! the arrival distribution becomes uniform over the copies. The copies are
//! the "types" seen by the online policy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chance::{sampler, shuffle, Chance};
use crate::error::{Error, Result};
use crate::instance::{EdgeSpec, GraphKind, MatchingInstance, OnlineInstance, Side};
use crate::lp::{check_dual_feasibility, DualCandidate, DualReport};
use crate::relax::{build_online_lp, online_column, solve_online_lp, OnlineLpSolution};

/// One buyer column of an items-by-buyers graph.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineBuyer {
    /// Index of the buyer type in the instance.
    pub type_index: usize,
    /// Index of the copy in the expected graph.
    pub copy: usize,
    pub patience: u32,
    pub probs: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Bipartite graph of items versus buyers: either the expected graph (one
/// buyer per type copy) or an instance graph (one buyer per arrival).
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineGraph {
    pub n_items: usize,
    pub buyers: Vec<OnlineBuyer>,
}

impl OnlineGraph {
    /// Items become vertices `0..n_items`, buyers the vertices after them.
    pub fn to_matching_instance(&self) -> Result<MatchingInstance> {
        let na = self.n_items;
        let mut sides = vec![Side::A; na];
        sides.extend(self.buyers.iter().map(|_| Side::B));
        let mut patience = vec![self.buyers.len().max(1) as u32; na];
        patience.extend(self.buyers.iter().map(|b| b.patience));
        let mut edges = Vec::new();
        for (c, b) in self.buyers.iter().enumerate() {
            for a in 0..na {
                edges.push(EdgeSpec::new(a, na + c, b.probs[a], b.weights[a]));
            }
        }
        MatchingInstance::new(GraphKind::Bipartite(sides), patience, edges)
    }
}

/// Expected graph with `e_b` copies of every type; fractional `e_b` is rejected.
pub fn expected_graph(inst: &OnlineInstance) -> Result<OnlineGraph> {
    let mut buyers = Vec::new();
    for (b, ty) in inst.buyer_types().iter().enumerate() {
        let copies = ty.expected_count.round();
        if (ty.expected_count - copies).abs() > 1e-9 || copies < 1.0 {
            return Err(Error::invalid(format!(
                "buyer type {}: expected count {} is not a positive integer",
                ty.id, ty.expected_count
            )));
        }
        for _ in 0..copies as usize {
            buyers.push(OnlineBuyer {
                type_index: b,
                copy: buyers.len(),
                patience: ty.patience,
                probs: ty.probs.clone(),
                weights: ty.weights.clone(),
            });
        }
    }
    Ok(OnlineGraph {
        n_items: inst.n_items(),
        buyers,
    })
}

/// `n` i.i.d. arrivals, each an index into the expected graph's buyers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalStream {
    pub arrivals: Vec<usize>,
}

pub fn sample_arrivals(expected: &OnlineGraph, chance: &mut dyn Chance) -> ArrivalStream {
    let n = expected.buyers.len();
    ArrivalStream {
        arrivals: (0..n).map(|_| chance.uniform(n)).collect(),
    }
}

/// Instance graph: one buyer per arrival, inheriting its type's rows.
pub fn instantiate(expected: &OnlineGraph, stream: &ArrivalStream) -> OnlineGraph {
    OnlineGraph {
        n_items: expected.n_items,
        buyers: stream
            .arrivals
            .iter()
            .map(|&c| expected.buyers[c].clone())
            .collect(),
    }
}

pub fn sample_instantiation(inst: &OnlineInstance, chance: &mut dyn Chance) -> Result<OnlineGraph> {
    let g = expected_graph(inst)?;
    let stream = sample_arrivals(&g, chance);
    Ok(instantiate(&g, &stream))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    /// Position in the arrival stream.
    pub arrival: usize,
    /// Buyer copy in the expected graph.
    pub buyer: usize,
    pub item: usize,
    pub bought: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OnlineRun {
    pub revenue: f64,
    pub offers: Vec<Offer>,
}

/// Runs the offer policy on a given arrival stream. The first arrival of
/// each copy sees the items in a fresh random order and is offered each
/// unsold item with probability `y[copy][item] / alpha`, until it buys or has
/// received `patience` offers. Later arrivals of the same copy get nothing.
pub fn run_offers(
    expected: &OnlineGraph,
    y: &[Vec<f64>],
    alpha: f64,
    stream: &ArrivalStream,
    chance: &mut dyn Chance,
) -> OnlineRun {
    let mut sold = vec![false; expected.n_items];
    let mut seen = vec![false; expected.buyers.len()];
    let mut run = OnlineRun::default();
    for (i, &c) in stream.arrivals.iter().enumerate() {
        if std::mem::replace(&mut seen[c], true) {
            continue;
        }
        let buyer = &expected.buyers[c];
        let mut order: Vec<usize> = (0..expected.n_items).collect();
        shuffle(chance, &mut order);
        let mut offers = 0;
        for a in order {
            if offers == buyer.patience {
                break;
            }
            if sold[a] || !chance.bernoulli(y[c][a] / alpha) {
                continue;
            }
            offers += 1;
            let bought = chance.bernoulli(buyer.probs[a]);
            run.offers.push(Offer {
                arrival: i,
                buyer: c,
                item: a,
                bought,
            });
            if bought {
                sold[a] = true;
                run.revenue += buyer.weights[a];
                break;
            }
        }
    }
    run
}

/// Draws the arrivals and runs the offer policy on them.
pub fn online_policy_run(
    expected: &OnlineGraph,
    lp: &OnlineLpSolution,
    alpha: f64,
    chance: &mut dyn Chance,
) -> Result<OnlineRun> {
    if alpha < 1.0 {
        return Err(Error::invalid(format!("alpha must be >= 1 (got {alpha})")));
    }
    let stream = sample_arrivals(expected, chance);
    Ok(run_offers(expected, &lp.y, alpha, &stream, chance))
}

/// Dual of the expected-graph LP copied onto an instance graph: items keep
/// their multipliers and each arrived buyer takes those of its copy.
pub fn replicated_dual(
    expected: &OnlineGraph,
    lp: &OnlineLpSolution,
    instance: &OnlineGraph,
) -> DualCandidate<f64> {
    let na = expected.n_items;
    let nc = expected.buyers.len();
    let dual = &lp.result.dual;
    let mut rows: Vec<f64> = dual[..na].to_vec();
    rows.extend(instance.buyers.iter().map(|b| dual[na + b.copy]));
    rows.extend(instance.buyers.iter().map(|b| dual[na + nc + b.copy]));
    let mut upper = Vec::with_capacity(na * instance.buyers.len());
    for b in &instance.buyers {
        for a in 0..na {
            upper.push(lp.result.bound_dual[online_column(expected, a, b.copy)]);
        }
    }
    DualCandidate {
        rows,
        upper: Some(upper),
    }
}

/// Checks the replicated dual against the instance-graph LP.
pub fn check_replicated_dual(
    expected: &OnlineGraph,
    lp: &OnlineLpSolution,
    instance: &OnlineGraph,
) -> Result<DualReport<f64>> {
    let program = build_online_lp::<f64>(instance);
    check_dual_feasibility(&program, &replicated_dual(expected, lp, instance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub lp_expected: f64,
    pub mean_lp_instance: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Set when `mean - 3 SE` exceeds the expected-graph LP.
    pub violation: bool,
}

/// Compares the expected-graph LP with the mean instance-graph LP over
/// `samples` seeded instantiations.
pub fn online_lp_gap_report(inst: &OnlineInstance, samples: usize, seed: u64) -> Result<GapReport> {
    if samples < 2 {
        return Err(Error::invalid("the gap report needs at least 2 samples"));
    }
    let g = expected_graph(inst)?;
    let lp_expected = solve_online_lp(&g)?.objective;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut chance = sampler(seed, "instantiation", s as u64);
            let stream = sample_arrivals(&g, &mut chance);
            solve_online_lp(&instantiate(&g, &stream)).map(|r| r.objective)
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    Ok(GapReport {
        lp_expected,
        mean_lp_instance: mean,
        std_error,
        samples,
        violation: mean - 3.0 * std_error > lp_expected + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::Sampler;
    use crate::exact::exact_policy_value;
    use crate::instance::BuyerType;

    fn one_by_one(p: f64) -> OnlineInstance {
        OnlineInstance::new(
            1,
            vec![BuyerType {
                id: 0,
                expected_count: 1.0,
                patience: 1,
                probs: vec![p],
                weights: vec![1.0],
            }],
            1,
        )
        .unwrap()
    }

    #[test]
    fn single_item_single_buyer() {
        let inst = one_by_one(1.0);
        let g = expected_graph(&inst).unwrap();
        let lp = solve_online_lp(&g).unwrap();
        assert!((lp.objective - 1.0).abs() < 1e-12);
        let run = online_policy_run(&g, &lp, 1.0, &mut Sampler::seeded(1)).unwrap();
        assert_eq!(run.revenue, 1.0);
        let alpha = crate::bounds::alpha_online();
        let ev =
            exact_policy_value(100, |c| Ok(online_policy_run(&g, &lp, alpha, c)?.revenue)).unwrap();
        assert!((ev.value - 1.0 / alpha).abs() < 1e-12);
        assert!((ev.value - 0.3660).abs() < 1e-4);
    }

    #[test]
    fn copies_and_rejection() {
        let mut ty = BuyerType {
            id: 7,
            expected_count: 2.0,
            patience: 1,
            probs: vec![0.5],
            weights: vec![1.0],
        };
        let inst = OnlineInstance::new(1, vec![ty.clone()], 2).unwrap();
        let g = expected_graph(&inst).unwrap();
        assert_eq!(g.buyers.len(), 2);
        assert_eq!(g.buyers[1].copy, 1);
        ty.expected_count = 1.5;
        let mut half = ty.clone();
        half.expected_count = 0.5;
        let frac = OnlineInstance::new(1, vec![ty, half], 2).unwrap();
        assert!(matches!(expected_graph(&frac), Err(Error::Validation(_))));
    }

    #[test]
    fn deterministic_instance_has_no_gap() {
        let report = online_lp_gap_report(&one_by_one(0.7), 10, 3).unwrap();
        assert!((report.mean_lp_instance - report.lp_expected).abs() < 1e-12);
        assert!(report.std_error < 1e-12 && !report.violation);
        let zero = online_lp_gap_report(&one_by_one(0.0), 5, 3).unwrap();
        assert_eq!((zero.lp_expected, zero.mean_lp_instance), (0.0, 0.0));
    }

    #[test]
    fn instance_graph_as_matching() {
        let inst = one_by_one(0.5);
        let ghat = sample_instantiation(&inst, &mut Sampler::seeded(5)).unwrap();
        let m = ghat.to_matching_instance().unwrap();
        assert_eq!((m.n_vertices(), m.n_edges()), (2, 1));
    }
}
