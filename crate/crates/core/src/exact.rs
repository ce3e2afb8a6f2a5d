//! Ground truth for small instances.
//!
//! [`adaptive_opt`] finds the best adaptive probing strategy by dynamic
//! programming over residual states. [`exact_policy_value`] computes the exact
//! expectation of any policy written against [`Chance`] by replaying it down
//! every branch of its probability tree.

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::chance::Chance;
use crate::error::{Error, Result};
use crate::instance::{MatchingInstance, PackingInstance};
use crate::scalar::Scalar;

pub const DEFAULT_EDGE_CAP: usize = 12;
pub const DEFAULT_ITEM_CAP: usize = 12;
pub const DEFAULT_LEAF_BUDGET: u64 = 2_000_000;
/// Largest instance whose strategy tree is dumped.
pub const TREE_EDGE_CAP: usize = 6;

/// Residual probing state: usable edges as a bit mask, remaining patience.
///
/// An edge is usable when it is unprobed and both ends are unmatched with
/// patience left. Patience of a vertex without usable edges is stored as zero
/// so that equivalent states share one key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdaptiveState {
    pub usable: u32,
    pub patience: Vec<u32>,
}

impl AdaptiveState {
    pub fn initial(inst: &MatchingInstance) -> Self {
        let all = if inst.n_edges() == 32 {
            u32::MAX
        } else {
            (1u32 << inst.n_edges()) - 1
        };
        Self::canonical(inst, all, inst.patience_vec())
    }

    fn canonical(inst: &MatchingInstance, mut usable: u32, mut patience: Vec<u32>) -> Self {
        for (e, spec) in inst.edges().iter().enumerate() {
            if patience[spec.u] == 0 || patience[spec.v] == 0 {
                usable &= !(1 << e);
            }
        }
        for (v, t) in patience.iter_mut().enumerate() {
            if !inst.incident(v).iter().any(|&e| usable & (1 << e) != 0) {
                *t = 0;
            }
        }
        AdaptiveState { usable, patience }
    }

    pub fn is_usable(&self, e: usize) -> bool {
        self.usable & (1 << e) != 0
    }

    /// State after a successful probe of `e`: both ends leave the graph.
    pub fn after_success(&self, inst: &MatchingInstance, e: usize) -> Self {
        let spec = inst.edge(e);
        let mut patience = self.patience.clone();
        patience[spec.u] = 0;
        patience[spec.v] = 0;
        Self::canonical(inst, self.usable & !(1 << e), patience)
    }

    /// State after a failed probe of `e`: `e` is gone and both ends lose one
    /// unit of patience.
    pub fn after_failure(&self, inst: &MatchingInstance, e: usize) -> Self {
        let spec = inst.edge(e);
        let mut patience = self.patience.clone();
        patience[spec.u] -= 1;
        patience[spec.v] -= 1;
        Self::canonical(inst, self.usable & !(1 << e), patience)
    }
}

/// Optimal value with the best next probe (or `None` = stop) in every
/// reachable state.
#[derive(Debug, Clone)]
pub struct AdaptiveSolution<T> {
    pub value: T,
    pub first_action: Option<usize>,
    table: HashMap<AdaptiveState, (T, Option<usize>)>,
}

impl<T> AdaptiveSolution<T> {
    pub fn action(&self, state: &AdaptiveState) -> Option<usize> {
        self.table.get(state).and_then(|(_, a)| *a)
    }

    pub fn value_of(&self, state: &AdaptiveState) -> Option<&T> {
        self.table.get(state).map(|(v, _)| v)
    }

    pub fn n_states(&self) -> usize {
        self.table.len()
    }
}

fn state_estimate(inst: &MatchingInstance) -> f64 {
    let patience: f64 = (0..inst.n_vertices())
        .map(|v| inst.patience(v) as f64 + 1.0)
        .product();
    2f64.powi(inst.n_edges() as i32) * patience
}

pub fn adaptive_opt<T: Scalar>(inst: &MatchingInstance) -> Result<AdaptiveSolution<T>> {
    adaptive_opt_capped(inst, DEFAULT_EDGE_CAP)
}

/// Dynamic program `V = max(0, max_e p_e (w_e + V(success)) + (1 - p_e) V(failure))`
/// over usable edges with positive weight. Ties go to the lowest edge index.
pub fn adaptive_opt_capped<T: Scalar>(
    inst: &MatchingInstance,
    edge_cap: usize,
) -> Result<AdaptiveSolution<T>> {
    if inst.n_edges() > edge_cap.min(32) {
        return Err(Error::Budget(format!(
            "{} edges exceeds the cap of {edge_cap}; up to {:.3e} states",
            inst.n_edges(),
            state_estimate(inst)
        )));
    }
    let probs: Vec<T> = inst.edges().iter().map(|e| T::from_f64(e.prob)).collect();
    let weights: Vec<T> = inst.edges().iter().map(|e| T::from_f64(e.weight)).collect();
    let mut table = HashMap::new();
    let start = AdaptiveState::initial(inst);
    let value = solve_state(inst, &probs, &weights, &start, &mut table);
    let first_action = table.get(&start).and_then(|(_, a)| *a);
    Ok(AdaptiveSolution {
        value,
        first_action,
        table,
    })
}

fn solve_state<T: Scalar>(
    inst: &MatchingInstance,
    probs: &[T],
    weights: &[T],
    state: &AdaptiveState,
    table: &mut HashMap<AdaptiveState, (T, Option<usize>)>,
) -> T {
    if let Some((v, _)) = table.get(state) {
        return v.clone();
    }
    let mut best = T::zero();
    let mut action = None;
    for e in 0..inst.n_edges() {
        if !state.is_usable(e) || weights[e].is_zero() {
            continue;
        }
        let win = solve_state(inst, probs, weights, &state.after_success(inst, e), table);
        let lose = solve_state(inst, probs, weights, &state.after_failure(inst, e), table);
        let p = probs[e].clone();
        let value = p.clone() * (weights[e].clone() + win) + (T::one() - p) * lose;
        if value > best {
            best = value;
            action = Some(e);
        }
    }
    table.insert(state.clone(), (best.clone(), action));
    best
}

/// Optimal strategy as a JSON tree of `{probe, value, success, failure}`
/// nodes and `{stop}` leaves. Refuses instances above [`TREE_EDGE_CAP`].
pub fn strategy_tree<T: Scalar>(
    inst: &MatchingInstance,
    sol: &AdaptiveSolution<T>,
) -> Result<Value> {
    if inst.n_edges() > TREE_EDGE_CAP {
        return Err(Error::Budget(format!(
            "strategy trees are dumped for at most {TREE_EDGE_CAP} edges"
        )));
    }
    fn node<T: Scalar>(
        inst: &MatchingInstance,
        sol: &AdaptiveSolution<T>,
        s: &AdaptiveState,
    ) -> Value {
        match sol.action(s) {
            None => json!({ "stop": true }),
            Some(e) => json!({
                "probe": e,
                "value": sol.value_of(s).map(|v| v.to_f64()),
                "success": node(inst, sol, &s.after_success(inst, e)),
                "failure": node(inst, sol, &s.after_failure(inst, e)),
            }),
        }
    }
    Ok(node(inst, sol, &AdaptiveState::initial(inst)))
}

#[derive(Debug, Clone)]
enum BranchKind {
    Pick(Vec<f64>),
    Uniform(usize),
}

#[derive(Debug, Clone)]
struct Branch {
    kind: BranchKind,
    choice: usize,
}

impl Branch {
    fn first(kind: BranchKind) -> Self {
        let mut b = Branch { kind, choice: 0 };
        if !b.admissible(0) {
            b.choice = b.next_after(0).unwrap_or(0);
        }
        b
    }

    fn admissible(&self, c: usize) -> bool {
        match &self.kind {
            BranchKind::Pick(w) => w[c] > 0.0,
            BranchKind::Uniform(n) => c < *n,
        }
    }

    fn width(&self) -> usize {
        match &self.kind {
            BranchKind::Pick(w) => w.len(),
            BranchKind::Uniform(n) => *n,
        }
    }

    fn next_after(&self, c: usize) -> Option<usize> {
        (c + 1..self.width()).find(|&k| self.admissible(k))
    }

    fn weight(&self) -> f64 {
        match &self.kind {
            BranchKind::Pick(w) => w[self.choice],
            BranchKind::Uniform(n) => 1.0 / *n as f64,
        }
    }
}

/// Replays a fixed prefix of choices, then takes the first admissible
/// branch of every new random decision.
struct Replay {
    branches: Vec<Branch>,
    pos: usize,
    weight: f64,
}

impl Replay {
    fn decide(&mut self, kind: BranchKind) -> usize {
        if self.pos == self.branches.len() {
            self.branches.push(Branch::first(kind));
        }
        let b = &self.branches[self.pos];
        self.pos += 1;
        self.weight *= b.weight();
        b.choice
    }

    fn advance(&mut self) -> bool {
        self.branches.truncate(self.pos);
        while let Some(b) = self.branches.last_mut() {
            if let Some(c) = b.next_after(b.choice) {
                b.choice = c;
                return true;
            }
            self.branches.pop();
        }
        false
    }
}

impl Chance for Replay {
    fn pick(&mut self, weights: &[f64]) -> usize {
        self.decide(BranchKind::Pick(weights.to_vec()))
    }

    fn uniform(&mut self, n: usize) -> usize {
        self.decide(BranchKind::Uniform(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValue {
    pub value: f64,
    /// Number of root-to-leaf paths walked.
    pub leaves: u64,
}

/// Exact expectation of `run` over all of its randomness.
///
/// `run` must be deterministic given the answers it receives from the
/// [`Chance`]. Fails with a budget error once more than `budget` leaves
/// would be needed; Monte Carlo is the fallback then.
pub fn exact_policy_value<F>(budget: u64, mut run: F) -> Result<ExactValue>
where
    F: FnMut(&mut dyn Chance) -> Result<f64>,
{
    let mut replay = Replay {
        branches: Vec::new(),
        pos: 0,
        weight: 1.0,
    };
    let (mut total, mut mass, mut leaves) = (0.0, 0.0, 0u64);
    loop {
        replay.pos = 0;
        replay.weight = 1.0;
        let v = run(&mut replay)?;
        total += replay.weight * v;
        mass += replay.weight;
        leaves += 1;
        if leaves > budget {
            return Err(Error::Budget(format!(
                "exact evaluation needs more than {budget} branches; use Monte Carlo instead"
            )));
        }
        if !replay.advance() {
            break;
        }
    }
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "branch probabilities sum to {mass}, not 1"
        )));
    }
    Ok(ExactValue {
        value: total,
        leaves,
    })
}

pub fn adaptive_opt_packing<T: Scalar>(inst: &PackingInstance) -> Result<T> {
    adaptive_opt_packing_capped(inst, DEFAULT_ITEM_CAP)
}

/// Best safe adaptive policy: an item may be chosen only while every
/// coordinate of its support has residual capacity at least one.
pub fn adaptive_opt_packing_capped<T: Scalar>(
    inst: &PackingInstance,
    item_cap: usize,
) -> Result<T> {
    let n = inst.items().len();
    if n > item_cap.min(32) {
        return Err(Error::Budget(format!(
            "{n} items exceeds the cap of {item_cap}; up to {:.3e} states",
            2f64.powi(n as i32)
                * inst
                    .capacity()
                    .iter()
                    .map(|&b| b as f64 + 1.0)
                    .product::<f64>()
        )));
    }
    let values: Vec<T> = inst
        .items()
        .iter()
        .map(|i| T::from_f64(i.mean_value))
        .collect();
    let atoms: Vec<Vec<(T, Vec<usize>)>> = inst
        .items()
        .iter()
        .map(|i| {
            i.size_dist
                .iter()
                .filter(|a| a.prob > 0.0)
                .map(|a| (T::from_f64(a.prob), a.ones.clone()))
                .collect()
        })
        .collect();
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut memo = HashMap::new();
    Ok(packing_state(
        inst,
        &values,
        &atoms,
        all,
        inst.capacity().to_vec(),
        &mut memo,
    ))
}

fn packing_state<T: Scalar>(
    inst: &PackingInstance,
    values: &[T],
    atoms: &[Vec<(T, Vec<usize>)>],
    left: u32,
    residual: Vec<u32>,
    memo: &mut HashMap<(u32, Vec<u32>), T>,
) -> T {
    let key = (left, residual);
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let (left, residual) = key;
    let mut best = T::zero();
    for (i, item) in inst.items().iter().enumerate() {
        if left & (1 << i) == 0 || item.support.iter().any(|&j| residual[j] == 0) {
            continue;
        }
        let mut value = values[i].clone();
        for (pr, ones) in &atoms[i] {
            let mut next = residual.clone();
            for &j in ones {
                next[j] -= 1;
            }
            value = value
                + pr.clone() * packing_state(inst, values, atoms, left & !(1 << i), next, memo);
        }
        if value > best {
            best = value;
        }
    }
    memo.insert((left, residual), best.clone());
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{EdgeSpec, GraphKind, PackingItem, SizeAtom};
    use crate::Rational;
    use num_traits::{One, Zero};

    fn graph(n: usize, edges: &[(usize, usize, f64, f64)], t: u32) -> MatchingInstance {
        MatchingInstance::new(
            GraphKind::General,
            vec![t; n],
            edges
                .iter()
                .map(|&(u, v, p, w)| EdgeSpec::new(u, v, p, w))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_edge() {
        let sol: AdaptiveSolution<f64> = adaptive_opt(&graph(2, &[(0, 1, 0.5, 2.0)], 1)).unwrap();
        assert_eq!(sol.value, 1.0);
        assert_eq!(sol.first_action, Some(0));
    }

    #[test]
    fn star_gives_one_over_n() {
        for n in [3usize, 5, 10] {
            let p = 1.0 / n as f64;
            let edges: Vec<_> = (1..n).map(|v| (0, v, p, 1.0)).collect();
            let sol: AdaptiveSolution<f64> = adaptive_opt(&graph(n, &edges, 1)).unwrap();
            assert!((sol.value - p).abs() < 1e-12);
        }
    }

    #[test]
    fn heavier_edge_first_on_a_path() {
        let sol: AdaptiveSolution<f64> =
            adaptive_opt(&graph(3, &[(0, 1, 1.0, 1.0), (1, 2, 1.0, 3.0)], 1)).unwrap();
        assert_eq!(sol.value, 3.0);
        assert_eq!(sol.first_action, Some(1));
    }

    #[test]
    fn exact_rational_optimum() {
        let inst = graph(3, &[(0, 1, 0.5, 1.0), (1, 2, 0.5, 1.0)], 2);
        let sol: AdaptiveSolution<Rational> = adaptive_opt(&inst).unwrap();
        // probe one edge, then the other on failure: 1/2 + 1/2 * 1/2
        assert_eq!(sol.value, Rational::new(3.into(), 4.into()));
    }

    #[test]
    fn cap_is_enforced() {
        let edges: Vec<_> = (1..14).map(|v| (0, v, 0.5, 1.0)).collect();
        let err = adaptive_opt::<f64>(&graph(14, &edges, 1)).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }

    #[test]
    fn tree_dump() {
        let inst = graph(2, &[(0, 1, 0.5, 2.0)], 1);
        let sol: AdaptiveSolution<f64> = adaptive_opt(&inst).unwrap();
        let tree = strategy_tree(&inst, &sol).unwrap();
        assert_eq!(tree["probe"], 0);
        assert_eq!(tree["success"]["stop"], true);
    }

    #[test]
    fn enumerator_walks_every_branch() {
        let ev = exact_policy_value(100, |c| {
            let a = c.uniform(3) as f64;
            let b = if c.bernoulli(0.25) { 1.0 } else { 0.0 };
            Ok(a + b)
        })
        .unwrap();
        assert_eq!(ev.leaves, 6);
        assert!((ev.value - 1.25).abs() < 1e-15);
        assert!(matches!(
            exact_policy_value(5, |c| Ok(c.uniform(3) as f64 + c.uniform(3) as f64)),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn enumerator_skips_zero_weight_branches() {
        let ev = exact_policy_value(10, |c| Ok(c.pick(&[0.0, 0.5, 0.0, 0.5]) as f64)).unwrap();
        assert_eq!(ev.leaves, 2);
        assert!((ev.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn packing_dp_examples() {
        let item = |w: f64| PackingItem {
            mean_value: w,
            support: vec![0],
            size_dist: vec![SizeAtom {
                prob: 1.0,
                ones: vec![0],
            }],
        };
        let one = PackingInstance::new(vec![1], vec![item(2.0)], 1).unwrap();
        assert_eq!(adaptive_opt_packing::<f64>(&one).unwrap(), 2.0);
        let two = PackingInstance::new(vec![1], vec![item(2.0), item(3.0)], 1).unwrap();
        assert_eq!(adaptive_opt_packing::<f64>(&two).unwrap(), 3.0);
        let exact: Rational = adaptive_opt_packing(&two).unwrap();
        assert!(exact > Rational::zero() && exact != Rational::one());
    }
}
