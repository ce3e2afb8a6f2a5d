//! Offline probing policies, all driven through one probing state machine.
//!
//! Every random decision (permutations, coins, rounding, probe outcomes) is
//! drawn from a [`Chance`], so the same code serves Monte Carlo runs and the
//! exact branch enumerator.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::chance::{shuffle, Chance};
use crate::error::{Error, Result};
use crate::instance::{EdgeSpec, GraphKind, MatchingInstance, MultiRoundConfig, PackingInstance};
use crate::relax::{solve_matching_lp, MatchingDecomposition};
use crate::rounding::{dependent_round, konig_color, random_bipartition};

/// Probing state shared by every offline matching policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeState {
    pub matched: Vec<bool>,
    pub remaining: Vec<u32>,
    pub probed: Vec<bool>,
    pub accrued: f64,
}

impl ProbeState {
    pub fn new(inst: &MatchingInstance) -> Self {
        ProbeState {
            matched: vec![false; inst.n_vertices()],
            remaining: inst.patience_vec(),
            probed: vec![false; inst.n_edges()],
            accrued: 0.0,
        }
    }

    /// A vertex is active while unmatched and not timed out.
    pub fn is_active(&self, v: usize) -> bool {
        !self.matched[v] && self.remaining[v] > 0
    }

    pub fn is_safe(&self, inst: &MatchingInstance, e: usize) -> bool {
        let spec = inst.edge(e);
        !self.probed[e] && self.is_active(spec.u) && self.is_active(spec.v)
    }

    /// Probes a safe edge and applies the outcome.
    pub fn probe(
        &mut self,
        inst: &MatchingInstance,
        e: usize,
        chance: &mut dyn Chance,
    ) -> Result<Action> {
        if !self.is_safe(inst, e) {
            return Err(Error::Numerical(format!("edge {e} probed while unsafe")));
        }
        let spec = inst.edge(e);
        let success = chance.bernoulli(spec.prob);
        self.apply(spec, e, success);
        Ok(if success {
            Action::ProbedSuccess
        } else {
            Action::ProbedFailure
        })
    }

    fn apply(&mut self, spec: &EdgeSpec, e: usize, success: bool) {
        self.probed[e] = true;
        if success {
            self.matched[spec.u] = true;
            self.matched[spec.v] = true;
            self.accrued += spec.weight;
        } else {
            self.remaining[spec.u] -= 1;
            self.remaining[spec.v] -= 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    ProbedSuccess,
    ProbedFailure,
    SkippedUnsafe,
    SkippedCoin,
}

impl Action {
    pub fn is_probe(self) -> bool {
        matches!(self, Action::ProbedSuccess | Action::ProbedFailure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub edge: usize,
    pub action: Action,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub steps: Vec<TraceStep>,
    pub value: f64,
}

impl ProbeTrace {
    fn push(&mut self, edge: usize, action: Action) {
        self.steps.push(TraceStep { edge, action });
    }

    /// Appends `other`, mapping its edge indices through `edge_map`.
    fn extend_mapped(&mut self, other: ProbeTrace, edge_map: &[usize]) {
        for s in other.steps {
            self.push(edge_map[s.edge], s.action);
        }
    }

    pub fn probes(&self) -> impl Iterator<Item = &TraceStep> {
        self.steps.iter().filter(|s| s.action.is_probe())
    }

    /// One JSON object per step, then a closing `{"value": ...}` line.
    pub fn write_json_lines(&self, mut out: impl Write) -> Result<()> {
        for s in &self.steps {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut out, &serde_json::json!({ "value": self.value }))?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Replays a trace against the transition rules: every probe was safe, every
/// unsafe skip was unsafe, no edge probed twice, and the value adds up.
pub fn validate_trace(inst: &MatchingInstance, trace: &ProbeTrace) -> Result<ProbeState> {
    let state = replay_trace(inst, trace)?;
    if (state.accrued - trace.value).abs() > 1e-9 * (1.0 + trace.value.abs()) {
        return Err(Error::invalid(format!(
            "trace value {} differs from replayed value {}",
            trace.value, state.accrued
        )));
    }
    Ok(state)
}

fn replay_trace(inst: &MatchingInstance, trace: &ProbeTrace) -> Result<ProbeState> {
    let mut state = ProbeState::new(inst);
    for (i, s) in trace.steps.iter().enumerate() {
        if s.edge >= inst.n_edges() {
            return Err(Error::invalid(format!("step {i}: unknown edge {}", s.edge)));
        }
        let safe = state.is_safe(inst, s.edge);
        match s.action {
            Action::ProbedSuccess | Action::ProbedFailure => {
                if !safe {
                    return Err(Error::invalid(format!(
                        "step {i}: edge {} probed while unsafe",
                        s.edge
                    )));
                }
                state.apply(inst.edge(s.edge), s.edge, s.action == Action::ProbedSuccess);
            }
            Action::SkippedUnsafe if safe => {
                return Err(Error::invalid(format!(
                    "step {i}: edge {} skipped as unsafe but was safe",
                    s.edge
                )));
            }
            _ => {}
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub alpha: f64,
    pub cutoff: f64,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            alpha: bounds::alpha_permute(),
            cutoff: 0.541,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be >= 1 (got {})",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.cutoff) {
            return Err(Error::invalid(format!(
                "cutoff must lie in [0, 1] (got {})",
                self.cutoff
            )));
        }
        Ok(())
    }
}

/// Visits edges in a uniformly random order and probes each safe edge with
/// probability `y_e / alpha`. Coin skips do not consume patience.
pub fn permute_probe(
    inst: &MatchingInstance,
    y: &[f64],
    alpha: f64,
    chance: &mut dyn Chance,
) -> Result<ProbeTrace> {
    let mut order: Vec<usize> = (0..inst.n_edges()).collect();
    shuffle(chance, &mut order);
    let mut state = ProbeState::new(inst);
    let mut trace = ProbeTrace::default();
    for e in order {
        let action = if !state.is_safe(inst, e) {
            Action::SkippedUnsafe
        } else if !chance.bernoulli(y[e] / alpha) {
            Action::SkippedCoin
        } else {
            state.probe(inst, e, chance)?
        };
        trace.push(e, action);
    }
    trace.value = state.accrued;
    Ok(trace)
}

fn require_bipartite(inst: &MatchingInstance) -> Result<()> {
    if inst.is_bipartite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "round-color-probe needs a bipartite instance",
        ))
    }
}

fn edge_pairs(inst: &MatchingInstance) -> Vec<(usize, usize)> {
    inst.edges().iter().map(|e| (e.u, e.v)).collect()
}

/// Dependent rounding of `y`, a Konig coloring of the rounded edges, then
/// the color classes in random order; inside a class every edge with both
/// ends unmatched is probed, in order of the smaller endpoint.
pub fn round_color_probe(
    inst: &MatchingInstance,
    y: &[f64],
    chance: &mut dyn Chance,
) -> Result<ProbeTrace> {
    require_bipartite(inst)?;
    let pairs = edge_pairs(inst);
    let rounded = dependent_round(inst.n_vertices(), &pairs, y, chance)?;
    let chosen_pairs: Vec<(usize, usize)> = rounded.chosen.iter().map(|&e| pairs[e]).collect();
    let coloring = konig_color(inst.n_vertices(), &chosen_pairs)?;
    let mut classes = coloring.classes;
    shuffle(chance, &mut classes);
    let mut state = ProbeState::new(inst);
    let mut trace = ProbeTrace::default();
    for class in classes {
        let mut edges: Vec<usize> = class.into_iter().map(|k| rounded.chosen[k]).collect();
        edges.sort_by_key(|&e| {
            let s = inst.edge(e);
            (s.u.min(s.v), e)
        });
        for e in edges {
            let spec = inst.edge(e);
            if state.matched[spec.u] || state.matched[spec.v] {
                trace.push(e, Action::SkippedUnsafe);
                continue;
            }
            // the rounding keeps at most t_u chosen edges at u
            let action = state.probe(inst, e, chance).map_err(|_| {
                Error::Numerical(format!("rounded edge set exceeds patience at edge {e}"))
            })?;
            trace.push(e, action);
        }
    }
    trace.value = state.accrued;
    Ok(trace)
}

/// Random bipartition, then [`round_color_probe`] on the crossing edges
/// with the original (not re-solved) `y`.
pub fn general_redux_probe(
    inst: &MatchingInstance,
    y: &[f64],
    chance: &mut dyn Chance,
) -> Result<ProbeTrace> {
    let split = random_bipartition(inst, y, chance)?;
    let inner = round_color_probe(&split.sub, &split.y, chance)?;
    let mut trace = ProbeTrace {
        value: inner.value,
        ..ProbeTrace::default()
    };
    trace.extend_mapped(inner, &split.edge_map);
    Ok(trace)
}

/// Edges by non-increasing probability, ties by ascending index.
pub fn greedy_order(inst: &MatchingInstance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.n_edges()).collect();
    order.sort_by(|&a, &b| {
        inst.edge(b)
            .prob
            .partial_cmp(&inst.edge(a).prob)
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    order
}

fn greedy_pass(
    inst: &MatchingInstance,
    order: &[usize],
    state: &mut ProbeState,
    trace: &mut ProbeTrace,
    chance: &mut dyn Chance,
) -> Result<()> {
    for &e in order {
        let action = if state.is_safe(inst, e) {
            state.probe(inst, e, chance)?
        } else {
            Action::SkippedUnsafe
        };
        trace.push(e, action);
    }
    Ok(())
}

/// Probes every safe edge in [`greedy_order`].
pub fn greedy_probe(inst: &MatchingInstance, chance: &mut dyn Chance) -> Result<ProbeTrace> {
    let mut state = ProbeState::new(inst);
    let mut trace = ProbeTrace::default();
    greedy_pass(inst, &greedy_order(inst), &mut state, &mut trace, chance)?;
    trace.value = state.accrued;
    Ok(trace)
}

/// Residual instance on the active vertices and the unprobed edges that
/// `keep` accepts, with the original index of each kept edge.
pub fn residual_instance(
    inst: &MatchingInstance,
    state: &ProbeState,
    keep: impl Fn(usize) -> bool,
) -> Result<(MatchingInstance, Vec<usize>)> {
    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    for (e, spec) in inst.edges().iter().enumerate() {
        if state.is_safe(inst, e) && keep(e) {
            edges.push(*spec);
            edge_map.push(e);
        }
    }
    let patience = state.remaining.iter().map(|&t| t.max(1)).collect();
    let kind = match inst.kind() {
        GraphKind::Bipartite(s) => GraphKind::Bipartite(s.clone()),
        GraphKind::General => GraphKind::General,
    };
    Ok((MatchingInstance::new(kind, patience, edges)?, edge_map))
}

/// Greedy on the edges with `p >= cutoff`, then a fresh LP on what is left
/// (active vertices, remaining patience, unprobed edges below the cutoff)
/// and [`general_redux_probe`] on it.
pub fn hybrid_probe(
    inst: &MatchingInstance,
    cutoff: f64,
    chance: &mut dyn Chance,
) -> Result<ProbeTrace> {
    let high: Vec<usize> = greedy_order(inst)
        .into_iter()
        .filter(|&e| inst.edge(e).prob >= cutoff)
        .collect();
    let mut state = ProbeState::new(inst);
    let mut trace = ProbeTrace::default();
    greedy_pass(inst, &high, &mut state, &mut trace, chance)?;
    let (rest, edge_map) = residual_instance(inst, &state, |e| inst.edge(e).prob < cutoff)?;
    if rest.n_edges() > 0 {
        let lp = solve_matching_lp(&rest)?;
        let tail = general_redux_probe(&rest, &lp.y, chance)?;
        trace.extend_mapped(tail, &edge_map);
    }
    trace.value = replay_trace(inst, &trace)?.accrued;
    Ok(trace)
}

/// Round-by-round matching probing: in round `h` draw nothing with
/// probability `1 - sum(lambda) / alpha`, else matching `M` with probability
/// `lambda_M / alpha`, and probe its safe edges. `at_round` sees the state at
/// the start of every round.
pub fn multiround_probe_with(
    inst: &MatchingInstance,
    cfg: &MultiRoundConfig,
    decomposition: &MatchingDecomposition,
    alpha: f64,
    chance: &mut dyn Chance,
    at_round: &mut dyn FnMut(usize, &ProbeState),
) -> Result<ProbeTrace> {
    if decomposition.rounds.len() != cfg.rounds as usize {
        return Err(Error::invalid(format!(
            "decomposition has {} rounds, config {}",
            decomposition.rounds.len(),
            cfg.rounds
        )));
    }
    let mut state = ProbeState::new(inst);
    let mut trace = ProbeTrace::default();
    for (h, parts) in decomposition.rounds.iter().enumerate() {
        at_round(h, &state);
        let total: f64 = parts.iter().map(|(l, _)| l).sum();
        if total > alpha * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "round {h}: weights sum to {total} > alpha"
            )));
        }
        let mut weights = Vec::with_capacity(parts.len() + 1);
        weights.push((1.0 - total / alpha).max(0.0));
        weights.extend(parts.iter().map(|(l, _)| l / alpha));
        let pick = chance.pick(&weights);
        if pick == 0 {
            continue;
        }
        for &e in &parts[pick - 1].1 {
            let action = if state.is_safe(inst, e) {
                state.probe(inst, e, chance)?
            } else {
                Action::SkippedUnsafe
            };
            trace.push(e, action);
        }
    }
    trace.value = state.accrued;
    Ok(trace)
}

pub fn multiround_probe(
    inst: &MatchingInstance,
    cfg: &MultiRoundConfig,
    decomposition: &MatchingDecomposition,
    alpha: f64,
    chance: &mut dyn Chance,
) -> Result<ProbeTrace> {
    multiround_probe_with(inst, cfg, decomposition, alpha, chance, &mut |_, _| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackingAction {
    /// Index of the size atom drawn.
    Probed(usize),
    SkippedUnsafe,
    SkippedCoin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingStep {
    pub item: usize,
    pub action: PackingAction,
    pub accrued: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PackingTrace {
    pub steps: Vec<PackingStep>,
    pub value: f64,
}

/// Random item order; each safe item (residual capacity at least one on its
/// whole support) is probed with probability `y_i / alpha`. A probe draws the
/// size, charges it against capacity and earns the item's mean value.
pub fn packing_probe(
    inst: &PackingInstance,
    y: &[f64],
    alpha: f64,
    chance: &mut dyn Chance,
) -> Result<PackingTrace> {
    if y.len() != inst.items().len() {
        return Err(Error::invalid("y vector length differs from item count"));
    }
    let mut order: Vec<usize> = (0..inst.items().len()).collect();
    shuffle(chance, &mut order);
    let mut residual = inst.capacity().to_vec();
    let mut trace = PackingTrace::default();
    for i in order {
        let item = &inst.items()[i];
        let action = if item.support.iter().any(|&j| residual[j] == 0) {
            PackingAction::SkippedUnsafe
        } else if !chance.bernoulli(y[i] / alpha) {
            PackingAction::SkippedCoin
        } else {
            let probs: Vec<f64> = item.size_dist.iter().map(|a| a.prob).collect();
            let k = chance.pick(&probs);
            for &j in &item.size_dist[k].ones {
                residual[j] -= 1;
            }
            trace.value += item.mean_value;
            PackingAction::Probed(k)
        };
        trace.steps.push(PackingStep {
            item: i,
            action,
            accrued: trace.value,
        });
    }
    Ok(trace)
}

/// Offline matching policies by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Permute,
    RoundColor,
    GeneralRedux,
    Greedy,
    Hybrid,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Permute,
        PolicyKind::RoundColor,
        PolicyKind::GeneralRedux,
        PolicyKind::Greedy,
        PolicyKind::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Permute => "permute",
            PolicyKind::RoundColor => "round_color",
            PolicyKind::GeneralRedux => "general_redux",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Hybrid => "hybrid",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown policy {name:?}")))
    }

    /// Whether the policy can run on this instance.
    pub fn applies_to(self, inst: &MatchingInstance) -> bool {
        self != PolicyKind::RoundColor || inst.is_bipartite()
    }
}

/// A matching policy with its LP solution already computed.
pub trait ProbePolicy: Send + Sync {
    fn name(&self) -> &str;

    fn run(&self, inst: &MatchingInstance, chance: &mut dyn Chance) -> Result<ProbeTrace>;
}

struct Prepared {
    kind: PolicyKind,
    cfg: PolicyConfig,
    y: Vec<f64>,
}

impl ProbePolicy for Prepared {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn run(&self, inst: &MatchingInstance, chance: &mut dyn Chance) -> Result<ProbeTrace> {
        match self.kind {
            PolicyKind::Permute => permute_probe(inst, &self.y, self.cfg.alpha, chance),
            PolicyKind::RoundColor => round_color_probe(inst, &self.y, chance),
            PolicyKind::GeneralRedux => general_redux_probe(inst, &self.y, chance),
            PolicyKind::Greedy => greedy_probe(inst, chance),
            PolicyKind::Hybrid => hybrid_probe(inst, self.cfg.cutoff, chance),
        }
    }
}

/// Solves the LP once (for the LP-based policies) and returns a runnable policy.
pub fn prepare_policy(
    kind: PolicyKind,
    cfg: PolicyConfig,
    inst: &MatchingInstance,
) -> Result<Box<dyn ProbePolicy>> {
    cfg.validate()?;
    if !kind.applies_to(inst) {
        return Err(Error::invalid(format!(
            "{} needs a bipartite instance",
            kind.name()
        )));
    }
    let y = match kind {
        PolicyKind::Permute | PolicyKind::RoundColor | PolicyKind::GeneralRedux => {
            solve_matching_lp(inst)?.y
        }
        PolicyKind::Greedy | PolicyKind::Hybrid => Vec::new(),
    };
    Ok(Box::new(Prepared { kind, cfg, y }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::Sampler;
    use crate::exact::exact_policy_value;
    use crate::instance::Side;

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

    fn bipartite(sides: Vec<Side>, edges: &[(usize, usize, f64, f64)], t: u32) -> MatchingInstance {
        MatchingInstance::new(
            GraphKind::Bipartite(sides.clone()),
            vec![t; sides.len()],
            edges
                .iter()
                .map(|&(u, v, p, w)| EdgeSpec::new(u, v, p, w))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn permute_single_edge_exact() {
        let inst = graph(2, &[(0, 1, 0.5, 2.0)], 1);
        let alpha = bounds::alpha_permute();
        let ev =
            exact_policy_value(100, |c| Ok(permute_probe(&inst, &[1.0], alpha, c)?.value)).unwrap();
        assert!((ev.value - 1.0 / alpha).abs() < 1e-12);
        assert!((ev.value - 0.3090).abs() < 1e-4);
    }

    #[test]
    fn permute_sure_edge() {
        let inst = graph(2, &[(0, 1, 1.0, 2.0)], 1);
        let mut s = Sampler::seeded(1);
        for _ in 0..10 {
            assert_eq!(
                permute_probe(&inst, &[1.0], 1.0, &mut s).unwrap().value,
                2.0
            );
        }
    }

    #[test]
    fn greedy_examples() {
        let disjoint = graph(4, &[(0, 1, 0.9, 1.0), (2, 3, 0.1, 1.0)], 1);
        let ev = exact_policy_value(100, |c| Ok(greedy_probe(&disjoint, c)?.value)).unwrap();
        assert!((ev.value - 1.0).abs() < 1e-12);

        let path = graph(3, &[(0, 1, 0.9, 1.0), (1, 2, 0.8, 1.0)], 1);
        assert_eq!(greedy_order(&path), vec![0, 1]);
        let ev = exact_policy_value(100, |c| Ok(greedy_probe(&path, c)?.value)).unwrap();
        assert!((ev.value - 0.9).abs() < 1e-12);
    }

    #[test]
    fn greedy_ties_by_index() {
        let inst = graph(
            4,
            &[(0, 1, 0.5, 1.0), (2, 3, 0.7, 1.0), (1, 2, 0.5, 1.0)],
            1,
        );
        assert_eq!(greedy_order(&inst), vec![1, 0, 2]);
    }

    #[test]
    fn round_color_integral_edge() {
        let inst = bipartite(vec![Side::A, Side::B], &[(0, 1, 1.0, 3.0)], 1);
        let mut s = Sampler::seeded(2);
        let t = round_color_probe(&inst, &[1.0], &mut s).unwrap();
        assert_eq!(t.value, 3.0);
        assert_eq!(
            t.steps,
            vec![TraceStep {
                edge: 0,
                action: Action::ProbedSuccess
            }]
        );
        assert!(round_color_probe(&graph(2, &[(0, 1, 1.0, 1.0)], 1), &[1.0], &mut s).is_err());
    }

    #[test]
    fn hybrid_degenerate_phases() {
        let high = graph(3, &[(0, 1, 0.9, 1.0), (1, 2, 0.6, 1.0)], 2);
        for seed in 0..20 {
            let a = hybrid_probe(&high, 0.541, &mut Sampler::seeded(seed)).unwrap();
            let b = greedy_probe(&high, &mut Sampler::seeded(seed)).unwrap();
            assert_eq!(a, b);
        }
        let low = graph(3, &[(0, 1, 0.3, 1.0), (1, 2, 0.2, 1.0)], 2);
        let y = solve_matching_lp(&low).unwrap().y;
        for seed in 0..20 {
            let a = hybrid_probe(&low, 0.541, &mut Sampler::seeded(seed)).unwrap();
            let b = general_redux_probe(&low, &y, &mut Sampler::seeded(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn multiround_examples() {
        let inst = graph(2, &[(0, 1, 1.0, 1.0)], 1);
        let cfg = MultiRoundConfig::new(1, 1).unwrap();
        let dec = MatchingDecomposition {
            rounds: vec![vec![(1.0, vec![0])]],
        };
        let ev = exact_policy_value(100, |c| {
            Ok(multiround_probe(&inst, &cfg, &dec, 1.0, c)?.value)
        })
        .unwrap();
        assert_eq!(ev.value, 1.0);
        let ev = exact_policy_value(100, |c| {
            Ok(multiround_probe(&inst, &cfg, &dec, 10.0, c)?.value)
        })
        .unwrap();
        assert!((ev.value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn packing_single_item() {
        use crate::instance::{PackingItem, SizeAtom};
        let inst = PackingInstance::new(
            vec![1],
            vec![PackingItem {
                mean_value: 2.0,
                support: vec![0],
                size_dist: vec![SizeAtom {
                    prob: 1.0,
                    ones: vec![0],
                }],
            }],
            1,
        )
        .unwrap();
        let t = packing_probe(&inst, &[1.0], 1.0, &mut Sampler::seeded(3)).unwrap();
        assert_eq!(t.value, 2.0);
    }

    #[test]
    fn traces_validate_and_serialize() {
        let inst = graph(
            4,
            &[
                (0, 1, 0.5, 1.0),
                (1, 2, 0.5, 2.0),
                (2, 3, 0.5, 1.0),
                (0, 3, 0.5, 1.0),
            ],
            1,
        );
        let y = solve_matching_lp(&inst).unwrap().y;
        let mut s = Sampler::seeded(4);
        for _ in 0..200 {
            let t = permute_probe(&inst, &y, 1.0, &mut s).unwrap();
            validate_trace(&inst, &t).unwrap();
            let t = general_redux_probe(&inst, &y, &mut s).unwrap();
            validate_trace(&inst, &t).unwrap();
        }
        let t = greedy_probe(&inst, &mut s).unwrap();
        let mut buf = Vec::new();
        t.write_json_lines(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), t.steps.len() + 1);
        assert!(text.contains("\"action\":\"probed_") || text.contains("skipped_unsafe"));
    }

    #[test]
    fn tampered_trace_is_rejected() {
        let inst = graph(2, &[(0, 1, 1.0, 1.0)], 1);
        let bad = ProbeTrace {
            steps: vec![
                TraceStep {
                    edge: 0,
                    action: Action::ProbedSuccess,
                },
                TraceStep {
                    edge: 0,
                    action: Action::ProbedSuccess,
                },
            ],
            value: 2.0,
        };
        assert!(validate_trace(&inst, &bad).is_err());
    }
}
