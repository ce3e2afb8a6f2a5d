//! LP relaxations for every problem variant.
//!
//! The `x = p * y` equalities are substituted away everywhere: each LP has one
//! column per probe variable `y` and solutions report `x` by back-substitution.

use crate::error::{Error, Result};
use crate::instance::{MatchingInstance, MultiRoundConfig, PackingInstance};
use crate::lp::{solve, LinearProgram, LpResult, Relation};
use crate::online::OnlineGraph;
use crate::scalar::Scalar;

/// Cap on the number of explicitly enumerated matchings.
pub const DEFAULT_MATCHING_CAP: usize = 100_000;

/// Probe and match probabilities for every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingLpSolution {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub objective: f64,
}

impl MatchingLpSolution {
    /// Wraps a `y` vector, recomputing `x` and the objective.
    pub fn from_y(inst: &MatchingInstance, y: Vec<f64>) -> Self {
        let x: Vec<f64> = inst
            .edges()
            .iter()
            .zip(&y)
            .map(|(e, y)| e.prob * y)
            .collect();
        let objective = inst.edges().iter().zip(&x).map(|(e, x)| e.weight * x).sum();
        MatchingLpSolution { y, x, objective }
    }
}

/// Rows `0..n` are the match constraints `sum p_e y_e <= 1`, rows `n..2n` the
/// patience constraints `sum y_e <= t_v`; one column `y_e in [0, 1]` per edge.
pub fn build_matching_lp<T: Scalar>(inst: &MatchingInstance) -> LinearProgram<T> {
    let m = inst.n_edges();
    let mut lp = LinearProgram::new(m);
    for (j, e) in inst.edges().iter().enumerate() {
        lp.set_objective(j, T::from_f64(e.weight) * T::from_f64(e.prob));
        lp.set_bounds(j, T::zero(), Some(T::one()));
    }
    for v in 0..inst.n_vertices() {
        let row: Vec<(usize, T)> = inst
            .incident(v)
            .iter()
            .map(|&j| (j, T::from_f64(inst.edge(j).prob)))
            .collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::one());
    }
    for v in 0..inst.n_vertices() {
        let row: Vec<(usize, T)> = inst.incident(v).iter().map(|&j| (j, T::one())).collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::from_f64(inst.patience(v) as f64));
    }
    lp
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

pub fn solve_matching_lp(inst: &MatchingInstance) -> Result<MatchingLpSolution> {
    let lp: LinearProgram<f64> = build_matching_lp(inst);
    let res = solve(&lp)?.into_optimal()?;
    let y = res.primal.into_iter().map(clamp_unit).collect();
    Ok(MatchingLpSolution::from_y(inst, y))
}

/// Column of buyer `c`, item `a`.
pub fn online_column(graph: &OnlineGraph, a: usize, c: usize) -> usize {
    c * graph.n_items + a
}

/// LP on a bipartite items-by-buyers graph. Rows: one per item
/// (`sum_c p y <= 1`), then one per buyer (`sum_a p y <= 1`), then one per
/// buyer (`sum_a y <= t_c`).
pub fn build_online_lp<T: Scalar>(graph: &OnlineGraph) -> LinearProgram<T> {
    let na = graph.n_items;
    let nc = graph.buyers.len();
    let mut lp = LinearProgram::new(na * nc);
    for (c, b) in graph.buyers.iter().enumerate() {
        for a in 0..na {
            let j = online_column(graph, a, c);
            lp.set_objective(j, T::from_f64(b.weights[a]) * T::from_f64(b.probs[a]));
            lp.set_bounds(j, T::zero(), Some(T::one()));
        }
    }
    for a in 0..na {
        let row: Vec<(usize, T)> = (0..nc)
            .map(|c| {
                (
                    online_column(graph, a, c),
                    T::from_f64(graph.buyers[c].probs[a]),
                )
            })
            .collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::one());
    }
    for (c, b) in graph.buyers.iter().enumerate() {
        let row: Vec<(usize, T)> = (0..na)
            .map(|a| (online_column(graph, a, c), T::from_f64(b.probs[a])))
            .collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::one());
    }
    for (c, b) in graph.buyers.iter().enumerate() {
        let row: Vec<(usize, T)> = (0..na)
            .map(|a| (online_column(graph, a, c), T::one()))
            .collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::from_f64(b.patience as f64));
    }
    lp
}

/// Optimal `y[c][a]` on an online graph together with the raw LP result.
#[derive(Debug, Clone)]
pub struct OnlineLpSolution {
    pub y: Vec<Vec<f64>>,
    pub objective: f64,
    pub result: LpResult<f64>,
}

pub fn solve_online_lp(graph: &OnlineGraph) -> Result<OnlineLpSolution> {
    let lp: LinearProgram<f64> = build_online_lp(graph);
    let result = solve(&lp)?.into_optimal()?;
    let y = (0..graph.buyers.len())
        .map(|c| {
            (0..graph.n_items)
                .map(|a| clamp_unit(result.primal[online_column(graph, a, c)]))
                .collect()
        })
        .collect();
    Ok(OnlineLpSolution {
        y,
        objective: result.objective_value,
        result,
    })
}

/// `max sum w_i y_i` st `sum_i mu_i(j) y_i <= b_j`, `y in [0,1]`.
pub fn build_packing_lp<T: Scalar>(inst: &PackingInstance) -> LinearProgram<T> {
    let n = inst.items().len();
    let mut lp = LinearProgram::new(n);
    for (i, item) in inst.items().iter().enumerate() {
        lp.set_objective(i, T::from_f64(item.mean_value));
        lp.set_bounds(i, T::zero(), Some(T::one()));
    }
    for j in 0..inst.dimension() {
        let row: Vec<(usize, T)> = inst
            .items()
            .iter()
            .enumerate()
            .filter(|(_, it)| it.support.contains(&j))
            .map(|(i, it)| (i, T::from_f64(it.mu(j))))
            .collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::from_f64(inst.capacity()[j] as f64));
    }
    lp
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingLpSolution {
    pub y: Vec<f64>,
    pub objective: f64,
}

pub fn solve_packing_lp(inst: &PackingInstance) -> Result<PackingLpSolution> {
    let lp: LinearProgram<f64> = build_packing_lp(inst);
    let res = solve(&lp)?.into_optimal()?;
    Ok(PackingLpSolution {
        y: res.primal.into_iter().map(clamp_unit).collect(),
        objective: res.objective_value,
    })
}

/// All nonempty matchings with at most `max_size` edges, as ascending edge
/// index lists in lexicographic order. Fails once more than `cap` are found.
pub fn enumerate_matchings(
    inst: &MatchingInstance,
    max_size: usize,
    cap: usize,
) -> Result<Vec<Vec<usize>>> {
    fn grow(
        inst: &MatchingInstance,
        start: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        max_size: usize,
        cap: usize,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        if cur.len() == max_size {
            return Ok(());
        }
        for e in start..inst.n_edges() {
            let EdgeEnds { u, v } = ends(inst, e);
            if used[u] || used[v] {
                continue;
            }
            cur.push(e);
            if out.len() >= cap {
                return Err(Error::Budget(format!(
                    "more than {cap} matchings of size <= {max_size}; refusing to enumerate"
                )));
            }
            out.push(cur.clone());
            used[u] = true;
            used[v] = true;
            grow(inst, e + 1, used, cur, max_size, cap, out)?;
            used[u] = false;
            used[v] = false;
            cur.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    let mut used = vec![false; inst.n_vertices()];
    grow(inst, 0, &mut used, &mut Vec::new(), max_size, cap, &mut out)?;
    Ok(out)
}

struct EdgeEnds {
    u: usize,
    v: usize,
}

fn ends(inst: &MatchingInstance, e: usize) -> EdgeEnds {
    let spec = inst.edge(e);
    EdgeEnds {
        u: spec.u,
        v: spec.v,
    }
}

/// Multi-round LP over explicit matching columns `lambda[h][M]`.
#[derive(Debug, Clone)]
pub struct MultiRoundLp<T> {
    pub lp: LinearProgram<T>,
    pub matchings: Vec<Vec<usize>>,
    pub rounds: usize,
}

impl<T> MultiRoundLp<T> {
    pub fn column(&self, round: usize, matching: usize) -> usize {
        round * self.matchings.len() + matching
    }
}

pub fn build_multiround_lp<T: Scalar>(
    inst: &MatchingInstance,
    cfg: &MultiRoundConfig,
) -> Result<MultiRoundLp<T>> {
    build_multiround_lp_capped(inst, cfg, DEFAULT_MATCHING_CAP)
}

/// Rows in order: one `sum_M lambda <= 1` per round, one `sum_h y^h_e <= 1`
/// per edge, one patience row and one match row per vertex.
pub fn build_multiround_lp_capped<T: Scalar>(
    inst: &MatchingInstance,
    cfg: &MultiRoundConfig,
    cap: usize,
) -> Result<MultiRoundLp<T>> {
    let matchings = enumerate_matchings(inst, cfg.round_capacity as usize, cap)?;
    let k = cfg.rounds as usize;
    let nm = matchings.len();
    if nm.saturating_mul(k) > cap {
        return Err(Error::Budget(format!(
            "{nm} matchings x {k} rounds exceeds the column cap {cap}"
        )));
    }
    let mut lp = LinearProgram::new(nm * k);
    let mut patience_rows = Vec::with_capacity(inst.n_vertices());
    let mut match_rows = Vec::with_capacity(inst.n_vertices());
    // edge -> matchings containing it
    let mut containing = vec![Vec::new(); inst.n_edges()];
    for (mi, m) in matchings.iter().enumerate() {
        for &e in m {
            containing[e].push(mi);
        }
    }
    for h in 0..k {
        for (mi, m) in matchings.iter().enumerate() {
            let j = h * nm + mi;
            let gain = m.iter().fold(T::zero(), |acc, &e| {
                let spec = inst.edge(e);
                acc + T::from_f64(spec.weight) * T::from_f64(spec.prob)
            });
            lp.set_objective(j, gain);
            lp.set_bounds(j, T::zero(), Some(T::one()));
        }
    }
    for h in 0..k {
        let row: Vec<(usize, T)> = (0..nm).map(|mi| (h * nm + mi, T::one())).collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::one());
    }
    for cont in &containing {
        let row: Vec<(usize, T)> = (0..k)
            .flat_map(|h| cont.iter().map(move |&mi| (h * nm + mi, T::one())))
            .collect();
        lp.add_sparse_constraint(&row, Relation::Le, T::one());
    }
    for v in 0..inst.n_vertices() {
        let mut patience_row = Vec::new();
        let mut match_row = Vec::new();
        for h in 0..k {
            for &e in inst.incident(v) {
                for &mi in &containing[e] {
                    patience_row.push((h * nm + mi, T::one()));
                    match_row.push((h * nm + mi, T::from_f64(inst.edge(e).prob)));
                }
            }
        }
        patience_rows.push(patience_row);
        match_rows.push(match_row);
    }
    for (v, row) in patience_rows.iter().enumerate() {
        lp.add_sparse_constraint(row, Relation::Le, T::from_f64(inst.patience(v) as f64));
    }
    for row in &match_rows {
        lp.add_sparse_constraint(row, Relation::Le, T::one());
    }
    Ok(MultiRoundLp {
        lp,
        matchings,
        rounds: k,
    })
}

/// Per round, weighted matchings `(lambda, M)` with `sum lambda <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingDecomposition {
    pub rounds: Vec<Vec<(f64, Vec<usize>)>>,
}

/// Checks one round's decomposition against `y`: positive weights summing
/// to at most one, valid matchings of size at most `c`, and reconstruction
/// of `y` within `1e-8`.
pub fn check_round_decomposition(
    inst: &MatchingInstance,
    y: &[f64],
    parts: &[(f64, Vec<usize>)],
    c: usize,
) -> Result<()> {
    let mut total = 0.0;
    let mut recon = vec![0.0; inst.n_edges()];
    for (lambda, m) in parts {
        if *lambda <= 0.0 {
            return Err(Error::Numerical("nonpositive decomposition weight".into()));
        }
        if m.len() > c {
            return Err(Error::Numerical(format!(
                "matching of size {} exceeds C = {c}",
                m.len()
            )));
        }
        let mut used = vec![false; inst.n_vertices()];
        for &e in m {
            let EdgeEnds { u, v } = ends(inst, e);
            if used[u] || used[v] {
                return Err(Error::Numerical(
                    "decomposition part is not a matching".into(),
                ));
            }
            used[u] = true;
            used[v] = true;
            recon[e] += lambda;
        }
        total += lambda;
    }
    if total > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!(
            "decomposition weights sum to {total} > 1"
        )));
    }
    let resid = recon
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if resid > 1e-8 {
        return Err(Error::Numerical(format!(
            "reconstruction residual {resid} exceeds 1e-8"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiRoundSolution {
    /// `y[h][e]`: probability edge `e` is probed in round `h`.
    pub y: Vec<Vec<f64>>,
    pub objective: f64,
    pub decomposition: MatchingDecomposition,
}

/// Solves the multi-round LP and reads the per-round decompositions off the
/// nonzero matching columns.
pub fn solve_multiround_lp(
    inst: &MatchingInstance,
    cfg: &MultiRoundConfig,
) -> Result<MultiRoundSolution> {
    let built: MultiRoundLp<f64> = build_multiround_lp(inst, cfg)?;
    let res = solve(&built.lp)?.into_optimal()?;
    let mut y = vec![vec![0.0; inst.n_edges()]; built.rounds];
    let mut rounds = vec![Vec::new(); built.rounds];
    for (h, (yh, parts)) in y.iter_mut().zip(rounds.iter_mut()).enumerate() {
        for (mi, m) in built.matchings.iter().enumerate() {
            let lambda = res.primal[built.column(h, mi)];
            if lambda > 1e-12 {
                for &e in m {
                    yh[e] += lambda;
                }
                parts.push((lambda, m.clone()));
            }
        }
        check_round_decomposition(inst, yh, parts, cfg.round_capacity as usize)?;
    }
    Ok(MultiRoundSolution {
        y,
        objective: res.objective_value,
        decomposition: MatchingDecomposition { rounds },
    })
}

/// Writes `y_round` as a convex combination of matchings with at most `c`
/// edges by solving a small feasibility LP over the matchings supported on
/// `{e : y_e > 0}`, minimizing total weight so the answer is a basic solution.
pub fn decompose_into_matchings(
    inst: &MatchingInstance,
    y_round: &[f64],
    c: u32,
) -> Result<Vec<(f64, Vec<usize>)>> {
    if y_round.len() != inst.n_edges() {
        return Err(Error::invalid("y vector length differs from edge count"));
    }
    let support: Vec<usize> = (0..inst.n_edges())
        .filter(|&e| y_round[e] > 1e-12)
        .collect();
    if support.is_empty() {
        return Ok(Vec::new());
    }
    let all = enumerate_matchings(inst, c as usize, DEFAULT_MATCHING_CAP)?;
    let cands: Vec<Vec<usize>> = all
        .into_iter()
        .filter(|m| m.iter().all(|e| support.contains(e)))
        .collect();
    let mut lp = LinearProgram::<f64>::new(cands.len());
    for j in 0..cands.len() {
        lp.set_objective(j, -1.0);
    }
    for &e in &support {
        let row: Vec<(usize, f64)> = cands
            .iter()
            .enumerate()
            .filter(|(_, m)| m.contains(&e))
            .map(|(j, _)| (j, 1.0))
            .collect();
        lp.add_sparse_constraint(&row, Relation::Eq, y_round[e]);
    }
    let ones: Vec<(usize, f64)> = (0..cands.len()).map(|j| (j, 1.0)).collect();
    lp.add_sparse_constraint(&ones, Relation::Le, 1.0);
    let res = solve(&lp)?;
    if !res.is_optimal() {
        return Err(Error::Numerical(format!(
            "y is not in the size-{c} matching polytope ({:?})",
            res.status
        )));
    }
    let parts: Vec<(f64, Vec<usize>)> = res
        .primal
        .iter()
        .zip(cands)
        .filter(|(l, _)| **l > 1e-12)
        .map(|(l, m)| (*l, m))
        .collect();
    check_round_decomposition(inst, y_round, &parts, c as usize)?;
    Ok(parts)
}
