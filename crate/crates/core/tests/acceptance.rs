//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::{corpus, evaluate, fixture, frequency, random_fixtures, spec, with_first_prob};
use stochastic_probing::bounds;
use stochastic_probing::chance::{sampler, Chance};
use stochastic_probing::exact::{
    adaptive_opt, adaptive_opt_packing, exact_policy_value, DEFAULT_LEAF_BUDGET,
};
use stochastic_probing::instance::{
    generate_random_online, generate_random_packing, matching_to_packing, BuyerType, EdgeSpec,
    GraphKind, MatchingInstance, MultiRoundConfig, OnlineGenSpec, OnlineInstance, PackingGenSpec,
    Side,
};
use stochastic_probing::online::{expected_graph, online_lp_gap_report, online_policy_run};
use stochastic_probing::policy::{
    multiround_probe, multiround_probe_with, packing_probe, permute_probe, prepare_policy, Action,
    PolicyConfig, PolicyKind,
};
use stochastic_probing::relax::{
    solve_matching_lp, solve_multiround_lp, solve_online_lp, solve_packing_lp,
};
use stochastic_probing::rounding::{dependent_round, konig_color};
use stochastic_probing::Rational;

const TRIALS: u64 = 100_000;
const SEED: u64 = 20_240_611;

#[derive(Default)]
struct Checks {
    total: usize,
    failures: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn fail(&mut self, what: String) {
        self.total += 1;
        self.failures.push(what);
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn constants() -> Checks {
    let mut c = Checks::default();
    let permute = bounds::c_permute();
    c.check(close(permute, 5.7408, 5e-4) && permute < 5.75, || {
        format!("c_permute = {permute}")
    });
    let bip = bounds::c_bipartite(1.0).unwrap();
    c.check(close(bip, 3.0, 1e-12), || format!("1/rho(2,1) = {bip}"));
    let gen = bounds::c_general(1.0).unwrap();
    c.check(close(gen, 4.0, 1e-12), || format!("2/rho(1,1) = {gen}"));
    let small = bounds::c_bipartite(1e-4).unwrap();
    let limit = 2.0 / (1.0 - (-2f64).exp());
    c.check(close(small, limit, 1e-3), || {
        format!("1/rho(2,1e-4) = {small}, limit {limit}")
    });
    let (p_c, ratio) = bounds::hybrid_cutoff();
    c.check((0.540..=0.542).contains(&p_c), || format!("p_c = {p_c}"));
    c.check(ratio <= 3.46, || format!("hybrid ratio at p_c = {ratio}"));
    let at_stated = bounds::c_hybrid(0.541).unwrap();
    c.check(at_stated <= 3.46, || {
        format!("c_hybrid(0.541) = {at_stated}")
    });
    let online = bounds::c_online(bounds::alpha_online());
    c.check((7.90..=7.95).contains(&online), || {
        format!("c_online = {online}")
    });
    for k in 1..=10 {
        let v = bounds::c_packing(k);
        c.check(v == 2.0 * k as f64, || format!("c_packing({k}) = {v}"));
    }
    let mr = bounds::c_multiround(10.0);
    c.check(close(mr, 20.0, 5e-4), || format!("c_multiround(10) = {mr}"));
    c
}

/// Sixty frozen instances with at most five edges: weighted bipartite,
/// weighted general and unweighted.
fn sandwich_corpus() -> Vec<MatchingInstance> {
    let mut all = corpus(&spec(5, 0.6, (0.1, 1.0), (0.5, 2.0), true), 1_000, 20, 5);
    all.extend(corpus(
        &spec(4, 0.6, (0.1, 1.0), (0.5, 2.0), false),
        2_000,
        20,
        5,
    ));
    all.extend(corpus(
        &spec(5, 0.4, (0.1, 1.0), (1.0, 1.0), false),
        3_000,
        20,
        5,
    ));
    all
}

fn sandwich() -> Checks {
    let corpus = sandwich_corpus();
    let results: Vec<Checks> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let mut c = Checks::default();
            let lp = solve_matching_lp(inst).unwrap().objective;
            let opt = adaptive_opt::<f64>(inst).unwrap().value;
            c.check(opt <= lp + 1e-7, || {
                format!("instance {i}: OPT {opt} > LP {lp}")
            });
            for kind in PolicyKind::ALL.into_iter().filter(|k| k.applies_to(inst)) {
                let policy = prepare_policy(kind, PolicyConfig::default(), inst).unwrap();
                match exact_policy_value(DEFAULT_LEAF_BUDGET, |ch| Ok(policy.run(inst, ch)?.value))
                {
                    Ok(ev) => c.check(ev.value <= opt + 1e-9, || {
                        format!("instance {i}: {} = {} > OPT {opt}", kind.name(), ev.value)
                    }),
                    Err(e) => c.fail(format!(
                        "instance {i}: {} not exactly evaluable: {e}",
                        kind.name()
                    )),
                }
            }
            c
        })
        .collect();
    merge(results)
}

fn merge(parts: Vec<Checks>) -> Checks {
    let mut all = Checks::default();
    for p in parts {
        all.total += p.total;
        all.failures.extend(p.failures);
    }
    all
}

/// Checks `policy(inst) >= bound`, exactly where possible and otherwise with
/// `TRIALS` Monte Carlo runs and 3 sigma slack.
fn ratio_check<F>(c: &mut Checks, label: &str, bound: f64, require_exact: bool, run: F)
where
    F: Fn(&mut dyn Chance) -> stochastic_probing::Result<f64> + Sync,
{
    match evaluate(SEED, label, TRIALS, run) {
        Ok(est) if require_exact && !est.exact => c.fail(format!("{label}: not exactly evaluable")),
        Ok(est) => c.check(est.reaches(bound, 3.0), || {
            format!(
                "{label}: value {} (se {}) below bound {bound}",
                est.mean, est.std_error
            )
        }),
        Err(e) => c.fail(format!("{label}: {e}")),
    }
}

fn matching_ratio(
    c: &mut Checks,
    set: &str,
    insts: &[MatchingInstance],
    kind: PolicyKind,
    bound: impl Fn(&MatchingInstance, f64) -> f64,
    exact: bool,
) {
    for (i, inst) in insts.iter().enumerate() {
        let lp = solve_matching_lp(inst).unwrap().objective;
        let policy = prepare_policy(kind, PolicyConfig::default(), inst).unwrap();
        let label = format!("{set}/{i}/{}", kind.name());
        ratio_check(c, &label, bound(inst, lp), exact, |ch| {
            Ok(policy.run(inst, ch)?.value)
        });
    }
}

fn ratios() -> Checks {
    let mut c = Checks::default();
    let sandwich = sandwich_corpus();
    let mut everything = sandwich.clone();
    everything.extend(random_fixtures("bipartite").into_iter().map(|(_, i)| i));
    everything.extend(random_fixtures("general").into_iter().map(|(_, i)| i));
    matching_ratio(
        &mut c,
        "all",
        &everything,
        PolicyKind::Permute,
        |_, lp| lp / 5.7408,
        false,
    );

    let bip_one: Vec<_> = corpus(&spec(6, 0.5, (0.2, 0.95), (0.5, 2.0), true), 4_000, 15, 8)
        .iter()
        .map(|i| with_first_prob(i, 1.0))
        .collect();
    matching_ratio(
        &mut c,
        "bip-pmax-1",
        &bip_one,
        PolicyKind::RoundColor,
        |_, lp| lp / 3.0,
        false,
    );
    let bip_low: Vec<_> = corpus(&spec(6, 0.5, (0.02, 0.3), (0.5, 2.0), true), 5_000, 15, 8)
        .iter()
        .map(|i| with_first_prob(i, 0.3))
        .collect();
    let rho_low = bounds::rho(2.0, 0.3).unwrap();
    matching_ratio(
        &mut c,
        "bip-pmax-0.3",
        &bip_low,
        PolicyKind::RoundColor,
        |_, lp| rho_low * lp,
        false,
    );

    let gen_one: Vec<_> = corpus(&spec(5, 0.6, (0.2, 0.95), (0.5, 2.0), false), 6_000, 15, 7)
        .iter()
        .map(|i| with_first_prob(i, 1.0))
        .collect();
    matching_ratio(
        &mut c,
        "gen-pmax-1",
        &gen_one,
        PolicyKind::GeneralRedux,
        |_, lp| lp / 4.0,
        false,
    );

    let unweighted: Vec<_> = sandwich
        .iter()
        .filter(|i| i.is_unweighted())
        .cloned()
        .collect();
    matching_ratio(
        &mut c,
        "unweighted",
        &unweighted,
        PolicyKind::Greedy,
        |_, lp| lp / 5.0,
        true,
    );
    matching_ratio(
        &mut c,
        "unweighted",
        &unweighted,
        PolicyKind::Hybrid,
        |inst, _| adaptive_opt::<f64>(inst).unwrap().value / 3.46,
        false,
    );

    for k in [3usize, 4] {
        let gen = PackingGenSpec {
            dimension: 5,
            n_items: 4,
            sparsity: k,
            capacity_range: (1, 2),
            atoms: 2,
            value_range: (0.5, 1.5),
        };
        for seed in 0..8 {
            let inst = generate_random_packing(&gen, 7_000 + seed).unwrap();
            let lp = solve_packing_lp(&inst).unwrap();
            let alpha = k as f64;
            let label = format!("packing-k{k}/{seed}");
            ratio_check(&mut c, &label, lp.objective / (2.0 * alpha), false, |ch| {
                Ok(packing_probe(&inst, &lp.y, alpha, ch)?.value)
            });
        }
    }

    let small = corpus(&spec(4, 0.6, (0.2, 1.0), (0.5, 2.0), false), 8_000, 6, 4);
    let configs = [(1, 1), (2, 1), (2, 2), (3, 2)];
    for (i, inst) in small.iter().enumerate() {
        for &(k, cap) in &configs {
            let cfg = MultiRoundConfig::new(k, cap).unwrap();
            let sol = solve_multiround_lp(inst, &cfg).unwrap();
            let label = format!("multiround/{i}/k{k}c{cap}");
            ratio_check(&mut c, &label, sol.objective / 20.0, false, |ch| {
                Ok(multiround_probe(inst, &cfg, &sol.decomposition, 10.0, ch)?.value)
            });
        }
    }

    let online_gen = OnlineGenSpec {
        n_items: 2,
        n_types: 2,
        max_expected_count: 2,
        prob_range: (0.2, 1.0),
        weight_range: (0.5, 2.0),
        patience_range: (1, 2),
    };
    let alpha = bounds::alpha_online();
    for seed in 0..6 {
        let inst = generate_random_online(&online_gen, 9_000 + seed).unwrap();
        let graph = expected_graph(&inst).unwrap();
        let lp = solve_online_lp(&graph).unwrap();
        let label = format!("online/{seed}");
        ratio_check(&mut c, &label, lp.objective / 7.93, false, |ch| {
            Ok(online_policy_run(&graph, &lp, alpha, ch)?.revenue)
        });
    }
    c
}

fn fractional_y(n_edges: usize, seed: u64) -> Vec<f64> {
    let mut ch = sampler(seed, "fractional-y", 0);
    (0..n_edges)
        .map(|_| 0.05 + 0.9 * (ch.uniform(1_000_000) as f64 / 1e6))
        .collect()
}

fn rounding() -> Checks {
    let mut c = Checks::default();
    let inst = fixture("random/bipartite_0.json");
    let pairs: Vec<(usize, usize)> = inst.edges().iter().map(|e| (e.u, e.v)).collect();
    let n = inst.n_vertices();
    let y = fractional_y(pairs.len(), 1);
    let samples: Vec<Vec<usize>> = (0..TRIALS)
        .into_par_iter()
        .map(|i| {
            dependent_round(n, &pairs, &y, &mut sampler(SEED, "p1-p2", i))
                .unwrap()
                .chosen
        })
        .collect();

    let degree: Vec<f64> = (0..n)
        .map(|v| {
            pairs
                .iter()
                .zip(&y)
                .filter(|((a, b), _)| *a == v || *b == v)
                .map(|(_, y)| y)
                .sum()
        })
        .collect();
    let bad = samples
        .iter()
        .filter(|chosen| {
            (0..n).any(|v| {
                let d = chosen
                    .iter()
                    .filter(|&&e| pairs[e].0 == v || pairs[e].1 == v)
                    .count() as f64;
                d < (degree[v] + 1e-9).floor() || d > (degree[v] - 1e-9).ceil()
            })
        })
        .count();
    c.check(bad == 0, || {
        format!("P2: {bad} samples change a degree beyond floor/ceil")
    });

    let critical = ChiSquared::new(1.0).unwrap().inverse_cdf(1.0 - 1e-3);
    let nf = TRIALS as f64;
    for (e, &ye) in y.iter().enumerate() {
        let hits = samples.iter().filter(|s| s.contains(&e)).count() as f64;
        let stat = (hits - nf * ye).powi(2) / (nf * ye * (1.0 - ye));
        c.check(stat <= critical, || {
            format!("P1: edge {e} chi-square {stat:.2} > {critical:.2}")
        });
    }

    let star = [(0, 1), (0, 2), (0, 3)];
    let ys = [0.3, 0.5, 0.7];
    let star_samples: Vec<Vec<usize>> = (0..TRIALS)
        .into_par_iter()
        .map(|i| {
            dependent_round(4, &star, &ys, &mut sampler(SEED, "p3", i))
                .unwrap()
                .chosen
        })
        .collect();
    let subsets: [&[usize]; 4] = [&[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];
    for s in subsets {
        let all = star_samples
            .iter()
            .filter(|x| s.iter().all(|e| x.contains(e)))
            .count() as u64;
        let none = star_samples
            .iter()
            .filter(|x| s.iter().all(|e| !x.contains(e)))
            .count() as u64;
        let (f_all, se_all) = frequency(all, TRIALS);
        let (f_none, se_none) = frequency(none, TRIALS);
        let p_all: f64 = s.iter().map(|&e| ys[e]).product();
        let p_none: f64 = s.iter().map(|&e| 1.0 - ys[e]).product();
        c.check(f_all <= p_all + 3.0 * se_all, || {
            format!("P3: Pr[{s:?} all] = {f_all} > {p_all}")
        });
        c.check(f_none <= p_none + 3.0 * se_none, || {
            format!("P3: Pr[{s:?} none] = {f_none} > {p_none}")
        });
    }

    for (seed, density) in (0..300u64).zip([0.3, 0.6, 0.9].into_iter().cycle()) {
        let g = corpus(
            &spec(8, density, (0.5, 0.5), (1.0, 1.0), true),
            seed * 7,
            1,
            64,
        )
        .remove(0);
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        let delta = (0..g.n_vertices()).map(|v| g.degree(v)).max().unwrap();
        let coloring = konig_color(g.n_vertices(), &pairs).unwrap();
        let mut seen = vec![0; pairs.len()];
        let mut matchings = true;
        for class in &coloring.classes {
            let mut used = vec![false; g.n_vertices()];
            for &e in class {
                seen[e] += 1;
                let (u, v) = pairs[e];
                matchings &= !std::mem::replace(&mut used[u], true)
                    && !std::mem::replace(&mut used[v], true);
            }
        }
        c.check(
            coloring.classes.len() == delta && matchings && seen.iter().all(|&k| k == 1),
            || {
                format!(
                    "König: graph {seed} gives {} classes for degree {delta}",
                    coloring.classes.len()
                )
            },
        );
    }
    c
}

/// Replays a permute trace and reports, for the edge `f`, whether `u` was
/// matched or timed out when `f` came up.
fn status_at(
    inst: &MatchingInstance,
    steps: &[stochastic_probing::policy::TraceStep],
    f: usize,
    u: usize,
) -> (bool, bool) {
    let mut matched = vec![false; inst.n_vertices()];
    let mut remaining = inst.patience_vec();
    for s in steps {
        if s.edge == f {
            return (matched[u], remaining[u] == 0);
        }
        let e = inst.edge(s.edge);
        match s.action {
            Action::ProbedSuccess => {
                matched[e.u] = true;
                matched[e.v] = true;
            }
            Action::ProbedFailure => {
                remaining[e.u] -= 1;
                remaining[e.v] -= 1;
            }
            _ => {}
        }
    }
    unreachable!("permute visits every edge")
}

fn permute_statuses(inst: &MatchingInstance, alpha: f64, tag: &str) -> Vec<Vec<[(bool, bool); 2]>> {
    let y = solve_matching_lp(inst).unwrap().y;
    (0..TRIALS)
        .into_par_iter()
        .map(|i| {
            let trace = permute_probe(inst, &y, alpha, &mut sampler(SEED, tag, i)).unwrap();
            (0..inst.n_edges())
                .map(|f| {
                    let e = inst.edge(f);
                    [
                        status_at(inst, &trace.steps, f, e.u),
                        status_at(inst, &trace.steps, f, e.v),
                    ]
                })
                .collect()
        })
        .collect()
}

fn star_with_patience(leaves: usize, p: f64, t: u32) -> MatchingInstance {
    let mut patience = vec![1; leaves + 1];
    patience[0] = t;
    let edges = (1..=leaves).map(|v| EdgeSpec::new(0, v, p, 1.0)).collect();
    MatchingInstance::new(GraphKind::General, patience, edges).unwrap()
}

fn lemmas() -> Checks {
    let mut c = Checks::default();
    let alpha = bounds::alpha_permute();
    let cap = 1.0 / (2.0 * alpha);
    for (name, inst) in [
        ("bipartite_0", fixture("random/bipartite_0.json")),
        ("general_1", fixture("random/general_1.json")),
        ("star", star_with_patience(4, 0.5, 1)),
    ] {
        let runs = permute_statuses(&inst, alpha, name);
        for f in 0..inst.n_edges() {
            for side in 0..2 {
                let matched = runs.iter().filter(|r| r[f][side].0).count() as u64;
                let timed_out = runs.iter().filter(|r| r[f][side].1).count() as u64;
                let (fm, sm) = frequency(matched, TRIALS);
                let (ft, st) = frequency(timed_out, TRIALS);
                c.check(fm <= cap + 3.0 * sm, || {
                    format!("matched-before: {name} edge {f} side {side}: {fm}")
                });
                c.check(ft <= cap + 3.0 * st, || {
                    format!("timed-out-before: {name} edge {f} side {side}: {ft}")
                });
            }
        }
    }

    let alpha = std::f64::consts::E + 0.001;
    let cap = 2.0 / (3.0 * alpha * alpha);
    for (name, inst) in [
        ("star-t2", star_with_patience(5, 0.3, 2)),
        ("star-t3", star_with_patience(6, 0.2, 3)),
        ("bipartite_0", fixture("random/bipartite_0.json")),
    ] {
        let runs = permute_statuses(&inst, alpha, name);
        for f in 0..inst.n_edges() {
            let e = inst.edge(f);
            for (side, u) in [(0, e.u), (1, e.v)] {
                if inst.patience(u) < 2 {
                    continue;
                }
                let timed_out = runs.iter().filter(|r| r[f][side].1).count() as u64;
                let (ft, st) = frequency(timed_out, TRIALS);
                c.check(ft <= cap + 3.0 * st, || {
                    format!("patience>=2: {name} edge {f} vertex {u}: {ft} > {cap}")
                });
            }
        }
    }

    let inst = fixture("random/general_0.json");
    let cfg = MultiRoundConfig::new(3, 2).unwrap();
    let sol = solve_multiround_lp(&inst, &cfg).unwrap();
    let m = inst.n_edges();
    let safe_counts: Vec<Vec<bool>> = (0..TRIALS)
        .into_par_iter()
        .map(|i| {
            let mut safe = vec![false; 3 * m];
            multiround_probe_with(
                &inst,
                &cfg,
                &sol.decomposition,
                10.0,
                &mut sampler(SEED, "rounds", i),
                &mut |h, s| {
                    for e in 0..m {
                        safe[h * m + e] = s.is_safe(&inst, e);
                    }
                },
            )
            .unwrap();
            safe
        })
        .collect();
    for h in 0..3 {
        for e in (0..m).filter(|&e| sol.y[h][e] > 1e-9) {
            let hits = safe_counts.iter().filter(|s| s[h * m + e]).count() as u64;
            let (fs, ss) = frequency(hits, TRIALS);
            c.check(fs >= 1.0 - 5.0 / 10.0 - 3.0 * ss, || {
                format!("safe-in-round: round {h} edge {e}: {fs}")
            });
        }
    }

    let two_types = OnlineInstance::new(
        2,
        vec![
            BuyerType {
                id: 0,
                expected_count: 2.0,
                patience: 1,
                probs: vec![0.5, 0.8],
                weights: vec![1.0, 1.0],
            },
            BuyerType {
                id: 1,
                expected_count: 1.0,
                patience: 2,
                probs: vec![0.6, 0.3],
                weights: vec![2.0, 1.0],
            },
        ],
        3,
    )
    .unwrap();
    let generated = generate_random_online(&OnlineGenSpec::default(), 11).unwrap();
    for (name, inst) in [("two-types", two_types), ("generated", generated)] {
        let report = online_lp_gap_report(&inst, 200, SEED).unwrap();
        c.check(
            report.mean_lp_instance <= report.lp_expected + 3.0 * report.std_error + 1e-9,
            || {
                format!(
                    "instance graph LP: {name}: mean {} > {}",
                    report.mean_lp_instance, report.lp_expected
                )
            },
        );
    }
    c
}

fn reduction() -> Checks {
    let mut c = Checks::default();
    let mut insts: Vec<_> = sandwich_corpus()
        .into_iter()
        .filter(|i| i.n_edges() <= 4)
        .collect();
    insts.push(fixture("star4.json"));
    insts.push(fixture("edge.json"));
    insts.push(
        MatchingInstance::new(
            GraphKind::Bipartite(vec![Side::A, Side::B, Side::A, Side::B]),
            vec![2, 1, 1, 2],
            vec![
                EdgeSpec::new(0, 1, 0.4, 1.0),
                EdgeSpec::new(0, 3, 0.7, 2.0),
                EdgeSpec::new(2, 3, 0.5, 1.5),
            ],
        )
        .unwrap(),
    );
    for (i, inst) in insts.iter().enumerate() {
        let packing = matching_to_packing(inst);
        let m = adaptive_opt::<f64>(inst).unwrap().value;
        let p = adaptive_opt_packing::<f64>(&packing).unwrap();
        c.check(close(m, p, 1e-9), || {
            format!("instance {i}: matching OPT {m} vs packing OPT {p}")
        });
        let exact_m = adaptive_opt::<Rational>(inst).unwrap().value;
        let exact_p = adaptive_opt_packing::<Rational>(&packing).unwrap();
        c.check(
            close(exact_m.to_f64().unwrap(), exact_p.to_f64().unwrap(), 1e-12),
            || format!("instance {i}: exact matching OPT {exact_m} vs packing OPT {exact_p}"),
        );
    }
    c
}

fn main() {
    type Criterion = (&'static str, fn() -> Checks);
    let criteria: [Criterion; 6] = [
        ("approximation constants", constants),
        (
            "policy <= adaptive OPT <= LP on 60 small instances",
            sandwich,
        ),
        ("approximation ratios on frozen corpora", ratios),
        ("dependent rounding and edge coloring properties", rounding),
        ("per-vertex and per-round statistical bounds", lemmas),
        (
            "packing reduction preserves the adaptive optimum",
            reduction,
        ),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let pass = checks.failures.is_empty();
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} {name} ({} checks, {} failed, {:.1}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            checks.total,
            checks.failures.len(),
            start.elapsed().as_secs_f64()
        );
        for f in checks.failures.iter().take(10) {
            println!("    {f}");
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
