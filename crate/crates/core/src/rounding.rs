//! Randomized rounding primitives for bipartite fractional edge vectors.

use crate::chance::Chance;
use crate::error::{Error, Result};
use crate::instance::{EdgeSpec, GraphKind, MatchingInstance, Side};

const SNAP: f64 = 1e-12;

/// Outcome of [`dependent_round`]: indices of the edges rounded to one.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedEdgeSet {
    pub chosen: Vec<usize>,
    pub source: Vec<f64>,
}

/// Partition of an edge set into matchings, as indices into the input list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeColoring {
    pub classes: Vec<Vec<usize>>,
}

/// Two-colors the vertices touched by `edges`; `None` if an odd cycle exists.
pub fn two_color(n_vertices: usize, edges: &[(usize, usize)]) -> Option<Vec<Side>> {
    let mut adj = vec![Vec::new(); n_vertices];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut side: Vec<Option<Side>> = vec![None; n_vertices];
    let mut queue = std::collections::VecDeque::new();
    for s in 0..n_vertices {
        if side[s].is_some() {
            continue;
        }
        side[s] = Some(Side::A);
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let flip = match side[u] {
                Some(Side::A) => Side::B,
                _ => Side::A,
            };
            for &v in &adj[u] {
                match side[v] {
                    None => {
                        side[v] = Some(flip);
                        queue.push_back(v);
                    }
                    Some(sv) if sv != flip => return None,
                    _ => {}
                }
            }
        }
    }
    Some(side.into_iter().map(|s| s.unwrap_or(Side::A)).collect())
}

fn check_edges(n_vertices: usize, edges: &[(usize, usize)]) -> Result<()> {
    for &(u, v) in edges {
        if u >= n_vertices || v >= n_vertices || u == v {
            return Err(Error::invalid(format!(
                "edge ({u}, {v}) is not a valid edge"
            )));
        }
    }
    if two_color(n_vertices, edges).is_none() {
        return Err(Error::invalid("edge set is not bipartite"));
    }
    Ok(())
}

fn snap(v: f64) -> f64 {
    if v < SNAP {
        0.0
    } else if v > 1.0 - SNAP {
        1.0
    } else {
        v
    }
}

fn is_fractional(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// Finds a cycle or a maximal path among the fractional edges.
///
/// The walk starts at the lowest-index vertex of fractional degree one if
/// there is one, otherwise at the lowest-index vertex with any fractional
/// edge, and always leaves along the lowest-index unused fractional edge.
fn fractional_walk(n: usize, edges: &[(usize, usize)], z: &[f64]) -> Option<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        if is_fractional(z[e]) {
            adj[u].push(e);
            adj[v].push(e);
        }
    }
    let start = (0..n)
        .find(|&v| adj[v].len() == 1)
        .or_else(|| (0..n).find(|&v| !adj[v].is_empty()))?;
    let mut used = vec![false; edges.len()];
    // position of each vertex along the walk
    let mut seen_at: Vec<Option<usize>> = vec![None; n];
    let mut walk_edges: Vec<usize> = Vec::new();
    let mut cur = start;
    seen_at[cur] = Some(0);
    while let Some(&e) = adj[cur].iter().find(|&&e| !used[e]) {
        used[e] = true;
        walk_edges.push(e);
        let (u, v) = edges[e];
        cur = if u == cur { v } else { u };
        if let Some(pos) = seen_at[cur] {
            return Some(walk_edges.split_off(pos));
        }
        seen_at[cur] = Some(walk_edges.len());
    }
    Some(walk_edges)
}

/// Rounds `y` on a bipartite edge list to a 0/1 vector, keeping every
/// marginal, never exceeding `ceil(sum y)` at a vertex and keeping the
/// edges at a vertex negatively correlated.
pub fn dependent_round(
    n_vertices: usize,
    edges: &[(usize, usize)],
    y: &[f64],
    chance: &mut dyn Chance,
) -> Result<RoundedEdgeSet> {
    if y.len() != edges.len() {
        return Err(Error::invalid("y vector length differs from edge count"));
    }
    check_edges(n_vertices, edges)?;
    if let Some(bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("y value {bad} outside [0, 1]")));
    }
    let mut z: Vec<f64> = y.iter().copied().map(snap).collect();
    while let Some(walk) = fractional_walk(n_vertices, edges, &z) {
        let (mut up1, mut down1) = (f64::INFINITY, f64::INFINITY);
        for (i, &e) in walk.iter().enumerate() {
            // class one gains on the first branch, class two loses
            let (gain_room, loss_room) = if i % 2 == 0 {
                (1.0 - z[e], z[e])
            } else {
                (z[e], 1.0 - z[e])
            };
            up1 = up1.min(gain_room);
            down1 = down1.min(loss_room);
        }
        let branch = chance.pick(&[down1 / (up1 + down1), up1 / (up1 + down1)]);
        let shift = if branch == 0 { up1 } else { -down1 };
        for (i, &e) in walk.iter().enumerate() {
            let signed = if i % 2 == 0 { shift } else { -shift };
            z[e] = snap((z[e] + signed).clamp(0.0, 1.0));
        }
    }
    let chosen = z
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == 1.0)
        .map(|(e, _)| e)
        .collect();
    Ok(RoundedEdgeSet {
        chosen,
        source: y.to_vec(),
    })
}

/// Colors a bipartite edge list with exactly `max degree` matchings by
/// inserting edges one at a time and flipping alternating paths.
pub fn konig_color(n_vertices: usize, edges: &[(usize, usize)]) -> Result<EdgeColoring> {
    check_edges(n_vertices, edges)?;
    let mut degree = vec![0usize; n_vertices];
    for &(u, v) in edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let delta = degree.iter().copied().max().unwrap_or(0);
    // at[v][c]: edge of color c at v
    let mut at: Vec<Vec<Option<usize>>> = vec![vec![None; delta]; n_vertices];
    let mut color = vec![usize::MAX; edges.len()];
    let other = |e: usize, x: usize| {
        if edges[e].0 == x {
            edges[e].1
        } else {
            edges[e].0
        }
    };
    for (e, &(u, v)) in edges.iter().enumerate() {
        let a = (0..delta)
            .find(|&c| at[u][c].is_none())
            .expect("free color at u");
        let b = (0..delta)
            .find(|&c| at[v][c].is_none())
            .expect("free color at v");
        if at[v][a].is_some() {
            // flip the a/b path leaving v along color a; it cannot reach u
            let mut path = Vec::new();
            let (mut cur, mut col) = (v, a);
            while let Some(f) = at[cur][col] {
                path.push(f);
                cur = other(f, cur);
                col = if col == a { b } else { a };
            }
            for &f in &path {
                let (x, y) = edges[f];
                at[x][color[f]] = None;
                at[y][color[f]] = None;
            }
            for &f in &path {
                let flipped = if color[f] == a { b } else { a };
                color[f] = flipped;
                let (x, y) = edges[f];
                at[x][flipped] = Some(f);
                at[y][flipped] = Some(f);
            }
        }
        color[e] = a;
        at[u][a] = Some(e);
        at[v][a] = Some(e);
    }
    let mut classes = vec![Vec::new(); delta];
    for (e, &c) in color.iter().enumerate() {
        classes[c].push(e);
    }
    Ok(EdgeColoring { classes })
}

/// Result of [`random_bipartition`].
#[derive(Debug, Clone)]
pub struct Bipartition {
    pub sides: Vec<Side>,
    /// Crossing edges only, on the original vertex set.
    pub sub: MatchingInstance,
    /// `y` restricted to the crossing edges.
    pub y: Vec<f64>,
    /// Original index of each edge of `sub`.
    pub edge_map: Vec<usize>,
}

/// Puts every vertex on side A or B by a fair coin and keeps the crossing
/// edges together with their existing `y` values.
pub fn random_bipartition(
    inst: &MatchingInstance,
    y: &[f64],
    chance: &mut dyn Chance,
) -> Result<Bipartition> {
    if y.len() != inst.n_edges() {
        return Err(Error::invalid("y vector length differs from edge count"));
    }
    let sides: Vec<Side> = (0..inst.n_vertices())
        .map(|_| {
            if chance.bernoulli(0.5) {
                Side::B
            } else {
                Side::A
            }
        })
        .collect();
    let mut edges: Vec<EdgeSpec> = Vec::new();
    let mut sub_y = Vec::new();
    let mut edge_map = Vec::new();
    for (e, spec) in inst.edges().iter().enumerate() {
        if sides[spec.u] != sides[spec.v] {
            edges.push(*spec);
            sub_y.push(y[e]);
            edge_map.push(e);
        }
    }
    let sub = MatchingInstance::new(
        GraphKind::Bipartite(sides.clone()),
        inst.patience_vec(),
        edges,
    )?;
    Ok(Bipartition {
        sides,
        sub,
        y: sub_y,
        edge_map,
    })
}
