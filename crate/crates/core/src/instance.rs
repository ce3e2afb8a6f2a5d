//! Problem instances for the four probing variants, their JSON forms and
//! seeded generators.
//!
//! Vertices, items and buyer types are dense indices `0..n` internally. On
//! input an id may be an integer or a string alias; it is resolved to its
//! position in the list. Serialization always writes the canonical form.

use std::collections::{HashMap, HashSet};
use std::io::Read;

use indexmap::IndexMap;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chance::substream;
use crate::error::{Error, Result};

/// Tolerance on probability distributions summing to one.
pub const DIST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    General,
    /// Side label for every vertex.
    Bipartite(Vec<Side>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexSpec {
    pub id: usize,
    pub patience: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub u: usize,
    pub v: usize,
    pub prob: f64,
    pub weight: f64,
}

impl EdgeSpec {
    pub fn new(u: usize, v: usize, prob: f64, weight: f64) -> Self {
        EdgeSpec { u, v, prob, weight }
    }

    pub fn touches(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }

    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// Graph with per-edge success probability and weight and per-vertex patience.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingInstance {
    kind: GraphKind,
    vertices: Vec<VertexSpec>,
    edges: Vec<EdgeSpec>,
    incident: Vec<Vec<usize>>,
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "{what}: prob out of [0,1] (got {p})"
        )));
    }
    Ok(())
}

fn check_weight(w: f64, what: &str) -> Result<()> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::invalid(format!(
            "{what}: weight must be finite and >= 0 (got {w})"
        )));
    }
    Ok(())
}

impl MatchingInstance {
    /// Validates and builds an instance. Patience values are capped at
    /// `max(degree, 1)`.
    pub fn new(kind: GraphKind, patience: Vec<u32>, edges: Vec<EdgeSpec>) -> Result<Self> {
        let n = patience.len();
        if let GraphKind::Bipartite(sides) = &kind {
            if sides.len() != n {
                return Err(Error::invalid(format!(
                    "bipartite side labels: expected {n}, got {}",
                    sides.len()
                )));
            }
        }
        for (v, &t) in patience.iter().enumerate() {
            if t < 1 {
                return Err(Error::invalid(format!("vertex {v}: patience must be >= 1")));
            }
        }
        let mut seen = HashSet::new();
        let mut incident = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            let what = format!("edge {i}");
            if e.u >= n || e.v >= n {
                return Err(Error::invalid(format!(
                    "{what}: references a missing vertex"
                )));
            }
            if e.u == e.v {
                return Err(Error::invalid(format!(
                    "{what}: self loop at vertex {}",
                    e.u
                )));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::invalid(format!(
                    "{what}: duplicate vertex pair ({}, {})",
                    e.u, e.v
                )));
            }
            check_prob(e.prob, &what)?;
            check_weight(e.weight, &what)?;
            if let GraphKind::Bipartite(sides) = &kind {
                if sides[e.u] == sides[e.v] {
                    return Err(Error::invalid(format!(
                        "{what}: does not cross the bipartition"
                    )));
                }
            }
            incident[e.u].push(i);
            incident[e.v].push(i);
        }
        let vertices = patience
            .iter()
            .enumerate()
            .map(|(id, &t)| VertexSpec {
                id,
                patience: t.min(incident[id].len().max(1) as u32),
            })
            .collect();
        Ok(MatchingInstance {
            kind,
            vertices,
            edges,
            incident,
        })
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn is_bipartite(&self) -> bool {
        matches!(self.kind, GraphKind::Bipartite(_))
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[VertexSpec] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &EdgeSpec {
        &self.edges[e]
    }

    pub fn patience(&self, v: usize) -> u32 {
        self.vertices[v].patience
    }

    /// Edge indices incident to `v`, ascending.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    pub fn max_prob(&self) -> f64 {
        self.edges.iter().map(|e| e.prob).fold(0.0, f64::max)
    }

    /// True when every edge carries the same weight.
    pub fn is_unweighted(&self) -> bool {
        self.edges
            .windows(2)
            .all(|w| (w[0].weight - w[1].weight).abs() <= 1e-12)
    }

    /// Same graph with all weights multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec {
                weight: e.weight * c,
                ..*e
            })
            .collect();
        MatchingInstance::new(self.kind.clone(), self.patience_vec(), edges)
    }

    pub fn patience_vec(&self) -> Vec<u32> {
        self.vertices.iter().map(|v| v.patience).collect()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawMatching = serde_json::from_str(s)?;
        raw.resolve()
    }

    pub fn to_json(&self) -> String {
        pretty(&RawMatching::from_instance(self))
    }
}

/// Cardinality-constrained multi-round parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRoundConfig {
    pub rounds: u32,
    pub round_capacity: u32,
}

impl MultiRoundConfig {
    pub fn new(rounds: u32, round_capacity: u32) -> Result<Self> {
        if rounds < 1 || round_capacity < 1 {
            return Err(Error::invalid(
                "multi-round config needs rounds >= 1 and capacity >= 1",
            ));
        }
        Ok(MultiRoundConfig {
            rounds,
            round_capacity,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiRoundInstance {
    pub graph: MatchingInstance,
    pub config: MultiRoundConfig,
}

impl MultiRoundInstance {
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawMultiRound = serde_json::from_str(s)?;
        let graph = raw.graph.resolve()?;
        let config = MultiRoundConfig::new(raw.k, raw.c)?;
        Ok(MultiRoundInstance { graph, config })
    }

    pub fn to_json(&self) -> String {
        pretty(&RawMultiRound {
            graph: RawMatching::from_instance(&self.graph),
            k: self.config.rounds,
            c: self.config.round_capacity,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuyerType {
    pub id: usize,
    pub expected_count: f64,
    pub patience: u32,
    /// Like-probability per item.
    pub probs: Vec<f64>,
    /// Revenue per item.
    pub weights: Vec<f64>,
}

/// Items on sale and the buyer-type distribution of the i.i.d. arrival model.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineInstance {
    n_items: usize,
    buyer_types: Vec<BuyerType>,
    arrivals: u32,
}

impl OnlineInstance {
    pub fn new(n_items: usize, buyer_types: Vec<BuyerType>, arrivals: u32) -> Result<Self> {
        if arrivals < 1 {
            return Err(Error::invalid("arrivals n must be >= 1"));
        }
        let mut total = 0.0;
        for (b, ty) in buyer_types.iter().enumerate() {
            let what = format!("buyer type {b}");
            if !(ty.expected_count.is_finite() && ty.expected_count > 0.0) {
                return Err(Error::invalid(format!(
                    "{what}: expected count must be > 0"
                )));
            }
            if ty.patience < 1 {
                return Err(Error::invalid(format!("{what}: patience must be >= 1")));
            }
            if ty.probs.len() != n_items || ty.weights.len() != n_items {
                return Err(Error::invalid(format!("{what}: needs one entry per item")));
            }
            for a in 0..n_items {
                check_prob(ty.probs[a], &format!("{what}, item {a}"))?;
                check_weight(ty.weights[a], &format!("{what}, item {a}"))?;
            }
            total += ty.expected_count;
        }
        if (total - arrivals as f64).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "expected counts sum to {total}, but n = {arrivals}"
            )));
        }
        let buyer_types = buyer_types
            .into_iter()
            .enumerate()
            .map(|(id, ty)| BuyerType { id, ..ty })
            .collect();
        Ok(OnlineInstance {
            n_items,
            buyer_types,
            arrivals,
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn buyer_types(&self) -> &[BuyerType] {
        &self.buyer_types
    }

    pub fn arrivals(&self) -> u32 {
        self.arrivals
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawOnline = serde_json::from_str(s)?;
        raw.resolve()
    }

    pub fn to_json(&self) -> String {
        pretty(&RawOnline::from_instance(self))
    }
}

/// One atom of an item's size distribution: a 0/1 vector given by its ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeAtom {
    pub prob: f64,
    pub ones: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingItem {
    pub mean_value: f64,
    pub support: Vec<usize>,
    pub size_dist: Vec<SizeAtom>,
}

impl PackingItem {
    /// Expected size in coordinate `j`.
    pub fn mu(&self, j: usize) -> f64 {
        self.size_dist
            .iter()
            .filter(|a| a.ones.contains(&j))
            .map(|a| a.prob)
            .sum()
    }
}

/// Stochastic k-set packing instance with integral capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingInstance {
    capacity: Vec<u32>,
    items: Vec<PackingItem>,
    sparsity: usize,
}

impl PackingInstance {
    pub fn new(capacity: Vec<u32>, items: Vec<PackingItem>, sparsity: usize) -> Result<Self> {
        let d = capacity.len();
        if d < 1 {
            return Err(Error::invalid("packing dimension must be >= 1"));
        }
        if let Some(j) = capacity.iter().position(|&b| b < 1) {
            return Err(Error::invalid(format!("capacity[{j}] must be >= 1")));
        }
        let mut canon = Vec::with_capacity(items.len());
        for (i, mut item) in items.into_iter().enumerate() {
            let what = format!("item {i}");
            check_weight(item.mean_value, &what)?;
            item.support.sort_unstable();
            item.support.dedup();
            if item.support.len() > sparsity {
                return Err(Error::invalid(format!(
                    "{what}: support size {} exceeds sparsity {sparsity}",
                    item.support.len()
                )));
            }
            if let Some(&j) = item.support.iter().find(|&&j| j >= d) {
                return Err(Error::invalid(format!(
                    "{what}: coordinate {j} outside dimension {d}"
                )));
            }
            if item.size_dist.is_empty() {
                return Err(Error::invalid(format!("{what}: empty size distribution")));
            }
            let mut total = 0.0;
            for atom in item.size_dist.iter_mut() {
                if !(0.0..=1.0).contains(&atom.prob) {
                    return Err(Error::invalid(format!(
                        "{what}: atom probability out of [0,1]"
                    )));
                }
                atom.ones.sort_unstable();
                atom.ones.dedup();
                if let Some(&j) = atom.ones.iter().find(|j| !item.support.contains(j)) {
                    return Err(Error::invalid(format!(
                        "{what}: size vector is nonzero at {j}, outside the support"
                    )));
                }
                total += atom.prob;
            }
            if (total - 1.0).abs() > DIST_TOL {
                return Err(Error::invalid(format!(
                    "{what}: size distribution sums to {total}, not 1"
                )));
            }
            canon.push(item);
        }
        Ok(PackingInstance {
            capacity,
            items: canon,
            sparsity,
        })
    }

    pub fn dimension(&self) -> usize {
        self.capacity.len()
    }

    pub fn capacity(&self) -> &[u32] {
        &self.capacity
    }

    pub fn items(&self) -> &[PackingItem] {
        &self.items
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawPacking = serde_json::from_str(s)?;
        raw.resolve()
    }

    pub fn to_json(&self) -> String {
        pretty(&RawPacking::from_instance(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Matching,
    Online,
    Packing,
    Multiround,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyInstance {
    Matching(MatchingInstance),
    Online(OnlineInstance),
    Packing(PackingInstance),
    MultiRound(MultiRoundInstance),
}

impl AnyInstance {
    pub fn to_json(&self) -> String {
        match self {
            AnyInstance::Matching(i) => i.to_json(),
            AnyInstance::Online(i) => i.to_json(),
            AnyInstance::Packing(i) => i.to_json(),
            AnyInstance::MultiRound(i) => i.to_json(),
        }
    }
}

/// Reads a UTF-8 JSON document and validates it against `schema`.
pub fn load_instance(mut source: impl Read, schema: Schema) -> Result<AnyInstance> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    Ok(match schema {
        Schema::Matching => AnyInstance::Matching(MatchingInstance::from_json(&text)?),
        Schema::Online => AnyInstance::Online(OnlineInstance::from_json(&text)?),
        Schema::Packing => AnyInstance::Packing(PackingInstance::from_json(&text)?),
        Schema::Multiround => AnyInstance::MultiRound(MultiRoundInstance::from_json(&text)?),
    })
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("instance serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// wire formats

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
enum RawId {
    Index(u64),
    Name(String),
}

impl RawId {
    fn key(&self) -> String {
        match self {
            RawId::Index(i) => i.to_string(),
            RawId::Name(s) => s.clone(),
        }
    }
}

fn resolve_ids(ids: &[RawId], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::new();
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.key(), i).is_some() {
            return Err(Error::invalid(format!(
                "duplicate {what} id {:?}",
                id.key()
            )));
        }
    }
    Ok(map)
}

fn lookup(map: &HashMap<String, usize>, id: &RawId, what: &str) -> Result<usize> {
    map.get(&id.key())
        .copied()
        .ok_or_else(|| Error::invalid(format!("unknown {what} id {:?}", id.key())))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawKind {
    #[default]
    General,
    /// 0 = side A, 1 = side B, one entry per vertex.
    Bipartite(Vec<u8>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVertex {
    id: RawId,
    t: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    u: RawId,
    v: RawId,
    p: f64,
    w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMatching {
    #[serde(default)]
    kind: RawKind,
    vertices: Vec<RawVertex>,
    edges: Vec<RawEdge>,
}

impl RawMatching {
    fn resolve(self) -> Result<MatchingInstance> {
        let ids: Vec<RawId> = self.vertices.iter().map(|v| v.id.clone()).collect();
        let map = resolve_ids(&ids, "vertex")?;
        let patience = self.vertices.iter().map(|v| v.t).collect();
        let kind = match self.kind {
            RawKind::General => GraphKind::General,
            RawKind::Bipartite(sides) => GraphKind::Bipartite(
                sides
                    .iter()
                    .map(|&s| match s {
                        0 => Ok(Side::A),
                        1 => Ok(Side::B),
                        other => Err(Error::invalid(format!(
                            "side label must be 0 or 1, got {other}"
                        ))),
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        let edges = self
            .edges
            .iter()
            .map(|e| {
                Ok(EdgeSpec {
                    u: lookup(&map, &e.u, "vertex")?,
                    v: lookup(&map, &e.v, "vertex")?,
                    prob: e.p,
                    weight: e.w,
                })
            })
            .collect::<Result<_>>()?;
        MatchingInstance::new(kind, patience, edges)
    }

    fn from_instance(inst: &MatchingInstance) -> Self {
        let kind = match inst.kind() {
            GraphKind::General => RawKind::General,
            GraphKind::Bipartite(sides) => {
                RawKind::Bipartite(sides.iter().map(|s| (*s == Side::B) as u8).collect())
            }
        };
        RawMatching {
            kind,
            vertices: inst
                .vertices()
                .iter()
                .map(|v| RawVertex {
                    id: RawId::Index(v.id as u64),
                    t: v.patience,
                })
                .collect(),
            edges: inst
                .edges()
                .iter()
                .map(|e| RawEdge {
                    u: RawId::Index(e.u as u64),
                    v: RawId::Index(e.v as u64),
                    p: e.prob,
                    w: e.weight,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMultiRound {
    #[serde(flatten)]
    graph: RawMatching,
    k: u32,
    #[serde(rename = "C")]
    c: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawType {
    id: RawId,
    e: f64,
    t: u32,
    p: IndexMap<String, f64>,
    w: IndexMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOnline {
    items: Vec<RawId>,
    types: Vec<RawType>,
    n: u32,
}

impl RawOnline {
    fn resolve(self) -> Result<OnlineInstance> {
        let items = resolve_ids(&self.items, "item")?;
        let type_ids: Vec<RawId> = self.types.iter().map(|t| t.id.clone()).collect();
        resolve_ids(&type_ids, "buyer type")?;
        let n_items = self.items.len();
        let row = |m: &IndexMap<String, f64>, b: usize, what: &str| -> Result<Vec<f64>> {
            let mut out = vec![f64::NAN; n_items];
            for (key, &val) in m {
                let a = *items.get(key).ok_or_else(|| {
                    Error::invalid(format!("buyer type {b}: {what} names unknown item {key:?}"))
                })?;
                out[a] = val;
            }
            if let Some(a) = out.iter().position(|x| x.is_nan()) {
                return Err(Error::invalid(format!(
                    "buyer type {b}: {what} missing item {a}"
                )));
            }
            Ok(out)
        };
        let types = self
            .types
            .iter()
            .enumerate()
            .map(|(b, t)| {
                Ok(BuyerType {
                    id: b,
                    expected_count: t.e,
                    patience: t.t,
                    probs: row(&t.p, b, "p")?,
                    weights: row(&t.w, b, "w")?,
                })
            })
            .collect::<Result<_>>()?;
        OnlineInstance::new(n_items, types, self.n)
    }

    fn from_instance(inst: &OnlineInstance) -> Self {
        let row = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(a, &x)| (a.to_string(), x))
                .collect()
        };
        RawOnline {
            items: (0..inst.n_items())
                .map(|a| RawId::Index(a as u64))
                .collect(),
            types: inst
                .buyer_types()
                .iter()
                .map(|t| RawType {
                    id: RawId::Index(t.id as u64),
                    e: t.expected_count,
                    t: t.patience,
                    p: row(&t.probs),
                    w: row(&t.weights),
                })
                .collect(),
            n: inst.arrivals(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    pr: f64,
    ones: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    w: f64,
    support: Vec<usize>,
    dist: Vec<RawAtom>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPacking {
    d: usize,
    b: Vec<u32>,
    k: usize,
    items: Vec<RawItem>,
}

impl RawPacking {
    fn resolve(self) -> Result<PackingInstance> {
        if self.b.len() != self.d {
            return Err(Error::invalid(format!(
                "capacity has {} entries but d = {}",
                self.b.len(),
                self.d
            )));
        }
        let items = self
            .items
            .into_iter()
            .map(|it| PackingItem {
                mean_value: it.w,
                support: it.support,
                size_dist: it
                    .dist
                    .into_iter()
                    .map(|a| SizeAtom {
                        prob: a.pr,
                        ones: a.ones,
                    })
                    .collect(),
            })
            .collect();
        PackingInstance::new(self.b, items, self.k)
    }

    fn from_instance(inst: &PackingInstance) -> Self {
        RawPacking {
            d: inst.dimension(),
            b: inst.capacity().to_vec(),
            k: inst.sparsity(),
            items: inst
                .items()
                .iter()
                .map(|it| RawItem {
                    w: it.mean_value,
                    support: it.support.clone(),
                    dist: it
                        .size_dist
                        .iter()
                        .map(|a| RawAtom {
                            pr: a.prob,
                            ones: a.ones.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// reduction

/// Encodes stochastic matching as stochastic 4-set packing.
///
/// Coordinates `0..n` track whether a vertex is free and `n..2n` count probes.
/// Edge `(i, j)` becomes an item with support `{i, j, n+i, n+j}` whose size is
/// `e_i + e_j + e_{n+i} + e_{n+j}` on success and `e_{n+i} + e_{n+j}` on
/// failure. The item's mean value is `p * w`: the edge pays `w` only when its
/// probe succeeds.
pub fn matching_to_packing(inst: &MatchingInstance) -> PackingInstance {
    let n = inst.n_vertices();
    let mut capacity = vec![1u32; n];
    capacity.extend(inst.vertices().iter().map(|v| v.patience));
    let items = inst
        .edges()
        .iter()
        .map(|e| {
            let (i, j) = (e.u.min(e.v), e.u.max(e.v));
            let hit = vec![i, j, n + i, n + j];
            let miss = vec![n + i, n + j];
            let size_dist = if e.prob >= 1.0 {
                vec![SizeAtom {
                    prob: 1.0,
                    ones: hit.clone(),
                }]
            } else if e.prob <= 0.0 {
                vec![SizeAtom {
                    prob: 1.0,
                    ones: miss,
                }]
            } else {
                vec![
                    SizeAtom {
                        prob: e.prob,
                        ones: hit.clone(),
                    },
                    SizeAtom {
                        prob: 1.0 - e.prob,
                        ones: miss,
                    },
                ]
            };
            PackingItem {
                mean_value: e.prob * e.weight,
                support: hit,
                size_dist,
            }
        })
        .collect();
    PackingInstance::new(capacity, items, 4).expect("reduction image is valid")
}

// ---------------------------------------------------------------------------
// generators

/// Parameters of the random matching generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingGenSpec {
    pub n_vertices: usize,
    pub edge_density: f64,
    pub prob_range: (f64, f64),
    pub weight_range: (f64, f64),
    pub patience_range: (u32, u32),
    #[serde(default)]
    pub bipartite: bool,
}

impl Default for MatchingGenSpec {
    fn default() -> Self {
        MatchingGenSpec {
            n_vertices: 4,
            edge_density: 0.5,
            prob_range: (0.0, 1.0),
            weight_range: (1.0, 1.0),
            patience_range: (1, 2),
            bipartite: false,
        }
    }
}

fn draw(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.gen();
    if hi > lo {
        lo + (hi - lo) * u
    } else {
        lo
    }
}

fn check_range(r: (f64, f64), floor: f64, ceil: f64, what: &str) -> Result<()> {
    if !(r.0 <= r.1 && r.0 >= floor && r.1 <= ceil) {
        return Err(Error::invalid(format!(
            "{what} range {r:?} is not within [{floor}, {ceil}]"
        )));
    }
    Ok(())
}

/// Random graph where each admissible vertex pair becomes an edge with
/// probability `edge_density`. Bipartite graphs put the first `ceil(n/2)`
/// vertices on side A. Pure function of `seed`.
pub fn generate_random_matching(spec: &MatchingGenSpec, seed: u64) -> Result<MatchingInstance> {
    check_range(
        (spec.edge_density, spec.edge_density),
        0.0,
        1.0,
        "edge density",
    )?;
    check_range(spec.prob_range, 0.0, 1.0, "probability")?;
    check_range(spec.weight_range, 0.0, f64::MAX, "weight")?;
    let (tlo, thi) = spec.patience_range;
    if tlo < 1 || tlo > thi {
        return Err(Error::invalid(format!(
            "patience range ({tlo}, {thi}) invalid"
        )));
    }
    let n = spec.n_vertices;
    let mut rng = substream(seed, "generate_random_matching", 0);
    let half = n.div_ceil(2);
    let sides: Vec<Side> = (0..n)
        .map(|v| if v < half { Side::A } else { Side::B })
        .collect();
    let patience = (0..n).map(|_| rng.gen_range(tlo..=thi)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if spec.bipartite && sides[u] == sides[v] {
                continue;
            }
            if rng.gen::<f64>() < spec.edge_density {
                let prob = draw(&mut rng, spec.prob_range);
                let weight = draw(&mut rng, spec.weight_range);
                edges.push(EdgeSpec { u, v, prob, weight });
            }
        }
    }
    let kind = if spec.bipartite {
        GraphKind::Bipartite(sides)
    } else {
        GraphKind::General
    };
    MatchingInstance::new(kind, patience, edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineGenSpec {
    pub n_items: usize,
    pub n_types: usize,
    /// Each type's expected count is drawn uniformly from `1..=max_expected_count`.
    pub max_expected_count: u32,
    pub prob_range: (f64, f64),
    pub weight_range: (f64, f64),
    pub patience_range: (u32, u32),
}

impl Default for OnlineGenSpec {
    fn default() -> Self {
        OnlineGenSpec {
            n_items: 3,
            n_types: 2,
            max_expected_count: 2,
            prob_range: (0.2, 1.0),
            weight_range: (1.0, 1.0),
            patience_range: (1, 2),
        }
    }
}

pub fn generate_random_online(spec: &OnlineGenSpec, seed: u64) -> Result<OnlineInstance> {
    check_range(spec.prob_range, 0.0, 1.0, "probability")?;
    check_range(spec.weight_range, 0.0, f64::MAX, "weight")?;
    let (tlo, thi) = spec.patience_range;
    if tlo < 1 || tlo > thi || spec.max_expected_count < 1 || spec.n_types < 1 {
        return Err(Error::invalid(
            "online generator: invalid patience/count/type settings",
        ));
    }
    let mut rng = substream(seed, "generate_random_online", 0);
    let types: Vec<BuyerType> = (0..spec.n_types)
        .map(|id| BuyerType {
            id,
            expected_count: rng.gen_range(1..=spec.max_expected_count) as f64,
            patience: rng.gen_range(tlo..=thi),
            probs: (0..spec.n_items)
                .map(|_| draw(&mut rng, spec.prob_range))
                .collect(),
            weights: (0..spec.n_items)
                .map(|_| draw(&mut rng, spec.weight_range))
                .collect(),
        })
        .collect();
    let n = types.iter().map(|t| t.expected_count as u32).sum();
    OnlineInstance::new(spec.n_items, types, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingGenSpec {
    pub dimension: usize,
    pub n_items: usize,
    pub sparsity: usize,
    pub capacity_range: (u32, u32),
    /// Number of atoms in every size distribution.
    pub atoms: usize,
    pub value_range: (f64, f64),
}

impl Default for PackingGenSpec {
    fn default() -> Self {
        PackingGenSpec {
            dimension: 3,
            n_items: 4,
            sparsity: 2,
            capacity_range: (1, 2),
            atoms: 2,
            value_range: (0.5, 1.5),
        }
    }
}

/// Random packing instance: every item gets a uniformly random support of
/// exactly `sparsity` coordinates and `atoms` random sub-vectors of it.
pub fn generate_random_packing(spec: &PackingGenSpec, seed: u64) -> Result<PackingInstance> {
    check_range(spec.value_range, 0.0, f64::MAX, "value")?;
    let (blo, bhi) = spec.capacity_range;
    if spec.sparsity > spec.dimension || spec.atoms < 1 || blo < 1 || blo > bhi {
        return Err(Error::invalid(
            "packing generator: invalid sparsity/atoms/capacity settings",
        ));
    }
    let mut rng = substream(seed, "generate_random_packing", 0);
    let capacity = (0..spec.dimension)
        .map(|_| rng.gen_range(blo..=bhi))
        .collect();
    let items = (0..spec.n_items)
        .map(|_| {
            let mut support = sample_indices(&mut rng, spec.dimension, spec.sparsity).into_vec();
            support.sort_unstable();
            let raw: Vec<f64> = (0..spec.atoms).map(|_| rng.gen::<f64>() + 0.05).collect();
            let total: f64 = raw.iter().sum();
            let mut probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let head: f64 = probs[..spec.atoms - 1].iter().sum();
            probs[spec.atoms - 1] = (1.0 - head).max(0.0);
            let size_dist = probs
                .into_iter()
                .map(|prob| SizeAtom {
                    prob,
                    ones: support
                        .iter()
                        .copied()
                        .filter(|_| rng.gen_bool(0.5))
                        .collect(),
                })
                .collect();
            PackingItem {
                mean_value: draw(&mut rng, spec.value_range),
                support,
                size_dist,
            }
        })
        .collect();
    PackingInstance::new(capacity, items, spec.sparsity)
}
