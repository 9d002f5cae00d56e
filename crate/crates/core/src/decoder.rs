//! Decoder graphs over time windows, and the decoders that run on them.
//!
//! Vertices are syndrome bits `(f, t)` for rounds `t` in a window
//! `[t_a, t_b)`, plus one virtual boundary vertex. Edges are data faults
//! (two faces, same round) and type-I measurement faults (one face, rounds
//! `t` and `t + 1`). Type-II faults have no edge of their own. In an open
//! window the type-I faults of round `t_b − 1` become open edges ending on the
//! boundary vertex.
//!
//! Vertex ids are `(t − t_a)·|F| + f`; the boundary is the last id.

mod blossom;
mod oracle;
mod union_find;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit_noise::NoiseParams;
use crate::css::CheckType;
use crate::error::{Error, Result};
use crate::spacetime::{ErrorHistory, Fault, SyndromeHistory};
use crate::toric_partition::{SectorSchedule, ToricSchedule};

pub use blossom::max_weight_matching;
pub use oracle::{matching_oracle_weight, mwe_oracle, DEFAULT_ORACLE_BUDGET};
pub use union_find::union_find_decode;

/// Rounds `[start, end)`. An open window has open edges at `end − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: u32,
    pub end: u32,
    pub open: bool,
}

impl Window {
    pub fn new(start: u32, end: u32, open: bool) -> Result<Self> {
        if start == 0 || start >= end {
            return Err(Error::Domain(format!("malformed window [{start}, {end})")));
        }
        Ok(Window { start, end, open })
    }

    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, t: u32) -> bool {
        self.start <= t && t < self.end
    }

    /// Whether round `t` of this window carries measurement faults.
    fn has_measurements(&self, t: u32) -> bool {
        t + 1 < self.end || self.open
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub u: u32,
    /// The boundary vertex for open edges.
    pub v: u32,
    pub weight: u32,
    pub fault: Fault,
    pub open: bool,
}

/// Per-round weight tables, indexed by `t mod period`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    data: Vec<Vec<u32>>,
    meas: Vec<Vec<u32>>,
}

const WEIGHT_SCALE: f64 = 16.0;
const MAX_WEIGHT: u32 = 1 << 12;

fn log_weight(q: f64) -> u32 {
    if q <= 0.0 {
        return MAX_WEIGHT;
    }
    let q = q.min(0.499);
    let w = (WEIGHT_SCALE * ((1.0 - q) / q).ln()).round();
    (w as u32).clamp(1, MAX_WEIGHT)
}

impl WeightTable {
    /// First-order fault marginals of the circuit noise model.
    ///
    /// A data fault on qubit `e` collects the gate errors of every CNOT on
    /// `e` in one Z round and one X round (8/15 of them act on the relevant
    /// Pauli component), plus preparation errors of the opposite sector's
    /// ancillas that propagate onto `e`. A measurement fault collects the
    /// readout flip, the preparation error and the gate errors on the ancilla.
    pub fn from_noise(sched: &ToricSchedule, kind: CheckType, params: &NoiseParams) -> Self {
        let own = sched.sector(kind);
        let other = sched.sector(kind.flip());
        let period = own.period();
        let (p, p1) = (params.p, params.p1);
        let mut data = Vec::new();
        let mut meas = Vec::new();
        for r in 0..period {
            let t = if r == 0 { period } else { r };
            let mut q = vec![0.0; own.num_qubits()];
            for (round, prep) in [(own.round(t), false), (other.round(t), true)] {
                for qubits in &round.ancilla_qubits {
                    for &e in qubits {
                        q[e as usize] += 8.0 / 15.0 * p;
                        if prep {
                            q[e as usize] += 2.0 / 3.0 * p1;
                        }
                    }
                }
            }
            data.push(q.into_iter().map(log_weight).collect());
            meas.push(
                own.round(t)
                    .ancilla_qubits
                    .iter()
                    .map(|qs| log_weight(params.measurement_flip() + 2.0 / 3.0 * p1 + 8.0 / 15.0 * p * qs.len() as f64))
                    .collect(),
            );
        }
        WeightTable { data, meas }
    }

    pub fn data_weight(&self, qubit: u32, t: u32) -> u32 {
        self.data[t as usize % self.data.len()][qubit as usize]
    }

    pub fn meas_weight(&self, ancilla: u32, t: u32) -> u32 {
        self.meas[t as usize % self.meas.len()][ancilla as usize]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Weights {
    #[default]
    Unit,
    Table(Arc<WeightTable>),
}

impl Weights {
    fn data(&self, qubit: u32, t: u32) -> u32 {
        match self {
            Weights::Unit => 1,
            Weights::Table(w) => w.data_weight(qubit, t),
        }
    }

    fn meas(&self, ancilla: u32, t: u32) -> u32 {
        match self {
            Weights::Unit => 1,
            Weights::Table(w) => w.meas_weight(ancilla, t),
        }
    }
}

/// Decoding graph of one check type over one window.
#[derive(Clone, Debug)]
pub struct DecoderGraph {
    kind: CheckType,
    num_checks: usize,
    window: Window,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<u32>>,
    /// Connected component of each real vertex, ignoring the boundary.
    component: Vec<u32>,
}

/// Builds the decoder graph of `sched` over `window`.
pub fn build_graph(sched: &SectorSchedule, window: Window, weights: &Weights) -> DecoderGraph {
    let nc = sched.num_checks();
    let n = nc * window.len() as usize;
    let boundary = n as u32;
    let vid = |c: u32, t: u32| (t - window.start) * nc as u32 + c;
    let mut edges = Vec::new();
    for t in window.start..window.end {
        for (e, checks) in sched.graph.qubit_checks.iter().enumerate() {
            edges.push(GraphEdge {
                u: vid(checks[0], t),
                v: vid(checks[1], t),
                weight: weights.data(e as u32, t),
                fault: Fault::Data { qubit: e as u32, t },
                open: false,
            });
        }
        if !window.has_measurements(t) {
            continue;
        }
        let round = sched.round(t);
        for b in round.split_ancillas() {
            let f = round.ancilla_checks[b][0];
            let open = t + 1 == window.end;
            edges.push(GraphEdge {
                u: vid(f, t),
                v: if open { boundary } else { vid(f, t + 1) },
                weight: weights.meas(b as u32, t),
                fault: Fault::Measurement { ancilla: b as u32, t },
                open,
            });
        }
    }
    let mut adjacency = vec![Vec::new(); n + 1];
    for (k, e) in edges.iter().enumerate() {
        adjacency[e.u as usize].push(k as u32);
        adjacency[e.v as usize].push(k as u32);
    }
    let mut component = vec![u32::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if component[s] != u32::MAX {
            continue;
        }
        component[s] = next;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &k in &adjacency[v] {
                let e = &edges[k as usize];
                if e.open {
                    continue;
                }
                let w = (e.u ^ e.v ^ v as u32) as usize;
                if component[w] == u32::MAX {
                    component[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    DecoderGraph {
        kind: sched.kind(),
        num_checks: nc,
        window,
        edges,
        adjacency,
        component,
    }
}

impl DecoderGraph {
    pub fn kind(&self) -> CheckType {
        self.kind
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Real vertices, excluding the boundary.
    pub fn num_vertices(&self) -> usize {
        self.component.len()
    }

    pub fn boundary(&self) -> u32 {
        self.num_vertices() as u32
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn incident(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn vertex(&self, check: usize, t: u32) -> u32 {
        ((t - self.window.start) as usize * self.num_checks + check) as u32
    }

    /// `(check, round)` of a real vertex.
    pub fn vertex_coords(&self, v: u32) -> (usize, u32) {
        let v = v as usize;
        (v % self.num_checks, self.window.start + (v / self.num_checks) as u32)
    }

    pub fn component(&self, v: u32) -> u32 {
        self.component[v as usize]
    }

    pub fn num_type_one(&self) -> usize {
        self.edges.iter().filter(|e| matches!(e.fault, Fault::Measurement { .. })).count()
    }

    pub fn num_open(&self) -> usize {
        self.edges.iter().filter(|e| e.open).count()
    }

    /// Defect vertices; a defect outside the window is an error.
    pub fn defect_vertices(&self, defects: &SyndromeHistory) -> Result<Vec<u32>> {
        defects
            .defects()
            .map(|(c, t)| {
                if self.window.contains(t) && c < self.num_checks {
                    Ok(self.vertex(c, t))
                } else {
                    Err(Error::Domain(format!(
                        "defect ({c}, {t}) outside window [{}, {})",
                        self.window.start, self.window.end
                    )))
                }
            })
            .collect()
    }

    /// Defect vertices of the rounds inside the window; others are ignored.
    pub fn window_defects(&self, defects: &SyndromeHistory) -> Vec<u32> {
        let mut out = Vec::new();
        for t in self.window.start..self.window.end.min(defects.horizon() + 1) {
            out.extend(defects.round(t).iter_ones().map(|c| self.vertex(c, t)));
        }
        out
    }

    /// Defects `Σψ′` of a correction restricted to this window, as vertices.
    pub fn boundary_of(&self, correction: &ErrorHistory) -> Vec<u32> {
        let mut hits = vec![false; self.num_vertices() + 1];
        for f in correction.iter() {
            if let Some(k) = self.edge_of(f) {
                let e = &self.edges[k];
                hits[e.u as usize] ^= true;
                hits[e.v as usize] ^= true;
            }
        }
        (0..self.num_vertices() as u32).filter(|&v| hits[v as usize]).collect()
    }

    /// Index of the edge representing `f`, if it is one.
    pub fn edge_of(&self, f: &Fault) -> Option<usize> {
        self.edges.binary_search_by(|e| fault_order(&e.fault).cmp(&fault_order(f))).ok()
    }

    /// Plain-text edge list: a header line, then `u v weight open` per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!(
            "# kind={} window=[{},{}) vertices={} boundary={}\n",
            match self.kind {
                CheckType::Z => "z",
                CheckType::X => "x",
            },
            self.window.start,
            self.window.end,
            self.num_vertices(),
            self.boundary()
        );
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {} {}", e.u, e.v, e.weight, e.open as u8);
        }
        s
    }
}

/// Edges are emitted in round-major order, data before measurement, by index.
fn fault_order(f: &Fault) -> (u32, u8, u32) {
    match *f {
        Fault::Data { qubit, t } => (t, 0, qubit),
        Fault::Measurement { ancilla, t } => (t, 1, ancilla),
    }
}

/// A correction chain and its total weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub correction: ErrorHistory,
    pub weight: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    #[default]
    Mwpm,
    UnionFind,
}

impl DecoderKind {
    pub fn name(&self) -> &'static str {
        match self {
            DecoderKind::Mwpm => "mwpm",
            DecoderKind::UnionFind => "union_find",
        }
    }

    /// Decodes a list of defect vertices.
    pub fn decode_vertices(&self, g: &DecoderGraph, defects: &[u32]) -> Result<Matching> {
        match self {
            DecoderKind::Mwpm => mwpm_vertices(g, defects),
            DecoderKind::UnionFind => union_find::decode_vertices(g, defects),
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mwpm" => Ok(DecoderKind::Mwpm),
            "union_find" | "union-find" | "uf" => Ok(DecoderKind::UnionFind),
            other => Err(Error::Config(format!("unknown decoder `{other}`"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Shortest paths
// ---------------------------------------------------------------------------

/// Reusable Dijkstra state. Paths never pass through the boundary vertex.
pub(crate) struct Dijkstra {
    dist: Vec<u64>,
    pred: Vec<u32>,
    touched: Vec<u32>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

impl Dijkstra {
    pub(crate) fn new(g: &DecoderGraph) -> Self {
        Dijkstra {
            dist: vec![u64::MAX; g.num_vertices() + 1],
            pred: vec![u32::MAX; g.num_vertices() + 1],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    /// Settles vertices from `src` until every flagged target is settled.
    pub(crate) fn run(&mut self, g: &DecoderGraph, src: u32, is_target: &[bool], remaining: usize) {
        self.run_bounded(g, src, is_target, remaining, u64::MAX);
    }

    /// As [`Dijkstra::run`], but stops once distances exceed `limit`. The
    /// boundary is only expanded when it is the source.
    pub(crate) fn run_bounded(&mut self, g: &DecoderGraph, src: u32, is_target: &[bool], mut remaining: usize, limit: u64) {
        for &v in &self.touched {
            self.dist[v as usize] = u64::MAX;
            self.pred[v as usize] = u32::MAX;
        }
        self.touched.clear();
        self.heap.clear();
        self.dist[src as usize] = 0;
        self.touched.push(src);
        self.heap.push(Reverse((0, src)));
        let boundary = g.boundary();
        while let Some(Reverse((d, v))) = self.heap.pop() {
            if d > self.dist[v as usize] {
                continue;
            }
            if d > limit {
                break;
            }
            if is_target[v as usize] {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            if v == boundary && v != src {
                continue;
            }
            for &k in g.incident(v) {
                let e = &g.edges[k as usize];
                let w = e.u ^ e.v ^ v;
                let nd = d + e.weight as u64;
                if nd < self.dist[w as usize] {
                    if self.dist[w as usize] == u64::MAX {
                        self.touched.push(w);
                    }
                    self.dist[w as usize] = nd;
                    self.pred[w as usize] = k;
                    self.heap.push(Reverse((nd, w)));
                }
            }
        }
    }

    pub(crate) fn dist(&self, v: u32) -> Option<u64> {
        let d = self.dist[v as usize];
        (d != u64::MAX).then_some(d)
    }

    /// Edge ids of the shortest path from the last source to `v`.
    pub(crate) fn path(&self, g: &DecoderGraph, mut v: u32) -> Vec<u32> {
        let mut out = Vec::new();
        while self.pred[v as usize] != u32::MAX {
            let k = self.pred[v as usize];
            out.push(k);
            let e = &g.edges[k as usize];
            v = e.u ^ e.v ^ v;
        }
        out
    }
}

/// Pairwise and boundary distances among the defects of one component.
/// Pairs that can never beat matching both to the boundary are `None`.
pub(crate) struct DefectDistances {
    pub(crate) pair: Vec<Vec<Option<u64>>>,
    pub(crate) boundary: Vec<Option<u64>>,
}

pub(crate) fn defect_distances(g: &DecoderGraph, defects: &[u32], dj: &mut Dijkstra) -> DefectDistances {
    let k = defects.len();
    let mut is_target = vec![false; g.num_vertices() + 1];
    for &d in defects {
        is_target[d as usize] = true;
    }
    dj.run(g, g.boundary(), &is_target, k);
    let boundary: Vec<Option<u64>> = defects.iter().map(|&d| dj.dist(d)).collect();
    let farthest = boundary.iter().flatten().copied().max();
    is_target[g.boundary() as usize] = true;
    let mut pair = vec![vec![None; k]; k];
    for (i, &d) in defects.iter().enumerate() {
        // Pairs farther apart than their two boundary distances never match.
        let limit = boundary[i].zip(farthest).map_or(u64::MAX, |(a, b)| a + b);
        dj.run_bounded(g, d, &is_target, k + 1, limit);
        for (j, &d2) in defects.iter().enumerate() {
            pair[i][j] = dj.dist(d2).filter(|&x| x <= limit);
        }
    }
    DefectDistances { pair, boundary }
}

fn check_defects(g: &DecoderGraph, defects: &[u32]) -> Result<Vec<u32>> {
    let mut v = defects.to_vec();
    v.sort_unstable();
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("repeated defect vertex".into()));
    }
    if v.last().is_some_and(|&x| x as usize >= g.num_vertices()) {
        return Err(Error::Domain("defect vertex out of range".into()));
    }
    Ok(v)
}

/// Groups sorted defects by connected component.
pub(crate) fn group_by_component(g: &DecoderGraph, defects: &[u32]) -> Vec<Vec<u32>> {
    let mut groups: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    for &d in defects {
        groups.entry(g.component(d)).or_default().push(d);
    }
    groups.into_values().collect()
}

// ---------------------------------------------------------------------------
// Minimum-weight perfect matching
// ---------------------------------------------------------------------------

/// Exact minimum-weight perfect matching of the defects, pairwise or to the
/// boundary, with path weights from shortest paths.
pub fn mwpm_decode(g: &DecoderGraph, defects: &SyndromeHistory) -> Result<Matching> {
    let v = g.defect_vertices(defects)?;
    mwpm_vertices(g, &v)
}

pub(crate) fn mwpm_vertices(g: &DecoderGraph, defects: &[u32]) -> Result<Matching> {
    let defects = check_defects(g, defects)?;
    let mut dj = Dijkstra::new(g);
    let mut used = vec![false; g.edges.len()];
    for group in group_by_component(g, &defects) {
        let dd = defect_distances(g, &group, &mut dj);
        let pairs = match_component(&dd)?.ok_or_else(|| {
            Error::Domain(format!(
                "defects {:?} admit no perfect matching",
                group.iter().map(|&v| g.vertex_coords(v)).collect::<Vec<_>>()
            ))
        })?;
        let mut is_target = vec![false; g.num_vertices() + 1];
        for (i, j) in pairs {
            let target = j.map_or(g.boundary(), |j| group[j]);
            is_target[target as usize] = true;
            dj.run(g, group[i], &is_target, 1);
            is_target[target as usize] = false;
            for k in dj.path(g, target) {
                used[k as usize] ^= true;
            }
        }
    }
    Ok(matching_from_edges(g, &used))
}

pub(crate) fn matching_from_edges(g: &DecoderGraph, used: &[bool]) -> Matching {
    let mut correction = ErrorHistory::new();
    let mut weight = 0;
    for (k, e) in g.edges.iter().enumerate() {
        if used[k] {
            correction.toggle(e.fault).expect("graph faults have rounds ≥ 1");
            weight += e.weight as u64;
        }
    }
    Matching { correction, weight }
}

/// Solves one component: pairs `(i, Some(j))` or `(i, None)` for boundary.
fn match_component(dd: &DefectDistances) -> Result<Option<Vec<(usize, Option<usize>)>>> {
    let k = dd.boundary.len();
    if k == 0 {
        return Ok(Some(Vec::new()));
    }
    let max_d = dd
        .pair
        .iter()
        .flatten()
        .chain(dd.boundary.iter())
        .flatten()
        .copied()
        .max()
        .unwrap_or(0);
    let big = i64::try_from(max_d).map_err(|_| Error::Domain("path weight overflow".into()))? + 1;
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if let Some(d) = dd.pair[i][j] {
                // Never better than sending both defects to the boundary.
                let via_boundary = dd.boundary[i].zip(dd.boundary[j]).map(|(a, b)| a + b);
                if via_boundary.is_none_or(|b| d <= b) {
                    edges.push((i, j, big - d as i64));
                }
            }
        }
        if let Some(d) = dd.boundary[i] {
            edges.push((i, k + i, big - d as i64));
        }
    }
    if dd.boundary.iter().any(|b| b.is_some()) {
        for i in 0..k {
            for j in i + 1..k {
                edges.push((k + i, k + j, big));
            }
        }
    }
    let mate = max_weight_matching(2 * k, &edges, true);
    let mut pairs = Vec::new();
    for (i, m) in mate.iter().enumerate().take(k) {
        match *m {
            None => return Ok(None),
            Some(j) if j >= k => pairs.push((i, None)),
            Some(j) if j > i => pairs.push((i, Some(j))),
            Some(_) => {}
        }
    }
    Ok(Some(pairs))
}

// ---------------------------------------------------------------------------
// Distances between time slices
// ---------------------------------------------------------------------------

/// `d(t, t′)` for every `t′ ∈ [t, t_max]`: the fewest edges on a path from
/// slice `t` to slice `t′`, or `None` if the slices are disconnected.
pub fn slice_distances(sched: &SectorSchedule, t: u32, t_max: u32) -> Vec<Option<u32>> {
    assert!(t >= 1 && t_max >= t);
    let nc = sched.num_checks();
    let span = (t_max - t + 1) as usize;
    let mut dist = vec![u32::MAX; nc * span];
    let mut best = vec![None; span];
    let mut queue = VecDeque::new();
    for c in 0..nc {
        dist[c] = 0;
        queue.push_back((c, t));
    }
    best[0] = Some(0);
    // Faces with a type-I edge towards the next round, per period slot.
    let period = sched.period();
    let split: Vec<Vec<bool>> = (0..period)
        .map(|r| {
            let round = sched.round(if r == 0 { period } else { r });
            let mut s = vec![false; nc];
            for b in round.split_ancillas() {
                s[round.ancilla_checks[b][0] as usize] = true;
            }
            s
        })
        .collect();
    let idx = |c: usize, tt: u32| (tt - t) as usize * nc + c;
    while let Some((c, tt)) = queue.pop_front() {
        let d = dist[idx(c, tt)];
        let mut visit = |c2: usize, t2: u32, queue: &mut VecDeque<(usize, u32)>| {
            let i = idx(c2, t2);
            if dist[i] == u32::MAX {
                dist[i] = d + 1;
                let slot = (t2 - t) as usize;
                if best[slot].is_none() {
                    best[slot] = Some(d + 1);
                }
                queue.push_back((c2, t2));
            }
        };
        for &e in &sched.graph.check_qubits[c] {
            for &c2 in &sched.graph.qubit_checks[e as usize] {
                if c2 as usize != c {
                    visit(c2 as usize, tt, &mut queue);
                }
            }
        }
        if tt < t_max && split[(tt % period) as usize][c] {
            visit(c, tt + 1, &mut queue);
        }
        if tt > t && split[((tt - 1) % period) as usize][c] {
            visit(c, tt - 1, &mut queue);
        }
    }
    best
}

/// `d(t, t′)` on the decoder graph; `None` when disconnected.
pub fn graph_distance(sched: &SectorSchedule, t: u32, t2: u32) -> Option<u32> {
    let (a, b) = if t <= t2 { (t, t2) } else { (t2, t) };
    slice_distances(sched, a, b)[(b - a) as usize]
}
