//! Weighted union-find decoding.
//!
//! An edge of weight `w` has length `2w` half-steps. Every odd cluster that
//! does not touch the boundary grows by the same amount on all of its
//! frontier edges, and an edge grown from both sides grows twice as fast.
//! Each growth phase advances by exactly the amount needed to complete the
//! next edge, so a phase always fuses at least one edge. Once no odd cluster
//! remains, the grown edges are peeled: take a spanning forest (rooted at the
//! boundary where present) and walk it from the leaves inwards, keeping
//! the edge to the parent whenever the current vertex is still marked.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::spacetime::SyndromeHistory;

use super::{check_defects, matching_from_edges, DecoderGraph, Matching};

/// Weighted union-find decoding; a valid correction, not always minimal.
pub fn union_find_decode(g: &DecoderGraph, defects: &SyndromeHistory) -> Result<Matching> {
    let v = g.defect_vertices(defects)?;
    decode_vertices(g, &v)
}

struct Clusters {
    parent: Vec<u32>,
    odd: Vec<bool>,
    boundary: Vec<bool>,
    size: Vec<u32>,
    frontier: Vec<Option<Vec<u32>>>,
}

impl Clusters {
    fn find(&mut self, mut v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[v as usize] != root {
            let next = self.parent[v as usize];
            self.parent[v as usize] = root;
            v = next;
        }
        root
    }

    fn frontier_of(&mut self, g: &DecoderGraph, r: u32) -> Vec<u32> {
        match self.frontier[r as usize].take() {
            Some(f) => f,
            None if r == g.boundary() => Vec::new(),
            None => g.incident(r).to_vec(),
        }
    }

    fn union(&mut self, g: &DecoderGraph, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        let mut fa = self.frontier_of(g, ra);
        let fb = self.frontier_of(g, rb);
        fa.extend(fb);
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        self.odd[ra as usize] ^= self.odd[rb as usize];
        self.boundary[ra as usize] |= self.boundary[rb as usize];
        self.frontier[ra as usize] = Some(fa);
    }

    fn active(&self, r: u32) -> bool {
        self.odd[r as usize] && !self.boundary[r as usize]
    }
}

pub(crate) fn decode_vertices(g: &DecoderGraph, defects: &[u32]) -> Result<Matching> {
    let defects = check_defects(g, defects)?;
    let n = g.num_vertices() + 1;
    let bnd = g.boundary();
    let edges = g.edges();
    let mut cl = Clusters {
        parent: (0..n as u32).collect(),
        odd: vec![false; n],
        boundary: vec![false; n],
        size: vec![1; n],
        frontier: vec![None; n],
    };
    cl.boundary[bnd as usize] = true;
    for &d in &defects {
        cl.odd[d as usize] = true;
    }
    let mut growth = vec![0u32; edges.len()];
    let full = |k: usize| 2 * edges[k].weight;
    let mut sides = vec![0u8; edges.len()];
    let mut roots: Vec<u32> = defects.clone();
    loop {
        let mut active: Vec<u32> = roots.iter().map(|&v| cl.find(v)).collect();
        active.retain(|&r| cl.active(r));
        active.sort_unstable();
        active.dedup();
        if active.is_empty() {
            break;
        }
        // Prune frontiers and count growing sides per edge.
        let mut touched = Vec::new();
        for &r in &active {
            let mut f = cl.frontier_of(g, r);
            f.retain(|&k| {
                let k = k as usize;
                if growth[k] >= full(k) {
                    return false;
                }
                let (ru, rv) = (cl.find(edges[k].u), cl.find(edges[k].v));
                ru != rv
            });
            for &k in &f {
                if sides[k as usize] == 0 {
                    touched.push(k);
                }
                sides[k as usize] += 1;
            }
            cl.frontier[r as usize] = Some(f);
        }
        if touched.is_empty() {
            return Err(Error::Domain("an odd cluster cannot grow; defects admit no correction".into()));
        }
        touched.sort_unstable();
        touched.dedup();
        let step = touched
            .iter()
            .map(|&k| {
                let k = k as usize;
                let s = sides[k] as u32;
                (full(k) - growth[k]).div_ceil(s)
            })
            .min()
            .expect("nonempty");
        let mut fused = Vec::new();
        for &k in &touched {
            let k = k as usize;
            growth[k] = (growth[k] + step * sides[k] as u32).min(full(k));
            sides[k] = 0;
            if growth[k] == full(k) {
                fused.push(k);
            }
        }
        for k in fused {
            cl.union(g, edges[k].u, edges[k].v);
        }
        roots = active;
    }
    Ok(matching_from_edges(g, &peel(g, &defects, &growth)))
}

/// Spanning-forest peeling over fully grown edges.
fn peel(g: &DecoderGraph, defects: &[u32], growth: &[u32]) -> Vec<bool> {
    let n = g.num_vertices() + 1;
    let edges = g.edges();
    let grown = |k: usize| growth[k] == 2 * edges[k].weight;
    let mut marked = vec![false; n];
    for &d in defects {
        marked[d as usize] = true;
    }
    let mut seen = vec![false; n];
    let mut parent_edge = vec![u32::MAX; n];
    let mut used = vec![false; edges.len()];
    let roots = std::iter::once(g.boundary()).chain(defects.iter().copied());
    for root in roots {
        if seen[root as usize] {
            continue;
        }
        seen[root as usize] = true;
        let mut order = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &k in g.incident(v) {
                if !grown(k as usize) {
                    continue;
                }
                let e = &edges[k as usize];
                let w = e.u ^ e.v ^ v;
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    parent_edge[w as usize] = k;
                    order.push(w);
                    queue.push_back(w);
                }
            }
        }
        for &v in order.iter().skip(1).rev() {
            if marked[v as usize] {
                let k = parent_edge[v as usize];
                let e = &edges[k as usize];
                used[k as usize] = true;
                marked[v as usize] = false;
                let p = e.u ^ e.v ^ v;
                marked[p as usize] ^= true;
            }
        }
    }
    used
}
