//! Exhaustive reference decoders for small instances.

use crate::error::{Error, Result};
use crate::spacetime::{ErrorHistory, Fault, SyndromeHistory};
use crate::toric_partition::SectorSchedule;

use super::{check_defects, defect_distances, group_by_component, DecoderGraph, Dijkstra, Window};

/// Search-node budget of [`mwe_oracle`].
pub const DEFAULT_ORACLE_BUDGET: u64 = 20_000_000;

/// Minimum-weight history over all data and measurement faults in `window`
/// (type-II included) whose syndrome, restricted to the window, equals
/// `defects`. Iterative deepening; the lowest remaining defect must be
/// cleared by one of the faults touching it.
pub fn mwe_oracle(sched: &SectorSchedule, window: Window, defects: &SyndromeHistory, budget: u64) -> Result<ErrorHistory> {
    let nc = sched.num_checks();
    let len = window.len() as usize;
    let mut state = vec![false; nc * len];
    for (c, t) in defects.defects() {
        if !window.contains(t) {
            return Err(Error::Domain(format!("defect ({c}, {t}) outside window")));
        }
        state[(t - window.start) as usize * nc + c] = true;
    }
    // Candidate faults with their in-window vertices, and per-vertex lists.
    let mut faults: Vec<(Fault, Vec<usize>)> = Vec::new();
    for t in window.start..window.end {
        let base = (t - window.start) as usize * nc;
        for (e, checks) in sched.graph.qubit_checks.iter().enumerate() {
            let vs = checks.iter().map(|&c| base + c as usize).collect();
            faults.push((Fault::Data { qubit: e as u32, t }, vs));
        }
        if !window.has_measurements(t) {
            continue;
        }
        for (b, checks) in sched.round(t).ancilla_checks.iter().enumerate() {
            let mut vs: Vec<usize> = checks.iter().map(|&c| base + c as usize).collect();
            if t + 1 < window.end {
                vs.extend(checks.iter().map(|&c| base + nc + c as usize));
            }
            faults.push((Fault::Measurement { ancilla: b as u32, t }, vs));
        }
    }
    let mut touching = vec![Vec::new(); nc * len];
    for (k, (_, vs)) in faults.iter().enumerate() {
        for &v in vs {
            touching[v].push(k);
        }
    }
    let reach = faults.iter().map(|f| f.1.len()).max().unwrap_or(1).max(1);

    struct Search<'a> {
        faults: &'a [(Fault, Vec<usize>)],
        touching: &'a [Vec<usize>],
        reach: usize,
        nodes: u64,
        budget: u64,
        chosen: Vec<usize>,
    }

    impl Search<'_> {
        fn dfs(&mut self, state: &mut [bool], count: usize, depth: usize) -> Result<bool> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::Unsupported("exact decoding exceeded its search budget".into()));
            }
            if count == 0 {
                return Ok(true);
            }
            if depth == 0 || count > depth * self.reach {
                return Ok(false);
            }
            let v = state.iter().position(|&x| x).expect("count > 0");
            for &k in &self.touching[v] {
                let vs = &self.faults[k].1;
                let mut c = count;
                for &u in vs {
                    state[u] ^= true;
                    if state[u] {
                        c += 1;
                    } else {
                        c -= 1;
                    }
                }
                self.chosen.push(k);
                let found = self.dfs(state, c, depth - 1)?;
                if found {
                    return Ok(true);
                }
                self.chosen.pop();
                for &u in vs {
                    state[u] ^= true;
                }
            }
            Ok(false)
        }
    }

    let count = state.iter().filter(|&&x| x).count();
    let mut search = Search {
        faults: &faults,
        touching: &touching,
        reach,
        nodes: 0,
        budget,
        chosen: Vec::new(),
    };
    for depth in 0..=faults.len() {
        if search.dfs(&mut state, count, depth)? {
            return ErrorHistory::from_faults(search.chosen.iter().map(|&k| faults[k].0));
        }
    }
    Err(Error::Domain("defects are not the syndrome of any history in the window".into()))
}

/// Minimum total path weight of a perfect matching of `defects` on `g`
/// (pairs or boundary), by dynamic programming over subsets. Exponential;
/// limited to 20 defects.
pub fn matching_oracle_weight(g: &DecoderGraph, defects: &[u32]) -> Result<u64> {
    let defects = check_defects(g, defects)?;
    if defects.len() > 20 {
        return Err(Error::Unsupported("subset DP limited to 20 defects".into()));
    }
    let mut dj = Dijkstra::new(g);
    let mut total = 0;
    for group in group_by_component(g, &defects) {
        let dd = defect_distances(g, &group, &mut dj);
        let k = group.len();
        let mut dp = vec![u64::MAX; 1 << k];
        dp[0] = 0;
        for mask in 1usize..1 << k {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut best = u64::MAX;
            if let Some(b) = dd.boundary[i] {
                if dp[rest] != u64::MAX {
                    best = best.min(dp[rest] + b);
                }
            }
            let mut others = rest;
            while others != 0 {
                let j = others.trailing_zeros() as usize;
                others &= others - 1;
                if let Some(d) = dd.pair[i][j] {
                    let sub = dp[rest & !(1 << j)];
                    if sub != u64::MAX {
                        best = best.min(sub + d);
                    }
                }
            }
            dp[mask] = best;
        }
        let w = dp[(1 << k) - 1];
        if w == u64::MAX {
            return Err(Error::Domain("defects admit no perfect matching".into()));
        }
        total += w;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{project, syndrome_history};
    use crate::toric_partition::{Family, ToricSchedule};

    #[test]
    fn oracle_basics() {
        let s = ToricSchedule::new(6, Family::Aligned { m: 3 }).unwrap();
        let w = Window::new(1, 4, false).unwrap();
        let empty = SyndromeHistory::zeros(36, 3);
        assert!(mwe_oracle(&s.z, w, &empty, DEFAULT_ORACLE_BUDGET).unwrap().is_empty());
        let d = ErrorHistory::from_faults([Fault::Data { qubit: 5, t: 2 }]).unwrap();
        let syn = syndrome_history(&d, &s.z, 3).unwrap();
        assert_eq!(mwe_oracle(&s.z, w, &syn, DEFAULT_ORACLE_BUDGET).unwrap(), d);
    }

    #[test]
    fn type_two_beats_projection() {
        let s = ToricSchedule::new(6, Family::Aligned { m: 3 }).unwrap();
        let round = s.z.round(2);
        let b = (0..round.num_ancillas()).find(|&b| !round.is_type_one(b)).unwrap();
        let h = ErrorHistory::from_faults([Fault::Measurement { ancilla: b as u32, t: 2 }]).unwrap();
        let syn = syndrome_history(&h, &s.z, 4).unwrap();
        let w = Window::new(1, 5, false).unwrap();
        let best = mwe_oracle(&s.z, w, &syn, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(best.weight(), 1);
        assert_eq!(best, h);
        assert_eq!(project(&h, &s.z).unwrap().weight(), 2);
    }

    #[test]
    fn budget_is_enforced() {
        let s = ToricSchedule::new(6, Family::Shor).unwrap();
        let h = ErrorHistory::from_faults((0..6).map(|k| Fault::Data { qubit: 12 * k, t: 1 + k % 3 })).unwrap();
        let syn = syndrome_history(&h, &s.z, 4).unwrap();
        let w = Window::new(1, 5, false).unwrap();
        assert!(matches!(mwe_oracle(&s.z, w, &syn, 50), Err(Error::Unsupported(_))));
    }
}
