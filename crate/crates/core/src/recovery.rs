//! Overlapping recovery.
//!
//! Boundaries `1 = t₁ < t₂ < ⋯` cut the time axis into segments. Step `i`
//! decodes the syndromes of `[tᵢ, tᵢ₊₂)` on a graph with open edges at
//! `tᵢ₊₂ − 1`, keeps only the faults of the correction with rounds in
//! `[tᵢ, tᵢ₊₁)`, and adds their syndrome to the pending record. A fault at
//! round `tᵢ₊₁` itself belongs to the next segment. A committed measurement
//! fault at `tᵢ₊₁ − 1` changes the pending syndrome at `tᵢ₊₁`.
//!
//! The run ends with a closed window reaching the perfect readout at round
//! `T + 1`.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::circuit_noise::SectorRecord;
use crate::css::CheckGraph;
use crate::decoder::{build_graph, slice_distances, DecoderGraph, DecoderKind, Weights, Window};
use crate::error::{Error, Result};
use crate::f2core::BitVec;
use crate::spacetime::{apply_fault, cumulative_data, project, ErrorHistory, SyndromeHistory};
use crate::toric_partition::SectorSchedule;

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryConfig {
    /// Required segment distance in units of `L`.
    pub alpha: f64,
    pub decoder: DecoderKind,
    /// Explicit boundaries instead of the distance rule.
    pub boundaries: Option<Vec<u32>>,
    /// Record the propagating-error flag of every segment.
    pub track_propagation: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            alpha: 4.0,
            decoder: DecoderKind::Mwpm,
            boundaries: None,
            track_propagation: false,
        }
    }
}

/// Greedy boundaries: `tᵢ₊₁` is the first round with `d(tᵢ, tᵢ₊₁) ≥ αL`.
/// Disconnected slices count as infinitely far apart. The final readout
/// round `T + 1` is the last admissible boundary.
pub fn choose_windows(sched: &SectorSchedule, l: usize, alpha: f64, rounds: u32) -> Result<Vec<u32>> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("α must be a finite number ≥ 1, got {alpha}")));
    }
    if rounds == 0 {
        return Err(Error::Config("need at least one extraction round".into()));
    }
    let need = alpha * l as f64;
    let last = rounds + 1;
    let mut out = vec![1];
    loop {
        let t = *out.last().expect("nonempty");
        if t == last {
            break;
        }
        let d = slice_distances(sched, t, last);
        let next = (1..d.len()).find(|&k| d[k].is_none_or(|x| x as f64 >= need));
        match next {
            Some(k) => out.push(t + k as u32),
            None if out.len() == 1 => {
                return Err(Error::Config(format!(
                    "{rounds} rounds are too few for one window of distance {need} (largest reachable {})",
                    d.last().copied().flatten().unwrap_or(0)
                )))
            }
            None => break,
        }
    }
    Ok(out)
}

/// One decoding step of a plan.
#[derive(Clone, Debug)]
pub struct PlanStep {
    pub window: Window,
    /// Faults with rounds in `[window.start, commit_end)` are applied.
    pub commit_end: u32,
    /// `d(tᵢ, tᵢ₊₁)`, `None` if disconnected or for the final step.
    pub distance: Option<u32>,
    pub graph: Arc<DecoderGraph>,
}

/// Windows and decoder graphs for one check type, shared across trials.
#[derive(Clone, Debug)]
pub struct RecoveryPlan {
    pub rounds: u32,
    pub boundaries: Vec<u32>,
    pub steps: Vec<PlanStep>,
    pub decoder: DecoderKind,
    pub track_propagation: bool,
}

impl RecoveryPlan {
    pub fn new(sched: &SectorSchedule, l: usize, rounds: u32, cfg: &RecoveryConfig, weights: &Weights) -> Result<Self> {
        let end = rounds + 2;
        let boundaries = match &cfg.boundaries {
            Some(b) => {
                if b.first() != Some(&1) || b.windows(2).any(|w| w[0] >= w[1]) || b.last().is_some_and(|&x| x >= end) {
                    return Err(Error::Config(format!(
                        "boundaries must start at 1, increase strictly and stay ≤ {}",
                        rounds + 1
                    )));
                }
                b.clone()
            }
            None => choose_windows(sched, l, cfg.alpha, rounds)?,
        };
        let mut cuts = boundaries.clone();
        cuts.push(end);
        let mut steps = Vec::new();
        for i in 0..boundaries.len() {
            let start = cuts[i];
            let (window, commit_end) = if i + 2 < cuts.len() - 1 {
                (Window::new(start, cuts[i + 2], true)?, cuts[i + 1])
            } else {
                (Window::new(start, end, false)?, end)
            };
            let distance = if commit_end < end {
                slice_distances(sched, start, commit_end)[(commit_end - start) as usize]
            } else {
                None
            };
            steps.push(PlanStep {
                window,
                commit_end,
                distance,
                graph: Arc::new(build_graph(sched, window, weights)),
            });
            if commit_end == end {
                break;
            }
        }
        Ok(RecoveryPlan {
            rounds,
            boundaries,
            steps,
            decoder: cfg.decoder,
            track_propagation: cfg.track_propagation,
        })
    }
}

/// Pending syndrome record and the correction applied so far.
#[derive(Clone, Debug)]
pub struct RecoveryState {
    pub syndromes: SyndromeHistory,
    pub applied: ErrorHistory,
    pub step: usize,
}

impl RecoveryState {
    pub fn new(syndromes: SyndromeHistory) -> Self {
        RecoveryState {
            syndromes,
            applied: ErrorHistory::new(),
            step: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct StepLog {
    pub start: u32,
    pub commit_end: u32,
    pub window_end: u32,
    pub open: bool,
    /// Faults applied in this step.
    pub applied: usize,
    pub propagating: Option<bool>,
    /// `|ψ[tᵢ, tᵢ₊₁)|` of the true history, when propagation is tracked.
    pub segment_weight: Option<usize>,
    pub distance: Option<u32>,
}

/// Runs step `state.step` of `plan`. `truth` is the actual history, needed
/// only for propagation tracking.
pub fn recovery_step(
    state: &mut RecoveryState,
    plan: &RecoveryPlan,
    sched: &SectorSchedule,
    truth: Option<&ErrorHistory>,
) -> Result<StepLog> {
    let step = plan
        .steps
        .get(state.step)
        .ok_or_else(|| Error::Domain(format!("recovery has only {} steps", plan.steps.len())))?;
    if state.syndromes.horizon() < step.window.end - 1 {
        return Err(Error::Domain("syndrome record shorter than the window".into()));
    }
    let g = &step.graph;
    let defects = g.window_defects(&state.syndromes);
    let m = plan.decoder.decode_vertices(g, &defects)?;
    let part = m.correction.restrict(step.window.start, step.commit_end);
    for f in part.iter() {
        apply_fault(sched, f, &mut state.syndromes)?;
        state.applied.toggle(*f)?;
    }
    for t in step.window.start..step.commit_end.min(state.syndromes.horizon() + 1) {
        if !state.syndromes.round(t).is_zero() {
            return Err(Error::Domain(format!("round {t} still has defects after its correction")));
        }
    }
    let (propagating, segment_weight) = match truth {
        Some(h) if plan.track_propagation => {
            let p = detect_propagating(sched, g, h, &m.correction, step.window.start, step.commit_end)?;
            (Some(p), Some(h.restrict(step.window.start, step.commit_end).weight()))
        }
        _ => (None, None),
    };
    state.step += 1;
    Ok(StepLog {
        start: step.window.start,
        commit_end: step.commit_end,
        window_end: step.window.end,
        open: step.window.open,
        applied: part.weight(),
        propagating,
        segment_weight,
        distance: step.distance,
    })
}

/// Whether `Πψ + ψ′`, restricted to rounds `[from, to)`, connects slice
/// `from` to slice `to` of `g`. Always false when `to` is past the window.
pub fn detect_propagating(
    sched: &SectorSchedule,
    g: &DecoderGraph,
    history: &ErrorHistory,
    correction: &ErrorHistory,
    from: u32,
    to: u32,
) -> Result<bool> {
    let w = g.window();
    if !w.contains(to) || from < w.start {
        return Ok(false);
    }
    let sum = project(&history.restrict(from, to), sched)?
        .restrict(from, to)
        .add(&correction.restrict(from, to))?;
    let n = g.num_vertices();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for f in sum.iter() {
        if let Some(k) = g.edge_of(f) {
            let e = &g.edges()[k];
            if !e.open {
                adj[e.u as usize].push(e.v);
                adj[e.v as usize].push(e.u);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    let nc = n / w.len() as usize;
    let first = g.vertex(0, from) as usize;
    for v in first..first + nc {
        seen[v] = true;
        queue.push_back(v as u32);
    }
    while let Some(v) = queue.pop_front() {
        if g.vertex_coords(v).1 == to {
            return Ok(true);
        }
        for &u in &adj[v as usize] {
            if !seen[u as usize] {
                seen[u as usize] = true;
                queue.push_back(u);
            }
        }
    }
    Ok(false)
}

/// Whether a syndrome-free residual is a nontrivial logical operator.
pub fn logical_failure(graph: &CheckGraph, residual: &BitVec) -> Result<bool> {
    if !graph.syndrome(residual).is_zero() {
        return Err(Error::Domain("residual error has a nonzero syndrome".into()));
    }
    Ok(graph.logical_class(residual).iter().any(|&b| b))
}

#[derive(Clone, Debug)]
pub struct RecoveryOutcome {
    pub failure: bool,
    pub residual: BitVec,
    pub correction: ErrorHistory,
    pub log: Vec<StepLog>,
}

/// Full overlapping recovery of one sampled sector.
pub fn recover(plan: &RecoveryPlan, sched: &SectorSchedule, record: &SectorRecord) -> Result<RecoveryOutcome> {
    if record.syndromes.horizon() != plan.rounds + 1 {
        return Err(Error::Domain(format!(
            "record has {} rounds, plan expects {}",
            record.syndromes.horizon(),
            plan.rounds + 1
        )));
    }
    let mut state = RecoveryState::new(record.syndromes.clone());
    let mut log = Vec::with_capacity(plan.steps.len());
    while state.step < plan.steps.len() {
        log.push(recovery_step(&mut state, plan, sched, Some(&record.effective))?);
    }
    finish(sched, record, state.applied, log)
}

fn finish(sched: &SectorSchedule, record: &SectorRecord, correction: ErrorHistory, log: Vec<StepLog>) -> Result<RecoveryOutcome> {
    let mut residual = record.final_error.clone();
    residual.xor_assign(&cumulative_data(&correction, sched.num_qubits(), u32::MAX));
    let failure = logical_failure(&sched.graph, &residual)?;
    Ok(RecoveryOutcome {
        failure,
        residual,
        correction,
        log,
    })
}

/// Decodes the whole record in one closed window.
pub fn recover_whole_horizon(
    sched: &SectorSchedule,
    record: &SectorRecord,
    decoder: DecoderKind,
    weights: &Weights,
) -> Result<RecoveryOutcome> {
    let end = record.syndromes.horizon() + 1;
    let g = build_graph(sched, Window::new(1, end, false)?, weights);
    let m = decoder.decode_vertices(&g, &g.window_defects(&record.syndromes))?;
    finish(sched, record, m.correction, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit_noise::{sample_history, Injections, NoiseParams};
    use crate::css::CheckType;
    use crate::spacetime::{syndrome_history, Fault};
    use crate::toric_partition::{Family, ToricSchedule};
    use rand::SeedableRng;

    fn record_of(sched: &SectorSchedule, h: &ErrorHistory, rounds: u32) -> SectorRecord {
        SectorRecord {
            syndromes: syndrome_history(h, sched, rounds + 1).unwrap(),
            effective: h.clone(),
            final_error: cumulative_data(h, sched.num_qubits(), u32::MAX),
        }
    }

    #[test]
    fn window_choice() {
        let st = ToricSchedule::new(6, Family::Steane).unwrap();
        assert_eq!(choose_windows(&st.z, 6, 4.0, 5).unwrap(), vec![1, 2, 3, 4, 5, 6]);
        let sh = ToricSchedule::new(4, Family::Shor).unwrap();
        assert_eq!(choose_windows(&sh.z, 4, 1.5, 20).unwrap(), vec![1, 7, 13, 19]);
        assert!(matches!(choose_windows(&sh.z, 4, 2.0, 6), Err(Error::Config(_))));
        assert!(matches!(choose_windows(&sh.z, 4, 0.5, 6), Err(Error::Config(_))));
    }

    #[test]
    fn plan_layout() {
        let sh = ToricSchedule::new(4, Family::Shor).unwrap();
        let cfg = RecoveryConfig { alpha: 1.0, ..Default::default() };
        let plan = RecoveryPlan::new(&sh.z, 4, 12, &cfg, &Weights::Unit).unwrap();
        assert_eq!(plan.boundaries, vec![1, 5, 9, 13]);
        let w: Vec<(u32, u32, u32, bool)> = plan.steps.iter().map(|s| (s.window.start, s.commit_end, s.window.end, s.window.open)).collect();
        assert_eq!(w, vec![(1, 5, 9, true), (5, 9, 13, true), (9, 14, 14, false)]);
        assert_eq!(plan.steps[0].distance, Some(4));
    }

    #[test]
    fn noiseless_and_single_faults() {
        let s = ToricSchedule::new(4, Family::Shor).unwrap();
        let cfg = RecoveryConfig { alpha: 1.0, track_propagation: true, ..Default::default() };
        let plan = RecoveryPlan::new(&s.z, 4, 12, &cfg, &Weights::Unit).unwrap();
        let out = recover(&plan, &s.z, &record_of(&s.z, &ErrorHistory::new(), 12)).unwrap();
        assert!(!out.failure && out.correction.is_empty());
        assert!(out.log.iter().all(|l| l.applied == 0 && l.propagating != Some(true)));

        // data fault inside the first segment is fixed in step one
        let h = ErrorHistory::from_faults([Fault::Data { qubit: 3, t: 2 }]).unwrap();
        let out = recover(&plan, &s.z, &record_of(&s.z, &h, 12)).unwrap();
        assert_eq!(out.log[0].applied, 1);
        assert!(!out.failure && out.residual.is_zero());

        // a measurement fault at tᵢ₊₁ − 1 is deferred through the open edge
        let h = ErrorHistory::from_faults([Fault::Measurement { ancilla: 0, t: 8 }]).unwrap();
        let mut state = RecoveryState::new(record_of(&s.z, &h, 12).syndromes);
        let first = recovery_step(&mut state, &plan, &s.z, None).unwrap();
        assert_eq!(first.applied, 0);
        let second = recovery_step(&mut state, &plan, &s.z, None).unwrap();
        assert_eq!(second.applied, 1);
        assert!(state.syndromes.is_zero());
    }

    #[test]
    fn time_like_column_propagates() {
        let s = ToricSchedule::new(6, Family::Aligned { m: 3 }).unwrap();
        let cfg = RecoveryConfig { alpha: 1.0, track_propagation: true, ..Default::default() };
        let plan = RecoveryPlan::new(&s.z, 6, 18, &cfg, &Weights::Unit).unwrap();
        let round = s.z.round(1);
        let b = round.split_ancillas().next().unwrap();
        let face = round.ancilla_checks[b][0];
        let col = (1..7).map(|t| {
            let r = s.z.round(t);
            let b = r.split_ancillas().find(|&b| r.ancilla_checks[b][0] == face).unwrap();
            Fault::Measurement { ancilla: b as u32, t }
        });
        let h = ErrorHistory::from_faults(col).unwrap();
        let g = &plan.steps[0].graph;
        // left uncorrected, the column joins slice 1 to slice 7
        assert!(detect_propagating(&s.z, g, &h, &ErrorHistory::new(), 1, 7).unwrap());
        assert!(!detect_propagating(&s.z, g, &h, &h, 1, 7).unwrap());
        let short = h.restrict(1, 6);
        assert!(!detect_propagating(&s.z, g, &short, &ErrorHistory::new(), 1, 7).unwrap());
        let d = plan.steps[0].distance.unwrap() as f64;
        assert!(h.weight() as f64 >= 0.5 * (d - 6.0));
        let out = recover(&plan, &s.z, &record_of(&s.z, &h, 18)).unwrap();
        assert_eq!(out.log[0].propagating, Some(false));
        assert!(!out.failure);
    }

    #[test]
    fn logical_failure_classes() {
        let s = ToricSchedule::new(4, Family::Shor).unwrap();
        let lat = &s.lattice;
        for sector in [&s.z, &s.x] {
            let g = &sector.graph;
            assert!(!logical_failure(g, &BitVec::zeros(32)).unwrap());
            let star = BitVec::from_indices(32, lat.vertex_edges(5).iter().map(|&e| e as usize));
            let plaquette = BitVec::from_indices(32, lat.face_edges(5).iter().map(|&e| e as usize));
            let stab = [star, plaquette].into_iter().find(|v| g.syndrome(v).is_zero()).unwrap();
            assert!(!logical_failure(g, &stab).unwrap());
            let logical = [lat.x_logicals()[0].clone(), lat.z_logicals()[0].clone()]
                .into_iter()
                .find(|v| g.syndrome(v).is_zero())
                .unwrap();
            assert!(logical_failure(g, &logical).unwrap());
            let mut single = BitVec::zeros(32);
            single.set(0, true);
            assert!(matches!(logical_failure(g, &single), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn random_runs_are_valid() {
        let s = ToricSchedule::new(6, Family::Offset { m: 3 }).unwrap();
        let params = NoiseParams::new(0.004, 0.004).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for decoder in [DecoderKind::Mwpm, DecoderKind::UnionFind] {
            let cfg = RecoveryConfig { alpha: 1.0, decoder, track_propagation: true, ..Default::default() };
            let plan = RecoveryPlan::new(&s.z, 6, 12, &cfg, &Weights::Unit).unwrap();
            let xplan = RecoveryPlan::new(&s.x, 6, 12, &cfg, &Weights::Unit).unwrap();
            for _ in 0..20 {
                let sample = sample_history(&s, &params, 12, &mut rng, &Injections::default(), false).unwrap();
                recover(&plan, &s.z, sample.sector(CheckType::Z)).unwrap();
                recover(&xplan, &s.x, sample.sector(CheckType::X)).unwrap();
            }
        }
    }
}
