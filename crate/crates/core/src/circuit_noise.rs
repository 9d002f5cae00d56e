//! Circuit-level Pauli-frame simulation of alternating Z and X extraction.
//!
//! Noise model, per extraction round:
//!
//! * every ancilla qubit is prepared perfectly and then depolarized with
//!   probability `p1` (X, Y, Z equally likely);
//! * every CNOT is followed, with probability `p`, by one of the 15
//!   non-identity two-qubit Paulis on its control and target;
//! * every ancilla measurement outcome is flipped with probability `2p/3`.
//!
//! Z rounds use data→ancilla CNOTs and read ancillas in the Z basis; X rounds
//! use ancilla→data CNOTs and read in the X basis. Idle errors are ignored.
//! The experiment ends with a perfect readout of the data block.
//!
//! Besides the measured syndromes, [`sample_history`] decomposes the run into
//! an effective error history per check type: a data fault `(e, t)` is a change
//! of the data frame between the starts of rounds `t − 1` and `t`, and a
//! measurement fault `(b, t)` is recorded whenever ancilla `b`'s outcome
//! differs from the parity of the data frame on `Γb` at the start of round
//! `t`. With this decomposition `Σ(effective)` equals the measured syndrome
//! differences exactly.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::Serialize;

use crate::css::CheckType;
use crate::error::{Error, Result};
use crate::f2core::BitVec;
use crate::spacetime::{ErrorHistory, Fault, SyndromeHistory};
use crate::toric_partition::{RoundGadget, SectorSchedule, ToricSchedule};

/// Single-qubit Pauli as `x | z << 1`; phases are not tracked.
pub type Pauli = u8;
pub const I: Pauli = 0;
pub const X: Pauli = 1;
pub const Z: Pauli = 2;
pub const Y: Pauli = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseParams {
    pub p: f64,
    pub p1: f64,
}

impl NoiseParams {
    pub fn new(p: f64, p1: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("p1", p1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(NoiseParams { p, p1 })
    }

    pub fn noiseless() -> Self {
        NoiseParams { p: 0.0, p1: 0.0 }
    }

    pub fn measurement_flip(&self) -> f64 {
        2.0 * self.p / 3.0
    }
}

/// Pauli frame over allocated qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    bits: Vec<Pauli>,
    live: Vec<bool>,
}

impl PauliFrame {
    /// `n` live qubits with the identity frame.
    pub fn new(n: usize) -> Self {
        PauliFrame {
            bits: vec![I; n],
            live: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Appends `k` fresh qubits; returns the index of the first.
    pub fn allocate(&mut self, k: usize) -> usize {
        let first = self.bits.len();
        self.bits.resize(first + k, I);
        self.live.resize(first + k, true);
        first
    }

    /// Drops every qubit from index `from` on, with its frame.
    pub fn discard_from(&mut self, from: usize) {
        self.bits.truncate(from);
        self.live.truncate(from);
    }

    pub fn is_live(&self, q: usize) -> bool {
        self.live.get(q).copied().unwrap_or(false)
    }

    pub fn get(&self, q: usize) -> Pauli {
        self.bits[q]
    }

    pub fn x(&self, q: usize) -> bool {
        self.bits[q] & X != 0
    }

    pub fn z(&self, q: usize) -> bool {
        self.bits[q] & Z != 0
    }

    /// Multiplies qubit `q` by `p`.
    pub fn apply(&mut self, q: usize, p: Pauli) {
        self.bits[q] ^= p;
    }

    fn check_live(&self, q: usize) -> Result<()> {
        if self.is_live(q) {
            Ok(())
        } else {
            Err(Error::Domain(format!("qubit {q} is not allocated")))
        }
    }

    /// Conjugation by CNOT: X spreads control→target, Z spreads target→control.
    pub fn propagate_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_live(control)?;
        self.check_live(target)?;
        if control == target {
            return Err(Error::Domain("CNOT needs two distinct qubits".into()));
        }
        cnot(&mut self.bits, control, target);
        Ok(())
    }

    pub fn x_bits(&self, range: std::ops::Range<usize>) -> BitVec {
        BitVec::from_indices(range.len(), range.clone().filter(|&q| self.x(q)).map(|q| q - range.start))
    }

    pub fn z_bits(&self, range: std::ops::Range<usize>) -> BitVec {
        BitVec::from_indices(range.len(), range.clone().filter(|&q| self.z(q)).map(|q| q - range.start))
    }
}

#[inline]
fn cnot(bits: &mut [Pauli], c: usize, t: usize) {
    let xc = bits[c] & X;
    let zt = bits[t] & Z;
    bits[t] ^= xc;
    bits[c] ^= zt;
}

/// A uniformly random non-identity two-qubit Pauli `(control, target)`.
pub fn random_two_qubit_pauli<R: Rng + ?Sized>(rng: &mut R) -> (Pauli, Pauli) {
    let r: u8 = rng.random_range(1..16);
    (r & 3, r >> 2)
}

/// With probability `p`, a uniformly random non-identity two-qubit Pauli.
pub fn sample_gate_error<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Option<(Pauli, Pauli)> {
    if p > 0.0 && rng.random_bool(p.min(1.0)) {
        Some(random_two_qubit_pauli(rng))
    } else {
        None
    }
}

/// Bernoulli trials in a fixed order, sampled by geometric gap skipping.
#[derive(Clone, Debug)]
struct EventStream {
    geo: Option<Geometric>,
    always: bool,
    remaining: u64,
}

impl EventStream {
    fn new<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Self {
        let always = p >= 1.0;
        let geo = (p > 0.0 && !always).then(|| Geometric::new(p).expect("p in (0,1)"));
        let mut s = EventStream {
            geo,
            always,
            remaining: u64::MAX,
        };
        s.reload(rng);
        s
    }

    fn reload<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.remaining = match &self.geo {
            Some(g) => g.sample(rng),
            None if self.always => 0,
            None => u64::MAX,
        };
    }

    /// Whether the next trial is a success.
    #[inline]
    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.remaining == 0 {
            self.reload(rng);
            true
        } else {
            if self.remaining != u64::MAX {
                self.remaining -= 1;
            }
            false
        }
    }
}

/// Independent event streams for the three fault locations.
#[derive(Clone, Debug)]
pub struct NoiseStreams {
    gate: EventStream,
    flip: EventStream,
    prep: EventStream,
}

impl NoiseStreams {
    pub fn new<R: Rng + ?Sized>(params: &NoiseParams, rng: &mut R) -> Self {
        NoiseStreams {
            gate: EventStream::new(params.p, rng),
            flip: EventStream::new(params.measurement_flip(), rng),
            prep: EventStream::new(params.p1, rng),
        }
    }
}

/// Outcome of one extraction round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    /// Raw ancilla outcomes relative to the noiseless reference.
    pub outcomes: BitVec,
    /// `H̃ᵀ · outcomes`.
    pub syndrome: BitVec,
    /// Ancillas whose outcome was flipped by measurement noise or injection.
    pub flipped: BitVec,
}

fn check_supported(round: &RoundGadget) -> Result<()> {
    // Transversal gadgets, or single-qubit ancillas each read out alone.
    let bare_like = round.ancilla_checks.iter().all(|c| c.len() == 1)
        && round.gadget.h_tilde().index_columns().iter().all(|c| c.len() == 1);
    if round.gadget.is_transversal() || bare_like {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "circuit simulation of a non-transversal gadget with a multi-qubit ancilla".into(),
        ))
    }
}

/// Runs one extraction round on `frame`, whose first `n_data` qubits are the
/// data block. Ancillas are allocated after the data and discarded at the end.
/// `inject_flips` lists ancillas whose outcome is flipped deliberately.
pub fn run_round<R: Rng + ?Sized>(
    frame: &mut PauliFrame,
    n_data: usize,
    round: &RoundGadget,
    kind: CheckType,
    streams: &mut NoiseStreams,
    rng: &mut R,
    inject_flips: &[u32],
) -> Result<RoundOutcome> {
    check_supported(round)?;
    if frame.len() != n_data {
        return Err(Error::Domain("frame holds live ancillas from a previous round".into()));
    }
    let na = round.num_ancillas();
    let base = frame.allocate(na);
    let bits = &mut frame.bits;
    for b in 0..na {
        if streams.prep.next(rng) {
            bits[base + b] ^= rng.random_range(1..4u8);
        }
    }
    for (b, qubits) in round.ancilla_qubits.iter().enumerate() {
        let a = base + b;
        for &q in qubits {
            let q = q as usize;
            let (c, t) = match kind {
                CheckType::Z => (q, a),
                CheckType::X => (a, q),
            };
            cnot(bits, c, t);
            if streams.gate.next(rng) {
                let (pc, pt) = random_two_qubit_pauli(rng);
                bits[c] ^= pc;
                bits[t] ^= pt;
            }
        }
    }
    let read = match kind {
        CheckType::Z => X,
        CheckType::X => Z,
    };
    let mut flipped = BitVec::zeros(na);
    for &b in inject_flips {
        if b as usize >= na {
            return Err(Error::Domain(format!("injected flip on missing ancilla #{b}")));
        }
        flipped.toggle(b as usize);
    }
    let mut outcomes = BitVec::zeros(na);
    let mut syndrome = BitVec::zeros(round.gadget.syndrome_bits().len());
    for b in 0..na {
        if streams.flip.next(rng) {
            flipped.toggle(b);
        }
        let o = (bits[base + b] & read != 0) ^ flipped.get(b);
        if o {
            outcomes.set(b, true);
            for &c in &round.ancilla_checks[b] {
                syndrome.toggle(c as usize);
            }
        }
    }
    frame.discard_from(base);
    Ok(RoundOutcome {
        outcomes,
        syndrome,
        flipped,
    })
}

/// Deliberate faults, in the spacetime model, to realize in the circuit.
///
/// `z` holds faults seen by Z checks (X data errors, Z-round measurement
/// faults); `x` the mirror image. Data faults at round `T + 1` are applied
/// just before the final readout.
#[derive(Clone, Debug, Default)]
pub struct Injections {
    pub z: ErrorHistory,
    pub x: ErrorHistory,
}

/// Per check type record of one sampled experiment.
#[derive(Clone, Debug)]
pub struct SectorRecord {
    /// `Δ_1, …, Δ_{T+1}`; the last round is the perfect readout.
    pub syndromes: SyndromeHistory,
    /// Effective fault decomposition over rounds `1..=T+1`.
    pub effective: ErrorHistory,
    /// Data frame component detected by this check type after the readout.
    pub final_error: BitVec,
}

#[derive(Clone, Debug)]
pub struct HistorySample {
    pub rounds: u32,
    pub z: SectorRecord,
    pub x: SectorRecord,
    pub trace: Vec<TraceLine>,
}

impl HistorySample {
    pub fn sector(&self, kind: CheckType) -> &SectorRecord {
        match kind {
            CheckType::Z => &self.z,
            CheckType::X => &self.x,
        }
    }
}

/// One line of the per-round debugging trace.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TraceLine {
    pub round: u32,
    pub kind: CheckType,
    /// Injected faults realized before or during this round.
    pub injected: Vec<String>,
    /// Ancillas whose outcome was flipped.
    pub flipped: Vec<usize>,
    /// Syndrome bits that fired.
    pub syndrome: Vec<usize>,
}

struct SectorTracker {
    prev_frame: BitVec,
    prev_sigma: BitVec,
    syndromes: SyndromeHistory,
    effective: ErrorHistory,
}

impl SectorTracker {
    fn new(sched: &SectorSchedule, rounds: u32) -> Self {
        SectorTracker {
            prev_frame: BitVec::zeros(sched.num_qubits()),
            prev_sigma: BitVec::zeros(sched.num_checks()),
            syndromes: SyndromeHistory::zeros(sched.num_checks(), rounds + 1),
            effective: ErrorHistory::with_horizon(rounds + 1),
        }
    }

    /// Records data faults as the frame change since the previous round.
    fn data_step(&mut self, frame: BitVec, t: u32) {
        let mut diff = frame.clone();
        diff.xor_assign(&self.prev_frame);
        for e in diff.iter_ones() {
            self.effective
                .toggle(Fault::Data { qubit: e as u32, t })
                .expect("round within horizon");
        }
        self.prev_frame = frame;
    }

    fn measure_step(&mut self, round: &RoundGadget, outcome: &RoundOutcome, t: u32) {
        for (b, qubits) in round.ancilla_qubits.iter().enumerate() {
            let expected = qubits.iter().fold(false, |acc, &q| acc ^ self.prev_frame.get(q as usize));
            if expected != outcome.outcomes.get(b) {
                self.effective
                    .toggle(Fault::Measurement { ancilla: b as u32, t })
                    .expect("round within horizon");
            }
        }
        self.push_sigma(outcome.syndrome.clone(), t);
    }

    fn push_sigma(&mut self, sigma: BitVec, t: u32) {
        let mut d = sigma.clone();
        d.xor_assign(&self.prev_sigma);
        *self.syndromes.round_mut(t) = d;
        self.prev_sigma = sigma;
    }
}

fn data_injections(h: &ErrorHistory, t: u32) -> impl Iterator<Item = u32> + '_ {
    h.iter().filter_map(move |f| match *f {
        Fault::Data { qubit, t: ft } if ft == t => Some(qubit),
        _ => None,
    })
}

fn flip_injections(h: &ErrorHistory, t: u32) -> Vec<u32> {
    h.iter()
        .filter_map(|f| match *f {
            Fault::Measurement { ancilla, t: ft } if ft == t => Some(ancilla),
            _ => None,
        })
        .collect()
}

/// Runs `rounds` rounds of Z extraction interleaved with X extraction
/// (Z₁, X₁, Z₂, X₂, …) followed by a perfect readout.
pub fn sample_history<R: Rng + ?Sized>(
    sched: &ToricSchedule,
    params: &NoiseParams,
    rounds: u32,
    rng: &mut R,
    injections: &Injections,
    trace: bool,
) -> Result<HistorySample> {
    if rounds == 0 {
        return Err(Error::Domain("need at least one extraction round".into()));
    }
    for (h, s) in [(&injections.z, &sched.z), (&injections.x, &sched.x)] {
        for f in h.iter() {
            match *f {
                Fault::Data { qubit, t } if t > rounds + 1 || qubit as usize >= s.num_qubits() => {
                    return Err(Error::Domain(format!("injected data fault {f:?} out of range")))
                }
                Fault::Measurement { t, .. } if t > rounds => {
                    return Err(Error::Domain(format!("injected measurement fault {f:?} after the last round")))
                }
                _ => {}
            }
        }
    }
    let n = sched.z.num_qubits();
    let mut frame = PauliFrame::new(n);
    let mut streams = NoiseStreams::new(params, rng);
    let mut z = SectorTracker::new(&sched.z, rounds);
    let mut x = SectorTracker::new(&sched.x, rounds);
    let mut lines = Vec::new();

    for t in 1..=rounds {
        for kind in [CheckType::Z, CheckType::X] {
            let (sector, inj, tracker) = match kind {
                CheckType::Z => (&sched.z, &injections.z, &mut z),
                CheckType::X => (&sched.x, &injections.x, &mut x),
            };
            let pauli = if kind == CheckType::Z { X } else { Z };
            let mut injected: Vec<String> = Vec::new();
            for q in data_injections(inj, t) {
                frame.apply(q as usize, pauli);
                if trace {
                    injected.push(format!("data e{q}"));
                }
            }
            let snapshot = match kind {
                CheckType::Z => frame.x_bits(0..n),
                CheckType::X => frame.z_bits(0..n),
            };
            tracker.data_step(snapshot, t);
            let flips = flip_injections(inj, t);
            if trace {
                injected.extend(flips.iter().map(|b| format!("flip #{b}")));
            }
            let round = sector.round(t);
            let out = run_round(&mut frame, n, round, kind, &mut streams, rng, &flips)?;
            tracker.measure_step(round, &out, t);
            if trace {
                lines.push(TraceLine {
                    round: t,
                    kind,
                    injected,
                    flipped: out.flipped.iter_ones().collect(),
                    syndrome: out.syndrome.iter_ones().collect(),
                });
            }
        }
    }

    let last = rounds + 1;
    for q in data_injections(&injections.z, last) {
        frame.apply(q as usize, X);
    }
    for q in data_injections(&injections.x, last) {
        frame.apply(q as usize, Z);
    }
    let final_x = frame.x_bits(0..n);
    let final_z = frame.z_bits(0..n);
    for (tracker, sector, err) in [(&mut z, &sched.z, &final_x), (&mut x, &sched.x, &final_z)] {
        tracker.data_step(err.clone(), last);
        tracker.push_sigma(sector.graph.syndrome(err), last);
    }
    Ok(HistorySample {
        rounds,
        z: SectorRecord {
            syndromes: z.syndromes,
            effective: z.effective,
            final_error: final_x,
        },
        x: SectorRecord {
            syndromes: x.syndromes,
            effective: x.effective,
            final_error: final_z,
        },
        trace: lines,
    })
}

/// Renders a trace as JSON lines.
pub fn trace_json_lines(trace: &[TraceLine]) -> String {
    trace
        .iter()
        .map(|l| serde_json::to_string(l).expect("serializable") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::syndrome_history;
    use crate::toric_partition::Family;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cnot_rules() {
        let mut f = PauliFrame::new(2);
        f.apply(0, X);
        f.propagate_cnot(0, 1).unwrap();
        assert_eq!((f.get(0), f.get(1)), (X, X));
        let mut f = PauliFrame::new(2);
        f.apply(1, Z);
        f.propagate_cnot(0, 1).unwrap();
        assert_eq!((f.get(0), f.get(1)), (Z, Z));
        let mut f = PauliFrame::new(2);
        f.apply(0, Y);
        f.propagate_cnot(0, 1).unwrap();
        assert_eq!((f.get(0), f.get(1)), (Y, X));
        assert!(f.propagate_cnot(0, 2).is_err());
        f.allocate(1);
        assert!(f.propagate_cnot(0, 2).is_ok());
        f.discard_from(2);
        assert!(f.propagate_cnot(2, 0).is_err());
    }

    #[test]
    fn gate_error_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!((0..1000).all(|_| sample_gate_error(&mut rng, 0.0).is_none()));
        let n = 100_000;
        let mut counts = [0usize; 16];
        let mut target_x = 0usize;
        for _ in 0..n {
            let (c, t) = sample_gate_error(&mut rng, 1.0).unwrap();
            counts[(c | t << 2) as usize] += 1;
            target_x += (t & X != 0) as usize;
        }
        assert_eq!(counts[0], 0);
        let mean = n as f64 / 15.0;
        let sigma = (n as f64 * (1.0 / 15.0) * (14.0 / 15.0)).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 - mean).abs() < 4.0 * sigma, "{c} vs {mean}");
        }
        // Target gets an X component in 8 of the 15 Paulis.
        let q = 8.0 / 15.0;
        let sd = (n as f64 * q * (1.0 - q)).sqrt();
        assert!((target_x as f64 - n as f64 * q).abs() < 4.0 * sd);
    }

    #[test]
    fn event_stream_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = 0.02;
        let mut s = EventStream::new(p, &mut rng);
        let n = 200_000;
        let hits = (0..n).filter(|_| s.next(&mut rng)).count();
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((hits as f64 - n as f64 * p).abs() < 4.0 * sd);
        let mut always = EventStream::new(1.0, &mut rng);
        assert!((0..10).all(|_| always.next(&mut rng)));
        let mut never = EventStream::new(0.0, &mut rng);
        assert!((0..10).all(|_| !never.next(&mut rng)));
    }

    #[test]
    fn noiseless_round_reads_data_syndrome() {
        let s = ToricSchedule::new(4, Family::Aligned { m: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut streams = NoiseStreams::new(&NoiseParams::noiseless(), &mut rng);
        let mut frame = PauliFrame::new(32);
        let out = run_round(&mut frame, 32, s.z.round(1), CheckType::Z, &mut streams, &mut rng, &[]).unwrap();
        assert!(out.syndrome.is_zero());
        frame.apply(5, X);
        let out = run_round(&mut frame, 32, s.z.round(1), CheckType::Z, &mut streams, &mut rng, &[]).unwrap();
        let want = s.z.graph.syndrome(&BitVec::from_indices(32, [5]));
        assert_eq!(out.syndrome, want);
        assert_eq!(frame.len(), 32);
    }

    #[test]
    fn ancilla_z_spreads_to_data() {
        let s = ToricSchedule::new(4, Family::Shor).unwrap();
        let round = s.z.round(1);
        let mut frame = PauliFrame::new(32);
        let a = frame.allocate(1);
        frame.apply(a, Z);
        let q = round.ancilla_qubits[0][0] as usize;
        frame.propagate_cnot(q, a).unwrap();
        assert!(frame.z(q));
    }

    #[test]
    fn single_injections_match_model() {
        let s = ToricSchedule::new(4, Family::Aligned { m: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rounds = 3;
        let faults = [
            Fault::Data { qubit: 9, t: 2 },
            Fault::Measurement { ancilla: 4, t: 1 },
            Fault::Data { qubit: 0, t: 4 },
        ];
        for f in faults {
            let inj = Injections {
                z: ErrorHistory::from_faults([f]).unwrap(),
                x: ErrorHistory::new(),
            };
            let out = sample_history(&s, &NoiseParams::noiseless(), rounds, &mut rng, &inj, false).unwrap();
            assert_eq!(out.z.effective, inj.z);
            assert_eq!(out.z.syndromes, syndrome_history(&inj.z, &s.z, rounds + 1).unwrap());
            assert!(out.x.syndromes.is_zero());
        }
    }

    #[test]
    fn effective_history_reproduces_noisy_syndromes() {
        for fam in [Family::Offset { m: 3 }, Family::Bare, Family::Steane, Family::Shor] {
            let s = ToricSchedule::new(6, fam).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..20 {
                let out = sample_history(&s, &NoiseParams::new(0.01, 0.01).unwrap(), 5, &mut rng, &Injections::default(), false).unwrap();
                for (rec, sec) in [(&out.z, &s.z), (&out.x, &s.x)] {
                    assert_eq!(syndrome_history(&rec.effective, sec, 6).unwrap(), rec.syndromes);
                    let mut fin = BitVec::zeros(sec.num_qubits());
                    for f in rec.effective.iter() {
                        if let Fault::Data { qubit, .. } = f {
                            fin.toggle(*qubit as usize);
                        }
                    }
                    assert_eq!(fin, rec.final_error);
                }
            }
        }
    }

    #[test]
    fn deterministic_replay_and_zero_noise() {
        let s = ToricSchedule::new(6, Family::Aligned { m: 3 }).unwrap();
        let params = NoiseParams::new(0.02, 0.02).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let o = sample_history(&s, &params, 4, &mut rng, &Injections::default(), true).unwrap();
            (o.z.syndromes, o.x.syndromes, o.z.final_error, trace_json_lines(&o.trace))
        };
        assert_eq!(run(9), run(9));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = sample_history(&s, &NoiseParams::noiseless(), 4, &mut rng, &Injections::default(), false).unwrap();
        assert!(o.z.syndromes.is_zero() && o.x.syndromes.is_zero());
        assert!(o.z.final_error.is_zero() && o.x.final_error.is_zero());
    }

    #[test]
    fn measurement_flip_rate() {
        let s = ToricSchedule::new(4, Family::Shor).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = 0.3;
        let mut streams = NoiseStreams::new(&NoiseParams { p: 0.0, p1: 0.0 }, &mut rng);
        streams.flip = EventStream::new(2.0 * p / 3.0, &mut rng);
        let mut frame = PauliFrame::new(32);
        let (mut flips, mut total) = (0usize, 0usize);
        for _ in 0..800 {
            let out = run_round(&mut frame, 32, s.z.round(1), CheckType::Z, &mut streams, &mut rng, &[]).unwrap();
            flips += out.flipped.count_ones();
            total += out.flipped.len();
        }
        let q = 2.0 * p / 3.0;
        let sd = (total as f64 * q * (1.0 - q)).sqrt();
        assert!((flips as f64 - total as f64 * q).abs() < 4.0 * sd);
    }

    #[test]
    fn rejects_multi_qubit_non_transversal() {
        use crate::f2core::{Label, SparseF2Matrix, Universe};
        use crate::gadget::Gadget;
        let s = ToricSchedule::new(4, Family::Bare).unwrap();
        let theta = Universe::new((0..2).map(Label::Index));
        let lambda = Universe::new([Label::Face(0)]);
        let edges = s.lattice.edges().clone();
        let f0 = s.lattice.face_edges(0);
        let gamma = SparseF2Matrix::from_index_columns(&theta, &edges, vec![f0[..2].to_vec(), f0[2..].to_vec()]).unwrap();
        let h = SparseF2Matrix::from_index_columns(&lambda, &theta, vec![vec![0, 1]]).unwrap();
        let g = Gadget::new(CheckType::Z, gamma, h).unwrap();
        let round = RoundGadget::from_gadget(g);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut streams = NoiseStreams::new(&NoiseParams::noiseless(), &mut rng);
        let mut frame = PauliFrame::new(32);
        let err = run_round(&mut frame, 32, &round, CheckType::Z, &mut streams, &mut rng, &[]);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }
}
