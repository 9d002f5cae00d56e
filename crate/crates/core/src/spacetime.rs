//! Spacetime error histories and syndrome histories.
//!
//! A data fault `(e, t)` is an error on qubit `e` occurring before round
//! `t`'s extraction; a measurement fault `(b, t)` flips the outcome of
//! ancilla `b` of round `t`'s gadget. The round-`t` syndrome difference is
//!
//! ```text
//! Δ_t = ∂ᵀ D_t + ∂̃_tᵀ M_t + ∂̃_{t−1}ᵀ M_{t−1}
//! ```
//!
//! where `∂̃_t = H̃` of round `t`. Everything here works on one check type
//! (a [`SectorSchedule`]); X and Z are handled as mirrored instances.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2core::{BitVec, Label};
use crate::toric_partition::SectorSchedule;

/// A single spacetime fault. Rounds start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fault {
    Data { qubit: u32, t: u32 },
    /// `ancilla` indexes `Θ` of the round-`t` gadget in label order.
    Measurement { ancilla: u32, t: u32 },
}

impl Fault {
    pub fn round(&self) -> u32 {
        match *self {
            Fault::Data { t, .. } | Fault::Measurement { t, .. } => t,
        }
    }

    fn key(&self) -> (u32, u8, u32) {
        match *self {
            Fault::Data { qubit, t } => (t, 0, qubit),
            Fault::Measurement { ancilla, t } => (t, 1, ancilla),
        }
    }
}

impl PartialOrd for Fault {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fault {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementType {
    /// Split ancilla: flips one syndrome bit, two defects in consecutive rounds.
    TypeI,
    /// Unsplit ancilla: flips two syndrome bits, four defects.
    TypeII,
}

/// A finite set of faults, kept sorted by `(round, kind, index)`.
///
/// Equality compares the fault sets only.
#[derive(Clone, Debug, Default)]
pub struct ErrorHistory {
    faults: BTreeSet<Fault>,
    horizon: Option<u32>,
}

impl PartialEq for ErrorHistory {
    fn eq(&self, other: &Self) -> bool {
        self.faults == other.faults
    }
}

impl Eq for ErrorHistory {}

impl ErrorHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// A history that rejects faults after round `horizon`.
    pub fn with_horizon(horizon: u32) -> Self {
        ErrorHistory {
            faults: BTreeSet::new(),
            horizon: Some(horizon),
        }
    }

    pub fn from_faults(faults: impl IntoIterator<Item = Fault>) -> Result<Self> {
        let mut h = ErrorHistory::new();
        for f in faults {
            h.toggle(f)?;
        }
        Ok(h)
    }

    pub fn horizon(&self) -> Option<u32> {
        self.horizon
    }

    /// Adds `f` over GF(2): a repeated fault cancels.
    pub fn toggle(&mut self, f: Fault) -> Result<()> {
        if f.round() == 0 {
            return Err(Error::Domain("fault at round 0; rounds start at 1".into()));
        }
        if let Some(h) = self.horizon {
            if f.round() > h {
                return Err(Error::Domain(format!("fault at round {} after horizon {h}", f.round())));
            }
        }
        if !self.faults.remove(&f) {
            self.faults.insert(f);
        }
        Ok(())
    }

    pub fn add(&self, other: &ErrorHistory) -> Result<ErrorHistory> {
        let mut out = self.clone();
        for &f in &other.faults {
            out.toggle(f)?;
        }
        Ok(out)
    }

    pub fn weight(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn contains(&self, f: &Fault) -> bool {
        self.faults.contains(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fault> + '_ {
        self.faults.iter()
    }

    /// Faults with `from ≤ t < to`.
    pub fn restrict(&self, from: u32, to: u32) -> ErrorHistory {
        ErrorHistory {
            faults: self
                .faults
                .iter()
                .filter(|f| (from..to).contains(&f.round()))
                .copied()
                .collect(),
            horizon: self.horizon,
        }
    }
}

impl fmt::Display for ErrorHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .faults
            .iter()
            .map(|x| match x {
                Fault::Data { qubit, t } => format!("D(e{qubit},{t})"),
                Fault::Measurement { ancilla, t } => format!("M(#{ancilla},{t})"),
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Defect sets `Δ_1, …, Δ_T`.
#[derive(Clone, PartialEq, Eq)]
pub struct SyndromeHistory {
    num_checks: usize,
    rounds: Vec<BitVec>,
}

impl SyndromeHistory {
    pub fn zeros(num_checks: usize, horizon: u32) -> Self {
        SyndromeHistory {
            num_checks,
            rounds: vec![BitVec::zeros(num_checks); horizon as usize],
        }
    }

    pub fn horizon(&self) -> u32 {
        self.rounds.len() as u32
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    /// `Δ_t`, for `1 ≤ t ≤ horizon`.
    pub fn round(&self, t: u32) -> &BitVec {
        &self.rounds[(t - 1) as usize]
    }

    pub fn round_mut(&mut self, t: u32) -> &mut BitVec {
        &mut self.rounds[(t - 1) as usize]
    }

    pub fn toggle(&mut self, check: usize, t: u32) {
        self.rounds[(t - 1) as usize].toggle(check);
    }

    pub fn get(&self, check: usize, t: u32) -> bool {
        self.rounds[(t - 1) as usize].get(check)
    }

    /// Defects as `(check, round)` in round-major order.
    pub fn defects(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.rounds
            .iter()
            .enumerate()
            .flat_map(|(k, r)| r.iter_ones().map(move |c| (c, k as u32 + 1)))
    }

    pub fn count(&self) -> usize {
        self.rounds.iter().map(|r| r.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rounds.iter().all(|r| r.is_zero())
    }

    pub fn add_assign(&mut self, other: &SyndromeHistory) {
        assert_eq!(self.rounds.len(), other.rounds.len());
        for (a, b) in self.rounds.iter_mut().zip(&other.rounds) {
            a.xor_assign(b);
        }
    }

    /// Extends (with zeros) or truncates to `horizon` rounds.
    pub fn resize(&mut self, horizon: u32) {
        self.rounds.resize(horizon as usize, BitVec::zeros(self.num_checks));
    }

    pub fn defect_labels(&self) -> Vec<Label> {
        self.defects()
            .map(|(c, t)| Label::timed(Label::Index(c as u32), t))
            .collect()
    }
}

impl fmt::Debug for SyndromeHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.defects()).finish()
    }
}

/// `D_t`: qubits with a data fault exactly at round `t`.
pub fn eval_data(h: &ErrorHistory, num_qubits: usize, t: u32) -> BitVec {
    let mut out = BitVec::zeros(num_qubits);
    for f in h.iter() {
        if let Fault::Data { qubit, t: ft } = *f {
            if ft == t {
                out.toggle(qubit as usize);
            }
        }
    }
    out
}

/// `D̄_t = Σ_{t′ ≤ t} D_{t′}`, with `D̄_0 = 0`.
pub fn cumulative_data(h: &ErrorHistory, num_qubits: usize, t: u32) -> BitVec {
    let mut out = BitVec::zeros(num_qubits);
    for f in h.iter() {
        if let Fault::Data { qubit, t: ft } = *f {
            if ft <= t {
                out.toggle(qubit as usize);
            }
        }
    }
    out
}

fn ancilla_checks(sched: &SectorSchedule, ancilla: u32, t: u32) -> Result<&[u32]> {
    let round = sched.round(t);
    round
        .ancilla_checks
        .get(ancilla as usize)
        .map(|v| v.as_slice())
        .ok_or_else(|| Error::Domain(format!("ancilla #{ancilla} does not exist in round {t}")))
}

/// Applies one fault's contribution to the syndrome differences of rounds
/// `1..=horizon`.
pub(crate) fn apply_fault(sched: &SectorSchedule, f: &Fault, out: &mut SyndromeHistory) -> Result<()> {
    let horizon = out.horizon();
    match *f {
        Fault::Data { qubit, t } => {
            let checks = sched
                .graph
                .qubit_checks
                .get(qubit as usize)
                .ok_or_else(|| Error::Domain(format!("qubit {qubit} out of range")))?;
            if t <= horizon {
                for &c in checks {
                    out.toggle(c as usize, t);
                }
            }
        }
        Fault::Measurement { ancilla, t } => {
            let checks = ancilla_checks(sched, ancilla, t)?;
            for tt in [t, t + 1] {
                if tt <= horizon {
                    for &c in checks {
                        out.toggle(c as usize, tt);
                    }
                }
            }
        }
    }
    Ok(())
}

/// `Δ_t` of a history.
pub fn delta(h: &ErrorHistory, sched: &SectorSchedule, t: u32) -> Result<BitVec> {
    if t == 0 {
        return Err(Error::Domain("Δ is defined for rounds t ≥ 1".into()));
    }
    let mut out = BitVec::zeros(sched.num_checks());
    for f in h.iter() {
        match *f {
            Fault::Data { qubit, t: ft } if ft == t => {
                for &c in &sched.graph.qubit_checks[qubit as usize] {
                    out.toggle(c as usize);
                }
            }
            Fault::Measurement { ancilla, t: ft } if ft == t || ft + 1 == t => {
                for &c in ancilla_checks(sched, ancilla, ft)? {
                    out.toggle(c as usize);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// `Σψ = ⊔_{t=1..T} Δ_t ψ`.
pub fn syndrome_history(h: &ErrorHistory, sched: &SectorSchedule, horizon: u32) -> Result<SyndromeHistory> {
    let mut out = SyndromeHistory::zeros(sched.num_checks(), horizon);
    for f in h.iter() {
        if f.round() > horizon {
            return Err(Error::Domain(format!(
                "fault at round {} beyond horizon {horizon}",
                f.round()
            )));
        }
        apply_fault(sched, f, &mut out)?;
    }
    Ok(out)
}

/// Type of a measurement fault.
pub fn classify(sched: &SectorSchedule, fault: &Fault) -> Result<MeasurementType> {
    match *fault {
        Fault::Measurement { ancilla, t } => Ok(if ancilla_checks(sched, ancilla, t)?.len() == 1 {
            MeasurementType::TypeI
        } else {
            MeasurementType::TypeII
        }),
        Fault::Data { .. } => Err(Error::Domain("only measurement faults have a type".into())),
    }
}

/// `Π`: replaces each type-II fault `(b, t)` by `(Γb, t) + (Γb, t+1)`.
pub fn project(h: &ErrorHistory, sched: &SectorSchedule) -> Result<ErrorHistory> {
    let mut out = ErrorHistory {
        faults: BTreeSet::new(),
        horizon: h.horizon.map(|x| x + 1),
    };
    for f in h.iter() {
        match *f {
            Fault::Measurement { ancilla, t } if classify(sched, f)? == MeasurementType::TypeII => {
                let qubits = &sched.round(t).ancilla_qubits[ancilla as usize];
                let &[q] = qubits.as_slice() else {
                    return Err(Error::Domain(format!(
                        "type-II ancilla #{ancilla} at round {t} couples to {} data qubits",
                        qubits.len()
                    )));
                };
                out.toggle(Fault::Data { qubit: q, t })?;
                out.toggle(Fault::Data { qubit: q, t: t + 1 })?;
            }
            other => out.toggle(other)?,
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON lines
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FaultLine {
    kind: String,
    label: Label,
    t: u32,
}

impl ErrorHistory {
    /// One `{kind, label, t}` object per line, in canonical order.
    pub fn to_json_lines(&self, sched: &SectorSchedule) -> String {
        let mut out = String::new();
        for f in self.iter() {
            let line = match *f {
                Fault::Data { qubit, t } => FaultLine {
                    kind: "data".into(),
                    label: Label::Edge(qubit),
                    t,
                },
                Fault::Measurement { ancilla, t } => FaultLine {
                    kind: "measurement".into(),
                    label: sched.round(t).gadget.ancilla().label(ancilla as usize).clone(),
                    t,
                },
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(s: &str, sched: &SectorSchedule) -> Result<ErrorHistory> {
        let mut h = ErrorHistory::new();
        for line in s.lines().filter(|l| !l.trim().is_empty()) {
            let fl: FaultLine = serde_json::from_str(line)?;
            let f = match (fl.kind.as_str(), &fl.label) {
                ("data", Label::Edge(e)) => Fault::Data { qubit: *e, t: fl.t },
                ("measurement", label) => {
                    if fl.t == 0 {
                        return Err(Error::Domain("fault at round 0".into()));
                    }
                    let b = sched.round(fl.t).gadget.ancilla().require(label)?;
                    Fault::Measurement { ancilla: b as u32, t: fl.t }
                }
                (kind, label) => return Err(Error::Domain(format!("bad fault line: {kind} {label}"))),
            };
            h.toggle(f)?;
        }
        Ok(h)
    }
}
