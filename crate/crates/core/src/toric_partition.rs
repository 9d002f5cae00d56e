//! Toric-code gadgets obtained by cutting the lattice into m×m patches.
//!
//! Cutting along patch boundaries splits every boundary edge into one
//! ancilla qubit per adjacent patch; edges interior to a patch stay unsplit.
//! `m = 1` is the Shor-style extreme. With `m = L` the single patch is still
//! cut open along one row and one column; the Steane-style extreme is the
//! unsplit gadget. In the offset schedule the patch corners move diagonally by `k = m/3` each round,
//! so the gadget sequence has period 3.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::css::{toric_code, CheckGraph, CheckType, CssCode, Orientation, ToricLattice};
use crate::error::{Error, Result};
use crate::f2core::Label;
use crate::gadget::{
    build_transversal_unchecked, dualize, empty_gadget, gadget_sum, Gadget, SplitSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    Aligned,
    Offset,
}

/// A patch partition schedule: patch size `m` and corner movement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PartitionSchedule {
    l: usize,
    m: usize,
    mode: PartitionMode,
}

impl PartitionSchedule {
    pub fn new(l: usize, m: usize, mode: PartitionMode) -> Result<Self> {
        if m == 0 || l % m != 0 {
            return Err(Error::Domain(format!("patch size {m} does not divide L = {l}")));
        }
        if mode == PartitionMode::Offset && m % 3 != 0 {
            return Err(Error::Domain(format!("offset schedule needs m divisible by 3, got {m}")));
        }
        Ok(PartitionSchedule { l, m, mode })
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn patch(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> PartitionMode {
        self.mode
    }

    /// Diagonal corner shift at round `t`.
    pub fn shift(&self, t: u32) -> usize {
        match self.mode {
            PartitionMode::Aligned => 0,
            PartitionMode::Offset => ((self.m / 3) as u64 * t as u64 % self.l as u64) as usize,
        }
    }

    /// Number of distinct gadgets in the sequence.
    pub fn period(&self) -> u32 {
        match self.mode {
            PartitionMode::Offset => 3,
            PartitionMode::Aligned => 1,
        }
    }

    /// `G_t` for the given check type. Rounds start at `t = 1`.
    pub fn gadget_at(&self, lattice: &ToricLattice, kind: CheckType, t: u32) -> Result<Gadget> {
        if t == 0 {
            return Err(Error::Domain("round 0 is reserved; rounds start at 1".into()));
        }
        if lattice.size() != self.l {
            return Err(Error::Domain("schedule and lattice sizes differ".into()));
        }
        let s = self.shift(t);
        partition_gadget(lattice, kind, self.m, (s, s))
    }
}

/// Split specification for m×m patches with corners at
/// `(p·m + shift.0, q·m + shift.1)`. Checks are faces for `Z` and vertices
/// for `X`. An edge is split when it crosses a cut line, so `m = L` still
/// cuts the torus once in each direction.
pub fn patch_partition(lattice: &ToricLattice, kind: CheckType, m: usize, corner_shift: (usize, usize)) -> Result<SplitSpec> {
    let l = lattice.size();
    if m == 0 || l % m != 0 {
        return Err(Error::Domain(format!("patch size {m} does not divide L = {l}")));
    }
    let graph = lattice.check_graph(kind);
    let check_label = |c: u32| match kind {
        CheckType::Z => Label::Face(c),
        CheckType::X => Label::Vertex(c),
    };
    // Cut lines sit just before rows and columns congruent to the shift.
    let cut = |x: usize, s: usize| (x + l - s % l) % m == 0;
    let mut spec = SplitSpec::unsplit();
    for (e, &[a, b]) in graph.qubit_checks.iter().enumerate() {
        let (i, j, o) = lattice.edge_coords(e);
        let crosses = match (kind, o) {
            (CheckType::Z, Orientation::Horizontal) => cut(i, corner_shift.0),
            (CheckType::Z, Orientation::Vertical) => cut(j, corner_shift.1),
            (CheckType::X, Orientation::Horizontal) => cut(j + 1, corner_shift.1),
            (CheckType::X, Orientation::Vertical) => cut(i + 1, corner_shift.0),
        };
        if crosses {
            spec.set(Label::Edge(e as u32), vec![vec![check_label(a)], vec![check_label(b)]]);
        }
    }
    Ok(spec)
}

/// Procedure-1 gadget for the given partition, of the requested check type.
pub fn partition_gadget(lattice: &ToricLattice, kind: CheckType, m: usize, corner_shift: (usize, usize)) -> Result<Gadget> {
    let spec = patch_partition(lattice, kind, m, corner_shift)?;
    let g = match kind {
        CheckType::Z => build_transversal_unchecked(lattice.boundary(), &spec)?,
        CheckType::X => dualize(&build_transversal_unchecked(lattice.coboundary(), &spec)?),
    };
    Ok(g)
}

/// Ancillas whose measurement flips a single syndrome bit (`|H̃ᵀb| = 1`).
pub fn split_edge_set(g: &Gadget) -> Vec<Label> {
    let ht = g.h_tilde().transpose();
    (0..ht.domain().len())
        .filter(|&b| ht.index_column(b).len() == 1)
        .map(|b| g.ancilla().label(b).clone())
        .collect()
}

/// Connected components of the ancilla block under `H̃`, as ancilla index
/// lists. Each component is an independently prepared sub-block.
pub fn ancilla_blocks(g: &Gadget) -> Vec<Vec<usize>> {
    let n = g.ancilla().len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for col in g.h_tilde().index_columns() {
        if let Some((&first, rest)) = col.split_first() {
            for &b in rest {
                let (ra, rb) = (find(&mut parent, first as usize), find(&mut parent, b as usize));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for b in 0..n {
        let r = find(&mut parent, b);
        groups.entry(r).or_default().push(b);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// Gadget families and compiled schedules
// ---------------------------------------------------------------------------

/// Extraction scheme used for every round of a memory experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Family {
    /// One code-block ancilla (`m = L`).
    Steane,
    /// One cat state per check (`m = 1`).
    Shor,
    /// One ancilla qubit per check, coupled by four CNOTs.
    Bare,
    Aligned { m: usize },
    Offset { m: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Steane => "steane",
            Family::Shor => "shor",
            Family::Bare => "bare",
            Family::Aligned { .. } => "aligned",
            Family::Offset { .. } => "offset",
        }
    }

    /// Patch size, with Steane = L and Shor/Bare = 1.
    pub fn patch_size(&self, l: usize) -> usize {
        match *self {
            Family::Steane => l,
            Family::Shor | Family::Bare => 1,
            Family::Aligned { m } | Family::Offset { m } => m,
        }
    }

    pub fn from_parts(mode: &str, m: Option<usize>) -> Result<Family> {
        let need_m = || m.ok_or_else(|| Error::Config(format!("mode `{mode}` needs a patch size m")));
        Ok(match mode {
            "steane" => Family::Steane,
            "shor" => Family::Shor,
            "bare" => Family::Bare,
            "aligned" => Family::Aligned { m: need_m()? },
            "offset" => Family::Offset { m: need_m()? },
            other => return Err(Error::Config(format!("unknown schedule mode `{other}`"))),
        })
    }

    pub(crate) fn partition(&self, l: usize) -> Result<Option<PartitionSchedule>> {
        Ok(match *self {
            Family::Steane | Family::Bare => None,
            Family::Shor => Some(PartitionSchedule::new(l, 1, PartitionMode::Aligned)?),
            Family::Aligned { m } => Some(PartitionSchedule::new(l, m, PartitionMode::Aligned)?),
            Family::Offset { m } => Some(PartitionSchedule::new(l, m, PartitionMode::Offset)?),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Aligned { m } | Family::Offset { m } => write!(f, "{}:{m}", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Family> {
        match s.split_once(':') {
            Some((mode, m)) => {
                let m = m.parse().map_err(|_| Error::Config(format!("bad patch size in `{s}`")))?;
                Family::from_parts(mode, Some(m))
            }
            None => Family::from_parts(s, None),
        }
    }
}

/// One round's gadget in dense form.
#[derive(Clone, Debug)]
pub struct RoundGadget {
    pub gadget: Gadget,
    /// `Γ·b` as data-qubit indices, per ancilla in label order.
    pub ancilla_qubits: Vec<Vec<u32>>,
    /// `H̃ᵀb` as check indices, per ancilla in label order.
    pub ancilla_checks: Vec<Vec<u32>>,
}

impl RoundGadget {
    pub fn from_gadget(gadget: Gadget) -> Self {
        let ancilla_qubits = gadget.gamma().index_columns().to_vec();
        let ancilla_checks = gadget.h_tilde().transpose().index_columns().to_vec();
        RoundGadget {
            gadget,
            ancilla_qubits,
            ancilla_checks,
        }
    }

    pub fn num_ancillas(&self) -> usize {
        self.ancilla_qubits.len()
    }

    /// Ancillas whose measurement error is type-I.
    pub fn split_ancillas(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_ancillas()).filter(|&b| self.ancilla_checks[b].len() == 1)
    }

    pub fn is_type_one(&self, b: usize) -> bool {
        self.ancilla_checks[b].len() == 1
    }
}

/// The gadget sequence of one check type.
#[derive(Clone)]
pub struct SectorSchedule {
    pub graph: Arc<CheckGraph>,
    rounds: Vec<Arc<RoundGadget>>,
}

impl SectorSchedule {
    pub fn kind(&self) -> CheckType {
        self.graph.kind
    }

    pub fn period(&self) -> u32 {
        self.rounds.len() as u32
    }

    /// Gadget used at round `t ≥ 1`.
    pub fn round(&self, t: u32) -> &RoundGadget {
        debug_assert!(t >= 1);
        &self.rounds[(t % self.period()) as usize]
    }

    pub fn num_checks(&self) -> usize {
        self.graph.num_checks()
    }

    pub fn num_qubits(&self) -> usize {
        self.graph.num_qubits()
    }
}

/// A toric memory experiment's extraction schedule for both check types.
#[derive(Clone)]
pub struct ToricSchedule {
    pub family: Family,
    pub lattice: Arc<ToricLattice>,
    pub code: Arc<CssCode>,
    pub z: SectorSchedule,
    pub x: SectorSchedule,
}

impl ToricSchedule {
    pub fn new(l: usize, family: Family) -> Result<Self> {
        let (lattice, code) = toric_code(l)?;
        let partition = family.partition(l)?;
        let mut sectors = Vec::new();
        for kind in [CheckType::Z, CheckType::X] {
            let graph = Arc::new(lattice.check_graph(kind));
            let rounds: Vec<Arc<RoundGadget>> = match partition {
                Some(p) => {
                    // rounds[r] serves every t ≡ r (mod period)
                    let period = p.period();
                    (0..period)
                        .map(|r| {
                            let t = if r == 0 { period } else { r };
                            p.gadget_at(&lattice, kind, t).map(|g| Arc::new(RoundGadget::from_gadget(g)))
                        })
                        .collect::<Result<_>>()?
                }
                None if family == Family::Steane => vec![Arc::new(RoundGadget::from_gadget(steane_round(&lattice, kind)?))],
                None => vec![Arc::new(RoundGadget::from_gadget(bare_gadget(&lattice, &code, kind)?))],
            };
            sectors.push(SectorSchedule { graph, rounds });
        }
        let x = sectors.pop().expect("two sectors");
        let z = sectors.pop().expect("two sectors");
        Ok(ToricSchedule {
            family,
            lattice: Arc::new(lattice),
            code: Arc::new(code),
            z,
            x,
        })
    }

    pub fn size(&self) -> usize {
        self.lattice.size()
    }

    pub fn sector(&self, kind: CheckType) -> &SectorSchedule {
        match kind {
            CheckType::Z => &self.z,
            CheckType::X => &self.x,
        }
    }
}

/// The unsplit gadget: one code-block ancilla.
pub fn steane_round(lattice: &ToricLattice, kind: CheckType) -> Result<Gadget> {
    let unsplit = SplitSpec::unsplit();
    Ok(match kind {
        CheckType::Z => build_transversal_unchecked(lattice.boundary(), &unsplit)?,
        CheckType::X => dualize(&build_transversal_unchecked(lattice.coboundary(), &unsplit)?),
    })
}

/// Sum of bare-ancilla gadgets over all checks of one type.
pub fn bare_gadget(lattice: &ToricLattice, code: &CssCode, kind: CheckType) -> Result<Gadget> {
    let (matrix, target) = match kind {
        CheckType::Z => (lattice.boundary(), code.clone()),
        CheckType::X => (lattice.coboundary(), code.dual()),
    };
    let mut g = empty_gadget(CheckType::Z, lattice.edges());
    for (c, col) in matrix.columns() {
        g = gadget_sum(&g, &crate::gadget::bare_ancilla(&target, &col, c.clone())?)?;
    }
    Ok(match kind {
        CheckType::Z => g,
        CheckType::X => dualize(&g),
    })
}
