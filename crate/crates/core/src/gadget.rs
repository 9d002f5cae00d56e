//! Syndrome-extraction gadgets `(Θ, Λ, Γ, H̃)`.
//!
//! A Z-extraction gadget prepares the ancilla block `Θ` in the CSS state
//! `(im H̃)^⊥ ⊥ im H̃`, applies CNOTs from data qubit `a` to every ancilla
//! qubit `b` with `a ∈ Γ·b`, measures the ancilla in the Z basis and reads the
//! syndrome bits `Λ` through `H̃ᵀ`. It extracts the syndrome of the data check
//! matrix `H = Γ·H̃`, which must satisfy `im H ⊆ C_Z`.
//!
//! X-extraction gadgets are the same tuples with [`CheckType::X`]; they are
//! validated against `C_X` and run with the CNOT orientation reversed.
//!
//! # Example: two weight-4 checks with three ancillas
//!
//! On the Steane code with checks `c1 = {4,5,6,7}` and `c2 = {2,3,6,7}`:
//!
//! * scheme A uses `Γ: a1 ↦ {4,5}, a2 ↦ {2,3,6,7}, a3 ↦ {6,7}` and
//!   `H̃: c1 ↦ {a1,a3}, c2 ↦ {a2}`;
//! * scheme B uses `Γ: a1 ↦ {4,5}, a2 ↦ {2,3}, a3 ↦ {6,7}` and
//!   `H̃: c1 ↦ {a1,a3}, c2 ↦ {a2,a3}`, whose ancilla is a three-qubit cat
//!   state.
//!
//! Both give `Γ·H̃ = (c1 c2)`; the test suite builds them directly.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::css::{CheckType, CssCode};
use crate::error::{Error, Result};
use crate::f2core::{F2Vector, Label, SparseF2Matrix, Universe};

#[derive(Clone, Debug)]
pub struct Gadget {
    kind: CheckType,
    gamma: SparseF2Matrix,
    h_tilde: SparseF2Matrix,
}

/// Reasons a gadget fails [`validate_gadget`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GadgetViolation {
    /// Syndrome bits whose data check column lies outside the stabilizer space.
    pub columns_outside: Vec<Label>,
    /// Number of `C^⊥` basis vectors `u` with `Γᵀu ∉ (im H̃)^⊥`.
    pub dual_containment_failures: usize,
    /// Data universe differs from the code's qubits.
    pub wrong_universe: bool,
}

impl Gadget {
    /// `gamma: F₂[Θ] → F₂[Ω]`, `h_tilde: F₂[Λ] → F₂[Θ]`.
    pub fn new(kind: CheckType, gamma: SparseF2Matrix, h_tilde: SparseF2Matrix) -> Result<Self> {
        if !Universe::same(gamma.domain(), h_tilde.codomain()) {
            return Err(Error::UniverseMismatch("Γ domain and H̃ codomain must both be Θ".into()));
        }
        let h_tilde = h_tilde.rebind(h_tilde.domain(), gamma.domain())?;
        Ok(Gadget { kind, gamma, h_tilde })
    }

    pub fn kind(&self) -> CheckType {
        self.kind
    }

    /// `Θ`.
    pub fn ancilla(&self) -> &Arc<Universe> {
        self.gamma.domain()
    }

    /// `Λ`.
    pub fn syndrome_bits(&self) -> &Arc<Universe> {
        self.h_tilde.domain()
    }

    /// `Ω`.
    pub fn data(&self) -> &Arc<Universe> {
        self.gamma.codomain()
    }

    pub fn gamma(&self) -> &SparseF2Matrix {
        &self.gamma
    }

    pub fn h_tilde(&self) -> &SparseF2Matrix {
        &self.h_tilde
    }

    /// `H = Γ·H̃`.
    pub fn data_check(&self) -> SparseF2Matrix {
        self.gamma
            .compose(&self.h_tilde)
            .expect("universes checked at construction")
    }

    pub fn is_transversal(&self) -> bool {
        self.gamma.index_columns().iter().all(|c| c.len() == 1)
    }
}

/// `H = Γ·H̃`.
pub fn data_check(g: &Gadget) -> SparseF2Matrix {
    g.data_check()
}

pub fn is_transversal(g: &Gadget) -> bool {
    g.is_transversal()
}

/// Checks `im H ⊆ C` where `C` is `C_Z` for Z gadgets and `C_X` for X
/// gadgets, then re-checks the dual containment `Γᵀ(C^⊥) ⊆ (im H̃)^⊥`.
pub fn validate_gadget(g: &Gadget, code: &CssCode) -> std::result::Result<(), GadgetViolation> {
    let mut report = GadgetViolation::default();
    if !Universe::same(g.data(), code.qubits()) {
        report.wrong_universe = true;
        return Err(report);
    }
    let h = g.data_check();
    for (c, col) in h.columns() {
        if !code.in_space(g.kind, &col) {
            report.columns_outside.push(c.clone());
        }
    }
    // C^⊥ = ker of the map a ↦ {j : a ∈ basis_j}.
    let basis = code.basis(g.kind);
    let idx = Universe::new((0..basis.len() as u32).map(Label::Index));
    let rows: Vec<Vec<u32>> = {
        let mut r = vec![Vec::new(); code.n()];
        for (j, v) in basis.iter().enumerate() {
            for a in v.indices() {
                r[a].push(j as u32);
            }
        }
        r
    };
    let check = SparseF2Matrix::from_index_columns(code.qubits(), &idx, rows).expect("valid indices");
    let perp = check.row_reduce().kernel_basis;
    let gamma_t = g.gamma.transpose();
    let cols: Vec<F2Vector> = g.h_tilde.columns().map(|(_, c)| c).collect();
    for u in &perp {
        let w = gamma_t.apply(u).expect("same universe");
        if cols.iter().any(|c| w.inner(c).expect("same universe")) {
            report.dual_containment_failures += 1;
        }
    }
    if report == GadgetViolation::default() {
        Ok(())
    } else {
        Err(report)
    }
}

/// Reindexes `m` onto larger universes holding all its labels.
fn embed(m: &SparseF2Matrix, domain: &Arc<Universe>, codomain: &Arc<Universe>, cols: &mut [Vec<u32>]) -> Result<()> {
    for (j, col) in m.index_columns().iter().enumerate() {
        let dj = domain.require(m.domain().label(j))?;
        cols[dj] = col
            .iter()
            .map(|&r| codomain.require(m.codomain().label(r as usize)).map(|x| x as u32))
            .collect::<Result<_>>()?;
    }
    Ok(())
}

/// `G₁ ⊕ G₂` on disjoint ancilla blocks and syndrome bits.
pub fn gadget_sum(g1: &Gadget, g2: &Gadget) -> Result<Gadget> {
    if g1.kind != g2.kind {
        return Err(Error::Domain("cannot sum X and Z gadgets".into()));
    }
    if !Universe::same(g1.data(), g2.data()) {
        return Err(Error::UniverseMismatch("gadgets act on different data blocks".into()));
    }
    if !g1.ancilla().is_disjoint(g2.ancilla()) {
        return Err(Error::Domain("ancilla blocks overlap".into()));
    }
    if !g1.syndrome_bits().is_disjoint(g2.syndrome_bits()) {
        return Err(Error::Domain("syndrome bits overlap".into()));
    }
    let theta = Universe::new(g1.ancilla().labels().iter().chain(g2.ancilla().labels()).cloned());
    let lambda = Universe::new(
        g1.syndrome_bits()
            .labels()
            .iter()
            .chain(g2.syndrome_bits().labels())
            .cloned(),
    );
    let mut gcols = vec![Vec::new(); theta.len()];
    let mut hcols = vec![Vec::new(); lambda.len()];
    for g in [g1, g2] {
        embed(&g.gamma, &theta, g.data(), &mut gcols)?;
        embed(&g.h_tilde, &lambda, &theta, &mut hcols)?;
    }
    Gadget::new(
        g1.kind,
        SparseF2Matrix::from_index_columns(&theta, g1.data(), gcols)?,
        SparseF2Matrix::from_index_columns(&lambda, &theta, hcols)?,
    )
}

/// The gadget with no ancillas and no syndrome bits.
pub fn empty_gadget(kind: CheckType, data: &Arc<Universe>) -> Gadget {
    let e = Universe::empty();
    Gadget {
        kind,
        gamma: SparseF2Matrix::from_index_columns(&e, data, vec![]).expect("empty"),
        h_tilde: SparseF2Matrix::from_index_columns(&e, &e, vec![]).expect("empty"),
    }
}

fn require_check(code: &CssCode, check: &F2Vector) -> Result<()> {
    if !Universe::same(check.universe(), code.qubits()) {
        return Err(Error::UniverseMismatch("check is not over the code's qubits".into()));
    }
    if !code.in_cz(check) {
        return Err(Error::Domain(format!("check {check:?} is not in C_Z")));
    }
    Ok(())
}

/// A single ancilla qubit `(bit, 0)` coupled to every qubit of `check`.
pub fn bare_ancilla(code: &CssCode, check: &F2Vector, bit: Label) -> Result<Gadget> {
    require_check(code, check)?;
    let theta = Universe::new([Label::ancilla(bit.clone(), 0)]);
    let lambda = Universe::new([bit]);
    let gamma = SparseF2Matrix::from_index_columns(
        &theta,
        code.qubits(),
        vec![check.indices().map(|i| i as u32).collect()],
    )?;
    let h = SparseF2Matrix::from_index_columns(&lambda, &theta, vec![vec![0]])?;
    Gadget::new(CheckType::Z, gamma, h)
}

/// One ancilla `(bit, q)` per qubit `q` of `check`, prepared in a cat state.
pub fn cat_state_gadget(code: &CssCode, check: &F2Vector, bit: Label) -> Result<Gadget> {
    require_check(code, check)?;
    if check.is_zero() {
        return Err(Error::Domain("cat-state gadget needs a non-empty check".into()));
    }
    let theta = Universe::new(check.support().map(|q| Label::pair(bit.clone(), q.clone())));
    let lambda = Universe::new([bit]);
    // Pair labels sort by their second component, so ancilla j couples to the
    // j-th qubit of the check.
    let gamma = SparseF2Matrix::from_index_columns(
        &theta,
        code.qubits(),
        check.indices().map(|q| vec![q as u32]).collect(),
    )?;
    let h = SparseF2Matrix::from_index_columns(&lambda, &theta, vec![(0..theta.len() as u32).collect()])?;
    Gadget::new(CheckType::Z, gamma, h)
}

/// Per-qubit partitions of `Hᵀa` used by [`build_transversal`].
///
/// Qubits without an entry are left unsplit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitSpec {
    parts: BTreeMap<Label, Vec<Vec<Label>>>,
    maximal: bool,
}

impl SplitSpec {
    /// No qubit split: the Steane-style extreme.
    pub fn unsplit() -> Self {
        SplitSpec::default()
    }

    /// Every qubit split into singletons: the Shor-style extreme.
    pub fn maximal() -> Self {
        SplitSpec {
            parts: BTreeMap::new(),
            maximal: true,
        }
    }

    pub fn set(&mut self, qubit: Label, parts: Vec<Vec<Label>>) -> &mut Self {
        self.parts.insert(qubit, parts);
        self
    }

    pub fn get(&self, qubit: &Label) -> Option<&Vec<Vec<Label>>> {
        self.parts.get(qubit)
    }
}

/// Builds a transversal gadget from `H` by splitting each data qubit's
/// checks `ψ_a = Hᵀa` into parts, one ancilla qubit per part.
///
/// Ancilla `(a, k)` is the `k`-th part of qubit `a`, parts ordered by their
/// smallest syndrome bit. The result has `Γ·H̃ = H`, `Γᵀa = Θ_a` and
/// `H̃ᵀ(a, k) = φ_{a,k}`.
pub fn build_transversal(code: &CssCode, h: &SparseF2Matrix, spec: &SplitSpec) -> Result<Gadget> {
    if !Universe::same(h.codomain(), code.qubits()) {
        return Err(Error::UniverseMismatch("H must map into the code's qubits".into()));
    }
    build_transversal_unchecked(h, spec)
}

pub(crate) fn build_transversal_unchecked(h: &SparseF2Matrix, spec: &SplitSpec) -> Result<Gadget> {
    let lambda = h.domain().clone();
    let ht = h.transpose();
    // parts[a] = list of index parts of ψ_a
    let mut all_parts: Vec<Vec<Vec<u32>>> = Vec::with_capacity(ht.domain().len());
    for a in 0..ht.domain().len() {
        let qubit = ht.domain().label(a);
        let psi: &[u32] = ht.index_column(a);
        let parts: Vec<Vec<u32>> = match spec.parts.get(qubit) {
            Some(p) => {
                let mut idx_parts = Vec::with_capacity(p.len());
                let mut seen: Vec<u32> = Vec::new();
                for part in p {
                    if part.is_empty() {
                        return Err(Error::Domain(format!("qubit {qubit}: empty part")));
                    }
                    let mut ip: Vec<u32> = part
                        .iter()
                        .map(|c| lambda.require(c).map(|i| i as u32))
                        .collect::<Result<_>>()?;
                    ip.sort_unstable();
                    if ip.windows(2).any(|w| w[0] == w[1]) {
                        return Err(Error::Domain(format!("qubit {qubit}: repeated label in a part")));
                    }
                    seen.extend_from_slice(&ip);
                    idx_parts.push(ip);
                }
                seen.sort_unstable();
                if seen.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Domain(format!("qubit {qubit}: parts overlap")));
                }
                if seen != psi {
                    return Err(Error::Domain(format!("qubit {qubit}: parts do not cover Hᵀa exactly")));
                }
                idx_parts.sort_by_key(|p| p[0]);
                idx_parts
            }
            None if spec.maximal => psi.iter().map(|&c| vec![c]).collect(),
            None if psi.is_empty() => Vec::new(),
            None => vec![psi.to_vec()],
        };
        all_parts.push(parts);
    }
    let labels: Vec<Label> = all_parts
        .iter()
        .enumerate()
        .flat_map(|(a, parts)| {
            let q = ht.domain().label(a).clone();
            (0..parts.len() as u32).map(move |k| Label::ancilla(q.clone(), k))
        })
        .collect();
    let theta = Universe::new(labels);
    let mut gcols = vec![Vec::new(); theta.len()];
    let mut hcols = vec![Vec::new(); lambda.len()];
    for (a, parts) in all_parts.iter().enumerate() {
        let q = ht.domain().label(a);
        for (k, part) in parts.iter().enumerate() {
            let b = theta.require(&Label::ancilla(q.clone(), k as u32))?;
            gcols[b] = vec![a as u32];
            for &c in part {
                hcols[c as usize].push(b as u32);
            }
        }
    }
    Gadget::new(
        CheckType::Z,
        SparseF2Matrix::from_index_columns(&theta, h.codomain(), gcols)?,
        SparseF2Matrix::from_index_columns(&lambda, &theta, hcols)?,
    )
}

/// Steane-style gadget: one ancilla per data qubit, `Γ` the identity up to
/// the relabelling `a ↦ (a, 0)`, and `H̃ = H`. Requires `im H = C_Z`.
pub fn steane_gadget(code: &CssCode, h: &SparseF2Matrix) -> Result<Gadget> {
    if !Universe::same(h.codomain(), code.qubits()) {
        return Err(Error::UniverseMismatch("H must map into the code's qubits".into()));
    }
    for (c, col) in h.columns() {
        if !code.in_cz(&col) {
            return Err(Error::Domain(format!("column {c} of H is not in C_Z")));
        }
    }
    if h.rank() != code.rank_cz() {
        return Err(Error::Domain("im H is a proper subspace of C_Z".into()));
    }
    let theta = Universe::new(code.qubits().labels().iter().map(|q| Label::ancilla(q.clone(), 0)));
    let gamma = SparseF2Matrix::from_index_columns(
        &theta,
        code.qubits(),
        (0..theta.len() as u32).map(|i| vec![i]).collect(),
    )?;
    let h_tilde = SparseF2Matrix::from_index_columns(h.domain(), &theta, h.index_columns().to_vec())?;
    Gadget::new(CheckType::Z, gamma, h_tilde)
}

/// Reinterprets the tuple for the opposite check type. Validate the result
/// against [`CssCode::dual`]; on the toric code this is the dual lattice,
/// where `∂` and `δ` exchange roles.
pub fn dualize(g: &Gadget) -> Gadget {
    Gadget {
        kind: g.kind.flip(),
        gamma: g.gamma.clone(),
        h_tilde: g.h_tilde.clone(),
    }
}

#[derive(Serialize, Deserialize)]
struct GadgetRepr {
    kind: CheckType,
    data: Vec<Label>,
    ancilla: Vec<Label>,
    syndrome_bits: Vec<Label>,
    gamma: BTreeMap<Label, Vec<Label>>,
    h_tilde: BTreeMap<Label, Vec<Label>>,
}

fn label_columns(m: &SparseF2Matrix) -> BTreeMap<Label, Vec<Label>> {
    m.columns()
        .map(|(l, c)| (l.clone(), c.support().cloned().collect()))
        .collect()
}

impl Serialize for Gadget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GadgetRepr {
            kind: self.kind,
            data: self.data().labels().to_vec(),
            ancilla: self.ancilla().labels().to_vec(),
            syndrome_bits: self.syndrome_bits().labels().to_vec(),
            gamma: label_columns(&self.gamma),
            h_tilde: label_columns(&self.h_tilde),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gadget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = GadgetRepr::deserialize(d)?;
        let data = Universe::new(r.data);
        let theta = Universe::new(r.ancilla);
        let lambda = Universe::new(r.syndrome_bits);
        let gamma = SparseF2Matrix::from_label_columns(&theta, &data, &r.gamma).map_err(D::Error::custom)?;
        let h = SparseF2Matrix::from_label_columns(&lambda, &theta, &r.h_tilde).map_err(D::Error::custom)?;
        Gadget::new(r.kind, gamma, h).map_err(D::Error::custom)
    }
}

impl Gadget {
    /// Rebinds the data universe (e.g. after deserialization) to the code's.
    pub fn with_data(&self, data: &Arc<Universe>) -> Result<Gadget> {
        Ok(Gadget {
            kind: self.kind,
            gamma: self.gamma.rebind(self.gamma.domain(), data)?,
            h_tilde: self.h_tilde.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::css::toric_code;
    use proptest::prelude::*;

    fn steane_code() -> CssCode {
        let q = Universe::new((1..=7).map(Label::Index));
        let rows = [[4u32, 5, 6, 7], [2, 3, 6, 7], [1, 3, 5, 7]];
        let basis: Vec<F2Vector> = rows
            .iter()
            .map(|r| F2Vector::from_indices(&q, r.iter().map(|&i| i as usize - 1)))
            .collect();
        CssCode::new(&q, basis.clone(), basis).unwrap()
    }

    fn hamming_h(code: &CssCode) -> SparseF2Matrix {
        let lambda = Universe::new((0..3).map(Label::Bit));
        let cols = code
            .cz_basis()
            .iter()
            .map(|v| v.indices().map(|i| i as u32).collect())
            .collect();
        SparseF2Matrix::from_index_columns(&lambda, code.qubits(), cols).unwrap()
    }

    #[test]
    fn bare_and_cat_on_a_plaquette() {
        let (lat, code) = toric_code(4).unwrap();
        let plaq = lat.boundary().column_vector(5);
        let bare = bare_ancilla(&code, &plaq, Label::Face(5)).unwrap();
        assert_eq!(bare.ancilla().len(), 1);
        assert_eq!(bare.data_check().column_vector(0), plaq);
        assert!(!bare.is_transversal());
        assert!(validate_gadget(&bare, &code).is_ok());

        let cat = cat_state_gadget(&code, &plaq, Label::Face(5)).unwrap();
        assert_eq!(cat.ancilla().len(), 4);
        assert_eq!(cat.h_tilde().column_vector(0).weight(), 4);
        assert!(cat.is_transversal());
        assert_eq!(cat.data_check().column_vector(0), plaq);
        // (im H̃)^⊥ has dimension |check| − 1.
        assert_eq!(cat.h_tilde().transpose().row_reduce().kernel_basis.len(), 3);
        assert!(validate_gadget(&cat, &code).is_ok());
    }

    #[test]
    fn bare_on_empty_check_is_identity_measurement() {
        let (lat, code) = toric_code(3).unwrap();
        let g = bare_ancilla(&code, &F2Vector::zero(lat.edges()), Label::Bit(0)).unwrap();
        assert!(g.data_check().column_vector(0).is_zero());
        assert!(cat_state_gadget(&code, &F2Vector::zero(lat.edges()), Label::Bit(0)).is_err());
    }

    #[test]
    fn checks_outside_cz_are_rejected() {
        let (lat, code) = toric_code(3).unwrap();
        let e = F2Vector::from_indices(lat.edges(), [0]);
        assert!(matches!(bare_ancilla(&code, &e, Label::Bit(0)), Err(Error::Domain(_))));
        assert!(matches!(cat_state_gadget(&code, &e, Label::Bit(0)), Err(Error::Domain(_))));
    }

    #[test]
    fn weight_one_cat_is_bare() {
        let q = Universe::new((0..2).map(Label::Index));
        let z = F2Vector::from_indices(&q, [1]);
        let code = CssCode::new(&q, vec![], vec![z.clone()]).unwrap();
        let cat = cat_state_gadget(&code, &z, Label::Bit(0)).unwrap();
        let bare = bare_ancilla(&code, &z, Label::Bit(0)).unwrap();
        assert_eq!(cat.data_check(), bare.data_check());
        assert_eq!(cat.ancilla().len(), bare.ancilla().len());
        assert!(cat.is_transversal() && bare.is_transversal());
    }

    #[test]
    fn sum_of_bare_gadgets_reproduces_boundary() {
        let (lat, code) = toric_code(3).unwrap();
        let mut g = empty_gadget(CheckType::Z, lat.edges());
        for (f, col) in lat.boundary().columns() {
            g = gadget_sum(&g, &bare_ancilla(&code, &col, f.clone()).unwrap()).unwrap();
        }
        assert_eq!(g.ancilla().len(), 9);
        let h = g.data_check();
        assert_eq!(h, lat.boundary().rebind(h.domain(), lat.edges()).unwrap());
        // Γ itself equals H up to the ancilla relabelling.
        for (j, col) in g.gamma().index_columns().iter().enumerate() {
            let f = match g.ancilla().label(j) {
                Label::Ancilla(f, 0) => f.as_ref().clone(),
                other => panic!("unexpected ancilla {other}"),
            };
            assert_eq!(col.as_slice(), lat.boundary().column(&f).unwrap().indices().map(|i| i as u32).collect::<Vec<_>>());
        }
        assert!(validate_gadget(&g, &code).is_ok());
    }

    #[test]
    fn sum_rejects_overlap_and_keeps_identity() {
        let (lat, code) = toric_code(3).unwrap();
        let col = lat.boundary().column_vector(0);
        let a = bare_ancilla(&code, &col, Label::Face(0)).unwrap();
        assert!(matches!(gadget_sum(&a, &a), Err(Error::Domain(_))));
        let e = empty_gadget(CheckType::Z, lat.edges());
        let s = gadget_sum(&a, &e).unwrap();
        assert_eq!(s.data_check(), a.data_check());
        assert_eq!(s.ancilla().len(), 1);
    }

    #[test]
    fn shor_is_a_sum_of_cats() {
        let (lat, code) = toric_code(3).unwrap();
        let shor = build_transversal(&code, lat.boundary(), &SplitSpec::maximal()).unwrap();
        assert_eq!(shor.ancilla().len(), 4 * 9);
        let mut sum = empty_gadget(CheckType::Z, lat.edges());
        for (f, col) in lat.boundary().columns() {
            sum = gadget_sum(&sum, &cat_state_gadget(&code, &col, f.clone()).unwrap()).unwrap();
        }
        assert_eq!(sum.ancilla().len(), shor.ancilla().len());
        assert_eq!(sum.data_check(), shor.data_check());
        let ht = shor.h_tilde();
        for c in 0..ht.domain().len() {
            for d in c + 1..ht.domain().len() {
                let a = ht.column_vector(c);
                let b = ht.column_vector(d);
                assert!(a.indices().all(|i| !b.bits().get(i)));
            }
        }
    }

    #[test]
    fn steane_gadget_on_toric_and_hamming() {
        let (lat, code) = toric_code(4).unwrap();
        let g = steane_gadget(&code, lat.boundary()).unwrap();
        assert_eq!(g.ancilla().len(), 32);
        assert!(g.is_transversal());
        assert_eq!(g.data_check(), *lat.boundary());
        assert!(validate_gadget(&g, &code).is_ok());
        let unsplit = build_transversal(&code, lat.boundary(), &SplitSpec::unsplit()).unwrap();
        assert_eq!(unsplit.h_tilde().index_columns(), g.h_tilde().index_columns());

        let steane = steane_code();
        let h = hamming_h(&steane);
        let g = steane_gadget(&steane, &h).unwrap();
        assert!(validate_gadget(&g, &steane).is_ok());
        assert_eq!(g.h_tilde().index_columns(), h.index_columns());
        // Ancilla stabilizers: Z-part im H̃ ≅ C_Z, X-part (im H̃)^⊥ ≅ C_Z^⊥.
        assert_eq!(g.h_tilde().rank(), steane.rank_cz());
        assert_eq!(g.h_tilde().transpose().row_reduce().kernel_basis.len(), 7 - 3);
    }

    #[test]
    fn steane_gadget_needs_full_image() {
        let (lat, code) = toric_code(3).unwrap();
        let lambda = Universe::new([Label::Face(0)]);
        let h = SparseF2Matrix::from_index_columns(
            &lambda,
            lat.edges(),
            vec![lat.face_edges(0).to_vec()],
        )
        .unwrap();
        assert!(matches!(steane_gadget(&code, &h), Err(Error::Domain(_))));
    }

    #[test]
    fn fully_split_toric_sizes() {
        let (lat, code) = toric_code(5).unwrap();
        let g = build_transversal(&code, lat.boundary(), &SplitSpec::maximal()).unwrap();
        assert_eq!(g.ancilla().len(), 4 * 25);
        for (_, col) in g.h_tilde().columns() {
            assert_eq!(col.weight(), 4);
        }
    }

    #[test]
    fn invalid_split_specs() {
        let (lat, code) = toric_code(3).unwrap();
        let e = Label::Edge(0);
        let faces: Vec<Label> = lat.edge_faces(0).iter().map(|&f| Label::Face(f)).collect();
        let mut spec = SplitSpec::unsplit();
        spec.set(e.clone(), vec![vec![faces[0].clone()], vec![]]);
        assert!(build_transversal(&code, lat.boundary(), &spec).is_err());
        spec.set(e.clone(), vec![vec![faces[0].clone()], vec![faces[0].clone()]]);
        assert!(build_transversal(&code, lat.boundary(), &spec).is_err());
        spec.set(e.clone(), vec![vec![faces[0].clone()]]);
        let err = build_transversal(&code, lat.boundary(), &spec).unwrap_err();
        assert!(err.to_string().contains("e0"));
        spec.set(e, vec![vec![faces[1].clone()], vec![faces[0].clone()]]);
        let g = build_transversal(&code, lat.boundary(), &spec).unwrap();
        // Parts are reordered by smallest label.
        let b0 = g.ancilla().require(&Label::ancilla(Label::Edge(0), 0)).unwrap();
        let first = faces.iter().min().unwrap();
        assert_eq!(g.h_tilde().transpose().column_vector(b0).support().next(), Some(first));
    }

    #[test]
    fn scheme_a_and_b() {
        let code = steane_code();
        let q = code.qubits().clone();
        let theta = Universe::new((1..=3).map(Label::Index));
        let lambda = Universe::new((1..=2).map(Label::Bit));
        let idx = |xs: &[usize]| xs.iter().map(|&i| (i - 1) as u32).collect::<Vec<_>>();
        let gamma_b = SparseF2Matrix::from_index_columns(&theta, &q, vec![idx(&[4, 5]), idx(&[2, 3]), idx(&[6, 7])]).unwrap();
        let h_b = SparseF2Matrix::from_index_columns(&lambda, &theta, vec![vec![0, 2], vec![1, 2]]).unwrap();
        let b = Gadget::new(CheckType::Z, gamma_b, h_b).unwrap();
        let gamma_a = SparseF2Matrix::from_index_columns(&theta, &q, vec![idx(&[4, 5]), idx(&[2, 3, 6, 7]), idx(&[6, 7])]).unwrap();
        let h_a = SparseF2Matrix::from_index_columns(&lambda, &theta, vec![vec![0, 2], vec![1]]).unwrap();
        let a = Gadget::new(CheckType::Z, gamma_a, h_a).unwrap();
        for g in [&a, &b] {
            assert!(validate_gadget(g, &code).is_ok());
            assert_eq!(g.ancilla().len(), 3);
            let h = g.data_check();
            assert_eq!(h.index_column(0), idx(&[4, 5, 6, 7]).as_slice());
            assert_eq!(h.index_column(1), idx(&[2, 3, 6, 7]).as_slice());
        }
        // Scheme B's ancilla is a three-qubit cat state.
        let perp = b.h_tilde().transpose().row_reduce().kernel_basis;
        assert_eq!(perp.len(), 1);
        assert_eq!(perp[0].weight(), 3);
    }

    #[test]
    fn dualize_is_an_involution_and_valid_on_dual() {
        let (lat, code) = toric_code(4).unwrap();
        let g = steane_gadget(&code, lat.boundary()).unwrap();
        let d = dualize(&g);
        assert_eq!(d.kind(), CheckType::X);
        assert_eq!(d.ancilla().len(), g.ancilla().len());
        assert_eq!(d.syndrome_bits().len(), g.syndrome_bits().len());
        assert!(validate_gadget(&d, &code.dual()).is_ok());
        assert!(validate_gadget(&d, &code).is_err());
        let dd = dualize(&d);
        assert_eq!(dd.kind(), g.kind());
        assert_eq!(dd.gamma(), g.gamma());
        assert_eq!(dd.h_tilde(), g.h_tilde());
    }

    #[test]
    fn x_gadget_from_coboundary() {
        let (lat, code) = toric_code(4).unwrap();
        let z = build_transversal(&code.dual(), lat.coboundary(), &SplitSpec::maximal()).unwrap();
        let x = dualize(&z);
        assert!(validate_gadget(&x, &code).is_ok());
    }

    #[test]
    fn gadget_json_round_trip() {
        let (lat, code) = toric_code(3).unwrap();
        let g = build_transversal(&code, lat.boundary(), &SplitSpec::maximal()).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: Gadget = serde_json::from_str(&s).unwrap();
        let back = back.with_data(lat.edges()).unwrap();
        assert_eq!(back.data_check(), g.data_check());
        assert!(validate_gadget(&back, &code).is_ok());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["gamma"]["a(e0,0)"], serde_json::json!(["e0"]));
    }

    /// Random toy code: C_Z spanned by up to 6 random checks on 8 qubits.
    fn toy() -> impl Strategy<Value = (Vec<Vec<usize>>, Vec<Vec<usize>>)> {
        let vecs = |k| proptest::collection::vec(proptest::collection::vec(0usize..8, 1..5), 1..k);
        (vecs(7), vecs(7))
    }

    proptest! {
        #[test]
        fn validate_agrees_with_enumeration((checks, cols) in toy()) {
            let q = Universe::new((0..8).map(Label::Index));
            let basis: Vec<F2Vector> = checks.iter().map(|c| F2Vector::from_indices(&q, c.iter().copied())).collect();
            let code = CssCode::new(&q, vec![], basis.clone()).unwrap();
            let theta = Universe::new((0..cols.len() as u32).map(Label::Index));
            let lambda = Universe::new((0..cols.len() as u32).map(Label::Bit));
            let gamma = SparseF2Matrix::from_index_columns(&theta, &q, cols.iter().map(|c| c.iter().map(|&i| i as u32).collect()).collect()).unwrap();
            let h = SparseF2Matrix::from_index_columns(&lambda, &theta, (0..cols.len() as u32).map(|i| vec![i]).collect()).unwrap();
            let g2 = Gadget::new(CheckType::Z, gamma, h).unwrap();
            let brute = g2.data_check().columns().all(|(_, col)| {
                (0u32..1 << basis.len()).any(|mask| {
                    let mut acc = F2Vector::zero(&q);
                    for (k, b) in basis.iter().enumerate() {
                        if mask >> k & 1 == 1 { acc.add_assign(b).unwrap(); }
                    }
                    acc == col
                })
            });
            prop_assert_eq!(validate_gadget(&g2, &code).is_ok(), brute);
        }

        #[test]
        fn procedure_one_invariants(splits in proptest::collection::vec(any::<bool>(), 18)) {
            let (lat, code) = toric_code(3).unwrap();
            let mut spec = SplitSpec::unsplit();
            for (e, &s) in splits.iter().enumerate() {
                if s {
                    let parts = lat.edge_faces(e).iter().map(|&f| vec![Label::Face(f)]).collect();
                    spec.set(Label::Edge(e as u32), parts);
                }
            }
            let g = build_transversal(&code, lat.boundary(), &spec).unwrap();
            prop_assert!(g.is_transversal());
            prop_assert_eq!(g.data_check(), lat.boundary().clone());
            prop_assert!(validate_gadget(&g, &code).is_ok());
            let n = g.ancilla().len();
            prop_assert!((18..=36).contains(&n));
            prop_assert_eq!(n, 18 + splits.iter().filter(|&&s| s).count());
        }
    }
}
