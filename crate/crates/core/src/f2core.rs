//! Sparse linear algebra over GF(2) on vectors indexed by finite label sets.
//!
//! A vector of `F2[Ω]` is a finite subset of `Ω`; addition is symmetric
//! difference. Labels are interned into a sorted [`Universe`] so that every
//! vector is stored as a dense bitset over the universe's indices, while the
//! public API still speaks in terms of [`Label`]s.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::de::Deserializer;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// BitVec
// ---------------------------------------------------------------------------

/// Fixed-length dense bitset.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = BitVec::zeros(len);
        for i in indices {
            v.toggle(i);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the overlap with `other`.
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + tz)
                }
            })
        })
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter_ones()).finish()
    }
}

// ---------------------------------------------------------------------------
// Label
// ---------------------------------------------------------------------------

/// Element of a label universe.
///
/// String form (used by every JSON format): `e3`, `f2`, `v7`, `b0`, `i5`,
/// `a(e3,1)` for the `1`-th split part of data qubit `e3`, `c(b0,e3)` for the
/// cat-state ancilla of bit `b0` coupled to `e3`, and `t(f2,4)` for a
/// spacetime site.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Edge(u32),
    Face(u32),
    Vertex(u32),
    Bit(u32),
    Index(u32),
    Ancilla(Box<Label>, u32),
    Pair(Box<Label>, Box<Label>),
    Timed(Box<Label>, u32),
}

impl Label {
    pub fn ancilla(base: Label, part: u32) -> Label {
        Label::Ancilla(Box::new(base), part)
    }

    pub fn pair(a: Label, b: Label) -> Label {
        Label::Pair(Box::new(a), Box::new(b))
    }

    pub fn timed(base: Label, t: u32) -> Label {
        Label::Timed(Box::new(base), t)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Edge(i) => write!(f, "e{i}"),
            Label::Face(i) => write!(f, "f{i}"),
            Label::Vertex(i) => write!(f, "v{i}"),
            Label::Bit(i) => write!(f, "b{i}"),
            Label::Index(i) => write!(f, "i{i}"),
            Label::Ancilla(base, part) => write!(f, "a({base},{part})"),
            Label::Pair(a, b) => write!(f, "c({a},{b})"),
            Label::Timed(base, t) => write!(f, "t({base},{t})"),
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadLabel(s.to_string());
        let (label, rest) = parse_label(s.trim()).ok_or_else(bad)?;
        if rest.is_empty() {
            Ok(label)
        } else {
            Err(bad())
        }
    }
}

fn parse_u32(s: &str) -> Option<(u32, &str)> {
    let end = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    if end == 0 {
        return None;
    }
    Some((s[..end].parse().ok()?, &s[end..]))
}

fn parse_label(s: &str) -> Option<(Label, &str)> {
    let mut chars = s.chars();
    let tag = chars.next()?;
    let rest = chars.as_str();
    if rest.starts_with('(') {
        let inner = &rest[1..];
        let (first, after) = parse_label(inner)?;
        let after = after.strip_prefix(',')?;
        let (label, after) = match tag {
            'a' | 't' => {
                let (n, after) = parse_u32(after)?;
                let label = if tag == 'a' {
                    Label::Ancilla(Box::new(first), n)
                } else {
                    Label::Timed(Box::new(first), n)
                };
                (label, after)
            }
            'c' => {
                let (second, after) = parse_label(after)?;
                (Label::Pair(Box::new(first), Box::new(second)), after)
            }
            _ => return None,
        };
        let after = after.strip_prefix(')')?;
        return Some((label, after));
    }
    let (n, after) = parse_u32(rest)?;
    let label = match tag {
        'e' => Label::Edge(n),
        'f' => Label::Face(n),
        'v' => Label::Vertex(n),
        'b' => Label::Bit(n),
        'i' => Label::Index(n),
        _ => return None,
    };
    Some((label, after))
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Universe
// ---------------------------------------------------------------------------

static NEXT_UNIVERSE_ID: AtomicU64 = AtomicU64::new(1);

/// A finite, sorted set of labels with dense indices.
///
/// Index order equals label order, so "lowest label" and "lowest index"
/// coincide everywhere.
pub struct Universe {
    id: u64,
    labels: Vec<Label>,
    index: HashMap<Label, u32>,
}

impl Universe {
    pub fn new(labels: impl IntoIterator<Item = Label>) -> Arc<Universe> {
        let mut labels: Vec<Label> = labels.into_iter().collect();
        labels.sort();
        labels.dedup();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        Arc::new(Universe {
            id: NEXT_UNIVERSE_ID.fetch_add(1, Ordering::Relaxed),
            labels,
            index,
        })
    }

    pub fn empty() -> Arc<Universe> {
        Universe::new(std::iter::empty())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> &Label {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.index.get(label).map(|&i| i as usize)
    }

    pub fn require(&self, label: &Label) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.index.contains_key(label)
    }

    /// Two universes are the same when they hold the same labels.
    pub fn same(a: &Universe, b: &Universe) -> bool {
        a.id == b.id || a.labels == b.labels
    }

    pub fn is_disjoint(&self, other: &Universe) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.labels.iter().all(|l| !large.contains(l))
    }
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Universe#{}({} labels)", self.id, self.labels.len())
    }
}

fn check_same(a: &Universe, b: &Universe, what: &str) -> Result<()> {
    if Universe::same(a, b) {
        Ok(())
    } else {
        Err(Error::UniverseMismatch(format!(
            "{what}: {} labels vs {} labels",
            a.len(),
            b.len()
        )))
    }
}

// ---------------------------------------------------------------------------
// F2Vector
// ---------------------------------------------------------------------------

/// A vector of `F2[Ω]`, i.e. a finite subset of the universe `Ω`.
#[derive(Clone)]
pub struct F2Vector {
    universe: Arc<Universe>,
    bits: BitVec,
}

impl F2Vector {
    pub fn zero(universe: &Arc<Universe>) -> Self {
        F2Vector {
            universe: universe.clone(),
            bits: BitVec::zeros(universe.len()),
        }
    }

    /// Builds a vector from labels; repeated labels cancel in pairs.
    pub fn from_labels<'a>(
        universe: &Arc<Universe>,
        labels: impl IntoIterator<Item = &'a Label>,
    ) -> Result<Self> {
        let mut v = F2Vector::zero(universe);
        for l in labels {
            v.bits.toggle(universe.require(l)?);
        }
        Ok(v)
    }

    pub fn from_indices(universe: &Arc<Universe>, indices: impl IntoIterator<Item = usize>) -> Self {
        F2Vector {
            universe: universe.clone(),
            bits: BitVec::from_indices(universe.len(), indices),
        }
    }

    pub fn from_bits(universe: &Arc<Universe>, bits: BitVec) -> Self {
        assert_eq!(bits.len(), universe.len(), "bitset length must match universe");
        F2Vector {
            universe: universe.clone(),
            bits,
        }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn into_bits(self) -> BitVec {
        self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.is_zero()
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.universe
            .index_of(label)
            .is_some_and(|i| self.bits.get(i))
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    /// Labels of the support, in label order.
    pub fn support(&self) -> impl Iterator<Item = &Label> + '_ {
        self.bits.iter_ones().map(|i| self.universe.label(i))
    }

    pub fn add(&self, other: &F2Vector) -> Result<F2Vector> {
        check_same(&self.universe, &other.universe, "add")?;
        let mut bits = self.bits.clone();
        bits.xor_assign(&other.bits);
        Ok(F2Vector {
            universe: self.universe.clone(),
            bits,
        })
    }

    pub fn add_assign(&mut self, other: &F2Vector) -> Result<()> {
        check_same(&self.universe, &other.universe, "add")?;
        self.bits.xor_assign(&other.bits);
        Ok(())
    }

    /// Standard inner product `|a ∩ b| mod 2`.
    pub fn inner(&self, other: &F2Vector) -> Result<bool> {
        check_same(&self.universe, &other.universe, "inner product")?;
        Ok(self.bits.dot(&other.bits))
    }
}

impl PartialEq for F2Vector {
    fn eq(&self, other: &Self) -> bool {
        Universe::same(&self.universe, &other.universe) && self.bits == other.bits
    }
}

impl Eq for F2Vector {}

impl fmt::Debug for F2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.support()).finish()
    }
}

/// `a + b` (symmetric difference).
pub fn add(a: &F2Vector, b: &F2Vector) -> Result<F2Vector> {
    a.add(b)
}

/// `⟨a, b⟩ = |a ∩ b| mod 2`.
pub fn inner_product(a: &F2Vector, b: &F2Vector) -> Result<bool> {
    a.inner(b)
}

// ---------------------------------------------------------------------------
// SparseF2Matrix
// ---------------------------------------------------------------------------

/// Linear map `F2[domain] → F2[codomain]` stored column by column.
#[derive(Clone)]
pub struct SparseF2Matrix {
    domain: Arc<Universe>,
    codomain: Arc<Universe>,
    /// `columns[a]` is the sorted support of `M·a` as codomain indices.
    columns: Vec<Vec<u32>>,
}

impl SparseF2Matrix {
    /// Builds a matrix from index columns. Duplicate entries cancel.
    pub fn from_index_columns(
        domain: &Arc<Universe>,
        codomain: &Arc<Universe>,
        columns: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if columns.len() != domain.len() {
            return Err(Error::Domain(format!(
                "expected {} columns, got {}",
                domain.len(),
                columns.len()
            )));
        }
        let n = codomain.len() as u32;
        let columns = columns
            .into_iter()
            .map(|mut col| {
                if let Some(&bad) = col.iter().find(|&&r| r >= n) {
                    return Err(Error::Domain(format!("row index {bad} outside codomain")));
                }
                col.sort_unstable();
                let mut out: Vec<u32> = Vec::with_capacity(col.len());
                for r in col {
                    if out.last() == Some(&r) {
                        out.pop();
                    } else {
                        out.push(r);
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseF2Matrix {
            domain: domain.clone(),
            codomain: codomain.clone(),
            columns,
        })
    }

    /// Builds a matrix from a label map; absent domain labels are zero columns.
    pub fn from_label_columns(
        domain: &Arc<Universe>,
        codomain: &Arc<Universe>,
        columns: &BTreeMap<Label, Vec<Label>>,
    ) -> Result<Self> {
        let mut cols = vec![Vec::new(); domain.len()];
        for (a, rows) in columns {
            let j = domain.require(a)?;
            cols[j] = rows
                .iter()
                .map(|r| codomain.require(r).map(|i| i as u32))
                .collect::<Result<_>>()?;
        }
        SparseF2Matrix::from_index_columns(domain, codomain, cols)
    }

    pub fn identity(universe: &Arc<Universe>) -> Self {
        SparseF2Matrix {
            domain: universe.clone(),
            codomain: universe.clone(),
            columns: (0..universe.len() as u32).map(|i| vec![i]).collect(),
        }
    }

    pub fn domain(&self) -> &Arc<Universe> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<Universe> {
        &self.codomain
    }

    pub fn index_column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn index_columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    /// `M·a` for a single domain label.
    pub fn column(&self, label: &Label) -> Result<F2Vector> {
        let j = self.domain.require(label)?;
        Ok(self.column_vector(j))
    }

    pub fn column_vector(&self, j: usize) -> F2Vector {
        F2Vector::from_indices(
            &self.codomain,
            self.columns[j].iter().map(|&r| r as usize),
        )
    }

    pub fn columns(&self) -> impl Iterator<Item = (&Label, F2Vector)> + '_ {
        (0..self.columns.len()).map(|j| (self.domain.label(j), self.column_vector(j)))
    }

    /// `M·v`.
    pub fn apply(&self, v: &F2Vector) -> Result<F2Vector> {
        check_same(&self.domain, v.universe(), "matrix application")?;
        let mut out = BitVec::zeros(self.codomain.len());
        for j in v.indices() {
            for &r in &self.columns[j] {
                out.toggle(r as usize);
            }
        }
        Ok(F2Vector::from_bits(&self.codomain, out))
    }

    pub fn transpose(&self) -> SparseF2Matrix {
        let mut cols = vec![Vec::new(); self.codomain.len()];
        for (j, col) in self.columns.iter().enumerate() {
            for &r in col {
                cols[r as usize].push(j as u32);
            }
        }
        SparseF2Matrix {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            columns: cols,
        }
    }

    /// `self · rhs`, where `rhs: A → B` and `self: B → C`.
    pub fn compose(&self, rhs: &SparseF2Matrix) -> Result<SparseF2Matrix> {
        check_same(&self.domain, &rhs.codomain, "composition")?;
        let cols = rhs
            .columns
            .iter()
            .map(|col| {
                let mut acc: Vec<u32> = col
                    .iter()
                    .flat_map(|&b| self.columns[b as usize].iter().copied())
                    .collect();
                acc.sort_unstable();
                let mut out: Vec<u32> = Vec::with_capacity(acc.len());
                let mut k = 0;
                while k < acc.len() {
                    let mut run = 1;
                    while k + run < acc.len() && acc[k + run] == acc[k] {
                        run += 1;
                    }
                    if run % 2 == 1 {
                        out.push(acc[k]);
                    }
                    k += run;
                }
                out
            })
            .collect();
        Ok(SparseF2Matrix {
            domain: rhs.domain.clone(),
            codomain: self.codomain.clone(),
            columns: cols,
        })
    }

    /// Gaussian elimination; see [`RowReduction`].
    pub fn row_reduce(&self) -> RowReduction {
        let n_rows = self.codomain.len();
        let n_cols = self.domain.len();
        let mut basis = PivotBasis::new(n_rows);
        let mut combos: Vec<BitVec> = Vec::new();
        let mut kernel = Vec::new();
        for j in 0..n_cols {
            let mut v = BitVec::from_indices(n_rows, self.columns[j].iter().map(|&r| r as usize));
            let mut combo = BitVec::zeros(n_cols);
            combo.toggle(j);
            // Reduce by existing pivots, tracking the combination of columns.
            while let Some(p) = v.first_one() {
                match basis.pivot_slot(p) {
                    Some(slot) => {
                        v.xor_assign(&basis.rows[slot]);
                        combo.xor_assign(&combos[slot]);
                    }
                    None => break,
                }
            }
            if v.is_zero() {
                kernel.push(F2Vector::from_bits(&self.domain, combo));
            } else {
                basis.insert_reduced(v);
                combos.push(combo);
            }
        }
        RowReduction {
            rank: basis.rows.len(),
            image_basis: basis
                .rows
                .into_iter()
                .map(|b| F2Vector::from_bits(&self.codomain, b))
                .collect(),
            kernel_basis: kernel,
        }
    }

    pub fn rank(&self) -> usize {
        self.row_reduce().rank
    }
}

impl PartialEq for SparseF2Matrix {
    fn eq(&self, other: &Self) -> bool {
        Universe::same(&self.domain, &other.domain)
            && Universe::same(&self.codomain, &other.codomain)
            && self.columns == other.columns
    }
}

impl Eq for SparseF2Matrix {}

impl fmt::Debug for SparseF2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (j, col) in self.columns.iter().enumerate() {
            let rows: Vec<&Label> = col.iter().map(|&r| self.codomain.label(r as usize)).collect();
            map.entry(self.domain.label(j), &rows);
        }
        map.finish()
    }
}

/// `M·v`.
pub fn mat_apply(m: &SparseF2Matrix, v: &F2Vector) -> Result<F2Vector> {
    m.apply(v)
}

pub fn transpose(m: &SparseF2Matrix) -> SparseF2Matrix {
    m.transpose()
}

pub fn row_reduce(m: &SparseF2Matrix) -> RowReduction {
    m.row_reduce()
}

/// Result of reducing a matrix column by column.
#[derive(Debug, Clone)]
pub struct RowReduction {
    pub rank: usize,
    /// Echelon basis of `im M`; every element equals `M·x` for some `x`.
    pub image_basis: Vec<F2Vector>,
    /// Basis of `ker M`.
    pub kernel_basis: Vec<F2Vector>,
}

/// Incrementally maintained echelon basis keyed by lowest set bit.
#[derive(Clone, Debug)]
pub(crate) struct PivotBasis {
    pivot_of: Vec<u32>,
    rows: Vec<BitVec>,
}

const NO_PIVOT: u32 = u32::MAX;

impl PivotBasis {
    pub(crate) fn new(len: usize) -> Self {
        PivotBasis {
            pivot_of: vec![NO_PIVOT; len],
            rows: Vec::new(),
        }
    }

    fn pivot_slot(&self, bit: usize) -> Option<usize> {
        match self.pivot_of[bit] {
            NO_PIVOT => None,
            s => Some(s as usize),
        }
    }

    pub(crate) fn reduce(&self, v: &mut BitVec) {
        // Pivots are lowest bits, so any remaining pivot bit of `v` is
        // eliminated by its row without reintroducing a smaller one.
        let mut from = 0;
        loop {
            let next = v.iter_ones().skip_while(|&b| b < from).find(|&b| self.pivot_of[b] != NO_PIVOT);
            match next {
                Some(b) => {
                    v.xor_assign(&self.rows[self.pivot_of[b] as usize]);
                    from = b + 1;
                }
                None => break,
            }
        }
    }

    fn insert_reduced(&mut self, v: BitVec) {
        let p = v.first_one().expect("nonzero vector");
        self.pivot_of[p] = self.rows.len() as u32;
        self.rows.push(v);
    }

    /// Inserts `v`; returns false when it was already in the span.
    pub(crate) fn insert(&mut self, mut v: BitVec) -> bool {
        self.reduce(&mut v);
        if v.is_zero() {
            false
        } else {
            self.insert_reduced(v);
            true
        }
    }

    pub(crate) fn contains(&self, v: &BitVec) -> bool {
        let mut w = v.clone();
        self.reduce(&mut w);
        w.is_zero()
    }

    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// True iff `v` is a GF(2) combination of `basis`.
pub fn in_span(v: &F2Vector, basis: &[F2Vector]) -> Result<bool> {
    let mut pivots = PivotBasis::new(v.universe().len());
    for b in basis {
        check_same(v.universe(), b.universe(), "span membership")?;
        pivots.insert(b.bits().clone());
    }
    Ok(pivots.contains(v.bits()))
}

/// Rank of a list of vectors over a shared universe.
pub fn rank_of(vectors: &[F2Vector]) -> usize {
    let Some(first) = vectors.first() else {
        return 0;
    };
    let mut pivots = PivotBasis::new(first.universe().len());
    for v in vectors {
        pivots.insert(v.bits().clone());
    }
    pivots.rank()
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

impl Serialize for SparseF2Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Columns<'a>(&'a SparseF2Matrix);
        impl Serialize for Columns<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let m = self.0;
                let mut map = s.serialize_map(Some(m.columns.len()))?;
                for (j, col) in m.columns.iter().enumerate() {
                    let rows: Vec<&Label> =
                        col.iter().map(|&r| m.codomain.label(r as usize)).collect();
                    map.serialize_entry(m.domain.label(j), &rows)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("domain", self.domain.labels())?;
        map.serialize_entry("codomain", self.codomain.labels())?;
        map.serialize_entry("columns", &Columns(self))?;
        map.end()
    }
}

#[derive(Deserialize)]
struct MatrixRepr {
    domain: Vec<Label>,
    codomain: Vec<Label>,
    columns: BTreeMap<Label, Vec<Label>>,
}

impl<'de> Deserialize<'de> for SparseF2Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        let domain = Universe::new(repr.domain);
        let codomain = Universe::new(repr.codomain);
        SparseF2Matrix::from_label_columns(&domain, &codomain, &repr.columns)
            .map_err(serde::de::Error::custom)
    }
}

impl SparseF2Matrix {
    /// Re-expresses the matrix over caller-supplied universes holding the
    /// same labels (used after deserialization to share `Arc`s).
    pub fn rebind(&self, domain: &Arc<Universe>, codomain: &Arc<Universe>) -> Result<Self> {
        check_same(&self.domain, domain, "rebind domain")?;
        check_same(&self.codomain, codomain, "rebind codomain")?;
        Ok(SparseF2Matrix {
            domain: domain.clone(),
            codomain: codomain.clone(),
            columns: self.columns.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx_universe(n: u32) -> Arc<Universe> {
        Universe::new((0..n).map(Label::Index))
    }

    fn vec_of(u: &Arc<Universe>, xs: &[u32]) -> F2Vector {
        F2Vector::from_labels(u, xs.iter().map(|&i| Label::Index(i)).collect::<Vec<_>>().iter()).unwrap()
    }

    #[test]
    fn add_is_symmetric_difference() {
        let u = idx_universe(5);
        let a = vec_of(&u, &[1, 2]);
        let b = vec_of(&u, &[2, 3]);
        assert_eq!(add(&a, &b).unwrap(), vec_of(&u, &[1, 3]));
        assert!(add(&a, &a).unwrap().is_zero());
        assert_eq!(add(&a, &F2Vector::zero(&u)).unwrap(), a);
    }

    #[test]
    fn inner_product_counts_overlap_parity() {
        let u = idx_universe(5);
        let a = vec_of(&u, &[1, 2]);
        let b = vec_of(&u, &[2, 3]);
        assert!(inner_product(&a, &b).unwrap());
        let c = vec_of(&u, &[0, 1, 4]);
        assert_eq!(inner_product(&c, &c).unwrap(), c.weight() % 2 == 1);
    }

    #[test]
    fn universe_mismatch_is_an_error() {
        let u = idx_universe(3);
        let w = idx_universe(4);
        let a = vec_of(&u, &[1]);
        let b = vec_of(&w, &[1]);
        assert!(matches!(add(&a, &b), Err(Error::UniverseMismatch(_))));
        assert!(matches!(inner_product(&a, &b), Err(Error::UniverseMismatch(_))));
    }

    #[test]
    fn unknown_label_is_rejected() {
        let u = idx_universe(3);
        let err = F2Vector::from_labels(&u, [Label::Edge(0)].iter());
        assert!(matches!(err, Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn identity_apply_and_transpose() {
        let u = idx_universe(6);
        let id = SparseF2Matrix::identity(&u);
        let v = vec_of(&u, &[0, 3, 5]);
        assert_eq!(id.apply(&v).unwrap(), v);
        assert_eq!(id.apply(&F2Vector::zero(&u)).unwrap(), F2Vector::zero(&u));
        assert_eq!(id.transpose(), id);
        assert_eq!(id.rank(), 6);
    }

    #[test]
    fn empty_matrices_have_rank_zero() {
        let e = Universe::empty();
        let m = SparseF2Matrix::from_index_columns(&e, &e, vec![]).unwrap();
        let red = m.row_reduce();
        assert_eq!(red.rank, 0);
        assert!(red.kernel_basis.is_empty());
        let u = idx_universe(3);
        let z = SparseF2Matrix::from_index_columns(&u, &e, vec![vec![]; 3]).unwrap();
        assert_eq!(z.rank(), 0);
        assert_eq!(z.row_reduce().kernel_basis.len(), 3);
    }

    #[test]
    fn label_strings_round_trip() {
        let labels = [
            Label::Edge(12),
            Label::Face(0),
            Label::ancilla(Label::Edge(3), 1),
            Label::pair(Label::Bit(4), Label::Edge(7)),
            Label::timed(Label::ancilla(Label::Face(2), 0), 9),
        ];
        for l in labels {
            let s = l.to_string();
            assert_eq!(s.parse::<Label>().unwrap(), l, "{s}");
        }
        assert!("x3".parse::<Label>().is_err());
        assert!("a(e3,1".parse::<Label>().is_err());
        assert!("e".parse::<Label>().is_err());
    }

    #[test]
    fn matrix_json_shape() {
        let d = idx_universe(2);
        let c = Universe::new([Label::Edge(0), Label::Edge(1), Label::Edge(2)]);
        let m = SparseF2Matrix::from_index_columns(&d, &c, vec![vec![0, 2], vec![1]]).unwrap();
        let js = serde_json::to_value(&m).unwrap();
        assert_eq!(js["domain"], serde_json::json!(["i0", "i1"]));
        assert_eq!(js["columns"]["i0"], serde_json::json!(["e0", "e2"]));
        let back: SparseF2Matrix = serde_json::from_value(js).unwrap();
        assert_eq!(back, m);
    }

    fn arb_matrix() -> impl Strategy<Value = (u32, u32, Vec<Vec<u32>>)> {
        (1u32..9, 1u32..9).prop_flat_map(|(nd, nc)| {
            let col = proptest::collection::vec(0..nc, 0..5);
            (Just(nd), Just(nc), proptest::collection::vec(col, nd as usize))
        })
    }

    fn build((nd, nc, cols): &(u32, u32, Vec<Vec<u32>>)) -> SparseF2Matrix {
        SparseF2Matrix::from_index_columns(&idx_universe(*nd), &Universe::new((0..*nc).map(Label::Bit)), cols.clone())
            .unwrap()
    }

    proptest! {
        #[test]
        fn transpose_is_adjoint(spec in arb_matrix(), a in 0u32..9, b in 0u32..9) {
            let m = build(&spec);
            let (nd, nc) = (m.domain().len() as u32, m.codomain().len() as u32);
            let (a, b) = (a % nc, b % nd);
            let av = F2Vector::from_indices(m.codomain(), [a as usize]);
            let bv = F2Vector::from_indices(m.domain(), [b as usize]);
            let lhs = m.transpose().apply(&av).unwrap().inner(&bv).unwrap();
            let rhs = av.inner(&m.apply(&bv).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(m.transpose().transpose(), m);
        }

        #[test]
        fn rank_nullity_and_transpose_rank(spec in arb_matrix()) {
            let m = build(&spec);
            let red = m.row_reduce();
            prop_assert_eq!(red.rank + red.kernel_basis.len(), m.domain().len());
            prop_assert_eq!(red.rank, m.transpose().rank());
            for k in &red.kernel_basis {
                prop_assert!(m.apply(k).unwrap().is_zero());
            }
            for img in &red.image_basis {
                prop_assert!(in_span(img, &m.columns().map(|(_, c)| c).collect::<Vec<_>>()).unwrap());
            }
        }

        #[test]
        fn add_is_an_abelian_group(xs in proptest::collection::vec(0u32..8, 0..8),
                                   ys in proptest::collection::vec(0u32..8, 0..8),
                                   zs in proptest::collection::vec(0u32..8, 0..8)) {
            let u = idx_universe(8);
            let (x, y, z) = (vec_of(&u, &xs), vec_of(&u, &ys), vec_of(&u, &zs));
            prop_assert_eq!(x.add(&y).unwrap(), y.add(&x).unwrap());
            prop_assert_eq!(x.add(&y).unwrap().add(&z).unwrap(), x.add(&y.add(&z).unwrap()).unwrap());
            prop_assert!(x.add(&x).unwrap().is_zero());
        }

        #[test]
        fn in_span_matches_enumeration(basis in proptest::collection::vec(proptest::collection::vec(0u32..10, 0..6), 0..=12),
                                       target in proptest::collection::vec(0u32..10, 0..6)) {
            let u = idx_universe(10);
            let basis: Vec<F2Vector> = basis.iter().map(|b| vec_of(&u, b)).collect();
            let v = vec_of(&u, &target);
            let mut brute = false;
            for mask in 0u32..(1 << basis.len()) {
                let mut acc = F2Vector::zero(&u);
                for (k, b) in basis.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        acc.add_assign(b).unwrap();
                    }
                }
                if acc == v {
                    brute = true;
                    break;
                }
            }
            prop_assert_eq!(in_span(&v, &basis).unwrap(), brute);
        }
    }
}
