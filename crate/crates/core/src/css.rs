//! CSS codes and the periodic toric lattice.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2core::{BitVec, F2Vector, Label, PivotBasis, SparseF2Matrix, Universe};

/// Which stabilizer type a check (or gadget) measures.
///
/// `Z` checks detect X errors; `X` checks detect Z errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckType {
    Z,
    X,
}

impl CheckType {
    pub fn flip(self) -> CheckType {
        match self {
            CheckType::Z => CheckType::X,
            CheckType::X => CheckType::Z,
        }
    }
}

/// A CSS code `C_X ⊥ C_Z` on the qubit set `Ω`.
#[derive(Clone)]
pub struct CssCode {
    qubits: Arc<Universe>,
    cx_basis: Vec<F2Vector>,
    cz_basis: Vec<F2Vector>,
    cx_pivots: PivotBasis,
    cz_pivots: PivotBasis,
}

/// Non-orthogonal `(x, z)` basis pairs, by position in the two bases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CssViolation {
    pub pairs: Vec<(usize, usize)>,
}

impl CssCode {
    /// Builds a code from spanning sets of `C_X` and `C_Z`. Orthogonality is
    /// not enforced here; see [`validate_css`].
    pub fn new(qubits: &Arc<Universe>, cx_basis: Vec<F2Vector>, cz_basis: Vec<F2Vector>) -> Result<Self> {
        for v in cx_basis.iter().chain(&cz_basis) {
            if !Universe::same(v.universe(), qubits) {
                return Err(Error::UniverseMismatch("code basis vector over foreign universe".into()));
            }
        }
        let mut cx_pivots = PivotBasis::new(qubits.len());
        for v in &cx_basis {
            cx_pivots.insert(v.bits().clone());
        }
        let mut cz_pivots = PivotBasis::new(qubits.len());
        for v in &cz_basis {
            cz_pivots.insert(v.bits().clone());
        }
        Ok(CssCode {
            qubits: qubits.clone(),
            cx_basis,
            cz_basis,
            cx_pivots,
            cz_pivots,
        })
    }

    pub fn qubits(&self) -> &Arc<Universe> {
        &self.qubits
    }

    pub fn cx_basis(&self) -> &[F2Vector] {
        &self.cx_basis
    }

    pub fn cz_basis(&self) -> &[F2Vector] {
        &self.cz_basis
    }

    pub fn basis(&self, kind: CheckType) -> &[F2Vector] {
        match kind {
            CheckType::X => &self.cx_basis,
            CheckType::Z => &self.cz_basis,
        }
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    pub fn rank_cx(&self) -> usize {
        self.cx_pivots.rank()
    }

    pub fn rank_cz(&self) -> usize {
        self.cz_pivots.rank()
    }

    /// `k = n − dim C_X − dim C_Z`; negative values indicate an invalid code.
    pub fn logical_count(&self) -> i64 {
        self.n() as i64 - self.rank_cx() as i64 - self.rank_cz() as i64
    }

    pub fn in_cx(&self, v: &F2Vector) -> bool {
        Universe::same(v.universe(), &self.qubits) && self.cx_pivots.contains(v.bits())
    }

    pub fn in_cz(&self, v: &F2Vector) -> bool {
        Universe::same(v.universe(), &self.qubits) && self.cz_pivots.contains(v.bits())
    }

    pub fn in_space(&self, kind: CheckType, v: &F2Vector) -> bool {
        match kind {
            CheckType::X => self.in_cx(v),
            CheckType::Z => self.in_cz(v),
        }
    }

    /// The same code with the roles of X and Z exchanged.
    pub fn dual(&self) -> CssCode {
        CssCode {
            qubits: self.qubits.clone(),
            cx_basis: self.cz_basis.clone(),
            cz_basis: self.cx_basis.clone(),
            cx_pivots: self.cz_pivots.clone(),
            cz_pivots: self.cx_pivots.clone(),
        }
    }

    /// `X[ψ]` commutes with every Z stabilizer.
    pub fn is_undetectable_x(&self, psi: &F2Vector) -> Result<bool> {
        for z in &self.cz_basis {
            if psi.inner(z)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Undetectable but outside `C_X`.
    pub fn is_logical_x(&self, psi: &F2Vector) -> Result<bool> {
        Ok(self.is_undetectable_x(psi)? && !self.in_cx(psi))
    }

    pub fn is_logical_z(&self, psi: &F2Vector) -> Result<bool> {
        self.dual().is_logical_x(psi)
    }

    /// Minimum weight of an X logical, by exhaustive search over supports
    /// of increasing weight. Limited to 32 qubits.
    pub fn x_distance(&self) -> Result<usize> {
        let n = self.n();
        if n > 32 {
            return Err(Error::Unsupported(format!(
                "exhaustive distance search on {n} qubits (limit 32)"
            )));
        }
        for w in 1..=n {
            let mut combo: Vec<usize> = (0..w).collect();
            loop {
                let v = F2Vector::from_indices(&self.qubits, combo.iter().copied());
                if self.is_logical_x(&v)? {
                    return Ok(w);
                }
                if !next_combination(&mut combo, n) {
                    break;
                }
            }
        }
        Err(Error::Domain("code has no X logical operator".into()))
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Checks `C_X ⊥ C_Z` on the stored bases.
pub fn validate_css(code: &CssCode) -> std::result::Result<(), CssViolation> {
    let mut pairs = Vec::new();
    for (i, x) in code.cx_basis.iter().enumerate() {
        for (j, z) in code.cz_basis.iter().enumerate() {
            if x.bits().dot(z.bits()) {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        Ok(())
    } else {
        Err(CssViolation { pairs })
    }
}

#[derive(Serialize, Deserialize)]
struct CodeRepr {
    qubits: Vec<Label>,
    cx_basis: Vec<Vec<Label>>,
    cz_basis: Vec<Vec<Label>>,
}

impl Serialize for CssCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let to_labels = |b: &[F2Vector]| b.iter().map(|v| v.support().cloned().collect()).collect();
        CodeRepr {
            qubits: self.qubits.labels().to_vec(),
            cx_basis: to_labels(&self.cx_basis),
            cz_basis: to_labels(&self.cz_basis),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CssCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CodeRepr::deserialize(d)?;
        let qubits = Universe::new(repr.qubits);
        let build = |b: &[Vec<Label>]| -> Result<Vec<F2Vector>> {
            b.iter().map(|v| F2Vector::from_labels(&qubits, v.iter())).collect()
        };
        let cx = build(&repr.cx_basis).map_err(serde::de::Error::custom)?;
        let cz = build(&repr.cz_basis).map_err(serde::de::Error::custom)?;
        CssCode::new(&qubits, cx, cz).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Toric lattice
// ---------------------------------------------------------------------------

/// The L×L periodic square lattice.
///
/// Edge `(i, j, h)` joins vertex `(i, j)` to `(i, j+1)` and has index
/// `i·L + j`; edge `(i, j, v)` joins `(i, j)` to `(i+1, j)` and has index
/// `L² + i·L + j`. Face `(i, j)` is bordered by `(i, j, h)`, `(i+1, j, h)`,
/// `(i, j, v)` and `(i, j+1, v)`. Faces and vertices `(i, j)` have index
/// `i·L + j`. All coordinates wrap modulo `L`.
#[derive(Clone)]
pub struct ToricLattice {
    l: usize,
    edges: Arc<Universe>,
    faces: Arc<Universe>,
    vertices: Arc<Universe>,
    boundary: SparseF2Matrix,
    coboundary: SparseF2Matrix,
}

/// Edge orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl ToricLattice {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Domain(format!("toric lattice needs L ≥ 2, got {l}")));
        }
        let n = (l * l) as u32;
        let edges = Universe::new((0..2 * n).map(Label::Edge));
        let faces = Universe::new((0..n).map(Label::Face));
        let vertices = Universe::new((0..n).map(Label::Vertex));
        let mut lat = ToricLattice {
            l,
            edges: edges.clone(),
            faces: faces.clone(),
            vertices: vertices.clone(),
            boundary: SparseF2Matrix::identity(&faces),
            coboundary: SparseF2Matrix::identity(&vertices),
        };
        let bcols = (0..n as usize).map(|f| lat.face_edges(f).to_vec()).collect();
        let ccols = (0..n as usize).map(|v| lat.vertex_edges(v).to_vec()).collect();
        lat.boundary = SparseF2Matrix::from_index_columns(&faces, &edges, bcols)?;
        lat.coboundary = SparseF2Matrix::from_index_columns(&vertices, &edges, ccols)?;
        Ok(lat)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.l
    }

    pub fn num_edges(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn num_faces(&self) -> usize {
        self.l * self.l
    }

    pub fn edges(&self) -> &Arc<Universe> {
        &self.edges
    }

    pub fn faces(&self) -> &Arc<Universe> {
        &self.faces
    }

    pub fn vertices(&self) -> &Arc<Universe> {
        &self.vertices
    }

    /// `∂: F₂[F] → F₂[E]`.
    pub fn boundary(&self) -> &SparseF2Matrix {
        &self.boundary
    }

    /// `δ: F₂[V] → F₂[E]`.
    pub fn coboundary(&self) -> &SparseF2Matrix {
        &self.coboundary
    }

    #[inline]
    fn wrap(&self, x: isize) -> usize {
        x.rem_euclid(self.l as isize) as usize
    }

    #[inline]
    pub fn h(&self, i: isize, j: isize) -> u32 {
        (self.wrap(i) * self.l + self.wrap(j)) as u32
    }

    #[inline]
    pub fn v(&self, i: isize, j: isize) -> u32 {
        (self.l * self.l + self.wrap(i) * self.l + self.wrap(j)) as u32
    }

    /// Index of the face (or vertex) at `(i, j)`.
    #[inline]
    pub fn site(&self, i: isize, j: isize) -> u32 {
        (self.wrap(i) * self.l + self.wrap(j)) as u32
    }

    pub fn site_coords(&self, s: usize) -> (usize, usize) {
        (s / self.l, s % self.l)
    }

    pub fn edge_coords(&self, e: usize) -> (usize, usize, Orientation) {
        let n = self.l * self.l;
        if e < n {
            (e / self.l, e % self.l, Orientation::Horizontal)
        } else {
            ((e - n) / self.l, (e - n) % self.l, Orientation::Vertical)
        }
    }

    pub fn face_edges(&self, f: usize) -> [u32; 4] {
        let (i, j) = self.site_coords(f);
        let (i, j) = (i as isize, j as isize);
        [self.h(i, j), self.h(i + 1, j), self.v(i, j), self.v(i, j + 1)]
    }

    pub fn vertex_edges(&self, v: usize) -> [u32; 4] {
        let (i, j) = self.site_coords(v);
        let (i, j) = (i as isize, j as isize);
        [self.h(i, j), self.h(i, j - 1), self.v(i, j), self.v(i - 1, j)]
    }

    /// The two faces bordering edge `e`.
    pub fn edge_faces(&self, e: usize) -> [u32; 2] {
        let (i, j, o) = self.edge_coords(e);
        let (i, j) = (i as isize, j as isize);
        match o {
            Orientation::Horizontal => [self.site(i, j), self.site(i - 1, j)],
            Orientation::Vertical => [self.site(i, j), self.site(i, j - 1)],
        }
    }

    /// The two endpoints of edge `e`.
    pub fn edge_vertices(&self, e: usize) -> [u32; 2] {
        let (i, j, o) = self.edge_coords(e);
        let (i, j) = (i as isize, j as isize);
        match o {
            Orientation::Horizontal => [self.site(i, j), self.site(i, j + 1)],
            Orientation::Vertical => [self.site(i, j), self.site(i + 1, j)],
        }
    }

    /// Edge-set view of one check type: faces for `Z`, vertices for `X`.
    pub fn check_graph(&self, kind: CheckType) -> CheckGraph {
        let n_sites = self.num_faces();
        let n_edges = self.num_edges();
        let (qubit_checks, check_qubits, checks, matrix) = match kind {
            CheckType::Z => (
                (0..n_edges).map(|e| self.edge_faces(e)).collect(),
                (0..n_sites).map(|f| self.face_edges(f)).collect(),
                self.faces.clone(),
                self.boundary.clone(),
            ),
            CheckType::X => (
                (0..n_edges).map(|e| self.edge_vertices(e)).collect(),
                (0..n_sites).map(|v| self.vertex_edges(v)).collect(),
                self.vertices.clone(),
                self.coboundary.clone(),
            ),
        };
        let logicals = match kind {
            CheckType::Z => self.z_logicals(),
            CheckType::X => self.x_logicals(),
        };
        CheckGraph {
            kind,
            l: self.l,
            qubits: self.edges.clone(),
            checks,
            matrix,
            qubit_checks,
            check_qubits,
            logicals,
        }
    }

    /// Z-type logical representatives `{(0, j, h)}` and `{(i, 0, v)}`. An
    /// undetectable X error is a logical error iff it overlaps one of them
    /// oddly.
    pub fn z_logicals(&self) -> [BitVec; 2] {
        let l = self.l as isize;
        let ne = self.num_edges();
        [
            BitVec::from_indices(ne, (0..l).map(|j| self.h(0, j) as usize)),
            BitVec::from_indices(ne, (0..l).map(|i| self.v(i, 0) as usize)),
        ]
    }

    /// X-type logical representatives `{(i, 0, h)}` and `{(0, j, v)}`.
    pub fn x_logicals(&self) -> [BitVec; 2] {
        let l = self.l as isize;
        let ne = self.num_edges();
        [
            BitVec::from_indices(ne, (0..l).map(|i| self.h(i, 0) as usize)),
            BitVec::from_indices(ne, (0..l).map(|j| self.v(0, j) as usize)),
        ]
    }

    /// Minimum weight of an X logical, by breadth-first search over the face
    /// graph tracking the homology class of the path.
    pub fn x_distance(&self) -> usize {
        self.check_graph(CheckType::Z).logical_distance()
    }

    pub fn z_distance(&self) -> usize {
        self.check_graph(CheckType::X).logical_distance()
    }

    /// Image of an edge under the lattice duality that sends face `(i, j)`
    /// to vertex `(i, j)`, so that `∂` columns map onto `δ` columns.
    pub fn dual_edge(&self, e: usize) -> u32 {
        let (i, j, o) = self.edge_coords(e);
        let (i, j) = (i as isize, j as isize);
        match o {
            Orientation::Horizontal => self.v(i - 1, j),
            Orientation::Vertical => self.h(i, j - 1),
        }
    }
}

/// Builds the toric lattice and its code with `C_X = im δ`, `C_Z = im ∂`.
pub fn toric_code(l: usize) -> Result<(ToricLattice, CssCode)> {
    let lat = ToricLattice::new(l)?;
    let cx: Vec<F2Vector> = lat.coboundary.columns().map(|(_, c)| c).collect();
    let cz: Vec<F2Vector> = lat.boundary.columns().map(|(_, c)| c).collect();
    let code = CssCode::new(&lat.edges, cx, cz)?;
    Ok((lat, code))
}

/// Incidence structure of one check type of the toric code, in dense
/// indices. Every qubit lies in exactly two checks and every check has four
/// qubits.
#[derive(Clone)]
pub struct CheckGraph {
    pub kind: CheckType,
    pub l: usize,
    pub qubits: Arc<Universe>,
    pub checks: Arc<Universe>,
    /// `∂` for `Z`, `δ` for `X`.
    pub matrix: SparseF2Matrix,
    pub qubit_checks: Vec<[u32; 2]>,
    pub check_qubits: Vec<[u32; 4]>,
    /// Opposite-type logical operators that detect a logical residual.
    pub logicals: [BitVec; 2],
}

impl CheckGraph {
    pub fn num_qubits(&self) -> usize {
        self.qubit_checks.len()
    }

    pub fn num_checks(&self) -> usize {
        self.check_qubits.len()
    }

    /// Checks violated by an error on the given qubits.
    pub fn syndrome(&self, error: &BitVec) -> BitVec {
        let mut s = BitVec::zeros(self.num_checks());
        for e in error.iter_ones() {
            for &c in &self.qubit_checks[e] {
                s.toggle(c as usize);
            }
        }
        s
    }

    /// Homology class of a syndrome-free error.
    pub fn logical_class(&self, error: &BitVec) -> [bool; 2] {
        [error.dot(&self.logicals[0]), error.dot(&self.logicals[1])]
    }

    pub fn logical_distance(&self) -> usize {
        let n = self.num_checks();
        let mut best = usize::MAX;
        // Class of crossing each qubit, packed into two bits.
        let cross: Vec<u8> = (0..self.num_qubits())
            .map(|e| self.logicals[0].get(e) as u8 | (self.logicals[1].get(e) as u8) << 1)
            .collect();
        for start in 0..n {
            let mut dist = vec![usize::MAX; 4 * n];
            let mut queue = VecDeque::new();
            dist[start * 4] = 0;
            queue.push_back((start, 0u8));
            while let Some((c, cls)) = queue.pop_front() {
                let d = dist[c * 4 + cls as usize];
                if d >= best {
                    break;
                }
                for &e in &self.check_qubits[c] {
                    let [a, b] = self.qubit_checks[e as usize];
                    let other = if a as usize == c { b } else { a } as usize;
                    let ncls = cls ^ cross[e as usize];
                    let slot = other * 4 + ncls as usize;
                    if dist[slot] == usize::MAX {
                        dist[slot] = d + 1;
                        queue.push_back((other, ncls));
                    }
                }
            }
            for cls in 1..4 {
                best = best.min(dist[start * 4 + cls]);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2core::in_span;

    #[test]
    fn toric_sizes_and_weights() {
        let (lat, code) = toric_code(3).unwrap();
        assert_eq!(code.n(), 18);
        assert_eq!(lat.faces().len(), 9);
        assert_eq!(lat.vertices().len(), 9);
        for l in 2..=6 {
            let (lat, code) = toric_code(l).unwrap();
            for (_, c) in lat.boundary().columns() {
                assert_eq!(c.weight(), 4);
            }
            for (_, c) in lat.coboundary().columns() {
                assert_eq!(c.weight(), 4);
            }
            assert_eq!(lat.boundary().rank(), l * l - 1);
            assert_eq!(lat.coboundary().rank(), l * l - 1);
            assert_eq!(code.logical_count(), 2);
            assert!(validate_css(&code).is_ok());
        }
    }

    #[test]
    fn rejects_small_lattice() {
        assert!(matches!(toric_code(1), Err(Error::Domain(_))));
        assert!(matches!(toric_code(0), Err(Error::Domain(_))));
    }

    #[test]
    fn face_vertex_overlaps_are_even() {
        let (lat, _) = toric_code(4).unwrap();
        for (_, f) in lat.boundary().columns() {
            for (_, v) in lat.coboundary().columns() {
                let overlap = f.indices().filter(|&e| v.bits().get(e)).count();
                assert!(overlap == 0 || overlap == 2);
            }
        }
    }

    #[test]
    fn edge_faces_transpose_boundary() {
        let (lat, _) = toric_code(5).unwrap();
        let bt = lat.boundary().transpose();
        for e in 0..lat.num_edges() {
            let col = bt.column_vector(e);
            let mut want = lat.edge_faces(e).map(|f| f as usize).to_vec();
            want.sort();
            assert_eq!(col.indices().collect::<Vec<_>>(), want);
        }
    }

    #[test]
    fn single_edge_not_a_stabilizer_and_detectable() {
        let (lat, code) = toric_code(4).unwrap();
        let e = F2Vector::from_indices(lat.edges(), [3]);
        assert!(!in_span(&e, code.cz_basis()).unwrap());
        assert!(!code.is_undetectable_x(&e).unwrap());
    }

    #[test]
    fn steane_code_is_valid() {
        let q = Universe::new((1..=7).map(Label::Index));
        let rows = [[4, 5, 6, 7], [2, 3, 6, 7], [1, 3, 5, 7]];
        let basis: Vec<F2Vector> = rows
            .iter()
            .map(|r| F2Vector::from_labels(&q, r.iter().map(|&i| Label::Index(i)).collect::<Vec<_>>().iter()).unwrap())
            .collect();
        let code = CssCode::new(&q, basis.clone(), basis).unwrap();
        assert!(validate_css(&code).is_ok());
        assert_eq!(code.logical_count(), 1);
        assert_eq!(code.x_distance().unwrap(), 3);
    }

    #[test]
    fn invalid_code_is_reported() {
        let q = Universe::new((0..3).map(Label::Index));
        let e = F2Vector::from_indices(&q, [0]);
        let code = CssCode::new(&q, vec![e.clone()], vec![e]).unwrap();
        assert_eq!(validate_css(&code).unwrap_err().pairs, vec![(0, 0)]);
    }

    #[test]
    fn loops_are_logical() {
        let (lat, code) = toric_code(4).unwrap();
        let [xa, xb] = lat.x_logicals();
        for x in [xa, xb] {
            let v = F2Vector::from_bits(lat.edges(), x);
            assert!(code.is_undetectable_x(&v).unwrap());
            assert!(code.is_logical_x(&v).unwrap());
            let shifted = v.add(&code.cx_basis()[5]).unwrap();
            assert!(code.is_logical_x(&shifted).unwrap());
        }
        for s in code.cx_basis() {
            assert!(!code.is_logical_x(s).unwrap());
        }
        assert!(code.is_undetectable_x(&F2Vector::zero(lat.edges())).unwrap());
    }

    #[test]
    fn logical_reps_pair_up() {
        let (lat, code) = toric_code(5).unwrap();
        let z = lat.z_logicals();
        let x = lat.x_logicals();
        for zz in &z {
            assert!(code.is_logical_z(&F2Vector::from_bits(lat.edges(), zz.clone())).unwrap());
        }
        // Symplectic pairing: each X logical meets exactly one Z logical oddly.
        assert!(x[0].dot(&z[1]) ^ x[0].dot(&z[0]));
        assert!(x[1].dot(&z[0]) ^ x[1].dot(&z[1]));
        assert_ne!(x[0].dot(&z[0]), x[1].dot(&z[0]));
    }

    #[test]
    fn distances() {
        assert_eq!(toric_code(2).unwrap().1.x_distance().unwrap(), 2);
        assert_eq!(toric_code(3).unwrap().1.x_distance().unwrap(), 3);
        for l in 2..=7 {
            let lat = ToricLattice::new(l).unwrap();
            assert_eq!(lat.x_distance(), l);
            assert_eq!(lat.z_distance(), l);
        }
        let big = toric_code(5).unwrap().1;
        assert!(matches!(big.x_distance(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn duality_maps_faces_to_vertices() {
        let lat = ToricLattice::new(5).unwrap();
        for f in 0..lat.num_faces() {
            let mut img: Vec<u32> = lat.face_edges(f).iter().map(|&e| lat.dual_edge(e as usize)).collect();
            let mut want = lat.vertex_edges(f).to_vec();
            img.sort();
            want.sort();
            assert_eq!(img, want);
        }
    }

    #[test]
    fn code_json_round_trip() {
        let (_, code) = toric_code(2).unwrap();
        let s = serde_json::to_string(&code).unwrap();
        let back: CssCode = serde_json::from_str(&s).unwrap();
        assert_eq!(back.logical_count(), 2);
        assert_eq!(back.cz_basis().len(), code.cz_basis().len());
        assert!(validate_css(&back).is_ok());
    }
}
