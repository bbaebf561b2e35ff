//! Oriented simplicial complexes with optional (possibly periodic) geometry.
//!
//! Simplices are stored with strictly increasing vertex indices; that order is
//! the orientation every sign in the crate is derived from. On periodic
//! embeddings a simplex also carries one lattice shift per vertex, so that the
//! lifted vertex positions `x_v + shift * period` give its actual geometry.
//! Two simplices with the same vertex set but different (normalized) shifts
//! are different simplices, which lets coarse tori such as the 2×2 grid be
//! represented even though they are not simplicial complexes in the strict
//! sense.

mod build;
mod io;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use build::{build_flat_torus, build_icosahedron, canonical_signature, subdivide};
pub use io::{load_complex, parse_complex, write_complex};

/// Vertex set plus normalized lattice shifts; the identity of a simplex.
type SimplexKey = (Vec<usize>, Vec<i32>);

/// Coordinates of the vertices in `R^d`, with a period per axis (`0.0` means
/// the axis is not periodic).
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub ambient_dim: usize,
    pub coords: Vec<f64>,
    pub periods: Vec<f64>,
}

impl Embedding {
    pub fn new(ambient_dim: usize, coords: Vec<f64>, periods: Vec<f64>) -> Result<Self> {
        if !coords.len().is_multiple_of(ambient_dim.max(1)) || periods.len() != ambient_dim {
            return Err(Error::InvalidArgument("embedding shape mismatch".into()));
        }
        if periods.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidArgument("periods must be finite and non-negative".into()));
        }
        Ok(Self { ambient_dim, coords, periods })
    }

    pub fn is_periodic(&self) -> bool {
        self.periods.iter().any(|&p| p > 0.0)
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.ambient_dim..(v + 1) * self.ambient_dim]
    }

    /// Position of `v` translated by `shift` periods.
    pub fn lifted(&self, v: usize, shift: &[i32]) -> DVector<f64> {
        let d = self.ambient_dim;
        DVector::from_iterator(
            d,
            (0..d).map(|a| self.coords[v * d + a] + shift.get(a).copied().unwrap_or(0) as f64 * self.periods[a]),
        )
    }
}

/// Top cell as given to the constructor: vertex indices in any order, with
/// optional per-vertex lattice shifts (flattened, `ambient_dim` per vertex).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub vertices: Vec<usize>,
    pub shifts: Option<Vec<i32>>,
}

impl Cell {
    pub fn new(vertices: Vec<usize>) -> Self {
        Self { vertices, shifts: None }
    }

    pub fn with_shifts(vertices: Vec<usize>, shifts: Vec<i32>) -> Self {
        Self { vertices, shifts: Some(shifts) }
    }
}

#[derive(Clone, Debug, Default)]
struct SimplexTable {
    vertices: Vec<usize>,
    shifts: Vec<i32>,
    len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshQuality {
    /// Largest simplex diameter.
    pub eta: f64,
    /// `min vol(σ) / eta^n` over top simplices.
    pub fullness: f64,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    dim: usize,
    shift_width: usize,
    embedding: Option<Embedding>,
    tables: Vec<SimplexTable>,
    lookup: Vec<HashMap<SimplexKey, usize>>,
    facets: Vec<Vec<usize>>,
    cofaces: Vec<Vec<Vec<usize>>>,
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        rec(0, n, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

fn normalize_shifts(shifts: &mut [i32], width: usize) {
    if width == 0 || shifts.is_empty() {
        return;
    }
    let base: Vec<i32> = shifts[..width].to_vec();
    for chunk in shifts.chunks_mut(width) {
        for (s, b) in chunk.iter_mut().zip(&base) {
            *s -= b;
        }
    }
}

impl SimplicialComplex {
    /// Builds the complex generated by `cells` (all faces are enumerated).
    /// Vertex indices must be `< num_vertices`; every vertex index is a
    /// 0-simplex even if no cell uses it.
    pub fn from_cells(
        dim: usize,
        num_vertices: usize,
        cells: &[Cell],
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        let shift_width = match &embedding {
            Some(e) if e.is_periodic() => e.ambient_dim,
            _ => 0,
        };
        if let Some(e) = &embedding {
            if e.coords.len() != num_vertices * e.ambient_dim {
                return Err(Error::InvalidArgument(format!(
                    "expected {} coordinates, found {}",
                    num_vertices * e.ambient_dim,
                    e.coords.len()
                )));
            }
        }

        let mut top_keys = Vec::with_capacity(cells.len());
        let mut seen = HashMap::new();
        for cell in cells {
            if cell.vertices.len() != dim + 1 {
                return Err(Error::InvalidArgument(format!(
                    "cell {:?} has {} vertices, expected {}",
                    cell.vertices,
                    cell.vertices.len(),
                    dim + 1
                )));
            }
            if let Some(&v) = cell.vertices.iter().find(|&&v| v >= num_vertices) {
                return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
            }
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by_key(|&i| cell.vertices[i]);
            let verts: Vec<usize> = order.iter().map(|&i| cell.vertices[i]).collect();
            if verts.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("cell {:?} repeats a vertex", cell.vertices)));
            }
            let mut shifts = Vec::new();
            if shift_width > 0 {
                let given = cell.shifts.clone().unwrap_or_else(|| vec![0; (dim + 1) * shift_width]);
                if given.len() != (dim + 1) * shift_width {
                    return Err(Error::InvalidArgument("cell shift count mismatch".into()));
                }
                for &i in &order {
                    shifts.extend_from_slice(&given[i * shift_width..(i + 1) * shift_width]);
                }
                normalize_shifts(&mut shifts, shift_width);
            }
            let key = (verts, shifts);
            if seen.insert(key.clone(), ()).is_some() {
                return Err(Error::DuplicateSimplex(key.0));
            }
            top_keys.push(key);
        }

        // enumerate faces of every degree
        let mut keysets: Vec<Vec<SimplexKey>> = vec![Vec::new(); dim + 1];
        keysets[0] = (0..num_vertices).map(|v| (vec![v], vec![0; shift_width])).collect();
        for key in &top_keys {
            for k in 1..=dim {
                for pos in combinations(dim + 1, k + 1) {
                    keysets[k].push(sub_key(key, &pos, shift_width));
                }
            }
        }
        let mut tables = Vec::with_capacity(dim + 1);
        let mut lookup = Vec::with_capacity(dim + 1);
        for (k, mut keys) in keysets.into_iter().enumerate() {
            keys.sort();
            keys.dedup();
            let mut table = SimplexTable { len: keys.len(), ..Default::default() };
            let mut map = HashMap::with_capacity(keys.len());
            for (i, key) in keys.into_iter().enumerate() {
                debug_assert_eq!(key.0.len(), k + 1);
                table.vertices.extend_from_slice(&key.0);
                table.shifts.extend_from_slice(&key.1);
                map.insert(key, i);
            }
            tables.push(table);
            lookup.push(map);
        }

        let mut complex = Self {
            dim,
            shift_width,
            embedding,
            tables,
            lookup,
            facets: vec![Vec::new(); dim + 1],
            cofaces: vec![Vec::new(); dim + 1],
        };
        for k in 1..=dim {
            let mut facets = Vec::with_capacity(complex.count(k) * (k + 1));
            for s in 0..complex.count(k) {
                let key = complex.key(k, s);
                for i in 0..=k {
                    let pos: Vec<usize> = (0..=k).filter(|&j| j != i).collect();
                    let face = sub_key(&key, &pos, shift_width);
                    facets.push(complex.lookup[k - 1][&face]);
                }
            }
            complex.facets[k] = facets;
        }
        for k in 0..dim {
            let mut cof = vec![Vec::new(); complex.count(k)];
            for s in 0..complex.count(k + 1) {
                for &f in complex.facets_of(k + 1, s) {
                    cof[f].push(s);
                }
            }
            complex.cofaces[k] = cof;
        }
        Ok(complex)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn is_embedded(&self) -> bool {
        self.embedding.is_some()
    }

    pub fn count(&self, k: usize) -> usize {
        self.tables.get(k).map_or(0, |t| t.len)
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..=self.dim).map(|k| self.count(k)).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts()
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    /// Vertex indices of the `i`-th `k`-simplex, strictly increasing.
    pub fn simplex(&self, k: usize, i: usize) -> &[usize] {
        &self.tables[k].vertices[i * (k + 1)..(i + 1) * (k + 1)]
    }

    /// Normalized lattice shifts of the `i`-th `k`-simplex (empty when the
    /// embedding is not periodic).
    pub fn shifts(&self, k: usize, i: usize) -> &[i32] {
        let w = self.shift_width * (k + 1);
        &self.tables[k].shifts[i * w..(i + 1) * w]
    }

    fn key(&self, k: usize, i: usize) -> SimplexKey {
        (self.simplex(k, i).to_vec(), self.shifts(k, i).to_vec())
    }

    /// Index of the face of the `k`-simplex `s` spanned by the given local
    /// vertex positions (increasing).
    pub fn face_index(&self, k: usize, s: usize, positions: &[usize]) -> usize {
        let key = sub_key(&self.key(k, s), positions, self.shift_width);
        self.lookup[positions.len() - 1][&key]
    }

    /// Indices of the `m`-faces of the `k`-simplex `s`, in lexicographic order
    /// of local vertex positions.
    pub fn faces_of(&self, k: usize, s: usize, m: usize) -> Vec<usize> {
        combinations(k + 1, m + 1).iter().map(|pos| self.face_index(k, s, pos)).collect()
    }

    /// Facets of a `k`-simplex; facet `i` omits local vertex `i`.
    pub fn facets_of(&self, k: usize, s: usize) -> &[usize] {
        &self.facets[k][s * (k + 1)..(s + 1) * (k + 1)]
    }

    pub fn cofaces_of(&self, k: usize, s: usize) -> &[usize] {
        &self.cofaces[k][s]
    }

    /// Finds a simplex by (unsorted) vertex set on a non-periodic complex.
    pub fn find(&self, vertices: &[usize]) -> Option<usize> {
        let mut v = vertices.to_vec();
        v.sort_unstable();
        let k = v.len().checked_sub(1)?;
        self.lookup.get(k)?.get(&(v, vec![0; self.shift_width * (k + 1)])).copied()
    }

    /// Every (n-1)-simplex must have exactly two cofaces.
    pub fn check_closed(&self) -> Result<()> {
        if self.dim == 0 {
            return Ok(());
        }
        for s in 0..self.count(self.dim - 1) {
            let c = self.cofaces_of(self.dim - 1, s).len();
            if c != 2 {
                return Err(Error::NotClosed {
                    dim: self.dim - 1,
                    vertices: self.simplex(self.dim - 1, s).to_vec(),
                    cofaces: c,
                });
            }
        }
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        self.check_closed().is_ok()
    }

    /// Integer coboundary `δ_k : C^k → C^{k+1}`; entry `(τ, σ)` is the
    /// incidence sign of the facet σ in τ.
    pub fn coboundary(&self, k: usize) -> Result<CsrMatrix<i64>> {
        if k >= self.dim {
            return Err(Error::DegreeOutOfRange { degree: k, dim: self.dim });
        }
        let mut triplets = Vec::with_capacity(self.count(k + 1) * (k + 2));
        for t in 0..self.count(k + 1) {
            for (i, &f) in self.facets_of(k + 1, t).iter().enumerate() {
                triplets.push((t, f, if i % 2 == 0 { 1 } else { -1 }));
            }
        }
        Ok(CsrMatrix::from_triplets(self.count(k + 1), self.count(k), &triplets))
    }

    /// Vertex sets of the connected components (via edges).
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.count(0);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        if self.dim >= 1 {
            for e in 0..self.count(1) {
                let v = self.simplex(1, e);
                let (a, b) = (find(&mut parent, v[0]), find(&mut parent, v[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort();
        out
    }

    /// Lifted vertex positions of a simplex.
    pub fn points(&self, k: usize, s: usize) -> Result<Vec<DVector<f64>>> {
        let emb = self.embedding.as_ref().ok_or(Error::NotEmbedded)?;
        let w = self.shift_width;
        let shifts = self.shifts(k, s);
        Ok(self
            .simplex(k, s)
            .iter()
            .enumerate()
            .map(|(i, &v)| emb.lifted(v, if w == 0 { &[] } else { &shifts[i * w..(i + 1) * w] }))
            .collect())
    }

    /// `k`-dimensional volume of a simplex from its Gram determinant.
    pub fn volume(&self, k: usize, s: usize) -> Result<f64> {
        let pts = self.points(k, s)?;
        Ok(simplex_volume(&pts))
    }

    pub fn diameter(&self, k: usize, s: usize) -> Result<f64> {
        let pts = self.points(k, s)?;
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.max((&pts[i] - &pts[j]).norm());
            }
        }
        Ok(d)
    }

    pub fn mesh_quality(&self) -> Result<MeshQuality> {
        if !self.is_embedded() {
            return Err(Error::NotEmbedded);
        }
        let n = self.dim;
        let mut eta: f64 = 0.0;
        for s in 0..self.count(n) {
            eta = eta.max(self.diameter(n, s)?);
        }
        let mut fullness = f64::INFINITY;
        for s in 0..self.count(n) {
            let vol = self.volume(n, s)?;
            if !(vol > 1e-14 * eta.powi(n as i32)) {
                return Err(Error::DegenerateSimplex { vertices: self.simplex(n, s).to_vec(), volume: vol });
            }
            fullness = fullness.min(vol / eta.powi(n as i32));
        }
        Ok(MeshQuality { eta, fullness, counts: self.counts() })
    }

    /// Smallest edge length.
    pub fn min_edge_length(&self) -> Result<f64> {
        let mut h = f64::INFINITY;
        for e in 0..self.count(1) {
            h = h.min(self.diameter(1, e)?);
        }
        Ok(h)
    }
}

fn sub_key(key: &SimplexKey, positions: &[usize], width: usize) -> SimplexKey {
    let verts = positions.iter().map(|&p| key.0[p]).collect();
    let mut shifts = Vec::with_capacity(positions.len() * width);
    if width > 0 {
        for &p in positions {
            shifts.extend_from_slice(&key.1[p * width..(p + 1) * width]);
        }
        normalize_shifts(&mut shifts, width);
    }
    (verts, shifts)
}

/// Volume of the simplex spanned by `pts` (any ambient dimension).
pub fn simplex_volume(pts: &[DVector<f64>]) -> f64 {
    let k = pts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let d = pts[0].len();
    let e = DMatrix::from_fn(d, k, |r, c| pts[c + 1][r] - pts[0][r]);
    let gram = e.transpose() * &e;
    let det = gram.determinant().max(0.0);
    det.sqrt() / factorial(k) as f64
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SimplicialComplex {
        let emb = Embedding::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        SimplicialComplex::from_cells(2, 3, &[Cell::new(vec![2, 0, 1])], Some(emb)).unwrap()
    }

    #[test]
    fn single_triangle_closure() {
        let k = triangle();
        assert_eq!(k.counts(), vec![3, 3, 1]);
        assert_eq!(k.simplex(2, 0), &[0, 1, 2]);
        assert!(k.check_closed().is_err());
        assert!((k.volume(2, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_edge_sign_convention() {
        let k = SimplicialComplex::from_cells(1, 2, &[Cell::new(vec![0, 1])], None).unwrap();
        let d0 = k.coboundary(0).unwrap();
        assert_eq!(d0.get(0, 0), -1);
        assert_eq!(d0.get(0, 1), 1);
    }

    #[test]
    fn duplicate_cell_rejected() {
        let cells = [Cell::new(vec![0, 1, 2]), Cell::new(vec![2, 1, 0])];
        let err = SimplicialComplex::from_cells(2, 3, &cells, None).unwrap_err();
        assert!(matches!(err, Error::DuplicateSimplex(_)));
        assert!(err.to_string().contains("duplicate simplex"));
    }

    #[test]
    fn repeated_vertex_rejected() {
        assert!(SimplicialComplex::from_cells(2, 3, &[Cell::new(vec![0, 1, 1])], None).is_err());
    }

    #[test]
    fn coboundary_degree_range() {
        let k = triangle();
        assert!(matches!(k.coboundary(2), Err(Error::DegreeOutOfRange { .. })));
    }

    #[test]
    fn degenerate_triangle_reported() {
        let emb = Embedding::new(2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0], vec![0.0, 0.0]).unwrap();
        let k = SimplicialComplex::from_cells(2, 3, &[Cell::new(vec![0, 1, 2])], Some(emb)).unwrap();
        assert!(matches!(k.mesh_quality(), Err(Error::DegenerateSimplex { .. })));
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(4, 4).len(), 1);
        assert!(combinations(2, 3).is_empty());
    }
}
