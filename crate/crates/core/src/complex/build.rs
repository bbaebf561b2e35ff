use nalgebra::DVector;

use super::{Cell, Embedding, SimplicialComplex};
use crate::error::{Error, Result};

/// Triangulation of the flat unit torus `T^dim` on an `n^dim` grid.
///
/// In 2D every square is split along its `(0,0)-(1,1)` diagonal; in 3D every
/// cube is split into the six Kuhn tetrahedra around its main diagonal.
pub fn build_flat_torus(n: usize, dim: usize) -> Result<SimplicialComplex> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("torus resolution must be >= 2, got {n}")));
    }
    if !(dim == 2 || dim == 3) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let nv = n.pow(dim as u32);
    let index = |g: &[usize]| -> (usize, Vec<i32>) {
        let mut idx = 0;
        let mut stride = 1;
        let mut shift = Vec::with_capacity(dim);
        for &c in g {
            idx += (c % n) * stride;
            stride *= n;
            shift.push((c / n) as i32);
        }
        (idx, shift)
    };
    let mut coords = vec![0.0; nv * dim];
    for v in 0..nv {
        let mut r = v;
        for a in 0..dim {
            coords[v * dim + a] = (r % n) as f64 / n as f64;
            r /= n;
        }
    }

    let paths: Vec<Vec<Vec<usize>>> = if dim == 2 {
        vec![vec![vec![0, 0], vec![1, 0], vec![1, 1]], vec![vec![0, 0], vec![1, 1], vec![0, 1]]]
    } else {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        perms
            .iter()
            .map(|p| {
                let mut pt = vec![0usize; 3];
                let mut path = vec![pt.clone()];
                for &axis in p {
                    pt[axis] += 1;
                    path.push(pt.clone());
                }
                path
            })
            .collect()
    };

    let mut cells = Vec::with_capacity(nv * paths.len());
    for v in 0..nv {
        let mut origin = Vec::with_capacity(dim);
        let mut r = v;
        for _ in 0..dim {
            origin.push(r % n);
            r /= n;
        }
        for path in &paths {
            let mut verts = Vec::with_capacity(dim + 1);
            let mut shifts = Vec::with_capacity((dim + 1) * dim);
            for offset in path {
                let g: Vec<usize> = origin.iter().zip(offset).map(|(o, d)| o + d).collect();
                let (idx, s) = index(&g);
                verts.push(idx);
                shifts.extend(s);
            }
            cells.push(Cell::with_shifts(verts, shifts));
        }
    }
    let emb = Embedding::new(dim, coords, vec![1.0; dim])?;
    SimplicialComplex::from_cells(dim, nv, &cells, Some(emb))
}

/// Boundary of the regular icosahedron inscribed in the unit sphere.
pub fn build_icosahedron() -> SimplicialComplex {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let faces = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let norm = (1.0 + phi * phi).sqrt();
    let coords: Vec<f64> = raw.iter().flat_map(|p| p.iter().map(|x| x / norm)).collect();
    let cells: Vec<Cell> = faces.iter().map(|f| Cell::new(f.to_vec())).collect();
    let emb = Embedding::new(3, coords, vec![0.0; 3]).expect("static embedding");
    SimplicialComplex::from_cells(2, 12, &cells, Some(emb)).expect("static icosahedron")
}

/// Child simplices of the edgewise (midpoint) subdivision, as index lists
/// into `[vertices..., midpoints in edge order]`, where edges are listed
/// lexicographically by local vertex pair.
fn edgewise_children(dim: usize) -> Result<Vec<Vec<usize>>> {
    Ok(match dim {
        // vertices 0,1 ; midpoint 2
        1 => vec![vec![0, 2], vec![2, 1]],
        // vertices 0..3 ; midpoints m01=3, m02=4, m12=5
        2 => vec![vec![0, 3, 4], vec![3, 1, 5], vec![4, 5, 2], vec![3, 5, 4]],
        // vertices 0..4 ; m01=4 m02=5 m03=6 m12=7 m13=8 m23=9 (red refinement)
        3 => vec![
            vec![0, 4, 5, 6],
            vec![4, 1, 7, 8],
            vec![5, 7, 2, 9],
            vec![6, 8, 9, 3],
            vec![4, 5, 6, 8],
            vec![4, 5, 7, 8],
            vec![5, 6, 8, 9],
            vec![5, 7, 8, 9],
        ],
        d => return Err(Error::UnsupportedDimension(d)),
    })
}

fn wrap(x: f64, period: f64) -> f64 {
    if period <= 0.0 {
        return x;
    }
    let w = x - period * (x / period).floor();
    if w >= period {
        0.0
    } else {
        w
    }
}

/// Edgewise (midpoint) subdivision: every edge gains its midpoint and every
/// top simplex is replaced by `2^n` children. Mesh size halves; in 2D the
/// children are similar to the parent.
pub fn subdivide(complex: &SimplicialComplex) -> Result<SimplicialComplex> {
    let emb = complex.embedding().ok_or(Error::NotEmbedded)?;
    let n = complex.dim();
    let children = edgewise_children(n)?;
    let d = emb.ambient_dim;
    let periodic = emb.is_periodic();
    let nv = complex.count(0);
    let ne = complex.count(1);

    let mut coords = emb.coords.clone();
    coords.reserve(ne * d);
    for e in 0..ne {
        let pts = complex.points(1, e)?;
        for a in 0..d {
            coords.push(wrap(0.5 * (pts[0][a] + pts[1][a]), emb.periods[a]));
        }
    }
    let new_emb = Embedding::new(d, coords, emb.periods.clone())?;

    let local_edges = super::combinations(n + 1, 2);
    let mut cells = Vec::with_capacity(complex.count(n) << n);
    for s in 0..complex.count(n) {
        let pts = complex.points(n, s)?;
        let verts = complex.simplex(n, s);
        let mut ids: Vec<usize> = verts.to_vec();
        let mut lifted: Vec<DVector<f64>> = pts.clone();
        for pair in &local_edges {
            let e = complex.face_index(n, s, pair);
            ids.push(nv + e);
            lifted.push(0.5 * (&pts[pair[0]] + &pts[pair[1]]));
        }
        for child in &children {
            let vs: Vec<usize> = child.iter().map(|&i| ids[i]).collect();
            if periodic {
                let mut shifts = Vec::with_capacity(child.len() * d);
                for &i in child {
                    let base = new_emb.vertex(ids[i]);
                    for a in 0..d {
                        let p = emb.periods[a];
                        shifts.push(if p > 0.0 { ((lifted[i][a] - base[a]) / p).round() as i32 } else { 0 });
                    }
                }
                cells.push(Cell::with_shifts(vs, shifts));
            } else {
                cells.push(Cell::new(vs));
            }
        }
    }
    SimplicialComplex::from_cells(n, nv + ne, &cells, Some(new_emb))
}

/// Canonical, labeling-independent description of a periodic or embedded
/// complex: every top simplex as its sorted list of vertex coordinates
/// (wrapped into the fundamental domain and rounded), the list sorted.
pub fn canonical_signature(complex: &SimplicialComplex) -> Result<Vec<Vec<Vec<i64>>>> {
    let emb = complex.embedding().ok_or(Error::NotEmbedded)?;
    let n = complex.dim();
    let mut sig = Vec::with_capacity(complex.count(n));
    let scale = 1e9;
    for s in 0..complex.count(n) {
        let pts = complex.points(n, s)?;
        // translate so the simplex's minimal lifted point sits in the domain
        let mut rows: Vec<Vec<i64>> = pts
            .iter()
            .map(|p| p.iter().map(|&x| (x * scale).round() as i64).collect())
            .collect();
        let base: Vec<i64> = rows.iter().min().cloned().unwrap_or_default();
        let mut wrapped_base = Vec::with_capacity(base.len());
        for (a, &b) in base.iter().enumerate() {
            let p = (emb.periods[a] * scale).round() as i64;
            wrapped_base.push(if p > 0 { b.rem_euclid(p) - b } else { 0 });
        }
        for r in rows.iter_mut() {
            for (x, o) in r.iter_mut().zip(&wrapped_base) {
                *x += o;
            }
        }
        rows.sort();
        sig.push(rows);
    }
    sig.sort();
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        for (n, v, e, f) in [(2, 4, 12, 8), (3, 9, 27, 18), (4, 16, 48, 32)] {
            let k = build_flat_torus(n, 2).unwrap();
            assert_eq!(k.counts(), vec![v, e, f]);
            assert_eq!(k.euler_characteristic(), 0);
            k.check_closed().unwrap();
        }
    }

    #[test]
    fn three_torus_is_closed() {
        let k = build_flat_torus(3, 3).unwrap();
        assert_eq!(k.count(0), 27);
        assert_eq!(k.count(3), 27 * 6);
        assert_eq!(k.euler_characteristic(), 0);
        k.check_closed().unwrap();
    }

    #[test]
    fn rejects_small_resolution() {
        assert!(build_flat_torus(1, 2).is_err());
        assert!(build_flat_torus(4, 4).is_err());
    }

    #[test]
    fn icosahedron_is_a_sphere() {
        let k = build_icosahedron();
        assert_eq!(k.counts(), vec![12, 30, 20]);
        assert_eq!(k.euler_characteristic(), 2);
        k.check_closed().unwrap();
    }
}
