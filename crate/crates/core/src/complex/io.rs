//! Line-oriented text mesh format.
//!
//! ```text
//! cochainmesh 1
//! dim <n> embed <d> periodic <p1> ... <pd>
//! vertices <V>
//! <id> <x1> ... <xd>        (V lines)
//! cells <T>
//! <v0> ... <vn>             (T lines)
//! ```
//!
//! Only top cells are listed; lower faces are generated. Vertex ids are
//! arbitrary distinct non-negative integers and are renumbered in increasing
//! order. On periodic meshes each cell's geometry is taken from the minimal
//! periodic image; when that is ambiguous (an edge spanning exactly half a
//! period) the cell line must carry explicit lattice shifts after a colon,
//! `d` integers per vertex: `<v0> ... <vn> : <s0_1> ... <sn_d>`.
//! `embed 0` declares a purely combinatorial complex.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Cell, Embedding, SimplicialComplex};
use crate::error::{Error, Result};

const MAGIC: &str = "cochainmesh";
const VERSION: &str = "1";
const AMBIGUITY_TOL: f64 = 1e-9;

pub fn load_complex(path: impl AsRef<Path>) -> Result<SimplicialComplex> {
    let text = std::fs::read_to_string(path)?;
    parse_complex(&text)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let content = line.split('#').next().unwrap_or("").trim();
            self.last = i + 1;
            if !content.is_empty() {
                return Ok((i + 1, content.split_whitespace().collect()));
            }
        }
        Err(perr(self.last + 1, "unexpected end of file"))
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| perr(line, format!("invalid number '{tok}'")))
}

pub fn parse_complex(text: &str) -> Result<SimplicialComplex> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let (ln, header) = lines.next_tokens()?;
    if header != [MAGIC, VERSION] {
        return Err(perr(ln, format!("expected header '{MAGIC} {VERSION}'")));
    }

    let (ln, t) = lines.next_tokens()?;
    if t.len() < 5 || t[0] != "dim" || t[2] != "embed" || t[4] != "periodic" {
        return Err(perr(ln, "expected 'dim <n> embed <d> periodic <p1> ... <pd>'"));
    }
    let dim: usize = parse_num(ln, t[1])?;
    let ambient: usize = parse_num(ln, t[3])?;
    if t.len() != 5 + ambient {
        return Err(perr(ln, format!("expected {ambient} periods")));
    }
    let periods: Vec<f64> = t[5..].iter().map(|s| parse_num(ln, s)).collect::<Result<_>>()?;
    if periods.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(perr(ln, "periods must be finite and non-negative"));
    }
    if ambient > 0 && ambient < dim {
        return Err(perr(ln, "embedding dimension smaller than complex dimension"));
    }

    let (ln, t) = lines.next_tokens()?;
    if t.len() != 2 || t[0] != "vertices" {
        return Err(perr(ln, "expected 'vertices <V>'"));
    }
    let nv: usize = parse_num(ln, t[1])?;
    let mut raw_vertices: Vec<(u64, Vec<f64>)> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = lines.next_tokens()?;
        if t.len() != 1 + ambient {
            return Err(perr(ln, format!("vertex line needs an id and {ambient} coordinates")));
        }
        let id: u64 = parse_num(ln, t[0])?;
        let x: Vec<f64> = t[1..].iter().map(|s| parse_num(ln, s)).collect::<Result<_>>()?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(perr(ln, "non-finite coordinate"));
        }
        raw_vertices.push((id, x));
    }
    raw_vertices.sort_by_key(|(id, _)| *id);
    if let Some(w) = raw_vertices.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument(format!("duplicate vertex id {}", w[0].0)));
    }
    let id_map: HashMap<u64, usize> = raw_vertices.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();

    let embedding = if ambient > 0 {
        let coords: Vec<f64> = raw_vertices.iter().flat_map(|(_, x)| x.iter().copied()).collect();
        Some(Embedding::new(ambient, coords, periods.clone())?)
    } else {
        None
    };
    let periodic = embedding.as_ref().is_some_and(|e| e.is_periodic());

    let (ln, t) = lines.next_tokens()?;
    if t.len() != 2 || t[0] != "cells" {
        return Err(perr(ln, "expected 'cells <T>'"));
    }
    let nc: usize = parse_num(ln, t[1])?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, t) = lines.next_tokens()?;
        let (id_toks, shift_toks) = match t.iter().position(|&s| s == ":") {
            Some(p) => (&t[..p], Some(&t[p + 1..])),
            None => (&t[..], None),
        };
        if id_toks.len() != dim + 1 {
            return Err(perr(ln, format!("cell line needs {} vertex ids", dim + 1)));
        }
        let vertices: Vec<usize> = id_toks
            .iter()
            .map(|s| {
                let id: u64 = parse_num(ln, s)?;
                id_map.get(&id).copied().ok_or_else(|| perr(ln, format!("unknown vertex id {id}")))
            })
            .collect::<Result<_>>()?;
        let cell = match (periodic, shift_toks) {
            (true, Some(st)) => {
                if st.len() != (dim + 1) * ambient {
                    return Err(perr(ln, format!("expected {} shifts", (dim + 1) * ambient)));
                }
                let shifts = st.iter().map(|s| parse_num(ln, s)).collect::<Result<Vec<i32>>>()?;
                Cell::with_shifts(vertices, shifts)
            }
            (true, None) => {
                let emb = embedding.as_ref().expect("periodic implies embedded");
                let shifts = minimal_image_shifts(emb, &vertices).ok_or_else(|| {
                    perr(ln, "ambiguous periodic cell (edge spans half a period); give explicit shifts")
                })?;
                Cell::with_shifts(vertices, shifts)
            }
            (false, Some(_)) => return Err(perr(ln, "shifts given on a non-periodic mesh")),
            (false, None) => Cell::new(vertices),
        };
        cells.push(cell);
    }
    if let Ok((ln, _)) = lines.next_tokens() {
        return Err(perr(ln, "trailing content after cells"));
    }

    SimplicialComplex::from_cells(dim, nv, &cells, embedding)
}

/// Shifts placing every vertex at its nearest periodic image relative to the
/// first vertex, or `None` if some image is not unique.
fn minimal_image_shifts(emb: &Embedding, vertices: &[usize]) -> Option<Vec<i32>> {
    let d = emb.ambient_dim;
    let x0 = emb.vertex(vertices[0]).to_vec();
    let mut shifts = Vec::with_capacity(vertices.len() * d);
    let mut lifted = Vec::with_capacity(vertices.len());
    for &v in vertices {
        let x = emb.vertex(v);
        let mut pos = vec![0.0; d];
        for a in 0..d {
            let p = emb.periods[a];
            let mut s = 0;
            if p > 0.0 {
                let delta = (x[a] - x0[a]) / p;
                let r = delta.round();
                if ((delta - r).abs() - 0.5).abs() < AMBIGUITY_TOL {
                    return None;
                }
                s = -(r as i32);
            }
            shifts.push(s);
            pos[a] = x[a] + s as f64 * p;
        }
        lifted.push(pos);
    }
    // pairwise separations must be unambiguous too
    for i in 0..lifted.len() {
        for j in i + 1..lifted.len() {
            for a in 0..d {
                let p = emb.periods[a];
                if p > 0.0 && (lifted[i][a] - lifted[j][a]).abs() >= 0.5 * p - AMBIGUITY_TOL * p {
                    return None;
                }
            }
        }
    }
    Some(shifts)
}

/// Serializes a complex. Explicit shifts are written only when the plain
/// minimal-image reading would not reproduce the complex.
pub fn write_complex(complex: &SimplicialComplex) -> String {
    let n = complex.dim();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    match complex.embedding() {
        Some(emb) => {
            let periods: Vec<String> = emb.periods.iter().map(|p| format!("{p}")).collect();
            let _ = writeln!(out, "dim {n} embed {} periodic {}", emb.ambient_dim, periods.join(" "));
        }
        None => {
            let _ = writeln!(out, "dim {n} embed 0 periodic");
        }
    }
    let _ = writeln!(out, "vertices {}", complex.count(0));
    for v in 0..complex.count(0) {
        match complex.embedding() {
            Some(emb) => {
                let xs: Vec<String> = emb.vertex(v).iter().map(|x| format!("{x}")).collect();
                let _ = writeln!(out, "{v} {}", xs.join(" "));
            }
            None => {
                let _ = writeln!(out, "{v}");
            }
        }
    }
    let periodic = complex.embedding().is_some_and(|e| e.is_periodic());
    let explicit = periodic && {
        let emb = complex.embedding().expect("periodic");
        (0..complex.count(n)).any(|s| {
            minimal_image_shifts(emb, complex.simplex(n, s)).is_none_or(|mut sh| {
                let w = emb.ambient_dim;
                let base: Vec<i32> = sh[..w].to_vec();
                for chunk in sh.chunks_mut(w) {
                    for (x, b) in chunk.iter_mut().zip(&base) {
                        *x -= b;
                    }
                }
                sh != complex.shifts(n, s)
            })
        })
    };
    let _ = writeln!(out, "cells {}", complex.count(n));
    for s in 0..complex.count(n) {
        let ids: Vec<String> = complex.simplex(n, s).iter().map(|v| v.to_string()).collect();
        if explicit {
            let sh: Vec<String> = complex.shifts(n, s).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{} : {}", ids.join(" "), sh.join(" "));
        } else {
            let _ = writeln!(out, "{}", ids.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_flat_torus;

    #[test]
    fn three_vertex_triangle() {
        let text = "cochainmesh 1\ndim 2 embed 2 periodic 0 0\nvertices 3\n0 0 0\n1 1 0\n2 0 1\ncells 1\n0 1 2\n";
        let k = parse_complex(text).unwrap();
        assert_eq!(k.counts(), vec![3, 3, 1]);
    }

    #[test]
    fn duplicate_cell_is_an_error() {
        let text = "cochainmesh 1\ndim 2 embed 2 periodic 0 0\nvertices 3\n0 0 0\n1 1 0\n2 0 1\ncells 2\n0 1 2\n2 0 1\n";
        let err = parse_complex(text).unwrap_err();
        assert!(err.to_string().contains("duplicate simplex"), "{err}");
    }

    #[test]
    fn malformed_files() {
        for text in [
            "",
            "cochainmesh 2\n",
            "cochainmesh 1\ndim 2 embed 2 periodic 0\n",
            "cochainmesh 1\ndim 2 embed 2 periodic 0 0\nvertices 1\n0 0\n",
            "cochainmesh 1\ndim 2 embed 2 periodic 0 0\nvertices 3\n0 0 0\n1 1 0\n2 0 1\ncells 1\n0 1 7\n",
            "cochainmesh 1\ndim 2 embed 2 periodic 0 0\nvertices 3\n0 0 0\n1 1 0\n2 0 1\ncells 1\n0 1 2\nextra\n",
        ] {
            assert!(parse_complex(text).is_err(), "accepted: {text:?}");
        }
    }

    #[test]
    fn non_contiguous_ids_are_renumbered() {
        let text = "cochainmesh 1\ndim 1 embed 0 periodic\nvertices 3\n10\n30\n20\ncells 2\n10 20\n20 30\n";
        let k = parse_complex(text).unwrap();
        assert_eq!(k.counts(), vec![3, 2]);
        assert!(!k.is_embedded());
    }

    #[test]
    fn torus_round_trip_uses_plain_cells_when_unambiguous() {
        let k = build_flat_torus(4, 2).unwrap();
        let text = write_complex(&k);
        assert!(!text.contains(':'));
        let k2 = parse_complex(&text).unwrap();
        assert_eq!(write_complex(&k2), text);
        assert_eq!(k2.counts(), vec![16, 48, 32]);
    }

    #[test]
    fn coarse_torus_needs_explicit_shifts() {
        let k = build_flat_torus(2, 2).unwrap();
        let text = write_complex(&k);
        assert!(text.contains(':'));
        let k2 = parse_complex(&text).unwrap();
        assert_eq!(k2.counts(), vec![4, 12, 8]);
        let stripped: String = text
            .lines()
            .map(|l| l.split(':').next().unwrap().trim_end().to_string() + "\n")
            .collect();
        assert!(parse_complex(&stripped).is_err());
    }
}
