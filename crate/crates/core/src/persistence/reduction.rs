//! Fast GF(2) persistence for Rips filtrations of dimension <= 2.
//!
//! H0 comes from a union-find over the edges (elder rule), which gives the
//! same pairing as reducing the edge boundary columns. H1 is read off the
//! reduced coboundary matrix: positive edges are processed from the last to
//! the first, each column holds the triangles containing the edge, and the
//! pivot is the earliest of them. Negative edges are paired with vertices and
//! their columns would reduce to zero, so they are skipped. The pairs agree
//! with those of homology.

use super::{PersistenceDiagram, PersistencePair, RipsFiltration};

const NONE: u32 = u32::MAX;

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }
}

/// Combinatorial index of the triangle `a < b < c`.
fn triangle_index(a: usize, b: usize, c: usize) -> usize {
    c * (c - 1) * (c - 2) / 6 + b * (b - 1) / 2 + a
}

/// Symmetric difference of two ascending index lists into `out`.
fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// H0 and H1 persistence pairs of a Rips filtration.
///
/// # Panics
///
/// If a simplex precedes one of its faces in the filtration.
pub fn compute_persistence(filtration: &RipsFiltration) -> PersistenceDiagram {
    let n = filtration.n_vertices();
    let simplices = filtration.simplices();

    let mut vertex_pos = vec![usize::MAX; n];
    let mut edge_pos = vec![usize::MAX; n * n];
    let mut positive = vec![false; n * n];
    let mut uf = UnionFind::new(n);
    let mut pairs = Vec::new();
    let mut triangles = Vec::new();

    for (pos, s) in simplices.iter().enumerate() {
        let v = s.vertices();
        match s.dimension() {
            0 => vertex_pos[v[0] as usize] = pos,
            1 => {
                let (a, b) = (v[0] as usize, v[1] as usize);
                assert!(
                    vertex_pos[a] < pos && vertex_pos[b] < pos,
                    "edge {v:?} precedes its vertices"
                );
                edge_pos[a * n + b] = pos;
                let (ra, rb) = (uf.find(v[0]), uf.find(v[1]));
                if ra == rb {
                    positive[a * n + b] = true;
                } else {
                    // the younger component dies and joins the elder one
                    let (elder, younger) = if vertex_pos[ra as usize] < vertex_pos[rb as usize] {
                        (ra, rb)
                    } else {
                        (rb, ra)
                    };
                    uf.parent[younger as usize] = elder;
                    pairs.push(PersistencePair {
                        dimension: 0,
                        birth: simplices[vertex_pos[younger as usize]].value,
                        death: s.value,
                    });
                }
            }
            _ => triangles.push(pos),
        }
    }

    for x in 0..n as u32 {
        if vertex_pos[x as usize] != usize::MAX && uf.find(x) == x {
            pairs.push(PersistencePair {
                dimension: 0,
                birth: simplices[vertex_pos[x as usize]].value,
                death: f64::INFINITY,
            });
        }
    }

    // filtration position of each triangle, by combinatorial index
    let mut triangle_pos = vec![NONE; n * n.saturating_sub(1) * n.saturating_sub(2) / 6];
    for &pos in &triangles {
        let v = simplices[pos].vertices();
        let (a, b, c) = (v[0] as usize, v[1] as usize, v[2] as usize);
        for key in [a * n + b, a * n + c, b * n + c] {
            assert!(edge_pos[key] < pos, "triangle {v:?} precedes its edges");
        }
        triangle_pos[triangle_index(a, b, c)] = pos as u32;
    }

    let mut positive_edges: Vec<(usize, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if positive[a * n + b] {
                positive_edges.push((edge_pos[a * n + b], a, b));
            }
        }
    }
    positive_edges.sort_unstable();

    // reduced column owning each pivot triangle
    let mut owner = vec![NONE; simplices.len()];
    let mut reduced: Vec<Vec<u32>> = Vec::new();
    let mut column: Vec<u32> = Vec::with_capacity(n);
    let mut scratch: Vec<u32> = Vec::with_capacity(n);
    for &(pos, a, b) in positive_edges.iter().rev() {
        column.clear();
        for c in 0..n {
            if c == a || c == b {
                continue;
            }
            let mut v = [a, b, c];
            v.sort_unstable();
            let t = triangle_pos[triangle_index(v[0], v[1], v[2])];
            if t != NONE {
                column.push(t);
            }
        }
        column.sort_unstable();

        let birth = simplices[pos].value;
        loop {
            let Some(&pivot) = column.first() else {
                pairs.push(PersistencePair {
                    dimension: 1,
                    birth,
                    death: f64::INFINITY,
                });
                break;
            };
            match owner[pivot as usize] {
                NONE => {
                    pairs.push(PersistencePair {
                        dimension: 1,
                        birth,
                        death: simplices[pivot as usize].value,
                    });
                    owner[pivot as usize] = reduced.len() as u32;
                    reduced.push(column.clone());
                    break;
                }
                o => {
                    add_columns(&column, &reduced[o as usize], &mut scratch);
                    std::mem::swap(&mut column, &mut scratch);
                }
            }
        }
    }

    PersistenceDiagram::from_pairs(pairs)
}
