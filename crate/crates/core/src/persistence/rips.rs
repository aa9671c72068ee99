use std::cmp::Ordering;

use super::DistanceMatrix;
use crate::error::{Error, Result};

/// A vertex, edge or triangle with its filtration value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    vertices: [u32; 3],
    dim: u8,
    pub value: f64,
}

impl Simplex {
    fn new(vertices: &[u32], value: f64) -> Self {
        let mut v = [0u32; 3];
        v[..vertices.len()].copy_from_slice(vertices);
        Simplex {
            vertices: v,
            dim: (vertices.len() - 1) as u8,
            value,
        }
    }

    pub fn dimension(&self) -> usize {
        usize::from(self.dim)
    }

    /// Vertex indices in increasing order.
    pub fn vertices(&self) -> &[u32] {
        &self.vertices[..=usize::from(self.dim)]
    }

    /// Order by (value, dimension, lexicographic vertices).
    pub fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.dim.cmp(&other.dim))
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

/// Simplices of the Vietoris-Rips complex up to dimension 2, in filtration
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct RipsFiltration {
    n_vertices: usize,
    threshold: f64,
    simplices: Vec<Simplex>,
}

impl RipsFiltration {
    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Check that every face of every simplex appears earlier with a value
    /// no larger than the simplex's own.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_vertices;
        let mut vertex_pos = vec![usize::MAX; n];
        let mut edge_pos = vec![usize::MAX; n * n];
        let mut values = Vec::with_capacity(self.simplices.len());
        for (pos, s) in self.simplices.iter().enumerate() {
            if pos > 0 && self.simplices[pos - 1].filtration_cmp(s).is_gt() {
                return Err(Error::Parameter(format!(
                    "simplices out of filtration order at position {pos}"
                )));
            }
            let v = s.vertices();
            let faces: Vec<usize> = match s.dimension() {
                0 => Vec::new(),
                1 => vec![vertex_pos[v[0] as usize], vertex_pos[v[1] as usize]],
                _ => {
                    let e = |a: u32, b: u32| edge_pos[a as usize * n + b as usize];
                    vec![e(v[0], v[1]), e(v[0], v[2]), e(v[1], v[2])]
                }
            };
            for f in faces {
                if f >= pos || values[f] > s.value {
                    return Err(Error::Parameter(format!(
                        "simplex {:?} at position {pos} precedes one of its faces",
                        s.vertices()
                    )));
                }
            }
            match s.dimension() {
                0 => vertex_pos[v[0] as usize] = pos,
                1 => edge_pos[v[0] as usize * n + v[1] as usize] = pos,
                _ => {}
            }
            values.push(s.value);
        }
        Ok(())
    }
}

/// Clique complex of the distance graph truncated at `threshold`: vertices
/// at 0, edges at their length, triangles at their longest edge.
pub fn build_rips(dm: &DistanceMatrix, threshold: f64) -> Result<RipsFiltration> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::Parameter(format!(
            "filtration threshold must be non-negative, got {threshold}"
        )));
    }
    let n = dm.len();
    if n > u32::MAX as usize {
        return Err(Error::Parameter("too many points".into()));
    }
    let within = |i: u32, j: u32| dm.get(i as usize, j as usize) <= threshold;
    // generated in lexicographic order, so a stable sort by value alone gives
    // the (value, lexicographic) order within each dimension
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..n as u32 {
        for j in i + 1..n as u32 {
            if !within(i, j) {
                continue;
            }
            let dij = dm.get(i as usize, j as usize);
            edges.push(Simplex::new(&[i, j], dij));
            for k in j + 1..n as u32 {
                if within(i, k) && within(j, k) {
                    let value = dij
                        .max(dm.get(i as usize, k as usize))
                        .max(dm.get(j as usize, k as usize));
                    triangles.push(Simplex::new(&[i, j, k], value));
                }
            }
        }
    }
    edges.sort_by(|a, b| a.value.total_cmp(&b.value));
    triangles.sort_by(|a, b| a.value.total_cmp(&b.value));

    let mut simplices = Vec::with_capacity(n + edges.len() + triangles.len());
    simplices.extend((0..n as u32).map(|i| Simplex::new(&[i], 0.0)));
    let mut t = triangles.into_iter().peekable();
    for e in edges {
        while let Some(tri) = t.next_if(|tri| tri.value < e.value) {
            simplices.push(tri);
        }
        simplices.push(e);
    }
    simplices.extend(t);
    Ok(RipsFiltration {
        n_vertices: n,
        threshold,
        simplices,
    })
}
