//! Textbook boundary-matrix reduction, kept deliberately naive so it can
//! serve as an independent check on [`compute_persistence`].
//!
//! [`compute_persistence`]: super::compute_persistence

use std::collections::HashMap;

use super::{PersistenceDiagram, PersistencePair, RipsFiltration};
use crate::error::{Error, Result};

pub const ORACLE_MAX_POINTS: usize = 10;

/// Dense left-to-right column reduction over GF(2) of the full boundary
/// matrix, without clearing or compression.
pub fn oracle_persistence(filtration: &RipsFiltration) -> Result<PersistenceDiagram> {
    if filtration.n_vertices() > ORACLE_MAX_POINTS {
        return Err(Error::OracleTooLarge {
            points: filtration.n_vertices(),
            limit: ORACLE_MAX_POINTS,
        });
    }
    let simplices = filtration.simplices();
    let m = simplices.len();
    let index: HashMap<&[u32], usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.vertices(), i))
        .collect();

    let mut columns: Vec<Vec<bool>> = simplices
        .iter()
        .map(|s| {
            let mut col = vec![false; m];
            let v = s.vertices();
            if v.len() > 1 {
                for skip in 0..v.len() {
                    let face: Vec<u32> = v
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &x)| x)
                        .collect();
                    col[index[face.as_slice()]] = true;
                }
            }
            col
        })
        .collect();

    let low = |col: &[bool]| col.iter().rposition(|&x| x);
    let mut low_owner: Vec<Option<usize>> = vec![None; m];
    let mut pairs = Vec::new();
    let mut paired = vec![false; m];

    for j in 0..m {
        while let Some(l) = low(&columns[j]) {
            match low_owner[l] {
                Some(k) => {
                    let other = columns[k].clone();
                    for (x, y) in columns[j].iter_mut().zip(other) {
                        *x ^= y;
                    }
                }
                None => {
                    low_owner[l] = Some(j);
                    paired[l] = true;
                    paired[j] = true;
                    if simplices[l].dimension() <= 1 {
                        pairs.push(PersistencePair {
                            dimension: simplices[l].dimension(),
                            birth: simplices[l].value,
                            death: simplices[j].value,
                        });
                    }
                    break;
                }
            }
        }
    }

    for (i, s) in simplices.iter().enumerate() {
        if !paired[i] && s.dimension() <= 1 {
            pairs.push(PersistencePair {
                dimension: s.dimension(),
                birth: s.value,
                death: f64::INFINITY,
            });
        }
    }
    Ok(PersistenceDiagram::from_pairs(pairs))
}
