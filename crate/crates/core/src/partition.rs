//! Atomic partition of the contiguous-sum maps: atoms are labelled by the
//! h-values of all contiguous coordinate sums.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::{CoefficientMatrix, ConstraintMatrix};
use crate::maps::h_checked;
use crate::rational::{int, rat, Ext, Rational};

pub type AtomLabel = String;

/// Contiguous ranges `(i, j)` (0-based, inclusive) in row order: by length,
/// then by start. For d = 3: 1, 2, 3, 1+2, 2+3, 1+2+3.
pub fn contiguous_ranges(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for len in 1..=d {
        for start in 0..=d - len {
            out.push((start, start + len - 1));
        }
    }
    out
}

pub fn range_row(d: usize, (i, j): (usize, usize)) -> Vec<Rational> {
    (0..d).map(|k| if k >= i && k <= j { int(1) } else { int(0) }).collect()
}

/// The canonical coefficient matrix with all d(d+1)/2 contiguous-sum rows.
pub fn canonical_alpha(d: usize) -> Arc<CoefficientMatrix> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CoefficientMatrix>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(a) = cache.lock().unwrap().get(&d) {
        return a.clone();
    }
    let rows = contiguous_ranges(d).into_iter().map(|r| range_row(d, r)).collect();
    let a = CoefficientMatrix::new(rows).expect("contiguous sums are non-degenerate");
    cache.lock().unwrap().insert(d, a.clone());
    a
}

pub fn label_string(h: &[u32]) -> AtomLabel {
    h.iter().map(|v| char::from_digit(*v, 36).unwrap()).collect()
}

pub fn label_values(label: &str) -> Result<Vec<u32>> {
    label
        .chars()
        .map(|c| c.to_digit(36).ok_or_else(|| Error::UnknownAtom(label.to_string())))
        .collect()
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub label: AtomLabel,
    pub matrix: ConstraintMatrix,
}

/// All nonempty atoms for dimension d, on the canonical matrix, optimized,
/// in enumeration order (odometer over the rows, last row fastest).
pub fn enumerate_atoms(d: usize) -> Vec<Atom> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Vec<Atom>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(a) = cache.lock().unwrap().get(&d) {
        return a.clone();
    }
    let alpha = canonical_alpha(d);
    let ranges = contiguous_ranges(d);
    let maxes: Vec<u32> = ranges.iter().map(|(i, j)| (j - i + 1) as u32).collect();
    let mut h = vec![0u32; ranges.len()];
    let mut atoms = Vec::new();
    loop {
        let bounds = h
            .iter()
            .zip(&maxes)
            .map(|(&v, &mx)| {
                let lo = (int(v as i64) - rat(1, 2)).max(int(0));
                let hi = (int(v as i64) + rat(1, 2)).min(int(mx as i64));
                (Ext::Fin(lo), Ext::Fin(hi))
            })
            .collect();
        let m = ConstraintMatrix::new(alpha.clone(), bounds).expect("sized to alpha");
        if !m.is_empty() {
            atoms.push(Atom { label: label_string(&h), matrix: m.optimize() });
        }
        // odometer
        let mut k = h.len();
        loop {
            if k == 0 {
                cache.lock().unwrap().insert(d, atoms.clone());
                return atoms;
            }
            k -= 1;
            if h[k] < maxes[k] {
                h[k] += 1;
                break;
            }
            h[k] = 0;
        }
    }
}

/// Label of the point from its contiguous sums; errors on a discontinuity
/// or outside the open cube.
pub fn label_of(x: &[Rational]) -> Result<AtomLabel> {
    let d = x.len();
    let zero = int(0);
    let one = int(1);
    if x.iter().any(|v| *v <= zero || *v >= one) {
        return Err(Error::OnBoundary);
    }
    let mut h = Vec::new();
    for (i, j) in contiguous_ranges(d) {
        let s: Rational = x[i..=j].iter().sum();
        h.push(h_checked(&s).ok_or(Error::OnDiscontinuity)? as u32);
    }
    Ok(label_string(&h))
}

/// The unique atom containing x.
pub fn locate(atoms: &[Atom], x: &[Rational]) -> Result<AtomLabel> {
    let mut found = None;
    for a in atoms {
        if a.matrix.contains_point(x)? {
            if found.is_some() {
                return Err(Error::OnBoundary);
            }
            found = Some(a.label.clone());
        }
    }
    found.ok_or(Error::OnBoundary)
}

pub fn atom<'a>(atoms: &'a [Atom], label: &str) -> Result<&'a Atom> {
    atoms
        .iter()
        .find(|a| a.label == label)
        .ok_or_else(|| Error::UnknownAtom(label.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn one_dimensional_split() {
        let atoms = enumerate_atoms(1);
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].matrix.bounds(0), (&Ext::Fin(int(0)), &Ext::Fin(rat(1, 2))));
        assert_eq!(atoms[1].matrix.bounds(0), (&Ext::Fin(rat(1, 2)), &Ext::Fin(int(1))));
    }

    #[test]
    fn two_dimensional_labels() {
        let labels: Vec<_> = enumerate_atoms(2).into_iter().map(|a| a.label).collect();
        assert_eq!(labels, vec!["000", "001", "011", "101", "111", "112"]);
    }

    #[test]
    fn locate_examples() {
        let atoms = enumerate_atoms(2);
        assert_eq!(locate(&atoms, &[rat(3, 10), rat(4, 10)]).unwrap(), "001");
        assert_eq!(locate(&atoms, &[rat(1, 5), rat(1, 5)]).unwrap(), "000");
        assert_eq!(locate(&atoms, &[rat(6, 10), rat(6, 10)]).unwrap(), "111");
        assert_eq!(locate(&atoms, &[rat(1, 2), rat(1, 4)]).unwrap_err(), Error::OnBoundary);
        assert_eq!(label_of(&[rat(3, 10), rat(4, 10)]).unwrap(), "001");
        assert_eq!(label_of(&[rat(1, 4), rat(1, 4)]).unwrap_err(), Error::OnDiscontinuity);
    }

    #[test]
    fn canonical_rows_in_contiguous_order() {
        assert_eq!(contiguous_ranges(3), vec![(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)]);
    }
}
