//! Small exact linear algebra over the rationals.

use num_traits::{One, Zero};

use crate::rational::Rational;

pub fn dot(u: &[Rational], v: &[Rational]) -> Rational {
    u.iter().zip(v).fold(Rational::zero(), |acc, (a, b)| {
        if a.is_zero() || b.is_zero() {
            acc
        } else {
            acc + a * b
        }
    })
}

pub fn mat_vec(m: &[Vec<Rational>], v: &[Rational]) -> Vec<Rational> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Row vector times matrix.
pub fn vec_mat(v: &[Rational], m: &[Vec<Rational>]) -> Vec<Rational> {
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|j| {
            v.iter()
                .zip(m)
                .fold(Rational::zero(), |acc, (a, row)| acc + a * &row[j])
        })
        .collect()
}

pub fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    a.iter().map(|row| vec_mat(row, b)).collect()
}

pub fn identity(d: usize) -> Vec<Vec<Rational>> {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect()
}

/// Returns `c` with `u = c * v`, if it exists and is nonzero.
pub fn projective_scale(u: &[Rational], v: &[Rational]) -> Option<Rational> {
    if u.len() != v.len() {
        return None;
    }
    let mut c: Option<Rational> = None;
    for (a, b) in u.iter().zip(v) {
        match (a.is_zero(), b.is_zero()) {
            (true, true) => {}
            (false, false) => {
                let r = a / b;
                match &c {
                    Some(c0) if *c0 != r => return None,
                    Some(_) => {}
                    None => c = Some(r),
                }
            }
            _ => return None,
        }
    }
    c
}

/// Solve `a y = b` with `a` given as `n` rows of length `s`.
/// Returns the solution only when it exists and is unique (rank `a` = `s`).
pub fn solve_unique(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let s = a.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut row = 0;
    for col in 0..s {
        let Some(p) = (row..n).find(|&r| !m[r][col].is_zero()) else {
            return None;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut().skip(col) {
            *x *= &inv;
        }
        for r in 0..n {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=s {
                    let v = &m[row][c] * &f;
                    m[r][c] -= v;
                }
            }
        }
        row += 1;
    }
    // remaining rows must read 0 = 0
    if m[row..].iter().any(|r| !r[s].is_zero()) {
        return None;
    }
    Some((0..s).map(|i| m[i][s].clone()).collect())
}

/// `solve_unique` for several right-hand sides sharing one elimination.
/// None when rank `a` < `s`; otherwise one entry per right-hand side, None
/// where that system is inconsistent.
pub fn solve_unique_multi(a: &[Vec<Rational>], bs: &[&[Rational]]) -> Option<Vec<Option<Vec<Rational>>>> {
    let n = a.len();
    let s = a.first().map_or(0, |r| r.len());
    let w = s + bs.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend(bs.iter().map(|b| b[i].clone()));
            r
        })
        .collect();
    let mut row = 0;
    for col in 0..s {
        let p = (row..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut().skip(col) {
            *x *= &inv;
        }
        for r in 0..n {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..w {
                    let v = &m[row][c] * &f;
                    m[r][c] -= v;
                }
            }
        }
        row += 1;
    }
    Some(
        (s..w)
            .map(|c| {
                if m[row..].iter().any(|r| !r[c].is_zero()) {
                    None
                } else {
                    Some((0..s).map(|i| m[i][c].clone()).collect())
                }
            })
            .collect(),
    )
}

pub fn rank(a: &[Vec<Rational>]) -> usize {
    let mut m = a.to_vec();
    let n = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..n).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        for r in row + 1..n {
            if !m[r][col].is_zero() {
                let f = &m[r][col] / &m[row][col];
                for c in col..cols {
                    let v = &m[row][c] * &f;
                    m[r][c] -= v;
                }
            }
        }
        row += 1;
        if row == n {
            break;
        }
    }
    row
}

pub fn inverse(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let d = a.len();
    let id = identity(d);
    let mut cols = Vec::with_capacity(d);
    for e in &id {
        cols.push(solve_unique(a, e)?);
    }
    Some((0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect())
}
