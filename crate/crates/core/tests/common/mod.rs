//! Independent oracles for the integration tests: vertex enumeration over
//! small exact fractions and direct strict-inequality membership.
#![allow(dead_code)]

use std::sync::Arc;

use iup_core::geometry::{CoefficientMatrix, ConstraintMatrix};
use iup_core::rational::{rat, Ext, Rational};
use num_bigint::BigInt;
use num_rational::Ratio;
use rand::Rng;

pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn big(x: &Q) -> Rational {
    Rational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

/// Closed polytope lo ≤ Ax ≤ hi with every bound finite.
#[derive(Clone, Debug)]
pub struct Oracle {
    pub rows: Vec<Vec<Q>>,
    pub lo: Vec<Q>,
    pub hi: Vec<Q>,
}

fn dot(a: &[Q], x: &[Q]) -> Q {
    a.iter().zip(x).map(|(u, v)| u * v).sum()
}

/// Gauss-Jordan inverse; None when singular.
pub fn inverse(a: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = r.clone();
            r.extend((0..n).map(|j| if i == j { q(1, 1) } else { q(0, 1) }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| m[r][c] != q(0, 1))?;
        m.swap(c, p);
        let piv = m[c][c];
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c && m[r][c] != q(0, 1) {
                let f = m[r][c];
                let src = m[c].clone();
                for (v, s) in m[r].iter_mut().zip(&src) {
                    *v -= f * s;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != q(0, 1)) else { continue };
        m.swap(r, p);
        let piv = m[r][c];
        for i in 0..m.len() {
            if i != r && m[i][c] != q(0, 1) {
                let f = m[i][c] / piv;
                let src = m[r].clone();
                for (v, s) in m[i].iter_mut().zip(&src) {
                    *v -= f * s;
                }
            }
        }
        r += 1;
    }
    r
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::new(), f);
}

impl Oracle {
    pub fn d(&self) -> usize {
        self.rows[0].len()
    }

    pub fn closed_contains(&self, x: &[Q]) -> bool {
        self.rows.iter().zip(self.lo.iter().zip(&self.hi)).all(|(r, (l, h))| {
            let v = dot(r, x);
            *l <= v && v <= *h
        })
    }

    pub fn vertices(&self) -> Vec<Vec<Q>> {
        let d = self.d();
        let mut out: Vec<Vec<Q>> = Vec::new();
        combinations(self.rows.len(), d, &mut |idx| {
            let a: Vec<Vec<Q>> = idx.iter().map(|&i| self.rows[i].clone()).collect();
            let Some(inv) = inverse(&a) else { return };
            for mask in 0..(1u32 << d) {
                let b: Vec<Q> =
                    idx.iter().enumerate().map(|(j, &i)| if mask >> j & 1 == 1 { self.hi[i] } else { self.lo[i] }).collect();
                let x: Vec<Q> = inv.iter().map(|r| dot(r, &b)).collect();
                if self.closed_contains(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        });
        out
    }

    /// Optimal open bounds, or None when the open polytope is empty.
    pub fn solve(&self) -> Option<Vec<(Q, Q)>> {
        let vs = self.vertices();
        if vs.is_empty() {
            return None;
        }
        let diffs: Vec<Vec<Q>> = vs[1..].iter().map(|v| v.iter().zip(&vs[0]).map(|(a, b)| a - b).collect()).collect();
        if rank(&diffs) < self.d() {
            return None;
        }
        Some(
            self.rows
                .iter()
                .map(|r| {
                    let vals: Vec<Q> = vs.iter().map(|v| dot(r, v)).collect();
                    (*vals.iter().min().unwrap(), *vals.iter().max().unwrap())
                })
                .collect(),
        )
    }

    pub fn alpha(&self) -> Arc<CoefficientMatrix> {
        CoefficientMatrix::new(self.rows.iter().map(|r| r.iter().map(big).collect()).collect()).unwrap()
    }

    pub fn matrix(&self) -> ConstraintMatrix {
        ConstraintMatrix::new(
            self.alpha(),
            self.lo.iter().zip(&self.hi).map(|(l, h)| (Ext::Fin(big(l)), Ext::Fin(big(h)))).collect(),
        )
        .unwrap()
    }
}

fn parallel(a: &[Q], b: &[Q]) -> bool {
    rank(&[a.to_vec(), b.to_vec()]) < 2
}

/// A random bounded constraint matrix with d ≤ 4 and e ≤ 10; roughly half
/// of them are empty.
pub fn random_case<R: Rng>(rng: &mut R) -> Oracle {
    loop {
        let d = rng.gen_range(1..=4usize);
        let e = rng.gen_range(d..=10usize.min(if d == 1 { 1 } else { 10 }));
        let mut rows: Vec<Vec<Q>> = Vec::new();
        let mut tries = 0;
        while rows.len() < e && tries < 200 {
            tries += 1;
            let r: Vec<Q> = (0..d).map(|_| q(rng.gen_range(-2..=2), 1)).collect();
            if r.iter().all(|v| *v == q(0, 1)) || rows.iter().any(|o| parallel(o, &r)) {
                continue;
            }
            rows.push(r);
        }
        if rows.len() < d || rank(&rows) < d {
            continue;
        }
        let x0: Vec<Q> = (0..d).map(|_| q(rng.gen_range(0..=8), 8)).collect();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for r in &rows {
            let v = dot(r, &x0);
            lo.push(v - q(rng.gen_range(-2..=8), 8));
            hi.push(v + q(rng.gen_range(-2..=8), 8));
        }
        return Oracle { rows, lo, hi };
    }
}

/// Compare optimize and is_empty with the oracle on one case and check
/// idempotence. Returns whether the polytope is empty.
pub fn check_case(o: &Oracle) -> Result<bool, String> {
    let m = o.matrix();
    let opt = m.optimize();
    let solved = o.solve();
    match &solved {
        None => {
            if !m.is_empty() {
                return Err(format!("oracle empty, kernel nonempty: {o:?}"));
            }
        }
        Some(b) => {
            if m.is_empty() {
                return Err(format!("oracle nonempty, kernel empty: {o:?}"));
            }
            for (i, (l, h)) in b.iter().enumerate() {
                if opt.lower()[i] != Ext::Fin(big(l)) || opt.upper()[i] != Ext::Fin(big(h)) {
                    return Err(format!("row {i}: kernel ({}, {}) oracle ({l}, {h}) on {o:?}", opt.lower()[i], opt.upper()[i]));
                }
            }
        }
    }
    if opt.optimize() != opt {
        return Err(format!("optimize not idempotent on {o:?}"));
    }
    Ok(solved.is_none())
}

/// Strict membership straight from the bounds.
pub fn inside(m: &ConstraintMatrix, x: &[Rational]) -> bool {
    m.alpha().rows().iter().enumerate().all(|(i, r)| {
        let v: Rational = r.iter().zip(x).map(|(a, b)| a * b).sum();
        let lo_ok = match &m.lower()[i] {
            Ext::NegInf => true,
            Ext::Fin(l) => *l < v,
            Ext::PosInf => false,
        };
        let hi_ok = match &m.upper()[i] {
            Ext::PosInf => true,
            Ext::Fin(h) => v < *h,
            Ext::NegInf => false,
        };
        lo_ok && hi_ok
    })
}

pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

pub fn r(n: i64, d: i64) -> Rational {
    rat(n, d)
}

pub mod semantics {
    use super::inside;
    use iup_core::catalog::{make_m1_m2, make_ma, make_p4, DeltaFeasibility};
    use iup_core::geometry::ConstraintMatrix;
    use iup_core::maps::{build_g_map, ClusterDistribution, PiecewiseAffineMap};
    use iup_core::partition::canonical_alpha;
    use iup_core::rational::{int, rat, Rational};
    use iup_core::symmetry::TorusSymmetry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub struct Case {
        pub name: &'static str,
        pub m: ConstraintMatrix,
        pub map: PiecewiseAffineMap,
        pub atoms: Vec<&'static str>,
        pub syms: Vec<&'static str>,
    }

    pub fn cases() -> Vec<Case> {
        let eps3 = rat(2, 5);
        let b3 = make_m1_m2(&DeltaFeasibility::zero(&eps3).unwrap()).unwrap();
        let map3 = build_g_map(&ClusterDistribution::uniform(4), &eps3, &canonical_alpha(3)).unwrap();
        let ma = make_ma(&rat(1, 3), &int(2), &rat(43, 100)).unwrap();
        let p4 = make_p4(&rat(44, 100)).unwrap();
        vec![
            Case {
                name: "ma",
                m: ma.candidates[0].clone(),
                map: ma.map().unwrap(),
                atoms: vec!["001", "011"],
                syms: vec!["sigma_321", "Sigma"],
            },
            Case {
                name: "m1",
                m: b3.candidates[0].clone(),
                map: map3.clone(),
                atoms: vec!["000101", "100101"],
                syms: vec!["sigma_4231", "sigma_1324", "Sigma"],
            },
            Case {
                name: "m2",
                m: b3.candidates[1].clone(),
                map: map3,
                atoms: vec!["110111", "110112", "110212", "100101", "100111", "100112"],
                syms: vec!["sigma_4321", "sigma_4231", "Sigma"],
            },
            Case {
                name: "p4",
                m: p4.candidates[0].clone(),
                map: p4.map().unwrap(),
                atoms: vec!["000000", "000001", "000101"],
                syms: vec!["sigma_2134", "sigma_3124", "sigma_1324"],
            },
        ]
    }

    /// Half interior points of `m`, half from its padded bounding box.
    fn mixed(m: &ConstraintMatrix, n: usize, pad: &Rational, rng: &mut ChaCha8Rng) -> Vec<Vec<Rational>> {
        let mut pts = m.sample_interior(n / 2, rng);
        let rest = n - pts.len();
        pts.extend(m.sample_around(rest, pad, rng));
        pts
    }

    /// Violation counts per (case, operation), `n` sampled points each,
    /// with the number that landed inside the result.
    pub fn violations(n: usize, seed: u64) -> Vec<(String, usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pad = rat(1, 20);
        let mut out = Vec::new();
        for c in cases() {
            let d = c.m.d();
            let mut record = |op: String, bad: usize, inside_count: usize| out.push((format!("{}:{op}", c.name), bad, inside_count));

            let opt = c.m.optimize();
            let pts = mixed(&c.m, n, &pad, &mut rng);
            let bad = pts.iter().filter(|x| inside(&c.m, x) != inside(&opt, x)).count();
            record("optimize".into(), bad, pts.iter().filter(|x| inside(&c.m, x)).count());

            for w in &c.atoms {
                let atom = c.map.atom(w).unwrap().matrix.clone();
                let cap = c.m.intersect(&atom).unwrap();
                let pts = mixed(&cap, n, &pad, &mut rng);
                let bad = pts.iter().filter(|x| inside(&cap, x) != (inside(&c.m, x) && inside(&atom, x))).count();
                record(format!("intersect {w}"), bad, pts.iter().filter(|x| inside(&cap, x)).count());

                let img = c.map.image_of_polytope(&c.m, w).unwrap();
                let a = c.map.expansion().clone();
                let off = c.map.atom(w).unwrap().offset.clone();
                let pts = mixed(&img, n, &pad, &mut rng);
                let pre = |y: &Vec<Rational>| -> Vec<Rational> { y.iter().zip(&off).map(|(v, b)| (v - b) / &a).collect() };
                let bad = pts.iter().filter(|y| inside(&img, y) != inside(&cap, &pre(y))).count();
                record(format!("image {w}"), bad, pts.iter().filter(|y| inside(&img, y)).count());
            }

            let scale = rat(3, 2);
            let shift: Vec<Rational> = (0..d).map(|i| rat(i as i64 + 1, 7)).collect();
            let aff = c.m.affine_image(&scale, &shift).unwrap();
            let pts = mixed(&aff, n, &pad, &mut rng);
            let bad = pts
                .iter()
                .filter(|y| {
                    let x: Vec<Rational> = y.iter().zip(&shift).map(|(v, b)| (v - b) / &scale).collect();
                    inside(&aff, y) != inside(&c.m, &x)
                })
                .count();
            record("affine".into(), bad, pts.iter().filter(|y| inside(&aff, y)).count());

            for s in &c.syms {
                let t = TorusSymmetry::named(s, d).unwrap();
                let img = t.image_of(&c.m).unwrap();
                let branch = t.resolve_on(&c.m).unwrap();
                let pts = mixed(&c.m, n, &pad, &mut rng);
                let bad = pts.iter().filter(|x| inside(&c.m, x) != inside(&img, &branch.apply(x))).count();
                record(format!("symmetry {s}"), bad, pts.iter().filter(|x| inside(&c.m, x)).count());
            }
        }
        out
    }
}
