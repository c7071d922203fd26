//! Constraint-matrix polytopes `P = {x : lower_i < (αx)_i < upper_i}`.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, projective_scale, solve_unique, solve_unique_multi};
use crate::rational::{format_rational, int, parse_rational, Ext, Rational};

/// Sparse vector over the rows of α, zero entries omitted, sorted by index.
pub type Sparse = Vec<(usize, Rational)>;

#[derive(Debug)]
pub struct CoefficientMatrix {
    d: usize,
    rows: Vec<Vec<Rational>>,
    lambda: Vec<Vec<Sparse>>,
}

impl PartialEq for CoefficientMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.rows == other.rows
    }
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

impl CoefficientMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Arc<Self>> {
        let d = rows.first().map_or(0, |r| r.len());
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch("rows must be nonempty and of equal length".into()));
        }
        if rows.len() < d {
            return Err(Error::DimensionMismatch(format!("e = {} < d = {}", rows.len(), d)));
        }
        for i in 0..rows.len() {
            if rows[i].iter().all(|x| x.is_zero()) {
                return Err(Error::DimensionMismatch(format!("row {i} is zero")));
            }
            for j in 0..i {
                if projective_scale(&rows[i], &rows[j]).is_some() {
                    return Err(Error::DegenerateMatrix(j, i));
                }
            }
        }
        let mut a = CoefficientMatrix { d, rows, lambda: Vec::new() };
        a.lambda = a.all_catalogs();
        Ok(Arc::new(a))
    }

    pub fn from_ints(rows: &[&[i64]]) -> Result<Arc<Self>> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    pub fn identity(d: usize) -> Arc<Self> {
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { int(1) } else { int(0) }).collect())
            .collect();
        Self::new(rows).expect("identity is non-degenerate")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn e(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.rows[i]
    }

    /// The catalog Λ_i; the canonical vector comes first.
    pub fn lambda(&self, i: usize) -> &[Sparse] {
        &self.lambda[i]
    }

    /// All sparse λ with at most d nonzero entries uniquely solving λᵀα = target
    /// on their support, in (size, subset) lexicographic order, deduplicated.
    pub fn lambda_for(&self, target: &[Rational]) -> Vec<Sparse> {
        let e = self.rows.len();
        let mut out: Vec<Sparse> = Vec::new();
        let mut seen: HashSet<Sparse> = HashSet::new();
        for s in 1..=self.d.min(e) {
            for_each_subset(e, s, &mut |subset| {
                let a: Vec<Vec<Rational>> = (0..self.d)
                    .map(|col| subset.iter().map(|&k| self.rows[k][col].clone()).collect())
                    .collect();
                if let Some(sol) = solve_unique(&a, target) {
                    let sp: Sparse = subset
                        .iter()
                        .zip(sol)
                        .filter(|(_, v)| !v.is_zero())
                        .map(|(&k, v)| (k, v))
                        .collect();
                    if !sp.is_empty() && seen.insert(sp.clone()) {
                        out.push(sp);
                    }
                }
            });
        }
        out
    }

    /// `lambda_for` every row at once, one elimination per support.
    fn all_catalogs(&self) -> Vec<Vec<Sparse>> {
        let e = self.rows.len();
        let targets: Vec<&[Rational]> = self.rows.iter().map(Vec::as_slice).collect();
        let mut out: Vec<Vec<Sparse>> = vec![Vec::new(); e];
        let mut seen: Vec<HashSet<Sparse>> = vec![HashSet::new(); e];
        for s in 1..=self.d.min(e) {
            for_each_subset(e, s, &mut |subset| {
                let a: Vec<Vec<Rational>> = (0..self.d)
                    .map(|col| subset.iter().map(|&k| self.rows[k][col].clone()).collect())
                    .collect();
                let Some(sols) = solve_unique_multi(&a, &targets) else { return };
                for (i, sol) in sols.into_iter().enumerate() {
                    let Some(sol) = sol else { continue };
                    let sp: Sparse = subset
                        .iter()
                        .zip(sol)
                        .filter(|(_, v)| !v.is_zero())
                        .map(|(&k, v)| (k, v))
                        .collect();
                    if !sp.is_empty() && seen[i].insert(sp.clone()) {
                        out[i].push(sp);
                    }
                }
            });
        }
        out
    }

    /// Index `i` and scale `c` with `v = c·α_i`.
    pub fn find_row(&self, v: &[Rational]) -> Option<(usize, Rational)> {
        self.rows
            .iter()
            .enumerate()
            .find_map(|(i, r)| projective_scale(v, r).map(|c| (i, c)))
    }

    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.rows.iter().map(|r| dot(r, x)).collect()
    }

    pub fn to_json(&self) -> CoefficientMatrixJson {
        CoefficientMatrixJson {
            d: self.d,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &CoefficientMatrixJson) -> Result<Arc<Self>> {
        let rows = j
            .rows
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        if rows.iter().any(|r| r.len() != j.d) {
            return Err(Error::DimensionMismatch("row length differs from d".into()));
        }
        Self::new(rows)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoefficientMatrixJson {
    pub d: usize,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundsJson {
    pub bounds: Vec<[String; 2]>,
}

/// A lower bound `None` means −∞ here, an upper bound `None` means +∞.
fn lower_combination(lam: &Sparse, lower: &[Ext], upper: &[Ext]) -> Option<Rational> {
    let mut acc = Rational::zero();
    for (k, c) in lam {
        let b = if c.is_positive() { &lower[*k] } else { &upper[*k] };
        acc += c * b.finite()?;
    }
    Some(acc)
}

fn upper_combination(lam: &Sparse, lower: &[Ext], upper: &[Ext]) -> Option<Rational> {
    let mut acc = Rational::zero();
    for (k, c) in lam {
        let b = if c.is_positive() { &upper[*k] } else { &lower[*k] };
        acc += c * b.finite()?;
    }
    Some(acc)
}

fn max_lower<'a>(lams: impl Iterator<Item = &'a Sparse>, lower: &[Ext], upper: &[Ext]) -> Ext {
    let mut best = Ext::NegInf;
    for lam in lams {
        if let Some(v) = lower_combination(lam, lower, upper) {
            let v = Ext::Fin(v);
            if v > best {
                best = v;
            }
        }
    }
    best
}

fn min_upper<'a>(lams: impl Iterator<Item = &'a Sparse>, lower: &[Ext], upper: &[Ext]) -> Ext {
    let mut best = Ext::PosInf;
    for lam in lams {
        if let Some(v) = upper_combination(lam, lower, upper) {
            let v = Ext::Fin(v);
            if v < best {
                best = v;
            }
        }
    }
    best
}

fn is_canonical(lam: &Sparse, i: usize) -> bool {
    lam.len() == 1 && lam[0].0 == i && lam[0].1.is_one()
}

#[derive(Clone, Debug)]
pub struct ConstraintMatrix {
    alpha: Arc<CoefficientMatrix>,
    lower: Vec<Ext>,
    upper: Vec<Ext>,
}

impl PartialEq for ConstraintMatrix {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.alpha, &other.alpha) || self.alpha == other.alpha)
            && self.lower == other.lower
            && self.upper == other.upper
    }
}

impl ConstraintMatrix {
    pub fn new(alpha: Arc<CoefficientMatrix>, bounds: Vec<(Ext, Ext)>) -> Result<Self> {
        if bounds.len() != alpha.e() {
            return Err(Error::DimensionMismatch(format!(
                "{} bounds for {} rows",
                bounds.len(),
                alpha.e()
            )));
        }
        let (lower, upper): (Vec<_>, Vec<_>) = bounds.into_iter().unzip();
        for i in 0..lower.len() {
            if lower[i] == Ext::PosInf || upper[i] == Ext::NegInf {
                return Err(Error::InvalidBound(i));
            }
        }
        Ok(ConstraintMatrix { alpha, lower, upper })
    }

    pub fn from_rationals(alpha: Arc<CoefficientMatrix>, bounds: Vec<(Rational, Rational)>) -> Result<Self> {
        Self::new(alpha, bounds.into_iter().map(|(l, u)| (Ext::Fin(l), Ext::Fin(u))).collect())
    }

    /// The whole space.
    pub fn unbounded(alpha: Arc<CoefficientMatrix>) -> Self {
        let e = alpha.e();
        ConstraintMatrix { alpha, lower: vec![Ext::NegInf; e], upper: vec![Ext::PosInf; e] }
    }

    /// Build from half-space pairs `lo < v·x < hi`; every `v` must be
    /// projectively a row of α. Pairs hitting the same row are intersected.
    pub fn from_halfspaces(alpha: Arc<CoefficientMatrix>, pairs: &[(Vec<Rational>, Ext, Ext)]) -> Result<Self> {
        let mut m = Self::unbounded(alpha);
        for (v, lo, hi) in pairs {
            let (i, c) = m
                .alpha
                .find_row(v)
                .ok_or_else(|| Error::MissingRow(fmt_vec(v)))?;
            // v·x = c·(α_i x), so α_i x lies between lo/c and hi/c
            let inv = c.recip();
            let (mut l, mut u) = (lo.scale(&inv), hi.scale(&inv));
            if c.is_negative() {
                std::mem::swap(&mut l, &mut u);
            }
            if l > m.lower[i] {
                m.lower[i] = l;
            }
            if u < m.upper[i] {
                m.upper[i] = u;
            }
        }
        Ok(m)
    }

    /// The open unit cube (0,1)^d; α must contain the axis directions.
    pub fn unit_cube(alpha: Arc<CoefficientMatrix>) -> Result<Self> {
        let d = alpha.d();
        let pairs: Vec<_> = (0..d)
            .map(|j| {
                let v = (0..d).map(|k| if k == j { int(1) } else { int(0) }).collect();
                (v, Ext::Fin(int(0)), Ext::Fin(int(1)))
            })
            .collect();
        Ok(Self::from_halfspaces(alpha, &pairs)?.optimize())
    }

    pub fn alpha(&self) -> &Arc<CoefficientMatrix> {
        &self.alpha
    }

    pub fn lower(&self) -> &[Ext] {
        &self.lower
    }

    pub fn upper(&self) -> &[Ext] {
        &self.upper
    }

    pub fn bounds(&self, i: usize) -> (&Ext, &Ext) {
        (&self.lower[i], &self.upper[i])
    }

    pub fn e(&self) -> usize {
        self.lower.len()
    }

    pub fn d(&self) -> usize {
        self.alpha.d()
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(Ext::is_finite)
    }

    fn check_same(&self, other: &ConstraintMatrix) -> Result<()> {
        if Arc::ptr_eq(&self.alpha, &other.alpha) || self.alpha == other.alpha {
            Ok(())
        } else {
            Err(Error::CoefficientMismatch)
        }
    }

    /// The optimization operator O. A matrix with a crossed bound is
    /// returned as is, so O stays idempotent on empty polytopes.
    pub fn optimize(&self) -> ConstraintMatrix {
        if self.crossed() {
            return self.clone();
        }
        let e = self.e();
        let mut lower = Vec::with_capacity(e);
        let mut upper = Vec::with_capacity(e);
        for i in 0..e {
            let lams = self.alpha.lambda(i);
            lower.push(max_lower(lams.iter(), &self.lower, &self.upper));
            upper.push(min_upper(lams.iter(), &self.lower, &self.upper));
        }
        ConstraintMatrix { alpha: self.alpha.clone(), lower, upper }
    }

    pub fn is_optimized(&self) -> bool {
        *self == self.optimize()
    }

    fn crossed(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(l, u)| l >= u)
    }

    pub fn is_empty(&self) -> bool {
        self.crossed() || self.optimize().crossed()
    }

    /// Smallest width `upper_i − lower_i` of O(m); positive iff nonempty.
    pub fn nonempty_margin(&self) -> Ext {
        let o = self.optimize();
        o.lower
            .iter()
            .zip(&o.upper)
            .map(|(l, u)| u.sub(l).unwrap_or(Ext::PosInf))
            .min()
            .unwrap_or(Ext::PosInf)
    }

    /// Per row, whether the lower and the upper bound of O(m) define a face.
    pub fn active_faces(&self) -> Result<Vec<(bool, bool)>> {
        if self.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        let o = self.optimize();
        Ok((0..self.e())
            .map(|i| {
                let others = || self.alpha.lambda(i).iter().filter(|l| !is_canonical(l, i));
                let lo = max_lower(others(), &o.lower, &o.upper) < o.lower[i];
                let hi = min_upper(others(), &o.lower, &o.upper) > o.upper[i];
                (lo, hi)
            })
            .collect())
    }

    /// Componentwise intersection, optimized.
    pub fn intersect(&self, other: &ConstraintMatrix) -> Result<ConstraintMatrix> {
        Ok(self.intersect_raw(other)?.optimize())
    }

    pub fn intersect_raw(&self, other: &ConstraintMatrix) -> Result<ConstraintMatrix> {
        self.check_same(other)?;
        let lower = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(b).clone()).collect();
        let upper = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(b).clone()).collect();
        Ok(ConstraintMatrix { alpha: self.alpha.clone(), lower, upper })
    }

    /// The relation O(m) ⊂ m2. This is set inclusion only when P_m is nonempty.
    pub fn includes(&self, other: &ConstraintMatrix) -> Result<bool> {
        Ok(self.inclusion_margin(other)? >= Ext::Fin(Rational::zero()))
    }

    /// Minimal slack of O(m) inside `other`; nonnegative iff `includes`.
    pub fn inclusion_margin(&self, other: &ConstraintMatrix) -> Result<Ext> {
        self.check_same(other)?;
        let o = self.optimize();
        let mut best = Ext::PosInf;
        for i in 0..self.e() {
            let lo = match &other.lower[i] {
                Ext::NegInf => Ext::PosInf,
                b => o.lower[i].sub(b).unwrap_or(Ext::PosInf),
            };
            let hi = match &other.upper[i] {
                Ext::PosInf => Ext::PosInf,
                b => b.sub(&o.upper[i]).unwrap_or(Ext::PosInf),
            };
            best = best.min(lo).min(hi);
        }
        Ok(best)
    }

    pub fn equal_polytopes(&self, other: &ConstraintMatrix) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.optimize() == other.optimize())
    }

    /// Largest entrywise gap between O(self) and O(other); zero iff equal.
    pub fn max_deviation(&self, other: &ConstraintMatrix) -> Result<Ext> {
        self.check_same(other)?;
        let (a, b) = (self.optimize(), other.optimize());
        let mut worst = Ext::Fin(Rational::zero());
        for (x, y) in a.lower.iter().chain(&a.upper).zip(b.lower.iter().chain(&b.upper)) {
            let gap = match x.sub(y) {
                None => Ext::Fin(Rational::zero()),
                Some(Ext::Fin(r)) => Ext::Fin(r.abs()),
                Some(_) => Ext::PosInf,
            };
            worst = worst.max(gap);
        }
        Ok(worst)
    }

    /// `a·O(m) + α·shift`, the image of P under x ↦ a·x + shift.
    pub fn affine_image(&self, a: &Rational, shift: &[Rational]) -> Result<ConstraintMatrix> {
        if !a.is_positive() {
            return Err(Error::NonPositiveScale);
        }
        if shift.len() != self.d() {
            return Err(Error::DimensionMismatch("shift length".into()));
        }
        let o = self.optimize();
        let b = self.alpha.apply(shift);
        Ok(ConstraintMatrix {
            alpha: self.alpha.clone(),
            lower: o.lower.iter().zip(&b).map(|(l, bi)| l.scale(a).shift(bi)).collect(),
            upper: o.upper.iter().zip(&b).map(|(u, bi)| u.scale(a).shift(bi)).collect(),
        })
    }

    pub fn translate(&self, shift: &[Rational]) -> Result<ConstraintMatrix> {
        self.affine_image(&Rational::one(), shift)
    }

    pub fn contains_point(&self, x: &[Rational]) -> Result<bool> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch(format!("point of length {} in dimension {}", x.len(), self.d())));
        }
        Ok(self.alpha.rows().iter().enumerate().all(|(i, r)| {
            let v = Ext::Fin(dot(r, x));
            self.lower[i] < v && v < self.upper[i]
        }))
    }

    /// Re-express the same polytope over another coefficient matrix that
    /// contains every row of this one (up to scale). Not optimized.
    pub fn embed(&self, target: &Arc<CoefficientMatrix>) -> Result<ConstraintMatrix> {
        if target.d() != self.d() {
            return Err(Error::DimensionMismatch("embedding across dimensions".into()));
        }
        let pairs: Vec<_> = (0..self.e())
            .filter(|&i| self.lower[i].is_finite() || self.upper[i].is_finite())
            .map(|i| (self.alpha.row(i).to_vec(), self.lower[i].clone(), self.upper[i].clone()))
            .collect();
        Self::from_halfspaces(target.clone(), &pairs)
    }

    /// inf and sup of `c·x` over P (meaningful when P is nonempty).
    pub fn range_of_form(&self, c: &[Rational]) -> (Ext, Ext) {
        let lams = self.alpha.lambda_for(c);
        (
            max_lower(lams.iter(), &self.lower, &self.upper),
            min_upper(lams.iter(), &self.lower, &self.upper),
        )
    }

    /// Per-coordinate (inf, sup) over P.
    pub fn bounding_box(&self) -> Vec<(Ext, Ext)> {
        let d = self.d();
        (0..d)
            .map(|j| {
                let v: Vec<Rational> = (0..d).map(|k| if k == j { int(1) } else { int(0) }).collect();
                self.range_of_form(&v)
            })
            .collect()
    }

    /// A point strictly inside P, found by slicing one coordinate at a time.
    pub fn interior_point(&self) -> Option<Vec<Rational>> {
        if self.is_empty() {
            return None;
        }
        let d = self.d();
        let mut e1 = vec![Rational::zero(); d];
        e1[0] = Rational::one();
        let t = pick_inside(&self.range_of_form(&e1));
        if d == 1 {
            return Some(vec![t]);
        }
        // restrict to x_1 = t and recurse on the remaining coordinates
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        let mut bounds: Vec<(Ext, Ext)> = Vec::new();
        for i in 0..self.e() {
            let r = self.alpha.row(i);
            let rest: Vec<Rational> = r[1..].to_vec();
            let off = &r[0] * &t;
            let (lo, hi) = (self.lower[i].shift(&-off.clone()), self.upper[i].shift(&-off));
            if rest.iter().all(Zero::is_zero) {
                continue;
            }
            match rows.iter().position(|q| projective_scale(&rest, q).is_some()) {
                Some(j) => {
                    let c = projective_scale(&rest, &rows[j]).unwrap().recip();
                    let (mut l, mut u) = (lo.scale(&c), hi.scale(&c));
                    if c.is_negative() {
                        std::mem::swap(&mut l, &mut u);
                    }
                    let b = &mut bounds[j];
                    if l > b.0 {
                        b.0 = l;
                    }
                    if u < b.1 {
                        b.1 = u;
                    }
                }
                None => {
                    rows.push(rest);
                    bounds.push((lo, hi));
                }
            }
        }
        let mut x = vec![t];
        if rows.len() < d - 1 {
            // pad with axis rows so the slice stays a valid coefficient matrix
            for j in 0..d - 1 {
                let v: Vec<Rational> = (0..d - 1).map(|k| if k == j { int(1) } else { int(0) }).collect();
                if !rows.iter().any(|q| projective_scale(&v, q).is_some()) {
                    rows.push(v);
                    bounds.push((Ext::NegInf, Ext::PosInf));
                }
            }
        }
        let sub = ConstraintMatrix::new(CoefficientMatrix::new(rows).ok()?, bounds).ok()?;
        x.extend(sub.interior_point()?);
        debug_assert!(self.contains_point(&x).unwrap_or(false));
        Some(x)
    }

    /// Rejection sampling of dyadic points inside P.
    pub fn sample_interior<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Vec<Rational>> {
        let bbox = self.bounding_box();
        if self.is_empty() || bbox.iter().any(|(l, u)| !l.is_finite() || !u.is_finite()) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(n);
        let mut tries = 0usize;
        while out.len() < n && tries < n * 2000 {
            tries += 1;
            let x: Vec<Rational> = bbox
                .iter()
                .map(|(l, u)| {
                    let (l, u) = (l.finite().unwrap(), u.finite().unwrap());
                    l + (u - l) * random_unit(rng)
                })
                .collect();
            if self.contains_point(&x).unwrap_or(false) {
                out.push(x);
            }
        }
        out
    }

    /// Points drawn from the bounding box enlarged by `pad` on every side,
    /// inside and outside P alike.
    pub fn sample_around<R: Rng>(&self, n: usize, pad: &Rational, rng: &mut R) -> Vec<Vec<Rational>> {
        let bbox: Vec<(Rational, Rational)> = self
            .bounding_box()
            .into_iter()
            .map(|(l, u)| {
                let l = l.finite().cloned().unwrap_or_else(|| int(-2));
                let u = u.finite().cloned().unwrap_or_else(|| int(2));
                let (l, u) = if l <= u { (l, u) } else { (u, l) };
                (l - pad, u + pad)
            })
            .collect();
        (0..n)
            .map(|_| bbox.iter().map(|(l, u)| l + (u - l) * random_unit(rng)).collect())
            .collect()
    }

    pub fn to_json(&self) -> BoundsJson {
        BoundsJson {
            bounds: self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(l, u)| [l.to_string(), u.to_string()])
                .collect(),
        }
    }

    pub fn from_json(alpha: Arc<CoefficientMatrix>, j: &BoundsJson) -> Result<Self> {
        let bounds = j
            .bounds
            .iter()
            .map(|[l, u]| Ok((Ext::parse(l)?, Ext::parse(u)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alpha, bounds)
    }
}

/// Uniform dyadic rational in (0,1) with 30 bits.
pub fn random_unit<R: Rng>(rng: &mut R) -> Rational {
    let k: i64 = rng.gen_range(1..(1i64 << 30));
    Rational::new(BigInt::from(k), BigInt::from(1i64 << 30))
}

fn pick_inside((lo, hi): &(Ext, Ext)) -> Rational {
    match (lo, hi) {
        (Ext::Fin(l), Ext::Fin(u)) => (l + u) / int(2),
        (Ext::Fin(l), _) => l + int(1),
        (_, Ext::Fin(u)) => u - int(1),
        _ => Rational::zero(),
    }
}

fn fmt_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(format_rational).collect();
    format!("({})", parts.join(", "))
}

/// Shorthand for tests and catalogs: a bounded pair.
pub fn bound(lo: Rational, hi: Rational) -> (Ext, Ext) {
    (Ext::Fin(lo), Ext::Fin(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_box(d: usize) -> ConstraintMatrix {
        let a = CoefficientMatrix::identity(d);
        ConstraintMatrix::from_rationals(a, vec![(int(0), int(1)); d]).unwrap()
    }

    #[test]
    fn batch_catalogs_match_row_by_row() {
        let a = CoefficientMatrix::from_ints(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 0], &[0, 1, 1], &[1, 1, 1], &[1, 2, 3]])
            .unwrap();
        for i in 0..a.e() {
            assert_eq!(a.lambda(i), a.lambda_for(a.row(i)).as_slice(), "row {i}");
        }
    }

    #[test]
    fn identity_catalogs_are_canonical() {
        let a = CoefficientMatrix::identity(2);
        assert_eq!(a.lambda(0), &[vec![(0, int(1))]]);
        assert_eq!(a.lambda(1), &[vec![(1, int(1))]]);
    }

    #[test]
    fn degenerate_rows_rejected() {
        assert_eq!(
            CoefficientMatrix::from_ints(&[&[1, 0], &[2, 0]]).unwrap_err(),
            Error::DegenerateMatrix(0, 1)
        );
        assert!(matches!(
            CoefficientMatrix::new(vec![vec![int(1), int(0)], vec![int(1)]]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn alpha_a_catalog_has_four_terms_per_row() {
        let a = CoefficientMatrix::from_ints(&[&[1, 0], &[0, 1], &[2, 1], &[1, 2]]).unwrap();
        for i in 0..4 {
            assert_eq!(a.lambda(i).len(), 4, "row {i}");
            assert!(is_canonical(&a.lambda(i)[0], i));
        }
    }

    #[test]
    fn square_alpha_optimize_is_identity() {
        let a = CoefficientMatrix::from_ints(&[&[1, 1], &[1, -1]]).unwrap();
        let m = ConstraintMatrix::from_rationals(a, vec![(int(0), int(3)), (rat(-1, 2), int(5))]).unwrap();
        assert_eq!(m.optimize(), m);
    }

    #[test]
    fn unit_box_basics() {
        let m = unit_box(2);
        assert!(!m.is_empty());
        assert_eq!(m.active_faces().unwrap(), vec![(true, true); 2]);
        assert!(m.contains_point(&[rat(1, 2), rat(1, 2)]).unwrap());
        assert!(!m.contains_point(&[int(0), rat(1, 2)]).unwrap());
        assert!(m.contains_point(&[int(0)]).is_err());
        let img = m.affine_image(&int(2), &[int(1), int(0)]).unwrap();
        assert_eq!(img.lower(), &[Ext::Fin(int(1)), Ext::Fin(int(0))]);
        assert_eq!(img.upper(), &[Ext::Fin(int(3)), Ext::Fin(int(2))]);
        assert_eq!(m.affine_image(&int(1), &[int(0), int(0)]).unwrap(), m.optimize());
        assert_eq!(m.affine_image(&int(0), &[int(0), int(0)]).unwrap_err(), Error::NonPositiveScale);
    }

    #[test]
    fn disjoint_boxes_exit_early() {
        let a = CoefficientMatrix::identity(2);
        let m1 = ConstraintMatrix::from_rationals(a.clone(), vec![(int(0), int(1)); 2]).unwrap();
        let m2 = ConstraintMatrix::from_rationals(a, vec![(int(2), int(3)), (int(0), int(1))]).unwrap();
        let raw = m1.intersect_raw(&m2).unwrap();
        assert!(raw.crossed());
        assert!(m1.intersect(&m2).unwrap().is_empty());
    }

    #[test]
    fn redundant_bound_is_inactive_and_tightened() {
        // x, y in (0,1) and x+y < 5: the sum bound is slack
        let a = CoefficientMatrix::from_ints(&[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let m = ConstraintMatrix::from_rationals(a, vec![(int(0), int(1)), (int(0), int(1)), (int(-7), int(5))]).unwrap();
        let o = m.optimize();
        assert_eq!(o.bounds(2), (&Ext::Fin(int(0)), &Ext::Fin(int(2))));
        let faces = m.active_faces().unwrap();
        assert_eq!(faces[2], (false, false));
        assert_eq!(faces[0], (true, true));
        assert!(m.equal_polytopes(&o).unwrap());
    }

    #[test]
    fn mismatch_detected() {
        let m1 = unit_box(2);
        let a = CoefficientMatrix::from_ints(&[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let m2 = ConstraintMatrix::unbounded(a);
        assert_eq!(m1.intersect(&m2).unwrap_err(), Error::CoefficientMismatch);
        assert_eq!(m1.includes(&m2).unwrap_err(), Error::CoefficientMismatch);
    }

    #[test]
    fn infinite_bounds_yield_zero_times_infinity_safely() {
        let a = CoefficientMatrix::from_ints(&[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let m = ConstraintMatrix::new(
            a,
            vec![
                (Ext::Fin(int(0)), Ext::PosInf),
                (Ext::Fin(int(0)), Ext::Fin(int(1))),
                (Ext::NegInf, Ext::Fin(int(1))),
            ],
        )
        .unwrap();
        let o = m.optimize();
        assert_eq!(o.bounds(0), (&Ext::Fin(int(0)), &Ext::Fin(int(1))));
        assert_eq!(o.bounds(2), (&Ext::Fin(int(0)), &Ext::Fin(int(1))));
        assert!(!m.is_empty());
    }

    #[test]
    fn interior_point_of_triangle() {
        let a = CoefficientMatrix::from_ints(&[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let m = ConstraintMatrix::from_rationals(a, vec![(int(0), rat(1, 2)), (int(0), rat(1, 2)), (rat(1, 2), int(1))]).unwrap();
        let x = m.interior_point().unwrap();
        assert!(m.contains_point(&x).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = m.sample_interior(50, &mut rng);
        assert_eq!(pts.len(), 50);
    }

    #[test]
    fn json_roundtrip() {
        let a = CoefficientMatrix::from_ints(&[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let m = ConstraintMatrix::new(
            a.clone(),
            vec![
                (Ext::Fin(rat(1, 3)), Ext::PosInf),
                (Ext::NegInf, Ext::Fin(int(1))),
                (Ext::Fin(int(0)), Ext::Fin(int(2))),
            ],
        )
        .unwrap();
        let s = serde_json::to_string(&m.to_json()).unwrap();
        assert!(s.contains("\"1/3\"") && s.contains("\"+inf\"") && s.contains("\"-inf\""));
        let back = ConstraintMatrix::from_json(a.clone(), &serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, m);
        let aj = serde_json::to_string(&a.to_json()).unwrap();
        assert_eq!(*CoefficientMatrix::from_json(&serde_json::from_str(&aj).unwrap()).unwrap(), *a);
    }
}
