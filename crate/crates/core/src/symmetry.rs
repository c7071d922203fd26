//! Affine symmetries, their α-compatibility data (ασx = Aπαx + B) and their
//! action on constraint matrices. Also the torus symmetries {Lx} induced by
//! permuting the sites of the coupled map, resolved to an affine branch on a
//! given polytope.

use std::collections::HashSet;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CoefficientMatrix, ConstraintMatrix};
use crate::linalg::{dot, identity, inverse, mat_mul, mat_vec, projective_scale, vec_mat};
use crate::rational::{floor, format_rational, int, parse_rational, Ext, Rational};

pub const GROUP_CAP: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryTransform {
    pub name: String,
    pub linear: Vec<Vec<Rational>>,
    pub offset: Vec<Rational>,
}

impl SymmetryTransform {
    pub fn new(name: impl Into<String>, linear: Vec<Vec<Rational>>, offset: Vec<Rational>) -> Result<Self> {
        let d = linear.len();
        if d == 0 || linear.iter().any(|r| r.len() != d) || offset.len() != d {
            return Err(Error::DimensionMismatch("symmetry must be square with matching offset".into()));
        }
        if inverse(&linear).is_none() {
            return Err(Error::DimensionMismatch("linear part is singular".into()));
        }
        Ok(SymmetryTransform { name: name.into(), linear, offset })
    }

    pub fn identity(d: usize) -> Self {
        SymmetryTransform { name: "id".into(), linear: identity(d), offset: vec![Rational::zero(); d] }
    }

    /// Σ = 1 − Id.
    pub fn involution(d: usize) -> Self {
        let linear = identity(d).into_iter().map(|r| r.into_iter().map(|v| -v).collect()).collect();
        SymmetryTransform { name: "Sigma".into(), linear, offset: vec![Rational::one(); d] }
    }

    pub fn d(&self) -> usize {
        self.linear.len()
    }

    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        mat_vec(&self.linear, x).into_iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &SymmetryTransform) -> SymmetryTransform {
        let linear = mat_mul(&self.linear, &other.linear);
        let offset = self.apply(&other.offset);
        SymmetryTransform { name: format!("{}*{}", self.name, other.name), linear, offset }
    }

    pub fn to_json(&self) -> SymmetryJson {
        SymmetryJson {
            name: self.name.clone(),
            linear: self.linear.iter().map(|r| r.iter().map(format_rational).collect()).collect(),
            offset: Some(self.offset.iter().map(format_rational).collect()),
            torus: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SymmetryJson {
    pub name: String,
    pub linear: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub offset: Option<Vec<String>>,
    /// Wrapped mod 1 and resolved per polytope when true.
    #[serde(default)]
    pub torus: bool,
}

#[derive(Clone, Debug)]
pub struct CompatibilityData {
    pub name: String,
    pub diag: Vec<Rational>,
    pub perm: Vec<usize>,
    pub offset: Vec<Rational>,
    alpha: Arc<CoefficientMatrix>,
}

impl CompatibilityData {
    pub fn alpha(&self) -> &Arc<CoefficientMatrix> {
        &self.alpha
    }
}

/// Find (A, π, B) with α·linear = A·P_π·α row-wise and B = α·offset.
pub fn check_compatibility(sigma: &SymmetryTransform, alpha: &Arc<CoefficientMatrix>) -> Result<CompatibilityData> {
    if sigma.d() != alpha.d() {
        return Err(Error::DimensionMismatch("symmetry and α dimensions differ".into()));
    }
    let e = alpha.e();
    let mut diag = Vec::with_capacity(e);
    let mut perm = Vec::with_capacity(e);
    let mut used = vec![false; e];
    for i in 0..e {
        let v = vec_mat(alpha.row(i), &sigma.linear);
        let (j, a) = alpha.find_row(&v).ok_or_else(|| Error::NotCompatible(sigma.name.clone()))?;
        if used[j] {
            return Err(Error::NotCompatible(sigma.name.clone()));
        }
        used[j] = true;
        diag.push(a);
        perm.push(j);
    }
    let offset = alpha.rows().iter().map(|r| dot(r, &sigma.offset)).collect();
    Ok(CompatibilityData { name: sigma.name.clone(), diag, perm, offset, alpha: alpha.clone() })
}

/// σ(m)_i = a_i·m_{π(i)} + B_i, bounds swapped where a_i < 0.
pub fn apply_to_matrix(data: &CompatibilityData, m: &ConstraintMatrix) -> Result<ConstraintMatrix> {
    if m.alpha() != &data.alpha && **m.alpha() != *data.alpha {
        return Err(Error::CoefficientMismatch);
    }
    let bounds = (0..m.e())
        .map(|i| {
            let a = &data.diag[i];
            let (lo, hi) = m.bounds(data.perm[i]);
            let (l, u) = (lo.scale(a).shift(&data.offset[i]), hi.scale(a).shift(&data.offset[i]));
            if a.is_negative() {
                (u, l)
            } else {
                (l, u)
            }
        })
        .collect();
    ConstraintMatrix::new(m.alpha().clone(), bounds)
}

pub fn commutes_with_optimize(data: &CompatibilityData) -> bool {
    data.diag.windows(2).all(|w| w[0] == w[1])
}

/// Closure of the linear parts under composition, identity first.
pub fn group_closure(generators: &[Vec<Vec<Rational>>], d: usize, cap: usize) -> Result<Vec<Vec<Vec<Rational>>>> {
    let mut elems = vec![identity(d)];
    let mut seen: HashSet<Vec<Vec<Rational>>> = elems.iter().cloned().collect();
    let mut k = 0;
    while k < elems.len() {
        for g in generators {
            let h = mat_mul(g, &elems[k]);
            if seen.insert(h.clone()) {
                if elems.len() >= cap {
                    return Err(Error::GroupNotFinite(cap));
                }
                elems.push(h);
            }
        }
        k += 1;
    }
    Ok(elems)
}

/// Stack α₀·σ_g over the generated group, dropping projective duplicates
/// (first occurrence kept). Every group element is compatible with the result.
pub fn build_group_alpha(generators: &[SymmetryTransform], alpha0: &Arc<CoefficientMatrix>) -> Result<Arc<CoefficientMatrix>> {
    let d = alpha0.d();
    let lin: Vec<_> = generators.iter().map(|g| g.linear.clone()).collect();
    let group = group_closure(&lin, d, GROUP_CAP)?;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for g in &group {
        for r in alpha0.rows() {
            let v = vec_mat(r, g);
            if !rows.iter().any(|q| projective_scale(&v, q).is_some()) {
                rows.push(v);
            }
        }
    }
    let alpha = CoefficientMatrix::new(rows)?;
    for (k, g) in group.iter().enumerate() {
        let s = SymmetryTransform { name: format!("g{k}"), linear: g.clone(), offset: vec![Rational::zero(); d] };
        check_compatibility(&s, &alpha)?;
    }
    Ok(alpha)
}

/// A symmetry x ↦ {Lx} of the open cube with integer L.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusSymmetry {
    pub name: String,
    pub linear: Vec<Vec<i64>>,
}

impl TorusSymmetry {
    pub fn identity(d: usize) -> Self {
        let linear = (0..d).map(|i| (0..d).map(|j| (i == j) as i64).collect()).collect();
        TorusSymmetry { name: "id".into(), linear }
    }

    /// Σ = 1 − Id, i.e. {−x} on the open cube.
    pub fn involution(d: usize) -> Self {
        let linear = (0..d).map(|i| (0..d).map(|j| -((i == j) as i64)).collect()).collect();
        TorusSymmetry { name: "Sigma".into(), linear }
    }

    /// The map induced by relabelling sites, u' = (u_{τ(1)}, …, u_{τ(N)}),
    /// in the coordinates x_i = u_i − u_{i+1}. `tau` is 1-based.
    pub fn from_permutation(tau: &[usize]) -> Result<Self> {
        let n = tau.len();
        let mut sorted = tau.to_vec();
        sorted.sort_unstable();
        if n < 2 || sorted != (1..=n).collect::<Vec<_>>() {
            return Err(Error::UnknownSymmetry(format!("{tau:?} is not a permutation")));
        }
        let d = n - 1;
        // u_a − u_b in x coordinates (1-based a, b)
        let diff = |a: usize, b: usize| -> Vec<i64> {
            let mut v = vec![0i64; d];
            if a < b {
                for k in a..b {
                    v[k - 1] = 1;
                }
            } else {
                for k in b..a {
                    v[k - 1] = -1;
                }
            }
            v
        };
        let linear = (0..d).map(|i| diff(tau[i], tau[i + 1])).collect();
        let name = format!("sigma_{}", tau.iter().map(|t| t.to_string()).collect::<String>());
        Ok(TorusSymmetry { name, linear })
    }

    /// "id", "Sigma", or "sigma_" followed by the permutation digits.
    pub fn named(name: &str, d: usize) -> Result<Self> {
        match name {
            "id" => Ok(Self::identity(d)),
            "Sigma" => Ok(Self::involution(d)),
            _ => {
                let digits = name.strip_prefix("sigma_").ok_or_else(|| Error::UnknownSymmetry(name.into()))?;
                let tau: Vec<usize> = digits
                    .chars()
                    .map(|c| c.to_digit(10).map(|v| v as usize))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::UnknownSymmetry(name.into()))?;
                if tau.len() != d + 1 {
                    return Err(Error::UnknownSymmetry(format!("{name} does not act in dimension {d}")));
                }
                Self::from_permutation(&tau)
            }
        }
    }

    pub fn d(&self) -> usize {
        self.linear.len()
    }

    pub fn linear_rational(&self) -> Vec<Vec<Rational>> {
        self.linear.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.d()) || self.linear == Self::identity(self.d()).linear
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &TorusSymmetry) -> TorusSymmetry {
        let d = self.d();
        let linear = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| self.linear[i][k] * other.linear[k][j]).sum()).collect())
            .collect();
        let mut s = TorusSymmetry { name: String::new(), linear };
        s.name = s.canonical_name().unwrap_or_else(|| format!("{}*{}", self.name, other.name));
        s
    }

    /// Name of the site permutation (or Σ, id) that induces this matrix.
    pub fn canonical_name(&self) -> Option<String> {
        let d = self.d();
        if self.linear == Self::identity(d).linear {
            return Some("id".into());
        }
        if self.linear == Self::involution(d).linear {
            return Some("Sigma".into());
        }
        let mut tau: Vec<usize> = (1..=d + 1).collect();
        loop {
            if let Ok(s) = Self::from_permutation(&tau) {
                if s.linear == self.linear {
                    return Some(s.name);
                }
            }
            if !next_permutation(&mut tau) {
                return None;
            }
        }
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        self.linear
            .iter()
            .map(|r| {
                let v: f64 = r.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
                v - v.floor()
            })
            .collect()
    }

    pub fn apply_exact(&self, x: &[Rational]) -> Vec<Rational> {
        self.linear
            .iter()
            .map(|r| {
                let v: Rational = r.iter().zip(x).map(|(a, b)| int(*a) * b).sum();
                &v - Rational::from_integer(floor(&v))
            })
            .collect()
    }

    /// The affine branch x ↦ Lx − k valid on all of P_m: each output
    /// coordinate's range over P must sit inside one cell [k, k+1].
    pub fn resolve_on(&self, m: &ConstraintMatrix) -> Result<SymmetryTransform> {
        if m.is_empty() {
            return Err(Error::BranchAmbiguous(self.name.clone(), "empty polytope".into()));
        }
        let mut offset = Vec::with_capacity(self.d());
        for row in self.linear_rational() {
            let (lo, hi) = m.range_of_form(&row);
            let (Ext::Fin(lo), Ext::Fin(hi)) = (lo, hi) else {
                return Err(Error::BranchAmbiguous(self.name.clone(), "unbounded range".into()));
            };
            let k = Rational::from_integer(floor(&lo));
            if hi > &k + int(1) {
                return Err(Error::BranchAmbiguous(
                    self.name.clone(),
                    format!("range ({}, {}) crosses an integer", format_rational(&lo), format_rational(&hi)),
                ));
            }
            offset.push(-k);
        }
        SymmetryTransform::new(self.name.clone(), self.linear_rational(), offset)
    }

    /// Resolve on P_m, check compatibility and return σ(m).
    pub fn image_of(&self, m: &ConstraintMatrix) -> Result<ConstraintMatrix> {
        let s = self.resolve_on(m)?;
        let data = check_compatibility(&s, m.alpha())?;
        apply_to_matrix(&data, m)
    }

    pub fn to_json(&self) -> SymmetryJson {
        SymmetryJson {
            name: self.name.clone(),
            linear: self.linear.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect(),
            offset: None,
            torus: true,
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All elements of the group generated by `generators`, identity first.
pub fn torus_group(generators: &[TorusSymmetry], d: usize) -> Result<Vec<TorusSymmetry>> {
    let mut elems = vec![TorusSymmetry::identity(d)];
    let mut seen: HashSet<Vec<Vec<i64>>> = HashSet::from([elems[0].linear.clone()]);
    let mut k = 0;
    while k < elems.len() {
        for g in generators {
            let h = g.compose(&elems[k]);
            if seen.insert(h.linear.clone()) {
                if elems.len() >= GROUP_CAP {
                    return Err(Error::GroupNotFinite(GROUP_CAP));
                }
                elems.push(h);
            }
        }
        k += 1;
    }
    Ok(elems)
}

/// A symmetry as carried by problems and bundles.
#[derive(Clone, Debug, PartialEq)]
pub enum Symmetry {
    Torus(TorusSymmetry),
    Affine(SymmetryTransform),
}

impl Symmetry {
    pub fn name(&self) -> &str {
        match self {
            Symmetry::Torus(t) => &t.name,
            Symmetry::Affine(s) => &s.name,
        }
    }

    /// The affine transform valid on P_m.
    pub fn on(&self, m: &ConstraintMatrix) -> Result<SymmetryTransform> {
        match self {
            Symmetry::Torus(t) => t.resolve_on(m),
            Symmetry::Affine(s) => Ok(s.clone()),
        }
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Symmetry::Torus(t) => t.apply_f64(x),
            Symmetry::Affine(s) => s
                .linear
                .iter()
                .zip(&s.offset)
                .map(|(r, b)| r.iter().zip(x).map(|(a, v)| a.to_f64().unwrap_or(f64::NAN) * v).sum::<f64>() + b.to_f64().unwrap_or(f64::NAN))
                .collect(),
        }
    }

    pub fn to_json(&self) -> SymmetryJson {
        match self {
            Symmetry::Torus(t) => t.to_json(),
            Symmetry::Affine(s) => s.to_json(),
        }
    }

    pub fn from_json(j: &SymmetryJson) -> Result<Self> {
        if j.torus {
            let linear = j
                .linear
                .iter()
                .map(|r| r.iter().map(|s| s.trim().parse::<i64>().map_err(|_| Error::Parse(s.clone()))).collect())
                .collect::<Result<Vec<Vec<i64>>>>()?;
            return Ok(Symmetry::Torus(TorusSymmetry { name: j.name.clone(), linear }));
        }
        let linear = j
            .linear
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect())
            .collect::<Result<Vec<Vec<Rational>>>>()?;
        let d = linear.len();
        let offset = match &j.offset {
            Some(o) => o.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?,
            None => vec![Rational::zero(); d],
        };
        Ok(Symmetry::Affine(SymmetryTransform::new(j.name.clone(), linear, offset)?))
    }

    /// Named torus symmetry or one of the listed symmetries.
    pub fn lookup(name: &str, list: &[Symmetry], d: usize) -> Result<Symmetry> {
        if let Some(s) = list.iter().find(|s| s.name() == name) {
            return Ok(s.clone());
        }
        TorusSymmetry::named(name, d).map(Symmetry::Torus)
    }
}
