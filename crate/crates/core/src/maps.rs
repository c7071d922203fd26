//! Piecewise affine maps `x ↦ a·x + B_ω` on an atomic partition, and the
//! globally coupled family `G_{ρ,ε} = {2(1−ε)x + 2εB_ρ(x)}`.

use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundsJson, CoefficientMatrix, ConstraintMatrix};
use crate::partition::{contiguous_ranges, enumerate_atoms, label_of, AtomLabel};
use crate::rational::{floor, format_rational, int, rat, to_f64, Rational};

/// h(u) = ⌊u + ½⌋, except h(u) = 0 on ½ + ℤ.
pub fn floor_h(u: &Rational) -> i64 {
    h_checked(u).unwrap_or(0)
}

/// h(u), or `None` when u lies on a discontinuity (½ + ℤ).
pub fn h_checked(u: &Rational) -> Option<i64> {
    let v = u + rat(1, 2);
    if v.is_integer() {
        return None;
    }
    floor(&v).to_i64()
}

pub fn h_f64(u: f64) -> i64 {
    (u + 0.5).floor() as i64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDistribution {
    weights: Vec<Rational>,
}

impl ClusterDistribution {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::ParameterOutOfRange("need at least two clusters".into()));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::ParameterOutOfRange("negative cluster weight".into()));
        }
        if weights.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::ParameterOutOfRange("cluster weights must sum to 1".into()));
        }
        Ok(ClusterDistribution { weights })
    }

    pub fn uniform(n: usize) -> Self {
        ClusterDistribution { weights: vec![rat(1, n as i64); n] }
    }

    /// (ϱ+δ, 1−2ϱ, ϱ−δ)
    pub fn three(varrho: &Rational, delta: &Rational) -> Result<Self> {
        Self::new(vec![varrho + delta, int(1) - int(2) * varrho, varrho - delta])
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Phase-space dimension d = N − 1.
    pub fn d(&self) -> usize {
        self.weights.len() - 1
    }
}

/// B_ρ from the h-values of the contiguous sums; `h(i, j)` is 0-based inclusive.
fn b_from_h(rho: &ClusterDistribution, h: impl Fn(usize, usize) -> i64) -> Vec<Rational> {
    let r = &rho.weights;
    let d = rho.d();
    (0..d)
        .map(|i| {
            let mut b = (&r[i] + &r[i + 1]) * int(h(i, i));
            for j in 0..i {
                b += &r[j] * int(h(j, i) - h(j, i - 1));
            }
            for j in i + 1..d {
                b += &r[j + 1] * int(h(i, j) - h(i + 1, j));
            }
            b
        })
        .collect()
}

fn sums(x: &[Rational]) -> Vec<Vec<Rational>> {
    // s[i][j] = x_i + … + x_j for i ≤ j
    let d = x.len();
    let mut s = vec![vec![Rational::zero(); d]; d];
    for i in 0..d {
        let mut acc = Rational::zero();
        for j in i..d {
            acc += &x[j];
            s[i][j] = acc.clone();
        }
    }
    s
}

pub fn b_rho(rho: &ClusterDistribution, x: &[Rational]) -> Result<Vec<Rational>> {
    if x.len() != rho.d() {
        return Err(Error::DimensionMismatch("point length vs cluster count".into()));
    }
    let s = sums(x);
    let mut hv = vec![vec![0i64; x.len()]; x.len()];
    for (i, j) in contiguous_ranges(x.len()) {
        hv[i][j] = h_checked(&s[i][j]).ok_or(Error::OnDiscontinuity)?;
    }
    Ok(b_from_h(rho, |i, j| hv[i][j]))
}

fn frac(r: &Rational) -> Rational {
    r - Rational::from_integer(floor(r))
}

/// {2(1−ε)x + 2εB_ρ(x)} straight from the definition.
pub fn g_raw(rho: &ClusterDistribution, eps: &Rational, x: &[Rational]) -> Result<Vec<Rational>> {
    let b = b_rho(rho, x)?;
    let a = int(2) * (int(1) - eps);
    Ok(x.iter().zip(&b).map(|(xi, bi)| frac(&(&a * xi + int(2) * eps * bi))).collect())
}

pub fn g_raw_f64(rho: &[f64], eps: f64, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let h = |i: usize, j: usize| h_f64(x[i..=j].iter().sum());
    (0..d)
        .map(|i| {
            let mut b = (rho[i] + rho[i + 1]) * h(i, i) as f64;
            for j in 0..i {
                b += rho[j] * (h(j, i) - h(j, i - 1)) as f64;
            }
            for j in i + 1..d {
                b += rho[j + 1] * (h(i, j) - h(i + 1, j)) as f64;
            }
            let v = 2.0 * (1.0 - eps) * x[i] + 2.0 * eps * b;
            v - v.floor()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct AtomPiece {
    pub label: AtomLabel,
    pub matrix: ConstraintMatrix,
    pub offset: Vec<Rational>,
}

#[derive(Clone, Debug)]
struct FloatView {
    rows: Vec<Vec<f64>>,
    norms: Vec<f64>,
    bounds: Vec<Vec<(f64, f64)>>,
    offsets: Vec<Vec<f64>>,
    a: f64,
}

#[derive(Clone, Debug)]
pub struct PiecewiseAffineMap {
    d: usize,
    a: Rational,
    ambient: ConstraintMatrix,
    atoms: Vec<AtomPiece>,
    float: FloatView,
}

/// One float step: image, index of the atom used, and the distance of the
/// source point to that atom's boundary (negative when outside every atom).
pub struct FloatStep {
    pub image: Vec<f64>,
    pub atom: usize,
    pub slack: f64,
}

impl PiecewiseAffineMap {
    pub fn new(a: Rational, ambient: ConstraintMatrix, atoms: Vec<AtomPiece>) -> Result<Self> {
        if !a.is_positive() {
            return Err(Error::NonPositiveScale);
        }
        let alpha = ambient.alpha().clone();
        for at in &atoms {
            if at.matrix.alpha() != &alpha && **at.matrix.alpha() != *alpha {
                return Err(Error::CoefficientMismatch);
            }
            if at.offset.len() != alpha.d() {
                return Err(Error::DimensionMismatch("offset length".into()));
            }
        }
        let rows: Vec<Vec<f64>> = alpha.rows().iter().map(|r| r.iter().map(to_f64).collect()).collect();
        let norms = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        let bounds = atoms
            .iter()
            .map(|at| {
                at.matrix
                    .lower()
                    .iter()
                    .zip(at.matrix.upper())
                    .map(|(l, u)| (l.to_f64(), u.to_f64()))
                    .collect()
            })
            .collect();
        let offsets = atoms.iter().map(|at| at.offset.iter().map(to_f64).collect()).collect();
        let float = FloatView { rows, norms, bounds, offsets, a: to_f64(&a) };
        Ok(PiecewiseAffineMap { d: alpha.d(), a, ambient, atoms, float })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn expansion(&self) -> &Rational {
        &self.a
    }

    pub fn ambient(&self) -> &ConstraintMatrix {
        &self.ambient
    }

    pub fn alpha(&self) -> &Arc<CoefficientMatrix> {
        self.ambient.alpha()
    }

    pub fn atoms(&self) -> &[AtomPiece] {
        &self.atoms
    }

    pub fn atom(&self, label: &str) -> Result<&AtomPiece> {
        self.atoms
            .iter()
            .find(|a| a.label == label)
            .ok_or_else(|| Error::UnknownAtom(label.to_string()))
    }

    pub fn evaluate(&self, x: &[Rational]) -> Result<(Vec<Rational>, AtomLabel)> {
        for at in &self.atoms {
            if at.matrix.contains_point(x)? {
                let y = x.iter().zip(&at.offset).map(|(xi, b)| &self.a * xi + b).collect();
                return Ok((y, at.label.clone()));
            }
        }
        Err(Error::OnBoundary)
    }

    /// F restricted to atom ω, applied to P_m: a·O(m ∩ m_ω) + α·B_ω.
    pub fn image_of_polytope(&self, m: &ConstraintMatrix, omega: &str) -> Result<ConstraintMatrix> {
        let at = self.atom(omega)?;
        m.intersect(&at.matrix)?.affine_image(&self.a, &at.offset)
    }

    pub fn step_f64(&self, x: &[f64]) -> FloatStep {
        let f = &self.float;
        let ax: Vec<f64> = f.rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, bounds) in f.bounds.iter().enumerate() {
            let mut slack = f64::INFINITY;
            for (i, (lo, hi)) in bounds.iter().enumerate() {
                let s = (ax[i] - lo).min(hi - ax[i]) / f.norms[i];
                if s < slack {
                    slack = s;
                }
            }
            if slack > best.1 {
                best = (k, slack);
            }
        }
        let image = x.iter().zip(&f.offsets[best.0]).map(|(xi, b)| f.a * xi + b).collect();
        FloatStep { image, atom: best.0, slack: best.1 }
    }

    pub fn to_json(&self) -> MapJson {
        MapJson {
            d: self.d,
            a: format_rational(&self.a),
            atoms: self
                .atoms
                .iter()
                .map(|at| AtomJson {
                    label: at.label.clone(),
                    bounds: at.matrix.to_json(),
                    offset: Some(at.offset.iter().map(format_rational).collect()),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomJson {
    pub label: String,
    #[serde(flatten)]
    pub bounds: BoundsJson,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub offset: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub d: usize,
    pub a: String,
    pub atoms: Vec<AtomJson>,
}

/// G_{ρ,ε} over `alpha`, which must contain the contiguous-sum rows.
pub fn build_g_map(rho: &ClusterDistribution, eps: &Rational, alpha: &Arc<CoefficientMatrix>) -> Result<PiecewiseAffineMap> {
    let d = rho.d();
    if alpha.d() != d {
        return Err(Error::DimensionMismatch(format!("ρ has d = {d}, α has d = {}", alpha.d())));
    }
    if !eps.is_positive() && !eps.is_zero() || *eps >= rat(1, 2) {
        return Err(Error::ParameterOutOfRange("ε must lie in [0, 1/2)".into()));
    }
    let a = int(2) * (int(1) - eps);
    let two_eps = int(2) * eps;
    let mut pieces = Vec::new();
    for atom in enumerate_atoms(d) {
        let w = atom.matrix.interior_point().ok_or(Error::EmptyPolytope)?;
        debug_assert_eq!(label_of(&w).ok().as_deref(), Some(atom.label.as_str()));
        let b = b_rho(rho, &w)?;
        let offset = w
            .iter()
            .zip(&b)
            .map(|(wi, bi)| &two_eps * bi - int(floor_h(wi)))
            .collect();
        let matrix = atom.matrix.embed(alpha)?.optimize();
        pieces.push(AtomPiece { label: atom.label, matrix, offset });
    }
    PiecewiseAffineMap::new(a, ConstraintMatrix::unit_cube(alpha.clone())?, pieces)
}

/// Exact binary rational for a point given in floats.
pub fn rationalize(x: &[f64]) -> Option<Vec<Rational>> {
    x.iter().map(|v| Rational::from_float(*v)).collect()
}
