//! Closed-form candidate solutions for the coupled-map conditioning problems,
//! their parameter feasibility sets, and bundles tying candidates to a
//! coefficient matrix, a problem and a map.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditioning::{
    bisect_threshold, check_asiup, orbit_set, threshold_poly_m1m2, threshold_poly_ma, threshold_poly_p4, verify,
    AsiupReport, Bracket, ConditioningProblem, Polynomial, SelfSymmetry, Transition, VerificationReport,
};
use crate::error::{Error, Result};
use crate::geometry::{random_unit, BoundsJson, CoefficientMatrix, CoefficientMatrixJson, ConstraintMatrix};
use crate::maps::{build_g_map, ClusterDistribution, PiecewiseAffineMap};
use crate::partition::canonical_alpha;
use crate::rational::{format_rational, half, int, parse_rational, rat, Ext, Rational};
use crate::symmetry::{torus_group, Symmetry, SymmetryJson, TorusSymmetry};

fn check_open(name: &str, v: &Rational, lo: &Rational, hi: &Rational) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(format!(
            "{name} = {} outside ({}, {})",
            format_rational(v),
            format_rational(lo),
            format_rational(hi)
        )))
    }
}

fn fin(lo: Rational, hi: Rational) -> (Ext, Ext) {
    (Ext::Fin(lo), Ext::Fin(hi))
}

fn row(v: &[Rational]) -> Vec<Rational> {
    v.to_vec()
}

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| int(x)).collect()
}

/// Rows x₁, x₂, a·x₁+x₂, x₁+a·x₂ and x₁+x₂. For a = 1 this collapses to the
/// canonical three-row matrix.
pub fn alpha_a(a: &Rational) -> Result<Arc<CoefficientMatrix>> {
    if *a < int(1) {
        return Err(Error::ParameterOutOfRange("a must be at least 1".into()));
    }
    if *a == int(1) {
        return Ok(canonical_alpha(2));
    }
    CoefficientMatrix::new(vec![ints(&[1, 0]), ints(&[0, 1]), vec![a.clone(), int(1)], vec![int(1), a.clone()], ints(&[1, 1])])
}

/// r_ϱ = (1 − 2ϱε)/(3 − 2ε)
pub fn r_rho(varrho: &Rational, eps: &Rational) -> Rational {
    (int(1) - int(2) * varrho * eps) / (int(3) - int(2) * eps)
}

/// The closed-form quadrilateral bounds, in the row order
/// x₁, x₂, a·x₁+x₂, x₁+a·x₂.
pub fn ma_entries(varrho: &Rational, a: &Rational, eps: &Rational) -> Result<Vec<(Rational, Rational)>> {
    check_open("ϱ", varrho, &int(0), &half())?;
    check_open("ε", eps, &int(0), &half())?;
    if *a < int(1) {
        return Err(Error::ParameterOutOfRange("a must be at least 1".into()));
    }
    let one = int(1);
    let r = r_rho(varrho, eps);
    let s = &one - int(2) * varrho; // 1 − 2ϱ
    let ap1 = a + &one;
    let am1 = a - &one;
    let lo1 = eps * &s;
    let hi2 = &one - int(2) * eps * (&one - varrho - eps * &s);
    let hi_a12 = &ap1 * &r;
    let lo_a12 = (&ap1 / a) * (&r + &am1 * eps * &s);
    let lo_1a2 = &ap1 * &r;
    let om = &one - eps;
    let hi_1a2 = (&ap1 / a) * (a * &r + int(2) * &am1 * &om * &om * (&one - int(2) * &r));
    Ok(vec![(lo1, r.clone()), (r, hi2), (lo_a12, hi_a12), (lo_1a2, hi_1a2)])
}

/// m_a on `alpha_a(a)`, not optimized (at a = 1 the sum rows merge).
pub fn make_ma_raw(varrho: &Rational, a: &Rational, eps: &Rational) -> Result<ConstraintMatrix> {
    let e = ma_entries(varrho, a, eps)?;
    let alpha = alpha_a(a)?;
    let dirs = [ints(&[1, 0]), ints(&[0, 1]), vec![a.clone(), int(1)], vec![int(1), a.clone()]];
    let pairs: Vec<_> = dirs.iter().zip(e).map(|(v, (l, u))| (row(v), Ext::Fin(l), Ext::Fin(u))).collect();
    ConstraintMatrix::from_halfspaces(alpha, &pairs)
}

/// The two-dimensional problem in reduced form: one polytope meeting A₀₀₁
/// and A₀₁₁.
pub fn problem_ma() -> ConditioningProblem {
    ConditioningProblem::new(
        vec![vec!["001".into(), "011".into()]],
        vec![
            Transition { k: 0, atom: "001".into(), to: 0, sym: "sigma_321".into(), equality: true, within_atom: None },
            Transition { k: 0, atom: "011".into(), to: 0, sym: "id".into(), equality: false, within_atom: None },
        ],
        vec![],
    )
    .expect("static problem")
}

pub fn make_ma(varrho: &Rational, a: &Rational, eps: &Rational) -> Result<CatalogBundle> {
    let m = make_ma_raw(varrho, a, eps)?.optimize();
    let s321 = Symmetry::Torus(TorusSymmetry::named("sigma_321", 2)?);
    Ok(CatalogBundle {
        name: "ma".into(),
        alpha: m.alpha().clone(),
        candidates: vec![m],
        problem: problem_ma(),
        rho: ClusterDistribution::three(varrho, &int(0))?,
        eps: eps.clone(),
        symmetries: vec![s321.clone()],
        group: vec![s321],
    })
}

/// p* = (2 − ε)/(2(3 − 2ε))
pub fn p_star(eps: &Rational) -> Rational {
    (int(2) - eps) / (int(2) * (int(3) - int(2) * eps))
}

/// A point δ ∈ Δ_ε, checked against the full inequality system.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaFeasibility {
    pub delta: [Rational; 5],
    pub eps: Rational,
    pub p_star: Rational,
}

impl DeltaFeasibility {
    pub fn new(eps: &Rational, delta: [Rational; 5]) -> Result<Self> {
        check_open("ε", eps, &int(0), &half())?;
        let p = p_star(eps);
        let [d1, d2, d3, d4, d5] = &delta;
        let one = int(1);
        let c = int(2) * (&one - eps);
        let om = &one - eps;
        let mn = d2.min(d4).clone();
        let mx = d2.max(d4).clone();
        let q = &one - int(2) * &p; // 1 − 2p*
        let checks: [(bool, &str); 11] = [
            (*d1 >= Rational::zero(), "0 ≤ 2(1−ε)δ1"),
            (&c * d1 <= int(2) * &p - &om, "2(1−ε)δ1 ≤ 2p*−(1−ε)"),
            (*d1 <= eps * &q + &c * &mn, "δ1 ≤ ε(1−2p*) + 2(1−ε)min{δ2,δ4}"),
            (mn >= Rational::zero(), "0 ≤ 2(1−ε)min{δ2,δ4}"),
            (&c * &mx <= &p - &om * &om, "2(1−ε)max{δ2,δ4} ≤ p*−(1−ε)²"),
            (*d3 >= Rational::zero(), "0 ≤ δ3"),
            (*d3 <= mn, "δ3 ≤ min{δ2,δ4}"),
            (d3 + &mx <= *d1, "δ3 + max{δ2,δ4} ≤ δ1"),
            (mx <= *d5, "max{δ2,δ4} ≤ δ5"),
            (*d5 <= eps - &p, "δ5 ≤ ε−p*"),
            (d5 + d1 <= &q + &mn, "δ5 + δ1 ≤ 1−2p* + min{δ2,δ4}"),
        ];
        if let Some((_, name)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::DeltaInfeasible(name.to_string()));
        }
        Ok(DeltaFeasibility { delta, eps: eps.clone(), p_star: p })
    }

    pub fn zero(eps: &Rational) -> Result<Self> {
        Self::new(eps, std::array::from_fn(|_| Rational::zero()))
    }

    /// A random point of the simpler sufficient box, which lies in Δ_ε.
    pub fn sample_box<R: Rng>(eps: &Rational, rng: &mut R) -> Result<Self> {
        let p = p_star(eps);
        let one = int(1);
        let om = &one - eps;
        let q = &one - int(2) * &p;
        let pick = |lo: &Rational, hi: &Rational, rng: &mut R| -> Result<Rational> {
            if hi < lo {
                return Err(Error::DeltaInfeasible("sufficient box is empty for this ε".into()));
            }
            Ok(lo + (hi - lo) * random_unit(rng))
        };
        let z = Rational::zero();
        let d1_hi = ((int(2) * &p - &om) / (int(2) * &om)).min(eps * &q);
        let d1 = pick(&z, &d1_hi, rng)?;
        let d24_hi = [(&p - &om * &om) / (int(2) * &om), d1.clone(), &q - &d1, eps - &p]
            .into_iter()
            .min()
            .unwrap();
        let d2 = pick(&z, &d24_hi, rng)?;
        let d4 = pick(&z, &d24_hi, rng)?;
        let mx = d2.clone().max(d4.clone());
        let d3_hi = [d2.clone(), d4.clone(), &d1 - &mx].into_iter().min().unwrap();
        let d3 = pick(&z, &d3_hi, rng)?;
        let d5_hi = (&q - &d1).min(eps - &p);
        let d5 = pick(&mx, &d5_hi, rng)?;
        Self::new(eps, [d1, d2, d3, d4, d5])
    }
}

/// m₁(δ), m₂(δ) on the canonical 3D matrix, without the feasibility check.
pub fn m1_m2_entries(eps: &Rational, delta: &[Rational; 5]) -> Result<(ConstraintMatrix, ConstraintMatrix)> {
    check_open("ε", eps, &int(0), &half())?;
    let p = p_star(eps);
    let one = int(1);
    let two = int(2);
    let c = &two * (&one - eps);
    let h = eps * half();
    let [d1, d2, d3, d4, d5] = delta;
    let alpha = canonical_alpha(3);
    let m1 = vec![
        fin(&one - &two * &p + &c * d1, &one - eps),
        fin(h.clone(), &p - &c * d2),
        fin(int(0), &p - &h - &c * d3),
        fin(&one - &p + &c * d3, &one - &h),
        fin(h.clone(), &p - &c * d3),
        fin(&one - &p + &c * d4, &one - &h),
    ];
    let m2 = vec![
        fin(&two * &p + d1, one.clone()),
        fin(&p + d2, &one - &p - d2),
        fin(int(0), &one - &two * &p - d1),
        fin(&one + &p + d3, &two - &p - d5),
        fin(&p + d5, &one - &p - d3),
        fin(&one + &p + d4, &two - &p - d4),
    ];
    Ok((ConstraintMatrix::new(alpha.clone(), m1)?, ConstraintMatrix::new(alpha, m2)?))
}

/// The three-dimensional two-candidate problem. The transitions out of the
/// 100* atoms of P₂ follow from σ₄₃₂₁(P₂) = P₂ and are listed explicitly.
pub fn problem_m1m2() -> ConditioningProblem {
    let t = |k: usize, atom: &str, to: usize, sym: &str, equality: bool| Transition {
        k,
        atom: atom.into(),
        to,
        sym: sym.into(),
        equality,
        within_atom: None,
    };
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    ConditioningProblem::new(
        vec![
            s(&["000101", "100101"]),
            s(&["110111", "110112", "110212", "100101", "100111", "100112"]),
        ],
        vec![
            t(0, "000101", 1, "id", false),
            t(0, "100101", 0, "id", false),
            t(1, "110111", 0, "id", true),
            t(1, "110112", 0, "sigma_4231", false),
            t(1, "110212", 1, "id", false),
            t(1, "100112", 0, "sigma_4321", true),
            t(1, "100111", 0, "sigma_1324", false),
            t(1, "100101", 1, "id", false),
        ],
        vec![SelfSymmetry { k: 1, sym: "sigma_4321".into() }],
    )
    .expect("static problem")
}

fn m1m2_symmetries() -> Result<(Vec<Symmetry>, Vec<Symmetry>)> {
    let n = |s| TorusSymmetry::named(s, 3).map(Symmetry::Torus);
    let syms = vec![n("sigma_4231")?, n("sigma_4321")?, n("sigma_1324")?];
    let gens = [TorusSymmetry::named("sigma_4231", 3)?, TorusSymmetry::named("sigma_1324", 3)?];
    let group = torus_group(&gens, 3)?.into_iter().skip(1).map(Symmetry::Torus).collect();
    Ok((syms, group))
}

/// (m₁(δ), m₂(δ)) with δ checked against Δ_ε.
pub fn make_m1_m2(delta: &DeltaFeasibility) -> Result<CatalogBundle> {
    m1_m2_bundle(&delta.eps, &delta.delta)
}

/// The same bundle without the Δ_ε check (for parameters outside the
/// existence range).
pub fn m1_m2_bundle(eps: &Rational, delta: &[Rational; 5]) -> Result<CatalogBundle> {
    let (m1, m2) = m1_m2_entries(eps, delta)?;
    let (symmetries, group) = m1m2_symmetries()?;
    Ok(CatalogBundle {
        name: "m1m2".into(),
        alpha: m1.alpha().clone(),
        candidates: vec![m1, m2],
        problem: problem_m1m2(),
        rho: ClusterDistribution::uniform(4),
        eps: eps.clone(),
        symmetries,
        group,
    })
}

/// The ten directions: axes, contiguous sums, x₁+2x₂+3x₃ and the three
/// p*-weighted directions.
pub fn alpha_p4(eps: &Rational) -> Result<Arc<CoefficientMatrix>> {
    check_open("ε", eps, &int(0), &half())?;
    let p = p_star(eps);
    let (p1, p2, p3) = (int(1) - &p, int(1) - int(2) * &p, int(1) - int(3) * &p);
    CoefficientMatrix::new(vec![
        ints(&[1, 0, 0]),
        ints(&[0, 1, 0]),
        ints(&[0, 0, 1]),
        ints(&[1, 1, 0]),
        ints(&[0, 1, 1]),
        ints(&[1, 1, 1]),
        ints(&[1, 2, 3]),
        vec![p1, p2.clone(), p3.clone()],
        vec![-p.clone(), p2, p3.clone()],
        vec![-p.clone(), int(-2) * &p, p3],
    ])
}

/// The second-bifurcation polytope P with default bounds inside [0, ½]³, not optimized.
pub fn p4_raw(eps: &Rational) -> Result<ConstraintMatrix> {
    let alpha = alpha_p4(eps)?;
    let p = p_star(eps);
    let (p2, p3) = (int(1) - int(2) * &p, int(1) - int(3) * &p);
    let h = half();
    let bounds = vec![
        fin(int(0), h.clone()),
        fin(eps * &h, h.clone()),
        fin(int(0), h.clone()),
        fin(eps * &h * (int(3) - int(2) * eps), int(1)),
        fin(int(0), h.clone()),
        fin(int(0), rat(3, 2)),
        fin(int(0), int(1)),
        fin(&p3 * &h, p2),
        fin(-&p * &h + &p3 * &h, int(0)),
        fin(int(-3) * &p * &h + &p3 * &h, int(0)),
    ];
    ConstraintMatrix::new(alpha, bounds)
}

pub fn problem_p4() -> ConditioningProblem {
    ConditioningProblem::new(
        vec![vec!["000000".into(), "000001".into(), "000101".into()]],
        vec![
            Transition {
                k: 0,
                atom: "000000".into(),
                to: 0,
                sym: "id".into(),
                equality: false,
                within_atom: Some("000101".into()),
            },
            Transition { k: 0, atom: "000001".into(), to: 0, sym: "sigma_3124".into(), equality: false, within_atom: None },
            Transition { k: 0, atom: "000101".into(), to: 0, sym: "sigma_2134".into(), equality: false, within_atom: None },
        ],
        vec![],
    )
    .expect("static problem")
}

pub fn make_p4(eps: &Rational) -> Result<CatalogBundle> {
    let m = p4_raw(eps)?.optimize();
    let n = |s| TorusSymmetry::named(s, 3);
    let symmetries = vec![
        Symmetry::Torus(n("sigma_2134")?),
        Symmetry::Torus(n("sigma_3124")?),
        Symmetry::Torus(n("sigma_1324")?),
    ];
    let group = torus_group(&[n("sigma_2134")?, n("sigma_1324")?], 3)?
        .into_iter()
        .skip(1)
        .map(Symmetry::Torus)
        .collect();
    Ok(CatalogBundle {
        name: "p4".into(),
        alpha: m.alpha().clone(),
        candidates: vec![m],
        problem: problem_p4(),
        rho: ClusterDistribution::uniform(4),
        eps: eps.clone(),
        symmetries,
        group,
    })
}

/// x₃-extent comparison separating the orbit set from Σ(P).
#[derive(Clone, Debug)]
pub struct X3Chain {
    pub sup_p: Rational,
    pub sup_orbit: Rational,
    /// inf of x₃ over Σ(P), i.e. 1 − sup_p
    pub inf_sigma_p: Rational,
}

impl X3Chain {
    pub fn holds(&self) -> bool {
        self.sup_orbit < self.inf_sigma_p
    }
}

pub fn p4_x3_chain(bundle: &CatalogBundle) -> Result<X3Chain> {
    let e3 = ints(&[0, 0, 1]);
    let sup = |m: &ConstraintMatrix| match m.range_of_form(&e3).1 {
        Ext::Fin(v) => Ok(v),
        _ => Err(Error::UnboundedResult(2)),
    };
    let sup_p = sup(&bundle.candidates[0])?;
    let mut sup_orbit = sup_p.clone();
    for m in orbit_set(&bundle.candidates, &bundle.group)? {
        sup_orbit = sup_orbit.max(sup(&m)?);
    }
    Ok(X3Chain { inf_sigma_p: int(1) - &sup_p, sup_p, sup_orbit })
}

/// The reduced two-dimensional problem duplicated without the σ₃₂₁
/// symmetry.
pub fn problem_cont2() -> ConditioningProblem {
    let t = |k: usize, atom: &str, to: usize, equality: bool| Transition {
        k,
        atom: atom.into(),
        to,
        sym: "id".into(),
        equality,
        within_atom: None,
    };
    ConditioningProblem::new(
        vec![vec!["001".into(), "011".into()], vec!["011".into(), "111".into()]],
        vec![t(0, "001", 1, true), t(0, "011", 0, false), t(1, "011", 1, false), t(1, "111", 0, true)],
        vec![],
    )
    .expect("static problem")
}

/// Solve the edge equations for ρ = (ϱ+δ, 1−2ϱ, ϱ−δ) and optimize.
pub fn continue_problem2(varrho: &Rational, a: &Rational, eps: &Rational, delta: &Rational) -> Result<CatalogBundle> {
    check_open("ε", eps, &int(0), &half())?;
    if delta.abs() >= *varrho {
        return Err(Error::ParameterOutOfRange("|δ| must be below ϱ".into()));
    }
    if *a <= int(1) {
        return Err(Error::ParameterOutOfRange("a must exceed 1".into()));
    }
    let rho = ClusterDistribution::three(varrho, delta)?;
    let (r1, r3) = (&rho.weights()[0], &rho.weights()[2]);
    let one = int(1);
    let two_e = int(2) * eps;
    let c = int(2) * (&one - eps);
    let det = &one - &c * &c;
    if det.is_zero() {
        return Err(Error::SingularSystem);
    }
    let lo1_1 = eps * (&one - int(2) * r3);
    let lo2_1 = &c * &lo1_1 + &two_e * r3;
    let hi2_2 = &one - eps + &two_e * r1;
    let hi1_2 = &c * &hi2_2 + &two_e * (&one - r1) - &one;
    let ap1 = a + &one;
    // u₂ = c·u₁ + k₁ and u₁ = c·u₂ + k₂
    let solve = |k1: Rational, k2: Rational| {
        let u1 = (&c * &k1 + &k2) / &det;
        let u2 = &c * &u1 + &k1;
        (u1, u2)
    };
    let (lo1_1a2, lo2_1a2) = solve(&two_e * (r3 + a * r1), &two_e * ((&one - r3) + a * (&one - r1)) - &ap1);
    let (hi1_a12, hi2_a12) = solve(&two_e * (a * r3 + r1), &two_e * (a * (&one - r3) + (&one - r1)) - &ap1);
    let alpha = alpha_a(a)?;
    let dirs = [ints(&[1, 0]), ints(&[0, 1]), vec![a.clone(), int(1)], vec![int(1), a.clone()]];
    let build = |lo1: Rational, hi2: Rational, hi_a12: Rational, lo_1a2: Rational| -> Result<ConstraintMatrix> {
        let pairs = vec![
            (dirs[0].clone(), Ext::Fin(lo1), Ext::PosInf),
            (dirs[1].clone(), Ext::NegInf, Ext::Fin(hi2)),
            (dirs[2].clone(), Ext::NegInf, Ext::Fin(hi_a12)),
            (dirs[3].clone(), Ext::Fin(lo_1a2), Ext::PosInf),
        ];
        Ok(ConstraintMatrix::from_halfspaces(alpha.clone(), &pairs)?.optimize())
    };
    let m1 = build(lo1_1, hi1_2, hi1_a12, lo1_1a2)?;
    let m2 = build(lo2_1, hi2_2, hi2_a12, lo2_1a2)?;
    Ok(CatalogBundle {
        name: "cont2".into(),
        alpha,
        candidates: vec![m1, m2],
        problem: problem_cont2(),
        rho,
        eps: eps.clone(),
        symmetries: vec![],
        group: vec![],
    })
}

/// Bracket on the largest |δ| for which the continued pair still verifies,
/// searching along δ ≥ 0 or δ ≤ 0.
pub fn empirical_delta(varrho: &Rational, a: &Rational, eps: &Rational, negative: bool, tol: &Rational) -> Result<Bracket> {
    let fails = |d: &Rational| -> Result<bool> {
        let d = if negative { -d.clone() } else { d.clone() };
        let b = continue_problem2(varrho, a, eps, &d)?;
        Ok(!b.verify()?.pass)
    };
    bisect_threshold(fails, &int(0), &(varrho * rat(99, 100)), tol)
}

/// A candidate family parametrised by ε, for threshold searches.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Ma { varrho: Rational, a: Rational },
    M1m2,
    P4,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ma { .. } => "ma",
            Family::M1m2 => "m1m2",
            Family::P4 => "p4",
        }
    }

    /// The family's candidates at ε. For m1m2 this is δ = 0 without the Δ_ε check.
    pub fn bundle(&self, eps: &Rational) -> Result<CatalogBundle> {
        match self {
            Family::Ma { varrho, a } => make_ma(varrho, a, eps),
            Family::M1m2 => m1_m2_bundle(eps, &std::array::from_fn(|_| Rational::zero())),
            Family::P4 => make_p4(eps),
        }
    }

    /// (pass, smallest margin) of verify at ε.
    pub fn evaluate(&self, eps: &Rational) -> Result<(bool, Ext)> {
        let r = self.bundle(eps)?.verify()?;
        Ok((r.pass, r.min_margin()))
    }

    /// Fails at the lower end, passes at the upper end.
    pub fn default_bracket(&self) -> (Rational, Rational) {
        match self {
            Family::Ma { .. } => (rat(3, 10), rat(49, 100)),
            Family::M1m2 => (rat(7, 20), rat(49, 100)),
            Family::P4 => (rat(2, 5), rat(49, 100)),
        }
    }

    /// The polynomial whose root in (0, ½) is the closed-form threshold
    /// (for ma only at ϱ = 1/3).
    pub fn polynomial(&self) -> Option<Polynomial> {
        match self {
            Family::Ma { varrho, a } if *varrho == rat(1, 3) => Some(threshold_poly_ma(a)),
            Family::Ma { .. } => None,
            Family::M1m2 => Some(threshold_poly_m1m2()),
            Family::P4 => Some(threshold_poly_p4()),
        }
    }

    pub fn threshold(&self, lo: &Rational, hi: &Rational, tol: &Rational) -> Result<Bracket> {
        bisect_threshold(|e| Ok(self.evaluate(e)?.0), lo, hi, tol)
    }
}

/// Candidates with everything needed to verify them.
#[derive(Clone, Debug)]
pub struct CatalogBundle {
    pub name: String,
    pub alpha: Arc<CoefficientMatrix>,
    pub candidates: Vec<ConstraintMatrix>,
    pub problem: ConditioningProblem,
    pub rho: ClusterDistribution,
    pub eps: Rational,
    pub symmetries: Vec<Symmetry>,
    /// Non-identity elements of the symmetry group generating the orbit set.
    pub group: Vec<Symmetry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapParamsJson {
    pub rho: Vec<String>,
    pub eps: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleJson {
    pub name: String,
    pub alpha: CoefficientMatrixJson,
    pub candidates: Vec<BoundsJson>,
    pub problem: serde_json::Value,
    pub map: MapParamsJson,
    #[serde(default)]
    pub symmetries: Vec<SymmetryJson>,
    #[serde(default)]
    pub group: Vec<SymmetryJson>,
}

impl CatalogBundle {
    pub fn map(&self) -> Result<PiecewiseAffineMap> {
        build_g_map(&self.rho, &self.eps, &self.alpha)
    }

    pub fn verify(&self) -> Result<VerificationReport> {
        self.verify_against(&self.problem)
    }

    pub fn verify_against(&self, problem: &ConditioningProblem) -> Result<VerificationReport> {
        verify(problem, &self.candidates, &self.map()?, &self.symmetries)
    }

    pub fn asiup(&self) -> Result<AsiupReport> {
        check_asiup(&self.candidates, &self.group)
    }

    pub fn to_json(&self) -> BundleJson {
        BundleJson {
            name: self.name.clone(),
            alpha: self.alpha.to_json(),
            candidates: self.candidates.iter().map(|m| m.to_json()).collect(),
            problem: self.problem.to_json_value(),
            map: MapParamsJson {
                rho: self.rho.weights().iter().map(format_rational).collect(),
                eps: format_rational(&self.eps),
            },
            symmetries: self.symmetries.iter().map(|s| s.to_json()).collect(),
            group: self.group.iter().map(|s| s.to_json()).collect(),
        }
    }

    pub fn from_json(j: &BundleJson) -> Result<Self> {
        let alpha = CoefficientMatrix::from_json(&j.alpha)?;
        let candidates = j
            .candidates
            .iter()
            .map(|b| ConstraintMatrix::from_json(alpha.clone(), b))
            .collect::<Result<Vec<_>>>()?;
        let rho = ClusterDistribution::new(j.map.rho.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?)?;
        Ok(CatalogBundle {
            name: j.name.clone(),
            alpha,
            candidates,
            problem: ConditioningProblem::from_json_value(&j.problem)?,
            rho,
            eps: parse_rational(&j.map.eps)?,
            symmetries: j.symmetries.iter().map(Symmetry::from_json).collect::<Result<_>>()?,
            group: j.group.iter().map(Symmetry::from_json).collect::<Result<_>>()?,
        })
    }
}
