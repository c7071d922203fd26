//! Conditioning problems, the exact verifier, the AsIUP disjointness check
//! and threshold bisection in ε.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::ConstraintMatrix;
use crate::maps::PiecewiseAffineMap;
use crate::rational::{format_rational, half, int, Ext, Rational};
use crate::symmetry::{apply_to_matrix, check_compatibility, commutes_with_optimize, Symmetry, SymmetryTransform};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub k: usize,
    pub atom: String,
    pub to: usize,
    #[serde(default = "id_name")]
    pub sym: String,
    #[serde(default)]
    pub equality: bool,
    /// The image must also lie in this atom.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub within_atom: Option<String>,
}

fn id_name() -> String {
    "id".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfSymmetry {
    pub k: usize,
    pub sym: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditioningProblem {
    pub q: usize,
    /// A_k, sorted.
    pub localisation: Vec<Vec<String>>,
    pub transitions: Vec<Transition>,
    pub self_symmetry: Vec<SelfSymmetry>,
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    q: usize,
    localisation: BTreeMap<String, Vec<String>>,
    transitions: Vec<Transition>,
    #[serde(default)]
    self_symmetry: Vec<SelfSymmetry>,
}

impl ConditioningProblem {
    pub fn new(
        localisation: Vec<Vec<String>>,
        mut transitions: Vec<Transition>,
        self_symmetry: Vec<SelfSymmetry>,
    ) -> Result<Self> {
        let q = localisation.len();
        let localisation: Vec<Vec<String>> = localisation
            .into_iter()
            .map(|mut a| {
                a.sort();
                a.dedup();
                a
            })
            .collect();
        transitions.sort_by(|a, b| (a.k, &a.atom).cmp(&(b.k, &b.atom)));
        for t in &transitions {
            if t.k >= q || t.to >= q {
                return Err(Error::InvalidProblem(format!("transition ({}, {}) refers past q = {q}", t.k, t.atom)));
            }
            if !localisation[t.k].contains(&t.atom) {
                return Err(Error::InvalidProblem(format!("transition from {} outside A_{}", t.atom, t.k)));
            }
        }
        for w in transitions.windows(2) {
            if w[0].k == w[1].k && w[0].atom == w[1].atom {
                return Err(Error::InvalidProblem(format!("duplicate transition ({}, {})", w[0].k, w[0].atom)));
            }
        }
        for (k, a) in localisation.iter().enumerate() {
            for atom in a {
                if !transitions.iter().any(|t| t.k == k && &t.atom == atom) {
                    return Err(Error::InvalidProblem(format!("no transition for ({k}, {atom})")));
                }
            }
        }
        if self_symmetry.iter().any(|s| s.k >= q) {
            return Err(Error::InvalidProblem("self-symmetry index past q".into()));
        }
        Ok(ConditioningProblem { q, localisation, transitions, self_symmetry })
    }

    pub fn transition(&self, k: usize, atom: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.k == k && t.atom == atom)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let j = ProblemJson {
            q: self.q,
            localisation: self.localisation.iter().enumerate().map(|(k, a)| (k.to_string(), a.clone())).collect(),
            transitions: self.transitions.clone(),
            self_symmetry: self.self_symmetry.clone(),
        };
        serde_json::to_value(j).expect("plain data")
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let j: ProblemJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut loc = vec![Vec::new(); j.q];
        for (k, a) in j.localisation {
            let k: usize = k.parse().map_err(|_| Error::Parse(format!("localisation key {k}")))?;
            if k >= j.q {
                return Err(Error::InvalidProblem(format!("localisation key {k} past q")));
            }
            loc[k] = a;
        }
        Self::new(loc, j.transitions, j.self_symmetry)
    }
}

fn ser_ext<S: Serializer>(e: &Ext, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&e.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub condition: String,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom: Option<String>,
    pub pass: bool,
    /// Minimal slack; negative when violated.
    #[serde(serialize_with = "ser_ext")]
    pub margin: Ext,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub optimality: Vec<Verdict>,
    pub ambient: Vec<Verdict>,
    pub localisation: Vec<Verdict>,
    pub dynamics: Vec<Verdict>,
    pub self_symmetry: Vec<Verdict>,
}

impl VerificationReport {
    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.optimality
            .iter()
            .chain(&self.ambient)
            .chain(&self.localisation)
            .chain(&self.dynamics)
            .chain(&self.self_symmetry)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts().filter(|v| !v.pass).collect()
    }

    /// Smallest margin over all finite-margin verdicts.
    pub fn min_margin(&self) -> Ext {
        self.verdicts().map(|v| v.margin.clone()).min().unwrap_or(Ext::PosInf)
    }
}

fn zero() -> Ext {
    Ext::Fin(Rational::zero())
}

fn verdict(condition: &str, k: usize, atom: Option<&str>, pass: bool, margin: Ext, detail: Option<String>) -> Verdict {
    Verdict { condition: condition.into(), k, atom: atom.map(String::from), pass, margin, detail }
}

/// Largest entrywise gap between two matrices as given (no optimization).
fn entry_gap(a: &ConstraintMatrix, b: &ConstraintMatrix) -> Ext {
    let mut worst = zero();
    for (x, y) in a.lower().iter().chain(a.upper()).zip(b.lower().iter().chain(b.upper())) {
        let g = match x.sub(y) {
            None => zero(),
            Some(Ext::Fin(r)) => Ext::Fin(r.abs()),
            Some(_) => Ext::PosInf,
        };
        worst = worst.max(g);
    }
    worst
}

fn resolve(sym: &Symmetry, m: &ConstraintMatrix) -> Result<std::result::Result<SymmetryTransform, String>> {
    match sym.on(m) {
        Ok(s) => Ok(Ok(s)),
        Err(e @ Error::BranchAmbiguous(..)) => Ok(Err(e.to_string())),
        Err(e) => Err(e),
    }
}

/// σ(m) for a symmetry resolved on P_m. `Ok(Err(_))` when no single branch exists.
pub fn symmetry_image(sym: &Symmetry, m: &ConstraintMatrix) -> Result<std::result::Result<ConstraintMatrix, String>> {
    if m.is_empty() {
        return Ok(Err("symmetry applied to an empty polytope".into()));
    }
    let s = match resolve(sym, m)? {
        Ok(s) => s,
        Err(e) => return Ok(Err(e)),
    };
    let data = check_compatibility(&s, m.alpha())?;
    Ok(Ok(apply_to_matrix(&data, m)?))
}

/// Check candidates against a problem, exactly.
pub fn verify(
    problem: &ConditioningProblem,
    candidates: &[ConstraintMatrix],
    map: &PiecewiseAffineMap,
    symmetries: &[Symmetry],
) -> Result<VerificationReport> {
    if candidates.len() != problem.q {
        return Err(Error::InvalidProblem(format!("{} candidates for q = {}", candidates.len(), problem.q)));
    }
    let alpha = map.alpha();
    for c in candidates {
        if c.alpha() != alpha && **c.alpha() != **alpha {
            return Err(Error::CoefficientMismatch);
        }
    }
    let d = map.d();
    let lookup = |name: &str| Symmetry::lookup(name, symmetries, d);
    let optimized: Vec<ConstraintMatrix> = candidates.iter().map(|c| c.optimize()).collect();
    let mut rep = VerificationReport::default();

    for (k, m) in candidates.iter().enumerate() {
        // (a) optimality
        let gap = entry_gap(m, &optimized[k]);
        rep.optimality.push(verdict("optimality", k, None, gap == zero(), gap.neg(), None));
        // (b) ambient inclusion
        let amb = m.inclusion_margin(map.ambient())?;
        let nonempty = m.nonempty_margin();
        let pass = amb >= zero() && nonempty > zero();
        let detail = (nonempty <= zero()).then(|| "candidate is empty".to_string());
        rep.ambient.push(verdict("ambient", k, None, pass, amb, detail));
        // (c) localisation
        for at in map.atoms() {
            let inter = m.intersect_raw(&at.matrix)?;
            let margin = inter.nonempty_margin();
            let wanted = problem.localisation[k].contains(&at.label);
            let (pass, margin) = if wanted { (margin > zero(), margin) } else { (margin <= zero(), margin.neg()) };
            let detail = Some(if wanted { "must meet" } else { "must miss" }.to_string());
            rep.localisation.push(verdict("localisation", k, Some(&at.label), pass, margin, detail));
        }
    }

    // (d) dynamics
    for t in &problem.transitions {
        let label = t.atom.as_str();
        let cond = if t.equality { "dynamics_equal" } else { "dynamics_include" };
        let inter = candidates[t.k].intersect(&map.atom(label)?.matrix)?;
        if inter.is_empty() {
            rep.dynamics.push(verdict(cond, t.k, Some(label), false, inter.nonempty_margin(), Some("empty atomic restriction".into())));
            continue;
        }
        let image = map.image_of_polytope(&candidates[t.k], label)?;
        let sym = lookup(&t.sym)?;
        let mut target = match symmetry_image(&sym, &optimized[t.to])? {
            Ok(m) => m,
            Err(e) => {
                rep.dynamics.push(verdict(cond, t.k, Some(label), false, Ext::NegInf, Some(e)));
                continue;
            }
        };
        if let Some(w) = &t.within_atom {
            target = target.intersect_raw(&map.atom(w)?.matrix)?;
        }
        let detail = format!("-> {} via {}", t.to, t.sym);
        if t.equality {
            // O∘σ = σ∘O when all a_i agree, so the target is already optimal
            let commutes = match sym.on(&optimized[t.to]) {
                Ok(s) => commutes_with_optimize(&check_compatibility(&s, alpha)?),
                Err(_) => false,
            };
            let target = if commutes && t.within_atom.is_none() { target } else { target.optimize() };
            let dev = entry_gap(&image.optimize(), &target);
            rep.dynamics.push(verdict(cond, t.k, Some(label), dev == zero(), dev.neg(), Some(detail)));
        } else {
            let margin = image.inclusion_margin(&target)?;
            rep.dynamics.push(verdict(cond, t.k, Some(label), margin >= zero(), margin, Some(detail)));
        }
    }

    // (e) self-symmetry
    for s in &problem.self_symmetry {
        let sym = lookup(&s.sym)?;
        match symmetry_image(&sym, &optimized[s.k])? {
            Ok(img) => {
                let dev = entry_gap(&img.optimize(), &optimized[s.k]);
                rep.self_symmetry.push(verdict("self_symmetry", s.k, None, dev == zero(), dev.neg(), Some(s.sym.clone())));
            }
            Err(e) => rep.self_symmetry.push(verdict("self_symmetry", s.k, None, false, Ext::NegInf, Some(e))),
        }
    }

    let pass = rep.verdicts().all(|v| v.pass);
    rep.pass = pass;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct AsiupReport {
    pub pass: bool,
    pub orbit_size: usize,
    /// Orbit members u, u' with u ∩ Σ(u') ≠ ∅.
    pub witness: Option<(usize, usize)>,
}

/// All distinct images g(P_k), identity first, each resolved on P_k.
pub fn orbit_set(candidates: &[ConstraintMatrix], group: &[Symmetry]) -> Result<Vec<ConstraintMatrix>> {
    let mut out: Vec<ConstraintMatrix> = Vec::new();
    for m in candidates {
        let m = m.optimize();
        if m.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        let mut images = vec![m.clone()];
        for g in group {
            match symmetry_image(g, &m)? {
                Ok(img) => images.push(img.optimize()),
                Err(e) => return Err(Error::BranchAmbiguous(g.name().to_string(), e)),
            }
        }
        for img in images {
            if !out.contains(&img) {
                out.push(img);
            }
        }
    }
    Ok(out)
}

/// U ∩ Σ(U) = ∅ for U the orbit set of the candidates.
pub fn check_asiup(candidates: &[ConstraintMatrix], group: &[Symmetry]) -> Result<AsiupReport> {
    let u = orbit_set(candidates, group)?;
    let d = u.first().map_or(0, |m| m.d());
    let sigma = SymmetryTransform::involution(d);
    let data = check_compatibility(&sigma, u[0].alpha())?;
    let flipped: Vec<ConstraintMatrix> = u.iter().map(|m| apply_to_matrix(&data, m)).collect::<Result<_>>()?;
    for (i, a) in u.iter().enumerate() {
        for (j, b) in flipped.iter().enumerate() {
            if !a.intersect_raw(b)?.is_empty() {
                return Ok(AsiupReport { pass: false, orbit_size: u.len(), witness: Some((i, j)) });
            }
        }
    }
    Ok(AsiupReport { pass: true, orbit_size: u.len(), witness: None })
}

#[derive(Clone, Debug)]
pub struct Bracket {
    /// verify fails here
    pub lo: Rational,
    /// verify passes here
    pub hi: Rational,
    pub evaluations: usize,
}

impl Bracket {
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains_f64(&self, v: f64) -> bool {
        crate::rational::to_f64(&self.lo) <= v && v <= crate::rational::to_f64(&self.hi)
    }
}

/// Bisect a fail-below / pass-above family on rational midpoints.
pub fn bisect_threshold<F>(passes: F, lo: &Rational, hi: &Rational, tol: &Rational) -> Result<Bracket>
where
    F: Fn(&Rational) -> Result<bool>,
{
    if lo >= hi || !tol.is_positive() {
        return Err(Error::ParameterOutOfRange("need lo < hi and tol > 0".into()));
    }
    let mut evaluations = 2;
    if passes(lo)? {
        return Err(Error::NotBracketing(format!("passes at lower end {}", format_rational(lo))));
    }
    if !passes(hi)? {
        return Err(Error::NotBracketing(format!("fails at upper end {}", format_rational(hi))));
    }
    let (mut l, mut h) = (lo.clone(), hi.clone());
    while &h - &l > *tol {
        let mid = (&l + &h) * half();
        evaluations += 1;
        if passes(&mid)? {
            h = mid;
        } else {
            l = mid;
        }
    }
    // spot checks on both sides of the bracket
    if &l > lo {
        let below = (lo + &l) * half();
        evaluations += 1;
        if passes(&below)? {
            return Err(Error::NonMonotone(format!("passes at {} below the bracket", format_rational(&below))));
        }
    }
    if &h < hi {
        let above = (&h + hi) * half();
        evaluations += 1;
        if !passes(&above)? {
            return Err(Error::NonMonotone(format!("fails at {} above the bracket", format_rational(&above))));
        }
    }
    Ok(Bracket { lo: l, hi: h, evaluations })
}

/// Polynomial with rational coefficients, constant term first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial(pub Vec<Rational>);

impl Polynomial {
    pub fn eval(&self, x: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// Strict sign change over [lo, hi].
    pub fn changes_sign(&self, lo: &Rational, hi: &Rational) -> bool {
        let (a, b) = (self.eval(lo), self.eval(hi));
        (a.is_negative() && b.is_positive()) || (a.is_positive() && b.is_negative())
    }
}

/// 2ε² − (3a+2)ε + a + 1; its smaller root is the ϱ = 1/3 quadrilateral threshold.
pub fn threshold_poly_ma(a: &Rational) -> Polynomial {
    Polynomial(vec![a + int(1), -(int(3) * a + int(2)), int(2)])
}

/// 4ε³ − 14ε² + 15ε − 4.
pub fn threshold_poly_m1m2() -> Polynomial {
    Polynomial(vec![int(-4), int(15), int(-14), int(4)])
}

/// ε² − 5ε + 2, whose smaller root is (5 − √17)/2.
pub fn threshold_poly_p4() -> Polynomial {
    Polynomial(vec![int(2), int(-5), int(1)])
}

/// Closed-form thresholds in floating point, for reporting.
pub fn threshold_ma_f64(a: f64) -> f64 {
    (3.0 * a + 2.0 - (9.0 * a * a + 4.0 * a - 4.0).sqrt()) / 4.0
}

pub fn threshold_p4_f64() -> f64 {
    (5.0 - 17f64.sqrt()) / 2.0
}

/// The real root of the cubic, by float bisection on (0, 1/2).
pub fn threshold_m1m2_f64() -> f64 {
    let f = |e: f64| 4.0 * e * e * e - 14.0 * e * e + 15.0 * e - 4.0;
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
