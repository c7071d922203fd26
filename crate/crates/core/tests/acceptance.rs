//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p iup-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use iup_core::catalog::*;
use iup_core::conditioning::{threshold_poly_m1m2, threshold_poly_p4};
use iup_core::maps::{build_g_map, ClusterDistribution};
use iup_core::orbit::{cluster, extract_problem, simulate, ExtractOptions, BOUNDARY_TOL, PLATEAU_FACTOR};
use iup_core::partition::{canonical_alpha, enumerate_atoms};
use iup_core::rational::{int, rat, to_f64, Ext, Rational};
use iup_core::symmetry::{Symmetry, TorusSymmetry};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn e<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

/// (upper, lower) per row 1, 2, 3, 1+2, 2+3, 1+2+3, in halves.
const PAPER_ATOMS: [(&str, [i64; 6], [i64; 6]); 7] = [
    ("000101", [1, 1, 1, 2, 1, 2], [0, 0, 0, 1, 0, 1]),
    ("100101", [2, 1, 1, 3, 1, 3], [1, 0, 0, 1, 0, 1]),
    ("100111", [2, 1, 1, 3, 2, 3], [1, 0, 0, 1, 1, 2]),
    ("100112", [2, 1, 1, 3, 2, 4], [1, 0, 0, 2, 1, 3]),
    ("110111", [2, 2, 1, 3, 2, 3], [1, 1, 0, 2, 1, 2]),
    ("110112", [2, 2, 1, 3, 3, 4], [1, 1, 0, 2, 1, 3]),
    ("110212", [2, 2, 1, 4, 3, 5], [1, 1, 0, 3, 1, 3]),
];

fn c1_partition() -> Outcome {
    let two: Vec<String> = enumerate_atoms(2).into_iter().map(|a| a.label).collect();
    check(two == ["000", "001", "011", "101", "111", "112"], format!("d=2 atoms {two:?}"))?;
    let three = enumerate_atoms(3);
    check(three.len() == 26, format!("d=3 gives {} atoms", three.len()))?;
    for (label, up, lo) in PAPER_ATOMS {
        let a = three.iter().find(|a| a.label == label).ok_or(format!("atom {label} missing"))?;
        for i in 0..6 {
            let want = (Ext::Fin(rat(lo[i], 2)), Ext::Fin(rat(up[i], 2)));
            let got = a.matrix.bounds(i);
            check((got.0, got.1) == (&want.0, &want.1), format!("{label} row {i}: {got:?}"))?;
        }
    }
    Ok("6 and 26 atoms; 7 atom matrices match".into())
}

fn c2_ma_threshold() -> Outcome {
    let fam = Family::Ma { varrho: rat(1, 3), a: int(2) };
    let (lo, hi) = fam.default_bracket();
    let b = fam.threshold(&lo, &hi, &rat(1, 1_000_000)).map_err(e)?;
    let t = (4.0 - 10f64.sqrt()) / 2.0;
    check(&b.hi - &b.lo <= rat(1, 1_000_000), "bracket too wide")?;
    check(to_f64(&b.lo) <= t && t <= to_f64(&b.hi), format!("{t} outside [{}, {}]", b.lo, b.hi))?;
    let pass = make_ma(&rat(1, 3), &int(2), &rat(43, 100)).and_then(|b| b.verify()).map_err(e)?.pass;
    let fail = make_ma(&rat(1, 3), &int(2), &rat(41, 100)).and_then(|b| b.verify()).map_err(e)?.pass;
    check(pass && !fail, format!("verify at 43/100 = {pass}, at 41/100 = {fail}"))?;
    Ok(format!("[{:.9}, {:.9}] contains {t:.9}", to_f64(&b.lo), to_f64(&b.hi)))
}

fn c3_a_one() -> Outcome {
    let entries = ma_entries(&rat(1, 3), &int(1), &rat(43, 100)).map_err(e)?;
    check(entries[2].0 == entries[2].1 && entries[3].0 == entries[3].1, "sum-row bounds differ at a = 1")?;
    let m = make_ma_raw(&rat(1, 3), &int(1), &rat(43, 100)).map_err(e)?;
    check(m.lower()[2] == m.upper()[2], "merged sum row is not degenerate")?;
    check(m.is_empty(), "m_1 is not empty")?;
    Ok(format!("sum rows collapse to {}", entries[2].0))
}

fn c4_m1m2() -> Outcome {
    let zero: [Rational; 5] = std::array::from_fn(|_| Rational::zero());
    let pass = m1_m2_bundle(&rat(2, 5), &zero).and_then(|b| b.verify()).map_err(e)?.pass;
    let fail = m1_m2_bundle(&rat(39, 100), &zero).and_then(|b| b.verify()).map_err(e)?.pass;
    check(pass && !fail, format!("verify at 2/5 = {pass}, at 39/100 = {fail}"))?;
    let b = Family::M1m2.threshold(&rat(39, 100), &rat(2, 5), &rat(1, 1_000_000)).map_err(e)?;
    check(&b.hi - &b.lo <= rat(1, 1_000_000), "bracket too wide")?;
    check(threshold_poly_m1m2().changes_sign(&b.lo, &b.hi), "cubic does not change sign on the bracket")?;
    Ok(format!("[{:.9}, {:.9}], cubic changes sign", to_f64(&b.lo), to_f64(&b.hi)))
}

fn c5_p4() -> Outcome {
    let good = make_p4(&rat(44, 100)).map_err(e)?;
    let pass = good.verify().map_err(e)?.pass;
    let fail = make_p4(&rat(43, 100)).and_then(|b| b.verify()).map_err(e)?.pass;
    check(pass && !fail, format!("verify at 44/100 = {pass}, at 43/100 = {fail}"))?;
    let b = Family::P4.threshold(&rat(43, 100), &rat(44, 100), &rat(1, 1_000_000)).map_err(e)?;
    let t = (5.0 - 17f64.sqrt()) / 2.0;
    check(&b.hi - &b.lo <= rat(1, 1_000_000), "bracket too wide")?;
    check(to_f64(&b.lo) <= t && t <= to_f64(&b.hi), format!("{t} outside [{}, {}]", b.lo, b.hi))?;
    check(threshold_poly_p4().changes_sign(&b.lo, &b.hi), "no sign change")?;
    check(good.asiup().map_err(e)?.pass, "AsIUP check fails")?;
    let chain = p4_x3_chain(&good).map_err(e)?;
    let p = p_star(&rat(44, 100));
    check(chain.sup_orbit == int(1) - &p, format!("orbit sup x3 = {}", chain.sup_orbit))?;
    check(chain.holds(), "x3 chain fails")?;
    Ok(format!(
        "[{:.9}, {:.9}] contains {t:.9}; sup x3 = {:.5} < {:.5}",
        to_f64(&b.lo),
        to_f64(&b.hi),
        to_f64(&chain.sup_orbit),
        to_f64(&chain.inf_sigma_p)
    ))
}

fn c6_ma_asiup() -> Outcome {
    let b = make_ma(&rat(1, 3), &int(2), &rat(43, 100)).map_err(e)?;
    check(b.asiup().map_err(e)?.pass, "AsIUP check fails")?;
    let hi = b.candidates[0].bounds(0).1.finite().ok_or("unbounded x1")?.clone();
    check(hi < int(1) - &hi, "upper x1 bound not below its mirror")?;
    Ok(format!("upper x1 = {hi} < {}", int(1) - &hi))
}

fn c7_continuation() -> Outcome {
    let (v, a, eps) = (rat(1, 3), int(2), rat(43, 100));
    let c = continue_problem2(&v, &a, &eps, &Rational::zero()).map_err(e)?;
    let ma = make_ma(&v, &a, &eps).map_err(e)?.candidates[0].clone();
    let s = TorusSymmetry::named("sigma_321", 2).map_err(e)?;
    check(c.candidates[0] == ma, "m1(0) differs from m_a")?;
    check(c.candidates[1] == s.image_of(&ma).map_err(e)?, "m2(0) differs from the sigma_321 image")?;
    // a = 3/2 leaves room for δ ≠ 0
    let (a, eps) = (rat(3, 2), rat(45, 100));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let d = rat(rng.gen_range(-5000..=5000), 1_000_000);
        let c = continue_problem2(&v, &a, &eps, &d).map_err(e)?;
        check(c.verify().map_err(e)?.pass, format!("δ = {d} does not verify"))?;
        let up = |k: usize| c.candidates[k].bounds(0).1.finite().cloned().unwrap_or_default();
        check(up(0) + up(1) == int(1), format!("sum invariant fails at δ = {d}"))?;
    }
    Ok("δ = 0 pair matches; sum invariant on 20 feasible δ".into())
}

fn c8_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut empty = 0;
    for _ in 0..10_000 {
        if common::check_case(&common::random_case(&mut rng))? {
            empty += 1;
        }
    }
    Ok(format!("10000 cases agree ({empty} empty)"))
}

fn c9_extraction() -> Outcome {
    let bundle = make_ma(&rat(1, 3), &int(2), &rat(43, 100)).map_err(e)?;
    let map = build_g_map(&ClusterDistribution::uniform(3), &rat(43, 100), &canonical_alpha(2)).map_err(e)?;
    let seed: Vec<f64> = bundle.candidates[0].interior_point().ok_or("no interior point")?.iter().map(to_f64).collect();
    let orbit = simulate(&map, &seed, 4000, 1000, BOUNDARY_TOL).map_err(e)?;
    let clusters = cluster(&orbit, PLATEAU_FACTOR).map_err(e)?;
    let syms = [Symmetry::Torus(TorusSymmetry::named("sigma_321", 2).map_err(e)?)];
    let (p, _) = extract_problem(&orbit, clusters, &map, &syms, &ExtractOptions::default()).map_err(e)?;
    check(p.localisation == [vec!["001".to_string(), "011".to_string()]], format!("localisation {:?}", p.localisation))?;
    let t = |atom: &str| p.transition(0, atom).map(|t| (t.to, t.sym.clone()));
    check(t("001") == Some((0, "sigma_321".into())), format!("001 goes to {:?}", t("001")))?;
    check(t("011") == Some((0, "id".into())), format!("011 goes to {:?}", t("011")))?;
    check(bundle.verify_against(&p).map_err(e)?.pass, "catalog candidate fails the extracted problem")?;
    Ok("A = {001, 011}; 001 -> sigma_321, 011 -> id; catalog verifies".into())
}

fn c10_semantics() -> Outcome {
    let rows = common::semantics::violations(1000, 10);
    let bad: usize = rows.iter().map(|r| r.1).sum();
    check(bad == 0, format!("{bad} violations: {:?}", rows.iter().filter(|r| r.1 > 0).collect::<Vec<_>>()))?;
    Ok(format!("{} operation/case pairs, 1000 points each, 0 violations", rows.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("partition counts", c1_partition, 1),
        ("m_a threshold", c2_ma_threshold, 10),
        ("a = 1 has no solution", c3_a_one, 1),
        ("m1, m2 threshold", c4_m1m2, 30),
        ("P4 threshold and AsIUP", c5_p4, 60),
        ("AsIUP for m_a", c6_ma_asiup, 10),
        ("continuation invariants", c7_continuation, 60),
        ("kernel oracle suite", c8_oracle, 300),
        ("extraction loop", c9_extraction, 30),
        ("semantics sampling", c10_semantics, 300),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        let dt = t.elapsed();
        let out = match out {
            Ok(msg) if dt > Duration::from_secs(*limit) => Err(format!("{msg}; took {:.1} s, limit {limit} s", dt.as_secs_f64())),
            other => other,
        };
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} ({:.2} s)", i + 1, dt.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} ({:.2} s)", i + 1, dt.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
