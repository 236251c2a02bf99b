//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//! Reference values come from brute-force oracles written here, not from
//! the library under test.

use std::collections::{BTreeMap, HashSet};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use sumprod_core::checks;
use sumprod_core::corpus::{corpus, default_corpus, CorpusEntry};
use sumprod_core::decompose::{self, CoverCertificate, PartitionCertificate, UnionMode};
use sumprod_core::energy::{self, RepHistogram};
use sumprod_core::incidence::{self, check_config};
use sumprod_core::sets::{combine, int, rat};
use sumprod_core::stats;
use sumprod_core::{FiniteRealSet, Rational, SetOp};
use sumprod_harness::sweep::{sweep, Family, SweepConfig};
use sumprod_harness::ExponentTable;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_set(rng: &mut ChaCha8Rng, max_len: usize, range: i64, allow_zero: bool) -> FiniteRealSet {
    let len = rng.gen_range(1..=max_len);
    let mut values = Vec::new();
    while values.len() < len {
        let x = rng.gen_range(-range..=range);
        if allow_zero || x != 0 {
            values.push(int(x));
        }
    }
    FiniteRealSet::new(values)
}

fn random_rational_set(rng: &mut ChaCha8Rng, max_len: usize) -> FiniteRealSet {
    let len = rng.gen_range(1..=max_len);
    FiniteRealSet::new((0..len).map(|_| {
        let mut p = 0;
        while p == 0 {
            p = rng.gen_range(-60..=60);
        }
        rat(p, rng.gen_range(1..=5))
    }))
}

fn naive_hist(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp) -> BTreeMap<Rational, u64> {
    let mut h = BTreeMap::new();
    for x in a {
        for y in b {
            *h.entry(op.apply(x, y)).or_insert(0) += 1;
        }
    }
    h
}

fn naive_moment(a: &FiniteRealSet, b: &FiniteRealSet, op: SetOp, m: u32) -> BigUint {
    naive_hist(a, b, op).values().map(|c| BigUint::from(*c).pow(m)).sum()
}

fn corpus_nonzero() -> Vec<CorpusEntry> {
    default_corpus().expect("corpus").into_iter().filter(|e| !e.set.contains_zero()).collect()
}

// 1
fn mass_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for i in 0..200 {
        let a = random_rational_set(&mut rng, 64);
        let b = random_rational_set(&mut rng, 64);
        let h = RepHistogram::build(&a, &b, SetOp::Diff).map_err(|e| e.to_string())?;
        let mass: u64 = h.entries().iter().map(|(_, c)| c).sum();
        ensure(mass == (a.len() * b.len()) as u64, || format!("pair {i}: mass {mass} ≠ {}·{}", a.len(), b.len()))?;
    }
    Ok("200 pairs, zero failures".into())
}

// 2
fn energy_matches_quadruples() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for i in 0..50 {
        let a = random_set(&mut rng, 24, 40, true);
        let v: Vec<&Rational> = a.iter().collect();
        let mut quads = 0u64;
        for x in &v {
            for y in &v {
                for z in &v {
                    for w in &v {
                        if *x - *y == *z - *w {
                            quads += 1;
                        }
                    }
                }
            }
        }
        let e = energy::energy(&a, &a, SetOp::Diff, 2).map_err(|e| e.to_string())?.value;
        ensure(e == BigUint::from(quads), || format!("set {i}: energy {e} ≠ {quads} quadruples"))?;
    }
    Ok("50 sets, zero failures".into())
}

// 3
fn hand_values() -> Outcome {
    let s3 = FiniteRealSet::from_integers([1, 2, 3]);
    let g4 = FiniteRealSet::from_integers([1, 2, 4, 8]);
    let cases = [
        (&s3, SetOp::Diff, 2, 19u64),
        (&s3, SetOp::Diff, 3, 45),
        (&s3, SetOp::Diff, 4, 115),
        (&g4, SetOp::Quot, 2, 44),
        (&g4, SetOp::Quot, 3, 136),
    ];
    for (a, op, m, expected) in cases {
        let got = energy::energy(a, a, op, m).map_err(|e| e.to_string())?.value;
        let oracle = naive_moment(a, a, op, m);
        ensure(got == BigUint::from(expected) && oracle == got, || {
            format!("{a} {} moment {m}: library {got}, oracle {oracle}, expected {expected}", op.name())
        })?;
    }
    Ok("E⁺ = 19, E₃⁺ = 45, E₄⁺ = 115, E× = 44, E₃× = 136".into())
}

// 4
fn cauchy_schwarz_chain() -> Outcome {
    let entries = default_corpus().map_err(|e| e.to_string())?;
    let mut n_checks = 0;
    for (i, e) in entries.iter().enumerate() {
        for c in checks::energy_chain(&e.set).map_err(|x| x.to_string())? {
            ensure(c.holds, || format!("{}: {} ({} vs {})", e.label, c.name, c.lhs, c.rhs))?;
            n_checks += 1;
        }
        let partner = &entries[(i + 1) % entries.len()].set;
        if !e.set.contains_zero() && !partner.contains_zero() {
            let c = checks::cross_energy_bound(&e.set, partner).map_err(|x| x.to_string())?;
            ensure(c.holds, || format!("{}: {} ({} vs {})", e.label, c.name, c.lhs, c.rhs))?;
            n_checks += 1;
        }
    }
    Ok(format!("{} corpus sets, {n_checks} inequalities", entries.len()))
}

// 5
fn union_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for i in 0..100 {
        let a = random_set(&mut rng, 64, 200, false);
        let k = rng.gen_range(1..=4usize);
        let mut parts = vec![Vec::new(); k];
        for x in &a {
            parts[rng.gen_range(0..k)].push(x.clone());
        }
        let parts: Vec<FiniteRealSet> = parts.into_iter().filter(|p| !p.is_empty()).map(FiniteRealSet::new).collect();
        let b = random_set(&mut rng, 16, 50, false);
        for (mode, fixed) in
            [(UnionMode::L3Diff, Some(&b)), (UnionMode::L3Quot, Some(&b)), (UnionMode::L4MultEnergy, None)]
        {
            let v = decompose::union_triangle_check(&parts, fixed, mode).map_err(|e| e.to_string())?;
            ensure(v.holds, || format!("partition {i} {mode:?}: {} is {}", v.union_value, v.comparison))?;
        }
    }
    Ok("100 partitions × 3 forms, zero failures".into())
}

// 6
fn chebyshev_tails() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut taus = 0;
    for i in 0..50 {
        let a = random_set(&mut rng, 48, 60, true);
        let b = random_set(&mut rng, 48, 60, true);
        let hist = naive_hist(&a, &b, SetOp::Diff);
        let max_r = *hist.values().max().unwrap();
        let e3: BigUint = hist.values().map(|c| BigUint::from(*c).pow(3)).sum();
        let tails = stats::chebyshev_all(&a, &b, SetOp::Diff).map_err(|e| e.to_string())?;
        ensure(tails.len() as u64 == max_r, || format!("pair {i}: {} τ values, max r = {max_r}", tails.len()))?;
        for t in &tails {
            let count = hist.values().filter(|c| **c >= t.tau).count() as u64;
            let oracle = BigUint::from(count) * BigUint::from(t.tau).pow(3) <= e3;
            ensure(t.holds && oracle && t.tail_count as u64 == count, || format!("pair {i}, τ = {}", t.tau))?;
            taus += 1;
        }
    }
    Ok(format!("50 pairs, {taus} thresholds, zero failures"))
}

// 7
fn szemeredi_trotter() -> Outcome {
    for seed in 0..200u64 {
        let cfg = incidence::random_config(seed, 200, 200);
        ensure(cfg.points.len() <= 200 && cfg.lines.len() <= 200, || format!("config {seed} too large"))?;
        let c = check_config(&cfg, None).map_err(|e| e.to_string())?;
        let naive = cfg
            .points
            .points()
            .iter()
            .map(|p| cfg.lines.lines().iter().filter(|l| l.contains(p)).count() as u64)
            .sum::<u64>();
        ensure(c.count == naive, || format!("random config {seed}: count {} ≠ naive {naive}", c.count))?;
        ensure(c.bound_holds, || format!("random config {seed}: {} incidences exceed {}", c.count, c.bound.approx))?;
    }
    let small = corpus(&[4, 8, 16, 32]).map_err(|e| e.to_string())?;
    for e in &small {
        let cfg = incidence::elekes_config(&e.set).map_err(|x| x.to_string())?;
        let c = check_config(&cfg, None).map_err(|x| x.to_string())?;
        ensure(c.bound_holds, || format!("{}: {} incidences exceed {}", e.label, c.count, c.bound.approx))?;
        let floor = e.set.len() as u64 * cfg.lines.len() as u64;
        ensure(c.count >= floor, || format!("{}: {} < floor {floor}", e.label, c.count))?;
    }
    Ok(format!("200 random configurations and {} constructions", small.len()))
}

/// σ by exhaustive search over planes through the origin spanned by pairs of
/// grid points, plus normals `(b + c, −a, −a)` through positive grid points.
fn naive_sigma(a: &FiniteRealSet, b: &FiniteRealSet, c: &FiniteRealSet) -> u64 {
    let grid: Vec<[Rational; 3]> = a
        .iter()
        .flat_map(|x| b.iter().flat_map(move |y| c.iter().map(move |z| [x.clone(), y.clone(), z.clone()])))
        .collect();
    let count = |n: &[Rational; 3]| -> u64 {
        if n.iter().any(|v| v.is_zero()) {
            return 0;
        }
        grid.iter().filter(|p| (&n[0] * &p[0] + &n[1] * &p[1] + &n[2] * &p[2]).is_zero()).count() as u64
    };
    let mut best = 0;
    for (i, u) in grid.iter().enumerate() {
        if u.iter().all(|v| v.is_positive()) {
            best = best.max(count(&[&u[1] + &u[2], -u[0].clone(), -u[0].clone()]));
        }
        for v in &grid[i + 1..] {
            let n = [&u[1] * &v[2] - &u[2] * &v[1], &u[2] * &v[0] - &u[0] * &v[2], &u[0] * &v[1] - &u[1] * &v[0]];
            best = best.max(count(&n));
        }
    }
    best
}

// 8
fn sigma_values() -> Outcome {
    for (set, expected) in [(FiniteRealSet::from_integers([1, 2]), 2u64), (FiniteRealSet::from_integers([1, 2, 3]), 5)]
    {
        let w = energy::sigma_sup(&set, &set, &set, None).map_err(|e| e.to_string())?;
        let oracle = naive_sigma(&set, &set, &set);
        ensure(w.count == expected && oracle == expected, || {
            format!("σ({set}³): library {}, oracle {oracle}", w.count)
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for i in 0..100 {
        let a = random_set(&mut rng, 10, 12, true);
        let b = random_set(&mut rng, 10, 12, true);
        let c = random_set(&mut rng, 10, 12, true);
        let nonzero = |rng: &mut ChaCha8Rng| {
            let mut p = 0;
            while p == 0 {
                p = rng.gen_range(-6..=6);
            }
            rat(p, rng.gen_range(1..=3))
        };
        let (s2, s3) = (nonzero(&mut rng), nonzero(&mut rng));
        let r = stats::sigma_bound_check(&a, &b, &c, &s2, &s3, None).map_err(|e| e.to_string())?;
        ensure(r.holds && r.holder_step && r.extension_step, || format!("pair {i}: (1, {s2}, {s3})"))?;
    }
    Ok("σ({1,2}³) = 2, σ({1,2,3}³) = 5; 100 coefficient pairs pass".into())
}

// 9
fn decomposition_postconditions() -> Outcome {
    let entries = corpus_nonzero();
    let mut certs = 0;
    for e in &entries {
        let a = &e.set;
        let n = a.len();
        let half = n.div_ceil(2);
        for fourth in [false, true] {
            let c = if fourth { decompose::fourth_moment_cover(a) } else { decompose::sum_product_cover(a) }
                .map_err(|x| format!("{}: {x}", e.label))?;
            ensure(c.x.union(&c.y) == *a && c.x.len() >= half && c.y.len() >= half, || {
                format!("{}: cover |X| = {}, |Y| = {}", e.label, c.x.len(), c.y.len())
            })?;
            let back: CoverCertificate =
                serde_json::from_value(serde_json::to_value(&c).unwrap()).map_err(|x| x.to_string())?;
            back.revalidate().map_err(|x| format!("{}: {x}", e.label))?;
            certs += 1;
        }
        let p = decompose::additive_multiplicative_partition(a).map_err(|x| format!("{}: {x}", e.label))?;
        let bound = (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize + 1;
        ensure(p.b.is_disjoint(&p.c) && p.b.union(&p.c) == *a && p.outer_iterations <= bound, || {
            format!("{}: partition with {} iterations (bound {bound})", e.label, p.outer_iterations)
        })?;
        let back: PartitionCertificate =
            serde_json::from_value(serde_json::to_value(&p).unwrap()).map_err(|x| x.to_string())?;
        back.revalidate().map_err(|x| format!("{}: {x}", e.label))?;
        certs += 1;
    }
    Ok(format!("{} corpus sets, {certs} certificates revalidated", entries.len()))
}

// 10
fn slice_product_inclusion() -> Outcome {
    let entries: Vec<CorpusEntry> = corpus_nonzero().into_iter().filter(|e| e.set.len() <= 64).collect();
    let mut lambdas = 0;
    for e in &entries {
        let aa = combine(&e.set, &e.set, SetOp::Prod).map_err(|x| x.to_string())?;
        let quotients = combine(&e.set, &e.set, SetOp::Quot).map_err(|x| x.to_string())?;
        for l in &quotients {
            let k = energy::katz_koester_with_products(&e.set, &aa, l).map_err(|x| x.to_string())?;
            ensure(k.holds(), || format!("{}: λ = {l}", e.label))?;
            lambdas += 1;
        }
    }
    Ok(format!("{} sets, {lambdas} quotients", entries.len()))
}

// 11
fn moment_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    for i in 0..100 {
        let a = random_set(&mut rng, 32, 80, true);
        let b = random_set(&mut rng, 32, 80, true);
        let cs = checks::moment_monotonicity(&a, &b, SetOp::Diff).map_err(|e| e.to_string())?;
        let nb = BigUint::from(b.len());
        let (e2, e3, e4) = (
            naive_moment(&a, &b, SetOp::Diff, 2),
            naive_moment(&a, &b, SetOp::Diff, 3),
            naive_moment(&a, &b, SetOp::Diff, 4),
        );
        let oracle = e4 <= &nb * &e3 && e3 <= &nb * &e2;
        ensure(cs.iter().all(|c| c.holds) && oracle, || format!("pair {i}"))?;
    }
    Ok("100 pairs, zero failures".into())
}

// 12
fn soft_ratio_sanity() -> Outcome {
    let sizes = vec![8, 16, 32, 64, 128, 256];
    let mut cfg = SweepConfig::new(vec![Family::Ap, Family::Gp, Family::BalogWooley, Family::RandomSubset], sizes, 0);
    cfg.decompose = false;
    let report = sweep(&cfg, &ExponentTable::standard()).map_err(|e| e.to_string())?;
    let points = report.quantities["points"].as_object().ok_or("no points")?;
    let mut emitted = Vec::new();
    for s in report.soft_checks.iter().filter(|s| s.name == "sum_product_four_thirds") {
        let label = s.point.clone().unwrap_or_default();
        let q = &points[&label];
        let n = q["n"].as_u64().unwrap();
        let total = q["sumset"].as_u64().unwrap() + q["product_set"].as_u64().unwrap();
        let family = q["family"].as_str().unwrap();
        if family == "ap" || family == "gp" {
            // oracle sizes: AP has |A+A| = 2n − 1 and |AA| by enumeration;
            // GP has distinct binary sums n(n+1)/2 and |AA| = 2n − 1
            let oracle = if family == "ap" {
                let prods: HashSet<u64> = (1..=n).flat_map(|x| (1..=n).map(move |y| x * y)).collect();
                2 * n - 1 + prods.len() as u64
            } else {
                n * (n + 1) / 2 + 2 * n - 1
            };
            ensure(total == oracle, || format!("{label}: |A+A| + |AA| = {total}, oracle {oracle}"))?;
            let exact = BigUint::from(total).pow(3) >= BigUint::from(n).pow(4);
            let ratio: f64 = s.ratio.parse().map_err(|_| format!("{label}: ratio {}", s.ratio))?;
            ensure(exact && ratio >= 1.0, || format!("{label}: ratio {}", s.ratio))?;
        } else {
            emitted.push(format!("{label}={}", &s.ratio[..s.ratio.len().min(6)]));
        }
    }
    Ok(format!("AP/GP ratios ≥ 1 for n = 8..256; reported only: {}", emitted.join(" ")))
}

// 13
fn determinism() -> Outcome {
    let run = |workers: &str| -> Result<Value, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_sumprod"))
            .args(["sweep", "--family", "ap,gp,bw,random", "--sizes", "8,16,32", "--seed", "42", "--workers", workers])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("sweep exited with {}", out.status))?;
        let mut v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        v["meta"].as_object_mut().ok_or("no meta")?.remove("timings");
        serde_json::to_string_pretty(&v).map_err(|e| e.to_string()).map(Value::String)
    };
    let first = run("1")?;
    let second = run("1")?;
    let third = run("3")?;
    ensure(first == second, || "two identical runs differ".into())?;
    ensure(first == third, || "worker count changes the report".into())?;
    Ok(format!("{} bytes identical across runs and worker counts", first.as_str().map_or(0, str::len)))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "mass identity", Some(Duration::from_secs(5)), mass_identity),
        (2, "energy equals quadruple count", None, energy_matches_quadruples),
        (3, "hand-verified energies", None, hand_values),
        (4, "Cauchy–Schwarz chain on corpus", Some(Duration::from_secs(30)), cauchy_schwarz_chain),
        (5, "union inequalities", None, union_inequalities),
        (6, "Chebyshev tails", None, chebyshev_tails),
        (7, "Szemerédi–Trotter with constant 4", Some(Duration::from_secs(60)), szemeredi_trotter),
        (8, "σ values and Hölder chain", None, sigma_values),
        (9, "decomposition postconditions", Some(Duration::from_secs(600)), decomposition_postconditions),
        (10, "slice-product inclusion", None, slice_product_inclusion),
        (11, "witness-level moment monotonicity", None, moment_monotonicity),
        (12, "sum-product soft ratio sanity", None, soft_ratio_sanity),
        (13, "sweep determinism", None, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, title, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| s == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let over = limit.is_some_and(|l| elapsed > l);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; exceeded {:?}", limit.unwrap())),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("[{status}] criterion {id:>2} {title}: {detail} ({:.2} s)", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
