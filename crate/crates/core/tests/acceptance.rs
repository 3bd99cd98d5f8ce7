//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::time::Instant;

use common::{seeded, TOL};
use sumtree::approx::{compute_w0, discrepancy_round, rescale, solve_approx, DEFAULT_W0_CONSTANT};
use sumtree::generate::{Shape, Weights};
use sumtree::oracle::brute_force_opt;
use sumtree::*;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

/// Monotonicity and `<= lg k`, gathered from every suite.
#[derive(Default)]
struct Bounds {
    checked: usize,
    violations: Vec<String>,
}

impl Bounds {
    fn check(&mut self, what: &str, values: impl IntoIterator<Item = (usize, f64)>) {
        let mut prev = f64::NEG_INFINITY;
        for (k, h) in values {
            self.checked += 1;
            if h < prev - TOL || h > (k as f64).log2() + TOL {
                self.violations.push(format!("{what} k={k} h={h} prev={prev}"));
            }
            prev = h;
        }
    }

    fn tables(&mut self, what: &str, t: &DpTables) {
        self.check(what, (1..=t.max_k()).map(|k| (k, t.root_entropy(k).unwrap().0)));
    }

    fn approx(&mut self, what: &str, sol: &approx::ApproxSolution) {
        self.tables(what, &sol.tables);
        for r in &sol.results {
            self.checked += 1;
            if r.entropy > (r.k as f64).log2() + TOL {
                self.violations.push(format!("{what} reported k={} h={}", r.k, r.entropy));
            }
        }
    }
}

fn shape_for(i: u64) -> Shape {
    match i % 6 {
        0 => Shape::Uniform,
        1 => Shape::Bushy(3),
        2 => Shape::FixedDegree(2 + (i / 6 % 4) as usize),
        3 => Shape::FixedDegree(1),
        4 => Shape::Bushy(50),
        _ => Shape::Uniform,
    }
}

fn weights_for(i: u64) -> Weights {
    match i % 4 {
        0 => Weights::Real,
        1 => Weights::Integer(8),
        2 => Weights::Pareto(1.2),
        _ => Weights::Unit,
    }
}

fn criterion_1(bounds: &mut Bounds) -> Outcome {
    let mut pairs = 0;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for seed in 0..200u64 {
        let n = 1 + (seed % 9) as usize;
        let t = seeded(n, shape_for(seed), Weights::Integer(8), seed);
        let tables = solve_exact(&t, n).unwrap();
        bounds.tables("exact/oracle-suite", &tables);
        bounds.tables("greedy/oracle-suite", &solve_greedy(&t, n).unwrap());
        bounds.approx("approx/oracle-suite", &solve_approx(&t, n, 0.5, DEFAULT_W0_CONSTANT).unwrap());
        for k in 1..=n {
            let bf = brute_force_opt(&t, k).unwrap();
            let e = tables.root_entropy(k).unwrap().0;
            let d = (e - bf.max).abs().max((bf.restricted_max - bf.max).abs());
            worst = worst.max(d);
            if d > TOL {
                bad.push(format!("seed {seed} k={k}: exact {e} oracle {} restricted {}", bf.max, bf.restricted_max));
            }
            pairs += 1;
        }
    }
    outcome(
        bad.is_empty(),
        format!("200 trees, {pairs} (tree, k) pairs, max deviation {worst:.2e}{}", first(&bad)),
    )
}

fn gap_tree() -> CanonicalTree {
    canonical_from_records(vec![
        NodeRecord::new("v0", None, 0.0),
        NodeRecord::new("v1", Some("v0"), 0.0),
        NodeRecord::new("v2", Some("v0"), 1.0),
        NodeRecord::new("v3", Some("v0"), 0.01),
        NodeRecord::new("v4", Some("v2"), 0.5),
        NodeRecord::new("v5", Some("v2"), 0.5),
        NodeRecord::new("v6", Some("v3"), 2.01),
    ])
    .unwrap()
}

fn criterion_2(bounds: &mut Bounds) -> Outcome {
    let t = gap_tree();
    let order: Vec<&str> = t.children(0).map(|c| t.id(c)).collect();
    let other = |s: &SummaryTree| -> Vec<String> {
        let mut ids: Vec<String> = s.other_of(0).unwrap_or(&[]).iter().map(|&v| t.id(v).to_owned()).collect();
        ids.sort();
        ids
    };
    let et = solve_exact(&t, 4).unwrap();
    let gt = solve_greedy(&t, 4).unwrap();
    bounds.tables("exact/gap", &et);
    bounds.tables("greedy/gap", &gt);
    let e = reconstruct(&t, &et, 4).unwrap();
    let g = reconstruct(&t, &gt, 4).unwrap();
    let bf = brute_force_opt(&t, 4).unwrap();
    let (he, hg) = (e.entropy().0, g.entropy().0);
    let ok = order == ["v1", "v2", "v3"]
        && (he - 1.5).abs() <= 0.1
        && (hg - 1.0).abs() <= 0.1
        && other(&e) == ["v1", "v3"]
        && other(&g) == ["v1", "v2"]
        && (bf.max - he).abs() <= TOL
        && other(&bf.witness) == ["v1", "v3"];
    outcome(
        ok,
        format!(
            "children {order:?}; exact {he:.4} other {:?}; greedy {hg:.4} other {:?}; oracle {:.4}",
            other(&e),
            other(&g),
            bf.max
        ),
    )
}

fn criterion_3(bounds: &mut Bounds) -> Outcome {
    let mut bad = Vec::new();
    let mut paths = 0;
    for seed in 0..500u64 {
        let n = 1 + (seed * 7919 % 200) as usize;
        let shape = shape_for(seed);
        let t = seeded(n, shape, weights_for(seed / 6), 10_000 + seed);
        let e = solve_exact(&t, 16).unwrap();
        let g = solve_greedy(&t, 16).unwrap();
        bounds.tables("exact/dominance", &e);
        bounds.tables("greedy/dominance", &g);
        let is_path = (0..t.len()).all(|v| t.degree(v) <= 1);
        paths += is_path as usize;
        for k in 1..=e.max_k() {
            let (fe, fg) = (e.value(0, k).unwrap(), g.value(0, k).unwrap());
            if fg > fe + TOL || (is_path && (fe - fg).abs() > TOL) {
                bad.push(format!("seed {seed} n={n} k={k}: greedy {fg} exact {fe} path={is_path}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("500 trees ({paths} paths), K=16{}", first(&bad)))
}

fn criterion_4(bounds: &mut Bounds) -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut runs = 0;
    for n in [100usize, 1000] {
        for k_max in [4usize, 16] {
            for eps in [0.5, 0.1, 0.05] {
                for i in 0..6u64 {
                    let shape = [Shape::Uniform, Shape::Bushy(4), Shape::FixedDegree(3)][(i % 3) as usize];
                    let weights = if i < 3 { Weights::Real } else { Weights::Pareto(1.5) };
                    let t = seeded(n, shape, weights, 20_000 + i + n as u64);
                    let exact = solve_exact(&t, k_max).unwrap();
                    let sol = solve_approx(&t, k_max, eps, DEFAULT_W0_CONSTANT).unwrap();
                    bounds.tables("exact/approx-suite", &exact);
                    bounds.approx("approx/approx-suite", &sol);
                    runs += 1;
                    for r in &sol.results {
                        if r.summary.validate(&t, t.weights()).is_err() {
                            bad.push(format!("n={n} K={k_max} eps={eps} tree {i} k={}: invalid summary", r.k));
                        }
                        let gap = exact.root_entropy(r.k).unwrap().0 - r.entropy;
                        worst = worst.max(gap / eps);
                        if gap > eps {
                            bad.push(format!("n={n} K={k_max} eps={eps} tree {i} k={}: gap {gap}", r.k));
                        }
                    }
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{runs} runs, c={DEFAULT_W0_CONSTANT}, largest gap/eps {worst:.3}{}", first(&bad)),
    )
}

fn criterion_5() -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..1000u64 {
        let n = 1 + (seed * 104_729 % 500) as usize;
        let weights = if seed % 2 == 0 { Weights::Real } else { Weights::Pareto(1.1) };
        let t = seeded(n, shape_for(seed), weights, 30_000 + seed);
        let k = 1 + (seed % 64) as usize;
        let eps = 0.02 + (seed % 50) as f64 / 50.0;
        let w0 = compute_w0(k, eps, DEFAULT_W0_CONSTANT).unwrap();
        let r = rescale(&t, w0);
        let rt = discrepancy_round(&t, &r);
        if rt.rounded.iter().sum::<u64>() != w0 {
            bad.push(format!("seed {seed}: total {} != {w0}", rt.rounded.iter().sum::<u64>()));
        }
        for v in 0..t.len() {
            let f = r.weights[v].floor() as u64;
            if rt.rounded[v] != f && rt.rounded[v] != f + 1 {
                bad.push(format!("seed {seed} node {v}: {} from {}", rt.rounded[v], r.weights[v]));
            }
            let real: f64 = t.subtree(v).iter().map(|&u| r.weights[u]).sum();
            let d = (rt.rounded_size[v] as f64 - real).abs();
            worst = worst.max(d);
            if d > 1.0 + 1e-9 {
                bad.push(format!("seed {seed} node {v}: discrepancy {d}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("1000 trees, max subtree discrepancy {worst:.4}{}", first(&bad)))
}

fn criterion_6(bounds: &mut Bounds) -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for n in [1_000usize, 10_000, 100_000] {
        for k_max in [8usize, 64] {
            let shapes = [Shape::Uniform, Shape::Bushy(8), Shape::FixedDegree(2), Shape::FixedDegree(100), Shape::Bushy(n)];
            for (i, shape) in shapes.into_iter().enumerate() {
                let t = seeded(n, shape, weights_for(i as u64), 40_000 + i as u64);
                for (name, tables) in [("exact", solve_exact(&t, k_max).unwrap()), ("greedy", solve_greedy(&t, k_max).unwrap())] {
                    bounds.tables(name, &tables);
                    let bound = 2 * k_max as u64 * n as u64;
                    let pc = tables.cost().pair_cost;
                    worst = worst.max(pc as f64 / bound as f64);
                    runs += 1;
                    if pc > bound {
                        bad.push(format!("{name} n={n} K={k_max} {shape:?}: {pc} > {bound}"));
                    }
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{runs} runs, max pair_cost/(2Kn) {worst:.3}{}", first(&bad)))
}

/// Median wall time of `solve_exact` per tree. Rounds are interleaved across
/// trees so drift in machine load hits all of them alike, and each round
/// solves a fresh copy so one unlucky memory placement cannot bias a tree.
fn median_times(trees: &[CanonicalTree], k_max: usize, rounds: usize) -> Vec<f64> {
    let mut samples = vec![Vec::with_capacity(rounds); trees.len()];
    for _ in 0..rounds {
        for (i, t) in trees.iter().enumerate() {
            let copy = t.clone();
            let start = Instant::now();
            let tables = solve_exact(&copy, k_max).unwrap();
            samples[i].push(start.elapsed().as_secs_f64());
            drop(std::hint::black_box(tables));
        }
    }
    samples
        .into_iter()
        .map(|mut s| {
            s.sort_by(f64::total_cmp);
            s[s.len() / 2]
        })
        .collect()
}

fn criterion_7(bounds: &mut Bounds) -> Outcome {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    let ns = [125_000usize, 250_000, 500_000, 1_000_000];
    for seed in [1u64, 2] {
        let trees: Vec<CanonicalTree> =
            ns.iter().map(|&n| seeded(n, Shape::Uniform, Weights::Real, 50_000 + seed)).collect();
        let times = median_times(&trees, 16, 9);
        let ratios: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
        for (i, r) in ratios.iter().enumerate() {
            if !(1.5..=3.0).contains(r) {
                bad.push(format!("seed {seed} n {}->{}: ratio {r:.2}", ns[i], ns[i + 1]));
            }
        }
        notes.push(format!("{:?}", ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()));
    }

    let t = seeded(250_000, Shape::Uniform, Weights::Real, 50_100);
    let scaled: Vec<f64> = t.weights().iter().map(|w| w * 1e6).collect();
    let u = t.with_weights(&scaled).unwrap();
    let (a, b) = (solve_exact(&t, 16).unwrap(), solve_exact(&u, 16).unwrap());
    bounds.tables("exact/scaling", &a);
    bounds.tables("exact/scaling-1e6", &b);
    let max_diff = (1..=a.max_k())
        .map(|k| (a.root_entropy(k).unwrap().0 - b.root_entropy(k).unwrap().0).abs())
        .fold(0.0, f64::max);
    if max_diff > TOL {
        bad.push(format!("x1e6 weights: entropy differs by {max_diff}"));
    }
    let times = median_times(&[t, u], 16, 15);
    let rel = times[1] / times[0];
    if !(0.8..=1.2).contains(&rel) {
        bad.push(format!("x1e6 weights: time ratio {rel:.3}"));
    }
    outcome(
        bad.is_empty(),
        format!(
            "doubling ratios {}; x1e6 weights max entropy diff {max_diff:.1e}, time ratio {rel:.3}{}",
            notes.join(" "),
            first(&bad)
        ),
    )
}

fn first(bad: &[String]) -> String {
    match bad.first() {
        None => String::new(),
        Some(b) => format!("; {} failures, first: {b}", bad.len()),
    }
}

fn main() {
    let mut bounds = Bounds::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        println!(
            "[{}] {name} ({:.1}s): {}",
            if o.ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((name, o));
    };
    run("1 oracle equivalence", &mut || criterion_1(&mut bounds));
    run("2 greedy gap instance", &mut || criterion_2(&mut bounds));
    run("3 greedy dominance", &mut || criterion_3(&mut bounds));
    run("4 approximation guarantee", &mut || criterion_4(&mut bounds));
    run("5 rounding invariants", &mut criterion_5);
    run("6 cost bound", &mut || criterion_6(&mut bounds));
    run("7 scaling", &mut || criterion_7(&mut bounds));
    let b = std::mem::take(&mut bounds);
    run("8 monotone and bounded", &mut || {
        outcome(
            b.violations.is_empty(),
            format!("{} values across all suites and solvers{}", b.checked, first(&b.violations)),
        )
    });
    let failed = results.iter().filter(|(_, o)| !o.ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
