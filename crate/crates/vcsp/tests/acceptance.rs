//! Acceptance suite: eight end-to-end criteria, one test (and one pass/fail
//! line) each. All comparisons are exact rational equalities.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use vcsp::cores::{compute_core, image_structure, is_core, reduction_step};
use vcsp::improvement::{equivalent, validate_ifh, IfhCheck, IfhDistribution};
use vcsp::lp::{vertex_enumeration_optimum, LinProgram, LpOutcome, Rel};
use vcsp::mappings::{cost, opt_bruteforce, valued_isomorphic, Mapping};
use vcsp::search::search_solve;
use vcsp::sherali::{gap_instance_overlap, gap_instance_treewidth, opt_k};
use vcsp::structures::{
    gen_crisp_clique, gen_diag_grid, gen_grid, gen_path, gen_random, gen_two_triangles,
    grid_path_ifh, grid_to_path_diagonal, psi, Signature, ValuedStructure,
};
use vcsp::width::{gaifman, treewidth, twms, twms_oracle};
use vcsp::{ExtRat, Limits};

fn limits() -> Limits {
    Limits::default()
}

fn q(n: u64, d: u64) -> ExtRat {
    ExtRat::from_parts(n, d).unwrap()
}

fn finish(criterion: u32, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "criterion {criterion} exceeded its {budget:?} budget: {elapsed:?}"
    );
    println!("criterion {criterion}: PASS ({elapsed:?})");
}

/// The two-element target with expensive loops, cheap cross arcs and uneven
/// unary weights; the running example for search.
fn b2_structure() -> ValuedStructure {
    let sig = Signature::new(vec![("f", 2), ("mu", 1)]).unwrap();
    let mut b = ValuedStructure::new(sig, vec!["x".into(), "y".into()]).unwrap();
    b.set_value(0, vec![0, 0], ExtRat::from_int(5));
    b.set_value(0, vec![1, 1], ExtRat::from_int(5));
    b.set_value(1, vec![0], ExtRat::from_int(1));
    b.set_value(1, vec![1], ExtRat::from_int(2));
    b
}

#[test]
fn criterion_1_grid_path_improvements_validate() {
    let start = Instant::now();
    let grid = gen_grid(3).unwrap();
    let path = gen_path(3).unwrap();

    let diagonal = IfhDistribution {
        entries: vec![(grid_to_path_diagonal(3), ExtRat::one())],
    };
    assert_eq!(
        validate_ifh(&grid, &path, &diagonal).unwrap(),
        IfhCheck::Valid
    );

    let six = IfhDistribution {
        entries: grid_path_ifh(3).unwrap().entries,
    };
    assert_eq!(validate_ifh(&path, &grid, &six).unwrap(), IfhCheck::Valid);
    let mut weights: Vec<ExtRat> = six.entries.iter().map(|(_, w)| w.clone()).collect();
    weights.sort();
    let mut expect = vec![q(1, 3), q(1, 12), q(1, 12), q(1, 3), q(1, 12), q(1, 12)];
    expect.sort();
    assert_eq!(weights, expect);

    finish(1, start, Duration::from_secs(1));
}

#[test]
fn criterion_2_path_distribution_claims() {
    let start = Instant::now();
    let dist3 = grid_path_ifh(3).unwrap();
    let weights: Vec<ExtRat> = dist3.entries.iter().map(|(_, w)| w.clone()).collect();
    assert_eq!(
        weights,
        vec![q(1, 3), q(1, 12), q(1, 12), q(1, 12), q(1, 12), q(1, 3)]
    );

    for n in 2..=4usize {
        // Outgoing arc weights sum to one at every non-sink vertex.
        for i in 1..=n {
            for j in 1..=n {
                if i == n && j == n {
                    continue;
                }
                let mut total = BigRational::zero();
                if j < n {
                    total += psi(n, (i, j), (i, j + 1)).unwrap();
                }
                if i < n {
                    total += psi(n, (i, j), (i + 1, j)).unwrap();
                }
                assert!(total.is_one(), "out-sum at ({i},{j}), n={n}");
            }
        }
        // Incoming arc weights on diagonal k sum to (k-1)/k, resp.
        // (2n-k+1)/(2n-k) past the main diagonal.
        for i in 1..=n {
            for j in 1..=n {
                let k = i + j - 1;
                if k == 1 {
                    continue;
                }
                let mut total = BigRational::zero();
                if j > 1 {
                    total += psi(n, (i, j - 1), (i, j)).unwrap();
                }
                if i > 1 {
                    total += psi(n, (i - 1, j), (i, j)).unwrap();
                }
                let expect = if k <= n {
                    BigRational::new(BigInt::from(k as i64 - 1), BigInt::from(k as i64))
                } else {
                    BigRational::new(
                        BigInt::from((2 * n - k + 1) as i64),
                        BigInt::from((2 * n - k) as i64),
                    )
                };
                assert_eq!(total, expect, "in-sum at ({i},{j}), n={n}");
            }
        }
        // The distribution is a valid improvement witness path -> grid.
        let dist = IfhDistribution {
            entries: grid_path_ifh(n).unwrap().entries,
        };
        assert_eq!(
            validate_ifh(&gen_path(n).unwrap(), &gen_grid(n).unwrap(), &dist).unwrap(),
            IfhCheck::Valid,
            "n={n}"
        );
    }

    finish(2, start, Duration::from_secs(5));
}

#[test]
fn criterion_3_core_pipeline() {
    let start = Instant::now();
    let lim = limits();
    for n in 2..=3usize {
        let core = compute_core(&gen_grid(n).unwrap(), &lim).unwrap().core;
        assert!(
            valued_isomorphic(&core, &gen_path(n).unwrap()).is_some(),
            "core of grid {n} is the path"
        );
    }
    for n in 1..=4usize {
        assert!(is_core(&gen_path(n).unwrap(), &lim).unwrap(), "path {n}");
    }
    assert!(is_core(&gen_diag_grid(3, 10).unwrap(), &lim).unwrap());
    finish(3, start, Duration::from_secs(60));
}

#[test]
fn criterion_4_level_one_tight_on_path_and_grid() {
    let start = Instant::now();
    let lim = limits();
    let sources = [gen_path(3).unwrap(), gen_grid(3).unwrap()];
    for a in &sources {
        for seed in 0..25u64 {
            let size = 1 + (seed % 2) as usize;
            let b = gen_random(&a.signature, size, seed).unwrap();
            let (relaxed, _) = opt_k(a, &b, 1, &lim).unwrap();
            let (exact, _) = opt_bruteforce(a, &b, lim.max_maps).unwrap();
            assert_eq!(relaxed, exact, "seed {seed}, |B| = {size}");
        }
    }
    finish(4, start, Duration::from_secs(120));
}

#[test]
fn criterion_5_gap_instances() {
    let start = Instant::now();
    let lim = limits();

    let k3 = gen_crisp_clique(3).unwrap();
    let (b, _) = gap_instance_treewidth(&k3, 1, &lim).unwrap();
    assert_eq!(b.size(), 6);
    let (v1, _) = opt_k(&k3, &b, 1, &lim).unwrap();
    assert_eq!(v1, ExtRat::zero());
    let (exact, _) = opt_bruteforce(&k3, &b, lim.max_maps).unwrap();
    assert_eq!(exact, ExtRat::infinity());
    // At level 3 the same instance is tight: both sides infinite.
    let (v3, _) = opt_k(&k3, &b, 3, &lim).unwrap();
    assert_eq!(v3, ExtRat::infinity());

    let tt = gen_two_triangles().unwrap();
    let (b, _) = gap_instance_overlap(&tt, 1, &lim).unwrap();
    assert_eq!(b.size(), 16);
    let (v1, _) = opt_k(&tt, &b, 1, &lim).unwrap();
    assert_eq!(v1, ExtRat::zero());
    let (exact, _) = opt_bruteforce(&tt, &b, lim.max_maps).unwrap();
    assert_eq!(exact, ExtRat::infinity());

    finish(5, start, Duration::from_secs(60));
}

#[test]
fn criterion_6_grid_and_path_relax_identically() {
    let start = Instant::now();
    let lim = limits();
    let grid = gen_grid(3).unwrap();
    let path = gen_path(3).unwrap();
    for seed in 100..110u64 {
        let size = 1 + (seed % 2) as usize;
        let c = gen_random(&grid.signature, size, seed).unwrap();
        let (vg, _) = opt_k(&grid, &c, 1, &lim).unwrap();
        let (vp, _) = opt_k(&path, &c, 1, &lim).unwrap();
        assert_eq!(vg, vp, "seed {seed}");
    }
    finish(6, start, Duration::from_secs(60));
}

#[test]
fn criterion_7_search_recovers_optima() {
    let start = Instant::now();
    let lim = limits();
    let sources = [
        gen_path(2).unwrap(),
        gen_path(3).unwrap(),
        gen_path(4).unwrap(),
        gen_grid(2).unwrap(),
        gen_grid(3).unwrap(),
    ];
    let mut pairs = 0;
    for (i, a) in sources.iter().enumerate() {
        for s in 0..6u64 {
            let seed = 10 * i as u64 + s;
            let size = 1 + (seed % 3) as usize;
            let b = gen_random(&a.signature, size, seed).unwrap();
            let res = search_solve(a, &b, &lim).unwrap();
            let (exact, _) = opt_bruteforce(a, &b, lim.max_maps).unwrap();
            assert_eq!(res.cost, exact, "source {i}, seed {seed}");
            assert_eq!(res.infinite, exact.is_infinite(), "source {i}, seed {seed}");
            pairs += 1;
        }
    }
    assert_eq!(pairs, 30);
    let res = search_solve(&gen_grid(3).unwrap(), &b2_structure(), &lim).unwrap();
    assert_eq!(res.cost, ExtRat::from_int(13));
    finish(7, start, Duration::from_secs(180));
}

#[test]
fn criterion_8_property_suites() {
    let start = Instant::now();
    let lim = limits();
    let sig = Signature::new(vec![("f", 2), ("mu", 1)]).unwrap();

    // (a) Taking the core never increases treewidth.
    for seed in 0..50u64 {
        let size = 2 + (seed % 4) as usize;
        let a = gen_random(&sig, size, seed).unwrap();
        let core = compute_core(&a, &lim).unwrap().core;
        let (tw_core, _) = treewidth(&gaifman(&core.pos()).unwrap()).unwrap();
        let (tw_full, _) = treewidth(&gaifman(&a.pos()).unwrap()).unwrap();
        assert!(tw_core <= tw_full, "seed {seed}: {tw_core} > {tw_full}");
    }

    // (b) Equivalent structures have isomorphic cores: permuted copies and
    // the grid/path pair.
    for seed in 200..210u64 {
        let size = 2 + (seed % 3) as usize;
        let a = gen_random(&sig, size, seed).unwrap();
        let b = permuted(&a);
        assert!(equivalent(&a, &b, &lim).unwrap(), "seed {seed}");
        let core_a = compute_core(&a, &lim).unwrap().core;
        let core_b = compute_core(&b, &lim).unwrap().core;
        assert!(
            valued_isomorphic(&core_a, &core_b).is_some(),
            "seed {seed}"
        );
    }
    let core_grid = compute_core(&gen_grid(3).unwrap(), &lim).unwrap().core;
    let core_path = compute_core(&gen_path(3).unwrap(), &lim).unwrap().core;
    assert!(valued_isomorphic(&core_grid, &core_path).is_some());

    // (c) Reduction steps preserve equivalence, and optima compose through
    // the core collapse.
    let mut reduced = 0;
    for seed in 300..330u64 {
        let size = 3 + (seed % 3) as usize;
        let a = gen_random(&sig, size, seed).unwrap();
        if let Some(g) = reduction_step(&a, &Mapping::identity(a.size()), &lim).unwrap() {
            assert!(equivalent(&a, &image_structure(&a, &g), &lim).unwrap());
            let collapse = compute_core(&a, &lim).unwrap();
            let b = gen_random(&sig, 2, seed + 1000).unwrap();
            let (v_core, s) = opt_bruteforce(&collapse.core, &b, lim.max_maps).unwrap();
            let (v_full, _) = opt_bruteforce(&a, &b, lim.max_maps).unwrap();
            assert_eq!(v_core, v_full, "seed {seed}");
            assert_eq!(
                cost(&a, &b, &s.compose(&collapse.projection)).unwrap(),
                v_full,
                "seed {seed}"
            );
            reduced += 1;
            if reduced == 5 {
                break;
            }
        }
    }
    assert!(reduced >= 3, "too few non-cores sampled");

    // (d) The simplex agrees with vertex enumeration on 100 bounded LPs.
    for seed in 0..100u64 {
        let lp = random_bounded_lp(seed);
        let oracle = vertex_enumeration_optimum(&lp);
        match lp.solve(1 << 20).unwrap() {
            LpOutcome::Optimal { value, .. } => {
                let (expect, _) = oracle.expect("oracle agrees on feasibility");
                assert_eq!(value, expect, "seed {seed}");
            }
            LpOutcome::Infeasible => assert!(oracle.is_none(), "seed {seed}"),
            LpOutcome::Unbounded => panic!("bounded LP reported unbounded (seed {seed})"),
        }
    }

    // (e) The separator recursion agrees with the chordal-supergraph oracle.
    let sig3 = Signature::new(vec![("q", 3), ("mu", 1)]).unwrap();
    for seed in 400..420u64 {
        let (signature, size) = if seed % 2 == 0 {
            (&sig, 5 + (seed % 3) as usize)
        } else {
            (&sig3, 4 + (seed % 3) as usize)
        };
        let a = gen_random(signature, size, seed).unwrap();
        let rel = a.pos();
        let (w, _) = twms(&rel).unwrap();
        assert_eq!(w, twms_oracle(&rel).unwrap(), "seed {seed}");
    }

    finish(8, start, Duration::from_secs(600));
}

/// A structurally identical copy with the universe rotated by one.
fn permuted(a: &ValuedStructure) -> ValuedStructure {
    let n = a.size();
    let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let universe: Vec<String> = {
        let mut u = vec![String::new(); n];
        for (old, &new) in perm.iter().enumerate() {
            u[new] = a.universe[old].clone();
        }
        u
    };
    let mut out = ValuedStructure::new(a.signature.clone(), universe).unwrap();
    for (sym, table) in a.tables.iter().enumerate() {
        out.set_default(sym, table.default.clone());
        for (t, v) in &table.entries {
            let mapped: Vec<usize> = t.iter().map(|&e| perm[e]).collect();
            out.set_value(sym, mapped, v.clone());
        }
    }
    out
}

/// A random LP with per-variable upper bounds (hence bounded), small integer
/// data, and a deterministic seed.
fn random_bounded_lp(seed: u64) -> LinProgram {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move |m: u64| -> i64 {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) % m) as i64
    };
    let nv = 2 + next(3) as usize; // 2..=4 variables
    let mut lp = LinProgram::new(nv);
    for v in 0..nv {
        lp.set_objective(v, BigRational::from_integer(BigInt::from(next(7) - 3)));
        lp.add_constraint(
            vec![(v, BigRational::one())],
            Rel::Le,
            BigRational::from_integer(BigInt::from(1 + next(3))),
        );
    }
    let rows = 2 + next(3);
    for _ in 0..rows {
        let lhs: Vec<(usize, BigRational)> = (0..nv)
            .filter_map(|v| {
                let c = next(7) - 3;
                (c != 0).then(|| (v, BigRational::from_integer(BigInt::from(c))))
            })
            .collect();
        if lhs.is_empty() {
            continue;
        }
        let rel = match next(3) {
            0 => Rel::Le,
            1 => Rel::Ge,
            _ => Rel::Eq,
        };
        lp.add_constraint(lhs, rel, BigRational::from_integer(BigInt::from(next(8) - 2)));
    }
    lp
}
