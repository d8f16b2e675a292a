mod common;

use std::collections::BTreeSet;

use cld::constrained::{exact_general, solve_bounded, ConstraintKind};
use cld::control::guaranteed_followers;
use cld::oracle::{self, enumerate_all, for_each_feasible};
use cld::reachability::{condense, min_cost, solve_reachability};
use cld::{validate_solution, Election, Limits, Solution, VoterRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn reachability_matches_oracle() {
    let densities = [0.05, 0.15, 0.3, 0.5, 0.8];
    let mut cases = 0;
    for seed in 0..600u64 {
        let n = 1 + (seed % 8) as usize;
        let p = densities[(seed / 8) as usize % densities.len()];
        let hi = [1, 3, 5][(seed / 40) as usize % 3];
        let e = common::general(n, p, hi, seed);
        let (sol, report) = solve_reachability(&e);
        let brute = enumerate_all(&e, &[], Limits::default()).unwrap();
        assert_eq!(Some(report.total_cost), brute.min_cost, "seed {seed}: {e:?}");
        assert_eq!(min_cost(&e), report.total_cost);
        assert!(report.is_feasible());
        assert_eq!(report.power.values().sum::<usize>(), n);

        let cheaper: BTreeSet<usize> = (0..n).filter(|&i| e.excess(i) < 0).collect();
        assert!(cheaper.is_subset(&sol.casting), "seed {seed}");
        for s in &brute.optimal_solutions {
            assert!(cheaper.is_subset(&s.casting), "seed {seed}: {s:?}");
        }
        cases += 1;
    }
    assert!(cases >= 500);
}

#[test]
fn feasible_solutions_cover_every_sink() {
    for seed in 0..200u64 {
        let e = common::general(1 + (seed % 7) as usize, 0.25, 3, seed);
        let cond = condense(&e);
        for_each_feasible(&e, Limits::default(), |choice, _| {
            for &s in &cond.sinks {
                assert!(cond.components[s].iter().any(|&i| choice[i].is_none()), "seed {seed}");
            }
        })
        .unwrap();
    }
}

/// Walks each delegation choice from scratch; feasible iff every walk ends at a caster.
fn feasible_by_walking(e: &Election, choice: &[Option<usize>]) -> bool {
    (0..e.len()).all(|start| {
        let mut cur = start;
        for _ in 0..=e.len() {
            match choice[cur] {
                None => return true,
                Some(j) => cur = j,
            }
        }
        false
    })
}

#[test]
fn validator_agrees_with_walking() {
    for seed in 0..150u64 {
        let e = common::general(1 + (seed % 6) as usize, 0.4, 3, seed);
        let n = e.len();
        // Every (C, D) pair: each voter casts or picks one of its out-edges.
        let mut choice: Vec<Option<usize>> = vec![None; n];
        let mut pos = vec![0usize; n];
        loop {
            for i in 0..n {
                choice[i] = if pos[i] == 0 { None } else { Some(e.out_neighbors(i)[pos[i] - 1]) };
            }
            let report = validate_solution(&e, &Solution::from_choices(&choice)).unwrap();
            assert_eq!(report.is_feasible(), feasible_by_walking(&e, &choice), "seed {seed}: {choice:?}");
            if report.is_feasible() {
                assert_eq!(report.power.values().sum::<usize>(), n);
                let direct: u64 = (0..n)
                    .map(|i| {
                        if choice[i].is_none() {
                            e.voting_cost(i)
                        } else {
                            e.delegating_cost(i)
                        }
                    })
                    .sum();
                assert_eq!(report.total_cost, direct);
            }
            let mut i = 0;
            while i < n && pos[i] == e.out_degree(i) {
                pos[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
            pos[i] += 1;
        }
    }
}

#[test]
fn dps_match_oracle() {
    let mut cases = 0;
    for seed in 0..320u64 {
        let n = 1 + (seed % 10) as usize;
        let q = [0.0, 0.4, 1.0][(seed / 10) as usize % 3];
        let e = common::functional(n, q, 5, seed);
        for kind in ConstraintKind::ALL {
            let optima = oracle::bounded_optima(&e, kind, Limits::default()).unwrap();
            for ell in 1..=n {
                let dp = solve_bounded(&e, kind, ell).unwrap();
                assert_eq!(dp.as_ref().map(|d| d.1), optima[ell], "seed {seed} {kind:?} ell {ell}: {e:?}");
                if let Some((sol, cost)) = &dp {
                    let report = validate_solution(&e, sol).unwrap();
                    assert!(report.is_feasible());
                    assert!(kind.with_bound(ell).allows(&report), "seed {seed} {kind:?} ell {ell}");
                    assert_eq!(report.total_cost, *cost);
                }
                let exact = exact_general(&e, kind.with_bound(ell), None, Limits::default()).unwrap();
                assert_eq!(exact.map(|x| x.1), optima[ell], "exact seed {seed} {kind:?} ell {ell}");
            }
        }
        cases += 1;
    }
    assert!(cases >= 300);
}

#[test]
fn vacuous_bounds_reproduce_unconstrained_minimum() {
    for seed in 0..200u64 {
        let n = 2 + (seed % 9) as usize;
        let e = common::functional(n, 0.5, 5, seed);
        let base = min_cost(&e);
        assert_eq!(solve_bounded(&e, ConstraintKind::Power, n).unwrap().map(|x| x.1), Some(base));
        assert_eq!(
            solve_bounded(&e, ConstraintKind::MaxLength, n - 1).unwrap().map(|x| x.1),
            Some(base)
        );
    }
}

#[test]
fn cycle_costs_match_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let n = rng.gen_range(2..=8);
        let voters: Vec<VoterRecord> = (0..n)
            .map(|i| VoterRecord::new(format!("c{i}"), rng.gen_range(0..6), rng.gen_range(0..6)))
            .collect();
        let e = Election::new(voters, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        let total_d: u64 = (0..n).map(|i| e.delegating_cost(i)).sum();
        let one_caster = (0..n).map(|u| e.voting_cost(u) + total_d - e.delegating_cost(u)).min().unwrap();
        // With a single caster the power is n; with voters cheaper to cast, more may cast.
        if (0..n).all(|i| e.excess(i) >= 0) {
            assert_eq!(solve_bounded(&e, ConstraintKind::Power, n).unwrap().unwrap().1, one_caster);
        }
        assert!(min_cost(&e) <= one_caster);
    }
}

#[test]
fn length_solutions_respect_sum_bound() {
    for seed in 0..150u64 {
        let e = common::functional(1 + (seed % 8) as usize, 0.5, 4, seed);
        for ell in 1..=e.len() {
            let brute = enumerate_all(&e, &[ConstraintKind::MaxLength.with_bound(ell)], Limits::default()).unwrap();
            for s in &brute.constrained.values().next().unwrap().witnesses {
                let report = validate_solution(&e, s).unwrap();
                for (&c, &sum) in &report.sum_length {
                    assert!(sum <= ell * (report.power[&c] - 1));
                }
            }
        }
    }
}

#[test]
fn guaranteed_followers_are_tight() {
    let mut checked = 0;
    for seed in 0..400u64 {
        let e = common::functional(1 + (seed % 8) as usize, 0.5, 3, seed);
        for x in 0..e.len() {
            if !oracle::casts_in_all_optima(&e, x, Limits::default()).unwrap() {
                continue;
            }
            let followers = guaranteed_followers(&e, x).unwrap();
            let min_power = oracle::min_power_over_optima(&e, x, Limits::default()).unwrap();
            assert_eq!(Some(followers.len() + 1), min_power, "seed {seed} x {x}: {e:?}");
            // Every guaranteed follower is represented by x in every optimum.
            for s in &enumerate_all(&e, &[], Limits::default()).unwrap().optimal_solutions {
                let report = validate_solution(&e, s).unwrap();
                assert!(followers.iter().all(|f| report.representative.get(f) == Some(&x)));
            }
            checked += 1;
        }
    }
    assert!(checked >= 300);
}
