mod common;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rainbowpack::model::Instance;
use rainbowpack::oracles::{brute_force_pack, OracleBudget};
use rainbowpack::smallness::{split_small_large, FitMode};
use rainbowpack::solver_bp_det::{branch_bound, solve_traced};

#[test]
fn matches_oracle_and_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let start = Instant::now();
    let mut done = 0;
    while done < 300 {
        let n = rng.gen_range(0..=12);
        let grain = *[10, 20, 100].choose(&mut rng).unwrap();
        let inst = common::random_instance(&mut rng, n, 1, grain, grain, None);
        let k = split_small_large(&inst, FitMode::Pack).k();
        if k > 4 {
            continue;
        }
        done += 1;
        let out = solve_traced(&inst).unwrap();
        let want = brute_force_pack(&inst, OracleBudget::default()).unwrap().objective;
        assert_eq!(out.assignment.objective, want, "{}", inst.to_json());
        assert!(out.branches <= branch_bound(k), "{} > {}", out.branches, branch_bound(k));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let shuffled: Instance = inst.subset(&perm);
        assert_eq!(solve_traced(&shuffled).unwrap().assignment.objective, want);
    }
    eprintln!("elapsed {:?}", start.elapsed());
}
