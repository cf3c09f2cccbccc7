mod support;

use std::time::Instant;

use support::{table_optimum, table_space, TableObjective};
use zoorank_core::recommender::{grid_configs, search, SearchOutcome};
use zoorank_core::{NoProgress, Strategy};

const SEEDS: u64 = 50;
const BUDGET: usize = 20;
const HIT_WITHIN: usize = 15;

fn run(strategy: Strategy, seed: u64) -> SearchOutcome {
    search(&mut TableObjective, &table_space(), BUDGET, strategy, seed, &mut NoProgress).unwrap()
}

fn best_value(o: &SearchOutcome) -> f64 {
    o.history.iter().map(|h| h.objective).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn planted_optimum_is_unique() {
    let (opt, value) = table_optimum();
    assert_eq!((opt.template, opt.optimizer, opt.batch_size), support::PLANTED);
    let others = grid_configs(&table_space()).into_iter().filter(|c| !c.same_point(&opt)).count();
    assert_eq!(others, 47);
    assert!(grid_configs(&table_space())
        .iter()
        .filter(|c| !c.same_point(&opt))
        .all(|c| support::table_value(c) < value));
}

#[test]
fn bayesian_search_finds_the_table_optimum() {
    let started = Instant::now();
    let (opt, opt_value) = table_optimum();
    let mut hits = 0;
    let mut not_worse = 0;
    let mut strictly_better = 0;
    for seed in 0..SEEDS {
        let bo = run(Strategy::Bayesian, seed);
        let rs = run(Strategy::Random, seed + 1000);
        if bo.history.iter().take(HIT_WITHIN).any(|h| h.config.same_point(&opt)) {
            hits += 1;
        }
        let (b, r) = (best_value(&bo), best_value(&rs));
        not_worse += usize::from(b >= r);
        strictly_better += usize::from(b > r);
        assert!(b <= opt_value + 1e-6);
    }
    let elapsed = started.elapsed().as_secs_f64();
    eprintln!(
        "hits {hits}/{SEEDS}, not worse {not_worse}/{SEEDS}, strictly better {strictly_better}/{SEEDS}, {elapsed:.1}s"
    );
    assert!(hits as f64 >= 0.8 * SEEDS as f64);
    assert!(not_worse as f64 >= 0.7 * SEEDS as f64);
    assert!(elapsed < 60.0);
}

#[test]
fn search_is_deterministic_per_seed() {
    assert_eq!(run(Strategy::Bayesian, 9), run(Strategy::Bayesian, 9));
    assert_eq!(run(Strategy::Random, 9), run(Strategy::Random, 9));
}
