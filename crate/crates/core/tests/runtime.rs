use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sn_sweep::runtime::{TaskCtx, TaskPool, WorkQueue};

fn counts(n: usize) -> Vec<AtomicUsize> {
    (0..n).map(|_| AtomicUsize::new(0)).collect()
}

#[test]
fn ten_thousand_noops_on_eight_workers() {
    let pool = TaskPool::new(8);
    let hits = counts(10_000);
    pool.scope(|s| {
        for i in 0..10_000 {
            let hits = &hits;
            s.spawn(None, move |_| {
                hits[i].fetch_add(1, Ordering::Relaxed);
            });
        }
    });
    assert!(hits.iter().all(|h| h.load(Ordering::Relaxed) == 1));
    let stats = pool.stats();
    assert_eq!(stats.spawned, 10_000);
    assert_eq!(stats.executed, 10_000);
    assert_eq!(pool.in_flight(), 0);
    assert_eq!(pool.queued(), 0);
}

#[test]
fn chain_of_one_hundred() {
    fn link<'s>(ctx: &TaskCtx<'s>, left: usize, seen: &'s Mutex<Vec<usize>>) {
        seen.lock().unwrap().push(left);
        if left > 1 {
            ctx.spawn(None, move |ctx| link(ctx, left - 1, seen));
        }
    }
    let pool = TaskPool::new(4);
    let seen = Mutex::new(Vec::new());
    pool.scope(|s| {
        let seen = &seen;
        s.spawn(None, move |ctx| link(ctx, 100, seen));
    });
    assert_eq!(seen.into_inner().unwrap(), (1..=100).rev().collect::<Vec<_>>());
}

#[test]
fn fan_out_reaches_every_worker() {
    let mut good = 0;
    for _ in 0..10 {
        let pool = TaskPool::new(4);
        let per_worker = counts(4);
        pool.scope(|s| {
            let per_worker = &per_worker;
            s.spawn(None, move |ctx| {
                for _ in 0..1000 {
                    ctx.spawn(None, move |ctx| {
                        per_worker[ctx.worker()].fetch_add(1, Ordering::Relaxed);
                        std::thread::sleep(Duration::from_millis(1));
                    });
                }
            });
        });
        let c: Vec<usize> = per_worker.iter().map(|c| c.load(Ordering::Relaxed)).collect();
        assert_eq!(c.iter().sum::<usize>(), 1000);
        if c.iter().all(|&n| n >= 1) {
            good += 1;
        }
    }
    assert!(good >= 9, "only {good}/10 runs used every worker");
}

#[test]
fn hinted_tasks_run_where_placed_unless_stolen() {
    let pool = TaskPool::new(4);
    let misplaced = AtomicUsize::new(0);
    let stolen = AtomicUsize::new(0);
    pool.scope(|s| {
        for i in 0..400 {
            let (misplaced, stolen) = (&misplaced, &stolen);
            s.spawn(Some(i % 4), move |ctx| {
                if ctx.stolen() {
                    stolen.fetch_add(1, Ordering::Relaxed);
                } else if ctx.worker() != i % 4 {
                    misplaced.fetch_add(1, Ordering::Relaxed);
                }
                std::thread::sleep(Duration::from_micros(50));
            });
        }
    });
    assert_eq!(misplaced.load(Ordering::Relaxed), 0);
    assert_eq!(pool.stats().hinted, 400);
    assert_eq!(pool.stats().steals, stolen.load(Ordering::Relaxed) as u64);
}

#[test]
fn queue_is_lifo_for_the_owner_and_fifo_for_thieves() {
    let q = WorkQueue::default();
    for i in 0..5 {
        q.push(i);
    }
    assert_eq!(q.steal(), Some(0));
    assert_eq!(q.pop_local(), Some(4));
    assert_eq!(q.steal(), Some(1));
    assert_eq!(q.pop_local(), Some(3));
    assert_eq!(q.len(), 1);
    assert_eq!(q.pop_local(), Some(2));
    assert!(q.is_empty());
    assert_eq!(q.steal(), None);
}

#[test]
fn thieves_take_the_oldest_task() {
    for _ in 0..20 {
        let pool = TaskPool::new(2);
        let log = Mutex::new(vec![Vec::new(), Vec::new()]);
        pool.scope(|s| {
            for i in 0..200 {
                let log = &log;
                s.spawn(Some(0), move |ctx| {
                    log.lock().unwrap()[ctx.worker()].push(i);
                    std::thread::sleep(Duration::from_micros(20));
                });
            }
        });
        let log = log.into_inner().unwrap();
        assert!(log[0].windows(2).all(|w| w[0] > w[1]), "owner order {:?}", log[0]);
        assert!(log[1].windows(2).all(|w| w[0] < w[1]), "thief order {:?}", log[1]);
        assert_eq!(log[0].len() + log[1].len(), 200);
    }
}

/// Random tree of tasks: each spawns up to `fan` children until `budget`
/// tasks have been created.
fn grow<'s>(
    ctx: &TaskCtx<'s>,
    seed: u64,
    fan: usize,
    next_id: &'s AtomicUsize,
    budget: usize,
    hits: &'s [AtomicUsize],
    sleep: bool,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if sleep {
        std::thread::sleep(Duration::from_micros(rng.gen_range(0..50)));
    }
    for _ in 0..rng.gen_range(0..=fan) {
        let id = next_id.fetch_add(1, Ordering::Relaxed);
        if id >= budget {
            return;
        }
        let child_seed = rng.gen();
        let hint = if rng.gen_bool(0.3) { Some(rng.gen_range(0..ctx.workers())) } else { None };
        ctx.spawn(hint, move |ctx| {
            hits[id].fetch_add(1, Ordering::Relaxed);
            grow(ctx, child_seed, fan, next_id, budget, hits, sleep);
        });
    }
}

fn run_tree(pool: &TaskPool, seed: u64, fan: usize, budget: usize, sleep: bool) -> (usize, Vec<usize>) {
    let next_id = AtomicUsize::new(1);
    let hits = counts(budget);
    hits[0].store(1, Ordering::Relaxed);
    pool.scope(|s| {
        let (next_id, hits) = (&next_id, &hits[..]);
        s.spawn(None, move |ctx| grow(ctx, seed, fan, next_id, budget, hits, sleep));
    });
    let created = next_id.load(Ordering::Relaxed).min(budget);
    (created, hits.iter().map(|h| h.load(Ordering::Relaxed)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exactly_once_under_random_sleeps(seed in any::<u64>(), workers in 1usize..=6, fan in 1usize..6) {
        let pool = TaskPool::new(workers);
        let before = pool.stats().executed;
        let (created, hits) = run_tree(&pool, seed, fan, 400, true);
        for (id, &h) in hits.iter().enumerate() {
            prop_assert_eq!(h, usize::from(id < created), "task {}", id);
        }
        prop_assert_eq!((pool.stats().executed - before) as usize, created);
        prop_assert_eq!(pool.in_flight(), 0);
    }
}

#[test]
fn large_random_trees_run_exactly_once() {
    let pool = TaskPool::new(hardware_workers());
    for rep in 0..5 {
        let (created, hits) = run_tree(&pool, rep, 8, 20_000, false);
        assert!(created > 1);
        assert!(hits.iter().enumerate().all(|(id, &h)| h == usize::from(id < created)));
    }
}

fn hardware_workers() -> usize {
    sn_sweep::runtime::hardware_concurrency().max(2)
}
