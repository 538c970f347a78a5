/// How a worker orders its victims when its own queue runs dry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum StealPolicy {
    /// Nearest ring neighbors first: `i+1, i-1, i+2, i-2, ...`.
    #[default]
    Ring,
    /// Workers grouped into nested blocks (for instance `[2, 8]`: pairs
    /// sharing a private cache inside groups of eight sharing a last-level
    /// cache). Victims in the smallest common block come first, ring order
    /// within a block.
    Hierarchy(Vec<usize>),
}

/// Victim order of every worker, never containing the worker itself.
pub fn steal_orders(workers: usize, policy: &StealPolicy) -> Vec<Vec<usize>> {
    (0..workers).map(|w| victims(w, workers, policy)).collect()
}

fn ring(worker: usize, workers: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(workers.saturating_sub(1));
    for d in 1..workers {
        for v in [(worker + d) % workers, (worker + workers - d % workers) % workers] {
            if v != worker && !out.contains(&v) {
                out.push(v);
            }
        }
        if out.len() + 1 == workers {
            break;
        }
    }
    out
}

fn victims(worker: usize, workers: usize, policy: &StealPolicy) -> Vec<usize> {
    let order = ring(worker, workers);
    match policy {
        StealPolicy::Ring => order,
        StealPolicy::Hierarchy(levels) => {
            let sizes: Vec<usize> = levels
                .iter()
                .scan(1usize, |acc, &l| {
                    *acc *= l.max(1);
                    Some(*acc)
                })
                .collect();
            let shared_level =
                |v: usize| sizes.iter().position(|&s| worker / s == v / s).unwrap_or(sizes.len());
            let mut ranked: Vec<(usize, usize, usize)> =
                order.iter().enumerate().map(|(rank, &v)| (shared_level(v), rank, v)).collect();
            ranked.sort_unstable();
            ranked.into_iter().map(|(_, _, v)| v).collect()
        }
    }
}
