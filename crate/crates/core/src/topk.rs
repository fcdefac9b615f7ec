//! Top-K selection: a randomized tournament over a memoized comparison
//! oracle, the end-to-end solver that backs the oracle with `coup`, and the
//! reduction that turns any Top-K algorithm into a Domination algorithm.

use rand::{Rng, RngCore, SeedableRng};
use serde::Serialize;

use crate::domination::{coup_segments, solve_coup};
use crate::error::{Error, Result};
use crate::model::{Permutation, TopKInstance};
use crate::rng::{self, Domain, StreamKey};
use crate::samples::{BitMatrix, DominationSamples, TopKSamples};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TournamentStats {
    /// Distinct unordered pairs evaluated by the oracle.
    pub edge_queries: usize,
    /// Probe vertices drawn, including rejected ones.
    pub rounds: usize,
    /// Claimed top set, 0-based labels in increasing order.
    pub result: Vec<usize>,
}

/// Caches oracle answers so every unordered pair is evaluated at most once.
struct EdgeCache {
    n: usize,
    // 0 unknown, 1 lower label wins, 2 higher label wins
    state: Vec<u8>,
    queries: usize,
}

impl EdgeCache {
    fn new(n: usize) -> Self {
        EdgeCache { n, state: vec![0; n * n], queries: 0 }
    }

    /// True when `a` beats `b`.
    fn beats<F>(&mut self, a: usize, b: usize, oracle: &mut F) -> Result<bool>
    where
        F: FnMut(usize, usize) -> Result<bool>,
    {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let slot = lo * self.n + hi;
        if self.state[slot] == 0 {
            self.queries += 1;
            self.state[slot] = if oracle(lo, hi)? { 1 } else { 2 };
        }
        Ok((self.state[slot] == 1) == (a == lo))
    }
}

/// Finds the `k` vertices that beat everyone outside the set, given a
/// complete tournament through `oracle(i, j)` (true when `i` beats `j`).
///
/// Each round probes a uniform surviving vertex `v` and queries its edges to
/// all survivors. `v` belongs to the top set iff fewer than `k'` survivors
/// beat it, where `k'` is `k` minus the vertices already placed in the top
/// set. If so, `v` and everyone beating it join the top set and only the
/// vertices `v` beats survive; otherwise `v` and everyone it beats are
/// discarded. A probe is accepted only when fewer than 4/5 of the survivors
/// remain; rejected probes are redrawn with replacement, keeping their
/// cached edges.
pub fn tournament_select<F, R>(mut oracle: F, n: usize, k: usize, rng: &mut R) -> Result<TournamentStats>
where
    F: FnMut(usize, usize) -> Result<bool>,
    R: RngCore + ?Sized,
{
    if n < 2 || k == 0 || k >= n {
        return Err(Error::Precondition(format!("need n >= 2 and 1 <= k <= n-1, got n={n}, k={k}")));
    }
    let mut cache = EdgeCache::new(n);
    let mut alive: Vec<usize> = (0..n).collect();
    let mut top: Vec<usize> = Vec::with_capacity(k);
    let mut rounds = 0usize;
    let mut winners = Vec::new();
    let mut losers = Vec::new();

    loop {
        let need = k - top.len();
        if need == 0 {
            break;
        }
        if need == alive.len() {
            top.append(&mut alive);
            break;
        }
        let m = alive.len();
        rounds += 1;
        let v = alive[rng.gen_range(0..m)];
        winners.clear();
        losers.clear();
        for &u in &alive {
            if u == v {
                continue;
            }
            if cache.beats(u, v, &mut oracle)? {
                winners.push(u);
            } else {
                losers.push(u);
            }
        }
        let in_top = winners.len() < need;
        let remaining = if in_top { losers.len() } else { winners.len() };
        if 5 * remaining >= 4 * m {
            continue;
        }
        if in_top {
            top.push(v);
            top.extend_from_slice(&winners);
            std::mem::swap(&mut alive, &mut losers);
        } else {
            std::mem::swap(&mut alive, &mut winners);
        }
        if top.len() > k {
            return Err(Error::Invariant("tournament is not consistent with any top set".into()));
        }
    }

    top.sort_unstable();
    Ok(TournamentStats { edge_queries: cache.queries, rounds, result: top })
}

/// Per-comparison error parameter used inside `solve_topk`.
pub fn per_call_alpha(n: usize, alpha: f64) -> f64 {
    alpha / (2.0 * (n * n) as f64)
}

/// Smallest `r` accepted by `solve_topk` on `n` items.
pub fn topk_min_r(n: usize, alpha: f64) -> Result<usize> {
    coup_segments(n, per_call_alpha(n, alpha))
}

/// Builds the Domination input for the comparison of labels `i` and `j`:
/// row `h` of X is `Z[i][h]`, row `h` of Y is `Z[j][h]`. Diagonal cells are
/// comparisons of an item with itself and become fair coins.
fn pair_input<R: RngCore + ?Sized>(z: &TopKSamples, i: usize, j: usize, rng: &mut R) -> DominationSamples {
    let (n, r) = (z.n(), z.r());
    let mut x = BitMatrix::zeros(n, r);
    let mut y = BitMatrix::zeros(n, r);
    for h in 0..n {
        if h == i {
            rng::fill_fair(rng, x.row_mut(h), r);
        } else {
            z.copy_oriented(i, h, x.row_mut(h));
        }
        if h == j {
            rng::fill_fair(rng, y.row_mut(h), r);
        } else {
            z.copy_oriented(j, h, y.row_mut(h));
        }
    }
    DominationSamples::new(x, y).expect("dimensions match by construction")
}

/// Top-K from comparison samples: runs the tournament with edges decided by
/// `coup` at error `alpha / (2 n^2)` per comparison.
pub fn solve_topk<R: RngCore + ?Sized>(
    z: &TopKSamples,
    k: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, TournamentStats)> {
    let n = z.n();
    let a = per_call_alpha(n, alpha);
    let ell = coup_segments(n, a)?;
    if z.r() < ell {
        return Err(Error::InsufficientSamples { needed: ell, got: z.r() });
    }
    // Oracle coins come from a child generator seeded off the caller's
    // stream, leaving the parent for probe draws.
    let mut coin_rng = rng::StreamRng::seed_from_u64(rng.next_u64());
    let oracle = |i: usize, j: usize| -> Result<bool> {
        let input = pair_input(z, i, j, &mut coin_rng);
        Ok(solve_coup(&input, a, &mut coin_rng)?.guess == 0)
    };
    let stats = tournament_select(oracle, n, k, rng)?;
    Ok((stats.result.clone(), stats))
}

/// The theoretical sample count for `solve_topk`:
/// `ceil(7776 sqrt(n) ln(2n / alpha) / I(P_k, P_{k+1}))`.
pub fn topk_sample_bound(instance: &TopKInstance, alpha: f64) -> Option<usize> {
    let n = instance.n() as f64;
    let info = crate::info::info_vec(&crate::model::domination_from_topk(instance)).total;
    if info <= 0.0 {
        return None;
    }
    Some((7776.0 * n.sqrt() * (2.0 * n / alpha).ln() / info).ceil() as usize)
}

/// Uses a Top-K algorithm to solve the Domination instance given by rows
/// `k`, `k+1` of `matrix`.
///
/// `samples` must have `2r` columns. Labels `k` and `k+1` (1-based) take the
/// roles of the X and Y rows. For a pair of labels `a < b` the comparison is
/// read from the first half of the columns when `a` is one of the two
/// special labels, from the complemented second half when `b` is, and drawn
/// fresh otherwise. Other labels get a uniform random placement among the
/// remaining ranks. Returns 0 iff the algorithm puts label `k` in its top set.
pub fn reduction_lowerbound<A>(
    mut topk_algorithm: A,
    instance: &TopKInstance,
    samples: &DominationSamples,
    key: StreamKey,
) -> Result<u8>
where
    A: FnMut(&TopKSamples, usize) -> Result<Vec<usize>>,
{
    let n = instance.n();
    let k = instance.k();
    if samples.n() != n {
        return Err(Error::Precondition(format!("samples have {} rows, instance has n = {n}", samples.n())));
    }
    if samples.r() < 2 || samples.r() % 2 != 0 {
        return Err(Error::Precondition(format!(
            "need an even number of at least 2 columns, got {}",
            samples.r()
        )));
    }
    let r = samples.r() / 2;
    let (ka, kb) = (k - 1, k);

    // Random ranks for the ordinary labels; the special pair keeps its place.
    let mut perm_rng = key.rng(Domain::Permutation, 0);
    let others: Vec<usize> = (0..n).filter(|&u| u != ka && u != kb).collect();
    let shuffled = Permutation::random(others.len(), &mut perm_rng);
    let mut rank_of = vec![0usize; n];
    rank_of[ka] = ka;
    rank_of[kb] = kb;
    for (t, &label) in others.iter().enumerate() {
        rank_of[label] = others[shuffled.forward(t)];
    }

    let m = instance.matrix();
    let mut fresh = key.rng(Domain::Auxiliary, 0);
    let z = TopKSamples::from_fn(n, r, |a, b, l| {
        if a == ka {
            samples.x.get(rank_of[b], l)
        } else if a == kb {
            samples.y.get(rank_of[b], l)
        } else if b == ka {
            !samples.x.get(rank_of[a], l + r)
        } else if b == kb {
            !samples.y.get(rank_of[a], l + r)
        } else {
            fresh.gen::<f64>() < m.get(rank_of[a], rank_of[b])
        }
    });
    let top = topk_algorithm(&z, k)?;
    Ok(if top.contains(&ka) { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    fn perfect(rank: &[usize]) -> impl FnMut(usize, usize) -> Result<bool> + '_ {
        move |i, j| Ok(rank[i] < rank[j])
    }

    #[test]
    fn two_items_single_query() {
        let mut rng = StreamKey::new(0, 0).rng(Domain::Solver, 0);
        let rank = [1, 0];
        let stats = tournament_select(perfect(&rank), 2, 1, &mut rng).unwrap();
        assert_eq!(stats.result, vec![1]);
        assert_eq!(stats.edge_queries, 1);
    }

    #[test]
    fn exact_on_small_tournaments() {
        for n in 2..=12 {
            for k in 1..n {
                for s in 0..10 {
                    let mut rng = StreamKey::new(s, n as u64).rng(Domain::Solver, k as u64);
                    let pi = Permutation::random(n, &mut rng);
                    let rank: Vec<usize> = (0..n).map(|label| pi.inverse(label)).collect();
                    let stats = tournament_select(perfect(&rank), n, k, &mut rng).unwrap();
                    let mut want: Vec<usize> = (0..k).map(|u| pi.forward(u)).collect();
                    want.sort_unstable();
                    assert_eq!(stats.result, want);
                    assert!(stats.edge_queries <= n * (n - 1) / 2);
                }
            }
        }
    }

    #[test]
    fn oracle_is_memoized() {
        let mut calls = std::collections::HashMap::new();
        let mut rng = StreamKey::new(4, 0).rng(Domain::Solver, 0);
        let stats = tournament_select(
            |i, j| {
                *calls.entry((i, j)).or_insert(0) += 1;
                Ok(i < j)
            },
            30,
            7,
            &mut rng,
        )
        .unwrap();
        assert!(calls.values().all(|&c| c == 1));
        assert_eq!(calls.len(), stats.edge_queries);
        assert_eq!(stats.result, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn reduction_with_ideal_and_random_algorithms() {
        let inst = crate::generators::gen_diag_eps(6, 3, 0.2).unwrap();
        let dom = crate::model::domination_from_topk(&inst);
        let mut zeros = 0;
        for s in 0..400 {
            let key = StreamKey::new(s, 0);
            let (smp, truth) = crate::samples::sample_domination(&dom, 8, key).unwrap();
            let b = truth.hidden_bit().unwrap();
            // an algorithm that knows the answer
            let ideal = |_: &TopKSamples, k: usize| -> Result<Vec<usize>> {
                let mut v: Vec<usize> = (0..k - 1).collect();
                v.push(if b == 0 { k - 1 } else { k });
                Ok(v)
            };
            assert_eq!(reduction_lowerbound(ideal, &inst, &smp, key).unwrap(), b);
            let mut coin = key.rng(Domain::Solver, 0);
            let random = |_: &TopKSamples, k: usize| -> Result<Vec<usize>> {
                let mut v: Vec<usize> = (0..k - 1).collect();
                v.push(if coin.gen::<bool>() { k - 1 } else { k });
                Ok(v)
            };
            zeros += (reduction_lowerbound(random, &inst, &smp, key).unwrap() == 0) as usize;
        }
        assert!((160..240).contains(&zeros), "{zeros}");
    }

    #[test]
    fn topk_two_items_is_one_coup_call() {
        let inst = crate::generators::gen_diag_eps(2, 1, 0.45).unwrap();
        let key = StreamKey::new(1, 1);
        let (z, truth) = crate::samples::sample_topk(&inst, 4000, key).unwrap();
        let mut rng = key.rng(Domain::Solver, 0);
        let (top, stats) = solve_topk(&z, 1, 0.25, &mut rng).unwrap();
        assert_eq!(stats.edge_queries, 1);
        assert_eq!(top, vec![truth.permutation().unwrap().forward(0)]);
    }
}
