//! Binomial coefficients and lexicographic k-subset enumeration.
//!
//! Subsets are sorted `Vec<usize>` over a 1-based ground set `[n]`.

/// `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(acc).expect("binomial overflows u64")
}

/// `C(n, k)` extended to signed arguments: zero whenever `k < 0` or `k > n`.
pub fn binomial_i(n: i64, k: i64) -> i64 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    binomial(n as u64, k as u64) as i64
}

/// Iterator over the k-subsets of `[n]` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - (k - 1 - i) {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// All k-subsets of `[n]` in lexicographic order. `k = 0` yields the empty set once.
pub fn subsets(n: usize, k: usize) -> Subsets {
    let current = (k <= n).then(|| (1..=k).collect());
    Subsets { n, current }
}

/// All k-subsets of an arbitrary sorted ground set, lexicographic in the ground order.
pub fn subsets_of(ground: &[usize], k: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    subsets(ground.len(), k).map(move |idx| idx.iter().map(|&i| ground[i - 1]).collect())
}

/// 0-based lexicographic rank of a sorted k-subset of `[n]`.
pub fn lex_rank(subset: &[usize], n: usize) -> usize {
    let k = subset.len();
    let mut rank = 0u64;
    let mut prev = 0usize;
    for (i, &x) in subset.iter().enumerate() {
        for skipped in prev + 1..x {
            rank += binomial((n - skipped) as u64, (k - i - 1) as u64);
        }
        prev = x;
    }
    rank as usize
}

/// Inverse of [`lex_rank`].
pub fn lex_unrank(mut rank: usize, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut x = 1usize;
    for i in 0..k {
        loop {
            let below = binomial((n - x) as u64, (k - i - 1) as u64) as usize;
            if rank < below {
                break;
            }
            rank -= below;
            x += 1;
        }
        out.push(x);
        x += 1;
    }
    out
}

/// `true` when sorted `small` is contained in sorted `big`.
pub fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// Sorted intersection of two sorted slices.
pub fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Find `rounds` families of `floor(n/k)` pairwise disjoint k-subsets of `[n]`,
/// with no subset used twice across families.
///
/// Depth-first over lexicographic choices, so the result is the
/// lexicographically first solution. Returns `None` if no solution exists or
/// `node_budget` is exhausted.
pub fn disjoint_rounds(n: usize, k: usize, rounds: usize, node_budget: u64) -> Option<Vec<Vec<Vec<usize>>>> {
    if k == 0 || k > n {
        return if rounds == 0 { Some(Vec::new()) } else { None };
    }
    let per_round = n / k;
    let all: Vec<Vec<usize>> = subsets(n, k).collect();
    let masks: Vec<u128> = all.iter().map(|s| s.iter().fold(0u128, |m, &x| m | (1 << x))).collect();
    let mut used = vec![false; all.len()];
    let mut picks: Vec<Vec<usize>> = vec![Vec::new(); rounds];
    let mut nodes = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn fill(
        round: usize,
        start: usize,
        covered: u128,
        masks: &[u128],
        used: &mut [bool],
        picks: &mut [Vec<usize>],
        per_round: usize,
        nodes: &mut u64,
        budget: u64,
    ) -> bool {
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        if round == picks.len() {
            return true;
        }
        if picks[round].len() == per_round {
            return fill(round + 1, 0, 0, masks, used, picks, per_round, nodes, budget);
        }
        for idx in start..masks.len() {
            if used[idx] || masks[idx] & covered != 0 {
                continue;
            }
            used[idx] = true;
            picks[round].push(idx);
            if fill(round, idx + 1, covered | masks[idx], masks, used, picks, per_round, nodes, budget) {
                return true;
            }
            picks[round].pop();
            used[idx] = false;
        }
        false
    }

    if n >= 128 {
        return None;
    }
    if fill(0, 0, 0, &masks, &mut used, &mut picks, per_round, &mut nodes, node_budget) {
        Some(picks.into_iter().map(|r| r.into_iter().map(|i| all[i].clone()).collect()).collect())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(11, 2), 55);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(30, 15), 155_117_520);
        assert_eq!(binomial_i(5, -1), 0);
        assert_eq!(binomial_i(0, 0), 1);
    }

    #[test]
    fn subsets_are_lex_and_counted() {
        let all: Vec<_> = subsets(4, 2).collect();
        assert_eq!(all, vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]);
        assert_eq!(subsets(7, 3).count(), 35);
        assert_eq!(subsets(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(subsets(2, 3).count(), 0);
    }

    #[test]
    fn rank_roundtrip() {
        for (i, s) in subsets(9, 4).enumerate() {
            assert_eq!(lex_rank(&s, 9), i);
            assert_eq!(lex_unrank(i, 9, 4), s);
        }
    }

    #[test]
    fn disjoint_rounds_man_example() {
        // K'=4, t=2: one triple per round, two rounds.
        let r = disjoint_rounds(4, 3, 2, 1_000).unwrap();
        assert_eq!(r, vec![vec![vec![1, 2, 3]], vec![vec![1, 2, 4]]]);
        // n=6, k=2, 5 rounds is a 1-factorisation of K6.
        let r = disjoint_rounds(6, 2, 5, 100_000).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for round in &r {
            let mut pts: Vec<usize> = round.iter().flatten().copied().collect();
            pts.sort_unstable();
            assert_eq!(pts, vec![1, 2, 3, 4, 5, 6]);
            for s in round {
                assert!(seen.insert(s.clone()));
            }
        }
    }
}
