//! Rate improvement by removing labels of `B`.
//!
//! A label set `T` may be dropped from the delivery when every column of `B`
//! meets `T` in at most `Z - Z'` labels: each active user then still gathers
//! `F'` coded subfiles from its `Z` cached ones plus the remaining
//! transmissions.

use std::collections::BTreeSet;

use crate::combinatorics::{binomial, disjoint_rounds, lex_rank};
use crate::error::{Error, Result};
use crate::hppda::{Construction, HpPda, TSchemeLayout};
use crate::pda::{Entry, Grid, Pda};

const ROUND_BUDGET: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalPlan {
    labels: BTreeSet<u32>,
    budget: usize,
    column_counts: Vec<usize>,
    s: usize,
}

impl RemovalPlan {
    /// Check `labels` against `B` and the per-column budget.
    pub fn new(b: &Pda, labels: impl IntoIterator<Item = u32>, budget: usize) -> Result<RemovalPlan> {
        let labels: BTreeSet<u32> = labels.into_iter().collect();
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l as usize > b.s()) {
            return Err(Error::InvalidRemoval(format!("label {bad} is not in [1,{}]", b.s())));
        }
        let column_counts: Vec<usize> =
            (1..=b.k()).map(|c| b.column_labels(c).iter().filter(|l| labels.contains(l)).count()).collect();
        if let Some(c) = column_counts.iter().position(|&n| n > budget) {
            return Err(Error::InvalidRemoval(format!(
                "column {} meets T in {} labels, budget Z-Z' = {budget}",
                c + 1,
                column_counts[c]
            )));
        }
        Ok(RemovalPlan { labels, budget, column_counts, s: b.s() })
    }

    pub fn empty(b: &Pda) -> RemovalPlan {
        RemovalPlan { labels: BTreeSet::new(), budget: 0, column_counts: vec![0; b.k()], s: b.s() }
    }

    pub fn labels(&self) -> &BTreeSet<u32> {
        &self.labels
    }

    pub fn label_vec(&self) -> Vec<u32> {
        self.labels.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: u32) -> bool {
        self.labels.contains(&label)
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn column_counts(&self) -> &[usize] {
        &self.column_counts
    }

    /// `S - |T|`, the number of transmissions left.
    pub fn s_reduced(&self) -> usize {
        self.s - self.labels.len()
    }
}

/// `Z - Z'` of a pair.
pub fn removal_budget(h: &HpPda) -> usize {
    h.params().z - h.params().zp
}

pub fn plan_for(h: &HpPda, labels: impl IntoIterator<Item = u32>) -> Result<RemovalPlan> {
    RemovalPlan::new(h.b(), labels, removal_budget(h))
}

/// `B` with the labels of `T` replaced by nulls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedB {
    pub grid: Grid,
    /// Labels still transmitted, ascending.
    pub remaining: Vec<u32>,
}

pub fn reduce_b(b: &Pda, plan: &RemovalPlan) -> Result<ReducedB> {
    let checked = RemovalPlan::new(b, plan.labels.iter().copied(), plan.budget)?;
    let mut grid = b.grid().clone();
    for r in 1..=grid.rows() {
        for c in 1..=grid.cols() {
            if let Entry::Label(l) = grid.get(r, c) {
                if checked.contains(l) {
                    grid.set(r, c, Entry::Null);
                }
            }
        }
    }
    let remaining = (1..=b.s() as u32).filter(|l| !checked.contains(*l)).collect();
    Ok(ReducedB { grid, remaining })
}

/// Greedy removal: labels by ascending occurrence count, then label order,
/// each accepted when no touched column exceeds `budget`.
pub fn greedy_t(b: &Pda, budget: usize) -> RemovalPlan {
    let positions = b.grid().label_positions();
    let mut order: Vec<(usize, u32)> = positions.iter().map(|(&l, p)| (p.len(), l)).collect();
    order.sort_unstable();
    let mut load = vec![0usize; b.k()];
    let mut picked = Vec::new();
    for (_, l) in order {
        let cols: Vec<usize> = positions[&l].iter().map(|&(_, c)| c - 1).collect();
        if cols.iter().all(|&c| load[c] < budget) {
            cols.iter().for_each(|&c| load[c] += 1);
            picked.push(l);
        }
    }
    RemovalPlan::new(b, picked, budget).expect("greedy respects the budget")
}

/// `⌊K'/(t+1)⌋ (Z - Z')`.
pub fn man_removal_count(kp: usize, t: usize, z: usize, zp: usize) -> usize {
    (kp / (t + 1)) * z.saturating_sub(zp)
}

/// `Z - Z'` rounds of `⌊K'/(t+1)⌋` pairwise disjoint `(t+1)`-subsets of
/// `[K']`, no subset repeated; their labels form `T`.
pub fn man_removal(h: &HpPda) -> Result<RemovalPlan> {
    let Construction::Man { t } = *h.construction() else {
        return Err(Error::InvalidParameter("MAN removal needs a MAN pair".into()));
    };
    let kp = h.params().kp;
    let budget = removal_budget(h);
    let rounds = disjoint_rounds(kp, t + 1, budget, ROUND_BUDGET)
        .ok_or_else(|| Error::SearchFailed(format!("no {budget} rounds of disjoint {}-subsets of [{kp}]", t + 1)))?;
    let labels = rounds.iter().flatten().map(|u| lex_rank(u, kp) as u32 + 1);
    plan_for(h, labels)
}

/// Round subsets: `z` rounds of `⌊t/(s+1)⌋` pairwise disjoint
/// `(s+1)`-subsets of `[t]`, lexicographically first. With `z >= C(t-1,s)`
/// every `(s+1)`-subset is returned.
pub fn round_subsets(t: usize, s: usize, z: usize) -> Result<Vec<Vec<usize>>> {
    if z as u64 >= binomial(t as u64 - 1, s as u64) {
        return Ok(crate::combinatorics::subsets(t, s + 1).collect());
    }
    let rounds = disjoint_rounds(t, s + 1, z, ROUND_BUDGET)
        .ok_or_else(|| Error::SearchFailed(format!("found no {z} rounds for t={t}, s={s}")))?;
    Ok(rounds.into_iter().flatten().collect())
}

/// `W = {s : a_s != 0}` ascending with `α_b = a_{s_b} C(t-1, s_b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WSchedule {
    pub w: Vec<usize>,
    pub alpha: Vec<u64>,
}

pub fn w_schedule(t: usize, a: &[u64]) -> WSchedule {
    let w: Vec<usize> = (1..t).filter(|&s| a[s - 1] != 0).collect();
    let alpha = w.iter().map(|&s| a[s - 1] * binomial(t as u64 - 1, s as u64)).collect();
    WSchedule { w, alpha }
}

/// Bracket position `(j, a, x)`: index into `W`, full copies taken at `s_j`,
/// and `x = Σ_{b<j} α_b`, with
/// `(a+1) C(t-1,s_j) + x > budget >= a C(t-1,s_j) + x`.
pub fn bracket(t: usize, a: &[u64], budget: u64) -> Option<(usize, u64, u64)> {
    let ws = w_schedule(t, a);
    let mut x = 0u64;
    for (j, &s) in ws.w.iter().enumerate() {
        let c = binomial(t as u64 - 1, s as u64);
        for copies in 0..a[s - 1] {
            if (copies + 1) * c + x > budget && budget >= copies * c + x {
                return Some((j, copies, x));
            }
        }
        x += ws.alpha[j];
    }
    None
}

/// Level-by-level removal set for a t-design pair.
pub fn tdesign_removal(h: &HpPda) -> Result<RemovalPlan> {
    let layout: &TSchemeLayout =
        h.tscheme().ok_or_else(|| Error::InvalidParameter("t-design removal needs a t-design pair".into()))?;
    let t = layout.t();
    let budget = removal_budget(h);
    let Some((j, full, x)) = bracket(t, &layout.a, budget as u64) else {
        // Unreachable when Z < F'; fall back to the greedy choice.
        return Ok(greedy_t(h.b(), budget));
    };
    let ws = w_schedule(t, &layout.a);
    let mut labels = Vec::new();
    for &s in &ws.w[..j] {
        for copy in 1..=layout.a(s) as usize {
            labels.extend(layout.subarray_labels(s, copy));
        }
    }
    let sj = ws.w[j];
    for copy in 1..=full as usize {
        labels.extend(layout.subarray_labels(sj, copy));
    }
    let z = budget as u64 - x - full * binomial(t as u64 - 1, sj as u64);
    for u in round_subsets(t, sj, z as usize)? {
        labels.push(layout.label_of(full as usize + 1, &u).expect("label of B"));
    }
    plan_for(h, labels)
}

/// Closed-form removal count `Σ_{b<j} a_{s_b} C(t,s_b+1) + a C(t,s_j+1) + ⌊t/(s_j+1)⌋ z`.
pub fn tdesign_removal_count(t: usize, a: &[u64], budget: u64) -> Option<u64> {
    let (j, full, x) = bracket(t, a, budget)?;
    let ws = w_schedule(t, a);
    let c = |n: usize, r: usize| binomial(n as u64, r as u64);
    let earlier: u64 = ws.w[..j].iter().map(|&s| a[s - 1] * c(t, s + 1)).sum();
    let sj = ws.w[j];
    let z = budget - x - full * c(t - 1, sj);
    Some(earlier + full * c(t, sj + 1) + (t / (sj + 1)) as u64 * z)
}

/// The construction's own removal set: MAN rounds, the t-design levels, or greedy.
pub fn best_removal(h: &HpPda) -> Result<RemovalPlan> {
    match h.construction() {
        Construction::Man { .. } => man_removal(h),
        Construction::TDesign(_) => tdesign_removal(h),
        _ => Ok(greedy_t(h.b(), removal_budget(h))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::hppda::{man_hppda, tdesign_hppda, TSchemeConfig};

    fn pair8(a1: u64, a2: u64) -> HpPda {
        tdesign_hppda(&TSchemeConfig::new(catalog::design_3_8_4_1(), vec![a1, a2])).unwrap()
    }

    #[test]
    fn man_6_4_2_removal() {
        let h = man_hppda(6, 4, 2).unwrap();
        let plan = man_removal(&h).unwrap();
        assert_eq!(plan.label_vec(), vec![1, 2]);
        let red = reduce_b(h.b(), &plan).unwrap();
        assert_eq!(red.remaining, vec![3, 4]);
        assert!(greedy_t(h.b(), 2).len() >= 2);
    }

    #[test]
    fn tabulated_removal() {
        let x = catalog::tabulated_6_5();
        let plan = plan_for(&x.hppda, x.removal.unwrap()).unwrap();
        assert_eq!(reduce_b(x.hppda.b(), &plan).unwrap().remaining, vec![2, 6, 9]);
        assert_eq!(plan.s_reduced(), 3);
    }

    #[test]
    fn over_budget_is_rejected() {
        let h = man_hppda(6, 4, 2).unwrap();
        assert!(matches!(plan_for(&h, [1, 2, 3]), Err(Error::InvalidRemoval(_))));
        assert!(matches!(plan_for(&h, [9]), Err(Error::InvalidRemoval(_))));
    }

    #[test]
    fn no_slack_no_removal() {
        let h = man_hppda(6, 3, 1).unwrap();
        assert!(greedy_t(h.b(), removal_budget(&h)).is_empty());
        assert!(man_removal(&h).unwrap().is_empty());
        assert_eq!(reduce_b(h.b(), &RemovalPlan::empty(h.b())).unwrap().grid, *h.b().grid());
    }

    #[test]
    fn table_two_counts() {
        for ((a1, a2), n) in [((1, 2), 3), ((2, 1), 4), ((2, 2), 1)] {
            let h = pair8(a1, a2);
            let plan = tdesign_removal(&h).unwrap();
            assert_eq!(plan.len(), n);
            assert_eq!(tdesign_removal_count(3, &[a1, a2], removal_budget(&h) as u64), Some(n as u64));
        }
    }

    #[test]
    fn case_two_uses_lex_first_pair() {
        let h = pair8(2, 1);
        let names: Vec<&str> = tdesign_removal(&h).unwrap().labels().iter().map(|&l| h.b().label_name(l)).collect();
        assert_eq!(names, ["(12,1)", "(13,1)", "(23,1)", "(12,2)"]);
    }

    #[test]
    fn round_subset_sizes() {
        assert_eq!(round_subsets(3, 1, 1).unwrap().len(), 1);
        assert_eq!(round_subsets(3, 2, 1).unwrap(), vec![vec![1, 2, 3]]);
        assert_eq!(round_subsets(6, 1, 3).unwrap().len(), 9);
    }

    #[test]
    fn single_column_greedy() {
        let b =
            Pda::new(Grid::from_rows(vec![vec![Entry::Label(1)], vec![Entry::Label(2)], vec![Entry::Star]]).unwrap())
                .unwrap();
        assert_eq!(greedy_t(&b, 1).len(), 1);
    }
}
