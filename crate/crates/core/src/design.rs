//! t-(v,k,λ) designs: validation, block counts, standard constructions and a
//! randomized search for 3-(v,4,3) designs.
//!
//! Points are `1..=v`. Each block is stored sorted; the block list keeps the
//! order it was given in, since the t-design placement indexes cache rows by
//! block position. Constructors emit blocks in lexicographic order.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{binomial, is_subset, lex_rank, subsets, subsets_of};
use crate::error::{parse_err, Error, Result};
use crate::field::GaloisField;
use crate::report::{fmt_set, ValidationReport};

/// Exhaustive validation up to this many t-subsets; sampled above.
pub const EXHAUSTIVE_TSUBSETS: u64 = 1_000_000;
const SAMPLED_TSUBSETS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    t: usize,
    v: usize,
    k: usize,
    lambda: u64,
    blocks: Vec<Vec<usize>>,
}

/// `lambda_s[s]` for `s in 0..=t` and `lambda_s_t[s]` for `s in 0..=t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignCounts {
    pub lambda_s: Vec<u64>,
    pub lambda_s_t: Vec<u64>,
}

impl DesignCounts {
    /// Blocks containing a fixed s-set.
    pub fn lambda(&self, s: usize) -> u64 {
        self.lambda_s[s]
    }

    /// Blocks meeting a fixed t-set exactly in a fixed s-subset of it.
    pub fn lambda_t(&self, s: usize) -> u64 {
        self.lambda_s_t[s]
    }

    pub fn blocks(&self) -> u64 {
        self.lambda_s[0]
    }
}

impl Design {
    /// Build without validation. Blocks are sorted internally.
    pub fn from_parts(t: usize, v: usize, k: usize, lambda: u64, blocks: Vec<Vec<usize>>) -> Self {
        let blocks = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        Design { t, v, k, lambda, blocks }
    }

    /// Build and validate.
    pub fn new(t: usize, v: usize, k: usize, lambda: u64, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let d = Self::from_parts(t, v, k, lambda, blocks);
        let report = d.validate();
        if report.is_valid() {
            Ok(d)
        } else {
            Err(Error::Invalid(format!("{} design: {report}", d.name())))
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn b(&self) -> usize {
        self.blocks.len()
    }

    /// `t-(v,k,λ)`.
    pub fn name(&self) -> String {
        format!("{}-({},{},{})", self.t, self.v, self.k, self.lambda)
    }

    /// Copy with the blocks in lexicographic order.
    pub fn sorted(&self) -> Design {
        let mut d = self.clone();
        d.blocks.sort();
        d
    }

    pub fn validate(&self) -> ValidationReport {
        validate_design(self)
    }

    pub fn counts(&self) -> Result<DesignCounts> {
        design_counts(self.t, self.v, self.k, self.lambda)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.t, self.v, self.k, self.lambda);
        for b in &self.blocks {
            let line: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// λ_s = λ C(v−s,t−s)/C(k−s,t−s) and λ_s^t = λ C(v−t,k−s)/C(v−t,k−t).
pub fn design_counts(t: usize, v: usize, k: usize, lambda: u64) -> Result<DesignCounts> {
    if !(t <= k && k < v) {
        return Err(Error::InvalidParameter(format!("need v > k >= t, got t={t} v={v} k={k}")));
    }
    let ratio = |num: u128, den: u128, what: &str| -> Result<u64> {
        if den == 0 || !num.is_multiple_of(den) {
            return Err(Error::InvalidParameter(format!("{what} = {num}/{den} is not an integer")));
        }
        Ok((num / den) as u64)
    };
    let lam = u128::from(lambda);
    let c = |n: usize, r: usize| u128::from(binomial(n as u64, r as u64));
    let mut lambda_s = Vec::with_capacity(t + 1);
    let mut lambda_s_t = Vec::with_capacity(t + 1);
    for s in 0..=t {
        lambda_s.push(ratio(lam * c(v - s, t - s), c(k - s, t - s), &format!("lambda_{s}"))?);
        lambda_s_t.push(ratio(lam * c(v - t, k - s), c(v - t, k - t), &format!("lambda_{s}^{t}"))?);
    }
    Ok(DesignCounts { lambda_s, lambda_s_t })
}

pub fn validate_design(d: &Design) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let (t, v, k) = (d.t, d.v, d.k);
    if !(t >= 1 && t <= k && k < v) {
        rep.push("parameters", format!("need v > k >= t >= 1, got {}", d.name()));
        return rep;
    }
    let mut geometry_ok = true;
    for (i, b) in d.blocks.iter().enumerate() {
        let distinct = b.windows(2).all(|w| w[0] < w[1]);
        if b.len() != k || !distinct || b.iter().any(|&x| x == 0 || x > v) {
            rep.push("block", format!("block {} = {} is not a {k}-subset of [{v}]", i + 1, fmt_set(b)));
            geometry_ok = false;
        }
    }
    let mut seen = HashSet::new();
    for b in &d.blocks {
        if !seen.insert(b) {
            rep.push("repeated", format!("block {} occurs more than once", fmt_set(b)));
        }
    }
    match d.counts() {
        Ok(c) if c.blocks() as usize != d.b() => {
            rep.push("block count", format!("b = {} but λC(v,t)/C(k,t) = {}", d.b(), c.blocks()));
        }
        Ok(_) => {}
        Err(e) => rep.push("counts", e.to_string()),
    }
    if !geometry_ok {
        return rep;
    }
    let total = binomial(v as u64, t as u64);
    if total <= EXHAUSTIVE_TSUBSETS {
        let mut hits = vec![0u64; total as usize];
        for b in &d.blocks {
            for sub in subsets_of(b, t) {
                hits[lex_rank(&sub, v)] += 1;
            }
        }
        for (sub, &h) in subsets(v, t).zip(&hits) {
            if h != d.lambda {
                rep.push("coverage", format!("{} lies in {h} blocks, expected {}", fmt_set(&sub), d.lambda));
            }
        }
        rep.checked = total;
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(total);
        for _ in 0..SAMPLED_TSUBSETS {
            let mut sub: Vec<usize> = rand::seq::index::sample(&mut rng, v, t).into_iter().map(|x| x + 1).collect();
            sub.sort_unstable();
            let h = d.blocks.iter().filter(|b| is_subset(&sub, b)).count() as u64;
            if h != d.lambda {
                rep.push("coverage", format!("{} lies in {h} blocks, expected {}", fmt_set(&sub), d.lambda));
            }
        }
        rep.checked = SAMPLED_TSUBSETS as u64;
        rep.sampled = true;
    }
    rep
}

/// Every k-subset of `[v]`: a t-(v,k,C(v−t,k−t)) design.
pub fn complete_design(v: usize, k: usize, t: usize) -> Result<Design> {
    if !(t >= 1 && t <= k && k < v) {
        return Err(Error::InvalidParameter(format!("complete design needs v > k >= t >= 1, got v={v} k={k} t={t}")));
    }
    let lambda = binomial((v - t) as u64, (k - t) as u64);
    Ok(Design::from_parts(t, v, k, lambda, subsets(v, k).collect()))
}

/// View a t-design as an s-(v,k,λ_s) design.
pub fn reduce_strength(d: &Design, s: usize) -> Result<Design> {
    if s == 0 || s >= d.t {
        return Err(Error::InvalidParameter(format!("strength {s} must lie in 1..{}", d.t)));
    }
    let lambda = d.counts()?.lambda(s);
    Ok(Design { t: s, lambda, ..d.clone() })
}

/// The (t−i)-(v−i,k−i,λ) design on `X \ z` formed by `{A \ z : z ⊆ A}`,
/// with the remaining points relabeled `1..=v−i` in increasing order.
pub fn derived_design(d: &Design, z: &[usize]) -> Result<Design> {
    let mut z = z.to_vec();
    z.sort_unstable();
    z.dedup();
    if z.is_empty() {
        return Ok(d.clone());
    }
    if z.len() >= d.t || z.iter().any(|&x| x == 0 || x > d.v) {
        return Err(Error::InvalidParameter(format!(
            "derived set {} must be a proper subset of size < t",
            fmt_set(&z)
        )));
    }
    let mut relabel = vec![0usize; d.v + 1];
    let mut next = 1;
    for p in 1..=d.v {
        if z.binary_search(&p).is_err() {
            relabel[p] = next;
            next += 1;
        }
    }
    let blocks = d
        .blocks
        .iter()
        .filter(|b| is_subset(&z, b))
        .map(|b| b.iter().filter(|x| z.binary_search(x).is_err()).map(|&x| relabel[x]).collect())
        .collect();
    let i = z.len();
    Ok(Design::from_parts(d.t - i, d.v - i, d.k - i, d.lambda, blocks))
}

/// Point of the projective line over GF(q²); `None` is ∞.
type ProjPoint = Option<u16>;

fn mobius(f: &GaloisField, m: [u16; 4], z: ProjPoint) -> ProjPoint {
    let [a, b, c, d] = m;
    match z {
        None => (c != 0).then(|| f.div(a, c)),
        Some(z) => {
            let num = f.add(f.mul(a, z), b);
            let den = f.add(f.mul(c, z), d);
            (den != 0).then(|| f.div(num, den))
        }
    }
}

/// Matrix of the fractional linear map taking (∞, 0, 1) to (x, y, w).
fn three_point_map(f: &GaloisField, x: ProjPoint, y: ProjPoint, w: ProjPoint) -> [u16; 4] {
    match (x, y, w) {
        (None, Some(b), Some(c)) => [f.sub(c, b), b, 0, 1],
        (Some(a), None, Some(c)) => [a, f.sub(c, a), 1, 0],
        (Some(a), Some(b), None) => [a, f.neg(b), 1, f.neg(1)],
        (Some(a), Some(b), Some(c)) => {
            let cb = f.sub(c, b);
            let ac = f.sub(a, c);
            [f.mul(a, cb), f.mul(b, ac), cb, ac]
        }
        _ => unreachable!("three distinct points include at most one infinity"),
    }
}

/// The inversive (Möbius) plane 3-(q²+1, q+1, 1).
///
/// Points are the elements of GF(q²), numbered by their field encoding plus
/// one, and ∞ = q²+1. Blocks are the images of GF(q) ∪ {∞} under the
/// fractional linear maps; every uncovered triple seeds one new image.
pub fn inversive_plane(q: u64) -> Result<Design> {
    if q < 2 || crate::field::prime_power(q).is_none() {
        return Err(Error::InvalidParameter(format!("q = {q} is not a prime power >= 2")));
    }
    let field = GaloisField::prime_power(q * q)?;
    let v = (q * q + 1) as usize;
    let to_point = |p: ProjPoint| p.map_or(v, |e| e as usize + 1);
    let from_point = |x: usize| (x != v).then(|| (x - 1) as u16);
    let mut base: Vec<ProjPoint> = field.subfield(q).into_iter().map(Some).collect();
    base.push(None);

    let mut covered = vec![false; binomial(v as u64, 3) as usize];
    let mut blocks = Vec::new();
    for tri in subsets(v, 3) {
        if covered[lex_rank(&tri, v)] {
            continue;
        }
        let m = three_point_map(&field, from_point(tri[0]), from_point(tri[1]), from_point(tri[2]));
        let mut block: Vec<usize> = base.iter().map(|&z| to_point(mobius(&field, m, z))).collect();
        block.sort_unstable();
        for sub in subsets_of(&block, 3) {
            covered[lex_rank(&sub, v)] = true;
        }
        blocks.push(block);
    }
    blocks.sort();
    Ok(Design::from_parts(3, v, (q + 1) as usize, 1, blocks))
}

/// Search for a 3-(v,4,3) design.
///
/// First an exact cover over orbits of the cyclic group Z_{v−1} acting on
/// `[v−1]` with ∞ fixed; if that space is exhausted or the budget runs out,
/// a min-conflict local search over quadruples. `budget` bounds both phases
/// (search nodes, then local moves).
pub fn search_3design_v43(v: usize, seed: u64, budget: u64) -> Result<Design> {
    if v < 6 || v % 2 == 1 {
        return Err(Error::InvalidParameter(format!("3-(v,4,3) designs need even v >= 6, got {v}")));
    }
    if v == 6 {
        return complete_design(6, 4, 3);
    }
    let blocks = orbit_search(v, seed, budget)
        .or_else(|| local_search(v, seed, budget))
        .ok_or_else(|| Error::SearchFailed(format!("no 3-({v},4,3) design within budget {budget} (seed {seed})")))?;
    let mut blocks: Vec<Vec<usize>> = blocks.into_iter().map(|b| b.into_iter().map(|x| x + 1).collect()).collect();
    blocks.iter_mut().for_each(|b| b.sort_unstable());
    blocks.sort();
    let d = Design::from_parts(3, v, 4, 3, blocks);
    debug_assert!(d.validate().is_valid());
    Ok(d)
}

/// 0-based blocks, or `None`.
fn orbit_search(v: usize, seed: u64, budget: u64) -> Option<Vec<Vec<usize>>> {
    let n = v - 1;
    let inf = n;
    let act = |s: &[usize], g: usize| -> Vec<usize> {
        let mut out: Vec<usize> = s.iter().map(|&x| if x == inf { inf } else { (x + g) % n }).collect();
        out.sort_unstable();
        out
    };
    let orbits = |k: usize| -> Vec<Vec<Vec<usize>>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in subsets(v, k) {
            let s: Vec<usize> = s.iter().map(|x| x - 1).collect();
            if seen.contains(&s) {
                continue;
            }
            let mut orbit: Vec<Vec<usize>> = (0..n).map(|g| act(&s, g)).collect();
            orbit.sort();
            orbit.dedup();
            seen.extend(orbit.iter().cloned());
            out.push(orbit);
        }
        out
    };
    let quads = orbits(4);
    let triples = orbits(3);
    let mut triple_orbit = HashMap::new();
    for (i, o) in triples.iter().enumerate() {
        for s in o {
            triple_orbit.insert(s.clone(), i);
        }
    }
    // Each quadruple orbit covers every triple of a triple orbit equally often.
    let options: Vec<Vec<(usize, u32)>> = quads
        .iter()
        .map(|o| {
            let mut inc: HashMap<usize, u32> = HashMap::new();
            for q in o {
                for tr in subsets_of(q, 3) {
                    *inc.entry(triple_orbit[&tr]).or_default() += 1;
                }
            }
            let mut w: Vec<(usize, u32)> = inc.into_iter().map(|(i, c)| (i, c / triples[i].len() as u32)).collect();
            w.sort_unstable();
            w
        })
        .collect();
    let mut by_item = vec![Vec::new(); triples.len()];
    for (j, w) in options.iter().enumerate() {
        for &(i, _) in w {
            by_item[i].push(j);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for list in &mut by_item {
        list.shuffle(&mut rng);
    }

    struct Search<'a> {
        options: &'a [Vec<(usize, u32)>],
        by_item: &'a [Vec<usize>],
        need: Vec<u32>,
        chosen: Vec<bool>,
        banned: Vec<bool>,
        nodes: u64,
        budget: u64,
    }
    impl Search<'_> {
        fn fits(&self, j: usize) -> bool {
            !self.chosen[j] && !self.banned[j] && self.options[j].iter().all(|&(i, c)| self.need[i] >= c)
        }
        /// `Some(true)` solved, `Some(false)` exhausted, `None` out of budget.
        fn run(&mut self) -> Option<bool> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return None;
            }
            let mut best: Option<(usize, usize)> = None;
            for i in 0..self.need.len() {
                if self.need[i] == 0 {
                    continue;
                }
                let cnt = self.by_item[i].iter().filter(|&&j| self.fits(j)).count();
                if cnt == 0 {
                    return Some(false);
                }
                if best.is_none_or(|(_, c)| cnt < c) {
                    best = Some((i, cnt));
                }
            }
            let Some((item, _)) = best else { return Some(true) };
            let mut excluded = Vec::new();
            let mut result = Some(false);
            for &j in &self.by_item[item].to_vec() {
                if self.need[item] == 0 || !self.fits(j) {
                    continue;
                }
                self.chosen[j] = true;
                for &(i, c) in &self.options[j] {
                    self.need[i] -= c;
                }
                let r = self.run();
                if r == Some(true) {
                    return r;
                }
                for &(i, c) in &self.options[j] {
                    self.need[i] += c;
                }
                self.chosen[j] = false;
                if r.is_none() {
                    result = None;
                    break;
                }
                // Any solution containing j was just explored.
                self.banned[j] = true;
                excluded.push(j);
            }
            for j in excluded {
                self.banned[j] = false;
            }
            result
        }
    }

    let mut s = Search {
        options: &options,
        by_item: &by_item,
        need: vec![3; triples.len()],
        chosen: vec![false; quads.len()],
        banned: vec![false; quads.len()],
        nodes: 0,
        budget,
    };
    if s.run() != Some(true) {
        return None;
    }
    Some(s.chosen.iter().enumerate().filter(|(_, &c)| c).flat_map(|(j, _)| quads[j].iter().cloned()).collect())
}

/// Min-conflict local search: repeatedly pick an under-covered triple, add the
/// quadruple through it that overfills the fewest triples, then evict blocks
/// from overfilled triples. 0-based blocks, or `None`.
fn local_search(v: usize, seed: u64, budget: u64) -> Option<Vec<Vec<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let ntrip = binomial(v as u64, 3) as usize;
    let rank3 = |tr: &[usize]| lex_rank(&tr.iter().map(|x| x + 1).collect::<Vec<_>>(), v);
    let mut cnt = vec![0u32; ntrip];
    let mut through: Vec<Vec<Vec<usize>>> = vec![Vec::new(); ntrip];
    let mut design: HashSet<Vec<usize>> = HashSet::new();
    let mut deficient: Vec<usize> = (0..ntrip).collect();
    let mut pos: Vec<Option<usize>> = (0..ntrip).map(Some).collect();
    let all_triples: Vec<Vec<usize>> = subsets(v, 3).map(|s| s.iter().map(|x| x - 1).collect()).collect();

    fn set_count(r: usize, delta: i32, cnt: &mut [u32], deficient: &mut Vec<usize>, pos: &mut [Option<usize>]) {
        let old = cnt[r];
        let new = (old as i32 + delta) as u32;
        cnt[r] = new;
        if old < 3 && new >= 3 {
            let i = pos[r].take().expect("tracked");
            let last = deficient.pop().expect("nonempty");
            if last != r {
                deficient[i] = last;
                pos[last] = Some(i);
            }
        } else if old >= 3 && new < 3 {
            pos[r] = Some(deficient.len());
            deficient.push(r);
        }
    }

    let mut steps = 0u64;
    while !deficient.is_empty() && steps < budget {
        steps += 1;
        let tri = &all_triples[*deficient.choose(&mut rng).expect("nonempty")];
        let mut xs: Vec<usize> = (0..v).filter(|x| !tri.contains(x)).collect();
        xs.shuffle(&mut rng);
        let cands: Vec<Vec<usize>> = xs
            .iter()
            .map(|&x| {
                let mut q = tri.clone();
                q.push(x);
                q.sort_unstable();
                q
            })
            .filter(|q| !design.contains(q))
            .collect();
        if cands.is_empty() {
            continue;
        }
        let quad = if rng.gen_bool(0.05) {
            cands.choose(&mut rng).expect("nonempty").clone()
        } else {
            let mut best = &cands[0];
            let mut best_cost = u32::MAX;
            for q in &cands {
                let cost = subsets_of(q, 3).filter(|tr| cnt[rank3(tr)] >= 3).count() as u32;
                if cost < best_cost || (cost == best_cost && rng.gen_bool(0.3)) {
                    best = q;
                    best_cost = cost;
                }
                if best_cost == 0 {
                    break;
                }
            }
            best.clone()
        };
        design.insert(quad.clone());
        for tr in subsets_of(&quad, 3) {
            let r = rank3(&tr);
            set_count(r, 1, &mut cnt, &mut deficient, &mut pos);
            through[r].push(quad.clone());
        }
        for tr in subsets_of(&quad, 3) {
            let r = rank3(&tr);
            if cnt[r] > 3 {
                let others: Vec<&Vec<usize>> = through[r].iter().filter(|b| **b != quad).collect();
                let evict = (*others.choose(&mut rng).expect("overfilled triple has other blocks")).clone();
                design.remove(&evict);
                for tr2 in subsets_of(&evict, 3) {
                    let r2 = rank3(&tr2);
                    set_count(r2, -1, &mut cnt, &mut deficient, &mut pos);
                    through[r2].retain(|b| *b != evict);
                }
            }
        }
    }
    (deficient.is_empty() && cnt.iter().all(|&c| c == 3)).then(|| design.into_iter().collect())
}

/// Parse the text format: header `t v k lambda`, then one block per line.
/// `#` starts a comment. The result is validated.
pub fn parse_design(text: &str) -> Result<Design> {
    let d = parse_design_unchecked(text)?;
    let report = d.validate();
    if report.is_valid() {
        Ok(d)
    } else {
        Err(Error::Invalid(format!("{} design: {report}", d.name())))
    }
}

/// Parse without checking the design property.
pub fn parse_design_unchecked(text: &str) -> Result<Design> {
    let mut header: Option<(usize, usize, usize, u64)> = None;
    let mut blocks = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<u64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<u64>().map_err(|_| parse_err(line_no, format!("bad integer '{tok}'"))))
            .collect::<Result<_>>()?;
        match header {
            None => {
                let [t, v, k, l] = nums[..] else {
                    return Err(parse_err(line_no, "header must be 't v k lambda'"));
                };
                header = Some((t as usize, v as usize, k as usize, l));
            }
            Some((_, _, k, _)) => {
                if nums.len() != k {
                    return Err(parse_err(line_no, format!("block has {} points, expected {k}", nums.len())));
                }
                blocks.push(nums.into_iter().map(|x| x as usize).collect());
            }
        }
    }
    let (t, v, k, lambda) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    Ok(Design::from_parts(t, v, k, lambda, blocks))
}

pub fn load_design(path: impl AsRef<Path>) -> Result<Design> {
    parse_design(&std::fs::read_to_string(path)?)
}

pub fn save_design(d: &Design, path: impl AsRef<Path>) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "# {} design, b = {}", d.name(), d.b());
    text.push_str(&d.to_text());
    std::fs::write(path, text)?;
    Ok(())
}
