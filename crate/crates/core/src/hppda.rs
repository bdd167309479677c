//! Hotplug placement delivery arrays `(P, B)`.
//!
//! `P` is an `F x K` star/null placement array for all users and `B` a
//! `[K', F', Z', S]` PDA for the active users. For every active set `τ` of
//! size `K'` some `F'` rows `ζ` of `P` restricted to the columns of `τ` (in
//! increasing order) must carry the star pattern of `B`, up to a row
//! bijection.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinatorics::{binomial, intersect, lex_rank, subsets, subsets_of};
use crate::design::Design;
use crate::error::{parse_err, Error, Result};
use crate::pda::{man_pda, Entry, Grid, Pda};
use crate::report::{fmt_set, ValidationReport};

/// A star/null array with the same number of stars in every column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarArray {
    grid: Grid,
    z: usize,
}

impl StarArray {
    pub fn new(grid: Grid) -> Result<Self> {
        let mut rep = ValidationReport::default();
        for r in 1..=grid.rows() {
            for c in 1..=grid.cols() {
                if grid.get(r, c).label().is_some() {
                    rep.push("star array", format!("label at ({r},{c})"));
                }
            }
        }
        let z = if grid.cols() > 0 { grid.star_count(1) } else { 0 };
        for c in 2..=grid.cols() {
            if grid.star_count(c) != z {
                rep.push("C1", format!("column {c} has {} stars, column 1 has {z}", grid.star_count(c)));
            }
        }
        if !rep.is_valid() {
            return Err(Error::Invalid(format!("placement array: {rep}")));
        }
        Ok(StarArray { grid, z })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.grid.rows()
    }

    pub fn cols(&self) -> usize {
        self.grid.cols()
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn is_star(&self, row: usize, col: usize) -> bool {
        self.grid.get(row, col).is_star()
    }

    /// Rows with a star in column `col`.
    pub fn star_rows(&self, col: usize) -> Vec<usize> {
        (1..=self.rows()).filter(|&r| self.is_star(r, col)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HpParams {
    pub k: usize,
    pub kp: usize,
    pub f: usize,
    pub fp: usize,
    pub z: usize,
    pub zp: usize,
    pub s: usize,
}

impl fmt::Display for HpParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{},{},{},{})", self.k, self.kp, self.f, self.fp, self.z, self.zp, self.s)
    }
}

/// Row tag of a t-design delivery array: level `s`, copy `i`, subset `Y` of `[t]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TRow {
    pub s: usize,
    pub copy: usize,
    pub y: Vec<usize>,
}

/// Label tag of a t-design delivery array: `(U, i)` with `|U| = s + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TLabel {
    pub s: usize,
    pub copy: usize,
    pub u: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TSchemeLayout {
    pub design: Design,
    /// `a[s - 1]` copies at level `s`, for `s in 1..t`.
    pub a: Vec<u64>,
    pub rows: Vec<TRow>,
    /// Indexed by dense label minus one.
    pub labels: Vec<TLabel>,
}

impl TSchemeLayout {
    pub fn t(&self) -> usize {
        self.design.t()
    }

    pub fn a(&self, s: usize) -> u64 {
        self.a[s - 1]
    }

    /// Dense label of `(U, copy)` at level `|U| - 1`.
    pub fn label_of(&self, copy: usize, u: &[usize]) -> Option<u32> {
        self.labels.iter().position(|l| l.copy == copy && l.u == u).map(|p| p as u32 + 1)
    }

    /// All labels of subarray `(s, copy)`.
    pub fn subarray_labels(&self, s: usize, copy: usize) -> Vec<u32> {
        (0..self.labels.len())
            .filter(|&p| self.labels[p].s == s && self.labels[p].copy == copy)
            .map(|p| p as u32 + 1)
            .collect()
    }
}

/// How `ζ` is found for an active set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Construction {
    /// MAN placement with parameter `t`: `ζ` is the t-subsets of `τ`.
    Man { t: usize },
    /// t-design placement: `ζ` collects `𝒜_U^τ(i)`.
    TDesign(Box<TSchemeLayout>),
    /// Hand-built pair with a tabulated `ζ` per active set.
    Tabulated(BTreeMap<Vec<usize>, Vec<usize>>),
    /// No structure known; signature matching only.
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HpPda {
    p: StarArray,
    b: Pda,
    params: HpParams,
    construction: Construction,
}

/// A solution of the embedding for one active set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaMatch {
    /// Active set, sorted. Column `j` of `B` is user `tau[j - 1]`.
    pub tau: Vec<usize>,
    /// `rows[r - 1]` is the row of `P` playing row `r` of `B`.
    pub rows: Vec<usize>,
}

impl ZetaMatch {
    /// Sorted `ζ`.
    pub fn zeta(&self) -> Vec<usize> {
        let mut z = self.rows.clone();
        z.sort_unstable();
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finder {
    /// Use the construction's own `ζ` rule when it has one.
    ConstructionAware,
    /// Signature matching over all rows of `P`.
    Generic,
}

impl HpPda {
    /// Pair arrays, checking the parameter constraints `K >= K'`, `F >= F'`,
    /// `Z' <= Z < F'`. The embedding property is checked by [`verify_hppda`].
    pub fn new(p: StarArray, b: Pda, construction: Construction) -> Result<HpPda> {
        let params = HpParams { k: p.cols(), kp: b.k(), f: p.rows(), fp: b.f(), z: p.z(), zp: b.z(), s: b.s() };
        if params.k < params.kp || params.f < params.fp {
            return Err(Error::Invalid(format!("{params}: need K >= K' and F >= F'")));
        }
        if params.z >= params.fp {
            return Err(Error::ConfigRejected(format!("{params}: Z = {} must be below F' = {}", params.z, params.fp)));
        }
        if params.z < params.zp {
            return Err(Error::Invalid(format!("{params}: Z = {} is below Z' = {}", params.z, params.zp)));
        }
        Ok(HpPda { p, b, params, construction })
    }

    pub fn p(&self) -> &StarArray {
        &self.p
    }

    pub fn b(&self) -> &Pda {
        &self.b
    }

    pub fn params(&self) -> HpParams {
        self.params
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn tscheme(&self) -> Option<&TSchemeLayout> {
        match &self.construction {
            Construction::TDesign(l) => Some(l),
            _ => None,
        }
    }

    /// Copy with a different `ζ` strategy.
    pub fn with_construction(&self, construction: Construction) -> HpPda {
        HpPda { construction, ..self.clone() }
    }

    pub fn find_zeta(&self, tau: &[usize]) -> Result<ZetaMatch> {
        find_zeta(self, tau, Finder::ConstructionAware)
    }
}

fn check_tau(h: &HpPda, tau: &[usize]) -> Result<Vec<usize>> {
    let mut tau = tau.to_vec();
    tau.sort_unstable();
    tau.dedup();
    if tau.len() != h.params.kp || tau.iter().any(|&x| x == 0 || x > h.params.k) {
        return Err(Error::Shape(format!(
            "active set {} must be {} distinct users from [{}]",
            fmt_set(&tau),
            h.params.kp,
            h.params.k
        )));
    }
    Ok(tau)
}

/// Star pattern of a row over the given columns, as a bitmask.
fn signature(grid: &Grid, row: usize, cols: &[usize]) -> u128 {
    cols.iter().enumerate().fold(0u128, |m, (j, &c)| if grid.get(row, c).is_star() { m | (1 << j) } else { m })
}

/// Match the rows of `B` to rows of `P` among `candidates` by star signature
/// on `tau`. Rows sharing a signature are interchangeable, so this succeeds
/// exactly when some embedding exists within `candidates`.
fn match_rows(h: &HpPda, tau: &[usize], candidates: impl Iterator<Item = usize>) -> Option<Vec<usize>> {
    let mut pool: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
    for r in candidates {
        pool.entry(signature(h.p.grid(), r, tau)).or_default().push(r);
    }
    for list in pool.values_mut() {
        list.reverse();
    }
    let bcols: Vec<usize> = (1..=h.params.kp).collect();
    (1..=h.params.fp).map(|r| pool.get_mut(&signature(h.b.grid(), r, &bcols)).and_then(Vec::pop)).collect()
}

fn star_equal(h: &HpPda, tau: &[usize], rows: &[usize]) -> bool {
    let mut seen = rows.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == rows.len()
        && rows.iter().enumerate().all(|(br, &pr)| {
            tau.iter().enumerate().all(|(j, &c)| h.p.is_star(pr, c) == h.b.get(br + 1, j + 1).is_star())
        })
}

/// Blocks `A` with `A ∩ τ = U`, as 1-based positions in the design's block
/// order, which fixes the enumeration `𝒜_U^τ(1), 𝒜_U^τ(2), ...`.
pub fn blocks_matching(design: &Design, tau: &[usize], u: &[usize]) -> Vec<usize> {
    design.blocks().iter().enumerate().filter(|(_, b)| intersect(b, tau) == u).map(|(i, _)| i + 1).collect()
}

pub fn find_zeta(h: &HpPda, tau: &[usize], finder: Finder) -> Result<ZetaMatch> {
    let tau = check_tau(h, tau)?;
    let fail = || Error::NotAnHpPda(tau.clone());
    let rows = match (&h.construction, finder) {
        (_, Finder::Generic) | (Construction::Generic, _) => match_rows(h, &tau, 1..=h.params.f).ok_or_else(fail)?,
        (Construction::Man { t }, _) => subsets(h.params.kp, *t)
            .map(|y| {
                let image: Vec<usize> = y.iter().map(|&j| tau[j - 1]).collect();
                lex_rank(&image, h.params.k) + 1
            })
            .collect(),
        (Construction::TDesign(layout), _) => layout
            .rows
            .iter()
            .map(|row| {
                let u: Vec<usize> = row.y.iter().map(|&j| tau[j - 1]).collect();
                blocks_matching(&layout.design, &tau, &u).get(row.copy - 1).copied().ok_or_else(fail)
            })
            .collect::<Result<_>>()?,
        (Construction::Tabulated(table), _) => {
            let zeta = table.get(&tau).ok_or_else(fail)?;
            match_rows(h, &tau, zeta.iter().copied()).ok_or_else(fail)?
        }
    };
    if !star_equal(h, &tau, &rows) {
        return Err(fail());
    }
    Ok(ZetaMatch { tau, rows })
}

/// Check a proposed `ζ` for `τ`; returns the row matching when it embeds `B`.
pub fn check_zeta(h: &HpPda, tau: &[usize], zeta: &[usize]) -> Result<ZetaMatch> {
    let tau = check_tau(h, tau)?;
    if zeta.len() != h.params.fp || zeta.iter().any(|&r| r == 0 || r > h.params.f) {
        return Err(Error::NotAnHpPda(tau));
    }
    let rows = match_rows(h, &tau, zeta.iter().copied()).ok_or_else(|| Error::NotAnHpPda(tau.clone()))?;
    Ok(ZetaMatch { tau, rows })
}

/// Active sets examined by a verification run.
pub fn active_sets(k: usize, kp: usize, mode: VerifyMode) -> (Vec<Vec<usize>>, bool) {
    let total = binomial(k as u64, kp as u64);
    match mode {
        VerifyMode::Sampled { count, seed } if (count as u64) < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks = sample(&mut rng, total as usize, count).into_vec();
            picks.sort_unstable();
            (picks.into_iter().map(|r| crate::combinatorics::lex_unrank(r, k, kp)).collect(), true)
        }
        _ => (subsets(k, kp).collect(), false),
    }
}

pub fn verify_hppda(h: &HpPda, mode: VerifyMode) -> ValidationReport {
    verify_hppda_with(h, mode, Finder::ConstructionAware)
}

pub fn verify_hppda_with(h: &HpPda, mode: VerifyMode, finder: Finder) -> ValidationReport {
    let mut rep = crate::pda::validate_pda(&h.b);
    rep.checked = 0;
    let (sets, sampled) = active_sets(h.params.k, h.params.kp, mode);
    let failures: Vec<Vec<usize>> = sets.par_iter().filter(|tau| find_zeta(h, tau, finder).is_err()).cloned().collect();
    for tau in failures {
        rep.push("embedding", format!("no ζ for τ = {}", fmt_set(&tau)));
    }
    rep.checked = sets.len() as u64;
    rep.sampled = sampled;
    rep
}

/// MAN pair: `B` = MAN PDA on `K'` users, `P` = star skeleton of the MAN PDA
/// on `K` users.
pub fn man_hppda(k: usize, kp: usize, t: usize) -> Result<HpPda> {
    if !(1 <= t && t <= kp && kp <= k) {
        return Err(Error::InvalidParameter(format!("need 1 <= t <= K' <= K, got K={k} K'={kp} t={t}")));
    }
    let c = |n: usize, r: usize| binomial(n as u64, r as u64) as usize;
    let (fp, z) = (c(kp, t), c(k - 1, t - 1));
    if z >= fp {
        return Err(Error::ConfigRejected(format!("MAN pair K={k} K'={kp} t={t} has Z = {z} >= F' = {fp}, so M >= N")));
    }
    let b = man_pda(kp, t)?;
    let p = StarArray::new(man_pda(k, t).map(|m| m.grid().star_skeleton()).unwrap_or_else(|_| {
        // t = K: the single row is all stars.
        Grid::filled(1, k, Entry::Star)
    }))?;
    HpPda::new(p, b, Construction::Man { t })
}

/// Choice of copies `a_s` for a t-design placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TSchemeConfig {
    pub design: Design,
    /// `a[s - 1]` for `s in 1..t`.
    pub a: Vec<u64>,
}

impl TSchemeConfig {
    pub fn new(design: Design, a: Vec<u64>) -> Self {
        TSchemeConfig { design, a }
    }

    /// `|𝓡| = Σ a_s C(t, s)`.
    pub fn r_size(&self) -> u64 {
        let t = self.design.t() as u64;
        self.a.iter().enumerate().map(|(i, &a)| a * binomial(t, i as u64 + 1)).sum()
    }

    /// Check `0 <= a_s <= λ_s^t` and `|𝓡| > λ_1`.
    pub fn check(&self) -> Result<()> {
        let t = self.design.t();
        if t < 2 {
            return Err(Error::ConfigRejected("t-design placement needs t >= 2".into()));
        }
        if self.a.len() != t - 1 {
            return Err(Error::ConfigRejected(format!("expected {} copy counts a_1..a_{}", t - 1, t - 1)));
        }
        let counts = self.design.counts()?;
        for s in 1..t {
            if self.a[s - 1] > counts.lambda_t(s) {
                return Err(Error::ConfigRejected(format!(
                    "a_{s} = {} exceeds λ_{s}^{t} = {}",
                    self.a[s - 1],
                    counts.lambda_t(s)
                )));
            }
        }
        if self.r_size() <= counts.lambda(1) {
            return Err(Error::ConfigRejected(format!(
                "|R| = {} must exceed λ_1 = {}",
                self.r_size(),
                counts.lambda(1)
            )));
        }
        Ok(())
    }
}

fn subset_name(u: &[usize], t: usize) -> String {
    let parts: Vec<String> = u.iter().map(|x| x.to_string()).collect();
    parts.join(if t < 10 { "" } else { "." })
}

/// The t-design pair. `P` is the block-point incidence in block order. Rows of
/// `B` run over levels `s = t−1` down to 1, copies `i` ascending, then the
/// s-subsets `Y` of `[t]` lexicographically; entry `((Y,i), j)` is a star
/// for `j ∈ Y`, else the label `(Y ∪ {j}, i)`. Labels are numbered in order
/// of first appearance, row by row.
pub fn tdesign_hppda(cfg: &TSchemeConfig) -> Result<HpPda> {
    cfg.check()?;
    let d = &cfg.design;
    let t = d.t();
    let mut rows = Vec::new();
    for s in (1..t).rev() {
        for copy in 1..=cfg.a[s - 1] as usize {
            for y in subsets(t, s) {
                rows.push(TRow { s, copy, y });
            }
        }
    }
    let mut labels: Vec<TLabel> = Vec::new();
    let mut grid_rows = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut cells = Vec::with_capacity(t);
        for j in 1..=t {
            if row.y.binary_search(&j).is_ok() {
                cells.push(Entry::Star);
                continue;
            }
            let mut u = row.y.clone();
            u.push(j);
            u.sort_unstable();
            let tag = TLabel { s: row.s, copy: row.copy, u };
            let id = match labels.iter().position(|l| *l == tag) {
                Some(p) => p + 1,
                None => {
                    labels.push(tag);
                    labels.len()
                }
            };
            cells.push(Entry::Label(id as u32));
        }
        grid_rows.push(cells);
    }
    let names = labels.iter().map(|l| format!("({},{})", subset_name(&l.u, t), l.copy)).collect();
    let b = Pda::with_names(Grid::from_rows(grid_rows)?, names)?;
    let p_rows: Vec<Vec<Entry>> = d
        .blocks()
        .iter()
        .map(|blk| (1..=d.v()).map(|i| if blk.binary_search(&i).is_ok() { Entry::Star } else { Entry::Null }).collect())
        .collect();
    let p = StarArray::new(Grid::from_rows(p_rows)?)?;
    let layout = TSchemeLayout { design: d.clone(), a: cfg.a.clone(), rows, labels };
    HpPda::new(p, b, Construction::TDesign(Box::new(layout)))
}

/// An HpPDA plus an optional removal set, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub hppda: HpPda,
    pub removal: Option<Vec<u32>>,
}

fn join(xs: &[usize], sep: &str) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

impl Bundle {
    /// Text format:
    ///
    /// ```text
    /// hppda K K' F F' Z Z' S
    /// construction man <t> | tdesign <a_1> .. <a_{t-1}> | tabulated | generic
    /// design <t> <v> <k> <lambda> <b>      (tdesign only, then b block lines)
    /// P
    /// <grid>
    /// B
    /// <grid>
    /// names <label names>                   (optional)
    /// zeta <tau> <zeta>                     (tabulated, comma separated)
    /// removal <labels>                      (optional)
    /// ```
    pub fn to_text(&self) -> String {
        let h = &self.hppda;
        let p = h.params;
        let mut out = format!("hppda {} {} {} {} {} {} {}\n", p.k, p.kp, p.f, p.fp, p.z, p.zp, p.s);
        match &h.construction {
            Construction::Man { t } => out.push_str(&format!("construction man {t}\n")),
            Construction::TDesign(l) => {
                out.push_str(&format!(
                    "construction tdesign {}\n",
                    join(&l.a.iter().map(|&x| x as usize).collect::<Vec<_>>(), " ")
                ));
                let d = &l.design;
                out.push_str(&format!("design {} {} {} {} {}\n", d.t(), d.v(), d.k(), d.lambda(), d.b()));
                for blk in d.blocks() {
                    out.push_str(&join(blk, " "));
                    out.push('\n');
                }
            }
            Construction::Tabulated(_) => out.push_str("construction tabulated\n"),
            Construction::Generic => out.push_str("construction generic\n"),
        }
        out.push_str("P\n");
        out.push_str(&h.p.grid().to_text());
        out.push_str("B\n");
        out.push_str(&h.b.grid().to_text());
        if h.b.label_names().iter().enumerate().any(|(i, n)| *n != (i + 1).to_string()) {
            out.push_str(&format!("names {}\n", h.b.label_names().join(" ")));
        }
        if let Construction::Tabulated(table) = &h.construction {
            for (tau, zeta) in table {
                out.push_str(&format!("zeta {} {}\n", join(tau, ","), join(zeta, ",")));
            }
        }
        if let Some(r) = &self.removal {
            let mut r = r.clone();
            r.sort_unstable();
            out.push_str(&format!("removal {}\n", join(&r.iter().map(|&x| x as usize).collect::<Vec<_>>(), " ")));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Bundle> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        let mut declared: Option<(usize, Vec<usize>)> = None;
        let mut construction_kw: Option<(usize, Vec<String>)> = None;
        let mut design: Option<Design> = None;
        let mut p_grid = None;
        let mut b_grid = None;
        let mut names: Option<Vec<String>> = None;
        let mut table = BTreeMap::new();
        let mut removal = None;
        let ints = |no: usize, toks: &[&str]| -> Result<Vec<usize>> {
            toks.iter().map(|t| t.parse::<usize>().map_err(|_| parse_err(no, format!("bad integer '{t}'")))).collect()
        };
        let list = |no: usize, tok: &str| -> Result<Vec<usize>> {
            tok.split(',').map(|t| t.parse::<usize>().map_err(|_| parse_err(no, format!("bad list '{tok}'")))).collect()
        };
        while let Some((no, raw)) = lines.next() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "hppda" => {
                    let v = ints(no, &toks[1..])?;
                    if v.len() != 7 {
                        return Err(parse_err(no, "hppda header needs 7 parameters"));
                    }
                    declared = Some((no, v));
                }
                "construction" => construction_kw = Some((no, toks[1..].iter().map(|s| s.to_string()).collect())),
                "design" => {
                    let v = ints(no, &toks[1..])?;
                    let [t, vv, k, lambda, b] = v[..] else {
                        return Err(parse_err(no, "design line needs 't v k lambda b'"));
                    };
                    let mut blocks = Vec::with_capacity(b);
                    while blocks.len() < b {
                        let (bno, braw) = lines.next().ok_or_else(|| parse_err(no, format!("expected {b} blocks")))?;
                        let bl = braw.split('#').next().unwrap_or("").trim();
                        if bl.is_empty() {
                            continue;
                        }
                        let blk = ints(bno, &bl.split_whitespace().collect::<Vec<_>>())?;
                        if blk.len() != k {
                            return Err(parse_err(bno, format!("block has {} points, expected {k}", blk.len())));
                        }
                        blocks.push(blk);
                    }
                    design = Some(Design::new(t, vv, k, lambda as u64, blocks)?);
                }
                "P" => p_grid = Some(Grid::parse_lines(&mut lines)?),
                "B" => b_grid = Some(Grid::parse_lines(&mut lines)?),
                "names" => names = Some(toks[1..].iter().map(|s| s.to_string()).collect()),
                "zeta" => {
                    if toks.len() != 3 {
                        return Err(parse_err(no, "zeta line needs '<tau> <zeta>'"));
                    }
                    let mut tau = list(no, toks[1])?;
                    let mut zeta = list(no, toks[2])?;
                    tau.sort_unstable();
                    zeta.sort_unstable();
                    table.insert(tau, zeta);
                }
                "removal" => removal = Some(ints(no, &toks[1..])?.into_iter().map(|x| x as u32).collect()),
                other => return Err(parse_err(no, format!("unknown section '{other}'"))),
            }
        }
        let p_grid = p_grid.ok_or_else(|| parse_err(0, "missing P grid"))?;
        let b_grid = b_grid.ok_or_else(|| parse_err(0, "missing B grid"))?;
        let b = match names {
            Some(n) => Pda::with_names(b_grid, n)?,
            None => Pda::new(b_grid)?,
        };
        let p = StarArray::new(p_grid)?;
        let (cno, ckw) = construction_kw.unwrap_or((0, vec!["generic".into()]));
        let built = match ckw.first().map(String::as_str) {
            Some("man") => {
                let t = ckw.get(1).and_then(|x| x.parse().ok()).ok_or_else(|| parse_err(cno, "man needs t"))?;
                Some(man_hppda(p.cols(), b.k(), t)?)
            }
            Some("tdesign") => {
                let a = ckw[1..]
                    .iter()
                    .map(|x| x.parse::<u64>().map_err(|_| parse_err(cno, format!("bad a_s '{x}'"))))
                    .collect::<Result<Vec<_>>>()?;
                let d = design.take().ok_or_else(|| parse_err(cno, "tdesign bundle needs a design section"))?;
                Some(tdesign_hppda(&TSchemeConfig::new(d, a))?)
            }
            Some("tabulated") | Some("generic") => None,
            _ => return Err(parse_err(cno, "construction must be man, tdesign, tabulated or generic")),
        };
        let hppda = match built {
            Some(h) => {
                if h.p.grid() != p.grid() || h.b.grid() != b.grid() {
                    return Err(Error::Invalid("arrays differ from the declared construction".into()));
                }
                h
            }
            None => {
                let c = if ckw[0] == "tabulated" { Construction::Tabulated(table) } else { Construction::Generic };
                HpPda::new(p, b, c)?
            }
        };
        if let Some((no, v)) = declared {
            let q = hppda.params;
            if v != [q.k, q.kp, q.f, q.fp, q.z, q.zp, q.s] {
                return Err(Error::Invalid(format!("line {no}: declared parameters differ from arrays {q}")));
            }
        }
        Ok(Bundle { hppda, removal })
    }
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<Bundle> {
    Bundle::parse(&std::fs::read_to_string(path)?)
}

pub fn save_bundle(bundle: &Bundle, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, bundle.to_text())?;
    Ok(())
}

/// `U ⊆ τ` subsets of size `s`, mapped back to positions in `[t]`.
pub fn positions_in(tau: &[usize], u: &[usize]) -> Vec<usize> {
    u.iter().map(|x| tau.binary_search(x).expect("subset of tau") + 1).collect()
}

/// All `(s, U)` with `U ⊆ τ`, `|U| = s`, for `s in 1..t`.
pub fn level_subsets(tau: &[usize]) -> Vec<(usize, Vec<usize>)> {
    (1..tau.len()).flat_map(|s| subsets_of(tau, s).map(move |u| (s, u))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn man_6_3_1_zeta_is_tau() {
        let h = man_hppda(6, 3, 1).unwrap();
        assert_eq!(h.params(), HpParams { k: 6, kp: 3, f: 6, fp: 3, z: 1, zp: 1, s: 3 });
        for tau in subsets(6, 3) {
            assert_eq!(h.find_zeta(&tau).unwrap().zeta(), tau);
        }
        assert!(verify_hppda(&h, VerifyMode::Exhaustive).is_valid());
    }

    #[test]
    fn man_6_4_2_pair() {
        let h = man_hppda(6, 4, 2).unwrap();
        assert_eq!(h.params(), HpParams { k: 6, kp: 4, f: 15, fp: 6, z: 5, zp: 3, s: 4 });
        let m = h.find_zeta(&[1, 4, 5, 6]).unwrap();
        assert_eq!(m.rows, vec![3, 4, 5, 13, 14, 15]);
        assert!(verify_hppda(&h, VerifyMode::Exhaustive).is_valid());
    }

    #[test]
    fn man_suite() {
        let mut built = 0;
        for k in 2..=8 {
            for kp in 2..=k {
                for t in 1..=kp {
                    match man_hppda(k, kp, t) {
                        Ok(h) => {
                            built += 1;
                            assert!(verify_hppda(&h, VerifyMode::Exhaustive).is_valid());
                            assert!(verify_hppda_with(&h, VerifyMode::Exhaustive, Finder::Generic).is_valid());
                            assert!(h.params().z >= h.params().zp);
                        }
                        Err(Error::ConfigRejected(_)) => {}
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
        assert!(built > 20);
    }

    #[test]
    fn full_active_set_is_trivial() {
        let h = man_hppda(5, 5, 2).unwrap();
        let m = h.find_zeta(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(m.rows, (1..=10).collect::<Vec<_>>());
    }

    fn pair8(a2: u64, a1: u64) -> HpPda {
        tdesign_hppda(&TSchemeConfig::new(catalog::design_3_8_4_1(), vec![a1, a2])).unwrap()
    }

    #[test]
    fn design_8_parameters() {
        let p = |h: HpPda| {
            let q = h.params();
            (q.k, q.kp, q.f, q.fp, q.z, q.zp, q.s)
        };
        assert_eq!(p(pair8(2, 1)), (8, 3, 14, 9, 7, 5, 5));
        assert_eq!(p(pair8(1, 2)), (8, 3, 14, 9, 7, 4, 7));
        assert_eq!(p(pair8(2, 2)), (8, 3, 14, 12, 7, 6, 8));
    }

    #[test]
    fn tdesign_labels_numbered_by_first_use() {
        let h = pair8(2, 1);
        let text = h.b().grid().to_text();
        assert_eq!(text, "3 9\n* * 1\n* 1 *\n1 * *\n* * 2\n* 2 *\n2 * *\n* 3 4\n3 * 5\n4 5 *\n");
        assert_eq!(h.b().label_name(3), "(12,1)");
    }

    #[test]
    fn design_8_zeta() {
        let h = pair8(2, 1);
        let d = h.tscheme().unwrap().design.clone();
        let name = |r: usize| d.blocks()[r - 1].iter().map(|x| x.to_string()).collect::<String>();
        let m = h.find_zeta(&[2, 6, 8]).unwrap();
        let got: Vec<String> = m.rows.iter().map(|&r| name(r)).collect();
        assert_eq!(got, ["1256", "1278", "5678", "2367", "2358", "1368", "1234", "3456", "3478"]);
        let names = |u: &[usize]| -> Vec<String> { blocks_matching(&d, &[2, 6, 8], u).into_iter().map(name).collect() };
        assert_eq!(names(&[2, 6]), ["1256", "2367"]);
        assert_eq!(names(&[8]), ["3478", "1458"]);
    }

    #[test]
    fn blocks_matching_sizes() {
        let d = catalog::design_3_8_4_1();
        let c = d.counts().unwrap();
        for tau in subsets(8, 3) {
            for (s, u) in level_subsets(&tau) {
                assert_eq!(blocks_matching(&d, &tau, &u).len() as u64, c.lambda_t(s));
            }
        }
    }

    #[test]
    fn tdesign_verifies_and_subarrays_are_man() {
        for (a2, a1) in [(2, 1), (1, 2), (2, 2)] {
            let h = pair8(a2, a1);
            assert!(verify_hppda(&h, VerifyMode::Exhaustive).is_valid());
            assert!(verify_hppda_with(&h, VerifyMode::Exhaustive, Finder::Generic).is_valid());
            let l = h.tscheme().unwrap();
            let t = l.t();
            let mut seen = std::collections::HashSet::new();
            for s in 1..t {
                for copy in 1..=l.a(s) as usize {
                    let rows: Vec<usize> =
                        (0..l.rows.len()).filter(|&r| l.rows[r].s == s && l.rows[r].copy == copy).collect();
                    let sub =
                        Grid::from_rows(rows.iter().map(|&r| h.b().grid().row(r + 1).to_vec()).collect()).unwrap();
                    // Relabel densely so the sub-array can be validated on its own.
                    let labels = l.subarray_labels(s, copy);
                    let mut g = sub.clone();
                    for r in 1..=g.rows() {
                        for c in 1..=g.cols() {
                            if let Entry::Label(x) = g.get(r, c) {
                                let pos = labels.iter().position(|&y| y == x).unwrap();
                                g.set(r, c, Entry::Label(pos as u32 + 1));
                            }
                        }
                    }
                    let p = Pda::new(g).unwrap();
                    let st = p.stats();
                    assert_eq!(st.g, Some(s + 1));
                    assert_eq!(st.z as u64, binomial(t as u64 - 1, s as u64 - 1));
                    assert_eq!(st.s as u64, binomial(t as u64, s as u64 + 1));
                    for x in labels {
                        assert!(seen.insert(x));
                    }
                }
            }
        }
    }

    #[test]
    fn design_8_b_is_irregular() {
        let st = pair8(2, 1).b().stats();
        assert_eq!(st.g, None);
        assert_eq!(st.histogram, BTreeMap::from([(2, 3), (3, 2)]));
    }

    #[test]
    fn rejected_configs() {
        let d = catalog::design_3_8_4_1();
        assert!(matches!(tdesign_hppda(&TSchemeConfig::new(d.clone(), vec![1, 1])), Err(Error::ConfigRejected(_))));
        assert!(matches!(tdesign_hppda(&TSchemeConfig::new(d, vec![3, 2])), Err(Error::ConfigRejected(_))));
        assert!(matches!(man_hppda(6, 3, 2), Err(Error::ConfigRejected(_))));
    }

    #[test]
    fn bundle_roundtrip() {
        for h in [man_hppda(6, 4, 2).unwrap(), pair8(2, 1), catalog::tabulated_6_5().hppda] {
            let b = Bundle { hppda: h, removal: Some(vec![2, 1]) };
            let back = Bundle::parse(&b.to_text()).unwrap();
            assert_eq!(back.hppda, b.hppda);
            assert_eq!(back.removal, Some(vec![1, 2]));
        }
    }

    #[test]
    fn corrupted_bundle_is_rejected() {
        let text = Bundle { hppda: man_hppda(6, 4, 2).unwrap(), removal: None }.to_text();
        let broken = text.replacen("P\n6 15\n* * - - - -", "P\n6 15\n* - * - - -", 1);
        assert!(matches!(Bundle::parse(&broken), Err(Error::Invalid(_))));
        assert!(matches!(Bundle::parse("hppda 1 2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn tabulated_zeta_table() {
        let h = catalog::tabulated_6_5().hppda;
        assert_eq!(h.params(), HpParams { k: 6, kp: 5, f: 12, fp: 5, z: 4, zp: 2, s: 9 });
        assert_eq!(h.find_zeta(&[1, 2, 3, 4, 5]).unwrap().zeta(), vec![1, 4, 7, 9, 10]);
        assert_eq!(h.find_zeta(&[1, 2, 4, 5, 6]).unwrap().rows, vec![2, 4, 5, 10, 11]);
        assert!(verify_hppda(&h, VerifyMode::Exhaustive).is_valid());
        assert!(verify_hppda_with(&h, VerifyMode::Exhaustive, Finder::Generic).is_valid());
        assert!(check_zeta(&h, &[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5]).is_err());
    }
}
