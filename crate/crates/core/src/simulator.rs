//! Byte-level run of the hotplug scheme: MDS-coded placement, delivery for an
//! active set, and per-user decoding.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::field::{make_field, FieldSpec, GaloisField};
use crate::hppda::{active_sets, HpPda, VerifyMode, ZetaMatch};
use crate::improver::RemovalPlan;
use crate::mds::{make_mds, MdsCode, SymbolBlock};
use crate::pda::Entry;
use crate::Rational;

/// Length header prepended to each file before splitting.
const HEADER: usize = 8;

/// Smallest binary field with more than `n` nonzero points.
pub fn default_field(n: usize) -> Result<GaloisField> {
    make_field(if n < 256 { FieldSpec::binary(8) } else { FieldSpec::binary(16) })
}

/// `[F, F']` code over [`default_field`].
pub fn default_mds(h: &HpPda) -> Result<MdsCode> {
    let p = h.params();
    make_mds(p.fp, p.f, &default_field(p.f)?)
}

/// Random files that fit `F'` subfiles of `len` bytes, with varying lengths.
pub fn random_files(n: usize, fp: usize, len: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = (fp * len).saturating_sub(HEADER);
    (0..n)
        .map(|_| {
            let size = rng.gen_range(cap.saturating_sub(len)..=cap);
            (0..size).map(|_| rng.gen()).collect()
        })
        .collect()
}

/// Coded subfile `C_{n,f}` (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubfileId {
    pub file: usize,
    pub row: usize,
}

impl fmt::Display for SubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C_{{{},{}}}", self.file, self.row)
    }
}

#[derive(Debug, Clone)]
pub struct ServerState {
    hppda: HpPda,
    mds: MdsCode,
    subfile_len: usize,
    files: Vec<Vec<u8>>,
    /// `coded[n - 1][f - 1] = C_{n,f}`.
    coded: Vec<Vec<SymbolBlock>>,
}

impl ServerState {
    pub fn hppda(&self) -> &HpPda {
        &self.hppda
    }

    pub fn mds(&self) -> &MdsCode {
        &self.mds
    }

    pub fn n_files(&self) -> usize {
        self.files.len()
    }

    pub fn file(&self, n: usize) -> &[u8] {
        &self.files[n - 1]
    }

    pub fn subfile_len(&self) -> usize {
        self.subfile_len
    }

    pub fn coded(&self, id: SubfileId) -> &SymbolBlock {
        &self.coded[id.file - 1][id.row - 1]
    }
}

#[derive(Debug, Clone)]
pub struct UserCache {
    pub user: usize,
    pub contents: BTreeMap<SubfileId, SymbolBlock>,
}

impl UserCache {
    /// Cached rows of `P`, the same for every file.
    pub fn rows(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.contents.keys().map(|id| id.row).collect();
        r.sort_unstable();
        r.dedup();
        r
    }
}

/// Split, encode and place the files. Each file is framed as an 8-byte
/// little-endian length followed by its bytes, zero-padded to `F' * len`.
pub fn place(h: &HpPda, mds: &MdsCode, files: &[Vec<u8>], len: usize) -> Result<(ServerState, Vec<UserCache>)> {
    let p = h.params();
    if mds.k() != p.fp || mds.n() != p.f {
        return Err(Error::Shape(format!("need an [{}, {}] code, got [{}, {}]", p.f, p.fp, mds.n(), mds.k())));
    }
    if files.is_empty() || len == 0 {
        return Err(Error::Shape("need at least one file and a positive subfile length".into()));
    }
    if mds.field().order() < 256 {
        return Err(Error::Shape("field must hold a byte per symbol".into()));
    }
    let mut coded = Vec::with_capacity(files.len());
    for (i, w) in files.iter().enumerate() {
        if w.len() + HEADER > p.fp * len {
            return Err(Error::Shape(format!(
                "file {} has {} bytes, more than F' * L - 8 = {}",
                i + 1,
                w.len(),
                (p.fp * len).saturating_sub(HEADER)
            )));
        }
        let mut framed = (w.len() as u64).to_le_bytes().to_vec();
        framed.extend_from_slice(w);
        framed.resize(p.fp * len, 0);
        let subfiles: Vec<SymbolBlock> = framed.chunks(len).map(SymbolBlock::from_bytes).collect();
        coded.push(mds.encode(&subfiles)?);
    }
    let server = ServerState { hppda: h.clone(), mds: mds.clone(), subfile_len: len, files: files.to_vec(), coded };
    let caches = (1..=p.k)
        .map(|user| {
            let contents = h
                .p()
                .star_rows(user)
                .into_iter()
                .flat_map(|row| (1..=files.len()).map(move |file| SubfileId { file, row }))
                .map(|id| (id, server.coded(id).clone()))
                .collect();
            UserCache { user, contents }
        })
        .collect();
    Ok((server, caches))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub subfile: SubfileId,
    /// Active user the term serves and its column in `B`.
    pub user: usize,
    pub column: usize,
    /// Row of `B` holding the label.
    pub b_row: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub label: u32,
    /// Summands in column order.
    pub terms: Vec<Term>,
    pub payload: SymbolBlock,
}

impl fmt::Display for Transmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sum: Vec<String> = self.terms.iter().map(|t| t.subfile.to_string()).collect();
        write!(f, "X_{} = {}", self.label, sum.join(" + "))
    }
}

#[derive(Debug, Clone)]
pub struct DeliverySession {
    /// Active users, ascending.
    pub active: Vec<usize>,
    /// `demands[j]` is the file of `active[j]`.
    pub demands: Vec<usize>,
    pub zeta: ZetaMatch,
    pub transmissions: Vec<Transmission>,
}

impl DeliverySession {
    pub fn demand_of(&self, user: usize) -> Option<usize> {
        self.active.iter().position(|&u| u == user).map(|j| self.demands[j])
    }

    /// Symbols sent over symbols per file.
    pub fn rate(&self, server: &ServerState) -> Rational {
        let sent: usize = self.transmissions.iter().map(|x| x.payload.len()).sum();
        let per_file = server.hppda.params().fp * server.subfile_len;
        Rational::new(sent as i128, per_file as i128)
    }

    pub fn trace(&self) -> String {
        self.transmissions.iter().map(|x| format!("{x}\n")).collect()
    }
}

/// Deliver to `active` with `demands` (paired entrywise). Labels in
/// `removal` are not transmitted.
pub fn deliver(
    server: &ServerState,
    active: &[usize],
    demands: &[usize],
    removal: Option<&RemovalPlan>,
) -> Result<DeliverySession> {
    let h = &server.hppda;
    if active.len() != demands.len() {
        return Err(Error::Shape(format!("{} active users but {} demands", active.len(), demands.len())));
    }
    if let Some(&d) = demands.iter().find(|&&d| d == 0 || d > server.n_files()) {
        return Err(Error::Shape(format!("demand {d} outside [1,{}]", server.n_files())));
    }
    let mut pairs: Vec<(usize, usize)> = active.iter().copied().zip(demands.iter().copied()).collect();
    pairs.sort_unstable();
    let (active, demands): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
    let zeta = h.find_zeta(&active)?;
    if zeta.tau != active {
        return Err(Error::Shape("active users must be distinct".into()));
    }
    let field = server.mds.field();
    let mut by_label: BTreeMap<u32, Vec<Term>> = BTreeMap::new();
    for column in 1..=h.params().kp {
        for b_row in 1..=h.params().fp {
            if let Entry::Label(label) = h.b().get(b_row, column) {
                if removal.is_some_and(|r| r.contains(label)) {
                    continue;
                }
                let subfile = SubfileId { file: demands[column - 1], row: zeta.rows[b_row - 1] };
                by_label.entry(label).or_default().push(Term { subfile, user: active[column - 1], column, b_row });
            }
        }
    }
    let transmissions = by_label
        .into_iter()
        .map(|(label, terms)| {
            let mut payload = SymbolBlock::zeros(server.subfile_len);
            for t in &terms {
                payload.add_assign(server.coded(t.subfile), field);
            }
            Transmission { label, terms, payload }
        })
        .collect();
    Ok(DeliverySession { active, demands, zeta, transmissions })
}

/// Recover the demanded file of `cache.user` from its cache and the
/// transmissions.
pub fn decode_user(cache: &UserCache, session: &DeliverySession, mds: &MdsCode) -> Result<Vec<u8>> {
    let user = cache.user;
    let fail = |reason: String| Error::DecodeFailure { user, reason };
    let want = session.demand_of(user).ok_or_else(|| fail("user is not active".into()))?;
    let field = mds.field();
    let mut have: BTreeMap<usize, SymbolBlock> = cache
        .contents
        .iter()
        .filter(|(id, _)| id.file == want)
        .map(|(id, block)| (id.row - 1, block.clone()))
        .collect();
    for x in &session.transmissions {
        let Some(mine) = x.terms.iter().find(|t| t.user == user) else { continue };
        let mut block = x.payload.clone();
        for other in x.terms.iter().filter(|t| t.user != user) {
            let known = cache
                .contents
                .get(&other.subfile)
                .ok_or_else(|| fail(format!("{} in X_{} is not cached", other.subfile, x.label)))?;
            block.sub_assign(known, field);
        }
        have.insert(mine.subfile.row - 1, block);
    }
    if have.len() < mds.k() {
        return Err(fail(format!("only {} of {} coded subfiles", have.len(), mds.k())));
    }
    let subfiles = mds.decode(&have).map_err(|e| fail(e.to_string()))?;
    let mut bytes = Vec::with_capacity(subfiles.len() * subfiles[0].len());
    for s in &subfiles {
        if s.0.iter().any(|&v| v > 255) {
            return Err(fail("decoded symbol exceeds a byte".into()));
        }
        bytes.extend(s.to_bytes());
    }
    let size = u64::from_le_bytes(bytes[..HEADER].try_into().expect("8 bytes")) as usize;
    if HEADER + size > bytes.len() {
        return Err(fail(format!("length header {size} exceeds payload")));
    }
    Ok(bytes[HEADER..HEADER + size].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandMode {
    /// Every vector in `[N]^{K'}`.
    All,
    /// This many seeded random vectors per active set.
    Sampled(usize),
    /// All when `N^{K'}` is at most the limit, else that many random ones.
    Auto(usize),
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub active: VerifyMode,
    pub demands: DemandMode,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { active: VerifyMode::Exhaustive, demands: DemandMode::Auto(10_000), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub sessions: u64,
    pub decodes: u64,
    pub failures: Vec<String>,
    pub failure_count: u64,
    /// Distinct measured rates over all sessions, ascending.
    pub rates: Vec<Rational>,
    pub expected_rate: Rational,
    pub seed: u64,
    pub sampled: bool,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0 && self.rates == [self.expected_rate]
    }

    pub fn measured_rate(&self) -> Option<Rational> {
        (self.rates.len() == 1).then(|| self.rates[0])
    }
}

fn demand_vectors(n: usize, kp: usize, mode: DemandMode, rng: &mut ChaCha8Rng) -> (Vec<Vec<usize>>, bool) {
    let total = (n as u64).checked_pow(kp as u32).unwrap_or(u64::MAX);
    let sampled = match mode {
        DemandMode::All => None,
        DemandMode::Sampled(c) => Some(c),
        DemandMode::Auto(limit) => (total > limit as u64).then_some(limit),
    };
    match sampled {
        Some(c) => ((0..c).map(|_| (0..kp).map(|_| rng.gen_range(1..=n)).collect()).collect(), true),
        None => {
            let mut out = Vec::with_capacity(total as usize);
            let mut d = vec![1; kp];
            loop {
                out.push(d.clone());
                let Some(i) = (0..kp).rev().find(|&i| d[i] < n) else { break };
                d[i] += 1;
                d[i + 1..].iter_mut().for_each(|x| *x = 1);
            }
            (out, false)
        }
    }
}

/// Run every selected session and decode at every active user, comparing
/// with the original bytes.
pub fn exhaustive_check(
    server: &ServerState,
    caches: &[UserCache],
    removal: Option<&RemovalPlan>,
    cfg: &CheckConfig,
) -> CheckReport {
    let h = &server.hppda;
    let p = h.params();
    let (sets, sets_sampled) = active_sets(p.k, p.kp, cfg.active);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jobs = Vec::new();
    let mut sampled = sets_sampled;
    for tau in &sets {
        let (ds, s) = demand_vectors(server.n_files(), p.kp, cfg.demands, &mut rng);
        sampled |= s;
        jobs.extend(ds.into_iter().map(|d| (tau.clone(), d)));
    }
    let outcomes: Vec<(Option<Rational>, Vec<String>)> = jobs
        .par_iter()
        .map(|(tau, d)| {
            let session = match deliver(server, tau, d, removal) {
                Ok(s) => s,
                Err(e) => return (None, vec![format!("I={tau:?} D={d:?}: {e}")]),
            };
            let errs = tau
                .iter()
                .filter_map(|&u| match decode_user(&caches[u - 1], &session, &server.mds) {
                    Ok(bytes) if bytes == server.file(session.demand_of(u).unwrap()) => None,
                    Ok(_) => Some(format!("I={tau:?} D={d:?}: user {u} decoded wrong bytes")),
                    Err(e) => Some(format!("I={tau:?} D={d:?}: {e}")),
                })
                .collect();
            (Some(session.rate(server)), errs)
        })
        .collect();
    let s_sent = removal.map_or(p.s, |r| r.s_reduced());
    let mut rates: Vec<Rational> = outcomes.iter().filter_map(|o| o.0).collect();
    rates.sort_unstable();
    rates.dedup();
    let mut failures = Vec::new();
    let mut failure_count = 0;
    for (_, errs) in outcomes {
        failure_count += errs.len() as u64;
        failures.extend(errs.into_iter().take(16usize.saturating_sub(failures.len())));
    }
    CheckReport {
        sessions: jobs.len() as u64,
        decodes: jobs.len() as u64 * p.kp as u64,
        failures,
        failure_count,
        rates,
        expected_rate: Rational::new(s_sent as i128, p.fp as i128),
        seed: cfg.seed,
        sampled,
    }
}

/// Number of sessions [`exhaustive_check`] runs in fully exhaustive mode.
pub fn exhaustive_sessions(k: usize, kp: usize, n: usize) -> u64 {
    binomial(k as u64, kp as u64) * (n as u64).pow(kp as u32)
}
