use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use hotplug_core::bounds::{
    baseline_points, cutset_bound, decimal, gnuplot_script, improved_man_points, improved_tscheme_points,
    lower_envelope, mt_points, optimal_points_inversive, optimal_points_v43, ratio_str, tscheme_points, yu_bound,
    MemoryRatePoint,
};
use hotplug_core::catalog;
use hotplug_core::combinatorics::{binomial, subsets};
use hotplug_core::design::{load_design, validate_design, Design};
use hotplug_core::hppda::{
    load_bundle, man_hppda, save_bundle, tdesign_hppda, verify_hppda, verify_hppda_with, Bundle, Construction, Finder,
    HpPda, TSchemeConfig, VerifyMode,
};
use hotplug_core::improver::{best_removal, plan_for, reduce_b, RemovalPlan};
use hotplug_core::pda::{validate_grid, Grid, Pda};
use hotplug_core::simulator::{
    decode_user, default_mds, deliver, exhaustive_check, place, random_files, CheckConfig, DemandMode,
};
use hotplug_core::{Error, Rational};

use crate::{CatalogArgs, ConstructArgs, SimulateArgs, TradeoffArgs, VerifyArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");

// Stdout writes that tolerate a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Bad flags or inputs; exits with 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// 2 for usage and parse errors, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some()
        || e.downcast_ref::<clap::Error>().is_some()
        || e.chain().any(|c| c.is::<std::io::Error>())
    {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Parse { .. } | Error::InvalidParameter(_) | Error::Shape(_) | Error::Io(_)) => 2,
        _ => 1,
    }
}

fn rate_str(x: &Rational) -> String {
    format!("{} ({})", ratio_str(x), decimal(x))
}

fn set_str(xs: impl IntoIterator<Item = impl fmt::Display>) -> String {
    let v: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn load_design_arg(arg: &str) -> Result<Design> {
    if Path::new(arg).exists() {
        Ok(load_design(arg).with_context(|| format!("reading design {arg}"))?)
    } else {
        Ok(catalog::by_name(arg)?)
    }
}

fn removal_for(bundle: &Bundle) -> Result<RemovalPlan> {
    Ok(match &bundle.removal {
        Some(labels) => plan_for(&bundle.hppda, labels.iter().copied())?,
        None => best_removal(&bundle.hppda)?,
    })
}

pub fn construct(a: &ConstructArgs) -> Result<u8> {
    let h = if a.man {
        let (Some(k), Some(kp), Some(t)) = (a.k, a.kp, a.t) else {
            return Err(usage("--man needs -K, -Kp and -t"));
        };
        man_hppda(k, kp, t)?
    } else {
        let d = load_design_arg(a.design.as_deref().expect("clap requires --design"))?;
        tdesign_hppda(&TSchemeConfig::new(d, a.a.clone()))?
    };
    let plan = best_removal(&h)?;
    let p = h.params();
    outln!("{} {} {} {} {} {} {} {}", p.k, p.kp, p.f, p.fp, p.z, p.zp, p.s, plan.len());
    if let Some(out) = &a.out {
        let bundle = Bundle { hppda: h, removal: a.improve.then(|| plan.label_vec()) };
        save_bundle(&bundle, out).with_context(|| format!("writing {}", out.display()))?;
        eprintln!("wrote {}", out.display());
    }
    Ok(0)
}

enum FileKind {
    Bundle,
    Design,
    Grid,
}

fn sniff(text: &str) -> Result<FileKind> {
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .ok_or_else(|| usage("empty input"))?;
    if first.starts_with("hppda") {
        return Ok(FileKind::Bundle);
    }
    match first.split_whitespace().count() {
        4 => Ok(FileKind::Design),
        2 => Ok(FileKind::Grid),
        _ => Err(usage("unrecognised file: expected a bundle, a design, or a PDA grid")),
    }
}

pub fn verify(a: &VerifyArgs) -> Result<u8> {
    let text = std::fs::read_to_string(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    outln!("hotplug {VERSION} verify seed={}", a.seed);
    let mode = match a.sampled {
        Some(count) => VerifyMode::Sampled { count, seed: a.seed },
        None => VerifyMode::Exhaustive,
    };
    let (ok, report) = match sniff(&text)? {
        FileKind::Design => {
            let d = hotplug_core::design::parse_design_unchecked(&text)?;
            let rep = validate_design(&d);
            outln!("design {}: b={}, {}", d.name(), d.b(), rep);
            (
                rep.is_valid(),
                json!({"kind": "design", "name": d.name(), "b": d.b(), "valid": rep.is_valid(),
                "checked": rep.checked, "sampled": rep.sampled, "violations": violations(&rep)}),
            )
        }
        FileKind::Grid => {
            let g = Grid::parse(&text)?;
            let rep = validate_grid(&g);
            outln!("pda {}x{}: {}", g.rows(), g.cols(), rep);
            let mut j = json!({"kind": "pda", "valid": rep.is_valid(), "violations": violations(&rep)});
            if rep.is_valid() {
                let st = Pda::new(g)?.stats();
                outln!(
                    "[K,F,Z,S] = [{},{},{},{}], regularity {}",
                    st.k,
                    st.f,
                    st.z,
                    st.s,
                    st.g.map_or("irregular".to_string(), |g| g.to_string())
                );
                j["params"] = json!([st.k, st.f, st.z, st.s]);
                j["g"] = json!(st.g);
            }
            (rep.is_valid(), j)
        }
        FileKind::Bundle => verify_bundle(&Bundle::parse(&text)?, mode)?,
    };
    outln!("{report}");
    Ok(if ok { 0 } else { 1 })
}

fn violations(rep: &hotplug_core::report::ValidationReport) -> Vec<String> {
    rep.violations.iter().map(|v| format!("{}: {}", v.rule, v.witness)).collect()
}

fn construction_name(h: &HpPda) -> String {
    match h.construction() {
        Construction::Man { t } => format!("man t={t}"),
        Construction::TDesign(l) => format!("tdesign {} a={:?}", l.design.name(), l.a),
        Construction::Tabulated(_) => "tabulated".into(),
        Construction::Generic => "generic".into(),
    }
}

fn verify_bundle(b: &Bundle, mode: VerifyMode) -> Result<(bool, serde_json::Value)> {
    let h = &b.hppda;
    let p = h.params();
    outln!("bundle {} {}", p, construction_name(h));
    let aware = verify_hppda(h, mode);
    let generic = verify_hppda_with(h, mode, Finder::Generic);
    outln!("embedding (construction finder): {aware}");
    outln!("embedding (generic finder): {generic}");
    let mut ok = aware.is_valid() && generic.is_valid();
    let mut removal = serde_json::Value::Null;
    if let Some(labels) = &b.removal {
        match plan_for(h, labels.iter().copied()).and_then(|plan| reduce_b(h.b(), &plan).map(|r| (plan, r))) {
            Ok((plan, red)) => {
                outln!("removal {}: valid, transmitted labels {}", set_str(plan.labels()), set_str(&red.remaining));
                removal = json!({"labels": plan.label_vec(), "valid": true});
            }
            Err(e) => {
                outln!("removal {}: {e}", set_str(labels));
                removal = json!({"labels": labels, "valid": false, "error": e.to_string()});
                ok = false;
            }
        }
    }
    let mut zetas = Vec::new();
    if binomial(p.k as u64, p.kp as u64) <= 64 {
        for tau in subsets(p.k, p.kp) {
            if let Ok(m) = h.find_zeta(&tau) {
                outln!("zeta {} = {}", set_str(&tau), set_str(m.zeta()));
                zetas.push(json!({"tau": tau, "zeta": m.zeta()}));
            }
        }
    }
    let j = json!({
        "kind": "hppda", "version": VERSION,
        "params": [p.k, p.kp, p.f, p.fp, p.z, p.zp, p.s],
        "construction": construction_name(h),
        "valid": ok, "checked": aware.checked, "sampled": aware.sampled,
        "violations": violations(&aware), "generic_violations": violations(&generic),
        "removal": removal, "zeta": zetas,
    });
    Ok((ok, j))
}

pub fn simulate(a: &SimulateArgs) -> Result<u8> {
    let bundle = load_bundle(&a.bundle).with_context(|| format!("reading {}", a.bundle.display()))?;
    if a.n == 0 {
        return Err(usage("-N (number of files) is required"));
    }
    let h = &bundle.hppda;
    let plan = if a.improve { Some(removal_for(&bundle)?) } else { None };
    let mds = default_mds(h)?;
    let files = random_files(a.n, h.params().fp, a.len, a.seed);
    let (server, caches) = place(h, &mds, &files, a.len)?;
    outln!("hotplug {VERSION} simulate seed={} N={} L={} improved={}", a.seed, a.n, a.len, plan.is_some());
    if let Some(plan) = &plan {
        outln!("removal {}", set_str(plan.labels()));
    }
    if !a.active.is_empty() {
        let session = deliver(&server, &a.active, &a.demands, plan.as_ref())?;
        out!("{}", session.trace());
        let mut failures = 0;
        for &u in &session.active {
            let want = session.demand_of(u).expect("active user");
            match decode_user(&caches[u - 1], &session, server.mds()) {
                Ok(bytes) if bytes == server.file(want) => {
                    outln!("user {u}: recovered W_{want} ({} bytes, exact)", bytes.len())
                }
                Ok(_) => {
                    failures += 1;
                    outln!("user {u}: W_{want} decoded to different bytes");
                }
                Err(e) => {
                    failures += 1;
                    outln!("user {u}: {e}");
                }
            }
        }
        let rate = session.rate(&server);
        outln!("rate {}", rate_str(&rate));
        outln!(
            "{}",
            json!({"mode": "session", "version": VERSION, "seed": a.seed, "active": session.active,
                "demands": session.demands, "zeta": session.zeta.zeta(),
                "transmissions": session.transmissions.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                "rate": ratio_str(&rate), "failures": failures})
        );
        return Ok(if failures == 0 { 0 } else { 1 });
    }
    let cfg = CheckConfig {
        active: a.active_samples.map_or(VerifyMode::Exhaustive, |count| VerifyMode::Sampled { count, seed: a.seed }),
        demands: a.trials.map_or(DemandMode::Auto(10_000), DemandMode::Sampled),
        seed: a.seed,
    };
    let rep = exhaustive_check(&server, &caches, plan.as_ref(), &cfg);
    outln!(
        "sessions {} decodes {} failures {}{}",
        rep.sessions,
        rep.decodes,
        rep.failure_count,
        if rep.sampled { " (sampled)" } else { "" }
    );
    for f in &rep.failures {
        outln!("failure: {f}");
    }
    let measured: Vec<String> = rep.rates.iter().map(rate_str).collect();
    outln!("measured rate {} expected {}", measured.join(", "), rate_str(&rep.expected_rate));
    outln!(
        "{}",
        json!({"mode": "exhaustive", "version": VERSION, "seed": a.seed, "sessions": rep.sessions,
            "decodes": rep.decodes, "failures": rep.failure_count, "sampled": rep.sampled,
            "rates": rep.rates.iter().map(ratio_str).collect::<Vec<_>>(),
            "expected_rate": ratio_str(&rep.expected_rate), "passed": rep.passed()})
    );
    Ok(if rep.passed() { 0 } else { 1 })
}

fn design_for_k(name: &str, k: usize, kp: usize) -> Result<Design> {
    let d = load_design_arg(name)?;
    if d.v() != k || d.t() != kp {
        return Err(usage(format!("{} does not match K={k}, K'={kp}", d.name())));
    }
    Ok(d)
}

pub fn tradeoff(a: &TradeoffArgs) -> Result<u8> {
    if a.kp == 0 || a.kp > a.k || a.n == 0 || a.samples == 0 {
        return Err(usage("need 1 <= K' <= K, N >= 1 and --samples >= 1"));
    }
    let r0 = Rational::from_integer(a.n.min(a.kp) as i128);
    let mut rows: Vec<[String; 4]> = Vec::new();
    let mut sources = Vec::new();
    let push_points = |rows: &mut Vec<[String; 4]>, pts: &[MemoryRatePoint]| {
        for p in pts {
            rows.push([ratio_str(&p.m), ratio_str(&p.r), p.source.clone(), p.params.clone()]);
        }
    };
    for scheme in &a.schemes {
        let (name, arg) = scheme.split_once(':').map_or((scheme.as_str(), None), |(n, x)| (n, Some(x)));
        let pts = match (name, arg) {
            ("mt", None) => mt_points(a.k, a.kp, a.n),
            ("improved-man", None) => improved_man_points(a.k, a.kp, a.n),
            ("baseline", None) => baseline_points(a.k, a.kp, a.n),
            ("t", Some(d)) => tscheme_points(&design_for_k(d, a.k, a.kp)?)?,
            ("improved-t", Some(d)) => improved_tscheme_points(&design_for_k(d, a.k, a.kp)?)?,
            ("optimal-v43", None) => {
                if a.kp != 3 || a.k < 6 || a.k % 2 == 1 {
                    return Err(usage("optimal-v43 needs K' = 3 and even K >= 6"));
                }
                optimal_points_v43(a.k)
            }
            ("optimal-inversive", Some(q)) => {
                let q: u64 = q.parse().map_err(|_| usage(format!("bad order in {scheme}")))?;
                if a.kp != 3 || a.k as u64 != q * q + 1 {
                    return Err(usage("optimal-inversive:<q> needs K = q^2+1 and K' = 3"));
                }
                optimal_points_inversive(q)
            }
            ("cutset", None) => {
                for i in 0..=a.samples {
                    let m = Rational::new(i as i128, a.samples as i128);
                    rows.push([
                        ratio_str(&m),
                        ratio_str(&cutset_bound(a.n, a.kp, m)),
                        "cutset-bound".into(),
                        String::new(),
                    ]);
                }
                sources.push("cutset-bound".to_string());
                continue;
            }
            ("yu", None) => {
                for i in 0..=a.samples {
                    let m = Rational::new(i as i128, a.samples as i128);
                    let r = yu_bound(a.n, a.kp, i as f64 / a.samples as f64, 1000);
                    rows.push([ratio_str(&m), format!("{r:.6}"), "yu-bound".into(), "alpha-step=0.001".into()]);
                }
                sources.push("yu-bound".to_string());
                continue;
            }
            _ => bail!(Usage(format!("unknown scheme '{scheme}'"))),
        };
        push_points(&mut rows, &pts);
        let env = lower_envelope(&pts, r0);
        let src = pts.first().map_or(name.to_string(), |p| p.source.clone());
        for (m, r) in &env.vertices {
            rows.push([ratio_str(m), ratio_str(r), format!("{src}-vertex"), String::new()]);
        }
        for (m, r) in env.sample(a.samples) {
            rows.push([ratio_str(&m), ratio_str(&r), format!("{src}-envelope"), String::new()]);
        }
        sources.extend([src.clone(), format!("{src}-envelope")]);
    }
    let mut csv = String::from("m,r,source,params\n");
    for r in &rows {
        csv.push_str(&r.join(","));
        csv.push('\n');
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => out!("{csv}"),
    }
    if let Some(plot) = &a.plot {
        let csv_name = a.out.as_ref().map_or("tradeoff.csv".to_string(), |p| p.display().to_string());
        let title = format!("K={} K'={} N={}", a.k, a.kp, a.n);
        std::fs::write(plot, gnuplot_script(&csv_name, &sources, &title))
            .with_context(|| format!("writing {}", plot.display()))?;
    }
    Ok(0)
}

fn lambda_line(key: &str, d: &Design) -> Result<String> {
    let c = d.counts()?;
    let t = d.t();
    let mut parts = vec![format!("b={}", d.b()), format!("λ1={}", c.lambda(1))];
    parts.extend((1..t).rev().map(|s| format!("λ{s}^{t}={}", c.lambda_t(s))));
    parts.extend((2..=t).map(|s| format!("λ{s}={}", c.lambda(s))));
    Ok(format!("{key:<16} {}: {}", d.name(), parts.join(", ")))
}

pub fn catalog(a: &CatalogArgs) -> Result<u8> {
    if let Some(name) = &a.name {
        out!("{}", catalog::by_name(name)?.to_text());
        return Ok(0);
    }
    for key in catalog::names().into_iter().chain(catalog::cached_names()) {
        outln!("{}", lambda_line(&key, &catalog::by_name(&key)?)?);
    }
    Ok(0)
}
