//! Memory-rate points of the schemes, converse bounds, and lower convex
//! envelopes. Coordinates are normalised: `m = M/N`, `r = R`.

use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};

use crate::combinatorics::{binomial, binomial_i};
use crate::design::Design;
use crate::hppda::TSchemeConfig;
use crate::improver::tdesign_removal_count;
use crate::{Error, Rational, Result};

/// One achievable or bound point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRatePoint {
    pub m: Rational,
    pub r: Rational,
    pub source: String,
    pub params: String,
}

impl MemoryRatePoint {
    fn new(m: Rational, r: Rational, source: &str, params: String) -> Self {
        MemoryRatePoint { m, r, source: source.to_string(), params }
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n as i128, d as i128)
}

fn c(n: usize, k: usize) -> i64 {
    binomial(n as u64, k as u64) as i64
}

/// `p/q`, or just `p` for integers.
pub fn ratio_str(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Decimal rounded to 6 places.
pub fn decimal(x: &Rational) -> String {
    let scaled = (x * Rational::from_integer(1_000_000)).round().to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let a = scaled.abs();
    format!("{sign}{}.{:06}", a / 1_000_000, a % 1_000_000)
}

/// MT scheme: `t ∈ [K']`, `r' = min(N, K')`. Points with `m > 1` are dropped.
pub fn mt_points(k: usize, kp: usize, n: usize) -> Vec<MemoryRatePoint> {
    let rp = n.min(kp);
    (1..=kp)
        .map(|t| {
            let m = q(c(k - 1, t - 1), c(kp, t));
            let r = q(c(kp, t + 1) - c(kp - rp, t + 1), c(kp, t));
            MemoryRatePoint::new(m, r, "mt", format!("t={t}"))
        })
        .filter(|p| p.m <= Rational::from_integer(1))
        .collect()
}

/// MAN pair with `⌊K'/(t+1)⌋ (Z - Z')` labels removed: `t ∈ [0, K']`, rate
/// floored at 0, `m > 1` dropped.
pub fn improved_man_points(k: usize, kp: usize, _n: usize) -> Vec<MemoryRatePoint> {
    (0..=kp)
        .map(|t| {
            let (ti, ki, kpi) = (t as i64, k as i64, kp as i64);
            let z = binomial_i(ki - 1, ti - 1);
            let zp = binomial_i(kpi - 1, ti - 1);
            let removed = (kpi / (ti + 1)) * (z - zp);
            let f = c(kp, t);
            let r = q((c(kp, t + 1) - removed).max(0), f);
            MemoryRatePoint::new(q(z, f), r, "improved-man", format!("t={t}"))
        })
        .filter(|p| p.m <= Rational::from_integer(1))
        .collect()
}

/// MAN scheme on all `K` users: `t ∈ [0, K]`, `r' = min(N, K')`.
pub fn baseline_points(k: usize, kp: usize, n: usize) -> Vec<MemoryRatePoint> {
    let rp = n.min(kp) as i64;
    let ki = k as i64;
    (0..=k)
        .map(|t| {
            let ti = t as i64;
            let f = binomial_i(ki, ti);
            let m = q(binomial_i(ki - 1, ti - 1), f);
            let r = q(binomial_i(ki, ti + 1) - binomial_i(ki - rp, ti + 1), f);
            MemoryRatePoint::new(m, r, "baseline", format!("t={t}"))
        })
        .collect()
}

/// All copy vectors `a` with `0 <= a_s <= λ_s^t`, or an error when there are
/// more than `10^6`.
pub fn copy_tuples(design: &Design) -> Result<Vec<Vec<u64>>> {
    let t = design.t();
    let counts = design.counts()?;
    let caps: Vec<u64> = (1..t).map(|s| counts.lambda_t(s)).collect();
    let total: u128 = caps.iter().map(|&x| x as u128 + 1).product();
    if total > 1_000_000 {
        return Err(Error::InvalidParameter(format!("{total} copy vectors exceed the enumeration limit")));
    }
    let mut out = vec![Vec::new()];
    for &cap in &caps {
        out = out.into_iter().flat_map(|v| (0..=cap).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    Ok(out)
}

fn tuple_str(a: &[u64]) -> String {
    let parts: Vec<String> = a.iter().enumerate().map(|(i, x)| format!("a{}={x}", i + 1)).collect();
    parts.join(" ")
}

fn tscheme_generic(design: &Design, improved: bool) -> Result<Vec<MemoryRatePoint>> {
    let t = design.t();
    let lambda1 = design.counts()?.lambda(1) as i64;
    let mut best: Vec<MemoryRatePoint> = Vec::new();
    let source = if improved { "improved-t" } else { "t-scheme" };
    for a in copy_tuples(design)? {
        let cfg = TSchemeConfig::new(design.clone(), a.clone());
        if cfg.check().is_err() {
            continue;
        }
        let sum = |g: &dyn Fn(usize) -> i64| -> i64 { (1..t).map(|s| a[s - 1] as i64 * g(s)).sum() };
        let fp = sum(&|s| c(t, s));
        let zp = sum(&|s| binomial_i(t as i64 - 1, s as i64 - 1));
        let mut s_count = sum(&|s| c(t, s + 1));
        if improved {
            let budget = (lambda1 - zp) as u64;
            s_count -= tdesign_removal_count(t, &a, budget).unwrap_or(0) as i64;
        }
        let p = MemoryRatePoint::new(
            q(lambda1, fp),
            q(s_count, fp),
            source,
            format!("{} {}", design.name(), tuple_str(&a)),
        );
        match best.iter_mut().find(|b| b.m == p.m) {
            Some(b) if p.r < b.r => *b = p,
            Some(_) => {}
            None => best.push(p),
        }
    }
    best.sort_by_key(|x| x.m);
    Ok(best)
}

/// `(λ1/|R|, S/|R|)` for every admissible copy vector, keeping the lowest
/// rate at each memory.
pub fn tscheme_points(design: &Design) -> Result<Vec<MemoryRatePoint>> {
    tscheme_generic(design, false)
}

/// As [`tscheme_points`] with the t-design removal count taken from `S`.
pub fn improved_tscheme_points(design: &Design) -> Result<Vec<MemoryRatePoint>> {
    tscheme_generic(design, true)
}

/// `(λ1/(3(a1+a2)), 1 - m)` over `a1 <= λ_1^3`, `a2 <= λ_2^3` with
/// `λ1 = a + 3 a1 + 2 a2` for some `0 <= a < a2`.
pub fn optimal_points_3design(lambda1: u64, l13: u64, l23: u64, source: &str) -> Vec<MemoryRatePoint> {
    let mut out = Vec::new();
    for a1 in 0..=l13 {
        for a2 in 0..=l23 {
            let used = 3 * a1 + 2 * a2;
            if used > lambda1 || lambda1 - used >= a2 {
                continue;
            }
            let m = q(lambda1 as i64, 3 * (a1 + a2) as i64);
            let a = lambda1 - used;
            out.push(MemoryRatePoint::new(m, Rational::from_integer(1) - m, source, format!("a1={a1} a2={a2} a={a}")));
        }
    }
    out.sort_by_key(|x| x.m);
    out
}

/// 3-(K,4,3) family: `λ1 = C(K-1,2)`, `λ_1^3 = C(K-4,2)`, `λ_2^3 = 3(K-4)/2`.
pub fn optimal_points_v43(k: usize) -> Vec<MemoryRatePoint> {
    assert!(k >= 6 && k.is_multiple_of(2), "3-(K,4,3) needs even K >= 6");
    optimal_points_3design(c(k - 1, 2) as u64, c(k - 4, 2) as u64, (3 * (k - 4) / 2) as u64, "optimal-v43")
}

/// Inversive plane family 3-(q²+1, q+1, 1): `λ1 = q(q+1)`, `λ_1^3 = q²-q-1`,
/// `λ_2^3 = q`.
pub fn optimal_points_inversive(qq: u64) -> Vec<MemoryRatePoint> {
    optimal_points_3design(qq * (qq + 1), qq * qq - qq - 1, qq, "optimal-inversive")
}

/// Smallest memory of the optimal family: `λ1/(λ1 + λ_2^3 - a)` with the least
/// `a ∈ [0,3)` making `(λ1 - 2 λ_2^3 - a)/3` a nonnegative integer.
pub fn min_optimal_memory(lambda1: u64, l23: u64) -> Option<Rational> {
    let rest = lambda1.checked_sub(2 * l23)?;
    let a = (0..3).find(|&a| a <= rest && (rest - a) % 3 == 0)?;
    Some(q(lambda1 as i64, (lambda1 + l23 - a) as i64))
}

/// `max_s s - s/⌊N/s⌋ · M` over `s ∈ [min(N,K')]`, floored at 0.
pub fn cutset_bound(n: usize, kp: usize, m: Rational) -> Rational {
    let big_m = m * Rational::from_integer(n as i128);
    (1..=n.min(kp))
        .map(|s| {
            let s_q = Rational::from_integer(s as i128);
            s_q - s_q / Rational::from_integer((n / s) as i128) * big_m
        })
        .fold(Rational::zero(), |a, b| a.max(b))
}

/// Converse of Yu et al. maximised over `s ∈ [min(N,K')]` and `α` on a grid of
/// step `1/steps`, floored at 0. Being a grid maximum it is itself a valid
/// lower bound.
pub fn yu_bound(n: usize, kp: usize, m: f64, steps: usize) -> f64 {
    let big_m = m * n as f64;
    let mut best = 0f64;
    for s in 1..=n.min(kp) {
        let sf = s as f64;
        for step in 0..=steps {
            let alpha = step as f64 / steps as f64;
            let Some(l) = (1..=s).find(|&l| {
                let lf = l as f64;
                (sf * (sf - 1.0) - lf * (lf - 1.0)) / 2.0 + alpha * sf <= (n as f64 - lf + 1.0) * lf
            }) else {
                continue;
            };
            let lf = l as f64;
            let v = sf - 1.0 + alpha
                - (sf * (sf - 1.0) - lf * (lf - 1.0) + 2.0 * alpha * sf) / (2.0 * (n as f64 - lf + 1.0)) * big_m;
            best = best.max(v);
        }
    }
    best
}

/// Lower convex envelope through the anchors `(0, r0)` and `(1, 0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeoffCurve {
    pub points: Vec<MemoryRatePoint>,
    /// Hull vertices by increasing `m`.
    pub vertices: Vec<(Rational, Rational)>,
}

fn cross(o: (Rational, Rational), a: (Rational, Rational), b: (Rational, Rational)) -> Rational {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

pub fn lower_envelope(points: &[MemoryRatePoint], r0: Rational) -> TradeoffCurve {
    let one = Rational::from_integer(1);
    let mut pts: Vec<(Rational, Rational)> = points
        .iter()
        .filter(|p| p.m >= Rational::zero() && p.m <= one)
        .map(|p| (p.m, p.r))
        .chain([(Rational::zero(), r0), (one, Rational::zero())])
        .collect();
    pts.sort();
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(Rational, Rational)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= Rational::zero() {
            hull.pop();
        }
        hull.push(p);
    }
    let mut pts_sorted = points.to_vec();
    pts_sorted.sort_by_key(|x| (x.m, x.r));
    TradeoffCurve { points: pts_sorted, vertices: hull }
}

impl TradeoffCurve {
    /// Envelope value at `m ∈ [0,1]`.
    pub fn eval(&self, m: Rational) -> Rational {
        let v = &self.vertices;
        if m <= v[0].0 {
            return v[0].1;
        }
        for w in v.windows(2) {
            let ((m0, r0), (m1, r1)) = (w[0], w[1]);
            if m <= m1 {
                return r0 + (r1 - r0) * (m - m0) / (m1 - m0);
            }
        }
        v[v.len() - 1].1
    }

    /// `samples + 1` evaluations at `m = i / samples`.
    pub fn sample(&self, samples: usize) -> Vec<(Rational, Rational)> {
        (0..=samples)
            .map(|i| {
                let m = q(i as i64, samples as i64);
                (m, self.eval(m))
            })
            .collect()
    }
}

/// CSV rows `m,r,source,params`; `m` and `r` as exact `p/q`.
pub fn to_csv(points: &[MemoryRatePoint]) -> String {
    let mut out = String::from("m,r,source,params\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", ratio_str(&p.m), ratio_str(&p.r), p.source, p.params);
    }
    out
}

/// Gnuplot script plotting each source of `csv_path` as its own series.
pub fn gnuplot_script(csv_path: &str, sources: &[String], title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel 'M/N'\nset ylabel 'R'\nset key top right\nset grid");
    let _ = writeln!(
        s,
        "frac(x) = (strstrt(x,'/') > 0) ? real(x[1:strstrt(x,'/')-1]) / real(x[strstrt(x,'/')+1:]) : real(x)"
    );
    let series: Vec<String> = sources
        .iter()
        .map(|src| {
            let style = if src.ends_with("-envelope") || src.ends_with("-bound") { "lines" } else { "points" };
            format!(
                "'{csv_path}' using (strcol(3) eq '{src}' ? frac(strcol(1)) : NaN):(frac(strcol(2))) with {style} title '{src}'"
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

/// Convert for plotting and comparisons.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
