//! Placement delivery arrays.
//!
//! A grid cell is a star, a null (only in placement arrays and reduced
//! delivery arrays) or a label in `1..=S`. Rows and columns are 1-based in
//! all public indices.

use std::collections::BTreeMap;
use std::fmt;

use crate::combinatorics::{binomial, lex_rank, subsets};
use crate::error::{parse_err, Error, Result};
use crate::report::ValidationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entry {
    Star,
    Null,
    Label(u32),
}

impl Entry {
    pub fn is_star(self) -> bool {
        self == Entry::Star
    }

    pub fn label(self) -> Option<u32> {
        match self {
            Entry::Label(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Star => write!(f, "*"),
            Entry::Null => write!(f, "-"),
            Entry::Label(s) => write!(f, "{s}"),
        }
    }
}

/// Dense row-major `rows x cols` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    cells: Vec<Entry>,
}

impl Grid {
    pub fn filled(rows: usize, cols: usize, e: Entry) -> Self {
        Grid { rows, cols, cells: vec![e; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Entry>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("grid rows differ in length".into()));
        }
        Ok(Grid { rows: rows.len(), cols, cells: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// 1-based access.
    pub fn get(&self, row: usize, col: usize) -> Entry {
        self.cells[(row - 1) * self.cols + col - 1]
    }

    pub fn set(&mut self, row: usize, col: usize, e: Entry) {
        self.cells[(row - 1) * self.cols + col - 1] = e;
    }

    pub fn row(&self, row: usize) -> &[Entry] {
        &self.cells[(row - 1) * self.cols..row * self.cols]
    }

    pub fn star_count(&self, col: usize) -> usize {
        (1..=self.rows).filter(|&r| self.get(r, col).is_star()).count()
    }

    /// Largest label present, or 0.
    pub fn max_label(&self) -> u32 {
        self.cells.iter().filter_map(|e| e.label()).max().unwrap_or(0)
    }

    /// Occurrences `(row, col)` of every label, keyed by label.
    pub fn label_positions(&self) -> BTreeMap<u32, Vec<(usize, usize)>> {
        let mut out: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for r in 1..=self.rows {
            for c in 1..=self.cols {
                if let Entry::Label(s) = self.get(r, c) {
                    out.entry(s).or_default().push((r, c));
                }
            }
        }
        out
    }

    /// Stars kept, everything else null.
    pub fn star_skeleton(&self) -> Grid {
        Grid {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(|&e| if e.is_star() { Entry::Star } else { Entry::Null }).collect(),
        }
    }

    /// Text: header `K F` (columns, rows), then one row per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.cols, self.rows);
        for r in 1..=self.rows {
            let toks: Vec<String> = self.row(r).iter().map(|e| e.to_string()).collect();
            out.push_str(&toks.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse one grid from `(line number, text)` pairs, consuming only its lines.
    pub fn parse_lines<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Grid> {
        let mut next_content = || {
            for (no, raw) in lines.by_ref() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if !line.is_empty() {
                    return Some((no, line));
                }
            }
            None
        };
        let (hno, header) = next_content().ok_or_else(|| parse_err(0, "missing grid header 'K F'"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(hno, format!("bad grid header token '{t}'"))))
            .collect::<Result<_>>()?;
        let [cols, rows] = dims[..] else {
            return Err(parse_err(hno, "grid header must be 'K F'"));
        };
        let mut cells = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (no, line) = next_content().ok_or_else(|| parse_err(hno, format!("expected {rows} grid rows")))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != cols {
                return Err(parse_err(no, format!("row has {} entries, expected {cols}", toks.len())));
            }
            for tok in toks {
                cells.push(match tok {
                    "*" => Entry::Star,
                    "-" => Entry::Null,
                    _ => match tok.parse::<u32>() {
                        Ok(s) if s >= 1 => Entry::Label(s),
                        _ => return Err(parse_err(no, format!("bad entry '{tok}'"))),
                    },
                });
            }
        }
        Ok(Grid { rows, cols, cells })
    }

    pub fn parse(text: &str) -> Result<Grid> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        Grid::parse_lines(&mut lines)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.cells.iter().map(|e| e.to_string().len()).max().unwrap_or(1);
        for r in 1..=self.rows {
            let toks: Vec<String> = self.row(r).iter().map(|e| format!("{:>width$}", e.to_string())).collect();
            writeln!(f, "{}", toks.join(" "))?;
        }
        Ok(())
    }
}

/// A validated `[K, F, Z, S]` placement delivery array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pda {
    grid: Grid,
    z: usize,
    s: usize,
    /// Display names of labels `1..=S`, e.g. `(123,1)`.
    names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdaStats {
    pub k: usize,
    pub f: usize,
    pub z: usize,
    pub s: usize,
    /// Occurrences per label when constant.
    pub g: Option<usize>,
    /// `occurrence count -> number of labels`.
    pub histogram: BTreeMap<usize, usize>,
}

impl Pda {
    /// Validate `grid` as a PDA with `S` = largest label.
    pub fn new(grid: Grid) -> Result<Pda> {
        let s = grid.max_label() as usize;
        let names = (1..=s).map(|x| x.to_string()).collect();
        Self::with_names(grid, names)
    }

    pub fn with_names(grid: Grid, names: Vec<String>) -> Result<Pda> {
        let s = grid.max_label() as usize;
        if names.len() != s {
            return Err(Error::Shape(format!("{} label names for S = {s}", names.len())));
        }
        let report = validate_grid(&grid);
        if !report.is_valid() {
            return Err(Error::Invalid(format!("not a PDA: {report}")));
        }
        let z = if grid.cols > 0 { grid.star_count(1) } else { 0 };
        Ok(Pda { grid, z, s, names })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.grid.cols
    }

    pub fn f(&self) -> usize {
        self.grid.rows
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn get(&self, row: usize, col: usize) -> Entry {
        self.grid.get(row, col)
    }

    pub fn label_name(&self, label: u32) -> &str {
        &self.names[label as usize - 1]
    }

    pub fn label_names(&self) -> &[String] {
        &self.names
    }

    /// Labels appearing in column `col`, ascending.
    pub fn column_labels(&self, col: usize) -> Vec<u32> {
        let mut out: Vec<u32> = (1..=self.f()).filter_map(|r| self.get(r, col).label()).collect();
        out.sort_unstable();
        out
    }

    pub fn stats(&self) -> PdaStats {
        stats(self)
    }
}

impl fmt::Display for Pda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.grid.fmt(f)
    }
}

/// Check C1 (equal star count per column), C2 (labels `1..=S` all occur)
/// and C3 (equal labels in distinct rows and columns with stars at the
/// crossing cells). Nulls are not allowed.
pub fn validate_grid(grid: &Grid) -> ValidationReport {
    let mut rep = ValidationReport::default();
    for r in 1..=grid.rows {
        for c in 1..=grid.cols {
            if grid.get(r, c) == Entry::Null {
                rep.push("null", format!("null entry at ({r},{c})"));
            }
        }
    }
    if grid.cols > 0 {
        let z = grid.star_count(1);
        for c in 2..=grid.cols {
            let zc = grid.star_count(c);
            if zc != z {
                rep.push("C1", format!("column {c} has {zc} stars, column 1 has {z}"));
            }
        }
    }
    let positions = grid.label_positions();
    let s = grid.max_label();
    for label in 1..=s {
        if !positions.contains_key(&label) {
            rep.push("C2", format!("label {label} does not occur"));
        }
    }
    for (&label, occ) in &positions {
        for (i, &(r1, c1)) in occ.iter().enumerate() {
            for &(r2, c2) in &occ[i + 1..] {
                if r1 == r2 || c1 == c2 {
                    rep.push("C3", format!("label {label} repeats in line at ({r1},{c1}) and ({r2},{c2})"));
                } else if !grid.get(r1, c2).is_star() || !grid.get(r2, c1).is_star() {
                    rep.push("C3", format!("label {label} at ({r1},{c1}) and ({r2},{c2}) lacks crossing stars"));
                }
            }
        }
    }
    rep.checked = positions.len() as u64;
    rep
}

pub fn validate_pda(p: &Pda) -> ValidationReport {
    validate_grid(&p.grid)
}

/// MAN PDA: rows are the t-subsets of `[K]` in lexicographic order; entry
/// `(τ, j)` is a star when `j ∈ τ`, else the lexicographic rank of `τ ∪ {j}`
/// among (t+1)-subsets, plus one.
pub fn man_pda(k: usize, t: usize) -> Result<Pda> {
    if t == 0 || t >= k {
        return Err(Error::InvalidParameter(format!("MAN PDA needs 1 <= t <= K-1, got K={k} t={t}")));
    }
    let rows: Vec<Vec<Entry>> = subsets(k, t)
        .map(|tau| {
            (1..=k)
                .map(|j| {
                    if tau.binary_search(&j).is_ok() {
                        Entry::Star
                    } else {
                        let mut u = tau.clone();
                        u.push(j);
                        u.sort_unstable();
                        Entry::Label(lex_rank(&u, k) as u32 + 1)
                    }
                })
                .collect()
        })
        .collect();
    let names = subsets(k, t + 1).map(|u| u.iter().map(|x| x.to_string()).collect::<String>()).collect();
    let pda = Pda::with_names(Grid::from_rows(rows)?, names)?;
    debug_assert_eq!(pda.s() as u64, binomial(k as u64, t as u64 + 1));
    Ok(pda)
}

pub fn stats(p: &Pda) -> PdaStats {
    let mut histogram = BTreeMap::new();
    for occ in p.grid.label_positions().values() {
        *histogram.entry(occ.len()).or_insert(0) += 1;
    }
    let g = (histogram.len() == 1).then(|| *histogram.keys().next().expect("one key"));
    PdaStats { k: p.k(), f: p.f(), z: p.z(), s: p.s(), g, histogram }
}
