//! Named designs and reference pairs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::design::{
    complete_design, derived_design, inversive_plane, load_design, parse_design, reduce_strength, save_design,
    search_3design_v43, Design,
};
use crate::error::{Error, Result};
use crate::hppda::{man_hppda, Bundle, Construction, HpPda, StarArray};
use crate::pda::{Entry, Grid, Pda};

const WITT: &str = include_str!("../data/witt_5_12_6_1.des");

/// Environment variable naming a directory for searched designs.
pub const CACHE_ENV: &str = "HOTPLUG_CACHE_DIR";

fn blocks(spec: &[&str]) -> Vec<Vec<usize>> {
    spec.iter().map(|b| b.bytes().map(|c| (c - b'0') as usize).collect()).collect()
}

/// Fano plane with blocks `127, 145, 136, 467, 256, 357, 234`.
pub fn fano() -> Design {
    Design::from_parts(2, 7, 3, 1, blocks(&["127", "145", "136", "467", "256", "357", "234"]))
}

/// 3-(6,4,3) design in a fixed reference block order.
pub fn design_3_6_4_3() -> Design {
    Design::from_parts(
        3,
        6,
        4,
        3,
        blocks(&[
            "1456", "2356", "1234", "1256", "1346", "2345", "1236", "2456", "1345", "2346", "1356", "1245", "3456",
            "1246", "1235",
        ]),
    )
}

/// 3-(8,4,1) design in a fixed reference block order.
pub fn design_3_8_4_1() -> Design {
    Design::from_parts(
        3,
        8,
        4,
        1,
        blocks(&[
            "1256", "3478", "2468", "1357", "1458", "2367", "1234", "5678", "1278", "3456", "1368", "2457", "1467",
            "2358",
        ]),
    )
}

/// 5-(12,6,1) Witt design.
pub fn witt_5_12_6_1() -> Design {
    parse_design(WITT).expect("embedded Witt design is valid")
}

/// 3-(v,4,3) design: the built-in list for `v = 6`, otherwise loaded
/// from the cache directory or searched for (and cached when the directory
/// is set).
pub fn design_3_v_4_3(v: usize) -> Result<Design> {
    if v == 6 {
        return Ok(design_3_6_4_3());
    }
    let cache: Option<PathBuf> = std::env::var_os(CACHE_ENV).map(|d| PathBuf::from(d).join(format!("3-{v}-4-3.des")));
    if let Some(path) = &cache {
        if path.exists() {
            let d = load_design(path)?;
            if (d.t(), d.v(), d.k(), d.lambda()) == (3, v, 4, 3) {
                return Ok(d);
            }
        }
    }
    let d = search_3design_v43(v, 1, 20_000_000)?;
    if let Some(path) = &cache {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        save_design(&d, path)?;
    }
    Ok(d)
}

/// Look a design up by name: `fano`, `3-6-4-3`, `3-8-4-1`, `witt`,
/// `3-12-6-12`, `4-12-6-4`, `2-12-6-30`, `4-11-5-1`, `complete-<v>-<k>-<t>`,
/// `inversive-<q>`, `3-<v>-4-3`.
pub fn by_name(name: &str) -> Result<Design> {
    let witt_reduced = |s| reduce_strength(&witt_5_12_6_1(), s);
    match name {
        "fano" | "2-7-3-1" => Ok(fano()),
        "3-8-4-1" => Ok(design_3_8_4_1()),
        "witt" | "5-12-6-1" => Ok(witt_5_12_6_1()),
        "4-12-6-4" => witt_reduced(4),
        "3-12-6-12" => witt_reduced(3),
        "2-12-6-30" => witt_reduced(2),
        "4-11-5-1" => derived_design(&witt_5_12_6_1(), &[12]),
        _ => {
            if let Some(rest) = name.strip_prefix("complete-") {
                let n: Vec<usize> = rest.split('-').filter_map(|x| x.parse().ok()).collect();
                let [v, k, t] = n[..] else {
                    return Err(Error::InvalidParameter(format!("expected complete-<v>-<k>-<t>, got '{name}'")));
                };
                return complete_design(v, k, t);
            }
            if let Some(q) = name.strip_prefix("inversive-") {
                let q = q.parse().map_err(|_| Error::InvalidParameter(format!("bad order in '{name}'")))?;
                return inversive_plane(q);
            }
            let parts: Vec<&str> = name.split('-').collect();
            if let ["3", v, "4", "3"] = parts[..] {
                let v = v.parse().map_err(|_| Error::InvalidParameter(format!("bad v in '{name}'")))?;
                return design_3_v_4_3(v);
            }
            Err(Error::InvalidParameter(format!("unknown design '{name}'")))
        }
    }
}

/// Names accepted by [`by_name`] that are cheap to build.
pub fn names() -> Vec<String> {
    let mut v: Vec<String> = [
        "complete-6-3-2",
        "complete-7-4-3",
        "fano",
        "3-6-4-3",
        "3-8-4-1",
        "witt",
        "4-12-6-4",
        "3-12-6-12",
        "2-12-6-30",
        "4-11-5-1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend([3, 4, 5, 7, 8, 9].iter().map(|q| format!("inversive-{q}")));
    v
}

/// `3-<v>-4-3` designs present in the cache directory.
pub fn cached_names() -> Vec<String> {
    let Some(dir) = std::env::var_os(CACHE_ENV) else { return Vec::new() };
    let Ok(entries) = std::fs::read_dir(dir) else { return Vec::new() };
    let mut out: Vec<String> = entries
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter_map(|n| n.strip_suffix(".des").map(str::to_string))
        .filter(|n| n.starts_with("3-") && n.ends_with("-4-3"))
        .collect();
    out.sort();
    out
}

/// MAN pair for K=6, K'=3, t=1.
pub fn man_6_3_1() -> Bundle {
    Bundle { hppda: man_hppda(6, 3, 1).expect("valid parameters"), removal: None }
}

/// MAN pair for K=6, K'=4, t=2, with removal set `{1, 2}`.
pub fn man_6_4_2() -> Bundle {
    Bundle { hppda: man_hppda(6, 4, 2).expect("valid parameters"), removal: Some(vec![1, 2]) }
}

/// The hand-built (6,5,12,5,4,2,9) pair with its tabulated `ζ` and removal
/// set `{1,3,4,5,7,8}`.
pub fn tabulated_6_5() -> Bundle {
    let b_rows: [[u32; 5]; 5] = [[0, 1, 4, 6, 0], [0, 0, 2, 5, 7], [1, 0, 0, 3, 8], [4, 2, 0, 0, 9], [6, 5, 3, 0, 0]];
    let b = Grid::from_rows(
        b_rows
            .iter()
            .map(|r| r.iter().map(|&x| if x == 0 { Entry::Star } else { Entry::Label(x) }).collect())
            .collect(),
    )
    .expect("rectangular");
    let p_stars: [[usize; 2]; 12] =
        [[1, 5], [1, 6], [1, 3], [1, 2], [2, 4], [2, 6], [2, 3], [3, 5], [3, 4], [4, 5], [5, 6], [4, 6]];
    let p = Grid::from_rows(
        p_stars
            .iter()
            .map(|s| (1..=6).map(|c| if s.contains(&c) { Entry::Star } else { Entry::Null }).collect())
            .collect(),
    )
    .expect("rectangular");
    let table: BTreeMap<Vec<usize>, Vec<usize>> = [
        ([1, 2, 3, 4, 5], [1, 4, 7, 9, 10]),
        ([1, 2, 3, 4, 6], [2, 4, 7, 9, 12]),
        ([1, 2, 3, 5, 6], [2, 4, 7, 8, 11]),
        ([1, 2, 4, 5, 6], [2, 4, 5, 10, 11]),
        ([1, 3, 4, 5, 6], [2, 3, 9, 10, 11]),
        ([2, 3, 4, 5, 6], [6, 7, 9, 10, 11]),
    ]
    .into_iter()
    .map(|(t, z)| (t.to_vec(), z.to_vec()))
    .collect();
    let hppda = HpPda::new(
        StarArray::new(p).expect("two stars per column"),
        Pda::new(b).expect("valid PDA"),
        Construction::Tabulated(table),
    )
    .expect("valid parameters");
    Bundle { hppda, removal: Some(vec![1, 3, 4, 5, 7, 8]) }
}
