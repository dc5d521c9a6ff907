//! Experiment grid configuration.
//!
//! Plain text, one `key = value` per line, grouped into sections that start
//! with a `[name]` header. `#` starts a comment. A section named `defaults`
//! supplies values for every later section. The grid keys (`scheme`,
//! `family`, `n`, `k`, `eps`, `p`) accept comma-separated lists and expand to
//! their cartesian product:
//!
//! ```text
//! [defaults]
//! trials = 50
//!
//! [scaling]
//! scheme = round_optimal_l2l2, count_sketch
//! family = spike-plus-gaussian(snr=10)
//! n = 1024, 4096
//! k = 8
//! eps = 0.5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::families::{FamilyKind, SignalFamily};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("config line {line}: {message}")]
pub struct ConfigParse {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    LpLp,
    LinfL2,
    RoundOptimalL2L2,
    EpsImprovedL2L2,
    CountSketch,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::LpLp,
        SchemeKind::LinfL2,
        SchemeKind::RoundOptimalL2L2,
        SchemeKind::EpsImprovedL2L2,
        SchemeKind::CountSketch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::LpLp => "lp_lp",
            SchemeKind::LinfL2 => "linf_l2",
            SchemeKind::RoundOptimalL2L2 => "round_optimal_l2l2",
            SchemeKind::EpsImprovedL2L2 => "eps_improved_l2l2",
            SchemeKind::CountSketch => "count_sketch",
        }
    }

    pub fn is_adaptive(self) -> bool {
        self != SchemeKind::CountSketch
    }

    /// The norm the scheme's guarantee is stated in, when it does not come from the config.
    pub fn native_p(self) -> Option<f64> {
        match self {
            SchemeKind::LpLp => None,
            SchemeKind::LinfL2 => Some(f64::INFINITY),
            _ => Some(2.0),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

/// One grid cell: a scheme, a signal family and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub section: String,
    pub scheme: SchemeKind,
    pub family: SignalFamily,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    pub delta: f64,
    pub trials: usize,
}

const GRID_KEYS: [&str; 6] = ["scheme", "family", "n", "k", "eps", "p"];
const SCALAR_KEYS: [&str; 2] = ["trials", "delta"];

struct Section {
    name: String,
    line: usize,
    values: BTreeMap<String, (usize, String)>,
}

pub fn parse_config(text: &str) -> Result<Vec<Cell>, ConfigParse> {
    let mut defaults: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut sections: Vec<Section> = Vec::new();
    let mut current: Option<Section> = None;
    let mut in_defaults = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigParse { line, message: format!("malformed section header {content:?}") })?
                .trim()
                .to_string();
            if let Some(s) = current.take() {
                sections.push(s);
            }
            in_defaults = name == "defaults";
            if !in_defaults {
                current = Some(Section { name, line, values: defaults.clone() });
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigParse { line, message: format!("expected key = value, got {content:?}") })?;
        let key = key.trim().to_string();
        if !GRID_KEYS.contains(&key.as_str()) && !SCALAR_KEYS.contains(&key.as_str()) {
            return Err(ConfigParse { line, message: format!("unknown key {key:?}") });
        }
        let entry = (line, value.trim().to_string());
        if in_defaults {
            defaults.insert(key, entry);
        } else if let Some(s) = current.as_mut() {
            s.values.insert(key, entry);
        } else {
            return Err(ConfigParse { line, message: "key outside of any section".into() });
        }
    }
    if let Some(s) = current.take() {
        sections.push(s);
    }
    let mut cells = Vec::new();
    for s in &sections {
        expand(s, &mut cells)?;
    }
    if cells.is_empty() {
        return Err(ConfigParse { line: text.lines().count().max(1), message: "config defines no cells".into() });
    }
    Ok(cells)
}

fn list<T, F>(s: &Section, key: &str, parse: F) -> Result<Vec<T>, ConfigParse>
where
    F: Fn(&str) -> Result<T, String>,
{
    let (line, raw) = s.values.get(key).ok_or_else(|| ConfigParse {
        line: s.line,
        message: format!("section [{}] is missing {key:?}", s.name),
    })?;
    split_list(raw)
        .iter()
        .map(|item| parse(item).map_err(|message| ConfigParse { line: *line, message: format!("{key}: {message}") }))
        .collect()
}

/// Splits on commas that are not inside parentheses.
fn split_list(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in raw.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur.trim().to_string());
    out
}

fn number<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|_| format!("not a valid number: {s:?}"))
}

fn expand(s: &Section, cells: &mut Vec<Cell>) -> Result<(), ConfigParse> {
    let at = |key: &str| s.values.get(key).map_or(s.line, |v| v.0);
    let schemes = list(s, "scheme", |v| v.parse::<SchemeKind>())?;
    let families = list(s, "family", |v| FamilyKind::parse(v).map_err(|e| e.to_string()))?;
    let ns = list(s, "n", |v| {
        let n: usize = number(v)?;
        if n == 0 {
            return Err("n must be at least 1".into());
        }
        Ok(n)
    })?;
    let ks = list(s, "k", |v| {
        let k: usize = number(v)?;
        if k == 0 {
            return Err("k must be at least 1".into());
        }
        Ok(k)
    })?;
    let epss = list(s, "eps", |v| {
        let e: f64 = number(v)?;
        if !(e > 0.0 && e < 1.0) {
            return Err(format!("eps must lie in (0, 1), got {e}"));
        }
        Ok(e)
    })?;
    let ps = if s.values.contains_key("p") {
        list(s, "p", |v| {
            let p: f64 = number(v)?;
            if !(p > 0.0 && p < 2.0) {
                return Err(format!("p must lie in (0, 2), got {p}"));
            }
            Ok(p)
        })?
    } else {
        vec![2.0]
    };
    let trials = match s.values.get("trials") {
        Some((line, v)) => number::<usize>(v)
            .and_then(|t| if t == 0 { Err("trials must be at least 1".into()) } else { Ok(t) })
            .map_err(|message| ConfigParse { line: *line, message: format!("trials: {message}") })?,
        None => return Err(ConfigParse { line: s.line, message: format!("section [{}] is missing \"trials\"", s.name) }),
    };
    let delta = match s.values.get("delta") {
        Some((line, v)) => number::<f64>(v)
            .and_then(|d| if d > 0.0 && d < 1.0 { Ok(d) } else { Err(format!("delta must lie in (0, 1), got {d}")) })
            .map_err(|message| ConfigParse { line: *line, message: format!("delta: {message}") })?,
        None => 0.1,
    };

    for &scheme in &schemes {
        let scheme_ps = match scheme.native_p() {
            Some(p) => vec![p],
            None => {
                if !s.values.contains_key("p") {
                    return Err(ConfigParse { line: s.line, message: format!("section [{}] runs lp_lp but sets no p", s.name) });
                }
                ps.clone()
            }
        };
        for &kind in &families {
            for &n in &ns {
                for &k in &ks {
                    for &eps in &epss {
                        for &p in &scheme_ps {
                            let family = SignalFamily { kind, n, k, eps };
                            family
                                .validate()
                                .map_err(|e| ConfigParse { line: at("family"), message: e.to_string() })?;
                            cells.push(Cell {
                                section: s.name.clone(),
                                scheme,
                                family,
                                n,
                                k,
                                eps,
                                p,
                                delta,
                                trials,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
