//! Overlap parameters of the stacked protograph `[H_0^p; H_1^p; H_d^p]`.
//!
//! Rows `0..gamma` come from `H_0`, `gamma..2 gamma` from `H_1` and
//! `2 gamma..3 gamma` from the dummy. The overlap of a row set is the number
//! of columns where every listed row holds a one.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cb::{Label, PartitioningMatrix, Protograph};
use crate::error::{Error, Result};

/// A strictly increasing set of stacked-protograph row indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowSet(Vec<usize>);

impl RowSet {
    /// Accepts only strictly increasing indices.
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        if rows.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "row set {rows:?} is not strictly increasing"
            )));
        }
        Ok(Self(rows))
    }

    /// Sorts the indices; repeated indices are an error.
    pub fn from_unsorted(mut rows: Vec<usize>) -> Result<Self> {
        rows.sort_unstable();
        if rows.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "row set {rows:?} repeats an index"
            )));
        }
        Ok(Self(rows))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn rows(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when two members fall in the same row group (equal mod `gamma`);
    /// such overlaps are identically zero.
    pub fn has_residue_clash(&self, gamma: usize) -> bool {
        let mut seen = vec![false; gamma];
        for &r in &self.0 {
            let u = r % gamma;
            if seen[u] {
                return true;
            }
            seen[u] = true;
        }
        false
    }

    fn key(&self) -> String {
        self.0
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    fn parse_key(key: &str) -> Result<Self> {
        let rows = key
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad overlap key `{key}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }
}

impl fmt::Display for RowSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{{{}}}", self.key())
    }
}

/// Anything that can answer overlap queries.
pub trait OverlapSource {
    fn overlap_of(&self, rows: &[usize]) -> Result<i64>;
}

/// `Pi`, stored as column bitsets per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackedProtograph {
    gamma: usize,
    kappa: usize,
    rows: Vec<Vec<u64>>,
}

fn words(kappa: usize) -> usize {
    kappa.div_ceil(64)
}

impl StackedProtograph {
    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row][col / 64] >> (col % 64) & 1 == 1
    }

    pub fn column_sum(&self, col: usize) -> usize {
        (0..3 * self.gamma).filter(|&r| self.get(r, col)).count()
    }

    /// Count of columns where every row in `rows` is set. Empty input gives
    /// `kappa`.
    pub fn overlap(&self, rows: &[usize]) -> Result<u64> {
        let n = 3 * self.gamma;
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::RowOutOfRange {
                index: bad,
                rows: n,
            });
        }
        if rows.is_empty() {
            return Ok(self.kappa as u64);
        }
        let mut total = 0u64;
        for w in 0..words(self.kappa) {
            let mut acc = u64::MAX;
            for &r in rows {
                acc &= self.rows[r][w];
            }
            total += acc.count_ones() as u64;
        }
        Ok(total)
    }

    /// Dummy block rows as a protograph.
    pub fn dummy(&self) -> Protograph {
        let mut p = Protograph::zeros(self.gamma, self.kappa);
        for u in 0..self.gamma {
            for c in 0..self.kappa {
                p.set(u, c, self.get(2 * self.gamma + u, c));
            }
        }
        p
    }
}

impl OverlapSource for StackedProtograph {
    fn overlap_of(&self, rows: &[usize]) -> Result<i64> {
        Ok(self.overlap(rows)? as i64)
    }
}

pub fn build_pi(pm: &PartitioningMatrix) -> Result<StackedProtograph> {
    pm.require_memory_one()?;
    let (gamma, kappa) = (pm.gamma(), pm.kappa());
    let mut rows = vec![vec![0u64; words(kappa)]; 3 * gamma];
    for i in 0..gamma {
        for j in 0..kappa {
            let block = match pm.get(i, j) {
                Label::Component(k) => k,
                Label::Dummy => 2,
            };
            rows[block * gamma + i][j / 64] |= 1 << (j % 64);
        }
    }
    Ok(StackedProtograph { gamma, kappa, rows })
}

/// The free overlap parameters for a given `gamma`: subsets of rows
/// `gamma..3 gamma` with distinct row groups and at least one `H_1` row.
///
/// Ordered by size, then sets drawn purely from `H_1` before those touching
/// the dummy, then lexicographically.
pub fn enumerate_ndi(gamma: usize) -> Vec<RowSet> {
    let mut out = Vec::new();
    let total = 3usize.pow(gamma as u32);
    for code in 1..total {
        let mut rows = Vec::new();
        let mut c = code;
        let mut has_h1 = false;
        for u in 0..gamma {
            match c % 3 {
                1 => {
                    rows.push(gamma + u);
                    has_h1 = true;
                }
                2 => rows.push(2 * gamma + u),
                _ => {}
            }
            c /= 3;
        }
        if has_h1 {
            rows.sort_unstable();
            out.push(RowSet(rows));
        }
    }
    out.sort_by(|a, b| {
        let dummy = |s: &RowSet| s.0.iter().any(|&r| r >= 2 * gamma);
        (a.len(), dummy(a), &a.0).cmp(&(b.len(), dummy(b), &b.0))
    });
    out
}

/// Every non-empty subset of the dummy rows; fixed by the degree
/// distribution rather than by the partitioning.
pub fn dummy_sets(gamma: usize) -> Vec<RowSet> {
    (1u32..1 << gamma)
        .map(|mask| {
            RowSet(
                (0..gamma)
                    .filter(|u| mask >> u & 1 == 1)
                    .map(|u| 2 * gamma + u)
                    .collect(),
            )
        })
        .collect()
}

/// Known overlap values keyed by row set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapTable {
    gamma: usize,
    kappa: usize,
    entries: BTreeMap<RowSet, u64>,
}

impl OverlapTable {
    pub fn new(gamma: usize, kappa: usize) -> Self {
        Self {
            gamma,
            kappa,
            entries: BTreeMap::new(),
        }
    }

    /// Table holding every free parameter plus the dummy-only overlaps,
    /// which together determine all other overlaps.
    pub fn from_stacked(pi: &StackedProtograph) -> Self {
        let mut t = Self::new(pi.gamma, pi.kappa);
        for set in enumerate_ndi(pi.gamma)
            .into_iter()
            .chain(dummy_sets(pi.gamma))
        {
            let v = pi.overlap(set.rows()).expect("rows in range");
            t.entries.insert(set, v);
        }
        t
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn insert(&mut self, set: RowSet, value: u64) -> Result<()> {
        if let Some(&bad) = set.rows().iter().find(|&&r| r >= 3 * self.gamma) {
            return Err(Error::RowOutOfRange {
                index: bad,
                rows: 3 * self.gamma,
            });
        }
        if self.entries.contains_key(&set) {
            return Err(Error::InvalidParameter(format!("{set} entered twice")));
        }
        self.entries.insert(set, value);
        Ok(())
    }

    pub fn get(&self, set: &RowSet) -> Option<u64> {
        self.entries.get(set).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RowSet, u64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value of any overlap parameter: the empty set is `kappa`, row-group
    /// clashes are zero, stored sets are looked up, and sets touching `H_0`
    /// are expanded by inclusion-exclusion.
    pub fn resolve(&self, set: &RowSet) -> Result<i64> {
        if set.is_empty() {
            return Ok(self.kappa as i64);
        }
        if set.has_residue_clash(self.gamma) {
            return Ok(0);
        }
        if let Some(v) = self.get(set) {
            return Ok(v as i64);
        }
        if set.rows()[0] < self.gamma {
            return expand_dependent(set, self, self.kappa, self.gamma);
        }
        Err(Error::Unresolved(set.to_string()))
    }

    pub fn to_json(&self) -> String {
        let json = TableJson {
            gamma: self.gamma,
            kappa: self.kappa,
            entries: self.entries.iter().map(|(k, &v)| (k.key(), v)).collect(),
        };
        serde_json::to_string_pretty(&json).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: TableJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("overlap table JSON: {e}")))?;
        let mut t = Self::new(json.gamma, json.kappa);
        for (k, v) in json.entries {
            t.insert(RowSet::parse_key(&k)?, v)?;
        }
        Ok(t)
    }
}

impl OverlapSource for OverlapTable {
    fn overlap_of(&self, rows: &[usize]) -> Result<i64> {
        self.resolve(&RowSet::from_unsorted(rows.to_vec())?)
    }
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    gamma: usize,
    kappa: usize,
    entries: BTreeMap<String, u64>,
}

/// Overlap of a set touching `H_0` rows, written in terms of overlaps among
/// `H_1` and dummy rows only.
///
/// With `I` the `H_0` members and `J` the rest, a column counts toward
/// `t_{I u J}` when all of `J` is set there and, for every `i` in `I`, neither
/// `gamma + i` nor `2 gamma + i` is. Inclusion-exclusion over those excluded
/// rows gives
/// `t_J + sum_{a>=1} (-1)^a sum_{I' in I, |I'| = a, x in {1,2}^a} t_{J u {x gamma + I'}}`
/// with `t_{}` = `kappa`.
///
/// A target whose members share a row group returns 0 without consulting
/// the table, since that overlap is identically zero.
pub fn expand_dependent(
    target: &RowSet,
    table: &OverlapTable,
    kappa: usize,
    gamma: usize,
) -> Result<i64> {
    if let Some(&bad) = target.rows().iter().find(|&&r| r >= 3 * gamma) {
        return Err(Error::RowOutOfRange {
            index: bad,
            rows: 3 * gamma,
        });
    }
    if target.has_residue_clash(gamma) {
        return Ok(0);
    }
    let (i_part, j_part): (Vec<usize>, Vec<usize>) =
        target.rows().iter().partition(|&&r| r < gamma);
    let lookup = |rows: Vec<usize>| -> Result<i64> {
        if rows.is_empty() {
            return Ok(kappa as i64);
        }
        let set = RowSet::from_unsorted(rows)?;
        if set.has_residue_clash(gamma) {
            return Ok(0);
        }
        table
            .get(&set)
            .map(|v| v as i64)
            .ok_or_else(|| Error::Unresolved(set.to_string()))
    };
    let n = i_part.len();
    let mut total = lookup(j_part.clone())?;
    // Each non-empty subset of I, each member lifted to block 1 or 2.
    for mask in 1u32..1 << n {
        let chosen: Vec<usize> = (0..n)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| i_part[b])
            .collect();
        let alpha = chosen.len();
        let sign = if alpha % 2 == 1 { -1 } else { 1 };
        for blocks in 0u32..1 << alpha {
            let mut rows = j_part.clone();
            for (b, &i) in chosen.iter().enumerate() {
                let x = 1 + (blocks >> b & 1) as usize;
                rows.push(x * gamma + i);
            }
            total += sign * lookup(rows)?;
        }
    }
    Ok(total)
}
