//! Sparse binary matrices, alist interchange and direct short-cycle counts.

use crate::error::{Error, Result};

/// A binary matrix stored as sorted adjacency lists in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col)` coordinates. Duplicates collapse to a
    /// single one (this is a 0/1 matrix, not an edge multiset).
    pub fn from_entries(
        n_rows: usize,
        n_cols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut row_adj = vec![Vec::new(); n_rows];
        for (r, c) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::mismatch(
                    format!("entry within {n_rows}x{n_cols}"),
                    format!("({r}, {c})"),
                ));
            }
            row_adj[r].push(c);
        }
        let mut col_adj = vec![Vec::new(); n_cols];
        for (r, cols) in row_adj.iter_mut().enumerate() {
            cols.sort_unstable();
            cols.dedup();
            for &c in cols.iter() {
                col_adj[c].push(r);
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_adj,
            col_adj,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn nnz(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&c).is_ok()
    }

    /// Restriction to a contiguous range of columns, re-indexed from 0.
    pub fn column_block(&self, start: usize, width: usize) -> SparseMatrix {
        let entries = (start..start + width)
            .flat_map(|c| self.col_adj[c].iter().map(move |&r| (r, c - start)));
        SparseMatrix::from_entries(self.n_rows, width, entries)
            .expect("column block stays within bounds")
    }

    /// Syndrome of a hard-decision word; `true` marks an unsatisfied check.
    pub fn syndrome(&self, word: &[u8]) -> Vec<bool> {
        self.row_adj
            .iter()
            .map(|cols| cols.iter().fold(0u8, |acc, &c| acc ^ (word[c] & 1)) == 1)
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        self.row_adj
            .iter()
            .all(|cols| cols.iter().fold(0u8, |acc, &c| acc ^ (word[c] & 1)) == 0)
    }

    /// Serializes in the alist format: dimensions, maximum degrees, per-node
    /// degrees, then 1-based column adjacency lists followed by row
    /// adjacency lists. Lists are zero-padded to the maximum degree.
    pub fn to_alist(&self) -> String {
        let max_col = self.col_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = format!("{} {}\n{} {}\n", self.n_cols, self.n_rows, max_col, max_row);
        let join = |v: Vec<String>| v.join(" ");
        out += &join(self.col_adj.iter().map(|v| v.len().to_string()).collect());
        out.push('\n');
        out += &join(self.row_adj.iter().map(|v| v.len().to_string()).collect());
        out.push('\n');
        for (lists, width) in [(&self.col_adj, max_col), (&self.row_adj, max_row)] {
            for list in lists.iter() {
                let mut cells: Vec<String> = list.iter().map(|x| (x + 1).to_string()).collect();
                cells.resize(width, "0".to_string());
                out += &join(cells);
                out.push('\n');
            }
        }
        out
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        let mut nums = Vec::new();
        for (li, line) in text.lines().enumerate() {
            for (wi, w) in line.split_whitespace().enumerate() {
                let v = w.parse::<usize>().map_err(|_| Error::Parse {
                    line: li + 1,
                    column: wi + 1,
                    message: format!("expected a non-negative integer, found `{w}`"),
                })?;
                nums.push(v);
            }
        }
        let mut it = nums.into_iter();
        let mut next = |what: &str| {
            it.next().ok_or_else(|| Error::Parse {
                line: 0,
                column: 0,
                message: format!("alist truncated while reading {what}"),
            })
        };
        let n_cols = next("dimensions")?;
        let n_rows = next("dimensions")?;
        let max_col = next("maximum degrees")?;
        let max_row = next("maximum degrees")?;
        let col_deg = (0..n_cols)
            .map(|_| next("column degrees"))
            .collect::<Result<Vec<_>>>()?;
        let row_deg = (0..n_rows)
            .map(|_| next("row degrees"))
            .collect::<Result<Vec<_>>>()?;
        let mut entries = Vec::new();
        for (c, &deg) in col_deg.iter().enumerate() {
            let mut seen = 0;
            for _ in 0..max_col {
                let v = next("column lists")?;
                if v > 0 {
                    entries.push((v - 1, c));
                    seen += 1;
                }
            }
            if seen != deg {
                return Err(Error::mismatch(
                    format!("{deg} entries for column {}", c + 1),
                    seen,
                ));
            }
        }
        let m = SparseMatrix::from_entries(n_rows, n_cols, entries)?;
        for (r, &deg) in row_deg.iter().enumerate() {
            let mut listed = Vec::new();
            for _ in 0..max_row {
                let v = next("row lists")?;
                if v > 0 {
                    listed.push(v - 1);
                }
            }
            listed.sort_unstable();
            if listed.len() != deg || listed != m.row_adj[r] {
                return Err(Error::mismatch(
                    format!("row {} consistent with column lists", r + 1),
                    format!("{listed:?}"),
                ));
            }
        }
        Ok(m)
    }

    /// Number of distinct cycles of length 4 or 6 in the Tanner graph,
    /// found by walking the sparse adjacency directly.
    pub fn count_cycles(&self, length: usize) -> Result<u64> {
        match length {
            4 => Ok(self.count_cycles4()),
            6 => Ok(self.count_cycles6()),
            other => Err(Error::UnsupportedCycleLength(other)),
        }
    }

    fn common_counts(&self, a: usize, counts: &mut [u32], touched: &mut Vec<usize>) {
        for &x in &self.row_adj[a] {
            for &b in &self.col_adj[x] {
                if b != a {
                    if counts[b] == 0 {
                        touched.push(b);
                    }
                    counts[b] += 1;
                }
            }
        }
    }

    fn count_cycles4(&self) -> u64 {
        let mut counts = vec![0u32; self.n_rows];
        let mut touched = Vec::new();
        let mut total = 0u64;
        for a in 0..self.n_rows {
            self.common_counts(a, &mut counts, &mut touched);
            for &b in &touched {
                if b > a {
                    let s = counts[b] as u64;
                    total += s * (s.saturating_sub(1)) / 2;
                }
                counts[b] = 0;
            }
            touched.clear();
        }
        total
    }

    // Each 6-cycle is anchored at its smallest check index `a` and walked
    // a -x- b -y- c -w- a in both directions, hence the final halving.
    fn count_cycles6(&self) -> u64 {
        let mut counts = vec![0u32; self.n_rows];
        let mut touched = Vec::new();
        let mut in_a = vec![false; self.n_cols];
        let mut total = 0u64;
        for a in 0..self.n_rows {
            self.common_counts(a, &mut counts, &mut touched);
            for &x in &self.row_adj[a] {
                in_a[x] = true;
            }
            for &x in &self.row_adj[a] {
                for &b in &self.col_adj[x] {
                    if b <= a {
                        continue;
                    }
                    for &y in &self.row_adj[b] {
                        if y == x {
                            continue;
                        }
                        for &c in &self.col_adj[y] {
                            if c <= a || c == b {
                                continue;
                            }
                            let mut w = counts[c] as i64;
                            if self.get(c, x) {
                                w -= 1;
                            }
                            if in_a[y] {
                                w -= 1;
                            }
                            total += w.max(0) as u64;
                        }
                    }
                }
            }
            for &x in &self.row_adj[a] {
                in_a[x] = false;
            }
            for &b in &touched {
                counts[b] = 0;
            }
            touched.clear();
        }
        total / 2
    }
}
