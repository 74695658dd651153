//! Cycle counting: the closed form over overlap parameters, brute-force
//! protograph enumeration, and lifted counts through the circulant-power
//! condition.

use serde::{Deserialize, Serialize};

use crate::cb::{CbMatrix, Label, PartitioningMatrix, Protograph};
use crate::error::{Error, Result};
use crate::overlap::{OverlapSource, OverlapTable, RowSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Protograph,
    Lifted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCensus {
    pub length: usize,
    pub scope: Scope,
    pub count: u64,
    /// Row-major `gamma x kappa` participation counts: every cycle adds its
    /// multiplicity once per edge it routes through that circulant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_circulant: Option<Vec<Vec<u64>>>,
}

impl CycleCensus {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("census serializes")
    }
}

fn pos_part(x: i64) -> i64 {
    x.max(0)
}

/// Cycles whose three rows `a`, `b`, `c` are joined by distinct columns
/// `a-b`, `b-c`, `a-c`, given the triple and pair overlaps.
fn term_a(t123: i64, t12: i64, t13: i64, t23: i64) -> i64 {
    t123 * pos_part(t123 - 1) * pos_part(t23 - 2)
        + t123 * (t13 - t123) * pos_part(t23 - 1)
        + (t12 - t123) * t123 * pos_part(t23 - 1)
        + (t12 - t123) * (t13 - t123) * t23
}

/// Cycles with two columns in one replica and the third in its neighbour;
/// `t_shift` is the overlap of the shared rows seen from the neighbour.
fn term_b(t123: i64, t12: i64, t13: i64, t_shift: i64) -> i64 {
    t123 * pos_part(t13 - 1) * t_shift + (t12 - t123) * t13 * t_shift
}

/// The overlap sets and index tuples needed by the closed-form count, fixed
/// for a given `gamma`.
#[derive(Debug, Clone)]
pub struct Theorem1Plan {
    gamma: usize,
    sets: Vec<RowSet>,
    a_terms: Vec<[usize; 4]>,
    b_terms: Vec<[usize; 4]>,
}

impl Theorem1Plan {
    pub fn new(gamma: usize) -> Self {
        let mut sets: Vec<RowSet> = Vec::new();
        let mut index = |rows: Vec<usize>| -> usize {
            let s = RowSet::from_unsorted(rows).expect("distinct rows");
            match sets.iter().position(|x| *x == s) {
                Some(i) => i,
                None => {
                    sets.push(s);
                    sets.len() - 1
                }
            }
        };
        let distinct = |a: usize, b: usize, c: usize| {
            a % gamma != b % gamma && a % gamma != c % gamma && b % gamma != c % gamma
        };
        let n = 2 * gamma;
        let mut a_terms = Vec::new();
        for i1 in 0..n {
            for i2 in i1 + 1..n {
                for i3 in i2 + 1..n {
                    if distinct(i1, i2, i3) {
                        a_terms.push([
                            index(vec![i1, i2, i3]),
                            index(vec![i1, i2]),
                            index(vec![i1, i3]),
                            index(vec![i2, i3]),
                        ]);
                    }
                }
            }
        }
        let mut b_terms = Vec::new();
        for (lo, hi, shift_up) in [(gamma, n, false), (0, gamma, true)] {
            for i1 in 0..n {
                for i2 in lo..hi {
                    for i3 in i2 + 1..hi {
                        if !distinct(i1, i2, i3) {
                            continue;
                        }
                        let shifted = if shift_up {
                            vec![i2 + gamma, i3 + gamma]
                        } else {
                            vec![i2 - gamma, i3 - gamma]
                        };
                        b_terms.push([
                            index(vec![i1, i2, i3]),
                            index(vec![i1, i2]),
                            index(vec![i1, i3]),
                            index(shifted),
                        ]);
                    }
                }
            }
        }
        Self {
            gamma,
            sets,
            a_terms,
            b_terms,
        }
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// Overlap sets in the order `evaluate` expects their values.
    pub fn sets(&self) -> &[RowSet] {
        &self.sets
    }

    /// `(F_1^1, F_1^2)`: single-replica and replica-pair counts.
    pub fn split(&self, values: &[i64]) -> (i64, i64) {
        let f11 = self
            .a_terms
            .iter()
            .map(|t| term_a(values[t[0]], values[t[1]], values[t[2]], values[t[3]]))
            .sum();
        let f12 = self
            .b_terms
            .iter()
            .map(|t| term_b(values[t[0]], values[t[1]], values[t[2]], values[t[3]]))
            .sum();
        (f11, f12)
    }

    /// `L F_1^1 + (L - 1) F_1^2`.
    pub fn evaluate(&self, values: &[i64], coupling_length: usize) -> i64 {
        let (f11, f12) = self.split(values);
        let l = coupling_length as i64;
        l * f11 + (l - 1) * f12
    }

    pub fn values<S: OverlapSource>(&self, source: &S) -> Result<Vec<i64>> {
        self.sets
            .iter()
            .map(|s| source.overlap_of(s.rows()))
            .collect()
    }
}

/// Cycles-6 in the coupled protograph (`m = 1`) from overlap parameters of
/// `[H_0^p; H_1^p]`, resolving dependent parameters through the table.
pub fn theorem1_count(
    table: &OverlapTable,
    coupling_length: usize,
    gamma: usize,
    kappa: usize,
) -> Result<u64> {
    if table.gamma() != gamma || table.kappa() != kappa {
        return Err(Error::mismatch(
            format!("table for gamma = {gamma}, kappa = {kappa}"),
            format!("gamma = {}, kappa = {}", table.gamma(), table.kappa()),
        ));
    }
    theorem1_count_with(table, coupling_length, gamma)
}

pub fn theorem1_count_with<S: OverlapSource>(
    source: &S,
    coupling_length: usize,
    gamma: usize,
) -> Result<u64> {
    if coupling_length == 0 {
        return Err(Error::InvalidParameter(
            "coupling length must be at least 1".into(),
        ));
    }
    let plan = Theorem1Plan::new(gamma);
    let values = plan.values(source)?;
    Ok(plan.evaluate(&values, coupling_length).max(0) as u64)
}

/// Exhaustive count over row pairs (length 4) or row triples (length 6).
/// Every cycle is counted once as an edge set.
pub fn brute_force_proto_cycles(p: &Protograph, length: usize) -> Result<CycleCensus> {
    if length != 4 && length != 6 {
        return Err(Error::UnsupportedCycleLength(length));
    }
    let rows: Vec<Vec<usize>> = (0..p.rows())
        .map(|r| (0..p.cols()).filter(|&c| p.get(r, c)).collect())
        .collect();
    let per_row = |a: usize| -> u64 {
        let mut total = 0u64;
        for b in a + 1..rows.len() {
            let ab = intersect(&rows[a], &rows[b]);
            if length == 4 {
                let s = ab.len() as u64;
                total += s * s.saturating_sub(1) / 2;
                continue;
            }
            if ab.is_empty() {
                continue;
            }
            for c in b + 1..rows.len() {
                let bc = intersect(&rows[b], &rows[c]);
                let ac = intersect(&rows[a], &rows[c]);
                for &x in &ab {
                    for &y in &bc {
                        if y == x {
                            continue;
                        }
                        total += ac.iter().filter(|&&w| w != x && w != y).count() as u64;
                    }
                }
            }
        }
        total
    };
    #[cfg(feature = "parallel")]
    let count = {
        use rayon::prelude::*;
        (0..rows.len()).into_par_iter().map(per_row).sum()
    };
    #[cfg(not(feature = "parallel"))]
    let count = (0..rows.len()).map(per_row).sum();
    Ok(CycleCensus {
        length,
        scope: Scope::Protograph,
        count,
        per_circulant: None,
    })
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// One protograph cycle of the coupled code, described by the circulants it
/// routes through (row-major position in `H`) and the sign each power takes
/// in the alternating sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleTemplate {
    pub terms: Vec<(usize, i64)>,
    /// Number of copies across the coupled chain (`L` or `L - 1`).
    pub multiplicity: u64,
}

impl CycleTemplate {
    /// A protograph cycle lifts to `z` cycles exactly when the alternating
    /// power sum vanishes mod `z`, and to none otherwise.
    pub fn lifts(&self, powers: &[i64], z: i64) -> bool {
        self.terms
            .iter()
            .map(|&(pos, sign)| sign * powers[pos])
            .sum::<i64>()
            .rem_euclid(z)
            == 0
    }
}

/// All protograph cycles of one length in a two-replica window of an `m = 1`
/// coupled code. Cycles within one replica appear `L` times in the full
/// chain and cycles straddling a replica boundary `L - 1` times; no short
/// cycle can reach three replicas.
#[derive(Debug, Clone)]
pub struct LiftedCycleIndex {
    gamma: usize,
    kappa: usize,
    length: usize,
    cycles: Vec<CycleTemplate>,
    by_position: Vec<Vec<usize>>,
}

impl LiftedCycleIndex {
    pub fn new(pm: &PartitioningMatrix, coupling_length: usize, length: usize) -> Result<Self> {
        pm.require_memory_one()?;
        if length != 4 && length != 6 {
            return Err(Error::UnsupportedCycleLength(length));
        }
        if coupling_length == 0 {
            return Err(Error::InvalidParameter(
                "coupling length must be at least 1".into(),
            ));
        }
        let (gamma, kappa) = (pm.gamma(), pm.kappa());
        let reps = coupling_length.min(2);
        let n_rows = (reps + 1) * gamma;
        // Column lists per window row, tagged with the underlying position.
        let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_rows];
        for r in 0..reps {
            for i in 0..gamma {
                for j in 0..kappa {
                    if let Label::Component(k) = pm.get(i, j) {
                        rows[(r + k) * gamma + i].push((r * kappa + j, i * kappa + j));
                    }
                }
            }
        }
        for row in rows.iter_mut() {
            row.sort_unstable();
        }
        let pos_of = |row: usize, col: usize| -> usize {
            let idx = rows[row]
                .binary_search_by_key(&col, |&(c, _)| c)
                .expect("edge present");
            rows[row][idx].1
        };
        let common = |a: usize, b: usize| -> Vec<usize> {
            let ca: Vec<usize> = rows[a].iter().map(|&(c, _)| c).collect();
            let cb: Vec<usize> = rows[b].iter().map(|&(c, _)| c).collect();
            intersect(&ca, &cb)
        };
        let l = coupling_length as u64;
        let mut cycles = Vec::new();
        let mut push = |cols: &[usize], terms: Vec<(usize, i64)>| {
            let first = cols.iter().all(|&c| c < kappa);
            let second = cols.iter().all(|&c| c >= kappa);
            let multiplicity = if first {
                l
            } else if second {
                return;
            } else {
                l - 1
            };
            cycles.push(CycleTemplate {
                terms,
                multiplicity,
            });
        };
        for a in 0..n_rows {
            for b in a + 1..n_rows {
                let ab = common(a, b);
                if length == 4 {
                    for (xi, &x) in ab.iter().enumerate() {
                        for &y in &ab[xi + 1..] {
                            let terms = vec![
                                (pos_of(a, x), 1),
                                (pos_of(b, x), -1),
                                (pos_of(b, y), 1),
                                (pos_of(a, y), -1),
                            ];
                            push(&[x, y], terms);
                        }
                    }
                    continue;
                }
                if ab.is_empty() {
                    continue;
                }
                for c in b + 1..n_rows {
                    let bc = common(b, c);
                    let ac = common(a, c);
                    for &x in &ab {
                        for &y in &bc {
                            if y == x {
                                continue;
                            }
                            for &w in &ac {
                                if w == x || w == y {
                                    continue;
                                }
                                let terms = vec![
                                    (pos_of(a, x), 1),
                                    (pos_of(b, x), -1),
                                    (pos_of(b, y), 1),
                                    (pos_of(c, y), -1),
                                    (pos_of(c, w), 1),
                                    (pos_of(a, w), -1),
                                ];
                                push(&[x, y, w], terms);
                            }
                        }
                    }
                }
            }
        }
        let mut by_position = vec![Vec::new(); gamma * kappa];
        for (idx, cyc) in cycles.iter().enumerate() {
            for &(pos, _) in &cyc.terms {
                if by_position[pos].last() != Some(&idx) {
                    by_position[pos].push(idx);
                }
            }
        }
        Ok(Self {
            gamma,
            kappa,
            length,
            cycles,
            by_position,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn cycles(&self) -> &[CycleTemplate] {
        &self.cycles
    }

    /// Indices of cycles routing through a row-major circulant position.
    pub fn through(&self, pos: usize) -> &[usize] {
        &self.by_position[pos]
    }

    /// Protograph cycle count of the full chain.
    pub fn protograph_count(&self) -> u64 {
        self.cycles.iter().map(|c| c.multiplicity).sum()
    }

    /// Lifted cycle count for row-major powers.
    pub fn count(&self, powers: &[i64], z: usize) -> u64 {
        self.count_subset(0..self.cycles.len(), powers, z)
    }

    pub fn count_subset(
        &self,
        indices: impl IntoIterator<Item = usize>,
        powers: &[i64],
        z: usize,
    ) -> u64 {
        indices
            .into_iter()
            .map(|i| &self.cycles[i])
            .filter(|c| c.lifts(powers, z as i64))
            .map(|c| c.multiplicity * z as u64)
            .sum()
    }

    pub fn census(&self, powers: &[i64], z: usize) -> CycleCensus {
        let mut grid = vec![vec![0u64; self.kappa]; self.gamma];
        let mut count = 0;
        for c in &self.cycles {
            if c.lifts(powers, z as i64) {
                let lifted = c.multiplicity * z as u64;
                count += lifted;
                for &(pos, _) in &c.terms {
                    grid[pos / self.kappa][pos % self.kappa] += lifted;
                }
            }
        }
        CycleCensus {
            length: self.length,
            scope: Scope::Lifted,
            count,
            per_circulant: Some(grid),
        }
    }
}

/// Row-major powers for every non-dummy position of `pm`.
pub fn powers_for(pm: &PartitioningMatrix, cm: &CbMatrix) -> Result<Vec<i64>> {
    if cm.gamma() != pm.gamma() || cm.kappa() != pm.kappa() {
        return Err(Error::mismatch(
            format!("{}x{} power matrix", pm.gamma(), pm.kappa()),
            format!("{}x{}", cm.gamma(), cm.kappa()),
        ));
    }
    let mut out = vec![0i64; pm.gamma() * pm.kappa()];
    for i in 0..pm.gamma() {
        for j in 0..pm.kappa() {
            if pm.get(i, j) == Label::Dummy {
                continue;
            }
            out[i * pm.kappa() + j] =
                cm.get(i, j)
                    .power()
                    .ok_or(Error::MissingPower { row: i, col: j })? as i64;
        }
    }
    Ok(out)
}

/// Cycles of the given length in the lifted coupled code.
pub fn lifted_cycle_count(
    pm: &PartitioningMatrix,
    cm: &CbMatrix,
    z: usize,
    coupling_length: usize,
    length: usize,
) -> Result<CycleCensus> {
    if cm.z() != z {
        return Err(Error::mismatch(
            format!("z = {z}"),
            format!("z = {}", cm.z()),
        ));
    }
    let powers = powers_for(pm, cm)?;
    let index = LiftedCycleIndex::new(pm, coupling_length, length)?;
    Ok(index.census(&powers, z))
}

/// Shortest cycle length in the lifted graph, probing 4 then 6; 8 stands for
/// anything longer than 6.
pub fn girth(
    pm: &PartitioningMatrix,
    cm: &CbMatrix,
    z: usize,
    coupling_length: usize,
) -> Result<usize> {
    for length in [4, 6] {
        if lifted_cycle_count(pm, cm, z, coupling_length, length)?.count > 0 {
            return Ok(length);
        }
    }
    Ok(8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cb::{assemble_sc, make_ab_powers, partition};
    use crate::overlap::build_pi;

    fn ones(r: usize, c: usize) -> Protograph {
        Protograph::from_bools(r, c, vec![true; r * c])
    }

    #[test]
    fn complete_bipartite() {
        assert_eq!(brute_force_proto_cycles(&ones(2, 2), 4).unwrap().count, 1);
        assert_eq!(brute_force_proto_cycles(&ones(2, 2), 6).unwrap().count, 0);
        assert_eq!(brute_force_proto_cycles(&ones(3, 3), 4).unwrap().count, 9);
        assert_eq!(brute_force_proto_cycles(&ones(3, 3), 6).unwrap().count, 6);
        assert!(brute_force_proto_cycles(&ones(3, 3), 8).is_err());
    }

    #[test]
    fn zero_row_is_ignored() {
        let mut p = ones(4, 4);
        for c in 0..4 {
            p.set(2, c, false);
        }
        p.set(0, 1, false);
        for len in [4, 6] {
            assert_eq!(
                brute_force_proto_cycles(&p, len).unwrap(),
                brute_force_proto_cycles(&p.without_row(2), len).unwrap()
            );
        }
    }

    #[test]
    fn closed_form_on_full_3x3() {
        // All circulants in H_0, L = 1: the coupled protograph is K_{3,3}
        // stacked over an empty block.
        let pm = PartitioningMatrix::uniform(3, 3, 1, Label::Component(0)).unwrap();
        let table = OverlapTable::from_stacked(&build_pi(&pm).unwrap());
        assert_eq!(theorem1_count(&table, 1, 3, 3).unwrap(), 6);
        assert!(theorem1_count(&table, 1, 3, 4).is_err());
        assert!(theorem1_count(&table, 0, 3, 3).is_err());
    }

    #[test]
    fn lifted_matches_direct_count_small() {
        // Walk the full lifted matrix for a few small codes.
        let pm = PartitioningMatrix::parse("0 1 0 X\n1 0 1 0\n0 0 1 1\n", Some(1)).unwrap();
        for z in 1..=5 {
            let h = make_ab_powers(3, 4, z).unwrap();
            for l in 1..=3 {
                let sc = assemble_sc(&partition(&h, &pm).unwrap().components, l).unwrap();
                for len in [4, 6] {
                    let fast = lifted_cycle_count(&pm, &h, z, l, len).unwrap().count;
                    let direct = sc.lifted().count_cycles(len).unwrap();
                    assert_eq!(fast, direct, "z={z} L={l} len={len}");
                }
            }
        }
    }

    #[test]
    fn per_circulant_sums() {
        let pm = PartitioningMatrix::parse("0 1 0 X\n1 0 1 0\n0 0 1 1\n", Some(1)).unwrap();
        let h = make_ab_powers(3, 4, 1).unwrap();
        let c = lifted_cycle_count(&pm, &h, 1, 3, 6).unwrap();
        let total: u64 = c.per_circulant.unwrap().iter().flatten().sum();
        assert_eq!(total, 6 * c.count);
    }

    #[test]
    fn missing_power_reported() {
        let pm = PartitioningMatrix::parse("0 1\n1 0\n", Some(1)).unwrap();
        let cm = CbMatrix::parse("0 X\n0 1\n", 3).unwrap();
        assert_eq!(
            lifted_cycle_count(&pm, &cm, 3, 2, 6),
            Err(Error::MissingPower { row: 0, col: 1 })
        );
    }

    #[test]
    fn girth_extremes() {
        let pm = PartitioningMatrix::parse("0 X\nX X\n", Some(1)).unwrap();
        let cm = make_ab_powers(2, 2, 3).unwrap();
        assert_eq!(girth(&pm, &cm, 3, 4).unwrap(), 8);
        let pm = PartitioningMatrix::parse("0 0\n0 0\n", Some(1)).unwrap();
        let cm = CbMatrix::parse("0 0\n0 0\n", 3).unwrap();
        assert_eq!(girth(&pm, &cm, 3, 2).unwrap(), 4);
    }
}
