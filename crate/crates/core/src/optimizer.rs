//! Partition search for `m = 1` irregular coupled codes.
//!
//! Every overlap parameter counts columns of `Pi`, and a column of `Pi` is
//! fully described by its [`ColumnType`]: which component each row group of
//! that column goes to. Columns with the same dummy pattern are
//! interchangeable, so the search runs over per-class type counts rather than
//! over raw assignments.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cb::{Label, PartitioningMatrix, Protograph};
use crate::cycles::{theorem1_count, Theorem1Plan};
use crate::error::{Error, Result};
use crate::overlap::{build_pi, OverlapTable};

/// Component of each row group in one column of the partitioning.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnType {
    pub pattern: Vec<Label>,
}

impl ColumnType {
    fn dummy_mask(&self) -> u32 {
        self.pattern
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == Label::Dummy)
            .fold(0, |m, (u, _)| m | 1 << u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    Annealing,
    CoordinateDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Largest allowed `|#H_0 - #H_1|` over non-dummy circulants.
    pub balance_tolerance: usize,
    pub mode: SearchMode,
    /// Maximum number of objective evaluations.
    pub budget: u64,
    pub seed: u64,
    /// Independent annealing chains; the budget is split between them.
    pub chains: usize,
    /// Starting and final annealing temperatures.
    pub t_start: f64,
    pub t_end: f64,
    /// Record a log line every this many evaluations (accepted moves that
    /// improve the best value are always logged).
    pub log_every: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            balance_tolerance: 2,
            mode: SearchMode::Annealing,
            budget: 1_000_000,
            seed: 0,
            chains: 4,
            t_start: 60.0,
            t_end: 0.5,
            log_every: 10_000,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidParameter("budget must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidParameter(
                "at least one chain is required".into(),
            ));
        }
        if !(self.t_start > 0.0 && self.t_end > 0.0 && self.t_end <= self.t_start) {
            return Err(Error::InvalidParameter(
                "temperatures must satisfy 0 < t_end <= t_start".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub chain: usize,
    pub iteration: u64,
    #[serde(rename = "F")]
    pub f: u64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub pm: PartitioningMatrix,
    pub f: u64,
    pub evaluations: u64,
    /// Heuristic modes stop on budget; this is set when that happened.
    pub budget_exhausted: bool,
    pub log: Vec<LogEntry>,
}

/// Cycles-6 of the coupled protograph for an `m = 1` partitioning, via the
/// stacked protograph, its overlap table and the closed-form count.
pub fn evaluate(pm: &PartitioningMatrix, coupling_length: usize) -> Result<u64> {
    let pi = build_pi(pm)?;
    let table = OverlapTable::from_stacked(&pi);
    theorem1_count(&table, coupling_length, pm.gamma(), pm.kappa())
}

/// Builds a dummy protograph realizing target degree fractions.
///
/// `lambda[i]` is the fraction of variable nodes of degree `i + 1` (a column
/// with `gamma - i - 1` dummies); `phi[j]` the fraction of interior check
/// nodes of degree `j + 1` (a row with `kappa - j - 1` dummies). Heavier
/// columns and rows take the lower indices, and ones are placed row by row
/// into the columns with the largest remaining demand, which succeeds
/// exactly when the Gale-Ryser condition holds.
pub fn dummy_from_distribution(
    lambda: &[f64],
    phi: &[f64],
    gamma: usize,
    kappa: usize,
) -> Result<Protograph> {
    if lambda.len() != gamma {
        return Err(Error::mismatch(
            format!("{gamma} VN fractions"),
            lambda.len(),
        ));
    }
    if phi.len() != kappa {
        return Err(Error::mismatch(format!("{kappa} CN fractions"), phi.len()));
    }
    let as_count = |frac: f64, total: usize, what: &str| -> Result<usize> {
        let x = frac * total as f64;
        let r = x.round();
        if frac < 0.0 || (x - r).abs() > 1e-6 {
            return Err(Error::Infeasible(format!(
                "{what} fraction {frac} is not a multiple of 1/{total}"
            )));
        }
        Ok(r as usize)
    };
    let mut col_weights = Vec::new();
    for (i, &f) in lambda.iter().enumerate() {
        let n = as_count(f, kappa, "VN")?;
        col_weights.extend(std::iter::repeat_n(gamma - i - 1, n));
    }
    let mut row_weights = Vec::new();
    for (j, &f) in phi.iter().enumerate() {
        let n = as_count(f, gamma, "CN")?;
        row_weights.extend(std::iter::repeat_n(kappa - j - 1, n));
    }
    if col_weights.len() != kappa || row_weights.len() != gamma {
        return Err(Error::Infeasible(format!(
            "fractions describe {} columns and {} rows, expected {kappa} and {gamma}",
            col_weights.len(),
            row_weights.len()
        )));
    }
    col_weights.sort_unstable_by(|a, b| b.cmp(a));
    row_weights.sort_unstable_by(|a, b| b.cmp(a));
    let col_total: usize = col_weights.iter().sum();
    let row_total: usize = row_weights.iter().sum();
    if col_total != row_total {
        return Err(Error::Infeasible(format!(
            "Gale-Ryser: column dummies sum to {col_total} but row dummies to {row_total}"
        )));
    }
    let mut lhs = 0;
    for (k, &a) in row_weights.iter().enumerate() {
        lhs += a;
        let rhs: usize = col_weights.iter().map(|&b| b.min(k + 1)).sum();
        if lhs > rhs {
            return Err(Error::Infeasible(format!(
                "Gale-Ryser: the {} heaviest rows need {lhs} dummies but columns admit {rhs}",
                k + 1
            )));
        }
    }
    let mut demand = col_weights.clone();
    let mut hd = Protograph::zeros(gamma, kappa);
    for (u, &a) in row_weights.iter().enumerate() {
        let mut order: Vec<usize> = (0..kappa).collect();
        order.sort_by(|&x, &y| demand[y].cmp(&demand[x]).then(x.cmp(&y)));
        for &c in order.iter().take(a) {
            if demand[c] == 0 {
                return Err(Error::Infeasible("Gale-Ryser construction failed".into()));
            }
            demand[c] -= 1;
            hd.set(u, c, true);
        }
    }
    Ok(hd)
}

/// Columns sharing one dummy pattern, with the types they may take.
#[derive(Debug, Clone)]
struct ColumnClass {
    mask: u32,
    columns: Vec<usize>,
    types: Vec<ColumnType>,
    /// Net `#H_0 - #H_1` contributed by one column of each type.
    balance: Vec<i64>,
}

/// Search space and fast objective for a fixed dummy pattern.
#[derive(Debug, Clone)]
pub struct ProfileSpace {
    gamma: usize,
    kappa: usize,
    coupling_length: usize,
    classes: Vec<ColumnClass>,
    plan: Theorem1Plan,
    /// `covers[class][type]`: indices of plan sets the type contributes to.
    covers: Vec<Vec<Vec<usize>>>,
}

/// Per-class type counts, aligned with `ProfileSpace` classes.
pub type Profile = Vec<Vec<u32>>;

impl ProfileSpace {
    pub fn new(hd: &Protograph, coupling_length: usize) -> Result<Self> {
        let (gamma, kappa) = (hd.rows(), hd.cols());
        if gamma == 0 || kappa == 0 || gamma > 16 {
            return Err(Error::InvalidParameter(format!(
                "unsupported dummy pattern size {gamma}x{kappa}"
            )));
        }
        if coupling_length == 0 {
            return Err(Error::InvalidParameter(
                "coupling length must be at least 1".into(),
            ));
        }
        let mut by_mask: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for c in 0..kappa {
            let mask = (0..gamma)
                .filter(|&u| hd.get(u, c))
                .fold(0, |m, u| m | 1 << u);
            by_mask.entry(mask).or_default().push(c);
        }
        let plan = Theorem1Plan::new(gamma);
        let mut classes = Vec::new();
        let mut covers = Vec::new();
        for (mask, columns) in by_mask {
            let free: Vec<usize> = (0..gamma).filter(|u| mask >> u & 1 == 0).collect();
            let mut types: Vec<ColumnType> = (0u32..1 << free.len())
                .map(|bits| {
                    let mut pattern = vec![Label::Dummy; gamma];
                    for (b, &u) in free.iter().enumerate() {
                        pattern[u] = Label::Component((bits >> b & 1) as usize);
                    }
                    ColumnType { pattern }
                })
                .collect();
            types.sort();
            let balance = types
                .iter()
                .map(|t| {
                    t.pattern
                        .iter()
                        .map(|l| match l {
                            Label::Component(0) => 1,
                            Label::Component(_) => -1,
                            Label::Dummy => 0,
                        })
                        .sum()
                })
                .collect();
            let cover: Vec<Vec<usize>> = types
                .iter()
                .map(|t| {
                    plan.sets()
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| {
                            s.rows()
                                .iter()
                                .all(|&r| t.pattern[r % gamma] == Label::Component(r / gamma))
                        })
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            covers.push(cover);
            classes.push(ColumnClass {
                mask,
                columns,
                types,
                balance,
            });
        }
        Ok(Self {
            gamma,
            kappa,
            coupling_length,
            classes,
            plan,
            covers,
        })
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Number of distinct profiles, saturating at `u64::MAX`.
    pub fn size(&self) -> u64 {
        self.classes.iter().fold(1u64, |acc, c| {
            acc.saturating_mul(multisets(c.columns.len() as u64, c.types.len() as u64))
        })
    }

    pub fn imbalance(&self, profile: &Profile) -> i64 {
        self.classes
            .iter()
            .zip(profile)
            .map(|(c, counts)| {
                c.balance
                    .iter()
                    .zip(counts)
                    .map(|(&b, &n)| b * n as i64)
                    .sum::<i64>()
            })
            .sum()
    }

    fn overlap_values(&self, profile: &Profile) -> Vec<i64> {
        let mut values = vec![0i64; self.plan.sets().len()];
        for (ci, counts) in profile.iter().enumerate() {
            for (ti, &n) in counts.iter().enumerate() {
                for &s in &self.covers[ci][ti] {
                    values[s] += n as i64;
                }
            }
        }
        values
    }

    /// Closed-form cycles-6 count of a profile.
    pub fn objective(&self, profile: &Profile) -> u64 {
        self.plan
            .evaluate(&self.overlap_values(profile), self.coupling_length)
            .max(0) as u64
    }

    /// Column-type counts as a map, the form [`realize`] accepts.
    pub fn counts(&self, profile: &Profile) -> BTreeMap<ColumnType, usize> {
        let mut out = BTreeMap::new();
        for (class, counts) in self.classes.iter().zip(profile) {
            for (t, &n) in class.types.iter().zip(counts) {
                if n > 0 {
                    *out.entry(t.clone()).or_insert(0) += n as usize;
                }
            }
        }
        out
    }

    pub fn profile_of(&self, pm: &PartitioningMatrix) -> Result<Profile> {
        if pm.gamma() != self.gamma || pm.kappa() != self.kappa {
            return Err(Error::mismatch(
                format!("{}x{}", self.gamma, self.kappa),
                format!("{}x{}", pm.gamma(), pm.kappa()),
            ));
        }
        pm.require_memory_one()?;
        let mut profile: Profile = self
            .classes
            .iter()
            .map(|c| vec![0; c.types.len()])
            .collect();
        for (ci, class) in self.classes.iter().enumerate() {
            for &col in &class.columns {
                let t = ColumnType {
                    pattern: (0..self.gamma).map(|u| pm.get(u, col)).collect(),
                };
                let ti = class.types.iter().position(|x| *x == t).ok_or_else(|| {
                    Error::InconsistentCounts(format!(
                        "column {col} does not follow the dummy pattern"
                    ))
                })?;
                profile[ci][ti] += 1;
            }
        }
        Ok(profile)
    }

    /// Canonical partitioning for a profile: within each class, columns in
    /// ascending order take types in ascending order.
    pub fn realize(&self, profile: &Profile) -> PartitioningMatrix {
        let mut labels = vec![Label::Dummy; self.gamma * self.kappa];
        for (class, counts) in self.classes.iter().zip(profile) {
            let mut cols = class.columns.iter();
            for (t, &n) in class.types.iter().zip(counts) {
                for _ in 0..n {
                    let c = *cols.next().expect("profile matches class size");
                    for u in 0..self.gamma {
                        labels[u * self.kappa + c] = t.pattern[u];
                    }
                }
            }
        }
        PartitioningMatrix::new(self.gamma, self.kappa, 1, labels).expect("valid labels")
    }

    /// Balanced starting point: free entries alternate between the two
    /// components in row-major order.
    fn initial(&self, tolerance: usize) -> Result<Profile> {
        let mut labels = vec![Label::Dummy; self.gamma * self.kappa];
        let mut next = 0;
        for class in &self.classes {
            for &c in &class.columns {
                for u in 0..self.gamma {
                    if class.mask >> u & 1 == 0 {
                        labels[u * self.kappa + c] = Label::Component(next);
                        next ^= 1;
                    }
                }
            }
        }
        let pm = PartitioningMatrix::new(self.gamma, self.kappa, 1, labels)?;
        let p = self.profile_of(&pm)?;
        if self.imbalance(&p).unsigned_abs() as usize > tolerance {
            return Err(Error::Infeasible(
                "no balanced starting partition exists for this tolerance".into(),
            ));
        }
        Ok(p)
    }

    fn apply(&self, values: &mut [i64], class: usize, from: usize, to: usize) {
        for &s in &self.covers[class][from] {
            values[s] -= 1;
        }
        for &s in &self.covers[class][to] {
            values[s] += 1;
        }
    }
}

/// `C(n + k - 1, n)`: ways to place `n` columns into `k` types.
fn multisets(n: u64, k: u64) -> u64 {
    if k == 0 {
        return u64::from(n == 0);
    }
    let top = n + k - 1;
    let r = n.min(k - 1);
    let mut acc: u64 = 1;
    for i in 1..=r {
        acc = match acc.checked_mul(top - r + i) {
            Some(v) => v / i,
            None => return u64::MAX,
        };
    }
    acc
}

#[derive(Debug, Clone)]
struct Best {
    f: u64,
    text: String,
    profile: Profile,
}

impl Best {
    fn offer(&mut self, space: &ProfileSpace, f: u64, profile: &Profile) -> bool {
        if f > self.f {
            return false;
        }
        let text = space.realize(profile).to_text();
        if f < self.f || text < self.text {
            self.f = f;
            self.text = text;
            self.profile = profile.clone();
            return true;
        }
        false
    }
}

/// Minimizes the closed-form cycles-6 count over balanced partitionings that
/// keep the given dummy pattern.
pub fn search(
    hd: &Protograph,
    gamma: usize,
    kappa: usize,
    coupling_length: usize,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    config.validate()?;
    if hd.rows() != gamma || hd.cols() != kappa {
        return Err(Error::mismatch(
            format!("{gamma}x{kappa} dummy pattern"),
            format!("{}x{}", hd.rows(), hd.cols()),
        ));
    }
    let space = ProfileSpace::new(hd, coupling_length)?;
    let outcome = match config.mode {
        SearchMode::Exhaustive => exhaustive(&space, config)?,
        SearchMode::CoordinateDescent => coordinate_descent(&space, config)?,
        SearchMode::Annealing => annealing(&space, config)?,
    };
    Ok(outcome)
}

fn exhaustive(space: &ProfileSpace, config: &SearchConfig) -> Result<SearchOutcome> {
    let size = space.size();
    if size > config.budget {
        return Err(Error::BudgetExhausted(format!(
            "exhaustive search needs {size} evaluations, budget is {}",
            config.budget
        )));
    }
    let mut best: Option<Best> = None;
    let mut evaluations = 0;
    let mut log = Vec::new();
    let tol = config.balance_tolerance as i64;
    enumerate_profiles(space, &mut |p| {
        if space.imbalance(p).abs() > tol {
            return;
        }
        evaluations += 1;
        let f = space.objective(p);
        let improved = match best.as_mut() {
            None => {
                best = Some(Best {
                    f,
                    text: space.realize(p).to_text(),
                    profile: p.clone(),
                });
                true
            }
            Some(b) => b.offer(space, f, p),
        };
        if improved || evaluations % config.log_every == 0 {
            log.push(LogEntry {
                chain: 0,
                iteration: evaluations,
                f,
                accepted: improved,
            });
        }
    });
    let best = best.ok_or_else(|| {
        Error::Infeasible("no partitioning satisfies the balance tolerance".into())
    })?;
    Ok(SearchOutcome {
        pm: space.realize(&best.profile),
        f: best.f,
        evaluations,
        budget_exhausted: false,
        log,
    })
}

fn enumerate_profiles(space: &ProfileSpace, visit: &mut dyn FnMut(&Profile)) {
    let options: Vec<Vec<Vec<u32>>> = space
        .classes
        .iter()
        .map(|c| {
            let mut all = Vec::new();
            let mut counts = vec![0; c.types.len()];
            compositions(c.columns.len() as u32, 0, &mut counts, &mut all);
            all
        })
        .collect();
    let mut odometer = vec![0usize; options.len()];
    let mut profile: Profile = options.iter().map(|o| o[0].clone()).collect();
    loop {
        visit(&profile);
        let mut k = 0;
        loop {
            if k == options.len() {
                return;
            }
            odometer[k] += 1;
            if odometer[k] < options[k].len() {
                profile[k].clone_from(&options[k][odometer[k]]);
                break;
            }
            odometer[k] = 0;
            profile[k].clone_from(&options[k][0]);
            k += 1;
        }
    }
}

fn compositions(n: u32, idx: usize, counts: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if idx == counts.len() - 1 {
        counts[idx] = n;
        out.push(counts.clone());
        return;
    }
    for take in (0..=n).rev() {
        counts[idx] = take;
        compositions(n - take, idx + 1, counts, out);
    }
    counts[idx] = 0;
}

/// A single re-type of one column: class, old type, new type.
type Move = (usize, usize, usize);

fn moves(profile: &Profile) -> Vec<Move> {
    let mut out = Vec::new();
    for (ci, counts) in profile.iter().enumerate() {
        for (from, &n) in counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            for to in 0..counts.len() {
                if to != from {
                    out.push((ci, from, to));
                }
            }
        }
    }
    out
}

fn coordinate_descent(space: &ProfileSpace, config: &SearchConfig) -> Result<SearchOutcome> {
    let tol = config.balance_tolerance as i64;
    let mut profile = space.initial(config.balance_tolerance)?;
    let mut values = space.overlap_values(&profile);
    let mut f = space.objective(&profile);
    let mut evaluations = 1;
    let mut log = vec![LogEntry {
        chain: 0,
        iteration: 1,
        f,
        accepted: true,
    }];
    let mut exhausted = false;
    'outer: loop {
        let imbalance = space.imbalance(&profile);
        let mut best_move: Option<(u64, Move)> = None;
        for (ci, from, to) in moves(&profile) {
            let class = &space.classes[ci];
            let next = imbalance - class.balance[from] + class.balance[to];
            if next.abs() > tol {
                continue;
            }
            if evaluations >= config.budget {
                exhausted = true;
                break 'outer;
            }
            space.apply(&mut values, ci, from, to);
            let cand = space.plan.evaluate(&values, space.coupling_length).max(0) as u64;
            space.apply(&mut values, ci, to, from);
            evaluations += 1;
            if cand < f && best_move.is_none_or(|(bf, _)| cand < bf) {
                best_move = Some((cand, (ci, from, to)));
            }
        }
        match best_move {
            Some((cand, (ci, from, to))) => {
                space.apply(&mut values, ci, from, to);
                profile[ci][from] -= 1;
                profile[ci][to] += 1;
                f = cand;
                log.push(LogEntry {
                    chain: 0,
                    iteration: evaluations,
                    f,
                    accepted: true,
                });
            }
            None => break,
        }
    }
    Ok(SearchOutcome {
        pm: space.realize(&profile),
        f,
        evaluations,
        budget_exhausted: exhausted,
        log,
    })
}

struct ChainResult {
    best: Best,
    evaluations: u64,
    log: Vec<LogEntry>,
}

fn chain_seed(seed: u64, chain: usize) -> u64 {
    // splitmix64 finalizer
    let mut x = seed ^ (chain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn anneal_chain(
    space: &ProfileSpace,
    config: &SearchConfig,
    chain: usize,
    budget: u64,
    start: &Profile,
) -> ChainResult {
    let mut rng = ChaCha8Rng::seed_from_u64(chain_seed(config.seed, chain));
    let tol = config.balance_tolerance as i64;
    let mut profile = start.clone();
    let mut values = space.overlap_values(&profile);
    let mut imbalance = space.imbalance(&profile);
    let mut f = space.objective(&profile);
    let mut best = Best {
        f,
        text: space.realize(&profile).to_text(),
        profile: profile.clone(),
    };
    let mut log = Vec::new();
    let movable: Vec<usize> = space
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.types.len() > 1)
        .flat_map(|(ci, c)| std::iter::repeat_n(ci, c.columns.len()))
        .collect();
    if movable.is_empty() {
        return ChainResult {
            best,
            evaluations: 1,
            log,
        };
    }
    let cooling = if budget > 1 {
        (config.t_end / config.t_start).powf(1.0 / (budget - 1) as f64)
    } else {
        1.0
    };
    let mut temperature = config.t_start;
    let mut evaluations = 0;
    let mut pending: Vec<Move> = Vec::with_capacity(2);
    while evaluations < budget {
        pending.clear();
        let steps = if rng.random_bool(0.3) { 2 } else { 1 };
        let mut delta_balance = 0;
        for _ in 0..steps {
            let ci = movable[rng.random_range(0..movable.len())];
            let counts = &profile[ci];
            // Pick an occupied type with probability proportional to its count.
            let mut pick = rng.random_range(0..space.classes[ci].columns.len() as u32);
            let mut from = 0;
            while pick >= counts[from] {
                pick -= counts[from];
                from += 1;
            }
            let k = counts.len();
            let mut to = rng.random_range(0..k - 1);
            if to >= from {
                to += 1;
            }
            let class = &space.classes[ci];
            delta_balance += class.balance[to] - class.balance[from];
            pending.push((ci, from, to));
            profile[ci][from] -= 1;
            profile[ci][to] += 1;
        }
        let undo = |profile: &mut Profile, pending: &[Move]| {
            for &(ci, from, to) in pending.iter().rev() {
                profile[ci][to] -= 1;
                profile[ci][from] += 1;
            }
        };
        if pending.is_empty() {
            continue;
        }
        if (imbalance + delta_balance).abs() > tol {
            undo(&mut profile, &pending);
            continue;
        }
        for &(ci, from, to) in &pending {
            space.apply(&mut values, ci, from, to);
        }
        let cand = space.plan.evaluate(&values, space.coupling_length).max(0) as u64;
        evaluations += 1;
        let accept = cand <= f || {
            let p = (-((cand - f) as f64) / temperature).exp();
            rng.random::<f64>() < p
        };
        if accept {
            f = cand;
            imbalance += delta_balance;
            let improved = best.offer(space, f, &profile);
            if improved || evaluations % config.log_every == 0 {
                log.push(LogEntry {
                    chain,
                    iteration: evaluations,
                    f,
                    accepted: true,
                });
            }
        } else {
            for &(ci, from, to) in pending.iter().rev() {
                space.apply(&mut values, ci, to, from);
            }
            undo(&mut profile, &pending);
            if evaluations % config.log_every == 0 {
                log.push(LogEntry {
                    chain,
                    iteration: evaluations,
                    f: cand,
                    accepted: false,
                });
            }
        }
        temperature *= cooling;
    }
    ChainResult {
        best,
        evaluations,
        log,
    }
}

fn annealing(space: &ProfileSpace, config: &SearchConfig) -> Result<SearchOutcome> {
    let start = space.initial(config.balance_tolerance)?;
    let per_chain = (config.budget / config.chains as u64).max(1);
    let run = |chain: usize| anneal_chain(space, config, chain, per_chain, &start);
    #[cfg(feature = "parallel")]
    let results: Vec<ChainResult> = {
        use rayon::prelude::*;
        (0..config.chains).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<ChainResult> = (0..config.chains).map(run).collect();

    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let mut log: Vec<LogEntry> = results.iter().flat_map(|r| r.log.clone()).collect();
    log.sort_by_key(|e| (e.chain, e.iteration));
    let best = results
        .into_iter()
        .map(|r| r.best)
        .min_by(|a, b| a.f.cmp(&b.f).then_with(|| a.text.cmp(&b.text)))
        .expect("at least one chain");
    Ok(SearchOutcome {
        pm: space.realize(&best.profile),
        f: best.f,
        evaluations,
        budget_exhausted: true,
        log,
    })
}

/// Column-type multiset of an `m = 1` partitioning.
pub fn column_type_counts(pm: &PartitioningMatrix) -> BTreeMap<ColumnType, usize> {
    let mut out = BTreeMap::new();
    for c in 0..pm.kappa() {
        let t = ColumnType {
            pattern: (0..pm.gamma()).map(|u| pm.get(u, c)).collect(),
        };
        *out.entry(t).or_insert(0) += 1;
    }
    out
}

/// Places the requested column types onto the columns of a dummy pattern.
pub fn realize(
    counts: &BTreeMap<ColumnType, usize>,
    hd: &Protograph,
) -> Result<PartitioningMatrix> {
    let space = ProfileSpace::new(hd, 1)?;
    let mut profile: Profile = space
        .classes
        .iter()
        .map(|c| vec![0; c.types.len()])
        .collect();
    for (t, &n) in counts {
        if t.pattern.len() != hd.rows() {
            return Err(Error::InconsistentCounts(format!(
                "column type has {} rows, expected {}",
                t.pattern.len(),
                hd.rows()
            )));
        }
        let mask = t.dummy_mask();
        let ci = space
            .classes
            .iter()
            .position(|c| c.mask == mask)
            .ok_or_else(|| {
                Error::InconsistentCounts(format!("no column has dummy pattern {mask:#b}"))
            })?;
        let ti = space.classes[ci]
            .types
            .iter()
            .position(|x| x == t)
            .ok_or_else(|| Error::InconsistentCounts(format!("invalid column type {t:?}")))?;
        profile[ci][ti] += n as u32;
    }
    for (class, counts) in space.classes.iter().zip(&profile) {
        let total: u32 = counts.iter().sum();
        if total as usize != class.columns.len() {
            return Err(Error::InconsistentCounts(format!(
                "dummy pattern {:#b} has {} columns but {total} were requested",
                class.mask,
                class.columns.len()
            )));
        }
    }
    Ok(space.realize(&profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cb::{assemble_sc, make_ab_powers, partition};
    use crate::cycles::brute_force_proto_cycles;

    const PM23: &str = "X 1 1 1 X 1 1 0 0 0 0 0 0
1 X 1 0 1 X 0 1 1 1 0 0 0
0 0 X 1 0 1 X 0 0 0 1 1 1
0 0 0 X 0 0 0 X 1 1 1 1 1
";

    #[test]
    fn example_one_dummy() {
        let mut phi = vec![0.0; 7];
        phi[5] = 1.0;
        let hd = dummy_from_distribution(&[0.0, 3.0 / 7.0, 4.0 / 7.0], &phi, 3, 7).unwrap();
        assert_eq!(
            hd.to_pattern(),
            "X . . . . . .\n. X . . . . .\n. . X . . . .\n"
        );
    }

    #[test]
    fn regular_dummy_is_empty() {
        let mut phi = vec![0.0; 5];
        phi[4] = 1.0;
        let hd = dummy_from_distribution(&[0.0, 0.0, 1.0], &phi, 3, 5).unwrap();
        assert_eq!(hd.ones(), 0);
    }

    #[test]
    fn paper_dummy_histograms() {
        let mut phi = vec![0.0; 13];
        phi[10] = 1.0;
        let hd = dummy_from_distribution(&[0.0, 0.0, 8.0 / 13.0, 5.0 / 13.0], &phi, 4, 13).unwrap();
        let mut cols: Vec<usize> = (0..13).map(|c| hd.col_weight(c)).collect();
        cols.sort();
        assert_eq!(cols, [vec![0; 5], vec![1; 8]].concat());
        assert!((0..4).all(|r| hd.row_weight(r) == 2));
    }

    #[test]
    fn infeasible_targets() {
        // Sums disagree: 3 dummies in columns, 6 in rows.
        let mut phi = vec![0.0; 7];
        phi[4] = 1.0;
        let err = dummy_from_distribution(&[0.0, 3.0 / 7.0, 4.0 / 7.0], &phi, 3, 7).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref m) if m.contains("Gale-Ryser")));
        // Sums agree but one row wants two dummies and only one column has any.
        let third = 1.0 / 3.0;
        let err =
            dummy_from_distribution(&[third, 0.0, 2.0 * third], &[third, 0.0, 2.0 * third], 3, 3)
                .unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref m) if m.contains("heaviest")));
        assert!(dummy_from_distribution(&[0.5, 0.5], &[0.0, 0.0, 1.0], 2, 3).is_err());
    }

    #[test]
    fn profile_objective_matches_evaluate() {
        let pm = PartitioningMatrix::parse(PM23, None).unwrap();
        let space = ProfileSpace::new(&pm.dummy_protograph(), 10).unwrap();
        let profile = space.profile_of(&pm).unwrap();
        assert_eq!(space.objective(&profile), evaluate(&pm, 10).unwrap());
        let realized = space.realize(&profile);
        assert_eq!(evaluate(&realized, 10).unwrap(), evaluate(&pm, 10).unwrap());
        assert_eq!(column_type_counts(&realized), column_type_counts(&pm));
    }

    #[test]
    fn h1_empty_is_l_times_block() {
        let pm = PartitioningMatrix::parse("0 0 0 X\n0 X 0 0\n0 0 0 0\n", Some(1)).unwrap();
        let h0 = partition(&make_ab_powers(3, 4, 1).unwrap(), &pm).unwrap();
        let single = brute_force_proto_cycles(&crate::cb::protograph_of(&h0.components[0]), 6)
            .unwrap()
            .count;
        for l in 1..5 {
            assert_eq!(evaluate(&pm, l).unwrap(), l as u64 * single);
        }
    }

    #[test]
    fn realize_round_trip_and_errors() {
        let pm = PartitioningMatrix::parse(PM23, None).unwrap();
        let hd = pm.dummy_protograph();
        let counts = column_type_counts(&pm);
        let r = realize(&counts, &hd).unwrap();
        assert_eq!(column_type_counts(&r), counts);
        assert_eq!(r.dummy_protograph(), hd);

        let all_zero: BTreeMap<ColumnType, usize> = column_type_counts(
            &PartitioningMatrix::new(
                4,
                13,
                1,
                pm.labels()
                    .iter()
                    .map(|&l| {
                        if l == Label::Dummy {
                            l
                        } else {
                            Label::Component(0)
                        }
                    })
                    .collect(),
            )
            .unwrap(),
        );
        let r0 = realize(&all_zero, &hd).unwrap();
        assert_eq!(r0.count(Label::Component(1)), 0);
        assert_eq!(r0.count(Label::Component(0)), 44);

        let mut short = counts.clone();
        let key = short.keys().next().unwrap().clone();
        *short.get_mut(&key).unwrap() += 1;
        assert!(matches!(
            realize(&short, &hd),
            Err(Error::InconsistentCounts(_))
        ));
    }

    #[test]
    fn single_column_code_has_no_cycles() {
        let hd = Protograph::zeros(3, 1);
        for mode in [
            SearchMode::Exhaustive,
            SearchMode::Annealing,
            SearchMode::CoordinateDescent,
        ] {
            let cfg = SearchConfig {
                mode,
                budget: 200,
                chains: 2,
                balance_tolerance: 3,
                ..Default::default()
            };
            let out = search(&hd, 3, 1, 4, &cfg).unwrap();
            assert_eq!(out.f, 0);
        }
    }

    #[test]
    fn exhaustive_over_budget_errors() {
        let hd = Protograph::zeros(4, 13);
        let cfg = SearchConfig {
            mode: SearchMode::Exhaustive,
            budget: 10,
            ..Default::default()
        };
        assert!(matches!(
            search(&hd, 4, 13, 10, &cfg),
            Err(Error::BudgetExhausted(_))
        ));
    }

    #[test]
    fn search_result_is_consistent() {
        let pm = PartitioningMatrix::parse("X 0 1 0 1\n0 X 1 1 0\n1 0 0 X 1\n", Some(1)).unwrap();
        let hd = pm.dummy_protograph();
        for mode in [SearchMode::Annealing, SearchMode::CoordinateDescent] {
            let cfg = SearchConfig {
                mode,
                budget: 5_000,
                ..Default::default()
            };
            let out = search(&hd, 3, 5, 3, &cfg).unwrap();
            assert_eq!(out.pm.dummy_protograph(), hd);
            assert_eq!(evaluate(&out.pm, 3).unwrap(), out.f);
            let h = make_ab_powers(3, 5, 1).unwrap();
            let sc = assemble_sc(&partition(&h, &out.pm).unwrap().components, 3).unwrap();
            assert_eq!(
                brute_force_proto_cycles(sc.protograph(), 6).unwrap().count,
                out.f
            );
            let diff =
                out.pm.count(Label::Component(0)) as i64 - out.pm.count(Label::Component(1)) as i64;
            assert!(diff.abs() <= 2);
        }
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(3, 2), 4);
        assert_eq!(multisets(2, 4), 10);
        assert_eq!(multisets(0, 4), 1);
        assert_eq!(multisets(5, 1), 1);
    }
}
