//! Circulant power optimizer.
//!
//! Greedy descent over the powers of one replica (every replica shares
//! them): the circulants carrying the most lifted cycles-6 are visited first,
//! each tries every power, and the best strictly improving power that keeps
//! the lifted graph free of cycles-4 is accepted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cb::{CbMatrix, Circulant, Label, PartitioningMatrix};
use crate::cycles::{powers_for, CycleCensus, LiftedCycleIndex};
use crate::error::{Error, Result};

/// Circulant positions ordered by participation, highest first, ties in
/// row-major order.
pub fn rank_circulants(census: &CycleCensus) -> Result<Vec<(usize, usize)>> {
    let grid = census
        .per_circulant
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("census carries no per-circulant counts".into()))?;
    let mut positions: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, row)| (0..row.len()).map(move |j| (i, j)))
        .collect();
    positions.sort_by(|&(ai, aj), &(bi, bj)| {
        grid[bi][bj]
            .cmp(&grid[ai][aj])
            .then((ai, aj).cmp(&(bi, bj)))
    });
    Ok(positions)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpoConfig {
    pub max_rounds: usize,
    pub seed: u64,
    /// Perturb-and-descend restarts after the first local minimum; 0 keeps
    /// the optimizer a pure descent.
    pub restarts: usize,
}

impl Default for CpoConfig {
    fn default() -> Self {
        Self {
            max_rounds: 1000,
            seed: 0,
            restarts: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpoStep {
    pub iteration: usize,
    pub row: usize,
    pub col: usize,
    pub old_power: u32,
    pub new_power: u32,
    pub cycles6: u64,
    /// Random restart move rather than a descent step.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub perturbation: bool,
}

/// Optimizer state after a run.
#[derive(Debug, Clone)]
pub struct CpoState {
    pub cm: CbMatrix,
    pub census: CycleCensus,
    pub iteration: usize,
    pub history: Vec<CpoStep>,
    pub initial_cycles6: u64,
    /// False when the round limit stopped the descent before a local minimum.
    pub converged: bool,
}

struct Descent<'a> {
    pm: &'a PartitioningMatrix,
    z: usize,
    idx6: LiftedCycleIndex,
    idx4: LiftedCycleIndex,
}

const RECOUNT_EVERY: usize = 10;

impl Descent<'_> {
    /// Runs rounds until no single power change improves or the round limit
    /// is hit. Returns the final cycles-6 count and whether a local minimum
    /// was reached.
    fn descend(
        &self,
        powers: &mut [i64],
        mut count: u64,
        max_rounds: usize,
        iteration: &mut usize,
        history: &mut Vec<CpoStep>,
    ) -> (u64, bool) {
        let kappa = self.pm.kappa();
        let mut accepted_total = 0;
        for _ in 0..max_rounds {
            let census = self.idx6.census(powers, self.z);
            let order = rank_circulants(&census).expect("census has grid");
            let grid = census.per_circulant.as_ref().expect("grid");
            let mut accepted = false;
            for (i, j) in order {
                if grid[i][j] == 0 {
                    break;
                }
                if self.pm.get(i, j) == Label::Dummy {
                    continue;
                }
                let pos = i * kappa + j;
                let old = powers[pos];
                let before =
                    self.idx6
                        .count_subset(self.idx6.through(pos).iter().copied(), powers, self.z);
                let mut best: Option<(u64, i64)> = None;
                for p in 0..self.z as i64 {
                    if p == old {
                        continue;
                    }
                    powers[pos] = p;
                    let c4 = self.idx4.count_subset(
                        self.idx4.through(pos).iter().copied(),
                        powers,
                        self.z,
                    );
                    if c4 > 0 {
                        continue;
                    }
                    let after = self.idx6.count_subset(
                        self.idx6.through(pos).iter().copied(),
                        powers,
                        self.z,
                    );
                    let cand = count - before + after;
                    if cand < count && best.is_none_or(|(b, _)| cand < b) {
                        best = Some((cand, p));
                    }
                }
                powers[pos] = old;
                if let Some((cand, p)) = best {
                    powers[pos] = p;
                    count = cand;
                    *iteration += 1;
                    accepted_total += 1;
                    history.push(CpoStep {
                        iteration: *iteration,
                        row: i,
                        col: j,
                        old_power: old as u32,
                        new_power: p as u32,
                        cycles6: count,
                        perturbation: false,
                    });
                    if accepted_total % RECOUNT_EVERY == 0 {
                        let full = self.idx6.count(powers, self.z);
                        assert_eq!(full, count, "incremental cycle count drifted");
                    }
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                return (count, true);
            }
        }
        (count, false)
    }
}

/// Reduces lifted cycles-6 of an `m = 1` coupled code by adjusting the
/// powers of its non-dummy circulants.
pub fn cpo_optimize(
    pm: &PartitioningMatrix,
    cm_init: &CbMatrix,
    z: usize,
    coupling_length: usize,
    config: &CpoConfig,
) -> Result<CpoState> {
    if cm_init.z() != z {
        return Err(Error::mismatch(
            format!("z = {z}"),
            format!("z = {}", cm_init.z()),
        ));
    }
    let descent = Descent {
        pm,
        z,
        idx6: LiftedCycleIndex::new(pm, coupling_length, 6)?,
        idx4: LiftedCycleIndex::new(pm, coupling_length, 4)?,
    };
    let mut powers = powers_for(pm, cm_init)?;
    let c4 = descent.idx4.count(&powers, z);
    if c4 > 0 {
        return Err(Error::HasFourCycles(c4));
    }
    let initial = descent.idx6.count(&powers, z);
    let mut iteration = 0;
    let mut history = Vec::new();
    let (mut count, mut converged) = descent.descend(
        &mut powers,
        initial,
        config.max_rounds,
        &mut iteration,
        &mut history,
    );

    if config.restarts > 0 && z > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let free: Vec<usize> = (0..pm.gamma() * pm.kappa())
            .filter(|&p| pm.labels()[p] != Label::Dummy)
            .collect();
        for _ in 0..config.restarts {
            let mut trial = powers.clone();
            let mut trial_iter = iteration;
            let mut trial_hist = Vec::new();
            for _ in 0..3 {
                let pos = free[rng.random_range(0..free.len())];
                let old = trial[pos];
                trial[pos] = rng.random_range(0..z as i64);
                if trial[pos] == old
                    || descent.idx4.count_subset(
                        descent.idx4.through(pos).iter().copied(),
                        &trial,
                        z,
                    ) > 0
                {
                    trial[pos] = old;
                    continue;
                }
                trial_iter += 1;
                trial_hist.push(CpoStep {
                    iteration: trial_iter,
                    row: pos / pm.kappa(),
                    col: pos % pm.kappa(),
                    old_power: old as u32,
                    new_power: trial[pos] as u32,
                    cycles6: descent.idx6.count(&trial, z),
                    perturbation: true,
                });
            }
            let start = descent.idx6.count(&trial, z);
            let (end, trial_converged) = descent.descend(
                &mut trial,
                start,
                config.max_rounds,
                &mut trial_iter,
                &mut trial_hist,
            );
            if end < count {
                powers = trial;
                count = end;
                converged = trial_converged;
                iteration = trial_iter;
                history.extend(trial_hist);
            }
        }
    }

    let mut cm = cm_init.clone();
    for i in 0..pm.gamma() {
        for j in 0..pm.kappa() {
            if pm.get(i, j) != Label::Dummy {
                cm.set(i, j, Circulant::Power(powers[i * pm.kappa() + j] as u32))?;
            }
        }
    }
    let census = descent.idx6.census(&powers, z);
    debug_assert_eq!(census.count, count);
    Ok(CpoState {
        cm,
        census,
        iteration,
        history,
        initial_cycles6: initial,
        converged,
    })
}
