//! Monotone estimation of the rejection-probability curve and the adaptive
//! schedule that locates the size where it crosses the target power.
//!
//! The fit is the pool-adjacent-violators algorithm over per-size rejection
//! counts. Blocks carry exact integer (rejected, total) sums and divide only
//! once at the end, so the fitted values equal the max-min window formula
//! bit for bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// One adequacy-test outcome at one resample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub size: usize,
    pub rejected: bool,
}

/// Right-continuous nondecreasing step estimate of the rejection
/// probability, with the raw trials it was fitted from.
#[derive(Debug, Clone, Serialize)]
pub struct PowerCurve {
    /// (size, fitted probability) at each observed size, sizes strictly
    /// increasing and probabilities nondecreasing.
    pub knots: Vec<(usize, f64)>,
    /// The underlying trial multiset, sorted by size.
    pub trials: Vec<TrialRecord>,
}

impl PowerCurve {
    /// Fitted value at `size`: the knot value at the largest observed size
    /// not exceeding it, or the first knot's value below the observed range.
    pub fn value_at(&self, size: usize) -> f64 {
        match self.knots.binary_search_by_key(&size, |&(s, _)| s) {
            Ok(i) => self.knots[i].1,
            Err(0) => self.knots[0].1,
            Err(i) => self.knots[i - 1].1,
        }
    }

    /// TSV rows `size<TAB>p_hat`.
    pub fn knots_tsv(&self) -> String {
        let mut out = String::new();
        for &(size, p) in &self.knots {
            out.push_str(&format!("{size}\t{p}\n"));
        }
        out
    }

    /// TSV rows `size<TAB>0|1` for the raw trials.
    pub fn trials_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.trials {
            out.push_str(&format!("{}\t{}\n", t.size, u8::from(t.rejected)));
        }
        out
    }
}

/// Maximum-likelihood monotone fit of the rejection probability.
pub fn isotonic_fit(trials: &[TrialRecord]) -> Result<PowerCurve> {
    if trials.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted: Vec<TrialRecord> = trials.to_vec();
    sorted.sort_by_key(|t| t.size);

    // Collapse to per-size (rejected, total) counts.
    let mut groups: Vec<(usize, u64, u64)> = Vec::new();
    for t in &sorted {
        match groups.last_mut() {
            Some((size, s, n)) if *size == t.size => {
                *s += u64::from(t.rejected);
                *n += 1;
            }
            _ => groups.push((t.size, u64::from(t.rejected), 1)),
        }
    }

    // PAVA over blocks; comparisons by integer cross-multiplication keep
    // pooling decisions exact.
    struct Block {
        last_group: usize,
        s: u64,
        n: u64,
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(groups.len());
    for (i, &(_, s, n)) in groups.iter().enumerate() {
        blocks.push(Block {
            last_group: i,
            s,
            n,
        });
        while blocks.len() > 1 {
            let b = &blocks[blocks.len() - 1];
            let a = &blocks[blocks.len() - 2];
            // violation: value(a) > value(b)  <=>  a.s * b.n > b.s * a.n
            if (a.s as u128) * (b.n as u128) > (b.s as u128) * (a.n as u128) {
                let b = blocks.pop().unwrap();
                let a = blocks.last_mut().unwrap();
                a.s += b.s;
                a.n += b.n;
                a.last_group = b.last_group;
            } else {
                break;
            }
        }
    }

    let mut knots = Vec::with_capacity(groups.len());
    let mut g = 0usize;
    for b in &blocks {
        let value = b.s as f64 / b.n as f64;
        while g <= b.last_group {
            knots.push((groups[g].0, value));
            g += 1;
        }
    }
    Ok(PowerCurve {
        knots,
        trials: sorted,
    })
}

/// Result of solving the fitted curve for a target level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSolution {
    /// Smallest observed size whose fitted value reaches the target.
    Size(usize),
    /// The curve never reaches the target; callers fall back to the full
    /// data size.
    Saturated,
}

/// Smallest knot size with fitted probability >= `alpha_target`.
pub fn solve_level(curve: &PowerCurve, alpha_target: f64) -> LevelSolution {
    for &(size, p) in &curve.knots {
        if p >= alpha_target {
            return LevelSolution::Size(size);
        }
    }
    LevelSolution::Saturated
}

/// Counters reported by the adaptive schedule.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ScheduleDiagnostics {
    pub trials_run: usize,
    pub trials_failed: usize,
}

/// Output of the adaptive schedule: the final fitted curve, the solved
/// size (capped at the data size on saturation), and the saturation flag.
#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub curve: PowerCurve,
    pub adequate_size: usize,
    pub saturated: bool,
    pub diagnostics: ScheduleDiagnostics,
}

/// Three-phase search for the size at which the rejection probability
/// crosses `alpha_target`:
///
/// 1. one trial at every stride multiple up to the data size;
/// 2. fit and solve;
/// 3. for k = 1..=10, another 10k trials at each grid size within 100/k of
///    the current solution (clipped to [1, N]), refitting and re-solving
///    after each round.
///
/// The runner maps (size, trial index) to a rejection flag; trial indices
/// are assigned deterministically so results do not depend on how many
/// threads execute the batch. A failed trial is dropped and counted, never
/// treated as evidence.
pub fn adaptive_schedule<F>(
    runner: F,
    data_size: usize,
    alpha_target: f64,
    stride: usize,
) -> Result<ScheduleOutcome>
where
    F: Fn(usize, u64) -> Result<bool> + Sync,
{
    if data_size == 0 {
        return Err(Error::EmptySample);
    }
    if stride == 0 || stride > data_size {
        return Err(Error::InvalidConfig(format!(
            "stride must satisfy 1 <= stride <= {data_size}, got {stride}"
        )));
    }
    if !(alpha_target > 0.0 && alpha_target < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target power must lie in (0, 1), got {alpha_target}"
        )));
    }

    let mut trials: Vec<TrialRecord> = Vec::new();
    let mut diag = ScheduleDiagnostics::default();
    let mut next_index: u64 = 0;

    let run_batch = |batch: Vec<usize>,
                     trials: &mut Vec<TrialRecord>,
                     diag: &mut ScheduleDiagnostics,
                     next_index: &mut u64|
     -> Result<()> {
        let indexed: Vec<(usize, u64)> = batch
            .into_iter()
            .enumerate()
            .map(|(off, size)| (size, *next_index + off as u64))
            .collect();
        *next_index += indexed.len() as u64;
        let results: Vec<(usize, Result<bool>)> = indexed
            .par_iter()
            .map(|&(size, idx)| (size, runner(size, idx)))
            .collect();
        for (size, res) in results {
            diag.trials_run += 1;
            match res {
                Ok(rejected) => trials.push(TrialRecord { size, rejected }),
                Err(_) => diag.trials_failed += 1,
            }
        }
        Ok(())
    };

    // Phase 1: the stride grid, always including the full size.
    let mut phase1: Vec<usize> = (1..=data_size / stride).map(|m| m * stride).collect();
    if phase1.last() != Some(&data_size) {
        phase1.push(data_size);
    }
    run_batch(phase1, &mut trials, &mut diag, &mut next_index)?;

    if trials.is_empty() {
        return Err(Error::FitFailed(
            "every trial in the initial schedule failed".into(),
        ));
    }

    let mut curve = isotonic_fit(&trials)?;
    let mut solution = solve_level(&curve, alpha_target);

    // Phase 3: concentrate trials around the running solution.
    for k in 1..=10u32 {
        let center = match solution {
            LevelSolution::Size(s) => s,
            LevelSolution::Saturated => data_size,
        };
        let radius = 100.0 / k as f64;
        let lo = ((center as f64 - radius).ceil().max(1.0)) as usize;
        let hi = ((center as f64 + radius).floor() as usize).min(data_size);
        let mut batch = Vec::new();
        let first_mult = lo.div_ceil(stride).max(1);
        let mut m = first_mult;
        while m * stride <= hi {
            batch.push(m * stride);
            m += 1;
        }
        if lo <= data_size && data_size <= hi && batch.last() != Some(&data_size) {
            batch.push(data_size);
        }
        if batch.is_empty() {
            batch.push(center.clamp(1, data_size));
        }
        let repeated: Vec<usize> = batch
            .iter()
            .flat_map(|&s| std::iter::repeat_n(s, 10 * k as usize))
            .collect();
        run_batch(repeated, &mut trials, &mut diag, &mut next_index)?;
        curve = isotonic_fit(&trials)?;
        solution = solve_level(&curve, alpha_target);
    }

    let (adequate_size, saturated) = match solution {
        LevelSolution::Size(s) => (s, false),
        LevelSolution::Saturated => (data_size, true),
    };
    Ok(ScheduleOutcome {
        curve,
        adequate_size,
        saturated,
        diagnostics: diag,
    })
}
