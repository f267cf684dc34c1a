//! Stochastic trajectory simulation of repeated pre/post-selected runs.
//!
//! Each trajectory starts from the scenario's pre-selection, performs the
//! configured intermediate projective measurements with genuine Born-rule
//! collapse, then measures every particle in the fourier product basis and
//! marks the run `selected` when the full outcome tuple matches the
//! scenario's post-selection. Conditioning empirical frequencies on
//! `selected` therefore reproduces ABL statistics, and outcome chains probe
//! the mutual disturbance of sequential measurements.
//!
//! Randomness comes from ChaCha12 with one stream per trajectory: the seed
//! fixes the key and the trajectory index selects the stream, so any
//! partition of trajectories across workers consumes identical randomness
//! and merges to the exact counts of a serial run.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::pigeonhole::Scenario;
use crate::prepost::{born_probabilities, MeasurementSpec};
use crate::qstate::{apply, fourier_amplitudes};
use crate::tol;

/// Identifier of the fixed trajectory generator, recorded in artifacts.
pub const RNG_ID: &str = "chacha12";

/// Upper bound on enumerated oracle cells (outcome tuples times finals).
pub const MAX_ORACLE_CELLS: usize = 1 << 20;

/// A full ensemble-run request. The seed determines every trajectory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub intermediate: Vec<MeasurementSpec>,
    pub samples: u64,
    pub seed: u64,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(SimError::invalid("samples must be at least 1"));
        }
        for m in &self.intermediate {
            if m.projectors()[0].shape() != self.scenario.shape() {
                return Err(SimError::shape(
                    "intermediate measurement does not match the scenario register",
                ));
            }
        }
        Ok(())
    }
}

/// One simulated run: the sampled outcome index per intermediate
/// measurement, the final fourier tuple, and the selection flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub intermediate_outcomes: Vec<usize>,
    pub final_outcome: Vec<usize>,
    pub selected: bool,
}

/// Counts key: intermediate outcome indices plus the final tuple's
/// configuration index.
pub type CountKey = (Vec<usize>, usize);

/// Aggregated trajectory counts, deterministically ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsTable {
    pub counts: BTreeMap<CountKey, u64>,
    pub samples: u64,
    pub seed: u64,
}

impl CountsTable {
    /// Total count of selected trajectories.
    pub fn selected_total(&self, scenario: &Scenario) -> u64 {
        let sel = scenario
            .shape()
            .index(scenario.outcome())
            .expect("scenario outcome is valid");
        self.counts
            .iter()
            .filter(|((_, fin), _)| *fin == sel)
            .map(|(_, c)| c)
            .sum()
    }
}

fn sample_index(rng: &mut ChaCha12Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding pushed the cumulative sum below u; the tail belongs to the
    // last outcome with positive probability.
    last_positive
}

/// Simulate one trajectory. Deterministic in (config.seed, trajectory).
pub fn run_trajectory(cfg: &RunConfig, trajectory: u64) -> Result<RunRecord> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trajectory);
    let mut state = cfg.scenario.pre().clone();
    let mut intermediate_outcomes = Vec::with_capacity(cfg.intermediate.len());
    for m in &cfg.intermediate {
        let probs = born_probabilities(&state, m)?;
        let pick = sample_index(&mut rng, &probs);
        state = apply(&m.projectors()[pick], &state)?.normalized()?;
        intermediate_outcomes.push(pick);
    }
    let probs: Vec<f64> = fourier_amplitudes(&state)
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    let fin = sample_index(&mut rng, &probs);
    let final_outcome = cfg.scenario.shape().digits(fin);
    let selected = final_outcome == cfg.scenario.outcome();
    Ok(RunRecord {
        intermediate_outcomes,
        final_outcome,
        selected,
    })
}

/// Execution strategy for [`run_ensemble_mode`]. Both produce identical
/// counts; the parallel path merely partitions trajectory indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Serial,
    Parallel,
}

/// Run all trajectories in parallel and aggregate counts.
pub fn run_ensemble(cfg: &RunConfig) -> Result<CountsTable> {
    run_ensemble_mode(cfg, ExecMode::Parallel)
}

/// Run all trajectories with an explicit execution mode.
pub fn run_ensemble_mode(cfg: &RunConfig, mode: ExecMode) -> Result<CountsTable> {
    cfg.validate()?;
    let shape = cfg.scenario.shape();
    let fold_record = |mut map: BTreeMap<CountKey, u64>, rec: RunRecord| {
        let fin = shape
            .index(&rec.final_outcome)
            .expect("digits are in range");
        *map.entry((rec.intermediate_outcomes, fin)).or_insert(0) += 1;
        map
    };
    let counts = match mode {
        ExecMode::Serial => {
            let mut map = BTreeMap::new();
            for t in 0..cfg.samples {
                map = fold_record(map, run_trajectory(cfg, t)?);
            }
            map
        }
        ExecMode::Parallel => (0..cfg.samples)
            .into_par_iter()
            .map(|t| run_trajectory(cfg, t))
            .try_fold(BTreeMap::new, |map, rec: Result<RunRecord>| {
                Ok::<_, SimError>(fold_record(map, rec?))
            })
            .try_reduce(BTreeMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                Ok(a)
            })?,
    };
    Ok(CountsTable {
        counts,
        samples: cfg.samples,
        seed: cfg.seed,
    })
}

/// Exact probability of one outcome cell, enumerated without sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCell {
    pub key: CountKey,
    pub probability: f64,
    pub selected: bool,
}

/// Enumerate the exact probability of every (intermediate tuple, final)
/// cell by sequential collapse, in the same order as [`CountsTable`] keys.
pub fn enumerate_exact(cfg: &RunConfig) -> Result<Vec<ExactCell>> {
    cfg.validate()?;
    let shape = cfg.scenario.shape();
    let dim = shape.dim();
    let total_cells: usize = cfg
        .intermediate
        .iter()
        .map(MeasurementSpec::len)
        .product::<usize>()
        .saturating_mul(dim);
    if total_cells > MAX_ORACLE_CELLS {
        return Err(SimError::invalid(format!(
            "oracle enumeration of {total_cells} cells exceeds the {MAX_ORACLE_CELLS} limit"
        )));
    }
    let selected_index = shape.index(cfg.scenario.outcome())?;
    let mut cells = Vec::with_capacity(total_cells);
    // Depth-first over intermediate outcomes; a branch whose probability hit
    // exactly zero carries no state and every descendant cell is exact zero.
    struct Frame<'a> {
        cfg: &'a RunConfig,
        selected_index: usize,
        cells: &'a mut Vec<ExactCell>,
    }
    fn walk(
        f: &mut Frame,
        depth: usize,
        prefix: &mut Vec<usize>,
        state: Option<&crate::qstate::StateVector>,
        prob: f64,
    ) -> Result<()> {
        if depth == f.cfg.intermediate.len() {
            match state {
                Some(s) => {
                    for (fin, amp) in fourier_amplitudes(s).iter().enumerate() {
                        f.cells.push(ExactCell {
                            key: (prefix.clone(), fin),
                            probability: prob * amp.norm_sqr(),
                            selected: fin == f.selected_index,
                        });
                    }
                }
                None => {
                    for fin in 0..f.cfg.scenario.shape().dim() {
                        f.cells.push(ExactCell {
                            key: (prefix.clone(), fin),
                            probability: 0.0,
                            selected: fin == f.selected_index,
                        });
                    }
                }
            }
            return Ok(());
        }
        let cfg = f.cfg;
        for (o, p) in cfg.intermediate[depth].projectors().iter().enumerate() {
            prefix.push(o);
            match state {
                Some(s) => {
                    let collapsed = apply(p, s)?;
                    let w = collapsed.norm_sqr();
                    if w == 0.0 {
                        walk(f, depth + 1, prefix, None, 0.0)?;
                    } else {
                        let next =
                            collapsed.scaled(num_complex::Complex64::new(1.0 / w.sqrt(), 0.0));
                        walk(f, depth + 1, prefix, Some(&next), prob * w)?;
                    }
                }
                None => walk(f, depth + 1, prefix, None, 0.0)?,
            }
            prefix.pop();
        }
        Ok(())
    }
    let mut frame = Frame {
        cfg,
        selected_index,
        cells: &mut cells,
    };
    let pre = cfg.scenario.pre().clone();
    walk(&mut frame, 0, &mut Vec::new(), Some(&pre), 1.0)?;
    Ok(cells)
}

/// Empirical-vs-exact verdict for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    /// |z| within [`tol::Z_OK`], or a degenerate cell behaving exactly.
    Ok,
    /// [`tol::Z_OK`] < |z| <= [`tol::Z_FLAG`]: worth a look, not a failure.
    Flagged,
    /// |z| beyond [`tol::Z_FLAG`], or counts in a probability-zero cell.
    Extreme,
}

/// One row of the oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCell {
    pub key: CountKey,
    pub exact_probability: f64,
    pub count: u64,
    pub empirical_frequency: f64,
    /// None for degenerate cells (exact probability 0 or 1), where the
    /// binomial z-score is undefined.
    pub z_score: Option<f64>,
    pub status: CellStatus,
    pub selected: bool,
}

/// Full empirical-vs-exact comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub cells: Vec<OracleCell>,
    /// Sum of exact probabilities over all cells; 1 within
    /// [`tol::ENUMERATION_TOL`] by construction.
    pub total_exact_probability: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Score an existing counts table against the exact enumeration.
pub fn compare_counts(cfg: &RunConfig, counts: &CountsTable) -> Result<OracleComparison> {
    let exact = enumerate_exact(cfg)?;
    let n = cfg.samples as f64;
    let mut total = 0.0;
    let cells = exact
        .into_iter()
        .map(|cell| {
            total += cell.probability;
            let count = counts.counts.get(&cell.key).copied().unwrap_or(0);
            let empirical = count as f64 / n;
            let p = cell.probability;
            let (z_score, status) = if p <= 0.0 || p >= 1.0 {
                let expected = if p <= 0.0 { 0 } else { cfg.samples };
                let status = if count == expected {
                    CellStatus::Ok
                } else {
                    CellStatus::Extreme
                };
                (None, status)
            } else {
                let z = (count as f64 - n * p) / (n * p * (1.0 - p)).sqrt();
                let status = if z.abs() <= tol::Z_OK {
                    CellStatus::Ok
                } else if z.abs() <= tol::Z_FLAG {
                    CellStatus::Flagged
                } else {
                    CellStatus::Extreme
                };
                (Some(z), status)
            };
            OracleCell {
                key: cell.key,
                exact_probability: p,
                count,
                empirical_frequency: empirical,
                z_score,
                status,
                selected: cell.selected,
            }
        })
        .collect();
    Ok(OracleComparison {
        cells,
        total_exact_probability: total,
        samples: cfg.samples,
        seed: cfg.seed,
    })
}

/// Run the ensemble, then score it against the exact enumeration.
pub fn compare_to_oracle(cfg: &RunConfig) -> Result<OracleComparison> {
    let counts = run_ensemble(cfg)?;
    compare_counts(cfg, &counts)
}
