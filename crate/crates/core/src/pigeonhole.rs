//! Scenario builders and correlation analyses for the pigeonhole arrangement.
//!
//! The canonical scenario prepares every particle in |+> and post-selects
//! each on an element of the fourier family. For the N = 3, M = 2 case with
//! outcome (0,0,0), pre and post are
//!
//! ```text
//! |Psi> = |+>|+>|+>        |Phi> = |+i>|+i>|+i>
//! ```
//!
//! and the ABL probability of finding any chosen pair in the same box
//! vanishes identically: <Phi| Pi^same_{i,j} |Psi> sums M equal-modulus
//! amplitudes whose phases are the M-th roots of unity (times a global
//! factor), and sum_{k=1}^{M} exp(i 2 pi k / M) = 0. With more particles
//! than boxes every pair is nevertheless "in different boxes", which is the
//! pigeonhole tension the library is built around.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::prepost::{abl_probabilities, MeasurementSpec, PrePostEnsemble};
use crate::qstate::{fourier_basis, plus_state, tensor_with_cap, RegisterShape, StateVector};
use crate::tol;

/// A pre/post-selected register with per-particle product structure.
#[derive(Debug, Clone)]
pub struct Scenario {
    shape: RegisterShape,
    pre: StateVector,
    post: StateVector,
    outcome: Vec<usize>,
}

impl Scenario {
    pub fn shape(&self) -> RegisterShape {
        self.shape
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> &StateVector {
        &self.post
    }

    /// Per-particle index into `fourier_basis(M)` defining the
    /// post-selection.
    pub fn outcome(&self) -> &[usize] {
        &self.outcome
    }

    pub fn ensemble(&self) -> Result<PrePostEnsemble> {
        PrePostEnsemble::new(self.pre.clone(), self.post.clone())
    }
}

/// The canonical scenario: pre = product of plus states, post = product of
/// fourier-basis elements selected by `outcome`.
pub fn build_scenario(
    num_particles: usize,
    num_boxes: usize,
    outcome: &[usize],
) -> Result<Scenario> {
    build_scenario_with_cap(num_particles, num_boxes, outcome, tol::DEFAULT_DIM_CAP)
}

/// [`build_scenario`] under an explicit dimension cap.
pub fn build_scenario_with_cap(
    num_particles: usize,
    num_boxes: usize,
    outcome: &[usize],
    cap: usize,
) -> Result<Scenario> {
    let plus = plus_state(num_boxes)?;
    let pre_parts = vec![plus; num_particles];
    scenario_from_parts(pre_parts, num_boxes, outcome, cap)
}

/// Scenario with arbitrary normalized single-particle pre-selection factors.
/// The post-selection stays a fourier-basis product so the final measurement
/// remains well defined.
pub fn scenario_from_parts(
    pre_parts: Vec<StateVector>,
    num_boxes: usize,
    outcome: &[usize],
    cap: usize,
) -> Result<Scenario> {
    let num_particles = pre_parts.len();
    if num_particles < 2 {
        return Err(SimError::invalid("need at least 2 particles"));
    }
    let shape = RegisterShape::with_cap(num_particles, num_boxes, cap)?;
    if outcome.len() != num_particles {
        return Err(SimError::invalid(format!(
            "outcome has {} entries for {} particles",
            outcome.len(),
            num_particles
        )));
    }
    let basis = fourier_basis(num_boxes)?;
    for &o in outcome {
        if o >= num_boxes {
            return Err(SimError::invalid(format!(
                "outcome index {o} out of range for M = {num_boxes}"
            )));
        }
    }
    for part in &pre_parts {
        if part.shape().num_particles() != 1 || part.shape().num_boxes() != num_boxes {
            return Err(SimError::shape(
                "pre-selection factors must be single-particle states over the same boxes",
            ));
        }
        if !part.is_normalized() {
            return Err(SimError::invalid("pre-selection factor is not normalized"));
        }
    }
    let post_parts: Vec<StateVector> = outcome.iter().map(|&o| basis[o].clone()).collect();
    let pre = tensor_with_cap(&pre_parts, cap)?;
    let post = tensor_with_cap(&post_parts, cap)?;
    Ok(Scenario {
        shape,
        pre,
        post,
        outcome: outcome.to_vec(),
    })
}

/// ABL probability that particles i and j are found in the same box, given
/// the scenario's pre- and post-selection.
pub fn pair_same_probability(s: &Scenario, i: usize, j: usize) -> Result<f64> {
    let ensemble = s.ensemble()?;
    pair_same_probability_for(&ensemble, i, j)
}

/// [`pair_same_probability`] on an arbitrary ensemble.
pub fn pair_same_probability_for(e: &PrePostEnsemble, i: usize, j: usize) -> Result<f64> {
    let m = MeasurementSpec::same_diff(e.shape(), i, j)?;
    Ok(abl_probabilities(e, &m)?[0])
}

/// Classification of one pair in a correlation pattern. The probability of
/// SAME is carried along in every case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairClass {
    Same,
    Different,
    Undetermined,
}

impl PairClass {
    /// Classify an ABL probability of SAME against [`tol::PATTERN_TOL`].
    pub fn from_probability(p: f64) -> PairClass {
        if p >= 1.0 - tol::PATTERN_TOL {
            PairClass::Same
        } else if p <= tol::PATTERN_TOL {
            PairClass::Different
        } else {
            PairClass::Undetermined
        }
    }
}

/// One pair's entry in a correlation pattern; indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub p_same: f64,
    pub class: PairClass,
}

/// The full table over all unordered pairs, sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPattern {
    pub pairs: Vec<PairResult>,
}

impl CorrelationPattern {
    /// Entry for the unordered pair {i, j}.
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairResult> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == a && p.j == b)
    }

    /// Largest probability of SAME across pairs.
    pub fn max_p_same(&self) -> f64 {
        self.pairs.iter().map(|p| p.p_same).fold(0.0, f64::max)
    }
}

/// Correlation pattern of a scenario over all pairs.
pub fn correlation_pattern(s: &Scenario) -> Result<CorrelationPattern> {
    correlation_pattern_for(&s.ensemble()?)
}

/// Correlation pattern of an arbitrary pre/post ensemble.
pub fn correlation_pattern_for(e: &PrePostEnsemble) -> Result<CorrelationPattern> {
    let n = e.shape().num_particles();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let p_same = pair_same_probability_for(e, i, j)?;
            pairs.push(PairResult {
                i,
                j,
                p_same,
                class: PairClass::from_probability(p_same),
            });
        }
    }
    Ok(CorrelationPattern { pairs })
}

/// Result of the N-particle, M-box generalization check at outcome (0,..,0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralReport {
    pub num_particles: usize,
    pub num_boxes: usize,
    /// Max over pairs of the ABL probability of SAME.
    pub max_pair_same_probability: f64,
    /// |sum_{k=1}^{M} exp(i 2 pi k / M)|, the algebraic identity underneath.
    pub roots_of_unity_residual: f64,
}

/// |sum_{k=1}^{M} exp(i 2 pi k / M)|.
pub fn roots_of_unity_residual(num_boxes: usize) -> f64 {
    (1..=num_boxes)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / num_boxes as f64))
        .sum::<C64>()
        .norm()
}

/// Check the generalized pigeonhole identity for (N, M) at outcome (0,..,0).
pub fn verify_general(num_particles: usize, num_boxes: usize) -> Result<GeneralReport> {
    verify_general_with_cap(num_particles, num_boxes, tol::DEFAULT_DIM_CAP)
}

/// [`verify_general`] under an explicit dimension cap.
pub fn verify_general_with_cap(
    num_particles: usize,
    num_boxes: usize,
    cap: usize,
) -> Result<GeneralReport> {
    let outcome = vec![0usize; num_particles];
    let scenario = build_scenario_with_cap(num_particles, num_boxes, &outcome, cap)?;
    let pattern = correlation_pattern(&scenario)?;
    Ok(GeneralReport {
        num_particles,
        num_boxes,
        max_pair_same_probability: pattern.max_p_same(),
        roots_of_unity_residual: roots_of_unity_residual(num_boxes),
    })
}
