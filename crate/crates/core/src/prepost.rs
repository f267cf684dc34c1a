//! Conditional probabilities on pre- and post-selected ensembles.
//!
//! For an ensemble prepared in |Psi> and post-selected on |Phi>, the
//! probability that an intermediate projective measurement {Pi_i} yielded
//! outcome i is given by the ABL rule
//!
//! ```text
//! P(i) = |<Phi| Pi_i |Psi>|^2 / sum_j |<Phi| Pi_j |Psi>|^2
//! ```
//!
//! valid whenever at least one outcome connects pre to post. The weak value
//! <Phi|A|Psi> / <Phi|Psi> is the first-order pointer response of a weakly
//! coupled measurement of A on the same ensemble.
//!
//! Sequential chains are handled twice over: the bare amplitude
//! <post| Pi_k ... Pi_1 |pre> feeds oracle tests, while the physical path
//! probability performs a genuine Born-rule collapse at every step and only
//! then applies the post-selection.

use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::qstate::{
    apply, box_state, fourier_basis, inner, tensor, ProjectorSpec, RegisterShape, StateVector,
};
use crate::tol;

/// A normalized (pre, post) pair with its overlap recorded at construction.
#[derive(Debug, Clone)]
pub struct PrePostEnsemble {
    pre: StateVector,
    post: StateVector,
    overlap: C64,
}

impl PrePostEnsemble {
    pub fn new(pre: StateVector, post: StateVector) -> Result<Self> {
        if pre.shape() != post.shape() {
            return Err(SimError::shape(format!(
                "pre shape {:?} vs post shape {:?}",
                pre.shape(),
                post.shape()
            )));
        }
        if !pre.is_normalized() {
            return Err(SimError::invalid("pre-selection state is not normalized"));
        }
        if !post.is_normalized() {
            return Err(SimError::invalid("post-selection state is not normalized"));
        }
        let overlap = inner(&post, &pre)?;
        Ok(PrePostEnsemble { pre, post, overlap })
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> &StateVector {
        &self.post
    }

    /// <post|pre>, recorded at construction. May be zero.
    pub fn overlap(&self) -> C64 {
        self.overlap
    }

    pub fn shape(&self) -> RegisterShape {
        self.pre.shape()
    }
}

/// A complete orthogonal projective measurement with one label per outcome.
#[derive(Debug, Clone)]
pub struct MeasurementSpec {
    projectors: Vec<ProjectorSpec>,
    labels: Vec<String>,
}

impl MeasurementSpec {
    /// Validate orthogonality and completeness, then wrap. Diagonal
    /// projector families are checked exactly per configuration; rank-1
    /// product families via their Gram matrix; mixed or raw sets by
    /// materializing the sum (small registers only).
    pub fn new(projectors: Vec<ProjectorSpec>, labels: Vec<String>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(SimError::invalid("measurement with zero outcomes"));
        }
        if projectors.len() != labels.len() {
            return Err(SimError::invalid(format!(
                "{} projectors but {} labels",
                projectors.len(),
                labels.len()
            )));
        }
        let shape = projectors[0].shape();
        if projectors.iter().any(|p| p.shape() != shape) {
            return Err(SimError::shape("projectors disagree on register shape"));
        }
        Self::validate_complete(&projectors, shape)?;
        Ok(MeasurementSpec { projectors, labels })
    }

    fn validate_complete(projectors: &[ProjectorSpec], shape: RegisterShape) -> Result<()> {
        use crate::qstate::ProjectorKind;
        let dim = shape.dim();
        let all_diagonal = projectors.iter().all(|p| p.keeps(0).is_some());
        if all_diagonal {
            // Exact: each configuration must be kept by exactly one outcome.
            for cfg in 0..dim {
                let hits = projectors.iter().filter(|p| p.keeps(cfg).unwrap()).count();
                if hits != 1 {
                    return Err(SimError::invalid(format!(
                        "diagonal measurement keeps configuration {cfg} in {hits} outcomes"
                    )));
                }
            }
            return Ok(());
        }
        let all_rank1 = projectors
            .iter()
            .all(|p| matches!(p.kind(), ProjectorKind::ProductPost(_)));
        if all_rank1 {
            if projectors.len() != dim {
                return Err(SimError::invalid(format!(
                    "rank-1 measurement needs {dim} outcomes, got {}",
                    projectors.len()
                )));
            }
            let states: Vec<StateVector> = projectors
                .iter()
                .map(|p| match p.kind() {
                    ProjectorKind::ProductPost(parts) => tensor(parts),
                    _ => unreachable!(),
                })
                .collect::<Result<_>>()?;
            let eps = tol::identity_tol(dim);
            for (r, sr) in states.iter().enumerate() {
                for (c, sc) in states.iter().enumerate() {
                    let g = inner(sr, sc)?;
                    let target = if r == c { 1.0 } else { 0.0 };
                    if (g - target).norm() > eps {
                        return Err(SimError::invalid(
                            "rank-1 measurement states are not orthonormal",
                        ));
                    }
                }
            }
            return Ok(());
        }
        // General path: apply every projector to each basis vector and check
        // the resolution of identity plus pairwise orthogonality.
        if dim > crate::qstate::RAW_DIM_LIMIT {
            return Err(SimError::invalid(
                "mixed or raw measurement validation is limited to small registers",
            ));
        }
        let eps = tol::identity_tol(dim);
        for cfg in 0..dim {
            let mut basis_amps = vec![C64::new(0.0, 0.0); dim];
            basis_amps[cfg] = C64::new(1.0, 0.0);
            let e = StateVector::from_amplitudes(shape, basis_amps)?;
            let images: Vec<StateVector> = projectors
                .iter()
                .map(|p| apply(p, &e))
                .collect::<Result<_>>()?;
            for r in 0..dim {
                let total: C64 = images.iter().map(|im| im.amplitude(r)).sum();
                let target = if r == cfg { 1.0 } else { 0.0 };
                if (total - target).norm() > eps {
                    return Err(SimError::invalid(
                        "measurement projectors do not sum to the identity",
                    ));
                }
            }
            for a in 0..images.len() {
                for b in (a + 1)..images.len() {
                    let cross = inner(&images[a], &images[b])?;
                    if cross.norm() > eps {
                        return Err(SimError::invalid(
                            "measurement projectors are not orthogonal",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn projectors(&self) -> &[ProjectorSpec] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// {Pi^same_{i,j}, Pi^diff_{i,j}} with labels "same", "diff".
    pub fn same_diff(shape: RegisterShape, i: usize, j: usize) -> Result<Self> {
        Self::new(
            vec![
                ProjectorSpec::same_pair(shape, i, j)?,
                ProjectorSpec::diff_pair(shape, i, j)?,
            ],
            vec!["same".into(), "diff".into()],
        )
    }

    /// All M^2 box-pair outcomes for particles (i, j), labeled "b1-b2".
    pub fn box_pair_full(shape: RegisterShape, i: usize, j: usize) -> Result<Self> {
        let m = shape.num_boxes();
        let mut projectors = Vec::with_capacity(m * m);
        let mut labels = Vec::with_capacity(m * m);
        for b1 in 0..m {
            for b2 in 0..m {
                projectors.push(ProjectorSpec::box_pair(shape, i, j, b1, b2)?);
                labels.push(format!("{b1}-{b2}"));
            }
        }
        Self::new(projectors, labels)
    }

    /// The M box outcomes of a single particle, labeled "b".
    pub fn single_box_full(shape: RegisterShape, i: usize) -> Result<Self> {
        let m = shape.num_boxes();
        let mut projectors = Vec::with_capacity(m);
        let mut labels = Vec::with_capacity(m);
        for b in 0..m {
            projectors.push(ProjectorSpec::single_box(shape, i, b)?);
            labels.push(format!("{b}"));
        }
        Self::new(projectors, labels)
    }

    /// Rank-1 configuration-basis measurement, labels "b0-b1-...".
    pub fn config_basis(shape: RegisterShape) -> Result<Self> {
        let dim = shape.dim();
        let mut projectors = Vec::with_capacity(dim);
        let mut labels = Vec::with_capacity(dim);
        for cfg in 0..dim {
            let digits = shape.digits(cfg);
            let parts: Vec<StateVector> = digits
                .iter()
                .map(|&b| box_state(shape.num_boxes(), b))
                .collect::<Result<_>>()?;
            projectors.push(ProjectorSpec::product_post(shape, parts)?);
            labels.push(join_digits(&digits));
        }
        Self::new(projectors, labels)
    }

    /// Rank-1 product fourier-basis measurement, labels "m0-m1-...".
    pub fn fourier_product(shape: RegisterShape) -> Result<Self> {
        let basis = fourier_basis(shape.num_boxes())?;
        let dim = shape.dim();
        let mut projectors = Vec::with_capacity(dim);
        let mut labels = Vec::with_capacity(dim);
        for cfg in 0..dim {
            let digits = shape.digits(cfg);
            let parts: Vec<StateVector> = digits.iter().map(|&m| basis[m].clone()).collect();
            projectors.push(ProjectorSpec::product_post(shape, parts)?);
            labels.push(join_digits(&digits));
        }
        Self::new(projectors, labels)
    }
}

/// Join digit strings with '-': the label convention for tuple outcomes.
pub fn join_digits(digits: &[usize]) -> String {
    digits
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// Born-rule outcome probabilities of `m` on the normalized state `pre`.
pub fn born_probabilities(pre: &StateVector, m: &MeasurementSpec) -> Result<Vec<f64>> {
    if !pre.is_normalized() {
        return Err(SimError::invalid(
            "born_probabilities needs a normalized state",
        ));
    }
    m.projectors()
        .iter()
        .map(|p| Ok(apply(p, pre)?.norm_sqr()))
        .collect()
}

/// ABL outcome probabilities of `m` on a pre/post-selected ensemble.
pub fn abl_probabilities(e: &PrePostEnsemble, m: &MeasurementSpec) -> Result<Vec<f64>> {
    let numerators: Vec<f64> = m
        .projectors()
        .iter()
        .map(|p| {
            let collapsed = apply(p, e.pre())?;
            Ok(inner(e.post(), &collapsed)?.norm_sqr())
        })
        .collect::<Result<_>>()?;
    let denom: f64 = numerators.iter().sum();
    if denom <= tol::ORTHOGONALITY_TOL {
        return Err(SimError::ImpossiblePostselection(
            "no measurement outcome connects the pre-selection to the post-selection".into(),
        ));
    }
    Ok(numerators.into_iter().map(|n| n / denom).collect())
}

/// Weak value <Phi|A|Psi> / <Phi|Psi> of a projector on the ensemble.
pub fn weak_value(e: &PrePostEnsemble, op: &ProjectorSpec) -> Result<C64> {
    if e.overlap().norm() <= tol::ORTHOGONALITY_TOL {
        return Err(SimError::ImpossiblePostselection(
            "weak value undefined: pre- and post-selection are orthogonal".into(),
        ));
    }
    let numerator = inner(e.post(), &apply(op, e.pre())?)?;
    Ok(numerator / e.overlap())
}

/// Output of [`chain_amplitude`]: the bare matrix element and the physical
/// sequential-collapse probability of the same outcome path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResult {
    /// <post| Pi_k ... Pi_1 |pre>, no renormalization anywhere.
    pub amplitude: C64,
    /// Born probability of each projective outcome in order, times the final
    /// post-selection probability on the collapsed state.
    pub path_probability: f64,
}

/// Evaluate an ordered projective outcome chain between `pre` and `post`.
pub fn chain_amplitude(
    pre: &StateVector,
    outcomes: &[ProjectorSpec],
    post: &StateVector,
) -> Result<ChainResult> {
    if pre.shape() != post.shape() {
        return Err(SimError::shape("pre and post shapes differ"));
    }
    if !pre.is_normalized() || !post.is_normalized() {
        return Err(SimError::invalid("chain endpoints must be normalized"));
    }
    let mut bare = pre.clone();
    for p in outcomes {
        bare = apply(p, &bare)?;
    }
    let amplitude = inner(post, &bare)?;

    let mut state = pre.clone();
    let mut path_probability = 1.0;
    for p in outcomes {
        let collapsed = apply(p, &state)?;
        let weight = collapsed.norm_sqr();
        path_probability *= weight;
        if path_probability == 0.0 {
            return Ok(ChainResult {
                amplitude,
                path_probability: 0.0,
            });
        }
        state = collapsed.scaled(C64::new(1.0 / weight.sqrt(), 0.0));
    }
    path_probability *= inner(post, &state)?.norm_sqr();
    Ok(ChainResult {
        amplitude,
        path_probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{box_state, plus_state, tensor, ProjectorSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pigeonhole_ensemble(outcome: [usize; 3]) -> PrePostEnsemble {
        let f = fourier_basis(2).unwrap();
        let plus = plus_state(2).unwrap();
        let pre = tensor(&[plus.clone(), plus.clone(), plus]).unwrap();
        let post = tensor(&[
            f[outcome[0]].clone(),
            f[outcome[1]].clone(),
            f[outcome[2]].clone(),
        ])
        .unwrap();
        PrePostEnsemble::new(pre, post).unwrap()
    }

    #[test]
    fn ensemble_records_the_overlap() {
        let e = pigeonhole_ensemble([0, 0, 0]);
        // <post|pre> = (<f0|+>)^3 = (0.5 (1 - i))^3 = -(1 + i)/4
        assert!((e.overlap() - c(-0.25, -0.25)).norm() < 1e-15);
        assert!((e.overlap().norm_sqr() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn ensemble_rejects_shape_mismatch_and_unnormalized() {
        let pre = tensor(&[plus_state(2).unwrap(), plus_state(2).unwrap()]).unwrap();
        let post = plus_state(2).unwrap();
        assert!(PrePostEnsemble::new(pre.clone(), post).is_err());
        let long = pre.scaled(c(2.0, 0.0));
        assert!(PrePostEnsemble::new(long, pre).is_err());
    }

    #[test]
    fn measurement_needs_matching_labels_and_completeness() {
        let shape = RegisterShape::new(2, 2).unwrap();
        let same = ProjectorSpec::same_pair(shape, 0, 1).unwrap();
        let diff = ProjectorSpec::diff_pair(shape, 0, 1).unwrap();
        // completeness violated: same alone does not sum to identity
        assert!(MeasurementSpec::new(vec![same.clone()], vec!["same".into()]).is_err());
        // label count must match
        assert!(
            MeasurementSpec::new(vec![same.clone(), diff.clone()], vec!["same".into()]).is_err()
        );
        // overlapping projectors are not a measurement
        assert!(MeasurementSpec::new(
            vec![same.clone(), same.clone(), diff.clone()],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .is_err());
        assert!(MeasurementSpec::new(vec![same, diff], vec!["same".into(), "diff".into()]).is_ok());
    }

    #[test]
    fn measurement_constructors_are_complete() {
        let shape = RegisterShape::new(3, 2).unwrap();
        assert_eq!(MeasurementSpec::same_diff(shape, 0, 1).unwrap().len(), 2);
        assert_eq!(
            MeasurementSpec::box_pair_full(shape, 0, 2).unwrap().len(),
            4
        );
        assert_eq!(MeasurementSpec::single_box_full(shape, 1).unwrap().len(), 2);
        assert_eq!(MeasurementSpec::config_basis(shape).unwrap().len(), 8);
        let fp = MeasurementSpec::fourier_product(shape).unwrap();
        assert_eq!(fp.len(), 8);
        assert_eq!(fp.labels()[5], "1-0-1");
    }

    #[test]
    fn rank_one_completeness_rejects_missing_rays() {
        let shape = RegisterShape::new(1, 2).unwrap();
        let f = fourier_basis(2).unwrap();
        let p0 = ProjectorSpec::product_post(shape, vec![f[0].clone()]).unwrap();
        let p1 = ProjectorSpec::product_post(shape, vec![f[1].clone()]).unwrap();
        assert!(MeasurementSpec::new(vec![p0.clone(), p1], vec!["0".into(), "1".into()]).is_ok());
        // two copies of the same ray: count matches the dimension but the
        // family is not orthogonal, so the Gram check must reject it
        let p0b = ProjectorSpec::product_post(shape, vec![f[0].clone()]).unwrap();
        assert!(MeasurementSpec::new(vec![p0, p0b], vec!["a".into(), "b".into()]).is_err());
    }

    #[test]
    fn born_probabilities_on_the_uniform_state() {
        let shape = RegisterShape::new(3, 2).unwrap();
        let plus = plus_state(2).unwrap();
        let pre = tensor(&[plus.clone(), plus.clone(), plus]).unwrap();
        let m = MeasurementSpec::same_diff(shape, 0, 1).unwrap();
        let p = born_probabilities(&pre, &m).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);
        let boxes = MeasurementSpec::box_pair_full(shape, 0, 1).unwrap();
        for p in born_probabilities(&pre, &boxes).unwrap() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn abl_same_probability_vanishes_exactly() {
        let e = pigeonhole_ensemble([0, 0, 0]);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let m = MeasurementSpec::same_diff(e.shape(), i, j).unwrap();
            let p = abl_probabilities(&e, &m).unwrap();
            // the same-box amplitude cancels exactly, not approximately
            assert_eq!(p[0], 0.0, "pair ({i},{j})");
            assert_eq!(p[1], 1.0, "pair ({i},{j})");
        }
    }

    #[test]
    fn abl_box_outcomes_stay_uniform() {
        let e = pigeonhole_ensemble([0, 0, 0]);
        let m = MeasurementSpec::box_pair_full(e.shape(), 0, 1).unwrap();
        let p = abl_probabilities(&e, &m).unwrap();
        assert_eq!(p.len(), 4);
        for (o, v) in p.iter().enumerate() {
            assert!((v - 0.25).abs() < 1e-12, "outcome {o}: {v}");
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn abl_probabilities_sum_to_one_for_every_spec() {
        let e = pigeonhole_ensemble([1, 0, 0]);
        for m in [
            MeasurementSpec::same_diff(e.shape(), 1, 2).unwrap(),
            MeasurementSpec::box_pair_full(e.shape(), 0, 2).unwrap(),
            MeasurementSpec::single_box_full(e.shape(), 1).unwrap(),
            MeasurementSpec::config_basis(e.shape()).unwrap(),
        ] {
            let p = abl_probabilities(&e, &m).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| (-1e-15..=1.0 + 1e-12).contains(&x)));
        }
    }

    #[test]
    fn abl_detects_unreachable_postselection() {
        let pre = tensor(&[box_state(2, 0).unwrap(), box_state(2, 0).unwrap()]).unwrap();
        let post = tensor(&[box_state(2, 1).unwrap(), box_state(2, 1).unwrap()]).unwrap();
        let e = PrePostEnsemble::new(pre, post).unwrap();
        let m = MeasurementSpec::same_diff(e.shape(), 0, 1).unwrap();
        let err = abl_probabilities(&e, &m).unwrap_err();
        assert!(matches!(err, SimError::ImpossiblePostselection(_)));
    }

    #[test]
    fn weak_values_for_the_shifted_outcome() {
        let e = pigeonhole_ensemble([1, 0, 0]);
        let w01 = weak_value(&e, &ProjectorSpec::same_pair(e.shape(), 0, 1).unwrap()).unwrap();
        let w02 = weak_value(&e, &ProjectorSpec::same_pair(e.shape(), 0, 2).unwrap()).unwrap();
        let w12 = weak_value(&e, &ProjectorSpec::same_pair(e.shape(), 1, 2).unwrap()).unwrap();
        assert!((w01 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((w02 - c(1.0, 0.0)).norm() < 1e-12);
        assert!(w12.norm() < 1e-12);
    }

    #[test]
    fn single_box_weak_values_are_complex_halves() {
        let e = pigeonhole_ensemble([0, 0, 0]);
        let wl = weak_value(&e, &ProjectorSpec::single_box(e.shape(), 0, 0).unwrap()).unwrap();
        let wr = weak_value(&e, &ProjectorSpec::single_box(e.shape(), 0, 1).unwrap()).unwrap();
        assert!((wl - c(0.5, 0.5)).norm() < 1e-12);
        assert!((wr - c(0.5, -0.5)).norm() < 1e-12);
        // completeness: box weak values sum to 1
        assert!((wl + wr - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn weak_value_requires_nonzero_overlap() {
        let pre = tensor(&[box_state(2, 0).unwrap(), box_state(2, 0).unwrap()]).unwrap();
        let post = tensor(&[box_state(2, 1).unwrap(), box_state(2, 1).unwrap()]).unwrap();
        let e = PrePostEnsemble::new(pre, post).unwrap();
        let err = weak_value(&e, &ProjectorSpec::same_pair(e.shape(), 0, 1).unwrap()).unwrap_err();
        assert!(matches!(err, SimError::ImpossiblePostselection(_)));
    }

    #[test]
    fn chain_amplitude_and_path_probability() {
        let e = pigeonhole_ensemble([0, 0, 0]);
        let same01 = ProjectorSpec::same_pair(e.shape(), 0, 1).unwrap();
        let same02 = ProjectorSpec::same_pair(e.shape(), 0, 2).unwrap();
        let r = chain_amplitude(e.pre(), &[same01, same02], e.post()).unwrap();
        // bare amplitude <post| P_02 P_01 |pre> = (1 + i)/8
        assert!((r.amplitude - c(0.125, 0.125)).norm() < 1e-12);
        assert!((r.amplitude.norm_sqr() - 1.0 / 32.0).abs() < 1e-12);
        // sequential collapse: 1/2 * 1/2 * 1/8
        assert!((r.path_probability - 1.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn chain_with_no_outcomes_is_the_bare_overlap() {
        let e = pigeonhole_ensemble([0, 0, 0]);
        let r = chain_amplitude(e.pre(), &[], e.post()).unwrap();
        assert!((r.amplitude - e.overlap()).norm() < 1e-15);
        assert!((r.path_probability - 0.125).abs() < 1e-12);
    }

    #[test]
    fn chain_through_a_dead_branch_is_zero() {
        let pre = tensor(&[box_state(2, 0).unwrap(), box_state(2, 1).unwrap()]).unwrap();
        let post = tensor(&[plus_state(2).unwrap(), plus_state(2).unwrap()]).unwrap();
        let same = ProjectorSpec::same_pair(pre.shape(), 0, 1).unwrap();
        let r = chain_amplitude(&pre, &[same], &post).unwrap();
        assert_eq!(r.amplitude, c(0.0, 0.0));
        assert_eq!(r.path_probability, 0.0);
    }
}
