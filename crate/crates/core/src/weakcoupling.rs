//! Gaussian-pointer model of weak pairwise coupling.
//!
//! Every unordered particle pair (i, j) carries a one-dimensional pointer
//! prepared as a Gaussian of width sigma centered at 0. The interaction
//!
//! ```text
//! H = lambda sum_{i<j} Pi^same_{i,j} (x) K_{i,j}
//! ```
//!
//! couples each pair projector to its pointer's translation generator. H is
//! diagonal in the arm-configuration basis, so the evolution is exact: in
//! configuration c the (i, j) pointer is translated by lambda when i and j
//! share a box in c and is untouched otherwise. Arm amplitudes never change
//! (which-arm is a constant of motion).
//!
//! Because every pointer stays a superposition of equal-width Gaussians, all
//! moments reduce to the closed-form overlaps
//!
//! ```text
//! <phi_a|phi_b>   = exp(-(a-b)^2 / (8 sigma^2))
//! <phi_a|x|phi_b> = ((a+b)/2) exp(-(a-b)^2 / (8 sigma^2))
//! ```
//!
//! Post-selecting the arms leaves the pointers in a correlated state whose
//! per-pair marginals are evaluated exactly from these overlaps. At first
//! order the mean displacement of a pair pointer is lambda times the real
//! part of the weak value of its Pi^same, which vanishes for the pigeonhole
//! pre/post: the beams are undeflected, and the identical statement read in
//! the frequency domain is an unshifted spectral line.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::qstate::{apply, inner, ProjectorSpec, RegisterShape, StateVector};
use crate::tol;

/// <phi_a|phi_b> for unit-norm Gaussians of common width sigma.
pub fn gaussian_overlap(sigma: f64, a: f64, b: f64) -> f64 {
    let d = a - b;
    (-d * d / (8.0 * sigma * sigma)).exp()
}

/// <phi_a|x|phi_b>: the midpoint weighted by the overlap.
pub fn gaussian_position_element(sigma: f64, a: f64, b: f64) -> f64 {
    0.5 * (a + b) * gaussian_overlap(sigma, a, b)
}

/// Real amplitude of the unit-norm Gaussian centered at c, evaluated at x.
fn gaussian_amp(sigma: f64, c: f64, x: f64) -> f64 {
    let d = x - c;
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-d * d / (4.0 * sigma * sigma)).exp()
}

/// A finite superposition of equal-width shifted Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerState {
    terms: Vec<(C64, f64)>,
    width: f64,
}

impl PointerState {
    /// Superposition from (weight, center) terms.
    pub fn new(terms: Vec<(C64, f64)>, width: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(SimError::invalid("pointer state needs at least one term"));
        }
        if width <= 0.0 || !width.is_finite() {
            return Err(SimError::invalid("pointer width must be positive"));
        }
        for (w, c) in &terms {
            if !w.re.is_finite() || !w.im.is_finite() || !c.is_finite() {
                return Err(SimError::invalid("non-finite pointer term"));
            }
        }
        Ok(PointerState { terms, width })
    }

    /// The initial pointer: one Gaussian at the origin.
    pub fn initial(width: f64) -> Result<Self> {
        Self::new(vec![(C64::new(1.0, 0.0), 0.0)], width)
    }

    pub fn terms(&self) -> &[(C64, f64)] {
        &self.terms
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Squared norm via the closed-form overlap table.
    pub fn norm_sqr(&self) -> f64 {
        let mut acc = 0.0;
        for (wa, ca) in &self.terms {
            for (wb, cb) in &self.terms {
                acc += (wa.conj() * wb).re * gaussian_overlap(self.width, *ca, *cb);
            }
        }
        acc
    }

    /// Mean position of the normalized state.
    pub fn mean(&self) -> Result<f64> {
        let norm = self.norm_sqr();
        if norm <= tol::ORTHOGONALITY_TOL {
            return Err(SimError::invalid("pointer state has vanishing norm"));
        }
        let mut acc = 0.0;
        for (wa, ca) in &self.terms {
            for (wb, cb) in &self.terms {
                acc += (wa.conj() * wb).re * gaussian_position_element(self.width, *ca, *cb);
            }
        }
        Ok(acc / norm)
    }

    /// |psi(x)|^2 of the normalized state.
    pub fn density(&self, x: f64) -> f64 {
        let norm = self.norm_sqr();
        let mut amp = C64::new(0.0, 0.0);
        for (w, c) in &self.terms {
            amp += w * gaussian_amp(self.width, *c, x);
        }
        amp.norm_sqr() / norm
    }

    /// Density sampled on caller-specified points.
    pub fn density_curve(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.density(x)).collect()
    }
}

/// Exact coupled state after `evolve`: unchanged arm amplitudes plus a
/// conditional pointer translation per pair and arm configuration. Pointer
/// states are derived on demand rather than stored per configuration.
#[derive(Debug, Clone)]
pub struct CoupledState {
    shape: RegisterShape,
    lambda: f64,
    sigma: f64,
    arm_amplitudes: Vec<C64>,
    pairs: Vec<(usize, usize)>,
}

impl CoupledState {
    pub fn shape(&self) -> RegisterShape {
        self.shape
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn arm_amplitudes(&self) -> &[C64] {
        &self.arm_amplitudes
    }

    /// All unordered pairs, lexicographic.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Center of the pointer of `pair_index` in arm configuration `config`:
    /// lambda when the pair shares a box there, else 0.
    pub fn pointer_center(&self, pair_index: usize, config: usize) -> f64 {
        let (i, j) = self.pairs[pair_index];
        if self.shape.digit(config, i) == self.shape.digit(config, j) {
            self.lambda
        } else {
            0.0
        }
    }

    /// The pointer of `pair_index` in configuration `config`: a single
    /// displaced Gaussian.
    pub fn pointer(&self, pair_index: usize, config: usize) -> PointerState {
        PointerState::new(
            vec![(C64::new(1.0, 0.0), self.pointer_center(pair_index, config))],
            self.sigma,
        )
        .expect("valid by construction")
    }

    /// Total squared norm: arm weights times unit pointer norms.
    pub fn norm_sqr(&self) -> f64 {
        self.arm_amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born weights of the arm configurations; lambda-independent.
    pub fn arm_probabilities(&self) -> Vec<f64> {
        self.arm_amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Same-flags of every pair in `config`.
    fn pattern(&self, config: usize) -> Vec<bool> {
        (0..self.pairs.len())
            .map(|p| self.pointer_center(p, config) != 0.0)
            .collect()
    }
}

/// Couple every pair of `pre` to its pointer with strength `lambda`.
pub fn evolve(pre: &StateVector, lambda: f64, sigma: f64) -> Result<CoupledState> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(SimError::invalid("lambda must be nonnegative"));
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(SimError::invalid("sigma must be positive"));
    }
    if !pre.is_normalized() {
        return Err(SimError::invalid("evolve needs a normalized state"));
    }
    let shape = pre.shape();
    let n = shape.num_particles();
    if n < 2 {
        return Err(SimError::invalid(
            "pointer coupling needs at least 2 particles",
        ));
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    Ok(CoupledState {
        shape,
        lambda,
        sigma,
        arm_amplitudes: pre.amplitudes().to_vec(),
        pairs,
    })
}

/// Arm-contracted pointer correlations, grouped by the same-flag pattern of
/// the configurations. All marginal moments and densities are exact double
/// sums over these groups.
#[derive(Debug, Clone)]
pub struct PostselectedPointers {
    lambda: f64,
    sigma: f64,
    pairs: Vec<(usize, usize)>,
    success_probability: f64,
    /// (same-flags per pair, summed contraction amplitude).
    patterns: Vec<(Vec<bool>, C64)>,
}

impl PostselectedPointers {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Probability that the post-selection succeeds, pointer overlaps
    /// included.
    pub fn success_probability(&self) -> f64 {
        self.success_probability
    }

    fn center(&self, pattern: &[bool], pair_index: usize) -> f64 {
        if pattern[pair_index] {
            self.lambda
        } else {
            0.0
        }
    }

    /// Product of all pointer overlaps between two patterns except the one
    /// at `skip` (pass usize::MAX to keep all).
    fn cross_overlap(&self, a: &[bool], b: &[bool], skip: usize) -> f64 {
        let mut acc = 1.0;
        for p in 0..self.pairs.len() {
            if p == skip {
                continue;
            }
            acc *= gaussian_overlap(self.sigma, self.center(a, p), self.center(b, p));
        }
        acc
    }

    /// Exact mean displacement of one pair's pointer marginal.
    pub fn mean_shift(&self, pair_index: usize) -> f64 {
        let mut acc = 0.0;
        for (pa, wa) in &self.patterns {
            for (pb, wb) in &self.patterns {
                let ca = self.center(pa, pair_index);
                let cb = self.center(pb, pair_index);
                acc += (wa.conj() * wb).re
                    * gaussian_position_element(self.sigma, ca, cb)
                    * self.cross_overlap(pa, pb, pair_index);
            }
        }
        acc / self.success_probability
    }

    /// Mean displacement per pair, in pair order.
    pub fn mean_shifts(&self) -> Vec<f64> {
        (0..self.pairs.len()).map(|p| self.mean_shift(p)).collect()
    }

    /// Exact marginal position density of one pair's pointer (the diagonal
    /// of its reduced state), normalized to integrate to 1.
    pub fn density(&self, pair_index: usize, x: f64) -> f64 {
        let mut acc = 0.0;
        for (pa, wa) in &self.patterns {
            for (pb, wb) in &self.patterns {
                let ca = self.center(pa, pair_index);
                let cb = self.center(pb, pair_index);
                acc += (wa.conj() * wb).re
                    * gaussian_amp(self.sigma, ca, x)
                    * gaussian_amp(self.sigma, cb, x)
                    * self.cross_overlap(pa, pb, pair_index);
            }
        }
        acc / self.success_probability
    }

    /// Marginal density sampled on caller-specified points.
    pub fn density_curve(&self, pair_index: usize, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.density(pair_index, x)).collect()
    }

    /// Amplitude of the evolved, post-selected state onto the initial
    /// pointer product: <Phi| (x)_p <phi_0| e^{-iHT} |Psi> (x)_p |phi_0>.
    /// Equals <Phi|Psi> up to O(lambda^2); used to probe the perturbative
    /// expansion numerically.
    pub fn reference_amplitude(&self) -> C64 {
        let origin = vec![false; self.pairs.len()];
        let mut acc = C64::new(0.0, 0.0);
        for (pa, wa) in &self.patterns {
            acc += wa * self.cross_overlap(pa, &origin, usize::MAX);
        }
        acc
    }
}

/// Contract the arms of a coupled state against a post-selection.
pub fn postselect(cs: &CoupledState, post: &StateVector) -> Result<PostselectedPointers> {
    if post.shape() != cs.shape() {
        return Err(SimError::shape(
            "post-selection does not match the register",
        ));
    }
    if !post.is_normalized() {
        return Err(SimError::invalid("post-selection state is not normalized"));
    }
    let mut grouped: HashMap<Vec<bool>, C64> = HashMap::new();
    for (config, &a) in cs.arm_amplitudes.iter().enumerate() {
        let b = post.amplitude(config).conj() * a;
        *grouped
            .entry(cs.pattern(config))
            .or_insert(C64::new(0.0, 0.0)) += b;
    }
    let mut patterns: Vec<(Vec<bool>, C64)> = grouped.into_iter().collect();
    patterns.sort_by(|a, b| a.0.cmp(&b.0));
    let mut marginals = PostselectedPointers {
        lambda: cs.lambda,
        sigma: cs.sigma,
        pairs: cs.pairs.clone(),
        success_probability: 1.0,
        patterns,
    };
    let mut success = 0.0;
    for (pa, wa) in &marginals.patterns {
        for (pb, wb) in &marginals.patterns {
            success += (wa.conj() * wb).re * marginals.cross_overlap(pa, pb, usize::MAX);
        }
    }
    if success <= tol::ORTHOGONALITY_TOL {
        return Err(SimError::ImpossiblePostselection(
            "post-selection success probability vanishes".into(),
        ));
    }
    marginals.success_probability = success;
    Ok(marginals)
}

/// Pointer statistics with no post-selection: arms traced out, so distinct
/// configurations add incoherently.
#[derive(Debug, Clone)]
pub struct UnconditionedPointers {
    lambda: f64,
    sigma: f64,
    pairs: Vec<(usize, usize)>,
    /// (same-flags per pair, total Born weight).
    patterns: Vec<(Vec<bool>, f64)>,
}

impl UnconditionedPointers {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Mean displacement: lambda times the Born probability that the pair
    /// shares a box. Exactly lambda/2 for the all-plus preparation.
    pub fn mean_shift(&self, pair_index: usize) -> f64 {
        self.patterns
            .iter()
            .filter(|(p, _)| p[pair_index])
            .map(|(_, w)| w * self.lambda)
            .sum()
    }

    pub fn mean_shifts(&self) -> Vec<f64> {
        (0..self.pairs.len()).map(|p| self.mean_shift(p)).collect()
    }

    /// Marginal density: a Born-weighted mixture of the two displaced
    /// Gaussians.
    pub fn density(&self, pair_index: usize, x: f64) -> f64 {
        self.patterns
            .iter()
            .map(|(p, w)| {
                let c = if p[pair_index] { self.lambda } else { 0.0 };
                let amp = gaussian_amp(self.sigma, c, x);
                w * amp * amp
            })
            .sum()
    }

    pub fn density_curve(&self, pair_index: usize, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.density(pair_index, x)).collect()
    }
}

/// Trace out the arms of a coupled state.
pub fn unconditioned(cs: &CoupledState) -> UnconditionedPointers {
    let mut grouped: HashMap<Vec<bool>, f64> = HashMap::new();
    for (config, a) in cs.arm_amplitudes.iter().enumerate() {
        *grouped.entry(cs.pattern(config)).or_insert(0.0) += a.norm_sqr();
    }
    let mut patterns: Vec<(Vec<bool>, f64)> = grouped.into_iter().collect();
    patterns.sort_by(|a, b| a.0.cmp(&b.0));
    UnconditionedPointers {
        lambda: cs.lambda,
        sigma: cs.sigma,
        pairs: cs.pairs.clone(),
        patterns,
    }
}

/// Max over pairs of |<post| Pi^same_{i,j} |pre>|: the coefficient of the
/// first-order pointer response.
pub fn first_order_check(pre: &StateVector, post: &StateVector) -> Result<f64> {
    if pre.shape() != post.shape() {
        return Err(SimError::shape("pre and post shapes differ"));
    }
    let shape = pre.shape();
    let n = shape.num_particles();
    let mut max = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let proj = ProjectorSpec::same_pair(shape, i, j)?;
            let bracket = inner(post, &apply(&proj, pre)?)?;
            max = max.max(bracket.norm());
        }
    }
    Ok(max)
}

/// Coupling-strength regime of one scan point relative to the pointer
/// spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingRegime {
    /// lambda <= sigma * [`tol::WEAKNESS_RATIO`].
    Weak,
    /// Beyond the weakness cutoff; mutual disturbance re-emerges.
    Strong,
}

/// One lambda of a deflection scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub regime: CouplingRegime,
    /// 1 exactly when the scan is unconditioned.
    pub success_probability: f64,
    pub mean_shifts: Vec<f64>,
}

/// Verdict attached to a fitted slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeVerdict {
    /// Slope within [`tol::SLOPE_LINEAR`] +/- [`tol::SLOPE_LINEAR_TOL`]:
    /// the pointer responds at first order.
    FirstOrder,
    /// Slope at least [`tol::SLOPE_NULL`] - [`tol::SLOPE_NULL_TOL`]: no
    /// first-order deflection.
    NoFirstOrder,
    /// A fit was possible but matches neither band.
    Unclassified,
    /// Fewer than two points survived the shift floor.
    InsufficientPoints,
}

impl SlopeVerdict {
    fn classify(slope: Option<f64>) -> SlopeVerdict {
        match slope {
            None => SlopeVerdict::InsufficientPoints,
            Some(s) => {
                if (s - tol::SLOPE_LINEAR).abs() <= tol::SLOPE_LINEAR_TOL {
                    SlopeVerdict::FirstOrder
                } else if s >= tol::SLOPE_NULL - tol::SLOPE_NULL_TOL {
                    SlopeVerdict::NoFirstOrder
                } else {
                    SlopeVerdict::Unclassified
                }
            }
        }
    }
}

/// Least-squares fit of log|shift| against log lambda for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub pair: (usize, usize),
    pub slope: Option<f64>,
    pub points_used: usize,
    /// Points excluded because |shift| fell below [`tol::SHIFT_FLOOR`].
    pub points_excluded: usize,
    pub verdict: SlopeVerdict,
}

/// Full deflection scan: per-lambda mean shifts and per-pair slope fits.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionScan {
    pub sigma: f64,
    pub postselected: bool,
    /// True when max(lambda)/min(lambda) covers at least one decade.
    pub spans_decade: bool,
    pub pairs: Vec<(usize, usize)>,
    pub rows: Vec<ScanRow>,
    pub fits: Vec<PairFit>,
}

fn fit_loglog(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Scan mean pointer shifts over a list of couplings and fit log-log slopes
/// per pair. `post = None` runs the unconditioned (traced-arm) scan.
pub fn deflection_scan(
    pre: &StateVector,
    post: Option<&StateVector>,
    lambdas: &[f64],
    sigma: f64,
) -> Result<DeflectionScan> {
    if lambdas.len() < 2 {
        return Err(SimError::invalid(
            "insufficient points for fit: need at least two lambda values",
        ));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(SimError::invalid("lambda values must be positive"));
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(SimError::invalid("sigma must be positive"));
    }
    let rows: Vec<ScanRow> = lambdas
        .par_iter()
        .map(|&lambda| -> Result<ScanRow> {
            let cs = evolve(pre, lambda, sigma)?;
            let regime = if lambda <= sigma * tol::WEAKNESS_RATIO {
                CouplingRegime::Weak
            } else {
                CouplingRegime::Strong
            };
            let (success, shifts) = match post {
                Some(phi) => {
                    let ps = postselect(&cs, phi)?;
                    (ps.success_probability(), ps.mean_shifts())
                }
                None => (1.0, unconditioned(&cs).mean_shifts()),
            };
            Ok(ScanRow {
                lambda,
                regime,
                success_probability: success,
                mean_shifts: shifts,
            })
        })
        .collect::<Result<_>>()?;
    let pairs = evolve(pre, lambdas[0], sigma)?.pairs().to_vec();
    let fits = (0..pairs.len())
        .map(|p| {
            let mut points = Vec::new();
            let mut excluded = 0;
            for row in &rows {
                let shift = row.mean_shifts[p].abs();
                if shift >= tol::SHIFT_FLOOR {
                    points.push((row.lambda, shift));
                } else {
                    excluded += 1;
                }
            }
            let slope = fit_loglog(&points);
            PairFit {
                pair: pairs[p],
                slope,
                points_used: points.len(),
                points_excluded: excluded,
                verdict: SlopeVerdict::classify(slope),
            }
        })
        .collect();
    let lo = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().cloned().fold(0.0, f64::max);
    Ok(DeflectionScan {
        sigma,
        postselected: post.is_some(),
        spans_decade: hi / lo >= 10.0 * (1.0 - 1e-9),
        pairs,
        rows,
        fits,
    })
}
