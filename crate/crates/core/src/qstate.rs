//! Dense state vectors and projectors over an N-particle, M-box register.
//!
//! A register configuration assigns one of M boxes to each of N particles.
//! Configurations are indexed in mixed radix with particle 0 as the most
//! significant digit, so for M = 2 the index of |b_0 b_1 ... b_{N-1}> is the
//! binary number b_0 b_1 ... b_{N-1} (boxes L = 0, R = 1).
//!
//! The measurement basis used for post-selection is the phase (fourier)
//! family: element m of [`fourier_basis`] is
//!
//! ```text
//! |f_m> = (1/sqrt M) sum_k exp(i (pi/M + 2 pi m / M) k) |k>
//! ```
//!
//! so element 0 is the phase state with theta = pi/M, and for M = 2 the two
//! elements are |+i> and |-i>. The basis is orthonormal: the pairwise phase
//! differences are nonzero multiples of 2 pi / M and the geometric sums
//! cancel.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Result, SimError};
use crate::tol;

/// Register geometry: how many particles, how many boxes each can occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterShape {
    num_particles: usize,
    num_boxes: usize,
}

impl RegisterShape {
    /// Shape with the default dimension cap of M^N <= 2^20.
    pub fn new(num_particles: usize, num_boxes: usize) -> Result<Self> {
        Self::with_cap(num_particles, num_boxes, tol::DEFAULT_DIM_CAP)
    }

    /// Shape with an explicit dimension cap.
    pub fn with_cap(num_particles: usize, num_boxes: usize, cap: usize) -> Result<Self> {
        if num_particles < 1 {
            return Err(SimError::invalid("need at least 1 particle"));
        }
        if num_boxes < 2 {
            return Err(SimError::invalid("need at least 2 boxes"));
        }
        let dim = (num_boxes as u128)
            .checked_pow(num_particles as u32)
            .ok_or(SimError::DimensionCap {
                dim: u128::MAX,
                cap,
            })?;
        if dim > cap as u128 {
            return Err(SimError::DimensionCap { dim, cap });
        }
        Ok(RegisterShape {
            num_particles,
            num_boxes,
        })
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    pub fn num_boxes(&self) -> usize {
        self.num_boxes
    }

    /// Total dimension M^N.
    pub fn dim(&self) -> usize {
        self.num_boxes.pow(self.num_particles as u32)
    }

    /// Mixed-radix stride of `particle`: the index step that increments its
    /// box digit by one.
    pub fn stride(&self, particle: usize) -> usize {
        self.num_boxes
            .pow((self.num_particles - 1 - particle) as u32)
    }

    /// Box digit of `particle` within configuration `config`.
    pub fn digit(&self, config: usize, particle: usize) -> usize {
        (config / self.stride(particle)) % self.num_boxes
    }

    /// All box digits of `config`, particle 0 first.
    pub fn digits(&self, config: usize) -> Vec<usize> {
        (0..self.num_particles)
            .map(|p| self.digit(config, p))
            .collect()
    }

    /// Configuration index of a digit string, particle 0 most significant.
    pub fn index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.num_particles {
            return Err(SimError::shape(format!(
                "expected {} digits, got {}",
                self.num_particles,
                digits.len()
            )));
        }
        let mut idx = 0usize;
        for &d in digits {
            if d >= self.num_boxes {
                return Err(SimError::invalid(format!(
                    "box index {d} out of range for M = {}",
                    self.num_boxes
                )));
            }
            idx = idx * self.num_boxes + d;
        }
        Ok(idx)
    }

    fn check_particle(&self, i: usize) -> Result<()> {
        if i >= self.num_particles {
            return Err(SimError::invalid(format!(
                "particle index {i} out of range for N = {}",
                self.num_particles
            )));
        }
        Ok(())
    }

    fn check_box(&self, b: usize) -> Result<()> {
        if b >= self.num_boxes {
            return Err(SimError::invalid(format!(
                "box index {b} out of range for M = {}",
                self.num_boxes
            )));
        }
        Ok(())
    }
}

/// Dense complex amplitude vector over the M^N configurations of a register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    shape: RegisterShape,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wrap an amplitude vector; the length must equal the register dimension
    /// and every entry must be finite.
    pub fn from_amplitudes(shape: RegisterShape, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != shape.dim() {
            return Err(SimError::shape(format!(
                "amplitude vector has length {}, register dimension is {}",
                amps.len(),
                shape.dim()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(SimError::invalid("non-finite amplitude"));
        }
        Ok(StateVector { shape, amps })
    }

    /// The all-zero vector (useful as an accumulator).
    pub fn zero(shape: RegisterShape) -> Self {
        StateVector {
            shape,
            amps: vec![C64::new(0.0, 0.0); shape.dim()],
        }
    }

    pub fn shape(&self) -> RegisterShape {
        self.shape
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, config: usize) -> C64 {
        self.amps[config]
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Squared norm, the total Born weight.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// True when the norm is 1 within the identity tolerance for this
    /// dimension.
    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= tol::identity_tol(self.shape.dim())
    }

    /// Rescale to unit norm; errors when the state is numerically zero.
    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n * n <= tol::ORTHOGONALITY_TOL {
            return Err(SimError::invalid(
                "cannot normalize a numerically zero state",
            ));
        }
        let inv = 1.0 / n;
        Ok(StateVector {
            shape: self.shape,
            amps: self.amps.iter().map(|a| a * inv).collect(),
        })
    }

    /// Multiply every amplitude by `c`.
    pub fn scaled(&self, c: C64) -> StateVector {
        StateVector {
            shape: self.shape,
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }
}

/// Single-particle basis state |k> in an M-box register.
pub fn box_state(num_boxes: usize, k: usize) -> Result<StateVector> {
    let shape = RegisterShape::new(1, num_boxes)?;
    shape.check_box(k)?;
    let mut amps = vec![C64::new(0.0, 0.0); num_boxes];
    amps[k] = C64::new(1.0, 0.0);
    StateVector::from_amplitudes(shape, amps)
}

/// Uniform single-particle superposition (1/sqrt M) sum_k |k>.
pub fn plus_state(num_boxes: usize) -> Result<StateVector> {
    phase_state(num_boxes, 0.0)
}

/// Single-particle phase state (1/sqrt M) sum_k exp(i theta k) |k>.
pub fn phase_state(num_boxes: usize, theta: f64) -> Result<StateVector> {
    let shape = RegisterShape::new(1, num_boxes)?;
    let w = 1.0 / (num_boxes as f64).sqrt();
    let amps = (0..num_boxes)
        .map(|k| C64::from_polar(w, theta * k as f64))
        .collect();
    StateVector::from_amplitudes(shape, amps)
}

/// w * exp(i pi a / b), exact on quarter-turn multiples. Exactness matters:
/// amplitude cancellations that are algebraically exact (the heart of the
/// same-box suppression) must come out as IEEE zero, not 1e-17 residue.
fn polar_pi_fraction(w: f64, a: usize, b: usize) -> C64 {
    let a = a % (2 * b);
    if (2 * a).is_multiple_of(b) {
        match 2 * a / b {
            0 => C64::new(w, 0.0),
            1 => C64::new(0.0, w),
            2 => C64::new(-w, 0.0),
            _ => C64::new(0.0, -w),
        }
    } else {
        C64::from_polar(w, PI * a as f64 / b as f64)
    }
}

/// The orthonormal phase family containing the shifted-phase states: element
/// m equals phase_state(M, pi/M + 2 pi m / M), so element 0 has theta = pi/M
/// and for M = 2 the family is {|+i>, |-i>}. Entries on quarter-turn phases
/// are exact.
pub fn fourier_basis(num_boxes: usize) -> Result<Vec<StateVector>> {
    let shape = RegisterShape::new(1, num_boxes)?;
    let w = 1.0 / (num_boxes as f64).sqrt();
    (0..num_boxes)
        .map(|m| {
            let amps = (0..num_boxes)
                .map(|k| polar_pi_fraction(w, (1 + 2 * m) * k, num_boxes))
                .collect();
            StateVector::from_amplitudes(shape, amps)
        })
        .collect()
}

/// Tensor product of any number of states sharing a box count. Particle
/// order follows argument order; the product of an empty list is an error.
pub fn tensor(states: &[StateVector]) -> Result<StateVector> {
    tensor_with_cap(states, tol::DEFAULT_DIM_CAP)
}

/// Tensor product under an explicit dimension cap.
pub fn tensor_with_cap(states: &[StateVector], cap: usize) -> Result<StateVector> {
    let first = states
        .first()
        .ok_or_else(|| SimError::invalid("tensor of zero states"))?;
    let m = first.shape.num_boxes();
    let mut total_particles = 0usize;
    for s in states {
        if s.shape.num_boxes() != m {
            return Err(SimError::shape(format!(
                "tensor factors disagree on box count: {} vs {m}",
                s.shape.num_boxes()
            )));
        }
        total_particles += s.shape.num_particles();
    }
    let shape = RegisterShape::with_cap(total_particles, m, cap)?;
    let mut amps = vec![C64::new(1.0, 0.0)];
    for s in states {
        let mut next = Vec::with_capacity(amps.len() * s.amps.len());
        for a in &amps {
            for b in &s.amps {
                next.push(a * b);
            }
        }
        amps = next;
    }
    StateVector::from_amplitudes(shape, amps)
}

/// Inner product <a|b>, conjugate-linear in the first argument.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.shape != b.shape {
        return Err(SimError::shape(format!(
            "inner product between shapes {:?} and {:?}",
            a.shape, b.shape
        )));
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// Amplitudes of `psi` in the product fourier basis: entry at configuration
/// index t (digits m_0 .. m_{N-1}) is <f_{m_0} ... f_{m_{N-1}} | psi>.
pub fn fourier_amplitudes(psi: &StateVector) -> Vec<C64> {
    let shape = psi.shape;
    let n = shape.num_particles();
    let m = shape.num_boxes();
    let w = 1.0 / (m as f64).sqrt();
    // Per-particle transform row m', column k: conj of the basis
    // coefficient, bit-for-bit, so staged transforms cancel exactly
    // wherever direct inner products against the basis would.
    let u: Vec<Vec<C64>> = (0..m)
        .map(|mm| {
            (0..m)
                .map(|k| polar_pi_fraction(w, (1 + 2 * mm) * k, m).conj())
                .collect()
        })
        .collect();
    let mut amps = psi.amps.clone();
    for p in 0..n {
        let stride = shape.stride(p);
        let block = stride * m;
        let mut next = vec![C64::new(0.0, 0.0); amps.len()];
        for base in (0..amps.len()).step_by(block) {
            for off in 0..stride {
                for (mm, row) in u.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, u_mk) in row.iter().enumerate() {
                        acc += u_mk * amps[base + off + k * stride];
                    }
                    next[base + off + mm * stride] = acc;
                }
            }
        }
        amps = next;
    }
    amps
}

/// Largest register dimension accepted for `Raw` projector matrices;
/// construction validates hermiticity and idempotence, which is cubic in the
/// dimension.
pub const RAW_DIM_LIMIT: usize = 256;

/// The supported projector families. Same/diff/box projectors are diagonal
/// in the configuration basis and applied as index filters, so no matrix is
/// ever materialized for them.
#[derive(Debug, Clone)]
pub enum ProjectorKind {
    /// Projects onto configurations where particles i and j share a box.
    SamePair { i: usize, j: usize },
    /// Projects onto configurations where particles i and j differ.
    DiffPair { i: usize, j: usize },
    /// Particle i in box b1 and particle j in box b2.
    BoxPair {
        i: usize,
        j: usize,
        b1: usize,
        b2: usize,
    },
    /// Particle i in box b.
    SingleBox { i: usize, b: usize },
    /// Rank-1 projector onto a product of per-particle states.
    ProductPost(Vec<StateVector>),
    /// Explicit dense matrix, row-major, for small registers.
    Raw(Vec<C64>),
}

/// A projector together with the register shape it acts on.
#[derive(Debug, Clone)]
pub struct ProjectorSpec {
    kind: ProjectorKind,
    shape: RegisterShape,
}

impl ProjectorSpec {
    pub fn kind(&self) -> &ProjectorKind {
        &self.kind
    }

    pub fn shape(&self) -> RegisterShape {
        self.shape
    }

    fn pair(shape: RegisterShape, i: usize, j: usize) -> Result<()> {
        shape.check_particle(i)?;
        shape.check_particle(j)?;
        if i == j {
            return Err(SimError::invalid("pair projector needs i != j"));
        }
        Ok(())
    }

    /// Pi^same_{i,j}: both particles in the same box.
    pub fn same_pair(shape: RegisterShape, i: usize, j: usize) -> Result<Self> {
        Self::pair(shape, i, j)?;
        Ok(ProjectorSpec {
            kind: ProjectorKind::SamePair { i, j },
            shape,
        })
    }

    /// Pi^diff_{i,j}: the complement of [`ProjectorSpec::same_pair`].
    pub fn diff_pair(shape: RegisterShape, i: usize, j: usize) -> Result<Self> {
        Self::pair(shape, i, j)?;
        Ok(ProjectorSpec {
            kind: ProjectorKind::DiffPair { i, j },
            shape,
        })
    }

    /// Pi^{b1 b2}_{i,j}: particle i in box b1, particle j in box b2.
    pub fn box_pair(
        shape: RegisterShape,
        i: usize,
        j: usize,
        b1: usize,
        b2: usize,
    ) -> Result<Self> {
        Self::pair(shape, i, j)?;
        shape.check_box(b1)?;
        shape.check_box(b2)?;
        Ok(ProjectorSpec {
            kind: ProjectorKind::BoxPair { i, j, b1, b2 },
            shape,
        })
    }

    /// Pi_{i,b}: particle i in box b.
    pub fn single_box(shape: RegisterShape, i: usize, b: usize) -> Result<Self> {
        shape.check_particle(i)?;
        shape.check_box(b)?;
        Ok(ProjectorSpec {
            kind: ProjectorKind::SingleBox { i, b },
            shape,
        })
    }

    /// Rank-1 projector onto the product of normalized per-particle states.
    pub fn product_post(shape: RegisterShape, parts: Vec<StateVector>) -> Result<Self> {
        if parts.len() != shape.num_particles() {
            return Err(SimError::shape(format!(
                "{} factor states for {} particles",
                parts.len(),
                shape.num_particles()
            )));
        }
        for part in &parts {
            if part.shape().num_particles() != 1 || part.shape().num_boxes() != shape.num_boxes() {
                return Err(SimError::shape(
                    "product factors must be single-particle states over the same boxes",
                ));
            }
            if !part.is_normalized() {
                return Err(SimError::invalid("product factor is not normalized"));
            }
        }
        Ok(ProjectorSpec {
            kind: ProjectorKind::ProductPost(parts),
            shape,
        })
    }

    /// Dense matrix projector; validated hermitian and idempotent within the
    /// identity tolerance. Limited to dimension [`RAW_DIM_LIMIT`].
    pub fn raw(shape: RegisterShape, matrix: Vec<C64>) -> Result<Self> {
        let d = shape.dim();
        if d > RAW_DIM_LIMIT {
            return Err(SimError::invalid(format!(
                "raw projectors are limited to dimension {RAW_DIM_LIMIT}, register has {d}"
            )));
        }
        if matrix.len() != d * d {
            return Err(SimError::shape(format!(
                "raw matrix has {} entries, expected {}",
                matrix.len(),
                d * d
            )));
        }
        let eps = tol::identity_tol(d);
        for r in 0..d {
            for c in 0..d {
                let delta = matrix[r * d + c] - matrix[c * d + r].conj();
                if delta.norm() > eps {
                    return Err(SimError::invalid("raw matrix is not hermitian"));
                }
            }
        }
        for r in 0..d {
            for c in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += matrix[r * d + k] * matrix[k * d + c];
                }
                let delta = acc - matrix[r * d + c];
                if delta.norm() > eps {
                    return Err(SimError::invalid("raw matrix is not idempotent"));
                }
            }
        }
        Ok(ProjectorSpec {
            kind: ProjectorKind::Raw(matrix),
            shape,
        })
    }

    /// True when the projector keeps configuration `config`. Only meaningful
    /// for the diagonal kinds; rank-1 and raw projectors return None.
    pub fn keeps(&self, config: usize) -> Option<bool> {
        let s = self.shape;
        match &self.kind {
            ProjectorKind::SamePair { i, j } => Some(s.digit(config, *i) == s.digit(config, *j)),
            ProjectorKind::DiffPair { i, j } => Some(s.digit(config, *i) != s.digit(config, *j)),
            ProjectorKind::BoxPair { i, j, b1, b2 } => {
                Some(s.digit(config, *i) == *b1 && s.digit(config, *j) == *b2)
            }
            ProjectorKind::SingleBox { i, b } => Some(s.digit(config, *i) == *b),
            ProjectorKind::ProductPost(_) | ProjectorKind::Raw(_) => None,
        }
    }
}

/// Apply a projector without renormalizing; the caller decides what to do
/// with the lost norm.
pub fn apply(p: &ProjectorSpec, s: &StateVector) -> Result<StateVector> {
    if p.shape() != s.shape() {
        return Err(SimError::shape(format!(
            "projector shape {:?} applied to state shape {:?}",
            p.shape(),
            s.shape()
        )));
    }
    match p.kind() {
        ProjectorKind::ProductPost(parts) => {
            let u = tensor(parts)?;
            let c = inner(&u, s)?;
            Ok(u.scaled(c))
        }
        ProjectorKind::Raw(matrix) => {
            let d = s.shape().dim();
            let mut amps = vec![C64::new(0.0, 0.0); d];
            for (r, out) in amps.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..d {
                    acc += matrix[r * d + c] * s.amplitude(c);
                }
                *out = acc;
            }
            StateVector::from_amplitudes(s.shape(), amps)
        }
        _ => {
            let amps = s
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(cfg, &a)| {
                    if p.keeps(cfg).expect("diagonal projector") {
                        a
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            StateVector::from_amplitudes(s.shape(), amps)
        }
    }
}
