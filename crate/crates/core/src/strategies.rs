//! Measurement strategies: a probe state plus a procedure that turns the
//! evolved probe into a guess for the unknown unitary.
//!
//! Two kinds of measurement are provided.  A [`DiscretePovm`] is a finite set
//! of positive operators, each paired with a guess.  A [`CovariantSampler`]
//! is the continuous family `{c·(W^{⊗N}⊗I)|χ⟩⟨χ|(W^{⊗N}⊗I)†, W}` indexed by
//! `W ∈ SU(d)`; outcomes are drawn by rejection against the Haar measure,
//! accepting a proposal `W` with probability `|⟨χ|(W†^{⊗N}⊗I)|ψ⟩|²`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::haar::{haar_su, haar_mean_operator, RngStream};
use crate::numerics::{herm_eig, is_unitary, kron, kron_power, unitarity_defect, ComplexMatrix, PureState, C64};
use crate::probes::{max_entangled, optimal_n2_prep_weight, phi2, su2_n2_irreps};
use crate::{input_err, Error, Result};

/// Elements must have eigenvalues at least `−PSD_TOL`.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed `‖Σ G_r − I‖_F`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Guesses must satisfy `‖U†U − I‖_F` below this.
pub const GUESS_UNITARY_TOL: f64 = 1e-8;
/// Proposals tried by a covariant sampler before giving up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 1_000_000;

/// Turns the evolved probe into a guess.
pub trait Measurement: Send + Sync {
    fn measure(&self, post: &PureState, rng: &mut RngStream) -> Result<ComplexMatrix>;
}

/// Probe preparation plus measurement, for `copies` parallel uses of a
/// `dim`-dimensional unitary.
#[derive(Clone)]
pub struct Strategy {
    name: String,
    prepare: PureState,
    dim: usize,
    copies: usize,
    measurement: Arc<dyn Measurement>,
}

impl std::fmt::Debug for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Strategy")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("copies", &self.copies)
            .field("prepare", &self.prepare)
            .finish_non_exhaustive()
    }
}

impl Strategy {
    pub fn new(
        name: impl Into<String>,
        prepare: PureState,
        dim: usize,
        copies: usize,
        measurement: Arc<dyn Measurement>,
    ) -> Result<Self> {
        if dim < 2 || copies < 1 {
            return input_err("need dim ≥ 2 and at least one copy");
        }
        let da = dim.pow(copies as u32);
        if !prepare.len().is_multiple_of(da) {
            return input_err(format!(
                "probe of length {} has no A factor of dimension {da}",
                prepare.len()
            ));
        }
        Ok(Self {
            name: name.into(),
            prepare,
            dim,
            copies,
            measurement,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn prepare(&self) -> &PureState {
        &self.prepare
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// Same measurement, different probe.
    pub fn with_prepare(&self, prepare: PureState) -> Result<Self> {
        Self::new(self.name.clone(), prepare, self.dim, self.copies, self.measurement.clone())
    }

    /// Post-processes every guess `W` into `W·right`.
    pub fn map_guesses(&self, right: ComplexMatrix) -> Result<Self> {
        if right.rows() != self.dim || right.cols() != self.dim {
            return input_err("guess map has the wrong dimension");
        }
        let inner = self.measurement.clone();
        Self::new(
            format!("{}+mapped", self.name),
            self.prepare.clone(),
            self.dim,
            self.copies,
            Arc::new(RightMultiplied { inner, right }),
        )
    }

    /// `(U^{⊗N} ⊗ I_B)|prepare⟩`
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<PureState> {
        if u.rows() != self.dim || u.cols() != self.dim {
            return input_err(format!("expected a {0}x{0} unitary", self.dim));
        }
        self.prepare.apply_left(&kron_power(u, self.copies))
    }

    pub fn measure(&self, post: &PureState, rng: &mut RngStream) -> Result<ComplexMatrix> {
        let guess = self.measurement.measure(post, rng)?;
        if !is_unitary(&guess, GUESS_UNITARY_TOL) || guess.rows() != self.dim {
            return Err(Error::Consistency(format!(
                "strategy {} produced a non-unitary guess (defect {:.3e})",
                self.name,
                unitarity_defect(&guess)
            )));
        }
        Ok(guess)
    }

    /// One use of the black box followed by the measurement.
    pub fn run(&self, u: &ComplexMatrix, rng: &mut RngStream) -> Result<ComplexMatrix> {
        let post = self.evolve(u)?;
        self.measure(&post, rng)
    }
}

struct RightMultiplied {
    inner: Arc<dyn Measurement>,
    right: ComplexMatrix,
}

impl Measurement for RightMultiplied {
    fn measure(&self, post: &PureState, rng: &mut RngStream) -> Result<ComplexMatrix> {
        Ok(self.inner.measure(post, rng)?.dot(&self.right))
    }
}

/// Finite POVM `{G_r}` with one guess `U_r` per element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretePovm {
    pub elements: Vec<ComplexMatrix>,
    pub guesses: Vec<ComplexMatrix>,
}

impl DiscretePovm {
    /// Checks shapes only; see [`validate_povm`] for positivity and
    /// completeness.
    pub fn new(elements: Vec<ComplexMatrix>, guesses: Vec<ComplexMatrix>) -> Result<Self> {
        if elements.is_empty() || elements.len() != guesses.len() {
            return input_err(format!(
                "{} elements and {} guesses",
                elements.len(),
                guesses.len()
            ));
        }
        let n = elements[0].rows();
        if elements.iter().any(|g| g.rows() != n || g.cols() != n) {
            return input_err("POVM elements must be square and of equal size");
        }
        let d = guesses[0].rows();
        if guesses.iter().any(|g| g.rows() != d || g.cols() != d) {
            return input_err("guesses must be square and of equal size");
        }
        Ok(Self { elements, guesses })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Born probabilities `⟨ψ|G_r|ψ⟩`, unclipped.
    pub fn probabilities(&self, psi: &PureState) -> Result<Vec<f64>> {
        if psi.len() != self.elements[0].rows() {
            return input_err("state and POVM dimensions differ");
        }
        Ok(self
            .elements
            .iter()
            .map(|g| {
                let gpsi = g.apply(psi.amplitudes());
                psi.amplitudes().iter().zip(&gpsi).map(|(a, b)| a.conj() * b).sum::<C64>().re
            })
            .collect())
    }
}

impl Measurement for DiscretePovm {
    fn measure(&self, post: &PureState, rng: &mut RngStream) -> Result<ComplexMatrix> {
        measure_discrete(self, post, rng).map(|(_, g)| g)
    }
}

/// Samples an outcome `r` with probability `⟨ψ|G_r|ψ⟩`.
///
/// Probabilities down to `−1e-9` are clipped to zero.  The total must be
/// within `1e-9` of one and is renormalized.
pub fn measure_discrete(povm: &DiscretePovm, psi: &PureState, rng: &mut RngStream) -> Result<(usize, ComplexMatrix)> {
    let mut probs = povm.probabilities(psi)?;
    for p in probs.iter_mut() {
        if *p < -1e-9 {
            return Err(Error::Consistency(format!("negative outcome probability {p}")));
        }
        *p = p.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Consistency(format!("outcome probabilities sum to {total}")));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut pick = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (r, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            pick = r;
            break;
        }
    }
    Ok((pick, povm.guesses[pick].clone()))
}

/// Outcome of [`validate_povm`].
#[derive(Clone, Debug, Serialize)]
pub struct PovmValidation {
    pub elements: usize,
    /// Smallest eigenvalue over the Hermitian parts of all elements.
    pub min_eigenvalue: f64,
    /// Largest `‖G − G†‖_F` over elements.
    pub hermiticity_defect: f64,
    /// `‖Σ G_r − I‖_F`
    pub completeness_defect: f64,
    /// Largest `‖U†U − I‖_F` over guesses.
    pub guess_unitarity_defect: f64,
    pub positive: bool,
    pub complete: bool,
    pub guesses_unitary: bool,
    pub passed: bool,
}

pub fn validate_povm(povm: &DiscretePovm) -> PovmValidation {
    let n = povm.elements.first().map_or(0, ComplexMatrix::rows);
    let mut min_eigenvalue = f64::INFINITY;
    let mut hermiticity_defect: f64 = 0.0;
    let mut sum = ComplexMatrix::zeros(n, n);
    for g in &povm.elements {
        hermiticity_defect = hermiticity_defect.max(g.hermiticity_defect());
        let min = herm_eig(&g.hermitian_part())
            .map(|e| *e.values.last().expect("nonempty"))
            .unwrap_or(f64::NEG_INFINITY);
        min_eigenvalue = min_eigenvalue.min(min);
        sum = &sum + g;
    }
    let completeness_defect = (&sum - &ComplexMatrix::identity(n)).frobenius_norm();
    let guess_unitarity_defect = povm
        .guesses
        .iter()
        .map(|g| if g.is_square() { unitarity_defect(g) } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let positive = min_eigenvalue >= -PSD_TOL && hermiticity_defect <= PSD_TOL;
    let complete = completeness_defect <= COMPLETENESS_TOL;
    let guesses_unitary = guess_unitarity_defect <= GUESS_UNITARY_TOL;
    PovmValidation {
        elements: povm.elements.len(),
        min_eigenvalue,
        hermiticity_defect,
        completeness_defect,
        guess_unitarity_defect,
        positive,
        complete,
        guesses_unitary,
        passed: positive && complete && guesses_unitary && !povm.elements.is_empty(),
    }
}

/// The four Bell vectors in the order `Φ⁺, Ψ⁺, Ψ⁻, Φ⁻` with
/// `Φ± = (|00⟩ ± |11⟩)/√2` and `Ψ± = (|01⟩ ± |10⟩)/√2`.
pub fn bell_vectors() -> [[C64; 4]; 4] {
    let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let z = C64::new(0.0, 0.0);
    [[s, z, z, s], [z, s, s, z], [z, s, -s, z], [s, z, z, -s]]
}

/// The `g ∈ SU(d)` with `(g ⊗ I)|Φ⟩ ∝ |v⟩`, for a maximally entangled `|v⟩`.
///
/// The coefficient matrix of `(g⊗I)|Φ⟩` is `g/√d`, so `g` is read off `v`.
pub fn guess_for_entangled_vector(v: &[C64], d: usize) -> Result<ComplexMatrix> {
    if v.len() != d * d {
        return input_err("vector does not live on C^d ⊗ C^d");
    }
    let g = ComplexMatrix::new(d, d, v.to_vec())?.scale(C64::from((d as f64).sqrt()));
    crate::haar::project_su(&g)
}

/// Projective measurement on the Bell basis.
pub fn bell_povm() -> DiscretePovm {
    let vectors = bell_vectors();
    let elements = vectors.iter().map(|v| ComplexMatrix::outer(v, v)).collect();
    let guesses = vectors
        .iter()
        .map(|v| guess_for_entangled_vector(v, 2).expect("Bell vectors are maximally entangled"))
        .collect();
    DiscretePovm::new(elements, guesses).expect("well-formed")
}

/// `|Φ⟩` probe with a Bell-basis measurement (`d = 2`, one use).
pub fn bell_strategy() -> Strategy {
    Strategy::new("bell", max_entangled(2), 2, 1, Arc::new(bell_povm())).expect("valid")
}

struct Blind {
    dim: usize,
}

impl Measurement for Blind {
    fn measure(&self, _post: &PureState, _rng: &mut RngStream) -> Result<ComplexMatrix> {
        Ok(ComplexMatrix::identity(self.dim))
    }
}

/// Ignores the device and always guesses `I`.
pub fn blind_strategy(d: usize) -> Result<Strategy> {
    if d < 2 {
        return input_err("dimension must be at least 2");
    }
    Strategy::new("blind", max_entangled(d), d, 1, Arc::new(Blind { dim: d }))
}

/// Continuous covariant measurement generated by a fiducial state.
#[derive(Clone, Debug)]
pub struct CovariantSampler {
    fiducial: PureState,
    scale: f64,
    dim: usize,
    copies: usize,
    max_attempts: usize,
}

impl CovariantSampler {
    /// The scale `c` is fixed by requiring the Haar average of the family to
    /// have the same trace as `support`: `c = tr P / ⟨χ|P|χ⟩`.
    pub fn new(fiducial: PureState, dim: usize, copies: usize, support: &ComplexMatrix) -> Result<Self> {
        if dim < 2 || copies < 1 {
            return input_err("need dim ≥ 2 and at least one copy");
        }
        let da = dim.pow(copies as u32);
        if !fiducial.len().is_multiple_of(da) {
            return input_err("fiducial does not fit the A space");
        }
        if support.rows() != fiducial.len() || !support.is_square() {
            return input_err("support projector has the wrong dimension");
        }
        let weight: f64 = {
            let p_chi = support.apply(fiducial.amplitudes());
            fiducial.amplitudes().iter().zip(&p_chi).map(|(a, b)| a.conj() * b).sum::<C64>().re
        };
        if weight <= 1e-12 {
            return input_err("fiducial has no weight on the support");
        }
        let rank = support.trace().re.round();
        Ok(Self {
            fiducial,
            scale: rank / weight,
            dim,
            copies,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        })
    }

    pub fn with_max_attempts(mut self, max_attempts: usize) -> Self {
        self.max_attempts = max_attempts.max(1);
        self
    }

    pub fn fiducial(&self) -> &PureState {
        &self.fiducial
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    fn a_dim(&self) -> usize {
        self.dim.pow(self.copies as u32)
    }

    /// `|⟨χ|(W†^{⊗N} ⊗ I)|ψ⟩|²`, the acceptance probability of proposal `W`.
    pub fn acceptance(&self, post: &PureState, w: &ComplexMatrix) -> Result<f64> {
        let k = self.overlap_kernel(post)?;
        Ok(Self::overlap(&k, &kron_power(&w.adjoint(), self.copies)).norm_sqr())
    }

    /// `K = M_ψ M_χ†` so that `⟨χ|(X⊗I)|ψ⟩ = Σ_ij X_ij K_ji`.
    fn overlap_kernel(&self, post: &PureState) -> Result<ComplexMatrix> {
        if post.len() != self.fiducial.len() {
            return input_err("post-evolution state does not match the fiducial");
        }
        let da = self.a_dim();
        let m_psi = post.coefficient_matrix(da)?;
        let m_chi = self.fiducial.coefficient_matrix(da)?;
        Ok(m_psi.dot(&m_chi.adjoint()))
    }

    fn overlap(kernel: &ComplexMatrix, x: &ComplexMatrix) -> C64 {
        let n = x.rows();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += x.get(i, j) * kernel.get(j, i);
            }
        }
        acc
    }

    /// `c·(W^{⊗N}⊗I)|χ⟩⟨χ|(W^{⊗N}⊗I)†`
    pub fn element(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let db = self.fiducial.len() / self.a_dim();
        let op = kron(&kron_power(w, self.copies), &ComplexMatrix::identity(db));
        let v = op.apply(self.fiducial.amplitudes());
        ComplexMatrix::outer(&v, &v).scale(C64::from(self.scale))
    }
}

impl Measurement for CovariantSampler {
    fn measure(&self, post: &PureState, rng: &mut RngStream) -> Result<ComplexMatrix> {
        let kernel = self.overlap_kernel(post)?;
        for _ in 0..self.max_attempts {
            let w = haar_su(self.dim, rng);
            let x = kron_power(&w.adjoint(), self.copies);
            let accept = Self::overlap(&kernel, &x).norm_sqr();
            if rng.random::<f64>() < accept {
                return Ok(w);
            }
        }
        Err(Error::Sampling(format!(
            "no proposal accepted in {} attempts",
            self.max_attempts
        )))
    }
}

/// One use, `|Φ⟩` probe, covariant measurement with fiducial `|Φ⟩` (`c = d²`).
pub fn covariant_n1(d: usize) -> Result<Strategy> {
    Ok(covariant_n1_with_sampler(covariant_n1_sampler(d)?))
}

pub fn covariant_n1_sampler(d: usize) -> Result<CovariantSampler> {
    if d < 2 {
        return input_err("dimension must be at least 2");
    }
    CovariantSampler::new(max_entangled(d), d, 1, &ComplexMatrix::identity(d * d))
}

pub fn covariant_n1_with_sampler(sampler: CovariantSampler) -> Strategy {
    let d = sampler.dim();
    Strategy::new("covariant", max_entangled(d), d, 1, Arc::new(sampler)).expect("valid")
}

/// Two-copy covariant sampler on qubits with fiducial `phi2(a_meas)`.
pub fn covariant_n2_sampler(a_meas: f64) -> Result<CovariantSampler> {
    let support = su2_n2_irreps().reachable_support(4)?;
    CovariantSampler::new(phi2(a_meas)?, 2, 2, &support)
}

/// Two parallel uses of a qubit unitary: probe `phi2(a)` with the optimal
/// `a² = (5+√5)/10` (replace with [`Strategy::with_prepare`]) and covariant
/// measurement with fiducial `phi2(a_meas)`.
pub fn covariant_n2(a_meas: f64) -> Result<Strategy> {
    let sampler = covariant_n2_sampler(a_meas)?;
    Strategy::new("covariant-n2", phi2(optimal_n2_prep_weight())?, 2, 2, Arc::new(sampler))
}

/// Result of [`covariant_completeness`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Completeness {
    /// `‖P·M·P − P‖_F`
    pub deviation: f64,
    /// Frobenius norm of the per-entry standard errors of `M`; the deviation
    /// of an exactly complete family is of this order.
    pub noise: f64,
}

/// `‖P·M·P − P‖_F` where `M` is the Monte Carlo Haar average of the sampler's
/// scaled family.  Zero (up to noise) iff the family resolves the identity on
/// the support `P`.
pub fn covariant_completeness(sampler: &CovariantSampler, support: &ComplexMatrix, n: usize, seed: u64) -> Result<Completeness> {
    if support.rows() != sampler.fiducial.len() || !support.is_square() {
        return input_err("support projector has the wrong dimension");
    }
    if support.dot(support).max_abs_diff(support) > 1e-10 {
        return input_err("support is not a projector");
    }
    let mean = haar_mean_operator(|w| sampler.element(w), sampler.dim, n, seed)?;
    let restricted = support.dot(&mean.mean).dot(support);
    Ok(Completeness {
        deviation: (&restricted - support).frobenius_norm(),
        noise: mean.stderr.iter().map(|s| s * s).sum::<f64>().sqrt(),
    })
}
