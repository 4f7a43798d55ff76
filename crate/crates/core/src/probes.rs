//! Probe states.
//!
//! A single use of the black box is best probed with the maximally entangled
//! state `|Φ⟩ = Σᵢ|ii⟩/√d`.  For `N` parallel uses, `U^{⊗N}` splits the
//! `A` space into irreducible blocks `α` (with multiplicity `n_α` and
//! dimension `d_α`), and the probe is a weighted sum of maximally entangled
//! states, one per block, each paired with its own orthogonal slice of the
//! ancilla `B`.  The decomposition is supplied as data ([`IrrepDecomposition`]);
//! only the two-qubit triplet/singlet split ships built in.

use serde::{Deserialize, Serialize};

use crate::haar::{haar_su, RngStream};
use crate::numerics::{canonical_phase, kron, kron_power, svd, ComplexMatrix, PureState, C64};
use crate::{input_err, Error, Result};

/// Tolerance for orthonormality of supplied irrep bases.
pub const BASIS_TOL: f64 = 1e-10;
/// Tolerance for `‖[U^{⊗N}, P_αβ]‖_F` when checking block invariance.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Number of random unitaries used to check block invariance.
pub const INVARIANCE_TRIALS: usize = 20;

const INVARIANCE_SEED: u64 = 0x1bb5_2d0c;

/// `(1/√d) Σᵢ |i⟩_A|i⟩_B`
pub fn max_entangled(d: usize) -> PureState {
    assert!(d >= 1, "dimension must be positive");
    let amp = C64::from(1.0 / (d as f64).sqrt());
    let mut amps = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        amps[i * d + i] = amp;
    }
    PureState::normalized(amps, vec![d, d]).expect("nonzero")
}

/// Schmidt decomposition `|ψ⟩ = Σᵢ λᵢ |μᵢ⟩|νᵢ⟩`.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    /// Nonzero coefficients, descending.
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<Vec<C64>>,
    pub basis_b: Vec<Vec<C64>>,
}

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> Vec<C64> {
        let da = self.basis_a.first().map_or(0, Vec::len);
        let db = self.basis_b.first().map_or(0, Vec::len);
        let mut out = vec![C64::new(0.0, 0.0); da * db];
        for ((l, mu), nu) in self.coefficients.iter().zip(&self.basis_a).zip(&self.basis_b) {
            for (i, a) in mu.iter().enumerate() {
                for (j, b) in nu.iter().enumerate() {
                    out[i * db + j] += a * b * *l;
                }
            }
        }
        out
    }
}

/// Schmidt form of a bipartite state, via the SVD of its `dA×dB` coefficient
/// matrix.  Coefficients below `1e-12` are dropped.  Each `|μᵢ⟩` has its first
/// non-negligible component real and nonnegative; equal coefficients are
/// ordered by the position of that component.
pub fn schmidt(psi: &PureState) -> Result<SchmidtForm> {
    let [da, _db] = psi.dims() else {
        return input_err(format!("schmidt needs a bipartite state, got dims {:?}", psi.dims()));
    };
    let m = psi.coefficient_matrix(*da)?;
    let (u, s, v) = svd(&m);
    let mut terms: Vec<(f64, Vec<C64>, Vec<C64>)> = Vec::new();
    for (i, &lambda) in s.iter().enumerate() {
        if lambda <= 1e-12 {
            continue;
        }
        let mut mu = u.col(i);
        let before = mu.iter().find(|z| z.norm() > 1e-12).copied().unwrap_or(C64::new(1.0, 0.0));
        canonical_phase(&mut mu);
        let after = mu.iter().find(|z| z.norm() > 1e-12).copied().unwrap_or(C64::new(1.0, 0.0));
        // μ was multiplied by after/before; ν absorbs the inverse
        let fix = before / after;
        let nu: Vec<C64> = v.col(i).iter().map(|z| z.conj() * fix).collect();
        terms.push((lambda, mu, nu));
    }
    let lead = |v: &[C64]| v.iter().position(|z| z.norm() > 1e-12).unwrap_or(usize::MAX);
    terms.sort_by(|x, y| {
        if (x.0 - y.0).abs() <= 1e-12 {
            lead(&x.1).cmp(&lead(&y.1))
        } else {
            y.0.total_cmp(&x.0)
        }
    });
    Ok(SchmidtForm {
        coefficients: terms.iter().map(|t| t.0).collect(),
        basis_a: terms.iter().map(|t| t.1.clone()).collect(),
        basis_b: terms.into_iter().map(|t| t.2).collect(),
    })
}

/// Both sides of `(I ⊗ Y)|Φ⟩ = (Yᵀ ⊗ I)|Φ⟩`.
#[derive(Clone, Debug)]
pub struct TransportCheck {
    pub b_side: PureState,
    pub a_side: PureState,
    /// Largest entrywise deviation between the two sides.
    pub deviation: f64,
}

/// Evaluates the transport identity that moves a local operation from the
/// ancilla onto the probe for the maximally entangled state.
pub fn transport_identity(y: &ComplexMatrix) -> Result<TransportCheck> {
    if !y.is_square() || y.rows() < 1 {
        return input_err("transport identity needs a square operator");
    }
    let phi = max_entangled(y.rows());
    let b_side = phi.apply_right(y)?;
    let a_side = phi.apply_left(&y.transpose())?;
    let deviation = b_side
        .amplitudes()
        .iter()
        .zip(a_side.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(TransportCheck {
        b_side,
        a_side,
        deviation,
    })
}

/// One inequivalent irrep `α` of `U^{⊗N}` with all of its copies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrepBlock {
    pub label: String,
    pub multiplicity: usize,
    pub dim: usize,
    /// `|αβk⟩`, ordered with `β` major and `k` minor.
    pub basis: Vec<Vec<C64>>,
}

impl IrrepBlock {
    pub fn vector(&self, copy: usize, k: usize) -> &[C64] {
        &self.basis[copy * self.dim + k]
    }

    /// `P_αβ` for copy `β`.
    pub fn copy_projector(&self, copy: usize) -> ComplexMatrix {
        let n = self.basis[0].len();
        (0..self.dim).fold(ComplexMatrix::zeros(n, n), |acc, k| {
            let v = self.vector(copy, k);
            &acc + &ComplexMatrix::outer(v, v)
        })
    }

    /// `P_α = Σ_β P_αβ`.
    pub fn projector(&self) -> ComplexMatrix {
        let n = self.basis[0].len();
        self.basis
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, v| &acc + &ComplexMatrix::outer(v, v))
    }
}

/// Decomposition of `(C^d)^{⊗N}` into irreducible blocks of `U^{⊗N}`.
///
/// Validated on construction: bases must be orthonormal and complete, and
/// every copy `P_αβ` must commute with `U^{⊗N}` for a fixed set of random
/// unitaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDecomposition", into = "RawDecomposition")]
pub struct IrrepDecomposition {
    d: usize,
    copies: usize,
    blocks: Vec<IrrepBlock>,
}

#[derive(Serialize, Deserialize)]
struct RawDecomposition {
    d: usize,
    copies: usize,
    blocks: Vec<IrrepBlock>,
}

impl TryFrom<RawDecomposition> for IrrepDecomposition {
    type Error = Error;
    fn try_from(raw: RawDecomposition) -> Result<Self> {
        IrrepDecomposition::new(raw.d, raw.copies, raw.blocks)
    }
}

impl From<IrrepDecomposition> for RawDecomposition {
    fn from(dec: IrrepDecomposition) -> Self {
        RawDecomposition {
            d: dec.d,
            copies: dec.copies,
            blocks: dec.blocks,
        }
    }
}

impl IrrepDecomposition {
    pub fn new(d: usize, copies: usize, blocks: Vec<IrrepBlock>) -> Result<Self> {
        if d < 2 || copies < 1 {
            return input_err("need d ≥ 2 and at least one copy");
        }
        let total = d.pow(copies as u32);
        if blocks.is_empty() {
            return input_err("decomposition has no blocks");
        }
        for b in &blocks {
            if b.multiplicity == 0 || b.dim == 0 {
                return input_err(format!("block {} has zero multiplicity or dimension", b.label));
            }
            if b.basis.len() != b.multiplicity * b.dim {
                return input_err(format!(
                    "block {} declares {}x{} vectors but lists {}",
                    b.label,
                    b.multiplicity,
                    b.dim,
                    b.basis.len()
                ));
            }
            if b.basis.iter().any(|v| v.len() != total) {
                return input_err(format!("block {} has vectors not of length {total}", b.label));
            }
        }
        let sum: usize = blocks.iter().map(|b| b.multiplicity * b.dim).sum();
        if sum != total {
            return input_err(format!("block dimensions add to {sum}, expected {total}"));
        }
        let all: Vec<&Vec<C64>> = blocks.iter().flat_map(|b| &b.basis).collect();
        for (i, v) in all.iter().enumerate() {
            for (j, w) in all.iter().enumerate().skip(i) {
                let ip: C64 = v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (ip - C64::from(expected)).norm() > BASIS_TOL {
                    return input_err(format!("basis vectors {i} and {j} are not orthonormal"));
                }
            }
        }
        let dec = Self { d, copies, blocks };
        let worst = dec.invariance_defect(INVARIANCE_TRIALS, INVARIANCE_SEED);
        if worst > INVARIANCE_TOL {
            return input_err(format!(
                "block subspaces are not invariant under U^⊗{copies}: ‖[U, P]‖_F = {worst:.3e}"
            ));
        }
        Ok(dec)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn blocks(&self) -> &[IrrepBlock] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.d.pow(self.copies as u32)
    }

    /// `Σ_α n_α d_α` ancilla levels needed by [`phi_n`].
    pub fn ancilla_levels(&self) -> usize {
        self.blocks.iter().map(|b| b.multiplicity * b.dim).sum()
    }

    /// Largest `‖[U^{⊗N}, P_αβ]‖_F` over `trials` random `U ∈ SU(d)`.
    pub fn invariance_defect(&self, trials: usize, seed: u64) -> f64 {
        let projectors: Vec<ComplexMatrix> = self
            .blocks
            .iter()
            .flat_map(|b| (0..b.multiplicity).map(move |beta| b.copy_projector(beta)))
            .collect();
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let u = kron_power(&haar_su(self.d, &mut RngStream::new(seed, t as u64)), self.copies);
            for p in &projectors {
                let comm = &u.dot(p) - &p.dot(&u);
                worst = worst.max(comm.frobenius_norm());
            }
        }
        worst
    }

    /// Projector onto the part of `A ⊗ B` reachable from [`phi_n`] under
    /// `U^{⊗N} ⊗ I`: `Σ_α P_α ⊗ (projector onto α's ancilla levels)`.
    pub fn reachable_support(&self, ancilla_dim: usize) -> Result<ComplexMatrix> {
        if ancilla_dim < self.ancilla_levels() {
            return input_err("ancilla too small");
        }
        let n = self.total_dim() * ancilla_dim;
        let mut out = ComplexMatrix::zeros(n, n);
        let mut offset = 0;
        for b in &self.blocks {
            let levels = b.multiplicity * b.dim;
            let diag: Vec<f64> = (0..ancilla_dim)
                .map(|i| if (offset..offset + levels).contains(&i) { 1.0 } else { 0.0 })
                .collect();
            out = &out + &kron(&b.projector(), &ComplexMatrix::from_real_diag(&diag));
            offset += levels;
        }
        Ok(out)
    }
}

/// Triplet `{|00⟩, (|01⟩+|10⟩)/√2, |11⟩}` and singlet `(|01⟩−|10⟩)/√2` of two
/// qubits.
pub fn su2_n2_irreps() -> IrrepDecomposition {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: [f64; 4]| a.iter().map(|&x| C64::from(x)).collect::<Vec<_>>();
    let triplet = IrrepBlock {
        label: "triplet".into(),
        multiplicity: 1,
        dim: 3,
        basis: vec![v([1., 0., 0., 0.]), v([0., s, s, 0.]), v([0., 0., 0., 1.])],
    };
    let singlet = IrrepBlock {
        label: "singlet".into(),
        multiplicity: 1,
        dim: 1,
        basis: vec![v([0., s, -s, 0.])],
    };
    IrrepDecomposition::new(2, 2, vec![triplet, singlet]).expect("built-in decomposition is valid")
}

/// `Σ_α a_α (n_α d_α)^{-1/2} Σ_{β,k} |αβk⟩_A |e_{αβk}⟩_B`, with ancilla levels
/// handed out in block order and `(β, k)` lexicographic within a block.
pub fn phi_n(irreps: &IrrepDecomposition, weights: &[f64], ancilla_dim: usize) -> Result<PureState> {
    if weights.len() != irreps.blocks.len() {
        return input_err(format!(
            "{} weights for {} blocks",
            weights.len(),
            irreps.blocks.len()
        ));
    }
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return input_err("weights must be finite and nonnegative");
    }
    let norm: f64 = weights.iter().map(|w| w * w).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return input_err(format!("weights squared sum to {norm}, expected 1"));
    }
    if ancilla_dim < irreps.ancilla_levels() {
        return input_err(format!(
            "ancilla of dimension {ancilla_dim} cannot host {} levels",
            irreps.ancilla_levels()
        ));
    }
    let da = irreps.total_dim();
    let mut amps = vec![C64::new(0.0, 0.0); da * ancilla_dim];
    let mut level = 0;
    for (block, &w) in irreps.blocks.iter().zip(weights) {
        let amp = w / ((block.multiplicity * block.dim) as f64).sqrt();
        for v in &block.basis {
            for (i, z) in v.iter().enumerate() {
                amps[i * ancilla_dim + level] += z * amp;
            }
            level += 1;
        }
    }
    PureState::normalized(amps, vec![da, ancilla_dim])
}

/// Two-copy qubit probe `a·Σ_k|t_k⟩|k⟩/√3 + √(1−a²)·|s⟩|4⟩` on `4 ⊗ 4`.
pub fn phi2(a: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&a) {
        return input_err(format!("weight {a} outside [0, 1]"));
    }
    phi_n(&su2_n2_irreps(), &[a, (1.0 - a * a).max(0.0).sqrt()], 4)
}

/// Triplet weight `a` of the best two-copy probe: `a² = (5+√5)/10`.
pub fn optimal_n2_prep_weight() -> f64 {
    ((5.0 + 5f64.sqrt()) / 10.0).sqrt()
}

/// Triplet weight `a′` of the two-copy covariant measurement: `a′² = 9/10`.
pub fn optimal_n2_meas_weight() -> f64 {
    0.9f64.sqrt()
}
