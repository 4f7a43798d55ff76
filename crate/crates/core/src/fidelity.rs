//! The trace fidelity, its Monte Carlo average over Haar-random unitaries,
//! and the analytic reference values it is checked against.
//!
//! For one use of the black box the average fidelity of a measurement
//! `{G_r, U_r}` on the evolved `|Φ⟩` is `(1/d²) Σ_r tr(U_r† G_r U_r f₁)` with
//!
//! ```text
//! f₁ = ∫ dV (V⊗I)|Φ⟩⟨Φ|(V⊗I)† |tr V|²
//!    = ((d²−2)/d² · I + |Φ⟩⟨Φ|) / (d²−1).
//! ```
//!
//! The largest eigenvalue `2/d²` of `f₁` bounds every strategy; restricting
//! to product vectors gives the separable bound `(d+2)/((d+1)d²)`.

use serde::Serialize;

use crate::haar::{haar_mean_operator, haar_su, HaarMean, RngStream};
use crate::numerics::{herm_eig, kron, ComplexMatrix, C64};
use crate::probes::{max_entangled, phi2};
use crate::strategies::Strategy;
use crate::{input_err, Error, Result};

/// `|tr(U U_r†)|² / d²`; insensitive to global phases of either argument.
pub fn fidelity(u: &ComplexMatrix, guess: &ComplexMatrix) -> Result<f64> {
    if !u.is_square() || u.rows() != guess.rows() || u.cols() != guess.cols() {
        return input_err("fidelity needs two square matrices of equal size");
    }
    let d = u.rows();
    // tr(U W†) = Σ_ij U_ij conj(W_ij)
    let tr: C64 = u
        .as_slice()
        .iter()
        .zip(guess.as_slice())
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(tr.norm_sqr() / (d * d) as f64)
}

/// Monte Carlo estimate of an average fidelity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub strategy: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub copies: usize,
}

impl Estimate {
    /// Values are summed in order, so the result does not depend on how they
    /// were computed.
    pub fn from_samples(values: &[f64], seed: u64, strategy: impl Into<String>, d: usize, copies: usize) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
            seed,
            strategy: strategy.into(),
            d,
            copies,
        }
    }

    /// `|mean − reference| / stderr`
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.stderr
    }

    /// Monte Carlo acceptance: within `max(abs_tol, 5·stderr)`.
    pub fn agrees_with(&self, reference: f64, abs_tol: f64) -> bool {
        (self.mean - reference).abs() <= self.tolerance(abs_tol)
    }

    pub fn tolerance(&self, abs_tol: f64) -> f64 {
        abs_tol.max(5.0 * self.stderr)
    }
}

/// Closed-form fidelities for dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub d: usize,
    /// `2/d²`
    pub optimal_n1: f64,
    /// `1/d²`
    pub blind: f64,
    /// `(d+2)/((d+1)d²)`
    pub separable_n1: f64,
    /// `(3+√5)/8`, only for `d = 2`.
    pub optimal_n2_d2: Option<f64>,
}

impl ReferenceValues {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            optimal_n1: optimal_n1(d),
            blind: blind_fidelity(d),
            separable_n1: separable_bound(d),
            optimal_n2_d2: (d == 2).then(optimal_n2_d2),
        }
    }
}

pub fn optimal_n1(d: usize) -> f64 {
    2.0 / (d * d) as f64
}

pub fn blind_fidelity(d: usize) -> f64 {
    1.0 / (d * d) as f64
}

pub fn separable_bound(d: usize) -> f64 {
    let d = d as f64;
    (d + 2.0) / ((d + 1.0) * d * d)
}

pub fn optimal_n2_d2() -> f64 {
    (3.0 + 5f64.sqrt()) / 8.0
}

/// Two-copy covariant fidelity for probe weight `a` and measurement weight
/// `a_meas`, both on the spin-1 block.  With `α = a·a_meas/3` and
/// `β = √(1−a²)·√(1−a_meas²)` the second and fourth Haar moments of `tr V`
/// give `(2α² + 2αβ + β²) / (4(α² + β²))`.
pub fn n2_fidelity_closed(a: f64, a_meas: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&a_meas) {
        return input_err("weights must lie in [0, 1]");
    }
    let alpha = a * a_meas / 3.0;
    let beta = (1.0 - a * a).sqrt() * (1.0 - a_meas * a_meas).sqrt();
    let norm = alpha * alpha + beta * beta;
    if norm < 1e-300 {
        return input_err("probe and measurement have no common support");
    }
    Ok((2.0 * alpha * alpha + 2.0 * alpha * beta + beta * beta) / (4.0 * norm))
}

/// Gain of an entangled probe over a product probe, `2(d+1)/(d+2)`.
pub fn entanglement_gain(d: usize) -> f64 {
    optimal_n1(d) / separable_bound(d)
}

/// Averages `fidelity(U, guess)` over `n` trials.  Trial `i` draws
/// `U ∈ SU(d)` and runs the strategy on `RngStream::new(seed, i)`, so the
/// result is the same however the trials are scheduled.
pub fn estimate_avg_fidelity(strategy: &Strategy, n: usize, seed: u64) -> Result<Estimate> {
    if n < 100 {
        return input_err("at least 100 trials are required");
    }
    let trial = |i: usize| -> Result<f64> {
        let mut rng = RngStream::new(seed, i as u64);
        let u = haar_su(strategy.dim(), &mut rng);
        let guess = strategy.run(&u, &mut rng)?;
        fidelity(&u, &guess)
    };
    let values = collect_trials(n, trial)?;
    Ok(Estimate::from_samples(
        &values,
        seed,
        strategy.name(),
        strategy.dim(),
        strategy.copies(),
    ))
}

#[cfg(feature = "parallel")]
pub(crate) fn collect_trials<T, F>(n: usize, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(trial).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn collect_trials<T, F>(n: usize, trial: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..n).map(trial).collect()
}

/// `((d²−2)/d² · I + |Φ⟩⟨Φ|) / (d²−1)` on `C^d ⊗ C^d`.
pub fn f1_closed(d: usize) -> ComplexMatrix {
    assert!(d >= 2, "dimension must be at least 2");
    let d2 = (d * d) as f64;
    let id = ComplexMatrix::identity(d * d).scale(C64::from((d2 - 2.0) / d2));
    (&id + &max_entangled(d).density()).scale(C64::from(1.0 / (d2 - 1.0)))
}

/// Monte Carlo estimate of `∫ dV (V⊗I)|Φ⟩⟨Φ|(V⊗I)† |tr V|²` over SU(d),
/// symmetrized to be exactly Hermitian.
pub fn f1_monte_carlo(d: usize, n: usize, seed: u64) -> Result<HaarMean> {
    if d < 2 {
        return input_err("dimension must be at least 2");
    }
    if n < 1000 {
        return input_err("at least 1000 samples are required");
    }
    f1_sampled(d, n, seed)
}

/// [`f1_monte_carlo`] without the sample-size floor, for exploratory runs.
pub fn f1_sampled(d: usize, n: usize, seed: u64) -> Result<HaarMean> {
    if d < 2 {
        return input_err("dimension must be at least 2");
    }
    let phi = max_entangled(d);
    let id = ComplexMatrix::identity(d);
    let mut res = haar_mean_operator(
        |v| {
            let out = kron(v, &id).apply(phi.amplitudes());
            ComplexMatrix::outer(&out, &out).scale(C64::from(v.trace().norm_sqr()))
        },
        d,
        n,
        seed,
    )?;
    res.mean = res.mean.hermitian_part();
    Ok(res)
}

/// Best product-probe value `max ⟨ψχ|f₁|ψχ⟩`.
#[derive(Clone, Debug)]
pub struct ProductMax {
    pub value: f64,
    pub psi: Vec<C64>,
    pub chi: Vec<C64>,
}

pub const PRODUCT_MAX_STARTS: usize = 20;
pub const PRODUCT_MAX_TOL: f64 = 1e-10;
pub const PRODUCT_MAX_ITERS: usize = 1000;

/// Maximizes `⟨ψ⊗χ|f₁|ψ⊗χ⟩` over unit product vectors by alternating
/// eigen-solves (fix `χ`, take the top eigenvector in `ψ`, then swap),
/// restarted from [`PRODUCT_MAX_STARTS`] random `χ`.
///
/// Since the average fidelity of a one-use strategy is bounded by the top
/// eigenvalue of `f₁`, the result is directly the best average fidelity
/// reachable without entanglement between probe and ancilla.
pub fn product_max(f1: &ComplexMatrix, d: usize) -> Result<ProductMax> {
    if f1.rows() != d * d || !f1.is_square() {
        return input_err(format!("expected a {0}x{0} operator", d * d));
    }
    if !f1.is_hermitian(crate::numerics::HERMITIAN_TOL) {
        return input_err("operator is not Hermitian");
    }
    // ⟨ψ⊗χ|f₁|ψ⊗χ⟩ reduced to one side
    let reduce_a = |chi: &[C64]| {
        ComplexMatrix::from_fn(d, d, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for (b, cb) in chi.iter().enumerate() {
                for (b2, cb2) in chi.iter().enumerate() {
                    acc += cb.conj() * f1.get(i * d + b, j * d + b2) * cb2;
                }
            }
            acc
        })
        .hermitian_part()
    };
    let reduce_b = |psi: &[C64]| {
        ComplexMatrix::from_fn(d, d, |k, l| {
            let mut acc = C64::new(0.0, 0.0);
            for (a, pa) in psi.iter().enumerate() {
                for (a2, pa2) in psi.iter().enumerate() {
                    acc += pa.conj() * f1.get(a * d + k, a2 * d + l) * pa2;
                }
            }
            acc
        })
        .hermitian_part()
    };

    let mut best: Option<ProductMax> = None;
    for start in 0..PRODUCT_MAX_STARTS {
        let mut chi = haar_su(d, &mut RngStream::new(start as u64, 0)).col(0);
        let mut psi;
        let mut value = f64::NEG_INFINITY;
        let mut converged = false;
        for _ in 0..PRODUCT_MAX_ITERS {
            let ea = herm_eig(&reduce_a(&chi))?;
            psi = ea.vector(0);
            let eb = herm_eig(&reduce_b(&psi))?;
            chi = eb.vector(0);
            let next = eb.values[0];
            if (next - value).abs() < PRODUCT_MAX_TOL {
                value = next;
                converged = true;
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(ProductMax {
                        value,
                        psi: psi.clone(),
                        chi: chi.clone(),
                    });
                }
                break;
            }
            value = next;
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "alternating maximization did not converge from start {start}"
            )));
        }
    }
    Ok(best.expect("at least one start"))
}

/// Largest eigenvalue: the best average fidelity over all probes.
pub fn unrestricted_max(f1: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(f1)?.values[0])
}

/// Average fidelity of the two-copy covariant strategy for each probe
/// weight `a` in `grid`, all with measurement weight `a_meas`.
pub fn scan_n2(grid: &[f64], a_meas: f64, n: usize, seed: u64) -> Result<Vec<(f64, Estimate)>> {
    if let Some(a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return input_err(format!("grid value {a} outside [0, 1]"));
    }
    let base = crate::strategies::covariant_n2(a_meas)?;
    grid.iter()
        .map(|&a| {
            let strategy = base.with_prepare(phi2(a)?)?;
            Ok((a, estimate_avg_fidelity(&strategy, n, seed)?))
        })
        .collect()
}

/// Grid point with the largest estimated mean.
pub fn scan_argmax(scan: &[(f64, Estimate)]) -> Option<&(f64, Estimate)> {
    scan.iter().max_by(|x, y| x.1.mean.total_cmp(&y.1.mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{haar_unitary, su2_from_axis_angle, AxisAngle};
    use crate::numerics::sigma_z;
    use crate::strategies::{blind_strategy, covariant_n1};

    #[test]
    fn fidelity_examples() {
        let mut rng = RngStream::new(1, 0);
        let u = haar_unitary(3, &mut rng);
        assert!((fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        let iz = sigma_z().scale(C64::i());
        assert!(fidelity(&ComplexMatrix::identity(2), &iz).unwrap().abs() < 1e-15);
        for k in 0..20 {
            let w = k as f64 * std::f64::consts::PI / 19.0;
            let r = su2_from_axis_angle(&AxisAngle::new([0., 0., 1.], w).unwrap());
            // tr = 2 cos w
            let f = fidelity(&ComplexMatrix::identity(2), &r).unwrap();
            assert!((f - w.cos().powi(2)).abs() < 1e-14);
        }
        assert!(fidelity(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn fidelity_symmetries() {
        let mut rng = RngStream::new(2, 0);
        for d in 2..=4 {
            for _ in 0..50 {
                let u = haar_unitary(d, &mut rng);
                let w = haar_unitary(d, &mut rng);
                let x = haar_unitary(d, &mut rng);
                let f = fidelity(&u, &w).unwrap();
                assert!((f - fidelity(&w, &u).unwrap()).abs() < 1e-12);
                assert!((f - fidelity(&x.dot(&u), &x.dot(&w)).unwrap()).abs() < 1e-12);
                assert!((f - fidelity(&u.dot(&x), &w.dot(&x)).unwrap()).abs() < 1e-12);
                let phase = C64::from_polar(1.0, 0.7);
                assert!((f - fidelity(&u.scale(phase), &w).unwrap()).abs() < 1e-12);
                assert!((0.0..=1.0 + 1e-12).contains(&f));
            }
        }
    }

    #[test]
    fn reference_values_are_ordered() {
        for d in 2..=8 {
            let r = ReferenceValues::new(d);
            assert!(r.blind < r.separable_n1 && r.separable_n1 < r.optimal_n1);
            assert_eq!(r.optimal_n2_d2.is_some(), d == 2);
        }
        assert!((separable_bound(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((separable_bound(3) - 5.0 / 36.0).abs() < 1e-15);
        assert!((entanglement_gain(2) - 1.5).abs() < 1e-15);
        assert!((entanglement_gain(3) - 1.6).abs() < 1e-15);
    }

    #[test]
    fn f1_closed_structure() {
        for d in 2..=6 {
            let f1 = f1_closed(d);
            assert!(f1.is_hermitian(1e-15));
            assert!((f1.trace().re - 1.0).abs() < 1e-12);
            let eig = herm_eig(&f1).unwrap();
            assert!((eig.values[0] - 2.0 / (d * d) as f64).abs() < 1e-12);
            assert!(*eig.values.last().unwrap() > 0.0);
            let phi = max_entangled(d);
            let f1phi = f1.apply(phi.amplitudes());
            let err = f1phi
                .iter()
                .zip(phi.amplitudes())
                .map(|(a, b)| (a - b * (2.0 / (d * d) as f64)).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
        let eig = herm_eig(&f1_closed(2)).unwrap();
        for v in &eig.values[1..] {
            assert!((v - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn f1_monte_carlo_matches_closed_form_d2() {
        let mc = f1_monte_carlo(2, 100_000, 3).unwrap();
        let exact = f1_closed(2);
        for i in 0..4 {
            for j in 0..4 {
                let dev = (mc.mean.get(i, j) - exact.get(i, j)).norm();
                assert!(dev <= 5.0 * mc.stderr_at(i, j) && dev <= 0.02, "({i},{j}): {dev}");
            }
        }
        assert!((mc.mean.trace().re - 1.0).abs() < 5.0 * mc.max_stderr * 4.0);
        assert!(f1_monte_carlo(2, 10, 0).is_err());
    }

    #[test]
    fn product_max_reproduces_separable_bound() {
        for d in 2..=3 {
            let pm = product_max(&f1_closed(d), d).unwrap();
            assert!((pm.value - separable_bound(d)).abs() < 1e-6, "d={d}: {}", pm.value);
            assert!((unrestricted_max(&f1_closed(d)).unwrap() - optimal_n1(d)).abs() < 1e-12);
        }
        assert!(product_max(&f1_closed(2), 3).is_err());
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_samples(&[0.0, 1.0, 0.0, 1.0], 7, "x", 2, 1);
        assert_eq!(e.mean, 0.5);
        // sample sd = sqrt(1/3)
        assert!((e.stderr - (1.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        let json = serde_json::to_value(&e).unwrap();
        for key in ["mean", "stderr", "samples", "seed", "strategy", "d", "N"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn small_runs_are_reproducible_and_sensible() {
        let s = covariant_n1(2).unwrap();
        let a = estimate_avg_fidelity(&s, 2000, 5).unwrap();
        let b = estimate_avg_fidelity(&s, 2000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.agrees_with(0.5, 0.01));
        let blind = estimate_avg_fidelity(&blind_strategy(2).unwrap(), 2000, 5).unwrap();
        assert!(blind.agrees_with(0.25, 0.01));
        assert!(estimate_avg_fidelity(&s, 99, 5).is_err());
    }

    #[test]
    fn n2_closed_form() {
        let am = 0.9f64.sqrt();
        let best = n2_fidelity_closed(((5.0 + 5f64.sqrt()) / 10.0).sqrt(), am).unwrap();
        assert!((best - optimal_n2_d2()).abs() < 1e-14);
        assert!((n2_fidelity_closed(1.0, am).unwrap() - 0.5).abs() < 1e-14);
        assert!((n2_fidelity_closed(0.0, am).unwrap() - 0.25).abs() < 1e-14);
        assert!(n2_fidelity_closed(0.0, 1.0).is_err());
        // off the optimal measurement weight the closed form still tracks Monte Carlo
        let am = 0.5f64.sqrt();
        for a in [0.3, 0.8] {
            let strategy = crate::strategies::covariant_n2(am).unwrap().with_prepare(phi2(a).unwrap()).unwrap();
            let est = estimate_avg_fidelity(&strategy, 20_000, 11).unwrap();
            let exact = n2_fidelity_closed(a, am).unwrap();
            assert!(est.agrees_with(exact, 0.0), "a={a}: {} vs {exact}", est.mean);
        }
    }

    #[test]
    fn scan_rejects_out_of_range_grid() {
        assert!(scan_n2(&[0.5, 1.5], 0.9f64.sqrt(), 100, 0).is_err());
    }
}
