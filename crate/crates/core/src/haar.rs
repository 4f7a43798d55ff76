//! Haar-random unitaries, Monte Carlo averages over the unitary group, and
//! the axis/angle parametrization of SU(2).
//!
//! The estimation problems in this crate are posed on SU(d), but the trace
//! fidelity is blind to global phases.  [`haar_su`] therefore samples U(d)
//! with [`haar_unitary`] and strips the phase with [`project_su`], which
//! yields the Haar measure on SU(d).

use num_complex::Complex64;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::numerics::{self, is_unitary, qr, ComplexMatrix, C64};
use crate::{input_err, Error, Result};

/// Reproducible random stream identified by `(seed, stream)`.
///
/// Distinct stream indices under one seed are independent ChaCha8 streams,
/// so Monte Carlo trial `i` can always use stream `i` regardless of how the
/// trials are scheduled.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Haar-distributed `d×d` unitary on U(d).
///
/// QR of a complex Ginibre matrix, with each column of `Q` multiplied by the
/// phase `r_jj/|r_jj|` of the matching diagonal entry of `R` so that the
/// factorization is unique.
pub fn haar_unitary<R: RngCore + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    loop {
        let ginibre = ComplexMatrix::from_fn(d, d, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re * scale, im * scale)
        });
        // rank deficiency has probability zero; redraw if it ever happens
        let Ok((q, r)) = qr(&ginibre) else { continue };
        return ComplexMatrix::from_fn(d, d, |i, j| {
            let rjj = r.get(j, j);
            q.get(i, j) * (rjj / rjj.norm())
        });
    }
}

/// Haar-distributed element of SU(d).
pub fn haar_su<R: RngCore + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let u = haar_unitary(d, rng);
    remove_det_phase(&u, u.determinant().expect("square"))
}

/// `U / det(U)^{1/d}` with the principal root (det phase taken in `(−π, π]`).
pub fn project_su(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !is_unitary(u, 1e-8) {
        return input_err("project_su needs a unitary matrix");
    }
    Ok(remove_det_phase(u, u.determinant()?))
}

fn remove_det_phase(u: &ComplexMatrix, det: C64) -> ComplexMatrix {
    let mut phase = det.arg();
    if phase <= -std::f64::consts::PI {
        phase = std::f64::consts::PI;
    }
    u.scale(Complex64::from_polar(1.0, -phase / u.rows() as f64))
}

/// Entrywise Monte Carlo mean of an operator-valued function over SU(d).
#[derive(Clone, Debug)]
pub struct HaarMean {
    pub mean: ComplexMatrix,
    /// Per-entry standard error, row-major.
    pub stderr: Vec<f64>,
    pub max_stderr: f64,
    pub samples: usize,
}

impl HaarMean {
    pub fn stderr_at(&self, i: usize, j: usize) -> f64 {
        self.stderr[i * self.mean.cols() + j]
    }
}

/// Averages `f(V)` over `n` Haar draws `V ∈ SU(d)`; draw `i` uses
/// `RngStream::new(seed, i)`.
///
/// The standard error of a complex entry is `sqrt(var(Re) + var(Im)) / √n`.
pub fn haar_mean_operator<F>(f: F, d: usize, n: usize, seed: u64) -> Result<HaarMean>
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    if n < 2 {
        return input_err("haar_mean_operator needs at least 2 samples");
    }
    if d < 1 {
        return input_err("dimension must be positive");
    }
    let mut mean: Option<ComplexMatrix> = None;
    let mut m2: Vec<f64> = Vec::new();
    for i in 0..n {
        let mut rng = RngStream::new(seed, i as u64);
        let v = haar_su(d, &mut rng);
        let x = f(&v);
        let mean = mean.get_or_insert_with(|| {
            m2 = vec![0.0; x.rows() * x.cols()];
            ComplexMatrix::zeros(x.rows(), x.cols())
        });
        if (x.rows(), x.cols()) != (mean.rows(), mean.cols()) {
            return input_err(format!(
                "integrand changed shape from {}x{} to {}x{}",
                mean.rows(),
                mean.cols(),
                x.rows(),
                x.cols()
            ));
        }
        // Welford update per entry
        let k = (i + 1) as f64;
        let cols = x.cols();
        for (idx, acc) in m2.iter_mut().enumerate() {
            let (r, c) = (idx / cols, idx % cols);
            let old = mean.get(r, c);
            let delta = x.get(r, c) - old;
            let new = old + delta / k;
            mean.set(r, c, new);
            *acc += delta.re * (x.get(r, c) - new).re + delta.im * (x.get(r, c) - new).im;
        }
    }
    let mean = mean.expect("n >= 2");
    let nf = n as f64;
    let stderr: Vec<f64> = m2.iter().map(|s| (s / (nf - 1.0) / nf).sqrt()).collect();
    let max_stderr = stderr.iter().copied().fold(0.0, f64::max);
    Ok(HaarMean {
        mean,
        stderr,
        max_stderr,
        samples: n,
    })
}

/// Rotation `exp(−i·angle·axis·σ)` in SU(2), e.g. a spin precessing in a
/// field along `axis` with `angle = μBT`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    axis: [f64; 3],
    angle: f64,
}

impl AxisAngle {
    /// Normalizes `axis`; rejects a zero axis and angles outside `[0, π]`.
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm <= 1e-12 {
            return input_err("axis must be a nonzero finite vector");
        }
        if !(0.0..=std::f64::consts::PI).contains(&angle) {
            return input_err(format!("angle {angle} outside [0, π]"));
        }
        Ok(Self {
            axis: axis.map(|x| x / norm),
            angle,
        })
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

pub fn su2_from_axis_angle(aa: &AxisAngle) -> ComplexMatrix {
    let (s, c) = aa.angle.sin_cos();
    let [x, y, z] = aa.axis;
    // cos·I − i·sin·(x σx + y σy + z σz)
    ComplexMatrix::from_rows(&[
        &[C64::new(c, -s * z), C64::new(-s * y, -s * x)],
        &[C64::new(s * y, -s * x), C64::new(c, s * z)],
    ])
}

/// Inverse of [`su2_from_axis_angle`].  When the rotation part vanishes
/// (`U = ±I`) the axis is reported as `ẑ`.
pub fn axis_angle_from_su2(u: &ComplexMatrix) -> Result<AxisAngle> {
    if u.rows() != 2 || u.cols() != 2 {
        return input_err("expected a 2x2 matrix");
    }
    let det = u.determinant()?;
    if (det - C64::new(1.0, 0.0)).norm() > 1e-8 || !is_unitary(u, 1e-8) {
        return Err(Error::Input(format!("not in SU(2): det = {det}")));
    }
    let cos = u.trace().re / 2.0;
    // U − U† = −2i·sin·(n·σ); project onto each Pauli matrix
    let anti = u - &u.adjoint();
    let comp = |p: ComplexMatrix| (C64::i() * anti.dot(&p).trace()).re / 4.0;
    let v = [
        comp(numerics::sigma_x()),
        comp(numerics::sigma_y()),
        comp(numerics::sigma_z()),
    ];
    let sin = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let angle = sin.atan2(cos);
    if sin < 1e-12 {
        return AxisAngle::new([0.0, 0.0, 1.0], angle);
    }
    AxisAngle::new(v, angle)
}
