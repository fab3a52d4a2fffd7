//! Small dense complex linear-algebra helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Counter-based random stream: the generator for work item `index` depends
/// only on `(seed, index)`, so results do not depend on how work is split
/// across threads.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix (only the Hermitian part is used).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// Trace norm ‖M‖₁ of a Hermitian matrix.
pub fn hermitian_trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// Matrix of i.i.d. standard complex Gaussians (unit variance per entry).
pub fn complex_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Thin QR factor with the diagonal of R made real and positive.
///
/// For a full-column-rank input this is the unique orthonormal-column matrix
/// spanning the same column space, and applied to a complex Gaussian matrix it
/// yields a Haar-distributed isometry.
pub fn orthonormalize(m: &CMatrix) -> CMatrix {
    let cols = m.ncols();
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols {
        let d = r[(c, c)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { ONE };
        for row in 0..q.nrows() {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Haar-random isometry with `rows ≥ cols`.
pub fn haar_isometry<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    orthonormalize(&complex_gaussian(rows, cols, rng))
}

/// max |V†V − I| over entries.
pub fn isometry_defect(v: &CMatrix) -> f64 {
    let gram = v.adjoint() * v;
    let n = gram.nrows();
    max_abs_diff(&gram, &CMatrix::identity(n, n))
}
