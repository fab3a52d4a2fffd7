//! Hyperspherical parameterization of pure states.
//!
//! A state of dimension `n` is described by `n − 1` amplitude angles
//! `x_k ∈ [0, π/2]` and `n − 1` relative phases `y_k ∈ [0, 2π)`:
//!
//! ```text
//! r_1 = cos x_1
//! r_k = sin x_1 ⋯ sin x_{k−1} cos x_k      (2 ≤ k ≤ n−1)
//! r_n = sin x_1 ⋯ sin x_{n−1}
//! |p⟩ = Σ_k r_k e^{i y_{k−1}} |k⟩,          y_0 ≡ 0
//! ```
//!
//! The parameter box `[0, π/2]^{n−1} × [0, 2π)^{n−1}` carries the plain
//! Lebesgue measure, of total mass `π^{2(n−1)}`. Sampling here is uniform in
//! that measure, not Haar. The two measures share their null sets because the
//! Haar density is strictly positive on the open box, so zero-measure
//! statements transfer between them.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::substream;

/// Tolerance on `|Σ|a_k|² − 1|` accepted by [`PureState::new`].
pub const NORM_TOL: f64 = 1e-12;

/// Amplitudes (or tail norms) below this are treated as exact zeros when
/// inverting the parameterization.
const ZERO_AMPLITUDE: f64 = 1e-14;

/// A point of the parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HyperAngles {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl HyperAngles {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidAngles("dimension must be at least 2".into()));
        }
        if x.len() != y.len() {
            return Err(Error::InvalidAngles(format!(
                "{} amplitude angles but {} phases",
                x.len(),
                y.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=FRAC_PI_2).contains(*v)) {
            return Err(Error::InvalidAngles(format!("x = {v} outside [0, π/2]")));
        }
        if let Some(v) = y.iter().find(|v| !(0.0..TAU).contains(*v)) {
            return Err(Error::InvalidAngles(format!("y = {v} outside [0, 2π)")));
        }
        Ok(Self { x, y })
    }

    /// Builds angles from a flat `[x_1..x_{n−1}, y_1..y_{n−1}]` list, wrapping
    /// phases into `[0, 2π)`.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() < 2 || values.len() % 2 != 0 {
            return Err(Error::InvalidAngles(format!(
                "expected an even number (≥ 2) of angles, got {}",
                values.len()
            )));
        }
        let half = values.len() / 2;
        let y = values[half..].iter().map(|&v| wrap_phase(v)).collect();
        Self::new(values[..half].to_vec(), y)
    }

    pub fn dim(&self) -> usize {
        self.x.len() + 1
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.x.iter().chain(self.y.iter()).copied().collect()
    }

    /// Moduli `r_1..r_n` of the amplitudes.
    pub fn radii(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        fill_radii(&self.x, &mut r);
        r
    }

    /// Returns a copy with phase `y_{index+1}` replaced (wrapped into `[0, 2π)`).
    pub fn with_phase(&self, index: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.y[index] = wrap_phase(value);
        out
    }
}

impl TryFrom<Vec<f64>> for HyperAngles {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(&values)
    }
}

impl From<HyperAngles> for Vec<f64> {
    fn from(a: HyperAngles) -> Self {
        a.to_flat()
    }
}

/// A normalized pure state given by its amplitudes in the computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidParameter(
                "a state needs at least two amplitudes".into(),
            ));
        }
        let deviation = (norm_sqr(&amps) - 1.0).abs();
        if !(deviation <= NORM_TOL) {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = norm_sqr(&amps).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero vector".into(),
            ));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(amps)
    }

    /// Computational basis state `|index⟩` (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim && dim >= 2);
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }
}

impl TryFrom<Vec<[f64; 2]>> for PureState {
    type Error = Error;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

impl From<PureState> for Vec<[f64; 2]> {
    fn from(s: PureState) -> Self {
        s.amps.into_iter().map(|a| [a.re, a.im]).collect()
    }
}

/// The shrunken box `[δ, π/2−δ]^{n−1} × [δ, 2π−δ]^{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    n: usize,
    delta: f64,
}

impl ParamBox {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension {n} < 2")));
        }
        if !(0.0..FRAC_PI_4).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "box margin {delta} outside [0, π/4)"
            )));
        }
        Ok(Self { n, delta })
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Draws one point into caller-provided buffers of length `n − 1`.
    pub fn fill<R: Rng>(&self, rng: &mut R, x: &mut [f64], y: &mut [f64]) {
        let d = self.delta;
        for v in x.iter_mut() {
            *v = uniform(rng, d, FRAC_PI_2 - d);
        }
        for v in y.iter_mut() {
            *v = uniform(rng, d, TAU - d);
        }
    }

    /// Sample number `index` of the stream identified by `seed`.
    pub fn sample_at(&self, seed: u64, index: u64) -> HyperAngles {
        let mut rng = substream(seed, index);
        let mut x = vec![0.0; self.n - 1];
        let mut y = vec![0.0; self.n - 1];
        self.fill(&mut rng, &mut x, &mut y);
        HyperAngles { x, y }
    }
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == 0.0 && hi == TAU {
        // half-open so that phases stay inside [0, 2π)
        rng.random_range(0.0..TAU)
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Maps a phase into `[0, 2π)`.
pub fn wrap_phase(v: f64) -> f64 {
    let w = v.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn norm_sqr(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// Writes `r_1..r_n` for amplitude angles `x` into `r` (length `x.len() + 1`).
pub(crate) fn fill_radii(x: &[f64], r: &mut [f64]) {
    let mut sines = 1.0;
    for (k, xk) in x.iter().enumerate() {
        let (s, c) = xk.sin_cos();
        r[k] = sines * c;
        sines *= s;
    }
    r[x.len()] = sines;
}

/// Writes the amplitudes for `(x, y)` into `out` (length `x.len() + 1`).
pub(crate) fn fill_amplitudes(x: &[f64], y: &[f64], out: &mut [Complex64]) {
    let mut sines = 1.0;
    for k in 0..out.len() {
        let r = if k < x.len() {
            let (s, c) = x[k].sin_cos();
            let r = sines * c;
            sines *= s;
            r
        } else {
            sines
        };
        out[k] = if k == 0 {
            Complex64::new(r, 0.0)
        } else {
            Complex64::from_polar(r, y[k - 1])
        };
    }
}

pub fn angles_to_amplitudes(a: &HyperAngles) -> PureState {
    let mut amps = vec![Complex64::new(0.0, 0.0); a.dim()];
    fill_amplitudes(&a.x, &a.y, &mut amps);
    PureState { amps }
}

/// Result of inverting the parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub angles: HyperAngles,
    /// Set when some angle was undetermined (a vanishing amplitude or tail)
    /// and was fixed to 0.
    pub degenerate: bool,
}

/// Recovers angles for `p`, fixing the global phase so that the first
/// nonzero amplitude is real and nonnegative.
pub fn amplitudes_to_angles(p: &PureState) -> Inversion {
    let n = p.dim();
    let amps = p.amps();
    let lead = amps
        .iter()
        .find(|a| a.norm() > ZERO_AMPLITUDE)
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let unphase = lead.conj() / lead.norm();

    let r: Vec<f64> = amps.iter().map(|a| a.norm()).collect();
    let mut degenerate = false;

    // tail[k] = sqrt(Σ_{i ≥ k} r_i²)
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = (tail[k + 1] * tail[k + 1] + r[k] * r[k]).sqrt();
    }

    let mut x = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        if tail[k] <= ZERO_AMPLITUDE {
            degenerate = true;
            x.push(0.0);
        } else {
            x.push(tail[k + 1].atan2(r[k]).clamp(0.0, FRAC_PI_2));
        }
    }

    let mut y = Vec::with_capacity(n - 1);
    for k in 1..n {
        if r[k] <= ZERO_AMPLITUDE {
            degenerate = true;
            y.push(0.0);
        } else {
            y.push(wrap_phase((amps[k] * unphase).arg()));
        }
    }

    Inversion {
        angles: HyperAngles { x, y },
        degenerate,
    }
}

/// Uniform samples on the box; sample `i` depends only on `(seed, i)`.
pub fn sample_uniform(b: &ParamBox, count: usize, seed: u64) -> Vec<HyperAngles> {
    (0..count as u64).map(|i| b.sample_at(seed, i)).collect()
}

/// Lebesgue volume `π^{2(n−1)}` of the full parameter box.
pub fn box_volume(n: usize) -> f64 {
    assert!(n >= 2, "dimension must be at least 2");
    PI.powi(2 * (n as i32 - 1))
}
