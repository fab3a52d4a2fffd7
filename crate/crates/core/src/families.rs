//! Samplers for the explicit maskable families of the example maskers, with
//! their closed-form reduced states.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{substream, CMatrix};
use crate::statespace::{angles_to_amplitudes, wrap_phase, HyperAngles, PureState};

/// Attempts per requested state before a rejection sampler gives up.
const ATTEMPTS_PER_STATE: usize = 10_000;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Anchor `(x_1, x_2, y_1, y_2) = (π/4, π/6, 2π/3, π/4)` used for sweeps of
/// the three-dimensional example.
pub fn measure_anchor_3d() -> HyperAngles {
    HyperAngles::new(vec![FRAC_PI_4, FRAC_PI_6], vec![2.0 * FRAC_PI_3, FRAC_PI_4]).unwrap()
}

/// Anchor used for qubit circle sweeps and demos.
pub fn qubit_anchor() -> HyperAngles {
    HyperAngles::new(vec![FRAC_PI_6], vec![FRAC_PI_4]).unwrap()
}

/// Invariants `(a, b)` of a 3-dim state: `a = cos x_1`,
/// `b = sin 2x_2 · cos(y_1 − y_2)`.
pub fn invariants_3d(p: &HyperAngles) -> Result<(f64, f64)> {
    if p.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: p.dim(),
        });
    }
    let (x, y) = (p.x(), p.y());
    Ok((x[0].cos(), (2.0 * x[1]).sin() * (y[0] - y[1]).cos()))
}

/// `a²|1⟩⟨1| + ½(1−a²)(1+b)|2⟩⟨2| + ½(1−a²)(1−b)|3⟩⟨3|`, shared by `ρ_A`
/// and `ρ_B` of the three-dimensional example.
pub fn closed_form_3d(a: f64, b: f64) -> CMatrix {
    let a2 = a * a;
    let diag = [
        a2,
        0.5 * (1.0 - a2) * (1.0 + b),
        0.5 * (1.0 - a2) * (1.0 - b),
    ];
    CMatrix::from_fn(3, 3, |r, c| {
        if r == c {
            Complex64::new(diag[r], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Solves `cos θ = ratio` and returns `center ± acos(ratio)` for the chosen
/// branch, or `None` when `|ratio| > 1`.
fn solve_cos(center: f64, ratio: f64, plus: bool) -> Option<f64> {
    if !ratio.is_finite() || ratio.abs() > 1.0 {
        return None;
    }
    let t = ratio.acos();
    Some(wrap_phase(if plus { center + t } else { center - t }))
}

fn rejection<T, F>(count: usize, seed: u64, mut draw: F) -> Result<Vec<T>>
where
    F: FnMut(&mut rand_chacha::ChaCha8Rng) -> Option<T>,
{
    let mut out = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let mut rng = substream(seed, i);
        let mut found = None;
        for _ in 0..ATTEMPTS_PER_STATE {
            if let Some(v) = draw(&mut rng) {
                found = Some(v);
                break;
            }
        }
        match found {
            Some(v) => out.push(v),
            None => {
                return Err(Error::SamplingFailed {
                    accepted: out.len(),
                    requested: count,
                    attempts: (i as usize + 1) * ATTEMPTS_PER_STATE,
                })
            }
        }
    }
    Ok(out)
}

/// States of the three-dimensional example's maskable set through `anchor`:
/// `cos x_1 = a` and `sin 2x_2 cos(y_1 − y_2) = b`.
pub fn omega_3d(anchor: &HyperAngles, count: usize, seed: u64) -> Result<Vec<PureState>> {
    omega_3d_angles(anchor, count, seed).map(|v| v.iter().map(angles_to_amplitudes).collect())
}

pub fn omega_3d_angles(anchor: &HyperAngles, count: usize, seed: u64) -> Result<Vec<HyperAngles>> {
    let (_, b) = invariants_3d(anchor)?;
    let x1 = anchor.x()[0];
    rejection(count, seed, |rng| {
        let x2 = rng.random_range(0.0..=FRAC_PI_2);
        let y2 = rng.random_range(0.0..TAU);
        let y1 = solve_cos(y2, b / (2.0 * x2).sin(), rng.random())?;
        HyperAngles::new(vec![x1, x2], vec![y1, y2]).ok()
    })
}

/// A 4-dim state in block coordinates:
/// `|p⟩ = (1/√2)(cos ζ_1, sin ζ_1 e^{iy_1}, cos ζ_2 e^{iy_2}, sin ζ_2 e^{iy_3})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zeta4 {
    pub zeta1: f64,
    pub zeta2: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

impl Zeta4 {
    /// `(ζ_1, ζ_2, y_1, y_2, y_3) = (π/4, 2π/3, π/6, π/4, 2π/3)`.
    pub fn figure_anchor() -> Self {
        Self {
            zeta1: FRAC_PI_4,
            zeta2: 2.0 * FRAC_PI_3,
            y1: FRAC_PI_6,
            y2: FRAC_PI_4,
            y3: 2.0 * FRAC_PI_3,
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            &[zeta1, zeta2, y1, y2, y3] => Ok(Self {
                zeta1,
                zeta2,
                y1,
                y2,
                y3,
            }),
            _ => Err(Error::InvalidParameter(format!(
                "expected 5 block coordinates, got {}",
                v.len()
            ))),
        }
    }

    pub fn state(&self) -> PureState {
        let s = FRAC_1_SQRT_2;
        PureState::normalized(vec![
            Complex64::new(s * self.zeta1.cos(), 0.0),
            Complex64::from_polar(s * self.zeta1.sin(), self.y1),
            Complex64::from_polar(s * self.zeta2.cos(), self.y2),
            Complex64::from_polar(s * self.zeta2.sin(), self.y3),
        ])
        .expect("block coordinates give a unit vector")
    }

    /// `c = sin 2ζ_1 cos y_1`.
    pub fn c(&self) -> f64 {
        (2.0 * self.zeta1).sin() * self.y1.cos()
    }

    /// `d = ½ cos 2ζ_2 − (√3/2) sin 2ζ_2 cos(y_3 − y_2)`.
    pub fn d(&self) -> f64 {
        0.5 * (2.0 * self.zeta2).cos()
            - SQRT3_2 * (2.0 * self.zeta2).sin() * (self.y3 - self.y2).cos()
    }

    pub fn invariants(&self) -> (f64, f64) {
        (self.c(), self.d())
    }
}

/// `ζ_1` values on `sin 2ζ_1 cos y_1 = c` for a given `y_1`, both branches.
pub fn solve_zeta1(c: f64, y1: f64) -> Vec<f64> {
    let s = c / y1.cos();
    if !s.is_finite() || !(0.0..=1.0).contains(&s) {
        return Vec::new();
    }
    let lo = 0.5 * s.asin();
    let hi = FRAC_PI_2 - lo;
    if (hi - lo).abs() < 1e-15 {
        vec![lo]
    } else {
        vec![lo, hi]
    }
}

/// `y_3` values on `½ cos 2ζ_2 − (√3/2) sin 2ζ_2 cos(y_3 − y_2) = d`.
pub fn solve_y3(d: f64, zeta2: f64, y2: f64) -> Vec<f64> {
    let ratio = (0.5 * (2.0 * zeta2).cos() - d) / (SQRT3_2 * (2.0 * zeta2).sin());
    let mut out: Vec<f64> = [true, false]
        .iter()
        .filter_map(|&plus| solve_cos(y2, ratio, plus))
        .collect();
    if out.len() == 2 && (out[0] - out[1]).abs() < 1e-15 {
        out.pop();
    }
    out
}

/// `ρ_A = ¼ diag(1+c, 1−c, 1+d, 1−d)`.
pub fn closed_form_4d_a(c: f64, d: f64) -> CMatrix {
    let diag = [1.0 + c, 1.0 - c, 1.0 + d, 1.0 - d];
    CMatrix::from_fn(4, 4, |r, col| {
        Complex64::new(if r == col { diag[r] / 4.0 } else { 0.0 }, 0.0)
    })
}

/// `ρ_B` of the tabulated four-dimensional masker:
/// `¼ diag(1+c, 1−c) ⊕ (I/4 + (d/4)(|3⟩⟨4| + |4⟩⟨3|))`.
///
/// The first block maps into `|11⟩, |22⟩`, so it stays diagonal on the B
/// side; only the second block carries a B-side coupling.
pub fn closed_form_4d_b(c: f64, d: f64) -> CMatrix {
    let mut m = closed_form_4d_a(c, 0.0);
    m[(2, 3)] = Complex64::new(d / 4.0, 0.0);
    m[(3, 2)] = Complex64::new(d / 4.0, 0.0);
    m
}

/// `I/4 + (c/4)(|1⟩⟨2| + |2⟩⟨1|) + (d/4)(|3⟩⟨4| + |4⟩⟨3|)`, the fully
/// coupled form. It agrees with [`closed_form_4d_b`] only when `c = 0`.
pub fn coupled_form_4d_b(c: f64, d: f64) -> CMatrix {
    let mut m = closed_form_4d_a(0.0, 0.0);
    for (r, s, v) in [(0, 1, c), (2, 3, d)] {
        m[(r, s)] = Complex64::new(v / 4.0, 0.0);
        m[(s, r)] = Complex64::new(v / 4.0, 0.0);
    }
    m
}

/// States of the four-dimensional example's maskable set through `anchor`.
pub fn omega_4d(anchor: &Zeta4, count: usize, seed: u64) -> Result<Vec<PureState>> {
    omega_4d_coords(anchor, count, seed).map(|v| v.iter().map(Zeta4::state).collect())
}

pub fn omega_4d_coords(anchor: &Zeta4, count: usize, seed: u64) -> Result<Vec<Zeta4>> {
    let (c, d) = anchor.invariants();
    rejection(count, seed, |rng| {
        let zeta1 = rng.random_range(0.0..=FRAC_PI_2);
        let y1 = solve_cos(0.0, c / (2.0 * zeta1).sin(), rng.random())?;
        let zeta2 = rng.random_range(0.0..=FRAC_PI_2);
        let y2 = rng.random_range(0.0..TAU);
        let ratio = (0.5 * (2.0 * zeta2).cos() - d) / (SQRT3_2 * (2.0 * zeta2).sin());
        let y3 = solve_cos(y2, ratio, rng.random())?;
        Some(Zeta4 {
            zeta1,
            zeta2,
            y1,
            y2,
            y3,
        })
    })
}

/// `sin 2x · cos(y − α)` for a qubit state.
pub fn circle_value(p: &HyperAngles, alpha: f64) -> f64 {
    (2.0 * p.x()[0]).sin() * (p.y()[0] - alpha).cos()
}

/// Qubit states on the circle of `qubit_circle_masker(alpha)` through `anchor`.
pub fn qubit_circle_family(
    alpha: f64,
    anchor: &HyperAngles,
    count: usize,
    seed: u64,
) -> Result<Vec<PureState>> {
    if anchor.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: anchor.dim(),
        });
    }
    let g0 = circle_value(anchor, alpha);
    let angles = rejection(count, seed, |rng| {
        let x = rng.random_range(0.0..=FRAC_PI_2);
        let y = solve_cos(alpha, g0 / (2.0 * x).sin(), rng.random())?;
        HyperAngles::new(vec![x], vec![y]).ok()
    })?;
    Ok(angles.iter().map(angles_to_amplitudes).collect())
}

/// States masked by `compose_even_odd` built from circle maskers with the
/// given `alphas`: block `k` carries weight `weights[k]` (and, for odd `n`,
/// the leading amplitude has weight `lead`), each block's qubit lies on the
/// circle through `anchors[k]`, and block phases are random.
pub fn composite_family(
    alphas: &[f64],
    anchors: &[HyperAngles],
    weights: &[f64],
    lead: Option<f64>,
    count: usize,
    seed: u64,
) -> Result<Vec<PureState>> {
    if alphas.len() != anchors.len() || alphas.len() != weights.len() {
        return Err(Error::InvalidParameter(
            "alphas, anchors and weights must have equal length".into(),
        ));
    }
    let blocks: Vec<Vec<PureState>> = alphas
        .iter()
        .zip(anchors)
        .enumerate()
        .map(|(b, (&alpha, anchor))| {
            qubit_circle_family(alpha, anchor, count, seed.wrapping_add(b as u64 + 1))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = substream(seed, i as u64);
        let mut amps = Vec::new();
        if let Some(w) = lead {
            amps.push(Complex64::from_polar(w, rng.random_range(0.0..TAU)));
        }
        for (b, w) in weights.iter().enumerate() {
            let phase = Complex64::from_polar(*w, rng.random_range(0.0..TAU));
            amps.extend(blocks[b][i].amps().iter().map(|a| a * phase));
        }
        out.push(PureState::normalized(amps)?);
    }
    Ok(out)
}
