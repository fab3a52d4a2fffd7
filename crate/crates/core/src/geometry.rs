//! Real quadratic embedding of pure states and the hyperplane constraints a
//! masker imposes on it.
//!
//! A state `p` with amplitudes `p_j` maps to `ξ ∈ R^{n²}`:
//! `ξ_j = |p_j|²` for `j < n`, then for every pair `s < t` in lexicographic
//! order the two coordinates `√2·Re(p_s p̄_t)` and `√2·Im(p_s p̄_t)`. The map
//! lands on the unit sphere, and every entry of both reduced states is a
//! linear function of `ξ`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{substream, CMatrix, ZERO};
use crate::masker::{GramTensor, Masker};
use crate::reduce::{entry_matrix, Side};
use crate::statespace::{PureState, NORM_TOL};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Position of the `(s, t)` pair block, `s < t`, in a ξ-vector of size `n²`.
pub fn pair_offset(n: usize, s: usize, t: usize) -> usize {
    debug_assert!(s < t && t < n);
    // pairs before row s: Σ_{i<s} (n−1−i)
    let before = s * (2 * n - s - 1) / 2;
    n + 2 * (before + (t - s - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiVector {
    n: usize,
    coords: Vec<f64>,
}

impl XiVector {
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: coords.len(),
            });
        }
        Ok(Self { n, coords })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, a: &[f64]) -> f64 {
        self.coords.iter().zip(a).map(|(x, y)| x * y).sum()
    }
}

pub fn xi_embed(p: &PureState) -> XiVector {
    let n = p.dim();
    let mut coords = vec![0.0; n * n];
    fill_xi(p.amps(), &mut coords);
    XiVector { n, coords }
}

pub(crate) fn fill_xi(amps: &[Complex64], out: &mut [f64]) {
    let n = amps.len();
    for (o, a) in out.iter_mut().zip(amps) {
        *o = a.norm_sqr();
    }
    let mut idx = n;
    for s in 0..n {
        for t in s + 1..n {
            let w = amps[s] * amps[t].conj();
            out[idx] = SQRT_2 * w.re;
            out[idx + 1] = SQRT_2 * w.im;
            idx += 2;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    pub fn select(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }
}

/// Which reduced-state entry a constraint encodes. Indices are 1-based in
/// JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TagRepr", into = "TagRepr")]
pub struct ConstraintTag {
    pub side: Side,
    pub k: usize,
    pub l: usize,
    pub part: Part,
}

#[derive(Serialize, Deserialize)]
struct TagRepr {
    side: Side,
    k: usize,
    l: usize,
    part: Part,
}

impl TryFrom<TagRepr> for ConstraintTag {
    type Error = String;

    fn try_from(r: TagRepr) -> std::result::Result<Self, String> {
        if r.k == 0 || r.l == 0 {
            return Err("constraint indices are 1-based".into());
        }
        Ok(Self {
            side: r.side,
            k: r.k - 1,
            l: r.l - 1,
            part: r.part,
        })
    }
}

impl From<ConstraintTag> for TagRepr {
    fn from(t: ConstraintTag) -> Self {
        Self {
            side: t.side,
            k: t.k + 1,
            l: t.l + 1,
            part: t.part,
        }
    }
}

/// `A·ξ + D = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub tag: ConstraintTag,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "D")]
    pub d: f64,
}

impl LinearConstraint {
    pub fn evaluate(&self, xi: &XiVector) -> f64 {
        xi.dot(&self.a) + self.d
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        self.a.iter().all(|v| v.abs() <= tol)
    }

    /// Hermitian `H` with `⟨p|H|p⟩ = A·ξ(p)` for every (not necessarily
    /// normalized) `p`.
    pub fn hermitian_form(&self, n: usize) -> CMatrix {
        let mut h = CMatrix::zeros(n, n);
        for j in 0..n {
            h[(j, j)] = Complex64::new(self.a[j], 0.0);
        }
        for s in 0..n {
            for t in s + 1..n {
                let o = pair_offset(n, s, t);
                let v = Complex64::new(self.a[o], -self.a[o + 1]) / SQRT_2;
                h[(t, s)] = v;
                h[(s, t)] = v.conj();
            }
        }
        h
    }

    /// `H + D·I`, whose quadratic form vanishes exactly on the constraint for
    /// unit vectors and is homogeneous of degree two.
    pub fn homogeneous_form(&self, n: usize) -> CMatrix {
        let mut h = self.hermitian_form(n);
        for j in 0..n {
            h[(j, j)] += Complex64::new(self.d, 0.0);
        }
        h
    }
}

fn side_constraints(
    gram: &GramTensor,
    side: Side,
    anchor: Option<&CMatrix>,
    out: &mut Vec<LinearConstraint>,
) {
    let n = gram.inputs();
    let dim = n * n;
    let d = gram.outputs();
    for k in 0..d {
        for l in k..d {
            let parts: &[Part] = if k == l {
                &[Part::Re]
            } else {
                &[Part::Re, Part::Im]
            };
            for &part in parts {
                let mut a = vec![0.0; dim];
                for (j, aj) in a.iter_mut().enumerate().take(n) {
                    *aj = part.select(gram.get(j, j, l, k));
                }
                for s in 0..n {
                    for t in s + 1..n {
                        let o = pair_offset(n, s, t);
                        let (g_ts, g_st) = (gram.get(t, s, l, k), gram.get(s, t, l, k));
                        a[o] = part.select((g_ts + g_st) / SQRT_2);
                        a[o + 1] = part.select(Complex64::i() * (g_ts - g_st) / SQRT_2);
                    }
                }
                let d0 = anchor.map_or(0.0, |f| -part.select(f[(k, l)]));
                out.push(LinearConstraint {
                    tag: ConstraintTag { side, k, l, part },
                    a,
                    d: d0,
                });
            }
        }
    }
}

/// Hyperplane constraints of both reduced states.
///
/// Entries with `k > l` are conjugates of `k < l` and diagonal entries are
/// real, so only `k ≤ l` is emitted, with the imaginary part for `k < l`.
/// With an anchor, `D` is set so the anchor satisfies every constraint;
/// without one `D = 0` and `A·ξ(p)` equals the entry itself.
pub fn masking_constraints(
    m: &Masker,
    anchor: Option<&PureState>,
) -> Result<Vec<LinearConstraint>> {
    let (ga, gb) = (m.gram(), m.b_gram());
    let anchors = match anchor {
        Some(p) => Some((entry_matrix(&ga, p)?, entry_matrix(&gb, p)?)),
        None => None,
    };
    let mut out = Vec::new();
    side_constraints(&ga, Side::A, anchors.as_ref().map(|a| &a.0), &mut out);
    side_constraints(&gb, Side::B, anchors.as_ref().map(|a| &a.1), &mut out);
    Ok(out)
}

/// Fails when every constraint has an all-zero coefficient vector.
pub fn check_nontrivial(constraints: &[LinearConstraint], tol: f64) -> Result<()> {
    if constraints.iter().any(|c| !c.is_trivial(tol)) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "all constraint coefficient vectors vanish".into(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub eta: [f64; 3],
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.eta.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `(cos 2x, sin 2x cos y, sin 2x sin y)` for a qubit.
pub fn bloch_embed(p: &PureState) -> Result<BlochVector> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.dim(),
        });
    }
    let (a, b) = (p.amps()[0], p.amps()[1]);
    let w = a.conj() * b;
    Ok(BlochVector {
        eta: [a.norm_sqr() - b.norm_sqr(), 2.0 * w.re, 2.0 * w.im],
    })
}

/// Dimension of the affine hull of the points, by singular values of the
/// centered point matrix thresholded at `tol·σ_max`.
pub fn affine_rank(points: &[XiVector], tol: f64) -> Result<usize> {
    let Some(first) = points.first() else {
        return Ok(0);
    };
    let dim = first.coords.len();
    if let Some(p) = points.iter().find(|p| p.coords.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.coords.len(),
        });
    }
    if points.len() < 2 {
        return Ok(0);
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(&p.coords) {
            *m += v / points.len() as f64;
        }
    }
    let centered = DMatrix::from_fn(points.len(), dim, |r, c| points[r].coords[c] - mean[c]);
    let sv = centered.singular_values();
    let smax = sv.max();
    if smax <= f64::EPSILON * points.len() as f64 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * smax).count())
}

/// True iff every state embeds on the unit sphere and satisfies every
/// constraint within `tol`.
pub fn spherical_circle_check(
    states: &[PureState],
    constraints: &[LinearConstraint],
    tol: f64,
) -> bool {
    states.iter().all(|p| {
        let xi = xi_embed(p);
        (xi.norm() - 1.0).abs() < tol.max(NORM_TOL)
            && constraints.iter().all(|c| c.evaluate(&xi).abs() < tol)
    })
}

/// Newton-type projection of states onto the common zero set of constraint
/// quadratic forms.
pub struct ConstraintProjector {
    n: usize,
    forms: Vec<CMatrix>,
}

impl ConstraintProjector {
    pub fn new(constraints: &[LinearConstraint], n: usize) -> Result<Self> {
        if let Some(c) = constraints.iter().find(|c| c.a.len() != n * n) {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: c.a.len(),
            });
        }
        Ok(Self {
            n,
            forms: constraints.iter().map(|c| c.homogeneous_form(n)).collect(),
        })
    }

    fn residuals(&self, v: &CMatrix) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut r = DVector::zeros(self.forms.len());
        let mut jac = DMatrix::zeros(self.forms.len(), 2 * n);
        for (i, k) in self.forms.iter().enumerate() {
            let kv = k * v;
            r[i] = v.dotc(&kv).re;
            for j in 0..n {
                jac[(i, j)] = 2.0 * kv[j].re;
                jac[(i, n + j)] = 2.0 * kv[j].im;
            }
        }
        (r, jac)
    }

    /// Minimum-norm Gauss-Newton iterations from `start`, renormalizing
    /// after each step. Returns the projected state when the largest
    /// residual drops below `tol`.
    pub fn project(&self, start: &PureState, tol: f64, max_iter: usize) -> Option<PureState> {
        let n = self.n;
        let mut v = CMatrix::from_column_slice(n, 1, start.amps());
        for _ in 0..max_iter {
            let (r, jac) = self.residuals(&v);
            if r.amax() < tol {
                return PureState::normalized(v.as_slice().to_vec()).ok();
            }
            let svd = jac.svd(true, true);
            let step = svd.solve(&r, 1e-12 * svd.singular_values.max()).ok()?;
            for j in 0..n {
                v[j] -= Complex64::new(step[j], step[n + j]);
            }
            let norm = v.norm();
            if !norm.is_finite() || norm == 0.0 {
                return None;
            }
            v /= Complex64::new(norm, 0.0);
        }
        let (r, _) = self.residuals(&v);
        (r.amax() < tol).then(|| PureState::normalized(v.as_slice().to_vec()).ok())?
    }
}

/// Random states satisfying the constraints: Haar-random starting points
/// projected onto the constraint set, one counter-based substream per
/// sample.
pub fn sample_constrained(
    constraints: &[LinearConstraint],
    n: usize,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<PureState>> {
    const ATTEMPTS: usize = 50;
    let proj = ConstraintProjector::new(constraints, n)?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = substream(seed, i as u64);
        let mut got = None;
        for _ in 0..ATTEMPTS {
            let amps: Vec<Complex64> = (0..n)
                .map(|_| {
                    Complex64::new(
                        rng.sample(rand_distr::StandardNormal),
                        rng.sample(rand_distr::StandardNormal),
                    )
                })
                .collect();
            let Ok(start) = PureState::normalized(amps) else {
                continue;
            };
            if let Some(p) = proj.project(&start, tol, 100) {
                got = Some(p);
                break;
            }
        }
        match got {
            Some(p) => out.push(p),
            None => {
                return Err(Error::SamplingFailed {
                    accepted: out.len(),
                    requested: count,
                    attempts: (i + 1) * ATTEMPTS,
                })
            }
        }
    }
    Ok(out)
}

/// Reduced-state entries of one side rebuilt from unanchored constraint
/// rows evaluated at `xi`.
pub fn entries_from_constraints(
    constraints: &[LinearConstraint],
    xi: &XiVector,
    side: Side,
    dim: usize,
) -> CMatrix {
    let mut m = CMatrix::from_element(dim, dim, ZERO);
    for c in constraints.iter().filter(|c| c.tag.side == side) {
        let v = xi.dot(&c.a);
        let (k, l) = (c.tag.k, c.tag.l);
        match c.tag.part {
            Part::Re => {
                m[(k, l)].re = v;
                m[(l, k)].re = v;
            }
            Part::Im => {
                m[(k, l)].im = v;
                m[(l, k)].im = -v;
            }
        }
    }
    m
}
