//! Reduced density matrices, their entry functions, and masking verdicts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, max_abs_diff, CMatrix, ZERO};
use crate::masker::{BipartiteState, GramTensor, Masker};
use crate::statespace::PureState;

/// Default tolerance for boolean masking verdicts.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Which share a reduced state (or a deviation) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Wraps `m` after checking the density-matrix invariants at `tol`
    /// (eigenvalues may dip to `−1e−10`).
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        let d = DensityMatrix(m);
        if !d.is_valid(tol) {
            return Err(Error::InvalidParameter(
                "matrix is not a density matrix".into(),
            ));
        }
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let m = &self.0;
        if !m.is_square() {
            return false;
        }
        let hermitian = max_abs_diff(m, &m.adjoint()) <= tol;
        let unit_trace = (self.trace() - Complex64::new(1.0, 0.0)).norm() <= tol;
        hermitian && unit_trace && hermitian_eigenvalues(m).iter().all(|&v| v >= -1e-10)
    }
}

/// `ρ_A = Tr_B |ψ⟩⟨ψ|`.
pub fn partial_trace_b(s: &BipartiteState) -> DensityMatrix {
    let (da, db) = (s.da(), s.db());
    DensityMatrix(CMatrix::from_fn(da, da, |j, jp| {
        (0..db).map(|m| s.amp(j, m) * s.amp(jp, m).conj()).sum()
    }))
}

/// `ρ_B = Tr_A |ψ⟩⟨ψ|`.
pub fn partial_trace_a(s: &BipartiteState) -> DensityMatrix {
    let (da, db) = (s.da(), s.db());
    DensityMatrix(CMatrix::from_fn(db, db, |m, mp| {
        (0..da).map(|j| s.amp(j, m) * s.amp(j, mp).conj()).sum()
    }))
}

/// Evaluates `Σ_{s,t} p_s p̄_t G[t][s][l][k]` in polar form: the diagonal
/// `Σ_j r_j² G[j][j]` plus, for each pair `s < t`, the two conjugate cross
/// terms carrying `e^{±i(φ_s − φ_t)}`.
pub fn entry_matrix(gram: &GramTensor, p: &PureState) -> Result<CMatrix> {
    let n = gram.inputs();
    if p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.dim(),
        });
    }
    let r: Vec<f64> = p.amps().iter().map(|a| a.norm()).collect();
    let phi: Vec<f64> = p.amps().iter().map(|a| a.arg()).collect();
    let d = gram.outputs();
    Ok(CMatrix::from_fn(d, d, |k, l| {
        let mut acc = ZERO;
        for j in 0..n {
            acc += gram.get(j, j, l, k) * (r[j] * r[j]);
        }
        for s in 0..n {
            for t in s + 1..n {
                let w = Complex64::from_polar(r[s] * r[t], phi[s] - phi[t]);
                acc += w * gram.get(t, s, l, k) + w.conj() * gram.get(s, t, l, k);
            }
        }
        acc
    }))
}

/// `f_kl(p)`, the entries of `ρ_A`, computed from the masker's Gram tensor.
pub fn f_matrix(m: &Masker, p: &PureState) -> Result<CMatrix> {
    entry_matrix(&m.gram(), p)
}

/// `g_kl(p)`, the entries of `ρ_B`, from the B-side Gram tensor.
pub fn g_matrix(m: &Masker, p: &PureState) -> Result<CMatrix> {
    entry_matrix(&m.b_gram(), p)
}

/// Per-state deviation of both reduced states from an anchor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    #[serde(serialize_with = "ser_matrix")]
    pub anchor_a: CMatrix,
    #[serde(serialize_with = "ser_matrix")]
    pub anchor_b: CMatrix,
    pub per_state: Vec<f64>,
    pub per_state_side: Vec<Side>,
    pub overall_max: f64,
    pub side: Side,
}

pub(crate) fn ser_matrix<S: serde::Serializer>(
    m: &CMatrix,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols())
            .map(|c| [m[(r, c)].re, m[(r, c)].im])
            .collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// Residual evaluator with the anchor's reduced states precomputed; reuses
/// its buffers so per-state evaluation does not allocate.
#[derive(Debug, Clone)]
pub struct AnchoredResidual<'a> {
    masker: &'a Masker,
    anchor_a: Vec<Complex64>,
    anchor_b: Vec<Complex64>,
    image: Vec<Complex64>,
}

impl<'a> AnchoredResidual<'a> {
    pub fn new(masker: &'a Masker, anchor: &PureState) -> Result<Self> {
        let image = masker.apply(anchor)?;
        let (da, db) = (masker.da(), masker.db());
        let a = partial_trace_b(&image);
        let b = partial_trace_a(&image);
        Ok(Self {
            masker,
            anchor_a: (0..da * da).map(|i| a.0[(i / da, i % da)]).collect(),
            anchor_b: (0..db * db).map(|i| b.0[(i / db, i % db)]).collect(),
            image: vec![ZERO; da * db],
        })
    }

    /// Max-abs entry deviation over both reduced states and the side where it
    /// occurs. `amps` must have length `dA`.
    pub fn deviation(&mut self, amps: &[Complex64]) -> (f64, Side) {
        let (da, db) = (self.masker.da(), self.masker.db());
        self.masker.apply_into(amps, &mut self.image);
        let psi = &self.image;
        let mut dev_a = 0.0f64;
        for j in 0..da {
            for jp in j..da {
                let mut e = ZERO;
                for m in 0..db {
                    e += psi[j * db + m] * psi[jp * db + m].conj();
                }
                dev_a = dev_a.max((e - self.anchor_a[j * da + jp]).norm());
            }
        }
        let mut dev_b = 0.0f64;
        for m in 0..db {
            for mp in m..db {
                let mut e = ZERO;
                for j in 0..da {
                    e += psi[j * db + m] * psi[j * db + mp].conj();
                }
                dev_b = dev_b.max((e - self.anchor_b[m * db + mp]).norm());
            }
        }
        if dev_b > dev_a {
            (dev_b, Side::B)
        } else {
            (dev_a, Side::A)
        }
    }
}

/// Deviation of every state's reduced states from those of `anchor`.
pub fn masking_residual(
    m: &Masker,
    states: &[PureState],
    anchor: &PureState,
) -> Result<ResidualReport> {
    let mut eval = AnchoredResidual::new(m, anchor)?;
    let mut per_state = Vec::with_capacity(states.len());
    let mut per_state_side = Vec::with_capacity(states.len());
    for p in states {
        if p.dim() != m.da() {
            return Err(Error::DimensionMismatch {
                expected: m.da(),
                got: p.dim(),
            });
        }
        let (d, side) = eval.deviation(p.amps());
        per_state.push(d);
        per_state_side.push(side);
    }
    let (overall_max, side) =
        per_state
            .iter()
            .zip(&per_state_side)
            .fold(
                (0.0, Side::A),
                |(best, bs), (&d, &s)| {
                    if d > best {
                        (d, s)
                    } else {
                        (best, bs)
                    }
                },
            );
    let (da, db) = (m.da(), m.db());
    Ok(ResidualReport {
        anchor_a: CMatrix::from_fn(da, da, |r, c| eval.anchor_a[r * da + c]),
        anchor_b: CMatrix::from_fn(db, db, |r, c| eval.anchor_b[r * db + c]),
        per_state,
        per_state_side,
        overall_max,
        side,
    })
}

/// True iff every state shares both reduced states with the first one, up
/// to `tol`. Empty and singleton sets are masked.
pub fn is_masked_set(m: &Masker, states: &[PureState], tol: f64) -> Result<bool> {
    match states.first() {
        None => Ok(true),
        Some(anchor) => Ok(masking_residual(m, states, anchor)?.overall_max < tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::linalg::{complex_gaussian, substream, ONE};
    use crate::masker::{builtin_example_3d, builtin_example_4d, qubit_circle_masker};
    use crate::statespace::{angles_to_amplitudes, HyperAngles};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn bell() -> BipartiteState {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        BipartiteState::new(2, 2, vec![s, ZERO, ZERO, s]).unwrap()
    }

    #[test]
    fn product_state_trace() {
        let s = BipartiteState::new(2, 3, vec![ONE, ZERO, ZERO, ZERO, ZERO, ZERO]).unwrap();
        let ra = partial_trace_b(&s);
        assert_eq!(ra.matrix()[(0, 0)], ONE);
        assert_eq!(ra.matrix()[(1, 1)], ZERO);
        assert_eq!(partial_trace_a(&s).dim(), 3);
    }

    #[test]
    fn maximally_entangled() {
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(max_abs_diff(partial_trace_b(&bell()).matrix(), &half) < 1e-15);
        assert!(max_abs_diff(partial_trace_a(&bell()).matrix(), &half) < 1e-15);
    }

    #[test]
    fn example_4d_rho_b_closed_form() {
        let m = builtin_example_4d();
        let anchor = families::Zeta4::figure_anchor();
        let (c, d) = anchor.invariants();
        let rho_b = partial_trace_a(&m.apply(&anchor.state()).unwrap());
        // |1>,|2> land on |11>,|22>: B-diagonal. |3>,|4> share B support.
        let mut expected = CMatrix::zeros(4, 4);
        for (i, j, v) in [
            (0, 0, (1.0 + c) / 4.0),
            (1, 1, (1.0 - c) / 4.0),
            (2, 2, 0.25),
            (3, 3, 0.25),
            (2, 3, d / 4.0),
            (3, 2, d / 4.0),
        ] {
            expected[(i, j)] = Complex64::new(v, 0.0);
        }
        assert!(max_abs_diff(rho_b.matrix(), &expected) < 1e-14);
        assert!(max_abs_diff(&g_matrix(&m, &anchor.state()).unwrap(), &expected) < 1e-14);
    }

    #[test]
    fn f_matrix_example_3d() {
        let a = HyperAngles::new(vec![FRAC_PI_4, FRAC_PI_4], vec![0.0, 0.0]).unwrap();
        let f = f_matrix(&builtin_example_3d(), &angles_to_amplitudes(&a)).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| f[(i, i)].re).collect();
        assert!((diag[0] - 0.5).abs() < 1e-15);
        assert!((diag[1] - 0.5).abs() < 1e-15);
        assert!(diag[2].abs() < 1e-15);
    }

    #[test]
    fn f_matrix_on_basis_state_is_column_gram() {
        let mut rng = substream(8, 0);
        let m = Masker::haar_random(3, 3, &mut rng);
        for k in 0..3 {
            let f = f_matrix(&m, &PureState::basis(3, k)).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let g: Complex64 = m
                        .u(k, b)
                        .iter()
                        .zip(m.u(k, a))
                        .map(|(x, y)| x.conj() * y)
                        .sum();
                    assert!((f[(a, b)] - g).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn product_form_g_is_projector() {
        // |k⟩ → |1⟩|k⟩
        let n = 3;
        let columns = (0..n)
            .map(|k| {
                let mut c = vec![ZERO; n * n];
                c[k] = ONE;
                c
            })
            .collect();
        let m = Masker::new(n, n, columns).unwrap();
        let mut rng = substream(4, 4);
        let p = PureState::normalized(complex_gaussian(n, 1, &mut rng).iter().copied().collect())
            .unwrap();
        let g = g_matrix(&m, &p).unwrap();
        for a in 0..n {
            for b in 0..n {
                assert!((g[(a, b)] - p.amps()[a] * p.amps()[b].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn random_reduced_states_are_density_matrices() {
        for seed in 0..50 {
            let mut rng = substream(seed, 7);
            let n = 2 + (seed % 4) as usize;
            let m = Masker::haar_random(n, n, &mut rng);
            let p =
                PureState::normalized(complex_gaussian(n, 1, &mut rng).iter().copied().collect())
                    .unwrap();
            let img = m.apply(&p).unwrap();
            assert!(partial_trace_a(&img).is_valid(1e-12));
            assert!(partial_trace_b(&img).is_valid(1e-12));
            let g = DensityMatrix::new(g_matrix(&m, &p).unwrap(), 1e-12).unwrap();
            assert!((g.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_on_maskable_family_3d() {
        let m = builtin_example_3d();
        let anchor = families::measure_anchor_3d();
        let states = families::omega_3d(&anchor, 100, 3).unwrap();
        let rep = masking_residual(&m, &states, &angles_to_amplitudes(&anchor)).unwrap();
        assert!(rep.overall_max < 1e-10, "{}", rep.overall_max);
        assert_eq!(rep.per_state.len(), 100);
    }

    #[test]
    fn residual_detects_identity_masker() {
        // |k⟩ → |k⟩|1⟩: ρ_A = |p⟩⟨p|
        let columns = (0..2)
            .map(|k| {
                let mut c = vec![ZERO; 4];
                c[k * 2] = ONE;
                c
            })
            .collect();
        let m = Masker::new(2, 2, columns).unwrap();
        let p = PureState::basis(2, 0);
        let q = PureState::basis(2, 1);
        let rep = masking_residual(&m, &[p.clone(), q], &p).unwrap();
        assert!((rep.overall_max - 1.0).abs() < 1e-15);
        assert_eq!(rep.side, Side::A);
        assert_eq!(rep.per_state[0], 0.0);
    }

    #[test]
    fn singleton_and_empty_sets() {
        let m = builtin_example_4d();
        let p = PureState::basis(4, 2);
        let rep = masking_residual(&m, std::slice::from_ref(&p), &p).unwrap();
        assert_eq!(rep.overall_max, 0.0);
        assert!(is_masked_set(&m, &[p], DEFAULT_TOL).unwrap());
        assert!(is_masked_set(&m, &[], DEFAULT_TOL).unwrap());
    }

    #[test]
    fn example_4d_family_is_masked() {
        let m = builtin_example_4d();
        let states = families::omega_4d(&families::Zeta4::figure_anchor(), 200, 5).unwrap();
        assert_eq!(states.len(), 200);
        assert!(is_masked_set(&m, &states, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn different_circles_are_not_masked() {
        let m = qubit_circle_masker(0.0);
        let a = angles_to_amplitudes(&HyperAngles::new(vec![0.3], vec![0.2]).unwrap());
        let b = angles_to_amplitudes(&HyperAngles::new(vec![0.7], vec![0.2]).unwrap());
        // ρ_A diagonals ½(1 ± sin 2x cos y) differ
        assert!(!is_masked_set(&m, &[a, b], DEFAULT_TOL).unwrap());
    }

    #[test]
    fn circle_masker_example_alpha_zero() {
        let m = qubit_circle_masker(0.0);
        let plus = angles_to_amplitudes(&HyperAngles::new(vec![FRAC_PI_4], vec![0.0]).unwrap());
        let ra = partial_trace_b(&m.apply(&plus).unwrap());
        assert!((ra.matrix()[(0, 0)] - ONE).norm() < 1e-15);
        assert!(ra.matrix()[(1, 1)].norm() < 1e-15);

        // sin 2x cos y = 0 ⇒ maximally mixed on both sides
        let half = CMatrix::identity(2, 2).scale(0.5);
        for i in 0..20 {
            let x = 0.05 + 0.07 * i as f64;
            let p = angles_to_amplitudes(
                &HyperAngles::new(vec![x], vec![std::f64::consts::FRAC_PI_2]).unwrap(),
            );
            let img = m.apply(&p).unwrap();
            assert!(max_abs_diff(partial_trace_b(&img).matrix(), &half) < 1e-15);
            assert!(max_abs_diff(partial_trace_a(&img).matrix(), &half) < 1e-15);
        }
    }
}
