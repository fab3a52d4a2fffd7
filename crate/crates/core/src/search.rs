//! Projected gradient descent over isometries for a masker of a given state
//! set.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_constrained, LinearConstraint};
use crate::linalg::{haar_isometry, orthonormalize, substream, CMatrix, ZERO};
use crate::masker::Masker;
use crate::statespace::PureState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the objective falls below this.
    pub tol: f64,
    pub seed: u64,
    /// States sampled from a constraint set before optimizing.
    pub samples: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            step: 0.2,
            max_iter: 2000,
            tol: 1e-10,
            seed: 0,
            samples: 20,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || self.max_iter == 0 || self.samples == 0 {
            return Err(Error::InvalidParameter(
                "search needs step > 0, max_iter ≥ 1 and samples ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub masker: Masker,
    pub objective: f64,
    /// Objective before the first step and after each iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn check_states(states: &[PureState], da: usize) -> Result<()> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("state set is empty".into()));
    }
    if let Some(p) = states.iter().find(|p| p.dim() != da) {
        return Err(Error::DimensionMismatch {
            expected: da,
            got: p.dim(),
        });
    }
    Ok(())
}

/// Image of `p` under the `(dA·dB) × dA` matrix `v`, as a `dA × dB` matrix.
fn image(v: &CMatrix, p: &PureState, da: usize, db: usize) -> CMatrix {
    let mut psi = CMatrix::zeros(da, db);
    for (k, pk) in p.amps().iter().enumerate() {
        for j in 0..da {
            for m in 0..db {
                psi[(j, m)] += v[(j * db + m, k)] * pk;
            }
        }
    }
    psi
}

/// Objective and, optionally, its Wirtinger gradient with respect to the
/// conjugated entries of `v`.
fn evaluate(
    v: &CMatrix,
    states: &[PureState],
    da: usize,
    db: usize,
    grad: bool,
) -> (f64, Option<CMatrix>) {
    let images: Vec<CMatrix> = states.iter().map(|p| image(v, p, da, db)).collect();
    // ρ_A = ΨΨ†, ρ_B = (Ψ†Ψ)ᵀ
    let rho_a: Vec<CMatrix> = images.iter().map(|x| x * x.adjoint()).collect();
    let rho_b: Vec<CMatrix> = images
        .iter()
        .map(|x| (x.adjoint() * x).transpose())
        .collect();
    let s = states.len() as f64;
    let mean = |rs: &[CMatrix]| {
        rs.iter()
            .fold(CMatrix::zeros(rs[0].nrows(), rs[0].ncols()), |acc, r| {
                acc + r
            })
            / Complex64::new(s, 0.0)
    };
    let (mean_a, mean_b) = (mean(&rho_a), mean(&rho_b));
    let mut j = 0.0;
    let mut g = grad.then(|| CMatrix::zeros(da * db, da));
    for ((psi, ra), (rb, p)) in images.iter().zip(&rho_a).zip(rho_b.iter().zip(states)) {
        let dev_a = ra - &mean_a;
        let dev_b = rb - &mean_b;
        j += dev_a.norm_squared() + dev_b.norm_squared();
        if let Some(g) = g.as_mut() {
            let x = (&dev_a * psi + psi * dev_b.transpose()) * Complex64::new(2.0, 0.0);
            for (k, pk) in p.amps().iter().enumerate() {
                let c = pk.conj();
                for jj in 0..da {
                    for m in 0..db {
                        g[(jj * db + m, k)] += x[(jj, m)] * c;
                    }
                }
            }
        }
    }
    (j, g)
}

/// `Σ_s ‖ρ_A(s) − ρ̄_A‖²_F + ‖ρ_B(s) − ρ̄_B‖²_F`.
pub fn masking_objective(m: &Masker, states: &[PureState]) -> Result<f64> {
    check_states(states, m.da())?;
    Ok(evaluate(&m.to_matrix(), states, m.da(), m.db(), false).0)
}

/// `∂J/∂ā` in the masker's coefficient layout. The real-coordinate
/// gradient is `(2 Re, 2 Im)` of this.
pub fn objective_gradient(m: &Masker, states: &[PureState]) -> Result<Vec<Complex64>> {
    check_states(states, m.da())?;
    let (da, db) = (m.da(), m.db());
    let g = evaluate(&m.to_matrix(), states, da, db, true)
        .1
        .expect("gradient requested");
    let mut out = vec![ZERO; da * da * db];
    for k in 0..da {
        for r in 0..da * db {
            out[k * da * db + r] = g[(r, k)];
        }
    }
    Ok(out)
}

/// Steepest descent on the Wirtinger gradient with QR retraction. The step
/// halves until the objective does not increase and doubles (up to
/// `config.step`) after each accepted step.
pub fn optimize_masker(
    states: &[PureState],
    dims: (usize, usize),
    config: &SearchConfig,
) -> Result<SearchResult> {
    config.validate()?;
    let (da, db) = dims;
    if db == 0 || da == 0 {
        return Err(Error::InvalidParameter(
            "dimensions must be positive".into(),
        ));
    }
    check_states(states, da)?;
    let mut v = haar_isometry(da * db, da, &mut substream(config.seed, 0));
    let (mut j, mut g) = evaluate(&v, states, da, db, true);
    let mut trace = vec![j];
    let mut step = config.step;
    let mut converged = j < config.tol;
    while !converged && trace.len() <= config.max_iter {
        let grad = g.take().expect("gradient present");
        let mut accepted = None;
        for _ in 0..60 {
            let cand = orthonormalize(&(&v - &grad * Complex64::new(step, 0.0)));
            let (jc, gc) = evaluate(&cand, states, da, db, true);
            if jc <= j {
                accepted = Some((cand, jc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, jc, gc)) = accepted else {
            trace.push(j);
            break;
        };
        v = cand;
        j = jc;
        g = gc;
        trace.push(j);
        step = (2.0 * step).min(config.step);
        converged = j < config.tol;
    }
    Ok(SearchResult {
        masker: Masker::from_matrix_unchecked(da, db, &v)?,
        objective: j,
        trace,
        converged,
    })
}

/// Samples `config.samples` states from the constraint set and searches for
/// a masker of them with `dB = dA = n`.
pub fn find_masker_for_circle(
    constraints: &[LinearConstraint],
    n: usize,
    config: &SearchConfig,
) -> Result<SearchResult> {
    config.validate()?;
    let states = sample_constrained(constraints, n, config.samples, config.seed, 1e-12)?;
    optimize_masker(&states, (n, n), config)
}
