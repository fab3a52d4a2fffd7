//! Two-share secret sharing with a masker: a codeword is encoded into a
//! bipartite state whose shares individually carry no information about it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_trace_norm, CMatrix};
use crate::masker::{BipartiteState, Masker};
use crate::reduce::{masking_residual, partial_trace_a, partial_trace_b, DEFAULT_TOL};
use crate::statespace::PureState;

/// Trace distances below this are reported as zero.
pub const TRACE_DISTANCE_FLOOR: f64 = 1e-12;

/// Decoding fails when the state leaves the masker's range by more than this.
pub const RANGE_TOL: f64 = 1e-6;

/// A codebook verified to be masked by `masker`.
#[derive(Debug, Clone)]
pub struct SecretFamily {
    masker: Masker,
    codebook: Vec<PureState>,
    anchor: PureState,
}

impl SecretFamily {
    pub fn new(masker: Masker, codebook: Vec<PureState>, anchor: PureState) -> Result<Self> {
        if codebook.is_empty() {
            return Err(Error::InvalidParameter("codebook is empty".into()));
        }
        let residual = masking_residual(&masker, &codebook, &anchor)?.overall_max;
        if residual >= DEFAULT_TOL {
            return Err(Error::NotMasked { residual });
        }
        Ok(Self {
            masker,
            codebook,
            anchor,
        })
    }

    pub fn masker(&self) -> &Masker {
        &self.masker
    }

    pub fn codebook(&self) -> &[PureState] {
        &self.codebook
    }

    pub fn anchor(&self) -> &PureState {
        &self.anchor
    }

    pub fn encode(&self, index: usize) -> Result<BipartiteState> {
        let p = self.codebook.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.codebook.len(),
        })?;
        self.masker.apply(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageAudit {
    /// Largest pairwise trace distance between A shares.
    pub side_a: f64,
    pub side_b: f64,
}

impl LeakageAudit {
    pub fn max(&self) -> f64 {
        self.side_a.max(self.side_b)
    }
}

/// `½‖ρ − σ‖₁`, floored to zero below [`TRACE_DISTANCE_FLOOR`].
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            got: sigma.nrows(),
        });
    }
    let d = 0.5 * hermitian_trace_norm(&(rho - sigma));
    Ok(if d < TRACE_DISTANCE_FLOOR {
        0.0
    } else {
        d.min(1.0)
    })
}

/// Leakage of an arbitrary codebook, verified or not.
pub fn codebook_leakage(masker: &Masker, codebook: &[PureState]) -> Result<LeakageAudit> {
    let mut shares = Vec::with_capacity(codebook.len());
    for p in codebook {
        let img = masker.apply(p)?;
        shares.push((
            partial_trace_b(&img).into_matrix(),
            partial_trace_a(&img).into_matrix(),
        ));
    }
    let mut audit = LeakageAudit {
        side_a: 0.0,
        side_b: 0.0,
    };
    for (i, (a1, b1)) in shares.iter().enumerate() {
        for (a2, b2) in &shares[i + 1..] {
            audit.side_a = audit.side_a.max(trace_distance(a1, a2)?);
            audit.side_b = audit.side_b.max(trace_distance(b1, b2)?);
        }
    }
    Ok(audit)
}

pub fn single_share_leakage(family: &SecretFamily) -> Result<LeakageAudit> {
    codebook_leakage(&family.masker, &family.codebook)
}

/// Inverts the masker on its range: `V†ψ`, renormalized.
pub fn joint_decode(state: &BipartiteState, masker: &Masker) -> Result<PureState> {
    if state.da() != masker.da() || state.db() != masker.db() {
        return Err(Error::DimensionMismatch {
            expected: masker.da() * masker.db(),
            got: state.da() * state.db(),
        });
    }
    let v = masker.to_matrix();
    let psi = CMatrix::from_column_slice(state.amps().len(), 1, state.amps());
    let p = v.adjoint() * &psi;
    let residual = (&v * &p - &psi).norm();
    if residual > RANGE_TOL {
        return Err(Error::OutOfRange { residual });
    }
    PureState::normalized(p.as_slice().to_vec())
}

/// Per-codeword fidelity after encode and joint decode.
pub fn decode_fidelities(family: &SecretFamily) -> Result<Vec<f64>> {
    (0..family.codebook.len())
        .map(|i| {
            let decoded = joint_decode(&family.encode(i)?, &family.masker)?;
            Ok(family.codebook[i].fidelity(&decoded))
        })
        .collect()
}
