//! Isometric maskers `|k⟩ → Σ_j |j⟩ ⊗ |u_kj⟩` and their Gram data.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{haar_isometry, isometry_defect, CMatrix, ONE, ZERO};
use crate::statespace::{PureState, NORM_TOL};

/// Isometry tolerance used when loading or constructing maskers from data.
pub const LOAD_TOL: f64 = 1e-9;

/// An operator from an `dA`-dimensional system into `A ⊗ B`, stored by
/// coefficients `a[k][j][m]`: input basis `k`, A-output `j`, B-output `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Masker {
    da: usize,
    db: usize,
    coeffs: Vec<Complex64>,
}

/// A pure state of `A ⊗ B`, flat index `j · dB + m` for `|j⟩_A |m⟩_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    da: usize,
    db: usize,
    amps: Vec<Complex64>,
}

impl BipartiteState {
    pub fn new(da: usize, db: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != da * db {
            return Err(Error::DimensionMismatch {
                expected: da * db,
                got: amps.len(),
            });
        }
        let deviation = (amps.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
        if !(deviation <= NORM_TOL) {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { da, db, amps })
    }

    pub(crate) fn from_raw(da: usize, db: usize, amps: Vec<Complex64>) -> Self {
        Self { da, db, amps }
    }

    pub fn da(&self) -> usize {
        self.da
    }

    pub fn db(&self) -> usize {
        self.db
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, j: usize, m: usize) -> Complex64 {
        self.amps[j * self.db + m]
    }

    pub fn inner(&self, other: &BipartiteState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// All inner products `G[t][s][l][k] = ⟨u_tl | u_sk⟩`, with `t, s` ranging
/// over input labels and `l, k` over output labels of the traced-out side's
/// partner.
#[derive(Debug, Clone, PartialEq)]
pub struct GramTensor {
    inputs: usize,
    outputs: usize,
    entries: Vec<Complex64>,
}

impl GramTensor {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize, l: usize, k: usize) -> Complex64 {
        let (ni, no) = (self.inputs, self.outputs);
        self.entries[((t * ni + s) * no + l) * no + k]
    }

    fn build(
        inputs: usize,
        outputs: usize,
        f: impl Fn(usize, usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut entries = Vec::with_capacity(inputs * inputs * outputs * outputs);
        for t in 0..inputs {
            for s in 0..inputs {
                for l in 0..outputs {
                    for k in 0..outputs {
                        entries.push(f(t, s, l, k));
                    }
                }
            }
        }
        Self {
            inputs,
            outputs,
            entries,
        }
    }
}

/// On-disk masker layout: `columns[k][j·dB + m] = [re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskerFile {
    #[serde(rename = "dA")]
    pub da: usize,
    #[serde(rename = "dB")]
    pub db: usize,
    pub columns: Vec<Vec<[f64; 2]>>,
}

impl Masker {
    /// Builds a masker from its `dA` output columns and checks the isometry
    /// condition at [`LOAD_TOL`].
    pub fn new(da: usize, db: usize, columns: Vec<Vec<Complex64>>) -> Result<Self> {
        let m = Self::new_unchecked(da, db, columns)?;
        let deviation = m.isometry_defect();
        if !(deviation <= LOAD_TOL) {
            return Err(Error::NotIsometry { deviation });
        }
        Ok(m)
    }

    /// Builds a masker without the isometry check (shape is still validated).
    pub fn new_unchecked(da: usize, db: usize, columns: Vec<Vec<Complex64>>) -> Result<Self> {
        if da < 2 || db < 1 {
            return Err(Error::InvalidParameter(format!(
                "masker dimensions dA={da}, dB={db}"
            )));
        }
        if columns.len() != da {
            return Err(Error::DimensionMismatch {
                expected: da,
                got: columns.len(),
            });
        }
        let mut coeffs = Vec::with_capacity(da * da * db);
        for col in columns {
            if col.len() != da * db {
                return Err(Error::DimensionMismatch {
                    expected: da * db,
                    got: col.len(),
                });
            }
            coeffs.extend(col);
        }
        Ok(Self { da, db, coeffs })
    }

    /// From a `(dA·dB) × dA` matrix whose columns are the images of `|k⟩`.
    pub fn from_matrix_unchecked(da: usize, db: usize, v: &CMatrix) -> Result<Self> {
        if v.shape() != (da * db, da) {
            return Err(Error::DimensionMismatch {
                expected: da * db,
                got: v.nrows(),
            });
        }
        let columns = (0..da)
            .map(|k| v.column(k).iter().copied().collect())
            .collect();
        Self::new_unchecked(da, db, columns)
    }

    pub fn to_matrix(&self) -> CMatrix {
        let rows = self.da * self.db;
        CMatrix::from_fn(rows, self.da, |r, k| self.coeffs[k * rows + r])
    }

    pub fn da(&self) -> usize {
        self.da
    }

    pub fn db(&self) -> usize {
        self.db
    }

    #[inline]
    pub fn coeff(&self, k: usize, j: usize, m: usize) -> Complex64 {
        self.coeffs[(k * self.da + j) * self.db + m]
    }

    /// Image of `|k⟩`, flattened over `(j, m)`.
    pub fn column(&self, k: usize) -> &[Complex64] {
        let len = self.da * self.db;
        &self.coeffs[k * len..(k + 1) * len]
    }

    /// The B-side vector `|u_kj⟩`.
    pub fn u(&self, k: usize, j: usize) -> &[Complex64] {
        let start = (k * self.da + j) * self.db;
        &self.coeffs[start..start + self.db]
    }

    pub fn isometry_defect(&self) -> f64 {
        isometry_defect(&self.to_matrix())
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.isometry_defect() <= tol
    }

    pub fn apply(&self, p: &PureState) -> Result<BipartiteState> {
        if p.dim() != self.da {
            return Err(Error::DimensionMismatch {
                expected: self.da,
                got: p.dim(),
            });
        }
        let mut out = vec![ZERO; self.da * self.db];
        self.apply_into(p.amps(), &mut out);
        Ok(BipartiteState::from_raw(self.da, self.db, out))
    }

    /// `out = V · amps` without allocation; `out.len() == dA · dB`.
    pub(crate) fn apply_into(&self, amps: &[Complex64], out: &mut [Complex64]) {
        let len = self.da * self.db;
        out.fill(ZERO);
        for (k, a) in amps.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let col = &self.coeffs[k * len..(k + 1) * len];
            for (o, c) in out.iter_mut().zip(col) {
                *o += a * c;
            }
        }
    }

    /// A-side Gram tensor `⟨u_tl | u_sk⟩`; it fixes `ρ_A` as a function of
    /// the input state.
    pub fn gram(&self) -> GramTensor {
        GramTensor::build(self.da, self.da, |t, s, l, k| {
            self.u(t, l)
                .iter()
                .zip(self.u(s, k))
                .map(|(x, y)| x.conj() * y)
                .sum()
        })
    }

    /// B-side analogue `Σ_j conj(a[t][j][l]) · a[s][j][k]`, which fixes `ρ_B`.
    pub fn b_gram(&self) -> GramTensor {
        GramTensor::build(self.da, self.db, |t, s, l, k| {
            (0..self.da)
                .map(|j| self.coeff(t, j, l).conj() * self.coeff(s, j, k))
                .sum()
        })
    }

    /// The same operator with the roles of the A and B outputs exchanged, so
    /// that B-side reduced states of `self` are A-side reduced states of the
    /// result. Requires `dA == dB`.
    pub fn swap_parties(&self) -> Result<Masker> {
        if self.da != self.db {
            return Err(Error::DimensionMismatch {
                expected: self.da,
                got: self.db,
            });
        }
        let n = self.da;
        let mut coeffs = vec![ZERO; self.coeffs.len()];
        for k in 0..n {
            for j in 0..n {
                for m in 0..n {
                    coeffs[(k * n + m) * n + j] = self.coeff(k, j, m);
                }
            }
        }
        Ok(Masker {
            da: n,
            db: n,
            coeffs,
        })
    }

    /// `self ∘ u` for a `dA × dA` unitary `u` acting on the input.
    pub fn precompose(&self, u: &CMatrix) -> Result<Masker> {
        if u.shape() != (self.da, self.da) {
            return Err(Error::DimensionMismatch {
                expected: self.da,
                got: u.nrows(),
            });
        }
        let v = self.to_matrix() * u;
        let m = Masker::from_matrix_unchecked(self.da, self.db, &v)?;
        let deviation = m.isometry_defect();
        if !(deviation <= LOAD_TOL) {
            return Err(Error::NotIsometry { deviation });
        }
        Ok(m)
    }

    /// Haar-random isometry `C^dA → C^dA ⊗ C^dB`.
    pub fn haar_random<R: Rng>(da: usize, db: usize, rng: &mut R) -> Masker {
        let v = haar_isometry(da * db, da, rng);
        Masker::from_matrix_unchecked(da, db, &v).expect("shape is consistent")
    }

    pub fn to_file(&self) -> MaskerFile {
        MaskerFile {
            da: self.da,
            db: self.db,
            columns: (0..self.da)
                .map(|k| self.column(k).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    /// Loads from the file layout; with `allow_non_isometry` the isometry
    /// check is skipped.
    pub fn from_file(file: MaskerFile, allow_non_isometry: bool) -> Result<Masker> {
        let columns = file
            .columns
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|[re, im]| Complex64::new(re, im))
                    .collect()
            })
            .collect();
        if allow_non_isometry {
            Masker::new_unchecked(file.da, file.db, columns)
        } else {
            Masker::new(file.da, file.db, columns)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("masker serializes")
    }

    pub fn from_json(s: &str, allow_non_isometry: bool) -> Result<Masker> {
        Self::from_file(serde_json::from_str(s)?, allow_non_isometry)
    }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Column with the given `(j, m, coefficient)` entries.
fn sparse_column(da: usize, db: usize, entries: &[(usize, usize, Complex64)]) -> Vec<Complex64> {
    let mut col = vec![ZERO; da * db];
    for &(j, m, c) in entries {
        col[j * db + m] += c;
    }
    col
}

/// The three-dimensional example masker:
/// `|1⟩ → |11⟩`, `|2⟩ → (|22⟩ − |33⟩)/√2`, `|3⟩ → (|22⟩ + |33⟩)/√2`.
pub fn builtin_example_3d() -> Masker {
    let s = real(FRAC_1_SQRT_2);
    let columns = vec![
        sparse_column(3, 3, &[(0, 0, ONE)]),
        sparse_column(3, 3, &[(1, 1, s), (2, 2, -s)]),
        sparse_column(3, 3, &[(1, 1, s), (2, 2, s)]),
    ];
    Masker::new(3, 3, columns).expect("tabulated masker is an isometry")
}

/// The four-dimensional example masker with `e^{±iπ/4}` phases.
pub fn builtin_example_4d() -> Masker {
    let s = real(FRAC_1_SQRT_2);
    let plus = Complex64::from_polar(1.0, FRAC_PI_4);
    let minus = Complex64::from_polar(1.0, -FRAC_PI_4);
    let big = 6f64.sqrt() / 4.0;
    let small = 2f64.sqrt() / 4.0;
    // |3⟩(|3⟩ + |4⟩) and |4⟩(|3⟩ − |4⟩), scaled
    let block = |c3: Complex64, c4: Complex64| {
        sparse_column(4, 4, &[(2, 2, c3), (2, 3, c3), (3, 2, c4), (3, 3, -c4)])
    };
    let columns = vec![
        sparse_column(4, 4, &[(0, 0, s), (1, 1, -s)]),
        sparse_column(4, 4, &[(0, 0, s), (1, 1, s)]),
        block(plus * big, minus * small),
        block(-plus * small, minus * big),
    ];
    Masker::new(4, 4, columns).expect("tabulated masker is an isometry")
}

/// Qubit masker for the circle `sin 2x · cos(y − α) = const`:
/// `|0⟩ → (|00⟩ − e^{iα}|11⟩)/√2`, `|1⟩ → (e^{−iα}|00⟩ + |11⟩)/√2`.
pub fn qubit_circle_masker(alpha: f64) -> Masker {
    let s = FRAC_1_SQRT_2;
    let e = Complex64::from_polar(s, alpha);
    let columns = vec![
        sparse_column(2, 2, &[(0, 0, real(s)), (1, 1, -e)]),
        sparse_column(2, 2, &[(0, 0, e.conj()), (1, 1, real(s))]),
    ];
    Masker::new(2, 2, columns).expect("circle masker is an isometry")
}

/// Circle masker pre-composed with an input rotation; it masks the image
/// under `rotation†` of the α-circle.
pub fn qubit_circle_masker_rotated(alpha: f64, rotation: &CMatrix) -> Result<Masker> {
    qubit_circle_masker(alpha).precompose(rotation)
}

/// Block-diagonal masker assembled from qubit maskers.
///
/// For `n = 2N` the input pair `(2k, 2k+1)` maps through `qubit_maskers[k]`
/// into A-outputs `2k, 2k+1` and B-outputs `2k, 2k+1`. For `n = 2N + 1` the
/// first basis state maps to `|1⟩|1⟩` and the blocks shift by one.
pub fn compose_even_odd(qubit_maskers: &[Masker], n: usize) -> Result<Masker> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension {n} < 2")));
    }
    let blocks = n / 2;
    if qubit_maskers.len() != blocks {
        return Err(Error::BlockCountMismatch {
            n,
            expected: blocks,
            got: qubit_maskers.len(),
        });
    }
    if let Some(bad) = qubit_maskers.iter().find(|q| q.da != 2 || q.db != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: bad.da.max(bad.db),
        });
    }
    let offset = n % 2;
    let mut columns = Vec::with_capacity(n);
    if offset == 1 {
        columns.push(sparse_column(n, n, &[(0, 0, ONE)]));
    }
    for (b, q) in qubit_maskers.iter().enumerate() {
        let base = offset + 2 * b;
        for k in 0..2 {
            let mut entries = Vec::with_capacity(4);
            for j in 0..2 {
                for m in 0..2 {
                    entries.push((base + j, base + m, q.coeff(k, j, m)));
                }
            }
            columns.push(sparse_column(n, n, &entries));
        }
    }
    Masker::new(n, n, columns)
}

/// `|k⟩ → |c⟩ ⊗ V|k⟩` for a unit-free A-side vector `c` and a `dB × dA`
/// isometry `v`; an isometry whenever `‖c‖ = 1`.
pub fn product_form_masker(c: &[Complex64], v: &CMatrix) -> Result<Masker> {
    let da = v.ncols();
    let db = v.nrows();
    if c.len() != da {
        return Err(Error::DimensionMismatch {
            expected: da,
            got: c.len(),
        });
    }
    let columns = (0..da)
        .map(|k| {
            let mut col = vec![ZERO; da * db];
            for (j, cj) in c.iter().enumerate() {
                for m in 0..db {
                    col[j * db + m] = cj * v[(m, k)];
                }
            }
            col
        })
        .collect();
    Masker::new(da, db, columns)
}
