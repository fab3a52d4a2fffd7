//! Phase-coefficient probing and the orthogonality cascade that shows no
//! isometry masks a positive-measure set.
//!
//! The cascade works directly on the Gram tensor `G[t][s][l][k] = ⟨u_tl|u_sk⟩`:
//! a surviving cross pair means some reduced entry depends on a relative
//! phase, so the constancy condition can be solved for that phase; if all
//! cross pairs vanish, unequal diagonal blocks make an amplitude solvable;
//! if those coincide too, the masker is a product `|c⟩ ⊗ |w_k⟩` whose B side
//! then fails the same test.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::Part;
use crate::masker::{GramTensor, Masker, LOAD_TOL};
use crate::reduce::f_matrix;
use crate::statespace::{angles_to_amplitudes, HyperAngles};

/// Gram entries at or below this magnitude count as vanishing.
pub const VANISH_TOL: f64 = 1e-10;

/// Dependence of one reduced entry `f_kl` on a single phase `y_j` at a probe
/// point: `f(y_j) = rest + μ cos y_j + ν sin y_j`, real and imaginary parts
/// carried together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseDecomposition {
    pub k: usize,
    pub l: usize,
    pub phase: usize,
    #[serde(serialize_with = "ser_complex")]
    pub rest: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub mu: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub nu: Complex64,
}

fn ser_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl PhaseDecomposition {
    pub fn evaluate(&self, y: f64) -> Complex64 {
        self.rest + self.mu * y.cos() + self.nu * y.sin()
    }

    /// `(rest, μ, ν)` of the chosen part.
    pub fn part(&self, part: Part) -> (f64, f64, f64) {
        (
            part.select(self.rest),
            part.select(self.mu),
            part.select(self.nu),
        )
    }

    pub fn amplitude(&self) -> f64 {
        self.mu.norm().max(self.nu.norm())
    }
}

/// Probes `f_kl` with `y_phase` set to 0, π/2 and π, the other angles taken
/// from `probe`. `phase` indexes `probe.y()`.
pub fn phase_coeffs(
    m: &Masker,
    k: usize,
    l: usize,
    phase: usize,
    probe: &HyperAngles,
) -> Result<PhaseDecomposition> {
    let n = m.da();
    if probe.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: probe.dim(),
        });
    }
    if phase >= n - 1 {
        return Err(Error::IndexOutOfRange {
            index: phase,
            len: n - 1,
        });
    }
    if k >= n || l >= n {
        return Err(Error::IndexOutOfRange {
            index: k.max(l),
            len: n,
        });
    }
    let f = |y: f64| -> Result<Complex64> {
        let p = angles_to_amplitudes(&probe.with_phase(phase, y));
        Ok(f_matrix(m, &p)?[(k, l)])
    };
    let (f0, fh, fp) = (f(0.0)?, f(FRAC_PI_2)?, f(PI)?);
    let rest = (f0 + fp) * 0.5;
    Ok(PhaseDecomposition {
        k,
        l,
        phase,
        rest,
        mu: (f0 - fp) * 0.5,
        nu: fh - rest,
    })
}

/// Roots in `[0, 2π)` of `rest + μ cos y + ν sin y = target` for one part,
/// by bracketing on a uniform grid and bisection.
pub fn solve_single_phase(d: &PhaseDecomposition, part: Part, target: f64) -> Vec<f64> {
    const CELLS: usize = 256;
    let (rest, mu, nu) = d.part(part);
    let g = |y: f64| rest + mu * y.cos() + nu * y.sin() - target;
    let mut roots: Vec<f64> = Vec::new();
    let h = TAU / CELLS as f64;
    for i in 0..CELLS {
        let (mut a, mut b) = (i as f64 * h, (i + 1) as f64 * h);
        let (mut ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            roots.push(a);
            continue;
        }
        if ga * gb > 0.0 {
            continue;
        }
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            let gm = g(mid);
            if gm == 0.0 || b - a < 1e-15 {
                a = mid;
                b = mid;
                break;
            }
            if ga * gm < 0.0 {
                b = mid;
            } else {
                a = mid;
                ga = gm;
            }
        }
        let r = 0.5 * (a + b);
        if r < TAU && roots.last().is_none_or(|&p| r - p > 1e-12) {
            roots.push(r);
        }
    }
    roots
}

/// Terminal step reached by the cascade. Pair and angle indices are 0-based
/// here and 1-based in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// A pair involving the first amplitude survives.
    SolvablePhase {
        s: usize,
        t: usize,
    },
    /// Only pairs away from the first amplitude survive; they depend on
    /// phase differences.
    SolvablePhaseShifted {
        s: usize,
        t: usize,
    },
    /// Cross pairs vanish and diagonal blocks `m`, `m + 1` differ; angle `x_m`
    /// is solvable.
    SolvableAmplitude {
        index: usize,
    },
    ProductFormContradiction,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::SolvablePhase { .. } => "SOLVABLE_PHASE",
            Branch::SolvablePhaseShifted { .. } => "SOLVABLE_PHASE_SHIFTED",
            Branch::SolvableAmplitude { .. } => "SOLVABLE_AMPLITUDE",
            Branch::ProductFormContradiction => "PRODUCT_FORM_CONTRADICTION",
        }
    }

    fn pair(&self) -> Option<[usize; 2]> {
        match *self {
            Branch::SolvablePhase { s, t } | Branch::SolvablePhaseShifted { s, t } => {
                Some([s + 1, t + 1])
            }
            _ => None,
        }
    }

    fn index(&self) -> Option<usize> {
        match *self {
            Branch::SolvableAmplitude { index } => Some(index + 1),
            _ => None,
        }
    }
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Branch", 3)?;
        st.serialize_field("branch", self.name())?;
        st.serialize_field("pair", &self.pair())?;
        st.serialize_field("index", &self.index())?;
        st.end()
    }
}

/// Columns written as `|c⟩ ⊗ |w_k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductForm {
    /// Unit A-side factor, with its pivot entry real and positive.
    pub c: Vec<Complex64>,
    /// B-side factors, one per input.
    pub w: Vec<Vec<Complex64>>,
    /// `λ_m = ⟨u_{1 j0}|u_{1 m}⟩ / ‖u_{1 j0}‖²`, proportional to `c`.
    pub lambda: Vec<Complex64>,
    pub pivot: usize,
}

/// Product-form data recorded when the cascade reaches its last step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFormReport {
    pub form: ProductForm,
    /// Outcome of the first three steps rerun on the B-side Gram tensor.
    pub b_side: Option<Branch>,
    /// B basis index `j*` maximizing `|a_{1 j*}|`, with `a_kj = ⟨j|w_k⟩`.
    pub b_pivot: usize,
    /// `a_{1 j*} · conj(a_{2 j*})`.
    pub cross: Complex64,
    /// `|a_{1 j*}| − |a_{2 j*}|`.
    pub modulus_gap: f64,
}

impl ProductFormReport {
    /// The two B-side conditions for a constant `ρ_B` cannot both hold.
    pub fn contradiction(&self, tol: f64) -> bool {
        self.cross.norm() > tol || self.modulus_gap.abs() > tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeReport {
    pub branch: Branch,
    /// Cross pairs `(s, t)`, `s < t`, with a Gram entry above tolerance.
    pub surviving: Vec<(usize, usize)>,
    pub vanishing: Vec<(usize, usize)>,
    pub product_form: Option<ProductFormReport>,
}

fn one_based(pairs: &[(usize, usize)]) -> Vec<[usize; 2]> {
    pairs.iter().map(|&(s, t)| [s + 1, t + 1]).collect()
}

fn cvec(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl Serialize for CascadeReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Pf {
            c: Vec<[f64; 2]>,
            w: Vec<Vec<[f64; 2]>>,
            lambda: Vec<[f64; 2]>,
            pivot: usize,
            b_side: Option<Branch>,
            b_pivot: usize,
            cross: [f64; 2],
            modulus_gap: f64,
        }
        let pf = self.product_form.as_ref().map(|p| Pf {
            c: cvec(&p.form.c),
            w: p.form.w.iter().map(|w| cvec(w)).collect(),
            lambda: cvec(&p.form.lambda),
            pivot: p.form.pivot + 1,
            b_side: p.b_side,
            b_pivot: p.b_pivot + 1,
            cross: [p.cross.re, p.cross.im],
            modulus_gap: p.modulus_gap,
        });
        let mut st = s.serialize_struct("CascadeReport", 6)?;
        st.serialize_field("branch", self.branch.name())?;
        st.serialize_field("pair", &self.branch.pair())?;
        st.serialize_field("index", &self.branch.index())?;
        st.serialize_field("surviving_pairs", &one_based(&self.surviving))?;
        st.serialize_field("vanishing_pairs", &one_based(&self.vanishing))?;
        st.serialize_field("product_form", &pf)?;
        st.end()
    }
}

fn pair_survives(g: &GramTensor, s: usize, t: usize, tol: f64) -> bool {
    let d = g.outputs();
    (0..d).any(|l| (0..d).any(|k| g.get(t, s, l, k).norm() > tol || g.get(s, t, l, k).norm() > tol))
}

fn split_pairs(g: &GramTensor, tol: f64) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let n = g.inputs();
    let mut surviving = Vec::new();
    let mut vanishing = Vec::new();
    for s in 0..n {
        for t in s + 1..n {
            if pair_survives(g, s, t, tol) {
                surviving.push((s, t));
            } else {
                vanishing.push((s, t));
            }
        }
    }
    (surviving, vanishing)
}

/// Steps 1–3 on one Gram tensor; `None` when every reduced entry is
/// constant over all states.
fn scan_gram(g: &GramTensor, surviving: &[(usize, usize)], tol: f64) -> Option<Branch> {
    if let Some(&(s, t)) = surviving.iter().find(|(s, _)| *s == 0) {
        return Some(Branch::SolvablePhase { s, t });
    }
    if let Some(&(s, t)) = surviving.first() {
        return Some(Branch::SolvablePhaseShifted { s, t });
    }
    let n = g.inputs();
    let d = g.outputs();
    let differs = |a: usize, b: usize| {
        (0..d).any(|l| (0..d).any(|k| (g.get(a, a, l, k) - g.get(b, b, l, k)).norm() > tol))
    };
    (0..n.saturating_sub(1))
        .rev()
        .find(|&m| differs(m, m + 1))
        .map(|index| Branch::SolvableAmplitude { index })
}

/// Pivot `j0` maximizing `‖u_{1 j}‖`, `λ` read off input 1, and the check
/// that every column equals `Σ_m λ_m |m⟩ ⊗ u_{k j0}`.
pub fn product_form_extract(m: &Masker, tol: f64) -> Option<ProductForm> {
    let n = m.da();
    let norm2 = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let pivot = (0..n).max_by(|&a, &b| {
        norm2(m.u(0, a))
            .total_cmp(&norm2(m.u(0, b)))
            .then(b.cmp(&a))
    })?;
    let base = m.u(0, pivot);
    let bn = norm2(base);
    if bn <= tol * tol {
        return None;
    }
    let lambda: Vec<Complex64> = (0..n)
        .map(|j| {
            base.iter()
                .zip(m.u(0, j))
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                / bn
        })
        .collect();
    for k in 0..n {
        let w = m.u(k, pivot);
        for (j, lam) in lambda.iter().enumerate() {
            for (x, y) in m.u(k, j).iter().zip(w) {
                if (x - lam * y).norm() > tol {
                    return None;
                }
            }
        }
    }
    let ln = norm2(&lambda).sqrt();
    let c = lambda.iter().map(|z| z / ln).collect();
    let w = (0..n)
        .map(|k| m.u(k, pivot).iter().map(|z| z * ln).collect())
        .collect();
    Some(ProductForm {
        c,
        w,
        lambda,
        pivot,
    })
}

/// Walks the cascade on `m`.
pub fn cascade_scan(m: &Masker, tol: f64) -> Result<CascadeReport> {
    let defect = m.isometry_defect();
    if defect > LOAD_TOL {
        return Err(Error::NotIsometry { deviation: defect });
    }
    let g = m.gram();
    let (surviving, vanishing) = split_pairs(&g, tol);
    if let Some(branch) = scan_gram(&g, &surviving, tol) {
        return Ok(CascadeReport {
            branch,
            surviving,
            vanishing,
            product_form: None,
        });
    }
    // Every A-side entry is constant: the columns factor.
    let form = product_form_extract(m, tol.max(1e-9)).ok_or_else(|| {
        Error::InvalidParameter("constant reduced state without product form".into())
    })?;
    let gb = m.b_gram();
    let (sb, _) = split_pairs(&gb, tol);
    let b_side = scan_gram(&gb, &sb, tol);
    let a = &form.w;
    let b_pivot = (0..m.db())
        .max_by(|&x, &y| a[0][x].norm().total_cmp(&a[0][y].norm()).then(y.cmp(&x)))
        .unwrap_or(0);
    let (a1, a2) = (
        a[0][b_pivot],
        a.get(1).map_or(Complex64::new(0.0, 0.0), |w| w[b_pivot]),
    );
    Ok(CascadeReport {
        branch: Branch::ProductFormContradiction,
        surviving,
        vanishing,
        product_form: Some(ProductFormReport {
            form,
            b_side,
            b_pivot,
            cross: a1 * a2.conj(),
            modulus_gap: a1.norm() - a2.norm(),
        }),
    })
}
