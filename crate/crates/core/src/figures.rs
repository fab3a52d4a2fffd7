//! Parameter grids of the example maskable sets, each row re-verified
//! against its masker.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{invariants_3d, solve_y3, solve_zeta1, Zeta4};
use crate::masker::{builtin_example_3d, builtin_example_4d};
use crate::reduce::AnchoredResidual;
use crate::statespace::{angles_to_amplitudes, wrap_phase, HyperAngles};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureData {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Grid points with no real solution.
    pub omitted: usize,
}

impl FigureData {
    pub fn max_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| *r.last().unwrap())
            .fold(0.0, f64::max)
    }

    /// Comma-separated, header row, 17 significant digits, LF endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|v| format_value(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// 17 significant digits in scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// `n` phases covering `[0, 2π)`.
fn phases(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| TAU * i as f64 / n as f64)
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {grid} < 2"
        )));
    }
    Ok(())
}

/// Anchor of the three-dimensional figure, `(0, π/6, 2π/3, π/4)`.
pub fn fig1_anchor() -> HyperAngles {
    HyperAngles::new(vec![0.0, PI / 6.0], vec![2.0 * PI / 3.0, PI / 4.0]).unwrap()
}

/// Points of the three-dimensional example's maskable set through
/// `anchor` with `x_1 = x_1⁰`. When `cos x_1⁰ = 1` every state of that face
/// is the first basis state and the full `(x_2, y_1, y_2)` grid is emitted;
/// otherwise `y_1` is solved on an `(x_2, y_2)` grid.
pub fn fig1(anchor: &HyperAngles, grid: usize) -> Result<FigureData> {
    check_grid(grid)?;
    let (a, b) = invariants_3d(anchor)?;
    let x1 = anchor.x()[0];
    let m = builtin_example_3d();
    let mut eval = AnchoredResidual::new(&m, &angles_to_amplitudes(anchor))?;
    let mut rows = Vec::new();
    let mut omitted = 0;
    let mut push = |x2: f64, y1: f64, y2: f64, rows: &mut Vec<Vec<f64>>| -> Result<()> {
        let p = angles_to_amplitudes(&HyperAngles::new(vec![x1, x2], vec![y1, y2])?);
        rows.push(vec![x1, x2, y1, y2, eval.deviation(p.amps()).0]);
        Ok(())
    };
    if (a - 1.0).abs() < 1e-15 {
        for x2 in linspace(0.0, FRAC_PI_2, grid) {
            for y1 in phases(grid) {
                for y2 in phases(grid) {
                    push(x2, y1, y2, &mut rows)?;
                }
            }
        }
    } else {
        for x2 in linspace(0.0, FRAC_PI_2, grid) {
            for y2 in phases(grid) {
                let ratio = b / (2.0 * x2).sin();
                if !ratio.is_finite() || ratio.abs() > 1.0 {
                    omitted += 1;
                    continue;
                }
                let t = ratio.acos();
                push(x2, wrap_phase(y2 + t), y2, &mut rows)?;
                if t > 0.0 && t < PI {
                    push(x2, wrap_phase(y2 - t), y2, &mut rows)?;
                }
            }
        }
    }
    Ok(FigureData {
        name: "fig1".into(),
        header: ["x1", "x2", "y1", "y2", "residual"]
            .map(String::from)
            .to_vec(),
        rows,
        omitted,
    })
}

/// `(y_1, ζ_1)` on `sin 2ζ_1 cos y_1 = c`, both branches, other block
/// coordinates at the anchor.
pub fn fig2a(anchor: &Zeta4, grid: usize) -> Result<FigureData> {
    check_grid(grid)?;
    let m = builtin_example_4d();
    let mut eval = AnchoredResidual::new(&m, &anchor.state())?;
    let c = anchor.c();
    let mut rows = Vec::new();
    let mut omitted = 0;
    for y1 in phases(grid) {
        let roots = solve_zeta1(c, y1);
        if roots.is_empty() {
            omitted += 1;
        }
        for zeta1 in roots {
            let p = Zeta4 {
                zeta1,
                y1,
                ..*anchor
            }
            .state();
            rows.push(vec![y1, zeta1, eval.deviation(p.amps()).0]);
        }
    }
    Ok(FigureData {
        name: "fig2a".into(),
        header: ["y1", "zeta1", "residual"].map(String::from).to_vec(),
        rows,
        omitted,
    })
}

/// `(y_2, ζ_2, y_3)` on `½ cos 2ζ_2 − (√3/2) sin 2ζ_2 cos(y_3 − y_2) = d`
/// over `y_2 ∈ [0, 2π)`, `ζ_2 ∈ [0, π]`, both branches.
pub fn fig2b(anchor: &Zeta4, grid: usize) -> Result<FigureData> {
    check_grid(grid)?;
    let m = builtin_example_4d();
    let mut eval = AnchoredResidual::new(&m, &anchor.state())?;
    let d = anchor.d();
    let mut rows = Vec::new();
    let mut omitted = 0;
    for y2 in phases(grid) {
        for zeta2 in linspace(0.0, PI, grid) {
            let roots = solve_y3(d, zeta2, y2);
            if roots.is_empty() {
                omitted += 1;
            }
            for y3 in roots {
                let p = Zeta4 {
                    zeta2,
                    y2,
                    y3,
                    ..*anchor
                }
                .state();
                rows.push(vec![y2, zeta2, y3, eval.deviation(p.amps()).0]);
            }
        }
    }
    Ok(FigureData {
        name: "fig2b".into(),
        header: ["y2", "zeta2", "y3", "residual"].map(String::from).to_vec(),
        rows,
        omitted,
    })
}
