//! Monte Carlo estimates of how much of the parameter box lies within `ε`
//! of a maskable set.
//!
//! Sample `i` of a run is drawn from the counter-based stream `(seed, i)`,
//! so estimates are identical for any number of workers.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::{substream, ZERO};
use crate::masker::Masker;
use crate::reduce::AnchoredResidual;
use crate::statespace::{fill_amplitudes, HyperAngles, ParamBox, PureState};

pub const DEFAULT_DELTA: f64 = 1e-3;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MASKGRID_THREADS";

const CHUNK: u64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub epsilon: f64,
    pub fraction: f64,
    pub stderr: f64,
    pub hits: u64,
    pub samples: u64,
    pub seed: u64,
    pub delta: f64,
    /// No sample fell within `epsilon`.
    pub degenerate: bool,
}

impl MeasureEstimate {
    fn new(epsilon: f64, hits: u64, samples: u64, seed: u64, delta: f64) -> Self {
        let fraction = hits as f64 / samples as f64;
        Self {
            epsilon,
            fraction,
            stderr: (fraction * (1.0 - fraction) / samples as f64).sqrt(),
            hits,
            samples,
            seed,
            delta,
            degenerate: hits == 0,
        }
    }
}

/// Least-squares line through `(log ε, log fraction)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% Student-t interval; absent with fewer than three points.
    pub ci: Option<(f64, f64)>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub estimates: Vec<MeasureEstimate>,
    pub fit: Option<SlopeFit>,
    /// Some grid point had zero hits and was left out of the fit.
    pub degenerate_statistics: bool,
}

impl SweepReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Worker pool sized by `MASKGRID_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("{THREADS_ENV}={v} is not a worker count"))
        })?;
        b = b.num_threads(n.max(1));
    }
    b.build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Counts, for each threshold, the samples whose statistic falls below it.
/// `stat` receives the sample's angles and amplitudes. Runs on the current
/// rayon pool.
fn count_hits<F, S>(
    bx: &ParamBox,
    samples: u64,
    seed: u64,
    thresholds: &[f64],
    make: F,
) -> Result<Vec<u64>>
where
    F: Fn() -> S + Sync,
    S: FnMut(&[f64], &[Complex64]) -> f64,
{
    let n = bx.dim();
    let chunks = samples.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stat = make();
            let mut x = vec![0.0; n - 1];
            let mut y = vec![0.0; n - 1];
            let mut amps = vec![ZERO; n];
            let mut hits = vec![0u64; thresholds.len()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = substream(seed, i);
                bx.fill(&mut rng, &mut x, &mut y);
                fill_amplitudes(&x, &y, &mut amps);
                let v = stat(&x, &amps);
                for (h, t) in hits.iter_mut().zip(thresholds) {
                    *h += u64::from(v < *t);
                }
            }
            hits
        })
        .reduce(
            || vec![0u64; thresholds.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        ))
}

fn check_anchor(m: &Masker, anchor: &PureState) -> Result<()> {
    if anchor.dim() != m.da() {
        return Err(Error::DimensionMismatch {
            expected: m.da(),
            got: anchor.dim(),
        });
    }
    Ok(())
}

fn residual_hits(
    m: &Masker,
    anchor: &PureState,
    eps: &[f64],
    samples: u64,
    seed: u64,
    delta: f64,
) -> Result<Vec<u64>> {
    check_anchor(m, anchor)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {e} must be positive"
        )));
    }
    let bx = ParamBox::new(m.da(), delta)?;
    let proto = AnchoredResidual::new(m, anchor)?;
    count_hits(&bx, samples, seed, eps, || {
        let mut r = proto.clone();
        move |_: &[f64], amps: &[Complex64]| r.deviation(amps).0
    })
}

/// Fraction of uniform samples of the δ-shrunken box whose masking residual
/// against `anchor` is below `epsilon`.
pub fn residual_fraction(
    m: &Masker,
    anchor: &PureState,
    epsilon: f64,
    samples: u64,
    seed: u64,
    delta: f64,
) -> Result<MeasureEstimate> {
    let hits =
        thread_pool()?.install(|| residual_hits(m, anchor, &[epsilon], samples, seed, delta))?;
    Ok(MeasureEstimate::new(epsilon, hits[0], samples, seed, delta))
}

fn check_grid(eps: &[f64]) -> Result<()> {
    if eps.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "epsilon grid needs at least 4 points, got {}",
            eps.len()
        )));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "epsilon grid must be strictly decreasing".into(),
        ));
    }
    let ratio = eps[1] / eps[0];
    if eps
        .windows(2)
        .any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-6)
    {
        return Err(Error::InvalidParameter(
            "epsilon grid must be geometric".into(),
        ));
    }
    Ok(())
}

/// Slope of `log fraction` against `log ε` over the smaller-ε half of the
/// estimates, skipping zero-hit points.
pub fn fit_slope(estimates: &[MeasureEstimate]) -> Option<SlopeFit> {
    let half = estimates.len().div_ceil(2);
    let mut sorted: Vec<_> = estimates.iter().collect();
    sorted.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let pts: Vec<(f64, f64)> = sorted[..half]
        .iter()
        .filter(|e| e.hits > 0)
        .map(|e| (e.epsilon.ln(), e.fraction.ln()))
        .collect();
    let k = pts.len();
    if k < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ci = (k >= 3).then(|| {
        let sse: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let se = (sse / (k as f64 - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, k as f64 - 2.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    });
    Some(SlopeFit {
        slope,
        intercept,
        ci,
        points: k,
    })
}

/// Residual fractions over a decreasing geometric `ε` grid, all thresholds
/// counted on one sample set.
pub fn epsilon_sweep(
    m: &Masker,
    anchor: &PureState,
    eps_grid: &[f64],
    samples: u64,
    seed: u64,
    delta: f64,
) -> Result<SweepReport> {
    check_grid(eps_grid)?;
    let hits =
        thread_pool()?.install(|| residual_hits(m, anchor, eps_grid, samples, seed, delta))?;
    let estimates: Vec<_> = eps_grid
        .iter()
        .zip(hits)
        .map(|(&e, h)| MeasureEstimate::new(e, h, samples, seed, delta))
        .collect();
    Ok(SweepReport {
        fit: fit_slope(&estimates),
        degenerate_statistics: estimates.iter().any(|e| e.degenerate),
        estimates,
    })
}

/// Positive-measure control: the band `|cos x_1 − cos x_1⁰| < ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlBand {
    pub estimate: MeasureEstimate,
    /// Exact band volume fraction under the uniform box measure.
    pub analytic: f64,
    /// Small-`ε` approximation `2ε / (|sin x_1⁰| · (π/2 − 2δ))`.
    pub linearized: f64,
    /// `(fraction − analytic) / stderr`, using the analytic variance.
    pub z_score: f64,
}

pub fn control_band_volume(x1: f64, epsilon: f64, delta: f64) -> f64 {
    let (lo, hi) = (delta, FRAC_PI_2 - delta);
    let r0 = x1.cos();
    let a = (r0 + epsilon).min(1.0).acos().max(lo);
    let b = (r0 - epsilon).max(-1.0).acos().min(hi);
    ((b - a).max(0.0)) / (hi - lo)
}

pub fn control_band(
    anchor: &HyperAngles,
    epsilon: f64,
    samples: u64,
    seed: u64,
    delta: f64,
) -> Result<ControlBand> {
    if samples == 0 || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "control band needs samples ≥ 1 and ε > 0".into(),
        ));
    }
    let bx = ParamBox::new(anchor.dim(), delta)?;
    let r0 = anchor.x()[0].cos();
    let hits = thread_pool()?.install(|| {
        count_hits(&bx, samples, seed, &[epsilon], || {
            move |x: &[f64], _: &[Complex64]| (x[0].cos() - r0).abs()
        })
    })?;
    let estimate = MeasureEstimate::new(epsilon, hits[0], samples, seed, delta);
    let analytic = control_band_volume(anchor.x()[0], epsilon, delta);
    let sd = (analytic * (1.0 - analytic) / samples as f64).sqrt();
    Ok(ControlBand {
        estimate,
        analytic,
        linearized: 2.0 * epsilon / (anchor.x()[0].sin().abs() * (FRAC_PI_2 - 2.0 * delta)),
        z_score: (estimate.fraction - analytic) / sd,
    })
}
