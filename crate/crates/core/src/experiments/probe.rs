//! Empirical exponent in the reset condition
//! `|ζ_s| < C₁((a₀/a_s)^α + (a_s/a₀)^α)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcz::seeded_rng;
use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::excursion::{excursion_sum, sample_moduli_point, ModuliPoint};
use crate::functions::PointFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub seed: u64,
    /// Moduli coordinates are drawn with denominators up to this.
    pub max_den: i64,
    pub c1: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            seed: 0,
            max_den: 50,
            c1: 1.0,
            alpha_min: 0.0,
            alpha_max: 2.0,
            alpha_step: 0.005,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub samples: u64,
    /// Smallest grid `α` with no violations, or `alpha_max` if there is none.
    pub alpha: f64,
    pub c1: f64,
    pub violations: u64,
    pub satisfied: bool,
    /// Largest `max(a₀/a_s, a_s/a₀)` among the samples.
    pub max_ratio: f64,
}

/// Samples excursions, computes `ζ_s` for `g` exactly, and scans `α` upward
/// for the first value at which the condition holds with the configured `C₁`.
///
/// The right-hand side is increasing in `α`, so the first passing grid value
/// is the smallest.
pub fn condition_probe_alpha<G: PointFunction + ?Sized>(
    g: &G,
    samples: u64,
    cfg: &ProbeConfig,
) -> Result<ProbeReport> {
    let positive = |x: f64| x.is_finite() && x > 0.0;
    if samples == 0
        || cfg.max_den < 1
        || !positive(cfg.alpha_step)
        || !positive(cfg.c1)
        || cfg.alpha_max < cfg.alpha_min
    {
        return Err(Error::InvalidArgument(format!(
            "bad probe configuration {cfg:?} with {samples} samples"
        )));
    }
    let mut rng = seeded_rng(cfg.seed);
    let moduli: Vec<ModuliPoint> = (0..samples)
        .map(|_| sample_moduli_point(&mut rng, cfg.max_den))
        .collect();
    let data: Vec<(f64, f64)> = moduli
        .par_iter()
        .map(|m| {
            let zeta_s = excursion_sum(g, m)?;
            let r = to_f64(&(m.b() / m.a()));
            Ok((r.max(1.0 / r), to_f64(&zeta_s).abs()))
        })
        .collect::<Result<Vec<_>>>()?;

    let violations_at = |alpha: f64| {
        data.iter()
            .filter(|&&(rho, z)| z >= cfg.c1 * (rho.powf(alpha) + rho.powf(-alpha)))
            .count() as u64
    };
    let steps = ((cfg.alpha_max - cfg.alpha_min) / cfg.alpha_step).round() as u64;
    let mut chosen = (cfg.alpha_max, violations_at(cfg.alpha_max), false);
    for k in 0..=steps {
        let alpha = (cfg.alpha_min + k as f64 * cfg.alpha_step).min(cfg.alpha_max);
        let v = violations_at(alpha);
        if v == 0 {
            chosen = (alpha, 0, true);
            break;
        }
    }
    Ok(ProbeReport {
        samples,
        alpha: chosen.0,
        c1: cfg.c1,
        violations: chosen.1,
        satisfied: chosen.2,
        max_ratio: data.iter().map(|d| d.0).fold(1.0, f64::max),
    })
}
