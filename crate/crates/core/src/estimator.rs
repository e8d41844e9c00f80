//! Pilot-aided estimation of the delay-Doppler profile.
//!
//! Every grid point `(l, alpha)` maps to exactly one receive index per pilot,
//! `(u - loc) mod N`. A path is declared when the mean received energy over
//! all pilots, normalized by the noise variance, reaches the threshold
//! `zeta`. Its gain is the mean of the derotated pilot observations.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::channel::{coupling_phase, effective_matrix, loc_of, path_of_loc, ChannelPath, DDProfile, EffectiveChannel};
use crate::error::{AfdmError, Result};
use crate::layout::{FrameLayout, PilotSpec};
use crate::params::AfdmParams;
use crate::transform::DaftFrame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    zeta: f64,
    noise_var: f64,
    pilot: PilotSpec,
}

impl EstimatorConfig {
    pub fn new(zeta: f64, noise_var: f64, pilot: PilotSpec) -> Result<Self> {
        if !(zeta > 0.0) || !zeta.is_finite() {
            return Err(AfdmError::InvalidArgument(format!("threshold {zeta} must be positive")));
        }
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return Err(AfdmError::InvalidArgument(format!(
                "noise variance {noise_var} must be positive"
            )));
        }
        Ok(EstimatorConfig {
            zeta,
            noise_var,
            pilot,
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn pilot(&self) -> &PilotSpec {
        &self.pilot
    }
}

/// One accepted path with its detection statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDecision {
    pub path: ChannelPath,
    /// Mean pilot-footprint energy over the noise variance.
    pub statistic: f64,
    pub pilot_count_used: usize,
}

/// Coefficient linking a pilot at slot `u` to receive index `p` through the
/// path `(l, alpha)`. For `u = 0` this is `exp(i 2π/N (N c1 l² - N c2 p²))`.
pub fn phase_factor(l: usize, alpha: i64, p: usize, u: usize, params: &AfdmParams) -> Result<Complex64> {
    let n = params.n() as i64;
    let loc = loc_of(&ChannelPath::new(l, alpha, Complex64::default()), params);
    if p >= params.n() || (u as i64 - loc).rem_euclid(n) as usize != p {
        return Err(AfdmError::InvalidArgument(format!(
            "index {p} is not reached from slot {u} by path (l={l}, alpha={alpha})"
        )));
    }
    Ok(coupling_phase(params, l, u, p))
}

/// Maps a receive index in the footprint of the pilot at `u` to the path
/// `(l, alpha)` that lands there.
pub fn dd_from_rx_index(m: usize, u: usize, params: &AfdmParams) -> Result<(usize, i64)> {
    let n = params.n() as i64;
    let a = params.alpha_max() as i64;
    let hi = params.q() as i64 - a;
    let shift = (u as i64 - m as i64).rem_euclid(n);
    let loc = if shift <= hi {
        shift
    } else if shift - n >= -a {
        shift - n
    } else {
        return Err(AfdmError::InvalidArgument(format!(
            "index {m} lies outside the footprint of the pilot at {u}"
        )));
    };
    Ok(path_of_loc(loc, params))
}

/// Threshold detection and gain estimation over every grid point.
///
/// Returns `None` for the profile when nothing clears the threshold.
pub fn estimate_profile(
    y: &DaftFrame,
    layout: &FrameLayout,
    config: &EstimatorConfig,
    params: &AfdmParams,
) -> Result<(Option<DDProfile>, Vec<PathDecision>)> {
    let n = params.n();
    if y.len() != n {
        return Err(AfdmError::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let pilots = layout.pilots();
    if pilots.is_empty() {
        return Err(AfdmError::InvalidArgument("layout carries no pilot".into()));
    }
    let np = pilots.len() as f64;
    let xp = config.pilot.symbol();
    let a = params.alpha_max() as i64;

    let mut decisions = Vec::new();
    for l in 0..=params.l_max() {
        for alpha in -a..=a {
            let loc = loc_of(&ChannelPath::new(l, alpha, Complex64::default()), params);
            let mut energy = 0.0;
            let mut gain = Complex64::new(0.0, 0.0);
            for &(_, u) in &pilots {
                let p = (u as i64 - loc).rem_euclid(n as i64) as usize;
                energy += y[p].norm_sqr();
                gain += y[p] / (coupling_phase(params, l, u, p) * xp);
            }
            let statistic = energy / np / config.noise_var;
            if statistic >= config.zeta {
                decisions.push(PathDecision {
                    path: ChannelPath::new(l, alpha, gain / np),
                    statistic,
                    pilot_count_used: pilots.len(),
                });
            }
        }
    }
    if decisions.is_empty() {
        return Ok((None, decisions));
    }
    let paths = decisions.iter().map(|d| d.path).collect();
    Ok((Some(DDProfile::new(paths, params)?), decisions))
}

/// DAFT-domain channel implied by an estimated profile.
pub fn reconstruct_channel(estimated: &DDProfile, params: &AfdmParams) -> EffectiveChannel {
    effective_matrix(estimated, params)
}

/// Decisions as CSV rows `l,alpha,re_h,im_h,statistic`, with header.
pub fn decisions_csv(decisions: &[PathDecision]) -> String {
    let mut out = String::from("l,alpha,re_h,im_h,statistic\n");
    for d in decisions {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            d.path.l, d.path.alpha, d.path.h.re, d.path.h.im, d.statistic
        );
    }
    out
}
