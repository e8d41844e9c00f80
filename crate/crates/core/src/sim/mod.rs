//! Monte Carlo BER sweeps, overhead tables and their CSV form.

mod config;
mod link;

pub use config::{LinkScheme, SimConfig};
pub use link::NOMINAL_N0;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AfdmError, Result};
use crate::layout::{build_layout, overhead_afdm, overhead_otfs, Scheme, SlotRole};
use crate::params::AfdmParams;
use link::{Link, PointSetup, TrialOutcome};

/// Trials handed to the worker pool at a time. Fixed so that early stopping
/// does not depend on the number of workers.
const BATCH: u64 = 64;

/// Outcome of one `(snr_d, zeta)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub snr_d_db: f64,
    /// `None` with ideal CSI.
    pub zeta: Option<f64>,
    pub snr_p_db: f64,
    pub scheme: String,
    pub frames: u64,
    pub data_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub estimator_calls: u64,
    pub failed_estimates: u64,
}

/// One line of the result CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub snr_d_db: f64,
    pub zeta: Option<f64>,
    pub snr_p_db: f64,
    pub scheme: String,
    pub frames: u64,
    pub data_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
}

impl From<&SimResult> for CsvRow {
    fn from(r: &SimResult) -> Self {
        CsvRow {
            snr_d_db: r.snr_d_db,
            zeta: r.zeta,
            snr_p_db: r.snr_p_db,
            scheme: r.scheme.clone(),
            frames: r.frames,
            data_bits: r.data_bits,
            bit_errors: r.bit_errors,
            ber: r.ber,
            seed: r.seed,
        }
    }
}

fn run_point(link: &Link, snr_d_db: f64, zeta: Option<f64>) -> Result<SimResult> {
    let config = link.config();
    let started = Instant::now();
    let point = PointSetup::new(snr_d_db, config.snr_p_db, zeta)?;
    let trials = config.trials as u64;
    let mut total = TrialOutcome::default();
    let mut frames = 0;
    let mut next = 0;
    'batches: while next < trials {
        let end = (next + BATCH).min(trials);
        let outcomes: Vec<Result<TrialOutcome>> =
            (next..end).into_par_iter().map(|k| link.run_trial(&point, k)).collect();
        for outcome in outcomes {
            let o = outcome?;
            total.bits += o.bits;
            total.errors += o.errors;
            total.estimator_calls += o.estimator_calls;
            total.failed_estimates += o.failed_estimates;
            frames += 1;
            if config.min_bit_errors > 0 && total.errors >= config.min_bit_errors {
                break 'batches;
            }
        }
        next = end;
    }
    Ok(SimResult {
        snr_d_db,
        zeta,
        snr_p_db: config.snr_p_db,
        scheme: config.scheme.to_string(),
        frames,
        data_bits: total.bits,
        bit_errors: total.errors,
        ber: if total.bits == 0 { 0.0 } else { total.errors as f64 / total.bits as f64 },
        seed: config.seed,
        config_hash: config.hash(),
        wall_time_s: started.elapsed().as_secs_f64(),
        estimator_calls: total.estimator_calls,
        failed_estimates: total.failed_estimates,
    })
}

/// One row per `(snr_d, zeta)` pair, SNR outermost. Ideal CSI ignores the
/// zeta list and gives one row per SNR.
pub fn run_ber_sweep(config: &SimConfig) -> Result<Vec<SimResult>> {
    let link = Link::new(config)?;
    let zetas: Vec<Option<f64>> = if config.ideal_csi {
        vec![None]
    } else {
        config.zeta.iter().copied().map(Some).collect()
    };
    let mut rows = Vec::new();
    for &snr in &config.snr_d_db {
        for &zeta in &zetas {
            rows.push(run_point(&link, snr, zeta)?);
        }
    }
    Ok(rows)
}

/// BER against the threshold at a single data SNR.
pub fn run_threshold_sweep(config: &SimConfig) -> Result<Vec<SimResult>> {
    if config.snr_d_db.len() != 1 {
        return Err(AfdmError::Config(format!(
            "threshold sweep needs exactly one snr_d_db value, got {}",
            config.snr_d_db.len()
        )));
    }
    if config.ideal_csi {
        return Err(AfdmError::Config("threshold sweep needs estimated CSI".into()));
    }
    run_ber_sweep(config)
}

/// BER sweep of a MIMO link.
pub fn run_mimo_ber(config: &SimConfig) -> Result<Vec<SimResult>> {
    if !matches!(config.scheme, LinkScheme::Mimo { .. }) {
        return Err(AfdmError::Config(format!("expected a mimo scheme, got {}", config.scheme)));
    }
    run_ber_sweep(config)
}

/// Threshold with the lowest BER; the smallest such threshold on ties.
pub fn argmin_zeta(rows: &[SimResult]) -> Option<f64> {
    rows.iter()
        .filter_map(|r| r.zeta.map(|z| (z, r.ber)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .map(|(z, _)| z)
}

pub fn write_csv<W: Write>(rows: &[SimResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(AfdmError::from)).collect()
}

/// Pilot and guard overhead of AFDM against OTFS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadRow {
    pub n_t: usize,
    pub alpha_max: usize,
    pub l_max: usize,
    pub o_afdm: usize,
    pub o_otfs: usize,
    pub ratio: f64,
}

/// Non-data slots of a frame with `n_t` pilots and the minimal data margin,
/// counted from an actual layout.
fn layout_overhead(n_t: usize, alpha_max: usize, l_max: usize) -> Result<usize> {
    let q = 2 * l_max * alpha_max + 2 * alpha_max + l_max;
    let n = (n_t + 1) * (q + 1);
    let params = AfdmParams::new(n, alpha_max, l_max, None)?;
    let layouts = build_layout(Scheme::Mimo(n_t), &params, true)?;
    let data = layouts[0].data_slots().len();
    let pilots = layouts
        .iter()
        .flat_map(|l| l.roles().iter())
        .filter(|r| matches!(r, SlotRole::Pilot { .. }))
        .count();
    if pilots != n_t {
        return Err(AfdmError::Numerical(format!("layout has {pilots} pilots, expected {n_t}")));
    }
    Ok(n - data)
}

/// Every combination of the three ranges, `n_t` outermost.
pub fn overhead_report(
    n_t: std::ops::RangeInclusive<usize>,
    alpha_max: std::ops::RangeInclusive<usize>,
    l_max: std::ops::RangeInclusive<usize>,
) -> Result<Vec<OverheadRow>> {
    if *n_t.start() == 0 {
        return Err(AfdmError::InvalidArgument("n_t must start at 1".into()));
    }
    let mut rows = Vec::new();
    for nt in n_t {
        for a in alpha_max.clone() {
            for l in l_max.clone() {
                let q = 2 * l * a + 2 * a + l;
                let params = AfdmParams::new((nt + 1) * (q + 1), a, l, None)?;
                let o_afdm = overhead_afdm(&params, nt);
                let counted = layout_overhead(nt, a, l)?;
                if counted != o_afdm {
                    return Err(AfdmError::Numerical(format!(
                        "overhead {o_afdm} disagrees with {counted} counted slots at (N_t, alpha, l) = ({nt}, {a}, {l})"
                    )));
                }
                let o_otfs = overhead_otfs(l, a, nt);
                rows.push(OverheadRow {
                    n_t: nt,
                    alpha_max: a,
                    l_max: l,
                    o_afdm,
                    o_otfs,
                    ratio: o_afdm as f64 / o_otfs as f64,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_overhead_csv<W: Write>(rows: &[OverheadRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
