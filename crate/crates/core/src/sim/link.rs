//! One simulated frame: channel draw, transmission, estimation, detection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{LinkScheme, SimConfig};
use crate::channel::{add_awgn, effective_matrix, generate_profile, propagate, DDProfile, EffectiveChannel};
use crate::detector::{count_ber, lmmse_equalize, qpsk_demod, qpsk_mod, DetectorConfig};
use crate::error::{AfdmError, Result};
use crate::estimator::{estimate_profile, reconstruct_channel, EstimatorConfig};
use crate::layout::{assemble_frame, build_layout, FrameLayout, PilotSpec, SlotRole};
use crate::transform::{add_cpp, daft, idaft, remove_cpp, DaftFrame, TimeSignal};

/// Noise variance handed to the estimator and detector when the channel
/// itself is noiseless.
pub const NOMINAL_N0: f64 = 1e-12;

const CHANNEL_STREAM: u64 = 0;
const BITS_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Random stream of one trial. Every trial and purpose gets its own ChaCha
/// stream, so points of a sweep see the same channels, bits and noise shapes.
pub(crate) fn trial_rng(seed: u64, trial: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * 4 + purpose);
    rng
}

/// Energies of one sweep point under the N0 = 1 convention.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointSetup {
    pub es: f64,
    pub channel_noise: f64,
    pub n0: f64,
    pub pilot: PilotSpec,
    pub zeta: Option<f64>,
}

impl PointSetup {
    pub fn new(snr_d_db: f64, snr_p_db: f64, zeta: Option<f64>) -> Result<Self> {
        let (es, channel_noise, n0) = if snr_d_db == f64::INFINITY {
            (1.0, 0.0, NOMINAL_N0)
        } else {
            (10f64.powf(snr_d_db / 10.0), 1.0, 1.0)
        };
        Ok(PointSetup {
            es,
            channel_noise,
            n0,
            pilot: PilotSpec::from_snr_db(snr_p_db, 1.0)?,
            zeta,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct TrialOutcome {
    pub bits: u64,
    pub errors: u64,
    pub estimator_calls: u64,
    pub failed_estimates: u64,
}

/// Frame structure shared by every trial of a run.
#[derive(Debug, Clone)]
pub(crate) struct Link {
    config: SimConfig,
    n_tx: usize,
    n_rx: usize,
    /// Pilot-bearing layouts, one per transmitter.
    pilot_layouts: Vec<FrameLayout>,
    /// Layouts of the frame carrying data, one per transmitter.
    data_layouts: Vec<FrameLayout>,
}

impl Link {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let params = &config.params;
        let (n_tx, n_rx) = config.scheme.antennas();
        let two_frames = config.scheme == LinkScheme::Spa;
        let pilot_layouts = build_layout(config.scheme.layout_scheme(), params, !two_frames)?;
        let data_layouts = if two_frames {
            vec![FrameLayout::data_only(params)]
        } else {
            pilot_layouts.clone()
        };
        Ok(Link {
            config: config.clone(),
            n_tx,
            n_rx,
            pilot_layouts,
            data_layouts,
        })
    }

    pub fn run_trial(&self, point: &PointSetup, trial: u64) -> Result<TrialOutcome> {
        let params = &self.config.params;
        let seed = self.config.seed;
        let mut channel_rng = trial_rng(seed, trial, CHANNEL_STREAM);
        let mut bits_rng = trial_rng(seed, trial, BITS_STREAM);
        let mut noise_rng = trial_rng(seed, trial, NOISE_STREAM);

        let mut profiles = Vec::with_capacity(self.n_rx);
        for _ in 0..self.n_rx {
            let row = (0..self.n_tx)
                .map(|_| generate_profile(&self.config.pdp, params, &mut channel_rng))
                .collect::<Result<Vec<_>>>()?;
            profiles.push(row);
        }

        let mut bits = Vec::with_capacity(self.n_tx);
        let mut data_signals = Vec::with_capacity(self.n_tx);
        for layout in &self.data_layouts {
            let b: Vec<u8> = (0..2 * layout.data_slots().len())
                .map(|_| bits_rng.random::<u8>() & 1)
                .collect();
            let x = assemble_frame(layout, &point.pilot, &qpsk_mod(&b, point.es)?)?;
            data_signals.push(self.transmit(&x)?);
            bits.push(b);
        }

        let pilot_frames = if self.config.scheme == LinkScheme::Spa {
            let signals = self
                .pilot_layouts
                .iter()
                .map(|layout| self.transmit(&assemble_frame(layout, &point.pilot, &[])?))
                .collect::<Result<Vec<_>>>()?;
            Some(self.receive_all(&signals, &profiles, point, &mut noise_rng)?)
        } else {
            None
        };
        let ys = self.receive_all(&data_signals, &profiles, point, &mut noise_rng)?;
        let estimation_frames = pilot_frames.as_ref().unwrap_or(&ys);

        let mut outcome = TrialOutcome::default();
        let channels = self.channels(&profiles, estimation_frames, point, &mut outcome)?;
        let detector = DetectorConfig::new(point.es, point.n0)?;

        if let LinkScheme::Downlink { .. } = self.config.scheme {
            let layout = &self.data_layouts[0];
            for (user, y) in ys.iter().enumerate() {
                let owned: Vec<usize> = layout
                    .data_slots()
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| layout.roles()[s] == SlotRole::Data { owner: user })
                    .map(|(k, _)| k)
                    .collect();
                let sent: Vec<u8> = owned.iter().flat_map(|&k| [bits[0][2 * k], bits[0][2 * k + 1]]).collect();
                outcome.bits += sent.len() as u64;
                let Some(h) = &channels[user][0] else {
                    outcome.errors += sent.len() as u64 / 2;
                    continue;
                };
                let symbols = lmmse_equalize(
                    std::slice::from_ref(y),
                    &[vec![h.clone()]],
                    std::slice::from_ref(layout),
                    &detector,
                    &point.pilot,
                )?;
                let mine: Vec<_> = owned.iter().map(|&k| symbols[0][k]).collect();
                outcome.errors += self.score(&sent, &mine)?;
            }
            return Ok(outcome);
        }

        let total: u64 = bits.iter().map(|b| b.len() as u64).sum();
        outcome.bits = total;
        let known: Option<Vec<Vec<EffectiveChannel>>> =
            channels.into_iter().map(|row| row.into_iter().collect()).collect();
        let Some(known) = known else {
            outcome.errors = total / 2;
            return Ok(outcome);
        };
        let symbols = lmmse_equalize(&ys, &known, &self.data_layouts, &detector, &point.pilot)?;
        for (sent, est) in bits.iter().zip(&symbols) {
            outcome.errors += self.score(sent, est)?;
        }
        Ok(outcome)
    }

    fn transmit(&self, x: &DaftFrame) -> Result<TimeSignal> {
        let params = &self.config.params;
        add_cpp(&idaft(x, params)?, self.config.cpp_len, params)
    }

    fn receive_all(
        &self,
        signals: &[TimeSignal],
        profiles: &[Vec<DDProfile>],
        point: &PointSetup,
        rng: &mut impl Rng,
    ) -> Result<Vec<DaftFrame>> {
        let params = &self.config.params;
        profiles
            .iter()
            .map(|row| {
                let mut r = TimeSignal::zeros(signals[0].len());
                for (s, profile) in signals.iter().zip(row) {
                    let out = propagate(s, profile, params)?;
                    for (acc, v) in r.iter_mut().zip(out.iter()) {
                        *acc += v;
                    }
                }
                add_awgn(&mut r, point.channel_noise, rng)?;
                let y = daft(&remove_cpp(&r, self.config.cpp_len, params)?, params)?;
                if !y.is_finite() {
                    return Err(AfdmError::Numerical("received frame is not finite".into()));
                }
                Ok(y)
            })
            .collect()
    }

    /// Channel matrices per (receiver, transmitter); `None` where the
    /// estimator found no path.
    fn channels(
        &self,
        profiles: &[Vec<DDProfile>],
        frames: &[DaftFrame],
        point: &PointSetup,
        outcome: &mut TrialOutcome,
    ) -> Result<Vec<Vec<Option<EffectiveChannel>>>> {
        let params = &self.config.params;
        let Some(zeta) = point.zeta.filter(|_| !self.config.ideal_csi) else {
            return Ok(profiles
                .iter()
                .map(|row| row.iter().map(|p| Some(effective_matrix(p, params))).collect())
                .collect());
        };
        let est = EstimatorConfig::new(zeta, point.n0, point.pilot)?;
        let mut out = Vec::with_capacity(frames.len());
        for y in frames {
            let mut row = Vec::with_capacity(self.n_tx);
            for layout in &self.pilot_layouts {
                outcome.estimator_calls += 1;
                let (profile, _) = estimate_profile(y, layout, &est, params)?;
                if profile.is_none() {
                    outcome.failed_estimates += 1;
                }
                row.push(profile.map(|p| reconstruct_channel(&p, params)));
            }
            out.push(row);
        }
        Ok(out)
    }

    fn score(&self, sent: &[u8], symbols: &[num_complex::Complex64]) -> Result<u64> {
        if symbols.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(AfdmError::Numerical("equalized symbols are not finite".into()));
        }
        let (errors, _) = count_ber(sent, &qpsk_demod(symbols))?;
        Ok(errors as u64)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }
}
