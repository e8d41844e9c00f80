//! QPSK mapping and LMMSE detection over the data slots of one or more
//! transmitters.

mod banded;

pub use banded::HermitianBand;

use num_complex::Complex64;

use crate::channel::EffectiveChannel;
use crate::error::{AfdmError, Result};
use crate::layout::{known_symbols, FrameLayout, PilotSpec};
use crate::transform::DaftFrame;

type Sparse = Vec<(usize, Complex64)>;

/// Mean data symbol energy and noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub es: f64,
    pub n0: f64,
}

impl DetectorConfig {
    pub fn new(es: f64, n0: f64) -> Result<Self> {
        if !(es > 0.0 && es.is_finite() && n0 > 0.0 && n0.is_finite()) {
            return Err(AfdmError::InvalidArgument(format!(
                "symbol energy {es} and noise variance {n0} must be positive"
            )));
        }
        Ok(DetectorConfig { es, n0 })
    }
}

/// Gray-mapped QPSK: `(b0, b1) -> sqrt(Es/2) ((1 - 2 b0) + i (1 - 2 b1))`.
pub fn qpsk_mod(bits: &[u8], es: f64) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(AfdmError::InvalidArgument(format!(
            "QPSK needs an even number of bits, got {}",
            bits.len()
        )));
    }
    let a = (es / 2.0).sqrt();
    Ok(bits
        .chunks_exact(2)
        .map(|b| Complex64::new(a * (1.0 - 2.0 * b[0] as f64), a * (1.0 - 2.0 * b[1] as f64)))
        .collect())
}

/// Sign decisions on the real and imaginary parts.
pub fn qpsk_demod(symbols: &[Complex64]) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|s| [(s.re < 0.0) as u8, (s.im < 0.0) as u8])
        .collect()
}

/// `(bit errors, total bits)`.
pub fn count_ber(tx: &[u8], rx: &[u8]) -> Result<(usize, usize)> {
    if tx.len() != rx.len() {
        return Err(AfdmError::LengthMismatch {
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    Ok((tx.iter().zip(rx).filter(|(a, b)| a != b).count(), tx.len()))
}

/// Interleaves the two ends of `[0, n)` so that circular neighbours end up
/// close together: 0, n-1, 1, n-2, ...
fn fold_rank(slot: usize, n: usize) -> usize {
    if 2 * slot < n {
        2 * slot
    } else {
        2 * (n - 1 - slot) + 1
    }
}

/// Joint LMMSE estimate of every transmitter's data symbols.
///
/// `ys[r]` is the DAFT-domain frame at receive antenna `r`, `channels[r][t]`
/// the channel from transmitter `t` to `r`, and `layouts[t]` the slot map of
/// transmitter `t`. Pilots are cancelled first; the remaining data columns
/// `A` give `x = (Aᴴ A + N0/Es I)⁻¹ Aᴴ y'`. Symbols are returned per
/// transmitter in ascending slot order.
pub fn lmmse_equalize(
    ys: &[DaftFrame],
    channels: &[Vec<EffectiveChannel>],
    layouts: &[FrameLayout],
    config: &DetectorConfig,
    pilot: &PilotSpec,
) -> Result<Vec<Vec<Complex64>>> {
    let n_rx = ys.len();
    let n_tx = layouts.len();
    if n_rx == 0 || n_tx == 0 {
        return Err(AfdmError::InvalidArgument("need at least one antenna on each side".into()));
    }
    let n = ys[0].len();
    if channels.len() != n_rx {
        return Err(AfdmError::LengthMismatch {
            expected: n_rx,
            actual: channels.len(),
        });
    }
    for (r, row) in channels.iter().enumerate() {
        if row.len() != n_tx {
            return Err(AfdmError::LengthMismatch {
                expected: n_tx,
                actual: row.len(),
            });
        }
        check_n(ys[r].len(), n)?;
        for h in row {
            check_n(h.n(), n)?;
        }
    }
    for l in layouts {
        check_n(l.n(), n)?;
    }

    // cancel the known pilots
    let mut residual: Vec<Vec<Complex64>> = ys.iter().map(|y| y.to_vec()).collect();
    for (t, layout) in layouts.iter().enumerate() {
        let known = known_symbols(layout, pilot);
        if known.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        let neg: Vec<Complex64> = known.iter().map(|v| -v).collect();
        for r in 0..n_rx {
            channels[r][t].mul_vec_add(&neg, &mut residual[r]);
        }
    }

    let slots: Vec<Vec<usize>> = layouts.iter().map(|l| l.data_slots()).collect();
    let unknowns: Vec<(usize, usize)> = slots
        .iter()
        .enumerate()
        .flat_map(|(t, s)| s.iter().map(move |&q| (t, q)))
        .collect();
    let m = unknowns.len();
    if m == 0 {
        return Ok(vec![Vec::new(); n_tx]);
    }

    // For each received sample, the unknowns observed in it.
    let columns: Vec<Vec<Vec<Sparse>>> = channels
        .iter()
        .map(|row| row.iter().map(|h| h.columns()).collect())
        .collect();
    let mut incidence: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n_rx * n];
    for (k, &(t, q)) in unknowns.iter().enumerate() {
        for r in 0..n_rx {
            for &(p, v) in &columns[r][t][q] {
                incidence[r * n + p].push((k, v));
            }
        }
    }

    // Pick the unknown ordering with the narrower band.
    let order_by = |key: &dyn Fn(usize, usize) -> usize| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by_key(|&k| (key(unknowns[k].1, n), unknowns[k].0));
        let mut pos = vec![0; m];
        for (p, k) in idx.into_iter().enumerate() {
            pos[k] = p;
        }
        pos
    };
    let bandwidth = |pos: &[usize]| -> usize {
        incidence
            .iter()
            .filter(|row| !row.is_empty())
            .map(|row| {
                let (lo, hi) = row
                    .iter()
                    .fold((usize::MAX, 0), |(lo, hi), &(k, _)| (lo.min(pos[k]), hi.max(pos[k])));
                hi - lo
            })
            .max()
            .unwrap_or(0)
    };
    let natural = order_by(&|q, _| q);
    let folded = order_by(&fold_rank);
    let (bw_nat, bw_fold) = (bandwidth(&natural), bandwidth(&folded));
    let (pos, bw) = if bw_fold < bw_nat {
        (folded, bw_fold)
    } else {
        (natural, bw_nat)
    };

    let mut gram = HermitianBand::zeros(m, bw);
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    for (row, obs) in incidence.iter().enumerate() {
        let y = residual[row / n][row % n];
        for &(a, va) in obs {
            let pa = pos[a];
            rhs[pa] += va.conj() * y;
            for &(b, vb) in obs {
                let pb = pos[b];
                if pa >= pb {
                    gram.add_lower(pa, pb, va.conj() * vb);
                }
            }
        }
    }
    gram.add_diagonal(config.n0 / config.es);
    let solution = gram.solve(&rhs)?;

    let mut out: Vec<Vec<Complex64>> = slots.iter().map(|s| Vec::with_capacity(s.len())).collect();
    for (k, &(t, _)) in unknowns.iter().enumerate() {
        out[t].push(solution[pos[k]]);
    }
    Ok(out)
}

fn check_n(actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(AfdmError::LengthMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, effective_matrix, ChannelPath, DDProfile};
    use crate::layout::{assemble_frame, build_layout, Scheme};
    use crate::params::AfdmParams;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..=1u8)).collect()
    }

    fn random_profile(p: &AfdmParams, rng: &mut impl Rng) -> DDProfile {
        let a = p.alpha_max() as i64;
        let mut paths: Vec<ChannelPath> = Vec::new();
        while paths.len() < 4 {
            let (l, alpha) = (rng.random_range(0..=p.l_max()), rng.random_range(-a..=a));
            if paths.iter().all(|q| (q.l, q.alpha) != (l, alpha)) {
                paths.push(ChannelPath::new(l, alpha, complex_gaussian(rng, 0.25)));
            }
        }
        DDProfile::new(paths, p).unwrap()
    }

    #[test]
    fn qpsk_labels() {
        let es = 2.0;
        let s = qpsk_mod(&[0, 0, 0, 1, 1, 0, 1, 1], es).unwrap();
        assert_eq!(s[0], Complex64::new(1.0, 1.0));
        assert_eq!(s[1], Complex64::new(1.0, -1.0));
        assert_eq!(s[2], Complex64::new(-1.0, 1.0));
        assert_eq!(s[3], Complex64::new(-1.0, -1.0));
        // neighbours at distance 2 differ in one bit
        let labels = [[0u8, 0], [0, 1], [1, 0], [1, 1]];
        for i in 0..4 {
            for j in 0..4 {
                if ((s[i] - s[j]).norm() - 2.0).abs() < 1e-12 {
                    let d = (labels[i][0] != labels[j][0]) as u8 + (labels[i][1] != labels[j][1]) as u8;
                    assert_eq!(d, 1);
                }
            }
        }
        let e: f64 = qpsk_mod(&[0, 0], 5.0).unwrap()[0].norm_sqr();
        assert!((e - 5.0).abs() < 1e-12);
        assert!(qpsk_mod(&[0, 1, 1], 1.0).is_err());
    }

    #[test]
    fn qpsk_decisions() {
        let a = 0.5f64.sqrt();
        assert_eq!(qpsk_demod(&[Complex64::new(a, a)]), vec![0, 0]);
        assert_eq!(qpsk_demod(&[Complex64::new(-0.1, 0.9) * 3.0]), vec![1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = bits(&mut rng, 200);
        assert_eq!(qpsk_demod(&qpsk_mod(&b, 3.0).unwrap()), b);
    }

    #[test]
    fn bit_error_counts() {
        let a = vec![0u8, 1, 1, 0, 1, 0];
        assert_eq!(count_ber(&a, &a).unwrap(), (0, 6));
        let flipped: Vec<u8> = a.iter().map(|b| 1 - b).collect();
        assert_eq!(count_ber(&a, &flipped).unwrap(), (6, 6));
        let mut three = a.clone();
        for i in [0, 2, 5] {
            three[i] ^= 1;
        }
        assert_eq!(count_ber(&a, &three).unwrap(), (3, 6));
        assert!(count_ber(&a, &a[..5]).is_err());
    }

    #[test]
    fn scalar_closed_form() {
        // H = 2, Es = 1, N0 = 2: x = 2 y / (4 + 2)
        let p = AfdmParams::new(1, 0, 0, None).unwrap();
        let prof = DDProfile::new(vec![ChannelPath::new(0, 0, Complex64::new(2.0, 0.0))], &p).unwrap();
        let h = effective_matrix(&prof, &p);
        let layout = FrameLayout::data_only(&p);
        let y = DaftFrame(vec![Complex64::new(3.0, -1.5)]);
        let cfg = DetectorConfig::new(1.0, 2.0).unwrap();
        let x = lmmse_equalize(std::slice::from_ref(&y), &[vec![h]], &[layout], &cfg, &PilotSpec::new(1.0).unwrap()).unwrap();
        assert!((x[0][0] - y[0] / 3.0).norm() < 1e-12);
    }

    #[test]
    fn identity_channel_limit() {
        let p = AfdmParams::new(32, 1, 1, None).unwrap();
        let prof = DDProfile::new(vec![ChannelPath::new(0, 0, Complex64::new(1.0, 0.0))], &p).unwrap();
        let layout = FrameLayout::data_only(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Complex64> = (0..32).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let cfg = DetectorConfig::new(1.0, 1e-12).unwrap();
        let est = lmmse_equalize(
            &[DaftFrame(x.clone())],
            &[vec![effective_matrix(&prof, &p)]],
            &[layout],
            &cfg,
            &PilotSpec::new(1.0).unwrap(),
        )
        .unwrap();
        for (a, b) in est[0].iter().zip(&x) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn approaches_zero_forcing() {
        let p = AfdmParams::new(64, 2, 1, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prof = DDProfile::new(
            vec![
                ChannelPath::new(0, 0, Complex64::new(1.0, 0.0)),
                ChannelPath::new(1, 1, Complex64::new(0.3, 0.1)),
                ChannelPath::new(0, -2, Complex64::new(-0.2, 0.2)),
            ],
            &p,
        )
        .unwrap();
        let h = effective_matrix(&prof, &p);
        let layout = build_layout(Scheme::Spa, &p, true).unwrap().remove(0);
        let pilot = PilotSpec::new(4.0).unwrap();
        let slots = layout.data_slots();
        let data: Vec<Complex64> = slots.iter().map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let x = assemble_frame(&layout, &pilot, &data).unwrap();
        let mut y = h.mul_vec(&x);
        for v in &mut y {
            *v += complex_gaussian(&mut rng, 0.01);
        }
        let cfg = DetectorConfig::new(1.0, 1e-10).unwrap();
        let est = lmmse_equalize(&[DaftFrame(y.clone())], &[vec![h.clone()]], std::slice::from_ref(&layout), &cfg, &pilot).unwrap();

        // zero forcing by dense least squares on the pilot-cancelled system
        let dense = h.to_dense();
        let mut resid = DVector::from_vec(y);
        for r in 0..64 {
            resid[r] -= dense[(r, 0)] * pilot.symbol();
        }
        let a = DMatrix::from_fn(64, slots.len(), |r, c| dense[(r, slots[c])]);
        let ah = a.adjoint();
        let zf = (&ah * &a).lu().solve(&(&ah * resid)).unwrap();
        for (u, v) in est[0].iter().zip(zf.iter()) {
            assert!((u - v).norm() < 1e-6);
        }
    }

    #[test]
    fn noiseless_ideal_csi_is_error_free() {
        let p = AfdmParams::new(64, 2, 1, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layout = build_layout(Scheme::Spa, &p, true).unwrap().remove(0);
        let pilot = PilotSpec::new(3.0).unwrap();
        let cfg = DetectorConfig::new(1.0, 1e-12).unwrap();
        for _ in 0..100 {
            let h = effective_matrix(&random_profile(&p, &mut rng), &p);
            let b = bits(&mut rng, 2 * layout.data_slots().len());
            let x = assemble_frame(&layout, &pilot, &qpsk_mod(&b, 1.0).unwrap()).unwrap();
            let y = DaftFrame(h.mul_vec(&x));
            let est = lmmse_equalize(&[y], &[vec![h]], std::slice::from_ref(&layout), &cfg, &pilot).unwrap();
            assert_eq!(qpsk_demod(&est[0]), b);
        }
    }

    #[test]
    fn data_only_frame_uses_folded_order() {
        // every slot is data, so the Gram matrix is circulant-banded
        let p = AfdmParams::new(128, 2, 2, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = effective_matrix(&random_profile(&p, &mut rng), &p);
        let layout = FrameLayout::data_only(&p);
        let b = bits(&mut rng, 256);
        let x = qpsk_mod(&b, 1.0).unwrap();
        let y = DaftFrame(h.mul_vec(&x));
        let cfg = DetectorConfig::new(1.0, 1e-12).unwrap();
        let est = lmmse_equalize(&[y], &[vec![h]], &[layout], &cfg, &PilotSpec::new(1.0).unwrap()).unwrap();
        assert_eq!(qpsk_demod(&est[0]), b);
    }

    #[test]
    fn mimo_without_cross_talk_splits_into_siso() {
        let p = AfdmParams::new(128, 2, 1, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let layouts = build_layout(Scheme::Mimo(2), &p, true).unwrap();
        let pilot = PilotSpec::new(3.0).unwrap();
        let cfg = DetectorConfig::new(1.0, 0.3).unwrap();
        let h: Vec<EffectiveChannel> = (0..2).map(|_| effective_matrix(&random_profile(&p, &mut rng), &p)).collect();
        let zero = EffectiveChannel::zeros(128);
        let mut ys = Vec::new();
        let mut txs = Vec::new();
        for t in 0..2 {
            let b = bits(&mut rng, 2 * layouts[t].data_slots().len());
            let x = assemble_frame(&layouts[t], &pilot, &qpsk_mod(&b, 1.0).unwrap()).unwrap();
            let mut y = h[t].mul_vec(&x);
            for v in &mut y {
                *v += complex_gaussian(&mut rng, 0.3);
            }
            ys.push(DaftFrame(y));
            txs.push(b);
        }
        let chans = vec![vec![h[0].clone(), zero.clone()], vec![zero, h[1].clone()]];
        let joint = lmmse_equalize(&ys, &chans, &layouts, &cfg, &pilot).unwrap();
        for t in 0..2 {
            let single = lmmse_equalize(&ys[t..t + 1], &[vec![h[t].clone()]], &layouts[t..t + 1], &cfg, &pilot).unwrap();
            assert_eq!(qpsk_demod(&joint[t]), qpsk_demod(&single[0]));
        }
    }

    #[test]
    fn dimension_checks() {
        let p = AfdmParams::new(16, 1, 1, None).unwrap();
        let layout = FrameLayout::data_only(&p);
        let cfg = DetectorConfig::new(1.0, 1.0).unwrap();
        let pilot = PilotSpec::new(1.0).unwrap();
        let h = EffectiveChannel::zeros(16);
        assert!(lmmse_equalize(&[DaftFrame::zeros(15)], &[vec![h.clone()]], std::slice::from_ref(&layout), &cfg, &pilot).is_err());
        assert!(lmmse_equalize(&[DaftFrame::zeros(16)], &[vec![]], &[layout], &cfg, &pilot).is_err());
        assert!(DetectorConfig::new(0.0, 1.0).is_err());
    }
}
