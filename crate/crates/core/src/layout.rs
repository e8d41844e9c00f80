//! DAFT-domain slot maps: where pilots, zero guards and data go.
//!
//! A pilot at slot `u` reaches the receiver at `(u - loc) mod N` for every
//! `loc` in `[-alpha_max, Q - alpha_max]`, so it needs `Q` guard slots on the
//! side data could leak in from. All schemes place pilot blocks of width
//! `Q + 1` from slot 0 upward and keep `[N - Q, N - 1]` empty so data cannot
//! wrap around onto pilot 0.

use std::fmt;

use num_complex::Complex64;

use crate::error::{AfdmError, Result};
use crate::params::AfdmParams;
use crate::transform::DaftFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    /// Pilot number `index` (unique within a frame set) sent by `owner`.
    Pilot { index: usize, owner: usize },
    Guard,
    /// Data belonging to transmitter or user `owner`.
    Data { owner: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Single pilot at slot 0.
    Spa,
    /// `N_p` pilots spaced `Q + 1` apart.
    Mpa(usize),
    /// One pilot per transmit antenna, shared data region.
    Mimo(usize),
    /// Multiuser uplink: one pilot per user, disjoint data blocks.
    Uplink(usize),
    /// Multiuser downlink: one shared pilot, disjoint data blocks.
    Downlink(usize),
    /// Every slot carries data; no pilot.
    DataOnly,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Spa => write!(f, "spa"),
            Scheme::Mpa(p) => write!(f, "mpa{p}"),
            Scheme::Mimo(t) => write!(f, "mimo{t}"),
            Scheme::Uplink(k) => write!(f, "ul{k}"),
            Scheme::Downlink(k) => write!(f, "dl{k}"),
            Scheme::DataOnly => write!(f, "data"),
        }
    }
}

/// Pilot amplitude; the pilot symbol is real and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotSpec {
    amplitude: f64,
}

impl PilotSpec {
    pub fn new(amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(AfdmError::InvalidArgument(format!(
                "pilot amplitude {amplitude} must be positive"
            )));
        }
        Ok(PilotSpec { amplitude })
    }

    /// Amplitude giving `|x_p|^2 / N0 = 10^(snr_db / 10)`.
    pub fn from_snr_db(snr_db: f64, noise_var: f64) -> Result<Self> {
        Self::new((10f64.powf(snr_db / 10.0) * noise_var).sqrt())
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn symbol(&self) -> Complex64 {
        Complex64::new(self.amplitude, 0.0)
    }
}

/// Slot map of the frame one transmitter sends.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    roles: Vec<SlotRole>,
    scheme: Scheme,
    with_data: bool,
    transmitter: usize,
}

impl FrameLayout {
    pub fn roles(&self) -> &[SlotRole] {
        &self.roles
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn with_data(&self) -> bool {
        self.with_data
    }

    /// Index of the transmitter (antenna or user) sending this frame.
    pub fn transmitter(&self) -> usize {
        self.transmitter
    }

    pub fn n(&self) -> usize {
        self.roles.len()
    }

    /// `(pilot index, slot)` pairs in slot order.
    pub fn pilots(&self) -> Vec<(usize, usize)> {
        self.roles
            .iter()
            .enumerate()
            .filter_map(|(slot, r)| match r {
                SlotRole::Pilot { index, .. } => Some((*index, slot)),
                _ => None,
            })
            .collect()
    }

    pub fn pilot_slot(&self, index: usize) -> Option<usize> {
        self.pilots().into_iter().find(|p| p.0 == index).map(|p| p.1)
    }

    pub fn data_slots(&self) -> Vec<usize> {
        self.slots_where(|r| matches!(r, SlotRole::Data { .. }))
    }

    pub fn data_slots_of(&self, owner: usize) -> Vec<usize> {
        self.slots_where(|r| *r == SlotRole::Data { owner })
    }

    fn slots_where(&self, f: impl Fn(&SlotRole) -> bool) -> Vec<usize> {
        (0..self.n()).filter(|&i| f(&self.roles[i])).collect()
    }

    /// One character per slot: `p` pilot, `0` guard, `d` data.
    pub fn diagram(&self) -> String {
        self.roles
            .iter()
            .map(|r| match r {
                SlotRole::Pilot { .. } => 'p',
                SlotRole::Guard => '0',
                SlotRole::Data { .. } => 'd',
            })
            .collect()
    }

    /// A frame with data in every slot.
    pub fn data_only(params: &AfdmParams) -> Self {
        FrameLayout {
            roles: vec![SlotRole::Data { owner: 0 }; params.n()],
            scheme: Scheme::DataOnly,
            with_data: true,
            transmitter: 0,
        }
    }
}

fn infeasible(scheme: Scheme, need: usize, n: usize) -> AfdmError {
    AfdmError::InfeasibleLayout(format!("{scheme} needs N >= {need}, have N = {n}"))
}

/// Splits `[start, end)` into `users` blocks separated by `gap` guard slots;
/// the last block takes the remainder.
fn partition(start: usize, end: usize, users: usize, gap: usize) -> Option<Vec<(usize, usize)>> {
    let usable = (end - start).checked_sub((users - 1) * gap)?;
    let base = usable / users;
    if base == 0 {
        return None;
    }
    let mut blocks = Vec::with_capacity(users);
    let mut at = start;
    for k in 0..users {
        let len = if k + 1 == users { usable - base * (users - 1) } else { base };
        blocks.push((at, at + len));
        at += len + gap;
    }
    Some(blocks)
}

/// Builds the slot map of every transmitter taking part in `scheme`.
///
/// SPA, MPA and downlink frames come from one transmitter; MIMO returns one
/// layout per antenna and uplink one per user.
pub fn build_layout(scheme: Scheme, params: &AfdmParams, with_data: bool) -> Result<Vec<FrameLayout>> {
    let n = params.n();
    let q = params.q();
    let block = q + 1;
    let make = |roles: Vec<SlotRole>, transmitter: usize| FrameLayout {
        roles,
        scheme,
        with_data,
        transmitter,
    };
    let data_end = n - q;

    match scheme {
        Scheme::DataOnly => Ok(vec![FrameLayout::data_only(params)]),
        Scheme::Spa | Scheme::Mpa(_) | Scheme::Mimo(_) => {
            let pilots = match scheme {
                Scheme::Spa => 1,
                Scheme::Mpa(p) | Scheme::Mimo(p) => p,
                _ => unreachable!(),
            };
            if pilots == 0 {
                return Err(AfdmError::InfeasibleLayout(format!("{scheme} needs at least one pilot")));
            }
            let need = pilots * block + if with_data { q } else { 0 };
            if need > n {
                return Err(infeasible(scheme, need, n));
            }
            let data_start = pilots * block;
            let transmitters = if matches!(scheme, Scheme::Mimo(_)) { pilots } else { 1 };
            Ok((0..transmitters)
                .map(|t| {
                    let mut roles = vec![SlotRole::Guard; n];
                    for j in 0..pilots {
                        if transmitters == 1 || j == t {
                            roles[j * block] = SlotRole::Pilot { index: j, owner: t };
                        }
                    }
                    if with_data {
                        for r in &mut roles[data_start..data_end] {
                            *r = SlotRole::Data { owner: t };
                        }
                    }
                    make(roles, t)
                })
                .collect())
        }
        Scheme::Uplink(users) | Scheme::Downlink(users) => {
            if users == 0 {
                return Err(AfdmError::InfeasibleLayout(format!("{scheme} needs at least one user")));
            }
            let uplink = matches!(scheme, Scheme::Uplink(_));
            let pilots = if uplink { users } else { 1 };
            let data_start = pilots * block;
            // one data slot per user plus the guards around each block
            let need = data_start + q + if with_data { users + (users - 1) * q } else { 0 };
            if need > n {
                return Err(infeasible(scheme, need, n));
            }
            let blocks = if with_data {
                partition(data_start, data_end, users, q).ok_or_else(|| infeasible(scheme, need, n))?
            } else {
                Vec::new()
            };
            let transmitters = if uplink { users } else { 1 };
            Ok((0..transmitters)
                .map(|t| {
                    let mut roles = vec![SlotRole::Guard; n];
                    for j in 0..pilots {
                        if !uplink || j == t {
                            roles[j * block] = SlotRole::Pilot { index: j, owner: j };
                        }
                    }
                    for (k, &(a, b)) in blocks.iter().enumerate() {
                        if !uplink || k == t {
                            for r in &mut roles[a..b] {
                                *r = SlotRole::Data { owner: k };
                            }
                        }
                    }
                    make(roles, t)
                })
                .collect())
        }
    }
}

/// Receive-side indexes `(u - loc) mod N` a pilot can reach, ascending.
pub fn rx_pilot_indexes(layout: &FrameLayout, pilot: usize, params: &AfdmParams) -> Result<Vec<usize>> {
    let u = layout
        .pilot_slot(pilot)
        .ok_or_else(|| AfdmError::InvalidArgument(format!("layout has no pilot {pilot}")))?;
    Ok(footprint(u, params))
}

pub(crate) fn footprint(u: usize, params: &AfdmParams) -> Vec<usize> {
    let n = params.n() as i64;
    let a = params.alpha_max() as i64;
    let mut idx: Vec<usize> = (-a..=params.q() as i64 - a)
        .map(|loc| (u as i64 - loc).rem_euclid(n) as usize)
        .collect();
    idx.sort_unstable();
    idx
}

/// Fills pilots with the pilot amplitude, guards with zero and data slots in
/// ascending order.
pub fn assemble_frame(layout: &FrameLayout, pilot: &PilotSpec, data: &[Complex64]) -> Result<DaftFrame> {
    let slots = layout.data_slots();
    if slots.len() != data.len() {
        return Err(AfdmError::LengthMismatch {
            expected: slots.len(),
            actual: data.len(),
        });
    }
    let mut x = DaftFrame::zeros(layout.n());
    for (slot, role) in layout.roles().iter().enumerate() {
        if let SlotRole::Pilot { .. } = role {
            x[slot] = pilot.symbol();
        }
    }
    for (&slot, &d) in slots.iter().zip(data) {
        x[slot] = d;
    }
    Ok(x)
}

/// The frame with only its pilots, data slots left at zero.
pub fn known_symbols(layout: &FrameLayout, pilot: &PilotSpec) -> Vec<Complex64> {
    layout
        .roles()
        .iter()
        .map(|r| match r {
            SlotRole::Pilot { .. } => pilot.symbol(),
            _ => Complex64::new(0.0, 0.0),
        })
        .collect()
}

/// Pilot plus guard slots of an `N_t`-antenna frame: `(N_t + 1) Q + N_t`.
pub fn overhead_afdm(params: &AfdmParams, n_t: usize) -> usize {
    (n_t + 1) * params.q() + n_t
}

/// Pilot plus guard overhead of the delay-Doppler grid of an `N_t`-antenna
/// OTFS frame: `((N_t + 1) l_max + N_t)(4 alpha_max + 1)`.
pub fn overhead_otfs(l_max: usize, alpha_max: usize, n_t: usize) -> usize {
    ((n_t + 1) * l_max + n_t) * (4 * alpha_max + 1)
}
