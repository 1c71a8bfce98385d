//! Synthetic mobility traces.
//!
//! Each UE drives a straight line past a fixed base station. Per slot and band
//! the gain is free-space path loss times spatially correlated lognormal
//! shadowing times a multipath fading term `|Σ a_k e^{jφ_k(s)}|² / Σ a_k²`,
//! where ray phases advance with the travelled distance `s` at a rate set by
//! each ray's direction-cosine offset. Blockage events arrive per metre and
//! attenuate the band for a fixed distance.
//!
//! The ray set of a band is shared by all UEs (same environment); initial
//! phases, shadowing and blockage are drawn per UE.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ChannelTrace;
use crate::error::{invalid, Error, Result};
use crate::linkbudget::{BandId, PerBand};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const MIN_DISTANCE_M: f64 = 1.0;

/// Blockage process of one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blockage {
    /// Expected blockage onsets per metre travelled.
    pub rate_per_meter: f64,
    /// Distance a blockage lasts once started.
    pub length_m: f64,
    pub loss_db: f64,
}

impl Blockage {
    pub const NONE: Blockage = Blockage {
        rate_per_meter: 0.0,
        length_m: 0.0,
        loss_db: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub bs_position: [f64; 3],
    /// Trajectory of UE1; the other UEs are offset sideways by `ue_spacing`.
    pub ue_start: [f64; 3],
    pub ue_end: [f64; 3],
    pub ue_speed: f64,
    pub ue_count: usize,
    pub ue_spacing: f64,
    /// Distance between consecutive samples; the slot duration is
    /// `sample_spacing / ue_speed`.
    pub sample_spacing: f64,
    pub carrier_hz: PerBand<f64>,
    pub paths_per_band: usize,
    /// Bound on the direction-cosine offset of non-dominant rays. Sets how fast
    /// the fading decorrelates along the track (faster at higher carriers).
    pub direction_spread: f64,
    pub shadowing_std_db: f64,
    pub shadowing_corr_length: f64,
    /// Only the mmWave and THz entries are applied.
    pub blockage: PerBand<Blockage>,
    pub seed: u64,
}

impl Default for SyntheticScenario {
    fn default() -> Self {
        SyntheticScenario {
            bs_position: [235.50, 489.50, 6.0],
            ue_start: [242.42, 297.17, 2.0],
            ue_end: [242.42, 847.17, 2.0],
            ue_speed: 10.0,
            ue_count: 3,
            ue_spacing: 3.0,
            sample_spacing: 0.2,
            carrier_hz: PerBand {
                sub6: 3.5e9,
                mmwave: 28e9,
                thz: 140e9,
            },
            paths_per_band: 3,
            direction_spread: 0.002,
            shadowing_std_db: 4.0,
            shadowing_corr_length: 10.0,
            blockage: PerBand {
                sub6: Blockage::NONE,
                mmwave: Blockage {
                    rate_per_meter: 0.01,
                    length_m: 2.0,
                    loss_db: 15.0,
                },
                thz: Blockage {
                    rate_per_meter: 0.02,
                    length_m: 2.0,
                    loss_db: 25.0,
                },
            },
            seed: 1,
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl SyntheticScenario {
    pub fn validate(&self) -> Result<()> {
        if self.ue_count < 1 {
            return Err(invalid("ue_count", "need at least one UE"));
        }
        if !(self.ue_speed > 0.0 && self.ue_speed.is_finite()) {
            return Err(invalid("ue_speed", "must be positive"));
        }
        if !(self.sample_spacing > 0.0 && self.sample_spacing.is_finite()) {
            return Err(invalid("sample_spacing", "must be positive"));
        }
        if self.paths_per_band < 1 {
            return Err(invalid("paths_per_band", "need at least one path"));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(invalid("shadowing_std_db", "must be nonnegative"));
        }
        if !(self.direction_spread >= 0.0) {
            return Err(invalid("direction_spread", "must be nonnegative"));
        }
        if !(self.ue_spacing >= 0.0) || !(self.shadowing_corr_length >= 0.0) {
            return Err(invalid("ue_spacing", "lengths must be nonnegative"));
        }
        if !(norm(sub(self.ue_end, self.ue_start)) > 0.0) {
            return Err(invalid("ue_end", "trajectory has zero length"));
        }
        for band in BandId::RADIO {
            let b = self.blockage.get(band).unwrap();
            for (what, v) in [
                ("blockage rate_per_meter", b.rate_per_meter),
                ("blockage length_m", b.length_m),
                ("blockage loss_db", b.loss_db),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Negative { what, value: v });
                }
            }
            let f = *self.carrier_hz.get(band).unwrap();
            if !(f > 0.0 && f.is_finite()) {
                return Err(invalid("carrier_hz", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn slots_per_ue(&self) -> usize {
        let length = norm(sub(self.ue_end, self.ue_start));
        (length / self.sample_spacing + 1e-9).floor() as usize + 1
    }

    pub fn slot_duration(&self) -> f64 {
        self.sample_spacing / self.ue_speed
    }
}

struct Ray {
    amplitude: f64,
    /// Phase advance in radians per metre travelled.
    phase_rate: f64,
}

fn environment_rays(scenario: &SyntheticScenario, band: BandId, rng: &mut ChaCha8Rng) -> Vec<Ray> {
    let wavenumber = 2.0 * PI * scenario.carrier_hz.get(band).unwrap() / SPEED_OF_LIGHT;
    (0..scenario.paths_per_band)
        .map(|k| {
            let amplitude: f64 = if k == 0 { 1.0 } else { rng.random_range(0.3..0.8) };
            let offset: f64 = if k == 0 || scenario.direction_spread == 0.0 {
                0.0
            } else {
                rng.random_range(-scenario.direction_spread..scenario.direction_spread)
            };
            Ray {
                amplitude,
                phase_rate: wavenumber * offset,
            }
        })
        .collect()
}

/// Builds a deterministic trace for the scenario's seed.
pub fn generate_trace(scenario: &SyntheticScenario) -> Result<ChannelTrace> {
    scenario.validate()?;
    let slots = scenario.slots_per_ue();
    let step = scenario.sample_spacing;
    let delta = sub(scenario.ue_end, scenario.ue_start);
    let length = norm(delta);
    let dir = [delta[0] / length, delta[1] / length, delta[2] / length];
    let horizontal = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let lateral = if horizontal > 0.0 {
        [dir[1] / horizontal, -dir[0] / horizontal, 0.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let rho = if scenario.shadowing_corr_length > 0.0 {
        (-step / scenario.shadowing_corr_length).exp()
    } else {
        0.0
    };
    let innovation = (1.0 - rho * rho).sqrt();

    let mut gains = Vec::with_capacity(scenario.ue_count * 3 * slots);
    for ue in 0..scenario.ue_count {
        let offset = ue as f64 * scenario.ue_spacing;
        for (radio, band) in BandId::RADIO.into_iter().enumerate() {
            let mut env_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            env_rng.set_stream(1_000 + radio as u64);
            let rays = environment_rays(scenario, band, &mut env_rng);
            let power_norm: f64 = rays.iter().map(|r| r.amplitude * r.amplitude).sum();

            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream((ue * 3 + radio) as u64);
            let phases: Vec<f64> = rays.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();

            let wavelength = SPEED_OF_LIGHT / scenario.carrier_hz.get(band).unwrap();
            let blockage = *scenario.blockage.get(band).unwrap();
            let blockage_applies = band != BandId::Sub6;
            let onset_prob = (blockage.rate_per_meter * step).min(1.0);
            let blocked_samples = (blockage.length_m / step).ceil() as usize;
            let blocked_factor = 10.0.powf(-blockage.loss_db / 10.0);

            let mut shadow_db = 0.0;
            let mut blocked_left = 0usize;
            for n in 0..slots {
                let s = n as f64 * step;
                let pos = [
                    scenario.ue_start[0] + dir[0] * s + lateral[0] * offset,
                    scenario.ue_start[1] + dir[1] * s + lateral[1] * offset,
                    scenario.ue_start[2] + dir[2] * s + lateral[2] * offset,
                ];
                let d = norm(sub(pos, scenario.bs_position)).max(MIN_DISTANCE_M);
                let fspl = (wavelength / (4.0 * PI * d)).powi(2);

                let z: f64 = StandardNormal.sample(&mut rng);
                shadow_db = if n == 0 {
                    scenario.shadowing_std_db * z
                } else {
                    rho * shadow_db + innovation * scenario.shadowing_std_db * z
                };
                let shadow = 10.0.powf(shadow_db / 10.0);

                let (mut re, mut im) = (0.0, 0.0);
                for (ray, phase0) in rays.iter().zip(&phases) {
                    let phase = phase0 + ray.phase_rate * s;
                    re += ray.amplitude * phase.cos();
                    im += ray.amplitude * phase.sin();
                }
                let fading = (re * re + im * im) / power_norm;

                let u: f64 = rng.random();
                let mut block = 1.0;
                if blockage_applies {
                    if blocked_left == 0 && u < onset_prob {
                        blocked_left = blocked_samples.max(1);
                    }
                    if blocked_left > 0 {
                        block = blocked_factor;
                        blocked_left -= 1;
                    }
                }
                gains.push(fspl * shadow * fading * block);
            }
        }
    }
    ChannelTrace::new(scenario.ue_count, slots, scenario.slot_duration(), gains)
}
