//! Per-band link budget and UE RF-chain power model.
//!
//! The received SNR on band `i` with `N_Rx` UE antennas under maximal-ratio
//! transmission is `P_tx / σ² · N_Rx · |h|²`, the achievable rate is
//! `B · log2(1 + SNR)`, and the noise variance is `k_B · T · B · NF`.

use core::fmt;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Band choices for one slot, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BandId {
    NoTx,
    Sub6,
    MmWave,
    Thz,
}

impl BandId {
    pub const ALL: [BandId; 4] = [BandId::NoTx, BandId::Sub6, BandId::MmWave, BandId::Thz];
    pub const RADIO: [BandId; 3] = [BandId::Sub6, BandId::MmWave, BandId::Thz];

    pub const fn index(self) -> usize {
        self as usize
    }

    /// Position among the three radio bands, `None` for `NoTx`.
    pub const fn radio_index(self) -> Option<usize> {
        match self {
            BandId::NoTx => None,
            BandId::Sub6 => Some(0),
            BandId::MmWave => Some(1),
            BandId::Thz => Some(2),
        }
    }

    pub const fn from_index(index: usize) -> Option<BandId> {
        match index {
            0 => Some(BandId::NoTx),
            1 => Some(BandId::Sub6),
            2 => Some(BandId::MmWave),
            3 => Some(BandId::Thz),
            _ => None,
        }
    }

    /// Lowercase name used in every file format.
    pub const fn name(self) -> &'static str {
        match self {
            BandId::NoTx => "notx",
            BandId::Sub6 => "sub6",
            BandId::MmWave => "mmwave",
            BandId::Thz => "thz",
        }
    }

    pub fn from_name(name: &str) -> Option<BandId> {
        BandId::ALL.into_iter().find(|b| b.name() == name)
    }
}

impl fmt::Display for BandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a forecaster predicts: spectral efficiency `log2(1+γ)` or channel gain `|h|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    Rate,
    Channel,
}

impl Quantity {
    pub const fn name(self) -> &'static str {
        match self {
            Quantity::Rate => "rate",
            Quantity::Channel => "channel",
        }
    }

    pub fn from_name(name: &str) -> Option<Quantity> {
        match name {
            "rate" => Some(Quantity::Rate),
            "channel" => Some(Quantity::Channel),
            _ => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per radio band.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerBand<T> {
    pub sub6: T,
    pub mmwave: T,
    pub thz: T,
}

impl<T> PerBand<T> {
    pub fn from_fn(mut f: impl FnMut(BandId) -> T) -> Self {
        PerBand {
            sub6: f(BandId::Sub6),
            mmwave: f(BandId::MmWave),
            thz: f(BandId::Thz),
        }
    }

    /// `None` for `NoTx`.
    pub fn get(&self, band: BandId) -> Option<&T> {
        match band {
            BandId::NoTx => None,
            BandId::Sub6 => Some(&self.sub6),
            BandId::MmWave => Some(&self.mmwave),
            BandId::Thz => Some(&self.thz),
        }
    }

    pub fn get_mut(&mut self, band: BandId) -> Option<&mut T> {
        match band {
            BandId::NoTx => None,
            BandId::Sub6 => Some(&mut self.sub6),
            BandId::MmWave => Some(&mut self.mmwave),
            BandId::Thz => Some(&mut self.thz),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(BandId, &T) -> U) -> PerBand<U> {
        PerBand {
            sub6: f(BandId::Sub6, &self.sub6),
            mmwave: f(BandId::MmWave, &self.mmwave),
            thz: f(BandId::Thz, &self.thz),
        }
    }
}

/// Power draw of each RF-chain component in mW. Components a band lacks are 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RfComponents {
    pub bpf: f64,
    pub lna: f64,
    pub lo: f64,
    pub ps: f64,
    pub combiner: f64,
    pub mixer: f64,
    pub lpf: f64,
    pub bba: f64,
    pub adc: f64,
}

impl RfComponents {
    pub fn defaults(band: BandId) -> RfComponents {
        match band {
            BandId::NoTx => RfComponents::default(),
            BandId::Sub6 => RfComponents {
                bpf: 5.0,
                lna: 10.0,
                lo: 5.0,
                ps: 0.0,
                combiner: 0.0,
                mixer: 15.0,
                lpf: 10.0,
                bba: 5.0,
                adc: 7.8,
            },
            BandId::MmWave => RfComponents {
                bpf: 5.0,
                lna: 11.13,
                lo: 5.0,
                ps: 1.5,
                combiner: 19.5,
                mixer: 16.8,
                lpf: 14.0,
                bba: 5.0,
                adc: 8.2,
            },
            BandId::Thz => RfComponents {
                bpf: 5.0,
                lna: 50.89,
                lo: 5.0,
                ps: 1.5,
                combiner: 19.5,
                mixer: 49.0,
                lpf: 11.36,
                bba: 5.0,
                adc: 32.7,
            },
        }
    }

    fn entries(&self) -> [(&'static str, f64); 9] {
        [
            ("bpf", self.bpf),
            ("lna", self.lna),
            ("lo", self.lo),
            ("ps", self.ps),
            ("combiner", self.combiner),
            ("mixer", self.mixer),
            ("lpf", self.lpf),
            ("bba", self.bba),
            ("adc", self.adc),
        ]
    }
}

/// Physical and RF-chain parameters of one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandConfig {
    pub band: BandId,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_rx: u32,
    pub tx_power_w: f64,
    pub noise_figure_db: f64,
    pub temperature_k: f64,
    /// Power drawn by the UE RF chain while this band is in use.
    pub rf_power_mw: f64,
    pub rf_components: RfComponents,
}

impl BandConfig {
    pub fn defaults(band: BandId) -> BandConfig {
        let (carrier_hz, bandwidth_hz, n_rx) = match band {
            BandId::NoTx => (0.0, 0.0, 0),
            BandId::Sub6 => (3.5e9, 10e6, 1),
            BandId::MmWave => (28e9, 100e6, 8),
            BandId::Thz => (140e9, 1000e6, 64),
        };
        BandConfig {
            band,
            carrier_hz,
            bandwidth_hz,
            n_rx,
            tx_power_w: if band == BandId::NoTx { 0.0 } else { 1.0 },
            noise_figure_db: 7.0,
            temperature_k: 300.0,
            rf_power_mw: rf_power(band),
            rf_components: RfComponents::defaults(band),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |what, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Negative { what, value: v })
            }
        };
        finite_nonneg("bandwidth_hz", self.bandwidth_hz)?;
        finite_nonneg("rf_power_mw", self.rf_power_mw)?;
        finite_nonneg("tx_power_w", self.tx_power_w)?;
        finite_nonneg("carrier_hz", self.carrier_hz)?;
        finite_nonneg("temperature_k", self.temperature_k)?;
        let is_notx = self.band == BandId::NoTx;
        if (self.bandwidth_hz == 0.0) != is_notx {
            return Err(invalid("bandwidth_hz", "must be zero exactly for notx"));
        }
        if (self.rf_power_mw == 0.0) != is_notx {
            return Err(invalid("rf_power_mw", "must be zero exactly for notx"));
        }
        if !is_notx && self.n_rx == 0 {
            return Err(invalid("n_rx", "radio bands need at least one antenna"));
        }
        Ok(())
    }
}

/// Configurations of all four band choices, indexed by [`BandId`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    configs: [BandConfig; 4],
}

impl Default for BandSet {
    fn default() -> Self {
        BandSet {
            configs: BandId::ALL.map(BandConfig::defaults),
        }
    }
}

impl BandSet {
    pub fn new(configs: [BandConfig; 4]) -> Result<BandSet> {
        for (i, cfg) in configs.iter().enumerate() {
            if cfg.band.index() != i {
                return Err(invalid("band", "configs must be ordered notx, sub6, mmwave, thz"));
            }
            cfg.validate()?;
        }
        Ok(BandSet { configs })
    }

    pub fn get(&self, band: BandId) -> &BandConfig {
        &self.configs[band.index()]
    }

    pub fn power_table(&self) -> PowerTable {
        PowerTable(self.configs.map(|c| c.rf_power_mw))
    }
}

/// RF power in mW per [`BandId`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTable(pub [f64; 4]);

impl Default for PowerTable {
    fn default() -> Self {
        PowerTable(BandId::ALL.map(rf_power))
    }
}

impl PowerTable {
    pub fn get(&self, band: BandId) -> f64 {
        self.0[band.index()]
    }

    /// Total power of a band sequence.
    ///
    /// Computed from per-band slot counts in a fixed band order so that any two
    /// permutations of the same bands yield bit-identical totals.
    pub fn total(&self, bands: &[BandId]) -> f64 {
        let mut counts = [0u32; 4];
        for b in bands {
            counts[b.index()] += 1;
        }
        self.total_from_counts(counts)
    }

    pub fn total_from_counts(&self, counts: [u32; 4]) -> f64 {
        counts
            .iter()
            .zip(self.0.iter())
            .fold(0.0, |acc, (&n, &p)| acc + f64::from(n) * p)
    }
}

/// Thermal noise variance `k_B · T · B · 10^(NF/10)` in watts.
pub fn noise_variance(cfg: &BandConfig) -> Result<f64> {
    if cfg.band == BandId::NoTx || cfg.bandwidth_hz <= 0.0 {
        return Err(Error::NoReceiveChain(cfg.band));
    }
    let nf_linear = 10.0.powf(cfg.noise_figure_db / 10.0);
    Ok(BOLTZMANN * cfg.temperature_k * cfg.bandwidth_hz * nf_linear)
}

fn check_gain(gain: f64) -> Result<()> {
    if gain >= 0.0 && gain.is_finite() {
        Ok(())
    } else {
        Err(Error::Negative {
            what: "channel gain",
            value: gain,
        })
    }
}

/// Received SNR for channel gain `|h|²`.
pub fn snr(cfg: &BandConfig, gain: f64) -> Result<f64> {
    check_gain(gain)?;
    let sigma2 = noise_variance(cfg)?;
    Ok(cfg.tx_power_w / sigma2 * f64::from(cfg.n_rx) * gain)
}

/// `log2(1 + SNR)` in bit/s/Hz; zero for `NoTx`.
pub fn spectral_efficiency(cfg: &BandConfig, gain: f64) -> Result<f64> {
    check_gain(gain)?;
    if cfg.band == BandId::NoTx {
        return Ok(0.0);
    }
    Ok((1.0 + snr(cfg, gain)?).log2())
}

/// Achievable rate `B · log2(1 + SNR)` in bit/s.
pub fn rate(cfg: &BandConfig, gain: f64) -> Result<f64> {
    Ok(cfg.bandwidth_hz * spectral_efficiency(cfg, gain)?)
}

/// Rate in bit/s implied by a value of the forecast quantity.
///
/// Negative values (possible from an unclamped rate forecaster) map to 0.
pub fn quantity_to_rate(cfg: &BandConfig, quantity: Quantity, value: f64) -> Result<f64> {
    let value = value.max(0.0);
    match quantity {
        Quantity::Rate => Ok(cfg.bandwidth_hz * value),
        Quantity::Channel => rate(cfg, value),
    }
}

/// The forecast quantity observed for a channel gain.
pub fn quantity_from_gain(cfg: &BandConfig, quantity: Quantity, gain: f64) -> Result<f64> {
    match quantity {
        Quantity::Rate => spectral_efficiency(cfg, gain),
        Quantity::Channel => {
            check_gain(gain)?;
            Ok(gain)
        }
    }
}

/// RF-chain power rebuilt from component draws:
/// `N_Rx (BPF + LNA + PS) + Combiner + LO + 2 (Mixer + LPF + BBA + ADC)`,
/// the factor two covering the I and Q branches.
pub fn rf_power_from_components(cfg: &BandConfig) -> Result<f64> {
    let c = &cfg.rf_components;
    for (what, v) in c.entries() {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Negative { what, value: v });
        }
    }
    let n_rx = f64::from(cfg.n_rx);
    Ok(n_rx * (c.bpf + c.lna + c.ps) + c.combiner + c.lo + 2.0 * (c.mixer + c.lpf + c.bba + c.adc))
}

/// Canonical RF-chain power per band in mW. These totals, not the component
/// recomputation, drive every policy.
pub const fn rf_power(band: BandId) -> f64 {
    match band {
        BandId::NoTx => 0.0,
        BandId::Sub6 => 85.60,
        BandId::MmWave => 254.90,
        BandId::Thz => 3893.58,
    }
}
