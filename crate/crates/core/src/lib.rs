//! Energy-aware band assignment for multiband (Sub-6 GHz / mmWave / THz) downlinks.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every piece of the
//! computation: the link budget and UE RF power model, synthetic channel
//! traces and supervised windowing, direct multistep forecasters (current
//! value, ridge autoregression, stacked LSTM trained from scratch), the
//! exhaustive and receding-horizon assignment policies, and the error and
//! policy metrics. File formats, configuration and the CLI live in the
//! `bandwise` crate.

#![no_std]

extern crate alloc;

pub mod assign;
mod error;
pub mod forecast;
mod linalg;
pub mod linkbudget;
pub mod metrics;
pub mod trace;

pub use self::error::{Error, Result};
pub use self::linkbudget::{BandConfig, BandId, BandSet, PerBand, PowerTable, Quantity};
