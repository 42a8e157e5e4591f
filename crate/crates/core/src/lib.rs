//! Planning tool for all-analog MIMO radio-over-copper fronthaul.
//!
//! A LAN cable with several twisted pairs is split into 22 MHz FDM bins on
//! every pair. Each bin can carry one analog radio channel (one antenna of a
//! remote unit). The crate models the cable ([`cable_model`]), balances the
//! transmit spectrum across the mutually interfering pairs ([`osb_alloc`]),
//! and counts how many radio channels survive ([`capacity_planner`]).

pub mod band_plan;
pub mod cable_model;
pub mod capacity_planner;
pub mod error;
pub mod fext_comp;
pub mod osb_alloc;
pub mod report;

pub use error::{Error, Result};
