//! Idealized crosstalk compensation used as a reference against plain OSB.

use std::fmt;
use std::str::FromStr;

use crate::cable_model::{db_to_linear, ChannelMatrixSet};
use crate::error::{Error, Result};

/// Precoding loss assumed by `thp` when no value is given, dB.
pub const DEFAULT_THP_LOSS_DB: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompensationMode {
    None,
    /// FEXT removed with no penalty on the direct path.
    IdealZeroFext,
    /// FEXT removed, direct path attenuated by the precoding loss in dB.
    ThpLoss(f64),
}

impl CompensationMode {
    pub fn thp(precoding_loss_db: f64) -> Result<Self> {
        if !(precoding_loss_db.is_finite() && precoding_loss_db >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "precoding loss must be a finite nonnegative dB value, got {precoding_loss_db}"
            )));
        }
        Ok(CompensationMode::ThpLoss(precoding_loss_db))
    }

    /// Short label used in file names and CSV rows.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CompensationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompensationMode::None => f.write_str("none"),
            CompensationMode::IdealZeroFext => f.write_str("ideal"),
            CompensationMode::ThpLoss(db) => write!(f, "thp:{db}"),
        }
    }
}

impl FromStr for CompensationMode {
    type Err = Error;

    /// `none`, `ideal`, `thp` or `thp:<loss_db>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "none" => Ok(CompensationMode::None),
            "ideal" => Ok(CompensationMode::IdealZeroFext),
            "thp" => CompensationMode::thp(DEFAULT_THP_LOSS_DB),
            _ => match s.strip_prefix("thp:") {
                Some(db) => {
                    let loss = db.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!("bad precoding loss `{db}` in compensation `{s}`"))
                    })?;
                    CompensationMode::thp(loss)
                }
                None => Err(Error::InvalidArgument(format!(
                    "unknown compensation `{s}` (expected none, ideal or thp:<loss_db>)"
                ))),
            },
        }
    }
}

/// Applies the compensation model to every tone.
pub fn compensate(channels: &ChannelMatrixSet, mode: CompensationMode) -> ChannelMatrixSet {
    let scale = match mode {
        CompensationMode::None => return channels.clone(),
        CompensationMode::IdealZeroFext => 1.0,
        CompensationMode::ThpLoss(db) => db_to_linear(-db),
    };
    let mut out = channels.clone();
    for tone in &mut out.tones {
        let n = tone.gains.nrows();
        for r in 0..n {
            for c in 0..n {
                if r == c {
                    tone.gains[(r, c)] *= scale;
                } else {
                    tone.gains[(r, c)] = 0.0;
                }
            }
        }
    }
    out
}
