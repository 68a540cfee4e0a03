//! Enumeration and materialization limits shared by every module.
//!
//! Defaults can be replaced at runtime through `IRC_LAB_CAP_OVERRIDE`, either
//! as a single integer applied to every cap or as a comma separated list of
//! `name=value` pairs (`block_len`, `enumeration`, `word_table`, `cover_words`,
//! `folner`, `orbit`, `bits`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENV_VAR: &str = "IRC_LAB_CAP_OVERRIDE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Longest Chacon block that may be materialized.
    pub block_len: u64,
    /// States enumerated by exact occupancy laws and exhaustive orbit windows.
    pub enumeration: u64,
    /// Entries of a materialized permutation table.
    pub word_table: u64,
    /// Admissible words in a circle cover.
    pub cover_words: u64,
    /// Elements of a multiplicative Folner set.
    pub folner: u64,
    /// Orbit size explored by transitivity checks.
    pub orbit: u64,
    /// Bit length of integers built by the Berend-Peres construction.
    pub bits: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            block_len: 10_000_000,
            enumeration: 10_000_000,
            word_table: 1_000_000,
            cover_words: 1_000_000,
            folner: 10_000_000,
            orbit: 10_000_000,
            bits: 1_000_000,
        }
    }
}

impl Caps {
    /// Defaults with `IRC_LAB_CAP_OVERRIDE` applied.
    pub fn from_env() -> Result<Self> {
        match std::env::var(ENV_VAR) {
            Ok(spec) => Caps::default().with_overrides(&spec),
            Err(_) => Ok(Caps::default()),
        }
    }

    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.is_empty() {
            return Ok(self);
        }
        if let Ok(all) = spec.parse::<u64>() {
            if all == 0 {
                return Err(Error::invalid("caps must be positive"));
            }
            return Ok(Caps {
                block_len: all,
                enumeration: all,
                word_table: all,
                cover_words: all,
                folner: all,
                orbit: all,
                bits: all,
            });
        }
        for part in spec.split(',') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("bad cap override `{part}`")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad cap value in `{part}`")))?;
            if value == 0 {
                return Err(Error::invalid("caps must be positive"));
            }
            let slot = match name.trim() {
                "block_len" => &mut self.block_len,
                "enumeration" => &mut self.enumeration,
                "word_table" => &mut self.word_table,
                "cover_words" => &mut self.cover_words,
                "folner" => &mut self.folner,
                "orbit" => &mut self.orbit,
                "bits" => &mut self.bits,
                other => return Err(Error::invalid(format!("unknown cap `{other}`"))),
            };
            *slot = value;
        }
        Ok(self)
    }
}
