//! Command-line front end for `vlsf-core`: tail tables, decoding-time
//! optimization, rate curves and the acceptance checks.

#![allow(clippy::needless_range_loop)]

pub mod checks;
pub mod commands;
pub mod output;
pub mod parallel;

use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use vlsf_core::Channel;

/// Channel given on the command line as `biawgn:SNRdB`, `bsc:p` or `bec:p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelArg(pub Channel);

impl FromStr for ChannelArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (kind, value) = s.split_once(':').ok_or_else(|| anyhow!("expected KIND:VALUE, got `{s}`"))?;
        let v: f64 = value.parse().with_context(|| format!("bad channel parameter `{value}`"))?;
        let ch = match kind.to_ascii_lowercase().as_str() {
            "biawgn" => Channel::biawgn_db(v),
            "bsc" => Channel::Bsc { p: v },
            "bec" => Channel::Bec { p: v },
            other => bail!("unknown channel `{other}` (biawgn, bsc, bec)"),
        };
        ch.validate()?;
        Ok(ChannelArg(ch))
    }
}

/// Inclusive integer range `a:b` or `a:b:step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeArg {
    pub start: u64,
    pub end: u64,
    pub step: u64,
}

impl RangeArg {
    pub fn values(&self) -> Vec<u64> {
        (self.start..=self.end).step_by(self.step as usize).collect()
    }
}

impl FromStr for RangeArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<u64>().with_context(|| format!("bad integer `{t}` in range `{s}`"));
        let (start, end, step) = match parts.as_slice() {
            [a] => (num(a)?, num(a)?, 1),
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => bail!("expected START:END[:STEP], got `{s}`"),
        };
        if start > end || step == 0 {
            bail!("empty range `{s}`");
        }
        Ok(RangeArg { start, end, step })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_channels() {
        assert_eq!("bsc:0.11".parse::<ChannelArg>().unwrap().0, Channel::Bsc { p: 0.11 });
        assert_eq!("BEC:0.5".parse::<ChannelArg>().unwrap().0, Channel::Bec { p: 0.5 });
        let ChannelArg(Channel::BiAwgn { snr }) = "biawgn:0".parse().unwrap() else { panic!() };
        assert!((snr - 1.0).abs() < 1e-15);
        assert!("bsc:0.7".parse::<ChannelArg>().is_err());
        assert!("awgn:1".parse::<ChannelArg>().is_err());
    }

    #[test]
    fn parses_ranges() {
        assert_eq!("3:9:3".parse::<RangeArg>().unwrap().values(), vec![3, 6, 9]);
        assert_eq!("5".parse::<RangeArg>().unwrap().values(), vec![5]);
        assert!("9:3".parse::<RangeArg>().is_err());
    }
}
