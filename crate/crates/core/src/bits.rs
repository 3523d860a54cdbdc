//! Bitstrings with qubit 0 printed leftmost.
//!
//! Basis-state indices use qubit `k` as bit `k` of the index, so the string
//! `"10000"` is index 1 and `"00001"` is index 16.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Expands a basis-state index into `n` bits.
    pub fn from_index(index: u64, n: usize) -> Self {
        Self((0..n).map(|k| index >> k & 1 == 1).collect())
    }

    /// Packs the bits into a basis-state index. Fails above 64 bits.
    pub fn to_index(&self) -> Result<u64> {
        if self.0.len() > 64 {
            return Err(Error::CapacityExceeded {
                what: "bitstring length for index packing",
                value: self.0.len(),
                limit: 64,
            });
        }
        Ok(self
            .0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &b)| acc | (u64::from(b) << k)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn set(&mut self, k: usize, value: bool) {
        self.0[k] = value;
    }

    pub fn flip(&mut self, k: usize) {
        self.0[k] = !self.0[k];
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Spin values `z = 1 - 2s`.
    pub fn spins(&self) -> Vec<i8> {
        self.0.iter().map(|&b| if b { -1 } else { 1 }).collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidInput(format!("bad bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// Formats a basis index as a bitstring with qubit 0 first.
pub fn index_to_string(index: u64, n: usize) -> String {
    BitString::from_index(index, n).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_zero_is_leftmost() {
        assert_eq!(index_to_string(1, 5), "10000");
        assert_eq!("00001".parse::<BitString>().unwrap().to_index().unwrap(), 16);
    }

    #[test]
    fn round_trip() {
        for idx in 0..64u64 {
            let b = BitString::from_index(idx, 6);
            assert_eq!(b.to_index().unwrap(), idx);
            assert_eq!(b.to_string().parse::<BitString>().unwrap(), b);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!("10x".parse::<BitString>().is_err());
    }
}
