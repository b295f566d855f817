//! Entropy and size accounting.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// First-order entropy of a symbol sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    /// Shannon entropy in bits per symbol.
    pub bits_per_symbol: f64,
    /// Number of distinct symbols observed.
    pub alphabet_size: usize,
    /// `log2(alphabet_size)`, the entropy of a uniform source over the
    /// observed alphabet. `bits_per_symbol` never exceeds this.
    pub h_max: f64,
    /// Symbols counted.
    pub sample_count: usize,
}

/// Empirical Shannon entropy, `-sum p_i log2 p_i` over observed symbol
/// frequencies. A constant sequence scores 0.
pub fn shannon_entropy<I>(symbols: I) -> Result<EntropyReport>
where
    I: IntoIterator<Item = u32>,
{
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for s in symbols {
        *counts.entry(s).or_insert(0) += 1;
    }
    entropy_from_counts(&counts)
}

/// Same as [`shannon_entropy`], from pre-tallied occurrence counts.
pub fn entropy_from_counts(counts: &HashMap<u32, u64>) -> Result<EntropyReport> {
    let n: u64 = counts.values().sum();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "entropy of an empty sequence is undefined".into(),
        ));
    }
    let total = n as f64;
    let mut h = 0.0;
    for &c in counts.values() {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    let alphabet = counts.values().filter(|&&c| c > 0).count();
    Ok(EntropyReport {
        bits_per_symbol: h.max(0.0),
        alphabet_size: alphabet,
        h_max: (alphabet as f64).log2(),
        sample_count: n as usize,
    })
}

/// Size ratio `original_bits / compressed_bits`; above 1 means the encoded
/// form is smaller.
pub fn compression_ratio(original_bits: u64, compressed_bits: u64) -> Result<f64> {
    if original_bits == 0 || compressed_bits == 0 {
        return Err(Error::InvalidArgument(
            "compression ratio needs non-zero sizes".into(),
        ));
    }
    Ok(original_bits as f64 / compressed_bits as f64)
}
