//! Static-model arithmetic coding.
//!
//! The coder is the classic 32-bit integer implementation: interval ends
//! `low` and `high`, bit-at-a-time renormalization with pending underflow
//! bits, and a final flush of the disambiguating quarter. Symbol counts are
//! scaled to a bounded total before coding, which keeps every interval
//! subdivision non-empty at 32-bit precision. The symbol count of the
//! message travels outside the payload; there is no end-of-stream symbol.

pub mod exact;

use crate::error::{Error, Result};

/// Largest count total used for coding. Tables with a bigger exact total are
/// halved down to it; tables that cannot shrink further (every count already
/// 1) may exceed it and the coder handles any total below `1 << 30`.
pub const CODING_TOTAL_CAP: u64 = 65_535;

const PRECISION_LIMIT: u64 = 1 << 30;

/// Occurrence counts for a symbol alphabet, with cumulative spans in
/// ascending symbol order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    symbols: Vec<u32>,
    counts: Vec<u32>,
    /// `cumulative[i]` is the count mass before `symbols[i]`; the last entry
    /// equals `total`.
    cumulative: Vec<u32>,
    total: u32,
}

impl FrequencyTable {
    /// Builds a table from `(symbol, count)` pairs in strictly ascending
    /// symbol order with every count at least 1.
    pub fn from_counts(pairs: &[(u32, u32)]) -> Result<FrequencyTable> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("empty frequency table".into()));
        }
        let mut symbols = Vec::with_capacity(pairs.len());
        let mut counts = Vec::with_capacity(pairs.len());
        let mut cumulative = Vec::with_capacity(pairs.len() + 1);
        cumulative.push(0u32);
        let mut total = 0u64;
        for &(sym, count) in pairs {
            if let Some(&last) = symbols.last() {
                if sym <= last {
                    return Err(Error::InvalidArgument(format!(
                        "symbols out of order: {sym} after {last}"
                    )));
                }
            }
            if count == 0 {
                return Err(Error::InvalidArgument(format!("symbol {sym} has count 0")));
            }
            total += u64::from(count);
            if total > u64::from(u32::MAX) {
                return Err(Error::InvalidArgument("count total overflows".into()));
            }
            symbols.push(sym);
            counts.push(count);
            cumulative.push(total as u32);
        }
        Ok(FrequencyTable {
            symbols,
            counts,
            cumulative,
            total: total as u32,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.symbols.iter().copied().zip(self.counts.iter().copied())
    }

    /// Cumulative span `[lo, hi)` of `sym`, in count units.
    pub fn span(&self, sym: u32) -> Option<(u32, u32)> {
        let i = self.symbols.binary_search(&sym).ok()?;
        Some((self.cumulative[i], self.cumulative[i + 1]))
    }

    fn symbol_at_mass(&self, scaled: u64) -> (u32, u32, u32) {
        let i = self.cumulative[1..].partition_point(|&c| u64::from(c) <= scaled);
        (self.symbols[i], self.cumulative[i], self.cumulative[i + 1])
    }

    /// Scaled copy whose total fits [`CODING_TOTAL_CAP`] where possible:
    /// counts are halved (rounding down, floor 1) until the total fits or
    /// every count is already 1. Idempotent on its own output.
    pub fn fit_for_coding(&self) -> FrequencyTable {
        let mut counts = self.counts.clone();
        let mut total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        while total > CODING_TOTAL_CAP && counts.iter().any(|&c| c > 1) {
            total = 0;
            for c in counts.iter_mut() {
                *c = (*c / 2).max(1);
                total += u64::from(*c);
            }
        }
        let mut cumulative = Vec::with_capacity(counts.len() + 1);
        cumulative.push(0u32);
        let mut acc = 0u32;
        for &c in &counts {
            acc += c;
            cumulative.push(acc);
        }
        FrequencyTable {
            symbols: self.symbols.clone(),
            counts,
            cumulative,
            total: acc,
        }
    }
}

/// Exact occurrence counts of every distinct symbol in `seq`.
pub fn build_freq_model(seq: &[u32]) -> Result<FrequencyTable> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("cannot model an empty sequence".into()));
    }
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for &s in &sorted {
        match pairs.last_mut() {
            Some((sym, count)) if *sym == s => *count += 1,
            _ => pairs.push((s, 1)),
        }
    }
    FrequencyTable::from_counts(&pairs)
}

/// A bit string with an exact bit length, packed most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bitstream {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl Bitstream {
    pub fn new() -> Self {
        Bitstream::default()
    }

    /// Wraps packed bytes; the final byte may only be partially used.
    pub fn from_bytes(bytes: Vec<u8>, bit_len: usize) -> Result<Bitstream> {
        if bit_len > bytes.len() * 8 || (bytes.len() * 8).saturating_sub(bit_len) >= 8 {
            return Err(Error::InvalidArgument(format!(
                "{} bytes cannot carry exactly {bit_len} bits",
                bytes.len()
            )));
        }
        Ok(Bitstream { bytes, bit_len })
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.bit_len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let byte = self.bit_len / 8;
            self.bytes[byte] |= 1 << (7 - (self.bit_len % 8));
        }
        self.bit_len += 1;
    }

    fn bit(&self, i: usize) -> bool {
        (self.bytes[i / 8] >> (7 - (i % 8))) & 1 == 1
    }
}

const CODE_BITS: usize = 32;
const TOP: u64 = 1 << CODE_BITS;
const HALF: u64 = TOP / 2;
const Q1: u64 = TOP / 4;
const Q3: u64 = 3 * (TOP / 4);

struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    out: Bitstream,
}

impl Encoder {
    fn new() -> Self {
        Encoder {
            low: 0,
            high: TOP - 1,
            pending: 0,
            out: Bitstream::new(),
        }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push_bit(bit);
        for _ in 0..self.pending {
            self.out.push_bit(!bit);
        }
        self.pending = 0;
    }

    fn encode_span(&mut self, lo: u64, hi: u64, total: u64) {
        let range = self.high - self.low + 1;
        self.high = self.low + range * hi / total - 1;
        self.low += range * lo / total;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= Q1 && self.high < Q3 {
                self.pending += 1;
                self.low -= Q1;
                self.high -= Q1;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    fn finish(mut self) -> Bitstream {
        self.pending += 1;
        let bit = self.low >= Q1;
        self.emit(bit);
        self.out
    }
}

fn check_total(total: u32) -> Result<()> {
    if u64::from(total) >= PRECISION_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "count total {total} exceeds coder precision"
        )));
    }
    Ok(())
}

/// Codes `seq` against `model`. Every symbol of `seq` must appear in the
/// model. The payload length stays within a small constant of the message
/// information content under the scaled model.
pub fn ac_encode(seq: &[u32], model: &FrequencyTable) -> Result<Bitstream> {
    let model = model.fit_for_coding();
    check_total(model.total())?;
    let total = u64::from(model.total());
    let mut enc = Encoder::new();
    for &sym in seq {
        let (lo, hi) = model.span(sym).ok_or_else(|| {
            Error::InvalidArgument(format!("symbol {sym} missing from the model"))
        })?;
        enc.encode_span(u64::from(lo), u64::from(hi), total);
    }
    Ok(enc.finish())
}

struct BitBudgetReader<'a> {
    bits: &'a Bitstream,
    pos: usize,
}

impl BitBudgetReader<'_> {
    /// Bits past the payload read as zero, but only up to the coder state
    /// width; needing more means the payload was truncated.
    fn next(&mut self) -> Result<u64> {
        let pos = self.pos;
        self.pos += 1;
        if pos < self.bits.bit_len() {
            Ok(u64::from(self.bits.bit(pos)))
        } else if pos < self.bits.bit_len() + CODE_BITS {
            Ok(0)
        } else {
            Err(Error::Corrupt("bitstream exhausted: truncated payload".into()))
        }
    }
}

/// Decodes exactly `out_len` symbols from a payload written by [`ac_encode`]
/// with the same model.
pub fn ac_decode(bits: &Bitstream, model: &FrequencyTable, out_len: usize) -> Result<Vec<u32>> {
    if out_len == 0 {
        return Ok(Vec::new());
    }
    let model = model.fit_for_coding();
    check_total(model.total())?;
    let total = u64::from(model.total());

    let mut reader = BitBudgetReader { bits, pos: 0 };
    let mut value = 0u64;
    for _ in 0..CODE_BITS {
        value = (value << 1) | reader.next()?;
    }

    let mut low = 0u64;
    let mut high = TOP - 1;
    let mut out = Vec::with_capacity(out_len);
    for _ in 0..out_len {
        if value < low || value > high {
            return Err(Error::Corrupt("decoder state diverged: corrupt payload".into()));
        }
        let range = high - low + 1;
        let scaled = ((value - low + 1) * total - 1) / range;
        debug_assert!(scaled < total);
        let (sym, lo, hi) = model.symbol_at_mass(scaled);
        out.push(sym);
        high = low + range * u64::from(hi) / total - 1;
        low += range * u64::from(lo) / total;
        loop {
            if high < HALF {
                // Nothing to subtract.
            } else if low >= HALF {
                value -= HALF;
                low -= HALF;
                high -= HALF;
            } else if low >= Q1 && high < Q3 {
                value -= Q1;
                low -= Q1;
                high -= Q1;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
            value = (value << 1) | reader.next()?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn model_counts_are_exact() {
        let t = build_freq_model(&[4, 2, 4, 4, 9, 2]).unwrap();
        assert_eq!(t.symbols(), &[2, 4, 9]);
        assert_eq!(t.counts(), &[2, 3, 1]);
        assert_eq!(t.total(), 6);
        assert_eq!(t.span(4), Some((2, 5)));
        assert_eq!(t.span(7), None);
    }

    #[test]
    fn from_counts_validates_order_and_zeroes() {
        assert!(FrequencyTable::from_counts(&[]).is_err());
        assert!(FrequencyTable::from_counts(&[(3, 1), (3, 1)]).is_err());
        assert!(FrequencyTable::from_counts(&[(5, 1), (4, 1)]).is_err());
        assert!(FrequencyTable::from_counts(&[(1, 0)]).is_err());
    }

    #[test]
    fn oversized_totals_halve_down_to_the_cap() {
        let t = FrequencyTable::from_counts(&[(0, 400_000), (1, 100_000), (2, 1)]).unwrap();
        let fit = t.fit_for_coding();
        assert!(u64::from(fit.total()) <= CODING_TOTAL_CAP);
        // Halving preserves rough proportions and the floor of 1.
        assert!(fit.counts()[0] > fit.counts()[1]);
        assert_eq!(fit.counts()[2], 1);
        // A second fit changes nothing.
        assert_eq!(fit.fit_for_coding(), fit);
    }

    #[test]
    fn all_ones_tables_may_exceed_the_cap() {
        let pairs: Vec<(u32, u32)> = (0..70_000u32).map(|s| (s, 1)).collect();
        let t = FrequencyTable::from_counts(&pairs).unwrap();
        let fit = t.fit_for_coding();
        assert_eq!(fit.total(), 70_000);
        // Still codable: round trip a few symbols.
        let msg = vec![0u32, 69_999, 35_000];
        let bits = ac_encode(&msg, &fit).unwrap();
        assert_eq!(ac_decode(&bits, &fit, msg.len()).unwrap(), msg);
    }

    #[test]
    fn bitstream_length_bookkeeping() {
        let mut b = Bitstream::new();
        for i in 0..11 {
            b.push_bit(i % 3 == 0);
        }
        assert_eq!(b.bit_len(), 11);
        assert_eq!(b.bytes().len(), 2);
        let rebuilt = Bitstream::from_bytes(b.bytes().to_vec(), 11).unwrap();
        assert_eq!(rebuilt, b);
        assert!(Bitstream::from_bytes(vec![0], 9).is_err());
        assert!(Bitstream::from_bytes(vec![0, 0], 8).is_err());
    }

    #[test]
    fn round_trips_random_messages() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let alphabet = rng.gen_range(1..=40u32);
            let len = rng.gen_range(1..=400);
            let seq: Vec<u32> = (0..len).map(|_| rng.gen_range(0..alphabet) * 7).collect();
            let model = build_freq_model(&seq).unwrap();
            let bits = ac_encode(&seq, &model).unwrap();
            let back = ac_decode(&bits, &model, seq.len()).unwrap();
            assert_eq!(back, seq);
        }
    }

    // Equiprobable binary data needs one bit per symbol; the payload for
    // 1024 random coin flips lands in [1024, 1056].
    #[test]
    fn equiprobable_bits_code_at_one_bit_per_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let seq: Vec<u32> = (0..1024).map(|_| rng.gen_range(0..2u32)).collect();
        let model = FrequencyTable::from_counts(&[(0, 1), (1, 1)]).unwrap();
        let bits = ac_encode(&seq, &model).unwrap();
        assert!(
            (1024..=1056).contains(&bits.bit_len()),
            "payload of {} bits",
            bits.bit_len()
        );
        assert_eq!(ac_decode(&bits, &model, seq.len()).unwrap(), seq);
    }

    #[test]
    fn single_symbol_model_needs_almost_no_bits() {
        let seq = vec![9u32; 1000];
        let model = build_freq_model(&seq).unwrap();
        let bits = ac_encode(&seq, &model).unwrap();
        assert!(bits.bit_len() <= 32, "payload of {} bits", bits.bit_len());
        assert_eq!(ac_decode(&bits, &model, 1000).unwrap(), seq);
    }

    #[test]
    fn unknown_symbol_is_rejected() {
        let model = build_freq_model(&[1, 2]).unwrap();
        assert!(matches!(
            ac_encode(&[3], &model),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn truncated_payload_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq: Vec<u32> = (0..1000).map(|_| rng.gen_range(0..2u32)).collect();
        let model = build_freq_model(&seq).unwrap();
        let bits = ac_encode(&seq, &model).unwrap();
        let cut = Bitstream::from_bytes(bits.bytes()[..13].to_vec(), 100).unwrap();
        assert!(matches!(
            ac_decode(&cut, &model, seq.len()),
            Err(Error::Corrupt(_))
        ));
    }

    #[test]
    fn payload_stays_near_information_content() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let alphabet = rng.gen_range(1..=32u32);
            let len = rng.gen_range(1..=600);
            let seq: Vec<u32> = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
            let model = build_freq_model(&seq).unwrap().fit_for_coding();
            let total = f64::from(model.total());
            let content: f64 = seq
                .iter()
                .map(|&s| {
                    let (lo, hi) = model.span(s).unwrap();
                    -(f64::from(hi - lo) / total).log2()
                })
                .sum();
            let bits = ac_encode(&seq, &model).unwrap();
            assert!(
                (bits.bit_len() as f64) <= content.ceil() + 32.0,
                "{} bits for {:.1} bits of content",
                bits.bit_len(),
                content
            );
        }
    }
}
