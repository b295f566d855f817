//! Run tokens over the move-to-front output.
//!
//! A run of at least `run_threshold` equal symbols becomes three parts in
//! one integer stream: a reserved marker (one past the largest data symbol,
//! in the chain the alphabet size), the repeated symbol, then the run length
//! as base-128 digits with a continuation bit. Everything stays in a single
//! symbol stream so the entropy coder can model it directly.
//!
//! The dynamic form keeps the run-encoded stream only when it is strictly
//! shorter, counted in stream symbols; otherwise it passes the input through
//! and only the one-bit mode flag is added. Containers apply their own
//! serialized-size rule on top when choosing a mode; see the archive module.

use crate::error::{Error, Result};

/// One run-token stream plus the flag saying whether runs were folded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleBlock {
    /// True when `payload` holds run tokens, false for raw passthrough.
    pub run_encoded: bool,
    pub payload: Vec<u32>,
    /// Reserved marker value; every data symbol is strictly below it.
    pub marker: u32,
}

pub const MIN_RUN_THRESHOLD: usize = 2;

fn validate(seq: &[u32], run_threshold: usize, marker: u32) -> Result<()> {
    if run_threshold < MIN_RUN_THRESHOLD {
        return Err(Error::InvalidArgument(format!(
            "run threshold {run_threshold} below the minimum of {MIN_RUN_THRESHOLD}"
        )));
    }
    if let Some(&bad) = seq.iter().find(|&&s| s >= marker) {
        return Err(Error::InvalidArgument(format!(
            "symbol {bad} is not below the run marker {marker}"
        )));
    }
    Ok(())
}

/// Folds every maximal run of length >= `run_threshold` into marker tokens.
fn run_encode(seq: &[u32], run_threshold: usize, marker: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        let sym = seq[i];
        let mut j = i + 1;
        while j < seq.len() && seq[j] == sym {
            j += 1;
        }
        let run = j - i;
        if run >= run_threshold {
            out.push(marker);
            out.push(sym);
            let mut count = run as u64;
            loop {
                let digit = (count & 0x7f) as u32;
                count >>= 7;
                if count == 0 {
                    out.push(digit);
                    break;
                }
                out.push(digit | 0x80);
            }
        } else {
            out.extend(std::iter::repeat_n(sym, run));
        }
        i = j;
    }
    out
}

/// Always folds runs, regardless of whether that shrinks the stream.
pub fn rle_encode_static(seq: &[u32], run_threshold: usize, marker: u32) -> Result<RleBlock> {
    validate(seq, run_threshold, marker)?;
    Ok(RleBlock {
        run_encoded: true,
        payload: run_encode(seq, run_threshold, marker),
        marker,
    })
}

/// Folds runs only when the token stream comes out strictly shorter than
/// the input; ties and losses pass the input through unchanged.
pub fn rle_encode_dynamic(seq: &[u32], run_threshold: usize, marker: u32) -> Result<RleBlock> {
    validate(seq, run_threshold, marker)?;
    let tokens = run_encode(seq, run_threshold, marker);
    if tokens.len() < seq.len() {
        Ok(RleBlock {
            run_encoded: true,
            payload: tokens,
            marker,
        })
    } else {
        Ok(RleBlock {
            run_encoded: false,
            payload: seq.to_vec(),
            marker,
        })
    }
}

pub fn rle_decode(block: &RleBlock) -> Result<Vec<u32>> {
    if !block.run_encoded {
        return Ok(block.payload.clone());
    }
    let marker = block.marker;
    let mut out = Vec::with_capacity(block.payload.len());
    let mut iter = block.payload.iter().copied().peekable();
    while let Some(token) = iter.next() {
        if token < marker {
            out.push(token);
            continue;
        }
        if token > marker {
            return Err(Error::Corrupt(format!(
                "token {token} above the run marker {marker}"
            )));
        }
        let sym = iter
            .next()
            .ok_or_else(|| Error::Corrupt("run token truncated before its symbol".into()))?;
        if sym >= marker {
            return Err(Error::Corrupt(format!(
                "run symbol {sym} is not below the marker {marker}"
            )));
        }
        let mut count = 0u64;
        let mut shift = 0u32;
        loop {
            let digit = iter
                .next()
                .ok_or_else(|| Error::Corrupt("run token truncated inside its length".into()))?;
            if digit > 0xff {
                return Err(Error::Corrupt(format!("run length digit {digit} out of range")));
            }
            if shift > 56 {
                return Err(Error::Corrupt("run length overflows".into()));
            }
            count |= u64::from(digit & 0x7f) << shift;
            shift += 7;
            if digit & 0x80 == 0 {
                break;
            }
        }
        if count == 0 {
            return Err(Error::Corrupt("run of length zero".into()));
        }
        if count > u64::from(u32::MAX) {
            return Err(Error::Corrupt(format!("run length {count} is implausible")));
        }
        out.extend(std::iter::repeat_n(sym, count as usize));
    }
    Ok(out)
}
