//! The reversible transform chain applied to each cluster of streams:
//! interleave, first derivative, block sort, move-to-front, run tokens.
//! Each stage is lossless on its own; the archive composes them.

pub mod bwt;
pub mod mtf;
pub mod rle;

pub use bwt::{bwt_forward, bwt_inverse, BwtBlock, SENTINEL};
pub use mtf::{mtf_forward, mtf_inverse, MtfSeq};
pub use rle::{rle_decode, rle_encode_dynamic, rle_encode_static, RleBlock};

use crate::error::{Error, Result};
use crate::stream::StreamMatrix;

/// Column-major flattening of a row matrix: position `p` holds
/// `matrix[p % rows][p / rows]`, so the first symbol of every row comes
/// first, then every second symbol, and so on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterleavedSeq {
    pub symbols: Vec<u16>,
    pub rows: usize,
    pub cols: usize,
}

pub fn interleave(matrix: &StreamMatrix) -> Result<InterleavedSeq> {
    let (m, n) = (matrix.rows(), matrix.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("cannot interleave an empty matrix".into()));
    }
    let mut symbols = Vec::with_capacity(m * n);
    for col in 0..n {
        for row in 0..m {
            symbols.push(matrix.row(row)[col]);
        }
    }
    Ok(InterleavedSeq {
        symbols,
        rows: m,
        cols: n,
    })
}

/// Exact inverse of [`interleave`]: rebuilds the row grid.
pub fn deinterleave(seq: &InterleavedSeq) -> Result<Vec<Vec<u16>>> {
    let (m, n) = (seq.rows, seq.cols);
    if m == 0 || n == 0 || seq.symbols.len() != m * n {
        return Err(Error::Corrupt(format!(
            "interleaved length {} does not match {m} rows by {n} columns",
            seq.symbols.len()
        )));
    }
    let mut rows = vec![Vec::with_capacity(n); m];
    for (p, &sym) in seq.symbols.iter().enumerate() {
        rows[p % m].push(sym);
    }
    Ok(rows)
}

/// First-derivative form: the first value verbatim plus zigzag-mapped
/// differences (0, -1, 1, -2, ... map to 0, 1, 2, 3, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSeq {
    pub anchor: u16,
    pub deltas: Vec<u32>,
}

/// Maximum value a zigzag-mapped difference of two 16-bit symbols can take.
pub const MAX_ZIGZAG_DELTA: u32 = 131_070;

pub fn zigzag(d: i32) -> u32 {
    ((d << 1) ^ (d >> 31)) as u32
}

pub fn unzigzag(z: u32) -> i32 {
    ((z >> 1) as i32) ^ -((z & 1) as i32)
}

pub fn first_derivative(seq: &[u16]) -> Result<DeltaSeq> {
    let (&anchor, rest) = seq
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("empty sequence has no derivative".into()))?;
    let mut deltas = Vec::with_capacity(rest.len());
    let mut prev = i32::from(anchor);
    for &v in rest {
        let cur = i32::from(v);
        deltas.push(zigzag(cur - prev));
        prev = cur;
    }
    Ok(DeltaSeq { anchor, deltas })
}

pub fn inverse_derivative(seq: &DeltaSeq) -> Result<Vec<u16>> {
    let mut out = Vec::with_capacity(seq.deltas.len() + 1);
    out.push(seq.anchor);
    let mut acc = i64::from(seq.anchor);
    for &z in &seq.deltas {
        acc += i64::from(unzigzag(z));
        if !(0..=65535).contains(&acc) {
            return Err(Error::Corrupt(format!(
                "reconstructed symbol {acc} outside the 16-bit range"
            )));
        }
        out.push(acc as u16);
    }
    Ok(out)
}
