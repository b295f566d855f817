use std::io;

use thiserror::Error;

/// Error type shared by every module in this crate.
///
/// The split matters to callers: `Ingest`, `BadFile`, `NoStreams` and
/// `StreamTooLong` describe rejected input data, `InvalidArgument` describes a
/// caller contract violation, and `Corrupt` / `Format` / `Corruption` describe
/// archives or intermediate blocks that fail lossless inversion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] io::Error),

    #[error("no streams")]
    NoStreams,

    /// A CSV cell that is not an unsigned 16-bit integer.
    #[error("line {line}, column {column}: {reason}")]
    Ingest {
        line: usize,
        column: usize,
        reason: String,
    },

    /// Structurally invalid raw stream file.
    #[error("bad stream file: {0}")]
    BadFile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Segmentation precondition: callers split long streams before padding.
    #[error("stream {id} has {len} symbols, longer than block length {block_len}; split it into blocks first")]
    StreamTooLong { id: u64, len: usize, block_len: usize },

    /// A transform or coder stage received data it cannot invert.
    #[error("corrupt data: {0}")]
    Corrupt(String),

    /// The container failed structural parsing.
    #[error("archive format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    /// A cluster payload failed to decode.
    #[error("corruption in cluster {cluster} (record at byte {offset}): {reason}")]
    Corruption {
        cluster: usize,
        offset: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
