//! Lossless re-compression for collections of 16-bit symbol streams.
//!
//! Streams are grouped by similarity, interleaved within each group, and the
//! interleaved sequence is pushed through a reversible transform chain
//! (first derivative, block sort, move-to-front, run folding) before
//! arithmetic coding. Similar streams interleave into locally repetitive
//! sequences, which is exactly what the chain rewards.
//!
//! Entry points: [`archive::compress`] and [`archive::decompress`] for the
//! container format, [`stream::load_streams`] for ingest, and the
//! `cluster`, `transform`, `coder`, and `metrics` modules for the pieces.

pub mod archive;
pub mod cluster;
pub mod coder;
pub mod error;
pub mod metrics;
pub mod stream;
pub mod transform;
pub(crate) mod wire;

pub use archive::{
    compress, decompress, stage_entropies, Archive, ClusterMethod, ClusterRecord, CodecConfig,
    RleMode, Stage, StreamEntry,
};
pub use cluster::{kmeans, random_partition, silhouette, Clustering, SilhouetteReport};
pub use coder::{ac_decode, ac_encode, build_freq_model, Bitstream, FrequencyTable};
pub use error::{Error, Result};
pub use metrics::{compression_ratio, shannon_entropy, EntropyReport};
pub use stream::{
    generate_synthetic, load_streams, pad_to_matrix, write_csv, write_raw16, CompressedStream,
    CsvLayout, InputFormat, StreamMatrix, SyntheticSpec,
};
pub use transform::{
    bwt::{bwt_forward, bwt_inverse, BwtBlock, SENTINEL},
    deinterleave, first_derivative, interleave, inverse_derivative,
    mtf::{mtf_forward, mtf_inverse, MtfSeq},
    rle::{rle_decode, rle_encode_dynamic, rle_encode_static, RleBlock},
    DeltaSeq, InterleavedSeq,
};
