//! Benches-only crate; see `benches/pipeline.rs`.
