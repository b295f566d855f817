//! Dev-only sweep: measures the CR orderings, entropy drop, and silhouette
//! gap on the synthetic corpus across noise amplitudes, to pick generator
//! constants with comfortable margins. Not part of the test suite.

use smrc_core::{
    cluster, compress, decompress, generate_synthetic, pad_to_matrix, stage_entropies,
    ClusterMethod, CodecConfig, RleMode, Stage, SyntheticSpec,
};

fn cr(streams: &[smrc_core::CompressedStream], config: &CodecConfig) -> f64 {
    let archive = compress(streams, config).unwrap();
    let back = decompress(&archive).unwrap();
    for (a, b) in back.iter().zip(streams) {
        assert_eq!(a.symbols, b.symbols);
    }
    archive.original_bits() as f64 / (archive.to_bytes().len() as f64 * 8.0)
}

fn main() {
    let seeds: Vec<u64> = (0..50).collect();
    for noise in [0.02f64, 0.05, 0.1, 0.2, 0.4] {
        let mut dk_wins_sk = 0;
        let mut dk_wins_dr = 0;
        let mut dk_sum = 0.0;
        let mut sk_sum = 0.0;
        let mut dr_sum = 0.0;
        let mut ratio_sum = 0.0;
        let mut sil_wins = 0;
        for &seed in &seeds {
            let spec = SyntheticSpec {
                noise_level: noise,
                seed,
                ..SyntheticSpec::default()
            };
            let streams = generate_synthetic(&spec).unwrap();
            let base = CodecConfig {
                seed,
                ..CodecConfig::default()
            };
            let dk = cr(&streams, &base);
            let sk = cr(
                &streams,
                &CodecConfig {
                    rle_mode: RleMode::Static,
                    ..base.clone()
                },
            );
            let dr = cr(
                &streams,
                &CodecConfig {
                    cluster_method: ClusterMethod::Random,
                    ..base.clone()
                },
            );
            dk_sum += dk;
            sk_sum += sk;
            dr_sum += dr;
            if dk > sk {
                dk_wins_sk += 1;
            }
            if dk > dr {
                dk_wins_dr += 1;
            }

            let reports = stage_entropies(&streams, &base).unwrap();
            let h = |s: Stage| {
                reports
                    .iter()
                    .find(|(st, _)| *st == s)
                    .unwrap()
                    .1
                    .bits_per_symbol
            };
            ratio_sum += h(Stage::MoveToFront) / h(Stage::Interleaved);

            let rows: Vec<&[u16]> = streams.iter().map(|s| s.symbols.as_slice()).collect();
            let matrix = pad_to_matrix(&rows, 1500, 0).unwrap();
            let km = cluster::kmeans(&matrix, 8, 100, 1e-6, seed).unwrap();
            let rp = cluster::random_partition(&matrix, 8, seed).unwrap();
            let km_s = cluster::silhouette(&matrix, &km).unwrap().mean;
            let rp_s = cluster::silhouette(&matrix, &rp).unwrap().mean;
            if km_s > rp_s {
                sil_wins += 1;
            }
        }
        let n = seeds.len() as f64;
        println!(
            "noise {:.2}: dk>sk {}/{} dk>dr {}/{} | avg dk {:.3} sk {:.3} dr {:.3} | mtf/raw {:.3} | sil {}/{}",
            noise,
            dk_wins_sk,
            seeds.len(),
            dk_wins_dr,
            seeds.len(),
            dk_sum / n,
            sk_sum / n,
            dr_sum / n,
            ratio_sum / n,
            sil_wins,
            seeds.len()
        );
    }
}
