//! Benchmarks for the pipeline hot paths: parsing + repair, feature
//! enrichment, encoding, boosted training, and Shapley attribution.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use vpf_core::features::{build_enriched, encode_features, EncodePolicy, HashedEmbedder};
use vpf_core::ingest::{parse_bundle, repair_missing};
use vpf_core::models::{train, LearnerKind, LearnerSpec};
use vpf_core::split::{time_series_split, Resolution};
use vpf_core::synth::{generate_bundle, write_country_fixture, SynthConfig};

fn synth_config(n_ballots: usize) -> SynthConfig {
    SynthConfig {
        n_parties: 6,
        n_coalition: 4,
        members_per_party: 10,
        n_ballots,
        defection_rate: 0.1,
        seed: 99,
        ..SynthConfig::default()
    }
}

fn bench_ingest(c: &mut Criterion) {
    let mut group = c.benchmark_group("ingest");
    for n_ballots in [100usize, 1000] {
        let cfg = synth_config(n_ballots);
        let dir = tempfile::tempdir().unwrap();
        write_country_fixture(dir.path(), &cfg).unwrap();
        let config =
            vpf_core::config::load_country_config(&dir.path().join("config.json")).unwrap();
        group.throughput(Throughput::Elements(cfg.n_votes() as u64));
        group.bench_with_input(
            BenchmarkId::new("parse_and_repair", cfg.n_votes()),
            &cfg,
            |b, _| {
                b.iter(|| {
                    let (bundle, _) = parse_bundle(dir.path(), &config).unwrap();
                    repair_missing(bundle, &[]).unwrap()
                })
            },
        );
    }
    group.finish();
}

fn bench_enrich_encode(c: &mut Criterion) {
    let cfg = synth_config(500);
    let out = generate_bundle(&cfg);
    let embedder = HashedEmbedder::new(out.config.embedding.dim, out.config.embedding.seed);
    let policy = EncodePolicy {
        embedding_dim: out.config.embedding.dim,
        parliament_number_categorical: false,
    };

    let mut group = c.benchmark_group("features");
    group.throughput(Throughput::Elements(cfg.n_votes() as u64));
    group.bench_function("build_enriched", |b| {
        b.iter(|| build_enriched(&out.bundle, &out.config, &embedder).unwrap())
    });
    let (records, _) = build_enriched(&out.bundle, &out.config, &embedder).unwrap();
    group.bench_function("encode_features", |b| {
        b.iter(|| encode_features(&records, &policy).unwrap())
    });
    group.finish();
}

fn bench_training(c: &mut Criterion) {
    let cfg = synth_config(100);
    let out = generate_bundle(&cfg);
    let embedder = HashedEmbedder::new(out.config.embedding.dim, out.config.embedding.seed);
    let (records, _) = build_enriched(&out.bundle, &out.config, &embedder).unwrap();
    let (matrix, _) = encode_features(
        &records,
        &EncodePolicy {
            embedding_dim: out.config.embedding.dim,
            parliament_number_categorical: false,
        },
    )
    .unwrap();
    let (train_idx, _, _) = time_series_split(&matrix, 0.75, &Resolution::COARSE_TO_FINE).unwrap();
    let train_matrix = matrix.subset(&train_idx);

    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for kind in [
        LearnerKind::DecisionTree,
        LearnerKind::GaussianNaiveBayes,
        LearnerKind::GradientBoostedTrees,
    ] {
        group.bench_function(kind.name(), |b| {
            b.iter(|| train(&LearnerSpec::new(kind, 1), &train_matrix).unwrap())
        });
    }
    group.finish();
}

fn bench_shapley(c: &mut Criterion) {
    let cfg = synth_config(100);
    let out = generate_bundle(&cfg);
    let embedder = HashedEmbedder::new(out.config.embedding.dim, out.config.embedding.seed);
    let (records, _) = build_enriched(&out.bundle, &out.config, &embedder).unwrap();
    let (matrix, _) = encode_features(
        &records,
        &EncodePolicy {
            embedding_dim: out.config.embedding.dim,
            parliament_number_categorical: false,
        },
    )
    .unwrap();
    let model = train(&LearnerSpec::new(LearnerKind::DecisionTree, 1), &matrix).unwrap();
    let background: Vec<Vec<f64>> = (0..50).map(|i| matrix.row(i * 7).to_vec()).collect();
    let row = matrix.row(matrix.n_rows - 1).to_vec();

    c.bench_function("shapley_sampling_m200", |b| {
        b.iter(|| {
            vpf_core::explain::shapley_sampling(&model, &row, &background, 0, 200, 3).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_ingest,
    bench_enrich_encode,
    bench_training,
    bench_shapley
);
criterion_main!(benches);
