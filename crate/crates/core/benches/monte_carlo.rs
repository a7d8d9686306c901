use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ergodic_core::mc::{estimate_many, estimate_many_sequential};
use ergodic_core::rates::{rate_in_sample, rate_mimo_sample};
use ergodic_core::{ChannelMatrix, FadingModel, Hop, RandomStream};

const TRIALS: u64 = 50_000;

fn rate_trial(relays: usize) -> impl Fn(&mut ergodic_core::stream::StreamRng) -> [f64; 2] + Sync + Send {
    move |rng| {
        let h = ChannelMatrix::sample(&FadingModel::Rayleigh, Hop::First, relays, rng);
        [rate_in_sample(&h, 100.0), rate_mimo_sample(&h, 100.0)]
    }
}

fn rates(c: &mut Criterion) {
    let stream = RandomStream::new(1);
    let mut group = c.benchmark_group("rate_pair");
    group.sample_size(10);
    group.throughput(Throughput::Elements(TRIALS));
    for relays in [2usize, 16, 64] {
        group.bench_with_input(BenchmarkId::new("parallel", relays), &relays, |b, &l| {
            b.iter(|| estimate_many(TRIALS, &stream, rate_trial(l)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", relays), &relays, |b, &l| {
            b.iter(|| estimate_many_sequential(TRIALS, &stream, rate_trial(l)))
        });
    }
    group.finish();
}

criterion_group!(benches, rates);
criterion_main!(benches);
