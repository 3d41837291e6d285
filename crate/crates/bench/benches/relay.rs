use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use relaylab_bench::{conversation, text_of};
use relaylab_core::Platform;

// Submit latency including transform fan-out and the durable commit.
fn bench_submit(c: &mut Criterion) {
    let body = text_of(200);
    let mut group = c.benchmark_group("submit");
    for people in [2, 4] {
        let dir = tempfile::tempdir().unwrap();
        let platform = Platform::open(dir.path().join("bench.db")).unwrap();
        let conv = conversation(&platform, people);
        let sender = conv.participant_ids[1].clone();
        let mut n = 0u64;
        group.bench_with_input(BenchmarkId::new("file", people), &body, |b, body| {
            b.iter(|| {
                n += 1;
                platform.submit_as(&sender, &conv.id, &format!("b{n}"), body).unwrap()
            })
        });
    }
    let platform = Platform::in_memory().unwrap();
    let conv = conversation(&platform, 2);
    let sender = conv.participant_ids[0].clone();
    let mut n = 0u64;
    group.bench_function("memory/2", |b| {
        b.iter(|| {
            n += 1;
            platform.submit_as(&sender, &conv.id, &format!("m{n}"), &body).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_submit);
criterion_main!(benches);
