use anchorpath::geo::{naive_reservations, BoundaryReserver};
use anchorpath::suites::corner_path;
use anchorpath::TimeGraph;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn reservers(c: &mut Criterion) {
    let mut group = c.benchmark_group("reservers");
    for s in [1u64, 2, 4, 6] {
        let cp = corner_path(40, s).expect("corner path");
        let mut tg = TimeGraph::new(cp.graph.resource_count());
        group.bench_with_input(BenchmarkId::new("naive", s), &cp, |b, cp| {
            b.iter(|| {
                let rs = naive_reservations(&cp.path, &cp.links);
                tg.reserve_all(&rs).unwrap();
                tg.remove_all(&rs).unwrap();
            })
        });
        let mut reserver = BoundaryReserver::new();
        group.bench_with_input(BenchmarkId::new("boundary", s), &cp, |b, cp| {
            b.iter(|| {
                let rs = reserver.reserve(&cp.path, &cp.links).unwrap();
                tg.reserve_all(&rs).unwrap();
                tg.remove_all(&rs).unwrap();
            })
        });
    }
    group.finish();
}

criterion_group!(benches, reservers);
criterion_main!(benches);
