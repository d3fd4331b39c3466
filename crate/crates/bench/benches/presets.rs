use anchorpath::scenario::{generate, GenParams};
use anchorpath::{build_timetable, Preset};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn presets(c: &mut Criterion) {
    let mut group = c.benchmark_group("presets");
    group.sample_size(10);
    for n in [12usize, 20] {
        for preset in Preset::ALL {
            let scenario =
                generate(&GenParams { grid: n, agvs: 4, demands: 40, preset, ..GenParams::default() }).unwrap();
            let prepared = scenario.prepare().unwrap();
            let config = scenario.config();
            group.bench_with_input(BenchmarkId::new(preset.name(), n), &prepared, |b, p| {
                b.iter(|| build_timetable(&p.graph, &p.links, &p.placement, &scenario.demands, &config).unwrap())
            });
        }
    }
    group.finish();
}

fn anchorisers(c: &mut Criterion) {
    let mut group = c.benchmark_group("anchorisers");
    group.sample_size(10);
    for agvs in [10usize, 30] {
        for anchoriser in [anchorpath::Anchoriser::Naive, anchorpath::Anchoriser::Greedy] {
            let scenario =
                generate(&GenParams { grid: 20, agvs, demands: 0, anchoriser, ..GenParams::default() }).unwrap();
            let prepared = scenario.prepare().unwrap();
            let config = scenario.config();
            group.bench_with_input(BenchmarkId::new(anchoriser.name(), agvs), &prepared, |b, p| {
                b.iter(|| build_timetable(&p.graph, &p.links, &p.placement, &[], &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, presets, anchorisers);
criterion_main!(benches);
