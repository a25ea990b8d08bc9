use criterion::{criterion_group, criterion_main, Criterion};
use pumpkin_core::benchmarks::BenchmarkSpec;
use pumpkin_core::resources::estimate;
use pumpkin_core::sim::simulate;
use pumpkin_core::transforms::{multipump_all, streamify_all};
use pumpkin_core::{ClockConfig, CostTable, Mhz, Mode, SimLimits};

fn pipeline(c: &mut Criterion) {
    let spec = BenchmarkSpec::Vecadd { n: 4096, v: 4 };
    let graph = spec.generate().unwrap();
    let inputs = spec.inputs();
    let (slow, fast) = (Mhz::from_int(300), Mhz::from_int(600));
    let streamed = streamify_all(&graph).unwrap();
    let (pumped, _) = multipump_all(&streamed, 2, Mode::Widen, slow, fast).unwrap();
    let costs = CostTable::default();
    let clocks = ClockConfig::new(slow, fast, 2);
    let limits = SimLimits::default();

    c.bench_function("streamify vecadd", |b| b.iter(|| streamify_all(&graph).unwrap()));
    c.bench_function("multipump vecadd", |b| {
        b.iter(|| multipump_all(&streamed, 2, Mode::Widen, slow, fast).unwrap())
    });
    c.bench_function("estimate vecadd", |b| b.iter(|| estimate(&pumped, &costs).unwrap()));
    c.bench_function("simulate vecadd", |b| {
        b.iter(|| simulate(&pumped, &inputs, &clocks, &limits).unwrap())
    });

    let gemm = BenchmarkSpec::GemmSystolic { n: 16, k: 16, m: 16, pes: 4, v: 4 };
    let g = streamify_all(&gemm.generate().unwrap()).unwrap();
    let (gp, _) = multipump_all(&g, 2, Mode::Narrow, slow, fast).unwrap();
    let gin = gemm.inputs();
    c.bench_function("simulate gemm narrow", |b| {
        b.iter(|| simulate(&gp, &gin, &clocks, &limits).unwrap())
    });
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
