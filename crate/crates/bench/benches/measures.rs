use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fanatic_core::fanmeasure::{default_frame, normalize, sample_mixture, sector_masses, Fan};
use fanatic_core::solver::{solve_2fan_3measures, SolveRequest};

fn measures(c: &mut Criterion) {
    let clouds: Vec<_> = (0..3)
        .map(|i| sample_mixture(70 + i, 1000, 3, 0.35))
        .collect();
    let center = normalize([0.3, -0.2, 0.9]);
    let fan = Fan::new(center, default_frame(center), vec![0.0, 2.4]).unwrap();
    c.bench_function("sector_masses_3x1000", |b| {
        b.iter(|| sector_masses(black_box(&fan), &clouds).unwrap())
    });

    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    let req = SolveRequest::new(clouds.clone(), (0.4, 0.6));
    g.bench_function("solve_3x1000", |b| {
        b.iter(|| solve_2fan_3measures(black_box(&req)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, measures);
criterion_main!(benches);
