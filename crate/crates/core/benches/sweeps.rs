//! Parallel vs sequential throughput of the sweep-style workloads.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wpt_dq::oracle::{extract_steady_state, simulate};
use wpt_dq::params::{DriveSpec, OperatingPoint, SystemParams, Waveform};
use wpt_dq::phasor::{frequency_sweep_par, frequency_sweep_seq, linspace};
use wpt_dq::{map_ordered, map_ordered_seq};

fn table_i(m: f64) -> SystemParams {
    SystemParams::new(140.90e-6, 16.45e-9, 0.200, 55.20e-6, 41.47e-9, 0.084, 100.0, m).unwrap()
}

fn bench_phasor_sweep(c: &mut Criterion) {
    let params = table_i(9e-6);
    let freqs = linspace(85e3, 125e3, 4001);
    let mut group = c.benchmark_group("phasor_sweep_4001");
    group.bench_function(BenchmarkId::new("seq", ""), |b| {
        b.iter(|| frequency_sweep_seq(&params, 25.4648, &freqs).unwrap())
    });
    group.bench_function(BenchmarkId::new("par", ""), |b| {
        b.iter(|| frequency_sweep_par(&params, 25.4648, &freqs).unwrap())
    });
    group.finish();
}

fn oracle_spot(params: &SystemParams, f: f64) -> (f64, f64) {
    let drive = DriveSpec::new(20.0, 0.0, f, Waveform::SinusoidalFundamental).unwrap();
    let out = simulate(params, &drive, 80.0 / f, 1.0 / (400.0 * f)).unwrap();
    extract_steady_state(&out.i_t, f, 10).unwrap()
}

fn bench_oracle_spots(c: &mut Criterion) {
    let params = table_i(15e-6);
    let freqs = linspace(85e3, 125e3, 8);
    let mut group = c.benchmark_group("oracle_spots_8");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("seq", ""), |b| {
        b.iter(|| map_ordered_seq(&freqs, |&f| oracle_spot(&params, f)))
    });
    group.bench_function(BenchmarkId::new("par", ""), |b| {
        b.iter(|| map_ordered(&freqs, |&f| oracle_spot(&params, f)))
    });
    group.finish();
}

fn bench_dq_steady_state(c: &mut Criterion) {
    let params = table_i(9e-6);
    let op = OperatingPoint {
        omega: 2.0 * std::f64::consts::PI * 105e3,
        u_s: 25.4648,
    };
    c.bench_function("dq_steady_state", |b| {
        b.iter(|| wpt_dq::dq::dq_steady_state_at(&params, &op).unwrap())
    });
}

criterion_group!(benches, bench_phasor_sweep, bench_oracle_spots, bench_dq_steady_state);
criterion_main!(benches);
