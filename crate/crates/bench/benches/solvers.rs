use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ncfet_bench::{inverter, nc_device, ring, short_transient};
use ncfet_core::circuits::{inverter_vtc, ro_transient};
use ncfet_core::fet::Polarity;
use ncfet_core::nc_device::{Direction, SweepWindow};
use ncfet_core::presets;

fn device(c: &mut Criterion) {
    let fet = presets::fet(Polarity::N).unwrap();
    c.bench_function("fet_eval", |b| {
        b.iter(|| fet.eval(black_box(0.4), black_box(0.7)).unwrap())
    });

    let nc = nc_device(700.0);
    c.bench_function("solve_static_cold", |b| {
        b.iter(|| nc.solve_static(black_box(0.4), black_box(0.7), None).unwrap())
    });
    c.bench_function("solve_static_warm", |b| {
        b.iter(|| nc.solve_static(black_box(0.4), black_box(0.7), Some(0.45)).unwrap())
    });
    let multi = nc_device(120.0);
    c.bench_function("find_all_roots", |b| {
        b.iter(|| multi.find_all_roots(black_box(0.2), 0.7).unwrap())
    });

    let w = SweepWindow::new(-0.3, 0.9, 1e-3).unwrap();
    c.bench_function("idvg_sweep_1mV", |b| {
        b.iter(|| nc.sweep_idvg(&w, 0.7, Direction::Up).unwrap())
    });
}

fn circuits(c: &mut Criterion) {
    let inv = inverter(true, 0.7);
    let w = SweepWindow::new(0.0, 0.7, 1e-3).unwrap();
    c.bench_function("nc_vtc_1mV", |b| {
        b.iter(|| inverter_vtc(&inv, &w, Direction::Up).unwrap())
    });

    let mut g = c.benchmark_group("ring_transient");
    g.sample_size(10);
    for nc in [false, true] {
        let ro = ring(nc, 0.5);
        let cfg = short_transient(&ro, 3.0);
        let name = if nc { "nc" } else { "conventional" };
        g.bench_function(name, |b| b.iter(|| ro_transient(&ro, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, device, circuits);
criterion_main!(benches);
