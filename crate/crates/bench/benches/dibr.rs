use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use panosweep::dibr::{forward_splat, SplatParams};
use panosweep::scene::{builtin_scene, raycast_erp};
use panosweep::{Baseline, ErpGrid};

fn splat(c: &mut Criterion) {
    let scene = builtin_scene("room").unwrap();
    let mut group = c.benchmark_group("forward splat");
    for (w, h) in [(256, 128), (512, 256)] {
        let (img, depth) = raycast_erp(&scene, scene.default_camera(), ErpGrid::new(w, h).unwrap()).unwrap();
        group.bench_function(format!("{w}x{h}"), |b| {
            b.iter(|| black_box(forward_splat(&img, &depth, Baseline::vertical(0.24), SplatParams::default()).unwrap()))
        });
    }
    group.finish();
    c.bench_function("ray cast 512x256", |b| {
        b.iter(|| black_box(raycast_erp(&scene, scene.default_camera(), ErpGrid::new(512, 256).unwrap()).unwrap()))
    });
}

criterion_group!(benches, splat);
criterion_main!(benches);
