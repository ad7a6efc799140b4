use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use xplain::par::{map_with, Exec};
use xplain::reasoner::Reasoner;
use xplain::world::{gen_profile_scene, rel_lit, Profile};

/// Generates a scene and plans to stack its first object on its last one.
fn plan_one(seed: u64) -> usize {
    let scene = gen_profile_scene(seed, Profile::Real);
    let domain = scene.domain(&xplain::ra_domain());
    let r = Reasoner::new(&domain).unwrap();
    let s0 = r.initial_state(&scene.history(&domain)).unwrap();
    let names = scene.names();
    let goal = [rel_lit("on", names[0], names[names.len() - 1])];
    r.plan_set(&s0, &goal, 10).map(|p| p.plans.len()).unwrap_or(0)
}

fn bench(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..16).collect();
    let mut g = c.benchmark_group("plan_16_scenes");
    g.sample_size(10);
    for (name, mode) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        g.bench_function(name, |b| b.iter(|| map_with(mode, black_box(seeds.clone()), plan_one)));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
