//! Sequential vs parallel execution of the hot kernels.

use std::hint::black_box;

use ahsp_core::algorithms::Pipeline;
use ahsp_core::exec::Execution;
use ahsp_core::group::{FiniteAbelianGroup, ProductSubgroup};
use ahsp_core::ops::HidingFunction;
use ahsp_core::rng;
use ahsp_core::state::{LocalOp, PureState, Register};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn fourier_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("fourier_kernel");
    for dims in [vec![64, 64, 16], vec![1024, 256]] {
        let reg = Register::new(&dims).unwrap();
        let state = PureState::random(&reg, &mut rng::stream(1, 0));
        let label = format!("{dims:?}");
        for (name, exec) in MODES {
            for target in 0..dims.len() {
                let op = LocalOp::fourier(dims[target]).unwrap();
                group.bench_with_input(
                    BenchmarkId::new(format!("{name}/target{target}"), &label),
                    &state,
                    |b, s| {
                        let mut s = s.clone();
                        b.iter(|| s.apply_with(exec, black_box(&op), &[target]).unwrap());
                    },
                );
            }
        }
    }
    group.finish();
}

fn init_free_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("init_free_run");
    group.sample_size(20);
    for (moduli, gens) in [(vec![64u64, 64], vec![4u64, 8]), (vec![4096], vec![64])] {
        let g = FiniteAbelianGroup::new(&moduli).unwrap();
        let h = ProductSubgroup::new(&g, &gens).unwrap();
        let f = HidingFunction::canonical(&h, Some(7)).unwrap();
        for (name, exec) in MODES {
            let p = Pipeline::new(&f).unwrap().with_execution(exec);
            let phi = PureState::random(&p.aux_register(), &mut rng::stream(2, 0));
            let z = f.codomain().element_at(1).unwrap();
            group.bench_function(BenchmarkId::new(name, format!("{moduli:?}/{gens:?}")), |b| {
                b.iter(|| p.init_free_state(black_box(&phi), &z).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, fourier_kernel, init_free_run);
criterion_main!(benches);
