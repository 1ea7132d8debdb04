use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scsvm::linalg::{self, Exec};
use scsvm::synth::{self, InstanceSpec};
use scsvm::{fw_train, FwConfig};

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    for &(n, d) in &[(2000usize, 200usize), (8000, 784)] {
        let inst = synth::random_instance(&mut synth::rng(1), &InstanceSpec::new(n, d)).unwrap();
        let coeffs: Vec<f64> = (0..n).map(|i| (i % 7) as f64 / 7.0).collect();
        let w: Vec<f64> = (0..d).map(|h| (h % 5) as f64 - 2.0).collect();
        for (name, exec) in EXECS {
            let label = format!("{n}x{d}");
            group.bench_with_input(
                BenchmarkId::new(format!("combine/{name}"), &label),
                &exec,
                |b, &exec| {
                    let mut out = vec![0.0; d];
                    b.iter(|| linalg::combine_columns(inst.data.columns(), d, &coeffs, 1.0, &mut out, exec))
                },
            );
            group.bench_with_input(
                BenchmarkId::new(format!("margins/{name}"), &label),
                &exec,
                |b, &exec| {
                    let mut out = vec![0.0; n];
                    b.iter(|| linalg::column_dots(inst.data.columns(), d, &w, &mut out, exec))
                },
            );
            group.bench_with_input(
                BenchmarkId::new(format!("fw10/{name}"), &label),
                &exec,
                |b, &exec| {
                    let mut cfg = FwConfig::new(1e-3, 1e-300, 10);
                    cfg.exec = exec;
                    b.iter(|| fw_train(&inst.data, &inst.mask, &cfg).unwrap())
                },
            );
        }
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = kernels
}
criterion_main!(benches);
