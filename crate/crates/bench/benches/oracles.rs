use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maxmin::accel::{solve_max_loss, Method};
use maxmin::broo::{katyusha_broo, sgd_broo, BrooRequest, KatyushaConfig, SgdConfig};
use maxmin::softmax::{fsmax_with_grad, gamma_full, make_ball_context};
use maxmin::{subgrad_fmax, QueryLedger, Vector};
use maxmin_bench::hard_fixture;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn softmax(c: &mut Criterion) {
    let mut group = c.benchmark_group("softmax");
    for n in [64, 512, 2048] {
        let (inst, params, x) = hard_fixture(6, n, 0).unwrap();
        group.bench_with_input(BenchmarkId::new("fsmax_with_grad", n), &n, |b, _| {
            b.iter(|| fsmax_with_grad(&inst, &params, &x, &mut QueryLedger::new()).unwrap())
        });
        let ctx = make_ball_context(&inst, &params, &x, 10.0, &mut QueryLedger::new()).unwrap();
        group.bench_with_input(BenchmarkId::new("gamma_full", n), &n, |b, _| {
            b.iter(|| gamma_full(&ctx, &inst, &x, &mut QueryLedger::new()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("subgrad_fmax", n), &n, |b, _| {
            b.iter(|| subgrad_fmax(&inst, &x, &mut QueryLedger::new()).unwrap())
        });
    }
    group.finish();
}

fn ball_oracles(c: &mut Criterion) {
    let mut group = c.benchmark_group("broo");
    group.sample_size(10);
    let (inst, params, x) = hard_fixture(6, 64, 0).unwrap();
    let r = params.r_eps;
    let req = BrooRequest::new(x.clone(), r, 1.0 / r, r / 4.0, 0.05).unwrap();
    group.bench_function("sgd", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| sgd_broo(&inst, &params, &req, &SgdConfig::default(), &mut rng, &mut QueryLedger::new()).unwrap())
    });
    group.bench_function("katyusha", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| {
            katyusha_broo(&inst, &params, &req, &KatyushaConfig::default(), &mut rng, &mut QueryLedger::new()).unwrap()
        })
    });
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let (inst, _, _) = hard_fixture(4, 16, 0).unwrap();
    let x0 = Vector::zeros(maxmin::Problem::dim(&inst));
    group.bench_function("katyusha_T4_N16_eps0.1", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            solve_max_loss(&inst, &x0, 1.0, 0.1, Method::BrooKatyusha, &mut rng, &mut QueryLedger::new()).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, softmax, ball_oracles, end_to_end);
criterion_main!(benches);
