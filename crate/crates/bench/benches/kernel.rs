use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use supercocycle_core::chern::{chern_components, random_superconnection};
use supercocycle_core::cocycles::{random_chart_form, reduce_class, random_k_data, make_k_element};
use supercocycle_core::eisenstein::{g_series, EisKind};
use supercocycle_core::euler::{euler_form, holomorphy_defect, CurvatureSpec};
use supercocycle_core::forms::{Form, FormMatrix, ManifoldModel};
use supercocycle_core::grassmann::GrassmannRing;
use supercocycle_core::scalars::{Scalar, ScalarRing};

fn forms(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = ManifoldModel::chart(6);
    let gr = GrassmannRing::new(ScalarRing::Base, &[]);
    let a = random_chart_form(&mut rng, &m, &gr, 2, ScalarRing::Base);
    let b = random_chart_form(&mut rng, &m, &gr, 3, ScalarRing::Base);
    c.bench_function("wedge chart6 2x3", |bch| bch.iter(|| black_box(&a) * black_box(&b)));
    c.bench_function("d + homotopy chart6", |bch| bch.iter(|| black_box(&b).d().poincare_homotopy().unwrap()));
}

fn chern(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = ManifoldModel::chart(4);
    let a = random_superconnection(&mut rng, &m, 2, 2, true).unwrap();
    c.bench_function("chern components chart4 rank 2|2", |bch| bch.iter(|| chern_components(black_box(&a), None).unwrap()));
}

fn euler(c: &mut Criterion) {
    let m = ManifoldModel::chart(8);
    let gr = GrassmannRing::new(ScalarRing::Base, &[]);
    let pair = |i, j| &Form::dx(&m, &gr, i) * &Form::dx(&m, &gr, j);
    let f = pair(1, 2).checked_add(&pair(3, 4)).unwrap().checked_add(&pair(5, 6)).unwrap().checked_add(&pair(7, 8)).unwrap();
    let z = f.zero_like();
    let g = f.scale(&Scalar::int(2)).checked_add(&pair(1, 3)).unwrap();
    let rows = vec![
        vec![z.clone(), f.clone(), z.clone(), z.clone()],
        vec![f.neg(), z.clone(), g.clone(), z.clone()],
        vec![z.clone(), g.neg(), z.clone(), f.clone()],
        vec![z.clone(), z.clone(), f.neg(), z.clone()],
    ];
    let spec = CurvatureSpec::new(FormMatrix::from_rows(rows).unwrap()).unwrap();
    c.bench_function("euler form chart8 rank4", |bch| bch.iter(|| euler_form(black_box(&spec)).unwrap()));
    c.bench_function("holomorphy defect chart8 rank4", |bch| bch.iter(|| holomorphy_defect(black_box(&spec)).unwrap()));
}

fn cohomology(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = ManifoldModel::chart(4);
    let (z, l, _) = random_k_data(&mut rng, &m, false).unwrap();
    let k = make_k_element(&z, &l).unwrap();
    c.bench_function("reduce class chart4", |bch| bch.iter(|| reduce_class(black_box(&k)).unwrap()));
}

fn modular(c: &mut Criterion) {
    let tau = Complex64::new(0.3, 1.1);
    c.bench_function("E4 q-series N=50", |bch| bch.iter(|| g_series(EisKind::E4, black_box(tau), 50).unwrap()));
}

criterion_group!(benches, forms, chern, euler, cohomology, modular);
criterion_main!(benches);
