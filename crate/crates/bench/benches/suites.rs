use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deltawb::canext::canonical_extension;
use deltawb::enumerate::distributive_lattices;
use deltawb::fincat::FinSetCat;
use deltawb::hyperdoctrine::{canext_hyperdoctrine, validate, SubHyp};
use deltawb::lattice::FinDistLattice;
use deltawb::logic::distill::{Distilled, DEFAULT_ARITY};
use deltawb::logic::evaluation::Evaluation;
use deltawb::logic::models::{flatten, Family};
use deltawb::logic::syntax::parse_theory;
use deltawb::predcat::counit_equivalence_check;
use deltawb::sites::{sheaf_check, topology_coincidence_check, Topology, DEFAULT_FAMILY_SIZE, DEFAULT_SIEVE_BUDGET};
use std::hint::black_box;

fn lattices(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattices");
    for n in [6, 8, 10] {
        g.bench_with_input(BenchmarkId::new("enumerate", n), &n, |b, &n| b.iter(|| distributive_lattices(n).unwrap().len()));
    }
    for (name, l) in [("chain8", FinDistLattice::chain(8)), ("boolean3", FinDistLattice::boolean(3))] {
        g.bench_function(BenchmarkId::new("canext", name), |b| {
            b.iter(|| {
                let ce = canonical_extension(black_box(&l));
                ce.check_dense() && ce.check_compact()
            })
        });
    }
    g.finish();
}

fn categories(c: &mut Criterion) {
    let mut g = c.benchmark_group("categories");
    g.sample_size(10);
    for objs in [vec![1, 2], vec![0, 1, 2]] {
        let cat = FinSetCat::new(objs.clone());
        let id = format!("{objs:?}");
        g.bench_function(BenchmarkId::new("hyper_canext_validate", &id), |b| {
            b.iter(|| validate(&canext_hyperdoctrine(&SubHyp(&cat))).pass())
        });
        g.bench_function(BenchmarkId::new("counit", &id), |b| b.iter(|| counit_equivalence_check(&cat).pass()));
        g.bench_function(BenchmarkId::new("sheaf_and_coincidence", &id), |b| {
            b.iter(|| {
                let s = SubHyp(&cat);
                let sd = canext_hyperdoctrine(&s);
                let r = sheaf_check(&sd, Topology::Coherent, DEFAULT_FAMILY_SIZE, 1 << 16);
                r.pass() && topology_coincidence_check(&sd, DEFAULT_SIEVE_BUDGET).unwrap().0.pass()
            })
        });
    }
    g.finish();
}

fn models(c: &mut Criterion) {
    let mut g = c.benchmark_group("models");
    g.sample_size(10);
    let src = "sort V;\nfunc s : V -> V;\n";
    let flat = flatten(&parse_theory(src).unwrap());
    g.bench_function("successor_sigma_bar", |b| {
        b.iter(|| {
            let fam = Family::exhaustive(flat.clone(), 3).unwrap();
            let d = Distilled::new(fam, DEFAULT_ARITY);
            let ev = Evaluation::new(&d, &d.family).unwrap();
            ev.sigma_bar_check().map(|r| r.pass())
        })
    });
    g.finish();
}

criterion_group!(suites, lattices, categories, models);
criterion_main!(suites);
