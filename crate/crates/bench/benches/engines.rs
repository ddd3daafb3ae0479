use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regal::hom::find_hom;
use regal::sample::{random_cq, random_digraph, random_instance};
use regal::{chase, max_tournament, parse_facts, parse_query, parse_rules, ucq_rewrite, ChaseConfig, Predicate, RewriteBudget, Substitution, Term};

const EX1: &str = "E(x,y) -> ? z : E(y,z) .\nE(x,y), E(y,z) -> E(x,z) .";
const PAIR: &str = "E(x,y) -> ? z : E(y,z) .\nE(x,x'), E(y,y') -> E(x,y') .";

fn bench_chase(c: &mut Criterion) {
    let rules = parse_rules(EX1).unwrap();
    let facts = parse_facts("E(a,b). E(b,c).").unwrap();
    let mut g = c.benchmark_group("chase");
    for depth in [2, 4, 6] {
        g.bench_with_input(BenchmarkId::new("ex1", depth), &depth, |b, &d| {
            b.iter(|| chase(black_box(&facts), &rules, d, ChaseConfig::default()).unwrap())
        });
    }
    g.finish();
}

fn bench_rewrite(c: &mut Criterion) {
    let pair = parse_rules(PAIR).unwrap();
    let ex1 = parse_rules(EX1).unwrap();
    let q = parse_query("?() <- E(x,x) .").unwrap();
    let mut g = c.benchmark_group("rewrite");
    g.bench_function("pair_loop", |b| b.iter(|| ucq_rewrite(black_box(&q), &pair, RewriteBudget::default())));
    g.bench_function("ex1_loop_4_generations", |b| {
        let budget = RewriteBudget { max_generations: 4, ..RewriteBudget::default() };
        b.iter(|| ucq_rewrite(black_box(&q), &ex1, budget))
    });
    g.finish();
}

fn bench_hom(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let preds = [Predicate::new("E", 2), Predicate::new("A", 1)];
    let target = random_instance(&mut rng, &preds, 12, 60);
    let queries: Vec<_> = (0..32).map(|_| random_cq(&mut rng, &preds, &[Term::var("x")], 4, 5)).collect();
    c.bench_function("hom/random_cq_into_60_atoms", |b| {
        b.iter(|| queries.iter().filter(|q| find_hom(q.atoms(), &target, &Substitution::new(), false).is_some()).count())
    });
}

fn bench_tournament(c: &mut Criterion) {
    let mut g = c.benchmark_group("tournament");
    for n in [8, 12, 16] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let graph = random_digraph(&mut rng, n, 0.5);
        g.bench_with_input(BenchmarkId::new("max", n), &graph, |b, gr| b.iter(|| max_tournament(black_box(gr), n)));
    }
    g.finish();
}

criterion_group!(benches, bench_chase, bench_rewrite, bench_hom, bench_tournament);
criterion_main!(benches);
