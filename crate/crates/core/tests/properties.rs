use deltawb::canext::{canonical_extension, delta_extension, pi_extension, sigma_extension};
use deltawb::lattice::{
    downset_lattice, is_hom, is_monotone, members, monotone_maps, subset, DownLat, FinDistLattice, FinPoset, Set,
};
use deltawb::logic::chase::{chase, ChaseConfig, PartialStructure};
use deltawb::logic::models::flatten;
use deltawb::logic::syntax::{parse_formula, parse_theory, print_formula, Binder, Formula, Span, Term};
use proptest::prelude::*;

// a random order on n points: strict pairs a < b picked from `mask`, then
// closed transitively
fn poset(n: usize, mask: u64) -> FinPoset {
    let mut leq = vec![vec![false; n]; n];
    let mut k = 0;
    for a in 0..n {
        leq[a][a] = true;
        for b in a + 1..n {
            leq[a][b] = mask >> k & 1 == 1;
            k += 1;
        }
    }
    for m in 0..n {
        for a in 0..n {
            for b in 0..n {
                if leq[a][m] && leq[m][b] {
                    leq[a][b] = true;
                }
            }
        }
    }
    FinPoset::new((0..n).map(|i| format!("p{i}")).collect(), leq).unwrap()
}

fn lattice() -> impl Strategy<Value = FinDistLattice> {
    (0usize..5, any::<u64>()).prop_map(|(n, m)| downset_lattice(&poset(n, m)))
}

fn downlat() -> impl Strategy<Value = DownLat> {
    (1usize..9, any::<u64>()).prop_map(|(n, m)| {
        let p = poset(n.min(8), m);
        let below = (0..p.len()).map(|b| (0..p.len()).filter(|&a| p.leq(a, b)).fold(0 as Set, |s, a| s | 1 << a)).collect();
        DownLat::new(below)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn prime_filters_match_join_irreducibles(l in lattice()) {
        let pf = l.prime_filters();
        let (jp, js) = l.join_irreducibles();
        prop_assert_eq!(pf.len(), js.len());
        // ρ ↦ ⋀ρ lands on join irreducibles and reverses inclusion
        let gens: Vec<usize> = pf.iter().map(|f| l.meet_all((0..l.len()).filter(|&a| f[a]))).collect();
        for (i, g) in gens.iter().enumerate() {
            let gi = js.iter().position(|j| j == g);
            prop_assert!(gi.is_some());
            for (k, h) in gens.iter().enumerate() {
                let sup = (0..l.len()).all(|a| !pf[k][a] || pf[i][a]);
                let hk = js.iter().position(|j| j == h).unwrap();
                prop_assert_eq!(sup, jp.leq(gi.unwrap(), hk));
            }
        }
    }

    #[test]
    fn birkhoff_round_trips(l in lattice()) {
        prop_assert!(l.birkhoff().round_trips());
    }

    #[test]
    fn extension_is_dense_compact_and_onto(l in lattice()) {
        let ce = canonical_extension(&l);
        prop_assert!(ce.check_dense());
        prop_assert!(ce.check_compact());
        prop_assert!(ce.embed_is_iso());
    }

    #[test]
    fn sigma_below_pi(l in lattice(), k in lattice(), pick in any::<usize>()) {
        let maps = monotone_maps(&l, &k);
        let f = &maps[pick % maps.len()];
        let (s, t) = (canonical_extension(&l), canonical_extension(&k));
        let sg = sigma_extension(f, &s, &t).unwrap();
        let pi = pi_extension(f, &s, &t).unwrap();
        prop_assert!(is_monotone(&s.ext, &t.ext, &sg.table));
        prop_assert!(is_monotone(&s.ext, &t.ext, &pi.table));
        for u in 0..s.ext.len() {
            prop_assert!(t.ext.leq(sg.table[u], pi.table[u]));
        }
        if is_hom(&l, &k, f) {
            let d = delta_extension(f, &s, &t).unwrap();
            prop_assert!(is_hom(&s.ext, &t.ext, &d.table));
        }
    }

    #[test]
    fn distributive_laws(l in lattice()) {
        let n = l.len();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(l.meet(a, l.join(a, b)), a);
                for c in 0..n {
                    prop_assert_eq!(l.meet(a, l.join(b, c)), l.join(l.meet(a, b), l.meet(a, c)));
                }
            }
        }
    }

    #[test]
    fn downsets_are_closed_under_set_operations(d in downlat(), x in any::<u64>(), y in any::<u64>()) {
        let all = d.point_set();
        let (a, b) = (d.close(x as Set & all), d.close(y as Set & all));
        prop_assert!(d.is_elem(a) && d.is_elem(b));
        prop_assert_eq!(d.close(a), a);
        prop_assert_eq!(d.meet(a, b), a & b);
        prop_assert_eq!(d.join(a, b), a | b);
        let imp = d.implies(a, b);
        prop_assert!(d.is_elem(imp));
        // the largest element whose meet with a lies below b
        for c in d.elements() {
            prop_assert_eq!(subset(c & a, b), subset(c, imp));
        }
        for j in d.join_irreducibles() {
            prop_assert!(members(j).any(|p| d.below(p) == j));
        }
    }
}

fn ident() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["x", "y", "z", "w"]).prop_map(String::from)
}

fn term() -> impl Strategy<Value = Term> {
    ident().prop_map(|v| Term::Var(v, Span::default())).prop_recursive(2, 6, 2, |inner| {
        (prop::sample::select(vec!["f", "g"]), prop::collection::vec(inner, 1..3))
            .prop_map(|(n, args)| Term::App(n.to_string(), args, Span::default()))
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    let s = Span::default();
    let leaf = prop_oneof![
        Just(Formula::True(s)),
        Just(Formula::False(s)),
        (term(), term()).prop_map(move |(a, b)| Formula::Eq(a, b, s)),
        (prop::sample::select(vec!["P", "R"]), prop::collection::vec(term(), 0..3))
            .prop_map(move |(r, ts)| Formula::Atom(r.to_string(), ts, s)),
    ];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Or(Box::new(a), Box::new(b))),
            (prop::collection::vec(ident(), 1..3), inner).prop_map(move |(vs, body)| {
                let bs = vs.into_iter().map(|name| Binder { name, sort: None, span: s }).collect();
                Formula::Exists(bs, Box::new(body), s)
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_formulas_reparse(f in formula()) {
        let text = print_formula(&f);
        let back = parse_formula(&text).unwrap();
        prop_assert_eq!(&back, &f, "{}", text);
        prop_assert_eq!(print_formula(&back), text);
    }
}

const EQUIVALENCE: &str = "sort V;\nrel E : V, V;\ntrue |- E(x, x);\nE(x, y) |- E(y, x);\nE(x, y) and E(y, z) |- E(x, z);\n";
const COLOURING: &str = "sort V;\nrel Red : V;\nrel Blue : V;\nrel Adj : V, V;\nx:V | true |- Red(x) or Blue(x);\nRed(x) and Blue(x) |- false;\nAdj(x, y) and Red(x) and Red(y) |- false;\n";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chased_structures_are_models(n in 0usize..4, seed in any::<u64>(), which in any::<bool>()) {
        let th = parse_theory(if which { EQUIVALENCE } else { COLOURING }).unwrap();
        let flat = flatten(&th);
        let cfg = ChaseConfig { seed, ..ChaseConfig::default() };
        let start = PartialStructure::points(vec![n]);
        let run = chase(&flat, &start, &cfg).unwrap();
        prop_assert!(run.model.satisfies(&flat));
        let again = chase(&flat, &start, &cfg).unwrap();
        prop_assert_eq!(run.model, again.model);
    }
}
