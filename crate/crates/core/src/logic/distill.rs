//! Definable subsets realized on a finite family of models.
//!
//! Objects of the base are contexts, finite lists of sorts, and a morphism
//! Γ → Δ is a substitution sending each variable of Δ to a variable of Γ of
//! the same sort, read on models as the tuple map ā ↦ (a_{map[j]})_j.
//!
//! The fiber over Γ is the lattice of subsets of ⊔_M M^Γ obtained by closing
//! the atomic formulas under ∧, ∨, substitution and ∃ along substitutions,
//! all inside contexts of at most `k` variables. The closure is computed by
//! its specialization preorder on points: p ≤ q when every closed set
//! containing q contains p. Starting from inclusion of atomic types it is
//! refined to the greatest preorder that is stable under substitution
//! (f(p) ≤ f(q)) and under ∃ along the projection dropping a last variable
//! (every extension of q is matched by one of p). Closed sets are exactly the
//! downsets, so a fiber is the Birkhoff lattice of the point classes.
//!
//! With k at least the size of every model, the type of an element in context
//! (x) contains the canonical positive formula of its model, which is what
//! homomorphism search relies on. Contexts longer than k are refused.

use super::models::{all_tuples, FinModel, FlatTheory, Family, Structure};
use crate::fincat::{Category, Limits};
use crate::hyperdoctrine::{validate, Hyperdoctrine};
use crate::lattice::{bit, members, DownLat, Set, MAX_POINTS};
use crate::report::Report;
use fixedbitset::FixedBitSet;
use itertools::Itertools;
use petgraph::unionfind::UnionFind;
use std::collections::HashMap;

pub type Ctx = Vec<usize>;

/// A substitution dom → cod: variable j of cod becomes variable map[j] of dom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subst {
    pub dom: Ctx,
    pub cod: Ctx,
    pub map: Vec<usize>,
}

impl Subst {
    pub fn on_tuple(&self, t: &[usize]) -> Vec<usize> {
        self.map.iter().map(|&i| t[i]).collect()
    }
}

/// Contexts and substitutions; `declared` is what checks quantify over.
#[derive(Debug, Clone)]
pub struct CtxCat {
    pub n_sorts: usize,
    pub declared: Vec<Ctx>,
}

pub fn all_substs(dom: &Ctx, cod: &Ctx) -> Vec<Subst> {
    let choices: Vec<Vec<usize>> =
        cod.iter().map(|&s| (0..dom.len()).filter(|&i| dom[i] == s).collect()).collect();
    if cod.is_empty() {
        return vec![Subst { dom: dom.clone(), cod: Vec::new(), map: Vec::new() }];
    }
    choices
        .into_iter()
        .multi_cartesian_product()
        .map(|map| Subst { dom: dom.clone(), cod: cod.clone(), map })
        .collect()
}

impl Category for CtxCat {
    type Obj = Ctx;
    type Mor = Subst;

    fn objects(&self) -> Vec<Ctx> {
        self.declared.clone()
    }
    fn hom(&self, a: &Ctx, b: &Ctx) -> Vec<Subst> {
        all_substs(a, b)
    }
    fn dom(&self, f: &Subst) -> Ctx {
        f.dom.clone()
    }
    fn cod(&self, f: &Subst) -> Ctx {
        f.cod.clone()
    }
    fn id(&self, a: &Ctx) -> Subst {
        Subst { dom: a.clone(), cod: a.clone(), map: (0..a.len()).collect() }
    }
    fn comp(&self, g: &Subst, f: &Subst) -> Subst {
        assert_eq!(f.cod, g.dom, "substitutions do not compose");
        Subst { dom: f.dom.clone(), cod: g.cod.clone(), map: g.map.iter().map(|&j| f.map[j]).collect() }
    }
}

impl Limits for CtxCat {
    fn terminal(&self) -> Ctx {
        Vec::new()
    }
    fn bang(&self, a: &Ctx) -> Subst {
        Subst { dom: a.clone(), cod: Vec::new(), map: Vec::new() }
    }
    fn product(&self, a: &Ctx, b: &Ctx) -> Ctx {
        a.iter().chain(b).copied().collect()
    }
    fn proj1(&self, a: &Ctx, b: &Ctx) -> Subst {
        Subst { dom: self.product(a, b), cod: a.clone(), map: (0..a.len()).collect() }
    }
    fn proj2(&self, a: &Ctx, b: &Ctx) -> Subst {
        Subst { dom: self.product(a, b), cod: b.clone(), map: (a.len()..a.len() + b.len()).collect() }
    }
    fn pair(&self, f: &Subst, g: &Subst) -> Subst {
        assert_eq!(f.dom, g.dom);
        Subst {
            dom: f.dom.clone(),
            cod: self.product(&f.cod, &g.cod),
            map: f.map.iter().chain(&g.map).copied().collect(),
        }
    }
    fn equalizer(&self, f: &Subst, g: &Subst) -> Subst {
        let a = &f.dom;
        let mut uf = UnionFind::<usize>::new(a.len());
        for (&x, &y) in f.map.iter().zip(&g.map) {
            uf.union(x, y);
        }
        let mut class = vec![usize::MAX; a.len()];
        let mut e = Vec::new();
        let mut map = vec![0; a.len()];
        for i in 0..a.len() {
            let r = uf.find(i);
            if class[r] == usize::MAX {
                class[r] = e.len();
                e.push(a[i]);
            }
            map[i] = class[r];
        }
        Subst { dom: e, cod: a.clone(), map }
    }
}

#[derive(Debug, Clone)]
struct CtxData {
    /// (reference model, tuple)
    points: Vec<(usize, Vec<usize>)>,
    index: HashMap<(usize, Vec<usize>), usize>,
    class: Vec<usize>,
    reps: Vec<usize>,
    lat: Option<DownLat>,
}

pub const DEFAULT_ARITY: usize = 3;

/// The distilled hyperdoctrine over contexts of at most `k` variables.
#[derive(Debug, Clone)]
pub struct Distilled {
    pub family: Family,
    pub k: usize,
    pub base: CtxCat,
    data: HashMap<Ctx, CtxData>,
    pub refinement_rounds: usize,
}

fn contexts(n_sorts: usize, k: usize) -> Vec<Ctx> {
    (0..=k)
        .flat_map(|n| (0..n).map(|_| 0..n_sorts).multi_cartesian_product().collect::<Vec<_>>())
        .map(|v| if n_sorts == 0 { Vec::new() } else { v })
        .unique()
        .collect()
}

fn atom_shapes(th: &FlatTheory, ctx: &Ctx) -> Vec<(Option<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    for (r, (_, dom)) in th.rels.iter().enumerate() {
        let choices: Vec<Vec<usize>> =
            dom.iter().map(|&s| (0..ctx.len()).filter(|&i| ctx[i] == s).collect()).collect();
        if dom.is_empty() {
            out.push((Some(r), Vec::new()));
            continue;
        }
        for vs in choices.into_iter().multi_cartesian_product() {
            out.push((Some(r), vs));
        }
    }
    for i in 0..ctx.len() {
        for j in i + 1..ctx.len() {
            if ctx[i] == ctx[j] {
                out.push((None, vec![i, j]));
            }
        }
    }
    out
}

impl Distilled {
    /// Declared contexts are the empty one and each single sort.
    pub fn new(family: Family, k: usize) -> Distilled {
        let th = family.theory.clone();
        let ns = th.n_sorts();
        let ctxs = contexts(ns, k);
        let mut data: HashMap<Ctx, CtxData> = HashMap::new();
        let mut atoms: HashMap<Ctx, Vec<FixedBitSet>> = HashMap::new();
        for c in &ctxs {
            let mut points = Vec::new();
            for (i, m) in family.models.iter().enumerate() {
                let dims: Vec<usize> = c.iter().map(|&s| m.sizes[s]).collect();
                if c.is_empty() {
                    points.push((i, Vec::new()));
                } else {
                    points.extend(all_tuples(&dims).into_iter().map(|t| (i, t)));
                }
            }
            let shapes = atom_shapes(&th, c);
            let sets = points
                .iter()
                .map(|(i, t)| {
                    let m = &family.models[*i];
                    let mut b = FixedBitSet::with_capacity(shapes.len());
                    for (k, (r, vs)) in shapes.iter().enumerate() {
                        let holds = match r {
                            Some(r) => m.holds(*r, &vs.iter().map(|&v| t[v]).collect::<Vec<_>>()),
                            None => t[vs[0]] == t[vs[1]],
                        };
                        b.set(k, holds);
                    }
                    b
                })
                .collect();
            let index = points.iter().cloned().enumerate().map(|(n, p)| (p, n)).collect();
            atoms.insert(c.clone(), sets);
            data.insert(c.clone(), CtxData { points, index, class: Vec::new(), reps: Vec::new(), lat: None });
        }
        // le[c][p] holds the q with p ≤ q
        let mut le: HashMap<Ctx, Vec<FixedBitSet>> = HashMap::new();
        for c in &ctxs {
            let a = &atoms[c];
            let n = a.len();
            let rows = (0..n)
                .map(|p| {
                    let mut row = FixedBitSet::with_capacity(n);
                    for q in 0..n {
                        row.set(q, a[q].is_subset(&a[p]));
                    }
                    row
                })
                .collect();
            le.insert(c.clone(), rows);
        }
        // point maps for every substitution between bounded contexts
        let mut maps: HashMap<Ctx, Vec<(Ctx, Vec<usize>)>> = HashMap::new();
        for c in &ctxs {
            let mut v = Vec::new();
            for d in &ctxs {
                for f in all_substs(c, d) {
                    let pm = data[c].points.iter().map(|(i, t)| data[d].index[&(*i, f.on_tuple(t))]).collect();
                    v.push((d.clone(), pm));
                }
            }
            maps.insert(c.clone(), v);
        }
        // extensions by one variable of each sort
        let mut exts: HashMap<Ctx, Vec<(Ctx, Vec<Vec<usize>>)>> = HashMap::new();
        for c in ctxs.iter().filter(|c| c.len() < k) {
            let mut v = Vec::new();
            for s in 0..ns {
                let mut d = c.clone();
                d.push(s);
                let ex = data[c]
                    .points
                    .iter()
                    .map(|(i, t)| {
                        (0..family.models[*i].sizes[s])
                            .map(|e| {
                                let mut u = t.clone();
                                u.push(e);
                                data[&d].index[&(*i, u)]
                            })
                            .collect()
                    })
                    .collect();
                v.push((d, ex));
            }
            exts.insert(c.clone(), v);
        }
        let mut rounds = 0;
        loop {
            rounds += 1;
            let mut changed = false;
            for c in &ctxs {
                let n = data[c].points.len();
                for p in 0..n {
                    for q in 0..n {
                        if !le[c][p][q] || p == q {
                            continue;
                        }
                        let stable = maps[c].iter().all(|(d, pm)| le[d][pm[p]][pm[q]])
                            && exts.get(c).is_none_or(|v| {
                                v.iter().all(|(d, ex)| ex[q].iter().all(|&q2| ex[p].iter().any(|&p2| le[d][p2][q2])))
                            });
                        if !stable {
                            le.get_mut(c).unwrap()[p].set(q, false);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for c in &ctxs {
            let d = data.get_mut(c).unwrap();
            let n = d.points.len();
            let rows = &le[c];
            let mut class = vec![usize::MAX; n];
            let mut reps = Vec::new();
            for p in 0..n {
                if class[p] != usize::MAX {
                    continue;
                }
                for q in p..n {
                    if class[q] == usize::MAX && rows[p][q] && rows[q][p] {
                        class[q] = reps.len();
                    }
                }
                reps.push(p);
            }
            if reps.len() <= MAX_POINTS {
                let below = reps
                    .iter()
                    .map(|&rc| (0..reps.len()).filter(|&e| rows[reps[e]][rc]).fold(0, |s, e| s | bit(e)))
                    .collect();
                d.lat = Some(DownLat::new(below));
            }
            d.class = class;
            d.reps = reps;
        }
        let mut declared = vec![Vec::new()];
        declared.extend((0..ns).map(|s| vec![s]));
        Distilled { family, k, base: CtxCat { n_sorts: ns, declared }, data, refinement_rounds: rounds }
    }

    fn data(&self, c: &Ctx) -> &CtxData {
        self.data.get(c).unwrap_or_else(|| panic!("context of {} variables exceeds the bound {}", c.len(), self.k))
    }

    pub fn theory(&self) -> &FlatTheory {
        &self.family.theory
    }

    /// Number of point classes (join irreducibles of the fiber) over c.
    pub fn n_classes(&self, c: &Ctx) -> usize {
        self.data(c).reps.len()
    }

    /// The class of a tuple of a reference model.
    pub fn class_of(&self, c: &Ctx, model: usize, t: &[usize]) -> usize {
        let d = self.data(c);
        d.class[d.index[&(model, t.to_vec())]]
    }

    /// A tuple realizing the class.
    pub fn witness(&self, c: &Ctx, class: usize) -> (usize, Vec<usize>) {
        let d = self.data(c);
        d.points[d.reps[class]].clone()
    }

    pub fn describe_class(&self, c: &Ctx, class: usize) -> String {
        let (m, t) = self.witness(c, class);
        format!("type of {t:?} in {}", self.family.names[m])
    }

    /// Tuples of a reference model lying in u.
    pub fn extension(&self, c: &Ctx, model: usize, u: Set) -> Vec<Vec<usize>> {
        let d = self.data(c);
        d.points
            .iter()
            .enumerate()
            .filter(|(n, (i, _))| *i == model && u & bit(d.class[*n]) != 0)
            .map(|(_, (_, t))| t.clone())
            .collect()
    }

    /// Whether every point class over the declared contexts and their
    /// binary products fits a fiber.
    pub fn fits(&self) -> bool {
        self.data.values().filter(|d| d.points.first().is_none_or(|p| p.1.len() <= 2)).all(|d| d.lat.is_some())
    }

    pub fn validate(&self) -> Report {
        validate(self)
    }

    /// The reference model index of a model, compared as tables.
    pub fn model_index(&self, m: &FinModel) -> Option<usize> {
        self.family.models.iter().position(|x| x == m)
    }
}

impl Hyperdoctrine for Distilled {
    type Base = CtxCat;

    fn base(&self) -> &CtxCat {
        &self.base
    }

    fn fiber(&self, a: &Ctx) -> DownLat {
        self.data(a)
            .lat
            .clone()
            .unwrap_or_else(|| panic!("more than {MAX_POINTS} types over a context of {} variables", a.len()))
    }

    fn subst(&self, f: &Subst, x: Set) -> Set {
        let (s, t) = (self.data(&f.dom), self.data(&f.cod));
        let mut out = 0;
        for (c, &p) in s.reps.iter().enumerate() {
            let (i, tup) = &s.points[p];
            if x & bit(t.class[t.index[&(*i, f.on_tuple(tup))]]) != 0 {
                out |= bit(c);
            }
        }
        out
    }

    fn exists(&self, f: &Subst, x: Set) -> Set {
        let (s, t) = (self.data(&f.dom), self.data(&f.cod));
        members(x).fold(0, |acc, c| {
            let (i, tup) = &s.points[s.reps[c]];
            acc | bit(t.class[t.index[&(*i, f.on_tuple(tup))]])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::models::{flatten, Ff};
    use crate::logic::syntax::parse_theory;

    fn family(src: &str, max: usize) -> Family {
        Family::exhaustive(flatten(&parse_theory(src).unwrap()), max).unwrap()
    }

    // the set of points satisfying a flattened formula in one free variable
    fn defined(c: &Distilled, ctx: &Ctx, f: &Ff, sorts: &[usize]) -> Set {
        let d = c.data(ctx);
        let mut s = 0;
        for (n, (i, t)) in d.points.iter().enumerate() {
            let mut env = vec![0; sorts.len()];
            env[..t.len()].copy_from_slice(t);
            if crate::logic::models::eval(&c.family.models[*i], f, sorts, &mut env) {
                s |= bit(d.class[n]);
            }
        }
        s
    }

    #[test]
    fn substitution_category_limits() {
        let b = CtxCat { n_sorts: 2, declared: vec![vec![], vec![0], vec![1]] };
        let (a, c) = (vec![0, 1], vec![0]);
        let f = Subst { dom: a.clone(), cod: c.clone(), map: vec![0] };
        let p = b.product(&a, &c);
        let pr = b.pair(&b.proj1(&a, &c), &b.proj2(&a, &c));
        assert_eq!(pr, b.id(&p));
        let g = Subst { dom: vec![0, 0], cod: vec![0], map: vec![0] };
        let h = Subst { dom: vec![0, 0], cod: vec![0], map: vec![1] };
        let e = b.equalizer(&g, &h);
        assert_eq!(e.dom, vec![0]);
        assert_eq!(b.comp(&g, &e), b.comp(&h, &e));
        assert_eq!(b.comp(&f, &b.id(&a)), f);
        assert_eq!(b.hom(&vec![0, 0], &vec![0]).len(), 2);
        assert!(b.hom(&vec![], &vec![0]).is_empty());
    }

    #[test]
    fn atomic_and_existential_sets_are_definable() {
        let fam = family("sort V; rel R : V, V;", 2);
        let c = Distilled::new(fam, 3);
        let lat = c.fiber(&vec![0]);
        // ∃y. R(x,y) and R(x,x)
        let sorts = vec![0, 0];
        let ex = Ff::Exists(vec![1], Box::new(Ff::Rel(0, vec![0, 1])));
        let lp = Ff::Rel(0, vec![0, 0]);
        for f in [&ex, &lp] {
            assert!(lat.is_elem(defined(&c, &vec![0], f, &sorts)));
        }
        assert!(c.fits());
        let r = c.validate();
        assert!(r.pass(), "{:?}", r.failures());
    }

    #[test]
    fn equality_types_without_relations() {
        let fam = family("sort V;", 3);
        let c = Distilled::new(fam, 3);
        // over (x, y): the diagonal and everything
        assert_eq!(c.fiber(&vec![0, 0]).elements().len(), 3);
        // sentences: empty model below the rest
        assert_eq!(c.fiber(&vec![]).elements().len(), 3);
        assert_eq!(c.n_classes(&vec![0]), 1);
    }

    #[test]
    fn exists_and_subst_are_adjoint() {
        let fam = family("sort V; func s : V -> V;", 3);
        let c = Distilled::new(fam, 3);
        let (x, xy) = (vec![0], vec![0, 0]);
        let p = c.base.proj1(&x, &x);
        let (lx, lxy) = (c.fiber(&x), c.fiber(&xy));
        let ex = lx.elements();
        // ∃ preserves joins, so join irreducibles suffice on the left
        let mut exy = lxy.join_irreducibles();
        exy.extend([lxy.bot(), lxy.top()]);
        for &u in &exy {
            for &v in &ex {
                assert_eq!(lx.leq(c.exists(&p, u), v), lxy.leq(u, c.subst(&p, v)));
            }
        }
    }

    #[test]
    #[should_panic(expected = "exceeds the bound")]
    fn long_contexts_are_refused() {
        let c = Distilled::new(family("sort V;", 1), 2);
        c.fiber(&vec![0, 0, 0]);
    }
}
