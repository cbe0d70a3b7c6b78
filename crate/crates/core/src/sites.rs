//! Finite sites: materialized categories with a covering predicate on
//! sieves. The coherent topology, filters and types with germs, the site
//! C ⋉ X of an internal locale, the comparison conditions, sheaf checks
//! and morphisms of internal locales induced by coherent functors.

use crate::canext::{canonical_extension, FiberExt};
use crate::fincat::{check_coherent_functor, Category, CohCat, Functor, LatCat, Limits, SMor, SObj, SubCat};
use crate::hyperdoctrine::{canext_hyperdoctrine, validate, Hyperdoctrine, Mor, Obj, SubHyp};
use crate::lattice::{members, relation_iso, subset, DownLat, FinDistLattice, Set};
use crate::predcat::{PObj, PredCat};
use crate::report::Report;
use petgraph::dot::{Config, Dot};
use petgraph::graph::Graph;
use petgraph::unionfind::UnionFind;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use std::rc::Rc;

pub const DEFAULT_SIEVE_BUDGET: usize = 1 << 12;
pub const DEFAULT_MORPHISM_CAP: usize = 1 << 14;
/// Largest covering family tried by the sheaf checks.
pub const DEFAULT_FAMILY_SIZE: usize = 3;

/// A finite category with explicit morphism ids and composition table.
#[derive(Debug, Clone)]
pub struct FinCat<O, M> {
    pub objs: Vec<O>,
    pub mors: Vec<M>,
    pub dom: Vec<usize>,
    pub cod: Vec<usize>,
    pub ids: Vec<usize>,
    homs: HashMap<(usize, usize), Vec<usize>>,
    into: Vec<Vec<usize>>,
    outof: Vec<Vec<usize>>,
    pos: Vec<usize>,
    table: HashMap<(usize, usize), usize>,
    obj_ix: HashMap<O, usize>,
    mor_ix: HashMap<M, usize>,
}

impl<O: Clone + Eq + Hash + Debug, M: Clone + Eq + Hash + Debug> FinCat<O, M> {
    pub fn build(
        objs: Vec<O>,
        hom: impl Fn(&O, &O) -> Vec<M>,
        id: impl Fn(&O) -> M,
        comp: impl Fn(&M, &M) -> M,
        cap: usize,
    ) -> Result<Self, String> {
        let mut obj_ix = HashMap::new();
        for (i, o) in objs.iter().enumerate() {
            if obj_ix.insert(o.clone(), i).is_some() {
                return Err(format!("duplicate object {o:?}"));
            }
        }
        let n = objs.len();
        let (mut mors, mut dom, mut cod) = (Vec::new(), Vec::new(), Vec::new());
        let mut mor_ix = HashMap::new();
        let mut homs = HashMap::new();
        for a in 0..n {
            for b in 0..n {
                let mut hs = Vec::new();
                for m in hom(&objs[a], &objs[b]) {
                    if mors.len() >= cap {
                        return Err(format!("more than {cap} morphisms"));
                    }
                    if mor_ix.insert(m.clone(), mors.len()).is_some() {
                        return Err(format!("morphism {m:?} lies in two hom sets"));
                    }
                    hs.push(mors.len());
                    mors.push(m);
                    dom.push(a);
                    cod.push(b);
                }
                homs.insert((a, b), hs);
            }
        }
        let mut into = vec![Vec::new(); n];
        let mut outof = vec![Vec::new(); n];
        let mut pos = vec![0; mors.len()];
        for m in 0..mors.len() {
            pos[m] = into[cod[m]].len();
            into[cod[m]].push(m);
            outof[dom[m]].push(m);
        }
        let mut ids = Vec::with_capacity(n);
        for (i, o) in objs.iter().enumerate() {
            match mor_ix.get(&id(o)) {
                Some(&k) if dom[k] == i && cod[k] == i => ids.push(k),
                _ => return Err(format!("identity of {o:?} is not in its hom set")),
            }
        }
        let mut table = HashMap::new();
        for f in 0..mors.len() {
            for &g in &outof[cod[f]] {
                let c = comp(&mors[g], &mors[f]);
                match mor_ix.get(&c) {
                    Some(&k) if dom[k] == dom[f] && cod[k] == cod[g] => {
                        table.insert((g, f), k);
                    }
                    _ => return Err(format!("composite {:?} ∘ {:?} is not a listed morphism", mors[g], mors[f])),
                }
            }
        }
        Ok(FinCat { objs, mors, dom, cod, ids, homs, into, outof, pos, table, obj_ix, mor_ix })
    }

    pub fn from_category<C: Category<Obj = O, Mor = M>>(c: &C, objs: Vec<O>, cap: usize) -> Result<Self, String> {
        FinCat::build(objs, |a, b| c.hom(a, b), |a| c.id(a), |g, f| c.comp(g, f), cap)
    }

    /// The full subcategory on the kept objects.
    pub fn full_sub(&self, keep: impl Fn(&O) -> bool) -> Result<Self, String> {
        let objs: Vec<O> = self.objs.iter().filter(|o| keep(o)).cloned().collect();
        FinCat::build(
            objs,
            |a, b| self.hom(self.obj_ix[a], self.obj_ix[b]).iter().map(|&m| self.mors[m].clone()).collect(),
            |a| self.mors[self.ids[self.obj_ix[a]]].clone(),
            |g, f| self.mors[self.comp(self.mor_ix[g], self.mor_ix[f])].clone(),
            usize::MAX,
        )
    }

    pub fn n_objs(&self) -> usize {
        self.objs.len()
    }

    pub fn n_mors(&self) -> usize {
        self.mors.len()
    }

    pub fn hom(&self, a: usize, b: usize) -> &[usize] {
        &self.homs[&(a, b)]
    }

    pub fn into(&self, b: usize) -> &[usize] {
        &self.into[b]
    }

    pub fn outof(&self, a: usize) -> &[usize] {
        &self.outof[a]
    }

    /// g ∘ f
    pub fn comp(&self, g: usize, f: usize) -> usize {
        self.table[&(g, f)]
    }

    pub fn obj_index(&self, o: &O) -> Option<usize> {
        self.obj_ix.get(o).copied()
    }

    pub fn mor_index(&self, m: &M) -> Option<usize> {
        self.mor_ix.get(m).copied()
    }

    /// Position of m among the arrows into its codomain; sieves are sets of
    /// these positions.
    pub fn local(&self, m: usize) -> usize {
        self.pos[m]
    }

    /// The sieve on b generated by a family of arrows into b.
    pub fn generated(&self, b: usize, fam: &[usize]) -> Set {
        let mut s = 0;
        for &g in fam {
            assert_eq!(self.cod[g], b, "family member does not land in the object");
            for &h in &self.into[self.dom[g]] {
                s |= 1u128 << self.pos[self.comp(g, h)];
            }
        }
        s
    }

    pub fn sieve_members(&self, b: usize, s: Set) -> Vec<usize> {
        members(s).map(|i| self.into[b][i]).collect()
    }

    /// Arrows into b ordered by factorization; its downsets are the sieves.
    pub fn sieve_order(&self, b: usize) -> Result<DownLat, String> {
        let n = self.into[b].len();
        if n > 128 {
            return Err(format!("{n} arrows into {:?}; sieves need at most 128", self.objs[b]));
        }
        Ok(DownLat::new(self.into[b].iter().map(|&g| self.generated(b, &[g])).collect()))
    }

    pub fn check_laws(&self) -> Result<(), String> {
        for f in 0..self.n_mors() {
            if self.comp(self.ids[self.cod[f]], f) != f || self.comp(f, self.ids[self.dom[f]]) != f {
                return Err(format!("unit law at {:?}", self.mors[f]));
            }
            for &g in &self.outof[self.cod[f]] {
                for &h in &self.outof[self.cod[g]] {
                    if self.comp(h, self.comp(g, f)) != self.comp(self.comp(h, g), f) {
                        return Err(format!("associativity at {:?}, {:?}, {:?}", self.mors[h], self.mors[g], self.mors[f]));
                    }
                }
            }
        }
        Ok(())
    }

    /// Graphviz text, identities omitted.
    pub fn to_dot(&self) -> String {
        let mut g: Graph<String, String> = Graph::new();
        let nodes: Vec<_> = self.objs.iter().map(|o| g.add_node(format!("{o:?}"))).collect();
        for m in 0..self.n_mors() {
            if !self.ids.contains(&m) {
                g.add_edge(nodes[self.dom[m]], nodes[self.cod[m]], format!("{m}"));
            }
        }
        format!("{:?}", Dot::with_config(&g, &[Config::EdgeNoLabel]))
    }
}

pub type CoverFn<'a, O, M> = Rc<dyn Fn(&FinCat<O, M>, usize, &[usize]) -> bool + 'a>;

/// A finite category with a Grothendieck topology given by a predicate on
/// sieves (the members of the sieve are passed in).
pub struct Site<'a, O, M> {
    pub name: String,
    pub cat: Rc<FinCat<O, M>>,
    cover: CoverFn<'a, O, M>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub sieves_checked: usize,
    pub complete: bool,
}

impl Coverage {
    fn add(&mut self, n: usize, complete: bool) {
        self.sieves_checked += n;
        self.complete &= complete;
    }
}

impl Default for Coverage {
    fn default() -> Self {
        Coverage { sieves_checked: 0, complete: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteSummary {
    pub name: String,
    pub objects: Vec<String>,
    pub morphisms: Vec<(usize, usize, String)>,
    /// Minimal covering sieves per object, as lists of morphism ids.
    pub minimal_covers: Vec<Vec<Vec<usize>>>,
    pub coverage: Coverage,
}

impl<'a, O: Clone + Eq + Hash + Debug + 'a, M: Clone + Eq + Hash + Debug + 'a> Site<'a, O, M> {
    pub fn new(name: &str, cat: FinCat<O, M>, cover: CoverFn<'a, O, M>) -> Self {
        Site { name: name.to_string(), cat: Rc::new(cat), cover }
    }

    /// Only sieves containing the identity cover.
    pub fn trivial(name: &str, cat: FinCat<O, M>) -> Self {
        let cover: CoverFn<'a, O, M> = Rc::new(|cat: &FinCat<O, M>, b: usize, ms: &[usize]| ms.contains(&cat.ids[b]));
        Site::new(name, cat, cover)
    }

    pub fn covers_sieve(&self, b: usize, s: Set) -> bool {
        (self.cover)(&self.cat, b, &self.cat.sieve_members(b, s))
    }

    pub fn covers_family(&self, b: usize, fam: &[usize]) -> bool {
        self.covers_sieve(b, self.cat.generated(b, fam))
    }

    /// Sieves on b, at most `budget`, and whether that was all of them.
    pub fn sieves(&self, b: usize, budget: usize) -> Result<(Vec<Set>, bool), String> {
        Ok(self.cat.sieve_order(b)?.elements_upto(budget))
    }

    pub fn covering_sieves(&self, b: usize, budget: usize) -> Result<(Vec<Set>, bool), String> {
        let (all, complete) = self.sieves(b, budget)?;
        Ok((all.into_iter().filter(|&s| self.covers_sieve(b, s)).collect(), complete))
    }

    /// The topology induced on a full subcategory: a sieve covers iff the
    /// sieve it generates in the ambient site does.
    pub fn induced(&self, name: &str, keep: impl Fn(&O) -> bool) -> Result<Site<'a, O, M>, String> {
        let sub = self.cat.full_sub(keep)?;
        let big = self.cat.clone();
        let bigcov = self.cover.clone();
        let cover: CoverFn<'a, O, M> = Rc::new(move |sub: &FinCat<O, M>, b: usize, ms: &[usize]| {
            let bb = big.obj_index(&sub.objs[b]).expect("object of the subcategory");
            let fam: Vec<usize> = ms.iter().map(|&m| big.mor_index(&sub.mors[m]).expect("morphism of the subcategory")).collect();
            let s = big.generated(bb, &fam);
            bigcov(&big, bb, &big.sieve_members(bb, s))
        });
        Ok(Site { name: name.to_string(), cat: Rc::new(sub), cover })
    }

    /// The same category where every sieve, the empty one included, covers.
    pub fn with_empty_cover(&self) -> Site<'a, O, M> {
        let cover: CoverFn<'a, O, M> = Rc::new(|_: &FinCat<O, M>, _: usize, _: &[usize]| true);
        Site { name: format!("{}+empty", self.name), cat: self.cat.clone(), cover }
    }

    pub fn summary(&self, budget: usize) -> Result<SiteSummary, String> {
        let c = &self.cat;
        let mut cov = Coverage::default();
        let mut minimal_covers = Vec::new();
        for b in 0..c.n_objs() {
            let (cs, complete) = self.covering_sieves(b, budget)?;
            cov.add(cs.len(), complete);
            let mins: Vec<Vec<usize>> = cs
                .iter()
                .filter(|&&s| !cs.iter().any(|&t| t != s && subset(t, s)))
                .map(|&s| c.sieve_members(b, s))
                .collect();
            minimal_covers.push(mins);
        }
        Ok(SiteSummary {
            name: self.name.clone(),
            objects: c.objs.iter().map(|o| format!("{o:?}")).collect(),
            morphisms: (0..c.n_mors()).map(|m| (c.dom[m], c.cod[m], format!("{:?}", c.mors[m]))).collect(),
            minimal_covers,
            coverage: cov,
        })
    }
}

/// J_coh: a sieve on A covers iff the images of its members join to A.
pub fn coherent_topology<C: CohCat>(c: &C) -> Result<Site<'_, C::Obj, C::Mor>, String> {
    let cat = FinCat::from_category(c, c.objects(), DEFAULT_MORPHISM_CAP)?;
    let cover: CoverFn<'_, C::Obj, C::Mor> = Rc::new(move |cat: &FinCat<C::Obj, C::Mor>, b: usize, ms: &[usize]| {
        let a = &cat.objs[b];
        ms.iter().fold(0, |acc, &m| acc | c.image_of(&cat.mors[m])) == c.sub(a).top()
    });
    Ok(Site::new("coherent", cat, cover))
}

/// A morphism α: (A, u) → (B, v) of C ⋉ X, with u ≤ X(α)(v).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SdMor<O, M> {
    pub src: PObj<O>,
    pub tgt: PObj<O>,
    pub alpha: M,
}

pub type SdSite<'a, X> = Site<'a, PObj<Obj<X>>, SdMor<Obj<X>, Mor<X>>>;

/// C ⋉ X: pairs (A, u ∈ X(A)); a sieve on (A, u) covers iff ⋁ ∃_{α_i} u_i = u.
pub fn semidirect_site<X: Hyperdoctrine>(x: &X) -> Result<SdSite<'_, X>, String> {
    let c = x.base();
    let mut objs = Vec::new();
    for a in c.objects() {
        for u in x.elements(&a) {
            objs.push(PObj { base: a.clone(), pred: u });
        }
    }
    let cat = FinCat::build(
        objs,
        |s, t| {
            c.hom(&s.base, &t.base)
                .into_iter()
                .filter(|al| subset(s.pred, x.subst(al, t.pred)))
                .map(|alpha| SdMor { src: s.clone(), tgt: t.clone(), alpha })
                .collect()
        },
        |s| SdMor { src: s.clone(), tgt: s.clone(), alpha: c.id(&s.base) },
        |g, f| SdMor { src: f.src.clone(), tgt: g.tgt.clone(), alpha: c.comp(&g.alpha, &f.alpha) },
        DEFAULT_MORPHISM_CAP,
    )?;
    let cover: SdCover<'_, X> = Rc::new(move |cat: &FinCat<_, _>, b: usize, ms: &[usize]| {
        let m: &[usize] = ms;
        m.iter().fold(0, |acc, &i| {
            let f: &SdMor<Obj<X>, Mor<X>> = &cat.mors[i];
            acc | x.exists(&f.alpha, f.src.pred)
        }) == cat.objs[b].pred
    });
    Ok(Site::new("semidirect", cat, cover))
}

type SdCover<'a, X> = CoverFn<'a, PObj<Obj<X>>, SdMor<Obj<X>, Mor<X>>>;

/// The full subsite of C ⋉ X on (A, x) with x join-irreducible.
pub fn irreducible_subsite<'a, X: Hyperdoctrine>(x: &'a X, site: &SdSite<'a, X>) -> Result<SdSite<'a, X>, String> {
    site.induced("irreducible", |o| x.fiber(&o.base).join_irreducibles().contains(&o.pred))
}

/// (A, F) with F = ↑gen, a filter of Sub(A). Every filter of a finite
/// lattice is principal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FObj<O> {
    pub base: O,
    pub gen: Set,
}

/// A germ class, represented by its restriction to the generator of the
/// source filter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Germ<O, M> {
    pub src: FObj<O>,
    pub tgt: FObj<O>,
    pub rep: M,
}

/// Local continuous maps (A, ↑U0) → (B, ↑V0): α: U → B with U ∈ F and
/// α*(V) ∈ F for all V ≥ V0. Returned as (U, α).
pub fn local_maps<C: CohCat>(c: &C, s: &FObj<C::Obj>, t: &FObj<C::Obj>) -> Vec<(Set, C::Mor)> {
    let sub = c.sub(&s.base);
    let mut out = Vec::new();
    for u in sub.elements_between(s.gen, sub.top(), 1 << 14).expect("subobject lattice too large") {
        let mu = c.sub_object(&s.base, u);
        for alpha in c.hom(&c.dom(&mu), &t.base) {
            if subset(s.gen, c.image(&mu, c.pullback_sub(&alpha, t.gen))) {
                out.push((u, alpha));
            }
        }
    }
    out
}

/// Germ classes of local maps by equivalence closure over restriction
/// witnesses, each given by its restriction to the generator.
pub fn germ_hom<C: CohCat>(c: &C, s: &FObj<C::Obj>, t: &FObj<C::Obj>) -> Result<Vec<Germ<C::Obj, C::Mor>>, String> {
    let maps = local_maps(c, s, t);
    let sub = c.sub(&s.base);
    let restrict = |w: Set, (u, al): &(Set, C::Mor)| c.comp(al, &c.restrict_mono(&s.base, w, *u));
    let mut uf = UnionFind::<usize>::new(maps.len());
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            let ws = sub.elements_between(s.gen, maps[i].0 & maps[j].0, 1 << 14).expect("subobject lattice too large");
            if ws.iter().any(|&w| restrict(w, &maps[i]) == restrict(w, &maps[j])) {
                uf.union(i, j);
            }
        }
    }
    let reps: Vec<C::Mor> = maps.iter().map(|m| restrict(s.gen, m)).collect();
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            if uf.equiv(i, j) != (reps[i] == reps[j]) {
                return Err(format!("germ of {:?} not determined by its restriction to the generator", maps[i]));
            }
        }
    }
    let mut out: Vec<C::Mor> = reps;
    out.sort();
    out.dedup();
    Ok(out.into_iter().map(|rep| Germ { src: s.clone(), tgt: t.clone(), rep }).collect())
}

pub fn germ_id<C: CohCat>(c: &C, a: &FObj<C::Obj>) -> Germ<C::Obj, C::Mor> {
    Germ { src: a.clone(), tgt: a.clone(), rep: c.sub_object(&a.base, a.gen) }
}

/// [β] ∘ [α]: the representative of α lands in the generator of the middle
/// filter, so compose through it.
pub fn germ_comp<C: CohCat>(c: &C, g: &Germ<C::Obj, C::Mor>, f: &Germ<C::Obj, C::Mor>) -> Germ<C::Obj, C::Mor> {
    let l = c.factor_through(&f.rep, &c.sub_object(&f.tgt.base, f.tgt.gen)).expect("continuous map meets the target generator");
    Germ { src: f.src.clone(), tgt: g.tgt.clone(), rep: c.comp(&g.rep, &l) }
}

/// The generator of ∃_[α]F = {V | α*(V) ∈ F}.
pub fn germ_image<C: CohCat>(c: &C, g: &Germ<C::Obj, C::Mor>) -> Set {
    c.image_of(&g.rep)
}

pub type FilterCat<C> = FinCat<FObj<<C as Category>::Obj>, Germ<<C as Category>::Obj, <C as Category>::Mor>>;

/// ΛC, or τC when `prime_only`.
pub fn filter_category<C: CohCat>(c: &C, prime_only: bool) -> Result<FilterCat<C>, String> {
    let mut objs = Vec::new();
    for a in c.objects() {
        let sub = c.sub(&a);
        let gens = if prime_only { sub.join_irreducibles() } else { sub.elements() };
        for gen in gens {
            objs.push(FObj { base: a.clone(), gen });
        }
    }
    let mut homs = HashMap::new();
    for s in &objs {
        for t in &objs {
            homs.insert((s.clone(), t.clone()), germ_hom(c, s, t)?);
        }
    }
    FinCat::build(
        objs,
        |s, t| homs[&(s.clone(), t.clone())].clone(),
        |a| germ_id(c, a),
        |g, f| germ_comp(c, g, f),
        DEFAULT_MORPHISM_CAP,
    )
}

pub fn type_category<C: CohCat>(c: &C) -> Result<FilterCat<C>, String> {
    filter_category(c, true)
}

pub type FilterSite<'a, C> = Site<'a, FObj<<C as Category>::Obj>, Germ<<C as Category>::Obj, <C as Category>::Mor>>;

/// ΛC with the coherent topology: the images of the members join above the
/// generator.
pub fn filter_site<C: CohCat>(c: &C) -> Result<FilterSite<'_, C>, String> {
    let cat = filter_category(c, false)?;
    let cover: CoverFn<'_, _, _> = Rc::new(move |cat: &FilterCat<C>, b: usize, ms: &[usize]| {
        subset(cat.objs[b].gen, ms.iter().fold(0, |acc, &m| acc | germ_image(c, &cat.mors[m])))
    });
    Ok(Site::new("filters", cat, cover))
}

/// (τC, J_p): a sieve covers iff one member has full image.
pub fn jp_coverage<C: CohCat>(c: &C) -> Result<FilterSite<'_, C>, String> {
    let cat = type_category(c)?;
    let cover: CoverFn<'_, _, _> = Rc::new(move |cat: &FilterCat<C>, b: usize, ms: &[usize]| {
        ms.iter().any(|&m| germ_image(c, &cat.mors[m]) == cat.objs[b].gen)
    });
    Ok(Site::new("types", cat, cover))
}

/// A functor between materialized categories, by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiteMap {
    pub obj: Vec<usize>,
    pub mor: Vec<usize>,
}

impl SiteMap {
    pub fn identity<O, M>(c: &FinCat<O, M>) -> Self {
        SiteMap { obj: (0..c.objs.len()).collect(), mor: (0..c.mors.len()).collect() }
    }

    /// Maps objects and morphisms by value lookup, failing on a value the
    /// target does not list.
    pub fn by_values<O1, M1, O2, M2>(
        src: &FinCat<O1, M1>,
        tgt: &FinCat<O2, M2>,
        fo: impl Fn(&O1) -> O2,
        fm: impl Fn(&M1) -> M2,
    ) -> Result<Self, String>
    where
        O1: Clone + Eq + Hash + Debug,
        M1: Clone + Eq + Hash + Debug,
        O2: Clone + Eq + Hash + Debug,
        M2: Clone + Eq + Hash + Debug,
    {
        let obj = src
            .objs
            .iter()
            .map(|o| tgt.obj_index(&fo(o)).ok_or_else(|| format!("{o:?} maps outside the target")))
            .collect::<Result<Vec<_>, _>>()?;
        let mor = src
            .mors
            .iter()
            .map(|m| tgt.mor_index(&fm(m)).ok_or_else(|| format!("{m:?} maps outside the target")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SiteMap { obj, mor })
    }

    pub fn check_functor<O1, M1, O2, M2>(&self, src: &FinCat<O1, M1>, tgt: &FinCat<O2, M2>) -> Result<(), String>
    where
        O1: Clone + Eq + Hash + Debug,
        M1: Clone + Eq + Hash + Debug,
        O2: Clone + Eq + Hash + Debug,
        M2: Clone + Eq + Hash + Debug,
    {
        for m in 0..src.n_mors() {
            let e = self.mor[m];
            if tgt.dom[e] != self.obj[src.dom[m]] || tgt.cod[e] != self.obj[src.cod[m]] {
                return Err(format!("{:?} lands in the wrong hom set", src.mors[m]));
            }
            for &g in src.outof(src.cod[m]) {
                if self.mor[src.comp(g, m)] != tgt.comp(self.mor[g], e) {
                    return Err(format!("composite {:?} ∘ {:?} not preserved", src.mors[g], src.mors[m]));
                }
            }
        }
        for (a, &i) in src.ids.iter().enumerate() {
            if self.mor[i] != tgt.ids[self.obj[a]] {
                return Err(format!("identity of {:?} not preserved", src.objs[a]));
            }
        }
        Ok(())
    }
}

/// The five conditions for e: (D, K) → (C, J) to induce an equivalence of
/// sheaf toposes. Quantifications over covering sieves are budgeted per
/// object; coverage is returned alongside.
pub fn comparison_check<'a, 'b, O1, M1, O2, M2>(
    src: &Site<'a, O1, M1>,
    tgt: &Site<'b, O2, M2>,
    e: &SiteMap,
    budget: usize,
) -> (Report, Coverage)
where
    O1: Clone + Eq + Hash + Debug + 'a,
    M1: Clone + Eq + Hash + Debug + 'a,
    O2: Clone + Eq + Hash + Debug + 'b,
    M2: Clone + Eq + Hash + Debug + 'b,
{
    let (d, c) = (&*src.cat, &*tgt.cat);
    let mut r = Report::new();
    let mut cov = Coverage::default();
    r.push("functor", e.check_functor(d, c));
    let image_sieve = |b: usize, s: Set| -> Set {
        let fam: Vec<usize> = d.sieve_members(b, s).iter().map(|&m| e.mor[m]).collect();
        c.generated(e.obj[b], &fam)
    };
    r.push(
        "cover_preserving",
        (|| {
            for b in 0..d.n_objs() {
                let (cs, complete) = src.covering_sieves(b, budget)?;
                cov.add(cs.len(), complete);
                for s in cs {
                    if !tgt.covers_sieve(e.obj[b], image_sieve(b, s)) {
                        return Err(format!("cover {:?} of {:?} not preserved", d.sieve_members(b, s), d.objs[b]));
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "locally_full",
        (|| {
            for x in 0..d.n_objs() {
                for y in 0..d.n_objs() {
                    for &g in c.hom(e.obj[x], e.obj[y]) {
                        let mut s = 0;
                        for &xi in d.into(x) {
                            let gx = c.comp(g, e.mor[xi]);
                            if d.hom(d.dom[xi], y).iter().any(|&f| e.mor[f] == gx) {
                                s |= 1u128 << d.local(xi);
                            }
                        }
                        if !src.covers_sieve(x, s) {
                            return Err(format!("{:?} is not locally in the image", c.mors[g]));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "locally_faithful",
        (|| {
            for x in 0..d.n_objs() {
                for y in 0..d.n_objs() {
                    let h = d.hom(x, y);
                    for (i, &f) in h.iter().enumerate() {
                        for &f2 in &h[i + 1..] {
                            if e.mor[f] != e.mor[f2] {
                                continue;
                            }
                            let s = d.into(x).iter().filter(|&&xi| d.comp(f, xi) == d.comp(f2, xi)).fold(0, |s, &xi| s | 1u128 << d.local(xi));
                            if !src.covers_sieve(x, s) {
                                return Err(format!("{:?} and {:?} are not locally equal", d.mors[f], d.mors[f2]));
                            }
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "locally_surjective",
        (|| {
            let hit: HashSet<usize> = e.obj.iter().copied().collect();
            for t in 0..c.n_objs() {
                let fam: Vec<usize> = c.into(t).iter().copied().filter(|&m| hit.contains(&c.dom[m])).collect();
                if !tgt.covers_family(t, &fam) {
                    return Err(format!("{:?} is not covered by the image", c.objs[t]));
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "co_continuous",
        (|| {
            for b in 0..d.n_objs() {
                let (cs, complete) = tgt.covering_sieves(e.obj[b], budget)?;
                cov.add(cs.len(), complete);
                for rs in cs {
                    let s = d.into(b).iter().filter(|&&f| rs >> c.local(e.mor[f]) & 1 == 1).fold(0, |s, &f| s | 1u128 << d.local(f));
                    if !src.covers_sieve(b, s) {
                        return Err(format!("cover {:?} of {:?} does not lift", c.sieve_members(e.obj[b], rs), d.objs[b]));
                    }
                }
            }
            Ok(())
        })(),
    );
    if !cov.complete {
        r.note(format!("partial verification: {} covering sieves checked within budget {budget}", cov.sieves_checked));
    }
    (r, cov)
}

/// e: D → τC, (A, x) ↦ (A, ρ_x), α ↦ [α].
pub fn types_functor<'a, C: CohCat>(
    c: &C,
    sd: &crate::predcat::SubDelta<'a, C>,
    d: &FinCat<PObj<C::Obj>, SdMor<C::Obj, C::Mor>>,
    tau: &FilterCat<C>,
) -> Result<SiteMap, String> {
    let eo = |o: &PObj<C::Obj>| FObj { base: o.base.clone(), gen: sd.lower(&o.base, o.pred) };
    SiteMap::by_values(d, tau, eo, |m| {
        let s = eo(&m.src);
        Germ { src: s.clone(), tgt: eo(&m.tgt), rep: c.comp(&m.alpha, &c.sub_object(&s.base, s.gen)) }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Coherent,
    Trivial,
}

/// Covering families for the sheaf checks: for J_coh, families of at most
/// `max_family` arrows from declared objects whose images join to the top.
fn covering_families<C: CohCat>(c: &C, a: &C::Obj, top: Topology, max_family: usize) -> Vec<Vec<C::Mor>> {
    match top {
        Topology::Trivial => vec![vec![c.id(a)]],
        Topology::Coherent => {
            let arrows: Vec<C::Mor> = c.objects().iter().flat_map(|b| c.hom(b, a)).collect();
            let full = c.sub(a).top();
            let mut out = Vec::new();
            for k in 0..=max_family.min(arrows.len()) {
                for fam in itertools::Itertools::combinations(arrows.iter().cloned(), k) {
                    if fam.iter().fold(0, |acc, f| acc | c.image_of(f)) == full {
                        out.push(fam);
                    }
                }
            }
            out
        }
    }
}

/// X is a sheaf for the chosen topology: every matching family over every
/// covering family has exactly one amalgamation, namely ⋁ ∃_{α_i} u_i. The
/// identity u = ⋁ ∃_{α_i} X(α_i)(u) is checked separately.
pub fn sheaf_check<X: Hyperdoctrine>(x: &X, top: Topology, max_family: usize, budget: usize) -> Report
where
    X::Base: CohCat,
{
    let c = x.base();
    let mut r = Report::new();
    let (mut n_fam, mut n_match, mut truncated) = (0usize, 0usize, false);
    let mut unique = Ok(());
    let mut formula = Ok(());
    let mut uniqgl = Ok(());
    'objects: for a in c.objects() {
        let fiber = x.elements(&a);
        for fam in covering_families(c, &a, top, max_family) {
            n_fam += 1;
            for &u in &fiber {
                let back = fam.iter().fold(0, |acc, f| acc | x.exists(f, x.subst(f, u)));
                if back != u && uniqgl.is_ok() {
                    uniqgl = Err(format!("{u:#b} over {fam:?} at {a:?} recovers {back:#b}"));
                }
            }
            let fibers: Vec<Vec<Set>> = fam.iter().map(|f| x.elements(&c.dom(f))).collect();
            let legs: Vec<Vec<(Mor<X>, Mor<X>)>> = fam.iter().map(|fi| fam.iter().map(|fj| c.pullback(fi, fj)).collect()).collect();
            for tuple in itertools::Itertools::multi_cartesian_product(fibers.iter().map(|v| v.iter().copied())).chain(
                // the empty family has one (empty) matching family
                if fam.is_empty() { vec![vec![]] } else { vec![] },
            ) {
                if n_match >= budget {
                    truncated = true;
                    break 'objects;
                }
                let matching = (0..fam.len()).all(|i| (0..fam.len()).all(|j| x.subst(&legs[i][j].0, tuple[i]) == x.subst(&legs[i][j].1, tuple[j])));
                if !matching {
                    continue;
                }
                n_match += 1;
                let amalg: Vec<Set> = fiber.iter().copied().filter(|&u| fam.iter().zip(&tuple).all(|(f, &ui)| x.subst(f, u) == ui)).collect();
                if amalg.len() != 1 {
                    if unique.is_ok() {
                        unique = Err(format!("{} amalgamations of {tuple:?} over {fam:?}", amalg.len()));
                    }
                    continue;
                }
                let glued = fam.iter().zip(&tuple).fold(0, |acc, (f, &ui)| acc | x.exists(f, ui));
                if glued != amalg[0] && formula.is_ok() {
                    formula = Err(format!("⋁∃ gives {glued:#b}, amalgamation is {:#b}, over {fam:?}", amalg[0]));
                }
            }
        }
    }
    r.push("unique_amalgamation", unique);
    r.push("gluing_formula", formula);
    r.push("uniqgl", uniqgl);
    r.note(format!("{n_fam} covering families, {n_match} matching families"));
    if truncated {
        r.note(format!("partial verification: stopped after {budget} matching families"));
    }
    r
}

/// On C ⋉ X, for every sieve S on every (A, u) within budget:
/// ⋁{∃_β v | (β, v) ∈ S} = ⋁{∃_γ w | (γ, w) ∈ S̄}, where (γ, w) ∈ S̄ iff the
/// γ_k with (γ γ_k, γ_k* w) ∈ S cover dom γ in J_coh.
pub fn topology_coincidence_check<X: Hyperdoctrine>(x: &X, budget: usize) -> Result<(Report, Coverage), String>
where
    X::Base: CohCat,
{
    let c = x.base();
    let site = semidirect_site(x)?;
    let cat = &*site.cat;
    let mut cov = Coverage::default();
    let arrows_into: HashMap<Obj<X>, Vec<Mor<X>>> =
        c.objects().into_iter().map(|t| (t.clone(), c.objects().iter().flat_map(|b| c.hom(b, &t)).collect())).collect();
    let mut res = Ok(());
    'outer: for b in 0..cat.n_objs() {
        let (sieves, complete) = site.sieves(b, budget)?;
        cov.add(sieves.len(), complete);
        for s in sieves {
            let lhs = cat.sieve_members(b, s).iter().fold(0, |acc, &m| acc | x.exists(&cat.mors[m].alpha, cat.mors[m].src.pred));
            let mut rhs = 0;
            // w ≤ γ*(u) is forced for (γ, w) ∈ S̄, so only arrows of the site are tried
            for &g in cat.into(b) {
                let gm = &cat.mors[g];
                let (cc, w) = (&gm.src.base, gm.src.pred);
                let ks = &arrows_into[cc];
                let mut img = 0;
                for gk in ks {
                    let m = SdMor {
                        src: PObj { base: c.dom(gk), pred: x.subst(gk, w) },
                        tgt: cat.objs[b].clone(),
                        alpha: c.comp(&gm.alpha, gk),
                    };
                    let i = cat.mor_index(&m).ok_or_else(|| format!("{m:?} missing from the site"))?;
                    if s >> cat.local(i) & 1 == 1 {
                        img |= c.image_of(gk);
                    }
                }
                if img == c.sub(cc).top() {
                    rhs |= x.exists(&gm.alpha, w);
                }
            }
            if lhs != rhs {
                res = Err(format!("sieve {:?} on {:?}: {lhs:#b} vs {rhs:#b}", cat.sieve_members(b, s), cat.objs[b]));
                break 'outer;
            }
        }
    }
    let mut r = Report::new();
    r.push("coincide", res);
    if !cov.complete {
        r.note(format!("partial verification: {} sieves checked within budget {budget} per object", cov.sieves_checked));
    }
    Ok((r, cov))
}

/// For a lattice L: the full subcategory E_L of τL on (1, ρ) is the poset
/// (PrFl(L), ⊇), its induced topology is trivial and its downsets form L^δ.
pub fn localic_tot_for_lattice(l: &FinDistLattice) -> Result<Report, String> {
    let c = LatCat::new(l.clone());
    let site = jp_coverage(&c)?;
    let top = l.top();
    let el = site.induced("E_L", |o| o.base == top)?;
    let e = &*el.cat;
    let n = e.n_objs();
    let mut r = Report::new();
    r.note(format!("τL has {} objects, E_L has {n}", site.cat.n_objs()));
    r.push(
        "thin",
        (0..n).try_for_each(|a| match (0..n).find(|&b| e.hom(a, b).len() > 1) {
            Some(b) => Err(format!("{:?} → {:?} twice", e.objs[a], e.objs[b])),
            None => Ok(()),
        }),
    );
    let rel: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| !e.hom(a, b).is_empty()).collect()).collect();
    let pf = l.prime_filters();
    let sup: Vec<Vec<bool>> = pf.iter().map(|p| pf.iter().map(|q| q.iter().zip(p).all(|(&x, &y)| !x || y)).collect()).collect();
    r.push(
        "prime_filter_poset",
        if relation_iso(&rel, &sup).is_some() { Ok(()) } else { Err(format!("E_L {rel:?} vs (PrFl, ⊇) {sup:?}")) },
    );
    r.push(
        "trivial_topology",
        (|| {
            for b in 0..n {
                for s in el.covering_sieves(b, DEFAULT_SIEVE_BUDGET)?.0 {
                    if !e.sieve_members(b, s).iter().any(|&m| e.hom(e.dom[m], b).len() == 1 && !e.hom(b, e.dom[m]).is_empty()) {
                        return Err(format!("{:?} covers {:?} without an iso", e.sieve_members(b, s), e.objs[b]));
                    }
                }
            }
            Ok(())
        })(),
    );
    let below: Vec<Set> = (0..n).map(|a| (0..n).filter(|&b| rel[b][a]).fold(0, |s, b| s | 1u128 << b)).collect();
    let downs = DownLat::new(below).to_table().0;
    r.push(
        "downsets_are_extension",
        if downs.iso(&canonical_extension(l).ext).is_some() { Ok(()) } else { Err("downset lattice differs from L^δ".into()) },
    );
    Ok(r)
}

/// τ^F for a coherent F: C → D. Components F_A^δ: S_C^δ(A) → S_D^δ(FA)
/// extend the restrictions F_A.
pub struct LocaleMorphism<'a, F: Functor> {
    pub f: &'a F,
    src: HashMap<SObj<F>, FiberExt>,
    tgt: HashMap<SObj<F>, FiberExt>,
}

pub fn locale_morphism<F: Functor>(f: &F) -> Result<LocaleMorphism<'_, F>, String> {
    let coh = check_coherent_functor(f);
    if !coh.pass() {
        return Err(format!("not coherent: {:?}", coh.failures()));
    }
    let (s, t) = (f.src(), f.tgt());
    let mut src = HashMap::new();
    let mut tgt = HashMap::new();
    for a in s.objects() {
        src.insert(a.clone(), FiberExt::new(&s.sub(&a)));
        tgt.insert(a.clone(), FiberExt::new(&t.sub(&f.obj(&a))));
    }
    Ok(LocaleMorphism { f, src, tgt })
}

/// Least element above which F lands, if it is a left adjoint.
fn left_adjoint_at(dom: &[Set], w: Set, g: impl Fn(Set) -> Set) -> Option<Set> {
    let cands: Vec<Set> = dom.iter().copied().filter(|&v| subset(w, g(v))).collect();
    cands.iter().copied().find(|&v| cands.iter().all(|&x| subset(v, x)))
}

/// Greatest element mapped below u.
fn right_adjoint_at(dom: &[Set], u: Set, g: impl Fn(Set) -> Set) -> Option<Set> {
    let cands: Vec<Set> = dom.iter().copied().filter(|&v| subset(g(v), u)).collect();
    cands.iter().copied().find(|&v| cands.iter().all(|&x| subset(x, v)))
}

impl<F: Functor> LocaleMorphism<'_, F> {
    pub fn objects(&self) -> Vec<SObj<F>> {
        self.f.src().objects()
    }

    pub fn src_elements(&self, a: &SObj<F>) -> Vec<Set> {
        self.src[a].ext.elements()
    }

    pub fn tgt_elements(&self, a: &SObj<F>) -> Vec<Set> {
        self.tgt[a].ext.elements()
    }

    /// F_A^δ
    pub fn component(&self, a: &SObj<F>, u: Set) -> Set {
        self.src[a].extend(&self.tgt[a], |s| self.f.sub(a, s), u)
    }

    /// σ_A, left adjoint of F_A^δ.
    pub fn sigma(&self, a: &SObj<F>, w: Set) -> Option<Set> {
        left_adjoint_at(&self.src_elements(a), w, |v| self.component(a, v))
    }

    /// (α*)^δ: S_C^δ(B) → S_C^δ(A).
    pub fn src_subst(&self, al: &SMor<F>, v: Set) -> Set {
        let s = self.f.src();
        let (a, b) = (s.dom(al), s.cod(al));
        self.src[&b].extend(&self.src[&a], |x| s.pullback_sub(al, x), v)
    }

    /// ((Fα)*)^δ: S_D^δ(FB) → S_D^δ(FA).
    pub fn tgt_subst(&self, al: &SMor<F>, w: Set) -> Set {
        let s = self.f.src();
        let (a, b) = (s.dom(al), s.cod(al));
        let fa = self.f.mor(al);
        self.tgt[&b].extend(&self.tgt[&a], |x| self.f.tgt().pullback_sub(&fa, x), w)
    }
}

/// τ^F is a surjection iff every component is an order embedding.
pub fn surjection_check<F: Functor>(m: &LocaleMorphism<'_, F>) -> Result<(), String> {
    for a in m.objects() {
        let es = m.src_elements(&a);
        for &u in &es {
            for &v in &es {
                if subset(m.component(&a, u), m.component(&a, v)) && !subset(u, v) {
                    return Err(format!("F_{a:?}^δ identifies {u:#b} ≰ {v:#b}"));
                }
            }
        }
    }
    Ok(())
}

/// τ^F is open iff the left adjoints σ_A exist, are natural and satisfy
/// Frobenius. The outer squares (∀ and implication preserved by F^δ) are
/// reported too; when they commute the inner ones must.
pub fn open_check<F: Functor>(m: &LocaleMorphism<'_, F>) -> Report {
    let s = m.f.src();
    let obs = m.objects();
    let mut r = Report::new();
    r.push(
        "left_adjoints",
        obs.iter().try_for_each(|a| {
            for w in m.tgt_elements(a) {
                if m.sigma(a, w).is_none() {
                    return Err(format!("no σ_{a:?} at {w:#b}"));
                }
            }
            Ok(())
        }),
    );
    if !r.pass() {
        return r;
    }
    let arrows: Vec<SMor<F>> = obs.iter().flat_map(|a| obs.iter().flat_map(move |b| s.hom(a, b))).collect();
    r.push(
        "outer_forall_square",
        (|| {
            for al in &arrows {
                let (a, b) = (s.dom(al), s.cod(al));
                for u in m.src_elements(&a) {
                    let lhs = right_adjoint_at(&m.tgt_elements(&b), m.component(&a, u), |w| m.tgt_subst(al, w));
                    let rhs = right_adjoint_at(&m.src_elements(&b), u, |v| m.src_subst(al, v)).map(|v| m.component(&b, v));
                    if lhs != rhs {
                        return Err(format!("∀ square at {al:?}, {u:#b}"));
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "outer_implication_square",
        obs.iter().try_for_each(|a| {
            let (se, te) = (&m.src[a].ext, &m.tgt[a].ext);
            for v in se.elements() {
                for u in se.elements() {
                    if m.component(a, se.implies(v, u)) != te.implies(m.component(a, v), m.component(a, u)) {
                        return Err(format!("implication at {a:?}, {v:#b} → {u:#b}"));
                    }
                }
            }
            Ok(())
        }),
    );
    r.push(
        "sigma_natural",
        (|| {
            for al in &arrows {
                let (a, b) = (s.dom(al), s.cod(al));
                for w in m.tgt_elements(&b) {
                    let lhs = m.sigma(&a, m.tgt_subst(al, w)).unwrap();
                    let rhs = m.src_subst(al, m.sigma(&b, w).unwrap());
                    if lhs != rhs {
                        return Err(format!("σ not natural at {al:?}, {w:#b}"));
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "frobenius",
        obs.iter().try_for_each(|a| {
            for w in m.tgt_elements(a) {
                for v in m.src_elements(a) {
                    if m.sigma(a, w & m.component(a, v)).unwrap() != m.sigma(a, w).unwrap() & v {
                        return Err(format!("Frobenius at {a:?}, w={w:#b}, v={v:#b}"));
                    }
                }
            }
            Ok(())
        }),
    );
    let outer = r.passed("outer_forall_square") && r.passed("outer_implication_square");
    let inner = r.passed("sigma_natural") && r.passed("frobenius");
    r.push("outer_implies_inner", if !outer || inner { Ok(()) } else { Err("outer squares commute, inner do not".into()) });
    r
}

/// The verdict of an open_check report.
pub fn is_open(r: &Report) -> bool {
    r.passed("left_adjoints") && r.passed("sigma_natural") && r.passed("frobenius")
}

/// H ∘ F over the source of F.
pub struct Reindexed<'a, F, H> {
    pub f: &'a F,
    pub h: &'a H,
}

impl<F: Functor, H: Hyperdoctrine<Base = F::Tgt>> Hyperdoctrine for Reindexed<'_, F, H> {
    type Base = F::Src;

    fn base(&self) -> &F::Src {
        self.f.src()
    }

    fn fiber(&self, a: &SObj<F>) -> DownLat {
        self.h.fiber(&self.f.obj(a))
    }

    fn subst(&self, al: &SMor<F>, x: Set) -> Set {
        self.h.subst(&self.f.mor(al), x)
    }

    fn exists(&self, al: &SMor<F>, x: Set) -> Set {
        self.h.exists(&self.f.mor(al), x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationData {
    pub intermediate_objects: usize,
    pub intermediate_morphisms: usize,
    pub target_objects: usize,
    pub target_morphisms: usize,
    pub site_map: SiteMap,
    pub report: Report,
}

/// The intermediate site C ⋉ (S_D^δ ∘ F), the site map (A, w) ↦ (FA, w) into
/// D ⋉ S_D^δ, and τ^F. Checks the site map, τ^F's naturality and that the
/// Ω fibers ↓w and their restriction maps agree across the site map.
pub fn factorization_data<F: Functor>(f: &F) -> Result<FactorizationData, String> {
    let lm = locale_morphism(f)?;
    let d = f.tgt();
    let sdd = SubHyp(d);
    let xd = canext_hyperdoctrine(&sdd);
    let re = Reindexed { f, h: &xd };
    let mid = semidirect_site(&re)?;
    let tgt = semidirect_site(&xd)?;
    let map = SiteMap::by_values(
        &mid.cat,
        &tgt.cat,
        |o| PObj { base: f.obj(&o.base), pred: o.pred },
        |m| SdMor {
            src: PObj { base: f.obj(&m.src.base), pred: m.src.pred },
            tgt: PObj { base: f.obj(&m.tgt.base), pred: m.tgt.pred },
            alpha: f.mor(&m.alpha),
        },
    )?;
    let mut r = Report::new();
    r.merge("reindexed", validate(&re));
    r.push("site_map_functor", map.check_functor(&mid.cat, &tgt.cat));
    let s = f.src();
    r.push(
        "tau_natural",
        (|| {
            for a in s.objects() {
                for b in s.objects() {
                    for al in s.hom(&a, &b) {
                        for v in lm.src_elements(&b) {
                            if lm.component(&a, lm.src_subst(&al, v)) != lm.tgt_subst(&al, lm.component(&b, v)) {
                                return Err(format!("τ^F not natural at {al:?}, {v:#b}"));
                            }
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "omega_fibers",
        (|| {
            let (mc, tc) = (&*mid.cat, &*tgt.cat);
            for i in 0..mc.n_objs() {
                let o = &mc.objs[i];
                let lo = re.fiber(&o.base).restrict(o.pred);
                let to = &tc.objs[map.obj[i]];
                let lt = xd.fiber(&to.base).restrict(to.pred);
                if lo.elements() != lt.elements() {
                    return Err(format!("↓{:#b} differs at {o:?}", o.pred));
                }
            }
            for m in 0..mc.n_mors() {
                let (mm, tm) = (&mc.mors[m], &tc.mors[map.mor[m]]);
                for z in re.fiber(&mm.tgt.base).restrict(mm.tgt.pred).elements() {
                    if re.subst(&mm.alpha, z) & mm.src.pred != xd.subst(&tm.alpha, z) & tm.src.pred {
                        return Err(format!("restriction along {:?} differs at {z:#b}", mm.alpha));
                    }
                }
            }
            Ok(())
        })(),
    );
    Ok(FactorizationData {
        intermediate_objects: mid.cat.n_objs(),
        intermediate_morphisms: mid.cat.n_mors(),
        target_objects: tgt.cat.n_objs(),
        target_morphisms: tgt.cat.n_mors(),
        site_map: map,
        report: r,
    })
}

/// τC against the full subcategory of C^δ on (A, x) with x join-irreducible:
/// objects correspond under x ↦ ρ_x and hom sets have equal size.
pub fn types_in_extension_check<C: CohCat>(c: &C) -> Result<(), String> {
    let tau = type_category(c)?;
    let s = SubHyp(c);
    let sd = canext_hyperdoctrine(&s);
    let cd = PredCat::new(&sd);
    let mut objs = Vec::new();
    for a in c.objects() {
        for x in sd.fiber(&a).join_irreducibles() {
            objs.push(PObj { base: a.clone(), pred: x });
        }
    }
    if objs.len() != tau.n_objs() {
        return Err(format!("{} irreducible objects, {} types", objs.len(), tau.n_objs()));
    }
    let rho = |o: &PObj<C::Obj>| tau.obj_index(&FObj { base: o.base.clone(), gen: sd.lower(&o.base, o.pred) });
    for x in &objs {
        let i = rho(x).ok_or_else(|| format!("{x:?} has no type"))?;
        for y in &objs {
            let j = rho(y).unwrap();
            let (n, m) = (cd.hom(x, y).len(), tau.hom(i, j).len());
            if n != m {
                return Err(format!("{x:?} → {y:?}: {n} in C^δ, {m} in τC"));
            }
        }
    }
    Ok(())
}

/// ΛC against A(S_C): (A, ↑U) ↔ (A, U), hom sets of equal size.
pub fn filters_as_predicates_check<C: CohCat>(c: &C) -> Result<(), String> {
    let lam = filter_category(c, false)?;
    let s = SubHyp(c);
    let pc = PredCat::new(&s);
    for (i, x) in lam.objs.iter().enumerate() {
        for (j, y) in lam.objs.iter().enumerate() {
            let px = PObj { base: x.base.clone(), pred: x.gen };
            let py = PObj { base: y.base.clone(), pred: y.gen };
            let (n, m) = (lam.hom(i, j).len(), pc.hom(&px, &py).len());
            if n != m {
                return Err(format!("{x:?} → {y:?}: {n} germs, {m} relations"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{Func, FinSetCat, IdFunctor, LatFunctor};
    use crate::hyperdoctrine::{powerset_hyperdoctrine, Mutated};

    #[test]
    fn coherent_covers() {
        let one = FinSetCat::new(vec![1]);
        let s = coherent_topology(&one).unwrap();
        let (cs, complete) = s.covering_sieves(0, 16).unwrap();
        assert!(complete);
        assert_eq!(cs, vec![1]);

        let c = FinSetCat::new(vec![0, 1, 2]);
        let s = coherent_topology(&c).unwrap();
        let two = s.cat.obj_index(&2).unwrap();
        let pts: Vec<usize> = s.cat.hom(s.cat.obj_index(&1).unwrap(), two).to_vec();
        assert_eq!(pts.len(), 2);
        assert!(s.covers_family(two, &pts));
        assert!(!s.covers_family(two, &pts[..1]));
        assert!(s.covers_family(s.cat.obj_index(&0).unwrap(), &[]));
        assert!(s.cat.check_laws().is_ok());
    }

    #[test]
    fn semidirect_counts() {
        let c = FinSetCat::new(vec![1, 2]);
        let p = powerset_hyperdoctrine(&c);
        let s = semidirect_site(&p).unwrap();
        assert_eq!(s.cat.n_objs(), 6);
        // oracle: α: A → B with u ⊆ α⁻¹(v), over explicit tables
        let mut n = 0;
        for (a, b) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            for f in FinSetCat::all_functions(a, b) {
                for u in 0..1u128 << a {
                    for v in 0..1u128 << b {
                        let pre = (0..a).filter(|&i| v >> f.table[i] & 1 == 1).fold(0, |s, i| s | 1 << i);
                        if u & !pre == 0 {
                            n += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(s.cat.n_mors(), n);
        for b in 0..s.cat.n_objs() {
            if s.cat.objs[b].pred == 0 {
                assert!(s.covers_family(b, &[]));
            }
        }
        assert!(s.cat.check_laws().is_ok());
    }

    fn chain_types() -> (LatCat, usize, usize) {
        (LatCat::new(FinDistLattice::chain(3)), 1, 2)
    }

    #[test]
    fn types_of_three_chain() {
        let (c, m, top) = chain_types();
        let t = jp_coverage(&c).unwrap();
        assert_eq!(t.cat.n_objs(), 3);
        let mpt = c.points_below(m);
        let src = t.cat.obj_index(&FObj { base: m, gen: mpt }).unwrap();
        let tgt = t.cat.obj_index(&FObj { base: top, gen: mpt }).unwrap();
        let arrow = t.cat.hom(src, tgt);
        assert_eq!(arrow.len(), 1);
        assert!(t.covers_family(tgt, arrow));
        assert!(t.cat.check_laws().is_ok());
    }

    #[test]
    fn jp_is_induced_from_filters() {
        for c in [LatCat::new(FinDistLattice::chain(3)), LatCat::new(FinDistLattice::diamond())] {
            let lam = filter_site(&c).unwrap();
            let prime: HashSet<_> = type_category(&c).unwrap().objs.into_iter().collect();
            let ind = lam.induced("types", |o| prime.contains(o)).unwrap();
            let jp = jp_coverage(&c).unwrap();
            for b in 0..jp.cat.n_objs() {
                let bi = ind.cat.obj_index(&jp.cat.objs[b]).unwrap();
                for s in jp.sieves(b, 1 << 10).unwrap().0 {
                    let ms: Vec<usize> = jp.cat.sieve_members(b, s).iter().map(|&m| ind.cat.mor_index(&jp.cat.mors[m]).unwrap()).collect();
                    assert_eq!(jp.covers_sieve(b, s), ind.covers_family(bi, &ms));
                }
            }
        }
        let c = FinSetCat::new(vec![1, 2]);
        let lam = filter_site(&c).unwrap();
        assert!(lam.cat.check_laws().is_ok());
    }

    #[test]
    fn single_point_types_have_no_other_covers() {
        let c = FinSetCat::new(vec![1]);
        let t = jp_coverage(&c).unwrap();
        assert_eq!(t.cat.n_objs(), 1);
        assert_eq!(t.cat.n_mors(), 1);
        assert_eq!(t.covering_sieves(0, 8).unwrap().0, vec![1]);
    }

    #[test]
    fn germs_and_predicates() {
        assert!(filters_as_predicates_check(&LatCat::new(FinDistLattice::chain(3))).is_ok());
        assert!(filters_as_predicates_check(&LatCat::new(FinDistLattice::diamond())).is_ok());
        assert!(filters_as_predicates_check(&FinSetCat::new(vec![1, 2])).is_ok());
        assert!(types_in_extension_check(&LatCat::new(FinDistLattice::chain(3))).is_ok());
        assert!(types_in_extension_check(&FinSetCat::new(vec![1, 2])).is_ok());
    }

    #[test]
    fn comparison_conditions() {
        let c = FinSetCat::new(vec![1, 2]);
        let coh = coherent_topology(&c).unwrap();
        let (r, _) = comparison_check(&coh, &coh, &SiteMap::identity(&coh.cat), DEFAULT_SIEVE_BUDGET);
        assert!(r.pass(), "{:?}", r.failures());
    }

    fn irreducible_comparisons<C: CohCat>(c: &C) {
        let s = SubHyp(c);
        let sd = canext_hyperdoctrine(&s);
        let big = semidirect_site(&sd).unwrap();
        let d = irreducible_subsite(&sd, &big).unwrap();
        let tau = jp_coverage(c).unwrap();
        let e = types_functor(c, &sd, &d.cat, &tau.cat).unwrap();
        let (r, _) = comparison_check(&d, &tau, &e, DEFAULT_SIEVE_BUDGET);
        assert!(r.pass(), "{:?}", r.failures());
        let inc = SiteMap::by_values(&d.cat, &big.cat, |o| o.clone(), |m| m.clone()).unwrap();
        let (r, _) = comparison_check(&d, &big, &inc, DEFAULT_SIEVE_BUDGET);
        assert!(r.pass(), "{:?}", r.failures());
        let bad = d.with_empty_cover();
        let (r, _) = comparison_check(&bad, &tau, &e, DEFAULT_SIEVE_BUDGET);
        let failed: Vec<&str> = r.failures().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["cover_preserving"]);
    }

    #[test]
    fn types_functor_comparison() {
        irreducible_comparisons(&LatCat::new(FinDistLattice::chain(3)));
        irreducible_comparisons(&FinSetCat::new(vec![1, 2]));
    }

    #[test]
    fn sheaves() {
        let c = FinSetCat::new(vec![0, 1, 2]);
        let s = SubHyp(&c);
        let sd = canext_hyperdoctrine(&s);
        let r = sheaf_check(&sd, Topology::Coherent, 2, 1 << 16);
        assert!(r.pass(), "{:?}", r.failures());
        let p = powerset_hyperdoctrine(&c);
        let bad = Mutated { inner: &p, at: Func::new(1, 2, vec![0]), arg: 1, value: 0b11 };
        assert!(!validate(&bad).passed("frobenius"));
        let r = sheaf_check(&bad, Topology::Coherent, 2, 1 << 16);
        assert!(!r.pass());
        assert!(!r.passed("gluing_formula"));
        assert!(sheaf_check(&bad, Topology::Trivial, 1, 1 << 16).passed("unique_amalgamation"));
    }

    #[test]
    fn coincidence() {
        let one = FinSetCat::new(vec![1]);
        let s = SubHyp(&one);
        let sd = canext_hyperdoctrine(&s);
        let (r, cov) = topology_coincidence_check(&sd, DEFAULT_SIEVE_BUDGET).unwrap();
        assert!(r.pass() && cov.complete);

        let c = FinSetCat::new(vec![0, 1, 2]);
        let s = SubHyp(&c);
        let sd = canext_hyperdoctrine(&s);
        let (r, cov) = topology_coincidence_check(&sd, 256).unwrap();
        assert!(r.pass(), "{:?}", r.failures());
        assert!(cov.sieves_checked > 0);
        let (r, cov) = topology_coincidence_check(&sd, 1).unwrap();
        assert!(!cov.complete);
        assert!(r.notes.iter().any(|n| n.starts_with("partial")));
    }

    #[test]
    fn lattice_tot() {
        for (l, pts) in [(FinDistLattice::chain(2), 1), (FinDistLattice::chain(3), 2), (FinDistLattice::diamond(), 2)] {
            let r = localic_tot_for_lattice(&l).unwrap();
            assert!(r.pass(), "{:?}", r.failures());
            assert!(r.notes[0].ends_with(&format!("E_L has {pts}")));
        }
    }

    #[test]
    fn locale_morphisms() {
        let c3 = LatCat::new(FinDistLattice::chain(3));
        let b4 = LatCat::new(FinDistLattice::boolean(2));
        let cons = LatFunctor { src: &c3, tgt: &b4, map: vec![0, 1, 3] };
        let m = locale_morphism(&cons).unwrap();
        assert!(surjection_check(&m).is_ok());
        let heyt = LatFunctor { src: &b4, tgt: &c3, map: vec![0, 2, 0, 2] };
        let m = locale_morphism(&heyt).unwrap();
        assert!(surjection_check(&m).is_err());
        let r = open_check(&m);
        assert!(r.pass(), "{:?}", r.failures());
        let c = FinSetCat::new(vec![1, 2]);
        let id = IdFunctor(&c);
        let m = locale_morphism(&id).unwrap();
        assert!(surjection_check(&m).is_ok());
        assert!(open_check(&m).pass());
    }

    #[test]
    fn factorization() {
        let c = FinSetCat::new(vec![1, 2]);
        let id = IdFunctor(&c);
        let d = factorization_data(&id).unwrap();
        assert!(d.report.pass(), "{:?}", d.report.failures());
        assert_eq!(d.intermediate_objects, d.target_objects);
        assert_eq!(d.intermediate_morphisms, d.target_morphisms);
        let c3 = LatCat::new(FinDistLattice::chain(3));
        let b4 = LatCat::new(FinDistLattice::boolean(2));
        let f = LatFunctor { src: &c3, tgt: &b4, map: vec![0, 1, 3] };
        let d = factorization_data(&f).unwrap();
        assert!(d.report.pass(), "{:?}", d.report.failures());
        let bad = LatFunctor { src: &c3, tgt: &b4, map: vec![0, 1, 2] };
        assert!(factorization_data(&bad).is_err());
    }

    #[test]
    fn dot_export() {
        let c = LatCat::new(FinDistLattice::chain(3));
        let t = type_category(&c).unwrap();
        let dot = t.to_dot();
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), t.n_mors() - t.n_objs());
    }
}
