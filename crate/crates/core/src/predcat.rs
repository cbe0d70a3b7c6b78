//! The predicate category A(P) of a hyperdoctrine, the counit A(S(C)) → C,
//! the canonical extension C^δ = A(S_C^δ) with E_C, p-models, and the
//! factorization G(M) of a p-model through E_C.

use crate::canext::FiberExt;
use crate::fincat::{check_coherent_functor, Category, CohCat, Functor, LatCat, Limits, SubCat};
use crate::hyperdoctrine::{canext_hyperdoctrine, DeltaHyp, Hyperdoctrine, Mor, Obj, SubHyp};
use crate::lattice::{subset, DownLat, Set};
use crate::report::Report;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PObj<O> {
    pub base: O,
    pub pred: Set,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PMor<O> {
    pub src: PObj<O>,
    pub tgt: PObj<O>,
    pub rel: Set,
}

pub const DEFAULT_MORPHISM_BUDGET: usize = 1 << 16;

/// A(P). Hom sets are enumerated on demand and cached; each enumeration
/// refuses past `budget` candidate relations.
pub struct PredCat<'a, P: Hyperdoctrine> {
    pub p: &'a P,
    pub budget: usize,
    homs: RefCell<HashMap<(PObj<Obj<P>>, PObj<Obj<P>>), Rc<Vec<PMor<Obj<P>>>>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Total,
    Bounded,
    SingleValued,
}

impl<'a, P: Hyperdoctrine> PredCat<'a, P> {
    pub fn new(p: &'a P) -> Self {
        PredCat { p, budget: DEFAULT_MORPHISM_BUDGET, homs: RefCell::new(HashMap::new()) }
    }

    pub fn with_budget(p: &'a P, budget: usize) -> Self {
        PredCat { p, budget, homs: RefCell::new(HashMap::new()) }
    }

    fn c(&self) -> &P::Base {
        self.p.base()
    }

    /// ∃_{⟨id, α⟩}(x) ∈ P(A × B): the graph of α restricted to x.
    pub fn graph(&self, alpha: &Mor<P>, x: Set) -> Set {
        let c = self.c();
        let a = c.dom(alpha);
        self.p.exists(&c.pair(&c.id(&a), alpha), x)
    }

    /// The three conditions on f ∈ P(A × B) for (A,a) → (B,b).
    pub fn functional(&self, s: &PObj<Obj<P>>, t: &PObj<Obj<P>>, f: Set) -> Result<(), Violation> {
        let c = self.c();
        let (a, b) = (&s.base, &t.base);
        let p1 = c.proj1(a, b);
        let p2 = c.proj2(a, b);
        if !subset(s.pred, self.p.exists(&p1, f)) {
            return Err(Violation::Total);
        }
        if !subset(f, self.p.subst(&p1, s.pred) & self.p.subst(&p2, t.pred)) {
            return Err(Violation::Bounded);
        }
        if !self.single_valued(a, b, f) {
            return Err(Violation::SingleValued);
        }
        Ok(())
    }

    /// ∃_π(⟨π1,π2⟩*(f) ∧ ⟨π1,π3⟩*(f)) ≤ ∃_{Δ_B}(⊤) over (A × B) × B.
    fn single_valued(&self, a: &Obj<P>, b: &Obj<P>, f: Set) -> bool {
        let c = self.c();
        let ab = c.product(a, b);
        let q1 = c.proj1(&ab, b);
        let q2 = c.proj2(&ab, b);
        let pi = c.pair(&c.comp(&c.proj2(a, b), &q1), &q2);
        let s13 = c.pair(&c.comp(&c.proj1(a, b), &q1), &q2);
        let lhs = self.p.exists(&pi, self.p.subst(&q1, f) & self.p.subst(&s13, f));
        let diag = c.diagonal(b);
        subset(lhs, self.p.exists(&diag, self.p.fiber(b).top()))
    }

    pub fn try_hom(&self, s: &PObj<Obj<P>>, t: &PObj<Obj<P>>) -> Result<Rc<Vec<PMor<Obj<P>>>>, String> {
        let key = (s.clone(), t.clone());
        if let Some(h) = self.homs.borrow().get(&key) {
            return Ok(h.clone());
        }
        let c = self.c();
        let (a, b) = (&s.base, &t.base);
        let ab = c.product(a, b);
        let bound = self.p.subst(&c.proj1(a, b), s.pred) & self.p.subst(&c.proj2(a, b), t.pred);
        let fib = self.p.fiber(&ab);
        let cands = fib.elements_between(0, bound, self.budget).ok_or_else(|| {
            format!("morphism budget {} exceeded enumerating {:?} → {:?}", self.budget, s, t)
        })?;
        let out: Vec<PMor<Obj<P>>> = cands
            .into_iter()
            .filter(|&f| self.functional(s, t, f).is_ok())
            .map(|rel| PMor { src: s.clone(), tgt: t.clone(), rel })
            .collect();
        let out = Rc::new(out);
        self.homs.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// The mono (A,u) → (A,a) for u ≤ a.
    pub fn inclusion(&self, a: &PObj<Obj<P>>, u: Set) -> PMor<Obj<P>> {
        let c = self.c();
        let rel = self.p.exists(&c.diagonal(&a.base), u);
        PMor { src: PObj { base: a.base.clone(), pred: u }, tgt: a.clone(), rel }
    }

    /// The morphism (A,x) → (B,y) given by a base map α with x ≤ α*(y).
    pub fn from_base(&self, alpha: &Mor<P>, x: Set, y: Set) -> PMor<Obj<P>> {
        let c = self.c();
        PMor {
            src: PObj { base: c.dom(alpha), pred: x },
            tgt: PObj { base: c.cod(alpha), pred: y },
            rel: self.graph(alpha, x),
        }
    }

    /// ∀ along a functional relation, from ∀ in P: b ∧ ∀_{π2}(f → π1*u).
    pub fn forall_fo(&self, f: &PMor<Obj<P>>, u: Set) -> Set
    where
        P: crate::hyperdoctrine::FoHyperdoctrine,
    {
        let c = self.c();
        let (a, b) = (&f.src.base, &f.tgt.base);
        let ab = c.product(a, b);
        let p1 = c.proj1(a, b);
        let p2 = c.proj2(a, b);
        let imp = self.p.implies(&ab, f.rel, self.p.subst(&p1, u));
        f.tgt.pred & self.p.forall(&p2, imp)
    }

    /// Category laws over the given objects.
    pub fn check_laws(&self, obs: &[PObj<Obj<P>>]) -> Report {
        let mut r = Report::new();
        r.push(
            "identity_is_morphism",
            obs.iter().try_for_each(|x| {
                let id = self.id(x);
                self.functional(x, x, id.rel).map_err(|v| format!("id {x:?}: {v:?}"))
            }),
        );
        r.push(
            "composite_is_morphism",
            (|| {
                for x in obs {
                    for y in obs {
                        for f in self.hom(x, y) {
                            for z in obs {
                                for g in self.hom(y, z) {
                                    let gf = self.comp(&g, &f);
                                    self.functional(x, z, gf.rel).map_err(|v| format!("{g:?}∘{f:?}: {v:?}"))?;
                                }
                            }
                        }
                    }
                }
                Ok(())
            })(),
        );
        r.push(
            "unit_laws",
            (|| {
                for x in obs {
                    for y in obs {
                        for f in self.hom(x, y) {
                            if self.comp(&self.id(y), &f) != f || self.comp(&f, &self.id(x)) != f {
                                return Err(format!("{f:?}"));
                            }
                        }
                    }
                }
                Ok(())
            })(),
        );
        r.push(
            "associativity",
            (|| {
                for x in obs {
                    for y in obs {
                        for f in self.hom(x, y) {
                            for z in obs {
                                for g in self.hom(y, z) {
                                    let gf = self.comp(&g, &f);
                                    for w in obs {
                                        for h in self.hom(z, w) {
                                            if self.comp(&h, &gf) != self.comp(&self.comp(&h, &g), &f) {
                                                return Err(format!("{h:?}, {g:?}, {f:?}"));
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                Ok(())
            })(),
        );
        r
    }
}

impl<P: Hyperdoctrine> Category for PredCat<'_, P> {
    type Obj = PObj<Obj<P>>;
    type Mor = PMor<Obj<P>>;

    fn objects(&self) -> Vec<Self::Obj> {
        let mut out = Vec::new();
        for a in self.c().objects() {
            for x in self.p.elements(&a) {
                out.push(PObj { base: a.clone(), pred: x });
            }
        }
        out
    }

    fn hom(&self, a: &Self::Obj, b: &Self::Obj) -> Vec<Self::Mor> {
        match self.try_hom(a, b) {
            Ok(h) => (*h).clone(),
            Err(e) => panic!("{e}"),
        }
    }

    fn dom(&self, f: &Self::Mor) -> Self::Obj {
        f.src.clone()
    }

    fn cod(&self, f: &Self::Mor) -> Self::Obj {
        f.tgt.clone()
    }

    fn id(&self, a: &Self::Obj) -> Self::Mor {
        self.inclusion(a, a.pred)
    }

    /// ∃_{π13}(π12*(f) ∧ π23*(g)) over (A × B) × C.
    fn comp(&self, g: &Self::Mor, f: &Self::Mor) -> Self::Mor {
        assert_eq!(f.tgt, g.src, "composing non-composable relations");
        let c = self.c();
        let (a, b, cc) = (&f.src.base, &f.tgt.base, &g.tgt.base);
        let ab = c.product(a, b);
        let q1 = c.proj1(&ab, cc);
        let q2 = c.proj2(&ab, cc);
        let p23 = c.pair(&c.comp(&c.proj2(a, b), &q1), &q2);
        let p13 = c.pair(&c.comp(&c.proj1(a, b), &q1), &q2);
        let rel = self.p.exists(&p13, self.p.subst(&q1, f.rel) & self.p.subst(&p23, g.rel));
        PMor { src: f.src.clone(), tgt: g.tgt.clone(), rel }
    }
}

impl<P: Hyperdoctrine> Limits for PredCat<'_, P> {
    fn terminal(&self) -> Self::Obj {
        let one = self.c().terminal();
        let top = self.p.fiber(&one).top();
        PObj { base: one, pred: top }
    }

    fn bang(&self, a: &Self::Obj) -> Self::Mor {
        let c = self.c();
        let t = self.terminal();
        self.from_base(&c.bang(&a.base), a.pred, t.pred)
    }

    fn product(&self, a: &Self::Obj, b: &Self::Obj) -> Self::Obj {
        let c = self.c();
        let pred = self.p.subst(&c.proj1(&a.base, &b.base), a.pred) & self.p.subst(&c.proj2(&a.base, &b.base), b.pred);
        PObj { base: c.product(&a.base, &b.base), pred }
    }

    fn proj1(&self, a: &Self::Obj, b: &Self::Obj) -> Self::Mor {
        let ab = self.product(a, b);
        self.from_base(&self.c().proj1(&a.base, &b.base), ab.pred, a.pred)
    }

    fn proj2(&self, a: &Self::Obj, b: &Self::Obj) -> Self::Mor {
        let ab = self.product(a, b);
        self.from_base(&self.c().proj2(&a.base, &b.base), ab.pred, b.pred)
    }

    /// {(x, (a, b)) | f(x, a) ∧ g(x, b)} in P(X × (A × B)).
    fn pair(&self, f: &Self::Mor, g: &Self::Mor) -> Self::Mor {
        assert_eq!(f.src, g.src);
        let c = self.c();
        let (x, a, b) = (&f.src.base, &f.tgt.base, &g.tgt.base);
        let ab = c.product(a, b);
        let r1 = c.proj1(x, &ab);
        let r2 = c.proj2(x, &ab);
        let to_xa = c.pair(&r1, &c.comp(&c.proj1(a, b), &r2));
        let to_xb = c.pair(&r1, &c.comp(&c.proj2(a, b), &r2));
        let rel = self.p.subst(&to_xa, f.rel) & self.p.subst(&to_xb, g.rel);
        PMor { src: f.src.clone(), tgt: self.product(&f.tgt, &g.tgt), rel }
    }

    /// The subobject of (A, a) where f and g agree, ∃_{π1}(f ∧ g).
    fn equalizer(&self, f: &Self::Mor, g: &Self::Mor) -> Self::Mor {
        let c = self.c();
        let e = self.p.exists(&c.proj1(&f.src.base, &f.tgt.base), f.rel & g.rel);
        self.inclusion(&f.src, e)
    }
}

impl<P: Hyperdoctrine> SubCat for PredCat<'_, P> {
    fn sub(&self, a: &Self::Obj) -> DownLat {
        self.p.fiber(&a.base).restrict(a.pred)
    }

    /// ∃_{π1}(f ∧ π2*(w))
    fn pullback_sub(&self, f: &Self::Mor, w: Set) -> Set {
        let c = self.c();
        let (a, b) = (&f.src.base, &f.tgt.base);
        self.p.exists(&c.proj1(a, b), f.rel & self.p.subst(&c.proj2(a, b), w))
    }

    /// ∃_{π2}(f ∧ π1*(u))
    fn image(&self, f: &Self::Mor, u: Set) -> Set {
        let c = self.c();
        let (a, b) = (&f.src.base, &f.tgt.base);
        self.p.exists(&c.proj2(a, b), f.rel & self.p.subst(&c.proj1(a, b), u))
    }
}

impl<P: Hyperdoctrine> CohCat for PredCat<'_, P> {
    fn sub_object(&self, a: &Self::Obj, u: Set) -> Self::Mor {
        self.inclusion(a, u)
    }

    fn forall(&self, _f: &Self::Mor, _u: Set) -> Option<Set> {
        None
    }

    fn is_mono(&self, f: &Self::Mor) -> bool {
        let (p1, p2) = self.pullback(f, f);
        p1 == p2
    }

    fn factor_through(&self, g: &Self::Mor, m: &Self::Mor) -> Option<Self::Mor> {
        if m.src.base == m.tgt.base && m.rel == self.inclusion(&m.tgt, m.src.pred).rel && g.tgt == m.tgt {
            let h = PMor { src: g.src.clone(), tgt: m.src.clone(), rel: g.rel };
            if self.functional(&h.src, &h.tgt, h.rel).is_ok() && self.comp(m, &h) == *g {
                return Some(h);
            }
            return None;
        }
        self.hom(&g.src, &m.src).into_iter().find(|h| self.comp(m, h) == *g)
    }

    /// The converse relation, if it is functional and inverse.
    fn inverse(&self, f: &Self::Mor) -> Option<Self::Mor> {
        let c = self.c();
        let (a, b) = (&f.src.base, &f.tgt.base);
        let swap = c.pair(&c.proj2(b, a), &c.proj1(b, a));
        let rel = self.p.subst(&swap, f.rel);
        if self.functional(&f.tgt, &f.src, rel).is_err() {
            return None;
        }
        let g = PMor { src: f.tgt.clone(), tgt: f.src.clone(), rel };
        if self.comp(&g, f) == self.id(&f.src) && self.comp(f, &g) == self.id(&f.tgt) {
            Some(g)
        } else {
            None
        }
    }
}

/// The counit ε_C: A(S(C)) → C, (A, U) ↦ dom(m_U).
pub struct Counit<'a, 'b, C: CohCat> {
    pub c: &'a C,
    pub pc: &'b PredCat<'a, SubHyp<'a, C>>,
}

impl<C: CohCat> Counit<'_, '_, C> {
    /// The base map dom(m_U) → dom(m_V) whose graph is f.
    pub fn on_relation(&self, f: &PMor<C::Obj>) -> C::Mor {
        relation_to_map(self.c, &f.src, &f.tgt, f.rel)
    }
}

/// For a functional relation f ⊆ A × B from U to V in Sub(C), the map
/// dom(m_U) → dom(m_V) it is the graph of.
pub fn relation_to_map<C: CohCat>(c: &C, s: &PObj<C::Obj>, t: &PObj<C::Obj>, rel: Set) -> C::Mor {
    let (a, b) = (&s.base, &t.base);
    let ab = c.product(a, b);
    let mf = c.sub_object(&ab, rel);
    let j = c.factor_through(&c.comp(&c.proj1(a, b), &mf), &c.sub_object(a, s.pred)).expect("relation lies over U");
    let k = c.factor_through(&c.comp(&c.proj2(a, b), &mf), &c.sub_object(b, t.pred)).expect("relation lies over V");
    let ji = c.inverse(&j).expect("functional relation projects isomorphically onto U");
    c.comp(&k, &ji)
}

impl<'a, 'b, C: CohCat> Functor for Counit<'a, 'b, C> {
    type Src = PredCat<'a, SubHyp<'a, C>>;
    type Tgt = C;

    fn src(&self) -> &Self::Src {
        self.pc
    }

    fn tgt(&self) -> &C {
        self.c
    }

    fn obj(&self, a: &PObj<C::Obj>) -> C::Obj {
        self.c.dom(&self.c.sub_object(&a.base, a.pred))
    }

    fn mor(&self, f: &PMor<C::Obj>) -> C::Mor {
        self.on_relation(f)
    }
}

/// ε_C is full, faithful and essentially surjective, and a functor. The
/// isomorphisms A ≅ ε(A, ⊤) are listed in the notes.
pub fn counit_equivalence_check<C: CohCat>(c: &C) -> Report {
    let s = SubHyp(c);
    let pc = PredCat::new(&s);
    let eps = Counit { c, pc: &pc };
    let obs = pc.objects();
    let mut r = Report::new();
    r.merge("laws", pc.check_laws(&obs));
    r.push(
        "functor",
        (|| {
            for x in &obs {
                if eps.mor(&pc.id(x)) != c.id(&eps.obj(x)) {
                    return Err(format!("ε(id {x:?})"));
                }
                for y in &obs {
                    for f in pc.hom(x, y) {
                        for z in &obs {
                            for g in pc.hom(y, z) {
                                if eps.mor(&pc.comp(&g, &f)) != c.comp(&eps.mor(&g), &eps.mor(&f)) {
                                    return Err(format!("ε({g:?}∘{f:?})"));
                                }
                            }
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "full_faithful",
        (|| {
            for x in &obs {
                for y in &obs {
                    let mut images: Vec<C::Mor> = pc.hom(x, y).iter().map(|f| eps.mor(f)).collect();
                    let n = images.len();
                    images.sort();
                    images.dedup();
                    if images.len() != n {
                        return Err(format!("not faithful on {x:?} → {y:?}"));
                    }
                    let target = c.hom(&eps.obj(x), &eps.obj(y));
                    if target.len() != n {
                        return Err(format!("not full on {x:?} → {y:?}: {} of {} maps", n, target.len()));
                    }
                }
            }
            Ok(())
        })(),
    );
    let mut comps = Vec::new();
    r.push(
        "essentially_surjective",
        (|| {
            for a in c.objects() {
                let top = c.sub(&a).top();
                let m = c.sub_object(&a, top);
                if c.inverse(&m).is_none() {
                    return Err(format!("{a:?} is not isomorphic to ε({a:?}, ⊤)"));
                }
                comps.push(format!("{a:?}: {m:?}"));
            }
            Ok(())
        })(),
    );
    for s in comps {
        r.note(format!("iso ε(A,⊤) → A at {s}"));
    }
    r
}

pub type SubDelta<'a, C> = DeltaHyp<'a, SubHyp<'a, C>>;

/// E_C: C → C^δ, A ↦ (A, ⊤), α ↦ η(⟨id, α⟩).
pub struct EmbedFunctor<'a, 'b, C: CohCat> {
    pub c: &'a C,
    pub sd: &'b SubDelta<'a, C>,
    pub cd: &'b PredCat<'b, SubDelta<'a, C>>,
}

impl<'a, 'b, C: CohCat> Functor for EmbedFunctor<'a, 'b, C> {
    type Src = C;
    type Tgt = PredCat<'b, SubDelta<'a, C>>;

    fn src(&self) -> &C {
        self.c
    }

    fn tgt(&self) -> &Self::Tgt {
        self.cd
    }

    fn obj(&self, a: &C::Obj) -> PObj<C::Obj> {
        PObj { base: a.clone(), pred: self.sd.fiber(a).top() }
    }

    fn mor(&self, f: &C::Mor) -> PMor<C::Obj> {
        let (a, b) = (self.c.dom(f), self.c.cod(f));
        let ab = self.c.product(&a, &b);
        let g = self.c.image_of(&self.c.pair(&self.c.id(&a), f));
        PMor { src: self.obj(&a), tgt: self.obj(&b), rel: self.sd.embed(&ab, g) }
    }

    fn sub(&self, a: &C::Obj, u: Set) -> Set {
        self.sd.embed(a, u)
    }
}

/// Every subobject lattice is finite distributive (hence complete and
/// completely distributive) and pullback maps preserve all joins.
pub fn check_coh_plus<C: CohCat>(c: &C) -> Result<(), String> {
    let obs = c.objects();
    for a in &obs {
        for b in &obs {
            for f in c.hom(a, b) {
                if c.pullback_sub(&f, 0) != 0 {
                    return Err(format!("{f:?}* keeps no bottom"));
                }
                let es = c.sub(b).elements_capped(1 << 12).ok_or("subobject lattice too large")?;
                for &u in &es {
                    for &v in &es {
                        if c.pullback_sub(&f, u | v) != c.pullback_sub(&f, u) | c.pullback_sub(&f, v) {
                            return Err(format!("{f:?}* at {u:#b} ∨ {v:#b}"));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// M is coherent and, for all α: A → B and prime filters ρ of Sub(A),
/// ∃_{Mα}(⋀ M[ρ]) = ⋀ ∃_{Mα}(M[ρ]).
pub fn pmodel_check<F: Functor>(m: &F) -> Result<(), String> {
    let coh = check_coherent_functor(m);
    if !coh.pass() {
        let w = coh.failures().iter().map(|c| format!("{}: {}", c.name, c.witness.clone().unwrap_or_default())).collect::<Vec<_>>();
        return Err(format!("not coherent: {}", w.join("; ")));
    }
    let (s, t) = (m.src(), m.tgt());
    for a in s.objects() {
        let sa = s.sub(&a);
        let ma = m.obj(&a);
        let tma = t.sub(&ma);
        let gens = sa.join_irreducibles();
        for b in s.objects() {
            for alpha in s.hom(&a, &b) {
                let malpha = m.mor(&alpha);
                let mb = m.obj(&b);
                let range = t.image(&malpha, tma.top());
                let _ = mb;
                for &g in &gens {
                    let rho = sa.elements_between(g, sa.top(), 1 << 14).ok_or("prime filter too large")?;
                    let meet = rho.iter().fold(tma.top(), |acc, &u| acc & m.sub(&a, u));
                    let lhs = t.image(&malpha, meet);
                    let rhs = rho.iter().fold(range, |acc, &u| acc & t.image(&malpha, m.sub(&a, u)));
                    if lhs != rhs {
                        return Err(format!("α={alpha:?}, prime filter ↑{g:#b}: {lhs:#b} vs {rhs:#b}"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// G(M) = ε_D ∘ A(M, τ̄): C^δ → D for a p-model M: C → D.
pub struct Factorization<'a, 'b, F: Functor> {
    pub m: &'b F,
    pub sd: &'b SubDelta<'a, F::Src>,
    pub cd: &'b PredCat<'b, SubDelta<'a, F::Src>>,
}

impl<'a, 'b, F: Functor> Factorization<'a, 'b, F> {
    /// τ̄_A(u) = ⋁_{i ∈ u} M_A(gen_i).
    pub fn tau_bar(&self, a: &<F::Src as Category>::Obj, u: Set) -> Set {
        let e: Rc<FiberExt> = self.sd.ext(a);
        crate::lattice::members(u).fold(0, |acc, i| acc | self.m.sub(a, e.gens[i]))
    }

    /// The comparison M(A × B) → MA × MB.
    fn comparison(&self, a: &<F::Src as Category>::Obj, b: &<F::Src as Category>::Obj) -> <F::Tgt as Category>::Mor {
        let (s, t) = (self.m.src(), self.m.tgt());
        t.pair(&self.m.mor(&s.proj1(a, b)), &self.m.mor(&s.proj2(a, b)))
    }
}

impl<'a, 'b, F: Functor> Functor for Factorization<'a, 'b, F> {
    type Src = PredCat<'b, SubDelta<'a, F::Src>>;
    type Tgt = F::Tgt;

    fn src(&self) -> &Self::Src {
        self.cd
    }

    fn tgt(&self) -> &F::Tgt {
        self.m.tgt()
    }

    fn obj(&self, x: &PObj<<F::Src as Category>::Obj>) -> <F::Tgt as Category>::Obj {
        let t = self.m.tgt();
        t.dom(&t.sub_object(&self.m.obj(&x.base), self.tau_bar(&x.base, x.pred)))
    }

    fn mor(&self, f: &PMor<<F::Src as Category>::Obj>) -> <F::Tgt as Category>::Mor {
        let t = self.m.tgt();
        let s = self.m.src();
        let (a, b) = (&f.src.base, &f.tgt.base);
        let ab = s.product(a, b);
        let rel = t.image(&self.comparison(a, b), self.tau_bar(&ab, f.rel));
        let src = PObj { base: self.m.obj(a), pred: self.tau_bar(a, f.src.pred) };
        let tgt = PObj { base: self.m.obj(b), pred: self.tau_bar(b, f.tgt.pred) };
        relation_to_map(t, &src, &tgt, rel)
    }
}

#[derive(Debug, Clone)]
pub struct FactorizationReport {
    pub report: Report,
    /// Components G(E_C(A)) → M(A), one per declared object, as debug strings.
    pub components: Vec<String>,
}

/// Builds G(M) and checks G ∘ E_C ≅ M by explicit components m_⊤ that are
/// natural in A.
pub fn universal_factorization<F: Functor>(m: &F) -> Result<FactorizationReport, String> {
    pmodel_check(m).map_err(|e| format!("not a p-model: {e}"))?;
    let c = m.src();
    let t = m.tgt();
    let s = SubHyp(c);
    let sd = canext_hyperdoctrine(&s);
    let cd = PredCat::new(&sd);
    let g = Factorization { m, sd: &sd, cd: &cd };
    let e = EmbedFunctor { c, sd: &sd, cd: &cd };
    let mut r = Report::new();
    let mut comps = Vec::new();
    let mut isos = Vec::new();
    r.push(
        "components_iso",
        (|| {
            for a in c.objects() {
                let ge = g.obj(&e.obj(&a));
                let ma = m.obj(&a);
                let mono = t.sub_object(&ma, g.tau_bar(&a, sd.fiber(&a).top()));
                if t.dom(&mono) != ge || t.inverse(&mono).is_none() {
                    return Err(format!("G(E({a:?})) is not isomorphic to M({a:?})"));
                }
                comps.push(format!("{a:?}: {mono:?}"));
                isos.push((a, mono));
            }
            Ok(())
        })(),
    );
    r.push(
        "naturality",
        (|| {
            for (a, ia) in &isos {
                for (b, ib) in &isos {
                    for alpha in c.hom(a, b) {
                        let lhs = t.comp(&m.mor(&alpha), ia);
                        let rhs = t.comp(ib, &g.mor(&e.mor(&alpha)));
                        if lhs != rhs {
                            return Err(format!("square at {alpha:?}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "extends_restriction",
        (|| {
            for a in c.objects() {
                for u in c.sub(&a).elements() {
                    if g.tau_bar(&a, sd.embed(&a, u)) != m.sub(&a, u) {
                        return Err(format!("τ̄_{a:?} ∘ η ≠ M at {u:#b}"));
                    }
                }
            }
            Ok(())
        })(),
    );
    Ok(FactorizationReport { report: r, components: comps })
}

/// A(S_L^δ) ≃ L^δ: every (a, u) ↦ its element of L^δ, with exactly one
/// morphism (a,u) → (b,v), carried by u, iff u ≤ v.
pub fn lattice_extension_equivalence(l: &crate::lattice::FinDistLattice) -> Report {
    let c = LatCat::new(l.clone());
    let s = SubHyp(&c);
    let sd = canext_hyperdoctrine(&s);
    let pc = PredCat::new(&sd);
    let top = l.top();
    let global = sd.ext(&top);
    // element of L^δ represented by (a, u)
    let phi = |x: &PObj<usize>| global.embed(sd.lower(&x.base, x.pred));
    let obs = pc.objects();
    let mut r = Report::new();
    r.push(
        "hom_is_order",
        (|| {
            for x in &obs {
                for y in &obs {
                    let h = pc.hom(x, y);
                    let le = subset(phi(x), phi(y));
                    match (le, h.len()) {
                        (true, 1) => {
                            let ab = pc.product(x, y).base;
                            if sd.lower(&ab, h[0].rel) != sd.lower(&x.base, x.pred) {
                                return Err(format!("{x:?} → {y:?} not carried by u"));
                            }
                        }
                        (false, 0) => {}
                        _ => return Err(format!("{x:?} → {y:?}: {} morphisms, order says {le}", h.len())),
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "essentially_surjective",
        (|| {
            // every element of L^δ is some (1, u), and each (a, u) ≅ (1, u)
            let ext = &global.ext;
            for w in ext.elements() {
                if !obs.iter().any(|x| x.base == top && phi(x) == w) {
                    return Err(format!("{w:#b} not hit"));
                }
            }
            for x in &obs {
                let one = obs.iter().find(|y| y.base == top && phi(y) == phi(x)).unwrap();
                let f = pc.hom(x, one);
                let g = pc.hom(one, x);
                if f.len() != 1 || g.len() != 1 || pc.inverse(&f[0]).is_none() {
                    return Err(format!("{x:?} ≇ {one:?}"));
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "ext_matches",
        if global.ext.to_table().0.iso(&crate::canext::canonical_extension(l).ext).is_some() {
            Ok(())
        } else {
            Err("S_L^δ(1) differs from L^δ".into())
        },
    );
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{check_coherent_category, FinSetCat, IdFunctor};
    use crate::hyperdoctrine::TableHyp;
    use crate::lattice::FinDistLattice;

    #[test]
    fn one_point_base_gives_preorder() {
        let p = TableHyp::single(FinDistLattice::chain(2));
        let pc = PredCat::new(&p);
        let obs = pc.objects();
        assert_eq!(obs.len(), 2);
        assert!(pc.check_laws(&obs).pass());
        let (lo, hi) = (&obs[0], &obs[1]);
        assert_eq!(pc.hom(lo, hi).len(), 1);
        assert_eq!(pc.hom(hi, lo).len(), 0);
        assert_eq!(pc.hom(lo, lo).len(), 1);
    }

    #[test]
    fn three_chain_lattice_morphisms() {
        let c = LatCat::new(FinDistLattice::chain(3));
        let s = SubHyp(&c);
        let pc = PredCat::new(&s);
        let obs = pc.objects();
        assert!(pc.check_laws(&obs).pass());
        for x in &obs {
            for y in &obs {
                let h = pc.hom(x, y);
                if subset(x.pred, y.pred) {
                    assert_eq!(h.len(), 1);
                    assert_eq!(h[0].rel, x.pred);
                } else {
                    assert!(h.is_empty());
                }
            }
        }
    }

    #[test]
    fn counit_is_equivalence() {
        for decl in [vec![1], vec![0, 1, 2]] {
            let c = FinSetCat::new(decl);
            let r = counit_equivalence_check(&c);
            assert!(r.pass(), "{:?}", r.failures());
        }
    }

    #[test]
    fn predcat_is_coherent() {
        let c = FinSetCat::new(vec![0, 1, 2]);
        let s = SubHyp(&c);
        let pc = PredCat::new(&s);
        let r = check_coherent_category(&pc, false);
        assert!(r.passed("adjunction") && r.passed("frobenius") && r.passed("beck_chevalley"), "{:?}", r.failures());
    }

    #[test]
    fn subobjects_are_downsets_of_predicate() {
        let c = FinSetCat::new(vec![2]);
        let s = SubHyp(&c);
        let pc = PredCat::new(&s);
        for x in pc.objects() {
            for u in pc.sub(&x).elements() {
                let m = pc.sub_object(&x, u);
                assert!(pc.is_mono(&m));
                assert_eq!(pc.image_of(&m), u);
            }
            // every mono into x from a declared object has image below x.pred
            for y in pc.objects() {
                for f in pc.hom(&y, &x) {
                    if pc.is_mono(&f) {
                        let im = pc.image_of(&f);
                        assert!(subset(im, x.pred));
                        let inc = pc.sub_object(&x, im);
                        let h = pc.factor_through(&f, &inc).unwrap();
                        assert!(pc.inverse(&h).is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn pullback_formula_matches_composition() {
        let c = FinSetCat::new(vec![1, 2]);
        let s = SubHyp(&c);
        let pc = PredCat::new(&s);
        let obs = pc.objects();
        for x in &obs {
            for y in &obs {
                for f in pc.hom(x, y) {
                    for w in pc.sub(y).elements() {
                        let m = pc.sub_object(y, w);
                        let (l1, _) = pc.pullback(&f, &m);
                        assert_eq!(pc.image_of(&l1), pc.pullback_sub(&f, w));
                    }
                }
            }
        }
    }

    #[test]
    fn embedding_is_pmodel_and_factors() {
        let c = FinSetCat::new(vec![1, 2]);
        let s = SubHyp(&c);
        let sd = canext_hyperdoctrine(&s);
        let cd = PredCat::new(&sd);
        let e = EmbedFunctor { c: &c, sd: &sd, cd: &cd };
        assert_eq!(pmodel_check(&e), Ok(()));
        assert!(check_coh_plus(&cd).is_ok());
        let f = universal_factorization(&e).unwrap();
        assert!(f.report.pass(), "{:?}", f.report.failures());
        let id = IdFunctor(&c);
        let f = universal_factorization(&id).unwrap();
        assert!(f.report.pass(), "{:?}", f.report.failures());
        assert_eq!(f.components.len(), 2);
    }

    #[test]
    fn embedded_substitution_is_extension() {
        let c = FinSetCat::new(vec![1, 2]);
        let s = SubHyp(&c);
        let sd = canext_hyperdoctrine(&s);
        let cd = PredCat::new(&sd);
        let e = EmbedFunctor { c: &c, sd: &sd, cd: &cd };
        for a in c.objects() {
            for b in c.objects() {
                for alpha in c.hom(&a, &b) {
                    let ea = e.mor(&alpha);
                    for v in sd.elements(&b) {
                        assert_eq!(cd.pullback_sub(&ea, v), sd.subst(&alpha, v));
                    }
                    for u in sd.elements(&a) {
                        assert_eq!(cd.image(&ea, u), sd.exists(&alpha, u));
                    }
                }
            }
        }
    }

    #[test]
    fn lattice_case() {
        for l in [FinDistLattice::chain(2), FinDistLattice::chain(3), FinDistLattice::diamond()] {
            let r = lattice_extension_equivalence(&l);
            assert!(r.pass(), "{:?}", r.failures());
        }
    }
}
