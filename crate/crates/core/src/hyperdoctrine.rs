//! Coherent and first-order hyperdoctrines over finite bases, their
//! validators and morphisms, and the fiberwise canonical extension P ↦ P^δ.

use crate::canext::FiberExt;
use crate::fincat::{Category, CohCat, Limits, ThinCat};
use crate::lattice::{subset, DownLat, FinDistLattice, LatticeError, LatticeFile, Set};
use crate::report::Report;
use serde::Deserialize;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

pub type Obj<P> = <<P as Hyperdoctrine>::Base as Category>::Obj;
pub type Mor<P> = <<P as Hyperdoctrine>::Base as Category>::Mor;

pub const ELEMENT_CAP: usize = 1 << 14;

pub trait Hyperdoctrine {
    type Base: Limits;

    fn base(&self) -> &Self::Base;
    fn fiber(&self, a: &Obj<Self>) -> DownLat;
    /// P(f): P(B) → P(A) for f: A → B.
    fn subst(&self, f: &Mor<Self>, x: Set) -> Set;
    /// ∃_f: P(A) → P(B).
    fn exists(&self, f: &Mor<Self>, x: Set) -> Set;

    fn elements(&self, a: &Obj<Self>) -> Vec<Set> {
        self.fiber(a).elements_capped(ELEMENT_CAP).expect("fiber too large to enumerate")
    }
}

pub trait FoHyperdoctrine: Hyperdoctrine {
    fn implies(&self, a: &Obj<Self>, x: Set, y: Set) -> Set {
        self.fiber(a).implies(x, y)
    }
    /// ∀_f: P(A) → P(B).
    fn forall(&self, f: &Mor<Self>, x: Set) -> Set;
}

fn declared_maps<C: Category>(c: &C) -> Vec<(C::Obj, C::Obj, C::Mor)> {
    let obs = c.objects();
    let mut out = Vec::new();
    for a in &obs {
        for b in &obs {
            for f in c.hom(a, b) {
                out.push((a.clone(), b.clone(), f));
            }
        }
    }
    out
}

/// Every law of a coherent hyperdoctrine over the declared objects of the
/// base and the chosen pullback squares among them.
pub fn validate<P: Hyperdoctrine>(p: &P) -> Report {
    let c = p.base();
    let maps = declared_maps(c);
    let mut r = Report::new();
    r.push(
        "subst_hom",
        (|| {
            for (a, b, f) in &maps {
                let (fa, fb) = (p.fiber(a), p.fiber(b));
                if p.subst(f, fb.top()) != fa.top() || p.subst(f, 0) != 0 {
                    return Err(format!("P({f:?}) misses a bound"));
                }
                let eb = p.elements(b);
                for &x in &eb {
                    if !fa.is_elem(p.subst(f, x)) {
                        return Err(format!("P({f:?})({x:#b}) is not in P({a:?})"));
                    }
                    for &y in &eb {
                        if p.subst(f, x & y) != p.subst(f, x) & p.subst(f, y)
                            || p.subst(f, x | y) != p.subst(f, x) | p.subst(f, y)
                        {
                            return Err(format!("P({f:?}) at {x:#b}, {y:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "subst_functorial",
        (|| {
            for a in c.objects() {
                let id = c.id(&a);
                for x in p.elements(&a) {
                    if p.subst(&id, x) != x {
                        return Err(format!("P(id {a:?}) moves {x:#b}"));
                    }
                }
            }
            for (_a, b, f) in &maps {
                for (b2, cc, g) in &maps {
                    if b2 != b {
                        continue;
                    }
                    let gf = c.comp(g, f);
                    for x in p.elements(cc) {
                        if p.subst(&gf, x) != p.subst(f, p.subst(g, x)) {
                            return Err(format!("P({g:?}∘{f:?}) at {x:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "exists_functorial",
        (|| {
            for a in c.objects() {
                let id = c.id(&a);
                for x in p.elements(&a) {
                    if p.exists(&id, x) != x {
                        return Err(format!("∃ along id {a:?} moves {x:#b}"));
                    }
                }
            }
            for (a, b, f) in &maps {
                for (b2, _cc, g) in &maps {
                    if b2 != b {
                        continue;
                    }
                    let gf = c.comp(g, f);
                    for x in p.elements(a) {
                        if p.exists(&gf, x) != p.exists(g, p.exists(f, x)) {
                            return Err(format!("∃ along {g:?}∘{f:?} at {x:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "adjunction",
        (|| {
            for (a, b, f) in &maps {
                let eb = p.elements(b);
                for x in p.elements(a) {
                    for &y in &eb {
                        if subset(p.exists(f, x), y) != subset(x, p.subst(f, y)) {
                            return Err(format!("∃ ⊣ P along {f:?} at x={x:#b}, y={y:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push("frobenius", check_frobenius(p, &maps));
    r.push(
        "beck_chevalley",
        (|| {
            for (a, cc, f) in &maps {
                for (b, cc2, g) in &maps {
                    if cc != cc2 {
                        continue;
                    }
                    let (p1, p2) = c.pullback(f, g);
                    for x in p.elements(a) {
                        let lhs = p.subst(g, p.exists(f, x));
                        let rhs = p.exists(&p2, p.subst(&p1, x));
                        if lhs != rhs {
                            return Err(format!("BC for f={f:?}, g={g:?} (into {b:?}) at {x:#b}: {lhs:#b} vs {rhs:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r
}

fn check_frobenius<P: Hyperdoctrine>(p: &P, maps: &[(Obj<P>, Obj<P>, Mor<P>)]) -> Result<(), String> {
    for (a, b, f) in maps {
        let eb = p.elements(b);
        for x in p.elements(a) {
            for &y in &eb {
                if p.exists(f, x & p.subst(f, y)) != p.exists(f, x) & y {
                    return Err(format!("Frobenius along {f:?} at x={x:#b}, y={y:#b}"));
                }
            }
        }
    }
    Ok(())
}

/// Heyting fibers, P(f) ⊣ ∀_f, substitution preserving →, and Frobenius
/// checked on its own.
pub fn validate_fo<P: FoHyperdoctrine>(p: &P) -> Report {
    let mut r = validate(p);
    let c = p.base();
    let maps = declared_maps(c);
    r.push(
        "heyting",
        (|| {
            for a in c.objects() {
                let es = p.elements(&a);
                for &x in &es {
                    for &y in &es {
                        let h = p.implies(&a, x, y);
                        for &z in &es {
                            if subset(x & z, y) != subset(z, h) {
                                return Err(format!("{x:#b} → {y:#b} in P({a:?}) at {z:#b}"));
                            }
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "forall_adjunction",
        (|| {
            for (a, b, f) in &maps {
                let eb = p.elements(b);
                for x in p.elements(a) {
                    let w = p.forall(f, x);
                    for &y in &eb {
                        if subset(p.subst(f, y), x) != subset(y, w) {
                            return Err(format!("P ⊣ ∀ along {f:?} at x={x:#b}, y={y:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "subst_implication",
        (|| {
            for (a, b, f) in &maps {
                let eb = p.elements(b);
                for &x in &eb {
                    for &y in &eb {
                        if p.subst(f, p.implies(b, x, y)) != p.implies(a, p.subst(f, x), p.subst(f, y)) {
                            return Err(format!("P({f:?}) and → at {x:#b}, {y:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push("frobenius_independent", check_frobenius(p, &maps));
    r
}

/// Sub_C for a coherent category C: pullback and image. Over finite sets
/// this is the powerset hyperdoctrine.
pub struct SubHyp<'a, C>(pub &'a C);

impl<C: CohCat> Hyperdoctrine for SubHyp<'_, C> {
    type Base = C;

    fn base(&self) -> &C {
        self.0
    }

    fn fiber(&self, a: &C::Obj) -> DownLat {
        self.0.sub(a)
    }

    fn subst(&self, f: &C::Mor, x: Set) -> Set {
        self.0.pullback_sub(f, x)
    }

    fn exists(&self, f: &C::Mor, x: Set) -> Set {
        self.0.image(f, x)
    }
}

impl<C: CohCat> FoHyperdoctrine for SubHyp<'_, C> {
    fn forall(&self, f: &C::Mor, x: Set) -> Set {
        self.0.forall(f, x).expect("base is not Heyting")
    }
}

pub fn powerset_hyperdoctrine(c: &crate::fincat::FinSetCat) -> SubHyp<'_, crate::fincat::FinSetCat> {
    SubHyp(c)
}

/// P^δ: fibers replaced by their canonical extensions, substitution and ∃
/// by their δ-extensions. Fiber extensions are cached per object.
pub struct DeltaHyp<'a, P: Hyperdoctrine> {
    pub inner: &'a P,
    cache: RefCell<HashMap<Obj<P>, Rc<FiberExt>>>,
}

impl<'a, P: Hyperdoctrine> DeltaHyp<'a, P> {
    pub fn new(inner: &'a P) -> Self {
        DeltaHyp { inner, cache: RefCell::new(HashMap::new()) }
    }

    pub fn ext(&self, a: &Obj<P>) -> Rc<FiberExt> {
        if let Some(e) = self.cache.borrow().get(a) {
            return e.clone();
        }
        let e = Rc::new(FiberExt::new(&self.inner.fiber(a)));
        self.cache.borrow_mut().insert(a.clone(), e.clone());
        e
    }

    /// η_A: P(A) → P^δ(A).
    pub fn embed(&self, a: &Obj<P>, x: Set) -> Set {
        self.ext(a).embed(x)
    }

    pub fn lower(&self, a: &Obj<P>, u: Set) -> Set {
        self.ext(a).lower(u)
    }
}

pub fn canext_hyperdoctrine<P: Hyperdoctrine>(p: &P) -> DeltaHyp<'_, P> {
    DeltaHyp::new(p)
}

impl<P: Hyperdoctrine> Hyperdoctrine for DeltaHyp<'_, P> {
    type Base = P::Base;

    fn base(&self) -> &P::Base {
        self.inner.base()
    }

    fn fiber(&self, a: &Obj<P>) -> DownLat {
        self.ext(a).ext.clone()
    }

    fn subst(&self, f: &Mor<P>, u: Set) -> Set {
        let c = self.inner.base();
        let (ea, eb) = (self.ext(&c.dom(f)), self.ext(&c.cod(f)));
        eb.extend(&ea, |x| self.inner.subst(f, x), u)
    }

    fn exists(&self, f: &Mor<P>, u: Set) -> Set {
        let c = self.inner.base();
        let (ea, eb) = (self.ext(&c.dom(f)), self.ext(&c.cod(f)));
        ea.extend(&eb, |x| self.inner.exists(f, x), u)
    }
}

impl<P: FoHyperdoctrine> FoHyperdoctrine for DeltaHyp<'_, P> {
    fn forall(&self, f: &Mor<P>, u: Set) -> Set {
        let c = self.inner.base();
        let (ea, eb) = (self.ext(&c.dom(f)), self.ext(&c.cod(f)));
        ea.extend(&eb, |x| self.inner.forall(f, x), u)
    }
}

/// P with one ∃ value replaced, for exercising the validators.
pub struct Mutated<'a, P: Hyperdoctrine> {
    pub inner: &'a P,
    pub at: Mor<P>,
    pub arg: Set,
    pub value: Set,
}

impl<P: Hyperdoctrine> Hyperdoctrine for Mutated<'_, P> {
    type Base = P::Base;

    fn base(&self) -> &P::Base {
        self.inner.base()
    }

    fn fiber(&self, a: &Obj<P>) -> DownLat {
        self.inner.fiber(a)
    }

    fn subst(&self, f: &Mor<P>, x: Set) -> Set {
        self.inner.subst(f, x)
    }

    fn exists(&self, f: &Mor<P>, x: Set) -> Set {
        if *f == self.at && x == self.arg {
            self.value
        } else {
            self.inner.exists(f, x)
        }
    }
}

/// A hyperdoctrine over a thin base with explicit lattice fibers and tables.
#[derive(Debug, Clone)]
pub struct TableHyp {
    pub base: ThinCat,
    pub fibers: Vec<FinDistLattice>,
    forms: Vec<DownLat>,
    set_of: Vec<Vec<Set>>,
    index_of: Vec<HashMap<Set, usize>>,
    /// (a, b) ↦ map P(b) → P(a) on element indices
    pub subst: HashMap<(usize, usize), Vec<usize>>,
    /// (a, b) ↦ map P(a) → P(b)
    pub exists: HashMap<(usize, usize), Vec<usize>>,
}

impl TableHyp {
    /// Missing identity entries default to identities. Missing ∃ entries are
    /// computed as left adjoints when they exist.
    pub fn new(
        base: ThinCat,
        fibers: Vec<FinDistLattice>,
        mut subst: HashMap<(usize, usize), Vec<usize>>,
        mut exists: HashMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self, String> {
        let n = base.poset.len();
        if fibers.len() != n {
            return Err(format!("{} fibers for {} objects", fibers.len(), n));
        }
        let mut forms = Vec::new();
        let mut set_of = Vec::new();
        let mut index_of = Vec::new();
        for l in &fibers {
            let (d, s) = l.to_downlat().map_err(|e| e.to_string())?;
            index_of.push(s.iter().enumerate().map(|(i, &x)| (x, i)).collect());
            forms.push(d);
            set_of.push(s);
        }
        for a in 0..n {
            subst.entry((a, a)).or_insert_with(|| (0..fibers[a].len()).collect());
            for b in 0..n {
                if !base.poset.leq(a, b) {
                    continue;
                }
                let s = subst.get(&(a, b)).ok_or_else(|| format!("missing substitution for {a} ≤ {b}"))?;
                if s.len() != fibers[b].len() || s.iter().any(|&v| v >= fibers[a].len()) {
                    return Err(format!("substitution table for {a} ≤ {b} has the wrong shape"));
                }
                if !exists.contains_key(&(a, b)) {
                    let l = left_adjoint(&fibers[a], &fibers[b], s)
                        .ok_or_else(|| format!("substitution for {a} ≤ {b} has no left adjoint"))?;
                    exists.insert((a, b), l);
                }
                let e = &exists[&(a, b)];
                if e.len() != fibers[a].len() || e.iter().any(|&v| v >= fibers[b].len()) {
                    return Err(format!("∃ table for {a} ≤ {b} has the wrong shape"));
                }
            }
        }
        Ok(TableHyp { base, fibers, forms, set_of, index_of, subst, exists })
    }

    /// One object, one fiber.
    pub fn single(l: FinDistLattice) -> Self {
        TableHyp::new(ThinCat::trivial(), vec![l], HashMap::new(), HashMap::new()).unwrap()
    }

    pub fn set(&self, a: usize, i: usize) -> Set {
        self.set_of[a][i]
    }

    pub fn index(&self, a: usize, x: Set) -> usize {
        self.index_of[a][&x]
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let f: HypFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        f.build()
    }
}

/// Least x in `src` with y ≤ g(x) for each y, where g: tgt → src... here g
/// maps P(b) → P(a) and the result maps P(a) → P(b).
pub fn left_adjoint(pa: &FinDistLattice, pb: &FinDistLattice, g: &[usize]) -> Option<Vec<usize>> {
    (0..pa.len())
        .map(|y| {
            let cands: Vec<usize> = (0..pb.len()).filter(|&x| pa.leq(y, g[x])).collect();
            let m = pb.meet_all(cands.iter().copied());
            if pa.leq(y, g[m]) {
                Some(m)
            } else {
                None
            }
        })
        .collect()
}

impl Hyperdoctrine for TableHyp {
    type Base = ThinCat;

    fn base(&self) -> &ThinCat {
        &self.base
    }

    fn fiber(&self, a: &usize) -> DownLat {
        self.forms[*a].clone()
    }

    fn subst(&self, f: &(usize, usize), x: Set) -> Set {
        let t = &self.subst[f];
        self.set_of[f.0][t[self.index_of[f.1][&x]]]
    }

    fn exists(&self, f: &(usize, usize), x: Set) -> Set {
        let t = &self.exists[f];
        self.set_of[f.1][t[self.index_of[f.0][&x]]]
    }
}

/// JSON hyperdoctrine: a thin base given as a poset with meets and a top,
/// one lattice per object, and substitution (and optionally ∃) tables as
/// name-to-name maps per order pair "a<=b".
#[derive(Debug, Deserialize)]
pub struct HypFile {
    pub objects: Vec<String>,
    #[serde(default)]
    pub leq: Vec<(String, String)>,
    pub fibers: HashMap<String, LatticeFile>,
    #[serde(default)]
    pub subst: HashMap<String, HashMap<String, String>>,
    #[serde(default)]
    pub exists: HashMap<String, HashMap<String, String>>,
}

impl HypFile {
    pub fn build(&self) -> Result<TableHyp, String> {
        let idx = |s: &str| self.objects.iter().position(|o| o == s).ok_or(format!("unknown object {s}"));
        let pairs = self.leq.iter().map(|(a, b)| Ok((idx(a)?, idx(b)?))).collect::<Result<Vec<_>, String>>()?;
        let poset = crate::lattice::FinPoset::from_pairs(self.objects.clone(), &pairs).map_err(|e| e.to_string())?;
        let base = ThinCat::new(poset)?;
        let fibers = self
            .objects
            .iter()
            .map(|o| self.fibers.get(o).ok_or(format!("no fiber for {o}"))?.build().map_err(|e: LatticeError| e.to_string()))
            .collect::<Result<Vec<_>, String>>()?;
        let table = |m: &HashMap<String, HashMap<String, String>>, flip: bool| -> Result<HashMap<(usize, usize), Vec<usize>>, String> {
            let mut out = HashMap::new();
            for (k, v) in m {
                let (a, b) = k.split_once("<=").ok_or(format!("bad key {k}, expected a<=b"))?;
                let (a, b) = (idx(a.trim())?, idx(b.trim())?);
                let (from, to) = if flip { (&fibers[b], &fibers[a]) } else { (&fibers[a], &fibers[b]) };
                let mut t = vec![usize::MAX; from.len()];
                for (x, y) in v {
                    let xi = from.index(x).ok_or(format!("unknown element {x}"))?;
                    t[xi] = to.index(y).ok_or(format!("unknown element {y}"))?;
                }
                if t.contains(&usize::MAX) {
                    return Err(format!("table {k} is not total"));
                }
                out.insert((a, b), t);
            }
            Ok(out)
        };
        let subst = table(&self.subst, true)?;
        let exists = table(&self.exists, false)?;
        TableHyp::new(base, fibers, subst, exists)
    }
}

type SO<M> = Obj<<M as HypMorphism>::S>;
type SM<M> = Mor<<M as HypMorphism>::S>;
type TO<M> = Obj<<M as HypMorphism>::T>;
type TM<M> = Mor<<M as HypMorphism>::T>;

/// (K, τ): a base functor with fiber maps τ_A: P1(A) → P2(K A).
pub trait HypMorphism {
    type S: Hyperdoctrine;
    type T: Hyperdoctrine;

    fn src(&self) -> &Self::S;
    fn tgt(&self) -> &Self::T;
    fn obj(&self, a: &SO<Self>) -> TO<Self>;
    fn mor(&self, f: &SM<Self>) -> TM<Self>;
    fn tau(&self, a: &SO<Self>, x: Set) -> Set;
}

/// Functoriality of K, τ lattice homs, naturality, and ∃ preservation.
pub fn validate_morphism<M: HypMorphism>(m: &M) -> Report {
    let (p1, p2) = (m.src(), m.tgt());
    let (c, d) = (p1.base(), p2.base());
    let maps = declared_maps(c);
    let mut r = Report::new();
    r.push(
        "functor",
        (|| {
            for a in c.objects() {
                if m.mor(&c.id(&a)) != d.id(&m.obj(&a)) {
                    return Err(format!("K(id {a:?})"));
                }
            }
            for (_a, b, f) in &maps {
                for (b2, _c, g) in &maps {
                    if b2 == b && m.mor(&c.comp(g, f)) != d.comp(&m.mor(g), &m.mor(f)) {
                        return Err(format!("K({g:?}∘{f:?})"));
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "tau_hom",
        (|| {
            for a in c.objects() {
                let ka = m.obj(&a);
                let (fa, fka) = (p1.fiber(&a), p2.fiber(&ka));
                if m.tau(&a, fa.top()) != fka.top() || m.tau(&a, 0) != 0 {
                    return Err(format!("τ_{a:?} misses a bound"));
                }
                let es = p1.elements(&a);
                for &x in &es {
                    for &y in &es {
                        if m.tau(&a, x | y) != m.tau(&a, x) | m.tau(&a, y) || m.tau(&a, x & y) != m.tau(&a, x) & m.tau(&a, y) {
                            return Err(format!("τ_{a:?} at {x:#b}, {y:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "naturality",
        (|| {
            for (a, b, f) in &maps {
                let kf = m.mor(f);
                for y in p1.elements(b) {
                    if m.tau(a, p1.subst(f, y)) != p2.subst(&kf, m.tau(b, y)) {
                        return Err(format!("τ and P({f:?}) at {y:#b}"));
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "exists",
        (|| {
            for (a, b, f) in &maps {
                let kf = m.mor(f);
                for x in p1.elements(a) {
                    if m.tau(b, p1.exists(f, x)) != p2.exists(&kf, m.tau(a, x)) {
                        return Err(format!("τ and ∃ along {f:?} at {x:#b}"));
                    }
                }
            }
            Ok(())
        })(),
    );
    r
}

pub struct IdMorphism<'a, P>(pub &'a P);

impl<P: Hyperdoctrine> HypMorphism for IdMorphism<'_, P> {
    type S = P;
    type T = P;

    fn src(&self) -> &P {
        self.0
    }

    fn tgt(&self) -> &P {
        self.0
    }

    fn obj(&self, a: &Obj<P>) -> Obj<P> {
        a.clone()
    }

    fn mor(&self, f: &Mor<P>) -> Mor<P> {
        f.clone()
    }

    fn tau(&self, _a: &Obj<P>, x: Set) -> Set {
        x
    }
}

/// (id, η): P → P^δ.
pub struct UnitMorphism<'a, 'b, P: Hyperdoctrine> {
    pub p: &'a P,
    pub pd: &'b DeltaHyp<'a, P>,
}

impl<'a, 'b, P: Hyperdoctrine> HypMorphism for UnitMorphism<'a, 'b, P> {
    type S = P;
    type T = DeltaHyp<'a, P>;

    fn src(&self) -> &P {
        self.p
    }

    fn tgt(&self) -> &DeltaHyp<'a, P> {
        self.pd
    }

    fn obj(&self, a: &Obj<P>) -> Obj<P> {
        a.clone()
    }

    fn mor(&self, f: &Mor<P>) -> Mor<P> {
        f.clone()
    }

    fn tau(&self, a: &Obj<P>, x: Set) -> Set {
        self.pd.embed(a, x)
    }
}

/// (K, τ^δ): P1^δ → P2^δ.
pub struct DeltaMorphism<'a, 'b, M: HypMorphism> {
    pub m: &'b M,
    pub src: &'b DeltaHyp<'a, M::S>,
    pub tgt: &'b DeltaHyp<'a, M::T>,
}

impl<'a, 'b, M: HypMorphism> HypMorphism for DeltaMorphism<'a, 'b, M> {
    type S = DeltaHyp<'a, M::S>;
    type T = DeltaHyp<'a, M::T>;

    fn src(&self) -> &Self::S {
        self.src
    }

    fn tgt(&self) -> &Self::T {
        self.tgt
    }

    fn obj(&self, a: &SO<M>) -> TO<M> {
        self.m.obj(a)
    }

    fn mor(&self, f: &SM<M>) -> TM<M> {
        self.m.mor(f)
    }

    fn tau(&self, a: &SO<M>, u: Set) -> Set {
        let ka = self.m.obj(a);
        let (ea, eka) = (self.src.ext(a), self.tgt.ext(&ka));
        ea.extend(&eka, |x| self.m.tau(a, x), u)
    }
}

pub fn canext_morphism<'a, 'b, M: HypMorphism>(
    m: &'b M,
    src: &'b DeltaHyp<'a, M::S>,
    tgt: &'b DeltaHyp<'a, M::T>,
) -> DeltaMorphism<'a, 'b, M> {
    DeltaMorphism { m, src, tgt }
}

/// n ∘ m
pub struct Composite<'a, M, N>(pub &'a M, pub &'a N);

impl<M: HypMorphism, N: HypMorphism<S = M::T>> HypMorphism for Composite<'_, M, N> {
    type S = M::S;
    type T = N::T;

    fn src(&self) -> &M::S {
        self.0.src()
    }

    fn tgt(&self) -> &N::T {
        self.1.tgt()
    }

    fn obj(&self, a: &SO<M>) -> TO<N> {
        self.1.obj(&self.0.obj(a))
    }

    fn mor(&self, f: &SM<M>) -> TM<N> {
        self.1.mor(&self.0.mor(f))
    }

    fn tau(&self, a: &SO<M>, x: Set) -> Set {
        self.1.tau(&self.0.obj(a), self.0.tau(a, x))
    }
}

/// A morphism between table hyperdoctrines over a common thin base with
/// identity base functor and explicit τ tables.
pub struct TableMorphism<'a> {
    pub src: &'a TableHyp,
    pub tgt: &'a TableHyp,
    pub tau: Vec<Vec<usize>>,
}

impl HypMorphism for TableMorphism<'_> {
    type S = TableHyp;
    type T = TableHyp;

    fn src(&self) -> &TableHyp {
        self.src
    }

    fn tgt(&self) -> &TableHyp {
        self.tgt
    }

    fn obj(&self, a: &usize) -> usize {
        *a
    }

    fn mor(&self, f: &(usize, usize)) -> (usize, usize) {
        *f
    }

    fn tau(&self, a: &usize, x: Set) -> Set {
        self.tgt.set(*a, self.tau[*a][self.src.index(*a, x)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{FinSetCat, Func, LatCat};
    use crate::lattice::FinPoset;

    #[test]
    fn powerset_validates() {
        let c = FinSetCat::new(vec![1, 2]);
        let p = powerset_hyperdoctrine(&c);
        assert!(validate_fo(&p).pass());
        let c = FinSetCat::new(vec![1]);
        let p = powerset_hyperdoctrine(&c);
        assert_eq!(p.elements(&1).len(), 2);
        assert!(validate(&p).pass());
        let c = FinSetCat::new(vec![3]);
        assert!(validate(&powerset_hyperdoctrine(&c)).passed("beck_chevalley"));
    }

    #[test]
    fn mutation_breaks_adjunction() {
        let c = FinSetCat::new(vec![1, 2]);
        let p = powerset_hyperdoctrine(&c);
        let f = Func::constant(2, 1, 0);
        let m = Mutated { inner: &p, at: f, arg: 0b01, value: 0 };
        let r = validate(&m);
        assert!(!r.passed("adjunction"));
        assert!(r.get("adjunction").unwrap().witness.is_some());
    }

    #[test]
    fn trivial_and_single_fiber() {
        let p = TableHyp::single(FinDistLattice::chain(2));
        assert!(validate(&p).pass());
        let p = TableHyp::single(FinDistLattice::chain(3));
        let d = canext_hyperdoctrine(&p);
        assert_eq!(d.elements(&0).len(), 3);
        assert!(validate(&d).pass());
    }

    #[test]
    fn delta_of_powerset_is_fiberwise_iso() {
        let c = FinSetCat::new(vec![0, 1, 2]);
        let p = powerset_hyperdoctrine(&c);
        let d = canext_hyperdoctrine(&p);
        for a in c.objects() {
            let (t1, _) = p.fiber(&a).to_table();
            let (t2, _) = d.fiber(&a).to_table();
            assert!(t1.iso(&t2).is_some());
        }
        assert!(validate_fo(&d).pass());
        let dd = canext_hyperdoctrine(&d);
        assert!(validate(&dd).pass());
    }

    #[test]
    fn morphisms_extend() {
        let c = FinSetCat::new(vec![1, 2]);
        let p = powerset_hyperdoctrine(&c);
        let d = canext_hyperdoctrine(&p);
        let id = IdMorphism(&p);
        assert!(validate_morphism(&id).pass());
        let unit = UnitMorphism { p: &p, pd: &d };
        assert!(validate_morphism(&unit).pass());
        let idd = canext_morphism(&id, &d, &d);
        assert!(validate_morphism(&idd).pass());
        for a in c.objects() {
            for u in d.elements(&a) {
                assert_eq!(idd.tau(&a, u), u);
            }
        }
        let comp = Composite(&id, &unit);
        assert!(validate_morphism(&comp).pass());
    }

    #[test]
    fn table_hyperdoctrine_over_chain_base() {
        // base m ≤ 1 with P(1) = 3-chain and P(m) = ↓m, substitution ∧ m
        let base = ThinCat::new(FinPoset::chain(2)).unwrap();
        let mut subst = HashMap::new();
        subst.insert((0, 1), vec![0, 1, 1]);
        let p = TableHyp::new(base.clone(), vec![FinDistLattice::chain(2), FinDistLattice::chain(3)], subst, HashMap::new()).unwrap();
        assert_eq!(p.exists[&(0, 1)], vec![0, 1]);
        assert!(validate(&p).pass());
        // an embedding 2 → 3 as substitution has ∃ m = 1, and BC along the
        // mono (m, 1) fails
        let mut subst = HashMap::new();
        subst.insert((0, 1), vec![0, 2]);
        let q = TableHyp::new(base, vec![FinDistLattice::chain(3), FinDistLattice::chain(2)], subst, HashMap::new()).unwrap();
        let r = validate(&q);
        assert!(!r.passed("beck_chevalley") && r.passed("adjunction"));
        assert!(validate(&canext_hyperdoctrine(&p)).pass());
    }

    #[test]
    fn lattice_base_is_first_order() {
        let c = LatCat::new(FinDistLattice::diamond());
        let p = SubHyp(&c);
        assert!(validate_fo(&p).pass());
        assert!(validate_fo(&canext_hyperdoctrine(&p)).pass());
    }

    #[test]
    fn json_hyperdoctrine() {
        let text = r#"{
          "objects": ["a", "b"], "leq": [["a", "b"]],
          "fibers": {
            "a": {"elements": ["0", "1"], "leq": [["0", "1"]]},
            "b": {"elements": ["0", "m", "1"], "leq": [["0", "m"], ["m", "1"]]}
          },
          "subst": {"a<=b": {"0": "0", "m": "1", "1": "1"}}
        }"#;
        let p = TableHyp::parse(text).unwrap();
        assert!(validate(&p).pass());
    }
}
