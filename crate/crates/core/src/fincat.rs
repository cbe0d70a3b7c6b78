//! Finite categories with chosen finite limits and subobject lattices.
//!
//! A finite category with all binary products is a preorder, so the finite
//! set fragments here are lazy: `FinSetCat` is skeletal FinSet with a list of
//! declared objects over which checks quantify, while products and equalizers
//! may land on other sizes. `LatCat` is a distributive lattice viewed as a
//! thin category.

use crate::lattice::{bit, full, members, subset, DownLat, FinDistLattice, FinPoset, Set, MAX_POINTS};
use crate::report::Report;
use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

pub trait Category {
    type Obj: Clone + Eq + Hash + Ord + Debug;
    type Mor: Clone + Eq + Hash + Ord + Debug;

    /// The objects checks quantify over.
    fn objects(&self) -> Vec<Self::Obj>;
    fn hom(&self, a: &Self::Obj, b: &Self::Obj) -> Vec<Self::Mor>;
    fn dom(&self, f: &Self::Mor) -> Self::Obj;
    fn cod(&self, f: &Self::Mor) -> Self::Obj;
    fn id(&self, a: &Self::Obj) -> Self::Mor;
    /// g ∘ f
    fn comp(&self, g: &Self::Mor, f: &Self::Mor) -> Self::Mor;

    fn morphisms(&self) -> Vec<Self::Mor> {
        let obs = self.objects();
        let mut out = Vec::new();
        for a in &obs {
            for b in &obs {
                out.extend(self.hom(a, b));
            }
        }
        out
    }
}

pub trait Limits: Category {
    fn terminal(&self) -> Self::Obj;
    fn bang(&self, a: &Self::Obj) -> Self::Mor;
    fn product(&self, a: &Self::Obj, b: &Self::Obj) -> Self::Obj;
    fn proj1(&self, a: &Self::Obj, b: &Self::Obj) -> Self::Mor;
    fn proj2(&self, a: &Self::Obj, b: &Self::Obj) -> Self::Mor;
    /// ⟨f, g⟩ : X → A × B
    fn pair(&self, f: &Self::Mor, g: &Self::Mor) -> Self::Mor;
    /// Chosen equalizer of parallel f, g, as a mono into their domain.
    fn equalizer(&self, f: &Self::Mor, g: &Self::Mor) -> Self::Mor;

    fn diagonal(&self, a: &Self::Obj) -> Self::Mor {
        let i = self.id(a);
        self.pair(&i, &i)
    }

    /// f × g
    fn times(&self, f: &Self::Mor, g: &Self::Mor) -> Self::Mor {
        let (a, b) = (self.dom(f), self.dom(g));
        let l = self.comp(f, &self.proj1(&a, &b));
        let r = self.comp(g, &self.proj2(&a, &b));
        self.pair(&l, &r)
    }

    /// Chosen pullback of f: A → C and g: B → C as the equalizer of f∘π1 and
    /// g∘π2. Returns the two legs into A and B.
    fn pullback(&self, f: &Self::Mor, g: &Self::Mor) -> (Self::Mor, Self::Mor) {
        let (a, b) = (self.dom(f), self.dom(g));
        let p1 = self.proj1(&a, &b);
        let p2 = self.proj2(&a, &b);
        let m = self.equalizer(&self.comp(f, &p1), &self.comp(g, &p2));
        (self.comp(&p1, &m), self.comp(&p2, &m))
    }
}

/// Subobject lattices in Birkhoff form with pullback and image maps.
pub trait SubCat: Category {
    fn sub(&self, a: &Self::Obj) -> DownLat;
    /// f*(v) for f: A → B, v ∈ Sub(B).
    fn pullback_sub(&self, f: &Self::Mor, v: Set) -> Set;
    /// ∃_f(u) for f: A → B, u ∈ Sub(A).
    fn image(&self, f: &Self::Mor, u: Set) -> Set;
}

pub trait CohCat: SubCat + Limits {
    /// A chosen mono representing u ∈ Sub(a).
    fn sub_object(&self, a: &Self::Obj, u: Set) -> Self::Mor;
    /// ∀_f(u), when it exists.
    fn forall(&self, f: &Self::Mor, u: Set) -> Option<Set>;

    /// The two legs of the kernel pair coincide.
    fn is_mono(&self, f: &Self::Mor) -> bool {
        let (p1, p2) = self.pullback(f, f);
        p1 == p2
    }

    /// h with m ∘ h = g, for a mono m, if g factors through it.
    fn factor_through(&self, g: &Self::Mor, m: &Self::Mor) -> Option<Self::Mor> {
        self.hom(&self.dom(g), &self.dom(m)).into_iter().find(|h| self.comp(m, h) == *g)
    }

    fn inverse(&self, f: &Self::Mor) -> Option<Self::Mor> {
        let (a, b) = (self.dom(f), self.cod(f));
        self.hom(&b, &a)
            .into_iter()
            .find(|g| self.comp(g, f) == self.id(&a) && self.comp(f, g) == self.id(&b))
    }

    /// The mono dom(m_w) → dom(m_u) for w ≤ u in Sub(a).
    fn restrict_mono(&self, a: &Self::Obj, w: Set, u: Set) -> Self::Mor {
        let mw = self.sub_object(a, w);
        let mu = self.sub_object(a, u);
        self.factor_through(&mw, &mu).expect("w ≤ u")
    }

    /// The image of f as an element of Sub(cod f).
    fn image_of(&self, f: &Self::Mor) -> Set {
        let a = self.dom(f);
        self.image(f, self.sub(&a).top())
    }
}

/// A function between skeletal finite sets {0..dom} → {0..cod}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Func {
    pub dom: usize,
    pub cod: usize,
    pub table: Vec<usize>,
}

impl Func {
    pub fn new(dom: usize, cod: usize, table: Vec<usize>) -> Self {
        assert_eq!(table.len(), dom);
        assert!(table.iter().all(|&v| v < cod));
        Func { dom, cod, table }
    }

    pub fn constant(dom: usize, cod: usize, v: usize) -> Self {
        Func::new(dom, cod, vec![v; dom])
    }

    pub fn image_set(&self) -> Set {
        self.table.iter().fold(0, |s, &v| s | bit(v))
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = 0u128;
        for &v in &self.table {
            if seen & bit(v) != 0 {
                return false;
            }
            seen |= bit(v);
        }
        true
    }
}

/// Skeletal finite sets. Object n is {0, ..., n-1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinSetCat {
    declared: Vec<usize>,
}

impl FinSetCat {
    pub fn new(mut declared: Vec<usize>) -> Self {
        declared.sort_unstable();
        declared.dedup();
        FinSetCat { declared }
    }

    pub fn all_functions(a: usize, b: usize) -> Vec<Func> {
        if a == 0 {
            return vec![Func::new(0, b, vec![])];
        }
        if b == 0 {
            return vec![];
        }
        let total = (b as u64).checked_pow(a as u32).expect("hom set too large");
        assert!(total <= 1 << 20, "hom set too large: {b}^{a}");
        (0..total)
            .map(|mut k| {
                let mut t = vec![0; a];
                for slot in t.iter_mut() {
                    *slot = (k % b as u64) as usize;
                    k /= b as u64;
                }
                Func::new(a, b, t)
            })
            .collect()
    }
}

impl Category for FinSetCat {
    type Obj = usize;
    type Mor = Func;

    fn objects(&self) -> Vec<usize> {
        self.declared.clone()
    }

    fn hom(&self, a: &usize, b: &usize) -> Vec<Func> {
        FinSetCat::all_functions(*a, *b)
    }

    fn dom(&self, f: &Func) -> usize {
        f.dom
    }

    fn cod(&self, f: &Func) -> usize {
        f.cod
    }

    fn id(&self, a: &usize) -> Func {
        Func::new(*a, *a, (0..*a).collect())
    }

    fn comp(&self, g: &Func, f: &Func) -> Func {
        assert_eq!(f.cod, g.dom, "composing non-composable functions");
        Func::new(f.dom, g.cod, f.table.iter().map(|&x| g.table[x]).collect())
    }
}

impl Limits for FinSetCat {
    fn terminal(&self) -> usize {
        1
    }

    fn bang(&self, a: &usize) -> Func {
        Func::constant(*a, 1, 0)
    }

    fn product(&self, a: &usize, b: &usize) -> usize {
        a * b
    }

    fn proj1(&self, a: &usize, b: &usize) -> Func {
        Func::new(a * b, *a, (0..a * b).map(|k| k / b).collect())
    }

    fn proj2(&self, a: &usize, b: &usize) -> Func {
        Func::new(a * b, *b, (0..a * b).map(|k| k % b).collect())
    }

    fn pair(&self, f: &Func, g: &Func) -> Func {
        assert_eq!(f.dom, g.dom);
        Func::new(f.dom, f.cod * g.cod, (0..f.dom).map(|x| f.table[x] * g.cod + g.table[x]).collect())
    }

    fn equalizer(&self, f: &Func, g: &Func) -> Func {
        let eq: Vec<usize> = (0..f.dom).filter(|&x| f.table[x] == g.table[x]).collect();
        Func::new(eq.len(), f.dom, eq)
    }
}

impl SubCat for FinSetCat {
    fn sub(&self, a: &usize) -> DownLat {
        assert!(*a <= MAX_POINTS, "object too large for subobject lattice: {a}");
        DownLat::discrete(*a)
    }

    fn pullback_sub(&self, f: &Func, v: Set) -> Set {
        (0..f.dom).filter(|&x| v & bit(f.table[x]) != 0).fold(0, |s, x| s | bit(x))
    }

    fn image(&self, f: &Func, u: Set) -> Set {
        members(u).fold(0, |s, x| s | bit(f.table[x]))
    }
}

impl CohCat for FinSetCat {
    fn sub_object(&self, a: &usize, u: Set) -> Func {
        let elems: Vec<usize> = members(u).collect();
        Func::new(elems.len(), *a, elems)
    }

    fn forall(&self, f: &Func, u: Set) -> Option<Set> {
        Some((0..f.cod).filter(|&b| subset(self.pullback_sub(f, bit(b)), u)).fold(0, |s, b| s | bit(b)))
    }

    fn is_mono(&self, f: &Func) -> bool {
        f.is_injective()
    }

    fn factor_through(&self, g: &Func, m: &Func) -> Option<Func> {
        let mut table = Vec::with_capacity(g.dom);
        for &y in &g.table {
            table.push(m.table.iter().position(|&v| v == y)?);
        }
        Some(Func::new(g.dom, m.dom, table))
    }

    fn inverse(&self, f: &Func) -> Option<Func> {
        if f.dom != f.cod || !f.is_injective() {
            return None;
        }
        let mut t = vec![0; f.dom];
        for (x, &y) in f.table.iter().enumerate() {
            t[y] = x;
        }
        Some(Func::new(f.cod, f.dom, t))
    }
}

/// A distributive lattice as a thin category: a → b iff a ≤ b. Products are
/// meets, subobjects of a are the elements below a.
#[derive(Debug, Clone)]
pub struct LatCat {
    pub lattice: FinDistLattice,
    fiber: DownLat,
    elem_set: Vec<Set>,
    set_elem: HashMap<Set, usize>,
}

impl LatCat {
    pub fn new(lattice: FinDistLattice) -> Self {
        let (fiber, elem_set) = lattice.to_downlat().expect("lattice too large");
        let set_elem = elem_set.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        LatCat { lattice, fiber, elem_set, set_elem }
    }

    /// The join-irreducibles below a, as a set of points.
    pub fn points_below(&self, a: usize) -> Set {
        self.elem_set[a]
    }

    pub fn element_of(&self, s: Set) -> usize {
        self.set_elem[&s]
    }
}

impl Category for LatCat {
    type Obj = usize;
    type Mor = (usize, usize);

    fn objects(&self) -> Vec<usize> {
        (0..self.lattice.len()).collect()
    }

    fn hom(&self, a: &usize, b: &usize) -> Vec<(usize, usize)> {
        if self.lattice.leq(*a, *b) {
            vec![(*a, *b)]
        } else {
            vec![]
        }
    }

    fn dom(&self, f: &(usize, usize)) -> usize {
        f.0
    }

    fn cod(&self, f: &(usize, usize)) -> usize {
        f.1
    }

    fn id(&self, a: &usize) -> (usize, usize) {
        (*a, *a)
    }

    fn comp(&self, g: &(usize, usize), f: &(usize, usize)) -> (usize, usize) {
        assert_eq!(f.1, g.0);
        (f.0, g.1)
    }
}

impl Limits for LatCat {
    fn terminal(&self) -> usize {
        self.lattice.top()
    }

    fn bang(&self, a: &usize) -> (usize, usize) {
        (*a, self.lattice.top())
    }

    fn product(&self, a: &usize, b: &usize) -> usize {
        self.lattice.meet(*a, *b)
    }

    fn proj1(&self, a: &usize, b: &usize) -> (usize, usize) {
        (self.lattice.meet(*a, *b), *a)
    }

    fn proj2(&self, a: &usize, b: &usize) -> (usize, usize) {
        (self.lattice.meet(*a, *b), *b)
    }

    fn pair(&self, f: &(usize, usize), g: &(usize, usize)) -> (usize, usize) {
        assert_eq!(f.0, g.0);
        (f.0, self.lattice.meet(f.1, g.1))
    }

    fn equalizer(&self, f: &(usize, usize), _g: &(usize, usize)) -> (usize, usize) {
        (f.0, f.0)
    }
}

impl SubCat for LatCat {
    fn sub(&self, a: &usize) -> DownLat {
        self.fiber.restrict(self.elem_set[*a])
    }

    fn pullback_sub(&self, f: &(usize, usize), v: Set) -> Set {
        v & self.elem_set[f.0]
    }

    fn image(&self, _f: &(usize, usize), u: Set) -> Set {
        u
    }
}

impl CohCat for LatCat {
    fn sub_object(&self, a: &usize, u: Set) -> (usize, usize) {
        (self.set_elem[&u], *a)
    }

    fn forall(&self, f: &(usize, usize), u: Set) -> Option<Set> {
        Some(self.sub(&f.1).implies(self.elem_set[f.0], u))
    }

    fn is_mono(&self, _f: &(usize, usize)) -> bool {
        true
    }

    fn factor_through(&self, g: &(usize, usize), m: &(usize, usize)) -> Option<(usize, usize)> {
        if self.lattice.leq(g.0, m.0) {
            Some((g.0, m.0))
        } else {
            None
        }
    }

    fn inverse(&self, f: &(usize, usize)) -> Option<(usize, usize)> {
        if f.0 == f.1 {
            Some(*f)
        } else {
            None
        }
    }
}

/// A finite poset with binary meets and a top, as a thin category with
/// finite limits. Finite categories with binary products are preorders, so
/// this is the shape explicit hyperdoctrine bases take.
#[derive(Debug, Clone)]
pub struct ThinCat {
    pub poset: FinPoset,
    meet: Vec<Vec<usize>>,
    top: usize,
}

impl ThinCat {
    pub fn new(poset: FinPoset) -> Result<Self, String> {
        let n = poset.len();
        let top = (0..n).find(|&t| (0..n).all(|x| poset.leq(x, t))).ok_or("base has no top")?;
        let mut meet = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let lower: Vec<usize> = (0..n).filter(|&c| poset.leq(c, a) && poset.leq(c, b)).collect();
                meet[a][b] = *lower
                    .iter()
                    .find(|&&c| lower.iter().all(|&d| poset.leq(d, c)))
                    .ok_or_else(|| format!("no product of {} and {}", poset.names[a], poset.names[b]))?;
            }
        }
        Ok(ThinCat { poset, meet, top })
    }

    pub fn trivial() -> Self {
        ThinCat::new(FinPoset::chain(1)).unwrap()
    }
}

impl Category for ThinCat {
    type Obj = usize;
    type Mor = (usize, usize);

    fn objects(&self) -> Vec<usize> {
        (0..self.poset.len()).collect()
    }

    fn hom(&self, a: &usize, b: &usize) -> Vec<(usize, usize)> {
        if self.poset.leq(*a, *b) {
            vec![(*a, *b)]
        } else {
            vec![]
        }
    }

    fn dom(&self, f: &(usize, usize)) -> usize {
        f.0
    }

    fn cod(&self, f: &(usize, usize)) -> usize {
        f.1
    }

    fn id(&self, a: &usize) -> (usize, usize) {
        (*a, *a)
    }

    fn comp(&self, g: &(usize, usize), f: &(usize, usize)) -> (usize, usize) {
        assert_eq!(f.1, g.0);
        (f.0, g.1)
    }
}

impl Limits for ThinCat {
    fn terminal(&self) -> usize {
        self.top
    }

    fn bang(&self, a: &usize) -> (usize, usize) {
        (*a, self.top)
    }

    fn product(&self, a: &usize, b: &usize) -> usize {
        self.meet[*a][*b]
    }

    fn proj1(&self, a: &usize, b: &usize) -> (usize, usize) {
        (self.meet[*a][*b], *a)
    }

    fn proj2(&self, a: &usize, b: &usize) -> (usize, usize) {
        (self.meet[*a][*b], *b)
    }

    fn pair(&self, f: &(usize, usize), g: &(usize, usize)) -> (usize, usize) {
        assert_eq!(f.0, g.0);
        (f.0, self.meet[f.1][g.1])
    }

    fn equalizer(&self, f: &(usize, usize), _g: &(usize, usize)) -> (usize, usize) {
        (f.0, f.0)
    }
}

pub type SObj<F> = <<F as Functor>::Src as Category>::Obj;
pub type SMor<F> = <<F as Functor>::Src as Category>::Mor;
pub type TObj<F> = <<F as Functor>::Tgt as Category>::Obj;
pub type TMor<F> = <<F as Functor>::Tgt as Category>::Mor;

pub trait Functor {
    type Src: CohCat;
    type Tgt: CohCat;

    fn src(&self) -> &Self::Src;
    fn tgt(&self) -> &Self::Tgt;
    fn obj(&self, a: &SObj<Self>) -> TObj<Self>;
    fn mor(&self, f: &SMor<Self>) -> TMor<Self>;

    /// The action F_A: Sub(A) → Sub(FA), u ↦ image of F(m_u).
    fn sub(&self, a: &SObj<Self>, u: Set) -> Set {
        let m = self.src().sub_object(a, u);
        self.tgt().image_of(&self.mor(&m))
    }
}

fn elements_of<C: SubCat>(c: &C, a: &C::Obj) -> Vec<Set> {
    c.sub(a).elements_capped(1 << 16).expect("subobject lattice too large to enumerate")
}

/// Functoriality, terminal, products, pullbacks and images of subobjects,
/// finite joins and meets, over the declared objects and their hom sets.
pub fn check_coherent_functor<F: Functor>(f: &F) -> Report {
    let (s, t) = (f.src(), f.tgt());
    let obs = s.objects();
    let mut r = Report::new();
    r.push(
        "identities",
        obs.iter().try_for_each(|a| {
            if f.mor(&s.id(a)) == t.id(&f.obj(a)) {
                Ok(())
            } else {
                Err(format!("F(id {a:?}) is not an identity"))
            }
        }),
    );
    r.push(
        "composition",
        (|| {
            for a in &obs {
                for b in &obs {
                    for g in s.hom(a, b) {
                        for c in &obs {
                            for h in s.hom(b, c) {
                                if f.mor(&s.comp(&h, &g)) != t.comp(&f.mor(&h), &f.mor(&g)) {
                                    return Err(format!("F({h:?} ∘ {g:?})"));
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
        "terminal",
        if t.inverse(&t.bang(&f.obj(&s.terminal()))).is_some() {
            Ok(())
        } else {
            Err(format!("F({:?}) is not terminal", s.terminal()))
        },
    );
    r.push(
        "products",
        (|| {
            for a in &obs {
                for b in &obs {
                    let p1 = f.mor(&s.proj1(a, b));
                    let p2 = f.mor(&s.proj2(a, b));
                    if t.inverse(&t.pair(&p1, &p2)).is_none() {
                        return Err(format!("F({a:?} × {b:?}) → F{a:?} × F{b:?} not invertible"));
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "lattice",
        (|| {
            for a in &obs {
                let fa = f.obj(a);
                let sa = s.sub(a);
                let ta = t.sub(&fa);
                if f.sub(a, sa.top()) != ta.top() {
                    return Err(format!("top of Sub({a:?})"));
                }
                if f.sub(a, 0) != 0 {
                    return Err(format!("bottom of Sub({a:?})"));
                }
                let es = elements_of(s, a);
                for &u in &es {
                    for &v in &es {
                        if f.sub(a, u | v) != f.sub(a, u) | f.sub(a, v) {
                            return Err(format!("join in Sub({a:?}) at {u:#b}, {v:#b}"));
                        }
                        if f.sub(a, u & v) != f.sub(a, u) & f.sub(a, v) {
                            return Err(format!("meet in Sub({a:?}) at {u:#b}, {v:#b}"));
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
    r.push(
        "pullbacks",
        for_all_maps(s, |g, a, b| {
            let fg = f.mor(g);
            for v in elements_of(s, b) {
                if f.sub(a, s.pullback_sub(g, v)) != t.pullback_sub(&fg, f.sub(b, v)) {
                    return Err(format!("F({g:?})* at {v:#b}"));
                }
            }
            Ok(())
        }),
    );
    r.push(
        "images",
        for_all_maps(s, |g, a, b| {
            let fg = f.mor(g);
            for u in elements_of(s, a) {
                if f.sub(b, s.image(g, u)) != t.image(&fg, f.sub(a, u)) {
                    return Err(format!("∃ along F({g:?}) at {u:#b}"));
                }
            }
            Ok(())
        }),
    );
    r
}

fn for_all_maps<C: Category>(
    c: &C,
    mut body: impl FnMut(&C::Mor, &C::Obj, &C::Obj) -> Result<(), String>,
) -> Result<(), String> {
    let obs = c.objects();
    for a in &obs {
        for b in &obs {
            for g in c.hom(a, b) {
                body(&g, a, b)?;
            }
        }
    }
    Ok(())
}

/// Coherent, and F_B(∀_α u) = ∀_{Fα}(F_A u) whenever both sides exist.
pub fn check_heyting_functor<F: Functor>(f: &F) -> Report {
    let mut r = check_coherent_functor(f);
    let (s, t) = (f.src(), f.tgt());
    r.push(
        "forall",
        for_all_maps(s, |g, a, b| {
            let fg = f.mor(g);
            for u in elements_of(s, a) {
                let lhs = s.forall(g, u).map(|x| f.sub(b, x));
                let rhs = t.forall(&fg, f.sub(a, u));
                match (lhs, rhs) {
                    (Some(x), Some(y)) if x != y => return Err(format!("∀ along {g:?} at {u:#b}: {x:#b} vs {y:#b}")),
                    (Some(_), None) | (None, Some(_)) => return Err(format!("∀ along {g:?} exists on one side only")),
                    _ => {}
                }
            }
            Ok(())
        }),
    );
    r
}

/// Each F_A: Sub(A) → Sub(FA) reflects the order.
pub fn check_conservative<F: Functor>(f: &F) -> Result<(), String> {
    let s = f.src();
    for a in s.objects() {
        let es = elements_of(s, &a);
        for &u in &es {
            for &v in &es {
                if subset(f.sub(&a, u), f.sub(&a, v)) && !subset(u, v) {
                    return Err(format!("Sub({a:?}): F({u:#b}) ≤ F({v:#b}) but not {u:#b} ≤ {v:#b}"));
                }
            }
        }
    }
    Ok(())
}

/// ∃_α ⊣ α*, ∀: α* ⊣ ∀_α, Frobenius and Beck-Chevalley on chosen squares,
/// and stability of joins, over declared objects. With `exhaustive`, BC is
/// also checked on every pullback square among declared objects (every
/// commuting square satisfying the universal property against the declared
/// objects), not just the chosen one.
pub fn check_coherent_category<C: CohCat>(c: &C, exhaustive: bool) -> Report {
    let obs = c.objects();
    let mut r = Report::new();
    r.push(
        "adjunction",
        for_all_maps(c, |f, a, b| {
            let (ea, eb) = (elements_of(c, a), elements_of(c, b));
            for &u in &ea {
                for &v in &eb {
                    if subset(c.image(f, u), v) != subset(u, c.pullback_sub(f, v)) {
                        return Err(format!("∃ ⊣ * along {f:?} at u={u:#b}, v={v:#b}"));
                    }
                }
            }
            Ok(())
        }),
    );
    r.push(
        "frobenius",
        for_all_maps(c, |f, a, b| {
            let (ea, eb) = (elements_of(c, a), elements_of(c, b));
            for &u in &ea {
                for &v in &eb {
                    if c.image(f, u & c.pullback_sub(f, v)) != c.image(f, u) & v {
                        return Err(format!("Frobenius along {f:?} at u={u:#b}, v={v:#b}"));
                    }
                }
            }
            Ok(())
        }),
    );
    r.push(
        "beck_chevalley",
        (|| {
            for a in &obs {
                for b in &obs {
                    for cc in &obs {
                        for f in c.hom(a, cc) {
                            for g in c.hom(b, cc) {
                                let (p1, p2) = c.pullback(&f, &g);
                                check_bc_square(c, &f, &g, &p1, &p2)?;
                                if exhaustive {
                                    for d in &obs {
                                        for q1 in c.hom(d, a) {
                                            for q2 in c.hom(d, b) {
                                                if c.comp(&f, &q1) == c.comp(&g, &q2)
                                                    && is_pullback(c, &f, &g, &q1, &q2)
                                                {
                                                    check_bc_square(c, &f, &g, &q1, &q2)?;
                                                }
                                            }
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
    r.push(
        "forall_adjunction",
        for_all_maps(c, |f, a, b| {
            let (ea, eb) = (elements_of(c, a), elements_of(c, b));
            for &u in &ea {
                let Some(w) = c.forall(f, u) else { continue };
                for &v in &eb {
                    if subset(c.pullback_sub(f, v), u) != subset(v, w) {
                        return Err(format!("* ⊣ ∀ along {f:?} at u={u:#b}, v={v:#b}"));
                    }
                }
            }
            Ok(())
        }),
    );
    r.push(
        "stable_joins",
        for_all_maps(c, |f, _a, b| {
            let eb = elements_of(c, b);
            if c.pullback_sub(f, 0) != 0 {
                return Err(format!("{f:?}* does not keep bottom"));
            }
            for &u in &eb {
                for &v in &eb {
                    if c.pullback_sub(f, u | v) != c.pullback_sub(f, u) | c.pullback_sub(f, v) {
                        return Err(format!("{f:?}* at {u:#b} ∨ {v:#b}"));
                    }
                }
            }
            Ok(())
        }),
    );
    r
}

/// β* ∃_α = ∃_{α'} β'* for the square with f: A → C, g: B → C and legs
/// p1: P → A, p2: P → B, read as ∃_{p2} p1* = g* ∃_f.
fn check_bc_square<C: CohCat>(c: &C, f: &C::Mor, g: &C::Mor, p1: &C::Mor, p2: &C::Mor) -> Result<(), String> {
    let a = c.dom(f);
    for u in elements_of(c, &a) {
        let lhs = c.image(p2, c.pullback_sub(p1, u));
        let rhs = c.pullback_sub(g, c.image(f, u));
        if lhs != rhs {
            return Err(format!("BC for f={f:?}, g={g:?} at u={u:#b}"));
        }
    }
    Ok(())
}

/// Universal property tested against declared objects only.
fn is_pullback<C: CohCat>(c: &C, f: &C::Mor, g: &C::Mor, q1: &C::Mor, q2: &C::Mor) -> bool {
    let (a, b, d) = (c.dom(f), c.dom(g), c.dom(q1));
    for x in c.objects() {
        for r1 in c.hom(&x, &a) {
            for r2 in c.hom(&x, &b) {
                if c.comp(f, &r1) != c.comp(g, &r2) {
                    continue;
                }
                let n = c
                    .hom(&x, &d)
                    .into_iter()
                    .filter(|h| c.comp(q1, h) == r1 && c.comp(q2, h) == r2)
                    .count();
                if n != 1 {
                    return false;
                }
            }
        }
    }
    true
}

/// Heyting implication through ∀: U → W = ∀_m(m*(W)) for m the mono of U.
pub fn implication_via_forall<C: CohCat>(c: &C, a: &C::Obj, u: Set, w: Set) -> Option<Set> {
    let m = c.sub_object(a, u);
    c.forall(&m, c.pullback_sub(&m, w))
}

pub struct IdFunctor<'a, C>(pub &'a C);

impl<C: CohCat> Functor for IdFunctor<'_, C> {
    type Src = C;
    type Tgt = C;

    fn src(&self) -> &C {
        self.0
    }

    fn tgt(&self) -> &C {
        self.0
    }

    fn obj(&self, a: &C::Obj) -> C::Obj {
        a.clone()
    }

    fn mor(&self, f: &C::Mor) -> C::Mor {
        f.clone()
    }

    fn sub(&self, _a: &C::Obj, u: Set) -> Set {
        u
    }
}

/// Every set to a fixed set and every map to its identity.
pub struct ConstFunctor<'a> {
    pub src: &'a FinSetCat,
    pub tgt: &'a FinSetCat,
    pub value: usize,
}

impl Functor for ConstFunctor<'_> {
    type Src = FinSetCat;
    type Tgt = FinSetCat;

    fn src(&self) -> &FinSetCat {
        self.src
    }

    fn tgt(&self) -> &FinSetCat {
        self.tgt
    }

    fn obj(&self, _a: &usize) -> usize {
        self.value
    }

    fn mor(&self, _f: &Func) -> Func {
        self.tgt.id(&self.value)
    }
}

/// X ↦ X × K, f ↦ f × id.
pub struct TimesFunctor<'a> {
    pub cat: &'a FinSetCat,
    pub k: usize,
}

impl Functor for TimesFunctor<'_> {
    type Src = FinSetCat;
    type Tgt = FinSetCat;

    fn src(&self) -> &FinSetCat {
        self.cat
    }

    fn tgt(&self) -> &FinSetCat {
        self.cat
    }

    fn obj(&self, a: &usize) -> usize {
        a * self.k
    }

    fn mor(&self, f: &Func) -> Func {
        self.cat.times(f, &self.cat.id(&self.k))
    }
}

/// The thin functor L → K induced by a lattice hom.
pub struct LatFunctor<'a> {
    pub src: &'a LatCat,
    pub tgt: &'a LatCat,
    pub map: Vec<usize>,
}

impl Functor for LatFunctor<'_> {
    type Src = LatCat;
    type Tgt = LatCat;

    fn src(&self) -> &LatCat {
        self.src
    }

    fn tgt(&self) -> &LatCat {
        self.tgt
    }

    fn obj(&self, a: &usize) -> usize {
        self.map[*a]
    }

    fn mor(&self, f: &(usize, usize)) -> (usize, usize) {
        (self.map[f.0], self.map[f.1])
    }
}

/// The full set of subsets of n points as a bitmask list, for oracles.
pub fn powerset(n: usize) -> Vec<Set> {
    (0..=full(n)).collect()
}

/// JSON category fixture. A set fragment lists its objects as element
/// arrays; every function between them is a morphism and limits are the
/// cartesian ones. A lattice fragment is the lattice as a thin category.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CategoryFile {
    Sets { objects: Vec<Vec<String>> },
    Lattice { lattice: crate::lattice::LatticeFile },
}

#[derive(Debug, Clone)]
pub enum CategoryFixture {
    Sets(FinSetCat),
    Lattice(LatCat),
}

impl CategoryFile {
    pub fn parse(text: &str) -> Result<CategoryFixture, String> {
        let f: CategoryFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match f {
            CategoryFile::Sets { objects } => {
                for o in &objects {
                    let mut names = o.clone();
                    names.sort();
                    names.dedup();
                    if names.len() != o.len() {
                        return Err(format!("object {o:?} repeats an element"));
                    }
                }
                Ok(CategoryFixture::Sets(FinSetCat::new(objects.iter().map(Vec::len).collect())))
            }
            CategoryFile::Lattice { lattice } => Ok(CategoryFixture::Lattice(LatCat::new(lattice.build().map_err(|e| e.to_string())?))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finset_subobject_lattices() {
        let c = FinSetCat::new(vec![0, 1, 2]);
        assert_eq!(c.sub(&0).elements().len(), 1);
        assert_eq!(c.sub(&1).elements().len(), 2);
        let (t, _) = c.sub(&2).to_table();
        assert!(t.iso(&FinDistLattice::boolean(2)).is_some());
    }

    #[test]
    fn pullback_and_image_examples() {
        let c = FinSetCat::new(vec![1, 2, 3]);
        let id = c.id(&3);
        for u in powerset(3) {
            assert_eq!(c.image(&id, u), u);
            assert_eq!(c.pullback_sub(&id, u), u);
        }
        let k = Func::constant(3, 2, 1);
        for u in powerset(3).into_iter().filter(|&u| u != 0) {
            assert_eq!(c.image(&k, u), 0b10);
        }
        let incl = c.sub_object(&3, 0b101);
        assert_eq!(c.image(&incl, 0b11), 0b101);
        assert_eq!(c.image(&incl, 0b10), 0b100);
    }

    #[test]
    fn forall_examples() {
        let c = FinSetCat::new(vec![1, 2]);
        let s = Func::constant(2, 1, 0);
        assert_eq!(c.forall(&s, 0b01), Some(0));
        assert_eq!(c.forall(&s, 0b11), Some(0b1));
        let id = c.id(&2);
        assert_eq!(c.forall(&id, 0b10), Some(0b10));
    }

    #[test]
    fn finset_laws_hold() {
        let c = FinSetCat::new(vec![0, 1, 2, 3]);
        let r = check_coherent_category(&c, false);
        assert!(r.pass(), "{:?}", r.failures());
        let c = FinSetCat::new(vec![1, 2]);
        let r = check_coherent_category(&c, true);
        assert!(r.pass(), "{:?}", r.failures());
    }

    #[test]
    fn implication_is_pointwise() {
        let c = FinSetCat::new(vec![3]);
        for u in powerset(3) {
            for w in powerset(3) {
                let pointwise = (!u | w) & full(3);
                assert_eq!(implication_via_forall(&c, &3, u, w), Some(pointwise));
            }
        }
    }

    #[test]
    fn functor_checks() {
        let c = FinSetCat::new(vec![0, 1, 2]);
        let id = IdFunctor(&c);
        assert!(check_heyting_functor(&id).pass());
        assert!(check_conservative(&id).is_ok());
        let one = FinSetCat::new(vec![1]);
        let k = ConstFunctor { src: &c, tgt: &one, value: 1 };
        assert!(check_conservative(&k).is_err());
        let t1 = TimesFunctor { cat: &c, k: 1 };
        assert!(check_coherent_functor(&t1).pass());
        // X × 2 sends 1 to 2, which is not terminal
        let t2 = TimesFunctor { cat: &c, k: 2 };
        let r = check_coherent_functor(&t2);
        assert!(!r.passed("terminal") && r.passed("images") && r.passed("pullbacks"));
    }

    #[test]
    fn lattice_category_laws() {
        for l in [FinDistLattice::chain(3), FinDistLattice::diamond(), FinDistLattice::boolean(3)] {
            let c = LatCat::new(l);
            let r = check_coherent_category(&c, true);
            assert!(r.pass(), "{:?}", r.failures());
        }
    }

    #[test]
    fn lattice_functors() {
        let c3 = LatCat::new(FinDistLattice::chain(3));
        let b4 = LatCat::new(FinDistLattice::boolean(2));
        let f = LatFunctor { src: &c3, tgt: &b4, map: vec![0, 1, 3] };
        assert!(check_coherent_functor(&f).pass());
        assert!(check_conservative(&f).is_ok());
        assert!(!check_heyting_functor(&f).pass());
        let g = LatFunctor { src: &b4, tgt: &c3, map: vec![0, 2, 0, 2] };
        assert!(check_heyting_functor(&g).pass());
        assert!(check_conservative(&g).is_err());
    }
}
