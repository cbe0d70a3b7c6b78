//! A family S of models as interpretations of the distilled category C, the
//! conditions (M1)–(M3), and the evaluation functor ev : C → Set^S.
//!
//! ev(A) is the presheaf M ↦ M(A) on S; its subobjects are the sets H of
//! points (M, a) closed under every family homomorphism, so Sub(ev A) is the
//! downset lattice of the points ordered by (M, a) ≥ (N, h(a)).
//!
//! Every fiber is finite, so its canonical extension is the downset lattice
//! of its join irreducibles, and σ̄ is fixed by sending ↓g to σ(g).

use super::distill::{Ctx, Distilled, Subst};
use super::models::{all_tuples, Family};
use crate::canext::{canonical_extension, comjpm_decide, FiberExt, Square};
use crate::fincat::Category;
use crate::hyperdoctrine::{Hyperdoctrine, ELEMENT_CAP};
use crate::lattice::{bit, members, subset, DownLat, Set, MAX_POINTS};
use crate::report::Report;
use std::collections::HashMap;

/// Above this many elements the ∃ square is decided by its principal
/// elements only.
pub const COMJPM_TABLE_CAP: usize = 512;

/// Replaces M(U) for one member and one element U.
#[derive(Debug, Clone)]
pub struct Twist {
    pub member: usize,
    pub ctx: Ctx,
    pub elem: Set,
    pub tuples: Vec<Vec<usize>>,
}

/// t_A(a, M): the elements of Sub_C(A) whose interpretation contains a.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSet {
    pub member: usize,
    pub ctx: Ctx,
    pub tuple: Vec<usize>,
    pub elems: Vec<Set>,
}

#[derive(Debug, Clone)]
struct EvCtx {
    points: Vec<(usize, Vec<usize>)>,
    index: HashMap<(usize, Vec<usize>), usize>,
    lat: DownLat,
    fiber: DownLat,
    fext: FiberExt,
    elems: Vec<Set>,
    complete: bool,
}

pub struct Evaluation<'a> {
    pub c: &'a Distilled,
    pub s: &'a Family,
    /// reference model of each member
    pub refs: Vec<usize>,
    pub twists: Vec<Twist>,
    data: HashMap<Ctx, EvCtx>,
}

fn or_all(it: impl IntoIterator<Item = Set>) -> Set {
    it.into_iter().fold(0, |a, b| a | b)
}

impl<'a> Evaluation<'a> {
    /// Members must occur verbatim in the reference family of `c`.
    pub fn new(c: &'a Distilled, s: &'a Family) -> Result<Self, String> {
        let refs = s
            .models
            .iter()
            .enumerate()
            .map(|(i, m)| c.model_index(m).ok_or_else(|| format!("{} is not a reference model", s.names[i])))
            .collect::<Result<Vec<_>, _>>()?;
        let mut data = HashMap::new();
        for a in c.base.objects() {
            let mut points = Vec::new();
            for (i, m) in s.models.iter().enumerate() {
                let dims: Vec<usize> = a.iter().map(|&x| m.sizes[x]).collect();
                if a.is_empty() {
                    points.push((i, Vec::new()));
                } else {
                    points.extend(all_tuples(&dims).into_iter().map(|t| (i, t)));
                }
            }
            if points.len() > MAX_POINTS {
                return Err(format!("ev of a context has {} points, more than {MAX_POINTS}", points.len()));
            }
            let index: HashMap<_, _> = points.iter().cloned().enumerate().map(|(n, p)| (p, n)).collect();
            let below = points
                .iter()
                .map(|(i, t)| {
                    let mut b = 0;
                    for j in 0..s.len() {
                        for h in s.homs(*i, j) {
                            b |= bit(index[&(j, h.on_tuple(&a, t))]);
                        }
                    }
                    b
                })
                .collect();
            let fiber = c.fiber(&a);
            let (mut elems, complete) = fiber.elements_upto(ELEMENT_CAP);
            let fext = FiberExt::new(&fiber);
            // a capped listing still carries every generator, so each prime
            // filter ↑g contains its least element
            for u in fext.gens.iter().copied().chain([fiber.bot(), fiber.top()]) {
                if !elems.contains(&u) {
                    elems.push(u);
                }
            }
            data.insert(a, EvCtx { points, index, lat: DownLat::new(below), fiber, fext, elems, complete });
        }
        Ok(Evaluation { c, s, refs, twists: Vec::new(), data })
    }

    pub fn with_twist(mut self, t: Twist) -> Self {
        self.twists.push(t);
        self
    }

    fn d(&self, a: &Ctx) -> &EvCtx {
        self.data.get(a).unwrap_or_else(|| panic!("context {a:?} is not declared"))
    }

    pub fn contexts(&self) -> Vec<Ctx> {
        self.c.base.objects()
    }

    /// Points (member, tuple) of ev(A).
    pub fn points(&self, a: &Ctx) -> &[(usize, Vec<usize>)] {
        &self.d(a).points
    }

    /// Sub(ev A).
    pub fn sub_ev(&self, a: &Ctx) -> &DownLat {
        &self.d(a).lat
    }

    pub fn fiber_ext(&self, a: &Ctx) -> &FiberExt {
        &self.d(a).fext
    }

    fn member_points(&self, a: &Ctx, m: usize) -> Set {
        let d = self.d(a);
        (0..d.points.len()).filter(|&n| d.points[n].0 == m).fold(0, |s, n| s | bit(n))
    }

    /// M(U) for member m, as a set of points of ev(A).
    pub fn ext(&self, a: &Ctx, m: usize, u: Set) -> Set {
        let d = self.d(a);
        if let Some(t) = self.twists.iter().rev().find(|t| t.member == m && &t.ctx == a && t.elem == u) {
            return t.tuples.iter().fold(0, |s, x| s | bit(d.index[&(m, x.clone())]));
        }
        self.c.extension(a, self.refs[m], u).into_iter().fold(0, |s, x| s | bit(d.index[&(m, x)]))
    }

    /// σ_A(U) = ev(U), the union of the M(U).
    pub fn sigma(&self, a: &Ctx, u: Set) -> Set {
        or_all((0..self.s.len()).map(|m| self.ext(a, m, u)))
    }

    /// σ̄_A on the canonical extension, w a downset of join irreducibles.
    pub fn sigma_bar(&self, a: &Ctx, w: Set) -> Set {
        let g = &self.d(a).fext.gens;
        or_all(members(w).map(|i| self.sigma(a, g[i])))
    }

    fn point_map(&self, f: &Subst, p: usize) -> usize {
        let (s, t) = (self.d(&f.dom), self.d(&f.cod));
        let (m, tup) = &s.points[p];
        t.index[&(*m, f.on_tuple(tup))]
    }

    /// Componentwise direct image along ev(f).
    pub fn image(&self, f: &Subst, h: Set) -> Set {
        members(h).fold(0, |s, p| s | bit(self.point_map(f, p)))
    }

    pub fn preimage(&self, f: &Subst, h: Set) -> Set {
        (0..self.d(&f.dom).points.len()).filter(|&p| h & bit(self.point_map(f, p)) != 0).fold(0, |s, p| s | bit(p))
    }

    /// H is a subfunctor iff every family hom maps H(M) into H(N).
    pub fn is_subfunctor(&self, a: &Ctx, h: Set) -> bool {
        let d = self.d(a);
        members(h).all(|p| {
            let (i, t) = &d.points[p];
            (0..self.s.len()).all(|j| self.s.homs(*i, j).iter().all(|hm| h & bit(d.index[&(j, hm.on_tuple(a, t))]) != 0))
        })
    }

    fn declared_maps(&self) -> Vec<Subst> {
        let obs = self.contexts();
        let mut v = Vec::new();
        for a in &obs {
            for b in &obs {
                v.extend(self.c.base.hom(a, b));
            }
        }
        v
    }

    fn describe(&self, a: &Ctx, p: usize) -> String {
        let (m, t) = &self.d(a).points[p];
        format!("{:?} in {}", t, self.s.names[*m])
    }

    fn first(&self, a: &Ctx, s: Set) -> String {
        members(s).next().map(|p| self.describe(a, p)).unwrap_or_else(|| "nothing".into())
    }

    /// The types realized by a member in context A.
    pub fn types(&self, m: usize, a: &Ctx) -> Vec<TypeSet> {
        let d = self.d(a);
        let exts: Vec<Set> = d.elems.iter().map(|&u| self.ext(a, m, u)).collect();
        members(self.member_points(a, m))
            .map(|p| TypeSet {
                member: m,
                ctx: a.clone(),
                tuple: d.points[p].1.clone(),
                elems: d.elems.iter().zip(&exts).filter(|(_, &e)| e & bit(p) != 0).map(|(&u, _)| u).collect(),
            })
            .collect()
    }

    /// Upward closed, closed under meets, proper and prime, decided on the
    /// listed elements of the fiber.
    pub fn primality_check(&self, t: &TypeSet) -> bool {
        let d = self.d(&t.ctx);
        let inside = |u: Set| t.elems.contains(&u);
        let l = &d.fiber;
        if !inside(l.top()) || inside(l.bot()) {
            return false;
        }
        t.elems.iter().all(|&u| d.elems.iter().all(|&v| !l.leq(u, v) || inside(v)))
            && t.elems.iter().all(|&u| t.elems.iter().all(|&v| inside(l.meet(u, v))))
            && d.elems.iter().all(|&u| {
                d.elems.iter().all(|&v| !inside(l.join(u, v)) || inside(u) || inside(v))
            })
    }

    /// Failures of ∃_{Mα}(⋀ M[ρ]) = ⋀ ∃_{Mα}(M[ρ]) for member m.
    fn pmodel_meet_failures(&self, m: usize) -> Vec<String> {
        let mut out = Vec::new();
        for f in self.declared_maps() {
            let d = self.d(&f.dom);
            let cod_all = self.member_points(&f.cod, m);
            for (g, &gen) in d.fext.gens.iter().enumerate() {
                let rho: Vec<Set> = d.elems.iter().copied().filter(|&u| subset(gen, u)).collect();
                let meet = rho.iter().fold(self.member_points(&f.dom, m), |s, &u| s & self.ext(&f.dom, m, u));
                let lhs = self.image(&f, meet);
                let rhs = rho.iter().fold(cod_all, |s, &u| s & self.image(&f, self.ext(&f.dom, m, u)));
                if lhs != rhs {
                    out.push(format!(
                        "{}: along {:?} at the prime filter of {}: {} is in the meet of images only",
                        self.s.names[m],
                        f.map,
                        self.c.describe_class(&f.dom, g),
                        self.first(&f.cod, rhs & !lhs)
                    ));
                }
            }
        }
        out
    }

    /// Lattice, substitution and ∃ laws of one member's interpretation.
    fn coherence_failures(&self, m: usize) -> Vec<String> {
        let mut out = Vec::new();
        let name = &self.s.names[m];
        for a in self.contexts() {
            let d = self.d(&a);
            let all = self.member_points(&a, m);
            let jext: Vec<Set> = d.fext.gens.iter().map(|&g| self.ext(&a, m, g)).collect();
            if self.ext(&a, m, d.fiber.top()) != all {
                out.push(format!("{name}: top of {a:?} is not everything"));
            }
            for &u in &d.elems {
                let via = or_all(members(u).map(|c| jext[c]));
                if self.ext(&a, m, u) != via {
                    out.push(format!("{name}: {a:?} element {u:#x} is not the union of its irreducibles"));
                }
            }
            for (i, &gi) in d.fext.gens.iter().enumerate() {
                for (j, &gj) in d.fext.gens.iter().enumerate().skip(i) {
                    if self.ext(&a, m, gi & gj) != jext[i] & jext[j] {
                        out.push(format!("{name}: {a:?} meet of irreducibles {i} and {j} not preserved"));
                    }
                }
            }
        }
        for f in self.declared_maps() {
            let (s, t) = (self.d(&f.dom), self.d(&f.cod));
            let mut tests: Vec<Set> = t.fext.gens.clone();
            tests.push(t.fiber.top());
            for u in tests {
                let lhs = self.ext(&f.dom, m, self.c.subst(&f, u));
                let rhs = self.preimage(&f, self.ext(&f.cod, m, u)) & self.member_points(&f.dom, m);
                if lhs != rhs {
                    out.push(format!("{name}: substitution along {:?} not preserved", f.map));
                }
            }
            for &u in &s.fext.gens {
                if self.ext(&f.cod, m, self.c.exists(&f, u)) != self.image(&f, self.ext(&f.dom, m, u)) {
                    out.push(format!("{name}: ∃ along {:?} not preserved", f.map));
                }
            }
        }
        out
    }

    /// (M1) each member is a p-model: a coherent interpretation of C
    /// commuting images with meets of prime filters.
    pub fn check_m1(&self) -> Report {
        let mut r = Report::new();
        for m in 0..self.s.len() {
            let mut f = self.coherence_failures(m);
            f.extend(self.pmodel_meet_failures(m));
            r.push(&format!("M1 {}", self.s.names[m]), if f.is_empty() { Ok(()) } else { Err(f.join("; ")) });
        }
        if !self.data.values().all(|d| d.complete) {
            r.note("fiber elements were capped; joins checked on the listed ones");
        }
        r.push("M1", if r.pass() { Ok(()) } else { Err(r.failures().iter().filter_map(|c| c.witness.clone()).collect::<Vec<_>>().join("; ")) });
        r
    }

    /// Prime filters of Sub_C(A) with no realizing point, by generator.
    pub fn unrealized(&self, a: &Ctx) -> Vec<usize> {
        let d = self.d(a);
        let mut realized = vec![false; d.fext.gens.len()];
        for m in 0..self.s.len() {
            for t in self.types(m, a) {
                for (g, &gen) in d.fext.gens.iter().enumerate() {
                    let rho: Vec<Set> = d.elems.iter().copied().filter(|&u| subset(gen, u)).collect();
                    if rho == t.elems {
                        realized[g] = true;
                    }
                }
            }
        }
        (0..realized.len()).filter(|&g| !realized[g]).collect()
    }

    /// (M2) every prime filter of every Sub_C(A) is some t_A(a, M).
    pub fn check_m2(&self) -> Report {
        let mut r = Report::new();
        let mut all = Vec::new();
        for a in self.contexts() {
            let miss = self.unrealized(&a);
            let w: Vec<String> = miss.iter().map(|&g| format!("{a:?}: {}", self.c.describe_class(&a, g))).collect();
            r.push(&format!("M2 {a:?}"), if w.is_empty() { Ok(()) } else { Err(w.join("; ")) });
            all.extend(w);
        }
        r.push("M2", if all.is_empty() { Ok(()) } else { Err(format!("unrealized prime filters: {}", all.join("; "))) });
        r
    }

    /// (M3) b ∈ ⋀ N[t_A(a, M)] forces a homomorphism h : M → N with h(a) = b.
    pub fn check_m3(&self) -> Report {
        let mut r = Report::new();
        let mut bad = Vec::new();
        for a in self.contexts() {
            let d = self.d(&a);
            for m in 0..self.s.len() {
                for t in self.types(m, &a) {
                    for n in 0..self.s.len() {
                        let meet = t.elems.iter().fold(self.member_points(&a, n), |s, &u| s & self.ext(&a, n, u));
                        for q in members(meet) {
                            let b = &d.points[q].1;
                            if !self.s.homs(m, n).iter().any(|h| &h.on_tuple(&a, &t.tuple) == b) {
                                bad.push(format!(
                                    "{:?} in {} to {:?} in {}",
                                    t.tuple, self.s.names[m], b, self.s.names[n]
                                ));
                            }
                        }
                    }
                }
            }
        }
        r.push("M3", if bad.is_empty() { Ok(()) } else { Err(format!("no homomorphism: {}", bad.join("; "))) });
        r
    }

    /// ev preserves meets of prime filters along every declared map, i.e.
    /// the two sides agree at each member after componentwise images.
    pub fn ev_pmodel_check(&self) -> Result<(), String> {
        let f: Vec<String> = (0..self.s.len()).flat_map(|m| self.pmodel_meet_failures(m)).collect();
        if f.is_empty() {
            Ok(())
        } else {
            Err(f.join("; "))
        }
    }

    /// Whether each σ_A reflects order; for join preserving σ it suffices
    /// that σ(g) escapes the largest element not above g.
    pub fn conservativity_check(&self) -> Result<(), String> {
        for a in self.contexts() {
            let d = self.d(&a);
            for (g, &gen) in d.fext.gens.iter().enumerate() {
                let rest = or_all(d.fext.gens.iter().copied().filter(|&h| !subset(gen, h)));
                if subset(self.sigma(&a, gen), self.sigma(&a, rest)) {
                    return Err(format!("{a:?}: {} is not reflected", self.c.describe_class(&a, g)));
                }
            }
        }
        Ok(())
    }

    fn embedding(&self) -> Result<(), String> {
        for a in self.contexts() {
            let x = &self.d(&a).fext.ext;
            for g in 0..x.points() {
                let up = (0..x.points()).filter(|&h| x.below(h) & bit(g) != 0).fold(0, |s, h| s | bit(h));
                let w = x.point_set() & !up;
                if self.sigma_bar(&a, x.below(g)) & !self.sigma_bar(&a, w) == 0 {
                    return Err(format!("{a:?}: the prime filter of {} is not realized", self.c.describe_class(&a, g)));
                }
            }
        }
        Ok(())
    }

    fn surjectivity(&self) -> Result<(), String> {
        for a in self.contexts() {
            let d = self.d(&a);
            for p in 0..d.points.len() {
                let h = d.lat.below(p);
                // u = ⋁ x_{N,a} over the points of H, x_{N,a} the generator of its type
                let u = members(h).fold(0, |s, q| {
                    let (m, t) = &d.points[q];
                    s | d.fext.ext.below(self.c.class_of(&a, self.refs[*m], t))
                });
                let got = self.sigma_bar(&a, u);
                if got != h {
                    return Err(format!(
                        "{a:?}: the subfunctor generated by {} is not σ̄ of a join of types ({} differs)",
                        self.describe(&a, p),
                        self.first(&a, got ^ h)
                    ));
                }
            }
        }
        Ok(())
    }

    fn naturality(&self) -> Result<(), String> {
        for f in self.declared_maps() {
            let (s, t) = (self.d(&f.dom), self.d(&f.cod));
            for g in 0..t.fext.ext.points() {
                let w = t.fext.ext.below(g);
                let pulled = t.fext.extend(&s.fext, |x| self.c.subst(&f, x), w);
                if self.sigma_bar(&f.dom, pulled) != self.preimage(&f, self.sigma_bar(&f.cod, w)) {
                    return Err(format!("σ̄ does not commute with substitution along {:?}", f.map));
                }
            }
        }
        Ok(())
    }

    fn frame_laws(&self) -> Result<(), String> {
        for a in self.contexts() {
            let d = self.d(&a);
            let x = &d.fext.ext;
            if self.sigma_bar(&a, 0) != 0 || self.sigma_bar(&a, x.top()) != d.lat.point_set() {
                return Err(format!("{a:?}: σ̄ misses a bound"));
            }
            for g in 0..x.points() {
                if !self.is_subfunctor(&a, self.sigma_bar(&a, x.below(g))) {
                    return Err(format!("{a:?}: σ̄ of a generator is not a subfunctor"));
                }
                for h in g..x.points() {
                    let lhs = self.sigma_bar(&a, x.below(g) & x.below(h));
                    if lhs != self.sigma_bar(&a, x.below(g)) & self.sigma_bar(&a, x.below(h)) {
                        return Err(format!("{a:?}: σ̄ does not preserve the meet of generators {g} and {h}"));
                    }
                }
            }
            for &u in &d.elems {
                if self.sigma_bar(&a, d.fext.embed(u)) != self.sigma(&a, u) {
                    return Err(format!("{a:?}: σ̄ does not restrict to σ at {u:#x}"));
                }
            }
        }
        Ok(())
    }

    fn exists_preserved(&self, r: &mut Report) -> Result<(), String> {
        for f in self.declared_maps() {
            let (s, t) = (self.d(&f.dom), self.d(&f.cod));
            for g in 0..s.fext.ext.points() {
                let w = s.fext.ext.below(g);
                let ex = s.fext.extend(&t.fext, |x| self.c.exists(&f, x), w);
                if self.sigma_bar(&f.cod, ex) != self.image(&f, self.sigma_bar(&f.dom, w)) {
                    return Err(format!("σ̄ does not commute with ∃ along {:?}", f.map));
                }
            }
            match self.exists_square(&f) {
                Some(Ok(true)) => {}
                Some(Ok(false)) => return Err(format!("the ∃ square along {:?} fails its prime filter condition", f.map)),
                Some(Err(e)) => return Err(e),
                None => r.note(format!("∃ square along {:?} decided on generators only", f.map)),
            }
        }
        Ok(())
    }

    /// The square σ_B ∘ ∃_α = ∃_{ev α} ∘ σ_A handed to the explicit
    /// decision procedure, when the tables are small enough.
    fn exists_square(&self, f: &Subst) -> Option<Result<bool, String>> {
        let (s, t) = (self.d(&f.dom), self.d(&f.cod));
        let small = |l: &DownLat| l.elements_capped(COMJPM_TABLE_CAP).is_some();
        if !(small(&s.fiber) && small(&t.fiber) && small(&s.lat) && small(&t.lat)) {
            return None;
        }
        let (l1, e1) = s.fiber.to_table();
        let (l2, e2) = t.fiber.to_table();
        let (k1, q1) = s.lat.to_table();
        let (k2, q2) = t.lat.to_table();
        let pos = |v: &[Set], x: Set| v.iter().position(|&y| y == x).expect("closed under the map");
        let fm: Vec<usize> = e1.iter().map(|&u| pos(&e2, self.c.exists(f, u))).collect();
        let gm: Vec<usize> = q1.iter().map(|&h| pos(&q2, self.image(f, h))).collect();
        let h1: Vec<usize> = e1.iter().map(|&u| pos(&q1, self.sigma(&f.dom, u))).collect();
        let h2: Vec<usize> = e2.iter().map(|&u| pos(&q2, self.sigma(&f.cod, u))).collect();
        let (c1, c2) = (canonical_extension(&l1), canonical_extension(&l2));
        let sq = Square { l1: &c1, l2: &c2, k1: &k1, k2: &k2, f: &fm, g: &gm, h1: &h1, h2: &h2 };
        Some(comjpm_decide(&sq).map(|o| o.condition2).map_err(|e| e.to_string()))
    }

    /// The σ̄ checks. Refuses unless (M1) and (M3) hold; (M2) is reported
    /// alongside the embedding check it feeds.
    pub fn sigma_bar_check(&self) -> Result<Report, String> {
        let m1 = self.check_m1();
        if !m1.passed("M1") {
            return Err(format!("M1 failed: {}", m1.get("M1").unwrap().witness.clone().unwrap_or_default()));
        }
        let m3 = self.check_m3();
        if !m3.passed("M3") {
            return Err(format!("M3 failed: {}", m3.get("M3").unwrap().witness.clone().unwrap_or_default()));
        }
        let mut r = Report::new();
        r.push("M1", Ok(()));
        let m2 = self.check_m2();
        r.push("M2", m2.get("M2").map(|c| if c.pass { Ok(()) } else { Err(c.witness.clone().unwrap_or_default()) }).unwrap());
        r.push("M3", Ok(()));
        r.push("embedding", self.embedding());
        r.push("surjectivity", self.surjectivity());
        r.push("naturality", self.naturality());
        r.push("frame", self.frame_laws());
        let ex = self.exists_preserved(&mut r);
        r.push("exists", ex);
        Ok(r)
    }

    /// A twist on member m in a one-variable context that keeps every
    /// element of some prime filter inhabited while emptying their meet.
    pub fn non_pmodel_twist(&self, m: usize) -> Option<Twist> {
        for a in self.contexts().into_iter().filter(|a| a.len() == 1) {
            let d = self.d(&a);
            for &gen in &d.fext.gens {
                if self.ext(&a, m, gen) == 0 {
                    continue;
                }
                for &u in d.elems.iter().filter(|&&u| subset(gen, u) && u != gen) {
                    let outside = self.member_points(&a, m) & !self.ext(&a, m, u);
                    if let Some(p) = members(outside).next() {
                        return Some(Twist { member: m, ctx: a.clone(), elem: gen, tuples: vec![d.points[p].1.clone()] });
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::distill::DEFAULT_ARITY;
    use crate::logic::models::flatten;
    use crate::logic::syntax::parse_theory;

    fn setup(src: &str, max: usize) -> Distilled {
        let fam = Family::exhaustive(flatten(&parse_theory(src).unwrap()), max).unwrap();
        Distilled::new(fam, DEFAULT_ARITY)
    }

    const SUCC: &str = "sort V; func s : V -> V;";

    #[test]
    fn exhaustive_family_passes_everything() {
        let c = setup(SUCC, 3);
        let ev = Evaluation::new(&c, &c.family).unwrap();
        let r = ev.sigma_bar_check().unwrap();
        assert!(r.pass(), "{:?}", r.failures());
        assert!(ev.conservativity_check().is_ok());
        assert!(ev.ev_pmodel_check().is_ok());
    }

    #[test]
    fn types_are_prime_filters() {
        let c = setup("sort V; rel R : V, V;", 2);
        let ev = Evaluation::new(&c, &c.family).unwrap();
        for a in ev.contexts() {
            for m in 0..ev.s.len() {
                for t in ev.types(m, &a) {
                    assert!(ev.primality_check(&t));
                }
            }
        }
    }

    #[test]
    fn subfunctors_match_hom_closure() {
        let c = setup(SUCC, 2);
        let ev = Evaluation::new(&c, &c.family).unwrap();
        let a = vec![0];
        let lat = ev.sub_ev(&a);
        let n = lat.points();
        assert!(n <= 12);
        for h in 0..(1u128 << n) {
            assert_eq!(ev.is_subfunctor(&a, h), lat.is_elem(h));
        }
    }

    #[test]
    fn removing_the_three_cycle_breaks_m2_and_embedding() {
        let c = setup(SUCC, 3);
        let cyc = (0..c.family.len())
            .find(|&i| {
                let m = &c.family.models[i];
                m.sizes == vec![3] && (0..3).all(|x| m.apply(0, &[x]) != x && m.apply(0, &[m.apply(0, &[m.apply(0, &[x])])]) == x)
            })
            .unwrap();
        let s = c.family.without(cyc);
        let ev = Evaluation::new(&c, &s).unwrap();
        let r = ev.sigma_bar_check().unwrap();
        let failed: Vec<&str> = r.failures().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["M2", "embedding"]);
        assert!(r.get("embedding").unwrap().witness.as_deref().unwrap().contains("not realized"));
        assert!(ev.conservativity_check().is_err());
    }

    #[test]
    fn empty_family_fails_m2() {
        let c = setup(SUCC, 1);
        let s = c.family.restrict(&[]);
        let ev = Evaluation::new(&c, &s).unwrap();
        assert!(!ev.check_m2().passed("M2"));
        assert!(ev.check_m1().passed("M1"));
    }

    #[test]
    fn injected_non_pmodel_is_caught() {
        let c = setup(SUCC, 3);
        let ev = Evaluation::new(&c, &c.family).unwrap();
        let m = (0..ev.s.len()).find(|&m| ev.non_pmodel_twist(m).is_some()).unwrap();
        let tw = ev.non_pmodel_twist(m).unwrap();
        let ev = Evaluation::new(&c, &c.family).unwrap().with_twist(tw);
        let e = ev.ev_pmodel_check().unwrap_err();
        assert!(e.contains(&c.family.names[m]));
        assert!(ev.sigma_bar_check().unwrap_err().starts_with("M1"));
    }

    #[test]
    fn single_model_m3_by_endomorphisms() {
        let c = setup(SUCC, 2);
        // brute force: in one model, b has a's type iff some endomorphism sends a to b
        for i in 0..c.family.len() {
            let s = c.family.restrict(&[i]);
            let ev = Evaluation::new(&c, &s).unwrap();
            assert!(ev.check_m3().passed("M3"));
        }
    }
}
