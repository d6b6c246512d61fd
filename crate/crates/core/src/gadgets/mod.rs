//! Verified gadgets: the closed-form constructions, chains of smaller
//! gadgets, and a per-family library keyed by spec.

mod io;

use std::collections::BTreeMap;
use std::fmt;

pub use io::{load_gadget, load_library, parse_gadget, render_gadget, save_gadget};

use crate::encode::{GadgetProblem, GadgetSpec};
use crate::error::{Error, Result};
use crate::mapping::{PartialSignMapping, RSubset, Sign};
use crate::oracle::{verify_gadget, VerifyReport};
use crate::patterns::Family;

/// A sub-gadget placed on some elements of its parent. Element `i` of the
/// part (1-based) is `elements[i - 1]` of the parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub spec: GadgetSpec,
    pub elements: Vec<usize>,
}

/// A partial sign mapping that realises a spec under a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    spec: GadgetSpec,
    family: Family,
    entries: PartialSignMapping,
    components: Vec<Component>,
    /// First element of each variable window, in role order.
    starts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetKind {
    /// `PG(X2 from -> X1 to)`.
    Propagator {
        from: Sign,
        to: Sign,
    },
    Clause([Sign; 3]),
}

impl Gadget {
    /// Checks shape and avoidance always, and the truth table by exhaustive
    /// completion in debug builds.
    pub fn new(
        spec: GadgetSpec,
        family: Family,
        entries: PartialSignMapping,
        components: Vec<Component>,
    ) -> Result<Gadget> {
        let starts = spec.default_starts(entries.n(), entries.r())?;
        let g = Gadget::unchecked(spec, family, entries, components, starts)?;
        if cfg!(debug_assertions) {
            g.require_valid()?;
        }
        Ok(g)
    }

    /// Like [`Gadget::new`] but always runs the oracle.
    pub fn verified(
        spec: GadgetSpec,
        family: Family,
        entries: PartialSignMapping,
        components: Vec<Component>,
    ) -> Result<Gadget> {
        let starts = spec.default_starts(entries.n(), entries.r())?;
        let g = Gadget::unchecked(spec, family, entries, components, starts)?;
        g.require_valid()?;
        Ok(g)
    }

    /// A gadget whose windows start at `starts`; always runs the oracle.
    pub fn verified_at(
        spec: GadgetSpec,
        family: Family,
        entries: PartialSignMapping,
        components: Vec<Component>,
        starts: &[usize],
    ) -> Result<Gadget> {
        let g = Gadget::unchecked(spec, family, entries, components, starts.to_vec())?;
        g.require_valid()?;
        Ok(g)
    }

    fn unchecked(
        spec: GadgetSpec,
        family: Family,
        entries: PartialSignMapping,
        components: Vec<Component>,
        starts: Vec<usize>,
    ) -> Result<Gadget> {
        let problem = GadgetProblem::from_spec_at(spec, entries.n(), family.clone(), &starts)?;
        problem.check_candidate(&entries)?;
        if !entries.is_avoiding(&family)? {
            return Err(Error::Construction(format!(
                "{spec} entries contain a forbidden pattern"
            )));
        }
        for c in &components {
            let ok = c.elements.windows(2).all(|w| w[0] < w[1])
                && c.elements.iter().all(|&e| e >= 1 && e <= entries.n())
                && c.elements.len() >= c.spec.min_n(entries.r());
            if !ok {
                return Err(Error::Construction(format!(
                    "component {} has bad elements {:?}",
                    c.spec, c.elements
                )));
            }
        }
        Ok(Gadget {
            spec,
            family,
            entries,
            components,
            starts,
        })
    }

    fn require_valid(&self) -> Result<()> {
        let report = self.verify()?;
        if !report.passed() {
            return Err(Error::Verification(format!(
                "{} on {} elements for {{{}}} fails {} assignment(s)",
                self.spec,
                self.n(),
                self.family,
                report.failures().count()
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> GadgetSpec {
        self.spec
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn entries(&self) -> &PartialSignMapping {
        &self.entries
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn n(&self) -> usize {
        self.entries.n()
    }

    pub fn r(&self) -> usize {
        self.entries.r()
    }

    pub fn kind(&self) -> GadgetKind {
        match self.spec {
            GadgetSpec::Propagator { x1, x2 } => GadgetKind::Propagator {
                from: x2.negate(),
                to: x1,
            },
            GadgetSpec::Clause(s) => GadgetKind::Clause(s),
        }
    }

    /// Variable windows in role order.
    pub fn variables(&self) -> Vec<RSubset> {
        self.spec
            .variables_at(self.n(), self.r(), &self.starts)
            .expect("validated at construction")
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    /// Elements before the first window and after the last one.
    pub fn private_counts(&self) -> (usize, usize) {
        let first = self.starts[0];
        let last = *self.starts.last().expect("at least two windows");
        (first - 1, self.n() + 1 - last - self.r())
    }

    pub fn problem(&self) -> GadgetProblem {
        GadgetProblem::from_spec_at(self.spec, self.n(), self.family.clone(), &self.starts)
            .expect("validated at construction")
    }

    pub fn verify(&self) -> Result<VerifyReport> {
        verify_gadget(&self.entries, &self.problem())
    }

    /// Number of preset tuples.
    pub fn size(&self) -> usize {
        self.entries.set_count()
    }

    /// Sign of the r-subset `subset`, if preset.
    pub fn sign_of(&self, subset: &[usize]) -> Result<Option<Sign>> {
        Ok(self.entries.get_subset(subset)?.sign())
    }

    /// Preset entries as element tuples, in lex order.
    pub fn entry_list(&self) -> Vec<(RSubset, Sign)> {
        let dom = self.entries.domain();
        self.entries
            .set_entries()
            .map(|(d, s)| (dom.unrank(d).expect("index in range"), s))
            .collect()
    }

    /// The entries of `c`, relabelled to the component's own elements.
    pub fn component_entries(&self, c: &Component) -> Result<PartialSignMapping> {
        restrict(&self.entries, &c.elements)
    }
}

impl fmt::Display for Gadget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} n={} [{}]", self.spec.describe(), self.n(), self.entries.render())
    }
}

/// Restriction of `sigma` to the r-subsets of `elements`, renumbered
/// `1..=elements.len()`.
pub fn restrict(sigma: &PartialSignMapping, elements: &[usize]) -> Result<PartialSignMapping> {
    let r = sigma.r();
    let mut out = PartialSignMapping::empty(elements.len(), r)?;
    let local = out.domain();
    let parent = sigma.domain();
    for d in 0..local.tuple_count() {
        let t = local.unrank(d)?.embed(elements);
        out.set(d, sigma.get(parent.rank(t.elements())?));
    }
    Ok(out)
}

/// Writes `part` into `target` through `elements`; fails on a clash with an
/// existing preset.
pub fn embed_into(target: &mut PartialSignMapping, part: &PartialSignMapping, elements: &[usize]) -> Result<()> {
    let dom = target.domain();
    let pdom = part.domain();
    for (d, s) in part.set_entries() {
        let t = pdom.unrank(d)?.embed(elements);
        let idx = dom.rank(t.elements())?;
        match target.get(idx).sign() {
            Some(old) if old != s => {
                return Err(Error::Construction(format!("embedding clashes at {t}: {old} vs {s}")));
            }
            _ => target.set(idx, s.into()),
        }
    }
    Ok(())
}

fn from_entries(n: usize, r: usize, entries: &[(&[usize], Sign)]) -> PartialSignMapping {
    let mut m = PartialSignMapping::empty(n, r).expect("fixed dimensions");
    for (t, s) in entries {
        m.set_subset(t, (*s).into()).expect("fixed tuples");
    }
    m
}

fn flip(s: Sign, neg: bool) -> Sign {
    if neg {
        s.negate()
    } else {
        s
    }
}

/// Four-element propagator `PG(X2 s -> X1 s)` for the alternating family at
/// rank 3.
pub fn gs_propagator(s: Sign) -> Gadget {
    let neg = s == Sign::Minus;
    let entries = from_entries(
        4,
        3,
        &[
            (&[1, 2, 4], flip(Sign::Plus, neg)),
            (&[1, 3, 4], flip(Sign::Minus, neg)),
        ],
    );
    Gadget::new(
        GadgetSpec::right_to_left(s, s),
        Family::alternating(3),
        entries,
        Vec::new(),
    )
    .expect("known construction")
}

/// Five-element negator `PG(X2 s -> X1 -s)` for the alternating family.
pub fn gs_negator(s: Sign) -> Gadget {
    use Sign::{Minus as M, Plus as P};
    let neg = s == Sign::Plus;
    let base: [(&[usize], Sign); 7] = [
        (&[1, 2, 4], P),
        (&[1, 2, 5], M),
        (&[1, 3, 5], M),
        (&[1, 4, 5], P),
        (&[2, 3, 4], P),
        (&[2, 3, 5], P),
        (&[2, 4, 5], P),
    ];
    let entries: Vec<(&[usize], Sign)> = base.iter().map(|&(t, x)| (t, flip(x, neg))).collect();
    Gadget::new(
        GadgetSpec::right_to_left(s, s.negate()),
        Family::alternating(3),
        from_entries(5, 3, &entries),
        Vec::new(),
    )
    .expect("known construction")
}

/// Five-element clause gadget `CG(X1+ v X2- v X3+)` for the alternating
/// family.
pub fn gs_clause() -> Gadget {
    use Sign::{Minus as M, Plus as P};
    let entries = from_entries(
        5,
        3,
        &[
            (&[1, 2, 4], P),
            (&[1, 2, 5], M),
            (&[1, 3, 5], M),
            (&[1, 4, 5], P),
            (&[2, 3, 5], P),
            (&[2, 4, 5], P),
        ],
    );
    Gadget::new(
        GadgetSpec::Clause([P, M, P]),
        Family::alternating(3),
        entries,
        Vec::new(),
    )
    .expect("known construction")
}

/// A propagator built from a chain of propagators read from `X2` towards
/// `X1`. Each part starts `shift` elements left of the previous one, and the
/// first part ends at the last element.
pub fn compose_chain(family: &Family, parts: &[&Gadget]) -> Result<Gadget> {
    let r = family.rank();
    if parts.is_empty() {
        return Err(Error::Construction("empty chain".into()));
    }
    let mut sign = None;
    let mut n = r;
    for g in parts {
        let GadgetKind::Propagator { from, to } = g.kind() else {
            return Err(Error::Construction(format!("{} is not a propagator", g.spec())));
        };
        if g.family() != family {
            return Err(Error::Construction("chain parts belong to another family".into()));
        }
        if let Some(prev) = sign {
            if prev != from {
                return Err(Error::Construction(format!(
                    "chain breaks: {prev} feeds {}",
                    g.spec().describe()
                )));
            }
        }
        sign = Some(to);
        n += g.n() - r;
    }
    let GadgetKind::Propagator { from, .. } = parts[0].kind() else {
        unreachable!()
    };
    let to = sign.expect("non-empty chain");
    let mut entries = PartialSignMapping::empty(n, r)?;
    let mut components = Vec::new();
    let mut end = n;
    for g in parts {
        let elements: Vec<usize> = (end + 1 - g.n()..=end).collect();
        embed_into(&mut entries, g.entries(), &elements)?;
        components.push(Component {
            spec: g.spec(),
            elements,
        });
        end = end + r - g.n();
    }
    Gadget::new(GadgetSpec::right_to_left(from, to), family.clone(), entries, components)
}

/// Six-element `PG(X2 from -> X1 to)` for the alternating family, composed
/// from the four- and five-element parts.
pub fn gs_composed(from: Sign, to: Sign) -> Gadget {
    let fam = Family::alternating(3);
    let parts = if from == to {
        let p = gs_propagator(from);
        vec![p.clone(), p.clone(), p]
    } else {
        vec![gs_negator(from), gs_propagator(to)]
    };
    let refs: Vec<&Gadget> = parts.iter().collect();
    compose_chain(&fam, &refs).expect("known construction")
}

fn alternating_sign(i: usize) -> Sign {
    if i.is_multiple_of(2) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

fn drop_elements(all: &[usize], drop: &[usize]) -> Vec<usize> {
    all.iter().copied().filter(|e| !drop.contains(e)).collect()
}

fn check_even_rank(r: usize) -> Result<()> {
    if r < 4 || r % 2 == 1 {
        return Err(Error::Construction(format!(
            "rank must be even and at least 4, got {r}"
        )));
    }
    Ok(())
}

/// `(r+1)`-element negator `PG(X2 from -> X1 -from)` for the alternating
/// family at even rank.
pub fn even_rank_propagator(r: usize, from: Sign) -> Result<Gadget> {
    check_even_rank(r)?;
    let all: Vec<usize> = (1..=r + 1).collect();
    let mut entries = PartialSignMapping::empty(r + 1, r)?;
    for i in 2..=r {
        let s = alternating_sign(i + usize::from(from == Sign::Plus));
        entries.set_subset(&drop_elements(&all, &[i]), s.into())?;
    }
    Gadget::new(
        GadgetSpec::right_to_left(from, from.negate()),
        Family::alternating(r),
        entries,
        Vec::new(),
    )
}

/// `(r+2)`-element `CG(X1+ v X2+ v X3+)` for the alternating family at even
/// rank.
pub fn even_rank_clause(r: usize) -> Result<Gadget> {
    check_even_rank(r)?;
    let all: Vec<usize> = (1..=r + 2).collect();
    let mut rules: Vec<(Vec<usize>, Sign)> = Vec::new();
    for i in 2..=r {
        rules.push((drop_elements(&all, &[i, r + 1]), alternating_sign(i)));
    }
    for i in 3..=r {
        rules.push((drop_elements(&all, &[1, i]), alternating_sign(i - 1)));
    }
    for i in 2..r {
        rules.push((drop_elements(&all, &[i, r + 2]), alternating_sign(i)));
    }
    rules.push((drop_elements(&all, &[r, r + 2]), Sign::Minus));
    let mut entries = PartialSignMapping::empty(r + 2, r)?;
    for (t, s) in &rules {
        if entries.get_subset(t)?.is_set() {
            return Err(Error::Construction(format!("clause rules overlap at {t:?}")));
        }
        entries.set_subset(t, (*s).into())?;
    }
    Gadget::new(
        GadgetSpec::Clause([Sign::Plus; 3]),
        Family::alternating(r),
        entries,
        Vec::new(),
    )
}

/// The smallest known gadget for each spec of one family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Library {
    family: Family,
    gadgets: BTreeMap<GadgetSpec, Gadget>,
}

impl Library {
    pub fn new(family: Family) -> Library {
        Library {
            family,
            gadgets: BTreeMap::new(),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Keeps the gadget if it is the first, or smaller than the current one,
    /// for its spec.
    pub fn insert(&mut self, g: Gadget) -> Result<bool> {
        if g.family() != &self.family {
            return Err(Error::Construction("gadget belongs to another family".into()));
        }
        let better = match self.gadgets.get(&g.spec()) {
            Some(old) => (g.n(), g.size()) < (old.n(), old.size()),
            None => true,
        };
        if better {
            self.gadgets.insert(g.spec(), g);
        }
        Ok(better)
    }

    pub fn get(&self, spec: GadgetSpec) -> Option<&Gadget> {
        self.gadgets.get(&spec)
    }

    pub fn contains(&self, spec: GadgetSpec) -> bool {
        self.gadgets.contains_key(&spec)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Gadget> {
        self.gadgets.values()
    }

    pub fn len(&self) -> usize {
        self.gadgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gadgets.is_empty()
    }

    /// The hand-built library for the alternating family at rank 3.
    pub fn signotopes() -> Library {
        let mut lib = Library::new(Family::alternating(3));
        for s in Sign::BOTH {
            lib.insert(gs_propagator(s)).expect("same family");
            lib.insert(gs_negator(s)).expect("same family");
        }
        lib.insert(gs_clause()).expect("same family");
        lib
    }

    /// The hand-built library for `family`, if there is one.
    pub fn builtin(family: &Family) -> Option<Library> {
        let r = family.rank();
        if family != &Family::alternating(r) {
            return None;
        }
        match r {
            3 => Some(Library::signotopes()),
            r if r >= 4 && r % 2 == 0 => Library::even_rank(r).ok(),
            _ => None,
        }
    }

    /// The hand-built library for the alternating family at even rank.
    pub fn even_rank(r: usize) -> Result<Library> {
        let mut lib = Library::new(Family::alternating(r));
        for s in Sign::BOTH {
            lib.insert(even_rank_propagator(r, s)?)?;
        }
        lib.insert(even_rank_clause(r)?)?;
        Ok(lib)
    }
}

/// Induced word of a window of a gadget, with the window given by elements.
pub fn window_word(g: &Gadget, window: &[usize]) -> Result<String> {
    Ok(g.entries().induced_word(window)?.to_string())
}
