use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::ThreeSatFormula;
use super::Instance;
use crate::encode::GadgetSpec;
use crate::error::{Error, Result};
use crate::gadgets::{embed_into, Gadget, GadgetKind, Library};
use crate::mapping::{binomial, PartialSignMapping, RSubset, Sign, SignState};
use crate::patterns::{combination_lemma_applies, Family, LemmaVariant};

/// Which side of the clause blocks the variable blocks sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Variables first; chains run from a literal window leftwards.
    Left,
    /// Clauses first; chains run from a literal window rightwards.
    Right,
}

/// A scenario: a clause gadget and the propagators that suffice to route
/// every literal window to its variable block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioPlan {
    pub id: u8,
    pub clause: GadgetSpec,
    pub propagators: Vec<GadgetSpec>,
    pub side: Side,
}

impl fmt::Display for ScenarioPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scenario {} ({}", self.id, self.clause)?;
        for p in &self.propagators {
            write!(f, ", {p}")?;
        }
        write!(f, ")")
    }
}

/// Propagator specs and clause sign pattern each scenario needs, with the
/// placement side. `None` accepts any clause gadget.
pub fn scenario_requirements(id: u8) -> Option<(Option<[Sign; 3]>, [GadgetSpec; 2], Side)> {
    use Sign::{Minus as M, Plus as P};
    let prop = |x1, x2| GadgetSpec::Propagator { x1, x2 };
    Some(match id {
        1 => (None, [prop(P, P), prop(M, M)], Side::Left),
        2 => (Some([P, P, P]), [prop(P, M), prop(M, M)], Side::Left),
        3 => (Some([P, P, P]), [prop(M, P), prop(M, M)], Side::Right),
        4 => (Some([M, M, M]), [prop(P, P), prop(M, P)], Side::Left),
        5 => (Some([M, M, M]), [prop(P, P), prop(P, M)], Side::Right),
        _ => return None,
    })
}

pub const SCENARIOS: [u8; 5] = [1, 2, 3, 4, 5];

/// The first scenario, in order 1 to 5, whose gadgets are all in `library`.
/// `None` means no reduction is available from these gadgets.
pub fn select_scenario(library: &Library) -> Option<ScenarioPlan> {
    SCENARIOS.iter().find_map(|&id| plan_if_available(id, library))
}

pub fn plan_if_available(id: u8, library: &Library) -> Option<ScenarioPlan> {
    let (clause, props, side) = scenario_requirements(id)?;
    if !props.iter().all(|&p| library.contains(p)) {
        return None;
    }
    let clause = match clause {
        Some(s) => Some(GadgetSpec::Clause(s)).filter(|&c| library.contains(c))?,
        None => GadgetSpec::all_clauses().into_iter().find(|&c| library.contains(c))?,
    };
    // Extra propagators are sound in either direction; they only shorten
    // chains.
    let propagators = GadgetSpec::all_propagators()
        .into_iter()
        .filter(|&p| library.contains(p))
        .collect();
    Some(ScenarioPlan {
        id,
        clause,
        propagators,
        side,
    })
}

/// One step of a chain: a propagator used in the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Step {
    spec: GadgetSpec,
    /// Distance between the two window starts.
    shift: usize,
    /// Elements before `X1` and after `X2`, placed in the outer private
    /// regions of the instance.
    private: (usize, usize),
    from: Sign,
    to: Sign,
}

fn steps(plan: &ScenarioPlan, library: &Library) -> Vec<Step> {
    plan.propagators
        .iter()
        .filter_map(|&spec| {
            let g = library.get(spec)?;
            let GadgetKind::Propagator { .. } = g.kind() else {
                return None;
            };
            let GadgetSpec::Propagator { x1, x2 } = spec else {
                return None;
            };
            // Travelling right to left reads [X1 = x1] or [X2 = x2] as
            // X2 = -x2 forcing X1 = x1; left to right the roles swap.
            let (from, to) = match plan.side {
                Side::Left => (x2.negate(), x1),
                Side::Right => (x1.negate(), x2),
            };
            Some(Step {
                spec,
                shift: g.starts()[1] - g.starts()[0],
                private: g.private_counts(),
                from,
                to,
            })
        })
        .collect()
}

/// Cheapest chain carrying sign `start` to sign `goal` over a total shift of
/// at least `r`. Returns the steps and the number of auxiliary elements.
fn route(steps: &[Step], r: usize, start: Sign, goal: Sign) -> Option<(Vec<Step>, usize)> {
    let max_shift = r + 4 * r + 8;
    let idx = |s: Sign| usize::from(s == Sign::Minus);
    // back[t][sign] = (previous shift, previous sign, step)
    let mut back: Vec<[Option<(usize, Sign, usize)>; 2]> = vec![[None; 2]; max_shift + 1];
    let mut reached = vec![[false; 2]; max_shift + 1];
    reached[0][idx(start)] = true;
    for t in 0..=max_shift {
        for sign in Sign::BOTH {
            if !reached[t][idx(sign)] {
                continue;
            }
            if t >= r && sign == goal {
                let mut chain = Vec::new();
                let (mut ct, mut cs) = (t, sign);
                while let Some((pt, ps, k)) = back[ct][idx(cs)] {
                    chain.push(steps[k]);
                    ct = pt;
                    cs = ps;
                }
                chain.reverse();
                return Some((chain, t - r));
            }
            for (k, st) in steps.iter().enumerate() {
                let nt = t + st.shift;
                if st.from == sign && st.shift > 0 && nt <= max_shift && !reached[nt][idx(st.to)] {
                    reached[nt][idx(st.to)] = true;
                    back[nt][idx(st.to)] = Some((t, sign, k));
                }
            }
        }
    }
    None
}

/// A gadget copy in the compiled instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub label: String,
    pub spec: GadgetSpec,
    /// Global elements, increasing; local element `i` is `elements[i - 1]`.
    pub elements: Vec<usize>,
    /// Local entries.
    pub entries: PartialSignMapping,
    /// Local variable windows.
    pub variables: Vec<RSubset>,
}

impl Placement {
    fn new(label: String, g: &Gadget, elements: Vec<usize>) -> Placement {
        Placement {
            label,
            spec: g.spec(),
            elements,
            entries: g.entries().clone(),
            variables: g.variables(),
        }
    }

    fn local(&self, global: usize) -> Option<usize> {
        self.elements.binary_search(&global).ok().map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionLayout {
    pub n: usize,
    pub r: usize,
    pub side: Side,
    pub variable_blocks: Vec<Vec<usize>>,
    pub clause_blocks: Vec<Vec<usize>>,
    /// Auxiliary elements per literal occurrence, indexed `[clause][position]`.
    pub aux: Vec<[Vec<usize>; 3]>,
    pub placements: Vec<Placement>,
}

/// Places the gadgets for `formula` according to `plan`.
pub fn layout(formula: &ThreeSatFormula, library: &Library, plan: &ScenarioPlan) -> Result<ReductionLayout> {
    let r = library.family().rank();
    let clause = library
        .get(plan.clause)
        .ok_or_else(|| Error::NoReduction(format!("library has no {}", plan.clause)))?;
    let GadgetKind::Clause(clause_signs) = clause.kind() else {
        return Err(Error::NoReduction(format!("{} is not a clause spec", plan.clause)));
    };
    let steps = steps(plan, library);
    let nv = formula.var_count() as usize;
    let m = formula.clauses().len();
    let nc = clause.n();

    let mut chains = Vec::with_capacity(m);
    let mut total_aux = 0;
    for (j, c) in formula.clauses().iter().enumerate() {
        let mut per = Vec::with_capacity(3);
        for (p, lit) in c.iter().enumerate() {
            let goal = if lit.is_positive() { Sign::Plus } else { Sign::Minus };
            let (chain, aux) = route(&steps, r, clause_signs[p], goal).ok_or_else(|| {
                Error::NoReduction(format!(
                    "no chain from {} to {goal} for clause {} literal {}",
                    clause_signs[p],
                    j + 1,
                    p + 1
                ))
            })?;
            total_aux += aux;
            per.push((chain, aux));
        }
        chains.push(per);
    }

    let (left_private, right_private) = chains
        .iter()
        .flatten()
        .flat_map(|(chain, _)| chain)
        .fold((0, 0), |(a, b), st| (a + st.private.0, b + st.private.1));
    let core = r * nv + total_aux + nc * m;
    let n = left_private + core + right_private;
    let (var_base, aux_base, clause_base) = match plan.side {
        Side::Left => (0, r * nv, r * nv + total_aux),
        Side::Right => (nc * m + total_aux, nc * m, 0),
    };
    let (var_base, aux_base, clause_base) = (
        var_base + left_private,
        aux_base + left_private,
        clause_base + left_private,
    );
    let mut next_left = 1;
    let mut next_right = left_private + core + 1;
    let variable_blocks: Vec<Vec<usize>> = (0..nv)
        .map(|k| (var_base + k * r + 1..=var_base + (k + 1) * r).collect())
        .collect();
    let clause_blocks: Vec<Vec<usize>> = (0..m)
        .map(|j| (clause_base + j * nc + 1..=clause_base + (j + 1) * nc).collect())
        .collect();

    let mut placements = Vec::new();
    let mut aux_blocks = Vec::with_capacity(m);
    let mut next_aux = aux_base + 1;
    for (j, c) in formula.clauses().iter().enumerate() {
        placements.push(Placement::new(format!("C{}", j + 1), clause, clause_blocks[j].clone()));
        let mut aux_here: [Vec<usize>; 3] = Default::default();
        for (p, lit) in c.iter().enumerate() {
            let (chain, aux) = &chains[j][p];
            let aux_elems: Vec<usize> = (next_aux..next_aux + aux).collect();
            next_aux += aux;
            let offset = clause.starts()[p] - 1;
            let lit_window = &clause_blocks[j][offset..offset + r];
            let var_window = &variable_blocks[lit.var() as usize - 1];
            // The chain's element sequence, in increasing order.
            let seq: Vec<usize> = match plan.side {
                Side::Left => var_window.iter().chain(&aux_elems).chain(lit_window).copied().collect(),
                Side::Right => lit_window.iter().chain(&aux_elems).chain(var_window).copied().collect(),
            };
            let mut pos = match plan.side {
                Side::Left => r + aux,
                Side::Right => 0,
            };
            for (k, st) in chain.iter().enumerate() {
                let g = library.get(st.spec).expect("step from library");
                let range = match plan.side {
                    Side::Left => {
                        let start = pos - st.shift;
                        pos = start;
                        start..start + st.shift + r
                    }
                    Side::Right => {
                        let start = pos;
                        pos += st.shift;
                        start..start + st.shift + r
                    }
                };
                let (before, after) = st.private;
                let mut elements: Vec<usize> = (next_left..next_left + before).collect();
                elements.extend_from_slice(&seq[range]);
                elements.extend(next_right..next_right + after);
                next_left += before;
                next_right += after;
                placements.push(Placement::new(format!("C{}L{}P{}", j + 1, p + 1, k + 1), g, elements));
            }
            aux_here[p] = aux_elems;
        }
        aux_blocks.push(aux_here);
    }
    Ok(ReductionLayout {
        n,
        r,
        side: plan.side,
        variable_blocks,
        clause_blocks,
        aux: aux_blocks,
        placements,
    })
}

/// Outcome of checking the combination lemma's preconditions on a layout.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CombinationReport {
    pub variant: Option<LemmaVariant>,
    pub violations: Vec<String>,
}

impl CombinationReport {
    pub fn passed(&self) -> bool {
        self.variant.is_some() && self.violations.is_empty()
    }
}

fn shared_state(p: &Placement, tuple: &[usize]) -> (SignState, bool) {
    let local: Vec<usize> = tuple
        .iter()
        .map(|&e| p.local(e).expect("tuple inside placement"))
        .collect();
    let is_var = p.variables.iter().any(|v| v.elements() == local.as_slice());
    (p.entries.get_subset(&local).expect("local tuple in range"), is_var)
}

fn for_each_subset(elems: &[usize], r: usize, mut visit: impl FnMut(&[usize])) {
    if elems.len() < r {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut buf = vec![0; r];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = elems[i];
        }
        visit(&buf);
        let Some(i) = (0..r).rev().find(|&i| idx[i] < i + elems.len() - r) else {
            return;
        };
        idx[i] += 1;
        for k in i + 1..r {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

/// Checks that every pairwise overlap of placements is an interval of their
/// union, and that shared r-subsets are either identical presets or a common
/// variable window.
pub fn check_combination(layout: &ReductionLayout, family: &Family) -> CombinationReport {
    let mut report = CombinationReport {
        variant: [LemmaVariant::Plus, LemmaVariant::Minus]
            .into_iter()
            .find(|&v| combination_lemma_applies(family, v)),
        violations: Vec::new(),
    };
    if report.variant.is_none() {
        report
            .violations
            .push("family has forbidden runs of both signs; the combination lemma does not apply".into());
    }
    let r = layout.r;
    for p in &layout.placements {
        if !p.entries.is_avoiding(family).unwrap_or(false) {
            report.violations.push(format!("{} is not avoiding", p.label));
        }
    }
    for (i, a) in layout.placements.iter().enumerate() {
        let (a_lo, a_hi) = (a.elements[0], *a.elements.last().expect("non-empty"));
        for b in &layout.placements[i + 1..] {
            let (b_lo, b_hi) = (b.elements[0], *b.elements.last().expect("non-empty"));
            if a_hi < b_lo || b_hi < a_lo {
                continue;
            }
            let inter: Vec<usize> = a.elements.iter().copied().filter(|e| b.local(*e).is_some()).collect();
            if inter.is_empty() {
                continue;
            }
            let (lo, hi) = (inter[0], *inter.last().expect("non-empty"));
            let gap = a
                .elements
                .iter()
                .chain(&b.elements)
                .any(|&e| e > lo && e < hi && inter.binary_search(&e).is_err());
            if gap {
                report.violations.push(format!(
                    "{} and {} overlap in a non-interval {:?}",
                    a.label, b.label, inter
                ));
                continue;
            }
            for_each_subset(&inter, r, |t| {
                let (sa, va) = shared_state(a, t);
                let (sb, vb) = shared_state(b, t);
                let ok = (va && vb) || (!va && !vb && sa.is_set() && sa == sb);
                if !ok {
                    report.violations.push(format!(
                        "{} and {} disagree on {:?} ({}{} vs {}{})",
                        a.label,
                        b.label,
                        t,
                        sa.as_char(),
                        if va { " var" } else { "" },
                        sb.as_char(),
                        if vb { " var" } else { "" },
                    ));
                }
            });
        }
    }
    report
}

/// Union of all placed entries.
pub fn combine(layout: &ReductionLayout, family: &Family) -> Result<Instance> {
    let tuples = binomial(layout.n, layout.r);
    if tuples > 50_000_000 {
        return Err(Error::InvalidProblem(format!(
            "compiled instance would have {tuples} tuples; use a smaller formula"
        )));
    }
    let mut sigma = PartialSignMapping::empty(layout.n, layout.r)?;
    for p in &layout.placements {
        embed_into(&mut sigma, &p.entries, &p.elements)?;
    }
    Instance::new(family.clone(), sigma)
}
