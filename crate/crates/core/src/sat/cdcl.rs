//! A compact conflict-driven clause-learning solver.
//!
//! Two-watched-literal propagation, first-UIP learning with local
//! minimization, VSIDS with phase saving, Luby restarts and activity-based
//! learnt clause deletion. Assumptions are handled MiniSat style, as the
//! first decision levels.

use std::io::Write;
use std::time::Instant;

use super::{Answer, Backend, Lit};

const NO_REASON: u32 = u32::MAX;
const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

#[derive(Debug, Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: Lit,
}

#[derive(Debug, Clone, Copy)]
struct Header {
    start: u32,
    len: u32,
    learnt: bool,
    deleted: bool,
    activity: f32,
}

#[derive(Debug, Clone, Default)]
struct VarHeap {
    heap: Vec<u32>,
    index: Vec<i32>,
}

impl VarHeap {
    fn grow(&mut self, vars: usize) {
        self.index.resize(vars, -1);
    }

    fn contains(&self, v: u32) -> bool {
        self.index[v as usize] >= 0
    }

    #[cfg(test)]
    fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.index[v as usize] = self.heap.len() as i32;
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.index[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.index[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if let Ok(i) = usize::try_from(self.index[v as usize]) {
            self.up(i, act);
        }
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.index[pv as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.index[v as usize] = i as i32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[child];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.index[cv as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.index[v as usize] = i as i32;
    }
}

enum SearchStatus {
    Sat,
    Unsat,
    Restart,
    Interrupted,
}

pub struct Cdcl {
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    watches: Vec<Vec<Watch>>,
    arena: Vec<Lit>,
    headers: Vec<Header>,
    learnts: Vec<u32>,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    failed: Vec<Lit>,
    proof: Option<Box<dyn Write + Send>>,
    max_learnts: f64,
    wasted: usize,
    conflicts: u64,
    decisions: u64,
    propagations: u64,
}

impl Default for Cdcl {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for Cdcl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cdcl")
            .field("vars", &self.assigns.len())
            .field("clauses", &self.headers.len())
            .field("conflicts", &self.conflicts)
            .finish()
    }
}

impl Cdcl {
    pub fn new() -> Self {
        Cdcl {
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            watches: Vec::new(),
            arena: Vec::new(),
            headers: Vec::new(),
            learnts: Vec::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            failed: Vec::new(),
            proof: None,
            max_learnts: 0.0,
            wasted: 0,
            conflicts: 0,
            decisions: 0,
            propagations: 0,
        }
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn propagations(&self) -> u64 {
        self.propagations
    }

    #[inline]
    fn value(&self, lit: Lit) -> i8 {
        let v = self.assigns[lit.index()];
        if lit.is_negative() {
            -v
        } else {
            v
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, lit: Lit, reason: u32) {
        let v = lit.index();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = if lit.is_negative() { FALSE } else { TRUE };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = lit.index();
            self.phase[v] = !lit.is_negative();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = lim;
    }

    fn clause(&self, cref: u32) -> &[Lit] {
        let h = self.headers[cref as usize];
        &self.arena[h.start as usize..(h.start + h.len) as usize]
    }

    fn write_proof(&mut self, prefix: &str, lits: &[Lit]) {
        if let Some(out) = self.proof.as_mut() {
            let mut line = String::from(prefix);
            for l in lits {
                line.push_str(&l.to_dimacs().to_string());
                line.push(' ');
            }
            line.push_str("0\n");
            // Proof emission is best effort; a broken sink disables it.
            if out.write_all(line.as_bytes()).is_err() {
                self.proof = None;
            }
        }
    }

    fn attach(&mut self, lits: &[Lit], learnt: bool) -> u32 {
        let cref = self.headers.len() as u32;
        let start = self.arena.len() as u32;
        self.arena.extend_from_slice(lits);
        self.headers.push(Header {
            start,
            len: lits.len() as u32,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        self.watches[lits[0].code()].push(Watch { cref, blocker: lits[1] });
        self.watches[lits[1].code()].push(Watch { cref, blocker: lits[0] });
        cref
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let h = self.headers[w.cref as usize];
                let s = h.start as usize;
                let len = h.len as usize;
                if self.arena[s] == false_lit {
                    self.arena.swap(s, s + 1);
                }
                let first = self.arena[s];
                let nw = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..len {
                    let l = self.arena[s + k];
                    if self.value(l) != FALSE {
                        self.arena.swap(s + 1, s + k);
                        self.watches[l.code()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let h = &mut self.headers[cref as usize];
        if !h.learnt {
            return;
        }
        h.activity += self.cla_inc as f32;
        if h.activity > 1e20 {
            for &c in &self.learnts {
                self.headers[c as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut cref: u32) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit::from_code(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;
        loop {
            self.bump_clause(cref);
            let skip = usize::from(p.is_some());
            let h = self.headers[cref as usize];
            for k in skip..h.len as usize {
                let q = self.arena[h.start as usize + k];
                let v = q.index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            cref = self.reason[lit.index()];
            self.seen[lit.index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = !p.expect("conflict has a UIP");

        // local minimization
        let original = learnt.clone();
        let mut kept = 1;
        for k in 1..learnt.len() {
            let lit = learnt[k];
            let r = self.reason[lit.index()];
            let redundant = r != NO_REASON
                && self.clause(r)[1..]
                    .iter()
                    .all(|q| self.seen[q.index()] || self.level[q.index()] == 0);
            if !redundant {
                learnt[kept] = lit;
                kept += 1;
            }
        }
        learnt.truncate(kept);
        for l in &original {
            self.seen[l.index()] = false;
        }

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].index()] > self.level[learnt[max_i].index()] {
                    max_i = k;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].index()] as usize;
        }
        (learnt, bt)
    }

    /// Collects the assumptions responsible for `p` being false.
    fn analyze_final(&mut self, p: Lit) {
        self.failed.clear();
        self.failed.push(p);
        if self.decision_level() == 0 {
            return;
        }
        self.seen[p.index()] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let x = self.trail[i];
            let v = x.index();
            if !self.seen[v] {
                continue;
            }
            let r = self.reason[v];
            if r == NO_REASON {
                if self.level[v] > 0 {
                    self.failed.push(!x);
                }
            } else {
                let h = self.headers[r as usize];
                for k in 1..h.len as usize {
                    let q = self.arena[h.start as usize + k];
                    if self.level[q.index()] > 0 {
                        self.seen[q.index()] = true;
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[p.index()] = false;
    }

    fn locked(&self, cref: u32) -> bool {
        let first = self.clause(cref)[0];
        self.reason[first.index()] == cref && self.value(first) == TRUE
    }

    fn reduce_db(&mut self) {
        let mut learnts = std::mem::take(&mut self.learnts);
        learnts.sort_by(|&a, &b| {
            let ha = &self.headers[a as usize];
            let hb = &self.headers[b as usize];
            (ha.len <= 2)
                .cmp(&(hb.len <= 2))
                .then(ha.activity.total_cmp(&hb.activity))
        });
        let limit = self.cla_inc as f32 / learnts.len().max(1) as f32;
        let half = learnts.len() / 2;
        let mut keep = Vec::with_capacity(learnts.len());
        let mut removed = false;
        for (i, &c) in learnts.iter().enumerate() {
            let h = self.headers[c as usize];
            if h.len > 2 && !self.locked(c) && (i < half || h.activity < limit) {
                self.headers[c as usize].deleted = true;
                self.wasted += h.len as usize;
                let lits = self.clause(c).to_vec();
                self.write_proof("d ", &lits);
                removed = true;
            } else {
                keep.push(c);
            }
        }
        self.learnts = keep;
        if removed {
            let headers = &self.headers;
            for ws in &mut self.watches {
                ws.retain(|w| !headers[w.cref as usize].deleted);
            }
        }
        if self.wasted > self.arena.len() / 2 {
            self.collect_garbage();
        }
    }

    fn collect_garbage(&mut self) {
        let mut remap = vec![NO_REASON; self.headers.len()];
        let mut arena = Vec::with_capacity(self.arena.len() - self.wasted);
        let mut headers = Vec::with_capacity(self.headers.len());
        for (old, h) in self.headers.iter().enumerate() {
            if h.deleted {
                continue;
            }
            remap[old] = headers.len() as u32;
            let start = arena.len() as u32;
            arena.extend_from_slice(&self.arena[h.start as usize..(h.start + h.len) as usize]);
            headers.push(Header { start, ..*h });
        }
        for ws in &mut self.watches {
            for w in ws.iter_mut() {
                w.cref = remap[w.cref as usize];
            }
        }
        for r in &mut self.reason {
            if *r != NO_REASON {
                *r = remap[*r as usize];
            }
        }
        for c in &mut self.learnts {
            *c = remap[*c as usize];
        }
        self.arena = arena;
        self.headers = headers;
        self.wasted = 0;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::from_index(v as usize, self.phase[v as usize]));
            }
        }
        None
    }

    fn search(&mut self, budget: u64, assumptions: &[Lit], deadline: Option<Instant>) -> SearchStatus {
        let mut local_conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                local_conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    self.write_proof("", &[]);
                    return SearchStatus::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                self.write_proof("", &learnt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let cref = self.attach(&learnt, true);
                    self.learnts.push(cref);
                    self.bump_clause(cref);
                    self.enqueue(learnt[0], cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if self.conflicts.is_multiple_of(128) && deadline.is_some_and(|d| Instant::now() >= d) {
                    return SearchStatus::Interrupted;
                }
            } else {
                if local_conflicts >= budget {
                    self.cancel_until(0);
                    return SearchStatus::Restart;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let p = assumptions[self.decision_level()];
                    match self.value(p) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => {
                            self.analyze_final(!p);
                            return SearchStatus::Unsat;
                        }
                        _ => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let lit = match next {
                    Some(l) => l,
                    None => {
                        self.decisions += 1;
                        if self.decisions.is_multiple_of(1024) && deadline.is_some_and(|d| Instant::now() >= d) {
                            return SearchStatus::Interrupted;
                        }
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return SearchStatus::Sat,
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(lit, NO_REASON);
            }
        }
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq as i32)
}

impl Backend for Cdcl {
    fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    fn ensure_vars(&mut self, count: usize) {
        let old = self.assigns.len();
        if count <= old {
            return;
        }
        self.assigns.resize(count, UNDEF);
        self.level.resize(count, 0);
        self.reason.resize(count, NO_REASON);
        self.activity.resize(count, 0.0);
        self.phase.resize(count, false);
        self.seen.resize(count, false);
        self.watches.resize_with(2 * count, Vec::new);
        self.heap.grow(count);
        for v in old..count {
            self.heap.insert(v as u32, &self.activity);
        }
    }

    fn set_phase(&mut self, lit: Lit) {
        self.ensure_vars(lit.index() + 1);
        self.phase[lit.index()] = !lit.is_negative();
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        if !self.ok {
            return;
        }
        debug_assert_eq!(self.decision_level(), 0);
        if let Some(max) = lits.iter().map(|l| l.index()).max() {
            self.ensure_vars(max + 1);
        }
        let mut c = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        if c.iter().any(|&l| self.value(l) == TRUE) {
            return;
        }
        let before = c.len();
        c.retain(|&l| self.value(l) != FALSE);
        if c.len() < before {
            self.write_proof("", &c);
        }
        match c.len() {
            0 => {
                self.ok = false;
                self.write_proof("", &[]);
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                    self.write_proof("", &[]);
                }
            }
            _ => {
                self.attach(&c, false);
            }
        }
    }

    fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> Answer {
        self.model.clear();
        self.failed.clear();
        if !self.ok {
            return Answer::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.index()).max() {
            self.ensure_vars(max + 1);
        }
        let originals = self.headers.len() - self.learnts.len();
        self.max_learnts = self.max_learnts.max(originals as f64 / 3.0 + 2000.0);
        let mut restarts = 0u64;
        let answer = loop {
            let budget = (luby(2.0, restarts) * 100.0) as u64;
            match self.search(budget, assumptions, deadline) {
                SearchStatus::Sat => {
                    self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
                    break Answer::Sat;
                }
                SearchStatus::Unsat => break Answer::Unsat,
                SearchStatus::Interrupted => break Answer::Unknown,
                SearchStatus::Restart => {
                    restarts += 1;
                    self.max_learnts *= 1.02;
                    if deadline.is_some_and(|d| Instant::now() >= d) {
                        break Answer::Unknown;
                    }
                }
            }
        };
        self.cancel_until(0);
        if let Some(out) = self.proof.as_mut() {
            let _ = out.flush();
        }
        answer
    }

    fn model_value(&self, lit: Lit) -> bool {
        self.model.get(lit.index()).is_some_and(|&v| v != lit.is_negative())
    }

    fn model(&self) -> &[bool] {
        &self.model
    }

    fn failed_assumptions(&self) -> &[Lit] {
        &self.failed
    }

    fn set_proof_sink(&mut self, sink: Box<dyn Write + Send>) {
        self.proof = Some(sink);
    }

    fn take_proof_sink(&mut self) -> Option<Box<dyn Write + Send>> {
        self.proof.take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luby_sequence() {
        let seq: Vec<u32> = (0..15).map(|i| luby(2.0, i) as u32).collect();
        assert_eq!(seq, [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn heap_orders_by_activity() {
        let act = vec![0.5, 3.0, 1.0, 2.0];
        let mut h = VarHeap::default();
        h.grow(4);
        for v in 0..4 {
            h.insert(v, &act);
        }
        let order: Vec<u32> = std::iter::from_fn(|| h.pop(&act)).collect();
        assert_eq!(order, [1, 3, 2, 0]);
        assert!(h.is_empty());
    }
}
