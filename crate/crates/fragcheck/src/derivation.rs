//! Minimum-derivation pricing and minimal sentential-form search.
//!
//! Two questions come up constantly while patching: how few terminals can a
//! nonterminal expand to (its shortest yield), and how few terminals does the
//! cheapest sentential form cost that starts at one nonterminal and contains a
//! designated target symbol. Both are answered on a derivation graph that has
//! a node per nonterminal and a node per production right-hand side. An edge
//! from a nonterminal to one of its right-hand sides carries the number of
//! terminal symbols in it (type I); an edge from a right-hand side to each
//! nonterminal occurrence in it carries the cost of the detour (type II).
//!
//! [`MinPatchStream`] is the generative side: it enumerates, cheapest first,
//! the token sequences derivable from a root nonterminal that contain a given
//! token sequence as a subsequence, optionally around one unexpanded hole.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::grammar::{Grammar, Sym, SymbolKind, Token};

/// Pricing over a grammar: shortest yields and cheapest target reach.
pub struct DerivationGraph<'g> {
    pub grammar: &'g Grammar,
    sy_val: HashMap<Sym, u64>,
    sy_wit: HashMap<Sym, Vec<Sym>>,
}

/// The two cost components of routing to a target through one production.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DminBranch {
    /// Terminal count of the production itself (the type I edge weight).
    pub type_i: u64,
    /// Cheapest completion: drained siblings plus the detour to the target.
    pub completion: Option<u64>,
    pub total: Option<u64>,
}

impl<'g> DerivationGraph<'g> {
    pub fn new(grammar: &'g Grammar) -> Self {
        let mut dg = DerivationGraph { grammar, sy_val: HashMap::new(), sy_wit: HashMap::new() };
        dg.compute_shortest_yields();
        dg
    }

    /// Fewest terminals any full derivation from `nt` produces. `None` when
    /// `nt` cannot derive a finite terminal string.
    pub fn shortest_yield(&self, nt: Sym) -> Option<u64> {
        self.sy_val.get(&nt).copied()
    }

    /// Terminal symbols of one canonical shortest derivation from `nt`:
    /// among all cheapest strings, the one smallest by rendered lexemes.
    pub fn shortest_yield_witness(&self, nt: Sym) -> Option<&[Sym]> {
        self.sy_wit.get(&nt).map(Vec::as_slice)
    }

    /// Number of terminal symbols on a production's right-hand side.
    pub fn type_i_weight(&self, prod: usize) -> u64 {
        self.grammar.productions[prod]
            .rhs
            .iter()
            .filter(|&&s| !self.grammar.is_nonterminal(s))
            .count() as u64
    }

    /// Nonterminal occurrences on a production's right-hand side, in order.
    pub fn type_ii_targets(&self, prod: usize) -> Vec<Sym> {
        self.grammar.productions[prod]
            .rhs
            .iter()
            .copied()
            .filter(|&s| self.grammar.is_nonterminal(s))
            .collect()
    }

    fn compute_shortest_yields(&mut self) {
        // fixpoint: values only decrease, witnesses only get lexeme-smaller,
        // and both ranges are finite, so this terminates
        loop {
            let mut changed = false;
            for p in 0..self.grammar.productions.len() {
                let lhs = self.grammar.productions[p].lhs;
                let Some((val, wit)) = self.production_yield(p) else { continue };
                let better = match self.sy_val.get(&lhs) {
                    None => true,
                    Some(&cur) => {
                        val < cur
                            || (val == cur
                                && self.render(&wit) < self.render(&self.sy_wit[&lhs]))
                    }
                };
                if better {
                    self.sy_val.insert(lhs, val);
                    self.sy_wit.insert(lhs, wit);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn production_yield(&self, prod: usize) -> Option<(u64, Vec<Sym>)> {
        let mut val = 0u64;
        let mut wit = Vec::new();
        for &s in &self.grammar.productions[prod].rhs {
            if self.grammar.is_nonterminal(s) {
                val += self.sy_val.get(&s)?;
                wit.extend_from_slice(self.sy_wit.get(&s)?);
            } else {
                val += 1;
                wit.push(s);
            }
        }
        Some((val, wit))
    }

    fn render(&self, syms: &[Sym]) -> Vec<String> {
        syms.iter().map(|&s| self.grammar.sample_lexeme(s)).collect()
    }

    /// Fewest terminals in any sentential form derived from `from` that
    /// contains a designated occurrence of `target`. A nonterminal target is
    /// left unexpanded; everything else is drained to terminals. `None` when
    /// `target` is unreachable from `from`.
    pub fn d_min(&self, from: Sym, target: Sym) -> Option<u64> {
        let dist = self.d_min_all(target);
        dist.get(&from).copied()
    }

    /// d_min from every nonterminal to one target, as a map.
    pub fn d_min_all(&self, target: Sym) -> HashMap<Sym, u64> {
        let mut dist: HashMap<Sym, u64> = HashMap::new();
        loop {
            let mut changed = false;
            for p in 0..self.grammar.productions.len() {
                let lhs = self.grammar.productions[p].lhs;
                let mut best: Option<u64> = dist.get(&lhs).copied();
                if let Some(direct) = self.direct_cost(p, target) {
                    best = Some(best.map_or(direct, |b| b.min(direct)));
                }
                for occ in 0..self.type_ii_targets(p).len() {
                    if let Some(deep) = self.via_cost(p, occ, &dist) {
                        best = Some(best.map_or(deep, |b| b.min(deep)));
                    }
                }
                if best != dist.get(&lhs).copied() {
                    dist.insert(lhs, best.unwrap());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    // target sits directly on the rhs: production weight plus drained siblings,
    // with the designated occurrence exempt when the target is a nonterminal
    fn direct_cost(&self, prod: usize, target: Sym) -> Option<u64> {
        let rhs = &self.grammar.productions[prod].rhs;
        if !rhs.contains(&target) {
            return None;
        }
        let mut cost = self.type_i_weight(prod);
        if self.grammar.is_nonterminal(target) {
            let mut skipped = false;
            for &s in rhs {
                if self.grammar.is_nonterminal(s) {
                    if s == target && !skipped {
                        skipped = true;
                        continue;
                    }
                    cost += self.sy_val.get(&s)?;
                }
            }
        } else {
            for &s in rhs {
                if self.grammar.is_nonterminal(s) {
                    cost += self.sy_val.get(&s)?;
                }
            }
        }
        Some(cost)
    }

    // route deeper through the occ-th nonterminal occurrence: production
    // weight, drained siblings, then the best known cost from there
    fn via_cost(&self, prod: usize, occ: usize, dist: &HashMap<Sym, u64>) -> Option<u64> {
        let rhs_nts = self.type_ii_targets(prod);
        let via = rhs_nts[occ];
        let mut cost = self.type_i_weight(prod) + dist.get(&via).copied()?;
        for (i, &s) in rhs_nts.iter().enumerate() {
            if i != occ {
                cost += self.sy_val.get(&s)?;
            }
        }
        Some(cost)
    }

    /// Cost breakdown of reaching `target` through the `occ`-th nonterminal
    /// occurrence of production `prod`.
    pub fn d_min_branch(&self, prod: usize, occ: usize, target: Sym) -> DminBranch {
        let type_i = self.type_i_weight(prod);
        let rhs_nts = self.type_ii_targets(prod);
        let completion = (|| {
            let via = rhs_nts.get(occ).copied()?;
            let mut c = self.d_min(via, target)?;
            for (i, &s) in rhs_nts.iter().enumerate() {
                if i != occ {
                    c += self.sy_val.get(&s)?;
                }
            }
            Some(c)
        })();
        DminBranch { type_i, completion, total: completion.map(|c| c + type_i) }
    }

    /// Graphviz rendering of the derivation graph.
    pub fn to_dot(&self) -> String {
        let g = self.grammar;
        let mut out = String::from("digraph derivation {\n  rankdir=LR;\n");
        for nt in g.nonterminals() {
            let sy = self
                .shortest_yield(nt)
                .map(|v| v.to_string())
                .unwrap_or_else(|| "inf".into());
            let _ = writeln!(out, "  n{nt} [label=\"{} (sy={sy})\"];", g.sym_name(nt));
        }
        for (p, prod) in g.productions.iter().enumerate() {
            let rhs: Vec<&str> = prod.rhs.iter().map(|&s| g.sym_name(s)).collect();
            let label = if rhs.is_empty() { "(empty)".to_string() } else { rhs.join(" ") };
            let _ = writeln!(out, "  p{p} [shape=box,label=\"{label}\"];");
            let _ = writeln!(out, "  n{} -> p{p} [label=\"{}\"];", prod.lhs, self.type_i_weight(p));
            for v in self.type_ii_targets(p) {
                let _ = writeln!(out, "  p{p} -> n{v};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Independent reference for [`DerivationGraph::d_min`]: plain breadth-first
/// enumeration of leftmost derivation states, no pricing involved. Exact for
/// grammars without epsilon rules; costs above `bound` report as `None`.
pub fn brute_force_d_min(g: &Grammar, from: Sym, target: Sym, bound: u64) -> Option<u64> {
    #[derive(PartialEq, Eq, Hash, Clone)]
    struct St {
        pending: Vec<Sym>,
        found: bool,
    }
    let nullable = nullable_set(g);
    let start = St { pending: vec![from], found: false };
    let mut best: HashMap<St, u64> = HashMap::new();
    let mut heap: BinaryHeap<Reverse<(u64, u64)>> = BinaryHeap::new();
    let mut arena: Vec<St> = vec![start.clone()];
    best.insert(start, 0);
    heap.push(Reverse((0, 0)));
    let pending_cap = (bound as usize + 2) * (g.nonterminals().len() + 2);
    while let Some(Reverse((cost, idx))) = heap.pop() {
        let st = arena[idx as usize].clone();
        if best.get(&st).copied() != Some(cost) {
            continue;
        }
        if st.pending.is_empty() {
            if st.found {
                return Some(cost);
            }
            continue;
        }
        let mut push = |st2: St, c2: u64, heap: &mut BinaryHeap<Reverse<(u64, u64)>>| {
            if c2 > bound || st2.pending.len() > pending_cap {
                return;
            }
            let floor: u64 =
                st2.pending.iter().filter(|s| !nullable.contains(s)).count() as u64;
            if c2 + floor > bound {
                return;
            }
            if best.get(&st2).is_none_or(|&b| c2 < b) {
                best.insert(st2.clone(), c2);
                arena.push(st2);
                heap.push(Reverse((c2, arena.len() as u64 - 1)));
            }
        };
        let mut rest = st.pending.clone();
        let sym = rest.pop().unwrap();
        if g.is_nonterminal(sym) {
            if sym == target && !st.found {
                push(St { pending: rest.clone(), found: true }, cost, &mut heap);
            }
            for &p in g.productions_of(sym) {
                let mut pending = rest.clone();
                pending.extend(g.productions[p].rhs.iter().rev());
                push(St { pending, found: st.found }, cost, &mut heap);
            }
        } else {
            let found = st.found || sym == target;
            push(St { pending: rest, found }, cost + 1, &mut heap);
        }
    }
    None
}

fn nullable_set(g: &Grammar) -> HashSet<Sym> {
    let mut nullable = HashSet::new();
    loop {
        let mut changed = false;
        for p in &g.productions {
            if !nullable.contains(&p.lhs) && p.rhs.iter().all(|s| nullable.contains(s)) {
                nullable.insert(p.lhs);
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

/// One output token of a synthesized patch. `orig` carries the original
/// program token this one realizes; drained filler has none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchTok {
    pub lexeme: String,
    pub sym: Sym,
    pub orig: Option<Token>,
}

impl PatchTok {
    // sort key: bound originals first, by original position, then lexeme
    fn prov_key(&self) -> (u8, usize, &str) {
        match &self.orig {
            Some(t) => (0, t.pos, self.lexeme.as_str()),
            None => (1, 0, self.lexeme.as_str()),
        }
    }
}

/// A completed sentential form: tokens plus at most one hole. `hole_at` is
/// the number of tokens emitted before the hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchSolution {
    pub tokens: Vec<PatchTok>,
    pub hole_at: Option<usize>,
    pub cost: u64,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct SearchState {
    emitted: Vec<(Option<usize>, String)>,
    pending: Vec<Sym>,
    matched: usize,
    placed: bool,
    hole_at: Option<usize>,
    ctx: (u8, usize),
}

struct QueueItem {
    seq: u64,
    cost: u64,
    emitted: Vec<PatchTok>,
    pending: Vec<Sym>,
    matched: usize,
    placed: bool,
    hole_at: Option<usize>,
    ctx: (u8, usize),
}

/// Enumerates, cheapest first, token sequences derivable from `root` that
/// embed a required token sequence, optionally around one hole.
///
/// A solution is a sentential form fully drained to terminals except for at
/// most one unexpanded `target` occurrence, the hole. The required tokens
/// before the hole index must embed as a subsequence before the hole, the
/// rest after it. Required tokens bind greedily and keep their provenance;
/// other terminals are drained filler. Equal-cost solutions come out ordered
/// by provenance (original tokens early beat filler), so the first solution
/// is the canonical minimal patch. `cap` prunes anything that cannot finish
/// at or below the given terminal count; searches on grammars with epsilon
/// cycles need it to terminate.
pub struct MinPatchStream<'g> {
    dg: &'g DerivationGraph<'g>,
    alpha: Vec<Token>,
    target: Option<Sym>,
    hole_idx: usize,
    cap: Option<u64>,
    pending_cap: usize,
    /// d_min to the target, for hole-aware cost bounds
    hole_dist: HashMap<Sym, u64>,
    /// bindable original tokens before and after the hole; drained terminals
    /// greedily take these lexemes (and their provenance) when they fit
    context: [Vec<Token>; 2],
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    items: Vec<QueueItem>,
    visited: HashSet<SearchState>,
    ready: Vec<PatchSolution>,
    seq: u64,
    exhausted: bool,
}

const LEVEL_WIDTH_CAP: usize = 4096;

impl<'g> MinPatchStream<'g> {
    pub fn new(
        dg: &'g DerivationGraph<'g>,
        root: Sym,
        alpha: Vec<Token>,
        target: Option<Sym>,
        hole_idx: usize,
        cap: Option<u64>,
    ) -> Self {
        Self::with_context(dg, root, alpha, target, hole_idx, cap, Vec::new(), Vec::new())
    }

    /// Like [`MinPatchStream::new`], with bindable context tokens around the
    /// hole. Context binding is optional and greedy; it steers drained filler
    /// toward lexemes that re-embed into the original program.
    #[allow(clippy::too_many_arguments)]
    pub fn with_context(
        dg: &'g DerivationGraph<'g>,
        root: Sym,
        alpha: Vec<Token>,
        target: Option<Sym>,
        hole_idx: usize,
        cap: Option<u64>,
        ctx_pre: Vec<Token>,
        ctx_post: Vec<Token>,
    ) -> Self {
        assert!(dg.grammar.is_nonterminal(root), "patch root must be a nonterminal");
        assert!(hole_idx <= alpha.len(), "hole index past the required tokens");
        let placed = target.is_none();
        let hole_idx = if target.is_none() { alpha.len() } else { hole_idx };
        let pending_cap = match cap {
            // tall enough for any minimal derivation of a capped string
            Some(c) => {
                let n = dg.grammar.nonterminals().len().max(1);
                let rhs_max =
                    dg.grammar.productions.iter().map(|p| p.rhs.len()).max().unwrap_or(1).max(1);
                ((c as usize + 2) * (n + 2) * rhs_max).min(20_000)
            }
            None => usize::MAX,
        };
        let mut stream = MinPatchStream {
            dg,
            alpha,
            target,
            hole_idx,
            cap,
            pending_cap,
            hole_dist: target.map(|t| dg.d_min_all(t)).unwrap_or_default(),
            context: [ctx_pre, ctx_post],
            heap: BinaryHeap::new(),
            items: Vec::new(),
            visited: HashSet::new(),
            ready: Vec::new(),
            seq: 0,
            exhausted: false,
        };
        stream.push_state(0, Vec::new(), vec![root], 0, placed, None, (0, 0));
        stream
    }

    // cheapest completion this occurrence could host the hole at
    fn hole_dist_eff(&self, s: Sym) -> Option<u64> {
        if Some(s) == self.target {
            return Some(0);
        }
        self.hole_dist.get(&s).copied()
    }

    fn lower_bound(&self, cost: u64, pending: &[Sym], matched: usize, placed: bool) -> Option<u64> {
        let g = self.dg.grammar;
        let mut pend_lb: u64 = 0;
        if placed {
            for &s in pending {
                if !g.is_nonterminal(s) {
                    pend_lb += 1;
                } else {
                    // everything after the hole must drain to terminals
                    pend_lb += self.dg.shortest_yield(s)?;
                }
            }
        } else {
            // the hole routes through exactly one pending occurrence, which
            // pays its distance to the hole instead of its shortest yield
            let mut undrainable: Option<Sym> = None;
            let mut best_swap: Option<i64> = None;
            for &s in pending {
                if !g.is_nonterminal(s) {
                    pend_lb += 1;
                    continue;
                }
                match self.dg.shortest_yield(s) {
                    Some(v) => {
                        pend_lb += v;
                        if let Some(h) = self.hole_dist_eff(s) {
                            let swap = v as i64 - h as i64;
                            best_swap = Some(best_swap.map_or(swap, |b| b.max(swap)));
                        }
                    }
                    None => {
                        if undrainable.replace(s).is_some() {
                            return None;
                        }
                    }
                }
            }
            match undrainable {
                Some(s) => pend_lb += self.hole_dist_eff(s)?,
                None => {
                    let swap = best_swap?;
                    pend_lb = (pend_lb as i64 - swap).max(0) as u64;
                }
            }
        }
        let alpha_lb = (self.alpha.len() - matched) as u64;
        Some(cost + pend_lb.max(alpha_lb))
    }

    #[allow(clippy::too_many_arguments)]
    fn push_state(
        &mut self,
        cost: u64,
        emitted: Vec<PatchTok>,
        pending: Vec<Sym>,
        matched: usize,
        placed: bool,
        hole_at: Option<usize>,
        ctx: (u8, usize),
    ) {
        if pending.len() > self.pending_cap {
            return;
        }
        let Some(priority) = self.lower_bound(cost, &pending, matched, placed) else { return };
        if self.cap.is_some_and(|c| priority > c) {
            return;
        }
        let key = SearchState {
            emitted: emitted
                .iter()
                .map(|t| (t.orig.as_ref().map(|o| o.pos), t.lexeme.clone()))
                .collect(),
            pending: pending.clone(),
            matched,
            placed,
            hole_at,
            ctx,
        };
        if !self.visited.insert(key) {
            return;
        }
        let seq = self.seq;
        self.seq += 1;
        self.items
            .push(QueueItem { seq, cost, emitted, pending, matched, placed, hole_at, ctx });
        self.heap.push(Reverse((priority, seq)));
    }

    fn expand(&mut self, item_idx: usize) {
        let (cost, emitted, mut pending, matched, placed, hole_at, ctx) = {
            let it = &self.items[item_idx];
            (
                it.cost,
                it.emitted.clone(),
                it.pending.clone(),
                it.matched,
                it.placed,
                it.hole_at,
                it.ctx,
            )
        };
        let Some(sym) = pending.pop() else { return };
        let g = self.dg.grammar;
        if g.is_nonterminal(sym) {
            // this occurrence can be the hole when the pre-hole tokens are in
            if !placed && Some(sym) == self.target && matched == self.hole_idx {
                self.push_state(
                    cost,
                    emitted.clone(),
                    pending.clone(),
                    matched,
                    true,
                    Some(emitted.len()),
                    (1, 0),
                );
            }
            for &p in g.productions_of(sym).to_vec().iter() {
                let mut pending2 = pending.clone();
                pending2.extend(g.productions[p].rhs.iter().rev());
                self.push_state(cost, emitted.clone(), pending2, matched, placed, hole_at, ctx);
            }
            return;
        }
        // terminal: either bind the next required token (when it fits and is
        // on the right side of the hole), or fill from context or a sample.
        // Both branches cost the same; binding eagerly can strand the token
        // in a spot that later fails re-embedding, so neither is forced.
        let bind_ceiling = if placed { self.alpha.len() } else { self.hole_idx };
        if matched < bind_ceiling && g.terminal_matches(sym, &self.alpha[matched].lexeme) {
            let required = self.alpha[matched].clone();
            let mut ctx2 = ctx;
            // skip context the required token already sits past
            let side = &self.context[ctx2.0 as usize];
            while ctx2.1 < side.len() && side[ctx2.1].pos <= required.pos {
                ctx2.1 += 1;
            }
            let tok = PatchTok { lexeme: required.lexeme.clone(), sym, orig: Some(required) };
            let mut emitted2 = emitted.clone();
            emitted2.push(tok);
            self.push_state(cost + 1, emitted2, pending.clone(), matched + 1, placed, hole_at, ctx2);
        }
        let mut ctx2 = ctx;
        let side = &self.context[ctx2.0 as usize];
        let tok = match side[ctx2.1.min(side.len())..]
            .iter()
            .position(|c| g.terminal_matches(sym, &c.lexeme))
        {
            Some(off) => {
                let hit = side[ctx2.1 + off].clone();
                ctx2.1 += off + 1;
                PatchTok { lexeme: hit.lexeme.clone(), sym, orig: Some(hit) }
            }
            None => PatchTok { lexeme: g.sample_lexeme(sym), sym, orig: None },
        };
        let mut emitted2 = emitted;
        emitted2.push(tok);
        self.push_state(cost + 1, emitted2, pending, matched, placed, hole_at, ctx2);
    }

    /// Next solution in (cost, provenance) order; None when exhausted.
    pub fn next_solution(&mut self) -> Option<PatchSolution> {
        if let Some(s) = self.take_ready() {
            return Some(s);
        }
        if self.exhausted {
            return None;
        }
        let mut level: Option<u64> = None;
        let mut finals: Vec<PatchSolution> = Vec::new();
        loop {
            let Some(&Reverse((priority, _))) = self.heap.peek() else {
                self.exhausted = true;
                break;
            };
            if level.is_some_and(|c| priority > c) {
                break;
            }
            let Reverse((_, seq)) = self.heap.pop().unwrap();
            let idx = self
                .items
                .iter()
                .position(|it| it.seq == seq)
                .expect("queued item exists");
            let is_final = {
                let it = &self.items[idx];
                it.pending.is_empty() && it.matched == self.alpha.len() && it.placed
            };
            if is_final {
                let it = &self.items[idx];
                if level.is_none() {
                    level = Some(it.cost);
                }
                if finals.len() < LEVEL_WIDTH_CAP {
                    finals.push(PatchSolution {
                        tokens: it.emitted.clone(),
                        hole_at: it.hole_at,
                        cost: it.cost,
                    });
                }
            } else {
                self.expand(idx);
            }
            self.items.swap_remove(idx);
        }
        finals.sort_by(|a, b| {
            let ka: Vec<_> = a.tokens.iter().map(PatchTok::prov_key).collect();
            let kb: Vec<_> = b.tokens.iter().map(PatchTok::prov_key).collect();
            ka.cmp(&kb).then(a.hole_at.cmp(&b.hole_at))
        });
        finals.reverse();
        self.ready = finals;
        self.take_ready()
    }

    fn take_ready(&mut self) -> Option<PatchSolution> {
        self.ready.pop()
    }
}

/// Cheapest token sequence derivable from `root` embedding `alpha` around an
/// optional hole. The canonical minimal solution of [`MinPatchStream`].
pub fn gen_min_patch(
    dg: &DerivationGraph<'_>,
    root: Sym,
    alpha: &[Token],
    target: Option<Sym>,
    hole_idx: usize,
    cap: Option<u64>,
) -> Option<PatchSolution> {
    MinPatchStream::new(dg, root, alpha.to_vec(), target, hole_idx, cap).next_solution()
}

impl Grammar {
    /// A lexeme that reads as terminal `s`: literals render themselves, class
    /// terminals get a fixed sample that no grammar literal shadows.
    pub fn sample_lexeme(&self, s: Sym) -> String {
        match self.symbol(s) {
            SymbolKind::Nonterminal(n) => panic!("no lexeme for nonterminal {n}"),
            SymbolKind::Literal(l) => l.clone(),
            SymbolKind::Class(class) => {
                let candidates: &[&str] = match class {
                    crate::grammar::LexClass::Ident => {
                        &["x", "y", "z", "v0", "v1", "v2", "v3", "v4", "v5", "v6", "v7"]
                    }
                    crate::grammar::LexClass::Num => &["0", "1", "2"],
                    crate::grammar::LexClass::Float => &["0.0"],
                    crate::grammar::LexClass::Char => &["'a'"],
                    crate::grammar::LexClass::Str => &["\"s\""],
                };
                candidates
                    .iter()
                    .find(|c| self.terminal_matches(s, c))
                    .unwrap_or_else(|| panic!("no sample lexeme fits {}", self.sym_name(s)))
                    .to_string()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{load_grammar, Program};

    const FIG6: &str = "X -> mY|M|uCDv\nY -> dZf\nZ -> M|k\nM -> mn\nC -> m\nD -> gnh|nd\n";

    fn toks(s: &str) -> Vec<Token> {
        Program::from_lexemes("t", &s.split_whitespace().collect::<Vec<_>>()).tokens
    }

    fn lexemes(sol: &PatchSolution) -> Vec<&str> {
        sol.tokens.iter().map(|t| t.lexeme.as_str()).collect()
    }

    #[test]
    fn shortest_yields_frozen() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let sy = |n: &str| dg.shortest_yield(g.nonterminal(n).unwrap());
        assert_eq!(sy("X"), Some(2));
        assert_eq!(sy("Y"), Some(3));
        assert_eq!(sy("Z"), Some(1));
        assert_eq!(sy("M"), Some(2));
        assert_eq!(sy("C"), Some(1));
        assert_eq!(sy("D"), Some(2));
        let wit = |n: &str| {
            dg.shortest_yield_witness(g.nonterminal(n).unwrap())
                .unwrap()
                .iter()
                .map(|&s| g.sym_name(s).to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(wit("X"), vec!["m", "n"]);
        assert_eq!(wit("Z"), vec!["k"]);
        assert_eq!(wit("D"), vec!["n", "d"]);
    }

    #[test]
    fn infinite_yield_detected() {
        let g = load_grammar("S -> a S\n").unwrap();
        let dg = DerivationGraph::new(&g);
        assert_eq!(dg.shortest_yield(g.start), None);
        let g = load_grammar("S -> a S | b\n").unwrap();
        let dg = DerivationGraph::new(&g);
        assert_eq!(dg.shortest_yield(g.start), Some(1));
    }

    #[test]
    fn edge_weights_frozen() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let x = g.nonterminal("X").unwrap();
        let weights: Vec<u64> =
            g.productions_of(x).iter().map(|&p| dg.type_i_weight(p)).collect();
        assert_eq!(weights, vec![1, 0, 2]);
        let ucdv = g.productions_of(x)[2];
        let targets: Vec<&str> =
            dg.type_ii_targets(ucdv).iter().map(|&s| g.sym_name(s)).collect();
        assert_eq!(targets, vec!["C", "D"]);
    }

    #[test]
    fn d_min_values_frozen() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let x = g.nonterminal("X").unwrap();
        let d = g.nonterminal("D").unwrap();
        let c = g.nonterminal("C").unwrap();
        let m = g.productions[g.productions_of(g.nonterminal("C").unwrap())[0]].rhs[0];
        assert_eq!(g.sym_name(m), "m");
        // cheapest form from X containing m is the full string "m n"
        assert_eq!(dg.d_min(x, m), Some(2));
        assert_eq!(dg.d_min(c, m), Some(1));
        assert_eq!(dg.d_min(d, m), None);
        // nonterminal target: hole for C inside "u _ n d v"
        assert_eq!(dg.d_min(x, c), Some(4));
        let u = g.productions[g.productions_of(x)[2]].rhs[0];
        assert_eq!(g.sym_name(u), "u");
        assert_eq!(dg.d_min(x, u), Some(5));
    }

    #[test]
    fn d_min_branch_breakdown_frozen() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let x = g.nonterminal("X").unwrap();
        let ucdv = g.productions_of(x)[2];
        let m = g.nonterminal("C").map(|c| g.productions[g.productions_of(c)[0]].rhs[0]).unwrap();
        // route to m through C: the production's own two terminals, then D
        // drained (2) plus reaching m inside C (1)
        let via_c = dg.d_min_branch(ucdv, 0, m);
        assert_eq!(via_c, DminBranch { type_i: 2, completion: Some(3), total: Some(5) });
        // D cannot reach m at all
        let via_d = dg.d_min_branch(ucdv, 1, m);
        assert_eq!(via_d, DminBranch { type_i: 2, completion: None, total: None });
    }

    #[test]
    fn d_min_matches_brute_force_on_every_pair() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let terminals: Vec<Sym> =
            (0..g.symbol_count() as Sym).filter(|&s| !g.is_nonterminal(s)).collect();
        for from in g.nonterminals() {
            for &t in &terminals {
                let fast = dg.d_min(from, t);
                let slow = brute_force_d_min(&g, from, t, 12);
                assert_eq!(fast, slow, "d_min({}, {})", g.sym_name(from), g.sym_name(t));
            }
        }
    }

    #[test]
    fn d_min_of_terminal_dominates_shortest_yield() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        for from in g.nonterminals() {
            let sy = dg.shortest_yield(from).unwrap();
            for t in (0..g.symbol_count() as Sym).filter(|&s| !g.is_nonterminal(s)) {
                if let Some(d) = dg.d_min(from, t) {
                    assert!(d >= sy, "d_min({}, {}) below shortest yield", from, t);
                }
            }
        }
    }

    #[test]
    fn min_patch_binds_required_tokens() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let sol = gen_min_patch(&dg, g.start, &toks("m n"), None, 2, Some(10)).unwrap();
        assert_eq!(lexemes(&sol), vec!["m", "n"]);
        assert_eq!(sol.cost, 2);
        assert!(sol.tokens.iter().all(|t| t.orig.is_some()));
        assert_eq!(sol.hole_at, None);

        let sol = gen_min_patch(&dg, g.start, &toks("u v"), None, 2, Some(10)).unwrap();
        assert_eq!(lexemes(&sol), vec!["u", "m", "n", "d", "v"]);
        let orig: Vec<bool> = sol.tokens.iter().map(|t| t.orig.is_some()).collect();
        assert_eq!(orig, vec![true, false, false, false, true]);
    }

    #[test]
    fn equal_cost_prefers_early_original_tokens() {
        let g = load_grammar("S -> ba | ab\n").unwrap();
        let dg = DerivationGraph::new(&g);
        let sol = gen_min_patch(&dg, g.start, &toks("a"), None, 1, Some(4)).unwrap();
        assert_eq!(lexemes(&sol), vec!["a", "b"]);
        assert!(sol.tokens[0].orig.is_some());
    }

    #[test]
    fn hole_placement() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let c = g.nonterminal("C").unwrap();
        let sol = gen_min_patch(&dg, g.start, &[], Some(c), 0, Some(10)).unwrap();
        assert_eq!(lexemes(&sol), vec!["u", "n", "d", "v"]);
        assert_eq!(sol.hole_at, Some(1));
        assert_eq!(sol.cost, 4);
    }

    #[test]
    fn hole_respects_required_token_split() {
        // hole must sit after the u and before the v
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let c = g.nonterminal("C").unwrap();
        let alpha = toks("u v");
        let sol = MinPatchStream::new(&dg, g.start, alpha, Some(c), 1, Some(10))
            .next_solution()
            .unwrap();
        assert_eq!(lexemes(&sol), vec!["u", "n", "d", "v"]);
        assert_eq!(sol.hole_at, Some(1));
    }

    #[test]
    fn zero_step_plan_is_legal() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let sol = gen_min_patch(&dg, g.start, &[], Some(g.start), 0, Some(10)).unwrap();
        assert_eq!(sol.cost, 0);
        assert!(sol.tokens.is_empty());
        assert_eq!(sol.hole_at, Some(0));
    }

    #[test]
    fn infeasible_alpha_returns_none() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        assert_eq!(gen_min_patch(&dg, g.start, &toks("q"), None, 1, Some(8)), None);
        // feasible tokens in an impossible order
        assert_eq!(gen_min_patch(&dg, g.start, &toks("v u"), None, 2, Some(8)), None);
    }

    #[test]
    fn stream_yields_costs_in_order() {
        let g = load_grammar(FIG6).unwrap();
        let dg = DerivationGraph::new(&g);
        let mut stream = MinPatchStream::new(&dg, g.start, toks("m"), None, 1, Some(7));
        let mut costs = Vec::new();
        while let Some(sol) = stream.next_solution() {
            let toks = sol.tokens;
            assert!(toks.iter().any(|t| t.orig.is_some()));
            costs.push(sol.cost);
        }
        assert!(!costs.is_empty());
        let mut sorted = costs.clone();
        sorted.sort_unstable();
        assert_eq!(costs, sorted);
        assert_eq!(costs[0], 2);
    }

    #[test]
    fn context_binding_reuses_original_tokens() {
        let g = load_grammar("B -> \"{\" S \"}\"\nS -> IDENT \"=\" NUM \";\"\n").unwrap();
        let dg = DerivationGraph::new(&g);
        let b = g.nonterminal("B").unwrap();
        // without context the drain synthesizes sample lexemes
        let sol = gen_min_patch(&dg, b, &[], None, 0, Some(8)).unwrap();
        assert_eq!(lexemes(&sol), vec!["{", "x", "=", "0", ";", "}"]);
        assert!(sol.tokens.iter().all(|t| t.orig.is_none()));
        // with context the same drain reuses the original tokens
        let ctx = toks("{ a = 1 ; }");
        let sol = MinPatchStream::with_context(&dg, b, vec![], None, 0, Some(8), ctx, vec![])
            .next_solution()
            .unwrap();
        assert_eq!(lexemes(&sol), vec!["{", "a", "=", "1", ";", "}"]);
        assert!(sol.tokens.iter().all(|t| t.orig.is_some()));
    }

    #[test]
    fn context_binding_straddles_the_hole() {
        let g = load_grammar("B -> \"{\" S \"}\"\nS -> IDENT \"=\" NUM \";\" | W\nW -> w\n").unwrap();
        let dg = DerivationGraph::new(&g);
        let b = g.nonterminal("B").unwrap();
        let w = g.nonterminal("W").unwrap();
        let ctx = toks("{ }");
        let (pre, post) = (vec![ctx[0].clone()], vec![ctx[1].clone()]);
        let sol = MinPatchStream::with_context(&dg, b, vec![], Some(w), 0, Some(8), pre, post)
            .next_solution()
            .unwrap();
        assert_eq!(lexemes(&sol), vec!["{", "}"]);
        assert_eq!(sol.hole_at, Some(1));
        assert!(sol.tokens.iter().all(|t| t.orig.is_some()));
    }

    #[test]
    fn epsilon_cycle_terminates_under_cap() {
        let g = load_grammar("S -> S S | a | %empty\n").unwrap();
        let dg = DerivationGraph::new(&g);
        assert_eq!(dg.shortest_yield(g.start), Some(0));
        let sol = gen_min_patch(&dg, g.start, &toks("a a"), None, 2, Some(3)).unwrap();
        assert_eq!(lexemes(&sol), vec!["a", "a"]);
        assert_eq!(gen_min_patch(&dg, g.start, &toks("b"), None, 1, Some(3)), None);
    }
}
