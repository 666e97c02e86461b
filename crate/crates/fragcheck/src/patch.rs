//! Syntactic patching: complete a fragment into a valid program that keeps
//! the fragment's pairwise ancestor structure.
//!
//! A good patch s' of a fragment s cut from program p satisfies four
//! conditions: s is a subsequence of s', s' parses, s' is a subsequence of p,
//! and every pair of fragment tokens has the same lowest-common-ancestor
//! relation (node label, production, and 1-based child indexes) in s' as in
//! p. Subsequence checks embed greedily by lexeme.
//!
//! [`lca_patch`] builds candidates structurally: fragment leaves collapse
//! bottom-up at their LCA nodes, each collapsed node keeps its original
//! production, and the gaps are filled by cheapest-first completion streams.
//! Joint candidates are enumerated in total-length order and the first one
//! that passes the four conditions wins. The original program is always a
//! valid candidate, so the search cannot come back empty-handed.
//!
//! [`brute_force_patch`] is the independent reference: it tries raw position
//! subsets of p in (size, lexicographic) order and returns the first valid
//! one. Its lca mode realizes the same four conditions directly.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::derivation::{DerivationGraph, MinPatchStream, PatchSolution, PatchTok};
use crate::fragment::{embed_positions, Fragment};
use crate::grammar::{Grammar, GrammarError, NodeId, ParseTree, SourceLoc, Sym, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("fragment selects no tokens")]
    EmptyFragment,
    #[error("lca relation needs two distinct tokens (both at {pos})")]
    NotDistinct { pos: usize },
}

/// The ancestor fact of one token pair: their LCA's label, its production,
/// and which children (1-based) hold each token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcaRelation {
    pub label: String,
    pub rhs: Vec<String>,
    pub left_child: usize,
    pub right_child: usize,
}

impl LcaRelation {
    /// Compact rendering of the production right-hand side, e.g. "bCDEf".
    pub fn rhs_compact(&self) -> String {
        self.rhs.concat()
    }
}

impl std::fmt::Display for LcaRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.label,
            self.rhs_compact(),
            self.left_child,
            self.right_child
        )
    }
}

/// LCA relation of the tokens at positions `px` and `py` of a parsed
/// sequence. Order of the positions does not matter.
pub fn lca_relation(
    g: &Grammar,
    tree: &ParseTree,
    px: usize,
    py: usize,
) -> Result<LcaRelation, PatchError> {
    if px == py {
        return Err(PatchError::NotDistinct { pos: px });
    }
    let (px, py) = (px.min(py), px.max(py));
    let x = tree.leaf_at(px).expect("position within the parsed sequence");
    let y = tree.leaf_at(py).expect("position within the parsed sequence");
    let lca = tree.lca(x, y);
    let node = tree.node(lca);
    let prod = node.prod.expect("lca of two distinct leaves is interior");
    let rhs = g.productions[prod].rhs.iter().map(|&s| g.sym_name(s).to_string()).collect();
    Ok(LcaRelation {
        label: g.sym_name(node.sym).to_string(),
        rhs,
        left_child: child_index(tree, lca, x) + 1,
        right_child: child_index(tree, lca, y) + 1,
    })
}

// index of the child of `anc` whose subtree holds `node`
fn child_index(tree: &ParseTree, anc: NodeId, node: NodeId) -> usize {
    let mut cur = node;
    loop {
        let parent = tree.node(cur).parent.expect("node is below anc");
        if parent == anc {
            let siblings = &tree.node(parent).children;
            return siblings.iter().position(|&c| c == cur).expect("child link");
        }
        cur = parent;
    }
}

/// All pairwise relations of the given positions, in pair-lexicographic order.
pub fn pairwise_relations(
    g: &Grammar,
    tree: &ParseTree,
    positions: &[usize],
) -> Result<Vec<LcaRelation>, PatchError> {
    let mut out = Vec::new();
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            out.push(lca_relation(g, tree, positions[i], positions[j])?);
        }
    }
    Ok(out)
}

/// Outcome of checking a candidate completion against the four conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchCheck {
    /// fragment embeds into the candidate
    pub fragment_embeds: bool,
    /// candidate parses under the grammar
    pub parses: bool,
    /// candidate embeds back into the original program
    pub embeds_in_program: bool,
    /// every token pair keeps its original LCA relation
    pub relations_preserved: bool,
}

impl PatchCheck {
    pub fn ok(&self) -> bool {
        self.fragment_embeds && self.parses && self.embeds_in_program && self.relations_preserved
    }
}

/// Checks a candidate token sequence against all four conditions for
/// `fragment`. The fragment's program must parse (it defines the relations).
pub fn check_patch(
    g: &Grammar,
    fragment: &Fragment,
    candidate: &[Token],
) -> Result<PatchCheck, PatchError> {
    let p_tokens = renumbered(&fragment.program.tokens);
    let p_tree = g.parse(&p_tokens)?;
    let want = pairwise_relations(g, &p_tree, fragment.picks())?;
    Ok(check_against(g, fragment, &p_tokens, &want, candidate))
}

fn check_against(
    g: &Grammar,
    fragment: &Fragment,
    p_tokens: &[Token],
    want: &[LcaRelation],
    candidate: &[Token],
) -> PatchCheck {
    let frag_tokens = fragment.tokens();
    let mut check = PatchCheck {
        fragment_embeds: false,
        parses: false,
        embeds_in_program: false,
        relations_preserved: false,
    };
    let Some(embed) = embed_positions(&frag_tokens, candidate) else { return check };
    check.fragment_embeds = true;
    check.embeds_in_program = embed_positions(candidate, p_tokens).is_some();
    let Ok(tree) = g.parse(candidate) else { return check };
    check.parses = true;
    let Ok(got) = pairwise_relations(g, &tree, &embed) else { return check };
    check.relations_preserved = got == want;
    check
}

/// A finished patch: the completed token sequence, where each token came
/// from, and the relation log it preserves.
#[derive(Debug, Clone)]
pub struct PatchResult {
    /// The completed program. Positions are renumbered; source locations
    /// still point at the original program (synthesized filler gets line 0).
    pub patched: Vec<Token>,
    /// For each patched token, the original program position it realizes.
    pub origin: Vec<Option<usize>>,
    /// Indices of patched tokens that are not fragment tokens.
    pub added: Vec<usize>,
    /// The pairwise relations of the fragment in the original program.
    pub lca_log: Vec<LcaRelation>,
    /// False when the search fell back to the whole original program.
    pub minimal: bool,
}

// per-slot lazy solution cache over a completion stream
struct SlotStream<'g> {
    stream: MinPatchStream<'g>,
    cache: Vec<PatchSolution>,
    done: bool,
}

impl SlotStream<'_> {
    fn fetch(&mut self, i: usize) -> Option<&PatchSolution> {
        while self.cache.len() <= i && !self.done {
            match self.stream.next_solution() {
                Some(s) => self.cache.push(s),
                None => self.done = true,
            }
        }
        self.cache.get(i)
    }
}

enum Slot {
    Verbatim { tok: Token, sym: Sym },
    Plug { elem: usize },
    Stream { stream_id: usize, plug: Option<usize> },
}

enum ElemBody {
    Leaf(Token),
    Node(Vec<Slot>),
}

struct Elem {
    body: ElemBody,
}

const ENUM_BUDGET: usize = 200_000;

/// Completes `fragment` into the smallest candidate that keeps all four
/// conditions, by LCA-guided structural search. Falls back to the whole
/// original program when the search budget runs out.
pub fn lca_patch(g: &Grammar, fragment: &Fragment) -> Result<PatchResult, PatchError> {
    if fragment.is_empty() {
        return Err(PatchError::EmptyFragment);
    }
    let p_tokens = renumbered(&fragment.program.tokens);
    let tree = g.parse(&p_tokens)?;
    let lca_log = pairwise_relations(g, &tree, fragment.picks())?;
    let picks: HashSet<usize> = fragment.picks().iter().copied().collect();
    if picks.len() == p_tokens.len() {
        // the fragment is the whole program
        return Ok(assemble_identity(&p_tokens, &picks, lca_log));
    }

    let dg = DerivationGraph::new(g);
    let mut elems: Vec<Elem> = Vec::new();
    let mut streams: Vec<SlotStream<'_>> = Vec::new();
    // live completion roots, keyed by their tree node for determinism
    let mut live: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &pos in fragment.picks() {
        let leaf = tree.leaf_at(pos).expect("pick inside program");
        elems.push(Elem { body: ElemBody::Leaf(p_tokens[pos].clone()) });
        live.insert(leaf, elems.len() - 1);
    }

    let mut worklist: Vec<NodeId> =
        tree.node_ids().filter(|&id| tree.node(id).prod.is_some()).collect();
    worklist.sort_by_key(|&id| {
        (Reverse(tree.node(id).depth), tree.node(id).span.0, id)
    });

    for n in worklist {
        let members: Vec<(NodeId, usize)> = live
            .iter()
            .filter(|(&node, _)| tree.is_ancestor_or_self(n, node))
            .map(|(&node, &e)| (node, e))
            .collect();
        if members.len() < 2 {
            continue;
        }
        let mut slots = Vec::new();
        for &c in &tree.node(n).children {
            let under: Vec<(NodeId, usize)> = members
                .iter()
                .copied()
                .filter(|&(node, _)| tree.is_ancestor_or_self(c, node))
                .collect();
            // lower collapses ran first, so one child holds at most one root
            assert!(under.len() <= 1, "unmerged completion roots under one child");
            let child = tree.node(c);
            if let Some(tok) = &child.token {
                slots.push(Slot::Verbatim { tok: tok.clone(), sym: child.sym });
                continue;
            }
            let region = |a: usize, b: usize| p_tokens[a..b].to_vec();
            match under.first() {
                None => {
                    // no fragment below: cheapest completions of this child
                    let stream = MinPatchStream::with_context(
                        &dg,
                        child.sym,
                        Vec::new(),
                        None,
                        0,
                        Some((child.span.1 - child.span.0) as u64),
                        region(child.span.0, child.span.1),
                        Vec::new(),
                    );
                    streams.push(SlotStream { stream, cache: Vec::new(), done: false });
                    slots.push(Slot::Stream { stream_id: streams.len() - 1, plug: None });
                }
                Some(&(node, e)) if node == c => slots.push(Slot::Plug { elem: e }),
                Some(&(node, e)) => {
                    let sub = tree.node(node);
                    let (alpha, target, plug) = match &elems[e].body {
                        ElemBody::Leaf(tok) => (vec![tok.clone()], None, None),
                        ElemBody::Node(_) => (Vec::new(), Some(sub.sym), Some(e)),
                    };
                    let cap = (child.span.1 - child.span.0) as u64
                        - if plug.is_some() { (sub.span.1 - sub.span.0) as u64 } else { 0 };
                    let (pre, post) = if plug.is_some() {
                        (region(child.span.0, sub.span.0), region(sub.span.1, child.span.1))
                    } else {
                        (region(child.span.0, child.span.1), Vec::new())
                    };
                    let stream = MinPatchStream::with_context(
                        &dg, child.sym, alpha, target, 0, Some(cap), pre, post,
                    );
                    streams.push(SlotStream { stream, cache: Vec::new(), done: false });
                    slots.push(Slot::Stream { stream_id: streams.len() - 1, plug });
                }
            }
        }
        for (node, _) in &members {
            live.remove(node);
        }
        elems.push(Elem { body: ElemBody::Node(slots) });
        live.insert(n, elems.len() - 1);
    }

    assert_eq!(live.len(), 1, "all completion roots merge at the top");
    let (&top_node, &top_elem) = live.iter().next().unwrap();

    // wrap the top completion up to the start symbol unless it is the root
    let root_slots: Vec<Slot> = if top_node == tree.root() {
        vec![Slot::Plug { elem: top_elem }]
    } else {
        let sub = tree.node(top_node);
        let (alpha, target, plug) = match &elems[top_elem].body {
            ElemBody::Leaf(tok) => (vec![tok.clone()], None, None),
            ElemBody::Node(_) => (Vec::new(), Some(sub.sym), Some(top_elem)),
        };
        let cap = p_tokens.len() as u64
            - if plug.is_some() { (sub.span.1 - sub.span.0) as u64 } else { 0 };
        let (pre, post) = if plug.is_some() {
            (p_tokens[..sub.span.0].to_vec(), p_tokens[sub.span.1..].to_vec())
        } else {
            (p_tokens.clone(), Vec::new())
        };
        let stream =
            MinPatchStream::with_context(&dg, g.start, alpha, target, 0, Some(cap), pre, post);
        streams.push(SlotStream { stream, cache: Vec::new(), done: false });
        vec![Slot::Stream { stream_id: streams.len() - 1, plug }]
    };
    let root = Elem { body: ElemBody::Node(root_slots) };

    // joint enumeration over all stream slots, cheapest total length first
    let k = streams.len();
    let base_cost = verbatim_count(&root, &elems) as u64;
    let cost_of = |streams: &mut [SlotStream], pick: &[usize]| -> Option<u64> {
        let mut c = base_cost;
        for (i, &idx) in pick.iter().enumerate() {
            c += streams[i].fetch(idx)?.cost;
        }
        Some(c)
    };
    let mut heap: BinaryHeap<Reverse<(u64, Vec<usize>)>> = BinaryHeap::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let first = vec![0usize; k];
    if let Some(c) = cost_of(&mut streams, &first) {
        seen.insert(first.clone());
        heap.push(Reverse((c, first)));
    }
    let mut budget = ENUM_BUDGET;
    while let Some(Reverse((_, pick))) = heap.pop() {
        if budget == 0 {
            break;
        }
        budget -= 1;
        let cand = assemble(&root, &elems, &mut streams, &pick);
        let cand_tokens = to_tokens(&cand, &fragment.program.file);
        if check_against(g, fragment, &p_tokens, &lca_log, &cand_tokens).ok() {
            return Ok(finish(cand, cand_tokens, &picks, lca_log, true));
        }
        for i in 0..k {
            let mut next = pick.clone();
            next[i] += 1;
            if seen.contains(&next) {
                continue;
            }
            if let Some(c) = cost_of(&mut streams, &next) {
                seen.insert(next.clone());
                heap.push(Reverse((c, next)));
            }
        }
    }
    // budget exhausted: the whole program is always a valid completion
    Ok(assemble_identity(&p_tokens, &picks, lca_log))
}

fn verbatim_count(root: &Elem, elems: &[Elem]) -> usize {
    fn count(body: &ElemBody, elems: &[Elem]) -> usize {
        match body {
            ElemBody::Leaf(_) => 1,
            ElemBody::Node(slots) => slots
                .iter()
                .map(|s| match s {
                    Slot::Verbatim { .. } => 1,
                    Slot::Plug { elem } => count(&elems[*elem].body, elems),
                    Slot::Stream { plug, .. } => {
                        plug.map_or(0, |e| count(&elems[e].body, elems))
                    }
                })
                .sum(),
        }
    }
    count(&root.body, elems)
}

fn assemble(
    root: &Elem,
    elems: &[Elem],
    streams: &mut [SlotStream],
    pick: &[usize],
) -> Vec<PatchTok> {
    fn render(
        body: &ElemBody,
        elems: &[Elem],
        streams: &mut [SlotStream],
        pick: &[usize],
        out: &mut Vec<PatchTok>,
    ) {
        match body {
            ElemBody::Leaf(tok) => out.push(PatchTok {
                lexeme: tok.lexeme.clone(),
                sym: 0,
                orig: Some(tok.clone()),
            }),
            ElemBody::Node(slots) => {
                for slot in slots {
                    match slot {
                        Slot::Verbatim { tok, sym } => out.push(PatchTok {
                            lexeme: tok.lexeme.clone(),
                            sym: *sym,
                            orig: Some(tok.clone()),
                        }),
                        Slot::Plug { elem } => {
                            render(&elems[*elem].body, elems, streams, pick, out)
                        }
                        Slot::Stream { stream_id, plug } => {
                            let sol = streams[*stream_id]
                                .fetch(pick[*stream_id])
                                .expect("picked solution exists")
                                .clone();
                            match (sol.hole_at, plug) {
                                (Some(h), Some(e)) => {
                                    out.extend(sol.tokens[..h].iter().cloned());
                                    render(&elems[*e].body, elems, streams, pick, out);
                                    out.extend(sol.tokens[h..].iter().cloned());
                                }
                                (None, None) => out.extend(sol.tokens.iter().cloned()),
                                _ => unreachable!("hole and plug always pair up"),
                            }
                        }
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    render(&root.body, elems, streams, pick, &mut out);
    out
}

fn to_tokens(cand: &[PatchTok], file: &str) -> Vec<Token> {
    cand.iter()
        .enumerate()
        .map(|(i, t)| Token {
            lexeme: t.lexeme.clone(),
            pos: i,
            loc: t
                .orig
                .as_ref()
                .map(|o| o.loc.clone())
                .unwrap_or_else(|| SourceLoc::new(file, 0, 0)),
        })
        .collect()
}

fn finish(
    cand: Vec<PatchTok>,
    patched: Vec<Token>,
    picks: &HashSet<usize>,
    lca_log: Vec<LcaRelation>,
    minimal: bool,
) -> PatchResult {
    let origin: Vec<Option<usize>> = cand.iter().map(|t| t.orig.as_ref().map(|o| o.pos)).collect();
    let added = origin
        .iter()
        .enumerate()
        .filter(|(_, o)| o.map_or(true, |p| !picks.contains(&p)))
        .map(|(i, _)| i)
        .collect();
    PatchResult { patched, origin, added, lca_log, minimal }
}

fn assemble_identity(
    p_tokens: &[Token],
    picks: &HashSet<usize>,
    lca_log: Vec<LcaRelation>,
) -> PatchResult {
    let origin: Vec<Option<usize>> = (0..p_tokens.len()).map(Some).collect();
    let added = (0..p_tokens.len()).filter(|i| !picks.contains(i)).collect();
    PatchResult {
        patched: p_tokens.to_vec(),
        origin,
        added,
        lca_log,
        minimal: picks.len() == p_tokens.len(),
    }
}

fn renumbered(tokens: &[Token]) -> Vec<Token> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut t = t.clone();
            t.pos = i;
            t
        })
        .collect()
}

/// How [`brute_force_patch`] validates a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteMode {
    /// Any parseable position superset of the fragment.
    Token,
    /// Superset of the fragment's ancestor closure in the parse tree: every
    /// child of a node on a root-to-fragment path is kept whole.
    Tree,
    /// Parseable superset that also keeps every pairwise LCA relation.
    Lca,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BruteError {
    #[error(transparent)]
    Program(#[from] GrammarError),
    #[error("fragment selects no tokens")]
    EmptyFragment,
    #[error("no valid completion exists")]
    NoSolution,
    #[error("no valid completion within {bound} tokens")]
    BoundExceeded { bound: usize },
}

/// Exhaustive reference patcher: tries position subsets of the program in
/// (size, lexicographic) order and returns the first valid candidate, up to
/// `bound` tokens.
pub fn brute_force_patch(
    g: &Grammar,
    fragment: &Fragment,
    mode: BruteMode,
    bound: usize,
) -> Result<Vec<Token>, BruteError> {
    if fragment.is_empty() {
        return Err(BruteError::EmptyFragment);
    }
    let p_tokens = renumbered(&fragment.program.tokens);
    let tree = g.parse(&p_tokens)?;
    let want = pairwise_relations(g, &tree, fragment.picks())
        .expect("picks are distinct positions");

    let required: Vec<usize> = match mode {
        BruteMode::Token | BruteMode::Lca => fragment.picks().to_vec(),
        BruteMode::Tree => ancestor_closure(&tree, fragment.picks()),
    };
    let required_set: HashSet<usize> = required.iter().copied().collect();
    let extras: Vec<usize> =
        (0..p_tokens.len()).filter(|i| !required_set.contains(i)).collect();

    if required.len() > bound {
        return Err(BruteError::BoundExceeded { bound });
    }
    let frag_tokens = fragment.tokens();
    let max_extra = bound.saturating_sub(required.len()).min(extras.len());
    for k in 0..=max_extra {
        let mut combo = Combinations::new(extras.len(), k);
        while let Some(ix) = combo.next() {
            let mut positions = required.clone();
            positions.extend(ix.iter().map(|&i| extras[i]));
            positions.sort_unstable();
            let cand: Vec<Token> =
                positions.iter().enumerate().map(|(i, &p)| {
                    let mut t = p_tokens[p].clone();
                    t.pos = i;
                    t
                }).collect();
            let Ok(cand_tree) = g.parse(&cand) else { continue };
            if mode == BruteMode::Lca {
                let Some(embed) = embed_positions(&frag_tokens, &cand) else { continue };
                let got = pairwise_relations(g, &cand_tree, &embed)
                    .expect("embedded positions are distinct");
                if got != want {
                    continue;
                }
            }
            return Ok(cand);
        }
    }
    if required.len() + extras.len() <= bound {
        Err(BruteError::NoSolution)
    } else {
        Err(BruteError::BoundExceeded { bound })
    }
}

// positions kept by tree-mode patching: walk from the root; children of
// marked nodes that hold no fragment leaf are kept as whole subtrees
fn ancestor_closure(tree: &ParseTree, picks: &[usize]) -> Vec<usize> {
    let mut marked: HashSet<NodeId> = HashSet::new();
    for &pos in picks {
        let mut cur = Some(tree.leaf_at(pos).expect("pick inside program"));
        while let Some(n) = cur {
            marked.insert(n);
            cur = tree.node(n).parent;
        }
    }
    let mut keep: Vec<usize> = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(n) = stack.pop() {
        let node = tree.node(n);
        if !marked.contains(&n) {
            keep.extend(node.span.0..node.span.1);
            continue;
        }
        if node.token.is_some() {
            keep.push(node.span.0);
            continue;
        }
        for &c in node.children.iter().rev() {
            stack.push(c);
        }
    }
    keep.sort_unstable();
    keep
}

// fixed-size index combinations in lexicographic order
struct Combinations {
    n: usize,
    k: usize,
    cur: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let cur = (k <= n).then(|| (0..k).collect());
        Combinations { n, k, cur }
    }

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.cur.clone()?;
        // advance to the successor, rightmost index first
        let mut next = cur.clone();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if next[i] + 1 <= self.n - (self.k - i) {
                next[i] += 1;
                for j in i + 1..self.k {
                    next[j] = next[j - 1] + 1;
                }
                self.cur = Some(next);
                break;
            }
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::Fragment;
    use crate::grammar::{load_grammar, Program};

    fn prog(s: &str) -> Program {
        Program::from_lexemes("p", &s.split_whitespace().collect::<Vec<_>>())
    }

    fn lex(tokens: &[Token]) -> String {
        tokens.iter().map(|t| t.lexeme.as_str()).collect::<Vec<_>>().join(" ")
    }

    const NEST_GRAMMAR: &str = "S -> aA\nA -> bCDEf\nC -> c\nD -> d\nE -> e\n";

    #[test]
    fn relation_of_separated_tokens() {
        let g = load_grammar(NEST_GRAMMAR).unwrap();
        let p = prog("a b c d e f");
        let tree = g.parse(&p.tokens).unwrap();
        let r = lca_relation(&g, &tree, 2, 4).unwrap();
        assert_eq!(r.label, "A");
        assert_eq!(r.rhs_compact(), "bCDEf");
        assert_eq!((r.left_child, r.right_child), (2, 4));
        assert_eq!(r.to_string(), "(A, bCDEf, 2, 4)");
        // argument order does not matter
        assert_eq!(lca_relation(&g, &tree, 4, 2).unwrap(), r);
        assert_eq!(
            lca_relation(&g, &tree, 3, 3),
            Err(PatchError::NotDistinct { pos: 3 })
        );
        let top = lca_relation(&g, &tree, 0, 5).unwrap();
        assert_eq!(top.label, "S");
        assert_eq!((top.left_child, top.right_child), (1, 2));
    }

    const LIST_GRAMMAR: &str = "S -> L\nL -> L T | T\nT -> IDENT \";\"\n";

    #[test]
    fn list_fragment_drops_unrelated_statements() {
        let g = load_grammar(LIST_GRAMMAR).unwrap();
        let p = prog("s1 ; s2 ; s3 ; s4 ;");
        let f = Fragment::new(p, vec![0, 1, 4, 5]).unwrap();
        let r = lca_patch(&g, &f).unwrap();
        assert_eq!(lex(&r.patched), "s1 ; s3 ;");
        assert!(r.minimal);
        assert_eq!(r.origin, vec![Some(0), Some(1), Some(4), Some(5)]);
        assert!(r.added.is_empty());
        // six pairs logged for four picks
        assert_eq!(r.lca_log.len(), 6);
        let check = check_patch(&g, &f, &r.patched).unwrap();
        assert!(check.ok(), "{check:?}");
    }

    #[test]
    fn brute_force_modes_on_the_list() {
        let g = load_grammar(LIST_GRAMMAR).unwrap();
        let p = prog("s1 ; s2 ; s3 ; s4 ;");
        let f = Fragment::new(p, vec![0, 1, 4, 5]).unwrap();
        let token = brute_force_patch(&g, &f, BruteMode::Token, 16).unwrap();
        assert_eq!(lex(&token), "s1 ; s3 ;");
        let lca = brute_force_patch(&g, &f, BruteMode::Lca, 16).unwrap();
        assert_eq!(lex(&lca), "s1 ; s3 ;");
        // tree mode keeps every sibling whole
        let tree = brute_force_patch(&g, &f, BruteMode::Tree, 16).unwrap();
        assert_eq!(lex(&tree), "s1 ; s2 ; s3 ; s4 ;");
        assert!(token.len() <= lca.len() && lca.len() <= tree.len());
    }

    const C_GRAMMAR: &str = concat!(
        "Prog -> \"void\" IDENT \"(\" \")\" Block\n",
        "Block -> \"{\" Stmts \"}\"\n",
        "Stmts -> Stmts Stmt | Stmt\n",
        "Stmt -> \"if\" \"(\" IDENT \")\" Block",
        " | \"while\" \"(\" IDENT \")\" Block",
        " | IDENT \"(\" IDENT \")\" \";\"",
        " | IDENT \"=\" NUM \";\"\n",
    );

    #[test]
    fn token_patch_can_rebind_arguments_but_lca_does_not() {
        let g = load_grammar(C_GRAMMAR).unwrap();
        let p = prog("void bar ( ) { foo ( a ) ; x ( b ) ; }");
        // the warning mentions only the call to foo and the later use of b
        let f = Fragment::new(p, vec![5, 12]).unwrap();
        let token = brute_force_patch(&g, &f, BruteMode::Token, 16).unwrap();
        assert_eq!(lex(&token), "void bar ( ) { foo ( b ) ; }");
        let tree = g.parse(&token).unwrap();
        let embed = embed_positions(&f.tokens(), &token).unwrap();
        let got = lca_relation(&g, &tree, embed[0], embed[1]).unwrap();
        let p_tree = g.parse(&f.program.tokens).unwrap();
        let want = lca_relation(&g, &p_tree, 5, 12).unwrap();
        // token-level patching made b an argument of foo
        assert_ne!(got, want);
        assert_eq!(got.label, "Stmt");
        assert_eq!(want.label, "Stmts");

        let lca = lca_patch(&g, &f).unwrap();
        assert!(lca.minimal);
        assert_eq!(lex(&lca.patched), "void bar ( ) { foo ( a ) ; x ( b ) ; }");
        assert!(check_patch(&g, &f, &lca.patched).unwrap().ok());
        let oracle = brute_force_patch(&g, &f, BruteMode::Lca, 16).unwrap();
        assert_eq!(oracle.len(), lca.patched.len());
    }

    #[test]
    fn nested_block_patch_keeps_sibling_order() {
        let g = load_grammar(C_GRAMMAR).unwrap();
        let p = prog("void bar ( ) { while ( c ) { if ( P ) { a = 1 ; } foo ( b ) ; } }");
        // if-header plus the foo call
        let f = Fragment::new(p, vec![10, 11, 12, 13, 20, 21, 22, 23, 24]).unwrap();
        let r = lca_patch(&g, &f).unwrap();
        assert!(r.minimal);
        assert_eq!(lex(&r.patched), "void bar ( ) { if ( P ) { a = 1 ; } foo ( b ) ; }");
        assert!(check_patch(&g, &f, &r.patched).unwrap().ok());
        // a shorter token-level completion exists but it nests the call
        // inside the if, so its relation check fails
        let shorter = prog("void bar ( ) { if ( P ) { foo ( b ) ; } }").tokens;
        assert!(shorter.len() < r.patched.len());
        let check = check_patch(&g, &f, &shorter).unwrap();
        assert!(check.fragment_embeds && check.parses && check.embeds_in_program);
        assert!(!check.relations_preserved);
        let cand_tree = g.parse(&shorter).unwrap();
        let embed = embed_positions(&f.tokens(), &shorter).unwrap();
        let got = lca_relation(&g, &cand_tree, embed[0], embed[4]).unwrap();
        assert_eq!(got.label, "Stmt");
    }

    #[test]
    fn whole_program_fragment_is_identity() {
        let g = load_grammar(LIST_GRAMMAR).unwrap();
        let p = prog("s1 ;");
        let f = Fragment::new(p.clone(), vec![0, 1]).unwrap();
        let r = lca_patch(&g, &f).unwrap();
        assert_eq!(lex(&r.patched), "s1 ;");
        assert!(r.added.is_empty());
        assert!(r.minimal);
    }

    #[test]
    fn single_token_fragment() {
        let g = load_grammar(LIST_GRAMMAR).unwrap();
        let p = prog("s1 ; s2 ; s3 ;");
        let f = Fragment::new(p, vec![2]).unwrap();
        let r = lca_patch(&g, &f).unwrap();
        assert_eq!(lex(&r.patched), "s2 ;");
        assert_eq!(r.origin, vec![Some(2), Some(3)]);
        assert_eq!(r.added, vec![1]);
        assert!(r.lca_log.is_empty());
        assert!(check_patch(&g, &f, &r.patched).unwrap().ok());
    }

    #[test]
    fn unparseable_program_is_reported() {
        let g = load_grammar(LIST_GRAMMAR).unwrap();
        let p = prog("s1 s2");
        let f = Fragment::new(p, vec![0]).unwrap();
        assert!(matches!(lca_patch(&g, &f), Err(PatchError::Grammar(_))));
        assert!(matches!(
            brute_force_patch(&g, &f, BruteMode::Token, 8),
            Err(BruteError::Program(_))
        ));
    }

    #[test]
    fn brute_force_bound_is_honest() {
        let g = load_grammar(LIST_GRAMMAR).unwrap();
        let p = prog("s1 ; s2 ; s3 ;");
        let f = Fragment::new(p, vec![0]).unwrap();
        // one pick needs its semicolon; bound 1 cannot hold both
        assert_eq!(
            brute_force_patch(&g, &f, BruteMode::Token, 1),
            Err(BruteError::BoundExceeded { bound: 1 })
        );
        let ok = brute_force_patch(&g, &f, BruteMode::Token, 2).unwrap();
        assert_eq!(lex(&ok), "s1 ;");
    }

    #[test]
    fn combinations_cover_lexicographically() {
        let mut c = Combinations::new(4, 2);
        let mut all = Vec::new();
        while let Some(v) = c.next() {
            all.push(v);
        }
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut empty = Combinations::new(3, 0);
        assert_eq!(empty.next(), Some(vec![]));
        assert_eq!(empty.next(), None);
    }
}
