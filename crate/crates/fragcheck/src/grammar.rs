//! Context-free grammars, token sequences, and a chart parser.
//!
//! Grammars are written in a line-oriented BNF dialect:
//!
//! ```text
//! # comment
//! Stmt -> "while" "(" Expr ")" Block | Assign ";"
//! X    -> mY | uCDv
//! ```
//!
//! One rule per line, alternatives separated by `|`, symbols separated by
//! whitespace. A quoted unit is a literal terminal. An unquoted unit starting
//! with an uppercase letter is a nonterminal, except the reserved class names
//! `IDENT`, `NUM`, `FLOAT`, `CHAR` and `STRING`, which match whole lexeme
//! classes. An unquoted multi-character unit starting with anything else is
//! split into single-character symbols (uppercase characters become
//! nonterminals), so compact grammars like `X -> mY|uCDv` load as expected.
//! The first rule's left-hand side is the start symbol. An alternative
//! consisting of the single unit `%empty` declares an epsilon rule.
//!
//! Parsing uses an Earley chart, so left recursion and ambiguity are fine.
//! Tree extraction is deterministic: at each node the earliest-listed viable
//! production wins, and within a production the leftmost child takes the
//! shortest viable span. Nodes where another viable choice existed are
//! counted, so callers can tell when this rule actually resolved ambiguity.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

/// Where a token came from in the original source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceLoc {
    pub file: String,
    pub line: u32,
    pub col: u32,
}

impl SourceLoc {
    pub fn new(file: &str, line: u32, col: u32) -> Self {
        SourceLoc { file: file.to_string(), line, col }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

/// One lexeme with its index in the containing sequence and its provenance.
///
/// `pos` is the index in the sequence the token was produced for. Patched
/// sequences renumber `pos` but keep `loc` pointing at the original source,
/// which is what failure locations and trace coverage are matched against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub lexeme: String,
    pub pos: usize,
    pub loc: SourceLoc,
}

impl Token {
    pub fn new(lexeme: &str, pos: usize, loc: SourceLoc) -> Self {
        Token { lexeme: lexeme.to_string(), pos, loc }
    }
}

/// A token sequence from one source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub file: String,
    pub tokens: Vec<Token>,
}

impl Program {
    pub fn new(file: &str, tokens: Vec<Token>) -> Self {
        Program { file: file.to_string(), tokens }
    }

    /// Builds a program from bare lexemes; positions and columns are the index.
    pub fn from_lexemes<S: AsRef<str>>(file: &str, lexemes: &[S]) -> Self {
        let tokens = lexemes
            .iter()
            .enumerate()
            .map(|(i, l)| Token::new(l.as_ref(), i, SourceLoc::new(file, 1, i as u32 + 1)))
            .collect();
        Program { file: file.to_string(), tokens }
    }

    pub fn lexemes(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.lexeme.as_str()).collect()
    }
}

/// Index into a grammar's symbol table.
pub type Sym = u32;

/// Lexeme classes a terminal may match instead of one literal lexeme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LexClass {
    Ident,
    Num,
    Float,
    Char,
    Str,
}

impl LexClass {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "IDENT" => Some(LexClass::Ident),
            "NUM" => Some(LexClass::Num),
            "FLOAT" => Some(LexClass::Float),
            "CHAR" => Some(LexClass::Char),
            "STRING" => Some(LexClass::Str),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            LexClass::Ident => "IDENT",
            LexClass::Num => "NUM",
            LexClass::Float => "FLOAT",
            LexClass::Char => "CHAR",
            LexClass::Str => "STRING",
        }
    }
}

/// What a symbol table entry stands for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Nonterminal(String),
    Literal(String),
    Class(LexClass),
}

/// One production instance: `lhs -> rhs`, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: Sym,
    pub rhs: Vec<Sym>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("grammar syntax error on line {line}: {msg}")]
    SyntaxError { line: usize, msg: String },
    #[error("nonterminal {name} used on line {line} has no production")]
    UndefinedNonterminal { name: String, line: usize },
    #[error("grammar has no rules, so no start symbol")]
    NoStartSymbol,
    /// Expected outcome for token sequences outside the language, not a fault.
    #[error("token sequence not recognized{}", at.map(|i| format!(" (failed before token {i})")).unwrap_or_default())]
    NotRecognized { at: Option<usize> },
}

/// A context-free grammar with interned symbols.
#[derive(Debug, Clone)]
pub struct Grammar {
    symbols: Vec<SymbolKind>,
    by_name: HashMap<String, Sym>,
    pub productions: Vec<Production>,
    prods_of: HashMap<Sym, Vec<usize>>,
    pub start: Sym,
    literal_lexemes: HashSet<String>,
    /// Indices of explicitly declared epsilon productions.
    pub epsilon_productions: Vec<usize>,
}

impl Grammar {
    pub fn symbol(&self, s: Sym) -> &SymbolKind {
        &self.symbols[s as usize]
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    /// Display name of a symbol: nonterminal name, literal lexeme, or class name.
    pub fn sym_name(&self, s: Sym) -> &str {
        match &self.symbols[s as usize] {
            SymbolKind::Nonterminal(n) => n,
            SymbolKind::Literal(l) => l,
            SymbolKind::Class(c) => c.name(),
        }
    }

    pub fn is_nonterminal(&self, s: Sym) -> bool {
        matches!(self.symbols[s as usize], SymbolKind::Nonterminal(_))
    }

    /// Looks up a nonterminal by name.
    pub fn nonterminal(&self, name: &str) -> Option<Sym> {
        let s = *self.by_name.get(name)?;
        self.is_nonterminal(s).then_some(s)
    }

    pub fn productions_of(&self, nt: Sym) -> &[usize] {
        self.prods_of.get(&nt).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nonterminals(&self) -> Vec<Sym> {
        (0..self.symbols.len() as Sym).filter(|&s| self.is_nonterminal(s)).collect()
    }

    /// True when `lexeme` can be read as terminal symbol `s`.
    pub fn terminal_matches(&self, s: Sym, lexeme: &str) -> bool {
        match &self.symbols[s as usize] {
            SymbolKind::Nonterminal(_) => false,
            SymbolKind::Literal(l) => l == lexeme,
            SymbolKind::Class(c) => self.class_matches(*c, lexeme),
        }
    }

    fn class_matches(&self, class: LexClass, lexeme: &str) -> bool {
        match class {
            LexClass::Ident => {
                is_ident_shaped(lexeme) && !self.literal_lexemes.contains(lexeme)
            }
            LexClass::Num => !lexeme.is_empty() && lexeme.bytes().all(|b| b.is_ascii_digit()),
            LexClass::Float => {
                let mut it = lexeme.splitn(2, '.');
                match (it.next(), it.next()) {
                    (Some(a), Some(b)) => {
                        !a.is_empty()
                            && !b.is_empty()
                            && a.bytes().all(|c| c.is_ascii_digit())
                            && b.bytes().all(|c| c.is_ascii_digit())
                    }
                    _ => false,
                }
            }
            LexClass::Char => lexeme.starts_with('\''),
            LexClass::Str => lexeme.starts_with('"'),
        }
    }

    /// Renders one production as `Lhs -> a B c`.
    pub fn production_display(&self, idx: usize) -> String {
        let p = &self.productions[idx];
        let rhs: Vec<&str> = p.rhs.iter().map(|&s| self.sym_name(s)).collect();
        if rhs.is_empty() {
            format!("{} -> %empty", self.sym_name(p.lhs))
        } else {
            format!("{} -> {}", self.sym_name(p.lhs), rhs.join(" "))
        }
    }
}

fn is_ident_shaped(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Loads a grammar from the BNF dialect described in the module docs.
pub fn load_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut symbols: Vec<SymbolKind> = Vec::new();
    let mut by_name: HashMap<String, Sym> = HashMap::new();
    let mut intern = |kind: SymbolKind, symbols: &mut Vec<SymbolKind>| -> Sym {
        let key = match &kind {
            SymbolKind::Nonterminal(n) => format!("N:{n}"),
            SymbolKind::Literal(l) => format!("L:{l}"),
            SymbolKind::Class(c) => format!("C:{}", c.name()),
        };
        if let Some(&s) = by_name.get(&key) {
            return s;
        }
        let s = symbols.len() as Sym;
        symbols.push(kind);
        by_name.insert(key, s);
        s
    };

    let mut productions: Vec<Production> = Vec::new();
    let mut epsilon_productions = Vec::new();
    let mut start: Option<Sym> = None;
    // (sym, line) of every rhs nonterminal, checked for definitions at the end
    let mut used_nts: Vec<(Sym, usize)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_num = lineno + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (lhs_text, rhs_text) = line.split_once("->").ok_or_else(|| {
            GrammarError::SyntaxError { line: line_num, msg: "missing `->`".into() }
        })?;
        let lhs_units = split_units(lhs_text, line_num)?;
        if lhs_units.len() != 1 {
            return Err(GrammarError::SyntaxError {
                line: line_num,
                msg: "left-hand side must be a single nonterminal".into(),
            });
        }
        let lhs_syms = classify_unit(&lhs_units[0], line_num)?;
        let lhs_kind = match lhs_syms.as_slice() {
            [k @ SymbolKind::Nonterminal(_)] => k.clone(),
            _ => {
                return Err(GrammarError::SyntaxError {
                    line: line_num,
                    msg: format!("left-hand side `{}` is not a nonterminal", lhs_units[0].text),
                })
            }
        };
        let lhs = intern(lhs_kind, &mut symbols);
        if start.is_none() {
            start = Some(lhs);
        }

        for alt in split_alts(rhs_text) {
            let units = split_units(alt, line_num)?;
            if units.is_empty() {
                return Err(GrammarError::SyntaxError {
                    line: line_num,
                    msg: "empty alternative (use %empty for an epsilon rule)".into(),
                });
            }
            if units.len() == 1 && !units[0].quoted && units[0].text == "%empty" {
                epsilon_productions.push(productions.len());
                productions.push(Production { lhs, rhs: Vec::new() });
                continue;
            }
            let mut rhs = Vec::new();
            for unit in &units {
                for kind in classify_unit(unit, line_num)? {
                    let is_nt = matches!(kind, SymbolKind::Nonterminal(_));
                    let s = intern(kind, &mut symbols);
                    if is_nt {
                        used_nts.push((s, line_num));
                    }
                    rhs.push(s);
                }
            }
            productions.push(Production { lhs, rhs });
        }
    }

    let start = start.ok_or(GrammarError::NoStartSymbol)?;
    let mut prods_of: HashMap<Sym, Vec<usize>> = HashMap::new();
    for (i, p) in productions.iter().enumerate() {
        prods_of.entry(p.lhs).or_default().push(i);
    }
    for (s, line) in used_nts {
        if !prods_of.contains_key(&s) {
            let name = match &symbols[s as usize] {
                SymbolKind::Nonterminal(n) => n.clone(),
                _ => unreachable!(),
            };
            return Err(GrammarError::UndefinedNonterminal { name, line });
        }
    }
    let literal_lexemes = symbols
        .iter()
        .filter_map(|k| match k {
            SymbolKind::Literal(l) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let by_name = symbols
        .iter()
        .enumerate()
        .filter_map(|(i, k)| match k {
            SymbolKind::Nonterminal(n) => Some((n.clone(), i as Sym)),
            _ => None,
        })
        .collect();
    Ok(Grammar {
        symbols,
        by_name,
        productions,
        prods_of,
        start,
        literal_lexemes,
        epsilon_productions,
    })
}

// splits an rhs on the `|` separators that sit outside quoted terminals,
// so literals like "||" survive
fn split_alts(text: &str) -> Vec<&str> {
    let mut alts = Vec::new();
    let mut in_quote = false;
    let mut start = 0;
    for (i, b) in text.bytes().enumerate() {
        match b {
            b'"' => in_quote = !in_quote,
            b'|' if !in_quote => {
                alts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    alts.push(&text[start..]);
    alts
}

fn strip_comment(line: &str) -> &str {
    // `#` starts a comment unless it appears inside a quoted literal
    let mut in_quote = false;
    for (i, b) in line.bytes().enumerate() {
        match b {
            b'"' => in_quote = !in_quote,
            b'#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

struct Unit {
    text: String,
    quoted: bool,
}

fn split_units(text: &str, line: usize) -> Result<Vec<Unit>, GrammarError> {
    let mut units = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let mut lit = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => lit.push(ch),
                    None => {
                        return Err(GrammarError::SyntaxError {
                            line,
                            msg: "unterminated quoted terminal".into(),
                        })
                    }
                }
            }
            units.push(Unit { text: lit, quoted: true });
        } else {
            let mut word = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '"' {
                    break;
                }
                word.push(ch);
                chars.next();
            }
            units.push(Unit { text: word, quoted: false });
        }
    }
    Ok(units)
}

fn classify_unit(unit: &Unit, line: usize) -> Result<Vec<SymbolKind>, GrammarError> {
    if unit.quoted {
        if unit.text.is_empty() {
            return Err(GrammarError::SyntaxError { line, msg: "empty quoted terminal".into() });
        }
        return Ok(vec![SymbolKind::Literal(unit.text.clone())]);
    }
    let text = &unit.text;
    if let Some(class) = LexClass::from_name(text) {
        return Ok(vec![SymbolKind::Class(class)]);
    }
    let first_upper = text.chars().next().is_some_and(|c| c.is_ascii_uppercase());
    if first_upper {
        return Ok(vec![SymbolKind::Nonterminal(text.clone())]);
    }
    if text.chars().count() == 1 {
        return Ok(vec![SymbolKind::Literal(text.clone())]);
    }
    // compact run: each character is its own symbol
    Ok(text
        .chars()
        .map(|c| {
            if c.is_ascii_uppercase() {
                SymbolKind::Nonterminal(c.to_string())
            } else {
                SymbolKind::Literal(c.to_string())
            }
        })
        .collect())
}

/// Node handle inside a [`ParseTree`] arena.
pub type NodeId = usize;

/// One parse tree node. Leaves carry the matched token and terminal symbol.
#[derive(Debug, Clone)]
pub struct Node {
    pub sym: Sym,
    /// Production expanded at this node; `None` for leaves.
    pub prod: Option<usize>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub token: Option<Token>,
    /// Half-open token index range this node spans.
    pub span: (usize, usize),
    pub depth: u32,
}

/// Deterministic parse tree over a token slice.
#[derive(Debug, Clone)]
pub struct ParseTree {
    nodes: Vec<Node>,
    root: NodeId,
    /// How many nodes had another viable production or split (resolved ambiguity).
    pub ambiguous_nodes: usize,
}

impl ParseTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len()
    }

    /// Depth-first traversal of the leaf tokens: reproduces the parsed sequence.
    pub fn dft(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.collect_leaves(self.root, &mut out);
        out
    }

    fn collect_leaves(&self, id: NodeId, out: &mut Vec<Token>) {
        let n = &self.nodes[id];
        if let Some(tok) = &n.token {
            out.push(tok.clone());
            return;
        }
        for &c in &n.children {
            self.collect_leaves(c, out);
        }
    }

    /// Leaf node ids in token order.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.leaves_under(self.root, &mut out);
        out
    }

    fn leaves_under(&self, id: NodeId, out: &mut Vec<NodeId>) {
        let n = &self.nodes[id];
        if n.token.is_some() {
            out.push(id);
            return;
        }
        for &c in &n.children {
            self.leaves_under(c, out);
        }
    }

    /// Leaf covering token index `pos`, if any.
    pub fn leaf_at(&self, pos: usize) -> Option<NodeId> {
        let mut id = self.root;
        loop {
            let n = &self.nodes[id];
            if n.token.is_some() {
                return (n.span.0 == pos).then_some(id);
            }
            let next = n
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].span.0 <= pos && pos < self.nodes[c].span.1)?;
            id = next;
        }
    }

    /// True when `anc` is `id` or an ancestor of `id`.
    pub fn is_ancestor_or_self(&self, anc: NodeId, id: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            cur = self.nodes[c].parent;
        }
        false
    }

    /// Lowest common ancestor of two nodes.
    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let mut seen = HashSet::new();
        let mut cur = Some(a);
        while let Some(c) = cur {
            seen.insert(c);
            cur = self.nodes[c].parent;
        }
        let mut cur = Some(b);
        while let Some(c) = cur {
            if seen.contains(&c) {
                return c;
            }
            cur = self.nodes[c].parent;
        }
        self.root
    }

    /// S-expression rendering, useful in tests and debug output.
    pub fn sexpr(&self, g: &Grammar) -> String {
        let mut s = String::new();
        self.sexpr_node(g, self.root, &mut s);
        s
    }

    fn sexpr_node(&self, g: &Grammar, id: NodeId, out: &mut String) {
        let n = &self.nodes[id];
        if let Some(tok) = &n.token {
            out.push_str(&tok.lexeme);
            return;
        }
        out.push('(');
        out.push_str(g.sym_name(n.sym));
        for &c in &n.children {
            out.push(' ');
            self.sexpr_node(g, c, out);
        }
        out.push(')');
    }
}

// Earley item: production `prod` with `dot` symbols matched, started at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    prod: usize,
    dot: usize,
    origin: usize,
}

struct Chart {
    /// completed_ends[(nonterminal, start)] = all end positions it derives to
    ends: HashMap<(Sym, usize), BTreeSet<usize>>,
    /// every completed (production, start, end)
    done: HashSet<(usize, usize, usize)>,
    /// highest set index that received any item (diagnostic for NotRecognized)
    progress: usize,
}

impl Grammar {
    /// Parses a token slice. `NotRecognized` is the expected failure for
    /// sequences outside the language.
    pub fn parse(&self, tokens: &[Token]) -> Result<ParseTree, GrammarError> {
        let chart = self.recognize(tokens);
        let n = tokens.len();
        if !chart.done.iter().any(|&(p, i, j)| {
            i == 0 && j == n && self.productions[p].lhs == self.start
        }) {
            return Err(GrammarError::NotRecognized {
                at: (chart.progress < n).then_some(chart.progress),
            });
        }
        let mut builder = TreeBuilder {
            g: self,
            tokens,
            chart: &chart,
            nodes: Vec::new(),
            building: HashSet::new(),
            ambiguous: 0,
        };
        let root = builder
            .build(self.start, 0, n, None, 0)
            .expect("completed start item must be buildable");
        Ok(ParseTree { nodes: builder.nodes, root, ambiguous_nodes: builder.ambiguous })
    }

    fn recognize(&self, tokens: &[Token]) -> Chart {
        let n = tokens.len();
        let mut sets: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut in_set: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];
        let mut chart = Chart { ends: HashMap::new(), done: HashSet::new(), progress: 0 };

        let push = |item: Item, set: usize, sets: &mut Vec<Vec<Item>>, in_set: &mut Vec<HashSet<Item>>| {
            if in_set[set].insert(item) {
                sets[set].push(item);
            }
        };
        for &p in self.productions_of(self.start) {
            push(Item { prod: p, dot: 0, origin: 0 }, 0, &mut sets, &mut in_set);
        }

        for pos in 0..=n {
            let mut idx = 0;
            while idx < sets[pos].len() {
                let item = sets[pos][idx];
                idx += 1;
                let rhs = &self.productions[item.prod].rhs;
                if item.dot == rhs.len() {
                    // completion
                    let lhs = self.productions[item.prod].lhs;
                    chart.done.insert((item.prod, item.origin, pos));
                    chart.ends.entry((lhs, item.origin)).or_default().insert(pos);
                    let parents: Vec<Item> = sets[item.origin]
                        .iter()
                        .copied()
                        .filter(|it| {
                            let r = &self.productions[it.prod].rhs;
                            it.dot < r.len() && r[it.dot] == lhs
                        })
                        .collect();
                    for parent in parents {
                        push(
                            Item { prod: parent.prod, dot: parent.dot + 1, origin: parent.origin },
                            pos,
                            &mut sets,
                            &mut in_set,
                        );
                    }
                    continue;
                }
                let next = rhs[item.dot];
                if self.is_nonterminal(next) {
                    // prediction
                    for &p in self.productions_of(next) {
                        push(Item { prod: p, dot: 0, origin: pos }, pos, &mut sets, &mut in_set);
                    }
                    // nullable completion already recorded for this position
                    if chart.ends.get(&(next, pos)).is_some_and(|e| e.contains(&pos)) {
                        push(
                            Item { prod: item.prod, dot: item.dot + 1, origin: item.origin },
                            pos,
                            &mut sets,
                            &mut in_set,
                        );
                    }
                } else if pos < n && self.terminal_matches(next, &tokens[pos].lexeme) {
                    // scan
                    push(
                        Item { prod: item.prod, dot: item.dot + 1, origin: item.origin },
                        pos + 1,
                        &mut sets,
                        &mut in_set,
                    );
                }
            }
            if !sets[pos].is_empty() {
                chart.progress = pos;
            }
        }
        chart
    }
}

struct TreeBuilder<'a> {
    g: &'a Grammar,
    tokens: &'a [Token],
    chart: &'a Chart,
    nodes: Vec<Node>,
    /// guards against unit-cycle recursion on identical (sym, span)
    building: HashSet<(Sym, usize, usize)>,
    ambiguous: usize,
}

impl TreeBuilder<'_> {
    fn build(
        &mut self,
        sym: Sym,
        start: usize,
        end: usize,
        parent: Option<NodeId>,
        depth: u32,
    ) -> Option<NodeId> {
        if !self.building.insert((sym, start, end)) {
            return None;
        }
        let result = self.build_inner(sym, start, end, parent, depth);
        self.building.remove(&(sym, start, end));
        result
    }

    fn build_inner(
        &mut self,
        sym: Sym,
        start: usize,
        end: usize,
        parent: Option<NodeId>,
        depth: u32,
    ) -> Option<NodeId> {
        let mut chosen: Option<(usize, Vec<(Sym, usize, usize)>)> = None;
        let mut viable_count = 0;
        for &p in self.g.productions_of(sym) {
            if !self.chart.done.contains(&(p, start, end)) {
                continue;
            }
            let mut splits = self.splits(p, start, end, if chosen.is_none() { 1 } else { 2 });
            viable_count += splits.len().min(2);
            if chosen.is_none() && !splits.is_empty() {
                chosen = Some((p, splits.remove(0)));
            }
            if viable_count > 1 {
                break;
            }
        }
        let (prod, split) = chosen?;
        if viable_count > 1 {
            self.ambiguous += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            sym,
            prod: Some(prod),
            parent,
            children: Vec::new(),
            token: None,
            span: (start, end),
            depth,
        });
        let mut children = Vec::new();
        for (child_sym, s, e) in split {
            let child = if self.g.is_nonterminal(child_sym) {
                self.build(child_sym, s, e, Some(id), depth + 1)
                    .expect("viable split children must be buildable")
            } else {
                let leaf = self.nodes.len();
                self.nodes.push(Node {
                    sym: child_sym,
                    prod: None,
                    parent: Some(id),
                    children: Vec::new(),
                    token: Some(self.tokens[s].clone()),
                    span: (s, e),
                    depth: depth + 1,
                });
                leaf
            };
            children.push(child);
        }
        self.nodes[id].children = children;
        Some(id)
    }

    /// Up to `limit` viable child-span assignments for `prod` over [start, end),
    /// in deterministic order (leftmost child takes the shortest span first).
    fn splits(
        &mut self,
        prod: usize,
        start: usize,
        end: usize,
        limit: usize,
    ) -> Vec<Vec<(Sym, usize, usize)>> {
        let rhs = self.g.productions[prod].rhs.clone();
        let mut found = Vec::new();
        let mut acc: Vec<(Sym, usize, usize)> = Vec::new();
        self.split_search(&rhs, 0, start, end, &mut acc, &mut found, limit);
        found
    }

    #[allow(clippy::too_many_arguments)]
    fn split_search(
        &mut self,
        rhs: &[Sym],
        idx: usize,
        pos: usize,
        end: usize,
        acc: &mut Vec<(Sym, usize, usize)>,
        found: &mut Vec<Vec<(Sym, usize, usize)>>,
        limit: usize,
    ) {
        if found.len() >= limit {
            return;
        }
        if idx == rhs.len() {
            if pos == end {
                found.push(acc.clone());
            }
            return;
        }
        let sym = rhs[idx];
        if self.g.is_nonterminal(sym) {
            let ends: Vec<usize> = self
                .chart
                .ends
                .get(&(sym, pos))
                .map(|s| s.range(..=end).copied().collect())
                .unwrap_or_default();
            for e in ends {
                // a viable subtree must exist and not cycle on the same span
                if self.g.is_nonterminal(sym) && self.building.contains(&(sym, pos, e)) {
                    continue;
                }
                acc.push((sym, pos, e));
                self.split_search(rhs, idx + 1, e, end, acc, found, limit);
                acc.pop();
                if found.len() >= limit {
                    return;
                }
            }
        } else if pos < end && self.g.terminal_matches(sym, &self.tokens[pos].lexeme) {
            acc.push((sym, pos, pos + 1));
            self.split_search(rhs, idx + 1, pos + 1, end, acc, found, limit);
            acc.pop();
        }
    }
}
