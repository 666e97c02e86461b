//! Definition database and dependency resolution.
//!
//! A patched fragment rarely stands alone: it calls project functions, reads
//! globals, and names struct types defined elsewhere. Indexing is
//! pattern-based over raw tokens so files whose errors sit outside the
//! fragment still contribute definitions. Resolution pulls the transitive
//! closure of what the fragment needs, in original project order, and
//! def-use analysis decides which remaining free variables must be supplied
//! as test inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::grammar::{Program, SourceLoc, Token};
use crate::minic::{
    tokenize, unit_from_tokens, BinOp, Expr, ExprKind, Stmt, StmtKind, Ty, UnOp, Unit,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DefKind {
    Var,
    /// an ALL_CAPS global, treated as a constant and never as a test input
    Const,
    Func,
    Type,
}

// struct tags live apart from ordinary names, as in C
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Ns {
    Ordinary,
    Tag,
}

fn ns_of(kind: DefKind) -> Ns {
    match kind {
        DefKind::Type => Ns::Tag,
        _ => Ns::Ordinary,
    }
}

#[derive(Debug, Clone)]
pub struct DefEntry {
    pub name: String,
    pub kind: DefKind,
    pub tokens: Vec<Token>,
    pub file: String,
    /// global definition order across the project
    pub ordinal: usize,
    pub line: usize,
}

/// Every global definition in the project, indexed by name.
#[derive(Debug, Clone, Default)]
pub struct DefDb {
    entries: Vec<DefEntry>,
    by_name: HashMap<(String, Ns), usize>,
    pub warnings: Vec<String>,
}

impl DefDb {
    /// Ordinary-namespace lookup: variables, constants, and functions.
    pub fn value(&self, name: &str) -> Option<&DefEntry> {
        self.by_name.get(&(name.to_string(), Ns::Ordinary)).map(|&i| &self.entries[i])
    }

    /// Tag-namespace lookup: struct definitions.
    pub fn tag(&self, name: &str) -> Option<&DefEntry> {
        self.by_name.get(&(name.to_string(), Ns::Tag)).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    fn insert(&mut self, entry: DefEntry) {
        let key = (entry.name.clone(), ns_of(entry.kind));
        if let Some(&prev) = self.by_name.get(&key) {
            let old = &self.entries[prev];
            self.warnings.push(format!(
                "{} redefined (first {}:{}, now {}:{}); the later definition wins",
                entry.name, old.file, old.line, entry.file, entry.line
            ));
        }
        self.entries.push(entry);
        self.by_name.insert(key, self.entries.len() - 1);
    }
}

fn is_type_start(lex: &str) -> bool {
    matches!(lex, "int" | "float" | "char" | "void" | "struct")
}

fn is_ident(lex: &str) -> bool {
    let mut chars = lex.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !crate::minic::is_keyword(lex)
}

fn is_const_name(name: &str) -> bool {
    name.chars().any(|c| c.is_ascii_alphabetic())
        && !name.chars().any(|c| c.is_ascii_lowercase())
}

// index of the token after the bracket matching tokens[open]
fn after_match(tokens: &[Token], open: usize, close: &str) -> Option<usize> {
    let open_lex = tokens[open].lexeme.as_str();
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.lexeme == open_lex {
            depth += 1;
        } else if t.lexeme == close {
            depth -= 1;
            if depth == 0 {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Scans every file for global definitions. Extraction is pattern-based over
/// tokens, so a file that fails to parse elsewhere still yields the
/// definitions it contains. Files contribute in listing order.
pub fn index_definitions(project: &[Program]) -> DefDb {
    let mut db = DefDb::default();
    let mut ordinal = 0;
    for prog in project {
        let toks = &prog.tokens;
        let mut i = 0;
        while i < toks.len() {
            let lex = toks[i].lexeme.as_str();
            // struct definition: struct NAME { ... } ;
            if lex == "struct"
                && i + 2 < toks.len()
                && is_ident(&toks[i + 1].lexeme)
                && toks[i + 2].lexeme == "{"
            {
                let Some(end) = after_match(toks, i + 2, "}") else {
                    i += 1;
                    continue;
                };
                let end = if toks.get(end).is_some_and(|t| t.lexeme == ";") { end + 1 } else { end };
                db.insert(DefEntry {
                    name: toks[i + 1].lexeme.clone(),
                    kind: DefKind::Type,
                    tokens: toks[i..end].to_vec(),
                    file: prog.file.clone(),
                    ordinal,
                    line: toks[i].loc.line as usize,
                });
                ordinal += 1;
                i = end;
                continue;
            }
            if !is_type_start(lex) {
                i += 1;
                continue;
            }
            // declarator head: base type, stars, then the defined name
            let mut j = if lex == "struct" { i + 2 } else { i + 1 };
            while toks.get(j).is_some_and(|t| t.lexeme == "*") {
                j += 1;
            }
            let Some(name_tok) = toks.get(j).filter(|t| is_ident(&t.lexeme)) else {
                i += 1;
                continue;
            };
            let name = name_tok.lexeme.clone();
            let line = toks[i].loc.line as usize;
            match toks.get(j + 1).map(|t| t.lexeme.as_str()) {
                Some("(") => {
                    // function: signature, then a braced body
                    let Some(after_params) = after_match(toks, j + 1, ")") else {
                        i += 1;
                        continue;
                    };
                    let Some(end) = toks
                        .get(after_params)
                        .filter(|t| t.lexeme == "{")
                        .and_then(|_| after_match(toks, after_params, "}"))
                    else {
                        i += 1;
                        continue;
                    };
                    db.insert(DefEntry {
                        name,
                        kind: DefKind::Func,
                        tokens: toks[i..end].to_vec(),
                        file: prog.file.clone(),
                        ordinal,
                        line,
                    });
                    ordinal += 1;
                    i = end;
                }
                _ => {
                    // global variable: everything through the semicolon
                    let Some(semi) = (j + 1..toks.len()).find(|&k| toks[k].lexeme == ";") else {
                        i += 1;
                        continue;
                    };
                    let kind =
                        if is_const_name(&name) { DefKind::Const } else { DefKind::Var };
                    db.insert(DefEntry {
                        name,
                        kind,
                        tokens: toks[i..=semi].to_vec(),
                        file: prog.file.clone(),
                        ordinal,
                        line,
                    });
                    ordinal += 1;
                    i = semi + 1;
                }
            }
        }
    }
    db
}

/// A fragment closed over its dependencies, ready for harness generation.
#[derive(Debug, Clone)]
pub struct CompilableUnit {
    /// pulled definitions, in original project order
    pub preamble: Vec<DefEntry>,
    /// the patched fragment's tokens, unchanged
    pub body: Vec<Token>,
    /// free variables that must be supplied a value before the fragment runs
    pub input_vars: Vec<(String, Ty)>,
    /// free variables whose every use is preceded by an in-fragment
    /// assignment on all paths; they need a declaration but no value
    pub defined_vars: Vec<(String, Ty)>,
    /// set when some free symbol cannot be resolved or synthesized
    pub unbuildable: Option<String>,
    pub warnings: Vec<String>,
}

impl CompilableUnit {
    /// Preamble, synthesized declarations, and body as one token stream.
    /// Synthesized tokens carry line 0: they have no source ancestor.
    pub fn assembled_tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        for e in &self.preamble {
            out.extend(e.tokens.iter().cloned());
        }
        for (name, ty) in self.input_vars.iter().chain(&self.defined_vars) {
            let text = format!("{ty} {name} ;");
            if let Ok(toks) = tokenize("<synth>", &text) {
                out.extend(toks.into_iter().map(|mut t| {
                    t.loc = SourceLoc::new("<synth>", 0, 0);
                    t
                }));
            }
        }
        out.extend(self.body.iter().cloned());
        for (i, t) in out.iter_mut().enumerate() {
            t.pos = i;
        }
        out
    }
}

/// Closes a patched fragment over the project definitions it references and
/// decides which free variables become test inputs. Unresolvable symbols
/// mark the unit unbuildable rather than failing, mirroring a build error.
pub fn resolve_dependencies(fragment_unit: &Program, db: &DefDb) -> CompilableUnit {
    let mut unit = CompilableUnit {
        preamble: Vec::new(),
        body: fragment_unit.tokens.clone(),
        input_vars: Vec::new(),
        defined_vars: Vec::new(),
        unbuildable: None,
        warnings: Vec::new(),
    };
    let body_unit = match unit_from_tokens(&fragment_unit.file, &fragment_unit.tokens) {
        Ok(u) => u,
        Err(e) => {
            unit.unbuildable = Some(format!("fragment does not parse: {e}"));
            return unit;
        }
    };

    // transitive closure over the database, worklist of (name, namespace)
    let mut pulled: BTreeMap<(String, Ns), DefEntry> = BTreeMap::new();
    let mut missing: BTreeSet<String> = BTreeSet::new();
    let mut input_candidates: BTreeSet<String> = BTreeSet::new();
    let mut units: Vec<Unit> = vec![body_unit];
    let mut seen: HashSet<(String, Ns)> = HashSet::new();
    let mut cursor = 0;
    while cursor < units.len() {
        let free = free_symbols(&units[cursor]);
        cursor += 1;
        let mut want: Vec<(String, Ns)> = Vec::new();
        for name in free.funcs {
            want.push((name, Ns::Ordinary));
        }
        for name in free.tags {
            want.push((name, Ns::Tag));
        }
        for name in free.vars {
            want.push((name, Ns::Ordinary));
        }
        for (name, ns) in want {
            if !seen.insert((name.clone(), ns)) {
                continue;
            }
            let entry = match ns {
                Ns::Ordinary => db.value(&name),
                Ns::Tag => db.tag(&name),
            };
            match entry {
                Some(e) => {
                    // a pulled definition's own free symbols are pulled too
                    if let Ok(u) = unit_from_tokens(&e.file, &e.tokens) {
                        units.push(u);
                    } else {
                        unit.warnings.push(format!(
                            "definition of {} ({}:{}) does not parse on its own; \
                             pulled verbatim",
                            e.name, e.file, e.line
                        ));
                    }
                    pulled.insert((name, ns), e.clone());
                }
                None if ns == Ns::Tag => {
                    missing.insert(format!("struct {name}"));
                }
                None if free_is_callee(&units, &name) => {
                    missing.insert(format!("function {name}"));
                }
                None if is_const_name(&name) => {
                    // constants are never synthesized as test inputs
                    missing.insert(format!("constant {name}"));
                }
                None => {
                    input_candidates.insert(name);
                }
            }
        }
    }

    if !missing.is_empty() {
        let list: Vec<String> = missing.into_iter().collect();
        unit.unbuildable = Some(format!("unresolvable symbols: {}", list.join(", ")));
    }

    unit.preamble = pulled.into_values().collect();
    unit.preamble.sort_by_key(|e| e.ordinal);

    let env = TypeEnv::build(&units, &unit.preamble);
    let mut flow = FlowResult::default();
    for u in &units {
        flow.merge(analyze_unit(u, &input_candidates, &env));
    }
    let (inputs, defined, mut warns) = flow.finish(&env);
    unit.input_vars = inputs;
    unit.defined_vars = defined;
    unit.warnings.append(&mut warns);
    unit
}

// whether any gathered unit calls `name`; decides function versus variable
// for symbols the database lacks
fn free_is_callee(units: &[Unit], name: &str) -> bool {
    fn in_expr(e: &Expr, name: &str) -> bool {
        match &e.kind {
            ExprKind::Call(f, args) => f == name || args.iter().any(|a| in_expr(a, name)),
            ExprKind::Malloc(inner) | ExprKind::Unary(_, inner) => in_expr(inner, name),
            ExprKind::Binary(_, l, r) | ExprKind::Index(l, r) => {
                in_expr(l, name) || in_expr(r, name)
            }
            ExprKind::Field(base, _) | ExprKind::Arrow(base, _) => in_expr(base, name),
            _ => false,
        }
    }
    fn in_stmt(s: &Stmt, name: &str) -> bool {
        match &s.kind {
            StmtKind::Decl(d) => d.init.as_ref().is_some_and(|e| in_expr(e, name)),
            StmtKind::Assign { lhs, rhs } => in_expr(lhs, name) || in_expr(rhs, name),
            StmtKind::Call(e) | StmtKind::Assert(e) | StmtKind::Free(e) => in_expr(e, name),
            StmtKind::If { cond, then, els } => {
                in_expr(cond, name)
                    || then.iter().any(|s| in_stmt(s, name))
                    || els.iter().flatten().any(|s| in_stmt(s, name))
            }
            StmtKind::While { cond, body } => {
                in_expr(cond, name) || body.iter().any(|s| in_stmt(s, name))
            }
            StmtKind::For { init, cond, step, body } => {
                in_stmt(init, name)
                    || in_expr(cond, name)
                    || in_stmt(step, name)
                    || body.iter().any(|s| in_stmt(s, name))
            }
            StmtKind::Return(e) => e.as_ref().is_some_and(|e| in_expr(e, name)),
            StmtKind::Break | StmtKind::Continue => false,
        }
    }
    units.iter().any(|u| {
        u.funcs.iter().any(|f| f.body.iter().any(|s| in_stmt(s, name)))
            || u.globals.iter().any(|g| g.init.as_ref().is_some_and(|e| in_expr(e, name)))
    })
}

#[derive(Default)]
struct FreeSymbols {
    vars: Vec<String>,
    funcs: Vec<String>,
    tags: Vec<String>,
}

// scope-aware free names of a unit: variables read or written without a
// binding in scope, called functions not defined here, struct tags not
// defined here
fn free_symbols(u: &Unit) -> FreeSymbols {
    struct Scan<'a> {
        unit: &'a Unit,
        scopes: Vec<HashSet<String>>,
        out: FreeSymbols,
        seen_vars: HashSet<String>,
        seen_funcs: HashSet<String>,
        seen_tags: HashSet<String>,
    }
    impl Scan<'_> {
        fn bound(&self, name: &str) -> bool {
            self.scopes.iter().any(|s| s.contains(name))
                || self.unit.globals.iter().any(|g| g.name == name)
        }
        fn var(&mut self, name: &str) {
            if !self.bound(name) && self.seen_vars.insert(name.to_string()) {
                self.out.vars.push(name.to_string());
            }
        }
        fn func(&mut self, name: &str) {
            if !self.unit.funcs.iter().any(|f| f.name == name)
                && self.seen_funcs.insert(name.to_string())
            {
                self.out.funcs.push(name.to_string());
            }
        }
        fn tag(&mut self, ty: &Ty) {
            if let Some(tag) = &ty.tag {
                if !self.unit.structs.iter().any(|s| &s.name == tag)
                    && self.seen_tags.insert(tag.clone())
                {
                    self.out.tags.push(tag.clone());
                }
            }
        }
        fn expr(&mut self, e: &Expr) {
            match &e.kind {
                ExprKind::Ident(name) => self.var(name),
                ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Char(_) | ExprKind::Null => {}
                ExprKind::Malloc(inner) | ExprKind::Unary(_, inner) => self.expr(inner),
                ExprKind::Call(name, args) => {
                    self.func(name);
                    for a in args {
                        self.expr(a);
                    }
                }
                ExprKind::Binary(_, l, r) | ExprKind::Index(l, r) => {
                    self.expr(l);
                    self.expr(r);
                }
                ExprKind::Field(base, _) | ExprKind::Arrow(base, _) => self.expr(base),
            }
        }
        fn block(&mut self, stmts: &[Stmt]) {
            self.scopes.push(HashSet::new());
            for s in stmts {
                self.stmt(s);
            }
            self.scopes.pop();
        }
        fn stmt(&mut self, s: &Stmt) {
            match &s.kind {
                StmtKind::Decl(d) => {
                    self.tag(&d.ty);
                    if let Some(init) = &d.init {
                        self.expr(init);
                    }
                    self.scopes.last_mut().expect("scope pushed").insert(d.name.clone());
                }
                StmtKind::Assign { lhs, rhs } => {
                    self.expr(lhs);
                    self.expr(rhs);
                }
                StmtKind::Call(e) | StmtKind::Assert(e) | StmtKind::Free(e) => self.expr(e),
                StmtKind::If { cond, then, els } => {
                    self.expr(cond);
                    self.block(then);
                    if let Some(els) = els {
                        self.block(els);
                    }
                }
                StmtKind::While { cond, body } => {
                    self.expr(cond);
                    self.block(body);
                }
                StmtKind::For { init, cond, step, body } => {
                    self.stmt(init);
                    self.expr(cond);
                    self.stmt(step);
                    self.block(body);
                }
                StmtKind::Return(e) => {
                    if let Some(e) = e {
                        self.expr(e);
                    }
                }
                StmtKind::Break | StmtKind::Continue => {}
            }
        }
    }

    let mut scan = Scan {
        unit: u,
        scopes: Vec::new(),
        out: FreeSymbols::default(),
        seen_vars: HashSet::new(),
        seen_funcs: HashSet::new(),
        seen_tags: HashSet::new(),
    };
    for st in &u.structs {
        for f in &st.fields {
            scan.tag(&f.ty);
        }
    }
    for g in &u.globals {
        scan.tag(&g.ty);
        if let Some(init) = &g.init {
            scan.expr(init);
        }
    }
    for f in &u.funcs {
        if let Some(ret) = &f.ret {
            scan.tag(ret);
        }
        let mut params = HashSet::new();
        for (ty, name) in &f.params {
            scan.tag(ty);
            params.insert(name.clone());
        }
        scan.scopes.push(params);
        for s in &f.body {
            scan.stmt(s);
        }
        scan.scopes.pop();
    }
    scan.out
}

// declared types visible to inference: unit globals and locals are handled
// scoped during the walk, this carries the cross-unit facts
struct TypeEnv {
    globals: HashMap<String, Ty>,
    funcs: HashMap<String, (Vec<Ty>, Option<Ty>)>,
}

impl TypeEnv {
    fn build(units: &[Unit], preamble: &[DefEntry]) -> TypeEnv {
        let mut env = TypeEnv { globals: HashMap::new(), funcs: HashMap::new() };
        let mut absorb = |u: &Unit| {
            for g in &u.globals {
                env.globals.insert(g.name.clone(), decl_ty(g));
            }
            for f in &u.funcs {
                let params = f.params.iter().map(|(t, _)| t.clone()).collect();
                env.funcs.insert(f.name.clone(), (params, f.ret.clone()));
            }
        };
        for u in units {
            absorb(u);
        }
        for e in preamble {
            if let Ok(u) = unit_from_tokens(&e.file, &e.tokens) {
                absorb(&u);
            }
        }
        env
    }
}

// arrays decay: `int a[4]` reads as int* past the declaration itself
fn decl_ty(d: &crate::minic::VarDecl) -> Ty {
    if d.len.is_some() {
        d.ty.clone().ptr_to()
    } else {
        d.ty.clone()
    }
}

#[derive(Default)]
struct FlowResult {
    // name → needs an outside value (some use unreached by a definition)
    verdicts: BTreeMap<String, bool>,
    inferred: BTreeMap<String, Ty>,
}

impl FlowResult {
    fn merge(&mut self, other: FlowResult) {
        for (name, needs_input) in other.verdicts {
            *self.verdicts.entry(name).or_insert(false) |= needs_input;
        }
        for (name, ty) in other.inferred {
            self.inferred.entry(name).or_insert(ty);
        }
    }

    fn finish(self, _env: &TypeEnv) -> (Vec<(String, Ty)>, Vec<(String, Ty)>, Vec<String>) {
        let mut inputs = Vec::new();
        let mut defined = Vec::new();
        let mut warnings = Vec::new();
        for (name, needs_input) in self.verdicts {
            let ty = match self.inferred.get(&name) {
                Some(t) => t.clone(),
                None => {
                    warnings.push(format!("no type evidence for {name}; defaulting to int"));
                    Ty::int()
                }
            };
            if needs_input {
                inputs.push((name, ty));
            } else {
                defined.push((name, ty));
            }
        }
        (inputs, defined, warnings)
    }
}

/// Recomputes the input variables of a resolved unit from its body and
/// preamble: a variable is an input when some use of it is not preceded by a
/// definition on every path from the fragment's start.
pub fn find_input_vars(unit: &CompilableUnit) -> Vec<(String, Ty)> {
    let Ok(body_unit) = unit_from_tokens("<body>", &unit.body) else {
        return Vec::new();
    };
    let free = free_symbols(&body_unit);
    let preamble_names: HashSet<String> =
        unit.preamble.iter().filter(|e| ns_of(e.kind) == Ns::Ordinary).map(|e| e.name.clone()).collect();
    let candidates: BTreeSet<String> = free
        .vars
        .into_iter()
        .filter(|v| !preamble_names.contains(v) && !is_const_name(v))
        .collect();
    let env = TypeEnv::build(std::slice::from_ref(&body_unit), &unit.preamble);
    let flow = analyze_unit(&body_unit, &candidates, &env);
    let (inputs, _, _) = flow.finish(&env);
    inputs
}

// must-definedness walk per function plus usage-driven type inference for
// the candidate variables
fn analyze_unit(u: &Unit, candidates: &BTreeSet<String>, env: &TypeEnv) -> FlowResult {
    let mut result = FlowResult::default();
    for f in &u.funcs {
        let mut walk = Flow {
            env,
            candidates,
            unit: u,
            scopes: vec![f.params.iter().map(|(t, n)| (n.clone(), t.clone())).collect()],
            defined: Some(BTreeSet::new()),
            result: &mut result,
        };
        walk.block_in_place(&f.body);
    }
    result
}

struct Flow<'a> {
    env: &'a TypeEnv,
    candidates: &'a BTreeSet<String>,
    unit: &'a Unit,
    scopes: Vec<HashMap<String, Ty>>,
    // None once every path has exited; the set is "defined on all paths"
    defined: Option<BTreeSet<String>>,
    result: &'a mut FlowResult,
}

impl Flow<'_> {
    fn lookup(&self, name: &str) -> Option<Ty> {
        for scope in self.scopes.iter().rev() {
            if let Some(t) = scope.get(name) {
                return Some(t.clone());
            }
        }
        if let Some(g) = self.unit.globals.iter().find(|g| g.name == name) {
            return Some(decl_ty(g));
        }
        self.env.globals.get(name).cloned()
    }

    fn note_type(&mut self, name: &str, ty: Ty) {
        if self.candidates.contains(name) {
            self.result.inferred.entry(name.to_string()).or_insert(ty);
        }
    }

    // a read of `name` at the current point
    fn use_var(&mut self, name: &str) {
        if !self.candidates.contains(name) {
            return;
        }
        let dominated = self.defined.as_ref().is_none_or(|d| d.contains(name));
        let needs_input = !dominated;
        *self.result.verdicts.entry(name.to_string()).or_insert(false) |= needs_input;
    }

    fn def_var(&mut self, name: &str) {
        if self.candidates.contains(name) {
            self.result.verdicts.entry(name.to_string()).or_insert(false);
            if let Some(d) = &mut self.defined {
                d.insert(name.to_string());
            }
        }
    }

    // infer the expression's type, pushing an expected type down to free
    // identifiers; records uses of candidate variables as a side effect
    fn expr(&mut self, e: &Expr, expect: Option<&Ty>) -> Option<Ty> {
        match &e.kind {
            ExprKind::Ident(name) => {
                self.use_var(name);
                if let Some(t) = self.lookup(name) {
                    return Some(t);
                }
                if let Some(t) = self.result.inferred.get(name) {
                    return Some(t.clone());
                }
                if let Some(t) = expect {
                    self.note_type(name, t.clone());
                    return Some(t.clone());
                }
                None
            }
            ExprKind::Int(_) => Some(Ty::int()),
            ExprKind::Float(_) => Some(Ty::float()),
            ExprKind::Char(_) => Some(Ty::ch()),
            ExprKind::Null => expect.cloned(),
            ExprKind::Malloc(size) => {
                self.expr(size, Some(&Ty::int()));
                expect.cloned()
            }
            ExprKind::Call(name, args) => {
                let sig = self.env.funcs.get(name).cloned();
                for (i, a) in args.iter().enumerate() {
                    let want = sig.as_ref().and_then(|(params, _)| params.get(i));
                    self.expr(a, want);
                }
                sig.and_then(|(_, ret)| ret)
            }
            ExprKind::Unary(UnOp::Neg, inner) => {
                let t = self.expr(inner, expect.filter(|t| !t.is_ptr()));
                t.or_else(|| expect.cloned())
            }
            ExprKind::Unary(UnOp::Not, inner) => {
                self.expr(inner, Some(&Ty::int()));
                Some(Ty::int())
            }
            ExprKind::Unary(UnOp::Deref, inner) => {
                let want_inner = expect.map(|t| t.clone().ptr_to());
                let t = self.expr(inner, want_inner.as_ref());
                match t {
                    Some(t) => t.deref(),
                    None => {
                        // no evidence either way: assume pointer-to-int
                        if let ExprKind::Ident(n) = &inner.kind {
                            self.note_type(n, Ty::int().ptr_to());
                        }
                        Some(Ty::int())
                    }
                }
            }
            ExprKind::Unary(UnOp::Addr, inner) => {
                let want_inner = expect.and_then(|t| t.deref());
                let t = self.expr(inner, want_inner.as_ref());
                t.map(Ty::ptr_to)
            }
            ExprKind::Binary(op, l, r) => {
                use BinOp::*;
                match op {
                    Or | And => {
                        self.expr(l, Some(&Ty::int()));
                        self.expr(r, Some(&Ty::int()));
                        Some(Ty::int())
                    }
                    Eq | Ne | Lt | Gt | Le | Ge => {
                        let lt = self.expr(l, None);
                        let rt = self.expr(r, lt.as_ref());
                        if lt.is_none() {
                            self.expr(l, rt.as_ref());
                        }
                        Some(Ty::int())
                    }
                    Add | Sub | Mul | Div | Mod => {
                        let lt = self.expr(l, None);
                        let rt = self.expr(r, lt.as_ref().filter(|t| !t.is_ptr()));
                        if lt.is_none() {
                            self.expr(l, rt.as_ref().filter(|t| !t.is_ptr()));
                        }
                        match (&lt, &rt) {
                            (Some(t), _) if t.is_ptr() => lt,
                            (_, Some(t)) if t.is_ptr() => rt,
                            (Some(_), _) => lt,
                            _ => rt.or_else(|| expect.cloned()),
                        }
                    }
                }
            }
            ExprKind::Index(base, idx) => {
                self.expr(idx, Some(&Ty::int()));
                let elem = expect.cloned().unwrap_or_else(Ty::int);
                let bt = self.expr(base, Some(&elem.clone().ptr_to()));
                bt.and_then(|t| t.deref()).or(Some(elem))
            }
            ExprKind::Field(base, field) => {
                let bt = self.expr(base, None);
                self.field_ty(bt, field, 0)
            }
            ExprKind::Arrow(base, field) => {
                let bt = self.expr(base, None);
                self.field_ty(bt, field, 1)
            }
        }
    }

    fn field_ty(&self, base: Option<Ty>, field: &str, ptr: usize) -> Option<Ty> {
        let base = base?;
        if base.ptr != ptr {
            return None;
        }
        let tag = base.tag.as_deref()?;
        let def = self.unit.structs.iter().find(|s| s.name == tag)?;
        let f = def.fields.iter().find(|f| f.name == field)?;
        Some(if f.len.is_some() { f.ty.clone().ptr_to() } else { f.ty.clone() })
    }

    fn block(&mut self, stmts: &[Stmt]) -> Option<BTreeSet<String>> {
        self.scopes.push(HashMap::new());
        let saved = self.defined.clone();
        self.block_in_place(stmts);
        let out = self.defined.clone();
        self.defined = saved;
        self.scopes.pop();
        out
    }

    fn block_in_place(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => {
                if let Some(init) = &d.init {
                    self.expr(init, Some(&decl_ty(d)));
                }
                self.scopes.last_mut().expect("scope present").insert(d.name.clone(), decl_ty(d));
            }
            StmtKind::Assign { lhs, rhs } => match &lhs.kind {
                ExprKind::Ident(name) => {
                    let lt = self.lookup(name).or_else(|| self.result.inferred.get(name).cloned());
                    let rt = self.expr(rhs, lt.as_ref());
                    if lt.is_none() {
                        if let Some(rt) = rt {
                            self.note_type(name, rt);
                        }
                    }
                    self.def_var(name);
                }
                _ => {
                    let lt = self.expr(lhs, None);
                    self.expr(rhs, lt.as_ref());
                }
            },
            StmtKind::Call(e) => {
                self.expr(e, None);
            }
            StmtKind::Assert(e) => {
                self.expr(e, Some(&Ty::int()));
            }
            StmtKind::Free(e) => {
                self.expr(e, Some(&Ty::int().ptr_to()));
            }
            StmtKind::If { cond, then, els } => {
                self.expr(cond, Some(&Ty::int()));
                let d1 = self.block(then);
                let d2 = match els {
                    Some(els) => self.block(els),
                    None => self.defined.clone(),
                };
                self.defined = match (d1, d2) {
                    (Some(a), Some(b)) => Some(a.intersection(&b).cloned().collect()),
                    (a, None) => a,
                    (None, b) => b,
                };
            }
            StmtKind::While { cond, body } => {
                self.expr(cond, Some(&Ty::int()));
                // the body may run zero times: its definitions do not
                // survive the loop
                self.block(body);
            }
            StmtKind::For { init, cond, step, body } => {
                self.stmt(init);
                self.expr(cond, Some(&Ty::int()));
                self.scopes.push(HashMap::new());
                let saved = self.defined.clone();
                self.block_in_place(body);
                self.stmt(step);
                self.defined = saved;
                self.scopes.pop();
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e, None);
                }
                self.defined = None;
            }
            StmtKind::Break | StmtKind::Continue => {
                self.defined = None;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::check_unit;

    fn prog(file: &str, src: &str) -> Program {
        Program::new(file, tokenize(file, src).unwrap())
    }

    #[test]
    fn indexing_covers_vars_funcs_types() {
        let p = prog("a.mc", "int g;\nstruct node { int v; };\nint f(int a) { return a + g; }\n");
        let db = index_definitions(&[p]);
        assert_eq!(db.len(), 3);
        assert_eq!(db.value("g").unwrap().kind, DefKind::Var);
        assert_eq!(db.value("f").unwrap().kind, DefKind::Func);
        assert_eq!(db.tag("node").unwrap().kind, DefKind::Type);
        assert!(db.value("g").unwrap().ordinal < db.value("f").unwrap().ordinal);
    }

    #[test]
    fn ordinals_follow_file_listing_order() {
        let a = prog("a.mc", "int first;\n");
        let b = prog("b.mc", "int second;\n");
        let db = index_definitions(&[a, b]);
        assert!(db.value("first").unwrap().ordinal < db.value("second").unwrap().ordinal);
        assert_eq!(db.value("second").unwrap().file, "b.mc");
    }

    #[test]
    fn duplicate_definition_warns_and_later_wins() {
        let a = prog("a.mc", "int g = 1;\n");
        let b = prog("b.mc", "int g = 2;\n");
        let db = index_definitions(&[a, b]);
        assert_eq!(db.warnings.len(), 1);
        assert!(db.warnings[0].contains("g redefined"));
        assert_eq!(db.value("g").unwrap().file, "b.mc");
    }

    #[test]
    fn broken_code_elsewhere_does_not_block_indexing() {
        // the trailing garbage never parses, yet both definitions index
        let p = prog("a.mc", "int ok;\nint f(void) { return ok; }\n+ + } ) (\n");
        let db = index_definitions(&[p]);
        assert!(db.value("ok").is_some());
        assert!(db.value("f").is_some());
    }

    #[test]
    fn all_caps_names_index_as_constants() {
        let p = prog("a.mc", "int MAX_LEN = 64;\nint lower = 1;\n");
        let db = index_definitions(&[p]);
        assert_eq!(db.value("MAX_LEN").unwrap().kind, DefKind::Const);
        assert_eq!(db.value("lower").unwrap().kind, DefKind::Var);
    }

    #[test]
    fn resolution_pulls_globals_and_call_chains() {
        let project = prog(
            "p.mc",
            "int limit = 8;\nint g(int x) { return x + limit; }\nint f(int x) { return g(x); }\n",
        );
        let db = index_definitions(&[project]);
        let frag = prog("frag.mc", "void test(int v) { int r; r = f(v); assert(r > 0); }");
        let unit = resolve_dependencies(&frag, &db);
        assert!(unit.unbuildable.is_none());
        let names: Vec<&str> = unit.preamble.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["limit", "g", "f"]);
    }

    #[test]
    fn unresolved_function_marks_unbuildable() {
        let db = index_definitions(&[]);
        let frag = prog("frag.mc", "void test(void) { mystery(); }");
        let unit = resolve_dependencies(&frag, &db);
        let reason = unit.unbuildable.unwrap();
        assert!(reason.contains("function mystery"));
    }

    #[test]
    fn unresolved_constant_marks_unbuildable() {
        let db = index_definitions(&[]);
        let frag = prog("frag.mc", "void test(int x) { x = BUF_SIZE; }");
        let unit = resolve_dependencies(&frag, &db);
        let reason = unit.unbuildable.unwrap();
        assert!(reason.contains("constant BUF_SIZE"));
    }

    #[test]
    fn free_variables_become_typed_inputs() {
        let db = index_definitions(&[]);
        let frag = prog("frag.mc", "void test(void) { int x; x = n + 1; }");
        let unit = resolve_dependencies(&frag, &db);
        assert!(unit.unbuildable.is_none());
        assert_eq!(unit.input_vars, [("n".to_string(), Ty::int())]);
    }

    #[test]
    fn branch_example_inputs() {
        let db = index_definitions(&[]);
        let frag = prog("frag.mc", "void test(void) { if (c) { x = a[i]; } }");
        let unit = resolve_dependencies(&frag, &db);
        let inputs = find_input_vars(&unit);
        assert_eq!(
            inputs,
            [
                ("a".to_string(), Ty::int().ptr_to()),
                ("c".to_string(), Ty::int()),
                ("i".to_string(), Ty::int()),
            ]
        );
        // x is only ever assigned: declared, but no outside value
        assert_eq!(unit.defined_vars, [("x".to_string(), Ty::int())]);
    }

    #[test]
    fn defined_before_use_is_not_an_input() {
        let db = index_definitions(&[]);
        let frag = prog("frag.mc", "void test(void) { y = 0; x = y; }");
        let unit = resolve_dependencies(&frag, &db);
        assert!(unit.input_vars.is_empty());
        let defined: Vec<&str> = unit.defined_vars.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(defined, ["x", "y"]);
    }

    #[test]
    fn straight_line_inputs_match_text_order_oracle() {
        // on straight-line code the analysis must reduce to:
        // used variables minus variables defined earlier in text order
        let bodies = [
            "a = 1; b = a + c; d = b * e;",
            "x = y; y = x; z = z + 1;",
            "p = q; r = p; s = t + r; q = s;",
            "m = 0; m = m + n; o = m;",
        ];
        for body in bodies {
            let src = format!("void test(void) {{ {body} }}");
            let frag = prog("frag.mc", &src);

            // oracle: scan tokens left to right
            let mut defined: HashSet<String> = HashSet::new();
            let mut expect: BTreeSet<String> = BTreeSet::new();
            for stmt in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let (lhs, rhs) = stmt.split_once('=').unwrap();
                for w in rhs.split(|c: char| !c.is_ascii_alphanumeric()) {
                    if !w.is_empty() && w.chars().next().unwrap().is_ascii_alphabetic()
                        && !defined.contains(w)
                    {
                        expect.insert(w.to_string());
                    }
                }
                defined.insert(lhs.trim().to_string());
            }

            let unit = resolve_dependencies(&frag, &index_definitions(&[]));
            let got: BTreeSet<String> =
                unit.input_vars.iter().map(|(n, _)| n.clone()).collect();
            assert_eq!(got, expect, "body: {body}");
        }
    }

    #[test]
    fn loop_definitions_do_not_dominate() {
        let db = index_definitions(&[]);
        // the while body may run zero times, so the def of w inside it
        // does not cover the use after the loop
        let frag = prog("frag.mc", "void test(int c) { while (c) { w = 1; c = c - 1; } x = w; }");
        let unit = resolve_dependencies(&frag, &db);
        let inputs: Vec<&str> = unit.input_vars.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(inputs, ["w"]);
    }

    #[test]
    fn pulled_function_free_globals_are_pulled_too() {
        let project = prog("p.mc", "int depth = 3;\nvoid walk(void) { depth = depth - 1; }\n");
        let db = index_definitions(&[project]);
        let frag = prog("frag.mc", "void test(void) { walk(); }");
        let unit = resolve_dependencies(&frag, &db);
        assert!(unit.unbuildable.is_none());
        let names: Vec<&str> = unit.preamble.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["depth", "walk"]);
    }

    #[test]
    fn resolved_units_type_check() {
        let project = prog(
            "p.mc",
            "struct pair { int a; int b; };\nint scale = 2;\n\
             int weigh(struct pair* p) { return (p->a + p->b) * scale; }\n",
        );
        let db = index_definitions(&[project]);
        let frags = [
            "void test(struct pair* p) { int w; w = weigh(p); assert(w >= 0); }",
            "void test(void) { int x; x = n * scale; }",
            "void test(void) { if (c) { x = a[i]; } }",
        ];
        for f in frags {
            let unit = resolve_dependencies(&prog("frag.mc", f), &db);
            assert!(unit.unbuildable.is_none(), "{f}");
            let toks = unit.assembled_tokens();
            let parsed = unit_from_tokens("asm.mc", &toks).unwrap_or_else(|e| {
                panic!("assembled unit must parse for {f}: {e}");
            });
            check_unit(&parsed).unwrap_or_else(|e| {
                panic!("assembled unit must check for {f}: {e}");
            });
        }
    }

    #[test]
    fn preamble_respects_ordinal_order() {
        let project = prog(
            "p.mc",
            "int b_var = 1;\nint a_var = 2;\nint use_both(void) { return a_var + b_var; }\n",
        );
        let db = index_definitions(&[project]);
        let frag = prog("frag.mc", "void test(int r) { r = use_both(); }");
        let unit = resolve_dependencies(&frag, &db);
        let ords: Vec<usize> = unit.preamble.iter().map(|e| e.ordinal).collect();
        let mut sorted = ords.clone();
        sorted.sort_unstable();
        assert_eq!(ords, sorted);
    }
}
