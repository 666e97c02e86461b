//! A checking interpreter for MiniC.
//!
//! Every array access is bounds-checked against its block, every dereference
//! null-checked, divisions checked, reads of never-written cells flagged, and
//! heap blocks tracked so an unfreed allocation surfaces as a leak when the
//! run ends normally. The first failure aborts the run with a kind and the
//! source location carried by token provenance, which is what oracle
//! matching compares against.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::minic::{BinOp, Expr, ExprKind, Func, Stmt, StmtKind, Ty, UnOp, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    OutOfBounds,
    NullDeref,
    DivByZero,
    AssertFail,
    Leak,
    UninitializedRead,
}

impl std::fmt::Display for FailureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FailureKind::OutOfBounds => "out-of-bounds",
            FailureKind::NullDeref => "null-deref",
            FailureKind::DivByZero => "div-by-zero",
            FailureKind::AssertFail => "assert-fail",
            FailureKind::Leak => "leak",
            FailureKind::UninitializedRead => "uninitialized-read",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub file: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Normal,
    Failure(Failure),
    Timeout,
}

/// One execution: how it ended and which source lines ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    #[serde(flatten)]
    pub outcome: Outcome,
    /// (file, line) of every executed statement with source provenance
    pub trace: BTreeSet<(String, usize)>,
    pub steps: u64,
}

/// The interpreter's own invariants broke (not a defect in the program).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("interpreter bug: {0}")]
pub struct InterpreterBug(pub String);

// how a run stops ahead of time
enum Signal {
    Fail(Failure),
    Timeout,
    Bug(String),
}

type Exec<T> = Result<T, Signal>;

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Uninit,
    Int(i64),
    Float(f64),
    Char(u8),
    Null,
    Ptr(Ptr),
    Struct(BTreeMap<String, Value>),
}

#[derive(Debug, Clone, PartialEq)]
struct Ptr {
    block: usize,
    /// may step outside the block between accesses; checked on access
    offset: i64,
    /// nested field path for pointers taken of struct members
    path: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Heap,
    Var,
    Input,
}

struct Block {
    cells: Vec<Value>,
    kind: BlockKind,
    freed: bool,
    alloc_file: String,
    alloc_line: usize,
}

struct Place {
    block: usize,
    offset: i64,
    path: Vec<String>,
}

struct VarRef {
    block: usize,
    is_array: bool,
}

struct Frame {
    scopes: Vec<HashMap<String, VarRef>>,
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

pub struct Interp<'a> {
    unit: &'a Unit,
    blocks: Vec<Block>,
    globals: HashMap<String, VarRef>,
    frames: Vec<Frame>,
    steps: u64,
    budget: u64,
    trace: BTreeSet<(String, usize)>,
    // location of the statement being executed, for failures inside
    // expressions whose own tokens are synthetic
    at: (String, usize),
}

/// Runs `entry` with `bindings` written into the named globals first.
/// Returns the interpreter's verdict on the program, or an internal bug.
pub fn run_unit(
    unit: &Unit,
    entry: &str,
    bindings: &[(String, InputValue)],
    budget: u64,
) -> Result<RunResult, InterpreterBug> {
    let mut interp = Interp {
        unit,
        blocks: Vec::new(),
        globals: HashMap::new(),
        frames: Vec::new(),
        steps: 0,
        budget,
        trace: BTreeSet::new(),
        at: (unit.file.clone(), 0),
    };
    let signal = interp.run(entry, bindings);
    let outcome = match signal {
        Ok(()) => Outcome::Normal,
        Err(Signal::Fail(f)) => Outcome::Failure(f),
        Err(Signal::Timeout) => Outcome::Timeout,
        Err(Signal::Bug(msg)) => return Err(InterpreterBug(msg)),
    };
    Ok(RunResult { outcome, trace: interp.trace, steps: interp.steps })
}

/// A generated test value, JSON-serializable for evidence and replay files.
/// Arrays become fresh allocations; null stands for an absent pointer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", content = "v", rename_all = "kebab-case")]
pub enum InputValue {
    Int(i64),
    Float(f64),
    Char(u8),
    Null,
    Array(Vec<InputValue>),
    Struct(Vec<(String, InputValue)>),
}

impl Interp<'_> {
    fn run(&mut self, entry: &str, bindings: &[(String, InputValue)]) -> Exec<()> {
        for g in &self.unit.globals {
            let cells = match g.len {
                Some(n) => vec![self.fresh_value(&g.ty); n],
                None => vec![self.fresh_value(&g.ty)],
            };
            let block = self.alloc(cells, BlockKind::Var, self.at.clone().0.as_str(), g.line);
            if let Some(init) = &g.init {
                let v = self.eval(init)?;
                self.blocks[block].cells[0] = v;
            }
            self.globals.insert(g.name.clone(), VarRef { block, is_array: g.len.is_some() });
        }
        for (name, value) in bindings {
            let v = self.input_value(value);
            let Some(var) = self.globals.get(name) else {
                return Err(Signal::Bug(format!("binding for unknown global {name}")));
            };
            let block = var.block;
            self.blocks[block].cells[0] = v;
        }
        let Some(f) = self.unit.funcs.iter().find(|f| f.name == entry) else {
            return Err(Signal::Bug(format!("no entry function {entry}")));
        };
        self.call(f, Vec::new())?;
        // normal exit: report the first allocation that never got freed
        if let Some(b) = self.blocks.iter().find(|b| b.kind == BlockKind::Heap && !b.freed) {
            return Err(Signal::Fail(Failure {
                kind: FailureKind::Leak,
                file: b.alloc_file.clone(),
                line: b.alloc_line,
            }));
        }
        Ok(())
    }

    // a declared variable's starting contents: struct fields materialized
    // from their definitions, everything else unwritten
    fn fresh_value(&self, ty: &Ty) -> Value {
        if ty.ptr > 0 {
            return Value::Uninit;
        }
        let Some(tag) = &ty.tag else {
            return Value::Uninit;
        };
        let Some(def) = self.unit.structs.iter().find(|s| &s.name == tag) else {
            return Value::Uninit;
        };
        let mut fields = BTreeMap::new();
        for f in &def.fields {
            // inline array fields get no storage until the declaring block
            // allocates them; see declare()
            fields.insert(f.name.clone(), self.fresh_value(&f.ty));
        }
        Value::Struct(fields)
    }

    fn input_value(&mut self, v: &InputValue) -> Value {
        match v {
            InputValue::Int(i) => Value::Int(*i),
            InputValue::Float(f) => Value::Float(*f),
            InputValue::Char(c) => Value::Char(*c),
            InputValue::Null => Value::Null,
            InputValue::Array(items) => {
                let cells: Vec<Value> = items.iter().map(|i| self.input_value(i)).collect();
                let block = self.alloc(cells, BlockKind::Input, "<input>", 0);
                Value::Ptr(Ptr { block, offset: 0, path: Vec::new() })
            }
            InputValue::Struct(fields) => {
                let map = fields
                    .iter()
                    .map(|(name, v)| (name.clone(), self.input_value(v)))
                    .collect();
                Value::Struct(map)
            }
        }
    }

    fn alloc(&mut self, cells: Vec<Value>, kind: BlockKind, file: &str, line: usize) -> usize {
        self.blocks.push(Block {
            cells,
            kind,
            freed: false,
            alloc_file: file.to_string(),
            alloc_line: line,
        });
        self.blocks.len() - 1
    }

    fn step(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Signal::Timeout);
        }
        Ok(())
    }

    fn fail(&self, kind: FailureKind) -> Signal {
        Signal::Fail(Failure { kind, file: self.at.0.clone(), line: self.at.1 })
    }

    fn call(&mut self, f: &Func, args: Vec<Value>) -> Exec<Value> {
        if self.frames.len() >= 128 {
            // runaway recursion; kept shallow because every level of the
            // interpreted program nests the host stack as well
            return Err(Signal::Timeout);
        }
        let mut scope = HashMap::new();
        let mut blocks = Vec::new();
        for ((ty, name), arg) in f.params.iter().zip(args) {
            let _ = ty;
            let block = self.alloc(vec![arg], BlockKind::Var, &self.at.0.clone(), f.line);
            blocks.push((name.clone(), block));
        }
        for (name, block) in blocks {
            scope.insert(name, VarRef { block, is_array: false });
        }
        self.frames.push(Frame { scopes: vec![scope] });
        let flow = self.block(&f.body);
        self.frames.pop();
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::Uninit),
            Flow::Break | Flow::Continue => Err(Signal::Bug("loop flow escaped a function".into())),
        }
    }

    fn stmt_loc(&self, s: &Stmt) -> (String, usize) {
        let file = self
            .unit
            .tokens
            .get(s.span.0)
            .map(|t| t.loc.file.clone())
            .unwrap_or_else(|| self.unit.file.clone());
        (file, s.line)
    }

    fn block(&mut self, stmts: &[Stmt]) -> Exec<Flow> {
        self.frames
            .last_mut()
            .ok_or_else(|| Signal::Bug("statement outside any frame".into()))?
            .scopes
            .push(HashMap::new());
        let mut flow = Flow::Normal;
        for s in stmts {
            flow = self.stmt(s)?;
            if !matches!(flow, Flow::Normal) {
                break;
            }
        }
        self.frames.last_mut().expect("frame present").scopes.pop();
        Ok(flow)
    }

    fn stmt(&mut self, s: &Stmt) -> Exec<Flow> {
        self.step()?;
        self.at = self.stmt_loc(s);
        if self.at.1 > 0 {
            self.trace.insert(self.at.clone());
        }
        match &s.kind {
            StmtKind::Decl(d) => {
                let cells = match d.len {
                    Some(n) => vec![self.fresh_value(&d.ty); n],
                    None => vec![self.fresh_value(&d.ty)],
                };
                let file = self.at.0.clone();
                let block = self.alloc(cells, BlockKind::Var, &file, d.line);
                if let Some(init) = &d.init {
                    let v = self.eval(init)?;
                    self.blocks[block].cells[0] = v;
                }
                self.frames
                    .last_mut()
                    .expect("frame present")
                    .scopes
                    .last_mut()
                    .expect("scope present")
                    .insert(d.name.clone(), VarRef { block, is_array: d.len.is_some() });
                Ok(Flow::Normal)
            }
            StmtKind::Assign { lhs, rhs } => {
                let v = self.eval(rhs)?;
                let place = self.lvalue(lhs)?;
                self.write(&place, v)?;
                Ok(Flow::Normal)
            }
            StmtKind::Call(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then, els } => {
                if self.truthy(cond)? {
                    self.block(then)
                } else if let Some(els) = els {
                    self.block(els)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                loop {
                    self.step()?;
                    self.at = self.stmt_loc(s);
                    if !self.truthy(cond)? {
                        break;
                    }
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::For { init, cond, step, body } => {
                self.stmt(init)?;
                loop {
                    self.step()?;
                    self.at = self.stmt_loc(s);
                    if !self.truthy(cond)? {
                        break;
                    }
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                    self.stmt(step)?;
                }
                Ok(Flow::Normal)
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e)?,
                    None => Value::Uninit,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Assert(e) => {
                if self.truthy(e)? {
                    Ok(Flow::Normal)
                } else {
                    Err(self.fail(FailureKind::AssertFail))
                }
            }
            StmtKind::Free(e) => {
                let v = self.eval(e)?;
                match v {
                    Value::Null => Ok(Flow::Normal),
                    Value::Ptr(p) => {
                        if p.offset != 0 || !p.path.is_empty() {
                            return Err(self.fail(FailureKind::NullDeref));
                        }
                        let b = &mut self.blocks[p.block];
                        if b.kind != BlockKind::Heap || b.freed {
                            return Err(self.fail(FailureKind::NullDeref));
                        }
                        b.freed = true;
                        Ok(Flow::Normal)
                    }
                    Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
                    _ => Err(Signal::Bug("free of a non-pointer value".into())),
                }
            }
        }
    }

    fn truthy(&mut self, e: &Expr) -> Exec<bool> {
        let v = self.eval(e)?;
        match v {
            Value::Int(i) => Ok(i != 0),
            Value::Float(f) => Ok(f != 0.0),
            Value::Char(c) => Ok(c != 0),
            Value::Null => Ok(false),
            Value::Ptr(_) => Ok(true),
            Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
            Value::Struct(_) => Err(Signal::Bug("struct value in a condition".into())),
        }
    }

    fn lvalue(&mut self, e: &Expr) -> Exec<Place> {
        match &e.kind {
            ExprKind::Ident(name) => {
                let var = self.var(name)?;
                if var.1 {
                    return Err(Signal::Bug(format!("assignment to array {name}")));
                }
                Ok(Place { block: var.0, offset: 0, path: Vec::new() })
            }
            ExprKind::Index(base, idx) => {
                let b = self.eval(base)?;
                let i = self.int_of(idx)?;
                match b {
                    Value::Ptr(p) if p.path.is_empty() => {
                        Ok(Place { block: p.block, offset: p.offset + i, path: Vec::new() })
                    }
                    Value::Ptr(_) => Err(Signal::Bug("index through a field pointer".into())),
                    Value::Null => Err(self.fail(FailureKind::NullDeref)),
                    Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
                    _ => Err(Signal::Bug("index into a non-pointer".into())),
                }
            }
            ExprKind::Unary(UnOp::Deref, inner) => {
                let v = self.eval(inner)?;
                match v {
                    Value::Ptr(p) => Ok(Place { block: p.block, offset: p.offset, path: p.path }),
                    Value::Null => Err(self.fail(FailureKind::NullDeref)),
                    Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
                    _ => Err(Signal::Bug("deref of a non-pointer".into())),
                }
            }
            ExprKind::Field(base, field) => {
                let mut place = self.lvalue(base)?;
                place.path.push(field.clone());
                Ok(place)
            }
            ExprKind::Arrow(base, field) => {
                let v = self.eval(base)?;
                match v {
                    Value::Ptr(p) => {
                        let mut path = p.path;
                        path.push(field.clone());
                        Ok(Place { block: p.block, offset: p.offset, path })
                    }
                    Value::Null => Err(self.fail(FailureKind::NullDeref)),
                    Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
                    _ => Err(Signal::Bug("arrow through a non-pointer".into())),
                }
            }
            _ => Err(Signal::Bug("assignment to a non-place expression".into())),
        }
    }

    // (block, is_array) for a name, innermost scope first
    fn var(&self, name: &str) -> Exec<(usize, bool)> {
        if let Some(frame) = self.frames.last() {
            for scope in frame.scopes.iter().rev() {
                if let Some(v) = scope.get(name) {
                    return Ok((v.block, v.is_array));
                }
            }
        }
        if let Some(v) = self.globals.get(name) {
            return Ok((v.block, v.is_array));
        }
        Err(Signal::Bug(format!("undefined variable {name} at runtime")))
    }

    fn cell_index(&self, place: &Place) -> Exec<usize> {
        let b = &self.blocks[place.block];
        if b.freed {
            // dangling access behaves like an invalid dereference
            return Err(self.fail(FailureKind::NullDeref));
        }
        if place.offset < 0 || place.offset as usize >= b.cells.len() {
            return Err(self.fail(FailureKind::OutOfBounds));
        }
        Ok(place.offset as usize)
    }

    fn read(&mut self, place: &Place) -> Exec<Value> {
        let idx = self.cell_index(place)?;
        let mut v = &self.blocks[place.block].cells[idx];
        for field in &place.path {
            match v {
                Value::Struct(map) => match map.get(field) {
                    Some(inner) => v = inner,
                    None => return Err(self.fail(FailureKind::UninitializedRead)),
                },
                Value::Uninit => return Err(self.fail(FailureKind::UninitializedRead)),
                _ => return Err(Signal::Bug("field access on a non-struct value".into())),
            }
        }
        match v {
            Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
            other => Ok(other.clone()),
        }
    }

    fn write(&mut self, place: &Place, value: Value) -> Exec<()> {
        let idx = self.cell_index(place)?;
        let mut v = &mut self.blocks[place.block].cells[idx];
        for field in &place.path {
            if matches!(v, Value::Uninit) {
                // first write through this struct pointer materializes it
                *v = Value::Struct(BTreeMap::new());
            }
            match v {
                Value::Struct(map) => {
                    v = map.entry(field.clone()).or_insert(Value::Uninit);
                }
                _ => return Err(Signal::Bug("field write on a non-struct value".into())),
            }
        }
        *v = value;
        Ok(())
    }

    fn int_of(&mut self, e: &Expr) -> Exec<i64> {
        let v = self.eval(e)?;
        match v {
            Value::Int(i) => Ok(i),
            Value::Char(c) => Ok(c as i64),
            Value::Float(f) => Ok(f as i64),
            Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
            _ => Err(Signal::Bug("expected an integer value".into())),
        }
    }

    fn eval(&mut self, e: &Expr) -> Exec<Value> {
        self.step()?;
        match &e.kind {
            ExprKind::Ident(name) => {
                let (block, is_array) = self.var(name)?;
                if is_array {
                    return Ok(Value::Ptr(Ptr { block, offset: 0, path: Vec::new() }));
                }
                self.read(&Place { block, offset: 0, path: Vec::new() })
            }
            ExprKind::Int(i) => Ok(Value::Int(*i)),
            ExprKind::Float(f) => Ok(Value::Float(*f)),
            ExprKind::Char(c) => Ok(Value::Char(*c as u8)),
            ExprKind::Null => Ok(Value::Null),
            ExprKind::Malloc(size) => {
                let n = self.int_of(size)?;
                if n < 0 {
                    return Err(self.fail(FailureKind::OutOfBounds));
                }
                let (file, line) = (self.at.0.clone(), e.line.max(self.at.1));
                let block =
                    self.alloc(vec![Value::Uninit; n as usize], BlockKind::Heap, &file, line);
                Ok(Value::Ptr(Ptr { block, offset: 0, path: Vec::new() }))
            }
            ExprKind::Call(name, args) => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.eval(a)?);
                }
                let Some(f) = self.unit.funcs.iter().find(|f| &f.name == name) else {
                    return Err(Signal::Bug(format!("call to undefined function {name}")));
                };
                if f.params.len() != vals.len() {
                    return Err(Signal::Bug(format!("arity mismatch calling {name}")));
                }
                let f = f.clone();
                let saved = self.at.clone();
                let v = self.call(&f, vals)?;
                self.at = saved;
                Ok(v)
            }
            ExprKind::Unary(op, inner) => match op {
                UnOp::Neg => match self.eval(inner)? {
                    Value::Int(i) => Ok(Value::Int(i.wrapping_neg())),
                    Value::Float(f) => Ok(Value::Float(-f)),
                    Value::Char(c) => Ok(Value::Int(-(c as i64))),
                    Value::Uninit => Err(self.fail(FailureKind::UninitializedRead)),
                    _ => Err(Signal::Bug("negation of a non-number".into())),
                },
                UnOp::Not => {
                    let t = self.truthy(inner)?;
                    Ok(Value::Int(if t { 0 } else { 1 }))
                }
                UnOp::Deref | UnOp::Addr => {
                    if matches!(op, UnOp::Addr) {
                        let place = self.lvalue(inner)?;
                        return Ok(Value::Ptr(Ptr {
                            block: place.block,
                            offset: place.offset,
                            path: place.path,
                        }));
                    }
                    let place = self.lvalue(e)?;
                    self.read(&place)
                }
            },
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r),
            ExprKind::Index(..) | ExprKind::Field(..) | ExprKind::Arrow(..) => {
                let place = self.lvalue(e)?;
                self.read(&place)
            }
        }
    }

    fn binary(&mut self, op: BinOp, l: &Expr, r: &Expr) -> Exec<Value> {
        use BinOp::*;
        // short-circuit forms first
        match op {
            Or => {
                if self.truthy(l)? {
                    return Ok(Value::Int(1));
                }
                return Ok(Value::Int(if self.truthy(r)? { 1 } else { 0 }));
            }
            And => {
                if !self.truthy(l)? {
                    return Ok(Value::Int(0));
                }
                return Ok(Value::Int(if self.truthy(r)? { 1 } else { 0 }));
            }
            _ => {}
        }
        let lv = self.eval(l)?;
        let rv = self.eval(r)?;
        if matches!(lv, Value::Uninit) || matches!(rv, Value::Uninit) {
            return Err(self.fail(FailureKind::UninitializedRead));
        }
        match op {
            Eq | Ne | Lt | Gt | Le | Ge => self.compare(op, lv, rv),
            Add | Sub => {
                // pointer arithmetic moves in whole cells
                if let Value::Ptr(p) = &lv {
                    let delta = match rv {
                        Value::Int(i) => i,
                        Value::Char(c) => c as i64,
                        Value::Ptr(q) if op == Sub => {
                            if p.block != q.block {
                                return Err(self.fail(FailureKind::OutOfBounds));
                            }
                            return Ok(Value::Int(p.offset - q.offset));
                        }
                        _ => return Err(Signal::Bug("bad pointer arithmetic operand".into())),
                    };
                    let mut p = p.clone();
                    p.offset += if op == Add { delta } else { -delta };
                    return Ok(Value::Ptr(p));
                }
                if let (Value::Ptr(p), Add) = (&rv, op) {
                    let delta = match lv {
                        Value::Int(i) => i,
                        Value::Char(c) => c as i64,
                        _ => return Err(Signal::Bug("bad pointer arithmetic operand".into())),
                    };
                    let mut p = p.clone();
                    p.offset += delta;
                    return Ok(Value::Ptr(p));
                }
                self.arith(op, lv, rv)
            }
            Mul | Div | Mod => self.arith(op, lv, rv),
            Or | And => unreachable!("handled above"),
        }
    }

    fn compare(&mut self, op: BinOp, lv: Value, rv: Value) -> Exec<Value> {
        use BinOp::*;
        let b = match (&lv, &rv) {
            (Value::Ptr(p), Value::Ptr(q)) => match op {
                Eq => p == q,
                Ne => p != q,
                // relational pointer comparison is only meaningful within
                // one block; elsewhere it answers false
                Lt => p.block == q.block && p.offset < q.offset,
                Gt => p.block == q.block && p.offset > q.offset,
                Le => p.block == q.block && p.offset <= q.offset,
                Ge => p.block == q.block && p.offset >= q.offset,
                _ => unreachable!(),
            },
            (Value::Null, Value::Null) => matches!(op, Eq | Le | Ge),
            (Value::Null, Value::Ptr(_)) | (Value::Ptr(_), Value::Null) => matches!(op, Ne),
            // a literal 0 against a pointer is the null test
            (Value::Null, Value::Int(0)) | (Value::Int(0), Value::Null) => matches!(op, Eq),
            (Value::Ptr(_), Value::Int(0)) | (Value::Int(0), Value::Ptr(_)) => matches!(op, Ne),
            _ => {
                let (lf, rf) = (self.to_f64(&lv)?, self.to_f64(&rv)?);
                match op {
                    Eq => lf == rf,
                    Ne => lf != rf,
                    Lt => lf < rf,
                    Gt => lf > rf,
                    Le => lf <= rf,
                    Ge => lf >= rf,
                    _ => unreachable!(),
                }
            }
        };
        Ok(Value::Int(if b { 1 } else { 0 }))
    }

    fn to_f64(&self, v: &Value) -> Exec<f64> {
        match v {
            Value::Int(i) => Ok(*i as f64),
            Value::Float(f) => Ok(*f),
            Value::Char(c) => Ok(*c as f64),
            _ => Err(Signal::Bug("numeric comparison of a non-number".into())),
        }
    }

    fn arith(&mut self, op: BinOp, lv: Value, rv: Value) -> Exec<Value> {
        use BinOp::*;
        let float = matches!(lv, Value::Float(_)) || matches!(rv, Value::Float(_));
        if float {
            let (a, b) = (self.to_f64(&lv)?, self.to_f64(&rv)?);
            if matches!(op, Div | Mod) && b == 0.0 {
                return Err(self.fail(FailureKind::DivByZero));
            }
            return Ok(Value::Float(match op {
                Add => a + b,
                Sub => a - b,
                Mul => a * b,
                Div => a / b,
                Mod => a % b,
                _ => unreachable!(),
            }));
        }
        let to_i = |v: &Value| -> Exec<i64> {
            match v {
                Value::Int(i) => Ok(*i),
                Value::Char(c) => Ok(*c as i64),
                _ => Err(Signal::Bug("integer arithmetic on a non-number".into())),
            }
        };
        let (a, b) = (to_i(&lv)?, to_i(&rv)?);
        if matches!(op, Div | Mod) && b == 0 {
            return Err(self.fail(FailureKind::DivByZero));
        }
        Ok(Value::Int(match op {
            Add => a.wrapping_add(b),
            Sub => a.wrapping_sub(b),
            Mul => a.wrapping_mul(b),
            Div => a.wrapping_div(b),
            Mod => a.wrapping_rem(b),
            _ => unreachable!(),
        }))
    }
}
