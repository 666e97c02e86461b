//! A light MiniC type checker. Its job is to guarantee that a unit the
//! dependency resolver declares buildable actually holds together: every
//! name resolves, calls match their signatures, and operators get operands
//! they can work on. Scalars (int, char, float) convert freely; pointers
//! and structs are matched exactly.

use std::collections::{HashMap, HashSet};

use super::ast::{
    BaseTy, BinOp, Expr, ExprKind, Func, Stmt, StmtKind, StructDef, Ty, UnOp, Unit, VarDecl,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("line {line}: undefined variable {name}")]
    UndefinedVariable { name: String, line: usize },
    #[error("line {line}: undefined function {name}")]
    UndefinedFunction { name: String, line: usize },
    #[error("line {line}: undefined struct {name}")]
    UndefinedStruct { name: String, line: usize },
    #[error("line {line}: struct {strct} has no field {field}")]
    UnknownField { strct: String, field: String, line: usize },
    #[error("line {line}: {name} takes {want} arguments, got {got}")]
    ArityMismatch { name: String, want: usize, got: usize, line: usize },
    #[error("line {line}: duplicate {what} {name}")]
    Duplicate { what: &'static str, name: String, line: usize },
    #[error("line {line}: void value of {name} used")]
    VoidValue { name: String, line: usize },
    #[error("line {line}: {msg}")]
    Mismatch { msg: String, line: usize },
}

// a checked type: declared, or the wildcard pointer malloc/null produce
#[derive(Debug, Clone, PartialEq)]
enum CTy {
    Known(Ty),
    AnyPtr,
}

impl CTy {
    fn is_ptr(&self) -> bool {
        match self {
            CTy::AnyPtr => true,
            CTy::Known(t) => t.is_ptr(),
        }
    }

    fn is_scalar(&self) -> bool {
        matches!(self, CTy::Known(t) if t.ptr == 0 && t.base != BaseTy::Struct)
    }

    fn is_intish(&self) -> bool {
        matches!(self, CTy::Known(t) if t.ptr == 0 && matches!(t.base, BaseTy::Int | BaseTy::Char))
    }

    fn describe(&self) -> String {
        match self {
            CTy::AnyPtr => "pointer".to_string(),
            CTy::Known(t) => t.to_string(),
        }
    }
}

struct Scope {
    vars: HashMap<String, (Ty, bool)>, // type, declared-as-array
}

struct Checker<'u> {
    structs: HashMap<&'u str, &'u StructDef>,
    funcs: HashMap<&'u str, &'u Func>,
    globals: HashMap<&'u str, (Ty, bool)>,
    scopes: Vec<Scope>,
}

/// Checks a whole unit; the first problem found is the error.
pub fn check_unit(u: &Unit) -> Result<(), CheckError> {
    let mut structs: HashMap<&str, &StructDef> = HashMap::new();
    for sd in &u.structs {
        if structs.insert(&sd.name, sd).is_some() {
            return Err(CheckError::Duplicate {
                what: "struct",
                name: sd.name.clone(),
                line: sd.line,
            });
        }
    }
    // value fields may only use already-complete structs; pointer fields may
    // point anywhere, including the struct itself
    let mut complete: HashSet<&str> = HashSet::new();
    for sd in &u.structs {
        let mut names: HashSet<&str> = HashSet::new();
        for f in &sd.fields {
            if !names.insert(&f.name) {
                return Err(CheckError::Duplicate {
                    what: "field",
                    name: f.name.clone(),
                    line: f.line,
                });
            }
            if f.ty.base == BaseTy::Struct {
                let tag = f.ty.tag.as_deref().unwrap_or_default();
                let known =
                    if f.ty.ptr > 0 { structs.contains_key(tag) } else { complete.contains(tag) };
                if !known {
                    return Err(CheckError::UndefinedStruct { name: tag.to_string(), line: f.line });
                }
            }
        }
        complete.insert(&sd.name);
    }

    let mut funcs: HashMap<&str, &Func> = HashMap::new();
    for f in &u.funcs {
        if funcs.insert(&f.name, f).is_some() {
            return Err(CheckError::Duplicate {
                what: "function",
                name: f.name.clone(),
                line: f.line,
            });
        }
    }

    let mut ck = Checker { structs, funcs, globals: HashMap::new(), scopes: Vec::new() };

    for g in &u.globals {
        ck.known_type(&g.ty, g.line)?;
        if ck.globals.contains_key(g.name.as_str()) {
            return Err(CheckError::Duplicate {
                what: "global",
                name: g.name.clone(),
                line: g.line,
            });
        }
        if let Some(init) = &g.init {
            if !is_const_literal(init) {
                return Err(CheckError::Mismatch {
                    msg: format!("global {} needs a constant initializer", g.name),
                    line: g.line,
                });
            }
            let ity = ck.expr(init)?;
            ck.assignable(&CTy::Known(g.ty.clone()), &ity, g.line)?;
        }
        ck.globals.insert(&g.name, decl_ty(g));
    }

    for f in &u.funcs {
        if let Some(r) = &f.ret {
            ck.known_type(r, f.line)?;
        }
        ck.scopes.push(Scope { vars: HashMap::new() });
        for (ty, name) in &f.params {
            ck.known_type(ty, f.line)?;
            let dup = ck
                .scopes
                .last_mut()
                .unwrap()
                .vars
                .insert(name.clone(), (ty.clone(), false))
                .is_some();
            if dup {
                return Err(CheckError::Duplicate {
                    what: "parameter",
                    name: name.clone(),
                    line: f.line,
                });
            }
        }
        // the body's top level shares the parameter scope, as in C
        let mut result = Ok(());
        for s in &f.body {
            if let Err(e) = ck.stmt(s, f) {
                result = Err(e);
                break;
            }
        }
        ck.scopes.pop();
        result?;
    }
    Ok(())
}

// array declarations decay to a pointer of one more level for use sites
fn decl_ty(d: &VarDecl) -> (Ty, bool) {
    if d.len.is_some() {
        (d.ty.clone().ptr_to(), true)
    } else {
        (d.ty.clone(), false)
    }
}

fn is_const_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Char(_) | ExprKind::Null => true,
        ExprKind::Unary(UnOp::Neg, inner) => is_const_literal(inner),
        _ => false,
    }
}

impl<'u> Checker<'u> {
    fn known_type(&self, ty: &Ty, line: usize) -> Result<(), CheckError> {
        if ty.base == BaseTy::Struct {
            let tag = ty.tag.as_deref().unwrap_or_default();
            if !self.structs.contains_key(tag) {
                return Err(CheckError::UndefinedStruct { name: tag.to_string(), line });
            }
        }
        Ok(())
    }

    fn lookup(&self, name: &str, line: usize) -> Result<(Ty, bool), CheckError> {
        for s in self.scopes.iter().rev() {
            if let Some(v) = s.vars.get(name) {
                return Ok(v.clone());
            }
        }
        self.globals
            .get(name)
            .cloned()
            .ok_or_else(|| CheckError::UndefinedVariable { name: name.to_string(), line })
    }

    fn stmts(&mut self, body: &'u [Stmt], f: &'u Func) -> Result<(), CheckError> {
        self.scopes.push(Scope { vars: HashMap::new() });
        let result = (|| {
            for s in body {
                self.stmt(s, f)?;
            }
            Ok(())
        })();
        self.scopes.pop();
        result
    }

    fn stmt(&mut self, s: &'u Stmt, f: &'u Func) -> Result<(), CheckError> {
        match &s.kind {
            StmtKind::Decl(d) => {
                self.known_type(&d.ty, d.line)?;
                if let Some(init) = &d.init {
                    let ity = self.expr(init)?;
                    self.assignable(&CTy::Known(d.ty.clone()), &ity, d.line)?;
                }
                let scope = self.scopes.last_mut().unwrap();
                if scope.vars.insert(d.name.clone(), decl_ty(d)).is_some() {
                    return Err(CheckError::Duplicate {
                        what: "variable",
                        name: d.name.clone(),
                        line: d.line,
                    });
                }
            }
            StmtKind::Assign { lhs, rhs } => {
                if let ExprKind::Ident(name) = &lhs.kind {
                    let (_, is_array) = self.lookup(name, lhs.line)?;
                    if is_array {
                        return Err(CheckError::Mismatch {
                            msg: format!("cannot assign to array {name}"),
                            line: lhs.line,
                        });
                    }
                }
                let lty = self.expr(lhs)?;
                let rty = self.expr(rhs)?;
                self.assignable(&lty, &rty, s.line)?;
            }
            StmtKind::Call(call) => {
                let ExprKind::Call(name, args) = &call.kind else { unreachable!() };
                // statement calls may discard any result, void included
                self.call_sig(name, args, call.line)?;
            }
            StmtKind::If { cond, then, els } => {
                self.truthy(cond)?;
                self.stmts(then, f)?;
                if let Some(e) = els {
                    self.stmts(e, f)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.truthy(cond)?;
                self.stmts(body, f)?;
            }
            StmtKind::For { init, cond, step, body } => {
                self.stmt(init, f)?;
                self.truthy(cond)?;
                self.stmt(step, f)?;
                self.stmts(body, f)?;
            }
            StmtKind::Break | StmtKind::Continue => {}
            StmtKind::Return(value) => match (&f.ret, value) {
                (None, None) => {}
                (None, Some(_)) => {
                    return Err(CheckError::Mismatch {
                        msg: format!("{} returns no value", f.name),
                        line: s.line,
                    })
                }
                (Some(_), None) => {
                    return Err(CheckError::Mismatch {
                        msg: format!("{} must return a value", f.name),
                        line: s.line,
                    })
                }
                (Some(want), Some(e)) => {
                    let got = self.expr(e)?;
                    self.assignable(&CTy::Known(want.clone()), &got, s.line)?;
                }
            },
            StmtKind::Assert(cond) => self.truthy(cond)?,
            StmtKind::Free(arg) => {
                let t = self.expr(arg)?;
                if !t.is_ptr() {
                    return Err(CheckError::Mismatch {
                        msg: format!("free needs a pointer, got {}", t.describe()),
                        line: s.line,
                    });
                }
            }
        }
        Ok(())
    }

    fn truthy(&mut self, cond: &Expr) -> Result<(), CheckError> {
        let t = self.expr(cond)?;
        if t.is_scalar() || t.is_ptr() {
            Ok(())
        } else {
            Err(CheckError::Mismatch {
                msg: format!("condition has type {}", t.describe()),
                line: cond.line,
            })
        }
    }

    fn call_sig(&mut self, name: &str, args: &[Expr], line: usize) -> Result<Option<Ty>, CheckError> {
        let Some(f) = self.funcs.get(name).copied() else {
            return Err(CheckError::UndefinedFunction { name: name.to_string(), line });
        };
        if f.params.len() != args.len() {
            return Err(CheckError::ArityMismatch {
                name: name.to_string(),
                want: f.params.len(),
                got: args.len(),
                line,
            });
        }
        for ((pty, _), a) in f.params.iter().zip(args) {
            let aty = self.expr(a)?;
            self.assignable(&CTy::Known(pty.clone()), &aty, a.line)?;
        }
        Ok(f.ret.clone())
    }

    fn expr(&mut self, e: &Expr) -> Result<CTy, CheckError> {
        let line = e.line;
        match &e.kind {
            ExprKind::Ident(name) => Ok(CTy::Known(self.lookup(name, line)?.0)),
            ExprKind::Int(_) => Ok(CTy::Known(Ty::int())),
            ExprKind::Float(_) => Ok(CTy::Known(Ty::float())),
            ExprKind::Char(_) => Ok(CTy::Known(Ty::ch())),
            ExprKind::Null => Ok(CTy::AnyPtr),
            ExprKind::Malloc(size) => {
                let t = self.expr(size)?;
                if !t.is_intish() {
                    return Err(CheckError::Mismatch {
                        msg: format!("malloc count has type {}", t.describe()),
                        line,
                    });
                }
                Ok(CTy::AnyPtr)
            }
            ExprKind::Call(name, args) => match self.call_sig(name, args, line)? {
                Some(t) => Ok(CTy::Known(t)),
                None => Err(CheckError::VoidValue { name: name.clone(), line }),
            },
            ExprKind::Unary(op, inner) => {
                let t = self.expr(inner)?;
                match op {
                    UnOp::Neg => {
                        if t.is_scalar() {
                            Ok(t)
                        } else {
                            Err(self.bad_operand("-", &t, line))
                        }
                    }
                    UnOp::Not => {
                        if t.is_scalar() || t.is_ptr() {
                            Ok(CTy::Known(Ty::int()))
                        } else {
                            Err(self.bad_operand("!", &t, line))
                        }
                    }
                    UnOp::Deref => match t {
                        CTy::Known(ref k) if k.is_ptr() => {
                            Ok(CTy::Known(k.deref().expect("pointer")))
                        }
                        _ => Err(self.bad_operand("*", &t, line)),
                    },
                    UnOp::Addr => match t {
                        CTy::Known(k) => Ok(CTy::Known(k.ptr_to())),
                        CTy::AnyPtr => Err(self.bad_operand("&", &CTy::AnyPtr, line)),
                    },
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.expr(l)?;
                let rt = self.expr(r)?;
                self.binary(*op, &lt, &rt, line)
            }
            ExprKind::Index(base, idx) => {
                let bt = self.expr(base)?;
                let it = self.expr(idx)?;
                if !it.is_intish() {
                    return Err(CheckError::Mismatch {
                        msg: format!("index has type {}", it.describe()),
                        line,
                    });
                }
                match bt {
                    CTy::Known(ref k) if k.is_ptr() => Ok(CTy::Known(k.deref().expect("pointer"))),
                    _ => Err(self.bad_operand("[]", &bt, line)),
                }
            }
            ExprKind::Field(base, field) => {
                let bt = self.expr(base)?;
                self.field_of(&bt, field, 0, line)
            }
            ExprKind::Arrow(base, field) => {
                let bt = self.expr(base)?;
                self.field_of(&bt, field, 1, line)
            }
        }
    }

    fn field_of(
        &self,
        base: &CTy,
        field: &str,
        want_ptr: usize,
        line: usize,
    ) -> Result<CTy, CheckError> {
        let CTy::Known(t) = base else {
            return Err(self.bad_operand("field access", base, line));
        };
        if t.base != BaseTy::Struct || t.ptr != want_ptr {
            return Err(self.bad_operand("field access", base, line));
        }
        let tag = t.tag.as_deref().unwrap_or_default();
        let sd = self.structs.get(tag).expect("declared struct checked at decl");
        let Some(f) = sd.fields.iter().find(|f| f.name == field) else {
            return Err(CheckError::UnknownField {
                strct: tag.to_string(),
                field: field.to_string(),
                line,
            });
        };
        let ty = if f.len.is_some() { f.ty.clone().ptr_to() } else { f.ty.clone() };
        Ok(CTy::Known(ty))
    }

    fn binary(&self, op: BinOp, l: &CTy, r: &CTy, line: usize) -> Result<CTy, CheckError> {
        use BinOp::*;
        let name = match op {
            Or => "||",
            And => "&&",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Mod => "%",
        };
        let scalar_result = |l: &CTy, r: &CTy| -> CTy {
            let float = [l, r].iter().any(
                |t| matches!(t, CTy::Known(k) if k.base == BaseTy::Float && k.ptr == 0),
            );
            if float {
                CTy::Known(Ty::float())
            } else {
                CTy::Known(Ty::int())
            }
        };
        match op {
            Or | And => {
                if (l.is_scalar() || l.is_ptr()) && (r.is_scalar() || r.is_ptr()) {
                    Ok(CTy::Known(Ty::int()))
                } else {
                    Err(self.bad_pair(name, l, r, line))
                }
            }
            Eq | Ne | Lt | Gt | Le | Ge => {
                if (l.is_scalar() && r.is_scalar()) || (l.is_ptr() && r.is_ptr()) {
                    Ok(CTy::Known(Ty::int()))
                } else {
                    Err(self.bad_pair(name, l, r, line))
                }
            }
            Add | Sub => {
                if l.is_scalar() && r.is_scalar() {
                    Ok(scalar_result(l, r))
                } else if l.is_ptr() && r.is_intish() {
                    Ok(l.clone())
                } else if op == Add && l.is_intish() && r.is_ptr() {
                    Ok(r.clone())
                } else if op == Sub && l.is_ptr() && r.is_ptr() {
                    Ok(CTy::Known(Ty::int()))
                } else {
                    Err(self.bad_pair(name, l, r, line))
                }
            }
            Mul | Div => {
                if l.is_scalar() && r.is_scalar() {
                    Ok(scalar_result(l, r))
                } else {
                    Err(self.bad_pair(name, l, r, line))
                }
            }
            Mod => {
                if l.is_intish() && r.is_intish() {
                    Ok(CTy::Known(Ty::int()))
                } else {
                    Err(self.bad_pair(name, l, r, line))
                }
            }
        }
    }

    fn bad_operand(&self, op: &str, t: &CTy, line: usize) -> CheckError {
        CheckError::Mismatch { msg: format!("{op} cannot take {}", t.describe()), line }
    }

    fn bad_pair(&self, op: &str, l: &CTy, r: &CTy, line: usize) -> CheckError {
        CheckError::Mismatch {
            msg: format!("{op} cannot take {} and {}", l.describe(), r.describe()),
            line,
        }
    }

    fn assignable(&self, dst: &CTy, src: &CTy, line: usize) -> Result<(), CheckError> {
        let ok = match (dst, src) {
            (CTy::Known(d), CTy::Known(s)) => {
                d == s
                    || (dst.is_scalar() && src.is_scalar())
                    || (d.is_ptr() && s.is_ptr() && d == s)
            }
            (d, CTy::AnyPtr) => d.is_ptr(),
            (CTy::AnyPtr, _) => unreachable!("wildcard never a destination"),
        };
        if ok {
            Ok(())
        } else {
            Err(CheckError::Mismatch {
                msg: format!("cannot assign {} to {}", src.describe(), dst.describe()),
                line,
            })
        }
    }
}
