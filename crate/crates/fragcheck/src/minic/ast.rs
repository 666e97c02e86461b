//! MiniC abstract syntax and the lowering from parse trees.
//!
//! Lowering matches on each node's production shape (the rendered rhs), so
//! it stays in step with the grammar text next door. Every statement and
//! expression keeps the source line of its leftmost token; patched programs
//! carry original lines through token provenance, which is what failure
//! locations and order checks are matched on (synthesized filler is line 0).

use crate::grammar::{Grammar, NodeId, ParseTree, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseTy {
    Int,
    Float,
    Char,
    Struct,
}

/// A MiniC type: base type plus pointer depth. Struct types carry the tag
/// name alongside.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ty {
    pub base: BaseTy,
    /// struct tag when base is Struct
    pub tag: Option<String>,
    pub ptr: usize,
}

impl Ty {
    pub fn int() -> Ty {
        Ty { base: BaseTy::Int, tag: None, ptr: 0 }
    }

    pub fn float() -> Ty {
        Ty { base: BaseTy::Float, tag: None, ptr: 0 }
    }

    pub fn ch() -> Ty {
        Ty { base: BaseTy::Char, tag: None, ptr: 0 }
    }

    pub fn strct(tag: &str) -> Ty {
        Ty { base: BaseTy::Struct, tag: Some(tag.to_string()), ptr: 0 }
    }

    pub fn ptr_to(mut self) -> Ty {
        self.ptr += 1;
        self
    }

    pub fn is_ptr(&self) -> bool {
        self.ptr > 0
    }

    /// The pointee type, when this is a pointer.
    pub fn deref(&self) -> Option<Ty> {
        if self.ptr == 0 {
            return None;
        }
        let mut t = self.clone();
        t.ptr -= 1;
        Some(t)
    }
}

impl std::fmt::Display for Ty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.base {
            BaseTy::Int => write!(f, "int")?,
            BaseTy::Float => write!(f, "float")?,
            BaseTy::Char => write!(f, "char")?,
            BaseTy::Struct => write!(f, "struct {}", self.tag.as_deref().unwrap_or("?"))?,
        }
        for _ in 0..self.ptr {
            write!(f, "*")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
    Deref,
    Addr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Char(char),
    Null,
    Malloc(Box<Expr>),
    Call(String, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
    Arrow(Box<Expr>, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub ty: Ty,
    pub name: String,
    /// fixed element count for array declarations
    pub len: Option<usize>,
    pub init: Option<Expr>,
    pub line: usize,
    /// token range of the declaration in the unit's token sequence
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
    /// token range of the whole statement
    pub span: (usize, usize),
    /// token range of the loop or branch condition, when there is one
    pub cond_span: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(VarDecl),
    Assign { lhs: Expr, rhs: Expr },
    Call(Expr),
    If { cond: Expr, then: Vec<Stmt>, els: Option<Vec<Stmt>> },
    While { cond: Expr, body: Vec<Stmt> },
    For { init: Box<Stmt>, cond: Expr, step: Box<Stmt>, body: Vec<Stmt> },
    Break,
    Continue,
    Return(Option<Expr>),
    Assert(Expr),
    Free(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub ty: Ty,
    pub name: String,
    pub len: Option<usize>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
    pub line: usize,
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Func {
    /// None for void functions
    pub ret: Option<Ty>,
    pub name: String,
    pub params: Vec<(Ty, String)>,
    pub body: Vec<Stmt>,
    pub line: usize,
    pub span: (usize, usize),
}

/// One parsed MiniC translation unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub file: String,
    pub structs: Vec<StructDef>,
    pub globals: Vec<VarDecl>,
    pub funcs: Vec<Func>,
    /// the token sequence the unit was lowered from
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("line {line}: integer literal {lit} out of range")]
    BadInt { lit: String, line: usize },
    #[error("line {line}: malformed character literal {lit}")]
    BadChar { lit: String, line: usize },
    #[error("line {line}: array length {lit} out of range")]
    BadLen { lit: String, line: usize },
}

/// Lowers a parse tree over the MiniC grammar into a [`Unit`].
pub fn lower_unit(
    g: &Grammar,
    tree: &ParseTree,
    tokens: &[Token],
    file: &str,
) -> Result<Unit, LowerError> {
    let lw = Lower { g, tree, toks: tokens };
    let mut unit = Unit {
        file: file.to_string(),
        structs: Vec::new(),
        globals: Vec::new(),
        funcs: Vec::new(),
        tokens: tokens.to_vec(),
    };
    // Unit -> Defs
    let defs = lw.flatten(lw.child(tree.root(), 0), "Defs");
    for d in defs {
        let inner = lw.child(d, 0);
        match lw.name(inner) {
            "StructDef" => unit.structs.push(lw.struct_def(inner)?),
            "GlobalDecl" => unit.globals.push(lw.var_decl(lw.child(inner, 0))?),
            "Func" => unit.funcs.push(lw.func(inner)?),
            other => unreachable!("unexpected Def child {other}"),
        }
    }
    Ok(unit)
}

struct Lower<'a> {
    g: &'a Grammar,
    tree: &'a ParseTree,
    toks: &'a [Token],
}

impl Lower<'_> {
    fn name(&self, n: NodeId) -> &str {
        self.g.sym_name(self.tree.node(n).sym)
    }

    // rendered rhs of the node's production, e.g. "if ( Expr ) Block"
    fn sig(&self, n: NodeId) -> String {
        let prod = self.tree.node(n).prod.expect("interior node");
        let names: Vec<&str> =
            self.g.productions[prod].rhs.iter().map(|&s| self.g.sym_name(s)).collect();
        names.join(" ")
    }

    fn child(&self, n: NodeId, i: usize) -> NodeId {
        self.tree.node(n).children[i]
    }

    fn lexeme(&self, n: NodeId) -> &str {
        let t = self.tree.node(n).token.as_ref().expect("leaf node");
        &t.lexeme
    }

    fn line(&self, n: NodeId) -> usize {
        let span = self.tree.node(n).span;
        self.toks.get(span.0).map_or(0, |t| t.loc.line as usize)
    }

    fn span(&self, n: NodeId) -> (usize, usize) {
        self.tree.node(n).span
    }

    // unrolls a left-recursive list nonterminal into its item nodes
    fn flatten(&self, mut n: NodeId, list_name: &str) -> Vec<NodeId> {
        let mut items = Vec::new();
        loop {
            let kids = &self.tree.node(n).children;
            if kids.len() == 2 && self.name(kids[0]) == list_name {
                items.push(kids[1]);
                n = kids[0];
            } else {
                assert_eq!(kids.len(), 1, "list tail has one item");
                items.push(kids[0]);
                break;
            }
        }
        items.reverse();
        items
    }

    fn struct_def(&self, n: NodeId) -> Result<StructDef, LowerError> {
        // struct IDENT { Fields } ;
        let name = self.lexeme(self.child(n, 1)).to_string();
        let mut fields = Vec::new();
        for f in self.flatten(self.child(n, 3), "Fields") {
            fields.push(self.field(f)?);
        }
        Ok(StructDef { name, fields, line: self.line(n), span: self.span(n) })
    }

    fn field(&self, n: NodeId) -> Result<FieldDef, LowerError> {
        let ty = self.ty(self.child(n, 0));
        let name = self.lexeme(self.child(n, 1)).to_string();
        let len = match self.sig(n).as_str() {
            "Type IDENT ;" => None,
            "Type IDENT [ NUM ] ;" => Some(self.arr_len(self.child(n, 3))?),
            s => unreachable!("field shape {s}"),
        };
        Ok(FieldDef { ty, name, len, line: self.line(n) })
    }

    fn var_decl(&self, n: NodeId) -> Result<VarDecl, LowerError> {
        let ty = self.ty(self.child(n, 0));
        let name = self.lexeme(self.child(n, 1)).to_string();
        let (len, init) = match self.sig(n).as_str() {
            "Type IDENT ;" => (None, None),
            "Type IDENT = Expr ;" => (None, Some(self.expr(self.child(n, 3))?)),
            "Type IDENT [ NUM ] ;" => (Some(self.arr_len(self.child(n, 3))?), None),
            s => unreachable!("decl shape {s}"),
        };
        Ok(VarDecl { ty, name, len, init, line: self.line(n), span: self.span(n) })
    }

    fn arr_len(&self, n: NodeId) -> Result<usize, LowerError> {
        let lit = self.lexeme(n);
        lit.parse().map_err(|_| LowerError::BadLen { lit: lit.to_string(), line: self.line(n) })
    }

    fn ty(&self, n: NodeId) -> Ty {
        match self.sig(n).as_str() {
            "int" => Ty::int(),
            "float" => Ty::float(),
            "char" => Ty::ch(),
            "struct IDENT" => Ty::strct(self.lexeme(self.child(n, 1))),
            "Type *" => self.ty(self.child(n, 0)).ptr_to(),
            s => unreachable!("type shape {s}"),
        }
    }

    fn func(&self, n: NodeId) -> Result<Func, LowerError> {
        // RetTy IDENT ( Params ) Block
        let retty = self.child(n, 0);
        let ret = match self.sig(retty).as_str() {
            "void" => None,
            "Type" => Some(self.ty(self.child(retty, 0))),
            s => unreachable!("return type shape {s}"),
        };
        let name = self.lexeme(self.child(n, 1)).to_string();
        let params_node = self.child(n, 3);
        let params = match self.sig(params_node).as_str() {
            "void" => Vec::new(),
            "ParamList" => self
                .flatten_sep(self.child(params_node, 0), "ParamList")
                .into_iter()
                .map(|p| (self.ty(self.child(p, 0)), self.lexeme(self.child(p, 1)).to_string()))
                .collect(),
            s => unreachable!("params shape {s}"),
        };
        let body = self.block(self.child(n, 5))?;
        Ok(Func { ret, name, params, body, line: self.line(n), span: self.span(n) })
    }

    // unrolls "L -> L , X | X" comma lists
    fn flatten_sep(&self, mut n: NodeId, list_name: &str) -> Vec<NodeId> {
        let mut items = Vec::new();
        loop {
            let kids = &self.tree.node(n).children;
            if kids.len() == 3 && self.name(kids[0]) == list_name {
                items.push(kids[2]);
                n = kids[0];
            } else {
                assert_eq!(kids.len(), 1, "list tail has one item");
                items.push(kids[0]);
                break;
            }
        }
        items.reverse();
        items
    }

    // Block and LBlock have the same brace-list shape
    fn block(&self, n: NodeId) -> Result<Vec<Stmt>, LowerError> {
        let list = self.child(n, 1);
        let list_name = self.name(list);
        let mut out = Vec::new();
        for s in self.flatten(list, list_name) {
            out.push(self.stmt(s)?);
        }
        Ok(out)
    }

    fn stmt(&self, n: NodeId) -> Result<Stmt, LowerError> {
        let line = self.line(n);
        let kids = &self.tree.node(n).children;
        let mut cond_span = None;
        let kind = match self.name(kids[0]) {
            "Decl" => StmtKind::Decl(self.var_decl(kids[0])?),
            "Assign" => {
                let a = kids[0];
                StmtKind::Assign {
                    lhs: self.lvalue(self.child(a, 0))?,
                    rhs: self.expr(self.child(a, 2))?,
                }
            }
            "Call" => StmtKind::Call(self.call(kids[0])?),
            "If" | "LIf" => {
                let i = kids[0];
                cond_span = Some(self.span(self.child(i, 2)));
                let cond = self.expr(self.child(i, 2))?;
                let then = self.block(self.child(i, 4))?;
                let els = if self.tree.node(i).children.len() == 7 {
                    Some(self.block(self.child(i, 6))?)
                } else {
                    None
                };
                StmtKind::If { cond, then, els }
            }
            "While" => {
                let w = kids[0];
                cond_span = Some(self.span(self.child(w, 2)));
                StmtKind::While {
                    cond: self.expr(self.child(w, 2))?,
                    body: self.block(self.child(w, 4))?,
                }
            }
            "For" => {
                // for ( Assign ; Expr ; Assign ) LBlock
                let f = kids[0];
                cond_span = Some(self.span(self.child(f, 4)));
                let init = self.assign_stmt(self.child(f, 2))?;
                let cond = self.expr(self.child(f, 4))?;
                let step = self.assign_stmt(self.child(f, 6))?;
                let body = self.block(self.child(f, 8))?;
                StmtKind::For { init: Box::new(init), cond, step: Box::new(step), body }
            }
            "Return" => {
                let r = kids[0];
                if self.tree.node(r).children.len() == 3 {
                    StmtKind::Return(Some(self.expr(self.child(r, 1))?))
                } else {
                    StmtKind::Return(None)
                }
            }
            "Assert" => StmtKind::Assert(self.expr(self.child(kids[0], 2))?),
            "FreeStmt" => StmtKind::Free(self.expr(self.child(kids[0], 2))?),
            "Break" => StmtKind::Break,
            "Continue" => StmtKind::Continue,
            other => unreachable!("statement child {other}"),
        };
        Ok(Stmt { kind, line, span: self.span(n), cond_span })
    }

    fn assign_stmt(&self, n: NodeId) -> Result<Stmt, LowerError> {
        Ok(Stmt {
            kind: StmtKind::Assign {
                lhs: self.lvalue(self.child(n, 0))?,
                rhs: self.expr(self.child(n, 2))?,
            },
            line: self.line(n),
            span: self.span(n),
            cond_span: None,
        })
    }

    fn lvalue(&self, n: NodeId) -> Result<Expr, LowerError> {
        let line = self.line(n);
        let kind = match self.sig(n).as_str() {
            "IDENT" => ExprKind::Ident(self.lexeme(self.child(n, 0)).to_string()),
            "Postfix [ Expr ]" => ExprKind::Index(
                Box::new(self.expr(self.child(n, 0))?),
                Box::new(self.expr(self.child(n, 2))?),
            ),
            "Postfix . IDENT" => ExprKind::Field(
                Box::new(self.expr(self.child(n, 0))?),
                self.lexeme(self.child(n, 2)).to_string(),
            ),
            "Postfix -> IDENT" => ExprKind::Arrow(
                Box::new(self.expr(self.child(n, 0))?),
                self.lexeme(self.child(n, 2)).to_string(),
            ),
            "* Unary" => ExprKind::Unary(UnOp::Deref, Box::new(self.expr(self.child(n, 1))?)),
            s => unreachable!("lvalue shape {s}"),
        };
        Ok(Expr { kind, line })
    }

    fn expr(&self, n: NodeId) -> Result<Expr, LowerError> {
        if self.name(n) == "Call" {
            return self.call(n);
        }
        let line = self.line(n);
        let kids = &self.tree.node(n).children;
        // chain productions pass through to their single child
        if kids.len() == 1 && self.tree.node(kids[0]).token.is_none() {
            return self.expr(kids[0]);
        }
        let kind = match self.sig(n).as_str() {
            "OrE || AndE" | "AndE && CmpE" | "AddE == AddE" | "AddE != AddE" | "AddE < AddE"
            | "AddE > AddE" | "AddE <= AddE" | "AddE >= AddE" | "AddE + MulE" | "AddE - MulE"
            | "MulE * Unary" | "MulE / Unary" | "MulE % Unary" => {
                let op = match self.lexeme(kids[1]) {
                    "||" => BinOp::Or,
                    "&&" => BinOp::And,
                    "==" => BinOp::Eq,
                    "!=" => BinOp::Ne,
                    "<" => BinOp::Lt,
                    ">" => BinOp::Gt,
                    "<=" => BinOp::Le,
                    ">=" => BinOp::Ge,
                    "+" => BinOp::Add,
                    "-" => BinOp::Sub,
                    "*" => BinOp::Mul,
                    "/" => BinOp::Div,
                    "%" => BinOp::Mod,
                    op => unreachable!("binary operator {op}"),
                };
                ExprKind::Binary(
                    op,
                    Box::new(self.expr(kids[0])?),
                    Box::new(self.expr(kids[2])?),
                )
            }
            "- Unary" => ExprKind::Unary(UnOp::Neg, Box::new(self.expr(kids[1])?)),
            "! Unary" => ExprKind::Unary(UnOp::Not, Box::new(self.expr(kids[1])?)),
            "* Unary" => ExprKind::Unary(UnOp::Deref, Box::new(self.expr(kids[1])?)),
            "& Lvalue" => ExprKind::Unary(UnOp::Addr, Box::new(self.lvalue(kids[1])?)),
            "Postfix [ Expr ]" => ExprKind::Index(
                Box::new(self.expr(kids[0])?),
                Box::new(self.expr(kids[2])?),
            ),
            "Postfix . IDENT" => {
                ExprKind::Field(Box::new(self.expr(kids[0])?), self.lexeme(kids[2]).to_string())
            }
            "Postfix -> IDENT" => {
                ExprKind::Arrow(Box::new(self.expr(kids[0])?), self.lexeme(kids[2]).to_string())
            }
            "IDENT" => ExprKind::Ident(self.lexeme(kids[0]).to_string()),
            "NUM" => {
                let lit = self.lexeme(kids[0]);
                ExprKind::Int(lit.parse().map_err(|_| LowerError::BadInt {
                    lit: lit.to_string(),
                    line,
                })?)
            }
            "FLOAT" => {
                let lit = self.lexeme(kids[0]);
                ExprKind::Float(lit.parse().expect("float lexeme shape"))
            }
            "CHAR" => ExprKind::Char(decode_char(self.lexeme(kids[0])).ok_or_else(|| {
                LowerError::BadChar { lit: self.lexeme(kids[0]).to_string(), line }
            })?),
            "( Expr )" => return self.expr(kids[1]),
            "malloc ( Expr )" => ExprKind::Malloc(Box::new(self.expr(kids[2])?)),
            "null" => ExprKind::Null,
            s => unreachable!("expression shape {s}"),
        };
        Ok(Expr { kind, line })
    }

    fn call(&self, n: NodeId) -> Result<Expr, LowerError> {
        let line = self.line(n);
        let name = self.lexeme(self.child(n, 0)).to_string();
        let args = if self.tree.node(n).children.len() == 4 {
            self.flatten_sep(self.child(n, 2), "Args")
                .into_iter()
                .map(|a| self.expr(a))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        Ok(Expr { kind: ExprKind::Call(name, args), line })
    }
}

fn decode_char(lit: &str) -> Option<char> {
    let inner = lit.strip_prefix('\'')?.strip_suffix('\'')?;
    let mut chars = inner.chars();
    let c = match chars.next()? {
        '\\' => match chars.next()? {
            'n' => '\n',
            't' => '\t',
            '0' => '\0',
            '\\' => '\\',
            '\'' => '\'',
            '"' => '"',
            _ => return None,
        },
        c => c,
    };
    chars.next().is_none().then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::parse_unit;

    #[test]
    fn precedence_shapes_the_tree() {
        let u = parse_unit("t.mc", "void f(void) { int x = 1 + 2 * 3; }").unwrap();
        let StmtKind::Decl(d) = &u.funcs[0].body[0].kind else { panic!() };
        let Some(Expr { kind: ExprKind::Binary(BinOp::Add, l, r), .. }) = &d.init else {
            panic!("{:?}", d.init)
        };
        assert_eq!(l.kind, ExprKind::Int(1));
        assert!(matches!(r.kind, ExprKind::Binary(BinOp::Mul, _, _)));
    }

    #[test]
    fn postfix_chains_and_pointers() {
        let u = parse_unit(
            "t.mc",
            "struct node { int v; struct node* next; };\n\
             void f(struct node* p) { p->next->v = *&p->v + p->v; }",
        )
        .unwrap();
        let StmtKind::Assign { lhs, rhs } = &u.funcs[0].body[0].kind else { panic!() };
        let ExprKind::Arrow(inner, v) = &lhs.kind else { panic!("{lhs:?}") };
        assert_eq!(v, "v");
        assert!(matches!(inner.kind, ExprKind::Arrow(_, _)));
        let ExprKind::Binary(BinOp::Add, l, _) = &rhs.kind else { panic!("{rhs:?}") };
        let ExprKind::Unary(UnOp::Deref, addr) = &l.kind else { panic!("{l:?}") };
        assert!(matches!(addr.kind, ExprKind::Unary(UnOp::Addr, _)));
    }

    #[test]
    fn control_flow_lowers() {
        let src = "int g;\n\
                   int sum(int n) {\n\
                   int t = 0;\n\
                   for (t = 0; n > 0; n = n - 1) {\n\
                   if (n % 2 == 0) { continue; }\n\
                   t = t + n;\n\
                   }\n\
                   while (t > 100) { t = t / 2; break; }\n\
                   return t;\n\
                   }";
        let u = parse_unit("t.mc", src).unwrap();
        assert_eq!(u.globals.len(), 1);
        let f = &u.funcs[0];
        assert_eq!(f.ret, Some(Ty::int()));
        assert_eq!(f.params, vec![(Ty::int(), "n".to_string())]);
        let StmtKind::For { init, cond, step, body } = &f.body[1].kind else { panic!() };
        assert!(matches!(init.kind, StmtKind::Assign { .. }));
        assert!(matches!(cond.kind, ExprKind::Binary(BinOp::Gt, _, _)));
        assert!(matches!(step.kind, StmtKind::Assign { .. }));
        let StmtKind::If { els, then, .. } = &body[0].kind else { panic!() };
        assert!(els.is_none());
        assert!(matches!(then[0].kind, StmtKind::Continue));
        let StmtKind::While { body: wb, .. } = &f.body[2].kind else { panic!() };
        assert!(matches!(wb[1].kind, StmtKind::Break));
        assert!(matches!(f.body[3].kind, StmtKind::Return(Some(_))));
    }

    #[test]
    fn lines_follow_the_source() {
        let src = "void f(int a) {\nint x;\nx = a;\nassert(x >= 0);\n}";
        let u = parse_unit("t.mc", src).unwrap();
        let lines: Vec<usize> = u.funcs[0].body.iter().map(|s| s.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
        assert_eq!(u.funcs[0].line, 1);
    }

    #[test]
    fn literals_decode() {
        let u = parse_unit(
            "t.mc",
            "void f(void) { char c = '\\n'; float y = 2.5; int* p = null; free(malloc(3)); }",
        )
        .unwrap();
        let body = &u.funcs[0].body;
        let StmtKind::Decl(c) = &body[0].kind else { panic!() };
        assert_eq!(c.init.as_ref().unwrap().kind, ExprKind::Char('\n'));
        let StmtKind::Decl(y) = &body[1].kind else { panic!() };
        assert_eq!(y.init.as_ref().unwrap().kind, ExprKind::Float(2.5));
        let StmtKind::Decl(p) = &body[2].kind else { panic!() };
        assert_eq!(p.ty, Ty::int().ptr_to());
        assert_eq!(p.init.as_ref().unwrap().kind, ExprKind::Null);
        let StmtKind::Free(arg) = &body[3].kind else { panic!() };
        assert!(matches!(arg.kind, ExprKind::Malloc(_)));
    }

    #[test]
    fn int_literal_overflow_is_reported() {
        let err = parse_unit("t.mc", "void f(void) { int x = 99999999999999999999; }");
        assert!(matches!(err, Err(crate::minic::MinicError::Lower(LowerError::BadInt { .. }))));
    }
}
