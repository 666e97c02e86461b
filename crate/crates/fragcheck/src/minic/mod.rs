//! MiniC: the self-contained C-like subject language. Functions, scalars
//! (int/float/char), fixed arrays, pointers, structs, structured control
//! flow, assert, and malloc/free. This module holds the tokenizer, the
//! grammar the patching layers use, the AST with its lowering, and a light
//! type checker.
//!
//! The grammar is written so that break and continue are only derivable
//! inside loop bodies (the L-prefixed nonterminals). A fragment containing a
//! bare break therefore cannot be completed without reinstating an enclosing
//! loop, which keeps the patched control flow honest. Blocks are mandatory
//! on every control construct, so there is no dangling else and the grammar
//! is unambiguous.

pub mod ast;
pub mod check;
pub mod lex;

use std::sync::OnceLock;

use crate::grammar::{load_grammar, Grammar, GrammarError, Token};

pub use ast::{
    lower_unit, BaseTy, BinOp, Expr, ExprKind, FieldDef, Func, LowerError, Stmt, StmtKind,
    StructDef, Ty, UnOp, Unit, VarDecl,
};
pub use check::{check_unit, CheckError};
pub use lex::{tokenize, LexError};

pub const MINIC_GRAMMAR: &str = r#"
# MiniC surface syntax. Epsilon-free; loop bodies use the L-stratified
# statement forms so break/continue only derive under a loop header.
Unit -> Defs
Defs -> Defs Def | Def
Def -> StructDef | GlobalDecl | Func
StructDef -> "struct" IDENT "{" Fields "}" ";"
Fields -> Fields Field | Field
Field -> Type IDENT ";" | Type IDENT "[" NUM "]" ";"
GlobalDecl -> Decl
Func -> RetTy IDENT "(" Params ")" Block
RetTy -> Type | "void"
Params -> "void" | ParamList
ParamList -> ParamList "," Param | Param
Param -> Type IDENT
Type -> "int" | "float" | "char" | "struct" IDENT | Type "*"
Block -> "{" Stmts "}"
Stmts -> Stmts Stmt | Stmt
Stmt -> Decl | Assign ";" | Call ";" | If | While | For | Return | Assert | FreeStmt
Decl -> Type IDENT ";" | Type IDENT "=" Expr ";" | Type IDENT "[" NUM "]" ";"
Assign -> Lvalue "=" Expr
If -> "if" "(" Expr ")" Block | "if" "(" Expr ")" Block "else" Block
While -> "while" "(" Expr ")" LBlock
For -> "for" "(" Assign ";" Expr ";" Assign ")" LBlock
Return -> "return" ";" | "return" Expr ";"
Assert -> "assert" "(" Expr ")" ";"
FreeStmt -> "free" "(" Expr ")" ";"
LBlock -> "{" LStmts "}"
LStmts -> LStmts LStmt | LStmt
LStmt -> Decl | Assign ";" | Call ";" | LIf | While | For | Return | Assert | FreeStmt | Break | Continue
Break -> "break" ";"
Continue -> "continue" ";"
LIf -> "if" "(" Expr ")" LBlock | "if" "(" Expr ")" LBlock "else" LBlock
Lvalue -> IDENT | Postfix "[" Expr "]" | Postfix "." IDENT | Postfix "->" IDENT | "*" Unary
Expr -> OrE
OrE -> OrE "||" AndE | AndE
AndE -> AndE "&&" CmpE | CmpE
CmpE -> AddE "==" AddE | AddE "!=" AddE | AddE "<" AddE | AddE ">" AddE | AddE "<=" AddE | AddE ">=" AddE | AddE
AddE -> AddE "+" MulE | AddE "-" MulE | MulE
MulE -> MulE "*" Unary | MulE "/" Unary | MulE "%" Unary | Unary
Unary -> "-" Unary | "!" Unary | "*" Unary | "&" Lvalue | Postfix
Postfix -> Postfix "[" Expr "]" | Postfix "." IDENT | Postfix "->" IDENT | Primary
Primary -> IDENT | NUM | FLOAT | CHAR | "(" Expr ")" | Call | "malloc" "(" Expr ")" | "null"
Call -> IDENT "(" ")" | IDENT "(" Args ")"
Args -> Args "," Expr | Expr
"#;

/// The shared MiniC grammar, loaded once.
pub fn minic_grammar() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| load_grammar(MINIC_GRAMMAR).expect("grammar text is well formed"))
}

/// Reserved words; identifier-shaped lexemes the grammar claims as literals.
pub fn is_keyword(lexeme: &str) -> bool {
    matches!(
        lexeme,
        "int"
            | "float"
            | "char"
            | "void"
            | "struct"
            | "if"
            | "else"
            | "while"
            | "for"
            | "break"
            | "continue"
            | "return"
            | "assert"
            | "free"
            | "malloc"
            | "null"
    )
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MinicError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] GrammarError),
    #[error(transparent)]
    Lower(#[from] LowerError),
}

/// Tokenizes, parses, and lowers one MiniC source file.
pub fn parse_unit(file: &str, src: &str) -> Result<Unit, MinicError> {
    let tokens = tokenize(file, src)?;
    unit_from_tokens(file, &tokens)
}

/// Parses and lowers an already-tokenized program (e.g. a patched token
/// sequence, whose provenance locations must survive).
pub fn unit_from_tokens(file: &str, tokens: &[Token]) -> Result<Unit, MinicError> {
    let g = minic_grammar();
    let tree = g.parse(tokens)?;
    Ok(lower_unit(g, &tree, tokens, file)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Sym;

    #[test]
    fn grammar_loads_and_names_check_out() {
        let g = minic_grammar();
        assert_eq!(g.sym_name(g.start), "Unit");
        assert!(g.epsilon_productions.is_empty());
        let ident = (0..g.symbol_count() as Sym)
            .find(|&s| g.sym_name(s) == "IDENT")
            .expect("IDENT terminal");
        for kw in ["int", "while", "malloc", "assert", "null", "break"] {
            // keywords are literals, never IDENT matches
            assert!(!g.terminal_matches(ident, kw), "{kw} leaked into IDENT");
        }
    }

    #[test]
    fn representative_programs_parse_unambiguously() {
        let sources = [
            "void f(void) { return; }",
            "int g;\nint h = 3;\nchar* s;\nvoid f(int a, float b) { return; }",
            "struct pt { int x; int y[4]; };\n\
             int len(struct pt* p) { return p->x; }",
            "void f(int n) {\n\
             int a[8];\n\
             int i = 0;\n\
             while (i < n) { if (a[i] == 0) { break; } i = i + 1; }\n\
             for (i = 0; i < 4; i = i + 1) { a[i] = i * 2; }\n\
             if (n > 0 && !(n % 2)) { a[0] = -n; } else { free(malloc(2)); }\n\
             assert(a[0] <= 0 || 1.5 < 2.0);\n\
             }",
        ];
        for src in sources {
            let toks = tokenize("t.mc", src).unwrap();
            let tree = minic_grammar().parse(&toks).unwrap();
            assert_eq!(tree.ambiguous_nodes, 0, "ambiguous parse for {src}");
        }
    }

    #[test]
    fn break_only_parses_inside_loops() {
        let loose = tokenize("t.mc", "void f(void) { break; }").unwrap();
        assert!(minic_grammar().parse(&loose).is_err());
        let in_if = tokenize("t.mc", "void f(int c) { if (c) { continue; } }").unwrap();
        assert!(minic_grammar().parse(&in_if).is_err());
        let looped =
            tokenize("t.mc", "void f(int c) { while (c) { if (c) { break; } } }").unwrap();
        assert!(minic_grammar().parse(&looped).is_ok());
    }

    #[test]
    fn parse_errors_carry_a_position() {
        let toks = tokenize("t.mc", "void f(void) { int ; }").unwrap();
        let err = minic_grammar().parse(&toks).unwrap_err();
        assert!(matches!(err, GrammarError::NotRecognized { .. }));
    }
}
