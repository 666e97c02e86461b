//! MiniC tokenizer. Produces the flat [`Token`] stream the grammar-generic
//! layers work on; keywords are ordinary identifier-shaped lexemes and are
//! claimed by the grammar's literal terminals, not here.

use crate::grammar::{SourceLoc, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexError {
    #[error("{file}:{line}:{col}: unexpected character {ch:?}")]
    UnexpectedChar { file: String, line: u32, col: u32, ch: char },
    #[error("{file}:{line}: unterminated block comment")]
    UnterminatedComment { file: String, line: u32 },
    #[error("{file}:{line}: unterminated character literal")]
    UnterminatedChar { file: String, line: u32 },
    #[error("{file}:{line}: unterminated string literal")]
    UnterminatedString { file: String, line: u32 },
}

/// Splits MiniC source into tokens with source locations. Line comments
/// (`//`) and block comments (`/* */`) are skipped; multi-character
/// operators (`->`, `==`, `!=`, `<=`, `>=`, `&&`, `||`) lex as one token.
pub fn tokenize(file: &str, src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    let push = |lexeme: String, line: u32, col: u32, out: &mut Vec<Token>| {
        let pos = out.len();
        out.push(Token { lexeme, pos, loc: SourceLoc::new(file, line, col) });
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let open_line = line;
            i += 2;
            col += 2;
            loop {
                if i >= chars.len() {
                    return Err(LexError::UnterminatedComment {
                        file: file.to_string(),
                        line: open_line,
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let start_col = col;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
                col += 1;
            }
            push(chars[start..i].iter().collect(), line, start_col, &mut out);
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let start_col = col;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
                col += 1;
            }
            // digits '.' digits is one float token
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())
            {
                i += 1;
                col += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
            }
            push(chars[start..i].iter().collect(), line, start_col, &mut out);
            continue;
        }
        if c == '\'' {
            let start = i;
            let start_col = col;
            i += 1;
            col += 1;
            let mut closed = false;
            while i < chars.len() && chars[i] != '\n' {
                if chars[i] == '\\' {
                    i += 2;
                    col += 2;
                    continue;
                }
                if chars[i] == '\'' {
                    i += 1;
                    col += 1;
                    closed = true;
                    break;
                }
                i += 1;
                col += 1;
            }
            if !closed {
                return Err(LexError::UnterminatedChar { file: file.to_string(), line });
            }
            push(chars[start..i].iter().collect(), line, start_col, &mut out);
            continue;
        }
        if c == '"' {
            let start = i;
            let start_col = col;
            i += 1;
            col += 1;
            let mut closed = false;
            while i < chars.len() && chars[i] != '\n' {
                if chars[i] == '\\' {
                    i += 2;
                    col += 2;
                    continue;
                }
                if chars[i] == '"' {
                    i += 1;
                    col += 1;
                    closed = true;
                    break;
                }
                i += 1;
                col += 1;
            }
            if !closed {
                return Err(LexError::UnterminatedString { file: file.to_string(), line });
            }
            push(chars[start..i].iter().collect(), line, start_col, &mut out);
            continue;
        }
        const TWO: [&str; 7] = ["->", "==", "!=", "<=", ">=", "&&", "||"];
        let pair: String = chars[i..chars.len().min(i + 2)].iter().collect();
        if TWO.contains(&pair.as_str()) {
            push(pair, line, col, &mut out);
            i += 2;
            col += 2;
            continue;
        }
        if "+-*/%<>=!&|(){}[];,.".contains(c) {
            push(c.to_string(), line, col, &mut out);
            i += 1;
            col += 1;
            continue;
        }
        return Err(LexError::UnexpectedChar { file: file.to_string(), line, col, ch: c });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexemes(src: &str) -> Vec<String> {
        tokenize("t.mc", src).unwrap().into_iter().map(|t| t.lexeme).collect()
    }

    #[test]
    fn operators_and_idents() {
        assert_eq!(
            lexemes("p->next != null && x <= 10"),
            vec!["p", "->", "next", "!=", "null", "&&", "x", "<=", "10"]
        );
        assert_eq!(lexemes("a=-1"), vec!["a", "=", "-", "1"]);
        assert_eq!(lexemes("x == = y"), vec!["x", "==", "=", "y"]);
    }

    #[test]
    fn numbers_split_from_floats() {
        assert_eq!(lexemes("12 3.5 0.0 7"), vec!["12", "3.5", "0.0", "7"]);
        // a trailing dot is a separate member-access token
        assert_eq!(lexemes("3."), vec!["3", "."]);
    }

    #[test]
    fn char_and_string_literals_keep_quotes() {
        assert_eq!(lexemes("'a' '\\n' '\\''"), vec!["'a'", "'\\n'", "'\\''"]);
        assert_eq!(lexemes(r#""hi \"there\"""#), vec![r#""hi \"there\"""#]);
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(lexemes("a // rest\nb /* c\nd */ e"), vec!["a", "b", "e"]);
    }

    #[test]
    fn locations_track_lines_and_columns() {
        let toks = tokenize("t.mc", "int x;\n  x = 1;").unwrap();
        let locs: Vec<(u32, u32)> = toks.iter().map(|t| (t.loc.line, t.loc.col)).collect();
        assert_eq!(locs, vec![(1, 1), (1, 5), (1, 6), (2, 3), (2, 5), (2, 7), (2, 8)]);
        assert_eq!(toks[3].pos, 3);
    }

    #[test]
    fn lex_errors() {
        assert!(matches!(
            tokenize("t.mc", "a /* b"),
            Err(LexError::UnterminatedComment { line: 1, .. })
        ));
        assert!(matches!(
            tokenize("t.mc", "'x"),
            Err(LexError::UnterminatedChar { line: 1, .. })
        ));
        assert!(matches!(
            tokenize("t.mc", "\"abc"),
            Err(LexError::UnterminatedString { line: 1, .. })
        ));
        assert!(matches!(
            tokenize("t.mc", "a # b"),
            Err(LexError::UnexpectedChar { ch: '#', .. })
        ));
    }
}
