//! Fragments of a program and the warnings that select them.
//!
//! A fragment is a subsequence of a program's tokens, stored as strictly
//! increasing indices. Warnings arrive as JSON: an id, a defect kind, and a
//! path of (file, line) steps ending at the sink. The fragment of a warning is
//! every token on any of the path's lines in the named file.

use serde::{Deserialize, Serialize};

use crate::grammar::{Program, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FragmentError {
    #[error("picks must be strictly increasing (violated at index {at})")]
    NonIncreasingPicks { at: usize },
    #[error("pick {pick} out of bounds for a {len}-token program")]
    PickOutOfBounds { pick: usize, len: usize },
    #[error("warning path step {file}:{line} selects no tokens")]
    UnresolvedLocation { file: String, line: u32 },
}

/// A subsequence of one program's tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub program: Program,
    picks: Vec<usize>,
}

impl Fragment {
    /// Picks must be strictly increasing indices into `program.tokens`.
    pub fn new(program: Program, picks: Vec<usize>) -> Result<Self, FragmentError> {
        for (i, &p) in picks.iter().enumerate() {
            if p >= program.tokens.len() {
                return Err(FragmentError::PickOutOfBounds { pick: p, len: program.tokens.len() });
            }
            if i > 0 && picks[i - 1] >= p {
                return Err(FragmentError::NonIncreasingPicks { at: i });
            }
        }
        Ok(Fragment { program, picks })
    }

    pub fn picks(&self) -> &[usize] {
        &self.picks
    }

    /// The picked tokens, in program order. `pos` is rewritten to the index in
    /// the fragment; provenance stays on `loc`.
    pub fn tokens(&self) -> Vec<Token> {
        self.picks
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut t = self.program.tokens[p].clone();
                t.pos = i;
                t
            })
            .collect()
    }

    pub fn lexemes(&self) -> Vec<&str> {
        self.picks.iter().map(|&p| self.program.tokens[p].lexeme.as_str()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.picks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.picks.len()
    }
}

/// Defect kinds a warning can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningKind {
    BufferOverflow,
    NullDeref,
    DivByZero,
    MemoryLeak,
    DeadCode,
    UnreachableCall,
}

/// Whether a warning claims a defect happens or that code never runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// Claims a defect can occur at the sink.
    Positive,
    /// Claims the sink is never reached.
    Negative,
}

impl WarningKind {
    pub fn polarity(&self) -> Polarity {
        match self {
            WarningKind::DeadCode | WarningKind::UnreachableCall => Polarity::Negative,
            _ => Polarity::Positive,
        }
    }
}

impl std::fmt::Display for WarningKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            WarningKind::BufferOverflow => "buffer-overflow",
            WarningKind::NullDeref => "null-deref",
            WarningKind::DivByZero => "div-by-zero",
            WarningKind::MemoryLeak => "memory-leak",
            WarningKind::DeadCode => "dead-code",
            WarningKind::UnreachableCall => "unreachable-call",
        };
        f.write_str(s)
    }
}

/// One step of a warning path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathStep {
    pub file: String,
    pub line: u32,
}

/// A static-analysis warning: a defect kind and the path said to trigger it.
/// The last step is the sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub id: String,
    pub kind: WarningKind,
    #[serde(default)]
    pub message: String,
    pub path: Vec<PathStep>,
}

impl Warning {
    pub fn sink(&self) -> Option<&PathStep> {
        self.path.last()
    }
}

/// A warnings file: `{"version": 1, "warnings": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningSet {
    pub version: u32,
    pub warnings: Vec<Warning>,
}

impl WarningSet {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("warning set serializes");
        s.push('\n');
        s
    }
}

/// Cuts the fragment a warning selects out of `program`: every token whose
/// line appears in a path step naming `program.file`. Every such step must
/// select at least one token.
pub fn fragment_from_warning(
    program: &Program,
    warning: &Warning,
) -> Result<Fragment, FragmentError> {
    let mut lines: Vec<u32> = warning
        .path
        .iter()
        .filter(|s| s.file == program.file)
        .map(|s| s.line)
        .collect();
    if lines.is_empty() {
        let step = warning.path.first().cloned().unwrap_or(PathStep {
            file: program.file.clone(),
            line: 0,
        });
        return Err(FragmentError::UnresolvedLocation { file: step.file, line: step.line });
    }
    lines.sort_unstable();
    lines.dedup();
    for &line in &lines {
        if !program.tokens.iter().any(|t| t.loc.line == line) {
            return Err(FragmentError::UnresolvedLocation { file: program.file.clone(), line });
        }
    }
    let picks = program
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lines.binary_search(&t.loc.line).is_ok())
        .map(|(i, _)| i)
        .collect();
    Fragment::new(program.clone(), picks)
}

/// Greedy left-to-right embedding of `needle` into `hay` by lexeme equality.
/// Returns the matched hay indices, or None when `needle` is not a
/// subsequence. Greedy matching is exact for existence: taking the earliest
/// possible match never rules out a later completion.
pub fn embed_positions(needle: &[Token], hay: &[Token]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(needle.len());
    let mut h = 0;
    for t in needle {
        let found = hay[h..].iter().position(|c| c.lexeme == t.lexeme)? + h;
        out.push(found);
        h = found + 1;
    }
    Some(out)
}

/// True when `needle` is a subsequence of `hay` under lexeme equality.
pub fn is_subsequence(needle: &[Token], hay: &[Token]) -> bool {
    embed_positions(needle, hay).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::SourceLoc;

    fn prog(lexemes: &[&str]) -> Program {
        Program::from_lexemes("p.c", lexemes)
    }

    #[test]
    fn picks_must_be_increasing_and_in_bounds() {
        let p = prog(&["a", "b", "c"]);
        assert!(Fragment::new(p.clone(), vec![0, 2]).is_ok());
        assert!(Fragment::new(p.clone(), vec![]).is_ok());
        assert_eq!(
            Fragment::new(p.clone(), vec![1, 1]),
            Err(FragmentError::NonIncreasingPicks { at: 1 })
        );
        assert_eq!(
            Fragment::new(p.clone(), vec![2, 0]),
            Err(FragmentError::NonIncreasingPicks { at: 1 })
        );
        assert_eq!(
            Fragment::new(p, vec![3]),
            Err(FragmentError::PickOutOfBounds { pick: 3, len: 3 })
        );
    }

    #[test]
    fn fragment_tokens_keep_provenance_and_renumber() {
        let p = prog(&["x", "=", "y", ";"]);
        let f = Fragment::new(p, vec![0, 3]).unwrap();
        let toks = f.tokens();
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[0].lexeme, "x");
        assert_eq!(toks[0].pos, 0);
        assert_eq!(toks[1].lexeme, ";");
        assert_eq!(toks[1].pos, 1);
        // provenance still points at the original column
        assert_eq!(toks[1].loc.col, 4);
        assert_eq!(f.lexemes(), vec!["x", ";"]);
    }

    #[test]
    fn warning_json_roundtrip() {
        let text = r#"{
  "version": 1,
  "warnings": [
    {
      "id": "w1",
      "kind": "buffer-overflow",
      "message": "index may exceed bounds",
      "path": [
        { "file": "p.c", "line": 2 },
        { "file": "p.c", "line": 5 }
      ]
    }
  ]
}"#;
        let set = WarningSet::from_json(text).unwrap();
        assert_eq!(set.warnings.len(), 1);
        let w = &set.warnings[0];
        assert_eq!(w.kind, WarningKind::BufferOverflow);
        assert_eq!(w.kind.polarity(), Polarity::Positive);
        assert_eq!(w.sink().unwrap().line, 5);
        let back = WarningSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn negative_kinds() {
        assert_eq!(WarningKind::DeadCode.polarity(), Polarity::Negative);
        assert_eq!(WarningKind::UnreachableCall.polarity(), Polarity::Negative);
        assert_eq!(WarningKind::MemoryLeak.polarity(), Polarity::Positive);
    }

    fn program_with_lines(spec: &[(&str, u32)]) -> Program {
        let tokens = spec
            .iter()
            .enumerate()
            .map(|(i, (lex, line))| Token::new(lex, i, SourceLoc::new("p.c", *line, 1)))
            .collect();
        Program::new("p.c", tokens)
    }

    #[test]
    fn fragment_from_warning_selects_whole_lines() {
        let p = program_with_lines(&[
            ("int", 1),
            ("x", 1),
            (";", 1),
            ("x", 2),
            ("=", 2),
            ("1", 2),
            (";", 2),
            ("y", 3),
            (";", 3),
        ]);
        let w = Warning {
            id: "w".into(),
            kind: WarningKind::NullDeref,
            message: String::new(),
            path: vec![
                PathStep { file: "p.c".into(), line: 1 },
                PathStep { file: "p.c".into(), line: 3 },
            ],
        };
        let f = fragment_from_warning(&p, &w).unwrap();
        assert_eq!(f.picks(), &[0, 1, 2, 7, 8]);
        assert_eq!(f.lexemes(), vec!["int", "x", ";", "y", ";"]);
    }

    #[test]
    fn fragment_from_warning_unresolved() {
        let p = program_with_lines(&[("x", 1)]);
        let w = Warning {
            id: "w".into(),
            kind: WarningKind::NullDeref,
            message: String::new(),
            path: vec![PathStep { file: "p.c".into(), line: 9 }],
        };
        assert_eq!(
            fragment_from_warning(&p, &w),
            Err(FragmentError::UnresolvedLocation { file: "p.c".into(), line: 9 })
        );
        let other = Warning {
            id: "w".into(),
            kind: WarningKind::NullDeref,
            message: String::new(),
            path: vec![PathStep { file: "q.c".into(), line: 1 }],
        };
        assert!(matches!(
            fragment_from_warning(&p, &other),
            Err(FragmentError::UnresolvedLocation { .. })
        ));
    }

    #[test]
    fn subsequence_basics() {
        let hay = prog(&["a", "b", "a", "c"]).tokens;
        let yes = prog(&["b", "c"]).tokens;
        let no = prog(&["c", "b"]).tokens;
        assert!(is_subsequence(&yes, &hay));
        assert!(!is_subsequence(&no, &hay));
        assert!(is_subsequence(&[], &hay));
        assert_eq!(embed_positions(&yes, &hay), Some(vec![1, 3]));
    }

    // greedy embedding agrees with an exhaustive search on every small case
    #[test]
    fn greedy_embedding_is_exact() {
        fn exists_any(needle: &[&str], hay: &[&str], n: usize, h: usize) -> bool {
            if n == needle.len() {
                return true;
            }
            if h == hay.len() {
                return false;
            }
            (needle[n] == hay[h] && exists_any(needle, hay, n + 1, h + 1))
                || exists_any(needle, hay, n, h + 1)
        }
        let alphabet = ["a", "b"];
        let seqs = |len_max: usize| -> Vec<Vec<&'static str>> {
            let mut out = vec![vec![]];
            let mut frontier = vec![vec![]];
            for _ in 0..len_max {
                let mut next = Vec::new();
                for s in &frontier {
                    for a in alphabet {
                        let mut s2 = s.clone();
                        s2.push(a);
                        next.push(s2);
                    }
                }
                out.extend(next.iter().cloned());
                frontier = next;
            }
            out
        };
        for needle in seqs(4) {
            for hay in seqs(6) {
                let nt = prog(&needle).tokens;
                let ht = prog(&hay).tokens;
                assert_eq!(
                    is_subsequence(&nt, &ht),
                    exists_any(&needle, &hay, 0, 0),
                    "needle {needle:?} hay {hay:?}"
                );
            }
        }
    }
}
