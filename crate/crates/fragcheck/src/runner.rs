//! Harness synthesis, input generation, and warning classification.
//!
//! A resolved unit becomes a test program by appending an entry function
//! that calls the warned function with synthesized globals as arguments.
//! Generated input vectors bind those globals, the checking interpreter
//! runs the program, and each run is matched against the warning's oracle:
//! a failure of the right kind at the warned location validates a positive
//! warning, a normal run covering that location merely exercises it, and a
//! fired injected assertion refutes a claim that code is unreachable.

use std::collections::HashSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deps::CompilableUnit;
use crate::fragment::{Polarity, Warning, WarningKind};
use crate::grammar::{SourceLoc, Token};
use crate::interp::{run_unit, FailureKind, InputValue, InterpreterBug, Outcome, RunResult};
use crate::minic::{check_unit, tokenize, unit_from_tokens, BaseTy, StructDef, Ty, Unit};

/// Array lengths are drawn from 0..MAX_ARRAY_LEN, with the bound itself used
/// as the oversized boundary case.
pub const MAX_ARRAY_LEN: usize = 16;

/// Default interpreter step budget for one run.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Default number of input vectors tried per warning.
pub const DEFAULT_INPUTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error("unit is not buildable: {0}")]
    Unbuildable(String),
    #[error("unit defines no function to drive")]
    NoEntry,
    #[error("input {0} has a composite type that cannot be initialized")]
    Uninitializable(String),
    #[error("assertion injection broke the unit: {0}")]
    BadInjection(String),
}

/// A runnable probe for one warning: the resolved unit, a synthesized entry
/// function, and (for negative warnings) the assertion injected at the
/// warned line.
#[derive(Debug, Clone)]
pub struct TestProgram {
    pub unit: CompilableUnit,
    /// tokens of the synthesized entry function alone
    pub harness: Vec<Token>,
    /// locations of injected always-failing assertions
    pub assertions: Vec<(String, u32)>,
    /// the complete program: unit, injections, synthesized globals, harness
    pub tokens: Vec<Token>,
    /// name of the synthesized entry function
    pub entry: String,
    /// the warned function the harness calls, exactly once
    pub target: String,
    /// every bindable slot: synthesized parameter globals, then input vars
    pub inputs: Vec<(String, Ty)>,
    /// struct definitions visible in the program, for input generation
    pub structs: Vec<StructDef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMatch {
    /// the run triggered the warned failure at the warned location
    Valid,
    /// the run finished normally and covered the warned line
    Pass,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictValue {
    TruePositive,
    FalsePositive,
    LikelyFalsePositive,
    Inconclusive,
}

impl std::fmt::Display for VerdictValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VerdictValue::TruePositive => "true-positive",
            VerdictValue::FalsePositive => "false-positive",
            VerdictValue::LikelyFalsePositive => "likely-false-positive",
            VerdictValue::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

pub type InputVector = Vec<(String, InputValue)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: VerdictValue,
    /// every executed input with its result, in execution order
    pub evidence: Vec<(InputVector, RunResult)>,
}

/// Builds the runnable probe for `w` from a resolved unit.
///
/// The entry function binds test data through synthesized globals: one per
/// parameter of the warned function, plus the unit's own input variables,
/// which are already declared as globals. For a negative warning an
/// `assert(0)` is injected in front of the warned line so that reaching it
/// is observable as a failure there.
pub fn generate_harness(unit: &CompilableUnit, w: &Warning) -> Result<TestProgram, HarnessError> {
    if let Some(reason) = &unit.unbuildable {
        return Err(HarnessError::Unbuildable(reason.clone()));
    }
    let mut tokens = unit.assembled_tokens();
    let base = unit_from_tokens("<assembled>", &tokens)
        .map_err(|e| HarnessError::Unbuildable(format!("assembled unit does not parse: {e}")))?;
    check_unit(&base).map_err(|e| {
        HarnessError::Unbuildable(format!("assembled unit does not type-check: {e}"))
    })?;
    if base.funcs.is_empty() {
        return Err(HarnessError::NoEntry);
    }
    let target = pick_target(&base, &tokens, w);

    let mut taken: HashSet<String> = tokens.iter().map(|t| t.lexeme.clone()).collect();
    let entry = uniquify("__test_main", &mut taken);

    // negative warnings: make reaching the warned line fail loudly there
    let mut assertions = Vec::new();
    if w.kind.polarity() == Polarity::Negative {
        let Some(sink) = w.sink() else {
            return Err(HarnessError::BadInjection("warning has no sink".into()));
        };
        let Some(at) = tokens
            .iter()
            .position(|t| t.loc.file == sink.file && t.loc.line == sink.line)
        else {
            return Err(HarnessError::BadInjection(format!(
                "no token comes from {}:{}",
                sink.file, sink.line
            )));
        };
        let loc = SourceLoc::new(&sink.file, sink.line, 0);
        for (i, lex) in ["assert", "(", "0", ")", ";"].iter().enumerate() {
            tokens.insert(at + i, Token::new(lex, 0, loc.clone()));
        }
        assertions.push((sink.file.clone(), sink.line));
    }

    // one synthesized global per parameter of the warned function
    let mut inputs = Vec::new();
    let mut args = Vec::new();
    for (i, (ty, _)) in target.params.iter().enumerate() {
        let name = uniquify(&format!("__in{i}"), &mut taken);
        let text = format!("{ty} {name} ;");
        let decl = tokenize("<harness>", &text)
            .map_err(|e| HarnessError::Unbuildable(format!("cannot declare {name}: {e}")))?;
        tokens.extend(decl.into_iter().map(|mut t| {
            t.loc = SourceLoc::new("<harness>", 0, 0);
            t
        }));
        args.push(name.clone());
        inputs.push((name, ty.clone()));
    }
    inputs.extend(unit.input_vars.iter().cloned());

    let mut lexemes = vec!["void", entry.as_str(), "(", "void", ")", "{", &target.name, "("];
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            lexemes.push(",");
        }
        lexemes.push(a);
    }
    lexemes.extend([")", ";", "}"]);
    let harness: Vec<Token> = lexemes
        .iter()
        .map(|l| Token::new(l, 0, SourceLoc::new("<harness>", 0, 0)))
        .collect();
    tokens.extend(harness.iter().cloned());
    for (i, t) in tokens.iter_mut().enumerate() {
        t.pos = i;
    }

    let full = unit_from_tokens("<harness>", &tokens)
        .map_err(|e| HarnessError::BadInjection(e.to_string()))?;
    check_unit(&full).map_err(|e| HarnessError::BadInjection(e.to_string()))?;

    // defensive: the checker above should already refuse these
    for (name, ty) in &inputs {
        if ty.ptr == 0 && ty.base == BaseTy::Struct {
            let tag = ty.tag.as_deref().unwrap_or_default();
            if !full.structs.iter().any(|s| s.name == tag) {
                return Err(HarnessError::Uninitializable(name.clone()));
            }
        }
    }

    Ok(TestProgram {
        unit: unit.clone(),
        harness,
        assertions,
        tokens,
        entry,
        target: target.name,
        inputs,
        structs: full.structs,
    })
}

// the function whose body covers the first step of the warning path, or the
// first function when provenance does not decide
fn pick_target(base: &Unit, tokens: &[Token], w: &Warning) -> crate::minic::Func {
    if let Some(step) = w.path.first() {
        for f in &base.funcs {
            let covers = tokens[f.span.0..f.span.1]
                .iter()
                .any(|t| t.loc.file == step.file && t.loc.line == step.line);
            if covers {
                return f.clone();
            }
        }
    }
    base.funcs[0].clone()
}

fn uniquify(base: &str, taken: &mut HashSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    taken.insert(name.clone());
    name
}

// which boundary a vector leans on; four fixed probes lead every batch of
// twenty, the rest are random
#[derive(Clone, Copy, PartialEq)]
enum Shape {
    Zeros,
    Ones,
    MinusOnes,
    Extremes,
    Random,
}

fn shape_of(index: usize) -> Shape {
    match index % 20 {
        0 => Shape::Zeros,
        1 => Shape::Ones,
        2 => Shape::MinusOnes,
        3 => Shape::Extremes,
        _ => Shape::Random,
    }
}

/// Generates `n` deterministic input vectors for the given slots. The
/// distribution is boundary-biased: every batch of twenty opens with
/// all-zero values and empty arrays, then null pointers and ones, then
/// length-one arrays and minus ones, then extremes and oversized arrays.
pub fn gen_inputs(
    types: &[(String, Ty)],
    structs: &[StructDef],
    seed: u64,
    n: usize,
) -> Vec<InputVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let shape = shape_of(i);
            types
                .iter()
                .map(|(name, ty)| (name.clone(), gen_value(ty, structs, shape, &mut rng, 0)))
                .collect()
        })
        .collect()
}

fn gen_value(ty: &Ty, structs: &[StructDef], shape: Shape, rng: &mut ChaCha8Rng, depth: usize) -> InputValue {
    if ty.ptr > 0 {
        if depth >= 3 {
            return InputValue::Null;
        }
        let elem = ty.deref().expect("pointer dereferences");
        let len = match shape {
            Shape::Zeros => return InputValue::Array(Vec::new()),
            Shape::Ones => return InputValue::Null,
            Shape::MinusOnes => 1,
            Shape::Extremes => MAX_ARRAY_LEN,
            Shape::Random => rng.random_range(0..MAX_ARRAY_LEN),
        };
        let items = (0..len)
            .map(|_| gen_value(&elem, structs, shape, rng, depth + 1))
            .collect();
        return InputValue::Array(items);
    }
    if ty.base == BaseTy::Struct {
        let tag = ty.tag.as_deref().unwrap_or_default();
        let Some(def) = structs.iter().find(|s| s.name == tag) else {
            return InputValue::Struct(Vec::new());
        };
        let def = def.clone();
        let fields = def
            .fields
            .iter()
            .map(|f| {
                let fty =
                    if f.len.is_some() { f.ty.clone().ptr_to() } else { f.ty.clone() };
                // pointer fields stay null except for occasional short
                // chains, so recursive structs cannot blow up
                let v = if fty.is_ptr() {
                    if shape == Shape::Random && depth < 3 && rng.random_bool(0.3) {
                        let elem = fty.deref().expect("pointer dereferences");
                        InputValue::Array(vec![gen_value(&elem, structs, shape, rng, depth + 1)])
                    } else {
                        InputValue::Null
                    }
                } else {
                    gen_value(&fty, structs, shape, rng, depth + 1)
                };
                (f.name.clone(), v)
            })
            .collect();
        return InputValue::Struct(fields);
    }
    match ty.base {
        BaseTy::Int => InputValue::Int(match shape {
            Shape::Zeros => 0,
            Shape::Ones => 1,
            Shape::MinusOnes => -1,
            Shape::Extremes => {
                if rng.random_bool(0.5) {
                    i64::MAX
                } else {
                    i64::MIN
                }
            }
            Shape::Random => {
                if rng.random_bool(0.125) {
                    rng.random_range(-1000..=1000)
                } else {
                    rng.random_range(-16..=16)
                }
            }
        }),
        BaseTy::Char => InputValue::Char(match shape {
            Shape::Zeros => 0,
            Shape::Ones => 1,
            Shape::MinusOnes | Shape::Extremes => 255,
            Shape::Random => rng.random_range(0..=255),
        }),
        BaseTy::Float => InputValue::Float(match shape {
            Shape::Zeros => 0.0,
            Shape::Ones => 1.0,
            Shape::MinusOnes => -1.0,
            Shape::Extremes => {
                if rng.random_bool(0.5) {
                    f64::MAX
                } else {
                    f64::MIN
                }
            }
            Shape::Random => rng.random_range(-100.0..100.0),
        }),
        BaseTy::Struct => unreachable!("handled above"),
    }
}

/// Optional fuzzing stand-in: derives `rounds` new vectors by small
/// mutations of the given ones. Off by default everywhere; results from it
/// carry the same evidence format but are not part of any reported rate.
pub fn mutate_inputs(vectors: &[InputVector], seed: u64, rounds: usize) -> Vec<InputVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d75_7461_7465);
    let mut out = Vec::new();
    if vectors.is_empty() {
        return out;
    }
    for _ in 0..rounds {
        let mut v = vectors[rng.random_range(0..vectors.len())].clone();
        if !v.is_empty() {
            let slot = rng.random_range(0..v.len());
            mutate_value(&mut v[slot].1, &mut rng);
        }
        out.push(v);
    }
    out
}

fn mutate_value(v: &mut InputValue, rng: &mut ChaCha8Rng) {
    match v {
        InputValue::Int(i) => *i ^= 1 << rng.random_range(0..63),
        InputValue::Float(f) => {
            *f = match rng.random_range(0..3) {
                0 => -*f,
                1 => *f * 2.0,
                _ => 0.0,
            }
        }
        InputValue::Char(c) => *c = rng.random(),
        InputValue::Null => *v = InputValue::Array(Vec::new()),
        InputValue::Array(items) => {
            if items.is_empty() || rng.random_bool(0.5) {
                items.push(InputValue::Int(0));
            } else {
                let at = rng.random_range(0..items.len());
                mutate_value(&mut items[at], rng);
            }
        }
        InputValue::Struct(fields) => {
            if fields.is_empty() {
                *v = InputValue::Null;
            } else {
                let at = rng.random_range(0..fields.len());
                mutate_value(&mut fields[at].1, rng);
            }
        }
    }
}

/// Runs the probe once with `input` bound to its slots.
pub fn execute(
    tp: &TestProgram,
    input: &[(String, InputValue)],
    budget: u64,
) -> Result<RunResult, InterpreterBug> {
    let unit = unit_from_tokens("<harness>", &tp.tokens)
        .map_err(|e| InterpreterBug(format!("validated harness stopped parsing: {e}")))?;
    run_unit(&unit, &tp.entry, input, budget)
}

/// Exact-location oracle; see [`match_oracle_with`] for the tolerant form.
pub fn match_oracle(r: &RunResult, w: &Warning) -> OracleMatch {
    match_oracle_with(r, w, 0)
}

/// Compares one run against the warning's oracle. Valid means the run
/// failed with the warned symptom within `line_tolerance` of the warned
/// line in the warned file; Pass means it finished normally after covering
/// that line; anything else, timeouts included, is Irrelevant.
pub fn match_oracle_with(r: &RunResult, w: &Warning, line_tolerance: u32) -> OracleMatch {
    let Some(sink) = w.sink() else {
        return OracleMatch::Irrelevant;
    };
    let close = |line: u32| line.abs_diff(sink.line) <= line_tolerance;
    match &r.outcome {
        Outcome::Failure(f) => {
            let line_ok = u32::try_from(f.line).is_ok_and(&close);
            if f.kind == symptom_of(w.kind) && f.file == sink.file && line_ok {
                OracleMatch::Valid
            } else {
                OracleMatch::Irrelevant
            }
        }
        Outcome::Normal => {
            let covered = r.trace.iter().any(|(file, line)| {
                file == &sink.file && u32::try_from(*line).is_ok_and(&close)
            });
            if covered {
                OracleMatch::Pass
            } else {
                OracleMatch::Irrelevant
            }
        }
        Outcome::Timeout => OracleMatch::Irrelevant,
    }
}

/// The runtime failure each warning kind predicts. Negative kinds map to
/// the injected assertion, which is what firing the warned line looks like.
pub fn symptom_of(kind: WarningKind) -> FailureKind {
    match kind {
        WarningKind::BufferOverflow => FailureKind::OutOfBounds,
        WarningKind::NullDeref => FailureKind::NullDeref,
        WarningKind::DivByZero => FailureKind::DivByZero,
        WarningKind::MemoryLeak => FailureKind::Leak,
        WarningKind::DeadCode | WarningKind::UnreachableCall => FailureKind::AssertFail,
    }
}

/// Folds all runs into a verdict. One valid test settles a positive warning
/// as a true positive and a negative warning as a false positive; with no
/// valid test, covering runs downgrade a positive warning to likely false,
/// and everything else stays inconclusive.
pub fn classify(w: &Warning, results: Vec<(InputVector, RunResult)>) -> Verdict {
    classify_with(w, results, 0)
}

/// [`classify`] with the oracle's line tolerance widened.
pub fn classify_with(
    w: &Warning,
    results: Vec<(InputVector, RunResult)>,
    line_tolerance: u32,
) -> Verdict {
    let mut any_valid = false;
    let mut any_pass = false;
    for (_, r) in &results {
        match match_oracle_with(r, w, line_tolerance) {
            OracleMatch::Valid => any_valid = true,
            OracleMatch::Pass => any_pass = true,
            OracleMatch::Irrelevant => {}
        }
    }
    let value = match w.kind.polarity() {
        Polarity::Positive => {
            if any_valid {
                VerdictValue::TruePositive
            } else if any_pass {
                VerdictValue::LikelyFalsePositive
            } else {
                VerdictValue::Inconclusive
            }
        }
        Polarity::Negative => {
            if any_valid {
                VerdictValue::FalsePositive
            } else {
                VerdictValue::Inconclusive
            }
        }
    };
    Verdict { value, evidence: results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::{index_definitions, resolve_dependencies};
    use crate::fragment::PathStep;
    use crate::grammar::Program;
    use crate::interp::Failure;
    use std::collections::BTreeSet;

    fn unit_of(src: &str) -> CompilableUnit {
        let toks = tokenize("t.mc", src).unwrap();
        let db = index_definitions(&[]);
        resolve_dependencies(&Program::new("t.mc", toks), &db)
    }

    fn warn(kind: WarningKind, lines: &[u32]) -> Warning {
        Warning {
            id: "w1".to_string(),
            kind,
            message: String::new(),
            path: lines.iter().map(|&l| PathStep { file: "t.mc".to_string(), line: l }).collect(),
        }
    }

    fn drive(src: &str, w: &Warning, seed: u64) -> Verdict {
        let unit = unit_of(src);
        let tp = generate_harness(&unit, w).unwrap();
        let vectors = gen_inputs(&tp.inputs, &tp.structs, seed, DEFAULT_INPUTS);
        let mut results = Vec::new();
        for v in vectors {
            let r = execute(&tp, &v, DEFAULT_BUDGET).unwrap();
            results.push((v, r));
        }
        classify(w, results)
    }

    #[test]
    fn unguarded_division_validates_as_true_positive() {
        let src = "void f(int d) {\nint x;\nx = 1 / d;\n}";
        let w = warn(WarningKind::DivByZero, &[3]);
        let v = drive(src, &w, 11);
        assert_eq!(v.value, VerdictValue::TruePositive);
        // the invariant every valid record must satisfy
        for (_, r) in &v.evidence {
            if match_oracle(r, &w) == OracleMatch::Valid {
                let Outcome::Failure(f) = &r.outcome else { panic!("valid yet no failure") };
                assert_eq!((f.file.as_str(), f.line), ("t.mc", 3));
            }
        }
    }

    #[test]
    fn guarded_division_is_likely_false() {
        let src = "void f(int d) {\nif (d == 0) {\nreturn;\n}\nint x;\nx = 1 / d;\n}";
        let w = warn(WarningKind::DivByZero, &[6]);
        let v = drive(src, &w, 11);
        assert_eq!(v.value, VerdictValue::LikelyFalsePositive);
    }

    #[test]
    fn fired_assertion_refutes_a_dead_code_claim() {
        let src = "void f(int a) {\nif (a > 0) {\nreturn;\n}\nint x;\nx = 1;\n}";
        let w = warn(WarningKind::DeadCode, &[6]);
        let v = drive(src, &w, 11);
        assert_eq!(v.value, VerdictValue::FalsePositive);
    }

    #[test]
    fn never_reached_sink_stays_inconclusive() {
        let src = "void f(int d) {\nif (0) {\nint x;\nx = 1 / d;\n}\n}";
        let w = warn(WarningKind::DivByZero, &[4]);
        let v = drive(src, &w, 11);
        assert_eq!(v.value, VerdictValue::Inconclusive);
    }

    #[test]
    fn harness_calls_the_warned_function_once() {
        let src = "void helper(void) {\nreturn;\n}\nvoid f(int d) {\nint x;\nx = 1 / d;\n}";
        let w = warn(WarningKind::DivByZero, &[6]);
        let tp = generate_harness(&unit_of(src), &w).unwrap();
        assert_eq!(tp.target, "f");
        assert_eq!(tp.entry, "__test_main");
        let calls = tp.harness.iter().filter(|t| t.lexeme == "f").count();
        assert_eq!(calls, 1);
        assert_eq!(tp.inputs, vec![("__in0".to_string(), Ty::int())]);
    }

    #[test]
    fn function_free_units_have_no_entry() {
        let w = warn(WarningKind::DivByZero, &[1]);
        let err = generate_harness(&unit_of("int x = 1 ;"), &w).unwrap_err();
        assert_eq!(err, HarnessError::NoEntry);
    }

    #[test]
    fn unbuildable_units_refuse_harnessing() {
        let w = warn(WarningKind::DivByZero, &[2]);
        let err = generate_harness(&unit_of("void f(void) {\ng();\n}"), &w).unwrap_err();
        assert!(matches!(err, HarnessError::Unbuildable(_)));
    }

    #[test]
    fn mid_expression_sink_is_a_bad_injection() {
        let src = "void f(void) {\nint x;\nx = 1 +\n2;\n}";
        let w = warn(WarningKind::DeadCode, &[4]);
        let err = generate_harness(&unit_of(src), &w).unwrap_err();
        assert!(matches!(err, HarnessError::BadInjection(_)));
    }

    #[test]
    fn injected_assertions_sit_on_the_warned_line() {
        let src = "void f(int a) {\nif (a > 0) {\nreturn;\n}\nint x;\nx = 1;\n}";
        let w = warn(WarningKind::UnreachableCall, &[6]);
        let tp = generate_harness(&unit_of(src), &w).unwrap();
        assert_eq!(tp.assertions, vec![("t.mc".to_string(), 6)]);
        let asserts = tp.tokens.iter().filter(|t| t.lexeme == "assert").count();
        assert_eq!(asserts, 1);
    }

    #[test]
    fn inputs_are_deterministic_per_seed() {
        let types = vec![("n".to_string(), Ty::int())];
        let a = gen_inputs(&types, &[], 7, 3);
        let b = gen_inputs(&types, &[], 7, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        // the fixed boundary probes lead every batch; the random tail is
        // where seeds diverge
        let long_a = gen_inputs(&types, &[], 7, 12);
        let long_c = gen_inputs(&types, &[], 8, 12);
        assert_eq!(long_a[..4], long_c[..4]);
        assert_ne!(long_a[4..], long_c[4..]);
    }

    #[test]
    fn every_batch_of_twenty_has_an_all_empty_array_vector() {
        let types = vec![
            ("a".to_string(), Ty::int().ptr_to()),
            ("b".to_string(), Ty::ch().ptr_to()),
        ];
        for seed in 0..5 {
            let vectors = gen_inputs(&types, &[], seed, 60);
            for batch in vectors.chunks(20) {
                let hit = batch.iter().any(|v| {
                    v.iter().all(|(_, val)| matches!(val, InputValue::Array(a) if a.is_empty()))
                });
                assert!(hit, "seed {seed}: a batch lacks the all-empty-array probe");
            }
        }
    }

    #[test]
    fn generated_arrays_round_trip_through_the_interpreter() {
        let types = vec![("a".to_string(), Ty::int().ptr_to())];
        let vectors = gen_inputs(&types, &[], 3, 20);
        // a random-shape vector with contents to compare cell by cell
        let (name, value) = vectors[7][0].clone();
        let InputValue::Array(items) = &value else { panic!("expected an array") };
        assert!(!items.is_empty(), "frozen seed produced an empty probe");
        let mut src = String::from("int* a;\nvoid main(void) {\n");
        for (i, item) in items.iter().enumerate() {
            let InputValue::Int(v) = item else { panic!("expected int elements") };
            src.push_str(&format!("assert(a[{i}] == {v});\n"));
        }
        src.push('}');
        let unit = crate::minic::parse_unit("rt.mc", &src).unwrap();
        let r = run_unit(&unit, "main", &[(name, value)], DEFAULT_BUDGET).unwrap();
        assert_eq!(r.outcome, Outcome::Normal);
    }

    #[test]
    fn struct_inputs_follow_their_definition() {
        let src = "struct pt { int x; int y; };\nvoid f(struct pt p) {\nassert(p.x == 0);\nassert(p.y == 0);\n}";
        let w = warn(WarningKind::DivByZero, &[3]);
        let tp = generate_harness(&unit_of(src), &w).unwrap();
        let vectors = gen_inputs(&tp.inputs, &tp.structs, 1, 1);
        let r = execute(&tp, &vectors[0], DEFAULT_BUDGET).unwrap();
        assert_eq!(r.outcome, Outcome::Normal, "all-zeros probe fills struct fields with zeros");
    }

    fn sinkless_result(kind: FailureKind, line: usize) -> RunResult {
        RunResult {
            outcome: Outcome::Failure(Failure { kind, file: "t.mc".to_string(), line }),
            trace: BTreeSet::new(),
            steps: 1,
        }
    }

    #[test]
    fn oracle_matches_kind_and_location() {
        let w = warn(WarningKind::BufferOverflow, &[2, 9]);
        let hit = sinkless_result(FailureKind::OutOfBounds, 9);
        assert_eq!(match_oracle(&hit, &w), OracleMatch::Valid);
        let wrong_line = sinkless_result(FailureKind::OutOfBounds, 8);
        assert_eq!(match_oracle(&wrong_line, &w), OracleMatch::Irrelevant);
        assert_eq!(match_oracle_with(&wrong_line, &w, 1), OracleMatch::Valid);
        let wrong_kind = sinkless_result(FailureKind::NullDeref, 9);
        assert_eq!(match_oracle(&wrong_kind, &w), OracleMatch::Irrelevant);
        let timeout = RunResult { outcome: Outcome::Timeout, trace: BTreeSet::new(), steps: 1 };
        assert_eq!(match_oracle(&timeout, &w), OracleMatch::Irrelevant);
        let mut covered = BTreeSet::new();
        covered.insert(("t.mc".to_string(), 9));
        let pass = RunResult { outcome: Outcome::Normal, trace: covered, steps: 1 };
        assert_eq!(match_oracle(&pass, &w), OracleMatch::Pass);
    }

    #[test]
    fn every_warning_kind_has_one_symptom() {
        let pairs = [
            (WarningKind::BufferOverflow, FailureKind::OutOfBounds),
            (WarningKind::NullDeref, FailureKind::NullDeref),
            (WarningKind::DivByZero, FailureKind::DivByZero),
            (WarningKind::MemoryLeak, FailureKind::Leak),
            (WarningKind::DeadCode, FailureKind::AssertFail),
            (WarningKind::UnreachableCall, FailureKind::AssertFail),
        ];
        for (w, f) in pairs {
            assert_eq!(symptom_of(w), f);
        }
    }

    #[test]
    fn more_results_never_downgrade_a_verdict() {
        // settled verdicts must survive any further evidence
        let rank = |v: VerdictValue| match v {
            VerdictValue::Inconclusive => 0,
            VerdictValue::LikelyFalsePositive => 1,
            VerdictValue::TruePositive | VerdictValue::FalsePositive => 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for kind in [WarningKind::DivByZero, WarningKind::DeadCode] {
            let w = warn(kind, &[4]);
            for _ in 0..50 {
                let mut results: Vec<(InputVector, RunResult)> = Vec::new();
                let mut prev = rank(classify(&w, Vec::new()).value);
                for _ in 0..rng.random_range(1..8usize) {
                    let r = match rng.random_range(0..4) {
                        0 => sinkless_result(symptom_of(kind), 4),
                        1 => sinkless_result(FailureKind::OutOfBounds, 9),
                        2 => {
                            let mut t = BTreeSet::new();
                            t.insert(("t.mc".to_string(), 4));
                            RunResult { outcome: Outcome::Normal, trace: t, steps: 1 }
                        }
                        _ => RunResult {
                            outcome: Outcome::Timeout,
                            trace: BTreeSet::new(),
                            steps: 1,
                        },
                    };
                    results.push((Vec::new(), r));
                    let now = rank(classify(&w, results.clone()).value);
                    assert!(now >= prev, "verdict downgraded with more evidence");
                    prev = now;
                }
            }
        }
    }

    #[test]
    fn mutation_is_deterministic_and_stays_close() {
        let types = vec![("n".to_string(), Ty::int()), ("a".to_string(), Ty::int().ptr_to())];
        let base = gen_inputs(&types, &[], 5, 4);
        let m1 = mutate_inputs(&base, 5, 6);
        let m2 = mutate_inputs(&base, 5, 6);
        assert_eq!(m1, m2);
        assert_eq!(m1.len(), 6);
        for v in &m1 {
            assert_eq!(v.len(), types.len(), "mutants keep the slot layout");
        }
        assert!(mutate_inputs(&[], 5, 6).is_empty());
    }
}
