//! fragcheck turns static-analysis warnings into small runnable test programs.
//!
//! The pipeline: take the warning's path through the original program, cut the
//! tokens on that path out as a fragment, patch the fragment back into a
//! syntactically valid program that keeps every pairwise ancestor relation the
//! original had, resolve the functions and inputs it needs, then run it under a
//! checking interpreter against generated inputs and classify the warning as a
//! true positive, a false positive, or likely one of the two.

pub mod deps;
pub mod derivation;
pub mod fragment;
pub mod grammar;
pub mod interp;
pub mod minic;
pub mod patch;
pub mod pipeline;
pub mod runner;
pub mod semantics;

pub use deps::{
    find_input_vars, index_definitions, resolve_dependencies, CompilableUnit, DefDb, DefEntry,
    DefKind,
};
pub use fragment::{fragment_from_warning, is_subsequence, Fragment, Warning, WarningKind};
pub use grammar::{load_grammar, Grammar, GrammarError, Program, SourceLoc, Token};
pub use interp::{run_unit, Failure, FailureKind, InputValue, InterpreterBug, Outcome, RunResult};
pub use minic::{minic_grammar, parse_unit, tokenize, MinicError, Unit};
pub use patch::{brute_force_patch, check_patch, lca_patch, BruteMode, LcaRelation, PatchResult};
pub use pipeline::{
    aggregate, cmd_patch, cmd_validate, cmd_verify, load_project, load_warnings, render_table,
    Aggregates, BatchReport, Manifest, PipelineError, Project, RunConfig, Stage, StageError,
    WarningRecord,
};
pub use runner::{
    classify, classify_with, execute, gen_inputs, generate_harness, match_oracle,
    match_oracle_with, mutate_inputs, HarnessError, InputVector, OracleMatch, TestProgram,
    Verdict, VerdictValue,
};
pub use semantics::{
    build_cfg, enumerate_paths, partial_order, verify_semantics, verify_semantics_with, Cfg,
    Order, SemVerdict, SemanticsError, SemanticsReport, VerifyOptions,
};
