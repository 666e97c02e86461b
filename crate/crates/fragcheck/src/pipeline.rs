//! Batch driver: load a project and its warnings, then patch, resolve,
//! verify, run, and classify each warning, emitting diffable reports.
//!
//! Warnings are independent, so the batch runs them in parallel and merges
//! results by warning id. Every per-warning failure is recorded in its
//! record and the batch continues; only configuration and IO problems abort
//! a command. Machine reports carry no timestamps or absolute paths, so a
//! rerun with the same config and seed writes identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deps::{resolve_dependencies, DefDb};
use crate::fragment::{fragment_from_warning, Warning, WarningKind, WarningSet};
use crate::grammar::{load_grammar, Grammar, Program, SourceLoc, Token};
use crate::interp::RunResult;
use crate::minic::{minic_grammar, tokenize, unit_from_tokens};
use crate::patch::{brute_force_patch, check_patch, lca_patch, BruteMode, PatchCheck};
use crate::runner::{
    classify_with, execute, gen_inputs, generate_harness, match_oracle_with, InputVector,
    OracleMatch, VerdictValue, DEFAULT_BUDGET, DEFAULT_INPUTS,
};
use crate::semantics::{verify_semantics, SemVerdict, SemanticsReport};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("warnings: {0}")]
    Warnings(String),
    #[error("grammar: {0}")]
    Grammar(String),
}

/// Everything a batch command needs. Paths are checked by [`RunConfig::validate`];
/// numeric knobs must be at least one where a zero would be meaningless.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// grammar file; the built-in MiniC grammar when absent
    pub grammar: Option<PathBuf>,
    /// project manifest listing the source files
    pub manifest: PathBuf,
    /// warnings file
    pub warnings: PathBuf,
    /// input vectors tried per warning
    pub inputs: usize,
    pub seed: u64,
    /// loop unroll bound for the control-flow check
    pub bound: usize,
    /// token budget for the brute-force minimality audit; 0 disables it
    pub oracle_bound: usize,
    /// interpreter step budget per run
    pub budget: u64,
    /// oracle line slack when matching failures to warned lines
    pub line_tolerance: u32,
    /// worker threads; 0 leaves the pool default
    pub workers: usize,
    pub outdir: PathBuf,
}

impl RunConfig {
    pub fn new(manifest: PathBuf, warnings: PathBuf, outdir: PathBuf) -> RunConfig {
        RunConfig {
            grammar: None,
            manifest,
            warnings,
            inputs: DEFAULT_INPUTS,
            seed: 0,
            bound: 2,
            oracle_bound: 0,
            budget: DEFAULT_BUDGET,
            line_tolerance: 0,
            workers: 0,
            outdir,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let need = |p: &Path, what: &str| {
            if p.exists() {
                Ok(())
            } else {
                Err(PipelineError::Config(format!("{what} {} does not exist", p.display())))
            }
        };
        need(&self.manifest, "manifest")?;
        need(&self.warnings, "warnings file")?;
        if let Some(g) = &self.grammar {
            need(g, "grammar file")?;
        }
        if self.inputs < 1 {
            return Err(PipelineError::Config("inputs must be at least 1".into()));
        }
        if self.bound < 1 {
            return Err(PipelineError::Config("bound must be at least 1".into()));
        }
        if self.budget < 1 {
            return Err(PipelineError::Config("budget must be at least 1".into()));
        }
        Ok(())
    }

    fn load_grammar(&self) -> Result<Grammar, PipelineError> {
        match &self.grammar {
            None => Ok(minic_grammar().clone()),
            Some(path) => {
                let text = fs::read_to_string(path)?;
                load_grammar(&text).map_err(|e| PipelineError::Grammar(e.to_string()))
            }
        }
    }
}

/// `{"version": 1, "files": [...]}`, paths relative to the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub files: Vec<String>,
}

/// The loaded project: one token program per listed file, in listing order.
#[derive(Debug, Clone)]
pub struct Project {
    pub programs: Vec<Program>,
    /// files skipped because they do not lex
    pub skipped: Vec<String>,
}

/// Reads the manifest and tokenizes every listed file. A file that fails to
/// lex is skipped with a note; definition indexing tolerates the rest.
pub fn load_project(manifest_path: &Path, minic: bool) -> Result<Project, PipelineError> {
    let text = fs::read_to_string(manifest_path)?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| PipelineError::Manifest(e.to_string()))?;
    if m.version != 1 {
        return Err(PipelineError::Manifest(format!("unsupported version {}", m.version)));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut programs = Vec::new();
    let mut skipped = Vec::new();
    for file in &m.files {
        let src = fs::read_to_string(base.join(file))?;
        if minic {
            match tokenize(file, &src) {
                Ok(tokens) => programs.push(Program::new(file, tokens)),
                Err(e) => skipped.push(format!("{file}: {e}")),
            }
        } else {
            programs.push(plain_program(file, &src));
        }
    }
    Ok(Project { programs, skipped })
}

// whitespace-separated lexemes with line/column provenance, for projects
// driven by an external grammar
fn plain_program(file: &str, src: &str) -> Program {
    let mut tokens = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let ln = (i + 1) as u32;
        let mut col = 0u32;
        let mut word = String::new();
        for (j, c) in line.chars().chain(std::iter::once(' ')).enumerate() {
            if c.is_whitespace() {
                if !word.is_empty() {
                    let pos = tokens.len();
                    tokens.push(Token::new(&word, pos, SourceLoc::new(file, ln, col + 1)));
                    word.clear();
                }
            } else {
                if word.is_empty() {
                    col = j as u32;
                }
                word.push(c);
            }
        }
    }
    Program::new(file, tokens)
}

pub fn load_warnings(path: &Path) -> Result<Vec<Warning>, PipelineError> {
    let text = fs::read_to_string(path)?;
    let set = WarningSet::from_json(&text).map_err(|e| PipelineError::Warnings(e.to_string()))?;
    if set.version != 1 {
        return Err(PipelineError::Warnings(format!("unsupported version {}", set.version)));
    }
    Ok(set.warnings)
}

/// Pipeline stages, in order; a record lists the ones skipped after a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Fragment,
    Patch,
    Resolve,
    Semantics,
    Harness,
    Execute,
}

impl Stage {
    const ALL: [Stage; 6] = [
        Stage::Fragment,
        Stage::Patch,
        Stage::Resolve,
        Stage::Semantics,
        Stage::Harness,
        Stage::Execute,
    ];

    fn after(self) -> Vec<Stage> {
        Stage::ALL.iter().copied().filter(|s| *s > self).collect()
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Fragment => "fragment",
            Stage::Patch => "patch",
            Stage::Resolve => "resolve",
            Stage::Semantics => "semantics",
            Stage::Harness => "harness",
            Stage::Execute => "execute",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

/// One warning's trip through the pipeline. Fields stay `null` until their
/// stage runs; a failed stage records its error and the stages it skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningRecord {
    pub id: String,
    pub kind: WarningKind,
    pub file: String,
    pub sink_line: u32,
    pub patch_tokens: Option<usize>,
    pub patch_added: Option<usize>,
    pub patch_minimal: Option<bool>,
    pub buildable: Option<bool>,
    pub input_count: Option<usize>,
    pub semantics: Option<SemVerdict>,
    pub tests_run: Option<usize>,
    pub tests_valid: Option<usize>,
    pub tests_pass: Option<usize>,
    pub verdict: Option<VerdictValue>,
    pub error: Option<StageError>,
    pub skipped: Vec<Stage>,
}

impl WarningRecord {
    fn new(w: &Warning) -> WarningRecord {
        let sink = w.sink();
        WarningRecord {
            id: w.id.clone(),
            kind: w.kind,
            file: sink.map(|s| s.file.clone()).unwrap_or_default(),
            sink_line: sink.map_or(0, |s| s.line),
            patch_tokens: None,
            patch_added: None,
            patch_minimal: None,
            buildable: None,
            input_count: None,
            semantics: None,
            tests_run: None,
            tests_valid: None,
            tests_pass: None,
            verdict: None,
            error: None,
            skipped: Vec::new(),
        }
    }

    fn fail(&mut self, stage: Stage, message: impl ToString) {
        self.error = Some(StageError { stage, message: message.to_string() });
        self.skipped = stage.after();
    }
}

/// Sums of the per-warning records; always recomputed from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub warnings: usize,
    /// fragments that patched into a parseable program
    pub parsed: usize,
    /// units that resolved, type-checked, and took a harness
    pub compiled: usize,
    /// programs that executed at least one input
    pub executable: usize,
    pub true_positive: usize,
    pub false_positive: usize,
    pub likely_false_positive: usize,
    pub inconclusive: usize,
}

pub fn aggregate(records: &[WarningRecord]) -> Aggregates {
    let mut a = Aggregates { warnings: records.len(), ..Aggregates::default() };
    for r in records {
        a.parsed += usize::from(r.patch_tokens.is_some());
        a.compiled += usize::from(r.buildable == Some(true));
        a.executable += usize::from(r.tests_run.is_some_and(|n| n > 0));
        match r.verdict {
            Some(VerdictValue::TruePositive) => a.true_positive += 1,
            Some(VerdictValue::FalsePositive) => a.false_positive += 1,
            Some(VerdictValue::LikelyFalsePositive) => a.likely_false_positive += 1,
            Some(VerdictValue::Inconclusive) => a.inconclusive += 1,
            None => {}
        }
    }
    a
}

/// The machine report `validate` writes: stable field order, no timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub version: u32,
    pub seed: u64,
    pub inputs_per_warning: usize,
    pub bound: usize,
    pub aggregates: Aggregates,
    pub records: Vec<WarningRecord>,
}

impl BatchReport {
    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.error.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub input: InputVector,
    pub matched: OracleMatch,
    pub result: RunResult,
}

/// Per-warning evidence log written next to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceFile {
    pub version: u32,
    pub id: String,
    pub verdict: VerdictValue,
    pub evidence: Vec<EvidenceEntry>,
}

/// Everything needed to reproduce a warning's runs exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFile {
    pub version: u32,
    pub id: String,
    /// the seed derived for this warning from the batch seed and its id
    pub seed: u64,
    pub inputs: Vec<InputVector>,
}

// deterministic per-warning seed: batch seed folded with an FNV-1a of the id
fn warning_seed(seed: u64, id: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h ^ seed
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn in_pool<T: Send>(workers: usize, run: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool builds")
            .install(run)
    }
}

fn find_program<'a>(programs: &'a [Program], w: &Warning) -> Result<&'a Program, String> {
    let Some(step) = w.path.first() else {
        return Err("warning has no path".to_string());
    };
    programs
        .iter()
        .find(|p| p.file == step.file)
        .ok_or_else(|| format!("no source file {} in the project", step.file))
}

/// Record of one `patch` run for one warning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub id: String,
    pub tokens: Option<usize>,
    pub added: Option<usize>,
    pub minimal: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchBatch {
    pub version: u32,
    pub records: Vec<PatchRecord>,
}

impl PatchBatch {
    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.error.is_some())
    }
}

// the machine form of one patch: lexemes plus provenance bookkeeping
#[derive(Serialize)]
struct PatchFile<'a> {
    version: u32,
    id: &'a str,
    lexemes: Vec<&'a str>,
    origin: &'a [Option<usize>],
    added: &'a [usize],
    minimal: bool,
    lca_log: &'a [crate::patch::LcaRelation],
}

/// Patches every warning and writes `<id>.patched.txt` (the token text) and
/// `<id>.patch.json` (origins, additions, and the LCA log) per warning,
/// plus `patch.json` summarizing the batch.
pub fn cmd_patch(cfg: &RunConfig) -> Result<PatchBatch, PipelineError> {
    cfg.validate()?;
    let g = cfg.load_grammar()?;
    let project = load_project(&cfg.manifest, cfg.grammar.is_none())?;
    let warnings = load_warnings(&cfg.warnings)?;
    fs::create_dir_all(&cfg.outdir)?;

    let mut outputs = in_pool(cfg.workers, || {
        warnings
            .par_iter()
            .map(|w| {
                let mut rec = PatchRecord {
                    id: w.id.clone(),
                    tokens: None,
                    added: None,
                    minimal: None,
                    error: None,
                };
                let result = find_program(&project.programs, w)
                    .and_then(|p| fragment_from_warning(p, w).map_err(|e| e.to_string()))
                    .and_then(|f| lca_patch(&g, &f).map_err(|e| e.to_string()));
                match result {
                    Ok(pr) => {
                        rec.tokens = Some(pr.patched.len());
                        rec.added = Some(pr.added.len());
                        rec.minimal = Some(pr.minimal);
                        (rec, Some(pr))
                    }
                    Err(e) => {
                        rec.error = Some(e);
                        (rec, None)
                    }
                }
            })
            .collect::<Vec<_>>()
    });
    outputs.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let mut records = Vec::new();
    for (rec, pr) in outputs {
        if let Some(pr) = &pr {
            let lexemes: Vec<&str> = pr.patched.iter().map(|t| t.lexeme.as_str()).collect();
            let mut text = lexemes.join(" ");
            text.push('\n');
            fs::write(cfg.outdir.join(format!("{}.patched.txt", rec.id)), text)?;
            let file = PatchFile {
                version: 1,
                id: &rec.id,
                lexemes,
                origin: &pr.origin,
                added: &pr.added,
                minimal: pr.minimal,
                lca_log: &pr.lca_log,
            };
            fs::write(cfg.outdir.join(format!("{}.patch.json", rec.id)), to_json(&file))?;
        }
        records.push(rec);
    }
    let batch = PatchBatch { version: 1, records };
    fs::write(cfg.outdir.join("patch.json"), to_json(&batch))?;
    Ok(batch)
}

/// Record of one `verify` run for one warning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRecord {
    pub id: String,
    /// Definition-level patch conditions, when the patch succeeded
    pub conditions: Option<PatchCheck>,
    pub semantics: Option<SemVerdict>,
    pub pairs_checked: Option<usize>,
    pub paths_checked: Option<usize>,
    /// set when the brute-force audit ran: true iff no shorter patch exists
    pub minimal_audited: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyBatch {
    pub version: u32,
    pub bound: usize,
    pub records: Vec<VerifyRecord>,
}

impl VerifyBatch {
    pub fn has_failures(&self) -> bool {
        self.records
            .iter()
            .any(|r| r.error.is_some() || r.semantics == Some(SemVerdict::Violated))
    }
}

/// Checks every warning's patch: the four definition-level conditions, the
/// control-flow order and path check at the unroll bound, and optionally a
/// brute-force minimality audit on small instances. Writes
/// `<id>.semantics.json` per verified warning and `verify.json` overall.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyBatch, PipelineError> {
    cfg.validate()?;
    let g = cfg.load_grammar()?;
    let project = load_project(&cfg.manifest, cfg.grammar.is_none())?;
    let warnings = load_warnings(&cfg.warnings)?;
    fs::create_dir_all(&cfg.outdir)?;

    let mut outputs = in_pool(cfg.workers, || {
        warnings
            .par_iter()
            .map(|w| verify_warning(w, &project.programs, &g, cfg))
            .collect::<Vec<_>>()
    });
    outputs.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let mut records = Vec::new();
    for (rec, report) in outputs {
        if let Some(report) = &report {
            let path = cfg.outdir.join(format!("{}.semantics.json", rec.id));
            fs::write(path, to_json(report))?;
        }
        records.push(rec);
    }
    let batch = VerifyBatch { version: 1, bound: cfg.bound, records };
    fs::write(cfg.outdir.join("verify.json"), to_json(&batch))?;
    Ok(batch)
}

fn verify_warning(
    w: &Warning,
    programs: &[Program],
    g: &Grammar,
    cfg: &RunConfig,
) -> (VerifyRecord, Option<SemanticsReport>) {
    let mut rec = VerifyRecord {
        id: w.id.clone(),
        conditions: None,
        semantics: None,
        pairs_checked: None,
        paths_checked: None,
        minimal_audited: None,
        error: None,
    };
    let fragment = match find_program(programs, w)
        .and_then(|p| fragment_from_warning(p, w).map_err(|e| e.to_string()))
    {
        Ok(f) => f,
        Err(e) => {
            rec.error = Some(e);
            return (rec, None);
        }
    };
    let pr = match lca_patch(g, &fragment) {
        Ok(pr) => pr,
        Err(e) => {
            rec.error = Some(e.to_string());
            return (rec, None);
        }
    };
    match check_patch(g, &fragment, &pr.patched) {
        Ok(check) => rec.conditions = Some(check),
        Err(e) => {
            rec.error = Some(e.to_string());
            return (rec, None);
        }
    }
    // the audit is exhaustive search, so it only runs when both the program
    // and the bound keep it small
    if cfg.oracle_bound > 0
        && pr.patched.len() <= cfg.oracle_bound
        && fragment.program.tokens.len() <= 2 * cfg.oracle_bound
    {
        match brute_force_patch(g, &fragment, BruteMode::Lca, pr.patched.len()) {
            Ok(best) => rec.minimal_audited = Some(best.len() == pr.patched.len()),
            Err(_) => rec.minimal_audited = Some(false),
        }
    }
    let file = &fragment.program.file;
    let semantics = unit_from_tokens(file, &fragment.program.tokens)
        .and_then(|p_unit| {
            let sp_unit = unit_from_tokens(file, &pr.patched)?;
            Ok((p_unit, sp_unit))
        })
        .map_err(|e| e.to_string())
        .and_then(|(p_unit, sp_unit)| {
            verify_semantics(&p_unit, &fragment, &sp_unit, cfg.bound).map_err(|e| e.to_string())
        });
    match semantics {
        Ok(report) => {
            rec.semantics = Some(report.verdict);
            rec.pairs_checked = Some(report.pairs_checked);
            rec.paths_checked = Some(report.paths_checked);
            (rec, Some(report))
        }
        Err(e) => {
            rec.error = Some(e);
            (rec, None)
        }
    }
}

struct Artifacts {
    evidence: Option<EvidenceFile>,
    replay: Option<ReplayFile>,
}

/// Runs the whole pipeline over every warning and writes `report.json`, the
/// derived human table as `report.txt`, and per-warning `evidence/<id>.json`
/// and `replay/<id>.json`. Per-warning failures are recorded, never fatal.
pub fn cmd_validate(cfg: &RunConfig) -> Result<BatchReport, PipelineError> {
    cfg.validate()?;
    let g = cfg.load_grammar()?;
    let project = load_project(&cfg.manifest, cfg.grammar.is_none())?;
    let warnings = load_warnings(&cfg.warnings)?;
    fs::create_dir_all(cfg.outdir.join("evidence"))?;
    fs::create_dir_all(cfg.outdir.join("replay"))?;
    let db = crate::deps::index_definitions(&project.programs);

    let mut outputs = in_pool(cfg.workers, || {
        warnings
            .par_iter()
            .map(|w| process_warning(w, &project.programs, &g, &db, cfg))
            .collect::<Vec<_>>()
    });
    outputs.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let mut records = Vec::new();
    for (rec, art) in outputs {
        if let Some(e) = &art.evidence {
            fs::write(cfg.outdir.join("evidence").join(format!("{}.json", rec.id)), to_json(e))?;
        }
        if let Some(r) = &art.replay {
            fs::write(cfg.outdir.join("replay").join(format!("{}.json", rec.id)), to_json(r))?;
        }
        records.push(rec);
    }
    let aggregates = aggregate(&records);
    let report = BatchReport {
        version: 1,
        seed: cfg.seed,
        inputs_per_warning: cfg.inputs,
        bound: cfg.bound,
        aggregates,
        records,
    };
    fs::write(cfg.outdir.join("report.json"), to_json(&report))?;
    fs::write(cfg.outdir.join("report.txt"), render_table(&report))?;
    Ok(report)
}

fn process_warning(
    w: &Warning,
    programs: &[Program],
    g: &Grammar,
    db: &DefDb,
    cfg: &RunConfig,
) -> (WarningRecord, Artifacts) {
    let mut rec = WarningRecord::new(w);
    let mut art = Artifacts { evidence: None, replay: None };

    let program = match find_program(programs, w) {
        Ok(p) => p,
        Err(e) => {
            rec.fail(Stage::Fragment, e);
            return (rec, art);
        }
    };
    let fragment = match fragment_from_warning(program, w) {
        Ok(f) => f,
        Err(e) => {
            rec.fail(Stage::Fragment, e);
            return (rec, art);
        }
    };

    let pr = match lca_patch(g, &fragment) {
        Ok(pr) => pr,
        Err(e) => {
            rec.fail(Stage::Patch, e);
            return (rec, art);
        }
    };
    rec.patch_tokens = Some(pr.patched.len());
    rec.patch_added = Some(pr.added.len());
    rec.patch_minimal = Some(pr.minimal);

    let unit = resolve_dependencies(&Program::new(&program.file, pr.patched.clone()), db);

    let semantics = unit_from_tokens(&program.file, &program.tokens)
        .and_then(|p_unit| Ok((p_unit, unit_from_tokens(&program.file, &pr.patched)?)))
        .map_err(|e| e.to_string())
        .and_then(|(p_unit, sp_unit)| {
            verify_semantics(&p_unit, &fragment, &sp_unit, cfg.bound).map_err(|e| e.to_string())
        });
    match semantics {
        Ok(report) => rec.semantics = Some(report.verdict),
        Err(e) => {
            rec.fail(Stage::Semantics, e);
            return (rec, art);
        }
    }

    let tp = match generate_harness(&unit, w) {
        Ok(tp) => tp,
        Err(e) => {
            rec.buildable = Some(false);
            // nothing ran, so testing proves nothing either way
            rec.verdict = Some(VerdictValue::Inconclusive);
            rec.fail(Stage::Harness, e);
            return (rec, art);
        }
    };
    rec.buildable = Some(true);
    rec.input_count = Some(tp.inputs.len());

    let seed = warning_seed(cfg.seed, &w.id);
    let vectors = gen_inputs(&tp.inputs, &tp.structs, seed, cfg.inputs);
    art.replay = Some(ReplayFile { version: 1, id: w.id.clone(), seed, inputs: vectors.clone() });

    let mut results: Vec<(InputVector, RunResult)> = Vec::new();
    for v in vectors {
        match execute(&tp, &v, cfg.budget) {
            Ok(r) => results.push((v, r)),
            Err(bug) => {
                rec.fail(Stage::Execute, bug);
                break;
            }
        }
    }
    rec.tests_run = Some(results.len());
    let mut valid = 0usize;
    let mut pass = 0usize;
    for (_, r) in &results {
        match match_oracle_with(r, w, cfg.line_tolerance) {
            OracleMatch::Valid => valid += 1,
            OracleMatch::Pass => pass += 1,
            OracleMatch::Irrelevant => {}
        }
    }
    rec.tests_valid = Some(valid);
    rec.tests_pass = Some(pass);

    let verdict = classify_with(w, results, cfg.line_tolerance);
    rec.verdict = Some(verdict.value);
    art.evidence = Some(EvidenceFile {
        version: 1,
        id: w.id.clone(),
        verdict: verdict.value,
        evidence: verdict
            .evidence
            .into_iter()
            .map(|(input, result)| EvidenceEntry {
                matched: match_oracle_with(&result, w, cfg.line_tolerance),
                input,
                result,
            })
            .collect(),
    });
    (rec, art)
}

/// The human-readable table, derived from the machine report.
pub fn render_table(report: &BatchReport) -> String {
    let mut out = String::new();
    let dash = || "-".to_string();
    out.push_str(&format!(
        "{:<16} {:<17} {:>9} {:>6} {:>10} {:>9} {:<22}\n",
        "id", "kind", "patch", "build", "semantics", "v/p/n", "verdict"
    ));
    for r in &report.records {
        let patch = match (r.patch_tokens, r.patch_added) {
            (Some(t), Some(a)) => format!("{t}+{a}"),
            _ => dash(),
        };
        let build = match r.buildable {
            Some(true) => "yes".to_string(),
            Some(false) => "no".to_string(),
            None => dash(),
        };
        let sem = r.semantics.map_or_else(&dash, |v| v.to_string());
        let tests = match (r.tests_valid, r.tests_pass, r.tests_run) {
            (Some(v), Some(p), Some(n)) => format!("{v}/{p}/{n}"),
            _ => dash(),
        };
        let verdict = r.verdict.map_or_else(&dash, |v| v.to_string());
        out.push_str(&format!(
            "{:<16} {:<17} {:>9} {:>6} {:>10} {:>9} {:<22}\n",
            r.id,
            r.kind.to_string(),
            patch,
            build,
            sem,
            tests,
            verdict
        ));
        if let Some(e) = &r.error {
            out.push_str(&format!("    [{}] {}\n", e.stage, e.message));
        }
    }
    let a = &report.aggregates;
    out.push_str(&format!(
        "\n{} warnings: {} parsed, {} compiled, {} executable; {} tp, {} fp, {} likely-fp, {} inconclusive\n",
        a.warnings,
        a.parsed,
        a.compiled,
        a.executable,
        a.true_positive,
        a.false_positive,
        a.likely_false_positive,
        a.inconclusive
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::{PathStep, WarningSet};
    use std::fs;

    fn write_project(dir: &Path, files: &[(&str, &str)], warnings: &[Warning]) -> RunConfig {
        for (name, src) in files {
            fs::write(dir.join(name), src).unwrap();
        }
        let manifest = Manifest {
            version: 1,
            files: files.iter().map(|(n, _)| n.to_string()).collect(),
        };
        fs::write(dir.join("manifest.json"), to_json(&manifest)).unwrap();
        let set = WarningSet { version: 1, warnings: warnings.to_vec() };
        fs::write(dir.join("warnings.json"), set.to_json()).unwrap();
        RunConfig::new(
            dir.join("manifest.json"),
            dir.join("warnings.json"),
            dir.join("out"),
        )
    }

    fn warn(id: &str, kind: WarningKind, file: &str, lines: &[u32]) -> Warning {
        Warning {
            id: id.to_string(),
            kind,
            message: String::new(),
            path: lines.iter().map(|&l| PathStep { file: file.to_string(), line: l }).collect(),
        }
    }

    const DIV_SRC: &str = "void f(int d) {\nint x;\nx = 1 / d;\n}\n";

    #[test]
    fn validate_runs_the_corpus_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let guarded = "void g(int d) {\nif (d == 0) {\nreturn;\n}\nint y;\ny = 10 / d;\n}\n";
        let dead = "void h(int a) {\nif (a > 0) {\nreturn;\n}\nint z;\nz = 1;\n}\n";
        let cfg = write_project(
            dir.path(),
            &[("div.mc", DIV_SRC), ("guard.mc", guarded), ("dead.mc", dead)],
            &[
                warn("w-div", WarningKind::DivByZero, "div.mc", &[3]),
                warn("w-guard", WarningKind::DivByZero, "guard.mc", &[2, 6]),
                warn("w-dead", WarningKind::DeadCode, "dead.mc", &[6]),
            ],
        );
        let report = cmd_validate(&cfg).unwrap();
        assert!(!report.has_failures());
        let by_id = |id: &str| report.records.iter().find(|r| r.id == id).unwrap();
        assert_eq!(by_id("w-div").verdict, Some(VerdictValue::TruePositive));
        assert_eq!(by_id("w-guard").verdict, Some(VerdictValue::LikelyFalsePositive));
        assert_eq!(by_id("w-dead").verdict, Some(VerdictValue::FalsePositive));
        for r in &report.records {
            assert_eq!(r.semantics, Some(SemVerdict::Preserved));
        }
        assert_eq!(report.aggregates, aggregate(&report.records));
        assert_eq!(report.aggregates.executable, 3);
        for id in ["w-div", "w-guard", "w-dead"] {
            assert!(cfg.outdir.join("evidence").join(format!("{id}.json")).exists());
            assert!(cfg.outdir.join("replay").join(format!("{id}.json")).exists());
        }
        let table = fs::read_to_string(cfg.outdir.join("report.txt")).unwrap();
        assert!(table.contains("true-positive"));
    }

    #[test]
    fn reruns_write_identical_reports() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = write_project(
            dir.path(),
            &[("div.mc", DIV_SRC)],
            &[warn("w-div", WarningKind::DivByZero, "div.mc", &[3])],
        );
        cfg.seed = 42;
        cmd_validate(&cfg).unwrap();
        let first = fs::read(cfg.outdir.join("report.json")).unwrap();
        let first_ev = fs::read(cfg.outdir.join("evidence/w-div.json")).unwrap();
        let mut again = cfg.clone();
        again.outdir = dir.path().join("out2");
        again.workers = 2;
        cmd_validate(&again).unwrap();
        assert_eq!(first, fs::read(again.outdir.join("report.json")).unwrap());
        assert_eq!(first_ev, fs::read(again.outdir.join("evidence/w-div.json")).unwrap());
    }

    #[test]
    fn unresolved_locations_do_not_stop_the_batch() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_project(
            dir.path(),
            &[("div.mc", DIV_SRC)],
            &[
                warn("w-bad", WarningKind::DivByZero, "div.mc", &[99]),
                warn("w-div", WarningKind::DivByZero, "div.mc", &[3]),
            ],
        );
        let report = cmd_validate(&cfg).unwrap();
        assert!(report.has_failures());
        let bad = report.records.iter().find(|r| r.id == "w-bad").unwrap();
        assert_eq!(bad.error.as_ref().unwrap().stage, Stage::Fragment);
        assert_eq!(
            bad.skipped,
            vec![Stage::Patch, Stage::Resolve, Stage::Semantics, Stage::Harness, Stage::Execute]
        );
        assert_eq!(bad.verdict, None);
        let good = report.records.iter().find(|r| r.id == "w-div").unwrap();
        assert_eq!(good.verdict, Some(VerdictValue::TruePositive));
    }

    #[test]
    fn unbuildable_warnings_end_inconclusive() {
        let dir = tempfile::tempdir().unwrap();
        let src = "void f(void) {\nmissing();\n}\n";
        let cfg = write_project(
            dir.path(),
            &[("m.mc", src)],
            &[warn("w-m", WarningKind::NullDeref, "m.mc", &[2])],
        );
        let report = cmd_validate(&cfg).unwrap();
        let r = &report.records[0];
        assert_eq!(r.buildable, Some(false));
        assert_eq!(r.verdict, Some(VerdictValue::Inconclusive));
        assert_eq!(r.skipped, vec![Stage::Execute]);
        assert_eq!(report.aggregates.executable, 0);
        assert_eq!(report.aggregates.inconclusive, 1);
    }

    #[test]
    fn empty_warning_sets_succeed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_project(dir.path(), &[("div.mc", DIV_SRC)], &[]);
        let report = cmd_validate(&cfg).unwrap();
        assert!(!report.has_failures());
        assert_eq!(report.aggregates.warnings, 0);
        let patch = cmd_patch(&cfg).unwrap();
        assert!(!patch.has_failures());
        assert!(patch.records.is_empty());
    }

    #[test]
    fn patch_writes_token_text_and_log() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_project(
            dir.path(),
            &[("div.mc", DIV_SRC)],
            &[
                warn("w-div", WarningKind::DivByZero, "div.mc", &[3]),
                warn("w-bad", WarningKind::DivByZero, "div.mc", &[99]),
            ],
        );
        let batch = cmd_patch(&cfg).unwrap();
        assert!(batch.has_failures(), "the unresolved warning is recorded");
        let ok = batch.records.iter().find(|r| r.id == "w-div").unwrap();
        assert!(ok.error.is_none());
        let text = fs::read_to_string(cfg.outdir.join("w-div.patched.txt")).unwrap();
        assert!(text.contains("x = 1 / d ;"));
        assert!(cfg.outdir.join("w-div.patch.json").exists());
        assert!(!cfg.outdir.join("w-bad.patched.txt").exists());
        let bad = batch.records.iter().find(|r| r.id == "w-bad").unwrap();
        assert!(bad.error.is_some());
    }

    #[test]
    fn verify_reports_preserved_patches() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = write_project(
            dir.path(),
            &[("div.mc", DIV_SRC)],
            &[warn("w-div", WarningKind::DivByZero, "div.mc", &[3])],
        );
        cfg.oracle_bound = 40;
        let batch = cmd_verify(&cfg).unwrap();
        assert!(!batch.has_failures());
        let r = &batch.records[0];
        assert_eq!(r.semantics, Some(SemVerdict::Preserved));
        let c = r.conditions.as_ref().unwrap();
        assert!(c.fragment_embeds && c.parses && c.embeds_in_program && c.relations_preserved);
        assert_eq!(r.minimal_audited, Some(true));
        assert!(cfg.outdir.join("w-div.semantics.json").exists());
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = write_project(dir.path(), &[("div.mc", DIV_SRC)], &[]);
        cfg.inputs = 0;
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        cfg.inputs = 1;
        cfg.manifest = dir.path().join("absent.json");
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn warning_seeds_differ_by_id_and_stay_stable() {
        assert_eq!(warning_seed(7, "w-1"), warning_seed(7, "w-1"));
        assert_ne!(warning_seed(7, "w-1"), warning_seed(7, "w-2"));
        assert_ne!(warning_seed(7, "w-1"), warning_seed(8, "w-1"));
    }

    #[test]
    fn plain_programs_carry_line_and_column() {
        let p = plain_program("g.txt", "a bb\n  c\n");
        let lex: Vec<&str> = p.tokens.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lex, ["a", "bb", "c"]);
        assert_eq!(p.tokens[1].loc.line, 1);
        assert_eq!(p.tokens[1].loc.col, 3);
        assert_eq!(p.tokens[2].loc.line, 2);
        assert_eq!(p.tokens[2].loc.col, 3);
    }

    #[test]
    fn aggregates_always_reconcile() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_project(
            dir.path(),
            &[("div.mc", DIV_SRC), ("m.mc", "void f(void) {\nmissing();\n}\n")],
            &[
                warn("a", WarningKind::DivByZero, "div.mc", &[3]),
                warn("b", WarningKind::NullDeref, "m.mc", &[2]),
                warn("c", WarningKind::DivByZero, "nowhere.mc", &[1]),
            ],
        );
        let report = cmd_validate(&cfg).unwrap();
        assert_eq!(report.aggregates, aggregate(&report.records));
        let verdicts = report.aggregates.true_positive
            + report.aggregates.false_positive
            + report.aggregates.likely_false_positive
            + report.aggregates.inconclusive;
        let with_verdict = report.records.iter().filter(|r| r.verdict.is_some()).count();
        assert_eq!(verdicts, with_verdict);
    }
}
