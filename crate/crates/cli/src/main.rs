//! `skipref`: check skipping simulation and skipping refinement between
//! finite transition systems.
//!
//! Exit codes: 0 holds / ok, 1 fails / violation, 2 usage error, 3 invalid
//! input, 4 unknown beyond the skip bound or certificate bound exhausted.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use skipref::engine::{certificate_for, largest_sks_traced, MaxSkip, SimOptions};
use skipref::matching::{find_match, Lasso, MatchOutcome};
use skipref::models::des::DesParams;
use skipref::models::memc::{parse_requests, MemParams};
use skipref::models::stk::{parse_program, StkParams};
use skipref::models::{gen_model_capped, gen_pair, refinement_map_of, FaultKind, Model, ModelKind, ModelParams};
use skipref::refine::{check_skipping_refinement_with, explain_counterexample, RefineOptions, Status};
use skipref::selftest;
use skipref::tv::{tv_validate, vectorize, PcMap, Program, TvOptions};
use skipref::union::{disjoint_union, RefinementMap};
use skipref::wfsk::{check_rwfsk, check_wfsk, rwfsk_as_wfsk, CertVerdict, CertificateFile, ViolationKind};
use skipref::{Exec, Lts, Relation, StateId};

const OK: u8 = 0;
const FAILS: u8 = 1;
const INVALID: u8 = 3;
const UNKNOWN: u8 = 4;

#[derive(Parser)]
#[command(name = "skipref", version, about = "Skipping simulation and refinement checker")]
struct Cli {
    /// Print machine-readable JSON on standard output.
    #[arg(long, global = true)]
    json: bool,

    /// Largest state space a generator may build.
    #[arg(long, global = true, env = "SKIPREF_STATE_CAP", default_value_t = skipref::models::DEFAULT_STATE_CAP)]
    state_cap: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operations on transition system files.
    #[command(subcommand)]
    Lts(LtsCommand),
    /// Check a rank certificate for a relation.
    CheckCert(CheckCertArgs),
    /// Skipping simulation computations.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Decide skipping refinement between two systems.
    CheckRefine(CheckRefineArgs),
    /// Fullpath matching queries.
    #[command(subcommand)]
    Match(MatchCommand),
    /// Case-study model generation.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Vectorization and translation validation.
    #[command(subcommand)]
    Tv(TvCommand),
    /// Cross-check the engine, the certificate checkers and fullpath
    /// matching on random systems.
    Selftest(SelftestArgs),
}

#[derive(Subcommand)]
enum LtsCommand {
    /// Check that a file describes a well-formed system.
    Validate {
        #[arg(long)]
        lts: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CertMode {
    Wfsk,
    Rwfsk,
}

#[derive(Args)]
struct CheckCertArgs {
    #[arg(long)]
    lts: PathBuf,
    #[arg(long)]
    relation: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    #[arg(long, value_enum)]
    mode: CertMode,
    /// Skip bound for full mode; overrides the one in the certificate.
    #[arg(long)]
    skip_bound: Option<usize>,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Compute the largest skipping simulation.
    Compute {
        #[arg(long)]
        lts: PathBuf,
        /// Longest skip considered: a positive integer or `inf`.
        #[arg(long, default_value = "inf")]
        max_skip: MaxSkip,
        /// Write a reduced certificate for the result here.
        #[arg(long)]
        emit_cert: Option<PathBuf>,
        /// Write the relation here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CheckRefineArgs {
    #[arg(long)]
    concrete: PathBuf,
    #[arg(long = "abstract")]
    abstract_: PathBuf,
    /// Refinement map; rebuilt from model metadata when omitted.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value = "inf")]
    max_skip: MaxSkip,
    /// Require every concrete state, not only reachable ones, to refine.
    #[arg(long)]
    all_states: bool,
    /// Write the verdict JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the disjoint union the check runs on here.
    #[arg(long)]
    union_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MatchCommand {
    /// Decide whether a lasso-shaped fullpath is matched from a state.
    Lasso {
        #[arg(long)]
        lts: PathBuf,
        #[arg(long)]
        relation: PathBuf,
        #[arg(long)]
        lasso: PathBuf,
        #[arg(long)]
        from: usize,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Generate a model file.
    Gen(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    /// des_abs, des_opt, stk, bstk, memc or optmemc.
    kind: ModelKind,
    /// Parameters as JSON, or `@file`.
    #[arg(long)]
    params: Option<String>,
    /// DES events, `id@time,...`.
    #[arg(long)]
    events: Option<String>,
    #[arg(long)]
    time_bound: Option<u32>,
    /// Stack program, `push 1; pop; top`.
    #[arg(long)]
    imem: Option<String>,
    #[arg(long, default_value_t = 3)]
    stack_cap: usize,
    #[arg(long, default_value_t = 1)]
    ibuf_cap: usize,
    /// Memory requests, `write 0 1; read 0`.
    #[arg(long)]
    reqs: Option<String>,
    #[arg(long, default_value_t = 2)]
    addrs: usize,
    #[arg(long, default_value_t = 2)]
    values: u8,
    #[arg(long, default_value_t = 1)]
    rbuf_cap: usize,
    #[arg(long)]
    fault: Option<FaultKind>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the specification model (implementation kinds only).
    #[arg(long)]
    abstract_out: Option<PathBuf>,
    /// Also write the refinement map (implementation kinds only).
    #[arg(long)]
    map_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TvCommand {
    /// Pack adjacent independent instructions.
    Vectorize {
        #[arg(long)]
        src: PathBuf,
        /// Write the target program here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pcmap_out: Option<PathBuf>,
    },
    /// Validate a target program against its source.
    Validate {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        /// Defaults to the prefix sums of the target's instruction widths.
        #[arg(long)]
        pcmap: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        bits: u32,
        #[arg(long, default_value = "2")]
        max_skip: MaxSkip,
    },
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    count: usize,
}

/// A failure to produce a verdict at all.
struct Invalid(String);

impl<E: std::fmt::Display> From<E> for Invalid {
    fn from(e: E) -> Self {
        Invalid(e.to_string())
    }
}

type Run = Result<u8, Invalid>;

fn read(path: &Path) -> Result<String, Invalid> {
    fs::read_to_string(path).map_err(|e| Invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Invalid> {
    fs::write(path, text).map_err(|e| Invalid(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

/// Accepts plain system files and model files alike.
fn read_lts(path: &Path) -> Result<(Lts, Option<skipref::models::ModelMeta>), Invalid> {
    Model::read(&read(path)?).map_err(|e| Invalid(format!("{}: {e}", path.display())))
}

fn read_program(path: &Path) -> Result<Program, Invalid> {
    let text = read(path)?;
    let t = text.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(serde_json::from_str(t)?)
    } else {
        Ok(Program::parse(&text)?)
    }
}

struct Out {
    json: bool,
}

impl Out {
    /// Prints `value` in JSON mode, `human` otherwise.
    fn emit(&self, value: Value, human: impl FnOnce() -> String) {
        if self.json {
            println!("{}", pretty(&value));
        } else {
            println!("{}", human());
        }
    }
}

fn lts_validate(out: &Out, path: &Path) -> Run {
    let (lts, meta) = read_lts(path)?;
    let labels: std::collections::BTreeSet<_> = lts.labels().iter().collect();
    let value = json!({
        "valid": true,
        "states": lts.num_states(),
        "transitions": lts.num_transitions(),
        "labels": labels.len(),
        "initial": lts.initial().len(),
        "model": meta.map(|m| m.kind.name()),
    });
    out.emit(value, || {
        format!(
            "valid: {} states, {} transitions, {} distinct labels, {} initial",
            lts.num_states(),
            lts.num_transitions(),
            labels.len(),
            lts.initial().len()
        )
    });
    Ok(OK)
}

fn check_cert(out: &Out, a: &CheckCertArgs) -> Run {
    let (lts, _) = read_lts(&a.lts)?;
    let rel = Relation::from_json(&read(&a.relation)?, lts.num_states())?;
    let file = CertificateFile::from_json(&read(&a.cert)?)?;
    let verdict = match a.mode {
        CertMode::Rwfsk => check_rwfsk(&lts, &rel, &file.to_rwfsk())?,
        CertMode::Wfsk => {
            let k = a
                .skip_bound
                .or(file.skip_bound)
                .ok_or_else(|| Invalid("full certificates need a skip bound (--skip-bound)".into()))?;
            // A file without left ranks is a reduced certificate; read it as
            // a full one with every left rank 0.
            let cert = if file.rankl.is_empty() && file.rankl_default.is_none() {
                rwfsk_as_wfsk(&file.to_rwfsk(), k)?
            } else {
                CertificateFile { skip_bound: Some(k), ..file }.to_wfsk()?
            };
            check_wfsk(&lts, &rel, &cert)?
        }
    };
    match verdict {
        CertVerdict::Accepted(stats) => {
            let value = json!({
                "accepted": true,
                "pairs": stats.pairs,
                "steps": stats.steps,
                "cases": stats.cases,
                "max_skip_witness": stats.max_skip_witness(),
            });
            out.emit(value, || {
                format!(
                    "accepted: {} pairs, {} steps (cases a {}, b {}, c {}, d {}), longest skip witness {}",
                    stats.pairs,
                    stats.steps,
                    stats.cases.a,
                    stats.cases.b,
                    stats.cases.c,
                    stats.cases.d,
                    stats.max_skip_witness()
                )
            });
            Ok(OK)
        }
        CertVerdict::Rejected(v) => {
            out.emit(json!({ "accepted": false, "violation": v }), || format!("rejected: {v}"));
            Ok(if v.kind == ViolationKind::BoundExhausted { UNKNOWN } else { FAILS })
        }
    }
}

fn sim_compute(out: &Out, lts: &Path, max_skip: MaxSkip, emit_cert: Option<&Path>, dest: Option<&Path>) -> Run {
    let (lts, _) = read_lts(lts)?;
    let sim = largest_sks_traced(&lts, &SimOptions { max_skip, exec: Exec::default() });
    if let Some(p) = emit_cert {
        let cert = certificate_for(&lts, &sim.relation)?;
        write(p, &CertificateFile::from_rwfsk(&cert, None).to_json())?;
    }
    let relation = sim.relation.to_json();
    match dest {
        Some(p) => {
            write(p, &relation)?;
            let value = json!({ "pairs": sim.relation.len(), "rounds": sim.rounds, "max_skip": max_skip.to_string() });
            out.emit(value, || {
                format!("{} related pairs after {} rounds (max skip {max_skip})", sim.relation.len(), sim.rounds)
            });
        }
        None => println!("{relation}"),
    }
    Ok(OK)
}

fn check_refine(out: &Out, a: &CheckRefineArgs) -> Run {
    let (c, cmeta) = read_lts(&a.concrete)?;
    let (abs, ameta) = read_lts(&a.abstract_)?;
    let map = match (&a.map, &cmeta, &ameta) {
        (Some(p), _, _) => RefinementMap::from_json(&read(p)?)?,
        (None, Some(cm), Some(am)) => refinement_map_of(cm, am)?,
        _ => return Err(Invalid("--map is required unless both files are generated models".into())),
    };
    let mut opts = RefineOptions::new(SimOptions { max_skip: a.max_skip, exec: Exec::default() });
    if a.all_states {
        opts = opts.all_states();
    }
    let verdict = check_skipping_refinement_with(&c, &abs, &map, &opts)?;
    if let Some(p) = &a.union_out {
        write(p, &disjoint_union(&c, &abs, &map)?.lts.to_json())?;
    }
    if let Some(p) = &a.out {
        write(p, &verdict.to_json())?;
    }
    out.emit(verdict.to_json_value(), || match verdict.status {
        Status::Holds => format!(
            "holds (max skip {}, longest skip used {})",
            verdict.max_skip,
            verdict.max_skip_witness.unwrap_or(0)
        ),
        _ => explain_counterexample(&verdict).unwrap_or_default().trim_end().to_string(),
    });
    Ok(match verdict.status {
        Status::Holds => OK,
        Status::Fails => FAILS,
        Status::UnknownBeyondBound => UNKNOWN,
    })
}

fn match_lasso(out: &Out, lts: &Path, relation: &Path, lasso: &Path, from: usize) -> Run {
    let (lts, _) = read_lts(lts)?;
    let rel = Relation::from_json(&read(relation)?, lts.num_states())?;
    let sigma = Lasso::from_json(&read(lasso)?)?;
    match find_match(&rel, &sigma, StateId(from), &lts)? {
        MatchOutcome::Matched(w) => {
            out.emit(json!({ "matched": true, "witness": w }), || {
                format!("matched: delta stem {:?}, loop {:?}", ids(&w.delta.stem), ids(&w.delta.cycle))
            });
            Ok(OK)
        }
        MatchOutcome::NoMatch(n) => {
            out.emit(json!({ "matched": false, "frontier": n.frontier }), || {
                format!("no match: {} product nodes explored", n.frontier.len())
            });
            Ok(FAILS)
        }
    }
}

fn ids(v: &[StateId]) -> Vec<usize> {
    v.iter().map(|s| s.0).collect()
}

fn model_params(a: &GenArgs) -> Result<ModelParams, Invalid> {
    if let Some(p) = &a.params {
        let text = match p.strip_prefix('@') {
            Some(path) => read(Path::new(path))?,
            None => p.clone(),
        };
        return Ok(ModelParams::from_json(a.kind, serde_json::from_str(&text)?)?);
    }
    let missing = |flag: &str| Invalid(format!("{} needs --{flag} or --params", a.kind));
    Ok(match a.kind {
        ModelKind::DesAbs | ModelKind::DesOpt => {
            let events = DesParams::parse_events(a.events.as_deref().ok_or_else(|| missing("events"))?)?;
            let bound = a.time_bound.ok_or_else(|| missing("time-bound"))?;
            ModelParams::Des(DesParams::simple(&events, bound))
        }
        ModelKind::Stk | ModelKind::Bstk => {
            let imem = parse_program(a.imem.as_deref().ok_or_else(|| missing("imem"))?)?;
            ModelParams::Stk(StkParams::new(imem, a.stack_cap, a.ibuf_cap))
        }
        ModelKind::Memc | ModelKind::Optmemc => {
            let reqs = parse_requests(a.reqs.as_deref().ok_or_else(|| missing("reqs"))?)?;
            ModelParams::Mem(MemParams::new(reqs, a.addrs, a.values, a.rbuf_cap))
        }
    })
}

fn model_gen(out: &Out, a: &GenArgs, cap: usize) -> Run {
    let params = model_params(a)?;
    let wants_pair = a.abstract_out.is_some() || a.map_out.is_some();
    let (model, spec, map) = if wants_pair {
        let pair = gen_pair(a.kind, &params, a.fault, cap)?;
        (pair.concrete, Some(pair.abstract_), Some(pair.map))
    } else {
        (gen_model_capped(a.kind, &params, a.fault, cap)?, None, None)
    };
    write(&a.out, &model.to_json())?;
    if let (Some(p), Some(spec)) = (&a.abstract_out, &spec) {
        write(p, &spec.to_json())?;
    }
    if let (Some(p), Some(map)) = (&a.map_out, &map) {
        write(p, &map.to_json())?;
    }
    let value = json!({
        "kind": a.kind.name(),
        "fault": a.fault.map(FaultKind::name),
        "states": model.lts.num_states(),
        "abstract_states": spec.as_ref().map(|s| s.lts.num_states()),
    });
    out.emit(value, || {
        let extra = spec.as_ref().map(|s| format!(", specification {} states", s.lts.num_states())).unwrap_or_default();
        format!("{}: {} states{extra}", a.kind, model.lts.num_states())
    });
    Ok(OK)
}

fn tv_vectorize(out: &Out, src: &Path, dest: Option<&Path>, pcmap_out: Option<&Path>) -> Run {
    let src = read_program(src)?;
    let (tgt, map) = vectorize(&src);
    if let Some(p) = pcmap_out {
        write(p, &serde_json::to_string(&map)?)?;
    }
    match dest {
        Some(p) => {
            write(p, &tgt.to_string())?;
            out.emit(json!({ "instructions": tgt.len(), "packed": tgt.packed_count(), "pcmap": map }), || {
                format!("{} instructions, {} packed", tgt.len(), tgt.packed_count())
            });
        }
        None => out.emit(json!({ "program": tgt, "pcmap": map }), || tgt.to_string().trim_end().to_string()),
    }
    Ok(OK)
}

fn tv_check(out: &Out, src: &Path, tgt: &Path, pcmap: Option<&Path>, bits: u32, max_skip: MaxSkip, cap: usize) -> Run {
    let src = read_program(src)?;
    let tgt = read_program(tgt)?;
    let map = match pcmap {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => PcMap::prefix_sums(&tgt),
    };
    let opts = TvOptions { domain_bits: bits, max_skip, state_cap: cap, exec: Exec::default() };
    let report = tv_validate(&src, &tgt, &map, &opts)?;
    let mut value = report.verdict.to_json_value();
    value["structural_problems"] = json!(report.structural_problems);
    value["max_skip_realized"] = json!(report.max_skip_realized);
    out.emit(value, || {
        let mut lines = vec![match report.verdict.status {
            Status::Holds => format!("refinement holds (longest skip {})", report.max_skip_realized.unwrap_or(0)),
            _ => explain_counterexample(&report.verdict).unwrap_or_default().trim_end().to_string(),
        }];
        lines.extend(report.structural_problems.iter().map(|p| format!("structural: {p}")));
        lines.join("\n")
    });
    Ok(if report.holds() {
        OK
    } else if report.verdict.status == Status::UnknownBeyondBound {
        UNKNOWN
    } else {
        FAILS
    })
}

fn run_selftest(out: &Out, a: &SelftestArgs) -> Run {
    let report = selftest::run(a.seed, a.count, Exec::default())?;
    out.emit(serde_json::to_value(&report)?, || {
        let mut lines = vec![
            format!("seed {}, {} systems", report.seed, report.systems),
            format!("reduced certificates accepted: {}/{}", report.certified, report.systems),
            format!("full certificates accepted: {}/{}", report.converted, report.systems),
            format!("soundness ({} lasso checks): {}/{}", report.lassos_checked, report.sound, report.systems),
            format!("completeness ({} excluded pairs): {}/{}", report.excluded_pairs, report.complete, report.systems),
        ];
        lines.extend(report.failures.iter().map(|f| format!("system {} failed: {f:?}", f.index)));
        lines.join("\n")
    });
    Ok(if report.passed() { OK } else { FAILS })
}

fn dispatch(cli: &Cli) -> Run {
    let out = Out { json: cli.json };
    match &cli.command {
        Command::Lts(LtsCommand::Validate { lts }) => lts_validate(&out, lts),
        Command::CheckCert(a) => check_cert(&out, a),
        Command::Sim(SimCommand::Compute { lts, max_skip, emit_cert, out: dest }) => {
            sim_compute(&out, lts, *max_skip, emit_cert.as_deref(), dest.as_deref())
        }
        Command::CheckRefine(a) => check_refine(&out, a),
        Command::Match(MatchCommand::Lasso { lts, relation, lasso, from }) => {
            match_lasso(&out, lts, relation, lasso, *from)
        }
        Command::Model(ModelCommand::Gen(a)) => model_gen(&out, a, cli.state_cap),
        Command::Tv(TvCommand::Vectorize { src, out: dest, pcmap_out }) => {
            tv_vectorize(&out, src, dest.as_deref(), pcmap_out.as_deref())
        }
        Command::Tv(TvCommand::Validate { src, tgt, pcmap, bits, max_skip }) => {
            tv_check(&out, src, tgt, pcmap.as_deref(), *bits, *max_skip, cli.state_cap)
        }
        Command::Selftest(a) => run_selftest(&out, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(INVALID)
        }
    }
}
