//! `regal`: command-line front end for the chase, rewriting, surgery and
//! tournament analysis.
//!
//! Exit codes: 0 success or decided, 1 usage error, 2 budget exceeded or
//! inconclusive, 3 internal soundness-check failure.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use regal::analysis::{
    find_tournament, has_loop, is_valley_query, max_tournament, size4_sweep, valley_witness, verify_pawn,
    witnesses, AnalysisError, PawnConfig, Verdict,
};
use regal::rewrite::bdd_constant_empirical;
use regal::sample::random_instance;
use regal::{
    body_rewrite, chase, check_forward_existential, check_predicate_unique, check_quick_empirical, emit_dot,
    emit_json, encode_db, injectivize, parse_facts, parse_query, parse_rules, parse_ucq, reify, regalize, saturate,
    split_datalog, streamline, ucq_rewrite, ChaseConfig, ChaseError, Cq, Instance, RewriteBudget, RewriteStatus,
    RuleSet, SurgeryError, Term,
};

const EXIT_USAGE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_SOUNDNESS: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "regal", version, about = "Existential rules: chase, rewriting, surgery and tournament analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    cfg: RunConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Json,
    Dot,
}

#[derive(Args, Debug)]
struct RunConfig {
    #[arg(long = "rules", global = true)]
    rules_path: Option<PathBuf>,
    #[arg(long = "facts", global = true)]
    facts_path: Option<PathBuf>,
    #[arg(long = "query", global = true)]
    query_path: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 4)]
    depth: usize,
    #[arg(long = "k", global = true, default_value_t = 4)]
    k_target: usize,
    #[arg(long, global = true, default_value_t = regal::rewrite::DEFAULT_MAX_GENERATIONS)]
    generations: usize,
    #[arg(long, global = true, default_value_t = regal::chase::DEFAULT_MAX_ATOMS)]
    max_atoms: usize,
    #[arg(long, global = true, default_value_t = regal::rewrite::DEFAULT_MAX_CQS)]
    max_cqs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
    /// Seed for the randomized sample instances of `check quick` and `check bdd`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of random sample instances.
    #[arg(long, global = true, default_value_t = 20)]
    samples: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and pretty-print a rule, fact or query file.
    Parse,
    /// Oblivious chase of the facts to `--depth`.
    Chase,
    /// Breadth-first UCQ rewriting of the query.
    Rewrite,
    #[command(subcommand)]
    Surgery(SurgeryCmd),
    #[command(subcommand)]
    Check(CheckCmd),
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Regalize, chase from `{true}` and look for loops and tournaments.
    VerifyPawn,
}

#[derive(Subcommand, Debug)]
enum SurgeryCmd {
    EncodeDb,
    Reify,
    Streamline,
    BodyRewrite,
    Regalize {
        /// Also run the bounded hom-equivalence obligations.
        #[arg(long)]
        obligations: bool,
    },
}

#[derive(Subcommand, Debug)]
enum CheckCmd {
    /// Forward-existential.
    Fe,
    /// Predicate-unique.
    Pu,
    Quick,
    /// Empirical derivation-depth bound for a Boolean query.
    Bdd,
}

#[derive(Subcommand, Debug)]
enum AnalyzeCmd {
    Tournament,
    Loop,
    Valley,
    Witnesses,
}

enum Failure {
    Usage(String),
    Budget(String),
    Soundness(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Budget(_) => EXIT_BUDGET,
            Failure::Soundness(_) => EXIT_SOUNDNESS,
        }
    }
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn from_chase(e: ChaseError) -> Failure {
    match e {
        ChaseError::ResourceGuard { .. } => Failure::Budget(e.to_string()),
        ChaseError::NotBinary(_) => Failure::Usage(e.to_string()),
    }
}

fn from_surgery(e: SurgeryError) -> Failure {
    match e {
        SurgeryError::RewritingBudgetExceeded { .. } => Failure::Budget(e.to_string()),
        _ => Failure::Usage(e.to_string()),
    }
}

fn from_analysis(e: AnalysisError) -> Failure {
    if e.is_soundness_failure() {
        return Failure::Soundness(e.to_string());
    }
    match e {
        AnalysisError::Chase(c) => from_chase(c),
        AnalysisError::Surgery(s) => from_surgery(s),
        other => Failure::Usage(other.to_string()),
    }
}

type Outcome = Result<String, Failure>;

fn read(path: &Option<PathBuf>, flag: &str) -> Result<String, Failure> {
    let p = path.as_deref().ok_or_else(|| usage(format!("missing --{flag}")))?;
    read_path(p)
}

fn read_path(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))
}

impl RunConfig {
    fn validate(&self) -> Result<(), Failure> {
        for (name, v) in [
            ("generations", self.generations),
            ("max-atoms", self.max_atoms),
            ("max-cqs", self.max_cqs),
            ("k", self.k_target),
        ] {
            if v == 0 {
                return Err(usage(format!("--{name} must be positive")));
            }
        }
        Ok(())
    }

    fn rules(&self) -> Result<RuleSet, Failure> {
        parse_rules(&read(&self.rules_path, "rules")?).map_err(usage)
    }

    fn facts(&self) -> Result<Instance, Failure> {
        parse_facts(&read(&self.facts_path, "facts")?).map_err(usage)
    }

    fn facts_or_empty(&self) -> Result<Instance, Failure> {
        match self.facts_path {
            Some(_) => self.facts(),
            None => Ok(Instance::new()),
        }
    }

    fn query(&self) -> Result<Cq, Failure> {
        parse_query(&read(&self.query_path, "query")?).map_err(usage)
    }

    fn chase_cfg(&self) -> ChaseConfig {
        ChaseConfig { max_atoms: self.max_atoms }
    }

    fn budget(&self) -> RewriteBudget {
        RewriteBudget {
            max_generations: self.generations,
            max_cqs: self.max_cqs,
        }
    }

    fn random_samples(&self, rules: &RuleSet) -> Vec<Instance> {
        let preds: Vec<_> = rules.signature().into_iter().filter(|p| !p.is_top()).collect();
        if preds.is_empty() {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.samples).map(|_| random_instance(&mut rng, &preds, 3, 5)).collect()
    }

    fn json(&self, v: &impl Serialize) -> String {
        let mut s = serde_json::to_string_pretty(v).expect("report serializes");
        s.push('\n');
        s
    }
}

fn labels(ts: &[Term]) -> Vec<String> {
    ts.iter().map(Term::label).collect()
}

fn run(cli: &Cli) -> Outcome {
    let cfg = &cli.cfg;
    cfg.validate()?;
    match &cli.command {
        Command::Parse => parse(cfg),
        Command::Chase => run_chase(cfg),
        Command::Rewrite => rewrite(cfg),
        Command::Surgery(s) => surgery(cfg, s),
        Command::Check(c) => check(cfg, c),
        Command::Analyze(a) => analyze(cfg, a),
        Command::VerifyPawn => pawn(cfg),
    }
}

fn parse(cfg: &RunConfig) -> Outcome {
    let mut text = String::new();
    let mut doc = serde_json::Map::new();
    if cfg.rules_path.is_some() {
        let r = cfg.rules()?;
        doc.insert("rules".into(), json!(r.iter().map(|r| format!("[{}] {r}", r.id())).collect::<Vec<_>>()));
        text.push_str(&r.to_string());
    }
    if cfg.facts_path.is_some() {
        let i = cfg.facts()?;
        doc.insert("facts".into(), json!(i.iter().filter(|a| !a.is_top()).map(|a| a.to_string()).collect::<Vec<_>>()));
        text.push_str(&i.to_string());
    }
    if cfg.query_path.is_some() {
        let q = parse_ucq(&read(&cfg.query_path, "query")?).map_err(usage)?;
        doc.insert("queries".into(), json!(q.disjuncts().iter().map(|d| d.to_string()).collect::<Vec<_>>()));
        text.push_str(&q.to_string());
    }
    if doc.is_empty() {
        return Err(usage("parse needs --rules, --facts or --query"));
    }
    Ok(match cfg.emit {
        Emit::Json => cfg.json(&doc),
        _ => text,
    })
}

fn run_chase(cfg: &RunConfig) -> Outcome {
    let trace = chase(&cfg.facts_or_empty()?, &cfg.rules()?, cfg.depth, cfg.chase_cfg()).map_err(from_chase)?;
    match cfg.emit {
        Emit::Json => Ok(emit_json(&trace)),
        Emit::Dot => emit_dot(&trace.result()).map_err(usage),
        Emit::Text => Ok(trace.result().to_string()),
    }
}

fn rewrite(cfg: &RunConfig) -> Outcome {
    let q = cfg.query()?;
    let run = ucq_rewrite(&q, &cfg.rules()?, cfg.budget());
    let ucq = run.minimized();
    let report = json!({
        "status": run.status(),
        "generations": run.generations_run(),
        "generation_sizes": run.generation_sizes(),
        "disjuncts": run.entries().len(),
        "minimized": ucq.len(),
        "ucq": ucq.disjuncts().iter().map(|d| d.to_string()).collect::<Vec<_>>(),
    });
    let out = match cfg.emit {
        Emit::Json => cfg.json(&report),
        _ => format!("{ucq}{}", cfg.json(&report)),
    };
    match run.status() {
        RewriteStatus::Converged => Ok(out),
        RewriteStatus::BudgetExceeded => {
            print!("{out}");
            Err(Failure::Budget(format!("rewriting exceeded {} generations", cfg.generations)))
        }
    }
}

fn emit_rules(cfg: &RunConfig, rules: &RuleSet, report: serde_json::Value) -> String {
    match cfg.emit {
        Emit::Json => {
            let mut r = report;
            r["rules"] = json!(rules.to_string().lines().collect::<Vec<_>>());
            cfg.json(&r)
        }
        _ => format!("{rules}{}", cfg.json(&report)),
    }
}

fn surgery(cfg: &RunConfig, cmd: &SurgeryCmd) -> Outcome {
    match cmd {
        SurgeryCmd::EncodeDb => {
            let rule = encode_db(&cfg.facts()?).map_err(from_surgery)?;
            let out = RuleSet::new(vec![rule]);
            Ok(emit_rules(cfg, &out, json!({ "stage": "encode_db" })))
        }
        SurgeryCmd::Reify => {
            let src = cfg.rules()?;
            let out = reify(&src);
            let report = json!({ "stage": "reify", "input_rules": src.len(), "output_rules": out.len() });
            Ok(emit_rules(cfg, &out, report))
        }
        SurgeryCmd::Streamline => {
            let src = cfg.rules()?;
            let out = streamline(&src).map_err(from_surgery)?;
            let report = json!({ "stage": "streamline", "input_rules": src.len(), "output_rules": out.len() });
            Ok(emit_rules(cfg, &out, report))
        }
        SurgeryCmd::BodyRewrite => {
            let src = cfg.rules()?;
            let out = body_rewrite(&src, cfg.budget()).map_err(from_surgery)?;
            let report = json!({
                "stage": "body_rewrite",
                "input_rules": src.len(),
                "output_rules": out.rules.len(),
                "generations": out.generations,
            });
            Ok(emit_rules(cfg, &out.rules, report))
        }
        SurgeryCmd::Regalize { obligations } => {
            let (out, report) = regalize(&cfg.facts()?, &cfg.rules()?, cfg.budget()).map_err(from_surgery)?;
            let mut doc = serde_json::to_value(&report).expect("report serializes");
            if *obligations {
                let mut all = true;
                let mut results = Vec::new();
                for ob in &report.obligations {
                    let o = ob.check(cfg.chase_cfg()).map_err(from_chase)?;
                    all &= o.passed();
                    results.push(o);
                }
                doc["obligation_results"] = json!(results);
                if !all {
                    print!("{}", emit_rules(cfg, &out, doc));
                    return Err(Failure::Soundness("a surgery obligation failed".into()));
                }
            }
            Ok(emit_rules(cfg, &out, doc))
        }
    }
}

fn check(cfg: &RunConfig, cmd: &CheckCmd) -> Outcome {
    let rules = cfg.rules()?;
    let report = match cmd {
        CheckCmd::Fe => json!({ "check": "forward_existential", "holds": check_forward_existential(&rules) }),
        CheckCmd::Pu => json!({ "check": "predicate_unique", "holds": check_predicate_unique(&rules) }),
        CheckCmd::Quick => {
            let mut samples = Vec::new();
            if cfg.facts_path.is_some() {
                samples.push(cfg.facts()?);
            }
            samples.extend(cfg.random_samples(&rules));
            let v = check_quick_empirical(&rules, &samples, cfg.depth, cfg.chase_cfg()).map_err(from_chase)?;
            json!({
                "check": "quick",
                "samples": samples.len(),
                "depth": cfg.depth,
                "holds": v.is_none(),
                "violation": v,
            })
        }
        CheckCmd::Bdd => {
            let q = cfg.query()?;
            if !q.is_boolean() {
                return Err(usage("check bdd needs a Boolean query"));
            }
            let mut samples = vec![Instance::new()];
            if cfg.facts_path.is_some() {
                samples.push(cfg.facts()?);
            }
            samples.extend(cfg.random_samples(&rules));
            let k = bdd_constant_empirical(&q, &rules, &samples, cfg.depth, cfg.chase_cfg()).map_err(from_chase)?;
            let report = json!({ "check": "bdd", "samples": samples.len(), "depth": cfg.depth, "bound": k });
            if k.is_none() {
                print!("{}", cfg.json(&report));
                return Err(Failure::Budget(format!("no derivation-depth bound below {}", cfg.depth)));
            }
            report
        }
    };
    Ok(cfg.json(&report))
}

fn analyze(cfg: &RunConfig, cmd: &AnalyzeCmd) -> Outcome {
    if let AnalyzeCmd::Valley = cmd {
        let q = parse_ucq(&read(&cfg.query_path, "query")?).map_err(usage)?;
        let per: Vec<_> = q
            .disjuncts()
            .iter()
            .map(|d| json!({ "query": d.to_string(), "valley": is_valley_query(d) }))
            .collect();
        return Ok(cfg.json(&json!({ "disjuncts": per })));
    }
    let rules = cfg.rules()?;
    let facts = cfg.facts_or_empty()?;
    match cmd {
        AnalyzeCmd::Tournament => {
            let sat = chase(&facts, &rules, cfg.depth, cfg.chase_cfg()).map_err(from_chase)?.result();
            let best = max_tournament(&sat, cfg.k_target);
            let k = find_tournament(&sat, cfg.k_target);
            Ok(cfg.json(&json!({
                "depth": cfg.depth,
                "k": cfg.k_target,
                "largest": labels(best.vertices()),
                "found_k": k.map(|t| labels(t.vertices())),
            })))
        }
        AnalyzeCmd::Loop => {
            let (dl, ex) = split_datalog(&rules);
            let prefix = chase(&facts, &ex, cfg.depth, cfg.chase_cfg()).map_err(from_chase)?;
            let sat = saturate(&prefix.result(), &dl, cfg.chase_cfg()).map_err(from_chase)?.result();
            let lp = has_loop(&sat);
            let q_inj = edge_rewriting(cfg, &rules)?;
            let hits = size4_sweep(&q_inj, &prefix.result()).map_err(from_analysis)?;
            for h in &hits {
                let u = h.case.loop_term();
                if !sat.contains(&regal::Atom::new(regal::analysis::edge_predicate(), vec![u.clone(), u.clone()])) {
                    return Err(Failure::Soundness(format!("size-4 case derived E({u},{u}) which is not entailed")));
                }
            }
            Ok(cfg.json(&json!({
                "depth": cfg.depth,
                "loop": lp.map(|t| t.label()),
                "size4": hits,
            })))
        }
        AnalyzeCmd::Witnesses => {
            let (dl, ex) = split_datalog(&rules);
            let prefix = chase(&facts, &ex, cfg.depth, cfg.chase_cfg()).map_err(from_chase)?;
            let atoms = prefix.result();
            let sat = saturate(&atoms, &dl, cfg.chase_cfg()).map_err(from_chase)?.result();
            let q_inj = edge_rewriting(cfg, &rules)?;
            let mut edges = Vec::new();
            for a in sat.iter().filter(|a| a.pred() == &regal::analysis::edge_predicate()) {
                let (s, t) = (&a.args()[0], &a.args()[1]);
                let ws = witnesses(s, t, &q_inj, &atoms);
                let run = valley_witness(s, t, &q_inj, &prefix).map_err(from_analysis)?;
                edges.push(json!({
                    "edge": a.to_string(),
                    "witnesses": ws.iter().map(|w| json!({
                        "disjunct": w.disjunct,
                        "valley": is_valley_query(&w.query),
                        "image": w.image_terms().iter().map(Term::label).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                    "valley_witness": run.witness.disjunct,
                    "peak_steps": run.steps,
                    "chain_bound": run.chain_bound.to_string(),
                }));
            }
            Ok(cfg.json(&json!({
                "depth": cfg.depth,
                "q_inj": q_inj.disjuncts().iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                "edges": edges,
            })))
        }
        AnalyzeCmd::Valley => unreachable!("handled above"),
    }
}

fn edge_rewriting(cfg: &RunConfig, rules: &RuleSet) -> Result<regal::Ucq, Failure> {
    let edge = parse_query("?(x,y) <- E(x,y) .").expect("edge query parses");
    let run = ucq_rewrite(&edge, rules, cfg.budget());
    if !run.converged() {
        return Err(Failure::Budget("rewriting of E(x,y) exceeded the budget".into()));
    }
    Ok(injectivize(&run.minimized()))
}

fn pawn(cfg: &RunConfig) -> Outcome {
    let pc = PawnConfig {
        depth: cfg.depth,
        k_target: cfg.k_target,
        budget: cfg.budget(),
        chase: cfg.chase_cfg(),
    };
    let report = verify_pawn(&cfg.facts()?, &cfg.rules()?, pc).map_err(from_analysis)?;
    let out = cfg.json(&report);
    if let Verdict::Inconclusive(why) = &report.verdict {
        print!("{out}");
        return Err(Failure::Budget(format!("inconclusive: {why}")));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Budget(m) | Failure::Soundness(m) => m,
            };
            eprintln!("regal: {msg}");
            ExitCode::from(f.code())
        }
    }
}
