mod config;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{ConfigError, OracleMode, ScenarioConfig};
use rulesynth::analysis::{AnalysisError, AnalysisReport, SearchMode};
use rulesynth::fol::Ontology;
use rulesynth::kb::{load_store, save_store, Goal, GoalStatus, TheoryStore};
use rulesynth::oracle::{
    Backend, DeterministicOracleSpec, LlmBackend, Oracle, OracleError, RecordingBackend,
    ReplayBackend, SpecBackend, Transcript,
};
use rulesynth::pipeline::{
    analyze_goal, synthesize, verify_rules, PipelineError, RuleOutcome, Selection, Synthesis,
};
use rulesynth::verification::{GroundingConfig, Verdict};

#[derive(Parser)]
#[command(name = "rulesynth", version, about = "Synthesize, analyze and verify traffic rules")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration file.
    #[arg(long, global = true, default_value = "scenario.json")]
    config: PathBuf,
    /// Overrides the oracle mode of the config.
    #[arg(long, global = true, value_enum)]
    oracle: Option<OracleMode>,
    /// Records every oracle answer into this transcript file.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
    /// Enumerates every subset instead of the pruned search.
    #[arg(long, global = true)]
    brute_force: bool,
    /// Fails with exit code 5 when the necessary and sufficient families are not dual.
    #[arg(long, global = true)]
    strict_monotone: bool,
    /// Constants per sort used for grounding.
    #[arg(long, global = true)]
    domain_size: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, consolidate and translate causes for the goal.
    Synthesize,
    /// Compute individual necessity and minimal necessary/sufficient sets.
    Analyze,
    /// Verify cause rules and commit the accepted ones.
    Verify {
        /// Rule ids to verify; defaults to every rule of the goal.
        rules: Vec<String>,
        /// Verify every cause rule not yet in the verified theory.
        #[arg(long, conflicts_with = "rules")]
        all_unverified: bool,
    },
    /// Synthesize, analyze and verify in one go.
    RunAll,
}

enum Failure {
    Config(String),
    Oracle(String),
    Translation(String),
    Duality(String),
    Rejected(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Oracle(_) => 3,
            Failure::Translation(_) => 4,
            Failure::Duality(_) => 5,
            Failure::Rejected(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m)
            | Failure::Oracle(m)
            | Failure::Translation(m)
            | Failure::Duality(m)
            | Failure::Rejected(m)
            | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Untranslatable { .. } => Failure::Translation(e.to_string()),
            e => Failure::Oracle(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Oracle(e) | PipelineError::Analysis(AnalysisError::Oracle(e)) => e.into(),
            e => Failure::Config(e.to_string()),
        }
    }
}

struct Context {
    config: ScenarioConfig,
    onto: Ontology,
    store: TheoryStore,
    oracle: Oracle,
    recorder: Option<Arc<RecordingBackend<Box<dyn Backend>>>>,
    record_path: Option<PathBuf>,
    grounding: GroundingConfig,
    mode: SearchMode,
    strict_monotone: bool,
    out: PathBuf,
}

impl Context {
    fn store_path(&self) -> PathBuf {
        self.out.join("store.json")
    }

    fn goal(&self) -> Goal {
        Goal {
            id: self.config.goal.id.clone(),
            text: self.config.goal.text.clone(),
            status: GoalStatus::Draft,
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Failure> {
        let path = self.out.join(name);
        std::fs::write(&path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
    }

    fn write_json(&self, name: &str, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        self.write(name, &text)
    }

    fn save_store(&self) -> Result<(), Failure> {
        save_store(&self.store, &self.store_path()).map_err(|e| Failure::Io(e.to_string()))
    }

    fn save_transcript(&self) -> Result<(), Failure> {
        if let (Some(rec), Some(path)) = (&self.recorder, &self.record_path) {
            rec.transcript()
                .save(path)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn backend(config: &ScenarioConfig) -> Result<Box<dyn Backend>, Failure> {
    let o = &config.oracle;
    Ok(match o.mode {
        OracleMode::Det => {
            let path = o.spec.as_ref().expect("checked with the config paths");
            let spec = DeterministicOracleSpec::load(path).map_err(Failure::Config)?;
            Box::new(SpecBackend::new(spec))
        }
        OracleMode::Replay => {
            let path = o.transcript.as_ref().expect("checked with the config paths");
            let t = Transcript::load(path).map_err(|e| Failure::Config(e.to_string()))?;
            Box::new(ReplayBackend::new(t))
        }
        OracleMode::Llm => {
            let llm = o.llm.clone().expect("checked with the config paths");
            Box::new(LlmBackend::new(llm)?)
        }
    })
}

fn context(common: &Common) -> Result<Context, Failure> {
    let mut config = ScenarioConfig::load(&common.config)?;
    if let Some(mode) = common.oracle {
        config.oracle.mode = mode;
    }
    if let Some(n) = common.domain_size {
        if n == 0 {
            return Err(Failure::Config("--domain-size must be positive".into()));
        }
        config.grounding.domain_size = n;
    }
    config.check_paths()?;
    let onto = Ontology::load(&config.ontology).map_err(|e| Failure::Config(e.to_string()))?;
    let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", out.display())))?;

    // Work on the copy in the output directory once it exists so the
    // scenario's own store stays untouched.
    let working = out.join("store.json");
    let store_path = if working.exists() { &working } else { &config.store };
    let store = load_store(store_path).map_err(|e| Failure::Config(e.to_string()))?;
    store
        .check_schema(&onto)
        .map_err(|e| Failure::Config(format!("{}: {e}", store_path.display())))?;

    let backend = backend(&config)?;
    let (oracle, recorder) = match &common.record {
        Some(_) => {
            let rec = Arc::new(RecordingBackend::new(backend));
            (Oracle::new(Arc::clone(&rec)), Some(rec))
        }
        None => (Oracle::new(backend), None),
    };
    let grounding = GroundingConfig::for_ontology(&onto, config.grounding.domain_size)
        .with_mode(config.grounding.comparison_mode);
    Ok(Context {
        onto,
        store,
        oracle,
        recorder,
        record_path: common.record.clone(),
        grounding,
        mode: if common.brute_force { SearchMode::BruteForce } else { SearchMode::Pruned },
        strict_monotone: common.strict_monotone,
        out,
        config,
    })
}

fn synthesis_json(s: &Synthesis) -> Value {
    json!({
        "raw_causes": s.raw_causes,
        "partition": s.partition,
        "causes": s.causes.iter().map(|c| json!({
            "id": c.id,
            "text": c.text,
            "merged_from": c.merged_from,
            "rule_id": c.rule.as_ref().map(|r| r.id.clone()),
            "rule": c.rule.as_ref().map(|r| r.to_string()),
            "explanation": c.rule_explanation,
        })).collect::<Vec<_>>(),
    })
}

fn run_synthesize(ctx: &mut Context) -> Result<(), Failure> {
    let goal = ctx.goal();
    let (store, syn) = synthesize(&ctx.store, &goal, &ctx.oracle, &ctx.onto, ctx.config.count_hint)?;
    ctx.store = store;
    let text = summary::synthesis(&goal.id, &goal.text, &syn);
    ctx.write_json(&format!("synthesis-{}.json", goal.id), &synthesis_json(&syn))?;
    ctx.write(&format!("synthesis-{}.txt", goal.id), &text)?;
    ctx.save_store()?;
    print!("{text}");
    Ok(())
}

fn run_analyze(ctx: &mut Context) -> Result<AnalysisReport, Failure> {
    let goal_id = ctx.config.goal.id.clone();
    let (store, report) = analyze_goal(&ctx.store, &goal_id, &ctx.oracle, ctx.mode)?;
    ctx.store = store;
    let text = summary::analysis(&ctx.store, &report);
    ctx.write_json(
        &format!("analysis-{goal_id}.json"),
        &serde_json::to_value(&report).expect("report serializes"),
    )?;
    ctx.write(&format!("analysis-{goal_id}.txt"), &text)?;
    ctx.save_store()?;
    print!("{text}");
    if ctx.strict_monotone && report.duality_mismatch {
        return Err(Failure::Duality(format!(
            "goal {goal_id}: minimal necessary sets are not the transversals of the minimal sufficient sets"
        )));
    }
    Ok(report)
}

fn outcome_json(o: &RuleOutcome) -> Value {
    json!({
        "rule_id": o.report.rule_id,
        "cause_id": o.cause_id,
        "goal_id": o.goal_id,
        "report_id": o.report_id,
        "verdict": o.verdict(),
        "committed": o.commit.is_some(),
        "report": o.report,
    })
}

fn run_verify(ctx: &mut Context, selection: Selection) -> Result<(), Failure> {
    let (store, outcomes) = verify_rules(&ctx.store, &selection, &ctx.grounding, &ctx.onto)?;
    ctx.store = store;
    let text = summary::verification(&outcomes);
    let goal_id = &ctx.config.goal.id;
    ctx.write_json(
        &format!("verification-{goal_id}.json"),
        &Value::Array(outcomes.iter().map(outcome_json).collect()),
    )?;
    ctx.write(&format!("verification-{goal_id}.txt"), &text)?;
    ctx.save_store()?;
    print!("{text}");
    let rejected: Vec<&str> = outcomes
        .iter()
        .filter(|o| matches!(o.verdict(), Verdict::Inconsistent | Verdict::Unsafe))
        .map(|o| o.report.rule_id.as_str())
        .collect();
    if rejected.is_empty() {
        Ok(())
    } else {
        Err(Failure::Rejected(format!("rejected rules: {}", rejected.join(", "))))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut ctx = context(&cli.common)?;
    let result = match &cli.command {
        Command::Synthesize => run_synthesize(&mut ctx),
        Command::Analyze => run_analyze(&mut ctx).map(drop),
        Command::Verify {
            rules,
            all_unverified,
        } => {
            let selection = if *all_unverified {
                Selection::Unverified
            } else if rules.is_empty() {
                Selection::All {
                    goal_id: Some(ctx.config.goal.id.clone()),
                }
            } else {
                Selection::Rules(rules.clone())
            };
            run_verify(&mut ctx, selection)
        }
        Command::RunAll => run_synthesize(&mut ctx)
            .and_then(|()| run_analyze(&mut ctx))
            .and_then(|_| {
                let goal_id = Some(ctx.config.goal.id.clone());
                run_verify(&mut ctx, Selection::All { goal_id })
            }),
    };
    // The transcript is kept even when a later stage fails.
    ctx.save_transcript()?;
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
