use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;

use guinav::explorer::{
    build_graph, cluster_states, enrich_path, explore as run_explore, extract_paths,
    ChatEnricher, ChatEquivalence, EnrichOptions, EnvConfig, Exploration, FsmEnvironment,
    IdentityEquivalence, SemanticEnricher, StateEquivalence, TemplateEnricher, TitleEquivalence,
    DEFAULT_MAX_DEPTH, DEFAULT_MAX_PATHS,
};
use guinav::mllm::{ChatJudge, RuleJudge, TaskCompletionJudge};
use guinav::parallel::bounded_map;
use guinav::taskgen::{
    generate_instructions, load_taxonomy, run_taskgen, ChatGenerator, ChatPolicy,
    InstructionGenerator, PolicyClient, RolloutOptions, TemplateGenerator, WalkPolicy,
    DEFAULT_RETRIES,
};
use guinav::trajectory::save_trajectories;

use crate::config::GlobalConfig;
use crate::{http_client, to_json, usage, write_out, Status};

#[derive(Debug, Args)]
pub struct ExploreArgs {
    /// Environment config (YAML state machine)
    #[arg(long)]
    pub env: PathBuf,
    /// Exploration record (states and triples) as JSON
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the transition graph as JSON
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Maximum number of actions to execute
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
}

pub fn explore(a: &ExploreArgs) -> anyhow::Result<Status> {
    let mut env = FsmEnvironment::load(&a.env)?;
    if a.budget == 0 {
        return Err(usage("--budget must be >= 1"));
    }
    let x = run_explore(&mut env, a.budget)?;
    log::info!(
        "{}: {} states, {} triples, {} actions, {} replays",
        env.name(),
        x.states.len(),
        x.triples.len(),
        x.actions_executed,
        x.replays
    );
    if x.budget_exhausted {
        log::warn!("budget exhausted before the environment was fully explored");
    }
    write_out(Some(&a.out), &to_json(&x))?;
    if let Some(p) = &a.graph {
        let g = build_graph(&x.states, &x.triples, &x.start)?;
        write_out(Some(p), &to_json(&g))?;
    }
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClusterChoice {
    /// Keep every distinct state
    Identity,
    /// Merge states sharing a title
    Title,
    /// Ask the chat model whether two screens are the same page
    Chat,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Exploration record written by `explore`
    #[arg(long)]
    pub exploration: PathBuf,
    /// Synthesized trajectories as JSONL
    #[arg(long)]
    pub out: PathBuf,
    /// Synthesis summary as JSON (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// State clustering (default: chat online, identity offline)
    #[arg(long, value_enum)]
    pub cluster: Option<ClusterChoice>,
    /// Longest path, in actions
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    /// Stop after this many paths
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    pub max_paths: usize,
    /// Append a Finished() step to every trajectory
    #[arg(long)]
    pub append_finished: bool,
    /// Prefix for trajectory ids
    #[arg(long, default_value = "syn-")]
    pub id_prefix: String,
}

#[derive(Serialize)]
struct SynthesisSummary {
    states: usize,
    clusters: usize,
    edges: usize,
    paths: usize,
    trajectories: usize,
}

pub fn synthesize(a: &SynthesizeArgs, g: &GlobalConfig) -> anyhow::Result<Status> {
    let text = std::fs::read_to_string(&a.exploration)
        .with_context(|| format!("reading {}", a.exploration.display()))?;
    let x: Exploration = serde_json::from_str(&text)
        .with_context(|| format!("parsing exploration {}", a.exploration.display()))?;
    let graph = build_graph(&x.states, &x.triples, &x.start)?;

    let choice = a.cluster.unwrap_or(if g.offline {
        ClusterChoice::Identity
    } else {
        ClusterChoice::Chat
    });
    if choice == ClusterChoice::Chat && g.offline {
        return Err(usage("--cluster chat needs the chat endpoint; drop --offline"));
    }
    let eq: Box<dyn StateEquivalence> = match choice {
        ClusterChoice::Identity => Box::new(IdentityEquivalence),
        ClusterChoice::Title => Box::new(TitleEquivalence),
        ClusterChoice::Chat => Box::new(ChatEquivalence::new(http_client(g)?)),
    };
    let clustered = cluster_states(&graph, eq.as_ref())?;
    let paths = extract_paths(&clustered, a.max_depth, a.max_paths);

    let enricher: Box<dyn SemanticEnricher> = if g.offline {
        Box::new(TemplateEnricher)
    } else {
        Box::new(ChatEnricher::new(http_client(g)?))
    };
    let opts = EnrichOptions {
        append_finished: a.append_finished,
        id_prefix: a.id_prefix.clone(),
    };
    let trajs = bounded_map(&paths, g.jobs, |p| {
        enrich_path(&clustered, p, enricher.as_ref(), &opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    save_trajectories(&a.out, &trajs)?;
    let summary = SynthesisSummary {
        states: graph.nodes.len(),
        clusters: clustered.nodes.len(),
        edges: clustered.edges.len(),
        paths: paths.len(),
        trajectories: trajs.len(),
    };
    write_out(a.report.as_deref(), &to_json(&summary))?;
    Ok(Status::Ok)
}

#[derive(Debug, Args)]
pub struct TaskgenArgs {
    /// Taxonomy YAML (domains with sub-scenarios)
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// Environment config the rollouts run in
    #[arg(long)]
    pub env: PathBuf,
    /// Number of instructions to generate
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Step limit per rollout
    #[arg(long, default_value_t = 15)]
    pub max_steps: usize,
    /// Regeneration attempts for drafts below the step minimum
    #[arg(long, default_value_t = DEFAULT_RETRIES)]
    pub retries: u32,
    /// Keep rollouts that fail self-assessment
    #[arg(long)]
    pub keep_failures: bool,
    /// Offline walk policy emits Finished() at this step
    #[arg(long, default_value_t = 6)]
    pub finish_at: usize,
    /// Generated trajectories as JSONL
    #[arg(long)]
    pub out: PathBuf,
    /// Generation summary as JSON (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn taskgen(a: &TaskgenArgs, g: &GlobalConfig) -> anyhow::Result<Status> {
    if a.max_steps == 0 {
        return Err(usage("--max-steps must be >= 1"));
    }
    let tax = load_taxonomy(&a.taxonomy)?;
    let env_cfg = EnvConfig::load(&a.env)?;
    FsmEnvironment::from_config(&env_cfg)?;

    let (generator, policy, judge): (
        Box<dyn InstructionGenerator>,
        Box<dyn PolicyClient>,
        Box<dyn TaskCompletionJudge>,
    ) = if g.offline {
        (
            Box::new(TemplateGenerator::new(g.seed)),
            Box::new(WalkPolicy {
                seed: g.seed,
                finish_at: Some(a.finish_at),
            }),
            Box::new(RuleJudge::RequireFinished),
        )
    } else {
        let client = http_client(g)?;
        (
            Box::new(ChatGenerator::new(client.clone())),
            Box::new(ChatPolicy::new(client.clone())),
            Box::new(ChatJudge::new(client)),
        )
    };
    let instrs = generate_instructions(&tax, generator.as_ref(), a.count, a.retries, g.jobs)?;
    let opts = RolloutOptions {
        max_steps: a.max_steps,
        ..RolloutOptions::default()
    };
    let out = run_taskgen(
        &instrs,
        || FsmEnvironment::from_config(&env_cfg),
        policy.as_ref(),
        judge.as_ref(),
        &opts,
        a.keep_failures,
        g.jobs,
    )?;
    save_trajectories(&a.out, &out.trajectories)?;
    write_out(a.report.as_deref(), &to_json(&out))?;
    Ok(Status::Ok)
}
