use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng as _;

use rofl_core::agent::DqnAgent;
use rofl_core::corpus::{
    generate_corpus, make_ood_config, read_corpus, read_header, reduce_labels, strip_labels, write_corpus,
    FullCorpus, PairCorpus, ReducedCorpus, Strength,
};
use rofl_core::env::{DialogEnv, EnvConfig, RulePolicy};
use rofl_core::experts::{
    Expert, ExpertKind, LearnedExpert, FleConfig, FullLabelExpert, NleConfig, NoLabelExpert, ReducedLabelExpert,
    RleConfig, RuleExpert,
};
use rofl_core::seed::stream;
use rofl_core::trainer::{evaluate, evaluate_policy, run, RunConfig};

#[derive(Parser)]
#[command(name = "rofl", version, about = "DQfD dialog managers with weak experts and RoFL fine-tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusStrength {
    Full,
    Reduced,
    Pairs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExpertArg {
    None,
    Rule,
    Fle,
    Rle,
    Nle,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnedKind {
    Fle,
    Rle,
    Nle,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvPreset {
    Desk,
    FullScale,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Roll the rule policy with label noise and write an annotated corpus.
    GenCorpus {
        #[arg(long, default_value_t = 2000)]
        dialogs: usize,
        #[arg(long, default_value_t = 0.15)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "full")]
        strength: CorpusStrength,
        /// Negatives per positive for pair corpora.
        #[arg(long, default_value_t = 1)]
        negatives: usize,
        /// Environment config; defaults to the seven-domain benchmark environment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Generate from a renamed, permuted out-of-domain variant of the config.
        #[arg(long)]
        ood: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a learned expert for the target environment.
    TrainExpert {
        #[arg(long, value_enum)]
        kind: LearnedKind,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Target environment config; defaults to the seven-domain benchmark environment.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run pre-fill, optional RoFL fine-tuning and DQfD training.
    Train {
        #[arg(long, value_enum)]
        expert: ExpertArg,
        #[arg(long, value_enum, default_value = "off")]
        rofl: Switch,
        /// Full run config (JSON); defaults to the benchmark preset for the expert.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Corpus to train the expert from.
        #[arg(long, conflicts_with = "expert_checkpoint")]
        corpus: Option<PathBuf>,
        /// Previously trained expert.
        #[arg(long)]
        expert_checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the step budget of the config.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the preset run config for an expert as JSON, ready to edit.
    Config {
        #[arg(long, value_enum)]
        expert: ExpertArg,
        #[arg(long, value_enum, default_value = "off")]
        rofl: Switch,
        #[arg(long, value_enum, default_value = "full-scale")]
        env: EnvPreset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Greedy evaluation of a Q-network, expert classifier or the rule policy.
    Eval {
        /// Q-network or expert checkpoint; omit to evaluate the rule policy.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Without a checkpoint, evaluate a uniform random policy instead of the rule policy.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn env_config(path: Option<&Path>) -> Result<EnvConfig> {
    Ok(match path {
        Some(p) => EnvConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => EnvConfig::full_scale(),
    })
}

/// Trains an expert of `kind`, deriving weaker annotations from a full corpus
/// when needed. Returns the expert and its held-out score.
fn train_learned(kind: LearnedKind, corpus: &Path, env: &DialogEnv, seed: u64) -> Result<(LearnedExpert, f64)> {
    let header = read_header(corpus)?;
    Ok(match (kind, header.strength) {
        (LearnedKind::Fle, Strength::Full) => {
            let c: FullCorpus = read_corpus(corpus)?;
            let (e, acc) = FullLabelExpert::train(&c, env.state_dim(), env.n_actions(), FleConfig::default(), seed)?;
            (LearnedExpert::Fle(e), acc)
        }
        (LearnedKind::Rle, Strength::Full | Strength::Reduced) => {
            let c: ReducedCorpus = match header.strength {
                Strength::Full => reduce_labels(&read_corpus(corpus)?)?,
                _ => read_corpus(corpus)?,
            };
            let (e, f1) = ReducedLabelExpert::train(&c, env, RleConfig::default(), seed)?;
            (LearnedExpert::Rle(e), f1)
        }
        (LearnedKind::Nle, Strength::Full | Strength::Pairs) => {
            let c: PairCorpus = match header.strength {
                Strength::Full => strip_labels(&read_corpus(corpus)?, 1, seed)?,
                _ => read_corpus(corpus)?,
            };
            let (e, f1) = NoLabelExpert::train(&c, env, NleConfig::default(), seed)?;
            (LearnedExpert::Nle(e), f1)
        }
        (_, strength) => bail!("a {strength:?} corpus does not carry the annotations this expert needs"),
    })
}

fn expert_kind(expert: ExpertArg) -> Option<ExpertKind> {
    match expert {
        ExpertArg::None => None,
        ExpertArg::Rule => Some(ExpertKind::Rule),
        ExpertArg::Fle => Some(ExpertKind::Fle),
        ExpertArg::Rle => Some(ExpertKind::Rle),
        ExpertArg::Nle => Some(ExpertKind::Nle),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::GenCorpus { dialogs, noise, seed, strength, negatives, config, ood, out } => {
            let mut cfg = env_config(config.as_deref())?;
            if ood {
                cfg = make_ood_config(&cfg, seed);
            }
            let full = generate_corpus(&cfg, dialogs, noise, seed)?;
            match strength {
                CorpusStrength::Full => write_corpus(&out, &full)?,
                CorpusStrength::Reduced => write_corpus(&out, &reduce_labels(&full)?)?,
                CorpusStrength::Pairs => write_corpus(&out, &strip_labels(&full, negatives, seed)?)?,
            }
            log::info!("wrote {} dialogs to {}", dialogs, out.display());
        }
        Command::TrainExpert { kind, corpus, out, config, seed } => {
            let env = DialogEnv::new(env_config(config.as_deref())?)?;
            let (expert, score) = train_learned(kind, &corpus, &env, seed)?;
            expert.save(&out, seed)?;
            println!("{}", serde_json::json!({ "held_out_score": score }));
        }
        Command::Train { expert, rofl, config, corpus, expert_checkpoint, seed, steps, out_dir } => {
            let kind = expert_kind(expert);
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
                None => RunConfig::benchmark(kind, rofl == Switch::On, seed),
            };
            cfg.seed = seed;
            if let Some(s) = steps {
                cfg.total_steps = s;
            }
            let env = DialogEnv::new(cfg.env.clone())?;
            let mut rule = None;
            let mut learned = None;
            match expert {
                ExpertArg::None => {}
                ExpertArg::Rule => rule = Some(RuleExpert::new(&env)),
                other => {
                    let k = match other {
                        ExpertArg::Fle => LearnedKind::Fle,
                        ExpertArg::Rle => LearnedKind::Rle,
                        _ => LearnedKind::Nle,
                    };
                    learned = Some(match (&corpus, &expert_checkpoint) {
                        (_, Some(p)) => LearnedExpert::load(p)?,
                        (Some(c), None) => {
                            let (e, score) = train_learned(k, c, &env, seed)?;
                            log::info!("expert held-out score {score:.4}");
                            e
                        }
                        (None, None) => bail!("a learned expert needs --corpus or --expert-checkpoint"),
                    });
                }
            }
            let demonstrator: Option<&mut dyn Expert> = match (&mut rule, &mut learned) {
                (Some(r), _) => Some(r),
                (_, Some(l)) => Some(l),
                _ => None,
            };
            let out = run(&cfg, demonstrator)?;
            out.write(&out_dir, &cfg)?;
            if let (Some(l), true) = (&learned, out.summary.rofl) {
                l.save(&out_dir.join("expert.json"), seed)?;
            }
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
        }
        Command::Config { expert, rofl, env, seed } => {
            let env = match env {
                EnvPreset::Desk => EnvConfig::desk(),
                EnvPreset::FullScale => EnvConfig::full_scale(),
            };
            let cfg = RunConfig::preset(expert_kind(expert), rofl == Switch::On, env, seed);
            println!("{}", serde_json::to_string_pretty(&cfg)?);
        }
        Command::Eval { checkpoint, random, n, config, seed } => {
            let env = DialogEnv::new(env_config(config.as_deref())?)?;
            let metrics = match checkpoint {
                None if random => {
                    let mut rng = rofl_core::seed::rng(seed, stream::EXPLORE);
                    let n_actions = env.n_actions();
                    evaluate_policy(&env, n, seed, stream::FINAL_EVAL, |_, _| Ok(rng.random_range(0..n_actions)))?
                }
                None => {
                    let rule = RulePolicy::new(&env);
                    evaluate_policy(&env, n, seed, stream::FINAL_EVAL, |s, _| Ok(rule.act(s)))?
                }
                Some(p) => {
                    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(&p)?)?;
                    match manifest["kind"].as_str() {
                        Some("q-network") => evaluate(&DqnAgent::load(&p)?, &env, n, seed, stream::FINAL_EVAL)?,
                        Some("fle") => {
                            let fle = FullLabelExpert::load(&p)?;
                            evaluate_policy(&env, n, seed, stream::FINAL_EVAL, |s, _| Ok(fle.predict(&s.features())))?
                        }
                        _ => {
                            let expert = LearnedExpert::load(&p)?;
                            let mut rng = rofl_core::seed::rng(seed, stream::EXPERT);
                            evaluate_policy(&env, n, seed, stream::FINAL_EVAL, |s, text| {
                                let ctx = rofl_core::experts::Context { state: s, user_text: text };
                                Ok(expert.demonstrate(&ctx, &mut rng)?.action)
                            })?
                        }
                    }
                }
            };
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
    }
    Ok(())
}
