use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};

use softgym_core::cem::CemConfig;
use softgym_core::env::{run_episode, PolicyKind};
use softgym_core::metrics::{EvalRecord, EvalReport};
use softgym_core::render::{frame_name, write_image, Frame, IMAGE_SIZE};
use softgym_core::variation::{build_cache, inspect, load_cache, save_cache, Cache, VARIATIONS};
use softgym_core::{EnvConfig, EnvHandle, ParticleScale, TaskKind, VariationSource};

#[derive(Parser)]
#[command(
    name = "softgym",
    version,
    about = "Deformable-object manipulation benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and save the variation cache of a task.
    GenCache(GenCacheArgs),
    /// Run episodes and write one record per step.
    Rollout(RunArgs),
    /// Run episodes and write final normalized performance statistics.
    Evaluate(RunArgs),
    /// Evaluate the CEM planner with a ground-truth dynamics model.
    Cem(RunArgs),
    /// Summarize a cache file.
    InspectCache { file: PathBuf },
}

#[derive(Args)]
struct CacheArgs {
    /// paper or desk.
    #[arg(long, default_value = "paper", value_parser = parse_scale)]
    particle_scale: ParticleScale,
    /// Cache file; defaults to <cache-dir>/<task>-<scale>-seed<cache-seed>.sgv.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value = "caches")]
    cache_dir: PathBuf,
}

#[derive(Args)]
struct GenCacheArgs {
    #[arg(value_parser = parse_task)]
    task: TaskKind,
    /// Master seed of the cache.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Variation indices to generate, `a..b`.
    #[arg(long, default_value = "0..1000", value_parser = parse_range)]
    variations: Range<usize>,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_parser = parse_task)]
    task: TaskKind,
    /// zero, random or cem.
    #[arg(long, value_parser = ["zero", "random", "cem"])]
    policy: Option<String>,
    #[arg(long, default_value = "800..1000", value_parser = parse_range)]
    variations: Range<usize>,
    /// Policy and environment seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Master seed of the cache to load.
    #[arg(long, default_value_t = 0)]
    cache_seed: u64,
    #[command(flatten)]
    cache: CacheArgs,
    /// Write PPM frames under DIR/<variation>/.
    #[arg(long, value_name = "DIR")]
    render: Option<PathBuf>,
    #[arg(long, default_value_t = IMAGE_SIZE)]
    image_size: usize,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CEM planning horizon; the task's default when absent.
    #[arg(long)]
    horizon: Option<usize>,
    /// CEM environment steps per decision.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    elite: Option<f64>,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    TaskKind::from_name(s).map_err(|_| {
        let names: Vec<&str> = TaskKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown task `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_scale(s: &str) -> Result<ParticleScale, String> {
    ParticleScale::from_name(s).map_err(|e| e.to_string())
}

/// `a..b` or a single index `a`.
fn parse_range(s: &str) -> Result<Range<usize>, String> {
    let bad = || format!("`{s}` is not a range of the form a..b");
    let r = match s.split_once("..") {
        Some((a, b)) => a.parse().map_err(|_| bad())?..b.parse().map_err(|_| bad())?,
        None => {
            let a: usize = s.parse().map_err(|_| bad())?;
            a..a + 1
        }
    };
    if r.start >= r.end || r.end > VARIATIONS {
        return Err(format!(
            "range {s} must be non-empty and within 0..{VARIATIONS}"
        ));
    }
    Ok(r)
}

fn cache_path(args: &CacheArgs, task: TaskKind, seed: u64) -> PathBuf {
    args.cache.clone().unwrap_or_else(|| {
        args.cache_dir.join(format!(
            "{}-{}-seed{seed}.sgv",
            task.name(),
            args.particle_scale.name()
        ))
    })
}

fn gen_cache(a: &GenCacheArgs) -> Result<()> {
    let path = cache_path(&a.cache, a.task, a.seed);
    let cache = build_cache(a.task, a.cache.particle_scale, a.seed, a.variations.clone())?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_cache(&cache, &path)?;
    println!(
        "wrote {} variations of {} to {}",
        cache.variations.len(),
        a.task.name(),
        path.display()
    );
    Ok(())
}

impl RunArgs {
    fn cem_config(&self) -> CemConfig {
        let d = CemConfig::for_task(self.task);
        CemConfig {
            horizon: self.horizon.unwrap_or(d.horizon),
            budget: self.budget.unwrap_or(d.budget),
            iterations: self.iters.unwrap_or(d.iterations),
            elite_fraction: self.elite.unwrap_or(d.elite_fraction),
            ..d
        }
    }

    fn policy(&self, default: &str) -> PolicyKind {
        match self.policy.as_deref().unwrap_or(default) {
            "zero" => PolicyKind::Zero,
            "random" => PolicyKind::Random,
            _ => PolicyKind::Cem(self.cem_config()),
        }
    }

    fn header(&self, command: &str, policy: &PolicyKind, cache: &Path) -> Vec<(String, String)> {
        let mut h = vec![
            ("command", command.to_string()),
            ("task", self.task.name().to_string()),
            ("policy", policy.name().to_string()),
            (
                "variations",
                format!("{}..{}", self.variations.start, self.variations.end),
            ),
            ("seed", self.seed.to_string()),
            ("cache", cache.display().to_string()),
            ("cache_seed", self.cache_seed.to_string()),
            (
                "particle_scale",
                self.cache.particle_scale.name().to_string(),
            ),
            ("image_size", self.image_size.to_string()),
        ];
        if let PolicyKind::Cem(c) = policy {
            h.extend([
                ("horizon", c.horizon.to_string()),
                ("budget", c.budget.to_string()),
                ("iters", c.iterations.to_string()),
                ("elite", c.elite_fraction.to_string()),
                ("discount", c.discount.to_string()),
            ]);
        }
        if let Some(r) = &self.render {
            h.push(("render", r.display().to_string()));
        }
        if let Some(o) = &self.out {
            h.push(("out", o.display().to_string()));
        }
        h.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn env(&self) -> Result<(EnvHandle, PathBuf)> {
        let path = cache_path(&self.cache, self.task, self.cache_seed);
        let cache: Cache = load_cache(&path)?;
        if cache.seed != self.cache_seed {
            bail!(
                "{} was generated with seed {}, not {}",
                path.display(),
                cache.seed,
                self.cache_seed
            );
        }
        let mut config = EnvConfig::new(self.task);
        config.scale = self.cache.particle_scale;
        config.image_size = self.image_size;
        let env = EnvHandle::new(config, VariationSource::Cache(Arc::new(cache)))?;
        Ok((env, path))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(a: &RunArgs, command: &str, default_policy: &str, per_step: bool) -> Result<()> {
    let policy = a.policy(default_policy);
    if let PolicyKind::Cem(c) = &policy {
        c.validate()?;
    }
    let (mut env, path) = a.env()?;
    let header = a.header(command, &policy, &path);
    let mut episodes = String::new();
    let mut records = Vec::new();
    for index in a.variations.clone() {
        let mut save = |step: usize, frame: &Frame| -> softgym_core::Result<()> {
            if let Some(dir) = &a.render {
                let dir = dir.join(index.to_string());
                fs::create_dir_all(&dir)?;
                write_image(frame, &dir.join(frame_name(step)))?;
            }
            Ok(())
        };
        let hook: Option<&mut dyn FnMut(usize, &Frame) -> softgym_core::Result<()>> =
            a.render.is_some().then_some(&mut save as _);
        let mut p = policy.make(a.seed, index);
        let ep = run_episode(&mut env, p.as_mut(), index, a.seed, hook)?;
        if per_step {
            episodes.push_str(&ep.to_text());
        }
        records.push(EvalRecord {
            index,
            seed: a.seed,
            performance: ep.final_performance(),
            normalized: ep.final_normalized,
        });
    }
    let mut text = String::new();
    for (k, v) in &header {
        let _ = writeln!(text, "# {k}: {v}");
    }
    text.push_str(&episodes);
    text.push_str(&EvalReport::new(records).to_text(&[]));
    emit(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            // Value errors omit the usage line; always show it.
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::GenCache(a) => gen_cache(a),
        Command::Rollout(a) => run(a, "rollout", "zero", true),
        Command::Evaluate(a) => run(a, "evaluate", "zero", false),
        Command::Cem(a) => run(a, "cem", "cem", false),
        Command::InspectCache { file } => load_cache(file)
            .map(|c| print!("{}", inspect(&c)))
            .map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
