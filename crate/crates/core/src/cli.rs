//! `dppo` subcommands. Exit codes: 0 success, 1 runtime failure, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::eval::{
    mean_safe_flight, run_episodes, Baseline, EpisodeRecord, Pilot, TrajectoryPoint,
};
use crate::nn::ActionMode;
use crate::pgm::Pgm;
use crate::ppo::{PpoError, TrainSink, Trainer, UpdateStats};
use crate::reward::{
    free_space_centroid, reward_with_floor, threshold_free_space, DEFAULT_D_MIN, DEFAULT_TAU,
};
use crate::world::{Simulator, DEFAULT_MAX_RANGE};

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "DPPO_OUTPUT_DIR";

pub const METRICS_HEADER: &str =
    "episode,return,length_steps,path_length_m,collision,moving_avg_return";
pub const STATS_HEADER: &str = "update,policy_loss,value_loss,entropy,clip_frac,approx_kl";
pub const REPORT_HEADER: &str = "episode,seed,path_length_m,steps,collided,return";
pub const TRAJECTORY_HEADER: &str = "episode,t,x,y,z,yaw,action,reward";

#[derive(Debug, Parser)]
#[command(
    name = "dppo",
    version,
    about = "Depth-image drone navigation with PPO"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy from a run configuration.
    Train {
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run of this config.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and write eval_report.csv.
    Eval {
        checkpoint: PathBuf,
        config: PathBuf,
        /// Number of episodes; defaults to eval.n_episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// argmax or sample; defaults to eval.mode.
        #[arg(long)]
        mode: Option<ActionMode>,
        /// Also fly a baseline on the same seeds and print a comparison.
        #[arg(long)]
        baseline: Option<Baseline>,
        /// Write per-step poses of the evaluated policy as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Free-space centroid and reward of a PGM depth image.
    DepthTool {
        image: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_RANGE)]
        max_range: f64,
        /// Write the free-space mask as an 8-bit PGM.
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Train { config, resume } => cmd_train(&config, resume.as_deref(), out),
        Command::Eval {
            checkpoint,
            config,
            episodes,
            mode,
            baseline,
            trajectory,
        } => cmd_eval(
            &checkpoint,
            &config,
            episodes,
            mode,
            baseline,
            trajectory.as_deref(),
            out,
        ),
        Command::DepthTool {
            image,
            tau,
            max_range,
            mask_out,
        } => cmd_depth_tool(&image, tau, max_range, mask_out.as_deref(), out),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        let dir = PathBuf::from(dir);
        cfg.output_dir = if dir.is_absolute() {
            dir
        } else {
            std::env::current_dir().map_err(runtime)?.join(dir)
        };
    }
    Ok(cfg)
}

fn load_checkpoint(path: &Path, cfg: &RunConfig) -> Result<Checkpoint, CliError> {
    let ckpt = Checkpoint::load(path).map_err(usage)?;
    if ckpt.weights.arch != cfg.network {
        return Err(usage(format!(
            "{}: network shape {:?} does not match the configured {:?}",
            path.display(),
            ckpt.weights.arch,
            cfg.network
        )));
    }
    Ok(ckpt)
}

struct FileSink {
    metrics: BufWriter<File>,
    stats: BufWriter<File>,
    checkpoints: PathBuf,
    last_checkpoint: Option<PathBuf>,
}

impl FileSink {
    fn flush(&mut self) -> std::io::Result<()> {
        self.metrics.flush()?;
        self.stats.flush()
    }
}

fn sink_err(e: impl std::fmt::Display) -> PpoError {
    PpoError::Sink(e.to_string())
}

impl TrainSink for FileSink {
    fn episode(&mut self, r: &EpisodeRecord, moving_avg: f64) -> Result<(), PpoError> {
        writeln!(
            self.metrics,
            "{},{},{},{},{},{}",
            r.episode_index, r.total_return, r.steps, r.path_length, r.collided as u8, moving_avg
        )
        .map_err(sink_err)
    }

    fn update(&mut self, s: &UpdateStats) -> Result<(), PpoError> {
        writeln!(
            self.stats,
            "{},{},{},{},{},{}",
            s.update, s.policy_loss, s.value_loss, s.entropy, s.clip_frac, s.approx_kl
        )
        .map_err(sink_err)
    }

    /// Logs are flushed first so a checkpoint never runs ahead of them.
    fn checkpoint(&mut self, c: &Checkpoint) -> Result<(), PpoError> {
        self.flush().map_err(sink_err)?;
        let path = self.checkpoints.join(format!("ckpt_{:06}.bin", c.updates));
        c.save(&path).map_err(sink_err)?;
        c.save(&self.checkpoints.join("latest.bin"))
            .map_err(sink_err)?;
        self.last_checkpoint = Some(path);
        Ok(())
    }
}

/// Keeps the header and every data row whose first field is below `limit`.
fn truncate_csv(path: &Path, header: &str, limit: u64) -> Result<(), CliError> {
    let text = fs::read_to_string(path).unwrap_or_default();
    let mut kept = format!("{header}\n");
    for line in text.lines().skip(1) {
        let index: Option<u64> = line.split(',').next().and_then(|f| f.parse().ok());
        if index.is_some_and(|i| i < limit) {
            kept.push_str(line);
            kept.push('\n');
        }
    }
    fs::write(path, kept).map_err(io_err(path))
}

fn open_log(path: &Path, header: &str, append: bool) -> Result<BufWriter<File>, CliError> {
    if append {
        let f = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        Ok(BufWriter::new(f))
    } else {
        let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
        writeln!(w, "{header}").map_err(io_err(path))?;
        Ok(w)
    }
}

pub fn cmd_train(
    config_path: &Path,
    resume: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let map = cfg.load_map().map_err(usage)?;
    let sim = Simulator::new(map, cfg.sim_config()).map_err(usage)?;
    let resume_from = resume.map(|p| load_checkpoint(p, &cfg)).transpose()?;

    let dir = &cfg.output_dir;
    let ckpt_dir = dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(io_err(&ckpt_dir))?;
    let resolved = dir.join("resolved_config");
    fs::write(&resolved, cfg.emit()).map_err(io_err(&resolved))?;
    let metrics_path = dir.join("metrics.csv");
    let stats_path = dir.join("stats.csv");

    let mut trainer = match resume_from {
        Some(ckpt) => {
            let state = ckpt
                .trainer
                .as_ref()
                .ok_or_else(|| usage("checkpoint carries no trainer state"))?;
            truncate_csv(&metrics_path, METRICS_HEADER, state.episode_index)?;
            truncate_csv(&stats_path, STATS_HEADER, ckpt.updates)?;
            Trainer::from_checkpoint(sim, ckpt, cfg.ppo.clone()).map_err(usage)?
        }
        None => Trainer::new(
            sim,
            &cfg.network,
            cfg.ppo.clone(),
            cfg.master_seed,
            cfg.eval_window,
        )
        .map_err(usage)?,
    };
    let append = resume.is_some();
    let mut sink = FileSink {
        metrics: open_log(&metrics_path, METRICS_HEADER, append)?,
        stats: open_log(&stats_path, STATS_HEADER, append)?,
        checkpoints: ckpt_dir,
        last_checkpoint: None,
    };
    let result = trainer.run(&mut sink);
    sink.flush().map_err(io_err(dir))?;
    let summary = result.map_err(|e| {
        let kept = sink
            .last_checkpoint
            .as_ref()
            .map(|p| format!(" (last checkpoint: {})", p.display()))
            .unwrap_or_default();
        runtime(format!("training failed: {e}{kept}"))
    })?;
    writeln!(
        out,
        "trained {} episodes in {} updates; final moving average return {}",
        summary.episodes,
        summary.updates,
        summary
            .final_moving_avg
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
    )
    .map_err(runtime)?;
    writeln!(out, "outputs in {}", dir.display()).map_err(runtime)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    checkpoint_path: &Path,
    config_path: &Path,
    episodes: Option<usize>,
    mode: Option<ActionMode>,
    baseline: Option<Baseline>,
    trajectory: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg = load_config(config_path)?;
    if let Some(n) = episodes {
        if n == 0 {
            return Err(usage("--episodes must be at least 1"));
        }
        cfg.eval_episodes = n;
    }
    if let Some(m) = mode {
        cfg.eval_mode = m;
    }
    let map = cfg.load_map().map_err(usage)?;
    let ckpt = load_checkpoint(checkpoint_path, &cfg)?;
    let sim_cfg = cfg.sim_config();

    let mut points: Vec<TrajectoryPoint> = Vec::new();
    let records = run_episodes(
        &map,
        &sim_cfg,
        Pilot::Network {
            weights: &ckpt.weights,
            mode: cfg.eval_mode,
        },
        cfg.eval_episodes,
        cfg.eval_seed,
        trajectory.map(|_| &mut points),
    )
    .map_err(runtime)?;
    let msf = mean_safe_flight(&records).map_err(runtime)?;

    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    let report = cfg.output_dir.join("eval_report.csv");
    let mut csv = format!("{REPORT_HEADER}\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.episode_index, r.seed, r.path_length, r.steps, r.collided as u8, r.total_return
        ));
    }
    fs::write(&report, csv).map_err(io_err(&report))?;
    if let Some(path) = trajectory {
        let mut csv = format!("{TRAJECTORY_HEADER}\n");
        for p in &points {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                p.episode, p.t, p.x, p.y, p.z, p.yaw, p.action, p.reward
            ));
        }
        fs::write(path, csv).map_err(io_err(path))?;
    }

    let w = |e: std::io::Error| runtime(e);
    writeln!(out, "episodes: {} ({} mode)", records.len(), cfg.eval_mode).map_err(w)?;
    writeln!(
        out,
        "mean safe flight: mean {:.3} m, max {:.3} m",
        msf.mean, msf.max
    )
    .map_err(w)?;
    writeln!(out, "report: {}", report.display()).map_err(w)?;
    if let Some(b) = baseline {
        let reference = run_episodes(
            &map,
            &sim_cfg,
            Pilot::Baseline(b),
            cfg.eval_episodes,
            cfg.eval_seed,
            None,
        )
        .and_then(|r| mean_safe_flight(&r))
        .map_err(runtime)?;
        writeln!(out, "policy,msf_mean_m,msf_max_m").map_err(w)?;
        writeln!(out, "trained,{},{}", msf.mean, msf.max).map_err(w)?;
        writeln!(out, "{b},{},{}", reference.mean, reference.max).map_err(w)?;
        writeln!(out, "ratio,{}", msf.mean / reference.mean).map_err(w)?;
    }
    Ok(())
}

/// Formats `file,centroid_u,centroid_v,d,reward`; the centroid fields are
/// empty when no pixel is free.
pub fn depth_tool_line(file: &str, centroid: Option<(f64, f64)>, d: f64, reward: f64) -> String {
    let (u, v) = centroid.map_or((String::new(), String::new()), |(u, v)| {
        (u.to_string(), v.to_string())
    });
    format!("{file},{u},{v},{d},{reward}")
}

pub fn cmd_depth_tool(
    image: &Path,
    tau: f64,
    max_range: f64,
    mask_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(usage(format!("--tau must be in (0, 1], got {tau}")));
    }
    let bytes = fs::read(image).map_err(|e| usage(format!("{}: {e}", image.display())))?;
    let depth = Pgm::parse(&bytes)
        .and_then(|p| p.to_depth(max_range))
        .map_err(|e| usage(format!("{}: {e}", image.display())))?;
    let mask = threshold_free_space(&depth, tau);
    let fs_result = free_space_centroid(&mask);
    let reward = reward_with_floor(false, fs_result.d, DEFAULT_D_MIN).map_err(runtime)?;
    if let Some(path) = mask_out {
        fs::write(path, Pgm::from_mask(&mask).to_bytes()).map_err(io_err(path))?;
    }
    writeln!(
        out,
        "{}",
        depth_tool_line(
            &image.display().to_string(),
            fs_result.centroid,
            fs_result.d,
            reward.value
        )
    )
    .map_err(runtime)
}
