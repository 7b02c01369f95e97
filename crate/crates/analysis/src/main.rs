use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use tsn_analysis::*;
use tsn_minplus::Q;
use tsn_model::{Mode, Model, Scheduler};
use tsn_sim::{build_sim, SimOptions};

#[derive(Parser)]
#[command(name = "tsn-analysis", version, about = "TSN latency bounds, simulation, gate and route synthesis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-hop and end-to-end delay bounds
    Analyze(Common),
    /// Discrete-event run: trace and measured delays
    Simulate(Common),
    /// Gate control lists without overlapping openings
    SynthGcl(Common),
    /// Fault-tolerant topology and routes
    Route {
        #[command(flatten)]
        common: Common,
        /// Candidate bridges; defaults to the switches in the config
        #[arg(long)]
        bridges: Option<usize>,
    },
    /// Bounds against simulated maxima, per flow
    Compare(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedArg {
    #[value(name = "CBS+TAS")]
    Tas,
    #[value(name = "CBS+SP")]
    Sp,
    Both,
    /// Whatever each port's schedule says
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    NonPreemption,
    Preemption,
    Both,
    Config,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "config")]
    scheduler: SchedArg,
    #[arg(long, value_enum, default_value = "config")]
    mode: ModeArg,
    /// Index-coding ratio as `0.25` or `1/4`, or `auto` for the config's index tables
    #[arg(long)]
    shrink: Option<String>,
    #[arg(long)]
    horizon_us: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    duration_us: Option<u64>,
    /// Report one maximum frame per hop as a separate queuing term
    #[arg(long)]
    strict_tqueue: bool,
    /// Use source arrival curves at every hop instead of propagated output bounds
    #[arg(long)]
    source_curves: bool,
}

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

impl Common {
    fn model(&self) -> Fallible<Model> {
        Model::load(&self.config).map_err(|e| format!("{}: {e}", self.config.display()).into())
    }

    /// Combinations to run; `None` keeps the schedules as configured.
    fn combos(&self) -> Option<Vec<Combo>> {
        let scheds: &[Scheduler] = match self.scheduler {
            SchedArg::Tas => &[Scheduler::CbsTas],
            SchedArg::Sp => &[Scheduler::CbsSp],
            SchedArg::Both => &[Scheduler::CbsTas, Scheduler::CbsSp],
            SchedArg::Config => &[],
        };
        let modes: &[Mode] = match self.mode {
            ModeArg::NonPreemption => &[Mode::NonPreemption],
            ModeArg::Preemption => &[Mode::Preemption],
            ModeArg::Both => &[Mode::NonPreemption, Mode::Preemption],
            ModeArg::Config => &[],
        };
        if scheds.is_empty() && modes.is_empty() {
            return None;
        }
        let scheds = if scheds.is_empty() { &[Scheduler::CbsTas, Scheduler::CbsSp][..] } else { scheds };
        let modes = if modes.is_empty() { &[Mode::NonPreemption, Mode::Preemption][..] } else { modes };
        Some(scheds.iter().flat_map(|&scheduler| modes.iter().map(move |&mode| Combo { scheduler, mode })).collect())
    }

    fn options(&self, model: &Model) -> Fallible<AnalysisOptions> {
        let mut o = AnalysisOptions::for_model(model);
        if let Some(h) = self.horizon_us {
            o.horizon = Q::from(h as i128 * 1000);
        }
        o.strict_tqueue = self.strict_tqueue;
        o.propagate = !self.source_curves;
        o.shrink = match self.shrink.as_deref() {
            None => None,
            Some("auto") => {
                let r = model.index_tables.iter().filter_map(|t| t.r_index()).max();
                Some(r.ok_or("--shrink auto: the config has no usable index table")?)
            }
            Some(s) => Some(parse_ratio(s).ok_or_else(|| format!("--shrink: cannot read `{s}`"))?),
        };
        Ok(o)
    }

    fn sim_options(&self) -> SimOptions {
        let mut o = SimOptions { seed: self.seed, ..SimOptions::default() };
        if let Some(d) = self.duration_us {
            o.duration = d as i128 * 1000;
        }
        o
    }

    fn write(&self, name: &str, text: &str) -> Fallible<()> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(())
    }
}

fn analyses(c: &Common, model: &Model) -> Fallible<Vec<Analysis>> {
    let opts = c.options(model)?;
    Ok(match c.combos() {
        None => vec![analyze(model, &opts)?],
        Some(cs) => cs.iter().map(|x| analyze(&with_combo(model, x.scheduler, x.mode), &opts)).collect::<Result<_, _>>()?,
    })
}

/// Runs one subcommand; `Ok(false)` means some checked invariant failed.
fn run(cmd: Cmd) -> Fallible<bool> {
    match cmd {
        Cmd::Analyze(c) => {
            let model = c.model()?;
            let all = analyses(&c, &model)?;
            let limit = Q::from(10 * tsn_sim::hyperperiod(&model));
            c.write("bounds.csv", &bounds_csv(&all))?;
            c.write("hops.csv", &hops_csv(&all))?;
            c.write("curves.csv", &curves_csv(&all, limit))?;
            let sums = all.iter().flat_map(|a| &a.flows).all(|f| f.bound.is_none_or(|b| b == f.hops.iter().map(HopTerm::total).sum()));
            Ok(sums)
        }
        Cmd::Simulate(c) => {
            let mut model = c.model()?;
            if let Some(cs) = c.combos() {
                let [x] = cs[..] else { return Err("simulate takes a single scheduler and mode".into()) };
                model = with_combo(&model, x.scheduler, x.mode);
            }
            let run = build_sim(&model, c.sim_options())?.run()?;
            let report = run.measure();
            c.write("trace.csv", &run.trace.to_csv())?;
            c.write("sim_report.csv", &report.to_csv())?;
            Ok(report.rows.iter().all(|r| r.dropped() == 0))
        }
        Cmd::SynthGcl(c) => {
            let s = synth_gcl(&c.model()?)?;
            c.write("config.json", &s.model.to_json())?;
            c.write("gcl.csv", &s.gcl_csv())?;
            c.write("eta.csv", &s.eta_csv())?;
            Ok(true)
        }
        Cmd::Route { common: c, bridges } => {
            let model = c.model()?;
            let k = bridges.unwrap_or_else(|| model.nodes.iter().filter(|n| n.kind == tsn_model::NodeKind::Switch).count().max(1));
            let r = route(&model, k)?;
            c.write("routes.csv", &r.routes_csv())?;
            c.write("cost.csv", &r.cost_csv())?;
            c.write("faults.csv", &r.faults_csv())?;
            c.write("config.json", &r.config_json())?;
            Ok(r.solution.schedulable() && r.faults.iter().all(|f| f.intact))
        }
        Cmd::Compare(c) => {
            let model = c.model()?;
            let combos = c.combos().unwrap_or_else(|| Combo::ALL.to_vec());
            let runs = compare(&model, &combos, &c.options(&model)?, &c.sim_options())?;
            c.write("compare.csv", &comparison_csv(&runs))?;
            for r in &runs {
                println!("{}: {}", r.combo, if r.passed() { "PASS" } else { "FAIL" });
            }
            Ok(runs.iter().all(Comparison::passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant violated; see the reports");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
