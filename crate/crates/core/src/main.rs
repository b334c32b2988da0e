use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anderson_gp::ensemble::{
    run_condensation, run_groundstate_scaling, run_shell_experiment, run_spectral_estimates, run_spectrum,
    write_records, EstimatesConfig, ExperimentKind, ExperimentPlan, RunRecord, Series, ShellsConfig,
    INVARIANT_SLACK,
};
use anderson_gp::Result;

#[derive(Parser)]
#[command(name = "anderson-gp", version, about = "Disorder ensembles for the lattice Gross-Pitaevskii problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Overlap of the GP minimizer with the linear ground state
    Condense(PlanArgs),
    /// Growth of the ground state energy with L
    Scaling(PlanArgs),
    /// Eigenvalue counting statistics on dense instances
    Estimates(PlanArgs),
    /// Frequency-shell bounds on the four-norm
    Shells(PlanArgs),
    /// Gaps and localization centers of the two lowest states
    Spectrum(PlanArgs),
}

#[derive(Args, Clone)]
struct PlanArgs {
    /// Master seed
    #[arg(long)]
    seed: u64,
    /// Config file of key = value lines; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    dim: Option<usize>,
    /// Comma separated, strictly increasing
    #[arg(long = "l-grid")]
    l_grid: Option<String>,
    /// `theorem`, `zero` or a comma separated list of couplings
    #[arg(long)]
    schedule: Option<String>,
    /// Constant of the theorem schedule
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Record stream path; series files are written next to it
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "tol-eig")]
    tol_eig: Option<f64>,
    #[arg(long = "tol-gp")]
    tol_gp: Option<f64>,
    /// `uniform`, `bernoulli:p` or `levels:a,b,...`
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long = "v-max")]
    v_max: Option<f64>,
    /// Multiplier of log L separating close from far localization centers
    #[arg(long)]
    lambda: Option<f64>,
}

impl PlanArgs {
    fn plan(&self, kind: ExperimentKind) -> Result<ExperimentPlan> {
        let mut plan = match &self.config {
            Some(path) => ExperimentPlan::from_config_file(path)?,
            None => {
                let mut p = ExperimentPlan::new(kind, 1, vec![], 1, self.seed);
                p.l_grid = vec![32];
                p
            }
        };
        plan.kind = kind;
        let pairs: [(&str, Option<String>); 12] = [
            ("dim", self.dim.map(|v| v.to_string())),
            ("l_grid", self.l_grid.clone()),
            ("schedule", self.schedule.clone()),
            ("c", self.c.map(|v| v.to_string())),
            ("samples", self.samples.map(|v| v.to_string())),
            ("seed", Some(self.seed.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("tol_eig", self.tol_eig.map(|v| v.to_string())),
            ("tol_gp", self.tol_gp.map(|v| v.to_string())),
            ("distribution", self.distribution.clone()),
            ("v_max", self.v_max.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                plan.set(key, &v)?;
            }
        }
        plan.validate()?;
        Ok(plan)
    }
}

fn write_outputs(plan: &ExperimentPlan, records: &[RunRecord], series: &[Series]) -> Result<()> {
    if let Some(out) = &plan.out {
        write_records(out, records)?;
        for s in series {
            s.write_next_to(out)?;
        }
    }
    Ok(())
}

fn write_series(plan: &ExperimentPlan, series: &[Series]) -> Result<()> {
    if let Some(out) = &plan.out {
        for s in series {
            s.write_next_to(out)?;
        }
    }
    Ok(())
}

fn report_violations(records: &[RunRecord]) -> usize {
    let mut bad = 0;
    for r in records {
        let v = r.violations(INVARIANT_SLACK);
        if !v.is_empty() {
            bad += 1;
            eprintln!(
                "invariant violation at L={} sample={}: {}",
                r.l,
                r.provenance.sample_index,
                v.join(", ")
            );
        }
        if let Some(f) = &r.failure {
            eprintln!("sample failed at L={} sample={}: {f}", r.l, r.provenance.sample_index);
        }
    }
    bad
}

/// Returns whether every checked invariant held.
fn run(command: Command) -> Result<bool> {
    let (kind, args) = match command {
        Command::Condense(a) => (ExperimentKind::Condense, a),
        Command::Scaling(a) => (ExperimentKind::Scaling, a),
        Command::Estimates(a) => (ExperimentKind::Estimates, a),
        Command::Shells(a) => (ExperimentKind::Shells, a),
        Command::Spectrum(a) => (ExperimentKind::Spectrum, a),
    };
    let plan = args.plan(kind)?;
    let workers = args.workers.max(1);
    match kind {
        ExperimentKind::Condense => {
            let (records, summary) = run_condensation(&plan, workers)?;
            write_outputs(&plan, &records, &summary.series())?;
            println!("{summary}");
            Ok(report_violations(&records) == 0)
        }
        ExperimentKind::Scaling => {
            let (records, summary) = run_groundstate_scaling(&plan, workers)?;
            write_outputs(&plan, &records, &summary.series())?;
            println!("{summary}");
            Ok(report_violations(&records) == 0)
        }
        ExperimentKind::Spectrum => {
            let (records, summary) = run_spectrum(&plan, workers)?;
            write_outputs(&plan, &records, &summary.series())?;
            println!("{summary}");
            Ok(report_violations(&records) == 0)
        }
        ExperimentKind::Estimates => {
            let summary = run_spectral_estimates(&plan, &EstimatesConfig::default(), workers)?;
            write_series(&plan, &summary.series())?;
            println!("{summary}");
            Ok(true)
        }
        ExperimentKind::Shells => {
            let summary = run_shell_experiment(&plan, &ShellsConfig::default(), workers)?;
            write_series(&plan, &summary.series())?;
            println!("{summary}");
            Ok(summary.violations() == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
