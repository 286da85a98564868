use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use nadrc_core::analysis::bounds::{lemma2_check, verify_theorem1, STEADY_FRACTION};
use nadrc_core::control::VariantKind;
use nadrc_core::harness::compare::compare_variants;
use nadrc_core::harness::export::{
    comparison_error_svg, comparison_svg, run_svg, trace_csv, write_text,
};
use nadrc_core::harness::{parse_scenario, run_scenario, RunResult, Scenario, BENCHMARK_SCENARIO};

#[derive(Parser)]
#[command(name = "nadrc", version, about = "Conventional vs nested-observer ADRC benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for generated files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Override the scenario's noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and export its trace.
    Run { scenario: PathBuf },
    /// Run both controller variants with and without noise and tabulate ITAE/ISU.
    Compare { scenario: PathBuf },
    /// Sweep observer bandwidth and compare steady errors with the analytic bound.
    VerifyBounds {
        scenario: PathBuf,
        /// Comma-separated bandwidths.
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
        omega0: Vec<f64>,
        /// Trailing fraction of the horizon used to estimate M.
        #[arg(long, default_value_t = 0.2)]
        m_window: f64,
    },
    /// Print the committed benchmark scenario (also written to the output directory).
    Demo,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Svg
    }
    fn svg(self) -> bool {
        self != Format::Csv
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut s = parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = seed {
        s.noise.seed = seed;
    }
    Ok(s)
}

fn out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run_stem(r: &RunResult) -> String {
    format!(
        "{}_{}_{}",
        r.name,
        r.variant.as_str(),
        if r.noisy { "noisy" } else { "clean" }
    )
}

fn write_run(r: &RunResult, cli: &Cli) -> Result<()> {
    let stem = run_stem(r);
    if cli.format.csv() {
        let path = cli.out_dir.join(format!("{stem}.csv"));
        write_text(&path, &trace_csv(&r.trace)?)?;
        println!("wrote {}", path.display());
    }
    if cli.format.svg() {
        let path = cli.out_dir.join(format!("{stem}.svg"));
        write_text(&path, &run_svg(r))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_run(cli: &Cli, file: &Path) -> Result<()> {
    let s = load(file, cli.seed)?;
    let r = run_scenario(&s).with_context(|| format!("run '{}' failed", s.name))?;
    println!(
        "{} {}: ITAE = {:.6}  ISU = {:.6}  ITAE(e3) = {:.6}{}",
        r.name,
        r.variant.label(),
        r.metrics.itae,
        r.metrics.isu,
        r.error_metrics.itae_e3,
        r.error_metrics
            .itae_zeta3
            .map_or(String::new(), |z| format!("  ITAE(zeta3) = {z:.6}"))
    );
    out_dir(&cli.out_dir)?;
    write_run(&r, cli)
}

fn cmd_compare(cli: &Cli, file: &Path) -> Result<()> {
    let s = load(file, cli.seed)?;
    let cmp = compare_variants(&s).context("comparison failed")?;
    print!("{}", cmp.table_text());
    out_dir(&cli.out_dir)?;
    if cli.format.csv() {
        let path = cli.out_dir.join(format!("{}_comparison.csv", s.name));
        write_text(&path, &cmp.table_csv())?;
        println!("wrote {}", path.display());
    }
    if cli.format.svg() {
        for (suffix, svg) in [("response", comparison_svg(&cmp)), ("errors", comparison_error_svg(&cmp))] {
            let path = cli.out_dir.join(format!("{}_{suffix}.svg", s.name));
            write_text(&path, &svg)?;
            println!("wrote {}", path.display());
        }
    }
    if cli.format.csv() {
        for r in cmp.runs() {
            let path = cli.out_dir.join(format!("{}.csv", run_stem(r)));
            write_text(&path, &trace_csv(&r.trace)?)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_bounds(cli: &Cli, file: &Path, omegas: &[f64], m_window: f64) -> Result<()> {
    let s = load(file, cli.seed)?.with_noise(false);
    let report = verify_theorem1(&s, omegas, m_window).context("bound sweep failed")?;
    println!(
        "P: lambda_min = {:.6}  lambda_max = {:.6}  residual = {:.2e}",
        report.lyapunov.lambda_min, report.lyapunov.lambda_max, report.lyapunov.residual
    );
    println!("{:>8} {:>3} {:>12} {:>14} {:>14} {:>10}", "omega0", "i", "M", "bound", "steady |e|", "ratio");
    for c in &report.cells {
        let m = report
            .m_estimates
            .iter()
            .find(|(w, _)| *w == c.omega0)
            .map_or(f64::NAN, |(_, m)| *m);
        println!(
            "{:>8} {:>3} {:>12.5} {:>14.6e} {:>14.6e} {:>10.4}{}",
            c.omega0,
            c.index,
            m,
            c.theoretical_bound,
            c.empirical_steady_error,
            c.ratio,
            if c.within() { "" } else { "  VIOLATED" }
        );
    }
    for i in 1..=report.order + 1 {
        match report.slope(i) {
            Some(v) => println!("log-log slope e{i}: {v:.4}"),
            None => println!("log-log slope e{i}: n/a"),
        }
    }
    let run = run_scenario(&s.with_variant(VariantKind::Conventional))
        .context("rate-inequality run failed")?;
    let lemma = lemma2_check(&run.trace, &s.inner.config().map_err(anyhow::Error::msg)?, STEADY_FRACTION)?;
    println!(
        "rate inequality: {}/{} steady samples ({:.2}%), slack {:.4e}, {} without slack",
        lemma.satisfied,
        lemma.samples,
        100.0 * lemma.fraction(),
        lemma.slack,
        lemma.strict_satisfied
    );
    if cli.format.csv() {
        out_dir(&cli.out_dir)?;
        let path = cli.out_dir.join(format!("{}_bounds.csv", s.name));
        write_text(&path, &report.to_csv())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_demo(cli: &Cli) -> Result<()> {
    print!("{BENCHMARK_SCENARIO}");
    out_dir(&cli.out_dir)?;
    let path = cli.out_dir.join("benchmark.scn");
    write_text(&path, BENCHMARK_SCENARIO)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario } => cmd_run(&cli, scenario),
        Command::Compare { scenario } => cmd_compare(&cli, scenario),
        Command::VerifyBounds {
            scenario,
            omega0,
            m_window,
        } => cmd_bounds(&cli, scenario, omega0, *m_window),
        Command::Demo => cmd_demo(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
