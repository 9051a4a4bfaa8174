use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use deba::config::load_scenario;
use deba::csv::emit_csv;
use deba::error::{ConfigError, Error};
use deba::par::Execution;
use deba::sim::{improvement, run, run_batch, summarize, Mode, RunOutput, Summary};

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode `{s}` (deba-p1, deba-p1p2, no-opt, greedy)"))
}

/// Run a WBAN aggregation scenario and write per-epoch metrics as CSV.
#[derive(Debug, Parser)]
#[command(name = "deba", version)]
struct Args {
    /// Scenario file (key = value lines).
    #[arg(long)]
    scenario: PathBuf,
    /// Policy to run; defaults to the scenario's mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// RNG seed; falls back to $DEBA_SEED, then to the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// CSV output path.
    #[arg(long, default_value = "deba.csv")]
    out: PathBuf,
    /// Also run this policy on the same seed and report improvements.
    #[arg(long, value_parser = parse_mode)]
    compare: Option<Mode>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Model(_) => 1,
        Error::Io { .. } => 2,
    }
}

fn companion_path(out: &Path, mode: Mode) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("deba");
    out.with_file_name(format!("{stem}.{mode}.csv"))
}

type Row = (&'static str, fn(&Summary) -> f64);

fn print_table(main: (&Mode, &Summary), other: Option<(&Mode, &Summary)>) {
    let rows: [Row; 8] = [
        ("traffic generated (bits)", |s| s.traffic_generated),
        ("traffic served (bits)", |s| s.traffic_served),
        ("energy consumed (J)", |s| s.energy_consumed),
        ("aggregation cost", |s| s.cost_total),
        ("cost per WBAN-epoch", |s| s.cost_per_wban_epoch()),
        ("mean delay (s)", |s| s.mean_aggregation_delay),
        ("objective", |s| s.objective),
        ("mean WBANs alive", |s| s.mean_wbans_alive),
    ];
    let (m, s) = main;
    match other {
        None => {
            println!("{:<26}{:>16}", "metric", m.as_str());
            for (name, f) in rows {
                println!("{name:<26}{:>16.6e}", f(s));
            }
        }
        Some((b, base)) => {
            println!("{:<26}{:>16}{:>16}", "metric", m.as_str(), b.as_str());
            for (name, f) in rows {
                println!("{name:<26}{:>16.6e}{:>16.6e}", f(s), f(base));
            }
            let imp = improvement(base, s);
            println!();
            println!("improvement of {m} over {b}:");
            println!("  energy consumption   {:+.2}%", imp.energy_reduction_pct);
            println!("  traffic served       {:+.2}%", imp.traffic_served_gain_pct);
            println!("  aggregation cost     {:+.2}%", imp.cost_reduction_pct);
            println!("  cost per WBAN-epoch  {:+.2}%", imp.cost_per_wban_epoch_reduction_pct);
            println!("  mean delay           {:+.2}%", imp.delay_reduction_pct);
        }
    }
    println!("constraint violations: {}", s.constraint_violations);
}

fn execute(args: Args) -> Result<(), Error> {
    let mut sc = load_scenario(&args.scenario)?;
    if let Some(m) = args.mode {
        sc.mode = m;
    }
    let seed = match args.seed {
        Some(s) => Some(s),
        None => match std::env::var("DEBA_SEED") {
            Ok(v) => Some(v.trim().parse::<u64>().map_err(|_| {
                ConfigError::Validation(format!("DEBA_SEED must be an unsigned integer, got `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(n) = args.epochs {
        if n == 0 {
            return Err(ConfigError::Validation("--epochs must be at least 1".into()).into());
        }
        sc = sc.with_epochs(n);
    }
    sc.validate()?;

    let (main, other): (RunOutput, Option<RunOutput>) = match args.compare {
        None => (run(&sc, Execution::Parallel)?, None),
        Some(b) => {
            let pair = [sc.clone(), deba::sim::Scenario { mode: b, ..sc.clone() }];
            let mut outs = run_batch(&pair, Execution::Parallel).into_iter();
            let a = outs.next().expect("two runs")?;
            let c = outs.next().expect("two runs")?;
            (a, Some(c))
        }
    };
    emit_csv(&main.reports, &args.out)?;
    let s_main = summarize(&main.reports)?;
    match &other {
        None => print_table((&main.mode, &s_main), None),
        Some(o) => {
            emit_csv(&o.reports, companion_path(&args.out, o.mode))?;
            let s_other = summarize(&o.reports)?;
            print_table((&main.mode, &s_main), Some((&o.mode, &s_other)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deba: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
