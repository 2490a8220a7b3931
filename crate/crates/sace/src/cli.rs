//! Command-line front end: subcommands for each analysis mode with
//! deterministic CSV or aligned-table output.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bayes::{sample_compatible, sample_zr_posterior, summarize, BayesConfig, BayesSummary};
use crate::bounds::{
    large_sample_bounds, survivor_contrast, sweep, true_sace, zr_bounds, observable_from_truth,
    BoundsStatus,
};
use crate::copula::{CopulaFamily, CopulaSpec, RHO_MAX};
use crate::error::{Error, Result};
use crate::input::{parse_input_file, ParsedInput};
use crate::model::Arm;

#[derive(Debug, Parser)]
#[command(
    name = "sace",
    about = "Bounds on the survivor average causal effect from multiple follow-up times"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Plackett,
    Gaussian,
    Independence,
}

impl From<FamilyArg> for CopulaFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Plackett => CopulaFamily::Plackett,
            FamilyArg::Gaussian => CopulaFamily::Gaussian,
            FamilyArg::Independence => CopulaFamily::Independence,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    PrettyTable,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Input file (TOML; see docs/input-format.md).
    #[arg(long)]
    input: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Suppress informational messages on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Copula family for the survival-time coupling.
    #[arg(long, value_enum, default_value = "plackett")]
    copula: FamilyArg,
    /// Spearman grid: a comma-separated list or start:stop:step.
    #[arg(long, default_value = "0:0.9:0.1")]
    rho: String,
}

#[derive(Debug, Args)]
struct BayesArgs {
    /// Accepted-draw target per grid value.
    #[arg(long, default_value_t = 4000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total proposal budget per grid value.
    #[arg(long, default_value_t = 2_000_000)]
    budget: usize,
    /// Credible level for the shortest joint interval.
    #[arg(long, default_value_t = 0.95)]
    cred: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Large-sample bounds over a Spearman grid, with envelope.
    LargeSample {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Posterior medians and shortest joint credible intervals from counts.
    Bayes {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        bayes: BayesArgs,
    },
    /// Comparison bounds using only survival status at the measurement time.
    Zr {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Naive survivor contrast and its point-identification flag.
    Contrast {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate a ground truth: true SACE, observables, bound containment.
    TruthCheck {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
}

/// Parses "a,b,c" or "start:stop:step" into an ascending grid.
fn parse_rho_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidInput(format!("--rho: {msg}"));
    let mut grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("expected start:stop:step, got {text:?}")));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 {
            return Err(bad(format!("step must be positive, got {step}")));
        }
        let mut grid = Vec::new();
        let mut i = 0u32;
        loop {
            let v = start + f64::from(i) * step;
            if v > stop + step * 1e-9 {
                break;
            }
            grid.push(v.min(stop));
            i += 1;
        }
        grid
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?
    };
    if grid.is_empty() {
        return Err(bad("empty grid".into()));
    }
    for &v in &grid {
        if !(0.0..=RHO_MAX).contains(&v) {
            return Err(bad(format!("value {v} outside [0, {RHO_MAX}]")));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Column label of the native-parameter column for a family.
fn param_label(family: CopulaFamily) -> &'static str {
    match family {
        CopulaFamily::Plackett => "log_phi",
        CopulaFamily::Gaussian => "r",
        CopulaFamily::Independence => "param",
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

/// Renders rows as CSV (LF line endings) or an aligned table.
fn render(header: &[&str], rows: &[Vec<String>], format: FormatArg) -> String {
    match format {
        FormatArg::Csv => {
            let mut out = String::new();
            out.push_str(&header.join(","));
            out.push('\n');
            for row in rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        FormatArg::PrettyTable => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for row in rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: Vec<&str>| {
                cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{:>width$}", c, width = widths[i]))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            let mut out = line(header.to_vec());
            out.push('\n');
            for row in rows {
                out.push_str(&line(row.iter().map(String::as_str).collect()));
                out.push('\n');
            }
            out
        }
    }
}

fn emit(common: &CommonArgs, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn want_large_sample(input: ParsedInput) -> Result<crate::model::LargeSampleInput> {
    match input {
        ParsedInput::LargeSample(ls) => Ok(ls),
        _ => Err(Error::InvalidInput(
            "this subcommand requires an input file with mode = \"large_sample\"".into(),
        )),
    }
}

fn run_large_sample(common: &CommonArgs, grid: &GridArgs) -> Result<()> {
    let input = want_large_sample(parse_input_file(&common.input)?)?;
    let family: CopulaFamily = grid.copula.into();
    let rho_grid = parse_rho_grid(&grid.rho)?;
    let result = sweep(&input, family, &rho_grid)?;
    let zr_width = result.zr.width();
    let mut rows = Vec::new();
    for row in &result.rows {
        let r = &row.result;
        let (lower, upper, rel) = match r.status {
            BoundsStatus::Ok => (
                fmt(r.lower),
                fmt(r.upper),
                row.relative_length.map(fmt).unwrap_or_default(),
            ),
            BoundsStatus::Infeasible => ("infeasible".into(), "infeasible".into(), String::new()),
            BoundsStatus::Degenerate => ("degenerate".into(), "degenerate".into(), String::new()),
        };
        rows.push(vec![fmt(r.rho), fmt(r.param), lower, upper, rel]);
    }
    let env = &result.envelope;
    rows.push(vec![
        "ENVELOPE".into(),
        String::new(),
        fmt(env.lower),
        fmt(env.upper),
        if zr_width > 0.0 {
            fmt(env.width() / zr_width)
        } else {
            String::new()
        },
    ]);
    let header = ["rho", param_label(family), "lower", "upper", "rel_length"];
    emit(common, &render(&header, &rows, common.format))
}

fn run_bayes(common: &CommonArgs, grid: &GridArgs, bayes: &BayesArgs) -> Result<()> {
    let ParsedInput::Counts(counts) = parse_input_file(&common.input)? else {
        return Err(Error::InvalidInput(
            "bayes requires an input file with mode = \"counts\"".into(),
        ));
    };
    let family: CopulaFamily = grid.copula.into();
    let rho_grid = parse_rho_grid(&grid.rho)?;
    let cfg = BayesConfig {
        n_draws: bayes.draws,
        max_attempts: bayes.budget,
        seed: bayes.seed,
        credible_level: bayes.cred,
    };

    let (zr_draws, zr_rate) = sample_zr_posterior(&counts, &cfg)?;
    let zr_summary = summarize(&zr_draws, cfg.credible_level, zr_rate)?;
    let zr_width = zr_summary.median_upper - zr_summary.median_lower;
    let zr_ci_width = zr_summary.ci.b - zr_summary.ci.a;

    let mut rows = Vec::new();
    for &rho in &rho_grid {
        let spec = CopulaSpec::from_spearman(family, rho)?;
        if !common.quiet {
            eprintln!("sampling at rho = {rho:.4} ...");
        }
        let (draws, rate) = sample_compatible(&counts, &spec, &cfg)?;
        let pairs: Vec<(f64, f64)> = draws.iter().map(|d| (d.lower, d.upper)).collect();
        let s = summarize(&pairs, cfg.credible_level, rate)?;
        rows.push(bayes_row(
            fmt(rho),
            fmt(spec.report_param()),
            &s,
            zr_width,
            zr_ci_width,
        ));
    }
    rows.push(bayes_row(
        "ZR".into(),
        String::new(),
        &zr_summary,
        zr_width,
        zr_ci_width,
    ));
    let header = [
        "rho",
        param_label(family),
        "lower",
        "upper",
        "rel_length",
        "ci_lower",
        "ci_upper",
        "ci_rel_length",
        "acceptance_rate",
    ];
    emit(common, &render(&header, &rows, common.format))
}

fn bayes_row(
    rho: String,
    param: String,
    s: &BayesSummary,
    zr_width: f64,
    zr_ci_width: f64,
) -> Vec<String> {
    let rel = |w: f64, denom: f64| {
        if denom > 0.0 {
            fmt(w / denom)
        } else {
            String::new()
        }
    };
    vec![
        rho,
        param,
        fmt(s.median_lower),
        fmt(s.median_upper),
        rel(s.median_upper - s.median_lower, zr_width),
        fmt(s.ci.a),
        fmt(s.ci.b),
        rel(s.ci.b - s.ci.a, zr_ci_width),
        fmt(s.acceptance_rate),
    ]
}

fn run_zr(common: &CommonArgs) -> Result<()> {
    let input = want_large_sample(parse_input_file(&common.input)?)?;
    let b = zr_bounds(&input)?;
    let rows = vec![vec![fmt(b.lower), fmt(b.upper)]];
    emit(common, &render(&["lower", "upper"], &rows, common.format))
}

fn run_contrast(common: &CommonArgs) -> Result<()> {
    let input = want_large_sample(parse_input_file(&common.input)?)?;
    let c = survivor_contrast(&input)?;
    let rows = vec![vec![fmt(c.value), c.point_identified.to_string()]];
    emit(
        common,
        &render(&["value", "point_identified"], &rows, common.format),
    )
}

fn run_truth_check(common: &CommonArgs, grid: &GridArgs) -> Result<()> {
    let ParsedInput::Truth { truth, copula } = parse_input_file(&common.input)? else {
        return Err(Error::InvalidInput(
            "truth-check requires an input file with mode = \"ground_truth\"".into(),
        ));
    };
    // Coupling: file metadata wins; otherwise the CLI flags must pin a
    // single grid value.
    let (family, rho) = match copula {
        Some(c) => (c.family, c.rho),
        None => {
            let g = parse_rho_grid(&grid.rho)?;
            if g.len() != 1 {
                return Err(Error::InvalidInput(
                    "truth file has no [truth.copula]; pass --copula and a single --rho value"
                        .into(),
                ));
            }
            (grid.copula.into(), g[0])
        }
    };
    let spec = CopulaSpec::from_spearman(family, rho)?;
    let sace = true_sace(&truth)?;
    let observable = observable_from_truth(&truth)?;
    let bounds = large_sample_bounds(&observable, &spec)?;
    let contained = bounds.status == BoundsStatus::Ok
        && bounds.lower - 1e-9 <= sace
        && sace <= bounds.upper + 1e-9;

    let mut rows = vec![
        vec!["true_sace".into(), fmt(sace)],
        vec!["copula_family".into(), family.name().into()],
        vec!["rho".into(), fmt(rho)],
        vec!["bound_lower".into(), fmt(bounds.lower)],
        vec!["bound_upper".into(), fmt(bounds.upper)],
        vec!["contained".into(), contained.to_string()],
    ];
    let k = truth.schedule.k();
    for t in 0..=k {
        rows.push(vec![
            format!("pi_treated_{t}"),
            fmt(observable.marginals.pi(Arm::Treated, t)),
        ]);
    }
    for t in 0..=k {
        rows.push(vec![
            format!("pi_control_{t}"),
            fmt(observable.marginals.pi(Arm::Control, t)),
        ]);
    }
    for t in truth.schedule.t()..=k {
        rows.push(vec![
            format!("alpha_treated_{t}"),
            fmt(observable.risks.alpha(Arm::Treated, t)),
        ]);
    }
    for t in truth.schedule.t()..=k {
        rows.push(vec![
            format!("alpha_control_{t}"),
            fmt(observable.risks.alpha(Arm::Control, t)),
        ]);
    }
    emit(common, &render(&["quantity", "value"], &rows, common.format))
}

/// Runs the CLI and maps errors to exit codes: 0 success, 2 invalid input,
/// 3 data incompatible with the assumptions, 4 rejection budget exhausted.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::LargeSample { common, grid } => run_large_sample(common, grid),
        Command::Bayes {
            common,
            grid,
            bayes,
        } => run_bayes(common, grid, bayes),
        Command::Zr { common } => run_zr(common),
        Command::Contrast { common } => run_contrast(common),
        Command::TruthCheck { common, grid } => run_truth_check(common, grid),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::AllInfeasible | Error::Degenerate(_) => 3,
                Error::BudgetExhausted { .. } => 4,
                _ => 2,
            }
        }
    }
}
