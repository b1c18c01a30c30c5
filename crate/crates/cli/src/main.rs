use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use geac::batch::run_batch_files;
use geac::eac::{
    classical_margin, critical_clearing_angle, simulated_critical_clearing_angle, smib_equilibria, taylor_bridge,
    SmibScenario,
};
use geac::equilibria::find_equilibria;
use geac::error::GeacError;
use geac::model::{PolynomialOscillator, State};
use geac::oracle::{bisect_critical, oracle_classify, BoundaryCriterion, Classification, OracleOptions};
use geac::output::{
    columns, emit_batch, emit_outputs, structured_batch, structured_report, table_batch, table_report,
    vector_field_grid, OutputFormat,
};
use geac::reproduce::{ordering_checks, render_study, run_study};
use geac::scenario::{load_scenario, Scenario};
use geac::swing::{analyze, assess_post_fault, AssessmentOptions, FirstSwingArea, OverallVerdict};

/// Swing-by-swing transient stability assessment of polynomial oscillators.
#[derive(Parser)]
#[command(name = "geac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assess one scenario and print its per-swing report.
    Assess {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Assess many scenarios.
    Batch {
        /// Scenario files, in report order.
        #[arg(long = "scenario", required = true, num_args = 1..)]
        scenarios: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Classify a scenario by brute-force long-horizon simulation.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        /// Simulated horizon in seconds.
        #[arg(long, default_value_t = 400.0)]
        horizon: f64,
    },
    /// Bisect the initial speed (or angle) at which the verdict flips.
    Critical {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Vary::Omega)]
        vary: Vary,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        /// Only count escapes within the first `k` swings.
        #[arg(long)]
        swing: Option<usize>,
        #[arg(long, default_value_t = 400.0)]
        horizon: f64,
    },
    /// Classical equal-area analysis of an SMIB fault scenario.
    EacClassical {
        #[arg(long)]
        scenario: PathBuf,
        /// Clearing angle to score; defaults to the angle reached at `tc`.
        #[arg(long)]
        delta_c: Option<f64>,
        /// Taylor orders to compare against the closed form.
        #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7, 9])]
        orders: Vec<usize>,
    },
    /// Compare the four reference clearance states on both cubic models.
    ReproducePaper {
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[command(flatten)]
        tuning: Tuning,
        /// Write the comparison to `<prefix>.txt` as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase-plane vector field on a grid.
    VectorField {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, num_args = 2, allow_hyphen_values = true, default_values_t = [-4.0, 3.0])]
        delta_range: Vec<f64>,
        #[arg(long, num_args = 2, allow_hyphen_values = true, default_values_t = [-1.0, 1.0])]
        omega_range: Vec<f64>,
        #[arg(long, default_value_t = 25)]
        n: usize,
        /// Write to `<prefix>_vector_field.dat` instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the polynomial scaling of the scenario.
    #[arg(long)]
    kappa: Option<f64>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Clone, Copy)]
struct Tuning {
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    max_swings: Option<usize>,
}

impl Tuning {
    fn apply(&self, mut o: AssessmentOptions) -> AssessmentOptions {
        o.rtol = self.rtol.unwrap_or(o.rtol);
        o.atol = self.atol.unwrap_or(o.atol);
        o.max_swings = self.max_swings.unwrap_or(o.max_swings);
        o
    }
}

#[derive(Args)]
struct OutArgs {
    /// Prefix for report and plot-data files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Exit with status 1 when any verdict is unstable.
    #[arg(long)]
    fail_on_unstable: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Structured,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => OutputFormat::Table,
            Format::Structured => OutputFormat::Structured,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Vary {
    Delta,
    Omega,
}

type CmdResult = Result<ExitCode, GeacError>;

struct Loaded {
    scenario: Scenario,
    model: PolynomialOscillator,
    init: State,
    options: AssessmentOptions,
}

impl RunArgs {
    fn load(&self) -> Result<Loaded, GeacError> {
        let mut scenario = load_scenario(&self.scenario)?;
        if let Some(k) = self.kappa {
            scenario = scenario.with_kappa(k);
            scenario.validate()?;
        }
        let model = scenario.model()?;
        let init = scenario.initial_state()?;
        let options = self.tuning.apply(scenario.assessment_options());
        if !(options.rtol > 0.0 && options.atol >= 0.0) || options.max_swings == 0 {
            return Err(GeacError::Validation(
                "tolerances and max-swings must be positive".into(),
            ));
        }
        Ok(Loaded {
            scenario,
            model,
            init,
            options,
        })
    }
}

fn assess(run: &RunArgs, out: &OutArgs) -> CmdResult {
    let l = run.load()?;
    let a = analyze(&l.model, l.init, &l.options)?;
    match out.format {
        Format::Table => print!("{}", table_report(&a.report)),
        Format::Structured => print!("{}", structured_report(&a.report)?),
    }
    eprintln!("overall: {:?}, min margin {:.4}", a.report.overall, a.report.min_margin);
    if let Some(prefix) = &out.out {
        emit_outputs(&l.model, &a, out.format.into(), prefix)?;
    }
    Ok(verdict_code(
        out.fail_on_unstable,
        a.report.overall == OverallVerdict::Unstable,
    ))
}

fn verdict_code(fail_on_unstable: bool, unstable: bool) -> ExitCode {
    if fail_on_unstable && unstable {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn batch(scenarios: &[PathBuf], parallel: usize, tuning: Tuning, out: &OutArgs) -> CmdResult {
    let entries = run_batch_files(scenarios, parallel, |mut s| {
        let o = tuning.apply(s.assessment_options());
        s.integrator.rtol = Some(o.rtol);
        s.integrator.atol = Some(o.atol);
        s.analysis.max_swings = Some(o.max_swings);
        s.validate()?;
        Ok(s)
    })?;
    let mut any_unstable = false;
    let mut worst: Option<&GeacError> = None;
    for e in &entries {
        match &e.outcome {
            Ok(a) => any_unstable |= a.report.overall == OverallVerdict::Unstable,
            Err(err) => {
                eprintln!("{}: {err}", e.name);
                if worst.is_none_or(|w| !w.is_numerical() && err.is_numerical()) {
                    worst = Some(err);
                }
            }
        }
    }
    let text = match out.format {
        Format::Table => table_batch(&entries),
        Format::Structured => structured_batch(&entries)?,
    };
    print!("{text}");
    if let Some(prefix) = &out.out {
        emit_batch(&entries, out.format.into(), prefix)?;
    }
    if let Some(err) = worst {
        return Ok(error_code(err));
    }
    Ok(verdict_code(out.fail_on_unstable, any_unstable))
}

fn oracle(run: &RunArgs, horizon: f64) -> CmdResult {
    let l = run.load()?;
    let eq = find_equilibria(&l.model)?;
    let opts = OracleOptions {
        rtol: l.options.rtol,
        atol: l.options.atol,
        max_time: horizon,
    };
    let v = oracle_classify(&l.model, &eq, l.init, &opts)?;
    println!("classification: {:?}", v.classification);
    if let (Some(e), Some(k)) = (v.first_escape_event, v.escape_swing) {
        println!(
            "escape: {:?} at t = {:.6}, delta = {:.6}, omega = {:.6}, swing {k}",
            e.kind, e.state.t, e.state.delta, e.state.omega
        );
    }
    let geac = assess_post_fault(&l.model, l.init, &l.options)?;
    let agrees = Classification::from(geac.overall) == v.classification;
    println!(
        "assessment: {:?} ({})",
        geac.overall,
        if agrees { "agrees" } else { "differs" }
    );
    Ok(ExitCode::SUCCESS)
}

fn critical(run: &RunArgs, vary: Vary, lo: f64, hi: f64, swing: Option<usize>, horizon: f64) -> CmdResult {
    let l = run.load()?;
    let opts = OracleOptions {
        rtol: l.options.rtol,
        atol: l.options.atol,
        max_time: horizon,
    };
    let criterion = swing.map_or(BoundaryCriterion::Overall, BoundaryCriterion::Swing);
    let base = l.init;
    let family = |c: f64| match vary {
        Vary::Omega => State { omega: c, ..base },
        Vary::Delta => State { delta: c, ..base },
    };
    let p = bisect_critical(&l.model, family, (lo, hi), criterion, &opts)?;
    println!("scenario: {}", l.scenario.name);
    println!("critical value: {:.9}", p.value);
    println!("bracket: [{:.9}, {:.9}]", p.bracket.0, p.bracket.1);
    match p.margin {
        Some(m) => println!("margin at critical value: {m:.6}"),
        None => println!("margin at critical value: not scored"),
    }
    println!("cross-validated: {}", p.cross_validated);
    Ok(ExitCode::SUCCESS)
}

fn smib_fault(path: &PathBuf) -> Result<(Scenario, SmibScenario, usize), GeacError> {
    let s = load_scenario(path)?;
    let (Some(m), Some(f)) = (s.model.smib, s.start.fault) else {
        return Err(GeacError::Validation(
            "eac-classical needs [model.smib] and [start.fault]".into(),
        ));
    };
    let smib = SmibScenario {
        h: m.h,
        d: m.d,
        omega_s: m.omega_s,
        pm: m.pm,
        pmax_pre: f.pmax_pre,
        pmax_fault: f.pmax_fault,
        pmax_post: m.pmax,
        t0: f.t0,
        tc: f.tc,
    };
    Ok((s, smib, m.order))
}

fn eac_classical(path: &PathBuf, delta_c: Option<f64>, orders: &[usize]) -> CmdResult {
    let (_, s, _) = smib_fault(path)?;
    let pre = smib_equilibria(&s.phase(1))?;
    let post = smib_equilibria(&s.phase(3))?;
    println!("pre-fault SEP: {:.6}", pre.delta_s);
    println!(
        "post-fault SEP: {:.6}, UEPs: {:.6}, {:.6}",
        post.delta_s, post.delta_u1, post.delta_u2
    );
    if !s.standing_assumption_holds() {
        println!("note: Pmax2 < Pm < Pmax3 < Pmax1 does not hold");
    }
    match critical_clearing_angle(&s) {
        Ok(dc) => {
            println!("critical clearing angle: {dc:.6}");
            let sim = simulated_critical_clearing_angle(&s, 1e-7)?;
            println!("simulated critical clearing angle: {sim:.6}");
        }
        Err(GeacError::NoCriticalAngle(arg)) => println!("no critical clearing angle (arccos argument {arg:.6})"),
        Err(e) => return Err(e),
    }
    let dc = match delta_c {
        Some(d) => d,
        None => geac::eac::clearing_state_at_time(&s)?.delta,
    };
    let r = classical_margin(&s, dc)?;
    println!(
        "clearing angle {dc:.6}: a_acc {:.6}, a_dec {:.6}, margin {:.6}",
        r.a_acc, r.a_dec, r.margin
    );
    for &n in orders {
        let (model, init) = taylor_bridge(&s, dc, n)?;
        let first = |area| -> Result<Option<f64>, GeacError> {
            let o = AssessmentOptions {
                max_swings: 1,
                first_swing_area: area,
                ..Default::default()
            };
            Ok(assess_post_fault(&model, init, &o)?.records.first().map(|r| r.margin))
        };
        let peak = first(FirstSwingArea::PeakKinetic)?;
        let clearance = first(FirstSwingArea::AtClearance)?;
        match (peak, clearance) {
            (Some(p), Some(c)) => println!(
                "order {n}: first-swing margin {c:.6} (clearance energy, |difference| {:.6}), {p:.6} (peak energy, |difference| {:.6})",
                (c - r.margin).abs(),
                (p - r.margin).abs()
            ),
            _ => println!("order {n}: no swing"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn reproduce(kappa: f64, tuning: Tuning, out: Option<&PathBuf>) -> CmdResult {
    let options = tuning.apply(AssessmentOptions {
        max_swings: 8,
        ..Default::default()
    });
    let cases = run_study(kappa, &options)?;
    let mut text = render_study(&cases, kappa);
    for label in ["approximant", "modified"] {
        let reports: Vec<_> = cases
            .iter()
            .filter(|c| c.model == label)
            .map(|c| c.report.clone())
            .collect();
        for check in ordering_checks(&reports) {
            text.push_str(&format!(
                "{label}: {} -> {}\n",
                check.name,
                if check.holds { "holds" } else { "fails" }
            ));
        }
    }
    print!("{text}");
    if let Some(prefix) = out {
        let mut p = prefix.as_os_str().to_owned();
        p.push(".txt");
        std::fs::write(PathBuf::from(p), &text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn vector_field(run: &RunArgs, dr: &[f64], wr: &[f64], n: usize, out: Option<&PathBuf>) -> CmdResult {
    let l = run.load()?;
    if n < 2 || !(dr[0] < dr[1]) || !(wr[0] < wr[1]) {
        return Err(GeacError::Validation("grid needs n >= 2 and increasing ranges".into()));
    }
    let rows = vector_field_grid(&l.model, (dr[0], dr[1]), (wr[0], wr[1]), n, n);
    let text = columns("delta omega ddelta domega", &rows);
    match out {
        Some(prefix) => {
            let mut p = prefix.as_os_str().to_owned();
            p.push("_vector_field.dat");
            std::fs::write(PathBuf::from(p), text)?;
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn error_code(e: &GeacError) -> ExitCode {
    if e.is_numerical() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Assess { run, out } => assess(run, out),
        Command::Batch {
            scenarios,
            parallel,
            tuning,
            out,
        } => batch(scenarios, *parallel, *tuning, out),
        Command::Oracle { run, horizon } => oracle(run, *horizon),
        Command::Critical {
            run,
            vary,
            lo,
            hi,
            swing,
            horizon,
        } => critical(run, *vary, *lo, *hi, *swing, *horizon),
        Command::EacClassical {
            scenario,
            delta_c,
            orders,
        } => eac_classical(scenario, *delta_c, orders),
        Command::ReproducePaper { kappa, tuning, out } => reproduce(*kappa, *tuning, out.as_ref()),
        Command::VectorField {
            run,
            delta_range,
            omega_range,
            n,
            out,
        } => vector_field(run, delta_range, omega_range, *n, out.as_ref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}
