use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use swstream::error_bounds::total_bound;
use swstream::exponents::GallagerCurves;
use swstream::info_measures::{check_positive_dispersions, profile};
use swstream::md_analysis::{
    g_curves, g_values, gain_region, grid, nu_nonstreaming, nu_streaming_lower, nu_two_delays,
    L_constant,
};
use swstream::simulator::{run, run_with_jobs};
use swstream::source_model::parse_source;
use swstream::{
    BoundInputs, BoundaryTarget, Case, Error, RateSpec, Schedule, Side, SimConfig, SourceFamily,
};

mod config;

#[derive(Parser, Debug)]
#[command(
    name = "swstream",
    version,
    about = "Streaming Slepian-Wolf analysis and simulation"
)]
struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Show entropies and exponents in bits.
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropies and varentropies of a source.
    Analyze(AnalyzeArgs),
    /// Error exponents at a rate pair.
    Exponent(ExponentArgs),
    /// Moderate-deviations constants for a boundary point.
    MdConstant(MdArgs),
    /// Gain-region thresholds g1, g2.
    GainRegion(GainArgs),
    /// Encode windows and the decode plan for one block.
    Schedule(ScheduleArgs),
    /// Monte Carlo error rates.
    Simulate(SimArgs),
    /// Union bound by error family.
    Bound(BoundArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct AnalyzeArgs {
    #[arg(long)]
    source: String,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ExponentArgs {
    #[arg(long)]
    source: String,
    #[arg(long, allow_hyphen_values = true)]
    rx: f64,
    #[arg(long, allow_hyphen_values = true)]
    ry: f64,
    /// Fixed gamma; otherwise the infimum over gamma is reported.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MdArgs {
    #[arg(long)]
    source: String,
    #[arg(long)]
    case: Case,
    #[arg(long, allow_hyphen_values = true)]
    rx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ry: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta1: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta2: f64,
    #[arg(long, default_value_t = 1)]
    delay: usize,
    #[arg(long)]
    delay2: Option<usize>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct GainArgs {
    /// A descriptor, or a family name when `--grid` is given.
    #[arg(long)]
    source: String,
    /// `lo:hi:step` over the family parameter.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "theta2")]
    theta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "theta1")]
    theta2: Option<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ScheduleArgs {
    #[arg(long)]
    psi: usize,
    #[arg(long)]
    omega: usize,
    #[arg(long)]
    delay: usize,
    #[arg(long)]
    k: usize,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SimArgs {
    #[arg(long)]
    source: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    psi: usize,
    #[arg(long)]
    omega: usize,
    #[arg(long)]
    delay: usize,
    #[arg(long)]
    blocks: usize,
    #[arg(long)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rate of the X encoder in nats per symbol.
    #[arg(long)]
    rate_x: Option<f64>,
    #[arg(long)]
    rate_y: Option<f64>,
    /// Bin counts, as an alternative to rates.
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    case: Option<Case>,
    #[arg(long, allow_hyphen_values = true)]
    theta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta2: Option<f64>,
    /// xi_n = n^{-t}.
    #[arg(long)]
    xi_t: Option<f64>,
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BoundArgs {
    #[arg(long)]
    source: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    psi: usize,
    #[arg(long)]
    omega: usize,
    #[arg(long)]
    delay: usize,
    #[arg(long)]
    rx: f64,
    #[arg(long)]
    ry: f64,
    #[arg(long)]
    k: usize,
}

struct Ctx {
    out: Box<dyn Write>,
    bits: bool,
    jobs: Option<usize>,
}

impl Ctx {
    fn nats(&self, v: f64) -> f64 {
        if self.bits {
            v / std::f64::consts::LN_2
        } else {
            v
        }
    }

    fn nats2(&self, v: f64) -> f64 {
        if self.bits {
            v / (std::f64::consts::LN_2 * std::f64::consts::LN_2)
        } else {
            v
        }
    }
}

fn analyze(ctx: &mut Ctx, a: &AnalyzeArgs) -> Result<()> {
    let p = profile(&parse_source(&a.source)?);
    writeln!(ctx.out, "measure,value")?;
    for (name, v) in p.rows() {
        let v = if name.starts_with('V') {
            ctx.nats2(v)
        } else {
            ctx.nats(v)
        };
        writeln!(ctx.out, "{name},{v}")?;
    }
    Ok(())
}

fn exponent(ctx: &mut Ctx, a: &ExponentArgs) -> Result<()> {
    let pmf = parse_source(&a.source)?;
    if !(a.rx >= 0.0 && a.ry >= 0.0) {
        bail!("rates must be non-negative");
    }
    let c = GallagerCurves::new(&pmf);
    writeln!(ctx.out, "side,gamma,exponent")?;
    match a.gamma {
        Some(g) => {
            if !(0.0..=1.0).contains(&g) {
                bail!("gamma must lie in [0, 1]");
            }
            for side in [Side::X, Side::Y] {
                writeln!(
                    ctx.out,
                    "{side},{g},{}",
                    ctx.nats(c.exponent(side, a.rx, a.ry, g))
                )?;
            }
        }
        None => {
            let mut best = f64::INFINITY;
            for side in [Side::X, Side::Y] {
                let m = c.min_exponent_over_gamma(side, a.rx, a.ry);
                best = best.min(m.value);
                writeln!(ctx.out, "{side},{},{}", m.gamma, ctx.nats(m.value))?;
            }
            writeln!(ctx.out, "min,,{}", ctx.nats(best))?;
        }
    }
    Ok(())
}

fn md_constant(ctx: &mut Ctx, a: &MdArgs) -> Result<()> {
    let p = profile(&parse_source(&a.source)?);
    if !check_positive_dispersions(&p) {
        bail!("source has a zero dispersion");
    }
    let t = match (a.rx, a.ry) {
        (Some(rx), Some(ry)) => BoundaryTarget::new(&p, a.case, rx, ry, a.theta1, a.theta2)?,
        (None, None) => BoundaryTarget::canonical(&p, a.case, a.theta1, a.theta2)?,
        _ => bail!("--rx and --ry must be given together"),
    };
    let ns = nu_nonstreaming(&p, &t)?;
    let s = nu_streaming_lower(&p, &t, a.delay)?;
    let l = L_constant(&p, &t)?;
    write!(
        ctx.out,
        "case,rx,ry,theta1,theta2,delay,nu_nonstreaming,nu_streaming_lower,L_constant"
    )?;
    if a.delay2.is_some() {
        write!(ctx.out, ",delay2,nu_two_delays")?;
    }
    writeln!(ctx.out)?;
    write!(
        ctx.out,
        "{},{},{},{},{},{},{ns},{s},{l}",
        t.case, t.rx, t.ry, t.theta1, t.theta2, a.delay
    )?;
    if let Some(d2) = a.delay2 {
        write!(ctx.out, ",{d2},{}", nu_two_delays(&p, &t, a.delay, d2)?)?;
    }
    writeln!(ctx.out)?;
    Ok(())
}

fn gain(ctx: &mut Ctx, a: &GainArgs) -> Result<()> {
    let theta = a.theta1.zip(a.theta2);
    write!(ctx.out, "param,g1,g2")?;
    if theta.is_some() {
        write!(ctx.out, ",ratio,holds_gain_t,binding")?;
    }
    writeln!(ctx.out)?;
    let rows: Vec<(String, swstream::SourceProfile)> = match &a.grid {
        Some(g) => {
            let parts: Vec<f64> = g
                .split(':')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| anyhow!("bad grid `{g}`"))
                })
                .collect::<Result<_>>()?;
            let [lo, hi, step] = parts[..] else {
                bail!("grid must be lo:hi:step");
            };
            let family = SourceFamily::parse(&a.source)?;
            let pts = grid(lo, hi, step)?;
            // validates every point before anything is printed
            g_curves(family, &pts)?;
            pts.iter()
                .map(|&x| Ok((x.to_string(), profile(&family.make(x)?))))
                .collect::<Result<_>>()?
        }
        None => {
            let pmf = parse_source(&a.source)?;
            let param = match a.source.split_once('=') {
                Some((_, v)) if !a.source.starts_with("custom:") => v.trim().to_string(),
                _ => String::new(),
            };
            vec![(param, profile(&pmf))]
        }
    };
    for (param, p) in rows {
        let (g1, g2) = g_values(&p)?;
        write!(ctx.out, "{param},{g1},{g2}")?;
        if let Some((t1, t2)) = theta {
            let v = gain_region(&p, t1, t2)?;
            write!(ctx.out, ",{},{},{}", v.ratio, v.holds_gain_t, v.binding)?;
        }
        writeln!(ctx.out)?;
    }
    Ok(())
}

fn schedule(ctx: &mut Ctx, a: &ScheduleArgs) -> Result<()> {
    let s = Schedule::new(a.psi, a.omega, a.delay)?;
    let plan = s.decode_plan(a.k)?;
    let mut text = io::stdout().lock();
    writeln!(
        text,
        "# psi={} omega={} delay={} k={}",
        a.psi, a.omega, a.delay, a.k
    )?;
    writeln!(
        text,
        "# encode window of f_{}: {}",
        a.k,
        s.encode_window(a.k)?
    )?;
    match plan.q {
        Some(q) => writeln!(text, "# q={q} decode time T_k={}", plan.decode_time)?,
        None => writeln!(
            text,
            "# initial phase, decode time T_k={}",
            plan.decode_time
        )?,
    }
    writeln!(text, "# buffer timeline")?;
    for tau in 1..=plan.decode_time {
        let w = s.buffer_contents(tau)?;
        let row: String = (1..=plan.decode_time)
            .map(|b| if w.contains(b) { '#' } else { '.' })
            .collect();
        writeln!(text, "#   {tau:>4} {row}  {w}")?;
    }
    let groups = plan.coarse_groups(&s);
    if !groups.is_empty() {
        writeln!(text, "# grouped steps")?;
        for (i, g) in groups.iter().enumerate() {
            writeln!(
                text,
                "#   {}: blocks {:<10} codewords {}",
                i + 1,
                g.blocks.to_string(),
                g.codewords
            )?;
        }
    }
    drop(text);
    writeln!(ctx.out, "stage,block_lo,block_hi,cw_lo,cw_hi,bin_family")?;
    for (i, st) in plan.stages.iter().enumerate() {
        writeln!(
            ctx.out,
            "{},{},{},{},{},{}",
            i + 1,
            st.targets.lo,
            st.targets.hi,
            st.codewords.lo,
            st.codewords.hi,
            st.family
        )?;
    }
    Ok(())
}

fn simulate(ctx: &mut Ctx, a: &SimArgs) -> Result<()> {
    let pmf = parse_source(&a.source)?;
    let schedule = Schedule::new(a.psi, a.omega, a.delay)?;
    let rates = match (a.rate_x, a.rate_y, a.n1, a.n2, a.case) {
        (Some(rx), Some(ry), None, None, None) => RateSpec::Rates { rx, ry },
        (None, None, Some(n1), Some(n2), None) => RateSpec::Bins { n1, n2 },
        (None, None, None, None, Some(case)) => {
            let (Some(t1), Some(t2), Some(t)) = (a.theta1, a.theta2, a.xi_t) else {
                bail!("--case needs --theta1, --theta2 and --xi-t");
            };
            let p = profile(&pmf);
            RateSpec::Md {
                target: BoundaryTarget::canonical(&p, case, t1, t2)?,
                t,
            }
        }
        _ => bail!(
            "give exactly one of --rate-x/--rate-y, --n1/--n2, or --case with theta and --xi-t"
        ),
    };
    let mut cfg = SimConfig::new(pmf, a.n, schedule, rates, a.blocks, a.trials, a.seed);
    if let Some(cap) = a.cap {
        cfg.cap = cap;
    }
    let r = match ctx.jobs {
        Some(j) => run_with_jobs(&cfg, j)?,
        None => run(&cfg)?,
    };
    let mut text = io::stdout().lock();
    writeln!(text, "# bins N1={} N2={}", r.n1, r.n2)?;
    writeln!(
        text,
        "# sup_eps={} ci=[{}, {}]",
        r.sup_eps, r.sup_ci.0, r.sup_ci.1
    )?;
    if let Some(nu) = r.nu_hat {
        writeln!(
            text,
            "# nu_hat={nu} (finite-n diagnostic; the constants are n -> infinity limits)"
        )?;
    }
    writeln!(
        text,
        "# survivors mean={:.2} max={} wall={:.3}s",
        r.mean_survivors, r.max_survivors, r.wall_secs
    )?;
    drop(text);
    writeln!(ctx.out, "k,errors,trials,eps_hat,ci_lo,ci_hi")?;
    for b in &r.per_block {
        writeln!(
            ctx.out,
            "{},{},{},{},{},{}",
            b.k, b.errors, b.trials, b.eps_hat, b.ci_lo, b.ci_hi
        )?;
    }
    Ok(())
}

fn bound(ctx: &mut Ctx, a: &BoundArgs) -> Result<()> {
    let pmf = parse_source(&a.source)?;
    let s = Schedule::new(a.psi, a.omega, a.delay)?;
    let inp = BoundInputs::new(&pmf, a.n, s, a.rx, a.ry, a.k)?;
    let b = total_bound(&pmf, &inp)?;
    if b.terms.iter().any(|t| t.extrapolated) {
        println!("# family 4 is an extrapolation outside the analyzed regime");
    }
    writeln!(ctx.out, "family,log_bound,span,exponent")?;
    for t in &b.terms {
        writeln!(
            ctx.out,
            "{},{},{},{}",
            t.family, t.log_bound, t.span, t.exponent
        )?;
    }
    writeln!(ctx.out, "total,{},,", b.log_total)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    if cli.jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    let mut ctx = Ctx {
        out,
        bits: cli.bits,
        jobs: cli.jobs,
    };
    match &cli.command {
        Command::Analyze(a) => analyze(&mut ctx, a)?,
        Command::Exponent(a) => exponent(&mut ctx, a)?,
        Command::MdConstant(a) => md_constant(&mut ctx, a)?,
        Command::GainRegion(a) => gain(&mut ctx, a)?,
        Command::Schedule(a) => schedule(&mut ctx, a)?,
        Command::Simulate(a) => simulate(&mut ctx, a)?,
        Command::Bound(a) => bound(&mut ctx, a)?,
    }
    ctx.out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let msg = e.render().to_string();
            let head: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", head.join(" "));
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            match e.downcast_ref::<Error>() {
                Some(Error::CapExceeded { .. }) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
