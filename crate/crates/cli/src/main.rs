mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use treeshift::families::{converse_orbit, sft_approximation_gap, GapVerdict, BUILTINS};
use treeshift::openness::{bounded_openness_check, Verdict};
use treeshift::sft::format::parse_forbidden_file;
use treeshift::sft::DEFAULT_BUDGET;
use treeshift::shadowing::{
    parse_orbit_file, perturb_orbit, random_pseudo_orbit, shadowing_bound, trace_construct, verify_pseudo_orbit,
    verify_tracing, write_orbit_file, PseudoOrbitFamily, TraceReport,
};
use treeshift::stability::{stability_pipeline, PipelineReport};
use treeshift::{Alphabets, Block, Error, Letter, Membership, Result, SftEngine, ShiftSpec};

use report::{block, count, tree, Format, Report, INCONCLUSIVE, PASS, USAGE, VIOLATION};

#[derive(Parser)]
#[command(name = "treeshift", version, about = "Analyses of tree-shifts over labelled trees")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// A built-in shift (see `list`).
    #[arg(long)]
    builtin: Option<String>,

    /// A forbidden-block file.
    #[arg(long)]
    shift: Option<PathBuf>,
}

#[derive(Args)]
struct ShiftArgs {
    #[command(flatten)]
    source: Source,

    /// Cap on the number of blocks enumerated at once.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrbitKind {
    /// Every child entry re-sampled from what its parent forces.
    Random,
    /// Exact windows of one sampled member.
    True,
    /// Exact windows re-sampled below the resolution.
    Perturbed,
    /// Members of the one-zero-per-row shift whose trace leaves the shift.
    Converse,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in shifts.
    List,
    /// Count (and optionally list) the blocks of height n.
    Blocks {
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(short = 'n')]
        n: usize,
        #[arg(long)]
        list: bool,
    },
    /// Trace a pseudo-orbit file by a member of the shift.
    Shadow {
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long)]
        orbit: PathBuf,
        /// Tracing level; defaults to the resolution of the file.
        #[arg(short = 'm')]
        m: Option<usize>,
    },
    /// Injectivize pseudo-orbits and check the maps built from them.
    Stability {
        #[command(flatten)]
        shift: ShiftArgs,
        /// A pseudo-orbit file; without it, random families are generated.
        #[arg(long)]
        orbit: Option<PathBuf>,
        #[arg(short = 'm', default_value_t = 1)]
        m: usize,
        /// Order of the random families.
        #[arg(short = 'N', default_value_t = 2)]
        order: usize,
        /// Number of random families.
        #[arg(long, default_value_t = 20)]
        runs: usize,
        /// Random members added to the sample trees of each run.
        #[arg(long, default_value_t = 4)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Look for preimage witnesses showing that shift maps are open.
    Openness {
        #[command(flatten)]
        shift: ShiftArgs,
        /// Direction; all directions when omitted.
        #[arg(short = 'i')]
        i: Option<Letter>,
        /// Cylinder block, symbols in canonical node order.
        #[arg(long, conflicts_with = "n")]
        block: Option<String>,
        /// Check every cylinder of height n (default 1).
        #[arg(short = 'n')]
        n: Option<usize>,
        #[arg(long, default_value_t = 3)]
        probe_depth: usize,
    },
    /// Whether the shift has no isolated points.
    Perfect {
        #[command(flatten)]
        shift: ShiftArgs,
    },
    /// Whether the shift is empty.
    Empty {
        #[command(flatten)]
        shift: ShiftArgs,
    },
    /// Compare the shift with the shift of finite type allowing its height-n blocks.
    Gap {
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(short = 'n')]
        n: usize,
        /// Check every height from 1 to n.
        #[arg(long)]
        through: bool,
    },
    /// Print the forbidden-block file of a shift of finite type.
    Export {
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a pseudo-orbit file.
    GenOrbit {
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long, value_enum, default_value = "random")]
        kind: OrbitKind,
        #[arg(short = 'N', default_value_t = 3)]
        order: usize,
        /// Depth of the entries; defaults to max(n + 1, p).
        #[arg(long)]
        depth: Option<usize>,
        /// Resolution.
        #[arg(short = 'n', default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    match run(cli.command) {
        Ok(Output::Report(r)) => {
            print!("{}", r.render(cli.format));
            ExitCode::from(r.status)
        }
        Ok(Output::Raw(text)) => {
            print!("{text}");
            ExitCode::from(PASS)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_status(&e))
        }
    }
}

enum Output {
    Report(Report),
    Raw(String),
}

fn error_status(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } | Error::CountOverflow | Error::InsufficientDepth { .. } => INCONCLUSIVE,
        Error::Unverified { .. } | Error::NotPerfect { .. } | Error::CertificationFailed(_) => VIOLATION,
        _ => USAGE,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))
}

fn load(args: &ShiftArgs) -> Result<ShiftSpec> {
    let shift = match (&args.source.builtin, &args.source.shift) {
        (Some(name), _) => ShiftSpec::builtin(name)?,
        (None, Some(path)) => {
            let sft = parse_forbidden_file(&read(path)?)?;
            let name = path
                .file_stem()
                .map_or("shift".into(), |s| s.to_string_lossy().into_owned());
            let engine = match args.budget {
                Some(b) => SftEngine::build_with_budget(sft, b)?,
                None => SftEngine::build(sft)?,
            };
            return Ok(ShiftSpec::from_engine(name, engine));
        }
        (None, None) => return Err(Error::Precondition("no shift given".into())),
    };
    match (args.budget, shift.engine()) {
        (Some(b), Some(e)) => Ok(ShiftSpec::from_engine(
            shift.name(),
            SftEngine::build_with_budget(e.sft().clone(), b)?,
        )),
        _ => Ok(shift),
    }
}

fn engine_of(shift: &ShiftSpec) -> Result<&SftEngine> {
    shift
        .engine()
        .ok_or_else(|| Error::Precondition(format!("`{}` is not presented by forbidden blocks", shift.name())))
}

fn load_orbit(path: &Path, shift: &ShiftSpec) -> Result<PseudoOrbitFamily> {
    let f = parse_orbit_file(&read(path)?)?;
    if f.alphabets() != shift.alphabets() {
        return Err(Error::Precondition(format!(
            "orbit alphabets `{}` differ from the shift's `{}`",
            f.alphabets().header(),
            shift.alphabets().header()
        )));
    }
    Ok(f)
}

fn parse_cylinder(alph: &Alphabets, text: &str) -> Result<Block> {
    alph.parse_block(&text.replace(',', " "))
}

fn word(w: &impl ToString) -> Value {
    Value::String(w.to_string())
}

/// Adds a `check` row; a failed check carries its first violation.
fn check_row(r: &mut Report, name: &str, t: &TraceReport) {
    let mut fields = vec![
        ("name", Value::from(name)),
        ("passed", Value::from(t.passed)),
        ("level", Value::from(t.checked_depth)),
    ];
    if let Some(v) = &t.first_violation {
        if let Some(s) = v.sample {
            fields.push(("sample", Value::from(s)));
        }
        fields.push(("word", word(&v.word)));
        if let Some(step) = &v.step {
            fields.push(("step", word(step)));
        }
        fields.push(("node", word(&v.node)));
    }
    r.row("check", fields);
    if !t.passed {
        r.escalate(VIOLATION);
    }
}

fn run(command: Command) -> Result<Output> {
    let report = match command {
        Command::List => list()?,
        Command::Blocks { shift, n, list } => blocks(&shift, n, list)?,
        Command::Shadow { shift, orbit, m } => shadow(&shift, &orbit, m)?,
        Command::Stability {
            shift,
            orbit,
            m,
            order,
            runs,
            samples,
            seed,
        } => stability(&shift, orbit.as_deref(), m, order, runs, samples, seed)?,
        Command::Openness {
            shift,
            i,
            block,
            n,
            probe_depth,
        } => openness(&shift, i, block.as_deref(), n, probe_depth)?,
        Command::Perfect { shift } => perfect(&shift)?,
        Command::Empty { shift } => {
            let shift = load(&shift)?;
            let mut r = Report::new();
            r.set("shift", shift.name()).set("empty", shift.is_empty()?);
            r
        }
        Command::Gap { shift, n, through } => gap(&shift, n, through)?,
        Command::Export { shift, out } => {
            let shift = load(&shift)?;
            let text = shift.forbidden_file().ok_or_else(|| {
                Error::Precondition(format!("`{}` has no forbidden-block presentation", shift.name()))
            })?;
            return emit(out.as_deref(), text);
        }
        Command::GenOrbit {
            shift,
            kind,
            order,
            depth,
            n,
            seed,
            out,
        } => {
            let f = gen_orbit(&shift, kind, order, depth, n, seed)?;
            return emit(out.as_deref(), write_orbit_file(&f));
        }
    };
    Ok(Output::Report(report))
}

fn emit(out: Option<&Path>, text: String) -> Result<Output> {
    match out {
        Some(path) => {
            write(path, &text)?;
            Ok(Output::Raw(String::new()))
        }
        None => Ok(Output::Raw(text)),
    }
}

fn list() -> Result<Report> {
    let mut r = Report::new();
    for name in BUILTINS {
        let shift = ShiftSpec::builtin(name)?;
        let alph = shift.alphabets();
        let mut fields = vec![
            ("name", Value::from(*name)),
            ("arity", Value::from(alph.arity())),
            ("labels", Value::from(alph.symbols().join(","))),
        ];
        match shift.height() {
            Some(p) => {
                fields.push(("presentation", Value::from("finite-type")));
                fields.push(("height", Value::from(p)));
            }
            None => fields.push(("presentation", Value::from("oracle"))),
        }
        r.row("shift", fields);
    }
    Ok(r)
}

fn blocks(args: &ShiftArgs, n: usize, list: bool) -> Result<Report> {
    let shift = load(args)?;
    let mut r = Report::new();
    r.set("shift", shift.name())
        .set("n", n)
        .set("count", count(shift.block_count(n)?));
    if list {
        let alph = shift.alphabets();
        for b in shift.block_language_with_budget(n, args.budget.unwrap_or(DEFAULT_BUDGET))? {
            r.row("block", vec![("labels", block(alph, &b))]);
        }
    }
    Ok(r)
}

fn shadow(args: &ShiftArgs, orbit: &Path, m: Option<usize>) -> Result<Report> {
    let shift = load(args)?;
    let f = load_orbit(orbit, &shift)?;
    let m = m.unwrap_or(f.resolution());
    if m == 0 || m > f.depth() {
        return Err(Error::Precondition(format!(
            "need 1 ≤ m ≤ depth = {}, got m = {m}",
            f.depth()
        )));
    }
    let mut r = Report::new();
    r.set("shift", shift.name())
        .set("order", f.order())
        .set("depth", f.depth())
        .set("resolution", f.resolution())
        .set("m", m);
    match shift.engine() {
        Some(e) => {
            let bound = shadowing_bound(e, m)?;
            r.set("bound", bound);
            if f.resolution() < bound {
                r.set("note", "resolution below the bound, tracing not guaranteed");
            }
        }
        None => {
            r.set("bound", "none");
            r.set("note", "not of finite type, tracing not guaranteed");
        }
    }

    let po = verify_pseudo_orbit(&f)?;
    check_row(&mut r, "pseudo-orbit", &po);
    if !po.passed {
        return Ok(r);
    }
    for (w, t) in f.words().zip(f.entries()) {
        if let Membership::NotInX { at } = shift.certify(t)? {
            r.row(
                "entry",
                vec![
                    ("word", word(&w)),
                    ("membership", "not-in-shift".into()),
                    ("node", word(&at)),
                ],
            );
            r.escalate(VIOLATION);
        }
    }

    let t = trace_construct(&f)?;
    check_row(&mut r, "tracing", &verify_tracing(&t, &f, m)?);
    let membership = shift.certify(&t)?;
    let mut fields = vec![("depth", Value::from(t.depth()))];
    match &membership {
        Membership::Certified => fields.push(("membership", "certified".into())),
        Membership::NotInX { at } => {
            fields.push(("membership", "not-in-shift".into()));
            fields.push(("node", word(at)));
            r.escalate(VIOLATION);
        }
        Membership::Undetermined => {
            fields.push(("membership", "undetermined".into()));
            r.escalate(INCONCLUSIVE);
        }
    }
    fields.push(("labels", tree(shift.alphabets(), &t)));
    r.row("trace", fields);
    Ok(r)
}

fn perfectness_gate(r: &mut Report, e: &SftEngine) -> bool {
    if e.is_empty() {
        r.set("perfect", false).set("reason", "empty");
        return false;
    }
    match e.rigidity_fixpoint().first() {
        Some(b) => {
            r.set("perfect", false).set("rigid", block(e.alphabets(), b));
            false
        }
        None => {
            r.set("perfect", true);
            true
        }
    }
}

fn pipeline_rows(r: &mut Report, p: &PipelineReport) {
    check_row(r, "tau-close", &p.tau_close);
    r.row(
        "check",
        vec![("name", "tau-certified".into()), ("passed", p.tau_certified.into())],
    );
    if !p.tau_certified {
        r.escalate(VIOLATION);
    }
    check_row(r, "conjugacy", &p.conjugacy);
    check_row(r, "phi-close", &p.phi_close);
    check_row(r, "tracing", &p.tracing);
}

fn stability(
    args: &ShiftArgs,
    orbit: Option<&Path>,
    m: usize,
    order: usize,
    runs: usize,
    samples: usize,
    seed: u64,
) -> Result<Report> {
    let shift = load(args)?;
    let e = engine_of(&shift)?;
    let mut r = Report::new();
    r.set("shift", shift.name());
    if !perfectness_gate(&mut r, e) {
        r.set(
            "refused",
            "the shift has an isolated point, so it is not topologically stable",
        );
        r.escalate(VIOLATION);
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Some(path) = orbit {
        let f = load_orbit(path, &shift)?;
        let p = stability_pipeline(e, &f, m, samples, &mut rng)?;
        r.set("m", m).set("n", f.resolution()).set("M", p.separation_depth);
        r.set("replaced", p.replaced.len()).set("samples", p.samples);
        pipeline_rows(&mut r, &p);
        return Ok(r);
    }
    let n = e.height().max(m);
    r.set("m", m).set("n", n).set("order", order).set("runs", runs);
    let mut passed = 0;
    for run in 0..runs {
        let f = random_pseudo_orbit(e, order, n + 1, n, &mut rng)?;
        let p = stability_pipeline(e, &f, m, samples, &mut rng)?;
        if p.passed() {
            passed += 1;
        } else {
            r.row("failure", vec![("run", run.into()), ("M", p.separation_depth.into())]);
            pipeline_rows(&mut r, &p);
        }
    }
    r.set("passed", passed).set("failed", runs - passed);
    Ok(r)
}

fn openness(
    args: &ShiftArgs,
    i: Option<Letter>,
    cylinder: Option<&str>,
    n: Option<usize>,
    probe_depth: usize,
) -> Result<Report> {
    let shift = load(args)?;
    let alph = shift.alphabets();
    let cylinders = match cylinder {
        Some(text) => vec![parse_cylinder(alph, text)?],
        None => shift.block_language_with_budget(n.unwrap_or(1), args.budget.unwrap_or(DEFAULT_BUDGET))?,
    };
    let directions: Vec<Letter> = match i {
        Some(i) => vec![i],
        None => (0..alph.arity() as Letter).collect(),
    };
    let mut r = Report::new();
    r.set("shift", shift.name()).set("probe-depth", probe_depth);
    let mut tally = [0usize; 3];
    let mut rows = Vec::new();
    for b in &cylinders {
        for &i in &directions {
            let w = bounded_openness_check(&shift, i, b, probe_depth)?;
            let rechecked = w.recheck(&shift)?;
            let mut fields = vec![
                ("i", Value::from(i)),
                ("block", block(alph, b)),
                ("verdict", Value::from(w.verdict.to_string())),
                ("witnesses", Value::from(w.witnesses.len())),
                ("recheck", Value::from(rechecked)),
            ];
            match w.verdict {
                Verdict::OpenCertified => tally[0] += 1,
                Verdict::NotOpenWitness => tally[1] += 1,
                Verdict::Inconclusive => tally[2] += 1,
            }
            if let Some(c) = &w.counterexample {
                fields.push(("preimage", tree(alph, &c.preimage)));
                fields.push(("image", block(alph, &c.image)));
                fields.push(("outsider", block(alph, &c.outsider)));
            }
            rows.push(fields);
            r.escalate(match w.verdict {
                Verdict::OpenCertified => PASS,
                Verdict::NotOpenWitness => VIOLATION,
                Verdict::Inconclusive => INCONCLUSIVE,
            });
            if !rechecked {
                r.escalate(VIOLATION);
            }
        }
    }
    let verdict = if tally[1] > 0 {
        Verdict::NotOpenWitness
    } else if tally[2] > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::OpenCertified
    };
    r.set("checks", rows.len())
        .set("open", tally[0])
        .set("not-open", tally[1])
        .set("inconclusive", tally[2])
        .set("verdict", verdict.to_string());
    for fields in rows {
        r.row("check", fields);
    }
    Ok(r)
}

fn perfect(args: &ShiftArgs) -> Result<Report> {
    let shift = load(args)?;
    let mut r = Report::new();
    r.set("shift", shift.name());
    match shift.engine() {
        Some(e) => {
            perfectness_gate(&mut r, e);
        }
        None => {
            r.set("perfect", "unknown")
                .set("reason", "no forbidden-block presentation");
            r.escalate(INCONCLUSIVE);
        }
    }
    Ok(r)
}

fn gap(args: &ShiftArgs, n: usize, through: bool) -> Result<Report> {
    let shift = load(args)?;
    let mut r = Report::new();
    r.set("shift", shift.name());
    let heights = if through { 1..=n } else { n..=n };
    for k in heights {
        let g = sft_approximation_gap(&shift, k)?;
        let mut fields = vec![("n", Value::from(k)), ("verdict", Value::from(g.verdict.to_string()))];
        if let Some(t) = &g.witness {
            fields.push(("recheck", Value::from(g.recheck(&shift)?)));
            fields.push(("depth", Value::from(t.depth())));
            fields.push(("witness", tree(shift.alphabets(), t)));
        }
        if g.verdict == GapVerdict::Inconclusive {
            r.escalate(INCONCLUSIVE);
        }
        r.row("gap", fields);
    }
    Ok(r)
}

fn gen_orbit(
    args: &ShiftArgs,
    kind: OrbitKind,
    order: usize,
    depth: Option<usize>,
    n: usize,
    seed: u64,
) -> Result<PseudoOrbitFamily> {
    let shift = load(args)?;
    let alph = shift.alphabets().clone();
    let depth = depth.unwrap_or_else(|| (n + 1).max(shift.height().unwrap_or(1)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        OrbitKind::Random => random_pseudo_orbit(engine_of(&shift)?, order, depth, n, &mut rng),
        OrbitKind::True => {
            let t = shift.random_tree(order.saturating_sub(1) + depth, &mut rng)?;
            PseudoOrbitFamily::true_orbit(alph, &t, order, depth, n)
        }
        OrbitKind::Perturbed => {
            let e = engine_of(&shift)?;
            let t = e.random_tree(order.saturating_sub(1) + depth, &mut rng)?;
            perturb_orbit(e, &t, order, depth, n, seed)
        }
        OrbitKind::Converse => {
            if shift.name() != "one-zero-row" {
                return Err(Error::Precondition(
                    "the converse family lives in `one-zero-row`".into(),
                ));
            }
            converse_orbit(alph.arity(), n)
        }
    }
}
