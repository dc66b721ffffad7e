//! `onebit`: LZ'78 parsing, adversarial word constructions and their checks.
//!
//! Exit status: 0 when every check passed, 1 when a check failed, 2 for
//! usage, parameter and input errors.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use onebit::construct::ConstructedWord;
use onebit::fuzz::bound_fuzz;
use onebit::gen::de_bruijn;
use onebit::general::{construct_general, derive_params, sample_family, verify_general, Family, GeneralReport};
use onebit::infinite::{analyze_prefix, build_prefix, ratio_curve_letters, schedule, CurvePoint};
use onebit::lz::{comp_from_dic, parse, prepend_check, LzCode, PrependCheck, TreeStats};
use onebit::toy::{construct_toy, one_front_variant, ToyReport};
use onebit::{Error, Word};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "onebit", version, about = "LZ'78 parsing and one-bit prepend experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a word and report its blocks, dictionary size and ratio.
    Parse(ParseArgs),
    /// Compare the parsing of a word with the parsing of the word with one letter in front.
    Ratio(RatioArgs),
    /// Print a de Bruijn word of order k.
    Debruijn(DebruijnArgs),
    /// Build an adversarial word.
    #[command(subcommand)]
    Construct(ConstructCommand),
    /// Build the order-k de Bruijn word and print the headline numbers.
    Catastrophe(CatastropheArgs),
    /// Check the prepending bound on random words.
    BoundFuzz(BoundFuzzArgs),
    /// Sample a random family and write it as text.
    FamilySample(FamilyArgs),
    /// Compression ratio of every stride-th prefix of a word.
    Curve(CurveArgs),
    /// Build a finite prefix of the multi-level construction.
    Infinite(InfiniteArgs),
}

#[derive(Subcommand)]
enum ConstructCommand {
    /// Prefixes of a de Bruijn word with gadgets.
    Toy(ToyArgs),
    /// Chains over a random family with gadgets, padded to length n.
    General(GeneralArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct InputArgs {
    /// Word file, text or packed; `-` reads stdin.
    #[arg(long, conflicts_with = "word")]
    input: Option<PathBuf>,
    /// Word given inline as 0/1 letters.
    #[arg(long)]
    word: Option<String>,
}

#[derive(Args)]
struct WordOutArgs {
    /// Write the word to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the packed binary format instead of text.
    #[arg(long, requires = "out")]
    packed: bool,
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Include the code (predecessor, letter) of every block.
    #[arg(long)]
    code: bool,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Letter written in front; both letters when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    front: Option<u8>,
}

#[derive(Args)]
struct DebruijnArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=30))]
    k: u32,
    /// Rotate so that the word starts with this prefix.
    #[arg(long)]
    prefix: Option<String>,
    /// Shuffle the Eulerian tie-breaking with this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: WordOutArgs,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(5..=30))]
    k: u32,
    #[arg(long, default_value_t = onebit::toy::DEFAULT_GAMMA)]
    gamma: f64,
    /// Letter written in front for the report.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    front: u8,
    /// Eulerian tie-breaking seed of the de Bruijn word.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: WordOutArgs,
    #[arg(long, value_enum, default_value = "json")]
    report: Format,
}

#[derive(Args)]
struct GeneralArgs {
    #[arg(long, required_unless_present = "family")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "family")]
    l: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the family from this file instead of sampling it.
    #[arg(long)]
    family: Option<PathBuf>,
    /// Reject parameters outside the range covered by the asymptotic bounds.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    out: WordOutArgs,
    #[arg(long, value_enum, default_value = "json")]
    report: Format,
}

#[derive(Args)]
struct CatastropheArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(5..=16))]
    k: u32,
    #[arg(long, default_value_t = onebit::toy::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct BoundFuzzArgs {
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 10_000)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving one word file per violation.
    #[arg(long)]
    reproducers: Option<PathBuf>,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    l: usize,
    #[arg(long, default_value_t = 10.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    stride: u64,
    /// Letter written in front of the word.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    front: Option<u8>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct InfiniteArgs {
    #[arg(long)]
    l0: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    stride: u64,
    /// Write the curves of w and 0w as CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[command(flatten)]
    out: WordOutArgs,
}

/// Outcome of a command: checks passed or not.
type Outcome = Result<bool, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Ratio(a) => cmd_ratio(a),
        Command::Debruijn(a) => cmd_debruijn(a),
        Command::Construct(ConstructCommand::Toy(a)) => cmd_toy(a),
        Command::Construct(ConstructCommand::General(a)) => cmd_general(a),
        Command::Catastrophe(a) => cmd_catastrophe(a),
        Command::BoundFuzz(a) => cmd_bound_fuzz(a),
        Command::FamilySample(a) => cmd_family(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Infinite(a) => cmd_infinite(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Construction(_) | Error::Sampling { .. })) => {
            eprintln!("onebit: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("onebit: {e}");
            ExitCode::from(2)
        }
    }
}

fn read_word(input: &InputArgs) -> Result<Word, Error> {
    match (&input.input, &input.word) {
        (_, Some(text)) => Word::parse_text(text),
        (Some(path), None) => {
            let bytes = if path == Path::new("-") {
                let mut buf = Vec::new();
                io::stdin().read_to_end(&mut buf)?;
                buf
            } else {
                fs::read(path)?
            };
            Word::from_bytes(&bytes)
        }
        (None, None) => Err(Error::Parameter("give --input FILE or --word LETTERS".into())),
    }
}

fn write_word(w: &Word, out: &WordOutArgs) -> Result<(), Error> {
    if let Some(path) = &out.out {
        if out.packed {
            fs::write(path, w.to_packed_bytes())?;
        } else {
            fs::write(path, w.to_text() + "\n")?;
        }
    }
    Ok(())
}

fn emit(text: &str) -> Result<(), Error> {
    let mut stdout = io::stdout().lock();
    let mut write = || -> io::Result<()> {
        stdout.write_all(text.as_bytes())?;
        if !text.ends_with('\n') {
            stdout.write_all(b"\n")?;
        }
        stdout.flush()
    };
    match write() {
        // A closed pipe (`| head`) is not a failure of the command.
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn emit_json<T: Serialize>(value: &T) -> Result<(), Error> {
    emit(&serde_json::to_string_pretty(value)?)
}

/// `key,value` rows after a versioned comment line.
fn csv_pairs(kind: &str, rows: &[(String, String)]) -> String {
    let mut out = format!("# onebit {kind} schema 1\nfield,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

#[derive(Serialize)]
struct ParseReport {
    schema: u32,
    len: usize,
    blocks: usize,
    dic: usize,
    last_is_duplicate: bool,
    comp: Option<f64>,
    tree: TreeStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    code: Option<LzCode>,
}

fn cmd_parse(a: ParseArgs) -> Outcome {
    let w = read_word(&a.input)?;
    let p = parse(&w);
    let report = ParseReport {
        schema: 1,
        len: w.len(),
        blocks: p.block_count(),
        dic: p.dic_size(),
        last_is_duplicate: p.last_is_duplicate(),
        comp: (!w.is_empty()).then(|| comp_from_dic(p.dic_size(), w.len())),
        tree: p.tree_stats(),
        code: a.code.then(|| p.encode()),
    };
    match a.format {
        Format::Json => emit_json(&report)?,
        Format::Csv => {
            let mut out = String::from("# onebit parse-blocks schema 1\nblock,start,len\n");
            for (b, blk) in p.blocks().iter().enumerate() {
                let _ = writeln!(out, "{b},{},{}", blk.start, blk.len);
            }
            emit(&out)?;
        }
        Format::Text => {
            let comp = report.comp.map_or("undefined".to_string(), |c| format!("{c:.6}"));
            emit(&format!(
                "length {}\nblocks {}\ndictionary {}\ncomp {comp}\ntree depth {}",
                report.len, report.blocks, report.dic, report.tree.max_depth
            ))?;
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct RatioReport {
    schema: u32,
    checks: Vec<PrependCheck>,
    all_hold: bool,
}

fn cmd_ratio(a: RatioArgs) -> Outcome {
    let w = read_word(&a.input)?;
    let letters = a.front.map_or(vec![0, 1], |f| vec![f]);
    let checks: Vec<PrependCheck> = letters.into_iter().map(|l| prepend_check(&w, l)).collect();
    let all_hold = checks.iter().all(|c| c.holds());
    emit_json(&RatioReport {
        schema: 1,
        checks,
        all_hold,
    })?;
    Ok(all_hold)
}

fn cmd_debruijn(a: DebruijnArgs) -> Outcome {
    let prefix = a.prefix.as_deref().map(Word::parse_text).transpose()?;
    let x = de_bruijn(a.k, prefix.as_ref(), a.seed)?;
    if a.out.out.is_some() {
        write_word(&x, &a.out)?;
    } else {
        emit(&x.to_text())?;
    }
    Ok(true)
}

fn toy_rows(r: &ToyReport) -> Vec<(String, String)> {
    let mut rows: Vec<(String, String)> = vec![
        ("n".into(), r.n.to_string()),
        ("s".into(), r.s.to_string()),
        ("k".into(), r.k.to_string()),
        ("gamma".into(), r.gamma.to_string()),
        ("letter".into(), r.letter.to_string()),
        ("dic_w".into(), r.dic_w.to_string()),
        ("dic_0w".into(), r.dic_0w.to_string()),
        ("chosen_i".into(), r.chosen_i.map_or(String::new(), |i| i.to_string())),
        ("gadget_count".into(), r.gadget_count.to_string()),
        ("size_ok".into(), r.size_ok.to_string()),
        ("violation_cap_ok".into(), r.violation_cap_ok.to_string()),
        ("pair_sum_ok".into(), r.pair_sum_ok.to_string()),
        ("prepend_ratio".into(), r.prepend_ratio.to_string()),
    ];
    for (i, c) in &r.violations {
        rows.push((format!("violations_{i}"), c.to_string()));
    }
    rows
}

fn cmd_toy(a: ToyArgs) -> Outcome {
    let cw = construct_toy(a.k, a.gamma, a.seed)?;
    write_word(&cw.word, &a.out)?;
    let r = one_front_variant(&cw, a.k, a.gamma, a.front)?;
    match a.report {
        Format::Json => emit_json(&r)?,
        Format::Csv => emit(&csv_pairs("toy-report", &toy_rows(&r)))?,
        Format::Text => emit(&toy_table(&cw, &r, None))?,
    }
    Ok(r.bounds_ok() && r.green_synchronized)
}

fn general_rows(r: &GeneralReport) -> Vec<(String, String)> {
    vec![
        ("n".into(), r.params.n.to_string()),
        ("l".into(), r.params.l.to_string()),
        ("p".into(), r.params.p.to_string()),
        ("m".into(), r.params.m.to_string()),
        ("len".into(), r.len.to_string()),
        ("dic_w".into(), r.dic_w.to_string()),
        ("dic_0w".into(), r.dic_0w.to_string()),
        ("catastrophe_factor".into(), r.catastrophe_factor.to_string()),
        ("size_bound".into(), r.size_bound.to_string()),
        ("size_ok".into(), r.size_ok.to_string()),
        ("speed_constant".into(), r.speed_constant.to_string()),
        ("gadget_count".into(), r.gadget_count.to_string()),
        ("chains_ok".into(), r.chains_ok().to_string()),
    ]
}

fn cmd_general(a: GeneralArgs) -> Outcome {
    let family = match &a.family {
        Some(path) => Family::from_text(&fs::read_to_string(path)?)?,
        None => {
            let (n, l) =
                a.n.zip(a.l)
                    .ok_or_else(|| Error::Parameter("give --n and --l, or --family".into()))?;
            sample_family(&derive_params(n, l, a.gamma, a.strict)?, a.seed)?
        }
    };
    let cw = construct_general(&family)?;
    write_word(&cw.word, &a.out)?;
    let r = verify_general(&cw, &family.params)?;
    match a.report {
        Format::Json | Format::Text => emit_json(&r)?,
        Format::Csv => emit(&csv_pairs("general-report", &general_rows(&r)))?,
    }
    Ok(r.size_ok && r.chains_ok() && r.green_synchronized && family.check_p1() && family.check_p2())
}

#[derive(Serialize)]
struct CatastropheReport {
    schema: u32,
    report: ToyReport,
    prepend: [PrependCheck; 2],
}

fn toy_table(cw: &ConstructedWord, r: &ToyReport, prepend: Option<&[PrependCheck; 2]>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "k = {}, gamma = {}, s = {}, gadgets = {}",
        r.k,
        r.gamma,
        r.s,
        cw.gadget_count()
    );
    let _ = writeln!(out, "{:<12}{:>12}", "|w|", r.n);
    let _ = writeln!(out, "{:<12}{:>12}   bound {:.1}", "dic(w)", r.dic_w, r.size_bound);
    let _ = writeln!(
        out,
        "{:<12}{:>12}   |w|^(3/4) ratio {:.4} (lower bound {})",
        format!("dic({}w)", r.letter),
        r.dic_0w,
        r.growth_ratio,
        r.growth_target
    );
    let _ = writeln!(out, "{:<12}{:>12.2}", "factor", r.dic_0w as f64 / r.dic_w as f64);
    if let Some(checks) = prepend {
        for c in checks {
            let _ = writeln!(
                out,
                "prepend {}: dic(aw)/sqrt(|w| dic(w)) = {:.4} (bound 3) {}",
                c.letter,
                c.ratio,
                if c.holds() { "ok" } else { "VIOLATED" }
            );
        }
    }
    out
}

fn cmd_catastrophe(a: CatastropheArgs) -> Outcome {
    let cw = construct_toy(a.k, a.gamma, None)?;
    let r = one_front_variant(&cw, a.k, a.gamma, 0)?;
    let prepend = [prepend_check(&cw.word, 0), prepend_check(&cw.word, 1)];
    let ok = r.bounds_ok() && prepend.iter().all(|c| c.holds());
    match a.format {
        Format::Text => emit(&toy_table(&cw, &r, Some(&prepend)))?,
        Format::Json => emit_json(&CatastropheReport {
            schema: 1,
            report: r,
            prepend,
        })?,
        Format::Csv => emit(&csv_pairs("catastrophe", &toy_rows(&r)))?,
    }
    Ok(ok)
}

fn cmd_bound_fuzz(a: BoundFuzzArgs) -> Outcome {
    let r = bound_fuzz(a.trials, a.max_len, a.seed);
    if let Some(dir) = &a.reproducers {
        fs::create_dir_all(dir)?;
        for v in &r.violations {
            fs::write(
                dir.join(format!("trial-{}-front-{}.txt", v.trial, v.letter)),
                v.word.to_text() + "\n",
            )?;
        }
    }
    emit_json(&r)?;
    Ok(r.violations.is_empty())
}

fn cmd_family(a: FamilyArgs) -> Outcome {
    let fam = sample_family(&derive_params(a.n, a.l, a.gamma, a.strict)?, a.seed)?;
    match &a.out {
        Some(path) => fs::write(path, fam.to_text())?,
        None => emit(&fam.to_text())?,
    }
    Ok(true)
}

fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("# onebit curve schema 1\nn,comp\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.n, p.comp);
    }
    out
}

fn cmd_curve(a: CurveArgs) -> Outcome {
    let w = read_word(&a.input)?;
    let stride = a.stride as usize;
    let points = match a.front {
        Some(f) => ratio_curve_letters(std::iter::once(f).chain(w.iter()), stride),
        None => ratio_curve_letters(w.iter(), stride),
    };
    match a.format {
        Format::Json => emit_json(&serde_json::json!({ "schema": 1, "points": points }))?,
        _ => emit(&curve_csv(&points))?,
    }
    Ok(true)
}

fn cmd_infinite(a: InfiniteArgs) -> Outcome {
    let sched = schedule(a.l0, a.gamma, a.levels)?;
    let prefix = build_prefix(&sched, a.budget, a.seed)?;
    write_word(&prefix.word.word, &a.out)?;
    let an = analyze_prefix(&prefix, a.stride as usize)?;
    if let Some(path) = &a.curve {
        let mut out = String::from("# onebit infinite-curve schema 1\nn,comp_w,comp_0w\n");
        for (p, q) in an.curve_w.iter().zip(&an.curve_0w) {
            let _ = writeln!(out, "{},{},{}", p.n, p.comp, q.comp);
        }
        fs::write(path, out)?;
    }
    emit_json(&an.report)?;
    Ok(an.report.chains.iter().all(|c| c.q_ok && c.green_ok))
}
