//! Batch command-line driver over the system-definition file format.
//!
//! Exit codes: 0 success (or equality), 1 validation failure or inequality
//! with machine-readable `witness` lines on standard output, 2 usage or
//! parse errors. Identical invocations produce byte-identical reports.

pub mod format;

use std::fmt::Write as _;

use clap::{Parser, Subcommand};

use format::{display_word, parse_word, render_spec, render_system, SystemFile};
use subshift::lgs::LambdaGraphSystem;
use subshift::sms::{compare_languages, product_system, BasePolicy, Sms};
use subshift::sse::PsseChain;
use subshift::symbolic::{Alphabet, Specification};
use subshift::textile::{
    build_decoder, build_lr_textile, check_nondegenerate, CodeSide, TextileSystem,
};

#[derive(Parser, Debug)]
#[command(
    name = "subshift",
    version,
    about = "Exact computation with leveled subshift presentations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a named system or graph.
    Validate {
        file: String,
        #[arg(long)]
        system: String,
    },
    /// Enumerate the admissible words of a given length.
    Lang {
        file: String,
        #[arg(long)]
        system: String,
        #[arg(long)]
        len: usize,
        /// `deepest` or an explicit base level.
        #[arg(long, default_value = "deepest")]
        base: String,
    },
    /// Compare the languages of two systems at a given length.
    CompareLang {
        file: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        len: usize,
        /// Optional letter-recoding specification applied to `a`'s words.
        #[arg(long)]
        recode: Option<String>,
    },
    /// The level-compression higher block of a system.
    HigherBlock {
        file: String,
        #[arg(long)]
        system: String,
        #[arg(long)]
        n: usize,
    },
    /// The product system over the first `k` vertical and `n` horizontal factors.
    Product {
        file: String,
        #[arg(long)]
        vertical: String,
        #[arg(long)]
        horizontal: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
    /// Textile system operations.
    #[command(subcommand)]
    Textile(TextileCmd),
    /// Strong shift equivalence operations.
    #[command(subcommand)]
    Psse(PsseCmd),
}

#[derive(Subcommand, Debug)]
pub enum TextileCmd {
    /// Build the LR textile of a commuting specification and report it.
    BuildLr {
        file: String,
        #[arg(long)]
        horizontal: String,
        #[arg(long)]
        vertical: String,
        #[arg(long)]
        spec: String,
    },
    /// Build and validate all textile conditions.
    Validate {
        file: String,
        #[arg(long)]
        horizontal: String,
        #[arg(long)]
        vertical: String,
        #[arg(long)]
        spec: String,
    },
    /// Build, dualize, and validate.
    Dual {
        file: String,
        #[arg(long)]
        horizontal: String,
        #[arg(long)]
        vertical: String,
        #[arg(long)]
        spec: String,
    },
    /// Bounded nondegeneracy check at a given depth.
    CheckNondeg {
        file: String,
        #[arg(long)]
        horizontal: String,
        #[arg(long)]
        vertical: String,
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Build the top or bottom decoder within a window bound.
    Decoder {
        file: String,
        #[arg(long)]
        horizontal: String,
        #[arg(long)]
        vertical: String,
        #[arg(long)]
        spec: String,
        /// `xi` (top labels) or `eta` (bottom labels).
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = 4)]
        window: usize,
    },
    /// The relative higher block of the textile.
    HigherBlock {
        file: String,
        #[arg(long)]
        horizontal: String,
        #[arg(long)]
        vertical: String,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum PsseCmd {
    /// Validate a step or a chain.
    Validate {
        file: String,
        #[arg(long)]
        name: String,
    },
    /// The induced first-factor and second-factor systems of a step.
    Induce {
        file: String,
        #[arg(long)]
        step: String,
    },
    /// The system presenting `phi^k sigma^n` for a closed chain.
    Identify {
        file: String,
        #[arg(long)]
        chain: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Use the mirror route, presenting `(sigma phi^{-1})^k sigma^n`.
        #[arg(long, default_value_t = false)]
        q: bool,
    },
    /// Apply the forward automorphism power `phi^k sigma^n` to a word.
    Apply {
        file: String,
        #[arg(long)]
        chain: String,
        #[arg(long)]
        word: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
    /// Encode a word's orbit over the composite alphabet.
    Encode {
        file: String,
        #[arg(long)]
        chain: String,
        #[arg(long)]
        word: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
    },
    /// Build the step realizing a symbolic automorphism.
    FromSpec {
        file: String,
        #[arg(long)]
        system: String,
        #[arg(long)]
        pi: String,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: String) -> Failure {
    Failure { code: 2, message }
}

fn verdict(message: String) -> Failure {
    Failure { code: 1, message }
}

type CmdResult = std::result::Result<String, Failure>;

fn load(path: &str) -> std::result::Result<SystemFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("error: cannot read {path}: {e}")))?;
    format::parse_file(&text).map_err(|e| usage(format!("error: {path}:{e}")))
}

fn core_err(e: subshift::Error) -> Failure {
    verdict(format!("error {e}"))
}

fn resolve_sms(file: &SystemFile, name: &str) -> std::result::Result<Sms, Failure> {
    if let Some(decl) = file.system(name) {
        return Ok(decl.sms.clone());
    }
    if let Some(decl) = file.graph(name) {
        let g = LambdaGraphSystem::from_labeled_graph(&decl.graph).map_err(core_err)?;
        return g.to_sms().map_err(core_err);
    }
    Err(usage(format!("error: no system or graph named {name}")))
}

fn resolve_shape(file: &SystemFile, name: &str) -> std::result::Result<Vec<Alphabet>, Failure> {
    let names = if let Some(decl) = file.system(name) {
        decl.alphabets.clone()
    } else if let Some(decl) = file.graph(name) {
        decl.alphabets.clone()
    } else {
        return Err(usage(format!("error: no system or graph named {name}")));
    };
    Ok(names
        .iter()
        .map(|n| file.alphabet(n).expect("validated at parse").clone())
        .collect())
}

fn resolve_spec(file: &SystemFile, name: &str) -> std::result::Result<Specification, Failure> {
    file.spec(name)
        .map(|d| d.spec.clone())
        .ok_or_else(|| usage(format!("error: no specification named {name}")))
}

fn resolve_chain(file: &SystemFile, name: &str) -> std::result::Result<PsseChain, Failure> {
    if let Some(decl) = file.chain(name) {
        return Ok(decl.chain.clone());
    }
    if let Some(decl) = file.step(name) {
        return PsseChain::new(vec![decl.step.clone()]).map_err(core_err);
    }
    Err(usage(format!("error: no chain or step named {name}")))
}

fn chain_shape(file: &SystemFile, name: &str) -> std::result::Result<Vec<Alphabet>, Failure> {
    if let Some(decl) = file.chain(name) {
        let step_decl = file
            .step(&decl.step_names[0])
            .ok_or_else(|| usage("error: dangling step reference".into()))?;
        return resolve_shape(file, &step_decl.from);
    }
    if let Some(decl) = file.step(name) {
        return resolve_shape(file, &decl.from);
    }
    Err(usage(format!("error: no chain or step named {name}")))
}

fn parse_base(base: &str) -> std::result::Result<BasePolicy, Failure> {
    if base == "deepest" {
        Ok(BasePolicy::Deepest)
    } else {
        base.parse::<usize>().map(BasePolicy::Level).map_err(|_| {
            usage(format!(
                "error: --base must be `deepest` or a level, got {base}"
            ))
        })
    }
}

fn cmd_validate(file: &SystemFile, name: &str) -> CmdResult {
    let mut out = String::new();
    let mut witnesses: Vec<String> = Vec::new();
    // left-resolving is reported but does not invalidate: only
    // constructions that need it refuse non-left-resolving systems
    let mut notes: Vec<String> = Vec::new();
    if let Some(decl) = file.system(name) {
        let report = decl.sms.validate();
        for v in &report.violations {
            witnesses.push(format!("witness sms {v}"));
        }
        if report.is_valid() {
            if let Ok(g) = LambdaGraphSystem::from_sms(&decl.sms) {
                collect_graph_witnesses(&g, &mut witnesses, &mut notes);
            }
        }
    } else if let Some(decl) = file.graph(name) {
        match LambdaGraphSystem::from_labeled_graph(&decl.graph) {
            Ok(g) => collect_graph_witnesses(&g, &mut witnesses, &mut notes),
            Err(e) => witnesses.push(format!("witness graph {e}")),
        }
    } else {
        return Err(usage(format!("error: no system or graph named {name}")));
    }
    if witnesses.is_empty() {
        writeln!(out, "valid {name}").unwrap();
        for n in notes {
            writeln!(out, "{n}").unwrap();
        }
        Ok(out)
    } else {
        writeln!(out, "invalid {name}").unwrap();
        for w in witnesses {
            writeln!(out, "{w}").unwrap();
        }
        for n in notes {
            writeln!(out, "{n}").unwrap();
        }
        Err(verdict(out))
    }
}

fn collect_graph_witnesses(
    g: &LambdaGraphSystem,
    witnesses: &mut Vec<String>,
    notes: &mut Vec<String>,
) {
    for v in g.validate().violations {
        witnesses.push(format!("witness structure {v}"));
    }
    for w in g.check_local_property() {
        witnesses.push(format!(
            "witness local-property level {} vertices {} {}",
            w.level, w.u, w.v
        ));
    }
    for w in g.check_left_resolving() {
        notes.push(format!(
            "note not-left-resolving level {} edges {} {}",
            w.level, w.first, w.second
        ));
    }
}

fn cmd_lang(file: &SystemFile, name: &str, len: usize, base: &str) -> CmdResult {
    let sms = resolve_sms(file, name)?;
    let base = parse_base(base)?;
    let words = sms.language(len, base).map_err(core_err)?;
    let mut out = String::new();
    for w in words {
        writeln!(out, "{}", display_word(&w, sms.symbol_len())).unwrap();
    }
    Ok(out)
}

fn cmd_compare_lang(
    file: &SystemFile,
    a: &str,
    b: &str,
    len: usize,
    recode: Option<&str>,
) -> CmdResult {
    let sys_a = resolve_sms(file, a)?;
    let sys_b = resolve_sms(file, b)?;
    let spec = match recode {
        Some(name) => Some(resolve_spec(file, name)?),
        None => None,
    };
    let cmp = compare_languages(&sys_a, &sys_b, len, spec.as_ref()).map_err(core_err)?;
    if cmp.equal {
        Ok("equal\n".to_string())
    } else {
        let mut out = String::from("unequal\n");
        for w in &cmp.only_a {
            writeln!(
                out,
                "witness only-a {}",
                display_word(w, sys_a.symbol_len())
            )
            .unwrap();
        }
        for w in &cmp.only_b {
            writeln!(
                out,
                "witness only-b {}",
                display_word(w, sys_b.symbol_len())
            )
            .unwrap();
        }
        Err(verdict(out))
    }
}

fn cmd_higher_block(file: &SystemFile, name: &str, n: usize) -> CmdResult {
    let sms = resolve_sms(file, name)?;
    let blocked = sms.higher_block(n).map_err(core_err)?;
    Ok(render_system(&blocked))
}

fn cmd_product(
    file: &SystemFile,
    vertical: &str,
    horizontal: &str,
    k: usize,
    n: usize,
) -> CmdResult {
    let v = resolve_sms(file, vertical)?;
    let h = resolve_sms(file, horizontal)?;
    let prod = product_system(&v, &h, k, n).map_err(core_err)?;
    Ok(render_system(&prod))
}

fn build_textile(
    file: &SystemFile,
    horizontal: &str,
    vertical: &str,
    spec: &str,
) -> std::result::Result<TextileSystem, Failure> {
    let h = resolve_sms(file, horizontal)?;
    let v = resolve_sms(file, vertical)?;
    let kappa = resolve_spec(file, spec)?;
    build_lr_textile(&h, &v, &kappa).map_err(core_err)
}

fn render_textile(t: &TextileSystem) -> String {
    let mut out = String::new();
    let edges = t.k.edges_at(0).expect("level 0");
    writeln!(out, "squares {}", edges.len()).unwrap();
    for e in edges {
        writeln!(
            out,
            "square {} from {} to {}",
            e.label.display_grouped(t.k.symbol_len()),
            e.src,
            e.dst
        )
        .unwrap();
    }
    out
}

fn validate_textile_report(t: &TextileSystem) -> CmdResult {
    let report = t.validate();
    if report.is_valid() {
        Ok("valid\n".to_string())
    } else {
        let mut out = String::from("invalid\n");
        for v in &report.violations {
            writeln!(out, "witness textile {v}").unwrap();
        }
        Err(verdict(out))
    }
}

fn cmd_textile(cmd: &TextileCmd) -> CmdResult {
    match cmd {
        TextileCmd::BuildLr {
            file,
            horizontal,
            vertical,
            spec,
        } => {
            let f = load(file)?;
            let t = build_textile(&f, horizontal, vertical, spec)?;
            let mut out = render_textile(&t);
            out.push_str(&validate_textile_report(&t)?);
            Ok(out)
        }
        TextileCmd::Validate {
            file,
            horizontal,
            vertical,
            spec,
        } => {
            let f = load(file)?;
            let t = build_textile(&f, horizontal, vertical, spec)?;
            validate_textile_report(&t)
        }
        TextileCmd::Dual {
            file,
            horizontal,
            vertical,
            spec,
        } => {
            let f = load(file)?;
            let t = build_textile(&f, horizontal, vertical, spec)?;
            let dual = t.dual().map_err(core_err)?;
            let mut out = render_textile(&dual);
            out.push_str(&validate_textile_report(&dual)?);
            Ok(out)
        }
        TextileCmd::CheckNondeg {
            file,
            horizontal,
            vertical,
            spec,
            depth,
        } => {
            let f = load(file)?;
            let t = build_textile(&f, horizontal, vertical, spec)?;
            let check = check_nondegenerate(&t, *depth).map_err(core_err)?;
            if check.is_nondegenerate() {
                Ok(format!("nondegenerate depth {depth}\n"))
            } else {
                let mut out = String::from("degenerate\n");
                for fail in &check.failures {
                    writeln!(
                        out,
                        "witness unliftable {:?} level {} word {}",
                        fail.side, fail.level, fail.path_word
                    )
                    .unwrap();
                }
                Err(verdict(out))
            }
        }
        TextileCmd::Decoder {
            file,
            horizontal,
            vertical,
            spec,
            code,
            window,
        } => {
            let f = load(file)?;
            let t = build_textile(&f, horizontal, vertical, spec)?;
            let side = match code.as_str() {
                "xi" => CodeSide::Top,
                "eta" => CodeSide::Bottom,
                other => {
                    return Err(usage(format!(
                        "error: --code must be xi or eta, got {other}"
                    )))
                }
            };
            let decoder = build_decoder(&t, side, *window).map_err(core_err)?;
            let mut out = String::new();
            writeln!(
                out,
                "decoder {code} window {} offset {}",
                decoder.window, decoder.offset
            )
            .unwrap();
            for (image, sym) in &decoder.table {
                writeln!(
                    out,
                    "map {} -> {}",
                    display_word(image, t.m.symbol_len()),
                    sym.display_grouped(t.k.symbol_len())
                )
                .unwrap();
            }
            Ok(out)
        }
        TextileCmd::HigherBlock {
            file,
            horizontal,
            vertical,
            spec,
            n,
        } => {
            let f = load(file)?;
            let t = build_textile(&f, horizontal, vertical, spec)?;
            let block = t.higher_block(*n).map_err(core_err)?;
            let mut out = render_textile(&block);
            out.push_str(&validate_textile_report(&block)?);
            Ok(out)
        }
    }
}

fn cmd_psse(cmd: &PsseCmd) -> CmdResult {
    match cmd {
        PsseCmd::Validate { file, name } => {
            let f = load(file)?;
            if let Some(decl) = f.step(name) {
                let report = decl.step.validate();
                if report.is_valid() {
                    return Ok(format!("valid {name}\n"));
                }
                let mut out = format!("invalid {name}\n");
                for v in &report.violations {
                    writeln!(out, "witness psse {v}").unwrap();
                }
                return Err(verdict(out));
            }
            if let Some(decl) = f.chain(name) {
                let report = decl.chain.validate();
                let mut out = String::new();
                let mut witnesses = Vec::new();
                for (i, step_report) in report.step_reports.iter().enumerate() {
                    for v in &step_report.violations {
                        witnesses.push(format!("witness psse step {i} {v}"));
                    }
                }
                for j in &report.mismatched_joints {
                    witnesses.push(format!("witness joint {j} systems differ"));
                }
                if !report.closed {
                    witnesses.push("witness chain endpoints differ".to_string());
                }
                if witnesses.is_empty() {
                    writeln!(out, "valid {name}").unwrap();
                    return Ok(out);
                }
                writeln!(out, "invalid {name}").unwrap();
                for w in witnesses {
                    writeln!(out, "{w}").unwrap();
                }
                return Err(verdict(out));
            }
            Err(usage(format!("error: no step or chain named {name}")))
        }
        PsseCmd::Induce { file, step } => {
            let f = load(file)?;
            let decl = f
                .step(step)
                .ok_or_else(|| usage(format!("error: no step named {step}")))?;
            let p = decl.step.p_system().map_err(core_err)?;
            let q = decl.step.q_system().map_err(core_err)?;
            let kp = decl.step.p_interchange_spec().map_err(core_err)?;
            let kq = decl.step.q_interchange_spec().map_err(core_err)?;
            let mut out = String::from("p-system\n");
            out.push_str(&render_system(&p));
            writeln!(out, "kappa-p {}", render_spec(&kp)).unwrap();
            out.push_str("q-system\n");
            out.push_str(&render_system(&q));
            writeln!(out, "kappa-q {}", render_spec(&kq)).unwrap();
            Ok(out)
        }
        PsseCmd::Identify {
            file,
            chain,
            k,
            n,
            q,
        } => {
            let f = load(file)?;
            let c = resolve_chain(&f, chain)?;
            let sys = if *q {
                c.identify_subshift_q(*k, *n).map_err(core_err)?
            } else {
                c.identify_subshift(*k, *n).map_err(core_err)?
            };
            Ok(render_system(&sys))
        }
        PsseCmd::Apply {
            file,
            chain,
            word,
            k,
            n,
        } => {
            let f = load(file)?;
            let c = resolve_chain(&f, chain)?;
            let shape = chain_shape(&f, chain)?;
            let w = parse_word(word, &shape).map_err(|e| usage(format!("error: {e}")))?;
            let code = c.forward_code().map_err(core_err)?;
            let out_word = code.apply_power(&w, *k, *n).map_err(core_err)?;
            let mut out = String::new();
            writeln!(
                out,
                "output {}",
                display_word(&out_word.word, c.base_system().symbol_len())
            )
            .unwrap();
            writeln!(out, "trimmed-left {}", out_word.left).unwrap();
            writeln!(out, "trimmed-right {}", out_word.right).unwrap();
            Ok(out)
        }
        PsseCmd::Encode {
            file,
            chain,
            word,
            k,
            n,
            count,
        } => {
            let f = load(file)?;
            let c = resolve_chain(&f, chain)?;
            let shape = chain_shape(&f, chain)?;
            let w = parse_word(word, &shape).map_err(|e| usage(format!("error: {e}")))?;
            let symbols = c.encode_orbit(&w, *k, *n, *count).map_err(core_err)?;
            let mut flat = String::new();
            for s in &symbols {
                flat.push_str(&s.display_grouped(s.len()));
            }
            Ok(format!("encoded {flat}\n"))
        }
        PsseCmd::FromSpec { file, system, pi } => {
            let f = load(file)?;
            let sys = resolve_sms(&f, system)?;
            let pi_spec = resolve_spec(&f, pi)?;
            let step =
                subshift::sse::step_from_symbolic_automorphism(&sys, &pi_spec).map_err(core_err)?;
            let mut out = String::new();
            writeln!(out, "step from {system} to {system}").unwrap();
            write!(out, "C {{").unwrap();
            for (i, s) in step.c.symbols.iter().enumerate() {
                write!(out, "{}{}", if i > 0 { ", " } else { " " }, s).unwrap();
            }
            writeln!(out, " }}").unwrap();
            write!(out, "D {{").unwrap();
            for (i, s) in step.d.symbols.iter().enumerate() {
                write!(out, "{}{}", if i > 0 { ", " } else { " " }, s).unwrap();
            }
            writeln!(out, " }}").unwrap();
            writeln!(out, "kappa {}", render_spec(&step.kappa0)).unwrap();
            writeln!(out, "kappa' {}", render_spec(&step.kappa1)).unwrap();
            let report = step.validate();
            if report.is_valid() {
                writeln!(out, "valid").unwrap();
                Ok(out)
            } else {
                writeln!(out, "invalid").unwrap();
                for v in &report.violations {
                    writeln!(out, "witness psse {v}").unwrap();
                }
                Err(verdict(out))
            }
        }
    }
}

/// Runs one command, writing the report to `out`; returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> i32 {
    let result = match &cli.command {
        Command::Validate { file, system } => load(file).and_then(|f| cmd_validate(&f, system)),
        Command::Lang {
            file,
            system,
            len,
            base,
        } => load(file).and_then(|f| cmd_lang(&f, system, *len, base)),
        Command::CompareLang {
            file,
            a,
            b,
            len,
            recode,
        } => load(file).and_then(|f| cmd_compare_lang(&f, a, b, *len, recode.as_deref())),
        Command::HigherBlock { file, system, n } => {
            load(file).and_then(|f| cmd_higher_block(&f, system, *n))
        }
        Command::Product {
            file,
            vertical,
            horizontal,
            k,
            n,
        } => load(file).and_then(|f| cmd_product(&f, vertical, horizontal, *k, *n)),
        Command::Textile(cmd) => cmd_textile(cmd),
        Command::Psse(cmd) => cmd_psse(cmd),
    };
    match result {
        Ok(report) => {
            let _ = out.write_all(report.as_bytes());
            0
        }
        Err(failure) => {
            let _ = out.write_all(failure.message.as_bytes());
            if !failure.message.ends_with('\n') {
                let _ = out.write_all(b"\n");
            }
            failure.code
        }
    }
}

/// Parses an argument vector and runs it; test-friendly entry point.
pub fn run_args(args: &[&str], out: &mut dyn std::io::Write) -> i32 {
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out),
        Err(e) => {
            let _ = out.write_all(e.to_string().as_bytes());
            2
        }
    }
}
