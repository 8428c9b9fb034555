//! Command-line surface. Every command prints `key=value` lines and exits
//! with 0 on success, 1 when the checked condition is false and 2 on usage
//! or model errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::admissible::{check_admissible, compute_candidate_sequence, improve_sequence, search_admissible_ordering};
use crate::data::{estimate_conditionals, sample, Dataset, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::format::{parse_model, ModelDocument};
use crate::grecursion::{check_graphsep, g_recursion, verify_general_conditions};
use crate::model::{
    consequence_direct, InfluenceDiagram, ObservableLaw, Policy, Regime, ResponseFunctional, Strategy, VarId,
};
use crate::optimize::{optimal_strategy, Sense};
use crate::stability::{
    check_positivity, check_sequential_irrelevance_numeric, check_sequential_randomization,
    check_simple_stability_graphical, check_simple_stability_numeric, StabilityReport,
};

#[derive(Debug, Parser)]
#[command(name = "gcomp", version, about = "Identifiability checks and G-recursion for influence diagrams")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ModelArg {
    /// Model file in the line-oriented model language.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, clap::Args)]
struct KArg {
    /// Values of k(y), one per response state; defaults to the numeric state labels.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Consequence of a strategy by G-recursion, or by direct summation with --direct.
    Evaluate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        direct: bool,
        #[command(flatten)]
        k: KArg,
    },
    /// G-recursion on the exact observational conditionals.
    Grec {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strategy: String,
        #[command(flatten)]
        k: KArg,
    },
    /// Simple stability, graphically or numerically against strategies.
    Stability {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        numeric: bool,
        /// Strategies to compare against; all declared strategies if omitted.
        #[arg(long)]
        strategy: Vec<String>,
    },
    /// Structural sequential randomization.
    Seqrand {
        #[command(flatten)]
        model: ModelArg,
    },
    /// Numeric sequential irrelevance and extended positivity.
    Seqirrel {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strategy: Vec<String>,
    },
    /// Positivity conditions for one strategy.
    Positivity {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strategy: String,
    },
    /// Separation of the response from the regime in the auxiliary diagrams.
    Graphsep {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strategy: String,
    },
    /// Numeric check of the conditions behind G-recursion without stability.
    VerifyGeneral {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strategy: String,
    },
    /// Admissible orderings and sequences.
    Admissible {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        strategy: Option<String>,
        /// Action order, comma-separated; searched if omitted.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        #[arg(long)]
        improve: bool,
    },
    /// Optimal non-randomized strategy by backward induction.
    Optimize {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        min: bool,
        #[command(flatten)]
        k: KArg,
    },
    /// Sample a dataset under a regime.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        /// `obs` or a strategy name.
        #[arg(long)]
        regime: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// G-recursion on conditionals estimated from a dataset.
    Estimate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[command(flatten)]
        k: KArg,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses arguments (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome { code: 0, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: 2, stdout: String::new(), stderr: text },
            };
        }
    };
    let mut out = String::new();
    match execute(cli.command, &mut out) {
        Ok(true) => Outcome { code: 0, stdout: out, stderr: String::new() },
        Ok(false) => Outcome { code: 1, stdout: out, stderr: String::new() },
        Err(e) => Outcome { code: 2, stdout: out, stderr: format!("error: {e}\n") },
    }
}

fn load(arg: &ModelArg) -> Result<ModelDocument> {
    let text = fs::read_to_string(&arg.model)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", arg.model.display())))?;
    parse_model(&text)
}

fn response_k(id: &InfluenceDiagram, k: &KArg) -> Result<ResponseFunctional> {
    let f = match &k.k {
        Some(v) => ResponseFunctional(v.clone()),
        None => ResponseFunctional::from_labels(id)?,
    };
    f.check(id)?;
    Ok(f)
}

fn num(x: f64) -> String {
    format!("{x:.12}")
}

fn line(out: &mut String, key: impl std::fmt::Display, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn stages(out: &mut String, report: &StabilityReport) {
    for s in &report.stages {
        line(out, format_args!("stage.{}", s.stage), s.holds);
        if let Some(w) = &s.witness {
            line(out, format_args!("witness.{}", s.stage), w);
        }
    }
}

fn pick_strategies(doc: &ModelDocument, names: &[String]) -> Result<Vec<Strategy>> {
    if names.is_empty() {
        return Ok(doc.strategies.clone());
    }
    names.iter().map(|n| doc.strategy(n).cloned()).collect()
}

fn set_names(id: &InfluenceDiagram, set: &[VarId]) -> String {
    id.names(set).join(",")
}

fn execute(command: Command, out: &mut String) -> Result<bool> {
    match command {
        Command::Evaluate { model, strategy, direct, k } => {
            let doc = load(&model)?;
            let id = &doc.diagram;
            let s = doc.strategy(&strategy)?;
            let k = response_k(id, &k)?;
            let (method, v) = if direct {
                ("direct", consequence_direct(id, Regime::Interventional(s), &k)?)
            } else {
                ("grecursion", g_recursion(&ObservableLaw::new(id, Regime::Observational)?, s, &k)?)
            };
            line(out, "strategy", &s.name);
            line(out, "method", method);
            line(out, "consequence", num(v));
            Ok(true)
        }
        Command::Grec { model, strategy, k } => {
            let doc = load(&model)?;
            let id = &doc.diagram;
            let s = doc.strategy(&strategy)?;
            let k = response_k(id, &k)?;
            let law = ObservableLaw::new(id, Regime::Observational)?;
            let gamma = crate::grecursion::gamma_support(&law.support(), s);
            line(out, "strategy", &s.name);
            line(out, "gamma_full_histories", gamma.histories(id.info().len()).len());
            line(out, "consequence", num(g_recursion(&law, s, &k)?));
            Ok(true)
        }
        Command::Stability { model, numeric, strategy } => {
            let doc = load(&model)?;
            let id = &doc.diagram;
            let report = if numeric {
                let ss = pick_strategies(&doc, &strategy)?;
                line(out, "regimes", std::iter::once("obs".to_string()).chain(ss.iter().map(|s| s.name.clone())).collect::<Vec<_>>().join(","));
                check_simple_stability_numeric(id, &ss)?
            } else {
                check_simple_stability_graphical(id)
            };
            line(out, "mode", if numeric { "numeric" } else { "graphical" });
            line(out, "simple_stability", report.holds());
            stages(out, &report);
            Ok(report.holds())
        }
        Command::Seqrand { model } => {
            let doc = load(&model)?;
            let ok = check_sequential_randomization(&doc.diagram);
            line(out, "sequential_randomization", ok);
            Ok(ok)
        }
        Command::Seqirrel { model, strategy } => {
            let doc = load(&model)?;
            let ss = pick_strategies(&doc, &strategy)?;
            let r = check_sequential_irrelevance_numeric(&doc.diagram, &ss)?;
            line(out, "sequential_irrelevance", r.irrelevance.holds());
            stages(out, &r.irrelevance);
            for (name, ok) in &r.extended_positivity {
                line(out, format_args!("extended_positivity.{name}"), ok);
            }
            Ok(r.irrelevance.holds())
        }
        Command::Positivity { model, strategy } => {
            let doc = load(&model)?;
            let s = doc.strategy(&strategy)?;
            let r = check_positivity(&doc.diagram, s)?;
            line(out, "strategy", &s.name);
            line(out, "simple", r.simple);
            line(out, "extended", r.extended);
            line(out, "parent_child", r.parent_child);
            line(out, "general", r.general);
            for (key, w) in [
                ("simple_witness", &r.simple_witness),
                ("parent_child_witness", &r.parent_child_witness),
                ("general_witness", &r.general_witness),
            ] {
                if let Some(w) = w {
                    line(out, key, w);
                }
            }
            Ok(r.simple)
        }
        Command::Graphsep { model, strategy } => {
            let doc = load(&model)?;
            let s = doc.strategy(&strategy)?;
            let r = check_graphsep(&doc.diagram, s);
            line(out, "strategy", &s.name);
            line(out, "graphsep", r.holds());
            for st in &r.stages {
                line(out, format_args!("stage.{}", st.stage), st.separated);
                if let Some(w) = &st.witness {
                    line(out, format_args!("witness.{}", st.stage), w.join("-"));
                }
            }
            Ok(r.holds())
        }
        Command::VerifyGeneral { model, strategy } => {
            let doc = load(&model)?;
            let s = doc.strategy(&strategy)?;
            let r = verify_general_conditions(&doc.diagram, s)?;
            line(out, "strategy", &s.name);
            line(out, "general_conditions", r.holds());
            line(out, "support_equivalence", r.support_equivalence);
            line(out, "l_factor", r.l_factor);
            line(out, "action_factor", r.action_factor);
            line(out, "y_bridge", r.y_bridge);
            line(out, "gamma_positivity", r.gamma_positivity);
            if let Some(d) = r.discrepancies.first() {
                line(out, "first_discrepancy", d);
            }
            if let Some((g, d)) = r.recursion {
                line(out, "consequence_grecursion", num(g));
                line(out, "consequence_direct", num(d));
            }
            Ok(r.holds())
        }
        Command::Admissible { model, strategy, order, improve } => {
            let doc = load(&model)?;
            let id = &doc.diagram;
            let s = strategy.as_deref().map(|n| doc.strategy(n)).transpose()?;
            let seq = match order {
                Some(names) => {
                    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                    let order = id.var_ids(&refs)?;
                    compute_candidate_sequence(id, s, &order)?
                }
                None => match search_admissible_ordering(id, s)? {
                    Some(seq) => seq,
                    None => {
                        line(out, "ordering", "none");
                        line(out, "admissible", false);
                        return Ok(false);
                    }
                },
            };
            line(out, "ordering", id.names(&seq.order).join(","));
            line(out, "sequence", seq.sets.iter().map(|set| set_names(id, set)).collect::<Vec<_>>().join(";"));
            line(out, "m", seq.m.iter().map(|set| set_names(id, set)).collect::<Vec<_>>().join(";"));
            for (i, (ok, w)) in seq.verdicts.iter().zip(&seq.witnesses).enumerate() {
                line(out, format_args!("stage.{}", i + 1), ok);
                if let Some(w) = w {
                    line(out, format_args!("witness.{}", i + 1), w.join("-"));
                }
            }
            line(out, "admissible", seq.admissible());
            if improve && seq.admissible() {
                let better = improve_sequence(id, s, &seq)?;
                debug_assert!(check_admissible(id, s, &better.order, &better.sets)?.admissible());
                line(
                    out,
                    "improved",
                    better.sets.iter().map(|set| set_names(id, set)).collect::<Vec<_>>().join(";"),
                );
            }
            Ok(seq.admissible())
        }
        Command::Optimize { model, min, k } => {
            let doc = load(&model)?;
            let id = &doc.diagram;
            let k = response_k(id, &k)?;
            let stable = check_simple_stability_graphical(id).holds();
            let licensed = stable || check_graphsep(id, &full_history_strategy(id)?).holds();
            line(out, "license", if stable { "simple_stability" } else if licensed { "graphsep" } else { "none" });
            if !licensed {
                return Ok(false);
            }
            let law = ObservableLaw::new(id, Regime::Observational)?;
            let opt = optimal_strategy(id, &law, &k, if min { Sense::Min } else { Sense::Max })?;
            line(out, "sense", if min { "min" } else { "max" });
            line(out, "value", num(opt.value));
            let info = id.info();
            for (i, p) in opt.strategy.policies().iter().enumerate() {
                let pos = info.action_pos(i + 1);
                for (r, row) in p.rows.iter().enumerate() {
                    let h = info.decode(pos, r);
                    if opt.values.get(&h).is_none() {
                        continue;
                    }
                    let a = row.iter().position(|&x| x == 1.0).expect("deterministic row");
                    line(
                        out,
                        format_args!("policy.{}[{}]", id.name(p.action), info.describe(&h)),
                        &id.var(p.action).states[a],
                    );
                }
            }
            Ok(true)
        }
        Command::Simulate { model, regime, n, seed, out: path } => {
            let doc = load(&model)?;
            let id = &doc.diagram;
            let data = if regime == "obs" {
                sample(id, Regime::Observational, n, seed)?
            } else {
                sample(id, Regime::Interventional(doc.strategy(&regime)?), n, seed)?
            };
            fs::write(&path, data.to_text())
                .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
            line(out, "regime", &regime);
            line(out, "rows", data.len());
            line(out, "out", path.display());
            Ok(true)
        }
        Command::Estimate { model, data, strategy, alpha, k } => {
            let doc = load(&model)?;
            let id = &doc.diagram;
            let s = doc.strategy(&strategy)?;
            let k = response_k(id, &k)?;
            let text = fs::read_to_string(&data)
                .map_err(|e| Error::Input(format!("cannot read {}: {e}", data.display())))?;
            let ds = Dataset::parse(&text, id.info())?;
            let est = estimate_conditionals(&ds, id.info(), alpha)?;
            line(out, "strategy", &s.name);
            line(out, "rows", ds.len());
            line(out, "alpha", alpha);
            line(out, "consequence", num(g_recursion(&est, s, &k)?));
            Ok(true)
        }
    }
}

/// Uniform strategy whose policies read the whole observed past; its
/// auxiliary diagrams cover every strategy the optimizer may return.
fn full_history_strategy(id: &InfluenceDiagram) -> Result<Strategy> {
    let info = id.info();
    let policies = id
        .actions()
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let parents = info.vars()[..info.action_pos(i + 1)].to_vec();
            let rows = info.prefix_count(info.action_pos(i + 1));
            let card = id.var(a).card();
            Policy { action: a, parents, rows: vec![vec![1.0 / card as f64; card]; rows] }
        })
        .collect();
    Strategy::new(id, "full-history", policies)
}
