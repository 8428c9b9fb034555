//! Line-oriented model language.
//!
//! ```text
//! var L kind=obs states=0,1
//! var A kind=act states=0,1
//! var Y kind=resp states=0,1
//! order L A Y
//! edge L A
//! edge A Y
//! cpt L |
//! row : 0.4 0.6
//! cpt A | L
//! row 0 : 0.5 0.5
//! row 1 : 0.2 0.8
//! cpt Y | A
//! row 0 : 0.9 0.1
//! row 1 : 0.3 0.7
//! strategy treat
//! assign A | L
//! row 0 : 1
//! prow 1 : 0.5 0.5
//! ```
//!
//! `#` starts a comment. `sigma` names the regime node; arrows from it into
//! actions are implied. Probabilities are printed in shortest round-trip
//! form so that printing and re-parsing reproduces a document exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{
    check_row, mixed_radix, DiagramBuilder, InfluenceDiagram, Kind, Policy, Strategy, Variable, SIGMA,
};

/// A parsed and validated model with its strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub diagram: InfluenceDiagram,
    pub strategies: Vec<Strategy>,
}

impl ModelDocument {
    pub fn strategy(&self, name: &str) -> Result<&Strategy> {
        self.strategies
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Input(format!("unknown strategy `{name}`")))
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

fn err(pos: Pos, msg: impl std::fmt::Display) -> Error {
    Error::Input(format!("line {}:{}: {msg}", pos.line, pos.col))
}

struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

fn tokens(line: &str, ln: usize) -> Vec<Token<'_>> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in body.char_indices().chain([(body.len(), ' ')]) {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token { text: &body[s..i], pos: Pos { line: ln, col: s + 1 } });
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn list(text: &str) -> Vec<String> {
    if text.is_empty() {
        Vec::new()
    } else {
        text.split(',').map(String::from).collect()
    }
}

struct RawRow {
    pos: Pos,
    config: Vec<String>,
    values: Vec<String>,
    randomized: bool,
}

struct RawTable {
    pos: Pos,
    target: String,
    target_pos: Pos,
    parents: Vec<(String, Pos)>,
    rows: Vec<RawRow>,
}

struct RawStrategy {
    pos: Pos,
    name: String,
    assigns: Vec<RawTable>,
}

enum Block {
    None,
    Cpt,
    Strategy,
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<ModelDocument> {
    let mut vars: Vec<(Variable, Pos)> = Vec::new();
    let mut order: Option<(Vec<(String, Pos)>, Pos)> = None;
    let mut edges: Vec<(String, String, Pos, Pos)> = Vec::new();
    let mut parent_decls: Vec<(bool, String, Vec<String>, Pos)> = Vec::new();
    let mut cpts: Vec<RawTable> = Vec::new();
    let mut strategies: Vec<RawStrategy> = Vec::new();
    let mut block = Block::None;

    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let toks = tokens(line, ln);
        let Some(head) = toks.first() else { continue };
        let need = |n: usize, usage: &str| -> Result<()> {
            if toks.len() < n {
                Err(err(head.pos, format!("expected `{usage}`")))
            } else {
                Ok(())
            }
        };
        match head.text {
            "var" => {
                need(4, "var <name> kind=<obs|hid|act|resp> states=<s1,...>")?;
                if toks.len() > 4 {
                    return Err(err(toks[4].pos, "unexpected token"));
                }
                let kind = toks[2]
                    .text
                    .strip_prefix("kind=")
                    .ok_or_else(|| err(toks[2].pos, "expected kind=<obs|hid|act|resp>"))?
                    .parse::<Kind>()
                    .map_err(|e| err(toks[2].pos, e))?;
                let states = toks[3]
                    .text
                    .strip_prefix("states=")
                    .ok_or_else(|| err(toks[3].pos, "expected states=<s1,...>"))?;
                let states = list(states);
                if states.iter().any(String::is_empty) || states.is_empty() {
                    return Err(err(toks[3].pos, "empty state label"));
                }
                vars.push((Variable { name: toks[1].text.to_string(), kind, states }, toks[1].pos));
                block = Block::None;
            }
            "order" => {
                if order.is_some() {
                    return Err(err(head.pos, "order declared twice"));
                }
                order = Some((toks[1..].iter().map(|t| (t.text.to_string(), t.pos)).collect(), head.pos));
                block = Block::None;
            }
            "edge" => {
                need(3, "edge <parent> <child>")?;
                if toks.len() > 3 {
                    return Err(err(toks[3].pos, "unexpected token"));
                }
                edges.push((toks[1].text.to_string(), toks[2].text.to_string(), toks[1].pos, toks[2].pos));
                block = Block::None;
            }
            "obs-parents" | "int-parents" => {
                need(2, "obs-parents <action> <p1,...>")?;
                if toks.len() > 3 {
                    return Err(err(toks[3].pos, "unexpected token"));
                }
                let ps = toks.get(2).map(|t| list(t.text)).unwrap_or_default();
                parent_decls.push((head.text == "obs-parents", toks[1].text.to_string(), ps, head.pos));
                block = Block::None;
            }
            "cpt" => {
                cpts.push(table_header(&toks, "cpt <var> | <q1,...>")?);
                block = Block::Cpt;
            }
            "strategy" => {
                need(2, "strategy <name>")?;
                strategies.push(RawStrategy { pos: head.pos, name: toks[1].text.to_string(), assigns: Vec::new() });
                block = Block::Strategy;
            }
            "assign" => {
                let Block::Strategy = block else {
                    return Err(err(head.pos, "`assign` outside a strategy block"));
                };
                let t = table_header(&toks, "assign <action> | <h1,...>")?;
                strategies.last_mut().expect("strategy block open").assigns.push(t);
            }
            "row" | "prow" => {
                let table = match block {
                    Block::Cpt => cpts.last_mut(),
                    Block::Strategy => strategies.last_mut().and_then(|s| s.assigns.last_mut()),
                    Block::None => None,
                }
                .ok_or_else(|| err(head.pos, "row outside a table"))?;
                let randomized = head.text == "prow" || matches!(block, Block::Cpt);
                if head.text == "prow" && matches!(block, Block::Cpt) {
                    return Err(err(head.pos, "`prow` is only valid inside a strategy"));
                }
                let colon = toks
                    .iter()
                    .position(|t| t.text == ":")
                    .ok_or_else(|| err(head.pos, "expected `:` in row"))?;
                let config = match colon {
                    1 => Vec::new(),
                    2 => list(toks[1].text),
                    _ => return Err(err(toks[2].pos, "parent states must be one comma-separated token")),
                };
                let values: Vec<String> = toks[colon + 1..].iter().map(|t| t.text.to_string()).collect();
                if values.is_empty() {
                    return Err(err(toks[colon].pos, "row has no values"));
                }
                table.rows.push(RawRow { pos: head.pos, config, values, randomized });
            }
            other => return Err(err(head.pos, format!("unknown directive `{other}`"))),
        }
    }

    // Name-level checks that can point at a source position.
    let by_name: HashMap<&str, (&Variable, Pos)> = vars.iter().map(|(v, p)| (v.name.as_str(), (v, *p))).collect();
    let rank: HashMap<&str, usize> = match &order {
        Some((names, _)) => names.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect(),
        None => vars.iter().enumerate().map(|(i, (v, _))| (v.name.as_str(), i)).collect(),
    };
    if let Some((names, _)) = &order {
        for (n, p) in names {
            if !by_name.contains_key(n.as_str()) {
                return Err(err(*p, format!("unknown variable `{n}`")));
            }
        }
    }
    for (p, c, pp, cp) in &edges {
        if c == SIGMA {
            return Err(err(*cp, "the regime node `sigma` cannot have parents"));
        }
        let (child, _) = by_name.get(c.as_str()).ok_or_else(|| err(*cp, format!("unknown variable `{c}`")))?;
        if p == SIGMA {
            if child.kind != Kind::Action {
                return Err(err(*cp, format!("arrow from sigma into non-action `{c}`")));
            }
            continue;
        }
        if !by_name.contains_key(p.as_str()) {
            return Err(err(*pp, format!("unknown variable `{p}`")));
        }
        if let (Some(rp), Some(rc)) = (rank.get(p.as_str()), rank.get(c.as_str())) {
            if rp >= rc {
                return Err(err(*pp, format!("edge {p} -> {c} runs backwards in the order")));
            }
        }
    }

    let mut b = DiagramBuilder::new();
    for (v, _) in &vars {
        b.variable(v.clone());
    }
    if let Some((names, _)) = &order {
        b.order_owned(names.iter().map(|(n, _)| n.clone()).collect());
    }
    for (p, c, _, _) in &edges {
        b.edge(p, c);
    }
    for (obs, a, ps, _) in &parent_decls {
        if *obs {
            b.obs_parents_owned(a.clone(), ps.clone());
        } else {
            b.int_parents_owned(a.clone(), ps.clone());
        }
    }
    for t in &cpts {
        let (child, _) = by_name
            .get(t.target.as_str())
            .ok_or_else(|| err(t.target_pos, format!("unknown variable `{}`", t.target)))?;
        let rows = table_rows(t, child, &by_name, |row| {
            let probs = row
                .values
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| err(row.pos, format!("`{v}` is not a number"))))
                .collect::<Result<Vec<f64>>>()?;
            if probs.len() != child.card() {
                return Err(err(row.pos, format!("expected {} probabilities, got {}", child.card(), probs.len())));
            }
            check_row(&probs, || format!("line {}:{}: row for `{}`", row.pos.line, row.pos.col, t.target))?;
            Ok(probs)
        })?;
        b.cpt_owned(t.target.clone(), t.parents.iter().map(|(n, _)| n.clone()).collect(), rows);
    }
    let diagram = b.build()?;

    let mut parsed = Vec::new();
    for s in &strategies {
        if parsed.iter().any(|p: &Strategy| p.name == s.name) {
            return Err(err(s.pos, format!("strategy `{}` declared twice", s.name)));
        }
        let mut policies = Vec::new();
        for t in &s.assigns {
            let (action, _) = by_name
                .get(t.target.as_str())
                .ok_or_else(|| err(t.target_pos, format!("unknown variable `{}`", t.target)))?;
            let rows = table_rows(t, action, &by_name, |row| {
                if row.randomized {
                    let probs = row
                        .values
                        .iter()
                        .map(|v| v.parse::<f64>().map_err(|_| err(row.pos, format!("`{v}` is not a number"))))
                        .collect::<Result<Vec<f64>>>()?;
                    if probs.len() != action.card() {
                        return Err(err(row.pos, format!("expected {} probabilities", action.card())));
                    }
                    check_row(&probs, || format!("line {}:{}: policy row", row.pos.line, row.pos.col))?;
                    Ok(probs)
                } else {
                    if row.values.len() != 1 {
                        return Err(err(row.pos, "deterministic row takes exactly one action state"));
                    }
                    let s = action
                        .state(&row.values[0])
                        .ok_or_else(|| err(row.pos, format!("`{}` is not a state of `{}`", row.values[0], t.target)))?;
                    Ok((0..action.card()).map(|i| if i == s { 1.0 } else { 0.0 }).collect())
                }
            })?;
            let parents = t
                .parents
                .iter()
                .map(|(n, p)| diagram.var_id(n).map_err(|e| err(*p, e)))
                .collect::<Result<Vec<_>>>()?;
            let a = diagram.var_id(&t.target).map_err(|e| err(t.target_pos, e))?;
            policies.push(Policy { action: a, parents, rows });
        }
        parsed.push(Strategy::new(&diagram, s.name.clone(), policies).map_err(|e| err(s.pos, e))?);
    }
    Ok(ModelDocument { diagram, strategies: parsed })
}

fn table_header(toks: &[Token<'_>], usage: &str) -> Result<RawTable> {
    let head = &toks[0];
    if toks.len() < 3 || toks[2].text != "|" {
        return Err(err(head.pos, format!("expected `{usage}`")));
    }
    if toks.len() > 4 {
        return Err(err(toks[4].pos, "parents must be one comma-separated token"));
    }
    let parents = match toks.get(3) {
        Some(t) => {
            let mut col = t.pos.col;
            list(t.text)
                .into_iter()
                .map(|n| {
                    let p = Pos { line: t.pos.line, col };
                    col += n.len() + 1;
                    (n, p)
                })
                .collect()
        }
        None => Vec::new(),
    };
    Ok(RawTable { pos: head.pos, target: toks[1].text.to_string(), target_pos: toks[1].pos, parents, rows: Vec::new() })
}

/// Orders rows by parent configuration, rejecting duplicates and gaps.
fn table_rows(
    t: &RawTable,
    target: &Variable,
    by_name: &HashMap<&str, (&Variable, Pos)>,
    convert: impl Fn(&RawRow) -> Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    let parents = t
        .parents
        .iter()
        .map(|(n, p)| by_name.get(n.as_str()).map(|(v, _)| *v).ok_or_else(|| err(*p, format!("unknown variable `{n}`"))))
        .collect::<Result<Vec<&Variable>>>()?;
    let count: usize = parents.iter().map(|v| v.card()).product();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; count];
    for row in &t.rows {
        if row.config.len() != parents.len() {
            return Err(err(row.pos, format!("expected {} parent states", parents.len())));
        }
        let digits = row
            .config
            .iter()
            .zip(&parents)
            .map(|(s, v)| {
                v.state(s)
                    .map(|d| (d, v.card()))
                    .ok_or_else(|| err(row.pos, format!("`{s}` is not a state of `{}`", v.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let idx = mixed_radix(digits);
        if rows[idx].is_some() {
            return Err(err(row.pos, format!("duplicate row `{}` for `{}`", row.config.join(","), target.name)));
        }
        rows[idx] = Some(convert(row)?);
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| {
                let digits = crate::model::decode_radix(i, &parents.iter().map(|v| v.card()).collect::<Vec<_>>());
                let cfg: Vec<&str> = digits.iter().zip(&parents).map(|(&d, v)| v.states[d].as_str()).collect();
                err(t.pos, format!("missing row `{}` for `{}`", cfg.join(","), target.name))
            })
        })
        .collect()
}

fn fmt_row(p: &[f64]) -> String {
    p.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Prints a document in the model language.
pub fn print_model(doc: &ModelDocument) -> String {
    let id = &doc.diagram;
    let mut out = String::new();
    for v in id.vars() {
        let _ = writeln!(out, "var {} kind={} states={}", v.name, v.kind, v.states.join(","));
    }
    let _ = writeln!(out, "order {}", id.vars().iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(" "));
    for (p, c) in id.dag().edges() {
        let _ = writeln!(out, "edge {} {}", id.dag().name(p), id.dag().name(c));
    }
    let join = |ps: &[usize]| id.names(ps).join(",");
    let head = |kw: &str, name: &str, list: String| {
        if list.is_empty() {
            format!("{kw} {name}")
        } else {
            format!("{kw} {name} {list}")
        }
    };
    for a in id.actions() {
        let _ = writeln!(out, "{}", head("obs-parents", id.name(a), join(id.obs_parents(a))));
        let _ = writeln!(out, "{}", head("int-parents", id.name(a), join(id.int_parents(a))));
    }
    let config = |parents: &[usize], r: usize| -> String {
        let cards: Vec<usize> = parents.iter().map(|&p| id.var(p).card()).collect();
        let digits = crate::model::decode_radix(r, &cards);
        parents.iter().zip(digits).map(|(&p, d)| id.var(p).states[d].clone()).collect::<Vec<_>>().join(",")
    };
    let row_line = |kw: &str, cfg: String, rest: String| {
        if cfg.is_empty() {
            format!("{kw} : {rest}")
        } else {
            format!("{kw} {cfg} : {rest}")
        }
    };
    for cpt in id.cpts() {
        let _ = writeln!(out, "{}", head("cpt", &format!("{} |", id.name(cpt.child)), join(&cpt.parents)));
        for (r, row) in cpt.rows.iter().enumerate() {
            let _ = writeln!(out, "{}", row_line("row", config(&cpt.parents, r), fmt_row(row)));
        }
    }
    for s in &doc.strategies {
        let _ = writeln!(out, "strategy {}", s.name);
        for p in s.policies() {
            let _ = writeln!(out, "{}", head("assign", &format!("{} |", id.name(p.action)), join(&p.parents)));
            for (r, row) in p.rows.iter().enumerate() {
                let line = match row.iter().position(|&x| x == 1.0) {
                    Some(s) if row.iter().all(|&x| x == 0.0 || x == 1.0) => {
                        row_line("row", config(&p.parents, r), id.var(p.action).states[s].clone())
                    }
                    _ => row_line("prow", config(&p.parents, r), fmt_row(row)),
                };
                let _ = writeln!(out, "{line}");
            }
        }
    }
    out
}
