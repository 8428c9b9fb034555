//! Simulated observational data and smoothed frequency estimates of the
//! covariate conditionals.
//!
//! Sampling uses ChaCha20 seeded with `seed_from_u64(seed)`; row `r` is
//! drawn from stream `r` of that generator, so each row is reproducible on
//! its own and datasets are bit-exact across platforms. Each variable in
//! information-base order consumes one `f64` draw and takes the first state
//! whose cumulative probability exceeds it.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::model::{ConditionalSource, InfluenceDiagram, InfoBase, Regime};

/// Default additive smoothing constant.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Rows of observed variables, columns in information-base order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub states: Vec<Vec<String>>,
    /// State indices per row.
    pub rows: Vec<Vec<usize>>,
    /// `key=value` pairs written as comments.
    pub metadata: Vec<(String, String)>,
}

impl Dataset {
    pub fn empty(info: &InfoBase) -> Self {
        Dataset {
            columns: info.names().to_vec(),
            states: (0..info.len()).map(|p| info.states(p).to_vec()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&self.columns.join(" "));
        out.push('\n');
        for row in &self.rows {
            let labels: Vec<&str> = row.iter().enumerate().map(|(c, &s)| self.states[c][s].as_str()).collect();
            out.push_str(&labels.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses a dataset whose columns must match the observed variables of `info`.
    pub fn parse(text: &str, info: &InfoBase) -> Result<Self> {
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(Error::Input("dataset must end with a newline".into()));
        }
        let mut data = Dataset::empty(info);
        let mut header = false;
        for (ln, line) in text.lines().enumerate() {
            let ln = ln + 1;
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.trim().split_once('=') {
                    data.metadata.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            let fields: Vec<&str> = line.split(' ').collect();
            if !header {
                if fields != data.columns.iter().map(String::as_str).collect::<Vec<_>>() {
                    return Err(Error::Input(format!(
                        "line {ln}: header `{line}` does not match columns `{}`",
                        data.columns.join(" ")
                    )));
                }
                header = true;
                continue;
            }
            if fields.len() != data.columns.len() {
                return Err(Error::Input(format!(
                    "line {ln}: expected {} fields, got {}",
                    data.columns.len(),
                    fields.len()
                )));
            }
            let row = fields
                .iter()
                .enumerate()
                .map(|(c, f)| {
                    data.states[c].iter().position(|s| s == f).ok_or_else(|| {
                        Error::Input(format!("line {ln}: `{f}` is not a state of `{}`", data.columns[c]))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            data.rows.push(row);
        }
        if !header {
            return Err(Error::Input("dataset has no header line".into()));
        }
        Ok(data)
    }
}

fn draw(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (s, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = s;
        if u < acc {
            return s;
        }
    }
    last
}

/// `n` ancestral draws under `regime`, hidden columns dropped.
pub fn sample(id: &InfluenceDiagram, regime: Regime<'_>, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Input("n must be at least 1".into()));
    }
    let info = id.info();
    let cards = id.cards();
    let base = ChaCha20Rng::seed_from_u64(seed);
    let mut data = Dataset::empty(info);
    data.metadata = vec![
        ("regime".into(), regime.label()),
        ("seed".into(), seed.to_string()),
        ("n".into(), n.to_string()),
    ];
    let mut full = vec![0usize; id.len()];
    for r in 0..n {
        let mut rng = base.clone();
        rng.set_stream(r as u64);
        for v in 0..id.len() {
            let (parents, rows) = match id.stage_of_action(v).and_then(|s| regime.policy_at(s)) {
                Some(p) => (&p.parents, &p.rows),
                None => (&id.cpt(v).parents, &id.cpt(v).rows),
            };
            let idx = crate::model::mixed_radix(parents.iter().map(|&p| (full[p], cards[p])));
            full[v] = draw(&rows[idx], rng.random::<f64>());
        }
        data.rows.push(info.vars().iter().map(|&v| full[v]).collect());
    }
    Ok(data)
}

/// Smoothed relative frequencies `(c + alpha) / (C + K alpha)` of each
/// covariate slot given the observed past.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedConditionals {
    info: InfoBase,
    alpha: f64,
    /// Per stage, counts indexed by the history through the end of the slot.
    counts: Vec<Vec<u64>>,
}

pub fn estimate_conditionals(data: &Dataset, info: &InfoBase, alpha: f64) -> Result<EstimatedConditionals> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Input(format!("alpha must be a finite non-negative number, got {alpha}")));
    }
    if data.columns != info.names() {
        return Err(Error::Input("dataset columns do not match the model".into()));
    }
    for (c, states) in data.states.iter().enumerate() {
        if states.as_slice() != info.states(c) {
            return Err(Error::Input(format!("states of column `{}` do not match the model", data.columns[c])));
        }
    }
    let stages = info.n_actions() + 1;
    let mut counts: Vec<Vec<u64>> = (1..=stages).map(|i| vec![0; info.prefix_count(info.slot(i).end)]).collect();
    for row in &data.rows {
        for (i, c) in counts.iter_mut().enumerate() {
            c[info.index(&row[..info.slot(i + 1).end])] += 1;
        }
    }
    Ok(EstimatedConditionals { info: info.clone(), alpha, counts })
}

impl EstimatedConditionals {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl ConditionalSource for EstimatedConditionals {
    fn info(&self) -> &InfoBase {
        &self.info
    }

    fn slot_conditional(&self, stage: usize, history: &[usize]) -> Option<Vec<f64>> {
        let k = self.info.block_count(self.info.slot(stage));
        let base = self.info.index(history) * k;
        let cell = &self.counts[stage - 1][base..base + k];
        let total: u64 = cell.iter().sum();
        if total == 0 && self.alpha == 0.0 {
            return None;
        }
        let denom = total as f64 + k as f64 * self.alpha;
        Some(cell.iter().map(|&c| (c as f64 + self.alpha) / denom).collect())
    }
}
