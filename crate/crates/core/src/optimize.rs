//! Backward induction for an optimal non-randomized strategy, and the
//! exhaustive enumeration oracle it is checked against.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    consequence_direct, decode_radix, ConditionalSource, InfluenceDiagram, PartialHistory, Policy, Regime,
    ResponseFunctional, Strategy, VarId,
};

/// Tolerance below which two action values count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Largest number of strategies [`enumerate_strategies`] will evaluate.
pub const MAX_ENUMERATED: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sense::Max => candidate > incumbent + TIE_TOL,
            Sense::Min => candidate < incumbent - TIE_TOL,
        }
    }
}

/// Optimal continuation value and chosen action state at each visited
/// history `(l̄_i, ā_{i-1})`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValueFunction {
    entries: BTreeMap<PartialHistory, (f64, usize)>,
}

impl ValueFunction {
    pub fn get(&self, history: &[usize]) -> Option<(f64, usize)> {
        self.entries.get(&PartialHistory(history.to_vec())).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub strategy: Strategy,
    pub value: f64,
    pub values: ValueFunction,
}

/// Replaces the action average of G-recursion with a max (or min). Ties go
/// to the smallest action state. Rows for histories never visited choose
/// the first state.
pub fn optimal_strategy(
    id: &InfluenceDiagram,
    source: &dyn ConditionalSource,
    k: &ResponseFunctional,
    sense: Sense,
) -> Result<Optimum> {
    k.check(id)?;
    let info = source.info();
    if info != id.info() {
        return Err(Error::Input("conditional source does not match the model".into()));
    }
    let actions = id.actions();
    let mut dp = Dp {
        source,
        k,
        sense,
        actions: &actions,
        id,
        choices: actions
            .iter()
            .enumerate()
            .map(|(i, _)| vec![0usize; info.prefix_count(info.action_pos(i + 1))])
            .collect(),
        values: ValueFunction::default(),
    };
    let value = dp.eval(1, &mut Vec::new())?;
    let policies = actions
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let parents = info.vars()[..info.action_pos(i + 1)].to_vec();
            Policy::deterministic(a, parents, id.var(a).card(), &dp.choices[i])
        })
        .collect();
    let name = match sense {
        Sense::Max => "optimal-max",
        Sense::Min => "optimal-min",
    };
    Ok(Optimum { strategy: Strategy::new(id, name, policies)?, value, values: dp.values })
}

struct Dp<'a> {
    source: &'a dyn ConditionalSource,
    k: &'a ResponseFunctional,
    sense: Sense,
    actions: &'a [VarId],
    id: &'a InfluenceDiagram,
    choices: Vec<Vec<usize>>,
    values: ValueFunction,
}

impl Dp<'_> {
    fn eval(&mut self, stage: usize, history: &mut Vec<usize>) -> Result<f64> {
        let info = self.source.info();
        let n = self.actions.len();
        let slot = info.slot(stage);
        let cond = self
            .source
            .slot_conditional(stage, history)
            .ok_or_else(|| Error::Positivity { history: info.describe(history) })?;
        let cards = info.cards()[slot].to_vec();
        let base = history.len();
        let mut total = 0.0;
        for (cfg, &pl) in cond.iter().enumerate() {
            if pl == 0.0 {
                continue;
            }
            history.extend(decode_radix(cfg, &cards));
            let inner = if stage == n + 1 {
                self.k.at(history[info.response_pos()])
            } else {
                let card = self.id.var(self.actions[stage - 1]).card();
                let mut best: Option<(f64, usize)> = None;
                for a in 0..card {
                    history.push(a);
                    let v = self.eval(stage + 1, history)?;
                    history.pop();
                    if best.is_none_or(|(b, _)| self.sense.better(v, b)) {
                        best = Some((v, a));
                    }
                }
                let (v, a) = best.expect("actions have at least one state");
                self.choices[stage - 1][info.index(history)] = a;
                self.values.entries.insert(PartialHistory(history.clone()), (v, a));
                v
            };
            total += pl * inner;
            history.truncate(base);
        }
        Ok(total)
    }
}

/// Evaluates every non-randomized strategy whose policies read the full
/// observed past, by direct summation under the model. Ties keep the
/// lexicographically first policy table.
pub fn enumerate_strategies(id: &InfluenceDiagram, k: &ResponseFunctional, sense: Sense) -> Result<(Strategy, f64)> {
    k.check(id)?;
    let info = id.info();
    let actions = id.actions();
    let mut digits_card = Vec::new();
    let mut spans = Vec::new();
    let mut count: u64 = 1;
    for (i, &a) in actions.iter().enumerate() {
        let rows = info.prefix_count(info.action_pos(i + 1));
        let card = id.var(a).card();
        spans.push(rows);
        for _ in 0..rows {
            digits_card.push(card);
            count = count.saturating_mul(card as u64);
            if count > MAX_ENUMERATED {
                return Err(Error::Capacity(format!("more than {MAX_ENUMERATED} strategies to enumerate")));
            }
        }
    }
    let build = |digits: &[usize]| -> Result<Strategy> {
        let mut offset = 0;
        let policies = actions
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let parents = info.vars()[..info.action_pos(i + 1)].to_vec();
                let choice = &digits[offset..offset + spans[i]];
                offset += spans[i];
                Policy::deterministic(a, parents, id.var(a).card(), choice)
            })
            .collect();
        Strategy::new(id, "enumerated", policies)
    };
    let mut digits = vec![0usize; digits_card.len()];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let s = build(&digits)?;
        let v = consequence_direct(id, Regime::Interventional(&s), k)?;
        if best.as_ref().is_none_or(|(_, b)| sense.better(v, *b)) {
            best = Some((digits.clone(), v));
        }
        // odometer: the last digit turns fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                let (d, v) = best.expect("at least one strategy");
                return Ok((build(&d)?, v));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < digits_card[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}
