use std::fmt;
use std::ops::Range;

use super::{decode_radix, mixed_radix, Kind, Stage, VarId, Variable};

/// Layout of the observable information base `(L_1, A_1, ..., L_N, A_N, Y)`.
///
/// A history is a prefix of state indices over [`InfoBase::vars`]. Histories
/// of interest end on a slot or action boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoBase {
    vars: Vec<VarId>,
    names: Vec<String>,
    states: Vec<Vec<String>>,
    cards: Vec<usize>,
    slots: Vec<Range<usize>>,
    actions: Vec<usize>,
    response_pos: usize,
    n_domain: usize,
}

impl InfoBase {
    pub(crate) fn new(all: &[Variable], stages: &[Stage]) -> Self {
        let mut vars = Vec::new();
        let mut slots = Vec::new();
        let mut actions = Vec::new();
        for stage in stages {
            let start = vars.len();
            vars.extend(stage.observables.iter().copied());
            slots.push(start..vars.len());
            if let Some(a) = stage.action {
                actions.push(vars.len());
                vars.push(a);
            }
        }
        let response_pos = vars
            .iter()
            .position(|&v| all[v].kind == Kind::Response)
            .expect("diagram has a response");
        InfoBase {
            names: vars.iter().map(|&v| all[v].name.clone()).collect(),
            states: vars.iter().map(|&v| all[v].states.clone()).collect(),
            cards: vars.iter().map(|&v| all[v].card()).collect(),
            vars,
            slots,
            actions,
            response_pos,
            n_domain: all.len(),
        }
    }

    /// Observed variables in information-base order.
    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// State labels of the variable at position `pos`.
    pub fn states(&self, pos: usize) -> &[String] {
        &self.states[pos]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Positions of the covariates of stage `i` (1-based, `i <= N+1`).
    pub fn slot(&self, stage: usize) -> Range<usize> {
        self.slots[stage - 1].clone()
    }

    /// Position of action `A_i` (1-based).
    pub fn action_pos(&self, stage: usize) -> usize {
        self.actions[stage - 1]
    }

    pub fn response_pos(&self) -> usize {
        self.response_pos
    }

    /// Position of a domain variable, `None` if it is hidden.
    pub fn position(&self, var: VarId) -> Option<usize> {
        self.vars.iter().position(|&v| v == var)
    }

    pub(crate) fn n_domain(&self) -> usize {
        self.n_domain
    }

    /// Number of distinct prefixes of length `len`.
    pub fn prefix_count(&self, len: usize) -> usize {
        self.cards[..len].iter().product()
    }

    /// Number of joint configurations of positions `range`.
    pub fn block_count(&self, range: Range<usize>) -> usize {
        self.cards[range].iter().product()
    }

    pub fn index(&self, history: &[usize]) -> usize {
        mixed_radix(history.iter().copied().zip(self.cards.iter().copied()))
    }

    pub fn decode(&self, len: usize, index: usize) -> Vec<usize> {
        decode_radix(index, &self.cards[..len])
    }

    /// Prefix lengths of the boundary histories, shortest first:
    /// `∅, (l̄_1), (l̄_1, a_1), ..., (l̄_N, ā_N), full`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = vec![0];
        for i in 0..self.slots.len() {
            out.push(self.slots[i].end);
            if let Some(&a) = self.actions.get(i) {
                out.push(a + 1);
            }
        }
        out
    }

    /// Human-readable `name=state` list.
    pub fn describe(&self, history: &[usize]) -> String {
        if history.is_empty() {
            return "(empty)".into();
        }
        history
            .iter()
            .enumerate()
            .map(|(p, &s)| format!("{}={}", self.names[p], self.states[p][s]))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// A prefix of the observable information base.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialHistory(pub Vec<usize>);

impl PartialHistory {
    pub fn display<'a>(&'a self, info: &'a InfoBase) -> impl fmt::Display + 'a {
        struct Show<'a>(&'a PartialHistory, &'a InfoBase);
        impl fmt::Display for Show<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.1.describe(&self.0 .0))
            }
        }
        Show(self, info)
    }
}

/// Source of the covariate conditionals `p(l_i | l̄_{i-1}, ā_{i-1})`.
///
/// Implemented by the exact observational law of a model and by estimates
/// from data, so G-recursion and optimization run unchanged on either.
pub trait ConditionalSource {
    fn info(&self) -> &InfoBase;

    /// Distribution over the joint states of slot `stage` (1-based, mixed
    /// radix over the slot's positions) given `history`, whose length is
    /// the slot start. `None` when the conditioning event has probability 0.
    fn slot_conditional(&self, stage: usize, history: &[usize]) -> Option<Vec<f64>>;
}
