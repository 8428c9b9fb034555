use super::{check_row, mixed_radix, InfluenceDiagram, InfoBase, Kind, VarId};
use crate::error::{Error, Result};

/// Decision rule for one action: a distribution over the action's states for
/// every configuration of its policy parents (mixed radix, first parent most
/// significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub action: VarId,
    pub parents: Vec<VarId>,
    pub rows: Vec<Vec<f64>>,
}

impl Policy {
    /// Point-mass rule choosing `choice[row]` in each row.
    pub fn deterministic(action: VarId, parents: Vec<VarId>, card: usize, choice: &[usize]) -> Self {
        let rows = choice
            .iter()
            .map(|&c| (0..card).map(|s| if s == c { 1.0 } else { 0.0 }).collect())
            .collect();
        Policy { action, parents, rows }
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&p| p == 0.0 || p == 1.0))
    }
}

/// A control strategy: one policy per action, depending on observed
/// predecessors only. Policies are kept in stage order.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub name: String,
    policies: Vec<Policy>,
    positions: Vec<Vec<usize>>,
}

impl Strategy {
    pub fn new(id: &InfluenceDiagram, name: impl Into<String>, mut policies: Vec<Policy>) -> Result<Self> {
        let name = name.into();
        let actions = id.actions();
        for p in &policies {
            if id.var(p.action).kind != Kind::Action {
                return Err(Error::Policy(format!(
                    "strategy `{name}` assigns non-action `{}`",
                    id.name(p.action)
                )));
            }
        }
        policies.sort_by_key(|p| p.action);
        for w in policies.windows(2) {
            if w[0].action == w[1].action {
                return Err(Error::Policy(format!(
                    "strategy `{name}` assigns `{}` twice",
                    id.name(w[0].action)
                )));
            }
        }
        if let Some(&missing) = actions.iter().find(|a| !policies.iter().any(|p| p.action == **a)) {
            return Err(Error::Policy(format!(
                "strategy `{name}` has no policy for `{}`",
                id.name(missing)
            )));
        }
        let info = id.info();
        let mut positions = Vec::with_capacity(policies.len());
        for p in &policies {
            let action = id.name(p.action);
            let mut pos = Vec::with_capacity(p.parents.len());
            for &q in &p.parents {
                if id.var(q).kind == Kind::Hidden {
                    return Err(Error::Policy(format!(
                        "strategy `{name}`: policy for `{action}` references hidden variable `{}`",
                        id.name(q)
                    )));
                }
                if q >= p.action {
                    return Err(Error::Policy(format!(
                        "strategy `{name}`: policy for `{action}` depends on `{}`, which is not a predecessor",
                        id.name(q)
                    )));
                }
                pos.push(info.position(q).expect("observed variable has a position"));
            }
            let mut sorted = p.parents.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != p.parents.len() {
                return Err(Error::Policy(format!("strategy `{name}`: repeated parent for `{action}`")));
            }
            let expected: usize = p.parents.iter().map(|&q| id.var(q).card()).product();
            if p.rows.len() != expected {
                return Err(Error::Policy(format!(
                    "strategy `{name}`: policy for `{action}` has {} rows, expected {expected}",
                    p.rows.len()
                )));
            }
            for (r, row) in p.rows.iter().enumerate() {
                if row.len() != id.var(p.action).card() {
                    return Err(Error::Policy(format!(
                        "strategy `{name}`: policy for `{action}` row {r} has wrong length"
                    )));
                }
                check_row(row, || format!("strategy `{name}` policy for `{action}` row {r}"))
                    .map_err(|e| Error::Policy(e.to_string()))?;
            }
            positions.push(pos);
        }
        Ok(Strategy { name, policies, positions })
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    /// Policy for action `A_i` (1-based stage).
    pub fn policy(&self, stage: usize) -> &Policy {
        &self.policies[stage - 1]
    }

    pub fn policy_for(&self, action: VarId) -> Option<&Policy> {
        self.policies.iter().find(|p| p.action == action)
    }

    pub fn is_deterministic(&self) -> bool {
        self.policies.iter().all(Policy::is_deterministic)
    }

    /// `p(a_i | l̄_i, ā_{i-1}; e)` read off an observable history whose
    /// length reaches at least the position of `A_i`.
    pub fn action_distribution(&self, stage: usize, history: &[usize], info: &InfoBase) -> &[f64] {
        let cards = info.cards();
        let row = mixed_radix(self.positions[stage - 1].iter().map(|&p| (history[p], cards[p])));
        &self.policies[stage - 1].rows[row]
    }
}

/// Which mechanism drives the actions.
#[derive(Debug, Clone, Copy)]
pub enum Regime<'a> {
    Observational,
    Interventional(&'a Strategy),
    /// Observational mechanisms for `A_1..A_{obs_through}` and the strategy
    /// afterwards.
    Hybrid { strategy: &'a Strategy, obs_through: usize },
}

impl<'a> Regime<'a> {
    /// Strategy policy for stage `i`, or `None` when the observational table applies.
    pub fn policy_at(&self, stage: usize) -> Option<&'a Policy> {
        match *self {
            Regime::Observational => None,
            Regime::Interventional(s) => Some(s.policy(stage)),
            Regime::Hybrid { strategy, obs_through } => (stage > obs_through).then(|| strategy.policy(stage)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Regime::Observational => "obs".into(),
            Regime::Interventional(s) => s.name.clone(),
            Regime::Hybrid { strategy, obs_through } => format!("p{obs_through}[{}]", strategy.name),
        }
    }
}
