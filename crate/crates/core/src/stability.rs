//! Identifiability condition checks: simple stability (graphical and
//! numeric), sequential randomization, sequential irrelevance, the
//! positivity family and exhaustive support propagation.

use std::fmt;

use crate::error::Result;
use crate::graph::{Dag, NodeId};
use crate::grecursion::{gamma_positivity, gamma_support, AuxDiagrams};
use crate::model::{
    decode_radix, expand, joint_distribution, mixed_radix, ConditionalSource, InfluenceDiagram, InfoBase, Kind,
    ObservableLaw, Regime, Strategy, Support, VarId, PROB_TOL,
};

/// Evidence attached to a failed stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Path in the moral ancestral graph, from the stage covariates to `sigma`.
    Path(Vec<String>),
    /// Two conditionals of the stage covariates that should agree but do not.
    Conditionals {
        left: String,
        right: String,
        event: String,
        left_probs: Vec<f64>,
        right_probs: Vec<f64>,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Path(p) => f.write_str(&p.join("-")),
            Witness::Conditionals { left, right, event, left_probs, right_probs } => {
                write!(f, "{left} vs {right} given {event}: {} vs {}", fmt_probs(left_probs), fmt_probs(right_probs))
            }
        }
    }
}

fn fmt_probs(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x:.12}")).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageVerdict {
    /// 1-based; stage `N+1` is the response stage.
    pub stage: usize,
    pub holds: bool,
    pub witness: Option<Witness>,
}

/// Per-stage verdicts for one condition, in stage order.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stages: Vec<StageVerdict>,
}

impl StabilityReport {
    pub fn holds(&self) -> bool {
        self.stages.iter().all(|s| s.holds)
    }

    pub fn first_failure(&self) -> Option<&StageVerdict> {
        self.stages.iter().find(|s| !s.holds)
    }

    pub fn stage(&self, i: usize) -> &StageVerdict {
        &self.stages[i - 1]
    }

    pub fn witnesses(&self) -> impl Iterator<Item = (usize, &Witness)> {
        self.stages.iter().filter_map(|s| s.witness.as_ref().map(|w| (s.stage, w)))
    }
}

fn slot_vars(info: &InfoBase, stage: usize) -> (&[VarId], &[VarId]) {
    let slot = info.slot(stage);
    (&info.vars()[slot.clone()], &info.vars()[..slot.start])
}

/// For each stage, whether `sigma` is separated from `L_i` by the observed
/// past in the full diagram, hidden variables included.
pub fn check_simple_stability_graphical(id: &InfluenceDiagram) -> StabilityReport {
    let g = AuxDiagrams::new(id, None).full();
    let info = id.info();
    let stages = (1..=id.n_actions() + 1)
        .map(|i| {
            let (li, past) = slot_vars(info, i);
            let path = g.connecting_path(li, &[id.sigma()], past).expect("disjoint sets");
            StageVerdict {
                stage: i,
                holds: path.is_none(),
                witness: path.map(|p| Witness::Path(g.names_of(&p).into_iter().map(String::from).collect())),
            }
        })
        .collect();
    StabilityReport { stages }
}

/// Compares the conditional of each `L_i` given the observed past across
/// the observational regime and every strategy, on events that are
/// possible under both regimes of a pair.
pub fn check_simple_stability_numeric(id: &InfluenceDiagram, strategies: &[Strategy]) -> Result<StabilityReport> {
    let mut laws = vec![("obs".to_string(), ObservableLaw::new(id, Regime::Observational)?)];
    for s in strategies {
        laws.push((s.name.clone(), ObservableLaw::new(id, Regime::Interventional(s))?));
    }
    let info = id.info();
    let stages = (1..=id.n_actions() + 1)
        .map(|i| {
            let len = info.slot(i).start;
            let witness = (0..laws.len())
                .flat_map(|r| (r + 1..laws.len()).map(move |s| (r, s)))
                .find_map(|(r, s)| compare_laws(info, i, len, &laws[r], &laws[s]));
            StageVerdict { stage: i, holds: witness.is_none(), witness }
        })
        .collect();
    Ok(StabilityReport { stages })
}

fn compare_laws(
    info: &InfoBase,
    stage: usize,
    len: usize,
    (ln, left): &(String, ObservableLaw),
    (rn, right): &(String, ObservableLaw),
) -> Option<Witness> {
    (0..info.prefix_count(len)).find_map(|idx| {
        let h = info.decode(len, idx);
        let a = left.slot_conditional(stage, &h)?;
        let b = right.slot_conditional(stage, &h)?;
        let differs = a.iter().zip(&b).any(|(x, y)| (x - y).abs() > PROB_TOL);
        differs.then(|| Witness::Conditionals {
            left: ln.clone(),
            right: rn.clone(),
            event: info.describe(&h),
            left_probs: a,
            right_probs: b,
        })
    })
}

/// Structural sequential randomization on a raw graph: `sigma` points only
/// into actions and no action has a hidden parent.
pub fn sequential_randomization_structure(dag: &Dag, sigma: NodeId, kinds: &[Kind]) -> bool {
    let sigma_ok = dag.children(sigma).iter().all(|&c| kinds.get(c) == Some(&Kind::Action));
    let no_hidden = (0..kinds.len())
        .filter(|&v| kinds[v] == Kind::Action)
        .all(|a| dag.parents(a).iter().all(|&p| p == sigma || kinds[p] != Kind::Hidden));
    sigma_ok && no_hidden
}

pub fn check_sequential_randomization(id: &InfluenceDiagram) -> bool {
    let kinds: Vec<Kind> = id.vars().iter().map(|v| v.kind).collect();
    sequential_randomization_structure(&AuxDiagrams::new(id, None).full(), id.sigma(), &kinds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrrelevanceReport {
    /// `L_i` independent of earlier hidden variables given the observed past.
    pub irrelevance: StabilityReport,
    /// Extended positivity against each supplied strategy, by name.
    pub extended_positivity: Vec<(String, bool)>,
}

/// Numeric sequential irrelevance under the observational joint.
pub fn check_sequential_irrelevance_numeric(
    id: &InfluenceDiagram,
    strategies: &[Strategy],
) -> Result<IrrelevanceReport> {
    let joint = joint_distribution(id, Regime::Observational)?;
    let info = id.info();
    let cards = id.cards();
    let mut stages = Vec::new();
    for i in 1..=id.n_actions() + 1 {
        let (li, past) = slot_vars(info, i);
        let hidden: Vec<VarId> = id.stages()[..i - 1].iter().flat_map(|s| s.hidden.iter().copied()).collect();
        if li.is_empty() || hidden.is_empty() {
            stages.push(StageVerdict { stage: i, holds: true, witness: None });
            continue;
        }
        let vars: Vec<VarId> = past.iter().chain(&hidden).chain(li).copied().collect();
        let m = joint.marginal(&vars)?;
        let kc: usize = past.iter().map(|&v| cards[v]).product();
        let kh: usize = hidden.iter().map(|&v| cards[v]).product();
        let ks: usize = li.iter().map(|&v| cards[v]).product();
        let p = m.probs();
        let mut witness = None;
        'outer: for c in 0..kc {
            let block = &p[c * kh * ks..(c + 1) * kh * ks];
            let total: f64 = block.iter().sum();
            if total <= 0.0 {
                continue;
            }
            let pooled: Vec<f64> = (0..ks).map(|s| (0..kh).map(|h| block[h * ks + s]).sum::<f64>() / total).collect();
            for h in 0..kh {
                let row = &block[h * ks..(h + 1) * ks];
                let mass: f64 = row.iter().sum();
                if mass <= 0.0 {
                    continue;
                }
                let given: Vec<f64> = row.iter().map(|x| x / mass).collect();
                if given.iter().zip(&pooled).any(|(a, b)| (a - b).abs() > PROB_TOL) {
                    let cd = decode_radix(c, &past.iter().map(|&v| cards[v]).collect::<Vec<_>>());
                    let hd = decode_radix(h, &hidden.iter().map(|&v| cards[v]).collect::<Vec<_>>());
                    let event = past
                        .iter()
                        .zip(&cd)
                        .chain(hidden.iter().zip(&hd))
                        .map(|(&v, &s)| format!("{}={}", id.name(v), id.var(v).states[s]))
                        .collect::<Vec<_>>()
                        .join(",");
                    witness = Some(Witness::Conditionals {
                        left: "with hidden".into(),
                        right: "without hidden".into(),
                        event: if event.is_empty() { "(empty)".into() } else { event },
                        left_probs: given,
                        right_probs: pooled,
                    });
                    break 'outer;
                }
            }
        }
        stages.push(StageVerdict { stage: i, holds: witness.is_none(), witness });
    }
    let extended_positivity = strategies
        .iter()
        .map(|s| Ok((s.name.clone(), extended_positivity(id, s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IrrelevanceReport { irrelevance: StabilityReport { stages }, extended_positivity })
}

/// Zero/non-zero marking of every joint configuration of the domain
/// variables under one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct PossibilityTable {
    pub regime: String,
    pub cards: Vec<usize>,
    pub possible: Vec<bool>,
}

impl PossibilityTable {
    pub fn new(id: &InfluenceDiagram, regime: Regime<'_>) -> Result<Self> {
        Ok(PossibilityTable {
            regime: regime.label(),
            cards: id.cards(),
            possible: expand(id, regime, true, |x, p| x && p > 0.0)?,
        })
    }

    /// Projection onto the observable information base, every prefix included.
    pub fn observable_support(&self, info: &InfoBase) -> Support {
        let mut flags: Vec<Vec<bool>> = (0..=info.len()).map(|m| vec![false; info.prefix_count(m)]).collect();
        for (idx, _) in self.possible.iter().enumerate().filter(|(_, &b)| b) {
            let digits = decode_radix(idx, &self.cards);
            let h: Vec<usize> = info.vars().iter().map(|&v| digits[v]).collect();
            for (m, f) in flags.iter_mut().enumerate() {
                f[info.index(&h[..m])] = true;
            }
        }
        Support::from_flags(info.clone(), flags)
    }

    /// Every configuration possible here is possible in `other`.
    pub fn is_subset(&self, other: &PossibilityTable) -> bool {
        self.possible.iter().zip(&other.possible).all(|(&a, &b)| !a || b)
    }
}

/// Possibility tables for the observational regime followed by each strategy.
pub fn support_propagation(id: &InfluenceDiagram, strategies: &[Strategy]) -> Result<Vec<PossibilityTable>> {
    let mut out = vec![PossibilityTable::new(id, Regime::Observational)?];
    for s in strategies {
        out.push(PossibilityTable::new(id, Regime::Interventional(s))?);
    }
    Ok(out)
}

fn extended_positivity(id: &InfluenceDiagram, strategy: &Strategy) -> Result<bool> {
    let o = PossibilityTable::new(id, Regime::Observational)?;
    let e = PossibilityTable::new(id, Regime::Interventional(strategy))?;
    Ok(e.is_subset(&o))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub simple: bool,
    pub extended: bool,
    pub parent_child: bool,
    pub general: bool,
    /// First observable history possible under the strategy but not observationally.
    pub simple_witness: Option<String>,
    /// First action row where the strategy allows a state the observational table forbids.
    pub parent_child_witness: Option<String>,
    /// First history in Γ extended by an allowed action that leaves the observational support.
    pub general_witness: Option<String>,
}

pub fn check_positivity(id: &InfluenceDiagram, strategy: &Strategy) -> Result<PositivityReport> {
    let info = id.info();
    let o_table = PossibilityTable::new(id, Regime::Observational)?;
    let e_table = PossibilityTable::new(id, Regime::Interventional(strategy))?;
    let o = o_table.observable_support(info);
    let e = e_table.observable_support(info);
    let simple_witness = e.first_outside(&o).map(|h| info.describe(&h));
    let extended = e_table.is_subset(&o_table);
    let parent_child_witness = parent_child_violation(id, strategy);
    let gamma = gamma_support(&o, strategy);
    let general_witness = gamma_positivity(&o, &gamma, strategy).map(|h| info.describe(&h));
    let report = PositivityReport {
        simple: simple_witness.is_none(),
        extended,
        parent_child: parent_child_witness.is_none(),
        general: general_witness.is_none(),
        simple_witness,
        parent_child_witness,
        general_witness,
    };
    debug_assert!(!report.parent_child || report.simple, "parent-child positivity implies simple positivity");
    debug_assert!(!report.extended || report.simple, "extended positivity implies simple positivity");
    Ok(report)
}

/// Row-wise check over joint configurations of the observational and
/// policy parents of every action.
fn parent_child_violation(id: &InfluenceDiagram, strategy: &Strategy) -> Option<String> {
    let cards = id.cards();
    for a in id.actions() {
        let cpt = id.cpt(a);
        let policy = strategy.policy_for(a).expect("strategy covers every action");
        let mut all: Vec<VarId> = cpt.parents.iter().chain(&policy.parents).copied().collect();
        all.sort_unstable();
        all.dedup();
        let all_cards: Vec<usize> = all.iter().map(|&v| cards[v]).collect();
        let count: usize = all_cards.iter().product();
        for idx in 0..count {
            let digits = decode_radix(idx, &all_cards);
            let state = |v: VarId| digits[all.iter().position(|&w| w == v).expect("listed parent")];
            let orow = &cpt.rows[mixed_radix(cpt.parents.iter().map(|&p| (state(p), cards[p])))];
            let erow = &policy.rows[mixed_radix(policy.parents.iter().map(|&p| (state(p), cards[p])))];
            if let Some(s) = (0..cards[a]).find(|&s| erow[s] > 0.0 && orow[s] <= 0.0) {
                let cfg: Vec<String> = all
                    .iter()
                    .zip(&digits)
                    .map(|(&v, &d)| format!("{}={}", id.name(v), id.var(v).states[d]))
                    .collect();
                let cfg = if cfg.is_empty() { "(empty)".to_string() } else { cfg.join(",") };
                return Some(format!("{}={} given {cfg}", id.name(a), id.var(a).states[s]));
            }
        }
    }
    None
}
