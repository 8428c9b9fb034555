//! G-recursion over partial histories, the Γ frontier, the hybrid
//! distributions `p_i`, the auxiliary diagrams `D_i` / `D_i'` and the
//! identifiability checks that do not rely on simple stability.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};
use crate::model::{
    joint_distribution, support, ConditionalSource, InfluenceDiagram, InfoBase, JointTable, ObservableLaw,
    PartialHistory, Regime, ResponseFunctional, Strategy, Support, VarId, PROB_TOL,
};

/// Values of the recursion function `f` on the histories it visited.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTable {
    values: BTreeMap<PartialHistory, f64>,
}

impl RecursionTable {
    /// `f(∅)`, the consequence.
    pub fn value(&self) -> f64 {
        self.values[&PartialHistory(Vec::new())]
    }

    pub fn get(&self, history: &[usize]) -> Option<f64> {
        self.values.get(&PartialHistory(history.to_vec())).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PartialHistory, f64)> {
        self.values.iter().map(|(h, &v)| (h, v))
    }
}

/// G-recursion for `E{k(Y); e}` from the covariate conditionals in `source`
/// and the action probabilities of `strategy`.
pub fn g_recursion(source: &dyn ConditionalSource, strategy: &Strategy, k: &ResponseFunctional) -> Result<f64> {
    let y = source.info().response_pos();
    g_recursion_with(source, strategy, &|h: &[usize]| k.at(h[y]))
}

/// G-recursion started from an arbitrary function of the full history.
pub fn g_recursion_with(
    source: &dyn ConditionalSource,
    strategy: &Strategy,
    value: &dyn Fn(&[usize]) -> f64,
) -> Result<f64> {
    let mut walk = Walk { source, strategy, value, table: None };
    walk.eval(1, &mut Vec::new())
}

/// As [`g_recursion_with`], also recording `f` at every visited history of
/// the form `(l̄_{i-1}, ā_{i-1})` and at full histories.
pub fn recursion_table(
    source: &dyn ConditionalSource,
    strategy: &Strategy,
    value: &dyn Fn(&[usize]) -> f64,
) -> Result<RecursionTable> {
    let mut walk = Walk { source, strategy, value, table: Some(BTreeMap::new()) };
    walk.eval(1, &mut Vec::new())?;
    Ok(RecursionTable { values: walk.table.unwrap_or_default() })
}

struct Walk<'a> {
    source: &'a dyn ConditionalSource,
    strategy: &'a Strategy,
    value: &'a dyn Fn(&[usize]) -> f64,
    table: Option<BTreeMap<PartialHistory, f64>>,
}

impl Walk<'_> {
    fn eval(&mut self, stage: usize, history: &mut Vec<usize>) -> Result<f64> {
        let info = self.source.info();
        let n = info.n_actions();
        let slot = info.slot(stage);
        let cond = self.source.slot_conditional(stage, history).ok_or_else(|| Error::Positivity {
            history: info.describe(history),
        })?;
        let slot_cards = &info.cards()[slot.clone()];
        let base = history.len();
        let mut total = 0.0;
        for (cfg, &pl) in cond.iter().enumerate() {
            if pl == 0.0 {
                continue;
            }
            history.extend(crate::model::decode_radix(cfg, slot_cards));
            let inner = if stage == n + 1 {
                let v = (self.value)(history);
                if let Some(t) = self.table.as_mut() {
                    t.insert(PartialHistory(history.clone()), v);
                }
                v
            } else {
                let probs = self.strategy.action_distribution(stage, history, info).to_vec();
                let mut acc = 0.0;
                for (a, &pa) in probs.iter().enumerate() {
                    if pa == 0.0 {
                        continue;
                    }
                    history.push(a);
                    acc += pa * self.eval(stage + 1, history)?;
                    history.pop();
                }
                acc
            };
            total += pl * inner;
            history.truncate(base);
        }
        if let Some(t) = self.table.as_mut() {
            t.insert(PartialHistory(history.clone()), total);
        }
        Ok(total)
    }
}

/// The set Γ: observationally possible histories whose actions so far have
/// positive probability under the strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSupport {
    set: Support,
}

impl GammaSupport {
    pub fn contains(&self, history: &[usize]) -> bool {
        self.set.contains(history)
    }

    pub fn as_support(&self) -> &Support {
        &self.set
    }

    pub fn histories(&self, len: usize) -> Vec<Vec<usize>> {
        self.set.histories(len)
    }
}

/// Γ from the observational support and a strategy.
pub fn gamma_support(obs: &Support, strategy: &Strategy) -> GammaSupport {
    let info = obs.info().clone();
    let flags = (0..=info.len())
        .map(|len| {
            (0..info.prefix_count(len))
                .map(|idx| {
                    let h = info.decode(len, idx);
                    obs.contains(&h) && strategy_weight(strategy, &info, &h) > 0.0
                })
                .collect()
        })
        .collect();
    GammaSupport { set: Support::from_flags(info, flags) }
}

/// Product of the strategy's probabilities for the actions inside `history`.
fn strategy_weight(strategy: &Strategy, info: &InfoBase, history: &[usize]) -> f64 {
    (1..=info.n_actions())
        .take_while(|&i| info.action_pos(i) < history.len())
        .map(|i| strategy.action_distribution(i, history, info)[history[info.action_pos(i)]])
        .product()
}

/// The artificial joint `p_i`: actions `A_1..A_i` observational, the rest
/// from the strategy.
pub fn construct_p_i(id: &InfluenceDiagram, strategy: &Strategy, i: usize) -> Result<JointTable> {
    if i > id.n_actions() {
        return Err(Error::Input(format!("stage {i} exceeds the number of actions {}", id.n_actions())));
    }
    joint_distribution(id, Regime::Hybrid { strategy, obs_through: i })
}

/// Action parent sets used to draw auxiliary diagrams. The interventional
/// set is the declared one widened by the strategy's policy parents, and
/// the observational set is widened to contain it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionParents {
    obs: Vec<Vec<VarId>>,
    int: Vec<Vec<VarId>>,
}

impl ActionParents {
    pub fn new(id: &InfluenceDiagram, strategy: Option<&Strategy>) -> Self {
        let mut obs = vec![Vec::new(); id.len()];
        let mut int = vec![Vec::new(); id.len()];
        for a in id.actions() {
            let mut e = id.int_parents(a).to_vec();
            if let Some(p) = strategy.and_then(|s| s.policy_for(a)) {
                e.extend(&p.parents);
            }
            e.sort_unstable();
            e.dedup();
            let mut o: Vec<VarId> = id.obs_parents(a).iter().chain(&e).copied().collect();
            o.sort_unstable();
            o.dedup();
            obs[a] = o;
            int[a] = e;
        }
        ActionParents { obs, int }
    }

    pub fn obs(&self, action: VarId) -> &[VarId] {
        &self.obs[action]
    }

    pub fn int(&self, action: VarId) -> &[VarId] {
        &self.int[action]
    }
}

/// Builds diagrams over the domain variables plus `sigma` (always present,
/// possibly isolated, so node ids match [`InfluenceDiagram::dag`]).
#[derive(Debug, Clone)]
pub struct AuxDiagrams<'a> {
    id: &'a InfluenceDiagram,
    order: Vec<VarId>,
    parents: ActionParents,
}

impl<'a> AuxDiagrams<'a> {
    /// Auxiliary diagrams for the declared action order.
    pub fn new(id: &'a InfluenceDiagram, strategy: Option<&Strategy>) -> Self {
        Self::with_order(id, strategy, id.actions())
    }

    /// `order` lists every action once; stage `i` refers to `order[i-1]`.
    pub fn with_order(id: &'a InfluenceDiagram, strategy: Option<&Strategy>, order: Vec<VarId>) -> Self {
        AuxDiagrams { id, order, parents: ActionParents::new(id, strategy) }
    }

    pub fn order(&self) -> &[VarId] {
        &self.order
    }

    pub fn parents(&self) -> &ActionParents {
        &self.parents
    }

    fn build(&self, action_parents: impl Fn(usize, VarId) -> Vec<VarId>, sigma_into: Option<VarId>, cut: Option<VarId>) -> Dag {
        let id = self.id;
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        for v in 0..id.len() {
            let parents = match self.order.iter().position(|&a| a == v) {
                Some(j) => action_parents(j + 1, v),
                None => id.domain_parents(v),
            };
            edges.extend(parents.into_iter().filter(|&p| Some(p) != cut).map(|p| (p, v)));
        }
        if let Some(a) = sigma_into {
            edges.push((id.sigma(), a));
        }
        let names = id.vars().iter().map(|v| v.name.clone()).chain([crate::model::SIGMA.to_string()]);
        Dag::new(names, &edges).expect("auxiliary diagram inherits acyclicity")
    }

    /// The full diagram: observational parents and `sigma` into every action.
    pub fn full(&self) -> Dag {
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        for v in 0..self.id.len() {
            if self.order.contains(&v) {
                edges.extend(self.parents.obs(v).iter().map(|&p| (p, v)));
                edges.push((self.id.sigma(), v));
            } else {
                edges.extend(self.id.domain_parents(v).into_iter().map(|p| (p, v)));
            }
        }
        let names = self.id.vars().iter().map(|v| v.name.clone()).chain([crate::model::SIGMA.to_string()]);
        Dag::new(names, &edges).expect("diagram is acyclic")
    }

    /// `D_i` for `0 <= i <= N+1`.
    pub fn dag_i(&self, i: usize) -> Dag {
        let target = (1..=self.order.len()).contains(&i).then(|| self.order[i - 1]);
        self.build(
            |j, a| if j <= i { self.parents.obs(a).to_vec() } else { self.parents.int(a).to_vec() },
            target,
            None,
        )
    }

    /// `D_i'` for `1 <= i <= N`: `D_i` without `sigma` and without arrows out of `A_i`.
    pub fn dag_i_prime(&self, i: usize) -> Dag {
        assert!((1..=self.order.len()).contains(&i), "stage {i} has no action");
        let cut = self.order[i - 1];
        self.build(
            |j, a| if j <= i { self.parents.obs(a).to_vec() } else { self.parents.int(a).to_vec() },
            None,
            Some(cut),
        )
    }

    /// `D_e`: every action with its interventional parents, `sigma` isolated.
    pub fn dag_e(&self) -> Dag {
        self.dag_i(0)
    }
}

/// `D_i` for the declared action order.
pub fn build_dag_i(id: &InfluenceDiagram, strategy: &Strategy, i: usize) -> Result<Dag> {
    if i > id.n_actions() + 1 {
        return Err(Error::Input(format!("stage {i} out of range")));
    }
    Ok(AuxDiagrams::new(id, Some(strategy)).dag_i(i))
}

/// `D_i'` for the declared action order.
pub fn build_dag_i_prime(id: &InfluenceDiagram, strategy: &Strategy, i: usize) -> Result<Dag> {
    if i == 0 || i > id.n_actions() {
        return Err(Error::Input(format!("stage {i} has no action")));
    }
    Ok(AuxDiagrams::new(id, Some(strategy)).dag_i_prime(i))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphsepStage {
    pub stage: usize,
    pub separated: bool,
    /// Path from `Y` to `sigma` in the moral ancestral graph of `D_i`.
    pub witness: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphsepReport {
    pub stages: Vec<GraphsepStage>,
}

impl GraphsepReport {
    pub fn holds(&self) -> bool {
        self.stages.iter().all(|s| s.separated)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.stages.iter().find(|s| !s.separated).map(|s| s.stage)
    }
}

/// For each `i = 1..N`, whether `Y` is separated from `sigma` by
/// `(l̄_i, ā_i)` in `D_i`. The equivalent test on `D_i'` is checked in debug
/// builds.
pub fn check_graphsep(id: &InfluenceDiagram, strategy: &Strategy) -> GraphsepReport {
    let aux = AuxDiagrams::new(id, Some(strategy));
    let info = id.info();
    let y = [id.response()];
    let sigma = [id.sigma()];
    let stages = (1..=id.n_actions())
        .map(|i| {
            let cut = info.action_pos(i);
            let cond: Vec<VarId> = info.vars()[..=cut].to_vec();
            let d = aux.dag_i(i);
            let path = d.connecting_path(&y, &sigma, &cond).expect("disjoint sets");
            debug_assert_eq!(
                path.is_none(),
                aux.dag_i_prime(i)
                    .separated(&y, &[info.vars()[cut]], &info.vars()[..cut])
                    .expect("disjoint sets"),
                "D_i and D_i' disagree at stage {i}"
            );
            GraphsepStage {
                stage: i,
                separated: path.is_none(),
                witness: path.map(|p| d.names_of(&p).into_iter().map(String::from).collect()),
            }
        })
        .collect();
    GraphsepReport { stages }
}

/// A numeric discrepancy found while verifying the general conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub condition: &'static str,
    pub stage: usize,
    pub history: String,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |p: &[f64]| p.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(",");
        write!(
            f,
            "{} stage {} at {}: ({}) vs ({})",
            self.condition,
            self.stage,
            self.history,
            show(&self.left),
            show(&self.right)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralReport {
    /// Support equivalence between `p_i` and `obs` on `(l̄_i, ā_i)`.
    pub support_equivalence: bool,
    pub l_factor: bool,
    pub action_factor: bool,
    pub y_bridge: bool,
    /// Positivity over Γ.
    pub gamma_positivity: bool,
    pub discrepancies: Vec<Discrepancy>,
    /// G-recursion and oracle values, filled in when every condition holds.
    pub recursion: Option<(f64, f64)>,
}

impl GeneralReport {
    pub fn holds(&self) -> bool {
        self.support_equivalence && self.l_factor && self.action_factor && self.y_bridge && self.gamma_positivity
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= PROB_TOL)
}

/// Whether every action `a_i` the strategy can take after a history in Γ
/// keeps the history observationally possible.
pub fn gamma_positivity(obs: &Support, gamma: &GammaSupport, strategy: &Strategy) -> Option<Vec<usize>> {
    let info = obs.info();
    for i in 1..=info.n_actions() {
        let pos = info.action_pos(i);
        for h in gamma.histories(pos) {
            let probs = strategy.action_distribution(i, &h, info);
            for (a, &p) in probs.iter().enumerate() {
                let mut ext = h.clone();
                ext.push(a);
                if p > 0.0 && !obs.contains(&ext) {
                    return Some(ext);
                }
            }
        }
    }
    None
}

/// Numeric check of the conditions that license G-recursion through the
/// hybrid distributions `p_0, ..., p_N`.
pub fn verify_general_conditions(id: &InfluenceDiagram, strategy: &Strategy) -> Result<GeneralReport> {
    let n = id.n_actions();
    let info = id.info();
    let obs = ObservableLaw::new(id, Regime::Observational)?;
    let o = obs.support();
    let gamma = gamma_support(&o, strategy);
    let laws = (0..=n)
        .map(|i| ObservableLaw::new(id, Regime::Hybrid { strategy, obs_through: i }))
        .collect::<Result<Vec<_>>>()?;
    let mut report = GeneralReport {
        support_equivalence: true,
        l_factor: true,
        action_factor: true,
        y_bridge: true,
        gamma_positivity: true,
        discrepancies: Vec::new(),
        recursion: None,
    };
    let in_gamma_i = |i: usize, h: &[usize]| gamma.contains(h) && laws[i].mass(h) > 0.0;

    for (i, law) in laws.iter().enumerate().skip(1) {
        let len = info.action_pos(i) + 1;
        let bi = law.support();
        for idx in 0..info.prefix_count(len) {
            let h = info.decode(len, idx);
            if bi.contains(&h) != o.contains(&h) {
                report.support_equivalence = false;
                report.discrepancies.push(Discrepancy {
                    condition: "support",
                    stage: i,
                    history: info.describe(&h),
                    left: vec![law.mass(&h)],
                    right: vec![obs.mass(&h)],
                });
            }
        }
    }

    for i in 1..=n + 1 {
        let start = info.slot(i).start;
        for h in gamma.histories(start) {
            if !in_gamma_i(i - 1, &h) {
                continue;
            }
            let left = laws[i - 1].slot_conditional(i, &h).expect("positive mass");
            let right = obs.slot_conditional(i, &h).expect("Γ lies inside O");
            if !close(&left, &right) {
                report.l_factor = false;
                report.discrepancies.push(Discrepancy {
                    condition: "l-factor",
                    stage: i,
                    history: info.describe(&h),
                    left,
                    right,
                });
            }
        }
        if i > n {
            continue;
        }
        let pos = info.action_pos(i);
        for h in gamma.histories(pos) {
            if !in_gamma_i(i - 1, &h) {
                continue;
            }
            let left = laws[i - 1].conditional_at(&h, pos).expect("positive mass");
            let right = strategy.action_distribution(i, &h, info).to_vec();
            if !close(&left, &right) {
                report.action_factor = false;
                report.discrepancies.push(Discrepancy {
                    condition: "action-factor",
                    stage: i,
                    history: info.describe(&h),
                    left,
                    right,
                });
            }
        }
        for h in gamma.histories(pos + 1) {
            if !in_gamma_i(i - 1, &h) {
                continue;
            }
            let y = info.response_pos();
            let left = laws[i - 1].conditional_at(&h, y).expect("positive mass");
            let Some(right) = laws[i].conditional_at(&h, y) else {
                report.y_bridge = false;
                report.discrepancies.push(Discrepancy {
                    condition: "y-bridge",
                    stage: i,
                    history: info.describe(&h),
                    left,
                    right: Vec::new(),
                });
                continue;
            };
            if !close(&left, &right) {
                report.y_bridge = false;
                report.discrepancies.push(Discrepancy {
                    condition: "y-bridge",
                    stage: i,
                    history: info.describe(&h),
                    left,
                    right,
                });
            }
        }
    }

    report.gamma_positivity = gamma_positivity(&o, &gamma, strategy).is_none();
    if report.holds() {
        let k = |h: &[usize]| h[info.response_pos()] as f64;
        let rec = g_recursion_with(&obs, strategy, &k)?;
        let direct = crate::model::consequence_direct_with(id, Regime::Interventional(strategy), &k)?;
        debug_assert!((rec - direct).abs() <= PROB_TOL, "general conditions hold but values differ");
        report.recursion = Some((rec, direct));
    }
    Ok(report)
}

/// Convenience: G-recursion on the exact observational law of `id`.
pub fn g_recursion_exact(id: &InfluenceDiagram, strategy: &Strategy, k: &ResponseFunctional) -> Result<f64> {
    k.check(id)?;
    let law = ObservableLaw::new(id, Regime::Observational)?;
    g_recursion(&law, strategy, k)
}

/// Γ for the exact observational law of `id`.
pub fn gamma_of(id: &InfluenceDiagram, strategy: &Strategy) -> Result<GammaSupport> {
    Ok(gamma_support(&support(id, Regime::Observational)?, strategy))
}
