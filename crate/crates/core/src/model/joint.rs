use super::{
    decode_radix, mixed_radix, ConditionalSource, InfluenceDiagram, InfoBase, PartialHistory, Regime, VarId,
    MAX_JOINT_CELLS,
};
use crate::error::{Error, Result};

/// Dense joint distribution over a list of variables. Cells are indexed in
/// mixed radix, first variable most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    vars: Vec<VarId>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

/// Result of conditioning; `Undefined` when the event has probability 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditional {
    Defined(Vec<f64>),
    Undefined,
}

impl Conditional {
    pub fn defined(self) -> Option<Vec<f64>> {
        match self {
            Conditional::Defined(v) => Some(v),
            Conditional::Undefined => None,
        }
    }
}

/// Fold the factorization over all configurations of the domain variables,
/// in information-base order. `mul` combines a partial product with one factor.
pub(crate) fn expand<T: Copy>(
    id: &InfluenceDiagram,
    regime: Regime<'_>,
    unit: T,
    mul: impl Fn(T, f64) -> T,
) -> Result<Vec<T>> {
    let cards = id.cards();
    let mut total: usize = 1;
    for &c in &cards {
        total = total.saturating_mul(c);
        if total > MAX_JOINT_CELLS {
            return Err(Error::Capacity(format!(
                "joint table exceeds {MAX_JOINT_CELLS} cells"
            )));
        }
    }
    let mut cur = vec![unit];
    for v in 0..id.len() {
        let (parents, rows) = match id.stage_of_action(v).and_then(|s| regime.policy_at(s)) {
            Some(policy) => (&policy.parents, &policy.rows),
            None => (&id.cpt(v).parents, &id.cpt(v).rows),
        };
        // stride of each earlier variable within the current prefix index
        let mut stride = vec![0usize; v];
        let mut acc = 1;
        for w in (0..v).rev() {
            stride[w] = acc;
            acc *= cards[w];
        }
        let card = cards[v];
        let mut next = Vec::with_capacity(cur.len() * card);
        for (j, &x) in cur.iter().enumerate() {
            let r = mixed_radix(parents.iter().map(|&p| ((j / stride[p]) % cards[p], cards[p])));
            let row = rows
                .get(r)
                .ok_or_else(|| Error::Model(format!("missing row {r} for `{}`", id.name(v))))?;
            next.extend(row.iter().map(|&p| mul(x, p)));
        }
        cur = next;
    }
    Ok(cur)
}

/// Exact joint distribution of all domain variables under `regime`.
pub fn joint_distribution(id: &InfluenceDiagram, regime: Regime<'_>) -> Result<JointTable> {
    let probs = expand(id, regime, 1.0, |x, p| x * p)?;
    Ok(JointTable { vars: (0..id.len()).collect(), cards: id.cards(), probs })
}

impl JointTable {
    pub fn new(vars: Vec<VarId>, cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if vars.len() != cards.len() || cards.iter().product::<usize>() != probs.len() {
            return Err(Error::Input("joint table shape mismatch".into()));
        }
        Ok(JointTable { vars, cards, probs })
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        decode_radix(index, &self.cards)
    }

    fn position(&self, v: VarId) -> Result<usize> {
        self.vars
            .iter()
            .position(|&w| w == v)
            .ok_or_else(|| Error::Input(format!("variable #{v} is not in the table")))
    }

    /// Marginal over `vars`, in the order given.
    pub fn marginal(&self, vars: &[VarId]) -> Result<JointTable> {
        let pos = vars.iter().map(|&v| self.position(v)).collect::<Result<Vec<_>>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let digits = self.decode(i);
            probs[mixed_radix(pos.iter().map(|&q| (digits[q], self.cards[q])))] += p;
        }
        Ok(JointTable { vars: vars.to_vec(), cards, probs })
    }

    /// Probability of a partial assignment.
    pub fn mass(&self, assignment: &[(VarId, usize)]) -> Result<f64> {
        let pos = self.resolve(assignment)?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let d = self.decode(*i);
                pos.iter().all(|&(p, s)| d[p] == s)
            })
            .map(|(_, &p)| p)
            .sum())
    }

    fn resolve(&self, assignment: &[(VarId, usize)]) -> Result<Vec<(usize, usize)>> {
        assignment
            .iter()
            .map(|&(v, s)| {
                let p = self.position(v)?;
                if s >= self.cards[p] {
                    return Err(Error::Input(format!("state {s} out of range for variable #{v}")));
                }
                Ok((p, s))
            })
            .collect()
    }
}

/// Distribution of `target` (mixed radix over its configurations) given an
/// assignment to other variables.
pub fn conditional(joint: &JointTable, target: &[VarId], given: &[(VarId, usize)]) -> Result<Conditional> {
    if let Some(&(v, _)) = given.iter().find(|(v, _)| target.contains(v)) {
        return Err(Error::Input(format!("variable #{v} is both target and conditioning")));
    }
    let tpos = target.iter().map(|&v| joint.position(v)).collect::<Result<Vec<_>>>()?;
    let gpos = joint.resolve(given)?;
    let tcards: Vec<usize> = tpos.iter().map(|&p| joint.cards[p]).collect();
    let mut out = vec![0.0; tcards.iter().product()];
    for (i, &p) in joint.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let d = joint.decode(i);
        if gpos.iter().all(|&(q, s)| d[q] == s) {
            out[mixed_radix(tpos.iter().map(|&q| (d[q], joint.cards[q])))] += p;
        }
    }
    let total: f64 = out.iter().sum();
    if total <= 0.0 {
        return Ok(Conditional::Undefined);
    }
    out.iter_mut().for_each(|x| *x /= total);
    Ok(Conditional::Defined(out))
}

/// Real-valued function `k(y)` of the response, one value per response state.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFunctional(pub Vec<f64>);

impl ResponseFunctional {
    pub fn constant(id: &InfluenceDiagram, c: f64) -> Self {
        ResponseFunctional(vec![c; id.var(id.response()).card()])
    }

    pub fn indicator(id: &InfluenceDiagram, state: &str) -> Result<Self> {
        let y = id.var(id.response());
        let s = y
            .state(state)
            .ok_or_else(|| Error::Input(format!("`{}` has no state `{state}`", y.name)))?;
        Ok(ResponseFunctional((0..y.card()).map(|i| if i == s { 1.0 } else { 0.0 }).collect()))
    }

    /// Reads the response state labels as numbers, so `k(y) = y`.
    pub fn from_labels(id: &InfluenceDiagram) -> Result<Self> {
        let y = id.var(id.response());
        y.states
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Input(format!("response state `{s}` is not numeric; supply k explicitly")))
            })
            .collect::<Result<Vec<_>>>()
            .map(ResponseFunctional)
    }

    pub fn check(&self, id: &InfluenceDiagram) -> Result<()> {
        let card = id.var(id.response()).card();
        if self.0.len() != card {
            return Err(Error::Input(format!("k needs {card} values, got {}", self.0.len())));
        }
        if self.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("k values must be finite".into()));
        }
        Ok(())
    }

    pub fn at(&self, state: usize) -> f64 {
        self.0[state]
    }
}

/// `E{k(Y); s}` by summing the factorization over every configuration.
pub fn consequence_direct(id: &InfluenceDiagram, regime: Regime<'_>, k: &ResponseFunctional) -> Result<f64> {
    k.check(id)?;
    let joint = joint_distribution(id, regime)?;
    let card_y = id.var(id.response()).card();
    // the response is last, so its state is the least significant digit
    Ok(joint
        .probs
        .iter()
        .enumerate()
        .map(|(i, &p)| p * k.at(i % card_y))
        .sum())
}

/// Expectation of a function of the full observable history.
pub fn consequence_direct_with(
    id: &InfluenceDiagram,
    regime: Regime<'_>,
    value: &dyn Fn(&[usize]) -> f64,
) -> Result<f64> {
    let law = ObservableLaw::new(id, regime)?;
    let info = law.info();
    let full = &law.prefix[info.len()];
    Ok(full
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| p * value(&info.decode(info.len(), i)))
        .sum())
}

/// Exact law of the observable information base under one regime, with the
/// marginal of every prefix precomputed.
#[derive(Debug, Clone)]
pub struct ObservableLaw {
    info: InfoBase,
    prefix: Vec<Vec<f64>>,
}

impl ObservableLaw {
    pub fn new(id: &InfluenceDiagram, regime: Regime<'_>) -> Result<Self> {
        let joint = joint_distribution(id, regime)?;
        Ok(Self::from_joint(id.info(), &joint))
    }

    /// `joint` must range over all domain variables in information-base order.
    pub fn from_joint(info: &InfoBase, joint: &JointTable) -> Self {
        debug_assert_eq!(joint.vars.len(), info.n_domain());
        let observed = joint
            .marginal(info.vars())
            .expect("observed variables belong to the joint");
        let mut prefix = vec![Vec::new(); info.len() + 1];
        prefix[info.len()] = observed.probs;
        for m in (0..info.len()).rev() {
            let card = info.cards()[m];
            prefix[m] = prefix[m + 1].chunks(card).map(|c| c.iter().sum()).collect();
        }
        ObservableLaw { info: info.clone(), prefix }
    }

    /// Probability of a history prefix.
    pub fn mass(&self, history: &[usize]) -> f64 {
        self.prefix[history.len()][self.info.index(history)]
    }

    /// Distribution of the variable at position `pos` given a shorter prefix,
    /// marginalizing the positions in between.
    pub fn conditional_at(&self, history: &[usize], pos: usize) -> Option<Vec<f64>> {
        assert!(pos >= history.len());
        let denom = self.mass(history);
        if denom <= 0.0 {
            return None;
        }
        let block = self.info.block_count(history.len()..pos + 1);
        let card = self.info.cards()[pos];
        let base = self.info.index(history) * block;
        let mut out = vec![0.0; card];
        for (k, &p) in self.prefix[pos + 1][base..base + block].iter().enumerate() {
            out[k % card] += p;
        }
        out.iter_mut().for_each(|x| *x /= denom);
        Some(out)
    }

    pub fn full(&self) -> &[f64] {
        &self.prefix[self.info.len()]
    }

    pub fn support(&self) -> Support {
        Support {
            info: self.info.clone(),
            positive: self
                .prefix
                .iter()
                .map(|m| m.iter().map(|&p| p > 0.0).collect())
                .collect(),
        }
    }
}

impl ConditionalSource for ObservableLaw {
    fn info(&self) -> &InfoBase {
        &self.info
    }

    fn slot_conditional(&self, stage: usize, history: &[usize]) -> Option<Vec<f64>> {
        let slot = self.info.slot(stage);
        debug_assert_eq!(history.len(), slot.start);
        let denom = self.mass(history);
        if denom <= 0.0 {
            return None;
        }
        let k = self.info.block_count(slot.clone());
        let base = self.info.index(history) * k;
        Some(self.prefix[slot.end][base..base + k].iter().map(|p| p / denom).collect())
    }
}

/// Set of observable partial histories with positive probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    info: InfoBase,
    positive: Vec<Vec<bool>>,
}

impl Support {
    pub(crate) fn from_flags(info: InfoBase, positive: Vec<Vec<bool>>) -> Self {
        Support { info, positive }
    }

    pub fn info(&self) -> &InfoBase {
        &self.info
    }

    pub fn contains(&self, history: &[usize]) -> bool {
        self.positive[history.len()][self.info.index(history)]
    }

    /// Positive histories of a given length.
    pub fn histories(&self, len: usize) -> Vec<Vec<usize>> {
        self.positive[len]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.info.decode(len, i))
            .collect()
    }

    /// All positive histories ending on a slot or action boundary.
    pub fn partial_histories(&self) -> Vec<PartialHistory> {
        let mut lens = self.info.boundaries();
        lens.dedup();
        lens.into_iter()
            .flat_map(|len| self.histories(len).into_iter().map(PartialHistory))
            .collect()
    }

    /// First full history in `self` missing from `other`.
    pub fn first_outside(&self, other: &Support) -> Option<Vec<usize>> {
        let full = self.info.len();
        self.positive[full]
            .iter()
            .zip(&other.positive[full])
            .position(|(&a, &b)| a && !b)
            .map(|i| self.info.decode(full, i))
    }

    /// Inclusion on full histories, which carries over to every prefix.
    pub fn is_subset(&self, other: &Support) -> bool {
        self.first_outside(other).is_none()
    }

    pub fn len(&self) -> usize {
        self.positive[self.info.len()].iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Observable partial histories with positive probability under `regime`.
pub fn support(id: &InfluenceDiagram, regime: Regime<'_>) -> Result<Support> {
    Ok(ObservableLaw::new(id, regime)?.support())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiagramBuilder, Kind, Policy, Strategy};

    fn single_y() -> InfluenceDiagram {
        let mut b = DiagramBuilder::new();
        b.var("Y", Kind::Response, &["y1", "y2"]).cpt("Y", &[], vec![vec![0.3, 0.7]]);
        b.build().unwrap()
    }

    fn one_action() -> InfluenceDiagram {
        let mut b = DiagramBuilder::new();
        b.var("L", Kind::Observable, &["0", "1"])
            .var("A", Kind::Action, &["0", "1"])
            .var("Y", Kind::Response, &["0", "1"])
            .edge("L", "A")
            .edge("A", "Y")
            .edge("L", "Y")
            .cpt("L", &[], vec![vec![0.4, 0.6]])
            .cpt("A", &["L"], vec![vec![1.0, 0.0], vec![0.2, 0.8]])
            .cpt("Y", &["L", "A"], vec![vec![0.9, 0.1], vec![0.3, 0.7], vec![0.6, 0.4], vec![0.1, 0.9]]);
        b.build().unwrap()
    }

    #[test]
    fn single_response_joint() {
        let id = single_y();
        let j = joint_distribution(&id, Regime::Observational).unwrap();
        assert_eq!(j.probs(), &[0.3, 0.7]);
        let c = conditional(&j, &[0], &[]).unwrap();
        assert_eq!(c, Conditional::Defined(vec![0.3, 0.7]));
    }

    #[test]
    fn zero_probability_conditioning_is_undefined() {
        let id = one_action();
        let j = joint_distribution(&id, Regime::Observational).unwrap();
        // A=1 never happens when L=0
        let c = conditional(&j, &[2], &[(0, 0), (1, 1)]).unwrap();
        assert_eq!(c, Conditional::Undefined);
        assert!(conditional(&j, &[2], &[(0, 5)]).is_err());
        assert!(conditional(&j, &[2], &[(2, 0)]).is_err());
    }

    #[test]
    fn support_excludes_structural_zero() {
        let id = one_action();
        let s = support(&id, Regime::Observational).unwrap();
        assert!(!s.contains(&[0, 1]));
        assert!(s.contains(&[1, 1]));
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn degenerate_policy_kills_off_policy_histories() {
        let id = one_action();
        let a = id.var_id("A").unwrap();
        let s = Strategy::new(&id, "always1", vec![Policy::deterministic(a, vec![], 2, &[1])]).unwrap();
        let sup = support(&id, Regime::Interventional(&s)).unwrap();
        assert!(sup.histories(2).iter().all(|h| h[1] == 1));
        let j = joint_distribution(&id, Regime::Interventional(&s)).unwrap();
        assert!((j.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consequence_of_constant_and_indicator() {
        let id = one_action();
        let one = ResponseFunctional::constant(&id, 1.0);
        assert!((consequence_direct(&id, Regime::Observational, &one).unwrap() - 1.0).abs() < 1e-12);
        let ind = ResponseFunctional::indicator(&id, "1").unwrap();
        let j = joint_distribution(&id, Regime::Observational).unwrap();
        let py1 = j.marginal(&[2]).unwrap().probs()[1];
        assert!((consequence_direct(&id, Regime::Observational, &ind).unwrap() - py1).abs() < 1e-12);
    }

    #[test]
    fn slot_conditional_matches_cpt_row() {
        let id = one_action();
        let law = ObservableLaw::new(&id, Regime::Observational).unwrap();
        let c = law.slot_conditional(2, &[1, 0]).unwrap();
        assert!((c[0] - 0.6).abs() < 1e-12 && (c[1] - 0.4).abs() < 1e-12);
        assert!(law.slot_conditional(2, &[0, 1]).is_none());
        let y = law.conditional_at(&[1], 2).unwrap();
        assert!((y[1] - (0.2 * 0.4 + 0.8 * 0.9)).abs() < 1e-12);
    }
}
