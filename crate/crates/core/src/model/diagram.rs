use std::collections::{HashMap, HashSet};

use super::{check_row, Cpt, InfoBase, Kind, VarId, Variable};
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};

/// Reserved node name for the regime indicator.
pub const SIGMA: &str = "sigma";

/// One slot of the extended information base: the covariates and hidden
/// variables revealed before `action`. The final stage has no action and
/// holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub observables: Vec<VarId>,
    pub hidden: Vec<VarId>,
    pub action: Option<VarId>,
}

/// A validated influence diagram with regime node `sigma`.
///
/// Variables are stored in the order of the extended information base, so a
/// [`VarId`] doubles as a position in that order and as a node of
/// [`InfluenceDiagram::dag`]; `sigma` is the last node of the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceDiagram {
    vars: Vec<Variable>,
    dag: Dag,
    obs_parents: Vec<Vec<VarId>>,
    int_parents: Vec<Vec<VarId>>,
    cpts: Vec<Cpt>,
    stages: Vec<Stage>,
    info: InfoBase,
    response: VarId,
}

/// Collects declarations by name and validates them in [`DiagramBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct DiagramBuilder {
    vars: Vec<Variable>,
    order: Option<Vec<String>>,
    edges: Vec<(String, String)>,
    obs_parents: Vec<(String, Vec<String>)>,
    int_parents: Vec<(String, Vec<String>)>,
    cpts: Vec<(String, Vec<String>, Vec<Vec<f64>>)>,
}

fn owned(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl DiagramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variable(&mut self, var: Variable) -> &mut Self {
        self.vars.push(var);
        self
    }

    pub fn var(&mut self, name: &str, kind: Kind, states: &[&str]) -> &mut Self {
        self.variable(Variable::new(name, kind, states))
    }

    pub fn order(&mut self, names: &[&str]) -> &mut Self {
        self.order = Some(owned(names));
        self
    }

    pub fn order_owned(&mut self, names: Vec<String>) -> &mut Self {
        self.order = Some(names);
        self
    }

    pub fn edge(&mut self, parent: &str, child: &str) -> &mut Self {
        self.edges.push((parent.to_string(), child.to_string()));
        self
    }

    pub fn obs_parents(&mut self, action: &str, parents: &[&str]) -> &mut Self {
        self.obs_parents.push((action.to_string(), owned(parents)));
        self
    }

    pub fn int_parents(&mut self, action: &str, parents: &[&str]) -> &mut Self {
        self.int_parents.push((action.to_string(), owned(parents)));
        self
    }

    pub fn int_parents_owned(&mut self, action: String, parents: Vec<String>) -> &mut Self {
        self.int_parents.push((action, parents));
        self
    }

    pub fn obs_parents_owned(&mut self, action: String, parents: Vec<String>) -> &mut Self {
        self.obs_parents.push((action, parents));
        self
    }

    /// Table for `child` given `parents` (in the stated order). Actions take
    /// their observational mechanism here.
    pub fn cpt(&mut self, child: &str, parents: &[&str], rows: Vec<Vec<f64>>) -> &mut Self {
        self.cpts.push((child.to_string(), owned(parents), rows));
        self
    }

    pub fn cpt_owned(&mut self, child: String, parents: Vec<String>, rows: Vec<Vec<f64>>) -> &mut Self {
        self.cpts.push((child, parents, rows));
        self
    }

    pub fn build(&self) -> Result<InfluenceDiagram> {
        let vars = self.ordered_vars()?;
        let n = vars.len();
        let index: HashMap<&str, VarId> = vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Input(format!("unknown variable `{name}`")))
        };
        let sigma: NodeId = n;

        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        for (p, c) in &self.edges {
            if c == SIGMA {
                return Err(Error::Model("the regime node `sigma` cannot have parents".into()));
            }
            let child = lookup(c)?;
            if p == SIGMA {
                if vars[child].kind != Kind::Action {
                    return Err(Error::Model(format!(
                        "arrow from sigma into non-action `{c}`: regime arrows may only enter actions"
                    )));
                }
                edges.push((sigma, child));
                continue;
            }
            let parent = lookup(p)?;
            if parent >= child {
                return Err(Error::Model(format!(
                    "edge {p} -> {c} runs backwards in the information-base order"
                )));
            }
            edges.push((parent, child));
        }
        // The regime always governs the action mechanisms.
        for (a, v) in vars.iter().enumerate() {
            if v.kind == Kind::Action && !edges.contains(&(sigma, a)) {
                edges.push((sigma, a));
            }
        }
        let mut names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
        names.push(SIGMA.to_string());
        let dag = Dag::new(names, &edges)?;

        let domain_parents = |v: VarId| -> Vec<VarId> { dag.parents(v).iter().copied().filter(|&p| p != sigma).collect() };

        let mut obs_parents = vec![Vec::new(); n];
        let mut int_parents = vec![Vec::new(); n];
        let mut obs_given = vec![false; n];
        let mut int_given = vec![false; n];
        for (lists, given, decl, label) in [
            (&mut obs_parents, &mut obs_given, &self.obs_parents, "obs-parents"),
            (&mut int_parents, &mut int_given, &self.int_parents, "int-parents"),
        ] {
            for (a, ps) in decl {
                let act = lookup(a)?;
                if vars[act].kind != Kind::Action {
                    return Err(Error::Model(format!("{label} declared for non-action `{a}`")));
                }
                if given[act] {
                    return Err(Error::Model(format!("{label} for `{a}` declared twice")));
                }
                given[act] = true;
                let dp = domain_parents(act);
                let mut list = Vec::new();
                for p in ps {
                    let pid = lookup(p)?;
                    if !dp.contains(&pid) {
                        return Err(Error::Model(format!("{label} of `{a}`: `{p}` is not a parent in the graph")));
                    }
                    if !list.contains(&pid) {
                        list.push(pid);
                    }
                }
                list.sort_unstable();
                lists[act] = list;
            }
        }
        for a in (0..n).filter(|&a| vars[a].kind == Kind::Action) {
            let dp = domain_parents(a);
            if !obs_given[a] {
                obs_parents[a] = dp.clone();
            }
            if !int_given[a] {
                int_parents[a] = dp.iter().copied().filter(|&p| vars[p].kind.is_observed()).collect();
            }
            if let Some(&h) = int_parents[a].iter().find(|&&p| !vars[p].kind.is_observed()) {
                return Err(Error::Model(format!(
                    "int-parents of `{}` include hidden variable `{}`",
                    vars[a].name, vars[h].name
                )));
            }
            // The interventional parents are always available observationally.
            let mut merged = obs_parents[a].clone();
            merged.extend(int_parents[a].iter().copied());
            merged.sort_unstable();
            merged.dedup();
            obs_parents[a] = merged;
        }

        let mut cpts: Vec<Option<Cpt>> = vec![None; n];
        for (child, ps, rows) in &self.cpts {
            let c = lookup(child)?;
            if cpts[c].is_some() {
                return Err(Error::Model(format!("duplicate cpt for `{child}`")));
            }
            let parents = ps.iter().map(|p| lookup(p)).collect::<Result<Vec<_>>>()?;
            let mut expected = if vars[c].kind == Kind::Action { obs_parents[c].clone() } else { domain_parents(c) };
            let mut got = parents.clone();
            expected.sort_unstable();
            got.sort_unstable();
            if expected != got {
                let want: Vec<&str> = expected.iter().map(|&p| vars[p].name.as_str()).collect();
                return Err(Error::Model(format!(
                    "cpt for `{child}` must be conditioned on {{{}}}",
                    want.join(",")
                )));
            }
            let cpt = Cpt { child: c, parents, rows: rows.clone() };
            check_cpt(&vars, &cpt)?;
            cpts[c] = Some(cpt);
        }
        let cpts = cpts
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| Error::Model(format!("missing cpt for `{}`", vars[v].name))))
            .collect::<Result<Vec<_>>>()?;

        let stages = stages_of(&vars);
        let response = n - 1;
        let info = InfoBase::new(&vars, &stages);
        Ok(InfluenceDiagram { vars, dag, obs_parents, int_parents, cpts, stages, info, response })
    }

    fn ordered_vars(&self) -> Result<Vec<Variable>> {
        let mut seen = HashSet::new();
        for v in &self.vars {
            if v.name == SIGMA {
                return Err(Error::Model("`sigma` is reserved for the regime node".into()));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Model(format!("variable `{}` declared twice", v.name)));
            }
            if v.states.is_empty() {
                return Err(Error::Model(format!("variable `{}` has no states", v.name)));
            }
            let mut labels = HashSet::new();
            if let Some(dup) = v.states.iter().find(|s| !labels.insert(s.as_str())) {
                return Err(Error::Model(format!("variable `{}` repeats state `{dup}`", v.name)));
            }
        }
        let vars: Vec<Variable> = match &self.order {
            None => self.vars.clone(),
            Some(order) => {
                if order.len() != self.vars.len() {
                    return Err(Error::Model(format!(
                        "order lists {} variables but {} are declared",
                        order.len(),
                        self.vars.len()
                    )));
                }
                let mut placed = HashSet::new();
                order
                    .iter()
                    .map(|name| {
                        if !placed.insert(name.as_str()) {
                            return Err(Error::Model(format!("`{name}` appears twice in order")));
                        }
                        self.vars
                            .iter()
                            .find(|v| &v.name == name)
                            .cloned()
                            .ok_or_else(|| Error::Input(format!("unknown variable `{name}` in order")))
                    })
                    .collect::<Result<_>>()?
            }
        };
        let responses: Vec<&Variable> = vars.iter().filter(|v| v.kind == Kind::Response).collect();
        if responses.len() != 1 {
            return Err(Error::Model(format!(
                "exactly one response variable required, found {}",
                responses.len()
            )));
        }
        if vars.last().map(|v| v.kind) != Some(Kind::Response) {
            return Err(Error::Model("the response must be last in the order".into()));
        }
        Ok(vars)
    }
}

fn check_cpt(vars: &[Variable], cpt: &Cpt) -> Result<()> {
    let child = &vars[cpt.child];
    let expected: usize = cpt.parents.iter().map(|&p| vars[p].card()).product();
    if cpt.rows.len() != expected {
        return Err(Error::Model(format!(
            "cpt for `{}` has {} rows, expected {expected}",
            child.name,
            cpt.rows.len()
        )));
    }
    for (r, row) in cpt.rows.iter().enumerate() {
        if row.len() != child.card() {
            return Err(Error::Model(format!(
                "cpt for `{}` row {r} has {} entries, expected {}",
                child.name,
                row.len(),
                child.card()
            )));
        }
        check_row(row, || format!("cpt for `{}` row {r}", child.name))?;
    }
    Ok(())
}

fn stages_of(vars: &[Variable]) -> Vec<Stage> {
    let mut stages = Vec::new();
    let mut current = Stage { observables: Vec::new(), hidden: Vec::new(), action: None };
    for (id, v) in vars.iter().enumerate() {
        match v.kind {
            Kind::Observable | Kind::Response => current.observables.push(id),
            Kind::Hidden => current.hidden.push(id),
            Kind::Action => {
                current.action = Some(id);
                stages.push(std::mem::replace(
                    &mut current,
                    Stage { observables: Vec::new(), hidden: Vec::new(), action: None },
                ));
            }
        }
    }
    stages.push(current);
    stages
}

impl InfluenceDiagram {
    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id].name
    }

    pub fn names(&self, ids: &[VarId]) -> Vec<&str> {
        ids.iter().map(|&v| self.name(v)).collect()
    }

    pub fn var_id(&self, name: &str) -> Result<VarId> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::Input(format!("unknown variable `{name}`")))
    }

    pub fn var_ids(&self, names: &[&str]) -> Result<Vec<VarId>> {
        names.iter().map(|n| self.var_id(n)).collect()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.vars.iter().map(Variable::card).collect()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Graph over the domain variables plus `sigma`.
    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn sigma(&self) -> NodeId {
        self.vars.len()
    }

    /// Graph parents of `v`, without `sigma`.
    pub fn domain_parents(&self, v: VarId) -> Vec<VarId> {
        self.dag.parents(v).iter().copied().filter(|&p| p != self.sigma()).collect()
    }

    pub fn obs_parents(&self, action: VarId) -> &[VarId] {
        &self.obs_parents[action]
    }

    pub fn int_parents(&self, action: VarId) -> &[VarId] {
        &self.int_parents[action]
    }

    pub fn cpt(&self, v: VarId) -> &Cpt {
        &self.cpts[v]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// Stages `1..=N+1`, stored at indices `0..=N`.
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Number of actions, `N`.
    pub fn n_actions(&self) -> usize {
        self.stages.len() - 1
    }

    /// Actions in information-base order.
    pub fn actions(&self) -> Vec<VarId> {
        self.stages.iter().filter_map(|s| s.action).collect()
    }

    /// 1-based stage of an action.
    pub fn stage_of_action(&self, action: VarId) -> Option<usize> {
        self.stages.iter().position(|s| s.action == Some(action)).map(|i| i + 1)
    }

    pub fn hidden(&self) -> Vec<VarId> {
        (0..self.len()).filter(|&v| self.vars[v].kind == Kind::Hidden).collect()
    }

    /// Covariates including the response (the set `L`).
    pub fn covariates(&self) -> Vec<VarId> {
        (0..self.len()).filter(|&v| self.vars[v].kind.is_covariate()).collect()
    }

    pub fn response(&self) -> VarId {
        self.response
    }

    /// Layout of the observable information base.
    pub fn info(&self) -> &InfoBase {
        &self.info
    }

    /// Observed variables preceding `v` in the information base.
    pub fn observed_predecessors(&self, v: VarId) -> Vec<VarId> {
        (0..v).filter(|&w| self.vars[w].kind.is_observed()).collect()
    }

    /// Copy with replacement tables; structure is kept and revalidated.
    pub fn with_cpts(&self, cpts: Vec<Cpt>) -> Result<Self> {
        if cpts.len() != self.len() {
            return Err(Error::Model("one cpt per variable required".into()));
        }
        for (v, cpt) in cpts.iter().enumerate() {
            let old = &self.cpts[v];
            if cpt.child != v || cpt.parents != old.parents {
                return Err(Error::Model(format!("cpt for `{}` changes the parent list", self.name(v))));
            }
            check_cpt(&self.vars, cpt)?;
        }
        Ok(InfluenceDiagram { cpts, ..self.clone() })
    }

    /// Copy with new interventional parents for `action`; observational
    /// parents are widened to keep `int ⊆ obs`, with the action's table
    /// extended so the added parents have no effect.
    pub fn with_int_parents(&self, action: VarId, parents: &[VarId]) -> Result<Self> {
        let mut builder = self.to_builder();
        let name = self.name(action).to_string();
        let names = |ps: &[VarId]| -> Vec<String> { ps.iter().map(|&p| self.name(p).to_string()).collect() };
        builder.int_parents.retain(|(a, _)| a != &name);
        builder.int_parents_owned(name.clone(), names(parents));

        let added: Vec<VarId> = parents
            .iter()
            .copied()
            .filter(|p| !self.obs_parents[action].contains(p))
            .collect();
        if !added.is_empty() {
            let old = &self.cpts[action];
            let reps: usize = added.iter().map(|&p| self.vars[p].card()).product();
            let rows = old.rows.iter().flat_map(|r| std::iter::repeat_n(r.clone(), reps)).collect();
            let mut cpt_parents = old.parents.clone();
            cpt_parents.extend(&added);
            let mut obs = self.obs_parents[action].clone();
            obs.extend(&added);
            builder.obs_parents.retain(|(a, _)| a != &name);
            builder.obs_parents_owned(name.clone(), names(&obs));
            builder.cpts.retain(|(c, _, _)| c != &name);
            builder.cpt_owned(name, names(&cpt_parents), rows);
        }
        builder.build()
    }

    /// Declarations that rebuild this diagram.
    pub fn to_builder(&self) -> DiagramBuilder {
        let mut b = DiagramBuilder::new();
        for v in &self.vars {
            b.variable(v.clone());
        }
        b.order_owned(self.vars.iter().map(|v| v.name.clone()).collect());
        for (p, c) in self.dag.edges() {
            b.edges.push((self.dag.name(p).to_string(), self.dag.name(c).to_string()));
        }
        for a in self.actions() {
            let names = |ps: &[VarId]| ps.iter().map(|&p| self.name(p).to_string()).collect();
            b.obs_parents_owned(self.name(a).to_string(), names(&self.obs_parents[a]));
            b.int_parents_owned(self.name(a).to_string(), names(&self.int_parents[a]));
        }
        for cpt in &self.cpts {
            b.cpt_owned(
                self.name(cpt.child).to_string(),
                cpt.parents.iter().map(|&p| self.name(p).to_string()).collect(),
                cpt.rows.clone(),
            );
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DiagramBuilder {
        let mut b = DiagramBuilder::new();
        b.var("L", Kind::Observable, &["0", "1"])
            .var("A", Kind::Action, &["0", "1"])
            .var("Y", Kind::Response, &["0", "1"])
            .edge("L", "A")
            .edge("A", "Y")
            .edge("L", "Y")
            .cpt("L", &[], vec![vec![0.4, 0.6]])
            .cpt("A", &["L"], vec![vec![0.5, 0.5], vec![0.2, 0.8]])
            .cpt("Y", &["L", "A"], vec![vec![0.9, 0.1], vec![0.3, 0.7], vec![0.6, 0.4], vec![0.1, 0.9]]);
        b
    }

    #[test]
    fn builds_and_defaults_parents() {
        let id = tiny().build().unwrap();
        let a = id.var_id("A").unwrap();
        assert_eq!(id.obs_parents(a), &[0]);
        assert_eq!(id.int_parents(a), &[0]);
        assert!(id.dag().has_edge(id.sigma(), a));
        assert_eq!(id.n_actions(), 1);
        assert_eq!(id.stages()[1].observables, vec![2]);
    }

    #[test]
    fn sigma_into_covariate_rejected() {
        let mut b = tiny();
        b.edge("sigma", "L");
        let err = b.build().unwrap_err();
        assert!(err.to_string().contains("non-action"), "{err}");
    }

    #[test]
    fn backward_edge_rejected() {
        let mut b = tiny();
        b.edge("Y", "L");
        assert!(b.build().unwrap_err().to_string().contains("backwards"));
    }

    #[test]
    fn bad_row_rejected() {
        let mut b = tiny();
        b.cpts[0].2 = vec![vec![0.4, 0.5]];
        assert!(b.build().unwrap_err().to_string().contains("sums to"));
    }

    #[test]
    fn hidden_int_parent_rejected() {
        let mut b = DiagramBuilder::new();
        b.var("U", Kind::Hidden, &["0", "1"])
            .var("A", Kind::Action, &["0", "1"])
            .var("Y", Kind::Response, &["0", "1"])
            .edge("U", "A")
            .edge("A", "Y")
            .int_parents("A", &["U"])
            .cpt("U", &[], vec![vec![0.5, 0.5]])
            .cpt("A", &["U"], vec![vec![0.5, 0.5], vec![0.5, 0.5]])
            .cpt("Y", &["A"], vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(b.build().unwrap_err().to_string().contains("hidden"));
    }

    #[test]
    fn response_must_be_last() {
        let mut b = tiny();
        b.order(&["L", "Y", "A"]);
        assert!(b.build().is_err());
    }

    #[test]
    fn round_trips_through_builder() {
        let id = tiny().build().unwrap();
        assert_eq!(id.to_builder().build().unwrap(), id);
    }
}
