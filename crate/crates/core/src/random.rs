//! Seeded generators for random diagrams, tables and strategies, used by
//! the property tests and the acceptance suite.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::Result;
use crate::graph::Dag;
use crate::model::{Cpt, DiagramBuilder, InfluenceDiagram, Kind, Policy, Strategy, VarId, Variable};

/// A draw from the symmetric Dirichlet with unit concentration.
pub fn dirichlet_row<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && draws.iter().all(|&x| x > 0.0) {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

fn dirichlet_rows<R: Rng + ?Sized>(rng: &mut R, rows: usize, k: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| dirichlet_row(rng, k)).collect()
}

/// Same structure with every table redrawn.
pub fn randomize_cpts<R: Rng + ?Sized>(id: &InfluenceDiagram, rng: &mut R) -> Result<InfluenceDiagram> {
    let cpts = id
        .cpts()
        .iter()
        .map(|c| Cpt {
            child: c.child,
            parents: c.parents.clone(),
            rows: dirichlet_rows(rng, c.rows.len(), id.var(c.child).card()),
        })
        .collect();
    id.with_cpts(cpts)
}

/// Variables and forward edges of a diagram, before tables are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub vars: Vec<Variable>,
    /// Pairs `(parent, child)` with `parent < child`.
    pub edges: Vec<(VarId, VarId)>,
    /// Declared interventional parents, when not the default.
    pub int_parents: Vec<(VarId, Vec<VarId>)>,
}

impl Skeleton {
    pub fn add_edge(&mut self, parent: VarId, child: VarId) {
        assert!(parent < child, "edges run forward");
        if !self.edges.contains(&(parent, child)) {
            self.edges.push((parent, child));
        }
    }

    pub fn index(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Diagram with Dirichlet tables.
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<InfluenceDiagram> {
        let mut b = DiagramBuilder::new();
        for v in &self.vars {
            b.variable(v.clone());
        }
        let mut edges = self.edges.clone();
        edges.sort_unstable_by_key(|&(p, c)| (c, p));
        for &(p, c) in &edges {
            b.edge(&self.vars[p].name, &self.vars[c].name);
        }
        for (a, ps) in &self.int_parents {
            b.int_parents_owned(self.vars[*a].name.clone(), ps.iter().map(|&p| self.vars[p].name.clone()).collect());
        }
        for (v, var) in self.vars.iter().enumerate() {
            let parents: Vec<VarId> = edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect();
            let rows: usize = parents.iter().map(|&p| self.vars[p].card()).product();
            b.cpt_owned(
                var.name.clone(),
                parents.iter().map(|&p| self.vars[p].name.clone()).collect(),
                dirichlet_rows(rng, rows, var.card()),
            );
        }
        b.build()
    }
}

/// Complete graph over `(L_1, A_1, ..., L_N, A_N, Y)`, all binary.
pub fn complete_skeleton(n_actions: usize) -> Skeleton {
    let mut vars = Vec::new();
    for i in 1..=n_actions {
        vars.push(Variable::binary(format!("L{i}"), Kind::Observable));
        vars.push(Variable::binary(format!("A{i}"), Kind::Action));
    }
    vars.push(Variable::binary("Y", Kind::Response));
    let n = vars.len();
    let edges = (0..n).flat_map(|c| (0..c).map(move |p| (p, c))).collect();
    Skeleton { vars, edges, int_parents: Vec::new() }
}

/// Complete two-type diagram with all-positive random tables.
pub fn complete_diagram<R: Rng + ?Sized>(rng: &mut R, n_actions: usize) -> InfluenceDiagram {
    complete_skeleton(n_actions).build(rng).expect("complete skeleton is valid")
}

/// Which arrows out of hidden variables a random skeleton may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenArrows {
    /// Any forward arrow.
    Any,
    /// Never into an action.
    NotIntoActions,
    /// Only into actions or other hidden variables.
    OnlyIntoActions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedOptions {
    pub n_actions: usize,
    pub max_observed_per_slot: usize,
    pub max_hidden_per_slot: usize,
    pub edge_prob: f64,
    pub hidden: HiddenArrows,
    /// Give every action an arrow into the response.
    pub actions_reach_response: bool,
    /// Draw interventional parents as a random subset of the observed parents.
    pub random_int_parents: bool,
    /// Upper bound on the number of domain variables, if any.
    pub max_nodes: Option<usize>,
}

impl Default for ExtendedOptions {
    fn default() -> Self {
        ExtendedOptions {
            n_actions: 2,
            max_observed_per_slot: 1,
            max_hidden_per_slot: 1,
            edge_prob: 0.5,
            hidden: HiddenArrows::Any,
            actions_reach_response: true,
            random_int_parents: false,
            max_nodes: None,
        }
    }
}

/// Random extended information base `(L_1, U_1, A_1, ..., Y)` with random
/// forward arrows, all binary.
pub fn extended_skeleton<R: Rng + ?Sized>(rng: &mut R, opts: &ExtendedOptions) -> Skeleton {
    let mut vars = Vec::new();
    let budget = opts.max_nodes.unwrap_or(usize::MAX);
    let mut remaining = budget.saturating_sub(opts.n_actions + 1);
    for i in 1..=opts.n_actions {
        let nl = rng.random_range(0..=opts.max_observed_per_slot).min(remaining);
        remaining -= nl;
        for j in 0..nl {
            vars.push(Variable::binary(format!("L{i}{}", suffix(j)), Kind::Observable));
        }
        let nu = rng.random_range(0..=opts.max_hidden_per_slot).min(remaining);
        remaining -= nu;
        for j in 0..nu {
            vars.push(Variable::binary(format!("U{i}{}", suffix(j)), Kind::Hidden));
        }
        vars.push(Variable::binary(format!("A{i}"), Kind::Action));
    }
    vars.push(Variable::binary("Y", Kind::Response));
    let n = vars.len();
    let mut sk = Skeleton { vars, edges: Vec::new(), int_parents: Vec::new() };
    for c in 0..n {
        for p in 0..c {
            let (pk, ck) = (sk.vars[p].kind, sk.vars[c].kind);
            let allowed = match (pk, opts.hidden) {
                (Kind::Hidden, HiddenArrows::NotIntoActions) => ck != Kind::Action,
                (Kind::Hidden, HiddenArrows::OnlyIntoActions) => matches!(ck, Kind::Action | Kind::Hidden),
                _ => true,
            };
            let forced = opts.actions_reach_response && pk == Kind::Action && ck == Kind::Response;
            if forced || (allowed && rng.random_bool(opts.edge_prob)) {
                sk.add_edge(p, c);
            }
        }
    }
    if opts.random_int_parents {
        for a in (0..n).filter(|&a| sk.vars[a].kind == Kind::Action) {
            let observed: Vec<VarId> = sk
                .edges
                .iter()
                .filter(|e| e.1 == a && sk.vars[e.0].kind.is_observed())
                .map(|e| e.0)
                .collect();
            let chosen = observed.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            sk.int_parents.push((a, chosen));
        }
    }
    sk
}

fn suffix(j: usize) -> String {
    if j == 0 {
        String::new()
    } else {
        ((b'a' + j as u8) as char).to_string()
    }
}

pub fn extended_diagram<R: Rng + ?Sized>(rng: &mut R, opts: &ExtendedOptions) -> InfluenceDiagram {
    extended_skeleton(rng, opts).build(rng).expect("random skeleton is valid")
}

/// Random control strategy: each policy reads a random subset of the
/// observed predecessors; each policy is deterministic with probability
/// `deterministic_prob`, otherwise its rows are Dirichlet draws.
pub fn random_strategy<R: Rng + ?Sized>(
    id: &InfluenceDiagram,
    rng: &mut R,
    name: &str,
    deterministic_prob: f64,
) -> Strategy {
    let policies = id
        .actions()
        .into_iter()
        .map(|a| {
            let parents: Vec<VarId> = id.observed_predecessors(a).into_iter().filter(|_| rng.random_bool(0.5)).collect();
            random_policy(id, rng, a, parents, deterministic_prob)
        })
        .collect();
    Strategy::new(id, name, policies).expect("random strategy is valid")
}

/// Random policy for `action` over the given parents.
pub fn random_policy<R: Rng + ?Sized>(
    id: &InfluenceDiagram,
    rng: &mut R,
    action: VarId,
    parents: Vec<VarId>,
    deterministic_prob: f64,
) -> Policy {
    let rows: usize = parents.iter().map(|&p| id.var(p).card()).product();
    let card = id.var(action).card();
    if rng.random_bool(deterministic_prob) {
        let choice: Vec<usize> = (0..rows).map(|_| rng.random_range(0..card)).collect();
        Policy::deterministic(action, parents, card, &choice)
    } else {
        Policy { action, parents, rows: dirichlet_rows(rng, rows, card) }
    }
}

/// Random DAG on `n` nodes named `v0, v1, ...` whose arrows respect a
/// random permutation.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, n: usize, edge_prob: f64) -> Dag {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.random_bool(edge_prob) {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    Dag::new((0..n).map(|i| format!("v{i}")), &edges).expect("forward arrows are acyclic")
}
