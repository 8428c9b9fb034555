#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use gcomp::format::{parse_model, ModelDocument};
use gcomp::graph::{Dag, NodeId};
use gcomp::model::{InfluenceDiagram, Regime, ResponseFunctional, VarId};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.idm"))
}

pub fn fixture(name: &str) -> ModelDocument {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    parse_model(&text).expect("fixture parses")
}

/// Every full configuration of the domain variables with its probability,
/// computed by multiplying table entries directly.
pub fn brute_joint(id: &InfluenceDiagram, regime: Regime<'_>) -> Vec<(Vec<usize>, f64)> {
    let cards = id.cards();
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut cfg = vec![0; cards.len()];
        let mut rest = idx;
        for v in (0..cards.len()).rev() {
            cfg[v] = rest % cards[v];
            rest /= cards[v];
        }
        let mut p = 1.0;
        for v in 0..cards.len() {
            let (parents, rows) = match id.stage_of_action(v).and_then(|s| regime.policy_at(s)) {
                Some(pol) => (pol.parents.clone(), &pol.rows),
                None => (id.cpt(v).parents.clone(), &id.cpt(v).rows),
            };
            let mut row = 0;
            for &q in &parents {
                row = row * cards[q] + cfg[q];
            }
            p *= rows[row][cfg[v]];
        }
        out.push((cfg, p));
    }
    out
}

pub fn brute_consequence(id: &InfluenceDiagram, regime: Regime<'_>, k: &ResponseFunctional) -> f64 {
    let y = id.response();
    brute_joint(id, regime).iter().map(|(cfg, p)| p * k.0[cfg[y]]).sum()
}

/// Marginal mass of an assignment under the brute-force joint.
pub fn brute_mass(joint: &[(Vec<usize>, f64)], assignment: &[(VarId, usize)]) -> f64 {
    joint
        .iter()
        .filter(|(cfg, _)| assignment.iter().all(|&(v, s)| cfg[v] == s))
        .map(|(_, p)| p)
        .sum()
}

/// Separation by explicit enumeration of simple paths in the moralized
/// ancestral graph.
pub fn oracle_separated(dag: &Dag, a: &[NodeId], b: &[NodeId], c: &[NodeId]) -> bool {
    let n = dag.len();
    let edges = dag.edges();
    let mut anc: BTreeSet<NodeId> = a.iter().chain(b).chain(c).copied().collect();
    loop {
        let before = anc.len();
        for &(p, ch) in &edges {
            if anc.contains(&ch) {
                anc.insert(p);
            }
        }
        if anc.len() == before {
            break;
        }
    }
    let mut adj = vec![vec![false; n]; n];
    for &(p, ch) in &edges {
        if anc.contains(&p) && anc.contains(&ch) {
            adj[p][ch] = true;
            adj[ch][p] = true;
        }
    }
    for &ch in &anc {
        let ps: Vec<NodeId> = edges.iter().filter(|e| e.1 == ch && anc.contains(&e.0)).map(|e| e.0).collect();
        for &p in &ps {
            for &q in &ps {
                if p != q {
                    adj[p][q] = true;
                }
            }
        }
    }
    fn walk(adj: &[Vec<bool>], v: NodeId, b: &[NodeId], c: &[NodeId], on: &mut Vec<bool>) -> bool {
        if b.contains(&v) {
            return true;
        }
        on[v] = true;
        let found = (0..adj.len()).any(|w| adj[v][w] && !on[w] && !c.contains(&w) && walk(adj, w, b, c, on));
        on[v] = false;
        found
    }
    !a.iter().any(|&s| !c.contains(&s) && walk(&adj, s, b, c, &mut vec![false; n]))
}

/// Whether `path` is a path of the moralized ancestral graph of `a ∪ b ∪ c`
/// that starts in `a`, ends in `b` and avoids `c`.
pub fn is_connecting_path(dag: &Dag, a: &[NodeId], b: &[NodeId], c: &[NodeId], path: &[NodeId]) -> bool {
    let seed: Vec<NodeId> = a.iter().chain(b).chain(c).copied().collect();
    let anc = dag.ancestral_closure(&seed).unwrap();
    let adjacent = |u: NodeId, v: NodeId| {
        dag.has_edge(u, v)
            || dag.has_edge(v, u)
            || anc.iter().any(|&ch| dag.has_edge(u, ch) && dag.has_edge(v, ch))
    };
    !path.is_empty()
        && a.contains(&path[0])
        && b.contains(path.last().unwrap())
        && path.iter().all(|v| anc.contains(v) && !c.contains(v))
        && path.windows(2).all(|w| adjacent(w[0], w[1]))
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

/// Runs the CLI with `gcomp` prepended.
pub fn cli(args: &[&str]) -> gcomp::cli::Outcome {
    gcomp::cli::run(std::iter::once("gcomp").chain(args.iter().copied()))
}

/// The value of `key=` in a report.
pub fn field<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

/// G-recursion computed variable by variable along the information base,
/// with covariate conditionals read off the brute-force observational joint.
pub fn oracle_grecursion(id: &InfluenceDiagram, s: &gcomp::model::Strategy, value: &dyn Fn(&[usize]) -> f64) -> f64 {
    let joint = brute_joint(id, Regime::Observational);
    let info = id.info().clone();
    fn rec(
        id: &InfluenceDiagram,
        info: &gcomp::model::InfoBase,
        joint: &[(Vec<usize>, f64)],
        s: &gcomp::model::Strategy,
        value: &dyn Fn(&[usize]) -> f64,
        h: &mut Vec<usize>,
    ) -> f64 {
        if h.len() == info.len() {
            return value(h);
        }
        let v = info.vars()[h.len()];
        let card = id.var(v).card();
        let mut total = 0.0;
        if let Some(p) = s.policy_for(v) {
            let mut row = 0;
            for &q in &p.parents {
                row = row * id.var(q).card() + h[info.position(q).unwrap()];
            }
            for a in 0..card {
                let w = p.rows[row][a];
                if w > 0.0 {
                    h.push(a);
                    total += w * rec(id, info, joint, s, value, h);
                    h.pop();
                }
            }
        } else {
            let assign = |h: &[usize]| -> Vec<(VarId, usize)> { h.iter().enumerate().map(|(i, &x)| (info.vars()[i], x)).collect() };
            let base = brute_mass(joint, &assign(h));
            for x in 0..card {
                h.push(x);
                let m = brute_mass(joint, &assign(h));
                if m > 0.0 {
                    total += m / base * rec(id, info, joint, s, value, h);
                }
                h.pop();
            }
        }
        total
    }
    rec(id, &info, &joint, s, value, &mut Vec::new())
}

/// Whether any valid sequence for `order` is admissible, by trying every
/// assignment of covariates to stages and testing each stage with
/// [`oracle_separated`].
pub fn exhaustive_admissible(id: &InfluenceDiagram, strategy: Option<&gcomp::model::Strategy>, order: &[VarId]) -> bool {
    use gcomp::model::Kind;
    let covs: Vec<VarId> = (0..id.len()).filter(|&v| id.var(v).kind == Kind::Observable).collect();
    let n = order.len();
    let aux = gcomp::grecursion::AuxDiagrams::with_order(id, strategy, order.to_vec());
    let dags: Vec<Dag> = (1..=n).map(|i| aux.dag_i(i)).collect();
    let total = (n + 1).pow(covs.len() as u32);
    (0..total).any(|code| {
        let mut sets = vec![Vec::new(); n];
        let mut rest = code;
        for &v in &covs {
            let slot = rest % (n + 1);
            rest /= n + 1;
            if slot > 0 {
                sets[slot - 1].push(v);
            }
        }
        if gcomp::admissible::check_admissible(id, strategy, order, &sets).is_err() {
            return false;
        }
        let mut cum: Vec<VarId> = Vec::new();
        (1..=n).all(|i| {
            cum.extend(&sets[i - 1]);
            let cond: Vec<VarId> = cum.iter().chain(&order[..i]).copied().collect();
            oracle_separated(&dags[i - 1], &[id.response()], &[id.sigma()], &cond)
        })
    })
}
