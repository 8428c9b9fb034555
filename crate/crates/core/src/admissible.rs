//! Admissible sequences: the candidate `(L*_i)` built from the sets `M_i`,
//! per-stage admissibility, greedy improvement and ordering search.

use crate::error::{Error, Result};
use crate::grecursion::AuxDiagrams;
use crate::model::{InfluenceDiagram, Kind, Strategy, VarId};

/// Largest number of actions the ordering search will permute.
pub const MAX_SEARCH_ACTIONS: usize = 8;

/// An action order with one covariate set per stage and its verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSequence {
    pub order: Vec<VarId>,
    /// `L_i` for each stage.
    pub sets: Vec<Vec<VarId>>,
    /// `M_i` for each stage.
    pub m: Vec<Vec<VarId>>,
    pub verdicts: Vec<bool>,
    /// Path from `Y` to `sigma` for each failed stage.
    pub witnesses: Vec<Option<Vec<String>>>,
}

impl AdmissibleSequence {
    pub fn admissible(&self) -> bool {
        self.verdicts.iter().all(|&v| v)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.verdicts.iter().position(|&v| !v).map(|i| i + 1)
    }

    /// `L̄_i`, sorted.
    pub fn cumulative(&self, i: usize) -> Vec<VarId> {
        let mut out: Vec<VarId> = self.sets[..i].iter().flatten().copied().collect();
        out.sort_unstable();
        out
    }
}

struct Context<'a> {
    id: &'a InfluenceDiagram,
    aux: AuxDiagrams<'a>,
    /// `nd_e(A_i, ..., A_N)` for each stage.
    nondesc: Vec<Vec<VarId>>,
}

impl<'a> Context<'a> {
    fn new(id: &'a InfluenceDiagram, strategy: Option<&Strategy>, order: &[VarId]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != id.actions() {
            return Err(Error::Input("action order must list every action exactly once".into()));
        }
        let aux = AuxDiagrams::with_order(id, strategy, order.to_vec());
        let de = aux.dag_e();
        let anc_y = de.ancestral_closure(&[id.response()])?;
        if let Some(&a) = order.iter().find(|a| !anc_y.contains(a)) {
            return Err(Error::Precondition(format!(
                "action `{}` is not an ancestor of `{}`",
                id.name(a),
                id.name(id.response())
            )));
        }
        let nondesc = (0..order.len())
            .map(|i| de.nondescendants(&order[i..]).map(|nd| nd.into_iter().filter(|&v| v < id.len()).collect()))
            .collect::<std::result::Result<Vec<Vec<VarId>>, _>>()?;
        Ok(Context { id, aux, nondesc })
    }

    fn n(&self) -> usize {
        self.aux.order().len()
    }

    fn m_sets(&self) -> Result<Vec<Vec<VarId>>> {
        let id = self.id;
        let mut out: Vec<Vec<VarId>> = Vec::with_capacity(self.n());
        for i in 1..=self.n() {
            let anc = self.aux.dag_i(i).ancestral_closure(&[id.response()])?;
            let m: Vec<VarId> = self.nondesc[i - 1]
                .iter()
                .copied()
                .filter(|&v| id.var(v).kind == Kind::Observable && anc.contains(&v))
                .collect();
            if let Some(prev) = out.last() {
                debug_assert!(prev.iter().all(|v| m.contains(v)), "M sets must be nested");
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Separation of `Y` from `sigma` in `D_i` given `cumulative ∪ Ā_i`.
    fn stage_path(&self, i: usize, cumulative: &[VarId]) -> Option<Vec<String>> {
        let d = self.aux.dag_i(i);
        let mut cond: Vec<VarId> = cumulative.iter().chain(&self.aux.order()[..i]).copied().collect();
        cond.sort_unstable();
        cond.dedup();
        d.connecting_path(&[self.id.response()], &[self.id.sigma()], &cond)
            .expect("disjoint sets")
            .map(|p| d.names_of(&p).into_iter().map(String::from).collect())
    }

    fn validate(&self, sets: &[Vec<VarId>]) -> Result<()> {
        let id = self.id;
        if sets.len() != self.n() {
            return Err(Error::Input(format!("sequence needs {} sets, got {}", self.n(), sets.len())));
        }
        let mut seen = vec![false; id.len()];
        for (i, set) in sets.iter().enumerate() {
            for &v in set {
                if v >= id.len() || id.var(v).kind != Kind::Observable {
                    return Err(Error::Input(format!("sequence stage {} holds a non-covariate", i + 1)));
                }
                if seen[v] {
                    return Err(Error::Input(format!("`{}` appears twice in the sequence", id.name(v))));
                }
                seen[v] = true;
            }
            let bad = sets[..=i].iter().flatten().find(|v| !self.nondesc[i].contains(v));
            if let Some(&v) = bad {
                return Err(Error::Input(format!(
                    "`{}` descends from an action at or after stage {}",
                    id.name(v),
                    i + 1
                )));
            }
        }
        Ok(())
    }

    fn assess(&self, sets: Vec<Vec<VarId>>, m: Vec<Vec<VarId>>) -> AdmissibleSequence {
        let mut cumulative = Vec::new();
        let witnesses: Vec<Option<Vec<String>>> = sets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                cumulative.extend(s.iter().copied());
                self.stage_path(i + 1, &cumulative)
            })
            .collect();
        AdmissibleSequence {
            order: self.aux.order().to_vec(),
            sets,
            m,
            verdicts: witnesses.iter().map(Option::is_none).collect(),
            witnesses,
        }
    }
}

/// The candidate `L*_i = M_i \ M_{i-1}` and its verdicts.
pub fn compute_candidate_sequence(
    id: &InfluenceDiagram,
    strategy: Option<&Strategy>,
    order: &[VarId],
) -> Result<AdmissibleSequence> {
    let ctx = Context::new(id, strategy, order)?;
    let m = ctx.m_sets()?;
    let sets = (0..m.len())
        .map(|i| m[i].iter().copied().filter(|v| i == 0 || !m[i - 1].contains(v)).collect())
        .collect();
    Ok(ctx.assess(sets, m))
}

/// Verdicts for a given sequence.
pub fn check_admissible(
    id: &InfluenceDiagram,
    strategy: Option<&Strategy>,
    order: &[VarId],
    sets: &[Vec<VarId>],
) -> Result<AdmissibleSequence> {
    let ctx = Context::new(id, strategy, order)?;
    ctx.validate(sets)?;
    let mut sets = sets.to_vec();
    sets.iter_mut().for_each(|s| s.sort_unstable());
    Ok(ctx.assess(sets, ctx.m_sets()?))
}

/// Shrinks each stage set by repeated single-variable removal, trying the
/// latest-declared variable first. A stage that fails before shrinking
/// aborts the process and the candidate is returned unchanged.
pub fn improve_sequence(
    id: &InfluenceDiagram,
    strategy: Option<&Strategy>,
    candidate: &AdmissibleSequence,
) -> Result<AdmissibleSequence> {
    let ctx = Context::new(id, strategy, &candidate.order)?;
    let m = ctx.m_sets()?;
    let mut chosen: Vec<VarId> = Vec::new();
    let mut sets = Vec::with_capacity(m.len());
    for i in 1..=m.len() {
        let mut cur: Vec<VarId> = m[i - 1].iter().copied().filter(|v| !chosen.contains(v)).collect();
        let with = |extra: &[VarId]| -> Vec<VarId> { chosen.iter().chain(extra).copied().collect() };
        if ctx.stage_path(i, &with(&cur)).is_some() {
            return Ok(candidate.clone());
        }
        loop {
            let removable = cur.iter().rev().copied().find(|&v| {
                let rest: Vec<VarId> = cur.iter().copied().filter(|&w| w != v).collect();
                ctx.stage_path(i, &with(&rest)).is_none()
            });
            match removable {
                Some(v) => cur.retain(|&w| w != v),
                None => break,
            }
        }
        chosen.extend(&cur);
        sets.push(cur);
    }
    let out = ctx.assess(sets, m);
    debug_assert!(out.admissible());
    Ok(out)
}

/// Action orders consistent with `D_e`, in lexicographic order of
/// declaration positions.
pub fn valid_orderings(id: &InfluenceDiagram, strategy: Option<&Strategy>) -> Result<Vec<Vec<VarId>>> {
    let actions = id.actions();
    if actions.len() > MAX_SEARCH_ACTIONS {
        return Err(Error::Capacity(format!(
            "ordering search supports at most {MAX_SEARCH_ACTIONS} actions, got {}",
            actions.len()
        )));
    }
    let de = AuxDiagrams::new(id, strategy).dag_e();
    let before: Vec<Vec<VarId>> = actions
        .iter()
        .map(|&a| {
            de.ancestral_closure(&[a])
                .map(|anc| anc.into_iter().filter(|&b| b != a && actions.contains(&b)).collect())
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut out = Vec::new();
    let mut cur = Vec::new();
    permute(&actions, &before, &mut cur, &mut out);
    Ok(out)
}

fn permute(actions: &[VarId], before: &[Vec<VarId>], cur: &mut Vec<VarId>, out: &mut Vec<Vec<VarId>>) {
    if cur.len() == actions.len() {
        out.push(cur.clone());
        return;
    }
    for (j, &a) in actions.iter().enumerate() {
        if cur.contains(&a) || !before[j].iter().all(|b| cur.contains(b)) {
            continue;
        }
        cur.push(a);
        permute(actions, before, cur, out);
        cur.pop();
    }
}

/// First ordering whose candidate sequence is admissible.
pub fn search_admissible_ordering(
    id: &InfluenceDiagram,
    strategy: Option<&Strategy>,
) -> Result<Option<AdmissibleSequence>> {
    for order in valid_orderings(id, strategy)? {
        let seq = compute_candidate_sequence(id, strategy, &order)?;
        if seq.admissible() {
            return Ok(Some(seq));
        }
    }
    Ok(None)
}
