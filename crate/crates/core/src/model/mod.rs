//! Influence-diagram data model: typed variables, conditional probability
//! tables, strategies, exact joint distributions and the brute-force
//! consequence oracle.

mod diagram;
mod info;
mod joint;
mod strategy;

use std::fmt;
use std::str::FromStr;

pub use diagram::{DiagramBuilder, InfluenceDiagram, Stage, SIGMA};
pub use info::{ConditionalSource, InfoBase, PartialHistory};
pub use joint::{
    conditional, consequence_direct, consequence_direct_with, joint_distribution, support, Conditional, JointTable,
    ObservableLaw, ResponseFunctional, Support,
};
pub use strategy::{Policy, Regime, Strategy};
pub(crate) use joint::expand;

use crate::error::{Error, Result};

/// Index of a domain variable in the extended information base.
pub type VarId = usize;

/// Absolute tolerance for probability comparisons and row sums.
pub const PROB_TOL: f64 = 1e-9;

/// Largest dense joint table, in cells (22 binary dimensions).
pub const MAX_JOINT_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Observable,
    Hidden,
    Action,
    Response,
}

impl Kind {
    pub fn keyword(self) -> &'static str {
        match self {
            Kind::Observable => "obs",
            Kind::Hidden => "hid",
            Kind::Action => "act",
            Kind::Response => "resp",
        }
    }

    /// Covariates and the response; these make up the `L` slots.
    pub fn is_covariate(self) -> bool {
        matches!(self, Kind::Observable | Kind::Response)
    }

    /// Visible to the analyst: everything except hidden variables.
    pub fn is_observed(self) -> bool {
        self != Kind::Hidden
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obs" => Ok(Kind::Observable),
            "hid" => Ok(Kind::Hidden),
            "act" => Ok(Kind::Action),
            "resp" => Ok(Kind::Response),
            other => Err(Error::Input(format!("unknown variable kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: Kind,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: Kind, states: &[&str]) -> Self {
        Variable {
            name: name.into(),
            kind,
            states: states.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn binary(name: impl Into<String>, kind: Kind) -> Self {
        Variable::new(name, kind, &["0", "1"])
    }

    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional probability table of `child` given an ordered parent list.
///
/// Rows are indexed in mixed radix over the parents, first parent most
/// significant; each row is a distribution over the child's states.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn row_index(&self, cards: &[usize], state_of: impl Fn(VarId) -> usize) -> usize {
        mixed_radix(self.parents.iter().map(|&p| (state_of(p), cards[p])))
    }
}

/// Mixed-radix index of `(digit, radix)` pairs, first pair most significant.
pub fn mixed_radix(digits: impl IntoIterator<Item = (usize, usize)>) -> usize {
    digits.into_iter().fold(0, |acc, (d, r)| acc * r + d)
}

/// Inverse of [`mixed_radix`].
pub fn decode_radix(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    out
}

pub fn check_row(row: &[f64], what: impl Fn() -> String) -> Result<()> {
    if row.iter().any(|p| !(0.0..=1.0).contains(p) || p.is_nan()) {
        return Err(Error::Model(format!("{}: entries must lie in [0,1]", what())));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::Model(format!("{}: row sums to {sum}, expected 1", what())));
    }
    Ok(())
}
