//! Synthesis of polynomial interpretations for the unknown symbols of a
//! constraint set, one dependency group at a time.

mod partition;
mod search;
mod verify;

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

pub use partition::{partition, single_group, Group};
pub use search::{monomials, solve_group, Outcome};
pub use verify::{verify, Certificate, Counterexample, Witness, SAMPLES};

use crate::constraint::{Constraint, ConstraintSet};
use crate::index::{leq_semantic, IndexError, Interpretation, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SearchStrategy {
    /// First solution in lexicographic order of the coefficient vector.
    Backtracking,
    /// Restart the search for every coefficient sum, smallest first, so the
    /// solution has minimal coefficient sum.
    Restart,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_degree: u32,
    pub coeff_bound: i64,
    pub timeout: Option<Duration>,
    pub strategy: SearchStrategy,
    /// Solve groups in dependency order rather than all at once.
    pub incremental: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_degree: 2,
            coeff_bound: 3,
            timeout: None,
            strategy: SearchStrategy::Restart,
            incremental: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Reads the per-group timeout in seconds from `SIZAX_TIMEOUT`.
    pub fn with_env_timeout(mut self) -> Self {
        if let Some(secs) = std::env::var("SIZAX_TIMEOUT").ok().and_then(|s| s.parse::<f64>().ok()) {
            self.timeout = Some(Duration::from_secs_f64(secs));
        }
        self
    }

    /// Coefficient bounds tried in turn.
    pub fn bounds(&self) -> Vec<i64> {
        let mut bs = vec![1, self.coeff_bound.max(1), 7.max(self.coeff_bound)];
        bs.sort_unstable();
        bs.dedup();
        bs
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("{}", unsat_message(symbols, constraint))]
    Unsat { symbols: Vec<String>, constraint: Option<String> },
    #[error("search timed out for {symbols:?}")]
    Timeout { symbols: Vec<String> },
    #[error("solution fails re-verification at `{constraint}`")]
    Unverified { constraint: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

fn unsat_message(symbols: &[String], constraint: &Option<String>) -> String {
    match (symbols.is_empty(), constraint) {
        (true, Some(c)) => format!("constraint `{c}` does not hold"),
        (false, Some(c)) => format!("no interpretation found for {symbols:?} (`{c}` fails)"),
        _ => format!("no interpretation found for {symbols:?}"),
    }
}

/// How one group was solved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupReport {
    pub symbols: Vec<String>,
    pub constraints: usize,
    pub degree: u32,
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub interpretation: Interpretation,
    /// Groups in the order they were solved.
    pub groups: Vec<GroupReport>,
    pub certificate: Certificate,
}

/// Solves `cs` starting from the interpretation `given` (whose symbols are
/// not searched for).
pub fn solve_with(cs: &ConstraintSet, given: &Interpretation, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    let groups = if cfg.incremental { partition(cs) } else { single_group(cs) };
    let arities = cs.symbols();
    let mut interp = given.clone();
    let mut reports = Vec::new();
    for g in groups {
        let refs: Vec<&Constraint> = g.constraints.iter().map(|k| &cs.constraints[*k]).collect();
        let symbols: Vec<(String, usize)> =
            g.symbols.iter().filter(|s| !given.contains(s)).map(|s| (s.clone(), arities[s])).collect();
        if symbols.is_empty() {
            for c in &refs {
                if leq_semantic(&interp, &c.lhs, &c.rhs)? == Verdict::Unknown {
                    return Err(SolveError::Unsat { symbols: g.symbols.clone(), constraint: Some(c.to_string()) });
                }
            }
            reports.push(GroupReport { symbols: g.symbols, constraints: refs.len(), degree: 0, bound: 0 });
            continue;
        }
        let deadline = cfg.timeout.map(|t| Instant::now() + t);
        let mut found = None;
        'ladder: for bound in cfg.bounds() {
            for degree in 1..=cfg.max_degree.max(1) {
                match solve_group(&refs, &symbols, &interp, degree, bound, cfg, deadline)? {
                    Outcome::Found(i) => {
                        found = Some((i, degree, bound));
                        break 'ladder;
                    }
                    Outcome::Unsat => {}
                    Outcome::Timeout => return Err(SolveError::Timeout { symbols: g.symbols.clone() }),
                }
            }
        }
        let Some((i, degree, bound)) = found else {
            return Err(SolveError::Unsat { symbols: g.symbols.clone(), constraint: None });
        };
        interp.extend(&i);
        reports.push(GroupReport { symbols: g.symbols, constraints: refs.len(), degree, bound });
    }
    match verify(&interp, cs, SAMPLES, cfg.seed)? {
        Ok(certificate) => Ok(Solution { interpretation: interp, groups: reports, certificate }),
        Err(cx) => Err(SolveError::Unverified { constraint: cx.constraint.to_string() }),
    }
}

pub fn solve(cs: &ConstraintSet, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    solve_with(cs, &Interpretation::new(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse_constraints;

    #[test]
    fn append_default_config() {
        let cs = parse_constraints("j <= F1(0, j)\nF1(i, j) + 1 <= F1(i + 1, j)\n").unwrap();
        let s = solve(&cs, &SolverConfig::default()).unwrap();
        assert_eq!(s.interpretation.get("F1").unwrap().to_string(), "x1 + x2");
        assert_eq!(s.certificate.witnesses.len(), 2);
    }

    #[test]
    fn reverse_groups_in_order() {
        let src = "j <= R(0, j)\nR(i, j + 1) <= R(i + 1, j)\nR(i, 0) <= Q(i)\n";
        let s = solve(&parse_constraints(src).unwrap(), &SolverConfig::default()).unwrap();
        let order: Vec<&str> = s.groups.iter().map(|g| g.symbols[0].as_str()).collect();
        assert_eq!(order, ["R", "Q"]);
        assert_eq!(s.interpretation.get("Q").unwrap().to_string(), "x1");
    }

    #[test]
    fn square_below_identity_is_unsat() {
        let cs = parse_constraints("i * i <= i\n").unwrap();
        assert!(matches!(solve(&cs, &SolverConfig::default()), Err(SolveError::Unsat { .. })));
    }

    #[test]
    fn bounds_ladder() {
        assert_eq!(SolverConfig::default().bounds(), [1, 3, 7]);
        assert_eq!(SolverConfig { coeff_bound: 9, ..Default::default() }.bounds(), [1, 9]);
    }
}
