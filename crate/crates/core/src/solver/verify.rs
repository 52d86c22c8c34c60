//! Independent re-checking of solutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraint::{Constraint, ConstraintSet};
use crate::index::{difference, evaluate, refute, Assignment, IndexError, Interpretation};

/// `rhs - lhs` of one constraint under the interpretation; all of its
/// coefficients are non-negative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub constraint: String,
    pub difference: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Certificate {
    pub witnesses: Vec<Witness>,
    /// Random assignments evaluated per constraint.
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub constraint: Constraint,
    /// A falsifying assignment, when one was found.
    pub assignment: Option<Assignment>,
}

pub const SAMPLES: usize = 1000;
const SAMPLE_MAX: u64 = 64;

fn falsified(c: &Constraint, interp: &Interpretation, a: &Assignment) -> Result<bool, IndexError> {
    Ok(evaluate(&c.lhs, interp, a)? > evaluate(&c.rhs, interp, a)?)
}

/// Checks every constraint by absolute positiveness of its difference
/// polynomial and by evaluation at `samples` random assignments.
pub fn verify(interp: &Interpretation, cs: &ConstraintSet, samples: usize, seed: u64) -> Result<Result<Certificate, Counterexample>, IndexError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cert = Certificate { witnesses: Vec::new(), samples };
    for c in cs.iter() {
        let diff = difference(interp, &c.lhs, &c.rhs)?;
        if !diff.is_absolutely_positive() {
            let assignment = refute(interp, &c.lhs, &c.rhs, SAMPLE_MAX, samples, &mut rng)?;
            return Ok(Err(Counterexample { constraint: c.clone(), assignment }));
        }
        let vars: Vec<_> = c.lhs.vars().into_iter().chain(c.rhs.vars()).collect();
        for _ in 0..samples {
            let mut a = Assignment::new();
            for v in &vars {
                a.set(v.clone(), rng.gen_range(0..=SAMPLE_MAX));
            }
            if falsified(c, interp, &a)? {
                return Ok(Err(Counterexample { constraint: c.clone(), assignment: Some(a) }));
            }
        }
        cert.witnesses.push(Witness { constraint: c.to_string(), difference: diff.to_string() });
    }
    Ok(Ok(cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::{parse_constraints, parse_interpretation};

    const APPEND: &str = "j <= F1(0, j)\nF1(i, j) + 1 <= F1(i + 1, j)\n";

    #[test]
    fn sum_is_certified_with_zero_slack() {
        let cs = parse_constraints(APPEND).unwrap();
        let i = parse_interpretation("F1(i, j) = i + j").unwrap();
        let cert = verify(&i, &cs, SAMPLES, 7).unwrap().unwrap();
        assert_eq!(cert.witnesses.len(), 2);
        assert!(cert.witnesses.iter().all(|w| w.difference == "0"));
    }

    #[test]
    fn projection_is_refuted() {
        let cs = parse_constraints(APPEND).unwrap();
        let i = parse_interpretation("F1(i, j) = i").unwrap();
        let cx = verify(&i, &cs, SAMPLES, 7).unwrap().unwrap_err();
        assert_eq!(cx.constraint.to_string(), "j <= F1(0, j)");
        let a = cx.assignment.unwrap();
        assert!(a.get(&"j".into()) >= 1);
    }

    #[test]
    fn empty_set_has_empty_certificate() {
        let cert = verify(&Interpretation::new(), &ConstraintSet::new(), SAMPLES, 0).unwrap().unwrap();
        assert!(cert.witnesses.is_empty());
    }
}
