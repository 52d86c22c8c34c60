//! Value sizes and empirical bound checks.

use serde::Serialize;

use super::{call, Status, Value};
use crate::index::{evaluate, Assignment, IndexError, Interpretation};
use crate::sized::{Monotype, Type};
use crate::syntax::ast::{Program, SimpleType};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SizeMeasure {
    /// Nullary constructors weigh 0, the others 1.
    #[default]
    Natural,
    /// Every constructor weighs 1.
    Strict,
}

/// Size of a data value: the weight of its head constructor plus the sizes
/// of the arguments whose declared type is a data type. Arguments typed by a
/// type parameter are not counted, matching the constructor declarations.
/// `None` for partial applications.
pub fn size(prog: &Program, v: &Value, measure: SizeMeasure) -> Option<u64> {
    let mut total = 0u64;
    let mut todo = vec![v];
    while let Some(v) = todo.pop() {
        let Value::Con(c, args) = v else { return None };
        let info = prog.constructor(c)?;
        if args.len() != info.arity() {
            return None;
        }
        total += match (measure, args.is_empty()) {
            (SizeMeasure::Natural, true) => 0,
            _ => 1,
        };
        for (a, t) in args.iter().zip(&info.args) {
            if matches!(t, SimpleType::Base { .. }) {
                todo.push(a);
            }
        }
    }
    Some(total)
}

/// Does the observed value respect the predicted monotype? Base positions
/// compare sizes; untracked positions are skipped.
pub fn sizes_within(
    prog: &Program,
    v: &Value,
    m: &Monotype,
    interp: &Interpretation,
    alpha: &Assignment,
    measure: SizeMeasure,
) -> Result<Option<(u64, u128)>, IndexError> {
    match (m, v) {
        (Monotype::Base { index, .. }, _) => {
            let observed = size(prog, v, measure).unwrap_or(u64::MAX);
            Ok(Some((observed, evaluate(index, interp, alpha)?)))
        }
        (Monotype::Product(a, b), Value::Con(_, vs)) if vs.len() == 2 => {
            let x = sizes_within(prog, &vs[0], a, interp, alpha, measure)?;
            let y = sizes_within(prog, &vs[1], b, interp, alpha, measure)?;
            Ok(match (x, y) {
                (Some((o1, p1)), Some((o2, p2))) => {
                    // report the tighter component first when one is violated
                    if o1 as u128 > p1 {
                        Some((o1, p1))
                    } else if o2 as u128 > p2 {
                        Some((o2, p2))
                    } else {
                        Some((o1 + o2, p1 + p2))
                    }
                }
                (a, None) => a,
                (None, b) => b,
            })
        }
        _ => Ok(None),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCase {
    pub input_sizes: Vec<u64>,
    pub observed: u64,
    pub predicted: u128,
    pub steps: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub cases: Vec<BoundCase>,
    pub violations: Vec<BoundCase>,
    /// Inputs on which evaluation got stuck or ran out of fuel.
    pub inconclusive: usize,
}

impl BoundReport {
    /// Largest `predicted - observed` per total input size.
    pub fn max_slack_by_size(&self) -> Vec<(u64, u128)> {
        let mut out: std::collections::BTreeMap<u64, u128> = Default::default();
        for c in &self.cases {
            let n: u64 = c.input_sizes.iter().sum();
            let slack = c.predicted.saturating_sub(c.observed as u128);
            let e = out.entry(n).or_insert(0);
            *e = (*e).max(slack);
        }
        out.into_iter().collect()
    }
}

/// Runs `entry` on each input tuple and compares the observed result size
/// with the bound read off its sized type `ty` (symbols interpreted by
/// `interp`), binding each argument's index variable to the argument's size.
pub fn check_bound(
    prog: &Program,
    ty: &Type,
    interp: &Interpretation,
    entry: &str,
    inputs: &[Vec<Value>],
    fuel: u64,
    measure: SizeMeasure,
) -> Result<BoundReport, IndexError> {
    let (doms, result) = ty.body.uncurry();
    let mut report = BoundReport::default();
    for args in inputs {
        let mut alpha = Assignment::new();
        let mut input_sizes = Vec::new();
        for (d, a) in doms.iter().zip(args) {
            let s = size(prog, a, measure).unwrap_or(0);
            input_sizes.push(s);
            bind_sizes(prog, &d.body, a, measure, &mut alpha);
        }
        let r = match call(prog, entry, args, fuel) {
            Ok(r) if r.status == Status::Finished => r,
            _ => {
                report.inconclusive += 1;
                continue;
            }
        };
        let v = r.value.expect("finished evaluation has a value");
        if let Some((observed, predicted)) = sizes_within(prog, &v, result, interp, &alpha, measure)? {
            let case = BoundCase { input_sizes, observed, predicted, steps: r.steps };
            if observed as u128 > predicted {
                report.violations.push(case.clone());
            }
            report.cases.push(case);
        }
    }
    Ok(report)
}

fn bind_sizes(prog: &Program, m: &Monotype, v: &Value, measure: SizeMeasure, alpha: &mut Assignment) {
    match (m, v) {
        (Monotype::Base { index, .. }, _) => {
            if let Some(i) = index.as_var() {
                alpha.set(i.clone(), size(prog, v, measure).unwrap_or(0));
            }
        }
        (Monotype::Product(a, b), Value::Con(_, vs)) if vs.len() == 2 => {
            bind_sizes(prog, a, &vs[0], measure, alpha);
            bind_sizes(prog, b, &vs[1], measure, alpha);
        }
        _ => {}
    }
}
