//! Call-by-value reference interpreter counting equation firings.
//!
//! Evaluation runs on an explicit stack, so deep recursion in the object
//! program cannot overflow the host stack.

mod gen;
mod size;

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

pub use gen::{entry_points, generate_inputs, InputGen};
pub use size::{check_bound, size, sizes_within, BoundCase, BoundReport, SizeMeasure};

use crate::syntax::ast::{Pattern, PatternKind, Program, Term, TermKind, CONS, NIL, PAIR, SUCC, ZERO};
use crate::syntax::pretty;

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Arguments are shared, so copying a value is cheap.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    /// A constructor applied to (possibly fewer than all its) arguments.
    Con(String, Rc<Vec<Value>>),
    /// A function applied to fewer arguments than its arity.
    Fun(String, Rc<Vec<Value>>),
}

impl Drop for Value {
    // iterative
    fn drop(&mut self) {
        let mut todo = vec![std::mem::take(self.args_mut())];
        while let Some(rc) = todo.pop() {
            if let Ok(mut vs) = Rc::try_unwrap(rc) {
                todo.extend(vs.iter_mut().map(|v| std::mem::take(v.args_mut())));
            }
        }
    }
}

impl Value {
    pub fn con(c: impl Into<String>, args: Vec<Value>) -> Value {
        Value::Con(c.into(), Rc::new(args))
    }

    pub fn nat(n: u64) -> Value {
        (0..n).fold(Value::con(ZERO, vec![]), |acc, _| Value::con(SUCC, vec![acc]))
    }

    pub fn list(items: Vec<Value>) -> Value {
        items.into_iter().rev().fold(Value::con(NIL, vec![]), |acc, x| Value::con(CONS, vec![x, acc]))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::con(PAIR, vec![a, b])
    }

    pub fn args(&self) -> &[Value] {
        match self {
            Value::Con(_, a) | Value::Fun(_, a) => a,
        }
    }

    fn args_mut(&mut self) -> &mut Rc<Vec<Value>> {
        match self {
            Value::Con(_, a) | Value::Fun(_, a) => a,
        }
    }

    pub fn to_term(&self) -> Term {
        let head = match self {
            Value::Con(c, _) => Term::con(c.clone()),
            Value::Fun(f, _) => Term::fun(f.clone()),
        };
        Term::apps(head, self.args().iter().map(Value::to_term))
    }

    /// Reads a closed term built from constructors only.
    pub fn from_term(t: &Term) -> Option<Value> {
        let (head, args) = t.spine();
        let args = args.into_iter().map(Value::from_term).collect::<Option<Vec<_>>>()?;
        match &head.kind {
            TermKind::Con(c) => Some(Value::Con(c.clone(), Rc::new(args))),
            TermKind::Fun(f) => Some(Value::Fun(f.clone(), Rc::new(args))),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::term(&self.to_term()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Finished,
    FuelExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalResult {
    /// `None` when fuel ran out.
    pub value: Option<Value>,
    /// Equation firings, not counting cost-free functions.
    pub steps: u64,
    pub status: Status,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no equation of `{fun}` matches arguments {args}")]
    StuckTerm { fun: String, args: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("cannot evaluate a lambda; lift the program first")]
    Lambda,
    #[error("`{0}` applied to too many arguments")]
    OverApplied(String),
}

type Env = Rc<Vec<(String, Value)>>;

fn lookup(env: &Env, x: &str) -> Result<Value, EvalError> {
    env.iter().rev().find(|(y, _)| y == x).map(|(_, v)| v.clone()).ok_or_else(|| EvalError::Unbound(x.to_string()))
}

fn matches(p: &Pattern, v: &Value, out: &mut Vec<(String, Value)>) -> bool {
    match (&p.kind, v) {
        (PatternKind::Var(x), _) => {
            out.push((x.clone(), v.clone()));
            true
        }
        (PatternKind::Con(c, ps), Value::Con(d, vs)) => {
            c == d && ps.len() == vs.len() && ps.iter().zip(vs.iter()).all(|(p, v)| matches(p, v, out))
        }
        _ => false,
    }
}

enum Frame<'p> {
    /// Evaluating the spine `terms`; `done` holds the values so far.
    Spine { env: Env, terms: Vec<&'p Term>, done: Vec<Value> },
    /// Apply the returned value to these arguments, in order.
    Apply { args: Vec<Value> },
}

enum Control<'p> {
    Eval(&'p Term, Env),
    Return(Value),
}

pub struct Machine<'p> {
    prog: &'p Program,
    arities: BTreeMap<&'p str, usize>,
    /// Bound on all equation firings.
    pub fuel: u64,
    pub steps: u64,
    fired: u64,
}

impl<'p> Machine<'p> {
    pub fn new(prog: &'p Program, fuel: u64) -> Self {
        let arities = prog.functions.values().map(|f| (f.name.as_str(), f.arity)).collect();
        Machine { prog, arities, fuel, steps: 0, fired: 0 }
    }

    /// Fires the matching equation of `f`, or reports that fuel ran out.
    fn fire(&mut self, f: &str, args: &[Value]) -> Result<Option<Control<'p>>, EvalError> {
        if self.fired >= self.fuel {
            return Ok(None);
        }
        let def = self.prog.function(f).ok_or_else(|| EvalError::UnknownFunction(f.to_string()))?;
        for eq in &def.equations {
            let mut env = Vec::new();
            if eq.lhs.iter().zip(args).all(|(p, v)| matches(p, v, &mut env)) {
                self.fired += 1;
                if !def.is_cost_free() {
                    self.steps += 1;
                }
                return Ok(Some(Control::Eval(&eq.rhs, Rc::new(env))));
            }
        }
        Err(EvalError::StuckTerm {
            fun: f.to_string(),
            args: args.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
        })
    }

    /// Applies `head` to `args` one at a time; a saturated call fires and
    /// the rest is applied to its result.
    fn apply(&mut self, mut head: Value, mut args: Vec<Value>, stack: &mut Vec<Frame<'p>>) -> Result<Option<Control<'p>>, EvalError> {
        args.reverse();
        while let Some(a) = args.pop() {
            match &mut head {
                Value::Con(_, vs) => Rc::make_mut(vs).push(a),
                Value::Fun(f, vs) => {
                    Rc::make_mut(vs).push(a);
                    let arity = self.arities.get(f.as_str()).copied().unwrap_or(0);
                    if vs.len() > arity {
                        return Err(EvalError::OverApplied(f.clone()));
                    }
                    if vs.len() == arity {
                        let (f, vs) = (f.clone(), std::mem::take(vs));
                        if !args.is_empty() {
                            args.reverse();
                            stack.push(Frame::Apply { args });
                        }
                        return self.fire(&f, &vs);
                    }
                }
            }
        }
        Ok(Some(Control::Return(head)))
    }

    pub fn eval(&mut self, t: &'p Term, env: Env) -> Result<EvalResult, EvalError> {
        self.run(Control::Eval(t, env), Vec::new())
    }

    /// Applies function `f` to argument values.
    pub fn call(&mut self, f: &str, args: Vec<Value>) -> Result<EvalResult, EvalError> {
        let mut stack = Vec::new();
        let head = Value::Fun(f.to_string(), Rc::default());
        let start = if args.is_empty() && self.arities.get(f) == Some(&0) {
            self.fire(f, &[])?
        } else {
            self.apply(head, args, &mut stack)?
        };
        match start {
            Some(c) => self.run(c, stack),
            None => Ok(EvalResult { value: None, steps: self.steps, status: Status::FuelExhausted }),
        }
    }

    fn run(&mut self, mut control: Control<'p>, mut stack: Vec<Frame<'p>>) -> Result<EvalResult, EvalError> {
        loop {
            let next = match control {
                Control::Eval(t, env) => match &t.kind {
                    TermKind::Var(x) => Some(Control::Return(lookup(&env, x)?)),
                    TermKind::Con(c) => Some(Control::Return(Value::con(c.clone(), vec![]))),
                    TermKind::Fun(f) => {
                        if self.arities.get(f.as_str()) == Some(&0) {
                            self.fire(f, &[])?
                        } else {
                            Some(Control::Return(Value::Fun(f.clone(), Rc::default())))
                        }
                    }
                    TermKind::Lam(..) => return Err(EvalError::Lambda),
                    TermKind::App(..) => {
                        let (head, args) = t.spine();
                        let mut terms = vec![head];
                        terms.extend(args);
                        terms.reverse();
                        let first = terms.pop().expect("spine has a head");
                        stack.push(Frame::Spine { env: env.clone(), terms, done: vec![] });
                        Some(Control::Eval(first, env))
                    }
                },
                Control::Return(v) => match stack.pop() {
                    None => return Ok(EvalResult { value: Some(v), steps: self.steps, status: Status::Finished }),
                    Some(Frame::Spine { env, mut terms, mut done }) => {
                        done.push(v);
                        match terms.pop() {
                            Some(next) => {
                                stack.push(Frame::Spine { env: env.clone(), terms, done });
                                Some(Control::Eval(next, env))
                            }
                            None => {
                                let head = done.remove(0);
                                self.apply(head, done, &mut stack)?
                            }
                        }
                    }
                    Some(Frame::Apply { args }) => self.apply(v, args, &mut stack)?,
                },
            };
            match next {
                Some(c) => control = c,
                None => return Ok(EvalResult { value: None, steps: self.steps, status: Status::FuelExhausted }),
            }
        }
    }
}

/// Evaluates a closed term.
pub fn reduce_cbv(prog: &Program, t: &Term, fuel: u64) -> Result<EvalResult, EvalError> {
    Machine::new(prog, fuel).eval(t, Rc::new(Vec::new()))
}

/// Calls `f` on argument values.
pub fn call(prog: &Program, f: &str, args: &[Value], fuel: u64) -> Result<EvalResult, EvalError> {
    Machine::new(prog, fuel).call(f, args.to_vec())
}
