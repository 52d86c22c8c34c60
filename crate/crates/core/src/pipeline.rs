//! The complete analysis: static checks, sized types for sizes, the same on
//! the ticked program for running time, and empirical validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::constraint::ConstraintSet;
use crate::index::{IndexError, IndexSubst, IndexTerm, Interpretation, Verdict};
use crate::interp::{call, check_bound, entry_points, generate_inputs, BoundCase, InputGen, SizeMeasure, Status, Value};
use crate::sized::Type;
use crate::solver::{solve_with, Certificate, GroupReport, SolveError, SolverConfig};
use crate::syntax::ast::Program;
use crate::syntax::callgraph::CallGraph;
use crate::syntax::simple::{self, TypeError};
use crate::syntax::{lift::lambda_lift, parse_program, wellformed, SyntaxError};
use crate::ticking::{clock_bound, tick_program, ticked_name, TickError, TickedProgram};
use crate::typecheck::{check_program, generate_templates, normalize_index, specialize, user_declarations, CheckError, Declarations, Mode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Tick(#[from] TickError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{0}` has no bound to validate")]
    Unbounded(String),
}

/// Parses, checks, lifts lambdas and infers simple types.
pub fn load(src: &str) -> Result<Program, PipelineError> {
    let p = parse_program(src)?;
    wellformed::check_program(&p)?;
    let p = lambda_lift(&p);
    wellformed::check_lifted(&p)?;
    Ok(simple::typecheck(&p)?)
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Skip the running time analysis.
    pub size_only: bool,
    /// Check user annotations instead of ignoring them.
    pub check: bool,
    /// Retry with per-call-site copies when some function has no bound.
    pub specialize: bool,
    pub solver: SolverConfig,
    /// Interpretation of symbols in user annotations.
    pub given: Interpretation,
}

/// Sized types for one program.
#[derive(Clone, Debug)]
pub struct SizeResult {
    pub decls: Declarations,
    pub constraints: ConstraintSet,
    /// Functions without a sized type, with the reason.
    pub failed: BTreeMap<String, String>,
    pub interpretation: Interpretation,
    pub groups: Vec<GroupReport>,
    pub certificate: Certificate,
}

impl SizeResult {
    pub fn declaration(&self, f: &str) -> Option<&Type> {
        if self.failed.contains_key(f) {
            return None;
        }
        self.decls.get(f)
    }

    /// Declaration of `f` with symbols interpreted and indices normalized.
    pub fn sized_type(&self, f: &str) -> Option<Type> {
        self.declaration(f).map(|t| resolve(t, &self.interpretation))
    }
}

fn resolve(t: &Type, interp: &Interpretation) -> Type {
    let body = t.body.map_index(&|ix| normalize_index(&ix.expand_symbols(&|name| interp.get(name).map(|s| s.as_term()))));
    let occurring = Type::mono(body.clone()).fv();
    Type { bound: t.bound.iter().filter(|v| occurring.contains(*v)).cloned().collect(), body }
}

fn propagate(prog: &Program, failed: &mut BTreeMap<String, String>) {
    let graph = CallGraph::new(prog);
    loop {
        let mut more = Vec::new();
        for f in prog.functions.keys().filter(|f| !failed.contains_key(*f)) {
            if let Some(g) = graph.callees(f).find(|g| failed.contains_key(*g)) {
                more.push((f.clone(), format!("calls `{g}`, which has no sized type")));
            }
        }
        if more.is_empty() {
            return;
        }
        failed.extend(more);
    }
}

/// Functions responsible for a solver failure.
fn culprits(err: &SolveError, cs: &ConstraintSet, interp: &Interpretation) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let symbols: &[String] = match err {
        SolveError::Unsat { symbols, .. } | SolveError::Timeout { symbols } => symbols,
        _ => &[],
    };
    for s in symbols {
        if let Some(f) = cs.owners.get(s) {
            out.insert(f.clone());
        }
        for c in cs.iter().filter(|c| c.rhs.symbols().contains_key(s)) {
            out.insert(c.origin.function.clone());
        }
    }
    if out.is_empty() {
        for c in cs.iter() {
            let named = matches!(err, SolveError::Unsat { constraint: Some(k), .. } | SolveError::Unverified { constraint: k } if *k == c.to_string());
            let invalid = c.symbols().keys().all(|s| interp.contains(s))
                && crate::index::leq_semantic(interp, &c.lhs, &c.rhs).map_or(true, |v| v == Verdict::Unknown);
            if named || invalid {
                out.insert(c.origin.function.clone());
            }
        }
    }
    out
}

/// Infers sized types for all functions of `prog`, using the user's
/// annotations when `user` is set. Functions whose constraints cannot be
/// solved are reported as failed and the rest is solved without them.
pub fn size_types(prog: &Program, user: bool, cfg: &SolverConfig, given: &Interpretation) -> Result<SizeResult, PipelineError> {
    let user = if user { user_declarations(prog) } else { BTreeMap::new() };
    let decls = generate_templates(prog, &user)?;
    let check = check_program(prog, &decls, Mode::Generate);
    let mut failed: BTreeMap<String, String> = decls.failed.iter().map(|(f, e)| (f.clone(), e.to_string())).collect();
    for (f, e) in &check.errors {
        failed.entry(f.clone()).or_insert_with(|| e.to_string());
    }
    loop {
        propagate(prog, &mut failed);
        let mut cs = ConstraintSet::new();
        cs.owners = check.constraints.owners.clone();
        for c in check.constraints.iter().filter(|c| !failed.contains_key(&c.origin.function)) {
            cs.push(c.clone());
        }
        match solve_with(&cs, given, cfg) {
            Ok(s) => {
                return Ok(SizeResult {
                    decls,
                    constraints: cs,
                    failed,
                    interpretation: s.interpretation,
                    groups: s.groups,
                    certificate: s.certificate,
                })
            }
            Err(SolveError::Index(e)) => return Err(e.into()),
            Err(e) => {
                let blame = culprits(&e, &cs, given);
                let blame: Vec<String> = if blame.is_empty() {
                    cs.iter().map(|c| c.origin.function.clone()).collect()
                } else {
                    blame.into_iter().collect()
                };
                for f in blame {
                    failed.insert(f, e.to_string());
                }
            }
        }
    }
}

/// Re-checks every equation in semantic mode under the solution.
fn confirm(prog: &Program, r: &mut SizeResult) {
    let check = check_program(prog, &r.decls, Mode::Semantic(&r.interpretation));
    for (f, e) in check.errors {
        r.failed.entry(f).or_insert_with(|| e.to_string());
    }
    propagate(prog, &mut r.failed);
}

/// Running times: sized types of the ticked program.
#[derive(Clone, Debug)]
pub struct TimeResult {
    pub ticked: TickedProgram,
    pub sizes: SizeResult,
}

impl TimeResult {
    /// Running time of `f` as an index term over the index variables of the
    /// declaration of its ticked version.
    pub fn raw_bound(&self, f: &str) -> Option<IndexTerm> {
        let name = ticked_name(f);
        let ty = self.sizes.declaration(&name)?;
        clock_bound(&name, ty, &self.sizes.interpretation).ok()
    }

    /// Running time of `f` with variables named as in `sized_type(f)`.
    pub fn bound(&self, f: &str) -> Option<IndexTerm> {
        let raw = self.raw_bound(f)?;
        let ty = self.sizes.declaration(&ticked_name(f))?;
        let pretty = ty.pretty_names();
        let theta: IndexSubst = ty.bound.iter().cloned().zip(pretty.bound.iter().cloned().map(IndexTerm::Var)).collect();
        Some(raw.substitute(&theta))
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub program: Program,
    pub sizes: SizeResult,
    pub time: Option<TimeResult>,
    /// The program was specialized per call site.
    pub specialized: bool,
}

fn analyze_once(prog: &Program, opts: &Options) -> Result<Analysis, PipelineError> {
    let mut sizes = size_types(prog, opts.check, &opts.solver, &opts.given)?;
    if opts.check {
        confirm(prog, &mut sizes);
    }
    let time = if opts.size_only {
        None
    } else {
        let ticked = tick_program(prog)?;
        let sizes = size_types(&ticked.program, false, &opts.solver, &Interpretation::new())?;
        Some(TimeResult { ticked, sizes })
    };
    Ok(Analysis { program: prog.clone(), sizes, time, specialized: false })
}

pub fn analyze(prog: &Program, opts: &Options) -> Result<Analysis, PipelineError> {
    let a = analyze_once(prog, opts)?;
    if opts.specialize && !a.report(&[]).all_bounded() {
        let s = simple::typecheck(&specialize(prog))?;
        let mut b = analyze_once(&s, opts)?;
        b.specialized = true;
        if b.report(&[]).functions.iter().filter(|f| f.bounded()).count()
            > a.report(&[]).functions.iter().filter(|f| f.bounded()).count()
        {
            return Ok(b);
        }
    }
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionReport {
    pub name: String,
    pub entry: bool,
    pub sized_type: Option<String>,
    /// Why there is no sized type.
    pub error: Option<String>,
    /// Running time in the sizes of the arguments; absent with `size_only`.
    pub runtime: Option<String>,
    pub runtime_error: Option<String>,
    /// Takes functions as arguments; its running time assumes their costs
    /// as given in its ticked sized type.
    pub higher_order: bool,
}

impl FunctionReport {
    pub fn bounded(&self) -> bool {
        self.sized_type.is_some() && self.runtime_error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub functions: Vec<FunctionReport>,
    /// Call-graph components, callees first.
    pub scc_order: Vec<Vec<String>>,
    pub interpretation: Vec<String>,
    pub groups: Vec<GroupReport>,
    pub certificate: Certificate,
    pub runtime_interpretation: Vec<String>,
    pub runtime_certificate: Option<Certificate>,
    pub specialized: bool,
}

impl AnalysisReport {
    /// Every entry point received the bounds asked for.
    pub fn all_bounded(&self) -> bool {
        self.functions.iter().filter(|f| f.entry).all(FunctionReport::bounded)
    }

    pub fn text(&self, certify: bool) -> String {
        let mut out = String::new();
        for f in &self.functions {
            match (&f.sized_type, &f.error) {
                (Some(t), _) => writeln!(out, "{} : {}", f.name, t).unwrap(),
                (None, e) => writeln!(out, "{} : no sized type ({})", f.name, e.as_deref().unwrap_or("unknown")).unwrap(),
            }
            if let Some(r) = &f.runtime {
                let note = if f.higher_order { " (for arguments of the inferred costs)" } else { "" };
                writeln!(out, "  time: {r}{note}").unwrap();
            } else if let Some(e) = &f.runtime_error {
                writeln!(out, "  time: none ({e})").unwrap();
            }
        }
        if certify {
            writeln!(out, "\ninterpretation:").unwrap();
            for l in &self.interpretation {
                writeln!(out, "  {l}").unwrap();
            }
            certificate_text(&mut out, &self.certificate);
            if let Some(c) = &self.runtime_certificate {
                writeln!(out, "\nruntime interpretation:").unwrap();
                for l in &self.runtime_interpretation {
                    writeln!(out, "  {l}").unwrap();
                }
                certificate_text(&mut out, c);
            }
        }
        out
    }
}

pub fn certificate_text(out: &mut String, c: &Certificate) {
    writeln!(out, "certificate ({} samples per constraint):", c.samples).unwrap();
    for w in &c.witnesses {
        writeln!(out, "  {}  [rhs - lhs = {}]", w.constraint, w.difference).unwrap();
    }
}

pub fn interpretation_lines(i: &Interpretation) -> Vec<String> {
    i.iter().map(|(name, s)| {
        let args: Vec<String> = (1..=s.arity).map(|k| format!("x{k}")).collect();
        format!("{name}({}) = {s}", args.join(","))
    }).collect()
}

impl Analysis {
    /// The report; `entries` restricts the functions shown (all when empty).
    pub fn report(&self, entries: &[String]) -> AnalysisReport {
        let mut entry_set: BTreeSet<String> = entry_points(&self.program).into_iter().collect();
        if !entries.is_empty() {
            entry_set = entries.iter().cloned().collect();
        }
        let mut functions = Vec::new();
        for f in self.program.functions.values() {
            if !entries.is_empty() && !entry_set.contains(&f.name) {
                continue;
            }
            let sized_type = self.sizes.sized_type(&f.name).map(|t| t.pretty_names().to_string());
            let error = self.sizes.failed.get(&f.name).cloned();
            let (runtime, runtime_error) = match &self.time {
                None => (None, None),
                Some(_) if f.is_cost_free() => (None, None),
                Some(t) => match t.bound(&f.name) {
                    Some(b) => (Some(b.to_string()), None),
                    None => {
                        let e = t.sizes.failed.get(&ticked_name(&f.name)).cloned();
                        (None, Some(e.unwrap_or_else(|| "no clock bound".into())))
                    }
                },
            };
            let higher_order = f.ty.as_ref().and_then(|t| t.uncurry(f.arity)).is_some_and(|(args, _)| args.iter().any(|a| !a.is_first_order_data()));
            functions.push(FunctionReport {
                name: f.name.clone(),
                entry: entry_set.contains(&f.name),
                sized_type,
                error,
                runtime,
                runtime_error,
                higher_order,
            });
        }
        AnalysisReport {
            functions,
            scc_order: CallGraph::new(&self.program).sccs(),
            interpretation: interpretation_lines(&self.sizes.interpretation),
            groups: self.sizes.groups.clone(),
            certificate: self.sizes.certificate.clone(),
            runtime_interpretation: self.time.as_ref().map(|t| interpretation_lines(&t.sizes.interpretation)).unwrap_or_default(),
            runtime_certificate: self.time.as_ref().map(|t| t.sizes.certificate.clone()),
            specialized: self.specialized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClockMismatch {
    pub args: Vec<String>,
    pub steps: u64,
    pub clock: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub entry: String,
    pub inputs: usize,
    pub size_violations: Vec<BoundCase>,
    /// Largest `predicted - observed` result size per total input size.
    pub max_slack: Vec<(u64, u128)>,
    pub runtime_checked: usize,
    pub runtime_violations: Vec<BoundCase>,
    pub clock_checked: usize,
    pub clock_mismatches: Vec<ClockMismatch>,
    /// Inputs on which evaluation ran out of fuel or got stuck.
    pub inconclusive: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.size_violations.is_empty() && self.runtime_violations.is_empty() && self.clock_mismatches.is_empty()
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}: {} inputs", self.entry, self.inputs).unwrap();
        writeln!(out, "  size violations: {}", self.size_violations.len()).unwrap();
        for c in &self.size_violations {
            writeln!(out, "    sizes {:?}: observed {} > predicted {}", c.input_sizes, c.observed, c.predicted).unwrap();
        }
        let slack: Vec<String> = self.max_slack.iter().map(|(n, s)| format!("{n}:{s}")).collect();
        writeln!(out, "  max slack by input size: {}", slack.join(" ")).unwrap();
        writeln!(out, "  runtime violations: {} of {}", self.runtime_violations.len(), self.runtime_checked).unwrap();
        writeln!(out, "  clock mismatches: {} of {}", self.clock_mismatches.len(), self.clock_checked).unwrap();
        writeln!(out, "  inconclusive: {}", self.inconclusive).unwrap();
        out
    }
}

/// Input tuples for `entry` within the configured budget.
pub fn inputs_for(prog: &Program, entry: &str, gen: &InputGen) -> Result<Vec<Vec<Value>>, PipelineError> {
    let f = prog.function(entry).ok_or_else(|| PipelineError::UnknownFunction(entry.to_string()))?;
    let (doms, _) = f.ty().uncurry(f.arity).ok_or_else(|| PipelineError::UnknownFunction(entry.to_string()))?;
    let doms: Vec<_> = doms.into_iter().cloned().collect();
    Ok(generate_inputs(prog, &doms, gen))
}

/// Runs `entry` on generated inputs and compares with the analysis: result
/// sizes against the sized type, steps against the running time bound, and
/// the clock of the ticked program against the steps.
pub fn validate(a: &Analysis, entry: &str, gen: &InputGen, fuel: u64) -> Result<ValidationReport, PipelineError> {
    let prog = &a.program;
    let inputs = if gen.budget == 0 && prog.function(entry).is_some() { Vec::new() } else { inputs_for(prog, entry, gen)? };
    let ty = a.sizes.declaration(entry).ok_or_else(|| PipelineError::Unbounded(entry.to_string()))?;
    let sizes = check_bound(prog, ty, &a.sizes.interpretation, entry, &inputs, fuel, gen.measure)?;
    let mut report = ValidationReport {
        entry: entry.to_string(),
        inputs: inputs.len(),
        size_violations: sizes.violations.clone(),
        max_slack: sizes.max_slack_by_size(),
        runtime_checked: 0,
        runtime_violations: Vec::new(),
        clock_checked: 0,
        clock_mismatches: Vec::new(),
        inconclusive: sizes.inconclusive,
    };
    let Some(time) = &a.time else { return Ok(report) };
    let name = ticked_name(entry);
    if let Some(tty) = time.sizes.declaration(&name) {
        let ticked_inputs: Vec<Vec<Value>> = inputs.iter().map(|args| args.iter().cloned().chain([Value::nat(0)]).collect()).collect();
        let r = check_bound(&time.ticked.program, tty, &time.sizes.interpretation, &name, &ticked_inputs, fuel, SizeMeasure::Natural)?;
        report.runtime_checked = r.cases.len();
        report.runtime_violations = r.violations;
    }
    for args in &inputs {
        let Ok(orig) = call(prog, entry, args, fuel) else { continue };
        if orig.status != Status::Finished {
            continue;
        }
        report.clock_checked += 1;
        let ticked = time.ticked.run(entry, args, fuel).ok().and_then(|t| t.value);
        let ok = matches!(&ticked, Some((v, c)) if Some(v) == orig.value.as_ref() && *c == orig.steps);
        if !ok {
            report.clock_mismatches.push(ClockMismatch {
                args: args.iter().map(|v| v.to_string()).collect(),
                steps: orig.steps,
                clock: ticked.map(|t| t.1),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(name: &str) -> String {
        std::fs::read_to_string(format!("{}/corpus/{name}.fp", env!("CARGO_MANIFEST_DIR"))).unwrap()
    }

    fn find<'a>(r: &'a AnalysisReport, f: &str) -> &'a FunctionReport {
        r.functions.iter().find(|x| x.name == f).unwrap()
    }

    #[test]
    fn append_size_and_time() {
        let p = load(&corpus("append")).unwrap();
        let r = analyze(&p, &Options::default()).unwrap().report(&[]);
        let f = find(&r, "append");
        assert_eq!(f.sized_type.as_deref(), Some("forall i j. L i a -> L j a -> L (i + j) a"));
        assert_eq!(f.runtime.as_deref(), Some("i + 1"));
        assert!(r.all_bounded());
    }

    #[test]
    fn reverse_report() {
        let p = load(&corpus("reverse")).unwrap();
        let r = analyze(&p, &Options::default()).unwrap().report(&[]);
        assert_eq!(find(&r, "rev").sized_type.as_deref(), Some("forall i j. L i a -> L j a -> L (i + j) a"));
        assert_eq!(find(&r, "reverse").sized_type.as_deref(), Some("forall i. L i a -> L i a"));
        assert_eq!(find(&r, "reverse").runtime.as_deref(), Some("i + 2"));
    }

    #[test]
    fn failures_stay_local() {
        let p = load(&corpus("sum")).unwrap();
        let r = analyze(&p, &Options { size_only: true, ..Default::default() }).unwrap().report(&[]);
        assert!(find(&r, "add").sized_type.is_some());
        assert!(find(&r, "sum").sized_type.is_none());
        assert!(!r.all_bounded());
    }

    #[test]
    fn validate_append() {
        let p = load(&corpus("append")).unwrap();
        let a = analyze(&p, &Options::default()).unwrap();
        let gen = InputGen { budget: 6, ..Default::default() };
        let v = validate(&a, "append", &gen, 100_000).unwrap();
        assert!(v.passed(), "{}", v.text());
        assert_eq!(v.inputs, 49);
        assert!(v.max_slack.iter().all(|(_, s)| *s == 0));
        assert_eq!(v.clock_checked, 49);
    }

    #[test]
    fn zero_budget_has_no_inputs() {
        let p = load(&corpus("append")).unwrap();
        let a = analyze(&p, &Options::default()).unwrap();
        let v = validate(&a, "append", &InputGen { budget: 0, ..Default::default() }, 1000).unwrap();
        assert_eq!((v.inputs, v.passed()), (0, true));
    }
}
