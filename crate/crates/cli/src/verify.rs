//! Runs the checkers on a scenario and on seeded perturbations of it.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qrf::bounds::{self, BoundReport, InputDigest, OpInnerProduct};
use qrf::frames::{Relativiser, RestrictionChannel};
use qrf::random;
use qrf::symmetry::random_invariant_effect;
use qrf::{Effect, Error, JointRepresentation, Operator, State};

use crate::error::{CliError, EXIT_FAILURE, EXIT_PASS};
use crate::output::{self, csv_real, Header};
use crate::scenario::Resolved;

pub const CHECKERS: &[&str] = &[
    "prop1",
    "prop2",
    "general_lower_bound",
    "dim_lemma",
    "mt_width_lemma",
    "sec4_theorem",
    "main_theorem",
    "corollary_norm",
    "corollary_sharp",
    "example_tight_bound",
    "cs_lemma",
    "cs_norm",
    "commutator_lemma",
];

pub const REPORTS_FILE: &str = "reports.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Checker names; all of [`CHECKERS`] when empty.
    pub checkers: Vec<String>,
    pub sweep: usize,
    pub inject_noninvariant: bool,
}

/// One report line. Values that are not finite, and the numbers of a
/// checker that raised an error, are written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub slack: Option<f64>,
    pub pass: bool,
    pub applicable: bool,
    pub digest: String,
    pub instance: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Option<f64>>,
}

impl Row {
    pub fn is_failure(&self) -> bool {
        self.applicable && !self.pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub checker: String,
    pub count: usize,
    pub applicable: usize,
    pub not_applicable: usize,
    pub failures: usize,
    pub min_slack: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub summary: Vec<SummaryRow>,
}

impl Outcome {
    pub fn failures(&self) -> usize {
        self.summary.iter().map(|s| s.failures).sum()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            EXIT_PASS
        } else {
            EXIT_FAILURE
        }
    }

    pub fn summary_csv(&self, header: &Header) -> String {
        let mut out = header.comment_block();
        out.push_str("checker,count,applicable,not_applicable,failures,min_slack\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.checker,
                s.count,
                s.applicable,
                s.not_applicable,
                s.failures,
                s.min_slack.map(csv_real).unwrap_or_default()
            ));
        }
        out
    }
}

struct Instance {
    index: usize,
    omega: State,
    a: Effect,
    e: Effect,
    p: Effect,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn mix(x: &Operator, y: &Operator, t: f64) -> Operator {
    &x.scale(1.0 - t) + &y.scale(t)
}

/// The spectral projection of `a` onto eigenvalues `≥ ½`.
fn upper_projection(a: &Effect) -> Effect {
    let (vals, vecs) = a.op().eigh();
    let bits: Vec<f64> = vals.iter().map(|&v| if v >= 0.5 { 1.0 } else { 0.0 }).collect();
    Effect::new(Operator::from_spectral(&bits, &vecs)).expect("0/1 spectrum")
}

fn build_instance(s: &Resolved, rel: &Relativiser, index: usize, inject: bool) -> Result<Instance, Error> {
    let joint = rel.joint();
    let stream = random::substream(s.seed, index as u64);
    let mut rng = random::rng(stream);
    let (omega, a, e) = if index == 0 {
        let e = rel.relativise_effect(&s.a)?;
        (s.omega.clone(), s.a.clone(), e)
    } else {
        let t_omega = rng.random_range(0.0..0.5);
        let t_a = rng.random_range(0.0..0.5);
        let t_e = rng.random_range(0.0..1.0);
        let omega = State::new(mix(s.omega.op(), random::state(s.omega.dim(), &mut rng).op(), t_omega))?;
        let a = Effect::new(mix(s.a.op(), random::effect(s.a.dim(), &mut rng).op(), t_a))?;
        let relativised = rel.relativise_effect(&a)?;
        let other = random_invariant_effect(&joint, random::substream(stream, 1));
        let e = Effect::new(mix(relativised.op(), other.op(), t_e))?;
        (omega, a, e)
    };
    let e = if inject {
        let noise = random::effect(joint.dim(), &mut rng);
        Effect::new(mix(e.op(), noise.op(), 0.5))?
    } else {
        e
    };
    let p = upper_projection(&a);
    Ok(Instance { index, omega, a, e, p })
}

struct Ctx<'a> {
    instance: &'a Instance,
    digest: String,
}

impl Ctx<'_> {
    fn row(&self, name: &str, eps: Option<f64>, levels: Option<[i64; 2]>, r: Result<BoundReport, Error>) -> Row {
        let base = Row {
            name: name.into(),
            lhs: None,
            rhs: None,
            slack: None,
            pass: false,
            applicable: true,
            digest: String::new(),
            instance: self.instance.index,
            eps,
            levels,
            error: None,
            details: BTreeMap::new(),
        };
        match r {
            Ok(rep) => Row {
                lhs: finite(rep.lhs),
                rhs: finite(rep.rhs),
                slack: finite(rep.slack),
                pass: rep.pass && rep.slack.is_finite(),
                applicable: rep.applicable,
                digest: rep.digest,
                details: rep.details.into_iter().map(|(k, v)| (k, finite(v))).collect(),
                ..base
            },
            Err(err) => {
                let mut d = InputDigest::new(name).bytes(self.digest.as_bytes());
                if let Some(e) = eps {
                    d = d.real(e);
                }
                if let Some(l) = levels {
                    d = d.ints(&l);
                }
                let missing = matches!(err, Error::MissingLevel(_));
                Row {
                    pass: missing,
                    applicable: !missing,
                    digest: d.finish(),
                    error: Some(err.to_string()),
                    ..base
                }
            }
        }
    }
}

fn run_instance(s: &Resolved, rel: &Relativiser, inst: &Instance, wanted: &[&str]) -> Vec<Row> {
    let joint: JointRepresentation = rel.joint();
    let ch = RestrictionChannel::new(inst.omega.clone(), s.sys.dim());
    let ctx = Ctx {
        instance: inst,
        digest: InputDigest::new("instance")
            .op(inst.omega.op())
            .op(inst.a.op())
            .op(inst.e.op())
            .finish(),
    };
    let on = |name: &str| wanted.contains(&name);
    let mut rows = Vec::new();

    for &eps in &s.eps_grid {
        if on("prop1") {
            rows.push(ctx.row("prop1", Some(eps), None, bounds::check_prop1(rel, &ch, &inst.a, eps)));
        }
        if on("prop2") {
            rows.push(ctx.row("prop2", Some(eps), None, bounds::check_prop2(rel, &ch, eps)));
        }
        if on("general_lower_bound") {
            let levels: Vec<i64> = s.sys.eigenspaces().into_iter().map(|(n, _)| n).collect();
            for (i, &m) in levels.iter().enumerate() {
                for &n in &levels[i + 1..] {
                    let r = bounds::check_general_lower_bound(rel, &ch, &inst.a, n, m, eps);
                    rows.push(ctx.row("general_lower_bound", Some(eps), Some([n, m]), r));
                }
            }
        }
        if on("dim_lemma") {
            rows.push(ctx.row("dim_lemma", Some(eps), None, bounds::check_dim_lemma(&s.povm, &inst.omega, eps)));
        }
        if on("mt_width_lemma") {
            let r = bounds::check_mt_width_lemma(&s.povm, &inst.omega, eps);
            rows.push(ctx.row("mt_width_lemma", Some(eps), None, r));
        }
    }
    if on("sec4_theorem") {
        rows.push(ctx.row("sec4_theorem", None, None, bounds::check_sec4_theorem(rel, &ch)));
    }
    if on("main_theorem") {
        let r = bounds::check_main_theorem(&joint, &ch, &inst.e, &inst.a);
        rows.push(ctx.row("main_theorem", None, None, r));
    }
    if on("corollary_norm") {
        let r = bounds::check_corollary_norm(&joint, &ch, &inst.e, &inst.a);
        rows.push(ctx.row("corollary_norm", None, None, r));
    }
    if on("corollary_sharp") {
        let r = bounds::check_corollary_sharp(&joint, &ch, &inst.e, &inst.p);
        rows.push(ctx.row("corollary_sharp", None, None, r));
    }
    if on("example_tight_bound") {
        let r = bounds::check_example_tight_bound(&joint, &ch, &inst.e);
        rows.push(ctx.row("example_tight_bound", None, None, r));
    }
    let form_checks = ["cs_lemma", "cs_norm", "commutator_lemma"];
    if form_checks.iter().any(|c| on(c)) {
        let n = joint.number_operator();
        match OpInnerProduct::from_restriction(&ch) {
            Ok(ip) => {
                if on("cs_lemma") {
                    rows.push(ctx.row("cs_lemma", None, None, bounds::check_cs_lemma(&ip, inst.e.op(), &n)));
                }
                if on("cs_norm") {
                    rows.push(ctx.row("cs_norm", None, None, bounds::check_cs_norm(&ip, inst.e.op(), &n)));
                }
                if on("commutator_lemma") {
                    let r = bounds::check_commutator_lemma(&ip, inst.e.op(), &n);
                    rows.push(ctx.row("commutator_lemma", None, None, r));
                }
            }
            Err(err) => {
                for c in form_checks.iter().filter(|c| on(c)) {
                    rows.push(ctx.row(c, None, None, Err(Error::InvalidParameter(err.to_string()))));
                }
            }
        }
    }
    rows
}

fn summarise(rows: &[Row], wanted: &[&str]) -> Vec<SummaryRow> {
    wanted
        .iter()
        .map(|&name| {
            let mine: Vec<&Row> = rows.iter().filter(|r| r.name == name).collect();
            let applicable: Vec<&&Row> = mine.iter().filter(|r| r.applicable).collect();
            SummaryRow {
                checker: name.into(),
                count: mine.len(),
                applicable: applicable.len(),
                not_applicable: mine.len() - applicable.len(),
                failures: mine.iter().filter(|r| r.is_failure()).count(),
                min_slack: applicable
                    .iter()
                    .filter_map(|r| r.slack)
                    .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x)))),
            }
        })
        .collect()
}

pub fn resolve_checkers(names: &[String]) -> Result<Vec<&'static str>, CliError> {
    if names.is_empty() {
        return Ok(CHECKERS.to_vec());
    }
    names
        .iter()
        .map(|n| {
            CHECKERS
                .iter()
                .copied()
                .find(|c| c == n)
                .ok_or_else(|| CliError::Usage(format!("unknown checker {n:?}; known: {}", CHECKERS.join(", "))))
        })
        .collect()
}

/// Runs the selected checkers on the scenario (instance 0) and `sweep`
/// perturbed instances. Rows come back sorted by digest.
pub fn verify(s: &Resolved, opts: &VerifyOptions) -> Result<Outcome, CliError> {
    let wanted = resolve_checkers(&opts.checkers)?;
    let rel = Relativiser::new(s.sys.clone(), s.povm.clone());
    let mut rows: Vec<Row> = (0..=opts.sweep)
        .into_par_iter()
        .map(|i| -> Result<Vec<Row>, CliError> {
            let inst = build_instance(s, &rel, i, opts.inject_noninvariant)?;
            Ok(run_instance(s, &rel, &inst, &wanted))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        a.digest
            .cmp(&b.digest)
            .then_with(|| a.name.cmp(&b.name))
            .then_with(|| a.instance.cmp(&b.instance))
    });
    let summary = summarise(&rows, &wanted);
    Ok(Outcome { rows, summary })
}

/// Writes `reports.jsonl` and `summary.csv` into `dir`.
pub fn write(dir: &Path, header: &Header, outcome: &Outcome) -> Result<(), CliError> {
    let dir = output::prepare_dir(dir)?;
    output::write_jsonl(&dir.join(REPORTS_FILE), header, &outcome.rows)?;
    output::write_text(&dir.join(SUMMARY_FILE), &outcome.summary_csv(header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn resolved(name: &str) -> Resolved {
        presets::load(name).unwrap().resolve().unwrap()
    }

    #[test]
    fn base_scenario_passes_every_checker() {
        let out = verify(&resolved("paper-qubit-uniform-d4"), &VerifyOptions::default()).unwrap();
        assert_eq!(out.failures(), 0, "{:#?}", out.rows.iter().filter(|r| r.is_failure()).collect::<Vec<_>>());
        assert_eq!(out.summary.len(), CHECKERS.len());
        assert!(out.rows.windows(2).all(|w| w[0].digest <= w[1].digest));
    }

    #[test]
    fn noninvariant_effect_is_reported_as_failure() {
        let opts = VerifyOptions {
            checkers: vec!["main_theorem".into()],
            inject_noninvariant: true,
            ..VerifyOptions::default()
        };
        let out = verify(&resolved("paper-qubit-uniform-d2"), &opts).unwrap();
        assert_eq!(out.exit_code(), EXIT_FAILURE);
        let row = &out.rows[0];
        assert!(row.error.as_deref().unwrap().contains("not invariant"));
        assert!(row.lhs.is_none());
    }

    #[test]
    fn sweep_is_deterministic() {
        let opts = VerifyOptions {
            sweep: 4,
            ..VerifyOptions::default()
        };
        let s = resolved("paper-qubit-uniform-d2");
        let a = verify(&s, &opts).unwrap();
        let b = verify(&s, &opts).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.failures(), 0);
    }

    #[test]
    fn unknown_checker_is_usage_error() {
        assert!(matches!(resolve_checkers(&["prop9".into()]), Err(CliError::Usage(_))));
    }
}
