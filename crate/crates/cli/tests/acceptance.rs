//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::Rng;

use qrf::bounds::{
    check_commutator_lemma, check_corollary_norm, check_corollary_sharp, check_cs_lemma, check_cs_norm,
    check_dim_lemma, check_main_theorem, check_mt_width_lemma, check_prop1, check_prop2, check_sec4_theorem,
    example_distance_lower_bound, plus_effect, BoundReport, OpInnerProduct,
};
use qrf::frames::{Relativiser, RestrictionChannel};
use qrf::phasepovm::CovariantPhasePovm;
use qrf::qla::{operator_distance, tensor};
use qrf::random;
use qrf::search::{minimize, tradeoff_curve, ReferenceFamily, SearchOptions, SearchProblem};
use qrf::symmetry::{conjugate, random_invariant_effect};
use qrf::{Effect, JointRepresentation, Operator, State, U1Representation, C64};
use qrf_cli::presets;

type Outcome = Result<String, String>;

fn rep(d: usize) -> U1Representation {
    U1Representation::contiguous(d).unwrap()
}

fn uniform(d: usize) -> State {
    ReferenceFamily::UniformSuperposition.state(d).unwrap()
}

fn frame(sys: U1Representation, reference: U1Representation, omega: State) -> (Relativiser, RestrictionChannel) {
    let ds = sys.dim();
    (
        Relativiser::new(sys, CovariantPhasePovm::canonical(reference)),
        RestrictionChannel::new(omega, ds),
    )
}

fn random_rep(dim: usize, rng: &mut impl Rng) -> U1Representation {
    if rng.random_bool(0.7) {
        return rep(dim);
    }
    let mut s: Vec<i64> = (0..dim).map(|_| rng.random_range(-3..6)).collect();
    s.sort();
    U1Representation::new(s).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let sys = rep(2);
    let a = plus_effect(&sys).unwrap();
    let mut worst: f64 = 0.0;
    for d in [2usize, 4, 8, 16, 32, 64] {
        let (rel, ch) = frame(sys.clone(), rep(d), uniform(d));
        let want = 0.5 / d as f64;
        let by_norm = operator_distance(a.op(), &ch.restrict(&rel.relativise(a.op()).unwrap()).unwrap()).unwrap();
        let c1 = rel.povm().phase_measure(ch.omega()).unwrap().coefficient(1);
        let by_fourier = 0.5 * (C64::new(1.0, 0.0) - c1).norm();
        let report = check_prop2(&rel, &ch, 1.0 / 16.0).map_err(|e| format!("d={d}: {e}"))?;
        for (route, v) in [("norm", by_norm), ("fourier", by_fourier), ("checker", report.lhs)] {
            let err = (v - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("d={d} {route} route gives {v}, want {want}"))?;
        }
        ensure((c1.re - (d as f64 - 1.0) / d as f64).abs() <= 1e-12 && c1.im.abs() <= 1e-12, || {
            format!("d={d}: c1 = {c1}")
        })?;
    }
    Ok(format!("D = 1/(2d) by norm and by |1-c1|/2 for d in 2..64, max error {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let mut r = random::rng(2);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in 1..=6usize {
        for level in 0..d {
            let omega = State::basis(d, level);
            let ds = r.random_range(2..=5);
            let sys = rep(ds);
            let (rel, ch) = frame(sys.clone(), rep(d), omega);
            let a = random::effect(ds, &mut r);
            let got = ch.restrict(&rel.relativise(a.op()).unwrap()).unwrap();
            let diag: Vec<f64> = (0..ds).map(|i| a.op().get(i, i).re).collect();
            let err = (&got - &Operator::diag(&diag)).max_abs();
            worst = worst.max(err);
            ensure(err <= 1e-10, || format!("d={d} level={level}: pinching error {err:.2e}"))?;

            let plus = plus_effect(&sys).unwrap();
            let dist = operator_distance(plus.op(), &ch.restrict(&rel.relativise(plus.op()).unwrap()).unwrap()).unwrap();
            ensure((dist - 0.5).abs() <= 1e-10, || format!("d={d} level={level}: D = {dist}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} number-eigenstate references pinch to the diagonal, D = 1/2, max error {worst:.1e}"))
}

struct SweepCase {
    joint: JointRepresentation,
    rel: Relativiser,
    ch: RestrictionChannel,
    a: Effect,
    e: Effect,
    p: Effect,
    eps: Vec<f64>,
}

fn sweep_case(seed: u64) -> SweepCase {
    let mut r = random::rng(seed);
    let ds = r.random_range(2..=6);
    let dr = r.random_range(1..=8);
    let sys = rep(ds);
    let reference = random_rep(dr, &mut r);
    let omega = if r.random_bool(0.35) {
        random::localized_state(dr, &mut r)
    } else {
        random::state(dr, &mut r)
    };
    let (rel, ch) = frame(sys.clone(), reference.clone(), omega);
    let joint = JointRepresentation::new(sys, reference);
    let a = random::effect(ds, &mut r);
    let e = if r.random_bool(0.5) {
        random_invariant_effect(&joint, random::substream(seed, 1))
    } else {
        rel.relativise_effect(&a).unwrap()
    };
    let p = random::projection(ds, &mut r);
    let eps = vec![1.0 / 16.0, r.random_range(0.01..0.6)];
    SweepCase { joint, rel, ch, a, e, p, eps }
}

const SWEEP: u64 = 1000;
const SWEEP_CHECKERS: [&str; 7] = [
    "main_theorem",
    "corollary_norm",
    "corollary_sharp",
    "prop1",
    "prop2",
    "dim_lemma",
    "mt_width_lemma",
];

#[derive(Default, Clone, Copy)]
struct Tally {
    count: usize,
    na: usize,
    failures: usize,
    min_slack: f64,
}

impl Tally {
    fn add(&mut self, r: &BoundReport) {
        if self.count == 0 {
            self.min_slack = f64::INFINITY;
        }
        self.count += 1;
        if !r.applicable {
            self.na += 1;
        } else {
            self.min_slack = self.min_slack.min(r.slack);
            if r.slack < -1e-9 || !r.pass {
                self.failures += 1;
            }
        }
    }
}

fn criterion_3() -> Outcome {
    let mut tallies = [Tally::default(); 7];
    for seed in 0..SWEEP {
        let c = sweep_case(seed);
        let err = |name: &str, e: qrf::Error| format!("instance {seed} {name}: {e}");
        let reports: Vec<(usize, BoundReport)> = {
            let mut v = vec![
                (0, check_main_theorem(&c.joint, &c.ch, &c.e, &c.a).map_err(|e| err("main_theorem", e))?),
                (1, check_corollary_norm(&c.joint, &c.ch, &c.e, &c.a).map_err(|e| err("corollary_norm", e))?),
                (2, check_corollary_sharp(&c.joint, &c.ch, &c.e, &c.p).map_err(|e| err("corollary_sharp", e))?),
            ];
            for &eps in &c.eps {
                v.push((3, check_prop1(&c.rel, &c.ch, &c.a, eps).map_err(|e| err("prop1", e))?));
                v.push((4, check_prop2(&c.rel, &c.ch, eps).map_err(|e| err("prop2", e))?));
                v.push((5, check_dim_lemma(c.rel.povm(), c.ch.omega(), eps).map_err(|e| err("dim_lemma", e))?));
                v.push((6, check_mt_width_lemma(c.rel.povm(), c.ch.omega(), eps).map_err(|e| err("mt_width_lemma", e))?));
            }
            v
        };
        for (k, r) in &reports {
            tallies[*k].add(r);
        }
    }
    let mut parts = Vec::new();
    for (name, t) in SWEEP_CHECKERS.iter().zip(&tallies) {
        parts.push(format!("{name} {}/{} NA {}", t.count - t.na, t.count, t.na));
    }
    let failures: usize = tallies.iter().map(|t| t.failures).sum();
    let mt = tallies[6];
    ensure(failures == 0, || {
        let bad: Vec<String> = SWEEP_CHECKERS
            .iter()
            .zip(&tallies)
            .filter(|(_, t)| t.failures > 0)
            .map(|(n, t)| format!("{n}: {} failures, min slack {:.3e}", t.failures, t.min_slack))
            .collect();
        bad.join("; ")
    })?;
    ensure(mt.count > mt.na, || "no applicable mt_width_lemma case in the sweep".into())?;
    Ok(format!("{SWEEP} instances, 0 failures; applicable/total: {}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut branches = [0usize; 3];
    let mut min_slack = f64::INFINITY;
    for seed in 0..SWEEP {
        let c = sweep_case(seed);
        let (rel, ch) = frame(rep(2), c.joint.reference.clone(), c.ch.omega().clone());
        let r = check_sec4_theorem(&rel, &ch).map_err(|e| format!("instance {seed}: {e}"))?;
        ensure(r.pass && r.slack >= -1e-9, || {
            format!("instance {seed}: D = {} below {} (slack {:.3e})", r.lhs, r.rhs, r.slack)
        })?;
        branches[r.details["branch"] as usize - 1] += 1;
        min_slack = min_slack.min(r.slack);
    }

    let s = presets::load("paper-number-eigenstate").unwrap().resolve().unwrap();
    let (rel, ch) = (
        Relativiser::new(s.sys.clone(), s.povm.clone()),
        RestrictionChannel::new(s.omega.clone(), s.sys.dim()),
    );
    let r = check_sec4_theorem(&rel, &ch).map_err(|e| e.to_string())?;
    ensure((r.lhs - 0.5).abs() <= 1e-10, || format!("number-eigenstate preset: D = {}", r.lhs))?;
    ensure(r.slack >= 0.46, || format!("number-eigenstate preset slack {} < 0.46", r.slack))?;
    Ok(format!(
        "{SWEEP} references hold (branches {}/{}/{}, min slack {min_slack:.3e}); preset D = {}, slack {:.5}",
        branches[0], branches[1], branches[2], r.lhs, r.slack
    ))
}

fn commuting_pair(d: usize, rng: &mut impl Rng) -> (Operator, Operator) {
    let u = random::isometry(d, d, rng);
    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    (Operator::from_spectral(&x, &u), Operator::from_spectral(&y, &u))
}

fn general_operator(d: usize, rng: &mut impl Rng) -> Operator {
    Operator::from_matrix(random::gaussian_matrix(d, d, rng)).unwrap()
}

fn criterion_5() -> Outcome {
    let mut r = random::rng(5);
    let mut min_eig = f64::INFINITY;
    let mut min_norm_slack = f64::INFINITY;
    let mut min_comm_slack = f64::INFINITY;
    for i in 0..500u64 {
        let input = r.random_range(1..=6);
        let output = r.random_range(1..=(2 * input).min(6));
        let ip = OpInnerProduct::random(input, output, 2, random::substream(5, i)).map_err(|e| e.to_string())?;
        let a = general_operator(input, &mut r);
        let b = general_operator(input, &mut r);
        let cs = check_cs_lemma(&ip, &a, &b).map_err(|e| e.to_string())?;
        ensure(cs.lhs >= -1e-8 && !cs.is_failure(), || format!("channel {i}: min eig {:.3e}", cs.lhs))?;
        let norm = check_cs_norm(&ip, &a, &b).map_err(|e| e.to_string())?;
        ensure(!norm.is_failure(), || format!("channel {i}: norm corollary slack {:.3e}", norm.slack))?;
        let (x, y) = commuting_pair(input, &mut r);
        let comm = check_commutator_lemma(&ip, &x, &y).map_err(|e| e.to_string())?;
        ensure(comm.applicable && !comm.is_failure(), || {
            format!("channel {i}: commutator lemma slack {:.3e}", comm.slack)
        })?;
        min_eig = min_eig.min(cs.lhs);
        min_norm_slack = min_norm_slack.min(norm.slack);
        min_comm_slack = min_comm_slack.min(comm.slack);
    }
    Ok(format!(
        "500 channels: min eig {min_eig:.2e}, norm slack >= {min_norm_slack:.2e}, commutator slack >= {min_comm_slack:.2e}"
    ))
}

fn criterion_6() -> Outcome {
    let mut r = random::rng(6);
    let delta = 1e-3;
    let mut max_mass: f64 = 0.0;
    for i in 0..100 {
        let d = r.random_range(1..=8);
        let reference = random_rep(d, &mut r);
        let omega = if i % 3 == 0 {
            random::localized_state(d, &mut r)
        } else {
            random::state(d, &mut r)
        };
        let m = CovariantPhasePovm::canonical(reference).phase_measure(&omega).unwrap();
        let w = m.overall_width(0.0).map_err(|e| e.to_string())?;
        ensure(w.width == TAU, || format!("state {i}: W_0 = {}", w.width))?;
        let mass = m.centered_mass(0.0, TAU - delta);
        ensure(mass < 1.0, || format!("state {i}: mass {mass} of I(0, 2pi - delta)"))?;
        max_mass = max_mass.max(mass);
    }
    Ok(format!("100 states: W_0 = 2pi exactly, max mass of I(0, 2pi - 1e-3) = {max_mass:.9}"))
}

const NODES: usize = 64;

/// `∫ U_S(θ) A U_S(θ)* ⊗ dF(θ)` by the trapezoid rule.
fn relativise_by_quadrature(rel: &Relativiser, a: &Operator) -> Operator {
    let povm = rel.povm();
    let r = povm.ref_rep().spectrum();
    let t = povm.generator();
    let mut acc = Operator::zeros(a.dim() * povm.dim());
    for i in 0..NODES {
        let th = -PI + TAU * i as f64 / NODES as f64;
        let f = Operator::from_fn(povm.dim(), |k, l| t.get(k, l) * C64::from_polar(1.0, (r[k] - r[l]) as f64 * th));
        acc = &acc + &tensor(&conjugate(rel.sys_rep(), th, a).unwrap(), &f);
    }
    acc.scale(1.0 / NODES as f64)
}

fn criterion_7() -> Outcome {
    let mut r = random::rng(7);
    let (mut worst_two, mut worst_quad): (f64, f64) = (0.0, 0.0);
    for i in 0..500 {
        let ds = r.random_range(1..=5);
        let dr = r.random_range(1..=6);
        let (rel, ch) = frame(random_rep(ds, &mut r), random_rep(dr, &mut r), random::state(dr, &mut r));
        let a = random::effect(ds, &mut r);
        let y = rel.relativise(a.op()).unwrap();
        let two = (&ch.restrict(&y).unwrap() - &rel.restricted_relativised(&ch, a.op()).unwrap()).max_abs();
        let quad = (&y - &relativise_by_quadrature(&rel, a.op())).max_abs();
        ensure(two <= 1e-12, || format!("input {i}: two-path error {two:.2e}"))?;
        ensure(quad <= 1e-12, || format!("input {i}: quadrature error {quad:.2e}"))?;
        worst_two = worst_two.max(two);
        worst_quad = worst_quad.max(quad);
    }
    Ok(format!("500 inputs: two-path error {worst_two:.1e}, quadrature error {worst_quad:.1e}"))
}

fn criterion_8() -> Outcome {
    let sys = rep(2);
    let a = plus_effect(&sys).unwrap();
    let dims: Vec<usize> = (2..=32).collect();
    let table = tradeoff_curve(
        ReferenceFamily::UniformSuperposition,
        &sys,
        &a,
        &dims,
        &SearchOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut prev = f64::INFINITY;
    for row in &table.rows {
        let d = row.dim as f64;
        let sigma = ((d * d - 1.0) / 12.0).sqrt();
        ensure(row.best_d <= prev + 1e-6, || format!("d={}: best_D {} rises above {prev}", row.dim, row.best_d))?;
        ensure(row.best_d <= 0.5 / d + 1e-9, || format!("d={}: best_D {} > 1/(2d)", row.dim, row.best_d))?;
        ensure(row.best_d >= row.thm_rhs - 1e-9, || {
            format!("d={}: best_D {} < lower bound {}", row.dim, row.best_d, row.thm_rhs)
        })?;
        ensure((row.sigma_nr - sigma).abs() <= 1e-9, || format!("d={}: sigma {} != {sigma}", row.dim, row.sigma_nr))?;
        ensure((row.thm_rhs - example_distance_lower_bound(row.sigma_nr)).abs() <= 1e-15, || {
            format!("d={}: thm_rhs inconsistent with sigma_NR", row.dim)
        })?;
        ensure(row.prop2_lb <= 0.5 / d + 1e-9, || format!("d={}: prop2_lb above D of the relativised target", row.dim))?;
        prev = row.best_d;
    }
    ensure(table.min_certificate_slack() >= -1e-9, || {
        format!("certificate slack {:.3e}", table.min_certificate_slack())
    })?;
    let first = &table.rows[0];
    let last = table.rows.last().unwrap();
    Ok(format!(
        "d=2..32: best_D {:.4e} -> {:.4e}, lower bound {:.4e} -> {:.4e}, certificates pass",
        first.best_d, last.best_d, first.thm_rhs, last.thm_rhs
    ))
}

/// `Γ(E)` for sys {0,1} ⊗ ref {0,1} when `E` is `e0` on |00⟩, the block
/// `[[x, b], [b̄, y]]` on {|01⟩, |10⟩} and `e2` on |11⟩.
fn two_qubit_restriction(e0: f64, e2: f64, x: f64, y: f64, b: C64, rho: &Operator) -> [C64; 3] {
    [
        rho.get(0, 0) * e0 + rho.get(1, 1) * x,
        b * rho.get(0, 1),
        rho.get(0, 0) * y + rho.get(1, 1) * e2,
    ]
}

fn two_by_two_norm(a: f64, c: C64, d: f64) -> f64 {
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + c.norm_sqr()).sqrt();
    (mid + rad).abs().max((mid - rad).abs())
}

/// Minimum of `D(Γ(E), A)` over invariant effects by grid search.
///
/// `Γ(E)_01 = b·ρ_01` with `|b| ≤ R(x, y) = √min(xy, (1−x)(1−y))` and a
/// free phase, so the off-diagonal residual is at best
/// `max(0, |A_01| − R·|ρ_01|)`. What remains is a convex function of
/// `(e0, e2, x, y) ∈ [0, 1]⁴`: an exhaustive grid, then a zoom around the
/// best node.
fn brute_force(rho: &Operator, a: &Operator) -> f64 {
    let (r00, r11) = (rho.get(0, 0).re, rho.get(1, 1).re);
    let objective = |p: &[f64; 4]| {
        let [e0, e2, x, y] = *p;
        let radius = (x * y).min((1.0 - x) * (1.0 - y)).max(0.0).sqrt();
        let g = two_qubit_restriction(e0, e2, x, y, C64::new(radius, 0.0), rho);
        let off = (a.get(0, 1).norm() - g[1].norm()).max(0.0);
        two_by_two_norm(g[0].re - a.get(0, 0).re, C64::new(off, 0.0), g[2].re - a.get(1, 1).re)
    };
    debug_assert!(r00 + r11 > 0.0);

    let grid = |center: [f64; 4], half: f64, points: usize, best: &mut (f64, [f64; 4])| {
        let mut idx = [0usize; 4];
        loop {
            let mut p = [0.0; 4];
            for k in 0..4 {
                let t = idx[k] as f64 / (points - 1) as f64 * 2.0 - 1.0;
                p[k] = (center[k] + t * half).clamp(0.0, 1.0);
            }
            let f = objective(&p);
            if f < best.0 {
                *best = (f, p);
            }
            let mut k = 0;
            while k < 4 {
                idx[k] += 1;
                if idx[k] < points {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == 4 {
                break;
            }
        }
    };
    let mut best = (f64::INFINITY, [0.5; 4]);
    grid([0.5; 4], 0.5, 41, &mut best);
    let mut half = 1.0 / 40.0;
    for _ in 0..40 {
        grid(best.1, half, 9, &mut best);
        half *= 0.5;
    }
    best.0
}

fn criterion_9() -> Outcome {
    let mut r = random::rng(9);
    let sys = rep(2);
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for i in 0..6u64 {
        let rho = random::state(2, &mut r);
        // pulled toward the plus effect so the optimum stays away from zero
        let plus = plus_effect(&sys).unwrap();
        let t = if i == 0 { 0.0 } else { r.random_range(0.0..0.6) };
        let a = Effect::new(&plus.op().scale(1.0 - t) + &random::effect(2, &mut r).op().scale(t)).unwrap();
        let joint = JointRepresentation::new(sys.clone(), rep(2));
        let options = SearchOptions {
            seed: i,
            ..SearchOptions::default()
        };
        let problem = SearchProblem::new(joint, rho.clone(), a.clone(), options).map_err(|e| e.to_string())?;
        let found = minimize(&problem).map_err(|e| e.to_string())?.best_d;
        let brute = brute_force(rho.op(), a.op());
        let diff = (found - brute).abs();
        worst = worst.max(diff);
        lines.push(format!("{found:.5}/{brute:.5}"));
        ensure(diff <= 1e-3, || format!("instance {i}: search {found}, brute force {brute}"))?;
    }
    Ok(format!("6 instances agree to {worst:.1e} (search/brute: {})", lines.join(" ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed-form distance family", criterion_1),
        ("number-eigenstate pinching", criterion_2),
        ("inequality sweep", criterion_3),
        ("reference-size theorem constants", criterion_4),
        ("operator Cauchy-Schwarz harness", criterion_5),
        ("strict-localisation impossibility", criterion_6),
        ("two-path exactness", criterion_7),
        ("trade-off curve shape", criterion_8),
        ("brute-force optimality at 2x2", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {} PASS [{name}] ({secs:.1} s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} FAIL [{name}] ({secs:.1} s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
