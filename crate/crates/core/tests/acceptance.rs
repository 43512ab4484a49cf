//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! criterion fails unexpectedly.
//!
//! A criterion marked `known` is one whose stated form does not hold for the
//! exact equations either; its line still reads FAIL, followed by the
//! measured numbers.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yardsale::agent::{self, InitialCondition, SimConfig};
use yardsale::analysis::{verify_condensation, verify_h_theorem, Curve, TolerancePolicy, CONDENSED_GINI};
use yardsale::boltzmann::{self, BoltzmannConfig, CollisionOperator, Integrator, RunOptions};
use yardsale::fp::{self, Closure, FpConfig};
use yardsale::gini::{frechet_derivative_nodes, gini_gradient_nodes, gini_rate, gini_via_lorenz, gini_via_survival};
use yardsale::{BetaDistribution, WealthDistribution, WealthGrid};

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    KnownFail,
}

struct Report {
    unexpected: usize,
}

impl Report {
    fn line(&mut self, name: &str, status: Status, detail: impl AsRef<str>) {
        let tag = match status {
            Status::Pass => "PASS",
            Status::Fail => {
                self.unexpected += 1;
                "FAIL"
            }
            Status::KnownFail => "FAIL (known)",
        };
        println!("[{tag}] {name}: {}", detail.as_ref());
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl AsRef<str>) {
        self.line(name, if ok { Status::Pass } else { Status::Fail }, detail);
    }

    fn note(&self, detail: impl AsRef<str>) {
        println!("       {}", detail.as_ref());
    }
}

fn log_grid(w_first: f64, w_max: f64, n: usize) -> Arc<WealthGrid> {
    Arc::new(WealthGrid::log_with_zero_cell(w_first, w_max, n).unwrap())
}

/// Smooth random density: a mixture of `w^s e^{-w/θ}` bumps.
fn random_state(grid: Arc<WealthGrid>, rng: &mut ChaCha8Rng) -> WealthDistribution {
    let bumps: Vec<(f64, f64, f64)> = (0..rng.random_range(1..4))
        .map(|_| (rng.random_range(0.2..1.0), rng.random_range(0.0..3.0), rng.random_range(0.3..3.0)))
        .collect();
    WealthDistribution::from_fn(grid, |w| {
        bumps.iter().map(|(a, s, theta)| a * (w / theta).powf(*s) * (-w / theta).exp()).sum()
    })
    .unwrap()
}

fn gini_oracles(r: &mut Report) {
    let start = Instant::now();
    let n = 2048;
    let alpha = 2.0;
    let cases = [
        ("pareto(2)", WealthDistribution::pareto(log_grid(1e-4, 1e12, n), alpha, 1.0, 1.0).unwrap().0, 1.0 / (2.0 * alpha - 1.0)),
        ("exponential", WealthDistribution::exponential(log_grid(1e-4, 1e3, n), 1.0, 1.0).unwrap(), 0.5),
        ("atom", WealthDistribution::atom(Arc::new(WealthGrid::linear(4.0, n).unwrap()), 1.0, 1.0).unwrap(), 0.0),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, d, exact) in &cases {
        let gl = gini_via_lorenz(d).unwrap();
        let gs = gini_via_survival(d).unwrap();
        let err = (gl - exact).abs().max((gs - exact).abs());
        worst = worst.max(err);
        parts.push(format!("{name} {gl:.6}/{gs:.6} vs {exact:.6}"));
    }
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "gini oracles (2048 nodes, tol 1e-3, < 1 s)",
        worst <= 1e-3 && secs < 1.0,
        format!("max error {worst:.2e} in {secs:.3} s"),
    );
    r.note(parts.join("; "));
}

fn frechet(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let grid = log_grid(1e-4, 1e3, 256);
    let mut worst_ratio = f64::INFINITY;
    let mut worst_fixed: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for _ in 0..10 {
        let p = random_state(grid.clone(), &mut rng);
        let q = grid.weights();
        // Amplitude 20 keeps the ε = 1e-4 truncation error well above rounding.
        let eta: Vec<f64> = p.density().iter().map(|v| 20.0 * v * rng.random_range(-1.0..1.0)).collect();
        let g = |eps: f64| {
            let d: Vec<f64> = p.density().iter().zip(&eta).map(|(a, b)| a + eps * b).collect();
            gini_via_lorenz(&p.with_density(d).unwrap()).unwrap()
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(q).map(|((x, y), w)| x * y * w).sum::<f64>();

        let exact = dot(&gini_gradient_nodes(&p).unwrap(), &eta);
        let errs: Vec<f64> = [1e-3, 1e-4]
            .iter()
            .map(|&e| ((g(e) - g(-e)) / (2.0 * e) - exact).abs())
            .collect();
        worst_ratio = worst_ratio.min(errs[0] / errs[1]);
        worst_err = worst_err.max(errs[1] / exact.abs().max(1e-300));

        // Perturbation with ∫η = ∫wη = 0, along which the fixed-moment
        // derivative is the whole derivative and G is exactly quadratic.
        let w = grid.nodes();
        let pd = p.density();
        let b0: Vec<f64> = pd.to_vec();
        let b1: Vec<f64> = pd.iter().zip(w).map(|(v, x)| v * x).collect();
        let ones = vec![1.0; w.len()];
        let (a00, a01, a11) = (dot(&ones, &b0), dot(&ones, &b1), dot(w, &b1));
        let (r0, r1) = (dot(&ones, &eta), dot(w, &eta));
        let det = a00 * a11 - a01 * a01;
        let (c0, c1) = ((r0 * a11 - r1 * a01) / det, (a00 * r1 - a01 * r0) / det);
        let eta0: Vec<f64> = (0..w.len()).map(|i| eta[i] - c0 * b0[i] - c1 * b1[i]).collect();
        let fixed = dot(&frechet_derivative_nodes(&p), &eta0);
        let g0 = |eps: f64| {
            let d: Vec<f64> = pd.iter().zip(&eta0).map(|(a, b)| a + eps * b).collect();
            gini_via_lorenz(&p.with_density(d).unwrap()).unwrap()
        };
        for e in [1e-3, 1e-4] {
            let fd = (g0(e) - g0(-e)) / (2.0 * e);
            worst_fixed = worst_fixed.max((fd - fixed).abs() / fixed.abs().max(1e-12));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    // Error ratio 100 is exact ε² scaling; 30 leaves room for rounding at 1e-4.
    r.check(
        "frechet derivative vs central differences (10 pairs, O(eps^2), < 10 s)",
        worst_ratio >= 30.0 && worst_fixed < 1e-6 && secs < 10.0,
        format!(
            "min err(1e-3)/err(1e-4) = {worst_ratio:.1}, max rel err at 1e-4 = {worst_err:.1e}; fixed-moment form on N,W-conserving directions: max rel err {worst_fixed:.1e}; {secs:.2} s"
        ),
    );
}

struct HRun {
    label: String,
    min_rate1_margin: f64,
    min_rate2_margin: f64,
    min_total_margin: f64,
    max_rate2_neg: f64,
    min_rate2_pos: f64,
    monotone: bool,
    min_dg: f64,
    drift: f64,
}

fn boltzmann_h_theorem(r: &mut Report) {
    let start = Instant::now();
    let mut runs = Vec::new();
    for (init, b0) in [("pareto", 0.1), ("pareto", 0.3), ("exponential", 0.1), ("exponential", 0.3)] {
        let grid = log_grid(1e-4, 1e5, 512);
        let d = if init == "pareto" {
            WealthDistribution::pareto(grid, 2.0, 1.0, 1.0).unwrap().0
        } else {
            WealthDistribution::exponential(grid, 1.0, 1.0).unwrap()
        };
        let beta = BetaDistribution::uniform(b0).unwrap();
        let op = CollisionOperator::new(beta, 16).unwrap();
        let dt = op.suggested_dt(&d).unwrap();
        let cfg = BoltzmannConfig { beta, beta_quadrature_points: 16, dt, t_end: 500.0 * dt, integrator: Integrator::Euler };
        let run = boltzmann::solve(&d, &cfg, RunOptions { record_every: 50, checkpoint_every: 0, estimate_errors: true }).unwrap();
        let (mut m1, mut m2, mut mt): (f64, f64, f64) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max_neg: f64 = f64::NEG_INFINITY;
        let mut min_pos: f64 = f64::INFINITY;
        let mut g_tol: f64 = 0.0;
        for rec in &run.rates {
            let e = rec.error.unwrap();
            m1 = m1.min(rec.split.rate1 + e.rate1);
            m2 = m2.min(rec.split.rate2 + e.rate2);
            mt = mt.min(rec.split.total() + e.rate1 + e.rate2);
            max_neg = max_neg.max(rec.rate2_negative_beta);
            min_pos = min_pos.min(rec.split.rate2 - rec.rate2_negative_beta);
            g_tol = g_tol.max((e.rate1 + e.rate2) * 50.0 * dt);
        }
        let h = verify_h_theorem(&run.trace, &TolerancePolicy::Absolute(g_tol + 1e-12)).unwrap();
        let drift = run.relative_drift();
        runs.push(HRun {
            label: format!("{init} b0={b0}"),
            min_rate1_margin: m1,
            min_rate2_margin: m2,
            min_total_margin: mt,
            max_rate2_neg: max_neg,
            min_rate2_pos: min_pos,
            monotone: h.passed,
            min_dg: h.min_increment(),
            drift: drift.n.max(drift.w),
        });
    }
    let secs = start.elapsed().as_secs_f64();

    let rate1_ok = runs.iter().all(|h| h.min_rate1_margin >= 0.0);
    let total_ok = runs.iter().all(|h| h.min_total_margin >= 0.0);
    let mono_ok = runs.iter().all(|h| h.monotone);
    r.check(
        "boltzmann H-theorem: (dG/dt)_1 >= -tol and G non-decreasing (4 runs, 512 nodes, 500 steps)",
        rate1_ok && total_ok && mono_ok,
        format!("{secs:.1} s"),
    );
    for h in &runs {
        r.note(format!(
            "{}: min(rate1 + err1) = {:.3e}, min(total + err) = {:.3e}, min dG = {:.3e}",
            h.label, h.min_rate1_margin, h.min_total_margin, h.min_dg
        ));
    }
    let rate2_ok = runs.iter().all(|h| h.min_rate2_margin >= 0.0);
    r.line(
        "boltzmann H-theorem: (dG/dt)_2 >= -tol",
        if rate2_ok { Status::Pass } else { Status::KnownFail },
        "rate2 is negative at every record, far beyond the grid-halving error",
    );
    for h in &runs {
        r.note(format!(
            "{}: min(rate2 + err2) = {:.3e}; beta<0 slices max {:.3e}, beta>0 slices min {:.3e}",
            h.label, h.min_rate2_margin, h.max_rate2_neg, h.min_rate2_pos
        ));
    }
    if !rate2_ok {
        r.note("the beta>0 half of term 2 is positive as the inequality chain claims; the beta<0 half is more");
        r.note("negative, so the symmetric total is negative. Only rate1 and rate1 + rate2 are non-negative.");
    }
    let worst_drift = runs.iter().map(|h| h.drift).fold(0.0, f64::max);
    r.check(
        "conservation: boltzmann N and W drift per 500-step run <= 1e-3",
        worst_drift <= 1e-3,
        format!("max relative drift {worst_drift:.2e}"),
    );
}

fn fp_conservation(r: &mut Report) {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for closure in [Closure::C, Closure::OneMinusC] {
        let grid = log_grid(1e-4, 1e5, 512);
        let d = WealthDistribution::exponential(grid.clone(), 1.0, 1.0).unwrap();
        let gamma = BetaDistribution::uniform(0.1).unwrap().gamma();
        let dt = fp::uniform_stability_bound(&grid, gamma).unwrap();
        let run = fp::solve(&d, &FpConfig { gamma, dt, t_end: 1000.0 * dt, closure }, 100, 0).unwrap();
        let drift = run.relative_drift();
        worst = worst.max(drift.n).max(drift.w);
        parts.push(format!("{closure:?}: N {:.1e}, W {:.1e} over {} steps", drift.n, drift.w, run.records.last().unwrap().step));
    }
    r.check("conservation: fokker-planck N and W drift <= 1e-10", worst <= 1e-10, parts.join("; "));
}

fn integration_by_parts(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let gamma = 0.01 / 3.0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_bare: f64 = 0.0;
    for _ in 0..10 {
        let coarse_grid = log_grid(1e-4, 1e3, 256);
        let coarse = random_state(coarse_grid.clone(), &mut rng);
        let fine = coarse.regrid(Arc::new(coarse_grid.refined())).unwrap();
        let finer = coarse.regrid(Arc::new(coarse_grid.refined().refined())).unwrap();
        let mut gaps = Vec::new();
        for d in [&coarse, &fine, &finer] {
            let closed = fp::fp_gini_rate(d, gamma, Closure::C).unwrap();
            let chain = gini_rate(d, &fp::fp_rhs(d, gamma, Closure::C).unwrap()).unwrap();
            gaps.push((closed - chain).abs() / chain.abs());
        }
        worst_gap = gaps.iter().copied().fold(worst_gap, f64::max);

        // The same closed form without the w² weight.
        let m = coarse.moments();
        let k = fp::compute_c(&coarse);
        let bare: f64 = coarse
            .density()
            .iter()
            .zip(k.values())
            .zip(coarse.grid().weights())
            .map(|((p, c), q)| gamma * p * p * c * q)
            .sum::<f64>()
            / (m.n * m.w);
        let chain = gini_rate(&coarse, &fp::fp_rhs(&coarse, gamma, Closure::C).unwrap()).unwrap();
        worst_bare = worst_bare.max((bare - chain).abs() / chain.abs());
    }
    // The flux-form rhs and the closed form are related by an exact
    // summation by parts, so the gap is rounding at every resolution.
    r.check(
        "integration by parts: |fp_gini_rate - gini_rate(fp_rhs)| within tolerance under halving (10 states)",
        worst_gap <= 1e-10,
        format!("max relative gap {worst_gap:.1e} on 256, 511 and 1021 nodes"),
    );
    r.note(format!("without the w^2 factor in the integrand the closed form is off by up to {:.0}%", 100.0 * worst_bare));
}

fn small_beta(r: &mut Report) {
    let grid = log_grid(1e-4, 1e4, 1024);
    let d = WealthDistribution::from_fn(grid.clone(), |w| 2.0 / (1.0 + w).powi(3)).unwrap();
    let mut max_dev = Vec::new();
    let mut rel_c = Vec::new();
    let mut rate_c = Vec::new();
    let mut rate_one_minus_c = Vec::new();
    let betas = [0.2, 0.1, 0.05];
    for &b0 in &betas {
        let beta = BetaDistribution::uniform(b0).unwrap();
        let op = CollisionOperator::new(beta, 16).unwrap();
        let rb = op.rhs(&d).unwrap();
        let fc = fp::fp_rhs(&d, beta.gamma(), Closure::C).unwrap();
        let dev: f64 = rb.values().iter().zip(fc.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        max_dev.push(dev);
        rel_c.push(dev / fc.max_abs());
        let gb = op.gini_rate_split(&d).unwrap().total();
        let gc = fp::fp_gini_rate(&d, beta.gamma(), Closure::C).unwrap();
        let g1 = fp::fp_gini_rate(&d, beta.gamma(), Closure::OneMinusC).unwrap();
        rate_c.push((gb - gc).abs() / gb);
        rate_one_minus_c.push((gb - g1).abs() / gb);
    }
    let order = |v: &[f64], i: usize| (v[i] / v[i + 1]).log2();
    let orders = [order(&max_dev, 0), order(&max_dev, 1)];
    r.check(
        "small-beta consistency: max |rhs_B - rhs_FP(C)| decreases with order >= 1",
        orders.iter().all(|&p| p >= 1.0),
        format!(
            "deviation {:.2e}, {:.2e}, {:.2e} at b0 = 0.2, 0.1, 0.05; orders {:.2}, {:.2}",
            max_dev[0], max_dev[1], max_dev[2], orders[0], orders[1]
        ),
    );
    r.note(format!(
        "relative to |rhs_FP(C)| the deviation stays at {:.2}, {:.2}, {:.2}: both sides scale as b0^2 but differ in shape",
        rel_c[0], rel_c[1], rel_c[2]
    ));
    r.note(format!(
        "relative dG/dt gap vs closure C: {:.2e}, {:.2e}, {:.2e}; vs closure 1 - C: {:.2e}, {:.2e}, {:.2e} (orders {:.2}, {:.2})",
        rate_c[0],
        rate_c[1],
        rate_c[2],
        rate_one_minus_c[0],
        rate_one_minus_c[1],
        rate_one_minus_c[2],
        order(&rate_one_minus_c, 0),
        order(&rate_one_minus_c, 1)
    ));
}

fn condensation(r: &mut Report) {
    let start = Instant::now();
    let initial = InitialCondition::Exponential { mean: 1.0 };
    let beta = BetaDistribution::uniform(0.1).unwrap();
    let sim = SimConfig {
        n_agents: 1000,
        initial,
        beta,
        n_transactions: 10_000_000,
        record_every: 250_000,
        n_replicas: 32,
        seed: 2024,
    };
    let out = agent::run(&sim).unwrap();
    let e = &out.ensemble;
    let trace = e.mean_trace(1000.0, 1000.0).unwrap();
    let policy = TolerancePolicy::Stderr { stderr: e.increment_stderr.clone(), sigmas: 3.0 };
    let report = verify_condensation(&trace, &policy, CONDENSED_GINI).unwrap();
    let final_g = *e.g_mean.last().unwrap();
    let agent_secs = start.elapsed().as_secs_f64();
    r.check(
        "condensation: agents n=1000, b0=0.1, 1e7 transactions, 32 replicas: mean G >= 0.95, non-decreasing within 3 stderr",
        report.passed,
        format!(
            "final G = {final_g:.4} +- {:.4}, {} violations, min increment {:.2e}; {agent_secs:.1} s",
            e.g_stderr.last().unwrap(),
            report.h_theorem.violations.len(),
            report.h_theorem.min_increment()
        ),
    );

    let start = Instant::now();
    let gamma = beta.gamma();
    let grid = log_grid(1e-8, 1e16, 512);
    let d = WealthDistribution::exponential(grid.clone(), 1.0, 1.0).unwrap();
    let dt = fp::uniform_stability_bound(&grid, gamma).unwrap();
    let run = fp::solve(&d, &FpConfig { gamma, dt, t_end: 4500.0, closure: Closure::C }, 20, 0).unwrap();
    let rep = verify_condensation(&run.trace, &TolerancePolicy::Absolute(0.0), CONDENSED_GINI).unwrap();
    let drift = run.relative_drift();
    let last = run.records.last().unwrap();
    r.check(
        "condensation: fokker-planck long run reaches G >= 0.95 and is still non-decreasing",
        rep.passed && !run.truncated,
        format!(
            "G = {:.4} at t = {:.1}, min increment {:.2e}, poor fraction {:.3}, drift N {:.1e} W {:.1e}, truncated {}; {:.1} s",
            rep.h_theorem.final_g,
            last.t,
            rep.h_theorem.min_increment(),
            last.poor_fraction,
            drift.n,
            drift.w,
            run.truncated,
            start.elapsed().as_secs_f64()
        ),
    );

    // Timing cross-check against the agents, one sweep per time unit.
    let grid = log_grid(1e-6, 1e4, 512);
    let d = WealthDistribution::exponential(grid.clone(), 1.0, 1.0).unwrap();
    let dt = fp::uniform_stability_bound(&grid, gamma).unwrap();
    let t_end = *e.t.last().unwrap();
    let agents = Curve { label: "agents".into(), t: e.t.clone(), g: e.g_mean.clone(), stderr: Some(e.g_stderr.clone()) };
    let mut curves = vec![agents];
    for closure in [Closure::C, Closure::OneMinusC] {
        let cfg = FpConfig { gamma, dt, t_end, closure };
        let run = fp::solve(&d, &cfg, 200, 0).unwrap();
        curves.push(Curve::from_trace(format!("fp {closure:?}"), &run.trace));
    }
    let cmp = yardsale::analysis::compare_curves(&curves).unwrap();
    for p in cmp.pairs.iter().filter(|p| p.a == "agents") {
        r.note(format!("agents vs {}: max |dG| = {:.3} at t = {:.0}", p.b, p.max_abs, p.at));
    }
}

fn lorenz_geometry(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_slope: f64 = 0.0;
    let mut violations = 0;
    let mut above = 0;
    let (mut checked, mut skipped) = (0, 0);
    for k in 0..20 {
        let grid = if k % 2 == 0 { log_grid(1e-3, 1e3, 300) } else { Arc::new(WealthGrid::linear(50.0, 300).unwrap()) };
        let smooth = random_state(grid.clone(), &mut rng);
        // Half the cases get node-wise multiplicative noise.
        let d = if k % 4 < 2 {
            smooth
        } else {
            let noisy: Vec<f64> = smooth.density().iter().map(|v| v * rng.random_range(0.0..2.0)).collect();
            smooth.with_density(noisy).unwrap()
        };
        let m = d.moments();
        let curve = d.lorenz_curve();
        let pts = curve.points();
        for (index, slope) in curve.slopes() {
            // Near F = 1 the increments fall below what f64 resolves in F.
            let df = pts[index].0 - pts[index - 1].0;
            if df < 1e-8 {
                skipped += 1;
                continue;
            }
            checked += 1;
            let w = grid.nodes()[index - 1];
            let expected = m.n / m.w * w;
            worst_slope = worst_slope.max((slope - expected).abs() / expected.max(1.0));
        }
        violations += curve.violations(1e-12).len();
        above += curve.points().iter().filter(|(f, l)| *l > *f + 1e-12).count();
    }
    r.check(
        "lorenz geometry: slope = (N/W) w, slopes non-decreasing, L <= F (20 distributions)",
        worst_slope <= 1e-6 && violations == 0 && above == 0,
        format!(
            "max relative slope error {worst_slope:.1e} over {checked} segments ({skipped} with dF < 1e-8 skipped), {violations} invariant violations, {above} points above the diagonal"
        ),
    );
}

fn main() -> ExitCode {
    let mut r = Report { unexpected: 0 };
    gini_oracles(&mut r);
    frechet(&mut r);
    boltzmann_h_theorem(&mut r);
    fp_conservation(&mut r);
    integration_by_parts(&mut r);
    small_beta(&mut r);
    condensation(&mut r);
    lorenz_geometry(&mut r);
    if r.unexpected > 0 {
        println!("{} criteria failed", r.unexpected);
        ExitCode::FAILURE
    } else {
        println!("all criteria met except those marked known");
        ExitCode::SUCCESS
    }
}
