//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and exits
//! non-zero if any check fails that is not on the documented expected-failure
//! list (see README).

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracevo::error::Error;
use fracevo::fit::{fit_power_law, geomspace};
use fracevo::generator::{lp_norm, GeneratorFamily, Preset};
use fracevo::mild::{
    calibrate_kappa, continue_solution, global_params, global_smallness_check, local_params, picard_semilinear,
    solve_linear, ContinuationOptions, FracParams, MildStatus, PicardOptions, SemilinearSpec,
};
use fracevo::oracle::{autonomous_closed_form, l1_grading, l1_solve};
use fracevo::specfun::{
    beta_convolution, beta_convolution_quadrature, mittag_leffler, wright_moment, wright_moment_quadrature,
    wright_phi, FracOrder, SeriesAccuracy,
};
use fracevo::subordination::SubordinationQuadrature;
use fracevo::timegrid::TimeGrid;
use fracevo::ultra::{measure_semigroup_lambda, solution_window, verify_p_decay, verify_s_decay, decay_constants};
use fracevo::volterra::{resolve_kernels, solution_operators, VolterraOptions};

/// Checks that fail on a literal value the implemented formula cannot reproduce.
const EXPECTED_FAILURES: &[(&str, &str)] = &[(
    "8.local-a",
    "quoted a = 0.875 disagrees with a = 1 - α + (αλ/2)(1 - 1/p) = 0.6875; b and q match the formula",
)];

struct Outcome {
    id: String,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    fn check(&mut self, id: impl Into<String>, pass: bool, detail: impl Into<String>) {
        let o = Outcome { id: id.into(), pass, detail: detail.into() };
        let tag = match (o.pass, expected_failure(&o.id)) {
            (true, _) => "PASS".to_string(),
            (false, Some(why)) => format!("FAIL (expected: {why})"),
            (false, None) => "FAIL".to_string(),
        };
        println!("{tag:<6} {:<22} {}", o.id, o.detail);
        self.outcomes.push(o);
    }

    fn error(&mut self, id: &str, e: Error) {
        self.check(id, false, format!("error: {e}"));
    }
}

fn expected_failure(id: &str) -> Option<&'static str> {
    EXPECTED_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why)
}

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn quad(alpha: f64) -> SubordinationQuadrature {
    SubordinationQuadrature::new(FracOrder::new(alpha).unwrap(), 16).unwrap()
}

fn special_functions(r: &mut Report) {
    let mut worst_mass: f64 = 0.0;
    let mut worst_moment: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.7] {
        let a = FracOrder::new(alpha).unwrap();
        worst_mass = worst_mass.max((wright_moment_quadrature(a, 0.0).unwrap() - 1.0).abs());
        for delta in [0.5, 1.0, 2.0] {
            let e = rel(wright_moment_quadrature(a, delta).unwrap(), wright_moment(a, delta).unwrap());
            worst_moment = worst_moment.max(e);
        }
    }
    r.check("1.wright-mass", worst_mass < 1e-8, format!("max |∫Φ - 1| = {worst_mass:.2e} (tol 1e-8)"));
    r.check("1.wright-moments", worst_moment < 1e-7, format!("max rel err = {worst_moment:.2e} (tol 1e-7)"));

    let half = FracOrder::new(0.5).unwrap();
    let worst_half = (0..=200)
        .map(|i| {
            let z = 5.0 * i as f64 / 200.0;
            let want = (-z * z / 4.0).exp() / PI.sqrt();
            rel(wright_phi(half, z, SeriesAccuracy::default()).unwrap(), want)
        })
        .fold(0.0, f64::max);
    r.check("1.wright-half", worst_half < 1e-8, format!("max rel err on [0,5] = {worst_half:.2e} (tol 1e-8)"));

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let worst_beta = (0..100)
        .map(|_| {
            let alpha = rng.random_range(0.1..2.0);
            let beta = rng.random_range(0.1..2.0);
            let tau = rng.random_range(0.0..1.0);
            let t = tau + rng.random_range(0.01..2.0);
            rel(beta_convolution_quadrature(alpha, beta, tau, t).unwrap(), beta_convolution(alpha, beta, tau, t).unwrap())
        })
        .fold(0.0, f64::max);
    r.check("1.beta-identity", worst_beta < 1e-8, format!("max rel err over 100 tuples = {worst_beta:.2e} (tol 1e-8)"));
}

fn subordination(r: &mut Report) {
    let mut worst_s: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.7] {
        for lambda in [0.5, 2.0] {
            let fam = GeneratorFamily::scalar_constant(lambda, 2.0).unwrap();
            let grid = TimeGrid::graded(2.0, 32, TimeGrid::default_grading(alpha)).unwrap();
            let (_, ops) = solution_operators(&fam, &grid, &quad(alpha), &VolterraOptions::default()).unwrap();
            for k in 1..grid.len() {
                let x = -lambda * grid.t(k).powf(alpha);
                worst_s = worst_s.max(rel(ops.s(k, 0)[(0, 0)], mittag_leffler(alpha, 1.0, x).unwrap()));
                worst_p = worst_p.max(rel(ops.p_weighted(k, 0)[(0, 0)], mittag_leffler(alpha, alpha, x).unwrap()));
            }
        }
    }
    r.check("2.scalar-S", worst_s < 1e-6, format!("max rel err vs E_α = {worst_s:.2e} (tol 1e-6)"));
    r.check("2.scalar-P", worst_p < 1e-6, format!("max rel err vs E_α,α = {worst_p:.2e} (tol 1e-6)"));
}

fn volterra(r: &mut Report) {
    let alpha = 0.5;
    let opts = VolterraOptions { tol: 1e-10, ..Default::default() };
    let eps = GeneratorFamily::scalar(|t| -2.0 * (1.0 + 0.5 * t), 1.0, 1.0).unwrap();
    let tv = GeneratorFamily::from_preset(Preset::Timevarying1d, 15, 1.0).unwrap();
    for (name, fam, steps) in [("eps", &eps, 32), ("timevarying", &tv, 16)] {
        let grid = TimeGrid::graded(1.0, steps, TimeGrid::default_grading(alpha)).unwrap();
        match resolve_kernels(fam, &grid, &quad(alpha), &opts) {
            Ok(ker) => {
                let res = ker.q_trace.residual.max(ker.r_trace.residual);
                r.check(
                    format!("3.residual-{name}"),
                    res < 1e-7,
                    format!("sup residual = {res:.2e} after {}/{} sweeps (tol 1e-7)", ker.q_trace.iterations, ker.r_trace.iterations),
                );
            }
            Err(e) => r.error(&format!("3.residual-{name}"), e),
        }
    }

    let mut all_zero = true;
    let mut names = Vec::new();
    for preset in [Preset::Laplace1d, Preset::Reaction1d, Preset::Advection1d, Preset::Laplace2d] {
        let fam = GeneratorFamily::from_preset(preset, 7, 1.0).unwrap();
        let grid = TimeGrid::graded(1.0, 8, 1.5).unwrap();
        let ker = resolve_kernels(&fam, &grid, &quad(alpha), &opts).unwrap();
        let zero = (1..grid.len()).all(|k| {
            (0..k).all(|j| [&ker.q, &ker.r].iter().all(|t| t.get(k, j).is_some_and(|m| m.iter().all(|&x| x == 0.0))))
        });
        all_zero &= zero;
        names.push(preset.name());
    }
    r.check("3.autonomous-zero", all_zero, format!("Q = R = 0 exactly on {}", names.join(", ")));
}

fn representation_vs_oracle(r: &mut Report) {
    let alpha = 0.5;
    let fam = GeneratorFamily::from_preset(Preset::Timevarying1d, 15, 1.0).unwrap();
    let u0 = fam.grid().sample(|x| (PI * x[0]).sin());
    let zero = DVector::zeros(fam.len());
    let discrepancy = |steps: usize| {
        let grid = TimeGrid::graded(1.0, steps, l1_grading(alpha)).unwrap();
        let (_, ops) = solution_operators(&fam, &grid, &quad(alpha), &VolterraOptions::default()).unwrap();
        let rep = solve_linear(&fam, &ops, |_| zero.clone(), &u0).unwrap();
        let l1 = l1_solve(&fam, &grid, &u0, |_| zero.clone(), |_| 0.0, alpha).unwrap();
        let spatial = fam.grid();
        let diff = rep.values.iter().zip(&l1.values).map(|(a, b)| lp_norm(&(a - b), spatial, 2.0)).fold(0.0, f64::max);
        let scale = rep.values.iter().map(|a| lp_norm(a, spatial, 2.0)).fold(0.0, f64::max);
        diff / scale
    };
    let (coarse, fine) = (discrepancy(64), discrepancy(128));
    r.check("4.l1-discrepancy", coarse < 0.02, format!("relative max-in-time L2 gap = {coarse:.3e} at K = 64 (tol 2e-2)"));
    r.check("4.l1-refinement", fine < coarse, format!("K = 64: {coarse:.3e} -> K = 128: {fine:.3e}"));
}

fn ultracontractivity(r: &mut Report) -> f64 {
    let alpha = 0.5;
    let fam = GeneratorFamily::from_preset(Preset::Laplace1d, 63, 1.0).unwrap();
    let (tau_lo, tau_hi) = (1e-3, 2e-2);
    let lam = measure_semigroup_lambda(&fam, &geomspace(tau_lo, tau_hi, 12), 1.0, f64::INFINITY).unwrap();
    r.check("5.semigroup-lambda", lam > 0.0, format!("measured lambda_A = {lam:.4}"));
    let (window, horizon) = solution_window(alpha, tau_lo, tau_hi).unwrap();
    let grid = TimeGrid::graded(horizon, 48, 2.0).unwrap();
    let (_, ops) = solution_operators(&fam, &grid, &quad(alpha), &VolterraOptions::default()).unwrap();
    let pairs = [(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)];
    let s = verify_s_decay(&fam, &ops, &pairs, Some(window), lam).unwrap();
    let p = verify_p_decay(&fam, &ops, &pairs, Some(window), lam).unwrap();
    for (label, report) in [("S", &s), ("P", &p)] {
        for f in &report.fits {
            r.check(
                format!("5.{label}({},{})", f.p, f.q),
                f.slope_error < 0.1,
                format!("slope {:.4} vs {:.4}, rel err {:.2e} (tol 0.1)", f.fit.slope, f.expected_slope, f.slope_error),
            );
        }
        for sk in &report.skipped {
            println!("       {label} pair skipped: {sk:?}");
        }
    }
    lam
}

fn local_existence(r: &mut Report, lambda_a: f64) {
    let alpha = 0.5;
    let horizon = 0.5;
    let fam = GeneratorFamily::from_preset(Preset::Laplace1d, 63, horizon).unwrap();
    let grid = TimeGrid::graded(horizon, 16, 1.5).unwrap();
    let (_, ops) = solution_operators(&fam, &grid, &quad(alpha), &VolterraOptions::default()).unwrap();
    let u0 = fam.grid().sample(|x| 2.0 * (PI * x[0]).sin());
    let p = 2.0;
    let lp = local_params(alpha, lambda_a, p);
    let params = FracParams::new(FracOrder::new(alpha).unwrap(), lambda_a, p, 1.0, None, 1.0).unwrap();
    let params = params.with_kappa(calibrate_kappa(&fam, &ops, &u0, &params).unwrap()).unwrap();
    let spec = SemilinearSpec::power(2.0, p, fam.grid()).unwrap();
    let opts = PicardOptions::default();
    println!("       local params: a = {:.4}, b = {:.4}, kappa = {:.4}", lp.a, lp.b, params.kappa);
    match picard_semilinear(&fam, &ops, &spec, &u0, &params, &opts) {
        Ok(sol) => {
            let ratios = sol.contraction_ratios();
            let late = ratios.iter().skip(3).fold(0.0, |m: f64, &x| m.max(x));
            r.check(
                "6.geometric-decay",
                sol.status == MildStatus::Converged && ratios.len() > 3 && late < 0.9,
                format!("{} sweeps, max ratio after sweep 3 = {late:.3} (tol 0.9)", sol.iterations),
            );
            r.check("6.residual", sol.residual < 5.0 * opts.tol, format!("residual = {:.2e} (tol {:.0e})", sol.residual, 5.0 * opts.tol));
            let worst = sol.weighted.iter().fold(0.0, |m: f64, &x| m.max(x));
            r.check("6.weighted-bound", worst < 2.0 * params.kappa, format!("max weighted = {worst:.4} vs 2κ = {:.4}", 2.0 * params.kappa));
        }
        Err(e) => r.error("6.picard", e),
    }
}

fn global_behaviour(r: &mut Report, lambda_a: f64) {
    let alpha = 0.5;
    let p = 4.0;
    let horizon = 2.0;
    let steps = 32;
    let fam = GeneratorFamily::from_preset(Preset::Laplace1d, 15, horizon).unwrap();
    let grid = TimeGrid::graded(horizon, steps, 1.5).unwrap();
    let (_, ops) = solution_operators(&fam, &grid, &quad(alpha), &VolterraOptions::default()).unwrap();
    let spec = SemilinearSpec::power(p, p, fam.grid()).unwrap();
    let base = FracParams::new(FracOrder::new(alpha).unwrap(), lambda_a, p, 1.0, None, 1.0).unwrap();
    let constants = decay_constants(&fam, &ops, &base).unwrap();
    let shape = fam.grid().sample(|x| (PI * x[0]).sin());
    let probe = global_smallness_check(&shape, fam.grid(), &base, constants, &spec).unwrap();
    // lhs scales like ε^{(1-a)/b}; aim for lhs = 1/2.
    let scale = (0.5 / probe.lhs).powf(base.b / (1.0 - base.a));
    let u0 = &shape * scale;
    let small = global_smallness_check(&u0, fam.grid(), &base, constants, &spec).unwrap();
    r.check(
        "7.smallness",
        small.passes,
        format!("q = {:.4}, C_S = {:.3}, C_P = {:.3}, lhs = {:.3} at amplitude {scale:.3e}", base.q_global, constants.c_s, constants.c_p, small.lhs),
    );

    let window = steps / 4;
    let first = grid.prefix(window + 1).unwrap();
    let (_, short) = solution_operators(&fam, &first, &quad(alpha), &VolterraOptions::default()).unwrap();
    let params = base.with_kappa(calibrate_kappa(&fam, &short, &u0, &base).unwrap()).unwrap();
    let opts = ContinuationOptions { window_nodes: Some(window), ..Default::default() };
    let outcome = picard_semilinear(&fam, &short, &spec, &u0, &params, &opts.picard)
        .and_then(|start| continue_solution(&start, &fam, &ops, &spec, &params, &opts));
    match outcome {
        Ok(sol) => {
            let bound = 2.0 * params.kappa;
            let worst = sol.windows.iter().map(|w| w.weighted_sup).fold(0.0, f64::max);
            r.check(
                "7.four-windows",
                sol.status == MildStatus::Converged && sol.windows.len() >= 4 && sol.values.len() == grid.len() && worst <= bound,
                format!("{} windows to t = {}, max weighted = {worst:.4e} vs 2κ = {bound:.4e}", sol.windows.len(), grid.horizon()),
            );
        }
        Err(e) => r.error("7.four-windows", e),
    }

    let big = &u0 * 100.0;
    let status = match picard_semilinear(&fam, &short, &spec, &big, &params, &opts.picard) {
        Err(Error::Precondition { .. }) => "precondition-failed".to_string(),
        Err(e) => format!("error: {e}"),
        Ok(start) => match continue_solution(&start, &fam, &ops, &spec, &params, &opts) {
            Ok(sol) if sol.status == MildStatus::Blowup => "blowup".to_string(),
            Ok(sol) => format!("{:?}", sol.status),
            Err(e) => format!("error: {e}"),
        },
    };
    r.check("7.large-data", status == "blowup" || status == "precondition-failed", format!("100x data: {status}"));
}

fn parameter_calculus(r: &mut Report) {
    let (alpha, lambda, p) = (0.5, 1.5, 2.0);
    let lp = local_params(alpha, lambda, p);
    let q = global_params(alpha, lambda, p, lp.b).unwrap();
    r.check("8.local-a", lp.a == 0.875, format!("a = {} (quoted 0.875)", lp.a));
    r.check("8.local-b", lp.b == 0.3125, format!("b = {}", lp.b));
    r.check("8.global-q", q == 1.5, format!("q = {q}"));

    // Independent route: b from the power-rule identity (1-a)/b = p-1, q from 1/q = b/(αλ) + 1/(2p).
    let a = 1.0 - alpha * (1.0 - lambda * (0.5 - 0.5 / p));
    let b = (1.0 - a) / (p - 1.0);
    let q2 = 1.0 / (b / (alpha * lambda) + 0.5 / p);
    let gap = (a - lp.a).abs().max((b - lp.b).abs()).max((q2 - q).abs());
    r.check("8.rederivation", gap <= 4.0 * f64::EPSILON, format!("max |difference| = {gap:.1e}"));
}

fn oracle_order(r: &mut Report) {
    let (lambda, alpha) = (1.0, 0.5);
    let fam = GeneratorFamily::scalar_constant(lambda, 1.0).unwrap();
    let u0 = DVector::from_element(1, 1.0);
    let exact = autonomous_closed_form(lambda, alpha, 1.0, 1.0).unwrap();
    let levels = [16, 32, 64, 128];
    let errs: Vec<f64> = levels
        .iter()
        .map(|&k| {
            let grid = TimeGrid::uniform(1.0, k).unwrap();
            let sol = l1_solve(&fam, &grid, &u0, |_| DVector::zeros(1), |_| 0.0, alpha).unwrap();
            (sol.values[k][0] - exact).abs()
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let hs: Vec<f64> = levels.iter().map(|&k| 1.0 / k as f64).collect();
    let fitted = fit_power_law(&hs, &errs).unwrap().slope;
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    r.check(
        "9.l1-order",
        worst >= alpha - 0.1,
        format!("pairwise orders {orders:.3?}, fitted {fitted:.3} (need >= {:.1})", alpha - 0.1),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut r = Report::default();
    special_functions(&mut r);
    subordination(&mut r);
    volterra(&mut r);
    representation_vs_oracle(&mut r);
    let lambda_a = ultracontractivity(&mut r);
    local_existence(&mut r, lambda_a);
    global_behaviour(&mut r, lambda_a);
    parameter_calculus(&mut r);
    oracle_order(&mut r);

    let failed: Vec<&Outcome> = r.outcomes.iter().filter(|o| !o.pass).collect();
    let unexpected: Vec<&&Outcome> = failed.iter().filter(|o| expected_failure(&o.id).is_none()).collect();
    println!(
        "\n{} checks: {} passed, {} failed ({} expected) in {:.1}s",
        r.outcomes.len(),
        r.outcomes.len() - failed.len(),
        failed.len(),
        failed.len() - unexpected.len(),
        start.elapsed().as_secs_f64()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
