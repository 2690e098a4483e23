//! Subcommand pipelines. Each returns [`Artifacts`]; library errors that stop
//! a pipeline become a failed status rather than a process error so the
//! partial report is still written.

use nalgebra::DVector;
use serde_json::{json, Value};

use fracevo::fit::geomspace;
use fracevo::generator::{check_at_conditions, default_probe_lambdas, lp_norm, GeneratorFamily, ProbeKind};
use fracevo::mild::{
    calibrate_kappa, continue_solution, global_smallness_check, picard_semilinear, solve_linear, ContinuationOptions,
    FracParams, MildSolution, MildStatus, PicardOptions, SemilinearSpec,
};
use fracevo::oracle::{l1_solve, OracleSolution};
use fracevo::specfun::{mittag_leffler, wright_phi, FracOrder, SeriesAccuracy};
use fracevo::subordination::SubordinationQuadrature;
use fracevo::timegrid::TimeGrid;
use fracevo::ultra::{decay_constants, measure_semigroup_lambda, solution_window, verify_p_decay, verify_s_decay, UltraReport};
use fracevo::volterra::{solution_operators, SolutionOperatorTable, VolterraOptions};
use fracevo::{Exec, Result};

use crate::config::{Family, NonlinearityKind, RunConfig, Shape};
use crate::error::RunStatus;
use crate::output::{num, Artifacts, Table};

/// Objects shared by the solver pipelines.
struct Setup {
    family: GeneratorFamily,
    grid: TimeGrid,
    quad: SubordinationQuadrature,
    volterra: VolterraOptions,
    exec: Exec,
    u0: DVector<f64>,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        Self::with_horizon(cfg, cfg.grid.horizon)
    }

    fn with_horizon(cfg: &RunConfig, horizon: f64) -> Result<Self> {
        let family = build_family(cfg, horizon)?;
        let grid = TimeGrid::graded(horizon, cfg.grid.steps, grading(cfg))?;
        let alpha = FracOrder::new(cfg.frac.alpha)?;
        let quad = SubordinationQuadrature::new(alpha, cfg.grid.quad_nodes)?;
        let exec = if cfg.parallel { Exec::Parallel } else { Exec::Sequential };
        let volterra = VolterraOptions { tol: cfg.tolerances.volterra_tol, max_iter: cfg.tolerances.volterra_max_iter, exec };
        let u0 = initial_datum(cfg, &family);
        Ok(Self { family, grid, quad, volterra, exec, u0 })
    }

    fn operators(&self, grid: &TimeGrid) -> Result<SolutionOperatorTable> {
        Ok(solution_operators(&self.family, grid, &self.quad, &self.volterra)?.1)
    }

    fn picard(&self, cfg: &RunConfig) -> PicardOptions {
        PicardOptions { tol: cfg.tolerances.picard_tol, max_iter: cfg.tolerances.picard_max_iter, exec: self.exec }
    }
}

fn grading(cfg: &RunConfig) -> f64 {
    cfg.grid.grading_r.expect("resolved config carries a grading")
}

fn build_family(cfg: &RunConfig, horizon: f64) -> Result<GeneratorFamily> {
    let family = cfg.family().map_err(|e| fracevo::Error::Domain(e.to_string()))?;
    match family {
        Family::Preset(p) => GeneratorFamily::from_preset(p, cfg.grid.n, horizon),
        Family::Scalar { rate, eps: 0.0 } => GeneratorFamily::scalar_constant(rate, horizon),
        Family::Scalar { rate, eps } => GeneratorFamily::scalar(move |t| -rate * (1.0 + eps * t), 1.0, horizon),
    }
}

fn initial_datum(cfg: &RunConfig, family: &GeneratorFamily) -> DVector<f64> {
    let init = &cfg.initial;
    let grid = family.grid();
    if grid.dim() == 0 || init.shape == Shape::Constant {
        return DVector::from_element(family.len(), init.amplitude);
    }
    let k = f64::from(init.mode) * std::f64::consts::PI;
    grid.sample(|x| init.amplitude * x.iter().map(|xi| (k * xi).sin()).product::<f64>())
}

fn nonlinearity(cfg: &RunConfig, family: &GeneratorFamily) -> Result<SemilinearSpec> {
    let p = cfg.frac.p;
    match cfg.nonlinearity.kind {
        NonlinearityKind::Zero => Ok(SemilinearSpec::zero(p)),
        NonlinearityKind::Linear => SemilinearSpec::linear(cfg.nonlinearity.coefficient, p, family.grid()),
        NonlinearityKind::Power => {
            SemilinearSpec::power(cfg.nonlinearity.p_power.expect("resolved config carries p_power"), p, family.grid())
        }
    }
}

/// λ_A from the configuration, or measured from ‖exp(τL(0))‖_{1→∞}.
fn smoothing_exponent(cfg: &RunConfig, family: &GeneratorFamily) -> Result<(f64, bool)> {
    match cfg.frac.lambda_a {
        Some(l) => Ok((l, false)),
        None if family.grid().dim() == 0 => Err(fracevo::Error::Domain(
            "scalar families have no smoothing exponent; set frac.lambda_a".into(),
        )),
        None => {
            let taus = geomspace(cfg.ultra.tau_lo, cfg.ultra.tau_hi, 12);
            Ok((measure_semigroup_lambda(family, &taus, 1.0, f64::INFINITY)?, true))
        }
    }
}

fn frac_params(cfg: &RunConfig, family: &GeneratorFamily, kappa: f64) -> Result<(FracParams, bool)> {
    let (lambda_a, measured) = smoothing_exponent(cfg, family)?;
    let theta = cfg.frac.theta.unwrap_or(family.holder_theta());
    let params = FracParams::new(FracOrder::new(cfg.frac.alpha)?, lambda_a, cfg.frac.p, theta, cfg.frac.b, kappa)?;
    Ok((params, measured))
}

fn params_json(params: &FracParams, measured: bool) -> Value {
    json!({
        "alpha": params.alpha.value(),
        "lambda_a": params.lambda_a,
        "lambda_a_measured": measured,
        "p": params.p,
        "theta": params.theta,
        "a": params.a,
        "b": params.b,
        "kappa": params.kappa,
        "q_global": num(params.q_global),
    })
}

fn run(f: impl FnOnce() -> Result<Artifacts>) -> Artifacts {
    f().unwrap_or_else(|e| Artifacts::failed(&e))
}

pub fn specfun_table(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let s = &cfg.specfun;
        let mut table = Table::new("specfun", &["alpha", "z", "wright_phi", "ml_alpha_1", "ml_alpha_alpha"]);
        let acc = SeriesAccuracy::default();
        for &alpha in &s.alphas {
            let order = FracOrder::new(alpha)?;
            for i in 0..s.points {
                let z = s.z_max * i as f64 / (s.points - 1) as f64;
                table.push(vec![
                    alpha.into(),
                    z.into(),
                    wright_phi(order, z, acc)?.into(),
                    mittag_leffler(alpha, 1.0, -z)?.into(),
                    mittag_leffler(alpha, alpha, -z)?.into(),
                ]);
            }
        }
        let rows = table.rows.len();
        Ok(Artifacts::ok(json!({ "rows": rows }), vec![table], vec![format!("{rows} rows of Φ_α(z), E_α(-z), E_α,α(-z)")]))
    })
}

fn trajectory_table(name: &'static str, sol: &MildSolution, family: &GeneratorFamily, r: f64) -> Table {
    let mut t = Table::new(name, &["k", "t", "l2", "l_2p", "weighted"]);
    for (k, v) in sol.values.iter().enumerate() {
        t.push(vec![
            k.into(),
            sol.grid.t(k).into(),
            lp_norm(v, family.grid(), 2.0).into(),
            lp_norm(v, family.grid(), r).into(),
            sol.weighted[k].into(),
        ]);
    }
    t
}

pub fn solve_linear_cmd(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let s = Setup::new(cfg)?;
        let ops = s.operators(&s.grid)?;
        let zero = DVector::zeros(s.family.len());
        let sol = solve_linear(&s.family, &ops, |_| zero.clone(), &s.u0)?;
        let alpha = cfg.frac.alpha;
        let mut table = Table::new("solution", &["k", "t", "l2", "closed_form_gap"]);
        let mut worst: Option<f64> = None;
        let exact_spectral = if s.family.is_time_independent() { s.family.at(0.0)?.spectral().cloned() } else { None };
        for (k, v) in sol.values.iter().enumerate() {
            let t = s.grid.t(k);
            let gap = match &exact_spectral {
                Some(sp) => {
                    let exact = sp.apply_fn(|mu| mittag_leffler(alpha, 1.0, mu * t.powf(alpha)).unwrap_or(f64::NAN), &s.u0);
                    let g = lp_norm(&(v - exact), s.family.grid(), 2.0);
                    worst = Some(worst.unwrap_or(0.0).max(g));
                    g
                }
                None => f64::NAN,
            };
            table.push(vec![k.into(), t.into(), lp_norm(v, s.family.grid(), 2.0).into(), gap.into()]);
        }
        let mut summary = vec![format!("{} nodes on [0, {}], alpha = {alpha}", s.grid.len(), s.grid.horizon())];
        let results = json!({
            "nodes": s.grid.len(),
            "final_l2": lp_norm(sol.values.last().expect("grid has nodes"), s.family.grid(), 2.0),
            "closed_form_max_gap": worst.map(num),
        });
        let mut art = Artifacts::ok(results, vec![table], Vec::new());
        match worst {
            Some(w) => {
                summary.push(format!("max L2 gap vs E_α(L t^α) u0: {w:.3e} (tol {:.1e})", cfg.tolerances.closed_form_tol));
                if !(w < cfg.tolerances.closed_form_tol) {
                    art = art.with_status(RunStatus::AccuracyCeiling, format!("closed-form gap {w:.3e} exceeds tolerance"));
                }
            }
            None => summary.push("generator is time dependent: no closed form".into()),
        }
        art.summary = summary;
        Ok(art)
    })
}

fn picard_table(sol: &MildSolution) -> Table {
    let mut t = Table::new("picard", &["iteration", "distance", "ratio"]);
    let ratios = sol.contraction_ratios();
    for (i, d) in sol.distances.iter().enumerate() {
        let ratio = if i == 0 { f64::NAN } else { ratios[i - 1] };
        t.push(vec![(i + 1).into(), (*d).into(), ratio.into()]);
    }
    t
}

fn windows_table(sol: &MildSolution) -> Table {
    let mut t = Table::new("windows", &["window", "start", "end", "iterations", "weighted_sup"]);
    for (i, w) in sol.windows.iter().enumerate() {
        t.push(vec![i.into(), w.start.into(), w.end.into(), w.iterations.into(), w.weighted_sup.into()]);
    }
    t
}

fn status_of(sol: &MildSolution) -> RunStatus {
    match sol.status {
        MildStatus::Converged => RunStatus::Ok,
        MildStatus::Blowup => RunStatus::Blowup,
        MildStatus::Maxed => RunStatus::NonContraction,
    }
}

/// Picard on the first window, then continuation over the remaining ones.
fn semilinear(cfg: &RunConfig, s: &Setup, params: &FracParams) -> Result<MildSolution> {
    let spec = nonlinearity(cfg, &s.family)?;
    let windows = cfg.continuation.windows;
    let picard = s.picard(cfg);
    if windows == 1 {
        let ops = s.operators(&s.grid)?;
        return picard_semilinear(&s.family, &ops, &spec, &s.u0, params, &picard);
    }
    let per = cfg.grid.steps.div_ceil(windows);
    let first = s.grid.prefix(per + 1)?;
    let short = s.operators(&first)?;
    let start = picard_semilinear(&s.family, &short, &spec, &s.u0, params, &picard)?;
    let ops = s.operators(&s.grid)?;
    let opts = ContinuationOptions { ceiling: cfg.continuation.ceiling, window_nodes: Some(per), picard, ..Default::default() };
    continue_solution(&start, &s.family, &ops, &spec, params, &opts)
}

/// Parameters with κ from the config or calibrated on the first window.
fn calibrated_params(cfg: &RunConfig, s: &Setup) -> Result<(FracParams, bool)> {
    let (params, measured) = frac_params(cfg, &s.family, cfg.frac.kappa.unwrap_or(1.0))?;
    if cfg.frac.kappa.is_some() {
        return Ok((params, measured));
    }
    let per = cfg.grid.steps.div_ceil(cfg.continuation.windows);
    let first = s.grid.prefix(per + 1)?;
    let kappa = calibrate_kappa(&s.family, &s.operators(&first)?, &s.u0, &params)?;
    Ok((params.with_kappa(kappa)?, measured))
}

fn solution_artifacts(cfg: &RunConfig, s: &Setup, sol: &MildSolution, params: &FracParams, measured: bool) -> Artifacts {
    let r = params.norm_exponent();
    let status = status_of(sol);
    let reached = sol.grid.horizon();
    let results = json!({
        "params": params_json(params, measured),
        "status": format!("{:?}", sol.status),
        "iterations": sol.iterations,
        "residual": sol.residual,
        "weighted_sup": sol.weighted_sup,
        "two_kappa": 2.0 * params.kappa,
        "windows": sol.windows.len(),
        "reached": reached,
        "horizon": s.grid.horizon(),
    });
    let summary = vec![
        format!("nonlinearity {}, a = {:.4}, b = {:.4}, kappa = {:.4e}", nonlinearity_label(cfg), params.a, params.b, params.kappa),
        format!("{:?} after {} sweeps, residual {:.3e}, reached t = {reached} of {}", sol.status, sol.iterations, sol.residual, s.grid.horizon()),
        format!("weighted sup {:.4e} vs 2κ = {:.4e} over {} window(s)", sol.weighted_sup, 2.0 * params.kappa, sol.windows.len()),
    ];
    let mut art = Artifacts::ok(
        results,
        vec![trajectory_table("trajectory", sol, &s.family, r), picard_table(sol), windows_table(sol)],
        summary,
    );
    if status != RunStatus::Ok {
        art = art.with_status(status, format!("solution status {:?}", sol.status));
    }
    art
}

fn nonlinearity_label(cfg: &RunConfig) -> String {
    match cfg.nonlinearity.kind {
        NonlinearityKind::Zero => "zero".into(),
        NonlinearityKind::Linear => format!("linear(c = {})", cfg.nonlinearity.coefficient),
        NonlinearityKind::Power => format!("power(s = {})", cfg.nonlinearity.p_power.unwrap_or(cfg.frac.p)),
    }
}

pub fn solve_semilinear_cmd(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let s = Setup::new(cfg)?;
        let (params, measured) = calibrated_params(cfg, &s)?;
        let sol = semilinear(cfg, &s, &params)?;
        Ok(solution_artifacts(cfg, &s, &sol, &params, measured))
    })
}

fn oracle(cfg: &RunConfig, s: &Setup) -> Result<OracleSolution> {
    let spec = nonlinearity(cfg, &s.family)?;
    let zero = DVector::zeros(s.family.len());
    let scalar = |x: f64| spec.apply(&DVector::from_element(1, x))[0];
    l1_solve(&s.family, &s.grid, &s.u0, |_| zero.clone(), scalar, cfg.frac.alpha)
}

pub fn oracle_solve(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let s = Setup::new(cfg)?;
        let sol = oracle(cfg, &s)?;
        let mut table = Table::new("oracle", &["k", "t", "l2", "linf"]);
        for (k, v) in sol.values.iter().enumerate() {
            table.push(vec![
                k.into(),
                s.grid.t(k).into(),
                lp_norm(v, s.family.grid(), 2.0).into(),
                lp_norm(v, s.family.grid(), f64::INFINITY).into(),
            ]);
        }
        let last = sol.values.last().expect("grid has nodes");
        let results = json!({ "nodes": s.grid.len(), "final_l2": lp_norm(last, s.family.grid(), 2.0) });
        let summary = vec![format!("L1 scheme, {} nodes, grading {}, nonlinearity {}", s.grid.len(), grading(cfg), nonlinearity_label(cfg))];
        Ok(Artifacts::ok(results, vec![table], summary))
    })
}

pub fn compare(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let s = Setup::new(cfg)?;
        let rep = match cfg.nonlinearity.kind {
            NonlinearityKind::Zero => {
                let zero = DVector::zeros(s.family.len());
                solve_linear(&s.family, &s.operators(&s.grid)?, |_| zero.clone(), &s.u0)?
            }
            _ => {
                let (params, _) = calibrated_params(cfg, &s)?;
                semilinear(cfg, &s, &params)?
            }
        };
        let l1 = oracle(cfg, &s)?;
        let spatial = s.family.grid();
        let mut table = Table::new("compare", &["k", "t", "representation_l2", "oracle_l2", "gap_l2"]);
        let (mut gap, mut scale) = (0.0f64, 0.0f64);
        for (k, (a, b)) in rep.values.iter().zip(&l1.values).enumerate() {
            let d = lp_norm(&(a - b), spatial, 2.0);
            let na = lp_norm(a, spatial, 2.0);
            gap = gap.max(d);
            scale = scale.max(na);
            table.push(vec![k.into(), s.grid.t(k).into(), na.into(), lp_norm(b, spatial, 2.0).into(), d.into()]);
        }
        let relative = if scale > 0.0 { gap / scale } else { gap };
        let results = json!({ "max_gap": gap, "max_norm": scale, "relative_gap": relative, "tolerance": cfg.tolerances.compare_tol });
        let summary = vec![format!(
            "max-in-time L2 gap {gap:.4e}, relative {relative:.4e} (tol {:.1e}) on {} nodes",
            cfg.tolerances.compare_tol,
            s.grid.len()
        )];
        let art = Artifacts::ok(results, vec![table], summary);
        Ok(if relative < cfg.tolerances.compare_tol {
            art
        } else {
            art.with_status(RunStatus::AccuracyCeiling, format!("relative gap {relative:.3e} exceeds tolerance"))
        })
    })
}

fn ultra_rows(table: &mut Table, label: &str, report: &UltraReport) {
    for f in &report.fits {
        table.push(vec![
            label.into(),
            f.p.into(),
            f.q.into(),
            f.expected_slope.into(),
            f.fit.slope.into(),
            f.slope_error.into(),
            f.fit.r_squared.into(),
            "".into(),
        ]);
    }
    for sk in &report.skipped {
        table.push(vec![
            label.into(),
            sk.p.into(),
            sk.q.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            sk.reason.clone().into(),
        ]);
    }
}

pub fn check_ultra(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let probe = build_family(cfg, cfg.grid.horizon)?;
        let (lambda_a, measured) = smoothing_exponent(cfg, &probe)?;
        let (window, horizon) = solution_window(cfg.frac.alpha, cfg.ultra.tau_lo, cfg.ultra.tau_hi)?;
        let s = Setup::with_horizon(cfg, horizon)?;
        let ops = s.operators(&s.grid)?;
        let pairs: Vec<(f64, f64)> = cfg.ultra.pairs.iter().map(|[p, q]| (p.0, q.0)).collect();
        let sr = verify_s_decay(&s.family, &ops, &pairs, Some(window), lambda_a)?;
        let pr = verify_p_decay(&s.family, &ops, &pairs, Some(window), lambda_a)?;
        let mut slopes = Table::new("slopes", &["operator", "p", "q", "expected_slope", "fitted_slope", "rel_error", "r_squared", "skipped"]);
        ultra_rows(&mut slopes, "S", &sr);
        ultra_rows(&mut slopes, "P", &pr);
        let mut samples = Table::new("samples", &["operator", "p", "q", "t", "norm"]);
        for (label, rep) in [("S", &sr), ("P", &pr)] {
            for f in &rep.fits {
                for &(t, n) in &f.samples {
                    samples.push(vec![label.into(), f.p.into(), f.q.into(), t.into(), n.into()]);
                }
            }
        }
        let worst = sr.fits.iter().chain(&pr.fits).map(|f| f.slope_error).fold(0.0, f64::max);
        let results = json!({
            "lambda_a": lambda_a,
            "lambda_a_measured": measured,
            "fit_window": [window.0, window.1],
            "horizon": horizon,
            "fits": sr.fits.len() + pr.fits.len(),
            "skipped": sr.skipped.len() + pr.skipped.len(),
            "max_slope_error": worst,
            "tolerance": cfg.tolerances.slope_tol,
        });
        let mut summary = vec![format!(
            "lambda_A = {lambda_a:.4}{}, fit window [{:.3e}, {:.3e}], horizon {horizon:.3e}",
            if measured { " (measured)" } else { "" },
            window.0,
            window.1
        )];
        for (label, rep) in [("S", &sr), ("P", &pr)] {
            for f in &rep.fits {
                summary.push(format!(
                    "{label} ({}, {}): slope {:.4} vs {:.4}, rel err {:.2e}",
                    f.p, f.q, f.fit.slope, f.expected_slope, f.slope_error
                ));
            }
        }
        let art = Artifacts::ok(results, vec![slopes, samples], summary);
        Ok(if worst < cfg.tolerances.slope_tol {
            art
        } else {
            art.with_status(RunStatus::AccuracyCeiling, format!("slope error {worst:.3e} exceeds tolerance"))
        })
    })
}

pub fn check_at(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let family = build_family(cfg, cfg.grid.horizon)?;
        let probe_ts: Vec<f64> = (0..4).map(|i| cfg.grid.horizon * i as f64 / 4.0).collect();
        let report = check_at_conditions(&family, &probe_ts, &default_probe_lambdas())?;
        let mut table = Table::new("at_samples", &["kind", "t", "s", "lambda", "value"]);
        for smp in &report.samples {
            let kind = match smp.kind {
                ProbeKind::Resolvent => "resolvent",
                ProbeKind::Holder => "holder",
            };
            table.push(vec![kind.into(), smp.t.into(), smp.s.into(), smp.lambda.into(), smp.value.into()]);
        }
        let results = json!({ "m_est": report.m_est, "l_est": report.l_est, "theta_fit": report.theta_fit, "theta_declared": family.holder_theta() });
        let summary = vec![
            format!("resolvent bound M ≈ {:.4}", report.m_est),
            format!("Hölder constant L ≈ {:.4e} at fitted exponent {:.4} (declared {})", report.l_est, report.theta_fit, family.holder_theta()),
        ];
        Ok(Artifacts::ok(results, vec![table], summary))
    })
}

pub fn check_global(cfg: &RunConfig) -> Artifacts {
    run(|| {
        let s = Setup::new(cfg)?;
        let spec = nonlinearity(cfg, &s.family)?;
        let ops = s.operators(&s.grid)?;
        let (base, measured) = frac_params(cfg, &s.family, cfg.frac.kappa.unwrap_or(1.0))?;
        let constants = decay_constants(&s.family, &ops, &base)?;
        let check = global_smallness_check(&s.u0, s.family.grid(), &base, constants, &spec)?;
        let results_check = json!({
            "c_s": constants.c_s,
            "c_p": constants.c_p,
            "beta_integral": check.beta_integral,
            "data_norm": check.data_norm,
            "epsilon": check.epsilon,
            "envelope_const": check.envelope_const,
            "lhs": check.lhs,
            "passes": check.passes,
        });
        let mut summary = vec![format!(
            "q = {:.4}, C_S = {:.4}, C_P = {:.4}, smallness lhs = {:.4e} ({})",
            base.q_global,
            constants.c_s,
            constants.c_p,
            check.lhs,
            if check.passes { "passes" } else { "fails" }
        )];
        if !check.passes {
            let results = json!({ "params": params_json(&base, measured), "smallness": results_check });
            let art = Artifacts::ok(results, Vec::new(), summary);
            return Ok(art.with_status(RunStatus::Precondition, "small-data condition fails"));
        }
        let (params, _) = calibrated_params(cfg, &s)?;
        let sol = semilinear(cfg, &s, &params)?;
        let mut art = solution_artifacts(cfg, &s, &sol, &params, measured);
        summary.append(&mut art.summary);
        art.summary = summary;
        if let Value::Object(m) = &mut art.results {
            m.insert("smallness".into(), results_check);
        }
        Ok(art)
    })
}
