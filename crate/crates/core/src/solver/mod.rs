//! Kelley cutting-plane solver over a dense LP core.
//!
//! All deterministic linear structure (balance, participation, reserve-sum,
//! boxes) lives in the base LP; chance constraints enter as linear cuts at
//! evaluated points. Every cut under-estimates its convex constraint, so
//! the LP optimum is a valid lower bound at every iteration and a feasible
//! LP optimum is optimal outright. A feasible incumbent is maintained by a
//! bisection line search from the LP point toward a conservative anchor
//! dispatch; cuts taken at infeasible line-search midpoints double as
//! central cuts and do most of the convergence work.

mod lp;

pub use lp::{lp_solve, LinearProgram, LpOptions, LpRow, LpSense, LpSolution, LpStatus};

use nalgebra::DVector;

use crate::chance::{
    build_constraint_set, ConstraintContext, ConstraintEval, ConstraintKind, ConstraintSpec,
    FormulationConfig, PolicyForm,
};
use crate::error::{CoreError, Result};
use crate::netmodel::{FlowMatrix, NetworkCase};
use crate::policy::{AffinePolicy, FluctuationModel, PiecewiseAffinePolicy};

/// Problem family selected for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Standard chance constraints.
    Cc,
    /// Expected-overload (MW) budget.
    WccLinear,
    /// Expected-squared-overload (MW^2) budget.
    WccQuadratic,
}

impl Formulation {
    pub fn kind(self) -> ConstraintKind {
        match self {
            Formulation::Cc => ConstraintKind::Standard,
            Formulation::WccLinear => ConstraintKind::Linear,
            Formulation::WccQuadratic => ConstraintKind::Quadratic,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Cc => "cc",
            Formulation::WccLinear => "wcc-linear",
            Formulation::WccQuadratic => "wcc-quadratic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cc" => Ok(Formulation::Cc),
            "wcc-linear" => Ok(Formulation::WccLinear),
            "wcc-quadratic" => Ok(Formulation::WccQuadratic),
            other => Err(CoreError::Config(format!(
                "unknown formulation '{other}' (expected cc, wcc-linear or wcc-quadratic)"
            ))),
        }
    }
}

/// Residual tolerance per constraint family, in the family's own units.
pub fn residual_tolerance(kind: ConstraintKind) -> f64 {
    match kind {
        ConstraintKind::Standard => 1e-6,
        ConstraintKind::Linear => 1e-4,
        ConstraintKind::Quadratic => 1e-3,
    }
}

/// Decision variables of a run: dispatch, participation, and (piecewise
/// runs only) the two reserve blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    pub p: DVector<f64>,
    pub alpha: DVector<f64>,
    pub beta_plus: Option<DVector<f64>>,
    pub beta_minus: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Relative gap between the feasible incumbent and the LP bound that
    /// certifies optimality.
    pub objective_tol: f64,
    pub pivot_tol: f64,
    pub max_cuts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            objective_tol: 1e-6,
            pivot_tol: 1e-9,
            max_cuts: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration-limit",
        }
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lp_bound: f64,
    /// max residual normalized by its family tolerance (<= 1 is feasible)
    pub max_violation: f64,
    pub cuts_added: usize,
    pub total_cuts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRecord {
    pub id: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub status: SolveStatus,
    pub decision: DecisionVector,
    /// Total dispatch cost of the returned decision.
    pub objective: f64,
    /// Relative outer-approximation gap at termination.
    pub gap: f64,
    pub residuals: Vec<ResidualRecord>,
    pub iterations: Vec<IterationRecord>,
}

/// Variable layout inside the LP vector. Piecewise runs append, after the
/// two reserve blocks, two blocks of auxiliary variables u+/- >= |beta+/-|
/// that carry a tiny regularization cost: reserve deployment is free in the
/// true objective, and without a tie-break the LP optimum hops between
/// far-apart reserve vertices instead of converging. The certificate bound
/// always comes from the unregularized LP.
struct Layout {
    ng: usize,
    piecewise: bool,
}

impl Layout {
    fn n_vars(&self) -> usize {
        if self.piecewise {
            6 * self.ng
        } else {
            2 * self.ng
        }
    }

    fn decision(&self, z: &[f64]) -> DecisionVector {
        let ng = self.ng;
        DecisionVector {
            p: DVector::from_row_slice(&z[..ng]),
            alpha: DVector::from_row_slice(&z[ng..2 * ng]),
            beta_plus: self
                .piecewise
                .then(|| DVector::from_row_slice(&z[2 * ng..3 * ng])),
            beta_minus: self
                .piecewise
                .then(|| DVector::from_row_slice(&z[3 * ng..4 * ng])),
        }
    }
}

struct Evaluator<'a> {
    ctx: &'a ConstraintContext<'a>,
    specs: &'a [ConstraintSpec],
    tols: Vec<f64>,
    layout: &'a Layout,
    thresholds: Option<(f64, f64)>, // (omega_plus, omega_minus)
}

impl Evaluator<'_> {
    fn eval_all(&self, z: &[f64]) -> Result<Vec<ConstraintEval>> {
        let d = self.layout.decision(z);
        let policy = if self.layout.piecewise {
            let (op, om) = self.thresholds.expect("piecewise layout carries thresholds");
            Some(PiecewiseAffinePolicy::new_unchecked(
                AffinePolicy::new_unchecked(d.p.clone(), d.alpha.clone()),
                d.beta_plus.clone().unwrap(),
                d.beta_minus.clone().unwrap(),
                op,
                om,
            ))
        } else {
            None
        };
        self.specs
            .iter()
            .map(|s| self.ctx.eval(s, &d.p, &d.alpha, policy.as_ref()))
            .collect()
    }

    /// Largest residual normalized by its family tolerance.
    fn max_violation(&self, evals: &[ConstraintEval]) -> f64 {
        evals
            .iter()
            .zip(&self.tols)
            .map(|(e, t)| e.value / t)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn cut_coeffs(&self, ev: &ConstraintEval) -> Vec<f64> {
        let ng = self.layout.ng;
        let mut c = vec![0.0; self.layout.n_vars()];
        c[..ng].copy_from_slice(ev.grad_p.as_slice());
        c[ng..2 * ng].copy_from_slice(ev.grad_alpha.as_slice());
        if self.layout.piecewise {
            if let Some(gp) = &ev.grad_beta_plus {
                c[2 * ng..3 * ng].copy_from_slice(gp.as_slice());
            }
            if let Some(gm) = &ev.grad_beta_minus {
                c[3 * ng..4 * ng].copy_from_slice(gm.as_slice());
            }
        }
        c
    }
}

struct Cut {
    coeffs: Vec<f64>,
    rhs: f64,
    spec_idx: usize,
}

/// Solve the selected formulation for a case.
///
/// `thresholds` carries (omega_plus, omega_minus) and is required exactly
/// when the config selects the piecewise policy form.
pub fn solve(
    case: &NetworkCase,
    flow: &FlowMatrix,
    fluct: &FluctuationModel,
    config: &FormulationConfig,
    thresholds: Option<(f64, f64)>,
    options: &SolveOptions,
) -> Result<SolutionReport> {
    let specs = build_constraint_set(case, config)?;
    let piecewise = config.policy_form == PolicyForm::Piecewise;
    match (piecewise, thresholds) {
        (true, None) => {
            return Err(CoreError::Config(
                "piecewise policy requires omega thresholds".into(),
            ))
        }
        (true, Some((op, om))) if !(om < 0.0 && op > 0.0) => {
            return Err(CoreError::Config(format!(
                "thresholds must satisfy omega_minus < 0 < omega_plus, got [{om}, {op}]"
            )));
        }
        _ => {}
    }
    let ng = case.n_gens();
    if ng == 0 {
        return Err(CoreError::Structure("case has no generators".into()));
    }
    let ctx = ConstraintContext::new(case, flow, fluct)?;
    let layout = Layout { ng, piecewise };
    let tols: Vec<f64> = specs.iter().map(|s| residual_tolerance(s.kind)).collect();
    let eval = Evaluator {
        ctx: &ctx,
        specs: &specs,
        tols,
        layout: &layout,
        thresholds: if piecewise { thresholds } else { None },
    };

    let lp_opts = LpOptions {
        pivot_tol: options.pivot_tol,
        ..LpOptions::default()
    };
    let base = base_lp(case, &layout);
    let net_demand = case.total_demand() - case.total_wind_forecast();
    let capacity: f64 = case.generators.iter().map(|g| g.p_max).sum();
    if net_demand > capacity || net_demand < 0.0 {
        return Ok(infeasible_report(&layout, &specs));
    }

    let mut cuts: Vec<Cut> = Vec::new();
    let mut iterations: Vec<IterationRecord> = Vec::new();

    // initial cuts at the deterministic OPF point with uniform participation
    if let Some(z0) = deterministic_start(case, &layout, &base, &lp_opts)? {
        let evals = eval.eval_all(&z0)?;
        add_cuts(&eval, &mut cuts, &z0, &evals);
    }

    // conservative anchor for the incumbent line search
    let mut anchor: Option<(Vec<f64>, f64)> = None;
    if let Some(za) = conservative_anchor(case, &layout, &base, &lp_opts)? {
        let evals = eval.eval_all(&za)?;
        if eval.max_violation(&evals) <= 1.0 {
            let obj = objective_of(case, &za);
            anchor = Some((za, obj));
        }
    }

    let mut incumbent: Option<(Vec<f64>, f64)> = anchor.clone();
    let mut prev_bound = f64::NEG_INFINITY;

    // regularized objective used only to pick stable candidate points
    let reg_objective: Option<Vec<f64>> = layout.piecewise.then(|| {
        let w = 1e-6
            * case
                .generators
                .iter()
                .map(|g| g.cost.abs())
                .fold(1.0f64, f64::max);
        let mut c = base.objective.clone();
        for j in 4 * ng..6 * ng {
            c[j] = w;
        }
        c
    });

    for iteration in 1..=options.max_iterations {
        let lp = assemble(&base, &cuts);
        let sol = lp_solve(&lp, &lp_opts)?;
        match sol.status {
            LpStatus::Infeasible => {
                // cuts under-estimate the true constraints, so an infeasible
                // relaxation proves the problem infeasible
                let mut report = infeasible_report(&layout, &specs);
                report.iterations = iterations;
                return Ok(report);
            }
            LpStatus::Unbounded => {
                return Err(CoreError::Numerical(
                    "LP relaxation unbounded; decision boxes should prevent this".into(),
                ))
            }
            LpStatus::Optimal => {}
        }
        let bound = sol.objective;
        debug_assert!(bound >= prev_bound - 1e-7 * (1.0 + bound.abs()));
        prev_bound = prev_bound.max(bound);

        let evals = eval.eval_all(&sol.x)?;
        let viol = eval.max_violation(&evals);

        if viol <= 1.0 {
            // the LP optimum itself is feasible: optimal with zero gap
            iterations.push(IterationRecord {
                iteration,
                lp_bound: bound,
                max_violation: viol,
                cuts_added: 0,
                total_cuts: cuts.len(),
            });
            return Ok(final_report(
                case, &eval, &layout, &specs, &sol.x, bound, SolveStatus::Optimal, iterations,
            ));
        }

        let mut added = add_cuts(&eval, &mut cuts, &sol.x, &evals);

        // stabilized candidate: same feasible set, reserve magnitudes carry
        // a tiny cost so the optimum stops hopping between reserve vertices
        let mut candidate = sol.x;
        if let Some(reg_c) = &reg_objective {
            let mut reg_lp = assemble(&base, &cuts);
            reg_lp.objective = reg_c.clone();
            let reg_sol = lp_solve(&reg_lp, &lp_opts)?;
            if reg_sol.status == LpStatus::Optimal {
                let reg_evals = eval.eval_all(&reg_sol.x)?;
                added += add_cuts(&eval, &mut cuts, &reg_sol.x, &reg_evals);
                if eval.max_violation(&reg_evals) <= 1.0 {
                    let obj = objective_of(case, &reg_sol.x);
                    if incumbent.as_ref().map_or(true, |(_, best)| obj < *best) {
                        incumbent = Some((reg_sol.x.clone(), obj));
                    }
                }
                candidate = reg_sol.x;
            }
        }

        // line search toward the anchor: updates the incumbent and yields a
        // central point whose cuts cut much deeper than the LP vertex ones
        if let Some((za, _)) = &anchor {
            let (feas_pt, central) = line_search(&eval, &candidate, za)?;
            if let Some(zf) = feas_pt {
                let obj = objective_of(case, &zf);
                if incumbent.as_ref().map_or(true, |(_, best)| obj < *best) {
                    incumbent = Some((zf, obj));
                }
            }
            if let Some((zc, evals_c)) = central {
                added += add_cuts(&eval, &mut cuts, &zc, &evals_c);
            }
        }

        // enforce the cut cap by dropping the slackest cuts at the current point
        if cuts.len() > options.max_cuts {
            drop_slackest(&mut cuts, &candidate, options.max_cuts);
        }

        iterations.push(IterationRecord {
            iteration,
            lp_bound: bound,
            max_violation: viol,
            cuts_added: added,
            total_cuts: cuts.len(),
        });

        if let Some((zi, obj_i)) = &incumbent {
            let gap = (obj_i - bound) / bound.abs().max(1e-9);
            if gap <= options.objective_tol {
                let zi = zi.clone();
                return Ok(final_report(
                    case, &eval, &layout, &specs, &zi, bound, SolveStatus::Optimal, iterations,
                ));
            }
        }

        if added == 0 {
            // no violated-or-active cut was new: the loop cannot progress
            break;
        }
    }

    // iteration limit: report the best feasible point if one exists
    let (z_best, status) = match &incumbent {
        Some((zi, _)) => (zi.clone(), SolveStatus::IterationLimit),
        None => {
            let lp = assemble(&base, &cuts);
            let sol = lp_solve(&lp, &lp_opts)?;
            (sol.x, SolveStatus::IterationLimit)
        }
    };
    Ok(final_report(
        case, &eval, &layout, &specs, &z_best, prev_bound, status, iterations,
    ))
}

fn objective_of(case: &NetworkCase, z: &[f64]) -> f64 {
    case.generators
        .iter()
        .zip(z)
        .map(|(g, p)| g.cost * p)
        .sum()
}

fn infeasible_report(layout: &Layout, _specs: &[ConstraintSpec]) -> SolutionReport {
    let ng = layout.ng;
    SolutionReport {
        status: SolveStatus::Infeasible,
        decision: DecisionVector {
            p: DVector::zeros(ng),
            alpha: DVector::zeros(ng),
            beta_plus: layout.piecewise.then(|| DVector::zeros(ng)),
            beta_minus: layout.piecewise.then(|| DVector::zeros(ng)),
        },
        objective: f64::NAN,
        gap: f64::NAN,
        residuals: Vec::new(),
        iterations: Vec::new(),
    }
}

#[allow(clippy::too_many_arguments)]
fn final_report(
    case: &NetworkCase,
    eval: &Evaluator<'_>,
    layout: &Layout,
    specs: &[ConstraintSpec],
    z: &[f64],
    bound: f64,
    status: SolveStatus,
    iterations: Vec<IterationRecord>,
) -> SolutionReport {
    let evals = eval.eval_all(z).expect("final point must evaluate");
    let residuals = specs
        .iter()
        .zip(&evals)
        .zip(&eval.tols)
        .map(|((s, e), t)| ResidualRecord {
            id: s.id(),
            value: e.value,
            tolerance: *t,
        })
        .collect();
    let objective = objective_of(case, z);
    let gap = ((objective - bound) / bound.abs().max(1e-9)).max(0.0);
    SolutionReport {
        status,
        decision: layout.decision(z),
        objective,
        gap,
        residuals,
        iterations,
    }
}

fn base_lp(case: &NetworkCase, layout: &Layout) -> LinearProgram {
    let ng = layout.ng;
    let nv = layout.n_vars();
    let mut objective = vec![0.0; nv];
    let mut lower = vec![0.0; nv];
    let mut upper = vec![0.0; nv];
    for (j, g) in case.generators.iter().enumerate() {
        objective[j] = g.cost;
        lower[j] = 0.0;
        upper[j] = g.p_max;
        lower[ng + j] = 0.0;
        upper[ng + j] = 1.0;
        if layout.piecewise {
            lower[2 * ng + j] = -g.p_max;
            upper[2 * ng + j] = g.p_max;
            lower[3 * ng + j] = -g.p_max;
            upper[3 * ng + j] = g.p_max;
            lower[4 * ng + j] = 0.0;
            upper[4 * ng + j] = g.p_max;
            lower[5 * ng + j] = 0.0;
            upper[5 * ng + j] = g.p_max;
        }
    }
    let mut rows = Vec::new();
    // nominal balance: sum p = total demand - total wind forecast
    let mut balance = vec![0.0; nv];
    balance[..ng].fill(1.0);
    rows.push(LpRow {
        coeffs: balance,
        sense: LpSense::Eq,
        rhs: case.total_demand() - case.total_wind_forecast(),
    });
    // participation simplex
    let mut part = vec![0.0; nv];
    part[ng..2 * ng].fill(1.0);
    rows.push(LpRow {
        coeffs: part,
        sense: LpSense::Eq,
        rhs: 1.0,
    });
    if layout.piecewise {
        for block in [2, 3] {
            let mut r = vec![0.0; nv];
            r[block * ng..(block + 1) * ng].fill(1.0);
            rows.push(LpRow {
                coeffs: r,
                sense: LpSense::Eq,
                rhs: 0.0,
            });
        }
        // u >= |beta|, block 2 paired with 4 and 3 with 5
        for (beta_block, u_block) in [(2, 4), (3, 5)] {
            for j in 0..ng {
                for sign in [1.0, -1.0] {
                    let mut r = vec![0.0; nv];
                    r[beta_block * ng + j] = sign;
                    r[u_block * ng + j] = -1.0;
                    rows.push(LpRow {
                        coeffs: r,
                        sense: LpSense::Le,
                        rhs: 0.0,
                    });
                }
            }
        }
    }
    LinearProgram {
        n_vars: nv,
        objective,
        rows,
        lower,
        upper,
    }
}

fn assemble(base: &LinearProgram, cuts: &[Cut]) -> LinearProgram {
    let mut lp = base.clone();
    for c in cuts {
        lp.rows.push(LpRow {
            coeffs: c.coeffs.clone(),
            sense: LpSense::Le,
            rhs: c.rhs,
        });
    }
    lp
}

/// Deterministic OPF (face-value limits, no uncertainty) for the starting
/// point; participation starts uniform over generators with capacity.
fn deterministic_start(
    case: &NetworkCase,
    layout: &Layout,
    base: &LinearProgram,
    lp_opts: &LpOptions,
) -> Result<Option<Vec<f64>>> {
    let z = deterministic_dispatch(case, layout, base, lp_opts, 1.0)?;
    Ok(z)
}

/// Tightened deterministic dispatch (90% limits, dispatch kept off the caps)
/// used as the line-search anchor when it happens to be chance-feasible.
fn conservative_anchor(
    case: &NetworkCase,
    layout: &Layout,
    base: &LinearProgram,
    lp_opts: &LpOptions,
) -> Result<Option<Vec<f64>>> {
    for scale in [0.9, 1.0] {
        if let Some(z) = deterministic_dispatch(case, layout, base, lp_opts, scale)? {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

fn deterministic_dispatch(
    case: &NetworkCase,
    layout: &Layout,
    base: &LinearProgram,
    lp_opts: &LpOptions,
    limit_scale: f64,
) -> Result<Option<Vec<f64>>> {
    let flow = crate::netmodel::build_flow_matrix(case)?;
    let ng = layout.ng;
    let nv = layout.n_vars();
    let mut lp = base.clone();
    if limit_scale < 1.0 {
        for (j, g) in case.generators.iter().enumerate() {
            lp.upper[j] = g.p_max * limit_scale;
        }
    }
    let v_bus = case.wind_forecast_by_bus();
    for (l, line) in case.lines.iter().enumerate() {
        let row = flow.matrix.row(l);
        let det: f64 = (0..case.n_buses)
            .map(|b| row[b] * (v_bus[b] - case.demand[b]))
            .sum();
        let mut coeffs = vec![0.0; nv];
        for (j, g) in case.generators.iter().enumerate() {
            coeffs[j] = row[g.bus];
        }
        let lim = line.flow_limit * limit_scale;
        lp.rows.push(LpRow {
            coeffs: coeffs.clone(),
            sense: LpSense::Le,
            rhs: lim - det,
        });
        let neg: Vec<f64> = coeffs.iter().map(|c| -c).collect();
        lp.rows.push(LpRow {
            coeffs: neg,
            sense: LpSense::Le,
            rhs: lim + det,
        });
    }
    let sol = lp_solve(&lp, lp_opts)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut z = sol.x;
    let active: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.p_max > 0.0)
        .map(|(j, _)| j)
        .collect();
    let share = 1.0 / active.len().max(1) as f64;
    for j in ng..2 * ng {
        z[j] = 0.0;
    }
    for j in &active {
        z[ng + j] = share;
    }
    Ok(Some(z))
}

/// Append linearization cuts for every violated or near-active constraint,
/// skipping duplicates (same constraint, same point). Returns how many cuts
/// were added.
fn add_cuts(eval: &Evaluator<'_>, cuts: &mut Vec<Cut>, z: &[f64], evals: &[ConstraintEval]) -> usize {
    let mut added = 0;
    for (i, ev) in evals.iter().enumerate() {
        let tol = eval.tols[i];
        if ev.value <= -tol / 10.0 {
            continue;
        }
        if !ev.value.is_finite()
            || ev.grad_p.iter().any(|g| !g.is_finite())
            || ev.grad_alpha.iter().any(|g| !g.is_finite())
        {
            continue; // non-finite linearization cannot enter the LP
        }
        let mut coeffs = eval.cut_coeffs(ev);
        let mut rhs = coeffs.iter().zip(z).map(|(c, zj)| c * zj).sum::<f64>() - ev.value;
        // normalize rows to unit max coefficient: keeps the LP basis
        // well-conditioned when gradient scales differ wildly per family
        let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if scale <= 1e-14 {
            continue; // flat gradient carries no cut
        }
        for c in coeffs.iter_mut() {
            *c /= scale;
        }
        rhs /= scale;
        // skip near-duplicates of existing cuts; duplicate circuits produce
        // byte-identical rows across different specs, so compare globally
        let duplicate = cuts.iter().any(|c| {
            (c.rhs - rhs).abs() <= 1e-6 * (1.0 + rhs.abs())
                && c.coeffs
                    .iter()
                    .zip(&coeffs)
                    .all(|(a, b)| (a - b).abs() <= 1e-6)
        });
        if duplicate {
            continue;
        }
        cuts.push(Cut {
            coeffs,
            rhs,
            spec_idx: i,
        });
        added += 1;
    }
    added
}

/// Bisect between an infeasible LP point and a feasible anchor. Returns the
/// tightest feasible point found and the deepest infeasible midpoint with
/// its evaluations (for central cuts).
type Central = Option<(Vec<f64>, Vec<ConstraintEval>)>;

fn line_search(
    eval: &Evaluator<'_>,
    z_infeasible: &[f64],
    z_anchor: &[f64],
) -> Result<(Option<Vec<f64>>, Central)> {
    let blend = |t: f64| -> Vec<f64> {
        z_infeasible
            .iter()
            .zip(z_anchor)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut feasible: Option<Vec<f64>> = None;
    let mut central: Central = None;
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        let zm = blend(mid);
        let evals = eval.eval_all(&zm)?;
        if eval.max_violation(&evals) <= 1.0 {
            feasible = Some(zm);
            hi = mid;
        } else {
            central = Some((zm, evals));
            lo = mid;
        }
    }
    Ok((feasible, central))
}

fn drop_slackest(cuts: &mut Vec<Cut>, z: &[f64], keep: usize) {
    let mut slack: Vec<(f64, usize)> = cuts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let lhs: f64 = c.coeffs.iter().zip(z).map(|(a, b)| a * b).sum();
            (c.rhs - lhs, i)
        })
        .collect();
    // drop the largest slack first; stable order on ties
    slack.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let drop: std::collections::BTreeSet<usize> = slack
        .iter()
        .take(cuts.len().saturating_sub(keep))
        .map(|&(_, i)| i)
        .collect();
    let mut idx = 0;
    cuts.retain(|_| {
        let d = drop.contains(&idx);
        idx += 1;
        !d
    });
}
