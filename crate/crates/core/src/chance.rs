//! Chance-constraint construction and evaluation.
//!
//! Every variant is covered: (standard | linear weight | quadratic weight)
//! x (generator | line) x (upper | lower) x (affine | piecewise-affine
//! policy). Evaluation returns the constraint residual together with its
//! analytic gradient with respect to the decision variables, which is what
//! the cutting-plane solver consumes.
//!
//! Residual units follow the budget: the standard form mu + q(1-eps)*sigma
//! is in MW, the linear weighted form bounds an expected overload in MW,
//! the quadratic one an expected squared overload in MW^2. The three
//! epsilons are deliberately separate config values.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{CoreError, Result};
use crate::gaussmath::{
    std_pdf, std_quantile, trunc_mean, trunc_second_moment, Gauss1D,
};
use crate::netmodel::{FlowMatrix, NetworkCase};
use crate::policy::{FluctuationModel, PiecewiseAffinePolicy, Side};
use crate::quad::{integrate, rule_128, rule_64};

/// Smallest standard deviation used in divisions; keeps alpha = 0 corners
/// finite without changing values beyond the stated tolerances.
pub const SIGMA_FLOOR: f64 = 1e-9;

/// Weight function selecting the constraint family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    /// P[y > 0] <= eps, reformulated as mu + quantile(1-eps) sigma <= 0.
    Standard,
    /// E[max(y,0)] <= eps (MW).
    Linear,
    /// E[max(y,0)^2] <= eps (MW^2).
    Quadratic,
}

/// What the constraint protects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Generator(usize),
    Line(usize),
}

/// Which policy family the constraint is evaluated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyForm {
    Affine,
    Piecewise,
}

/// One chance constraint: kind x target x side x risk budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub target: Target,
    pub side: Side,
    pub epsilon: f64,
    pub policy_form: PolicyForm,
}

impl ConstraintSpec {
    /// Stable identifier used in reports: e.g. "line_3_upper".
    pub fn id(&self) -> String {
        let (kind, idx) = match self.target {
            Target::Generator(i) => ("gen", i),
            Target::Line(l) => ("line", l),
        };
        let side = match self.side {
            Side::Upper => "upper",
            Side::Lower => "lower",
        };
        format!("{kind}_{idx}_{side}")
    }
}

/// Residual and gradient of one constraint at a decision point.
#[derive(Debug, Clone)]
pub struct ConstraintEval {
    /// risk measure minus budget; <= 0 means satisfied.
    pub value: f64,
    pub grad_p: DVector<f64>,
    pub grad_alpha: DVector<f64>,
    pub grad_beta_plus: Option<DVector<f64>>,
    pub grad_beta_minus: Option<DVector<f64>>,
}

/// Which constraints to build and with which budgets.
#[derive(Debug, Clone)]
pub struct FormulationConfig {
    pub kind: ConstraintKind,
    pub policy_form: PolicyForm,
    pub epsilon_gen: f64,
    pub epsilon_line: f64,
    pub epsilon_gen_overrides: BTreeMap<usize, f64>,
    pub epsilon_line_overrides: BTreeMap<usize, f64>,
}

impl FormulationConfig {
    pub fn uniform(kind: ConstraintKind, policy_form: PolicyForm, epsilon_gen: f64, epsilon_line: f64) -> Self {
        Self {
            kind,
            policy_form,
            epsilon_gen,
            epsilon_line,
            epsilon_gen_overrides: BTreeMap::new(),
            epsilon_line_overrides: BTreeMap::new(),
        }
    }
}

/// Two specs (upper/lower) per generator and per line.
pub fn build_constraint_set(case: &NetworkCase, config: &FormulationConfig) -> Result<Vec<ConstraintSpec>> {
    if !(config.epsilon_gen.is_finite() && config.epsilon_gen > 0.0) {
        return Err(CoreError::Config(format!(
            "epsilon_gen must be positive, got {}",
            config.epsilon_gen
        )));
    }
    if !(config.epsilon_line.is_finite() && config.epsilon_line > 0.0) {
        return Err(CoreError::Config(format!(
            "epsilon_line must be positive, got {}",
            config.epsilon_line
        )));
    }
    if config.kind == ConstraintKind::Standard && config.policy_form == PolicyForm::Piecewise {
        return Err(CoreError::Config(
            "standard chance constraints support the affine policy only".into(),
        ));
    }
    for (idx, eps) in &config.epsilon_gen_overrides {
        if *idx >= case.n_gens() {
            return Err(CoreError::Config(format!(
                "epsilon override references generator {idx}, case has {}",
                case.n_gens()
            )));
        }
        if !(eps.is_finite() && *eps > 0.0) {
            return Err(CoreError::Config(format!(
                "epsilon override for generator {idx} must be positive"
            )));
        }
    }
    for (idx, eps) in &config.epsilon_line_overrides {
        if *idx >= case.n_lines() {
            return Err(CoreError::Config(format!(
                "epsilon override references line {idx}, case has {}",
                case.n_lines()
            )));
        }
        if !(eps.is_finite() && *eps > 0.0) {
            return Err(CoreError::Config(format!(
                "epsilon override for line {idx} must be positive"
            )));
        }
    }

    let mut specs = Vec::with_capacity(2 * (case.n_gens() + case.n_lines()));
    for i in 0..case.n_gens() {
        let eps = *config.epsilon_gen_overrides.get(&i).unwrap_or(&config.epsilon_gen);
        for side in [Side::Upper, Side::Lower] {
            specs.push(ConstraintSpec {
                kind: config.kind,
                target: Target::Generator(i),
                side,
                epsilon: eps,
                policy_form: config.policy_form,
            });
        }
    }
    for l in 0..case.n_lines() {
        let eps = *config.epsilon_line_overrides.get(&l).unwrap_or(&config.epsilon_line);
        for side in [Side::Upper, Side::Lower] {
            specs.push(ConstraintSpec {
                kind: config.kind,
                target: Target::Line(l),
                side,
                epsilon: eps,
                policy_form: config.policy_form,
            });
        }
    }
    Ok(specs)
}

/// Standard chance constraint residual mu + quantile(1-eps) sigma.
pub fn standard_residual(g: Gauss1D, epsilon: f64) -> Result<f64> {
    let q = std_quantile(1.0 - epsilon)
        .map_err(|_| CoreError::Domain(format!("standard epsilon must lie in (0,1), got {epsilon}")))?;
    Ok(g.mu + q * g.sigma)
}

/// Linear weighted residual E[max(y,0)] - eps.
pub fn linear_residual(g: Gauss1D, epsilon: f64) -> f64 {
    trunc_mean(g) - epsilon
}

/// Quadratic weighted residual E[max(y,0)^2] - eps.
pub fn quadratic_residual(g: Gauss1D, epsilon: f64) -> f64 {
    trunc_second_moment(g) - epsilon
}

/// Immutable evaluation context: case + flow matrix + fluctuation model with
/// the per-line quadratic forms precomputed.
pub struct ConstraintContext<'a> {
    pub case: &'a NetworkCase,
    pub flow: &'a FlowMatrix,
    pub fluct: &'a FluctuationModel,
    /// per line: M row restricted to generator buses (nl x ng)
    line_gen_coef: Vec<Vec<f64>>,
    /// per line: M row restricted to wind buses (nl x nw)
    line_wind_coef: Vec<Vec<f64>>,
    /// per line: M (W v - d)
    line_det_base: Vec<f64>,
    /// per line: w_row Sigma w_row
    w_sigma_w: Vec<f64>,
    /// per line: w_row Sigma 1
    w_sigma_1: Vec<f64>,
}

impl<'a> ConstraintContext<'a> {
    pub fn new(
        case: &'a NetworkCase,
        flow: &'a FlowMatrix,
        fluct: &'a FluctuationModel,
    ) -> Result<Self> {
        if flow.matrix.nrows() != case.n_lines() || flow.matrix.ncols() != case.n_buses {
            return Err(CoreError::Dimension(format!(
                "flow matrix is {}x{}, case needs {}x{}",
                flow.matrix.nrows(),
                flow.matrix.ncols(),
                case.n_lines(),
                case.n_buses
            )));
        }
        if fluct.dim() != case.n_wind() {
            return Err(CoreError::Dimension(format!(
                "fluctuation model covers {} sources, case has {}",
                fluct.dim(),
                case.n_wind()
            )));
        }
        let nl = case.n_lines();
        let nw = case.n_wind();
        let mut line_gen_coef = Vec::with_capacity(nl);
        let mut line_wind_coef = Vec::with_capacity(nl);
        let mut line_det_base = Vec::with_capacity(nl);
        let mut w_sigma_w = Vec::with_capacity(nl);
        let mut w_sigma_1 = Vec::with_capacity(nl);
        for l in 0..nl {
            let row = flow.matrix.row(l);
            let g_row: Vec<f64> = case.generators.iter().map(|g| row[g.bus]).collect();
            let w_row: Vec<f64> = case.wind.iter().map(|w| row[w.bus]).collect();
            let mut det = 0.0;
            for w in &case.wind {
                det += row[w.bus] * w.forecast;
            }
            for b in 0..case.n_buses {
                det -= row[b] * case.demand[b];
            }
            let mut ww = 0.0;
            let mut w1 = 0.0;
            for i in 0..nw {
                w1 += w_row[i] * fluct.cross[i];
                for j in 0..nw {
                    ww += w_row[i] * fluct.sigma[(i, j)] * w_row[j];
                }
            }
            line_gen_coef.push(g_row);
            line_wind_coef.push(w_row);
            line_det_base.push(det);
            w_sigma_w.push(ww);
            w_sigma_1.push(w1);
        }
        Ok(Self {
            case,
            flow,
            fluct,
            line_gen_coef,
            line_wind_coef,
            line_det_base,
            w_sigma_w,
            w_sigma_1,
        })
    }

    pub fn line_gen_row(&self, line: usize) -> &[f64] {
        &self.line_gen_coef[line]
    }

    pub fn line_wind_row(&self, line: usize) -> &[f64] {
        &self.line_wind_coef[line]
    }

    fn check_dims(&self, p: &DVector<f64>, alpha: &DVector<f64>) -> Result<()> {
        if p.len() != self.case.n_gens() || alpha.len() != self.case.n_gens() {
            return Err(CoreError::Dimension(format!(
                "decision vectors must have {} entries, got p: {}, alpha: {}",
                self.case.n_gens(),
                p.len(),
                alpha.len()
            )));
        }
        Ok(())
    }

    /// Gaussian law of the overload y under the affine policy.
    pub fn affine_overload_moments(
        &self,
        spec: &ConstraintSpec,
        p: &DVector<f64>,
        alpha: &DVector<f64>,
    ) -> Result<Gauss1D> {
        self.check_dims(p, alpha)?;
        let total_var = self.fluct.total_variance;
        match spec.target {
            Target::Generator(i) => {
                if i >= self.case.n_gens() {
                    return Err(CoreError::Dimension(format!("generator {i} out of range")));
                }
                let gen = &self.case.generators[i];
                let mu = match spec.side {
                    Side::Upper => p[i] - gen.p_max,
                    Side::Lower => gen.p_min - p[i],
                };
                let sigma = alpha[i].abs() * total_var.sqrt();
                Gauss1D::new(mu, sigma)
            }
            Target::Line(l) => {
                if l >= self.case.n_lines() {
                    return Err(CoreError::Dimension(format!("line {l} out of range")));
                }
                let g_row = &self.line_gen_coef[l];
                let s: f64 = g_row.iter().zip(alpha.iter()).map(|(g, a)| g * a).sum();
                let flow0 = self.line_det_base[l]
                    + g_row.iter().zip(p.iter()).map(|(g, pi)| g * pi).sum::<f64>();
                let limit = self.case.lines[l].flow_limit;
                let mu = match spec.side {
                    Side::Upper => flow0 - limit,
                    Side::Lower => -flow0 - limit,
                };
                let var = (self.w_sigma_w[l] - 2.0 * s * self.w_sigma_1[l] + s * s * total_var)
                    .max(0.0);
                Gauss1D::new(mu, var.sqrt())
            }
        }
    }

    /// Residual + gradient of a constraint under the affine policy.
    pub fn eval_affine(
        &self,
        spec: &ConstraintSpec,
        p: &DVector<f64>,
        alpha: &DVector<f64>,
    ) -> Result<ConstraintEval> {
        let raw = self.affine_overload_moments(spec, p, alpha)?;
        let sigma_eff = raw.sigma.max(SIGMA_FLOOR);
        let g = Gauss1D { mu: raw.mu, sigma: sigma_eff };

        // (value, dT/dmu, dT/dsigma) for the active weight function
        let (value, t_mu, t_sigma) = match spec.kind {
            ConstraintKind::Standard => {
                let q = std_quantile(1.0 - spec.epsilon).map_err(|_| {
                    CoreError::Domain(format!(
                        "standard epsilon must lie in (0,1), got {}",
                        spec.epsilon
                    ))
                })?;
                (g.mu + q * g.sigma, 1.0, q)
            }
            ConstraintKind::Linear => {
                let z = g.mu / g.sigma;
                (trunc_mean(g) - spec.epsilon, crate::gaussmath::std_cdf(z), std_pdf(z))
            }
            ConstraintKind::Quadratic => {
                let z = g.mu / g.sigma;
                let cdf = crate::gaussmath::std_cdf(z);
                let pdf = std_pdf(z);
                (
                    trunc_second_moment(g) - spec.epsilon,
                    2.0 * g.mu * cdf + 2.0 * g.sigma * pdf,
                    2.0 * g.sigma * cdf,
                )
            }
        };

        let ng = self.case.n_gens();
        let mut grad_p = DVector::zeros(ng);
        let mut grad_alpha = DVector::zeros(ng);
        let floored = raw.sigma <= SIGMA_FLOOR;
        match spec.target {
            Target::Generator(i) => {
                let sgn = if spec.side == Side::Upper { 1.0 } else { -1.0 };
                grad_p[i] = sgn * t_mu;
                if !floored {
                    grad_alpha[i] = t_sigma * self.fluct.total_variance.sqrt() * alpha[i].signum();
                }
            }
            Target::Line(l) => {
                let sgn = if spec.side == Side::Upper { 1.0 } else { -1.0 };
                let g_row = &self.line_gen_coef[l];
                for j in 0..ng {
                    grad_p[j] = sgn * t_mu * g_row[j];
                }
                if !floored {
                    let s: f64 = g_row.iter().zip(alpha.iter()).map(|(g, a)| g * a).sum();
                    // d sigma / d alpha_j = -(wS1 - s * 1'S1) g_j / sigma
                    let d = -(self.w_sigma_1[l] - s * self.fluct.total_variance) / sigma_eff;
                    for j in 0..ng {
                        grad_alpha[j] = t_sigma * d * g_row[j];
                    }
                }
            }
        }
        Ok(ConstraintEval {
            value,
            grad_p,
            grad_alpha,
            grad_beta_plus: None,
            grad_beta_minus: None,
        })
    }

    /// Residual + gradient of a weighted constraint under the
    /// piecewise-affine policy, by integrating the conditional truncated
    /// moment over the law of the total deviation.
    ///
    /// The conditional sigma carries no dependence on Omega, beta, or (for
    /// total-deviation policies) alpha, so only the conditional mean varies
    /// and it is affine in Omega within each of the three regions. The
    /// integral therefore differentiates cleanly under the integral sign;
    /// the two moment accumulators S0 = int T_mu dP and S1 = int T_mu
    /// Omega dP carry all gradient information.
    pub fn eval_piecewise(
        &self,
        spec: &ConstraintSpec,
        policy: &PiecewiseAffinePolicy,
    ) -> Result<ConstraintEval> {
        if self.fluct.total_variance <= 0.0 {
            return Err(CoreError::Degenerate(
                "piecewise evaluation requires positive total variance".into(),
            ));
        }
        let law = match spec.target {
            Target::Generator(i) => {
                crate::policy::gen_conditional_law(policy, self.fluct, self.case, i, spec.side)?
            }
            Target::Line(l) => crate::policy::line_conditional_law(
                policy, self.fluct, self.case, self.flow, l, spec.side,
            )?,
        };
        let quadratic = match spec.kind {
            ConstraintKind::Linear => false,
            ConstraintKind::Quadratic => true,
            ConstraintKind::Standard => {
                return Err(CoreError::Config(
                    "standard chance constraints support the affine policy only".into(),
                ))
            }
        };
        let sigma_cond = law.sigma.max(SIGMA_FLOOR);
        let total_std = self.fluct.total_std();
        let lo_cut = -8.0 * total_std;
        let hi_cut = 8.0 * total_std;

        // (region lo, hi, mean shift, which beta it reaches)
        let regions = [
            (lo_cut, policy.omega_minus.max(lo_cut), law.shift_minus, RegionBeta::Minus),
            (
                policy.omega_minus.clamp(lo_cut, hi_cut),
                policy.omega_plus.clamp(lo_cut, hi_cut),
                0.0,
                RegionBeta::None,
            ),
            (policy.omega_plus.min(hi_cut), hi_cut, law.shift_plus, RegionBeta::Plus),
        ];

        let mut value = 0.0;
        let mut s0_all = 0.0;
        let mut s1_all = 0.0;
        let mut s0_plus = 0.0;
        let mut s0_minus = 0.0;
        for (lo, hi, shift, which) in regions {
            if hi - lo <= 0.0 {
                continue;
            }
            let mean0 = law.base + shift;
            let acc = integrate_region(mean0, law.slope, sigma_cond, total_std, quadratic, lo, hi)?;
            value += acc.0;
            s0_all += acc.1;
            s1_all += acc.2;
            match which {
                RegionBeta::Plus => s0_plus += acc.1,
                RegionBeta::Minus => s0_minus += acc.1,
                RegionBeta::None => {}
            }
        }

        let ng = self.case.n_gens();
        let mut grad_p = DVector::zeros(ng);
        let mut grad_alpha = DVector::zeros(ng);
        let mut grad_bp = DVector::zeros(ng);
        let mut grad_bm = DVector::zeros(ng);
        let sgn = if spec.side == Side::Upper { 1.0 } else { -1.0 };
        match spec.target {
            Target::Generator(i) => {
                grad_p[i] = sgn * s0_all;
                grad_alpha[i] = -sgn * s1_all;
                grad_bp[i] = sgn * s0_plus;
                grad_bm[i] = sgn * s0_minus;
            }
            Target::Line(l) => {
                let g_row = &self.line_gen_coef[l];
                for j in 0..ng {
                    grad_p[j] = sgn * s0_all * g_row[j];
                    grad_alpha[j] = -sgn * s1_all * g_row[j];
                    grad_bp[j] = sgn * s0_plus * g_row[j];
                    grad_bm[j] = sgn * s0_minus * g_row[j];
                }
            }
        }
        Ok(ConstraintEval {
            value: value - spec.epsilon,
            grad_p,
            grad_alpha,
            grad_beta_plus: Some(grad_bp),
            grad_beta_minus: Some(grad_bm),
        })
    }

    /// Unified evaluation: dispatches on the spec's policy form.
    pub fn eval(
        &self,
        spec: &ConstraintSpec,
        p: &DVector<f64>,
        alpha: &DVector<f64>,
        piecewise: Option<&PiecewiseAffinePolicy>,
    ) -> Result<ConstraintEval> {
        match spec.policy_form {
            PolicyForm::Affine => self.eval_affine(spec, p, alpha),
            PolicyForm::Piecewise => {
                let policy = piecewise.ok_or_else(|| {
                    CoreError::Usage("piecewise spec requires a piecewise policy".into())
                })?;
                self.eval_piecewise(spec, policy)
            }
        }
    }
}

enum RegionBeta {
    Plus,
    Minus,
    None,
}

/// Integrate (T, T_mu, T_mu * Omega) against the density of Omega over
/// [lo, hi], where T is the truncated moment of N(mean0 + slope*Omega,
/// sigma^2). Splits at the mean's zero crossing, then applies 64/128-node
/// Gauss-Legendre with refinement checks and recursive bisection.
fn integrate_region(
    mean0: f64,
    slope: f64,
    sigma: f64,
    total_std: f64,
    quadratic: bool,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64, f64)> {
    // kink of the integrand where the conditional mean crosses zero
    let mut cuts = vec![lo, hi];
    if slope != 0.0 {
        let root = -mean0 / slope;
        if root > lo && root < hi {
            cuts.insert(1, root);
        }
    }
    let mut acc = (0.0, 0.0, 0.0);
    for pair in cuts.windows(2) {
        let part = integrate_adaptive(mean0, slope, sigma, total_std, quadratic, pair[0], pair[1], 0)?;
        acc.0 += part.0;
        acc.1 += part.1;
        acc.2 += part.2;
    }
    Ok(acc)
}

fn integrand(
    mean0: f64,
    slope: f64,
    sigma: f64,
    total_std: f64,
    quadratic: bool,
    omega: f64,
) -> (f64, f64, f64) {
    let mu = mean0 + slope * omega;
    let z = mu / sigma;
    let cdf = crate::gaussmath::std_cdf(z);
    let pdf = std_pdf(z);
    let (t, t_mu) = if quadratic {
        (
            ((mu * mu + sigma * sigma) * cdf + mu * sigma * pdf).max(0.0),
            2.0 * mu * cdf + 2.0 * sigma * pdf,
        )
    } else {
        (mu * cdf + sigma * pdf, cdf)
    };
    let w = std_pdf(omega / total_std) / total_std;
    (t * w, t_mu * w, t_mu * omega * w)
}

fn integrate_adaptive(
    mean0: f64,
    slope: f64,
    sigma: f64,
    total_std: f64,
    quadratic: bool,
    lo: f64,
    hi: f64,
    depth: u32,
) -> Result<(f64, f64, f64)> {
    let f = |x: f64| integrand(mean0, slope, sigma, total_std, quadratic, x);
    let coarse = integrate(rule_64(), lo, hi, |x| f(x).0);
    let mut fine = (0.0, 0.0, 0.0);
    {
        let rule = rule_128();
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = f(mid + half * x);
            fine.0 += w * v.0;
            fine.1 += w * v.1;
            fine.2 += w * v.2;
        }
        fine.0 *= half;
        fine.1 *= half;
        fine.2 *= half;
    }
    let err = (coarse - fine.0).abs();
    let tol = (1e-8 * fine.0.abs()).max(1e-13);
    if err <= tol {
        return Ok(fine);
    }
    if depth >= 40 {
        return Err(CoreError::Numerical(format!(
            "piecewise quadrature did not converge on [{lo}, {hi}]: achieved {err:.3e}, required {tol:.3e}"
        )));
    }
    let mid = 0.5 * (lo + hi);
    let a = integrate_adaptive(mean0, slope, sigma, total_std, quadratic, lo, mid, depth + 1)?;
    let b = integrate_adaptive(mean0, slope, sigma, total_std, quadratic, mid, hi, depth + 1)?;
    Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::load_case_str;
    use crate::policy::AffinePolicy;
    use nalgebra::DMatrix;

    fn two_gen_case() -> NetworkCase {
        load_case_str(
            r#"{
                "buses": 3,
                "slack_bus": 0,
                "base_mva": 100.0,
                "lines": [
                    {"from": 0, "to": 1, "susceptance": 10.0, "limit_mw": 60.0},
                    {"from": 1, "to": 2, "susceptance": 10.0, "limit_mw": 60.0},
                    {"from": 0, "to": 2, "susceptance": 10.0, "limit_mw": 60.0}
                ],
                "generators": [
                    {"bus": 0, "cost": 10.0, "p_min": 0.0, "p_max": 120.0},
                    {"bus": 1, "cost": 30.0, "p_min": 0.0, "p_max": 120.0}
                ],
                "wind": [{"bus": 1, "forecast_mw": 20.0}, {"bus": 2, "forecast_mw": 10.0}],
                "demand": [{"bus": 2, "mw": 100.0}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn constraint_set_counts() {
        let case = two_gen_case();
        let cfg = FormulationConfig::uniform(ConstraintKind::Standard, PolicyForm::Affine, 0.001, 0.1);
        let specs = build_constraint_set(&case, &cfg).unwrap();
        assert_eq!(specs.len(), 2 * (2 + 3));
        assert_eq!(specs[0].id(), "gen_0_upper");
        assert!(specs.iter().all(|s| match s.target {
            Target::Generator(_) => s.epsilon == 0.001,
            Target::Line(_) => s.epsilon == 0.1,
        }));
    }

    #[test]
    fn standard_residual_boundary() {
        let g = Gauss1D::new(-1.2815515655446004, 1.0).unwrap();
        let v = standard_residual(g, 0.1).unwrap();
        assert!(v.abs() < 1e-9);
        // deterministic feasibility at sigma = 0
        let g = Gauss1D::new(-0.1, 0.0).unwrap();
        assert!((standard_residual(g, 0.1).unwrap() + 0.1).abs() < 1e-12);
    }

    #[test]
    fn standard_residual_rejects_bad_epsilon() {
        let g = Gauss1D::new(0.0, 1.0).unwrap();
        assert!(standard_residual(g, 0.0).is_err());
        assert!(standard_residual(g, 1.0).is_err());
    }

    #[test]
    fn linear_residual_boundary_at_phi0() {
        let g = Gauss1D::new(0.0, 1.0).unwrap();
        let v = linear_residual(g, 0.3989422804014327);
        assert!(v.abs() < 1e-12);
        // negligible risk far below the limit
        let g = Gauss1D::new(-6.0, 1.0).unwrap();
        assert!((linear_residual(g, 0.5) + 0.5).abs() < 1e-8);
    }

    #[test]
    fn quadratic_residual_degenerate() {
        let g = Gauss1D::new(2.0, 0.0).unwrap();
        assert!((quadratic_residual(g, 1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_alpha_row_gives_zero_sigma() {
        let case = two_gen_case();
        let flow = crate::netmodel::build_flow_matrix(&case).unwrap();
        let fm = FluctuationModel::from_std_and_rho(&[9.4, 13.1], 0.2).unwrap();
        let ctx = ConstraintContext::new(&case, &flow, &fm).unwrap();
        let spec = ConstraintSpec {
            kind: ConstraintKind::Linear,
            target: Target::Generator(0),
            side: Side::Upper,
            epsilon: 1.0,
            policy_form: PolicyForm::Affine,
        };
        let p = DVector::from_row_slice(&[50.0, 20.0]);
        let alpha = DVector::from_row_slice(&[0.0, 1.0]);
        let m = ctx.affine_overload_moments(&spec, &p, &alpha).unwrap();
        assert_eq!(m.sigma, 0.0);
        assert_eq!(m.mu, 50.0 - 120.0);
    }

    #[test]
    fn line_mu_at_zero_net_injection_is_negative_limit() {
        // single line, gen and demand at the same buses as wind so that
        // p = d - v gives zero net injection
        let case = load_case_str(
            r#"{
                "buses": 2,
                "slack_bus": 1,
                "base_mva": 100.0,
                "lines": [{"from": 0, "to": 1, "susceptance": 5.0, "limit_mw": 40.0}],
                "generators": [{"bus": 0, "cost": 1.0, "p_min": 0.0, "p_max": 100.0}],
                "wind": [{"bus": 0, "forecast_mw": 10.0}],
                "demand": [{"bus": 0, "mw": 30.0}]
            }"#,
        )
        .unwrap();
        let flow = crate::netmodel::build_flow_matrix(&case).unwrap();
        let fm = FluctuationModel::new(DMatrix::from_row_slice(1, 1, &[25.0])).unwrap();
        let ctx = ConstraintContext::new(&case, &flow, &fm).unwrap();
        let spec = ConstraintSpec {
            kind: ConstraintKind::Linear,
            target: Target::Line(0),
            side: Side::Upper,
            epsilon: 1.0,
            policy_form: PolicyForm::Affine,
        };
        let p = DVector::from_row_slice(&[20.0]); // d - v = 30 - 10
        let alpha = DVector::from_row_slice(&[1.0]);
        let m = ctx.affine_overload_moments(&spec, &p, &alpha).unwrap();
        assert!((m.mu + 40.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_zero_beta_matches_affine() {
        let case = two_gen_case();
        let flow = crate::netmodel::build_flow_matrix(&case).unwrap();
        let fm = FluctuationModel::from_std_and_rho(&[9.4, 13.1], 0.2).unwrap();
        let ctx = ConstraintContext::new(&case, &flow, &fm).unwrap();
        let p = DVector::from_row_slice(&[70.0, 10.0]);
        let alpha = DVector::from_row_slice(&[0.6, 0.4]);
        let policy = PiecewiseAffinePolicy::new(
            AffinePolicy::new(p.clone(), alpha.clone()).unwrap(),
            DVector::zeros(2),
            DVector::zeros(2),
            20.0,
            -20.0,
        )
        .unwrap();
        for target in [Target::Generator(0), Target::Line(0), Target::Line(1)] {
            for side in [Side::Upper, Side::Lower] {
                for kind in [ConstraintKind::Linear, ConstraintKind::Quadratic] {
                    let spec_a = ConstraintSpec {
                        kind,
                        target,
                        side,
                        epsilon: 1.0,
                        policy_form: PolicyForm::Affine,
                    };
                    let spec_p = ConstraintSpec {
                        policy_form: PolicyForm::Piecewise,
                        ..spec_a.clone()
                    };
                    let va = ctx.eval_affine(&spec_a, &p, &alpha).unwrap().value;
                    let vp = ctx.eval_piecewise(&spec_p, &policy).unwrap().value;
                    assert!(
                        (va - vp).abs() < 1e-6,
                        "{:?} {:?} {:?}: affine {va} vs piecewise {vp}",
                        kind,
                        target,
                        side
                    );
                }
            }
        }
    }

    #[test]
    fn piecewise_rejects_standard_kind() {
        let case = two_gen_case();
        let flow = crate::netmodel::build_flow_matrix(&case).unwrap();
        let fm = FluctuationModel::from_std_and_rho(&[9.4, 13.1], 0.2).unwrap();
        let ctx = ConstraintContext::new(&case, &flow, &fm).unwrap();
        let policy = PiecewiseAffinePolicy::new(
            AffinePolicy::new(
                DVector::from_row_slice(&[70.0, 10.0]),
                DVector::from_row_slice(&[0.5, 0.5]),
            )
            .unwrap(),
            DVector::zeros(2),
            DVector::zeros(2),
            20.0,
            -20.0,
        )
        .unwrap();
        let spec = ConstraintSpec {
            kind: ConstraintKind::Standard,
            target: Target::Line(0),
            side: Side::Upper,
            epsilon: 0.1,
            policy_form: PolicyForm::Piecewise,
        };
        assert!(matches!(
            ctx.eval_piecewise(&spec, &policy),
            Err(CoreError::Config(_))
        ));
    }
}
