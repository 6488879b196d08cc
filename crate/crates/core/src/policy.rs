//! Generation-control policies and the wind fluctuation model.
//!
//! The default decision policy responds to the total deviation
//! Omega = sum_i omega_i: affine output is p - alpha * Omega, and the
//! piecewise-affine variant adds fixed reserve blocks beta+/- once Omega
//! crosses the thresholds. `GeneralPolicy` keeps the full
//! linear-in-parameter family (one coefficient vector per scalar basis
//! function) for representation checks; the solver does not optimize over
//! it.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::gaussmath::Gauss1D;
use crate::netmodel::{FlowMatrix, NetworkCase};

const SUM_TOL: f64 = 1e-6;

/// Zero-mean multivariate Gaussian of wind deviations, one dimension per
/// wind source. Stores the covariance along with a factor L (L L^T = Sigma)
/// for sampling and the aggregates used by every constraint formula.
#[derive(Debug, Clone)]
pub struct FluctuationModel {
    pub sigma: DMatrix<f64>,
    /// Factor with `factor * factor^T = sigma` (Cholesky, or an
    /// eigenvalue-clipped square root for semidefinite input).
    pub factor: DMatrix<f64>,
    /// 1^T Sigma 1, the variance of the total deviation Omega.
    pub total_variance: f64,
    /// Sigma 1, the covariance of each source with Omega.
    pub cross: DVector<f64>,
}

impl FluctuationModel {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() {
            return Err(CoreError::Dimension(format!(
                "covariance must be square, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let n = sigma.nrows();
        let scale = sigma.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                    return Err(CoreError::Domain(format!(
                        "covariance is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        // symmetrize exactly before factoring
        let sym = 0.5 * (&sigma + sigma.transpose());
        let factor = match sym.clone().cholesky() {
            Some(chol) => chol.l(),
            None => {
                let eig = sym.clone().symmetric_eigen();
                let min = eig.eigenvalues.min();
                if min < -1e-10 * scale {
                    return Err(CoreError::Domain(format!(
                        "covariance is not positive semidefinite (eigenvalue {min})"
                    )));
                }
                let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                let mut f = eig.eigenvectors.clone();
                for (j, r) in roots.iter().enumerate() {
                    f.column_mut(j).scale_mut(*r);
                }
                f
            }
        };
        let ones = DVector::from_element(n, 1.0);
        let cross = &sym * &ones;
        let total_variance = cross.sum().max(0.0);
        Ok(Self {
            sigma: sym,
            factor,
            total_variance,
            cross,
        })
    }

    /// Convenience constructor from per-source standard deviations and one
    /// common pairwise correlation coefficient.
    pub fn from_std_and_rho(std_mw: &[f64], rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(CoreError::Domain(format!(
                "correlation must lie in [-1,1], got {rho}"
            )));
        }
        let n = std_mw.len();
        let mut sigma = DMatrix::zeros(n, n);
        for i in 0..n {
            if !(std_mw[i].is_finite() && std_mw[i] >= 0.0) {
                return Err(CoreError::Domain(format!(
                    "std_mw[{i}] must be nonnegative, got {}",
                    std_mw[i]
                )));
            }
            for j in 0..n {
                let r = if i == j { 1.0 } else { rho };
                sigma[(i, j)] = r * std_mw[i] * std_mw[j];
            }
        }
        Self::new(sigma)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Standard deviation of the total deviation Omega.
    pub fn total_std(&self) -> f64 {
        self.total_variance.sqrt()
    }
}

/// Affine recourse: output p - alpha * Omega, with participation factors
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePolicy {
    pub dispatch: DVector<f64>,
    pub alpha: DVector<f64>,
}

impl AffinePolicy {
    pub fn new(dispatch: DVector<f64>, alpha: DVector<f64>) -> Result<Self> {
        if dispatch.len() != alpha.len() {
            return Err(CoreError::Dimension(format!(
                "dispatch has {} entries, alpha has {}",
                dispatch.len(),
                alpha.len()
            )));
        }
        if dispatch.iter().any(|&p| p < -SUM_TOL || !p.is_finite()) {
            return Err(CoreError::Domain("dispatch must be nonnegative".into()));
        }
        if alpha.iter().any(|&a| a < -SUM_TOL || !a.is_finite()) {
            return Err(CoreError::Domain(
                "participation factors must be nonnegative".into(),
            ));
        }
        let s = alpha.sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(CoreError::Domain(format!(
                "participation factors must sum to one, got {s}"
            )));
        }
        Ok(Self { dispatch, alpha })
    }

    /// Skips invariant validation. For evaluating candidate points that sit
    /// slightly off the feasible manifold (solver iterates, finite-difference
    /// probes); not for externally supplied policies.
    pub fn new_unchecked(dispatch: DVector<f64>, alpha: DVector<f64>) -> Self {
        Self { dispatch, alpha }
    }

    pub fn respond_total(&self, omega_total: f64) -> DVector<f64> {
        &self.dispatch - &self.alpha * omega_total
    }
}

/// Affine recourse plus fixed reserve blocks deployed when the total
/// deviation leaves [omega_minus, omega_plus]. Both blocks sum to zero so
/// the system stays balanced.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffinePolicy {
    pub base: AffinePolicy,
    pub beta_plus: DVector<f64>,
    pub beta_minus: DVector<f64>,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

impl PiecewiseAffinePolicy {
    pub fn new(
        base: AffinePolicy,
        beta_plus: DVector<f64>,
        beta_minus: DVector<f64>,
        omega_plus: f64,
        omega_minus: f64,
    ) -> Result<Self> {
        let n = base.dispatch.len();
        if beta_plus.len() != n || beta_minus.len() != n {
            return Err(CoreError::Dimension(
                "reserve blocks must match the generator count".into(),
            ));
        }
        if !(omega_minus.is_finite() && omega_plus.is_finite() && omega_minus < 0.0 && omega_plus > 0.0)
        {
            return Err(CoreError::Domain(format!(
                "thresholds must satisfy omega_minus < 0 < omega_plus, got [{omega_minus}, {omega_plus}]"
            )));
        }
        for (name, b) in [("beta_plus", &beta_plus), ("beta_minus", &beta_minus)] {
            if b.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::Domain(format!("{name} must be finite")));
            }
            let s = b.sum();
            if s.abs() > SUM_TOL {
                return Err(CoreError::Domain(format!(
                    "{name} must sum to zero, got {s}"
                )));
            }
        }
        Ok(Self {
            base,
            beta_plus,
            beta_minus,
            omega_plus,
            omega_minus,
        })
    }

    /// Skips invariant validation; see [`AffinePolicy::new_unchecked`].
    pub fn new_unchecked(
        base: AffinePolicy,
        beta_plus: DVector<f64>,
        beta_minus: DVector<f64>,
        omega_plus: f64,
        omega_minus: f64,
    ) -> Self {
        Self {
            base,
            beta_plus,
            beta_minus,
            omega_plus,
            omega_minus,
        }
    }

    /// Reserve deployment as a function of the total deviation. The middle
    /// interval is closed: exactly at a threshold no reserve is deployed.
    pub fn beta_at(&self, omega_total: f64) -> Option<&DVector<f64>> {
        if omega_total > self.omega_plus {
            Some(&self.beta_plus)
        } else if omega_total < self.omega_minus {
            Some(&self.beta_minus)
        } else {
            None
        }
    }
}

/// Scalar basis functions available to `GeneralPolicy`. A fixed registry
/// keeps constraint evaluation analyzable; arbitrary closures are out of
/// scope.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisFn {
    /// g(omega) = omega_k
    Component(usize),
    /// g(omega) = Omega = sum_i omega_i
    TotalDeviation,
    /// g(omega) = 1 if Omega in [lo, hi), else 0
    IndicatorTotal { lo: f64, hi: f64 },
    /// g(omega) = Omega^degree
    PolynomialTotal { degree: u32 },
}

impl BasisFn {
    pub fn eval(&self, omega: &DVector<f64>) -> f64 {
        match self {
            BasisFn::Component(k) => omega[*k],
            BasisFn::TotalDeviation => omega.sum(),
            BasisFn::IndicatorTotal { lo, hi } => {
                let t = omega.sum();
                if t >= *lo && t < *hi {
                    1.0
                } else {
                    0.0
                }
            }
            BasisFn::PolynomialTotal { degree } => omega.sum().powi(*degree as i32),
        }
    }
}

/// Linear-in-parameter policy: output p - sum_k alpha_k g_k(omega).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralPolicy {
    pub dispatch: DVector<f64>,
    pub terms: Vec<(DVector<f64>, BasisFn)>,
}

impl GeneralPolicy {
    pub fn new(dispatch: DVector<f64>, terms: Vec<(DVector<f64>, BasisFn)>) -> Result<Self> {
        for (k, (coef, _)) in terms.iter().enumerate() {
            if coef.len() != dispatch.len() {
                return Err(CoreError::Dimension(format!(
                    "terms[{k}] coefficient length {} does not match dispatch length {}",
                    coef.len(),
                    dispatch.len()
                )));
            }
        }
        Ok(Self { dispatch, terms })
    }
}

/// Any of the supported recourse rules.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Affine(AffinePolicy),
    Piecewise(PiecewiseAffinePolicy),
    General(GeneralPolicy),
}

impl Policy {
    pub fn dispatch(&self) -> &DVector<f64> {
        match self {
            Policy::Affine(p) => &p.dispatch,
            Policy::Piecewise(p) => &p.base.dispatch,
            Policy::General(p) => &p.dispatch,
        }
    }

    pub fn n_gens(&self) -> usize {
        self.dispatch().len()
    }

    /// Realized generator outputs for a fluctuation vector.
    pub fn respond(&self, omega: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Policy::Affine(p) => Ok(p.respond_total(omega.sum())),
            Policy::Piecewise(p) => {
                let total = omega.sum();
                let mut out = p.base.respond_total(total);
                if let Some(beta) = p.beta_at(total) {
                    out += beta;
                }
                Ok(out)
            }
            Policy::General(p) => {
                let mut out = p.dispatch.clone();
                for (coef, basis) in &p.terms {
                    if let BasisFn::Component(k) = basis {
                        if *k >= omega.len() {
                            return Err(CoreError::Dimension(format!(
                                "basis component {k} out of range for {}-dim omega",
                                omega.len()
                            )));
                        }
                    }
                    out -= coef * basis.eval(omega);
                }
                Ok(out)
            }
        }
    }
}

/// Result of checking total power balance over a set of samples.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub max_abs_residual: f64,
    pub worst_sample: usize,
    pub tolerance: f64,
    pub ok: bool,
}

/// Verify sum_i p~_i(omega) + v_i + omega_i - d_i = 0 on every sample.
/// Affine policies with participation summing to one satisfy this
/// identically; reserve blocks preserve it because both sum to zero.
pub fn check_balance(
    policy: &Policy,
    case: &NetworkCase,
    samples: &[DVector<f64>],
) -> Result<BalanceReport> {
    if policy.n_gens() != case.n_gens() {
        return Err(CoreError::Dimension(format!(
            "policy covers {} generators, case has {}",
            policy.n_gens(),
            case.n_gens()
        )));
    }
    let fixed = case.total_wind_forecast() - case.total_demand();
    let tolerance = 1e-8;
    let mut worst = 0.0f64;
    let mut worst_idx = 0usize;
    for (i, omega) in samples.iter().enumerate() {
        if omega.len() != case.n_wind() {
            return Err(CoreError::Dimension(format!(
                "sample {i} has {} entries, case has {} wind sources",
                omega.len(),
                case.n_wind()
            )));
        }
        let outputs = policy.respond(omega)?;
        let residual = outputs.sum() + fixed + omega.sum();
        if residual.abs() > worst {
            worst = residual.abs();
            worst_idx = i;
        }
    }
    Ok(BalanceReport {
        max_abs_residual: worst,
        worst_sample: worst_idx,
        tolerance,
        ok: worst <= tolerance,
    })
}

/// Which limit of a target a constraint watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Upper,
    Lower,
}

/// The conditional law of an overload y given the total deviation Omega:
/// y | Omega ~ N(base + region beta shift + slope * Omega, sigma^2). The
/// conditional sigma carries no Omega or beta dependence, and under
/// total-deviation policies no alpha dependence either.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalLaw {
    /// Mean at Omega = 0 with no reserve deployed.
    pub base: f64,
    /// d mean / d Omega.
    pub slope: f64,
    /// Mean shift applied when Omega > omega_plus.
    pub shift_plus: f64,
    /// Mean shift applied when Omega < omega_minus.
    pub shift_minus: f64,
    /// Conditional standard deviation.
    pub sigma: f64,
}

impl ConditionalLaw {
    pub fn mean_at(&self, policy: &PiecewiseAffinePolicy, omega_total: f64) -> f64 {
        let mut mu = self.base + self.slope * omega_total;
        if omega_total > policy.omega_plus {
            mu += self.shift_plus;
        } else if omega_total < policy.omega_minus {
            mu += self.shift_minus;
        }
        mu
    }
}

/// Conditional law of a generator limit overload given Omega.
///
/// Under a total-deviation policy the generator output is a deterministic
/// function of Omega, so the conditional variance cancels exactly.
pub fn gen_conditional_law(
    policy: &PiecewiseAffinePolicy,
    fm: &FluctuationModel,
    case: &NetworkCase,
    gen_index: usize,
    side: Side,
) -> Result<ConditionalLaw> {
    if fm.total_variance <= 0.0 {
        return Err(CoreError::Degenerate(
            "conditional moments require positive total variance".into(),
        ));
    }
    if gen_index >= case.n_gens() {
        return Err(CoreError::Dimension(format!(
            "generator index {gen_index} out of range"
        )));
    }
    let g = &case.generators[gen_index];
    let p_i = policy.base.dispatch[gen_index];
    let a_i = policy.base.alpha[gen_index];
    // effective row alpha_i * 1^T: row Sigma 1 = alpha_i * total_variance, so
    // the regression slope on Omega is exactly alpha_i and the conditional
    // variance alpha_i^2 (1'S1) - (alpha_i 1'S1)^2 / (1'S1) vanishes.
    let law = match side {
        Side::Upper => ConditionalLaw {
            base: p_i - g.p_max,
            slope: -a_i,
            shift_plus: policy.beta_plus[gen_index],
            shift_minus: policy.beta_minus[gen_index],
            sigma: 0.0,
        },
        Side::Lower => ConditionalLaw {
            base: g.p_min - p_i,
            slope: a_i,
            shift_plus: -policy.beta_plus[gen_index],
            shift_minus: -policy.beta_minus[gen_index],
            sigma: 0.0,
        },
    };
    Ok(law)
}

/// Conditional law of a line limit overload given Omega.
pub fn line_conditional_law(
    policy: &PiecewiseAffinePolicy,
    fm: &FluctuationModel,
    case: &NetworkCase,
    m: &FlowMatrix,
    line_index: usize,
    side: Side,
) -> Result<ConditionalLaw> {
    if fm.total_variance <= 0.0 {
        return Err(CoreError::Degenerate(
            "conditional moments require positive total variance".into(),
        ));
    }
    if line_index >= case.n_lines() {
        return Err(CoreError::Dimension(format!(
            "line index {line_index} out of range"
        )));
    }
    let row = m.matrix.row(line_index);
    // w_k = M_row applied to the bus of wind source k; g_j likewise for
    // generator j
    let w_row: Vec<f64> = case.wind.iter().map(|w| row[w.bus]).collect();
    let g_row: Vec<f64> = case.generators.iter().map(|g| row[g.bus]).collect();

    let det_flow: f64 = {
        let mut acc = 0.0;
        for (j, g) in case.generators.iter().enumerate() {
            acc += row[g.bus] * policy.base.dispatch[j];
            let _ = j;
        }
        for w in &case.wind {
            acc += row[w.bus] * w.forecast;
        }
        for b in 0..case.n_buses {
            acc -= row[b] * case.demand[b];
        }
        acc
    };

    // stochastic coefficient a = w_row - (g_row . alpha) * 1
    let s: f64 = g_row
        .iter()
        .zip(policy.base.alpha.iter())
        .map(|(g, a)| g * a)
        .sum();
    let nw = case.n_wind();
    let a_coef: Vec<f64> = (0..nw).map(|k| w_row[k] - s).collect();

    let mut a_sigma_a = 0.0;
    let mut a_sigma_1 = 0.0;
    for i in 0..nw {
        a_sigma_1 += a_coef[i] * fm.cross[i];
        for j in 0..nw {
            a_sigma_a += a_coef[i] * fm.sigma[(i, j)] * a_coef[j];
        }
    }
    let var_cond = (a_sigma_a - a_sigma_1 * a_sigma_1 / fm.total_variance).max(0.0);
    let slope = a_sigma_1 / fm.total_variance;

    let beta_flow = |beta: &DVector<f64>| -> f64 {
        g_row.iter().zip(beta.iter()).map(|(g, b)| g * b).sum()
    };
    let limit = case.lines[line_index].flow_limit;

    let law = match side {
        Side::Upper => ConditionalLaw {
            base: det_flow - limit,
            slope,
            shift_plus: beta_flow(&policy.beta_plus),
            shift_minus: beta_flow(&policy.beta_minus),
            sigma: var_cond.sqrt(),
        },
        Side::Lower => ConditionalLaw {
            base: -det_flow - limit,
            slope: -slope,
            shift_plus: -beta_flow(&policy.beta_plus),
            shift_minus: -beta_flow(&policy.beta_minus),
            sigma: var_cond.sqrt(),
        },
    };
    Ok(law)
}

/// Conditional mean/std of a generator overload at a given Omega.
pub fn conditional_moments_gen(
    policy: &PiecewiseAffinePolicy,
    fm: &FluctuationModel,
    case: &NetworkCase,
    gen_index: usize,
    side: Side,
    omega_total: f64,
) -> Result<Gauss1D> {
    let law = gen_conditional_law(policy, fm, case, gen_index, side)?;
    Gauss1D::new(law.mean_at(policy, omega_total), law.sigma)
}

/// Conditional mean/std of a line overload at a given Omega.
pub fn conditional_moments_line(
    policy: &PiecewiseAffinePolicy,
    fm: &FluctuationModel,
    case: &NetworkCase,
    m: &FlowMatrix,
    line_index: usize,
    side: Side,
    omega_total: f64,
) -> Result<Gauss1D> {
    let law = line_conditional_law(policy, fm, case, m, line_index, side)?;
    Gauss1D::new(law.mean_at(policy, omega_total), law.sigma)
}
