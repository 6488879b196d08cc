//! Dense bounded-variable revised simplex.
//!
//! Two phases: artificial variables give a trivially feasible start, phase
//! one drives their sum to zero, phase two optimizes the real objective
//! with the artificials fixed at zero. Pricing is Dantzig's rule with a
//! permanent switch to Bland's rule after a run of degenerate pivots, so
//! the method cannot cycle. All choices are index-deterministic: identical
//! input produces identical output.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpSense {
    Le,
    Eq,
    Ge,
}

/// One dense constraint row: coeffs . x (sense) rhs.
#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: LpSense,
    pub rhs: f64,
}

/// min objective . x subject to rows and per-variable bounds. Bounds may be
/// infinite on one side but every variable needs at least one finite bound.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solution of a linear program: primal values, one dual per row, and the
/// objective value (meaningful when status is Optimal).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub pivot_tol: f64,
    pub feas_tol: f64,
    pub max_pivots: usize,
    /// Start with Bland's rule and refactor aggressively; used as a retry
    /// mode when the fast path loses the basis numerically.
    pub conservative: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feas_tol: 1e-7,
            max_pivots: 0, // 0 = automatic from problem size
            conservative: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    /// full column matrix: structural | slacks | artificials
    a: DMatrix<f64>,
    /// (row, coefficient) for slack/artificial columns, None for structural
    col_singleton: Vec<Option<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<VarState>,
    value: Vec<f64>,
    basis: Vec<usize>,
    b_inv: DMatrix<f64>,
    rhs: DVector<f64>,
    n_rows: usize,
    pivots_since_refactor: usize,
}

impl Tableau {
    fn refactor(&mut self) -> Result<()> {
        let m = self.n_rows;
        let mut basis_mat = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            basis_mat.set_column(k, &self.a.column(j));
        }
        self.b_inv = basis_mat.clone().try_inverse().ok_or_else(|| {
            if std::env::var_os("CCOPF_LP_DEBUG").is_some() {
                eprintln!(
                    "singular refactor: m={} basis={:?}",
                    self.n_rows, self.basis
                );
            }
            CoreError::Numerical("singular simplex basis".into())
        })?;
        // recompute basic values from the nonbasic bounds
        let mut residual = self.rhs.clone();
        for (j, st) in self.state.iter().enumerate() {
            if !matches!(st, VarState::Basic(_)) && self.value[j] != 0.0 {
                residual -= self.a.column(j) * self.value[j];
            }
        }
        let xb = &self.b_inv * residual;
        for (k, &j) in self.basis.iter().enumerate() {
            self.value[j] = xb[k];
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn duals(&self) -> DVector<f64> {
        let cb = DVector::from_iterator(self.n_rows, self.basis.iter().map(|&j| self.cost[j]));
        self.b_inv.tr_mul(&cb)
    }

    fn reduced_cost(&self, y: &DVector<f64>, j: usize) -> f64 {
        match self.col_singleton[j] {
            Some((row, coef)) => self.cost[j] - y[row] * coef,
            None => self.cost[j] - y.dot(&self.a.column(j)),
        }
    }

    /// B^-1 times column j without materializing the column.
    fn basis_direction(&self, j: usize) -> DVector<f64> {
        match self.col_singleton[j] {
            Some((row, coef)) => {
                let mut w = self.b_inv.column(row).into_owned();
                if coef != 1.0 {
                    w *= coef;
                }
                w
            }
            None => &self.b_inv * self.a.column(j),
        }
    }
}

/// Solve a linear program. Retries once in conservative mode (Bland's rule,
/// frequent refactorization) if the fast path fails numerically; after
/// that, numerical errors surface. Infeasibility and unboundedness are
/// reported through the status.
pub fn lp_solve(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution> {
    match lp_solve_once(lp, opts) {
        Err(CoreError::Numerical(_)) if !opts.conservative => {
            let retry = LpOptions {
                conservative: true,
                ..opts.clone()
            };
            lp_solve_once(lp, &retry)
        }
        other => other,
    }
}

fn lp_solve_once(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution> {
    validate_lp(lp)?;
    let n = lp.n_vars;
    let m = lp.rows.len();
    let n_slack = lp
        .rows
        .iter()
        .filter(|r| r.sense != LpSense::Eq)
        .count();
    let total = n + n_slack + m;

    let mut a = DMatrix::zeros(m, total);
    let mut lower = vec![0.0; total];
    let mut upper = vec![0.0; total];
    lower[..n].copy_from_slice(&lp.lower);
    upper[..n].copy_from_slice(&lp.upper);
    let mut rhs = DVector::zeros(m);

    let mut slack_col = n;
    let mut slack_of_row: Vec<Option<(usize, f64)>> = Vec::with_capacity(m);
    let mut col_singleton: Vec<Option<(usize, f64)>> = vec![None; total];
    for (i, row) in lp.rows.iter().enumerate() {
        for (j, &c) in row.coeffs.iter().enumerate() {
            a[(i, j)] = c;
        }
        rhs[i] = row.rhs;
        match row.sense {
            LpSense::Le => {
                a[(i, slack_col)] = 1.0;
                lower[slack_col] = 0.0;
                upper[slack_col] = f64::INFINITY;
                slack_of_row.push(Some((slack_col, 1.0)));
                col_singleton[slack_col] = Some((i, 1.0));
                slack_col += 1;
            }
            LpSense::Ge => {
                a[(i, slack_col)] = -1.0;
                lower[slack_col] = 0.0;
                upper[slack_col] = f64::INFINITY;
                slack_of_row.push(Some((slack_col, -1.0)));
                col_singleton[slack_col] = Some((i, -1.0));
                slack_col += 1;
            }
            LpSense::Eq => {
                slack_of_row.push(None);
            }
        }
    }

    // nonbasic start: every structural/slack variable at its bound nearest
    // zero (deterministic), artificials basic at the residual
    let mut state = vec![VarState::AtLower; total];
    let mut value = vec![0.0; total];
    for j in 0..n + n_slack {
        let l = lower[j];
        let u = upper[j];
        let (st, v) = if l.is_finite() && u.is_finite() {
            if l.abs() <= u.abs() {
                (VarState::AtLower, l)
            } else {
                (VarState::AtUpper, u)
            }
        } else if l.is_finite() {
            (VarState::AtLower, l)
        } else {
            (VarState::AtUpper, u)
        };
        state[j] = st;
        value[j] = v;
    }

    let mut residual = rhs.clone();
    for j in 0..n + n_slack {
        if value[j] != 0.0 {
            for i in 0..m {
                residual[i] -= a[(i, j)] * value[j];
            }
        }
    }

    // crash basis: a row whose own slack can absorb the residual starts
    // with that slack basic; only the rest (equalities, violated rows) get
    // a basic artificial. Unused artificials are pinned at zero.
    let art_base = n + n_slack;
    let mut basis = Vec::with_capacity(m);
    let mut b_diag = vec![1.0; m];
    for i in 0..m {
        let art = art_base + i;
        let crash = match slack_of_row[i] {
            Some((scol, coef)) => {
                let v = residual[i] / coef;
                if v >= -1e-12 {
                    state[scol] = VarState::Basic(i);
                    value[scol] = v.max(0.0);
                    basis.push(scol);
                    b_diag[i] = coef;
                    true
                } else {
                    false
                }
            }
            None => false,
        };
        if crash {
            a[(i, art)] = 1.0;
            col_singleton[art] = Some((i, 1.0));
            lower[art] = 0.0;
            upper[art] = 0.0;
            state[art] = VarState::AtLower;
            value[art] = 0.0;
        } else {
            let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
            a[(i, art)] = sign;
            col_singleton[art] = Some((i, sign));
            lower[art] = 0.0;
            upper[art] = f64::INFINITY;
            state[art] = VarState::Basic(i);
            value[art] = residual[i].abs();
            basis.push(art);
            b_diag[i] = sign;
        }
    }

    let mut tab = Tableau {
        a,
        col_singleton,
        lower,
        upper,
        cost: vec![0.0; total],
        state,
        value,
        basis,
        b_inv: DMatrix::identity(m, m),
        rhs,
        n_rows: m,
        pivots_since_refactor: 0,
    };
    // B = diag(+-1): its inverse is itself
    for i in 0..m {
        tab.b_inv[(i, i)] = b_diag[i];
    }

    let max_pivots = if opts.max_pivots > 0 {
        opts.max_pivots
    } else {
        1000 + 200 * (m + n)
    };

    // phase 1: minimize the artificial sum
    for j in art_base..total {
        tab.cost[j] = 1.0;
    }
    let allow = |j: usize| j < total; // all columns may enter in phase 1
    run_simplex(&mut tab, opts, max_pivots, &allow)?;
    let infeas: f64 = (art_base..total).map(|j| tab.value[j].max(0.0)).sum();
    let scale = tab.rhs.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if infeas > opts.feas_tol * scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: tab.value[..n].to_vec(),
            dual: vec![0.0; m],
            objective: f64::NAN,
        });
    }

    // phase 2: real costs, artificials pinned at zero
    for j in 0..total {
        tab.cost[j] = if j < n { lp.objective[j] } else { 0.0 };
    }
    for j in art_base..total {
        tab.upper[j] = 0.0;
        if !matches!(tab.state[j], VarState::Basic(_)) {
            tab.value[j] = 0.0;
            tab.state[j] = VarState::AtLower;
        }
    }
    let allow2 = move |j: usize| j < art_base; // artificials may only leave
    let t_p2 = std::time::Instant::now();
    let unbounded = run_simplex(&mut tab, opts, max_pivots, &allow2)?;
    if std::env::var_os("CCOPF_LP_DEBUG").is_some() {
        eprintln!("lp m={m} n={n} phase2 {:?}", t_p2.elapsed());
    }
    if unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: tab.value[..n].to_vec(),
            dual: vec![0.0; m],
            objective: f64::NEG_INFINITY,
        });
    }

    let x = tab.value[..n].to_vec();
    let objective = x
        .iter()
        .zip(&lp.objective)
        .map(|(xi, ci)| xi * ci)
        .sum::<f64>();
    let dual = tab.duals().iter().copied().collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        dual,
        objective,
    })
}

fn validate_lp(lp: &LinearProgram) -> Result<()> {
    if lp.objective.len() != lp.n_vars
        || lp.lower.len() != lp.n_vars
        || lp.upper.len() != lp.n_vars
    {
        return Err(CoreError::Dimension(
            "objective/bounds length must equal n_vars".into(),
        ));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if row.coeffs.len() != lp.n_vars {
            return Err(CoreError::Dimension(format!(
                "row {i} has {} coefficients, expected {}",
                row.coeffs.len(),
                lp.n_vars
            )));
        }
        if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::Domain(format!("row {i} contains non-finite data")));
        }
    }
    for j in 0..lp.n_vars {
        if lp.lower[j] > lp.upper[j] {
            return Err(CoreError::Domain(format!(
                "variable {j} has empty bound interval [{}, {}]",
                lp.lower[j], lp.upper[j]
            )));
        }
        if !lp.lower[j].is_finite() && !lp.upper[j].is_finite() {
            return Err(CoreError::Domain(format!(
                "variable {j} needs at least one finite bound"
            )));
        }
        if !lp.objective[j].is_finite() {
            return Err(CoreError::Domain(format!("objective[{j}] is not finite")));
        }
    }
    Ok(())
}

/// Runs pivots until optimality (returns false) or unboundedness (true).
fn run_simplex(
    tab: &mut Tableau,
    opts: &LpOptions,
    max_pivots: usize,
    may_enter: &dyn Fn(usize) -> bool,
) -> Result<bool> {
    let m = tab.n_rows;
    let total = tab.cost.len();
    let mut degenerate_run = 0usize;
    let mut bland = opts.conservative;
    let refactor_every = if opts.conservative { 20 } else { 100 };

    for _pivot in 0..max_pivots {
        let y = tab.duals();

        // entering variable
        let mut entering: Option<(usize, f64, f64)> = None; // (col, |d|, direction)
        for j in 0..total {
            if matches!(tab.state[j], VarState::Basic(_)) || !may_enter(j) {
                continue;
            }
            if tab.lower[j] == tab.upper[j] {
                continue; // fixed
            }
            let d = tab.reduced_cost(&y, j);
            let dir = match tab.state[j] {
                VarState::AtLower if d < -opts.pivot_tol => 1.0,
                VarState::AtUpper if d > opts.pivot_tol => -1.0,
                _ => continue,
            };
            if bland {
                entering = Some((j, d.abs(), dir));
                break;
            }
            match entering {
                Some((_, best, _)) if d.abs() <= best => {}
                _ => entering = Some((j, d.abs(), dir)),
            }
        }
        let Some((e_col, _, dir)) = entering else {
            return Ok(false); // optimal
        };

        // direction of basic variables per unit increase of t
        let w = tab.basis_direction(e_col);

        // ratio test: smallest step that hits a bound
        let mut t_max = f64::INFINITY;
        let mut leaving: Option<usize> = None; // basis position
        for k in 0..m {
            let rate = -dir * w[k]; // d(value of basic k)/dt
            let j = tab.basis[k];
            let t = if rate < -opts.pivot_tol {
                (tab.value[j] - tab.lower[j]).max(0.0) / (-rate)
            } else if rate > opts.pivot_tol && tab.upper[j].is_finite() {
                (tab.upper[j] - tab.value[j]).max(0.0) / rate
            } else {
                continue;
            };
            // strict improvement, or a tie resolved toward the largest
            // pivot magnitude for stability (lowest variable index under
            // Bland's rule, preserving the anti-cycling guarantee)
            let tie = (t - t_max).abs() <= 1e-9 * (1.0 + t_max.abs());
            let better = if tie && leaving.is_some() {
                let kk = leaving.unwrap();
                if bland {
                    j < tab.basis[kk]
                } else {
                    rate.abs() > (dir * w[kk]).abs()
                }
            } else {
                t < t_max
            };
            if better {
                t_max = t;
                leaving = Some(k);
            }
        }
        // entering variable's own opposite bound
        let own_span = tab.upper[e_col] - tab.lower[e_col];
        let bound_swap = own_span.is_finite() && own_span < t_max;
        if bound_swap {
            t_max = own_span;
            leaving = None;
        }
        if t_max.is_infinite() {
            return Ok(true); // unbounded ray
        }

        if t_max <= 1e-11 {
            degenerate_run += 1;
            if degenerate_run > 50 {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        // apply the step
        for k in 0..m {
            let j = tab.basis[k];
            tab.value[j] -= dir * w[k] * t_max;
        }
        tab.value[e_col] += dir * t_max;

        match leaving {
            None => {
                // bound-to-bound move
                tab.state[e_col] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some(r) => {
                let out = tab.basis[r];
                let rate = -dir * w[r];
                tab.state[out] = if rate < 0.0 {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                // clamp the leaving variable exactly onto its bound
                tab.value[out] = if rate < 0.0 {
                    tab.lower[out]
                } else {
                    tab.upper[out]
                };
                tab.basis[r] = e_col;
                tab.state[e_col] = VarState::Basic(r);

                // eta update of the inverse
                let pivot = w[r];
                if pivot.abs() < 1e-12 {
                    tab.refactor()?;
                } else {
                    let row_r = tab.b_inv.row(r).into_owned();
                    for i in 0..m {
                        if i == r {
                            continue;
                        }
                        let factor = w[i] / pivot;
                        if factor != 0.0 {
                            for c in 0..m {
                                tab.b_inv[(i, c)] -= factor * row_r[c];
                            }
                        }
                    }
                    for c in 0..m {
                        tab.b_inv[(r, c)] /= pivot;
                    }
                    tab.pivots_since_refactor += 1;
                    if tab.pivots_since_refactor >= refactor_every {
                        tab.refactor()?;
                    }
                }
            }
        }
    }
    Err(CoreError::Numerical(format!(
        "simplex iteration limit reached ({max_pivots} pivots)"
    )))
}
