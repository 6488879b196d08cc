//! Shared oracle helpers for the integration suites. Everything here is
//! deliberately independent of the library's implementation paths: straight
//! adaptive Simpson quadrature, central finite differences, a dense
//! tableau simplex, and a SplitMix64 stream for test randomness.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Adaptive Simpson quadrature with interval-halving error control.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let err = left + right - whole;
        if depth > 60 || err.abs() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        rec(f, a, fa, m, fm, flm, left, tol / 2.0, depth + 1)
            + rec(f, m, fm, b, fb, frm, right, tol / 2.0, depth + 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, fm, whole, tol, 0)
}

/// Central finite-difference derivative.
pub fn central_diff(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// SplitMix64: tiny, seedable, platform-stable; used only by tests.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 12) as f64 + 0.5) * (1.0 / 4503599627370496.0)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller (independent of the library's
    /// inverse-CDF sampler).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Direct angle-solve oracle: build the susceptance Laplacian, pin the
/// slack angle at zero, solve for the rest, and read flows off
/// b * (theta_i - theta_j). Independent of the flow-matrix construction.
pub fn flows_from_angle_solve(
    case: &ccopf_core::NetworkCase,
    injection: &DVector<f64>,
) -> DVector<f64> {
    let n = case.n_buses;
    let mut lap = DMatrix::zeros(n, n);
    for l in &case.lines {
        lap[(l.from_bus, l.from_bus)] += l.susceptance;
        lap[(l.to_bus, l.to_bus)] += l.susceptance;
        lap[(l.from_bus, l.to_bus)] -= l.susceptance;
        lap[(l.to_bus, l.from_bus)] -= l.susceptance;
    }
    let reduced = lap
        .clone()
        .remove_row(case.slack_bus)
        .remove_column(case.slack_bus);
    let rhs_red = injection.clone().remove_row(case.slack_bus);
    let theta_red = reduced
        .lu()
        .solve(&rhs_red)
        .expect("connected case yields a nonsingular reduced system");
    let mut theta = DVector::zeros(n);
    let mut k = 0;
    for b in 0..n {
        if b == case.slack_bus {
            continue;
        }
        theta[b] = theta_red[k];
        k += 1;
    }
    DVector::from_iterator(
        case.n_lines(),
        case.lines
            .iter()
            .map(|l| l.susceptance * (theta[l.from_bus] - theta[l.to_bus])),
    )
}

/// Random connected case on `n` buses: a random spanning tree plus extra
/// edges, unit-free susceptances in [0.5, 5].
pub fn random_connected_case(rng: &mut TestRng, n_buses: usize, extra_edges: usize) -> ccopf_core::NetworkCase {
    let mut lines = Vec::new();
    for b in 1..n_buses {
        let parent = rng.below(b);
        lines.push((b, parent, rng.range(0.5, 5.0)));
    }
    for _ in 0..extra_edges {
        let a = rng.below(n_buses);
        let b = rng.below(n_buses);
        if a != b {
            lines.push((a, b, rng.range(0.5, 5.0)));
        }
    }
    let lines_json: Vec<String> = lines
        .iter()
        .map(|(f, t, s)| format!(r#"{{"from":{f},"to":{t},"susceptance":{s},"limit_mw":1000.0}}"#))
        .collect();
    let doc = format!(
        r#"{{
            "buses": {n_buses},
            "slack_bus": 0,
            "base_mva": 100.0,
            "lines": [{}],
            "generators": [{{"bus":0,"cost":1.0,"p_min":0.0,"p_max":1000.0}}],
            "wind": [],
            "demand": []
        }}"#,
        lines_json.join(",")
    );
    ccopf_core::load_case_str(&doc).expect("random case is valid")
}

/// Naive dense Big-M tableau simplex for the LP oracle. Standard form:
/// min c.x st A x = b, x >= 0 after adding slacks; bounded variables are
/// split in the caller. Small and slow on purpose.
pub struct NaiveLp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

pub enum NaiveOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// Solve min c.x st A x = b, x >= 0 (b >= 0 required) with Big-M full
/// tableau pivoting, Bland's rule throughout.
pub fn naive_simplex(lp: &NaiveLp) -> NaiveOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    let big_m = 1e7
        * lp.c
            .iter()
            .map(|v| v.abs())
            .fold(1.0f64, f64::max);
    // tableau: n structural + m artificials, rows augmented with rhs
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        assert!(lp.b[i] >= -1e-12, "naive oracle needs nonnegative rhs");
        for j in 0..n {
            t[i][j] = lp.a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = lp.b[i].max(0.0);
    }
    for j in 0..n {
        t[m][j] = lp.c[j];
    }
    for j in n..n + m {
        t[m][j] = big_m;
    }
    // price out the artificial basis
    let mut basis: Vec<usize> = (n..n + m).collect();
    for i in 0..m {
        let factor = t[m][basis[i]];
        if factor != 0.0 {
            for j in 0..width {
                t[m][j] -= factor * t[i][j];
            }
        }
    }
    for _ in 0..200_000 {
        // Bland: first column with negative reduced cost
        let mut enter = None;
        for j in 0..n + m {
            if t[m][j] < -1e-9 {
                enter = Some(j);
                break;
            }
        }
        let Some(e) = enter else {
            // optimal; check artificials
            for (i, &bv) in basis.iter().enumerate() {
                if bv >= n && t[i][width - 1] > 1e-6 {
                    return NaiveOutcome::Infeasible;
                }
            }
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i][width - 1];
                }
            }
            // read the objective off the structural solution: the tableau's
            // objective cell carries Big-M dust from the artificials
            let objective = x.iter().zip(&lp.c).map(|(xi, ci)| xi * ci).sum();
            return NaiveOutcome::Optimal { x, objective };
        };
        // ratio test, Bland tie-break on smallest basis variable
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][e] > 1e-9 {
                let ratio = t[i][width - 1] / t[i][e];
                if ratio < best - 1e-12
                    || ((ratio - best).abs() <= 1e-12
                        && leave.is_some_and(|l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return NaiveOutcome::Unbounded;
        };
        // pivot
        let pivot = t[r][e];
        for j in 0..width {
            t[r][j] /= pivot;
        }
        for i in 0..m + 1 {
            if i != r && t[i][e] != 0.0 {
                let factor = t[i][e];
                for j in 0..width {
                    t[i][j] -= factor * t[r][j];
                }
            }
        }
        basis[r] = e;
    }
    panic!("naive simplex did not terminate");
}
