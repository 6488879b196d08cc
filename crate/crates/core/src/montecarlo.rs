//! Monte-Carlo validation of solved dispatches.
//!
//! Sampling is bit-reproducible across platforms: the uniform source is
//! ChaCha12 seeded with the run seed on stream 0, each u64 draw is mapped
//! to the open unit interval as ((x >> 12) + 0.5) * 2^-52, and Gaussian
//! variates come from the inverse-CDF transform through
//! [`crate::gaussmath::std_quantile`] composed with the covariance factor.
//! No platform-dependent rejection sampling is involved, so a (case, seed)
//! pair fixes every report byte.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::gaussmath::std_quantile;
use crate::netmodel::{FlowMatrix, NetworkCase};
use crate::policy::{FluctuationModel, Policy};

/// How a validation run samples and tabulates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub sample_count: usize,
    pub seed: u64,
    /// Overload levels (MW); violations are counted strictly above each.
    pub thresholds_mw: Vec<f64>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            sample_count: 10_000,
            seed: 42,
            thresholds_mw: vec![0.0, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

impl ValidationConfig {
    fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(CoreError::Config("sample_count must be at least 1".into()));
        }
        if self.thresholds_mw.is_empty() {
            return Err(CoreError::Config("thresholds_mw must be nonempty".into()));
        }
        if self.thresholds_mw.windows(2).any(|w| w[0] > w[1]) {
            return Err(CoreError::Config(
                "thresholds_mw must be sorted ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Empirical statistics for one constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintStats {
    pub constraint_id: String,
    /// Empirical violation probability per threshold (same order as the
    /// report's thresholds); nonincreasing by construction.
    pub epsilon_e: Vec<f64>,
    /// Empirical E[max(y,0)] in MW.
    pub mean_overload_mw: f64,
    /// Standard error of the mean overload.
    pub se_mean_overload_mw: f64,
    /// Empirical E[max(y,0)^2] in MW^2.
    pub mean_sq_overload_mw2: f64,
    pub se_mean_sq_overload_mw2: f64,
    pub max_overload_mw: f64,
}

/// Realized dispatch cost statistics over the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Metadata echoed into reports so comparisons can label their columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub formulation: String,
    pub policy: String,
    pub objective: f64,
}

/// Full validation result: per-constraint empirical risk plus cost spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub meta: ReportMeta,
    pub samples: usize,
    pub seed: u64,
    pub thresholds_mw: Vec<f64>,
    pub constraints: Vec<ConstraintStats>,
    pub cost: CostStats,
}

/// Map a raw u64 to the open interval (0, 1): 52 mantissa bits offset by
/// half a step, so neither endpoint is reachable.
fn u64_to_open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / 4503599627370496.0)
}

/// Draw n i.i.d. rows from N(0, Sigma), deterministically from the seed.
pub fn sample_fluctuations(fm: &FluctuationModel, n: usize, seed: u64) -> DMatrix<f64> {
    let dim = fm.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut out = DMatrix::zeros(n, dim);
    let mut z = DVector::zeros(dim);
    for i in 0..n {
        for k in 0..dim {
            let u = u64_to_open_unit(rng.next_u64());
            z[k] = std_quantile(u).expect("open-unit draw is a valid quantile argument");
        }
        let row = &fm.factor * &z;
        for k in 0..dim {
            out[(i, k)] = row[k];
        }
    }
    out
}

struct Accumulator {
    id: String,
    counts: Vec<u64>,
    sum: f64,
    sum_sq: f64,
    sum_4th: f64,
    max: f64,
}

impl Accumulator {
    fn new(id: String, n_thresholds: usize) -> Self {
        Self {
            id,
            counts: vec![0; n_thresholds],
            sum: 0.0,
            sum_sq: 0.0,
            sum_4th: 0.0,
            max: f64::NEG_INFINITY,
        }
    }

    fn push(&mut self, y: f64, thresholds: &[f64]) {
        for (c, t) in self.counts.iter_mut().zip(thresholds) {
            if y > *t {
                *c += 1;
            }
        }
        let pos = y.max(0.0);
        self.sum += pos;
        self.sum_sq += pos * pos;
        self.sum_4th += pos * pos * pos * pos;
        if y > self.max {
            self.max = y;
        }
    }

    fn finish(self, n: usize) -> ConstraintStats {
        let nf = n as f64;
        let mean = self.sum / nf;
        let mean_sq = self.sum_sq / nf;
        let mean_4th = self.sum_4th / nf;
        let var_overload = (mean_sq - mean * mean).max(0.0);
        let var_sq = (mean_4th - mean_sq * mean_sq).max(0.0);
        ConstraintStats {
            constraint_id: self.id,
            epsilon_e: self.counts.iter().map(|&c| c as f64 / nf).collect(),
            mean_overload_mw: mean,
            se_mean_overload_mw: (var_overload / nf).sqrt(),
            mean_sq_overload_mw2: mean_sq,
            se_mean_sq_overload_mw2: (var_sq / nf).sqrt(),
            max_overload_mw: self.max,
        }
    }
}

/// Sample fluctuations, run the policy, tabulate per-constraint overloads
/// and realized costs. Constraint order matches
/// [`crate::chance::build_constraint_set`]: generators (upper, lower) then
/// lines (upper, lower).
pub fn validate(
    case: &NetworkCase,
    flow: &FlowMatrix,
    policy: &Policy,
    fm: &FluctuationModel,
    vcfg: &ValidationConfig,
    meta: ReportMeta,
) -> Result<ViolationReport> {
    vcfg.validate()?;
    if policy.n_gens() != case.n_gens() {
        return Err(CoreError::Dimension(format!(
            "policy covers {} generators, case has {}",
            policy.n_gens(),
            case.n_gens()
        )));
    }
    if fm.dim() != case.n_wind() {
        return Err(CoreError::Dimension(format!(
            "fluctuation model covers {} sources, case has {}",
            fm.dim(),
            case.n_wind()
        )));
    }
    let n = vcfg.sample_count;
    let thresholds = &vcfg.thresholds_mw;
    let samples = sample_fluctuations(fm, n, vcfg.seed);

    let mut accs: Vec<Accumulator> = Vec::with_capacity(2 * (case.n_gens() + case.n_lines()));
    for i in 0..case.n_gens() {
        accs.push(Accumulator::new(format!("gen_{i}_upper"), thresholds.len()));
        accs.push(Accumulator::new(format!("gen_{i}_lower"), thresholds.len()));
    }
    for l in 0..case.n_lines() {
        accs.push(Accumulator::new(format!("line_{l}_upper"), thresholds.len()));
        accs.push(Accumulator::new(format!("line_{l}_lower"), thresholds.len()));
    }

    let costs = case.gen_costs();
    let mut cost_sum = 0.0;
    let mut cost_sq = 0.0;
    let mut cost_min = f64::INFINITY;
    let mut cost_max = f64::NEG_INFINITY;

    let mut omega = DVector::zeros(case.n_wind());
    for s in 0..n {
        for k in 0..case.n_wind() {
            omega[k] = samples[(s, k)];
        }
        let outputs = policy.respond(&omega)?;
        let flows = &flow.matrix * crate::netmodel::injection(case, &outputs, &omega);

        let mut a = 0usize;
        for (j, g) in case.generators.iter().enumerate() {
            accs[a].push(outputs[j] - g.p_max, thresholds);
            accs[a + 1].push(g.p_min - outputs[j], thresholds);
            a += 2;
        }
        for (l, line) in case.lines.iter().enumerate() {
            accs[a].push(flows[l] - line.flow_limit, thresholds);
            accs[a + 1].push(-line.flow_limit - flows[l], thresholds);
            a += 2;
        }

        let c = costs.dot(&outputs);
        cost_sum += c;
        cost_sq += c * c;
        cost_min = cost_min.min(c);
        cost_max = cost_max.max(c);
    }

    let nf = n as f64;
    let cost_mean = cost_sum / nf;
    let cost_var = (cost_sq / nf - cost_mean * cost_mean).max(0.0);
    Ok(ViolationReport {
        meta,
        samples: n,
        seed: vcfg.seed,
        thresholds_mw: thresholds.clone(),
        constraints: accs.into_iter().map(|a| a.finish(n)).collect(),
        cost: CostStats {
            mean: cost_mean,
            std: cost_var.sqrt(),
            min: cost_min,
            max: cost_max,
        },
    })
}

/// Side-by-side view of several validation reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub labels: Vec<String>,
    pub costs: Vec<f64>,
    /// Percent deltas relative to the first report ("+0.01%"); first entry
    /// is a dash.
    pub cost_deltas: Vec<String>,
    pub thresholds_mw: Vec<f64>,
    pub rows: Vec<ComparisonRow>,
    /// Constraints whose formulation ordering at the largest threshold
    /// differs from the ordering at the smallest one.
    pub ordering_flips: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub constraint_id: String,
    pub threshold_mw: f64,
    /// epsilon_e per report, in label order.
    pub epsilon_e: Vec<f64>,
}

/// Format a percent delta the way comparison tables print it.
pub fn format_pct_delta(value: f64, reference: f64) -> String {
    let pct = 100.0 * (value - reference) / reference;
    format!("{pct:+.2}%")
}

/// Join reports over shared thresholds; flags constraints whose
/// large-overload ordering differs from their any-overload ordering.
pub fn compare(reports: &[ViolationReport]) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(CoreError::Usage(
            "compare needs at least two reports".into(),
        ));
    }
    let thresholds = &reports[0].thresholds_mw;
    for (i, r) in reports.iter().enumerate().skip(1) {
        if r.thresholds_mw != *thresholds {
            return Err(CoreError::Usage(format!(
                "report {i} uses thresholds {:?}, expected {:?}",
                r.thresholds_mw, thresholds
            )));
        }
        if r.constraints.len() != reports[0].constraints.len() {
            return Err(CoreError::Usage(format!(
                "report {i} covers {} constraints, expected {}",
                r.constraints.len(),
                reports[0].constraints.len()
            )));
        }
    }

    let labels: Vec<String> = reports
        .iter()
        .map(|r| format!("{}/{}", r.meta.formulation, r.meta.policy))
        .collect();
    let costs: Vec<f64> = reports.iter().map(|r| r.meta.objective).collect();
    let mut cost_deltas = vec!["-".to_string()];
    for c in &costs[1..] {
        cost_deltas.push(format_pct_delta(*c, costs[0]));
    }

    let mut rows = Vec::new();
    let mut ordering_flips = Vec::new();
    let n_thresh = thresholds.len();
    for (ci, c0) in reports[0].constraints.iter().enumerate() {
        for (ti, t) in thresholds.iter().enumerate() {
            rows.push(ComparisonRow {
                constraint_id: c0.constraint_id.clone(),
                threshold_mw: *t,
                epsilon_e: reports.iter().map(|r| r.constraints[ci].epsilon_e[ti]).collect(),
            });
        }
        if n_thresh >= 2 {
            let at = |ti: usize| -> Vec<f64> {
                reports.iter().map(|r| r.constraints[ci].epsilon_e[ti]).collect()
            };
            let small = rank(&at(0));
            let large = rank(&at(n_thresh - 1));
            let small_all_eq = all_equal(&at(0));
            let large_all_eq = all_equal(&at(n_thresh - 1));
            if small != large && !small_all_eq && !large_all_eq {
                ordering_flips.push(c0.constraint_id.clone());
            }
        }
    }

    Ok(ComparisonTable {
        labels,
        costs,
        cost_deltas,
        thresholds_mw: thresholds.clone(),
        rows,
        ordering_flips,
    })
}

fn rank(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    idx
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Fixed-column CSV export: one row per constraint x threshold.
pub fn report_csv(report: &ViolationReport) -> String {
    let mut out = String::from(
        "constraint_id,kind,threshold_mw,epsilon_e,mean_overload_mw,mean_sq_overload_mw2,max_overload_mw\n",
    );
    for c in &report.constraints {
        for (ti, t) in report.thresholds_mw.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.constraint_id,
                report.meta.formulation,
                t,
                c.epsilon_e[ti],
                c.mean_overload_mw,
                c.mean_sq_overload_mw2,
                c.max_overload_mw
            ));
        }
    }
    out
}

/// Plot-ready threshold bars: one row per constraint, one epsilon_e column
/// per threshold.
pub fn threshold_bars_csv(report: &ViolationReport) -> String {
    let mut header = String::from("constraint_id,formulation");
    for t in &report.thresholds_mw {
        header.push_str(&format!(",eps_gt_{t}mw"));
    }
    header.push('\n');
    let mut out = header;
    for c in &report.constraints {
        out.push_str(&format!("{},{}", c.constraint_id, report.meta.formulation));
        for e in &c.epsilon_e {
            out.push_str(&format!(",{e}"));
        }
        out.push('\n');
    }
    out
}
