//! Grid data model, JSON case ingestion and the DC flow matrix.
//!
//! The flow matrix `M` maps per-bus net injections (MW) to per-line flows
//! (MW) under the DC approximation: the bus susceptance Laplacian is reduced
//! by the slack row/column, inverted, padded back with zeros at the slack
//! position and composed with the line susceptance matrix. Susceptances are
//! per-unit on `base_mva`, but the base cancels in `M`, so all flow math
//! stays in MW.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{CoreError, Result};
use crate::policy::Policy;

/// A transmission line with a symmetric MW limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Per-unit series susceptance (1/reactance under DC assumptions).
    pub susceptance: f64,
    /// Flow limit in MW; the lower limit is the negation.
    pub flow_limit: f64,
}

/// A controllable generator with a linear bid.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    /// $/MWh
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// A wind in-feed with its forecast output.
#[derive(Debug, Clone, PartialEq)]
pub struct WindSource {
    pub bus: usize,
    pub forecast: f64,
}

/// Validated, immutable grid description. Bus ids are 0-based and
/// contiguous; demand is stored padded (zero at buses without load).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub n_buses: usize,
    pub slack_bus: usize,
    pub base_mva: f64,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub wind: Vec<WindSource>,
    /// Per-bus real power demand (MW), length `n_buses`.
    pub demand: DVector<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    buses: usize,
    slack_bus: usize,
    base_mva: f64,
    lines: Vec<LineDoc>,
    generators: Vec<GenDoc>,
    wind: Vec<WindDoc>,
    demand: Vec<DemandDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDoc {
    from: usize,
    to: usize,
    susceptance: f64,
    limit_mw: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDoc {
    bus: usize,
    cost: f64,
    p_min: f64,
    p_max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WindDoc {
    bus: usize,
    forecast_mw: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandDoc {
    bus: usize,
    mw: f64,
}

/// Parse and validate a case document from JSON text.
pub fn load_case_str(text: &str) -> Result<NetworkCase> {
    let doc: CaseDoc =
        serde_json::from_str(text).map_err(|e| CoreError::Parse(format!("case document: {e}")))?;
    case_from_doc(doc)
}

/// Parse and validate a case document from a file path.
pub fn load_case_path(path: &std::path::Path) -> Result<NetworkCase> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::Parse(format!("cannot read {}: {e}", path.display())))?;
    load_case_str(&text)
}

fn check_bus(n_buses: usize, bus: usize, what: &str) -> Result<()> {
    if bus >= n_buses {
        return Err(CoreError::Structure(format!(
            "{what} references bus {bus}, but the case has {n_buses} buses"
        )));
    }
    Ok(())
}

fn case_from_doc(doc: CaseDoc) -> Result<NetworkCase> {
    let n = doc.buses;
    if n == 0 {
        return Err(CoreError::Structure("case has zero buses".into()));
    }
    check_bus(n, doc.slack_bus, "slack_bus")?;
    if !(doc.base_mva.is_finite() && doc.base_mva > 0.0) {
        return Err(CoreError::Structure(format!(
            "base_mva must be positive, got {}",
            doc.base_mva
        )));
    }

    let mut lines = Vec::with_capacity(doc.lines.len());
    for (i, l) in doc.lines.iter().enumerate() {
        check_bus(n, l.from, &format!("lines[{i}].from"))?;
        check_bus(n, l.to, &format!("lines[{i}].to"))?;
        if l.from == l.to {
            return Err(CoreError::Structure(format!(
                "lines[{i}] is a self-loop at bus {}",
                l.from
            )));
        }
        if !(l.susceptance.is_finite() && l.susceptance > 0.0) {
            return Err(CoreError::Structure(format!(
                "lines[{i}].susceptance must be positive, got {}",
                l.susceptance
            )));
        }
        if !(l.limit_mw.is_finite() && l.limit_mw > 0.0) {
            return Err(CoreError::Structure(format!(
                "lines[{i}].limit_mw must be positive, got {}",
                l.limit_mw
            )));
        }
        lines.push(Line {
            from_bus: l.from,
            to_bus: l.to,
            susceptance: l.susceptance,
            flow_limit: l.limit_mw,
        });
    }

    let mut generators = Vec::with_capacity(doc.generators.len());
    for (i, g) in doc.generators.iter().enumerate() {
        check_bus(n, g.bus, &format!("generators[{i}].bus"))?;
        if !g.cost.is_finite() {
            return Err(CoreError::Structure(format!(
                "generators[{i}].cost must be finite"
            )));
        }
        if !(g.p_min.is_finite() && g.p_max.is_finite() && 0.0 <= g.p_min && g.p_min <= g.p_max) {
            return Err(CoreError::Structure(format!(
                "generators[{i}] requires 0 <= p_min <= p_max, got [{}, {}]",
                g.p_min, g.p_max
            )));
        }
        generators.push(Generator {
            bus: g.bus,
            cost: g.cost,
            p_min: g.p_min,
            p_max: g.p_max,
        });
    }

    let mut wind = Vec::with_capacity(doc.wind.len());
    for (i, w) in doc.wind.iter().enumerate() {
        check_bus(n, w.bus, &format!("wind[{i}].bus"))?;
        if !(w.forecast_mw.is_finite() && w.forecast_mw >= 0.0) {
            return Err(CoreError::Structure(format!(
                "wind[{i}].forecast_mw must be nonnegative, got {}",
                w.forecast_mw
            )));
        }
        wind.push(WindSource {
            bus: w.bus,
            forecast: w.forecast_mw,
        });
    }

    let mut demand = DVector::zeros(n);
    let mut seen = vec![false; n];
    for (i, d) in doc.demand.iter().enumerate() {
        check_bus(n, d.bus, &format!("demand[{i}].bus"))?;
        if !(d.mw.is_finite() && d.mw >= 0.0) {
            return Err(CoreError::Structure(format!(
                "demand[{i}].mw must be finite and nonnegative, got {}",
                d.mw
            )));
        }
        if seen[d.bus] {
            return Err(CoreError::Structure(format!(
                "demand[{i}] duplicates bus {}",
                d.bus
            )));
        }
        seen[d.bus] = true;
        demand[d.bus] = d.mw;
    }

    let case = NetworkCase {
        n_buses: n,
        slack_bus: doc.slack_bus,
        base_mva: doc.base_mva,
        lines,
        generators,
        wind,
        demand,
    };
    case.check_connected()?;
    Ok(case)
}

impl NetworkCase {
    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_gens(&self) -> usize {
        self.generators.len()
    }

    pub fn n_wind(&self) -> usize {
        self.wind.len()
    }

    /// Wind forecast aggregated onto buses, length `n_buses`.
    pub fn wind_forecast_by_bus(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.n_buses);
        for w in &self.wind {
            v[w.bus] += w.forecast;
        }
        v
    }

    /// Bus-by-generator incidence (n_buses x n_gens).
    pub fn gen_incidence(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n_buses, self.n_gens());
        for (j, gen) in self.generators.iter().enumerate() {
            g[(gen.bus, j)] = 1.0;
        }
        g
    }

    /// Bus-by-wind-source incidence (n_buses x n_wind).
    pub fn wind_incidence(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n_buses, self.n_wind());
        for (j, src) in self.wind.iter().enumerate() {
            w[(src.bus, j)] = 1.0;
        }
        w
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.sum()
    }

    pub fn total_wind_forecast(&self) -> f64 {
        self.wind.iter().map(|w| w.forecast).sum()
    }

    pub fn gen_costs(&self) -> DVector<f64> {
        DVector::from_iterator(self.n_gens(), self.generators.iter().map(|g| g.cost))
    }

    fn check_connected(&self) -> Result<()> {
        let mut reached = vec![false; self.n_buses];
        let mut stack = vec![0usize];
        reached[0] = true;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.n_buses];
        for l in &self.lines {
            adj[l.from_bus].push(l.to_bus);
            adj[l.to_bus].push(l.from_bus);
        }
        while let Some(b) = stack.pop() {
            for &nb in &adj[b] {
                if !reached[nb] {
                    reached[nb] = true;
                    stack.push(nb);
                }
            }
        }
        if let Some(isolated) = reached.iter().position(|r| !r) {
            return Err(CoreError::Structure(format!(
                "line graph is disconnected: bus {isolated} is unreachable from bus 0"
            )));
        }
        Ok(())
    }
}

/// Dense map from per-bus net injections (MW) to per-line flows (MW).
/// Row order follows `case.lines`; flow is positive from `from_bus` to
/// `to_bus`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub matrix: DMatrix<f64>,
}

/// Build the injection-to-flow matrix by reducing the bus susceptance
/// Laplacian at the declared slack bus, inverting, and padding the slack
/// row/column back with zeros.
///
/// The slack column of the result is identically zero, so `M . 1` has a
/// fixed, documented value; callers keep injections balanced, which makes
/// the convention unobservable in flows.
pub fn build_flow_matrix(case: &NetworkCase) -> Result<FlowMatrix> {
    let n = case.n_buses;
    let nl = case.n_lines();
    let mut laplacian = DMatrix::zeros(n, n);
    let mut line_susceptance = DMatrix::zeros(nl, n);
    for (l, line) in case.lines.iter().enumerate() {
        let b = line.susceptance;
        let (f, t) = (line.from_bus, line.to_bus);
        laplacian[(f, f)] += b;
        laplacian[(t, t)] += b;
        laplacian[(f, t)] -= b;
        laplacian[(t, f)] -= b;
        line_susceptance[(l, f)] = b;
        line_susceptance[(l, t)] = -b;
    }

    if n == 1 {
        return Ok(FlowMatrix {
            matrix: DMatrix::zeros(nl, 1),
        });
    }

    let reduced = laplacian
        .clone()
        .remove_row(case.slack_bus)
        .remove_column(case.slack_bus);
    let inv = reduced.try_inverse().ok_or_else(|| {
        CoreError::Numerical("reduced bus susceptance matrix is singular".into())
    })?;

    // pad the inverse back to n x n with zeros at the slack row/column
    let mut padded = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let ii = if i >= case.slack_bus { i + 1 } else { i };
        for j in 0..n - 1 {
            let jj = if j >= case.slack_bus { j + 1 } else { j };
            padded[(ii, jj)] = inv[(i, j)];
        }
    }

    Ok(FlowMatrix {
        matrix: line_susceptance * padded,
    })
}

/// Per-bus net injection for realized generator outputs and a wind
/// fluctuation: G p_out + W (v + omega) - d.
pub fn injection(case: &NetworkCase, gen_outputs: &DVector<f64>, omega: &DVector<f64>) -> DVector<f64> {
    let mut inj = -case.demand.clone();
    for (j, g) in case.generators.iter().enumerate() {
        inj[g.bus] += gen_outputs[j];
    }
    for (j, w) in case.wind.iter().enumerate() {
        inj[w.bus] += w.forecast + omega[j];
    }
    inj
}

/// Per-line flows (MW) for a dispatch under a control policy and a
/// realized fluctuation: M (p~(omega) - d + v + omega).
pub fn line_flow(
    case: &NetworkCase,
    m: &FlowMatrix,
    policy: &Policy,
    omega: &DVector<f64>,
) -> Result<DVector<f64>> {
    if omega.len() != case.n_wind() {
        return Err(CoreError::Dimension(format!(
            "omega has {} entries, case has {} wind sources",
            omega.len(),
            case.n_wind()
        )));
    }
    if m.matrix.nrows() != case.n_lines() || m.matrix.ncols() != case.n_buses {
        return Err(CoreError::Dimension(format!(
            "flow matrix is {}x{}, case needs {}x{}",
            m.matrix.nrows(),
            m.matrix.ncols(),
            case.n_lines(),
            case.n_buses
        )));
    }
    let outputs = policy.respond(omega)?;
    if outputs.len() != case.n_gens() {
        return Err(CoreError::Dimension(format!(
            "policy produced {} generator outputs, case has {}",
            outputs.len(),
            case.n_gens()
        )));
    }
    Ok(&m.matrix * injection(case, &outputs, omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triangle_case() -> NetworkCase {
        load_case_str(
            r#"{
                "buses": 3,
                "slack_bus": 0,
                "base_mva": 100.0,
                "lines": [
                    {"from": 0, "to": 1, "susceptance": 10.0, "limit_mw": 100.0},
                    {"from": 1, "to": 2, "susceptance": 10.0, "limit_mw": 100.0},
                    {"from": 0, "to": 2, "susceptance": 10.0, "limit_mw": 100.0}
                ],
                "generators": [{"bus": 0, "cost": 10.0, "p_min": 0.0, "p_max": 200.0}],
                "wind": [],
                "demand": [{"bus": 2, "mw": 80.0}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn triangle_parses() {
        let case = triangle_case();
        assert_eq!(case.n_buses, 3);
        assert_eq!(case.n_lines(), 3);
        assert_eq!(case.n_gens(), 1);
        assert_eq!(case.demand[2], 80.0);
        assert_eq!(case.demand[0], 0.0);
    }

    #[test]
    fn bad_bus_reference_is_structural() {
        let err = load_case_str(
            r#"{
                "buses": 3,
                "slack_bus": 0,
                "base_mva": 100.0,
                "lines": [{"from": 0, "to": 99, "susceptance": 1.0, "limit_mw": 10.0}],
                "generators": [],
                "wind": [],
                "demand": []
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::Structure(_)), "{err}");
        assert!(err.to_string().contains("99"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = load_case_str(
            r#"{
                "buses": 1, "slack_bus": 0, "base_mva": 100.0,
                "lines": [], "generators": [], "wind": [], "demand": [],
                "extra_key": 1
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::Parse(_)));
        assert!(err.to_string().contains("extra_key"));
    }

    #[test]
    fn disconnected_graph_is_structural() {
        let err = load_case_str(
            r#"{
                "buses": 3,
                "slack_bus": 0,
                "base_mva": 100.0,
                "lines": [{"from": 0, "to": 1, "susceptance": 1.0, "limit_mw": 10.0}],
                "generators": [],
                "wind": [],
                "demand": []
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::Structure(_)));
        assert!(err.to_string().contains("disconnected"));
    }

    #[test]
    fn two_bus_flow_matrix_is_unit_row() {
        // slack at bus 1: an injection at bus 0 flows fully over the line
        let case = load_case_str(
            r#"{
                "buses": 2,
                "slack_bus": 1,
                "base_mva": 100.0,
                "lines": [{"from": 0, "to": 1, "susceptance": 4.2, "limit_mw": 10.0}],
                "generators": [],
                "wind": [],
                "demand": []
            }"#,
        )
        .unwrap();
        let fm = build_flow_matrix(&case).unwrap();
        assert!((fm.matrix[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(fm.matrix[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn triangle_split_two_thirds() {
        // equal susceptances: +1 at bus 0, -1 at bus 1 splits 2/3 direct, 1/3
        // around the two-hop path
        let case = triangle_case();
        let fm = build_flow_matrix(&case).unwrap();
        let mut inj = DVector::zeros(3);
        inj[0] = 1.0;
        inj[1] = -1.0;
        let flows = &fm.matrix * inj;
        assert!((flows[0] - 2.0 / 3.0).abs() < 1e-12, "direct line {}", flows[0]);
        assert!((flows[2] - 1.0 / 3.0).abs() < 1e-12, "0->2 leg {}", flows[2]);
        assert!((flows[1] + 1.0 / 3.0).abs() < 1e-12, "1->2 leg {}", flows[1]);
    }

    #[test]
    fn flow_matrix_is_deterministic() {
        let case = triangle_case();
        let a = build_flow_matrix(&case).unwrap();
        let b = build_flow_matrix(&case).unwrap();
        assert_eq!(a, b);
    }
}
