//! Machine-readable analysis reports. Every exact quantity is serialized as a
//! rational string (`"p/q"` or an integer).

use serde::{Deserialize, Serialize};

use crate::brunovsky::build_transform;
use crate::coercivity::{estimate_tstar, CoercivityError, CoercivityProblem, EndpointMode, Status};
use crate::exact::format_vec;
use crate::lie::{classify, compute_s2, krener_checks, NormThreshold, Verdict};
use crate::manifold::build_m2;
use crate::rational::format_rational;
use crate::system::{ControlSystem, SystemKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldCoefficient {
    pub i: usize,
    pub j: usize,
    /// Vector multiplying `P_i P_j` in `G₂`.
    pub coef: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldSummary {
    pub equations: Vec<String>,
    pub coefficients: Vec<ManifoldCoefficient>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrunovskySummary {
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivitySummary {
    pub status: Status,
    pub tstar_est: Option<f64>,
    pub tstar_err: Option<f64>,
    pub grid_n: usize,
    pub t_max: f64,
    pub endpoint: EndpointMode,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub system: String,
    pub n: usize,
    pub kind: SystemKind,
    pub classification: String,
    pub d: usize,
    pub k: Option<usize>,
    pub d_k: Option<String>,
    pub s1_basis: Vec<String>,
    pub s2_basis: Vec<String>,
    pub s2_in_s1: bool,
    /// `l ↦ observed sign` of `P⊥[ad^l, ad^{2k−1−l}](0)` against `P⊥W_k`.
    pub krener_signs: Vec<i8>,
    pub brunovsky: Option<BrunovskySummary>,
    pub manifold: Option<ManifoldSummary>,
    pub coercivity: Option<CoercivitySummary>,
    pub threshold: Option<NormThreshold>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn strings(v: &[crate::rational::Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

/// Exact part of the analysis.
pub fn analyze(sys: &ControlSystem) -> AnalysisReport {
    let (qd, report, c) = classify(sys);
    let s2 = compute_s2(&qd, &report, report.kmax);
    let brunovsky = build_transform(&qd, &report)
        .ok()
        .map(|t| BrunovskySummary { alpha: strings(&t.alpha), beta: strings(&t.beta) });
    let manifold = match c.verdict {
        Verdict::LinearlyControllable => None,
        _ => build_m2(&report).ok().map(|m| {
            let mut coefficients = Vec::new();
            for i in 0..m.d {
                for j in i..m.d {
                    if !crate::exact::is_zero_vec(&m.coef[i][j]) {
                        coefficients.push(ManifoldCoefficient { i: i + 1, j: j + 1, coef: format_vec(&m.coef[i][j]) });
                    }
                }
            }
            ManifoldSummary { equations: m.equations(), coefficients }
        }),
    };
    let krener_signs = match c.verdict {
        Verdict::Drift { k, .. } => krener_checks(&report, k)
            .map(|r| r.signs.iter().map(|s| s.observed).collect())
            .unwrap_or_default(),
        _ => Vec::new(),
    };
    AnalysisReport {
        system: sys.name().to_string(),
        n: sys.n(),
        kind: sys.kind(),
        classification: c.verdict.label().to_string(),
        d: c.d,
        k: c.drift_k(),
        d_k: c.verdict.direction().map(|v| format_vec(v)),
        s1_basis: report.s1.basis().iter().map(|v| format_vec(v)).collect(),
        s2_basis: s2.basis().iter().map(|v| format_vec(v)).collect(),
        s2_in_s1: report.s1.contains_subspace(&s2),
        krener_signs,
        brunovsky,
        manifold,
        coercivity: None,
        threshold: c.threshold,
    }
}

/// Adds the coercivity-time estimate to a drift report.
pub fn with_coercivity(
    mut r: AnalysisReport,
    sys: &ControlSystem,
    t_max: f64,
    grid: usize,
    endpoint: EndpointMode,
) -> Result<AnalysisReport, CoercivityError> {
    let p = CoercivityProblem::new(sys, endpoint)?;
    let c = estimate_tstar(&p, t_max, grid)?;
    r.coercivity = Some(CoercivitySummary {
        status: c.status,
        tstar_est: c.tstar_est,
        tstar_err: c.tstar_err,
        grid_n: c.grid_n,
        t_max: c.t_max,
        endpoint: c.endpoint,
        notes: c.notes,
    });
    Ok(r)
}
