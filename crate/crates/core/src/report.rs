//! Report structures and serializers for CLI and FFI artifacts.
//!
//! JSON artifacts are serde structs matching the schemas shipped under
//! `schemas/`; CSV artifacts have stable documented headers. Floats in CSV
//! and tabular output are printed with 15 significant digits so exact zeros
//! stay distinguishable from round-off; JSON numbers use the serializer's
//! shortest round-trip form, which loses nothing.
//!
//! Pair indices are one-based in every artifact (matching the way pairs are
//! written in prose: (1,2), (1,3), (2,3)); library APIs are zero-based.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::montecarlo::{CellStatus, CountsTable, OracleComparison, RunConfig, RNG_ID};
use crate::pigeonhole::{CorrelationPattern, GeneralReport, PairClass, Scenario};
use crate::qstate::{RegisterShape, StateVector};
use crate::tol;
use crate::weakcoupling::{
    CouplingRegime, DeflectionScan, PostselectedPointers, SlopeVerdict, UnconditionedPointers,
};

/// Format a float with 15 significant digits.
pub fn fmt_sig15(x: f64) -> String {
    format!("{x:.14e}")
}

/// One pair entry of a pattern report; indices are one-based for display.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub classification: String,
    pub p_same: f64,
}

/// JSON form of a correlation-pattern analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternReport {
    pub num_particles: usize,
    pub num_boxes: usize,
    pub outcome: Vec<usize>,
    pub pairs: Vec<PairEntry>,
    pub max_same_probability: f64,
    pub roots_of_unity_residual: f64,
    pub pattern_threshold: f64,
}

pub fn classification_name(class: PairClass) -> &'static str {
    match class {
        PairClass::Same => "same",
        PairClass::Different => "different",
        PairClass::Undetermined => "undetermined",
    }
}

/// Build the JSON report for one scenario's pattern.
pub fn pattern_report(scenario: &Scenario, pattern: &CorrelationPattern) -> PatternReport {
    PatternReport {
        num_particles: scenario.shape().num_particles(),
        num_boxes: scenario.shape().num_boxes(),
        outcome: scenario.outcome().to_vec(),
        pairs: pattern
            .pairs
            .iter()
            .map(|p| PairEntry {
                i: p.i + 1,
                j: p.j + 1,
                classification: classification_name(p.class).to_string(),
                p_same: p.p_same,
            })
            .collect(),
        max_same_probability: pattern.max_p_same(),
        roots_of_unity_residual: crate::pigeonhole::roots_of_unity_residual(
            scenario.shape().num_boxes(),
        ),
        pattern_threshold: tol::PATTERN_TOL,
    }
}

/// CSV rows for one or more pattern reports.
/// Header: `outcome,pair_i,pair_j,classification,p_same`.
pub fn patterns_csv(reports: &[PatternReport]) -> String {
    let mut out = String::from("outcome,pair_i,pair_j,classification,p_same\n");
    for r in reports {
        let outcome = r
            .outcome
            .iter()
            .map(|o| o.to_string())
            .collect::<Vec<_>>()
            .join("-");
        for p in &r.pairs {
            out.push_str(&format!(
                "{outcome},{},{},{},{}\n",
                p.i,
                p.j,
                p.classification,
                fmt_sig15(p.p_same)
            ));
        }
    }
    out
}

/// JSON form of a generalization check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralReportOut {
    pub num_particles: usize,
    pub num_boxes: usize,
    pub max_pair_same_probability: f64,
    pub roots_of_unity_residual: f64,
    pub probability_tolerance: f64,
    pub residual_tolerance: f64,
    pub passed: bool,
}

pub fn general_report(r: &GeneralReport) -> GeneralReportOut {
    GeneralReportOut {
        num_particles: r.num_particles,
        num_boxes: r.num_boxes,
        max_pair_same_probability: r.max_pair_same_probability,
        roots_of_unity_residual: r.roots_of_unity_residual,
        probability_tolerance: tol::PATTERN_TOL,
        residual_tolerance: tol::ROOTS_RESIDUAL_TOL,
        passed: r.max_pair_same_probability <= tol::PATTERN_TOL
            && r.roots_of_unity_residual <= tol::ROOTS_RESIDUAL_TOL,
    }
}

/// CSV rows for generalization checks.
/// Header: `num_particles,num_boxes,max_pair_same_probability,roots_of_unity_residual,passed`.
pub fn general_csv(reports: &[GeneralReportOut]) -> String {
    let mut out = String::from(
        "num_particles,num_boxes,max_pair_same_probability,roots_of_unity_residual,passed\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.num_particles,
            r.num_boxes,
            fmt_sig15(r.max_pair_same_probability),
            fmt_sig15(r.roots_of_unity_residual),
            r.passed
        ));
    }
    out
}

fn outcome_label(shape: RegisterShape, config: usize) -> String {
    shape
        .digits(config)
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// Counts CSV. Header: `intermediate_1,..,intermediate_K,final,selected,count`
/// with one column per configured intermediate measurement; rows are sorted
/// by outcome tuple then final index, so equal seeds give identical bytes.
pub fn counts_csv(cfg: &RunConfig, counts: &CountsTable) -> String {
    let k = cfg.intermediate.len();
    let mut header: Vec<String> = (1..=k).map(|i| format!("intermediate_{i}")).collect();
    header.push("final".into());
    header.push("selected".into());
    header.push("count".into());
    let mut out = header.join(",");
    out.push('\n');
    let selected_index = cfg
        .scenario
        .shape()
        .index(cfg.scenario.outcome())
        .expect("scenario outcome is valid");
    for ((inter, fin), count) in &counts.counts {
        let mut row: Vec<String> = inter
            .iter()
            .enumerate()
            .map(|(step, &o)| cfg.intermediate[step].labels()[o].clone())
            .collect();
        row.push(outcome_label(cfg.scenario.shape(), *fin));
        row.push((*fin == selected_index).to_string());
        row.push(count.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn status_name(status: CellStatus) -> &'static str {
    match status {
        CellStatus::Ok => "ok",
        CellStatus::Flagged => "flagged",
        CellStatus::Extreme => "extreme",
    }
}

/// One cell of the oracle comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCellOut {
    pub intermediate: Vec<String>,
    #[serde(rename = "final")]
    pub final_outcome: String,
    pub selected: bool,
    pub exact_probability: f64,
    pub count: u64,
    pub empirical_frequency: f64,
    /// Null for degenerate cells (exact probability 0 or 1).
    pub z_score: Option<f64>,
    pub status: String,
}

/// JSON form of the empirical-vs-exact comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReportOut {
    pub samples: u64,
    pub seed: u64,
    pub rng: String,
    pub total_exact_probability: f64,
    pub z_ok: f64,
    pub z_flag: f64,
    pub cells: Vec<OracleCellOut>,
}

pub fn oracle_report(cfg: &RunConfig, cmp: &OracleComparison) -> OracleReportOut {
    OracleReportOut {
        samples: cmp.samples,
        seed: cmp.seed,
        rng: RNG_ID.to_string(),
        total_exact_probability: cmp.total_exact_probability,
        z_ok: tol::Z_OK,
        z_flag: tol::Z_FLAG,
        cells: cmp
            .cells
            .iter()
            .map(|c| OracleCellOut {
                intermediate: c
                    .key
                    .0
                    .iter()
                    .enumerate()
                    .map(|(step, &o)| cfg.intermediate[step].labels()[o].clone())
                    .collect(),
                final_outcome: outcome_label(cfg.scenario.shape(), c.key.1),
                selected: c.selected,
                exact_probability: c.exact_probability,
                count: c.count,
                empirical_frequency: c.empirical_frequency,
                z_score: c.z_score,
                status: status_name(c.status).to_string(),
            })
            .collect(),
    }
}

pub fn regime_name(regime: CouplingRegime) -> &'static str {
    match regime {
        CouplingRegime::Weak => "weak",
        CouplingRegime::Strong => "strong-coupling",
    }
}

pub fn verdict_name(verdict: SlopeVerdict) -> &'static str {
    match verdict {
        SlopeVerdict::FirstOrder => "first-order-deflection",
        SlopeVerdict::NoFirstOrder => "no-first-order-deflection",
        SlopeVerdict::Unclassified => "unclassified",
        SlopeVerdict::InsufficientPoints => "insufficient-points",
    }
}

/// Scan CSV. Header:
/// `lambda,pair_i,pair_j,mean_shift,success_probability,regime`.
pub fn scan_csv(scan: &DeflectionScan) -> String {
    let mut out = String::from("lambda,pair_i,pair_j,mean_shift,success_probability,regime\n");
    for row in &scan.rows {
        for (p, &(i, j)) in scan.pairs.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_sig15(row.lambda),
                i + 1,
                j + 1,
                fmt_sig15(row.mean_shifts[p]),
                fmt_sig15(row.success_probability),
                regime_name(row.regime)
            ));
        }
    }
    out
}

/// One pair's slope fit in the deflection report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFitOut {
    pub i: usize,
    pub j: usize,
    /// Null when fewer than two points survive the shift floor.
    pub slope: Option<f64>,
    pub points_used: usize,
    pub points_excluded: usize,
    pub verdict: String,
}

/// JSON form of a deflection scan's slope fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeflectionReportOut {
    pub sigma: f64,
    pub postselected: bool,
    pub spans_decade: bool,
    pub shift_floor: f64,
    pub slope_null: f64,
    pub slope_null_tolerance: f64,
    pub slope_linear: f64,
    pub slope_linear_tolerance: f64,
    pub pairs: Vec<PairFitOut>,
}

pub fn deflection_report(scan: &DeflectionScan) -> DeflectionReportOut {
    DeflectionReportOut {
        sigma: scan.sigma,
        postselected: scan.postselected,
        spans_decade: scan.spans_decade,
        shift_floor: tol::SHIFT_FLOOR,
        slope_null: tol::SLOPE_NULL,
        slope_null_tolerance: tol::SLOPE_NULL_TOL,
        slope_linear: tol::SLOPE_LINEAR,
        slope_linear_tolerance: tol::SLOPE_LINEAR_TOL,
        pairs: scan
            .fits
            .iter()
            .map(|f| PairFitOut {
                i: f.pair.0 + 1,
                j: f.pair.1 + 1,
                slope: f.slope,
                points_used: f.points_used,
                points_excluded: f.points_excluded,
                verdict: verdict_name(f.verdict).to_string(),
            })
            .collect(),
    }
}

/// One pair's sampled marginal density, read as a spectral line profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectraPairOut {
    pub i: usize,
    pub j: usize,
    /// The line shift: mean displacement of the marginal.
    pub mean_shift: f64,
    /// Sampled (x, density) points.
    pub curve: Vec<[f64; 2]>,
}

/// Density curves at one coupling strength.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectraScanOut {
    pub lambda: f64,
    pub success_probability: f64,
    pub pairs: Vec<SpectraPairOut>,
}

/// JSON form of the spectra command output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectraReportOut {
    pub sigma: f64,
    pub postselected: bool,
    pub scans: Vec<SpectraScanOut>,
}

/// Sample points for a spectra curve: `points` values spanning the given
/// range inclusively.
pub fn sample_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|k| lo + step * k as f64).collect()
}

/// Spectra block for a post-selected coupled state.
pub fn spectra_scan_postselected(
    ps: &PostselectedPointers,
    xs: &[f64],
    pair_filter: Option<(usize, usize)>,
) -> SpectraScanOut {
    SpectraScanOut {
        lambda: ps.lambda(),
        success_probability: ps.success_probability(),
        pairs: ps
            .pairs()
            .iter()
            .enumerate()
            .filter(|(_, &pr)| pair_filter.is_none_or(|want| pr == want))
            .map(|(idx, &(i, j))| SpectraPairOut {
                i: i + 1,
                j: j + 1,
                mean_shift: ps.mean_shift(idx),
                curve: xs.iter().map(|&x| [x, ps.density(idx, x)]).collect(),
            })
            .collect(),
    }
}

/// Spectra block for an unconditioned coupled state.
pub fn spectra_scan_unconditioned(
    un: &UnconditionedPointers,
    lambda: f64,
    xs: &[f64],
    pair_filter: Option<(usize, usize)>,
) -> SpectraScanOut {
    SpectraScanOut {
        lambda,
        success_probability: 1.0,
        pairs: un
            .pairs()
            .iter()
            .enumerate()
            .filter(|(_, &pr)| pair_filter.is_none_or(|want| pr == want))
            .map(|(idx, &(i, j))| SpectraPairOut {
                i: i + 1,
                j: j + 1,
                mean_shift: un.mean_shift(idx),
                curve: xs.iter().map(|&x| [x, un.density(idx, x)]).collect(),
            })
            .collect(),
    }
}

/// Spectra CSV. Header: `lambda,pair_i,pair_j,x,density`.
pub fn spectra_csv(report: &SpectraReportOut) -> String {
    let mut out = String::from("lambda,pair_i,pair_j,x,density\n");
    for scan in &report.scans {
        for pair in &scan.pairs {
            for [x, d] in &pair.curve {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_sig15(scan.lambda),
                    pair.i,
                    pair.j,
                    fmt_sig15(*x),
                    fmt_sig15(*d)
                ));
            }
        }
    }
    out
}

/// StateVector to JSON: shape plus amplitudes as [re, im] pairs.
pub fn state_to_json(s: &StateVector) -> serde_json::Value {
    serde_json::json!({
        "num_particles": s.shape().num_particles(),
        "num_boxes": s.shape().num_boxes(),
        "amplitudes": s.amplitudes().iter().map(|a| [a.re, a.im]).collect::<Vec<_>>(),
    })
}

/// StateVector from the JSON form produced by [`state_to_json`].
pub fn state_from_json(v: &serde_json::Value) -> Result<StateVector> {
    let obj = v
        .as_object()
        .ok_or_else(|| SimError::Config("state must be a JSON object".into()))?;
    let get_usize = |key: &str| -> Result<usize> {
        obj.get(key)
            .and_then(|x| x.as_u64())
            .map(|x| x as usize)
            .ok_or_else(|| SimError::Config(format!("state field '{key}' must be an integer")))
    };
    let n = get_usize("num_particles")?;
    let m = get_usize("num_boxes")?;
    let shape = RegisterShape::new(n, m)?;
    let raw = obj
        .get("amplitudes")
        .and_then(|x| x.as_array())
        .ok_or_else(|| SimError::Config("state field 'amplitudes' must be an array".into()))?;
    let amps = raw
        .iter()
        .map(|pair| {
            let xs = pair
                .as_array()
                .filter(|xs| xs.len() == 2)
                .ok_or_else(|| SimError::Config("amplitude must be an [re, im] pair".into()))?;
            let re = xs[0]
                .as_f64()
                .ok_or_else(|| SimError::Config("amplitude entries must be numbers".into()))?;
            let im = xs[1]
                .as_f64()
                .ok_or_else(|| SimError::Config("amplitude entries must be numbers".into()))?;
            Ok(C64::new(re, im))
        })
        .collect::<Result<Vec<_>>>()?;
    StateVector::from_amplitudes(shape, amps)
}
