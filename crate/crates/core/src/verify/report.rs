//! Ratios of the two numerical seminorms to the functional sum.

use serde::Serialize;

use super::oracle::{variational_oracle, OracleReport};
use super::quadrature::{converged_quadrature, QuadratureReport};
use crate::error::{Error, Result};
use crate::extension::ExtensionField;

/// Below this a quadrature total counts as zero.
pub const QUADRATURE_ZERO: f64 = 1e-12;
/// Below this an oracle minimum counts as zero.
pub const ORACLE_ZERO: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct OracleRatio {
    pub n: usize,
    pub oracle: f64,
    pub r_lower: Option<f64>,
    /// `max(0, oracle - quadrature)`.
    pub excess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparabilityRow {
    pub p: f64,
    /// `Σ λ_ν |ℓ_ν(f)|^p`.
    pub norm: f64,
    pub quadrature: f64,
    /// Relative gap between the last two refinement levels.
    pub refinement_gap: f64,
    pub r_upper: Option<f64>,
    pub oracle: Vec<OracleRatio>,
    /// Richardson estimate of the oracle limit from the last three grids
    /// (second order in `h`), when three grids were run.
    pub oracle_extrapolated: Option<f64>,
    /// `s^(2p-2)`: multiply frame values by this for user coordinates.
    pub user_factor: f64,
    pub degenerate: bool,
    pub inconsistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparabilityReport {
    pub n_sites: usize,
    pub rows: Vec<ComparabilityRow>,
    #[serde(skip)]
    pub quadrature: Vec<QuadratureReport>,
    #[serde(skip)]
    pub oracles: Vec<Vec<OracleReport>>,
}

impl ComparabilityRow {
    /// Ratio `r_lower(n_fine) / r_lower(n_coarse)`.
    pub fn lower_drift(&self, coarse: usize, fine: usize) -> Option<f64> {
        let get = |n| self.oracle.iter().find(|o| o.n == n).and_then(|o| o.r_lower);
        Some(get(fine)? / get(coarse)?)
    }
}

/// Quadrature and oracle at every grid size in `grids`, for every `p`.
pub fn comparability_report(
    field: &ExtensionField,
    ps: &[f64],
    grids: &[usize],
    order: usize,
    refine: u32,
) -> Result<ComparabilityReport> {
    if grids.is_empty() {
        return Err(Error::input("at least one oracle grid size is required"));
    }
    let model = field.model();
    let (quad, gaps) = converged_quadrature(field, ps, order, refine)?;
    let oracles: Vec<Vec<OracleReport>> =
        grids.iter().map(|&n| variational_oracle(field, ps, n)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, &p) in ps.iter().enumerate() {
        let norm = model.family.evaluate_norm(field.values(), p)?;
        let q = quad[k].total;
        let ratio = |x: f64| if norm > 0.0 { Some(x / norm) } else { None };
        let oracle: Vec<OracleRatio> = oracles
            .iter()
            .map(|o| OracleRatio { n: o[k].n, oracle: o[k].value, r_lower: ratio(o[k].value), excess: (o[k].value - q).max(0.0) })
            .collect();
        let oracle_extrapolated = (oracle.len() >= 3).then(|| {
            let m = oracle.len();
            let (a, b) = (oracle[m - 2].oracle, oracle[m - 1].oracle);
            let ratio = (oracles[m - 2][k].h / oracles[m - 1][k].h).powi(2);
            (ratio * b - a) / (ratio - 1.0)
        });
        let degenerate = norm == 0.0;
        let any_oracle = oracle.iter().any(|o| o.oracle > ORACLE_ZERO);
        let inconsistent = if degenerate { q > QUADRATURE_ZERO || any_oracle } else { q <= QUADRATURE_ZERO };
        rows.push(ComparabilityRow {
            p,
            norm,
            quadrature: q,
            refinement_gap: gaps[k],
            r_upper: ratio(q),
            oracle,
            oracle_extrapolated,
            user_factor: model.sites.seminorm_factor(p),
            degenerate,
            inconsistent,
        });
    }
    Ok(ComparabilityReport { n_sites: model.sites.len(), rows, quadrature: quad, oracles })
}

/// Min, median and max of a sample.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Band {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Band {
    pub fn of(values: &[f64]) -> Option<Band> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
        Some(Band { min: v[0], median, max: v[m - 1] })
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.min >= lo && self.max <= hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Model;

    #[test]
    fn two_point_smoke() {
        let m = Model::from_integers(&[0, 1]).unwrap();
        let f = ExtensionField::new(&m, &[0.0, 1.0]).unwrap();
        let r = comparability_report(&f, &[1.5], &[33], 5, 0).unwrap();
        // Two points: linear data, everything vanishes.
        assert!(r.rows[0].degenerate);
        assert!(!r.rows[0].inconsistent);
    }

    #[test]
    fn three_point_report_has_finite_ratios() {
        let m = Model::from_integers(&[0, 3, 8]).unwrap();
        let f = ExtensionField::new(&m, &[0.0, 1.0, 0.0]).unwrap();
        let r = comparability_report(&f, &[1.25, 1.5, 1.75], &[33, 65], 5, 1).unwrap();
        for row in &r.rows {
            assert!(!row.degenerate && !row.inconsistent);
            let up = row.r_upper.unwrap();
            assert!(up.is_finite() && up > 0.0);
            for o in &row.oracle {
                assert!(o.r_lower.unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn band_of_sample() {
        let b = Band::of(&[3.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!(b, Band { min: 1.0, median: 2.5, max: 10.0 });
        assert!(Band::of(&[]).is_none());
    }
}
