use serde::{Deserialize, Serialize};

use super::{
    build_normal_field, compare_refinement, verify_estimates, verify_graph_identity, EstimatesReport,
    GraphIdentityReport, GraphSurface, RefinementReport, SmallnessReport, TubularNeighborhood,
};
use crate::error::{Error, Result};
use crate::poly::PolyMap;
use crate::qfields::{AnalyticQField, Sheet};

fn default_resolution() -> usize {
    33
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    /// Grid points per axis over [−s, s]^m before clipping to B_s.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec { resolution: default_resolution() }
    }
}

/// A complete reparametrization problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReparamScenario {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub s: f64,
    pub r: f64,
    pub c0: f64,
    pub phi: PolyMap,
    pub sheets: Vec<Sheet>,
    #[serde(default)]
    pub mesh: MeshSpec,
    /// Declared bound on ‖φ‖_{C³}.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cbar: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReparamReport {
    pub smallness: SmallnessReport,
    /// Absent when a smallness gate fails.
    pub estimates: Option<EstimatesReport>,
    pub graph: Option<GraphIdentityReport>,
    pub passed: bool,
}

impl ReparamScenario {
    pub fn with_resolution(&self, resolution: usize) -> Self {
        let mut out = self.clone();
        out.mesh.resolution = resolution;
        out
    }

    pub fn field(&self) -> Result<AnalyticQField> {
        let f = AnalyticQField::new(self.m, self.n, self.sheets.clone())?;
        if f.q() != self.q {
            return Err(Error::input(format!("sheet multiplicities sum to {}, Q is {}", f.q(), self.q)));
        }
        Ok(f)
    }

    pub fn tube(&self) -> Result<TubularNeighborhood> {
        let mut surface = GraphSurface::new(self.m, self.n, self.s, self.phi.clone(), self.mesh.resolution)?;
        if let Some(cbar) = self.cbar {
            surface = surface.with_bound(cbar)?;
        }
        TubularNeighborhood::new(surface, self.c0, self.r)
    }

    /// Gates, then the estimates and the graph identity when the gates pass.
    pub fn run(&self) -> Result<ReparamReport> {
        let f = self.field()?;
        let tube = self.tube()?;
        let smallness = tube.check_smallness(&f)?;
        if !smallness.passed {
            return Ok(ReparamReport { smallness, estimates: None, graph: None, passed: false });
        }
        let nf = build_normal_field(&tube, &f)?;
        let estimates = verify_estimates(&nf, &tube, &f)?;
        let graph = verify_graph_identity(&nf, &tube, &f)?;
        let passed = estimates.passed && graph.passed;
        Ok(ReparamReport { smallness, estimates: Some(estimates), graph: Some(graph), passed })
    }

    /// Estimates at two resolutions and the stability of their constants.
    pub fn refinement(&self, coarse: usize, fine: usize) -> Result<(EstimatesReport, EstimatesReport, RefinementReport)> {
        let f = self.field()?;
        let mut reports = Vec::with_capacity(2);
        for res in [coarse, fine] {
            let tube = self.with_resolution(res).tube()?;
            let nf = build_normal_field(&tube, &f)?;
            reports.push(verify_estimates(&nf, &tube, &f)?);
        }
        let fine_report = reports.pop().expect("two runs");
        let coarse_report = reports.pop().expect("two runs");
        let cmp = compare_refinement(&coarse_report, &fine_report);
        Ok((coarse_report, fine_report, cmp))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenarios always serialize")
    }
}
