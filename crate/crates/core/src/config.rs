//! Run configuration documents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::{FibrationScenario, SweepFactor};
use crate::geometry::LabelledPolytope;
use crate::poly::Poly;
use crate::potentials::{PotentialDoc, ScalMode, SymplecticPotential};
use crate::scalar::Scalar;
use crate::solvers::{AkOptions, CertifyOptions, Solve1DOptions};
use crate::stability::{ScanOptions, TestFunction};
use crate::weights::{FibrationData, FutakiSign, WeightSystem};

/// Smallest accepted grid size.
pub const MIN_GRID: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSection {
    pub normals: Vec<Vec<i64>>,
    pub offsets: Vec<Scalar>,
}

/// Explicit weights as coefficient tables keyed by exponents (`"1,0"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub v: BTreeMap<String, Scalar>,
    pub w: BTreeMap<String, Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Finite-difference step; the default step for the polytope when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Starting degree of the almost-Kähler field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    /// Tolerance of the boundary-condition check on potentials.
    pub tolerance: f64,
    /// Cells of the 1D recovery grid.
    pub grid: usize,
    /// Subdivisions of the 2D positivity grid.
    pub ak_grid: usize,
    pub futaki_sign: FutakiSign,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            h: None,
            degree: None,
            tolerance: 1e-9,
            grid: 256,
            ak_grid: AkOptions::default().grid,
            futaki_sign: FutakiSign::Consistent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            report: None,
            csv: None,
            formats: vec![Format::Json],
        }
    }
}

/// Class sweep over the configured polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub factors: Vec<SweepFactor>,
    pub class_sweep: Vec<Vec<Scalar>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub polytope: PolytopeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fibration: Option<FibrationData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub scan: ScanOptions,
    #[serde(default)]
    pub output: OutputSection,
    /// Potential for `mabuchi`; Guillemin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialDoc>,
    /// Test function for `futaki`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSection>,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that do not need the geometry.
    pub fn validate(&self) -> Result<()> {
        let n = self.polytope.normals.len();
        if self.polytope.offsets.len() != n {
            return Err(config_err(
                "polytope.offsets",
                format!("{} offsets for {n} normals", self.polytope.offsets.len()),
            ));
        }
        let sources = [self.fibration.is_some(), self.weights.is_some(), self.scenario.is_some()];
        match sources.iter().filter(|&&b| b).count() {
            1 => {}
            0 => return Err(config_err(".", "one of `fibration`, `weights` or `scenario` is required")),
            _ if self.scenario.is_some() => {
                return Err(config_err("scenario", "a scenario carries its own fibration; drop `fibration`/`weights`"))
            }
            _ => return Err(config_err("weights", "give exactly one of `fibration` and `weights`")),
        }
        let s = &self.solver;
        if let Some(h) = s.h {
            if !(h > 0.0) {
                return Err(config_err("solver.h", format!("must be positive, got {h}")));
            }
        }
        if !(s.tolerance > 0.0) {
            return Err(config_err("solver.tolerance", format!("must be positive, got {}", s.tolerance)));
        }
        for (path, g) in [("solver.grid", s.grid), ("solver.ak_grid", s.ak_grid), ("scan.offsets", self.scan.offsets)] {
            if g < MIN_GRID {
                return Err(config_err(path, format!("must be at least {MIN_GRID}, got {g}")));
            }
        }
        if self.scan.directions == 0 {
            return Err(config_err("scan.directions", "must be positive"));
        }
        if let Some(sc) = &self.scenario {
            if sc.class_sweep.is_empty() {
                return Err(config_err("scenario.class_sweep", "empty sweep"));
            }
            for (i, c) in sc.class_sweep.iter().enumerate() {
                if c.len() != sc.factors.len() {
                    return Err(config_err(
                        &format!("scenario.class_sweep[{i}]"),
                        format!("{} parameters for {} factors", c.len(), sc.factors.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn polytope(&self) -> Result<LabelledPolytope> {
        LabelledPolytope::new(&self.polytope.normals, &self.polytope.offsets)
    }

    /// Weight system of the `fibration` or `weights` section.
    pub fn weight_system(&self, p: &LabelledPolytope) -> Result<WeightSystem> {
        let ws = match (&self.fibration, &self.weights) {
            (Some(fib), None) => {
                fib.validate(p)?;
                WeightSystem::from_fibration(p, fib)?
            }
            (None, Some(wt)) => {
                let table = |path: &str, t: &BTreeMap<String, Scalar>| {
                    Poly::from_table(p.dim(), t).map_err(|m| config_err(path, m))
                };
                WeightSystem::explicit(p, table("weights.v", &wt.v)?, table("weights.w", &wt.w)?)?
            }
            _ => return Err(config_err(".", "this command needs a `fibration` or `weights` section")),
        };
        Ok(ws.with_sign(self.solver.futaki_sign))
    }

    pub fn potential(&self, p: &LabelledPolytope) -> Result<SymplecticPotential> {
        SymplecticPotential::from_doc(p, self.potential.as_ref().unwrap_or(&PotentialDoc::Guillemin))
    }

    pub fn scal_mode(&self) -> ScalMode {
        match self.solver.h {
            Some(h) => ScalMode::FiniteDiff { h },
            None => ScalMode::Auto,
        }
    }

    pub fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            scan: self.scan,
            ak: AkOptions {
                degree: self.solver.degree,
                grid: self.solver.ak_grid,
            },
            solve_1d: Solve1DOptions {
                grid_cells: self.solver.grid,
            },
        }
    }

    pub fn scenario(&self) -> Result<FibrationScenario> {
        let sc = self
            .scenario
            .as_ref()
            .ok_or_else(|| config_err("scenario", "missing section"))?;
        Ok(FibrationScenario {
            fiber: self.polytope()?.to_doc(),
            factors: sc.factors.clone(),
            class_sweep: sc.class_sweep.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: &str = r#"{
        "polytope": {"normals": [[1], [-1]], "offsets": [0, 1]},
        "fibration": {"factors": []}
    }"#;

    #[test]
    fn defaults_and_round_trip() {
        let cfg = RunConfig::from_json_str(UNIT).unwrap();
        assert_eq!(cfg.solver, SolverSection::default());
        assert_eq!(cfg.scan, ScanOptions::default());
        let again = RunConfig::from_json_str(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn exact_offsets_round_trip() {
        let s = r#"{
            "polytope": {"normals": [[1], [-1]], "offsets": ["1/3", 1]},
            "weights": {"v": {"0": 1}, "w": {"0": "2/3", "1": 0.5}},
            "solver": {"degree": 3, "futaki_sign": "literal"}
        }"#;
        let cfg = RunConfig::from_json_str(s).unwrap();
        assert_eq!(cfg.polytope.offsets[0], Scalar::ratio(1, 3));
        assert_eq!(RunConfig::from_json_str(&cfg.to_json()).unwrap(), cfg);
    }

    fn err_path(s: &str) -> String {
        match RunConfig::from_json_str(s) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn validation_paths() {
        let base = r#""polytope": {"normals": [[1], [-1]], "offsets": [0, 1]}"#;
        assert_eq!(err_path(&format!(r#"{{{base}, "fibration": {{"factors": []}}, "solver": {{"tolerance": 0}}}}"#)), "solver.tolerance");
        assert_eq!(err_path(&format!(r#"{{{base}, "fibration": {{"factors": []}}, "solver": {{"grid": 8}}}}"#)), "solver.grid");
        assert_eq!(err_path(&format!(r#"{{{base}, "fibration": {{"factors": []}}, "scan": {{"directions": 4, "offsets": 3, "refine": false}}}}"#)), "scan.offsets");
        assert_eq!(err_path(&format!(r#"{{{base}, "fibration": {{"factors": []}}, "solver": {{"tolerance": "x"}}}}"#)), "solver.tolerance");
        assert_eq!(err_path(&format!(r#"{{{base}}}"#)), ".");
        assert_eq!(
            err_path(&format!(r#"{{{base}, "fibration": {{"factors": []}}, "weights": {{"v": {{}}, "w": {{}}}}}}"#)),
            "weights"
        );
    }

    #[test]
    fn weight_tables_are_checked() {
        let s = r#"{
            "polytope": {"normals": [[1], [-1]], "offsets": [0, 1]},
            "weights": {"v": {"0,1": 1}, "w": {"0": 4}}
        }"#;
        let cfg = RunConfig::from_json_str(s).unwrap();
        let p = cfg.polytope().unwrap();
        assert!(matches!(cfg.weight_system(&p), Err(Error::Config { path, .. }) if path == "weights.v"));
    }
}
