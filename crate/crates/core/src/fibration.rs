//! Total-space quantities of a toric fibration and class sweeps.
//!
//! For a compatible metric with symplectic potential `u` on the fiber
//! polytope the scalar curvature of the total space is
//! `Σ_a Scal_a / (<p_a, x> + c_a) + Scal_v(u) / v`, and its volume form is
//! the base volume times `v dx`. Only the fiber factor `∫_P v dx` of the
//! volume is computed; the base factor `Vol(S, ω_S^{[d]})` stays symbolic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{LabelledPolytope, PolytopeDoc};
use crate::poly::Poly;
use crate::potentials::{v_scalar_curvature, ScalMode, SymplecticPotential};
use crate::quadrature::integrate_interior;
use crate::scalar::Scalar;
use crate::solvers::{certify, CertifyOptions, CertifyReport, Verdict};
use crate::stability::CreaseFunction;
use crate::weights::{Factor, FibrationData, WeightSystem};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TotalScalar {
    pub values: Vec<f64>,
    /// `sup |Scal - l_ext|` over the probes; for explicit weights,
    /// `sup |Scal_v(u) - w| / v`.
    pub deviation: f64,
}

/// Scalar curvature of the total space at interior probes.
pub fn total_scalar(
    ws: &WeightSystem,
    u: &SymplecticPotential,
    probes: &[Vec<f64>],
    mode: ScalMode,
) -> Result<TotalScalar> {
    let scal = v_scalar_curvature(u, &ws.v, probes, mode)?;
    let mut values = Vec::with_capacity(probes.len());
    let mut deviation: f64 = 0.0;
    for (s, x) in scal.iter().zip(probes) {
        let v = ws.v.eval_f64(x);
        let total = (ws.base_term.eval_f64(x) + s) / v;
        values.push(total);
        let dev = match &ws.ell_ext {
            Some(l) => (total - l.eval_f64(x)).abs(),
            None => (s - ws.w.eval_f64(x)).abs() / v,
        };
        deviation = deviation.max(dev);
    }
    Ok(TotalScalar { values, deviation })
}

/// `∫_P v dx`.
pub fn total_volume_factor(p: &LabelledPolytope, v: &Poly) -> Scalar {
    integrate_interior(p, v)
}

/// Scalar curvature `8π(1 - g) / area` of a constant-curvature metric on a
/// closed curve of genus `g` (twice the Gauss curvature).
pub fn curve_scal(genus: u32, area: f64) -> Result<Scalar> {
    if !(area > 0.0) {
        return Err(Error::InvalidInput(format!("curve area must be positive, got {area}")));
    }
    if genus == 1 {
        return Ok(Scalar::zero());
    }
    Ok(Scalar::Float(8.0 * std::f64::consts::PI * (1.0 - genus as f64) / area))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseCurve {
    pub genus: u32,
    pub area: f64,
}

/// A base factor whose `c` is swept. Its scalar curvature is given
/// directly or through a base curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFactor {
    pub p: Vec<i64>,
    #[serde(default = "one")]
    pub d: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scal: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<BaseCurve>,
}

fn one() -> u32 {
    1
}

impl SweepFactor {
    pub fn over_curve(p: Vec<i64>, genus: u32, area: f64) -> Self {
        SweepFactor {
            p,
            d: 1,
            scal: None,
            curve: Some(BaseCurve { genus, area }),
        }
    }

    pub fn base_scal(&self) -> Result<Scalar> {
        match (&self.scal, &self.curve) {
            (Some(s), None) => Ok(s.clone()),
            (None, Some(c)) => curve_scal(c.genus, c.area),
            _ => Err(Error::InvalidInput("give exactly one of `scal` or `curve` per factor".into())),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FibrationScenario {
    pub fiber: PolytopeDoc,
    pub factors: Vec<SweepFactor>,
    /// One `c` per factor for each sampled class.
    pub class_sweep: Vec<Vec<Scalar>>,
}

impl FibrationScenario {
    pub fn fibration_at(&self, c: &[Scalar]) -> Result<FibrationData> {
        if c.len() != self.factors.len() {
            return Err(Error::InvalidInput(format!(
                "class has {} parameters, scenario has {} factors",
                c.len(),
                self.factors.len()
            )));
        }
        let factors = self
            .factors
            .iter()
            .zip(c)
            .map(|(f, c)| {
                Ok(Factor {
                    p: f.p.clone(),
                    c: c.clone(),
                    d: f.d,
                    scal: f.base_scal()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FibrationData { factors })
    }

    pub fn validate(&self) -> Result<LabelledPolytope> {
        let p = LabelledPolytope::from_doc(&self.fiber)?;
        for c in &self.class_sweep {
            self.fibration_at(c)?.validate(&p)?;
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub c: Vec<Scalar>,
    pub verdict: Verdict,
    pub lambda_hat: f64,
    pub negatives: usize,
    pub worst: CreaseFunction,
    pub worst_futaki: f64,
    /// SHA-256 of the serialized `Φ` coefficient table.
    pub certificate_hash: Option<String>,
    pub volume_factor: f64,
    #[serde(skip)]
    pub report: Option<CertifyReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub entries: Vec<ScenarioEntry>,
    pub exists: usize,
    pub not_stable: usize,
    pub undecided: usize,
    pub notes: Vec<String>,
}

impl ScenarioReport {
    pub fn all_exist(&self) -> bool {
        self.exists == self.entries.len()
    }
}

/// SHA-256 hex digest of a certificate's `Φ` table.
pub fn certificate_hash(report: &CertifyReport) -> Option<String> {
    let table = if let Some(c) = &report.ak {
        let f = c.phi_field.as_ref()?;
        serde_json::to_string(&f.entries.iter().map(Poly::to_table).collect::<Vec<_>>()).ok()?
    } else {
        let r = report.solve_1d.as_ref()?;
        serde_json::to_string(&r.phi.to_table()).ok()?
    };
    Some(hex::encode(Sha256::digest(table.as_bytes())))
}

/// Certifies every sampled class of the scenario.
pub fn calabi_dream_check(scenario: &FibrationScenario, opts: &CertifyOptions) -> Result<ScenarioReport> {
    let p = scenario.validate()?;
    let entries: Vec<ScenarioEntry> = scenario
        .class_sweep
        .par_iter()
        .map(|c| {
            let fib = scenario.fibration_at(c)?;
            let ws = WeightSystem::from_fibration(&p, &fib)?;
            let rep = certify(&p, &ws, opts)?;
            Ok(ScenarioEntry {
                c: c.clone(),
                verdict: rep.verdict,
                lambda_hat: rep.scan.lambda_hat,
                negatives: rep.scan.negatives.len(),
                worst: rep.scan.worst.clone(),
                worst_futaki: rep.scan.worst_futaki,
                certificate_hash: certificate_hash(&rep),
                volume_factor: total_volume_factor(&p, &ws.v).to_f64(),
                report: Some(rep),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |v: Verdict| entries.iter().filter(|e| e.verdict == v).count();
    Ok(ScenarioReport {
        exists: count(Verdict::Exists),
        not_stable: count(Verdict::NotStable),
        undecided: count(Verdict::Undecided),
        entries,
        notes: vec![
            "classes are checked on the sampled parameters only".into(),
            "volume factors exclude the base volume Vol(S, ω_S^[d])".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::guillemin_potential;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn curve_scal_examples() {
        assert_eq!(curve_scal(1, 3.0).unwrap(), Scalar::zero());
        assert!((curve_scal(0, 4.0 * std::f64::consts::PI).unwrap().to_f64() - 2.0).abs() < 1e-15);
        assert!((curve_scal(2, 1.0).unwrap().to_f64() + 8.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(curve_scal(0, 0.0).is_err());
    }

    #[test]
    fn volume_examples() {
        let unit = LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap();
        let x = Poly::var(1, 0);
        assert_eq!(total_volume_factor(&unit, &(&x + &Poly::constant(1, q(2, 1)))), q(5, 2));
        let tri = LabelledPolytope::simplex(2).unwrap();
        assert_eq!(total_volume_factor(&tri, &Poly::one(2)), q(1, 2));
        let v = &(&Poly::var(2, 0) + &Poly::var(2, 1).scale(&q(2, 1))) + &Poly::constant(2, q(3, 1));
        assert_eq!(total_volume_factor(&tri, &v), q(2, 1));
    }

    #[test]
    fn total_scalar_of_guillemin() {
        let unit = LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap();
        let fib = FibrationData::single(vec![1], q(2, 1), 1, q(0, 1));
        let ws = WeightSystem::from_fibration(&unit, &fib).unwrap();
        let probes: Vec<Vec<f64>> = vec![vec![0.2], vec![0.5], vec![0.9]];
        let t = total_scalar(&ws, &guillemin_potential(&unit), &probes, ScalMode::Auto).unwrap();
        for (s, x) in t.values.iter().zip(&probes) {
            assert!((s - (12.0 * x[0] + 4.0) / (x[0] + 2.0)).abs() < 1e-12);
        }
        let toric = WeightSystem::from_fibration(&unit, &FibrationData::toric()).unwrap();
        let t = total_scalar(&toric, &guillemin_potential(&unit), &probes, ScalMode::Auto).unwrap();
        assert!(t.values.iter().all(|s| (s - 4.0).abs() < 1e-12));
        assert!(t.deviation < 1e-12);
    }

    #[test]
    fn interval_bundle_sweep() {
        let scenario = FibrationScenario {
            fiber: LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap().to_doc(),
            factors: vec![SweepFactor::over_curve(vec![1], 1, 1.0)],
            class_sweep: vec![vec![q(2, 1)], vec![q(3, 1)]],
        };
        let rep = calabi_dream_check(&scenario, &CertifyOptions::default()).unwrap();
        assert_eq!(rep.exists, 2);
        assert!(rep.entries.iter().all(|e| e.certificate_hash.as_ref().is_some_and(|h| h.len() == 64)));
    }

    #[test]
    fn sweep_rejects_nonpositive_classes() {
        let scenario = FibrationScenario {
            fiber: LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap().to_doc(),
            factors: vec![SweepFactor::over_curve(vec![-1], 1, 1.0)],
            class_sweep: vec![vec![q(1, 2)]],
        };
        assert!(calabi_dream_check(&scenario, &CertifyOptions::default()).is_err());
    }
}
