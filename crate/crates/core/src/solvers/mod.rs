//! Existence verdicts: the exact 1D profile, the 2D almost-Kähler
//! certificate, and their combination with the crease scan.

mod ak;
mod one_d;

pub use ak::{interior_grid, reverify, solve_ak, AKCertificate, AkOptions, AkVerdict, MAX_ASCENT_STEPS, RESIDUAL_TOL};
pub use one_d::{abreu_profile, solve_1d, solve_1d_with, sturm_count, Solve1DOptions, SolveReport1D, NORMALIZATION_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LabelledPolytope;
use crate::stability::{stability_scan, ScanOptions, StabilityReport};
use crate::weights::WeightSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// A positive solution or certificate was found.
    Exists,
    /// A crease with negative Futaki invariant was found.
    NotStable,
    /// Neither.
    Undecided,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub scan: ScanOptions,
    pub ak: AkOptions,
    pub solve_1d: Solve1DOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifyReport {
    pub verdict: Verdict,
    pub solve_1d: Option<SolveReport1D>,
    pub ak: Option<AKCertificate>,
    pub scan: StabilityReport,
    pub notes: Vec<String>,
}

/// Runs the solver for the dimension together with the crease scan.
pub fn certify(p: &LabelledPolytope, ws: &WeightSystem, opts: &CertifyOptions) -> Result<CertifyReport> {
    let mut notes = Vec::new();
    let (solve_1d, ak, certified) = match p.dim() {
        1 => {
            let r = solve_1d_with(p, ws, &opts.solve_1d)?;
            let ok = r.positive;
            (Some(r), None, ok)
        }
        2 => {
            let c = solve_ak(p, ws, &opts.ak)?;
            let ok = c.verdict == AkVerdict::Positive;
            if !ws.is_fibration() {
                notes.push("explicit weights: a positive certificate is sufficient for stability, not shown necessary".into());
            }
            if c.verdict == AkVerdict::Infeasible {
                notes.push(format!("no polynomial field up to degree {}; this proves nothing about existence", c.degree));
            }
            (None, Some(c), ok)
        }
        d => {
            return Err(Error::WrongDimension {
                expected: "1 or 2".into(),
                got: d,
            })
        }
    };
    let scan = stability_scan(p, ws, &opts.scan);
    let verdict = match (certified, scan.has_destabilizer()) {
        (true, false) => Verdict::Exists,
        (false, true) => Verdict::NotStable,
        (true, true) => {
            notes.push("solver certificate and negative Futaki sample disagree".into());
            Verdict::Undecided
        }
        (false, false) => Verdict::Undecided,
    };
    notes.push("the crease scan bounds the stability constant from above only".into());
    Ok(CertifyReport {
        verdict,
        solve_1d,
        ak,
        scan,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::scalar::Scalar;
    use crate::weights::FibrationData;

    #[test]
    fn verdicts() {
        let p = LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap();
        let ws = WeightSystem::from_fibration(&p, &FibrationData::toric()).unwrap();
        let opts = CertifyOptions::default();
        assert_eq!(certify(&p, &ws, &opts).unwrap().verdict, Verdict::Exists);

        let x = Poly::var(1, 0);
        let bump = &(&(&x * &x).scale(&Scalar::int(6)) - &x.scale(&Scalar::int(6))) + &Poly::one(1);
        let w = &Poly::constant(1, Scalar::int(4)) + &bump.scale(&Scalar::int(32));
        let bad = WeightSystem::explicit(&p, Poly::one(1), w).unwrap();
        assert_eq!(certify(&p, &bad, &opts).unwrap().verdict, Verdict::NotStable);

        let tri = LabelledPolytope::simplex(2).unwrap();
        let ws = WeightSystem::from_fibration(&tri, &FibrationData::toric()).unwrap();
        assert_eq!(certify(&tri, &ws, &opts).unwrap().verdict, Verdict::Exists);
    }
}
