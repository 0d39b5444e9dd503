//! Command dispatch and report documents for the command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::{Error, Result};
use crate::fibration::calabi_dream_check;
use crate::geometry::{check_delzant, DelzantVerdict, LabelledPolytope};
use crate::potentials::{check_boundary_conditions, mabuchi_energy};
use crate::scalar::to_f64_vec;
use crate::solvers::{
    certify, interior_grid, reverify, solve_1d_with, solve_ak, AKCertificate, AkVerdict, CertifyReport, SolveReport1D, Verdict,
};
use crate::stability::{futaki, l1_norm, normalize, stability_scan, NEGATIVE_TOL};
use crate::weights::WeightSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckDelzant,
    Extremal,
    Futaki,
    StabilityScan,
    Solve1D,
    SolveAk,
    Certify,
    Mabuchi,
    Scenario,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckDelzant => "check-delzant",
            Command::Extremal => "extremal",
            Command::Futaki => "futaki",
            Command::StabilityScan => "stability-scan",
            Command::Solve1D => "solve-1d",
            Command::SolveAk => "solve-ak",
            Command::Certify => "certify",
            Command::Mabuchi => "mabuchi",
            Command::Scenario => "scenario",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Machine-readable result of one command. Only `timing` depends on the clock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub verdict: Option<String>,
    pub evidence: Value,
    pub residuals: BTreeMap<String, f64>,
    pub timing: Timing,
}

/// Plot data: point columns followed by value columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn with_header(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    /// `x` or `x1, x2, ...`, then `values`.
    fn over_points(dim: usize, values: &[&str]) -> Self {
        let mut header: Vec<String> = if dim == 1 {
            vec!["x".into()]
        } else {
            (1..=dim).map(|i| format!("x{i}")).collect()
        };
        header.extend(values.iter().map(|s| s.to_string()));
        Table::with_header(header)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub table: Option<Table>,
    pub exit_code: i32,
    /// Printed to stderr by the binary.
    pub diagnostic: Option<String>,
}

impl Outcome {
    pub fn wants_csv(&self, cfg: &RunConfig) -> bool {
        self.table.is_some() && (cfg.output.csv.is_some() || cfg.output.formats.contains(&Format::Csv))
    }
}

struct Partial {
    verdict: Option<Verdict>,
    evidence: Value,
    residuals: BTreeMap<String, f64>,
    table: Option<Table>,
    diagnostic: Option<String>,
    failed: bool,
}

impl Partial {
    fn new(verdict: Option<Verdict>, evidence: Value) -> Self {
        Partial {
            verdict,
            evidence,
            residuals: BTreeMap::new(),
            table: None,
            diagnostic: None,
            failed: false,
        }
    }
}

fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Exists => "EXISTS",
        Verdict::NotStable => "NOT_STABLE",
        Verdict::Undecided => "UNDECIDED",
    }
    .into()
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report data serializes")
}

/// Runs one command on a validated config.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let start = Instant::now();
    let part = dispatch(cmd, cfg)?;
    let exit_code = if part.failed {
        1
    } else if part.verdict == Some(Verdict::NotStable) {
        2
    } else {
        0
    };
    let verdict = if part.failed {
        Some("FAILED".to_string())
    } else {
        part.verdict.map(verdict_name)
    };
    Ok(Outcome {
        report: Report {
            command: cmd.name().into(),
            verdict,
            evidence: part.evidence,
            residuals: part.residuals,
            timing: Timing {
                wall_seconds: start.elapsed().as_secs_f64(),
            },
        },
        table: part.table,
        exit_code,
        diagnostic: part.diagnostic,
    })
}

fn dispatch(cmd: Command, cfg: &RunConfig) -> Result<Partial> {
    if cmd == Command::Scenario {
        return scenario(cfg);
    }
    let p = cfg.polytope()?;
    if cmd == Command::CheckDelzant {
        let v = check_delzant(&p);
        let mut part = Partial::new(None, json!({ "delzant": to_value(&v), "vertices": p.vertices().len() }));
        if let DelzantVerdict::Fail { vertex, facets, determinant } = &v {
            part.failed = true;
            part.diagnostic = Some(match determinant {
                Some(d) => format!(
                    "not Delzant: normals of facets {facets:?} at vertex {:?} have determinant {d}, expected ±1",
                    to_f64_vec(vertex)
                ),
                None => format!("not Delzant: vertex {:?} lies on facets {facets:?}, not simple", to_f64_vec(vertex)),
            });
        }
        return Ok(part);
    }
    let ws = cfg.weight_system(&p)?;
    let part = match cmd {
        Command::Extremal => {
            let mut part = Partial::new(
                None,
                json!({
                    "ell_ext": to_value(&ws.ell_ext),
                    "v": to_value(&ws.v),
                    "w": to_value(&ws.w),
                    "base_term": to_value(&ws.base_term),
                    "futaki_sign": to_value(&ws.sign),
                }),
            );
            part.residuals.insert("affine_futaki".into(), ws.max_affine_residual(&p));
            part
        }
        Command::Futaki => {
            let f = cfg.test_function.as_ref().ok_or_else(|| Error::Config {
                path: "test_function".into(),
                message: "the futaki command needs a test function".into(),
            })?;
            let value = futaki(&p, &ws, f);
            let fs = normalize(&p, f, &p.barycenter())?;
            let l1 = l1_norm(&p, &fs).to_f64();
            let destabilizing = f.is_piecewise_linear() && value.to_f64() < NEGATIVE_TOL;
            Partial::new(
                destabilizing.then_some(Verdict::NotStable),
                json!({
                    "test_function": to_value(f),
                    "futaki": to_value(&value),
                    "futaki_f64": value.to_f64(),
                    "l1_normalized": l1,
                    "ratio": value.to_f64() / l1,
                }),
            )
        }
        Command::StabilityScan => {
            let rep = stability_scan(&p, &ws, &cfg.scan);
            let verdict = if rep.has_destabilizer() {
                Verdict::NotStable
            } else {
                Verdict::Undecided
            };
            let mut header: Vec<String> = (1..=p.dim()).map(|i| format!("h{i}")).collect();
            header.extend(["c", "futaki", "l1"].map(String::from));
            let mut t = Table::with_header(header);
            t.rows = rep
                .negatives
                .iter()
                .map(|s| s.h.iter().copied().chain([s.c, s.futaki, s.l1]).collect())
                .collect();
            let mut part = Partial::new(Some(verdict), json!({ "scan": to_value(&rep), "options": to_value(&cfg.scan) }));
            part.table = Some(t);
            part
        }
        Command::Solve1D => {
            let r = solve_1d_with(&p, &ws, &cfg.certify_options().solve_1d)?;
            let mut part = Partial::new(
                Some(if r.positive { Verdict::Exists } else { Verdict::NotStable }),
                json!({ "solve_1d": to_value(&r) }),
            );
            residuals_1d(&r, &mut part.residuals);
            part.table = Some(table_1d(&r));
            part
        }
        Command::SolveAk => {
            let c = solve_ak(&p, &ws, &cfg.certify_options().ak)?;
            let mut part = Partial::new(
                Some(if c.verdict == AkVerdict::Positive {
                    Verdict::Exists
                } else {
                    Verdict::Undecided
                }),
                json!({ "ak": to_value(&c) }),
            );
            residuals_ak(&p, &ws, &c, &mut part.residuals);
            part.table = table_ak(&p, &ws, &c, cfg.solver.ak_grid);
            part
        }
        Command::Certify => {
            let rep = certify(&p, &ws, &cfg.certify_options())?;
            let mut part = Partial::new(Some(rep.verdict), to_value(&rep));
            certify_extras(&p, &ws, &rep, cfg, &mut part);
            part
        }
        Command::Mabuchi => {
            let u = cfg.potential(&p)?;
            let m = mabuchi_energy(&p, &ws, &u);
            let mut part = Partial::new(
                None,
                json!({
                    "potential": to_value(&u.to_doc()),
                    "mabuchi": if m.is_finite() { json!(m) } else { Value::Null },
                    "infinite": m.is_infinite(),
                }),
            );
            if let Some(h) = u.symbolic_inverse_hessian() {
                let bc = check_boundary_conditions(&h, &p, cfg.solver.tolerance);
                part.residuals.insert("boundary_conditions".into(), bc.max_residual());
            }
            part
        }
        Command::CheckDelzant | Command::Scenario => unreachable!(),
    };
    Ok(part)
}

fn residuals_1d(r: &SolveReport1D, out: &mut BTreeMap<String, f64>) {
    out.insert("phi_at_beta".into(), r.phi_at_beta);
    out.insert("dphi_at_beta".into(), r.dphi_at_beta);
    if let Some(s) = r.scal_residual {
        out.insert("scal_recovered".into(), s);
    }
}

fn table_1d(r: &SolveReport1D) -> Table {
    let mut t = Table::over_points(1, &["phi", "u_minus_u0"]);
    if let Some(g) = &r.u_recovered {
        for i in 0..g.shape[0] {
            let x = g.node(&[i]);
            t.rows.push(vec![x[0], r.phi.eval_f64(&x), g.value(&[i]).unwrap_or(f64::NAN)]);
        }
    } else {
        let (a, b) = (r.alpha.to_f64(), r.beta.to_f64());
        for i in 0..=256 {
            let x = a + (b - a) * i as f64 / 256.0;
            t.rows.push(vec![x, r.phi.eval_f64(&[x]), f64::NAN]);
        }
    }
    t
}

fn residuals_ak(p: &LabelledPolytope, ws: &WeightSystem, c: &AKCertificate, out: &mut BTreeMap<String, f64>) {
    out.insert("pde".into(), c.pde_residual);
    out.insert("boundary".into(), c.bc_residual);
    if let Some(f) = &c.phi_field {
        let (pde, bc) = reverify(p, ws, f, 0x5eed);
        out.insert("pde_resampled".into(), pde);
        out.insert("boundary_resampled".into(), bc);
    }
}

fn table_ak(p: &LabelledPolytope, ws: &WeightSystem, c: &AKCertificate, n: usize) -> Option<Table> {
    let f = c.phi_field.as_ref()?;
    let mut t = Table::over_points(p.dim(), &["min_eig_h"]);
    for x in interior_grid(p, n) {
        let e = f.min_eigenvalue(&x) / ws.v.eval_f64(&x);
        t.rows.push(x.into_iter().chain([e]).collect());
    }
    Some(t)
}

fn certify_extras(
    p: &LabelledPolytope,
    ws: &WeightSystem,
    rep: &CertifyReport,
    cfg: &RunConfig,
    part: &mut Partial,
) {
    if let Some(r) = &rep.solve_1d {
        residuals_1d(r, &mut part.residuals);
        part.table = Some(table_1d(r));
    }
    if let Some(c) = &rep.ak {
        residuals_ak(p, ws, c, &mut part.residuals);
        part.table = table_ak(p, ws, c, cfg.solver.ak_grid);
    }
    part.residuals.insert("lambda_hat".into(), rep.scan.lambda_hat);
}

fn scenario(cfg: &RunConfig) -> Result<Partial> {
    let sc = cfg.scenario()?;
    let rep = calabi_dream_check(&sc, &cfg.certify_options())?;
    let verdict = if rep.not_stable > 0 {
        Verdict::NotStable
    } else if rep.all_exist() {
        Verdict::Exists
    } else {
        Verdict::Undecided
    };
    let k = sc.factors.len();
    let mut header: Vec<String> = (1..=k).map(|i| format!("c{i}")).collect();
    header.extend(["lambda_hat", "worst_futaki", "negatives", "exists"].map(String::from));
    let mut t = Table::with_header(header);
    t.rows = rep
        .entries
        .iter()
        .map(|e| {
            e.c.iter()
                .map(|c| c.to_f64())
                .chain([
                    e.lambda_hat,
                    e.worst_futaki,
                    e.negatives as f64,
                    (e.verdict == Verdict::Exists) as u8 as f64,
                ])
                .collect()
        })
        .collect();
    let mut part = Partial::new(Some(verdict), to_value(&rep));
    part.table = Some(t);
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> RunConfig {
        RunConfig::from_json_str(s).unwrap()
    }

    const UNIT: &str = r#"{"polytope": {"normals": [[1], [-1]], "offsets": [0, 1]}, "fibration": {"factors": []}}"#;

    #[test]
    fn certify_unit_interval() {
        let out = run(Command::Certify, &cfg(UNIT)).unwrap();
        assert_eq!(out.exit_code, 0);
        assert_eq!(out.report.verdict.as_deref(), Some("EXISTS"));
        let phi = &out.report.evidence["solve_1d"]["phi"]["coeffs"];
        assert_eq!(phi["1"], json!(2));
        assert_eq!(phi["2"], json!(-2));
        let t = out.table.unwrap();
        assert_eq!(t.header, ["x", "phi", "u_minus_u0"]);
    }

    #[test]
    fn delzant_failure_exit_code() {
        let s = r#"{"polytope": {"normals": [[1,0],[0,1],[-1,-2]], "offsets": [0,0,2]}, "fibration": {"factors": []}}"#;
        let out = run(Command::CheckDelzant, &cfg(s)).unwrap();
        assert_eq!(out.exit_code, 1);
        assert!(out.diagnostic.unwrap().contains("determinant -2"));
    }

    #[test]
    fn reports_are_deterministic() {
        let c = cfg(UNIT);
        let mut a = run(Command::StabilityScan, &c).unwrap().report;
        let mut b = run(Command::StabilityScan, &c).unwrap().report;
        a.timing = Timing::default();
        b.timing = Timing::default();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn csv_layout() {
        let t = Table {
            header: vec!["x".into(), "y".into()],
            rows: vec![vec![0.5, -1.25e-3]],
        };
        assert_eq!(t.to_csv(), "x,y\n0.5,-0.00125\n");
    }
}
