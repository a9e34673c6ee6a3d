//! Worked examples with hardcoded matrices and the values they are
//! expected to reproduce.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use pnp_stability::eigen::{eigenvalues, Complex64};
use pnp_stability::matrix::{validate_stochastic, DenseMatrix};
use pnp_stability::operators::{
    conjecture_hypotheses, gram_matrix, make_family, OperatorFamily, Which,
};
use pnp_stability::stability::{
    profile, slope_check, stability_threshold, Classification, ThresholdParams, ThresholdReport,
};
use pnp_stability::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExampleId {
    #[serde(rename = "remark_1_3_P")]
    Remark13P,
    #[serde(rename = "remark_1_3_R")]
    Remark13R,
    #[serde(rename = "remark_1_6")]
    Remark16,
    #[serde(rename = "remark_1_7")]
    Remark17,
    #[serde(rename = "example_1_13")]
    Example113,
    #[serde(rename = "example_1_14_B1")]
    Example114B1,
    #[serde(rename = "example_1_14_B2")]
    Example114B2,
}

impl ExampleId {
    pub const ALL: [ExampleId; 7] = [
        ExampleId::Remark13P,
        ExampleId::Remark13R,
        ExampleId::Remark16,
        ExampleId::Remark17,
        ExampleId::Example113,
        ExampleId::Example114B1,
        ExampleId::Example114B2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Remark13P => "remark_1_3_P",
            ExampleId::Remark13R => "remark_1_3_R",
            ExampleId::Remark16 => "remark_1_6",
            ExampleId::Remark17 => "remark_1_7",
            ExampleId::Example113 => "example_1_13",
            ExampleId::Example114B1 => "example_1_14_B1",
            ExampleId::Example114B2 => "example_1_14_B2",
        }
    }

    /// The hardcoded `(W, B)` pair.
    pub fn family(self) -> Result<OperatorFamily> {
        let (w, b) = match self {
            ExampleId::Remark13P => (swap(), swap()),
            ExampleId::Remark13R => (swap(), frac(2, &[[1, 1], [1, 1]])),
            ExampleId::Remark16 => (
                frac(10, &[[7, 3], [6, 4]]),
                frac(10, &[[34, -65], [-65, 126]]),
            ),
            ExampleId::Remark17 => {
                let h = frac(1000, &[[913, 87], [87, 913]]);
                (blur_w(), gram_matrix(&h))
            }
            ExampleId::Example113 => {
                let h = frac(100, &[[48, 52], [52, 48]]);
                let s = DenseMatrix::from_rows(&[[1.0, 0.0]])?;
                (frac(2, &[[0, 2], [1, 1]]), gram_matrix(&s.mul(&h)?))
            }
            ExampleId::Example114B1 => (blur_w(), frac(10, &[[30, 0], [0, 5]])),
            ExampleId::Example114B2 => (blur_w(), frac(10, &[[4, -1], [-1, 2]])),
        };
        Ok(make_family(validate_stochastic(&w, 1e-12)?, b)?.with_label(self.name()))
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown example {s:?}")))
    }
}

/// `(1/den) · M` for an integer matrix `M`.
fn frac(den: i32, m: &[[i32; 2]; 2]) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = m
        .iter()
        .map(|r| r.iter().map(|&v| f64::from(v) / f64::from(den)).collect())
        .collect();
    DenseMatrix::from_rows(&rows).expect("2x2 literal")
}

fn swap() -> DenseMatrix {
    frac(1, &[[0, 1], [1, 0]])
}

fn blur_w() -> DenseMatrix {
    frac(10, &[[3, 7], [6, 4]])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: Value,
    pub computed: Value,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn failed(name: &str, expected: Value, tolerance: f64, err: &Error) -> Check {
        Check {
            name: name.into(),
            expected,
            computed: json!(format!("error: {err}")),
            tolerance,
            pass: false,
        }
    }

    fn scalar(name: &str, expected: f64, computed: Result<f64>, tolerance: f64) -> Check {
        match computed {
            Ok(v) => Check {
                name: name.into(),
                expected: json!(expected),
                computed: json!(v),
                tolerance,
                pass: (v - expected).abs() <= tolerance,
            },
            Err(e) => Check::failed(name, json!(expected), tolerance, &e),
        }
    }

    fn exact<T: Serialize + PartialEq>(name: &str, expected: T, computed: Result<T>) -> Check {
        match computed {
            Ok(v) => Check {
                name: name.into(),
                pass: v == expected,
                expected: json!(expected),
                computed: json!(v),
                tolerance: 0.0,
            },
            Err(e) => Check::failed(name, json!(expected), 0.0, &e),
        }
    }

    /// Real spectrum compared as an ascending list.
    fn real_spectrum(
        name: &str,
        mut expected: Vec<f64>,
        computed: Result<Vec<Complex64>>,
        tolerance: f64,
    ) -> Check {
        expected.sort_by(f64::total_cmp);
        match computed {
            Ok(mut vals) => {
                vals.sort_by(|a, b| a.re.total_cmp(&b.re));
                let pass = vals.len() == expected.len()
                    && vals
                        .iter()
                        .zip(&expected)
                        .all(|(z, e)| (z.re - e).abs() <= tolerance && z.im.abs() <= tolerance);
                Check {
                    name: name.into(),
                    expected: json!(expected),
                    computed: json!(vals.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()),
                    tolerance,
                    pass,
                }
            }
            Err(e) => Check::failed(name, json!(expected), tolerance, &e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproReport {
    pub example: ExampleId,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub overall_pass: bool,
}

/// `count` points strictly inside `(lo, hi)`.
pub fn open_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64)
        .collect()
}

/// `count` points spanning `[lo, hi]` inclusive.
pub fn closed_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

fn count_where(
    family: &OperatorFamily,
    which: Which,
    ts: &[f64],
    pred: impl Fn(f64) -> bool,
) -> Result<usize> {
    let mut n = 0;
    for &t in ts {
        if pred(family.rho(which, t)?) {
            n += 1;
        }
    }
    Ok(n)
}

const CLOSED_FORM_TS: [f64; 4] = [0.1, 0.5, 1.0, 3.0];

struct Plan {
    profile: (f64, f64, usize),
    threshold: Option<(Which, ThresholdParams)>,
}

fn plan(example: ExampleId) -> Plan {
    let params = ThresholdParams::new;
    match example {
        ExampleId::Remark13P => Plan {
            profile: (0.0, 3.0, 301),
            threshold: Some((Which::P, params(3.0))),
        },
        ExampleId::Remark13R => Plan {
            profile: (0.0, 3.0, 301),
            threshold: None,
        },
        ExampleId::Remark16 => Plan {
            profile: (0.0, 1.0, 201),
            threshold: Some((
                Which::P,
                ThresholdParams {
                    eps0: 1e-3,
                    grid_step: 1e-2,
                    ..params(1.0)
                },
            )),
        },
        ExampleId::Remark17 => Plan {
            profile: (0.0, 3.0, 301),
            threshold: Some((Which::P, params(3.0))),
        },
        ExampleId::Example113 => Plan {
            profile: (0.0, 4.0, 401),
            threshold: Some((Which::P, params(4.0))),
        },
        ExampleId::Example114B1 | ExampleId::Example114B2 => Plan {
            profile: (0.0, 20.0, 2001),
            threshold: Some((Which::R, params(20.0))),
        },
    }
}

fn checks(
    example: ExampleId,
    family: &OperatorFamily,
    threshold: Option<&ThresholdReport>,
) -> Vec<Check> {
    let mut out = Vec::new();
    let t_star = || -> Result<f64> {
        threshold
            .and_then(|r| r.t_star)
            .ok_or_else(|| Error::InvalidParameter("no threshold crossing found".into()))
    };
    let classification = || -> Result<Classification> {
        threshold
            .map(|r| r.classification)
            .ok_or_else(|| Error::InvalidParameter("threshold not computed".into()))
    };
    match example {
        ExampleId::Remark13P => {
            for t in CLOSED_FORM_TS {
                out.push(Check::real_spectrum(
                    &format!("eig P(t={t})"),
                    vec![1.0 - t, -(1.0 + t)],
                    family
                        .p_at(t)
                        .and_then(|m| eigenvalues(&m))
                        .map(|s| s.values),
                    1e-12,
                ));
            }
            out.push(Check::exact(
                "classification P",
                Classification::UnstableFromStart,
                classification(),
            ));
        }
        ExampleId::Remark13R => {
            for t in CLOSED_FORM_TS {
                out.push(Check::real_spectrum(
                    &format!("eig R(t={t})"),
                    vec![-1.0, 1.0 / (t + 1.0)],
                    family
                        .r_at(t)
                        .and_then(|m| eigenvalues(&m))
                        .map(|s| s.values),
                    1e-12,
                ));
            }
        }
        ExampleId::Remark16 => {
            out.push(Check::scalar(
                "piTBe",
                -1.0 / 30.0,
                Ok(family.pi_b_e()),
                1e-12,
            ));
            let ts = open_samples(0.0, 0.5, 50);
            for which in Which::BOTH {
                out.push(Check::exact(
                    &format!("rho_{which} > 1 at 50 t in (0, 0.5)"),
                    50,
                    count_where(family, which, &ts, |r| r > 1.0),
                ));
            }
            out.push(Check::exact(
                "classification P",
                Classification::UnstableFromStart,
                classification(),
            ));
            out.push(Check::scalar(
                "slope P at h=1e-5",
                1.0 / 30.0,
                slope_check(family, Which::P, 1e-5).map(|s| s.fd_slope),
                1e-4,
            ));
        }
        ExampleId::Remark17 => {
            out.push(Check::scalar("rho_B", 1.0, Ok(family.rho_b()), 1e-10));
            out.push(Check::scalar("T_star P", 2.0, t_star(), 1e-3));
            let ts = open_samples(2.0, 3.0, 49)
                .into_iter()
                .chain([3.0])
                .collect::<Vec<_>>();
            out.push(Check::exact(
                "rho_R < 1 at 50 t in (2, 3]",
                50,
                count_where(family, Which::R, &ts, |r| r < 1.0),
            ));
            out.push(Check::scalar(
                "predicted slope",
                -1.0,
                Ok(family.predicted_slope()),
                1e-12,
            ));
        }
        ExampleId::Example113 => {
            out.push(Check::scalar(
                "2/rho_B",
                3.9936,
                Ok(family.step_bound()),
                1e-3,
            ));
            let h = conjecture_hypotheses(family);
            out.push(Check::exact("Be_le_rhoB_e", false, Ok(h.be_le_rho_b_e)));
            let be = family.b_times_e();
            out.push(Check::scalar("(Be)_2", 0.52, Ok(be[1]), 1e-12));
            out.push(Check::exact(
                "(Be)_2 > rho_B",
                true,
                Ok(be[1] > family.rho_b()),
            ));
            let ts = closed_samples(3.87, 3.99, 20);
            out.push(Check::exact(
                "rho_P > 1 at 20 t in [3.87, 3.99]",
                20,
                count_where(family, Which::P, &ts, |r| r > 1.0),
            ));
        }
        ExampleId::Example114B1 | ExampleId::Example114B2 => {
            let (t_expected, bound) = if example == ExampleId::Example114B1 {
                (4.777, 2.0 / 3.0)
            } else {
                (11.904, 4.5308)
            };
            out.push(Check::scalar("T_star R", t_expected, t_star(), 0.01));
            out.push(Check::scalar(
                "2/rho_B",
                bound,
                Ok(family.step_bound()),
                1e-3,
            ));
            out.push(Check::exact(
                "T_star > 2/rho_B",
                true,
                t_star().map(|t| t > family.step_bound()),
            ));
        }
    }
    out
}

/// Runs one example, writing `<id>_profile.csv`, `<id>_threshold.json`
/// (when a threshold is searched) and `<id>_report.json` into `out_dir`.
pub fn repro(example: ExampleId, out_dir: &Path) -> Result<ReproReport> {
    fs::create_dir_all(out_dir)?;
    let family = example.family()?;
    let mut artifacts = Vec::new();
    let plan = plan(example);

    let (lo, hi, steps) = plan.profile;
    let prof = profile(&family, lo, hi, steps)?;
    let path = out_dir.join(format!("{example}_profile.csv"));
    fs::write(&path, prof.to_csv())?;
    artifacts.push(path.display().to_string());

    let mut threshold_err = None;
    let threshold = match plan.threshold {
        Some((which, params)) => match stability_threshold(&family, which, params) {
            Ok(r) => {
                let path = out_dir.join(format!("{example}_threshold.json"));
                fs::write(&path, serde_json::to_string_pretty(&r)?)?;
                artifacts.push(path.display().to_string());
                Some(r)
            }
            Err(e) => {
                threshold_err = Some(e);
                None
            }
        },
        None => None,
    };

    let mut checks = checks(example, &family, threshold.as_ref());
    if let Some(e) = threshold_err {
        checks.push(Check::failed("threshold search", Value::Null, 0.0, &e));
    }
    let report_path = out_dir.join(format!("{example}_report.json"));
    artifacts.push(report_path.display().to_string());
    let report = ReproReport {
        example,
        overall_pass: checks.iter().all(|c| c.pass),
        checks,
        artifacts,
    };
    fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in ExampleId::ALL {
            assert_eq!(id.name().parse::<ExampleId>().unwrap(), id);
            assert_eq!(serde_json::to_value(id).unwrap(), id.name());
            assert!(id.family().is_ok());
        }
        assert!("remark_9".parse::<ExampleId>().is_err());
    }

    #[test]
    fn sample_grids() {
        let s = open_samples(0.0, 0.5, 50);
        assert_eq!(s.len(), 50);
        assert!(s[0] > 0.0 && s[49] < 0.5);
        let c = closed_samples(3.87, 3.99, 20);
        assert_eq!((c[0], c[19]), (3.87, 3.99));
    }

    #[test]
    fn rational_constants() {
        let f = ExampleId::Remark16.family().unwrap();
        assert_eq!(f.b()[(0, 1)], -6.5);
        assert_eq!(f.w().matrix()[(0, 0)], 0.7);
    }

    #[test]
    fn failed_computation_marks_check() {
        let c = Check::scalar("x", 1.0, Err(Error::Singular(0)), 0.1);
        assert!(!c.pass);
        assert!(c.computed.as_str().unwrap().starts_with("error"));
    }
}
