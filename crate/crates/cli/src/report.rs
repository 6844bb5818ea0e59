use cdp_core::audit::AuditReport;
use cdp_core::{ConvexityProbe, TradeoffResultF64};
use serde::{Serialize, Serializer};

/// `f64` that serializes infinities as `"inf"` / `"-inf"` and NaN as `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            v if v.is_finite() => s.serialize_f64(v),
            v if v.is_nan() => s.serialize_str("nan"),
            v if v > 0.0 => s.serialize_str("inf"),
            _ => s.serialize_str("-inf"),
        }
    }
}

/// Seventeen significant digits, `inf` for unbounded levels.
pub fn fmt_num(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub const CSV_HEADER: &str = "mode,D,P,value,status,achieved_D,achieved_P,iterations";

pub fn csv_row(mode: &str, d: f64, p: f64, r: &TradeoffResultF64) -> String {
    format!(
        "{mode},{},{},{},{},{},{},{}",
        fmt_num(d),
        fmt_num(p),
        fmt_opt(r.value),
        r.status,
        fmt_opt(r.achieved_distortion),
        fmt_opt(r.achieved_perception),
        r.certificate.iterations
    )
}

#[derive(Serialize)]
pub struct KernelEntry {
    pub mode: &'static str,
    pub d_index: usize,
    pub p_index: usize,
    #[serde(rename = "D")]
    pub d: Num,
    #[serde(rename = "P")]
    pub p: Num,
    pub value: Num,
    pub kernel: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct KernelDump {
    pub kernels: Vec<KernelEntry>,
}

#[derive(Serialize)]
struct CheckJson {
    name: &'static str,
    trials: usize,
    max_violation: Num,
    tolerance: Num,
    strict: bool,
    pass: bool,
}

#[derive(Serialize)]
struct TheoremJson {
    theorem: &'static str,
    trials: usize,
    max_violation: Num,
    pass: bool,
    checks: Vec<CheckJson>,
}

#[derive(Serialize)]
struct AuditJson {
    seed: u64,
    trials: usize,
    pass: bool,
    theorems: Vec<TheoremJson>,
}

pub fn audit_json(report: &AuditReport) -> String {
    let theorems = report
        .theorems()
        .into_iter()
        .map(|name| {
            let checks: Vec<_> = report.checks.iter().filter(|c| c.theorem == name).collect();
            TheoremJson {
                theorem: name,
                trials: checks.iter().map(|c| c.trials).sum(),
                max_violation: Num(checks.iter().map(|c| c.max_violation).fold(f64::NEG_INFINITY, f64::max)),
                pass: checks.iter().all(|c| c.pass),
                checks: checks
                    .iter()
                    .map(|c| CheckJson {
                        name: c.name,
                        trials: c.trials,
                        max_violation: Num(c.max_violation),
                        tolerance: Num(c.tolerance),
                        strict: c.strict,
                        pass: c.pass,
                    })
                    .collect(),
            }
        })
        .collect();
    let json = AuditJson {
        seed: report.seed,
        trials: report.trials,
        pass: report.pass(),
        theorems,
    };
    serde_json::to_string_pretty(&json).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct GridJson {
    #[serde(rename = "D")]
    d: Vec<Num>,
    #[serde(rename = "P")]
    p: Vec<Num>,
    step: f64,
}

#[derive(Serialize)]
struct PointJson {
    d_index: usize,
    p_index: usize,
    #[serde(rename = "D")]
    d: Num,
    #[serde(rename = "P")]
    p: Num,
    value: Num,
}

#[derive(Serialize)]
struct ViolationJson {
    first: PointJson,
    second: PointJson,
    midpoint: PointJson,
    gap: Num,
}

#[derive(Serialize)]
struct ProbeJson {
    grid: GridJson,
    values: Vec<Vec<Option<Num>>>,
    violations: Vec<ViolationJson>,
    max_violation: Option<Num>,
    lipschitz_slack: Num,
}

pub fn probe_json(probe: &ConvexityProbe<f64>, step: f64) -> String {
    let point = |(i, j): (usize, usize)| PointJson {
        d_index: i,
        p_index: j,
        d: Num(probe.d_grid[i]),
        p: Num(probe.p_grid[j]),
        value: Num(probe.values[i][j].unwrap_or(f64::NAN)),
    };
    let json = ProbeJson {
        grid: GridJson {
            d: probe.d_grid.iter().copied().map(Num).collect(),
            p: probe.p_grid.iter().copied().map(Num).collect(),
            step,
        },
        values: probe.values.iter().map(|row| row.iter().map(|v| v.map(Num)).collect()).collect(),
        violations: probe
            .violations
            .iter()
            .map(|v| ViolationJson {
                first: point(v.first),
                second: point(v.second),
                midpoint: point(v.midpoint),
                gap: Num(v.gap),
            })
            .collect(),
        max_violation: probe.max_violation.map(Num),
        lipschitz_slack: Num(probe.lipschitz_slack),
    };
    serde_json::to_string_pretty(&json).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.26, 0.1 + 0.2, 1e-300, 123456.789, 0.0] {
            let s = fmt_num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_num(0.26), "2.6000000000000001e-1");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn non_finite_json() {
        assert_eq!(serde_json::to_string(&Num(f64::INFINITY)).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Num(0.5)).unwrap(), "0.5");
    }
}
