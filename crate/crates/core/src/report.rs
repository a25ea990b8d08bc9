//! Side-by-side comparison of an original and a multi-pumped run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::Mhz;
use crate::pipeline::Variant;
use crate::resources::{Budget, Category, ResourceVector};
use crate::transforms::Mode;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot compare `{0}` with `{1}`")]
    Mismatch(String, String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// What one pipeline variant achieved, as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Benchmark family, e.g. `gemm_systolic`.
    pub benchmark: String,
    /// Full configuration, e.g. `gemm_systolic 16x16x16 PEs=4 V=4`.
    pub config: String,
    pub m: u32,
    pub mode: Option<Mode>,
    pub clk0_mhz: Mhz,
    pub clk1_mhz: Option<Mhz>,
    pub effective_clock_mhz: Mhz,
    pub slow_cycles: Option<u64>,
    pub ops: u64,
    pub resources: ResourceVector,
}

impl RunSummary {
    pub fn new(benchmark: &str, config: &str, ops: u64, mode: Option<Mode>, v: &Variant) -> Self {
        let pumped = v.clocks.m > 1;
        RunSummary {
            benchmark: benchmark.into(),
            config: config.into(),
            m: v.clocks.m,
            mode: if pumped { mode } else { None },
            clk0_mhz: v.clocks.clk0_mhz,
            clk1_mhz: pumped.then_some(v.clocks.clk1_mhz),
            effective_clock_mhz: v.clocks.effective_clock(),
            slow_cycles: v.sim.as_ref().map(|s| s.slow_cycles),
            ops,
            resources: v.resources,
        }
    }

    /// Simulated run time: slow cycles at `clk0`.
    pub fn time_us(&self) -> Option<f64> {
        self.slow_cycles.map(|c| c as f64 / self.clk0_mhz.to_f64())
    }

    pub fn mops(&self) -> Option<f64> {
        self.time_us().map(|t| self.ops as f64 / t)
    }

    pub fn mops_per_dsp(&self) -> Option<f64> {
        let dsp = self.resources.dsp;
        self.mops().filter(|_| dsp > 0).map(|m| m / dsp as f64)
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<RunSummary, ReportError> {
        Ok(serde_json::from_str(s)?)
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.2}"))
}

fn delta(a: Option<f64>, b: Option<f64>) -> String {
    match (a, b) {
        (Some(a), Some(b)) => format!("{:+.2}", b - a),
        _ => "-".into(),
    }
}

/// Fixed-width table with the original in the first column and the
/// multi-pumped variant in the second.
pub fn render(before: &RunSummary, after: &RunSummary, budget: &Budget) -> Result<String, ReportError> {
    if before.benchmark != after.benchmark {
        return Err(ReportError::Mismatch(
            before.benchmark.clone(),
            after.benchmark.clone(),
        ));
    }
    let mhz = |m: Option<Mhz>| m.map(|m| m.to_f64());
    let mut rows: Vec<(String, Option<f64>, Option<f64>)> = vec![
        ("Freq CL0 [MHz]".into(), mhz(Some(before.clk0_mhz)), mhz(Some(after.clk0_mhz))),
        ("Freq CL1 [MHz]".into(), mhz(before.clk1_mhz), mhz(after.clk1_mhz)),
        ("Time [us]".into(), before.time_us(), after.time_us()),
        ("MOp/s".into(), before.mops(), after.mops()),
    ];
    for c in Category::ALL {
        rows.push((
            format!("{} [%]", c.name()),
            Some(before.resources.percent_of(budget, c)),
            Some(after.resources.percent_of(budget, c)),
        ));
    }
    rows.push(("MOp/s per DSP".into(), before.mops_per_dsp(), after.mops_per_dsp()));

    let mut out = String::new();
    let head_o = format!("O (M={})", before.m);
    let head_p = match after.mode {
        Some(mode) => format!("DP (M={}, {mode})", after.m),
        None => format!("DP (M={})", after.m),
    };
    writeln!(out, "{}", before.config).expect("write to string");
    if after.config != before.config {
        writeln!(out, "vs {}", after.config).expect("write to string");
    }
    writeln!(out, "{:<18}{:>16}{:>22}{:>12}", "", head_o, head_p, "delta").expect("write to string");
    for (name, a, b) in rows {
        writeln!(out, "{name:<18}{:>16}{:>22}{:>12}", cell(a), cell(b), delta(a, b))
            .expect("write to string");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(bench: &str, dsp: u64, cycles: u64) -> RunSummary {
        RunSummary {
            benchmark: bench.into(),
            config: format!("{bench} test"),
            m: 1,
            mode: None,
            clk0_mhz: Mhz::from_int(300),
            clk1_mhz: None,
            effective_clock_mhz: Mhz::from_int(300),
            slow_cycles: Some(cycles),
            ops: 3000,
            resources: ResourceVector {
                dsp,
                ..Default::default()
            },
        }
    }

    #[test]
    fn same_report_twice_has_zero_deltas() {
        let s = summary("vecadd", 8, 100);
        let t = render(&s, &s, &Budget::default()).unwrap();
        for line in t.lines().skip(2) {
            let last = line.split_whitespace().last().unwrap();
            assert!(last == "+0.00" || last == "-", "{line}");
        }
    }

    #[test]
    fn mismatched_benchmarks_are_refused() {
        let r = render(&summary("vecadd", 1, 1), &summary("gemm_systolic", 1, 1), &Budget::default());
        assert!(matches!(r, Err(ReportError::Mismatch(..))));
    }

    #[test]
    fn performance_per_dsp() {
        let s = summary("vecadd", 10, 300);
        // 300 cycles at 300 MHz is 1 us.
        assert_eq!(s.time_us(), Some(1.0));
        assert_eq!(s.mops(), Some(3000.0));
        assert_eq!(s.mops_per_dsp(), Some(300.0));
        let js = s.to_json().unwrap();
        assert_eq!(RunSummary::from_json(&js).unwrap(), s);
    }
}
