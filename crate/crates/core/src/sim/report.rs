use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{ChannelStats, Memory, SimError};
use crate::ir::{ratio_string, Mhz};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Push,
    Pop,
    StallFull,
    StallEmpty,
}

impl TraceKind {
    pub fn name(self) -> &'static str {
        match self {
            TraceKind::Push => "push",
            TraceKind::Pop => "pop",
            TraceKind::StallFull => "stall_full",
            TraceKind::StallEmpty => "stall_empty",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Base tick (the finest common subdivision of both clocks).
    pub tick: u64,
    pub domain: u32,
    pub node: String,
    pub port: String,
    pub event: TraceKind,
    pub payload_hash: u64,
}

pub const TRACE_HEADER: &str = "tick,domain,node,port,event,payload_hash";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub outputs: Memory,
    pub slow_cycles: u64,
    pub fast_cycles: u64,
    /// Base ticks per slow and fast cycle.
    pub slow_period: u64,
    pub fast_period: u64,
    pub elements_out: u64,
    #[serde(with = "ratio_string")]
    pub elements_out_per_slow_cycle: Ratio<i64>,
    /// Committed elements per microsecond over the commit window.
    #[serde(with = "ratio_string")]
    pub elements_per_us: Ratio<i64>,
    pub effective_clock_mhz: Mhz,
    pub channels: BTreeMap<String, ChannelStats>,
    pub trace: Option<Vec<TraceEvent>>,
}

impl SimReport {
    pub fn total_pushed(&self) -> u64 {
        self.channels.values().map(|c| c.pushed_elements).sum()
    }

    pub fn total_popped(&self) -> u64 {
        self.channels.values().map(|c| c.popped_elements).sum()
    }

    pub fn final_occupancy(&self) -> usize {
        self.channels.values().map(|c| c.final_occupancy).sum()
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let v = serde_json::to_value(self)?;
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn trace_csv(events: &[TraceEvent]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:016x}",
            e.tick,
            e.domain,
            e.node,
            e.port,
            e.event.name(),
            e.payload_hash
        );
    }
    out
}

pub fn export_trace(report: &SimReport, path: &Path) -> Result<(), SimError> {
    let events = report.trace.as_ref().ok_or(SimError::TraceNotEnabled)?;
    fs::write(path, trace_csv(events))?;
    Ok(())
}
