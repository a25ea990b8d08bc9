use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ResourceError, ResourceVector};
use crate::ir::ElemType;

/// Capacity of one BRAM block in bits.
pub const BRAM_BLOCK_BITS: u64 = 18_432;

/// Costs of the clock-crossing and width-conversion nodes and of FIFOs.
/// Lane counts are in 32-bit lanes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlumbingCosts {
    /// Synchronizer registers per lane (alpha).
    pub sync_registers_per_lane: u64,
    /// Synchronizer registers per FIFO slot (beta).
    pub sync_registers_per_depth: u64,
    /// Issuer and Packer LUTs per lane (gamma).
    pub convert_lut_per_lane: u64,
    /// Stream LUT-RAM per lane per slot.
    pub stream_lut_memory_per_slot: u64,
    /// Stream registers per lane per slot.
    pub stream_registers_per_slot: u64,
    pub reader_fixed: ResourceVector,
    pub reader_per_lane: ResourceVector,
    pub writer_fixed: ResourceVector,
    pub writer_per_lane: ResourceVector,
    /// Loop control of every map scope.
    pub map_fixed: ResourceVector,
}

/// Storage costs for buffers and delay lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferCosts {
    pub bram_block_bits: u64,
    /// Delay lines at or below this many bits stay in registers.
    pub delay_register_max_bits: u64,
}

/// Unit costs of the model. Op keys are `<type>.<op>`, e.g. `f32.mul`,
/// `i64.lt` or `f32.select`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTable {
    pub ops: BTreeMap<String, ResourceVector>,
    pub plumbing: PlumbingCosts,
    pub buffers: BufferCosts,
}

fn rv(lut_logic: u64, registers: u64, dsp: u64) -> ResourceVector {
    ResourceVector {
        lut_logic,
        registers,
        dsp,
        ..ResourceVector::ZERO
    }
}

impl Default for CostTable {
    fn default() -> Self {
        let mut ops = BTreeMap::new();
        let mut put = |ty: ElemType, op: &str, v: ResourceVector| {
            ops.insert(format!("{}.{op}", ty.name()), v);
        };
        put(ElemType::F32, "add", rv(220, 350, 2));
        put(ElemType::F32, "sub", rv(220, 350, 2));
        put(ElemType::F32, "mul", rv(110, 180, 3));
        put(ElemType::F32, "div", rv(800, 1400, 0));
        put(ElemType::F32, "min", rv(60, 40, 0));
        put(ElemType::F32, "max", rv(60, 40, 0));
        for ty in [ElemType::I32, ElemType::I64] {
            let w = ty.bits() as u64;
            put(ty, "add", rv(w, w, 0));
            put(ty, "sub", rv(w, w, 0));
            put(ty, "mul", rv(w, 2 * w, w / 16));
            put(ty, "div", rv(w * w / 2, w * 4, 0));
            put(ty, "min", rv(w + w / 2, w, 0));
            put(ty, "max", rv(w + w / 2, w, 0));
        }
        for ty in [ElemType::F32, ElemType::I32, ElemType::I64, ElemType::Bool] {
            let w = ty.bits() as u64;
            for op in ["lt", "le", "gt", "ge", "eq", "ne"] {
                put(ty, op, rv(w.div_ceil(2), 1, 0));
            }
            put(ty, "select", rv(w, w, 0));
        }
        CostTable {
            ops,
            plumbing: PlumbingCosts {
                sync_registers_per_lane: 8,
                sync_registers_per_depth: 4,
                convert_lut_per_lane: 16,
                stream_lut_memory_per_slot: 1,
                stream_registers_per_slot: 1,
                reader_fixed: rv(300, 500, 0),
                reader_per_lane: rv(40, 64, 0),
                writer_fixed: rv(300, 500, 0),
                writer_per_lane: rv(40, 64, 0),
                map_fixed: rv(80, 120, 0),
            },
            buffers: BufferCosts {
                bram_block_bits: BRAM_BLOCK_BITS,
                delay_register_max_bits: 1024,
            },
        }
    }
}

impl CostTable {
    pub fn op(&self, key: &str) -> Result<ResourceVector, ResourceError> {
        self.ops
            .get(key)
            .copied()
            .ok_or_else(|| ResourceError::UnknownOpCost(key.to_string()))
    }

    pub fn from_json(s: &str) -> Result<CostTable, ResourceError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<CostTable, ResourceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("cost table serializes");
        s.push('\n');
        s
    }

    /// BRAM blocks for `bits`, at least one when non-empty.
    pub fn bram_blocks(&self, bits: u64) -> u64 {
        bits.div_ceil(self.buffers.bram_block_bits)
    }
}
