//! The hint search space: a 7-bit mask of disabled plan operators combined
//! with a degree-of-parallelism (dop) setting.
//!
//! The operator order is fixed everywhere in the system. Bit weights run from
//! the most significant bit for `NestedLoopJoin` down to the least significant
//! for `SeqScan`, so e.g. disabling `MergeJoin` and `BitmapScan` yields mask
//! 24 (0b0011000).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The seven hintable operators, in the fixed system-wide order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    NestedLoopJoin,
    HashJoin,
    MergeJoin,
    BitmapScan,
    IndexOnlyScan,
    IndexScan,
    SeqScan,
}

impl OperatorKind {
    pub const COUNT: usize = 7;

    pub const ALL: [OperatorKind; Self::COUNT] = [
        OperatorKind::NestedLoopJoin,
        OperatorKind::HashJoin,
        OperatorKind::MergeJoin,
        OperatorKind::BitmapScan,
        OperatorKind::IndexOnlyScan,
        OperatorKind::IndexScan,
        OperatorKind::SeqScan,
    ];

    /// Position in the fixed order, 0..=6.
    pub const fn ordinal(self) -> u8 {
        self as u8
    }

    /// Bitmask weight: 2^(6 - ordinal). `NestedLoopJoin` is the most
    /// significant bit.
    pub const fn bit(self) -> u8 {
        1 << (6 - self.ordinal())
    }

    /// Ordinals 0..=2 are join operators, 3..=6 are scans.
    pub const fn is_join(self) -> bool {
        self.ordinal() <= 2
    }

    /// The name used verbatim in dataset files.
    pub const fn name(self) -> &'static str {
        match self {
            OperatorKind::NestedLoopJoin => "NestedLoopJoin",
            OperatorKind::HashJoin => "HashJoin",
            OperatorKind::MergeJoin => "MergeJoin",
            OperatorKind::BitmapScan => "BitmapScan",
            OperatorKind::IndexOnlyScan => "IndexOnlyScan",
            OperatorKind::IndexScan => "IndexScan",
            OperatorKind::SeqScan => "SeqScan",
        }
    }

    pub fn from_name(name: &str) -> Option<OperatorKind> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }
}

/// Number of distinct operator masks (2^7).
pub const NUM_MASKS: u32 = 128;

/// Mask of the three join-operator bits.
pub const JOIN_MASK: u8 = OperatorKind::NestedLoopJoin.bit()
    | OperatorKind::HashJoin.bit()
    | OperatorKind::MergeJoin.bit();

/// Mask of the four scan-operator bits.
pub const SCAN_MASK: u8 = OperatorKind::BitmapScan.bit()
    | OperatorKind::IndexOnlyScan.bit()
    | OperatorKind::IndexScan.bit()
    | OperatorKind::SeqScan.bit();

/// The composite that suppresses index nested-loop joins: the planner picks
/// them unless nested loop join, bitmap scan and index scan are all disabled
/// together.
pub const INL_MASK: u8 = OperatorKind::NestedLoopJoin.bit()
    | OperatorKind::BitmapScan.bit()
    | OperatorKind::IndexScan.bit();

/// One point of the search space: disabled-operator mask plus dop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HintSet {
    pub ops_mask: u8,
    pub dop: u32,
}

impl HintSet {
    /// Panics if `ops_mask` is out of range; masks come from the 7-bit space.
    pub fn new(ops_mask: u8, dop: u32) -> HintSet {
        assert!(
            (ops_mask as u32) < NUM_MASKS,
            "ops_mask {ops_mask} out of range"
        );
        HintSet { ops_mask, dop }
    }

    pub fn disables(&self, op: OperatorKind) -> bool {
        self.ops_mask & op.bit() != 0
    }

    /// Flips the index-nested-loop composite: if nested loop join, bitmap
    /// scan and index scan are all disabled, re-enables all three; otherwise
    /// disables all three. Other bits and dop are untouched. Involutive.
    pub fn toggle_inl(&self) -> HintSet {
        let ops_mask = if self.ops_mask & INL_MASK == INL_MASK {
            self.ops_mask & !INL_MASK
        } else {
            self.ops_mask | INL_MASK
        };
        HintSet {
            ops_mask,
            dop: self.dop,
        }
    }
}

impl std::fmt::Display for HintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "theta(mask={}, dop={})", self.ops_mask, self.dop)
    }
}

/// Stable identifier of a hintset within a configured dop set:
/// `ops_mask * |dop_values| + index_of(dop)`. Canonical tie-break everywhere:
/// the smallest id wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ThetaId(pub u32);

impl std::fmt::Display for ThetaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The id of the default hintset (mask 0, first dop value).
pub const DEFAULT_THETA_ID: ThetaId = ThetaId(0);

/// The configured dop values of a dataset. Non-empty, duplicate-free; the
/// first element is the default dop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DopValues(Vec<u32>);

impl DopValues {
    pub fn new(values: Vec<u32>) -> Result<DopValues> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("dop value list is empty".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if *v == 0 {
                return Err(Error::InvalidConfig("dop values must be positive".into()));
            }
            if values[..i].contains(v) {
                return Err(Error::InvalidConfig(format!("duplicate dop value {v}")));
            }
        }
        Ok(DopValues(values))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    /// The default dop: the first configured value.
    pub fn default_dop(&self) -> u32 {
        self.0[0]
    }

    /// The default hintset: nothing disabled, default dop.
    pub fn default_hintset(&self) -> HintSet {
        HintSet::new(0, self.default_dop())
    }

    pub fn index_of(&self, dop: u32) -> Option<usize> {
        self.0.iter().position(|v| *v == dop)
    }

    pub fn contains(&self, dop: u32) -> bool {
        self.index_of(dop).is_some()
    }

    /// Total number of hintsets: 128 * |dop_values|.
    pub fn space_size(&self) -> usize {
        NUM_MASKS as usize * self.0.len()
    }

    /// Id of a hintset. Errors if the dop is not a configured value.
    pub fn try_theta_id(&self, h: &HintSet) -> Result<ThetaId> {
        let idx = self.index_of(h.dop).ok_or_else(|| Error::UnknownDop {
            dop: h.dop,
            allowed: self.0.clone(),
        })?;
        Ok(ThetaId(
            h.ops_mask as u32 * self.0.len() as u32 + idx as u32,
        ))
    }

    /// Id of a hintset known to use a configured dop. Panics otherwise; use
    /// [`DopValues::try_theta_id`] for unvalidated input.
    pub fn theta_id(&self, h: &HintSet) -> ThetaId {
        self.try_theta_id(h)
            .expect("hintset dop must come from the configured dop set")
    }

    /// Inverse of [`DopValues::theta_id`]; round-trips exactly.
    pub fn try_theta(&self, id: ThetaId) -> Result<HintSet> {
        let k = self.0.len() as u32;
        if id.0 >= NUM_MASKS * k {
            return Err(Error::InvalidConfig(format!(
                "theta id {} out of range for space of size {}",
                id.0,
                NUM_MASKS * k
            )));
        }
        Ok(HintSet {
            ops_mask: (id.0 / k) as u8,
            dop: self.0[(id.0 % k) as usize],
        })
    }

    pub fn theta(&self, id: ThetaId) -> HintSet {
        self.try_theta(id).expect("theta id must be in range")
    }

    /// All hintsets of the space, in ThetaId order.
    pub fn enumerate_space(&self) -> Vec<HintSet> {
        let mut out = Vec::with_capacity(self.space_size());
        for mask in 0..NUM_MASKS {
            for dop in self.iter() {
                out.push(HintSet {
                    ops_mask: mask as u8,
                    dop,
                });
            }
        }
        out
    }
}

/// Builds the hintset disabling the given operators. Duplicate kinds are
/// harmless; the dop must be one of the configured values.
pub fn encode(disabled: &[OperatorKind], dop: u32, dops: &DopValues) -> Result<HintSet> {
    if !dops.contains(dop) {
        return Err(Error::UnknownDop {
            dop,
            allowed: dops.as_slice().to_vec(),
        });
    }
    let ops_mask = disabled.iter().fold(0u8, |m, op| m | op.bit());
    Ok(HintSet { ops_mask, dop })
}
