//! Versioned, checksummed JSON storage for three-axis controllers.

use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use super::{AxisController, EnumerationOptions};
use crate::error::{Error, Result};
use crate::flat::VcParams;

pub const SCHEMA_VERSION: u32 = 1;

/// Settings shared by all axes of a controller file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthMeta {
    pub ts: f64,
    pub np: usize,
    pub vc: VcParams,
    pub facet_step: f64,
    pub gap_fill_grid: usize,
    pub weak_multiplier: f64,
    pub facet_tol: f64,
}

impl SynthMeta {
    pub fn new(ts: f64, np: usize, vc: VcParams, opts: &EnumerationOptions) -> Self {
        Self {
            ts,
            np,
            vc,
            facet_step: opts.facet_step,
            gap_fill_grid: opts.gap_fill_grid,
            weak_multiplier: crate::kernel::WEAK_MULTIPLIER,
            facet_tol: crate::polytope::FACET_TOL,
        }
    }
}

/// Controllers for the three flat axes (x, y, z).
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSet {
    pub meta: SynthMeta,
    pub axes: Vec<AxisController>,
}

#[derive(Serialize)]
struct Payload<'a> {
    schema_version: u32,
    spec: &'a SynthMeta,
    axes: &'a [AxisController],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_version: u32,
    spec: SynthMeta,
    axes: Vec<AxisController>,
    checksum: String,
}

fn fnv1a(bytes: &[u8]) -> String {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}

fn payload_checksum(meta: &SynthMeta, axes: &[AxisController]) -> Result<String> {
    let payload = Payload {
        schema_version: SCHEMA_VERSION,
        spec: meta,
        axes,
    };
    let bytes = serde_json::to_vec(&payload).map_err(|e| Error::ControllerCorrupt(e.to_string()))?;
    Ok(fnv1a(&bytes))
}

impl ControllerSet {
    pub fn region_counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_regions()).collect()
    }

    pub fn checksum(&self) -> Result<String> {
        payload_checksum(&self.meta, &self.axes)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let doc = Document {
            schema_version: SCHEMA_VERSION,
            spec: self.meta.clone(),
            axes: self.axes.clone(),
            checksum: self.checksum()?,
        };
        serde_json::to_vec(&doc).map_err(|e| Error::ControllerCorrupt(e.to_string()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| Error::ControllerCorrupt(e.to_string()))?;
        let found = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::ControllerCorrupt("missing schema_version".into()))?;
        if found != SCHEMA_VERSION as u64 {
            return Err(Error::ControllerVersion {
                expected: SCHEMA_VERSION,
                found: found as u32,
            });
        }
        let doc: Document =
            serde_json::from_value(value).map_err(|e| Error::ControllerCorrupt(e.to_string()))?;
        let actual = payload_checksum(&doc.spec, &doc.axes)?;
        if actual != doc.checksum {
            return Err(Error::ControllerCorrupt(format!(
                "checksum {} does not match contents ({actual})",
                doc.checksum
            )));
        }
        Ok(Self {
            meta: doc.spec,
            axes: doc.axes,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<usize> {
        let bytes = self.to_bytes()?;
        std::fs::write(path, &bytes)?;
        Ok(bytes.len())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
