//! Metric snapshots: a JSON header document next to a raw binary payload.
//! The payload is row-major in index order (k_y, j_x, row, col) with each
//! entry stored as interleaved re/im little-endian f64.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::field::MatrixField;
use crate::metric::{BundleContext, MetricField};
use crate::scenario::{BundleDescriptor, TauSpec};
use num_complex::Complex64 as C64;

pub const BYTE_ORDER: &str = "little-endian";
pub const LAYOUT: &str = "row-major, index order (k_y, j_x, row, col), interleaved re/im 64-bit IEEE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub bundle: BundleDescriptor,
    pub n: usize,
    pub tau: TauSpec,
    pub rank: usize,
    pub byte_order: String,
    pub layout: String,
    pub provenance: String,
    pub payload: String,
}

fn bin_path(json_path: &Path) -> PathBuf {
    json_path.with_extension("bin")
}

/// Write `stem.json` and `stem.bin` for a metric on a built-in bundle.
pub fn save_metric(stem: &Path, ctx: &BundleContext, h: &MetricField) -> Result<PathBuf, Error> {
    let descriptor = BundleDescriptor::from_tag(ctx.bundle().class_tag()).ok_or_else(|| {
        Error::Snapshot("custom multiplier systems have no serializable descriptor".into())
    })?;
    let json_path = stem.with_extension("json");
    let payload_path = bin_path(&json_path);
    let header = SnapshotHeader {
        bundle: descriptor,
        n: ctx.domain().n(),
        tau: TauSpec::from_complex(ctx.domain().tau()),
        rank: ctx.rank(),
        byte_order: BYTE_ORDER.to_string(),
        layout: LAYOUT.to_string(),
        provenance: h.provenance().as_str().to_string(),
        payload: payload_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    if let Some(parent) = json_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut jf = std::fs::File::create(&json_path)?;
    jf.write_all(serde_json::to_string_pretty(&header).unwrap().as_bytes())?;
    jf.write_all(b"\n")?;

    let mut buf = Vec::with_capacity(h.values().data().len() * 16);
    for v in h.values().data() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    std::fs::File::create(&payload_path)?.write_all(&buf)?;
    Ok(json_path)
}

/// Read a snapshot header plus payload values. Accepts either the header
/// path or the stem.
pub fn load_values(path: &Path) -> Result<(SnapshotHeader, MatrixField), Error> {
    let json_path = if path.extension().map(|e| e == "json").unwrap_or(false) {
        path.to_path_buf()
    } else {
        path.with_extension("json")
    };
    let text = std::fs::read_to_string(&json_path)?;
    let header: SnapshotHeader =
        serde_json::from_str(&text).map_err(|e| Error::Snapshot(e.to_string()))?;
    if header.byte_order != BYTE_ORDER {
        return Err(Error::Snapshot(format!(
            "unsupported byte order '{}'",
            header.byte_order
        )));
    }
    if header.layout != LAYOUT {
        return Err(Error::Snapshot(format!("unsupported layout '{}'", header.layout)));
    }
    let payload_path = json_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(&header.payload);
    let mut bytes = Vec::new();
    std::fs::File::open(&payload_path)?.read_to_end(&mut bytes)?;
    let expected = header.n * header.n * header.rank * header.rank * 16;
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "payload length {} does not match header ({} expected)",
            bytes.len(),
            expected
        )));
    }
    let mut values = MatrixField::zeros(header.n, header.rank, header.rank);
    for (i, v) in values.data_mut().iter_mut().enumerate() {
        let re = f64::from_le_bytes(bytes[16 * i..16 * i + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[16 * i + 8..16 * i + 16].try_into().unwrap());
        *v = C64::new(re, im);
    }
    Ok((header, values))
}

/// Verify that a loaded header matches the context it will be used in.
pub fn check_header_against(header: &SnapshotHeader, ctx: &BundleContext) -> Result<(), Error> {
    if header.n != ctx.domain().n() {
        return Err(Error::Snapshot(format!(
            "snapshot resolution {} does not match scenario {}",
            header.n,
            ctx.domain().n()
        )));
    }
    if header.rank != ctx.rank() {
        return Err(Error::Snapshot(format!(
            "snapshot rank {} does not match bundle rank {}",
            header.rank,
            ctx.rank()
        )));
    }
    let tau = header.tau.to_complex();
    if (tau - ctx.domain().tau()).norm() > 1e-12 {
        return Err(Error::Snapshot("snapshot modulus differs from scenario".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::FactorSystem;
    use crate::torus::TorusDomain;

    #[test]
    fn roundtrip_preserves_bits() {
        let tau = C64::new(0.0, 1.0);
        let b = FactorSystem::atiyah_f2(tau);
        let ctx = BundleContext::new(TorusDomain::new(tau, 16).unwrap(), b).unwrap();
        let h = ctx.canonical_metric().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("final_metric");
        let json = save_metric(&stem, &ctx, &h).unwrap();
        let (header, values) = load_values(&json).unwrap();
        assert_eq!(header.rank, 2);
        assert_eq!(header.byte_order, BYTE_ORDER);
        assert_eq!(header.provenance, "canonical");
        assert_eq!(values, *h.values());
        check_header_against(&header, &ctx).unwrap();
    }

    #[test]
    fn header_mismatch_detected() {
        let tau = C64::new(0.0, 1.0);
        let b = FactorSystem::atiyah_f2(tau);
        let ctx = BundleContext::new(TorusDomain::new(tau, 16).unwrap(), b).unwrap();
        let h = ctx.canonical_metric().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("m");
        let json = save_metric(&stem, &ctx, &h).unwrap();
        let (header, _) = load_values(&json).unwrap();
        let other = BundleContext::new(
            TorusDomain::new(tau, 32).unwrap(),
            FactorSystem::atiyah_f2(tau),
        )
        .unwrap();
        assert!(check_header_against(&header, &other).is_err());
        // Truncated payload is rejected.
        let bin = json.with_extension("bin");
        let bytes = std::fs::read(&bin).unwrap();
        std::fs::write(&bin, &bytes[..bytes.len() - 16]).unwrap();
        assert!(load_values(&json).is_err());
    }
}
