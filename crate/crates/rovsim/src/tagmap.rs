//! Tag-map text format: one record per marker, `#` comments allowed.
//!
//! ```text
//! # id  r00 r01 r02  r10 r11 r12  r20 r21 r22  tx ty tz
//! 0  0 -1 0  0 0 -1  1 0 0   0.65 0.0 0.35
//! ```
//!
//! The 12 numbers are the flat rigid-transform encoding (rotation row-major,
//! then translation); the rotation is the tag's map-frame pose with +z
//! pointing out of the tag face toward the viewing volume.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rovsim_core::localization::{Tag, TagMap};
use rovsim_core::transform::RigidTransform;

pub fn parse_tag_map(text: &str) -> Result<TagMap> {
    let mut tags = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 13 {
            bail!(
                "line {}: expected 13 fields (id + 12 transform numbers), got {}",
                lineno + 1,
                fields.len()
            );
        }
        let id: u32 = fields[0]
            .parse()
            .with_context(|| format!("line {}: bad tag id {:?}", lineno + 1, fields[0]))?;
        let mut flat = [0.0f64; 12];
        for (slot, field) in flat.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .with_context(|| format!("line {}: bad number {field:?}", lineno + 1))?;
        }
        let pose = RigidTransform::from_flat(&flat)
            .map_err(|e| anyhow::anyhow!("line {}: {e}", lineno + 1))?;
        tags.push(Tag { id, pose });
    }
    TagMap::new(tags).map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn load_tag_map(path: &Path) -> Result<TagMap> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading tag map {}", path.display()))?;
    parse_tag_map(&text).with_context(|| format!("parsing tag map {}", path.display()))
}

pub fn format_tag_map(map: &TagMap) -> String {
    let mut out = String::new();
    out.push_str("# id  r00 r01 r02  r10 r11 r12  r20 r21 r22  tx ty tz\n");
    for tag in map.tags() {
        let f = tag.pose.to_flat();
        write!(out, "{}", tag.id).unwrap();
        for v in f {
            write!(out, " {v:.9e}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let map = parse_tag_map(
            "# comment\n\
             0  1 0 0  0 1 0  0 0 1  1.0 2.0 3.0\n\
             \n\
             3  0 -1 0  1 0 0  0 0 1  0.5 0.0 0.1 # trailing comment\n",
        )
        .unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map.get(3).unwrap().pose.translation().x, 0.5);

        let text = format_tag_map(&map);
        let again = parse_tag_map(&text).unwrap();
        assert_eq!(again.len(), 2);
        for (a, b) in map.tags().iter().zip(again.tags()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.pose.to_flat(), b.pose.to_flat());
        }
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_tag_map("0 1 2 3").is_err());
        assert!(parse_tag_map("x  1 0 0  0 1 0  0 0 1  0 0 0").is_err());
        // Non-orthonormal rotation.
        assert!(parse_tag_map("0  2 0 0  0 1 0  0 0 1  0 0 0").is_err());
        // Duplicate ids.
        assert!(parse_tag_map(
            "0  1 0 0  0 1 0  0 0 1  0 0 0\n0  1 0 0  0 1 0  0 0 1  1 0 0"
        )
        .is_err());
    }
}
