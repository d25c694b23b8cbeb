//! Binary little-endian PLY export of deformed surfels for external viewers.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rig::DeformedSurfel;

const PROPERTIES: [&str; 9] = ["x", "y", "z", "nx", "ny", "nz", "scale_0", "scale_1", "opacity"];

pub fn encode_ply(surfels: &[DeformedSurfel]) -> Vec<u8> {
    let mut out = format!("ply\nformat binary_little_endian 1.0\nelement vertex {}\n", surfels.len());
    for p in PROPERTIES {
        out.push_str(&format!("property float {p}\n"));
    }
    out.push_str("end_header\n");
    let mut bytes = out.into_bytes();
    for s in surfels {
        let (t1, t2) = s.tangents();
        let row = [
            s.position.x,
            s.position.y,
            s.position.z,
            s.normal.x,
            s.normal.y,
            s.normal.z,
            t1.norm(),
            t2.norm(),
            s.opacity,
        ];
        for v in row {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    bytes
}

pub fn save_ply(surfels: &[DeformedSurfel], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ply(surfels)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenes::golden_scene;

    #[test]
    fn layout() {
        let d = golden_scene().unwrap().rest().unwrap();
        let bytes = encode_ply(&d);
        let header_end = bytes.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
        assert!(header.contains("element vertex 3\n"));
        assert_eq!(bytes.len() - header_end, 3 * PROPERTIES.len() * 4);
        let x = f32::from_le_bytes(bytes[header_end..header_end + 4].try_into().unwrap());
        assert_eq!(x, d[0].position.x as f32);
    }
}
