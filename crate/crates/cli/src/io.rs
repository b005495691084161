//! Function files: one JSON document with the grid header and a base64 payload
//! of little-endian `f64` values.
//!
//! ```json
//! {"kind": "function", "n": 1, "j_min": 0, "J": 3, "payload": "AAAAAAAA8D8..."}
//! ```
//!
//! A `function` payload holds the cell values in row-major order (axis 0
//! slowest). A `coefficients` payload holds the base-cube mean followed by the
//! Haar coefficients (level ascending, cube row-major, pattern lexicographic),
//! so both kinds carry exactly `2^{(J - j_min) n}` values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use dyadic_morrey::{
    forward_transform, inverse_transform, GridFunction, GridGeometry, HaarCoefficients,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Function,
    Coefficients,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    kind: FileKind,
    n: usize,
    j_min: i32,
    #[serde(rename = "J")]
    finest: i32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
    payload: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionFile {
    pub kind: FileKind,
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
    /// Free-form provenance echoed by the command that wrote the file.
    pub meta: BTreeMap<String, String>,
}

impl FunctionFile {
    pub fn from_function(f: &GridFunction) -> Self {
        Self {
            kind: FileKind::Function,
            geometry: *f.geometry(),
            values: f.values().to_vec(),
            meta: BTreeMap::new(),
        }
    }

    pub fn from_coefficients(c: &HaarCoefficients) -> Self {
        let mut values = Vec::with_capacity(c.len() + 1);
        values.push(c.base_mean());
        values.extend(c.to_flat());
        Self {
            kind: FileKind::Coefficients,
            geometry: *c.geometry(),
            values,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    /// Cell values, transforming back if the file holds coefficients.
    pub fn to_function(&self) -> CliResult<GridFunction> {
        match self.kind {
            FileKind::Function => Ok(GridFunction::new(self.geometry, self.values.clone())?),
            FileKind::Coefficients => Ok(inverse_transform(&self.to_coefficients()?)),
        }
    }

    pub fn to_coefficients(&self) -> CliResult<HaarCoefficients> {
        match self.kind {
            FileKind::Coefficients => Ok(HaarCoefficients::from_flat(
                self.geometry,
                self.values[0],
                &self.values[1..],
            )?),
            FileKind::Function => Ok(forward_transform(&self.to_function()?)),
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let doc: Document = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("malformed function file: {e}")))?;
        let geometry = GridGeometry::new(doc.n, doc.j_min, doc.finest)
            .map_err(|e| CliError::Usage(format!("bad header: {e}")))?;
        let bytes = STANDARD
            .decode(doc.payload.as_bytes())
            .map_err(|e| CliError::Usage(format!("bad payload encoding: {e}")))?;
        if bytes.len() % 8 != 0 {
            return Err(CliError::Usage(format!(
                "payload is {} bytes, not a whole number of 8-byte values",
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect();
        if values.len() != geometry.cell_count() {
            return Err(CliError::Usage(format!(
                "payload holds {} values but the header implies {}",
                values.len(),
                geometry.cell_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Data(format!(
                "payload value {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self {
            kind: doc.kind,
            geometry,
            values,
            meta: doc.meta,
        })
    }

    pub fn to_json(&self) -> String {
        let bytes: Vec<u8> = self.values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let doc = Document {
            kind: self.kind,
            n: self.geometry.dim(),
            j_min: self.geometry.coarsest_level(),
            finest: self.geometry.finest_level(),
            meta: self.meta.clone(),
            payload: STANDARD.encode(bytes),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading {}", path.display()),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_json()).map_err(|source| CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo() -> GridGeometry {
        GridGeometry::new(1, 0, 3).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = GridFunction::from_fn(geo(), |x| (x[0] * 7.0).sin() / 3.0);
        let file = FunctionFile::from_function(&f).with_meta("op", "test");
        let back = FunctionFile::parse(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let c = FunctionFile::from_coefficients(&forward_transform(&f));
        let back = FunctionFile::parse(&c.to_json()).unwrap();
        assert_eq!(back.values, c.values);
        assert!(back.to_function().unwrap().max_abs_difference(&f).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_bad_documents() {
        let good = FunctionFile::from_function(&GridFunction::constant(geo(), 1.0)).to_json();
        let short = good.replace("\"J\": 3", "\"J\": 4");
        assert!(
            matches!(FunctionFile::parse(&short), Err(CliError::Usage(m)) if m.contains("implies 16"))
        );
        let broken = good.replace('{', "[");
        assert!(
            matches!(FunctionFile::parse(&broken), Err(CliError::Usage(m)) if m.contains("line"))
        );
        let bad_b64 = good.replace("\"payload\": \"", "\"payload\": \"!!");
        assert!(
            matches!(FunctionFile::parse(&bad_b64), Err(CliError::Usage(m)) if m.contains("offset"))
        );
    }

    #[test]
    fn rejects_non_finite_values() {
        let mut file = FunctionFile::from_function(&GridFunction::constant(geo(), 1.0));
        file.values[5] = f64::NAN;
        assert!(
            matches!(FunctionFile::parse(&file.to_json()), Err(CliError::Data(m)) if m.contains("value 5"))
        );
    }
}
