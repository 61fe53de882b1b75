//! JSON formats for matrices, vectors, maps and faces.
//!
//! Matrices are `{"rows": r, "cols": c, "entries": [[re, im], ...]}` in
//! row-major order; vectors are bare `[[re, im], ...]` arrays. Doubles are
//! written in shortest round-trip form, so `parse ∘ serialize` is exact.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::maps::{self, MapObject};
use crate::stormer::FaceSpec;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    parse_json(text, "matrix")
}

pub fn parse_matrix_file(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    parse_json(&read(path)?, &path.display().to_string())
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(m).expect("matrices always serialize")
}

pub fn parse_vector(text: &str) -> Result<Vec<Complex64>> {
    let v: Vec<Complex64> = parse_json(text, "vector")?;
    if v.is_empty() || v.iter().any(|z| !z.is_finite()) {
        return Err(Error::Parse("vector must be non-empty and finite".into()));
    }
    Ok(v)
}

pub fn parse_vector_file(path: impl AsRef<Path>) -> Result<Vec<Complex64>> {
    parse_vector(&read(path.as_ref())?)
}

/// A map file holds either an explicit Choi matrix or a registry key.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapFile {
    Choi {
        dim_in: usize,
        dim_out: usize,
        choi: ComplexMatrix,
        #[serde(default)]
        label: Option<String>,
    },
    Key {
        key: String,
    },
}

/// Loads a map; `adu:<file>` keys resolve relative to `base_dir`.
pub fn parse_map(text: &str, base_dir: &Path) -> Result<MapObject> {
    match parse_json::<MapFile>(text, "map")? {
        MapFile::Choi {
            dim_in,
            dim_out,
            choi,
            label,
        } => MapObject::from_choi(dim_in, dim_out, choi, label.unwrap_or_else(|| "choi".into())),
        MapFile::Key { key } => {
            let load = |name: &str| -> Result<ComplexMatrix> {
                let p = PathBuf::from(name);
                parse_matrix_file(if p.is_absolute() { p } else { base_dir.join(p) })
            };
            maps::make_map(&key, &load)
        }
    }
}

pub fn parse_map_file(path: impl AsRef<Path>) -> Result<MapObject> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_map(&read(path)?, base)
}

pub fn map_to_json(phi: &MapObject) -> String {
    serde_json::to_string(&MapFile::Choi {
        dim_in: phi.dim_in,
        dim_out: phi.dim_out,
        choi: phi.choi.clone(),
        label: Some(phi.label.clone()),
    })
    .expect("maps always serialize")
}

pub fn parse_face(text: &str) -> Result<FaceSpec> {
    let face: FaceSpec = parse_json(text, "face")?;
    face.validate()?;
    Ok(face)
}

pub fn parse_face_file(path: impl AsRef<Path>) -> Result<FaceSpec> {
    parse_face(&read(path.as_ref())?)
}
