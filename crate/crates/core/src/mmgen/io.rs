//! On-disk dataset layout: one directory per instance holding `manifest.json`
//! and one `modality_<i>.mat` matrix file per modality. See `docs/schema.md`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureKind, GenParams, Labels, ModalityData, ModalitySpec, PartialMask};
use crate::error::{Error, Result};
use crate::Scalar;

pub const DATASET_FORMAT: &str = "simfuse-dataset/1";
const MATRIX_MAGIC: &str = "# simfuse-matrix 1";

#[derive(Debug, Serialize, Deserialize)]
struct ModalityEntry {
    file: String,
    spec: ModalitySpec,
    kind: FeatureKind,
    labels: Labels,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    problem: Option<String>,
    seed: u64,
    params: GenParams,
    n_entities: usize,
    truth: Labels,
    /// `y_NaN`; id `m` marks entities present in every modality.
    partial_mask: Option<Vec<usize>>,
    modalities: Vec<ModalityEntry>,
}

/// Writes a dense row-major matrix with a presence bitmap header.
///
/// Absent rows are written as `nan` values.
pub fn write_matrix<T: Scalar>(path: &Path, values: &Array2<T>, present: &[bool]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let (n, d) = values.dim();
    writeln!(w, "{MATRIX_MAGIC}")?;
    writeln!(w, "n {n}")?;
    writeln!(w, "d {d}")?;
    let bitmap: String = present.iter().map(|&p| if p { '1' } else { '0' }).collect();
    writeln!(w, "present {bitmap}")?;
    for (row, &p) in values.rows().into_iter().zip(present) {
        let mut first = true;
        for &v in row.iter() {
            if !first {
                w.write_all(b"\t")?;
            }
            first = false;
            if p && !v.is_nan() {
                write!(w, "{v}")?;
            } else {
                w.write_all(b"nan")?;
            }
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix<T: Scalar>(path: &Path) -> Result<(Array2<T>, Vec<bool>)> {
    let bad = |msg: String| Error::Format(format!("{}: {msg}", path.display()));
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format(format!("{}: truncated", path.display())))
    };
    if next()?.trim() != MATRIX_MAGIC {
        return Err(bad("missing header".into()));
    }
    let field = |line: String, key: &str| -> Result<String> {
        line.strip_prefix(key)
            .map(|s| s.trim().to_string())
            .ok_or_else(|| Error::Format(format!("{}: expected `{key}`", path.display())))
    };
    let n: usize = field(next()?, "n ")?.parse().map_err(|e| bad(format!("n: {e}")))?;
    let d: usize = field(next()?, "d ")?.parse().map_err(|e| bad(format!("d: {e}")))?;
    let bitmap = field(next()?, "present")?;
    if bitmap.len() != n {
        return Err(bad(format!("bitmap has {} entries, expected {n}", bitmap.len())));
    }
    let present: Vec<bool> = bitmap
        .chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(bad(format!("bad bitmap character {c:?}"))),
        })
        .collect::<Result<_>>()?;
    let mut values = Array2::from_elem((n, d), T::nan());
    for (i, &p) in present.iter().enumerate() {
        let line = next()?;
        let cells: Vec<&str> = if d == 0 { vec![] } else { line.split('\t').collect() };
        if cells.len() != d {
            return Err(bad(format!("row {i} has {} values, expected {d}", cells.len())));
        }
        if !p {
            continue;
        }
        for (j, c) in cells.into_iter().enumerate() {
            let v: f64 = c.parse().map_err(|e| bad(format!("row {i}: {e}")))?;
            values[[i, j]] = T::of(v);
        }
    }
    Ok((values, present))
}

/// Writes `ds` into `dir`, creating it if needed.
pub fn write_dataset<T: Scalar>(ds: &Dataset<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(ds.n_modalities());
    for (i, (m, spec)) in ds.modalities.iter().zip(&ds.specs).enumerate() {
        let file = format!("modality_{i}.mat");
        write_matrix(&dir.join(&file), &m.features, &m.present)?;
        entries.push(ModalityEntry {
            file,
            spec: spec.clone(),
            kind: m.kind,
            labels: m.labels.clone(),
        });
    }
    let manifest = Manifest {
        format: DATASET_FORMAT.to_string(),
        problem: ds.problem.clone(),
        seed: ds.rng_seed,
        params: ds.params.clone(),
        n_entities: ds.n_entities(),
        truth: ds.truth.clone(),
        partial_mask: ds.partial_mask.as_ref().map(PartialMask::as_labels),
        modalities: entries,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Reads a dataset directory written by [`write_dataset`].
pub fn read_dataset<T: Scalar>(dir: &Path) -> Result<Dataset<T>> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format != DATASET_FORMAT {
        return Err(Error::Format(format!("unsupported format {:?}", manifest.format)));
    }
    let m = manifest.modalities.len();
    let mut modalities = Vec::with_capacity(m);
    let mut specs = Vec::with_capacity(m);
    for entry in manifest.modalities {
        let (features, present) = read_matrix(&dir.join(&entry.file))?;
        modalities.push(ModalityData {
            features,
            present,
            labels: entry.labels,
            kind: entry.kind,
        });
        specs.push(entry.spec);
    }
    let partial_mask = manifest
        .partial_mask
        .map(|y| PartialMask::from_labels(&y, m))
        .transpose()?;
    let ds = Dataset {
        modalities,
        specs,
        truth: manifest.truth,
        partial_mask,
        rng_seed: manifest.seed,
        problem: manifest.problem,
        params: manifest.params,
    };
    if ds.n_entities() != manifest.n_entities {
        return Err(Error::Format("truth length disagrees with n_entities".into()));
    }
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmgen::{build_problem, mask_random, Problem, ProblemShape};

    #[test]
    fn dataset_roundtrip() {
        let shape = ProblemShape {
            n_entities: 40,
            n_features: 3,
            ..ProblemShape::desk()
        };
        let ds: Dataset<f64> = build_problem(Problem::MixedAll, &shape, &GenParams::default(), 5).unwrap();
        let ds = mask_random(&ds, 0.5, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let back: Dataset<f64> = read_dataset(dir.path()).unwrap();
        assert_eq!(back.truth, ds.truth);
        assert_eq!(back.partial_mask, ds.partial_mask);
        for (a, b) in back.modalities.iter().zip(&ds.modalities) {
            assert_eq!(a.present, b.present);
            assert_eq!(a.labels, b.labels);
            for ((x, y), &p) in a.features.rows().into_iter().zip(b.features.rows()).zip(&a.present) {
                if p {
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_bitmap() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mat");
        fs::write(&path, "# simfuse-matrix 1\nn 2\nd 1\npresent 1x\n1\n2\n").unwrap();
        assert!(read_matrix::<f64>(&path).is_err());
        fs::write(&path, "# simfuse-matrix 1\nn 2\nd 1\npresent 11\n1\n").unwrap();
        assert!(read_matrix::<f64>(&path).is_err());
    }
}
