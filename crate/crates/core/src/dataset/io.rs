//! Dataset files.
//!
//! * `problems.jsonl`: one JSON object per line with `id`, `orbit_id`,
//!   `perm` (image vector) and `system` (grammar text), plus optional
//!   `timings` where `"inf"` marks a timeout.
//! * `dataset.csv`: header `id,orbit_id,perm,f1..fK[,t0..tM],label,tie`.
//!   `perm` is the image vector separated by spaces, `label` may be empty
//!   for unlabeled records, `+inf` is written `inf`.
//!
//! Provenance travels in a `<path>.provenance.json` sidecar.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{label_from_timings, Dataset, DatasetError, ProblemRecord};
use crate::features::{extract_features, FeatureVector};
use crate::polysys::{num_orderings, parse_system, OrderingLabel, VarPermutation};

#[derive(Clone, Copy, Debug, PartialEq)]
struct Timing(f64);

impl Serialize for Timing {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Timing {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Timing(x)),
            Raw::Text(t) => parse_float(&t).map(Timing).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    id: String,
    orbit_id: String,
    perm: VarPermutation,
    system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timings: Option<Vec<Timing>>,
}

pub(crate) fn format_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

pub(crate) fn parse_float(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")),
    }
}

fn provenance_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".provenance.json");
    PathBuf::from(name)
}

fn save_provenance(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let side = provenance_path(path);
    if d.provenance.is_empty() {
        if side.exists() {
            std::fs::remove_file(side)?;
        }
        return Ok(());
    }
    let mut text = serde_json::to_string_pretty(&d.provenance)?;
    text.push('\n');
    std::fs::write(side, text)?;
    Ok(())
}

fn load_provenance(path: &Path) -> Result<BTreeMap<String, String>, DatasetError> {
    let side = provenance_path(path);
    if !side.exists() {
        return Ok(BTreeMap::new());
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(side)?)?)
}

pub fn save_jsonl(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in &d.records {
        let system = r
            .system
            .as_ref()
            .ok_or_else(|| DatasetError::MissingSystem { id: r.id.clone() })?;
        let rec = JsonRecord {
            id: r.id.clone(),
            orbit_id: r.orbit_id.clone(),
            perm: r.perm.clone(),
            system: system.to_string(),
            timings: r
                .timings
                .as_ref()
                .map(|ts| ts.iter().map(|&t| Timing(t)).collect()),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    save_provenance(d, path)
}

/// Reads problems, recomputing features and deriving labels from timings.
pub fn load_jsonl(path: &Path) -> Result<Dataset, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| DatasetError::Jsonl { line: lineno, msg };
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let system =
            parse_system(&rec.system).map_err(|e| err(format!("record {:?}: {e}", rec.id)))?;
        if rec.perm.len() != system.nvars() {
            return Err(err(format!(
                "record {:?}: permutation has length {}, system has {} variables",
                rec.id,
                rec.perm.len(),
                system.nvars()
            )));
        }
        let mut r = ProblemRecord {
            id: rec.id.clone(),
            orbit_id: rec.orbit_id,
            perm: rec.perm,
            features: extract_features(&system),
            system: Some(system),
            timings: None,
            label: None,
            tie: false,
        };
        if let Some(ts) = rec.timings {
            let ts: Vec<f64> = ts.into_iter().map(|t| t.0).collect();
            if ts.len() != num_orderings(r.nvars()) {
                return Err(err(format!(
                    "record {:?}: expected {} timings, found {}",
                    rec.id,
                    num_orderings(r.nvars()),
                    ts.len()
                )));
            }
            r.set_timings(ts)
                .map_err(|e| err(format!("record {:?}: {e}", rec.id)))?;
        }
        records.push(r);
    }
    Dataset::new(records, load_provenance(path)?)
}

fn perm_to_text(p: &VarPermutation) -> String {
    p.image()
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn save_csv(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let nfeat = d.records.first().map_or(0, |r| r.features.len());
    let with_timings = d.records.first().is_some_and(|r| r.timings.is_some());
    let ntimes = d.nvars().map_or(0, num_orderings);
    let mut header: Vec<String> = vec!["id".into(), "orbit_id".into(), "perm".into()];
    header.extend((1..=nfeat).map(|i| format!("f{i}")));
    if with_timings {
        header.extend((0..ntimes).map(|i| format!("t{i}")));
    }
    header.push("label".into());
    header.push("tie".into());

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(&header)?;
    for (row, r) in d.records.iter().enumerate() {
        let mut fields = vec![r.id.clone(), r.orbit_id.clone(), perm_to_text(&r.perm)];
        if r.features.len() != nfeat {
            return Err(DatasetError::Row {
                row: row + 1,
                msg: format!("expected {nfeat} features, found {}", r.features.len()),
            });
        }
        fields.extend(r.features.values().iter().map(|&x| format_float(x)));
        if with_timings {
            let ts = r.timings.as_ref().ok_or_else(|| DatasetError::Row {
                row: row + 1,
                msg: "timings missing while other records have them".into(),
            })?;
            fields.extend(ts.iter().map(|&t| format_float(t)));
        }
        fields.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        fields.push(r.tie.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    save_provenance(d, path)
}

pub fn load_csv(path: &Path) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(BufReader::new(File::open(path)?));
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let (c_id, c_orbit, c_perm) = (col("id")?, col("orbit_id")?, col("perm")?);
    let (c_label, c_tie) = (col("label")?, col("tie")?);
    let mut feat_cols = Vec::new();
    while let Ok(c) = col(&format!("f{}", feat_cols.len() + 1)) {
        feat_cols.push(c);
    }
    if feat_cols.is_empty() {
        return Err(DatasetError::MissingColumn("f1".into()));
    }
    let nvars = FeatureVector(vec![0.0; feat_cols.len()])
        .nvars()
        .ok_or_else(|| DatasetError::Row {
            row: 0,
            msg: format!("{} feature columns do not match 2 + 3n", feat_cols.len()),
        })?;
    let ntimes = num_orderings(nvars);
    let time_cols: Option<Vec<usize>> = if col("t0").is_ok() {
        Some((0..ntimes).map(|i| col(&format!("t{i}"))).collect::<Result<_, _>>()?)
    } else {
        None
    };

    let mut records = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec?;
        let err = |msg: String| DatasetError::Row { row, msg };
        let field = |c: usize| rec.get(c).unwrap_or("");
        let image: Vec<usize> = field(c_perm)
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(format!("bad permutation entry {t:?}"))))
            .collect::<Result<_, _>>()?;
        let perm = VarPermutation::new(image).map_err(|e| err(e.to_string()))?;
        if perm.len() != nvars {
            return Err(err(format!(
                "permutation has length {}, features imply {nvars} variables",
                perm.len()
            )));
        }
        let features = feat_cols
            .iter()
            .map(|&c| parse_float(field(c)).map_err(&err))
            .collect::<Result<Vec<_>, _>>()?;
        let timings = match &time_cols {
            Some(cols) => Some(
                cols.iter()
                    .map(|&c| parse_float(field(c)).map_err(&err))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        let label = match field(c_label).trim() {
            "" => None,
            t => Some(OrderingLabel(
                t.parse().map_err(|_| err(format!("bad label {t:?}")))?,
            )),
        };
        if label.is_some_and(|l| l.0 >= ntimes) {
            return Err(err(format!("label out of range 0..{ntimes}")));
        }
        let tie = match field(c_tie).trim() {
            "true" => true,
            "false" | "" => false,
            t => return Err(err(format!("bad tie flag {t:?}"))),
        };
        if let Some(ts) = &timings {
            let (expected, expected_tie) =
                label_from_timings(ts).map_err(|e| err(e.to_string()))?;
            if label != Some(expected) || tie != expected_tie {
                return Err(err(format!(
                    "label/tie ({}, {tie}) disagree with timings (argmin {expected}, tie {expected_tie})",
                    label.map_or("-".to_string(), |l| l.to_string())
                )));
            }
        }
        records.push(ProblemRecord {
            id: field(c_id).to_string(),
            orbit_id: field(c_orbit).to_string(),
            perm,
            system: None,
            features: FeatureVector(features),
            timings,
            label,
            tie,
        });
    }
    Dataset::new(records, load_provenance(path)?)
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

/// Dispatches on extension: `.jsonl` problems or CSV feature tables.
pub fn save_dataset(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    if is_jsonl(path) {
        save_jsonl(d, path)
    } else {
        save_csv(d, path)
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    if is_jsonl(path) {
        load_jsonl(path)
    } else {
        load_csv(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, GeneratorConfig};

    fn sample() -> Dataset {
        let mut d = generate_synthetic(
            &GeneratorConfig {
                count: 8,
                ..GeneratorConfig::default()
            },
            21,
        )
        .unwrap();
        let mut ts = d.records[3].timings.clone().unwrap();
        ts[4] = f64::INFINITY;
        d.records[3].set_timings(ts).unwrap();
        d
    }

    fn without_systems(d: &Dataset) -> Dataset {
        let mut d = d.clone();
        d.records.iter_mut().for_each(|r| r.system = None);
        d
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset.csv");
        let d = sample();
        save_csv(&d, &path).unwrap();
        assert_eq!(load_csv(&path).unwrap(), without_systems(&d));
        assert!(std::fs::read_to_string(&path).unwrap().contains(",inf,"));
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("problems.jsonl");
        let d = sample();
        save_dataset(&d, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), d);
    }

    #[test]
    fn missing_label_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "id,orbit_id,perm,f1,f2,f3,f4,f5,tie\na,a,0,1,1,1,1,1,false\n")
            .unwrap();
        match load_csv(&path) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "label"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inf_timing_cell_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(
            &path,
            "id,orbit_id,perm,f1,f2,f3,f4,f5,t0,label,tie\na,a,0,1,1,1,1,1,inf,,false\n",
        )
        .unwrap();
        // a single all-timeout ordering must be rejected
        assert!(matches!(load_csv(&path), Err(DatasetError::Row { row: 1, .. })));
        std::fs::write(
            &path,
            "id,orbit_id,perm,f1,f2,f3,f4,f5,f6,f7,f8,t0,t1,label,tie\n\
             a,a,0 1,1,1,1,1,1,1,1,1,inf,2.5,1,false\n",
        )
        .unwrap();
        let d = load_csv(&path).unwrap();
        assert_eq!(d.records[0].timings, Some(vec![f64::INFINITY, 2.5]));
    }

    #[test]
    fn bad_rows_report_row_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(
            &path,
            "id,orbit_id,perm,f1,f2,f3,f4,f5,label,tie\na,a,0,1,1,1,1,1,0,false\nb,b,0,1,x,1,1,1,0,false\n",
        )
        .unwrap();
        assert!(matches!(load_csv(&path), Err(DatasetError::Row { row: 2, .. })));
    }

    #[test]
    fn jsonl_errors_carry_line_and_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"a\",\"orbit_id\":\"a\",\"perm\":[0,1,2],\"system\":\"vars 3; x1\"}\n\
             {\"id\":\"b\",\"orbit_id\":\"b\",\"perm\":[0,1,2],\"system\":\"vars 3; x1 +\"}\n",
        )
        .unwrap();
        match load_jsonl(&path) {
            Err(DatasetError::Jsonl { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("\"b\""));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn provenance_sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = sample();
        save_csv(&d, &path).unwrap();
        assert_eq!(load_csv(&path).unwrap().provenance, d.provenance);
    }
}
