//! On-disk formats.
//!
//! CSV files start with a `# config_digest=<hex> master_seed=<n>` line;
//! JSON files carry the same two values as fields. Floats are written in
//! shortest round-trip form so reading a file back is bitwise exact.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calib::CalibrationReport;
use crate::datagen::{fit_scalers, Dataset, Record, SamplingConfig, ScalerState, Split};
use crate::phumob::PhuMobParams;
use crate::pinn::{AeEpoch, HeadEpoch, SweepTable};
use crate::sbd_sim::{self, DeviceGeometry, IVCurve, ParamVector, N_CURRENTS, N_POINTS, N_TARGETS, TARGET_NAMES};
use crate::{Error, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Shortest decimal that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_digest: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn new(config_digest: &str, master_seed: u64) -> Self {
        Provenance {
            config_digest: config_digest.to_string(),
            master_seed,
        }
    }

    pub fn comment_line(&self) -> String {
        format!("# config_digest={} master_seed={}", self.config_digest, self.master_seed)
    }

    pub fn parse_comment(line: &str) -> Option<Self> {
        let rest = line.trim().strip_prefix('#')?.trim();
        let mut digest = None;
        let mut seed = None;
        for tok in rest.split_whitespace() {
            if let Some(d) = tok.strip_prefix("config_digest=") {
                digest = Some(d.to_string());
            } else if let Some(s) = tok.strip_prefix("master_seed=") {
                seed = s.parse().ok();
            }
        }
        Some(Provenance {
            config_digest: digest?,
            master_seed: seed?,
        })
    }

    /// Reads provenance from any artifact: JSON fields, or the first
    /// comment line of a text file (`<!-- ... -->` wrappers allowed).
    pub fn read_from(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let malformed = |message: &str| Error::Malformed {
            path: path.display().to_string(),
            message: message.to_string(),
        };
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
            let digest = v.get("config_digest").and_then(|d| d.as_str());
            let seed = v.get("master_seed").and_then(|s| s.as_u64());
            return match (digest, seed) {
                (Some(d), Some(s)) => Ok(Provenance::new(d, s)),
                _ => Err(malformed("no config_digest/master_seed fields")),
            };
        }
        let file = fs::File::open(path)?;
        for line in BufReader::new(file).lines().take(3) {
            let line = line?;
            let inner = line
                .trim()
                .trim_start_matches("<!--")
                .trim_end_matches("-->")
                .trim()
                .to_string();
            let inner = if inner.starts_with('#') { inner } else { format!("# {inner}") };
            if let Some(p) = Provenance::parse_comment(&inner) {
                return Ok(p);
            }
        }
        Err(malformed("no provenance line"))
    }
}

fn csv_writer(path: &Path, prov: &Provenance) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)?;
    writeln!(file, "{}", prov.comment_line())?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?)
}

fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Malformed {
        path: path.display().to_string(),
        message: format!("'{field}' is not a number"),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

// ---- single curves ---------------------------------------------------------

/// `voltage_V,current_A` with all 52 grid points.
pub fn write_curve_csv(path: &Path, curve: &IVCurve) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["voltage_V", "current_A"])?;
    w.write_record([fmt_f64(curve.voltages[0]), fmt_f64(0.0)])?;
    for (v, i) in curve.voltages[1..].iter().zip(&curve.currents) {
        w.write_record([fmt_f64(*v), fmt_f64(*i)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<IVCurve> {
    let mut r = csv_reader(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Malformed {
                path: path.display().to_string(),
                message: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        rows.push((parse_f64(path, &rec[0])?, parse_f64(path, &rec[1])?));
    }
    if rows.len() != N_POINTS {
        return Err(Error::DimensionMismatch {
            context: format!("rows in {}", path.display()),
            expected: N_POINTS,
            got: rows.len(),
        });
    }
    let grid = sbd_sim::bias_grid();
    for ((v, _), g) in rows.iter().zip(&grid) {
        if (v - g).abs() > 1e-9 {
            return Err(Error::Malformed {
                path: path.display().to_string(),
                message: format!("voltage {v} does not match grid point {g}"),
            });
        }
    }
    IVCurve::from_currents(rows[1..].iter().map(|r| r.1).collect())
}

/// Flat parameter file for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub temperature: f64,
    pub workfunction: f64,
    pub mu_max: f64,
    pub mu_min: f64,
    pub n_ref: f64,
    pub alpha: f64,
    pub theta: f64,
    #[serde(default)]
    pub geometry: Option<DeviceGeometry>,
}

impl ParamFile {
    pub fn params(&self) -> ParamVector {
        ParamVector {
            temperature: self.temperature,
            workfunction: self.workfunction,
            phumob: PhuMobParams {
                mu_max: self.mu_max,
                mu_min: self.mu_min,
                n_ref: self.n_ref,
                alpha: self.alpha,
                theta: self.theta,
            },
        }
    }
}

// ---- datasets --------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config_digest: String,
    pub master_seed: u64,
    pub sampling: SamplingConfig,
    pub geometry: DeviceGeometry,
    pub input_scaler: ScalerState,
    pub target_scaler: ScalerState,
    pub splits: Vec<Split>,
    /// SHA-256 of `curves.csv`.
    pub curves_sha256: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CURVES_FILE: &str = "curves.csv";

fn curves_header() -> Vec<String> {
    (0..N_CURRENTS)
        .map(|i| format!("i{:02}", i + 1))
        .chain(TARGET_NAMES.iter().map(|s| s.to_string()))
        .collect()
}

pub fn write_dataset(dir: &Path, dataset: &Dataset, prov: &Provenance) -> Result<DatasetManifest> {
    fs::create_dir_all(dir)?;
    let curves_path = dir.join(CURVES_FILE);
    {
        let mut w = csv_writer(&curves_path, prov)?;
        w.write_record(curves_header())?;
        for r in &dataset.records {
            let row: Vec<String> = r
                .curve
                .currents
                .iter()
                .copied()
                .chain(r.params.to_targets())
                .map(fmt_f64)
                .collect();
            w.write_record(row)?;
        }
        w.flush()?;
    }
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        config_digest: prov.config_digest.clone(),
        master_seed: prov.master_seed,
        sampling: dataset.sampling.clone(),
        geometry: dataset.geometry,
        input_scaler: dataset.input_scaler.clone(),
        target_scaler: dataset.target_scaler.clone(),
        splits: dataset.records.iter().map(|r| r.split).collect(),
        curves_sha256: sha256_file(&curves_path)?,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

pub fn read_dataset(dir: &Path) -> Result<(Dataset, DatasetManifest)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = read_json(&manifest_path)?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: manifest.format_version,
            expected: DATASET_FORMAT_VERSION,
        });
    }
    let curves_path = dir.join(CURVES_FILE);
    if !curves_path.exists() {
        return Err(Error::MissingArtifact(curves_path));
    }
    let found = sha256_file(&curves_path)?;
    if found != manifest.curves_sha256 {
        return Err(Error::DigestMismatch {
            path: curves_path.display().to_string(),
            found,
            expected: manifest.curves_sha256.clone(),
        });
    }
    let mut r = csv_reader(&curves_path)?;
    let mut records = Vec::with_capacity(manifest.splits.len());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != N_CURRENTS + N_TARGETS {
            return Err(Error::DimensionMismatch {
                context: format!("row {i} of {}", curves_path.display()),
                expected: N_CURRENTS + N_TARGETS,
                got: rec.len(),
            });
        }
        let values = rec
            .iter()
            .map(|f| parse_f64(&curves_path, f))
            .collect::<Result<Vec<_>>>()?;
        let mut targets = [0.0; N_TARGETS];
        targets.copy_from_slice(&values[N_CURRENTS..]);
        let split = *manifest.splits.get(i).ok_or_else(|| Error::Malformed {
            path: manifest_path.display().to_string(),
            message: format!("no split tag for row {i}"),
        })?;
        records.push(Record {
            curve: IVCurve::from_currents(values[..N_CURRENTS].to_vec())?,
            params: ParamVector::from_targets(&targets),
            split,
        });
    }
    if records.len() != manifest.splits.len() {
        return Err(Error::DimensionMismatch {
            context: "dataset rows vs split tags".into(),
            expected: manifest.splits.len(),
            got: records.len(),
        });
    }
    let dataset = Dataset {
        sampling: manifest.sampling.clone(),
        geometry: manifest.geometry,
        records,
        input_scaler: manifest.input_scaler.clone(),
        target_scaler: manifest.target_scaler.clone(),
    };
    dataset.validate()?;
    let (inp, tgt) = fit_scalers(&dataset.records)?;
    if inp != dataset.input_scaler || tgt != dataset.target_scaler {
        return Err(Error::Malformed {
            path: manifest_path.display().to_string(),
            message: "stored scalers do not match the training split".into(),
        });
    }
    Ok((dataset, manifest))
}

// ---- training artifacts ----------------------------------------------------

pub fn write_ae_history(path: &Path, history: &[AeEpoch], prov: &Provenance) -> Result<()> {
    let mut w = csv_writer(path, prov)?;
    w.write_record(["epoch", "train_mse", "val_mse"])?;
    for e in history {
        w.write_record([e.epoch.to_string(), fmt_f64(e.train), fmt_opt(e.validation)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_head_history(path: &Path, history: &[HeadEpoch], prov: &Provenance) -> Result<()> {
    let mut w = csv_writer(path, prov)?;
    w.write_record([
        "epoch",
        "lambda",
        "train_total",
        "train_mse",
        "train_phy",
        "val_total",
        "val_mse",
        "val_phy",
    ])?;
    for e in history {
        let v = e.validation;
        w.write_record([
            e.epoch.to_string(),
            fmt_f64(e.train.lambda),
            fmt_f64(e.train.total),
            fmt_f64(e.train.mse),
            fmt_f64(e.train.phy),
            fmt_opt(v.map(|b| b.total)),
            fmt_opt(v.map(|b| b.mse)),
            fmt_opt(v.map(|b| b.phy)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, table: &SweepTable, prov: &Provenance) -> Result<()> {
    let mut w = csv_writer(path, prov)?;
    w.write_record(["lambda", "val_total", "val_mse", "val_phy", "test_violations"])?;
    for r in &table.rows {
        w.write_record([
            fmt_f64(r.lambda),
            fmt_f64(r.val_total),
            fmt_f64(r.val_mse),
            fmt_f64(r.val_phy),
            r.test_violations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<[f64; 5]>> {
    let mut r = csv_reader(path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            let mut row = [0.0; 5];
            for (slot, f) in row.iter_mut().zip(rec.iter()) {
                *slot = parse_f64(path, f)?;
            }
            Ok(row)
        })
        .collect()
}

// ---- calibration artifacts -------------------------------------------------

/// Per-curve table: id, group, 7 predictions, R² (linear, log), violation.
pub fn write_report_csv(path: &Path, report: &CalibrationReport, group_labels: &[String], prov: &Provenance) -> Result<()> {
    let mut w = csv_writer(path, prov)?;
    let mut header = vec!["id".to_string(), "group".to_string()];
    header.extend(TARGET_NAMES.iter().map(|n| format!("pred_{n}")));
    header.extend(["r2_linear", "r2_log", "violation", "error"].map(String::from));
    w.write_record(&header)?;
    for c in &report.curves {
        let mut row = vec![
            c.id.to_string(),
            group_labels.get(c.group).cloned().unwrap_or_else(|| c.group.to_string()),
        ];
        row.extend(c.predicted.to_targets().map(fmt_f64));
        row.push(fmt_opt(c.r2_linear));
        row.push(fmt_opt(c.r2_log));
        row.push(c.violation.to_string());
        row.push(c.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Box-plot statistics: one row per (method, group, scale).
pub fn write_boxplot_csv(path: &Path, reports: &[CalibrationReport], prov: &Provenance) -> Result<()> {
    let mut w = csv_writer(path, prov)?;
    w.write_record(["method", "group", "scale", "min", "q1", "median", "q3", "max", "mean"])?;
    for rep in reports {
        for g in &rep.groups {
            for (scale, q, mean) in [("linear", g.linear, g.mean_linear), ("log", g.log, g.mean_log)] {
                let Some(q) = q else { continue };
                w.write_record([
                    rep.label.clone(),
                    g.label.clone(),
                    scale.to_string(),
                    fmt_f64(q.min),
                    fmt_f64(q.q1),
                    fmt_f64(q.median),
                    fmt_f64(q.q3),
                    fmt_f64(q.max),
                    fmt_opt(mean),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::generate_dataset;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 1.0 / 3.0, -2.5e-300, 1e-14, 6.02e23, 123.456, f64::MIN_POSITIVE, 5e-5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(1e-14), "1e-14");
        assert_eq!(fmt_f64(0.5), "0.5");
    }

    #[test]
    fn provenance_line_parses() {
        let p = Provenance::new("abc", 7);
        assert_eq!(Provenance::parse_comment(&p.comment_line()), Some(p));
        assert_eq!(Provenance::parse_comment("# nothing"), None);
    }

    #[test]
    fn curve_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let p = ParamVector::from_targets(&[300.0, 5.2, 150.0, 50.0, 17.5, 2.0, 2.0]);
        let curve = sbd_sim::simulate(&p, &DeviceGeometry::default()).unwrap();
        write_curve_csv(&path, &curve).unwrap();
        assert_eq!(read_curve_csv(&path).unwrap(), curve);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("voltage_V,current_A\n"));
        assert_eq!(text.lines().count(), N_POINTS + 1);
    }

    #[test]
    fn short_curve_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "voltage_V,current_A\n0,0\n").unwrap();
        assert!(matches!(read_curve_csv(&path), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dataset_round_trip_is_exact_and_tamper_evident() {
        let cfg = SamplingConfig {
            n_samples: 30,
            seed: 2,
            ..SamplingConfig::default()
        };
        let ds = generate_dataset(&cfg, &DeviceGeometry::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let prov = Provenance::new("d1", 2);
        write_dataset(dir.path(), &ds, &prov).unwrap();
        let (back, manifest) = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(manifest.config_digest, "d1");
        assert_eq!(Provenance::read_from(&dir.path().join(CURVES_FILE)).unwrap(), prov);

        let path = dir.path().join(CURVES_FILE);
        let text = fs::read_to_string(&path).unwrap().replacen("e-", "e-1", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::DigestMismatch { .. })));
    }

    #[test]
    fn missing_dataset_names_the_path() {
        let err = read_dataset(Path::new("/nonexistent/ds")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/ds/manifest.json"), "{err}");
    }
}
