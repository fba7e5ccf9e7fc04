//! Pipeline commands behind the `sbdcal` binary.
//!
//! Output layout under the run directory:
//!
//! ```text
//! dataset/manifest.json, dataset/curves.csv
//! models/autoencoder.json, models/head_lambda_<l>.json
//! history/autoencoder.csv, history/head_lambda_<l>.csv
//! sweep/sweep.csv, sweep/sweep.json
//! calibrate/cohort.json, calibrate/cohort_truth.json
//! calibrate/report_<label>.json, calibrate/report_<label>.csv, calibrate/boxplot.csv
//! report/summary.txt, report/boxplot.svg
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sbdcal::calib::svg::{boxplot_svg, BoxSeries};
use sbdcal::calib::{self, quartile_stats, CalibrationReport, Cohort, CohortTruth};
use sbdcal::config::RunConfig;
use sbdcal::datagen::{generate_dataset, Dataset, Split};
use sbdcal::formats::{self, fmt_f64, Provenance};
use sbdcal::nn::checkpoint::Checkpoint;
use sbdcal::pinn::{self, Autoencoder, HeadModel, ModelScalers};
use sbdcal::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub const DEFAULT_OUT: &str = "sbdcal-out";

/// A resolved config plus its output directory and provenance.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub provenance: Provenance,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let out = config
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let provenance = Provenance::new(&config.digest(), config.master_seed);
        Ok(Context {
            config,
            out,
            provenance,
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    /// Fails unless the artifact at `path` was produced under this config.
    pub fn check(&self, path: &Path) -> Result<()> {
        let found = Provenance::read_from(path)?;
        if found != self.provenance {
            return Err(Error::DigestMismatch {
                path: path.display().to_string(),
                found: format!("{} (seed {})", found.config_digest, found.master_seed),
                expected: format!(
                    "{} (seed {})",
                    self.provenance.config_digest, self.provenance.master_seed
                ),
            });
        }
        Ok(())
    }
}

/// `0` → `AE-NN`, anything else → `AE-PINN`.
pub fn method_label(lambda: f64) -> &'static str {
    if lambda == 0.0 {
        "AE-NN"
    } else {
        "AE-PINN"
    }
}

pub fn head_file(lambda: f64) -> String {
    format!("models/head_lambda_{}.json", fmt_f64(lambda))
}

fn report_stem(label: &str, lambda: Option<f64>) -> String {
    match lambda {
        Some(l) => format!("calibrate/report_lambda_{}", fmt_f64(l)),
        None => format!("calibrate/report_{label}"),
    }
}

pub fn cmd_generate(ctx: &Context) -> Result<Vec<PathBuf>> {
    let ds = generate_dataset(&ctx.config.sampling, &ctx.config.geometry)?;
    let dir = ctx.path("dataset");
    formats::write_dataset(&dir, &ds, &ctx.provenance)?;
    Ok(vec![dir.join(formats::MANIFEST_FILE), dir.join(formats::CURVES_FILE)])
}

fn load_dataset(ctx: &Context) -> Result<Dataset> {
    let dir = ctx.path("dataset");
    ctx.check(&dir.join(formats::MANIFEST_FILE))?;
    let (ds, _) = formats::read_dataset(&dir)?;
    Ok(ds)
}

fn load_autoencoder(ctx: &Context) -> Result<(Autoencoder, Checkpoint)> {
    let path = ctx.path("models/autoencoder.json");
    ctx.check(&path)?;
    let ckpt = Checkpoint::load(&path)?;
    let ae = Autoencoder::from_parts(ckpt.network("encoder")?, ckpt.network("decoder")?)?;
    Ok((ae, ckpt))
}

fn load_head(ctx: &Context, lambda: f64) -> Result<(HeadModel, Checkpoint)> {
    let path = ctx.path(&head_file(lambda));
    ctx.check(&path)?;
    let ckpt = Checkpoint::load(&path)?;
    Ok((HeadModel::new(ckpt.network("head")?)?, ckpt))
}

fn scalers_from(ckpt: &Checkpoint, ctx: &Context) -> Result<ModelScalers> {
    let missing = |what: &str| Error::Checkpoint(format!("checkpoint has no {what} scaler"));
    Ok(ModelScalers {
        input: ckpt.input_scaler.clone().ok_or_else(|| missing("input"))?,
        target: ckpt.target_scaler.clone().ok_or_else(|| missing("target"))?,
        ranges: ctx.config.sampling.ranges,
    })
}

fn base_checkpoint(ctx: &Context, kind: &str, ds: &Dataset) -> Checkpoint {
    let mut c = Checkpoint::new(kind, &ctx.provenance.config_digest, ctx.provenance.master_seed);
    c.input_scaler = Some(ds.input_scaler.clone());
    c.target_scaler = Some(ds.target_scaler.clone());
    c
}

/// Trains the autoencoder, then one head per configured lambda.
pub fn cmd_train(ctx: &Context) -> Result<Vec<PathBuf>> {
    let ds = load_dataset(ctx)?;
    let (ae, history) = pinn::train_autoencoder(&ds, &ctx.config.autoencoder)?;
    let mut written = Vec::new();

    let mut ckpt = base_checkpoint(ctx, "autoencoder", &ds)
        .with_network("encoder", &ae.encoder)
        .with_network("decoder", &ae.decoder);
    ckpt.metadata.insert("epochs".into(), json!(history.len()));
    ckpt.metadata.insert("train".into(), serde_json::to_value(&ctx.config.autoencoder)?);
    let path = ctx.path("models/autoencoder.json");
    ckpt.save(&path)?;
    written.push(path);
    let path = ctx.path("history/autoencoder.csv");
    formats::write_ae_history(&path, &history, &ctx.provenance)?;
    written.push(path);

    for &lambda in &ctx.config.train.lambdas {
        let cfg = ctx.config.head_config(lambda);
        let (head, history) = pinn::train_head(&ae, &ds, &cfg)?;
        let mut ckpt = base_checkpoint(ctx, "head", &ds).with_network("head", &head.network);
        let meta = &mut ckpt.metadata;
        meta.insert("label".into(), json!(method_label(lambda)));
        meta.insert("lambda".into(), json!(lambda));
        meta.insert("epochs".into(), json!(history.len()));
        meta.insert("train".into(), serde_json::to_value(&cfg)?);
        for (key, split) in [("train_violations", Split::Train), ("test_violations", Split::Test)] {
            meta.insert(key.into(), json!(pinn::split_violations(&ae, &head, &ds, split)?));
        }
        let path = ctx.path(&head_file(lambda));
        ckpt.save(&path)?;
        written.push(path);
        let path = ctx.path(&format!("history/head_lambda_{}.csv", fmt_f64(lambda)));
        formats::write_head_history(&path, &history, &ctx.provenance)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArtifact {
    pub config_digest: String,
    pub master_seed: u64,
    pub table: pinn::SweepTable,
}

pub fn cmd_sweep(ctx: &Context) -> Result<Vec<PathBuf>> {
    let ds = load_dataset(ctx)?;
    let (ae, _) = load_autoencoder(ctx)?;
    let table = pinn::sweep_lambda(&ae, &ds, &ctx.config.sweep.grid, &ctx.config.sweep_config())?;
    let csv = ctx.path("sweep/sweep.csv");
    formats::write_sweep_csv(&csv, &table, &ctx.provenance)?;
    let js = ctx.path("sweep/sweep.json");
    formats::write_json(
        &js,
        &SweepArtifact {
            config_digest: ctx.provenance.config_digest.clone(),
            master_seed: ctx.provenance.master_seed,
            table,
        },
    )?;
    Ok(vec![csv, js])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortArtifact {
    pub config_digest: String,
    pub master_seed: u64,
    pub cohort: Cohort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthArtifact {
    pub config_digest: String,
    pub master_seed: u64,
    pub truth: CohortTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArtifact {
    pub config_digest: String,
    pub master_seed: u64,
    pub report: CalibrationReport,
}

/// Generates the cohort, calibrates with every trained head, verifies by
/// re-simulation and writes one report per method plus the truth baseline.
pub fn cmd_calibrate(ctx: &Context) -> Result<Vec<PathBuf>> {
    let (ae, ae_ckpt) = load_autoencoder(ctx)?;
    let scalers = scalers_from(&ae_ckpt, ctx)?;
    let (cohort, truth) = calib::generate_cohort(&ctx.config.cohort, &ctx.config.geometry)?;
    let prov = &ctx.provenance;
    let mut written = Vec::new();

    let path = ctx.path("calibrate/cohort.json");
    formats::write_json(
        &path,
        &CohortArtifact {
            config_digest: prov.config_digest.clone(),
            master_seed: prov.master_seed,
            cohort: cohort.clone(),
        },
    )?;
    written.push(path);
    let path = ctx.path("calibrate/cohort_truth.json");
    formats::write_json(
        &path,
        &TruthArtifact {
            config_digest: prov.config_digest.clone(),
            master_seed: prov.master_seed,
            truth: truth.clone(),
        },
    )?;
    written.push(path);

    let mut reports = Vec::new();
    for &lambda in &ctx.config.train.lambdas {
        let (head, _) = load_head(ctx, lambda)?;
        let pre = calib::calibrate(&ae, &head, &scalers, &cohort, method_label(lambda), Some(lambda))?;
        reports.push(calib::verify(&pre, &cohort, &ctx.config.geometry)?);
    }
    reports.push(calib::verify(
        &calib::reference_report(&cohort, &truth)?,
        &cohort,
        &ctx.config.geometry,
    )?);

    for rep in &reports {
        let stem = report_stem(&rep.label, rep.lambda);
        let path = ctx.path(&format!("{stem}.json"));
        formats::write_json(
            &path,
            &ReportArtifact {
                config_digest: prov.config_digest.clone(),
                master_seed: prov.master_seed,
                report: rep.clone(),
            },
        )?;
        written.push(path);
        let path = ctx.path(&format!("{stem}.csv"));
        formats::write_report_csv(&path, rep, &cohort.group_labels, prov)?;
        written.push(path);
    }
    let path = ctx.path("calibrate/boxplot.csv");
    formats::write_boxplot_csv(&path, &reports, prov)?;
    written.push(path);
    Ok(written)
}

fn load_report(ctx: &Context, label: &str, lambda: Option<f64>) -> Result<CalibrationReport> {
    let path = ctx.path(&format!("{}.json", report_stem(label, lambda)));
    ctx.check(&path)?;
    Ok(formats::read_json::<ReportArtifact>(&path)?.report)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Renders the violation, parameter and R² tables plus the box plot from
/// stored artifacts. Every artifact must carry this config's digest.
pub fn cmd_report(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut heads = Vec::new();
    for &lambda in &ctx.config.train.lambdas {
        let (_, ckpt) = load_head(ctx, lambda)?;
        heads.push((lambda, ckpt));
    }
    let mut reports = Vec::new();
    for &lambda in &ctx.config.train.lambdas {
        reports.push(load_report(ctx, method_label(lambda), Some(lambda))?);
    }
    reports.push(load_report(ctx, "reference", None)?);
    for rel in ["calibrate/cohort.json", "calibrate/boxplot.csv", "dataset/manifest.json", "models/autoencoder.json"] {
        ctx.check(&ctx.path(rel))?;
    }
    let sweep_path = ctx.path("sweep/sweep.json");
    let sweep = if sweep_path.exists() {
        ctx.check(&sweep_path)?;
        ctx.check(&ctx.path("sweep/sweep.csv"))?;
        Some(formats::read_json::<SweepArtifact>(&sweep_path)?.table)
    } else {
        None
    };

    let mut s = String::new();
    let _ = writeln!(s, "{}", ctx.provenance.comment_line());
    let _ = writeln!(s, "\nPredictions violating mu_max > mu_min");
    let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8} {:>8}", "method", "lambda", "train", "test", "cohort");
    for ((lambda, ckpt), rep) in heads.iter().zip(&reports) {
        let meta = |k: &str| ckpt.metadata.get(k).map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(
            s,
            "{:<10} {:>8} {:>8} {:>8} {:>8}",
            method_label(*lambda),
            fmt_f64(*lambda),
            meta("train_violations"),
            meta("test_violations"),
            rep.violations
        );
    }

    let _ = writeln!(s, "\nCalibrated mobility parameters");
    let _ = writeln!(
        s,
        "{:<10} {:>8} {:>10} {:>10} {:>10} {:>8} {:>8}",
        "method", "lambda", "mu_max", "mu_min", "log10 Nref", "alpha", "theta"
    );
    for rep in &reports {
        let p = &rep.phumob;
        let _ = writeln!(
            s,
            "{:<10} {:>8} {:>10.2} {:>10.2} {:>10.3} {:>8.3} {:>8.3}",
            rep.label,
            rep.lambda.map_or("-".to_string(), fmt_f64),
            p.mu_max,
            p.mu_min,
            p.n_ref.log10(),
            p.alpha,
            p.theta
        );
        if !rep.clipped.is_empty() {
            let _ = writeln!(s, "{:<10} clipped to sampling ranges: {}", "", rep.clipped.join(", "));
        }
    }

    let _ = writeln!(s, "\nRe-simulation R^2 (median / mean)");
    let _ = writeln!(
        s,
        "{:<10} {:<8} {:>8} {:>9} {:>9} {:>9} {:>9}",
        "method", "group", "T (K)", "lin med", "lin mean", "log med", "log mean"
    );
    for rep in &reports {
        for (g, stats) in rep.groups.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<10} {:<8} {:>8.1} {:>9} {:>9} {:>9} {:>9}",
                rep.label,
                stats.label,
                rep.group_temperatures.get(g).copied().unwrap_or(f64::NAN),
                opt(stats.linear.map(|q| q.median)),
                opt(stats.mean_linear),
                opt(stats.log.map(|q| q.median)),
                opt(stats.mean_log)
            );
        }
        let _ = writeln!(
            s,
            "{:<10} {:<8} {:>8} {:>9} {:>9} {:>9} {:>9}   failed curves: {}",
            rep.label,
            "all",
            "",
            opt(rep.median_linear),
            opt(mean(&rep.linear_scores())),
            opt(rep.median_log),
            opt(mean(&rep.log_scores())),
            rep.failed_curves
        );
    }

    if let Some(t) = &sweep {
        let _ = writeln!(s, "\nLambda sweep (validation)");
        let _ = writeln!(s, "{:>8} {:>12} {:>12} {:>12} {:>6}", "lambda", "total", "mse", "phy", "viol");
        for r in &t.rows {
            let _ = writeln!(
                s,
                "{:>8} {:>12.6} {:>12.6} {:>12.6} {:>6}",
                fmt_f64(r.lambda),
                r.val_total,
                r.val_mse,
                r.val_phy,
                r.test_violations
            );
        }
        let minima: Vec<String> = t.local_minima.iter().map(|l| fmt_f64(*l)).collect();
        let _ = writeln!(s, "local minima at lambda = {}", minima.join(", "));
    }

    let summary = ctx.path("report/summary.txt");
    fs::create_dir_all(ctx.path("report"))?;
    fs::write(&summary, s)?;

    let series = reports
        .iter()
        .filter_map(|rep| {
            quartile_stats(&rep.linear_scores()).ok().map(|stats| BoxSeries {
                label: match rep.lambda {
                    Some(l) => format!("{} ({})", rep.label, fmt_f64(l)),
                    None => rep.label.clone(),
                },
                stats,
            })
        })
        .collect::<Vec<_>>();
    let svg = format!(
        "<!-- {} -->\n{}",
        ctx.provenance.comment_line().trim_start_matches("# "),
        boxplot_svg("Linear R^2 of re-simulated cohort curves", &series)
    );
    let svg_path = ctx.path("report/boxplot.svg");
    fs::write(&svg_path, svg)?;
    Ok(vec![summary, svg_path])
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Simulates one parameter file on the config geometry (or the file's own).
pub fn cmd_simulate(ctx: &Context, params: &Path, output: &Path) -> Result<PathBuf> {
    let file: formats::ParamFile = formats::read_json(params)?;
    let geometry = file.geometry.unwrap_or(ctx.config.geometry);
    let curve = sbdcal::sbd_sim::simulate(&file.params(), &geometry)?;
    formats::write_curve_csv(output, &curve)?;
    Ok(output.to_path_buf())
}

/// One-line machine-readable error record.
pub fn error_line(err: &Error) -> String {
    json!({"error": {"kind": err.kind(), "message": err.to_string()}}).to_string()
}
