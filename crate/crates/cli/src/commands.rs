use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use log::info;

use cwlmkl::cwlk::embed;
use cwlmkl::graph::write_dataset;
use cwlmkl::{
    evaluate, generate, kernel_matrix, load_dataset, predict_and_interpret, CwlConfig, GenConfig, MScoreReport,
    MklConfig, MklModel, SparseVector, SvmConfig, TrainConfig, Vocabulary,
};

use crate::manifest::{default_path, RunManifest};
use crate::{EvalArgs, GenArgs, KernelArgs, LocalizeArgs, PredictArgs, TrainArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Default,
    SignalNoise,
    Piggyback,
}

/// Training stopped at its iteration cap.
#[derive(Debug)]
pub struct NotConverged(pub String);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "training did not converge: {}", self.0)
    }
}

impl std::error::Error for NotConverged {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NotConverged>().is_some()
        || matches!(e.downcast_ref::<cwlmkl::Error>(), Some(cwlmkl::Error::Numerical(_)))
    {
        3
    } else {
        2
    }
}

/// Runs `body` and writes exactly one manifest, recording failures too.
fn with_manifest(
    command: &str,
    primary: &Path,
    explicit: Option<&Path>,
    body: impl FnOnce(&mut RunManifest) -> Result<()>,
) -> Result<()> {
    let mut m = RunManifest::new(command);
    let result = body(&mut m);
    if let Err(e) = &result {
        m.status = format!("error: {e:#}");
        m.outputs.clear();
    }
    let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| default_path(primary));
    let written = m.write(&path);
    result.and(written)
}

/// Writes through a sibling temporary file so failures leave no partial output.
fn write_atomic(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display())),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn load(path: &Path) -> Result<cwlmkl::Dataset> {
    load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn load_model(path: &Path) -> Result<MklModel> {
    MklModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn gen(a: &GenArgs, manifest: Option<&Path>) -> Result<()> {
    with_manifest("gen", &a.out, manifest, |m| {
        let mut cfg = match &a.config {
            Some(path) => {
                m.input("config", path);
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<GenConfig>(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => match a.preset {
                Preset::Default => GenConfig::default(),
                Preset::SignalNoise => GenConfig::signal_noise(GenConfig::default().seed),
                Preset::Piggyback => GenConfig::piggyback(GenConfig::default().seed, 150, 150),
            },
        };
        if let Some(seed) = a.seed {
            cfg.seed = seed;
        }
        m.config(&cfg);
        let ds = m.stage("generate", || generate(&cfg))?;
        m.stage("write", || {
            write_atomic(&a.out, |w| Ok(write_dataset(&ds, w)?))
        })?;
        m.output("dataset", &a.out);
        info!("wrote {} samples to {}", ds.len(), a.out.display());
        Ok(())
    })
}

fn sparse_line(id: &str, v: &SparseVector) -> String {
    let mut line = id.to_string();
    for (i, x) in v.iter() {
        line.push_str(&format!(" {i}:{x}"));
    }
    line
}

pub fn train(a: &TrainArgs, manifest: Option<&Path>) -> Result<()> {
    with_manifest("train", &a.model, manifest, |m| {
        let cfg = TrainConfig {
            cwl: CwlConfig::with_h(a.h),
            k_select: (!a.no_select).then_some(a.k_select),
            mkl: MklConfig {
                p: a.p,
                lambda: a.lambda,
                max_outer_iters: a.max_outer_iters,
                svm: SvmConfig {
                    c: a.c,
                    ..SvmConfig::default()
                },
                ..MklConfig::default()
            },
            uniform: a.uniform,
        };
        m.config(&cfg);
        m.input("dataset", &a.dataset);
        let ds = m.stage("load", || load(&a.dataset))?;
        let (model, report) = m.stage("train", || MklModel::train(&ds, &cfg))?;
        if a.require_convergence && !(report.converged && report.svm_converged) {
            return Err(NotConverged(format!(
                "outer converged: {}, inner converged: {}, outer iterations: {}",
                report.converged, report.svm_converged, report.outer_iterations
            ))
            .into());
        }
        let report_path = a.report.clone().unwrap_or_else(|| {
            let mut name = a.model.file_name().unwrap_or_default().to_os_string();
            name.push(".report.json");
            a.model.with_file_name(name)
        });
        m.stage("write", || -> Result<()> {
            write_atomic(&a.model, |w| Ok(model.to_writer(w)?))?;
            write_atomic(&report_path, |w| {
                serde_json::to_writer_pretty(&mut *w, &report)?;
                Ok(w.write_all(b"\n")?)
            })
        })?;
        m.output("model", &a.model);
        m.output("report", &report_path);

        if let Some(dir) = &a.export_dir {
            m.stage("export", || export(&model, &ds, dir))?;
            m.output("export_dir", dir);
        }

        println!("view\tbeta\tbeta_normalized\tvocabulary\tselected");
        for v in &report.views {
            println!(
                "{}\t{}\t{:.6}\t{}\t{}",
                v.view, v.beta, v.beta_normalized, v.vocabulary_size, v.selected_features
            );
        }
        info!(
            "outer iterations {}, converged {}, training accuracy {:.4}",
            report.outer_iterations, report.converged, report.training_accuracy
        );
        Ok(())
    })
}

fn export(model: &MklModel, ds: &cwlmkl::Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let features: Vec<_> = ds
        .samples()
        .iter()
        .map(|s| model.featurize(s))
        .collect::<cwlmkl::Result<_>>()?;
    for (v, fz) in model.featurizers.iter().enumerate() {
        let view = fz.view();
        write_atomic(&dir.join(format!("vocabulary-{view}.tsv")), |w| {
            Ok(fz.vocabulary.write_tsv(w)?)
        })?;
        write_atomic(&dir.join(format!("mask-{view}.tsv")), |w| {
            Ok(fz.mask.write_tsv(&fz.vocabulary, w)?)
        })?;
        write_atomic(&dir.join(format!("embeddings-{view}.txt")), |w| {
            for (s, f) in ds.samples().iter().zip(&features) {
                writeln!(w, "{}", sparse_line(&s.id, &f[v].vector))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

pub fn predict(a: &PredictArgs, manifest: Option<&Path>) -> Result<()> {
    with_manifest("predict", &a.out, manifest, |m| {
        m.input("model", &a.model);
        m.input("dataset", &a.dataset);
        let model = m.stage("load", || load_model(&a.model))?;
        let ds = m.stage("load", || load(&a.dataset))?;
        m.config(&model.config);
        let rows = m.stage("predict", || {
            ds.samples()
                .iter()
                .map(|s| Ok((s.id.clone(), model.predict(s)?)))
                .collect::<cwlmkl::Result<Vec<_>>>()
        })?;
        write_atomic(&a.out, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["id", "sign", "raw"])?;
            for (id, (sign, raw)) in &rows {
                csv.write_record([id.as_str(), &sign.to_string(), &raw.to_string()])?;
            }
            csv.flush()?;
            Ok(())
        })?;
        m.output("predictions", &a.out);
        Ok(())
    })
}

pub fn localize(a: &LocalizeArgs, manifest: Option<&Path>) -> Result<()> {
    let reports_path = a.out_dir.join("reports.jsonl");
    let csv_path = a.out_dir.join("localization.csv");
    let default_manifest = a.out_dir.join("localize.manifest.json");
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    with_manifest("localize", &reports_path, Some(manifest.unwrap_or(&default_manifest)), |m| {
        m.input("model", &a.model);
        m.input("dataset", &a.dataset);
        m.config(&serde_json::json!({ "top_k": a.top_k }));
        let model = m.stage("load", || load_model(&a.model))?;
        let ds = m.stage("load", || load(&a.dataset))?;
        let reports = m.stage("localize", || {
            ds.samples()
                .iter()
                .map(|s| predict_and_interpret(s, &model))
                .collect::<cwlmkl::Result<Vec<_>>>()
        })?;
        m.stage("write", || -> Result<()> {
            write_atomic(&reports_path, |w| {
                for r in &reports {
                    serde_json::to_writer(&mut *w, r)?;
                    w.write_all(b"\n")?;
                }
                Ok(())
            })?;
            write_atomic(&csv_path, |w| {
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(["id", "prediction", "raw", "rank", "class", "score"])?;
                for r in &reports {
                    for (rank, (class, score)) in r.top_classes(a.top_k).iter().enumerate() {
                        csv.write_record([
                            r.sample_id.as_str(),
                            &r.prediction.to_string(),
                            &r.raw_score.to_string(),
                            &(rank + 1).to_string(),
                            class,
                            &score.to_string(),
                        ])?;
                    }
                }
                csv.flush()?;
                Ok(())
            })
        })?;
        m.output("reports", &reports_path);
        m.output("corpus_csv", &csv_path);
        Ok(())
    })
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, i8>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let (Some(id), Some(sign)) = (record.get(0), record.get(1)) else {
            bail!("{}: row {} needs id and sign", path.display(), line + 2);
        };
        let sign: i8 = sign
            .parse()
            .ok()
            .filter(|s| *s == 1 || *s == -1)
            .with_context(|| format!("{}: row {}: sign {sign:?} is not -1 or 1", path.display(), line + 2))?;
        out.insert(id.to_string(), sign);
    }
    Ok(out)
}

fn read_reports(path: &Path) -> Result<Vec<MScoreReport>> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}: line {}", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn eval(a: &EvalArgs, manifest: Option<&Path>) -> Result<()> {
    with_manifest("eval", &a.out, manifest, |m| {
        m.input("predictions", &a.predictions);
        m.input("reports", &a.reports);
        m.input("dataset", &a.dataset);
        m.config(&serde_json::json!({ "k": a.k }));
        let predictions = read_predictions(&a.predictions)?;
        let reports = read_reports(&a.reports)?;
        let ds = load(&a.dataset)?;
        let metrics = m.stage("evaluate", || evaluate(&predictions, &reports, &ds, a.k))?;
        write_atomic(&a.out, |w| {
            serde_json::to_writer_pretty(&mut *w, &metrics)?;
            Ok(w.write_all(b"\n")?)
        })?;
        m.output("metrics", &a.out);
        println!("{}", cwlmkl::Metrics::CSV_HEADER);
        println!("{}", metrics.csv_row());
        Ok(())
    })
}

pub fn kernel(a: &KernelArgs, manifest: Option<&Path>) -> Result<()> {
    with_manifest("kernel", &a.out, manifest, |m| {
        let cfg = CwlConfig {
            normalize: !a.unnormalized,
            ..CwlConfig::with_h(a.h)
        };
        m.config(&serde_json::json!({ "view": a.view, "cwl": cfg }));
        m.input("dataset", &a.dataset);
        let ds = load(&a.dataset)?;
        let graphs = ds.view_graphs(&a.view)?;
        let gram = m.stage("kernel", || -> cwlmkl::Result<_> {
            let vocab = Vocabulary::build(&a.view, &graphs, &cfg);
            let vectors = graphs
                .iter()
                .map(|g| Ok(embed(g, &vocab, &cfg)?.vector))
                .collect::<cwlmkl::Result<Vec<_>>>()?;
            kernel_matrix(&vectors)
        })?;
        write_atomic(&a.out, |w| {
            let mut csv = csv::Writer::from_writer(w);
            let ids: Vec<&str> = ds.samples().iter().map(|s| s.id.as_str()).collect();
            csv.write_record(std::iter::once("id").chain(ids.iter().copied()))?;
            for (id, row) in ids.iter().zip(gram.rows()) {
                csv.write_record(std::iter::once(id.to_string()).chain(row.iter().map(f64::to_string)))?;
            }
            csv.flush()?;
            Ok(())
        })?;
        m.output("gram", &a.out);
        Ok(())
    })
}
