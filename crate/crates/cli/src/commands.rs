//! The seven pipeline commands. Progress goes to stderr; machine-readable
//! output goes to files under the configured directories.

use crate::imgout;
use hyperwave_core::audio_io::{
    decode_wav_file, resample, snippet, snippet_id, snippet_starts, AudioBuffer, DatasetManifest,
};
use hyperwave_core::config::RunConfig;
use hyperwave_core::dsp;
use hyperwave_core::embedding::{
    extract_embedding, pca_fit, pca_project, synthesize_hyperimage, EmbeddingSet,
};
use hyperwave_core::error::{Error, Result};
use hyperwave_core::features::{
    build_hyperimage, chromagram, cyclic_tempogram, mel_spectrogram, mfcc,
};
use hyperwave_core::mat::Mat;
use hyperwave_core::neuralnet::{
    load_checkpoint, parse_architecture, save_checkpoint, Checkpoint, NetworkSpec,
};
use hyperwave_core::training::{
    aggregate_reports, evaluate_fold, history_csv, make_splits, report_csv, train_fold,
    DirectoryStore, FeatureStore, FoldReport, SplitPlan,
};
use rayon::prelude::*;
use serde_json::json;
use std::path::{Path, PathBuf};

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn load_song(path: &Path, cfg: &RunConfig) -> Result<AudioBuffer> {
    let buf = decode_wav_file(path)?;
    resample(&buf, cfg.sample_rate)
}

fn network_spec(cfg: &RunConfig, n_classes: usize) -> Result<NetworkSpec> {
    let (h, w) = cfg.input_extent();
    parse_architecture(&cfg.architecture, (h, w, 1), n_classes)
}

fn split_plan(cfg: &RunConfig, manifest: &DatasetManifest) -> Result<SplitPlan> {
    let plan = make_splits(
        manifest,
        cfg.snippets_per_song,
        cfg.split_mode,
        cfg.k_folds,
        cfg.seed,
    )?;
    plan.validate()?;
    Ok(plan)
}

/// Hard error when the feature store was extracted under different
/// feature-affecting settings.
fn check_store_hash(store: &DirectoryStore, cfg: &RunConfig) -> Result<()> {
    let ids = store.ids();
    let first = ids
        .first()
        .ok_or_else(|| Error::Data("feature store is empty; run `extract` first".into()))?;
    let stored = store.stored_hash(first)?;
    let expected = cfg.feature_hash();
    if stored != expected {
        return Err(Error::Config(format!(
            "feature store was extracted under config hash {stored}, current config hashes to {expected}"
        )));
    }
    Ok(())
}

fn check_checkpoint_hash(ckpt: &Checkpoint, cfg: &RunConfig) -> Result<()> {
    let expected = cfg.full_hash();
    if ckpt.config_hash != expected {
        return Err(Error::Config(format!(
            "checkpoint was trained under config hash {}, current config hashes to {expected}",
            ckpt.config_hash
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

pub fn cmd_inspect(cfg: &RunConfig, audio: &Path) -> Result<()> {
    let out_dir = cfg.paths.out.join("inspect");
    ensure_dir(&out_dir)?;
    let buf = load_song(audio, cfg)?;
    let stem = audio
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("audio")
        .to_string();
    let fc = &cfg.features;

    let spec = dsp::stft(&buf, fc.n_fft, fc.hop)?;
    let power = dsp::power(&spec);

    let mut panels: Vec<(&str, Mat, bool)> = vec![
        ("stft_linear", power.values.clone(), false),
        ("stft_log", power.values.clone(), true),
        ("chroma", chromagram(&buf, fc)?.values, false),
        ("tempogram", cyclic_tempogram(&buf, fc)?.values, false),
        ("mel", mel_spectrogram(&buf, fc)?.values, false),
        ("mfcc", mfcc(&buf, fc)?.values, false),
    ];
    match dsp::cqt_power(
        &buf,
        fc.cqt_fmin,
        fc.cqt_bins_per_octave,
        fc.cqt_bins,
        fc.hop,
    ) {
        Ok(cqt) => panels.push(("cqt", cqt.values, true)),
        Err(e) => eprintln!("inspect: skipping cqt panel: {e}"),
    }

    let wave = imgout::render_waveform(&buf.samples, 1024, 256);
    imgout::write_pgm(&out_dir.join(format!("{stem}_wave.pgm")), 1024, 256, &wave)?;
    for (name, values, log_scale) in panels {
        let (pixels, w, h) = imgout::render_matrix(&values, log_scale);
        imgout::write_pgm(&out_dir.join(format!("{stem}_{name}.pgm")), w, h, &pixels)?;
    }
    eprintln!(
        "inspect: wrote panels for {} to {}",
        audio.display(),
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

pub fn cmd_extract(cfg: &RunConfig) -> Result<()> {
    let manifest = DatasetManifest::load(&cfg.paths.manifest)?;
    if manifest.entries.is_empty() {
        return Err(Error::Manifest("manifest has no entries".into()));
    }
    ensure_dir(&cfg.paths.store)?;
    let feature_hash = cfg.feature_hash();
    let manifest_dir = cfg.paths.manifest.parent().map(Path::to_path_buf);

    let results: Vec<(String, std::result::Result<usize, String>)> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let audio_path = match (&manifest_dir, PathBuf::from(&entry.path)) {
                (Some(dir), p) if !p.is_absolute() => dir.join(p),
                (_, p) => p,
            };
            let run = || -> Result<usize> {
                let song = load_song(&audio_path, cfg)?;
                let starts =
                    snippet_starts(song.duration_s(), cfg.snippet_s, cfg.snippets_per_song);
                if starts.is_empty() {
                    return Err(Error::Data(format!(
                        "{:.2} s of audio is shorter than one {:.2} s snippet",
                        song.duration_s(),
                        cfg.snippet_s
                    )));
                }
                for (j, start) in starts.iter().enumerate() {
                    let snip = snippet(&song, *start, cfg.snippet_s)?;
                    let mut image = build_hyperimage(&snip, &cfg.features)?;
                    image.source_id = Some(entry.path.clone());
                    image.label = Some(entry.label.clone());
                    DirectoryStore::save(
                        &cfg.paths.store,
                        &snippet_id(&entry.song_id, j),
                        &image,
                        &feature_hash,
                    )?;
                }
                Ok(starts.len())
            };
            (entry.path.clone(), run().map_err(|e| e.to_string()))
        })
        .collect();

    let mut written = 0usize;
    let mut failures = Vec::new();
    for (path, result) in results {
        match result {
            Ok(n) => written += n,
            Err(message) => {
                eprintln!("extract: {path}: {message}");
                failures.push(json!({ "path": path, "error": message }));
            }
        }
    }
    let summary = json!({
        "snippets_written": written,
        "songs": manifest.entries.len(),
        "failures": failures,
        "feature_hash": feature_hash,
        "config_hash": cfg.full_hash(),
    });
    std::fs::write(
        cfg.paths.store.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable"),
    )?;
    eprintln!(
        "extract: {written} snippets from {} songs into {}",
        manifest.entries.len(),
        cfg.paths.store.display()
    );
    if !summary["failures"].as_array().unwrap().is_empty() {
        return Err(Error::Data(format!(
            "{} of {} songs failed to extract",
            summary["failures"].as_array().unwrap().len(),
            manifest.entries.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// train / evaluate
// ---------------------------------------------------------------------------

fn write_reports(
    cfg: &RunConfig,
    reports: &[&FoldReport],
    csv_name: &str,
    json_name: &str,
    failures: &[(usize, String)],
) -> Result<()> {
    let reports_dir = cfg.paths.out.join("reports");
    ensure_dir(&reports_dir)?;
    std::fs::write(
        reports_dir.join(csv_name),
        report_csv(&cfg.architecture, reports),
    )?;
    let owned: Vec<FoldReport> = reports.iter().map(|r| (*r).clone()).collect();
    let aggregate = aggregate_reports(&owned);
    let doc = json!({
        "architecture": cfg.architecture,
        "config_hash": cfg.full_hash(),
        "aggregate": aggregate,
        "failures": failures
            .iter()
            .map(|(fold, e)| json!({ "fold": fold, "error": e }))
            .collect::<Vec<_>>(),
    });
    std::fs::write(
        reports_dir.join(json_name),
        serde_json::to_string_pretty(&doc).expect("serializable"),
    )?;
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let manifest = DatasetManifest::load(&cfg.paths.manifest)?;
    let store = DirectoryStore::open(&cfg.paths.store)?;
    check_store_hash(&store, cfg)?;
    let plan = split_plan(cfg, &manifest)?;
    let spec = network_spec(cfg, manifest.classes.len())?;
    let config_hash = cfg.full_hash();

    let ckpt_dir = cfg.paths.out.join("checkpoints");
    let reports_dir = cfg.paths.out.join("reports");
    ensure_dir(&ckpt_dir)?;
    ensure_dir(&reports_dir)?;

    let mut reports = Vec::new();
    let mut failures: Vec<(usize, Error)> = Vec::new();
    for fold in 0..plan.folds.len() {
        eprintln!(
            "train: fold {fold}/{}: {} train, {} test snippets",
            plan.folds.len(),
            plan.folds[fold].train.len(),
            plan.folds[fold].test.len()
        );
        match train_fold(
            &plan,
            fold,
            &spec,
            &cfg.optimizer,
            &store,
            &manifest.classes,
            &config_hash,
        ) {
            Ok(outcome) => {
                save_checkpoint(
                    &outcome.checkpoint,
                    &ckpt_dir.join(format!("fold{fold}")),
                    Some(&outcome.momentum),
                )?;
                std::fs::write(
                    reports_dir.join(format!("fold{fold}.json")),
                    serde_json::to_string_pretty(&outcome.report).expect("serializable"),
                )?;
                std::fs::write(
                    reports_dir.join(format!("history_fold{fold}.csv")),
                    history_csv(&outcome.history),
                )?;
                eprintln!(
                    "train: fold {fold}: test loss {:.4}, precision@1 {:.2}%",
                    outcome.report.loss, outcome.report.precision_at[&1]
                );
                reports.push(outcome.report);
            }
            Err(e) => {
                eprintln!("train: fold {fold} failed: {e}");
                failures.push((fold, e));
            }
        }
    }

    let failure_strings: Vec<(usize, String)> =
        failures.iter().map(|(f, e)| (*f, e.to_string())).collect();
    let refs: Vec<&FoldReport> = reports.iter().collect();
    write_reports(cfg, &refs, "cv.csv", "cv.json", &failure_strings)?;
    eprintln!(
        "train: wrote {} fold reports to {}",
        reports.len(),
        reports_dir.display()
    );
    if let Some((_, e)) = failures.into_iter().next() {
        return Err(e);
    }
    Ok(())
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    let manifest = DatasetManifest::load(&cfg.paths.manifest)?;
    let store = DirectoryStore::open(&cfg.paths.store)?;
    check_store_hash(&store, cfg)?;
    let plan = split_plan(cfg, &manifest)?;
    let ckpt_dir = cfg.paths.out.join("checkpoints");
    let reports_dir = cfg.paths.out.join("reports");
    ensure_dir(&reports_dir)?;

    let mut reports = Vec::new();
    for fold in 0..plan.folds.len() {
        let ckpt = load_checkpoint(&ckpt_dir.join(format!("fold{fold}")))?;
        check_checkpoint_hash(&ckpt, cfg)?;
        let report = evaluate_fold(&plan, fold, &ckpt, &store, &manifest.classes)?;
        std::fs::write(
            reports_dir.join(format!("eval_fold{fold}.json")),
            serde_json::to_string_pretty(&report).expect("serializable"),
        )?;
        eprintln!(
            "evaluate: fold {fold}: loss {:.4}, precision@1 {:.2}%",
            report.loss, report.precision_at[&1]
        );
        reports.push(report);
    }
    let refs: Vec<&FoldReport> = reports.iter().collect();
    write_reports(cfg, &refs, "eval.csv", "eval.json", &[])?;
    Ok(())
}

// ---------------------------------------------------------------------------
// embed / pca / synth
// ---------------------------------------------------------------------------

fn checkpoint_stem(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| cfg.paths.checkpoint.clone())
        .unwrap_or_else(|| cfg.paths.out.join("checkpoints").join("fold0"))
}

pub fn cmd_embed(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<()> {
    let store = DirectoryStore::open(&cfg.paths.store)?;
    check_store_hash(&store, cfg)?;
    let ckpt = load_checkpoint(&checkpoint_stem(cfg, checkpoint))?;
    check_checkpoint_hash(&ckpt, cfg)?;

    let ids = store.ids();
    let rows: Vec<(String, String, Vec<f64>)> = ids
        .par_iter()
        .map(|id| {
            let image = store.fetch(id)?;
            let label = image.label.clone().unwrap_or_default();
            let vector = extract_embedding(&ckpt, &image)?;
            Ok((id.clone(), label, vector))
        })
        .collect::<Result<Vec<_>>>()?;

    let width = ckpt.embedding_width();
    let mut data = Vec::with_capacity(rows.len() * width);
    let mut out_ids = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (id, label, vector) in rows {
        data.extend_from_slice(&vector);
        out_ids.push(id);
        labels.push(label);
    }
    let set = EmbeddingSet {
        vectors: Mat::from_vec(out_ids.len(), width, data),
        ids: out_ids,
        labels,
        pca: None,
    };
    let emb_dir = cfg.paths.out.join("embeddings");
    ensure_dir(&emb_dir)?;
    set.save(&emb_dir.join("embeddings"), &cfg.full_hash())?;
    eprintln!(
        "embed: {} vectors of width {width} -> {}",
        set.len(),
        emb_dir.display()
    );
    Ok(())
}

pub fn cmd_pca(cfg: &RunConfig, embeddings: Option<&Path>) -> Result<()> {
    let emb_dir = cfg.paths.out.join("embeddings");
    let stem = embeddings
        .map(Path::to_path_buf)
        .unwrap_or_else(|| emb_dir.join("embeddings"));
    let mut set = EmbeddingSet::load(&stem)?;

    let n_components = 3.min(set.width()).min(set.len());
    let model = pca_fit(&set.vectors, n_components)?;
    let proj = pca_project(&model, &set.vectors)?;

    ensure_dir(&emb_dir)?;
    let mut csv = String::from("id,label,pc1,pc2,pc3\n");
    let mut classes: Vec<String> = set.labels.clone();
    classes.sort();
    classes.dedup();
    let mut points = Vec::with_capacity(set.len());
    for r in 0..set.len() {
        let coord = |k: usize| -> f64 {
            if k < proj.cols() {
                proj.get(r, k)
            } else {
                0.0
            }
        };
        csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            set.ids[r],
            set.labels[r],
            coord(0),
            coord(1),
            coord(2)
        ));
        let label_idx = classes
            .iter()
            .position(|c| c == &set.labels[r])
            .unwrap_or(0);
        points.push((coord(0), coord(1), label_idx));
    }
    std::fs::write(emb_dir.join("scatter.csv"), csv)?;
    let rgb = imgout::render_scatter(&points, 512, 512);
    imgout::write_ppm(&emb_dir.join("scatter.ppm"), 512, 512, &rgb)?;

    set.pca = Some(model);
    set.save(&stem, &cfg.full_hash())?;
    eprintln!(
        "pca: {} points, {:.1}% variance in 3 components -> {}",
        set.len(),
        set.pca
            .as_ref()
            .unwrap()
            .explained_variance_ratio
            .iter()
            .sum::<f64>()
            * 100.0,
        emb_dir.display()
    );
    Ok(())
}

pub fn cmd_synth(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    target_class: &str,
    steps: Option<usize>,
    step_size: Option<f64>,
) -> Result<()> {
    let manifest = DatasetManifest::load(&cfg.paths.manifest)?;
    let target = manifest.class_index(target_class).ok_or_else(|| {
        Error::Data(format!(
            "class `{target_class}` not in manifest classes {:?}",
            manifest.classes
        ))
    })?;
    let ckpt = load_checkpoint(&checkpoint_stem(cfg, checkpoint))?;
    check_checkpoint_hash(&ckpt, cfg)?;

    let result = synthesize_hyperimage(
        &ckpt,
        target,
        steps.unwrap_or(cfg.synth_steps),
        step_size.unwrap_or(cfg.synth_step_size),
        cfg.synth_l2_penalty,
        cfg.seed,
    )?;

    let synth_dir = cfg.paths.out.join("synth");
    ensure_dir(&synth_dir)?;
    let safe: String = target_class
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    hyperwave_core::tnsr::write_tnsr(
        &synth_dir.join(format!("{safe}.tnsr")),
        result.pixels.dims(),
        result.pixels.data(),
    )?;
    let mut csv = String::from("step,probability\n");
    for (i, p) in result.trajectory.iter().enumerate() {
        csv.push_str(&format!("{i},{p:.6}\n"));
    }
    std::fs::write(synth_dir.join(format!("{safe}_trajectory.csv")), csv)?;
    eprintln!(
        "synth: class `{target_class}` probability {:.4} -> {:.4} over {} steps",
        result.trajectory.first().unwrap(),
        result.trajectory.last().unwrap(),
        result.trajectory.len() - 1
    );
    Ok(())
}
