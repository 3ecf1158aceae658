//! Offline steps behind the `preprocess`, `fit-tsne` and `train-projector` subcommands.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use molscape_core::dataset::Dataset;
use molscape_core::dr::{compute_trust_scores, fit_tsne, train_projector, Representation};

use crate::artifacts::{
    preprocess_path, projector_path, read_json, tsne_path, write_json, PreprocessArtifact, ProjectorArtifact,
    TsneArtifact, ARTIFACT_VERSION, PREPROCESS_FORMAT, PROJECTOR_ARTIFACT_FORMAT, TSNE_FORMAT,
};
use crate::config::PipelineConfig;
use crate::error::PipelineError;

pub fn preprocess(dataset: &Dataset, dir: &Path) -> Result<PreprocessArtifact, PipelineError> {
    let artifact = PreprocessArtifact {
        format: PREPROCESS_FORMAT.into(),
        version: ARTIFACT_VERSION,
        dataset: dataset.name.clone(),
        compounds: dataset.compounds.len(),
        shapes: dataset.representations.iter().map(|(r, m)| (*r, [m.rows(), m.dim()])).collect(),
        class_counts: dataset.targets.iter().map(|t| (t.clone(), dataset.class_counts(t))).collect(),
        conformers: dataset.conformers.len(),
        descriptor_model: dataset.descriptor_model.clone(),
    };
    write_json(&preprocess_path(dir), &artifact)?;
    info!("preprocessed {} compounds of `{}`", artifact.compounds, artifact.dataset);
    Ok(artifact)
}

pub fn fit_tsne_all(
    dataset: &Dataset,
    dir: &Path,
    config: &PipelineConfig,
    seed: u64,
) -> Result<BTreeMap<Representation, TsneArtifact>, PipelineError> {
    let mut out = BTreeMap::new();
    for (&repr, matrix) in &dataset.representations {
        let tsne = config.tsne_config(matrix.rows(), seed);
        let fit = fit_tsne(matrix, &tsne)?;
        let trust = compute_trust_scores(matrix, &fit.projection, &config.trust)?;
        info!("t-SNE {repr}: KL {:.4} -> {:.4} after {} epochs", fit.initial_kl, fit.final_kl, fit.epochs);
        let artifact = TsneArtifact {
            format: TSNE_FORMAT.into(),
            version: ARTIFACT_VERSION,
            dataset: dataset.name.clone(),
            representation: repr,
            config: tsne,
            initial_kl: fit.initial_kl,
            final_kl: fit.final_kl,
            epochs: fit.epochs,
            projection: fit.projection,
            trust,
        };
        write_json(&tsne_path(dir, repr), &artifact)?;
        out.insert(repr, artifact);
    }
    Ok(out)
}

/// Trains one projector per fitted t-SNE layout. Embeddings are skipped
/// since new compounds cannot be embedded.
pub fn train_projectors(
    dataset: &Dataset,
    dir: &Path,
    config: &PipelineConfig,
    seed: u64,
) -> Result<BTreeMap<Representation, ProjectorArtifact>, PipelineError> {
    let mut out = BTreeMap::new();
    let mut missing = Vec::new();
    for (&repr, matrix) in &dataset.representations {
        if repr == Representation::Embeddings {
            continue;
        }
        let path = tsne_path(dir, repr);
        if !path.exists() {
            missing.push(format!("{} (run `molscape fit-tsne` first)", path.display()));
            continue;
        }
        let tsne: TsneArtifact = read_json(&path, TSNE_FORMAT)?;
        let projector_config = config.projector_config(repr, matrix.rows(), seed);
        let (model, report) = train_projector(matrix, &tsne.projection, &projector_config)?;
        let projection = model.project_matrix(matrix)?;
        let trust = compute_trust_scores(matrix, &projection, &config.trust)?;
        info!(
            "projector {repr}: {} epochs, Pearson x {:.3} y {:.3}",
            report.epochs, report.pearson[0], report.pearson[1]
        );
        let artifact = ProjectorArtifact {
            format: PROJECTOR_ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            dataset: dataset.name.clone(),
            representation: repr,
            config: projector_config,
            report,
            model,
            projection,
            trust,
        };
        write_json(&projector_path(dir, repr), &artifact)?;
        out.insert(repr, artifact);
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingArtifacts(missing));
    }
    Ok(out)
}
