use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use mht::embedding::{Embedding, EmbeddingRole, EmbeddingSet};
use mht::error::{Error, Result};
use mht::harness::{
    aggregate_report, evaluate_all, select_pose_sources, EvalConfig, PoseCandidate,
};
use mht::layout::TokenLayout;
use mht::manifest::{parse_manifest, parse_manifest_lenient};
use mht::mask::{build_base_mask, build_isolated_mask, IsolationSpec};
use mht::region_map::RegionMap;
use mht::regions::{
    aggregate_attention_maps, assign_regions_by_attention, assign_regions_by_identity,
    nms_indices, AttentionProbe, SegmentFilter, SegmentedFace, DEFAULT_NMS_THETA,
};
use mht::sampler::{stratified_sample, Feasibility, PoolEntry, TargetDistribution};

#[derive(Parser)]
#[command(name = "mht", version, about = "Multi-person identity benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a manifest and write the aggregated report.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Drop samples that fail validation instead of aborting.
        #[arg(long)]
        skip_invalid: bool,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Assign a segment region to every reference image.
    AssignRegions {
        /// Attention probe (attention mode only).
        #[arg(long)]
        probe: Option<PathBuf>,
        #[arg(long)]
        segments: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_NMS_THETA)]
        theta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the base or isolated attention mask of a layout.
    BuildMask {
        #[arg(long)]
        layout: PathBuf,
        /// One region per image group; omit for the base mask.
        #[arg(long)]
        rois: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a stratified sample of ids from a labelled pool.
    Sample {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Redistribute shortfalls instead of failing.
        #[arg(long)]
        best_effort: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick a pose source image per prompt.
    SelectPoses {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Attention,
    Identity,
}

/// Identity-mode segments file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentitySegments {
    refs: Vec<Vec<f64>>,
    faces: Vec<FaceEntry>,
    shape: (usize, usize),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FaceEntry {
    mask: RegionMap,
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Roi {
    Indices(Vec<usize>),
    Map(RegionMap),
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output is serializable");
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval { manifest, out, csv, skip_invalid, jobs } => {
            let records = if skip_invalid {
                let parsed = parse_manifest_lenient(&manifest)?;
                for (id, e) in &parsed.rejected {
                    eprintln!("skipped {id}: {e}");
                }
                parsed.records
            } else {
                parse_manifest(&manifest)?
            };
            let batch = evaluate_all(records, &EvalConfig::default(), jobs, skip_invalid)?;
            for (id, e) in &batch.skipped {
                eprintln!("skipped {id}: {e}");
            }
            let report = aggregate_report(&batch.evaluated)?;
            std::fs::write(&out, report.to_json()).map_err(|e| Error::io(&out, e))?;
            if let Some(path) = csv {
                std::fs::write(&path, report.to_csv()?).map_err(|e| Error::io(&path, e))?;
            }
            print!("{}", report.render_text());
            Ok(())
        }
        Command::AssignRegions { probe, segments, mode, theta, out } => {
            let result = match mode {
                Mode::Attention => {
                    let probe = probe.ok_or_else(|| {
                        Error::Precondition("--probe is required in attention mode".into())
                    })?;
                    let maps = aggregate_attention_maps(&AttentionProbe::load(&probe)?)?;
                    let segs: Vec<RegionMap> = read_json(&segments)?;
                    assign_regions_by_attention(&maps, &segs, SegmentFilter::Nms(theta))?
                }
                Mode::Identity => {
                    let file: IdentitySegments = read_json(&segments)?;
                    let refs = EmbeddingSet::from_rows(EmbeddingRole::Reference, file.refs)?;
                    let masks: Vec<RegionMap> = file.faces.iter().map(|f| f.mask.clone()).collect();
                    let keep = nms_indices(&masks, theta)?;
                    let mut faces = Vec::with_capacity(keep.len());
                    for (i, face) in file.faces.into_iter().enumerate() {
                        if keep.contains(&i) {
                            let embedding = Embedding::new(face.embedding)
                                .map_err(|e| e.within(&format!("faces[{i}].embedding")))?;
                            faces.push(SegmentedFace { mask: face.mask, embedding });
                        }
                    }
                    assign_regions_by_identity(&refs, &faces, file.shape)?
                }
            };
            emit(&result, out.as_deref())
        }
        Command::BuildMask { layout, rois, out } => {
            let text = std::fs::read_to_string(&layout).map_err(|e| Error::io(&layout, e))?;
            let layout = TokenLayout::from_json(&text)?;
            let mask = match rois {
                None => build_base_mask(&layout)?,
                Some(path) => {
                    let rois: Vec<Roi> = read_json(&path)?;
                    let mut indices = Vec::with_capacity(rois.len());
                    for (k, roi) in rois.into_iter().enumerate() {
                        indices.push(match roi {
                            Roi::Indices(v) => v,
                            Roi::Map(m) => mht::mask::roi_from_region_map(&m, &layout)
                                .map_err(|e| e.within(&format!("rois[{k}]")))?,
                        });
                    }
                    build_isolated_mask(&IsolationSpec::new(layout, indices)?)?
                }
            };
            emit(&mask.export(), out.as_deref())
        }
        Command::Sample { pool, targets, n, seed, best_effort, out } => {
            let pool: Vec<PoolEntry> = read_json(&pool)?;
            let targets: TargetDistribution = read_json(&targets)?;
            let feasibility = if best_effort { Feasibility::BestEffort } else { Feasibility::Strict };
            let sample = stratified_sample(&pool, &targets, n, seed, feasibility)?;
            for w in &sample.warnings {
                eprintln!("warning: {w}");
            }
            emit(&sample, out.as_deref())
        }
        Command::SelectPoses { candidates, out } => {
            let per_prompt: BTreeMap<String, Vec<PoseCandidate>> = read_json(&candidates)?;
            emit(&select_pose_sources(&per_prompt), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
