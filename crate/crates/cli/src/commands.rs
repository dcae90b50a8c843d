//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use gradconf_core::metrics;
use gradconf_core::molgraph::{extend_graph, Conformation, MolecularGraph};
use gradconf_core::sampler;
use gradconf_core::scorenet::checkpoint::{self, CheckpointError};
use gradconf_core::scorenet::ScoreNetParams;
use gradconf_core::toydata::{self, ToyFamily, ToySpec};
use gradconf_core::{dsm, EnsembleMetricsReport};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dataset::{self, DatasetRecord};
use crate::error::CliError;
use crate::report::{self, ReportFile};
use crate::xyz::{self, Frame};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn chain_seed(base: u64, chain: usize) -> u64 {
    splitmix64(base ^ (chain as u64).wrapping_mul(0xD6E8FEB86659FD93))
}

fn require_path(p: &Option<PathBuf>, field: &str, config: &Path) -> Result<PathBuf, CliError> {
    p.clone().ok_or_else(|| CliError::Config {
        path: config.to_path_buf(),
        message: format!("[paths] is missing the {field} entry"),
    })
}

pub fn run_train(config_path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let dataset_path = require_path(&cfg.paths.dataset, "dataset", config_path)?;
    let checkpoint_path = require_path(&cfg.paths.checkpoint, "checkpoint", config_path)?;
    let loss_log_path = require_path(&cfg.paths.loss_log, "loss_log", config_path)?;
    if !dataset_path.exists() {
        return Err(CliError::MissingInput { path: dataset_path });
    }

    let molecules = dataset::read_dataset(&dataset_path)?;
    let items: Vec<(MolecularGraph, Conformation)> = molecules
        .into_iter()
        .flat_map(|(g, confs)| confs.into_iter().map(move |c| (g.clone(), c)))
        .collect();

    let schedule = cfg.noise_schedule()?;
    let hyper = cfg.hyper();
    let train_cfg = cfg.train_config();
    let outcome =
        dsm::train(&items, &schedule, &hyper, &train_cfg).map_err(CliError::compute)?;

    checkpoint::write(&checkpoint_path, &outcome.params).map_err(|e| CliError::Write {
        path: checkpoint_path.clone(),
        source: std::io::Error::other(e.to_string()),
    })?;

    let mut log = String::new();
    for s in &outcome.trace {
        log.push_str(&format!(
            "epoch={} loss={:.12e} lr={:.12e}\n",
            s.epoch, s.mean_loss, s.learning_rate
        ));
    }
    std::fs::write(&loss_log_path, log).map_err(|source| CliError::Write {
        path: loss_log_path.clone(),
        source,
    })?;

    let final_loss = outcome.trace.last().map(|s| s.mean_loss).unwrap_or(f64::NAN);
    println!(
        "trained {} epochs on {} conformations; final mean loss {:.6e}",
        train_cfg.epochs,
        items.len(),
        final_loss
    );
    println!("checkpoint: {}", checkpoint_path.display());
    println!("loss log:   {}", loss_log_path.display());
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<ScoreNetParams, CliError> {
    if !path.exists() {
        return Err(CliError::MissingInput {
            path: path.to_path_buf(),
        });
    }
    checkpoint::read(path).map_err(|e| match e {
        CheckpointError::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: other.to_string(),
        },
    })
}

/// Reads the first molecule of a dataset-format graph file, extending it
/// with virtual bonds when the stored edge list has none.
fn load_graph(path: &Path) -> Result<MolecularGraph, CliError> {
    let molecules = dataset::read_dataset(path)?;
    let (graph, _) = molecules.into_iter().next().ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "graph file holds no records".to_string(),
    })?;
    if graph.is_extended() {
        Ok(graph)
    } else {
        extend_graph(&graph).map_err(CliError::compute)
    }
}

pub struct SampleArgs {
    pub checkpoint: PathBuf,
    pub graph: PathBuf,
    pub count: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

pub fn run_sample(args: &SampleArgs) -> Result<(), CliError> {
    let params = load_checkpoint(&args.checkpoint)?;
    let graph = load_graph(&args.graph)?;

    let max_z = graph.atoms().iter().copied().max().unwrap_or(0);
    if max_z as usize > params.hyper().max_atomic_number {
        return Err(CliError::IncompatibleCheckpoint {
            message: format!(
                "graph has nuclear charge {max_z}, checkpoint embeds only 1..={}",
                params.hyper().max_atomic_number
            ),
        });
    }

    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let schedule = cfg.noise_schedule()?;

    let chains: Result<Vec<Conformation>, _> = (0..args.count)
        .into_par_iter()
        .map(|chain| {
            let lcfg = cfg.langevin_config(chain_seed(args.seed, chain));
            sampler::sample(&graph, &params, &schedule, &lcfg)
        })
        .collect();
    let chains = chains.map_err(CliError::compute)?;

    let frames: Vec<Frame> = chains
        .into_iter()
        .enumerate()
        .map(|(k, conformation)| Frame {
            comment: xyz::frame_comment(0, args.seed, k),
            charges: graph.atoms().to_vec(),
            conformation,
        })
        .collect();
    xyz::write_frames(&args.out, &frames)?;
    println!("wrote {} conformations to {}", frames.len(), args.out.display());
    Ok(())
}

pub struct EvalArgs {
    pub generated: PathBuf,
    pub reference: PathBuf,
    pub graph: PathBuf,
    pub out: PathBuf,
    pub thresholds: Option<Vec<f64>>,
}

/// The default RMSD thresholds: the 0.5 A headline value inside a
/// 0.1..=1.5 A sweep.
pub fn default_thresholds() -> Vec<f64> {
    (1..=15).map(|k| k as f64 / 10.0).collect()
}

fn group_frames(
    frames: Vec<Frame>,
    num_molecules: usize,
    path: &Path,
) -> Result<Vec<Vec<Conformation>>, CliError> {
    let mut grouped: Vec<Vec<Conformation>> = vec![Vec::new(); num_molecules];
    for (k, frame) in frames.into_iter().enumerate() {
        let idx = match frame.molecule_index() {
            Some(idx) => idx,
            None if num_molecules == 1 => 0,
            None => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    message: format!(
                        "frame {k} lacks a mol=<index> tag; required when the graph file \
                         holds {num_molecules} molecules"
                    ),
                });
            }
        };
        if idx >= num_molecules {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("frame {k} names molecule {idx}, graph file has {num_molecules}"),
            });
        }
        grouped[idx].push(frame.conformation);
    }
    Ok(grouped)
}

pub fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    let molecules = dataset::read_dataset(&args.graph)?;
    if molecules.is_empty() {
        return Err(CliError::Parse {
            path: args.graph.clone(),
            line: 1,
            message: "graph file holds no records".to_string(),
        });
    }
    // Toy datasets repeat one molecule across records; `mol=<k>` indices in
    // the XYZ comments refer to distinct graphs in first-appearance order.
    let mut graphs: Vec<MolecularGraph> = Vec::new();
    for (g, _) in molecules {
        if !graphs.contains(&g) {
            graphs.push(g);
        }
    }

    let check_shapes = |frames: &[Frame], path: &Path| -> Result<(), CliError> {
        for (k, frame) in frames.iter().enumerate() {
            let idx = frame.molecule_index().unwrap_or(0);
            if let Some(g) = graphs.get(idx) {
                if frame.charges != g.atoms() {
                    return Err(CliError::Parse {
                        path: path.to_path_buf(),
                        line: 0,
                        message: format!(
                            "frame {k} atoms do not match molecule {idx} of the graph file"
                        ),
                    });
                }
            }
        }
        Ok(())
    };

    let generated = xyz::read_frames(&args.generated)?;
    check_shapes(&generated, &args.generated)?;
    let generated = group_frames(generated, graphs.len(), &args.generated)?;
    let reference = xyz::read_frames(&args.reference)?;
    check_shapes(&reference, &args.reference)?;
    let reference = group_frames(reference, graphs.len(), &args.reference)?;

    let thresholds = args
        .thresholds
        .clone()
        .unwrap_or_else(default_thresholds);

    let triples: Vec<(&MolecularGraph, &[Conformation], &[Conformation])> = graphs
        .iter()
        .zip(generated.iter().zip(&reference))
        .map(|(g, (gen, refs))| (g, gen.as_slice(), refs.as_slice()))
        .collect();
    let metrics_report: EnsembleMetricsReport =
        metrics::evaluate_ensembles(&triples, &thresholds).map_err(CliError::compute)?;
    let file = ReportFile::from(&metrics_report);
    report::write_report(&args.out, &file)?;

    let headline = thresholds
        .iter()
        .position(|&t| (t - 0.5).abs() < 1e-12)
        .unwrap_or(0);
    println!(
        "evaluated {} molecule(s): cov_mean[delta={}]={:.2}% mat_mean={:.4} mmd_all_mean={:.6}",
        file.num_molecules, thresholds[headline], file.cov_mean[headline], file.mat_mean,
        file.mmd_all_mean
    );
    println!("report: {}", args.out.display());
    Ok(())
}

pub struct MakeToyArgs {
    pub family: ToyFamily,
    pub atoms: Option<usize>,
    pub bond_length: f64,
    pub angle_deg: f64,
    pub jitter: f64,
    pub count: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn run_make_toy(args: &MakeToyArgs) -> Result<(), CliError> {
    let atom_count = args.atoms.unwrap_or(match args.family {
        ToyFamily::RigidTriangle => 3,
        ToyFamily::TwoModeChain => 4,
        ToyFamily::RigidChain => 4,
    });
    let spec = ToySpec {
        family: args.family,
        atom_count,
        bond_length: args.bond_length,
        angle_deg: args.angle_deg,
        jitter_std: args.jitter,
        count: args.count,
        seed: args.seed,
    };
    let items = toydata::generate(&spec).map_err(CliError::compute)?;
    let records: Vec<DatasetRecord> = items
        .iter()
        .map(|(g, c)| DatasetRecord::from_molecule(g, &[c]))
        .collect();
    dataset::write_dataset(&args.out, &records)?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    std::io::stdout().flush().ok();
    Ok(())
}
