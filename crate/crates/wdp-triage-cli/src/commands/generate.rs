//! `generate`: write benchmark instances with label sidecars and a manifest.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use serde_json::json;
use wdp_triage::{gen_kstar, gen_mixed, gen_trap, MixConfig, Tag, TaggedInstance, TrapConfig};

use crate::commands::label_batch;
use crate::dataio::{instance_file_name, label_file_name, write_file};
use crate::error::{CliError, CliResult, Code};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Instance family: kstar, trap, or mixed.
    #[arg(long)]
    pub family: String,
    /// Output directory for instance files, sidecars, and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Base RNG seed; instance i of the single-trap families uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances to write for kstar and trap; 0 writes only the manifest.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Fish count for kstar and trap.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Whale premium for kstar; the whale bids 1 + epsilon.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Items in the trap block; defaults to 2 * k.
    #[arg(long)]
    pub m_trap: Option<usize>,
    /// Whale value for the trap family.
    #[arg(long, default_value_t = 1.5)]
    pub vw: f64,
    /// Fish value for the trap family.
    #[arg(long, default_value_t = 1.0)]
    pub vf: f64,
    /// Hard instances for the mixed family.
    #[arg(long, default_value_t = 50)]
    pub n_hard: usize,
    /// Easy instances for the mixed family.
    #[arg(long, default_value_t = 50)]
    pub n_easy: usize,
    /// Exact-solver budget per uncertified instance when labeling, in ms.
    #[arg(long, default_value_t = 10_000)]
    pub time_limit_ms: u64,
}

impl GenerateArgs {
    fn effective_m_trap(&self) -> usize {
        self.m_trap.unwrap_or(2 * self.k)
    }

    fn echo(&self) -> serde_json::Value {
        json!({
            "family": self.family,
            "seed": self.seed,
            "count": self.count,
            "k": self.k,
            "epsilon": self.epsilon,
            "m_trap": self.effective_m_trap(),
            "vw": self.vw,
            "vf": self.vf,
            "n_hard": self.n_hard,
            "n_easy": self.n_easy,
            "time_limit_ms": self.time_limit_ms,
        })
    }
}

pub fn run(args: &GenerateArgs) -> CliResult<()> {
    let started = Instant::now();
    let batch: Vec<TaggedInstance> = match args.family.as_str() {
        "kstar" | "trap" => single_trap_batch(args)?,
        "mixed" => {
            let config = MixConfig {
                n_hard: args.n_hard,
                n_easy: args.n_easy,
                rng_seed: args.seed,
                ..MixConfig::default()
            };
            gen_mixed(&config)?
        }
        other => {
            return Err(CliError::new(
                Code::Config,
                format!("unknown family '{other}' (expected kstar, trap, or mixed)"),
            ))
        }
    };
    let labels = label_batch(&batch, Duration::from_millis(args.time_limit_ms))?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut outputs = Vec::new();
    for (i, (tagged, labeled)) in batch.iter().zip(&labels).enumerate() {
        let instance_name = instance_file_name(i);
        write_file(&args.out.join(&instance_name), &tagged.instance.to_json())?;
        let label_name = label_file_name(i);
        let label_text = serde_json::to_string_pretty(&labeled.label)
            .map_err(|e| CliError::new(Code::Json, format!("{label_name}: {e}")))?;
        write_file(&args.out.join(&label_name), &(label_text + "\n"))?;
        outputs.push(instance_name);
        outputs.push(label_name);
    }

    let mut manifest = RunManifest::new("generate", args.echo());
    manifest.seeds = vec![args.seed];
    manifest.outputs = outputs;
    manifest.wall_time_ms = started.elapsed().as_millis() as u64;
    write_manifest(&args.out, &manifest)
}

fn single_trap_batch(args: &GenerateArgs) -> CliResult<Vec<TaggedInstance>> {
    (0..args.count)
        .map(|i| {
            let seed = args.seed + i as u64;
            let m_trap = args.effective_m_trap();
            let (instance, certificate) = if args.family == "kstar" {
                gen_kstar(&TrapConfig::kstar(args.k, args.epsilon, m_trap, seed))?
            } else {
                gen_trap(&TrapConfig {
                    k: args.k,
                    v_w: args.vw,
                    v_f: args.vf,
                    epsilon: 0.0,
                    m_trap,
                    rng_seed: seed,
                })?
            };
            Ok(TaggedInstance { instance, tag: Tag::Hard, certificate: Some(certificate) })
        })
        .collect()
}
