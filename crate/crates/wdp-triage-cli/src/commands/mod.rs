//! Subcommand implementations plus the labeling helpers they share.

pub mod bench;
pub mod eval;
pub mod features;
pub mod generate;
pub mod pipeline;
pub mod route;
pub mod solve;
pub mod train;

use std::time::Duration;

use rayon::prelude::*;
use wdp_triage::{
    exact, greedy_gap, welfare_gap, InstanceLabel, LabeledInstance, TaggedInstance,
};

use crate::dataio::CorpusEntry;
use crate::error::{CliError, CliResult, Code};

/// Gap label plus the optimal welfare it was scored against.
pub struct Labeled {
    pub label: InstanceLabel,
    pub optimal_welfare: f64,
}

/// Labels a batch: analytic certificates where the generator provides them,
/// otherwise an exact solve that must prove optimality. Runs in parallel;
/// output order always matches input order, so bytes downstream do not
/// depend on the worker count.
pub fn label_batch(batch: &[TaggedInstance], time_limit: Duration) -> CliResult<Vec<Labeled>> {
    batch.par_iter().map(|tagged| label_one(tagged, time_limit)).collect()
}

fn label_one(tagged: &TaggedInstance, time_limit: Duration) -> CliResult<Labeled> {
    let (gap, optimal_welfare) = match &tagged.certificate {
        Some(c) => (welfare_gap(c.optimal_welfare, c.greedy_welfare), c.optimal_welfare),
        None => {
            let reference = exact(&tagged.instance, time_limit).map_err(CliError::from)?;
            if !reference.proven_optimal {
                return Err(CliError::new(
                    Code::Solver,
                    format!(
                        "exact solver hit the time limit on {} before proving optimality",
                        tagged.instance.name
                    ),
                ));
            }
            let report = greedy_gap(&tagged.instance, &reference)?;
            (report.greedy_gap, reference.allocation.welfare)
        }
    };
    Ok(Labeled {
        label: InstanceLabel {
            greedy_gap: gap,
            tag: tagged.tag,
            certificate: tagged.certificate.clone(),
        },
        optimal_welfare,
    })
}

/// Turns a fully labeled directory into routing inputs. Every entry needs a
/// sidecar; optima come from the certificate when present and a proving
/// exact solve otherwise.
pub fn labeled_from_corpus(
    entries: &[CorpusEntry],
    time_limit: Duration,
) -> CliResult<(Vec<String>, Vec<LabeledInstance>)> {
    let tagged = tagged_from_corpus(entries)?;
    let labeled = label_batch(&tagged, time_limit)?;
    let stems = entries.iter().map(|e| e.stem.clone()).collect();
    let dataset = tagged
        .into_iter()
        .zip(labeled)
        .map(|(t, l)| LabeledInstance {
            instance: t.instance,
            tag: t.tag,
            optimal_welfare: l.optimal_welfare,
        })
        .collect();
    Ok((stems, dataset))
}

/// Reattaches tags and certificates from sidecars; errors on any entry
/// missing one.
pub fn tagged_from_corpus(entries: &[CorpusEntry]) -> CliResult<Vec<TaggedInstance>> {
    entries
        .iter()
        .map(|entry| {
            let label = entry.label.as_ref().ok_or_else(|| {
                CliError::new(
                    Code::Instance,
                    format!("{} has no label sidecar; routing needs tagged instances", entry.stem),
                )
            })?;
            Ok(TaggedInstance {
                instance: entry.instance.clone(),
                tag: label.tag,
                certificate: label.certificate.clone(),
            })
        })
        .collect()
}
