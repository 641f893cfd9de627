//! Fixtures shared by the criterion benchmarks.

use warmcg_core::bench::{OfflineCache, PipelineOptions};
use warmcg_core::instances::{gen_synthetic, SyntheticFamilyConfig};
use warmcg_core::learner::{fit, FamilyLayout, KnnModel, LabelMatrix, LabelSource};
use warmcg_core::MilpInstance;

/// A small synthetic family with its offline sets.
pub struct Family {
    pub dataset: Vec<MilpInstance>,
    pub cache: OfflineCache,
}

pub fn synthetic_family(n: usize, m: usize, t: usize) -> Family {
    let dataset = gen_synthetic(&SyntheticFamilyConfig { n, m, t, seed: 1 }).expect("generation");
    let cache = OfflineCache::build(&dataset, &PipelineOptions::default()).expect("offline sets");
    Family { dataset, cache }
}

/// knn trained on every instance except `held_out`.
pub fn knn_without(family: &Family, held_out: usize, source: LabelSource, k: usize) -> KnnModel {
    let first = &family.dataset[0];
    let mut labels = LabelMatrix::new(first.name.clone(), FamilyLayout::of(first), source);
    for (u, (inst, rec)) in family.dataset.iter().zip(&family.cache.records).enumerate() {
        if u != held_out {
            let set = match source {
                LabelSource::Binding => &rec.binding,
                LabelSource::Invariant => &rec.invariant,
            };
            labels
                .push(&inst.name, &inst.theta, set)
                .expect("consistent family");
        }
    }
    fit(labels, k).expect("valid k")
}
