#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use conexp::data::{CourseConceptSet, EmbeddingStore, KnowledgeBase, Triple};
use conexp::expansion::GenerationConfig;
use conexp::geometry::{ClusterConfig, ThresholdMode};
use serde::Deserialize;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[derive(Deserialize)]
pub struct GoldenFixture {
    pub tau: usize,
    pub max_waves: usize,
    pub course_concepts: BTreeMap<String, f64>,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub triples: Vec<[String; 3]>,
}

pub struct Loaded {
    pub concepts: CourseConceptSet,
    pub kb: KnowledgeBase,
    pub store: EmbeddingStore,
    pub config: GenerationConfig,
    pub raw: GoldenFixture,
}

pub fn golden_fixture() -> Loaded {
    let text = std::fs::read_to_string(fixtures_dir().join("golden/fixture.json")).unwrap();
    let raw: GoldenFixture = serde_json::from_str(&text).unwrap();
    let concepts = CourseConceptSet::new(raw.course_concepts.clone().into_iter().collect()).unwrap();
    let kb = KnowledgeBase::from_triples(raw.triples.iter().map(|[h, r, t]| Triple::new(h, r, t)));
    let store = EmbeddingStore::from_vectors(raw.vectors.clone()).unwrap();
    let config = GenerationConfig {
        cluster: ClusterConfig {
            tau: raw.tau,
            init_threshold: ThresholdMode::DerivedFromH0,
        },
        max_waves: raw.max_waves,
        ..Default::default()
    };
    Loaded {
        concepts,
        kb,
        store,
        config,
        raw,
    }
}

pub fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo")
}

pub struct Demo {
    pub data: conexp::data::Dataset,
    pub concepts: CourseConceptSet,
    pub labels: conexp::pipeline::LabelSet,
    pub scorer: conexp::features::DefaultPrerequisiteScorer,
}

pub fn demo() -> Demo {
    let root = demo_dir();
    let data = conexp::data::Dataset::load(&root.join("corpus.json"), &root.join("kb.tsv"), &root.join("embeddings.txt")).unwrap();
    let labels = conexp::pipeline::LabelSet::parse(&std::fs::read_to_string(root.join("labels.tsv")).unwrap(), 7).unwrap();
    let concepts = data.all_concepts();
    let scorer = conexp::features::DefaultPrerequisiteScorer::build(&data.courses(), &concepts, &data.store);
    Demo {
        data,
        concepts,
        labels,
        scorer,
    }
}

impl Demo {
    pub fn inputs(&self) -> conexp::pipeline::Inputs<'_> {
        conexp::pipeline::Inputs {
            concepts: &self.concepts,
            kb: &self.data.kb,
            store: &self.data.store,
            scorer: &self.scorer,
        }
    }
}
