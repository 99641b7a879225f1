use fiberalign::decomp::{
    check_projector_laws, load_decomposition, planted_model, save_decomposition, DimensionPlan, PlantedConfig,
};
use fiberalign::embed::{build_map, embed_poly, load_corpus, save_corpus, EmbeddedCorpus, LabeledVector};
use fiberalign::fiber::{
    estimate_join_dimension, join, join_bruteforce, write_join_csv, JoinConfig, JoinEngine, DEFAULT_VARIANCE_THRESHOLD,
};
use fiberalign::ring_poly::{encode_patch, encode_tokens};

fn embedded_corpus() -> EmbeddedCorpus {
    let image_map = build_map(1, 8, 3, 256).unwrap();
    let text_map = build_map(2, 8, 3, 1000).unwrap();
    let patches: [&[i64]; 4] = [&[0, 10, 255], &[5, 5, 5, 5], &[255; 8], &[128]];
    let tokens: [&[i64]; 4] = [&[1, 2, 3], &[999], &[], &[17, 500, 42, 7]];
    let images = patches
        .iter()
        .enumerate()
        .map(|(k, p)| LabeledVector::new(format!("img{k}"), embed_poly(&image_map, &encode_patch(p).unwrap()).unwrap()))
        .collect();
    let texts = tokens
        .iter()
        .enumerate()
        .map(|(k, t)| {
            LabeledVector::new(format!("txt{k}"), embed_poly(&text_map, &encode_tokens(t, 1000).unwrap()).unwrap())
        })
        .collect();
    let pairs = (0..4).map(|k| (format!("img{k}"), format!("txt{k}"))).collect();
    EmbeddedCorpus::new(3, images, texts, pairs).unwrap()
}

#[test]
fn encode_embed_save_load_join() {
    let corpus = embedded_corpus();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.csv");
    save_corpus(&corpus, &path).unwrap();
    let loaded = load_corpus(&path).unwrap();
    assert_eq!(loaded, corpus);

    let cfg = JoinConfig::new(0.8).unwrap();
    let grid = join(loaded.images(), loaded.texts(), &cfg, JoinEngine::Grid).unwrap();
    let brute = join_bruteforce(loaded.images(), loaded.texts(), &cfg).unwrap();
    assert_eq!(grid.pairs, brute.pairs);

    let csv = dir.path().join("join.csv");
    write_join_csv(&grid, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("image_id,text_id,distance"));
    assert_eq!(text.lines().count(), grid.len() + 1);
}

#[test]
fn empty_token_sequence_embeds_to_origin() {
    let corpus = embedded_corpus();
    assert!(corpus.texts()[2].vector.iter().all(|&v| v == 0.0));
}

#[test]
fn join_dimension_of_planted_corpus_is_bounded_by_ambient() {
    let plan = DimensionPlan::new(2, 1, 1).unwrap();
    let model = planted_model(&PlantedConfig::new(plan, 100, 3)).unwrap();
    let c = &model.corpus;
    let j = join(c.images(), c.texts(), &JoinConfig::new(3.0).unwrap(), JoinEngine::Grid).unwrap();
    let k = estimate_join_dimension(&j, c.images(), c.texts(), DEFAULT_VARIANCE_THRESHOLD).unwrap();
    assert!((1..=4).contains(&k), "{k}");
}

#[test]
fn planted_truth_round_trips_and_obeys_projector_laws() {
    let plan = DimensionPlan::new(3, 2, 3).unwrap();
    let model = planted_model(&PlantedConfig::new(plan, 10, 4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("truth.csv");
    save_decomposition(&model.truth, &path).unwrap();
    let loaded = load_decomposition(&path).unwrap();
    assert_eq!(loaded, model.truth);
    assert!(check_projector_laws(&loaded, 200, 1).unwrap().passed);
}
