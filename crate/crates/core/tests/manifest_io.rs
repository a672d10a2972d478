use mht::labels::*;
use mht::manifest::{
    parse_manifest, parse_manifest_bytes, parse_manifest_lenient, serialize_manifest, write_f32_file,
    QaItem, QaKind,
};
use mht::{EmbeddingRole, EmbeddingSet, SampleRecord};
use proptest::prelude::*;

fn label_strategy() -> impl Strategy<Value = AttributeLabel> {
    (0..3usize, 0..2usize, 0..6usize, 0..2usize, 0..2usize).prop_map(|(a, g, e, s, o)| AttributeLabel {
        age: AgeBucket::ALL[a],
        gender: Gender::ALL[g],
        ethnicity: Ethnicity::ALL[e],
        status: Status::ALL[s],
        origin: DataOrigin::ALL[o],
    })
}

fn rows_strategy(n: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..10.0, dim), n)
}

fn record_strategy(index: usize) -> impl Strategy<Value = SampleRecord> {
    (1..6usize)
        .prop_flat_map(move |dim| {
            (
                rows_strategy(1..=5, dim),
                rows_strategy(0..=5, dim),
                prop::collection::vec(label_strategy(), 5),
                prop::option::of(0.0f64..1.0),
                prop::collection::vec((any::<bool>(), 1u8..=10), 0..4),
            )
        })
        .prop_map(move |(refs, gens, labels, hps, qa)| {
            let n = refs.len();
            let dim = refs[0].len();
            let gens = if gens.is_empty() {
                EmbeddingSet::empty(EmbeddingRole::Generated, dim).unwrap()
            } else {
                EmbeddingSet::from_rows(EmbeddingRole::Generated, gens).unwrap()
            };
            SampleRecord::new(
                format!("s{index}"),
                "prompt",
                EmbeddingSet::from_rows(EmbeddingRole::Reference, refs).unwrap(),
                labels[..n].to_vec(),
                gens,
                hps,
                qa.into_iter()
                    .map(|(simple, s)| QaItem::new(if simple { QaKind::Simple } else { QaKind::Complex }, s).unwrap())
                    .collect(),
            )
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(a in record_strategy(0), b in record_strategy(1)) {
        let records = vec![a, b];
        let text = serialize_manifest(&records);
        let parsed = parse_manifest_bytes(text.as_bytes(), None).unwrap();
        prop_assert_eq!(&parsed, &records);
        prop_assert_eq!(serialize_manifest(&parsed), text);
    }

    #[test]
    fn parsing_arbitrary_bytes_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_manifest_bytes(&bytes, None);
    }

    #[test]
    fn parsing_mutated_documents_never_panics(cut in 0usize..400, byte in any::<u8>()) {
        let mut bytes = format!(
            r#"{{"version":1,"samples":[{{"sample_id":"s","prompt_id":"p","n_refs":1,
            "ref_embeddings":{{"dim":2,"data":[1,0]}},"ref_attributes":[{LABEL}],
            "gen_embeddings":{{"dim":2,"data":[]}}}}]}}"#
        ).into_bytes();
        let at = cut % bytes.len();
        bytes[at] = byte;
        let _ = parse_manifest_bytes(&bytes, None);
    }
}

const LABEL: &str = r#"{"age":"aged","gender":"female","ethnicity":"hispanic","status":"celebrity","origin":"synthetic"}"#;

#[test]
fn external_embeddings_are_read_from_sidecar_files() {
    let dir = tempfile::tempdir().unwrap();
    write_f32_file(&dir.path().join("refs.f32"), &[1.0, 0.0, 0.0, 1.0]).unwrap();
    write_f32_file(&dir.path().join("gens.f32"), &[0.0, 1.0]).unwrap();
    let manifest = format!(
        r#"{{"version":1,"samples":[{{"sample_id":"s1","prompt_id":"p","n_refs":2,
        "ref_embeddings":{{"dim":2,"rows":2,"file":"refs.f32"}},
        "ref_attributes":[{LABEL},{LABEL}],
        "gen_embeddings":{{"dim":2,"rows":1,"file":"gens.f32"}}}}]}}"#
    );
    let path = dir.path().join("m.json");
    std::fs::write(&path, manifest).unwrap();
    let records = parse_manifest(&path).unwrap();
    assert_eq!(records[0].refs().flat(), vec![1.0, 0.0, 0.0, 1.0]);
    assert_eq!(records[0].gens().flat(), vec![0.0, 1.0]);

    // A sidecar of the wrong length is a validation error; a missing one is an I/O error.
    write_f32_file(&dir.path().join("gens.f32"), &[0.0, 1.0, 0.5]).unwrap();
    assert_eq!(parse_manifest(&path).unwrap_err().exit_code(), 1);
    std::fs::remove_file(dir.path().join("gens.f32")).unwrap();
    assert_eq!(parse_manifest(&path).unwrap_err().exit_code(), 2);
}

#[test]
fn lenient_parsing_keeps_valid_samples() {
    let good = format!(
        r#"{{"sample_id":"ok","prompt_id":"p","n_refs":1,"ref_embeddings":{{"dim":1,"data":[1]}},
        "ref_attributes":[{LABEL}],"gen_embeddings":{{"dim":1,"data":[]}}}}"#
    );
    let bad = good.replace(r#""ok""#, r#""bad""#).replace(r#""n_refs":1"#, r#""n_refs":2"#);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, format!(r#"{{"version":1,"samples":[{good},{bad}]}}"#)).unwrap();

    assert!(parse_manifest(&path).is_err());
    let parsed = parse_manifest_lenient(&path).unwrap();
    assert_eq!(parsed.records.len(), 1);
    assert_eq!(parsed.rejected.len(), 1);
    assert_eq!(parsed.rejected[0].0, "bad");
    assert!(parsed.rejected[0].1.to_string().contains("sample bad"));
}
