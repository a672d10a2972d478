use mht::harness::{aggregate_report, evaluate_all, flag_bias, BiasTiers, EvalConfig};
use mht::labels::*;
use mht::manifest::{QaItem, QaKind};
use mht::{EmbeddingRole, EmbeddingSet, SampleRecord};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn records(seed: u64, n: usize) -> Vec<SampleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = |k: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..k).map(|_| (0..4).map(|_| rng.gen_range(0.05..1.0)).collect()).collect()
    };
    (0..n)
        .map(|i| {
            let refs = rng.gen_range(1..=5);
            let gens = rng.gen_range(0..=5);
            let labels = (0..refs)
                .map(|_| AttributeLabel {
                    age: AgeBucket::ALL[rng.gen_range(0..3)],
                    gender: Gender::ALL[rng.gen_range(0..2)],
                    ethnicity: Ethnicity::ALL[rng.gen_range(0..6)],
                    status: Status::ALL[rng.gen_range(0..2)],
                    origin: DataOrigin::ALL[rng.gen_range(0..2)],
                })
                .collect();
            let gen_set = if gens == 0 {
                EmbeddingSet::empty(EmbeddingRole::Generated, 4).unwrap()
            } else {
                EmbeddingSet::from_rows(EmbeddingRole::Generated, rows(gens, &mut rng)).unwrap()
            };
            SampleRecord::new(
                format!("s{i:02}"),
                "p",
                EmbeddingSet::from_rows(EmbeddingRole::Reference, rows(refs, &mut rng)).unwrap(),
                labels,
                gen_set,
                rng.gen_bool(0.7).then(|| rng.gen_range(0.0..1.0)),
                vec![QaItem::new(QaKind::Simple, rng.gen_range(1..=10)).unwrap()],
            )
            .unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn report_ignores_input_order_and_thread_count(seed in any::<u64>(), jobs in 1usize..6) {
        let recs = records(seed, 20);
        let reference = aggregate_report(&evaluate_all(recs.clone(), &EvalConfig::default(), 1, false).unwrap().evaluated).unwrap();

        let mut shuffled = recs;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let batch = evaluate_all(shuffled, &EvalConfig::default(), jobs, false).unwrap();
        let report = aggregate_report(&batch.evaluated).unwrap();
        prop_assert_eq!(report.to_json(), reference.to_json());
        prop_assert_eq!(report.to_csv().unwrap(), reference.to_csv().unwrap());

        let total: usize = report.by_person_count.values().map(|c| c.samples).sum();
        prop_assert_eq!(total, 20);
        let expected_count = report.samples.iter().filter(|s| s.scores.count == 1).count() as f64 / 20.0;
        prop_assert!((report.overall.count.mean - expected_count).abs() < 1e-12);
        for row in report.by_attribute.values() {
            let weighted: f64 = row.cells.values().map(|c| c.n as f64 * c.deviation).sum();
            prop_assert!(weighted.abs() < 1e-6);
        }
        prop_assert_eq!(flag_bias(&report, &BiasTiers::default()).unwrap().len(),
            report.by_attribute.values().map(|r| r.cells.len()).sum::<usize>());
    }
}
