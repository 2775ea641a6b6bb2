use proptest::prelude::*;

use routekd::data::{split_indices, ExitProbabilities, OrdinalSchema, DEFAULT_TRAVEL_TIMES};
use routekd::eval::{accuracy, predicted_exit_distribution, Aggregation};
use routekd::gmm::sample;
use routekd::nn::{cross_entropy, softmax, HiddenStack, Mode};
use routekd::{Encoded, GmmModel, Matrix, Mlp, NUM_FEATURES};

fn logits() -> impl Strategy<Value = Matrix> {
    (1usize..6, 2usize..7).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-50.0f64..50.0, r * c).prop_map(move |v| Matrix::from_vec(r, c, v).unwrap())
    })
}

fn distribution() -> impl Strategy<Value = ExitProbabilities> {
    proptest::array::uniform4(0.0f64..1.0)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| ExitProbabilities::from_weights(w).unwrap())
}

fn features(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-3.0f64..3.0, n * NUM_FEATURES)
        .prop_map(move |v| Matrix::from_vec(n, NUM_FEATURES, v).unwrap())
}

fn logit_pair() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..6, 2usize..7).prop_flat_map(|(r, c)| {
        let m = move || proptest::collection::vec(-5.0f64..5.0, r * c).prop_map(move |v| Matrix::from_vec(r, c, v).unwrap());
        (m(), m())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn softmax_rows_are_distributions(z in logits(), t in 0.05f64..50.0) {
        let p = softmax(&z, t).unwrap();
        for row in p.iter_rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn temperature_divides_logits(z in logits(), t in 0.05f64..50.0) {
        let a = softmax(&z, t).unwrap();
        let b = softmax(&z.scale(1.0 / t), 1.0).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_ignores_row_shifts(z in logits(), shift in -100.0f64..100.0) {
        let a = softmax(&z, 1.0).unwrap();
        let b = softmax(&z.map(|v| v + shift), 1.0).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn higher_temperature_flattens(z in logits(), t in 1.0f64..20.0, extra in 0.1f64..20.0) {
        let max_of = |p: &Matrix| p.iter_rows().map(|r| r.iter().cloned().fold(0.0, f64::max)).collect::<Vec<_>>();
        let sharp = max_of(&softmax(&z, t).unwrap());
        let soft = max_of(&softmax(&z, t + extra).unwrap());
        for (s, f) in sharp.iter().zip(&soft) {
            prop_assert!(f <= &(s + 1e-12));
        }
    }

    #[test]
    fn cross_entropy_is_at_least_entropy((q, p) in logit_pair()) {
        let q = softmax(&q, 1.0).unwrap();
        let p = softmax(&p, 1.0).unwrap();
        let ce = cross_entropy(&p, &q).unwrap();
        let h = cross_entropy(&q, &q).unwrap();
        prop_assert!(ce >= h - 1e-12, "{ce} < {h}");
    }

    #[test]
    fn split_is_a_partition(n in 2usize..400, f in 0.01f64..0.99, seed in any::<u64>()) {
        let (train, test) = split_indices(n, f, seed).unwrap();
        prop_assert_eq!(train.len(), (n as f64 * f).floor() as usize);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn l1_is_a_metric(a in distribution(), b in distribution(), c in distribution()) {
        prop_assert!(a.l1_distance(&a) == 0.0);
        prop_assert!((a.l1_distance(&b) - b.l1_distance(&a)).abs() < 1e-15);
        prop_assert!(a.l1_distance(&c) <= a.l1_distance(&b) + b.l1_distance(&c) + 1e-12);
        prop_assert!(a.l1_distance(&b) <= 2.0 + 1e-12);
    }

    #[test]
    fn responsibilities_sum_to_one(
        k in 1usize..5,
        seed in any::<u64>(),
        pts in proptest::collection::vec(-20.0f64..20.0, 2..60),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = 2;
        let n = pts.len() / dim;
        prop_assume!(n > 0);
        let data = Matrix::from_vec(n, dim, pts[..n * dim].to_vec()).unwrap();
        let weights = (0..k).map(|_| rng.random_range(0.1..1.0)).collect::<Vec<f64>>();
        let total: f64 = weights.iter().sum();
        let model = GmmModel::new(
            weights.iter().map(|w| w / total).collect(),
            (0..k).map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect()).collect(),
            (0..k).map(|_| (0..dim).map(|_| rng.random_range(0.01..5.0)).collect()).collect(),
        )
        .unwrap();
        let r = model.responsibilities(&data).unwrap();
        for row in r.iter_rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn mixture_samples_fit_the_schema(seed in any::<u64>(), spread in 0.1f64..30.0) {
        let schema = OrdinalSchema::for_travel_times(&DEFAULT_TRAVEL_TIMES).unwrap();
        let d = schema.width();
        let model = GmmModel::new(
            vec![0.5, 0.5],
            vec![vec![0.0; d], vec![4.0; d]],
            vec![vec![spread; d], vec![spread * 0.5; d]],
        )
        .unwrap();
        let ds = sample(&model, 50, &schema, seed).unwrap();
        prop_assert_eq!(ds.len(), 50);
        prop_assert!(ds.validate().is_ok());
        for r in &ds.records {
            prop_assert!(schema.contains(&OrdinalSchema::to_point(r)));
        }
    }

    #[test]
    fn accuracy_ignores_logit_scale(x in features(30), seed in any::<u64>(), c in 0.01f64..100.0) {
        let arch = "5n".parse::<HiddenStack>().unwrap().with_head(4);
        let mut model = Mlp::new(NUM_FEATURES, &arch, seed).unwrap();
        model.set_mode(Mode::Eval);
        let labels: Vec<usize> = (0..30).map(|i| i % 4).collect();
        let data = Encoded::new(x, labels).unwrap();
        let before = accuracy(&model, &data).unwrap();
        // the head is the last dense layer: 5 x 4 weights and 4 biases
        let mut p = model.parameters();
        let head = p.len() - 24;
        for v in &mut p[head..] {
            *v *= c;
        }
        model.set_parameters(&p).unwrap();
        prop_assert_eq!(before, accuracy(&model, &data).unwrap());
    }

    #[test]
    fn argmax_counts_are_multiples_of_one_over_n(n in 1usize..40, seed in any::<u64>()) {
        let arch = "6n".parse::<HiddenStack>().unwrap().with_head(4);
        let mut model = Mlp::new(NUM_FEATURES, &arch, seed).unwrap();
        model.set_mode(Mode::Eval);
        let x = Matrix::from_vec(n, NUM_FEATURES, (0..n * NUM_FEATURES).map(|i| ((i * 7919 + seed as usize % 97) % 13) as f64 - 6.0).collect()).unwrap();
        let data = Encoded::new(x, vec![0; n]).unwrap();
        let p = predicted_exit_distribution(&model, &data, Aggregation::ArgmaxCount).unwrap();
        for v in p.as_array() {
            let k = v * n as f64;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
        let mean = predicted_exit_distribution(&model, &data, Aggregation::MeanProb).unwrap();
        prop_assert!((mean.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
