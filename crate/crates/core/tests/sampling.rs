use uqc::backend::infer_dataset;
use uqc::data::generate;
use uqc::model::LabelSet;
use uqc::trainer::train;
use uqc::{AdamConfig, Backend, Dataset, NoiseModel, Point2, Problem, TrainConfig, UqcParamsF64};

fn trained_circle() -> (UqcParamsF64, Dataset) {
    let train_set = generate(Problem::Circle, 1000, 100).unwrap();
    let test_set = generate(Problem::Circle, 400, 101).unwrap();
    let (params, _) = train::<f64>(&train_set, &test_set, 6, &AdamConfig::default(), &TrainConfig::default(), 0).unwrap();
    (params, generate(Problem::Circle, 200, 102).unwrap())
}

fn points(ds: &Dataset) -> Vec<Point2> {
    ds.points.iter().map(|p| p.point).collect()
}

#[test]
fn many_shots_agree_with_exact_labels() {
    let (params, ds) = trained_circle();
    let labels = LabelSet::new(2).unwrap();
    let exact = infer_dataset(&params, &points(&ds), &labels, &Backend::Exact, 100, "m").unwrap();
    let sampler = Backend::Sampler {
        seed: 3,
        noise: NoiseModel::noiseless(),
    };
    let sampled = infer_dataset(&params, &points(&ds), &labels, &sampler, 100_000, "m").unwrap();
    let agree = exact
        .predictions()
        .iter()
        .zip(sampled.predictions())
        .filter(|(a, b)| **a == *b)
        .count();
    assert!(agree as f64 / ds.len() as f64 >= 0.99, "{agree}/{}", ds.len());
    assert_eq!(sampled.total_measurements, 200 * 100_000);
}

#[test]
fn depolarizing_degrades_accuracy_monotonically() {
    let (params, ds) = trained_circle();
    let labels = LabelSet::new(2).unwrap();
    let truth: Vec<usize> = ds.points.iter().map(|p| p.label).collect();
    let mean_acc = |p: f64| {
        let noise = NoiseModel {
            depolarizing_p: p,
            ..NoiseModel::noiseless()
        };
        (0..10)
            .map(|seed| {
                infer_dataset(&params, &points(&ds), &labels, &Backend::Sampler { seed, noise }, 100, "m")
                    .unwrap()
                    .accuracy(&truth)
            })
            .sum::<f64>()
            / 10.0
    };
    let accs: Vec<f64> = [0.0, 0.1, 0.3, 1.0].into_iter().map(mean_acc).collect();
    for w in accs.windows(2) {
        assert!(w[1] <= w[0] + 0.005, "{accs:?}");
    }
    // Full depolarization leaves coin flips.
    assert!((accs[3] - 0.5).abs() < 0.1, "{accs:?}");
}
