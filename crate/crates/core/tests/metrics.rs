//! Uniqueness / novelty against direct double-loop oracles, plus screening,
//! shuffle audits and Pareto regression data.

mod common;

use std::collections::HashSet;

use common::*;
use xtalmet::composition::{composition_of, d_comp};
use xtalmet::matcher::{build_smat_chain, MatchTolerances};
use xtalmet::metrics::{
    continuous_novelty, continuous_uniqueness, discrete_novelty, discrete_uniqueness, mean_std, pareto_front, shuffle_audit,
    Denominator, Distance, DistanceKind, MetricReport, Score, ScreenPolicy, StageTimings,
};
use xtalmet::structures::{Crystal, SampleSet};
use xtalmet::symmetry::d_wyckoff;
use xtalmet::Error;

fn set(crystals: Vec<Crystal>) -> SampleSet {
    SampleSet::new("test", crystals)
}

fn random_set(seed: u64, n: usize, pool: &[&str]) -> Vec<Crystal> {
    let mut r = rng(seed);
    (0..n).map(|_| random_crystal(&mut r, 3, pool)).collect()
}

/// Direct transcription of the uniqueness sum for discrete distances.
fn uniqueness_oracle(xs: &[Crystal], d: &dyn Fn(&Crystal, &Crystal) -> u8) -> f64 {
    let mut count = 0;
    for i in 0..xs.len() {
        if (0..i).all(|j| d(&xs[i], &xs[j]) != 0) {
            count += 1;
        }
    }
    count as f64 / xs.len() as f64
}

#[test]
fn discrete_uniqueness_examples() {
    let d = Distance::new(DistanceKind::Comp);
    let x = wz_zno();
    assert_eq!(discrete_uniqueness(&set(vec![x.clone(), x.clone(), x]), &d, None).unwrap().value, 1.0 / 3.0);

    for seed in 0..20 {
        let xs = random_set(seed, 8, &["Na", "Cl", "K"]);
        let groups: HashSet<String> = xs.iter().map(|c| composition_of(c).reduced().to_string()).collect();
        let got = discrete_uniqueness(&set(xs.clone()), &d, None).unwrap().value;
        assert_eq!(got, groups.len() as f64 / 8.0);
        assert_eq!(got, uniqueness_oracle(&xs, &d_comp));
    }
}

#[test]
fn wyckoff_uniqueness_matches_oracle() {
    use xtalmet::symmetry::SymmetryRecord;
    let d = Distance::new(DistanceKind::Wyckoff);
    let mut xs = random_set(4, 10, &["Si", "O"]);
    for (i, c) in xs.iter_mut().enumerate() {
        let letters = if i % 3 == 0 { vec!["a", "b"] } else { vec!["b", "a"] };
        c.symmetry = Some(SymmetryRecord::from_letters([186, 225][i % 2], &letters).unwrap());
    }
    let oracle = uniqueness_oracle(&xs, &|a, b| d_wyckoff(a, b).unwrap());
    assert_eq!(discrete_uniqueness(&set(xs), &d, None).unwrap().value, oracle);
}

#[test]
fn discrete_novelty_examples() {
    let d = Distance::new(DistanceKind::Comp);
    let train = random_set(1, 3, &["Na", "Cl"]);
    assert_eq!(discrete_novelty(&set(vec![train[0].clone()]), &set(train.clone()), &d, None).unwrap().value, 0.0);

    let novel = random_set(2, 4, &["Fe", "S"]);
    assert_eq!(discrete_novelty(&set(novel), &set(train.clone()), &d, None).unwrap().value, 1.0);

    for seed in 0..20 {
        let samples = random_set(100 + seed, 5, &["Na", "Cl", "Mg"]);
        let train = random_set(200 + seed, 3, &["Na", "Cl", "Mg"]);
        let expected = samples.iter().filter(|x| train.iter().all(|y| d_comp(x, y) != 0)).count() as f64 / 5.0;
        assert_eq!(discrete_novelty(&set(samples), &set(train), &d, None).unwrap().value, expected);
    }

    let err = discrete_novelty(&set(random_set(3, 2, &["Na"])), &set(vec![]), &d, None).unwrap_err();
    assert_eq!(err.to_string(), "empty train");
}

#[test]
fn continuous_uniqueness_examples() {
    let d = Distance::new(DistanceKind::amd());
    let x = wz_zno();
    assert_eq!(continuous_uniqueness(&set(vec![x.clone(), x.clone(), x]), &d, None).unwrap().value, 0.0);

    for seed in 0..10 {
        let xs = random_set(300 + seed, 4, &ELEMENT_POOL);
        let mut direct = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                direct += d.continuous(&xs[i], &xs[j]).unwrap();
            }
        }
        let got = continuous_uniqueness(&set(xs), &d, None).unwrap().value;
        assert!((got - direct / 6.0).abs() <= 1e-12, "{got} vs {}", direct / 6.0);
    }

    let xs: Vec<Crystal> = random_set(7, 4, &ELEMENT_POOL)
        .into_iter()
        .zip([0.0, 0.3, 0.05, 0.5])
        .map(|(c, e)| c.with_e_hull(e))
        .collect();
    let pair = d.continuous(&xs[0], &xs[2]).unwrap();
    let full = continuous_uniqueness(&set(xs.clone()), &d, Some(&ScreenPolicy::default())).unwrap();
    assert_eq!((full.n_total, full.n_kept, full.denominator), (4, 2, 4));
    assert!((full.value - pair / 6.0).abs() <= 1e-15);
    let filtered = ScreenPolicy { denominator: Denominator::Filtered, ..Default::default() };
    let f = continuous_uniqueness(&set(xs), &d, Some(&filtered)).unwrap();
    assert!((f.value - pair).abs() <= 1e-15);

    assert!(matches!(continuous_uniqueness(&set(random_set(8, 1, &["Na"])), &d, None), Err(Error::TooFewSamples(1))));
    assert!(matches!(
        continuous_uniqueness(&set(random_set(8, 3, &["Na"])), &Distance::new(DistanceKind::Comp), None),
        Err(Error::WrongDistanceKind(..))
    ));
    assert!(matches!(
        discrete_uniqueness(&set(random_set(8, 3, &["Na"])), &d, None),
        Err(Error::WrongDistanceKind(..))
    ));
}

#[test]
fn continuous_novelty_examples() {
    for kind in [DistanceKind::amd(), DistanceKind::Magpie] {
        let d = Distance::new(kind);
        let train = random_set(11, 6, &ELEMENT_POOL);
        let subset = vec![train[1].clone(), train[4].clone()];
        assert!(continuous_novelty(&set(subset), &set(train.clone()), &d, None).unwrap().value <= 1e-10);

        let one = random_set(12, 1, &ELEMENT_POOL);
        let three = random_set(13, 3, &ELEMENT_POOL);
        let m = three.iter().map(|y| d.continuous(&one[0], y).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(continuous_novelty(&set(one), &set(three), &d, None).unwrap().value, m);

        let samples = random_set(14, 5, &ELEMENT_POOL);
        let train = random_set(15, 3, &ELEMENT_POOL);
        let mut total = 0.0;
        for x in &samples {
            total += train.iter().map(|y| d.continuous(x, y).unwrap()).fold(f64::INFINITY, f64::min);
        }
        let got = continuous_novelty(&set(samples), &set(train), &d, None).unwrap().value;
        assert!((got - total / 5.0).abs() <= 1e-12 * total.max(1.0));
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let xs = set(random_set(21, 60, &ELEMENT_POOL));
    let train = set(random_set(22, 20, &ELEMENT_POOL));
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut out = Vec::new();
            for kind in [DistanceKind::amd(), DistanceKind::Magpie] {
                let d = Distance::new(kind);
                out.push(continuous_uniqueness(&xs, &d, None).unwrap().value.to_bits());
                out.push(continuous_novelty(&xs, &train, &d, None).unwrap().value.to_bits());
            }
            out
        })
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn missing_e_hull_handling() {
    let d = Distance::new(DistanceKind::Comp);
    let xs = random_set(30, 4, &["Na", "Cl"]);
    assert!(matches!(discrete_uniqueness(&set(xs.clone()), &d, Some(&ScreenPolicy::default())), Err(Error::NoEhull)));
    let mut partial = xs;
    partial[0].e_hull = Some(0.0);
    let s = discrete_uniqueness(&set(partial), &d, Some(&ScreenPolicy::default())).unwrap();
    assert_eq!((s.n_kept, s.value), (1, 0.25));
}

#[test]
fn shuffle_audits() {
    let d = Distance::new(DistanceKind::Comp);
    let xs = set(random_set(40, 200, &["Na", "Cl", "K", "Br"]));
    let a = shuffle_audit(&xs, &d, &[0, 1, 2, 3, 4], None).unwrap();
    assert_eq!(a.std, 0.0);
    assert!(a.values.iter().all(|v| v.to_bits() == a.values[0].to_bits()));
    assert!(matches!(shuffle_audit(&xs, &d, &[1], None), Err(Error::TooFewSeeds(1))));

    let tol = MatchTolerances::default();
    let (x, xp, xpp) = build_smat_chain(&wz_zno(), &tol).unwrap();
    let chain = set(vec![x, xp, xpp]);
    let smat = Distance::new(DistanceKind::Smat(tol));
    let audit = shuffle_audit(&chain, &smat, &(0..12).collect::<Vec<_>>(), None).unwrap();
    let seen: HashSet<u64> = audit.values.iter().map(|v| v.to_bits()).collect();
    let expected: HashSet<u64> = [1.0f64 / 3.0, 2.0 / 3.0].iter().map(|v| v.to_bits()).collect();
    assert_eq!(seen, expected);
    assert!(audit.std > 0.0);
}

fn report(model: &str, kind: DistanceKind, u: f64, n: f64) -> MetricReport {
    let s = |v| Score { value: v, n_total: 10_000, n_kept: 0, denominator: 10_000, timings: StageTimings::default() };
    let policy = Some(ScreenPolicy::default());
    MetricReport::from_uniqueness(model, kind, policy, &s(u)).merge(&MetricReport::from_novelty(model, kind, policy, &s(n), 27_136)).unwrap()
}

pub const MODELS: [&str; 6] = ["CDVAE", "DiffCSP", "DiffCSP++", "MatterGen", "Chemeleon-DNG", "ADiT"];

#[test]
fn pareto_on_screened_model_comparison() {
    // (distance, uniqueness per model, novelty per model, frontier)
    type Row = (DistanceKind, [f64; 6], [f64; 6], &'static [&'static str]);
    let rows: [Row; 5] = [
        (
            DistanceKind::smat(),
            [0.0346, 0.2885, 0.2723, 0.3517, 0.3747, 0.3164],
            [0.0319, 0.2190, 0.1890, 0.2845, 0.2621, 0.0722],
            &["MatterGen", "Chemeleon-DNG"],
        ),
        (
            DistanceKind::Comp,
            [0.0341, 0.2775, 0.2646, 0.3372, 0.3599, 0.3089],
            [0.0295, 0.1816, 0.1619, 0.2294, 0.2158, 0.0604],
            &["MatterGen", "Chemeleon-DNG"],
        ),
        (
            DistanceKind::Wyckoff,
            [0.0021, 0.0209, 0.0423, 0.0371, 0.0439, 0.0033],
            [0.0012, 0.0368, 0.0013, 0.0554, 0.0512, 0.0323],
            &["MatterGen", "Chemeleon-DNG"],
        ),
        (
            DistanceKind::Magpie,
            [0.0020, 0.1773, 0.1597, 0.2530, 0.2975, 0.2695],
            [0.0031, 0.0160, 0.0133, 0.0188, 0.0168, 0.0038],
            &["MatterGen", "Chemeleon-DNG"],
        ),
        (
            DistanceKind::amd(),
            [0.0016, 0.1376, 0.1175, 0.2010, 0.2268, 0.1832],
            [0.0075, 0.0222, 0.0168, 0.0396, 0.0258, 0.0431],
            &["MatterGen", "Chemeleon-DNG", "ADiT"],
        ),
    ];
    for (kind, u, n, expected) in rows {
        let reports: Vec<MetricReport> = (0..6).map(|i| report(MODELS[i], kind, u[i], n[i])).collect();
        assert_eq!(pareto_front(&reports).unwrap(), expected, "{kind}");
    }
    let single = vec![report("A", DistanceKind::Comp, 0.1, 0.1)];
    assert_eq!(pareto_front(&single).unwrap(), vec!["A"]);
    let tied = vec![report("A", DistanceKind::Comp, 0.1, 0.1), report("B", DistanceKind::Comp, 0.1, 0.1)];
    assert_eq!(pareto_front(&tied).unwrap(), vec!["A", "B"]);
    let mixed = vec![report("A", DistanceKind::Comp, 0.1, 0.1), report("B", DistanceKind::Magpie, 0.1, 0.1)];
    assert!(pareto_front(&mixed).is_err());
}

#[test]
fn shuffle_spread_statistics_match_reference_seed_table() {
    // per-seed smat uniqueness values of six models and their reference mean (std)
    let table: [([f64; 5], f64, f64); 6] = [
        ([0.9942, 0.9945, 0.9940, 0.9944, 0.9945], 0.99432, 0.00019),
        ([0.9770, 0.9771, 0.9771, 0.9771, 0.9771], 0.97708, 0.00004),
        ([0.9809, 0.9809, 0.9806, 0.9808, 0.9807], 0.98078, 0.00012),
        ([0.9839, 0.9838, 0.9839, 0.9838, 0.9839], 0.98386, 0.00005),
        ([0.9792, 0.9793, 0.9789, 0.9788, 0.9790], 0.97904, 0.00019),
        ([0.8839, 0.8840, 0.8837, 0.8839, 0.8840], 0.88390, 0.00011),
    ];
    for (values, mean, std) in table {
        let (m, s) = mean_std(&values);
        assert!((m - mean).abs() < 5e-6);
        assert!((s - std).abs() < 5e-6, "{s} vs {std}");
    }
}
