use std::time::Instant;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trates_core::corpus::ScoreRange;
use trates_core::eval::{qwk, QwkError};

/// Contingency-matrix kappa written from the textbook definition, on raw values.
fn brute_force(pred: &[f64], gold: &[f64], grid: &[f64]) -> Option<f64> {
    let k = grid.len();
    // Two constant raters: agreement convention, 1.0 if equal and -1.0 if not.
    if pred.iter().all(|&v| v == pred[0]) && gold.iter().all(|&v| v == gold[0]) {
        return Some(if pred[0] == gold[0] { 1.0 } else { -1.0 });
    }
    let pos = |v: f64| grid.iter().position(|&g| (g - v).abs() < 1e-9).unwrap();
    let mut confusion = vec![vec![0u64; k]; k];
    for (&p, &g) in pred.iter().zip(gold) {
        confusion[pos(p)][pos(g)] += 1;
    }
    let n = pred.len() as f64;
    let hist_p: Vec<f64> = (0..k).map(|i| confusion[i].iter().sum::<u64>() as f64).collect();
    let hist_g: Vec<f64> = (0..k).map(|j| (0..k).map(|i| confusion[i][j]).sum::<u64>() as f64).collect();
    let span = grid[k - 1] - grid[0];
    let (mut observed, mut expected) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = ((grid[i] - grid[j]) / span).powi(2);
            observed += w * confusion[i][j] as f64 / n;
            expected += w * hist_p[i] * hist_g[j] / (n * n);
        }
    }
    (expected > 0.0).then(|| 1.0 - observed / expected)
}

fn random_grid(rng: &mut ChaCha8Rng) -> ScoreRange {
    let step = [1.0, 0.5, 2.0][rng.random_range(0..3)];
    let min = rng.random_range(-2..3) as f64;
    let levels = rng.random_range(2..9);
    ScoreRange::new(min, min + step * (levels - 1) as f64, step)
}

#[test]
fn matches_brute_force_on_random_pairs() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 1000 {
        let range = random_grid(&mut rng);
        let grid = range.grid();
        let n = rng.random_range(2..60);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| grid[rng.random_range(0..grid.len())]).collect() };
        let pred = draw(&mut rng);
        let gold = draw(&mut rng);
        let Some(expected) = brute_force(&pred, &gold, &grid) else {
            continue;
        };
        let got = qwk(&pred, &gold, &range).unwrap();
        assert!((got - expected).abs() <= 1e-12, "{pred:?} {gold:?}: {got} vs {expected}");
        checked += 1;
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn fixed_cases() {
    let g = ScoreRange::new(0.0, 2.0, 1.0);
    assert_eq!(qwk(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], &g).unwrap(), 1.0);
    assert_eq!(qwk(&[0.0, 2.0], &[2.0, 0.0], &g).unwrap(), -1.0);
    assert_eq!(qwk(&[1.0, 1.0], &[1.0, 1.0], &g).unwrap(), 1.0);
    assert_eq!(qwk(&[1.0, 1.0], &[2.0, 2.0], &g).unwrap(), -1.0);
    assert_eq!(qwk(&[1.0], &[1.0, 2.0], &g), Err(QwkError::LengthMismatch { pred: 1, gold: 2 }));
    assert_eq!(qwk(&[], &[], &g), Err(QwkError::Empty));
    assert_eq!(qwk(&[0.5], &[1.0], &g), Err(QwkError::OffGrid { index: 0, score: 0.5 }));
}

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| (prop::collection::vec(0u8..5, n), prop::collection::vec(0u8..5, n))).prop_map(
        |(a, b)| (a.into_iter().map(f64::from).collect(), b.into_iter().map(f64::from).collect()),
    )
}

proptest! {
    #[test]
    fn symmetric((a, b) in pairs()) {
        let g = ScoreRange::new(0.0, 4.0, 1.0);
        let x = qwk(&a, &b, &g).unwrap();
        let y = qwk(&b, &a, &g).unwrap();
        prop_assert!((x - y).abs() < 1e-12);
        prop_assert!(x <= 1.0 + 1e-12 && x >= -1.0 - 1e-12);
    }

    #[test]
    fn shift_invariant((a, b) in pairs(), shift in -3i32..4) {
        let g = ScoreRange::new(0.0, 4.0, 1.0);
        let s = shift as f64;
        let g2 = ScoreRange::new(s, 4.0 + s, 1.0);
        let a2: Vec<f64> = a.iter().map(|v| v + s).collect();
        let b2: Vec<f64> = b.iter().map(|v| v + s).collect();
        prop_assert!((qwk(&a, &b, &g).unwrap() - qwk(&a2, &b2, &g2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement(a in prop::collection::vec(0u8..5, 1..40)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        prop_assert_eq!(qwk(&a, &a, &ScoreRange::new(0.0, 4.0, 1.0)).unwrap(), 1.0);
    }
}
