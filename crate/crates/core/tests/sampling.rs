use sparsefit::montecarlo::{replicate_rng, sample_multinomial, BuiltinDistribution};
use sparsefit::SampleSize;

#[test]
fn multinomial_cell_means_within_three_standard_errors() {
    let f = BuiltinDistribution::F2.probabilities();
    let n = SampleSize::new(400).unwrap();
    let draws = 100_000u64;
    let mut sums = vec![0u64; f.len()];
    let mut rng = replicate_rng(2024, 0);
    for _ in 0..draws {
        let x = sample_multinomial(&f, n, &mut rng);
        assert_eq!(x.total(), 400);
        for (s, c) in sums.iter_mut().zip(x.counts()) {
            *s += c;
        }
    }
    for (i, &s) in sums.iter().enumerate() {
        let p = f[i];
        let mean = s as f64 / draws as f64;
        let se = (400.0 * p * (1.0 - p) / draws as f64).sqrt();
        assert!((mean - 400.0 * p).abs() <= 3.0 * se, "cell {i}: mean {mean} vs {}", 400.0 * p);
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let f = BuiltinDistribution::F1.probabilities();
    let n = SampleSize::new(400).unwrap();
    let a = sample_multinomial(&f, n, &mut replicate_rng(9, 3));
    let b = sample_multinomial(&f, n, &mut replicate_rng(9, 3));
    let c = sample_multinomial(&f, n, &mut replicate_rng(9, 4));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
