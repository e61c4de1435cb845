//! Synthetic feature-selection oracle with a known informative column.

use rand::Rng;

use super::Dataset;
use crate::base::SeededRng;

/// Column index of the informative feature.
pub const INFORMATIVE: usize = 3;
pub const N_FEATURES: usize = 10;
pub const LABEL_NOISE: f64 = 0.05;
pub const ORACLE_ROWS: usize = 300;
pub const ORACLE_SEED: u64 = 2024;

/// Ten features uniform on [0, 1). The label is `[x3 >= 0.5]`, flipped with
/// probability 0.05; the other nine columns carry no signal.
pub fn synthetic_oracle(n_rows: usize, seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let mut features = Vec::with_capacity(n_rows);
    let mut raw = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let x: Vec<f64> = (0..N_FEATURES).map(|_| rng.random::<f64>()).collect();
        let clean = x[INFORMATIVE] >= 0.5;
        let flip = rng.random::<f64>() < LABEL_NOISE;
        raw.push(usize::from(clean != flip));
        features.push(x);
    }
    // Class indices follow first appearance, as the CSV loader assigns them.
    let first = raw.first().copied().unwrap_or(0);
    let labels = raw.iter().map(|&y| usize::from(y != first)).collect();
    let class_names = [first, 1 - first].map(|y| y.to_string()).to_vec();
    Dataset {
        features,
        labels,
        feature_names: (0..N_FEATURES).map(|j| format!("x{j}")).collect(),
        label_column: "y".to_string(),
        class_names,
    }
}

/// The dataset shipped as `data/synthetic_oracle.csv`.
pub fn shipped_oracle() -> Dataset {
    synthetic_oracle(ORACLE_ROWS, ORACLE_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_noise_rate() {
        let d = shipped_oracle();
        assert_eq!((d.n_rows(), d.n_features(), d.n_classes()), (300, 10, 2));
        let disagree = d
            .features
            .iter()
            .zip(&d.labels)
            .filter(|(x, &y)| (x[INFORMATIVE] >= 0.5) != (d.class_names[y] == "1"))
            .count();
        // Binomial(300, 0.05): mean 15, sd about 3.8.
        assert!((4..=27).contains(&disagree), "{disagree}");
    }

    #[test]
    fn deterministic() {
        assert_eq!(synthetic_oracle(20, 9), synthetic_oracle(20, 9));
        assert_ne!(synthetic_oracle(20, 9), synthetic_oracle(20, 10));
    }
}
