use ndarray::Array2;
use proptest::prelude::*;
use tempfile::TempDir;
use wbary::instances::{load_idx_dataset, load_idx_images, load_idx_labels, read_csv_distributions, write_csv_distributions, write_idx_images, write_idx_labels, IdxImages};
use wbary::{DiscreteDistribution, Error};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn idx_round_trip_is_bit_exact(rows in 1usize..5, cols in 1usize..5, bytes in prop::collection::vec(any::<u8>(), 0..100)) {
        let dim = rows * cols;
        let count = bytes.len() / dim;
        let pixels: Vec<f64> = bytes[..count * dim].iter().map(|&b| b as f64 / 255.0).collect();
        let img = IdxImages { rows, cols, points: Array2::from_shape_vec((count, dim), pixels).unwrap() };
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("img");
        write_idx_images(&path, &img).unwrap();
        let raw = std::fs::read(&path).unwrap();
        prop_assert_eq!(&raw[16..], &bytes[..count * dim]);
        prop_assert_eq!(load_idx_images(&path).unwrap(), img);
        let labels: Vec<u8> = bytes.iter().take(count).copied().collect();
        let lpath = dir.path().join("lab");
        write_idx_labels(&lpath, &labels).unwrap();
        prop_assert_eq!(load_idx_labels(&lpath).unwrap(), labels);
    }

    #[test]
    fn csv_round_trip(d in 1usize..4, sizes in prop::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mus: Vec<DiscreteDistribution> = sizes
            .iter()
            .map(|&n| {
                let atoms = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1e6..1e6)).collect()).collect();
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(1..=7) as f64).collect();
                let s: f64 = w.iter().sum();
                DiscreteDistribution::new(atoms, w.into_iter().map(|x| x / s).collect()).unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_csv_distributions(&mut buf, &mus).unwrap();
        let back = read_csv_distributions(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), mus.len());
        for (a, b) in back.iter().zip(&mus) {
            prop_assert_eq!(a.atoms(), b.atoms());
            for (x, y) in a.weights().iter().zip(b.weights().iter()) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn malformed_idx_files() {
    let dir = TempDir::new().unwrap();
    let img = dir.path().join("img");
    let lab = dir.path().join("lab");

    std::fs::write(&img, [0, 0, 8, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 9]).unwrap();
    assert!(matches!(load_idx_images(&img), Err(Error::BadMagic { expected: 0x803, found: 0x801 })));

    std::fs::write(&img, [0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3]).unwrap();
    assert!(matches!(load_idx_images(&img), Err(Error::TruncatedFile { needed: 28, found: 19 })));

    std::fs::write(&img, [0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 1, 2]).unwrap();
    write_idx_labels(&lab, &[0, 1, 2]).unwrap();
    assert!(matches!(load_idx_dataset(&img, &lab), Err(Error::CountMismatch(2, 3))));
}
