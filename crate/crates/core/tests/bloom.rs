use obfw::bloom::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const KEY: [u8; 16] = *b"0123456789abcdef";

#[test]
fn million_items_at_one_in_a_thousand() {
    let p = derive_params(1_000_000, 0.001).unwrap();
    assert_eq!(p.kappa, 10);
    assert!((14_300_000..14_500_000).contains(&p.beta), "β = {}", p.beta);
    assert!((p.beta as f64 / p.eta as f64 - 14.4).abs() < 0.1);
}

#[test]
fn degenerate_parameters() {
    let p = derive_params(1, 0.5).unwrap();
    assert_eq!((p.beta, p.kappa), (2, 1));
    assert!(derive_params(0, 0.1).is_err());
    assert!(derive_params(5, 0.0).is_err());
    assert!(derive_params(5, 1.0).is_err());
    assert!(BloomParams::new(4, 0, 1).is_err());
    assert!(BloomParams::new(4, 5, 1).is_err());
    assert!(BloomParams::new(1000, 65, 1).is_err());
}

#[test]
fn small_worked_filter() {
    let idx = TableIndexer { kappa: 3, table: vec![(b"5".to_vec(), vec![2, 4, 5]), (b"2".to_vec(), vec![5, 0, 4])] };
    let mut f = BloomFilter::with_indexer(BloomParams::new(8, 3, 1).unwrap(), idx);
    assert!(!f.query(b"5"));
    f.insert(b"5");
    assert_eq!(f.bits(), vec![false, false, true, false, true, true, false, false]);
    assert!(f.query(b"5"));
    assert!(!f.query(b"2"));
}

#[test]
fn insert_is_idempotent() {
    let mut f = BloomFilter::new(BloomParams::new(1024, 4, 10).unwrap(), KEY);
    f.insert(b"10.0.0.1");
    let once = f.bits();
    f.insert(b"10.0.0.1");
    assert_eq!(f.bits(), once);
}

#[test]
fn empty_filter_rejects_everything() {
    let f = BloomFilter::new(BloomParams::new(4096, 5, 10).unwrap(), KEY);
    for i in 0u32..1000 {
        assert!(!f.query(&i.to_le_bytes()));
    }
}

#[test]
fn hashing_is_deterministic_and_in_range() {
    let fam = HashFamily::new(KEY, 8);
    assert_eq!(fam.indices(b"x", 1000), fam.indices(b"x", 1000));
    assert_eq!(HashFamily::new(KEY, 8).indices(b"x", 1000), fam.indices(b"x", 1000));
    assert_ne!(HashFamily::new(*b"fedcba9876543210", 8).indices(b"x", 1 << 40), fam.indices(b"x", 1 << 40));
    assert!(fam.indices(b"abc", 17).iter().all(|&i| i < 17));
    assert_eq!(fam.indices(b"anything", 1), vec![0; 8]);
    let a = fam.hash(0, b"x");
    assert_ne!(a, fam.hash(1, b"x"));
}

#[test]
fn indices_are_uniform() {
    let fam = HashFamily::new(KEY, 4);
    let cells = 64u64;
    let items = 100_000u32;
    for t in 0..4 {
        let mut counts = vec![0f64; cells as usize];
        for i in 0..items {
            counts[(fam.hash(t, &i.to_be_bytes()) % cells) as usize] += 1.0;
        }
        let e = items as f64 / cells as f64;
        let stat: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new(cells as f64 - 1.0).unwrap().cdf(stat);
        assert!(p > 1e-4, "t={t} p={p}");
    }
}

#[test]
fn measured_false_positives_near_estimate() {
    let p = derive_params(1000, 0.01).unwrap();
    let mut f = BloomFilter::new(p, KEY);
    for i in 0u64..1000 {
        f.insert(&i.to_le_bytes());
    }
    let probes = 100_000u64;
    let fp = (1_000_000..1_000_000 + probes).filter(|i| f.query(&i.to_le_bytes())).count() as f64 / probes as f64;
    assert!(fp < 3.0 * p.target_fp && fp > p.target_fp / 3.0, "fp = {fp}, target {}", p.target_fp);
    let est = p.fp_estimate();
    assert!(fp < 3.0 * est && fp > est / 3.0);
}

#[test]
fn fill_ratio_follows_expected_zero_fraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (beta, kappa, eta) in [(10_000u64, 3u32, 2000u64), (50_000, 7, 5000), (20_000, 1, 20_000)] {
        let p = BloomParams::new(beta, kappa, eta).unwrap();
        let mut f = BloomFilter::new(p, rng.gen());
        for _ in 0..eta {
            f.insert(&rng.gen::<[u8; 8]>());
        }
        let want = 1.0 - p.zero_fraction();
        assert!((f.fill_ratio() - want).abs() / want < 0.05, "β={beta}: {} vs {want}", f.fill_ratio());
    }
}

#[test]
fn derived_parameters_fill_about_half() {
    let p = derive_params(20_000, 0.001).unwrap();
    let mut f = BloomFilter::new(p, KEY);
    for i in 0u32..20_000 {
        f.insert(&i.to_le_bytes());
    }
    assert!((f.fill_ratio() - 0.5).abs() < 0.02, "{}", f.fill_ratio());
}

#[test]
fn file_round_trip() {
    let mut f = BloomFilter::new(BloomParams::new(1001, 3, 10).unwrap(), KEY);
    for i in 0u8..10 {
        f.insert(&[i]);
    }
    let mut buf = Vec::new();
    f.write_to(&mut buf).unwrap();
    assert_eq!(&buf[..5], b"OBFW1");
    assert_eq!(u64::from_le_bytes(buf[5..13].try_into().unwrap()), 1001);
    assert_eq!(u16::from_le_bytes(buf[13..15].try_into().unwrap()), 3);
    assert_eq!(&buf[15..31], &KEY);
    assert_eq!(buf.len(), 31 + 126);
    let g = BloomFilter::read_from(&buf[..], 10).unwrap();
    assert_eq!(g.bits(), f.bits());
    assert!((0u8..10).all(|i| g.query(&[i])));

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(BloomFilter::read_from(&bad[..], 10), Err(BloomError::BadFormat(_))));
    assert!(matches!(BloomFilter::read_from(&buf[..buf.len() - 1], 10), Err(BloomError::BadFormat(_))));
}

proptest! {
    #[test]
    fn no_false_negatives(items in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..16), 1..200), kappa in 1u32..12, beta in 64u64..4096, key: [u8; 16]) {
        let mut f = BloomFilter::new(BloomParams::new(beta, kappa, items.len() as u64).unwrap(), key);
        for x in &items {
            f.insert(x);
        }
        for x in &items {
            prop_assert!(f.query(x));
        }
    }
}
