use obfw::field::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn f(p: u128) -> Field {
    Field::new(p).unwrap()
}

fn vals(v: &[Fe]) -> Vec<u128> {
    v.iter().map(Fe::value).collect()
}

#[test]
fn mod_inverse_examples() {
    assert_eq!(mod_inverse(f(11).elem(2)).unwrap().value(), 6);
    assert_eq!(mod_inverse(f(251).one()).unwrap().value(), 1);
    assert_eq!(mod_inverse(f(101).elem(91)).unwrap().value(), 10);
    assert_eq!(mod_inverse(f(101).zero()), Err(FieldError::ZeroInverse));
}

#[test]
fn lagrange_coefficients_match_tables() {
    let p101 = f(101);
    let l = lagrange_zero_coefficients(&p101.elems(&[1, 2, 3, 4, 5])).unwrap();
    assert_eq!(vals(&l), vec![5, 91, 10, 96, 1]);
    let inv: Vec<u128> = l.iter().map(|x| x.inv().unwrap().value()).collect();
    assert_eq!(inv, vec![81, 10, 91, 20, 1]);

    let p251 = f(251);
    assert_eq!(vals(&lagrange_zero_coefficients(&p251.elems(&[1, 2, 3])).unwrap()), vec![3, 248, 1]);
    assert_eq!(vals(&lagrange_zero_coefficients(&p251.elems(&[4])).unwrap()), vec![1]);
    assert_eq!(
        lagrange_zero_coefficients(&p251.elems(&[1, 1])),
        Err(FieldError::DuplicateIndex(1))
    );
}

#[test]
fn interpolation_examples() {
    let p = f(101);
    let poly = interpolate(&p.points(&[42, 5, 100, 75, 23])).unwrap();
    assert_eq!(poly, Polynomial::from_values(p, &[0, 74, 51, 92, 27]));
    assert_eq!(poly.to_string(), "27x^4 + 92x^3 + 51x^2 + 74x");

    let poly = interpolate(&p.points(&[62, 10, 56, 99, 38])).unwrap();
    assert_eq!(poly.to_string(), "49x^2 + 3x + 10");

    let poly = interpolate(&[p.point(1, 7)]).unwrap();
    assert_eq!(poly, Polynomial::from_values(p, &[7]));
}

#[test]
fn detect_degree_examples() {
    let p = f(101);
    let clean = detect_degree(&p.points(&[62, 10, 56, 99, 38]), 2).unwrap();
    assert_eq!(clean, DegreeCheck::Clean(Polynomial::from_values(p, &[10, 3, 49])));

    let bad = detect_degree(&p.points(&[62, 10, 46, 99, 38]), 2).unwrap();
    assert_eq!(bad, DegreeCheck::DegreeViolation(Polynomial::from_values(p, &[11, 97, 78, 30, 48])));
    assert_eq!(bad.polynomial().to_string(), "48x^4 + 30x^3 + 78x^2 + 97x + 11");

    assert!(detect_degree(&p.points(&[0, 0, 0, 0, 0]), 2).unwrap().is_clean());
    assert_eq!(
        detect_degree(&p.points(&[1, 2]), 2),
        Err(FieldError::InsufficientPoints { needed: 5, got: 2 })
    );
}

#[test]
fn vandermonde_rows() {
    assert_eq!(vals(&vandermonde_reduction_row(f(251), 5).unwrap()), vec![5, 241, 10, 246, 1]);
    assert_eq!(vals(&vandermonde_reduction_row(f(101), 5).unwrap()), vec![5, 91, 10, 96, 1]);
    assert_eq!(vals(&vandermonde_reduction_row(f(101), 1).unwrap()), vec![1]);
    for n in 1..=15 {
        let p = f(251);
        let idx: Vec<Fe> = (1..=n).map(|i| p.elem(i)).collect();
        assert_eq!(
            vandermonde_reduction_row(p, n as usize).unwrap(),
            lagrange_zero_coefficients(&idx).unwrap(),
            "n = {n}"
        );
    }
}

#[test]
fn berlekamp_welch_examples() {
    let p = f(101);
    let honest = Polynomial::from_values(p, &[10, 3, 49]);
    match berlekamp_welch(&p.points(&[62, 10, 46, 99, 38]), 2, 1).unwrap() {
        Decoding::Recovered { poly, bad } => {
            assert_eq!(poly, honest);
            assert_eq!(bad, vec![3]);
        }
        Decoding::Failed => panic!("should decode"),
    }
    match berlekamp_welch(&p.points(&[62, 10, 56, 99, 38]), 2, 1).unwrap() {
        Decoding::Recovered { poly, bad } => {
            assert_eq!(poly, honest);
            assert!(bad.is_empty());
        }
        Decoding::Failed => panic!("should decode"),
    }
}

/// Every degree-≤2 polynomial over F_11 that agrees with at least `k` of the
/// points; used to decide what a decoder may legitimately return.
fn brute_force_close(points: &[EvalPoint], k: usize) -> Vec<Polynomial> {
    let p = points[0].x.field();
    let mut out = Vec::new();
    for c0 in 0..11 {
        for c1 in 0..11 {
            for c2 in 0..11 {
                let poly = Polynomial::from_values(p, &[c0, c1, c2]);
                if points.iter().filter(|pt| poly.eval(pt.x) == pt.y).count() >= k {
                    out.push(poly);
                }
            }
        }
    }
    out
}

#[test]
fn berlekamp_welch_fails_beyond_bound() {
    let p = f(11);
    let base = Polynomial::from_values(p, &[4, 7, 2]);
    let mut ys: Vec<u128> = (1..=5).map(|x| base.eval(p.elem(x)).value()).collect();
    ys[1] = (ys[1] + 3) % 11;
    ys[3] = (ys[3] + 5) % 11;
    let pts = p.points(&ys);
    // Oracle: no degree-2 polynomial is within distance 1 of this word.
    assert!(brute_force_close(&pts, 4).is_empty());
    assert_eq!(berlekamp_welch(&pts, 2, 1).unwrap(), Decoding::Failed);
}

#[test]
fn degree_frequency_of_random_sums() {
    let p = f(101);
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let trials = 1000;
    let full = (0..trials)
        .filter(|_| {
            let ys: Vec<u128> = (0..5).map(|_| p.random(&mut rng).value()).collect();
            interpolate(&p.points(&ys)).unwrap().degree() == 4
        })
        .count();
    assert!(full as f64 >= trials as f64 * (1.0 - 2.0 / 101.0), "{full}");
}

fn arb_poly(deg: usize) -> impl Strategy<Value = Vec<u128>> {
    proptest::collection::vec(0u128..251, deg + 1)
}

proptest! {
    #[test]
    fn inverse_round_trip(a in 1u128..251) {
        let p = f(251);
        prop_assert_eq!((p.elem(a) * p.elem(a).inv().unwrap()).value(), 1);
    }

    #[test]
    fn interpolation_round_trip(c in arb_poly(4), xs in proptest::sample::subsequence((1u128..40).collect::<Vec<_>>(), 5)) {
        let p = f(251);
        let poly = Polynomial::from_values(p, &c);
        let pts: Vec<EvalPoint> = xs.iter().map(|&x| EvalPoint::new(p.elem(x), poly.eval(p.elem(x)))).collect();
        prop_assert_eq!(interpolate(&pts).unwrap(), poly.clone());
        let l = lagrange_zero_coefficients(&pts.iter().map(|pt| pt.x).collect::<Vec<_>>()).unwrap();
        let s: Fe = l.iter().zip(&pts).map(|(&li, pt)| li * pt.y).sum();
        prop_assert_eq!(s, poly.constant());
    }

    #[test]
    fn bw_without_errors_matches_interpolation(c in arb_poly(2)) {
        let p = f(251);
        let poly = Polynomial::from_values(p, &c);
        let ys: Vec<u128> = (1..=5).map(|x| poly.eval(p.elem(x)).value()).collect();
        let pts = p.points(&ys);
        prop_assert_eq!(
            berlekamp_welch(&pts, 2, 0).unwrap(),
            Decoding::Recovered { poly: interpolate(&pts).unwrap(), bad: vec![] }
        );
    }
}
