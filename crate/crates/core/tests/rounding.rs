use roundnet::geometry::norm_inf;
use roundnet::net::{
    cardinality_upper_bound, enumerate_net, nonneg_l1_lattice_count, random_round, rounding_moments, sample_roundings,
    shell_member, subgaussian_tail_check,
};
use roundnet::{sample_gaussian, sample_sphere_uniform, Error, LatticePoint, NetParams, NetParams32, RngStream};

fn brute_force_count(n: usize, rho: f64) -> usize {
    let h = rho / (n as f64).sqrt();
    let k = ((1.0 + rho) / h).ceil() as i64 + 1;
    let mut count = 0;
    let mut c = vec![-k; n];
    loop {
        let norm = c.iter().map(|&v| (v as f64 * h).powi(2)).sum::<f64>().sqrt();
        if norm > 1.0 - 2.0 * rho + 1e-12 && norm <= 1.0 + rho + 1e-12 {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return count;
            }
            c[i] += 1;
            if c[i] <= k {
                break;
            }
            c[i] = -k;
            i += 1;
        }
    }
}

#[test]
fn shell_membership_examples() {
    let p = NetParams::new(1, 0.25).unwrap();
    assert!(shell_member(&LatticePoint::new(vec![4], p).unwrap(), &p).unwrap());
    assert!(!shell_member(&LatticePoint::new(vec![2], p).unwrap(), &p).unwrap());
    let q = NetParams::new(2, 0.4).unwrap();
    assert!(shell_member(&LatticePoint::new(vec![3, 3], q).unwrap(), &q).unwrap());
    let other = LatticePoint::new(vec![4], p).unwrap();
    assert!(matches!(shell_member(&other, &NetParams::new(1, 0.3).unwrap()), Err(Error::ParamsMismatch)));
}

#[test]
fn enumeration_matches_brute_force() {
    let p = NetParams::new(1, 0.25).unwrap();
    let mut vals: Vec<f64> = enumerate_net(&p, 1000).unwrap().iter().map(|x| x.value()[0]).collect();
    vals.sort_by(f64::total_cmp);
    assert_eq!(vals, vec![-1.25, -1.0, -0.75, 0.75, 1.0, 1.25]);
    assert_eq!(enumerate_net(&NetParams::new(2, 0.4).unwrap(), 10_000).unwrap().len(), 68);
    for (n, rho) in [(2, 0.3), (3, 0.45), (3, 0.35), (4, 0.45)] {
        let p = NetParams::new(n, rho).unwrap();
        let pts = enumerate_net(&p, 10_000_000).unwrap();
        assert_eq!(pts.len(), brute_force_count(n, rho), "n={n} rho={rho}");
        assert!(pts.len() as f64 <= cardinality_upper_bound(&p));
        assert!(pts.iter().all(|x| shell_member(x, &p).unwrap()));
    }
}

#[test]
fn enumeration_budget_is_enforced() {
    let p = NetParams::new(8, 0.1).unwrap();
    assert!(matches!(enumerate_net(&p, 1000), Err(Error::TooLargeToEnumerate { .. })));
}

#[test]
fn cardinality_bound_values() {
    let e = std::f64::consts::E;
    let b1 = cardinality_upper_bound(&NetParams::new(1, 0.25).unwrap());
    assert!((b1 - 18.0 * e).abs() < 1e-12);
    let b2 = cardinality_upper_bound(&NetParams::new(2, 0.4).unwrap());
    assert!((b2 - (12.0 * e).powi(2)).abs() < 1e-9);
    assert_eq!(nonneg_l1_lattice_count(2, 2), Some(6));
    assert!(cardinality_upper_bound(&NetParams::new(2000, 1e-3).unwrap()).is_infinite());
}

#[test]
fn two_point_rounding_law() {
    let p = NetParams::new(1, 0.25).unwrap();
    let mut rng = RngStream::new(5).generator();
    let trials = 100_000;
    let mut ups = 0;
    for _ in 0..trials {
        let v = random_round(&[0.6], &p, &mut rng).unwrap().value()[0];
        assert!(v == 0.5 || v == 0.75);
        if v == 0.75 {
            ups += 1;
        }
    }
    let freq = ups as f64 / trials as f64;
    let se = (0.4f64 * 0.6 / trials as f64).sqrt();
    assert!((freq - 0.4).abs() < 4.0 * se);
    let (mean, var) = rounding_moments(&[0.6f64], &p, &[1.0]).unwrap();
    assert!((mean - 0.6).abs() < 1e-15);
    assert!((var - 0.015).abs() < 1e-15);
    let (_, v0) = rounding_moments(&[0.75f64], &p, &[1.0]).unwrap();
    assert_eq!(v0, 0.0);
}

#[test]
fn rounding_of_sphere_points_lands_in_net() {
    let p = NetParams::new(16, 0.3).unwrap();
    let stream = RngStream::new(21);
    let xi = sample_sphere_uniform::<f64, _>(16, &mut stream.derive(0).generator()).unwrap();
    let g = sample_gaussian::<f64, _>(16, &mut stream.derive(1).generator()).unwrap();
    let s = sample_roundings(xi.as_slice(), &p, &g, 100_000, stream.derive(2)).unwrap();
    assert!(s.all_members);
    assert!(s.max_inf_error <= p.spacing() + 1e-12);
    let (mean, var) = rounding_moments(xi.as_slice(), &p, &g).unwrap();
    let se = (var / 100_000.0).sqrt();
    assert!((s.projection.mean - mean).abs() < 4.0 * se.max(1e-12));
}

#[test]
fn rounding_rejects_non_finite() {
    let p = NetParams::new(2, 0.3).unwrap();
    let mut rng = RngStream::new(1).generator();
    assert!(random_round(&[f64::NAN, 0.0], &p, &mut rng).is_err());
}

#[test]
fn rounding_error_is_bounded() {
    let p = NetParams::new(5, 0.35).unwrap();
    let mut rng = RngStream::new(9).generator();
    for _ in 0..200 {
        let xi = sample_gaussian::<f64, _>(5, &mut rng).unwrap();
        let eta = random_round(&xi, &p, &mut rng).unwrap().value();
        let err: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&err) <= p.spacing() + 1e-12);
    }
}

#[test]
fn tail_frequency_respects_hoeffding() {
    let p = NetParams::new(16, 0.3).unwrap();
    let stream = RngStream::new(4);
    let xi = sample_sphere_uniform::<f64, _>(16, &mut stream.derive(0).generator()).unwrap();
    let c = subgaussian_tail_check(xi.as_slice(), xi.as_slice(), 0.15, &p, 100_000, stream.derive(1)).unwrap();
    assert!(c.empirical_prob <= c.hoeffding_bound + 3.0 * c.std_error);
    let large = subgaussian_tail_check(xi.as_slice(), xi.as_slice(), 10.0, &p, 1000, stream.derive(2)).unwrap();
    assert_eq!(large.empirical_prob, 0.0);
}

#[test]
fn single_precision_net_agrees() {
    let p32 = NetParams32::new(2, 0.4).unwrap();
    assert_eq!(enumerate_net(&p32, 10_000).unwrap().len(), 68);
}
