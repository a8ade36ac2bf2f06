use super::*;
use crate::normalform::Form;

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn coeff(p: &Poly, e: [u8; 4]) -> C64 {
    p.coeff(&e)
}

#[test]
fn taylor_at_0_2_matches_hand_expansion() {
    let m = cp2_iota(1.0).unwrap();
    let f = taylor(&m.charts[0], &[cx(0.0, 0.0), cx(2.0, 0.0)], 3);
    // slots [z1, z2, z̄1, z̄2]
    let expect = [
        ([0, 0, 0, 0], 0.0),
        ([1, 0, 0, 0], 4.0 / 15.0),
        ([0, 1, 0, 0], 0.0),
        ([0, 0, 1, 0], 0.0),
        ([1, 1, 0, 0], -1.0 / 25.0),
        ([1, 0, 0, 1], -1.0 / 25.0),
        ([0, 1, 1, 0], -1.0 / 30.0),
        ([1, 0, 1, 0], 0.0),
        ([0, 1, 0, 1], 0.0),
        ([2, 0, 0, 0], 0.0),
        ([0, 0, 2, 0], 0.0),
    ];
    for (e, v) in expect {
        assert!((coeff(&f, e) - cx(v, 0.0)).norm() < 1e-12, "{e:?}: {}", coeff(&f, e));
    }
}

#[test]
fn taylor_at_sqrt3_1_matches_hand_expansion() {
    let s3 = 3f64.sqrt();
    let m = cp2_iota(1.0).unwrap();
    let f = taylor(&m.charts[0], &[cx(s3, 0.0), cx(1.0, 0.0)], 3);
    let expect = [
        ([0, 0, 0, 0], s3 / 3.0),
        ([1, 0, 0, 0], 1.0 / 5.0),
        ([0, 1, 0, 0], -s3 / 15.0),
        ([2, 0, 0, 0], -s3 / 75.0),
        ([1, 1, 0, 0], 1.0 / 15.0),
        ([0, 2, 0, 0], 2.0 * s3 / 75.0),
        ([1, 0, 1, 0], -8.0 * s3 / 225.0),
        ([1, 0, 0, 1], 4.0 / 75.0),
        ([0, 1, 1, 0], -4.0 / 75.0),
        ([0, 1, 0, 1], -8.0 * s3 / 75.0),
        ([0, 0, 1, 0], 0.0),
        ([0, 0, 0, 1], 0.0),
        ([0, 0, 2, 0], 0.0),
    ];
    for (e, v) in expect {
        assert!((coeff(&f, e) - cx(v, 0.0)).norm() < 1e-12, "{e:?}: {}", coeff(&f, e));
    }
}

#[test]
fn local_model_is_in_standard_position() {
    let m = cp2_iota(1.0).unwrap();
    let model = local_model(&m.charts[0], &[cx(0.0, 0.0), cx(2.0, 0.0)]).unwrap();
    assert!(model.is_standard_position(1e-14));
    let q = extract_QRS(&model).unwrap();
    assert!(q.s.max_abs() < 1e-14);
    // R[i][j] is the coefficient of z_j z̄_i
    assert!((q.r[(1, 0)] - cx(-1.0 / 25.0, 0.0)).norm() < 1e-14);
    assert!((q.r[(0, 1)] - cx(-1.0 / 30.0, 0.0)).norm() < 1e-14);
    assert_eq!(point_index(&model, OrientationClass::Plus).unwrap(), Index::Plus);
    // off a CR point the z̄-linear term survives
    assert!(matches!(
        local_model(&m.charts[0], &[cx(0.1, 0.0), cx(2.0, 0.0)]),
        Err(LocusError::ResidualTooLarge(_))
    ));
}

#[test]
fn cp2_has_seven_points_independent_of_t() {
    let mut sets = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let m = cp2_iota(t).unwrap();
        let e = enumerate(&m, SearchOptions::default()).unwrap();
        assert_eq!(e.points.len(), 7, "t={t}");
        assert_eq!((e.i_plus, e.i_minus), (7, 0));
        assert!(e.points.iter().all(|p| p.orientation_class == OrientationClass::Plus && p.index == Index::Plus));
        assert!(topology_check(&m, e.i_plus, e.i_minus, Convention::Lai).unwrap().pass);
        sets.push(e.points.iter().map(|p| p.ambient.clone()).collect::<Vec<_>>());
    }
    for s in &sets[1..] {
        for (a, b) in s.iter().zip(&sets[0]) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-8));
        }
    }
    let s3 = 3f64.sqrt();
    let affine = [(0.0, 0.0, 2.0, 0.0), (s3, 0.0, 1.0, 0.0), (-s3, 0.0, 1.0, 0.0), (0.0, 3.0, -1.0, 0.0), (0.0, -3.0, -1.0, 0.0)];
    let m = cp2_iota(1.0).unwrap();
    let (pts, _) = chart_points(&m.charts[0], DEFAULT_SEEDS).unwrap();
    assert_eq!(pts.len(), 5);
    for (a, b, c, d) in affine {
        assert!(pts.iter().any(|p| (p.location[0] - cx(a, b)).norm() < 1e-8 && (p.location[1] - cx(c, d)).norm() < 1e-8));
    }
}

#[test]
fn switched_convention_swaps_identities() {
    let m = s4_ellipsoid(&[1.0; 5]).unwrap();
    let lai = enumerate(&m, SearchOptions::default()).unwrap();
    let sw = enumerate(&m, SearchOptions { convention: Convention::Switched, ..Default::default() }).unwrap();
    assert_eq!((lai.i_plus, lai.i_minus), (1, 1));
    assert_eq!((sw.i_plus, sw.i_minus), (1, -1));
    assert!(topology_check(&m, sw.i_plus, sw.i_minus, Convention::Switched).unwrap().pass);
    assert!(!topology_check(&m, sw.i_plus, sw.i_minus, Convention::Lai).unwrap().pass);
}

#[test]
fn s4_points_and_normal_forms() {
    for d in [[1.0; 5], [1.0, 2.0, 3.0, 4.0, 5.0], [2.0, 1.0, 0.5, 3.0, 1.0]] {
        let m = s4_ellipsoid(&d).unwrap();
        let e = enumerate(&m, SearchOptions::default()).unwrap();
        assert_eq!(e.points.len(), 2);
        assert_eq!((e.i_plus, e.i_minus), (1, 1));
        for p in &e.points {
            assert!(p.location.iter().all(|v| v.norm() < 1e-12));
            let row = &p.table_row;
            assert!(row.n.approx_eq(&crate::matcore::CMat::identity(2), 1e-12));
            // P = diag(|d1−d2|/(d1+d2), |d3−d4|/(d3+d4)) up to order
            let mut got = [row.p[(0, 0)].re, row.p[(1, 1)].re];
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut want = [(d[0] - d[1]).abs() / (d[0] + d[1]), (d[2] - d[3]).abs() / (d[2] + d[3])];
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((got[0] - want[0]).abs() < 1e-9 && (got[1] - want[1]).abs() < 1e-9, "{got:?} {want:?}");
            assert!(row.p[(0, 1)].norm() < 1e-12);
        }
    }
}

#[test]
fn s2xs2_quadratic_part() {
    let (a, b, c, f) = (1.0, 2.0, 1.5, 0.7);
    let m = s2xs2(&[a, b, c, 3.0, 5.0, f]).unwrap();
    for ch in &m.charts {
        let model = local_model(ch, &[cx(0.0, 0.0); 2]).unwrap();
        let q = extract_QRS(&model).unwrap();
        let ChartFn::Radical { terms, .. } = &ch.f else { unreachable!() };
        let eta1 = terms[0].weight.re.signum();
        // √(1 − u) = 1 − u/2 + …, and x² + y² = |z|²
        assert!((q.r[(0, 0)] - cx(-eta1 * (a + b) / (4.0 * c.sqrt()), 0.0)).norm() < 1e-12);
        assert!((q.s[(0, 0)] - cx(-eta1 * (a - b) / (8.0 * c.sqrt()), 0.0)).norm() < 1e-12);
    }
    let e = enumerate(&m, SearchOptions::default()).unwrap();
    assert_eq!(e.points.len(), 4);
    assert!(e.points.iter().all(|p| p.index == Index::Plus));
    assert_eq!((e.i_plus, e.i_minus), (2, 2));
}

#[test]
fn index_agrees_with_hessian() {
    for m in [cp2_iota(1.0).unwrap(), s4_ellipsoid(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), s2xs2(&[1.0, 2.0, 1.0, 3.0, 5.0, 1.0]).unwrap()] {
        for ch in &m.charts {
            let class = if ch.orientation > 0 { OrientationClass::Plus } else { OrientationClass::Minus };
            for z in find_cr_points(ch, 8).unwrap().locations {
                let model = local_model(ch, &z).unwrap();
                assert_eq!(point_index(&model, class).unwrap(), hessian_point_index(&model, class).unwrap());
            }
        }
    }
}

#[test]
fn models_reproduce_wirtinger_derivatives() {
    let m = cp2_iota(1.0).unwrap();
    let ch = &m.charts[0];
    let z0 = [cx(3f64.sqrt(), 0.0), cx(1.0, 0.0)];
    let model = local_model(ch, &z0).unwrap();
    let h = 1e-4;
    for k in 0..2 {
        let mut dz = [cx(0.0, 0.0); 2];
        dz[k] = cx(h, 0.0);
        let z = [z0[0] + dz[0], z0[1] + dz[1]];
        let w = ch.wirtinger(&z).unwrap();
        let d = model.poly().diff(2 + k);
        let x = [dz[0], dz[1], dz[0].conj(), dz[1].conj()];
        assert!((w[k] - d.eval(&x)).norm() < 1e-9 * 1e4 * h * h * 1e4);
    }
}

#[test]
fn graph_chart_on_complex_curve_is_identically_critical() {
    let num = Poly::var(4, 4, 0).mul(&Poly::var(4, 4, 1));
    let ch = Chart {
        id: "holo".into(),
        f: ChartFn::rational(num, Poly::constant(4, 4, cx(1.0, 0.0))),
        domain_box: [[-1.0, 1.0]; 4],
        orientation: 1,
        fixed_zero: vec![],
        ambient: AmbientMap::Graph,
        snap: vec![],
    };
    assert!(find_cr_points(&ch, 4).unwrap().identically_critical);
}

#[test]
fn rejects_bad_builtins() {
    assert!(matches!(cp2_iota(0.0), Err(LocusError::BadParams(_))));
    assert!(matches!(s4_ellipsoid(&[1.0, 1.0, 0.0, 1.0, 1.0]), Err(LocusError::BadParams(_))));
    assert!(matches!(builtin("torus", &[]), Err(LocusError::BadParams(_))));
    let m = ChartedManifold { name: "x".into(), charts: vec![], dedupe_dist: DEDUPE_DIST, expected: None };
    assert_eq!(topology_check(&m, 0, 0, Convention::Lai), Err(LocusError::NoExpectedTopology));
}

#[test]
fn manifest_roundtrip() {
    // z₃ = z₁z̄₁ + z₂z̄₂ has a single elliptic point at the origin
    let json = r#"{
        "name": "paraboloid",
        "charts": [{
            "id": "main",
            "num": {"nvars": 2, "trunc": 4, "terms": [
                {"alpha": [1, 0], "beta": [1, 0], "re": 1.0, "im": 0.0},
                {"alpha": [0, 1], "beta": [0, 1], "re": 1.0, "im": 0.0}]},
            "den": {"nvars": 2, "trunc": 4, "terms": [{"alpha": [0, 0], "beta": [0, 0], "re": 1.0, "im": 0.0}]},
            "domain_box": [[-1, 1], [-1, 1], [-1, 1], [-1, 1]]
        }]
    }"#;
    let man: Manifest = serde_json::from_str(json).unwrap();
    let m = man.build().unwrap();
    let e = enumerate(&m, SearchOptions { seeds_per_axis: 4, ..Default::default() }).unwrap();
    assert_eq!(e.points.len(), 1);
    assert_eq!(e.points[0].index, Index::Plus);
    assert!(matches!(e.points[0].table_row.form, Form::DefiniteDiag));
}
