use radonlab::ccball::{reach_ball, BallParams};
use radonlab::decomp::*;
use radonlab::geometry::{catalog, ZPoint};
use radonlab::lattice::{cell, Lattice, LatticeSet, LineSet};
use radonlab::radon::{omega, superlevel_set};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_line(rng: &mut ChaCha8Rng, kmax: i32) -> LineSet {
    let n = 1 << kmax;
    let mut cells = Vec::new();
    for _ in 0..rng.gen_range(1..4) {
        let a = rng.gen_range(-n..n);
        let len = rng.gen_range(1..=n / 4);
        let keep = rng.gen_range(0.3..1.0);
        cells.extend((a..(a + len).min(n)).filter(|_| rng.gen_bool(keep)));
    }
    if cells.is_empty() {
        cells.push(0);
    }
    cells.sort_unstable();
    cells.dedup();
    LineSet::new(2f64.powi(-kmax), cells)
}

/// Every dyadic interval of `[-1, 1)`, finest first, counted cell by cell.
fn exhaustive(fx: &LineSet, eta: f64, c_eta: f64) -> Option<(u32, i64)> {
    let kmax = (-fx.dt.log2()).round() as u32;
    let total = fx.cells().len() as f64 * fx.dt;
    for k in (0..=kmax).rev() {
        let per = 1i64 << (kmax - k);
        for j in -(1i64 << k)..(1i64 << k) {
            let n = fx.cells().iter().filter(|&&c| (c as i64) >= j * per && (c as i64) < (j + 1) * per).count();
            let len = 2f64.powi(-(k as i32));
            if n as f64 * fx.dt >= c_eta * len.powf(eta) * total * (1.0 - 1e-12) {
                return Some((k, j));
            }
        }
    }
    None
}

#[test]
fn central_sets() {
    let dt = 2f64.powi(-9);
    for w in [0.0625, 0.25] {
        let spec = CentralSetSpec { w, eps: 0.5, c_eps: 2.0 };
        assert!(is_central(&LineSet::interval(dt, -w, w), &spec).unwrap().central);
        // all mass in one cell fails the decay condition
        let spike = LineSet::new(dt, [0]);
        let v = is_central(&spike, &CentralSetSpec { w, eps: 0.5, c_eps: 1.0 }).unwrap();
        assert!(!v.central && v.support_ok && v.worst_ratio > 1.0);
    }
    assert!(is_central(&LineSet::new(dt, [0]), &CentralSetSpec { w: 0.1, eps: 1.5, c_eps: 1.0 }).is_err());
}

#[test]
fn minimal_intervals_against_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let fx = random_line(&mut rng, 7);
        let eta = rng.gen_range(0.2..0.8);
        let c_eta = rng.gen_range(0.1..0.5);
        let got = minimal_dyadic(&fx, eta, c_eta).ok().map(|iv| (iv.level, iv.index));
        assert_eq!(got, exhaustive(&fx, eta, c_eta));
    }
    let quarter = LineSet::interval(2f64.powi(-10), 0.0, 0.25);
    assert_eq!(minimal_dyadic(&quarter, 0.5, 0.25).unwrap(), DyadicInterval::new(8, 0));
}

#[test]
fn minimal_intervals_are_localized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let fx = random_line(&mut rng, 8);
        let eta = rng.gen_range(0.2..0.8);
        let iv = minimal_dyadic(&fx, eta, 0.2).unwrap();
        let inside = iv.intersect(&fx).unwrap();
        assert!(inside >= 0.2 * iv.len().powf(eta) * fx.measure() * (1.0 - 1e-12));
        assert!(localization_excess(&fx, &iv, eta).unwrap() <= 1e-12);
    }
}

fn slab_setup(h: f64, beta: f64) -> (LatticeSet, radonlab::radon::SuperLevel) {
    let m = catalog::parabola();
    let f = LatticeSet::from_box(Lattice::standard(2, h), &[-0.25, -8.0], &[0.25, 8.0]);
    let sl = superlevel_set(&m, &f, beta).unwrap();
    (f, sl)
}

#[test]
fn single_slab_strata_and_partition() {
    let m = catalog::parabola();
    let h = 1.0 / 32.0;
    let (f, sl) = slab_setup(h, 0.25);
    let strata = stratify(&sl, 0.5, 0.25).unwrap();
    assert!(strata.pigeonhole_holds());
    let fam = partition(&m, &sl, &strata, &f, None, 4.0).unwrap();
    assert!(fam.overlap_holds(), "{} {} {}", fam.sum_e_n, fam.e_multiplicity, fam.f_multiplicity);
    assert!(fam.localized_holds());
    assert!(fam.f_multiplicity <= 3);
    let (sum, bound) = fam.f_norm_overlap(&f, 3.0, 3.0);
    assert!(sum <= bound * (1.0 + 1e-12));
    assert!(matches!(partition(&m, &sl, &strata, &f, None, 3.0), Err(DecompError::Configuration(_))));
}

#[test]
fn omega_statistics() {
    let m = catalog::parabola();
    let h = 1.0 / 32.0;
    let l = Lattice::standard(2, h);
    let e = LatticeSet::from_box(l.clone(), &[-0.25, -0.25], &[0.25, 0.25]);
    let big = LatticeSet::from_box(l, &[-4.0, -4.0], &[4.0, 4.0]);
    let om = omega(&m, &e, &big).unwrap();
    let st = omega_stats(&m, &om).unwrap();
    assert!((st.pi1 - e.measure()).abs() < 1e-12);
    assert!((st.alpha1 - (2.0 - h)).abs() < 1e-12);
    assert!(st.alpha2 <= st.alpha1 && st.alpha == st.alpha2);
    assert!(omega_stats(&m, &LatticeSet::new(Lattice::incidence(2, h))).is_err());
}

fn dense(omega: &LatticeSet, d: f64, max_centers: usize) -> DenseBallReport {
    let config = DenseBallConfig { deltas: vec![(d, d)], rho: 0.0, c: 1.0, max_centers };
    dense_ball_search(&catalog::parabola(), omega, &config).unwrap()
}

#[test]
fn a_ball_is_its_own_densest_ball() {
    let (d, h) = (0.0625, 1.0 / 128.0);
    let m = catalog::parabola();
    let z = ZPoint::new(vec![h / 2.0, h / 2.0], 0.0);
    let b = reach_ball(&m, &z, &BallParams::new(d, d, h)).unwrap();
    let om = b.cells().clone();
    let rep = dense(&om, d, om.len());
    assert!((rep.best.unwrap().density - 1.0).abs() < 1e-12);

    let mut two = om.clone();
    two.union_with(&om.translated(&[64, 0, 0]));
    let rep = dense(&two, d, two.len());
    assert!((rep.best.unwrap().density - 1.0).abs() < 1e-12);
}

#[test]
fn sprinkled_omega_has_some_density() {
    let (d, h) = (0.0625, 1.0 / 64.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let l = Lattice::incidence(2, h);
    let mut om = LatticeSet::new(l);
    for i in -16..16 {
        for j in -16..16 {
            for k in -16..16 {
                if rng.gen_bool(0.1) {
                    om.insert(cell(&[i, j, k]));
                }
            }
        }
    }
    let rep = dense(&om, d, 200);
    assert!(rep.best.unwrap().density >= 0.05);
    let skip = dense_ball_search(
        &catalog::parabola(),
        &om,
        &DenseBallConfig { deltas: vec![(d, d), (0.01, 0.01)], rho: 0.0, c: 1.0, max_centers: 20 },
    )
    .unwrap();
    assert_eq!(skip.skipped, vec![(0.01, 0.01)]);
}
