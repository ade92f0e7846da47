use std::sync::Arc;

use hkperiod::indefinite_linear::{signed_orthonormal_basis, QuadraticSpace};
use hkperiod::lattice_transport::*;
use hkperiod::linalg::{self, unit_vector, RVec};
use hkperiod::period_domain::{from_positive_2plane, PeriodPoint};
use hkperiod::rng::{normal, normal_vec, seeded};
use hkperiod::Error;
use rand::Rng;

type Space = QuadraticSpace<f64>;

fn space(p: usize) -> Arc<Space> {
    Arc::new(Space::standard(p).unwrap())
}

fn combo(coeffs: &[f64], vs: &[&RVec]) -> RVec {
    let n = vs[0].len();
    coeffs.iter().zip(vs).fold(vec![0.0; n], |mut acc, (c, v)| {
        for i in 0..n {
            acc[i] += c * v[i];
        }
        acc
    })
}

/// A random `q`-orthonormal frame, positive vectors first.
fn random_frame<R: Rng>(s: &Space, rng: &mut R) -> Vec<RVec> {
    let n = s.dim();
    loop {
        let raw: Vec<RVec> = (0..n).map(|_| normal_vec(rng, n)).collect();
        if let Ok(f) = signed_orthonormal_basis(s, &raw) {
            let big = f.iter().map(|(_, v)| linalg::rnorm(v)).fold(0.0, f64::max);
            if big < 4.0 {
                return f.into_iter().map(|x| x.1).collect();
            }
        }
    }
}

/// Random oriented positive plane in `span(f₀, f₁) ⊕ extra`, with small
/// components along `extra`.
fn random_plane<R: Rng>(frame: &[RVec], extra: &[usize], rng: &mut R) -> [RVec; 2] {
    let mut mk = || {
        let mut coeffs = vec![normal(rng), normal(rng)];
        let mut vs = vec![&frame[0], &frame[1]];
        for &j in extra {
            coeffs.push(0.2 * normal(rng));
            vs.push(&frame[j]);
        }
        combo(&coeffs, &vs)
    };
    loop {
        let (a, b) = (mk(), mk());
        let s = Space::standard(frame.len() - 3).unwrap();
        let g = s.restricted_gram(&[a.clone(), b.clone()]);
        if g[0][0] > 0.1 && g[0][0] * g[1][1] - g[0][1] * g[1][0] > 0.25 * g[0][0] * g[1][1] {
            return [a, b];
        }
    }
}

fn check_isometry(s: &Space, n_basis: &[RVec], p: &[RVec; 2], q: &[RVec; 2]) {
    let g = isometry_fixing_n(s, n_basis, p, q).unwrap();
    assert!(isometry_residual(s, &g) < 1e-9, "residual {}", isometry_residual(s, &g));
    for v in n_basis {
        let gv = linalg::matvec(&g, v);
        let d: f64 = gv.iter().zip(v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-9, "N moved by {d}");
    }
    let gp = [linalg::matvec(&g, &p[0]), linalg::matvec(&g, &p[1])];
    for v in &gp {
        let coeffs = {
            let gram = s.restricted_gram(q);
            let r = [s.q_real(v, &q[0]), s.q_real(v, &q[1])];
            linalg::solve_real(&gram, &r).unwrap()
        };
        let back = combo(&coeffs, &[&q[0], &q[1]]);
        let d = linalg::rnorm(&back.iter().zip(v).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(d < 1e-9 * linalg::rnorm(v).max(1.0), "gP leaves Q by {d}");
    }
    assert!(orientation_det(s, q, &gp) > 0.0);
}

#[test]
fn isometries_fixing_a_nondegenerate_subspace() {
    let mut rng = seeded(41);
    for p in [1usize, 2, 5, 19] {
        let s = space(p);
        for k in 0..100 {
            let f = random_frame(&s, &mut rng);
            let n_basis: Vec<RVec> = match (k % 3, p) {
                (0, _) => vec![],
                (1, _) => vec![f[2].clone()],
                (_, 1) => vec![f[3].clone()],
                _ => vec![f[2].clone(), combo(&[1.0, 0.5], &[&f[3], &f[4]])],
            };
            let extra: Vec<usize> = (3 + n_basis.len().min(p)..3 + p).collect();
            let a = random_plane(&f, &extra, &mut rng);
            let b = random_plane(&f, &extra, &mut rng);
            check_isometry(&s, &n_basis, &a, &b);
        }
    }
}

#[test]
fn isometries_fixing_a_degenerate_subspace() {
    let mut rng = seeded(42);
    for p in [1usize, 2, 5, 19] {
        let s = space(p);
        for k in 0..100 {
            let f = random_frame(&s, &mut rng);
            let n0 = combo(&[1.0, 1.0], &[&f[2], &f[3]]);
            let mut n_basis = vec![n0.clone()];
            if p >= 2 && k % 2 == 1 {
                n_basis.push(f[4].clone());
            }
            let first_free = if n_basis.len() == 2 { 5 } else { 4 };
            let extra: Vec<usize> = (first_free..3 + p).collect();
            let shift = |rng: &mut _, v: RVec| -> RVec {
                let c = 0.5 * normal(rng);
                v.iter().zip(&n0).map(|(x, y)| x + c * y).collect()
            };
            let [a0, a1] = random_plane(&f, &extra, &mut rng);
            let [b0, b1] = random_plane(&f, &extra, &mut rng);
            let a = [shift(&mut rng, a0), shift(&mut rng, a1)];
            let b = [shift(&mut rng, b0), shift(&mut rng, b1)];
            check_isometry(&s, &n_basis, &a, &b);
        }
    }
}

#[test]
fn isometry_rejects_planes_off_d_n() {
    let s = space(2);
    let n_basis = vec![unit_vector(5, 0)];
    let p = [unit_vector(5, 1), unit_vector(5, 2)];
    let q = [unit_vector(5, 0), unit_vector(5, 2)];
    assert!(matches!(isometry_fixing_n(&s, &n_basis, &p, &q), Err(Error::NotInDomain(_))));
    let two = vec![unit_vector(5, 0), unit_vector(5, 1)];
    assert!(matches!(isometry_fixing_n(&s, &two, &p, &p), Err(Error::Precondition(_))));
}

fn base_point(s: &Arc<Space>) -> PeriodPoint {
    let n = s.dim();
    from_positive_2plane(s.clone(), &unit_vector(n, 0), &unit_vector(n, 1)).unwrap()
}

#[test]
fn witnesses_reproduce_sign_vectors() {
    let mut rng = seeded(43);
    let s = space(4);
    let o = base_point(&s);
    let walls = WallSet::new(
        &s,
        vec![
            unit_vector(7, 3),
            vec![0.0, 0.0, 1.0, 1.0, 2.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, -1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 3.0],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0],
        ],
    )
    .unwrap();
    assert_eq!(walls.active(&o, 1e-9), vec![0, 1, 2, 3]);
    for _ in 0..30 {
        let y: Vec<f64> = (0..4).map(|_| 0.45 * normal(&mut rng)).collect();
        if y.iter().map(|x| x * x).sum::<f64>() >= 0.95 {
            continue;
        }
        let kappa = vec![0.0, 0.0, 1.0, y[0], y[1], y[2], y[3]];
        let Ok(signs) = chamber_signs(&o, &kappa, &walls, 1e-9) else { continue };
        let w = witness(&o, &signs, &walls, None, &mut rng).unwrap();
        assert!(w.margin >= 1e-8);
        assert_eq!(chamber_signs(&o, &w.kappa, &walls, 1e-9).unwrap(), signs);
    }
}

#[test]
fn contradictory_signs_are_infeasible() {
    let mut rng = seeded(44);
    let s = space(2);
    let o = base_point(&s);
    // Klein-disk lines y₄ = ±1/2 and y₅ = ±1/2 of the slice κ = e₃ + y
    let walls = WallSet::new(
        &s,
        vec![
            vec![0.0, 0.0, 0.5, 1.0, 0.0],
            vec![0.0, 0.0, 0.5, -1.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.0, 1.0],
            vec![0.0, 0.0, 0.5, 0.0, -1.0],
        ],
    )
    .unwrap();
    use Sign::{Minus, Plus};
    let signs: ChamberSignVector = [(0, Minus), (1, Minus), (2, Plus), (3, Plus)].into_iter().collect();
    assert!(matches!(witness(&o, &signs, &walls, None, &mut rng), Err(Error::Infeasible(_))));
    let ok: ChamberSignVector = [(0, Plus), (1, Plus), (2, Plus), (3, Plus)].into_iter().collect();
    assert!(witness(&o, &ok, &walls, None, &mut rng).is_ok());

    let degenerate = WallSet::new(&s, vec![unit_vector(5, 3), unit_vector(5, 4), vec![0.0, 0.0, 0.0, 1.0, 1.0]]).unwrap();
    let touching: ChamberSignVector = [(0, Plus), (1, Plus), (2, Minus)].into_iter().collect();
    assert!(matches!(witness(&o, &touching, &degenerate, None, &mut rng), Err(Error::Ambiguous(_))));
}

#[test]
fn constant_path_keeps_the_initial_vector() {
    let mut rng = seeded(45);
    let s = space(1);
    let o = base_point(&s);
    let walls = WallSet::new(&s, vec![unit_vector(4, 3)]).unwrap();
    let initial = chamber_signs(&o, &[0.0, 0.0, 1.0, 0.5], &walls, 1e-9).unwrap();
    let out = transport_chamber(&vec![o; 5], &walls, &initial, TransportOptions::default(), &mut rng).unwrap();
    assert_eq!(out.signs, initial);
    assert!(out.log.is_empty());
    assert_eq!(out.margins.len(), 5);
}

/// Points `e₁ + i(cosh s · e₂ + sinh s · e₅)` leaving the wall `e₅^⊥` at `t₀`.
fn leaving_path(s: &Arc<Space>, t0: f64, steps: usize) -> Vec<PeriodPoint> {
    (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            let u = (t - t0).max(0.0) * 2.0;
            let mut e2 = unit_vector(5, 1);
            e2[4] = u.sinh();
            e2[1] = u.cosh();
            from_positive_2plane(s.clone(), &unit_vector(5, 0), &e2).unwrap()
        })
        .collect()
}

#[test]
fn wall_becoming_inactive_is_logged_and_dropped() {
    let mut rng = seeded(46);
    let s = space(2);
    let path = leaving_path(&s, 0.5, 100);
    let walls = WallSet::new(&s, vec![unit_vector(5, 3), unit_vector(5, 4)]).unwrap();
    let initial = chamber_signs(&path[0], &[0.0, 0.0, 1.0, 0.3, -0.4], &walls, 1e-9).unwrap();
    assert_eq!(initial.len(), 2);
    let out = transport_chamber(&path, &walls, &initial, TransportOptions::default(), &mut rng).unwrap();
    assert_eq!(out.log.len(), 1);
    assert_eq!(out.log[0].wall_index, 1);
    assert_eq!(out.log[0].event, TransportEvent::Deactivated);
    assert!(out.log[0].sample_index > 50);
    assert_eq!(out.signs.len(), 1);
    assert_eq!(out.signs[&0], initial[&0]);

    let mut back = path.clone();
    back.reverse();
    let b = -0.4;
    let kappa = vec![0.0, b * 1f64.tanh(), 1.0, 0.3, b];
    let start = chamber_signs(&back[0], &kappa, &walls, 1e-9).unwrap();
    let rev = transport_chamber_from(&back, &walls, &start, Some(&kappa), TransportOptions::default(), &mut rng).unwrap();
    let events: Vec<TransportEvent> = rev.log.iter().map(|e| e.event).collect();
    assert_eq!(events[0], TransportEvent::Activated);
    assert!(matches!(events[1], TransportEvent::SignPlus | TransportEvent::SignMinus));
    assert_eq!(events[1], TransportEvent::SignPlus);
    assert_eq!(rev.signs.len(), 2);
    for (pt, k) in back.iter().zip(&rev.witnesses).skip(60) {
        assert_eq!(chamber_signs(pt, k, &walls, 1e-9).unwrap(), rev.signs);
    }

    let coarse = leaving_path(&s, 0.5, 2);
    assert!(matches!(
        transport_chamber(&coarse, &walls, &initial, TransportOptions::default(), &mut rng),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn signs_are_constant_along_paths_in_d_n() {
    let mut rng = seeded(47);
    let s = space(4);
    for _ in 0..50 {
        let f = random_frame(&s, &mut rng);
        let alpha = combo(&[1.0, 0.4], &[&f[3], &f[4]]);
        let beta = combo(&[0.7, -1.0, 0.2], &[&f[2], &f[5], &f[6]]);
        let n_basis = vec![alpha.clone(), beta.clone()];
        let free = [f[0].clone(), f[1].clone(), combo(&[1.0, -0.4], &[&f[4], &f[3]])];
        let plane = |rng: &mut _| -> [RVec; 2] {
            loop {
                let mut mk = || {
                    let c = [normal(rng), normal(rng), 0.2 * normal(rng)];
                    combo(&c, &[&free[0], &free[1], &free[2]])
                };
                let (a, b) = (mk(), mk());
                if let Ok(fr) = hkperiod::indefinite_linear::q_gram_schmidt_positive(&s, &[a, b]) {
                    return [fr[0].clone(), fr[1].clone()];
                }
            }
        };
        let a = plane(&mut rng);
        let b = plane(&mut rng);
        let g = isometry_fixing_n(&s, &n_basis, &a, &b).unwrap();
        let mut path = Vec::new();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let mix = |i: usize| -> RVec {
                let gb = linalg::matvec(&g, &a[i]);
                a[i].iter().zip(&gb).map(|(x, y)| (1.0 - t) * x + t * y).collect()
            };
            let fr = hkperiod::indefinite_linear::q_gram_schmidt_positive(&s, &[mix(0), mix(1)]);
            let Ok(fr) = fr else { break };
            path.push(from_positive_2plane(s.clone(), &fr[0], &fr[1]).unwrap());
        }
        let walls = WallSet::new(&s, n_basis.clone()).unwrap();
        assert_eq!(walls.active(&path[0], 1e-9), vec![0, 1]);
        let signs: ChamberSignVector = [
            (0, if rng.gen::<bool>() { Sign::Plus } else { Sign::Minus }),
            (1, if rng.gen::<bool>() { Sign::Plus } else { Sign::Minus }),
        ]
        .into_iter()
        .collect();
        let out = transport_chamber(&path, &walls, &signs, TransportOptions::default(), &mut rng).unwrap();
        assert_eq!(out.signs, signs);
        assert!(out.log.is_empty());
        for (pt, kappa) in path.iter().zip(&out.witnesses) {
            assert_eq!(chamber_signs(pt, kappa, &walls, 1e-9).unwrap(), signs);
        }
    }
}
