//! Library results against the brute-force reference in `common`.

mod common;

use campanato::fnspaces::{campanato_blo_norm, campanato_norm, dclass_from_rho, lipschitz_norm, morrey_norm};
use campanato::maximal_g::hl_maximal;
use campanato::potential::critical_radius;
use campanato::space::{build_grid_space, builtin_space, random_graph_metric};
use campanato::{BallClass, BallIndex, GridFunction, MetricMeasureSpace, Potential, WeightSpec};
use common::{close, Kind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

fn small_spaces() -> Vec<MetricMeasureSpace> {
    let mut out: Vec<MetricMeasureSpace> =
        ["two_point", "three_point_line", "random8", "random12"].iter().map(|n| builtin_space(n).unwrap()).collect();
    out.push(build_grid_space(1, 1.0, 9, WeightSpec::Uniform).unwrap());
    out.push(build_grid_space(2, 1.0, 3, WeightSpec::Uniform).unwrap());
    out.push(build_grid_space(1, 1.0, 10, WeightSpec::Power { sigma: 0.5 }).unwrap());
    for (n, seed) in [(5, 11), (7, 12), (11, 13)] {
        out.push(random_graph_metric(n, seed).unwrap());
    }
    // points on a line with repeated gaps, so distance ties are frequent
    out.push(
        MetricMeasureSpace::from_points(
            "tied line",
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![5.0], vec![6.0]],
            vec![1.0, 2.0, 0.5, 1.0, 3.0, 1.0],
        )
        .unwrap(),
    );
    out
}

fn functions(n: usize, seed: u64) -> Vec<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![GridFunction::constant(n, 1.5), GridFunction::zeros(n)];
    for _ in 0..6 {
        out.push(GridFunction::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap());
    }
    let mut spike = vec![0.0; n];
    spike[n / 2] = 3.0;
    out.push(GridFunction::new(spike).unwrap());
    out
}

fn rhos(s: &MetricMeasureSpace, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diam = s.diameter();
    vec![
        vec![1e-3 * diam; s.len()],
        vec![10.0 * diam; s.len()],
        (0..s.len()).map(|_| rng.gen_range(0.05..1.2) * diam).collect(),
        // exactly on pairwise distances, so ties with ball radii matter
        (0..s.len()).map(|x| s.dist(x, (x + 1) % s.len()).max(1e-3)).collect(),
    ]
}

#[test]
fn ball_enumeration_matches_brute_force() {
    for s in small_spaces() {
        let index = BallIndex::new(&s);
        let raw = common::raw_balls(&s);
        let mut raw_sets: Vec<Vec<usize>> = raw.iter().map(|b| b.members.clone()).collect();
        raw_sets.sort();
        raw_sets.dedup();
        let mut ours: Vec<Vec<usize>> = (0..index.len())
            .map(|b| {
                let mut m: Vec<usize> = index.members(b).iter().map(|&y| y as usize).collect();
                m.sort();
                m
            })
            .collect();
        ours.sort();
        assert_eq!(ours.len(), index.len(), "{}: duplicate balls", s.label());
        ours.dedup();
        assert_eq!(ours, raw_sets, "{}", s.label());
    }
}

#[test]
fn d_class_matches_brute_force() {
    for s in small_spaces() {
        let index = BallIndex::new(&s);
        let raw = common::raw_balls(&s);
        for rho in rhos(&s, 3) {
            let d = dclass_from_rho(&index, &rho).unwrap();
            let raw_d = common::in_d(&raw, &rho);
            for (b, rd) in raw.iter().zip(&raw_d) {
                let mut m = b.members.clone();
                m.sort();
                let id = (0..index.len())
                    .find(|&k| {
                        let mut o: Vec<usize> = index.members(k).iter().map(|&y| y as usize).collect();
                        o.sort();
                        o == m
                    })
                    .unwrap();
                assert_eq!(d.contains(id), *rd, "{}: ball {:?}", s.label(), m);
            }
        }
    }
}

#[test]
fn localized_norms_match_brute_force() {
    for (k, s) in small_spaces().into_iter().enumerate() {
        let index = BallIndex::new(&s);
        let raw = common::raw_balls(&s);
        for rho in rhos(&s, 5 + k as u64) {
            let d = dclass_from_rho(&index, &rho).unwrap();
            let raw_d = common::in_d(&raw, &rho);
            for f in functions(s.len(), 17 + k as u64) {
                for &(alpha, p) in &[(-0.4, 1.0), (0.0, 1.0), (0.0, 2.0), (0.3, 1.5), (0.7, 3.0)] {
                    let e = campanato_norm(&index, &f, alpha, p, &d).unwrap();
                    let (o, z) = common::localized(&s, f.values(), alpha, p, &raw_d, &raw, Kind::Mean);
                    assert!(close(e.oscillation_part, o, TOL) && close(e.size_part, z, TOL), "{} E {alpha} {p}", s.label());
                    assert!(close(e.total, o + z, TOL));
                    let b = campanato_blo_norm(&index, &f, alpha, p, &d).unwrap();
                    let (o, z) = common::localized(&s, f.values(), alpha, p, &raw_d, &raw, Kind::Min);
                    assert!(close(b.oscillation_part, o, TOL) && close(b.size_part, z, TOL), "{} BLO", s.label());
                }
                for alpha in [0.2, 0.5, 1.0] {
                    let l = lipschitz_norm(&index, &f, alpha, &d).unwrap();
                    let (o, z) = common::lipschitz(&s, f.values(), alpha, &raw_d, &raw);
                    assert!(close(l.oscillation_part, o, TOL) && close(l.size_part, z, TOL), "{} Lip", s.label());
                    assert!(close(l.total, o.max(z), TOL));
                }
            }
        }
    }
}

#[test]
fn global_and_morrey_norms_match_brute_force() {
    for (k, s) in small_spaces().into_iter().enumerate() {
        let index = BallIndex::new(&s);
        let raw = common::raw_balls(&s);
        let none = vec![false; raw.len()];
        let all = vec![true; raw.len()];
        for f in functions(s.len(), 40 + k as u64) {
            for &(alpha, p) in &[(-0.3, 1.0), (0.0, 2.0), (0.4, 1.0)] {
                let g = campanato_norm(&index, &f, alpha, p, &BallClass::empty(&index)).unwrap();
                let (o, z) = common::localized(&s, f.values(), alpha, p, &none, &raw, Kind::Mean);
                assert_eq!(z, 0.0);
                assert!(close(g.total, o, TOL), "{} global", s.label());
                let m = morrey_norm(&index, &f, alpha, p).unwrap();
                let (_, z) = common::localized(&s, f.values(), alpha, p, &all, &raw, Kind::Mean);
                assert!(close(m.total, z, TOL), "{} Morrey", s.label());
            }
        }
    }
}

#[test]
fn hl_maximal_matches_brute_force() {
    for (k, s) in small_spaces().into_iter().enumerate() {
        let index = BallIndex::new(&s);
        let raw = common::raw_balls(&s);
        for f in functions(s.len(), 70 + k as u64) {
            let ours = hl_maximal(&index, &f).unwrap();
            let theirs = common::hl(&s, f.values(), &raw);
            for (a, b) in ours.values().iter().zip(&theirs) {
                assert!(close(*a, *b, TOL), "{}", s.label());
            }
        }
    }
}

#[test]
fn critical_radius_matches_scan() {
    let step = 1e-4;
    for (k, s) in small_spaces().into_iter().enumerate() {
        let index = BallIndex::new(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(90 + k as u64);
        let scale = 1.0 / (s.diameter() * s.diameter());
        let vs = [
            vec![4.0 * scale; s.len()],
            (0..s.len()).map(|_| rng.gen_range(0.0..20.0) * scale).collect::<Vec<_>>(),
            (0..s.len()).map(|i| if i % 3 == 0 { 30.0 * scale } else { 0.0 }).collect(),
        ];
        for v in vs {
            let rho = critical_radius(&index, &Potential::new(v.clone()).unwrap()).unwrap().rho;
            let scan = common::critical_radius_scan(&s, &v, step * s.diameter());
            for (a, b) in rho.iter().zip(&scan) {
                assert!((a - b).abs() <= 1e-4 * s.diameter() + 1e-12, "{}: {a} vs {b}", s.label());
            }
        }
    }
}
