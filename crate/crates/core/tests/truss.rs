use alr_core::truss::{demo_tower, Support, TowerParameters, TrussModel};
use nalgebra::{DMatrix, DVector};

fn params() -> TowerParameters {
    TowerParameters { areas: [1.2e-3, 0.9e-3, 4e-3, 3e-3], moduli: [200e9, 205e9, 210e9, 195e9], tip_force: 3.5e4, hand_load: 1e4, angle_deg: 25.0 }
}

// Full 3N x 3N assembly with fixed rows removed, dense LU solve.
fn dense_displacements(t: &TrussModel, areas: &[f64; 4], moduli: &[f64; 4], loads: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let n = t.nodes.len();
    let mut k = DMatrix::<f64>::zeros(3 * n, 3 * n);
    for (b, g) in t.bars.iter().zip(&t.groups) {
        let (p, q) = (t.nodes[b[0]], t.nodes[b[1]]);
        let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        let l = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let c = [d[0] / l, d[1] / l, d[2] / l];
        let s = areas[*g] * moduli[*g] / l;
        for i in 0..3 {
            for j in 0..3 {
                let v = s * c[i] * c[j];
                k[(3 * b[0] + i, 3 * b[0] + j)] += v;
                k[(3 * b[1] + i, 3 * b[1] + j)] += v;
                k[(3 * b[0] + i, 3 * b[1] + j)] -= v;
                k[(3 * b[1] + i, 3 * b[0] + j)] -= v;
            }
        }
    }
    let mut fixed = vec![false; 3 * n];
    for s in &t.supports {
        for i in 0..3 {
            fixed[3 * s.node + i] |= s.fixed[i];
        }
    }
    let free: Vec<usize> = (0..3 * n).filter(|i| !fixed[*i]).collect();
    let kf = DMatrix::from_fn(free.len(), free.len(), |i, j| k[(free[i], free[j])]);
    let f = DVector::from_iterator(free.len(), free.iter().map(|i| loads[i / 3][i % 3]));
    let u = kf.lu().solve(&f).unwrap();
    let mut out = vec![[0.0; 3]; n];
    for (v, i) in u.iter().zip(&free) {
        out[i / 3][i % 3] = *v;
    }
    out
}

fn max_abs(v: &[[f64; 3]]) -> f64 {
    v.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn demo_tower_matches_dense_assembly() {
    let t = demo_tower();
    let p = params();
    let s = t.solve_tower(&p).unwrap();
    let oracle = dense_displacements(&t, &p.areas, &p.moduli, &t.tower_loads(&p));
    let scale = max_abs(&oracle);
    for (a, b) in s.displacements.iter().zip(&oracle) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 1e-8 * scale, "{a:?} vs {b:?}");
        }
    }
    assert!(s.force_balance() < 1e-9);
}

#[test]
fn stiffer_tower_moves_ten_times_less() {
    let t = demo_tower();
    let p = params();
    let mut q = p;
    q.moduli = p.moduli.map(|e| 10.0 * e);
    let a = t.solve_tower(&p).unwrap();
    let b = t.solve_tower(&q).unwrap();
    for (x, y) in a.displacements.iter().zip(&b.displacements) {
        for k in 0..3 {
            assert!((x[k] - 10.0 * y[k]).abs() <= 1e-9 * max_abs(&a.displacements));
        }
    }
    for (x, y) in a.stresses.iter().zip(&b.stresses) {
        assert!((x - y).abs() <= 1e-6 * a.max_abs_stress());
    }
}

#[test]
fn loads_superpose() {
    let t = demo_tower();
    let p = params();
    let mut tip_only = p;
    tip_only.hand_load = 0.0;
    let mut hands_only = p;
    hands_only.tip_force = 0.0;
    let all = t.solve_tower(&p).unwrap();
    let a = t.solve_tower(&tip_only).unwrap();
    let b = t.solve_tower(&hands_only).unwrap();
    let scale = max_abs(&all.displacements);
    for i in 0..t.nodes.len() {
        for k in 0..3 {
            assert!((all.displacements[i][k] - a.displacements[i][k] - b.displacements[i][k]).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn single_bar_elongation() {
    let (f, l, a, e) = (1e4, 2.5, 1e-4, 2e11);
    let t = TrussModel {
        nodes: vec![[0.0, 0.0, 0.0], [0.0, 0.0, l]],
        bars: vec![[0, 1]],
        groups: vec![0],
        supports: vec![Support { node: 0, fixed: [true; 3] }, Support { node: 1, fixed: [true, true, false] }],
        tip: 1,
        hands: vec![],
    };
    let s = t.solve(&[a; 4], &[e; 4], &[[0.0; 3], [0.0, 0.0, f]]).unwrap();
    assert!((s.displacements[1][2] - f * l / (e * a)).abs() < 1e-15);
    assert!((s.axial_forces[0] - f).abs() < 1e-8);
    assert!((s.stresses[0] - f / a).abs() < 1e-4);
    assert!(s.force_balance() < 1e-12);
}

#[test]
fn unsupported_structure_is_rejected() {
    let mut t = demo_tower();
    t.supports.truncate(1);
    assert!(t.solve_tower(&params()).is_err());
}
