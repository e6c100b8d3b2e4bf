//! Linear-elastic 3-D truss: pin-jointed bars, dense stiffness assembly over
//! the free degrees of freedom and a Cholesky solve.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_solve, symmetric_eigenvalues};

pub const GROUPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub node: usize,
    /// Fixed translations (x, y, z).
    pub fixed: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrussModel {
    pub nodes: Vec<[f64; 3]>,
    pub bars: Vec<[usize; 2]>,
    /// Group index (0-based) per bar, selecting area and modulus.
    pub groups: Vec<usize>,
    pub supports: Vec<Support>,
    /// Node receiving the inclined lateral force.
    pub tip: usize,
    /// Nodes receiving the vertical hand loads.
    pub hands: Vec<usize>,
}

/// Random parameters of one tower analysis, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerParameters {
    pub areas: [f64; GROUPS],
    pub moduli: [f64; GROUPS],
    pub tip_force: f64,
    pub hand_load: f64,
    /// Direction of the tip force in the horizontal plane, degrees from x.
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrussSolution {
    pub displacements: Vec<[f64; 3]>,
    pub axial_forces: Vec<f64>,
    pub stresses: Vec<f64>,
    /// Reaction force per node (zero on free nodes).
    pub reactions: Vec<[f64; 3]>,
    pub loads: Vec<[f64; 3]>,
}

impl TrussSolution {
    /// `|sum(loads) + sum(reactions)| / sum |loads|`, global force balance.
    pub fn force_balance(&self) -> f64 {
        let mut s = [0.0; 3];
        let mut scale = 0.0;
        for (l, r) in self.loads.iter().zip(&self.reactions) {
            for k in 0..3 {
                s[k] += l[k] + r[k];
                scale += libm::fabs(l[k]);
            }
        }
        let num = libm::sqrt(s.iter().map(|v| v * v).sum::<f64>());
        if scale == 0.0 {
            num
        } else {
            num / scale
        }
    }

    pub fn max_abs_stress(&self) -> f64 {
        self.stresses.iter().fold(0.0, |m, s| m.max(libm::fabs(*s)))
    }
}

impl TrussModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let bad = |s: &str| Err(Error::InvalidConfig(alloc::format!("truss: {s}")));
        if self.bars.len() != self.groups.len() {
            return bad("one group per bar is required");
        }
        if self.bars.iter().any(|b| b[0] >= n || b[1] >= n || b[0] == b[1]) {
            return bad("bar references an unknown node");
        }
        if self.groups.iter().any(|g| *g >= GROUPS) {
            return bad("group index out of range");
        }
        for g in 0..GROUPS {
            if !self.groups.contains(&g) {
                return bad("every group needs at least one bar");
            }
        }
        if self.supports.iter().any(|s| s.node >= n) || self.tip >= n || self.hands.iter().any(|h| *h >= n) {
            return bad("support or load node out of range");
        }
        if self.nodes.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite coordinate");
        }
        for b in &self.bars {
            if self.length(b) == 0.0 {
                return bad("zero-length bar");
            }
        }
        Ok(())
    }

    fn length(&self, b: &[usize; 2]) -> f64 {
        let (a, c) = (self.nodes[b[0]], self.nodes[b[1]]);
        libm::sqrt((0..3).map(|k| (c[k] - a[k]) * (c[k] - a[k])).sum())
    }

    /// Equation number per DOF, `None` where fixed.
    fn numbering(&self) -> (Vec<Option<usize>>, usize) {
        let mut fixed = alloc::vec![false; 3 * self.nodes.len()];
        for s in &self.supports {
            for k in 0..3 {
                fixed[3 * s.node + k] |= s.fixed[k];
            }
        }
        let mut next = 0;
        let eq = fixed
            .iter()
            .map(|f| {
                if *f {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        (eq, next)
    }

    /// Static solution for per-group sections and arbitrary nodal loads.
    pub fn solve(&self, areas: &[f64; GROUPS], moduli: &[f64; GROUPS], loads: &[[f64; 3]]) -> Result<TrussSolution> {
        let nn = self.nodes.len();
        if loads.len() != nn {
            return Err(Error::InvalidConfig("one load vector per node is required".into()));
        }
        let (eq, nf) = self.numbering();
        let mut k = alloc::vec![0.0; nf * nf];
        let mut dirs = Vec::with_capacity(self.bars.len());
        for (b, &g) in self.bars.iter().zip(&self.groups) {
            let len = self.length(b);
            let (a, c) = (self.nodes[b[0]], self.nodes[b[1]]);
            let d = [(c[0] - a[0]) / len, (c[1] - a[1]) / len, (c[2] - a[2]) / len];
            let stiff = moduli[g] * areas[g] / len;
            dirs.push((d, stiff));
            let dofs = [3 * b[0], 3 * b[0] + 1, 3 * b[0] + 2, 3 * b[1], 3 * b[1] + 1, 3 * b[1] + 2];
            let vec6 = [-d[0], -d[1], -d[2], d[0], d[1], d[2]];
            for i in 0..6 {
                let Some(ei) = eq[dofs[i]] else { continue };
                for j in 0..6 {
                    let Some(ej) = eq[dofs[j]] else { continue };
                    if ej <= ei {
                        k[ei * nf + ej] += stiff * vec6[i] * vec6[j];
                    }
                }
            }
        }
        let mut rhs = alloc::vec![0.0; nf];
        for (node, l) in loads.iter().enumerate() {
            for c in 0..3 {
                if let Some(e) = eq[3 * node + c] {
                    rhs[e] += l[c];
                }
            }
        }
        let backup = k.clone();
        let diag_max = (0..nf).map(|i| backup[i * nf + i]).fold(0.0f64, f64::max);
        // rigid-body modes can survive factorization as round-off pivots
        let factored = cholesky_in_place(&mut k, nf) && (0..nf).all(|i| k[i * nf + i] * k[i * nf + i] > 1e-12 * diag_max);
        if !factored {
            let mut full = backup;
            for i in 0..nf {
                for j in 0..i {
                    full[j * nf + i] = full[i * nf + j];
                }
            }
            let ev = symmetric_eigenvalues(&full, nf);
            let top = ev.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
            let null_space = ev.iter().filter(|v| libm::fabs(**v) <= 1e-10 * top).count().max(1);
            return Err(Error::Mechanism { null_space });
        }
        cholesky_solve(&k, nf, &mut rhs);
        let mut disp = alloc::vec![[0.0; 3]; nn];
        for node in 0..nn {
            for c in 0..3 {
                if let Some(e) = eq[3 * node + c] {
                    disp[node][c] = rhs[e];
                }
            }
        }
        let mut forces = Vec::with_capacity(self.bars.len());
        let mut stresses = Vec::with_capacity(self.bars.len());
        let mut internal = alloc::vec![[0.0; 3]; nn];
        for ((b, (d, stiff)), &g) in self.bars.iter().zip(&dirs).zip(&self.groups) {
            let elong: f64 = (0..3).map(|c| d[c] * (disp[b[1]][c] - disp[b[0]][c])).sum();
            let n = stiff * elong;
            forces.push(n);
            stresses.push(n / areas[g]);
            for c in 0..3 {
                // a bar in tension pulls its end nodes toward each other
                internal[b[0]][c] -= n * d[c];
                internal[b[1]][c] += n * d[c];
            }
        }
        let mut reactions = alloc::vec![[0.0; 3]; nn];
        for node in 0..nn {
            for c in 0..3 {
                if eq[3 * node + c].is_none() {
                    reactions[node][c] = internal[node][c] - loads[node][c];
                }
            }
        }
        Ok(TrussSolution { displacements: disp, axial_forces: forces, stresses, reactions, loads: loads.to_vec() })
    }

    /// Nodal loads for the tower load case.
    pub fn tower_loads(&self, p: &TowerParameters) -> Vec<[f64; 3]> {
        let mut loads = alloc::vec![[0.0; 3]; self.nodes.len()];
        let a = p.angle_deg * core::f64::consts::PI / 180.0;
        loads[self.tip][0] += p.tip_force * libm::cos(a);
        loads[self.tip][1] += p.tip_force * libm::sin(a);
        for &h in &self.hands {
            loads[h][2] -= p.hand_load;
        }
        loads
    }

    pub fn solve_tower(&self, p: &TowerParameters) -> Result<TrussSolution> {
        self.solve(&p.areas, &p.moduli, &self.tower_loads(p))
    }

    /// Magnitude of the tip displacement vector.
    pub fn tip_displacement(&self, p: &TowerParameters) -> Result<f64> {
        let s = self.solve_tower(p)?;
        let d = s.displacements[self.tip];
        Ok(libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]))
    }

    pub fn max_stress(&self, p: &TowerParameters) -> Result<f64> {
        Ok(self.solve_tower(p)?.max_abs_stress())
    }
}

/// Demonstration lattice tower with 51 nodes and 172 bars: twelve square
/// levels 2 m apart tapering from 4 m to 1.6 m, a tip node on top and two
/// cantilevered hands at level 9. Groups: 0 horizontals and plan
/// diagonals, 1 face diagonals, 2 legs, 3 tip and hand members. The four
/// base nodes are fixed.
pub fn demo_tower() -> TrussModel {
    let levels = 12;
    let half = |l: usize| 2.0 - 1.2 * l as f64 / (levels - 1) as f64;
    let corner = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
    let mut nodes = Vec::new();
    for l in 0..levels {
        let w = half(l);
        for c in corner {
            nodes.push([c[0] * w, c[1] * w, 2.0 * l as f64]);
        }
    }
    let tip = nodes.len();
    nodes.push([0.0, 0.0, 2.0 * levels as f64]);
    let hand_level = 9;
    let reach = half(hand_level) + 3.0;
    let hand_pos = nodes.len();
    nodes.push([reach, 0.0, 2.0 * hand_level as f64]);
    let hand_neg = nodes.len();
    nodes.push([-reach, 0.0, 2.0 * hand_level as f64]);

    let id = |l: usize, c: usize| 4 * l + (c % 4);
    let mut bars = Vec::new();
    let mut groups = Vec::new();
    let mut add = |a: usize, b: usize, g: usize| {
        bars.push([a, b]);
        groups.push(g);
    };
    for l in 0..levels - 1 {
        for c in 0..4 {
            add(id(l, c), id(l + 1, c), 2);
            add(id(l, c), id(l + 1, c + 1), 1);
        }
    }
    for l in 0..levels {
        for c in 0..4 {
            add(id(l, c), id(l, c + 1), 0);
        }
    }
    for l in 1..levels {
        add(id(l, 0), id(l, 2), 0);
    }
    add(id(levels - 1, 1), id(levels - 1, 3), 0);
    for l in 0..3 {
        for c in 0..4 {
            add(id(l, c + 1), id(l + 1, c), 1);
        }
    }
    for c in 0..4 {
        add(id(levels - 1, c), tip, 3);
    }
    // +x hand hangs off corners 0 and 3, -x hand off corners 1 and 2
    for (hand, cs) in [(hand_pos, [0, 3]), (hand_neg, [1, 2])] {
        for c in cs {
            add(id(hand_level, c), hand, 3);
            add(id(hand_level - 1, c), hand, 3);
        }
    }
    let supports = (0..4).map(|c| Support { node: id(0, c), fixed: [true; 3] }).collect();
    TrussModel { nodes, bars, groups, supports, tip, hands: alloc::vec![hand_pos, hand_neg] }
}
