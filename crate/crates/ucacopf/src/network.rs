//! Incidence and admittance matrices derived from a [`PowerCase`].
//!
//! The bus admittance matrix is assembled twice, once by direct stamping of
//! the per-branch blocks and once through the auxiliary-matrix identity
//! `Y = C1' Y1 + C2' Y2 + diag(Y_sh)`. The two paths must agree to 1e-12;
//! the check runs on every assembly as a permanent self-test.

use crate::case::{Branch, CaseError, PowerCase};
use num_complex::Complex64;

/// Dense complex matrix, row major. Grids up to a few hundred buses fit
/// comfortably; sparse storage is not worth it below that.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n_rows: usize,
    pub n_cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![Complex64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.data[i * self.n_cols + k]
    }

    #[inline]
    pub fn add(&mut self, i: usize, k: usize, v: Complex64) {
        self.data[i * self.n_cols + k] += v;
    }

    /// Max absolute entry of the elementwise difference.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// The four entries of a branch element-admittance block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchBlock {
    pub y_ff: Complex64,
    pub y_ft: Complex64,
    pub y_tf: Complex64,
    pub y_tt: Complex64,
}

#[derive(Debug, Clone)]
pub struct NetworkMatrices {
    /// Bus-by-line incidence: -1 at the from bus, +1 at the to bus.
    pub a_incidence: Vec<Vec<i8>>,
    /// Line-by-bus selectors: c1 picks from buses, c2 picks to buses.
    pub c1: Vec<Vec<u8>>,
    pub c2: Vec<Vec<u8>>,
    pub y_branch: Vec<BranchBlock>,
    pub y_bus: CMat,
    /// From/to current transfer matrices (line by bus, two entries per row).
    pub y1: CMat,
    pub y2: CMat,
    pub y_shunt: Vec<Complex64>,
    /// Branch endpoints as bus indices (not ids).
    pub ends: Vec<(usize, usize)>,
    /// Nonzero column indices per y_bus row, diagonal included.
    pub neighbors: Vec<Vec<usize>>,
}

/// Standard pi-model block: series admittance 1/(r+jx), half the charging
/// susceptance on each side, tap ratio and phase shift on the from side.
pub fn branch_admittance(branch: &Branch) -> Result<BranchBlock, CaseError> {
    if branch.r == 0.0 && branch.x == 0.0 {
        return Err(CaseError::Invalid(format!(
            "branch {}-{} has zero series impedance",
            branch.from_bus, branch.to_bus
        )));
    }
    let y_s = Complex64::new(1.0, 0.0) / Complex64::new(branch.r, branch.x);
    let tap = Complex64::from_polar(branch.tap, branch.shift);
    let y_tt = y_s + Complex64::new(0.0, branch.b_charge / 2.0);
    Ok(BranchBlock {
        y_ff: y_tt / (tap * tap.conj()),
        y_ft: -y_s / tap.conj(),
        y_tf: -y_s / tap,
        y_tt,
    })
}

pub fn assemble(case: &PowerCase) -> Result<NetworkMatrices, CaseError> {
    let nb = case.n_buses();
    let nl = case.n_branches();

    let mut ends = Vec::with_capacity(nl);
    for br in &case.branches {
        let f = case.bus_index(br.from_bus).ok_or_else(|| {
            CaseError::Invalid(format!("branch from_bus {} not found", br.from_bus))
        })?;
        let t = case
            .bus_index(br.to_bus)
            .ok_or_else(|| CaseError::Invalid(format!("branch to_bus {} not found", br.to_bus)))?;
        ends.push((f, t));
    }

    let mut a_incidence = vec![vec![0i8; nl]; nb];
    let mut c1 = vec![vec![0u8; nb]; nl];
    let mut c2 = vec![vec![0u8; nb]; nl];
    for (l, &(f, t)) in ends.iter().enumerate() {
        a_incidence[f][l] = -1;
        a_incidence[t][l] = 1;
        c1[l][f] = 1;
        c2[l][t] = 1;
    }

    let y_shunt: Vec<Complex64> = case
        .buses
        .iter()
        .map(|b| Complex64::new(b.g_sh, b.b_sh))
        .collect();

    let mut y_branch = Vec::with_capacity(nl);
    let mut y_bus = CMat::zeros(nb, nb);
    let mut y1 = CMat::zeros(nl, nb);
    let mut y2 = CMat::zeros(nl, nb);
    for (l, br) in case.branches.iter().enumerate() {
        let blk = branch_admittance(br)?;
        let (f, t) = ends[l];
        y_bus.add(f, f, blk.y_ff);
        y_bus.add(f, t, blk.y_ft);
        y_bus.add(t, f, blk.y_tf);
        y_bus.add(t, t, blk.y_tt);
        y1.add(l, f, blk.y_ff);
        y1.add(l, t, blk.y_ft);
        y2.add(l, f, blk.y_tf);
        y2.add(l, t, blk.y_tt);
        y_branch.push(blk);
    }
    for (i, ysh) in y_shunt.iter().enumerate() {
        y_bus.add(i, i, *ysh);
    }

    // Second assembly path through the auxiliary matrices.
    let mut y_check = CMat::zeros(nb, nb);
    for l in 0..nl {
        for k in 0..nb {
            let (row1, row2) = (y1.get(l, k), y2.get(l, k));
            for i in 0..nb {
                if c1[l][i] == 1 {
                    y_check.add(i, k, row1);
                }
                if c2[l][i] == 1 {
                    y_check.add(i, k, row2);
                }
            }
        }
    }
    for (i, ysh) in y_shunt.iter().enumerate() {
        y_check.add(i, i, *ysh);
    }
    let diff = y_bus.max_abs_diff(&y_check);
    if diff > 1e-12 {
        return Err(CaseError::Invalid(format!(
            "admittance identity check failed: max deviation {diff:.3e}"
        )));
    }

    let mut neighbors = vec![Vec::new(); nb];
    for i in 0..nb {
        for k in 0..nb {
            if y_bus.get(i, k).norm() > 0.0 || i == k {
                neighbors[i].push(k);
            }
        }
    }

    Ok(NetworkMatrices {
        a_incidence,
        c1,
        c2,
        y_branch,
        y_bus,
        y1,
        y2,
        y_shunt,
        ends,
        neighbors,
    })
}
