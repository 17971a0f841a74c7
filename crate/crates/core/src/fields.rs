//! Charge deposition, density smoothing, Poisson solve, electric field and
//! field gather on node-centred arrays of length `nc + 1`.
//!
//! Deposition is built from per-cell partial sums: cell `j` contributes a
//! "low" sum to node `j` and a "high" sum to node `j + 1`, and every node value
//! is the two-operand sum `high(j-1) + low(j)`. A node shared by two subdomains
//! therefore gets bitwise the same value whether it is assembled locally or
//! across a seam.

use std::io;

use crate::constants::PhysicalConstants;
use crate::error::{PicError, Result};
use crate::grid::Grid1D;
use crate::species::SpeciesTable;
use crate::store::{CellParticles, CellSortedStore};
use crate::tridiag::thomas;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldBoundary {
    Periodic,
    Dirichlet { phi_left: f64, phi_right: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub e_field: Vec<f64>,
    /// Mean charge density removed before a periodic solve.
    pub removed_mean_rho: f64,
}

impl FieldState {
    pub fn zeros(grid: &Grid1D) -> Self {
        let n = grid.nodes();
        FieldState { rho: vec![0.0; n], phi: vec![0.0; n], e_field: vec![0.0; n], removed_mean_rho: 0.0 }
    }

    /// Writes `node_index,x_m,rho,phi,e_field` rows with a header.
    pub fn write_csv<W: io::Write>(&self, grid: &Grid1D, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["node_index", "x_m", "rho", "phi", "e_field"])?;
        for j in 0..self.rho.len() {
            w.write_record([
                j.to_string(),
                grid.node_x(j).to_string(),
                self.rho[j].to_string(),
                self.phi[j].to_string(),
                self.e_field[j].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Charge-density contributions of one cell to its left and right node.
fn cell_contributions(cells: &[&CellParticles], density_per_macro: &[f64]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (c, f) in cells.iter().zip(density_per_macro) {
        if *f == 0.0 {
            continue;
        }
        let mut s_lo = 0.0;
        let mut s_hi = 0.0;
        for &x in &c.x {
            s_lo += 1.0 - x;
            s_hi += x;
        }
        lo += f * s_lo;
        hi += f * s_hi;
    }
    (lo, hi)
}

/// Local node array for the cells of `store`: `ncells + 1` entries where the
/// first holds only the low sum of the first cell and the last only the high
/// sum of the last cell.
pub fn deposit_piece(store: &CellSortedStore, species: &SpeciesTable) -> Result<Vec<f64>> {
    store.check_sorted()?;
    let factors: Vec<f64> = (0..species.len()).map(|k| species.charge_density_per_macro(k)).collect();
    let n = store.ncells();
    let mut piece = vec![0.0; n + 1];
    let mut prev_hi = None;
    let mut buf: Vec<&CellParticles> = Vec::with_capacity(store.nspecies());
    for j in 0..n {
        buf.clear();
        buf.extend(store.species.iter().map(|s| &s.cells[j]));
        let (lo, hi) = cell_contributions(&buf, &factors);
        piece[j] = match prev_hi {
            Some(h) => h + lo,
            None => lo,
        };
        prev_hi = Some(hi);
    }
    piece[n] = prev_hi.unwrap_or(0.0);
    Ok(piece)
}

/// Assembles contiguous pieces (in cell order) into the global node array.
pub fn stitch_pieces(pieces: &[Vec<f64>], bc: FieldBoundary) -> Vec<f64> {
    let nc: usize = pieces.iter().map(|p| p.len() - 1).sum();
    let mut rho = vec![0.0; nc + 1];
    let mut base = 0;
    for (w, p) in pieces.iter().enumerate() {
        let n = p.len() - 1;
        rho[base + 1..base + n].copy_from_slice(&p[1..n]);
        if w > 0 {
            rho[base] = pieces[w - 1][pieces[w - 1].len() - 1] + p[0];
        }
        base += n;
    }
    let first = pieces[0][0];
    let last = *pieces[pieces.len() - 1].last().expect("non-empty piece");
    match bc {
        FieldBoundary::Periodic => {
            rho[0] = last + first;
            rho[nc] = rho[0];
        }
        FieldBoundary::Dirichlet { .. } => {
            // Half-width control volumes at the walls.
            rho[0] = 2.0 * first;
            rho[nc] = 2.0 * last;
        }
    }
    rho
}

/// Cloud-in-cell charge density on the nodes of a single-domain store.
pub fn deposit_charge(
    store: &CellSortedStore,
    grid: &Grid1D,
    species: &SpeciesTable,
    bc: FieldBoundary,
) -> Result<Vec<f64>> {
    if store.ncells() != grid.nc() || store.cell_offset() != 0 {
        return Err(PicError::Contract("deposit_charge needs a store covering the whole grid".into()));
    }
    Ok(stitch_pieces(&[deposit_piece(store, species)?], bc))
}

/// One or more passes of the periodic 1-2-1 binomial filter over a node array
/// whose last entry duplicates the first.
pub fn smooth_density(rho: &[f64], passes: usize) -> Vec<f64> {
    let n = rho.len() - 1;
    let mut cur = rho.to_vec();
    let mut next = vec![0.0; rho.len()];
    for _ in 0..passes {
        for j in 0..n {
            let left = cur[(j + n - 1) % n];
            let right = cur[(j + 1) % n];
            next[j] = 0.25 * left + 0.5 * cur[j] + 0.25 * right;
        }
        next[n] = next[0];
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub phi: Vec<f64>,
    /// Mean of rho over the periodic nodes that was subtracted (zero for
    /// Dirichlet problems).
    pub removed_mean_rho: f64,
}

/// Solves `(phi[j-1] - 2 phi[j] + phi[j+1]) / dx^2 = -rho[j] / eps0` exactly.
///
/// Periodic problems are made solvable by subtracting the mean charge; the
/// node-0 potential is pinned, which turns the singular cyclic system into a
/// tridiagonal one, and the result is shifted to zero mean.
pub fn solve_poisson(
    rho: &[f64],
    grid: &Grid1D,
    consts: &PhysicalConstants,
    bc: FieldBoundary,
) -> Result<PoissonSolution> {
    let nc = grid.nc();
    if nc < 3 {
        return Err(PicError::GridSize { nc, what: "Poisson solve needs at least 3 cells" });
    }
    if rho.len() != nc + 1 {
        return Err(PicError::Contract(format!("rho has {} nodes, grid has {}", rho.len(), nc + 1)));
    }
    let dx2 = grid.dx_m() * grid.dx_m();
    let m = nc - 1;
    let sub = vec![1.0; m - 1];
    let sup = vec![1.0; m - 1];
    let diag = vec![-2.0; m];

    match bc {
        FieldBoundary::Periodic => {
            let mean = rho[..nc].iter().sum::<f64>() / nc as f64;
            let rhs: Vec<f64> = (1..nc).map(|j| -(rho[j] - mean) / consts.epsilon0 * dx2).collect();
            let inner = thomas(&sub, &diag, &sup, &rhs).expect("Laplacian is non-singular");
            let mut phi = Vec::with_capacity(nc + 1);
            phi.push(0.0);
            phi.extend(inner);
            let shift = phi.iter().sum::<f64>() / nc as f64;
            for p in &mut phi {
                *p -= shift;
            }
            phi.push(phi[0]);
            Ok(PoissonSolution { phi, removed_mean_rho: mean })
        }
        FieldBoundary::Dirichlet { phi_left, phi_right } => {
            let mut rhs: Vec<f64> = (1..nc).map(|j| -rho[j] / consts.epsilon0 * dx2).collect();
            rhs[0] -= phi_left;
            rhs[m - 1] -= phi_right;
            let inner = thomas(&sub, &diag, &sup, &rhs).expect("Laplacian is non-singular");
            let mut phi = Vec::with_capacity(nc + 1);
            phi.push(phi_left);
            phi.extend(inner);
            phi.push(phi_right);
            Ok(PoissonSolution { phi, removed_mean_rho: 0.0 })
        }
    }
}

/// `max_j |A phi + rho/eps0| / max_j |rho/eps0|` for the discrete Laplacian
/// `A`, over the nodes where the equation is imposed. `rho` must already have
/// any neutralizing mean removed.
pub fn poisson_residual(phi: &[f64], rho: &[f64], grid: &Grid1D, consts: &PhysicalConstants, periodic: bool) -> f64 {
    let nc = grid.nc();
    let dx2 = grid.dx_m() * grid.dx_m();
    let nodes: Vec<usize> = if periodic { (0..nc).collect() } else { (1..nc).collect() };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in nodes {
        let (l, r) = if periodic { ((j + nc - 1) % nc, (j + 1) % nc) } else { (j - 1, j + 1) };
        let lap = (phi[l] - 2.0 * phi[j] + phi[r]) / dx2;
        let src = rho[j] / consts.epsilon0;
        worst = worst.max((lap + src).abs());
        scale = scale.max(src.abs());
    }
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// `E = -dphi/dx`: central differences inside, periodic wrap or one-sided
/// second-order differences at Dirichlet walls.
pub fn compute_efield(phi: &[f64], grid: &Grid1D, bc: FieldBoundary) -> Vec<f64> {
    let nc = grid.nc();
    let two_dx = 2.0 * grid.dx_m();
    let mut e = vec![0.0; nc + 1];
    for j in 1..nc {
        e[j] = -(phi[j + 1] - phi[j - 1]) / two_dx;
    }
    match bc {
        FieldBoundary::Periodic => {
            e[0] = -(phi[1] - phi[nc - 1]) / two_dx;
            e[nc] = e[0];
        }
        FieldBoundary::Dirichlet { .. } => {
            e[0] = -(-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / two_dx;
            e[nc] = -(3.0 * phi[nc] - 4.0 * phi[nc - 1] + phi[nc - 2]) / two_dx;
        }
    }
    e
}

/// Field at offset `x` in the cell whose left node is `node`.
#[inline(always)]
pub fn interpolate(e: &[f64], node: usize, x: f64) -> f64 {
    e[node] + x * (e[node + 1] - e[node])
}

/// Gathers the field at every particle of one cell into `out`.
pub fn gather_cell(e: &[f64], node: usize, cell: &CellParticles, out: &mut Vec<f64>) {
    out.clear();
    out.extend(cell.x.iter().map(|&x| interpolate(e, node, x)));
}

/// Per species, per local cell, per particle field values.
pub type ParticleField = Vec<Vec<Vec<f64>>>;

/// Linear interpolation of the node field to every particle, with the same
/// weights as [`deposit_charge`].
pub fn gather_field(e_field: &[f64], store: &CellSortedStore, grid: &Grid1D) -> Result<ParticleField> {
    if e_field.len() != grid.nodes() {
        return Err(PicError::Contract("field length does not match grid".into()));
    }
    store.check_sorted()?;
    let off = store.cell_offset();
    Ok(store
        .species
        .iter()
        .map(|s| {
            s.cells
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let mut v = Vec::with_capacity(c.len());
                    gather_cell(e_field, off + j, c, &mut v);
                    v
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::SpeciesDef;
    use crate::store::Particle;

    fn one_species(q: f64) -> SpeciesTable {
        SpeciesTable::new(vec![SpeciesDef::new("s", q, 1.0)], vec![1.0]).unwrap()
    }

    fn at(x: f64) -> Particle {
        Particle { x, ..Particle::default() }
    }

    #[test]
    fn particle_on_node_deposits_fully_there() {
        let g = Grid1D::new(8, 8.0).unwrap();
        let mut s = CellSortedStore::empty(8, &[false]);
        s.push(0, 3, at(0.0));
        let rho = deposit_charge(&s, &g, &one_species(2.0), FieldBoundary::Periodic).unwrap();
        assert_eq!(rho[3], 2.0);
        assert_eq!(rho.iter().filter(|r| **r != 0.0).count(), 1);
    }

    #[test]
    fn midpoint_particle_splits_evenly() {
        let g = Grid1D::new(8, 8.0).unwrap();
        let mut s = CellSortedStore::empty(8, &[false]);
        s.push(0, 5, at(0.5));
        let rho = deposit_charge(&s, &g, &one_species(1.0), FieldBoundary::Periodic).unwrap();
        assert_eq!((rho[5], rho[6]), (0.5, 0.5));
    }

    #[test]
    fn periodic_seam_duplicates_node_zero() {
        let g = Grid1D::new(4, 4.0).unwrap();
        let mut s = CellSortedStore::empty(4, &[false]);
        s.push(0, 3, at(0.75));
        s.push(0, 0, at(0.25));
        let rho = deposit_charge(&s, &g, &one_species(1.0), FieldBoundary::Periodic).unwrap();
        assert_eq!(rho[0], 0.75 + 0.75);
        assert_eq!(rho[4], rho[0]);
    }

    #[test]
    fn dirichlet_wall_nodes_use_half_volume() {
        let g = Grid1D::new(4, 4.0).unwrap();
        let mut s = CellSortedStore::empty(4, &[false]);
        s.push(0, 0, at(0.0));
        let bc = FieldBoundary::Dirichlet { phi_left: 0.0, phi_right: 0.0 };
        let rho = deposit_charge(&s, &g, &one_species(1.0), bc).unwrap();
        let trapezoid: f64 = (0..=4).map(|j| if j == 0 || j == 4 { 0.5 } else { 1.0 } * rho[j]).sum();
        assert_eq!(trapezoid, 1.0);
    }

    #[test]
    fn neutral_species_deposit_nothing() {
        let g = Grid1D::new(4, 4.0).unwrap();
        let mut s = CellSortedStore::empty(4, &[false]);
        s.push(0, 1, at(0.3));
        let rho = deposit_charge(&s, &g, &one_species(0.0), FieldBoundary::Periodic).unwrap();
        assert!(rho.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn unsorted_store_rejected() {
        let g = Grid1D::new(4, 4.0).unwrap();
        let mut s = CellSortedStore::empty(4, &[false]);
        s.push(0, 1, at(1.3));
        assert!(matches!(
            deposit_charge(&s, &g, &one_species(1.0), FieldBoundary::Periodic),
            Err(PicError::Contract(_))
        ));
    }

    #[test]
    fn smoothing_kernel() {
        let constant = vec![3.5; 9];
        assert_eq!(smooth_density(&constant, 1), constant);
        let mut spike = vec![0.0; 9];
        spike[4] = 1.0;
        let out = smooth_density(&spike, 1);
        assert_eq!(&out[3..6], &[0.25, 0.5, 0.25]);
        assert_eq!(out.iter().sum::<f64>(), 1.0);
        let nyquist: Vec<f64> = (0..=8).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(smooth_density(&nyquist, 1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn smoothing_wraps_at_seam() {
        let mut spike = vec![0.0; 9];
        spike[0] = 1.0;
        spike[8] = 1.0;
        let out = smooth_density(&spike, 1);
        assert_eq!((out[7], out[0], out[1], out[8]), (0.25, 0.5, 0.25, 0.5));
    }

    #[test]
    fn zero_source_zero_potential() {
        let g = Grid1D::new(16, 1.0).unwrap();
        let c = PhysicalConstants::new(1.0, 1.0).unwrap();
        let bc = FieldBoundary::Dirichlet { phi_left: 0.0, phi_right: 0.0 };
        let sol = solve_poisson(&vec![0.0; 17], &g, &c, bc).unwrap();
        assert!(sol.phi.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn constant_source_matches_parabola() {
        let l = 2.0;
        let g = Grid1D::new(40, l).unwrap();
        let c = PhysicalConstants::new(8.854e-12, 1.0).unwrap();
        let rho0 = 3.0e-9;
        let bc = FieldBoundary::Dirichlet { phi_left: 0.0, phi_right: 0.0 };
        let sol = solve_poisson(&vec![rho0; 41], &g, &c, bc).unwrap();
        let peak = rho0 * l * l / (8.0 * c.epsilon0);
        for j in 0..=40 {
            let x = g.node_x(j);
            let exact = rho0 * x * (l - x) / (2.0 * c.epsilon0);
            assert!((sol.phi[j] - exact).abs() <= 1e-12 * peak, "node {j}");
        }
    }

    #[test]
    fn dirichlet_boundary_values_enforced() {
        let g = Grid1D::new(10, 1.0).unwrap();
        let c = PhysicalConstants::new(1.0, 1.0).unwrap();
        let bc = FieldBoundary::Dirichlet { phi_left: 2.0, phi_right: -1.0 };
        let sol = solve_poisson(&vec![0.0; 11], &g, &c, bc).unwrap();
        for j in 0..=10 {
            let exact = 2.0 - 3.0 * j as f64 / 10.0;
            assert!((sol.phi[j] - exact).abs() < 1e-13);
        }
        let e = compute_efield(&sol.phi, &g, bc);
        assert!(e.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn periodic_solution_has_zero_mean_and_records_removed_charge() {
        let g = Grid1D::new(32, 1.0).unwrap();
        let c = PhysicalConstants::new(1.0, 1.0).unwrap();
        let rho: Vec<f64> = (0..=32).map(|j| 2.0 + (j % 32) as f64 * 0.01).collect();
        let sol = solve_poisson(&rho, &g, &c, FieldBoundary::Periodic).unwrap();
        let mean_phi: f64 = sol.phi[..32].iter().sum::<f64>() / 32.0;
        assert!(mean_phi.abs() < 1e-15);
        let expected_mean = rho[..32].iter().sum::<f64>() / 32.0;
        assert_eq!(sol.removed_mean_rho, expected_mean);
        let neutral: Vec<f64> = rho.iter().map(|r| r - expected_mean).collect();
        assert!(poisson_residual(&sol.phi, &neutral, &g, &c, true) < 1e-10);
    }

    #[test]
    fn too_small_grid_rejected() {
        let g = Grid1D::new(2, 1.0).unwrap();
        let c = PhysicalConstants::new(1.0, 1.0).unwrap();
        assert!(matches!(
            solve_poisson(&[0.0; 3], &g, &c, FieldBoundary::Periodic),
            Err(PicError::GridSize { .. })
        ));
    }

    #[test]
    fn efield_of_constant_and_linear_potential() {
        let g = Grid1D::new(10, 5.0).unwrap();
        let flat = compute_efield(&vec![4.0; 11], &g, FieldBoundary::Periodic);
        assert!(flat.iter().all(|e| *e == 0.0));
        let slope = 1.5;
        let lin: Vec<f64> = (0..=10).map(|j| slope * g.node_x(j)).collect();
        let e = compute_efield(&lin, &g, FieldBoundary::Dirichlet { phi_left: 0.0, phi_right: 0.0 });
        for v in &e[1..10] {
            assert!((v + slope).abs() < 1e-12);
        }
    }

    #[test]
    fn gather_interpolates() {
        let g = Grid1D::new(4, 4.0).unwrap();
        let e = vec![1.0, 3.0, -2.0, 0.5, 1.0];
        let mut s = CellSortedStore::empty(4, &[false]);
        s.push(0, 1, at(0.0));
        s.push(0, 1, at(0.5));
        let ep = gather_field(&e, &s, &g).unwrap();
        assert_eq!(ep[0][1], vec![3.0, 0.5]);
    }

    #[test]
    fn uniform_field_gathers_bitwise_identical() {
        let g = Grid1D::new(6, 1.0).unwrap();
        let e = vec![0.123_456_789; 7];
        let mut s = CellSortedStore::empty(6, &[false]);
        for k in 0..50 {
            s.push(0, k % 6, at((k as f64 * 0.618_033_988_7) % 1.0));
        }
        let ep = gather_field(&e, &s, &g).unwrap();
        assert!(ep[0].iter().flatten().all(|v| v.to_bits() == e[0].to_bits()));
    }
}
