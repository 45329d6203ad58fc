use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::system::{AssembledMatrix, ParameterizedSystem};

/// Finite-volume discretization of a steady advection-diffusion equation on
/// the unit square with homogeneous Dirichlet boundaries and unit forcing,
/// standing in for an external flow solver with perturbed inputs.
///
/// The velocity derives from the streamfunction
/// `psi(x, y) = sum_k s_k sin(k pi x) sin(k pi y) / k` over the first
/// `min(3, d-1)` parameters; face-normal velocities are discrete
/// streamfunction differences at cell corners, so the discrete divergence of
/// the field vanishes to roundoff. The diffusion coefficient is
/// `Gamma(x, s) = 0.1 exp(0.5 sum_j s_j phi_j(x))` over the remaining
/// parameters with fixed smooth shapes `phi_j`, hence strictly positive.
/// Advective fluxes are first-order upwinded by default (keeping the matrix
/// diagonally dominant); central differencing is available behind a flag.
#[derive(Debug, Clone)]
pub struct AdvectionDiffusionProblem {
    m: usize,
    d: usize,
    n_velocity: usize,
    upwind: bool,
}

impl AdvectionDiffusionProblem {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        Self::with_scheme(m, d, true)
    }

    pub fn with_scheme(m: usize, d: usize, upwind: bool) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "advection-diffusion grid needs at least one interior node".into(),
            ));
        }
        if d < 2 {
            return Err(Error::InvalidArgument(
                "advection-diffusion needs at least one velocity and one diffusion parameter"
                    .into(),
            ));
        }
        Ok(Self {
            m,
            d,
            n_velocity: 3.min(d - 1),
            upwind,
        })
    }

    pub fn interior(&self) -> usize {
        self.m
    }

    pub fn is_upwind(&self) -> bool {
        self.upwind
    }

    fn h(&self) -> f64 {
        1.0 / (self.m + 1) as f64
    }

    fn unknown(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.m + (i - 1)
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "advection-diffusion parameter point",
                expected: self.d,
                got: point.len(),
            });
        }
        Ok(())
    }

    fn streamfunction(&self, point: &[f64], x: f64, y: f64) -> f64 {
        let mut psi = 0.0;
        for k in 1..=self.n_velocity {
            let kf = k as f64;
            psi += point[k - 1] * (kf * PI * x).sin() * (kf * PI * y).sin() / kf;
        }
        psi
    }

    fn diffusion(&self, point: &[f64], x: f64, y: f64) -> f64 {
        let mut exponent = 0.0;
        for j in 0..(self.d - self.n_velocity) {
            let shape = match j % 3 {
                0 => (PI * x).cos() * (PI * y).cos(),
                1 => (2.0 * PI * x).sin() * (PI * y).sin(),
                _ => (PI * x).sin() * (2.0 * PI * y).sin(),
            };
            exponent += point[self.n_velocity + j] * shape;
        }
        0.1 * (0.5 * exponent).exp()
    }

    /// Streamfunction values at all cell corners `((i+1/2) h, (j+1/2) h)`
    /// for `i, j = 0..=m`.
    fn corner_psi(&self, point: &[f64]) -> Vec<f64> {
        let m = self.m;
        let h = self.h();
        let mut psi = vec![0.0; (m + 1) * (m + 1)];
        for j in 0..=m {
            let y = (j as f64 + 0.5) * h;
            for i in 0..=m {
                let x = (i as f64 + 0.5) * h;
                psi[j * (m + 1) + i] = self.streamfunction(point, x, y);
            }
        }
        psi
    }

    /// Outward-normal face velocities of cell `(i, j)` as
    /// `(east, west, north, south)`, each signed along the outward normal.
    fn face_velocities(&self, psi: &[f64], i: usize, j: usize) -> (f64, f64, f64, f64) {
        let m = self.m;
        let h = self.h();
        let corner = |ci: usize, cj: usize| psi[cj * (m + 1) + ci];
        // corners of cell (i, j): sw = (i-1/2, j-1/2) has corner index (i-1, j-1)
        let sw = corner(i - 1, j - 1);
        let se = corner(i, j - 1);
        let nw = corner(i - 1, j);
        let ne = corner(i, j);
        let u_east = (ne - se) / h;
        let u_west = (nw - sw) / h;
        let v_north = -(ne - nw) / h;
        let v_south = -(se - sw) / h;
        (u_east, -u_west, v_north, -v_south)
    }

    /// Calls `visit(row, diag, neighbors)` for every unknown, where
    /// `neighbors` lists `(column, coefficient)` for interior neighbors.
    fn with_rows<F: FnMut(usize, f64, &[(usize, f64)])>(
        &self,
        point: &[f64],
        mut visit: F,
    ) -> Result<()> {
        self.check_point(point)?;
        let m = self.m;
        let h = self.h();
        let psi = self.corner_psi(point);
        let mut neighbors: Vec<(usize, f64)> = Vec::with_capacity(4);
        for j in 1..=m {
            let y = j as f64 * h;
            for i in 1..=m {
                let x = i as f64 * h;
                let (vn_e, vn_w, vn_n, vn_s) = self.face_velocities(&psi, i, j);
                let gamma_e = self.diffusion(point, x + 0.5 * h, y);
                let gamma_w = self.diffusion(point, x - 0.5 * h, y);
                let gamma_n = self.diffusion(point, x, y + 0.5 * h);
                let gamma_s = self.diffusion(point, x, y - 0.5 * h);

                let mut diag = gamma_e + gamma_w + gamma_n + gamma_s;
                neighbors.clear();
                let faces = [
                    (vn_e, gamma_e, (i < m).then(|| self.unknown(i + 1, j))),
                    (vn_w, gamma_w, (i > 1).then(|| self.unknown(i - 1, j))),
                    (vn_n, gamma_n, (j < m).then(|| self.unknown(i, j + 1))),
                    (vn_s, gamma_s, (j > 1).then(|| self.unknown(i, j - 1))),
                ];
                for (vn, gamma, neighbor) in faces {
                    let flux = h * vn;
                    let (diag_adv, off_adv) = if self.upwind {
                        (flux.max(0.0), flux.min(0.0))
                    } else {
                        (0.5 * flux, 0.5 * flux)
                    };
                    diag += diag_adv;
                    if let Some(col) = neighbor {
                        neighbors.push((col, -gamma + off_adv));
                    }
                }
                visit(self.unknown(i, j), diag, &neighbors);
            }
        }
        Ok(())
    }

    /// Largest absolute discrete divergence of the face velocity field over
    /// all cells; zero to roundoff by the streamfunction construction.
    pub fn discrete_divergence_max(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        let psi = self.corner_psi(point);
        let h = self.h();
        let mut max = 0.0f64;
        for j in 1..=self.m {
            for i in 1..=self.m {
                let (vn_e, vn_w, vn_n, vn_s) = self.face_velocities(&psi, i, j);
                max = max.max(((vn_e + vn_w + vn_n + vn_s) / h).abs());
            }
        }
        Ok(max)
    }
}

impl ParameterizedSystem for AdvectionDiffusionProblem {
    fn dim_parameters(&self) -> usize {
        self.d
    }

    fn dim_state(&self) -> usize {
        self.m * self.m
    }

    fn apply_at(&self, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        assert_eq!(v.len(), self.dim_state());
        assert_eq!(out.len(), self.dim_state());
        self.with_rows(point, |row, diag, neighbors| {
            let mut acc = diag * v[row];
            for &(col, coeff) in neighbors {
                acc += coeff * v[col];
            }
            out[row] = acc;
        })
    }

    fn rhs_at(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_point(point)?;
        let h2 = self.h() * self.h();
        out.fill(h2);
        Ok(())
    }

    fn is_symmetric(&self) -> bool {
        false
    }

    fn supports_assemble(&self) -> bool {
        true
    }

    fn assemble_at(&self, point: &[f64]) -> Result<AssembledMatrix> {
        let n = self.dim_state();
        let mut triplets = Vec::with_capacity(5 * n);
        self.with_rows(point, |row, diag, neighbors| {
            triplets.push((row, row, diag));
            for &(col, coeff) in neighbors {
                triplets.push((row, col, coeff));
            }
        })?;
        Ok(AssembledMatrix::Sparse(CsrMatrix::from_triplets(
            n, n, &triplets,
        )))
    }
}
