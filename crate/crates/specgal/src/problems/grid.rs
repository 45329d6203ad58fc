/// A regular node grid on the unit square `[0,1]^2`.
///
/// Nodes are ordered row by row with the `x` index fastest: node `(i, j)`
/// (with `i` the x-index and `j` the y-index) has linear index `j*nx + i`
/// and coordinates `(i/(nx-1), j/(ny-1))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid2d {
    nx: usize,
    ny: usize,
}

impl Grid2d {
    pub fn uniform(nx: usize, ny: usize) -> Self {
        assert!(nx >= 2 && ny >= 2, "grid needs at least 2 nodes per side");
        Self { nx, ny }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn coords(&self, index: usize) -> [f64; 2] {
        let i = index % self.nx;
        let j = index / self.nx;
        [
            i as f64 / (self.nx - 1) as f64,
            j as f64 / (self.ny - 1) as f64,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let grid = Grid2d::uniform(4, 3);
        assert_eq!(grid.n_nodes(), 12);
        assert_eq!(grid.node_index(0, 0), 0);
        assert_eq!(grid.node_index(3, 0), 3);
        assert_eq!(grid.node_index(0, 1), 4);
        assert_eq!(grid.coords(0), [0.0, 0.0]);
        assert_eq!(grid.coords(3), [1.0, 0.0]);
        assert_eq!(grid.coords(11), [1.0, 1.0]);
    }
}
