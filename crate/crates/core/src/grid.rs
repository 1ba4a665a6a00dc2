use crate::error::{Error, Result};
use crate::problem::{CauchyCase, RectDomain};

/// Uniform grid on `[a, b] × [0, 1]` with `n_x × n_y` nodes.
///
/// Node `(j, n)` (0-based) sits at `x_j = a + j·dx`, `y_n = n·dy`. Vectors
/// over the grid are stored x-fastest: entry `n·n_x + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    domain: RectDomain,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    gamma: f64,
}

impl Grid2D {
    /// `n_x ≥ 5` because the one-sided boundary stencil spans four nodes.
    pub fn new(domain: RectDomain, nx: usize, ny: usize) -> Result<Self> {
        if nx < 5 || ny < 3 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        let dx = domain.width() / (nx - 1) as f64;
        let dy = 1.0 / (ny - 1) as f64;
        Ok(Self {
            domain,
            nx,
            ny,
            dx,
            dy,
            gamma: dy * dy / (dx * dx),
        })
    }

    pub fn for_case(case: &CauchyCase, nx: usize, ny: usize) -> Result<Self> {
        Self::new(case.domain(), nx, ny)
    }

    pub fn domain(&self) -> RectDomain {
        self.domain
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// `γ = dy² / dx²`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, j: usize) -> f64 {
        self.domain.a() + j as f64 * self.dx
    }

    pub fn y(&self, n: usize) -> f64 {
        n as f64 * self.dy
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    pub fn index(&self, j: usize, n: usize) -> usize {
        n * self.nx + j
    }

    /// Level index of `y`, if `y` lies within `dy/2` of a grid level.
    pub fn level_of(&self, y: f64) -> Result<usize> {
        let t = y / self.dy;
        let n = t.round();
        if !(y.is_finite() && n >= 0.0 && n <= (self.ny - 1) as f64 && (t - n).abs() < 0.5) {
            return Err(Error::OffGrid { y, dy: self.dy });
        }
        Ok(n as usize)
    }

    /// Samples `field(x, y)` at every node, x-fastest.
    pub fn sample(&self, field: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for n in 0..self.ny {
            let y = self.y(n);
            for j in 0..self.nx {
                out.push(field(self.x(j), y));
            }
        }
        out
    }

    /// Samples `field(x)` along the `x` nodes.
    pub fn sample_line(&self, field: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nx).map(|j| field(self.x(j))).collect()
    }

    /// Finer grid with every step halved: `(2n_x - 1, 2n_y - 1)`.
    pub fn refined(&self) -> Self {
        Self::new(self.domain, 2 * self.nx - 1, 2 * self.ny - 1).expect("refining a valid grid")
    }
}
