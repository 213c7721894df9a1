//! Uniform grids, sampled functions and trapezoid quadrature.

use crate::error::{domain, Error, Result};

/// Default number of points per integration interval.
pub const DEFAULT_POINTS: usize = 4096;

/// A uniform grid of `len` points covering `[start, end]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    start: f64,
    end: f64,
    len: usize,
}

impl Grid {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(domain(format!(
                "grid interval [{start}, {end}] is empty or non-finite"
            )));
        }
        if len < 2 {
            return Err(domain(format!("grid needs at least 2 points, got {len}")));
        }
        Ok(Self { start, end, len })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.len - 1) as f64
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    /// The `i`-th node. The last node is exactly `end`.
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.len {
            self.end
        } else {
            self.start + (self.end - self.start) * (i as f64) / ((self.len - 1) as f64)
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    /// Trapezoid weights: `h/2` at both ends, `h` inside.
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        let h = self.step();
        if i == 0 || i + 1 == self.len {
            0.5 * h
        } else {
            h
        }
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: self.points().map(f).collect(),
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() <= 1e-12 * self.width()
            && (self.end - other.end).abs() <= 1e-12 * self.width()
    }
}

/// Trapezoid rule for uniformly spaced samples with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// A real function sampled on a uniform [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.step())
    }

    /// `∫ f(x)^2 dx`.
    pub fn energy(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        trapezoid(&sq, self.grid.step())
    }

    /// `∫ f(x) g(x) dx` for functions on the same grid.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(trapezoid(&prod, self.grid.step()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// Returns the function divided by its integral.
    pub fn normalized(&self) -> Result<GridFunction> {
        let z = self.integral();
        if !(z.is_finite() && z > 0.0) {
            return Err(domain(format!("cannot normalize: integral is {z}")));
        }
        Ok(self.scaled(1.0 / z))
    }

    /// Moments `(mean, variance)` treating the samples as a density.
    pub fn mean_and_variance(&self) -> (f64, f64) {
        let z = self.integral();
        let xs: Vec<f64> = self.grid.points().collect();
        let m1: Vec<f64> = xs.iter().zip(&self.values).map(|(x, p)| x * p).collect();
        let mean = trapezoid(&m1, self.grid.step()) / z;
        let m2: Vec<f64> = xs
            .iter()
            .zip(&self.values)
            .map(|(x, p)| (x - mean) * (x - mean) * p)
            .collect();
        (mean, trapezoid(&m2, self.grid.step()) / z)
    }

    /// Second-order finite-difference derivative: central inside, one-sided at the ends.
    pub fn derivative(&self) -> GridFunction {
        let v = &self.values;
        let n = v.len();
        let h = self.grid.step();
        let mut d = vec![0.0; n];
        if n == 2 {
            let s = (v[1] - v[0]) / h;
            d[0] = s;
            d[1] = s;
        } else {
            d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
            d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
            for i in 1..n - 1 {
                d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
            }
        }
        GridFunction {
            grid: self.grid,
            values: d,
        }
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
