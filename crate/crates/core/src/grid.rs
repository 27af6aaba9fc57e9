//! Uniform periodic grid, grid-attached fields and spectral differentiation.
//!
//! Storage is row-major with `x` fastest: the value at column `i` (x) and
//! row `j` (y) sits at `j * nx + i`. Coordinates are centred on the box, so
//! `x_i = -lx/2 + i dx` and the box centre is the grid point `(nx/2, ny/2)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft;

#[derive(Debug)]
pub struct SpectralGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dx: f64,
    dy: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    phi_map: Vec<f64>,
    r_map: Vec<f64>,
    fft_x: Fft,
    fft_y: Fft,
}

/// Angular wavenumbers in FFT order, Nyquist mode negative: `[0, 1, .., n/2-1, -n/2, .., -1] * 2 pi / l`.
fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..n)
        .map(|m| {
            let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
            signed as f64 * dk
        })
        .collect()
}

impl SpectralGrid {
    /// Builds a grid; sizes must be powers of two no smaller than 4.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Arc<Self>> {
        for (axis, n) in [('x', nx), ('y', ny)] {
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::GridSize { axis, size: n });
            }
        }
        for (axis, l) in [('x', lx), ('y', ly)] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::GridLength { axis, value: l });
            }
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let mut phi_map = Vec::with_capacity(nx * ny);
        let mut r_map = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = -0.5 * ly + j as f64 * dy;
            for i in 0..nx {
                let x = -0.5 * lx + i as f64 * dx;
                phi_map.push(libm::atan2(y, x));
                r_map.push(libm::hypot(x, y));
            }
        }
        Ok(Arc::new(Self {
            nx,
            ny,
            lx,
            ly,
            dx,
            dy,
            kx: wavenumbers(nx, lx),
            ky: wavenumbers(ny, ly),
            phi_map,
            r_map,
            fft_x: Fft::new(nx),
            fft_y: Fft::new(ny),
        }))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// Azimuthal angle about the box centre, in (-pi, pi].
    pub fn phi_map(&self) -> &[f64] {
        &self.phi_map
    }

    pub fn r_map(&self) -> &[f64] {
        &self.r_map
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// `(i, j)` of a flat index.
    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.lx + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        -0.5 * self.ly + j as f64 * self.dy
    }

    /// Position of a flat index relative to the box centre.
    #[inline]
    pub fn position(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords(idx);
        (self.x(i), self.y(j))
    }

    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        let (i, j) = self.coords(idx);
        self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]
    }

    /// First-derivative multiplier along x; zero on the Nyquist mode so the
    /// derivative of a real field stays real.
    #[inline]
    pub fn kx_derivative(&self, i: usize) -> f64 {
        if i == self.nx / 2 {
            0.0
        } else {
            self.kx[i]
        }
    }

    #[inline]
    pub fn ky_derivative(&self, j: usize) -> f64 {
        if j == self.ny / 2 {
            0.0
        } else {
            self.ky[j]
        }
    }

    /// Kinetic phase-sampling bound `min(dx, dy)^2 / pi` on the time step.
    pub fn dt_advisory(&self) -> f64 {
        let h = self.dx.min(self.dy);
        h * h / PI
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        core::ptr::eq(self, other)
            || (self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly)
    }

    pub fn fft2(&self, data: &mut [Complex64]) {
        self.fft_rows(data, false);
        self.fft_cols(data, false);
    }

    pub fn ifft2(&self, data: &mut [Complex64]) {
        self.fft_rows(data, true);
        self.fft_cols(data, true);
    }

    /// 1D transforms along x for every row.
    pub fn fft_rows(&self, data: &mut [Complex64], inverse: bool) {
        for row in data.chunks_exact_mut(self.nx) {
            if inverse {
                self.fft_x.inverse(row);
            } else {
                self.fft_x.forward(row);
            }
        }
    }

    /// 1D transforms along y for every column.
    pub fn fft_cols(&self, data: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(self.fft_y.len(), ny);
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for i in 0..nx {
            for (j, c) in col.iter_mut().enumerate() {
                *c = data[j * nx + i];
            }
            if inverse {
                self.fft_y.inverse(&mut col);
            } else {
                self.fft_y.forward(&mut col);
            }
            for (j, c) in col.iter().enumerate() {
                data[j * nx + i] = *c;
            }
        }
    }

    /// In-place spectral derivative along x (row transforms only).
    pub fn derivative_x_in_place(&self, data: &mut [Complex64]) {
        self.fft_rows(data, false);
        for row in data.chunks_exact_mut(self.nx) {
            for (i, v) in row.iter_mut().enumerate() {
                *v *= Complex64::new(0.0, self.kx_derivative(i));
            }
        }
        self.fft_rows(data, true);
    }

    /// In-place spectral derivative along y (column transforms only).
    pub fn derivative_y_in_place(&self, data: &mut [Complex64]) {
        self.fft_cols(data, false);
        for (j, row) in data.chunks_exact_mut(self.nx).enumerate() {
            let k = Complex64::new(0.0, self.ky_derivative(j));
            for v in row.iter_mut() {
                *v *= k;
            }
        }
        self.fft_cols(data, true);
    }

    pub fn laplacian_in_place(&self, data: &mut [Complex64]) {
        self.fft2(data);
        for (idx, v) in data.iter_mut().enumerate() {
            *v *= -self.k_squared(idx);
        }
        self.ifft2(data);
    }
}

#[inline]
pub(crate) fn cis(theta: f64) -> Complex64 {
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

/// Complex amplitude sampled on a grid.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: &Arc<SpectralGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength { expected: grid.len(), actual: values.len() });
        }
        Ok(Self { grid: grid.clone(), values })
    }

    /// Samples `f(x, y)` at every grid point (coordinates relative to the box centre).
    pub fn from_fn(grid: &Arc<SpectralGrid>, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.position(idx);
                f(x, y)
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    /// `sum |f|^2 dx dy`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        let m = self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        libm::sqrt(m)
    }

    /// Largest amplitude on the outermost rows and columns relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut edge = 0.0f64;
        for i in 0..nx {
            edge = edge.max(self.at(i, 0).norm()).max(self.at(i, ny - 1).norm());
        }
        for j in 0..ny {
            edge = edge.max(self.at(0, j).norm()).max(self.at(nx - 1, j).norm());
        }
        edge / peak
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn ensure_same_grid(&self, other: &SpectralGrid) -> Result<()> {
        if self.grid.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Real scalar sampled on a grid (amplitude profiles, potentials, densities).
#[derive(Debug, Clone)]
pub struct RealField {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: f64) -> Self {
        Self { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    pub fn from_values(grid: &Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength { expected: grid.len(), actual: values.len() });
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Arc<SpectralGrid>, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.position(idx);
                f(x, y)
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Largest absolute value over finite entries.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn ensure_same_grid(&self, other: &SpectralGrid) -> Result<()> {
        if self.grid.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Real 2-vector field, e.g. a Hermitian gauge potential.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: RealField,
    pub y: RealField,
}

impl VectorField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self { x: RealField::zeros(grid), y: RealField::zeros(grid) }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.x.grid()
    }

    pub fn magnitude(&self, idx: usize) -> f64 {
        libm::hypot(self.x.values[idx], self.y.values[idx])
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.x.values.len()).map(|i| self.magnitude(i)).filter(|v| v.is_finite()).fold(0.0, f64::max)
    }
}

/// Complex 2-vector field, e.g. the non-Hermitian vector potentials.
#[derive(Debug, Clone)]
pub struct ComplexVectorField {
    pub x: ComplexField,
    pub y: ComplexField,
}

impl ComplexVectorField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self { x: ComplexField::zeros(grid), y: ComplexField::zeros(grid) }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.x.grid()
    }

    /// `|A_x|^2 + |A_y|^2` at a point.
    pub fn norm_sqr(&self, idx: usize) -> f64 {
        self.x.values[idx].norm_sqr() + self.y.values[idx].norm_sqr()
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.x.values.len()).map(|i| libm::sqrt(self.norm_sqr(i))).filter(|v| v.is_finite()).fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> VectorField {
        let grid = self.grid();
        VectorField {
            x: RealField { grid: grid.clone(), values: self.x.values.iter().map(|v| v.re).collect() },
            y: RealField { grid: grid.clone(), values: self.y.values.iter().map(|v| v.re).collect() },
        }
    }

    pub fn imag_part(&self) -> VectorField {
        let grid = self.grid();
        VectorField {
            x: RealField { grid: grid.clone(), values: self.x.values.iter().map(|v| v.im).collect() },
            y: RealField { grid: grid.clone(), values: self.y.values.iter().map(|v| v.im).collect() },
        }
    }
}

/// Set of grid points on which derived quantities are evaluated.
#[derive(Debug, Clone)]
pub struct Mask {
    grid: Arc<SpectralGrid>,
    inside: Vec<bool>,
}

impl Mask {
    pub fn all(grid: &Arc<SpectralGrid>) -> Self {
        Self { grid: grid.clone(), inside: vec![true; grid.len()] }
    }

    pub fn from_fn(grid: &Arc<SpectralGrid>, mut f: impl FnMut(usize) -> bool) -> Self {
        Self { grid: grid.clone(), inside: (0..grid.len()).map(&mut f).collect() }
    }

    /// Every point except a disc of `radius` around the box centre.
    pub fn outside_core(grid: &Arc<SpectralGrid>, radius: f64) -> Self {
        Self::from_fn(grid, |idx| grid.r_map()[idx] >= radius)
    }

    /// The default axis exclusion radius `2 max(dx, dy)`.
    pub fn default_core_radius(grid: &SpectralGrid) -> f64 {
        2.0 * grid.dx().max(grid.dy())
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|b| **b).count()
    }

    pub fn intersect(&self, other: &Mask) -> Mask {
        Mask {
            grid: self.grid.clone(),
            inside: self.inside.iter().zip(&other.inside).map(|(a, b)| *a && *b).collect(),
        }
    }
}

/// Spectral Laplacian: inverse transform of `-(kx^2 + ky^2) F`.
pub fn laplacian(f: &ComplexField) -> ComplexField {
    let mut out = f.clone();
    f.grid.laplacian_in_place(&mut out.values);
    out
}

pub fn partial_x(f: &ComplexField) -> ComplexField {
    let mut out = f.clone();
    f.grid.derivative_x_in_place(&mut out.values);
    out
}

pub fn partial_y(f: &ComplexField) -> ComplexField {
    let mut out = f.clone();
    f.grid.derivative_y_in_place(&mut out.values);
    out
}

/// Spectral gradient `(df/dx, df/dy)`.
pub fn gradient(f: &ComplexField) -> (ComplexField, ComplexField) {
    (partial_x(f), partial_y(f))
}

/// Band-limited trigonometric interpolant of a field and its gradient at
/// arbitrary points.
#[derive(Debug, Clone)]
pub struct SpectralInterpolator {
    grid: Arc<SpectralGrid>,
    spectrum: Vec<Complex64>,
}

impl SpectralInterpolator {
    pub fn new(f: &ComplexField) -> Self {
        let grid = f.grid.clone();
        let mut spectrum = f.values.clone();
        grid.fft2(&mut spectrum);
        let scale = 1.0 / grid.len() as f64;
        for v in spectrum.iter_mut() {
            *v *= scale;
        }
        Self { grid, spectrum }
    }

    /// Value and gradient at `(x, y)` relative to the box centre.
    pub fn eval(&self, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
        let g = &*self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let sx = x + 0.5 * g.lx;
        let sy = y + 0.5 * g.ly;
        let ex: Vec<Complex64> = (0..nx)
            .map(|i| if i == nx / 2 { Complex64::new(libm::cos(g.kx[i] * sx), 0.0) } else { cis(g.kx[i] * sx) })
            .collect();
        let mut f = Complex64::new(0.0, 0.0);
        let mut fx = f;
        let mut fy = f;
        for j in 0..ny {
            let row = &self.spectrum[j * nx..(j + 1) * nx];
            let mut g0 = Complex64::new(0.0, 0.0);
            let mut g1 = g0;
            for i in 0..nx {
                let t = row[i] * ex[i];
                g0 += t;
                g1 += t * Complex64::new(0.0, g.kx_derivative(i));
            }
            let ey = if j == ny / 2 { Complex64::new(libm::cos(g.ky[j] * sy), 0.0) } else { cis(g.ky[j] * sy) };
            f += g0 * ey;
            fx += g1 * ey;
            fy += g0 * ey * Complex64::new(0.0, g.ky_derivative(j));
        }
        (f, fx, fy)
    }
}
