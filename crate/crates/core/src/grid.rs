//! Phase-space grids and the distribution-function container.
//!
//! A grid is a list of periodic axes, space axes first (`x` or `x1, x2`)
//! followed by velocity axes (`v` or `v1, v2`). Spline grids store point
//! values at `lower + i*h`; dG grids store nodal values at the Gauss-Legendre
//! nodes of each cell, nodes innermost within a cell.

use rayon::prelude::*;

use crate::dg::gauss_nodes;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisKind {
    Space,
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    /// Grid points for spline grids, cells for dG grids.
    pub count: usize,
    pub kind: AxisKind,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, count: usize, kind: AxisKind) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
            return Err(Error::InvalidAxis(format!("bounds [{lower}, {upper}] are not increasing")));
        }
        if count < 4 {
            return Err(Error::InvalidAxis(format!("count {count} < 4")));
        }
        Ok(Self { lower, upper, count, kind })
    }

    pub fn space(lower: f64, upper: f64, count: usize) -> Result<Self> {
        Self::new(lower, upper, count, AxisKind::Space)
    }

    pub fn velocity(lower: f64, upper: f64, count: usize) -> Result<Self> {
        Self::new(lower, upper, count, AxisKind::Velocity)
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    /// Grid spacing (spline) or cell width (dG).
    pub fn h(&self) -> f64 {
        self.length() / self.count as f64
    }

    /// Wraps `x` into `[lower, upper)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let len = self.length();
        let mut y = (x - self.lower).rem_euclid(len);
        if y >= len {
            y = 0.0;
        }
        self.lower + y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Spline,
    Dg,
}

impl Method {
    pub fn code(self) -> u8 {
        match self {
            Method::Spline => 0,
            Method::Dg => 1,
        }
    }
}

/// A discretization choice: spline, or dG of a given order (`degree + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub method: Method,
    pub degree: usize,
}

impl Scheme {
    pub const SPLINE: Scheme = Scheme { method: Method::Spline, degree: 0 };

    /// dG with `order` nodes per cell.
    pub fn dg(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_DG_DEGREE + 1 {
            return Err(Error::InvalidGrid(format!("dG order must be in 1..={}, got {order}", MAX_DG_DEGREE + 1)));
        }
        Ok(Scheme { method: Method::Dg, degree: order - 1 })
    }

    pub fn nodes_per_cell(&self) -> usize {
        match self.method {
            Method::Spline => 1,
            Method::Dg => self.degree + 1,
        }
    }

    /// `spline`, or `dg` followed by the order, e.g. `dg4`.
    pub fn label(&self) -> String {
        match self.method {
            Method::Spline => "spline".into(),
            Method::Dg => format!("dg{}", self.degree + 1),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "spline" {
            return Some(Scheme::SPLINE);
        }
        s.strip_prefix("dg")?.parse().ok().and_then(|o| Scheme::dg(o).ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    pub method: Method,
    /// Polynomial degree per cell; ignored for spline grids.
    pub dg_degree: usize,
}

pub const MAX_DG_DEGREE: usize = 8;

impl GridSpec {
    pub fn new(axes: Vec<Axis>, method: Method, dg_degree: usize) -> Result<Self> {
        let grid = Self { axes, method, dg_degree: if method == Method::Dg { dg_degree } else { 0 } };
        grid.validate()?;
        Ok(grid)
    }

    pub fn spline(axes: Vec<Axis>) -> Result<Self> {
        Self::new(axes, Method::Spline, 0)
    }

    pub fn dg(axes: Vec<Axis>, degree: usize) -> Result<Self> {
        Self::new(axes, Method::Dg, degree)
    }

    fn validate(&self) -> Result<()> {
        let d = self.axes.len();
        if d != 2 && d != 4 {
            return Err(Error::InvalidGrid(format!("expected 2 or 4 axes, got {d}")));
        }
        let half = d / 2;
        for (i, ax) in self.axes.iter().enumerate() {
            let want = if i < half { AxisKind::Space } else { AxisKind::Velocity };
            if ax.kind != want {
                return Err(Error::InvalidGrid(format!("axis {i} should be {want:?}, found {:?}", ax.kind)));
            }
            if !(ax.upper > ax.lower) || ax.count < 4 {
                return Err(Error::InvalidGrid(format!("axis {i} is degenerate")));
            }
        }
        if self.method == Method::Dg && self.dg_degree > MAX_DG_DEGREE {
            return Err(Error::InvalidGrid(format!(
                "dG degree {} exceeds supported maximum {MAX_DG_DEGREE}",
                self.dg_degree
            )));
        }
        Ok(())
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    /// Number of space (equivalently velocity) dimensions.
    pub fn space_dims(&self) -> usize {
        self.axes.len() / 2
    }

    /// Values stored per cell along one axis: `degree + 1` for dG, 1 for spline.
    pub fn nodes_per_cell(&self) -> usize {
        self.scheme().nodes_per_cell()
    }

    pub fn scheme(&self) -> Scheme {
        Scheme { method: self.method, degree: self.dg_degree }
    }

    pub fn dof(&self, axis: usize) -> usize {
        self.axes[axis].count * self.nodes_per_cell()
    }

    pub fn dofs(&self) -> Vec<usize> {
        (0..self.ndim()).map(|a| self.dof(a)).collect()
    }

    pub fn total_len(&self) -> usize {
        self.dofs().iter().product()
    }

    /// Node positions on the unit reference cell; `[0.0]` for spline grids.
    pub fn reference_nodes(&self) -> Vec<f64> {
        match self.method {
            Method::Spline => vec![0.0],
            Method::Dg => gauss_nodes(self.dg_degree + 1).0,
        }
    }

    /// Coordinates of all stored values along `axis`.
    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        let ax = &self.axes[axis];
        let h = ax.h();
        let nodes = self.reference_nodes();
        let mut out = Vec::with_capacity(self.dof(axis));
        for cell in 0..ax.count {
            let left = ax.lower + cell as f64 * h;
            for xi in &nodes {
                out.push(left + xi * h);
            }
        }
        out
    }

    /// Native quadrature weights along `axis` (rectangle rule or `h*w_j`).
    pub fn weights(&self, axis: usize) -> Vec<f64> {
        let ax = &self.axes[axis];
        let h = ax.h();
        match self.method {
            Method::Spline => vec![h; ax.count],
            Method::Dg => {
                let (_, w) = gauss_nodes(self.dg_degree + 1);
                (0..ax.count).flat_map(|_| w.iter().map(move |wj| h * wj)).collect()
            }
        }
    }

    /// The grid restricted to its space axes.
    pub fn space_axes(&self) -> &[Axis] {
        &self.axes[..self.space_dims()]
    }

    pub fn velocity_axes(&self) -> &[Axis] {
        &self.axes[self.space_dims()..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutStrategy {
    /// Physically transpose so the sweep axis is contiguous before each sweep.
    Transpose,
    /// Sweep in place through strided views, in blocks of `cache_block` lines.
    Strided,
}

impl LayoutStrategy {
    pub fn name(self) -> &'static str {
        match self {
            LayoutStrategy::Transpose => "transpose",
            LayoutStrategy::Strided => "strided",
        }
    }
}

pub const DEFAULT_CACHE_BLOCK: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutDescriptor {
    pub strategy: LayoutStrategy,
    /// Axis indices ordered from the fastest-varying (stride 1) to the slowest.
    pub dim_order: Vec<usize>,
    /// Stride of each axis, indexed by axis.
    pub strides: Vec<usize>,
    pub cache_block: usize,
}

impl LayoutDescriptor {
    /// Canonical order: `x1` fastest, last velocity axis slowest.
    pub fn canonical(grid: &GridSpec, strategy: LayoutStrategy) -> Self {
        Self::with_order(grid, strategy, (0..grid.ndim()).collect(), DEFAULT_CACHE_BLOCK)
            .expect("identity permutation is always valid")
    }

    pub fn with_order(
        grid: &GridSpec,
        strategy: LayoutStrategy,
        dim_order: Vec<usize>,
        cache_block: usize,
    ) -> Result<Self> {
        if cache_block == 0 {
            return Err(Error::InvalidLayout("cache_block must be positive".into()));
        }
        let strides = strides_for(&grid.dofs(), &dim_order)?;
        Ok(Self { strategy, dim_order, strides, cache_block })
    }

    pub fn is_canonical(&self) -> bool {
        self.dim_order.iter().enumerate().all(|(i, &a)| i == a)
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let expected = strides_for(&grid.dofs(), &self.dim_order)?;
        if expected != self.strides {
            return Err(Error::InvalidLayout(format!(
                "strides {:?} inconsistent with order {:?}",
                self.strides, self.dim_order
            )));
        }
        if self.cache_block == 0 {
            return Err(Error::InvalidLayout("cache_block must be positive".into()));
        }
        Ok(())
    }
}

fn strides_for(dofs: &[usize], dim_order: &[usize]) -> Result<Vec<usize>> {
    let d = dofs.len();
    let mut seen = vec![false; d];
    if dim_order.len() != d {
        return Err(Error::InvalidLayout(format!("dim_order {dim_order:?} has wrong length for {d} axes")));
    }
    for &a in dim_order {
        if a >= d || seen[a] {
            return Err(Error::InvalidLayout(format!("dim_order {dim_order:?} is not a permutation")));
        }
        seen[a] = true;
    }
    let mut strides = vec![0; d];
    let mut s = 1;
    for &a in dim_order {
        strides[a] = s;
        s *= dofs[a];
    }
    Ok(strides)
}

/// Nodal or point values of the distribution function `f` on a phase-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    pub data: Vec<f64>,
    pub grid: GridSpec,
    pub layout: LayoutDescriptor,
}

impl DistributionField {
    pub fn zeros(grid: GridSpec, layout: LayoutDescriptor) -> Result<Self> {
        layout.validate(&grid)?;
        let data = vec![0.0; grid.total_len()];
        Ok(Self { data, grid, layout })
    }

    pub fn from_data(grid: GridSpec, layout: LayoutDescriptor, data: Vec<f64>) -> Result<Self> {
        layout.validate(&grid)?;
        if data.len() != grid.total_len() {
            return Err(Error::DimensionMismatch(format!(
                "data has {} values, grid needs {}",
                data.len(),
                grid.total_len()
            )));
        }
        Ok(Self { data, grid, layout })
    }

    /// Samples `f(coords)` at every stored node.
    pub fn from_fn<F>(grid: GridSpec, layout: LayoutDescriptor, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let mut field = Self::zeros(grid, layout)?;
        let coords: Vec<Vec<f64>> = (0..field.grid.ndim()).map(|a| field.grid.coordinates(a)).collect();
        let dofs = field.grid.dofs();
        let strides = field.layout.strides.clone();
        let order = field.layout.dim_order.clone();
        field.data.par_iter_mut().enumerate().for_each_init(
            || vec![0.0; dofs.len()],
            |point, (flat, v)| {
                let mut rem = flat;
                for &a in &order {
                    let i = rem % dofs[a];
                    rem /= dofs[a];
                    point[a] = coords[a][i];
                }
                debug_assert_eq!(strides.len(), dofs.len());
                *v = f(point);
            },
        );
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn size_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }

    /// Flat offset of a per-axis multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.layout.strides).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Physically reorders the data into `dim_order`, keeping the strategy.
    pub fn transpose_to(&mut self, dim_order: &[usize]) -> Result<()> {
        if dim_order == self.layout.dim_order.as_slice() {
            return Ok(());
        }
        let target = LayoutDescriptor::with_order(
            &self.grid,
            self.layout.strategy,
            dim_order.to_vec(),
            self.layout.cache_block,
        )?;
        let data = permute(&self.data, &self.grid.dofs(), &self.layout.strides, &target);
        self.data = data;
        self.layout = target;
        Ok(())
    }

    /// Data in canonical order (x1 fastest), copying only when needed.
    pub fn canonical_data(&self) -> std::borrow::Cow<'_, [f64]> {
        if self.layout.is_canonical() {
            std::borrow::Cow::Borrowed(&self.data)
        } else {
            let target = LayoutDescriptor::canonical(&self.grid, self.layout.strategy);
            std::borrow::Cow::Owned(permute(&self.data, &self.grid.dofs(), &self.layout.strides, &target))
        }
    }

    /// Converts into canonical order in place.
    pub fn make_canonical(&mut self) {
        let order: Vec<usize> = (0..self.grid.ndim()).collect();
        self.transpose_to(&order).expect("canonical order is valid");
    }

    pub fn check_finite(&self, stage: &str) -> Result<()> {
        if self.data.par_iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(stage.to_string()))
        }
    }
}

/// Out-of-place copy of `src` (laid out with `src_strides`) into `target` order.
fn permute(src: &[f64], dofs: &[usize], src_strides: &[usize], target: &LayoutDescriptor) -> Vec<f64> {
    let fast = target.dim_order[0];
    let n_fast = dofs[fast];
    let fast_stride = src_strides[fast];
    let rest: Vec<usize> = target.dim_order[1..].to_vec();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(n_fast).enumerate().for_each(|(line, chunk)| {
        let mut rem = line;
        let mut base = 0;
        for &a in &rest {
            base += (rem % dofs[a]) * src_strides[a];
            rem /= dofs[a];
        }
        for (i, o) in chunk.iter_mut().enumerate() {
            *o = src[base + i * fast_stride];
        }
    });
    out
}
