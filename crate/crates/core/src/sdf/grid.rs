use crate::Vec3;

use super::SdfError;

/// Grid coordinates closer than this to an integer are treated as lying on
/// the node, so node positions computed in floating point sample exactly.
const NODE_SNAP: f64 = 1e-9;

/// Domain centers within this many spacings of zero are snapped to zero, so
/// grids produced for the `[-1, 1]^3` domain sample mirror-symmetrically
/// even after a round trip through single precision.
const CENTER_SNAP: f64 = 1e-6;

/// Uniformly sampled signed distance volume.
///
/// Node `(i, j, k)` lives at linear index `i + nx * (j + ny * k)`. Values are
/// stored in single precision, matching the on-disk format, and all
/// arithmetic on them happens in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    dims: [usize; 3],
    origin: Vec3,
    spacing: f64,
    original_size: Vec3,
    values: Vec<f32>,
    center: Vec3,
}

/// Which axis to flip in [`super::mirror_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Interpolation stencil along one axis: `near` gets weight `1 - t`,
/// `far` gets weight `t`.
#[derive(Debug, Clone, Copy)]
struct AxisStencil {
    near: usize,
    far: usize,
    t: f64,
}

impl SdfGrid {
    /// Builds a grid after checking every structural invariant: positive
    /// spacing, at least two nodes per axis, finite values, and a
    /// nonnegative outermost shell.
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: f64, original_size: Vec3, values: Vec<f32>) -> Result<Self, SdfError> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(SdfError::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(SdfError::InvalidGrid(format!("every dimension needs at least 2 nodes, got {dims:?}")));
        }
        if !origin.iter().all(|c| c.is_finite()) || !original_size.iter().all(|c| c.is_finite()) {
            return Err(SdfError::InvalidGrid("origin and original size must be finite".into()));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if values.len() != expected {
            return Err(SdfError::InvalidGrid(format!("expected {expected} values for dims {dims:?}, got {}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SdfError::InvalidGrid(format!("value {i} is not finite")));
        }
        let mut center = Vec3::zeros();
        for a in 0..3 {
            let c = origin[a] + (dims[a] - 1) as f64 * 0.5 * spacing;
            center[a] = if c.abs() <= CENTER_SNAP * spacing { 0.0 } else { c };
        }
        let grid = SdfGrid { dims, origin, spacing, original_size, values, center };
        if let Some((i, j, k)) = grid.negative_shell_node() {
            return Err(SdfError::InvalidGrid(format!("boundary node ({i}, {j}, {k}) is inside the surface ({})", grid.value(i, j, k))));
        }
        Ok(grid)
    }

    /// Samples `field` at every node.
    pub fn from_fn(
        dims: [usize; 3],
        origin: Vec3,
        spacing: f64,
        original_size: Vec3,
        field: impl Fn(&Vec3) -> f64,
    ) -> Result<Self, SdfError> {
        // Node positions need the snapped center, so build a probe first.
        let probe = SdfGrid::new(dims, origin, spacing, original_size, vec![0.0; dims[0] * dims[1] * dims[2]])?;
        let mut values = Vec::with_capacity(probe.len());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(field(&probe.node_position(i, j, k)) as f32);
                }
            }
        }
        SdfGrid::new(dims, origin, spacing, original_size, values)
    }

    /// Samples `field` on `resolution^3` nodes spanning the local `[-1, 1]^3`
    /// domain, laid out symmetrically about the local origin.
    pub fn from_fn_unit_cube(resolution: usize, original_size: Vec3, field: impl Fn(&Vec3) -> f64) -> Result<Self, SdfError> {
        let (origin, spacing) = unit_cube_layout(resolution)?;
        SdfGrid::from_fn([resolution; 3], origin, spacing, original_size, field)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn original_size(&self) -> Vec3 {
        self.original_size
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Center of the local domain (exactly zero for grids laid out on
    /// `[-1, 1]^3`).
    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)] as f64
    }

    /// Local-space position of node `(i, j, k)`.
    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let idx = [i, j, k];
        Vec3::from_fn(|a, _| {
            let c = (self.dims[a] - 1) as f64 * 0.5;
            self.center[a] + (idx[a] as f64 - c) * self.spacing
        })
    }

    /// Half of the domain edge length along each axis.
    pub fn half_extent(&self) -> Vec3 {
        Vec3::from_fn(|a, _| (self.dims[a] - 1) as f64 * 0.5 * self.spacing)
    }

    pub fn domain_min(&self) -> Vec3 {
        self.center - self.half_extent()
    }

    pub fn domain_max(&self) -> Vec3 {
        self.center + self.half_extent()
    }

    /// World meters per local unit, derived from the original size stored
    /// with the grid: the largest original extent spans the largest local
    /// domain extent.
    pub fn world_per_local(&self) -> f64 {
        let local = 2.0 * self.half_extent().max();
        self.original_size.max() / local
    }

    pub(crate) fn with_values(&self, values: Vec<f32>) -> SdfGrid {
        SdfGrid { values, ..self.clone() }
    }

    fn negative_shell_node(&self) -> Option<(usize, usize, usize)> {
        let [nx, ny, nz] = self.dims;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let on_shell = i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
                    if on_shell && self.values[self.index(i, j, k)] < 0.0 {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    fn stencil(&self, axis: usize, x: f64) -> AxisStencil {
        let n = self.dims[axis];
        let c = (n - 1) as f64 * 0.5;
        let u = (x - self.center[axis]) / self.spacing;
        // Work on the nonnegative half so that a query and its mirror image
        // run through identical arithmetic.
        let mut g = c + u.abs();
        let r = g.round();
        if (g - r).abs() < NODE_SNAP {
            g = r;
        }
        let k = (g.floor() as usize).min(n - 2);
        let t = g - k as f64;
        if u < 0.0 {
            AxisStencil { near: n - 1 - k, far: n - 2 - k, t }
        } else {
            AxisStencil { near: k, far: k + 1, t }
        }
    }

    fn in_domain(&self, p: &Vec3) -> bool {
        (0..3).all(|a| {
            let c = (self.dims[a] - 1) as f64 * 0.5;
            let u = (p[a] - self.center[a]) / self.spacing;
            u.is_finite() && u.abs() <= c + NODE_SNAP
        })
    }

    /// Smallest value on the domain boundary; never negative for a valid
    /// grid.
    pub fn boundary_min(&self) -> f64 {
        let [nx, ny, nz] = self.dims;
        let mut m = f64::INFINITY;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1 {
                        m = m.min(self.value(i, j, k));
                    }
                }
            }
        }
        m
    }

    /// Trilinear interpolation of the eight nodes enclosing `p`.
    pub fn sample(&self, p: &Vec3) -> Result<f64, SdfError> {
        if !self.in_domain(p) {
            return Err(SdfError::OutOfDomain { point: [p.x, p.y, p.z] });
        }
        Ok(self.sample_in_domain(p))
    }

    /// Trilinear interpolation without the domain check. Points outside the
    /// domain extrapolate from the boundary cell.
    pub fn sample_in_domain(&self, p: &Vec3) -> f64 {
        let sx = self.stencil(0, p.x);
        let sy = self.stencil(1, p.y);
        let sz = self.stencil(2, p.z);
        let v = |i: usize, j: usize, k: usize| self.values[self.index(i, j, k)] as f64;
        let lerp = |a: f64, b: f64, t: f64| a * (1.0 - t) + b * t;

        let x_nn = lerp(v(sx.near, sy.near, sz.near), v(sx.far, sy.near, sz.near), sx.t);
        let x_fn = lerp(v(sx.near, sy.far, sz.near), v(sx.far, sy.far, sz.near), sx.t);
        let x_nf = lerp(v(sx.near, sy.near, sz.far), v(sx.far, sy.near, sz.far), sx.t);
        let x_ff = lerp(v(sx.near, sy.far, sz.far), v(sx.far, sy.far, sz.far), sx.t);
        let y_n = lerp(x_nn, x_fn, sy.t);
        let y_f = lerp(x_nf, x_ff, sy.t);
        lerp(y_n, y_f, sz.t)
    }

    /// Samples at the point of the domain closest to `p`. Returns the sample
    /// and the distance from `p` to the domain (zero inside).
    pub fn sample_clamped(&self, p: &Vec3) -> (f64, f64) {
        let half = self.half_extent();
        let mut q = *p;
        let mut outside_sq = 0.0;
        for a in 0..3 {
            let lo = self.center[a] - half[a];
            let hi = self.center[a] + half[a];
            if q[a] < lo {
                outside_sq += (lo - q[a]) * (lo - q[a]);
                q[a] = lo;
            } else if q[a] > hi {
                outside_sq += (q[a] - hi) * (q[a] - hi);
                q[a] = hi;
            }
        }
        (self.sample_in_domain(&q), outside_sq.sqrt())
    }
}

/// Origin and spacing of a `resolution^3` grid covering `[-1, 1]^3`, with the
/// origin chosen so that the domain center is exactly zero.
pub fn unit_cube_layout(resolution: usize) -> Result<(Vec3, f64), SdfError> {
    if resolution < 2 {
        return Err(SdfError::InvalidGrid(format!("resolution must be at least 2, got {resolution}")));
    }
    let spacing = 2.0 / (resolution - 1) as f64;
    let half = (resolution - 1) as f64 * 0.5 * spacing;
    Ok((Vec3::repeat(-half), spacing))
}
