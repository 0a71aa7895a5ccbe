//! Discrete differential operators.
//!
//! Gradients and divergences use second-order central differences, with
//! one-sided second-order stencils in the wall cells of a physical grid, and
//! periodic wrap-around otherwise. The Laplacian and the MUSCL fluxes read
//! ghost cells, which must be filled beforehand.

use super::{
    check_same, reduce_cells, BoundaryMode, FieldError, Grid, ScalarField, SymTensorField,
    TensorField, VecField,
};

#[inline]
fn wrap(i: isize, n: usize) -> isize {
    i.rem_euclid(n as isize)
}

/// ∂s/∂x at cell (i, j), interior indices only.
#[inline]
fn ddx(s: &ScalarField, i: isize, j: isize) -> f64 {
    let g = &s.grid;
    let n = g.nx as isize;
    match g.mode {
        BoundaryMode::Periodic => {
            (s.at(wrap(i + 1, g.nx), j) - s.at(wrap(i - 1, g.nx), j)) / (2.0 * g.dx)
        }
        BoundaryMode::Physical => {
            if i == 0 {
                (4.0 * (s.at(1, j) - s.at(0, j)) - (s.at(2, j) - s.at(0, j))) / (2.0 * g.dx)
            } else if i == n - 1 {
                (4.0 * (s.at(n - 1, j) - s.at(n - 2, j)) - (s.at(n - 1, j) - s.at(n - 3, j))) / (2.0 * g.dx)
            } else {
                (s.at(i + 1, j) - s.at(i - 1, j)) / (2.0 * g.dx)
            }
        }
    }
}

#[inline]
fn ddy(s: &ScalarField, i: isize, j: isize) -> f64 {
    let g = &s.grid;
    let n = g.ny as isize;
    match g.mode {
        BoundaryMode::Periodic => {
            (s.at(i, wrap(j + 1, g.ny)) - s.at(i, wrap(j - 1, g.ny))) / (2.0 * g.dy)
        }
        BoundaryMode::Physical => {
            if j == 0 {
                (4.0 * (s.at(i, 1) - s.at(i, 0)) - (s.at(i, 2) - s.at(i, 0))) / (2.0 * g.dy)
            } else if j == n - 1 {
                (4.0 * (s.at(i, n - 1) - s.at(i, n - 2)) - (s.at(i, n - 1) - s.at(i, n - 3))) / (2.0 * g.dy)
            } else {
                (s.at(i, j + 1) - s.at(i, j - 1)) / (2.0 * g.dy)
            }
        }
    }
}

pub fn grad_scalar(s: &ScalarField) -> VecField {
    VecField {
        x: ScalarField::from_cells(s.grid, |i, j| ddx(s, i, j)),
        y: ScalarField::from_cells(s.grid, |i, j| ddy(s, i, j)),
    }
}

pub fn div_vector(v: &VecField) -> ScalarField {
    ScalarField::from_cells(v.grid(), |i, j| ddx(&v.x, i, j) + ddy(&v.y, i, j))
}

/// Velocity gradient with `(∇u)_{ij} = ∂_j u_i`.
pub fn grad_vector(u: &VecField) -> TensorField {
    let g = u.grid();
    TensorField {
        xx: ScalarField::from_cells(g, |i, j| ddx(&u.x, i, j)),
        xy: ScalarField::from_cells(g, |i, j| ddy(&u.x, i, j)),
        yx: ScalarField::from_cells(g, |i, j| ddx(&u.y, i, j)),
        yy: ScalarField::from_cells(g, |i, j| ddy(&u.y, i, j)),
    }
}

/// Row-wise divergence `(div 𝕋)_i = ∂_j 𝕋_{ij}`.
pub fn div_tensor(t: &SymTensorField) -> VecField {
    let g = t.grid();
    VecField {
        x: ScalarField::from_cells(g, |i, j| ddx(&t.xx, i, j) + ddy(&t.xy, i, j)),
        y: ScalarField::from_cells(g, |i, j| ddx(&t.xy, i, j) + ddy(&t.yy, i, j)),
    }
}

/// Five-point Laplacian; reads one ghost layer.
pub fn laplacian(s: &ScalarField) -> ScalarField {
    let g = s.grid;
    let (idx2, idy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    ScalarField::from_cells(g, |i, j| {
        let c = s.at(i, j);
        (s.at(i + 1, j) - 2.0 * c + s.at(i - 1, j)) * idx2
            + (s.at(i, j + 1) - 2.0 * c + s.at(i, j - 1)) * idy2
    })
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Upwinded MUSCL flux through the face between samples `q1` and `q2`,
/// given the four samples `q0..q3` straddling it and the face velocity.
#[inline]
fn muscl_flux(q0: f64, q1: f64, q2: f64, q3: f64, uf: f64) -> f64 {
    if uf >= 0.0 {
        uf * (q1 + 0.5 * minmod(q2 - q1, q1 - q0))
    } else {
        uf * (q2 - 0.5 * minmod(q3 - q2, q2 - q1))
    }
}

#[inline]
fn flux_x(q: &ScalarField, u: &ScalarField, i: isize, j: isize) -> f64 {
    let uf = 0.5 * (u.at(i, j) + u.at(i + 1, j));
    muscl_flux(q.at(i - 1, j), q.at(i, j), q.at(i + 1, j), q.at(i + 2, j), uf)
}

#[inline]
fn flux_y(q: &ScalarField, v: &ScalarField, i: isize, j: isize) -> f64 {
    let vf = 0.5 * (v.at(i, j) + v.at(i, j + 1));
    muscl_flux(q.at(i, j - 1), q.at(i, j), q.at(i, j + 1), q.at(i, j + 2), vf)
}

/// Conservative `div(q u)` with minmod-limited MUSCL reconstruction and
/// linearly interpolated face velocities. Reads two ghost layers of `q` and
/// one of `u`; with odd-reflected velocity the wall flux is exactly zero.
pub fn advective_divergence(q: &ScalarField, u: &VecField) -> Result<ScalarField, FieldError> {
    check_same(&q.grid, &u.grid())?;
    let g = q.grid;
    Ok(ScalarField::from_cells(g, |i, j| {
        (flux_x(q, &u.x, i, j) - flux_x(q, &u.x, i - 1, j)) / g.dx
            + (flux_y(q, &u.y, i, j) - flux_y(q, &u.y, i, j - 1)) / g.dy
    }))
}

/// Componentwise `Div(u𝕋)` with the advective flux scheme.
pub fn div_tensor_vec(u: &VecField, t: &SymTensorField) -> Result<SymTensorField, FieldError> {
    Ok(SymTensorField {
        xx: advective_divergence(&t.xx, u)?,
        xy: advective_divergence(&t.xy, u)?,
        yy: advective_divergence(&t.yy, u)?,
    })
}

/// `G·T + T·Gᵀ` for one cell, with `T = [t11, t12, t22]`.
#[inline]
pub fn upper_convected_point(gu: [[f64; 2]; 2], t: [f64; 3]) -> [f64; 3] {
    let [[a, b], [c, d]] = gu;
    let [p, q, r] = t;
    [2.0 * (a * p + b * q), a * q + b * r + c * p + d * q, 2.0 * (c * q + d * r)]
}

pub fn upper_convected_source(
    grad_u: &TensorField,
    t: &SymTensorField,
) -> Result<SymTensorField, FieldError> {
    check_same(&grad_u.grid(), &t.grid())?;
    let g = t.grid();
    let at = |i, j| {
        let k = g.idx(i, j);
        upper_convected_point(grad_u.at(i, j), [t.xx.data[k], t.xy.data[k], t.yy.data[k]])
    };
    Ok(SymTensorField {
        xx: ScalarField::from_cells(g, |i, j| at(i, j)[0]),
        xy: ScalarField::from_cells(g, |i, j| at(i, j)[1]),
        yy: ScalarField::from_cells(g, |i, j| at(i, j)[2]),
    })
}

/// `∫|∇s|²` from face differences, reading one ghost layer.
///
/// Wall faces carry weight ½ (the cell center sits half a cell from the
/// wall), which makes `∫s·Δs = −∫|∇s|²` hold exactly for the five-point
/// Laplacian under even, odd or periodic ghost fills.
pub fn gradient_energy(s: &ScalarField) -> f64 {
    let g: Grid = s.grid;
    let (nx, ny) = (g.nx as isize, g.ny as isize);
    // physical grids: half-weight wall faces; periodic: the last column's
    // right face is the wrap face and carries full weight
    let (edge, wall) = match g.mode {
        BoundaryMode::Physical => (0.5, true),
        BoundaryMode::Periodic => (1.0, false),
    };
    reduce_cells(g, |i, j| {
        let c = s.at(i, j);
        let dxr = (s.at(i + 1, j) - c) / g.dx;
        let dyt = (s.at(i, j + 1) - c) / g.dy;
        let mut acc = if i == nx - 1 { edge } else { 1.0 } * dxr * dxr
            + if j == ny - 1 { edge } else { 1.0 } * dyt * dyt;
        if wall && i == 0 {
            let d = (c - s.at(-1, j)) / g.dx;
            acc += 0.5 * d * d;
        }
        if wall && j == 0 {
            let d = (c - s.at(i, -1)) / g.dy;
            acc += 0.5 * d * d;
        }
        acc
    }) * g.cell_area()
}
