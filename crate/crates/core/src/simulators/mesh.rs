//! Structured quadrilateral mesh of the notched beam with a duplicated-node
//! ligament above the notch tip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Distance between supports; the beam ends at the supports (mm).
    pub span: f64,
    pub height: f64,
    pub thickness: f64,
    pub notch_depth: f64,
    pub notch_width: f64,
    pub nx: usize,
    pub ny: usize,
    /// Width of the rigid loading plate centred at midspan (mm).
    pub load_plate: f64,
    /// Width of each support pad measured from the beam end (mm).
    pub support_pad: f64,
    #[serde(default)]
    pub interface_rule: InterfaceRule,
}

/// Integration of the ligament interface elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterfaceRule {
    /// Newton-Cotes points at the node pairs.
    #[default]
    Nodal,
    /// Two Gauss points per element.
    Gauss,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        BeamGeometry {
            span: 400.0,
            height: 100.0,
            thickness: 100.0,
            notch_depth: 20.0,
            notch_width: 4.0,
            nx: 48,
            ny: 12,
            load_plate: 20.0,
            support_pad: 10.0,
            interface_rule: InterfaceRule::Nodal,
        }
    }
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.span, self.height, self.thickness, self.notch_width]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return Err(Error::Mesh("dimensions must be positive and finite".into()));
        }
        if !(self.notch_depth > 0.0 && self.notch_depth < self.height) {
            return Err(Error::Mesh("notch depth must lie in (0, height)".into()));
        }
        if self.notch_width >= self.span {
            return Err(Error::Mesh("notch wider than the beam".into()));
        }
        let pads_ok = self.load_plate.is_finite()
            && self.load_plate >= 0.0
            && self.support_pad.is_finite()
            && self.support_pad >= 0.0
            && self.load_plate + 2.0 * self.support_pad < self.span;
        if !pads_ok {
            return Err(Error::Mesh("invalid load plate or support pad width".into()));
        }
        if self.nx < 4 || self.ny < 4 {
            return Err(Error::Mesh("nx and ny must be at least 4".into()));
        }
        if self.nx % 2 != 0 {
            return Err(Error::Mesh("nx must be even to place the notch at midspan".into()));
        }
        Ok(())
    }

    /// Element rows below the notch tip.
    pub fn rows_below_notch(&self) -> usize {
        let r = (self.ny as f64 * self.notch_depth / self.height).round() as usize;
        r.clamp(1, self.ny - 1)
    }

    /// The same geometry with both mesh divisions doubled.
    pub fn refined(&self) -> Self {
        BeamGeometry {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            ..*self
        }
    }
}

/// Displacement probe: weighted combination of nodal horizontal displacements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub nodes: [usize; 2],
    pub weights: [f64; 2],
}

impl Probe {
    fn node(n: usize) -> Self {
        Probe {
            nodes: [n, n],
            weights: [1.0, 0.0],
        }
    }

    pub fn ux(&self, u: &[f64]) -> f64 {
        self.weights[0] * u[2 * self.nodes[0]] + self.weights[1] * u[2 * self.nodes[1]]
    }
}

/// Zero-thickness interface segment on the ligament. `left`/`right` hold the
/// (bottom, top) nodes of each face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceElement {
    pub left: [usize; 2],
    pub right: [usize; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub geometry: BeamGeometry,
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise bilinear quadrilaterals.
    pub elements: Vec<[usize; 4]>,
    pub interfaces: Vec<InterfaceElement>,
    /// Dofs held at zero (supports).
    pub fixed_dofs: Vec<usize>,
    /// Vertical dofs driven by the prescribed deflection.
    pub loaded_dofs: Vec<usize>,
    /// v1, v2: mid-height of the left/right end faces.
    pub v1: Probe,
    pub v2: Probe,
    /// v3, v4: notch upper corners.
    pub v3: Probe,
    pub v4: Probe,
}

impl Mesh {
    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Largest dof-index distance coupled by any element.
    pub fn half_bandwidth(&self) -> usize {
        let mut b = 0;
        let mut spread = |ns: &[usize]| {
            let lo = ns.iter().min().unwrap();
            let hi = ns.iter().max().unwrap();
            b = b.max(2 * (hi - lo) + 1);
        };
        for e in &self.elements {
            spread(e);
        }
        for i in &self.interfaces {
            spread(&[i.left[0], i.left[1], i.right[0], i.right[1]]);
        }
        b
    }

    /// Jacobian determinant of element `e` at local coordinates `(xi, eta)`.
    pub fn jacobian(&self, e: usize, xi: f64, eta: f64) -> f64 {
        let (_, det) = shape_gradients(&self.element_coords(e), xi, eta);
        det
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        let n = self.elements[e];
        [self.nodes[n[0]], self.nodes[n[1]], self.nodes[n[2]], self.nodes[n[3]]]
    }
}

const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Physical shape-function gradients `[dN/dx, dN/dy]` and `det J`.
pub fn shape_gradients(x: &[[f64; 2]; 4], xi: f64, eta: f64) -> ([[f64; 2]; 4], f64) {
    let mut dn = [[0.0; 2]; 4];
    for (a, c) in CORNERS.iter().enumerate() {
        dn[a] = [0.25 * c[0] * (1.0 + c[1] * eta), 0.25 * c[1] * (1.0 + c[0] * xi)];
    }
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        for r in 0..2 {
            for s in 0..2 {
                j[r][s] += dn[a][r] * x[a][s];
            }
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let mut g = [[0.0; 2]; 4];
    for a in 0..4 {
        for r in 0..2 {
            g[a][r] = inv[r][0] * dn[a][0] + inv[r][1] * dn[a][1];
        }
    }
    (g, det)
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
}

/// Builds the notched-beam mesh.
///
/// Columns are graded so that the notch faces and the ligament coincide with
/// grid lines: `(nx - 2) / 2` columns on each side plus one column of half the
/// notch width on each side of midspan. Rows are split at the notch depth.
pub fn build_beam_mesh(geom: &BeamGeometry) -> Result<Mesh> {
    geom.validate()?;
    let side = (geom.nx - 2) / 2;
    let mid = 0.5 * geom.span;
    let half_notch = 0.5 * geom.notch_width;
    let mut xs: Vec<f64> = linspace(0.0, mid - half_notch, side).collect();
    xs.push(mid);
    // Mirror the left half exactly so that coordinates are symmetric.
    let right: Vec<f64> = xs[..=side].iter().rev().map(|x| geom.span - x).collect();
    xs.extend(right);
    debug_assert_eq!(xs.len(), geom.nx + 1);
    let center = side + 1;

    let below = geom.rows_below_notch();
    let mut ys: Vec<f64> = linspace(0.0, geom.notch_depth, below).collect();
    ys.pop();
    ys.extend(linspace(geom.notch_depth, geom.height, geom.ny - below));
    debug_assert_eq!(ys.len(), geom.ny + 1);

    // Column-major numbering; the midspan column is split into a left and a
    // right copy above the notch tip.
    let none = usize::MAX;
    let mut nodes = Vec::new();
    let mut left_id = vec![vec![none; geom.ny + 1]; geom.nx + 1];
    let mut right_id = vec![vec![none; geom.ny + 1]; geom.nx + 1];
    for ix in 0..=geom.nx {
        if ix == center {
            for copy in 0..2 {
                for iy in below..=geom.ny {
                    let id = nodes.len();
                    nodes.push([xs[ix], ys[iy]]);
                    if copy == 0 {
                        left_id[ix][iy] = id;
                    } else {
                        right_id[ix][iy] = id;
                    }
                }
            }
        } else {
            for iy in 0..=geom.ny {
                let id = nodes.len();
                nodes.push([xs[ix], ys[iy]]);
                left_id[ix][iy] = id;
                right_id[ix][iy] = id;
            }
        }
    }

    let mut elements = Vec::new();
    for ix in 0..geom.nx {
        for iy in 0..geom.ny {
            let in_notch = (ix == center - 1 || ix == center) && iy < below;
            if in_notch {
                continue;
            }
            // Left edge uses the right copy of the split column, right edge the left copy.
            let n0 = right_id[ix][iy];
            let n1 = left_id[ix + 1][iy];
            let n2 = left_id[ix + 1][iy + 1];
            let n3 = right_id[ix][iy + 1];
            elements.push([n0, n1, n2, n3]);
        }
    }

    let interfaces = (below..geom.ny)
        .map(|iy| InterfaceElement {
            left: [left_id[center][iy], left_id[center][iy + 1]],
            right: [right_id[center][iy], right_id[center][iy + 1]],
            length: ys[iy + 1] - ys[iy],
        })
        .collect();

    // Pinned at the left end, roller at the right; each pad holds the bottom
    // nodes within its width vertically. The plate pushes the top nodes.
    let eps = 1e-9 * geom.span;
    let mut fixed_dofs = vec![2 * left_id[0][0]];
    for ix in 0..=geom.nx {
        let x = xs[ix];
        if x <= geom.support_pad + eps || x >= geom.span - geom.support_pad - eps {
            fixed_dofs.push(2 * left_id[ix][0] + 1);
        }
    }
    let top = geom.ny;
    let mut loaded_dofs = Vec::new();
    for ix in 0..=geom.nx {
        if (xs[ix] - mid).abs() <= 0.5 * geom.load_plate + eps {
            loaded_dofs.push(2 * left_id[ix][top] + 1);
            if ix == center {
                loaded_dofs.push(2 * right_id[ix][top] + 1);
            }
        }
    }

    let end_probe = |ix: usize| -> Probe {
        let y = 0.5 * geom.height;
        let k = ys.iter().rposition(|&v| v <= y).unwrap().min(geom.ny - 1);
        let t = (y - ys[k]) / (ys[k + 1] - ys[k]);
        Probe {
            nodes: [left_id[ix][k], left_id[ix][k + 1]],
            weights: [1.0 - t, t],
        }
    };

    let mesh = Mesh {
        geometry: *geom,
        v1: end_probe(0),
        v2: end_probe(geom.nx),
        v3: Probe::node(left_id[center - 1][below]),
        v4: Probe::node(left_id[center + 1][below]),
        nodes,
        elements,
        interfaces,
        fixed_dofs,
        loaded_dofs,
    };
    for e in 0..mesh.elements.len() {
        for &(xi, eta) in &[(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (0.0, 0.0)] {
            let det = mesh.jacobian(e, xi, eta);
            if !(det > 0.0) {
                return Err(Error::Mesh(format!("element {e} has non-positive Jacobian {det}")));
            }
        }
    }
    Ok(mesh)
}
