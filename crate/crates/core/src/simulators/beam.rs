//! Plane-stress FEM of the notched three-point-bending beam.
//!
//! Bilinear quadrilaterals with 2x2 Gauss points carry the bulk damage model;
//! the midspan ligament carries cohesive interface points at the node pairs
//! (Newton-Cotes integration). Equilibrium is solved by Newton iterations on a
//! banded LDL^T factorization of the free dofs.

use nalgebra::{Matrix3, Vector3};

use super::band::{dense_solve, SymBand};
use super::control::{SimulationControl, MAX_HALVINGS};
use super::curve::{CurvePoint, ResponseCurve};
use super::mesh::{build_beam_mesh, shape_gradients, BeamGeometry, InterfaceRule, Mesh};
use crate::constitutive::{
    bulk_update, discrete_update, plane_stress_compliance, plane_stress_stiffness, BulkState, Compliance,
    DiscreteState, MaterialParams, StressMode, Voigt,
};
use crate::error::{Error, Result};

/// Normal compressive (and pre-activation) interface stiffness per unit E (1/mm).
pub const PENALTY_PER_E: f64 = 1e3;

const GAUSS: f64 = 0.577_350_269_189_625_8;
const GAUSS_POINTS: [(f64, f64); 4] = [(-GAUSS, -GAUSS), (GAUSS, -GAUSS), (GAUSS, GAUSS), (-GAUSS, GAUSS)];

type Mat8 = [[f64; 8]; 8];

#[derive(Debug, Clone, Copy)]
struct GaussData {
    /// Shape-function gradients `[dN/dx, dN/dy]`.
    grad: [[f64; 2]; 4],
    /// Integration weight times thickness.
    dv: f64,
}

#[derive(Debug, Clone, Copy)]
struct IfacePoint {
    /// Dofs of the lower and upper node of each face.
    left: [[usize; 2]; 2],
    right: [[usize; 2]; 2],
    /// Weights of the lower and upper node pair.
    n: [f64; 2],
    area: f64,
}

impl IfacePoint {
    fn jump(&self, u: &[f64]) -> [f64; 2] {
        let mut j = [0.0; 2];
        for a in 0..2 {
            for c in 0..2 {
                j[c] += self.n[a] * (u[self.right[a][c]] - u[self.left[a][c]]);
            }
        }
        j
    }

    fn add_force(&self, f: &mut [f64], t: [f64; 2]) {
        for a in 0..2 {
            for c in 0..2 {
                let v = self.n[a] * t[c] * self.area;
                f[self.right[a][c]] += v;
                f[self.left[a][c]] -= v;
            }
        }
    }
}

/// Whether the ligament may crack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ligament {
    Cohesive,
    /// Interface kept in its rigid phase whatever the traction.
    Rigid,
}

/// Converged mechanical state of the beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    /// Nodal displacements, `[ux0, uy0, ux1, ...]`.
    pub u: Vec<f64>,
    pub bulk: Vec<BulkState>,
    pub interface: Vec<DiscreteState>,
    /// Total dissipated energy (mJ).
    pub dissipated: f64,
}

/// Outcome of one load increment.
#[derive(Debug, Clone)]
pub struct Increment {
    pub state: BeamState,
    pub reaction: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Per-step diagnostics of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub u: f64,
    pub bulk_damaged: bool,
    pub interface_active: bool,
    /// Dissipation of the step (mJ); never negative for admissible paths.
    pub dissipation: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct BeamRun {
    pub curve: ResponseCurve,
    pub steps: Vec<StepInfo>,
    pub state: BeamState,
}

/// Assembled beam model for one parameter set.
#[derive(Debug, Clone)]
pub struct BeamModel {
    pub mesh: Mesh,
    pub params: MaterialParams,
    pub ligament: Ligament,
    penalty: f64,
    gauss: Vec<[GaussData; 4]>,
    elastic_k: Vec<Mat8>,
    stiffness_el: Matrix3<f64>,
    compliance_el: Matrix3<f64>,
    /// Free-equation index of each dof, `usize::MAX` for prescribed dofs.
    eq: Vec<usize>,
    n_free: usize,
    prescribed: Vec<bool>,
    /// Elastic tangent on the free dofs (bulk plus interface penalty).
    k_elastic: SymBand,
    /// Elastic displacement field for a unit deflection.
    unit: Vec<f64>,
    unit_reaction: f64,
}

struct Assembly {
    f_int: Vec<f64>,
    bulk: Vec<BulkState>,
    interface: Vec<DiscreteState>,
    /// Tangent corrections relative to the elastic matrix, per element.
    elem_diff: Vec<(usize, Mat8)>,
    /// Interface tangent corrections `(element, point, 2x2)`.
    iface_diff: Vec<(usize, usize, [[f64; 2]; 2])>,
    dissipation: f64,
}

impl BeamModel {
    pub fn new(params: &MaterialParams, geom: &BeamGeometry, ligament: Ligament) -> Result<Self> {
        params.validate()?;
        let mesh = build_beam_mesh(geom)?;
        let stiffness_el = plane_stress_stiffness(params.e, params.nu);
        let compliance_el = plane_stress_compliance(params.e, params.nu);
        let t = geom.thickness;
        let mut gauss = Vec::with_capacity(mesh.elements.len());
        let mut elastic_k = Vec::with_capacity(mesh.elements.len());
        for e in 0..mesh.elements.len() {
            let x = mesh.element_coords(e);
            let mut gd = [GaussData {
                grad: [[0.0; 2]; 4],
                dv: 0.0,
            }; 4];
            let mut ke = [[0.0; 8]; 8];
            for (k, &(xi, eta)) in GAUSS_POINTS.iter().enumerate() {
                let (grad, det) = shape_gradients(&x, xi, eta);
                gd[k] = GaussData { grad, dv: det * t };
                add_btcb(&mut ke, &grad, &stiffness_el, det * t);
            }
            gauss.push(gd);
            elastic_k.push(ke);
        }

        let n_dofs = mesh.n_dofs();
        let mut prescribed = vec![false; n_dofs];
        for &d in mesh.fixed_dofs.iter().chain(&mesh.loaded_dofs) {
            prescribed[d] = true;
        }
        let mut eq = vec![usize::MAX; n_dofs];
        let mut n_free = 0;
        for d in 0..n_dofs {
            if !prescribed[d] {
                eq[d] = n_free;
                n_free += 1;
            }
        }
        let penalty = PENALTY_PER_E * params.e;
        let mut model = BeamModel {
            k_elastic: SymBand::zeros(n_free, mesh.half_bandwidth()),
            mesh,
            params: *params,
            ligament,
            penalty,
            gauss,
            elastic_k,
            stiffness_el,
            compliance_el,
            eq,
            n_free,
            prescribed,
            unit: Vec::new(),
            unit_reaction: 0.0,
        };
        let mut k = SymBand::zeros(model.n_free, model.mesh.half_bandwidth());
        for e in 0..model.mesh.elements.len() {
            model.scatter_element(&mut k, e, &model.elastic_k[e]);
        }
        for i in 0..model.mesh.interfaces.len() {
            for p in 0..2 {
                let kk = model.penalty;
                model.scatter_interface(&mut k, i, p, &[[kk, 0.0], [0.0, kk]]);
            }
        }
        model.k_elastic = k;

        // Unit deflection: loaded dofs at -1, solve for the free dofs.
        let mut u = vec![0.0; n_dofs];
        for &d in &model.mesh.loaded_dofs {
            u[d] = -1.0;
        }
        let f = model.elastic_forces(&u);
        let rhs: Vec<f64> = (0..n_dofs).filter(|&d| !model.prescribed[d]).map(|d| -f[d]).collect();
        let sol = model
            .k_elastic
            .clone()
            .factor()
            .map(|l| l.solve(&rhs))
            .or_else(|| dense_solve(&model.k_elastic, &rhs))
            .ok_or_else(|| Error::Mesh("singular elastic stiffness".into()))?;
        for d in 0..n_dofs {
            if !model.prescribed[d] {
                u[d] = sol[model.eq[d]];
            }
        }
        let f = model.elastic_forces(&u);
        model.unit_reaction = -model.mesh.loaded_dofs.iter().map(|&d| f[d]).sum::<f64>();
        model.unit = u;
        Ok(model)
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    /// Initial elastic stiffness `L / u` of the structure (N/mm).
    pub fn elastic_stiffness(&self) -> f64 {
        self.unit_reaction
    }

    /// Elastic equivalent stress `||sigma||_De * sqrt(E)` at every Gauss point
    /// (element-major) for the displacement field `u`.
    pub fn elastic_equivalent_stress(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.mesh.elements.len());
        for e in 0..self.mesh.elements.len() {
            let dofs = self.element_dofs(e);
            let ue = dofs.map(|d| u[d]);
            for g in &self.gauss[e] {
                let sig = self.stiffness_el * Self::strain(g, &ue);
                out.push((sig.dot(&(self.compliance_el * sig)) * self.params.e).sqrt());
            }
        }
        out
    }

    /// Displacement field of a unit elastic deflection.
    pub fn unit_field(&self) -> &[f64] {
        &self.unit
    }

    pub fn virgin_state(&self) -> BeamState {
        BeamState {
            u: vec![0.0; self.mesh.n_dofs()],
            bulk: vec![BulkState::virgin(&self.params, StressMode::PlaneStress); 4 * self.mesh.elements.len()],
            interface: vec![DiscreteState::default(); 2 * self.mesh.interfaces.len()],
            dissipated: 0.0,
        }
    }

    fn element_dofs(&self, e: usize) -> [usize; 8] {
        let n = self.mesh.elements[e];
        let mut d = [0; 8];
        for a in 0..4 {
            d[2 * a] = 2 * n[a];
            d[2 * a + 1] = 2 * n[a] + 1;
        }
        d
    }

    fn scatter_element(&self, k: &mut SymBand, e: usize, ke: &Mat8) {
        let dofs = self.element_dofs(e);
        for a in 0..8 {
            let ia = self.eq[dofs[a]];
            if ia == usize::MAX {
                continue;
            }
            for b in 0..=a {
                let ib = self.eq[dofs[b]];
                if ib == usize::MAX {
                    continue;
                }
                let v = if a == b { ke[a][a] } else { ke[a][b] };
                if a == b {
                    k.add(ia, ia, v);
                } else {
                    k.add(ia, ib, v);
                }
            }
        }
    }

    /// Integration point `p` (0 lower, 1 upper) of interface element `i`.
    fn iface_point(&self, i: usize, p: usize) -> IfacePoint {
        let ie = &self.mesh.interfaces[i];
        let n = match self.mesh.geometry.interface_rule {
            InterfaceRule::Nodal => [1.0 - p as f64, p as f64],
            InterfaceRule::Gauss => {
                let s = if p == 0 { -GAUSS } else { GAUSS };
                [0.5 * (1.0 - s), 0.5 * (1.0 + s)]
            }
        };
        let node = |k: usize| [2 * k, 2 * k + 1];
        IfacePoint {
            left: [node(ie.left[0]), node(ie.left[1])],
            right: [node(ie.right[0]), node(ie.right[1])],
            n,
            area: 0.5 * ie.length * self.mesh.geometry.thickness,
        }
    }

    fn scatter_interface(&self, k: &mut SymBand, i: usize, p: usize, t: &[[f64; 2]; 2]) {
        let pt = self.iface_point(i, p);
        // Jump = sum_a n_a (u_R,a - u_L,a).
        let mut dofs = [0usize; 8];
        let mut coef = [0.0; 8];
        let mut comp = [0usize; 8];
        for a in 0..2 {
            for c in 0..2 {
                dofs[2 * a + c] = pt.left[a][c];
                coef[2 * a + c] = -pt.n[a];
                dofs[4 + 2 * a + c] = pt.right[a][c];
                coef[4 + 2 * a + c] = pt.n[a];
                comp[2 * a + c] = c;
                comp[4 + 2 * a + c] = c;
            }
        }
        for a in 0..8 {
            let ia = self.eq[dofs[a]];
            if ia == usize::MAX || coef[a] == 0.0 {
                continue;
            }
            for b in 0..8 {
                let ib = self.eq[dofs[b]];
                // Symmetric storage: lower entries only.
                if ib == usize::MAX || ib > ia || coef[b] == 0.0 {
                    continue;
                }
                k.add(ia, ib, pt.area * coef[a] * coef[b] * t[comp[a]][comp[b]]);
            }
        }
    }

    fn elastic_forces(&self, u: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; u.len()];
        for e in 0..self.mesh.elements.len() {
            let dofs = self.element_dofs(e);
            let ke = &self.elastic_k[e];
            for a in 0..8 {
                let mut s = 0.0;
                for b in 0..8 {
                    s += ke[a][b] * u[dofs[b]];
                }
                f[dofs[a]] += s;
            }
        }
        for i in 0..self.mesh.interfaces.len() {
            for p in 0..2 {
                let pt = self.iface_point(i, p);
                let jump = pt.jump(u);
                pt.add_force(&mut f, [self.penalty * jump[0], self.penalty * jump[1]]);
            }
        }
        f
    }

    fn strain(g: &GaussData, ue: &[f64; 8]) -> Vector3<f64> {
        let mut eps = Vector3::zeros();
        for a in 0..4 {
            let (ux, uy) = (ue[2 * a], ue[2 * a + 1]);
            eps[0] += g.grad[a][0] * ux;
            eps[1] += g.grad[a][1] * uy;
            eps[2] += g.grad[a][1] * ux + g.grad[a][0] * uy;
        }
        eps
    }

    fn assemble(&self, u: &[f64], committed: &BeamState) -> Result<Assembly> {
        let p = &self.params;
        let mut f = vec![0.0; u.len()];
        let mut bulk = committed.bulk.clone();
        let mut interface = committed.interface.clone();
        let mut elem_diff = Vec::new();
        let mut iface_diff = Vec::new();
        let mut dissipation = 0.0;
        let s0 = p.sigf_bar / p.e.sqrt();
        let s0_sq = s0 * s0;

        for e in 0..self.mesh.elements.len() {
            let dofs = self.element_dofs(e);
            let mut ue = [0.0; 8];
            for a in 0..8 {
                ue[a] = u[dofs[a]];
            }
            let gd = &self.gauss[e];
            let states = &committed.bulk[4 * e..4 * e + 4];
            let virgin = states.iter().all(|s| s.is_virgin());
            let elastic = virgin
                && gd.iter().all(|g| {
                    let eps = Self::strain(g, &ue);
                    let sig = self.stiffness_el * eps;
                    sig.dot(&(self.compliance_el * sig)) <= s0_sq
                });
            if elastic {
                let ke = &self.elastic_k[e];
                for a in 0..8 {
                    let mut s = 0.0;
                    for b in 0..8 {
                        s += ke[a][b] * ue[b];
                    }
                    f[dofs[a]] += s;
                }
                continue;
            }
            let mut fe = [0.0; 8];
            let mut ke = [[0.0; 8]; 8];
            for (k, g) in gd.iter().enumerate() {
                let eps = Self::strain(g, &ue);
                let up = bulk_update(&states[k], Voigt::PlaneStress(eps), p)?;
                let Voigt::PlaneStress(sig) = up.stress else { unreachable!() };
                let Compliance::PlaneStress(c) = up.tangent else { unreachable!() };
                for a in 0..4 {
                    fe[2 * a] += (g.grad[a][0] * sig[0] + g.grad[a][1] * sig[2]) * g.dv;
                    fe[2 * a + 1] += (g.grad[a][1] * sig[1] + g.grad[a][0] * sig[2]) * g.dv;
                }
                add_btcb(&mut ke, &g.grad, &c, g.dv);
                dissipation += (up.state.dissipated - states[k].dissipated) * g.dv;
                bulk[4 * e + k] = up.state;
            }
            for a in 0..8 {
                f[dofs[a]] += fe[a];
                for b in 0..8 {
                    ke[a][b] -= self.elastic_k[e][a][b];
                }
            }
            elem_diff.push((e, ke));
        }

        let k_pen = self.penalty;
        for i in 0..self.mesh.interfaces.len() {
            for pt in 0..2 {
                let ip = self.iface_point(i, pt);
                let area = ip.area;
                let jump = ip.jump(u);
                let idx = 2 * i + pt;
                let st = &committed.interface[idx];
                let (t, tan) = if self.ligament == Ligament::Rigid || (!st.active && self.rigid_holds(jump)) {
                    ([k_pen * jump[0], k_pen * jump[1]], None)
                } else {
                    let up = discrete_update(st, [jump[0].max(0.0), jump[1]], p, k_pen)?;
                    let mut t = up.traction;
                    let mut tan = up.tangent;
                    if jump[0] < 0.0 {
                        t[0] = k_pen * jump[0];
                        tan[0] = [k_pen, 0.0];
                        tan[1][0] = 0.0;
                    }
                    dissipation += (up.state.dissipated - st.dissipated) * area;
                    interface[idx] = up.state;
                    (t, Some(tan))
                };
                ip.add_force(&mut f, t);
                if let Some(mut tan) = tan {
                    tan[0][0] -= k_pen;
                    tan[1][1] -= k_pen;
                    iface_diff.push((i, pt, tan));
                }
            }
        }
        Ok(Assembly {
            f_int: f,
            bulk,
            interface,
            elem_diff,
            iface_diff,
            dissipation,
        })
    }

    /// True if a virgin interface point stays in its rigid phase under `jump`.
    fn rigid_holds(&self, jump: [f64; 2]) -> bool {
        let t_n = self.penalty * jump[0];
        let t_m = self.penalty * jump[1];
        t_n <= self.params.sigf_bbar && t_m.abs() <= self.params.sigs_bbar()
    }

    fn tangent(&self, asm: &Assembly) -> SymBand {
        let mut k = self.k_elastic.clone();
        for (e, ke) in &asm.elem_diff {
            self.scatter_element(&mut k, *e, ke);
        }
        for (i, p, t) in &asm.iface_diff {
            self.scatter_interface(&mut k, *i, *p, t);
        }
        k
    }

    pub fn reaction(&self, f_int: &[f64]) -> f64 {
        -self.mesh.loaded_dofs.iter().map(|&d| f_int[d]).sum::<f64>()
    }

    /// Equilibrium iterations for the prescribed deflection `u_target`,
    /// starting from the converged state `committed` at deflection `u_prev`.
    pub fn solve_increment(
        &self,
        committed: &BeamState,
        u_prev: f64,
        u_target: f64,
        control: &SimulationControl,
    ) -> Result<Increment> {
        self.solve_increment_from(committed, u_prev, u_target, control, None)
    }

    /// As [`BeamModel::solve_increment`], predicting with `rate` (displacement
    /// per unit deflection of the previous step) instead of the elastic field.
    fn solve_increment_from(
        &self,
        committed: &BeamState,
        u_prev: f64,
        u_target: f64,
        control: &SimulationControl,
        rate: Option<&[f64]>,
    ) -> Result<Increment> {
        let mut u = committed.u.clone();
        let step = u_target - u_prev;
        let mut iterations = 0;
        if step != 0.0 {
            // The elastic predictor is exact for increments that stay elastic.
            for (x, w) in u.iter_mut().zip(rate.unwrap_or(&self.unit)) {
                *x += step * w;
            }
            for &d in &self.mesh.loaded_dofs {
                u[d] = -u_target;
            }
            iterations = 1;
        }
        let mut residual;
        loop {
            let asm = self.assemble(&u, committed)?;
            let reaction = self.reaction(&asm.f_int);
            let r: Vec<f64> = (0..u.len())
                .filter(|&d| !self.prescribed[d])
                .map(|d| asm.f_int[d])
                .collect();
            residual = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !residual.is_finite() {
                break;
            }
            if residual <= control.newton_tol * (reaction.abs() + 1.0) {
                return Ok(Increment {
                    state: BeamState {
                        u,
                        bulk: asm.bulk,
                        interface: asm.interface,
                        dissipated: committed.dissipated + asm.dissipation,
                    },
                    reaction,
                    iterations,
                    residual,
                });
            }
            if iterations >= control.newton_max {
                break;
            }
            let k = self.tangent(&asm);
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let du = match k.clone().factor() {
                Some(l) => l.solve(&rhs),
                None => dense_solve(&k, &rhs).ok_or_else(|| Error::Simulation {
                    last_u: u_prev,
                    reason: "singular tangent".into(),
                })?,
            };
            for d in 0..u.len() {
                if !self.prescribed[d] {
                    u[d] += du[self.eq[d]];
                }
            }
            iterations += 1;
        }
        Err(Error::Simulation {
            last_u: u_prev,
            reason: format!("no equilibrium at u = {u_target} (residual {residual:e})"),
        })
    }

    fn advance(
        &self,
        state: &BeamState,
        u_a: f64,
        u_b: f64,
        control: &SimulationControl,
        rate: Option<&[f64]>,
        depth: u32,
    ) -> Result<Increment> {
        match self.solve_increment_from(state, u_a, u_b, control, rate) {
            Ok(inc) => Ok(inc),
            Err(e) if depth >= MAX_HALVINGS => Err(match e {
                Error::Simulation { reason, .. } => Error::Simulation { last_u: u_a, reason },
                other => Error::Simulation {
                    last_u: u_a,
                    reason: other.to_string(),
                },
            }),
            Err(_) => {
                let mid = 0.5 * (u_a + u_b);
                let first = self.advance(state, u_a, mid, control, rate, depth + 1)?;
                let second = self.advance(&first.state, mid, u_b, control, rate, depth + 1)?;
                Ok(Increment {
                    iterations: first.iterations + second.iterations,
                    ..second
                })
            }
        }
    }

    /// Measured quantities for a converged state.
    pub fn measure(&self, u_load: f64, state: &BeamState, reaction: f64) -> CurvePoint {
        let m = &self.mesh;
        CurvePoint {
            u: u_load,
            load: reaction,
            delta_l: m.v2.ux(&state.u) - m.v1.ux(&state.u),
            crack_open: m.v4.ux(&state.u) - m.v3.ux(&state.u),
        }
    }

    /// Displacement-controlled run to `control.u_max`.
    pub fn run(&self, control: &SimulationControl) -> Result<BeamRun> {
        control.validate()?;
        let targets = control.targets();
        let mut run = BeamRun {
            curve: ResponseCurve::new(),
            steps: Vec::new(),
            state: self.virgin_state(),
        };
        self.continue_run(&mut run, 0.0, &targets, control, |_, _| false)?;
        Ok(run)
    }

    /// Runs the cohesive model together with its rigid-ligament companion.
    ///
    /// Both share every step up to the first interface activation, so the
    /// companion is only integrated from that point on.
    pub fn run_with_baseline(&self, control: &SimulationControl) -> Result<PairedRun> {
        control.validate()?;
        let targets = control.targets();
        let mut run = BeamRun {
            curve: ResponseCurve::new(),
            steps: Vec::new(),
            state: self.virgin_state(),
        };
        let mut checkpoint: Option<(usize, BeamState)> = None;
        self.continue_run(&mut run, 0.0, &targets, control, |k, before| {
            if checkpoint.is_none() {
                checkpoint = Some((k, before.clone()));
            }
            false
        })?;
        let baseline = match checkpoint {
            Some((k, state)) if self.ligament == Ligament::Cohesive => {
                let rigid = BeamModel {
                    ligament: Ligament::Rigid,
                    ..self.clone()
                };
                let mut base = BeamRun {
                    curve: ResponseCurve {
                        points: run.curve.points[..=k].to_vec(),
                    },
                    steps: run.steps[..k].to_vec(),
                    state,
                };
                let u_prev = if k == 0 { 0.0 } else { targets[k - 1] };
                rigid.continue_run(&mut base, u_prev, &targets[k..], control, |_, _| false)?;
                base.curve
            }
            _ => run.curve.clone(),
        };
        Ok(PairedRun { run, baseline })
    }

    /// Advances `run` through `targets`. `on_activation(k, before)` is called
    /// for the first step `k` (index into `targets`) that activates the
    /// interface, with the state before that step; returning true stops.
    fn continue_run<F>(
        &self,
        run: &mut BeamRun,
        mut u_prev: f64,
        targets: &[f64],
        control: &SimulationControl,
        mut on_activation: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &BeamState) -> bool,
    {
        let mut seen = run.state.interface.iter().any(|s| s.active);
        let mut rate: Option<Vec<f64>> = None;
        for (k, &u) in targets.iter().enumerate() {
            let inc = self.advance(&run.state, u_prev, u, control, rate.as_deref(), 0)?;
            let nonlinear = inc.state.bulk.iter().any(|s| !s.is_virgin()) || inc.state.interface.iter().any(|s| s.active);
            rate = nonlinear.then(|| {
                let h = 1.0 / (u - u_prev);
                inc.state.u.iter().zip(&run.state.u).map(|(a, b)| (a - b) * h).collect()
            });
            let active = inc.state.interface.iter().any(|s| s.active);
            if active && !seen {
                seen = true;
                if on_activation(k, &run.state) {
                    return Ok(());
                }
            }
            run.curve.push(self.measure(u, &inc.state, inc.reaction));
            run.steps.push(StepInfo {
                u,
                bulk_damaged: inc.state.bulk.iter().any(|s| !s.is_virgin()),
                interface_active: active,
                dissipation: inc.state.dissipated - run.state.dissipated,
                iterations: inc.iterations,
            });
            run.state = inc.state;
            u_prev = u;
        }
        Ok(())
    }
}

/// Cohesive run and the response of the same beam without a crack.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub run: BeamRun,
    pub baseline: ResponseCurve,
}

/// `ke += B^T C B dv` for one Gauss point.
fn add_btcb(ke: &mut Mat8, grad: &[[f64; 2]; 4], c: &Matrix3<f64>, dv: f64) {
    for a in 0..4 {
        let (ax, ay) = (grad[a][0], grad[a][1]);
        // Rows of B^T for node a: [ax, 0, ay] and [0, ay, ax].
        let ba = [[ax, 0.0, ay], [0.0, ay, ax]];
        let mut bc = [[0.0; 3]; 2];
        for r in 0..2 {
            for j in 0..3 {
                bc[r][j] = ba[r][0] * c[(0, j)] + ba[r][1] * c[(1, j)] + ba[r][2] * c[(2, j)];
            }
        }
        for b in 0..4 {
            let (bx, by) = (grad[b][0], grad[b][1]);
            let bb = [[bx, 0.0, by], [0.0, by, bx]];
            for r in 0..2 {
                for s in 0..2 {
                    let v = bc[r][0] * bb[s][0] + bc[r][1] * bb[s][1] + bc[r][2] * bb[s][2];
                    ke[2 * a + r][2 * b + s] += v * dv;
                }
            }
        }
    }
}

/// Bending run returning only the recorded curve.
pub fn run_bending(params: &MaterialParams, geom: &BeamGeometry, control: &SimulationControl) -> Result<ResponseCurve> {
    BeamModel::new(params, geom, Ligament::Cohesive)?.run(control).map(|r| r.curve)
}
