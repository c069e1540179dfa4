//! The circle-bundle lift of a surface into twistor space, and the defect
//! meters that certify it.
//!
//! Over each surface point the lift consists of the complex structures that
//! exchange the tangent and normal planes: the equator circle `J_theta =
//! cos(theta) J_2 + sin(theta) J_3` of the adapted-frame triple. The
//! resulting 3-manifold `L` in twistor space is measured against every
//! `(g_lambda, J_+/-)` at once:
//!
//! * `lagrangian_defect` — how far the fundamental 2-form is from vanishing
//!   on `TL`, computed through two independent routes (the split form and
//!   `g_lambda(J v, w)`).
//! * `mean_curvature_l` — the mean curvature vector of `L` in `(Z,
//!   g_lambda)` from stencil Christoffels of the assembled 6x6 metric.
//! * `converse_check` — given any fibered 3-submanifold chart, decide
//!   whether it is Lagrangian, projects to a surface, that projection is
//!   superminimal, and the fiber points sit on the projection's equator.
//!
//! All first derivatives of the lift chart come from second-order jets
//! through the whole frame pipeline (no differencing); finite differences
//! appear only where second derivatives of the chart or of the 6x6 metric
//! are required, and in the sampled-candidate converse path.

use crate::exec;
use crate::geom::{reference_frame, ManifoldModel};
use crate::jet::{Jet, Jet2, Jet3, Smooth};
use crate::surface::{
    adapted_frame_with_plan, frame_plan_from_jets, sff_from_jets, vertical_defect_of, FramePlan,
    ImmersedSurface, SurfaceError,
};
use crate::twistor::{
    acs_apply, dot3, equator_in_frame, fiber_coords_in_frame, g_lambda, integrate_geodesic,
    kahler_form, norm3, twistor_christoffel_fd, twistor_metric_matrix, BaseGeometry, FiberChart,
    HermitianPack, HermitianSign, TwistorChartPoint, TwistorError, TwistorPoint, TwistorTangent,
    METRIC_STENCIL_STEP,
};
use nalgebra::{Matrix3, SMatrix, SVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LiftError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Twistor(#[from] TwistorError),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
    #[error("theta grid must have at least 4 samples, got {0}")]
    ThetaGridTooSmall(usize),
    #[error("lambda list must be nonempty with positive entries")]
    BadLambdaList,
    #[error("sample ({u}, {v}) too close to the domain boundary for stencils of step {step}")]
    StencilOutsideDomain { u: f64, v: f64, step: f64 },
    #[error("lift chart does not exchange tangent and normal planes at ({u}, {v}): defect {defect}")]
    TangentPlaneNotExchanged { u: f64, v: f64, defect: f64 },
}

// ---------------------------------------------------------------------------
// The patch.
// ---------------------------------------------------------------------------

/// A sampled chart of the circle-bundle lift `L` of a surface.
#[derive(Debug, Clone)]
pub struct LagrangianPatch {
    surface: ImmersedSurface,
    pub n_theta: usize,
}

/// Value and exact first derivatives of the lift chart at one sample.
#[derive(Debug, Clone)]
pub struct PatchJet {
    pub point: TwistorPoint,
    /// Chart derivatives along `u`, `v`, `theta`; the `theta` derivative has
    /// `dx = 0` identically.
    pub tangents: [TwistorTangent; 3],
    pub x_jets: [Jet3; 4],
    pub j_jets: [Jet3; 3],
}

impl LagrangianPatch {
    /// Build and validate the lift: every grid sample must admit a frame
    /// plan, and the realized equator structures must exchange the tangent
    /// and normal planes.
    pub fn build(surface: ImmersedSurface, n_theta: usize) -> Result<Self, LiftError> {
        if n_theta < 4 {
            return Err(LiftError::ThetaGridTooSmall(n_theta));
        }
        let patch = LagrangianPatch { surface, n_theta };
        for (u, v) in patch.surface.grid_samples() {
            let jets = patch.surface.point_jets(u, v)?;
            let plan = frame_plan_from_jets(patch.surface.model, &jets, u, v)?;
            let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
            let mut tu = [0.0; 4];
            let mut tv = [0.0; 4];
            for k in 0..4 {
                tu[k] = jets[k].d[0];
                tv[k] = jets[k].d[1];
            }
            let frame = adapted_frame_with_plan(patch.surface.model, &x, &tu, &tv, &plan)
                .ok_or(SurfaceError::FrameCompletion { u, v })?;
            let g = patch.surface.model.metric_components(&x);
            // The equator structure must map span(e1,e2) into span(e3,e4):
            // tangential components of J e_1 and J e_2 must vanish.
            let theta0 = 0.37; // arbitrary angle; the property is theta-independent
            let jm = equator_in_frame(&g, &frame, theta0.cos(), theta0.sin());
            let mut defect = 0.0_f64;
            for ei in 0..2 {
                let mut je = [0.0; 4];
                for r in 0..4 {
                    for c in 0..4 {
                        je[r] += jm[r][c] * frame[ei][c];
                    }
                }
                for et in 0..2 {
                    defect = defect.max(crate::geom::dot_g(&g, &je, &frame[et]).abs());
                }
            }
            if defect > 1e-10 {
                return Err(LiftError::TangentPlaneNotExchanged { u, v, defect });
            }
        }
        Ok(patch)
    }

    pub fn surface(&self) -> &ImmersedSurface {
        &self.surface
    }

    pub fn theta(&self, it: usize) -> f64 {
        std::f64::consts::TAU * it as f64 / self.n_theta as f64
    }

    /// The lift chart value at `(u, v, theta)`.
    pub fn point(&self, u: f64, v: f64, theta: f64) -> Result<TwistorPoint, LiftError> {
        Ok(self.jet(u, v, theta)?.point)
    }

    /// Value plus exact chart derivatives, using the frame plan at the
    /// sample itself.
    pub fn jet(&self, u: f64, v: f64, theta: f64) -> Result<PatchJet, LiftError> {
        let jets = self.surface.point_jets(u, v)?;
        let plan = frame_plan_from_jets(self.surface.model, &jets, u, v)?;
        self.jet_with_plan(u, v, theta, &plan)
    }

    /// Value plus exact chart derivatives on the frame branch fixed by
    /// `plan` (stencil evaluations must share the center's plan).
    pub fn jet_with_plan(
        &self,
        u: f64,
        v: f64,
        theta: f64,
        plan: &FramePlan,
    ) -> Result<PatchJet, LiftError> {
        let model = self.surface.model;
        let base_jets = self.surface.point_jets(u, v)?;

        // Promote the exact (u, v) jets into (u, v, theta) arithmetic. The
        // tangent promotions carry exact values and first derivatives; their
        // own second-order slots are truncated, which only pollutes second
        // derivatives of downstream quantities — never read from this path.
        let mut x = [Jet3::c(0.0); 4];
        let mut tu = [Jet3::c(0.0); 4];
        let mut tv = [Jet3::c(0.0); 4];
        for k in 0..4 {
            x[k] = base_jets[k].lift3();
            tu[k] = promote_derivative(&base_jets[k], 0);
            tv[k] = promote_derivative(&base_jets[k], 1);
        }

        let frame = adapted_frame_with_plan(model, &x, &tu, &tv, plan).ok_or(
            SurfaceError::FrameCompletion { u, v },
        )?;
        let g = model.metric_components(&x);
        let th = Jet3::variable(2, theta);
        let j_chart = equator_in_frame(&g, &frame, th.cos(), th.sin());
        let ref_frame = reference_frame::<Jet3>(&g);
        let j = fiber_coords_in_frame(&g, &ref_frame, &j_chart);

        let point = TwistorPoint::new(
            model,
            [x[0].v, x[1].v, x[2].v, x[3].v],
            [j[0].v, j[1].v, j[2].v],
        )?;
        let mut tangents = [TwistorTangent::zero(); 3];
        for dir in 0..3 {
            for k in 0..4 {
                tangents[dir].dx[k] = x[k].d[dir];
            }
            for c in 0..3 {
                tangents[dir].dj[c] = j[c].d[dir];
            }
        }
        Ok(PatchJet { point, tangents, x_jets: x, j_jets: j })
    }
}

/// Embed the `dir`-th first derivative of a `(u, v)` jet as a `(u, v,
/// theta)` quantity: value and first derivatives exact, second order
/// truncated.
fn promote_derivative(jet: &Jet2, dir: usize) -> Jet3 {
    let mut out = Jet3::c(jet.d[dir]);
    out.d[0] = jet.h[dir][0];
    out.d[1] = jet.h[dir][1];
    out
}

/// The raw tangent triple `(v1, v2, v3)` of the lift chart.
pub fn tangent_frame_l(
    patch: &LagrangianPatch,
    u: f64,
    v: f64,
    theta: f64,
) -> Result<[TwistorTangent; 3], LiftError> {
    Ok(patch.jet(u, v, theta)?.tangents)
}

// ---------------------------------------------------------------------------
// Lagrangian defect.
// ---------------------------------------------------------------------------

/// Defect of one `(lambda, sign)` member over the whole sample grid, through
/// both evaluation routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PackDefect {
    pub pack: HermitianPack,
    /// max |omega(v_i, v_j)| via the split-form route.
    pub max_form_defect: f64,
    /// max |g_lambda(J v_i, v_j)| via the endomorphism route.
    pub max_metric_defect: f64,
    /// Grid indices `(iu, iv, itheta)` of the form-route maximum.
    pub argmax: (usize, usize, usize),
}

/// Aggregated defects over a lambda sweep with both signs.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub lambda_list: Vec<f64>,
    pub max_omega_plus: f64,
    pub argmax_plus: (usize, usize, usize, usize),
    pub max_omega_minus: f64,
    pub argmax_minus: (usize, usize, usize, usize),
    /// Worst defect of the independent `g_lambda(J v, w)` route over all
    /// packs (cross-checks the form route).
    pub max_metric_defect: f64,
    pub per_pack: Vec<PackDefect>,
}

/// Normalize a tangent to unit `g_lambda` length.
fn normalized(
    pack: &HermitianPack,
    base: &BaseGeometry,
    j: &[f64; 3],
    t: &TwistorTangent,
) -> TwistorTangent {
    let n = g_lambda(pack, base, j, t, t).sqrt();
    let inv = if n > 0.0 { 1.0 / n } else { 0.0 };
    TwistorTangent {
        dx: [t.dx[0] * inv, t.dx[1] * inv, t.dx[2] * inv, t.dx[3] * inv],
        dj: [t.dj[0] * inv, t.dj[1] * inv, t.dj[2] * inv],
    }
}

/// Sweep the patch against several packs at once, sharing the jet pipeline.
pub fn defect_sweep(
    patch: &LagrangianPatch,
    packs: &[HermitianPack],
) -> Result<Vec<PackDefect>, LiftError> {
    let nu = patch.surface().grid[0];
    let nv = patch.surface().grid[1];
    let nt = patch.n_theta;
    let model = patch.surface().model;

    type RowResult = Result<Vec<(f64, f64, (usize, usize, usize))>, LiftError>;
    let rows: Vec<RowResult> = exec::map_indexed(nu * nv, |idx| {
        let iu = idx / nv;
        let iv = idx % nv;
        let u = patch.surface().grid_u(iu);
        let v = patch.surface().grid_v(iv);
        let jets = patch.surface().point_jets(u, v)?;
        let plan = frame_plan_from_jets(model, &jets, u, v)?;
        let mut acc: Vec<(f64, f64, (usize, usize, usize))> =
            vec![(0.0, 0.0, (iu, iv, 0)); packs.len()];
        for it in 0..nt {
            let pj = patch.jet_with_plan(u, v, patch.theta(it), &plan)?;
            let base = BaseGeometry::at(model, pj.point.x)?;
            let j = pj.point.j;
            for (pidx, pack) in packs.iter().enumerate() {
                let vhat = [
                    normalized(pack, &base, &j, &pj.tangents[0]),
                    normalized(pack, &base, &j, &pj.tangents[1]),
                    normalized(pack, &base, &j, &pj.tangents[2]),
                ];
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    let form = kahler_form(pack, &base, &j, &vhat[a], &vhat[b]).abs();
                    let via_acs = g_lambda(
                        pack,
                        &base,
                        &j,
                        &acs_apply(pack, &base, &j, &vhat[a]),
                        &vhat[b],
                    )
                    .abs();
                    let slot = &mut acc[pidx];
                    if form > slot.0 {
                        slot.0 = form;
                        slot.2 = (iu, iv, it);
                    }
                    if via_acs > slot.1 {
                        slot.1 = via_acs;
                    }
                }
            }
        }
        Ok(acc)
    });

    let mut out: Vec<PackDefect> = packs
        .iter()
        .map(|&pack| PackDefect {
            pack,
            max_form_defect: 0.0,
            max_metric_defect: 0.0,
            argmax: (0, 0, 0),
        })
        .collect();
    for row in rows {
        let row = row?;
        for (pidx, (form, metric, arg)) in row.into_iter().enumerate() {
            if form > out[pidx].max_form_defect {
                out[pidx].max_form_defect = form;
                out[pidx].argmax = arg;
            }
            if metric > out[pidx].max_metric_defect {
                out[pidx].max_metric_defect = metric;
            }
        }
    }
    Ok(out)
}

/// Defect of a single pack.
pub fn lagrangian_defect(
    patch: &LagrangianPatch,
    pack: &HermitianPack,
) -> Result<PackDefect, LiftError> {
    Ok(defect_sweep(patch, &[*pack])?.remove(0))
}

/// Defect sweep over a lambda list, both signs.
pub fn lagrangian_defect_sweep(
    patch: &LagrangianPatch,
    lambdas: &[f64],
) -> Result<DefectReport, LiftError> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(LiftError::BadLambdaList);
    }
    let mut packs = Vec::with_capacity(lambdas.len() * 2);
    for &lambda in lambdas {
        packs.push(HermitianPack::new(lambda, HermitianSign::Plus)?);
        packs.push(HermitianPack::new(lambda, HermitianSign::Minus)?);
    }
    let per_pack = defect_sweep(patch, &packs)?;
    let mut report = DefectReport {
        lambda_list: lambdas.to_vec(),
        max_omega_plus: 0.0,
        argmax_plus: (0, 0, 0, 0),
        max_omega_minus: 0.0,
        argmax_minus: (0, 0, 0, 0),
        max_metric_defect: 0.0,
        per_pack: per_pack.clone(),
    };
    for (pidx, pd) in per_pack.iter().enumerate() {
        let lidx = pidx / 2;
        let arg = (lidx, pd.argmax.0, pd.argmax.1, pd.argmax.2);
        match pd.pack.sign {
            HermitianSign::Plus => {
                if pd.max_form_defect > report.max_omega_plus {
                    report.max_omega_plus = pd.max_form_defect;
                    report.argmax_plus = arg;
                }
            }
            HermitianSign::Minus => {
                if pd.max_form_defect > report.max_omega_minus {
                    report.max_omega_minus = pd.max_form_defect;
                    report.argmax_minus = arg;
                }
            }
        }
        report.max_metric_defect = report.max_metric_defect.max(pd.max_metric_defect);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Mean curvature of L.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct MeanCurvatureOptions {
    /// Step for stencil Christoffels of the 6x6 metric.
    pub metric_step: f64,
    /// Step for differencing the exact chart first derivatives into second
    /// derivatives.
    pub jet_step: f64,
}

impl Default for MeanCurvatureOptions {
    fn default() -> Self {
        MeanCurvatureOptions { metric_step: METRIC_STENCIL_STEP, jet_step: 1e-4 }
    }
}

/// Mean curvature vector of the lift at one sample.
#[derive(Debug, Clone)]
pub struct MeanCurvatureL {
    /// `g_lambda`-norm of the mean curvature vector (the trace of the
    /// second fundamental form of `L`, no dimensional averaging).
    pub norm: f64,
    /// Components in a deterministic `g_lambda`-orthonormal normal frame.
    pub normal_components: [f64; 3],
    /// The vector itself in `(dx, dj)` coordinates.
    pub vector: TwistorTangent,
}

/// Chart value and jacobian of the lift map `(u, v, theta) -> (x, s)` on a
/// frozen frame plan and fiber sub-chart.
fn chart_value_and_jacobian(
    patch: &LagrangianPatch,
    u: f64,
    v: f64,
    theta: f64,
    plan: &FramePlan,
    chart: FiberChart,
) -> Result<([f64; 6], [[f64; 3]; 6]), LiftError> {
    let pj = patch.jet_with_plan(u, v, theta, plan)?;
    let s = chart.from_sphere(&pj.j_jets);
    let mut value = [0.0; 6];
    let mut jac = [[0.0; 3]; 6];
    for k in 0..4 {
        value[k] = pj.x_jets[k].v;
        jac[k] = pj.x_jets[k].d;
    }
    for t in 0..2 {
        value[4 + t] = s[t].v;
        jac[4 + t] = s[t].d;
    }
    Ok((value, jac))
}

/// Mean curvature vector of `L` in `(Z, g_lambda)` at `(u, v, theta)`.
///
/// Tangents are exact; second chart derivatives come from central
/// differences of the exact first derivatives; the ambient Christoffels come
/// from stencil differentiation of the assembled 6x6 metric.
pub fn mean_curvature_l(
    patch: &LagrangianPatch,
    pack: &HermitianPack,
    u: f64,
    v: f64,
    theta: f64,
    opts: &MeanCurvatureOptions,
) -> Result<MeanCurvatureL, LiftError> {
    let s = patch.surface();
    let h = opts.jet_step;
    let [du, dv] = s.domain;
    if u - h < du[0] || u + h > du[1] || v - h < dv[0] || v + h > dv[1] {
        return Err(LiftError::StencilOutsideDomain { u, v, step: h });
    }

    let jets = s.point_jets(u, v)?;
    let plan = frame_plan_from_jets(s.model, &jets, u, v)?;
    let center = patch.jet_with_plan(u, v, theta, &plan)?;
    let chart = FiberChart::for_j(&center.point.j);

    let (_, jac0) = chart_value_and_jacobian(patch, u, v, theta, &plan, chart)?;

    // Second derivatives: central differences of the jacobian per parameter.
    let mut second = [[[0.0; 3]; 3]; 6]; // second[c][k][m] = d^2 phi_c / dxi_k dxi_m
    for k in 0..3 {
        let (mut pu, mut pv, mut pt) = (u, v, theta);
        match k {
            0 => pu += h,
            1 => pv += h,
            _ => pt += h,
        }
        let (_, jp) = chart_value_and_jacobian(patch, pu, pv, pt, &plan, chart)?;
        let (mut mu, mut mv, mut mt) = (u, v, theta);
        match k {
            0 => mu -= h,
            1 => mv -= h,
            _ => mt -= h,
        }
        let (_, jm) = chart_value_and_jacobian(patch, mu, mv, mt, &plan, chart)?;
        for c in 0..6 {
            for m in 0..3 {
                second[c][k][m] = (jp[c][m] - jm[c][m]) / (2.0 * h);
            }
        }
    }
    // Symmetrize the mixed entries.
    for c in 0..6 {
        for k in 0..3 {
            for m in (k + 1)..3 {
                let sym = 0.5 * (second[c][k][m] + second[c][m][k]);
                second[c][k][m] = sym;
                second[c][m][k] = sym;
            }
        }
    }

    let q = TwistorChartPoint {
        x: center.point.x,
        s: chart.from_sphere(&center.point.j),
        chart,
    };
    let metric = twistor_metric_matrix(pack, s.model, &q)?;
    let gamma = twistor_christoffel_fd(pack, s.model, &q, opts.metric_step)?;

    // Tangent vectors as 6-vectors.
    let mut t = [SVector::<f64, 6>::zeros(); 3];
    for a in 0..3 {
        for c in 0..6 {
            t[a][c] = jac0[c][a];
        }
    }
    // Induced metric and inverse.
    let mut gram = Matrix3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            gram[(a, b)] = (t[a].transpose() * metric * t[b])[(0, 0)];
        }
    }
    let gram_inv = gram.try_inverse().expect("lift chart must be immersed");

    // Covariant second derivatives and their normal projections.
    let mut mean = SVector::<f64, 6>::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let mut cov = SVector::<f64, 6>::zeros();
            for c in 0..6 {
                let mut val = second[c][a][b];
                for i in 0..6 {
                    for j in 0..6 {
                        val += gamma[c][i][j] * t[a][i] * t[b][j];
                    }
                }
                cov[c] = val;
            }
            // Tangential projection: coefficients in the tangent basis.
            let rhs = SVector::<f64, 3>::from_fn(|e, _| (t[e].transpose() * metric * cov)[(0, 0)]);
            let coef = gram_inv * rhs;
            let mut normal = cov;
            for e in 0..3 {
                normal -= t[e] * coef[e];
            }
            mean += normal * gram_inv[(a, b)];
        }
    }

    let norm = (mean.transpose() * metric * mean)[(0, 0)].max(0.0).sqrt();

    // Deterministic orthonormal normal frame from the ambient chart basis.
    let mut normal_frame: Vec<SVector<f64, 6>> = Vec::with_capacity(3);
    let mut tangent_basis: Vec<SVector<f64, 6>> = t.to_vec();
    // Orthonormalize the tangent basis first (metric inner product).
    orthonormalize6(&metric, &mut tangent_basis);
    for k in 0..6 {
        if normal_frame.len() == 3 {
            break;
        }
        let mut cand = SVector::<f64, 6>::zeros();
        cand[k] = 1.0;
        for e in tangent_basis.iter().chain(normal_frame.iter()) {
            let c = (e.transpose() * metric * cand)[(0, 0)];
            cand -= e * c;
        }
        let n2 = (cand.transpose() * metric * cand)[(0, 0)];
        if n2 > 1e-12 {
            normal_frame.push(cand / n2.sqrt());
        }
    }
    let mut normal_components = [0.0; 3];
    for (i, n) in normal_frame.iter().enumerate() {
        normal_components[i] = (n.transpose() * metric * mean)[(0, 0)];
    }

    // Convert (dx, ds) to (dx, dj).
    let d = chart.jacobian(&q.s);
    let mut dj = [0.0; 3];
    for r in 0..3 {
        dj[r] = d[r][0] * mean[4] + d[r][1] * mean[5];
    }
    Ok(MeanCurvatureL {
        norm,
        normal_components,
        vector: TwistorTangent { dx: [mean[0], mean[1], mean[2], mean[3]], dj },
    })
}

fn orthonormalize6(metric: &SMatrix<f64, 6, 6>, basis: &mut Vec<SVector<f64, 6>>) {
    let mut out: Vec<SVector<f64, 6>> = Vec::with_capacity(basis.len());
    for v in basis.iter() {
        let mut w = *v;
        for e in &out {
            let c = (e.transpose() * metric * w)[(0, 0)];
            w -= e * c;
        }
        let n2 = (w.transpose() * metric * w)[(0, 0)];
        if n2 > 0.0 {
            out.push(w / n2.sqrt());
        }
    }
    *basis = out;
}

/// Interior grid samples (margin in cells) for mean-curvature sweeps.
pub fn interior_samples(surface: &ImmersedSurface, margin: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for iu in margin..surface.grid[0].saturating_sub(margin) {
        for iv in margin..surface.grid[1].saturating_sub(margin) {
            out.push((iu, iv));
        }
    }
    out
}

/// Max mean-curvature norm over interior samples and the whole theta grid.
pub fn mean_curvature_sweep(
    patch: &LagrangianPatch,
    pack: &HermitianPack,
    margin: usize,
    opts: &MeanCurvatureOptions,
) -> Result<(f64, (usize, usize, usize)), LiftError> {
    let samples = interior_samples(patch.surface(), margin);
    let nt = patch.n_theta;
    let rows: Vec<Result<(f64, usize), LiftError>> =
        exec::map_indexed(samples.len(), |sidx| {
            let (iu, iv) = samples[sidx];
            let u = patch.surface().grid_u(iu);
            let v = patch.surface().grid_v(iv);
            let mut worst = (0.0_f64, 0usize);
            for it in 0..nt {
                let mc = mean_curvature_l(patch, pack, u, v, patch.theta(it), opts)?;
                if mc.norm > worst.0 {
                    worst = (mc.norm, it);
                }
            }
            Ok(worst)
        });
    let mut best = 0.0;
    let mut arg = (0, 0, 0);
    for (sidx, row) in rows.into_iter().enumerate() {
        let (norm, it) = row?;
        if norm > best {
            best = norm;
            let (iu, iv) = samples[sidx];
            arg = (iu, iv, it);
        }
    }
    Ok((best, arg))
}

// ---------------------------------------------------------------------------
// Ruling property.
// ---------------------------------------------------------------------------

/// Integrate the `g_lambda` geodesic tangent to the fiber circle of the lift
/// and measure how far it strays from that circle: max over checkpoints of
/// base drift and of the equator-coordinate residual in the adapted frame.
pub fn ruling_defect(
    patch: &LagrangianPatch,
    pack: &HermitianPack,
    u: f64,
    v: f64,
    theta: f64,
    n_steps: usize,
) -> Result<f64, LiftError> {
    let model = patch.surface().model;
    let pj = patch.jet(u, v, theta)?;
    let x0 = pj.point.x;
    // Unit-speed vertical velocity along the circle.
    let mut dj = pj.tangents[2].dj;
    let n = norm3(&dj) / pack.lambda; // |dj| = lambda gives unit g_lambda speed
    for c in dj.iter_mut() {
        *c /= n;
    }
    let v3 = TwistorTangent { dx: [0.0; 4], dj };

    // The fiber circle in reference-triple coordinates: orthogonal to the
    // adapted-frame pole direction.
    let frame = patch.surface().adapted_frame(u, v)?;
    let base = BaseGeometry::at(model, x0)?;
    let pole_chart = crate::twistor::realize_in_frame(
        &base.g,
        &frame,
        &[1.0, 0.0, 0.0],
    );
    let pole = fiber_coords_in_frame(&base.g, &base.frame, &pole_chart);

    let total_time = std::f64::consts::TAU / pack.lambda;
    let checkpoints = 8;
    let mut state = (pj.point, v3);
    let mut worst = 0.0_f64;
    for _ in 0..checkpoints {
        let (p, vel) = integrate_geodesic(
            pack,
            model,
            &state.0,
            &state.1,
            total_time / checkpoints as f64,
            n_steps / checkpoints,
            METRIC_STENCIL_STEP,
        )?;
        let drift = (0..4).map(|k| (p.x[k] - x0[k]).powi(2)).sum::<f64>().sqrt();
        let circle_residual = dot3(&p.j, &pole).abs();
        worst = worst.max(drift).max(circle_residual);
        state = (p, vel);
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Curvature fiber components (the homogeneous-model pairing check).
// ---------------------------------------------------------------------------

/// Fiber-triple coefficients of the curvature operator `R(e1, e2)` in the
/// adapted frame. In a constant-curvature model the operator is the tangent
/// 2-plane rotation, whose triple part is purely along the pole `J_1`: the
/// equator components (the last two) vanish identically.
pub fn curvature_fiber_components(
    surface: &ImmersedSurface,
    u: f64,
    v: f64,
) -> Result<[f64; 3], LiftError> {
    let x = {
        let j = surface.point_jets(u, v)?;
        [j[0].v, j[1].v, j[2].v, j[3].v]
    };
    let frame = surface.adapted_frame(u, v)?;
    let riemann = surface.model.riemann_at(&crate::geom::ChartPoint(x))?;
    // F[a][b] = <e_a, R(e1, e2) e_b>.
    let mut f = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut val = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in 0..4 {
                            val += riemann[i][j][k][l]
                                * frame[0][i]
                                * frame[1][j]
                                * frame[a][k]
                                * frame[b][l];
                        }
                    }
                }
            }
            f[a][b] = val;
        }
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut tr = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                if crate::twistor::TRIPLE[c][a][b] != 0.0 {
                    tr += crate::twistor::TRIPLE[c][a][b] * f[b][a];
                }
            }
        }
        out[c] = -0.25 * tr;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Converse check.
// ---------------------------------------------------------------------------

/// A fibered 3-parameter chart of twistor points to test against the
/// converse direction: either an exact lift patch or a sampled map (whose
/// derivatives are taken by central differences at a documented, relaxed
/// tolerance).
pub enum Candidate {
    Lift(LagrangianPatch),
    Sampled(SampledChart),
}

/// Sampled candidate: a black-box chart map on a box domain, fibered in the
/// third parameter.
pub struct SampledChart {
    pub model: ManifoldModel,
    pub domain: [[f64; 2]; 3],
    pub grid: [usize; 3],
    pub map: Box<dyn Fn(f64, f64, f64) -> Result<TwistorPoint, LiftError> + Sync>,
}

impl SampledChart {
    fn coord(&self, axis: usize, idx: usize) -> f64 {
        let [lo, hi] = self.domain[axis];
        lo + (hi - lo) * idx as f64 / (self.grid[axis] - 1) as f64
    }
}

/// One stage of the converse pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ConverseStage {
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured value for this stage's criterion.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConverseReport {
    pub stages: Vec<ConverseStage>,
    pub passed: bool,
    /// Index of the first failing stage, if any.
    pub failed_stage: Option<usize>,
}

/// Tolerances of the four converse stages. The exact-jet route uses the
/// tight values; the sampled route relaxes the Lagrangian and
/// superminimality stages to 1e-4 (finite-difference accuracy).
#[derive(Debug, Clone, Copy)]
pub struct ConverseTolerances {
    pub lagrangian: f64,
    /// Relative singular-value bound for "projected rank exactly 2".
    pub rank_drop: f64,
    pub rank_keep: f64,
    pub superminimal: f64,
    pub containment: f64,
}

impl ConverseTolerances {
    pub fn exact() -> Self {
        ConverseTolerances {
            lagrangian: 1e-5,
            rank_drop: 1e-6,
            rank_keep: 1e-3,
            superminimal: 1e-6,
            containment: 1e-6,
        }
    }

    pub fn sampled() -> Self {
        ConverseTolerances {
            lagrangian: 1e-4,
            rank_drop: 1e-4,
            rank_keep: 1e-3,
            superminimal: 1e-4,
            containment: 1e-6,
        }
    }
}

struct CandidateSample {
    point: TwistorPoint,
    tangents: [TwistorTangent; 3],
}

fn candidate_samples(candidate: &Candidate) -> Result<Vec<CandidateSample>, LiftError> {
    match candidate {
        Candidate::Lift(patch) => {
            let s = patch.surface();
            let mut out = Vec::new();
            for (u, v) in s.grid_samples() {
                for it in 0..patch.n_theta {
                    let pj = patch.jet(u, v, patch.theta(it))?;
                    out.push(CandidateSample { point: pj.point, tangents: pj.tangents });
                }
            }
            Ok(out)
        }
        Candidate::Sampled(chart) => {
            let mut out = Vec::new();
            let h = 1e-5;
            for i0 in 0..chart.grid[0] {
                for i1 in 0..chart.grid[1] {
                    for i2 in 0..chart.grid[2] {
                        let p = [chart.coord(0, i0), chart.coord(1, i1), chart.coord(2, i2)];
                        let point = (chart.map)(p[0], p[1], p[2])?;
                        let mut tangents = [TwistorTangent::zero(); 3];
                        for (axis, t) in tangents.iter_mut().enumerate() {
                            let mut pp = p;
                            let mut pm = p;
                            pp[axis] += h;
                            pm[axis] -= h;
                            let fp = (chart.map)(pp[0], pp[1], pp[2])?;
                            let fm = (chart.map)(pm[0], pm[1], pm[2])?;
                            for k in 0..4 {
                                t.dx[k] = (fp.x[k] - fm.x[k]) / (2.0 * h);
                            }
                            for c in 0..3 {
                                t.dj[c] = (fp.j[c] - fm.j[c]) / (2.0 * h);
                            }
                        }
                        out.push(CandidateSample { point, tangents });
                    }
                }
            }
            Ok(out)
        }
    }
}

fn candidate_model(candidate: &Candidate) -> ManifoldModel {
    match candidate {
        Candidate::Lift(patch) => patch.surface().model,
        Candidate::Sampled(chart) => chart.model,
    }
}

/// Run the converse pipeline: (a) Lagrangian for both signs across the
/// lambda list, (b) the projected differential has rank exactly 2, (c) the
/// projected surface is superminimal, (d) every fiber point lies on the
/// equator circle of the projection. Later stages still run when earlier
/// ones fail (their findings are part of the report), except where a failed
/// stage makes them meaningless.
pub fn converse_check(
    candidate: &Candidate,
    lambdas: &[f64],
    tol: &ConverseTolerances,
) -> Result<ConverseReport, LiftError> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(LiftError::BadLambdaList);
    }
    let model = candidate_model(candidate);
    let samples = candidate_samples(candidate)?;
    let mut stages = Vec::with_capacity(4);

    // (a) Lagrangian defect for both signs over the lambda list.
    let mut worst_defect = 0.0_f64;
    for sample in &samples {
        let base = BaseGeometry::at(model, sample.point.x)?;
        let j = sample.point.j;
        for &lambda in lambdas {
            for sign in [HermitianSign::Plus, HermitianSign::Minus] {
                let pack = HermitianPack::new(lambda, sign)?;
                let vhat = [
                    normalized(&pack, &base, &j, &sample.tangents[0]),
                    normalized(&pack, &base, &j, &sample.tangents[1]),
                    normalized(&pack, &base, &j, &sample.tangents[2]),
                ];
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    worst_defect = worst_defect
                        .max(kahler_form(&pack, &base, &j, &vhat[a], &vhat[b]).abs());
                }
            }
        }
    }
    let lagrangian_ok = worst_defect < tol.lagrangian;
    stages.push(ConverseStage {
        name: "lagrangian",
        passed: lagrangian_ok,
        worst: worst_defect,
        tolerance: tol.lagrangian,
        detail: format!(
            "max |omega(v_i, v_j)| over both signs, lambda in {:?}",
            lambdas
        ),
    });

    // (b) Projected differential rank exactly 2 (fibered candidates).
    let mut worst_drop = 0.0_f64; // third singular value relative to first
    let mut worst_keep = f64::INFINITY; // second singular value relative to first
    for sample in &samples {
        let m = nalgebra::Matrix3x4::from_fn(|r, c| sample.tangents[r].dx[c]);
        let svals = m.svd(false, false).singular_values;
        let (s1, s2, s3) = (svals[0], svals[1], svals[2]);
        if s1 < 1e-9 {
            worst_keep = 0.0;
            continue;
        }
        worst_drop = worst_drop.max(s3 / s1);
        worst_keep = worst_keep.min(s2 / s1);
    }
    let rank_ok = worst_drop < tol.rank_drop && worst_keep > tol.rank_keep;
    stages.push(ConverseStage {
        name: "rank-2 projection",
        passed: rank_ok,
        worst: if worst_keep <= tol.rank_keep { worst_keep } else { worst_drop },
        tolerance: if worst_keep <= tol.rank_keep { tol.rank_keep } else { tol.rank_drop },
        detail: format!(
            "singular-value ratios of the projected differential: drop {:.3e} (< {:.1e}), keep {:.3e} (> {:.1e})",
            worst_drop, tol.rank_drop, worst_keep, tol.rank_keep
        ),
    });

    // (c) Superminimality of the projection. Without rank 2 there is no
    // projected surface to measure, so the stage fails without evaluating.
    let (worst_vertical, vertical_detail) = if !rank_ok {
        (
            f64::INFINITY,
            "projection is not a surface; nothing to measure".to_string(),
        )
    } else {
        match candidate {
            Candidate::Lift(patch) => {
                let sweep = patch.surface().superminimality_sweep()?;
                (
                    sweep.max_vertical_defect,
                    "vertical defect of the source surface over its grid".to_string(),
                )
            }
            Candidate::Sampled(chart) => projected_vertical_defect(chart)?,
        }
    };
    stages.push(ConverseStage {
        name: "superminimal projection",
        passed: rank_ok && worst_vertical < tol.superminimal,
        worst: worst_vertical,
        tolerance: tol.superminimal,
        detail: vertical_detail,
    });

    // (d) Equator containment: in the adapted frame of the projection the
    // candidate fiber point must be orthogonal to the pole J_1. Needs a
    // projected surface, hence rank 2.
    let mut worst_containment = if rank_ok { 0.0_f64 } else { f64::INFINITY };
    match candidate {
        _ if !rank_ok => {}
        Candidate::Lift(patch) => {
            let s = patch.surface();
            for (u, v) in s.grid_samples() {
                let frame = s.adapted_frame(u, v)?;
                let jets = s.point_jets(u, v)?;
                let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
                let base = BaseGeometry::at(model, x)?;
                let pole_chart =
                    crate::twistor::realize_in_frame(&base.g, &frame, &[1.0, 0.0, 0.0]);
                let pole = fiber_coords_in_frame(&base.g, &base.frame, &pole_chart);
                for it in 0..patch.n_theta {
                    let p = patch.point(u, v, patch.theta(it))?;
                    worst_containment = worst_containment
                        .max(dot3(&p.j, &pole).abs())
                        .max((norm3(&p.j) - 1.0).abs());
                }
            }
        }
        Candidate::Sampled(chart) => {
            for i0 in 0..chart.grid[0] {
                for i1 in 0..chart.grid[1] {
                    let (u, v) = (chart.coord(0, i0), chart.coord(1, i1));
                    let Some(jets) = projected_point_jets(chart, u, v)? else {
                        continue;
                    };
                    let frame =
                        crate::surface::adapted_frame_from_jets(chart.model, &jets, u, v)?;
                    let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
                    let base = BaseGeometry::at(model, x)?;
                    let pole_chart =
                        crate::twistor::realize_in_frame(&base.g, &frame, &[1.0, 0.0, 0.0]);
                    let pole = fiber_coords_in_frame(&base.g, &base.frame, &pole_chart);
                    for i2 in 0..chart.grid[2] {
                        let p = (chart.map)(u, v, chart.coord(2, i2))?;
                        worst_containment = worst_containment
                            .max(dot3(&p.j, &pole).abs())
                            .max((norm3(&p.j) - 1.0).abs());
                    }
                }
            }
        }
    }
    let containment_ok = rank_ok && worst_containment < tol.containment;
    stages.push(ConverseStage {
        name: "equator containment",
        passed: containment_ok,
        worst: worst_containment,
        tolerance: tol.containment,
        detail: "max |<j, pole>| and unit-norm residual over all samples".to_string(),
    });

    let failed_stage = stages.iter().position(|s| !s.passed);
    Ok(ConverseReport { passed: failed_stage.is_none(), stages, failed_stage })
}

/// Finite-difference point jets of the sampled chart's projection at `(u,
/// v)` (theta fixed at the first grid value). Returns `None` at boundary
/// points where the stencil leaves the domain.
fn projected_point_jets(
    chart: &SampledChart,
    u: f64,
    v: f64,
) -> Result<Option<[Jet2; 4]>, LiftError> {
    let h = 1e-3_f64
        .min((chart.domain[0][1] - chart.domain[0][0]) / 64.0)
        .min((chart.domain[1][1] - chart.domain[1][0]) / 64.0);
    if u - h < chart.domain[0][0]
        || u + h > chart.domain[0][1]
        || v - h < chart.domain[1][0]
        || v + h > chart.domain[1][1]
    {
        return Ok(None);
    }
    let t0 = chart.domain[2][0];
    let at = |uu: f64, vv: f64| -> Result<[f64; 4], LiftError> {
        Ok((chart.map)(uu, vv, t0)?.x)
    };
    let c = at(u, v)?;
    let pu = at(u + h, v)?;
    let mu = at(u - h, v)?;
    let pv = at(u, v + h)?;
    let mv = at(u, v - h)?;
    let pp = at(u + h, v + h)?;
    let pm = at(u + h, v - h)?;
    let mp = at(u - h, v + h)?;
    let mm = at(u - h, v - h)?;
    let mut jets = [Jet::<2>::c(0.0); 4];
    for k in 0..4 {
        jets[k].v = c[k];
        jets[k].d = [(pu[k] - mu[k]) / (2.0 * h), (pv[k] - mv[k]) / (2.0 * h)];
        let duu = (pu[k] - 2.0 * c[k] + mu[k]) / (h * h);
        let dvv = (pv[k] - 2.0 * c[k] + mv[k]) / (h * h);
        let duv = (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h);
        jets[k].h = [[duu, duv], [duv, dvv]];
    }
    Ok(Some(jets))
}

/// Worst vertical defect of the sampled chart's projection over interior
/// grid points.
fn projected_vertical_defect(chart: &SampledChart) -> Result<(f64, String), LiftError> {
    let mut worst = 0.0_f64;
    let mut count = 0usize;
    for i0 in 0..chart.grid[0] {
        for i1 in 0..chart.grid[1] {
            let (u, v) = (chart.coord(0, i0), chart.coord(1, i1));
            let Some(jets) = projected_point_jets(chart, u, v)? else {
                continue;
            };
            let sff = sff_from_jets(chart.model, &jets, u, v)?;
            worst = worst.max(vertical_defect_of(&sff));
            count += 1;
        }
    }
    Ok((
        worst,
        format!("finite-difference vertical defect of the projection over {count} interior samples"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use approx::assert_abs_diff_eq;

    fn build(name: &str, grid: [usize; 2], n_theta: usize) -> LagrangianPatch {
        let s = corpus::entry(name).unwrap().build_with_grid(grid).unwrap();
        LagrangianPatch::build(s, n_theta).unwrap()
    }

    #[test]
    fn plane_lift_is_product_of_constant_circles() {
        let patch = build("plane_r4", [6, 6], 8);
        let p1 = patch.point(0.2, -0.3, patch.theta(3)).unwrap();
        let p2 = patch.point(-0.6, 0.9, patch.theta(3)).unwrap();
        for c in 0..3 {
            assert_abs_diff_eq!(p1.j[c], p2.j[c], epsilon = 1e-13);
        }
        // The circle is exactly the reference-triple equator in flat space.
        assert_abs_diff_eq!(p1.j[0], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn lift_projects_to_the_surface_and_exchanges_planes() {
        for name in ["graph_z2", "clifford", "veronese"] {
            let patch = build(name, [5, 5], 8);
            let s = patch.surface().clone();
            for (u, v) in s.grid_samples().into_iter().step_by(7) {
                let x = s.chart_point(u, v).unwrap();
                for it in [0, 3] {
                    let p = patch.point(u, v, patch.theta(it)).unwrap();
                    for k in 0..4 {
                        assert_abs_diff_eq!(p.x[k], x[k], epsilon = 1e-12);
                    }
                    // Realized J maps the tangent plane into the normal plane.
                    let frame = s.adapted_frame(u, v).unwrap();
                    let jm = p.realized().unwrap();
                    let g = s.model.metric_components(&x);
                    for ei in 0..2 {
                        let mut je = [0.0; 4];
                        for r in 0..4 {
                            for c in 0..4 {
                                je[r] += jm[(r, c)] * frame[ei][c];
                            }
                        }
                        for et in 0..2 {
                            let tangential = crate::geom::dot_g(&g, &je, &frame[et]);
                            assert!(
                                tangential.abs() < 1e-10,
                                "{name}: J does not exchange planes ({tangential:.2e})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn theta_grids_share_samples_exactly() {
        let s = corpus::entry("graph_z2").unwrap().build_with_grid([5, 5]).unwrap();
        let p8 = LagrangianPatch::build(s.clone(), 8).unwrap();
        let p16 = LagrangianPatch::build(s, 16).unwrap();
        for it in 0..8 {
            let a = p8.point(0.31, -0.47, p8.theta(it)).unwrap();
            let b = p16.point(0.31, -0.47, p16.theta(2 * it)).unwrap();
            assert_eq!(a.x, b.x);
            assert_eq!(a.j, b.j);
        }
    }

    #[test]
    fn tangent_frame_theta_derivative_is_vertical() {
        let patch = build("sphere_tg", [5, 5], 8);
        let t = tangent_frame_l(&patch, 0.4, -0.2, 1.1).unwrap();
        assert_eq!(t[2].dx, [0.0; 4]);
        assert!(norm3(&t[2].dj) > 0.1, "theta direction must move the fiber");
    }

    #[test]
    fn exact_tangents_match_finite_differences() {
        let patch = build("veronese", [5, 5], 8);
        let (u, v, theta) = (0.17, -0.23, 0.9);
        let pj = patch.jet(u, v, theta).unwrap();
        let h = 1e-5;
        for (axis, tan) in pj.tangents.iter().enumerate() {
            let mut pp = [u, v, theta];
            let mut pm = [u, v, theta];
            pp[axis] += h;
            pm[axis] -= h;
            let fp = patch.point(pp[0], pp[1], pp[2]).unwrap();
            let fm = patch.point(pm[0], pm[1], pm[2]).unwrap();
            for k in 0..4 {
                let fd = (fp.x[k] - fm.x[k]) / (2.0 * h);
                assert_abs_diff_eq!(tan.dx[k], fd, epsilon = 1e-8);
            }
            for c in 0..3 {
                let fd = (fp.j[c] - fm.j[c]) / (2.0 * h);
                assert_abs_diff_eq!(tan.dj[c], fd, epsilon = 1e-8);
            }
        }
    }

    /// The adapted frame may rotate within the circle's own direction as
    /// `(u, v)` move, so the lift tangents need not be horizontal; what
    /// superminimality forbids is any vertical motion toward or away from
    /// the circle, i.e. along the frame pole direction.
    fn pole_component_of_lift_tangents(name: &str, u: f64, v: f64) -> f64 {
        let patch = build(name, [5, 5], 8);
        let model = patch.surface().model;
        let frame = patch.surface().adapted_frame(u, v).unwrap();
        let pj = patch.jet(u, v, patch.theta(5)).unwrap();
        let base = BaseGeometry::at(model, pj.point.x).unwrap();
        let pole_chart = crate::twistor::realize_in_frame(&base.g, &frame, &[1.0, 0.0, 0.0]);
        let pole = fiber_coords_in_frame(&base.g, &base.frame, &pole_chart);
        let mut worst = 0.0_f64;
        for dir in 0..2 {
            let vert = base.vertical_dj(&pj.point.j, &pj.tangents[dir]);
            worst = worst.max(dot3(&vert, &pole).abs());
        }
        worst
    }

    #[test]
    fn superminimal_lift_tangents_never_leave_the_circle() {
        for name in ["graph_z2", "sphere_tg", "veronese"] {
            let worst = pole_component_of_lift_tangents(name, 0.21, 0.13);
            assert!(worst < 1e-6, "{name}: pole component {worst:.2e}");
        }
        let clifford = pole_component_of_lift_tangents("clifford", 0.9, 2.1);
        assert!(clifford > 1e-2, "negative control must move off its circle: {clifford:.2e}");
    }

    #[test]
    fn defect_small_for_superminimal_large_for_clifford() {
        let lambdas = [0.5, 1.0, 2.0];
        let patch = build("graph_z2", [6, 6], 8);
        let report = lagrangian_defect_sweep(&patch, &lambdas).unwrap();
        assert!(report.max_omega_plus < 1e-8, "{}", report.max_omega_plus);
        assert!(report.max_omega_minus < 1e-8, "{}", report.max_omega_minus);
        assert!(report.max_metric_defect < 1e-8, "{}", report.max_metric_defect);

        let patch = build("clifford", [8, 8], 8);
        let report = lagrangian_defect_sweep(&patch, &lambdas).unwrap();
        assert!(report.max_omega_plus > 1e-2, "{}", report.max_omega_plus);
        assert!(report.max_omega_minus > 1e-2, "{}", report.max_omega_minus);
    }

    #[test]
    fn mean_curvature_of_plane_lift_vanishes() {
        let patch = build("plane_r4", [6, 6], 8);
        let pack = HermitianPack::new(1.0, HermitianSign::Plus).unwrap();
        let mc = mean_curvature_l(
            &patch,
            &pack,
            0.1,
            -0.2,
            patch.theta(2),
            &MeanCurvatureOptions::default(),
        )
        .unwrap();
        assert!(mc.norm < 1e-9, "flat product lift must be minimal, got {}", mc.norm);
    }

    #[test]
    fn mean_curvature_decreases_with_stencil_step() {
        let patch = build("sphere_tg", [8, 8], 8);
        let pack = HermitianPack::new(1.0, HermitianSign::Plus).unwrap();
        let mut norms = Vec::new();
        for step in [1.6e-3, 8.0e-4, 4.0e-4] {
            let opts = MeanCurvatureOptions { metric_step: step, jet_step: step };
            let mc = mean_curvature_l(&patch, &pack, 0.25, -0.25, patch.theta(3), &opts).unwrap();
            norms.push(mc.norm);
        }
        assert!(
            norms[2] < 0.6 * norms[0] + 1e-12,
            "residual should shrink with the step: {norms:?}"
        );
    }

    #[test]
    fn ruling_geodesics_stay_on_the_fiber_circle() {
        let patch = build("sphere_tg", [5, 5], 8);
        for lambda in [0.5, 1.0, 2.0] {
            let pack = HermitianPack::new(lambda, HermitianSign::Plus).unwrap();
            let defect = ruling_defect(&patch, &pack, 0.2, 0.1, patch.theta(1), 160).unwrap();
            assert!(defect < 1e-6, "lambda {lambda}: ruling defect {defect}");
        }
    }

    #[test]
    fn constant_curvature_pairing_vanishes_on_equator_components() {
        for name in ["sphere_tg", "clifford"] {
            let s = corpus::entry(name).unwrap().build_with_grid([6, 6]).unwrap();
            for (u, v) in s.grid_samples().into_iter().step_by(5) {
                let c = curvature_fiber_components(&s, u, v).unwrap();
                assert!(c[0].abs() > 0.1, "{name}: pole component should not vanish");
                assert!(c[1].abs() < 1e-10, "{name}: equator component {:.2e}", c[1]);
                assert!(c[2].abs() < 1e-10, "{name}: equator component {:.2e}", c[2]);
            }
        }
    }

    #[test]
    fn converse_round_trip_and_negative_control() {
        let lambdas = [0.5, 1.0, 2.0];
        let tol = ConverseTolerances::exact();

        let good = Candidate::Lift(build("graph_z2", [5, 5], 8));
        let report = converse_check(&good, &lambdas, &tol).unwrap();
        assert!(report.passed, "round trip failed: {:?}", report.stages);

        let bad = Candidate::Lift(build("clifford", [6, 6], 8));
        let report = converse_check(&bad, &lambdas, &tol).unwrap();
        assert!(!report.passed);
        assert_eq!(report.failed_stage, Some(0), "must fail at the Lagrangian stage");
        assert!(report.stages[0].worst > 1e-2);
    }

    #[test]
    fn converse_rejects_fiber_only_candidate() {
        // Degenerate candidate: all three parameters move only the fiber.
        let chart = SampledChart {
            model: ManifoldModel::RoundS4,
            domain: [[0.0, 1.0], [0.0, 1.0], [0.0, std::f64::consts::PI]],
            grid: [4, 4, 4],
            map: Box::new(|a, b, t| {
                let angle = 0.3 * a + 0.2 * b + t;
                Ok(TwistorPoint::new(
                    ManifoldModel::RoundS4,
                    [0.1, 0.2, -0.1, 0.05],
                    [0.0, angle.cos(), angle.sin()],
                )?)
            }),
        };
        let report = converse_check(
            &Candidate::Sampled(chart),
            &[1.0],
            &ConverseTolerances::sampled(),
        )
        .unwrap();
        assert!(!report.passed);
        assert!(!report.stages[1].passed, "rank stage must fail: {:?}", report.stages[1]);
    }
}
