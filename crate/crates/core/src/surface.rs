//! Immersed surfaces in a model 4-manifold.
//!
//! A surface is given by four formulas mapping a parameter rectangle into a
//! model chart. This module builds adapted orthonormal frames (tangent pair
//! first, normal pair completed deterministically), the second fundamental
//! form, and the three superminimality meters:
//!
//! * `vertical_defect` — the operator norm of the covariant derivative of the
//!   frame complex structure `J0` (`J0 e1 = e2`, `J0 e3 = e4`) along the
//!   tangent directions; zero exactly when the canonical twistor lift is
//!   horizontal.
//! * `indicatrix` — the curvature ellipse traced by the second fundamental
//!   form on the unit tangent circle; superminimal points have a circle
//!   centered at zero.
//! * `holonomy_in_u2` — parallel transport along loops expressed in the
//!   adapted frames; the defect is the largest commutator with `J0` seen
//!   anywhere along the loop. Measuring along the whole path (not only at
//!   the closed endpoint) is what detects non-superminimal surfaces in flat
//!   models, where every closed-loop transport is the identity.

use crate::expr::{EvalError, Expr, ParseError};
use crate::geom::{dot_g, ChartPoint, GeomError, ManifoldModel, TransportOptions};
use crate::jet::{Jet2, Smooth};
use crate::twistor::{fiber_coords_in_frame, Frame4, TwistorError, TwistorPoint, TRIPLE};
use nalgebra::{Matrix2, Matrix4};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("component {component} formula: {source}")]
    Formula {
        component: usize,
        #[source]
        source: ParseError,
    },
    #[error("component {component} at (u,v) = ({u}, {v}): {source}")]
    Eval {
        component: usize,
        u: f64,
        v: f64,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Twistor(#[from] TwistorError),
    #[error("tangent vectors at (u,v) = ({u}, {v}) fail the immersion condition (condition number {cond:.3e})")]
    NotImmersed { u: f64, v: f64, cond: f64 },
    #[error("cannot complete the normal frame at (u,v) = ({u}, {v})")]
    FrameCompletion { u: f64, v: f64 },
    #[error("grid must be at least 2x2, got {nu}x{nv}")]
    GridTooSmall { nu: usize, nv: usize },
    #[error("domain rectangle is empty or not finite")]
    BadDomain,
    #[error("holonomy loop must be closed (first and last samples differ)")]
    OpenLoop,
    #[error("holonomy loop needs at least 3 samples")]
    LoopTooShort,
}

/// Largest admissible condition number of the first fundamental form.
pub const IMMERSION_CONDITION_BOUND: f64 = 1e6;

/// A parametrized surface patch inside one model chart.
#[derive(Debug, Clone)]
pub struct ImmersedSurface {
    pub name: String,
    pub model: ManifoldModel,
    components: [Expr; 4],
    pub domain: [[f64; 2]; 2],
    pub grid: [usize; 2],
}

impl ImmersedSurface {
    /// Parse the four component formulas and validate the immersion over the
    /// sample grid.
    pub fn new(
        name: &str,
        model: ManifoldModel,
        formulas: [&str; 4],
        domain: [[f64; 2]; 2],
        grid: [usize; 2],
    ) -> Result<Self, SurfaceError> {
        if grid[0] < 2 || grid[1] < 2 {
            return Err(SurfaceError::GridTooSmall { nu: grid[0], nv: grid[1] });
        }
        for axis in &domain {
            if !(axis[0].is_finite() && axis[1].is_finite() && axis[0] < axis[1]) {
                return Err(SurfaceError::BadDomain);
            }
        }
        let mut components: Vec<Expr> = Vec::with_capacity(4);
        for (idx, src) in formulas.iter().enumerate() {
            components.push(
                crate::expr::parse(src)
                    .map_err(|source| SurfaceError::Formula { component: idx, source })?,
            );
        }
        let components: [Expr; 4] = components.try_into().expect("exactly four components");
        let surface = ImmersedSurface {
            name: name.to_string(),
            model,
            components,
            domain,
            grid,
        };
        surface.validate()?;
        Ok(surface)
    }

    pub fn components(&self) -> &[Expr; 4] {
        &self.components
    }

    /// Chart point of the immersion at `(u, v)` in any scalar arithmetic.
    pub fn chart_point<T: Smooth>(&self, u: T, v: T) -> Result<[T; 4], SurfaceError> {
        let mut out = [T::zero(); 4];
        for (idx, expr) in self.components.iter().enumerate() {
            out[idx] = expr.eval(u, v).map_err(|source| SurfaceError::Eval {
                component: idx,
                u: u.value(),
                v: v.value(),
                source,
            })?;
        }
        Ok(out)
    }

    /// Chart point with exact first and second parameter derivatives.
    pub fn point_jets(&self, u: f64, v: f64) -> Result<[Jet2; 4], SurfaceError> {
        self.chart_point(Jet2::variable(0, u), Jet2::variable(1, v))
    }

    /// Grid sample coordinates in deterministic row-major order (u outer).
    pub fn grid_samples(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.grid[0] * self.grid[1]);
        for iu in 0..self.grid[0] {
            let u = self.grid_u(iu);
            for iv in 0..self.grid[1] {
                out.push((u, self.grid_v(iv)));
            }
        }
        out
    }

    pub fn grid_u(&self, iu: usize) -> f64 {
        let [u0, u1] = self.domain[0];
        u0 + (u1 - u0) * iu as f64 / (self.grid[0] - 1) as f64
    }

    pub fn grid_v(&self, iv: usize) -> f64 {
        let [v0, v1] = self.domain[1];
        v0 + (v1 - v0) * iv as f64 / (self.grid[1] - 1) as f64
    }

    fn validate(&self) -> Result<(), SurfaceError> {
        for (u, v) in self.grid_samples() {
            let jets = self.point_jets(u, v)?;
            let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
            self.model.check_chart(&x)?;
            let (tu, tv) = tangents_from_jets(&jets);
            let g = self.model.metric_components(&x);
            let e = dot_g(&g, &tu, &tu);
            let f = dot_g(&g, &tu, &tv);
            let gg = dot_g(&g, &tv, &tv);
            // Eigenvalues of the first fundamental form.
            let mean = 0.5 * (e + gg);
            let disc = (0.25 * (e - gg) * (e - gg) + f * f).sqrt();
            let lo = mean - disc;
            let hi = mean + disc;
            let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            if !(cond <= IMMERSION_CONDITION_BOUND) {
                return Err(SurfaceError::NotImmersed { u, v, cond });
            }
        }
        Ok(())
    }
}

fn tangents_from_jets(jets: &[Jet2; 4]) -> ([f64; 4], [f64; 4]) {
    let mut tu = [0.0; 4];
    let mut tv = [0.0; 4];
    for k in 0..4 {
        tu[k] = jets[k].d[0];
        tv[k] = jets[k].d[1];
    }
    (tu, tv)
}

// ---------------------------------------------------------------------------
// Adapted frames.
// ---------------------------------------------------------------------------

/// Deterministic recipe for completing the normal frame at one point: which
/// ambient coordinate seeds produce `e3` and `e4`, and whether they must be
/// swapped to make `(e1, e2, e3, e4)` positively oriented. Freezing a plan
/// keeps stencil evaluations around a point on one smooth frame branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramePlan {
    pub seeds: [usize; 2],
    pub swap: bool,
}

/// Relative residual below which a Gram-Schmidt candidate counts as
/// degenerate and the next reference seed is tried.
const SEED_RESIDUAL_REL: f64 = 1e-3;

/// Relative residual below which the two tangent vectors count as dependent.
const TANGENT_RESIDUAL_REL: f64 = 1e-7;

impl ImmersedSurface {
    /// Decide the normal-completion plan at `(u, v)` by value-level
    /// Gram-Schmidt over the ambient coordinate seeds in fixed order
    /// (falling back to reversed order if the fixed order degenerates).
    pub fn frame_plan(&self, u: f64, v: f64) -> Result<FramePlan, SurfaceError> {
        frame_plan_from_jets(self.model, &self.point_jets(u, v)?, u, v)
    }

    /// Adapted orthonormal frame at `(u, v)`: `(e1, e2)` spans the oriented
    /// tangent plane, `(e3, e4)` the normal plane, positively oriented.
    pub fn adapted_frame(&self, u: f64, v: f64) -> Result<Frame4<f64>, SurfaceError> {
        adapted_frame_from_jets(self.model, &self.point_jets(u, v)?, u, v)
    }
}

/// Frame plan from first-order point jets (the surface methods feed exact
/// jets; sampled charts may feed finite-difference jets).
pub fn frame_plan_from_jets(
    model: ManifoldModel,
    jets: &[Jet2; 4],
    u: f64,
    v: f64,
) -> Result<FramePlan, SurfaceError> {
    let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
    let (tu, tv) = tangents_from_jets(jets);
    let g = model.metric_components(&x);
    let (e1, e2) = tangent_pair(&g, &tu, &tv)
        .ok_or(SurfaceError::NotImmersed { u, v, cond: f64::INFINITY })?;

    for order in [[0usize, 1, 2, 3], [3, 2, 1, 0]] {
        if let Some((seeds, e3, e4)) = complete_normals(&g, &e1, &e2, &order) {
            let det = det4_columns(&[e1, e2, e3, e4]);
            return Ok(FramePlan { seeds, swap: det < 0.0 });
        }
    }
    Err(SurfaceError::FrameCompletion { u, v })
}

/// Adapted frame from point jets.
pub fn adapted_frame_from_jets(
    model: ManifoldModel,
    jets: &[Jet2; 4],
    u: f64,
    v: f64,
) -> Result<Frame4<f64>, SurfaceError> {
    let plan = frame_plan_from_jets(model, jets, u, v)?;
    let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
    let (tu, tv) = tangents_from_jets(jets);
    adapted_frame_with_plan(model, &x, &tu, &tv, &plan)
        .ok_or(SurfaceError::FrameCompletion { u, v })
}

/// Apply a frozen [`FramePlan`] in arbitrary scalar arithmetic. Returns
/// `None` when the plan's seeds degenerate at the evaluation point.
pub fn adapted_frame_with_plan<T: Smooth>(
    model: ManifoldModel,
    x: &[T; 4],
    tu: &[T; 4],
    tv: &[T; 4],
    plan: &FramePlan,
) -> Option<Frame4<T>> {
    let g = model.metric_components(x);
    let e1 = normalize(&g, tu)?;
    let e2 = orthonormalize(&g, tv, &[e1], TANGENT_RESIDUAL_REL)?;
    let mut e3 = orthonormalize(&g, &seed(plan.seeds[0]), &[e1, e2], SEED_RESIDUAL_REL)?;
    let mut e4 = orthonormalize(&g, &seed(plan.seeds[1]), &[e1, e2, e3], SEED_RESIDUAL_REL)?;
    if plan.swap {
        core::mem::swap(&mut e3, &mut e4);
    }
    Some([e1, e2, e3, e4])
}

fn seed<T: Smooth>(k: usize) -> [T; 4] {
    let mut s = [T::zero(); 4];
    s[k] = T::one();
    s
}

fn normalize<T: Smooth>(g: &[[T; 4]; 4], v: &[T; 4]) -> Option<[T; 4]> {
    let n2 = dot_g(g, v, v);
    if n2.value() <= 0.0 {
        return None;
    }
    let inv = T::one() / n2.sqrt();
    Some([v[0] * inv, v[1] * inv, v[2] * inv, v[3] * inv])
}

/// Project `v` orthogonal to the unit vectors `against` and normalize;
/// `None` when the relative residual drops below `min_rel`.
fn orthonormalize<T: Smooth, const K: usize>(
    g: &[[T; 4]; 4],
    v: &[T; 4],
    against: &[[T; 4]; K],
    min_rel: f64,
) -> Option<[T; 4]> {
    let mut w = *v;
    for e in against {
        let c = dot_g(g, &w, e);
        for k in 0..4 {
            w[k] = w[k] - c * e[k];
        }
    }
    let n2 = dot_g(g, &w, &w);
    let v2 = dot_g(g, v, v);
    if n2.value() <= min_rel * min_rel * v2.value() {
        return None;
    }
    let inv = T::one() / n2.sqrt();
    Some([w[0] * inv, w[1] * inv, w[2] * inv, w[3] * inv])
}

fn tangent_pair(
    g: &[[f64; 4]; 4],
    tu: &[f64; 4],
    tv: &[f64; 4],
) -> Option<([f64; 4], [f64; 4])> {
    let e1 = normalize(g, tu)?;
    let e2 = orthonormalize(g, tv, &[e1], TANGENT_RESIDUAL_REL)?;
    Some((e1, e2))
}

fn complete_normals(
    g: &[[f64; 4]; 4],
    e1: &[f64; 4],
    e2: &[f64; 4],
    order: &[usize; 4],
) -> Option<([usize; 2], [f64; 4], [f64; 4])> {
    for (i, &s3) in order.iter().enumerate() {
        let Some(e3) = orthonormalize(g, &seed(s3), &[*e1, *e2], SEED_RESIDUAL_REL) else {
            continue;
        };
        for &s4 in &order[i + 1..] {
            if let Some(e4) = orthonormalize(g, &seed(s4), &[*e1, *e2, e3], SEED_RESIDUAL_REL) {
                return Some(([s3, s4], e3, e4));
            }
        }
    }
    None
}

fn det4_columns(cols: &[[f64; 4]; 4]) -> f64 {
    Matrix4::from_fn(|r, c| cols[c][r]).determinant()
}

// ---------------------------------------------------------------------------
// Second fundamental form, indicatrix, superminimality meters.
// ---------------------------------------------------------------------------

/// Components `h[alpha][i][j] = <II(e_i, e_j), e_{alpha+3}>` of the second
/// fundamental form in the adapted frame (`alpha` indexes `e3`, `e4`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondFundamentalForm {
    pub h: [[[f64; 2]; 2]; 2],
}

impl SecondFundamentalForm {
    /// Trace over the tangent indices per normal direction: the mean
    /// curvature vector's components along `(e3, e4)`.
    pub fn trace(&self) -> [f64; 2] {
        [
            self.h[0][0][0] + self.h[0][1][1],
            self.h[1][0][0] + self.h[1][1][1],
        ]
    }
}

/// The curvature ellipse `{ II(X, X) : |X| = 1 }` in the normal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatrixReport {
    pub center: [f64; 2],
    /// Semi-axes `(a, b)` with `a >= b >= 0`.
    pub semi_axes: (f64, f64),
    /// `max(a - b, |center|)`: zero exactly for a circle centered at zero.
    pub circularity_defect: f64,
}

impl ImmersedSurface {
    /// Second fundamental form at `(u, v)` in the adapted frame.
    pub fn second_fundamental_form(
        &self,
        u: f64,
        v: f64,
    ) -> Result<SecondFundamentalForm, SurfaceError> {
        sff_from_jets(self.model, &self.point_jets(u, v)?, u, v)
    }
}

/// Second fundamental form from second-order point jets (exact or assembled
/// by finite differences).
pub fn sff_from_jets(
    model: ManifoldModel,
    jets: &[Jet2; 4],
    u: f64,
    v: f64,
) -> Result<SecondFundamentalForm, SurfaceError> {
    {
        let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
        let (tu, tv) = tangents_from_jets(jets);
        let gamma = model.christoffel_at(&ChartPoint(x))?;
        let g = model.metric_components(&x);
        let frame = adapted_frame_from_jets(model, jets, u, v)?;

        // Ambient covariant second derivatives of the immersion in the
        // coordinate directions: S_ab = x_ab + Gamma(x_a, x_b).
        let mut s = [[[0.0; 4]; 2]; 2];
        let t = [tu, tv];
        for a in 0..2 {
            for b in 0..2 {
                for k in 0..4 {
                    let mut val = jets[k].h[a][b];
                    for i in 0..4 {
                        for j in 0..4 {
                            val += gamma[k][i][j] * t[a][i] * t[b][j];
                        }
                    }
                    s[a][b][k] = val;
                }
            }
        }

        // Express e1, e2 in the (tu, tv) basis; tangent Gram-Schmidt is
        // always taken in fixed order so the coefficients are closed-form.
        let e = dot_g(&g, &tu, &tu);
        let f = dot_g(&g, &tu, &tv);
        let gg = dot_g(&g, &tv, &tv);
        let inv_len1 = 1.0 / e.sqrt();
        let r2 = gg - f * f / e;
        if r2 <= 0.0 {
            return Err(SurfaceError::NotImmersed { u, v, cond: f64::INFINITY });
        }
        let inv_len2 = 1.0 / r2.sqrt();
        // e1 = c[0][0] tu + c[0][1] tv, e2 = c[1][0] tu + c[1][1] tv.
        let c = [
            [inv_len1, 0.0],
            [-f / e * inv_len2, inv_len2],
        ];

        let mut h = [[[0.0; 2]; 2]; 2];
        for alpha in 0..2 {
            let n = frame[2 + alpha];
            for i in 0..2 {
                for j in 0..2 {
                    let mut val = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            val += c[i][a] * c[j][b] * dot_g(&g, &s[a][b], &n);
                        }
                    }
                    h[alpha][i][j] = val;
                }
            }
        }
        Ok(SecondFundamentalForm { h })
    }
}

impl ImmersedSurface {
    /// Mean curvature vector components along `(e3, e4)`.
    pub fn mean_curvature(&self, u: f64, v: f64) -> Result<[f64; 2], SurfaceError> {
        Ok(self.second_fundamental_form(u, v)?.trace())
    }

    /// Operator norm of the covariant derivative of the frame complex
    /// structure `J0` along the unit tangent directions — zero exactly at
    /// superminimal points.
    pub fn vertical_defect(&self, u: f64, v: f64) -> Result<f64, SurfaceError> {
        Ok(vertical_defect_of(&self.second_fundamental_form(u, v)?))
    }

    /// Twistor point of the canonical lift: the fiber coordinates of the
    /// adapted-frame complex structure `J0`.
    pub fn canonical_lift(&self, u: f64, v: f64) -> Result<TwistorPoint, SurfaceError> {
        let jets = self.point_jets(u, v)?;
        let x = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
        let frame = self.adapted_frame(u, v)?;
        let g = self.model.metric_components(&x);
        let j0 = crate::twistor::realize_in_frame(&g, &frame, &[1.0, 0.0, 0.0]);
        let base = crate::twistor::BaseGeometry::at(self.model, x)?;
        let j = fiber_coords_in_frame(&base.g, &base.frame, &j0);
        Ok(TwistorPoint::new(self.model, x, j)?)
    }
}

/// Defect from the second fundamental form: for tangent `X`, the covariant
/// derivative of `J0` has matrix entries `<(D_X J0)e1, e3> = h3(X,e2) +
/// h4(X,e1)` and `<(D_X J0)e1, e4> = h4(X,e2) - h3(X,e1)`, and its operator
/// norm is the root-sum-square; the defect takes the max over `X = e1, e2`.
pub fn vertical_defect_of(sff: &SecondFundamentalForm) -> f64 {
    let h = &sff.h;
    let mut worst: f64 = 0.0;
    for x in 0..2 {
        let p = h[0][x][1] + h[1][x][0];
        let q = h[1][x][1] - h[0][x][0];
        worst = worst.max(p.hypot(q));
    }
    worst
}

/// Describe the curvature ellipse exactly: on the unit circle `X(t) =
/// cos(t) e1 + sin(t) e2`, `II(X,X) = center + C cos(2t) + S sin(2t)` with
/// `center` the half-trace; the semi-axes are the singular values of the
/// 2x2 matrix `[C | S]`.
pub fn indicatrix(sff: &SecondFundamentalForm) -> IndicatrixReport {
    let h = &sff.h;
    let center = [
        0.5 * (h[0][0][0] + h[0][1][1]),
        0.5 * (h[1][0][0] + h[1][1][1]),
    ];
    let m = Matrix2::new(
        0.5 * (h[0][0][0] - h[0][1][1]),
        h[0][0][1],
        0.5 * (h[1][0][0] - h[1][1][1]),
        h[1][0][1],
    );
    let sv = m.singular_values();
    let (a, b) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    IndicatrixReport {
        center,
        semi_axes: (a, b),
        circularity_defect: (a - b).max(center[0].hypot(center[1])),
    }
}

// ---------------------------------------------------------------------------
// Holonomy meter.
// ---------------------------------------------------------------------------

/// Result of transporting the adapted frame along a closed parameter loop.
#[derive(Debug, Clone)]
pub struct HolonomyReport {
    /// Endpoint transport expressed in the start frame (the holonomy
    /// rotation; identity in flat models).
    pub rotation: Matrix4<f64>,
    /// Largest Frobenius norm of the commutator of the frame-expressed
    /// transport with `J0`, over every loop sample. Scanning the whole path
    /// implements the frame-bundle reduction criterion; the endpoint alone
    /// is blind whenever the ambient connection is flat.
    pub commutator_defect: f64,
}

impl ImmersedSurface {
    /// Transport the adapted frame around a closed parameter loop and
    /// measure how far the transport strays from the unitary group of `J0`.
    pub fn holonomy_in_u2(
        &self,
        loop_samples: &[(f64, f64)],
        opts: &TransportOptions,
    ) -> Result<HolonomyReport, SurfaceError> {
        if loop_samples.len() < 3 {
            return Err(SurfaceError::LoopTooShort);
        }
        let first = loop_samples[0];
        let last = *loop_samples.last().expect("nonempty");
        if (first.0 - last.0).abs() > 1e-12 || (first.1 - last.1).abs() > 1e-12 {
            return Err(SurfaceError::OpenLoop);
        }

        let start_frame = self.adapted_frame(first.0, first.1)?;
        // Transported images of the start frame vectors, as matrix columns.
        let mut transported = Matrix4::from_fn(|r, c| start_frame[c][r]);
        let mut worst = 0.0_f64;
        let j0 = Matrix4::from_fn(|r, c| TRIPLE[0][r][c]);

        for pair in loop_samples.windows(2) {
            let (u0, v0) = pair[0];
            let (u1, v1) = pair[1];
            let p0 = self.chart_point(u0, v0)?;
            let p1 = self.chart_point(u1, v1)?;
            let curve = [ChartPoint(p0), ChartPoint(p1)];
            transported =
                crate::geom::parallel_transport(self.model, &curve, &transported, *opts)?;

            // Express the transport in the local adapted frame:
            // g[a][b] = <e_a(here), transported e_b(start)>.
            let frame = self.adapted_frame(u1, v1)?;
            let g = self.model.metric_components(&p1);
            let mut rel = Matrix4::zeros();
            for a in 0..4 {
                for b in 0..4 {
                    let mut val = 0.0;
                    for m in 0..4 {
                        for k in 0..4 {
                            val += frame[a][m] * g[m][k] * transported[(k, b)];
                        }
                    }
                    rel[(a, b)] = val;
                }
            }
            let comm = rel * j0 - j0 * rel;
            worst = worst.max(comm.norm());
            if (u1, v1) == last {
                return Ok(HolonomyReport { rotation: rel, commutator_defect: worst });
            }
        }
        unreachable!("loop ends at its last sample")
    }

    /// Boundary loop of grid cell `(iu, iv)`, subdivided `per_edge` times per
    /// edge, closed, counterclockwise in the parameter rectangle.
    pub fn cell_loop(&self, iu: usize, iv: usize, per_edge: usize) -> Vec<(f64, f64)> {
        let (u0, u1) = (self.grid_u(iu), self.grid_u(iu + 1));
        let (v0, v1) = (self.grid_v(iv), self.grid_v(iv + 1));
        rectangle_loop(u0, u1, v0, v1, per_edge)
    }

    /// Boundary loop of the whole parameter rectangle.
    pub fn boundary_loop(&self, per_edge: usize) -> Vec<(f64, f64)> {
        let [u0, u1] = self.domain[0];
        let [v0, v1] = self.domain[1];
        rectangle_loop(u0, u1, v0, v1, per_edge)
    }
}

fn rectangle_loop(u0: f64, u1: f64, v0: f64, v1: f64, per_edge: usize) -> Vec<(f64, f64)> {
    let n = per_edge.max(1);
    let mut out = Vec::with_capacity(4 * n + 1);
    for k in 0..n {
        let t = k as f64 / n as f64;
        out.push((u0 + t * (u1 - u0), v0));
    }
    for k in 0..n {
        let t = k as f64 / n as f64;
        out.push((u1, v0 + t * (v1 - v0)));
    }
    for k in 0..n {
        let t = k as f64 / n as f64;
        out.push((u1 - t * (u1 - u0), v1));
    }
    for k in 0..n {
        let t = k as f64 / n as f64;
        out.push((u0, v1 - t * (v1 - v0)));
    }
    out.push((u0, v0));
    out
}

// ---------------------------------------------------------------------------
// Grid sweeps of the three meters.
// ---------------------------------------------------------------------------

/// Maxima of the three superminimality meters over the surface grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperminimalitySweep {
    pub max_vertical_defect: f64,
    pub argmax_vertical: (usize, usize),
    pub max_circularity_defect: f64,
    pub argmax_circularity: (usize, usize),
    pub max_mean_curvature: f64,
    pub argmax_mean_curvature: (usize, usize),
}

/// The per-sample meter triple of the sweep.
fn sweep_sample(s: &ImmersedSurface, idx: usize) -> Result<(f64, f64, f64), SurfaceError> {
    let nv = s.grid[1];
    let sff = s.second_fundamental_form(s.grid_u(idx / nv), s.grid_v(idx % nv))?;
    let tr = sff.trace();
    Ok((
        vertical_defect_of(&sff),
        indicatrix(&sff).circularity_defect,
        tr[0].hypot(tr[1]),
    ))
}

/// Sequential twin of [`ImmersedSurface::superminimality_sweep`]: same
/// workload and reduction on the always-sequential engine (for feature
/// parity benchmarks).
pub fn superminimality_sweep_seq(
    s: &ImmersedSurface,
) -> Result<SuperminimalitySweep, SurfaceError> {
    let rows = crate::exec::map_indexed_seq(s.grid[0] * s.grid[1], |idx| sweep_sample(s, idx));
    reduce_sweep(rows, s.grid[1])
}

fn reduce_sweep(
    rows: Vec<Result<(f64, f64, f64), SurfaceError>>,
    nv: usize,
) -> Result<SuperminimalitySweep, SurfaceError> {
    {
        let mut sweep = SuperminimalitySweep {
            max_vertical_defect: f64::NEG_INFINITY,
            argmax_vertical: (0, 0),
            max_circularity_defect: f64::NEG_INFINITY,
            argmax_circularity: (0, 0),
            max_mean_curvature: f64::NEG_INFINITY,
            argmax_mean_curvature: (0, 0),
        };
        for (idx, row) in rows.into_iter().enumerate() {
            let (vd, cd, mc) = row?;
            let at = (idx / nv, idx % nv);
            if vd > sweep.max_vertical_defect {
                sweep.max_vertical_defect = vd;
                sweep.argmax_vertical = at;
            }
            if cd > sweep.max_circularity_defect {
                sweep.max_circularity_defect = cd;
                sweep.argmax_circularity = at;
            }
            if mc > sweep.max_mean_curvature {
                sweep.max_mean_curvature = mc;
                sweep.argmax_mean_curvature = at;
            }
        }
        Ok(sweep)
    }
}

impl ImmersedSurface {
    /// Sweep the pointwise meters over the grid (parallel, deterministic
    /// reduction in row-major order).
    pub fn superminimality_sweep(&self) -> Result<SuperminimalitySweep, SurfaceError> {
        let rows =
            crate::exec::map_indexed(self.grid[0] * self.grid[1], |idx| sweep_sample(self, idx));
        reduce_sweep(rows, self.grid[1])
    }

    /// Largest holonomy commutator defect over every grid-cell boundary loop
    /// plus the whole-rectangle boundary (parallel, deterministic reduction).
    pub fn holonomy_sweep(
        &self,
        per_edge: usize,
        opts: &TransportOptions,
    ) -> Result<(f64, Option<(usize, usize)>), SurfaceError> {
        let nu = self.grid[0] - 1;
        let nv = self.grid[1] - 1;
        let cells: Vec<Result<f64, SurfaceError>> = crate::exec::map_indexed(nu * nv, |idx| {
            let loop_samples = self.cell_loop(idx / nv, idx % nv, per_edge);
            Ok(self.holonomy_in_u2(&loop_samples, opts)?.commutator_defect)
        });
        let mut best = f64::NEG_INFINITY;
        let mut arg = None;
        for (idx, cell) in cells.into_iter().enumerate() {
            let d = cell?;
            if d > best {
                best = d;
                arg = Some((idx / nv, idx % nv));
            }
        }
        let boundary = self
            .holonomy_in_u2(&self.boundary_loop(per_edge * nu.max(nv)), opts)?
            .commutator_defect;
        if boundary > best {
            best = boundary;
            arg = None;
        }
        Ok((best, arg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plane() -> ImmersedSurface {
        ImmersedSurface::new(
            "plane",
            ManifoldModel::FlatR4,
            ["u", "v", "0", "0"],
            [[-1.0, 1.0], [-1.0, 1.0]],
            [8, 8],
        )
        .unwrap()
    }

    fn holomorphic_graph() -> ImmersedSurface {
        ImmersedSurface::new(
            "graph",
            ManifoldModel::FlatR4,
            ["u", "v", "u^2 - v^2", "2*u*v"],
            [[-1.0, 1.0], [-1.0, 1.0]],
            [8, 8],
        )
        .unwrap()
    }

    fn parabolic_graph() -> ImmersedSurface {
        ImmersedSurface::new(
            "parab",
            ManifoldModel::FlatR4,
            ["u", "v", "u^2", "0"],
            [[-1.0, 1.0], [-1.0, 1.0]],
            [8, 8],
        )
        .unwrap()
    }

    fn clifford() -> ImmersedSurface {
        ImmersedSurface::new(
            "clifford",
            ManifoldModel::RoundS4,
            [
                "cos(u) / sqrt(2)",
                "sin(u) / sqrt(2)",
                "cos(v) / sqrt(2)",
                "sin(v) / sqrt(2)",
            ],
            [[0.0, std::f64::consts::TAU], [0.0, std::f64::consts::TAU]],
            [12, 12],
        )
        .unwrap()
    }

    #[test]
    fn plane_frame_is_standard_basis() {
        let s = plane();
        let frame = s.adapted_frame(0.3, -0.4).unwrap();
        for a in 0..4 {
            for k in 0..4 {
                let expect = if a == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(frame[a][k], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn graph_frame_at_origin_is_standard_basis() {
        let s = holomorphic_graph();
        let frame = s.adapted_frame(0.0, 0.0).unwrap();
        for a in 0..4 {
            for k in 0..4 {
                let expect = if a == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(frame[a][k], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn frames_are_orthonormal_and_oriented_everywhere() {
        for s in [plane(), holomorphic_graph(), parabolic_graph(), clifford()] {
            for (u, v) in s.grid_samples() {
                let frame = s.adapted_frame(u, v).unwrap();
                let x = s.chart_point(u, v).unwrap();
                let g = s.model.metric_components(&x);
                for a in 0..4 {
                    for b in 0..4 {
                        let expect = if a == b { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(
                            dot_g(&g, &frame[a], &frame[b]),
                            expect,
                            epsilon = 1e-10
                        );
                    }
                }
                assert!(det4_columns(&frame) > 0.0, "frame not positively oriented");
            }
        }
    }

    #[test]
    fn frames_vary_smoothly_between_neighbors() {
        let s = clifford();
        let h = 1e-3;
        let frame0 = s.adapted_frame(1.0, 2.0).unwrap();
        let frame1 = s.adapted_frame(1.0 + h, 2.0).unwrap();
        let mut diff: f64 = 0.0;
        for a in 0..4 {
            for k in 0..4 {
                diff = diff.max((frame1[a][k] - frame0[a][k]).abs());
            }
        }
        assert!(diff < 10.0 * h, "frame jump {diff} over spacing {h}");
    }

    #[test]
    fn plane_second_fundamental_form_vanishes() {
        let s = plane();
        let sff = s.second_fundamental_form(0.2, 0.7).unwrap();
        for alpha in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(sff.h[alpha][i][j], 0.0, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn parabolic_graph_curvature_at_origin() {
        let s = parabolic_graph();
        let sff = s.second_fundamental_form(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(sff.h[0][0][0], 2.0, epsilon = 1e-12);
        for (alpha, i, j) in [(0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 0, 1), (1, 1, 1)] {
            assert_abs_diff_eq!(sff.h[alpha][i][j], 0.0, epsilon = 1e-12);
        }
        let mc = sff.trace();
        assert_abs_diff_eq!(mc[0].hypot(mc[1]), 2.0, epsilon = 1e-12);
        // Vertical defect 2, indicatrix a segment of half-length 1 centered
        // at distance 1 from the origin.
        assert_abs_diff_eq!(s.vertical_defect(0.0, 0.0).unwrap(), 2.0, epsilon = 1e-12);
        let report = indicatrix(&sff);
        assert_abs_diff_eq!(report.center[0].hypot(report.center[1]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.semi_axes.0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.semi_axes.1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.circularity_defect, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn holomorphic_graph_is_superminimal_but_curved() {
        let s = holomorphic_graph();
        let sff = s.second_fundamental_form(0.0, 0.0).unwrap();
        // At the origin: h3 = diag(2, -2), h4 = offdiag(2, 2).
        assert_abs_diff_eq!(sff.h[0][0][0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sff.h[0][1][1], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sff.h[1][0][1], 2.0, epsilon = 1e-12);
        let report = indicatrix(&sff);
        assert_abs_diff_eq!(report.center[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.center[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.semi_axes.0, report.semi_axes.1, epsilon = 1e-12);
        assert!(report.semi_axes.0 > 1.0, "curvature circle has positive radius");
        // Superminimal across the whole grid.
        let sweep = s.superminimality_sweep().unwrap();
        assert!(sweep.max_vertical_defect < 1e-10, "{}", sweep.max_vertical_defect);
        assert!(sweep.max_circularity_defect < 1e-10, "{}", sweep.max_circularity_defect);
    }

    #[test]
    fn great_sphere_is_totally_geodesic() {
        let s = ImmersedSurface::new(
            "sphere",
            ManifoldModel::RoundS4,
            ["u", "v", "0", "0"],
            [[-1.0, 1.0], [-1.0, 1.0]],
            [8, 8],
        )
        .unwrap();
        for (u, v) in s.grid_samples() {
            let sff = s.second_fundamental_form(u, v).unwrap();
            for alpha in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(sff.h[alpha][i][j].abs() < 1e-7, "II = {:?}", sff.h);
                    }
                }
            }
        }
    }

    #[test]
    fn clifford_torus_is_minimal_but_not_superminimal() {
        let s = clifford();
        let sweep = s.superminimality_sweep().unwrap();
        assert!(sweep.max_mean_curvature < 1e-5, "mean curvature {}", sweep.max_mean_curvature);
        assert!(sweep.max_vertical_defect > 0.1, "defect {}", sweep.max_vertical_defect);
        // Indicatrix degenerates to a segment: a = 1, b = 0 at every sample.
        let sff = s.second_fundamental_form(1.0, 2.0).unwrap();
        let report = indicatrix(&sff);
        assert_abs_diff_eq!(report.semi_axes.0, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(report.semi_axes.1, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(report.center[0].hypot(report.center[1]), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s.vertical_defect(1.0, 2.0).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn holonomy_flat_plane_is_identity_with_zero_defect() {
        let s = plane();
        let loop_samples = s.cell_loop(2, 3, 4);
        let rep = s.holonomy_in_u2(&loop_samples, &TransportOptions::default()).unwrap();
        assert_abs_diff_eq!(rep.rotation, Matrix4::identity(), epsilon = 1e-10);
        assert!(rep.commutator_defect < 1e-10);
    }

    #[test]
    fn holonomy_distinguishes_superminimal_from_controls() {
        let opts = TransportOptions::default();
        // Positive: holomorphic graph stays unitary along every path.
        let s = holomorphic_graph();
        let rep = s.holonomy_in_u2(&s.cell_loop(1, 1, 4), &opts).unwrap();
        assert!(rep.commutator_defect < 1e-6, "defect {}", rep.commutator_defect);
        // Flat-model negative: closed-loop rotation is identity, yet the
        // path-scanned defect sees the rotating normal gauge.
        let p = parabolic_graph();
        let rep = p.holonomy_in_u2(&p.boundary_loop(16), &opts).unwrap();
        assert_abs_diff_eq!(rep.rotation, Matrix4::identity(), epsilon = 1e-8);
        assert!(rep.commutator_defect > 1e-2, "defect {}", rep.commutator_defect);
        // Curved-model negative.
        let c = clifford();
        let rep = c.holonomy_in_u2(&c.cell_loop(3, 5, 4), &opts).unwrap();
        assert!(rep.commutator_defect > 1e-2, "defect {}", rep.commutator_defect);
    }

    #[test]
    fn open_loop_is_rejected() {
        let s = plane();
        let err = s
            .holonomy_in_u2(&[(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)], &TransportOptions::default())
            .unwrap_err();
        assert_eq!(err, SurfaceError::OpenLoop);
    }

    #[test]
    fn canonical_lift_projects_back_and_realizes_j0() {
        let s = clifford();
        let (u, v) = (0.7, 1.9);
        let tp = s.canonical_lift(u, v).unwrap();
        let x = s.chart_point(u, v).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(tp.x[k], x[k], epsilon = 1e-14);
        }
        // The realized structure maps e1 to e2 and e3 to e4.
        let frame = s.adapted_frame(u, v).unwrap();
        let jm = tp.realized().unwrap();
        let e1 = nalgebra::Vector4::from_row_slice(&frame[0]);
        let e2 = nalgebra::Vector4::from_row_slice(&frame[1]);
        let e3 = nalgebra::Vector4::from_row_slice(&frame[2]);
        let e4 = nalgebra::Vector4::from_row_slice(&frame[3]);
        assert_abs_diff_eq!(jm * e1, e2, epsilon = 1e-10);
        assert_abs_diff_eq!(jm * e3, e4, epsilon = 1e-10);
    }

    #[test]
    fn immersion_validation_rejects_degenerate_charts() {
        let err = ImmersedSurface::new(
            "degenerate",
            ManifoldModel::FlatR4,
            ["u", "u", "0", "0"],
            [[-1.0, 1.0], [-1.0, 1.0]],
            [4, 4],
        )
        .unwrap_err();
        assert!(matches!(err, SurfaceError::NotImmersed { .. }), "{err:?}");
    }

    #[test]
    fn formula_errors_carry_component_and_offset() {
        let err = ImmersedSurface::new(
            "broken",
            ManifoldModel::FlatR4,
            ["u", "v", "u +", "0"],
            [[-1.0, 1.0], [-1.0, 1.0]],
            [4, 4],
        )
        .unwrap_err();
        match err {
            SurfaceError::Formula { component, source } => {
                assert_eq!(component, 2);
                assert_eq!(source.offset, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
