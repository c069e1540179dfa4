//! The twistor space of a model 4-manifold.
//!
//! A point of the twistor space is a chart point `x` together with a unit
//! vector `j` in R^3: `j` parametrizes the sphere of metric-compatible,
//! positively oriented complex structures on the tangent space at `x` through
//! a fixed quaternionic triple `(J_1, J_2, J_3)` built from the reference
//! frame at `x` (Gram–Schmidt of the coordinate basis). The triple satisfies
//! `J_1 J_2 = J_3` cyclically in every positively oriented orthonormal frame.
//!
//! The Levi-Civita connection splits tangent vectors `(dx, dj)` into a
//! horizontal part `(dx, H dx)` — transport the complex structure parallelly
//! while moving the base — and a vertical part `(0, dj - H dx)` tangent to
//! the fiber sphere. The metric family is
//!
//! `g_lambda = (base metric on dx) + (1/lambda^2) (round fiber metric on the
//! vertical part)`,
//!
//! and the almost complex structures `J_+` / `J_-` act as the realized `J`
//! horizontally and as `±(j x ·)` on the vertical part: they agree on
//! horizontal vectors and are opposite on vertical ones.
//!
//! For operations that need honest coordinates on the fiber (stencil
//! differentiation of the assembled 6x6 metric, geodesic integration) the
//! sphere carries two stereographic sub-charts with a pole handoff.

use crate::geom::{
    christoffel_from_jets, dot_g, reference_frame, GeomError, ManifoldModel,
};
use crate::jet::{Jet, Jet4, Smooth};
use nalgebra::{Matrix4, SMatrix};

pub type Matrix6 = SMatrix<f64, 6, 6>;

/// An orthonormal frame given by rows: `frame[a]` holds the chart components
/// of the `a`-th frame vector.
pub type Frame4<T> = [[T; 4]; 4];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TwistorError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("fiber point must be a unit vector, got |j| = {0}")]
    FiberPointNotUnit(f64),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("tangent is not attached to the fiber sphere (j . dj = {0})")]
    TangentNotAttached(f64),
}

/// Sign selecting `J_+` or `J_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HermitianSign {
    Plus,
    Minus,
}

impl HermitianSign {
    pub fn factor(self) -> f64 {
        match self {
            HermitianSign::Plus => 1.0,
            HermitianSign::Minus => -1.0,
        }
    }
}

/// A member `(g_lambda, J_sign)` of the almost Hermitian family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianPack {
    pub lambda: f64,
    pub sign: HermitianSign,
}

impl HermitianPack {
    pub fn new(lambda: f64, sign: HermitianSign) -> Result<Self, TwistorError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(TwistorError::NonPositiveLambda(lambda));
        }
        Ok(HermitianPack { lambda, sign })
    }

    /// Weight of the vertical part in `g_lambda`.
    pub fn vertical_weight(&self) -> f64 {
        1.0 / (self.lambda * self.lambda)
    }
}

/// A point of the twistor space: base chart point plus unit fiber vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistorPoint {
    pub model: ManifoldModel,
    pub x: [f64; 4],
    pub j: [f64; 3],
}

impl TwistorPoint {
    pub fn new(model: ManifoldModel, x: [f64; 4], j: [f64; 3]) -> Result<Self, TwistorError> {
        if !model.contains(&x) {
            return Err(GeomError::PointOutsideChart(x, model.chart_radius()).into());
        }
        let n = norm3(&j);
        if (n - 1.0).abs() > 1e-8 {
            return Err(TwistorError::FiberPointNotUnit(n));
        }
        Ok(TwistorPoint { model, x, j: [j[0] / n, j[1] / n, j[2] / n] })
    }

    /// The complex structure this point represents, as a chart-coordinate matrix.
    pub fn realized(&self) -> Result<Matrix4<f64>, TwistorError> {
        let base = BaseGeometry::at(self.model, self.x)?;
        Ok(base.realize(&self.j))
    }
}

/// A tangent vector of the twistor space at some `TwistorPoint`: base
/// velocity `dx` plus fiber velocity `dj` (constrained to `j . dj = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistorTangent {
    pub dx: [f64; 4],
    pub dj: [f64; 3],
}

impl TwistorTangent {
    pub fn zero() -> Self {
        TwistorTangent { dx: [0.0; 4], dj: [0.0; 3] }
    }
}

// ---------------------------------------------------------------------------
// The standard quaternionic triple.
// ---------------------------------------------------------------------------

/// Standard triple in frame coordinates: `J_1: e1->e2, e3->e4`,
/// `J_2: e1->e3, e2->-e4`, `J_3: e1->e4, e2->e3`; `J_1 J_2 = J_3` cyclically.
/// Matrix entry `[r][c]` is the `r`-th component of the image of `e_c`.
pub const TRIPLE: [[[f64; 4]; 4]; 3] = [
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ],
    [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ],
];

/// `j`-coordinates of the equator circle: poles are `±J_1`, the equator point
/// at angle `theta` is `cos(theta) J_2 + sin(theta) J_3`.
pub fn equator_triple(theta: f64) -> [f64; 3] {
    [0.0, theta.cos(), theta.sin()]
}

// ---------------------------------------------------------------------------
// Generic frame algebra (shared with the lift module, which runs it on jets).
// ---------------------------------------------------------------------------

/// `J = sum_c j_c E Jhat_c E^T g` — realize fiber coordinates in a frame.
pub fn realize_in_frame<T: Smooth>(
    g: &[[T; 4]; 4],
    frame: &Frame4<T>,
    j: &[T; 3],
) -> [[T; 4]; 4] {
    // Lowered frame covectors: (E^T g) rows.
    let mut lowered = [[T::zero(); 4]; 4];
    for a in 0..4 {
        for k in 0..4 {
            let mut s = T::zero();
            for m in 0..4 {
                s = s + g[m][k] * frame[a][m];
            }
            lowered[a][k] = s;
        }
    }
    let mut out = [[T::zero(); 4]; 4];
    for c in 0..3 {
        for a in 0..4 {
            for b in 0..4 {
                let coeff = T::c(TRIPLE[c][a][b]) * j[c];
                if TRIPLE[c][a][b] == 0.0 {
                    continue;
                }
                for i in 0..4 {
                    for k in 0..4 {
                        out[i][k] = out[i][k] + coeff * frame[a][i] * lowered[b][k];
                    }
                }
            }
        }
    }
    out
}

/// Inverse of [`realize_in_frame`]: fiber coordinates of a compatible `J`
/// relative to the triple of `frame`, via `j_c = -tr(Jhat_c E^-1 J E) / 4`.
pub fn fiber_coords_in_frame<T: Smooth>(
    g: &[[T; 4]; 4],
    frame: &Frame4<T>,
    j_chart: &[[T; 4]; 4],
) -> [T; 3] {
    // F = E^-1 J E with E^-1 = E^T g.
    let mut je = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for a in 0..4 {
            let mut s = T::zero();
            for k in 0..4 {
                s = s + j_chart[i][k] * frame[a][k];
            }
            je[i][a] = s;
        }
    }
    let mut f = [[T::zero(); 4]; 4];
    for b in 0..4 {
        for a in 0..4 {
            let mut s = T::zero();
            for m in 0..4 {
                for k in 0..4 {
                    s = s + frame[b][m] * g[m][k] * je[k][a];
                }
            }
            f[b][a] = s;
        }
    }
    let mut out = [T::zero(); 3];
    for c in 0..3 {
        let mut tr = T::zero();
        for a in 0..4 {
            for b in 0..4 {
                if TRIPLE[c][a][b] != 0.0 {
                    tr = tr + T::c(TRIPLE[c][a][b]) * f[b][a];
                }
            }
        }
        out[c] = -tr * T::c(0.25);
    }
    out
}

/// The equator complex structure of a frame: maps `e1 -> cos(theta) e3 +
/// sin(theta) e4` and `e2 -> sin(theta) e3 - cos(theta) e4`, exchanging the
/// `(e1, e2)`-plane with the `(e3, e4)`-plane.
pub fn equator_in_frame<T: Smooth>(
    g: &[[T; 4]; 4],
    frame: &Frame4<T>,
    cos_theta: T,
    sin_theta: T,
) -> [[T; 4]; 4] {
    let j = [T::zero(), cos_theta, sin_theta];
    realize_in_frame(g, frame, &j)
}

// ---------------------------------------------------------------------------
// Per-base-point geometry cache.
// ---------------------------------------------------------------------------

/// Everything the fiber bundle needs at one base point: metric, reference
/// frame, and the rotation coefficients `w` of the Levi-Civita connection in
/// that frame (so the horizontal fiber motion along `dx` is `2 j x (w dx)`).
#[derive(Debug, Clone)]
pub struct BaseGeometry {
    pub model: ManifoldModel,
    pub x: [f64; 4],
    pub g: [[f64; 4]; 4],
    pub frame: Frame4<f64>,
    /// `w[i]` = triple coefficients of the connection matrix along `∂_i`.
    pub w: [[f64; 3]; 4],
}

impl BaseGeometry {
    pub fn at(model: ManifoldModel, x: [f64; 4]) -> Result<Self, TwistorError> {
        if !model.contains(&x) {
            return Err(GeomError::PointOutsideChart(x, model.chart_radius()).into());
        }
        let gj = model.metric_jets(&x);
        let gamma = christoffel_from_jets(&gj);
        let frame_jets = reference_frame::<Jet4>(&gj);

        let g = core_values(&gj);
        let frame = frame_values(&frame_jets);

        // Connection matrix in the moving frame: W_i[a][b] = <e_a, ∇_i e_b>
        // = (E^T g (Γ_i E + ∂_i E))[a][b]; its triple part drives the fiber.
        let mut w = [[0.0; 3]; 4];
        for i in 0..4 {
            // (Γ_i E + ∂_i E) with columns indexed by the frame label b.
            let mut de = [[0.0; 4]; 4]; // de[k][b]
            for b in 0..4 {
                for k in 0..4 {
                    let mut val = frame_jets[b][k].d[i];
                    for jdx in 0..4 {
                        val += gamma[k][i][jdx] * frame_jets[b][jdx].v;
                    }
                    de[k][b] = val;
                }
            }
            let mut wmat = [[0.0; 4]; 4]; // W_i[a][b]
            for a in 0..4 {
                for b in 0..4 {
                    let mut val = 0.0;
                    for m in 0..4 {
                        for k in 0..4 {
                            val += frame[a][m] * g[m][k] * de[k][b];
                        }
                    }
                    wmat[a][b] = val;
                }
            }
            for c in 0..3 {
                let mut tr = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        if TRIPLE[c][a][b] != 0.0 {
                            tr += TRIPLE[c][a][b] * wmat[b][a];
                        }
                    }
                }
                w[i][c] = -0.25 * tr;
            }
        }
        Ok(BaseGeometry { model, x, g, frame, w })
    }

    /// Chart matrix of the complex structure with fiber coordinates `j`.
    pub fn realize(&self, j: &[f64; 3]) -> Matrix4<f64> {
        let m = realize_in_frame(&self.g, &self.frame, j);
        Matrix4::from_fn(|r, c| m[r][c])
    }

    /// Fiber velocity of the horizontal lift of `dx` at fiber point `j`.
    pub fn horizontal_dj(&self, j: &[f64; 3], dx: &[f64; 4]) -> [f64; 3] {
        let mut wx = [0.0; 3];
        for i in 0..4 {
            for c in 0..3 {
                wx[c] += self.w[i][c] * dx[i];
            }
        }
        let c = cross3(j, &wx);
        [2.0 * c[0], 2.0 * c[1], 2.0 * c[2]]
    }

    /// Vertical component of a tangent: `dj - (horizontal fiber motion)`.
    pub fn vertical_dj(&self, j: &[f64; 3], t: &TwistorTangent) -> [f64; 3] {
        let h = self.horizontal_dj(j, &t.dx);
        [t.dj[0] - h[0], t.dj[1] - h[1], t.dj[2] - h[2]]
    }

    pub fn g_base(&self, a: &[f64; 4], b: &[f64; 4]) -> f64 {
        dot_g(&self.g, a, b)
    }
}

fn core_values(gj: &[[Jet4; 4]; 4]) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            g[i][j] = gj[i][j].v;
        }
    }
    g
}

fn frame_values(frame_jets: &Frame4<Jet4>) -> Frame4<f64> {
    let mut f = [[0.0; 4]; 4];
    for a in 0..4 {
        for i in 0..4 {
            f[a][i] = frame_jets[a][i].v;
        }
    }
    f
}

// ---------------------------------------------------------------------------
// Spec-level operations.
// ---------------------------------------------------------------------------

/// Realize fiber coordinates `j` in an explicit orthonormal frame at `x`.
pub fn realize_j(
    model: ManifoldModel,
    x: [f64; 4],
    frame: &Frame4<f64>,
    j: &[f64; 3],
) -> Result<Matrix4<f64>, TwistorError> {
    let n = norm3(j);
    if (n - 1.0).abs() > 1e-8 {
        return Err(TwistorError::FiberPointNotUnit(n));
    }
    let gm = model.metric_at(&crate::geom::ChartPoint(x))?;
    let mut g = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            g[r][c] = gm[(r, c)];
        }
    }
    let m = realize_in_frame(&g, frame, j);
    Ok(Matrix4::from_fn(|r, c| m[r][c]))
}

/// Chart matrix of the equator complex structure of a frame at angle `theta`.
pub fn equator_j(
    model: ManifoldModel,
    x: [f64; 4],
    frame: &Frame4<f64>,
    theta: f64,
) -> Result<Matrix4<f64>, TwistorError> {
    let gm = model.metric_at(&crate::geom::ChartPoint(x))?;
    let mut g = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            g[r][c] = gm[(r, c)];
        }
    }
    let e = equator_in_frame(&g, frame, theta.cos(), theta.sin());
    Ok(Matrix4::from_fn(|r, c| e[r][c]))
}

/// Horizontal lift of a base tangent vector: the fiber coordinates follow
/// parallel transport of the complex structure.
pub fn horizontal_lift(
    model: ManifoldModel,
    tp: &TwistorPoint,
    dx: [f64; 4],
) -> Result<TwistorTangent, TwistorError> {
    let base = BaseGeometry::at(model, tp.x)?;
    Ok(TwistorTangent { dx, dj: base.horizontal_dj(&tp.j, &dx) })
}

/// `g_lambda` as a bilinear form on `(dx, dj)` tangents.
pub fn g_lambda(
    pack: &HermitianPack,
    base: &BaseGeometry,
    j: &[f64; 3],
    a: &TwistorTangent,
    b: &TwistorTangent,
) -> f64 {
    let va = base.vertical_dj(j, a);
    let vb = base.vertical_dj(j, b);
    base.g_base(&a.dx, &b.dx) + pack.vertical_weight() * dot3(&va, &vb)
}

/// Apply `J_+` or `J_-` to a tangent: realized `J` on the horizontal part,
/// `±(j x ·)` on the vertical part.
pub fn acs_apply(
    pack: &HermitianPack,
    base: &BaseGeometry,
    j: &[f64; 3],
    t: &TwistorTangent,
) -> TwistorTangent {
    let jm = base.realize(j);
    let mut jdx = [0.0; 4];
    for r in 0..4 {
        for c in 0..4 {
            jdx[r] += jm[(r, c)] * t.dx[c];
        }
    }
    let vert = base.vertical_dj(j, t);
    let rotated = cross3(j, &vert);
    let s = pack.sign.factor();
    let hor_dj = base.horizontal_dj(j, &jdx);
    TwistorTangent {
        dx: jdx,
        dj: [
            hor_dj[0] + s * rotated[0],
            hor_dj[1] + s * rotated[1],
            hor_dj[2] + s * rotated[2],
        ],
    }
}

/// The fundamental 2-form `omega_sign(V, W) = g_lambda(J_sign V, W)`,
/// evaluated through its vertical/horizontal decomposition. Returns
/// `(vertical part, horizontal part)`; the form is their sum.
pub fn kahler_form_split(
    pack: &HermitianPack,
    base: &BaseGeometry,
    j: &[f64; 3],
    a: &TwistorTangent,
    b: &TwistorTangent,
) -> (f64, f64) {
    let jm = base.realize(j);
    let mut jdx = [0.0; 4];
    for r in 0..4 {
        for c in 0..4 {
            jdx[r] += jm[(r, c)] * a.dx[c];
        }
    }
    let horizontal = base.g_base(&jdx, &b.dx);
    let va = base.vertical_dj(j, a);
    let vb = base.vertical_dj(j, b);
    let vertical = pack.sign.factor() * pack.vertical_weight() * dot3(&cross3(j, &va), &vb);
    (vertical, horizontal)
}

/// `omega_sign(V, W)`.
pub fn kahler_form(
    pack: &HermitianPack,
    base: &BaseGeometry,
    j: &[f64; 3],
    a: &TwistorTangent,
    b: &TwistorTangent,
) -> f64 {
    let (v, h) = kahler_form_split(pack, base, j, a, b);
    v + h
}

// ---------------------------------------------------------------------------
// Fiber charts and the assembled 6x6 chart objects.
// ---------------------------------------------------------------------------

/// Stereographic sub-charts of the fiber sphere. `North` sends `s = 0` to
/// `j = (0,0,1)` and is singular only at the south pole; `South` is the
/// mirror image. Point evaluation uses `North` unless `j_3 < -0.9`
/// (pole handoff), so the equator `j_3 = 0` always sits at `|s| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberChart {
    North,
    South,
}

impl FiberChart {
    pub fn for_j(j: &[f64; 3]) -> Self {
        if j[2] < -0.9 {
            FiberChart::South
        } else {
            FiberChart::North
        }
    }

    /// Inverse stereographic projection `s -> j`.
    pub fn to_sphere<T: Smooth>(self, s: &[T; 2]) -> [T; 3] {
        let r2 = s[0] * s[0] + s[1] * s[1];
        let den = T::one() / (T::one() + r2);
        let third = (T::one() - r2) * den;
        let third = match self {
            FiberChart::North => third,
            FiberChart::South => -third,
        };
        [T::c(2.0) * s[0] * den, T::c(2.0) * s[1] * den, third]
    }

    /// Stereographic projection `j -> s` (valid away from this chart's pole).
    pub fn from_sphere<T: Smooth>(self, j: &[T; 3]) -> [T; 2] {
        let den = match self {
            FiberChart::North => T::one() + j[2],
            FiberChart::South => T::one() - j[2],
        };
        [j[0] / den, j[1] / den]
    }

    /// Jacobian `∂j/∂s` as a 3x2 matrix.
    pub fn jacobian(self, s: &[f64; 2]) -> [[f64; 2]; 3] {
        let vars = [Jet::<2>::variable(0, s[0]), Jet::<2>::variable(1, s[1])];
        let j = self.to_sphere(&vars);
        let mut out = [[0.0; 2]; 3];
        for r in 0..3 {
            out[r] = j[r].d;
        }
        out
    }
}

/// Coordinates of a twistor point in a `(x, s)` chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistorChartPoint {
    pub x: [f64; 4],
    pub s: [f64; 2],
    pub chart: FiberChart,
}

impl TwistorChartPoint {
    pub fn from_point(tp: &TwistorPoint) -> Self {
        let chart = FiberChart::for_j(&tp.j);
        TwistorChartPoint { x: tp.x, s: chart.from_sphere(&tp.j), chart }
    }

    pub fn to_point(&self, model: ManifoldModel) -> Result<TwistorPoint, TwistorError> {
        TwistorPoint::new(model, self.x, self.chart.to_sphere(&self.s))
    }
}

/// The 6x6 matrix of `g_lambda` in chart coordinates `(dx, ds)`.
pub fn twistor_metric_matrix(
    pack: &HermitianPack,
    model: ManifoldModel,
    q: &TwistorChartPoint,
) -> Result<Matrix6, TwistorError> {
    let base = BaseGeometry::at(model, q.x)?;
    let j = q.chart.to_sphere(&q.s);
    let d = q.chart.jacobian(&q.s);
    // H: 3x4, columns are horizontal fiber velocities of coordinate directions.
    let mut hmat = [[0.0; 4]; 3];
    for i in 0..4 {
        let mut dx = [0.0; 4];
        dx[i] = 1.0;
        let h = base.horizontal_dj(&j, &dx);
        for r in 0..3 {
            hmat[r][i] = h[r];
        }
    }
    let c = pack.vertical_weight();
    let mut m = Matrix6::zeros();
    // Base block + c H^T H.
    for a in 0..4 {
        for b in 0..4 {
            let mut val = base.g[a][b];
            for r in 0..3 {
                val += c * hmat[r][a] * hmat[r][b];
            }
            m[(a, b)] = val;
        }
    }
    // Cross blocks -c H^T D and fiber block c D^T D.
    for a in 0..4 {
        for t in 0..2 {
            let mut val = 0.0;
            for r in 0..3 {
                val -= c * hmat[r][a] * d[r][t];
            }
            m[(a, 4 + t)] = val;
            m[(4 + t, a)] = val;
        }
    }
    for s1 in 0..2 {
        for s2 in 0..2 {
            let mut val = 0.0;
            for r in 0..3 {
                val += c * d[r][s1] * d[r][s2];
            }
            m[(4 + s1, 4 + s2)] = val;
        }
    }
    Ok(m)
}

/// The 6x6 SPD matrix of `g_lambda` at a twistor point, in the sub-chart
/// selected by the pole-handoff rule.
pub fn twistor_metric(
    pack: &HermitianPack,
    model: ManifoldModel,
    tp: &TwistorPoint,
) -> Result<Matrix6, TwistorError> {
    twistor_metric_matrix(pack, model, &TwistorChartPoint::from_point(tp))
}

/// The 6x6 chart matrix of `J_+` or `J_-` acting on `(dx, ds)`.
pub fn twistor_acs_matrix(
    pack: &HermitianPack,
    model: ManifoldModel,
    q: &TwistorChartPoint,
) -> Result<Matrix6, TwistorError> {
    let base = BaseGeometry::at(model, q.x)?;
    let j = q.chart.to_sphere(&q.s);
    let d = q.chart.jacobian(&q.s);

    // Pseudo-inverse D^+ = (D^T D)^-1 D^T maps fiber 3-velocities tangent to
    // the sphere back to chart velocities.
    let dtd = [
        [
            d[0][0] * d[0][0] + d[1][0] * d[1][0] + d[2][0] * d[2][0],
            d[0][0] * d[0][1] + d[1][0] * d[1][1] + d[2][0] * d[2][1],
        ],
        [
            d[0][1] * d[0][0] + d[1][1] * d[1][0] + d[2][1] * d[2][0],
            d[0][1] * d[0][1] + d[1][1] * d[1][1] + d[2][1] * d[2][1],
        ],
    ];
    let det = dtd[0][0] * dtd[1][1] - dtd[0][1] * dtd[1][0];
    let inv = [
        [dtd[1][1] / det, -dtd[0][1] / det],
        [-dtd[1][0] / det, dtd[0][0] / det],
    ];
    let dplus = {
        let mut p = [[0.0; 3]; 2];
        for t in 0..2 {
            for r in 0..3 {
                p[t][r] = inv[t][0] * d[r][0] + inv[t][1] * d[r][1];
            }
        }
        p
    };

    let mut m = Matrix6::zeros();
    // Column-by-column: apply J_sign to each chart basis tangent.
    for col in 0..6 {
        let mut dx = [0.0; 4];
        let mut ds = [0.0; 2];
        if col < 4 {
            dx[col] = 1.0;
        } else {
            ds[col - 4] = 1.0;
        }
        // dj of this chart tangent.
        let dj = [
            d[0][0] * ds[0] + d[0][1] * ds[1],
            d[1][0] * ds[0] + d[1][1] * ds[1],
            d[2][0] * ds[0] + d[2][1] * ds[1],
        ];
        let out = acs_apply(pack, &base, &j, &TwistorTangent { dx, dj });
        for r in 0..4 {
            m[(r, col)] = out.dx[r];
        }
        for t in 0..2 {
            m[(4 + t, col)] =
                dplus[t][0] * out.dj[0] + dplus[t][1] * out.dj[1] + dplus[t][2] * out.dj[2];
        }
    }
    Ok(m)
}

/// The 6x6 endomorphism matrix of `J_sign` at a twistor point.
pub fn twistor_acs(
    pack: &HermitianPack,
    model: ManifoldModel,
    tp: &TwistorPoint,
) -> Result<Matrix6, TwistorError> {
    twistor_acs_matrix(pack, model, &TwistorChartPoint::from_point(tp))
}

// ---------------------------------------------------------------------------
// Stencil Christoffels of the assembled metric, and geodesics.
// ---------------------------------------------------------------------------

/// Default stencil step for differentiating the assembled 6x6 metric.
pub const METRIC_STENCIL_STEP: f64 = 1e-4;

/// Christoffel symbols `gamma[c][a][b]` of `g_lambda` in a `(x, s)` chart,
/// from central differences of the assembled metric.
pub fn twistor_christoffel_fd(
    pack: &HermitianPack,
    model: ManifoldModel,
    q: &TwistorChartPoint,
    step: f64,
) -> Result<[[[f64; 6]; 6]; 6], TwistorError> {
    let m0 = twistor_metric_matrix(pack, model, q)?;
    let mut dm = [[[0.0; 6]; 6]; 6]; // dm[c][a][b] = ∂_c M_ab
    for cdir in 0..6 {
        let mut qp = *q;
        let mut qm = *q;
        if cdir < 4 {
            qp.x[cdir] += step;
            qm.x[cdir] -= step;
        } else {
            qp.s[cdir - 4] += step;
            qm.s[cdir - 4] -= step;
        }
        let mp = twistor_metric_matrix(pack, model, &qp)?;
        let mm = twistor_metric_matrix(pack, model, &qm)?;
        for a in 0..6 {
            for b in 0..6 {
                dm[cdir][a][b] = (mp[(a, b)] - mm[(a, b)]) / (2.0 * step);
            }
        }
    }
    let minv = m0.try_inverse().expect("g_lambda chart matrix must be invertible");
    let mut gamma = [[[0.0; 6]; 6]; 6];
    for c in 0..6 {
        for a in 0..6 {
            for b in 0..6 {
                let mut val = 0.0;
                for dd in 0..6 {
                    val += minv[(c, dd)] * (dm[a][dd][b] + dm[b][dd][a] - dm[dd][a][b]);
                }
                gamma[c][a][b] = 0.5 * val;
            }
        }
    }
    Ok(gamma)
}

/// Integrate the `g_lambda` geodesic with initial data `(tp, v)` for
/// `time` with `n_steps` RK4 steps, switching fiber sub-charts at the poles.
pub fn integrate_geodesic(
    pack: &HermitianPack,
    model: ManifoldModel,
    tp: &TwistorPoint,
    v: &TwistorTangent,
    time: f64,
    n_steps: usize,
    fd_step: f64,
) -> Result<(TwistorPoint, TwistorTangent), TwistorError> {
    let mut chart = FiberChart::for_j(&tp.j);
    let mut q = [0.0; 6];
    q[..4].copy_from_slice(&tp.x);
    let s = chart.from_sphere(&tp.j);
    q[4] = s[0];
    q[5] = s[1];
    // ds from dj through the chart jacobian pseudo-inverse.
    let mut qdot = [0.0; 6];
    qdot[..4].copy_from_slice(&v.dx);
    let ds = ds_from_dj(chart, &[q[4], q[5]], &v.dj);
    qdot[4] = ds[0];
    qdot[5] = ds[1];

    let h = time / n_steps as f64;
    for _ in 0..n_steps {
        // Pole handoff: switch sub-chart when the fiber point climbs past 0.9
        // toward this chart's singular pole.
        let j = chart.to_sphere(&[q[4], q[5]]);
        let near_singular = match chart {
            FiberChart::North => j[2] < -0.9,
            FiberChart::South => j[2] > 0.9,
        };
        if near_singular {
            let other = match chart {
                FiberChart::North => FiberChart::South,
                FiberChart::South => FiberChart::North,
            };
            let dj = dj_from_ds(chart, &[q[4], q[5]], &[qdot[4], qdot[5]]);
            let s_new = other.from_sphere(&j);
            let ds_new = ds_from_dj(other, &s_new, &dj);
            q[4] = s_new[0];
            q[5] = s_new[1];
            qdot[4] = ds_new[0];
            qdot[5] = ds_new[1];
            chart = other;
        }

        let accel = |qq: &[f64; 6], vv: &[f64; 6]| -> Result<[f64; 6], TwistorError> {
            let point = TwistorChartPoint {
                x: [qq[0], qq[1], qq[2], qq[3]],
                s: [qq[4], qq[5]],
                chart,
            };
            let gamma = twistor_christoffel_fd(pack, model, &point, fd_step)?;
            let mut a = [0.0; 6];
            for c in 0..6 {
                let mut val = 0.0;
                for i in 0..6 {
                    for jdx in 0..6 {
                        val -= gamma[c][i][jdx] * vv[i] * vv[jdx];
                    }
                }
                a[c] = val;
            }
            Ok(a)
        };

        let (k1q, k1v) = (qdot, accel(&q, &qdot)?);
        let q2 = add6(&q, &k1q, 0.5 * h);
        let v2 = add6(&qdot, &k1v, 0.5 * h);
        let (k2q, k2v) = (v2, accel(&q2, &v2)?);
        let q3 = add6(&q, &k2q, 0.5 * h);
        let v3 = add6(&qdot, &k2v, 0.5 * h);
        let (k3q, k3v) = (v3, accel(&q3, &v3)?);
        let q4 = add6(&q, &k3q, h);
        let v4 = add6(&qdot, &k3v, h);
        let (k4q, k4v) = (v4, accel(&q4, &v4)?);
        for i in 0..6 {
            q[i] += h / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
            qdot[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }

    let j = chart.to_sphere(&[q[4], q[5]]);
    let dj = dj_from_ds(chart, &[q[4], q[5]], &[qdot[4], qdot[5]]);
    let end = TwistorPoint::new(model, [q[0], q[1], q[2], q[3]], j)?;
    Ok((end, TwistorTangent { dx: [qdot[0], qdot[1], qdot[2], qdot[3]], dj }))
}

fn add6(a: &[f64; 6], b: &[f64; 6], s: f64) -> [f64; 6] {
    let mut out = [0.0; 6];
    for i in 0..6 {
        out[i] = a[i] + s * b[i];
    }
    out
}

fn ds_from_dj(chart: FiberChart, s: &[f64; 2], dj: &[f64; 3]) -> [f64; 2] {
    let j = chart.to_sphere(&[
        crate::jet::Jet::<2>::variable(0, s[0]),
        crate::jet::Jet::<2>::variable(1, s[1]),
    ]);
    // Solve least squares D ds = dj via normal equations (D has full rank 2).
    let d = [[j[0].d[0], j[0].d[1]], [j[1].d[0], j[1].d[1]], [j[2].d[0], j[2].d[1]]];
    let mut dtd = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for t in 0..2 {
        for u in 0..2 {
            for r in 0..3 {
                dtd[t][u] += d[r][t] * d[r][u];
            }
        }
        for r in 0..3 {
            rhs[t] += d[r][t] * dj[r];
        }
    }
    let det = dtd[0][0] * dtd[1][1] - dtd[0][1] * dtd[1][0];
    [
        (dtd[1][1] * rhs[0] - dtd[0][1] * rhs[1]) / det,
        (-dtd[1][0] * rhs[0] + dtd[0][0] * rhs[1]) / det,
    ]
}

fn dj_from_ds(chart: FiberChart, s: &[f64; 2], ds: &[f64; 2]) -> [f64; 3] {
    let d = chart.jacobian(s);
    [
        d[0][0] * ds[0] + d[0][1] * ds[1],
        d[1][0] * ds[0] + d[1][1] * ds[1],
        d[2][0] * ds[0] + d[2][1] * ds[1],
    ]
}

// ---------------------------------------------------------------------------
// Small 3-vector helpers.
// ---------------------------------------------------------------------------

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
