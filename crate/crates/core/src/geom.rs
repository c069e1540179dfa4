//! Riemannian kernel for the three chart models.
//!
//! Each model is a single coordinate chart on R^4 with an analytic metric:
//!
//! * `FlatR4` — the identity metric;
//! * `RoundS4` — the unit round 4-sphere in a stereographic chart, with
//!   conformal factor `4 / (1 + |x|^2)^2` (so the metric at the origin is
//!   `4·I` and all sectional curvatures are `1`);
//! * `FubiniStudyCP2` — the Fubini–Study metric in an affine chart of the
//!   complex projective plane, normalized so the metric at the chart origin
//!   is the identity. Coordinates are ordered `(Re z1, Im z1, Re z2, Im z2)`,
//!   so multiplication by `i` is the constant matrix `e1 -> e2, e3 -> e4`.
//!
//! Metric components are written once, generically over a [`Smooth`] scalar;
//! evaluating them on second-order jets yields exact first and second metric
//! derivatives, hence exact Christoffel symbols and curvature. Finite
//! differences appear in this crate only where a design explicitly calls for
//! them (stencil differentiation of the assembled twistor metric) and as
//! independent oracles inside tests.
//!
//! Index conventions: `christoffel_at` returns `gamma[k][i][j]` =
//! Γ^k_{ij}; `riemann_at` returns the fully lowered tensor with
//! `R[i][j][k][l] = g(R(∂_i, ∂_j) ∂_l, ∂_k)`, for which the round-sphere
//! identity reads `R_{ijkl} = g_{ik} g_{jl} - g_{il} g_{jk}` and coordinate
//! sectional curvatures are positive on `RoundS4`.

use crate::jet::{Jet4, Smooth};
use nalgebra::Matrix4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldModel {
    FlatR4,
    RoundS4,
    FubiniStudyCP2,
}

/// A point in a model's coordinate chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint(pub [f64; 4]);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("point {0:?} lies outside the chart (radius {1})")]
    PointOutsideChart([f64; 4], f64),
    #[error("curve sample {index} exits the chart")]
    CurveExitsChart { index: usize },
    #[error("parallel transport step size underflows at {0} steps")]
    StepSizeUnderflow(usize),
    #[error("curve must contain at least two samples")]
    CurveTooShort,
    #[error("frame seeds are linearly dependent")]
    DegenerateFrame,
}

impl ManifoldModel {
    /// Radius of the coordinate ball on which the chart is used.
    pub fn chart_radius(self) -> f64 {
        match self {
            ManifoldModel::FlatR4 => 1e6,
            ManifoldModel::RoundS4 | ManifoldModel::FubiniStudyCP2 => 10.0,
        }
    }

    pub fn contains(self, x: &[f64; 4]) -> bool {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        r2.is_finite() && r2 < self.chart_radius() * self.chart_radius()
    }

    /// Error if `x` lies outside the chart ball.
    pub fn check_chart(self, x: &[f64; 4]) -> Result<(), GeomError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GeomError::PointOutsideChart(*x, self.chart_radius()))
        }
    }

    /// Metric components over any scalar type; the single source of truth
    /// for all three models.
    pub fn metric_components<T: Smooth>(self, x: &[T; 4]) -> [[T; 4]; 4] {
        match self {
            ManifoldModel::FlatR4 => {
                let mut g = [[T::zero(); 4]; 4];
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = T::one();
                }
                g
            }
            ManifoldModel::RoundS4 => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
                let den = T::one() + r2;
                let f = T::c(4.0) / (den * den);
                let mut g = [[T::zero(); 4]; 4];
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = f;
                }
                g
            }
            ManifoldModel::FubiniStudyCP2 => {
                // Hermitian components h_{α β̄} = ((1+|z|^2) δ_{αβ} - z̄_α z_β) / (1+|z|^2)^2
                // realized as a real symmetric matrix.
                let z1_sq = x[0] * x[0] + x[1] * x[1];
                let z2_sq = x[2] * x[2] + x[3] * x[3];
                let d = T::one() + z1_sq + z2_sq;
                let d2 = d * d;
                let h11 = (T::one() + z2_sq) / d2;
                let h22 = (T::one() + z1_sq) / d2;
                // conj(z1) * z2 = (x0 x2 + x1 x3) + i (x0 x3 - x1 x2)
                let re12 = -(x[0] * x[2] + x[1] * x[3]) / d2;
                let im12 = -(x[0] * x[3] - x[1] * x[2]) / d2;
                [
                    [h11, T::zero(), re12, im12],
                    [T::zero(), h11, -im12, re12],
                    [re12, -im12, h22, T::zero()],
                    [im12, re12, T::zero(), h22],
                ]
            }
        }
    }

    /// Metric and its exact first and second derivatives at a point.
    pub fn metric_jets(self, x: &[f64; 4]) -> [[Jet4; 4]; 4] {
        let vars = [
            Jet4::variable(0, x[0]),
            Jet4::variable(1, x[1]),
            Jet4::variable(2, x[2]),
            Jet4::variable(3, x[3]),
        ];
        self.metric_components(&vars)
    }

    pub fn metric_at(self, p: &ChartPoint) -> Result<Matrix4<f64>, GeomError> {
        self.check_chart(&p.0)?;
        let g = self.metric_components(&p.0);
        Ok(Matrix4::from_fn(|i, j| g[i][j]))
    }

    /// Christoffel symbols `gamma[k][i][j]` = Γ^k_{ij}, exact.
    pub fn christoffel_at(self, p: &ChartPoint) -> Result<[[[f64; 4]; 4]; 4], GeomError> {
        self.check_chart(&p.0)?;
        let gj = self.metric_jets(&p.0);
        Ok(christoffel_from_jets(&gj))
    }

    /// Fully lowered curvature tensor `R[i][j][k][l] = g(R(∂_i,∂_j)∂_l, ∂_k)`, exact.
    pub fn riemann_at(self, p: &ChartPoint) -> Result<[[[[f64; 4]; 4]; 4]; 4], GeomError> {
        self.check_chart(&p.0)?;
        let gj = self.metric_jets(&p.0);
        let gamma = christoffel_from_jets(&gj);
        let dgamma = christoffel_derivatives_from_jets(&gj);

        // Mixed tensor (R(∂_i,∂_j)∂_l)^m.
        let mut rm = [[[[0.0; 4]; 4]; 4]; 4]; // rm[i][j][l][m]
        for i in 0..4 {
            for j in 0..4 {
                for l in 0..4 {
                    for m in 0..4 {
                        let mut val = dgamma[i][m][j][l] - dgamma[j][m][i][l];
                        for a in 0..4 {
                            val += gamma[m][i][a] * gamma[a][j][l]
                                - gamma[m][j][a] * gamma[a][i][l];
                        }
                        rm[i][j][l][m] = val;
                    }
                }
            }
        }
        let mut low = [[[[0.0; 4]; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let mut val = 0.0;
                        for m in 0..4 {
                            val += gj[k][m].v * rm[i][j][l][m];
                        }
                        low[i][j][k][l] = val;
                    }
                }
            }
        }
        Ok(low)
    }
}

/// Γ^k_{ij} from metric jets (uses only first derivatives).
pub(crate) fn christoffel_from_jets(gj: &[[Jet4; 4]; 4]) -> [[[f64; 4]; 4]; 4] {
    let g = Matrix4::from_fn(|i, j| gj[i][j].v);
    let g_inv = g.try_inverse().expect("metric must be invertible");
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let mut val = 0.0;
                for l in 0..4 {
                    // ∂_i g_{lj} + ∂_j g_{li} - ∂_l g_{ij}
                    val += g_inv[(k, l)]
                        * (gj[l][j].d[i] + gj[l][i].d[j] - gj[i][j].d[l]);
                }
                gamma[k][i][j] = 0.5 * val;
            }
        }
    }
    gamma
}

/// ∂_m Γ^k_{ij} from metric jets, indexed `[m][k][i][j]`.
fn christoffel_derivatives_from_jets(gj: &[[Jet4; 4]; 4]) -> [[[[f64; 4]; 4]; 4]; 4] {
    let g = Matrix4::from_fn(|i, j| gj[i][j].v);
    let g_inv = g.try_inverse().expect("metric must be invertible");
    // ∂_m g^{kl} = -g^{ka} (∂_m g_{ab}) g^{bl}
    let mut dginv = [[[0.0; 4]; 4]; 4]; // [m][k][l]
    for m in 0..4 {
        for k in 0..4 {
            for l in 0..4 {
                let mut val = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        val -= g_inv[(k, a)] * gj[a][b].d[m] * g_inv[(b, l)];
                    }
                }
                dginv[m][k][l] = val;
            }
        }
    }
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for m in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut val = 0.0;
                    for l in 0..4 {
                        let sym = gj[l][j].d[i] + gj[l][i].d[j] - gj[i][j].d[l];
                        let dsym = gj[l][j].h[m][i] + gj[l][i].h[m][j] - gj[i][j].h[m][l];
                        val += dginv[m][k][l] * sym + g_inv[(k, l)] * dsym;
                    }
                    dgamma[m][k][i][j] = 0.5 * val;
                }
            }
        }
    }
    dgamma
}

/// Sectional curvature of the plane spanned by `x`, `y`.
pub fn sectional_curvature(
    g: &Matrix4<f64>,
    riemann: &[[[[f64; 4]; 4]; 4]; 4],
    x: &[f64; 4],
    y: &[f64; 4],
) -> f64 {
    let mut rxyxy = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    rxyxy += riemann[i][j][k][l] * x[i] * y[j] * x[k] * y[l];
                }
            }
        }
    }
    let ip = |a: &[f64; 4], b: &[f64; 4]| {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += g[(i, j)] * a[i] * b[j];
            }
        }
        s
    };
    let area2 = ip(x, x) * ip(y, y) - ip(x, y) * ip(x, y);
    rxyxy / area2
}

/// Options for [`parallel_transport`].
#[derive(Debug, Clone, Copy)]
pub struct TransportOptions {
    /// Fixed-step RK4 resolution: steps per unit of curve parameter
    /// (the sampled curve is parametrized over `[0, 1]`).
    pub steps_per_unit: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { steps_per_unit: 512 }
    }
}

/// Parallel-transport the columns of `frame` along a sampled curve.
///
/// The curve is interpolated linearly between samples and the transport
/// equation `V' = -Γ(γ)(γ', V)` is integrated with fixed-step RK4.
pub fn parallel_transport(
    model: ManifoldModel,
    curve: &[ChartPoint],
    frame: &Matrix4<f64>,
    opts: TransportOptions,
) -> Result<Matrix4<f64>, GeomError> {
    if curve.len() < 2 {
        return Err(GeomError::CurveTooShort);
    }
    for (index, p) in curve.iter().enumerate() {
        if !model.contains(&p.0) {
            return Err(GeomError::CurveExitsChart { index });
        }
    }
    let segments = curve.len() - 1;
    let n_sub = (opts.steps_per_unit as f64 / segments as f64).round().max(1.0) as usize;
    let h = 1.0 / n_sub as f64;
    if h < 1e-12 {
        return Err(GeomError::StepSizeUnderflow(opts.steps_per_unit));
    }

    let mut v = *frame;
    for seg in 0..segments {
        let a = curve[seg].0;
        let b = curve[seg + 1].0;
        let dir = [b[0] - a[0], b[1] - a[1], b[2] - a[2], b[3] - a[3]];
        // dV/dσ = -Γ(x(σ))(dir, V) over σ in [0, 1].
        let rhs = |sigma: f64, w: &Matrix4<f64>| -> Matrix4<f64> {
            let x = [
                a[0] + sigma * dir[0],
                a[1] + sigma * dir[1],
                a[2] + sigma * dir[2],
                a[3] + sigma * dir[3],
            ];
            let gj = model.metric_jets(&x);
            let gamma = christoffel_from_jets(&gj);
            let mut out = Matrix4::zeros();
            for col in 0..4 {
                for k in 0..4 {
                    let mut val = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            val -= gamma[k][i][j] * dir[i] * w[(j, col)];
                        }
                    }
                    out[(k, col)] = val;
                }
            }
            out
        };
        for step in 0..n_sub {
            let s0 = step as f64 * h;
            let k1 = rhs(s0, &v);
            let k2 = rhs(s0 + 0.5 * h, &(v + k1 * (0.5 * h)));
            let k3 = rhs(s0 + 0.5 * h, &(v + k2 * (0.5 * h)));
            let k4 = rhs(s0 + h, &(v + k3 * h));
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    Ok(v)
}

/// Metric inner product of chart vectors, generic over the scalar.
pub fn dot_g<T: Smooth>(g: &[[T; 4]; 4], a: &[T; 4], b: &[T; 4]) -> T {
    let mut s = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            s = s + g[i][j] * a[i] * b[j];
        }
    }
    s
}

/// Gram–Schmidt a list of seed vectors into a `g`-orthonormal frame.
///
/// Fails (returns `None`) when a seed's residual after projection is shorter
/// than `min_residual` times its original length, signalling near-dependence.
pub fn gram_schmidt<T: Smooth, const K: usize>(
    g: &[[T; 4]; 4],
    seeds: &[[T; 4]; K],
    min_residual: f64,
) -> Option<[[T; 4]; K]> {
    let mut frame = [[T::zero(); 4]; K];
    for k in 0..K {
        let mut w = seeds[k];
        for e in frame.iter().take(k) {
            let c = dot_g(g, &w, e);
            for i in 0..4 {
                w[i] = w[i] - c * e[i];
            }
        }
        let n2 = dot_g(g, &w, &w);
        let seed_n2 = dot_g(g, &seeds[k], &seeds[k]).value().max(f64::MIN_POSITIVE);
        if !(n2.value() > min_residual * min_residual * seed_n2) {
            return None;
        }
        let inv = T::one() / n2.sqrt();
        for i in 0..4 {
            frame[k][i] = w[i] * inv;
        }
    }
    Some(frame)
}

/// The deterministic reference frame at a chart point: Gram–Schmidt of the
/// coordinate basis. Generic so that frame derivatives come out of jets.
pub fn reference_frame<T: Smooth>(g: &[[T; 4]; 4]) -> [[T; 4]; 4] {
    let mut seeds = [[T::zero(); 4]; 4];
    for (i, s) in seeds.iter_mut().enumerate() {
        s[i] = T::one();
    }
    gram_schmidt(g, &seeds, 1e-9).expect("coordinate basis is always independent")
}
