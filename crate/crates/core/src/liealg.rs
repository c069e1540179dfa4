//! Exact verification of the homogeneous-model algebra behind the lift
//! construction: the splitting of `so(5)` adapted to a fixed complex
//! structure, the one-parameter metric family on its moving part, the
//! rotating-frame conjugation identity, the torsion three-form identities,
//! and the connection-difference formula.
//!
//! Everything here is finite-dimensional linear algebra over small exact
//! constants (integers and `1/sqrt(2)`), so all identities are checked in
//! double precision against a `1e-13` threshold. Each public check returns a
//! [`LieReport`] — a pass/fail table of named residuals — and
//! [`full_suite`] concatenates them all.
//!
//! Conventions. `so(4)` sits in `so(5)` as the upper-left block; the
//! complement `p` is spanned by the four generators mixing the fifth axis.
//! The reference complex structure `J0` is the first element of the
//! left-multiplication quaternion triple (the same triple the twistor fiber
//! uses); its centralizer in `so(4)` is `u(2)`, spanned by `J0` and the
//! right-multiplication triple, and `n` is the two-plane of the remaining
//! triple elements `J2, J3`. The invariant pairing is `B(X, Y) = 3 tr(XY)`,
//! the scale on which the moving-part norms come out as integers.

use crate::twistor::TRIPLE;
use nalgebra::{Matrix4, Matrix5, SMatrix};

/// Pass threshold for every identity in this module.
pub const LIE_TOL: f64 = 1e-13;

/// Skewness tolerance for constructing elements.
pub const SKEW_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("matrix is not skew-symmetric: max |X + X^T| entry = {max_asymmetry}")]
    NotSkew { max_asymmetry: f64 },
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
}

// ---------------------------------------------------------------------------
// Elements and basic constructions.
// ---------------------------------------------------------------------------

/// An element of `so(5)`: a real 5x5 skew-symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct So5Element(Matrix5<f64>);

impl So5Element {
    pub fn new(m: Matrix5<f64>) -> Result<Self, LieError> {
        let mut worst = 0.0_f64;
        for r in 0..5 {
            for c in 0..5 {
                worst = worst.max((m[(r, c)] + m[(c, r)]).abs());
            }
        }
        if worst > SKEW_TOL {
            return Err(LieError::NotSkew { max_asymmetry: worst });
        }
        Ok(So5Element(m))
    }

    pub fn zero() -> Self {
        So5Element(Matrix5::zeros())
    }

    pub fn matrix(&self) -> &Matrix5<f64> {
        &self.0
    }

    /// Frobenius norm (used only for residual reporting).
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn from_raw(m: Matrix5<f64>) -> Self {
        So5Element(m)
    }
}

impl std::ops::Add for So5Element {
    type Output = So5Element;
    fn add(self, rhs: So5Element) -> So5Element {
        So5Element(self.0 + rhs.0)
    }
}

impl std::ops::Sub for So5Element {
    type Output = So5Element;
    fn sub(self, rhs: So5Element) -> So5Element {
        So5Element(self.0 - rhs.0)
    }
}

impl std::ops::Mul<f64> for So5Element {
    type Output = So5Element;
    fn mul(self, rhs: f64) -> So5Element {
        So5Element(self.0 * rhs)
    }
}

/// Lie bracket `[X, Y] = XY - YX`.
pub fn bracket(x: &So5Element, y: &So5Element) -> So5Element {
    So5Element(x.0 * y.0 - y.0 * x.0)
}

/// The invariant pairing `B(X, Y) = 3 tr(XY)`.
pub fn killing(x: &So5Element, y: &So5Element) -> f64 {
    3.0 * (x.0 * y.0).trace()
}

fn embed4(m: &Matrix4<f64>) -> Matrix5<f64> {
    let mut out = Matrix5::zeros();
    for r in 0..4 {
        for c in 0..4 {
            out[(r, c)] = m[(r, c)];
        }
    }
    out
}

fn triple4(a: usize) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| TRIPLE[a][r][c])
}

/// The right-multiplication quaternion triple: commutes entrywise with the
/// left-multiplication triple `TRIPLE`; entry `[r][c]` is the `r`-th
/// component of the image of `e_c`.
const RIGHT_TRIPLE: [[[f64; 4]; 4]; 3] = [
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ],
    [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ],
];

fn right_triple4(a: usize) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| RIGHT_TRIPLE[a][r][c])
}

/// The reference complex structure as a 4x4 matrix.
pub fn j0_matrix4() -> Matrix4<f64> {
    triple4(0)
}

/// The reference complex structure embedded in `so(5)`.
pub fn j0() -> So5Element {
    So5Element::from_raw(embed4(&j0_matrix4()))
}

/// The equator structure `cos(theta) J2 + sin(theta) J3` as a 4x4 matrix.
pub fn equator_matrix4(theta: f64) -> Matrix4<f64> {
    triple4(1) * theta.cos() + triple4(2) * theta.sin()
}

/// Basis of the centralizer `u(2)` of `J0` in `so(4)`: `J0` and the
/// right-multiplication triple.
pub fn u2_basis() -> [So5Element; 4] {
    [
        j0(),
        So5Element::from_raw(embed4(&right_triple4(0))),
        So5Element::from_raw(embed4(&right_triple4(1))),
        So5Element::from_raw(embed4(&right_triple4(2))),
    ]
}

/// Basis of `n`, the `B`-orthocomplement of `u(2)` in `so(4)`: the two
/// remaining left-triple elements.
pub fn n_basis() -> [So5Element; 2] {
    [
        So5Element::from_raw(embed4(&triple4(1))),
        So5Element::from_raw(embed4(&triple4(2))),
    ]
}

/// Basis of `p`: the four rotations mixing `e_i` with the fifth axis.
pub fn p_basis() -> [So5Element; 4] {
    std::array::from_fn(p_generator)
}

fn p_generator(i: usize) -> So5Element {
    let mut m = Matrix5::zeros();
    m[(4, i)] = 1.0;
    m[(i, 4)] = -1.0;
    So5Element::from_raw(m)
}

/// Basis of the moving part `m = n + p` (six elements, `n` first).
pub fn m_basis() -> [So5Element; 6] {
    let n = n_basis();
    let p = p_basis();
    [n[0], n[1], p[0], p[1], p[2], p[3]]
}

/// Full basis of `so(5)` (ten elements: `u(2)`, then `n`, then `p`).
pub fn so5_basis() -> [So5Element; 10] {
    let h = u2_basis();
    let n = n_basis();
    let p = p_basis();
    [h[0], h[1], h[2], h[3], n[0], n[1], p[0], p[1], p[2], p[3]]
}

// ---------------------------------------------------------------------------
// Decomposition.
// ---------------------------------------------------------------------------

/// Components of an `so(5)` element in `u(2)`, `n`, and `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub x_h: So5Element,
    pub x_n: So5Element,
    pub x_p: So5Element,
}

impl Decomposition {
    pub fn total(&self) -> So5Element {
        self.x_h + self.x_n + self.x_p
    }
}

/// Split an element into its `u(2)`, `n`, and `p` components: the fifth
/// row/column is the `p` part, and within the `so(4)` block the centralizer
/// and anticentralizer of `J0` are extracted by averaging with the
/// `J0`-conjugate.
pub fn cartan_decompose(x: &So5Element) -> Decomposition {
    let m = &x.0;
    let mut p = Matrix5::zeros();
    for i in 0..4 {
        p[(4, i)] = m[(4, i)];
        p[(i, 4)] = m[(i, 4)];
    }
    let mut a = Matrix4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            a[(r, c)] = m[(r, c)];
        }
    }
    let j = j0_matrix4();
    let conj = j * a * j;
    let h = (a - conj) * 0.5;
    let n = (a + conj) * 0.5;
    Decomposition {
        x_h: So5Element::from_raw(embed4(&h)),
        x_n: So5Element::from_raw(embed4(&n)),
        x_p: So5Element::from_raw(p),
    }
}

/// The metric family on the moving part: `(1/lambda^2) (-B)` on `n` plus
/// `-B` on `p`.
pub fn g_lambda_m(lambda: f64, x: &So5Element, y: &So5Element) -> f64 {
    let dx = cartan_decompose(x);
    let dy = cartan_decompose(y);
    let c = 1.0 / (lambda * lambda);
    -c * killing(&dx.x_n, &dy.x_n) - killing(&dx.x_p, &dy.x_p)
}

/// The fixed comparison metric: `2 (-B)` on `n` plus `-B` on `p`.
pub fn g_k_m(x: &So5Element, y: &So5Element) -> f64 {
    let dx = cartan_decompose(x);
    let dy = cartan_decompose(y);
    -2.0 * killing(&dx.x_n, &dy.x_n) - killing(&dx.x_p, &dy.x_p)
}

/// The rotating-frame base matrix.
pub fn b0_matrix4() -> Matrix4<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix4::new(
        s, 0.0, 0.0, -s, //
        0.0, s, -s, 0.0, //
        0.0, s, s, 0.0, //
        s, 0.0, 0.0, s,
    )
}

/// `exp(theta J0)` in closed form (`J0^2 = -I`).
pub fn exp_theta_j0(theta: f64) -> Matrix4<f64> {
    Matrix4::identity() * theta.cos() + j0_matrix4() * theta.sin()
}

/// The rotating frame `B_theta = exp(theta J0) B0`.
pub fn b_theta_matrix4(theta: f64) -> Matrix4<f64> {
    exp_theta_j0(theta) * b0_matrix4()
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

/// One named residual with its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckLine {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let passed = residual.is_finite() && residual <= tolerance;
        CheckLine { name: name.into(), residual, tolerance, passed }
    }
}

/// A pass/fail table of residuals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LieReport {
    pub lines: Vec<CheckLine>,
}

impl LieReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn worst_residual(&self) -> f64 {
        self.lines.iter().fold(0.0, |acc, l| acc.max(l.residual))
    }

    fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.lines.push(CheckLine::new(name, residual, tolerance));
    }

    fn extend(&mut self, other: LieReport) {
        self.lines.extend(other.lines);
    }
}

// ---------------------------------------------------------------------------
// Checks.
// ---------------------------------------------------------------------------

/// Decomposition sanity: component placement, reconstruction, mutual
/// `B`-orthogonality, idempotence, and the (4, 2, 4) dimension count.
pub fn check_decomposition() -> LieReport {
    let mut rep = LieReport::default();
    let j = j0();

    let d = cartan_decompose(&j);
    rep.push("decompose(J0) is purely u(2)", (d.x_n.norm()).max(d.x_p.norm()), LIE_TOL);
    rep.push("decompose(J0) reconstructs", (d.total() - j).norm(), LIE_TOL);

    let p1 = p_basis()[0];
    let d = cartan_decompose(&p1);
    rep.push("decompose(p generator) is purely p", (d.x_h.norm()).max(d.x_n.norm()), LIE_TOL);

    let n1 = n_basis()[0];
    let d = cartan_decompose(&n1);
    rep.push("decompose(J2) is purely n", (d.x_h.norm()).max(d.x_p.norm()), LIE_TOL);

    // Reconstruction + orthogonality + idempotence over a spanning set.
    let mut worst_recon = 0.0_f64;
    let mut worst_orth = 0.0_f64;
    let mut worst_idem = 0.0_f64;
    for x in combination_sweep() {
        let d = cartan_decompose(&x);
        worst_recon = worst_recon.max((d.total() - x).norm());
        worst_orth = worst_orth
            .max(killing(&d.x_h, &d.x_n).abs())
            .max(killing(&d.x_h, &d.x_p).abs())
            .max(killing(&d.x_n, &d.x_p).abs());
        for (pick, part) in [d.x_h, d.x_n, d.x_p].into_iter().enumerate() {
            let dd = cartan_decompose(&part);
            let back = [dd.x_h, dd.x_n, dd.x_p][pick];
            worst_idem = worst_idem
                .max((dd.total() - part).norm())
                .max((back - part).norm());
        }
    }
    rep.push("decomposition reconstructs on combinations", worst_recon, LIE_TOL);
    rep.push("components mutually B-orthogonal", worst_orth, LIE_TOL);
    rep.push("decomposition idempotent", worst_idem, LIE_TOL);

    // Commutation structure: h commutes with J0, n anticommutes.
    let mut worst = 0.0_f64;
    for x in combination_sweep() {
        let d = cartan_decompose(&x);
        worst = worst.max(bracket(&d.x_h, &j).norm());
        let anti = So5Element::from_raw(d.x_n.0 * j.0 + j.0 * d.x_n.0);
        worst = worst.max(anti.norm());
    }
    rep.push("u(2) part commutes with J0, n part anticommutes", worst, LIE_TOL);

    // Dimensions via rank of the stacked component images of the full basis.
    let basis = so5_basis();
    for (label, expected, pick) in [
        ("dim u(2) = 4", 4usize, 0usize),
        ("dim n = 2", 2, 1),
        ("dim p = 4", 4, 2),
    ] {
        let mut rows = Vec::new();
        for x in &basis {
            let d = cartan_decompose(x);
            let part = [d.x_h, d.x_n, d.x_p][pick];
            rows.push(flatten5(&part));
        }
        let rank = rank_of(&rows);
        rep.push(label, (rank as f64 - expected as f64).abs(), 0.5);
    }
    rep
}

/// A deterministic spanning set of non-basis elements (sums of basis pairs
/// with irrational-looking weights) to exercise the linear maps.
fn combination_sweep() -> Vec<So5Element> {
    let basis = so5_basis();
    let mut out: Vec<So5Element> = basis.to_vec();
    for (k, pair) in basis.iter().zip(basis.iter().cycle().skip(3)).enumerate() {
        let w = 0.37 + 0.11 * k as f64;
        out.push(*pair.0 * w + *pair.1 * (1.3 - w * 0.2));
    }
    out
}

fn flatten5(x: &So5Element) -> [f64; 25] {
    let mut out = [0.0; 25];
    for r in 0..5 {
        for c in 0..5 {
            out[5 * r + c] = x.0[(r, c)];
        }
    }
    out
}

fn rank_of(rows: &[[f64; 25]]) -> usize {
    let m = nalgebra::DMatrix::from_fn(rows.len(), 25, |r, c| rows[r][c]);
    m.rank(1e-9)
}

/// Killing-form checks: the reference norm and Ad-invariance on all basis
/// triples.
pub fn check_killing_form() -> LieReport {
    let mut rep = LieReport::default();
    let j = j0();
    rep.push("-B(J0, J0) = 12", (-killing(&j, &j) - 12.0).abs(), LIE_TOL);

    let basis = so5_basis();
    let mut worst = 0.0_f64;
    for z in &basis {
        for x in &basis {
            for y in &basis {
                let lhs = killing(&bracket(z, x), y) + killing(x, &bracket(z, y));
                worst = worst.max(lhs.abs());
            }
        }
    }
    rep.push("B Ad-invariant on all basis triples", worst, LIE_TOL);
    rep
}

/// Metric-family checks: positive-definiteness on the moving part, the
/// crossover with the comparison metric at `lambda = 1/sqrt(2)` on `n`, and
/// `lambda`-independence on `p`.
pub fn check_metric_family(lambda: f64) -> Result<LieReport, LieError> {
    if !(lambda > 0.0) {
        return Err(LieError::NonPositiveLambda(lambda));
    }
    let mut rep = LieReport::default();
    let m = m_basis();

    for (label, metric) in [
        ("g_lambda", Box::new(move |x: &So5Element, y: &So5Element| g_lambda_m(lambda, x, y))
            as Box<dyn Fn(&So5Element, &So5Element) -> f64>),
        ("g_K", Box::new(g_k_m)),
    ] {
        let gram = SMatrix::<f64, 6, 6>::from_fn(|r, c| metric(&m[r], &m[c]));
        let eigen = gram.symmetric_eigenvalues();
        let min_eigen = eigen.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.push(
            format!("{label} positive definite on m (min eigenvalue > 0)"),
            if min_eigen > 0.0 { 0.0 } else { 1.0 + min_eigen.abs() },
            LIE_TOL,
        );
    }

    // Ten deterministic pseudo-random vectors must have positive norm.
    let mut worst = 0.0_f64;
    let mut seed = 0x9e3779b97f4a7c15_u64;
    for _ in 0..10 {
        let mut v = So5Element::zero();
        for b in m.iter() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let w = ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            v = v + *b * w;
        }
        let nrm = g_lambda_m(lambda, &v, &v);
        if nrm <= 0.0 {
            worst = 1.0;
        }
    }
    rep.push("g_lambda positive on random combinations", worst, LIE_TOL);

    // Crossover: g_K agrees with g_lambda at lambda = 1/sqrt(2) on n.
    let crossover = std::f64::consts::FRAC_1_SQRT_2;
    let n = n_basis();
    let mut worst = 0.0_f64;
    for x in &n {
        for y in &n {
            worst = worst.max((g_lambda_m(crossover, x, y) - g_k_m(x, y)).abs());
        }
    }
    rep.push("g_K = g_lambda on n at lambda = 1/sqrt(2)", worst, LIE_TOL);

    // lambda-independence on p: compare against lambda = 1.
    let p = p_basis();
    let mut worst = 0.0_f64;
    for x in &p {
        for y in &p {
            worst = worst.max((g_lambda_m(lambda, x, y) - g_lambda_m(1.0, x, y)).abs());
            worst = worst.max((g_k_m(x, y) - g_lambda_m(1.0, x, y)).abs());
        }
    }
    rep.push("g_lambda and g_K independent of lambda on p", worst, LIE_TOL);
    Ok(rep)
}

/// Rotating-frame checks: `B0` is special orthogonal, conjugating `J0` by
/// `B0` lands on the equator start, and conjugating by `B_theta` sweeps the
/// equator at twice the frame angle.
pub fn check_b_theta(n_samples: usize) -> LieReport {
    let mut rep = LieReport::default();
    let b0 = b0_matrix4();

    rep.push(
        "B0 orthogonal",
        (b0.transpose() * b0 - Matrix4::identity()).norm(),
        LIE_TOL,
    );
    rep.push("det B0 = 1", (b0.determinant() - 1.0).abs(), LIE_TOL);

    let j = j0_matrix4();
    let at_zero = b0 * j * b0.transpose();
    rep.push(
        "B0 J0 B0^-1 = equator start J2",
        (at_zero - equator_matrix4(0.0)).norm(),
        LIE_TOL,
    );

    // The conjugation sweeps the equator with the doubled angle: rotating
    // the frame by theta conjugates the fiber point by exp(theta J0), whose
    // adjoint action on the (J2, J3) plane is the rotation by 2 theta.
    let mut worst = 0.0_f64;
    let mut worst_single = f64::INFINITY;
    for k in 0..n_samples.max(2) {
        let theta = std::f64::consts::TAU * (k as f64 + 0.31) / n_samples.max(2) as f64;
        let b = b_theta_matrix4(theta);
        let conj = b * j * b.transpose();
        worst = worst.max((conj - equator_matrix4(2.0 * theta)).norm());
        worst_single = worst_single.min((conj - equator_matrix4(theta)).norm());
    }
    rep.push("B_theta J0 B_theta^-1 = equator at 2 theta", worst, LIE_TOL);
    rep.push(
        "doubled angle is essential (single-angle residual stays large)",
        if worst_single > 0.1 { 0.0 } else { 1.0 },
        LIE_TOL,
    );
    rep
}

/// Fiber-velocity normalization: `Ad(B0)^-1 J0` lies in `n` and its
/// `(lambda / sqrt(12))` multiple has unit `g_lambda` length.
pub fn check_v3_normalization(lambda: f64) -> Result<LieReport, LieError> {
    if !(lambda > 0.0) {
        return Err(LieError::NonPositiveLambda(lambda));
    }
    let mut rep = LieReport::default();
    let b0 = b0_matrix4();
    let w4 = b0.transpose() * j0_matrix4() * b0;
    let w = So5Element::from_raw(embed4(&w4));

    let anti = w4 * j0_matrix4() + j0_matrix4() * w4;
    rep.push("Ad(B0)^-1 J0 anticommutes with J0", anti.norm(), LIE_TOL);

    let d = cartan_decompose(&w);
    rep.push("Ad(B0)^-1 J0 has no u(2) component", d.x_h.norm(), LIE_TOL);
    rep.push("Ad(B0)^-1 J0 has no p component", d.x_p.norm(), LIE_TOL);

    let v3 = w * (lambda / 12.0_f64.sqrt());
    rep.push(
        format!("|v3|_g_lambda = 1 at lambda = {lambda}"),
        (g_lambda_m(lambda, &v3, &v3) - 1.0).abs(),
        LIE_TOL,
    );
    Ok(rep)
}

/// Bracket grading over fixed bases: `[u(2), n] in n`, `[u(2), p] in p`,
/// `[n, n] in u(2)`, `[n, p] in p`, and `[p, p]` back in the `so(4)` block
/// with moving part in `n`.
pub fn check_bracket_grading() -> LieReport {
    let mut rep = LieReport::default();
    let h = u2_basis().to_vec();
    let n = n_basis().to_vec();
    let p = p_basis().to_vec();

    let cases: [(&str, &[So5Element], &[So5Element], fn(&Decomposition) -> f64); 5] = [
        ("[u(2), n] in n", &h, &n, |d| d.x_h.norm().max(d.x_p.norm())),
        ("[u(2), p] in p", &h, &p, |d| d.x_h.norm().max(d.x_n.norm())),
        ("[n, n] in u(2)", &n, &n, |d| d.x_n.norm().max(d.x_p.norm())),
        ("[n, p] in p", &n, &p, |d| d.x_h.norm().max(d.x_n.norm())),
        ("[p, p] moving part in n", &p, &p, |d| d.x_p.norm()),
    ];
    for (label, left, right, off_part) in cases {
        let mut worst = 0.0_f64;
        for x in left {
            for y in right {
                let d = cartan_decompose(&bracket(x, y));
                worst = worst.max(off_part(&d));
            }
        }
        rep.push(label, worst, LIE_TOL);
    }
    rep
}

/// The moving-part bracket, the constant torsion candidate.
fn t_m(x: &So5Element, y: &So5Element) -> So5Element {
    let d = cartan_decompose(&bracket(x, y));
    d.x_n + d.x_p
}

/// The bracket-difference 2-form of the mixed components:
/// `[x_n, y_p] - [y_n, x_p]`.
fn mixed_bracket(x: &So5Element, y: &So5Element) -> So5Element {
    let dx = cartan_decompose(x);
    let dy = cartan_decompose(y);
    bracket(&dx.x_n, &dy.x_p) - bracket(&dy.x_n, &dx.x_p)
}

/// The torsion three-form identities: the bracket pairing vanishes on
/// repeated arguments from `n` or `p`, the unit-scale three-form is totally
/// antisymmetric, the mixed-bracket pairing vanishes, and the assembled
/// torsion annihilates the diagonal frame sum.
pub fn verify_lemma_a(lambdas: &[f64]) -> Result<LieReport, LieError> {
    let mut rep = LieReport::default();
    for &l in lambdas {
        if !(l > 0.0) {
            return Err(LieError::NonPositiveLambda(l));
        }
    }
    let m = m_basis();
    let np: Vec<So5Element> = n_basis().iter().chain(p_basis().iter()).cloned().collect();

    // (repeated-argument bracket pairing) for each listed lambda.
    for &lambda in lambdas {
        let mut worst = 0.0_f64;
        for z in &m {
            for x in &np {
                worst = worst.max(g_lambda_m(lambda, &t_m(z, x), x).abs());
            }
        }
        rep.push(
            format!("g_lambda([Z, X]_m, X) = 0 for X in n or p, lambda = {lambda}"),
            worst,
            LIE_TOL,
        );
    }

    // Total antisymmetry of the unit-scale three-form on all ordered triples.
    let mut worst = 0.0_f64;
    for x in &m {
        for y in &m {
            for z in &m {
                let t = g_lambda_m(1.0, &t_m(x, y), z);
                let swaps = [
                    g_lambda_m(1.0, &t_m(y, x), z) + t,
                    g_lambda_m(1.0, &t_m(x, z), y) + t,
                    g_lambda_m(1.0, &t_m(z, y), x) + t,
                ];
                for s in swaps {
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    rep.push("unit-scale bracket three-form totally antisymmetric", worst, LIE_TOL);

    // Mixed-bracket pairing vanishes on repeated arguments.
    for &lambda in lambdas {
        let mut worst = 0.0_f64;
        for z in &m {
            for x in &np {
                worst = worst.max(g_lambda_m(lambda, &mixed_bracket(z, x), x).abs());
            }
        }
        rep.push(
            format!("mixed-bracket pairing vanishes, lambda = {lambda}"),
            worst,
            LIE_TOL,
        );
    }

    // Assembled torsion (constant part plus mixed bracket, curvature
    // excluded) annihilates the diagonal sum over the model frame.
    for &lambda in lambdas {
        let frame = model_frame(lambda);
        let mut worst = 0.0_f64;
        for z in &m {
            let mut total = 0.0;
            for v in &frame {
                let t_hat = mixed_bracket(z, v) * -1.0 - t_m(z, v);
                total += g_lambda_m(lambda, &t_hat, v);
            }
            worst = worst.max(total.abs());
        }
        rep.push(
            format!("sum_i T(Z, v_i, v_i) = 0 on the model frame, lambda = {lambda}"),
            worst,
            LIE_TOL,
        );
    }
    Ok(rep)
}

/// The `g_lambda`-orthonormal model frame: two horizontal legs in `p` and
/// the fiber velocity in `n`, all transported by `Ad(B0)^-1`.
fn model_frame(lambda: f64) -> [So5Element; 3] {
    let b0 = b0_matrix4();
    let ad_inv = |x: &So5Element| {
        let mut big = Matrix5::identity();
        for r in 0..4 {
            for c in 0..4 {
                big[(r, c)] = b0[(r, c)];
            }
        }
        So5Element::from_raw(big.transpose() * x.0 * big)
    };
    let p = p_basis();
    let w = ad_inv(&j0());
    [
        ad_inv(&p[0]) * (1.0 / 6.0_f64.sqrt()),
        ad_inv(&p[1]) * (1.0 / 6.0_f64.sqrt()),
        w * (lambda / 12.0_f64.sqrt()),
    ]
}

/// The connection-difference formula: the operator induced from the
/// constant torsion is metric-skew, its frame-diagonal sum collapses to the
/// plain torsion trace, and it vanishes with the torsion.
pub fn check_a_formula() -> LieReport {
    let mut rep = LieReport::default();
    let lambda = 1.0;
    let m = m_basis();

    // T(X, Y, Z) = g_lambda(-t(X, Y), Z): the constant part of the torsion.
    let t_form =
        |x: &So5Element, y: &So5Element, z: &So5Element| -g_lambda_m(lambda, &t_m(x, y), z);
    // g_lambda(A(X) Y, Z) from the cyclic combination.
    let a_form = |x: &So5Element, y: &So5Element, z: &So5Element| {
        0.5 * (t_form(x, y, z) - t_form(y, z, x) + t_form(z, x, y))
    };

    let mut worst_skew = 0.0_f64;
    for x in &m {
        for y in &m {
            for z in &m {
                worst_skew = worst_skew.max((a_form(x, y, z) + a_form(x, z, y)).abs());
            }
        }
    }
    rep.push("induced operator metric-skew in last two slots", worst_skew, LIE_TOL);

    let frame = model_frame(lambda);
    let mut worst = 0.0_f64;
    for z in &m {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for v in &frame {
            lhs += a_form(v, v, z);
            rhs += t_form(z, v, v);
        }
        worst = worst.max((lhs - rhs).abs());
    }
    rep.push("frame-diagonal sum collapses to the torsion trace", worst, LIE_TOL);

    // Zero torsion induces the zero operator.
    let zero_form = |_: &So5Element, _: &So5Element, _: &So5Element| 0.0_f64;
    let a_zero = |x: &So5Element, y: &So5Element, z: &So5Element| {
        0.5 * (zero_form(x, y, z) - zero_form(y, z, x) + zero_form(z, x, y))
    };
    let mut worst = 0.0_f64;
    for x in &m {
        worst = worst.max(a_zero(x, &m[0], &m[1]).abs());
    }
    rep.push("zero torsion induces zero operator", worst, LIE_TOL);
    rep
}

/// The infinitesimal equator stabilizer inside `so(4)`: solutions of
/// "`[A, J_theta]` is tangent to the equator circle at every sampled theta"
/// form a 4-dimensional space equal to `u(2)`.
pub fn check_equator_stabilizer(n_theta: usize) -> LieReport {
    let mut rep = LieReport::default();
    // Basis of so(4) embedded: u(2) basis then n basis.
    let so4: Vec<So5Element> = u2_basis().iter().chain(n_basis().iter()).cloned().collect();
    let n_theta = n_theta.max(3);

    // Rows: for each theta and each matrix entry, the residual of
    // [A, J_theta] after removing its component along the circle tangent.
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); so4.len()];
    for k in 0..n_theta {
        let theta = std::f64::consts::TAU * (k as f64 + 0.17) / n_theta as f64;
        let jt = So5Element::from_raw(embed4(&equator_matrix4(theta)));
        let tangent = So5Element::from_raw(embed4(
            &(triple4(1) * (-theta.sin()) + triple4(2) * theta.cos()),
        ));
        let tangent_norm2 = frob_ip(&tangent, &tangent);
        for (i, a) in so4.iter().enumerate() {
            let br = bracket(a, &jt);
            let coeff = frob_ip(&br, &tangent) / tangent_norm2;
            let residual = br - tangent * coeff;
            rows[i].extend(flatten5(&residual));
        }
    }
    let cols = rows[0].len();
    let mat = nalgebra::DMatrix::from_fn(cols, so4.len(), |r, c| rows[c][r]);
    let svd = mat.svd(true, true);
    let nullity = svd.singular_values.iter().filter(|s| **s < 1e-9).count()
        + (so4.len() - svd.singular_values.len().min(so4.len()));
    rep.push(
        "equator-preserving solution space has dimension 4",
        (nullity as f64 - 4.0).abs(),
        0.5,
    );

    // Every u(2) basis element satisfies the conditions...
    let mut worst = 0.0_f64;
    for (i, _) in so4.iter().enumerate().take(4) {
        let r: f64 = rows[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    rep.push("u(2) preserves the equator", worst, LIE_TOL);

    // ...and no n direction does: the condition rows restricted to n have
    // full rank 2.
    let mat_n = nalgebra::DMatrix::from_fn(cols, 2, |r, c| rows[4 + c][r]);
    let rank = mat_n.rank(1e-9);
    rep.push("no n direction preserves the equator", (rank as f64 - 2.0).abs(), 0.5);
    rep
}

fn frob_ip(a: &So5Element, b: &So5Element) -> f64 {
    (a.0.transpose() * b.0).trace()
}

/// The homogeneous 2-form `(X, Y) -> g_K([z, X], Y)` with `z` the half-scale
/// reference structure: antisymmetric and nondegenerate on the moving part.
pub fn check_orbit_form() -> LieReport {
    let mut rep = LieReport::default();
    let z = j0() * 0.5;
    let m = m_basis();
    let form = SMatrix::<f64, 6, 6>::from_fn(|r, c| g_k_m(&bracket(&z, &m[r]), &m[c]));

    rep.push("orbit form antisymmetric", (form + form.transpose()).norm(), LIE_TOL);

    let svals = form.svd(false, false).singular_values;
    let smallest = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.push(
        "orbit form nondegenerate (smallest singular value > 1e-3)",
        if smallest > 1e-3 { 0.0 } else { 1.0 },
        LIE_TOL,
    );
    rep
}

/// Run every check in the module and concatenate the tables.
pub fn full_suite(lambdas: &[f64]) -> Result<LieReport, LieError> {
    let mut rep = LieReport::default();
    rep.extend(check_decomposition());
    rep.extend(check_killing_form());
    for &lambda in lambdas {
        rep.extend(check_metric_family(lambda)?);
        rep.extend(check_v3_normalization(lambda)?);
    }
    rep.extend(check_b_theta(16));
    rep.extend(check_bracket_grading());
    rep.extend(verify_lemma_a(lambdas)?);
    rep.extend(check_a_formula());
    rep.extend(check_equator_stabilizer(8));
    rep.extend(check_orbit_form());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_triples_commute_across_sides() {
        for a in 0..3 {
            for b in 0..3 {
                let l = triple4(a);
                let r = right_triple4(b);
                assert!((l * r - r * l).norm() < 1e-15, "left/right triples must commute");
            }
        }
        for a in 0..3 {
            let r = right_triple4(a);
            assert!((r * r + Matrix4::identity()).norm() < 1e-15);
            assert!((r + r.transpose()).norm() < 1e-15);
        }
    }

    #[test]
    fn new_rejects_non_skew_matrices() {
        let mut m = Matrix5::zeros();
        m[(0, 1)] = 1.0;
        assert!(matches!(So5Element::new(m), Err(LieError::NotSkew { .. })));
        m[(1, 0)] = -1.0;
        assert!(So5Element::new(m).is_ok());
    }

    #[test]
    fn decomposition_checks_pass() {
        let rep = check_decomposition();
        assert!(rep.passed(), "{:#?}", rep.lines.iter().filter(|l| !l.passed).collect::<Vec<_>>());
    }

    #[test]
    fn killing_form_checks_pass() {
        let rep = check_killing_form();
        assert!(rep.passed(), "{:#?}", rep.lines);
    }

    #[test]
    fn metric_family_checks_pass() {
        for lambda in [0.5, 1.0, 2.0] {
            let rep = check_metric_family(lambda).unwrap();
            assert!(rep.passed(), "lambda {lambda}: {:#?}", rep.lines);
        }
        assert!(check_metric_family(0.0).is_err());
    }

    #[test]
    fn b_theta_checks_pass() {
        let rep = check_b_theta(24);
        assert!(rep.passed(), "{:#?}", rep.lines);
    }

    #[test]
    fn v3_normalization_checks_pass() {
        for lambda in [0.5, 1.0, 2.0] {
            let rep = check_v3_normalization(lambda).unwrap();
            assert!(rep.passed(), "lambda {lambda}: {:#?}", rep.lines);
        }
    }

    #[test]
    fn bracket_grading_checks_pass() {
        let rep = check_bracket_grading();
        assert!(rep.passed(), "{:#?}", rep.lines);
    }

    #[test]
    fn lemma_identities_pass() {
        let rep = verify_lemma_a(&[0.5, 1.0, 2.0]).unwrap();
        assert!(rep.passed(), "{:#?}", rep.lines);
    }

    #[test]
    fn a_formula_checks_pass() {
        let rep = check_a_formula();
        assert!(rep.passed(), "{:#?}", rep.lines);
    }

    #[test]
    fn equator_stabilizer_is_u2() {
        let rep = check_equator_stabilizer(8);
        assert!(rep.passed(), "{:#?}", rep.lines);
    }

    #[test]
    fn orbit_form_checks_pass() {
        let rep = check_orbit_form();
        assert!(rep.passed(), "{:#?}", rep.lines);
    }

    #[test]
    fn full_suite_passes_and_is_fast() {
        let start = std::time::Instant::now();
        let rep = full_suite(&[0.5, 1.0, 2.0]).unwrap();
        let elapsed = start.elapsed();
        assert!(rep.passed(), "{:#?}", rep.lines.iter().filter(|l| !l.passed).collect::<Vec<_>>());
        assert!(rep.worst_residual() < 1e-13);
        assert!(elapsed.as_secs_f64() < 1.0, "suite took {elapsed:?}");
        assert!(rep.lines.len() > 30);
    }

    #[test]
    fn model_frame_is_orthonormal() {
        for lambda in [0.5, 1.0, 2.0] {
            let f = model_frame(lambda);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    let got = g_lambda_m(lambda, &f[i], &f[j]);
                    assert!(
                        (got - expect).abs() < 1e-13,
                        "lambda {lambda}: <v{i}, v{j}> = {got}"
                    );
                }
            }
        }
    }
}
