//! Built-in surface corpus spanning the three models, both directions of the
//! lift correspondence, and both failure modes (non-minimal, and minimal but
//! not superminimal).

use crate::geom::ManifoldModel;
use crate::surface::{ImmersedSurface, SurfaceError};

/// Expected classification of a corpus surface by the superminimality meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedClass {
    Superminimal,
    MinimalNotSuperminimal,
    NonMinimal,
}

impl ExpectedClass {
    pub fn label(self) -> &'static str {
        match self {
            ExpectedClass::Superminimal => "superminimal",
            ExpectedClass::MinimalNotSuperminimal => "minimal-not-superminimal",
            ExpectedClass::NonMinimal => "non-minimal",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub model: ManifoldModel,
    pub formulas: [&'static str; 4],
    pub domain: [[f64; 2]; 2],
    pub grid: [usize; 2],
    pub expected: ExpectedClass,
    /// Why the expectation holds.
    pub note: &'static str,
}

const TAU: f64 = std::f64::consts::TAU;

pub const CORPUS: [CorpusEntry; 7] = [
    CorpusEntry {
        name: "plane_r4",
        model: ManifoldModel::FlatR4,
        formulas: ["u", "v", "0", "0"],
        domain: [[-1.0, 1.0], [-1.0, 1.0]],
        grid: [16, 16],
        expected: ExpectedClass::Superminimal,
        note: "totally geodesic coordinate plane; adapted frame constant",
    },
    CorpusEntry {
        name: "graph_z2",
        model: ManifoldModel::FlatR4,
        formulas: ["u", "v", "u^2 - v^2", "2*u*v"],
        domain: [[-1.0, 1.0], [-1.0, 1.0]],
        grid: [16, 16],
        expected: ExpectedClass::Superminimal,
        note: "graph of the complex square map; the ambient complex structure is constant and preserves tangent planes",
    },
    CorpusEntry {
        name: "graph_parab",
        model: ManifoldModel::FlatR4,
        formulas: ["u", "v", "u^2", "0"],
        domain: [[-1.0, 1.0], [-1.0, 1.0]],
        grid: [16, 16],
        expected: ExpectedClass::NonMinimal,
        note: "parabolic cylinder graph; mean curvature vector has norm 2 at the origin",
    },
    CorpusEntry {
        name: "sphere_tg",
        model: ManifoldModel::RoundS4,
        formulas: ["u", "v", "0", "0"],
        domain: [[-1.0, 1.0], [-1.0, 1.0]],
        grid: [16, 16],
        expected: ExpectedClass::Superminimal,
        note: "coordinate plane through the chart origin realizes a totally geodesic great 2-sphere",
    },
    CorpusEntry {
        name: "clifford",
        model: ManifoldModel::RoundS4,
        formulas: [
            "cos(u) / sqrt(2)",
            "sin(u) / sqrt(2)",
            "cos(v) / sqrt(2)",
            "sin(v) / sqrt(2)",
        ],
        domain: [[0.0, TAU], [0.0, TAU]],
        grid: [16, 16],
        expected: ExpectedClass::MinimalNotSuperminimal,
        note: "minimal torus inside the equatorial 3-sphere; its curvature ellipse degenerates to a segment",
    },
    CorpusEntry {
        name: "cp1_line",
        model: ManifoldModel::FubiniStudyCP2,
        formulas: ["u", "v", "0", "0"],
        domain: [[-1.0, 1.0], [-1.0, 1.0]],
        grid: [16, 16],
        expected: ExpectedClass::Superminimal,
        note: "projective line in the affine chart; a holomorphic curve in a Kaehler surface",
    },
    CorpusEntry {
        name: "veronese",
        model: ManifoldModel::FubiniStudyCP2,
        formulas: ["u", "v", "u^2 - v^2", "2*u*v"],
        domain: [[-0.5, 0.5], [-0.5, 0.5]],
        grid: [16, 16],
        expected: ExpectedClass::Superminimal,
        note: "affine-chart conic (graph of the complex square map); a holomorphic curve in a Kaehler surface",
    },
];

pub fn entry(name: &str) -> Option<&'static CorpusEntry> {
    CORPUS.iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    CORPUS.iter().map(|e| e.name).collect()
}

pub fn superminimal_names() -> Vec<&'static str> {
    CORPUS
        .iter()
        .filter(|e| e.expected == ExpectedClass::Superminimal)
        .map(|e| e.name)
        .collect()
}

impl CorpusEntry {
    /// Build the surface with its default grid.
    pub fn build(&self) -> Result<ImmersedSurface, SurfaceError> {
        self.build_with_grid(self.grid)
    }

    /// Build the surface with a custom sample grid.
    pub fn build_with_grid(&self, grid: [usize; 2]) -> Result<ImmersedSurface, SurfaceError> {
        ImmersedSurface::new(self.name, self.model, self.formulas, self.domain, grid)
    }
}
