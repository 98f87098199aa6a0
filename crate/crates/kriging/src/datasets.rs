//! Bundled worked examples with frozen reference values.
//!
//! Each example packages a design, a kernel, optionally outputs, and the
//! reference numbers the regression suite and the CLI check against.
//! Spectra and projectors are stored as printed — rounded to two decimals —
//! so comparisons against them use a ±0.01 tolerance; exact rational values
//! (fitted means, residuals, ratios) carry full precision.

use crate::kernels::{Design, KernelSpec};

/// Tolerance for values stored at two-decimal precision.
pub const PRINTED_VALUE_TOLERANCE: f64 = 0.01;

/// A point prediction to verify: location, mean, and optionally variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub x: Vec<f64>,
    pub mean: f64,
    pub variance: Option<f64>,
}

/// Reference values attached to a worked example. Absent fields simply mean
/// the example does not exercise that diagnostic.
#[derive(Debug, Clone, Default)]
pub struct Goldens {
    /// Trace of the covariance matrix (exact).
    pub trace: Option<f64>,
    /// Eigenvalues, non-increasing, two-decimal precision.
    pub eigenvalues: Option<Vec<f64>>,
    /// Image projector `VVᵀ`, two-decimal precision.
    pub image_projector: Option<Vec<Vec<f64>>>,
    /// Redundancy groups as (1-based indices, degree).
    pub groups: Option<Vec<(Vec<usize>, usize)>>,
    /// In-sample pseudoinverse means at the design points (exact).
    pub fitted_means: Option<Vec<f64>>,
    /// Null-space residual of the outputs (exact).
    pub residual: Option<Vec<f64>>,
    /// `‖residual‖²/‖y‖²` (exact).
    pub discr_sq_ratio: Option<f64>,
    /// Out-of-sample or at-site predictions (exact).
    pub predictions: Option<Vec<Prediction>>,
}

/// A self-contained worked example.
#[derive(Debug, Clone)]
pub struct WorkedExample {
    pub id: &'static str,
    /// What the example demonstrates.
    pub note: &'static str,
    pub design: Design,
    pub kernel: KernelSpec,
    pub outputs: Option<Vec<f64>>,
    /// When set, predictions go through site summaries (grouping the raw
    /// observations first) rather than through a point-level model.
    pub site_level: bool,
    pub goldens: Goldens,
}

/// Identifiers of all bundled examples, in presentation order.
pub fn ids() -> Vec<&'static str> {
    vec![
        "repeated",
        "additive1",
        "additive2",
        "periodic",
        "linear",
        "averaging",
        "discrepancy",
        "additive-discr",
        "distwise",
    ]
}

/// Looks up one example by identifier.
pub fn by_id(id: &str) -> Option<WorkedExample> {
    all().into_iter().find(|e| e.id == id)
}

/// All bundled examples.
pub fn all() -> Vec<WorkedExample> {
    vec![
        repeated(),
        additive1(),
        additive2(),
        periodic(),
        linear(),
        averaging(),
        discrepancy_example(),
        additive_discr(),
        distwise(),
    ]
}

fn se2(theta: f64) -> KernelSpec {
    KernelSpec::squared_exponential(1.0, vec![theta, theta]).unwrap()
}

fn se1(theta: f64) -> KernelSpec {
    KernelSpec::squared_exponential(1.0, vec![theta]).unwrap()
}

fn additive2d(theta: f64) -> KernelSpec {
    KernelSpec::additive(vec![1.0, 1.0], vec![theta, theta]).unwrap()
}

fn repeated() -> WorkedExample {
    WorkedExample {
        id: "repeated",
        note: "Two-dimensional design with one location duplicated three times and \
               another twice; the spectrum has exactly three zeros and the image \
               projector averages within each duplicate block.",
        design: Design::new(vec![
            vec![0.2, 0.3],
            vec![0.2, 0.3],
            vec![0.5, 0.7],
            vec![0.5, 0.7],
            vec![0.8, 0.4],
            vec![0.2, 0.3],
        ])
        .unwrap(),
        kernel: se2(0.25),
        outputs: None,
        site_level: false,
        goldens: Goldens {
            trace: Some(6.0),
            eigenvalues: Some(vec![3.12, 1.99, 0.90, 0.0, 0.0, 0.0]),
            image_projector: Some(vec![
                vec![0.33, 0.33, 0.00, 0.00, 0.00, 0.33],
                vec![0.33, 0.33, 0.00, 0.00, 0.00, 0.33],
                vec![0.00, 0.00, 0.50, 0.50, 0.00, 0.00],
                vec![0.00, 0.00, 0.50, 0.50, 0.00, 0.00],
                vec![0.00, 0.00, 0.00, 0.00, 1.00, 0.00],
                vec![0.33, 0.33, 0.00, 0.00, 0.00, 0.33],
            ]),
            groups: Some(vec![(vec![1, 2, 6], 2), (vec![3, 4], 1)]),
            ..Goldens::default()
        },
    }
}

fn additive1() -> WorkedExample {
    WorkedExample {
        id: "additive1",
        note: "Ten distinct points containing two axis-aligned rectangles, which an \
               additive kernel cannot distinguish from their mirrored corners: two \
               independent null directions, supported on four points each.",
        design: Design::new(vec![
            vec![0.10, 0.10],
            vec![0.30, 0.10],
            vec![0.10, 0.40],
            vec![0.30, 0.40],
            vec![0.40, 0.50],
            vec![0.80, 0.50],
            vec![0.40, 0.90],
            vec![0.80, 0.90],
            vec![0.10, 0.60],
            vec![0.80, 0.20],
        ])
        .unwrap(),
        kernel: additive2d(0.2),
        outputs: None,
        site_level: false,
        goldens: Goldens {
            trace: Some(20.0),
            eigenvalues: Some(vec![
                9.52, 3.58, 2.60, 2.31, 1.46, 0.39, 0.09, 0.06, 0.0, 0.0,
            ]),
            image_projector: Some(vec![
                vec![0.75, 0.25, 0.25, -0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.25, 0.75, -0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.25, -0.25, 0.75, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![-0.25, 0.25, 0.25, 0.75, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.75, 0.25, 0.25, -0.25, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.75, -0.25, 0.25, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.25, -0.25, 0.75, 0.25, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, -0.25, 0.25, 0.25, 0.75, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            ]),
            groups: Some(vec![(vec![1, 2, 3, 4], 1), (vec![5, 6, 7, 8], 1)]),
            ..Goldens::default()
        },
    }
}

fn additive2() -> WorkedExample {
    WorkedExample {
        id: "additive2",
        note: "Six points completing no rectangle, yet their coordinate pattern \
               supports a single additive null direction touching every point: one \
               zero eigenvalue whose projector is fully dense.",
        design: Design::new(vec![
            vec![0.10, 0.15],
            vec![0.30, 0.15],
            vec![0.10, 0.40],
            vec![0.80, 0.40],
            vec![0.30, 0.90],
            vec![0.80, 0.90],
        ])
        .unwrap(),
        kernel: additive2d(0.2),
        outputs: None,
        site_level: false,
        goldens: Goldens {
            trace: Some(12.0),
            eigenvalues: Some(vec![5.75, 2.90, 2.07, 0.80, 0.49, 0.0]),
            image_projector: Some(vec![
                vec![0.83, 0.17, 0.17, -0.17, -0.17, 0.17],
                vec![0.17, 0.83, -0.17, 0.17, 0.17, -0.17],
                vec![0.17, -0.17, 0.83, 0.17, 0.17, -0.17],
                vec![-0.17, 0.17, 0.17, 0.83, -0.17, 0.17],
                vec![-0.17, 0.17, 0.17, -0.17, 0.83, 0.17],
                vec![0.17, -0.17, -0.17, 0.17, 0.17, 0.83],
            ]),
            groups: Some(vec![(vec![1, 2, 3, 4, 5, 6], 1)]),
            ..Goldens::default()
        },
    }
}

fn periodic() -> WorkedExample {
    WorkedExample {
        id: "periodic",
        note: "Two pairs of points sitting a whole number of periods apart under a \
               periodic kernel are indistinguishable without being coincident: two \
               zero eigenvalues, each averaging one pair.",
        design: Design::new(vec![
            vec![0.30, 0.20],
            vec![0.80, 0.20],
            vec![0.60, 0.40],
            vec![0.60, 0.90],
            vec![0.10, 0.70],
            vec![0.90, 0.70],
        ])
        .unwrap(),
        kernel: KernelSpec::periodic(1.0, vec![0.2, 0.2], 4.0 * std::f64::consts::PI).unwrap(),
        outputs: None,
        site_level: false,
        goldens: Goldens {
            trace: Some(6.0),
            eigenvalues: Some(vec![2.00, 2.00, 1.01, 0.99, 0.0, 0.0]),
            image_projector: Some(vec![
                vec![0.50, 0.50, 0.00, 0.00, 0.00, 0.00],
                vec![0.50, 0.50, 0.00, 0.00, 0.00, 0.00],
                vec![0.00, 0.00, 0.50, 0.50, 0.00, 0.00],
                vec![0.00, 0.00, 0.50, 0.50, 0.00, 0.00],
                vec![0.00, 0.00, 0.00, 0.00, 1.00, 0.00],
                vec![0.00, 0.00, 0.00, 0.00, 0.00, 1.00],
            ]),
            groups: Some(vec![(vec![1, 2], 1), (vec![3, 4], 1)]),
            ..Goldens::default()
        },
    }
}

fn linear() -> WorkedExample {
    WorkedExample {
        id: "linear",
        note: "Three one-dimensional points under the linear kernel 1 + x·x′: the \
               function space is two-dimensional, so one eigenvalue vanishes and \
               the null direction spans all three points.",
        design: Design::from_1d(&[0.2, 0.6, 0.8]).unwrap(),
        kernel: KernelSpec::dot_product(1).unwrap(),
        outputs: None,
        site_level: false,
        goldens: Goldens {
            trace: Some(4.04),
            eigenvalues: Some(vec![3.90, 0.14, 0.0]),
            image_projector: Some(vec![
                vec![0.93, 0.21, -0.14],
                vec![0.21, 0.36, 0.43],
                vec![-0.14, 0.43, 0.71],
            ]),
            groups: Some(vec![(vec![1, 2, 3], 1)]),
            ..Goldens::default()
        },
    }
}

fn averaging() -> WorkedExample {
    WorkedExample {
        id: "averaging",
        note: "Repeated one-dimensional sites with scattered outputs: the \
               pseudoinverse mean averages the observations at each site and \
               interpolates those averages.",
        design: Design::from_1d(&[1.0, 1.5, 1.5, 2.0, 2.0, 2.0, 2.0, 2.5, 2.5, 3.0]).unwrap(),
        kernel: se1(0.3),
        outputs: Some(vec![-2.0, -1.0, 0.0, 1.5, 4.0, 7.0, 7.5, 6.0, 5.0, 3.0]),
        site_level: false,
        goldens: Goldens {
            groups: Some(vec![
                (vec![2, 3], 1),
                (vec![4, 5, 6, 7], 3),
                (vec![8, 9], 1),
            ]),
            fitted_means: Some(vec![
                -2.0, -0.5, -0.5, 5.0, 5.0, 5.0, 5.0, 5.5, 5.5, 3.0,
            ]),
            predictions: Some(vec![
                Prediction { x: vec![1.5], mean: -0.5, variance: Some(0.0) },
                Prediction { x: vec![2.0], mean: 5.0, variance: Some(0.0) },
                Prediction { x: vec![2.5], mean: 5.5, variance: Some(0.0) },
            ]),
            ..Goldens::default()
        },
    }
}

fn discrepancy_example() -> WorkedExample {
    WorkedExample {
        id: "discrepancy",
        note: "A duplicated site with conflicting outputs 3 and 9: the residual \
               splits the disagreement symmetrically and the discrepancy ratios \
               quantify the unrepresentable share of the data.",
        design: Design::from_1d(&[1.0, 1.5, 2.0, 2.0, 2.5, 3.0]).unwrap(),
        kernel: se1(0.3),
        outputs: Some(vec![-2.0, 0.0, 3.0, 9.0, 6.0, 3.0]),
        site_level: false,
        goldens: Goldens {
            groups: Some(vec![(vec![3, 4], 1)]),
            fitted_means: Some(vec![-2.0, 0.0, 6.0, 6.0, 6.0, 3.0]),
            residual: Some(vec![0.0, 0.0, -3.0, 3.0, 0.0, 0.0]),
            discr_sq_ratio: Some(18.0 / 139.0),
            ..Goldens::default()
        },
    }
}

fn additive_discr() -> WorkedExample {
    WorkedExample {
        id: "additive-discr",
        note: "A complete rectangle plus three interior points under an additive \
               kernel, with additivity broken at one corner: the residual is the \
               alternating-sign rectangle pattern and vanishes elsewhere.",
        design: Design::new(vec![
            vec![1.0, 1.0],
            vec![2.0, 1.0],
            vec![1.0, 2.0],
            vec![2.0, 2.0],
            vec![1.5, 1.5],
            vec![1.25, 1.75],
            vec![1.75, 1.25],
        ])
        .unwrap(),
        kernel: additive2d(0.5),
        outputs: Some(vec![1.0, 4.0, 2.0, 1.0, 1.0, -0.5, 2.5]),
        site_level: false,
        goldens: Goldens {
            groups: Some(vec![(vec![1, 2, 3, 4], 1)]),
            fitted_means: Some(vec![2.0, 3.0, 1.0, 2.0, 1.0, -0.5, 2.5]),
            residual: Some(vec![-1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 0.0]),
            discr_sq_ratio: Some(4.0 / 29.5),
            ..Goldens::default()
        },
    }
}

fn distwise() -> WorkedExample {
    WorkedExample {
        id: "distwise",
        note: "The averaging data reduced to five site summaries: predictions \
               interpolate each site's mean, and the predictive variance \
               interpolates each site's observed spread.",
        design: Design::from_1d(&[1.0, 1.5, 1.5, 2.0, 2.0, 2.0, 2.0, 2.5, 2.5, 3.0]).unwrap(),
        kernel: se1(0.3),
        outputs: Some(vec![-2.0, -1.0, 0.0, 1.5, 4.0, 7.0, 7.5, 6.0, 5.0, 3.0]),
        site_level: true,
        goldens: Goldens {
            predictions: Some(vec![
                Prediction { x: vec![1.0], mean: -2.0, variance: Some(0.0) },
                Prediction { x: vec![1.5], mean: -0.5, variance: Some(0.25) },
                Prediction { x: vec![2.0], mean: 5.0, variance: Some(5.875) },
                Prediction { x: vec![2.5], mean: 5.5, variance: Some(0.25) },
                Prediction { x: vec![3.0], mean: 3.0, variance: Some(0.0) },
            ]),
            ..Goldens::default()
        },
    }
}
