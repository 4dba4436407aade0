use thiserror::Error;

/// Every geometric failure has a stable name, printed by the CLI.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("CollinearPoints: the three points are collinear")]
    CollinearPoints,
    #[error("CoincidentPoints: two input points coincide")]
    CoincidentPoints,
    #[error("CenterCoincidence: point coincides with the inversion center")]
    CenterCoincidence,
    #[error("DegeneratePoints: quaternion inverse does not exist")]
    DegeneratePoints,
    #[error("ProportionalConics: the two conics are proportional")]
    ProportionalConics,
    #[error("CircularConic: quadratic part has a double eigenvalue")]
    CircularConic,
    #[error("DegenerateConic: quadratic part vanishes")]
    DegenerateConic,
    #[error("NotACircle: conic is not a real circle")]
    NotACircle,
    #[error("DegenerateMetric: f_u x f_v vanishes")]
    DegenerateMetric,
    #[error("NotConjugate: parametrization is not conjugate")]
    NotConjugate,
    #[error("NotCurvatureLine: parametrization is not by curvature lines")]
    NotCurvatureLine,
    #[error("PlaneTooFar: plane height {height:e} exceeds bound {bound:e}")]
    PlaneTooFar { height: f64, bound: f64 },
    #[error("UmbilicEncountered: umbilic point on the path or patch")]
    UmbilicEncountered,
    #[error("DomainExit: left the parameter domain")]
    DomainExit,
    #[error("NoConvergence: {0}")]
    NoConvergence(&'static str),
    #[error("FootPointFailure: closest point did not converge")]
    FootPointFailure,
    #[error("AllOnSurface: the circle lies on the surface")]
    AllOnSurface,
    #[error("Tangential: line is tangent to the surface")]
    Tangential,
    #[error("TangentialContact: plane is tangent to the surface")]
    TangentialContact,
    #[error("OpenCurveTruncated: section curve reached the domain boundary")]
    OpenCurveTruncated,
    #[error("CurvatureSandwichViolated: 1/R is not strictly between K1 and K2")]
    CurvatureSandwichViolated,
    #[error("FourthPointMissing: circle meets the surface in fewer than four points")]
    FourthPointMissing,
    #[error("FourPointsNotFound: circle does not meet the surface in exactly four transversal points (found {0})")]
    FourPointsNotFound(usize),
    #[error("UmbilicRegion: base point is (nearly) umbilic")]
    UmbilicRegion,
    #[error("DiagonalDegenerate: diagonals do not determine a point")]
    DiagonalDegenerate,
    #[error("CollinearBase: A, B, C are collinear")]
    CollinearBase,
    #[error("ParabolicPoint: (f_uu x f_u).f_v or (f_vv x f_u).f_v vanishes")]
    ParabolicPoint,
    #[error("ParallelPlanes: the two quad planes are parallel")]
    ParallelPlanes,
    #[error("PlaneDegenerate: three points do not span a plane")]
    PlaneDegenerate,
    #[error("TooFewSamples: fewer than three usable samples")]
    TooFewSamples,
    #[error("AllAtFloor: every sample is at the round-off floor")]
    AllAtFloor,
    #[error("UnknownExperiment: {0}")]
    UnknownExperiment(String),
    #[error("InvalidExperiment: {0}")]
    InvalidExperiment(String),
    #[error("InvalidSurfaceSpec: {0}")]
    InvalidSurfaceSpec(String),
    #[error("InvariantViolated: {0}")]
    InvariantViolated(String),
}

impl GeomError {
    /// The bare variant name, e.g. `UmbilicRegion`.
    pub fn name(&self) -> &'static str {
        use GeomError::*;
        match self {
            CollinearPoints => "CollinearPoints",
            CoincidentPoints => "CoincidentPoints",
            CenterCoincidence => "CenterCoincidence",
            DegeneratePoints => "DegeneratePoints",
            ProportionalConics => "ProportionalConics",
            CircularConic => "CircularConic",
            DegenerateConic => "DegenerateConic",
            NotACircle => "NotACircle",
            DegenerateMetric => "DegenerateMetric",
            NotConjugate => "NotConjugate",
            NotCurvatureLine => "NotCurvatureLine",
            PlaneTooFar { .. } => "PlaneTooFar",
            UmbilicEncountered => "UmbilicEncountered",
            DomainExit => "DomainExit",
            NoConvergence(_) => "NoConvergence",
            FootPointFailure => "FootPointFailure",
            AllOnSurface => "AllOnSurface",
            Tangential => "Tangential",
            TangentialContact => "TangentialContact",
            OpenCurveTruncated => "OpenCurveTruncated",
            CurvatureSandwichViolated => "CurvatureSandwichViolated",
            FourthPointMissing => "FourthPointMissing",
            FourPointsNotFound(_) => "FourPointsNotFound",
            UmbilicRegion => "UmbilicRegion",
            DiagonalDegenerate => "DiagonalDegenerate",
            CollinearBase => "CollinearBase",
            ParabolicPoint => "ParabolicPoint",
            ParallelPlanes => "ParallelPlanes",
            PlaneDegenerate => "PlaneDegenerate",
            TooFewSamples => "TooFewSamples",
            AllAtFloor => "AllAtFloor",
            UnknownExperiment(_) => "UnknownExperiment",
            InvalidExperiment(_) => "InvalidExperiment",
            InvalidSurfaceSpec(_) => "InvalidSurfaceSpec",
            InvariantViolated(_) => "InvariantViolated",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
