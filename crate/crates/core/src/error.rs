use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file {path}: {detail}")]
    MalformedFile { path: PathBuf, detail: String },

    #[error("unsupported camera model `{0}` (only SIMPLE_PINHOLE and PINHOLE)")]
    UnsupportedCameraModel(String),

    #[error("duplicate camera id {0}")]
    DuplicateCameraId(u32),

    #[error("camera id {0} referenced by a view is not defined")]
    UnknownCameraId(u32),

    #[error("quaternion of image {image_id} has norm {norm}, beyond tolerance")]
    NonUnitQuaternion { image_id: u32, norm: f64 },

    #[error("cameras file not found in {0}")]
    MissingCamerasFile(PathBuf),

    #[error("images file not found in {0}")]
    MissingImagesFile(PathBuf),

    #[error("points file not found in {0}")]
    MissingPointsFile(PathBuf),

    #[error("image dimensions must be positive")]
    ZeroDimension,

    #[error("need at least two views and a non-empty training set (got {views} views, holdout every {every})")]
    TooFewViews { views: usize, every: usize },

    #[error("training needs at least 2 views with images, got {0}")]
    TooFewTrainViews(usize),

    #[error("need at least 4 points to initialize the scene, got {0}")]
    TooFewPoints(usize),

    #[error("covariance is singular (condition number {0:e})")]
    SingularCovariance(f64),

    #[error("non-finite gradient: {0}")]
    NonFiniteGradient(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image too small for SSIM: minimum side {0} < 11")]
    TooSmall(usize),

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("pruning removed every Gaussian")]
    EmptyCloud,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid PLY: {0}")]
    Ply(String),

    #[error("image error: {0}")]
    Image(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name, used in CLI error JSON and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedFile { .. } => "MalformedFile",
            Error::UnsupportedCameraModel(_) => "UnsupportedCameraModel",
            Error::DuplicateCameraId(_) => "DuplicateCameraId",
            Error::UnknownCameraId(_) => "UnknownCameraId",
            Error::NonUnitQuaternion { .. } => "NonUnitQuaternion",
            Error::MissingCamerasFile(_) => "MissingCamerasFile",
            Error::MissingImagesFile(_) => "MissingImagesFile",
            Error::MissingPointsFile(_) => "MissingPointsFile",
            Error::ZeroDimension => "ZeroDimension",
            Error::TooFewViews { .. } => "TooFewViews",
            Error::TooFewTrainViews(_) => "TooFewTrainViews",
            Error::TooFewPoints(_) => "TooFewPoints",
            Error::SingularCovariance(_) => "SingularCovariance",
            Error::NonFiniteGradient(_) => "NonFiniteGradient",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::TooSmall(_) => "TooSmall",
            Error::EmptyTestSet => "EmptyTestSet",
            Error::EmptyCloud => "EmptyCloud",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Ply(_) => "InvalidPly",
            Error::Image(_) => "ImageError",
            Error::Json(_) => "JsonError",
            Error::Io(_) => "IoError",
        }
    }

    /// True for failures caused by bad input rather than by a run going wrong.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NonFiniteGradient(_) | Error::EmptyCloud | Error::SingularCovariance(_)
        )
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        Error::Image(e.to_string())
    }
}
