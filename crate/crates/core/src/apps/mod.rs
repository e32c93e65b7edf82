//! Applications built on the SBL solver: digit classification by sparse
//! representation, and source localization with a sampled PSF dictionary.

pub mod classify;
pub mod metrics;
pub mod psf;

pub use classify::{classify, Classification, LabeledDictionary};
pub use metrics::{group_iou, iou, localize, psnr, DetectionBox};
pub use psf::{
    delta_e, generate_target, render_feature, sample_dictionary, ImageGrid, PsfDictionary,
    PsfParams, PsfPrior,
};
