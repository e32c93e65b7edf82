//! Dataset readers and result writers.

pub mod bow;
pub mod csv;
pub mod idx;
pub mod plot;

pub use bow::{load_bow, parse_bow, BowCorpus, BowSubset};
pub use csv::{emit_csv, parse_csv, read_csv};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IdxImages};
pub use plot::{emit_plots, write_png};
