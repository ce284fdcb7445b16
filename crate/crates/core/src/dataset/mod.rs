//! Raw series ingestion, sliding windows, chronological split, graph prior
//! and synthetic data.

mod adjacency;
mod io;
mod series;
mod split;
mod synth;
mod window;

pub use adjacency::{build_adjacency, Adjacency};
pub use io::{decode_stb, encode_stb, load_csv, load_dataset, load_stb, write_csv, write_stb};
pub use series::RawSeries;
pub use split::{chrono_split, DatasetSplit, NormStats};
pub use synth::{synthesize, synthesize_parts, SynthParts, SynthSpec};
pub use window::{dynamic_intensity, make_windows, WindowShape, WindowedSample};
