//! Temporal mean pooling of units into per-snippet feature vectors.

use crate::data::FeatureStream;
use crate::error::Result;
use crate::numeric::Vector;
use crate::pipeline::segment::VideoSegmentation;

/// A snippet's pooled (and possibly projected) feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SnippetFeature {
    pub video_id: String,
    pub snippet_index: usize,
    pub vector: Vector,
}

/// Mean-pools each snippet's units into one vector.
pub fn pool(stream: &FeatureStream, seg: &VideoSegmentation) -> Result<Vec<SnippetFeature>> {
    seg.check_partitions(stream.n_units())?;
    let mut out = Vec::with_capacity(seg.n_snippets());
    for (snippet_index, range) in seg.ranges.iter().enumerate() {
        let mut acc = Vector::zeros(stream.dim);
        for unit in &stream.units[range.start..range.end] {
            acc.axpy(1.0, unit)?;
        }
        let vector = acc.scale(1.0 / range.len() as f64);
        out.push(SnippetFeature {
            video_id: stream.video_id.clone(),
            snippet_index,
            vector,
        });
    }
    Ok(out)
}
