//! Dataset statistics: coverage and highlight ratio.

use crate::data::stream::{Dataset, SnippetLabel};
use crate::error::{Result, RraeError};
use crate::pipeline::segment::Segmentation;

/// Returns `(coverage, h_ratio)` under the given segmentation.
///
/// Coverage is the fraction of videos containing at least one highlight
/// snippet. H-ratio is the fraction of highlight snippets among all labeled
/// snippets; unlabeled snippets are excluded from both numerator and
/// denominator.
pub fn compute_dataset_stats(dataset: &Dataset, seg: &Segmentation) -> Result<(f64, f64)> {
    let labels = dataset.labels_for(seg)?;
    let mut videos_with_highlight = 0usize;
    let mut highlights = 0usize;
    let mut labeled = 0usize;
    for video_labels in &labels {
        let mut any = false;
        for label in video_labels {
            match label {
                SnippetLabel::Highlight => {
                    highlights += 1;
                    labeled += 1;
                    any = true;
                }
                SnippetLabel::NonHighlight => labeled += 1,
                SnippetLabel::Unlabeled => {}
            }
        }
        if any {
            videos_with_highlight += 1;
        }
    }
    if labeled == 0 {
        return Err(RraeError::Unlabeled(dataset.name.clone()));
    }
    Ok((
        videos_with_highlight as f64 / labels.len() as f64,
        highlights as f64 / labeled as f64,
    ))
}
