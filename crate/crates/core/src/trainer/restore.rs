use crate::dsp::{denormalize, normalize, NormalizedSegment};
use crate::error::Result;
use crate::models::Generator;
use crate::tensor::Tensor;
use crate::SEGMENT_LEN;

/// Restores one peak-normalized segment of exactly [`SEGMENT_LEN`] samples.
fn restore_segment(segment: &[f32], g: &Generator) -> Result<Vec<f32>> {
    let n = normalize(segment);
    if n.silent {
        return Ok(segment.to_vec());
    }
    let y = g.forward(&Tensor::from_signal(&n.samples)?)?;
    Ok(denormalize(&NormalizedSegment {
        samples: y.into_data(),
        ..n
    }))
}

/// Runs the generator over consecutive segments of `x`; the last one is
/// zero-padded and the output cropped back to `x.len()`.
pub fn restore(x: &[f32], g: &Generator) -> Result<Vec<f32>> {
    let mut out = Vec::with_capacity(x.len().div_ceil(SEGMENT_LEN) * SEGMENT_LEN);
    for chunk in x.chunks(SEGMENT_LEN) {
        if chunk.len() == SEGMENT_LEN {
            out.extend(restore_segment(chunk, g)?);
        } else {
            let mut padded = chunk.to_vec();
            padded.resize(SEGMENT_LEN, 0.0);
            out.extend(restore_segment(&padded, g)?);
        }
    }
    out.truncate(x.len());
    Ok(out)
}
