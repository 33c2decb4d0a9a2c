//! Pairwise disagreement functions.
//!
//! Interval data uses squared difference; categorical data uses a 0/1
//! mismatch indicator. A new scale needs a [`Scale`] variant and one arm here.

use crate::error::{Error, Result};
use crate::model::{AnnotationValue, Scale};

/// Disagreement between two annotations on `scale`.
pub fn disagreement(a: AnnotationValue, b: AnnotationValue, scale: Scale) -> Result<f64> {
    match (scale, a, b) {
        (Scale::Categorical, AnnotationValue::Categorical(x), AnnotationValue::Categorical(y)) => {
            Ok(if x == y { 0.0 } else { 1.0 })
        }
        (Scale::Interval, AnnotationValue::Interval(x), AnnotationValue::Interval(y)) => {
            let d = x - y;
            Ok(d * d)
        }
        _ => Err(Error::ScaleMismatch {
            label: String::new(),
            detail: format!("cannot compare {a:?} and {b:?} on a {scale} scale"),
        }),
    }
}

/// Same as [`disagreement`] for values already known to share a scale.
#[inline]
pub(crate) fn disagreement_unchecked(a: AnnotationValue, b: AnnotationValue) -> f64 {
    match (a, b) {
        (AnnotationValue::Categorical(x), AnnotationValue::Categorical(y)) => {
            if x == y {
                0.0
            } else {
                1.0
            }
        }
        (AnnotationValue::Interval(x), AnnotationValue::Interval(y)) => (x - y) * (x - y),
        _ => unreachable!("mixed scales within one label"),
    }
}
