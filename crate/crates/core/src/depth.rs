/// A row-major grid of ranges in meters, capped at `max_range`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub max_range: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DepthError {
    #[error("depth image has {got} values, expected {width}x{height}")]
    SizeMismatch {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("max_range must be positive and finite, got {0}")]
    BadMaxRange(f64),
    #[error("depth value {value} at index {index} is outside [0, {max_range}]")]
    OutOfRange {
        index: usize,
        value: f64,
        max_range: f64,
    },
}

impl DepthImage {
    /// Builds an image after checking the size and value-range invariants.
    pub fn new(
        width: usize,
        height: usize,
        max_range: f64,
        values: Vec<f64>,
    ) -> Result<Self, DepthError> {
        if !(max_range.is_finite() && max_range > 0.0) {
            return Err(DepthError::BadMaxRange(max_range));
        }
        if values.len() != width * height {
            return Err(DepthError::SizeMismatch {
                width,
                height,
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0 && **v <= max_range))
        {
            return Err(DepthError::OutOfRange {
                index,
                value,
                max_range,
            });
        }
        Ok(Self {
            width,
            height,
            max_range,
            values,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        max_range: f64,
        value: f64,
    ) -> Result<Self, DepthError> {
        Self::new(width, height, max_range, vec![value; width * height])
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}
