//! Order-independent summaries of real-valued samples.

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Population moments and range of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

impl Moments {
    /// Sorts the sample first so the result does not depend on input order.
    /// Returns `None` for an empty sample.
    pub fn of(mut values: Vec<f64>) -> Option<Moments> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = neumaier_sum(values.iter().copied()) / n;
        let variance = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean))) / n;
        Some(Moments {
            count: values.len(),
            mean,
            variance,
            min: values[0],
            max: values[values.len() - 1],
        })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}
