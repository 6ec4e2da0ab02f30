use serde::{Deserialize, Serialize};

/// Mean with a normal-approximation 95% half-width `1.96 s / sqrt(n)`.
/// The half-width is `None` for fewer than two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci95: Option<f64>,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = mean(xs);
        let std_dev = std_dev(xs);
        let ci95 = (n >= 2).then(|| 1.96 * std_dev / (n as f64).sqrt());
        Self { n, mean, std_dev, ci95 }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95.unwrap_or(f64::INFINITY)
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95.unwrap_or(f64::INFINITY)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single sample.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn paired_differences(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
