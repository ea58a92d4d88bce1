//! L2-regularized logistic regression by full-batch gradient descent on
//! standardized features.

use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            iterations: 2000,
            learning_rate: 0.5,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
}

impl Logistic {
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &LogisticParams) -> Self {
        let n = x.len() as f64;
        let width = x[0].len();
        let mean: Vec<f64> = (0..width).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale: Vec<f64> = (0..width)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| (0..width).map(|j| (r[j] - mean[j]) / scale[j]).collect())
            .collect();
        let mut weights = vec![0.0; width];
        let mut bias = 0.0;
        for _ in 0..params.iterations {
            let mut gw = vec![0.0; width];
            let mut gb = 0.0;
            for (row, &t) in z.iter().zip(y) {
                let p = sigmoid(bias + row.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>());
                let e = p - f64::from(u8::from(t));
                gw.iter_mut().zip(row).for_each(|(g, v)| *g += e * v);
                gb += e;
            }
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w -= params.learning_rate * (g / n + params.l2 * *w);
            }
            bias -= params.learning_rate * gb / n;
        }
        Self {
            mean,
            scale,
            weights,
            bias,
        }
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let s: f64 = x
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.scale[j] * self.weights[j])
            .sum();
        sigmoid(self.bias + s)
    }
}
