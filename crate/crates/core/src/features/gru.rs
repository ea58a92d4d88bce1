//! Dense row-major matrices and a gated recurrent cell with manual backprop.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn random<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self * v`
    pub fn mul_add(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o += self.row(r).iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `out += self^T * v`
    pub fn mul_t_add(&self, v: &[f64], out: &mut [f64]) {
        for (r, &g) in v.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * g;
            }
        }
    }

    /// `self += u v^T`
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        for (r, &a) in u.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (x, b) in self.row_mut(r).iter_mut().zip(v) {
                *x += a * b;
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Gru {
    pub wz: Mat,
    pub wr: Mat,
    pub wn: Mat,
    pub uz: Mat,
    pub ur: Mat,
    pub un: Mat,
    pub bz: Vec<f64>,
    pub br: Vec<f64>,
    pub bn: Vec<f64>,
}

/// Activations kept from a forward step for the backward pass.
pub(crate) struct GruStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub n: Vec<f64>,
    pub rh: Vec<f64>,
    pub h: Vec<f64>,
}

impl Gru {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let s = 1.0 / (hidden as f64).sqrt();
        Self {
            wz: Mat::random(hidden, input, s, rng),
            wr: Mat::random(hidden, input, s, rng),
            wn: Mat::random(hidden, input, s, rng),
            uz: Mat::random(hidden, hidden, s, rng),
            ur: Mat::random(hidden, hidden, s, rng),
            un: Mat::random(hidden, hidden, s, rng),
            bz: vec![0.0; hidden],
            br: vec![0.0; hidden],
            bn: vec![0.0; hidden],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let (h, i) = (self.wz.rows, self.wz.cols);
        Self {
            wz: Mat::zeros(h, i),
            wr: Mat::zeros(h, i),
            wn: Mat::zeros(h, i),
            uz: Mat::zeros(h, h),
            ur: Mat::zeros(h, h),
            un: Mat::zeros(h, h),
            bz: vec![0.0; h],
            br: vec![0.0; h],
            bn: vec![0.0; h],
        }
    }

    pub fn hidden(&self) -> usize {
        self.wz.rows
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.wz.data,
            &mut self.wr.data,
            &mut self.wn.data,
            &mut self.uz.data,
            &mut self.ur.data,
            &mut self.un.data,
            &mut self.bz,
            &mut self.br,
            &mut self.bn,
        ]
    }

    pub fn tensors(&self) -> [&Vec<f64>; 9] {
        [
            &self.wz.data,
            &self.wr.data,
            &self.wn.data,
            &self.uz.data,
            &self.ur.data,
            &self.un.data,
            &self.bz,
            &self.br,
            &self.bn,
        ]
    }

    /// `z = σ(Wz x + Uz h + bz)`, `r = σ(Wr x + Ur h + br)`,
    /// `n = tanh(Wn x + Un (r ⊙ h) + bn)`, `h' = (1 - z) ⊙ n + z ⊙ h`.
    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> GruStep {
        let d = self.hidden();
        let mut z = self.bz.clone();
        self.wz.mul_add(x, &mut z);
        self.uz.mul_add(h_prev, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut r = self.br.clone();
        self.wr.mul_add(x, &mut r);
        self.ur.mul_add(h_prev, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut n = self.bn.clone();
        self.wn.mul_add(x, &mut n);
        self.un.mul_add(&rh, &mut n);
        n.iter_mut().for_each(|v| *v = v.tanh());
        let h = (0..d).map(|i| (1.0 - z[i]) * n[i] + z[i] * h_prev[i]).collect();
        GruStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            z,
            r,
            n,
            rh,
            h,
        }
    }

    /// Accumulates parameter gradients into `grad` and returns `(dx, dh_prev)`.
    pub fn backward(&self, s: &GruStep, dh: &[f64], grad: &mut Gru) -> (Vec<f64>, Vec<f64>) {
        let d = self.hidden();
        let mut dx = vec![0.0; s.x.len()];
        let mut dh_prev: Vec<f64> = (0..d).map(|i| dh[i] * s.z[i]).collect();

        let da_n: Vec<f64> = (0..d).map(|i| dh[i] * (1.0 - s.z[i]) * (1.0 - s.n[i] * s.n[i])).collect();
        let da_z: Vec<f64> = (0..d)
            .map(|i| dh[i] * (s.h_prev[i] - s.n[i]) * s.z[i] * (1.0 - s.z[i]))
            .collect();

        grad.wn.add_outer(&da_n, &s.x);
        grad.un.add_outer(&da_n, &s.rh);
        grad.bn.iter_mut().zip(&da_n).for_each(|(g, v)| *g += v);
        self.wn.mul_t_add(&da_n, &mut dx);
        let mut d_rh = vec![0.0; d];
        self.un.mul_t_add(&da_n, &mut d_rh);
        let da_r: Vec<f64> = (0..d)
            .map(|i| d_rh[i] * s.h_prev[i] * s.r[i] * (1.0 - s.r[i]))
            .collect();
        for i in 0..d {
            dh_prev[i] += d_rh[i] * s.r[i];
        }

        grad.wz.add_outer(&da_z, &s.x);
        grad.uz.add_outer(&da_z, &s.h_prev);
        grad.bz.iter_mut().zip(&da_z).for_each(|(g, v)| *g += v);
        self.wz.mul_t_add(&da_z, &mut dx);
        self.uz.mul_t_add(&da_z, &mut dh_prev);

        grad.wr.add_outer(&da_r, &s.x);
        grad.ur.add_outer(&da_r, &s.h_prev);
        grad.br.iter_mut().zip(&da_r).for_each(|(g, v)| *g += v);
        self.wr.mul_t_add(&da_r, &mut dx);
        self.ur.mul_t_add(&da_r, &mut dh_prev);

        (dx, dh_prev)
    }
}
