//! Layer kernels on flat channel-major (`[channel][row][col]`) buffers.

/// Geometry shared by the conv kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvShape {
    pub cin: usize,
    pub cout: usize,
    pub side: usize,
    pub kernel: usize,
}

impl ConvShape {
    /// Output rows/cols that read input at offset `(dy, dx)` without leaving
    /// the padded frame.
    #[inline]
    fn valid(&self, ky: usize, kx: usize) -> (isize, isize, usize, usize, usize, usize) {
        let pad = (self.kernel / 2) as isize;
        let n = self.side as isize;
        let dy = ky as isize - pad;
        let dx = kx as isize - pad;
        let y0 = (-dy).max(0) as usize;
        let y1 = (n - dy).min(n).max(0) as usize;
        let x0 = (-dx).max(0) as usize;
        let x1 = (n - dx).min(n).max(0) as usize;
        (dy, dx, y0, y1, x0, x1)
    }
}

/// Same-padded stride-1 convolution: `out[o] = b[o] + Σ_i w[o,i] ⋆ in[i]`.
pub(crate) fn conv_forward(s: ConvShape, input: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let plane = s.side * s.side;
    let k2 = s.kernel * s.kernel;
    let mut out = vec![0.0; s.cout * plane];
    for o in 0..s.cout {
        let out_o = &mut out[o * plane..(o + 1) * plane];
        out_o.fill(bias[o]);
        for i in 0..s.cin {
            let in_i = &input[i * plane..(i + 1) * plane];
            let w_oi = &weight[(o * s.cin + i) * k2..(o * s.cin + i + 1) * k2];
            for ky in 0..s.kernel {
                for kx in 0..s.kernel {
                    let w = w_oi[ky * s.kernel + kx];
                    let (dy, dx, y0, y1, x0, x1) = s.valid(ky, kx);
                    if x0 >= x1 {
                        continue;
                    }
                    for y in y0..y1 {
                        let src = (y as isize + dy) as usize * s.side;
                        let orow = &mut out_o[y * s.side + x0..y * s.side + x1];
                        let irow = &in_i[(src as isize + x0 as isize + dx) as usize
                            ..(src as isize + x1 as isize + dx) as usize];
                        for (a, b) in orow.iter_mut().zip(irow) {
                            *a += w * b;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients, and returns the input gradient
/// when `want_input` is set.
pub(crate) fn conv_backward(
    s: ConvShape,
    input: &[f64],
    weight: &[f64],
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    want_input: bool,
) -> Option<Vec<f64>> {
    let plane = s.side * s.side;
    let k2 = s.kernel * s.kernel;
    let mut dinput = want_input.then(|| vec![0.0; s.cin * plane]);
    for o in 0..s.cout {
        let g_o = &dout[o * plane..(o + 1) * plane];
        dbias[o] += g_o.iter().sum::<f64>();
        for i in 0..s.cin {
            let in_i = &input[i * plane..(i + 1) * plane];
            let base = (o * s.cin + i) * k2;
            for ky in 0..s.kernel {
                for kx in 0..s.kernel {
                    let (dy, dx, y0, y1, x0, x1) = s.valid(ky, kx);
                    if x0 >= x1 {
                        continue;
                    }
                    let w = weight[base + ky * s.kernel + kx];
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let src = ((y as isize + dy) as usize * s.side) as isize;
                        let grow = &g_o[y * s.side + x0..y * s.side + x1];
                        let lo = (src + x0 as isize + dx) as usize;
                        let hi = (src + x1 as isize + dx) as usize;
                        let irow = &in_i[lo..hi];
                        acc += grow.iter().zip(irow).map(|(g, x)| g * x).sum::<f64>();
                        if let Some(di) = dinput.as_mut() {
                            let drow = &mut di[i * plane + lo..i * plane + hi];
                            for (d, g) in drow.iter_mut().zip(grow) {
                                *d += w * g;
                            }
                        }
                    }
                    dweight[base + ky * s.kernel + kx] += acc;
                }
            }
        }
    }
    dinput
}

pub(crate) fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v <= 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes gradient entries whose activation was clipped by ReLU.
pub(crate) fn relu_backward(activation: &[f64], grad: &mut [f64]) {
    for (g, &a) in grad.iter_mut().zip(activation) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// 2×2 stride-2 max-pool. Returns the pooled maps and, per output, the flat
/// input index that won. Ties go to the first cell in row-major order.
pub(crate) fn maxpool_forward(channels: usize, side: usize, input: &[f64]) -> (Vec<f64>, Vec<u32>) {
    let half = side / 2;
    let mut out = Vec::with_capacity(channels * half * half);
    let mut arg = Vec::with_capacity(channels * half * half);
    for c in 0..channels {
        let base = c * side * side;
        for y in 0..half {
            for x in 0..half {
                let cells = [
                    base + 2 * y * side + 2 * x,
                    base + 2 * y * side + 2 * x + 1,
                    base + (2 * y + 1) * side + 2 * x,
                    base + (2 * y + 1) * side + 2 * x + 1,
                ];
                let mut best = cells[0];
                for &idx in &cells[1..] {
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                out.push(input[best]);
                arg.push(best as u32);
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward(input_len: usize, argmax: &[u32], dout: &[f64]) -> Vec<f64> {
    let mut din = vec![0.0; input_len];
    for (&idx, &g) in argmax.iter().zip(dout) {
        din[idx as usize] += g;
    }
    din
}

/// `y = W x + b` with `W` stored `[out][in]`.
pub(crate) fn dense_forward(weight: &[f64], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    bias.iter()
        .enumerate()
        .map(|(o, b)| {
            b + weight[o * n_in..(o + 1) * n_in]
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
        })
        .collect()
}

pub(crate) fn dense_backward(
    weight: &[f64],
    x: &[f64],
    dy: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    want_input: bool,
) -> Option<Vec<f64>> {
    let n_in = x.len();
    let mut dx = want_input.then(|| vec![0.0; n_in]);
    for (o, &g) in dy.iter().enumerate() {
        dbias[o] += g;
        if g == 0.0 {
            continue;
        }
        let row = o * n_in..(o + 1) * n_in;
        for (dw, v) in dweight[row.clone()].iter_mut().zip(x) {
            *dw += g * v;
        }
        if let Some(dx) = dx.as_mut() {
            for (d, w) in dx.iter_mut().zip(&weight[row]) {
                *d += g * w;
            }
        }
    }
    dx
}
