//! Forward and input-gradient kernels on NCHW buffers.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub cin: usize,
    pub cout: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn out_size(&self, size: usize) -> usize {
        (size + 2 * self.pad - self.kernel) / self.stride + 1
    }

    pub fn fan_in(&self) -> usize {
        self.cin * self.kernel * self.kernel
    }

    pub fn weight_len(&self) -> usize {
        self.cout * self.fan_in()
    }
}

/// Valid output range `[lo, hi)` along one axis for kernel offset `k`:
/// output `o` reads input `o * stride + k - pad`.
#[inline]
fn out_range(k: usize, g: &ConvGeom, in_size: usize, out_size: usize) -> (usize, usize) {
    // smallest o with o*s + k >= pad
    let lo = if k >= g.pad { 0 } else { (g.pad - k).div_ceil(g.stride) };
    // largest o with o*s + k - pad <= in_size - 1
    let hi = if in_size + g.pad < k + 1 {
        0
    } else {
        ((in_size + g.pad - k - 1) / g.stride + 1).min(out_size)
    };
    (lo, hi.max(lo))
}

/// Unfold the batch into a `[cin * k * k, n * oh * ow]` patch matrix.
fn im2col(x: &[f64], d: Dims, g: &ConvGeom, oh: usize, ow: usize) -> Vec<f64> {
    let k = g.kernel;
    let np = d.n * oh * ow;
    let mut cols = vec![0.0; g.fan_in() * np];
    for ci in 0..g.cin {
        for ky in 0..k {
            let (y0, y1) = out_range(ky, g, d.h, oh);
            for kx in 0..k {
                let (x0, x1) = out_range(kx, g, d.w, ow);
                let row = &mut cols[((ci * k + ky) * k + kx) * np..][..np];
                for n in 0..d.n {
                    let i_base = (n * d.c + ci) * d.plane();
                    for oy in y0..y1 {
                        let iy = oy * g.stride + ky - g.pad;
                        let dst = &mut row[(n * oh + oy) * ow + x0..(n * oh + oy) * ow + x1];
                        let src = &x[i_base + iy * d.w + x0 * g.stride + kx - g.pad..i_base + (iy + 1) * d.w];
                        for (o, i) in dst.iter_mut().zip(src.iter().step_by(g.stride)) {
                            *o = *i;
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back to the input.
fn col2im(cols: &[f64], d: Dims, g: &ConvGeom, oh: usize, ow: usize) -> Vec<f64> {
    let k = g.kernel;
    let np = d.n * oh * ow;
    let mut dx = vec![0.0; d.len()];
    for ci in 0..g.cin {
        for ky in 0..k {
            let (y0, y1) = out_range(ky, g, d.h, oh);
            for kx in 0..k {
                let (x0, x1) = out_range(kx, g, d.w, ow);
                let row = &cols[((ci * k + ky) * k + kx) * np..][..np];
                for n in 0..d.n {
                    let i_base = (n * d.c + ci) * d.plane();
                    for oy in y0..y1 {
                        let iy = oy * g.stride + ky - g.pad;
                        let src = &row[(n * oh + oy) * ow + x0..(n * oh + oy) * ow + x1];
                        let dst = &mut dx[i_base + iy * d.w + x0 * g.stride + kx - g.pad..i_base + (iy + 1) * d.w];
                        for (o, i) in dst.iter_mut().step_by(g.stride).zip(src) {
                            *o += *i;
                        }
                    }
                }
            }
        }
    }
    dx
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn conv_forward(x: &[f64], d: Dims, weight: &[f64], g: &ConvGeom) -> (Vec<f64>, Dims) {
    let oh = g.out_size(d.h);
    let ow = g.out_size(d.w);
    let od = Dims { n: d.n, c: g.cout, h: oh, w: ow };
    let p = oh * ow;
    let np = d.n * p;
    let kk = g.fan_in();
    let cols = im2col(x, d, g, oh, ow);
    // [cout, n * p]
    let mut prod = vec![0.0; g.cout * np];
    for co in 0..g.cout {
        let out_row = &mut prod[co * np..(co + 1) * np];
        let w = &weight[co * kk..(co + 1) * kk];
        let mut j = 0;
        while j + 4 <= kk {
            let (c0, c1, c2, c3) = (
                &cols[j * np..][..np],
                &cols[(j + 1) * np..][..np],
                &cols[(j + 2) * np..][..np],
                &cols[(j + 3) * np..][..np],
            );
            for i in 0..np {
                out_row[i] += w[j] * c0[i] + w[j + 1] * c1[i] + w[j + 2] * c2[i] + w[j + 3] * c3[i];
            }
            j += 4;
        }
        for (jj, &wv) in w.iter().enumerate().skip(j) {
            axpy(out_row, wv, &cols[jj * np..(jj + 1) * np]);
        }
    }
    let mut out = vec![0.0; od.len()];
    for n in 0..d.n {
        for co in 0..g.cout {
            out[(n * g.cout + co) * p..][..p].copy_from_slice(&prod[co * np + n * p..][..p]);
        }
    }
    (out, od)
}

/// Gradient with respect to the convolution input.
pub fn conv_backward(dy: &[f64], od: Dims, weight: &[f64], g: &ConvGeom, id: Dims) -> Vec<f64> {
    let p = od.plane();
    let np = od.n * p;
    let kk = g.fan_in();
    let mut dprod = vec![0.0; g.cout * np];
    for n in 0..od.n {
        for co in 0..g.cout {
            dprod[co * np + n * p..][..p].copy_from_slice(&dy[(n * g.cout + co) * p..][..p]);
        }
    }
    let mut dcols = vec![0.0; kk * np];
    for j in 0..kk {
        let drow = &mut dcols[j * np..(j + 1) * np];
        let mut co = 0;
        while co + 4 <= g.cout {
            let w = [
                weight[co * kk + j],
                weight[(co + 1) * kk + j],
                weight[(co + 2) * kk + j],
                weight[(co + 3) * kk + j],
            ];
            let (d0, d1, d2, d3) = (
                &dprod[co * np..][..np],
                &dprod[(co + 1) * np..][..np],
                &dprod[(co + 2) * np..][..np],
                &dprod[(co + 3) * np..][..np],
            );
            for i in 0..np {
                drow[i] += w[0] * d0[i] + w[1] * d1[i] + w[2] * d2[i] + w[3] * d3[i];
            }
            co += 4;
        }
        for c in co..g.cout {
            axpy(drow, weight[c * kk + j], &dprod[c * np..(c + 1) * np]);
        }
    }
    col2im(&dcols, id, g, od.h, od.w)
}

/// Batch-statistics normalization without affine parameters.
/// Returns the normalized output and the per-channel `1 / sqrt(var + eps)`.
pub fn batchnorm_forward(x: &[f64], d: Dims, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let mut y = vec![0.0; x.len()];
    let mut inv_std = vec![0.0; d.c];
    let count = (d.n * d.plane()) as f64;
    let p = d.plane();
    for c in 0..d.c {
        let mut mean = 0.0;
        for n in 0..d.n {
            let base = (n * d.c + c) * p;
            mean += x[base..base + p].iter().sum::<f64>();
        }
        mean /= count;
        let mut var = 0.0;
        for n in 0..d.n {
            let base = (n * d.c + c) * p;
            var += x[base..base + p].iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        }
        var /= count;
        let is = 1.0 / (var + eps).sqrt();
        inv_std[c] = is;
        for n in 0..d.n {
            let base = (n * d.c + c) * p;
            for i in base..base + p {
                y[i] = (x[i] - mean) * is;
            }
        }
    }
    (y, inv_std)
}

/// `dx = inv_std * (dy - mean(dy) - y * mean(dy * y))`, moments over (N, H, W).
pub fn batchnorm_backward(dy: &[f64], y: &[f64], inv_std: &[f64], d: Dims) -> Vec<f64> {
    let mut dx = vec![0.0; dy.len()];
    let count = (d.n * d.plane()) as f64;
    let p = d.plane();
    for c in 0..d.c {
        let mut mean_dy = 0.0;
        let mut mean_dy_y = 0.0;
        for n in 0..d.n {
            let base = (n * d.c + c) * p;
            for i in base..base + p {
                mean_dy += dy[i];
                mean_dy_y += dy[i] * y[i];
            }
        }
        mean_dy /= count;
        mean_dy_y /= count;
        for n in 0..d.n {
            let base = (n * d.c + c) * p;
            for i in base..base + p {
                dx[i] = inv_std[c] * (dy[i] - mean_dy - y[i] * mean_dy_y);
            }
        }
    }
    dx
}

#[inline]
fn pool_window(i: usize, size: usize) -> (usize, usize) {
    (i.saturating_sub(1), (i + 2).min(size))
}

/// 3x3 average pooling, stride 1, padding 1; padded cells are excluded from
/// the divisor.
pub fn avgpool_forward(x: &[f64], d: Dims) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for plane in 0..d.n * d.c {
        let base = plane * d.plane();
        for oy in 0..d.h {
            let (y0, y1) = pool_window(oy, d.h);
            for ox in 0..d.w {
                let (x0, x1) = pool_window(ox, d.w);
                let mut s = 0.0;
                for iy in y0..y1 {
                    for ix in x0..x1 {
                        s += x[base + iy * d.w + ix];
                    }
                }
                out[base + oy * d.w + ox] = s / ((y1 - y0) * (x1 - x0)) as f64;
            }
        }
    }
    out
}

pub fn avgpool_backward(dy: &[f64], d: Dims) -> Vec<f64> {
    let mut dx = vec![0.0; dy.len()];
    for plane in 0..d.n * d.c {
        let base = plane * d.plane();
        for oy in 0..d.h {
            let (y0, y1) = pool_window(oy, d.h);
            for ox in 0..d.w {
                let (x0, x1) = pool_window(ox, d.w);
                let g = dy[base + oy * d.w + ox] / ((y1 - y0) * (x1 - x0)) as f64;
                for iy in y0..y1 {
                    for ix in x0..x1 {
                        dx[base + iy * d.w + ix] += g;
                    }
                }
            }
        }
    }
    dx
}

pub fn global_avgpool_forward(x: &[f64], d: Dims) -> Vec<f64> {
    let p = d.plane();
    (0..d.n * d.c)
        .map(|plane| x[plane * p..(plane + 1) * p].iter().sum::<f64>() / p as f64)
        .collect()
}

pub fn global_avgpool_backward(dy: &[f64], d: Dims) -> Vec<f64> {
    let p = d.plane();
    let mut dx = vec![0.0; d.len()];
    for (plane, g) in dy.iter().enumerate() {
        let v = g / p as f64;
        dx[plane * p..(plane + 1) * p].iter_mut().for_each(|x| *x = v);
    }
    dx
}

/// `out[n, k] = sum_c weight[k, c] * x[n, c]`
pub fn dense_forward(x: &[f64], n: usize, cin: usize, weight: &[f64], cout: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * cout];
    for s in 0..n {
        let xs = &x[s * cin..(s + 1) * cin];
        for k in 0..cout {
            let wk = &weight[k * cin..(k + 1) * cin];
            out[s * cout + k] = xs.iter().zip(wk).map(|(a, b)| a * b).sum();
        }
    }
    out
}

pub fn dense_backward(dy: &[f64], n: usize, cin: usize, weight: &[f64], cout: usize) -> Vec<f64> {
    let mut dx = vec![0.0; n * cin];
    for s in 0..n {
        for k in 0..cout {
            let g = dy[s * cout + k];
            let wk = &weight[k * cin..(k + 1) * cin];
            for (d, w) in dx[s * cin..(s + 1) * cin].iter_mut().zip(wk) {
                *d += g * w;
            }
        }
    }
    dx
}
