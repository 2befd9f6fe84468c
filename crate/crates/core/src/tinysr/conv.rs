//! Zero-padded, stride-1 2-D convolution on channel-major planes.

use std::cell::RefCell;

/// `channels × height × width` activations, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Planes {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Planes {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }
}

/// Unfold `x` into a `(channels·k·k) × (height·width)` row-major matrix whose
/// row `(i, ky, kx)` holds input channel `i` shifted by `(ky − pad, kx − pad)`,
/// zero outside the image. Every element of `cols` is overwritten.
fn im2col_into(x: &Planes, k: usize, cols: &mut Vec<f64>) {
    let pad = k / 2;
    let (h, w) = (x.height, x.width);
    let n = h * w;
    cols.resize(x.channels * k * k * n, 0.0);
    for i in 0..x.channels {
        let src = x.plane(i);
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((i * k + ky) * k + kx) * n..][..n];
                let (c0, c1) = shifted_range(kx, pad, w);
                for (r, line) in row.chunks_exact_mut(w).enumerate() {
                    let sr = r + ky;
                    if sr < pad || sr - pad >= h {
                        line.fill(0.0);
                        continue;
                    }
                    let s = (sr - pad) * w;
                    // Borders are at most `pad` wide; a memset call per row
                    // costs more than writing them directly.
                    let (head, rest) = line.split_at_mut(c0);
                    let (mid, tail) = rest.split_at_mut(c1 - c0);
                    for v in head.iter_mut().chain(tail) {
                        *v = 0.0;
                    }
                    mid.copy_from_slice(&src[s + c0 + kx - pad..s + c1 + kx - pad]);
                }
            }
        }
    }
}

#[cfg(test)]
fn im2col(x: &Planes, k: usize) -> Vec<f64> {
    let mut cols = Vec::new();
    im2col_into(x, k, &mut cols);
    cols
}

thread_local! {
    // Reused unfold buffers; a 32-channel 3×3 layer on a 48×48 patch needs
    // about 5 MB per buffer, and fresh zeroed allocations dominated runtime.
    static SCRATCH: RefCell<(Vec<f64>, Vec<f64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// Accumulate an unfolded gradient back onto the input planes (the adjoint
/// of [`im2col`]).
fn col2im(cols: &[f64], channels: usize, h: usize, w: usize, k: usize) -> Planes {
    let pad = k / 2;
    let n = h * w;
    let mut x = Planes::zeros(channels, h, w);
    for i in 0..channels {
        let dst = x.plane_mut(i);
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((i * k + ky) * k + kx) * n..][..n];
                let (c0, c1) = shifted_range(kx, pad, w);
                for r in 0..h {
                    let sr = r + ky;
                    if sr < pad || sr - pad >= h {
                        continue;
                    }
                    let s = (sr - pad) * w;
                    for (d, &g) in dst[s + c0 + kx - pad..s + c1 + kx - pad]
                        .iter_mut()
                        .zip(&row[r * w + c0..r * w + c1])
                    {
                        *d += g;
                    }
                }
            }
        }
    }
    x
}

/// Output columns `c0..c1` whose source column `c + kx − pad` is in range.
#[inline]
fn shifted_range(kx: usize, pad: usize, w: usize) -> (usize, usize) {
    let c0 = pad.saturating_sub(kx);
    let c1 = (w + pad).saturating_sub(kx).min(w);
    (c0, c1.max(c0))
}

/// `c = a · b (+ c if accumulate)` for row-major `c`, where `a` is `m × k`
/// with strides `(rsa, csa)` and `b` is `k × n` with `(rsb, csb)`.
/// Runs single-threaded so results never depend on the thread pool.
#[allow(clippy::too_many_arguments)]
fn matmul(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    accumulate: bool,
) {
    assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert_eq!(c.len(), m * n);
    // SAFETY: the extent of every operand is checked above and `c` is a
    // unique borrow, so it cannot alias `a` or `b`.
    unsafe {
        gemm::gemm(
            m,
            n,
            k,
            c.as_mut_ptr(),
            1,
            n as isize,
            accumulate,
            a.as_ptr(),
            csa as isize,
            rsa as isize,
            b.as_ptr(),
            csb as isize,
            rsb as isize,
            1.0,
            1.0,
            false,
            false,
            false,
            gemm::Parallelism::None,
        );
    }
}

/// `y[o] = b[o] + Σ_i w[o, i] ⋆ x[i]` with "same" zero padding.
/// Weights are laid out `[out][in][ky][kx]`, which is exactly the row-major
/// `out × (in·k·k)` matrix that multiplies the unfolded input.
pub fn conv_forward(x: &Planes, weight: &[f64], bias: &[f64], out_ch: usize, k: usize) -> Planes {
    let (h, w) = (x.height, x.width);
    let n = h * w;
    let kk = x.channels * k * k;
    let mut y = Planes::zeros(out_ch, h, w);
    for (o, &b) in bias.iter().enumerate() {
        y.plane_mut(o).fill(b);
    }
    if k == 1 {
        matmul(
            out_ch,
            kk,
            n,
            weight,
            (kk, 1),
            &x.data,
            (n, 1),
            &mut y.data,
            true,
        );
    } else {
        SCRATCH.with_borrow_mut(|(cols, _)| {
            im2col_into(x, k, cols);
            matmul(
                out_ch,
                kk,
                n,
                weight,
                (kk, 1),
                cols,
                (n, 1),
                &mut y.data,
                true,
            );
        });
    }
    y
}

pub struct ConvGrads {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Option<Planes>,
}

/// Reverse pass of [`conv_forward`] given the layer input `x` and the
/// gradient `dy` with respect to its (pre-activation) output.
pub fn conv_backward(
    x: &Planes,
    dy: &Planes,
    weight: &[f64],
    k: usize,
    need_input: bool,
) -> ConvGrads {
    let (h, w) = (x.height, x.width);
    let n = h * w;
    let out_ch = dy.channels;
    let kk = x.channels * k * k;
    let mut gw = vec![0.0; out_ch * kk];
    let bias = (0..out_ch).map(|o| dy.plane(o).iter().sum()).collect();
    if k == 1 {
        // dW = dY · Xᵀ, dX = Wᵀ · dY
        matmul(
            out_ch,
            n,
            kk,
            &dy.data,
            (n, 1),
            &x.data,
            (1, n),
            &mut gw,
            false,
        );
        let input = need_input.then(|| {
            let mut gx = Planes::zeros(x.channels, h, w);
            matmul(
                kk,
                out_ch,
                n,
                weight,
                (1, kk),
                &dy.data,
                (n, 1),
                &mut gx.data,
                false,
            );
            gx
        });
        return ConvGrads {
            weight: gw,
            bias,
            input,
        };
    }
    let input = SCRATCH.with_borrow_mut(|(cols, gcols)| {
        // dW = dY · colsᵀ
        im2col_into(x, k, cols);
        matmul(
            out_ch,
            n,
            kk,
            &dy.data,
            (n, 1),
            cols,
            (1, n),
            &mut gw,
            false,
        );
        // dcols = Wᵀ · dY, folded back onto the input.
        need_input.then(|| {
            gcols.resize(kk * n, 0.0);
            matmul(
                kk,
                out_ch,
                n,
                weight,
                (1, kk),
                &dy.data,
                (n, 1),
                gcols,
                false,
            );
            col2im(gcols, x.channels, h, w, k)
        })
    });

    ConvGrads {
        weight: gw,
        bias,
        input,
    }
}
