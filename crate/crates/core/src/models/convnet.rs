//! Shared 3x3 same-padding convolution kernels for the toy networks.
//!
//! Activations are row-major channel-last (`(y * W + x) * C + c`), matching
//! the tensor layout. Weights are `[c_out][c_in][ky][kx]` flattened.

#[inline]
pub(crate) fn weight_idx(c_in: usize, f: usize, ci: usize, ky: usize, kx: usize) -> usize {
    ((f * c_in + ci) * 3 + ky) * 3 + kx
}

/// `out[y][x][f] = bias[f] + sum_{ci,ky,kx} w[f][ci][ky][kx] * input[y+ky-1][x+kx-1][ci]`
/// with zero padding outside the grid.
pub(crate) fn conv3x3(
    input: &[f64],
    height: usize,
    width: usize,
    c_in: usize,
    c_out: usize,
    weights: &[f64],
    bias: &[f64],
    out: &mut [f64],
) {
    debug_assert_eq!(input.len(), height * width * c_in);
    debug_assert_eq!(out.len(), height * width * c_out);
    for y in 0..height {
        for x in 0..width {
            let base = (y * width + x) * c_out;
            for f in 0..c_out {
                out[base + f] = bias[f];
            }
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= height as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = x as isize + kx as isize - 1;
                    if sx < 0 || sx >= width as isize {
                        continue;
                    }
                    let src = (sy as usize * width + sx as usize) * c_in;
                    for ci in 0..c_in {
                        let v = input[src + ci];
                        for f in 0..c_out {
                            out[base + f] += weights[weight_idx(c_in, f, ci, ky, kx)] * v;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulate weight and bias gradients given the upstream gradient at the
/// conv output (`d_out`, channel-last) and the layer input.
pub(crate) fn conv3x3_weight_grad(
    input: &[f64],
    height: usize,
    width: usize,
    c_in: usize,
    c_out: usize,
    d_out: &[f64],
    d_weights: &mut [f64],
    d_bias: &mut [f64],
) {
    for y in 0..height {
        for x in 0..width {
            let base = (y * width + x) * c_out;
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= height as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = x as isize + kx as isize - 1;
                    if sx < 0 || sx >= width as isize {
                        continue;
                    }
                    let src = (sy as usize * width + sx as usize) * c_in;
                    for ci in 0..c_in {
                        let v = input[src + ci];
                        for f in 0..c_out {
                            d_weights[weight_idx(c_in, f, ci, ky, kx)] += d_out[base + f] * v;
                        }
                    }
                }
            }
            for f in 0..c_out {
                d_bias[f] += d_out[base + f];
            }
        }
    }
}

/// Gradient w.r.t. the conv input (transposed convolution), accumulated
/// into `d_input`.
pub(crate) fn conv3x3_input_grad(
    d_out: &[f64],
    height: usize,
    width: usize,
    c_in: usize,
    c_out: usize,
    weights: &[f64],
    d_input: &mut [f64],
) {
    for y in 0..height {
        for x in 0..width {
            let base = (y * width + x) * c_out;
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= height as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = x as isize + kx as isize - 1;
                    if sx < 0 || sx >= width as isize {
                        continue;
                    }
                    let dst = (sy as usize * width + sx as usize) * c_in;
                    for ci in 0..c_in {
                        let mut acc = 0.0;
                        for f in 0..c_out {
                            acc += weights[weight_idx(c_in, f, ci, ky, kx)] * d_out[base + f];
                        }
                        d_input[dst + ci] += acc;
                    }
                }
            }
        }
    }
}
