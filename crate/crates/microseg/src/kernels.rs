//! Forward and backward compute kernels for every layer kind.
//!
//! All kernels are pure functions of `(input, params)`, generic over the
//! scalar width, and use implicit zero padding (no materialized border).
//! Weight layouts follow the channel-last convention of the tensors:
//!
//! * standard conv: `k*k*cin*cout`, index `((ky*k + kx)*cin + ci)*cout + co`
//! * depthwise 3x3: `3*3*c`, index `(ky*3 + kx)*c + c`
//! * pointwise 1x1: `cin*cout`, index `ci*cout + co`
//! * transposed 2x2: `2*2*cout*cin`, index `((ky*2 + kx)*cout + co)*cin + ci`

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape, Tensor};

/// Epsilon inside the batch-norm denominator.
pub const BN_EPS: f64 = 1e-3;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(msg()))
    }
}

/// Square-kernel convolution, stride 1, same padding. `k` is the kernel side.
pub fn conv2d_forward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    bias: &[S],
    k: usize,
    cout: usize,
) -> Result<Tensor<S>> {
    let Shape { h, w, c: cin } = x.shape;
    check(weights.len() == k * k * cin * cout, || {
        format!("conv weights {} != {k}x{k}x{cin}x{cout}", weights.len())
    })?;
    check(bias.len() == cout, || {
        format!("conv bias {} != {cout}", bias.len())
    })?;
    let pad = (k - 1) / 2;
    let mut out = Tensor::zeros(x.n, Shape::new(h, w, cout));
    let mut acc = vec![S::zero(); cout];
    for n in 0..x.n {
        for yo in 0..h {
            for xo in 0..w {
                acc.copy_from_slice(bias);
                for ky in 0..k {
                    let yi = yo as isize + ky as isize - pad as isize;
                    if yi < 0 || yi >= h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let xi = xo as isize + kx as isize - pad as isize;
                        if xi < 0 || xi >= w as isize {
                            continue;
                        }
                        let xoff = x.pixel_offset(n, yi as usize, xi as usize);
                        for ci in 0..cin {
                            let xv = x.data[xoff + ci];
                            if xv == S::zero() {
                                continue;
                            }
                            let wrow = &weights[((ky * k + kx) * cin + ci) * cout..][..cout];
                            for co in 0..cout {
                                acc[co] += xv * wrow[co];
                            }
                        }
                    }
                }
                let ooff = out.pixel_offset(n, yo, xo);
                out.data[ooff..ooff + cout].copy_from_slice(&acc);
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d_forward`] w.r.t. input, weights and bias.
pub fn conv2d_backward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    k: usize,
    cout: usize,
    dy: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<S>, Vec<S>)> {
    let Shape { h, w, c: cin } = x.shape;
    check(dy.shape == Shape::new(h, w, cout) && dy.n == x.n, || {
        format!("conv grad shape {} vs input {}", dy.shape, x.shape)
    })?;
    let pad = (k - 1) / 2;
    let mut dx = Tensor::zeros(x.n, x.shape);
    let mut dw = vec![S::zero(); weights.len()];
    let mut db = vec![S::zero(); cout];
    for n in 0..x.n {
        for yo in 0..h {
            for xo in 0..w {
                let doff = dy.pixel_offset(n, yo, xo);
                let dyrow = &dy.data[doff..doff + cout];
                for co in 0..cout {
                    db[co] += dyrow[co];
                }
                for ky in 0..k {
                    let yi = yo as isize + ky as isize - pad as isize;
                    if yi < 0 || yi >= h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let xi = xo as isize + kx as isize - pad as isize;
                        if xi < 0 || xi >= w as isize {
                            continue;
                        }
                        let xoff = x.pixel_offset(n, yi as usize, xi as usize);
                        for ci in 0..cin {
                            let widx = ((ky * k + kx) * cin + ci) * cout;
                            let wrow = &weights[widx..widx + cout];
                            let xv = x.data[xoff + ci];
                            let mut g = S::zero();
                            for co in 0..cout {
                                g += wrow[co] * dyrow[co];
                                dw[widx + co] += xv * dyrow[co];
                            }
                            dx.data[xoff + ci] += g;
                        }
                    }
                }
            }
        }
    }
    Ok((dx, dw, db))
}

/// Depthwise 3x3 convolution: channel c of the output sees only channel c
/// of the input.
pub fn depthwise_forward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    bias: &[S],
) -> Result<Tensor<S>> {
    let Shape { h, w, c } = x.shape;
    check(weights.len() == 9 * c, || {
        format!("depthwise weights {} != 3x3x{c}", weights.len())
    })?;
    check(bias.len() == c, || {
        format!("depthwise bias {} != {c}", bias.len())
    })?;
    let mut out = Tensor::zeros(x.n, x.shape);
    for n in 0..x.n {
        for yo in 0..h {
            for xo in 0..w {
                let ooff = out.pixel_offset(n, yo, xo);
                out.data[ooff..ooff + c].copy_from_slice(bias);
                for ky in 0..3usize {
                    let yi = yo as isize + ky as isize - 1;
                    if yi < 0 || yi >= h as isize {
                        continue;
                    }
                    for kx in 0..3usize {
                        let xi = xo as isize + kx as isize - 1;
                        if xi < 0 || xi >= w as isize {
                            continue;
                        }
                        let xoff = x.pixel_offset(n, yi as usize, xi as usize);
                        let wrow = &weights[(ky * 3 + kx) * c..][..c];
                        for ci in 0..c {
                            out.data[ooff + ci] += x.data[xoff + ci] * wrow[ci];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn depthwise_backward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    dy: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<S>, Vec<S>)> {
    let Shape { h, w, c } = x.shape;
    check(dy.shape == x.shape && dy.n == x.n, || {
        format!("depthwise grad {} vs input {}", dy.shape, x.shape)
    })?;
    let mut dx = Tensor::zeros(x.n, x.shape);
    let mut dw = vec![S::zero(); 9 * c];
    let mut db = vec![S::zero(); c];
    for n in 0..x.n {
        for yo in 0..h {
            for xo in 0..w {
                let doff = dy.pixel_offset(n, yo, xo);
                for ci in 0..c {
                    db[ci] += dy.data[doff + ci];
                }
                for ky in 0..3usize {
                    let yi = yo as isize + ky as isize - 1;
                    if yi < 0 || yi >= h as isize {
                        continue;
                    }
                    for kx in 0..3usize {
                        let xi = xo as isize + kx as isize - 1;
                        if xi < 0 || xi >= w as isize {
                            continue;
                        }
                        let xoff = x.pixel_offset(n, yi as usize, xi as usize);
                        let widx = (ky * 3 + kx) * c;
                        for ci in 0..c {
                            dx.data[xoff + ci] += weights[widx + ci] * dy.data[doff + ci];
                            dw[widx + ci] += x.data[xoff + ci] * dy.data[doff + ci];
                        }
                    }
                }
            }
        }
    }
    Ok((dx, dw, db))
}

/// Pointwise (1x1) convolution.
pub fn pointwise_forward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    bias: &[S],
    cout: usize,
) -> Result<Tensor<S>> {
    conv2d_forward(x, weights, bias, 1, cout)
}

pub fn pointwise_backward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    cout: usize,
    dy: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<S>, Vec<S>)> {
    conv2d_backward(x, weights, 1, cout, dy)
}

/// Transposed 2x2 convolution with stride 2: doubles H and W; every input
/// pixel scatters a 2x2 stamp (stride 2 means stamps never overlap).
pub fn transposed2x2_forward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    bias: &[S],
    cout: usize,
) -> Result<Tensor<S>> {
    let Shape { h, w, c: cin } = x.shape;
    check(weights.len() == 4 * cout * cin, || {
        format!("transposed weights {} != 2x2x{cout}x{cin}", weights.len())
    })?;
    check(bias.len() == cout, || {
        format!("transposed bias {} != {cout}", bias.len())
    })?;
    let mut out = Tensor::zeros(x.n, Shape::new(2 * h, 2 * w, cout));
    for n in 0..x.n {
        for y in 0..h {
            for xcol in 0..w {
                let xoff = x.pixel_offset(n, y, xcol);
                for ky in 0..2usize {
                    for kx in 0..2usize {
                        let ooff = out.pixel_offset(n, 2 * y + ky, 2 * xcol + kx);
                        for co in 0..cout {
                            let mut acc = bias[co];
                            let widx = ((ky * 2 + kx) * cout + co) * cin;
                            for ci in 0..cin {
                                acc += x.data[xoff + ci] * weights[widx + ci];
                            }
                            out.data[ooff + co] = acc;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn transposed2x2_backward<S: Scalar>(
    x: &Tensor<S>,
    weights: &[S],
    cout: usize,
    dy: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<S>, Vec<S>)> {
    let Shape { h, w, c: cin } = x.shape;
    check(
        dy.shape == Shape::new(2 * h, 2 * w, cout) && dy.n == x.n,
        || format!("transposed grad {} vs input {}", dy.shape, x.shape),
    )?;
    let mut dx = Tensor::zeros(x.n, x.shape);
    let mut dw = vec![S::zero(); weights.len()];
    let mut db = vec![S::zero(); cout];
    for n in 0..x.n {
        for y in 0..h {
            for xcol in 0..w {
                let xoff = x.pixel_offset(n, y, xcol);
                for ky in 0..2usize {
                    for kx in 0..2usize {
                        let doff = dy.pixel_offset(n, 2 * y + ky, 2 * xcol + kx);
                        for co in 0..cout {
                            let g = dy.data[doff + co];
                            db[co] += g;
                            let widx = ((ky * 2 + kx) * cout + co) * cin;
                            for ci in 0..cin {
                                dx.data[xoff + ci] += weights[widx + ci] * g;
                                dw[widx + ci] += x.data[xoff + ci] * g;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((dx, dw, db))
}

/// 2x2 max pooling with stride 2. Returns the pooled map and the flat input
/// index of each winner for the backward pass.
pub fn maxpool_forward<S: Scalar>(x: &Tensor<S>) -> Result<(Tensor<S>, Vec<u32>)> {
    let Shape { h, w, c } = x.shape;
    check(h % 2 == 0 && w % 2 == 0, || {
        format!("maxpool needs even dims, got {}", x.shape)
    })?;
    let (ho, wo) = (h / 2, w / 2);
    let mut out = Tensor::zeros(x.n, Shape::new(ho, wo, c));
    let mut arg = vec![0u32; out.data.len()];
    for n in 0..x.n {
        for yo in 0..ho {
            for xo in 0..wo {
                let ooff = out.pixel_offset(n, yo, xo);
                for ci in 0..c {
                    let mut best = S::neg_infinity();
                    let mut best_idx = 0usize;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let idx = x.pixel_offset(n, 2 * yo + dy, 2 * xo + dx) + ci;
                            if x.data[idx] > best {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out.data[ooff + ci] = best;
                    arg[ooff + ci] = best_idx as u32;
                }
            }
        }
    }
    Ok((out, arg))
}

/// Route pooled gradients back to the argmax positions.
pub fn maxpool_backward<S: Scalar>(
    dy: &Tensor<S>,
    argmax: &[u32],
    input_n: usize,
    input_shape: Shape,
) -> Result<Tensor<S>> {
    check(argmax.len() == dy.data.len(), || {
        "pool argmax length mismatch".to_string()
    })?;
    let mut dx = Tensor::zeros(input_n, input_shape);
    for (g, &idx) in dy.data.iter().zip(argmax) {
        dx.data[idx as usize] += *g;
    }
    Ok(dx)
}

/// Channel concatenation `[a; b]`.
pub fn concat_forward<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    check(
        a.n == b.n && a.shape.h == b.shape.h && a.shape.w == b.shape.w,
        || format!("concat spatial mismatch: {} vs {}", a.shape, b.shape),
    )?;
    check(a.shape.c > 0 && b.shape.c > 0, || {
        "concat with empty channel tensor".to_string()
    })?;
    let (ca, cb) = (a.shape.c, b.shape.c);
    let mut out = Tensor::zeros(a.n, Shape::new(a.shape.h, a.shape.w, ca + cb));
    let pixels = a.n * a.shape.h * a.shape.w;
    for p in 0..pixels {
        out.data[p * (ca + cb)..p * (ca + cb) + ca].copy_from_slice(&a.data[p * ca..(p + 1) * ca]);
        out.data[p * (ca + cb) + ca..(p + 1) * (ca + cb)]
            .copy_from_slice(&b.data[p * cb..(p + 1) * cb]);
    }
    Ok(out)
}

/// Split a concat gradient back into both branches.
pub fn concat_backward<S: Scalar>(dy: &Tensor<S>, ca: usize, cb: usize) -> (Tensor<S>, Tensor<S>) {
    debug_assert_eq!(dy.shape.c, ca + cb);
    let mut da = Tensor::zeros(dy.n, Shape::new(dy.shape.h, dy.shape.w, ca));
    let mut db = Tensor::zeros(dy.n, Shape::new(dy.shape.h, dy.shape.w, cb));
    let pixels = dy.n * dy.shape.h * dy.shape.w;
    for p in 0..pixels {
        da.data[p * ca..(p + 1) * ca].copy_from_slice(&dy.data[p * (ca + cb)..p * (ca + cb) + ca]);
        db.data[p * cb..(p + 1) * cb]
            .copy_from_slice(&dy.data[p * (ca + cb) + ca..(p + 1) * (ca + cb)]);
    }
    (da, db)
}

pub fn relu_forward<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| if v > S::zero() { v } else { S::zero() })
}

pub fn relu_backward<S: Scalar>(x: &Tensor<S>, dy: &Tensor<S>) -> Tensor<S> {
    let mut dx = dy.clone();
    for (g, &v) in dx.data.iter_mut().zip(&x.data) {
        if v <= S::zero() {
            *g = S::zero();
        }
    }
    dx
}

pub fn sigmoid_forward<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| S::one() / (S::one() + (-v).exp()))
}

/// Backward through sigmoid given its *output* `y`.
pub fn sigmoid_backward<S: Scalar>(y: &Tensor<S>, dy: &Tensor<S>) -> Tensor<S> {
    let mut dx = dy.clone();
    for (g, &v) in dx.data.iter_mut().zip(&y.data) {
        *g *= v * (S::one() - v);
    }
    dx
}

/// Batch normalization with fixed statistics:
/// `y = gamma * (x - mean) / sqrt(var + eps) + beta`, per channel.
pub fn batchnorm_forward<S: Scalar>(
    x: &Tensor<S>,
    gamma: &[S],
    beta: &[S],
    mean: &[S],
    var: &[S],
) -> Result<Tensor<S>> {
    let c = x.shape.c;
    check(
        gamma.len() == c && beta.len() == c && mean.len() == c && var.len() == c,
        || format!("batchnorm params for {c} channels"),
    )?;
    let eps = S::from_f64(BN_EPS);
    let inv_std: Vec<S> = var.iter().map(|&v| S::one() / (v + eps).sqrt()).collect();
    let mut out = x.clone();
    let pixels = x.n * x.shape.h * x.shape.w;
    for p in 0..pixels {
        let off = p * c;
        for ci in 0..c {
            out.data[off + ci] = gamma[ci] * (x.data[off + ci] - mean[ci]) * inv_std[ci] + beta[ci];
        }
    }
    Ok(out)
}

/// Gradients of [`batchnorm_forward`] w.r.t. input, gamma and beta
/// (statistics are constants).
pub fn batchnorm_backward<S: Scalar>(
    x: &Tensor<S>,
    gamma: &[S],
    mean: &[S],
    var: &[S],
    dy: &Tensor<S>,
) -> (Tensor<S>, Vec<S>, Vec<S>) {
    let c = x.shape.c;
    let eps = S::from_f64(BN_EPS);
    let inv_std: Vec<S> = var.iter().map(|&v| S::one() / (v + eps).sqrt()).collect();
    let mut dx = Tensor::zeros(x.n, x.shape);
    let mut dgamma = vec![S::zero(); c];
    let mut dbeta = vec![S::zero(); c];
    let pixels = x.n * x.shape.h * x.shape.w;
    for p in 0..pixels {
        let off = p * c;
        for ci in 0..c {
            let xhat = (x.data[off + ci] - mean[ci]) * inv_std[ci];
            let g = dy.data[off + ci];
            dx.data[off + ci] = g * gamma[ci] * inv_std[ci];
            dgamma[ci] += g * xhat;
            dbeta[ci] += g;
        }
    }
    (dx, dgamma, dbeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_tensor(n: usize, shape: Shape, rng: &mut Rng) -> Tensor<f64> {
        let mut t = Tensor::zeros(n, shape);
        for v in t.data.iter_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        t
    }

    fn random_vec(len: usize, rng: &mut Rng) -> Vec<f64> {
        (0..len).map(|_| rng.uniform(-1.0, 1.0)).collect()
    }

    /// Naive 7-deep loop nest, the independent convolution oracle.
    fn conv_oracle(
        x: &Tensor<f64>,
        w: &[f64],
        b: &[f64],
        k: usize,
        cout: usize,
    ) -> Tensor<f64> {
        let Shape { h, w: wid, c: cin } = x.shape;
        let pad = (k - 1) / 2;
        let mut out = Tensor::zeros(x.n, Shape::new(h, wid, cout));
        for n in 0..x.n {
            for yo in 0..h {
                for xo in 0..wid {
                    for co in 0..cout {
                        let mut acc = b[co];
                        for ky in 0..k {
                            for kx in 0..k {
                                let yi = yo as isize + ky as isize - pad as isize;
                                let xi = xo as isize + kx as isize - pad as isize;
                                if yi < 0 || xi < 0 || yi >= h as isize || xi >= wid as isize {
                                    continue;
                                }
                                for ci in 0..cin {
                                    acc += x.at(n, yi as usize, xi as usize, ci)
                                        * w[((ky * k + kx) * cin + ci) * cout + co];
                                }
                            }
                        }
                        *out.at_mut(n, yo, xo, co) = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn conv_1x1_scalar_case() {
        let x = Tensor::single(Shape::new(1, 1, 1), vec![3.0f32]).unwrap();
        let y = conv2d_forward(&x, &[2.0], &[0.5], 1, 1).unwrap();
        assert_eq!(y.data, vec![6.5]);
    }

    #[test]
    fn conv_identity_kernel_preserves_image() {
        let mut rng = Rng::new(1);
        let x = random_tensor(1, Shape::new(5, 4, 1), &mut rng);
        // 3x3 kernel with center 1
        let mut w = vec![0.0f64; 9];
        w[4] = 1.0;
        let y = conv2d_forward(&x, &w, &[0.25], 3, 1).unwrap();
        for (o, i) in y.data.iter().zip(&x.data) {
            assert!((o - i - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_matches_loop_nest_oracle() {
        let mut rng = Rng::new(7);
        let x = random_tensor(2, Shape::new(5, 5, 2), &mut rng);
        let w = random_vec(9 * 2 * 3, &mut rng);
        let b = random_vec(3, &mut rng);
        let fast = conv2d_forward(&x, &w, &b, 3, 3).unwrap();
        let slow = conv_oracle(&x, &w, &b, 3, 3);
        for (a, o) in fast.data.iter().zip(&slow.data) {
            assert!((a - o).abs() < 1e-12, "{a} vs {o}");
        }
    }

    #[test]
    fn depthwise_center_one_is_identity() {
        let mut rng = Rng::new(3);
        let x = random_tensor(1, Shape::new(4, 4, 3), &mut rng);
        let mut w = vec![0.0f64; 9 * 3];
        for c in 0..3 {
            w[4 * 3 + c] = 1.0;
        }
        let y = depthwise_forward(&x, &w, &[0.0; 3]).unwrap();
        for (a, b) in y.data.iter().zip(&x.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn depthwise_plus_identity_pointwise_equals_depthwise() {
        let mut rng = Rng::new(4);
        let x = random_tensor(1, Shape::new(6, 6, 2), &mut rng);
        let w = random_vec(9 * 2, &mut rng);
        let b = random_vec(2, &mut rng);
        let dw = depthwise_forward(&x, &w, &b).unwrap();
        // pointwise = identity matrix, zero bias
        let pw = pointwise_forward(&dw, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 2).unwrap();
        for (a, b) in pw.data.iter().zip(&dw.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_pair_matches_rank_one_standard_conv() {
        // standard kernel w[ky,kx,ci,co] = d[ky,kx,ci] * p[ci,co] factors exactly
        let mut rng = Rng::new(5);
        let x = random_tensor(1, Shape::new(5, 5, 2), &mut rng);
        let d = random_vec(9 * 2, &mut rng);
        let p = random_vec(2 * 3, &mut rng);
        let sep = {
            let mid = depthwise_forward(&x, &d, &[0.0; 2]).unwrap();
            pointwise_forward(&mid, &p, &[0.0; 3], 3).unwrap()
        };
        let mut w = vec![0.0f64; 9 * 2 * 3];
        for t in 0..9 {
            for ci in 0..2 {
                for co in 0..3 {
                    w[(t * 2 + ci) * 3 + co] = d[t * 2 + ci] * p[ci * 3 + co];
                }
            }
        }
        let full = conv2d_forward(&x, &w, &[0.0; 3], 3, 3).unwrap();
        for (a, b) in sep.data.iter().zip(&full.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn maxpool_window_cases() {
        let x = Tensor::single(Shape::new(2, 2, 1), vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let (y, arg) = maxpool_forward(&x).unwrap();
        assert_eq!(y.data, vec![4.0]);
        assert_eq!(arg, vec![3]); // flat index of (1,1)
        let c = Tensor::single(Shape::new(4, 4, 2), vec![0.5f32; 32]).unwrap();
        let (y, _) = maxpool_forward(&c).unwrap();
        assert_eq!(y.shape, Shape::new(2, 2, 2));
        assert!(y.data.iter().all(|&v| v == 0.5));
        let odd = Tensor::<f32>::zeros(1, Shape::new(3, 4, 1));
        assert!(maxpool_forward(&odd).is_err());
    }

    #[test]
    fn maxpool_matches_window_scan() {
        let mut rng = Rng::new(9);
        let x = random_tensor(1, Shape::new(8, 8, 2), &mut rng);
        let (y, _) = maxpool_forward(&x).unwrap();
        for yo in 0..4 {
            for xo in 0..4 {
                for c in 0..2 {
                    let mut best = f64::NEG_INFINITY;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            best = best.max(x.at(0, 2 * yo + dy, 2 * xo + dx, c));
                        }
                    }
                    assert_eq!(y.at(0, yo, xo, c), best);
                }
            }
        }
    }

    #[test]
    fn transposed_ones_kernel_broadcasts_value() {
        let x = Tensor::single(Shape::new(1, 1, 1), vec![2.5f32]).unwrap();
        let y = transposed2x2_forward(&x, &[1.0; 4], &[0.0], 1).unwrap();
        assert_eq!(y.shape, Shape::new(2, 2, 1));
        assert!(y.data.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn transposed_zero_input_gives_bias_plane() {
        let x = Tensor::<f32>::zeros(1, Shape::new(3, 3, 2));
        let y = transposed2x2_forward(&x, &vec![0.7; 4 * 2 * 2], &[1.5, -2.0], 2).unwrap();
        for p in 0..(6 * 6) {
            assert_eq!(y.data[2 * p], 1.5);
            assert_eq!(y.data[2 * p + 1], -2.0);
        }
    }

    #[test]
    fn transposed_matches_scatter_oracle() {
        let mut rng = Rng::new(11);
        let x = random_tensor(1, Shape::new(3, 4, 2), &mut rng);
        let w = random_vec(4 * 3 * 2, &mut rng);
        let b = random_vec(3, &mut rng);
        let fast = transposed2x2_forward(&x, &w, &b, 3).unwrap();
        // independent scatter loop
        let mut slow = Tensor::<f64>::zeros(1, Shape::new(6, 8, 3));
        for v in slow.data.chunks_mut(3) {
            v.copy_from_slice(&b);
        }
        for y in 0..3 {
            for xc in 0..4 {
                for ky in 0..2 {
                    for kx in 0..2 {
                        for co in 0..3 {
                            for ci in 0..2 {
                                *slow.at_mut(0, 2 * y + ky, 2 * xc + kx, co) +=
                                    x.at(0, y, xc, ci) * w[((ky * 2 + kx) * 3 + co) * 2 + ci];
                            }
                        }
                    }
                }
            }
        }
        for (a, o) in fast.data.iter().zip(&slow.data) {
            assert!((a - o).abs() < 1e-12);
        }
    }

    #[test]
    fn concat_stacks_channels() {
        let a = Tensor::single(Shape::new(1, 2, 2), vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::single(Shape::new(1, 2, 1), vec![9.0, 8.0]).unwrap();
        let y = concat_forward(&a, &b).unwrap();
        assert_eq!(y.shape.c, 3);
        assert_eq!(y.data, vec![1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
        let (da, db) = concat_backward(&y, 2, 1);
        assert_eq!(da.data, a.data);
        assert_eq!(db.data, b.data);
        let bad = Tensor::<f32>::zeros(1, Shape::new(2, 2, 1));
        assert!(concat_forward(&a, &bad).is_err());
    }

    #[test]
    fn relu_and_sigmoid_point_values() {
        let x = Tensor::single(Shape::new(1, 3, 1), vec![-1.0f64, 0.0, 2.0]).unwrap();
        let r = relu_forward(&x);
        assert_eq!(r.data, vec![0.0, 0.0, 2.0]);
        let s = sigmoid_forward(&x);
        assert!((s.data[1] - 0.5).abs() < 1e-15);
        // saturation stays strictly inside (0, 1)
        let big = Tensor::single(Shape::new(1, 2, 1), vec![40.0f64, -40.0]).unwrap();
        let s = sigmoid_forward(&big);
        assert!(s.data[0] < 1.0 && s.data[0] > 0.999999);
        assert!(s.data[1] > 0.0 && s.data[1] < 1e-15);
    }

    #[test]
    fn batchnorm_identity_stats_passes_through() {
        let mut rng = Rng::new(13);
        let x = random_tensor(1, Shape::new(3, 3, 2), &mut rng);
        let y = batchnorm_forward(&x, &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let scale = 1.0 / (1.0f64 + BN_EPS).sqrt();
        for (a, b) in y.data.iter().zip(&x.data) {
            assert!((a - b * scale).abs() < 1e-12);
        }
    }
}
