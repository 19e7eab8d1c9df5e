use ndarray::{s, Array2, ArrayView2, Axis};

use super::{NetworkParams, Order};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// How Gram matrices of parameter Jacobians are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramMethod {
    /// Per layer, `sum_{c,c'} (Abar_c Abar_c'^T) o (Z_c Z_c'^T)`, which never forms a row of length `P`.
    #[default]
    Factored,
    /// Materializes Jacobian column blocks and multiplies them.
    Explicit,
}

/// Batched forward pass over a point set, kept for reverse accumulation.
///
/// Rows are grouped by component: rows `c*n .. (c+1)*n` hold component `c`
/// (value, then gradient axes, then Laplacian) for all `n` points.
pub struct Tape<'a> {
    params: &'a NetworkParams,
    order: Order,
    n: usize,
    d: usize,
    nc: usize,
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    dact: Vec<[Array2<f64>; 3]>,
    output: Vec<f64>,
}

/// Pre-activation adjoints per layer for one output seed.
pub struct Adjoints {
    abar: Vec<Array2<f64>>,
}

impl<'a> Tape<'a> {
    pub fn forward(params: &'a NetworkParams, points: &[Vec<f64>], order: Order) -> Result<Self> {
        if order == Order::Laplacian && !params.activation.is_smooth() {
            return Err(Error::UnsupportedActivation(params.activation));
        }
        let d = params.input_dim();
        let n = points.len();
        if n == 0 {
            return Err(Error::Shape("no points".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::Shape(format!("point of dimension {} for a {}-input network", p.len(), d)));
        }
        let nc = order.components(d);
        let mut z = Array2::zeros((nc * n, d));
        for (i, p) in points.iter().enumerate() {
            for k in 0..d {
                z[[i, k]] = p[k];
            }
        }
        if order >= Order::Gradient {
            for k in 0..d {
                z.slice_mut(s![(1 + k) * n..(2 + k) * n, k]).fill(1.0);
            }
        }
        let act = params.activation;
        let n_layers = params.n_layers();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre = Vec::with_capacity(n_layers - 1);
        let mut dact = Vec::with_capacity(n_layers - 1);
        let mut output = Vec::new();
        for l in 0..n_layers {
            let w = &params.weights[l];
            let mut a = standard(z.dot(&w.t()));
            a.slice_mut(s![0..n, ..]).outer_iter_mut().for_each(|mut row| row += &params.biases[l]);
            if l + 1 == n_layers {
                output = a.column(0).to_vec();
                inputs.push(z);
                break;
            }
            let width = w.nrows();
            let m = n * width;
            let a_s = a.as_slice().expect("standard layout");
            let mut next_s = vec![0.0; nc * m];
            let (mut d1, mut d2, mut d3) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
            for idx in 0..m {
                let [v, s1, s2, s3] = act.eval(a_s[idx]);
                next_s[idx] = v;
                d1[idx] = s1;
                d2[idx] = s2;
                d3[idx] = s3;
            }
            if order >= Order::Gradient {
                for k in 0..d {
                    let r = (1 + k) * m;
                    for ((o, &g), &s1) in next_s[r..r + m].iter_mut().zip(&a_s[r..r + m]).zip(&d1) {
                        *o = s1 * g;
                    }
                }
            }
            if order == Order::Laplacian {
                let rl = (1 + d) * m;
                let lap_out = &mut next_s[rl..];
                for (idx, o) in lap_out.iter_mut().enumerate() {
                    let mut g2 = 0.0;
                    for k in 0..d {
                        let g = a_s[(1 + k) * m + idx];
                        g2 += g * g;
                    }
                    *o = d2[idx] * g2 + d1[idx] * a_s[rl + idx];
                }
            }
            let next = Array2::from_shape_vec((nc * n, width), next_s).expect("layer shape");
            let shape = (n, width);
            let d1 = Array2::from_shape_vec(shape, d1).expect("layer shape");
            let d2 = Array2::from_shape_vec(shape, d2).expect("layer shape");
            let d3 = Array2::from_shape_vec(shape, d3).expect("layer shape");
            inputs.push(std::mem::replace(&mut z, next));
            pre.push(a);
            dact.push([d1, d2, d3]);
        }
        Ok(Self {
            params,
            order,
            n,
            d,
            nc,
            inputs,
            pre,
            dact,
            output,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn components(&self) -> usize {
        self.nc
    }

    pub fn params(&self) -> &NetworkParams {
        self.params
    }

    pub fn value(&self, i: usize) -> f64 {
        self.output[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.output[..self.n]
    }

    pub fn grad(&self, i: usize) -> Vec<f64> {
        assert!(self.order >= Order::Gradient, "tape was recorded without gradients");
        (0..self.d).map(|k| self.output[(1 + k) * self.n + i]).collect()
    }

    pub fn lap(&self, i: usize) -> f64 {
        assert!(self.order == Order::Laplacian, "tape was recorded without Laplacians");
        self.output[(1 + self.d) * self.n + i]
    }

    /// Reverse pass for output seed `seed` (`n x components`): the result is
    /// the adjoint of `sum_i sum_c seed[i, c] * out_c(x_i)`.
    pub fn adjoints(&self, seed: &Array2<f64>) -> Adjoints {
        let (n, nc, d) = (self.n, self.nc, self.d);
        assert_eq!(seed.dim(), (n, nc), "seed shape");
        let n_layers = self.params.n_layers();
        let mut abar = vec![Array2::zeros((0, 0)); n_layers];
        let mut top = Array2::zeros((nc * n, 1));
        for c in 0..nc {
            for i in 0..n {
                top[[c * n + i, 0]] = seed[[i, c]];
            }
        }
        abar[n_layers - 1] = top;
        for l in (1..n_layers).rev() {
            let zbar = standard(abar[l].dot(&self.params.weights[l]));
            let a = &self.pre[l - 1];
            let [d1, d2, d3] = &self.dact[l - 1];
            let width = zbar.ncols();
            let m = n * width;
            let zb = zbar.as_slice().expect("standard layout");
            let a = a.as_slice().expect("standard layout");
            let (s1, s2, s3) = (
                d1.as_slice().expect("standard layout"),
                d2.as_slice().expect("standard layout"),
                d3.as_slice().expect("standard layout"),
            );
            let mut ab = vec![0.0; nc * m];
            for idx in 0..m {
                ab[idx] = zb[idx] * s1[idx];
            }
            if self.order >= Order::Gradient {
                let (av, rest) = ab.split_at_mut(m);
                for k in 0..d {
                    let r = (1 + k) * m;
                    let abk = &mut rest[k * m..(k + 1) * m];
                    for idx in 0..m {
                        let zr = zb[r + idx];
                        av[idx] += s2[idx] * zr * a[r + idx];
                        abk[idx] = s1[idx] * zr;
                    }
                }
            }
            if self.order == Order::Laplacian {
                let rl = (1 + d) * m;
                let (av, rest) = ab.split_at_mut(m);
                for idx in 0..m {
                    let sbar = zb[rl + idx];
                    if sbar == 0.0 {
                        continue;
                    }
                    let mut g2 = 0.0;
                    for k in 0..d {
                        let g = a[(1 + k) * m + idx];
                        g2 += g * g;
                        rest[k * m + idx] += 2.0 * s2[idx] * sbar * g;
                    }
                    av[idx] += sbar * (s3[idx] * g2 + s2[idx] * a[rl + idx]);
                    rest[d * m + idx] = s1[idx] * sbar;
                }
            }
            let ab = Array2::from_shape_vec((nc * n, width), ab).expect("layer shape");
            abar[l - 1] = ab;
        }
        Adjoints { abar }
    }

    /// Gradient of the seeded output sum with respect to the flat parameters.
    pub fn param_gradient(&self, adj: &Adjoints) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params.n_params());
        for (ab, z) in adj.abar.iter().zip(&self.inputs) {
            let gw = ab.t().dot(z);
            out.extend(gw.iter());
            out.extend(ab.slice(s![0..self.n, ..]).sum_axis(Axis(0)).iter());
        }
        out
    }

    /// Per-point Jacobian rows (`n x P`) of the seeded outputs.
    pub fn jacobian(&self, adj: &Adjoints) -> Array2<f64> {
        let mut jac = Array2::zeros((self.n, self.params.n_params()));
        for l in 0..self.params.n_layers() {
            let out = self.params.weights[l].nrows();
            let off = self.params.layer_offset(l);
            let blk = self.jacobian_block(adj, l, 0..out);
            jac.slice_mut(s![.., off..off + blk.ncols()]).assign(&blk);
        }
        jac
    }

    /// Jacobian columns of layer `l` for output neurons `rows`: their weights
    /// row-major, then their biases.
    fn jacobian_block(&self, adj: &Adjoints, l: usize, rows: std::ops::Range<usize>) -> Array2<f64> {
        let (n, nc) = (self.n, self.nc);
        let ab = &adj.abar[l];
        let z = &self.inputs[l];
        let fan_in = z.ncols();
        let nr = rows.len();
        let mut blk = Array2::zeros((n, nr * (fan_in + 1)));
        for i in 0..n {
            let mut row = blk.row_mut(i);
            let row = row.as_slice_mut().expect("contiguous row");
            for c in 0..nc {
                let r = c * n + i;
                let zr = z.row(r);
                let zr = zr.as_slice().expect("contiguous row");
                for (jj, j) in rows.clone().enumerate() {
                    let w = ab[[r, j]];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut row[jj * fan_in..(jj + 1) * fan_in];
                    for (o, &zm) in dst.iter_mut().zip(zr) {
                        *o += w * zm;
                    }
                }
            }
            for (jj, j) in rows.clone().enumerate() {
                row[nr * fan_in + jj] = ab[[i, j]];
            }
        }
        blk
    }

    /// `J_x J_y^T` for two seeds recorded on this tape.
    pub fn cross_gram(&self, x: &Adjoints, y: &Adjoints, method: GramMethod) -> Array2<f64> {
        let mut acc = PairwiseSum::default();
        match method {
            GramMethod::Factored => {
                let n = self.n;
                let rows = |c: usize| s![c * n..(c + 1) * n, ..];
                for l in 0..self.params.n_layers() {
                    let (ax, ay, z) = (&x.abar[l], &y.abar[l], &self.inputs[l]);
                    let mut part = ax.slice(rows(0)).dot(&ay.slice(rows(0)).t());
                    for c in 0..self.nc {
                        let (zc, axc) = (z.slice(rows(c)), ax.slice(rows(c)));
                        if is_zero(&zc) || is_zero(&axc) {
                            continue;
                        }
                        for c2 in 0..self.nc {
                            let (zc2, ayc2) = (z.slice(rows(c2)), ay.slice(rows(c2)));
                            if is_zero(&zc2) || is_zero(&ayc2) {
                                continue;
                            }
                            let zz = zc.dot(&zc2.t());
                            let aa = axc.dot(&ayc2.t());
                            ndarray::Zip::from(&mut part).and(&zz).and(&aa).for_each(|p, &q, &r| *p += q * r);
                        }
                    }
                    acc.push(part);
                }
            }
            GramMethod::Explicit => {
                const TARGET_COLS: usize = 1 << 16;
                for l in 0..self.params.n_layers() {
                    let out = self.params.weights[l].nrows();
                    let fan_in = self.inputs[l].ncols();
                    let chunk = (TARGET_COLS / (fan_in + 1)).clamp(1, out);
                    let mut j0 = 0;
                    while j0 < out {
                        let j1 = (j0 + chunk).min(out);
                        let bx = self.jacobian_block(x, l, j0..j1);
                        let by = self.jacobian_block(y, l, j0..j1);
                        acc.push(bx.dot(&by.t()));
                        j0 = j1;
                    }
                }
            }
        }
        acc.finish().expect("at least one layer")
    }

    pub fn gram(&self, adj: &Adjoints, method: GramMethod) -> SymMatrix {
        SymMatrix::from_upper(&self.cross_gram(adj, adj, method)).expect("square gram")
    }
}

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn is_zero(a: &ArrayView2<f64>) -> bool {
    a.iter().all(|&v| v == 0.0)
}

/// Sums arrays in a balanced binary tree so rounding grows with `log` of the count.
#[derive(Default)]
struct PairwiseSum {
    stack: Vec<(u32, Array2<f64>)>,
}

impl PairwiseSum {
    fn push(&mut self, mut a: Array2<f64>) {
        let mut level = 0;
        while let Some((top, _)) = self.stack.last() {
            if *top != level {
                break;
            }
            let (_, b) = self.stack.pop().unwrap();
            a = b + a;
            level += 1;
        }
        self.stack.push((level, a));
    }

    fn finish(mut self) -> Option<Array2<f64>> {
        let mut acc = self.stack.pop()?.1;
        while let Some((_, b)) = self.stack.pop() {
            acc = b + acc;
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{init_kaiming_uniform, Activation};
    use super::*;

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let mut acc = PairwiseSum::default();
        let mut plain = Array2::<f64>::zeros((2, 2));
        for k in 0..13 {
            let a = Array2::from_elem((2, 2), k as f64);
            plain = plain + &a;
            acc.push(a);
        }
        assert_eq!(acc.finish().unwrap(), plain);
    }

    #[test]
    fn factored_and_explicit_grams_agree() {
        let p = init_kaiming_uniform(&[2, 7, 5, 1], Activation::Tanh, 11).unwrap();
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 * i as f64, 0.9 - 0.13 * i as f64]).collect();
        let tape = Tape::forward(&p, &pts, Order::Laplacian).unwrap();
        let seed_a = Array2::from_shape_fn((6, 4), |(i, c)| ((i + 2 * c) as f64).sin());
        let seed_b = Array2::from_shape_fn((6, 4), |(i, c)| ((3 * i + c) as f64).cos());
        let (a, b) = (tape.adjoints(&seed_a), tape.adjoints(&seed_b));
        let f = tape.cross_gram(&a, &b, GramMethod::Factored);
        let e = tape.cross_gram(&a, &b, GramMethod::Explicit);
        let ja = tape.jacobian(&a);
        let jb = tape.jacobian(&b);
        let brute = ja.dot(&jb.t());
        let scale = brute.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for ((x, y), z) in f.iter().zip(&e).zip(&brute) {
            assert!((x - z).abs() <= 1e-12 * scale);
            assert!((y - z).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn param_gradient_is_seeded_jacobian_sum() {
        let p = init_kaiming_uniform(&[1, 5, 1], Activation::Sigmoid, 2).unwrap();
        let pts: Vec<Vec<f64>> = (0..4).map(|i| vec![0.2 * i as f64]).collect();
        let tape = Tape::forward(&p, &pts, Order::Laplacian).unwrap();
        let seed = Array2::from_shape_fn((4, 3), |(i, c)| 1.0 + i as f64 - c as f64);
        let adj = tape.adjoints(&seed);
        let g = tape.param_gradient(&adj);
        let jac = tape.jacobian(&adj).sum_axis(Axis(0));
        for (a, b) in g.iter().zip(jac.iter()) {
            assert!((a - b).abs() < 1e-13 * (1.0 + b.abs()));
        }
    }
}
