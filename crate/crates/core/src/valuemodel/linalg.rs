//! Dense helpers for square matrices stored column by column
//! (`w[j * n + i]` is row `i`, column `j`), so `W x` is a sequence of axpys.

/// `out += W x`
#[inline]
pub fn matvec_add(w: &[f64], x: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = &w[j * n..(j + 1) * n];
        for (o, c) in out.iter_mut().zip(col) {
            *o += c * xj;
        }
    }
}

/// `out += W^T d`
#[inline]
pub fn matvec_t_add(w: &[f64], d: &[f64], out: &mut [f64]) {
    let n = d.len();
    for (j, o) in out.iter_mut().enumerate() {
        let col = &w[j * n..(j + 1) * n];
        *o += dot(col, d);
    }
}

/// `G += d x^T`
#[inline]
pub fn outer_add(g: &mut [f64], d: &[f64], x: &[f64]) {
    let n = d.len();
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = &mut g[j * n..(j + 1) * n];
        for (c, di) in col.iter_mut().zip(d) {
            *c += di * xj;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_major_products() {
        // W = [[1, 2], [3, 4]]
        let w = [1.0, 3.0, 2.0, 4.0];
        let mut out = [0.0; 2];
        matvec_add(&w, &[1.0, 1.0], &mut out);
        assert_eq!(out, [3.0, 7.0]);
        let mut out = [0.0; 2];
        matvec_t_add(&w, &[1.0, 1.0], &mut out);
        assert_eq!(out, [4.0, 6.0]);
        let mut g = [0.0; 4];
        outer_add(&mut g, &[1.0, 2.0], &[3.0, 5.0]);
        assert_eq!(g, [3.0, 6.0, 5.0, 10.0]);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
    }
}
