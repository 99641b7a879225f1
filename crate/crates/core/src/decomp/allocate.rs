use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subspace widths `(d_s, d_I, d_T)`, each at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimensionPlan {
    pub d_s: usize,
    pub d_i: usize,
    pub d_t: usize,
}

impl DimensionPlan {
    pub fn new(d_s: usize, d_i: usize, d_t: usize) -> Result<Self> {
        if d_s == 0 || d_i == 0 || d_t == 0 {
            return Err(Error::domain(format!(
                "every subspace needs at least one dimension, got ({d_s}, {d_i}, {d_t})"
            )));
        }
        Ok(Self { d_s, d_i, d_t })
    }

    pub fn dim(&self) -> usize {
        self.d_s + self.d_i + self.d_t
    }

    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.d_s, self.d_i, self.d_t)
    }
}

/// Splits `d` in proportion to `(var_f + var_g) / (var_f var_g)`,
/// `var_f / var_g` and `var_g / var_f` for the shared, image and text
/// subspaces.
///
/// Quotas are floored and the leftover units go to the largest fractional
/// parts (ties: shared, then image, then text). If the image and text parts
/// tie and only one unit is left for them, that unit goes to the shared
/// subspace so that swapping the variances swaps `d_I` and `d_T` exactly. A
/// part that ends at zero takes one unit from the largest part (largest
/// quota on ties); an empty shared part facing tied image and text parts
/// takes one unit from each.
pub fn allocate_dimensions(d: usize, var_f: f64, var_g: f64) -> Result<DimensionPlan> {
    if d < 3 {
        return Err(Error::domain(format!("need d >= 3 to give every subspace a dimension, got {d}")));
    }
    for v in [var_f, var_g] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("variances must be positive and finite, got {v}")));
        }
    }
    let w = [(var_f + var_g) / (var_f * var_g), var_f / var_g, var_g / var_f];
    // w_I + w_T grouped so the sum is symmetric under swapping the variances
    let total = w[0] + (w[1] + w[2]);
    let quota: Vec<f64> = w.iter().map(|x| x * d as f64 / total).collect();
    let mut parts: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let frac: Vec<f64> = quota.iter().zip(&parts).map(|(q, p)| q - *p as f64).collect();
    let mut left = d.saturating_sub(parts.iter().sum());

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
    let tie_it = (frac[1] - frac[2]).abs() <= 1e-12;
    let mut k = 0;
    while left > 0 {
        let idx = order[k % 3];
        if tie_it && idx != 0 {
            if left >= 2 {
                parts[1] += 1;
                parts[2] += 1;
                left -= 2;
            } else {
                parts[0] += 1;
                left -= 1;
            }
            // both tied parts handled; skip the second of them in the order
            k += 2;
            continue;
        }
        parts[idx] += 1;
        left -= 1;
        k += 1;
    }

    for i in 0..3 {
        if parts[i] != 0 {
            continue;
        }
        if i == 0 && parts[1] == parts[2] && quota[1] == quota[2] {
            // image and text are interchangeable here; take one from each
            parts[1] -= 1;
            parts[2] -= 1;
            parts[0] += 2;
            continue;
        }
        let donor = (0..3)
            .filter(|&j| j != i)
            .max_by(|&a, &b| {
                parts[a]
                    .cmp(&parts[b])
                    .then(quota[a].total_cmp(&quota[b]))
                    .then(b.cmp(&a))
            })
            .expect("two candidate donors");
        parts[donor] -= 1;
        parts[i] += 1;
    }
    DimensionPlan::new(parts[0], parts[1], parts[2])
}
