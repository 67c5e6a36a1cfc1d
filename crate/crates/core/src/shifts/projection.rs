use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::fibers::DifferenceSet;

/// Integer vector `z` with `h . z != 0` for every row of `H`, chosen one
/// coordinate at a time from `0, 1, -1, 2, -2, ...`.
pub fn construct_z(h: &DifferenceSet) -> Result<Vec<i64>> {
    let d = h.dim();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (i, row) in h.iter().enumerate() {
        match row.iter().rposition(|&v| v != 0) {
            Some(j) => groups[j].push(i),
            None => return Err(Error::ZeroRow(i)),
        }
    }

    let mut z = vec![0i64; d];
    for j in 0..d {
        let mut forbidden = HashSet::new();
        for &i in &groups[j] {
            let row = h.get(i);
            let c: i128 = row[..j]
                .iter()
                .zip(&z)
                .map(|(&a, &b)| a as i128 * b as i128)
                .sum();
            let hj = row[j] as i128;
            if c % hj == 0 {
                forbidden.insert(-c / hj);
            }
        }
        z[j] = (0..)
            .flat_map(|m: i64| if m == 0 { vec![0] } else { vec![m, -m] })
            .find(|x| !forbidden.contains(&(*x as i128)))
            .expect("finitely many forbidden values");
    }
    Ok(z)
}

/// Collision integers `X_h = |h . z|`, with overflow checks in 128-bit arithmetic.
pub fn projections(h: &DifferenceSet, z: &[i64]) -> Result<Vec<u128>> {
    h.iter()
        .map(|row| {
            let mut acc: i128 = 0;
            for (&a, &b) in row.iter().zip(z) {
                let term = (a as i128)
                    .checked_mul(b as i128)
                    .ok_or(Error::ProjectionOverflow)?;
                acc = acc.checked_add(term).ok_or(Error::ProjectionOverflow)?;
            }
            Ok(acc.unsigned_abs())
        })
        .collect()
}
