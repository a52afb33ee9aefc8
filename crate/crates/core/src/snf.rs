//! Smith normal form over a Euclidean ring of integers.

use num_integer::Integer;
use num_traits::Signed;

/// `U * A * V = D` with `U`, `V` unimodular and `D` diagonal, each diagonal
/// entry non-negative and dividing the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm<T> {
    pub left: Vec<Vec<T>>,
    pub diagonal: Vec<T>,
    pub right: Vec<Vec<T>>,
}

fn identity<T: Integer + Clone>(n: usize) -> Vec<Vec<T>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

/// `row[dst] += k * row[src]`.
fn add_row<T: Integer + Clone>(m: &mut [Vec<T>], dst: usize, src: usize, k: &T) {
    for j in 0..m[dst].len() {
        let v = m[src][j].clone() * k.clone();
        m[dst][j] = m[dst][j].clone() + v;
    }
}

/// `col[dst] += k * col[src]`.
fn add_col<T: Integer + Clone>(m: &mut [Vec<T>], dst: usize, src: usize, k: &T) {
    for row in m.iter_mut() {
        let v = row[src].clone() * k.clone();
        row[dst] = row[dst].clone() + v;
    }
}

fn swap_cols<T>(m: &mut [Vec<T>], a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

fn negate_row<T: Integer + Signed + Clone>(m: &mut [Vec<T>], i: usize) {
    for v in m[i].iter_mut() {
        *v = -v.clone();
    }
}

/// Smith normal form of a matrix given by rows.
pub fn smith_normal_form<T: Integer + Signed + Clone>(a: &[Vec<T>]) -> SmithForm<T> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut left = identity::<T>(rows);
    let mut right = identity::<T>(cols);

    for t in 0..rows.min(cols) {
        loop {
            // Smallest non-zero entry of the trailing block becomes the pivot.
            let pivot = (t..rows)
                .flat_map(|i| (t..cols).map(move |j| (i, j)))
                .filter(|&(i, j)| !m[i][j].is_zero())
                .min_by(|&(i, j), &(k, l)| m[i][j].abs().cmp(&m[k][l].abs()));
            let Some((pi, pj)) = pivot else {
                break;
            };
            m.swap(t, pi);
            left.swap(t, pi);
            swap_cols(&mut m, t, pj);
            swap_cols(&mut right, t, pj);

            let mut clean = true;
            for i in t + 1..rows {
                let q = m[i][t].div_floor(&m[t][t]);
                if !q.is_zero() {
                    let k = -q;
                    add_row(&mut m, i, t, &k);
                    add_row(&mut left, i, t, &k);
                }
                clean &= m[i][t].is_zero();
            }
            for j in t + 1..cols {
                let q = m[t][j].div_floor(&m[t][t]);
                if !q.is_zero() {
                    let k = -q;
                    add_col(&mut m, j, t, &k);
                    add_col(&mut right, j, t, &k);
                }
                clean &= m[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            // Enforce divisibility of the rest of the block by the pivot.
            let bad = (t + 1..rows)
                .find(|&i| (t + 1..cols).any(|j| !m[i][j].is_multiple_of(&m[t][t])));
            match bad {
                Some(i) => {
                    let one = T::one();
                    add_row(&mut m, t, i, &one);
                    add_row(&mut left, t, i, &one);
                }
                None => break,
            }
        }
        if m[t][t].is_negative() {
            negate_row(&mut m, t);
            negate_row(&mut left, t);
        }
    }
    let diagonal = (0..rows.min(cols)).map(|i| m[i][i].clone()).collect();
    SmithForm {
        left,
        diagonal,
        right,
    }
}
