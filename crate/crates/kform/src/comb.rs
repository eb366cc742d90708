/// Binomial coefficient C(n, k), zero when k > n.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Strictly increasing k-subsets of 0..n in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Lexicographic rank of a strictly increasing k-subset of 0..n.
pub(crate) fn combination_rank(idx: &[usize], n: usize) -> usize {
    let k = idx.len();
    let mut rank = 0;
    let mut prev = 0;
    for (i, &v) in idx.iter().enumerate() {
        for skipped in prev..v {
            rank += binomial(n - 1 - skipped, k - 1 - i);
        }
        prev = v + 1;
    }
    rank
}

pub(crate) fn factorial(m: u32) -> f64 {
    (1..=m).fold(1.0, |acc, i| acc * i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(30, 15), 155117520);
    }

    #[test]
    fn rank_inverts_enumeration() {
        for n in 0..7 {
            for k in 0..=n {
                let all = combinations(n, k);
                assert_eq!(all.len(), binomial(n, k));
                for (r, c) in all.iter().enumerate() {
                    assert_eq!(combination_rank(c, n), r);
                }
            }
        }
    }
}
