//! Partition agreement: adjusted mutual information and adjusted Rand index.

use std::collections::HashMap;

use crate::error::{invalid, Result};

/// Cluster co-occurrence counts between two labelings of the same entities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contingency {
    counts: Vec<Vec<u64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

fn compact(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let ids = raw
        .iter()
        .map(|&r| {
            let next = map.len();
            *map.entry(r).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

impl Contingency {
    /// Arbitrary ids are allowed; rows follow `a`, columns `b`, both in order
    /// of first appearance.
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return invalid(format!("labelings have lengths {} and {}", a.len(), b.len()));
        }
        let (a, r) = compact(a);
        let (b, c) = compact(b);
        let mut counts = vec![vec![0u64; c]; r];
        for (&i, &j) in a.iter().zip(&b) {
            counts[i][j] += 1;
        }
        let rows = counts.iter().map(|row| row.iter().sum()).collect();
        let cols = (0..c).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
        Ok(Self {
            counts,
            rows,
            cols,
            n: a.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.rows
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.cols
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Mutual information in nats.
    pub fn mutual_info(&self) -> f64 {
        let n = self.n as f64;
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &nij) in row.iter().enumerate() {
                if nij > 0 {
                    let nij = nij as f64;
                    mi += nij / n * (n * nij / (self.rows[i] as f64 * self.cols[j] as f64)).ln();
                }
            }
        }
        mi.max(0.0)
    }

    /// Expected mutual information under the hypergeometric permutation model.
    pub fn expected_mutual_info(&self) -> f64 {
        let n = self.n as usize;
        let mut log_fact = vec![0.0f64; n + 1];
        for k in 1..=n {
            log_fact[k] = log_fact[k - 1] + (k as f64).ln();
        }
        let nf = n as f64;
        let mut emi = 0.0;
        for &a in &self.rows {
            let a = a as usize;
            for &b in &self.cols {
                let b = b as usize;
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                let fixed = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b] - log_fact[n];
                for nij in lo..=hi {
                    let log_p = fixed
                        - log_fact[nij]
                        - log_fact[a - nij]
                        - log_fact[b - nij]
                        - log_fact[n + nij - a - b];
                    let x = nij as f64;
                    emi += x / nf * (nf * x / (a as f64 * b as f64)).ln() * log_p.exp();
                }
            }
        }
        emi
    }
}

fn entropy(sizes: &[u64], n: u64) -> f64 {
    let n = n as f64;
    -sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Adjusted mutual information normalised by `max(H(a), H(b))`.
///
/// Two single-cluster (or two all-singleton) labelings score 1.
pub fn ami(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let (r, c) = (t.rows.len(), t.cols.len());
    if (r == c && (r <= 1 || r as u64 == t.n)) || t.n == 0 {
        return Ok(1.0);
    }
    let mi = t.mutual_info();
    let emi = t.expected_mutual_info();
    let norm = entropy(&t.rows, t.n).max(entropy(&t.cols, t.n));
    let mut denom = norm - emi;
    if denom < 0.0 {
        denom = denom.min(-f64::EPSILON);
    } else {
        denom = denom.max(f64::EPSILON);
    }
    Ok(((mi - emi) / denom).min(1.0))
}

fn pairs(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let (r, c) = (t.rows.len(), t.cols.len());
    if (r == c && (r <= 1 || r as u64 == t.n)) || t.n == 0 {
        return Ok(1.0);
    }
    let index: f64 = t.counts.iter().flatten().map(|&x| pairs(x)).sum();
    let sum_a: f64 = t.rows.iter().map(|&x| pairs(x)).sum();
    let sum_b: f64 = t.cols.iter().map(|&x| pairs(x)).sum();
    let expected = sum_a * sum_b / pairs(t.n);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return Ok(0.0);
    }
    Ok((index - expected) / (max - expected))
}
