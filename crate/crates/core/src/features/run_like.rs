//! Statistics shared by the run-length, size-zone and dependence matrices,
//! which all tabulate (gray level, size) counts.

use super::TextureMatrix;

pub(crate) struct RunLike {
    pub total: f64,
    pub small: f64,
    pub large: f64,
    pub gray_nonuni: f64,
    pub gray_nonuni_norm: f64,
    pub size_nonuni: f64,
    pub size_nonuni_norm: f64,
    pub gray_var: f64,
    pub size_var: f64,
    pub entropy: f64,
    pub low_gray: f64,
    pub high_gray: f64,
    pub small_low: f64,
    pub small_high: f64,
    pub large_low: f64,
    pub large_high: f64,
}

pub(crate) fn run_like(m: &TextureMatrix) -> RunLike {
    let n = m.total();
    let mut row = vec![0.0; m.rows];
    let mut col = vec![0.0; m.cols];
    let mut r = RunLike {
        total: n,
        small: 0.0,
        large: 0.0,
        gray_nonuni: 0.0,
        gray_nonuni_norm: 0.0,
        size_nonuni: 0.0,
        size_nonuni_norm: 0.0,
        gray_var: 0.0,
        size_var: 0.0,
        entropy: 0.0,
        low_gray: 0.0,
        high_gray: 0.0,
        small_low: 0.0,
        small_high: 0.0,
        large_low: 0.0,
        large_high: 0.0,
    };
    let mut mu_i = 0.0;
    let mut mu_j = 0.0;
    for a in 0..m.rows {
        let i2 = ((a + 1) as f64).powi(2);
        for b in 0..m.cols {
            let c = m.at(a, b);
            if c == 0.0 {
                continue;
            }
            let j2 = ((b + 1) as f64).powi(2);
            let p = c / n;
            row[a] += c;
            col[b] += c;
            r.small += p / j2;
            r.large += p * j2;
            r.low_gray += p / i2;
            r.high_gray += p * i2;
            r.small_low += p / (i2 * j2);
            r.small_high += p * i2 / j2;
            r.large_low += p * j2 / i2;
            r.large_high += p * i2 * j2;
            r.entropy -= p * p.log2();
            mu_i += p * (a + 1) as f64;
            mu_j += p * (b + 1) as f64;
        }
    }
    for a in 0..m.rows {
        for b in 0..m.cols {
            let p = m.at(a, b) / n;
            r.gray_var += p * ((a + 1) as f64 - mu_i).powi(2);
            r.size_var += p * ((b + 1) as f64 - mu_j).powi(2);
        }
    }
    r.gray_nonuni = row.iter().map(|x| x * x).sum::<f64>() / n;
    r.gray_nonuni_norm = r.gray_nonuni / n;
    r.size_nonuni = col.iter().map(|x| x * x).sum::<f64>() / n;
    r.size_nonuni_norm = r.size_nonuni / n;
    r
}
