//! Independent reference implementations and data builders for the
//! integration tests. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use chrono::NaiveDate;
use movrank::{Dataset, GameRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn game(road: u32, home: u32, mov: i32) -> GameRecord {
    let date = NaiveDate::from_ymd_opt(2015, 2, 1).unwrap();
    let (home_score, road_score) = if mov >= 0 { (60, 60 + mov as u32) } else { ((60 - mov) as u32, 60) };
    GameRecord::new(date, "Home", "Road", home, road, home_score, road_score).unwrap()
}

pub fn dataset(points: &[(u32, u32, i32)]) -> Dataset {
    Dataset::new(points.iter().map(|&(r, h, m)| game(r, h, m)).collect())
}

/// Uniform ranks on {1..max}² with marks from `f`.
pub fn random_dataset(n: usize, max: u32, seed: u64, f: impl Fn(u32, u32, &mut ChaCha8Rng) -> i32) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<_> = (0..n)
        .map(|_| {
            let r = rng.gen_range(1..=max);
            let h = rng.gen_range(1..=max);
            (r, h, f(r, h, &mut rng))
        })
        .collect();
    dataset(&pts)
}

pub fn points(data: &Dataset) -> Vec<(f64, f64, f64)> {
    data.games()
        .iter()
        .map(|g| (g.road_rank as f64, g.home_rank as f64, g.mov() as f64))
        .collect()
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Local-linear estimate by full sort, tricube weights and the 3×3 normal
/// equations solved with Cramer's rule. `None` when the system is singular.
pub fn brute_force_loess(pts: &[(f64, f64, f64)], span: f64, normalize: bool, query: (f64, f64)) -> Option<f64> {
    let n = pts.len();
    let sd = |sel: fn(&(f64, f64, f64)) -> f64| {
        let mean = pts.iter().map(sel).sum::<f64>() / n as f64;
        let var = pts.iter().map(|p| (sel(p) - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        if var > 0.0 {
            var.sqrt()
        } else {
            1.0
        }
    };
    let (sr, sh) = if normalize { (sd(|p| p.0), sd(|p| p.1)) } else { (1.0, 1.0) };
    let mut scaled: Vec<(f64, f64, f64, f64)> = pts
        .iter()
        .map(|&(r, h, m)| {
            let (u, v) = ((r - query.0) / sr, (h - query.1) / sh);
            ((u * u + v * v).sqrt(), u, v, m)
        })
        .collect();
    scaled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let q = (span * n as f64).ceil() as usize;
    let d_max = scaled[q - 1].0;
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for &(d, u, v, m) in &scaled[..q] {
        if d >= d_max {
            continue;
        }
        let t = d / d_max;
        let w = (1.0 - t * t * t).powi(3);
        let x = [1.0, u, v];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += w * x[i] * x[j];
            }
            b[i] += w * x[i] * m;
        }
    }
    let det = det3(a);
    if det.abs() < 1e-12 * a[0][0].powi(3).max(1e-300) {
        return None;
    }
    let mut a0 = a;
    for i in 0..3 {
        a0[i][0] = b[i];
    }
    Some(det3(a0) / det)
}

/// Direct Nadaraya–Watson sum with standard normal density weights, no guarding.
pub fn direct_kernel(pts: &[(f64, f64, f64)], sigma_x: f64, sigma_y: f64, rotated: bool, query: (f64, f64)) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let frame = |r: f64, h: f64| {
        if rotated {
            ((r + h) / 2f64.sqrt(), (r - h) / 2f64.sqrt())
        } else {
            (r, h)
        }
    };
    let (qx, qy) = frame(query.0, query.1);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(r, h, m) in pts {
        let (x, y) = frame(r, h);
        let t = (((x - qx) / sigma_x).powi(2) + ((y - qy) / sigma_y).powi(2)).sqrt();
        num += phi(t) * m;
        den += phi(t);
    }
    num / den
}

#[derive(Debug, Clone, Copy)]
pub struct Anova {
    pub ss_pe: f64,
    pub ss_lof: f64,
    pub df_pe: usize,
    pub df_lof: usize,
    pub f_stat: f64,
    pub sse: f64,
}

/// Lack-of-fit decomposition for a straight line in `x`, by hand.
pub fn line_anova(obs: &[(f64, f64)], groups: usize) -> Anova {
    let n = obs.len() as f64;
    let xbar = obs.iter().map(|o| o.0).sum::<f64>() / n;
    let ybar = obs.iter().map(|o| o.1).sum::<f64>() / n;
    let sxx: f64 = obs.iter().map(|o| (o.0 - xbar).powi(2)).sum();
    let sxy: f64 = obs.iter().map(|o| (o.0 - xbar) * (o.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let sse: f64 = obs.iter().map(|o| (o.1 - intercept - slope * o.0).powi(2)).sum();
    let mut xs: Vec<f64> = obs.iter().map(|o| o.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ss_pe: f64 = xs
        .iter()
        .map(|&x| {
            let ys: Vec<f64> = obs.iter().filter(|o| o.0 == x).map(|o| o.1).collect();
            let m = ys.iter().sum::<f64>() / ys.len() as f64;
            ys.iter().map(|y| (y - m).powi(2)).sum::<f64>()
        })
        .sum();
    let df_pe = obs.len() - groups;
    let df_lof = groups - 2;
    let ss_lof = sse - ss_pe;
    Anova {
        ss_pe,
        ss_lof,
        df_pe,
        df_lof,
        f_stat: (ss_lof / df_lof as f64) / (ss_pe / df_pe as f64),
        sse,
    }
}

/// Upper tail of F(1, 3): with F = t², P(|T₃| > t) = 1 − (2/π)(θ + sin θ cos θ),
/// θ = atan(t/√3).
pub fn f_1_3_upper_tail(f: f64) -> f64 {
    let theta = (f.sqrt() / 3f64.sqrt()).atan();
    1.0 - 2.0 / std::f64::consts::PI * (theta + theta.sin() * theta.cos())
}

/// Ordinary least squares for the five-term quadratic, returning
/// coefficients and standard errors. Predictors are scaled by `scale`
/// internally and the 5×5 normal matrix is inverted by Gauss–Jordan.
pub fn quadratic_ols(pts: &[(f64, f64, f64)], scale: f64) -> ([f64; 5], [f64; 5], f64) {
    let row = |r: f64, h: f64| {
        let (a, b) = (r / scale, h / scale);
        [1.0, a, b, a * a, b * b]
    };
    let mut xtx = [[0.0; 5]; 5];
    let mut xty = [0.0; 5];
    for &(r, h, m) in pts {
        let x = row(r, h);
        for i in 0..5 {
            for j in 0..5 {
                xtx[i][j] += x[i] * x[j];
            }
            xty[i] += x[i] * m;
        }
    }
    // Gauss–Jordan on [XᵀX | I]
    let mut aug = [[0.0; 10]; 5];
    for i in 0..5 {
        aug[i][..5].copy_from_slice(&xtx[i]);
        aug[i][5 + i] = 1.0;
    }
    for c in 0..5 {
        let p = (c..5).max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs())).unwrap();
        aug.swap(c, p);
        let piv = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..5 {
            if r != c {
                let f = aug[r][c];
                let src = aug[c];
                for (v, s) in aug[r].iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
    }
    let inv: Vec<[f64; 5]> = aug.iter().map(|r| r[5..].try_into().unwrap()).collect();
    let beta_s: Vec<f64> = (0..5).map(|i| (0..5).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let rss: f64 = pts
        .iter()
        .map(|&(r, h, m)| {
            let x = row(r, h);
            (m - (0..5).map(|k| x[k] * beta_s[k]).sum::<f64>()).powi(2)
        })
        .sum();
    let sigma = (rss / (pts.len() as f64 - 5.0)).sqrt();
    let unscale = [1.0, scale, scale, scale * scale, scale * scale];
    let mut beta = [0.0; 5];
    let mut se = [0.0; 5];
    for k in 0..5 {
        beta[k] = beta_s[k] / unscale[k];
        se[k] = sigma * inv[k][k].sqrt() / unscale[k];
    }
    (beta, se, sigma)
}

/// Expected number of cells hit at least twice when `n` draws land
/// uniformly on `cells` cells.
pub fn expected_replicated_cells(n: usize, cells: usize) -> f64 {
    let p = 1.0 / cells as f64;
    let none = (1.0 - p).powi(n as i32);
    let once = n as f64 * p * (1.0 - p).powi(n as i32 - 1);
    cells as f64 * (1.0 - none - once)
}
