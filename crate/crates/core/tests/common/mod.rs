//! Slow, direct reference implementations used as test oracles.
#![allow(dead_code)]

use autogain::DeviceSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Extrema {
    pub minima: Vec<usize>,
    pub maxima: Vec<usize>,
    /// (min, max, persistence), sorted.
    pub pairs: Vec<(usize, usize, f64)>,
    pub global_max: Option<usize>,
}

fn key(v: &[f64], i: usize) -> (f64, usize) {
    (v[i], i)
}

fn lt(v: &[f64], a: usize, b: usize) -> bool {
    key(v, a) < key(v, b)
}

/// Elder-rule pairing by walking: each point that is higher (value, then
/// index) than both neighbours merges the basins on its two sides, and the
/// basin with the higher floor dies there.
pub fn brute_persistence(v: &[f64], threshold: f64) -> Extrema {
    let n = v.len();
    if n == 0 {
        return Extrema {
            minima: vec![],
            maxima: vec![],
            pairs: vec![],
            global_max: None,
        };
    }
    let mut pairs = Vec::new();
    for m in 1..n.saturating_sub(1) {
        if !(lt(v, m - 1, m) && lt(v, m + 1, m)) {
            continue;
        }
        let mut left_min = m - 1;
        let mut j = m - 1;
        loop {
            if lt(v, j, left_min) {
                left_min = j;
            }
            if j == 0 || !lt(v, j - 1, m) {
                break;
            }
            j -= 1;
        }
        let mut right_min = m + 1;
        let mut j = m + 1;
        loop {
            if lt(v, j, right_min) {
                right_min = j;
            }
            if j + 1 == n || !lt(v, j + 1, m) {
                break;
            }
            j += 1;
        }
        let young = if lt(v, left_min, right_min) { right_min } else { left_min };
        pairs.push((young, m, v[m] - v[young]));
    }
    let pairs: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .filter(|p| p.2 > 0.0 && p.2 >= threshold)
        .map(|(a, mut m, p)| {
            while m > 0 && v[m - 1] == v[m] {
                m -= 1;
            }
            (a, m, p)
        })
        .collect();
    let global_min = (0..n).min_by(|&a, &b| key(v, a).partial_cmp(&key(v, b)).unwrap()).unwrap();
    let mut minima: Vec<usize> = pairs.iter().map(|p| p.0).chain([global_min]).collect();
    minima.sort_unstable();
    let mut maxima: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    maxima.sort_unstable();
    let mut global_max = None;
    for &m in &maxima {
        match global_max {
            Some(g) if v[m] <= v[g] => {}
            _ => global_max = Some(m),
        }
    }
    let mut pairs = pairs;
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Extrema {
        minima,
        maxima,
        pairs,
        global_max,
    }
}

/// Gain update in product form: each submovement's delta is masked by its
/// own occupancy and by the complement of every later submovement's.
pub fn literal_update(gains: &[f64], floor: f64, c: f64, errors: &[f64], occ: &[Vec<bool>]) -> Vec<f64> {
    let s = |i: usize, j: usize| if occ[i][j] { 1.0 } else { 0.0 };
    let n = errors.len();
    (0..gains.len())
        .map(|j| {
            let mut total = 0.0;
            for i in 0..n {
                let mut independence = 1.0;
                for k in i + 1..n {
                    independence *= 1.0 - s(k, j);
                }
                total += c * errors[i] * s(i, j) * independence;
            }
            if (0..n).any(|i| occ[i][j]) {
                (gains[j] + total).max(floor)
            } else {
                gains[j]
            }
        })
        .collect()
}

/// Gaussian smoothing evaluated term by term with clamped indices.
pub fn naive_smooth(v: &[f64], sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let n = v.len() as i64;
    (0..n)
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for k in -r..=r {
                let w = (-(k * k) as f64 / (2.0 * sigma * sigma)).exp();
                num += w * v[(i + k).clamp(0, n - 1) as usize];
                den += w;
            }
            num / den
        })
        .collect()
}

/// Bin used by each moving event, computed straight from the definition.
pub fn occupied_bins(events: &[(i32, i32)], d: &DeviceSpec, bin_width: f64, bins: usize) -> Vec<usize> {
    let mut out: Vec<usize> = events
        .iter()
        .filter(|(x, y)| *x != 0 || *y != 0)
        .map(|&(x, y)| {
            let v = ((x as f64).powi(2) + (y as f64).powi(2)).sqrt() * d.freq_in / (d.res_in * 1000.0);
            ((v / bin_width).floor() as usize).min(bins - 1)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Largest angle between the start-to-end chord and start-to-point rays,
/// by the law of cosines.
pub fn max_deviation_deg(path: &[(f64, f64)]) -> f64 {
    let (x0, y0) = path[0];
    let (xn, yn) = *path.last().unwrap();
    let c = ((xn - x0).powi(2) + (yn - y0).powi(2)).sqrt();
    let mut best: f64 = 0.0;
    for &(x, y) in &path[1..path.len() - 1] {
        let a = ((x - x0).powi(2) + (y - y0).powi(2)).sqrt();
        let b = ((xn - x).powi(2) + (yn - y).powi(2)).sqrt();
        if a == 0.0 || c == 0.0 {
            continue;
        }
        let cos = ((a * a + c * c - b * b) / (2.0 * a * c)).clamp(-1.0, 1.0);
        best = best.max(cos.acos().to_degrees());
    }
    best
}

/// Test RNG: splitmix64, independent of the crate under test.
pub struct Mix(pub u64);

impl Mix {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}
