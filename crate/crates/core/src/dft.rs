//! Unnormalized n-dimensional DFT over row-major arrays, with an independent
//! direction per axis.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// `Forward` uses `e^{-2πi jm/n}`, `Inverse` uses `e^{+2πi jm/n}`.
/// Neither applies a `1/n` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Signed frequency of bin `m` out of `n`; the Nyquist bin of an even `n`
/// maps to `-n/2`.
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m <= (n - 1) / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Bin holding signed frequency `s`.
pub fn bin_of(s: i64, n: usize) -> usize {
    s.rem_euclid(n as i64) as usize
}

/// In-place transform of `data` with `shape` (last axis fastest).
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], dirs: &[Direction]) {
    assert_eq!(shape.len(), dirs.len());
    assert_eq!(data.len(), shape.iter().product::<usize>());
    let mut planner = FftPlanner::new();
    let mut stride = data.len();
    for (axis, &n) in shape.iter().enumerate() {
        stride /= n;
        if n == 1 {
            continue;
        }
        let fft = match dirs[axis] {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let block = n * stride;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for start in (0..data.len()).step_by(block) {
            for j in 0..stride {
                let base = start + j;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}
