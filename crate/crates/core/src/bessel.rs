//! Integer-order Bessel functions of the first kind, computed as whole sequences.

/// Fills `out[m] = J_m(z)` for `m = 0..out.len()`, `z >= 0`.
pub fn bessel_j_sequence(z: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    if z == 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = 1.0;
        return;
    }
    let m_max = n - 1;
    if z >= m_max as f64 {
        out[0] = libm::j0(z);
        if n > 1 {
            out[1] = libm::j1(z);
        }
        for m in 1..m_max {
            out[m + 1] = 2.0 * m as f64 / z * out[m] - out[m - 1];
        }
        return;
    }
    // Miller backward recurrence, normalised by J_0 + 2 Σ J_{2k} = 1.
    let top = m_max.max(z.ceil() as usize);
    let mut start = top + 16 + (12.0 * (top as f64).sqrt()) as usize;
    start += start % 2;
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / z * j - jp1;
        jp1 = j;
        j = jm1;
        let order = k - 1;
        if order <= m_max {
            out[order] = j;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            let upto = (order..=m_max.min(start)).filter(|&o| o <= m_max);
            for o in upto {
                out[o] *= 1e-250;
            }
        }
    }
    norm += j;
    let inv = 1.0 / norm;
    out.iter_mut().for_each(|v| *v *= inv);
}

/// `J_m(z)` for any integer `m`, using `J_{-m} = (-1)^m J_m`.
pub fn bessel_j(m: i64, z: f64) -> f64 {
    let sign = if m < 0 && m % 2 != 0 { -1.0 } else { 1.0 };
    let zabs = z.abs();
    let v = match m.unsigned_abs() {
        0 => libm::j0(zabs),
        1 => libm::j1(zabs),
        ma => {
            let mut seq = vec![0.0; ma as usize + 1];
            bessel_j_sequence(zabs, &mut seq);
            seq[ma as usize]
        }
    };
    let parity = if z < 0.0 && m % 2 != 0 { -1.0 } else { 1.0 };
    sign * parity * v
}
