//! Jacobi elliptic functions for doubly periodic test surfaces: complete
//! elliptic integral K(m) by the arithmetic-geometric mean, sn/cn/dn for real
//! argument by the descending Landen transformation, and complex argument by
//! the imaginary transformation plus addition formulas.
//!
//! Parameter convention: m = k^2, so sn(u; m) has real period 4K(m) and
//! imaginary period 2i K(1-m).

use num_complex::Complex64;

/// Complete elliptic integral of the first kind, parameter m = k^2 in [0, 1).
pub fn elliptic_k(m: f64) -> f64 {
    assert!((0.0..1.0).contains(&m), "K(m) needs 0 <= m < 1");
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    while (a - b).abs() > 1e-17 * a {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::PI / (2.0 * a)
}

/// sn, cn, dn of a real argument by descending Landen recursion.
pub fn sncndn_real(u: f64, m: f64) -> (f64, f64, f64) {
    assert!((0.0..1.0).contains(&m), "sncndn needs 0 <= m < 1");
    if m < 1e-14 {
        return (u.sin(), u.cos(), 1.0);
    }
    let kp = (1.0 - m).sqrt();
    let k1 = (1.0 - kp) / (1.0 + kp);
    let (s1, c1, d1) = sncndn_real(u / (1.0 + k1), k1 * k1);
    let den = 1.0 + k1 * s1 * s1;
    ((1.0 + k1) * s1 / den, c1 * d1 / den, (1.0 - k1 * s1 * s1) / den)
}

/// sn, cn, dn of a complex argument via the addition formulas with an
/// imaginary second argument at the complementary parameter.
pub fn sncndn(z: Complex64, m: f64) -> (Complex64, Complex64, Complex64) {
    let (s, c, d) = sncndn_real(z.re, m);
    if z.im == 0.0 {
        return (
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(d, 0.0),
        );
    }
    let (s1, c1, d1) = sncndn_real(z.im, 1.0 - m);
    let den = c1 * c1 + m * s * s * s1 * s1;
    let sn = Complex64::new(s * d1 / den, c * d * s1 * c1 / den);
    let cn = Complex64::new(c * c1 / den, -s * d * s1 * d1 / den);
    let dn = Complex64::new(d * c1 * d1 / den, -m * s * c * s1 / den);
    (sn, cn, dn)
}

/// sn alone; see [`sncndn`].
pub fn sn(z: Complex64, m: f64) -> Complex64 {
    sncndn(z, m).0
}
