/// Result of a scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrentResult {
    pub argmin: f64,
    pub value: f64,
    pub evaluations: usize,
}

const MAX_EVALUATIONS: usize = 100;
const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 − √5)/2

/// Brent's minimizer on `[lo, hi]`: golden-section steps safeguarding
/// parabolic interpolation, at most 100 evaluations of `f`.
///
/// If `f` returns a non-finite value the parabolic phase is abandoned and the
/// remaining budget is spent on golden-section search over the current
/// bracket, treating non-finite values as `+∞`.
pub fn brent_minimize<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> BrentResult
where
    F: FnMut(f64) -> f64,
{
    assert!(lo < hi, "brent_minimize needs lo < hi");
    let sqrt_eps = f64::EPSILON.sqrt();
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let mut evaluations = 1;
    if !fx.is_finite() {
        return golden_fallback(f, a, b, tol, evaluations, (x, f64::INFINITY));
    }
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);

    while evaluations < MAX_EVALUATIONS {
        let xm = 0.5 * (a + b);
        let tol1 = sqrt_eps * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let mut r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = d;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        evaluations += 1;
        if !fu.is_finite() {
            return golden_fallback(f, a, b, tol, evaluations, (x, fx));
        }
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    BrentResult {
        argmin: x,
        value: fx,
        evaluations,
    }
}

fn golden_fallback<F>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    mut evaluations: usize,
    best: (f64, f64),
) -> BrentResult
where
    F: FnMut(f64) -> f64,
{
    let finite_or_inf = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
    let mut best = best;
    let mut c = b - (1.0 - GOLDEN) * (b - a);
    let mut d = a + (1.0 - GOLDEN) * (b - a);
    let mut fc = finite_or_inf(f(c));
    let mut fd = finite_or_inf(f(d));
    evaluations += 2;
    for (p, fp) in [(c, fc), (d, fd)] {
        if fp < best.1 {
            best = (p, fp);
        }
    }
    while evaluations < MAX_EVALUATIONS && (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (1.0 - GOLDEN) * (b - a);
            fc = finite_or_inf(f(c));
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (1.0 - GOLDEN) * (b - a);
            fd = finite_or_inf(f(d));
            if fd < best.1 {
                best = (d, fd);
            }
        }
        evaluations += 1;
    }
    BrentResult {
        argmin: best.0,
        value: best.1,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let r = brent_minimize(|s| (s - 0.3).powi(2), 0.0, 1.0, 1e-8);
        assert!((r.argmin - 0.3).abs() < 1e-7, "{r:?}");
        assert!(r.evaluations <= 100);
    }

    #[test]
    fn v_shape() {
        let r = brent_minimize(|s| (s - 0.7).abs(), 0.0, 1.0, 1e-6);
        assert!((r.argmin - 0.7).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn quartic() {
        let r = brent_minimize(|s| s.powi(4) - s, 0.0, 2.0, 1e-8);
        let expected = 0.25f64.powf(1.0 / 3.0);
        assert!((r.argmin - expected).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn non_finite_values_fall_back_to_golden_section() {
        let r = brent_minimize(
            |s| if s > 0.5 { f64::NAN } else { (s - 0.2).powi(2) },
            0.0,
            1.0,
            1e-6,
        );
        assert!(r.value.is_finite());
        assert!((r.argmin - 0.2).abs() < 1e-4, "{r:?}");
        assert!(r.evaluations <= 100);
    }
}
