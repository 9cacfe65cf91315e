//! Bessel functions of the first kind for the orders needed by the ball
//! kernel: J_{d/2} with d in {1, 2, 3}.
//!
//! Half-integer orders reduce to elementary functions. Integer order 1 is
//! evaluated by a Taylor series near the origin and the Hankel asymptotic
//! expansion beyond a crossover, so no external special-function crate is
//! required.

const TAYLOR_CROSSOVER: f64 = 12.0;
const ASYMPTOTIC_CROSSOVER: f64 = 500.0;

/// J_{1/2}(x) = sqrt(2/(pi x)) sin x.
pub fn j_half(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin()
}

/// J_{3/2}(x) = sqrt(2/(pi x)) (sin x / x - cos x).
pub fn j_three_halves(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.abs() < 1e-4 {
        // series: J_{3/2}(x) ~ sqrt(2/(pi x)) * (x^2/3 - x^4/30)
        return (2.0 / (std::f64::consts::PI * x)).sqrt() * (x * x / 3.0 - x.powi(4) / 30.0);
    }
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (x.sin() / x - x.cos())
}

/// J_1(x) via Taylor series (small |x|), Miller's downward recurrence
/// (midrange), or Hankel asymptotics (large |x|).
pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= TAYLOR_CROSSOVER {
        j1_taylor(ax)
    } else if ax <= ASYMPTOTIC_CROSSOVER {
        j1_miller(ax)
    } else {
        j_asymptotic(1.0, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Miller's algorithm: downward recurrence J_{n-1} = (2n/x) J_n - J_{n+1}
/// from a start order well above x, normalized by J_0 + 2 sum J_{2k} = 1.
/// Avoids the cancellation of the Taylor series and the truncation error
/// of the asymptotic expansion in the midrange.
fn j1_miller(x: f64) -> f64 {
    let start = (x + 14.0 * x.sqrt() + 24.0) as usize;
    let mut above = 0.0_f64; // J_{n+1}
    let mut here = 1e-300_f64; // J_n (arbitrary seed, fixed by normalization)
    let mut norm = 0.0_f64;
    let mut j1_un = 0.0_f64;
    for n in (1..=start).rev() {
        let below = 2.0 * n as f64 / x * here - above;
        above = here;
        here = below;
        if n == 1 {
            // `above` now holds the unnormalized J_1, `here` holds J_0
            j1_un = above;
            norm += here;
        } else if (n - 1) % 2 == 0 {
            norm += 2.0 * here;
        }
        if here.abs() > 1e250 {
            above /= 1e250;
            here /= 1e250;
            norm /= 1e250;
            j1_un /= 1e250;
        }
    }
    j1_un / norm
}

fn j1_taylor(x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half; // m = 0: (x/2) / (0! 1!)
    let mut sum = term;
    for m in 1..60 {
        term *= -q / (m as f64 * (m as f64 + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion for J_nu(x), x large.
fn j_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let chi = x - (0.5 * nu + 0.25) * std::f64::consts::PI;
    // coefficients (mu, m) = prod_{j=1..m} (mu - (2j-1)^2) / (m! 8^m)
    let mut c = [0.0f64; 7];
    c[0] = 1.0;
    for m in 1..7 {
        let j = (2 * m - 1) as f64;
        c[m] = c[m - 1] * (mu - j * j) / (m as f64 * 8.0);
    }
    let inv = 1.0 / x;
    let p = c[0] - c[2] * inv * inv + c[4] * inv.powi(4) - c[6] * inv.powi(6);
    let q = c[1] * inv - c[3] * inv.powi(3) + c[5] * inv.powi(5);
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// J_{d/2}(x) dispatch for d in {1, 2, 3}.
pub fn j_half_order(d: usize, x: f64) -> f64 {
    match d {
        1 => j_half(x),
        2 => j1(x),
        3 => j_three_halves(x),
        _ => panic!("Bessel order d/2 supported only for d in 1..=3, got d={d}"),
    }
}
