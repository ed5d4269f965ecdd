//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

/// Compensated sum.
#[derive(Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Trapezoid rule over `[lo, hi]` with step `h`; exponentially accurate for
/// analytic integrands that vanish at both ends.
fn trapezoid(lo: f64, hi: f64, h: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / n as f64;
    let mut acc = Kahan::default();
    acc.add(0.5 * f(lo));
    for i in 1..n {
        acc.add(f(lo + i as f64 * h));
    }
    acc.add(0.5 * f(hi));
    acc.total() * h
}

/// `Gamma(x) = ∫ exp(x u - e^u) du` over the real line.
pub fn gamma_quad(x: f64) -> f64 {
    assert!(x > 0.0);
    let lo = -720.0 / x;
    let hi = (800.0 + 10.0 * x).ln() + 1.0;
    trapezoid(lo, hi, 0.01, |u| (x * u - u.exp()).exp())
}

/// `K_nu(y) = ∫_0^∞ exp(-y cosh t) cosh(nu t) dt`.
pub fn bessel_k_quad(nu: f64, y: f64) -> f64 {
    assert!(y > 0.0);
    // stop once the integrand is far below its peak
    let log_f = |t: f64| -y * t.cosh() + nu * t;
    let peak = if nu > y { (nu / y).asinh() } else { 0.0 };
    let mut hi = peak + 1.0;
    while log_f(hi) > log_f(peak) - 60.0 {
        hi += 1.0;
    }
    let half_line = trapezoid(0.0, hi, 0.005, |t| {
        let e = -y * t.cosh();
        0.5 * ((e + nu * t).exp() + (e - nu * t).exp())
    });
    // trapezoid on [0, hi] with an even integrand: the t = 0 endpoint weight is already 1/2
    half_line
}

/// Brute-force `(Σ (D²+h²)^(-β/2), Σ (D²+h²)^(-β))` over `[-n, n]²` minus the origin.
pub fn lattice_sums(x: f64, y: f64, height: f64, spacing: f64, beta: f64, n: i64) -> (f64, f64) {
    let h2 = height * height;
    let mut s1 = Kahan::default();
    let mut s2 = Kahan::default();
    for i in -n..=n {
        let dx = x + i as f64 * spacing;
        for j in -n..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let dy = y + j as f64 * spacing;
            let t = dx * dx + dy * dy + h2;
            let p = t.powf(-beta / 2.0);
            s1.add(p);
            s2.add(p * p);
        }
    }
    (s1.total(), s2.total())
}

/// Published reference curves for K = 1..=15 at h/a = 3, 5, 7.
pub mod figures {
    pub const RATIOS: [f64; 3] = [3.0, 5.0, 7.0];

    pub const ERROR_PROBABILITY: [[f64; 15]; 3] = [
        [
            1.0,
            0.999999999379809,
            0.99746581,
            0.883754,
            0.611999,
            0.398017,
            0.276795,
            0.211063,
            0.174003,
            0.151925,
            0.138055,
            0.128905,
            0.122577,
            0.117975,
            0.114439,
        ],
        [
            1.0,
            0.9999999882392,
            0.99784126,
            0.9325631,
            0.757697,
            0.578318,
            0.448727,
            0.364716,
            0.31115,
            0.276445,
            0.253371,
            0.237602,
            0.226532,
            0.218554,
            0.212647,
        ],
        [
            1.0,
            0.999999834991,
            0.99715524,
            0.9447929,
            0.816244,
            0.673764,
            0.557711,
            0.473609,
            0.414946,
            0.37422,
            0.345683,
            0.325389,
            0.310717,
            0.299931,
            0.291869,
        ],
    ];

    /// Rate, units of 1e7 bit/s.
    pub const RATE: [[f64; 15]; 3] = [
        [
            0.317072, 0.347766, 0.387296, 0.422207, 0.432167, 0.414547, 0.381821, 0.345952,
            0.312827, 0.284208, 0.260127, 0.24008, 0.223484, 0.209807, 0.198605,
        ],
        [
            0.2528, 0.262695, 0.274805, 0.285691, 0.28783, 0.277926, 0.259469, 0.237851, 0.216707,
            0.19762, 0.180973, 0.166644, 0.154352, 0.143799, 0.134719,
        ],
        [
            0.206884, 0.204599, 0.202958, 0.201091, 0.196676, 0.188071, 0.175959, 0.162276,
            0.14871, 0.136192, 0.125054, 0.115305, 0.106818, 0.0994281, 0.0929758,
        ],
    ];

    /// Goodput, units of 1e7 bit/s.
    pub const GOODPUT: [[f64; 15]; 3] = [
        [
            0.0,
            2.15681e-10,
            0.000981481,
            0.0490799,
            0.167682,
            0.249549,
            0.276126,
            0.272886,
            0.258217,
            0.240566,
            0.223243,
            0.207391,
            0.193305,
            0.18096,
            0.170221,
        ],
        [
            0.0,
            3.08951e-09,
            0.000593232,
            0.0192661,
            0.0697421,
            0.117197,
            0.143038,
            0.151102,
            0.149272,
            0.142963,
            0.135052,
            0.126902,
            0.119111,
            0.111914,
            0.105373,
        ],
        [
            0.0,
            3.37606e-08,
            0.000577365,
            0.0111017,
            0.0361403,
            0.0613554,
            0.0778247,
            0.0854208,
            0.0870032,
            0.0852248,
            0.0818206,
            0.077774,
            0.0736008,
            0.0695547,
            0.0657501,
        ],
    ];

    pub const K_STAR: [u32; 3] = [7, 8, 9];
}
