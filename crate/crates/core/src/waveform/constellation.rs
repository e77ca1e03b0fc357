use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constellation {
    Qpsk,
    #[serde(rename = "16-qam")]
    Qam16,
    #[serde(rename = "64-qam")]
    Qam64,
}

impl Constellation {
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
            Constellation::Qam64 => 6,
        }
    }

    /// Levels per I/Q axis.
    fn side(self) -> u32 {
        1 << (self.bits_per_symbol() / 2)
    }

    /// Mean power of the unscaled odd-integer grid.
    fn raw_power(self) -> f64 {
        let k = (self.side() * self.side()) as f64;
        2.0 * (k - 1.0) / 3.0
    }

    /// Gray-coded mapping of the low `bits_per_symbol` bits of `bits`,
    /// scaled to mean power `sigma_d2`. High half drives I, low half drives Q.
    pub fn map(self, bits: u32, sigma_d2: f64) -> Complex64 {
        let half = self.bits_per_symbol() / 2;
        let mask = (1u32 << half) - 1;
        let level = |g: u32| {
            let i = gray_decode(g & mask);
            (2 * i as i64 - (self.side() as i64 - 1)) as f64
        };
        let scale = (sigma_d2 / self.raw_power()).sqrt();
        Complex64::new(level(bits >> half), level(bits)) * scale
    }

    pub fn random<R: Rng + ?Sized>(self, rng: &mut R, sigma_d2: f64) -> Complex64 {
        let bits = rng.gen::<u32>() & ((1 << self.bits_per_symbol()) - 1);
        self.map(bits, sigma_d2)
    }
}

fn gray_decode(mut g: u32) -> u32 {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}
