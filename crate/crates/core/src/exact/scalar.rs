use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Very large numerator/denominator: scale down before dividing.
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(900);
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// `p/q` text form; integers print without a denominator.
pub fn rat_to_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rational::new(n, d))
    } else if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part: BigInt = frac.parse().ok()?;
        let frac_signed = if neg { -frac_part } else { frac_part };
        Some(Rational::new(int_part * &scale + frac_signed, scale))
    } else {
        Some(Rational::from_integer(s.parse().ok()?))
    }
}

/// Exact complex number with rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussianRational {
            re,
            im: Rational::zero(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(rat_int(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::real(rat(n, d))
    }

    pub fn i() -> Self {
        GaussianRational {
            re: Rational::zero(),
            im: Rational::one(),
        }
    }

    /// `(-i)^k`, the factor linking ∂-form and p-form tensors.
    pub fn minus_i_pow(k: usize) -> Self {
        match k % 4 {
            0 => Self::one(),
            1 => -Self::i(),
            2 => -Self::one(),
            _ => Self::i(),
        }
    }

    pub fn conj(&self) -> Self {
        GaussianRational {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        Some(GaussianRational {
            re: &self.re / &n,
            im: -(&self.im / &n),
        })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    pub fn scale(&self, r: &Rational) -> Self {
        GaussianRational {
            re: &self.re * r,
            im: &self.im * r,
        }
    }
}

impl Zero for GaussianRational {
    fn zero() -> Self {
        GaussianRational {
            re: Rational::zero(),
            im: Rational::zero(),
        }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussianRational {
    fn one() -> Self {
        Self::real(Rational::one())
    }
}

impl From<Rational> for GaussianRational {
    fn from(r: Rational) -> Self {
        Self::real(r)
    }
}

impl Add for GaussianRational {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        GaussianRational {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, o: &GaussianRational) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl SubAssign<&GaussianRational> for GaussianRational {
    fn sub_assign(&mut self, o: &GaussianRational) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl Sub for GaussianRational {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        GaussianRational {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl Mul for GaussianRational {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        &self * &o
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: &GaussianRational) -> GaussianRational {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussianRational::real(&self.re * &o.re);
        }
        GaussianRational {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl MulAssign<&GaussianRational> for GaussianRational {
    fn mul_assign(&mut self, o: &GaussianRational) {
        *self = &*self * o;
    }
}

impl Div for GaussianRational {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.inv().expect("division by zero GaussianRational");
        &self * &inv
    }
}

impl Neg for GaussianRational {
    type Output = Self;
    fn neg(self) -> Self {
        GaussianRational {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", rat_to_string(&self.re)),
            (true, false) => write!(f, "{}i", rat_to_string(&self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                write!(
                    f,
                    "({} {} {}i)",
                    rat_to_string(&self.re),
                    sign,
                    rat_to_string(&self.im.abs())
                )
            }
        }
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Serialized as `["re", "im"]`, each component an exact `p/q` string.
impl Serialize for GaussianRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [rat_to_string(&self.re), rat_to_string(&self.im)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [re, im] = <[String; 2]>::deserialize(d)?;
        let re = parse_rational(&re).ok_or_else(|| serde::de::Error::custom("bad rational"))?;
        let im = parse_rational(&im).ok_or_else(|| serde::de::Error::custom("bad rational"))?;
        Ok(GaussianRational { re, im })
    }
}

/// Serde adapter for a bare `Rational` as a `"p/q"` string.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        rat_to_string(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_reduced() {
        let r = rat(6, -4);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
        assert!(rat(0, 5).denom().is_one());
    }

    #[test]
    fn gaussian_field_ops() {
        let a = GaussianRational::new(rat(1, 2), rat(3, 1));
        let b = GaussianRational::new(rat(-2, 1), rat(1, 3));
        let q = a.clone() / b.clone();
        assert_eq!(q * b, a);
        assert_eq!(a.conj().conj(), a);
        assert_eq!(GaussianRational::i() * GaussianRational::i(), -GaussianRational::one());
        assert_eq!(GaussianRational::minus_i_pow(3), GaussianRational::i());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("-3/6"), Some(rat(-1, 2)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(rat(-3, 2)));
        assert_eq!(parse_rational("7"), Some(rat_int(7)));
        assert_eq!(parse_rational("1/0"), None);
    }
}
