//! Exact arithmetic in a real quadratic field `Q(√r)`.
//!
//! Lattice bases such as the hexagonal one carry `√3`, yet the diffusion
//! matrices they produce are rational. Every value in one computation shares
//! a single radicand, so `a + b√r` is closed under the field operations.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;

pub type Rational = Ratio<i128>;

/// Field operations shared by the float and exact solver paths.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact zero test for exact types, a tolerance test for floats.
    fn is_negligible(&self, scale: f64) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.abs() <= 1e-13 * scale.max(1.0)
    }
}

/// `rational + irrational·√radicand` with `radicand` square-free.
///
/// A value with zero irrational part is normalised to radicand 1, so two
/// equal numbers always compare equal field by field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Surd {
    rational: Rational,
    irrational: Rational,
    radicand: u32,
}

impl Surd {
    pub fn rational(r: Rational) -> Self {
        Surd {
            rational: r,
            irrational: Rational::zero(),
            radicand: 1,
        }
    }

    pub fn from_ratio(num: i128, den: i128) -> Self {
        Self::rational(Rational::new(num, den))
    }

    /// `coefficient·√n`, with square factors of `n` pulled out.
    pub fn sqrt_of(n: u32, coefficient: Rational) -> Self {
        if n == 0 {
            return Self::rational(Rational::zero());
        }
        let mut outside: i128 = 1;
        let mut inside = n;
        let mut f = 2u32;
        while f * f <= inside {
            while inside % (f * f) == 0 {
                inside /= f * f;
                outside *= f as i128;
            }
            f += 1;
        }
        let c = coefficient * Rational::from_integer(outside);
        if inside == 1 {
            Self::rational(c)
        } else {
            Surd {
                rational: Rational::zero(),
                irrational: c,
                radicand: inside,
            }
            .normalised()
        }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn irrational_part(&self) -> &Rational {
        &self.irrational
    }

    /// Radicand of the irrational part; 1 for rationals.
    pub fn radicand(&self) -> u32 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.irrational.is_zero()
    }

    fn normalised(mut self) -> Self {
        if self.irrational.is_zero() {
            self.radicand = 1;
        }
        self
    }

    fn common_radicand(&self, other: &Surd) -> u32 {
        match (self.radicand, other.radicand) {
            (1, r) | (r, 1) => r,
            (a, b) if a == b => a,
            (a, b) => panic!("mixed radicands √{a} and √{b} in one exact computation"),
        }
    }

    /// Whether `self` and `other` can meet in one computation.
    pub fn compatible(&self, other: &Surd) -> bool {
        self.radicand == 1 || other.radicand == 1 || self.radicand == other.radicand
    }

    fn conjugate(&self) -> Surd {
        Surd {
            rational: self.rational,
            irrational: -self.irrational,
            radicand: self.radicand,
        }
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(self, rhs: Surd) -> Surd {
        let radicand = self.common_radicand(&rhs);
        Surd {
            rational: self.rational + rhs.rational,
            irrational: self.irrational + rhs.irrational,
            radicand,
        }
        .normalised()
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        self + (-rhs)
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            rational: -self.rational,
            irrational: -self.irrational,
            radicand: self.radicand,
        }
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let radicand = self.common_radicand(&rhs);
        let r = Rational::from_integer(radicand as i128);
        Surd {
            rational: self.rational * rhs.rational + self.irrational * rhs.irrational * r,
            irrational: self.rational * rhs.irrational + self.irrational * rhs.rational,
            radicand,
        }
        .normalised()
    }
}

impl Div for Surd {
    type Output = Surd;
    fn div(self, rhs: Surd) -> Surd {
        let r = Rational::from_integer(rhs.radicand as i128);
        let norm = rhs.rational * rhs.rational - rhs.irrational * rhs.irrational * r;
        assert!(!norm.is_zero(), "division by zero in exact arithmetic");
        let scaled = self * rhs.conjugate();
        Surd {
            rational: scaled.rational / norm,
            irrational: scaled.irrational / norm,
            radicand: scaled.radicand,
        }
        .normalised()
    }
}

impl Scalar for Surd {
    fn zero() -> Self {
        Surd::rational(Rational::zero())
    }
    fn one() -> Self {
        Surd::rational(Rational::one())
    }
    fn from_i64(v: i64) -> Self {
        Surd::rational(Rational::from_integer(v as i128))
    }
    fn to_f64(&self) -> f64 {
        let a = ratio_to_f64(&self.rational);
        let b = ratio_to_f64(&self.irrational);
        a + b * (self.radicand as f64).sqrt()
    }
    fn is_negligible(&self, _scale: f64) -> bool {
        self.rational.is_zero() && self.irrational.is_zero()
    }
}

fn ratio_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irrational.is_zero() {
            return write!(f, "{}", self.rational);
        }
        let irr = if self.irrational.abs() == Rational::one() {
            format!("sqrt({})", self.radicand)
        } else {
            format!("{}*sqrt({})", self.irrational.abs(), self.radicand)
        };
        let sign = if self.irrational.is_negative() { "-" } else { "+" };
        if self.rational.is_zero() {
            if self.irrational.is_negative() {
                write!(f, "-{irr}")
            } else {
                write!(f, "{irr}")
            }
        } else {
            write!(f, "{}{}{}", self.rational, sign, irr)
        }
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Converts a finite float through its shortest decimal representation, so
/// `0.5` becomes `1/2` and `0.1` becomes `1/10`.
pub fn decimal_to_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    parse_decimal(&format!("{x}"))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i128 = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(10);
    let mut r = Rational::from_integer(numer);
    if scale >= 0 {
        for _ in 0..scale {
            r *= ten;
        }
    } else {
        for _ in 0..(-scale) {
            r /= ten;
        }
    }
    Some(if negative { -r } else { r })
}

/// Parses an arithmetic expression over decimals, fractions and `sqrt(n)`,
/// e.g. `"sqrt(3)/2"`, `"-1/2"`, `"3*sqrt(3)/4 + 1"`.
pub fn parse_surd(text: &str) -> Result<Surd, ParseError> {
    let word = |c: char| c.is_ascii_alphanumeric() || c == '.';
    let tokens: Vec<&str> = text.split_whitespace().collect();
    for pair in tokens.windows(2) {
        let left = pair[0].chars().last().is_some_and(word);
        let right = pair[1].chars().next().is_some_and(word);
        if left && right {
            return Err(ParseError::Expression {
                text: text.to_string(),
                reason: "adjacent operands without an operator".into(),
            });
        }
    }
    let mut parser = ExprParser {
        chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
        pos: 0,
        source: text,
    };
    let value = parser.expr()?;
    if parser.pos != parser.chars.len() {
        return Err(parser.error("trailing characters"));
    }
    Ok(value)
}

struct ExprParser<'a> {
    chars: Vec<char>,
    pos: usize,
    source: &'a str,
}

impl ExprParser<'_> {
    fn error(&self, what: &str) -> ParseError {
        ParseError::Expression {
            text: self.source.to_string(),
            reason: format!("{what} at position {}", self.pos),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn checked(&self, a: &Surd, b: &Surd) -> Result<(), ParseError> {
        if a.compatible(b) {
            Ok(())
        } else {
            Err(self.error("mixed square-root radicands"))
        }
    }

    fn expr(&mut self) -> Result<Surd, ParseError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            if c != '+' && c != '-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            self.checked(&acc, &rhs)?;
            acc = if c == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Surd, ParseError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            if c != '*' && c != '/' {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            self.checked(&acc, &rhs)?;
            if c == '*' {
                acc = acc * rhs;
            } else {
                if rhs.is_negligible(1.0) {
                    return Err(self.error("division by zero"));
                }
                acc = acc / rhs;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Surd, ParseError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Surd, ParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some('s') => {
                let word: String = self.chars[self.pos..].iter().take(4).collect();
                if word != "sqrt" {
                    return Err(self.error("unknown identifier"));
                }
                self.pos += 4;
                if self.peek() != Some('(') {
                    return Err(self.error("expected '(' after sqrt"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                if !arg.is_rational()
                    || !arg.rational_part().is_integer()
                    || arg.rational_part().is_negative()
                {
                    return Err(self.error("sqrt takes a non-negative integer"));
                }
                let n = arg
                    .rational_part()
                    .to_integer()
                    .to_u32()
                    .ok_or_else(|| self.error("sqrt argument too large"))?;
                Ok(Surd::sqrt_of(n, Rational::one()))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        self.pos += 1;
                    } else if (c == 'e' || c == 'E')
                        && self.chars.get(self.pos + 1).is_some_and(|n| {
                            n.is_ascii_digit() || *n == '-' || *n == '+'
                        })
                    {
                        self.pos += 2;
                    } else {
                        break;
                    }
                }
                let s: String = self.chars[start..self.pos].iter().collect();
                parse_decimal(&s)
                    .map(Surd::rational)
                    .ok_or_else(|| self.error("malformed number"))
            }
            _ => Err(self.error("unexpected token")),
        }
    }
}

/// Error from [`solve_linear`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSystem {
    pub column: usize,
}

/// Result of a dense solve; `conditioning` is the ratio of the smallest to
/// largest pivot magnitude.
#[derive(Debug, Clone)]
pub struct LinearSolution<S> {
    pub columns: Vec<Vec<S>>,
    pub conditioning: f64,
}

/// Gaussian elimination with partial pivoting, `A X = B` for each column of
/// `rhs`. `matrix` is row-major and square.
pub fn solve_linear<S: Scalar>(
    mut matrix: Vec<Vec<S>>,
    mut rhs: Vec<Vec<S>>,
) -> Result<LinearSolution<S>, SingularSystem> {
    let n = matrix.len();
    let scale = matrix
        .iter()
        .flatten()
        .map(|v| v.to_f64().abs())
        .fold(0.0, f64::max);
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot: f64 = 0.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| {
                matrix[a][col]
                    .to_f64()
                    .abs()
                    .total_cmp(&matrix[b][col].to_f64().abs())
            })
            .expect("non-empty range");
        if matrix[pivot_row][col].is_negligible(scale) {
            return Err(SingularSystem { column: col });
        }
        matrix.swap(col, pivot_row);
        for r in rhs.iter_mut() {
            r.swap(col, pivot_row);
        }
        let pivot = matrix[col][col].clone();
        let mag = pivot.to_f64().abs();
        min_pivot = min_pivot.min(mag);
        max_pivot = max_pivot.max(mag);
        for row in (col + 1)..n {
            if matrix[row][col] == S::zero() {
                continue;
            }
            let factor = matrix[row][col].clone() / pivot.clone();
            for k in col..n {
                let delta = factor.clone() * matrix[col][k].clone();
                matrix[row][k] = matrix[row][k].clone() - delta;
            }
            for r in rhs.iter_mut() {
                let delta = factor.clone() * r[col].clone();
                r[row] = r[row].clone() - delta;
            }
        }
    }
    let columns = rhs
        .into_iter()
        .map(|mut b| {
            for row in (0..n).rev() {
                let mut acc = b[row].clone();
                for k in (row + 1)..n {
                    acc = acc - matrix[row][k].clone() * b[k].clone();
                }
                b[row] = acc / matrix[row][row].clone();
            }
            b
        })
        .collect();
    let conditioning = if n == 0 { 1.0 } else { min_pivot / max_pivot };
    Ok(LinearSolution {
        columns,
        conditioning,
    })
}

/// Inverse of a small square matrix (row-major).
pub fn invert<S: Scalar>(matrix: &[Vec<S>]) -> Result<Vec<Vec<S>>, SingularSystem> {
    let n = matrix.len();
    let identity: Vec<Vec<S>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|r| if r == c { S::one() } else { S::zero() })
                .collect()
        })
        .collect();
    let sol = solve_linear(matrix.to_vec(), identity)?;
    // columns of the solution are columns of the inverse
    Ok((0..n)
        .map(|r| (0..n).map(|c| sol.columns[c][r].clone()).collect())
        .collect())
}
