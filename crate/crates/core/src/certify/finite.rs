use crate::error::{Error, Result};

/// Block size, smoothing parameter and the two correction constants of the
/// finite-size min-entropy bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteSizeParams {
    pub n: u64,
    pub epsilon: f64,
    pub c: f64,
    pub d: f64,
}

impl FiniteSizeParams {
    pub fn new(n: u64, epsilon: f64, c: f64, d: f64) -> Result<Self> {
        let fs = Self { n, epsilon, c, d };
        fs.validate()?;
        Ok(fs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Argument("finite-size n must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Argument(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.c >= 0.0 && self.d >= 0.0 && self.c.is_finite() && self.d.is_finite()) {
            return Err(Error::Argument("c and d must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// `log₂(2/ε)`, positive for every admissible ε.
    pub fn log_term(&self) -> f64 {
        (2.0 / self.epsilon).log2()
    }
}

/// Smooth min-entropy, in bits, certified for a block of `n` rounds that
/// passed a test at entropy threshold `h`:
///
/// ```text
/// n · (h − c·√(L/n) − d·L/n),   L = log₂(2/ε),
/// ```
///
/// clamped at zero.
pub fn finite_size_min_entropy(h: f64, fs: &FiniteSizeParams) -> Result<f64> {
    fs.validate()?;
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Argument(format!("entropy rate {h} outside [0,1]")));
    }
    let n = fs.n as f64;
    let l = fs.log_term();
    let bits = n * (h - fs.c * (l / n).sqrt() - fs.d * l / n);
    Ok(bits.max(0.0))
}
