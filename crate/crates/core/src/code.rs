//! Binary feedforward convolutional code definitions.
//!
//! Generators are written in octal with the coefficient of the current input
//! in the most significant position, so `7, 5` is `1 + D + D^2, 1 + D^2`.
//! For `k > 1` the `k × n` generators are listed row-major (all outputs for
//! input 0 first) and every input owns `nu / k` memory cells.

use crate::error::{Error, Result};

/// `(k, n, nu, generators, d_free, A_dfree, traceback depth)`.
type KnownCode = (usize, usize, usize, &'static [u64], u32, u32, u32);

/// Codes with published distance metadata.
const KNOWN_CODES: &[KnownCode] =
    &[(1, 3, 6, &[0o117, 0o127, 0o155], 15, 3, 21)];

/// A rate-`k/n` binary feedforward convolutional code with `nu` memory cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    k: usize,
    n: usize,
    nu: usize,
    generators: Vec<u64>,
    /// Per-output parity masks over the `(nu + k)`-bit window `input << nu | state`.
    masks: Vec<u64>,
    pub d_free: Option<u32>,
    pub a_dfree: Option<u32>,
    pub traceback_depth: Option<u32>,
}

/// Parses a single octal generator such as `"117"` (an optional `0o` prefix is accepted).
pub fn parse_octal(text: &str) -> Result<u64> {
    let t = text.trim();
    let t = t.strip_prefix("0o").unwrap_or(t);
    if t.is_empty() {
        return Err(Error::BadOctal(text.to_string()));
    }
    u64::from_str_radix(t, 8).map_err(|_| Error::BadOctal(text.to_string()))
}

/// Parses a comma separated list of octal generators, e.g. `"117,127,155"`.
pub fn parse_octal_list(text: &str) -> Result<Vec<u64>> {
    text.split(',').map(parse_octal).collect()
}

/// Builds and validates a code from octal generator strings.
pub fn build_code<S: AsRef<str>>(k: usize, n: usize, nu: usize, generators_octal: &[S]) -> Result<CodeSpec> {
    let gens = generators_octal
        .iter()
        .map(|g| parse_octal(g.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    CodeSpec::new(k, n, nu, gens)
}

impl CodeSpec {
    pub fn new(k: usize, n: usize, nu: usize, generators: Vec<u64>) -> Result<Self> {
        if k == 0 || nu == 0 {
            return Err(Error::InvalidCode("k and nu must be at least 1".into()));
        }
        if n <= k {
            return Err(Error::InvalidCode(format!("need n > k, got k={k}, n={n}")));
        }
        if n > 16 {
            return Err(Error::InvalidCode(format!("n={n} exceeds the supported maximum of 16")));
        }
        if !nu.is_multiple_of(k) {
            return Err(Error::InvalidCode(format!(
                "nu={nu} must be a multiple of k={k} (equal memory per input)"
            )));
        }
        if nu + k > 24 {
            return Err(Error::InvalidCode(format!("nu + k = {} is too large", nu + k)));
        }
        if generators.len() != k * n {
            return Err(Error::InvalidCode(format!(
                "expected {} generators (k x n), got {}",
                k * n,
                generators.len()
            )));
        }
        let per_input = nu / k;
        for &g in &generators {
            if g != 0 {
                let degree = 63 - g.leading_zeros();
                if degree as usize > per_input {
                    return Err(Error::DegreeOverflow { generator: g, degree, max: per_input as u32 });
                }
            }
        }

        let mut masks = vec![0u64; n];
        for i in 0..k {
            for (j, mask) in masks.iter_mut().enumerate() {
                let g = generators[i * n + j];
                for d in 0..=per_input {
                    if (g >> (per_input - d)) & 1 == 1 {
                        *mask |= 1 << (nu + k - 1 - i - k * d);
                    }
                }
            }
        }

        let mut code = CodeSpec {
            k,
            n,
            nu,
            generators,
            masks,
            d_free: None,
            a_dfree: None,
            traceback_depth: None,
        };
        if let Some(&(.., d, a, ld)) = KNOWN_CODES
            .iter()
            .find(|(ck, cn, cnu, g, ..)| *ck == k && *cn == n && *cnu == nu && *g == code.generators.as_slice())
        {
            code.d_free = Some(d);
            code.a_dfree = Some(a);
            code.traceback_depth = Some(ld);
        }
        Ok(code)
    }

    /// The 64-state rate-1/3 code `(117, 127, 155)`.
    pub fn rate_third_nu6() -> Self {
        Self::new(1, 3, 6, vec![0o117, 0o127, 0o155]).expect("valid built-in code")
    }

    /// The 4-state rate-1/2 code `(7, 5)`.
    pub fn rate_half_nu2() -> Self {
        Self::new(1, 2, 2, vec![0o7, 0o5]).expect("valid built-in code")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn generators(&self) -> &[u64] {
        &self.generators
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn num_states(&self) -> usize {
        1 << self.nu
    }

    pub fn branches_per_segment(&self) -> usize {
        1 << (self.nu + self.k)
    }

    /// Number of segments needed to flush the register (`nu / k`).
    pub fn memory_segments(&self) -> usize {
        self.nu / self.k
    }

    /// Generators formatted as in `"117,127,155"`.
    pub fn generators_octal(&self) -> String {
        self.generators.iter().map(|g| format!("{g:o}")).collect::<Vec<_>>().join(",")
    }

    /// Successor of `state` under the `k`-bit input block `input`.
    #[inline]
    pub fn next_state(&self, state: usize, input: usize) -> usize {
        ((input << self.nu) | state) >> self.k
    }

    /// Output label (bit `j` is output `j`) for the branch leaving `state` on `input`.
    #[inline]
    pub fn output_label(&self, state: usize, input: usize) -> usize {
        let window = ((input << self.nu) | state) as u64;
        self.masks
            .iter()
            .enumerate()
            .fold(0, |acc, (j, m)| acc | ((((window & m).count_ones() & 1) as usize) << j))
    }
}
