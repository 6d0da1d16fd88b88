//! The eigenvalue filter: `|0⟩|λ⟩ → |y(λ)⟩|λ⟩` with `y = (1 - τ/λ)₊`.
//!
//! The reciprocal `1/λ` is computed by fixed-point Newton iteration
//! `z ← 2z - z²λ`, then `y = 1 - τz` is rounded into the `n`-bit y-register.
//! The resulting table is compiled into an exact permutation gate. The
//! phase-basis adder that would carry out the same arithmetic in-circuit is
//! built separately by [`build_qft_adder`].

use std::f64::consts::PI;

use crate::builders::{build_inverse_qft, build_qft};
use crate::error::{QpcaError, Result};
use crate::pipeline::RegisterLayout;
use crate::sim::{Circuit, GateOp};

/// Widest fraction the fixed-point arithmetic supports (products stay in `u128`).
pub const MAX_FRAC_BITS: u32 = 40;

/// Unsigned fixed-point number `raw / 2^frac_bits` held in `bits` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    bits: u32,
    frac_bits: u32,
    raw: u64,
}

impl FixedPoint {
    pub fn new(bits: u32, frac_bits: u32, raw: u64) -> Result<Self> {
        if bits == 0 || bits > 63 || frac_bits > bits {
            return Err(QpcaError::InvalidParameter(format!(
                "fixed-point format {bits} bits / {frac_bits} fractional is invalid"
            )));
        }
        if raw >> bits != 0 {
            return Err(QpcaError::InvalidParameter(format!(
                "raw value {raw} does not fit in {bits} bits"
            )));
        }
        Ok(Self {
            bits,
            frac_bits,
            raw,
        })
    }

    /// An `bits`-bit unsigned integer.
    pub fn integer(value: u64, bits: u32) -> Result<Self> {
        Self::new(bits, 0, value)
    }

    /// Nearest representable value (ties away from zero).
    pub fn from_f64(value: f64, bits: u32, frac_bits: u32) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(QpcaError::InvalidParameter(format!(
                "{value} is not a non-negative finite number"
            )));
        }
        let raw = (value * (1u64 << frac_bits) as f64).round();
        if raw >= (1u64 << bits) as f64 {
            return Err(QpcaError::InvalidParameter(format!(
                "{value} overflows a {bits}-bit fixed-point register"
            )));
        }
        Self::new(bits, frac_bits, raw as u64)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn raw(&self) -> u64 {
        self.raw
    }

    pub fn value(&self) -> f64 {
        self.raw as f64 / (1u64 << self.frac_bits) as f64
    }

    /// One unit in the last place.
    pub fn ulp(&self) -> f64 {
        1.0 / (1u64 << self.frac_bits) as f64
    }
}

/// `⌈log₂ raw⌉` for `raw ≥ 1`.
fn ceil_log2(raw: u64) -> i64 {
    (64 - (raw - 1).leading_zeros()) as i64
}

/// Iterations that guarantee `frac_bits` correct bits from the initial guess
/// `2^{-⌈log₂ λ⌉}`: `⌈log₂ f⌉ + 2`.
pub fn default_newton_iters(frac_bits: u32) -> u32 {
    let f = frac_bits.max(1) as u64;
    ceil_log2(f) as u32 + 2
}

/// Guard bits carried by the Newton iterates beyond the requested width.
const GUARD_BITS: i64 = 3;

/// Fixed-point reciprocal of `lambda` by Newton iteration.
///
/// Starts from `z₀ = 2^{-⌈log₂ λ⌉}` and runs `iters` steps of
/// `z ← 2z - z²λ`, truncating each update to the working width (`frac_bits`
/// plus guard bits), then rounds to nearest at `frac_bits`. With
/// [`default_newton_iters`] the result is within `2^{-frac_bits}` of `1/λ`.
pub fn newton_reciprocal(lambda: FixedPoint, frac_bits: u32, iters: u32) -> Result<FixedPoint> {
    if lambda.raw == 0 {
        return Err(QpcaError::ZeroEigenvalue);
    }
    if iters == 0 {
        return Err(QpcaError::InvalidParameter("newton_iters must be >= 1".into()));
    }
    if frac_bits > MAX_FRAC_BITS || lambda.bits > MAX_FRAC_BITS {
        return Err(QpcaError::InvalidParameter(format!(
            "fixed-point widths above {MAX_FRAC_BITS} bits are not supported"
        )));
    }
    // λ = L / 2^g, ⌈log₂ λ⌉ = ⌈log₂ L⌉ - g
    let exponent = ceil_log2(lambda.raw) - lambda.frac_bits as i64;
    // the iteration stalls once an update is worth less than one unit, so the
    // working width keeps 1/λ at least 2^GUARD_BITS units wide
    let work = frac_bits as i64 + GUARD_BITS + exponent.max(0);
    let start_shift = work - exponent;
    let mut z: u128 = if start_shift >= 0 {
        1u128 << start_shift
    } else {
        0
    };
    let denom = 1u128 << (work as u32 + lambda.frac_bits);
    for _ in 0..iters {
        let square_term = (z * z * lambda.raw as u128).div_ceil(denom);
        z = (2 * z).saturating_sub(square_term);
    }
    let drop = (work - frac_bits as i64) as u32;
    let rounded = (z + (1u128 << (drop - 1))) >> drop;
    let int_bits = 1 + (-exponent).max(0) as u32;
    FixedPoint::new(frac_bits + int_bits, frac_bits, rounded as u64)
}

/// `max(1 - τ/λ, 0)`, with `λ ≤ 0` mapped to `0`.
pub fn shrink(lambda: f64, tau: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    (1.0 - tau / lambda).max(0.0)
}

/// Threshold and register widths for the filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    tau: f64,
    newton_iters: u32,
    n_bits: u32,
}

impl FilterParams {
    /// Uses [`default_newton_iters`] for the reciprocal width `2n`.
    pub fn new(tau: f64, n_bits: u32) -> Result<Self> {
        Self::with_newton_iters(tau, n_bits, default_newton_iters(2 * n_bits))
    }

    pub fn with_newton_iters(tau: f64, n_bits: u32, newton_iters: u32) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(QpcaError::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        if n_bits == 0 || 2 * n_bits > MAX_FRAC_BITS / 2 {
            return Err(QpcaError::InvalidParameter(format!(
                "n_bits must be in [1, {}], got {n_bits}",
                MAX_FRAC_BITS / 4
            )));
        }
        if newton_iters == 0 {
            return Err(QpcaError::InvalidParameter("newton_iters must be >= 1".into()));
        }
        Ok(Self {
            tau,
            newton_iters,
            n_bits,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn newton_iters(&self) -> u32 {
        self.newton_iters
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    /// Fraction width of the reciprocal register.
    pub fn reciprocal_frac_bits(&self) -> u32 {
        2 * self.n_bits
    }

    /// `τ` rounded to the reciprocal fraction width.
    pub fn tau_fixed(&self) -> FixedPoint {
        let f = self.reciprocal_frac_bits();
        // only consulted when some λ < 2^n exceeds τ
        let tau = self.tau.min((1u64 << self.n_bits) as f64);
        let int_bits = (tau.log2().floor().max(0.0) as u32) + 2;
        FixedPoint::from_f64(tau, f + int_bits, f)
            .expect("tau range checked at construction")
    }
}

/// `y(λ)` for every integer `λ` of the `n`-bit λ-register, as raw values in
/// units of `2^{-n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterTable {
    n_bits: u32,
    tau: f64,
    entries: Vec<u64>,
}

impl FilterTable {
    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn y_raw(&self, lambda_raw: usize) -> u64 {
        self.entries[lambda_raw]
    }

    pub fn y_value(&self, lambda_raw: usize) -> f64 {
        self.entries[lambda_raw] as f64 / (1u64 << self.n_bits) as f64
    }

    /// Register values whose component survives the filter.
    pub fn kept(&self) -> Vec<usize> {
        (0..self.entries.len()).filter(|&l| self.entries[l] != 0).collect()
    }

    /// Table from the real-valued `shrink`, rounded to `n` bits. Agrees with
    /// the fixed-point table on which entries are nonzero.
    pub fn from_shrink(params: &FilterParams) -> Self {
        let n = params.n_bits;
        let scale = (1u64 << n) as f64;
        let entries = (0..1u64 << n)
            .map(|lambda| {
                if lambda as f64 <= params.tau {
                    0
                } else {
                    let y = (shrink(lambda as f64, params.tau) * scale).round() as u64;
                    y.clamp(1, (1 << n) - 1)
                }
            })
            .collect();
        Self {
            n_bits: n,
            tau: params.tau,
            entries,
        }
    }

    /// All-zero table (`y = 0` everywhere).
    pub fn zeros(n_bits: u32) -> Self {
        Self {
            n_bits,
            tau: f64::INFINITY,
            entries: vec![0; 1 << n_bits],
        }
    }
}

/// Evaluates the fixed-point filter for every `λ ∈ [0, 2^n)`.
///
/// `λ ≤ τ` (including `λ = 0`) maps straight to `0`. Otherwise
/// `z = newton_reciprocal(λ)` with `2n` fractional bits, `y = 1 - τ_q·z`
/// with `τ_q` rounded to the same width, and `y` is rounded to nearest at
/// `n` bits and clamped to `[1, 2^n - 1]` so a kept component never reads
/// as filtered.
pub fn build_filter_table(params: &FilterParams) -> Result<FilterTable> {
    let n = params.n_bits;
    let f = params.reciprocal_frac_bits();
    let tau_q = params.tau_fixed().raw() as u128;
    let one = 1u128 << (2 * f);
    let drop = 2 * f - n;
    let mut entries = Vec::with_capacity(1 << n);
    for lambda in 0..1u64 << n {
        if lambda as f64 <= params.tau {
            entries.push(0);
            continue;
        }
        let z = newton_reciprocal(FixedPoint::integer(lambda, n)?, f, params.newton_iters)?;
        // y in units of 2^{-2f}
        let product = tau_q * z.raw() as u128;
        let y = one.saturating_sub(product);
        let rounded = ((y + (1u128 << (drop - 1))) >> drop) as u64;
        entries.push(rounded.clamp(1, (1 << n) - 1));
    }
    Ok(FilterTable {
        n_bits: n,
        tau: params.tau,
        entries,
    })
}

/// Permutation `|c⟩|λ⟩ → |c + y(λ) mod 2^n⟩|λ⟩` on the given registers.
pub fn filter_gate(table: &FilterTable, y_qubits: &[usize], lambda_qubits: &[usize]) -> Result<GateOp> {
    let n = table.n_bits as usize;
    if y_qubits.len() != n || lambda_qubits.len() != n {
        return Err(QpcaError::DimensionMismatch {
            expected: n,
            found: y_qubits.len().min(lambda_qubits.len()),
        });
    }
    let size = 1usize << n;
    let perm = (0..size * size)
        .map(|local| {
            let (c, lambda) = (local / size, local % size);
            let y = (c + table.entries[lambda] as usize) % size;
            y * size + lambda
        })
        .collect();
    let targets = y_qubits.iter().chain(lambda_qubits).copied().collect();
    GateOp::permutation(perm, targets)
}

/// The filter gate on the y- and λ-registers of `layout`.
pub fn build_filter_unitary(table: &FilterTable, layout: &RegisterLayout) -> Result<GateOp> {
    filter_gate(table, &layout.y_qubits(), &layout.lambda_qubits())
}

/// Draper adder on `2·width` qubits: `|a⟩|b⟩ → |a⟩|a + b mod 2^width⟩`.
///
/// Qubits `0..width` hold `a`, `width..2·width` hold `b`, most significant
/// bit first in each.
pub fn build_qft_adder(width: usize) -> Result<Circuit> {
    if !(1..=6).contains(&width) {
        return Err(QpcaError::InvalidParameter(format!(
            "adder width must be in [1, 6], got {width}"
        )));
    }
    let a: Vec<usize> = (0..width).collect();
    let b: Vec<usize> = (width..2 * width).collect();
    let mut c = Circuit::new(2 * width)?;
    c.append_mapped(&build_qft(width)?, &b)?;
    // multiply |k⟩ by e^{2πi·a·k/2^w}, one controlled phase per bit pair
    for i in 0..width {
        for j in 0..width - i {
            let phi = 2.0 * PI * (1u64 << (i + j)) as f64 / (1u64 << width) as f64;
            let op = GateOp::phase(b[width - 1 - j], phi).controlled(a[width - 1 - i])?;
            c.push_labeled(op, "qft_adder")?;
        }
    }
    c.append_mapped(&build_inverse_qft(width)?, &b)?;
    Ok(c)
}

/// Gate budget of the filter block: eight QFT-arithmetic blocks on `2n` qubits.
pub fn count_filter_gates(n: u64) -> u64 {
    8 * (n + n)
}
