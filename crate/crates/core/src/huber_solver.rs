//! Closed-form, per-frequency-bin filter solve.
//!
//! The data term of the filter objective separates over bins and, within a
//! bin, over the real part `e` and imaginary part `f` of the filter. Each
//! coordinate minimizes
//!
//! ```text
//! γ₁ u² / 2 − γ u + λ φ(u)
//! ```
//!
//! where `γ = γ₂` for `e` and `γ = γ₃` for `f`, and `φ` is quadratic inside
//! `[-c, c]` and linear outside. The objective is convex, so the unique root
//! of `γ₁ u − γ + λ φ′(u) = 0` is the minimizer and can be read off branch by
//! branch.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::{check_dims, ComplexSpectrum};

/// Regularizer weight `λ` and knee `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberConfig {
    pub lambda: f64,
    pub c: f64,
}

impl HuberConfig {
    pub fn new(lambda: f64, c: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be > 0, got {c}")));
        }
        Ok(Self { lambda, c })
    }
}

impl Default for HuberConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            c: 50.0,
        }
    }
}

/// Penalty applied to each real coordinate of the filter spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// Quadratic near zero, absolute value beyond the knee.
    Huber(HuberConfig),
    /// Plain `λ u² / 2` penalty: the classic ridge-regression filter.
    Ridge { lambda: f64 },
}

/// Per-bin sufficient statistics of the data term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BinCoefficients {
    /// `Σ_j a² + b²`
    pub gamma1: f64,
    /// `Σ_j a c + b d`
    pub gamma2: f64,
    /// `Σ_j a d − b c`
    pub gamma3: f64,
}

impl BinCoefficients {
    /// Statistics of one training pair: kernel bin `a + bi`, label bin `c + di`.
    #[inline]
    pub fn from_pair(kernel: Complex64, label: Complex64) -> Self {
        let (a, b) = (kernel.re, kernel.im);
        let (c, d) = (label.re, label.im);
        Self {
            gamma1: a * a + b * b,
            gamma2: a * c + b * d,
            gamma3: a * d - b * c,
        }
    }

    #[inline]
    fn add(&mut self, other: Self) {
        self.gamma1 += other.gamma1;
        self.gamma2 += other.gamma2;
        self.gamma3 += other.gamma3;
    }
}

/// Grid of [`BinCoefficients`] with the layout of the spectra it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    width: usize,
    height: usize,
    bins: Vec<BinCoefficients>,
}

impl CoefficientGrid {
    pub fn new(width: usize, height: usize, bins: Vec<BinCoefficients>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid);
        }
        if bins.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (bins.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            bins,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bins(&self) -> &[BinCoefficients] {
        &self.bins
    }
}

/// Filter spectrum `ĥ*`, split into real parts `e` and imaginary parts `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpectrum {
    width: usize,
    height: usize,
    e: Vec<f64>,
    f: Vec<f64>,
}

impl FilterSpectrum {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn to_spectrum(&self) -> ComplexSpectrum {
        let data = self
            .e
            .iter()
            .zip(&self.f)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        ComplexSpectrum::from_raw(self.width, self.height, data)
    }
}

/// Huber-type penalty: `|u|` beyond the knee, `(u² + c²) / 2c` inside it.
#[inline]
pub fn phi(u: f64, c: f64) -> f64 {
    if u.abs() > c {
        u.abs()
    } else {
        (u * u + c * c) / (2.0 * c)
    }
}

/// Derivative of [`phi`]: `±1` beyond the knee, `u / c` inside it.
#[inline]
pub fn phi_prime(u: f64, c: f64) -> f64 {
    if u > c {
        1.0
    } else if u < -c {
        -1.0
    } else {
        u / c
    }
}

/// Per-coordinate objective `γ₁ u² / 2 − γ u + λ φ(u)`.
#[inline]
pub fn bin_objective(u: f64, gamma1: f64, gamma: f64, cfg: HuberConfig) -> f64 {
    0.5 * gamma1 * u * u - gamma * u + cfg.lambda * phi(u, cfg.c)
}

/// Minimizer of [`bin_objective`] for one real coordinate.
///
/// With `γ₁ = 0` the objective is bounded below only when `|γ| ≤ λ`; past that
/// it decreases without limit and the bin is reported as degenerate.
pub fn solve_coordinate(gamma1: f64, gamma: f64, cfg: HuberConfig) -> Result<f64> {
    let HuberConfig { lambda, c } = cfg;
    if gamma1 > 0.0 {
        let upper = (gamma - lambda) / gamma1;
        if upper > c {
            return Ok(upper);
        }
        let lower = (gamma + lambda) / gamma1;
        if lower < -c {
            return Ok(lower);
        }
    } else if gamma.abs() > lambda || lambda == 0.0 {
        return Err(Error::DegenerateBin {
            index: 0,
            gamma1,
            gamma,
            lambda,
        });
    }
    Ok(c * gamma / (c * gamma1 + lambda))
}

/// Solves both coordinates of one bin, returning `(e, f)`.
pub fn solve_bin(coef: BinCoefficients, cfg: HuberConfig) -> Result<(f64, f64)> {
    let e = solve_coordinate(coef.gamma1, coef.gamma2, cfg)?;
    let f = solve_coordinate(coef.gamma1, coef.gamma3, cfg)?;
    Ok((e, f))
}

fn solve_bin_with(coef: BinCoefficients, reg: Regularizer) -> Result<(f64, f64)> {
    match reg {
        Regularizer::Huber(cfg) => solve_bin(coef, cfg),
        Regularizer::Ridge { lambda } => {
            let denom = coef.gamma1 + lambda;
            if denom <= 0.0 {
                return Err(Error::DegenerateBin {
                    index: 0,
                    gamma1: coef.gamma1,
                    gamma: coef.gamma2,
                    lambda,
                });
            }
            Ok((coef.gamma2 / denom, coef.gamma3 / denom))
        }
    }
}

/// Sums the per-sample statistics over `J` (kernel spectrum, label spectrum) pairs.
pub fn accumulate_bin_coefficients(
    kernel_spectra: &[ComplexSpectrum],
    label_spectra: &[ComplexSpectrum],
) -> Result<CoefficientGrid> {
    let first = kernel_spectra.first().ok_or(Error::EmptyTrainingSet)?;
    if kernel_spectra.len() != label_spectra.len() {
        return Err(Error::SampleCountMismatch(
            kernel_spectra.len(),
            label_spectra.len(),
        ));
    }
    let (width, height) = first.dims();
    let mut bins = vec![BinCoefficients::default(); width * height];
    for (k, g) in kernel_spectra.iter().zip(label_spectra) {
        check_dims((width, height), k.dims())?;
        check_dims((width, height), g.dims())?;
        for ((acc, &kb), &gb) in bins.iter_mut().zip(k.as_slice()).zip(g.as_slice()) {
            acc.add(BinCoefficients::from_pair(kb, gb));
        }
    }
    Ok(CoefficientGrid {
        width,
        height,
        bins,
    })
}

/// Independent closed-form solve of every bin.
pub fn solve_filter(grid: &CoefficientGrid, cfg: HuberConfig) -> Result<FilterSpectrum> {
    solve_filter_with(grid, Regularizer::Huber(cfg))
}

/// [`solve_filter`] for either regularizer.
pub fn solve_filter_with(grid: &CoefficientGrid, reg: Regularizer) -> Result<FilterSpectrum> {
    let m = grid.bins.len();
    let mut e = Vec::with_capacity(m);
    let mut f = Vec::with_capacity(m);
    for (index, &coef) in grid.bins.iter().enumerate() {
        let (re, im) = solve_bin_with(coef, reg).map_err(|err| match err {
            Error::DegenerateBin {
                gamma1,
                gamma,
                lambda,
                ..
            } => Error::DegenerateBin {
                index,
                gamma1,
                gamma,
                lambda,
            },
            other => other,
        })?;
        e.push(re);
        f.push(im);
    }
    Ok(FilterSpectrum {
        width: grid.width,
        height: grid.height,
        e,
        f,
    })
}
