//! Flux reconstruction from multipliers.

mod bilinear;
mod direct;
mod homotopy;
mod scaling;

use std::fmt;
use std::str::FromStr;

pub use bilinear::bilinear_s;
pub use direct::{flux_direct, FluxAnsatzSpec};
pub use homotopy::{
    base_point_fluxes, flux_homotopy1, flux_homotopy2, homotopy1_integrand, integrate_lambda,
    law_homotopy1,
};
pub use scaling::{
    flux_scaling, flux_symmetry_pair, scaling_weights, weight_of, ScalingSymmetry, WeightReport,
};

use crate::expr::{DiffExpr, Monomial};
use crate::solver::MultiplierSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Direct,
    Homotopy1,
    Homotopy2,
    Scaling,
    Pair,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Direct,
        Method::Homotopy1,
        Method::Homotopy2,
        Method::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Homotopy1 => "homotopy1",
            Method::Homotopy2 => "homotopy2",
            Method::Scaling => "scaling",
            Method::Pair => "pair",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Method::Direct),
            "homotopy1" => Ok(Method::Homotopy1),
            "homotopy2" => Ok(Method::Homotopy2),
            "scaling" => Ok(Method::Scaling),
            "pair" => Ok(Method::Pair),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// `sum Lambda R - D_i Phi^i` vanishes identically.
    CharacteristicIdentity,
    /// `D_i Phi^i` vanishes on solutions.
    OnSolutions,
    Unverified,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::CharacteristicIdentity => "characteristic-identity",
            Status::OnSolutions => "on-solutions",
            Status::Unverified => "unverified",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assumption {
    /// A cleared denominator, assumed nonvanishing.
    NonzeroDenominator(Monomial),
    /// Base point of the second homotopy formula.
    BasePoint(Vec<DiffExpr>),
    /// The law is critical for the scaling used; its fluxes are expected to
    /// be trivial.
    Critical,
    /// Arbitrary functions treated as independent of the jets.
    IndependentFunctions,
}

#[derive(Clone, Debug)]
pub struct ConservationLaw {
    pub multipliers: Option<MultiplierSet>,
    pub fluxes: Vec<DiffExpr>,
    pub method: Method,
    pub status: Status,
    pub assumptions: Vec<Assumption>,
}

impl ConservationLaw {
    pub fn is_critical(&self) -> bool {
        self.assumptions.contains(&Assumption::Critical)
    }
}
