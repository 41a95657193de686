//! Named symbols with their expression text and closed-form counterparts.

use fock_core::symbols::{gaussian, phase};
use fock_core::{SymbolFunction, C64};

pub struct CatalogEntry {
    pub name: &'static str,
    pub expression: &'static str,
    pub closed_form: fn() -> SymbolFunction,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "one",
        expression: "1",
        closed_form: || SymbolFunction::constant(C64::new(1.0, 0.0)),
    },
    CatalogEntry {
        name: "gaussian",
        expression: "exp(-abs(z)^2)",
        closed_form: || gaussian(1.0),
    },
    CatalogEntry {
        name: "gaussian-wide",
        expression: "exp(-abs(z)^2/4)",
        closed_form: || gaussian(0.25),
    },
    CatalogEntry {
        name: "phase",
        expression: "phase(z)",
        closed_form: phase,
    },
    CatalogEntry {
        name: "mixed",
        expression: "0.5 + 0.25*phase(z) + exp(-abs(z)^2/2)",
        closed_form: || {
            SymbolFunction::constant(C64::new(0.5, 0.0))
                .plus(&phase().scaled(C64::new(0.25, 0.0)))
                .plus(&gaussian(0.5))
        },
    },
];

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}
