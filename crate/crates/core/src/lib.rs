//! Swing-by-swing transient stability margins for polynomial
//! one-degree-of-freedom oscillators.
//!
//! Start with [`swing::assess_post_fault`] for a per-swing report, or
//! [`scenario::load_scenario`] and [`batch::run_batch`] for file-driven runs.

pub mod batch;
pub mod eac;
pub mod equilibria;
pub mod error;
pub mod integrator;
pub mod model;
pub mod online;
pub mod oracle;
pub mod output;
pub mod reproduce;
pub mod scenario;
pub mod swing;

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($($name:ident => $file:literal),* $(,)?) => {
            $(
                #[doc = include_str!(concat!("../../../book/src/", $file))]
                mod $name {}
            )*
        };
    }

    chapter! {
        introduction => "introduction.md",
        model => "model.md",
        equilibria => "equilibria.md",
        swings => "swings.md",
        oracle => "oracle.md",
        classical => "classical.md",
        scenarios => "scenarios.md",
        study => "study.md",
    }
}
