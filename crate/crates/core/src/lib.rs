//! Compound-space analytics for virtual screening.

pub mod align;
pub mod chem;
pub mod dataset;
pub mod dr;
pub mod view;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/chemistry.md")]
    mod chemistry {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/projections.md")]
    mod projections {}
    #[doc = include_str!("../../../book/src/trust.md")]
    mod trust {}
    #[doc = include_str!("../../../book/src/hexagons.md")]
    mod hexagons {}
    #[doc = include_str!("../../../book/src/difference.md")]
    mod difference {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
}
