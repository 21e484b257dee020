//! The guide under `book/`, compiled so every snippet runs as a doctest.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/ch1_telegraph.md")]
pub mod ch1 {}
#[doc = include_str!("../../../book/src/ch2_qubit.md")]
pub mod ch2 {}
#[doc = include_str!("../../../book/src/ch3_syndrome.md")]
pub mod ch3 {}
#[doc = include_str!("../../../book/src/ch4_benchmarking.md")]
pub mod ch4 {}
#[doc = include_str!("../../../book/src/ch5_analytics.md")]
pub mod ch5 {}
#[doc = include_str!("../../../book/src/ch6_cli.md")]
pub mod ch6 {}
