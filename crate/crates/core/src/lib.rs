//! Exact-arithmetic model of constant-product AMMs: state, transactions,
//! oracle valuation, arbitrage, and a random trace harness.

pub mod arb;
pub mod econ;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod state;
pub mod txn;

pub use arb::{solve_arbitrage, ArbSolution, Direction, SwapQuote};
pub use econ::{gain, minted_price, networth, PriceOracle};
pub use error::{Error, Result};
pub use numerics::{sqrt_approx, NonNeg, Pos, Rational};
pub use state::{AccountId, AmmSet, AtomicLedger, MintedId, MintedLedger, Pool, State, TokenId};
pub use txn::{apply_tx, constprod, replay, ConstProd, SwapRate, Trace, Tx, TxKind};
