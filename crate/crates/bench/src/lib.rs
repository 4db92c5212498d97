//! Shared fixtures for the benchmarks.

use cpamm::harness::{gen_trace, GenConfig};
use cpamm::{AccountId, AtomicLedger, MintedId, Pos, PriceOracle, State, TokenId, Trace};

pub const LP: AccountId = AccountId(100);
pub const TRADER: AccountId = AccountId(0);

/// Pool (0: 18, 1: 6) created by [`LP`]; [`TRADER`] holds 6 of each token.
pub fn example_state() -> State {
    let t0 = TokenId(0);
    let t1 = TokenId(1);
    let atoms = AtomicLedger::new()
        .add(LP, t0, &Pos::from_integer(18))
        .add(LP, t1, &Pos::from_integer(6))
        .add(TRADER, t0, &Pos::from_integer(6))
        .add(TRADER, t1, &Pos::from_integer(6));
    let s = State::initial(atoms);
    let create = cpamm::Tx::Create(cpamm::txn::Create {
        account: LP,
        t0,
        t1,
        x0: Pos::from_integer(18),
        x1: Pos::from_integer(6),
    });
    cpamm::apply_tx(&s, &create, &cpamm::ConstProd).expect("example create is valid")
}

pub fn example_pool() -> MintedId {
    MintedId::new(TokenId(0), TokenId(1)).expect("distinct tokens")
}

/// Prices 3 and 4 for tokens 0 and 1.
pub fn example_oracle() -> PriceOracle {
    PriceOracle::new([
        (TokenId(0), Pos::from_integer(3)),
        (TokenId(1), Pos::from_integer(4)),
    ])
}

/// A generated trace of `steps` transactions.
pub fn generated_trace(seed: u64, steps: usize) -> Trace {
    gen_trace(&GenConfig {
        seed,
        n_steps: steps,
        ..GenConfig::default()
    })
    .expect("default config generates")
}
