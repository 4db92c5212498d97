//! Oracle-based valuation: wallet value, minted-token price, networth, gain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{NonNeg, Pos, Rational};
use crate::state::{AccountId, AtomicWallet, MintedId, MintedWallet, State, TokenId};
use crate::txn::{validate_swap, Swap, SwapRate};

/// Prices of atomic tokens. Querying a token without a price is an error.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriceOracle {
    pub prices: BTreeMap<TokenId, Pos>,
}

impl PriceOracle {
    pub fn new<I: IntoIterator<Item = (TokenId, Pos)>>(prices: I) -> Self {
        PriceOracle {
            prices: prices.into_iter().collect(),
        }
    }

    pub fn price(&self, t: TokenId) -> Result<&Pos> {
        self.prices.get(&t).ok_or(Error::MissingPrice(t))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("oracle serializes")
    }
}

/// `Σ w(τ)·o(τ)` over the wallet's support.
pub fn value_atomic(w: &AtomicWallet, o: &PriceOracle) -> Result<NonNeg> {
    w.iter()
        .map(|(t, amt)| Ok((amt * o.price(t)?).to_nonneg()))
        .sum()
}

/// `Σ w(m)·mp(m)` over the wallet's support. Each unordered pair is stored
/// once, so no halving is needed.
pub fn value_minted<F>(w: &MintedWallet, mp: F) -> Result<NonNeg>
where
    F: Fn(MintedId) -> Result<NonNeg>,
{
    w.iter().map(|(m, amt)| Ok(amt.to_nonneg() * mp(m)?)).sum()
}

/// Reserve value of the pool divided by its minted supply; zero when the
/// pool does not exist.
pub fn minted_price(s: &State, o: &PriceOracle, m: MintedId) -> Result<NonNeg> {
    let Some(pool) = s.amms.pool(m) else {
        return Ok(NonNeg::zero());
    };
    let reserve_value = &(&pool.lo * o.price(m.lo())?) + &(&pool.hi * o.price(m.hi())?);
    let supply = s.mintsupply(m).to_pos().ok_or(Error::DivisionByZero)?;
    Ok((&reserve_value / &supply).to_nonneg())
}

pub fn networth(s: &State, a: AccountId, o: &PriceOracle) -> Result<NonNeg> {
    let atomic = value_atomic(&s.atoms.wallet(a), o)?;
    let minted = value_minted(&s.mints.wallet(a), |m| minted_price(s, o, m))?;
    Ok(atomic + minted)
}

/// Signed networth difference of `a` from `before` to `after`.
pub fn gain(a: AccountId, o: &PriceOracle, before: &State, after: &State) -> Result<Rational> {
    let n1: Rational = networth(after, a, o)?.into();
    let n0: Rational = networth(before, a, o)?.into();
    Ok(n1 - n0)
}

/// `(y·o_out - x·o_in) · (1 - user_minted / supply)`.
pub fn swap_gain_closed_form(
    x: &Pos,
    y: &Pos,
    o_in: &Pos,
    o_out: &Pos,
    user_minted: &NonNeg,
    supply: &Pos,
) -> Rational {
    let traded = (y * o_out).into_rational() - (x * o_in).into_rational();
    let share = (user_minted / supply).into_rational();
    traded * (Rational::one() - share)
}

/// Closed-form gain of a swap evaluated against the pre-state, without
/// applying it.
pub fn swap_gain(s: &State, sw: &Swap, o: &PriceOracle, sx: &dyn SwapRate) -> Result<Rational> {
    let y = validate_swap(s, sw, sx)?;
    let m = MintedId::new(sw.input, sw.output)?;
    let supply = s.mintsupply(m).to_pos().ok_or(Error::DivisionByZero)?;
    Ok(swap_gain_closed_form(
        &sw.x,
        &y,
        o.price(sw.input)?,
        o.price(sw.output)?,
        &s.mints.get(sw.account, m),
        &supply,
    ))
}
