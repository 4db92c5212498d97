//! Blockchain state: wallets, ledgers, AMM reserves and token supplies.
//!
//! All maps are finitely supported and never store zeros: a wallet entry is a
//! [`Pos`], a ledger never keeps an empty wallet, and a pool stores two
//! positive reserves or does not exist at all. Minted token types and pools are
//! keyed by [`MintedId`], an unordered pair of distinct tokens stored with the
//! smaller id first, so lookups through `(a, b)` and `(b, a)` always agree.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{NonNeg, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u64);

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Minted token type of the pool over two distinct atomic tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MintedId {
    lo: TokenId,
    hi: TokenId,
}

impl MintedId {
    /// Canonicalizes the pair; `new(a, b) == new(b, a)`.
    pub fn new(a: TokenId, b: TokenId) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(MintedId { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Ok(MintedId { lo: b, hi: a }),
            std::cmp::Ordering::Equal => Err(Error::SameToken(a)),
        }
    }

    pub fn lo(&self) -> TokenId {
        self.lo
    }

    pub fn hi(&self) -> TokenId {
        self.hi
    }

    pub fn contains(&self, t: TokenId) -> bool {
        self.lo == t || self.hi == t
    }

    /// The token paired with `t`, if `t` belongs to this pair.
    pub fn other(&self, t: TokenId) -> Option<TokenId> {
        if t == self.lo {
            Some(self.hi)
        } else if t == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for MintedId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo.0, self.hi.0)
    }
}

impl FromStr for MintedId {
    type Err = Error;

    /// Parses `"t0-t1"`. Only the canonical spelling (`t0 < t1`) is accepted.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedState(format!("bad pair key {s:?}"));
        let (a, b) = s.split_once('-').ok_or_else(bad)?;
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a >= b {
            return Err(bad());
        }
        MintedId::new(TokenId(a), TokenId(b))
    }
}

impl Serialize for MintedId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MintedId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Finitely supported map from assets to positive amounts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wallet<K: Ord> {
    bal: BTreeMap<K, Pos>,
}

impl<K: Ord> Default for Wallet<K> {
    fn default() -> Self {
        Wallet {
            bal: BTreeMap::new(),
        }
    }
}

pub type AtomicWallet = Wallet<TokenId>;
pub type MintedWallet = Wallet<MintedId>;

impl<K: Ord + Copy> Wallet<K> {
    pub fn new() -> Self {
        Wallet {
            bal: BTreeMap::new(),
        }
    }

    /// Builds a wallet from `(asset, amount)` pairs, summing duplicates and
    /// dropping zeros.
    pub fn from_entries<I: IntoIterator<Item = (K, NonNeg)>>(entries: I) -> Self {
        let mut w = Wallet::new();
        for (k, v) in entries {
            if let Some(p) = v.to_pos() {
                w.add_in_place(k, &p);
            }
        }
        w
    }

    pub fn get(&self, k: K) -> NonNeg {
        self.bal
            .get(&k)
            .map(Pos::to_nonneg)
            .unwrap_or_else(NonNeg::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.bal.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bal.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (K, &Pos)> {
        self.bal.iter().map(|(k, v)| (*k, v))
    }

    pub fn add(&self, k: K, amount: &Pos) -> Self {
        let mut w = self.clone();
        w.add_in_place(k, amount);
        w
    }

    /// `None` when the balance is below `amount`.
    pub fn sub(&self, k: K, amount: &Pos) -> Option<Self> {
        let mut w = self.clone();
        w.sub_in_place(k, amount).then_some(w)
    }

    /// The wallet with the entry for `k` set to zero.
    pub fn drain(&self, k: K) -> Self {
        let mut w = self.clone();
        w.bal.remove(&k);
        w
    }

    pub(crate) fn add_in_place(&mut self, k: K, amount: &Pos) {
        let next = match self.bal.get(&k) {
            Some(cur) => cur + amount,
            None => amount.clone(),
        };
        self.bal.insert(k, next);
    }

    /// Leaves the wallet untouched and returns false on insufficient balance.
    pub(crate) fn sub_in_place(&mut self, k: K, amount: &Pos) -> bool {
        let Some(cur) = self.bal.get(&k) else {
            return false;
        };
        match cur.to_nonneg().checked_sub(&amount.to_nonneg()) {
            Err(_) => false,
            Ok(rest) => {
                match rest.to_pos() {
                    Some(p) => self.bal.insert(k, p),
                    None => self.bal.remove(&k),
                };
                true
            }
        }
    }
}

/// Finitely supported map from accounts to nonempty wallets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ledger<K: Ord> {
    map: BTreeMap<AccountId, Wallet<K>>,
}

impl<K: Ord> Default for Ledger<K> {
    fn default() -> Self {
        Ledger {
            map: BTreeMap::new(),
        }
    }
}

pub type AtomicLedger = Ledger<TokenId>;
pub type MintedLedger = Ledger<MintedId>;

impl<K: Ord + Copy + fmt::Display> Ledger<K> {
    pub fn new() -> Self {
        Ledger {
            map: BTreeMap::new(),
        }
    }

    pub fn get(&self, a: AccountId, k: K) -> NonNeg {
        self.map
            .get(&a)
            .map(|w| w.get(k))
            .unwrap_or_else(NonNeg::zero)
    }

    /// The account's wallet (empty if the account holds nothing).
    pub fn wallet(&self, a: AccountId) -> Wallet<K> {
        self.map.get(&a).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn accounts(&self) -> impl Iterator<Item = AccountId> + '_ {
        self.map.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AccountId, &Wallet<K>)> {
        self.map.iter().map(|(a, w)| (*a, w))
    }

    /// Sum of `k` over all wallets.
    pub fn supply(&self, k: K) -> NonNeg {
        self.map.values().map(|w| w.get(k)).sum()
    }

    pub fn add(&self, a: AccountId, k: K, amount: &Pos) -> Self {
        let mut l = self.clone();
        l.add_in_place(a, k, amount);
        l
    }

    pub fn sub(&self, a: AccountId, k: K, amount: &Pos) -> Result<Self> {
        let mut l = self.clone();
        l.sub_in_place(a, k, amount)?;
        Ok(l)
    }

    pub(crate) fn add_in_place(&mut self, a: AccountId, k: K, amount: &Pos) {
        self.map.entry(a).or_default().add_in_place(k, amount);
    }

    pub(crate) fn sub_in_place(&mut self, a: AccountId, k: K, amount: &Pos) -> Result<()> {
        let ok = self
            .map
            .get_mut(&a)
            .is_some_and(|w| w.sub_in_place(k, amount));
        if !ok {
            return Err(Error::insufficient(
                a,
                k.to_string(),
                self.get(a, k).into(),
                amount.clone().into(),
            ));
        }
        if self.map.get(&a).is_some_and(Wallet::is_empty) {
            self.map.remove(&a);
        }
        Ok(())
    }

    /// Drops empty wallets.
    pub(crate) fn from_wallets(map: BTreeMap<AccountId, Wallet<K>>) -> Self {
        Ledger {
            map: map.into_iter().filter(|(_, w)| !w.is_empty()).collect(),
        }
    }
}

/// Reserves of one pool, lower-id token first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pool {
    pub lo: Pos,
    pub hi: Pos,
}

/// Pools keyed by their unordered token pair. Every stored reserve is
/// positive; a missing pool has zero reserves on both sides.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AmmSet {
    pools: BTreeMap<MintedId, Pool>,
}

impl AmmSet {
    pub fn new() -> Self {
        AmmSet {
            pools: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn initialized(&self, m: MintedId) -> bool {
        self.pools.contains_key(&m)
    }

    pub fn pool(&self, m: MintedId) -> Option<&Pool> {
        self.pools.get(&m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (MintedId, &Pool)> {
        self.pools.iter().map(|(m, p)| (*m, p))
    }

    /// Reserve of `t` in the pool `{t, other}`, or zero.
    pub fn reserve(&self, t: TokenId, other: TokenId) -> NonNeg {
        MintedId::new(t, other)
            .ok()
            .and_then(|m| self.directional(t, other, m).ok())
            .map(|(r, _)| r.to_nonneg())
            .unwrap_or_else(NonNeg::zero)
    }

    /// `(r_in, r_out)` for a swap from `input` to `output`.
    pub fn reserves(&self, input: TokenId, output: TokenId) -> Result<(Pos, Pos)> {
        let m = MintedId::new(input, output)?;
        let (a, b) = self.directional(input, output, m)?;
        Ok((a.clone(), b.clone()))
    }

    /// Reserve of the first-named token.
    pub fn r_in(&self, input: TokenId, output: TokenId) -> Result<Pos> {
        Ok(self.reserves(input, output)?.0)
    }

    /// Reserve of the second-named token.
    pub fn r_out(&self, input: TokenId, output: TokenId) -> Result<Pos> {
        Ok(self.reserves(input, output)?.1)
    }

    fn directional(&self, first: TokenId, _second: TokenId, m: MintedId) -> Result<(&Pos, &Pos)> {
        let p = self.pools.get(&m).ok_or(Error::UninitializedAmm(m))?;
        Ok(if first == m.lo {
            (&p.lo, &p.hi)
        } else {
            (&p.hi, &p.lo)
        })
    }

    /// Total reserves of `t` across every pool containing it.
    pub fn supply(&self, t: TokenId) -> NonNeg {
        self.pools
            .iter()
            .filter_map(|(m, p)| {
                if m.lo == t {
                    Some(p.lo.to_nonneg())
                } else if m.hi == t {
                    Some(p.hi.to_nonneg())
                } else {
                    None
                }
            })
            .sum()
    }

    /// Adds `amount` to the reserve of `token` in the pool `{token, other}`.
    pub fn add_reserve(&self, token: TokenId, other: TokenId, amount: &Pos) -> Result<Self> {
        let mut s = self.clone();
        s.add_reserve_in_place(token, other, amount)?;
        Ok(s)
    }

    /// Removes `amount` from the reserve of `token`; the reserve must stay
    /// strictly positive.
    pub fn sub_reserve(&self, token: TokenId, other: TokenId, amount: &Pos) -> Result<Self> {
        let mut s = self.clone();
        s.sub_reserve_in_place(token, other, amount)?;
        Ok(s)
    }

    /// A new pool with reserves `(r_first, r_second)` for `(first, second)`.
    pub fn create(
        &self,
        first: TokenId,
        second: TokenId,
        r_first: Pos,
        r_second: Pos,
    ) -> Result<Self> {
        let mut s = self.clone();
        s.create_in_place(first, second, r_first, r_second)?;
        Ok(s)
    }

    pub(crate) fn create_in_place(
        &mut self,
        first: TokenId,
        second: TokenId,
        r_first: Pos,
        r_second: Pos,
    ) -> Result<()> {
        let m = MintedId::new(first, second)?;
        if self.initialized(m) {
            return Err(Error::AlreadyInitialized(m));
        }
        let pool = if first == m.lo {
            Pool {
                lo: r_first,
                hi: r_second,
            }
        } else {
            Pool {
                lo: r_second,
                hi: r_first,
            }
        };
        self.pools.insert(m, pool);
        Ok(())
    }

    fn slot_mut(&mut self, token: TokenId, other: TokenId) -> Result<(MintedId, &mut Pos)> {
        let m = MintedId::new(token, other)?;
        let p = self.pools.get_mut(&m).ok_or(Error::UninitializedAmm(m))?;
        Ok((m, if token == m.lo { &mut p.lo } else { &mut p.hi }))
    }

    pub(crate) fn add_reserve_in_place(
        &mut self,
        token: TokenId,
        other: TokenId,
        amount: &Pos,
    ) -> Result<()> {
        let (_, slot) = self.slot_mut(token, other)?;
        *slot = &*slot + amount;
        Ok(())
    }

    pub(crate) fn sub_reserve_in_place(
        &mut self,
        token: TokenId,
        other: TokenId,
        amount: &Pos,
    ) -> Result<()> {
        let (m, slot) = self.slot_mut(token, other)?;
        *slot = slot
            .checked_sub(amount)
            .map_err(|_| Error::ReserveDrained(m))?;
        Ok(())
    }
}

/// Full blockchain state: atomic ledger, minted ledger and pools.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct State {
    pub atoms: AtomicLedger,
    pub mints: MintedLedger,
    pub amms: AmmSet,
}

impl State {
    pub fn empty() -> Self {
        State::default()
    }

    /// A valid initial state: the given atomic endowments, no pools, no
    /// minted tokens.
    pub fn initial(atoms: AtomicLedger) -> Self {
        State {
            atoms,
            mints: Ledger::new(),
            amms: AmmSet::new(),
        }
    }

    /// Supply of an atomic token: wallet holdings plus pool reserves.
    pub fn atomsupply(&self, t: TokenId) -> NonNeg {
        self.atoms.supply(t) + self.amms.supply(t)
    }

    pub fn mintsupply(&self, m: MintedId) -> NonNeg {
        self.mints.supply(m)
    }

    /// No pools and no minted tokens in circulation.
    pub fn valid_init(&self) -> bool {
        self.amms.is_empty() && self.mints.is_empty()
    }

    /// Every atomic token held by some wallet or pool.
    pub fn tokens(&self) -> Vec<TokenId> {
        let mut ts: Vec<TokenId> = self
            .atoms
            .iter()
            .flat_map(|(_, w)| w.iter().map(|(t, _)| t))
            .chain(self.amms.iter().flat_map(|(m, _)| [m.lo, m.hi]))
            .collect();
        ts.sort();
        ts.dedup();
        ts
    }

    /// Every account with a nonempty atomic or minted wallet.
    pub fn accounts(&self) -> Vec<AccountId> {
        let mut a: Vec<AccountId> = self.atoms.accounts().chain(self.mints.accounts()).collect();
        a.sort();
        a.dedup();
        a
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    #[serde(default)]
    atoms: BTreeMap<AccountId, BTreeMap<TokenId, NonNeg>>,
    #[serde(default)]
    mints: BTreeMap<AccountId, BTreeMap<MintedId, NonNeg>>,
    #[serde(default)]
    amms: BTreeMap<MintedId, (Pos, Pos)>,
}

fn ledger_from_repr<K: Ord + Copy + fmt::Display>(
    m: BTreeMap<AccountId, BTreeMap<K, NonNeg>>,
) -> Ledger<K> {
    Ledger::from_wallets(
        m.into_iter()
            .map(|(a, w)| (a, Wallet::from_entries(w)))
            .collect(),
    )
}

fn ledger_to_repr<K: Ord + Copy + fmt::Display>(
    l: &Ledger<K>,
) -> BTreeMap<AccountId, BTreeMap<K, NonNeg>> {
    l.iter()
        .map(|(a, w)| (a, w.iter().map(|(k, v)| (k, v.to_nonneg())).collect()))
        .collect()
}

impl TryFrom<StateRepr> for State {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<State> {
        let amms = AmmSet {
            pools: r
                .amms
                .into_iter()
                .map(|(m, (lo, hi))| (m, Pool { lo, hi }))
                .collect(),
        };
        Ok(State {
            atoms: ledger_from_repr(r.atoms),
            mints: ledger_from_repr(r.mints),
            amms,
        })
    }
}

impl From<State> for StateRepr {
    fn from(s: State) -> StateRepr {
        StateRepr {
            atoms: ledger_to_repr(&s.atoms),
            mints: ledger_to_repr(&s.mints),
            amms: s
                .amms
                .pools
                .into_iter()
                .map(|(m, p)| (m, (p.lo, p.hi)))
                .collect(),
        }
    }
}
