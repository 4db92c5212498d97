//! Transactions and their application.
//!
//! Each transaction kind has a `validate_*` function that checks its
//! preconditions against a state and an `apply_*` function that returns the
//! successor state. Application never mutates its input. Invalid transactions
//! are rejected with the error naming the violated condition.
//!
//! Liquidity arithmetic:
//!
//! * `create` moves `x0` of `t0` and `x1` of `t1` into a new pool and mints
//!   `x0` units of the pool's minted token to the creator;
//! * `deposit` of `x0` units of `t0` requires `x1 = x0·r1/r0` units of `t1`
//!   and mints `x0·supply/r0`;
//! * `redeem` of `v < supply` minted units pays out `v·r0/supply` and
//!   `v·r1/supply`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Pos;
use crate::state::{AccountId, MintedId, State, TokenId};

/// Per-unit exchange rate as a function of input amount and the reserves
/// `(r_in, r_out)` of the pool.
pub trait SwapRate: Sync {
    fn rate(&self, x: &Pos, r_in: &Pos, r_out: &Pos) -> Pos;
}

impl<F> SwapRate for F
where
    F: Fn(&Pos, &Pos, &Pos) -> Pos + Sync,
{
    fn rate(&self, x: &Pos, r_in: &Pos, r_out: &Pos) -> Pos {
        self(x, r_in, r_out)
    }
}

/// The constant-product rate `r_out / (r_in + x)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConstProd;

impl SwapRate for ConstProd {
    fn rate(&self, x: &Pos, r_in: &Pos, r_out: &Pos) -> Pos {
        constprod(x, r_in, r_out)
    }
}

pub fn constprod(x: &Pos, r_in: &Pos, r_out: &Pos) -> Pos {
    r_out / &(r_in + x)
}

/// Output amount `x · sx(x, r_in, r_out)`.
pub fn swap_output(x: &Pos, r_in: &Pos, r_out: &Pos, sx: &dyn SwapRate) -> Pos {
    x * &sx.rate(x, r_in, r_out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Create {
    pub account: AccountId,
    pub t0: TokenId,
    pub t1: TokenId,
    pub x0: Pos,
    pub x1: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deposit {
    pub account: AccountId,
    pub t0: TokenId,
    pub t1: TokenId,
    pub x0: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redeem {
    pub account: AccountId,
    pub t0: TokenId,
    pub t1: TokenId,
    pub v: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Swap {
    pub account: AccountId,
    pub input: TokenId,
    pub output: TokenId,
    pub x: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Tx {
    Create(Create),
    Deposit(Deposit),
    Redeem(Redeem),
    Swap(Swap),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxKind {
    Create,
    Deposit,
    Redeem,
    Swap,
}

impl TxKind {
    pub const ALL: [TxKind; 4] = [
        TxKind::Create,
        TxKind::Deposit,
        TxKind::Redeem,
        TxKind::Swap,
    ];
}

impl fmt::Display for TxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxKind::Create => "create",
            TxKind::Deposit => "deposit",
            TxKind::Redeem => "redeem",
            TxKind::Swap => "swap",
        })
    }
}

impl Tx {
    pub fn kind(&self) -> TxKind {
        match self {
            Tx::Create(_) => TxKind::Create,
            Tx::Deposit(_) => TxKind::Deposit,
            Tx::Redeem(_) => TxKind::Redeem,
            Tx::Swap(_) => TxKind::Swap,
        }
    }

    pub fn account(&self) -> AccountId {
        match self {
            Tx::Create(t) => t.account,
            Tx::Deposit(t) => t.account,
            Tx::Redeem(t) => t.account,
            Tx::Swap(t) => t.account,
        }
    }

    /// The pool the transaction touches.
    pub fn pool(&self) -> Result<MintedId> {
        match self {
            Tx::Create(t) => MintedId::new(t.t0, t.t1),
            Tx::Deposit(t) => MintedId::new(t.t0, t.t1),
            Tx::Redeem(t) => MintedId::new(t.t0, t.t1),
            Tx::Swap(t) => MintedId::new(t.input, t.output),
        }
    }

    pub fn validate(&self, s: &State, sx: &dyn SwapRate) -> Result<()> {
        match self {
            Tx::Create(t) => validate_create(s, t),
            Tx::Deposit(t) => validate_deposit(s, t),
            Tx::Redeem(t) => validate_redeem(s, t),
            Tx::Swap(t) => validate_swap(s, t, sx).map(|_| ()),
        }
    }

    pub fn apply(&self, s: &State, sx: &dyn SwapRate) -> Result<State> {
        apply_tx(s, self, sx)
    }
}

/// Checks `enough`, `exi` and `nodrain`, in that order, and returns the
/// output amount.
pub fn validate_swap(s: &State, sw: &Swap, sx: &dyn SwapRate) -> Result<Pos> {
    let m = MintedId::new(sw.input, sw.output)?;
    let have = s.atoms.get(sw.account, sw.input);
    if have < sw.x.to_nonneg() {
        return Err(Error::insufficient(
            sw.account,
            sw.input.to_string(),
            have.into(),
            sw.x.clone().into(),
        ));
    }
    let (r_in, r_out) = s.amms.reserves(sw.input, sw.output)?;
    let y = swap_output(&sw.x, &r_in, &r_out, sx);
    if y >= r_out {
        return Err(Error::ReserveDrained(m));
    }
    Ok(y)
}

pub fn apply_swap(s: &State, sw: &Swap, sx: &dyn SwapRate) -> Result<State> {
    let y = validate_swap(s, sw, sx)?;
    let mut next = s.clone();
    next.atoms.sub_in_place(sw.account, sw.input, &sw.x)?;
    next.atoms.add_in_place(sw.account, sw.output, &y);
    next.amms.sub_reserve_in_place(sw.output, sw.input, &y)?;
    next.amms.add_reserve_in_place(sw.input, sw.output, &sw.x)?;
    Ok(next)
}

fn require_balance(s: &State, account: AccountId, token: TokenId, need: &Pos) -> Result<()> {
    let have = s.atoms.get(account, token);
    if have < need.to_nonneg() {
        return Err(Error::insufficient(
            account,
            token.to_string(),
            have.into(),
            need.clone().into(),
        ));
    }
    Ok(())
}

pub fn validate_create(s: &State, tx: &Create) -> Result<()> {
    let m = MintedId::new(tx.t0, tx.t1)?;
    if s.amms.initialized(m) {
        return Err(Error::AlreadyInitialized(m));
    }
    require_balance(s, tx.account, tx.t0, &tx.x0)?;
    require_balance(s, tx.account, tx.t1, &tx.x1)
}

pub fn apply_create(s: &State, tx: &Create) -> Result<State> {
    validate_create(s, tx)?;
    let m = MintedId::new(tx.t0, tx.t1)?;
    let mut next = s.clone();
    next.atoms.sub_in_place(tx.account, tx.t0, &tx.x0)?;
    next.atoms.sub_in_place(tx.account, tx.t1, &tx.x1)?;
    next.amms
        .create_in_place(tx.t0, tx.t1, tx.x0.clone(), tx.x1.clone())?;
    next.mints.add_in_place(tx.account, m, &tx.x0);
    Ok(next)
}

struct DepositPlan {
    x1: Pos,
    minted: Pos,
}

fn plan_deposit(s: &State, tx: &Deposit) -> Result<DepositPlan> {
    let m = MintedId::new(tx.t0, tx.t1)?;
    let (r0, r1) = s.amms.reserves(tx.t0, tx.t1)?;
    let x1 = &(&tx.x0 * &r1) / &r0;
    let supply = s
        .mintsupply(m)
        .to_pos()
        .ok_or_else(|| Error::MalformedState(format!("pool {m} has no minted supply")))?;
    let minted = &(&tx.x0 * &supply) / &r0;
    require_balance(s, tx.account, tx.t0, &tx.x0)?;
    require_balance(s, tx.account, tx.t1, &x1)?;
    Ok(DepositPlan { x1, minted })
}

pub fn validate_deposit(s: &State, tx: &Deposit) -> Result<()> {
    plan_deposit(s, tx).map(|_| ())
}

/// Amount of `t1` a deposit of `x0` units of `t0` requires.
pub fn deposit_counterpart(s: &State, tx: &Deposit) -> Result<Pos> {
    let (r0, r1) = s.amms.reserves(tx.t0, tx.t1)?;
    Ok(&(&tx.x0 * &r1) / &r0)
}

pub fn apply_deposit(s: &State, tx: &Deposit) -> Result<State> {
    let plan = plan_deposit(s, tx)?;
    let m = MintedId::new(tx.t0, tx.t1)?;
    let mut next = s.clone();
    next.atoms.sub_in_place(tx.account, tx.t0, &tx.x0)?;
    next.atoms.sub_in_place(tx.account, tx.t1, &plan.x1)?;
    next.amms.add_reserve_in_place(tx.t0, tx.t1, &tx.x0)?;
    next.amms.add_reserve_in_place(tx.t1, tx.t0, &plan.x1)?;
    next.mints.add_in_place(tx.account, m, &plan.minted);
    Ok(next)
}

struct RedeemPlan {
    x0: Pos,
    x1: Pos,
}

fn plan_redeem(s: &State, tx: &Redeem) -> Result<RedeemPlan> {
    let m = MintedId::new(tx.t0, tx.t1)?;
    let (r0, r1) = s.amms.reserves(tx.t0, tx.t1)?;
    let held = s.mints.get(tx.account, m);
    if held < tx.v.to_nonneg() {
        return Err(Error::insufficient(
            tx.account,
            m.to_string(),
            held.into(),
            tx.v.clone().into(),
        ));
    }
    let supply = s.mintsupply(m);
    if tx.v.to_nonneg() >= supply {
        return Err(Error::ReserveDrained(m));
    }
    let supply = supply.to_pos().ok_or(Error::DivisionByZero)?;
    Ok(RedeemPlan {
        x0: &(&tx.v * &r0) / &supply,
        x1: &(&tx.v * &r1) / &supply,
    })
}

pub fn validate_redeem(s: &State, tx: &Redeem) -> Result<()> {
    plan_redeem(s, tx).map(|_| ())
}

pub fn apply_redeem(s: &State, tx: &Redeem) -> Result<State> {
    let plan = plan_redeem(s, tx)?;
    let m = MintedId::new(tx.t0, tx.t1)?;
    let mut next = s.clone();
    next.mints.sub_in_place(tx.account, m, &tx.v)?;
    next.amms.sub_reserve_in_place(tx.t0, tx.t1, &plan.x0)?;
    next.amms.sub_reserve_in_place(tx.t1, tx.t0, &plan.x1)?;
    next.atoms.add_in_place(tx.account, tx.t0, &plan.x0);
    next.atoms.add_in_place(tx.account, tx.t1, &plan.x1);
    Ok(next)
}

pub fn apply_tx(s: &State, tx: &Tx, sx: &dyn SwapRate) -> Result<State> {
    match tx {
        Tx::Create(t) => apply_create(s, t),
        Tx::Deposit(t) => apply_deposit(s, t),
        Tx::Redeem(t) => apply_redeem(s, t),
        Tx::Swap(t) => apply_swap(s, t, sx),
    }
}

/// A valid initial state followed by a sequence of transactions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: State,
    pub steps: Vec<Tx>,
}

impl Trace {
    pub fn new(initial: State) -> Self {
        Trace {
            initial,
            steps: Vec::new(),
        }
    }

    /// JSON lines: the initial state, then one transaction per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = self.initial.to_json();
        out.push('\n');
        for tx in &self.steps {
            out.push_str(&serde_json::to_string(tx).expect("tx serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Json("empty trace".into()))?;
        let initial = State::from_json(first)?;
        let steps = lines
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Json(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<Tx>>>()?;
        Ok(Trace { initial, steps })
    }
}

/// Replays a trace, returning the initial state followed by the state after
/// each step.
pub fn replay(trace: &Trace, sx: &dyn SwapRate) -> Result<Vec<State>> {
    if !trace.initial.valid_init() {
        return Err(Error::InvalidInitialState);
    }
    let mut states = Vec::with_capacity(trace.steps.len() + 1);
    states.push(trace.initial.clone());
    for (index, tx) in trace.steps.iter().enumerate() {
        let next = apply_tx(states.last().expect("nonempty"), tx, sx).map_err(|cause| {
            Error::StepInvalid {
                index,
                cause: Box::new(cause),
            }
        })?;
        states.push(next);
    }
    Ok(states)
}
