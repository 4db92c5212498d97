//! Random trace generation and property checking.
//!
//! [`gen_trace`] produces reachable states: it starts from random atomic
//! endowments and proposes transactions by rejection sampling against the
//! `validate_*` functions. [`check_trace`] replays a trace and checks the
//! reachability invariants at every state; [`check_lemmas`] runs the swap,
//! valuation and arbitrage properties over generated states.
//!
//! A trace is fully determined by its seed (ChaCha8 keyed by the seed).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arb::{
    gain_sign, grid_scan, grid_x_max, profitable_direction, solve_arbitrage, Direction,
};
use crate::econ::{gain, minted_price, swap_gain, PriceOracle};
use crate::error::{Error, Result};
use crate::numerics::{NonNeg, Pos, Rational};
use crate::state::{AccountId, AtomicLedger, MintedId, State, TokenId};
use crate::txn::{
    apply_swap, apply_tx, constprod, ConstProd, Create, Deposit, Redeem, Swap, SwapRate, Trace, Tx,
    TxKind,
};

/// Retries per step before generation gives up.
pub const MAX_ATTEMPTS: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub n_accounts: u64,
    pub n_tokens: u64,
    pub n_steps: usize,
    pub tx_weights: BTreeMap<TxKind, u32>,
    /// Range of initial endowments, per account and token.
    pub amount_range: (Pos, Pos),
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            n_accounts: 4,
            n_tokens: 3,
            n_steps: 50,
            tx_weights: [
                (TxKind::Create, 1),
                (TxKind::Deposit, 2),
                (TxKind::Redeem, 2),
                (TxKind::Swap, 5),
            ]
            .into_iter()
            .collect(),
            amount_range: (Pos::one(), Pos::from_integer(1000)),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_accounts == 0 {
            return Err(Error::InvalidConfig("need at least one account".into()));
        }
        if self.tx_weights.values().all(|w| *w == 0) {
            return Err(Error::InvalidConfig(
                "all transaction weights are zero".into(),
            ));
        }
        if self.amount_range.0 > self.amount_range.1 {
            return Err(Error::InvalidConfig("amount range is empty".into()));
        }
        Ok(())
    }

    /// Same configuration with the seed of the `i`-th derived trace.
    pub fn derived(&self, i: u64) -> GenConfig {
        GenConfig {
            seed: derive_seed(self.seed, i),
            ..self.clone()
        }
    }
}

/// SplitMix64 step; gives independent per-trace seeds from one base seed.
pub fn derive_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform over `{k/d : 1 <= k <= d}` with `d <= 16`; lies in `(0, 1]`.
pub fn random_fraction<R: Rng>(rng: &mut R) -> Pos {
    let d = rng.random_range(1..=16u64);
    let k = rng.random_range(1..=d);
    Pos::from_ratio(k, d).expect("positive")
}

/// Amounts are kept on this grid so exact reserves stay small.
pub const AMOUNT_GRID: u64 = 1000;

/// `v` rounded down to a multiple of `1/AMOUNT_GRID`; `None` when that is zero.
pub fn quantize(v: &Pos) -> Option<Pos> {
    Pos::new(v.as_rational().floor_to(AMOUNT_GRID)).ok()
}

/// `whole·q` for the largest `q` on the amount grid with `whole·q <= v`;
/// `None` when `q` would be zero. Deposits and redeems then scale a pool by
/// a short factor.
pub fn pool_share(v: &Pos, whole: &Pos) -> Option<Pos> {
    let q = Pos::new((v / whole).into_rational().floor_to(AMOUNT_GRID)).ok()?;
    Some(whole * &q)
}

/// Like [`random_fraction`] but strictly below one.
pub fn random_proper_fraction<R: Rng>(rng: &mut R) -> Pos {
    let d = rng.random_range(2..=16u64);
    let k = rng.random_range(1..d);
    Pos::from_ratio(k, d).expect("positive")
}

/// A rational in `[lo, hi]` on a grid of 1000 steps.
pub fn random_in_range<R: Rng>(rng: &mut R, lo: &Pos, hi: &Pos) -> Pos {
    let k = rng.random_range(0..=1000i64);
    let span = hi.as_rational() - lo.as_rational();
    let v = lo.as_rational() + &(span * Rational::from_ratio(k, 1000).expect("nonzero"));
    Pos::new(v).expect("lo > 0")
}

/// Oracle with a price in `[1/8, 20]` (small denominators) for each token.
pub fn random_oracle<R: Rng>(rng: &mut R, tokens: &[TokenId]) -> PriceOracle {
    PriceOracle::new(tokens.iter().map(|t| {
        let d = rng.random_range(1..=8u64);
        let n = rng.random_range(1..=20 * d);
        (*t, Pos::from_ratio(n, d).expect("positive"))
    }))
}

fn pick<'a, T, R: Rng>(rng: &mut R, xs: &'a [T]) -> Option<&'a T> {
    (!xs.is_empty()).then(|| &xs[rng.random_range(0..xs.len())])
}

fn oriented<R: Rng>(rng: &mut R, m: MintedId) -> (TokenId, TokenId) {
    if rng.random_bool(0.5) {
        (m.lo(), m.hi())
    } else {
        (m.hi(), m.lo())
    }
}

fn random_initial_state<R: Rng>(rng: &mut R, cfg: &GenConfig) -> State {
    let mut atoms = AtomicLedger::new();
    for a in 0..cfg.n_accounts {
        for t in 0..cfg.n_tokens {
            if rng.random_bool(0.85) {
                let amt = random_in_range(rng, &cfg.amount_range.0, &cfg.amount_range.1);
                atoms.add_in_place(AccountId(a), TokenId(t), &amt);
            }
        }
    }
    State::initial(atoms)
}

fn choose_kind<R: Rng>(rng: &mut R, weights: &BTreeMap<TxKind, u32>) -> TxKind {
    let total: u64 = weights.values().map(|w| *w as u64).sum();
    let mut roll = rng.random_range(0..total);
    for (k, w) in weights {
        if roll < *w as u64 {
            return *k;
        }
        roll -= *w as u64;
    }
    unreachable!("roll below total weight")
}

fn propose<R: Rng>(rng: &mut R, s: &State, cfg: &GenConfig, kind: TxKind) -> Option<Tx> {
    let account = AccountId(rng.random_range(0..cfg.n_accounts));
    let pools: Vec<MintedId> = s.amms.iter().map(|(m, _)| m).collect();
    match kind {
        TxKind::Create => {
            let held: Vec<(TokenId, Pos)> = s
                .atoms
                .wallet(account)
                .iter()
                .map(|(t, v)| (t, v.clone()))
                .collect();
            if held.len() < 2 {
                return None;
            }
            let i = rng.random_range(0..held.len());
            let j = (i + rng.random_range(1..held.len())) % held.len();
            let ((t0, b0), (t1, b1)) = (held[i].clone(), held[j].clone());
            Some(Tx::Create(Create {
                account,
                t0,
                t1,
                x0: quantize(&(&b0 * &random_fraction(rng)))?,
                x1: quantize(&(&b1 * &random_fraction(rng)))?,
            }))
        }
        TxKind::Deposit => {
            let m = *pick(rng, &pools)?;
            let (t0, t1) = oriented(rng, m);
            let (r0, r1) = s.amms.reserves(t0, t1).ok()?;
            let b0 = s.atoms.get(account, t0).to_pos()?;
            let b1 = s.atoms.get(account, t1).to_pos()?;
            let afford = &(&b1 * &r0) / &r1;
            let cap = if afford < b0 { afford } else { b0 };
            let x0 = pool_share(&(&cap * &random_fraction(rng)), &r0)?;
            Some(Tx::Deposit(Deposit {
                account,
                t0,
                t1,
                x0,
            }))
        }
        TxKind::Redeem => {
            let holdings: Vec<(AccountId, MintedId, Pos)> = s
                .mints
                .iter()
                .flat_map(|(a, w)| w.iter().map(move |(m, v)| (a, m, v.clone())))
                .collect();
            let (account, m, held) = pick(rng, &holdings)?.clone();
            let (t0, t1) = oriented(rng, m);
            let supply = s.mintsupply(m).to_pos()?;
            // strictly below holdings, hence strictly below supply
            let v = pool_share(&(&held * &random_proper_fraction(rng)), &supply)?;
            Some(Tx::Redeem(Redeem { account, t0, t1, v }))
        }
        TxKind::Swap => {
            let m = *pick(rng, &pools)?;
            let (input, output) = oriented(rng, m);
            let b = s.atoms.get(account, input).to_pos()?;
            Some(Tx::Swap(Swap {
                account,
                input,
                output,
                x: quantize(&(&b * &random_fraction(rng)))?,
            }))
        }
    }
}

/// Generates a trace of `cfg.n_steps` valid transactions from a random valid
/// initial state.
pub fn gen_trace(cfg: &GenConfig) -> Result<Trace> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let initial = random_initial_state(&mut rng, cfg);
    let mut state = initial.clone();
    let mut trace = Trace::new(initial);
    for step in 0..cfg.n_steps {
        let mut next = None;
        for _ in 0..MAX_ATTEMPTS {
            let kind = choose_kind(&mut rng, &cfg.tx_weights);
            let Some(tx) = propose(&mut rng, &state, cfg, kind) else {
                continue;
            };
            if let Ok(s2) = apply_tx(&state, &tx, &ConstProd) {
                next = Some((tx, s2));
                break;
            }
        }
        let (tx, s2) = next.ok_or(Error::GenerationStalled {
            step,
            attempts: MAX_ATTEMPTS,
        })?;
        trace.steps.push(tx);
        state = s2;
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the offending state (0 is the initial state) or sample.
    pub step: usize,
    pub property: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub states_checked: usize,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.states_checked += other.states_checked;
        self.violations.extend(other.violations);
    }

    fn violation(&mut self, step: usize, property: &str, detail: String) {
        self.violations.push(Violation {
            step,
            property: property.to_string(),
            detail,
        });
    }

    pub fn summary(&self) -> String {
        if self.is_ok() {
            format!(
                "{} states checked, all properties hold",
                self.states_checked
            )
        } else {
            let mut by_prop: BTreeMap<&str, usize> = BTreeMap::new();
            for v in &self.violations {
                *by_prop.entry(v.property.as_str()).or_default() += 1;
            }
            let parts: Vec<String> = by_prop.iter().map(|(p, n)| format!("{p}: {n}")).collect();
            format!(
                "{} states checked, {} violations ({})",
                self.states_checked,
                self.violations.len(),
                parts.join(", ")
            )
        }
    }
}

/// Replays `trace` and checks, at every state:
///
/// * `supply-iff-pool`: a touched pool exists iff its minted supply is positive;
/// * `conservation`: each atomic token's supply equals the initial one;
/// * `posres`: every stored reserve is positive;
/// * `minted-supply`: minted wallets sum to the supply tracked from the
///   transactions;
/// * `minted-price`: minted price is positive on every pool (unit prices).
///
/// An invalid step is reported as `step-valid` and ends the check.
pub fn check_trace(trace: &Trace, sx: &dyn SwapRate) -> CheckReport {
    let mut report = CheckReport::default();
    let init = &trace.initial;
    if !init.valid_init() {
        report.violation(
            0,
            "valid-init",
            "initial state has pools or minted tokens".into(),
        );
    }
    let touched: BTreeSet<MintedId> = trace.steps.iter().filter_map(|tx| tx.pool().ok()).collect();
    let mut tokens: BTreeSet<TokenId> = init.tokens().into_iter().collect();
    tokens.extend(touched.iter().flat_map(|m| [m.lo(), m.hi()]));
    let initial_supply: BTreeMap<TokenId, NonNeg> =
        tokens.iter().map(|t| (*t, init.atomsupply(*t))).collect();
    let unit = PriceOracle::new(tokens.iter().map(|t| (*t, Pos::one())));
    let mut tracked: BTreeMap<MintedId, Rational> = BTreeMap::new();

    let mut state = init.clone();
    check_state(
        &mut report,
        0,
        &state,
        &touched,
        &initial_supply,
        &tracked,
        &unit,
    );
    for (i, tx) in trace.steps.iter().enumerate() {
        let next = match apply_tx(&state, tx, sx) {
            Ok(n) => n,
            Err(e) => {
                report.violation(i + 1, "step-valid", e.to_string());
                return report;
            }
        };
        track_minted(&mut tracked, &state, tx);
        state = next;
        check_state(
            &mut report,
            i + 1,
            &state,
            &touched,
            &initial_supply,
            &tracked,
            &unit,
        );
    }
    report
}

fn track_minted(tracked: &mut BTreeMap<MintedId, Rational>, pre: &State, tx: &Tx) {
    let Ok(m) = tx.pool() else { return };
    let entry = tracked.entry(m).or_insert_with(Rational::zero);
    match tx {
        Tx::Create(c) => *entry = &*entry + c.x0.as_rational(),
        Tx::Deposit(d) => {
            // minted = x0 · supply / r0, from the pre-state
            let r0 = pre.amms.reserve(d.t0, d.t1);
            if let Some(r0) = r0.to_pos() {
                let minted = d.x0.as_rational() * &*entry / r0.as_rational();
                *entry = &*entry + &minted;
            }
        }
        Tx::Redeem(r) => *entry = &*entry - r.v.as_rational(),
        Tx::Swap(_) => {}
    }
}

fn check_state(
    report: &mut CheckReport,
    step: usize,
    s: &State,
    touched: &BTreeSet<MintedId>,
    initial_supply: &BTreeMap<TokenId, NonNeg>,
    tracked: &BTreeMap<MintedId, Rational>,
    unit: &PriceOracle,
) {
    report.states_checked += 1;
    let mut pools: BTreeSet<MintedId> = touched.clone();
    pools.extend(s.amms.iter().map(|(m, _)| m));
    pools.extend(
        s.mints
            .iter()
            .flat_map(|(_, w)| w.iter().map(|(m, _)| m).collect::<Vec<_>>()),
    );

    for m in &pools {
        let supply = s.mintsupply(*m);
        if supply.is_zero() == s.amms.initialized(*m) {
            report.violation(
                step,
                "supply-iff-pool",
                format!(
                    "pool {m}: initialized={} supply={supply}",
                    s.amms.initialized(*m)
                ),
            );
        }
        let expected = tracked.get(m).cloned().unwrap_or_else(Rational::zero);
        if supply.as_rational() != &expected {
            report.violation(
                step,
                "minted-supply",
                format!("pool {m}: wallets sum to {supply}, expected {expected}"),
            );
        }
    }
    for (t, s0) in initial_supply {
        let now = s.atomsupply(*t);
        if &now != s0 {
            report.violation(
                step,
                "conservation",
                format!("token {t}: supply {now}, initially {s0}"),
            );
        }
    }
    for t in s.tokens() {
        if !initial_supply.contains_key(&t) {
            report.violation(
                step,
                "conservation",
                format!("token {t} appeared from nothing"),
            );
        }
    }
    for (m, pool) in s.amms.iter() {
        if !pool.lo.as_rational().is_positive() || !pool.hi.as_rational().is_positive() {
            report.violation(
                step,
                "posres",
                format!("pool {m}: reserves {} / {}", pool.lo, pool.hi),
            );
        }
        match minted_price(s, unit, m) {
            Ok(p) if !p.is_zero() => {}
            Ok(_) => report.violation(step, "minted-price", format!("pool {m}: price is zero")),
            Err(e) => report.violation(step, "minted-price", format!("pool {m}: {e}")),
        }
    }
}

/// A random valid swap in `s`, by any account with a positive balance of the
/// input token.
pub fn sample_swap<R: Rng>(rng: &mut R, s: &State) -> Option<Swap> {
    let candidates: Vec<(AccountId, TokenId, TokenId)> = swap_candidates(s).collect();
    let (account, input, output) = *pick(rng, &candidates)?;
    let b = s.atoms.get(account, input).to_pos()?;
    Some(Swap {
        account,
        input,
        output,
        x: quantize(&(&b * &random_fraction(rng)))?,
    })
}

/// A random valid swap whose trader holds none of the pool's minted tokens.
pub fn sample_outsider_swap<R: Rng>(rng: &mut R, s: &State) -> Option<Swap> {
    let candidates: Vec<(AccountId, TokenId, TokenId)> = swap_candidates(s)
        .filter(|(a, i, o)| {
            s.mints
                .get(*a, MintedId::new(*i, *o).expect("distinct"))
                .is_zero()
        })
        .collect();
    let (account, input, output) = *pick(rng, &candidates)?;
    let b = s.atoms.get(account, input).to_pos()?;
    Some(Swap {
        account,
        input,
        output,
        x: quantize(&(&b * &random_fraction(rng)))?,
    })
}

fn swap_candidates(s: &State) -> impl Iterator<Item = (AccountId, TokenId, TokenId)> + '_ {
    s.amms.iter().flat_map(move |(m, _)| {
        [(m.lo(), m.hi()), (m.hi(), m.lo())]
            .into_iter()
            .flat_map(move |(i, o)| {
                s.atoms
                    .iter()
                    .filter(move |(_, w)| !w.get(i).is_zero())
                    .map(move |(a, _)| (a, i, o))
            })
    })
}

/// Oracle for which a constant-product swap compares to the exchange rate as
/// `target`: `cmp(rate, o_in / o_out) == target`. Other tokens get random
/// prices.
pub fn stratified_oracle<R: Rng>(
    rng: &mut R,
    s: &State,
    sw: &Swap,
    target: Ordering,
) -> Result<PriceOracle> {
    let (r_in, r_out) = s.amms.reserves(sw.input, sw.output)?;
    let rate = constprod(&sw.x, &r_in, &r_out);
    let mut o = random_oracle(rng, &s.tokens());
    let o_out = o.price(sw.output)?.clone();
    let factor = match target {
        Ordering::Equal => Pos::one(),
        Ordering::Greater => random_proper_fraction(rng),
        Ordering::Less => &Pos::one() + &random_fraction(rng),
    };
    o.prices.insert(sw.input, &(&rate * &o_out) * &factor);
    Ok(o)
}

/// Options of the lemma campaign.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaOptions {
    pub n_traces: usize,
    pub swaps_per_trace: usize,
    pub grid_points: usize,
    /// Fixed oracle; random per sample when absent. Sign checks always build
    /// their own oracles.
    pub oracle: Option<PriceOracle>,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions {
            n_traces: 20,
            swaps_per_trace: 5,
            grid_points: 1000,
            oracle: None,
        }
    }
}

/// Relative tolerance on the arbitrage optimum and on the post-swap ratio.
pub fn optimality_slack(best: &Rational) -> Rational {
    let one = Rational::one();
    let scale = std::cmp::max(best.abs(), one);
    scale * Rational::from_ratio(1, 1_000_000_000).expect("nonzero")
}

/// Generates `opts.n_traces` traces from `cfg` (seeds derived from
/// `cfg.seed`) and checks on their final states:
///
/// * `swap-gain`: closed-form swap gain equals the networth difference;
/// * `zero-sum`: gains of all accounts sum to zero;
/// * `gain-sign`: sign of gain equals `cmp(rate, o_in/o_out)` for traders
///   without minted holdings, cycling through all three orderings;
/// * `one-way-profit`: the profitable direction has a positive-gain grid point
///   (when the grid resolves it) and the reverse has none;
/// * `arb-optimal`: the arbitrage amount beats every grid point up to
///   [`optimality_slack`];
/// * `fixed-point`: after the arbitrage swap the pool is aligned (exactly,
///   or within 10⁻⁹ relative).
pub fn check_lemmas(cfg: &GenConfig, opts: &LemmaOptions) -> Result<CheckReport> {
    cfg.validate()?;
    if opts.grid_points < 2 {
        return Err(Error::InvalidConfig("grid needs at least 2 points".into()));
    }
    let reports: Vec<Result<CheckReport>> = (0..opts.n_traces as u64)
        .into_par_iter()
        .map(|i| check_lemmas_one(&cfg.derived(i), opts, i as usize))
        .collect();
    let mut total = CheckReport::default();
    for r in reports {
        total.merge(r?);
    }
    Ok(total)
}

fn check_lemmas_one(cfg: &GenConfig, opts: &LemmaOptions, index: usize) -> Result<CheckReport> {
    let trace = gen_trace(cfg)?;
    let s = crate::txn::replay(&trace, &ConstProd)?
        .pop()
        .expect("initial state");
    let mut rng = rng_from_seed(derive_seed(cfg.seed, u64::MAX));
    let mut report = CheckReport {
        states_checked: 1,
        violations: Vec::new(),
    };
    let tokens = s.tokens();
    let oracle_for = |rng: &mut ChaCha8Rng| {
        opts.oracle
            .clone()
            .unwrap_or_else(|| random_oracle(rng, &tokens))
    };
    let orderings = [Ordering::Less, Ordering::Equal, Ordering::Greater];

    for k in 0..opts.swaps_per_trace {
        if let Some(sw) = sample_swap(&mut rng, &s) {
            let o = oracle_for(&mut rng);
            let after = apply_swap(&s, &sw, &ConstProd)?;
            let closed = swap_gain(&s, &sw, &o, &ConstProd)?;
            let direct = gain(sw.account, &o, &s, &after)?;
            if closed != direct {
                report.violation(
                    index,
                    "swap-gain",
                    format!("{sw:?}: closed form {closed}, direct {direct}"),
                );
            }
            let mut accounts: BTreeSet<AccountId> = s.accounts().into_iter().collect();
            accounts.extend(after.accounts());
            let total: Rational = accounts
                .iter()
                .map(|a| gain(*a, &o, &s, &after))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum();
            if !total.is_zero() {
                report.violation(index, "zero-sum", format!("{sw:?}: gains sum to {total}"));
            }
        }
        if let Some(sw) = sample_outsider_swap(&mut rng, &s) {
            let target = orderings[k % 3];
            let o = stratified_oracle(&mut rng, &s, &sw, target)?;
            let (r_in, r_out) = s.amms.reserves(sw.input, sw.output)?;
            let predicted = gain_sign(
                &sw.x,
                &r_in,
                &r_out,
                o.price(sw.input)?,
                o.price(sw.output)?,
                &ConstProd,
            );
            let actual = gain(sw.account, &o, &s, &apply_swap(&s, &sw, &ConstProd)?)?.sign();
            if predicted != actual || predicted != target {
                report.violation(
                    index,
                    "gain-sign",
                    format!(
                        "{sw:?}: predicted {predicted:?}, actual {actual:?}, target {target:?}"
                    ),
                );
            }
        }
    }

    // An account that never traded: no minted holdings anywhere.
    let outsider = AccountId(cfg.n_accounts);
    let pools: Vec<MintedId> = s.amms.iter().map(|(m, _)| m).collect();
    for m in pools {
        let o = oracle_for(&mut rng);
        check_pool_arbitrage(&mut report, index, &s, outsider, &o, m, opts.grid_points)?;
    }
    Ok(report)
}

/// One-way profitability, the arbitrage optimum and the fixed point on one
/// pool.
pub fn check_pool_arbitrage(
    report: &mut CheckReport,
    index: usize,
    s: &State,
    trader: AccountId,
    o: &PriceOracle,
    m: MintedId,
    grid_points: usize,
) -> Result<()> {
    let pool = s.amms.pool(m).ok_or(Error::UninitializedAmm(m))?;
    let (o_lo, o_hi) = (o.price(m.lo())?, o.price(m.hi())?);
    let Some(dir) = profitable_direction(&pool.lo, &pool.hi, o_lo, o_hi) else {
        if solve_arbitrage(s, trader, o, m)?.is_some() {
            report.violation(
                index,
                "arb-optimal",
                format!("pool {m}: aligned but a swap was suggested"),
            );
        }
        return Ok(());
    };
    let (input, output) = match dir {
        Direction::FirstToSecond => (m.lo(), m.hi()),
        Direction::SecondToFirst => (m.hi(), m.lo()),
    };

    let forward = grid_scan(s, trader, o, input, output, grid_points)?;
    let reverse = grid_scan(s, trader, o, output, input, grid_points)?;
    if grid_resolves(s, o, input, output, grid_points)?
        && !forward.iter().any(|g| g.gain.is_positive())
    {
        report.violation(
            index,
            "one-way-profit",
            format!("pool {m}: no profitable grid point selling {input}"),
        );
    }
    if let Some(g) = reverse.iter().find(|g| !g.gain.is_negative()) {
        report.violation(
            index,
            "one-way-profit",
            format!("pool {m}: reverse swap of {} gains {}", g.x, g.gain),
        );
    }

    let Some(sol) = solve_arbitrage(s, trader, o, m)? else {
        report.violation(
            index,
            "arb-optimal",
            format!("pool {m}: misaligned but no swap suggested"),
        );
        return Ok(());
    };
    let best = forward
        .iter()
        .map(|g| &g.gain)
        .max()
        .expect("nonempty grid");
    if &sol.gain + &optimality_slack(&sol.gain) < *best {
        report.violation(
            index,
            "arb-optimal",
            format!("pool {m}: x* gains {}, grid reaches {best}", sol.gain),
        );
    }

    let mut funded = s.clone();
    funded.atoms.add_in_place(trader, input, &sol.x);
    let sw = Swap {
        account: trader,
        input,
        output,
        x: sol.x.clone(),
    };
    let after = apply_swap(&funded, &sw, &ConstProd)?;
    let target = sol.target_ratio(o)?;
    let (r_in, r_out) = after.amms.reserves(input, output)?;
    let post = &r_in / &r_out;
    if post != sol.post_ratio {
        report.violation(
            index,
            "fixed-point",
            format!("pool {m}: quoted post ratio {}, got {post}", sol.post_ratio),
        );
    }
    let rel = (post.as_rational() - target.as_rational()).abs() / target.as_rational().clone();
    if rel > Rational::from_ratio(1, 1_000_000_000).expect("nonzero") {
        report.violation(
            index,
            "fixed-point",
            format!("pool {m}: post ratio {post} vs {target}"),
        );
    }
    if rel.is_zero() && solve_arbitrage(&after, trader, o, m)?.is_some() {
        report.violation(
            index,
            "fixed-point",
            format!("pool {m}: aligned pool still suggests a swap"),
        );
    }
    Ok(())
}

/// Whether the grid's first step lies below the break-even amount
/// `r_out·o_out/o_in - r_in`, so a positive-gain grid point must exist.
pub fn grid_resolves(
    s: &State,
    o: &PriceOracle,
    input: TokenId,
    output: TokenId,
    n: usize,
) -> Result<bool> {
    let (r_in, r_out) = s.amms.reserves(input, output)?;
    let break_even =
        (&(&r_out * o.price(output)?) / o.price(input)?).into_rational() - r_in.as_rational();
    let step = (&grid_x_max(&r_in) / &Pos::from_integer(n as u64)).into_rational();
    Ok(break_even > step)
}
