//! Arbitrage on constant-product pools.
//!
//! For a trader holding none of the pool's minted tokens, a swap of `x` units
//! of `input` is profitable exactly when its rate exceeds the oracle exchange
//! rate `o_in / o_out`. At most one direction of a pool admits profitable
//! swaps, and the gain in that direction is maximized by
//!
//! ```text
//! x* = sqrt(o_out · r_in · r_out / o_in) - r_in
//! ```
//!
//! which moves the pool to `r_in' / r_out' = o_out / o_in`. The square root is
//! the only inexact step; everything else is exact rational arithmetic.
//!
//! [`grid_scan`] and [`grid_best_gain`] evaluate the closed-form swap gain on
//! an evenly spaced grid and serve as an independent check of the optimum.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::econ::{swap_gain_closed_form, PriceOracle};
use crate::error::{Error, Result};
use crate::numerics::{default_sqrt_tol, sqrt_approx, NonNeg, Pos, Rational};
use crate::state::{AccountId, MintedId, State, TokenId};
use crate::txn::{swap_output, ConstProd, SwapRate};

/// Direction of a swap relative to the order in which a pair was named.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Sell the first token, buy the second.
    FirstToSecond,
    /// Sell the second token, buy the first.
    SecondToFirst,
}

/// `cmp(sx(x, r_in, r_out), o_in / o_out)`; for a trader without minted
/// holdings in the pool this is the sign of the swap's gain.
pub fn gain_sign(
    x: &Pos,
    r_in: &Pos,
    r_out: &Pos,
    o_in: &Pos,
    o_out: &Pos,
    sx: &dyn SwapRate,
) -> Ordering {
    sx.rate(x, r_in, r_out).cmp(&(o_in / o_out))
}

/// The only direction in which some positive amount yields a positive gain,
/// or `None` when the reserve ratio already matches the oracle.
///
/// Selling the first token is profitable for small amounts iff
/// `r1 / r0 > o0 / o1`, i.e. `r1·o1 > r0·o0`.
pub fn profitable_direction(r0: &Pos, r1: &Pos, o0: &Pos, o1: &Pos) -> Option<Direction> {
    match (r1 * o1).cmp(&(r0 * o0)) {
        Ordering::Greater => Some(Direction::FirstToSecond),
        Ordering::Less => Some(Direction::SecondToFirst),
        Ordering::Equal => None,
    }
}

/// `max(0, sqrt(o_out·r_in·r_out / o_in) - r_in)`.
pub fn optimal_amount(r_in: &Pos, r_out: &Pos, o_in: &Pos, o_out: &Pos, rel_tol: &Pos) -> NonNeg {
    let radicand = &(&(o_out * r_in) * r_out) / o_in;
    let root = sqrt_approx(&radicand.to_nonneg(), rel_tol);
    root.checked_sub(&r_in.to_nonneg())
        .unwrap_or_else(|_| NonNeg::zero())
}

/// A quoted swap on one pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapQuote {
    pub input: TokenId,
    pub output: TokenId,
    pub x: Pos,
    pub y: Pos,
    pub gain: Rational,
}

/// The optimal arbitrage swap on a pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArbSolution {
    pub pool: MintedId,
    /// `[input, output]`.
    pub direction: [TokenId; 2],
    pub x: Pos,
    pub y: Pos,
    /// Expected gain from the closed form.
    pub gain: Rational,
    /// `r_in' / r_out'` after the swap; equals `o_out / o_in` at the optimum.
    pub post_ratio: Pos,
}

impl ArbSolution {
    pub fn input(&self) -> TokenId {
        self.direction[0]
    }

    pub fn output(&self) -> TokenId {
        self.direction[1]
    }

    pub fn quote(&self) -> SwapQuote {
        SwapQuote {
            input: self.input(),
            output: self.output(),
            x: self.x.clone(),
            y: self.y.clone(),
            gain: self.gain.clone(),
        }
    }

    /// Oracle ratio `o_out / o_in` the post-swap reserves should match.
    pub fn target_ratio(&self, o: &PriceOracle) -> Result<Pos> {
        Ok(o.price(self.output())? / o.price(self.input())?)
    }
}

/// Solves arbitrage with the default square-root tolerance.
pub fn solve_arbitrage(
    s: &State,
    a: AccountId,
    o: &PriceOracle,
    m: MintedId,
) -> Result<Option<ArbSolution>> {
    solve_arbitrage_with_tol(s, a, o, m, &default_sqrt_tol())
}

/// Optimal constant-product arbitrage on pool `m` for trader `a`.
///
/// The trader must hold none of the pool's minted tokens. Balance sufficiency
/// is not checked. Returns `None` when the pool is aligned with the oracle or
/// the computed amount rounds to zero.
pub fn solve_arbitrage_with_tol(
    s: &State,
    a: AccountId,
    o: &PriceOracle,
    m: MintedId,
    rel_tol: &Pos,
) -> Result<Option<ArbSolution>> {
    let pool = s.amms.pool(m).ok_or(Error::UninitializedAmm(m))?;
    if !s.mints.get(a, m).is_zero() {
        return Err(Error::TraderHoldsMinted {
            account: a,
            pool: m,
        });
    }
    let (o_lo, o_hi) = (o.price(m.lo())?, o.price(m.hi())?);
    let (input, output) = match profitable_direction(&pool.lo, &pool.hi, o_lo, o_hi) {
        None => return Ok(None),
        Some(Direction::FirstToSecond) => (m.lo(), m.hi()),
        Some(Direction::SecondToFirst) => (m.hi(), m.lo()),
    };
    let (r_in, r_out) = s.amms.reserves(input, output)?;
    let (o_in, o_out) = (o.price(input)?, o.price(output)?);
    let Some(x) = optimal_amount(&r_in, &r_out, o_in, o_out, rel_tol).to_pos() else {
        return Ok(None);
    };
    let y = swap_output(&x, &r_in, &r_out, &ConstProd);
    // No minted holdings: the liquidity-provider factor of the gain is 1.
    let gain = (&y * o_out).into_rational() - (&x * o_in).into_rational();
    let post_ratio = &(&r_in + &x)
        / &r_out
            .checked_sub(&y)
            .map_err(|_| Error::ReserveDrained(m))?;
    Ok(Some(ArbSolution {
        pool: m,
        direction: [input, output],
        x,
        y,
        gain,
        post_ratio,
    }))
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub x: Pos,
    pub gain: Rational,
}

/// `n` evenly spaced amounts `x_max·i/n` for `i = 1..=n`.
pub fn grid_points(x_max: &Pos, n: usize) -> Vec<Pos> {
    let n_r = Pos::from_integer(n as u64);
    (1..=n as u64)
        .map(|i| &(x_max * &Pos::from_integer(i)) / &n_r)
        .collect()
}

/// Closed-form gain of swapping `x` against a constant-product pool.
pub fn constprod_gain(
    x: &Pos,
    r_in: &Pos,
    r_out: &Pos,
    o_in: &Pos,
    o_out: &Pos,
    user_minted: &NonNeg,
    supply: &Pos,
) -> Rational {
    let y = swap_output(x, r_in, r_out, &ConstProd);
    swap_gain_closed_form(x, &y, o_in, o_out, user_minted, supply)
}

/// Grid upper bound: `10·r_in`. Constant-product swaps never drain the output
/// reserve, so nodrain does not bound `x` further.
pub fn grid_x_max(r_in: &Pos) -> Pos {
    r_in * &Pos::from_integer(10)
}

/// Evaluates the gain of `a` swapping `input` for `output` at `n_points`
/// evenly spaced amounts in `(0, 10·r_in]`.
pub fn grid_scan(
    s: &State,
    a: AccountId,
    o: &PriceOracle,
    input: TokenId,
    output: TokenId,
    n_points: usize,
) -> Result<Vec<GridPoint>> {
    let ctx = GridContext::new(s, a, o, input, output, n_points)?;
    Ok(ctx
        .points
        .par_iter()
        .map(|x| GridPoint {
            x: x.clone(),
            gain: ctx.gain(x),
        })
        .collect())
}

/// Best grid point of [`grid_scan`]; ties go to the smaller amount.
pub fn grid_best_gain(
    s: &State,
    a: AccountId,
    o: &PriceOracle,
    input: TokenId,
    output: TokenId,
    n_points: usize,
) -> Result<GridPoint> {
    let ctx = GridContext::new(s, a, o, input, output, n_points)?;
    let (i, gain) = ctx
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x)| (i, ctx.gain(x)))
        .reduce_with(|l, r| match l.1.cmp(&r.1) {
            Ordering::Greater => l,
            Ordering::Less => r,
            Ordering::Equal => {
                if l.0 <= r.0 {
                    l
                } else {
                    r
                }
            }
        })
        .expect("at least two grid points");
    Ok(GridPoint {
        x: ctx.points[i].clone(),
        gain,
    })
}

struct GridContext {
    r_in: Pos,
    r_out: Pos,
    o_in: Pos,
    o_out: Pos,
    user_minted: NonNeg,
    supply: Pos,
    points: Vec<Pos>,
}

impl GridContext {
    fn new(
        s: &State,
        a: AccountId,
        o: &PriceOracle,
        input: TokenId,
        output: TokenId,
        n: usize,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 2 points, got {n}"
            )));
        }
        let m = MintedId::new(input, output)?;
        let (r_in, r_out) = s.amms.reserves(input, output)?;
        let supply = s.mintsupply(m).to_pos().ok_or(Error::DivisionByZero)?;
        let points = grid_points(&grid_x_max(&r_in), n);
        Ok(GridContext {
            o_in: o.price(input)?.clone(),
            o_out: o.price(output)?.clone(),
            user_minted: s.mints.get(a, m),
            supply,
            r_in,
            r_out,
            points,
        })
    }

    fn gain(&self, x: &Pos) -> Rational {
        constprod_gain(
            x,
            &self.r_in,
            &self.r_out,
            &self.o_in,
            &self.o_out,
            &self.user_minted,
            &self.supply,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::AtomicLedger;
    use crate::txn::{apply_create, apply_swap, Create, Swap};

    fn t(n: u64) -> TokenId {
        TokenId(n)
    }
    fn a(n: u64) -> AccountId {
        AccountId(n)
    }
    fn p(n: u64) -> Pos {
        Pos::from_integer(n)
    }
    fn pr(n: u64, d: u64) -> Pos {
        Pos::from_ratio(n, d).unwrap()
    }

    fn oracle() -> PriceOracle {
        PriceOracle::new([(t(0), p(3)), (t(1), p(4))])
    }

    fn example_state() -> State {
        let atoms = AtomicLedger::new()
            .add(a(9), t(0), &p(18))
            .add(a(9), t(1), &p(6))
            .add(a(0), t(0), &p(1000))
            .add(a(0), t(1), &p(1000));
        let s = State::initial(atoms);
        apply_create(
            &s,
            &Create {
                account: a(9),
                t0: t(0),
                t1: t(1),
                x0: p(18),
                x1: p(6),
            },
        )
        .unwrap()
    }

    #[test]
    fn gain_sign_example() {
        // selling 6 of t1 into (t1: 6, t0: 18): rate 18/12 = 3/2 vs 4/3
        assert_eq!(
            gain_sign(&p(6), &p(6), &p(18), &p(4), &p(3), &ConstProd),
            Ordering::Greater
        );
        // rate 18/12 = 3/2 vs 3/2
        assert_eq!(
            gain_sign(&p(6), &p(6), &p(18), &p(3), &p(2), &ConstProd),
            Ordering::Equal
        );
        assert_eq!(
            gain_sign(&p(6), &p(18), &p(6), &p(3), &p(4), &ConstProd),
            Ordering::Less
        );
    }

    #[test]
    fn direction_example() {
        assert_eq!(
            profitable_direction(&p(18), &p(6), &p(3), &p(4)),
            Some(Direction::SecondToFirst)
        );
        assert_eq!(
            profitable_direction(&p(6), &p(18), &p(4), &p(3)),
            Some(Direction::FirstToSecond)
        );
        assert_eq!(profitable_direction(&p(4), &p(3), &p(3), &p(4)), None);
    }

    #[test]
    fn optimal_amount_example_and_aligned() {
        let tol = default_sqrt_tol();
        assert_eq!(
            optimal_amount(&p(6), &p(18), &p(4), &p(3), &tol),
            NonNeg::from_integer(3)
        );
        // aligned: o_out·r_out = o_in·r_in
        assert!(optimal_amount(&p(4), &p(3), &p(3), &p(4), &tol).is_zero());
        // wrong direction clamps to zero
        assert!(optimal_amount(&p(18), &p(6), &p(3), &p(4), &tol).is_zero());
    }

    #[test]
    fn solve_example() {
        let s = example_state();
        let m = MintedId::new(t(0), t(1)).unwrap();
        let sol = solve_arbitrage(&s, a(0), &oracle(), m).unwrap().unwrap();
        assert_eq!(sol.direction, [t(1), t(0)]);
        assert_eq!(sol.x, p(3));
        assert_eq!(sol.y, p(6));
        assert_eq!(sol.gain, Rational::from_integer(6));
        assert_eq!(sol.post_ratio, pr(3, 4));
        assert_eq!(sol.target_ratio(&oracle()).unwrap(), pr(3, 4));
        assert_eq!(
            serde_json::to_string(&sol).unwrap(),
            r#"{"pool":"0-1","direction":[1,0],"x":"3/1","y":"6/1","gain":"6/1","post_ratio":"3/4"}"#
        );

        let sw = Swap {
            account: a(0),
            input: t(1),
            output: t(0),
            x: sol.x.clone(),
        };
        let s2 = apply_swap(&s, &sw, &ConstProd).unwrap();
        assert_eq!(solve_arbitrage(&s2, a(0), &oracle(), m).unwrap(), None);
    }

    #[test]
    fn solve_preconditions() {
        let s = example_state();
        let m = MintedId::new(t(0), t(1)).unwrap();
        assert!(matches!(
            solve_arbitrage(&s, a(9), &oracle(), m),
            Err(Error::TraderHoldsMinted { .. })
        ));
        let m2 = MintedId::new(t(0), t(2)).unwrap();
        assert!(matches!(
            solve_arbitrage(&s, a(0), &oracle(), m2),
            Err(Error::UninitializedAmm(_))
        ));
        let aligned = PriceOracle::new([(t(0), p(1)), (t(1), p(3))]);
        assert_eq!(solve_arbitrage(&s, a(0), &aligned, m).unwrap(), None);
    }

    #[test]
    fn grid_finds_the_example_optimum() {
        let s = example_state();
        // x_max = 60, 20 points: step 3, so x = 3 is on the grid.
        let best = grid_best_gain(&s, a(0), &oracle(), t(1), t(0), 20).unwrap();
        assert_eq!(best.x, p(3));
        assert_eq!(best.gain, Rational::from_integer(6));
        let scan = grid_scan(&s, a(0), &oracle(), t(0), t(1), 20).unwrap();
        assert!(scan.iter().all(|g| g.gain.is_negative()));
        assert!(grid_best_gain(&s, a(0), &oracle(), t(1), t(0), 1).is_err());
    }

    #[test]
    fn grid_ties_go_to_smaller_x() {
        let s = example_state();
        // Liquidity provider with the whole supply: every gain is zero.
        let best = grid_best_gain(&s, a(9), &oracle(), t(1), t(0), 50).unwrap();
        assert!(best.gain.is_zero());
        assert_eq!(best.x, pr(6 * 10, 50));
    }
}
