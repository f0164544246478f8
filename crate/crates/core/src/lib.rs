//! Optimal stopping for boxed reward search with unknown reward distributions.
//!
//! The crate models the classic "inspect boxes at a fixed cost, keep the best
//! reward" problem and its modern use in best-of-n generation: draw samples one
//! at a time, pay `c` per draw, stop when the running maximum is good enough.
//!
//! Three stopping policies are provided, in increasing order of realism about
//! what the caller knows:
//!
//! * [`policies::run_weitzman`] - the reservation-value rule for a *known*
//!   distribution: stop as soon as the maximum reaches the fair cap, the
//!   threshold `tau` solving `E[(v - tau)+] = c`.
//! * [`policies::run_ucb_pandora`] - the same rule driven by an anytime-valid
//!   upper confidence bound on the fair cap, for nonnegative rewards with an
//!   *unknown* exponential-family scale. The confidence sequence lives in
//!   [`confidence`].
//! * [`adaptive::run_adaptive`] and [`adaptive::run_target_ar`] - streaming
//!   best-of-n for reward-model scores: fit a shifted-exponential law to the
//!   exponentiated rewards above the running median, price the stopping
//!   threshold in utility space (acceptance rate against an estimated
//!   benchmark), and stop when the maximum clears it.
//!
//! [`distributions`] supplies the reward laws and the fair-cap solver
//! (closed forms where they exist, midpoint Riemann sum plus bisection
//! elsewhere). [`harness`] loads recorded reward traces, replays them under
//! deterministic permutations, and reproduces the profit / win-rate /
//! sample-saving / regret experiments. The `pandora` binary exposes all of it
//! on the command line.
//!
//! Determinism is a design constraint throughout: sampling is inverse-CDF on
//! a counter-seeded ChaCha stream, permutation seeds are derived with a
//! documented splitmix chain, and experiment reports are byte-identical across
//! reruns of the same config.

pub mod adaptive;
pub mod cli;
pub mod confidence;
pub mod distributions;
pub mod exact_sum;
pub mod harness;
pub mod policies;

pub use distributions::{FairCapProblem, FairCapResult, RewardDistribution};
pub use policies::{PolicyOutcome, RewardStream};
