//! Distributed triangle finding and listing under per-edge bandwidth
//! limits, together with the round-synchronous simulator, instance
//! generators, hash families and statistical harnesses used to check them.
//!
//! The pieces fit together like this:
//!
//! - [`graph`] holds the input instances and every offline quantity the
//!   algorithms are judged against, including the brute-force triangle
//!   oracle.
//! - [`hash`] provides the compactly encodable k-wise independent hash
//!   family the heavy-triangle algorithm distributes over the network.
//! - [`sim`] executes node programs in synchronous rounds, enforcing the
//!   bit budget of every channel and accounting for all traffic.
//! - [`algos`] contains the node programs: neighborhood sampling for heavy
//!   triangles, hash-bucketed edge exchange, the cover-set recursion for
//!   light triangles, and the finding/listing compositions.
//! - [`experiment`] drives batches of simulations, compares outputs with
//!   the oracle, and verifies the probabilistic guarantees at statistical
//!   tolerance.
//!
//! See the guide in `book/` for a narrative walkthrough.

pub mod algos;
pub mod bits;
pub mod experiment;
pub mod graph;
pub mod hash;
pub mod sim;
