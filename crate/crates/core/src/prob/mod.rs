//! Finite probability spaces and the objects living on them.

mod distribution;
mod partition;
mod scenarios;
mod space;
mod variable;

pub use distribution::{distribution, quantile, same_distribution, Distribution};
pub(crate) use distribution::cmp_scalar;
pub use partition::{cond_expect, quantile_partition, Partition};
pub use scenarios::{read_scenarios, Scenarios};
pub use space::{FiniteSpace, Space};
pub use variable::{neg_part, pos_part, sum_all, RandomVariable};
