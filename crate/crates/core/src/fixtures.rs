//! Hand-built frames used by tests, the `fixtures` subcommand and the docs.

use crate::framegen::AccessMap;
use crate::model::Rational;

/// Five devices, ten RBs, three replicas each, all at 1 W.
///
/// Devices 0 and 1 own exclusive RBs (0 and 9). Devices 0, 1 and 2 share
/// RB 1 at equal power, and device 2's other RBs (6, 7) are shared with
/// devices 3 and 4, so device 2 only decodes once both 0 and 1 have been
/// cancelled. Devices 3 and 4 are exclusive on RBs 2 and 3.
pub fn worked_example() -> AccessMap {
    let one = Rational::from_integer(1);
    AccessMap::from_placements(
        [
            vec![0, 1, 4],
            vec![1, 5, 9],
            vec![1, 6, 7],
            vec![2, 6, 7],
            vec![3, 6, 7],
        ]
        .into_iter()
        .map(|rbs| (rbs, one)),
    )
}

/// Five devices on ten RBs with K = 3 where RBs 2, 3 and 5 (zero-based)
/// are the only exclusive ones and RB 9 is idle.
pub fn exclusive_rb_example() -> AccessMap {
    let levels = [4, 2, 1, 2, 1].map(Rational::from_integer);
    AccessMap::from_placements(
        [
            vec![0, 2, 4],
            vec![0, 3, 6],
            vec![1, 6, 8],
            vec![1, 5, 7],
            vec![4, 7, 8],
        ]
        .into_iter()
        .zip(levels),
    )
}
