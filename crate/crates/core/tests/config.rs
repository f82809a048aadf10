use std::path::PathBuf;

use proptest::prelude::*;
use slfv::config::{emit_config, parse_config, InitKind, SimConfig};
use slfv::events::Case;
use slfv::forward::Schedule;
use slfv::geometry::Dim;

fn arb_config() -> impl Strategy<Value = SimConfig> {
    (
        (any::<bool>(), any::<bool>(), 0.01f64..=1.0, 0.001f64..5.0, 1.01f64..1.99),
        (proptest::option::of(0.5f64..100.0), 1u64..1_000_000, any::<u64>(), 1u64..10_000),
        (any::<bool>(), proptest::collection::vec(0u64..100_000_000, 1..4), proptest::collection::vec(0.0f64..1e3, 1..4)),
        (1usize..4096, 2usize..10_000_000, any::<bool>(), 0.01f64..10.0, 0.0f64..=1.0, 0.0f64..1e3),
    )
        .prop_map(|((two, b, u, r, alpha), (side, n, seed, replicas), (by_events, ks, ts), (grid, maxb, patch, pr, pf, t))| SimConfig {
            dim: if two { Dim::Two } else { Dim::One },
            case: if b { Case::B } else { Case::A },
            u,
            r: (!b).then_some(r),
            alpha: b.then_some(alpha),
            side,
            n,
            seed,
            replicas,
            snapshots: if by_events { Schedule::Events(ks) } else { Schedule::Times(ts) },
            out: PathBuf::from("out/x"),
            grid,
            max_breakpoints: maxb,
            init: if patch { InitKind::Patch } else { InitKind::HalfSpace },
            patch_radius: pr,
            patch_frequency: pf,
            t,
        })
}

proptest! {
    #[test]
    fn emit_then_parse_is_identity(cfg in arb_config()) {
        let text = emit_config(&cfg);
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
