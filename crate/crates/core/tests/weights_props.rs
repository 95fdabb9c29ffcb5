use proptest::prelude::*;
use sfnet::weights::{complexity_report, from_bytes, init_weights, to_bytes};
use sfnet::EngineConfig;

fn config() -> impl Strategy<Value = EngineConfig> {
    (
        prop::sample::select(vec![4usize, 6, 8]),
        prop::sample::select(vec![4usize, 6]),
        prop::sample::select(vec![2usize, 4, 8]),
        2usize..=4,
        2usize..=3,
        1usize..=4,
    )
        .prop_map(|(c, s, h, gd, gs, dil)| {
            let mut cfg = EngineConfig::default();
            cfg.arch.dslb_channels = c;
            cfg.arch.sub_channels = s;
            cfg.arch.tcm_hidden = h;
            cfg.arch.dslb_groups = gd;
            cfg.arch.sub_groups = gs;
            cfg.arch.dilations = (0..dil).map(|i| 1 << i).collect();
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sharing_saves_exactly_the_shared_stack(cfg in config()) {
        let shared = complexity_report(&cfg).unwrap();
        let mut off = cfg.clone();
        off.arch.share_stcm = false;
        let unshared = complexity_report(&off).unwrap();

        // closed form for one S-TCM on a 5*C wide bottleneck
        let a = &cfg.arch;
        let (w, h) = ((5 * a.dslb_channels) as u64, a.tcm_hidden as u64);
        let stcm = 2 * w * h + 5 * h * h + 8 * h + w;
        let stack = (a.dslb_groups * a.dilations.len()) as u64 * stcm;

        prop_assert_eq!(shared.params_per_subnet["stcm_shared"], stack);
        prop_assert_eq!(unshared.params_total - shared.params_total, stack);
        prop_assert!(!unshared.params_per_subnet.contains_key("stcm_shared"));
        prop_assert_eq!(shared.macs_per_second, unshared.macs_per_second);

        let ws = init_weights(&cfg, 0).unwrap();
        let in_file: u64 = ws
            .tensors()
            .iter()
            .filter(|(n, _)| n.starts_with("dslb.tcm."))
            .map(|(_, t)| t.numel() as u64)
            .sum();
        prop_assert_eq!(in_file, stack);
        prop_assert_eq!(ws.params_total() as u64, shared.params_total);
    }

    #[test]
    fn serialisation_is_canonical(cfg in config(), seed in any::<u64>()) {
        let ws = init_weights(&cfg, seed).unwrap();
        let a = to_bytes(&ws).unwrap();
        prop_assert_eq!(&a, &to_bytes(&ws.clone()).unwrap());
        let back = from_bytes(&a).unwrap();
        prop_assert_eq!(to_bytes(&back).unwrap(), a);
        prop_assert_eq!(back, ws);
    }

    #[test]
    fn damaged_files_are_rejected_without_panicking(seed in any::<u64>(), pos in any::<prop::sample::Index>(), flip in 1u8..=255) {
        let mut cfg = EngineConfig::default();
        cfg.arch.dslb_channels = 4;
        cfg.arch.sub_channels = 4;
        cfg.arch.tcm_hidden = 2;
        cfg.arch.dilations = vec![1];
        let mut bytes = to_bytes(&init_weights(&cfg, seed).unwrap()).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] ^= flip;
        // A flip inside the manifest can leave valid JSON (a changed digit in
        // the config, say). Anything that loads must re-serialise to the
        // damaged bytes.
        match from_bytes(&bytes) {
            Err(_) => {}
            Ok(ws) => prop_assert_eq!(&to_bytes(&ws).unwrap(), &bytes),
        }
        prop_assert!(from_bytes(&bytes[..i]).is_err());
    }
}
