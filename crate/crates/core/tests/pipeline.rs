// SPDX-License-Identifier: Apache-2.0

use cutmap::aig::{exhaustive_patterns, generate_random_aig, mask_rows};
use cutmap::aiger::{parse_aiger, write_aiger, AigerFormat};
use cutmap::cuts::CutParams;
use cutmap::dataset::{extract_labels, CutDataset};
use cutmap::library::Library;
use cutmap::mapper::{CostModel, Mapper};
use cutmap::timing::{bin_delay, netlist_delay, DelayBinning};
use proptest::prelude::*;

fn mapper(lib: &Library) -> Mapper<'_> {
    Mapper::new(lib, CutParams::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn aiger_round_trip_then_map_is_equivalent(seed in any::<u64>(), pis in 2usize..9, ands in 1usize..60, binary: bool) {
        let g = generate_random_aig(seed, pis, ands);
        let format = if binary { AigerFormat::Binary } else { AigerFormat::Ascii };
        let back = parse_aiger(&write_aiger(&g, format)).unwrap();
        prop_assert_eq!(back.exhaustive_outputs(), g.exhaustive_outputs());

        let lib = Library::bundled();
        let m = mapper(&lib).map(&back, CostModel::LibraryPin, None).unwrap();
        let mut sim = m.netlist.simulate(&lib, &exhaustive_patterns(pis));
        sim.iter_mut().for_each(|v| mask_rows(v, 1 << pis));
        prop_assert_eq!(sim, g.exhaustive_outputs());
        prop_assert_eq!(m.cover.predicted_delay(), netlist_delay(&m.netlist, &lib).unwrap());
    }

    #[test]
    fn shuffled_trials_are_reproducible_and_never_beat_library_cost(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        let lib = Library::bundled();
        let g = generate_random_aig(seed, 8, 70);
        let m = mapper(&lib);
        let a = m.shuffle_map(&g, CostModel::Unit, 4, shuffle_seed).unwrap();
        prop_assert_eq!(&a, &m.shuffle_map(&g, CostModel::Unit, 4, shuffle_seed).unwrap());
        prop_assert!(a[0].is_default && a[1..].iter().all(|t| !t.is_default));
        let best = netlist_delay(&m.map(&g, CostModel::LibraryPin, None).unwrap().netlist, &lib).unwrap();
        prop_assert!(a.iter().all(|t| t.delay >= best));
    }

    #[test]
    fn extracted_labels_agree_with_binning(seed in any::<u64>()) {
        let lib = Library::bundled();
        let bins = DelayBinning::default();
        let circuits = vec![generate_random_aig(seed, 10, 80).with_name("c")];
        let data = extract_labels(&circuits, &lib, &bins).unwrap();
        prop_assert!(!data.is_empty());
        for r in &data.records {
            prop_assert_eq!(r.class, bin_delay(r.delay_ps, &bins).unwrap());
            prop_assert!(r.leaves.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(r.validate(&bins).is_ok());
        }
        let back = CutDataset::from_jsonl(&data.to_jsonl(), &bins).unwrap();
        prop_assert_eq!(back.records, data.records);
    }
}
