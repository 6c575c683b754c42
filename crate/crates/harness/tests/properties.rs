use cablebot::io;
use cablebot::model::ModelFile;
use cablebot::scenarios::{gen_scenarios, Role};
use cablebot::config::{RunConfig, WorldPreset};
use cablebot_core::fuzzy::{FisDomains, RobotFis};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_targets_stay_in_the_disc(seed in any::<u64>(), n in 1usize..200, frac in 0.05f64..0.95) {
        let cfg = RunConfig::preset(WorldPreset::Default);
        let r_max = frac * cfg.world.anchor_radius;
        let set = gen_scenarios(n, r_max, seed, Role::Test, &cfg.world).unwrap();
        prop_assert_eq!(set.targets.len(), n);
        prop_assert!(set.targets.iter().all(|t| t[0].hypot(t[1]) <= r_max));
        prop_assert!(set.validate(&cfg.world).is_ok());
    }

    #[test]
    fn gfs_model_files_round_trip(consequent in 0u8..5, seed in any::<u64>()) {
        let cfg = RunConfig::preset(WorldPreset::Default).with_seed(seed).finalize().unwrap();
        let fleet = vec![RobotFis::uniform(&FisDomains::for_world(&cfg.world), consequent); 3];
        let model = ModelFile::gfs(&cfg, &fleet, serde_json::json!({}));
        let bytes = model.to_bytes().unwrap();
        let back = ModelFile::parse(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(io::to_json_bytes(&back).unwrap(), bytes);
    }
}
