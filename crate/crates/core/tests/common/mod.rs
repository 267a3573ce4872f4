//! Small configs shared by the experiment and acceptance tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use opplab_core::experiments::{run_with_workers, Config, ExperimentId};

/// Reduced runs of every experiment: same code paths, seconds of work.
pub const SMALL: [(ExperimentId, &str); 8] = [
    (ExperimentId::E1, "forms = 3\nt_grid = 10 15 20 30\nvolume_samples = 20000\nvolume_t = 15 30\n"),
    (ExperimentId::E2, "forms = 2\nt = 20\ninterval_lo = -5\ninterval_hi = 5\nq = 3\n"),
    (ExperimentId::E3, "q = 1, 2\nfirst_samples = 20000\nsecond_samples = 20000\ncalib_samples = 20000\n"),
    (
        ExperimentId::E4,
        "index_n = 2 3\nindex_q_max = 6\ncoset_n = 2\ncoset_q_max = 6\ntau_n = 2\ntau_q_max = 4\norbit_instances = 4\norbit_box = 6\n",
    ),
    (ExperimentId::E5, "instances = 6\nq = 1 3\n"),
    (ExperimentId::E6, "volumes = 10 100\nsamples = 10000\n"),
    (ExperimentId::E7, "forms = 3\nt_grid = 3 4 5 6\ndiophantine_q_max = 10000\n"),
    (
        ExperimentId::E8,
        "fib_q_max = 1000\noracle_q_max = 1000\noracle_random = 3\nrandom_q_max = 1000 10000 20000\nrandom_alphas = 6\n",
    ),
];

pub fn small_config(id: ExperimentId, seed: u64) -> Config {
    let text = SMALL.iter().find(|(i, _)| *i == id).unwrap().1;
    let mut cfg = Config::parse(text).unwrap();
    cfg.set("seed", seed);
    cfg
}

/// Every CSV written into `dir`, by file name.
pub fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

/// Runs `id` twice with the same seed on different worker counts and
/// returns whether the data CSVs agree byte for byte.
pub fn deterministic(id: ExperimentId, cfg: &Config, root: &Path) -> bool {
    let a = root.join(format!("{id}_a"));
    let b = root.join(format!("{id}_b"));
    run_with_workers(id, cfg, &a, 1).unwrap();
    run_with_workers(id, cfg, &b, 3).unwrap();
    let (x, y) = (csv_bytes(&a), csv_bytes(&b));
    !x.is_empty() && x == y
}
