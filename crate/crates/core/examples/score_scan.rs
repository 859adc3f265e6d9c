//! Scratch: distribution of goal preview scores along a default run.
use autotelic::config::RunConfig;
use autotelic::env::{Predictor, ToyEnv};
use autotelic::goals::score_preview;
use autotelic::rng::{stream, substream_seed, STREAM_INIT, STREAM_TASKS};

fn main() {
    let cfg = RunConfig { run: autotelic::config::RunSection { seed: 7, ..Default::default() }, ..Default::default() };
    let env = ToyEnv::reset(cfg.env.clone(), 7).unwrap();
    let mut rng = stream(7, STREAM_INIT);
    let mut predictor = Predictor::new(cfg.env.d_o, cfg.env.d_h, cfg.env.num_classes, &mut rng);
    let h = autotelic::selfmod::boot_h_mod(env.boot_bytes(), cfg.env.d_h);
    let mut e = ToyEnv::reset(cfg.env.clone(), 7).unwrap();
    for t in 0..5000u64 {
        let s = e.step(t);
        let lr = cfg.env.learning_rate / (1.0 + t as f64 / cfg.env.lr_decay_tau);
        predictor.train_step(&[(s.obs.clone(), s.label)], &h, autotelic::env::UpdateRule::PlainGradient, lr).unwrap();
    }
    let mut below = 0usize;
    let mut total = 0usize;
    let mut worst: f64 = 1.0;
    let mut base_lo: f64 = 1.0;
    let mut base_hi: f64 = 0.0;
    for difficulty in [1u8, 3, 5, 7] {
        for family in 0..5u32 {
            for pa in 0..6u8 {
                let key = (u64::from(family) << 24) | (u64::from(difficulty) << 16) | (u64::from(pa) << 8);
                let mut prng = stream(substream_seed(7, key), STREAM_TASKS);
                let probe = env.goal_probe(family, difficulty, 64, &mut prng);
                let mut cap = |x: &[f64]| predictor.soft_accuracy(&probe, x);
                let base = predictor.soft_accuracy(&probe, &h).unwrap();
                let mut srng = stream(1000 + u64::from(pa) + 64 * u64::from(difficulty), STREAM_TASKS);
                let est = score_preview(&mut cap, &h, 160.0, 0.1, 0.05, 580.0, 12, 4, &mut srng).unwrap();
                total += 1;
                if est.g < 0.01 { below += 1; }
                if est.g < worst { worst = est.g; }
                base_lo = base_lo.min(base);
                base_hi = base_hi.max(base);
                if pa == 0 {
                    println!("fam {family} diff {difficulty}: base={base:.4} g={:+.5}", est.g);
                }
            }
        }
    }
    println!("below gamma_goal: {below}/{total}; worst g = {worst:+.5}; base range [{base_lo:.3}, {base_hi:.3}]");
}
