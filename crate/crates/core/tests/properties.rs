use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use replearn_core::agents::{od_probe, re_play_task, rt_play_task, Detector, ODConfig, Phase, REConfig, RTConfig, SeqRepL};
use replearn_core::baselines::per_task_re_run;
use replearn_core::env::*;
use replearn_core::wcst::{encode_card, wcst_as_linear_bandit, wcst_reward, SortingRule};

fn schedule(d: usize, r: usize, tau: Vec<usize>, n: usize, seed: u64) -> Schedule {
    generate_schedule(&ScheduleParams::new(d, r, tau, n), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Smallest singular value among the top r of a symmetric PSD matrix.
fn sigma_r(p: &nalgebra::DMatrix<f64>, r: usize) -> f64 {
    let mut ev: Vec<f64> = p.clone().symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[r - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn schedule_rounds_and_switches(tau in prop::collection::vec(1usize..6, 1..4), n in 1usize..12, seed in any::<u64>()) {
        let s = schedule(8, 2, tau.clone(), n, seed);
        let total: usize = tau.iter().sum();
        prop_assert_eq!(s.total_rounds(), total * n);
        let sigma: Vec<usize> = (1..=s.total_rounds()).map(|t| s.sigma(t).unwrap().task_index).collect();
        prop_assert_eq!(sigma.windows(2).filter(|w| w[0] != w[1]).count(), total - 1);
        prop_assert!(s.sigma(0).is_none() && s.sigma(s.total_rounds() + 1).is_none());
    }

    #[test]
    fn exploration_actions_are_admissible(d in 3usize..10, seed in any::<u64>(), delta in 0.1f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 1 + d / 4;
        let b = generate_representation(d, r, &mut rng).unwrap();
        let task = generate_task(&b, NormBounds::default(), &mut rng).unwrap();
        let n = d * d;

        let mut noise = NoiseSource::new(NoiseModel::GaussianUnit, ChaCha8Rng::seed_from_u64(seed ^ 1));
        let mut s = TaskSession::single(&task, n, &mut noise);
        let cfg = REConfig::new(n, d).unwrap();
        re_play_task(&mut s, &cfg).unwrap();
        for rec in &s.records()[..cfg.n1] {
            prop_assert!((DVector::from_vec(rec.action.clone()).norm() - 1.0).abs() < 1e-12);
        }

        let mut s = TaskSession::single(&task, n, &mut noise);
        let cfg = RTConfig::new(n, b.clone()).unwrap();
        rt_play_task(&mut s, &cfg).unwrap();
        for rec in &s.records()[..cfg.n2] {
            prop_assert!((DVector::from_vec(rec.action.clone()).norm() - 1.0).abs() < 1e-12);
        }
        for rec in s.records() {
            prop_assert!(DVector::from_vec(rec.action.clone()).norm() <= 1.0 + 1e-10);
        }

        let od = ODConfig::new(d - r, delta, Detector::Exact).unwrap();
        let mut s = TaskSession::single(&task, d - r, &mut noise);
        od_probe(&b, &od, &mut s, &mut rng).unwrap();
        for rec in s.records() {
            prop_assert!((DVector::from_vec(rec.action.clone()).norm() - delta).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_recovery_is_exact(d in 2usize..12, extra in 0usize..20, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 1 + (d - 1) / 3;
        let b = generate_representation(d, r, &mut rng).unwrap();
        let task = generate_task(&b, NormBounds::default(), &mut rng).unwrap();
        // smallest N with ceil(d sqrt N) <= N is d², so N1 >= d always holds here
        let n = d * d + extra;
        let mut noise = NoiseSource::noiseless();

        let mut s = TaskSession::single(&task, n, &mut noise);
        let cfg = REConfig::new(n, d).unwrap();
        let out = re_play_task(&mut s, &cfg).unwrap();
        prop_assert!((&out.theta_hat - task.theta()).amax() <= 1e-10);
        prop_assert!(s.records()[cfg.n1..].iter().all(|x| x.inst_regret <= 1e-12));

        let mut s = TaskSession::single(&task, n, &mut noise);
        let cfg = RTConfig::new(n, b).unwrap();
        let out = rt_play_task(&mut s, &cfg).unwrap();
        prop_assert!((&out.theta_hat - task.theta()).amax() <= 1e-10);
        prop_assert!(s.records()[cfg.n2..].iter().all(|x| x.inst_regret <= 1e-12));
    }

    #[test]
    fn accumulator_grows_and_subspace_is_found(seed in any::<u64>(), noisy in any::<bool>()) {
        let (d, r) = (8, 2);
        let s = schedule(d, r, vec![24], 100, seed);
        let truth = &s.contexts[0].representation;
        let mut noise = if noisy {
            NoiseSource::new(NoiseModel::GaussianUnit, ChaCha8Rng::seed_from_u64(seed))
        } else {
            NoiseSource::noiseless()
        };
        let mut agent = SeqRepL::new(d, r, 2).unwrap();
        let mut last = 0.0;
        let mut checked = false;
        s.play(&mut noise, |sess| {
            let out = agent.next_task(sess)?;
            if out.phase == Phase::Exploration {
                let now = sigma_r(agent.accumulator(), r);
                assert!(now >= last - 1e-12, "sigma_r fell from {last} to {now}");
                last = now;
            }
            if !noisy && !checked {
                if let Some(b_hat) = agent.b_hat() {
                    assert!(subspace_error(b_hat, truth)? <= 1e-8);
                    checked = true;
                }
            }
            Ok(())
        }).unwrap();
        prop_assert!(noisy || checked);
    }

    #[test]
    fn per_task_re_ignores_context_labels(seed in any::<u64>()) {
        let s = schedule(6, 2, vec![3, 2], 64, seed);
        // the same five tasks in the same order, all filed under one context
        let mut merged = s.clone();
        let tasks: Vec<TaskVector> = s.contexts.iter().flat_map(|c| c.tasks.clone()).collect();
        merged.contexts.truncate(1);
        merged.contexts[0].tasks = tasks;
        let run = |sch: &Schedule| {
            let mut noise = NoiseSource::new(NoiseModel::GaussianUnit, ChaCha8Rng::seed_from_u64(seed));
            per_task_re_run(sch, &mut noise).unwrap()
        };
        let (a, b) = (run(&s), run(&merged));
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.inst_regret, y.inst_regret);
            prop_assert_eq!(x.reward, y.reward);
        }
    }
}

#[test]
fn every_card_and_rule_has_one_correct_sort() {
    for s in 1..=4 {
        for n in 1..=4 {
            for c in 1..=4 {
                let card = encode_card(s, n, c).unwrap();
                for rule in SortingRule::ALL {
                    let theta = wcst_as_linear_bandit(&card, rule);
                    let mut winners = 0;
                    for a in 1..=4 {
                        let mut x = DVector::zeros(4);
                        x[a - 1] = 1.0;
                        let r = wcst_reward(&card, rule, a);
                        assert_eq!(r, x.dot(theta.theta()));
                        winners += (r == 1.0) as usize;
                    }
                    assert_eq!(winners, 1);
                }
            }
        }
    }
}
