mod common;

use chrono::NaiveDate;
use ndarray::{s, Array2};
use proptest::prelude::*;

use forecast_env::curriculum::{assign_bands, ordinal_histogram, permutation_entropy, schedule, DifficultyProfile};
use forecast_env::data::{denormalize, make_windows, split, zscore, Frequency, MultivariateSeries, SplitRatios, WindowSpec};
use forecast_env::eval::{mae, mse};
use forecast_env::models::{predict_time_series, ExternalRegistry, ForecastModelId};
use forecast_env::orchestrator::{run_episode, EpisodeConfig, ScriptedConfig, ScriptedPolicy};
use forecast_env::reward::{accuracy_reward, total_reward, RewardInput, RewardTerms, RewardWeights};
use forecast_env::toolkit::{run_tool, summarize_events, ToolArgs, ToolConfig, ToolName};

fn series_from(rows: usize, cols: usize, values: Vec<f64>) -> MultivariateSeries {
    let start = NaiveDate::from_ymd_opt(2021, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let names = (0..cols).map(|c| format!("c{c}")).collect();
    MultivariateSeries::from_grid(start, Frequency::HOURLY, names, Array2::from_shape_vec((rows, cols), values).unwrap()).unwrap()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-100.0..100.0f64, rows * cols).prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn series_strategy() -> impl Strategy<Value = MultivariateSeries> {
    (10usize..120, 1usize..4).prop_flat_map(|(rows, cols)| {
        prop::collection::vec(-1e3..1e3f64, rows * cols).prop_map(move |v| series_from(rows, cols, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_slice_the_raw_array(series in series_strategy(), l in 1usize..12, h in 1usize..6, stride in 1usize..5) {
        prop_assume!(series.len() >= l + h);
        let spec = WindowSpec::new(l, h).with_stride(stride).with_period(1);
        let windows = make_windows(&series, &spec).unwrap();
        prop_assert_eq!(windows.len(), (series.len() - l - h) / stride + 1);
        for (i, w) in windows.iter().enumerate() {
            let o = i * stride;
            prop_assert_eq!(w.origin_index, o);
            prop_assert_eq!(&w.history, &series.values().slice(s![o..o + l, ..]).to_owned());
            prop_assert_eq!(w.target.as_ref().unwrap(), &series.values().slice(s![o + l..o + l + h, ..]).to_owned());
        }
    }

    #[test]
    fn split_parts_concatenate_back(series in series_strategy(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let ratios = SplitRatios::new(lo, hi - lo, 1.0 - hi).unwrap();
        let (train, val, test) = split(&series, ratios).unwrap();
        prop_assert_eq!(train.len() + val.len() + test.len(), series.len());
        let joined = MultivariateSeries::concat(&[&train, &val, &test]).unwrap();
        prop_assert_eq!(joined.values(), series.values());
        prop_assert_eq!(joined.timestamps(), series.timestamps());
    }

    #[test]
    fn zscore_round_trip(series in series_strategy()) {
        let (normed, stats) = zscore(&series, None);
        let back = denormalize(&normed, &stats);
        for (a, b) in back.values().iter().zip(series.values()) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn tools_are_deterministic_and_finite(values in prop::collection::vec(-50.0..50.0f64, 48..120)) {
        let n = values.len();
        let series = series_from(n, 1, values);
        let w = make_windows(&series, &WindowSpec::new(n - 1, 1).with_period(12)).unwrap().remove(0);
        let config = ToolConfig::default();
        for tool in [ToolName::ExtractDataQuality, ToolName::ExtractBasicStatistics, ToolName::SummarizeEvents, ToolName::ExtractWithinChannelDynamics] {
            let a = run_tool(tool, &w, &ToolArgs::default(), &config, 1).unwrap();
            let b = run_tool(tool, &w, &ToolArgs::default(), &config, 1).unwrap();
            let (ja, jb) = (serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            prop_assert_eq!(&ja, &jb);
            prop_assert!(!ja.contains("NaN") && !ja.contains("inf"), "{}", ja);
        }
        let events = summarize_events(&w, 0, &config);
        let p = events.prevalence;
        prop_assert!((p.rise + p.decline + p.stable + p.oscillation - 1.0).abs() <= 1e-9);
        let mut next = 0;
        for seg in &events.segments {
            prop_assert_eq!(seg.start, next);
            next = seg.end + 1;
        }
        prop_assert_eq!(next, w.lookback());
    }

    #[test]
    fn builtins_are_deterministic(values in prop::collection::vec(-10.0..10.0f64, 60..100), order in 1usize..5) {
        let n = values.len();
        let series = series_from(n, 1, values);
        let w = make_windows(&series, &WindowSpec::new(n - 6, 6).with_period(12)).unwrap().remove(0);
        let ext = ExternalRegistry::default();
        for m in [
            ForecastModelId::Naive,
            ForecastModelId::Drift,
            ForecastModelId::SeasonalNaive { period: 12 },
            ForecastModelId::MovingAverage { window: 5 },
            ForecastModelId::AutoRegressive { order },
        ] {
            let a = predict_time_series(&m, &w, 6, &ext).unwrap();
            let b = predict_time_series(&m, &w, 6, &ext).unwrap();
            prop_assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn seasonal_naive_is_exact_on_repeating_series(cycle in prop::collection::vec(-5.0..5.0f64, 2..12), reps in 3usize..8, h in 1usize..10) {
        let p = cycle.len();
        let n = p * reps + h;
        let values: Vec<f64> = (0..n).map(|t| cycle[t % p]).collect();
        let series = series_from(n, 1, values);
        let w = make_windows(&series, &WindowSpec::new(n - h, h).with_period(p)).unwrap().remove(0);
        let f = predict_time_series(&ForecastModelId::SeasonalNaive { period: p }, &w, h, &ExternalRegistry::default()).unwrap();
        prop_assert_eq!(mse(f.values.view(), w.target.as_ref().unwrap().view()).unwrap(), 0.0);
    }

    #[test]
    fn mae_bounded_by_root_mse(f in matrix(6, 2), t in matrix(6, 2)) {
        let (e2, e1) = (mse(f.view(), t.view()).unwrap(), mae(f.view(), t.view()).unwrap());
        prop_assert!(e2 >= 0.0 && e1 >= 0.0);
        prop_assert!(e1 <= e2.sqrt() * (1.0 + 1e-12) + 1e-12);
        prop_assert!((e2 - common::mse_oracle(&rows(&f), &rows(&t))).abs() <= 1e-9 * e2.max(1.0));
        prop_assert!((e1 - common::mae_oracle(&rows(&f), &rows(&t))).abs() <= 1e-9 * e1.max(1.0));
    }

    #[test]
    fn reward_components_are_bounded(f in matrix(24, 2), t in matrix(24, 2), extra in 0usize..30, tokens in 0u64..20_000, ok in any::<bool>()) {
        let answer = Array2::from_shape_fn((24 + extra, 2), |(r, c)| f[[r % 24, c]]);
        let b = total_reward(RewardInput { answer: Some(&answer), truth: &t, format_ok: ok, response_tokens: Some(tokens), period: 12 }, &RewardWeights::default()).unwrap();
        for c in [b.accuracy, b.trend, b.seasonal, b.turning] {
            prop_assert!((0.0..=1.0).contains(&c), "component {}", c);
        }
        prop_assert!((-1.0..=1.0).contains(&b.total));
    }

    #[test]
    fn accuracy_is_scale_free(f in matrix(12, 2), t in matrix(12, 2), a in 0.5..20.0f64, shift in -100.0..100.0f64) {
        prop_assume!(t.column(0).std(0.0) > 1.0 && t.column(1).std(0.0) > 1.0);
        let r0 = accuracy_reward(f.view(), t.view()).unwrap();
        let (fa, ta) = (f.mapv(|v| a * v + shift), t.mapv(|v| a * v + shift));
        let r1 = accuracy_reward(fa.view(), ta.view()).unwrap();
        prop_assert!((r0 - r1).abs() <= 1e-8, "{} vs {}", r0, r1);
    }

    #[test]
    fn larger_error_never_raises_reward(t in matrix(24, 1), e in matrix(24, 1), k1 in 0.0..3.0f64, k2 in 0.0..3.0f64) {
        let (lo, hi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
        let weights = RewardWeights {
            terms: RewardTerms { trend_seasonal: false, structural_alignment: false, ..RewardTerms::default() },
            ..RewardWeights::default()
        };
        let score = |k: f64| {
            let f = &t + &(&e * k);
            total_reward(RewardInput { answer: Some(&f), truth: &t, format_ok: true, response_tokens: None, period: 12 }, &weights).unwrap().total
        };
        prop_assert!(score(hi) <= score(lo));
        prop_assert!(accuracy_reward((&t + &(&e * hi)).view(), t.view()).unwrap() <= accuracy_reward((&t + &(&e * lo)).view(), t.view()).unwrap());
    }

    #[test]
    fn permutation_entropy_is_unit_bounded_and_order_invariant(x in prop::collection::vec(-1e3..1e3f64, 12..300), m in 2usize..6, d in 1usize..3, a in 0.1..5.0f64) {
        prop_assume!(x.len() > (m - 1) * d + 1);
        let h = permutation_entropy(&x, m, d).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        let y: Vec<f64> = x.iter().map(|v| (v / 1e3 * a).atan() * 7.0 - 3.0).collect();
        prop_assert_eq!(ordinal_histogram(&x, m, d).unwrap(), ordinal_histogram(&y, m, d).unwrap());
        prop_assert!((h - common::pe_oracle(&x, m, d)).abs() <= 1e-12);
    }

    #[test]
    fn manifest_bands_are_non_decreasing(scores in prop::collection::vec((0.0..5.0f64, 0.0..1.0f64), 3..200), epochs in 1usize..3, seed in any::<u64>()) {
        let mut profiles: Vec<DifficultyProfile> = scores
            .iter()
            .enumerate()
            .map(|(i, &(e, h))| DifficultyProfile { dataset_id: "p".into(), origin_index: i, teacher_error: e, perm_entropy: h, band: None })
            .collect();
        assign_bands(&mut profiles, None).unwrap();
        let plan = schedule(&profiles, epochs, seed);
        prop_assert_eq!(plan.stream.len(), profiles.len() * epochs);
        let bands: Vec<u8> = plan.stream.iter().map(|p| p.band.unwrap()).collect();
        prop_assert!(bands.windows(2).all(|w| w[0] <= w[1]));
    }
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scripted_episodes_are_reproducible(seed in 0u64..1000, period in 6usize..30) {
        let series = forecast_env::fixtures::seasonal(6 * period + 40, period, seed);
        let spec = WindowSpec::new(4 * period, 12).with_period(period);
        let w = make_windows(&series, &spec).unwrap().remove(seed as usize % 20);
        let policy = ScriptedPolicy::new(ScriptedConfig::default());
        let a = run_episode(&w, &policy, &EpisodeConfig::default());
        let b = run_episode(&w, &policy, &EpisodeConfig::default());
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert!(a.turns.len() <= 5);
        prop_assert!(a.reward.is_some());
    }
}
