//! `parse_config(render_config(s))` must reproduce the experiment `s` exactly.

use proptest::prelude::*;

use tanglesim_cli::config::{
    parse_config, render_config, ExperimentSpec, OutputOptions, SweepAxis, SweepField,
};
use tanglesim_core::metrics::MetricsParams;
use tanglesim_core::sim::{AnchorPolicy, AttackConfig, SimConfig};
use tanglesim_core::TsaKind;

fn tsa_strategy() -> impl Strategy<Value = TsaKind> {
    prop_oneof![
        Just(TsaKind::Uniform),
        Just(TsaKind::TwoStep),
        (0.0f64..8.0).prop_map(|alpha| TsaKind::Mcmc { alpha }),
    ]
}

fn attack_strategy() -> impl Strategy<Value = Option<AttackConfig>> {
    proptest::option::of(
        (
            0.01f64..20.0,
            1u64..64,
            0.0f64..100.0,
            proptest::option::of(0.0f64..50.0),
            prop_oneof![
                Just(AnchorPolicy::TargetParent),
                Just(AnchorPolicy::Genesis)
            ],
        )
            .prop_map(
                |(adversary_rate, accept_weight, eval_horizon, reveal_at, anchor_policy)| {
                    AttackConfig {
                        adversary_rate,
                        accept_weight,
                        anchor_policy,
                        eval_horizon,
                        reveal_at,
                    }
                },
            ),
    )
}

fn sweep_strategy(has_attack: bool, is_mcmc: bool) -> impl Strategy<Value = Vec<SweepAxis>> {
    let mut fields = vec![SweepField::Rate, SweepField::Latency, SweepField::Duration];
    if has_attack {
        fields.extend([
            SweepField::AdversaryRate,
            SweepField::AcceptWeight,
            SweepField::EvalHorizon,
        ]);
    }
    if is_mcmc {
        fields.push(SweepField::Alpha);
    }
    proptest::sample::subsequence(fields.clone(), 0..=fields.len().min(3)).prop_flat_map(
        move |chosen| {
            chosen
                .into_iter()
                .map(|field| {
                    let values = match field {
                        SweepField::AcceptWeight | SweepField::Nodes => {
                            proptest::collection::vec((1u32..40).prop_map(f64::from), 1..4).boxed()
                        }
                        _ => proptest::collection::vec(
                            (1u32..2000).prop_map(|v| f64::from(v) / 16.0),
                            1..4,
                        )
                        .boxed(),
                    };
                    values.prop_map(move |values| SweepAxis { field, values })
                })
                .collect::<Vec<_>>()
        },
    )
}

fn spec_strategy() -> impl Strategy<Value = ExperimentSpec> {
    (tsa_strategy(), attack_strategy()).prop_flat_map(|(tsa, attack)| {
        let has_attack = attack.is_some();
        let is_mcmc = matches!(tsa, TsaKind::Mcmc { .. });
        (
            Just(tsa),
            Just(attack),
            sweep_strategy(has_attack, is_mcmc),
            0.01f64..50.0,            // rate
            0.0f64..10.0,             // latency
            1.0f64..5000.0,           // duration
            any::<u64>(),             // seed
            1u32..200,                // nodes
            1u32..50,                 // replications
            "[a-z][a-z0-9_/-]{0,12}", // output dir
            any::<[bool; 4]>(),
        )
            .prop_map(
                |(tsa, attack, sweep, rate, latency, duration, seed, nodes, reps, dir, toggles)| {
                    ExperimentSpec {
                        base: SimConfig {
                            honest_rate: rate,
                            latency,
                            duration,
                            tsa,
                            seed,
                            node_count: nodes,
                            attack,
                        },
                        sweep,
                        replications: reps,
                        metrics: MetricsParams::default(),
                        output: OutputOptions {
                            dir,
                            trace: toggles[0],
                            dot: toggles[1],
                            csv: toggles[2],
                            json: toggles[3],
                        },
                    }
                },
            )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_then_parse_is_identity(spec in spec_strategy()) {
        let rendered = render_config(&spec);
        let parsed = parse_config(&rendered)
            .map_err(|e| TestCaseError::fail(format!("render produced invalid config: {e}\n{rendered}")))?;
        prop_assert_eq!(parsed, spec, "rendered:\n{}", rendered);
    }
}
