use proptest::prelude::*;

use pumpkin_core::benchmarks::{BenchmarkSpec, StencilKind};
use pumpkin_core::ir::{to_json, Scalar};
use pumpkin_core::pipeline::{run_pipeline, transform, PipelineConfig};
use pumpkin_core::resources::{estimate, Category};
use pumpkin_core::sim::{
    reference_execute, step_issuer, step_packer, Channel, IssuerState, PackerState,
};
use pumpkin_core::symbolic::{
    access_sequence, AffineExpr, Binding, Dim, MapParam, Memlet, Range, DEFAULT_SEQUENCE_CAP,
};
use pumpkin_core::transforms::{find_multipump_candidate, multipump, streamify_all, MultipumpConfig};
use pumpkin_core::{Budget, CostTable, Mhz, Mode};

fn lin(c: i64, i: i64, j: i64) -> AffineExpr {
    AffineExpr::constant(c) + AffineExpr::term("i", i) + AffineExpr::term("j", j)
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Widen), Just(Mode::Narrow)]
}

fn config(m: u32, mode: Mode) -> PipelineConfig {
    PipelineConfig {
        m,
        mode,
        ..PipelineConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Nested loops written out by hand are the oracle for the access sequence.
    #[test]
    fn access_sequence_matches_brute_force(
        (b0, n0, s0) in (-3i64..4, 0i64..5, 1i64..4),
        n1 in 0i64..5,
        (c0, a0, a1) in (-5i64..6, -3i64..4, -3i64..4),
        (c1, w) in (-5i64..6, 1i64..4),
    ) {
        let params = vec![
            MapParam::new("i", Range::new(b0, b0 + n0 * s0).with_stride(s0)),
            MapParam::new("j", Range::new(0, n1)),
        ];
        let memlet = Memlet::new("A", vec![
            Dim::Index(lin(c0, a0, a1)),
            Dim::Range(Range::new(lin(c1, 0, 1), lin(c1 + w, 0, 1))),
        ]);
        let got = access_sequence(&memlet, &params, &Binding::new(), DEFAULT_SEQUENCE_CAP).unwrap();
        let mut want = Vec::new();
        for k in 0..n0 {
            let i = b0 + k * s0;
            for j in 0..n1 {
                for t in 0..w {
                    want.push(vec![c0 + a0 * i + a1 * j, c1 + j + t]);
                }
            }
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn affine_text_round_trips(c in -50i64..50, i in -5i64..6, j in -5i64..6) {
        let e = lin(c, i, j);
        let back: AffineExpr = e.to_string().parse().unwrap();
        prop_assert_eq!(back, e);
    }

    // Splitting wide words and packing them again returns the original words.
    #[test]
    fn issuer_then_packer_is_identity(
        narrow in 1u32..5,
        ratio in 1u32..5,
        words in 1usize..12,
        depth in 1usize..4,
    ) {
        let wide = narrow * ratio;
        let data: Vec<Vec<Scalar>> = (0..words)
            .map(|w| (0..wide).map(|l| Scalar::F32((w * 31 + l as usize) as f32)).collect())
            .collect();
        let mut input = Channel::new("in", words);
        for w in &data {
            prop_assert!(input.push(w.clone(), 0));
        }
        input.closed = true;
        let mut mid = Channel::new("mid", depth);
        let mut out = Channel::new("out", words);
        let mut issuer = IssuerState::new(narrow);
        let mut packer = PackerState::new(wide);
        let mut got = Vec::new();
        for now in 0..(words as u64 * wide as u64 * 4 + 8) {
            step_packer(&mut packer, &mut mid, &mut out, now, now + 1);
            if issuer.done(&input) {
                mid.closed = true;
            }
            step_issuer(&mut issuer, &mut input, &mut mid, now, now + 1);
            while let Some(w) = out.pop(now) {
                got.push(w);
            }
        }
        prop_assert_eq!(mid.stats.pushed_words, (words as u32 * ratio) as u64);
        prop_assert_eq!(got, data);
    }

    // Every element pushed into a channel is popped, and outputs match the
    // sequential reference.
    #[test]
    fn simulation_conserves_elements(
        v in prop_oneof![Just(1u32), Just(2), Just(4)],
        blocks in 1i64..16,
        m in 1u32..4,
        mode in mode(),
    ) {
        let v = if mode == Mode::Narrow { v * m } else { v };
        let spec = BenchmarkSpec::Vecadd { n: blocks * v as i64 * m as i64, v };
        let g = spec.generate().unwrap();
        let inputs = spec.inputs();
        let run = run_pipeline(&g, &inputs, &config(m, mode), &CostTable::default(), &Budget::default()).unwrap();
        let reference = reference_execute(&g, &inputs).unwrap();
        for variant in [&run.original, &run.pumped] {
            let sim = variant.sim.as_ref().unwrap();
            prop_assert_eq!(sim.total_pushed(), sim.total_popped());
            prop_assert_eq!(sim.final_occupancy(), 0);
            prop_assert_eq!(&sim.outputs["z"], &reference["z"]);
        }
    }

    #[test]
    fn pumping_by_one_changes_nothing(n in 1i64..8, v in 1u32..4, mode in mode()) {
        let g = streamify_all(&BenchmarkSpec::Vecadd { n: n * v as i64, v }.generate().unwrap()).unwrap();
        let cfg = MultipumpConfig {
            m: 1,
            mode,
            target: find_multipump_candidate(&g),
            fast_frequency_mhz: Mhz::from_int(300),
            slow_frequency_mhz: Mhz::from_int(300),
        };
        prop_assert_eq!(to_json(&multipump(&g, &cfg).unwrap()).unwrap(), to_json(&g).unwrap());
    }

    #[test]
    fn dsp_scales_with_mode(
        bench in 0usize..3,
        v in prop_oneof![Just(2u32), Just(4)],
        m in prop_oneof![Just(2u32), Just(4)],
        mode in mode(),
    ) {
        let v = if mode == Mode::Narrow { v * m } else { v };
        let spec = match bench {
            0 => BenchmarkSpec::Vecadd { n: 64 * v as i64, v },
            1 => BenchmarkSpec::StencilChain {
                stencil: StencilKind::Diffusion3d,
                dims: [4, 4, 2 * v as i64],
                stages: 2,
                v,
            },
            _ => BenchmarkSpec::GemmSystolic { n: 8, k: 4, m: 4, pes: 2, v },
        };
        let g = spec.generate().unwrap();
        let costs = CostTable::default();
        let (o, _) = transform(&g, &config(1, mode)).unwrap();
        let (p, _) = transform(&g, &config(m, mode)).unwrap();
        let before = estimate(&o, &costs).unwrap().dsp;
        let after = estimate(&p, &costs).unwrap().dsp;
        match mode {
            Mode::Widen => prop_assert_eq!(after, before),
            Mode::Narrow => prop_assert_eq!(after * m as u64, before),
        }
    }

    // More lanes never costs less in any category.
    #[test]
    fn resources_monotone_in_lanes(v in 1u32..5, extra in 1u32..4, m in 1u32..3, mode in mode()) {
        let costs = CostTable::default();
        let est = |lanes: u32| {
            let lanes = if mode == Mode::Narrow { lanes * m } else { lanes };
            let g = BenchmarkSpec::Vecadd { n: 64 * lanes as i64, v: lanes }.generate().unwrap();
            estimate(&transform(&g, &config(m, mode)).unwrap().0, &costs).unwrap()
        };
        let (small, large) = (est(v), est(v + extra));
        for c in Category::ALL {
            prop_assert!(small.get(c) <= large.get(c), "{:?}: {} > {}", c, small.get(c), large.get(c));
        }
    }
}
