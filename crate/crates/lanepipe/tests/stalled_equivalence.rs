//! Backpressure must never change what comes out of the pipeline, only
//! when. These runs pit stalled simulations against the brute-force
//! reference and against their own free-flow twins.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lanepipe::refmodel::pipeline_ref;
use lanepipe::stream::StageTap;
use lanepipe::{
    DecisionConfig, FrameGeometry, GrayWeights, Pipeline, PipelineConfig, RgbFrame, StallSchedule,
};

fn random_rgb(geometry: FrameGeometry, seed: u64) -> RgbFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0u8; geometry.pixel_count() * 3];
    rng.fill_bytes(&mut data);
    RgbFrame::from_data(geometry, data).unwrap()
}

fn captured_run(
    geometry: FrameGeometry,
    frame: &RgbFrame,
    stalls: StallSchedule,
) -> (Vec<u8>, Vec<u8>, Vec<u8>, lanepipe::stream::FrameRun) {
    let mut config = PipelineConfig::new(geometry);
    config.stalls = stalls;
    let max = config.default_max_cycles();
    let mut pipeline = Pipeline::new(config).unwrap();
    pipeline.enable_capture(StageTap::Gray);
    pipeline.enable_capture(StageTap::Average);
    pipeline.enable_capture(StageTap::Sobel);
    let run = pipeline.run_frame(frame, max).unwrap();
    (
        pipeline.capture(StageTap::Gray).unwrap().to_vec(),
        pipeline.capture(StageTap::Average).unwrap().to_vec(),
        pipeline.capture(StageTap::Sobel).unwrap().to_vec(),
        run,
    )
}

#[test]
fn random_stall_patterns_leave_all_stage_outputs_intact() {
    let geometry = FrameGeometry::new(16, 16).unwrap();
    let weights = GrayWeights::default();
    let decision = DecisionConfig::default_for(geometry);

    for seed in 0..10u64 {
        let frame = random_rgb(geometry, 0xBAD5EED + seed);
        let reference = pipeline_ref(&frame, weights, 100, &decision).unwrap();

        let mut stall_rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule = StallSchedule::from_pairs(
            (0..3000u64).filter_map(|c| stall_rng.gen_bool(0.3).then_some((c, false))),
        );

        let (gray, averaged, binary, run) = captured_run(geometry, &frame, schedule);
        assert_eq!(gray, reference.gray.data, "gray bytes, seed {seed}");
        assert_eq!(averaged, reference.averaged.data, "averaged bytes, seed {seed}");
        assert_eq!(binary, reference.binary.data, "binary bytes, seed {seed}");
        assert_eq!(run.output.data, reference.binary.data);
        assert_eq!(run.report, reference.report, "report, seed {seed}");
        assert!(run.stats.stall_cycles > 0, "schedule never bit, seed {seed}");
    }
}

#[test]
fn half_rate_sink_only_stretches_the_schedule() {
    let geometry = FrameGeometry::new(32, 32).unwrap();
    let frame = random_rgb(geometry, 0xA17);

    let free = captured_run(geometry, &frame, StallSchedule::always_ready());
    let choked = captured_run(
        geometry,
        &frame,
        StallSchedule::from_pairs((0..20_000u64).filter(|c| c % 2 == 1).map(|c| (c, false))),
    );

    assert_eq!(free.2, choked.2, "binary stream changed under a half-rate sink");
    assert_eq!(free.3.report, choked.3.report);
    assert_eq!(free.3.stats.transfers_out, choked.3.stats.transfers_out);
    assert!(choked.3.stats.cycles_elapsed > free.3.stats.cycles_elapsed);
    assert!(choked.3.stats.stall_cycles > 0);
}

#[test]
fn identical_runs_are_cycle_identical() {
    let geometry = FrameGeometry::new(16, 16).unwrap();
    let frame = random_rgb(geometry, 0xD0);
    let schedule = StallSchedule::from_pairs((0..2000u64).filter(|c| c % 7 == 3).map(|c| (c, false)));

    let run = |frame: &RgbFrame| {
        let mut config = PipelineConfig::new(geometry);
        config.stalls = schedule.clone();
        let max = config.default_max_cycles();
        let mut pipeline = Pipeline::new(config).unwrap();
        let run = pipeline.run_frame(frame, max).unwrap();
        (pipeline.output_transfer_cycles().to_vec(), run)
    };

    let (cycles_a, run_a) = run(&frame);
    let (cycles_b, run_b) = run(&frame);
    assert_eq!(cycles_a, cycles_b);
    assert_eq!(run_a.stats.cycles_elapsed, run_b.stats.cycles_elapsed);
    assert_eq!(run_a.output.data, run_b.output.data);
    assert_eq!(run_a.report, run_b.report);
}
