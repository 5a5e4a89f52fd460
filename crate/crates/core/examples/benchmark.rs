//! Runs the synthetic benchmark suite and prints per-scene metrics.
//!
//! `cargo run --release -p salwatch-core --example benchmark [config-file]`

use salwatch::metrics::Evaluator;
use salwatch::synthgen::{benchmark_suite, SceneRenderer};
use salwatch::{Pipeline, PipelineConfig};

fn main() -> salwatch::Result<()> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = std::env::args().nth(1) {
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
    }
    let verbose = std::env::var_os("VERBOSE").is_some();

    for script in benchmark_suite() {
        let renderer = SceneRenderer::new(script)?;
        let truth = renderer.truth();
        let mut pipeline = Pipeline::new(cfg)?;
        let mut eval = Evaluator::new(Some(&truth));
        for t in 0..renderer.frame_count() {
            let out = pipeline.process(&renderer.frame(t)?)?;
            if verbose {
                for e in &out.events {
                    println!(
                        "  t={} track={} dv={:.2} eps={:.2} at ({:.1},{:.1}) truth={:?}",
                        e.frame_index,
                        e.track_id,
                        e.delta_speed,
                        e.threshold_used,
                        e.center.0,
                        e.center.1,
                        truth.attribute(t, e.center)
                    );
                }
            }
            eval.record_frame(
                out.frame.width() * out.frame.height(),
                out.kept_area(),
                &out.matches(),
                &out.events,
                out.bottom_up,
                out.total,
            );
        }
        let r = eval.finish();
        println!(
            "seed {:>3}: matches {}/{} score {:.4} | flagged {} false {} rate {:.3} | jumps {}/{} | coverage {:.3} | {:.2} ms bottom-up, {:.2} ms total",
            renderer.script().seed,
            r.true_matches,
            r.true_matches + r.false_matches,
            r.match_score.unwrap_or(f64::NAN),
            r.n_suspicious_flagged,
            r.n_false_alerts,
            r.false_alert_rate,
            r.jumps_detected,
            r.jumps,
            r.mean_region_coverage,
            r.mean_bottom_up_ms,
            r.mean_total_ms,
        );
    }
    Ok(())
}
