//! Sampled checks of assumptions (A), (B), (C) on every built-in instance,
//! and the projection-multifunction conditions on the primal-dual ones.

use mflow::diagnostics::{all_passed, check_field, check_pds_conditions, sample_cap, CheckConfig};
use mflow::problems::{builtin, builtin_tags};

fn main() -> mflow::Result<()> {
    let config = CheckConfig::default();
    for tag in builtin_tags() {
        let inst = builtin(tag)?;
        let Some(cap) = inst.cap.clone() else { continue };
        let anchors = [inst.x0(), cap.z_bar().clone()];
        let mut reports = check_field(inst.field()?.as_ref(), &cap, &anchors, &config)?;
        if let Some(q) = inst.q_field()? {
            let samples = sample_cap(&cap, config.samples, config.seed, &anchors)?;
            reports.extend(check_pds_conditions(&q, &cap, &samples, config.tol));
        }
        println!("{tag}: {}", if all_passed(&reports) { "all pass" } else { "violations found" });
        for r in reports.iter().filter(|r| !r.passed) {
            println!("  {} worst {:.3e} at {:?}", r.name, r.worst_violation, r.witness.as_ref().map(|w| w.as_slice()));
        }
    }
    Ok(())
}
