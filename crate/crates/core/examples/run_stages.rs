//! Build a few stages and print what each one did.
//!
//! `cargo run --release --example run_stages -- "sigma = 1:2,2:1" 3`

use std::time::Instant;

use mahler::construct::{init_stage, run_stage, statefile, ConstructionConfig};
use mahler::verify::check_stage;

fn main() {
    let mut args = std::env::args().skip(1);
    let text = args.next().unwrap_or_else(|| "sigma = 1:2,2:1,3:1".into());
    let stages: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg: ConstructionConfig = text.replace(';', "\n").parse().expect("config");
    let mut s = init_stage(&cfg).expect("stage 1");
    println!("stage 1: r = {}", s.radius());
    while s.m < stages {
        let t = Instant::now();
        s = match run_stage(&s) {
            Ok(next) => next,
            Err(e) => {
                eprintln!("stage {} failed: {e}", s.m + 1);
                std::process::exit(1);
            }
        };
        let b = s.budgets.last().unwrap();
        println!(
            "stage {}: r = {}, terms = {}, roots = {}, orbits = {}, budget {}+{} of {}+{}, {:.1}s",
            s.m,
            s.radius(),
            s.f.terms.len(),
            s.f.nail_roots.len(),
            s.orbits.len(),
            b.s_used,
            b.l_used,
            b.s_hat,
            b.l_hat,
            t.elapsed().as_secs_f64()
        );
    }
    let text = statefile::to_text(&s);
    println!("{} bytes of state", text.len());
    let back = statefile::from_text(&text).expect("round trip");
    assert_eq!(statefile::to_text(&back), text);
    let t = Instant::now();
    let report = check_stage(&back);
    print!("{report}");
    println!("verified in {:.1}s", t.elapsed().as_secs_f64());
}
