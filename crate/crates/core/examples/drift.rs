//! Feasibility drift with and without the controlled `W`, on a trace problem
//! whose spectrum spans ten decades.

use afbb::bench::drift_demo;

fn main() -> afbb::Result<()> {
    let ctl = drift_demo(300, 4, 2000, true, 0)?;
    let plain = drift_demo(300, 4, 2000, false, 0)?;
    for k in [0, 4, 9, 14, 19] {
        let cell = |t: &afbb::bench::DriftTrace| t.drift.get(k).map_or("-".into(), |v| format!("{v:.2e}"));
        println!("iter {:>3}: controlled {:>9}  uncontrolled {:>9}", k + 1, cell(&ctl), cell(&plain));
    }
    println!("controlled   max {:.2e} over {} steps", ctl.max(), ctl.drift.len());
    println!("uncontrolled max {:.2e} over {} steps", plain.max(), plain.drift.len());
    Ok(())
}
