//! Device counts to cursor pixels through a speed-dependent gain.

use autogain::transfer::{apply_input, interpolate_gain, input_speed, CursorState};
use autogain::{DeviceSpec, GainTable, InputEvent};

fn main() -> autogain::Result<()> {
    let d = DeviceSpec::trackpad();
    println!("one count per event = {:.5} m/s, one m/s = {:.3} px per event", d.c_in(), d.c_out());

    let g = GainTable::from_gains(0.0079, vec![1.0, 1.0, 1.5, 2.0, 3.0, 3.0])?;
    for counts in [1, 2, 3, 5, 8] {
        let v = input_speed(&InputEvent::new(0.0, counts, 0), &d);
        println!("{counts} counts -> {v:.4} m/s -> gain {:.3}", interpolate_gain(&g, v));
    }

    // slow drift: each event moves a fraction of a pixel, the remainder carries over
    let mut c = CursorState::at(100, 100);
    for k in 0..8 {
        c = apply_input(&InputEvent::new(k as f64 * 8.0, 1, 0), &g, &d, c);
        println!("after event {k}: x = {} (+{:.3} pending)", c.x, c.rx);
    }
    Ok(())
}
