//! Records a short session as a trajectory log, then rebuilds the gain
//! table offline from the log alone.

use autogain::simulation::run_session;
use autogain::trajectory::{read_log, replay, trial_records, write_records};
use autogain::SessionConfig;

fn main() -> autogain::Result<()> {
    let mut cfg = SessionConfig::trackpad();
    cfg.session.trials = 160;
    cfg.seed = 3;
    let session = run_session(&cfg)?;

    let mut log = Vec::new();
    for t in &session.trials {
        write_records(&mut log, &trial_records(t)).expect("in-memory write");
    }
    println!("log: {} events, {} bytes", log.iter().filter(|&&b| b == b'\n').count(), log.len());

    let records = read_log(log.as_slice(), "memory")?;
    let r = replay(&records, &cfg)?;
    println!("replayed {} trials, {} submovements", r.selected_trials, r.report.len());
    println!("tables identical: {}", r.table == session.final_table);
    for line in r.report.iter().take(4) {
        println!("{}", serde_json::to_string(line).expect("serialises"));
    }
    Ok(())
}
