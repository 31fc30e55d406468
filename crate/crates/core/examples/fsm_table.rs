//! Prints the legal transitions of each vehicle class and walks one APTV
//! through a low-battery episode.

use fleetsim::fsm::{
    emit_symbols, next_state, IdleTask, PendingAssignment, Snapshot, Symbol, VehicleClass,
    VehicleState,
};

fn main() {
    for class in VehicleClass::ALL {
        println!("{class}");
        for state in VehicleState::ALL {
            let moves: Vec<String> = Symbol::ALL
                .iter()
                .filter_map(|&s| next_state(class, state, s).ok().map(|n| format!("{s:?} -> {n}")))
                .collect();
            if !moves.is_empty() {
                println!("  {:<18} {}", state.as_str(), moves.join(", "));
            }
        }
    }

    // 15% battery with a request waiting: charging wins
    let snap = Snapshot {
        class: VehicleClass::Aptv,
        state: VehicleState::LookForEvents,
        soc_fraction: 0.15,
        low_soc_threshold: 0.20,
        tank_empty: false,
        task_complete: false,
        pending: Some(PendingAssignment::Plant),
        dtm_choice: Some(IdleTask::Surveillance),
    };
    let symbols = emit_symbols(&snap);
    println!("\nAPTV at 15% with a pending request emits {symbols:?}");
    let mut state = snap.state;
    for symbol in [symbols[0], Symbol::Tc, Symbol::Tc] {
        let next = next_state(snap.class, state, symbol).expect("legal");
        println!("  {state} --{symbol:?}--> {next}");
        state = next;
    }
}
