//! Vehicle state machine.
//!
//! Three groups of states: Idle (temporary tasks, selectable by the Plant
//! Manager), Charge (mandatory recharge) and Routine (plant work, class
//! specific). `LookForEvents` is the hub every completed task returns to.
//!
//! Transition table (hub = `LookForEvents`):
//!
//! | from                                     | symbol | to                                     |
//! |------------------------------------------|--------|----------------------------------------|
//! | LookForEvents                            | BC     | ChargeBrain                            |
//! | ChargeBrain                              | TC     | ChargeAgv                              |
//! | ChargeAgv                                | TC     | LookForEvents                          |
//! | LookForEvents, Surveillance, IdleCharging, AlF3Refill | PM | class routine (FFV PotRefill, APTV AnodeReplace, MTV CollectAluminium) |
//! | same                                     | G      | GarbageTask (APTV only)                |
//! | LookForEvents                            | DTM    | Surveillance / IdleCharging / AlF3Refill (FFV) |
//! | LookForEvents                            | VEL    | AlF3Refill (FFV only)                  |
//! | any Idle sub-task or Routine state       | TC     | LookForEvents                          |
//!
//! Everything else is an illegal transition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleClass {
    #[serde(rename = "FFV")]
    Ffv,
    #[serde(rename = "APTV")]
    Aptv,
    #[serde(rename = "MTV")]
    Mtv,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 3] = [VehicleClass::Ffv, VehicleClass::Aptv, VehicleClass::Mtv];

    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Ffv => "FFV",
            VehicleClass::Aptv => "APTV",
            VehicleClass::Mtv => "MTV",
        }
    }

    /// Routine state entered on a Plant Manager request.
    pub fn routine(self) -> VehicleState {
        match self {
            VehicleClass::Ffv => VehicleState::PotRefill,
            VehicleClass::Aptv => VehicleState::AnodeReplace,
            VehicleClass::Mtv => VehicleState::CollectAluminium,
        }
    }

    pub fn allows(self, state: VehicleState) -> bool {
        use VehicleState::*;
        match state {
            LookForEvents | Surveillance | IdleCharging | ChargeBrain | ChargeAgv => true,
            AlF3Refill | PotRefill => self == VehicleClass::Ffv,
            AnodeReplace | GarbageTask => self == VehicleClass::Aptv,
            CollectAluminium => self == VehicleClass::Mtv,
        }
    }
}

impl std::fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleState {
    #[serde(rename = "look_for_events")]
    LookForEvents,
    #[serde(rename = "surveillance")]
    Surveillance,
    #[serde(rename = "idle_charging")]
    IdleCharging,
    #[serde(rename = "alf3_refill")]
    AlF3Refill,
    #[serde(rename = "charge_brain")]
    ChargeBrain,
    #[serde(rename = "charge_agv")]
    ChargeAgv,
    #[serde(rename = "pot_refill")]
    PotRefill,
    #[serde(rename = "anode_replace")]
    AnodeReplace,
    #[serde(rename = "garbage_task")]
    GarbageTask,
    #[serde(rename = "collect_aluminium")]
    CollectAluminium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateGroup {
    Idle,
    Charge,
    Routine,
}

impl VehicleState {
    pub const ALL: [VehicleState; 10] = [
        VehicleState::LookForEvents,
        VehicleState::Surveillance,
        VehicleState::IdleCharging,
        VehicleState::AlF3Refill,
        VehicleState::ChargeBrain,
        VehicleState::ChargeAgv,
        VehicleState::PotRefill,
        VehicleState::AnodeReplace,
        VehicleState::GarbageTask,
        VehicleState::CollectAluminium,
    ];

    /// Stable snake_case name used in CSV outputs.
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleState::LookForEvents => "look_for_events",
            VehicleState::Surveillance => "surveillance",
            VehicleState::IdleCharging => "idle_charging",
            VehicleState::AlF3Refill => "alf3_refill",
            VehicleState::ChargeBrain => "charge_brain",
            VehicleState::ChargeAgv => "charge_agv",
            VehicleState::PotRefill => "pot_refill",
            VehicleState::AnodeReplace => "anode_replace",
            VehicleState::GarbageTask => "garbage_task",
            VehicleState::CollectAluminium => "collect_aluminium",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> StateGroup {
        use VehicleState::*;
        match self {
            LookForEvents | Surveillance | IdleCharging | AlF3Refill => StateGroup::Idle,
            ChargeBrain | ChargeAgv => StateGroup::Charge,
            PotRefill | AnodeReplace | GarbageTask | CollectAluminium => StateGroup::Routine,
        }
    }

    /// Idle-group states can be handed a plant request.
    pub fn is_pm_selectable(self) -> bool {
        self.group() == StateGroup::Idle
    }
}

impl std::fmt::Display for VehicleState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Idle task picked by the decentralised task manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdleTask {
    Charge,
    Surveillance,
    Refill,
}

/// Transition alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Plant Manager request.
    Pm,
    /// Decentralised task manager selection, carrying the selected task.
    Dtm(IdleTask),
    /// Battery charge below the low threshold.
    Bc,
    /// FFV tank empty.
    Vel,
    /// Task completed.
    Tc,
    /// Plant Manager garbage task (APTV).
    G,
}

impl Symbol {
    /// Every symbol, with the DTM selection expanded.
    pub const ALL: [Symbol; 8] = [
        Symbol::Pm,
        Symbol::Dtm(IdleTask::Charge),
        Symbol::Dtm(IdleTask::Surveillance),
        Symbol::Dtm(IdleTask::Refill),
        Symbol::Bc,
        Symbol::Vel,
        Symbol::Tc,
        Symbol::G,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal transition: {class} in {current} on {symbol:?}")]
pub struct IllegalTransition {
    pub class: VehicleClass,
    pub current: VehicleState,
    pub symbol: Symbol,
}

pub fn next_state(
    class: VehicleClass,
    current: VehicleState,
    symbol: Symbol,
) -> Result<VehicleState, IllegalTransition> {
    use VehicleState::*;
    let illegal = IllegalTransition {
        class,
        current,
        symbol,
    };
    if !class.allows(current) {
        return Err(illegal);
    }
    let next = match (current, symbol) {
        (LookForEvents, Symbol::Bc) => ChargeBrain,
        (ChargeBrain, Symbol::Tc) => ChargeAgv,
        (ChargeAgv, Symbol::Tc) => LookForEvents,
        (LookForEvents | Surveillance | IdleCharging | AlF3Refill, Symbol::Pm) => class.routine(),
        (LookForEvents | Surveillance | IdleCharging | AlF3Refill, Symbol::G)
            if class == VehicleClass::Aptv =>
        {
            GarbageTask
        }
        (LookForEvents, Symbol::Dtm(IdleTask::Charge)) => IdleCharging,
        (LookForEvents, Symbol::Dtm(IdleTask::Surveillance)) => Surveillance,
        (LookForEvents, Symbol::Dtm(IdleTask::Refill)) if class == VehicleClass::Ffv => AlF3Refill,
        (LookForEvents, Symbol::Vel) if class == VehicleClass::Ffv => AlF3Refill,
        (
            Surveillance | IdleCharging | AlF3Refill | PotRefill | AnodeReplace | GarbageTask
            | CollectAluminium,
            Symbol::Tc,
        ) => LookForEvents,
        _ => return Err(illegal),
    };
    debug_assert!(class.allows(next));
    Ok(next)
}

/// What the vehicle knows about itself at a decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub class: VehicleClass,
    pub state: VehicleState,
    pub soc_fraction: f64,
    pub low_soc_threshold: f64,
    /// FFV tank cannot serve another pot refill.
    pub tank_empty: bool,
    pub task_complete: bool,
    pub pending: Option<PendingAssignment>,
    /// The DTM choice to emit if the vehicle is idle at the hub.
    pub dtm_choice: Option<IdleTask>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PendingAssignment {
    Plant,
    Garbage,
}

/// Symbols asserted for the snapshot, highest priority first
/// (BC > PM/G > VEL > DTM > TC). Only symbols meaningful in the current
/// state are emitted; the first one is the transition to apply.
pub fn emit_symbols(s: &Snapshot) -> Vec<Symbol> {
    let mut out = Vec::new();
    let pm = s.pending.map(|p| match p {
        PendingAssignment::Plant => Symbol::Pm,
        PendingAssignment::Garbage => Symbol::G,
    });
    match s.state {
        VehicleState::LookForEvents => {
            if s.soc_fraction < s.low_soc_threshold {
                out.push(Symbol::Bc);
            }
            out.extend(pm);
            if s.class == VehicleClass::Ffv && s.tank_empty {
                out.push(Symbol::Vel);
            }
            if let Some(task) = s.dtm_choice {
                out.push(Symbol::Dtm(task));
            }
        }
        VehicleState::Surveillance | VehicleState::IdleCharging | VehicleState::AlF3Refill => {
            out.extend(pm);
            if s.task_complete {
                out.push(Symbol::Tc);
            }
        }
        _ => {
            if s.task_complete {
                out.push(Symbol::Tc);
            }
        }
    }
    out
}
