//! Educated Q-Learning over controller gains.
//!
//! States are binned averages of the absolute lateral and heading errors of
//! a whole simulation run; each of the 81 actions nudges every gain up,
//! down, or not at all. A gain that stays constant over the last five
//! terminal gain sets is locked for the rest of the training.

mod action;
mod qtable;
mod reward;
mod state;
mod train;

pub use action::{apply_action, decode_action, encode_action, ActionIndex, NUM_ACTIONS};
pub use qtable::{epsilon_greedy, q_update, QTable};
pub use reward::reward;
pub use state::{discretize, weighted_distance, ErrorState, StateBin, BINS};
pub use train::{
    most_frequent_terminal_gains, run_step, train, train_sweep, EpisodeResult, TerminalRecord,
    TerminalTracker, TrainingConfig, TrainingEnv, TrainingOutcome, LOCK_WINDOW,
};
