//! Fighting-game simulation and decision-making agents.
//!
//! * [`agents`]: one interface over every decision model.
//! * [`engine`]: deterministic two-fighter combat simulation.
//! * [`condition`]: data-driven predicates used by FSM transitions and BT conditions.
//! * [`fsm`]: finite-state machines, their hierarchical form, and the FSM agent.
//! * [`reading`]: the input-reading baseline.
//! * [`mcts`]: Monte-Carlo tree search over engine states.
//! * [`bt`]: behavior trees with resumable composites.
//! * [`hybrid`]: agents that combine search with FSM or BT structure.

pub mod agents;
pub mod bt;
pub mod condition;
pub mod engine;
pub mod fsm;
pub mod hybrid;
pub mod mcts;
pub mod reading;
