//! Natural-language errands for a simulated differential-drive robot.
//!
//! A command such as "bring the keys from security to trail" goes through
//! [`nlu`] to become a [`nlu::TaskSpec`] naming two landmarks and an item.
//! The [`fsm`] executor sequences the pickup and delivery, [`nav`] plans on
//! the occupancy grid and steers around pedestrians with velocity obstacles,
//! and [`sim`] closes the loop at a fixed time step.

pub mod corpus;
pub mod fsm;
pub mod nav;
pub mod nlu;
pub mod sim;
pub mod world;
