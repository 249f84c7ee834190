//! Cooperative salvo guidance for interceptor swarms over switched communication graphs.
//!
//! The numerical core (kinematics, consensus law, allocation, simulation) is
//! generic over [`Scalar`] (`f32` or `f64`). Scenario files, result bundles and
//! the aliases below are `f64`.

pub mod allocation;
pub mod consensus;
pub mod kinematics;
pub mod matrix;
pub mod output;
pub mod scalar;
pub mod scenario;
pub mod sim;
pub mod special;
pub mod topology;

pub use scalar::Scalar;

pub type InterceptorState = kinematics::InterceptorState<f64>;
pub type LateralAccel = kinematics::LateralAccel<f64>;
pub type GuidanceParams = consensus::GuidanceParams<f64>;
pub type TopologyBounds = topology::TopologyBounds<f64>;
pub type AllocationProblem = allocation::AllocationProblem<f64>;
pub type AllocationResult = allocation::AllocationResult<f64>;
pub type Norm = allocation::Norm<f64>;
pub type Engagement = sim::Engagement<f64>;
pub type SimRecord = sim::SimRecord<f64>;
pub type SwarmState = sim::SwarmState<f64>;
