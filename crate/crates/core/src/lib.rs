//! Training-data attribution for a co-creative level design agent.
//!
//! A small convolutional network is trained one instance at a time on recorded
//! human–agent level design sessions while every conv filter weight's signed
//! change is booked against the instance that caused it. Afterwards any agent
//! suggestion can be explained by the training instance that most shaped the
//! filter it relied on, and by the finished level of that instance's session.

pub mod attribution;
pub mod evalharness;
pub mod neuralnet;
pub mod overlap;
pub mod sessionlog;
pub mod tensor;
pub mod tilegrid;
