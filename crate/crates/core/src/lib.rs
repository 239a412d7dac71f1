pub mod det_eqs;
pub mod exact;
pub mod killing;
pub mod lie;
pub mod report;
pub mod third_order;
pub mod weyl;
