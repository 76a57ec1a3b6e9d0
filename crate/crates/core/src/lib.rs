pub mod crypto;
pub mod encoding;
pub mod merkle;
pub mod nizk;
pub mod params;
pub mod authority;
pub mod board;
pub mod client;
pub mod tally;
pub mod oracle;
