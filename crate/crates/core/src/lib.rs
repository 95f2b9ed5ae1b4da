//! Chemistry and flamelet side of the FGM toolkit.
//!
//! - [`mech`] parses Chemkin-style mechanism files and evaluates NASA-7
//!   thermodynamics and mass-action production rates.
//! - [`flamelet`] solves the steady unity-Lewis flamelet equations in
//!   mixture-fraction space by pseudo-transient continuation.
//! - [`library`] tabulates flamelets over scalar dissipation rates, flattens
//!   them into training tables and provides the table-lookup baseline.

pub mod flamelet;
pub mod library;
pub mod mech;

/// Hex-encoded SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
