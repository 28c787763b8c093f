//! Protocol building blocks: particle sequences, permutations, entangled-state
//! preparation, message encoders and decoy-qubit eavesdropping checks.

mod decoys;
mod encoding;
mod entangled;
mod permutation;
mod sequence;

pub use decoys::{
    insert_decoys, insert_redundant, insert_split_gv, random_bb84_ket, verify_decoys, DecoyBatch,
    DecoyCheck, DecoyPrep, DecoyRecord, DecoySubroutine, GvPlacement, SlotRef,
};
pub use encoding::{
    decode_dense, dense_image, dibits, encode_dense, encode_lm05, encode_z, DIBITS,
};
pub use entangled::{make_bell, make_ghz_like, GhzLikeSpec, Sign};
pub use permutation::{apply_permutation, Permutation};
pub use sequence::{partners_symmetric, Particle, ParticleSequence, Role};
