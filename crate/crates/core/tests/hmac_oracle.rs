//! HMAC-SHA256 checked against a from-scratch RFC 2104 construction and the
//! RFC 4231 vectors.

use delegate_core::{compute_hmac, CryptoSpec, HmacAlgorithm, KeyMaterial};
use proptest::prelude::*;
use sha2::{Digest, Sha256};

const BLOCK: usize = 64;

fn oracle_hmac_sha256(key: &[u8], msg: &[u8]) -> Vec<u8> {
    let mut k = if key.len() > BLOCK {
        Sha256::digest(key).to_vec()
    } else {
        key.to_vec()
    };
    k.resize(BLOCK, 0);
    let ipad: Vec<u8> = k.iter().map(|b| b ^ 0x36).collect();
    let opad: Vec<u8> = k.iter().map(|b| b ^ 0x5c).collect();
    let inner = Sha256::new().chain_update(&ipad).chain_update(msg).finalize();
    Sha256::new()
        .chain_update(&opad)
        .chain_update(inner)
        .finalize()
        .to_vec()
}

fn rfc4231() -> Vec<(Vec<u8>, Vec<u8>, &'static str)> {
    vec![
        (
            vec![0x0b; 20],
            b"Hi There".to_vec(),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7",
        ),
        (
            b"Jefe".to_vec(),
            b"what do ya want for nothing?".to_vec(),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843",
        ),
        (
            vec![0xaa; 20],
            vec![0xdd; 50],
            "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe",
        ),
        (
            (1u8..=25).collect(),
            vec![0xcd; 50],
            "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b",
        ),
        (
            vec![0xaa; 131],
            b"Test Using Larger Than Block-Size Key - Hash Key First".to_vec(),
            "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54",
        ),
        (
            vec![0xaa; 131],
            b"This is a test using a larger than block-size key and a larger than block-size data. The key needs to be hashed before being used by the HMAC algorithm.".to_vec(),
            "9b09ffa71b942fcb27635fbcd5b0e944bfdc63644f0713938a7f51535c3a35e2",
        ),
    ]
}

fn spec(len: usize) -> CryptoSpec {
    CryptoSpec {
        hmac_algorithm: HmacAlgorithm::HmacSha256,
        key_length_bytes: len,
    }
}

#[test]
fn oracle_reproduces_reference_vectors() {
    for (key, msg, expected) in rfc4231() {
        assert_eq!(hex::encode(oracle_hmac_sha256(&key, &msg)), expected);
    }
}

#[test]
fn library_matches_reference_vectors() {
    for (key, msg, expected) in rfc4231() {
        if key.len() < CryptoSpec::MIN_KEY_LENGTH {
            continue;
        }
        let tag = compute_hmac(&spec(key.len()), &KeyMaterial::from_bytes(key), &msg).unwrap();
        assert_eq!(tag.to_hex(), expected);
    }
}

proptest! {
    #[test]
    fn library_agrees_with_oracle(key in proptest::collection::vec(any::<u8>(), 16..160),
                                  msg in proptest::collection::vec(any::<u8>(), 0..300)) {
        let tag = compute_hmac(&spec(key.len()), &KeyMaterial::from_bytes(key.clone()), &msg).unwrap();
        prop_assert_eq!(tag.as_bytes().to_vec(), oracle_hmac_sha256(&key, &msg));
    }
}
