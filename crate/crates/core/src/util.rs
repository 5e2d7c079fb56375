use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of a value's compact JSON encoding.
pub fn digest_json<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("state serializes to JSON");
    digest_bytes(&bytes)
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serializes an ordered map as a list of `[key, value]` pairs, for formats
/// (JSON, TOML) whose maps only take string keys.
pub mod pairs {
    use std::collections::BTreeMap;

    use serde::de::DeserializeOwned;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K, V, Z>(map: &BTreeMap<K, V>, ser: Z) -> Result<Z::Ok, Z::Error>
    where
        K: Serialize,
        V: Serialize,
        Z: Serializer,
    {
        let rows: Vec<(&K, &V)> = map.iter().collect();
        rows.serialize(ser)
    }

    pub fn deserialize<'de, K, V, D>(de: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: DeserializeOwned + Ord,
        V: DeserializeOwned,
        D: Deserializer<'de>,
    {
        let rows: Vec<(K, V)> = Vec::deserialize(de)?;
        Ok(rows.into_iter().collect())
    }
}

/// ChaCha8 state without `u128`, which CBOR decoders reject: seed in hex,
/// stream, and the word position split into high and low halves.
pub mod chacha_state {
    use rand_chacha::ChaCha8Rng;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct State {
        seed: String,
        stream: u64,
        word_pos: [u64; 2],
    }

    pub fn serialize<Z: Serializer>(rng: &ChaCha8Rng, ser: Z) -> Result<Z::Ok, Z::Error> {
        let pos = rng.get_word_pos();
        State {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: [(pos >> 64) as u64, pos as u64],
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<ChaCha8Rng, D::Error> {
        use rand::SeedableRng;
        let s = State::deserialize(de)?;
        let mut seed = [0u8; 32];
        hex::decode_to_slice(&s.seed, &mut seed).map_err(D::Error::custom)?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(s.stream);
        rng.set_word_pos(u128::from(s.word_pos[0]) << 64 | u128::from(s.word_pos[1]));
        Ok(rng)
    }
}
