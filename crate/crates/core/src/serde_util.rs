//! Serde adapters for the external JSON conventions.

/// Dose indices are 0-based internally and 1-based in every external format.
pub mod one_based {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(i) => s.serialize_u64(*i as u64 + 1),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Option::<usize>::deserialize(d)? {
            Some(0) => Err(D::Error::custom("dose levels are 1-based")),
            Some(i) => Ok(Some(i - 1)),
            None => Ok(None),
        }
    }
}

/// Required 1-based index.
pub mod one_based_required {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        match usize::deserialize(d)? {
            0 => Err(D::Error::custom("dose levels are 1-based")),
            i => Ok(i - 1),
        }
    }
}
