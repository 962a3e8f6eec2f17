//! The fuzzy commitment scheme `f = c + T(w)`: enrollment, verification
//! and the JSON record format.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codes::{CodeDescriptor, LinearCode};
use crate::error::{CommitmentError, LinalgError};
use crate::field::{Field, FieldSpec};
use crate::gf2::BitVec;
use crate::linalg::FieldVector;
use crate::transforms::TransformDescriptor;

pub const RECORD_VERSION: u32 = 1;

/// Hash algorithm binding the codeword into a record.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum HashAlg {
    #[default]
    Sha256,
}

impl HashAlg {
    pub fn id(&self) -> &'static str {
        match self {
            HashAlg::Sha256 => "sha256",
        }
    }

    pub fn digest_len(&self) -> usize {
        match self {
            HashAlg::Sha256 => 32,
        }
    }

    pub fn digest(&self, bytes: &[u8]) -> Vec<u8> {
        match self {
            HashAlg::Sha256 => Sha256::digest(bytes).to_vec(),
        }
    }

    /// Digest of a codeword's canonical byte encoding.
    pub fn digest_codeword(&self, c: &FieldVector) -> Vec<u8> {
        self.digest(&codeword_bytes(c))
    }
}

impl fmt::Display for HashAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for HashAlg {
    type Err = CommitmentError;

    fn from_str(s: &str) -> Result<Self, CommitmentError> {
        match s {
            "sha256" => Ok(HashAlg::Sha256),
            _ => Err(CommitmentError::UnknownHash(s.to_string())),
        }
    }
}

/// Canonical bytes of a vector: packed big-endian bits over GF(2), one byte
/// per entry for q <= 256, two big-endian bytes per entry above that.
pub fn codeword_bytes(c: &FieldVector) -> Vec<u8> {
    if let Some(bits) = c.bits() {
        return bits.to_bytes_be();
    }
    let elems = c.elems();
    if c.field().order() <= 256 {
        elems.into_iter().map(|x| x as u8).collect()
    } else {
        elems.into_iter().flat_map(|x| x.to_be_bytes()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashBinding {
    pub alg: HashAlg,
    pub digest: Vec<u8>,
}

impl HashBinding {
    pub fn of_codeword(alg: HashAlg, c: &FieldVector) -> Self {
        HashBinding { alg, digest: alg.digest_codeword(c) }
    }

    pub fn matches(&self, c: &FieldVector) -> bool {
        self.alg.digest_codeword(c) == self.digest
    }
}

/// A published record `(f, T, h(c)?)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub code: CodeDescriptor,
    pub commitment: FieldVector,
    pub transform: TransformDescriptor,
    pub hash: Option<HashBinding>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnrollOptions {
    pub hash: Option<HashAlg>,
    /// Positions of `T(w)` flipped at random before committing (GF(2) only).
    pub noise_flips: usize,
}

/// Outcome of [`verify`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verification {
    /// `hash_checked` is false when the record has no hash and acceptance
    /// rests on decoding alone.
    Accept {
        codeword: FieldVector,
        hash_checked: bool,
    },
    Reject,
}

impl Verification {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verification::Accept { .. })
    }
}

fn check_vector(code: &LinearCode, v: &FieldVector) -> Result<(), CommitmentError> {
    if v.field() != code.field() {
        return Err(LinalgError::FieldMismatch.into());
    }
    if v.len() != code.n() {
        return Err(LinalgError::DimensionMismatch { expected: code.n(), found: v.len() }.into());
    }
    Ok(())
}

/// Enrolls `w`, also returning the secret codeword.
pub fn enroll_with_codeword<R: Rng + ?Sized>(
    w: &FieldVector,
    code: &LinearCode,
    transform: &TransformDescriptor,
    options: EnrollOptions,
    rng: &mut R,
) -> Result<(Record, FieldVector), CommitmentError> {
    check_vector(code, w)?;
    let n = code.n();
    if options.noise_flips > 0 && !code.field().is_binary() {
        return Err(CommitmentError::NoiseOnNonBinary);
    }
    if options.noise_flips > n {
        return Err(CommitmentError::TooMuchNoise { z: options.noise_flips, n });
    }
    let c = code.random_codeword(rng);
    let mut v = transform.apply(w)?;
    for i in rand::seq::index::sample(rng, n, options.noise_flips) {
        v.set(i, 1 - v.get(i));
    }
    let commitment = c.add(&v)?;
    let hash = options.hash.map(|alg| HashBinding::of_codeword(alg, &c));
    let record = Record { code: code.descriptor().clone(), commitment, transform: transform.clone(), hash };
    Ok((record, c))
}

pub fn enroll<R: Rng + ?Sized>(
    w: &FieldVector,
    code: &LinearCode,
    transform: &TransformDescriptor,
    options: EnrollOptions,
    rng: &mut R,
) -> Result<Record, CommitmentError> {
    enroll_with_codeword(w, code, transform, options, rng).map(|(r, _)| r)
}

/// Decodes `f - T(w')` and checks the hash when the record carries one.
pub fn verify(record: &Record, code: &LinearCode, w: &FieldVector) -> Result<Verification, CommitmentError> {
    record.check(code)?;
    check_vector(code, w)?;
    let shifted = record.commitment.sub(&record.transform.apply(w)?)?;
    let codeword = match code.decode_bounded(&shifted) {
        Ok(c) => c,
        Err(crate::error::CodeError::DecodeFailure) => return Ok(Verification::Reject),
        Err(e) => return Err(e.into()),
    };
    match &record.hash {
        Some(h) if !h.matches(&codeword) => Ok(Verification::Reject),
        Some(_) => Ok(Verification::Accept { codeword, hash_checked: true }),
        None if code.is_codeword(&codeword)? => Ok(Verification::Accept { codeword, hash_checked: false }),
        None => Ok(Verification::Reject),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFile {
    version: u32,
    field: FieldSpec,
    code: serde_json::Value,
    f: serde_json::Value,
    transform: TransformDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hash: Option<HashFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HashFile {
    alg: String,
    digest: String,
}

/// Vector encoding used in records: lowercase hex of the packed bits over
/// GF(2), an integer array otherwise.
pub fn vector_to_json(v: &FieldVector) -> serde_json::Value {
    match v.bits() {
        Some(bits) => serde_json::Value::String(hex::encode(bits.to_bytes_be())),
        None => serde_json::Value::from(v.elems()),
    }
}

pub fn vector_from_json(field: &Field, n: usize, value: &serde_json::Value) -> Result<FieldVector, CommitmentError> {
    let malformed = |m: &str| CommitmentError::Malformed(m.to_string());
    if field.is_binary() {
        let s = value.as_str().ok_or_else(|| malformed("GF(2) vector must be a hex string"))?;
        let bytes = hex::decode(s).map_err(|e| CommitmentError::Malformed(format!("bad hex: {e}")))?;
        if bytes.len() != n.div_ceil(8) {
            return Err(malformed("hex length does not match the block length"));
        }
        let bits = BitVec::from_bytes_be(&bytes, n).ok_or_else(|| malformed("non-zero padding bits"))?;
        return Ok(FieldVector::from_bits(bits));
    }
    let elems: Vec<u16> =
        serde_json::from_value(value.clone()).map_err(|e| CommitmentError::Malformed(format!("bad vector: {e}")))?;
    if elems.len() != n {
        return Err(malformed("vector length does not match the block length"));
    }
    FieldVector::from_elems(field, elems).map_err(Into::into)
}

impl Record {
    pub fn field(&self) -> &Field {
        self.commitment.field()
    }

    pub fn build_code(&self) -> Result<LinearCode, CommitmentError> {
        Ok(self.code.build()?)
    }

    /// Checks the record invariants against a code.
    pub fn check(&self, code: &LinearCode) -> Result<(), CommitmentError> {
        if &self.code != code.descriptor() {
            return Err(CommitmentError::Malformed(format!(
                "record names code {} but {} was supplied",
                self.code,
                code.descriptor()
            )));
        }
        if self.commitment.field() != code.field() || self.commitment.len() != code.n() {
            return Err(CommitmentError::Malformed("commitment does not match the code".into()));
        }
        self.transform.validate(code.n(), code.field())?;
        if let Some(h) = &self.hash {
            if h.digest.len() != h.alg.digest_len() {
                return Err(CommitmentError::Malformed(format!(
                    "{} digest must be {} bytes",
                    h.alg,
                    h.alg.digest_len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = RecordFile {
            version: RECORD_VERSION,
            field: self.field().spec().clone(),
            code: self.code.to_file_value(),
            f: vector_to_json(&self.commitment),
            transform: self.transform.clone(),
            hash: self.hash.as_ref().map(|h| HashFile { alg: h.alg.id().to_string(), digest: hex::encode(&h.digest) }),
        };
        serde_json::to_string(&file).expect("record serializes")
    }

    /// Parses and validates a record file.
    pub fn from_json(text: &str) -> Result<Record, CommitmentError> {
        let file: RecordFile = serde_json::from_str(text)?;
        if file.version != RECORD_VERSION {
            return Err(CommitmentError::Malformed(format!("unsupported record version {}", file.version)));
        }
        let spec = match file.field.modulus {
            None if file.field.m > 1 => FieldSpec::new(file.field.p, file.field.m)?,
            _ => file.field,
        };
        let field = Field::new(spec.clone())?;
        let code = CodeDescriptor::from_file_value(file.code, &spec).map_err(CommitmentError::Malformed)?;
        let n = code.block_length();
        let commitment = vector_from_json(&field, n, &file.f)?;
        file.transform.validate(n, &field)?;
        let hash = match file.hash {
            Some(h) => {
                let alg: HashAlg = h.alg.parse()?;
                let digest =
                    hex::decode(&h.digest).map_err(|e| CommitmentError::Malformed(format!("bad digest: {e}")))?;
                if digest.len() != alg.digest_len() {
                    return Err(CommitmentError::Malformed(format!("{alg} digest must be {} bytes", alg.digest_len())));
                }
                Some(HashBinding { alg, digest })
            }
            None => None,
        };
        Ok(Record { code, commitment, transform: file.transform, hash })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::bch_build;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_commitment_minus_codeword_is_w() {
        let code = bch_build(5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = FieldVector::random(code.field(), 31, &mut rng);
        let (record, c) =
            enroll_with_codeword(&w, &code, &TransformDescriptor::Identity {}, EnrollOptions::default(), &mut rng)
                .unwrap();
        assert_eq!(record.commitment.sub(&c).unwrap(), w);
        assert_eq!(verify(&record, &code, &w).unwrap(), Verification::Accept { codeword: c, hash_checked: false });
    }

    #[test]
    fn tampered_hash_rejects_at_distance_zero() {
        let code = bch_build(5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = FieldVector::random(code.field(), 31, &mut rng);
        let opts = EnrollOptions { hash: Some(HashAlg::Sha256), noise_flips: 0 };
        let mut record = enroll(&w, &code, &TransformDescriptor::Identity {}, opts, &mut rng).unwrap();
        assert!(verify(&record, &code, &w).unwrap().is_accept());
        record.hash.as_mut().unwrap().digest[0] ^= 1;
        assert_eq!(verify(&record, &code, &w).unwrap(), Verification::Reject);
    }

    #[test]
    fn noise_needs_binary_field_and_room() {
        let code = bch_build(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = FieldVector::zeros(code.field(), 7);
        let opts = EnrollOptions { hash: None, noise_flips: 8 };
        assert!(matches!(
            enroll(&w, &code, &TransformDescriptor::Identity {}, opts, &mut rng),
            Err(CommitmentError::TooMuchNoise { z: 8, n: 7 })
        ));
    }

    #[test]
    fn canonical_bytes() {
        let v =
            FieldVector::from_bits(BitVec::from_bools(&[true, false, true, true, false, false, false, false, true]));
        assert_eq!(codeword_bytes(&v), vec![0b1011_0000, 0b1000_0000]);
        let f = Field::with_order(5).unwrap();
        assert_eq!(codeword_bytes(&FieldVector::from_elems(&f, vec![4, 0, 3]).unwrap()), vec![4, 0, 3]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Record::from_json("{"), Err(CommitmentError::Parse(_))));
        let text = r#"{"version":1,"field":{"p":2,"m":1},"code":"bch:7:1","f":"00","transform":{"type":"twist"}}"#;
        assert!(matches!(Record::from_json(text), Err(CommitmentError::Parse(_))));
        let text = r#"{"version":1,"field":{"p":2,"m":1},"code":"bch:7:1","f":"01","transform":{"type":"identity"}}"#;
        assert!(matches!(Record::from_json(text), Err(CommitmentError::Malformed(_))));
    }
}
