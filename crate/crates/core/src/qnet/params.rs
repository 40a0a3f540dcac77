use std::io::{Read, Write};

use rand::Rng;

use super::QNetError;

pub const FEATURES: usize = 3;
pub const HIDDEN: usize = 128;

const MAGIC: &[u8; 8] = b"RLGSQNET";
const VERSION: u32 = 1;

/// Parameter tensors in declaration (and checkpoint) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tensor {
    Eps1,
    Gin1AW,
    Gin1AB,
    Gin1BW,
    Gin1BB,
    Eps2,
    Gin2AW,
    Gin2AB,
    Gin2BW,
    Gin2BB,
    Head1W,
    Head1B,
    Head2W,
    Head2B,
    OutW,
    OutB,
}

impl Tensor {
    pub const ALL: [Tensor; 16] = [
        Tensor::Eps1,
        Tensor::Gin1AW,
        Tensor::Gin1AB,
        Tensor::Gin1BW,
        Tensor::Gin1BB,
        Tensor::Eps2,
        Tensor::Gin2AW,
        Tensor::Gin2AB,
        Tensor::Gin2BW,
        Tensor::Gin2BB,
        Tensor::Head1W,
        Tensor::Head1B,
        Tensor::Head2W,
        Tensor::Head2B,
        Tensor::OutW,
        Tensor::OutB,
    ];

    /// `(rows, cols)`; weights map `rows` inputs to `cols` outputs.
    pub fn shape(self) -> (usize, usize) {
        use Tensor::*;
        match self {
            Eps1 | Eps2 | OutB => (1, 1),
            Gin1AW => (FEATURES, HIDDEN),
            Gin1BW | Gin2AW | Gin2BW | Head1W | Head2W => (HIDDEN, HIDDEN),
            Gin1AB | Gin1BB | Gin2AB | Gin2BB | Head1B | Head2B => (1, HIDDEN),
            OutW => (HIDDEN, 1),
        }
    }

    pub fn len(self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    pub fn is_weight(self) -> bool {
        use Tensor::*;
        matches!(self, Gin1AW | Gin1BW | Gin2AW | Gin2BW | Head1W | Head2W | OutW)
    }

    pub fn offset(self) -> usize {
        Tensor::ALL.iter().take_while(|&&t| t != self).map(|t| t.len()).sum()
    }
}

pub fn param_count() -> usize {
    Tensor::ALL.iter().map(|t| t.len()).sum()
}

/// Flat parameter vector of the Q-network.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetParams {
    data: Vec<f64>,
}

impl QNetParams {
    pub fn zeros() -> Self {
        QNetParams { data: vec![0.0; param_count()] }
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases and epsilons.
    pub fn init<R: Rng>(rng: &mut R) -> Self {
        let mut p = Self::zeros();
        for t in Tensor::ALL.into_iter().filter(|t| t.is_weight()) {
            let (fan_in, fan_out) = t.shape();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in p.tensor_mut(t) {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        p
    }

    pub fn tensor(&self, t: Tensor) -> &[f64] {
        let o = t.offset();
        &self.data[o..o + t.len()]
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [f64] {
        let o = t.offset();
        &mut self.data[o..o + t.len()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(Tensor::ALL.len() as u32).to_le_bytes())?;
        for t in Tensor::ALL {
            let (r, c) = t.shape();
            w.write_all(&(r as u32).to_le_bytes())?;
            w.write_all(&(c as u32).to_le_bytes())?;
        }
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * param_count() + 256);
        self.save(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self, QNetError> {
        let bad = |m: &str| QNetError::Checkpoint(m.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let read_u32 = |r: &mut R| -> Result<u32, QNetError> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            Ok(u32::from_le_bytes(b))
        };
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(QNetError::Checkpoint(format!("unsupported version {version}")));
        }
        let count = read_u32(&mut r)? as usize;
        if count != Tensor::ALL.len() {
            return Err(QNetError::Checkpoint(format!("expected 16 tensors, found {count}")));
        }
        for t in Tensor::ALL {
            let dims = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
            if dims != t.shape() {
                return Err(QNetError::Checkpoint(format!(
                    "{t:?} has shape {dims:?}, expected {:?}",
                    t.shape()
                )));
            }
        }
        let mut p = Self::zeros();
        let mut b = [0u8; 8];
        for x in p.data.iter_mut() {
            r.read_exact(&mut b).map_err(|_| bad("truncated weights"))?;
            *x = f64::from_le_bytes(b);
        }
        if r.read(&mut b).map_err(|e| QNetError::Checkpoint(e.to_string()))? != 0 {
            return Err(bad("trailing bytes after weights"));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_is_contiguous() {
        let last = Tensor::OutB;
        assert_eq!(last.offset() + last.len(), param_count());
        assert_eq!(param_count(), 1 + 3 * 128 + 128 + 128 * 128 + 128 + 1 + 2 * (128 * 128 + 128) + 2 * (128 * 128 + 128) + 128 + 1);
    }

    #[test]
    fn init_respects_glorot_limits() {
        let p = QNetParams::init(&mut ChaCha8Rng::seed_from_u64(7));
        let limit = (6.0f64 / 131.0).sqrt();
        assert!(p.tensor(Tensor::Gin1AW).iter().all(|w| w.abs() <= limit));
        assert!(p.tensor(Tensor::Gin1AW).iter().any(|w| w.abs() > limit / 2.0));
        assert!(p.tensor(Tensor::Head1B).iter().all(|&b| b == 0.0));
        assert_eq!(p.tensor(Tensor::Eps1), &[0.0]);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let p = QNetParams::init(&mut ChaCha8Rng::seed_from_u64(1));
        let q = QNetParams::load(p.to_bytes().as_slice()).unwrap();
        assert!(p.as_slice().iter().zip(q.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn checkpoint_corruption_is_rejected() {
        let bytes = QNetParams::zeros().to_bytes();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(QNetParams::load(bad_magic.as_slice()).is_err());

        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(QNetParams::load(bad_version.as_slice()).is_err());

        // First tensor's row count.
        let mut bad_dims = bytes.clone();
        bad_dims[16] = 2;
        let err = QNetParams::load(bad_dims.as_slice()).unwrap_err();
        assert!(err.to_string().contains("shape"), "{err}");

        assert!(QNetParams::load(&bytes[..bytes.len() - 3]).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(QNetParams::load(long.as_slice()).is_err());
    }
}
