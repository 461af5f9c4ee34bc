//! Byte-oriented range coder with carry propagation.
//!
//! The state is a 56-bit `low` (plus one carry bit) and a 56-bit `range`,
//! renormalised a byte at a time whenever `range` drops below 2^48.
//! Frequencies use 16-bit precision. The first output byte of this scheme is
//! always zero and is not stored. On finish the encoder flushes the start of
//! the widest aligned block `[v, v + 2^k)` inside the final interval and drops
//! the trailing bytes that lie wholly below bit `k` (zero by alignment, at
//! most seven); the decoder reads zeros past the end. Every byte carrying a
//! bit of `v` above `k` is kept, so the stream is never shorter than the
//! information content of the coded symbols.

use super::cdf::{QuantizedCdfTable, PRECISION_BITS};
use super::CoderError;

const VALUE_BITS: u32 = 56;
const MASK: u64 = (1 << VALUE_BITS) - 1;
const RENORM: u64 = 1 << (VALUE_BITS - 8);
const SHIFT_MASK: u64 = RENORM - 1;
/// Zero bytes the decoder may synthesise past the end of the stream.
const MAX_PADDING: usize = 7;

#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u64,
    cache: u8,
    pending: u64,
    started: bool,
    out: Vec<u8>,
    count: usize,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: MASK,
            cache: 0,
            pending: 1,
            started: false,
            out: Vec::new(),
            count: 0,
        }
    }

    fn emit(&mut self, byte: u8) {
        if self.started {
            self.out.push(byte);
        } else {
            debug_assert_eq!(byte, 0, "leading byte is always zero");
            self.started = true;
        }
    }

    fn shift_low(&mut self) {
        if (self.low & MASK) < (0xFF << (VALUE_BITS - 8)) || (self.low >> VALUE_BITS) != 0 {
            let carry = (self.low >> VALUE_BITS) as u8;
            let mut byte = self.cache;
            loop {
                self.emit(byte.wrapping_add(carry));
                byte = 0xFF;
                self.pending -= 1;
                if self.pending == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> (VALUE_BITS - 8)) & 0xFF) as u8;
        }
        self.pending += 1;
        self.low = (self.low & SHIFT_MASK) << 8;
    }

    /// Codes the interval `[start, start + freq)` out of 2^16.
    pub fn encode_range(&mut self, start: u32, freq: u32) {
        debug_assert!(freq > 0 && start + freq <= 1 << PRECISION_BITS);
        let r = self.range >> PRECISION_BITS;
        self.low += r * start as u64;
        self.range = r * freq as u64;
        while self.range < RENORM {
            self.range <<= 8;
            self.shift_low();
        }
        self.count += 1;
    }

    pub fn encode(&mut self, table: &QuantizedCdfTable, symbol: i32) -> Result<(), CoderError> {
        let (start, freq) = table.range_of(symbol).ok_or(CoderError::SymbolOutOfRange {
            index: self.count,
            symbol,
            min: table.s_min(),
            max: table.s_max(),
        })?;
        self.encode_range(start, freq);
        Ok(())
    }

    pub fn finish(mut self) -> Vec<u8> {
        // widest aligned block [v, v + 2^k) inside [low, low + range)
        let end = self.low + self.range;
        let (mut chosen, mut block_bits) = (self.low, 0);
        for k in (0..VALUE_BITS).rev() {
            let step = 1u64 << k;
            let v = (self.low + step - 1) & !(step - 1);
            if v + step <= end {
                (chosen, block_bits) = (v, k);
                break;
            }
        }
        self.low = chosen;
        for _ in 0..=VALUE_BITS / 8 {
            self.shift_low();
        }
        // the last seven bytes hold `low`; those lying wholly below the block
        // size are zero by alignment and left for the decoder to re-synthesise
        let droppable = (block_bits / 8) as usize;
        debug_assert!(droppable <= MAX_PADDING);
        debug_assert!(self.out.iter().rev().take(droppable).all(|&b| b == 0));
        self.out.truncate(self.out.len() - droppable);
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    code: u64,
    range: u64,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self, CoderError> {
        let mut d = Self {
            data,
            pos: 0,
            code: 0,
            range: MASK,
        };
        for _ in 0..VALUE_BITS / 8 {
            d.code = (d.code << 8) | d.next()? as u64;
        }
        Ok(d)
    }

    fn next(&mut self) -> Result<u8, CoderError> {
        let b = match self.data.get(self.pos) {
            Some(&b) => b,
            None if self.pos < self.data.len() + MAX_PADDING => 0,
            None => return Err(CoderError::Truncated { offset: self.pos }),
        };
        self.pos += 1;
        Ok(b)
    }

    /// Returns the cumulative value of the next symbol; follow with
    /// [`RangeDecoder::consume`].
    pub fn peek(&mut self) -> Result<u32, CoderError> {
        let r = self.range >> PRECISION_BITS;
        let v = self.code / r;
        if v >= 1 << PRECISION_BITS {
            return Err(CoderError::Corrupt {
                offset: self.pos.min(self.data.len()),
            });
        }
        Ok(v as u32)
    }

    pub fn consume(&mut self, start: u32, freq: u32) -> Result<(), CoderError> {
        let r = self.range >> PRECISION_BITS;
        self.code -= r * start as u64;
        self.range = r * freq as u64;
        while self.range < RENORM {
            self.code = ((self.code << 8) | self.next()? as u64) & MASK;
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn decode(&mut self, table: &QuantizedCdfTable) -> Result<i32, CoderError> {
        let v = self.peek()?;
        let (symbol, start, freq) = table.lookup(v);
        self.consume(start, freq)?;
        Ok(symbol)
    }

    /// Checks that the whole stream was consumed.
    pub fn finish(self) -> Result<(), CoderError> {
        if self.pos < self.data.len() {
            return Err(CoderError::TrailingBytes {
                offset: self.pos,
                count: self.data.len() - self.pos,
            });
        }
        Ok(())
    }
}

/// Encodes `symbols[i]` with table `cdf_for(i)`.
pub fn range_encode<'t>(
    symbols: &[i32],
    mut cdf_for: impl FnMut(usize) -> &'t QuantizedCdfTable,
) -> Result<Vec<u8>, CoderError> {
    let mut enc = RangeEncoder::new();
    for (i, &s) in symbols.iter().enumerate() {
        enc.encode(cdf_for(i), s)?;
    }
    Ok(enc.finish())
}

pub fn range_decode<'t>(
    bytes: &[u8],
    count: usize,
    mut cdf_for: impl FnMut(usize) -> &'t QuantizedCdfTable,
) -> Result<Vec<i32>, CoderError> {
    let mut dec = RangeDecoder::new(bytes)?;
    let out = (0..count)
        .map(|i| dec.decode(cdf_for(i)))
        .collect::<Result<Vec<_>, _>>()?;
    dec.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binary() -> QuantizedCdfTable {
        QuantizedCdfTable::from_frequencies(0, &[1 << 15, 1 << 15]).unwrap()
    }

    #[test]
    fn empty_stream_is_short() {
        let bytes = range_encode(&[], |_| unreachable!()).unwrap();
        assert!(bytes.len() <= 8);
        assert!(range_decode(&bytes, 0, |_| unreachable!()).unwrap().is_empty());
    }

    #[test]
    fn uniform_binary_costs_one_bit_each() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = binary();
        let symbols: Vec<i32> = (0..1000).map(|_| rng.gen_range(0..2)).collect();
        let bytes = range_encode(&symbols, |_| &t).unwrap();
        assert!((125..=127).contains(&bytes.len()), "{} bytes", bytes.len());
        assert_eq!(range_decode(&bytes, 1000, |_| &t).unwrap(), symbols);
    }

    #[test]
    fn out_of_alphabet_is_an_error() {
        let t = binary();
        let err = range_encode(&[0, 1, 2], |_| &t).unwrap_err();
        assert_eq!(
            err,
            CoderError::SymbolOutOfRange {
                index: 2,
                symbol: 2,
                min: 0,
                max: 1
            }
        );
    }

    #[test]
    fn carries_through_long_ff_runs() {
        // the top symbol of a skewed table pushes low towards 0xFF.. runs
        let t = QuantizedCdfTable::from_frequencies(0, &[1, 65534, 1]).unwrap();
        let mut symbols = vec![1; 5000];
        symbols.extend([2, 2, 0, 2, 1, 2]);
        symbols.extend(vec![1; 3000]);
        symbols.push(2);
        let bytes = range_encode(&symbols, |_| &t).unwrap();
        assert_eq!(range_decode(&bytes, symbols.len(), |_| &t).unwrap(), symbols);
    }

    #[test]
    fn trailing_garbage_is_reported() {
        let t = binary();
        let mut bytes = range_encode(&[1, 0, 1, 1, 0, 1, 0, 0, 1], |_| &t).unwrap();
        bytes.extend([0xAB; 12]);
        assert!(matches!(
            range_decode(&bytes, 9, |_| &t),
            Err(CoderError::TrailingBytes { .. })
        ));
    }

    #[test]
    fn reading_far_past_end_is_truncation() {
        let t = binary();
        let symbols = vec![1; 400];
        let bytes = range_encode(&symbols, |_| &t).unwrap();
        let err = range_decode(&bytes[..10], 400, |_| &t).unwrap_err();
        assert!(matches!(err, CoderError::Truncated { offset } if offset >= 10));
    }

    proptest! {
        #[test]
        fn roundtrip_random_gaussian_tables(
            seed in any::<u64>(),
            n in 0usize..400,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tables: Vec<QuantizedCdfTable> = (0..n)
                .map(|_| QuantizedCdfTable::from_gaussian(
                    rng.gen_range(-20.0..20.0),
                    (rng.gen_range(-3.0..4.0f64)).exp(),
                    -128,
                    127,
                ))
                .collect();
            let symbols: Vec<i32> = (0..n).map(|_| rng.gen_range(-128..=127)).collect();
            let bytes = range_encode(&symbols, |i| &tables[i]).unwrap();
            let back = range_decode(&bytes, n, |i| &tables[i]).unwrap();
            prop_assert_eq!(back, symbols);
        }

        #[test]
        fn length_never_undercuts_information(seed in any::<u64>(), n in 0usize..40, mode in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = QuantizedCdfTable::from_gaussian(0.0, rng.gen_range(0.05..3.0), -16, 15);
            // mostly probable symbols, which is where short streams of zeros appear
            let symbols: Vec<i32> = (0..n).map(|_| if mode { 0 } else { rng.gen_range(-16..=15) }).collect();
            let bytes = range_encode(&symbols, |_| &table).unwrap();
            let est: f64 = symbols.iter().map(|&s| table.bits(s)).sum();
            let realized = 8.0 * bytes.len() as f64;
            prop_assert!(realized >= est - 1.0 && realized <= est + 32.0, "est {} realized {}", est, realized);
        }
    }
}
