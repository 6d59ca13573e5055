"""Post-processing chain: von Neumann seed debiasing and Toeplitz hashing.

Raw digitized words are serialized LSB-first into a bit stream, split into
blocks of N bits, and each block is multiplied (over GF(2)) by a random
Boolean Toeplitz matrix of shape M x N, with M = floor(N / gamma_adc).  The
matrix is defined by a seed of M + N - 1 bits:

    T[i][j] = seed[i - j + N - 1]

so the first row is seed[N-1 .. 0] left-to-right and the first column is
seed[N-1 .. M+N-2] top-to-bottom.  The seed itself comes from a small raw
buffer debiased with the von Neumann extractor (01 -> 0, 10 -> 1, equal
pairs discarded).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NeedsMoreEntropyError, UntrustedSourceError
from .reduction import is_untrusted


@dataclass
class BitBuffer:
    """Packed bit sequence, LSB-first within each byte."""

    data: bytes
    length: int

    def __post_init__(self):
        self.data = bytes(self.data)
        if self.length < 0 or len(self.data) != (self.length + 7) // 8:
            raise ValueError("packed storage does not match bit length")
        # Padding bits beyond `length` must be zero for to_int()/equality.
        if self.length % 8 and self.data:
            if self.data[-1] >> (self.length % 8):
                raise ValueError("padding bits past the end must be zero")

    @classmethod
    def from_bits(cls, bits) -> "BitBuffer":
        """Build from an iterable/array of 0/1 values."""
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(np.packbits(arr, bitorder="little").tobytes(), int(arr.size))

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitBuffer":
        if value < 0 or value >> length:
            raise ValueError("value does not fit in the given bit length")
        nbytes = (length + 7) // 8
        return cls(value.to_bytes(nbytes, "little"), length)

    def to_bits(self) -> np.ndarray:
        """Unpack to a uint8 array of 0/1 values."""
        raw = np.frombuffer(self.data, dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.length]

    def to_int(self) -> int:
        """The buffer as a Python int with bit i at weight 2**i."""
        return int.from_bytes(self.data, "little")

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError("bit index out of range")
        return (self.data[i >> 3] >> (i & 7)) & 1

    def slice(self, start: int, stop: int) -> "BitBuffer":
        if not 0 <= start <= stop <= self.length:
            raise ValueError("invalid bit slice")
        return BitBuffer.from_bits(self.to_bits()[start:stop])

    def concat(self, other: "BitBuffer") -> "BitBuffer":
        return BitBuffer.from_bits(
            np.concatenate([self.to_bits(), other.to_bits()])
        )


@dataclass
class ToeplitzSeed:
    """Seed bits defining one Toeplitz matrix; length must be M + N - 1."""

    bits: BitBuffer

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class ExtractorConfig:
    """Block geometry of the extraction stage.

    The per-block output length is floor(block_len_n / gamma_adc); flooring
    is the conservative direction for the entropy bound.  gamma_adc == 1
    gives the square-matrix boundary case (output length equals input).
    """

    block_len_n: int
    gamma_adc: object

    def __post_init__(self):
        if self.block_len_n < 1:
            raise ValueError("block length must be at least 1")
        if is_untrusted(self.gamma_adc):
            return  # out_len_m is unavailable; extraction will refuse to run
        if self.gamma_adc < 1.0:
            raise ValueError("gamma_adc below 1 would expand the sequence")

    @property
    def out_len_m(self) -> int:
        if is_untrusted(self.gamma_adc):
            raise UntrustedSourceError("reduction factor is infinite")
        m = int(self.block_len_n / self.gamma_adc)
        if m < 1:
            raise ValueError("gamma_adc too large: zero output bits per block")
        return m

    @property
    def seed_len(self) -> int:
        return self.out_len_m + self.block_len_n - 1


def von_neumann(buf: BitBuffer) -> BitBuffer:
    """Debias by non-overlapping pairs: 01 -> 0, 10 -> 1, 00/11 discarded."""
    bits = buf.to_bits()
    n = len(bits) - (len(bits) % 2)
    first = bits[0:n:2]
    second = bits[1:n:2]
    keep = first != second
    return BitBuffer.from_bits(first[keep])


def generate_seed(raw: BitBuffer, needed: int) -> tuple[ToeplitzSeed, int]:
    """Debias ``raw`` and take the first ``needed`` bits as a Toeplitz seed.

    Returns the seed and the number of raw bits consumed to produce it; the
    caller must exclude those bits from the extraction input.  Raises
    NeedsMoreEntropyError (with the deficit) when the debiased output is too
    short.
    """
    if needed < 0:
        raise ValueError("needed must be non-negative")
    if needed == 0:
        return ToeplitzSeed(BitBuffer(b"", 0)), 0
    bits = raw.to_bits()
    n = len(bits) - (len(bits) % 2)
    first = bits[0:n:2]
    keep = first != bits[1:n:2]
    yields = np.cumsum(keep)
    total = int(yields[-1]) if n else 0
    if total < needed:
        raise NeedsMoreEntropyError(needed, total)
    last_pair = int(np.searchsorted(yields, needed))
    consumed = 2 * (last_pair + 1)
    seed_bits = first[keep][:needed]
    return ToeplitzSeed(BitBuffer.from_bits(seed_bits)), consumed


def random_seed(rng: np.random.Generator, m: int, n: int) -> ToeplitzSeed:
    """Uniformly random seed for an M x N Toeplitz matrix (testing/tooling)."""
    return ToeplitzSeed(BitBuffer.from_bits(rng.integers(0, 2, size=m + n - 1)))


def toeplitz_matrix(seed: ToeplitzSeed, m: int, n: int) -> np.ndarray:
    """Explicit M x N Boolean matrix with T[i][j] = seed[i - j + n - 1]."""
    if len(seed) != m + n - 1:
        raise ValueError(f"seed length must be {m + n - 1}, got {len(seed)}")
    s = seed.bits.to_bits()
    idx = np.arange(m)[:, None] - np.arange(n)[None, :] + (n - 1)
    return s[idx]


def toeplitz_hash_naive(raw: BitBuffer, seed: ToeplitzSeed, m: int) -> BitBuffer:
    """Reference GF(2) matrix-vector product via the explicit matrix."""
    n = len(raw)
    t = toeplitz_matrix(seed, m, n)
    out = (t.astype(np.uint32) @ raw.to_bits().astype(np.uint32)) & 1
    return BitBuffer.from_bits(out.astype(np.uint8))


def toeplitz_hash(raw: BitBuffer, seed: ToeplitzSeed, m: int) -> BitBuffer:
    """Word-parallel GF(2) Toeplitz multiply; bit-exact with the naive form.

    Row i of the matrix, read LSB-first, is a window of the reversed seed:
    reversing seed bits s into u (u[k] = s[M+N-2-k]) makes row i equal to
    (u >> (M-1-i)) masked to N bits, so each output bit is one AND plus a
    popcount-parity of machine words.
    """
    n = len(raw)
    if m < 1:
        raise ValueError("output length m must be at least 1")
    if len(seed) != m + n - 1:
        raise ValueError(f"seed length must be {m + n - 1}, got {len(seed)}")
    x = raw.to_int()
    u = BitBuffer.from_bits(seed.bits.to_bits()[::-1]).to_int()
    mask = (1 << n) - 1
    out = 0
    for i in range(m):
        row = (u >> (m - 1 - i)) & mask
        out |= ((row & x).bit_count() & 1) << i
    return BitBuffer.from_int(out, m)


def extraction_pipeline(
    raw: BitBuffer,
    cfg: ExtractorConfig,
    seed: ToeplitzSeed | None = None,
) -> BitBuffer:
    """Hash a raw bit stream block by block with one session seed.

    When no seed is supplied, it is generated by debiasing the head of the
    raw stream; those bits are excluded from extraction.  The remaining
    stream is split into blocks of N bits (an incomplete trailing block is
    dropped) and each block is hashed to M = floor(N / gamma_adc) bits with
    the same seed.
    """
    if is_untrusted(cfg.gamma_adc):
        raise UntrustedSourceError(
            "reduction factor is infinite: refusing to extract"
        )
    m = cfg.out_len_m
    n = cfg.block_len_n
    start = 0
    if seed is None:
        seed, start = generate_seed(raw, cfg.seed_len)
    elif len(seed) != cfg.seed_len:
        raise ValueError(f"seed length must be {cfg.seed_len}, got {len(seed)}")

    bits = raw.to_bits()[start:]
    n_blocks = len(bits) // n
    if n_blocks == 0:
        raise ValueError("raw stream shorter than one block")
    out = np.empty(n_blocks * m, dtype=np.uint8)
    for b in range(n_blocks):
        block = BitBuffer.from_bits(bits[b * n : (b + 1) * n])
        out[b * m : (b + 1) * m] = toeplitz_hash(block, seed, m).to_bits()
    return BitBuffer.from_bits(out)


def words_to_bits(values, n_bits: int) -> BitBuffer:
    """Serialize quantized words into a bit stream, LSB-first per word."""
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >> n_bits):
        raise ValueError("word value does not fit the given bit depth")
    bits = (values[:, None] >> np.arange(n_bits)[None, :]) & 1
    return BitBuffer.from_bits(bits.astype(np.uint8).ravel())


def monobit_bias(buf: BitBuffer) -> tuple[float, float]:
    """(|mean - 0.5|, three-sigma bound) for a quick uniformity sanity check."""
    n = len(buf)
    if n == 0:
        raise ValueError("empty bit buffer")
    mean = float(buf.to_bits().mean())
    return abs(mean - 0.5), 3.0 * 0.5 / np.sqrt(n)
