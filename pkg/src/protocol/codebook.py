"""Clock command words sent on the 1550 nm timing channel.

A word is a fixed-length train of slots at 5 MHz, each carrying a 100 ns
pulse or nothing; a trigger pulse before the word frames it. The only
channel fault considered is a lost pulse, so a received word is either a
codeword or a codeword with one pulse missing.
"""

from enum import StrEnum
from itertools import combinations, product
from typing import Iterable, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import CapacityExceeded, LengthMismatch

SLOT_PERIOD = 200e-9
PULSE_DURATION = 100e-9
DEFAULT_WORD_LENGTH = 8
MIN_PULSES = 2

Symbols = tuple[int, ...]


class Meaning(StrEnum):
    DATA_TRANSMISSION = "data-transmission"
    POLARIZATION_REFERENCE = "polarization-reference"
    TDI_REFERENCE = "tdi-reference"
    IDLE = "idle"


def as_symbols(word: str | Iterable[int | bool]) -> Symbols:
    """'01101' or any iterable of 0/1/bool → tuple of ints."""
    if isinstance(word, str):
        word = [int(c) for c in word]
    symbols = tuple(int(bool(s)) for s in word)
    return symbols


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x != y for x, y in zip(a, b))


def single_deletions(word: Sequence[int]) -> set[Symbols]:
    """Every word obtained by losing exactly one pulse."""
    return {tuple(0 if j == i else s for j, s in enumerate(word)) for i, s in enumerate(word) if s}


def _lost_one_pulse(received: Symbols, word: Symbols) -> bool:
    return sum(word) - sum(received) == 1 and all(r <= w for r, w in zip(received, word))


class ClockCommandWord(BaseModel):
    model_config = ConfigDict(frozen=True)

    symbols: Symbols
    meaning: Meaning | None = None
    slot_period: float = Field(default=SLOT_PERIOD, gt=0)
    pulse_duration: float = Field(default=PULSE_DURATION, gt=0)

    @field_validator("symbols", mode="before")
    @classmethod
    def _binary(cls, v):
        return as_symbols(v)

    @model_validator(mode="after")
    def _pulse_fits_slot(self):
        if self.pulse_duration > self.slot_period:
            raise ValueError("a pulse must fit inside its slot")
        return self

    def __str__(self) -> str:
        return "".join(str(s) for s in self.symbols)

    @property
    def weight(self) -> int:
        return sum(self.symbols)

    @property
    def duration(self) -> float:
        return len(self.symbols) * self.slot_period


class Codebook(BaseModel):
    """Ordered codewords; pairwise distance ≥ 2 and closed under no single deletion."""

    model_config = ConfigDict(frozen=True)

    words: tuple[ClockCommandWord, ...]

    @model_validator(mode="after")
    def _invariants(self):
        if not self.words:
            raise ValueError("a codebook needs at least one word")
        lengths = {len(w.symbols) for w in self.words}
        if len(lengths) != 1:
            raise ValueError(f"codewords differ in length: {sorted(lengths)}")
        for a, b in combinations(self.words, 2):
            if hamming(a.symbols, b.symbols) < 2:
                raise ValueError(f"{a} and {b} differ in fewer than two symbols")
            if a.symbols in single_deletions(b.symbols) or b.symbols in single_deletions(a.symbols):
                raise ValueError(f"one lost pulse turns {a} into {b}")
        return self

    @property
    def word_length(self) -> int:
        return len(self.words[0].symbols)

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def word_for(self, meaning: Meaning) -> ClockCommandWord:
        for word in self.words:
            if word.meaning == meaning:
                return word
        raise KeyError(f"no codeword for {meaning}")


def _admissible(candidate: Symbols, chosen: list[Symbols]) -> bool:
    for word in chosen:
        distance = hamming(candidate, word)
        if distance < 2:
            return False
        # equal weights at distance 2 share a single-deletion image
        if sum(word) == sum(candidate) and distance < 4:
            return False
    return True


def build_codebook(
    n_words: int = len(Meaning),
    word_length: int = DEFAULT_WORD_LENGTH,
    meanings: Sequence[Meaning] | None = None,
    min_pulses: int = MIN_PULSES,
) -> Codebook:
    """Lexicographic greedy search for words that survive any single lost pulse.

    Besides the codebook invariants, every single-deletion image is reachable
    from exactly one codeword, so ``decode_command`` can repair it.
    """
    if n_words < 1:
        raise ValueError(f"n_words must be at least 1, got {n_words}")
    meanings = list(meanings) if meanings is not None else list(Meaning)

    chosen: list[Symbols] = []
    for candidate in product((0, 1), repeat=word_length):
        if sum(candidate) < min_pulses:
            continue
        if _admissible(candidate, chosen):
            chosen.append(candidate)
            if len(chosen) == n_words:
                break
    if len(chosen) < n_words:
        raise CapacityExceeded(
            f"only {len(chosen)} deletion-robust words exist at length {word_length}, asked for {n_words}"
        )

    words = tuple(
        ClockCommandWord(symbols=symbols, meaning=meanings[i] if i < len(meanings) else None)
        for i, symbols in enumerate(chosen)
    )
    return Codebook(words=words)


class DecodeResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    word: ClockCommandWord | None = None
    repaired: bool = False

    @property
    def erased(self) -> bool:
        return self.word is None

    @property
    def meaning(self) -> Meaning | None:
        return self.word.meaning if self.word else None


def decode_command(received, codebook: Codebook) -> DecodeResult:
    """Exact match, else the unique codeword one lost pulse away, else an erasure."""
    received = as_symbols(received)
    if len(received) != codebook.word_length:
        raise LengthMismatch(
            f"received {len(received)} symbols, codewords have {codebook.word_length}"
        )
    for word in codebook:
        if word.symbols == received:
            return DecodeResult(word=word)
    candidates = [word for word in codebook if _lost_one_pulse(received, word.symbols)]
    if len(candidates) == 1:
        return DecodeResult(word=candidates[0], repaired=True)
    return DecodeResult()
