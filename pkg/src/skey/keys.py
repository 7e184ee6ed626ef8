"""Key labels and pitch-class conventions.

Pitch classes are integers 0-11 with 0 = A, matching the CQT layout whose
bin 0 is A0 (27.5 Hz). So C = 3, and the relative-major root of a minor
key sits a minor third (3 semitones) above its tonic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import UnparsableLabel

MAJOR = "major"
MINOR = "minor"

#: Display names per pitch class, sharp spelling, index 0 = A.
PITCH_CLASS_NAMES = ("A", "A#", "B", "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#")

#: Natural-letter offsets above A.
_LETTER_TO_CLASS = {"a": 0, "b": 2, "c": 3, "d": 5, "e": 7, "f": 8, "g": 10}

_MODE_WORDS = {
    "major": MAJOR,
    "maj": MAJOR,
    "minor": MINOR,
    "min": MINOR,
}

_LABEL_RE = re.compile(r"^\s*([A-Ga-g])([#b♯♭]*)[\s:]+(\S+)\s*$")


@dataclass(frozen=True)
class KeyLabel:
    """One of the 24 major/minor keys: tonic pitch class plus mode."""

    tonic: int
    mode: str

    def __post_init__(self) -> None:
        if not 0 <= self.tonic < 12:
            raise ValueError(f"tonic {self.tonic} outside [0, 12)")
        if self.mode not in (MAJOR, MINOR):
            raise ValueError(f"mode must be {MAJOR!r} or {MINOR!r}, got {self.mode!r}")

    @property
    def signature(self) -> int:
        """Key-signature class: the relative-major root pitch class."""
        return self.tonic if self.mode == MAJOR else (self.tonic + 3) % 12

    @property
    def index(self) -> int:
        """Canonical 0-23 index: majors 0-11 by tonic, minors 12-23."""
        return self.tonic + (0 if self.mode == MAJOR else 12)

    @classmethod
    def from_index(cls, idx: int) -> "KeyLabel":
        if not 0 <= idx < 24:
            raise ValueError(f"key index {idx} outside [0, 24)")
        return cls(idx % 12, MAJOR if idx < 12 else MINOR)

    def transpose(self, semitones: int) -> "KeyLabel":
        return KeyLabel((self.tonic + semitones) % 12, self.mode)

    def name(self) -> str:
        return f"{PITCH_CLASS_NAMES[self.tonic]} {self.mode}"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.name()


ALL_KEYS = tuple(KeyLabel.from_index(i) for i in range(24))


def parse_key_label(s: str) -> KeyLabel:
    """Parse a key string such as ``"C major"``, ``"db minor"`` or ``"F# m"``.

    Tonic letters A-G with any number of ``#``/``b`` (or the unicode
    accidentals) fold enharmonically onto the 12 pitch classes. Mode words
    are case-insensitive ``major``/``maj``/``minor``/``min``; a bare
    lowercase ``m`` after the separator also means minor.

    Raises UnparsableLabel with the offending string otherwise.
    """
    if not isinstance(s, str) or not s.strip():
        raise UnparsableLabel(f"empty key label {s!r}")
    m = _LABEL_RE.match(s)
    if m is None:
        raise UnparsableLabel(f"cannot parse key label {s!r}")
    letter, accidentals, mode_word = m.groups()
    tonic = _LETTER_TO_CLASS[letter.lower()]
    for acc in accidentals:
        tonic += 1 if acc in "#♯" else -1
    if mode_word == "m":
        mode = MINOR
    else:
        mode = _MODE_WORDS.get(mode_word.lower())
    if mode is None:
        raise UnparsableLabel(f"unknown mode {mode_word!r} in key label {s!r}")
    return KeyLabel(tonic % 12, mode)
