"""Audio frontend: decoding, constant-Q transform, segment pairs, crops, PCP.

The CQT covers 99 log-frequency bins at 12 bins per octave, bin p centered
at 27.5 * 2**(p/12) Hz (bin 0 = A0, bin 98 ~ 8.37 kHz). Pitch class of a
bin is its index mod 12 with class 0 = A. Transposition crops keep 84 of
the 99 rows; the 84-row window starts at input row (15 - c), so c = 15 is
the identity placement (lowest 84 bins) and raising c by one shifts
content one bin up on the fixed output axis.

Everything here is pure and safe to call from parallel workers.
"""

from __future__ import annotations

import hashlib
import wave
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse
from scipy.signal import resample_poly

from .errors import (
    EmptyAudio,
    InvalidTransposition,
    ShapeMismatch,
    TooShort,
    UnreadableFile,
    UnsupportedCodec,
)

SAMPLE_RATE = 22050
HOP_LENGTH = 4190  # samples, ~190 ms at 22.05 kHz
N_BINS = 99
BINS_PER_OCTAVE = 12
FMIN = 27.5  # Hz, A0
N_CROP_BINS = 84  # 7 octaves survive the transposition crop
CROP_MAX = 15
SEGMENT_SECONDS = 15.0
FRAME_RATE = SAMPLE_RATE / HOP_LENGTH
SEGMENT_FRAMES = int(round(SEGMENT_SECONDS * FRAME_RATE))  # 79

#: Minimum training-mode duration: room for two disjoint 15 s segments.
MIN_TRAIN_SECONDS = 31.0
MIN_INFER_SECONDS = 15.0

#: Magnitude compression for model inputs: log(1 + GAMMA * m).
COMPRESSION_GAMMA = 1000.0


@dataclass
class Waveform:
    """Mono audio samples at a known rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float32).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class CqtMatrix:
    """Full-band CQT magnitudes, shape (99, T)."""

    magnitudes: np.ndarray
    frame_rate: float = FRAME_RATE
    bin0_pitch_class: int = 0
    bins_per_octave: int = BINS_PER_OCTAVE

    def __post_init__(self) -> None:
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float32)
        if self.magnitudes.ndim != 2 or self.magnitudes.shape[0] != N_BINS:
            raise ShapeMismatch(
                f"CqtMatrix needs exactly {N_BINS} rows, got {self.magnitudes.shape}"
            )

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[1]


@dataclass
class CqtSegment:
    """One 15 s excerpt of a CqtMatrix, shape (99, tau)."""

    magnitudes: np.ndarray
    frame_rate: float = FRAME_RATE

    def __post_init__(self) -> None:
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float32)
        if self.magnitudes.ndim != 2 or self.magnitudes.shape[0] != N_BINS:
            raise ShapeMismatch(
                f"CqtSegment needs exactly {N_BINS} rows, got {self.magnitudes.shape}"
            )


@dataclass
class CroppedCqt:
    """84-row transposition crop of a segment."""

    magnitudes: np.ndarray
    transposition: int = CROP_MAX

    def __post_init__(self) -> None:
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float32)
        if self.magnitudes.ndim != 2 or self.magnitudes.shape[0] != N_CROP_BINS:
            raise ShapeMismatch(
                f"CroppedCqt needs exactly {N_CROP_BINS} rows, got {self.magnitudes.shape}"
            )


# ---------------------------------------------------------------------------
# Decoding


def _read_wav(path: Path) -> tuple[np.ndarray, int]:
    import scipy.io.wavfile

    try:
        rate, data = scipy.io.wavfile.read(path)
    except Exception as exc:
        raise UnreadableFile(f"cannot decode WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        data = data.astype(np.float32) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float32) / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(np.float32) - 128.0) / 128.0
    else:
        data = data.astype(np.float32)
    return data, rate


def _read_via_soundfile(path: Path) -> tuple[np.ndarray, int]:
    try:
        import soundfile
    except ImportError as exc:
        raise UnsupportedCodec(
            f"decoding {path.suffix} requires the optional 'soundfile' backend "
            "(pip install skey[audio])"
        ) from exc
    try:
        data, rate = soundfile.read(path, dtype="float32", always_2d=False)
    except Exception as exc:
        raise UnreadableFile(f"cannot decode {path}: {exc}") from exc
    return data, rate


def load_audio(
    path: str | Path,
    target_rate: float = SAMPLE_RATE,
    min_duration: float | None = None,
) -> Waveform:
    """Decode an audio file to a mono Waveform at target_rate.

    WAV is decoded natively; FLAC/MP3 go through the optional soundfile
    backend. Multi-channel input is downmixed by channel mean. When
    min_duration is given, shorter audio raises EmptyAudio (training needs
    31 s for two disjoint segments, inference 15 s).
    """
    path = Path(path)
    if not path.is_file():
        raise UnreadableFile(f"no such file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".wav":
        data, rate = _read_wav(path)
    elif suffix in (".flac", ".mp3", ".ogg"):
        data, rate = _read_via_soundfile(path)
    else:
        raise UnsupportedCodec(f"unsupported audio format {suffix!r} for {path}")

    if data.ndim > 1:
        data = data.mean(axis=1)
    data = np.asarray(data, dtype=np.float32)
    if not np.all(np.isfinite(data)):
        raise UnreadableFile(f"non-finite samples in {path}")

    if rate != target_rate:
        g = np.gcd(int(rate), int(target_rate))
        data = resample_poly(data, int(target_rate) // g, int(rate) // g).astype(
            np.float32
        )
    wav = Waveform(data, target_rate)
    if min_duration is not None and wav.duration < min_duration:
        raise EmptyAudio(
            f"{path} is {wav.duration:.2f} s, below the required {min_duration:g} s"
        )
    return wav


def save_wav(path: str | Path, wav: Waveform) -> None:
    """Write a mono 16-bit PCM WAV file."""
    samples = np.clip(wav.samples, -1.0, 1.0)
    pcm = (samples * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(int(wav.sample_rate))
        fh.writeframes(pcm.tobytes())


# ---------------------------------------------------------------------------
# Constant-Q transform

Q_FACTOR = 1.0 / (2.0 ** (1.0 / BINS_PER_OCTAVE) - 1.0)


def cqt_bin_frequency(p: int | np.ndarray) -> np.ndarray:
    """Center frequency of CQT bin p (bin 0 = 27.5 Hz)."""
    return FMIN * 2.0 ** (np.asarray(p) / BINS_PER_OCTAVE)


@lru_cache(maxsize=4)
def _cqt_kernel(sample_rate: float) -> tuple[scipy.sparse.csr_matrix, int]:
    """Sparse spectral-domain CQT kernel for a given sample rate.

    Each row holds the conjugated FFT of a Hann-windowed complex exponential
    at that bin's center frequency, normalized so a unit-amplitude sinusoid
    at the bin center responds with magnitude ~1. Rows are thresholded and
    stored sparse so the per-frame transform is one rFFT plus a sparse
    matmul.
    """
    freqs = cqt_bin_frequency(np.arange(N_BINS))
    lengths = np.ceil(Q_FACTOR * sample_rate / freqs).astype(int)
    n_fft = int(2 ** np.ceil(np.log2(lengths.max())))
    n_rfft = n_fft // 2 + 1
    kernel = np.zeros((N_BINS, n_rfft), dtype=np.complex64)
    for p in range(N_BINS):
        n_k = lengths[p]
        window = np.hanning(n_k)
        phases = np.exp(2j * np.pi * freqs[p] * np.arange(n_k) / sample_rate)
        time_kernel = np.zeros(n_fft, dtype=np.complex128)
        start = (n_fft - n_k) // 2
        time_kernel[start : start + n_k] = window * phases * (2.0 / window.sum())
        row = np.conj(np.fft.fft(time_kernel))[:n_rfft] / n_fft
        mags = np.abs(row)
        row[mags < 1e-3 * mags.max()] = 0.0
        kernel[p] = row
    return scipy.sparse.csr_matrix(kernel), n_fft


def compute_cqt(wav: Waveform) -> CqtMatrix:
    """Constant-Q magnitude transform of a waveform, shape (99, T).

    Frames are centered every HOP_LENGTH-equivalent samples (190 ms at the
    reference rate); the waveform is zero-padded at both ends.
    """
    samples = wav.samples
    if len(samples) == 0:
        raise TooShort("waveform has no samples")
    hop = int(round(wav.sample_rate * HOP_LENGTH / SAMPLE_RATE))
    kernel, n_fft = _cqt_kernel(wav.sample_rate)
    n_frames = 1 + (len(samples) - 1) // hop
    padded = np.zeros(len(samples) + n_fft, dtype=np.float32)
    padded[n_fft // 2 : n_fft // 2 + len(samples)] = samples
    frames = np.lib.stride_tricks.sliding_window_view(padded, n_fft)[::hop][:n_frames]
    spectra = np.fft.rfft(frames, axis=1)
    mags = np.abs(kernel @ spectra.T).astype(np.float32)
    return CqtMatrix(mags, frame_rate=wav.sample_rate / hop)


def compress_magnitudes(mags: np.ndarray) -> np.ndarray:
    """log(1 + gamma*m) compression applied to model inputs (not to PCPs)."""
    return np.log1p(COMPRESSION_GAMMA * mags, dtype=np.float32)


# ---------------------------------------------------------------------------
# Segments, crops, PCP


def segment_frames(frame_rate: float = FRAME_RATE) -> int:
    return int(round(SEGMENT_SECONDS * frame_rate))


def extract_segment_pair(
    cqt: CqtMatrix, rng: np.random.Generator
) -> tuple[CqtSegment, CqtSegment]:
    """Draw two disjoint 15 s segments, uniformly among disjoint placements.

    When the track admits exactly one placement (T == 2*tau) the split is
    the deterministic back-to-back one. Raises TooShort below 30 s of
    frames.
    """
    tau = segment_frames(cqt.frame_rate)
    n = cqt.n_frames
    if n < 2 * tau:
        raise TooShort(
            f"need {2 * tau} frames for two disjoint segments, have {n}"
        )
    slack = n - 2 * tau
    if slack == 0:
        a, b = 0, tau
    else:
        # Rejection sampling keeps the placement exactly uniform over the
        # set of disjoint ordered pairs; acceptance is cheap at these sizes.
        while True:
            a = int(rng.integers(0, n - tau + 1))
            b = int(rng.integers(0, n - tau + 1))
            if abs(a - b) >= tau:
                break
    seg_a = CqtSegment(cqt.magnitudes[:, a : a + tau], cqt.frame_rate)
    seg_b = CqtSegment(cqt.magnitudes[:, b : b + tau], cqt.frame_rate)
    return seg_a, seg_b


def consecutive_segments(cqt: CqtMatrix) -> list[CqtSegment]:
    """Non-overlapping 15 s windows covering a track, for inference."""
    tau = segment_frames(cqt.frame_rate)
    n = cqt.n_frames
    if n < tau:
        raise TooShort(f"need at least {tau} frames, have {n}")
    return [
        CqtSegment(cqt.magnitudes[:, s : s + tau], cqt.frame_rate)
        for s in range(0, n - tau + 1, tau)
    ]


def transpose_crop(seg: CqtSegment, c: int) -> CroppedCqt:
    """Keep 84 rows starting at input row (15 - c).

    c = 15 keeps the bottom 84 bins (identity placement used at inference),
    c = 0 the top 84; increasing c by k moves content k bins up on the
    fixed output axis, i.e. transposes it up by k semitones.
    """
    if not 0 <= c <= CROP_MAX:
        raise InvalidTransposition(f"transposition {c} outside [0, {CROP_MAX}]")
    start = CROP_MAX - c
    return CroppedCqt(seg.magnitudes[start : start + N_CROP_BINS], transposition=c)


def pitch_class_profile(a: CroppedCqt, b: CroppedCqt) -> np.ndarray:
    """Fold two crops across octaves, time and segments into a 12-vector.

    u[q] = 0.5 * sum_j sum_t (a[12j+q, t] + b[12j+q, t]). Index q is the
    pitch class on the cropped (transposed) axis; for identity crops
    (c = 15) index 0 is pitch class A of the original audio.
    """
    if a.magnitudes.shape != b.magnitudes.shape:
        raise ShapeMismatch(
            f"crop shapes differ: {a.magnitudes.shape} vs {b.magnitudes.shape}"
        )
    folded = a.magnitudes.reshape(7, 12, -1).sum(axis=(0, 2)) + b.magnitudes.reshape(
        7, 12, -1
    ).sum(axis=(0, 2))
    return (0.5 * folded).astype(np.float64)


# ---------------------------------------------------------------------------
# CQT cache

CQT_PARAM_STRING = (
    f"sr={SAMPLE_RATE};hop={HOP_LENGTH};bins={N_BINS};bpo={BINS_PER_OCTAVE};fmin={FMIN}"
)


def cqt_cache_key(audio_path: str | Path, extra: str = "") -> str:
    """Content hash of the audio file plus the CQT parameter string."""
    h = hashlib.sha256()
    with open(audio_path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    h.update(CQT_PARAM_STRING.encode())
    if extra:
        h.update(extra.encode())
    return h.hexdigest()[:32]


def save_cqt_cache(path: str | Path, cqt: CqtMatrix) -> None:
    np.savez_compressed(
        path,
        magnitudes=cqt.magnitudes.astype(np.float32),
        sample_rate=np.float64(SAMPLE_RATE),
        hop=np.int64(HOP_LENGTH),
        frame_rate=np.float64(cqt.frame_rate),
        fmin=np.float64(FMIN),
    )


def load_cqt_cache(path: str | Path) -> CqtMatrix:
    try:
        with np.load(path) as data:
            return CqtMatrix(data["magnitudes"], frame_rate=float(data["frame_rate"]))
    except (OSError, KeyError, ValueError) as exc:
        raise UnreadableFile(f"cannot read CQT cache {path}: {exc}") from exc
