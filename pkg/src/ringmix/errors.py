"""Exception types shared across the package."""


class RingmixError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(RingmixError):
    """Waveform lengths or sample rates do not match."""


class DegenerateSignalError(RingmixError):
    """A signal that must carry energy is identically zero (or not finite)."""


class UndefinedScaleError(RingmixError):
    """Projection scale undefined: the estimate is (near-)orthogonal to the reference."""


class DegenerateRingError(RingmixError):
    """Ring mixing needs K >= 3 so every source sees two distinct mixtures."""


class PairingError(RingmixError):
    """Conventional batches need an even source count."""


class InsufficientDataError(RingmixError):
    """The corpus cannot supply the requested number or length of sources."""


class CoverageError(RingmixError):
    """An estimate required by the pairing table is missing."""


class NoMinimumError(RingmixError):
    """A scanned curve is constant, so no minimum can be located."""


class ConfigError(RingmixError):
    """Bad experiment configuration: unknown key, missing value, or wrong type."""


class AudioFormatError(RingmixError):
    """WAV content this reader does not handle."""


class UnsupportedChannelsError(AudioFormatError):
    """Only mono files are supported; no silent downmixing."""


class UnsupportedFormatError(AudioFormatError):
    """Codec other than pcm16 / float32."""


class CorruptFileError(AudioFormatError):
    """Truncated or structurally invalid WAV file."""


class SampleRangeError(RingmixError):
    """Samples exceed the representable range of the requested encoding."""
