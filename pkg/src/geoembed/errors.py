"""Exception hierarchy shared across the package.

Every error carries a short machine-readable slug used by the CLI when
printing one-line failures.
"""


class GeoembedError(Exception):
    slug = "error"


class InvalidConfigError(GeoembedError):
    slug = "invalid-config"


class InvalidInputError(GeoembedError):
    slug = "invalid-input"


class InvalidStateError(GeoembedError):
    slug = "invalid-state"


class DegenerateInputError(GeoembedError):
    slug = "degenerate-input"


class TrainingDivergenceError(GeoembedError):
    slug = "training-divergence"


class EmptyRestrictionError(GeoembedError):
    slug = "empty-restriction"


class RejectedInputError(GeoembedError):
    slug = "rejected-input"


class FormatError(GeoembedError):
    slug = "format"


class CorruptionError(GeoembedError):
    slug = "corruption"
