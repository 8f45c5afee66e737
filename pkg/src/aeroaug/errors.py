"""Exception types raised across the pipeline.

Every error carries enough context (file, line, id) to act on without a
debugger. Augmentation-budget exhaustion is deliberately NOT an exception:
it is a partial result reported through ``AugmentationStats``.
"""


class AeroaugError(Exception):
    """Base class for all errors raised by this package."""


# --- dataset loading / persistence ---------------------------------------

class MissingAnnotation(AeroaugError):
    def __init__(self, image_file):
        super().__init__(f"no annotation file found for image {image_file!r}")
        self.image_file = image_file


class MalformedAnnotation(AeroaugError):
    def __init__(self, file, line_no, detail):
        super().__init__(f"{file}:{line_no}: malformed annotation: {detail}")
        self.file = file
        self.line_no = line_no


class UnreadableImage(AeroaugError):
    def __init__(self, file, detail=""):
        super().__init__(f"cannot read image {file!r}: {detail}")
        self.file = file


class OutOfBoundsBox(AeroaugError):
    def __init__(self, file, line_no, detail):
        super().__init__(f"{file}:{line_no}: box outside image bounds: {detail}")
        self.file = file
        self.line_no = line_no


class IoFailure(AeroaugError):
    def __init__(self, path, detail=""):
        super().__init__(f"I/O failure at {path}: {detail}")
        self.path = path


class InvalidSplit(AeroaugError):
    def __init__(self, n_train, n_total):
        super().__init__(
            f"n_train={n_train} must satisfy 0 < n_train < {n_total}")
        self.n_train = n_train


# --- patch geometry --------------------------------------------------------

class InstanceTooLarge(AeroaugError):
    pass


class ImageTooSmall(AeroaugError):
    pass


class OddPatchSize(AeroaugError):
    pass


class GeometryMismatch(AeroaugError):
    pass


# --- metrics ----------------------------------------------------------------

class ZeroGroundTruth(AeroaugError):
    pass


class UnknownImageId(AeroaugError):
    def __init__(self, image_id):
        super().__init__(f"predictions reference unknown image id {image_id!r}")
        self.image_id = image_id


class EmptyDataset(AeroaugError):
    pass


# --- backends ----------------------------------------------------------------

class BackendError(AeroaugError):
    """Base for all backend (built-in or external process) failures."""


class SpawnFailure(BackendError):
    pass


class HandshakeMismatch(BackendError):
    pass


class BackendCrashed(BackendError):
    pass


class ResponseTimeout(BackendError):
    pass


class BackendFailure(BackendError):
    """An ``error`` reply or protocol violation from a running backend."""
