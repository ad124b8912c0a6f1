"""
Exception types raised by flow_rbm.

Shape and range violations on plain arguments raise ``ValueError`` directly; the
classes here cover failures that callers commonly want to tell apart.
"""


class FlowRBMError(Exception):
    """Base class for flow_rbm failures."""


class ImageFormatError(FlowRBMError, ValueError):
    """Malformed image, IDX, flow-text or manifest content.

    The message names the offending field and, when known, the file.
    """

    def __init__(self, field: str, detail: str = "", path: str | None = None):
        self.field = field
        self.path = path
        message = field if not detail else f"{field}: {detail}"
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class ModelFormatError(ImageFormatError):
    """Malformed GRBM1 model file."""


class TrainingDivergedError(FlowRBMError, RuntimeError):
    """A parameter block received a non-finite gradient or value.

    ``quantity`` is ``"gradient"`` or ``"value"``.
    """

    def __init__(self, block: str, epoch: int | None = None, quantity: str = "gradient"):
        self.block = block
        self.epoch = epoch
        self.quantity = quantity
        where = f" in epoch {epoch}" if epoch is not None else ""
        super().__init__(f"non-finite {quantity} for parameter block '{block}'{where}")


class EmptyEvidenceError(FlowRBMError, ValueError):
    """Motion estimation over a flow field without active pixels."""

    def __init__(self, message: str = "empty evidence"):
        super().__init__(message)


class NoGlobalMotionError(FlowRBMError, ValueError):
    """Segmentation requested while the global motion is Unknown."""

    def __init__(self, message: str = "no global motion"):
        super().__init__(message)
